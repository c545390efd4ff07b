//! Weighted-sum waveform design for several receivers.
//!
//! The variable stacks the real and imaginary coefficient parts,
//! `z = [s_bar (M x U), s_hat (M x U)]`. The cardinality cap is written as
//! `||row||_1 - KyFan_N(row) = 0` on the per-tone energies
//! `s_bar^2 + s_hat^2`, penalized with weight `mu`. The convex part
//! `sum_k theta_k Psi_k + mu sum_m KyFan_N` is linearized (CCCP), and each
//! step solves `max c^T z - mu ||z||^2` over the power ball and the sampled
//! breakdown limits. `mu` grows geometrically until the penalty vanishes.

mod random_search;

pub use random_search::{random_search, RandomSearchResult};

use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelResponse;
use crate::error::{Error, Result};
use crate::qcqp::{self, HalfspaceSystem, SolverOptions, SubproblemInstance};
use crate::quadrature::{exp_harmonics, QuadratureConfig};
use crate::rectenna::{breakdown_amplitude_limit, psi_rhs, Harvest, Psi, RectennaParams};
use crate::signals::{FrequencyGrid, MultisineWaveform};
use crate::single_er::{assemble_waveform, frequency_mrt, select_subcarriers, SubcarrierSelection};
use crate::trace::OptimizerTrace;

/// One multi-receiver design problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiErProblem {
    pub channels: ChannelResponse,
    pub weights: Vec<f64>,
    pub num_tones: usize,
    pub power_budget_w: f64,
    /// Breakdown-limit samples per period.
    pub saturation_samples: usize,
    pub enforce_saturation: bool,
    pub rectenna: RectennaParams,
    pub quadrature: QuadratureConfig,
}

impl MultiErProblem {
    /// Problem with the default sample count `16 (f0 / delta + U)` and a
    /// quadrature configuration sized for the grid.
    pub fn new(
        channels: ChannelResponse,
        weights: Vec<f64>,
        num_tones: usize,
        power_budget_w: f64,
        rectenna: RectennaParams,
    ) -> Result<Self> {
        let grid = *channels.grid();
        let p = Self {
            saturation_samples: default_saturation_samples(&grid),
            quadrature: QuadratureConfig::for_grid(&grid),
            channels,
            weights,
            num_tones,
            power_budget_w,
            enforce_saturation: true,
            rectenna,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.channels.grid()
    }

    pub fn num_receivers(&self) -> usize {
        self.channels.num_receivers()
    }

    pub fn num_antennas(&self) -> usize {
        self.channels.num_antennas()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.channels.num_subcarriers()
    }

    pub fn dim(&self) -> usize {
        2 * self.num_antennas() * self.num_subcarriers()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.num_receivers() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for K = {}",
                self.weights.len(),
                self.num_receivers()
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "weights must be non-negative".into(),
            ));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        if self.saturation_samples < 2 {
            return Err(Error::TooFewSamples {
                min: 2,
                got: self.saturation_samples,
            });
        }
        if self.num_tones == 0 || self.num_tones > self.num_subcarriers() {
            return Err(Error::InvalidParameter(format!(
                "N = {} must lie in 1..={}",
                self.num_tones,
                self.num_subcarriers()
            )));
        }
        if !(self.power_budget_w > 0.0 && self.power_budget_w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power budget must be positive, got {}",
                self.power_budget_w
            )));
        }
        self.rectenna.validate()?;
        self.quadrature.validate()
    }
}

/// `16 (f0 / delta + U)` samples per period: at least 16 per cycle of the
/// highest subcarrier.
pub fn default_saturation_samples(grid: &FrequencyGrid) -> usize {
    16 * (grid.base_cycles() as usize + grid.num_subcarriers())
}

/// Real and imaginary coefficient parts, each row-major `M x U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub num_antennas: usize,
    pub num_subcarriers: usize,
    pub sbar: Vec<f64>,
    pub shat: Vec<f64>,
}

impl CartesianPoint {
    pub fn zeros(num_antennas: usize, num_subcarriers: usize) -> Self {
        let n = num_antennas * num_subcarriers;
        Self {
            num_antennas,
            num_subcarriers,
            sbar: vec![0.0; n],
            shat: vec![0.0; n],
        }
    }

    pub fn from_waveform(w: &MultisineWaveform) -> Self {
        Self {
            num_antennas: w.num_antennas(),
            num_subcarriers: w.num_subcarriers(),
            sbar: w.coefficients().iter().map(|c| c.re).collect(),
            shat: w.coefficients().iter().map(|c| c.im).collect(),
        }
    }

    pub fn to_waveform(&self, grid: &FrequencyGrid) -> Result<MultisineWaveform> {
        MultisineWaveform::new(
            *grid,
            self.num_antennas,
            self.sbar
                .iter()
                .zip(&self.shat)
                .map(|(&re, &im)| Complex64::new(re, im))
                .collect(),
        )
    }

    /// `[s_bar, s_hat]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut z = self.sbar.clone();
        z.extend_from_slice(&self.shat);
        z
    }

    pub fn from_vec(num_antennas: usize, num_subcarriers: usize, z: &[f64]) -> Result<Self> {
        let n = num_antennas * num_subcarriers;
        if z.len() != 2 * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries, expected {}",
                z.len(),
                2 * n
            )));
        }
        Ok(Self {
            num_antennas,
            num_subcarriers,
            sbar: z[..n].to_vec(),
            shat: z[n..].to_vec(),
        })
    }

    pub fn total_power(&self) -> f64 {
        self.sbar.iter().chain(&self.shat).map(|v| v * v).sum()
    }

    /// Per-tone energies `s_bar^2 + s_hat^2` of antenna `m`.
    pub fn row_energy(&self, m: usize) -> Vec<f64> {
        let u = self.num_subcarriers;
        (m * u..(m + 1) * u)
            .map(|i| self.sbar[i] * self.sbar[i] + self.shat[i] * self.shat[i])
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            num_antennas: self.num_antennas,
            num_subcarriers: self.num_subcarriers,
            sbar: self.sbar.iter().map(|v| v * factor).collect(),
            shat: self.shat.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Indices of the `n` largest entries; ties go to the lower index.
fn top_indices(row: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    order.truncate(n);
    order
}

/// Sum of the `n` largest entries.
pub fn ky_fan_norm(row: &[f64], n: usize) -> f64 {
    top_indices(row, n).into_iter().map(|i| row[i]).sum()
}

/// `sum_m (||row_m||_1 - KyFan_N(row_m))`.
pub fn constraint_violation(pt: &CartesianPoint, n: usize) -> f64 {
    (0..pt.num_antennas)
        .map(|m| {
            let row = pt.row_energy(m);
            let l1: f64 = row.iter().sum();
            (l1 - ky_fan_norm(&row, n)).max(0.0)
        })
        .sum()
}

fn check_point(pt: &CartesianPoint, prob: &MultiErProblem) -> Result<()> {
    if pt.num_antennas != prob.num_antennas()
        || pt.num_subcarriers != prob.num_subcarriers()
        || pt.sbar.len() != pt.num_antennas * pt.num_subcarriers
        || pt.shat.len() != pt.sbar.len()
    {
        return Err(Error::DimensionMismatch(format!(
            "point is {}x{}, problem is {}x{}",
            pt.num_antennas,
            pt.num_subcarriers,
            prob.num_antennas(),
            prob.num_subcarriers()
        )));
    }
    Ok(())
}

/// `Psi_RHS` at every receiver.
pub fn receiver_psis(pt: &CartesianPoint, prob: &MultiErProblem) -> Result<Vec<Psi>> {
    check_point(pt, prob)?;
    let w = pt.to_waveform(prob.grid())?;
    (0..prob.num_receivers())
        .into_par_iter()
        .map(|k| {
            psi_rhs(
                &w.received_tones(&prob.channels, k)?,
                &prob.rectenna,
                &prob.quadrature,
            )
        })
        .collect()
}

fn ln_weighted_sum(weights: &[f64], psis: &[Psi]) -> f64 {
    let max = weights
        .iter()
        .zip(psis)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, p)| p.ln)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = weights
        .iter()
        .zip(psis)
        .map(|(w, p)| w * (p.ln - max).exp())
        .sum();
    max + sum.ln()
}

/// `ln sum_k theta_k Psi_k`.
pub fn ln_weighted_objective(pt: &CartesianPoint, prob: &MultiErProblem) -> Result<f64> {
    Ok(ln_weighted_sum(&prob.weights, &receiver_psis(pt, prob)?))
}

/// `sum_k theta_k Psi_k` (infinite if it exceeds the `f64` range).
pub fn weighted_objective(pt: &CartesianPoint, prob: &MultiErProblem) -> Result<f64> {
    Ok(ln_weighted_objective(pt, prob)?.exp())
}

/// Rows `a` with `a^T z = y_k(T q / Q)` for every receiver `k` and sample
/// `q`, bounded by `V_B / (2 sqrt(R_s))`.
pub fn saturation_system(prob: &MultiErProblem) -> HalfspaceSystem {
    let (m_count, u_count) = (prob.num_antennas(), prob.num_subcarriers());
    let n = m_count * u_count;
    let q_count = prob.saturation_samples;
    let bound = breakdown_amplitude_limit(&prob.rectenna);
    let grid = prob.grid();
    let mut h = HalfspaceSystem::new(2 * n);
    let mut row = vec![0.0; 2 * n];
    for k in 0..prob.num_receivers() {
        for q in 0..q_count {
            for u in 0..u_count {
                let cycles = (grid.harmonic(u) as u128 * q as u128 % q_count as u128) as f64;
                let rot = Complex64::from_polar(1.0, TAU * cycles / q_count as f64);
                for m in 0..m_count {
                    let g = prob.channels.get(k, m, u) * rot;
                    row[m * u_count + u] = SQRT_2 * g.re;
                    row[n + m * u_count + u] = -SQRT_2 * g.im;
                }
            }
            h.push(&row, bound).expect("row length matches");
        }
    }
    h
}

/// Largest received sample over `Q` samples, relative to the breakdown limit.
pub fn sampled_peak_ratio(
    pt: &CartesianPoint,
    prob: &MultiErProblem,
    samples: usize,
) -> Result<f64> {
    check_point(pt, prob)?;
    let w = pt.to_waveform(prob.grid())?;
    let bound = breakdown_amplitude_limit(&prob.rectenna);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..prob.num_receivers() {
        let y = w.received_tones(&prob.channels, k)?.sample(samples);
        worst = worst.max(y.into_iter().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(worst / bound)
}

/// Gradient of `exp(-ln_ref) sum_k theta_k Psi_k` plus the Ky Fan
/// subgradient `mu (2 s_bar, 2 s_hat)` on each row's `N` largest energies.
pub fn cccp_linearize(
    pt: &CartesianPoint,
    prob: &MultiErProblem,
    mu: f64,
    ln_ref: f64,
) -> Result<Vec<f64>> {
    check_point(pt, prob)?;
    let (m_count, u_count) = (prob.num_antennas(), prob.num_subcarriers());
    let n = m_count * u_count;
    let w = pt.to_waveform(prob.grid())?;
    let gain = prob.rectenna.exponent_gain();
    let kappa = SQRT_2 * gain;
    let harmonics = prob.grid().harmonics();
    let per_er: Vec<Vec<f64>> = (0..prob.num_receivers())
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let mut c = vec![0.0; 2 * n];
            let theta = prob.weights[k];
            if theta == 0.0 {
                return Ok(c);
            }
            let y = w.received_tones(&prob.channels, k)?;
            let r = exp_harmonics(
                |s| y.sample(s).into_iter().map(|v| gain * v).collect(),
                &harmonics,
                &prob.quadrature,
            )?;
            let scale = theta * kappa * (r.ln_scale - ln_ref).exp();
            for m in 0..m_count {
                for u in 0..u_count {
                    let hc = prob.channels.get(k, m, u) * r.harmonics[u];
                    c[m * u_count + u] = scale * hc.re;
                    c[n + m * u_count + u] = -scale * hc.im;
                }
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let mut c = vec![0.0; 2 * n];
    for part in per_er {
        for (a, b) in c.iter_mut().zip(part) {
            *a += b;
        }
    }
    if mu > 0.0 {
        for m in 0..m_count {
            for u in top_indices(&pt.row_energy(m), prob.num_tones) {
                let i = m * u_count + u;
                c[i] += 2.0 * mu * pt.sbar[i];
                c[n + i] += 2.0 * mu * pt.shat[i];
            }
        }
    }
    Ok(c)
}

/// `exp(-ln_ref) sum_k theta_k Psi_k - mu * violation`.
pub fn penalized_objective(
    pt: &CartesianPoint,
    prob: &MultiErProblem,
    mu: f64,
    ln_ref: f64,
) -> Result<f64> {
    let ln = ln_weighted_objective(pt, prob)?;
    Ok((ln - ln_ref).exp() - mu * constraint_violation(pt, prob.num_tones))
}

/// Frequency-MRT with phase compensation toward the receiver with the
/// largest `theta_k ||b_k||` over its `N` strongest tones, scaled down so
/// every sampled peak meets the breakdown limit.
pub fn initial_point(prob: &MultiErProblem) -> Result<CartesianPoint> {
    prob.validate()?;
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 0..prob.num_receivers() {
        let b = prob.channels.effective_gain(k)?;
        let sel = select_subcarriers(&b, prob.num_tones);
        let score = prob.weights[k] * sel.masked_gains.iter().map(|v| v * v).sum::<f64>().sqrt();
        if score > best.0 {
            best = (score, k);
        }
    }
    initial_point_toward(prob, best.1)
}

/// Same construction aimed at receiver `k`.
pub fn initial_point_toward(prob: &MultiErProblem, k: usize) -> Result<CartesianPoint> {
    prob.validate()?;
    let gains = prob.channels.effective_gain(k)?;
    point_on_support(prob, k, select_subcarriers(&gains, prob.num_tones).selected)
}

/// `N` tones at stride `U / N`, at the offset with the largest gain energy.
/// Ties go to the lower offset.
pub fn equally_spaced_support(gains: &[f64], n: usize) -> Vec<usize> {
    let n = n.min(gains.len());
    if n == 0 {
        return Vec::new();
    }
    let stride = gains.len() / n;
    let span = stride * (n - 1);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for offset in 0..gains.len() - span {
        let support: Vec<usize> = (0..n).map(|i| offset + i * stride).collect();
        let energy: f64 = support.iter().map(|&u| gains[u] * gains[u]).sum();
        if energy > best.0 {
            best = (energy, support);
        }
    }
    best.1
}

/// Frequency-MRT with phase compensation toward receiver `k` on `support`.
fn point_on_support(
    prob: &MultiErProblem,
    k: usize,
    support: Vec<usize>,
) -> Result<CartesianPoint> {
    let channel = prob.channels.receiver(k)?;
    let gains = channel.effective_gain();
    let mut masked_gains = vec![0.0; gains.len()];
    for &u in &support {
        masked_gains[u] = gains[u];
    }
    let sel = SubcarrierSelection {
        n: support.len(),
        selected: support,
        masked_gains,
    };
    let alloc = frequency_mrt(&sel, prob.power_budget_w)?;
    let pt = CartesianPoint::from_waveform(&assemble_waveform(&alloc, &channel, &sel)?);
    Ok(fit_saturation(&pt, prob))
}

/// Starts tried by [`dcp_multistart`]: for every receiver, its `N` strongest
/// tones, then its best equally spaced set when that differs.
pub fn start_points(prob: &MultiErProblem) -> Result<Vec<CartesianPoint>> {
    prob.validate()?;
    let mut out = Vec::new();
    for k in 0..prob.num_receivers() {
        let gains = prob.channels.effective_gain(k)?;
        let top = select_subcarriers(&gains, prob.num_tones).selected;
        let spaced = equally_spaced_support(&gains, prob.num_tones);
        out.push(point_on_support(prob, k, top.clone())?);
        if spaced != top {
            out.push(point_on_support(prob, k, spaced)?);
        }
    }
    Ok(out)
}

/// Scales `pt` down until `max a^T z <= d` over the sampled limits.
fn fit_saturation(pt: &CartesianPoint, prob: &MultiErProblem) -> CartesianPoint {
    if !prob.enforce_saturation {
        return pt.clone();
    }
    let h = saturation_system(prob);
    let z = pt.to_vec();
    let peak = (0..h.len())
        .map(|i| h.evaluate(i, &z))
        .fold(f64::NEG_INFINITY, f64::max);
    let bound = breakdown_amplitude_limit(&prob.rectenna);
    if peak > bound {
        pt.scaled(bound / peak * (1.0 - 1e-12))
    } else {
        pt.clone()
    }
}

/// Keeps each row's `N` largest energies and zeroes the rest.
pub fn truncate_to_cardinality(pt: &CartesianPoint, n: usize) -> CartesianPoint {
    let mut out = CartesianPoint::zeros(pt.num_antennas, pt.num_subcarriers);
    let u_count = pt.num_subcarriers;
    for m in 0..pt.num_antennas {
        for u in top_indices(&pt.row_energy(m), n) {
            let i = m * u_count + u;
            out.sbar[i] = pt.sbar[i];
            out.shat[i] = pt.shat[i];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcpConfig {
    /// `None`: starting objective over `P_T`.
    pub mu0: Option<f64>,
    pub rho: f64,
    pub eps1: f64,
    /// `None`: `1e-6 P_T`.
    pub eps2: Option<f64>,
    pub max_inner: usize,
    pub max_outer: usize,
    pub qcqp_tol: f64,
}

impl Default for DcpConfig {
    fn default() -> Self {
        Self {
            mu0: None,
            rho: 5.0,
            eps1: 1e-4,
            eps2: None,
            max_inner: 200,
            max_outer: 60,
            qcqp_tol: 1e-8,
        }
    }
}

impl DcpConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "mu0 must be positive, got {mu0}"
                )));
            }
        }
        if !(self.rho > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must exceed 1, got {}",
                self.rho
            )));
        }
        if !(self.eps1 > 0.0) || self.eps2.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::InvalidParameter(
                "eps1 and eps2 must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One outer (penalty) iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub outer: usize,
    pub mu: f64,
    /// `ln sum_k theta_k Psi_k` at the end of the inner loop.
    pub objective_ln: f64,
    pub violation: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErReport {
    pub psi_ln: f64,
    #[serde(rename = "v_out_V")]
    pub v_out_v: f64,
    #[serde(rename = "p_out_W")]
    pub p_out_w: f64,
}

impl ErReport {
    fn from_harvest(h: &Harvest) -> Self {
        Self {
            psi_ln: h.psi.ln,
            v_out_v: h.v_out_v,
            p_out_w: h.p_out_w,
        }
    }
}

/// Exact per-receiver figures and weighted totals of a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub per_er: Vec<ErReport>,
    pub weighted_psi_ln: f64,
    #[serde(rename = "weighted_p_out_W")]
    pub weighted_p_out_w: f64,
}

pub fn evaluate(pt: &CartesianPoint, prob: &MultiErProblem) -> Result<Evaluation> {
    let psis = receiver_psis(pt, prob)?;
    let per_er = psis
        .iter()
        .map(|p| Harvest::from_psi(*p, &prob.rectenna).map(|h| ErReport::from_harvest(&h)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation {
        weighted_psi_ln: ln_weighted_sum(&prob.weights, &psis),
        weighted_p_out_w: per_er
            .iter()
            .zip(&prob.weights)
            .map(|(r, w)| w * r.p_out_w)
            .sum(),
        per_er,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcpResult {
    pub point: CartesianPoint,
    #[serde(skip)]
    pub waveform: Option<MultisineWaveform>,
    pub evaluation: Evaluation,
    /// Penalty term before the final truncation.
    pub violation: f64,
    pub violation_after_truncation: f64,
    /// Largest sampled peak over the breakdown limit.
    pub peak_ratio: f64,
    /// Outer iteration whose truncated point is returned; `None` for the start.
    pub selected_outer: Option<usize>,
    pub outer: Vec<OuterRecord>,
    /// Penalized objective (normalized so the start is 1) per inner step.
    pub inner: OptimizerTrace,
    pub converged: bool,
}

impl DcpResult {
    /// `outer,mu,objective_ln,violation,inner_iterations` rows with a header.
    pub fn outer_csv(&self) -> String {
        let mut out = String::from("outer,mu,objective_ln,violation,inner_iterations\n");
        for r in &self.outer {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{}\n",
                r.outer, r.mu, r.objective_ln, r.violation, r.inner_iterations
            ));
        }
        out
    }
}

/// Penalty + CCCP loop. Each outer iterate is truncated to its `N` strongest
/// tones per antenna and scaled into the breakdown limits; the best of these
/// and the start is returned.
pub fn dcp_optimize(
    prob: &MultiErProblem,
    cfg: &DcpConfig,
    init: &CartesianPoint,
) -> Result<DcpResult> {
    prob.validate()?;
    cfg.validate()?;
    check_point(init, prob)?;
    let (m_count, u_count) = (prob.num_antennas(), prob.num_subcarriers());
    let n = prob.num_tones;
    let halfspaces = if prob.enforce_saturation {
        saturation_system(prob)
    } else {
        HalfspaceSystem::new(prob.dim())
    };
    let eps2 = cfg.eps2.unwrap_or(1e-6 * prob.power_budget_w);
    let solver = SolverOptions {
        tol: cfg.qcqp_tol,
        ..SolverOptions::default()
    };

    let mut pt = init.clone();
    let ln_ref = ln_weighted_objective(&pt, prob)?;
    let mut mu = cfg.mu0.unwrap_or(1.0 / prob.power_budget_w);
    let sparse = |p: &CartesianPoint| fit_saturation(&truncate_to_cardinality(p, n), prob);
    let mut best = sparse(&pt);
    let mut best_ln = ln_weighted_objective(&best, prob)?;
    let mut selected_outer = None;
    let mut inner_trace = OptimizerTrace::new();
    let mut outer = Vec::new();
    let mut converged = false;

    for outer_iter in 0..cfg.max_outer {
        let mut f_prev = penalized_objective(&pt, prob, mu, ln_ref)?;
        inner_trace.push(f_prev, mu, constraint_violation(&pt, n));
        let mut inner_iterations = 0;
        for _ in 0..cfg.max_inner {
            let c = cccp_linearize(&pt, prob, mu, ln_ref)?;
            let inst = SubproblemInstance {
                c,
                mu,
                ball_radius_sq: prob.power_budget_w,
                halfspaces: halfspaces.clone(),
            };
            let rep = qcqp::solve(&inst, &solver)?;
            let next = CartesianPoint::from_vec(m_count, u_count, &rep.z)?;
            let f_next = penalized_objective(&next, prob, mu, ln_ref)?;
            inner_iterations += 1;
            let change = (f_next - f_prev).abs() / f_prev.abs().max(1e-300);
            inner_trace.push(f_next, mu, constraint_violation(&next, n));
            pt = next;
            f_prev = f_next;
            if change <= cfg.eps1 {
                break;
            }
        }
        let violation = constraint_violation(&pt, n);
        outer.push(OuterRecord {
            outer: outer_iter,
            mu,
            objective_ln: ln_weighted_objective(&pt, prob)?,
            violation,
            inner_iterations,
        });
        let candidate = sparse(&pt);
        let candidate_ln = ln_weighted_objective(&candidate, prob)?;
        if candidate_ln > best_ln {
            best = candidate;
            best_ln = candidate_ln;
            selected_outer = Some(outer_iter);
        }
        log::debug!("dcp outer {outer_iter}: mu = {mu:e}, violation = {violation:e}");
        if violation <= eps2 {
            converged = true;
            break;
        }
        mu *= cfg.rho;
    }
    if !converged {
        log::warn!(
            "penalty loop stopped after {} outer iterations",
            cfg.max_outer
        );
    }

    let violation = constraint_violation(&pt, n);
    let truncated = best;
    let evaluation = evaluate(&truncated, prob)?;
    let peak_ratio = sampled_peak_ratio(&truncated, prob, prob.saturation_samples)?;
    Ok(DcpResult {
        waveform: Some(truncated.to_waveform(prob.grid())?),
        violation_after_truncation: constraint_violation(&truncated, n),
        point: truncated,
        evaluation,
        violation,
        peak_ratio,
        selected_outer,
        outer,
        inner: inner_trace,
        converged,
    })
}

/// Runs [`dcp_optimize`] from every [`start_points`] entry and keeps the
/// largest weighted objective; ties go to the earlier start.
pub fn dcp_multistart(prob: &MultiErProblem, cfg: &DcpConfig) -> Result<DcpResult> {
    let mut best: Option<DcpResult> = None;
    for init in start_points(prob)? {
        let r = dcp_optimize(prob, cfg, &init)?;
        if best
            .as_ref()
            .is_none_or(|b| r.evaluation.weighted_psi_ln > b.evaluation.weighted_psi_ln)
        {
            best = Some(r);
        }
    }
    best.ok_or(Error::InvalidParameter("no receivers".into()))
}
