//! Waveform design for a single receiver.
//!
//! With channel phase compensation every tone peaks at `t = 0` and the
//! received signal is `y(t) = sqrt(2) sum_u b_u x_u cos(w_u t)`, where `b_u` is
//! the effective gain over the antennas and `x_u^2` the power on tone `u`. The
//! chain is: pick the `N` strongest tones, allocate power over them (frequency
//! MRT or SCP-QCLP), then split each tone over the antennas by spatial MRT.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::ErChannel;
use crate::error::{Error, Result};
use crate::quadrature::{exp_harmonics, QuadratureConfig};
use crate::rectenna::{psi_rhs, Harvest, Psi, RectennaParams};
use crate::signals::{FrequencyGrid, MultisineWaveform, Multitone};
use crate::trace::OptimizerTrace;

/// Tones kept for transmission and the gains masked to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcarrierSelection {
    /// Zero-based subcarrier indices in ascending order.
    pub selected: Vec<usize>,
    #[serde(rename = "N")]
    pub n: usize,
    pub masked_gains: Vec<f64>,
}

/// Per-tone amplitudes `x_u = sqrt(p_u)` summed over antennas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub x: Vec<f64>,
    #[serde(rename = "P_T_W")]
    pub power_budget_w: f64,
}

impl PowerAllocation {
    pub fn power(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum()
    }
}

/// Amplitudes `s_{m,u} = sqrt(p_u) h_{m,u} / b_u`, row-major `M x U`.
pub fn spatial_mrt(magnitudes: &[f64], num_antennas: usize, powers: &[f64]) -> Result<Vec<f64>> {
    let u_count = powers.len();
    if magnitudes.len() != num_antennas * u_count {
        return Err(Error::DimensionMismatch(format!(
            "{} magnitudes for M={num_antennas}, U={u_count}",
            magnitudes.len()
        )));
    }
    let mut s = vec![0.0; magnitudes.len()];
    for (u, &p) in powers.iter().enumerate() {
        if !(p >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "negative power {p} on subcarrier {u}"
            )));
        }
        if p == 0.0 {
            continue;
        }
        let b = (0..num_antennas)
            .map(|m| magnitudes[m * u_count + u].powi(2))
            .sum::<f64>()
            .sqrt();
        if b == 0.0 {
            return Err(Error::CannotBeamform { subcarrier: u });
        }
        for m in 0..num_antennas {
            s[m * u_count + u] = p.sqrt() * magnitudes[m * u_count + u] / b;
        }
    }
    Ok(s)
}

/// Indices of the `n` largest gains; ties go to the lower index and zero
/// gains are never selected.
pub fn select_subcarriers(gains: &[f64], n: usize) -> SubcarrierSelection {
    let mut order: Vec<usize> = (0..gains.len()).filter(|&u| gains[u] > 0.0).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    order.truncate(n.min(gains.len()));
    order.sort_unstable();
    let mut masked_gains = vec![0.0; gains.len()];
    for &u in &order {
        masked_gains[u] = gains[u];
    }
    SubcarrierSelection {
        selected: order,
        n,
        masked_gains,
    }
}

/// Peak-value surrogate `sum_u b_u x_u` (the exponent of the integrand at `t = 0`, up to scale).
pub fn surrogate_objective(masked_gains: &[f64], x: &[f64]) -> f64 {
    masked_gains.iter().zip(x).map(|(b, x)| b * x).sum()
}

/// `x_u = sqrt(P_T) b_u / ||b||` on the selected tones.
pub fn frequency_mrt(
    selection: &SubcarrierSelection,
    power_budget_w: f64,
) -> Result<PowerAllocation> {
    let norm = selection
        .masked_gains
        .iter()
        .map(|b| b * b)
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroGains);
    }
    let scale = power_budget_w.sqrt() / norm;
    Ok(PowerAllocation {
        x: selection.masked_gains.iter().map(|b| scale * b).collect(),
        power_budget_w,
    })
}

/// Equal power over the selected tones, `x_u = sqrt(P_T / N)`.
pub fn equal_allocation(selection: &SubcarrierSelection, power_budget_w: f64) -> PowerAllocation {
    let count = selection.selected.len().max(1) as f64;
    let mut x = vec![0.0; selection.masked_gains.len()];
    for &u in &selection.selected {
        x[u] = (power_budget_w / count).sqrt();
    }
    PowerAllocation { x, power_budget_w }
}

/// Received tone sum `sqrt(2) sum_u b_u x_u cos(w_u t)` of an allocation.
pub fn allocation_signal(
    grid: &FrequencyGrid,
    masked_gains: &[f64],
    x: &[f64],
) -> Result<Multitone> {
    Multitone::on_grid(
        grid,
        masked_gains
            .iter()
            .zip(x)
            .map(|(b, x)| Complex64::new(SQRT_2 * b * x, 0.0))
            .collect(),
    )
}

/// Exact `Psi_RHS` of an allocation.
pub fn allocation_psi(
    grid: &FrequencyGrid,
    selection: &SubcarrierSelection,
    allocation: &PowerAllocation,
    rectenna: &RectennaParams,
    quadrature: &QuadratureConfig,
) -> Result<Psi> {
    psi_rhs(
        &allocation_signal(grid, &selection.masked_gains, &allocation.x)?,
        rectenna,
        quadrature,
    )
}

/// Linearization of `Psi_RHS(x)`: `ln beta_0` and the gradient `beta`
/// scaled by `exp(-ln_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub ln_beta0: f64,
    pub ln_scale: f64,
    pub beta: Vec<f64>,
}

impl Linearization {
    /// Gradient in natural units (may overflow).
    pub fn beta_unscaled(&self) -> Vec<f64> {
        let s = self.ln_scale.exp();
        self.beta.iter().map(|b| b * s).collect()
    }
}

/// `beta_0 = mean z(t)` and `beta_u = kappa b_u mean(cos(w_u t) z(t))` with
/// `z = exp(kappa sum_u b_u x_u cos(w_u t))` and `kappa = sqrt(2 R_s) / (eta V0)`.
pub fn linearize(
    grid: &FrequencyGrid,
    masked_gains: &[f64],
    x: &[f64],
    rectenna: &RectennaParams,
    quadrature: &QuadratureConfig,
) -> Result<Linearization> {
    let signal = allocation_signal(grid, masked_gains, x)?;
    let gain = rectenna.exponent_gain();
    let r = exp_harmonics(
        |n| signal.sample(n).into_iter().map(|v| gain * v).collect(),
        &grid.harmonics(),
        quadrature,
    )?;
    let kappa = SQRT_2 * gain;
    Ok(Linearization {
        ln_beta0: r.ln_mean(),
        ln_scale: r.ln_scale,
        beta: masked_gains
            .iter()
            .zip(&r.harmonics)
            .map(|(b, c)| kappa * b * c.re)
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScpConfig {
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for ScpConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            max_iter: 100,
        }
    }
}

/// History of an SCP-QCLP run. Index 0 is the initial point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScpTrace {
    /// `ln beta_0` at each iterate.
    pub ln_beta0: Vec<f64>,
    /// Relative change of `beta_0` per iteration.
    pub delta: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub iterations: usize,
    pub fallback_used: bool,
    pub converged: bool,
}

impl ScpTrace {
    pub fn to_optimizer_trace(&self) -> OptimizerTrace {
        let mut t = OptimizerTrace::new();
        for (i, ln) in self.ln_beta0.iter().enumerate() {
            let step = if i == 0 { f64::NAN } else { self.delta[i - 1] };
            t.push(*ln, step, 0.0);
        }
        t
    }

    /// `beta_0` never decreases by more than `rel_slack`.
    pub fn is_monotone(&self, rel_slack: f64) -> bool {
        self.ln_beta0
            .windows(2)
            .all(|w| (w[1] - w[0]).exp_m1() >= -rel_slack)
    }
}

/// Successive linearization of `Psi_RHS(x)` over the ball `||x||^2 <= P_T`.
/// Each step solves the linear program in closed form, `x = sqrt(P_T) beta / ||beta||`,
/// and stops once `beta_0` changes by at most `eps` relatively.
pub fn scp_qclp(
    grid: &FrequencyGrid,
    selection: &SubcarrierSelection,
    init: &PowerAllocation,
    rectenna: &RectennaParams,
    quadrature: &QuadratureConfig,
    cfg: &ScpConfig,
) -> Result<(PowerAllocation, ScpTrace)> {
    let p_t = init.power_budget_w;
    let gains = &selection.masked_gains;
    if init.x.len() != gains.len() {
        return Err(Error::DimensionMismatch(format!(
            "allocation has {} entries, grid has {}",
            init.x.len(),
            gains.len()
        )));
    }
    let mut x = init.x.clone();
    let mut lin = linearize(grid, gains, &x, rectenna, quadrature)?;
    let mut trace = ScpTrace {
        ln_beta0: vec![lin.ln_beta0],
        x: vec![x.clone()],
        ..ScpTrace::default()
    };
    for _ in 0..cfg.max_iter {
        let norm = lin.beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        let next = if norm > 0.0 && norm.is_finite() {
            let scale = p_t.sqrt() / norm;
            lin.beta.iter().map(|b| scale * b).collect()
        } else {
            log::warn!(
                "degenerate linearization (||beta|| = {norm}); using frequency-MRT direction"
            );
            trace.fallback_used = true;
            frequency_mrt(selection, p_t)?.x
        };
        let next_lin = linearize(grid, gains, &next, rectenna, quadrature)?;
        let delta = (next_lin.ln_beta0 - lin.ln_beta0).exp_m1().abs();
        x = next;
        lin = next_lin;
        trace.ln_beta0.push(lin.ln_beta0);
        trace.delta.push(delta);
        trace.x.push(x.clone());
        trace.iterations += 1;
        if delta <= cfg.eps {
            trace.converged = true;
            break;
        }
    }
    Ok((
        PowerAllocation {
            x,
            power_budget_w: p_t,
        },
        trace,
    ))
}

/// Largest deviation between the directions of `x` and `beta(x)`; zero at a
/// stationary point of `Psi_RHS` on the sphere.
pub fn scp_kkt_residual(
    grid: &FrequencyGrid,
    selection: &SubcarrierSelection,
    allocation: &PowerAllocation,
    rectenna: &RectennaParams,
    quadrature: &QuadratureConfig,
) -> Result<f64> {
    let lin = linearize(
        grid,
        &selection.masked_gains,
        &allocation.x,
        rectenna,
        quadrature,
    )?;
    let xn = allocation.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bn = lin.beta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if xn == 0.0 || bn == 0.0 {
        return Ok(if xn == bn { 0.0 } else { 1.0 });
    }
    Ok(allocation
        .x
        .iter()
        .zip(&lin.beta)
        .map(|(x, b)| (x / xn - b / bn).abs())
        .fold(0.0, f64::max))
}

/// Stationarity residual of the amplitude Lagrangian with one power
/// multiplier per subcarrier: `grad_{m,u} - 2 xi_u s_{m,u}` relative to the
/// largest gradient entry. `grad_{m,u} = kappa Re(h_{m,u} e^{j phi_{m,u}} mean(z e^{j w_u t}))`.
pub fn spatial_kkt_residual(
    channel: &ErChannel,
    waveform: &MultisineWaveform,
    rectenna: &RectennaParams,
    quadrature: &QuadratureConfig,
) -> Result<f64> {
    let response = channel.to_response();
    let signal = waveform.received_tones(&response, 0)?;
    let gain = rectenna.exponent_gain();
    let grid = channel.grid();
    let r = exp_harmonics(
        |n| signal.sample(n).into_iter().map(|v| gain * v).collect(),
        &grid.harmonics(),
        quadrature,
    )?;
    let kappa = SQRT_2 * gain;
    let (m_count, u_count) = (channel.num_antennas(), channel.num_subcarriers());
    let mut grad = vec![0.0; m_count * u_count];
    for m in 0..m_count {
        for u in 0..u_count {
            let phase = Complex64::from_polar(1.0, waveform.phase(m, u));
            grad[m * u_count + u] = kappa * (channel.get(m, u) * phase * r.harmonics[u]).re;
        }
    }
    let scale = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for u in 0..u_count {
        let (mut gs, mut ss) = (0.0, 0.0);
        for m in 0..m_count {
            let s = waveform.amplitude(m, u);
            gs += grad[m * u_count + u] * s;
            ss += s * s;
        }
        let xi = if ss > 0.0 { gs / (2.0 * ss) } else { 0.0 };
        for m in 0..m_count {
            let s = waveform.amplitude(m, u);
            let res = if ss > 0.0 {
                grad[m * u_count + u] - 2.0 * xi * s
            } else {
                0.0
            };
            worst = worst.max(res.abs());
        }
    }
    Ok(worst / scale)
}

/// `s_{m,u} = x_u conj(h_{m,u}) / b_u`: spatial MRT amplitudes with channel
/// phase compensation.
pub fn assemble_waveform(
    allocation: &PowerAllocation,
    channel: &ErChannel,
    selection: &SubcarrierSelection,
) -> Result<MultisineWaveform> {
    let (m_count, u_count) = (channel.num_antennas(), channel.num_subcarriers());
    if allocation.x.len() != u_count || selection.masked_gains.len() != u_count {
        return Err(Error::DimensionMismatch(format!(
            "allocation/selection length {}/{} vs U = {u_count}",
            allocation.x.len(),
            selection.masked_gains.len()
        )));
    }
    let b = channel.effective_gain();
    let mut w = MultisineWaveform::zeros(*channel.grid(), m_count);
    for u in 0..u_count {
        let x = allocation.x[u];
        if x == 0.0 {
            continue;
        }
        if b[u] == 0.0 {
            return Err(Error::CannotBeamform { subcarrier: u });
        }
        for m in 0..m_count {
            w.set_coefficient(m, u, channel.get(m, u).conj() * (x / b[u]));
        }
    }
    Ok(w)
}

/// Equal power `P_T / (M N)` per antenna and selected tone, phases `-psi_{m,u}`.
pub fn epa_cpc(
    channel: &ErChannel,
    selection: &SubcarrierSelection,
    power_budget_w: f64,
) -> MultisineWaveform {
    let m_count = channel.num_antennas();
    let count = selection.selected.len().max(1);
    let amp = (power_budget_w / (m_count * count) as f64).sqrt();
    let mut w = MultisineWaveform::zeros(*channel.grid(), m_count);
    for &u in &selection.selected {
        for m in 0..m_count {
            let h = channel.get(m, u);
            let phase = if h.norm() > 0.0 { -h.arg() } else { 0.0 };
            w.set_coefficient(m, u, Complex64::from_polar(amp, phase));
        }
    }
    w
}

/// All power on the strongest tone, spatial MRT with phase compensation.
pub fn single_tone(channel: &ErChannel, power_budget_w: f64) -> Result<MultisineWaveform> {
    let sel = select_subcarriers(&channel.effective_gain(), 1);
    let alloc = frequency_mrt(&sel, power_budget_w)?;
    assemble_waveform(&alloc, channel, &sel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mrt,
    ScpQclp,
    Epa,
    SingleTone,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mrt" => Ok(Self::Mrt),
            "scp_qclp" | "scp" => Ok(Self::ScpQclp),
            "epa" => Ok(Self::Epa),
            "single_tone" => Ok(Self::SingleTone),
            other => Err(Error::InvalidParameter(format!(
                "unknown single-ER method `{other}`"
            ))),
        }
    }
}

/// Inputs shared by every single-receiver method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleErSettings {
    pub num_tones: usize,
    pub power_budget_w: f64,
    pub rectenna: RectennaParams,
    pub quadrature: QuadratureConfig,
    pub scp: ScpConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleErResult {
    pub method: Method,
    pub selection: SubcarrierSelection,
    pub x: Vec<f64>,
    #[serde(skip)]
    pub waveform: Option<MultisineWaveform>,
    pub psi_rhs_ln: f64,
    #[serde(rename = "v_out_V")]
    pub v_out_v: f64,
    #[serde(rename = "p_out_W")]
    pub p_out_w: f64,
    pub trace: Option<ScpTrace>,
}

/// Runs one method end to end and evaluates the harvested power exactly.
pub fn optimize(
    channel: &ErChannel,
    method: Method,
    settings: &SingleErSettings,
) -> Result<SingleErResult> {
    let gains = channel.effective_gain();
    let n = match method {
        Method::SingleTone => 1,
        _ => settings.num_tones,
    };
    let selection = select_subcarriers(&gains, n);
    if selection.selected.is_empty() {
        return Err(Error::ZeroGains);
    }
    let p_t = settings.power_budget_w;
    let grid = channel.grid();
    let mut trace = None;
    let waveform = match method {
        Method::Mrt | Method::SingleTone => {
            assemble_waveform(&frequency_mrt(&selection, p_t)?, channel, &selection)?
        }
        Method::ScpQclp => {
            let init = equal_allocation(&selection, p_t);
            let (alloc, t) = scp_qclp(
                grid,
                &selection,
                &init,
                &settings.rectenna,
                &settings.quadrature,
                &settings.scp,
            )?;
            trace = Some(t);
            assemble_waveform(&alloc, channel, &selection)?
        }
        Method::Epa => epa_cpc(channel, &selection, p_t),
    };
    let x = (0..grid.num_subcarriers())
        .map(|u| {
            (0..waveform.num_antennas())
                .map(|m| waveform.amplitude(m, u).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let signal = waveform.received_tones(&channel.to_response(), 0)?;
    let harvest = Harvest::from_psi(
        psi_rhs(&signal, &settings.rectenna, &settings.quadrature)?,
        &settings.rectenna,
    )?;
    Ok(SingleErResult {
        method,
        selection,
        x,
        waveform: Some(waveform),
        psi_rhs_ln: harvest.psi.ln,
        v_out_v: harvest.v_out_v,
        p_out_w: harvest.p_out_w,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::received_signal;
    use approx::assert_relative_eq;

    fn grid(u: usize) -> FrequencyGrid {
        FrequencyGrid::from_cycles(32, 62.5e3, u).unwrap()
    }

    fn real_channel(g: FrequencyGrid, m: usize, mags: &[f64]) -> ErChannel {
        ErChannel::new(g, m, mags.iter().map(|&v| Complex64::new(v, 0.0)).collect()).unwrap()
    }

    #[test]
    fn spatial_mrt_examples() {
        let s = spatial_mrt(&[3.0, 4.0], 2, &[25.0]).unwrap();
        assert_relative_eq!(s[0], 3.0, max_relative = 1e-15);
        assert_relative_eq!(s[1], 4.0, max_relative = 1e-15);
        let s = spatial_mrt(&[0.7; 4], 4, &[2.0]).unwrap();
        for v in s {
            assert_relative_eq!(v, (0.5f64).sqrt(), max_relative = 1e-15);
        }
        assert!(matches!(
            spatial_mrt(&[0.0, 0.0], 2, &[1.0]),
            Err(Error::CannotBeamform { subcarrier: 0 })
        ));
        assert_eq!(spatial_mrt(&[0.0, 0.0], 2, &[0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn selection_examples() {
        assert_eq!(select_subcarriers(&[3.0, 1.0, 2.0], 2).selected, vec![0, 2]);
        assert_eq!(select_subcarriers(&[2.0, 2.0, 1.0], 1).selected, vec![0]);
        let sel = select_subcarriers(&[1.0, 0.0, 2.0], 5);
        assert_eq!(sel.selected, vec![0, 2]);
        assert_eq!(sel.masked_gains, vec![1.0, 0.0, 2.0]);
    }

    #[test]
    fn frequency_mrt_examples() {
        let sel = select_subcarriers(&[1.0, 1.0], 2);
        let x = frequency_mrt(&sel, 2.0).unwrap().x;
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(x[1], 1.0, max_relative = 1e-15);
        let sel = select_subcarriers(&[3.0, 4.0, 0.0], 3);
        let x = frequency_mrt(&sel, 1.0).unwrap().x;
        assert_relative_eq!(x[0], 0.6, max_relative = 1e-15);
        assert_relative_eq!(x[1], 0.8, max_relative = 1e-15);
        assert_eq!(x[2], 0.0);
        let sel = select_subcarriers(&[3.0, 4.0, 0.5], 1);
        let a = frequency_mrt(&sel, 2.0).unwrap();
        assert_relative_eq!(a.x[1], 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(a.power(), 2.0, max_relative = 1e-15);
        let empty = select_subcarriers(&[0.0, 0.0], 1);
        assert!(matches!(frequency_mrt(&empty, 1.0), Err(Error::ZeroGains)));
    }

    #[test]
    fn scp_single_tone_converges_immediately() {
        let g = grid(4);
        let sel = select_subcarriers(&[0.1, 0.3, 0.2, 0.05], 1);
        let init = equal_allocation(&sel, 0.01);
        let (a, t) = scp_qclp(
            &g,
            &sel,
            &init,
            &RectennaParams::default(),
            &QuadratureConfig::for_grid(&g),
            &ScpConfig::default(),
        )
        .unwrap();
        assert_eq!(t.iterations, 1);
        assert!(t.converged);
        assert_relative_eq!(a.x[1], 0.1, max_relative = 1e-12);
    }

    #[test]
    fn scp_zero_start_falls_back() {
        let g = grid(4);
        let sel = select_subcarriers(&[0.1, 0.3, 0.2, 0.05], 3);
        let init = PowerAllocation {
            x: vec![0.0; 4],
            power_budget_w: 0.01,
        };
        let p = RectennaParams::default();
        let q = QuadratureConfig::for_grid(&g);
        let lin = linearize(&g, &sel.masked_gains, &init.x, &p, &q).unwrap();
        assert!(lin.beta.iter().all(|b| b.abs() < 1e-15));
        let (_, t) = scp_qclp(&g, &sel, &init, &p, &q, &ScpConfig::default()).unwrap();
        assert!(t.fallback_used);
        assert!(t.is_monotone(1e-12));
    }

    #[test]
    fn single_tone_beta_matches_bessel() {
        let g = grid(2);
        let p = RectennaParams::default();
        let kappa = SQRT_2 * p.exponent_gain();
        // Exponent amplitude a = kappa * b * x = 3.
        let b = 0.2;
        let x = 3.0 / (kappa * b);
        let lin = linearize(
            &g,
            &[b, 0.0],
            &[x, 0.0],
            &p,
            &QuadratureConfig::for_grid(&g),
        )
        .unwrap();
        let i1_of_3 = 3.953370217402609;
        let i0_of_3 = 4.880792585865024;
        let beta = lin.beta_unscaled();
        assert_relative_eq!(beta[0], kappa * b * i1_of_3, max_relative = 1e-10);
        assert_relative_eq!(lin.ln_beta0.exp(), i0_of_3, max_relative = 1e-10);
        assert_eq!(beta[1], 0.0);
    }

    #[test]
    fn epa_examples() {
        let g = grid(3);
        let ch = real_channel(g, 1, &[0.5, 0.2, 0.4]);
        let sel = select_subcarriers(&ch.effective_gain(), 2);
        let w = epa_cpc(&ch, &sel, 2.0);
        assert_relative_eq!(w.amplitude(0, 0).powi(2), 1.0, max_relative = 1e-15);
        assert_relative_eq!(w.amplitude(0, 2).powi(2), 1.0, max_relative = 1e-15);
        assert_eq!(w.amplitude(0, 1), 0.0);
        assert_eq!(w.phase(0, 0), 0.0);
        let y0 = received_signal(&w, &ch.to_response(), 0, 0.0).unwrap();
        assert_relative_eq!(y0, SQRT_2 * (0.5 + 0.4), max_relative = 1e-12);
    }

    #[test]
    fn epa_coherent_peak_complex_channel() {
        let g = grid(3);
        let vals = vec![
            Complex64::new(0.3, -0.4),
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.2, 0.1),
            Complex64::new(0.0, 0.6),
            Complex64::new(0.5, 0.5),
            Complex64::new(-0.1, -0.1),
        ];
        let ch = ErChannel::new(g, 2, vals.clone()).unwrap();
        let sel = select_subcarriers(&ch.effective_gain(), 2);
        let w = epa_cpc(&ch, &sel, 1.0);
        let amp = (1.0f64 / 4.0).sqrt();
        let expected: f64 = sel
            .selected
            .iter()
            .map(|&u| {
                (0..2)
                    .map(|m| SQRT_2 * ch.magnitude(m, u) * amp)
                    .sum::<f64>()
            })
            .sum();
        let y0 = received_signal(&w, &ch.to_response(), 0, 0.0).unwrap();
        assert_relative_eq!(y0, expected, max_relative = 1e-12);
    }

    #[test]
    fn assemble_examples() {
        let g = grid(3);
        let vals = vec![
            Complex64::new(0.3, -0.4),
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.2, 0.1),
            Complex64::new(0.0, 0.6),
            Complex64::new(0.5, 0.5),
            Complex64::new(-0.1, -0.1),
        ];
        let ch = ErChannel::new(g, 2, vals).unwrap();
        let sel = select_subcarriers(&ch.effective_gain(), 2);
        let a = frequency_mrt(&sel, 0.3).unwrap();
        let w = assemble_waveform(&a, &ch, &sel).unwrap();
        assert_relative_eq!(w.total_power(), a.power(), max_relative = 1e-12);
        let y0 = received_signal(&w, &ch.to_response(), 0, 0.0).unwrap();
        let expected = SQRT_2 * surrogate_objective(&sel.masked_gains, &a.x);
        assert_relative_eq!(y0, expected, max_relative = 1e-12);

        let real = real_channel(g, 1, &[0.5, 0.2, 0.4]);
        let sel = select_subcarriers(&real.effective_gain(), 3);
        let w = assemble_waveform(&frequency_mrt(&sel, 1.0).unwrap(), &real, &sel).unwrap();
        assert!(w.coefficients().iter().all(|c| c.im == 0.0 && c.re >= 0.0));
    }

    #[test]
    fn single_tone_is_mrt_with_one_tone() {
        let g = grid(3);
        let ch = real_channel(g, 1, &[3.0, 1.0, 2.0]);
        let w = single_tone(&ch, 0.5).unwrap();
        assert_relative_eq!(w.amplitude(0, 0).powi(2), 0.5, max_relative = 1e-15);
        assert_eq!(w.amplitude(0, 1), 0.0);
        assert_eq!(w.amplitude(0, 2), 0.0);
    }

    #[test]
    fn single_tone_harvest_matches_bessel() {
        let g = grid(3);
        let p = RectennaParams::default();
        let ch = real_channel(g, 1, &[0.01, 0.004, 0.002]);
        let settings = SingleErSettings {
            num_tones: 1,
            power_budget_w: 0.1,
            rectenna: p,
            quadrature: QuadratureConfig::for_grid(&g),
            scp: ScpConfig::default(),
        };
        let r = optimize(&ch, Method::SingleTone, &settings).unwrap();
        let a = SQRT_2 * p.exponent_gain() * 0.01 * 0.1f64.sqrt();
        let mut i0 = 0.0;
        let mut term = 1.0;
        for n in 0..200 {
            if n > 0 {
                term *= (a / 2.0).powi(2) / (n * n) as f64;
            }
            i0 += term;
        }
        assert_relative_eq!(r.psi_rhs_ln, i0.ln(), max_relative = 1e-10);
        let v = crate::rectenna::solve_output_voltage(i0, &p, 1e-9).unwrap();
        assert!((r.v_out_v - v).abs() < 2e-9);
    }

    #[test]
    fn spatial_kkt_residual_vanishes_for_mrt() {
        let g = grid(3);
        let vals = vec![
            Complex64::new(0.003, -0.004),
            Complex64::new(0.001, 0.002),
            Complex64::new(-0.002, 0.001),
            Complex64::new(0.0, 0.006),
            Complex64::new(0.005, 0.005),
            Complex64::new(-0.001, -0.001),
        ];
        let ch = ErChannel::new(g, 2, vals).unwrap();
        let sel = select_subcarriers(&ch.effective_gain(), 3);
        let a = PowerAllocation {
            x: vec![0.1, 0.2, 0.15],
            power_budget_w: 0.0725,
        };
        let w = assemble_waveform(&a, &ch, &sel).unwrap();
        let p = RectennaParams::default();
        let q = QuadratureConfig::for_grid(&g);
        assert!(spatial_kkt_residual(&ch, &w, &p, &q).unwrap() < 1e-10);
        // Equal split across unequal antennas is not stationary.
        let epa = epa_cpc(&ch, &sel, 0.0725);
        assert!(spatial_kkt_residual(&ch, &epa, &p, &q).unwrap() > 1e-3);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("scp_qclp".parse::<Method>().unwrap(), Method::ScpQclp);
        assert!("nope".parse::<Method>().is_err());
    }
}
