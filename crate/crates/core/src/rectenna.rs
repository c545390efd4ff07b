//! Single-diode rectenna with reverse breakdown.
//!
//! The steady-state output voltage `v` solves `Psi_LHS(v) = Psi_RHS(y)` where
//! `Psi_RHS` is the period mean of `exp(sqrt(R_s) y(t) / (eta V0))` and
//!
//! ```text
//! Psi_LHS(v) = exp(v / (eta V0)) (1 + v / (R_L I0))
//!              / (1 - (I_BV / I0) exp((2 v - V_B) / (eta V0)))
//! ```
//!
//! Both sides overflow easily, so they are handled as logarithms.

use serde::{Deserialize, Serialize};

use crate::channels::ChannelResponse;
use crate::error::{Error, Result};
use crate::quadrature::{log_mean_exp, QuadratureConfig};
use crate::signals::{MultisineWaveform, Multitone};

const MAX_EXPONENT: f64 = 700.0;

/// Diode constants. Defaults are the HSMS-285x datasheet values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeParams {
    #[serde(rename = "I0_A")]
    pub i0_a: f64,
    #[serde(rename = "IBV_A")]
    pub ibv_a: f64,
    #[serde(rename = "V0_V")]
    pub v0_v: f64,
    pub eta: f64,
    #[serde(rename = "VB_V")]
    pub vb_v: f64,
}

impl Default for DiodeParams {
    fn default() -> Self {
        Self {
            i0_a: 3e-6,
            ibv_a: 300e-6,
            v0_v: 25.86e-3,
            eta: 1.05,
            vb_v: 3.8,
        }
    }
}

impl DiodeParams {
    /// `eta V0`, the exponent scale of the diode law.
    pub fn thermal_scale(&self) -> f64 {
        self.eta * self.v0_v
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("I0_A", self.i0_a),
            ("IBV_A", self.ibv_a),
            ("V0_V", self.v0_v),
            ("VB_V", self.vb_v),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.eta.is_finite() && self.eta > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must exceed 1, got {}",
                self.eta
            )));
        }
        if self.i0_a >= self.ibv_a {
            log::warn!("I0 = {} A is not below IBV = {} A", self.i0_a, self.ibv_a);
        }
        Ok(())
    }
}

/// Diode plus matched source and load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectennaParams {
    #[serde(flatten)]
    pub diode: DiodeParams,
    #[serde(rename = "Rs_ohm")]
    pub rs_ohm: f64,
    #[serde(rename = "RL_ohm")]
    pub rl_ohm: f64,
    #[serde(rename = "C_F")]
    pub c_f: f64,
}

impl Default for RectennaParams {
    fn default() -> Self {
        Self {
            diode: DiodeParams::default(),
            rs_ohm: 50.0,
            rl_ohm: 10e3,
            c_f: 100e-9,
        }
    }
}

impl RectennaParams {
    pub fn validate(&self) -> Result<()> {
        self.diode.validate()?;
        for (name, v) in [
            ("Rs_ohm", self.rs_ohm),
            ("RL_ohm", self.rl_ohm),
            ("C_F", self.c_f),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Whether the low-pass time constant covers at least 50 waveform periods.
    pub fn ripple_free(&self, period_s: f64) -> bool {
        self.c_f * self.rl_ohm >= 50.0 * period_s
    }

    /// Logs a warning when [`ripple_free`](Self::ripple_free) fails.
    pub fn check_ripple(&self, period_s: f64) -> bool {
        let ok = self.ripple_free(period_s);
        if !ok {
            log::warn!(
                "C*R_L = {:e} s is below 50 periods ({:e} s); the zero-ripple model is optimistic",
                self.c_f * self.rl_ohm,
                50.0 * period_s
            );
        }
        ok
    }

    /// `sqrt(R_s) / (eta V0)`: maps the received amplitude to the exponent.
    pub fn exponent_gain(&self) -> f64 {
        self.rs_ohm.sqrt() / self.diode.thermal_scale()
    }
}

fn clamped_exp(x: f64) -> f64 {
    if x > MAX_EXPONENT {
        log::warn!("diode exponent {x} clamped to {MAX_EXPONENT}");
        MAX_EXPONENT.exp()
    } else {
        x.exp()
    }
}

/// Diode current `I0 (exp(v/(eta V0)) - 1) - I_BV exp(-(v + V_B)/(eta V0))`.
pub fn diode_current(v_d: f64, d: &DiodeParams) -> f64 {
    let s = d.thermal_scale();
    d.i0_a * (clamped_exp(v_d / s) - 1.0) - d.ibv_a * clamped_exp(-(v_d + d.vb_v) / s)
}

/// Largest attainable output voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxDcVoltage {
    /// `eta V0 ln(I0 / I_BV) / 2 + V_B / 2`.
    pub exact: f64,
    /// `V_B / 2`.
    pub approx: f64,
}

pub fn max_dc_voltage(p: &RectennaParams) -> MaxDcVoltage {
    let d = &p.diode;
    MaxDcVoltage {
        exact: 0.5 * d.thermal_scale() * (d.i0_a / d.ibv_a).ln() + 0.5 * d.vb_v,
        approx: 0.5 * d.vb_v,
    }
}

fn check_domain(v_out: f64, p: &RectennaParams) -> Result<()> {
    let v_max = max_dc_voltage(p).exact;
    if !(v_out >= 0.0 && v_out < v_max) {
        return Err(Error::VoltageOutOfDomain { v_out, v_max });
    }
    Ok(())
}

fn ln_psi_lhs_unchecked(v: f64, p: &RectennaParams) -> f64 {
    let d = &p.diode;
    let s = d.thermal_scale();
    let x = (d.ibv_a / d.i0_a).ln() + (2.0 * v - d.vb_v) / s;
    v / s + (v / (p.rl_ohm * d.i0_a)).ln_1p() - (-x.exp_m1()).ln()
}

/// `ln Psi_LHS(v_out)` for `0 <= v_out < v*`.
pub fn ln_psi_lhs(v_out: f64, p: &RectennaParams) -> Result<f64> {
    check_domain(v_out, p)?;
    Ok(ln_psi_lhs_unchecked(v_out, p))
}

/// `Psi_LHS(v_out)` for `0 <= v_out < v*`. Overflows to infinity near `v*`.
pub fn psi_lhs(v_out: f64, p: &RectennaParams) -> Result<f64> {
    Ok(ln_psi_lhs(v_out, p)?.exp())
}

/// A value of `Psi`, stored as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Psi {
    pub ln: f64,
}

impl Psi {
    pub fn from_value(value: f64) -> Self {
        Self { ln: value.ln() }
    }

    /// `exp(ln)`; infinite when it exceeds the `f64` range.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }
}

/// `Psi_RHS` of a received tone sum.
pub fn psi_rhs(y: &Multitone, p: &RectennaParams, cfg: &QuadratureConfig) -> Result<Psi> {
    let gain = p.exponent_gain();
    let r = log_mean_exp(|n| y.sample(n).into_iter().map(|v| gain * v).collect(), cfg)?;
    Ok(Psi { ln: r.ln_mean })
}

/// `Psi_RHS` of an arbitrary `T`-periodic received signal.
pub fn psi_rhs_fn(
    y: impl Fn(f64) -> f64,
    period_s: f64,
    p: &RectennaParams,
    cfg: &QuadratureConfig,
) -> Result<Psi> {
    let gain = p.exponent_gain();
    let r = log_mean_exp(
        |n| {
            (0..n)
                .map(|i| gain * y(period_s * i as f64 / n as f64))
                .collect()
        },
        cfg,
    )?;
    Ok(Psi { ln: r.ln_mean })
}

/// `Psi_RHS` at receiver `k` for a transmit waveform.
pub fn psi_rhs_received(
    waveform: &MultisineWaveform,
    response: &ChannelResponse,
    k: usize,
    p: &RectennaParams,
    cfg: &QuadratureConfig,
) -> Result<Psi> {
    psi_rhs(&waveform.received_tones(response, k)?, p, cfg)
}

/// Default bisection tolerance in volts.
pub const VOLTAGE_TOLERANCE: f64 = 1e-9;
const MAX_BISECTIONS: usize = 200;

/// Inverts `Psi_LHS` given `ln psi`.
pub fn solve_output_voltage_ln(ln_psi: f64, p: &RectennaParams, tol: f64) -> Result<f64> {
    if !(ln_psi >= 0.0) {
        return Err(Error::NoVoltageSolution { ln_psi });
    }
    let v_max = max_dc_voltage(p).exact;
    let mut lo = 0.0;
    let mut hi = v_max - 1e-12 * v_max.max(1.0);
    if ln_psi >= ln_psi_lhs_unchecked(hi, p) {
        return Ok(hi);
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ln_psi_lhs_unchecked(mid, p) < ln_psi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Output DC voltage `v` in `[0, v*)` with `Psi_LHS(v) = psi_value`.
pub fn solve_output_voltage(psi_value: f64, p: &RectennaParams, tol: f64) -> Result<f64> {
    if !(psi_value >= 1.0) {
        return Err(Error::NoVoltageSolution {
            ln_psi: psi_value.ln(),
        });
    }
    solve_output_voltage_ln(psi_value.ln(), p, tol)
}

/// `v_out^2 / R_L`.
pub fn output_dc_power(v_out: f64, p: &RectennaParams) -> f64 {
    v_out * v_out / p.rl_ohm
}

/// Peak received amplitude `V_B / (2 sqrt(R_s))` that keeps the diode out of
/// reverse breakdown.
pub fn breakdown_amplitude_limit(p: &RectennaParams) -> f64 {
    p.diode.vb_v / (2.0 * p.rs_ohm.sqrt())
}

/// Harvested DC quantities for one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harvest {
    pub psi: Psi,
    pub v_out_v: f64,
    pub p_out_w: f64,
}

impl Harvest {
    pub fn from_psi(psi: Psi, p: &RectennaParams) -> Result<Self> {
        // Round-off can put ln psi a hair below zero.
        let ln = if psi.ln < 0.0 && psi.ln > -1e-12 {
            0.0
        } else {
            psi.ln
        };
        let v = solve_output_voltage_ln(ln, p, VOLTAGE_TOLERANCE)?;
        Ok(Self {
            psi,
            v_out_v: v,
            p_out_w: output_dc_power(v, p),
        })
    }
}

/// `Psi_RHS`, output voltage and DC power for a received tone sum.
pub fn harvest(y: &Multitone, p: &RectennaParams, cfg: &QuadratureConfig) -> Result<Harvest> {
    Harvest::from_psi(psi_rhs(y, p, cfg)?, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn params() -> RectennaParams {
        RectennaParams::default()
    }

    #[test]
    fn diode_current_examples() {
        let d = DiodeParams::default();
        assert!(diode_current(0.0, &d).abs() < 1e-60);
        let i = diode_current(d.thermal_scale() * 2f64.ln(), &d);
        assert_relative_eq!(i, 3e-6, max_relative = 1e-12);
        let i = diode_current(-d.vb_v, &d);
        assert_relative_eq!(i, -303e-6, max_relative = 1e-6);
    }

    #[test]
    fn diode_current_saturates_instead_of_overflowing() {
        let d = DiodeParams::default();
        let i = diode_current(1e3, &d);
        assert!(i.is_finite() && i > 0.0);
    }

    #[test]
    fn diode_current_increasing() {
        let d = DiodeParams::default();
        let mut prev = diode_current(-5.0, &d);
        for i in 1..=1000 {
            let v = -5.0 + 6.0 * i as f64 / 1000.0;
            let cur = diode_current(v, &d);
            assert!(cur >= prev, "decreasing at {v}");
            prev = cur;
        }
        for lo in [-4.2, -0.3] {
            let mut prev = diode_current(lo, &d);
            for i in 1..=500 {
                let v = lo + 0.8 * i as f64 / 500.0;
                let cur = diode_current(v, &d);
                assert!(cur > prev, "not increasing at {v}");
                prev = cur;
            }
        }
    }

    #[test]
    fn psi_lhs_examples() {
        let p = params();
        assert!((psi_lhs(0.0, &p).unwrap() - 1.0).abs() < 1e-12);
        let s = p.diode.thermal_scale();
        let oracle = (0.1 / s).exp() * (1.0 + 0.1 / (p.rl_ohm * p.diode.i0_a))
            / (1.0 - 100.0 * ((0.2 - 3.8) / s).exp());
        let v = psi_lhs(0.1, &p).unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-12);
        assert!((v - 172.3).abs() < 0.05);
        let v_max = max_dc_voltage(&p).exact;
        assert!(ln_psi_lhs(v_max - 1e-12, &p).unwrap() > ln_psi_lhs(v_max - 1e-6, &p).unwrap());
        assert!(matches!(
            psi_lhs(v_max, &p),
            Err(Error::VoltageOutOfDomain { .. })
        ));
        assert!(psi_lhs(-0.1, &p).is_err());
    }

    #[test]
    fn max_voltage_examples() {
        let p = params();
        let v = max_dc_voltage(&p);
        assert_relative_eq!(v.exact, 1.8374779, epsilon = 1e-7);
        assert_eq!(v.approx, 1.9);
        let mut q = p;
        q.diode.ibv_a = q.diode.i0_a;
        assert_eq!(max_dc_voltage(&q).exact, 1.9);
    }

    #[test]
    fn psi_lhs_strictly_increasing() {
        let p = params();
        let v_max = max_dc_voltage(&p).exact;
        let mut prev = ln_psi_lhs(0.0, &p).unwrap();
        for i in 1..10_000 {
            let cur = ln_psi_lhs(v_max * i as f64 / 10_000.0, &p).unwrap();
            assert!(cur > prev);
            prev = cur;
        }
    }

    #[test]
    fn inversion_examples() {
        let p = params();
        assert!(solve_output_voltage(1.0, &p, 1e-9).unwrap() < 1e-9);
        let psi = psi_lhs(0.1, &p).unwrap();
        assert!((solve_output_voltage(psi, &p, 1e-9).unwrap() - 0.1).abs() <= 1e-9);
        assert!(matches!(
            solve_output_voltage(0.5, &p, 1e-9),
            Err(Error::NoVoltageSolution { .. })
        ));
    }

    #[test]
    fn psi_of_1e12_sits_well_below_ceiling() {
        // exp(v/(eta V0)) alone reaches 1e12 around 0.65 V.
        let p = params();
        let v = solve_output_voltage(1e12, &p, 1e-9).unwrap();
        assert!((ln_psi_lhs(v, &p).unwrap() - 1e12f64.ln()).abs() < 1e-6);
        assert!(v > 0.6 && v < 0.7);
    }

    #[test]
    fn deep_saturation_approaches_ceiling() {
        let p = params();
        let v_max = max_dc_voltage(&p).exact;
        let v = solve_output_voltage_ln(200.0, &p, 1e-9).unwrap();
        assert!(v_max - v < 1e-9);
        let v = solve_output_voltage(1e40, &p, 1e-9).unwrap();
        assert!(v_max - v < 1e-9);
    }

    #[test]
    fn dc_power_examples() {
        let p = params();
        assert_eq!(output_dc_power(0.0, &p), 0.0);
        assert_relative_eq!(output_dc_power(1.0, &p), 100e-6, max_relative = 1e-15);
        let v = max_dc_voltage(&p).exact;
        assert!((output_dc_power(v, &p) - 337.6e-6).abs() < 0.1e-6);
    }

    #[test]
    fn breakdown_limit_examples() {
        let p = params();
        assert_relative_eq!(breakdown_amplitude_limit(&p), 3.8 / (2.0 * 50f64.sqrt()));
        assert!((breakdown_amplitude_limit(&p) - 0.26870).abs() < 1e-5);
        let mut q = p;
        q.diode.vb_v *= 2.0;
        assert_relative_eq!(
            breakdown_amplitude_limit(&q),
            2.0 * breakdown_amplitude_limit(&p)
        );
        let mut q = p;
        q.rs_ohm *= 4.0;
        assert_relative_eq!(
            breakdown_amplitude_limit(&q),
            0.5 * breakdown_amplitude_limit(&p)
        );
    }

    #[test]
    fn psi_rhs_zero_signal_is_one() {
        let p = params();
        let y = Multitone::new(1.0, vec![3], vec![Complex64::new(0.0, 0.0)]).unwrap();
        let psi = psi_rhs(&y, &p, &QuadratureConfig::default()).unwrap();
        assert_eq!(psi.ln, 0.0);
        let h = harvest(&y, &p, &QuadratureConfig::default()).unwrap();
        assert!(h.v_out_v < 1e-9);
    }

    #[test]
    fn psi_rhs_single_tone_bessel() {
        let p = params();
        // Exponent amplitude a = gain * |c| = 1.
        let amp = 1.0 / p.exponent_gain();
        let y = Multitone::new(2e-6, vec![5], vec![Complex64::new(0.0, amp)]).unwrap();
        let psi = psi_rhs(&y, &p, &QuadratureConfig::default()).unwrap();
        assert_relative_eq!(psi.value(), 1.2660658777520084, max_relative = 1e-12);
        let neg = psi_rhs(&y.scaled(-1.0), &p, &QuadratureConfig::default()).unwrap();
        assert_relative_eq!(psi.ln, neg.ln, max_relative = 1e-12);
    }

    #[test]
    fn psi_rhs_fn_matches_tone_sum() {
        let p = params();
        let y = Multitone::new(
            1e-6,
            vec![8, 9, 11],
            vec![
                Complex64::new(0.1, 0.05),
                Complex64::new(-0.03, 0.08),
                Complex64::new(0.02, 0.0),
            ],
        )
        .unwrap();
        let cfg = QuadratureConfig::default();
        let a = psi_rhs(&y, &p, &cfg).unwrap();
        let b = psi_rhs_fn(|t| y.value(t), 1e-6, &p, &cfg).unwrap();
        assert_relative_eq!(a.ln, b.ln, max_relative = 1e-9);
        assert!(a.ln > 0.0);
    }

    #[test]
    fn ripple_check() {
        let p = params();
        assert!(p.ripple_free(16e-6));
        assert!(!p.ripple_free(1e-3));
    }

    #[test]
    fn params_json_field_names() {
        let text = serde_json::to_string(&params()).unwrap();
        for key in [
            "I0_A", "IBV_A", "V0_V", "eta", "VB_V", "Rs_ohm", "RL_ohm", "C_F",
        ] {
            assert!(
                text.contains(&format!("\"{key}\"")),
                "{key} missing in {text}"
            );
        }
        let back: RectennaParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, params());
    }
}
