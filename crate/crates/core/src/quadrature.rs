//! Period means `(1/T) int_T f(t) dt` of smooth periodic integrands.
//!
//! Samples sit on the uniform grid `t_i = i T / S`. The sample count doubles
//! until two successive estimates agree to the configured relative tolerance.
//! Exponential integrands are handled in shifted form,
//! `exp(A_max) * mean(exp(a - A_max))`, and reported on a log scale so that
//! large waveform peaks cannot overflow.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{forward_fft, FrequencyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Equal weights; spectrally accurate for smooth periodic integrands.
    TrapezoidPeriodic,
    /// Composite Simpson on the periodic grid (weights 2/3, 4/3 alternating).
    CompositeSimpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub initial_samples: usize,
    pub max_samples: usize,
    pub rel_tolerance: f64,
    pub rule: Rule,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            initial_samples: 64,
            max_samples: 1 << 22,
            rel_tolerance: 1e-9,
            rule: Rule::TrapezoidPeriodic,
        }
    }
}

impl QuadratureConfig {
    /// `64 (1 + f_max T)` samples rounded up to a power of two, so the highest
    /// carrier is resolved with margin before the first doubling.
    pub fn for_grid(grid: &FrequencyGrid) -> Self {
        let cycles = grid.harmonic(grid.num_subcarriers() - 1) as usize;
        let initial = (64 * (1 + cycles)).next_power_of_two();
        Self {
            initial_samples: initial,
            max_samples: (initial << 10).max(1 << 16),
            ..Self::default()
        }
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_samples < 8 {
            return Err(Error::InvalidParameter(format!(
                "initial_samples must be at least 8, got {}",
                self.initial_samples
            )));
        }
        if self.max_samples < self.initial_samples {
            return Err(Error::InvalidParameter(
                "max_samples < initial_samples".into(),
            ));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "rel_tolerance must be positive".into(),
            ));
        }
        if self.rule == Rule::CompositeSimpson && !self.initial_samples.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "Simpson rule needs an even sample count".into(),
            ));
        }
        Ok(())
    }

    fn weight(&self, i: usize, count: usize) -> f64 {
        let base = 1.0 / count as f64;
        match self.rule {
            Rule::TrapezoidPeriodic => base,
            Rule::CompositeSimpson => {
                if i % 2 == 1 {
                    4.0 / 3.0 * base
                } else {
                    2.0 / 3.0 * base
                }
            }
        }
    }
}

/// A converged period mean and the sample count that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub value: f64,
    pub samples: usize,
}

/// Mean of `exp(a(t))` kept as `ln_mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMeanExp {
    pub ln_mean: f64,
    pub samples: usize,
}

/// Means of `exp(a(t))` and of `exp(a(t)) exp(j 2 pi n t / T)` for a set of
/// harmonics `n`, all scaled by `exp(-ln_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpHarmonics {
    pub ln_scale: f64,
    pub mean: f64,
    pub harmonics: Vec<Complex64>,
    pub samples: usize,
}

impl ExpHarmonics {
    /// `ln` of the unscaled mean of `exp(a)`.
    pub fn ln_mean(&self) -> f64 {
        self.ln_scale + self.mean.ln()
    }
}

fn weighted_mean(samples: &[f64], cfg: &QuadratureConfig) -> (f64, f64) {
    let n = samples.len();
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for (i, v) in samples.iter().enumerate() {
        let w = cfg.weight(i, n);
        sum += w * v;
        abs_sum += w * v.abs();
    }
    (sum, abs_sum)
}

/// Period mean from a sampler returning values at `t_i = i T / count`.
pub fn period_mean_sampled(
    mut sampler: impl FnMut(usize) -> Vec<f64>,
    cfg: &QuadratureConfig,
) -> Result<MeanEstimate> {
    cfg.validate()?;
    let mut count = cfg.initial_samples;
    let (mut previous, _) = weighted_mean(&sampler(count), cfg);
    loop {
        let next_count = count * 2;
        if next_count > cfg.max_samples {
            return Err(Error::QuadratureNotConverged {
                best: previous,
                samples: count,
            });
        }
        let (current, scale) = weighted_mean(&sampler(next_count), cfg);
        if (current - previous).abs() <= cfg.rel_tolerance * current.abs().max(scale) {
            return Ok(MeanEstimate {
                value: current,
                samples: next_count,
            });
        }
        previous = current;
        count = next_count;
    }
}

fn uniform_times(period: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| period * i as f64 / count as f64)
}

/// `(1/T) int_T f(t) dt`.
pub fn period_mean(
    f: impl Fn(f64) -> f64,
    period: f64,
    cfg: &QuadratureConfig,
) -> Result<MeanEstimate> {
    period_mean_sampled(|n| uniform_times(period, n).map(&f).collect(), cfg)
}

/// `(1/T) int_T weight(t) f(t) dt`.
pub fn period_mean_weighted(
    f: impl Fn(f64) -> f64,
    weight: impl Fn(f64) -> f64,
    period: f64,
    cfg: &QuadratureConfig,
) -> Result<MeanEstimate> {
    period_mean(|t| weight(t) * f(t), period, cfg)
}

fn shifted_exp_mean(exponents: &[f64], cfg: &QuadratureConfig) -> (f64, f64) {
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = exponents.len();
    let mean: f64 = exponents
        .iter()
        .enumerate()
        .map(|(i, a)| cfg.weight(i, n) * (a - shift).exp())
        .sum();
    (shift, mean)
}

/// `ln( (1/T) int_T exp(a(t)) dt )` from a sampler of the exponent `a`.
pub fn log_mean_exp(
    mut exponent_sampler: impl FnMut(usize) -> Vec<f64>,
    cfg: &QuadratureConfig,
) -> Result<LogMeanExp> {
    cfg.validate()?;
    let mut count = cfg.initial_samples;
    let (shift, mean) = shifted_exp_mean(&exponent_sampler(count), cfg);
    let mut previous = shift + mean.ln();
    loop {
        let next_count = count * 2;
        if next_count > cfg.max_samples {
            return Err(Error::QuadratureNotConverged {
                best: previous.exp(),
                samples: count,
            });
        }
        let (shift, mean) = shifted_exp_mean(&exponent_sampler(next_count), cfg);
        let current = shift + mean.ln();
        if (current - previous).exp_m1().abs() <= cfg.rel_tolerance {
            return Ok(LogMeanExp {
                ln_mean: current,
                samples: next_count,
            });
        }
        previous = current;
        count = next_count;
    }
}

fn exp_harmonics_at(exponents: &[f64], harmonics: &[u64], cfg: &QuadratureConfig) -> ExpHarmonics {
    let count = exponents.len();
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut buf: Vec<Complex64> = exponents
        .iter()
        .enumerate()
        .map(|(i, a)| Complex64::new(cfg.weight(i, count) * (a - shift).exp(), 0.0))
        .collect();
    let mean = buf.iter().map(|z| z.re).sum();
    // Forward FFT gives sum_i z_i exp(-j 2 pi k i / S); the conjugate of bin
    // (n mod S) is the weighted mean of z(t) exp(+j 2 pi n t / T).
    forward_fft(count).process(&mut buf);
    let values = harmonics
        .iter()
        .map(|&n| buf[(n % count as u64) as usize].conj())
        .collect();
    ExpHarmonics {
        ln_scale: shift,
        mean,
        harmonics: values,
        samples: count,
    }
}

/// Mean of `exp(a(t))` together with its Fourier-weighted means
/// `mean(exp(a(t)) exp(j 2 pi n t / T))` for each harmonic `n`, i.e. the
/// cosine-weighted mean is the real part and the sine-weighted mean the
/// imaginary part. Converges jointly on all components, relative to the mean.
pub fn exp_harmonics(
    mut exponent_sampler: impl FnMut(usize) -> Vec<f64>,
    harmonics: &[u64],
    cfg: &QuadratureConfig,
) -> Result<ExpHarmonics> {
    cfg.validate()?;
    let mut count = cfg.initial_samples;
    let mut previous = exp_harmonics_at(&exponent_sampler(count), harmonics, cfg);
    loop {
        let next_count = count * 2;
        if next_count > cfg.max_samples {
            return Err(Error::QuadratureNotConverged {
                best: previous.ln_mean().exp(),
                samples: count,
            });
        }
        let current = exp_harmonics_at(&exponent_sampler(next_count), harmonics, cfg);
        // Put the previous estimate on the current scale before comparing.
        let rescale = (previous.ln_scale - current.ln_scale).exp();
        let tol = cfg.rel_tolerance * current.mean;
        let converged = (previous.mean * rescale - current.mean).abs() <= tol
            && previous
                .harmonics
                .iter()
                .zip(&current.harmonics)
                .all(|(p, c)| (p * rescale - c).norm() <= tol);
        if converged {
            return Ok(current);
        }
        previous = current;
        count = next_count;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    /// Power series of the modified Bessel function I_nu for nu = 0, 1.
    fn bessel_series(order: u32, a: f64) -> f64 {
        let half = a / 2.0;
        let mut term = half.powi(order as i32);
        for k in 1..=order {
            term /= k as f64;
        }
        let mut sum = term;
        for n in 1..500 {
            term *= half * half / (n as f64 * (n + order) as f64);
            sum += term;
            if term < sum * 1e-18 {
                break;
            }
        }
        sum
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn constant_is_exact() {
        let r = period_mean(|_| 3.25, 2.0, &cfg()).unwrap();
        assert_eq!(r.value, 3.25);
    }

    #[test]
    fn full_cycle_cosine_vanishes() {
        let r = period_mean(|t| (TAU * t / 2.0).cos(), 2.0, &cfg()).unwrap();
        assert!(r.value.abs() < 1e-15);
    }

    #[test]
    fn bessel_i0_of_one() {
        let r = period_mean(|t| (TAU * t).cos().exp(), 1.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, 1.2660658777520084, max_relative = 1e-14);
        assert_relative_eq!(r.value, bessel_series(0, 1.0), max_relative = 1e-14);
    }

    #[test]
    fn weighted_examples() {
        let w = |t: f64| (TAU * t).cos();
        let r = period_mean_weighted(|_| 1.0, w, 1.0, &cfg()).unwrap();
        assert!(r.value.abs() < 1e-15);
        let r = period_mean_weighted(|t| (TAU * t).cos().exp(), w, 1.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, 0.5651591039924851, max_relative = 1e-13);
        let r = period_mean_weighted(|t| (TAU * t).cos().exp(), |t| (TAU * t).sin(), 1.0, &cfg())
            .unwrap();
        assert!(r.value.abs() < 1e-15);
    }

    #[test]
    fn simpson_agrees_with_trapezoid() {
        let c = cfg().with_rule(Rule::CompositeSimpson);
        let r = period_mean(|t| (3.0 * (TAU * t).cos()).exp(), 1.0, &c).unwrap();
        assert_relative_eq!(r.value, bessel_series(0, 3.0), max_relative = 1e-10);
    }

    #[test]
    fn non_convergence_reports_best_estimate() {
        let c = QuadratureConfig {
            initial_samples: 8,
            max_samples: 16,
            rel_tolerance: 1e-15,
            rule: Rule::TrapezoidPeriodic,
        };
        let err = period_mean(|t| (40.0 * (TAU * t).cos()).exp(), 1.0, &c).unwrap_err();
        assert!(matches!(
            err,
            Error::QuadratureNotConverged { samples: 16, .. }
        ));
    }

    #[test]
    fn invalid_config() {
        let mut c = cfg();
        c.initial_samples = 4;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.max_samples = 8;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.rel_tolerance = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn log_mean_exp_survives_huge_exponents() {
        let a = 2000.0;
        let sampler = |n: usize| {
            (0..n)
                .map(|i| a * (TAU * i as f64 / n as f64).cos())
                .collect()
        };
        let r = log_mean_exp(sampler, &cfg()).unwrap();
        // I0(a) ~ exp(a) / sqrt(2 pi a) (1 + 1/(8a) + 9/(128 a^2))
        let asymptotic =
            a - 0.5 * (TAU * a).ln() + (1.0 + 1.0 / (8.0 * a) + 9.0 / (128.0 * a * a)).ln();
        assert!((r.ln_mean - asymptotic).abs() < 1e-8);
    }

    #[test]
    fn exp_harmonics_match_bessel() {
        for a in [0.5, 1.0, 5.0, 20.0] {
            let n0 = 7u64;
            let sampler = |n: usize| {
                (0..n)
                    .map(|i| a * (TAU * n0 as f64 * i as f64 / n as f64).cos())
                    .collect()
            };
            let r = exp_harmonics(sampler, &[n0, n0 + 1], &cfg()).unwrap();
            let scale = r.ln_scale.exp();
            assert_relative_eq!(r.mean * scale, bessel_series(0, a), max_relative = 1e-12);
            assert_relative_eq!(
                r.harmonics[0].re * scale,
                bessel_series(1, a),
                max_relative = 1e-12
            );
            assert!(r.harmonics[0].im.abs() * scale < 1e-12 * bessel_series(0, a));
            assert!(r.harmonics[1].norm() * scale < 1e-12 * bessel_series(0, a));
        }
    }

    #[test]
    fn doubling_never_worsens_bessel_error() {
        for a in [0.5, 1.0, 5.0, 20.0] {
            let exact = bessel_series(0, a);
            let mut last = f64::INFINITY;
            let mut n = 8;
            while n <= 1024 {
                let est: f64 = (0..n)
                    .map(|i| (a * (TAU * i as f64 / n as f64).cos()).exp())
                    .sum::<f64>()
                    / n as f64;
                let err = (est - exact).abs() / exact;
                // Floor at rounding noise.
                assert!(err <= last.max(1e-14), "a={a} n={n}: {err} > {last}");
                last = err;
                n *= 2;
            }
        }
    }

    #[test]
    fn trig_polynomial_exact_beyond_nyquist() {
        // Harmonics up to 5: exact once S > 2 * 5.
        let f = |t: f64| 1.5 + (TAU * 5.0 * t).cos() + 0.5 * (TAU * 3.0 * t).sin();
        for s in [11usize, 12, 16, 33] {
            let est: f64 = (0..s).map(|i| f(i as f64 / s as f64)).sum::<f64>() / s as f64;
            assert!((est - 1.5).abs() < 1e-14);
        }
    }
}
