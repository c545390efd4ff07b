//! Subcarrier grid, multisine waveforms and their time-domain views.
//!
//! A multisine on the grid is `x(t) = Re{ sum_u sqrt(2) c_u exp(j w_u t) }`
//! where `w_u = 2 pi (f_0 + u delta_u)` and `f_0 / delta_u` is an integer, so
//! every tone completes an integer number of cycles in the period
//! `T = 1 / delta_u`. Indices are zero-based throughout the crate.

use std::cell::RefCell;
use std::f64::consts::{PI, SQRT_2, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::channels::ChannelResponse;
use crate::error::{Error, Result};

/// Equally spaced subcarriers `f_u = f_0 + u * delta_u`, `u = 0..U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridJson", into = "GridJson")]
pub struct FrequencyGrid {
    delta_u_hz: f64,
    base_cycles: u64,
    num_subcarriers: usize,
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    f0_hz: f64,
    delta_u_hz: f64,
    #[serde(rename = "U")]
    num_subcarriers: usize,
}

impl TryFrom<GridJson> for FrequencyGrid {
    type Error = Error;

    fn try_from(g: GridJson) -> Result<Self> {
        FrequencyGrid::new(g.f0_hz, g.delta_u_hz, g.num_subcarriers)
    }
}

impl From<FrequencyGrid> for GridJson {
    fn from(g: FrequencyGrid) -> Self {
        GridJson {
            f0_hz: g.f0_hz(),
            delta_u_hz: g.delta_u_hz,
            num_subcarriers: g.num_subcarriers,
        }
    }
}

impl FrequencyGrid {
    /// Builds a grid from its lowest frequency and spacing. `f0_hz / delta_u_hz`
    /// must be a positive integer (to 1e-9 relative).
    pub fn new(f0_hz: f64, delta_u_hz: f64, num_subcarriers: usize) -> Result<Self> {
        if !(delta_u_hz.is_finite() && delta_u_hz > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "subcarrier spacing must be positive, got {delta_u_hz}"
            )));
        }
        if !(f0_hz.is_finite() && f0_hz > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "lowest subcarrier must be positive, got {f0_hz}"
            )));
        }
        let ratio = f0_hz / delta_u_hz;
        let cycles = ratio.round();
        if cycles < 1.0 || (ratio - cycles).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "f0 / delta_u = {ratio} is not a positive integer"
            )));
        }
        Self::from_cycles(cycles as u64, delta_u_hz, num_subcarriers)
    }

    /// Builds a grid whose lowest tone completes `base_cycles` cycles per period.
    pub fn from_cycles(base_cycles: u64, delta_u_hz: f64, num_subcarriers: usize) -> Result<Self> {
        if base_cycles == 0 {
            return Err(Error::InvalidGrid("f0 / delta_u must be at least 1".into()));
        }
        if num_subcarriers == 0 {
            return Err(Error::InvalidGrid(
                "at least one subcarrier required".into(),
            ));
        }
        if !(delta_u_hz.is_finite() && delta_u_hz > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "subcarrier spacing must be positive, got {delta_u_hz}"
            )));
        }
        Ok(Self {
            delta_u_hz,
            base_cycles,
            num_subcarriers,
        })
    }

    /// Small grid used for validation runs: 32 carrier cycles per period,
    /// `U = 16`, `delta_u = 62.5 kHz`.
    pub fn desk_scale() -> Self {
        Self {
            delta_u_hz: 62.5e3,
            base_cycles: 32,
            num_subcarriers: 16,
        }
    }

    /// The full 915 MHz / 10 MHz configuration with `U = 160` and
    /// `delta_u = 62.5 kHz`. Passband quadrature on this grid needs on the
    /// order of 10^6 samples per integral.
    pub fn full_scale() -> Self {
        let delta = 62.5e3;
        let f_min = 915e6 - 5e6;
        Self {
            delta_u_hz: delta,
            base_cycles: (f_min / delta).ceil() as u64,
            num_subcarriers: 160,
        }
    }

    pub fn f0_hz(&self) -> f64 {
        self.base_cycles as f64 * self.delta_u_hz
    }

    pub fn delta_u_hz(&self) -> f64 {
        self.delta_u_hz
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    /// `f_0 / delta_u`.
    pub fn base_cycles(&self) -> u64 {
        self.base_cycles
    }

    /// `T = 1 / delta_u`.
    pub fn period(&self) -> f64 {
        1.0 / self.delta_u_hz
    }

    /// Cycles per period of subcarrier `u`.
    pub fn harmonic(&self, u: usize) -> u64 {
        self.base_cycles + u as u64
    }

    pub fn harmonics(&self) -> Vec<u64> {
        (0..self.num_subcarriers)
            .map(|u| self.harmonic(u))
            .collect()
    }

    pub fn frequency(&self, u: usize) -> f64 {
        self.harmonic(u) as f64 * self.delta_u_hz
    }

    pub fn angular_frequency(&self, u: usize) -> f64 {
        TAU * self.frequency(u)
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequency(self.num_subcarriers - 1)
    }

    /// Grid of `n` equally spaced subcarriers spanning the same band with
    /// spacing `delta_u * U / n`, which is the conventional design without
    /// subcarrier selection. Requires `n` to divide `U` and the coarser
    /// spacing to keep `f_0` on an integer cycle count.
    pub fn coarsened(&self, n: usize) -> Result<Self> {
        if n == 0 || !self.num_subcarriers.is_multiple_of(n) {
            return Err(Error::InvalidGrid(format!(
                "{n} does not divide U = {}",
                self.num_subcarriers
            )));
        }
        let stride = (self.num_subcarriers / n) as u64;
        if !self.base_cycles.is_multiple_of(stride) {
            return Err(Error::InvalidGrid(format!(
                "f0 / delta_u = {} is not divisible by the stride {stride}",
                self.base_cycles
            )));
        }
        Self::from_cycles(
            self.base_cycles / stride,
            self.delta_u_hz * stride as f64,
            n,
        )
    }
}

/// Sum of tones `Re{ sum_i c_i exp(j 2 pi n_i t / T) }` with integer
/// harmonic indices `n_i`. Both transmit and received signals reduce to this
/// form, which makes uniform sampling over one period an inverse FFT.
#[derive(Debug, Clone, PartialEq)]
pub struct Multitone {
    period: f64,
    harmonics: Vec<u64>,
    coefficients: Vec<Complex64>,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn inverse_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

pub(crate) fn forward_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

impl Multitone {
    pub fn new(period: f64, harmonics: Vec<u64>, coefficients: Vec<Complex64>) -> Result<Self> {
        if harmonics.len() != coefficients.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} harmonics but {} coefficients",
                harmonics.len(),
                coefficients.len()
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "period must be positive, got {period}"
            )));
        }
        Ok(Self {
            period,
            harmonics,
            coefficients,
        })
    }

    /// Tones on every subcarrier of `grid` with the given complex coefficients.
    pub fn on_grid(grid: &FrequencyGrid, coefficients: Vec<Complex64>) -> Result<Self> {
        Self::new(grid.period(), grid.harmonics(), coefficients)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn harmonics(&self) -> &[u64] {
        &self.harmonics
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Value at time `t` (seconds).
    pub fn value(&self, t: f64) -> f64 {
        let x = (t / self.period).rem_euclid(1.0);
        self.harmonics
            .iter()
            .zip(&self.coefficients)
            .map(|(&n, c)| {
                let phase = TAU * (n as f64 * x).rem_euclid(1.0);
                c.re * phase.cos() - c.im * phase.sin()
            })
            .sum()
    }

    /// Values at `t_i = i T / count`, `i = 0..count`.
    pub fn sample(&self, count: usize) -> Vec<f64> {
        if count == 0 {
            return Vec::new();
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); count];
        for (&n, &c) in self.harmonics.iter().zip(&self.coefficients) {
            buf[(n % count as u64) as usize] += c;
        }
        inverse_fft(count).process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Mean of the squared signal over one period, `sum |c|^2 / 2` for
    /// distinct harmonics.
    pub fn mean_square(&self) -> f64 {
        let mut sorted: Vec<(u64, Complex64)> = self
            .harmonics
            .iter()
            .copied()
            .zip(self.coefficients.iter().copied())
            .collect();
        sorted.sort_by_key(|(n, _)| *n);
        let mut total = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let n = sorted[i].0;
            let mut c = Complex64::new(0.0, 0.0);
            while i < sorted.len() && sorted[i].0 == n {
                c += sorted[i].1;
                i += 1;
            }
            total += if n == 0 {
                c.re * c.re
            } else {
                c.norm_sqr() / 2.0
            };
        }
        total
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            period: self.period,
            harmonics: self.harmonics.clone(),
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Uniform samples over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSamples {
    pub values: Vec<f64>,
    pub period: f64,
}

impl TimeSamples {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let q = self.values.len() as f64;
        (0..self.values.len()).map(move |i| self.period * i as f64 / q)
    }
}

/// Samples `signal` at `t_q = T q / Q`, `q = 0..Q`.
pub fn sample_period(
    signal: impl Fn(f64) -> f64,
    grid: &FrequencyGrid,
    count: usize,
) -> Result<TimeSamples> {
    if count < 2 {
        return Err(Error::TooFewSamples { min: 2, got: count });
    }
    let period = grid.period();
    let values = (0..count)
        .map(|q| signal(period * q as f64 / count as f64))
        .collect();
    Ok(TimeSamples { values, period })
}

/// Peak-to-average power ratio in dB: `10 log10(max v^2 / mean v^2)`.
pub fn papr(samples: &TimeSamples) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: samples.len(),
        });
    }
    let peak = samples.values.iter().map(|v| v * v).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::UndefinedPapr);
    }
    let mean = samples.values.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64;
    Ok(10.0 * (peak / mean).log10())
}

/// Complex sinewave coefficients `s_{m,u} exp(j phi_{m,u})`, one row per
/// antenna, amplitudes in sqrt(W).
#[derive(Debug, Clone, PartialEq)]
pub struct MultisineWaveform {
    grid: FrequencyGrid,
    num_antennas: usize,
    coefficients: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct CoefficientJson {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct WaveformJson {
    grid: FrequencyGrid,
    coefficients: Vec<Vec<CoefficientJson>>,
}

impl MultisineWaveform {
    /// `coefficients` is row-major `M x U`.
    pub fn new(
        grid: FrequencyGrid,
        num_antennas: usize,
        coefficients: Vec<Complex64>,
    ) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::DimensionMismatch(
                "at least one antenna required".into(),
            ));
        }
        if coefficients.len() != num_antennas * grid.num_subcarriers() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} antennas x {} subcarriers",
                coefficients.len(),
                num_antennas,
                grid.num_subcarriers()
            )));
        }
        if coefficients
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "non-finite waveform coefficient".into(),
            ));
        }
        Ok(Self {
            grid,
            num_antennas,
            coefficients,
        })
    }

    pub fn zeros(grid: FrequencyGrid, num_antennas: usize) -> Self {
        Self {
            grid,
            num_antennas,
            coefficients: vec![Complex64::new(0.0, 0.0); num_antennas * grid.num_subcarriers()],
        }
    }

    /// Builds a waveform from amplitudes `s_{m,u} >= 0` and phases (row-major).
    pub fn from_polar(
        grid: FrequencyGrid,
        num_antennas: usize,
        amplitudes: &[f64],
        phases: &[f64],
    ) -> Result<Self> {
        if amplitudes.len() != phases.len() {
            return Err(Error::DimensionMismatch(
                "amplitude and phase lengths differ".into(),
            ));
        }
        if amplitudes.iter().any(|&a| a < 0.0) {
            return Err(Error::InvalidParameter(
                "amplitudes must be non-negative".into(),
            ));
        }
        let coefficients = amplitudes
            .iter()
            .zip(phases)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        Self::new(grid, num_antennas, coefficients)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_subcarriers(&self) -> usize {
        self.grid.num_subcarriers()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficient(&self, m: usize, u: usize) -> Complex64 {
        self.coefficients[m * self.num_subcarriers() + u]
    }

    pub fn set_coefficient(&mut self, m: usize, u: usize, value: Complex64) {
        let idx = m * self.num_subcarriers() + u;
        self.coefficients[idx] = value;
    }

    pub fn amplitude(&self, m: usize, u: usize) -> f64 {
        self.coefficient(m, u).norm()
    }

    /// Phase in `[0, 2 pi)`.
    pub fn phase(&self, m: usize, u: usize) -> f64 {
        self.coefficient(m, u).arg().rem_euclid(TAU)
    }

    pub fn row(&self, m: usize) -> Result<&[Complex64]> {
        self.check_antenna(m)?;
        let n = self.num_subcarriers();
        Ok(&self.coefficients[m * n..(m + 1) * n])
    }

    fn check_antenna(&self, m: usize) -> Result<()> {
        if m >= self.num_antennas {
            return Err(Error::AntennaOutOfRange {
                index: m,
                count: self.num_antennas,
            });
        }
        Ok(())
    }

    /// `sum_m ||s_m||^2` in watts.
    pub fn total_power(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Threshold below which an amplitude counts as switched off:
    /// `1e-7 * sqrt(P_T / (M U))`.
    pub fn cardinality_epsilon(
        power_budget_w: f64,
        num_antennas: usize,
        num_subcarriers: usize,
    ) -> f64 {
        1e-7 * (power_budget_w / (num_antennas * num_subcarriers) as f64).sqrt()
    }

    /// Number of subcarriers on antenna `m` with amplitude above `epsilon`.
    pub fn cardinality(&self, m: usize, epsilon: f64) -> Result<usize> {
        Ok(self.row(m)?.iter().filter(|c| c.norm() > epsilon).count())
    }

    /// Transmit signal of antenna `m` as a tone sum (`sqrt(2)` included).
    pub fn transmit_tones(&self, m: usize) -> Result<Multitone> {
        let row = self.row(m)?;
        Multitone::on_grid(&self.grid, row.iter().map(|c| c * SQRT_2).collect())
    }

    /// `x_m(t) = Re{ sum_u sqrt(2) s_{m,u} exp(j w_u t) }`.
    pub fn synthesize_transmit(&self, m: usize, t: f64) -> Result<f64> {
        Ok(self.transmit_tones(m)?.value(t))
    }

    /// Tone sum of the signal incident at receiver `k`,
    /// `y_k(t) = Re{ sum_m sum_u sqrt(2) h_{k,m,u} s_{m,u} exp(j w_u t) }`.
    pub fn received_tones(&self, response: &ChannelResponse, k: usize) -> Result<Multitone> {
        self.check_response(response)?;
        if k >= response.num_receivers() {
            return Err(Error::ReceiverOutOfRange {
                index: k,
                count: response.num_receivers(),
            });
        }
        let u_count = self.num_subcarriers();
        let coefficients = (0..u_count)
            .map(|u| {
                let sum: Complex64 = (0..self.num_antennas)
                    .map(|m| response.get(k, m, u) * self.coefficient(m, u))
                    .sum();
                sum * SQRT_2
            })
            .collect();
        Multitone::on_grid(&self.grid, coefficients)
    }

    fn check_response(&self, response: &ChannelResponse) -> Result<()> {
        if response.num_antennas() != self.num_antennas
            || response.num_subcarriers() != self.num_subcarriers()
        {
            return Err(Error::DimensionMismatch(format!(
                "channel is {}x{} (M x U), waveform is {}x{}",
                response.num_antennas(),
                response.num_subcarriers(),
                self.num_antennas,
                self.num_subcarriers()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let n = self.num_subcarriers();
        let doc = WaveformJson {
            grid: self.grid,
            coefficients: self
                .coefficients
                .chunks(n)
                .map(|row| {
                    row.iter()
                        .map(|c| CoefficientJson { re: c.re, im: c.im })
                        .collect()
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: WaveformJson = serde_json::from_str(text)?;
        let m = doc.coefficients.len();
        let coefficients = doc
            .coefficients
            .into_iter()
            .flat_map(|row| row.into_iter().map(|c| Complex64::new(c.re, c.im)))
            .collect();
        Self::new(doc.grid, m, coefficients)
    }
}

/// Received signal `y_k(t)` in the polar/complex form.
pub fn received_signal(
    waveform: &MultisineWaveform,
    response: &ChannelResponse,
    k: usize,
    t: f64,
) -> Result<f64> {
    Ok(waveform.received_tones(response, k)?.value(t))
}

/// Received signal evaluated through the real basis functions
/// `g_bar = h_re cos(wt) - h_im sin(wt)` and `g_hat = -(h_re sin(wt) + h_im cos(wt))`
/// acting on the real and imaginary parts of the coefficients.
pub fn received_signal_cartesian(
    waveform: &MultisineWaveform,
    response: &ChannelResponse,
    k: usize,
    t: f64,
) -> Result<f64> {
    waveform.check_response(response)?;
    if k >= response.num_receivers() {
        return Err(Error::ReceiverOutOfRange {
            index: k,
            count: response.num_receivers(),
        });
    }
    let grid = waveform.grid();
    let x = (t / grid.period()).rem_euclid(1.0);
    let mut total = 0.0;
    for u in 0..grid.num_subcarriers() {
        let phase = 2.0 * PI * (grid.harmonic(u) as f64 * x).rem_euclid(1.0);
        let (sin, cos) = phase.sin_cos();
        for m in 0..waveform.num_antennas() {
            let h = response.get(k, m, u);
            let s = waveform.coefficient(m, u);
            let g_bar = h.re * cos - h.im * sin;
            let g_hat = -(h.re * sin + h.im * cos);
            total += SQRT_2 * (g_bar * s.re + g_hat * s.im);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_tone(amplitude: f64) -> MultisineWaveform {
        let grid = FrequencyGrid::desk_scale();
        let mut w = MultisineWaveform::zeros(grid, 1);
        w.set_coefficient(0, 0, Complex64::new(amplitude, 0.0));
        w
    }

    #[test]
    fn grid_rejects_non_integer_ratio() {
        assert!(FrequencyGrid::new(1.5e6, 1e6, 4).is_err());
        assert!(FrequencyGrid::new(2e6, 0.0, 4).is_err());
        assert!(FrequencyGrid::new(2e6, 1e6, 0).is_err());
        let g = FrequencyGrid::new(2e6, 1e6, 4).unwrap();
        assert_eq!(g.base_cycles(), 2);
        assert_relative_eq!(g.period(), 1e-6);
    }

    #[test]
    fn full_scale_grid_matches_band() {
        let g = FrequencyGrid::full_scale();
        assert_eq!(g.num_subcarriers(), 160);
        assert_relative_eq!(g.period(), 16e-6, max_relative = 1e-12);
        assert_relative_eq!(g.f0_hz(), 910e6);
        assert!(g.max_frequency() <= 920e6);
    }

    #[test]
    fn coarsened_grid_is_a_subset() {
        let g = FrequencyGrid::from_cycles(32, 62.5e3, 32).unwrap();
        let c = g.coarsened(8).unwrap();
        assert_eq!(c.num_subcarriers(), 8);
        for i in 0..8 {
            assert_relative_eq!(c.frequency(i), g.frequency(4 * i));
        }
        assert!(g.coarsened(5).is_err());
        let odd = FrequencyGrid::from_cycles(33, 62.5e3, 32).unwrap();
        assert!(odd.coarsened(8).is_err());
    }

    #[test]
    fn single_tone_peak_is_sqrt2() {
        let w = single_tone(1.0);
        assert_relative_eq!(
            w.synthesize_transmit(0, 0.0).unwrap(),
            SQRT_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn coherent_tones_add_up() {
        let grid = FrequencyGrid::desk_scale();
        let n = 5;
        let s = 0.3;
        let mut w = MultisineWaveform::zeros(grid, 1);
        for u in 0..n {
            w.set_coefficient(0, u, Complex64::new(s, 0.0));
        }
        assert_relative_eq!(
            w.synthesize_transmit(0, 0.0).unwrap(),
            SQRT_2 * n as f64 * s,
            epsilon = 1e-14
        );
    }

    #[test]
    fn antenna_out_of_range() {
        let w = single_tone(1.0);
        assert!(matches!(
            w.synthesize_transmit(1, 0.0),
            Err(Error::AntennaOutOfRange { index: 1, count: 1 })
        ));
    }

    #[test]
    fn total_power_examples() {
        let grid = FrequencyGrid::desk_scale();
        assert_eq!(MultisineWaveform::zeros(grid, 2).total_power(), 0.0);
        let mut w = MultisineWaveform::zeros(grid, 2);
        w.set_coefficient(1, 3, Complex64::from_polar(2.0, 0.7));
        assert_relative_eq!(w.total_power(), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn cardinality_threshold() {
        let grid = FrequencyGrid::desk_scale();
        let eps = MultisineWaveform::cardinality_epsilon(1.0, 1, 16);
        let mut w = MultisineWaveform::zeros(grid, 1);
        assert_eq!(w.cardinality(0, eps).unwrap(), 0);
        w.set_coefficient(0, 0, Complex64::new(1.0, 0.0));
        w.set_coefficient(0, 4, Complex64::new(0.0, -0.5));
        w.set_coefficient(0, 9, Complex64::new(0.2, 0.2));
        assert_eq!(w.cardinality(0, eps).unwrap(), 3);
        w.set_coefficient(0, 10, Complex64::new(0.9 * eps, 0.0));
        assert_eq!(w.cardinality(0, eps).unwrap(), 3);
    }

    #[test]
    fn papr_examples() {
        let constant = TimeSamples {
            values: vec![2.0; 16],
            period: 1.0,
        };
        assert_relative_eq!(papr(&constant).unwrap(), 0.0, epsilon = 1e-12);
        let zero = TimeSamples {
            values: vec![0.0; 16],
            period: 1.0,
        };
        assert!(matches!(papr(&zero), Err(Error::UndefinedPapr)));

        let tone = single_tone(0.7).transmit_tones(0).unwrap();
        let samples = TimeSamples {
            values: tone.sample(4096),
            period: tone.period(),
        };
        assert_relative_eq!(papr(&samples).unwrap(), 10.0 * 2f64.log10(), epsilon = 1e-9);
    }

    #[test]
    fn papr_of_coherent_32_tones() {
        let grid = FrequencyGrid::from_cycles(32, 62.5e3, 32).unwrap();
        let w = MultisineWaveform::new(grid, 1, vec![Complex64::new(0.1, 0.0); 32]).unwrap();
        let tones = w.transmit_tones(0).unwrap();
        let samples = TimeSamples {
            values: tones.sample(1 << 14),
            period: tones.period(),
        };
        assert_relative_eq!(
            papr(&samples).unwrap(),
            10.0 * 64f64.log10(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn sample_period_examples() {
        let grid = FrequencyGrid::desk_scale();
        let s = sample_period(|_| 5.0, &grid, 4).unwrap();
        assert_eq!(s.values, vec![5.0; 4]);
        assert!(matches!(
            sample_period(|_| 0.0, &grid, 1),
            Err(Error::TooFewSamples { .. })
        ));

        // Four samples per carrier cycle land on quarter-cycle points.
        let f0 = grid.f0_hz();
        let q = 4 * grid.base_cycles() as usize;
        let s = sample_period(|t| (TAU * f0 * t).cos(), &grid, q).unwrap();
        for (i, v) in s.values.iter().enumerate() {
            let expected = [1.0, 0.0, -1.0, 0.0][i % 4];
            assert!((v - expected).abs() < 1e-9, "sample {i}: {v}");
        }

        let w = single_tone(0.5);
        let s = sample_period(|t| w.synthesize_transmit(0, t).unwrap(), &grid, 2).unwrap();
        assert_relative_eq!(s.values[0], SQRT_2 * 0.5, epsilon = 1e-14);
        // f0 completes an even number of cycles per period, so T/2 is a crest too.
        assert_relative_eq!(s.values[1], SQRT_2 * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn fft_sampling_matches_direct_evaluation() {
        let grid = FrequencyGrid::desk_scale();
        let coefficients: Vec<Complex64> = (0..16)
            .map(|u| Complex64::from_polar(0.1 + 0.01 * u as f64, 0.37 * u as f64))
            .collect();
        let tones = Multitone::on_grid(&grid, coefficients).unwrap();
        // 40 samples alias the harmonics 32..47; the FFT path must still be exact.
        for count in [40, 256] {
            let fast = tones.sample(count);
            for (i, v) in fast.iter().enumerate() {
                let t = tones.period() * i as f64 / count as f64;
                assert_relative_eq!(*v, tones.value(t), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn waveform_json_round_trip() {
        let grid = FrequencyGrid::desk_scale();
        let coefficients = (0..32)
            .map(|i| Complex64::new(i as f64 * 0.01, -(i as f64) * 0.02))
            .collect();
        let w = MultisineWaveform::new(grid, 2, coefficients).unwrap();
        let text = w.to_json().unwrap();
        assert!(text.contains("\"f0_hz\""));
        assert!(text.contains("\"U\""));
        let back = MultisineWaveform::from_json(&text).unwrap();
        assert_eq!(back, w);
    }
}
