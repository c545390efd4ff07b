//! Multipath channels between the transmit antennas and each receiver.
//!
//! Realizations are drawn from ChaCha20 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`. Draw order is fixed: for each receiver `k`, for each
//! antenna `m`, for each path, one uniform draw for the delay followed by one
//! for the phase. Path amplitudes are deterministic: the path loss is split
//! equally over the paths.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::FrequencyGrid;

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub alpha: f64,
    pub tau_s: f64,
    pub xi_rad: f64,
}

/// Paths for every (receiver, antenna) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipathChannel {
    #[serde(rename = "K")]
    num_receivers: usize,
    #[serde(rename = "M")]
    num_antennas: usize,
    /// Indexed `[k][m][l]`.
    paths: Vec<Vec<Vec<Path>>>,
}

impl MultipathChannel {
    pub fn new(paths: Vec<Vec<Vec<Path>>>) -> Result<Self> {
        let k = paths.len();
        if k == 0 {
            return Err(Error::DimensionMismatch(
                "at least one receiver required".into(),
            ));
        }
        let m = paths[0].len();
        if m == 0 {
            return Err(Error::DimensionMismatch(
                "at least one antenna required".into(),
            ));
        }
        let ch = Self {
            num_receivers: k,
            num_antennas: m,
            paths,
        };
        ch.validate()?;
        Ok(ch)
    }

    fn validate(&self) -> Result<()> {
        if self.paths.len() != self.num_receivers {
            return Err(Error::DimensionMismatch(format!(
                "K = {} but {} path groups",
                self.num_receivers,
                self.paths.len()
            )));
        }
        for (k, per_k) in self.paths.iter().enumerate() {
            if per_k.len() != self.num_antennas {
                return Err(Error::DimensionMismatch(format!(
                    "receiver {k} has {} antennas, expected {}",
                    per_k.len(),
                    self.num_antennas
                )));
            }
            for (m, per_m) in per_k.iter().enumerate() {
                if per_m.is_empty() {
                    return Err(Error::InvalidParameter(format!(
                        "no paths for (k={k}, m={m})"
                    )));
                }
                for p in per_m {
                    if !(p.alpha.is_finite() && p.alpha >= 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "path amplitude {}",
                            p.alpha
                        )));
                    }
                    if !(p.tau_s.is_finite() && p.tau_s >= 0.0) {
                        return Err(Error::InvalidParameter(format!("path delay {}", p.tau_s)));
                    }
                    if !p.xi_rad.is_finite() {
                        return Err(Error::InvalidParameter(format!("path phase {}", p.xi_rad)));
                    }
                }
            }
        }
        Ok(())
    }

    /// A single unit path with no delay or phase for every pair.
    pub fn flat(num_receivers: usize, num_antennas: usize) -> Self {
        let path = Path {
            alpha: 1.0,
            tau_s: 0.0,
            xi_rad: 0.0,
        };
        Self {
            num_receivers,
            num_antennas,
            paths: vec![vec![vec![path]; num_antennas]; num_receivers],
        }
    }

    pub fn num_receivers(&self) -> usize {
        self.num_receivers
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn paths(&self, k: usize, m: usize) -> &[Path] {
        &self.paths[k][m]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ch: Self = serde_json::from_str(text)?;
        ch.validate()?;
        Ok(ch)
    }
}

/// Parameters of the equal-power multipath profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub num_paths: usize,
    /// Path loss per receiver in dB. A single entry applies to every receiver.
    pub path_loss_db: Vec<f64>,
    pub delay_min_s: f64,
    pub delay_max_s: f64,
    pub seed: u64,
    #[serde(rename = "K")]
    pub num_receivers: usize,
    #[serde(rename = "M")]
    pub num_antennas: usize,
}

impl ChannelSpec {
    /// Five paths, 45.65 dB loss, delays uniform over [0, 0.3] us.
    pub fn nlos(num_receivers: usize, num_antennas: usize, seed: u64) -> Self {
        Self {
            num_paths: 5,
            path_loss_db: vec![45.65],
            delay_min_s: 0.0,
            delay_max_s: 0.3e-6,
            seed,
            num_receivers,
            num_antennas,
        }
    }

    pub fn path_loss_for(&self, k: usize) -> f64 {
        if self.path_loss_db.len() == 1 {
            self.path_loss_db[0]
        } else {
            self.path_loss_db[k]
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_paths == 0 {
            return Err(Error::InvalidParameter(
                "num_paths must be at least 1".into(),
            ));
        }
        if self.num_receivers == 0 || self.num_antennas == 0 {
            return Err(Error::InvalidParameter("K and M must be at least 1".into()));
        }
        if !(self.delay_min_s >= 0.0 && self.delay_max_s >= self.delay_min_s) {
            return Err(Error::InvalidParameter(format!(
                "delay range [{}, {}] must be non-negative and ordered",
                self.delay_min_s, self.delay_max_s
            )));
        }
        if self.path_loss_db.len() != 1 && self.path_loss_db.len() != self.num_receivers {
            return Err(Error::InvalidParameter(format!(
                "{} path losses for K = {}",
                self.path_loss_db.len(),
                self.num_receivers
            )));
        }
        if self.path_loss_db.iter().any(|pl| !pl.is_finite()) {
            return Err(Error::InvalidParameter("non-finite path loss".into()));
        }
        Ok(())
    }
}

/// Draws a channel realization; deterministic in `spec.seed`.
pub fn generate_channel(spec: &ChannelSpec) -> Result<MultipathChannel> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let span = spec.delay_max_s - spec.delay_min_s;
    let paths = (0..spec.num_receivers)
        .map(|k| {
            let gain = 10f64.powf(-spec.path_loss_for(k) / 10.0);
            let alpha = (gain / spec.num_paths as f64).sqrt();
            (0..spec.num_antennas)
                .map(|_| {
                    (0..spec.num_paths)
                        .map(|_| {
                            let tau_s = spec.delay_min_s + span * rng.gen::<f64>();
                            let xi_rad = TAU * rng.gen::<f64>();
                            Path {
                                alpha,
                                tau_s,
                                xi_rad,
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(MultipathChannel {
        num_receivers: spec.num_receivers,
        num_antennas: spec.num_antennas,
        paths,
    })
}

/// Frequency response `h_{k,m,u}` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResponse {
    grid: FrequencyGrid,
    num_receivers: usize,
    num_antennas: usize,
    /// Row-major `[k][m][u]`.
    values: Vec<Complex64>,
}

impl ChannelResponse {
    pub fn new(
        grid: FrequencyGrid,
        num_receivers: usize,
        num_antennas: usize,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if values.len() != num_receivers * num_antennas * grid.num_subcarriers() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for K={num_receivers}, M={num_antennas}, U={}",
                values.len(),
                grid.num_subcarriers()
            )));
        }
        if values
            .iter()
            .any(|h| !(h.re.is_finite() && h.im.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "non-finite channel response".into(),
            ));
        }
        Ok(Self {
            grid,
            num_receivers,
            num_antennas,
            values,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn num_receivers(&self) -> usize {
        self.num_receivers
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_subcarriers(&self) -> usize {
        self.grid.num_subcarriers()
    }

    fn index(&self, k: usize, m: usize, u: usize) -> usize {
        (k * self.num_antennas + m) * self.num_subcarriers() + u
    }

    pub fn get(&self, k: usize, m: usize, u: usize) -> Complex64 {
        self.values[self.index(k, m, u)]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// The `M x U` block of receiver `k`.
    pub fn receiver(&self, k: usize) -> Result<ErChannel> {
        if k >= self.num_receivers {
            return Err(Error::ReceiverOutOfRange {
                index: k,
                count: self.num_receivers,
            });
        }
        let n = self.num_antennas * self.num_subcarriers();
        Ok(ErChannel {
            grid: self.grid,
            num_antennas: self.num_antennas,
            values: self.values[k * n..(k + 1) * n].to_vec(),
        })
    }

    /// Effective gain `b_u = sqrt(sum_m |h_{k,m,u}|^2)` of receiver `k`.
    pub fn effective_gain(&self, k: usize) -> Result<Vec<f64>> {
        Ok(self.receiver(k)?.effective_gain())
    }

    /// Response rows as CSV with header `k,m,u,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,m,u,re,im\n");
        for k in 0..self.num_receivers {
            for m in 0..self.num_antennas {
                for u in 0..self.num_subcarriers() {
                    let h = self.get(k, m, u);
                    let _ = writeln!(out, "{k},{m},{u},{:e},{:e}", h.re, h.im);
                }
            }
        }
        out
    }

    /// Parses the CSV written by [`ChannelResponse::to_csv`].
    pub fn from_csv(grid: FrequencyGrid, text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (line_no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let bad =
                || Error::InvalidParameter(format!("malformed response CSV line {}", line_no + 1));
            if fields.len() != 5 {
                return Err(bad());
            }
            let k: usize = fields[0].trim().parse().map_err(|_| bad())?;
            let m: usize = fields[1].trim().parse().map_err(|_| bad())?;
            let u: usize = fields[2].trim().parse().map_err(|_| bad())?;
            let re: f64 = fields[3].trim().parse().map_err(|_| bad())?;
            let im: f64 = fields[4].trim().parse().map_err(|_| bad())?;
            rows.push((k, m, u, Complex64::new(re, im)));
        }
        let k_count = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
        let m_count = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        let u_count = grid.num_subcarriers();
        if rows.len() != k_count * m_count * u_count || rows.iter().any(|r| r.2 >= u_count) {
            return Err(Error::DimensionMismatch(
                "response CSV does not cover the grid".into(),
            ));
        }
        let mut values = vec![Complex64::new(0.0, 0.0); rows.len()];
        for (k, m, u, h) in rows {
            values[(k * m_count + m) * u_count + u] = h;
        }
        Self::new(grid, k_count, m_count, values)
    }
}

/// Channel of a single receiver: `M x U` complex gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ErChannel {
    grid: FrequencyGrid,
    num_antennas: usize,
    values: Vec<Complex64>,
}

impl ErChannel {
    pub fn new(grid: FrequencyGrid, num_antennas: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != num_antennas * grid.num_subcarriers() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for M={num_antennas}, U={}",
                values.len(),
                grid.num_subcarriers()
            )));
        }
        Ok(Self {
            grid,
            num_antennas,
            values,
        })
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

    pub fn get(&self, m: usize, u: usize) -> Complex64 {
        self.values[m * self.num_subcarriers() + u]
    }

    pub fn magnitude(&self, m: usize, u: usize) -> f64 {
        self.get(m, u).norm()
    }

    pub fn effective_gain(&self) -> Vec<f64> {
        (0..self.num_subcarriers())
            .map(|u| {
                (0..self.num_antennas)
                    .map(|m| self.get(m, u).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// As a single-receiver [`ChannelResponse`].
    pub fn to_response(&self) -> ChannelResponse {
        ChannelResponse {
            grid: self.grid,
            num_receivers: 1,
            num_antennas: self.num_antennas,
            values: self.values.clone(),
        }
    }
}

/// `h_{k,m,u} = sum_l alpha exp(j(-w_u tau + xi))`.
pub fn frequency_response(channel: &MultipathChannel, grid: &FrequencyGrid) -> ChannelResponse {
    let u_count = grid.num_subcarriers();
    let mut values = Vec::with_capacity(channel.num_receivers * channel.num_antennas * u_count);
    for per_k in &channel.paths {
        for per_m in per_k {
            for u in 0..u_count {
                let w = grid.angular_frequency(u);
                let h: Complex64 = per_m
                    .iter()
                    .map(|p| Complex64::from_polar(p.alpha, -w * p.tau_s + p.xi_rad))
                    .sum();
                values.push(h);
            }
        }
    }
    ChannelResponse {
        grid: *grid,
        num_receivers: channel.num_receivers,
        num_antennas: channel.num_antennas,
        values,
    }
}

/// Effective per-subcarrier gain of receiver `k`.
pub fn effective_gain(response: &ChannelResponse, k: usize) -> Result<Vec<f64>> {
    response.effective_gain(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equal_power_split() {
        let spec = ChannelSpec::nlos(1, 2, 3);
        let ch = generate_channel(&spec).unwrap();
        let expected = 10f64.powf(-4.565) / 5.0;
        for m in 0..2 {
            assert_eq!(ch.paths(0, m).len(), 5);
            for p in ch.paths(0, m) {
                assert_relative_eq!(p.alpha * p.alpha, expected, max_relative = 1e-12);
                assert!((0.0..=0.3e-6).contains(&p.tau_s));
                assert!((0.0..TAU).contains(&p.xi_rad));
            }
        }
    }

    #[test]
    fn zero_loss_single_path_is_unit() {
        let spec = ChannelSpec {
            num_paths: 1,
            path_loss_db: vec![0.0],
            delay_min_s: 0.0,
            delay_max_s: 0.0,
            seed: 0,
            num_receivers: 1,
            num_antennas: 1,
        };
        let ch = generate_channel(&spec).unwrap();
        assert_eq!(ch.paths(0, 0)[0].alpha, 1.0);
    }

    #[test]
    fn same_seed_same_channel() {
        let spec = ChannelSpec::nlos(2, 4, 99);
        let a = generate_channel(&spec).unwrap();
        let b = generate_channel(&spec).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = generate_channel(&ChannelSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn per_receiver_path_loss() {
        let mut spec = ChannelSpec::nlos(2, 1, 1);
        spec.path_loss_db = vec![40.0, 30.0];
        let ch = generate_channel(&spec).unwrap();
        assert_relative_eq!(
            ch.paths(0, 0)[0].alpha.powi(2) * 5.0,
            1e-4,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            ch.paths(1, 0)[0].alpha.powi(2) * 5.0,
            1e-3,
            max_relative = 1e-12
        );
        spec.path_loss_db = vec![1.0, 2.0, 3.0];
        assert!(generate_channel(&spec).is_err());
    }

    #[test]
    fn flat_channel_response_is_one() {
        let grid = FrequencyGrid::desk_scale();
        let h = frequency_response(&MultipathChannel::flat(1, 1), &grid);
        for u in 0..grid.num_subcarriers() {
            assert_eq!(h.get(0, 0, u), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn half_cycle_delay_flips_sign() {
        let grid = FrequencyGrid::desk_scale();
        let u = 5;
        let alpha = 0.25;
        let ch = MultipathChannel::new(vec![vec![vec![Path {
            alpha,
            tau_s: 1.0 / (2.0 * grid.frequency(u)),
            xi_rad: 0.0,
        }]]])
        .unwrap();
        let h = frequency_response(&ch, &grid).get(0, 0, u);
        assert!((h - Complex64::new(-alpha, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn opposite_phases_cancel() {
        let grid = FrequencyGrid::desk_scale();
        let tau = 0.1e-6;
        let ch = MultipathChannel::new(vec![vec![vec![
            Path {
                alpha: 0.5,
                tau_s: tau,
                xi_rad: 0.3,
            },
            Path {
                alpha: 0.5,
                tau_s: tau,
                xi_rad: 0.3 + std::f64::consts::PI,
            },
        ]]])
        .unwrap();
        let h = frequency_response(&ch, &grid);
        for u in 0..grid.num_subcarriers() {
            assert!(h.get(0, 0, u).norm() < 1e-15);
        }
    }

    #[test]
    fn effective_gain_examples() {
        let grid = FrequencyGrid::from_cycles(4, 1e3, 1).unwrap();
        let r = ChannelResponse::new(
            grid,
            1,
            2,
            vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)],
        )
        .unwrap();
        assert_relative_eq!(effective_gain(&r, 0).unwrap()[0], 5.0);

        let r1 = ChannelResponse::new(grid, 1, 1, vec![Complex64::new(-0.6, 0.8)]).unwrap();
        assert_relative_eq!(effective_gain(&r1, 0).unwrap()[0], 1.0);
        assert!(effective_gain(&r1, 1).is_err());
    }

    #[test]
    fn triangle_inequality_and_zero_path() {
        let grid = FrequencyGrid::desk_scale();
        let ch = generate_channel(&ChannelSpec::nlos(2, 3, 5)).unwrap();
        let h = frequency_response(&ch, &grid);
        for k in 0..2 {
            for m in 0..3 {
                let bound: f64 = ch.paths(k, m).iter().map(|p| p.alpha).sum();
                for u in 0..grid.num_subcarriers() {
                    assert!(h.get(k, m, u).norm() <= bound * (1.0 + 1e-12));
                }
            }
        }
        let mut extended = ch.paths.clone();
        extended[0][0].push(Path {
            alpha: 0.0,
            tau_s: 1e-7,
            xi_rad: 1.0,
        });
        let h2 = frequency_response(&MultipathChannel::new(extended).unwrap(), &grid);
        assert_eq!(h.values(), h2.values());
    }

    #[test]
    fn json_and_csv_round_trip() {
        let grid = FrequencyGrid::desk_scale();
        let ch = generate_channel(&ChannelSpec::nlos(2, 2, 11)).unwrap();
        let text = ch.to_json().unwrap();
        assert!(text.contains("\"tau_s\""));
        assert_eq!(MultipathChannel::from_json(&text).unwrap(), ch);

        let h = frequency_response(&ch, &grid);
        let back = ChannelResponse::from_csv(grid, &h.to_csv()).unwrap();
        for (a, b) in h.values().iter().zip(back.values()) {
            assert!((a - b).norm() <= 1e-15 * a.norm().max(1e-300));
        }
    }
}
