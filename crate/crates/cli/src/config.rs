//! Experiment configuration. Physical quantities carry unit suffixes.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rectwave::channels::{
    frequency_response, generate_channel, ChannelResponse, ChannelSpec, MultipathChannel,
};
use rectwave::multi_er::{default_saturation_samples, DcpConfig, MultiErProblem};
use rectwave::quadrature::QuadratureConfig;
use rectwave::rectenna::RectennaParams;
use rectwave::signals::FrequencyGrid;
use rectwave::single_er::{ScpConfig, SingleErSettings};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SingleEr,
    MultiEr,
    SweepPower,
    SweepTones,
    PowerRegion,
    BruteForce,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MethodChoice {
    Mrt,
    ScpQclp,
    Epa,
    SingleTone,
    Dcp,
}

impl MethodChoice {
    pub fn single_er(self) -> Option<rectwave::single_er::Method> {
        use rectwave::single_er::Method;
        match self {
            Self::Mrt => Some(Method::Mrt),
            Self::ScpQclp => Some(Method::ScpQclp),
            Self::Epa => Some(Method::Epa),
            Self::SingleTone => Some(Method::SingleTone),
            Self::Dcp => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Mrt => "mrt",
            Self::ScpQclp => "scp_qclp",
            Self::Epa => "epa",
            Self::SingleTone => "single_tone",
            Self::Dcp => "dcp",
        }
    }
}

/// Where the channel comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSource {
    /// Generated from a spec; its seed is overridden by the experiment seed
    /// unless `keep_seed` is set.
    Spec {
        #[serde(flatten)]
        spec: ChannelSpec,
        #[serde(default)]
        keep_seed: bool,
    },
    /// A multipath channel JSON file, relative to the config file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: MethodChoice,
    #[serde(rename = "N")]
    pub num_tones: usize,
    #[serde(rename = "P_T_W")]
    pub power_budget_w: f64,
    pub scp: ScpConfig,
    pub dcp: DcpConfig,
    /// Runs DCP from a start aimed at every receiver.
    pub multistart: bool,
    pub quadrature: Option<QuadratureConfig>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: MethodChoice::ScpQclp,
            num_tones: 4,
            power_budget_w: 1.0,
            scp: ScpConfig::default(),
            dcp: DcpConfig::default(),
            multistart: false,
            quadrature: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiConfig {
    pub weights: Vec<f64>,
    /// Breakdown samples per period; `None` uses `16 (f0 / delta + U)`.
    #[serde(rename = "Q")]
    pub saturation_samples: Option<usize>,
    pub saturation: bool,
}

impl Default for MultiConfig {
    fn default() -> Self {
        Self {
            weights: vec![0.5, 0.5],
            saturation_samples: None,
            saturation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "P_T_W")]
    pub power_budgets_w: Vec<f64>,
    #[serde(rename = "N")]
    pub tone_counts: Vec<usize>,
    pub methods: Vec<MethodChoice>,
    /// Also run each method on `N` equally spaced tones spanning the band.
    pub equally_spaced: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            power_budgets_w: (0..=8).map(|i| 10f64.powf(-2.0 + 0.5 * i as f64)).collect(),
            tone_counts: vec![1, 2, 4, 8, 16],
            methods: vec![
                MethodChoice::ScpQclp,
                MethodChoice::Epa,
                MethodChoice::SingleTone,
            ],
            equally_spaced: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    /// Points on the weight simplex, endpoints included.
    pub points: usize,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self { points: 11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BruteForceConfig {
    pub draws: u64,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        Self { draws: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "FrequencyGrid::desk_scale")]
    pub grid: FrequencyGrid,
    /// `None`: the default NLOS profile with four antennas and one receiver
    /// per weight (one for single-receiver scenarios).
    #[serde(default)]
    pub channel: Option<ChannelSource>,
    #[serde(default)]
    pub rectenna: RectennaParams,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub multi: MultiConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default)]
    pub brute_force: BruteForceConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory that relative channel files resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: 0,
            grid: FrequencyGrid::desk_scale(),
            channel: None,
            rectenna: RectennaParams::default(),
            optimizer: OptimizerConfig::default(),
            multi: MultiConfig::default(),
            sweep: SweepConfig::default(),
            region: RegionConfig::default(),
            brute_force: BruteForceConfig::default(),
            output: OutputConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Field-path checks that do not need the channel.
    pub fn validate(&self) -> Result<()> {
        self.rectenna.validate().context("rectenna")?;
        let o = &self.optimizer;
        if o.num_tones == 0 || o.num_tones > self.grid.num_subcarriers() {
            bail!(
                "optimizer.N: {} must lie in 1..={}",
                o.num_tones,
                self.grid.num_subcarriers()
            );
        }
        if !(o.power_budget_w > 0.0 && o.power_budget_w.is_finite()) {
            bail!(
                "optimizer.P_T_W: must be positive, got {}",
                o.power_budget_w
            );
        }
        o.dcp.validate().context("optimizer.dcp")?;
        if let Some(q) = &o.quadrature {
            q.validate().context("optimizer.quadrature")?;
        }
        if let Some(ChannelSource::Spec { spec, .. }) = &self.channel {
            if spec.num_receivers == 0 || spec.num_antennas == 0 || spec.num_paths == 0 {
                bail!("channel: K, M and num_paths must be at least 1");
            }
            if self.is_multi() && spec.num_receivers != self.multi.weights.len() {
                bail!(
                    "channel.K: {} receivers but {} weights",
                    spec.num_receivers,
                    self.multi.weights.len()
                );
            }
        }
        match self.scenario {
            Scenario::MultiEr | Scenario::PowerRegion | Scenario::BruteForce => {
                let sum: f64 = self.multi.weights.iter().sum();
                if self.multi.weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    bail!("multi.weights: must be non-negative and sum to 1");
                }
                if self.multi.saturation_samples.is_some_and(|q| q < 2) {
                    bail!("multi.Q: at least 2 samples are required");
                }
            }
            Scenario::SweepPower => {
                if self.sweep.power_budgets_w.is_empty()
                    || self.sweep.power_budgets_w.iter().any(|p| !(*p > 0.0))
                {
                    bail!("sweep.P_T_W: needs at least one positive budget");
                }
            }
            Scenario::SweepTones => {
                if self.sweep.tone_counts.is_empty()
                    || self
                        .sweep
                        .tone_counts
                        .iter()
                        .any(|&n| n == 0 || n > self.grid.num_subcarriers())
                {
                    bail!(
                        "sweep.N: every entry must lie in 1..={}",
                        self.grid.num_subcarriers()
                    );
                }
            }
            _ => {}
        }
        if self.scenario == Scenario::PowerRegion {
            if self.multi.weights.len() != 2 {
                bail!("multi.weights: power_region needs exactly two receivers");
            }
            if self.region.points < 2 {
                bail!("region.points: at least 2 points are required");
            }
        }
        if self.scenario == Scenario::BruteForce && self.brute_force.draws == 0 {
            bail!("brute_force.draws: at least one draw is required");
        }
        Ok(())
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        self.optimizer
            .quadrature
            .unwrap_or_else(|| QuadratureConfig::for_grid(&self.grid))
    }

    pub fn is_multi(&self) -> bool {
        matches!(
            self.scenario,
            Scenario::MultiEr | Scenario::PowerRegion | Scenario::BruteForce
        )
    }

    pub fn multipath(&self) -> Result<MultipathChannel> {
        let default = ChannelSource::Spec {
            spec: ChannelSpec::nlos(
                if self.is_multi() {
                    self.multi.weights.len()
                } else {
                    1
                },
                4,
                0,
            ),
            keep_seed: false,
        };
        match self.channel.as_ref().unwrap_or(&default) {
            ChannelSource::Spec { spec, keep_seed } => {
                let mut spec = spec.clone();
                if !keep_seed {
                    spec.seed = self.seed;
                }
                Ok(generate_channel(&spec).context("channel")?)
            }
            ChannelSource::File(path) => {
                let path = self.base_dir.join(path);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("channel: reading {}", path.display()))?;
                Ok(MultipathChannel::from_json(&text)
                    .with_context(|| format!("channel: parsing {}", path.display()))?)
            }
        }
    }

    pub fn response(&self) -> Result<ChannelResponse> {
        Ok(frequency_response(&self.multipath()?, &self.grid))
    }

    pub fn single_settings(&self) -> SingleErSettings {
        SingleErSettings {
            num_tones: self.optimizer.num_tones,
            power_budget_w: self.optimizer.power_budget_w,
            rectenna: self.rectenna,
            quadrature: self.quadrature(),
            scp: self.optimizer.scp,
        }
    }

    pub fn multi_problem(&self, response: ChannelResponse) -> Result<MultiErProblem> {
        let mut p = MultiErProblem::new(
            response,
            self.multi.weights.clone(),
            self.optimizer.num_tones,
            self.optimizer.power_budget_w,
            self.rectenna,
        )
        .context("multi")?;
        p.saturation_samples = self
            .multi
            .saturation_samples
            .unwrap_or_else(|| default_saturation_samples(&self.grid));
        p.enforce_saturation = self.multi.saturation;
        p.quadrature = self.quadrature();
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"scenario": "single_er"}"#).unwrap();
        assert_eq!(cfg.grid, FrequencyGrid::desk_scale());
        assert_eq!(cfg.rectenna, RectennaParams::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trips_through_json() {
        let mut cfg = ExperimentConfig::new(Scenario::MultiEr);
        cfg.channel = Some(ChannelSource::Spec {
            spec: ChannelSpec::nlos(2, 2, 3),
            keep_seed: true,
        });
        let back: ExperimentConfig = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back.channel, cfg.channel);
        assert_eq!(back.optimizer, cfg.optimizer);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let err =
            serde_json::from_str::<ExperimentConfig>(r#"{"scenario": "single_er", "bogus": 1}"#)
                .unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn errors_name_the_field() {
        let mut cfg = ExperimentConfig::new(Scenario::SingleEr);
        cfg.optimizer.num_tones = 99;
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .starts_with("optimizer.N"));
        let mut cfg = ExperimentConfig::new(Scenario::MultiEr);
        cfg.multi.weights = vec![0.7, 0.7];
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .starts_with("multi.weights"));
    }
}
