//! Scenario runners. Each returns named artifacts; payload rows depend only on
//! the configuration and seed.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use rectwave::channels::{frequency_response, ChannelResponse, ErChannel, MultipathChannel};
use rectwave::multi_er::{
    dcp_multistart, dcp_optimize, initial_point, random_search, DcpResult, MultiErProblem,
};
use rectwave::quadrature::QuadratureConfig;
use rectwave::signals::{papr, FrequencyGrid, MultisineWaveform, TimeSamples};
use rectwave::single_er::{optimize, SingleErResult, SingleErSettings};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MethodChoice, Scenario};

/// One output file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: &str, contents: String) -> Self {
        Self {
            name: name.to_string(),
            contents,
        }
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn from_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Waveform plus the constraints it was designed under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformArtifact {
    pub label: String,
    #[serde(rename = "P_T_W")]
    pub power_budget_w: f64,
    #[serde(rename = "N")]
    pub num_tones: usize,
    /// Breakdown samples per period, when the limit was enforced.
    #[serde(rename = "Q")]
    pub saturation_samples: Option<usize>,
    pub waveform: serde_json::Value,
}

impl WaveformArtifact {
    fn new(
        label: &str,
        w: &MultisineWaveform,
        power_budget_w: f64,
        num_tones: usize,
        q: Option<usize>,
    ) -> Result<Self> {
        Ok(Self {
            label: label.to_string(),
            power_budget_w,
            num_tones,
            saturation_samples: q,
            waveform: serde_json::from_str(&w.to_json()?)?,
        })
    }

    pub fn waveform(&self) -> Result<MultisineWaveform> {
        Ok(MultisineWaveform::from_json(&self.waveform.to_string())?)
    }
}

fn waveforms_artifact(items: &[WaveformArtifact]) -> Result<Artifact> {
    Ok(Artifact::new(
        "waveforms.json",
        serde_json::to_string_pretty(items)?,
    ))
}

/// PAPR of the received signal at receiver `k`, sampled at the quadrature's
/// starting resolution.
pub fn received_papr_db(
    w: &MultisineWaveform,
    h: &ChannelResponse,
    k: usize,
    q: &QuadratureConfig,
) -> Result<f64> {
    let y = w.received_tones(h, k)?;
    let values = y.sample(q.initial_samples);
    Ok(papr(&TimeSamples {
        values,
        period: y.period(),
    })?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRow {
    pub method: String,
    #[serde(rename = "N")]
    pub num_tones: usize,
    #[serde(rename = "U")]
    pub num_subcarriers: usize,
    #[serde(rename = "P_T_W")]
    pub power_budget_w: f64,
    pub psi_ln: f64,
    #[serde(rename = "v_out_V")]
    pub v_out_v: f64,
    #[serde(rename = "p_out_W")]
    pub p_out_w: f64,
    #[serde(rename = "papr_dB")]
    pub papr_db: f64,
    pub iterations: usize,
}

fn single_row(r: &SingleErResult, channel: &ErChannel, s: &SingleErSettings) -> Result<SingleRow> {
    let w = r.waveform.as_ref().context("waveform missing")?;
    Ok(SingleRow {
        method: MethodLabel(r.method).to_string(),
        num_tones: r.selection.n,
        num_subcarriers: channel.num_subcarriers(),
        power_budget_w: s.power_budget_w,
        psi_ln: r.psi_rhs_ln,
        v_out_v: r.v_out_v,
        p_out_w: r.p_out_w,
        papr_db: received_papr_db(w, &channel.to_response(), 0, &s.quadrature)?,
        iterations: r.trace.as_ref().map_or(0, |t| t.iterations),
    })
}

struct MethodLabel(rectwave::single_er::Method);

impl std::fmt::Display for MethodLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use rectwave::single_er::Method;
        f.write_str(match self.0 {
            Method::Mrt => "mrt",
            Method::ScpQclp => "scp_qclp",
            Method::Epa => "epa",
            Method::SingleTone => "single_tone",
        })
    }
}

fn single_method(m: MethodChoice) -> Result<rectwave::single_er::Method> {
    m.single_er().with_context(|| {
        format!(
            "optimizer.method: `{}` is not a single-receiver method",
            m.label()
        )
    })
}

pub fn run_single(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let channel = cfg.response()?.receiver(0)?;
    let method = single_method(cfg.optimizer.method)?;
    let s = cfg.single_settings();
    let r = optimize(&channel, method, &s).context("single_er")?;
    let mut out = vec![
        Artifact::new("single_er.csv", to_csv(&[single_row(&r, &channel, &s)?])?),
        Artifact::new("single_er.json", serde_json::to_string_pretty(&r)?),
        waveforms_artifact(&[WaveformArtifact::new(
            MethodLabel(method).to_string().as_str(),
            r.waveform.as_ref().context("waveform missing")?,
            s.power_budget_w,
            r.selection.n,
            None,
        )?])?,
    ];
    if let Some(t) = &r.trace {
        out.push(Artifact::new(
            "scp_trace.csv",
            t.to_optimizer_trace().to_csv(),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverRow {
    pub er: usize,
    pub weight: f64,
    pub psi_ln: f64,
    #[serde(rename = "v_out_V")]
    pub v_out_v: f64,
    #[serde(rename = "p_out_W")]
    pub p_out_w: f64,
}

fn run_dcp(cfg: &ExperimentConfig, prob: &MultiErProblem) -> Result<DcpResult> {
    let r = if cfg.optimizer.multistart {
        dcp_multistart(prob, &cfg.optimizer.dcp)
    } else {
        dcp_optimize(prob, &cfg.optimizer.dcp, &initial_point(prob)?)
    };
    r.context("multi_er")
}

pub fn run_multi(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let prob = cfg.multi_problem(cfg.response()?)?;
    let r = run_dcp(cfg, &prob)?;
    let rows: Vec<ReceiverRow> = r
        .evaluation
        .per_er
        .iter()
        .enumerate()
        .map(|(k, e)| ReceiverRow {
            er: k,
            weight: prob.weights[k],
            psi_ln: e.psi_ln,
            v_out_v: e.v_out_v,
            p_out_w: e.p_out_w,
        })
        .collect();
    let q = prob.enforce_saturation.then_some(prob.saturation_samples);
    Ok(vec![
        Artifact::new("multi_er.csv", to_csv(&rows)?),
        Artifact::new("multi_er.json", serde_json::to_string_pretty(&r)?),
        Artifact::new("dcp_trace.csv", r.outer_csv()),
        waveforms_artifact(&[WaveformArtifact::new(
            "dcp",
            r.waveform.as_ref().context("waveform missing")?,
            prob.power_budget_w,
            prob.num_tones,
            q,
        )?])?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep: String,
    pub design: String,
    pub method: String,
    #[serde(rename = "N")]
    pub num_tones: usize,
    #[serde(rename = "U")]
    pub num_subcarriers: usize,
    #[serde(rename = "P_T_W")]
    pub power_budget_w: f64,
    pub psi_ln: f64,
    #[serde(rename = "v_out_V")]
    pub v_out_v: f64,
    #[serde(rename = "p_out_W")]
    pub p_out_w: f64,
}

struct SweepPoint {
    design: &'static str,
    method: MethodChoice,
    num_tones: usize,
    power_budget_w: f64,
}

/// The band of `grid` covered by `n` equally spaced tones.
fn equally_spaced(
    multipath: &MultipathChannel,
    grid: &FrequencyGrid,
    n: usize,
) -> Result<ErChannel> {
    let coarse = grid
        .coarsened(n)
        .with_context(|| format!("sweep.equally_spaced: N = {n} cannot span the grid"))?;
    Ok(frequency_response(multipath, &coarse).receiver(0)?)
}

fn run_sweep(cfg: &ExperimentConfig, kind: &str) -> Result<Vec<Artifact>> {
    let multipath = cfg.multipath()?;
    let fine = frequency_response(&multipath, &cfg.grid).receiver(0)?;
    let mut points = Vec::new();
    let budgets = if kind == "power" {
        cfg.sweep.power_budgets_w.clone()
    } else {
        vec![cfg.optimizer.power_budget_w]
    };
    let tones = if kind == "power" {
        vec![cfg.optimizer.num_tones]
    } else {
        cfg.sweep.tone_counts.clone()
    };
    for &method in &cfg.sweep.methods {
        single_method(method).context("sweep.methods")?;
        for &n in &tones {
            for &p in &budgets {
                points.push(SweepPoint {
                    design: "selection",
                    method,
                    num_tones: n,
                    power_budget_w: p,
                });
                if cfg.sweep.equally_spaced {
                    points.push(SweepPoint {
                        design: "equally_spaced",
                        method,
                        num_tones: n,
                        power_budget_w: p,
                    });
                }
            }
        }
    }
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|pt| -> Result<SweepRow> {
            let channel = if pt.design == "selection" {
                fine.clone()
            } else {
                equally_spaced(&multipath, &cfg.grid, pt.num_tones)?
            };
            let s = SingleErSettings {
                num_tones: pt.num_tones,
                power_budget_w: pt.power_budget_w,
                quadrature: QuadratureConfig::for_grid(channel.grid()),
                ..cfg.single_settings()
            };
            let method = single_method(pt.method)?;
            let r = optimize(&channel, method, &s).with_context(|| {
                format!(
                    "sweep point {} N={} P_T={}",
                    pt.method.label(),
                    pt.num_tones,
                    pt.power_budget_w
                )
            })?;
            Ok(SweepRow {
                sweep: kind.to_string(),
                design: pt.design.to_string(),
                method: pt.method.label().to_string(),
                num_tones: pt.num_tones,
                num_subcarriers: channel.num_subcarriers(),
                power_budget_w: pt.power_budget_w,
                psi_ln: r.psi_rhs_ln,
                v_out_v: r.v_out_v,
                p_out_w: r.p_out_w,
            })
        })
        .collect::<Result<_>>()?;
    Ok(vec![Artifact::new(
        &format!("sweep_{kind}.csv"),
        to_csv(&rows)?,
    )])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub theta_1: f64,
    pub theta_2: f64,
    #[serde(rename = "p_out_1_W")]
    pub p_out_1_w: f64,
    #[serde(rename = "p_out_2_W")]
    pub p_out_2_w: f64,
    pub weighted_psi_ln: f64,
    pub violation: f64,
}

pub fn run_region(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let base = cfg.multi_problem(cfg.response()?)?;
    let n = cfg.region.points;
    let results: Vec<(RegionRow, WaveformArtifact)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let theta = i as f64 / (n - 1) as f64;
            let mut prob = base.clone();
            prob.weights = vec![theta, 1.0 - theta];
            let r =
                run_dcp(cfg, &prob).with_context(|| format!("region point theta_1 = {theta}"))?;
            let w = WaveformArtifact::new(
                &format!("theta_1={theta}"),
                r.waveform.as_ref().context("waveform missing")?,
                prob.power_budget_w,
                prob.num_tones,
                prob.enforce_saturation.then_some(prob.saturation_samples),
            )?;
            Ok((
                RegionRow {
                    theta_1: theta,
                    theta_2: 1.0 - theta,
                    p_out_1_w: r.evaluation.per_er[0].p_out_w,
                    p_out_2_w: r.evaluation.per_er[1].p_out_w,
                    weighted_psi_ln: r.evaluation.weighted_psi_ln,
                    violation: r.violation,
                },
                w,
            ))
        })
        .collect::<Result<_>>()?;
    let (rows, waves): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(vec![
        Artifact::new("power_region.csv", to_csv(&rows)?),
        waveforms_artifact(&waves)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceRow {
    pub draws: u64,
    pub seed: u64,
    pub best_draw: u64,
    pub random_psi_ln: f64,
    pub dcp_psi_ln: f64,
    /// `sum theta Psi` of DCP over that of the best draw.
    pub ratio: f64,
}

pub fn run_brute_force(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let prob = cfg.multi_problem(cfg.response()?)?;
    let rs = random_search(&prob, cfg.brute_force.draws, cfg.seed).context("brute_force")?;
    let dcp = run_dcp(cfg, &prob)?;
    let row = BruteForceRow {
        draws: rs.draws,
        seed: cfg.seed,
        best_draw: rs.best_draw,
        random_psi_ln: rs.best_objective_ln,
        dcp_psi_ln: dcp.evaluation.weighted_psi_ln,
        ratio: (dcp.evaluation.weighted_psi_ln - rs.best_objective_ln).exp(),
    };
    let q = prob.enforce_saturation.then_some(prob.saturation_samples);
    Ok(vec![
        Artifact::new("brute_force.csv", to_csv(&[row])?),
        waveforms_artifact(&[
            WaveformArtifact::new(
                "random_best",
                &rs.best.to_waveform(prob.grid())?,
                prob.power_budget_w,
                prob.num_tones,
                q,
            )?,
            WaveformArtifact::new(
                "dcp",
                dcp.waveform.as_ref().context("waveform missing")?,
                prob.power_budget_w,
                prob.num_tones,
                q,
            )?,
        ])?,
    ])
}

/// Runs the configured scenario. `config.json` echoes the resolved
/// configuration so artifacts can be re-checked later.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
    cfg.validate()?;
    let mut out = match cfg.scenario {
        Scenario::SingleEr => run_single(cfg)?,
        Scenario::MultiEr => run_multi(cfg)?,
        Scenario::SweepPower => run_sweep(cfg, "power")?,
        Scenario::SweepTones => run_sweep(cfg, "tones")?,
        Scenario::PowerRegion => run_region(cfg)?,
        Scenario::BruteForce => run_brute_force(cfg)?,
        Scenario::Validate => {
            let checks = crate::suite::run_all(&crate::suite::all_ids());
            vec![Artifact::new(
                "validate.csv",
                crate::suite::to_rows_csv(&checks)?,
            )]
        }
    };
    out.push(Artifact::new("config.json", cfg.to_json()?));
    Ok(out)
}

/// Re-checks every waveform in `waveforms.json` against its power budget,
/// cardinality and sampled breakdown limits.
pub fn recheck_waveforms(cfg: &ExperimentConfig, waveforms_json: &str) -> Result<Vec<String>> {
    let items: Vec<WaveformArtifact> = serde_json::from_str(waveforms_json)?;
    let needs_channel = items.iter().any(|w| w.saturation_samples.is_some());
    let response = if needs_channel {
        Some(cfg.response()?)
    } else {
        None
    };
    let mut problems = Vec::new();
    for item in &items {
        let w = item.waveform()?;
        let power = w.total_power();
        if power > item.power_budget_w * (1.0 + 1e-9) {
            problems.push(format!(
                "{}: power {power} exceeds {}",
                item.label, item.power_budget_w
            ));
        }
        let eps = MultisineWaveform::cardinality_epsilon(
            item.power_budget_w,
            w.num_antennas(),
            w.num_subcarriers(),
        );
        for m in 0..w.num_antennas() {
            let c = w.cardinality(m, eps)?;
            if c > item.num_tones {
                problems.push(format!(
                    "{}: antenna {m} uses {c} tones, N = {}",
                    item.label, item.num_tones
                ));
            }
        }
        if let (Some(q), Some(h)) = (item.saturation_samples, &response) {
            let bound = rectwave::rectenna::breakdown_amplitude_limit(&cfg.rectenna);
            for k in 0..h.num_receivers() {
                let peak = w
                    .received_tones(h, k)?
                    .sample(q)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                if peak > bound + 1e-8 {
                    problems.push(format!(
                        "{}: receiver {k} peak {peak} exceeds {bound}",
                        item.label
                    ));
                }
            }
        }
    }
    if items.is_empty() {
        bail!("no waveforms to check");
    }
    Ok(problems)
}
