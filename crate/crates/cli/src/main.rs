use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rectwave::channels::{frequency_response, generate_channel, ChannelSpec, MultipathChannel};
use rectwave::signals::FrequencyGrid;
use rectwave_cli::config::{ExperimentConfig, MethodChoice, Scenario};
use rectwave_cli::scenarios::{self, Artifact};
use rectwave_cli::{compare, suite};

#[derive(Parser)]
#[command(
    name = "rectwave",
    version,
    about = "Multisine power waveform design for rectenna receivers"
)]
struct Cli {
    /// Worker threads for parallel sections. Results do not depend on it.
    #[arg(long, global = true, env = "RECTWAVE_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or inspect multipath channels.
    #[command(subcommand)]
    Channel(ChannelCmd),
    /// Single-receiver design.
    #[command(subcommand)]
    Single(RunCmd),
    /// Multi-receiver design with breakdown limits.
    #[command(subcommand)]
    Multi(RunCmd),
    /// Parameter sweeps for the single-receiver methods.
    #[command(subcommand)]
    Sweep(SweepCmd),
    /// Weighted-sum trade-off between two receivers.
    Region(Common),
    /// Random-search baseline against the multi-receiver optimizer.
    Bruteforce {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        draws: Option<u64>,
    },
    /// Run the invariant suite.
    Validate {
        /// Criterion numbers; all when omitted.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Join sweep tables into one table of output DC power.
    Compare {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check the waveforms in an output directory.
    Check { dir: PathBuf },
}

#[derive(Subcommand)]
enum ChannelCmd {
    /// Draw a multipath channel and write it as JSON.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'K', long, default_value_t = 1)]
        receivers: usize,
        #[arg(short = 'M', long, default_value_t = 4)]
        antennas: usize,
        #[arg(long, default_value = "channel.json")]
        out: PathBuf,
    },
    /// Print the frequency response of a channel file as CSV.
    Show {
        file: PathBuf,
        #[arg(long)]
        full_scale: bool,
    },
}

#[derive(Subcommand)]
enum RunCmd {
    Run(Common),
}

#[derive(Subcommand)]
enum SweepCmd {
    /// Sweep the power budget.
    Power(Common),
    /// Sweep the tone count.
    Tones(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Transmit power budget in W.
    #[arg(long = "power-w")]
    power_w: Option<f64>,
    /// Tones per antenna.
    #[arg(short = 'N', long)]
    tones: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodChoice>,
    /// Use the full-scale frequency grid.
    #[arg(long)]
    full_scale: bool,
}

impl Common {
    fn resolve(&self, scenario: Scenario) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new(scenario),
        };
        cfg.scenario = scenario;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.out {
            cfg.output.dir = d.clone();
        }
        if let Some(p) = self.power_w {
            cfg.optimizer.power_budget_w = p;
        }
        if let Some(n) = self.tones {
            cfg.optimizer.num_tones = n;
        }
        if let Some(m) = self.method {
            cfg.optimizer.method = m;
        }
        if self.full_scale {
            warn!("full-scale grid: runs may take hours");
            cfg.grid = FrequencyGrid::full_scale();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.contents).with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
    }
    Ok(())
}

fn run_scenario(
    common: &Common,
    scenario: Scenario,
    tweak: impl FnOnce(&mut ExperimentConfig),
) -> Result<ExitCode> {
    let mut cfg = common.resolve(scenario)?;
    tweak(&mut cfg);
    let artifacts = scenarios::run(&cfg)?;
    write_artifacts(&cfg.output.dir, &artifacts)?;
    println!(
        "{} artifacts in {}",
        artifacts.len(),
        cfg.output.dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Channel(ChannelCmd::Gen {
            seed,
            receivers,
            antennas,
            out,
        }) => {
            let ch = generate_channel(&ChannelSpec::nlos(receivers, antennas, seed))?;
            fs::write(&out, ch.to_json()?).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {}", out.display());
        }
        Command::Channel(ChannelCmd::Show { file, full_scale }) => {
            let text =
                fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let ch = MultipathChannel::from_json(&text)?;
            let grid = if full_scale {
                FrequencyGrid::full_scale()
            } else {
                FrequencyGrid::desk_scale()
            };
            print!("{}", frequency_response(&ch, &grid).to_csv());
        }
        Command::Single(RunCmd::Run(c)) => return run_scenario(&c, Scenario::SingleEr, |_| {}),
        Command::Multi(RunCmd::Run(c)) => return run_scenario(&c, Scenario::MultiEr, |_| {}),
        Command::Sweep(SweepCmd::Power(c)) => {
            return run_scenario(&c, Scenario::SweepPower, |_| {})
        }
        Command::Sweep(SweepCmd::Tones(c)) => {
            return run_scenario(&c, Scenario::SweepTones, |_| {})
        }
        Command::Region(c) => return run_scenario(&c, Scenario::PowerRegion, |_| {}),
        Command::Bruteforce { common, draws } => {
            return run_scenario(&common, Scenario::BruteForce, |cfg| {
                if let Some(d) = draws {
                    cfg.brute_force.draws = d;
                }
            })
        }
        Command::Validate { criteria, out } => {
            let ids = if criteria.is_empty() {
                suite::all_ids()
            } else {
                criteria
            };
            let mut checks = Vec::new();
            for id in ids {
                let Some(c) = suite::run(id) else {
                    bail!("no criterion {id}");
                };
                println!("{}", c.line());
                checks.push(c);
            }
            write_artifacts(
                &out,
                &[Artifact::new("validate.csv", suite::to_rows_csv(&checks)?)],
            )?;
            if checks.iter().any(|c| !c.passed) {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Compare { inputs, out } => {
            let texts = inputs
                .iter()
                .map(|p| {
                    fs::read_to_string(p)
                        .with_context(|| format!("reading {}", p.display()))
                        .map(|t| (p.display().to_string(), t))
                })
                .collect::<Result<Vec<_>>>()?;
            let table = compare::join(&texts)?;
            match out {
                Some(path) => fs::write(&path, table)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{table}"),
            }
        }
        Command::Check { dir } => {
            let mut cfg = ExperimentConfig::load(&dir.join("config.json"))?;
            cfg.base_dir = dir.clone();
            let text =
                fs::read_to_string(dir.join("waveforms.json")).context("reading waveforms.json")?;
            let problems = scenarios::recheck_waveforms(&cfg, &text)?;
            for p in &problems {
                println!("FAIL {p}");
            }
            if !problems.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
            println!("all waveforms feasible");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            warn!("could not size the worker pool: {e}");
        }
    }
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
