use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use shlab_core::horizon::{sample_sh, Grid, ShOptions, TailMode};
use shlab_core::queue::{fm_sample_stationary, sample_inputs};
use shlab_core::rng::stream;
use shlab_core::tasep::{speed_process_estimate, write_speeds_csv, Direction};
use shlab_core::verify::*;
use shlab_core::{DensityVector, Window};

mod output;

use output::Output;

/// Queueing, TASEP and stationary horizon experiments.
#[derive(Parser, Debug)]
#[command(name = "shlab", version)]
struct Cli {
    /// Directory for CSV, JSONL and manifest files.
    #[arg(long, global = true, default_value = "shlab-out")]
    out_dir: PathBuf,

    /// Worker threads for replicate parallelism (0 = rayon default).
    #[arg(long, global = true, env = "SHLAB_THREADS", default_value_t = 0)]
    threads: usize,

    /// JSON file with the full suite configuration; replaces the flags of
    /// `verify` and `converge` commands.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw samples and write them as CSV.
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Exact and statistical checks of the queueing and TASEP identities.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Finite-N statistics against the stationary horizon.
    #[command(subcommand)]
    Converge(ConvergeCmd),
    /// Every suite at the acceptance sizes, or reduced ones with --quick.
    RunAll {
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
enum SampleCmd {
    /// Independent Bernoulli input streams with cumulative intensities.
    Inputs {
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// One multiline sample with stationary initial queues.
    Fm {
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Stationary horizon lines on a symmetric grid.
    Sh {
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        drifts: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        half_width: f64,
        #[arg(long, default_value_t = 0.0625)]
        step: f64,
        #[arg(long, value_enum, default_value_t = Tail::Exponential)]
        tail: Tail,
        #[arg(long, default_value_t = 32.0)]
        extension: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Speed estimates of the fully labelled ring.
    Speed {
        #[arg(long, default_value_t = 2000)]
        len: usize,
        #[arg(long, default_value_t = 1000.0)]
        t: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct WindowArgs {
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    lo: i64,
    #[arg(long, default_value_t = 999, allow_hyphen_values = true)]
    hi: i64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Tail {
    None,
    Exponential,
    LongGrid,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Dir {
    Left,
    Right,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 200)]
    max_len: usize,
    #[arg(long, default_value_t = 8)]
    exhaustive_len: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl ExactArgs {
    fn config(&self) -> ExactConfig {
        ExactConfig {
            reps: self.reps,
            max_len: self.max_len,
            exhaustive_len: self.exhaustive_len,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// Output theorem of the stationary single-server queue.
    Burke {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Regrouping and pair-swap identities of the tandem queue map.
    Interchange(ExactArgs),
    /// Class counts of the multiline output against tandem departures.
    LemmaCl(ExactArgs),
    /// Departure heights against the walk representation.
    WalkOracle(ExactArgs),
    /// Monotonicity of the queue maps, and the min-plus oracle.
    Monotone(ExactArgs),
    /// Time-0 against time-T statistics of the ring started from a multiline sample.
    Stationarity {
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.2,0.1")]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 4000)]
        len: usize,
        #[arg(long, default_value_t = 2000.0)]
        t: f64,
        #[arg(long, default_value_t = 32)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = Dir::Left)]
        direction: Dir,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Speed process marginal and projections.
    Projection {
        #[arg(long, default_value_t = 2000)]
        len: usize,
        #[arg(long, default_value_t = 1000.0)]
        t: f64,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, value_delimiter = ',', default_value = "-0.5,0,0.5", allow_hyphen_values = true)]
        cutoffs: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        max_distance: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
enum ConvergeCmd {
    /// Marginal and two-point laws of the scaled multiline lines.
    Fdd {
        #[arg(long, value_delimiter = ',', default_value = "0,1", allow_hyphen_values = true)]
        drifts: Vec<f64>,
        #[arg(long, default_value_t = 1e4)]
        n: f64,
        #[arg(long, value_delimiter = ',', default_value = "1", allow_hyphen_values = true)]
        xs: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        /// Also check that the two-point distance decreases along these N.
        #[arg(long, value_delimiter = ',')]
        trend: Vec<f64>,
        #[arg(long, default_value_t = 40_000)]
        trend_reps: usize,
        /// Run the same checks on horizon samples instead (long-grid mode).
        #[arg(long)]
        horizon: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Mean jump count on a drift grid against the horizon's expectation.
    Jumps {
        #[arg(long, default_value_t = 1e4)]
        n: f64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn read_config<T: DeserializeOwned>(path: &Option<PathBuf>) -> Result<Option<T>> {
    match path {
        None => Ok(None),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?))
        }
    }
}

fn window(w: &WindowArgs) -> Result<Window<i64>> {
    Ok(Window::int(w.lo, w.hi)?)
}

fn sample(cmd: &SampleCmd, out: &mut Output) -> Result<()> {
    match cmd {
        SampleCmd::Inputs { lambdas, window: w, seed } => {
            let xs = sample_inputs(&DensityVector::new(lambdas.clone())?, window(w)?, *seed)?;
            out.csv("inputs.csv", |wtr| output::write_streams(&xs, wtr))
        }
        SampleCmd::Fm { lambdas, window: w, seed } => {
            let mut rng = stream(*seed, "cli-fm", 0);
            let s = fm_sample_stationary(&DensityVector::new(lambdas.clone())?, window(w)?, &mut rng)?;
            out.csv("fm.csv", |wtr| output::write_labels(&s.output, wtr))
        }
        SampleCmd::Sh { drifts, half_width, step, tail, extension, seed } => {
            let opts = ShOptions {
                tail: match tail {
                    Tail::None => TailMode::None,
                    Tail::Exponential => TailMode::Exponential,
                    Tail::LongGrid => TailMode::LongGrid,
                },
                extension: *extension,
                bridge: true,
            };
            let s = sample_sh(drifts, Grid::symmetric(*half_width, *step)?, opts, *seed)?;
            out.csv("sh.csv", |wtr| Ok(s.write_csv(wtr)?))?;
            out.text("sh.json", &s.metadata_json()?)
        }
        SampleCmd::Speed { len, t, seed } => {
            let est = speed_process_estimate(*len, *t, *seed)?;
            out.csv("speeds.csv", |wtr| Ok(write_speeds_csv(&est, wtr)?))
        }
    }
}

fn exact_cfg(cli: &Cli, a: &ExactArgs) -> Result<ExactConfig> {
    Ok(read_config(&cli.config)?.unwrap_or_else(|| a.config()))
}

fn verify(cli: &Cli, cmd: &VerifyCmd) -> Result<Vec<TestReport>> {
    Ok(match cmd {
        VerifyCmd::Burke { alpha, beta, n, reps, seed } => {
            let cfg = read_config(&cli.config)?.unwrap_or_else(|| BurkeConfig::new(*alpha, *beta, *n, *reps, *seed));
            burke_suite(&cfg)?
        }
        VerifyCmd::Interchange(a) => vec![interchange_suite(&exact_cfg(cli, a)?)?],
        VerifyCmd::LemmaCl(a) => vec![lemma_cl_batch(&exact_cfg(cli, a)?)?],
        VerifyCmd::WalkOracle(a) => vec![walk_oracle_batch(&exact_cfg(cli, a)?)?],
        VerifyCmd::Monotone(a) => {
            let cfg = exact_cfg(cli, a)?;
            vec![monotonicity_suite(&cfg)?, minplus_batch(&cfg)?]
        }
        VerifyCmd::Stationarity { lambdas, len, t, reps, direction, seed } => {
            let cfg = read_config(&cli.config)?.unwrap_or_else(|| StationarityConfig {
                direction: match direction {
                    Dir::Left => Direction::Left,
                    Dir::Right => Direction::Right,
                },
                ..StationarityConfig::new(lambdas.clone(), *len, *t, *reps, *seed)
            });
            vec![stationarity_suite(&cfg)?]
        }
        VerifyCmd::Projection { len, t, reps, cutoffs, max_distance, seed } => {
            let cfg = read_config(&cli.config)?.unwrap_or_else(|| ProjectionConfig::new(cutoffs.clone(), *seed));
            let runs = speed_runs(*len, *t, *reps, *seed)?;
            let mut out = vec![speed_marginal(&runs, *max_distance)?];
            out.extend(speed_projection_suite(&runs, &cfg)?);
            out
        }
    })
}

fn converge(cli: &Cli, cmd: &ConvergeCmd) -> Result<Vec<TestReport>> {
    Ok(match cmd {
        ConvergeCmd::Fdd { drifts, n, xs, reps, trend, trend_reps, horizon, seed } => {
            if *horizon {
                let cfg = read_config(&cli.config)?.unwrap_or_else(|| ShCheckConfig {
                    options: ShOptions::long_grid(32.0),
                    ..ShCheckConfig::new(drifts.clone(), xs.clone(), *reps, *seed)
                });
                sh_fdd_suite(&cfg)?
            } else {
                let cfg = read_config(&cli.config)?.unwrap_or_else(|| FddConfig::new(drifts.clone(), *n, xs.clone(), *reps, *seed));
                let mut out = fdd_suite(&cfg)?;
                if !trend.is_empty() {
                    if cfg.drifts.len() != 2 {
                        bail!("the trend check needs exactly two drifts");
                    }
                    let x = cfg.xs.iter().copied().fold(0.0, f64::max);
                    out.push(fdd_trend([cfg.drifts[0], cfg.drifts[1]], trend, x, *trend_reps, cfg.seed)?);
                }
                out
            }
        }
        ConvergeCmd::Jumps { n, reps, step, x0, seed } => {
            let cfg = read_config(&cli.config)?.unwrap_or(JumpConfig {
                step: *step,
                x0: *x0,
                ..JumpConfig::new(*n, *reps, *seed)
            });
            vec![jump_suite(&cfg)?]
        }
    })
}

/// The acceptance suites; `quick` shrinks every size for a smoke run.
fn run_all(quick: bool, seed: u64) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let exact = if quick {
        ExactConfig { reps: 100, max_len: 60, exhaustive_len: 5, seed }
    } else {
        ExactConfig { seed, ..ExactConfig::default() }
    };
    out.extend(exact_suites(&exact)?);
    let (n, reps) = if quick { (10_000, 50) } else { (100_000, 50) };
    out.extend(burke_suite(&BurkeConfig::new(0.5, 0.05, n, reps, seed))?);

    let mut sh = ShCheckConfig::new(vec![0.0, 1.0], vec![1.0], if quick { 1000 } else { 10_000 }, seed);
    sh.options = ShOptions::long_grid(32.0);
    sh.two_point_max_distance = Some(if quick { 0.06 } else { 0.02 });
    out.extend(sh_fdd_suite(&sh)?);

    let fdd_reps = if quick { 1000 } else { 10_000 };
    let mut fdd = FddConfig::new(vec![0.0, 1.0], 1e4, vec![1.0], fdd_reps, seed);
    if quick {
        fdd.two_point_max_distance = 0.08;
    }
    out.extend(fdd_suite(&fdd)?);
    if !quick {
        out.push(fdd_trend([0.0, 1.0], &[1e3, 1e4, 1e5], 1.0, 40_000, seed)?);
    }

    let jumps = if quick {
        JumpConfig { rel_tol: 0.25, ..JumpConfig::new(1e3, 100, seed) }
    } else {
        JumpConfig::new(1e4, 1000, seed)
    };
    out.push(jump_suite(&jumps)?);

    let (len, t, runs) = if quick { (1000, 400.0, 12) } else { (2000, 1000.0, 100) };
    let speeds = speed_runs(len, t, runs, seed)?;
    out.push(speed_marginal(&speeds, if quick { 0.1 } else { 0.05 })?);
    let mut proj = ProjectionConfig::new(vec![-0.5, 0.0, 0.5], seed);
    proj.margin = len;
    out.extend(speed_projection_suite(&speeds, &proj)?);

    let st = if quick {
        StationarityConfig::new(vec![0.3, 0.2, 0.1], 400, 200.0, 40, seed)
    } else {
        StationarityConfig::new(vec![0.3, 0.2, 0.1], 4000, 2000.0, 32, seed)
    };
    out.push(stationarity_suite(&st)?);
    if !quick {
        out.extend(null_calibration_all(&NullSuite::ALL, 100, 2, seed)?);
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<bool> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    }
    let mut out = Output::new(&cli.out_dir)?;
    out.config = cli.config.clone();
    let (name, reports) = match &cli.command {
        Command::Sample(cmd) => {
            sample(cmd, &mut out)?;
            out.manifest(&format!("{:?}", cli.command), None)?;
            return Ok(true);
        }
        Command::Verify(cmd) => ("verify", verify(cli, cmd)?),
        Command::Converge(cmd) => ("converge", converge(cli, cmd)?),
        Command::RunAll { quick, seed } => ("run-all", run_all(*quick, *seed)?),
    };
    let file = format!("{name}.jsonl");
    out.reports(&file, &reports)?;
    print!("{}", summary_table(&reports));
    out.manifest(&format!("{:?}", cli.command), Some((&file, &reports)))?;
    Ok(all_passed(&reports))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
