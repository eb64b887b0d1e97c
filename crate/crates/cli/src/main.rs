//! `levy-kac`: batch driver writing deterministic CSV artifacts.
//!
//! Exit status: 0 on success, 2 for bad input or a failed precondition,
//! 3 when a numerical certificate fails.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use levy_kac::CosineConvention;

use commands::{FdaArgs, MarginalArgs};
use config::{ExperimentConfig, Overrides, THREADS_ENV};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numeric(levy_kac::Error),
    /// Artifacts were written but some records are not certified.
    Untrusted(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numeric(e) if e.is_certification() => 3,
            CliError::Numeric(_) => 2,
            CliError::Untrusted(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Untrusted(m) => f.write_str(m),
            CliError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl From<levy_kac::Error> for CliError {
    fn from(e: levy_kac::Error) -> Self {
        CliError::Numeric(e)
    }
}

#[derive(Debug, Clone)]
struct NList(Vec<usize>);

fn parse_n(s: &str) -> Result<NList, String> {
    config::parse_n_list(s).map(NList)
}

#[derive(Debug, Parser)]
#[command(name = "levy-kac", version, about = "Stable limits of squared heavy-tailed variables and chaos on Kac's sphere")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// gauss, quartic, power-tail:<alpha> or mixture:<delta>
    #[arg(long, global = true)]
    model: Option<String>,
    /// Comma-separated particle counts, ascending
    #[arg(long = "n", global = true, value_parser = parse_n)]
    n: Option<NList>,
    /// log2 of the sup-norm grid size, in [9, 22]
    #[arg(long, global = true)]
    grid_pow: Option<u32>,
    /// Exponent of the frequency-cutoff schedule
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Output directory; without it the main table goes to stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = automatic)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Accept uncertified frequency cutoffs and mark the affected rows
    #[arg(long, global = true)]
    force_cutoff: bool,
    /// Plain-text `key = value` defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cosine {
    /// |cos(πα/2)|
    Abs,
    /// cos(πα/2) with its sign
    Literal,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moments, tail and stable parameters of a model
    DensityInfo,
    /// Stable density at the given points
    StableDensity {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// Local limit error of the scaled convolution powers
    Clt {
        #[arg(long, value_enum, default_value_t = Cosine::Abs)]
        cosine: Cosine,
    },
    /// Marginals of the sphere-restricted product law
    Marginal {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, default_value_t = 6.0)]
        v_max: f64,
        /// First coordinate held fixed when k = 2
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        v1: f64,
    },
    /// L1 gaps, entropy per particle, W1 and Pinsker margin
    Chaos,
    /// Gap 1 − sup_{|ξ|≥β} |ĥ(ξ)|
    Highfreq {
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        beta: Vec<f64>,
    },
    /// Remainder modulus ω(β) and the weighted tail check
    Fda {
        #[arg(long, value_delimiter = ',', default_value = "1,0.3,0.1,0.03")]
        beta: Vec<f64>,
        /// Multiplies σ (values other than 1 give a negative control)
        #[arg(long, default_value_t = 1.0)]
        sigma_scale: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 1e4)]
        x_max: f64,
    },
    /// Relative entropy per particle of the sphere law of one model against another
    CrossEntropy {
        #[arg(long, default_value = "gauss")]
        base: String,
    },
    /// clt, chaos and fda for every N with a merged summary
    Sweep,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::DensityInfo => "density-info",
            Command::StableDensity { .. } => "stable-density",
            Command::Clt { .. } => "clt",
            Command::Marginal { .. } => "marginal",
            Command::Chaos => "chaos",
            Command::Highfreq { .. } => "highfreq",
            Command::Fda { .. } => "fda",
            Command::CrossEntropy { .. } => "cross-entropy",
            Command::Sweep => "sweep",
        }
    }
}

fn resolve(common: &Common) -> Result<ExperimentConfig, CliError> {
    let flags = Overrides {
        model: common.model.clone(),
        n_values: common.n.clone().map(|n| n.0),
        grid_pow: common.grid_pow,
        tau: common.tau,
        out_dir: common.out.clone(),
        threads: common.threads,
        force_cutoff: common.force_cutoff.then_some(true),
    };
    let env = std::env::var(THREADS_ENV).ok();
    ExperimentConfig::resolve(&flags, common.config.as_deref(), env.as_deref())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli.common)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let started = Instant::now();
    let mut untrusted = None;
    let tables = match &cli.command {
        Command::DensityInfo => commands::density_info(&cfg)?,
        Command::StableDensity { alpha, sigma, beta, x } => commands::stable_density(*alpha, *sigma, *beta, x)?,
        Command::Clt { cosine } => {
            let conv = match cosine {
                Cosine::Abs => CosineConvention::Absolute,
                Cosine::Literal => CosineConvention::Literal,
            };
            commands::clt(&cfg, conv)?
        }
        Command::Marginal { k, points, v_max, v1 } => {
            commands::marginal(&cfg, &MarginalArgs { k: *k, points: *points, v_max: *v_max, v1: *v1 })?
        }
        Command::Chaos => commands::chaos(&cfg)?,
        Command::Highfreq { beta } => commands::highfreq(&cfg, beta)?,
        Command::Fda { beta, sigma_scale, delta, x_max } => commands::fda(
            &cfg,
            &FdaArgs { betas: beta.clone(), sigma_scale: *sigma_scale, delta: *delta, x_max: *x_max },
        )?,
        Command::CrossEntropy { base } => commands::cross_entropy(&cfg, base)?,
        Command::Sweep => {
            if cfg.out_dir.is_none() {
                return Err(CliError::Usage("sweep needs --out".into()));
            }
            let s = commands::sweep(&cfg)?;
            if !s.all_trusted {
                untrusted = Some("some frequency cutoffs are not certified; see the row_status column".to_string());
            }
            s.tables
        }
    };
    output::emit(&tables, cfg.out_dir.as_deref())?;
    if let Some(dir) = &cfg.out_dir {
        let mut meta: Vec<(String, String)> = vec![
            ("command".into(), cli.command.name().into()),
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ];
        meta.extend(cfg.describe().into_iter().map(|(k, v)| (k.to_string(), v)));
        meta.push((
            "files".into(),
            tables.iter().map(|t| t.file_name()).collect::<Vec<_>>().join(","),
        ));
        meta.push(("elapsed_seconds".into(), format!("{:.3}", started.elapsed().as_secs_f64())));
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        meta.push(("finished_unix".into(), now.to_string()));
        output::write_sidecar(dir, cli.command.name(), &meta)?;
    }
    match untrusted {
        Some(m) => Err(CliError::Untrusted(m)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("levy-kac: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
