use anisoheat::shell::{error_json, exit_code, run, run_config_file, ExperimentConfig, Outcome, Tolerances};
use anisoheat::Result;
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "anisoheat", version, about = "Heat kernels and parametrices for positive-homogeneous operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Manifest path (default: <out>.manifest.json).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Seed for sampled checks.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a symbol file and report mu, exponents and positivity.
    SymbolCheck {
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Heat kernel K^t on a box, as CSV.
    Heatkernel {
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// min:max, applied to every axis.
        #[arg(long = "box", default_value = "-8:8", allow_hyphen_values = true)]
        bx: String,
        #[arg(long, default_value_t = 512)]
        n: u32,
        #[arg(long)]
        out: PathBuf,
        /// Write the (C, M) envelope fit here.
        #[arg(long)]
        estimate: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Legendre-Fenchel transform R# at the points of a CSV file.
    LfTransform {
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Local limit theorem errors for a built-in example.
    Llt {
        #[arg(long)]
        case: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Convolution power of a lattice function.
    Convpow {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        n: u32,
        #[arg(long, value_parser = ["fft", "direct"], default_value = "fft")]
        method: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fundamental solution of a variable-coefficient operator by Levi's method.
    Levi {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long = "T", default_value_t = 1.0)]
        t_max: f64,
        /// min:max:points, used for both x and the source points y.
        #[arg(long, allow_hyphen_values = true)]
        xgrid: String,
        #[arg(long, default_value_t = 16)]
        tgrid: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        certificates: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Ray decay exponents of a kernel against R# and the norm bound.
    RocklandDemo {
        /// Defaults to xi_1^6 + xi_2^8.
        #[arg(long)]
        symbol: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn config(command: &str, common: Common) -> ExperimentConfig {
    ExperimentConfig {
        command: command.into(),
        symbol: None,
        operator: None,
        phi: None,
        points: None,
        case: None,
        t: None,
        t_max: None,
        n: None,
        bx: None,
        xgrid: None,
        tgrid: None,
        method: None,
        out: None,
        estimate: None,
        certificates: None,
        manifest: common.manifest,
        seed: common.seed,
        tolerances: Tolerances::default(),
    }
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    let cfg = match cmd {
        Command::Run { config } => return run_config_file(&config),
        Command::SymbolCheck { symbol, out, common } => {
            ExperimentConfig { symbol: Some(symbol), out, ..config("symbol-check", common) }
        }
        Command::Heatkernel { symbol, t, bx, n, out, estimate, common } => ExperimentConfig {
            symbol: Some(symbol),
            t: Some(t),
            bx: Some(bx),
            n: Some(vec![n]),
            out: Some(out),
            estimate,
            ..config("heatkernel", common)
        },
        Command::LfTransform { symbol, points, out, common } => ExperimentConfig {
            symbol: Some(symbol),
            points: Some(points),
            out: Some(out),
            ..config("lf-transform", common)
        },
        Command::Llt { case, n, out, common } => {
            ExperimentConfig { case: Some(case), n: Some(n), out: Some(out), ..config("llt", common) }
        }
        Command::Convpow { phi, n, method, out, common } => ExperimentConfig {
            phi: Some(phi),
            n: Some(vec![n]),
            method: Some(method),
            out: Some(out),
            ..config("convpow", common)
        },
        Command::Levi { operator, t_max, xgrid, tgrid, out, certificates, common } => ExperimentConfig {
            operator: Some(operator),
            t_max: Some(t_max),
            xgrid: Some(xgrid),
            tgrid: Some(tgrid),
            out: Some(out),
            certificates,
            ..config("levi", common)
        },
        Command::RocklandDemo { symbol, t, out, common } => {
            ExperimentConfig { symbol, t: Some(t), out, ..config("rockland-demo", common) }
        }
    };
    run(&cfg, None)
}

fn init_threads() {
    if let Ok(v) = std::env::var("ANISOHEAT_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring ANISOHEAT_THREADS={v:?}: expected a positive integer"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match dispatch(cli.command) {
        Ok(outcome) => {
            let report = serde_json::json!({
                "pass": outcome.pass(),
                "certificates": outcome.certificates,
                "summary": outcome.summary,
            });
            // a closed pipe downstream is not an error of the run
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&report).expect("plain data"));
            if outcome.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
