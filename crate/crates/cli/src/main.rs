use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ruled_cli::analyze::run_analyze;
use ruled_cli::scene::{ingest, Overrides};
use ruled_cli::selftest::{run_selftest, selftest_result};
use ruled_cli::CliError;
use ruled_core::parametric::builtin_families;

#[derive(Parser)]
#[command(name = "ruled", version, about = "Degree, striction and rank-one classification of ruled submanifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Tuning {
    /// Number of parameter samples.
    #[arg(long)]
    t_samples: Option<usize>,
    /// Half-width of the sampled ruling box.
    #[arg(long)]
    u_extent: Option<f64>,
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long)]
    rank_tol: Option<f64>,
    /// Absolute cutoff for wedge norms and residuals.
    #[arg(long)]
    zero_tol: Option<f64>,
    /// Seed for the random spot checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Tuning {
    fn overrides(&self) -> Overrides {
        Overrides {
            t_samples: self.t_samples,
            u_extent: self.u_extent,
            rank_rel_tol: self.rank_tol,
            zero_abs_tol: self.zero_tol,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a scene and write report.json, striction.csv and mesh.obj.
    Analyze {
        scene: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Run the builtin corpus and print a table of checks.
    Selftest {
        #[command(flatten)]
        tuning: Tuning,
    },
    /// List builtin patch families with their parameters.
    ListBuiltins,
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { scene, out, tuning } => {
            let ing = ingest(&scene, &tuning.overrides())?;
            let (analysis, written) = run_analyze(&ing, &out, tuning.seed)?;
            emit(&format!("kind: {}\n", analysis.report.kind));
            for path in written {
                emit(&format!("wrote {}\n", path.display()));
            }
            Ok(())
        }
        Command::Selftest { tuning } => {
            let summary = run_selftest(&tuning.overrides(), tuning.seed);
            emit(&summary.table());
            selftest_result(&summary)
        }
        Command::ListBuiltins => {
            for info in builtin_families() {
                let params: Vec<String> = info.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                emit(&format!(
                    "{:28} R^{} m={}  [{}]  {}\n",
                    info.name,
                    info.ambient_dim,
                    info.m,
                    params.join(", "),
                    info.description
                ));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
