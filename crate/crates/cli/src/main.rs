use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use splift::synth::WorkloadParams;
use splift_cli::server::{self, AppState, DEFAULT_PORT, PORT_ENV};
use splift_cli::{cmd_analyze, cmd_bench, cmd_extract, cmd_solve, cmd_ta2tsv, SolveOptions, Stage, StageError};

#[derive(Parser)]
#[command(
    name = "splift",
    version,
    about = "Lifted behaviour-alteration analysis for C/C++ product lines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract PC-annotated facts from sources into a TA model
    Extract {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "model.ta")]
        out: PathBuf,
    },
    /// Convert a TA model into per-relation fact files
    Ta2tsv {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "facts")]
        out: PathBuf,
    },
    /// Evaluate a Datalog program over fact files
    Solve {
        #[arg(long)]
        facts: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Extract, convert, solve and write graph.json
    Analyze {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Compare lifted and plain evaluation on a synthetic fact base
    Bench {
        #[arg(long, default_value_t = 100_000)]
        tuples: usize,
        #[arg(long, default_value_t = 500)]
        features: usize,
        /// Percentage of facts carrying a non-trivial PC
        #[arg(long, default_value_t = 1.0)]
        variational: f64,
        /// Contradictory joins to plant
        #[arg(long, default_value_t = 50)]
        gadgets: usize,
        #[arg(long, default_value_t = 20)]
        components: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        /// Write the JSON report here as well
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Serve a graph document over HTTP
    Serve {
        #[arg(long, default_value = "graph.json")]
        graph: PathBuf,
        #[arg(long)]
        feature_model: Option<PathBuf>,
        /// Do not strengthen filter expressions with the feature model
        #[arg(long)]
        no_fm: bool,
        #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
        port: u16,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Datalog program (defaults to the bundled behaviour-alteration rules)
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Feature model: one constraint per line
    #[arg(long)]
    feature_model: Option<PathBuf>,
    /// Prune with the feature model while joining
    #[arg(long)]
    prune_during_eval: bool,
    /// Write stats.txt
    #[arg(long)]
    stats: bool,
    /// Write stats.json
    #[arg(long)]
    json: bool,
}

impl From<SolveArgs> for SolveOptions {
    fn from(a: SolveArgs) -> Self {
        SolveOptions {
            rules: a.rules,
            feature_model: a.feature_model,
            prune_during_eval: a.prune_during_eval,
            stats: a.stats,
            json: a.json,
        }
    }
}

fn run(cli: Cli) -> Result<(), StageError> {
    match cli.command {
        Command::Extract { src, config, out } => cmd_extract(&src, &config, &out),
        Command::Ta2tsv { model, out } => cmd_ta2tsv(&model, &out),
        Command::Solve { facts, out, solve } => {
            let s = cmd_solve(&facts, &out, &solve.into())?;
            print!("{}", s.stats.to_text());
            Ok(())
        }
        Command::Analyze {
            src,
            config,
            out,
            solve,
        } => {
            let s = cmd_analyze(&src, &config, &out, &solve.into())?;
            print!("{}", s.stats.to_text());
            println!("graph: {}", out.join("graph.json").display());
            Ok(())
        }
        Command::Bench {
            tuples,
            features,
            variational,
            gadgets,
            components,
            seed,
            runs,
            report,
        } => {
            let params = WorkloadParams {
                tuples,
                features,
                variational_percent: variational,
                gadgets,
                components,
                seed,
            };
            let r = cmd_bench(&params, runs);
            print!("{}", r.to_text());
            if let Some(path) = report {
                std::fs::write(&path, r.to_json())
                    .map_err(|e| StageError::new(Stage::Bench, format!("{}: {e}", path.display())))?;
            }
            Ok(())
        }
        Command::Serve {
            graph,
            feature_model,
            no_fm,
            port,
        } => {
            let read = |p: &PathBuf| {
                std::fs::read_to_string(p).map_err(|e| StageError::new(Stage::Serve, format!("{}: {e}", p.display())))
            };
            let text = read(&graph)?;
            let fm = feature_model.as_ref().map(read).transpose()?;
            let state = AppState::load(text, fm.as_deref(), !no_fm).map_err(|e| StageError::new(Stage::Serve, e))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| StageError::new(Stage::Serve, e))?;
            rt.block_on(server::serve(Arc::new(state), port))
                .map_err(|e| StageError::new(Stage::Serve, e))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
