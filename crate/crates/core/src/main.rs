use std::io::{self, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nas_ablate::benchmarks::bridge::serve_constant;
use nas_ablate::plots::emit_plots;
use nas_ablate::suite::{error_exit_code, run_suite, BenchmarkChoice, ExperimentSuiteConfig, Suite};

#[derive(Parser)]
#[command(name = "nas-ablate", version, about = "Component ablation experiments for BO-based architecture search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Ablation,
    #[value(name = "optimizer_compare")]
    OptimizerCompare,
    Probe,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchmarkArg {
    Synthetic,
    Bridge,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment suite and write its CSV artifacts.
    Run {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults: ablation 20, optimizer_compare 20, probe 100.
        #[arg(long)]
        replications: Option<usize>,
        /// Defaults: 100, probe 50.
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long, value_enum, default_value = "synthetic")]
        benchmark: BenchmarkArg,
        /// Command line of the bridge process, run through `sh -c`.
        #[arg(long = "bridge-cmd")]
        bridge_cmd: Option<String>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        ops: Option<usize>,
        #[arg(long)]
        cells: Option<usize>,
        /// Path-encoding length.
        #[arg(long)]
        truncation: Option<usize>,
        /// Maximum number of replications run at once.
        #[arg(long, env = "NAS_ABLATE_THREADS")]
        threads: Option<usize>,
    },
    /// Derive plot data files from the artifacts in a directory.
    Plots {
        #[arg(default_value = "results")]
        dir: PathBuf,
    },
    /// Serve the bridge protocol on stdio with a constant accuracy.
    StubBridge {
        #[arg(long, default_value_t = 0.9)]
        accuracy: f64,
        /// Exit after answering this many lines.
        #[arg(long)]
        max_requests: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match cli.command {
        Command::Run {
            suite,
            seed,
            replications,
            iterations,
            benchmark,
            bridge_cmd,
            out,
            nodes,
            ops,
            cells,
            truncation,
            threads,
        } => {
            let suite = match suite {
                SuiteArg::Ablation => Suite::Ablation,
                SuiteArg::OptimizerCompare => Suite::OptimizerCompare,
                SuiteArg::Probe => Suite::Probe,
            };
            let mut cfg = ExperimentSuiteConfig::new(suite, out);
            cfg.seed = seed;
            cfg.benchmark = match benchmark {
                BenchmarkArg::Synthetic => BenchmarkChoice::Synthetic,
                BenchmarkArg::Bridge => BenchmarkChoice::Bridge,
            };
            cfg.bridge_command = bridge_cmd;
            cfg.threads = threads;
            if let Some(v) = replications {
                cfg.replications = v;
            }
            if let Some(v) = iterations {
                cfg.iterations = v;
            }
            if let Some(v) = nodes {
                cfg.nodes = v;
            }
            if let Some(v) = ops {
                cfg.ops = v;
            }
            if let Some(v) = cells {
                cfg.cells = v;
            }
            if let Some(v) = truncation {
                cfg.truncation = v;
            }
            match run_suite(&cfg) {
                Ok(outcome) => {
                    print!("{}", outcome.summary);
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(error_exit_code(&e) as u8)
                }
            }
        }
        Command::Plots { dir } => match emit_plots(&dir) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::StubBridge { accuracy, max_requests } => {
            let stdin = io::stdin();
            match serve_constant(BufReader::new(stdin.lock()), io::stdout().lock(), accuracy, max_requests) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
