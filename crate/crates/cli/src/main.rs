use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harris_cli::{exit, run, CliError, CliResult, ExperimentSpec, Kind};

#[derive(Parser)]
#[command(name = "harris", version = harris_cli::report::VERSION, about = "Run Harris flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report.
    Run(Overrides),
    /// Check a spec and print the resolved configuration.
    Validate(Overrides),
}

#[derive(Args)]
struct Overrides {
    spec: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "HARRIS_THREADS")]
    threads: Option<usize>,
}

impl Overrides {
    fn load(&self) -> CliResult<ExperimentSpec> {
        let mut spec = ExperimentSpec::from_file(&self.spec)?;
        if let Some(seed) = self.seed {
            spec.sim.seed = seed;
        }
        if let Some(r) = self.replicas {
            match spec.kind {
                Kind::Comparison => {
                    spec.comparison.replicas = r;
                    spec.comparison.interpolation_replicas = r;
                }
                Kind::Concentration => spec.concentration.replicas = r,
                _ => spec.sim.replicas = r,
            }
        }
        if let Some(out) = &self.out {
            spec.output_dir = out.clone();
        }
        spec.validate()?;
        Ok(spec)
    }

    fn pool(&self) -> CliResult<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(CliError::Invalid("--threads must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build()
            .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit::ERROR
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(command: &Command) -> CliResult<i32> {
    match command {
        Command::Validate(o) => {
            let spec = o.load()?;
            print!("{}", spec.resolved());
            Ok(exit::PASS)
        }
        Command::Run(o) => {
            let spec = o.load()?;
            let outcome = o.pool()?.install(|| run::run(&spec))?;
            for v in &outcome.verdicts {
                println!(
                    "{} {} (value {}, slack {})",
                    if v.passed { "PASS" } else { "FAIL" },
                    v.name,
                    v.value,
                    v.slack
                );
            }
            println!("wrote {}", spec.output_dir.display());
            Ok(if outcome.passed() { exit::PASS } else { exit::FAIL })
        }
    }
}
