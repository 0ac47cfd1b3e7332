use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kyle_core::cli::{
    exit_code, load_config, load_reports, run_experiment, summarize, sweep, timestamp_from_epoch,
    ExperimentConfig, Mode, Model, Overrides, RunOptions, SweepParam, EXIT_CONFIG, EXIT_OK,
    EXIT_TEST_FAILURE, OUTPUT_ROOT_ENV,
};
use kyle_core::Result;

#[derive(Parser)]
#[command(
    name = "kyle",
    version,
    about = "Simulate and verify random-horizon insider trading equilibria"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths and write series and checkpoint summaries.
    Simulate(RunArgs),
    /// Simulate and run the statistical test battery.
    Verify(RunArgs),
    /// Run the verification suite over a list of values of `r` or `p`.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Parameter to vary: `r` or `p`.
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Print the summary table of a finished verification run.
    Table {
        /// Run directory or reports file.
        path: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags below override its fields.
    config: Option<PathBuf>,
    /// `bernoulli` or `general`.
    #[arg(long)]
    model: Option<Model>,
    /// Announcement intensity.
    #[arg(long)]
    r: Option<f64>,
    /// Drift offset of the market makers' signal.
    #[arg(long)]
    d: Option<f64>,
    /// Prior probability of the high outcome (Bernoulli model).
    #[arg(long)]
    p: Option<f64>,
    /// Payoff reference for the general model (e.g. `identity`).
    #[arg(long)]
    payoff: Option<String>,
    /// Euler step.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated checkpoint times.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<f64>>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Root for output directories.
    #[arg(long, env = OUTPUT_ROOT_ENV)]
    output_root: Option<PathBuf>,
    /// Replace the contents of an existing output directory.
    #[arg(long)]
    overwrite: bool,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(&Overrides {
            model: self.model,
            r: self.r,
            d: self.d,
            p: self.p,
            payoff: self.payoff.clone(),
            dt: self.dt,
            t_end: self.t_end,
            n_paths: self.n_paths,
            seed: self.seed,
            checkpoints: self.checkpoints.clone(),
            output_dir: self.output_dir.clone(),
        });
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self, mode: Mode) -> Result<RunOptions> {
        let timestamp = match std::env::var("SOURCE_DATE_EPOCH") {
            Ok(s) => {
                let secs = s
                    .trim()
                    .parse::<i64>()
                    .map_err(|e| kyle_core::Error::Parse(format!("SOURCE_DATE_EPOCH: {e}")))?;
                Some(timestamp_from_epoch(secs)?)
            }
            Err(_) => None,
        };
        Ok(RunOptions {
            mode,
            overwrite: self.overwrite,
            output_root: self.output_root.clone(),
            timestamp,
        })
    }
}

fn single(args: &RunArgs, mode: Mode) -> Result<i32> {
    let cfg = args.config()?;
    let outcome = run_experiment(&cfg, &args.options(mode)?)?;
    if mode == Mode::Verify {
        print!("{}", summarize(&outcome.entries));
    }
    println!("wrote {}", outcome.dir.display());
    Ok(outcome.exit_code())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(args) => single(&args, Mode::Simulate),
        Command::Verify(args) => single(&args, Mode::Verify),
        Command::Sweep { run, param, values } => {
            let cfg = run.config()?;
            let cells = sweep(&cfg, param, &values, &run.options(Mode::Verify)?)?;
            let mut code = EXIT_OK;
            for c in &cells {
                let status = if c.mandatory_passed() { "PASS" } else { "FAIL" };
                println!("{status} {}", c.dir.display());
                code = code.max(c.exit_code());
            }
            Ok(code)
        }
        Command::Table { path } => {
            let entries = load_reports(&path)?;
            print!("{}", summarize(&entries));
            let failed = entries.iter().any(|e| e.mandatory && !e.report.passed);
            Ok(if failed { EXIT_TEST_FAILURE } else { EXIT_OK })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_CONFIG as u8
            } else {
                EXIT_OK as u8
            });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
