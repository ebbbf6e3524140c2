use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use articulated_suspension::model::PlatformModel;
use articulated_suspension::sim::bench::benchmark;
use articulated_suspension::sim::{run_scenario, write_csv, write_summary, Scenario};
use articulated_suspension::validate::validate_model;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "suspension", version, about = "Articulated-suspension platform simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory (overrides the scenario's).
    #[arg(long, short = 'o')]
    output_dir: Option<PathBuf>,
    /// CSV file, relative to the output directory unless absolute.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON summary file, relative to the output directory unless absolute.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write the metrics CSV and summary.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        /// Override the scenario duration, s.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Time the core operations on a model file (`reference` for the built-in one).
    Bench {
        model: String,
        #[arg(long, default_value_t = 100_000)]
        calls: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the invariant suite on a model file (`reference` for the built-in one).
    Validate {
        model: String,
        #[command(flatten)]
        out: OutputArgs,
    },
}

/// Pipeline stage an error came from; also the process exit code.
#[derive(Clone, Copy, Debug)]
enum Stage {
    Config = 2,
    Model = 3,
    Simulation = 4,
    Output = 5,
    Validation = 6,
    Benchmark = 7,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Model => "model",
            Stage::Simulation => "simulation",
            Stage::Output => "output",
            Stage::Validation => "validation",
            Stage::Benchmark => "benchmark",
        }
    }
}

type Staged<T> = std::result::Result<T, (Stage, anyhow::Error)>;

trait At<T> {
    fn at(self, stage: Stage) -> Staged<T>;
}

impl<T, E: Into<anyhow::Error>> At<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> Staged<T> {
        self.map_err(|e| (stage, e.into()))
    }
}

fn resolve(dir: &Path, file: &Path) -> PathBuf {
    if file.is_absolute() {
        file.to_path_buf()
    } else {
        dir.join(file)
    }
}

fn load_model(arg: &str) -> Result<PlatformModel> {
    if arg == "reference" {
        Ok(PlatformModel::reference()?)
    } else {
        PlatformModel::load(arg).with_context(|| format!("loading model {arg}"))
    }
}

fn run(path: &Path, out: &OutputArgs, duration: Option<f64>) -> Staged<()> {
    let mut scenario = Scenario::load(path).with_context(|| format!("reading {}", path.display())).at(Stage::Config)?;
    if let Some(d) = duration {
        scenario.duration = d;
        scenario.validate().at(Stage::Config)?;
    }
    if let Some(d) = &out.output_dir {
        scenario.output.dir = d.clone();
    }
    let model = match &scenario.model {
        Some(m) => load_model(&m.to_string_lossy()),
        None => load_model("reference"),
    }
    .at(Stage::Model)?;
    log::info!("running {} for {} s at dt {}", scenario.name, scenario.duration, scenario.dt);
    let (rows, summary) = run_scenario(&model, &scenario).at(Stage::Simulation)?;
    let dir = &scenario.output.dir;
    let csv = resolve(dir, out.csv.as_deref().unwrap_or(&scenario.output.csv));
    let json = resolve(dir, out.summary.as_deref().unwrap_or(&scenario.output.summary));
    write_csv(&csv, &rows, scenario.output.every).at(Stage::Output)?;
    write_summary(&json, &summary).at(Stage::Output)?;
    println!(
        "{}: {} steps, rms force metric {:.1} N, rms CoM x {:.4} m, {:.2} s",
        summary.name, summary.steps, summary.rms_metric, summary.rms_com_x, summary.wall_time_s
    );
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn bench(model: &str, calls: usize, out: &OutputArgs) -> Staged<()> {
    let model = load_model(model).at(Stage::Model)?;
    if cfg!(debug_assertions) {
        log::warn!("debug build: timings are not representative");
    }
    let report = benchmark(&model, calls).at(Stage::Benchmark)?;
    print!("{}", report.table());
    if let Some(path) = &out.summary {
        let dir = out.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let path = resolve(&dir, path);
        std::fs::create_dir_all(&dir).at(Stage::Output)?;
        std::fs::write(&path, serde_json::to_string_pretty(&report).at(Stage::Output)?).at(Stage::Output)?;
    }
    Ok(())
}

fn validate(model: &str, out: &OutputArgs) -> Staged<()> {
    let model = load_model(model).at(Stage::Model)?;
    let report = validate_model(&model).at(Stage::Validation)?;
    print!("{}", report.table());
    if let Some(path) = &out.summary {
        let dir = out.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let path = resolve(&dir, path);
        std::fs::create_dir_all(&dir).at(Stage::Output)?;
        std::fs::write(&path, serde_json::to_string_pretty(&report).at(Stage::Output)?).at(Stage::Output)?;
    }
    if !report.passed() {
        let names: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
        return Err((Stage::Validation, anyhow::anyhow!("failed checks: {}", names.join(", "))));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, out, duration } => run(scenario, out, *duration),
        Command::Bench { model, calls, out } => bench(model, *calls, out),
        Command::Validate { model, out } => validate(model, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((stage, e)) => {
            eprintln!("error in stage `{}`: {e:#}", stage.name());
            ExitCode::from(stage as u8)
        }
    }
}
