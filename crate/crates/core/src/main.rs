use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aerial_nav::harness::{
    make_planner, plot_record, read_record, replay, run_episode, run_suite, write_record,
    EpisodeConfig, HarnessError, Interleave, PlannerKind,
};
use aerial_nav::planner::PlannerOutcome;
use aerial_nav::scaler::StepMode;
use aerial_nav::simworld::load_scenario;

#[derive(Parser)]
#[command(
    name = "aerial-nav",
    version,
    about = "Image-space waypoint navigation in a kinematic simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fly one scenario and write its trajectory log.
    Run(RunArgs),
    /// Fly every scenario under a directory and report success rates.
    Suite(SuiteArgs),
    /// Re-run a trajectory log and check it reproduces bit for bit.
    Replay {
        #[arg(long)]
        record: PathBuf,
        /// Configuration the replay must match.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Draw a top-down SVG (and CSV) of a trajectory log.
    Plot {
        #[arg(long)]
        record: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    planner: Option<PlannerKind>,
    /// Use a constant step instead of the depth curve, meters.
    #[arg(long, num_args = 0..=1, default_missing_value = "2.0")]
    fixed_step: Option<f64>,
    /// Simulated planner latency, seconds.
    #[arg(long)]
    latency: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Disable waypoint obstacle adjustment.
    #[arg(long)]
    no_avoid: bool,
    /// Plan while the previous schedule is still flying.
    #[arg(long)]
    pipelined: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Trajectory log whose planner outcomes feed the scripted planner.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    rep: u32,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long)]
    dir: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 5)]
    reps: u32,
    #[arg(long, default_value = "suite-out")]
    out: PathBuf,
}

impl Common {
    fn resolve(&self) -> Result<EpisodeConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(p) => EpisodeConfig::load(p)?,
            None => EpisodeConfig::default(),
        };
        if let Some(k) = self.planner {
            cfg.planner = k;
        }
        if let Some(step) = self.fixed_step {
            cfg.scaler.mode = StepMode::Fixed { step };
        }
        if let Some(l) = self.latency {
            cfg.planner_latency = l;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.no_avoid {
            cfg.avoid.enabled = false;
        }
        if self.pipelined {
            cfg.interleave = Interleave::Pipelined;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                HarnessError::Diverged { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<bool, HarnessError> {
    match cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Suite(a) => {
            let cfg = a.common.resolve()?;
            let report = run_suite(&a.dir, &cfg, a.reps, Some(&a.out))?;
            print!("{}", report.to_markdown());
            println!("report: {}", a.out.join("report.json").display());
            Ok(report.all_succeeded())
        }
        Cmd::Replay { record, config } => {
            let rec = read_record(&record)?;
            let cfg = config.as_deref().map(EpisodeConfig::load).transpose()?;
            let again = replay(&rec, cfg.as_ref())?;
            println!(
                "replay matches: {} ticks, {} plans",
                again.ticks().count(),
                again.plans().count()
            );
            Ok(true)
        }
        Cmd::Plot { record, out } => {
            let files = plot_record(&read_record(&record)?, &out)?;
            println!("{}\n{}", files.svg.display(), files.csv.display());
            Ok(true)
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<bool, HarnessError> {
    let mut cfg = a.common.resolve()?;
    let scenario = load_scenario(&a.scene)?;
    let script = match &a.script {
        Some(p) => {
            cfg.planner = PlannerKind::Scripted;
            Some(script_from(p)?)
        }
        None => None,
    };
    let planner = make_planner(&cfg, script)?;
    let rec = run_episode(&cfg, &scenario, planner, a.rep)?;
    let path = a.out.join(record_name(&scenario.name, cfg.seed, a.rep));
    write_record(&path, &rec)?;
    let m = rec.metrics().expect("finished episodes carry metrics");
    println!(
        "{}",
        serde_json::to_string_pretty(m).expect("metrics serialize")
    );
    println!("record: {}", path.display());
    Ok(m.success)
}

fn script_from(path: &Path) -> Result<Vec<PlannerOutcome>, HarnessError> {
    let rec = read_record(path)?;
    Ok(rec.plans().map(|p| p.outcome.clone()).collect())
}

fn record_name(scenario: &str, seed: u64, rep: u32) -> String {
    format!("{scenario}_seed{seed}_rep{rep}.jsonl")
}
