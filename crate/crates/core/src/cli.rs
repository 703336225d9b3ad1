//! Command-line front end. Exit codes: 0 success, 1 usage or validation
//! error, 2 filesystem error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use crate::env::EvalOn;
use crate::error::{Error, Result};
use crate::harness::{self, ExperimentConfig};
use crate::lc::AlcConfig;
use crate::meta;
use crate::synth::{self, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "lcarena", version, about = "Meta-learning arena over pre-computed learning curves")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, global = true)]
    pub alc_mode: Option<AlcMode>,
    /// Time constant of the log time axis, in seconds.
    #[arg(long, global = true)]
    pub t0: Option<f64>,
    /// Score episodes on the validation or the test curves.
    #[arg(long, value_enum, global = true)]
    pub eval_on: Option<EvalOnArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlcMode {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalOnArg {
    Valid,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic meta-dataset.
    Synthgen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment and write its report, tables and transcripts.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rebuild a report from a directory of transcripts.
    Score {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the leaderboard of a report.
    Leaderboard {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Recompute a transcript's curve and score against a meta-dataset.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

impl GlobalArgs {
    /// ALC settings requested on the command line, if any.
    fn alc(&self) -> Result<Option<AlcConfig<f64>>> {
        match (self.alc_mode, self.t0) {
            (None, None) => Ok(None),
            (Some(AlcMode::Linear), None) => Ok(Some(AlcConfig::linear())),
            (Some(AlcMode::Log), Some(t0)) => AlcConfig::log(t0).map(Some),
            (Some(AlcMode::Log), None) => Err(Error::Config("--alc-mode log requires --t0".into())),
            (_, Some(_)) => Err(Error::Config("--t0 only applies with --alc-mode log".into())),
        }
    }

    fn eval_on(&self) -> Option<EvalOn> {
        self.eval_on.map(|e| match e {
            EvalOnArg::Valid => EvalOn::Valid,
            EvalOnArg::Test => EvalOn::Test,
        })
    }

    /// Warns about flags the chosen subcommand does not use.
    fn ignore(&self, command: &str, seed: bool, jobs: bool, alc: bool, eval_on: bool) {
        let mut unused = Vec::new();
        if seed && self.seed.is_some() {
            unused.push("--seed");
        }
        if jobs && self.jobs.is_some() {
            unused.push("--jobs");
        }
        if alc && (self.alc_mode.is_some() || self.t0.is_some()) {
            unused.push("--alc-mode/--t0");
        }
        if eval_on && self.eval_on.is_some() {
            unused.push("--eval-on");
        }
        if !unused.is_empty() {
            warn!("{command} ignores {}", unused.join(", "));
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    let alc = g.alc()?;
    match &cli.command {
        Command::Synthgen { config, out: dir } => {
            g.ignore("synthgen", false, false, true, true);
            let mut cfg: SynthConfig = read_json(config)?;
            if let Some(seed) = g.seed {
                cfg.seed = seed;
            }
            if let Some(jobs) = g.jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build_global()
                    .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            }
            let md = synth::generate(&cfg)?;
            meta::save(&md, dir)?;
            writeln!(
                out,
                "wrote {} datasets x {} algorithms to {} (digest {})",
                md.n_datasets(),
                md.n_algorithms(),
                dir.display(),
                md.digest()
            )
            .map_err(io_out)?;
        }
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(seed) = g.seed {
                cfg.seed = seed;
            }
            if let Some(jobs) = g.jobs {
                cfg.jobs = jobs;
            }
            if let Some(a) = alc {
                cfg.alc = a;
            }
            if let Some(e) = g.eval_on() {
                cfg.eval_on = e;
            }
            let outcome = harness::run_experiment(&cfg)?;
            let r = &outcome.report;
            write!(out, "{}", harness::leaderboard_csv(r)).map_err(io_out)?;
            if !r.failures.is_empty() {
                warn!("{} episode(s) failed and were scored 0", r.failures.len());
            }
            writeln!(out, "artifacts written to {}", cfg.output_dir.display()).map_err(io_out)?;
        }
        Command::Score { transcripts, out: path } => {
            g.ignore("score", true, true, true, true);
            let report = harness::score_transcripts(transcripts)?;
            let mut text = serde_json::to_string_pretty(&report).expect("serializable report");
            text.push('\n');
            std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
            write!(out, "{}", harness::leaderboard_csv(&report)).map_err(io_out)?;
        }
        Command::Leaderboard { report, format } => {
            g.ignore("leaderboard", true, true, true, true);
            let report = harness::read_report(report)?;
            let text = match format {
                Format::Csv => harness::leaderboard_csv(&report),
                Format::Json => harness::leaderboard_json(&report),
            };
            write!(out, "{text}").map_err(io_out)?;
        }
        Command::Replay { transcript, data } => {
            g.ignore("replay", true, true, false, true);
            let stored = harness::read_transcript(transcript)?;
            let r = harness::replay_file(transcript, data, alc)?;
            let summary = serde_json::json!({
                "dataset": stored.header.dataset,
                "agent": stored.header.agent,
                "run": stored.header.run,
                "steps": r.agent_curve.steps().len(),
                "alc": r.alc,
                "stored_alc": stored.alc,
                "comparable": r.comparable,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&summary).expect("serializable summary")).map_err(io_out)?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}
