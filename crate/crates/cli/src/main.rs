//! `primo`: generate scenes and schedules, replay session logs, run the
//! oracle agent, analyze study output and serve the viewer bridge.
//!
//! Exit codes: 0 ok, 1 domain error, 2 usage or schema error, 3 incomplete
//! trial, 4 internal invariant breach.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use primo_core::analysis::{analyze_records, analyze_ssq, format_table, SsqRecord, SsqWeightConfig};
use primo_core::bridge::Bridge;
use primo_core::navigation::{DisplayMode, NavStyle};
use primo_core::object_model::LatticePattern;
use primo_core::scene::{GenerateParams, SceneDocument, SceneError};
use primo_core::study::{
    replay, run_oracle_agent, EventLog, Measure, ScheduleExport, StudyError, TrialRecord,
};

#[derive(Debug)]
enum Failure {
    Domain(anyhow::Error),
    Usage(anyhow::Error),
    Incomplete(String),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Incomplete(_) => 3,
            Failure::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Domain(e) | Failure::Usage(e) | Failure::Internal(e) => write!(f, "{e:#}"),
            Failure::Incomplete(m) => f.write_str(m),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

#[derive(Parser)]
#[command(name = "primo", version, about = "Progressive-refinement multiscale inspection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Structured,
    Unstructured,
}

#[derive(Clone, Copy, ValueEnum)]
enum DisplayArg {
    Selection,
    Everything,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternArg {
    GridStruts,
    GyroidApprox,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Time,
    Awareness,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// Write a scene document for one trial.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        depth: u32,
        #[arg(long, default_value_t = 4)]
        defects: usize,
        #[arg(long, default_value_t = 4)]
        lattice_cells: u32,
        #[arg(long, default_value_t = 0.02)]
        strut_thickness: f64,
        #[arg(long, value_enum, default_value_t = PatternArg::GridStruts)]
        pattern: PatternArg,
        #[arg(long, value_enum, default_value_t = StyleArg::Structured)]
        style: StyleArg,
        #[arg(long, value_enum, default_value_t = DisplayArg::Selection)]
        display: DisplayArg,
        /// Index of the target among the placed defects.
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[arg(long, value_enum, default_value_t = MeasureArg::Time)]
        measure: MeasureArg,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Replay a session log against a scene and print its metrics.
    Replay {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        log: PathBuf,
    },
    /// Drive a scene with an ideal operator and report its actions.
    Agent {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_enum, default_value_t = Strategy::Oracle)]
        strategy: Strategy,
        /// Where to write the generated session log.
        #[arg(long)]
        log_out: Option<PathBuf>,
    },
    /// Print the counterbalanced schedule and trial lists.
    Schedule {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Statistics over trial records (JSON files in a directory).
    Analyze {
        #[arg(long)]
        metrics: PathBuf,
        /// Pre/post questionnaire ratings, a JSON array.
        #[arg(long)]
        ssq: Option<PathBuf>,
        /// Print the plain-text table instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Serve request/response JSON lines on stdin/stdout for a viewer.
    Bridge {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        log_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Generate {
            seed,
            depth,
            defects,
            lattice_cells,
            strut_thickness,
            pattern,
            style,
            display,
            target,
            measure,
            out,
        } => {
            let params = GenerateParams {
                seed,
                depth,
                defects,
                lattice_cells,
                strut_thickness,
                pattern: match pattern {
                    PatternArg::GridStruts => LatticePattern::GridStruts,
                    PatternArg::GyroidApprox => LatticePattern::GyroidApprox,
                },
                style: match style {
                    StyleArg::Structured => NavStyle::Structured,
                    StyleArg::Unstructured => NavStyle::Unstructured,
                },
                display: match display {
                    DisplayArg::Selection => DisplayMode::Selection,
                    DisplayArg::Everything => DisplayMode::Everything,
                },
                target_index: target,
                measure: match measure {
                    MeasureArg::Time => Measure::Time,
                    MeasureArg::Awareness => Measure::Awareness,
                },
            };
            let doc = SceneDocument::generate(&params).map_err(|e| match e {
                SceneError::Config(_) | SceneError::UnknownTarget(_) => usage(e),
                _ => Failure::Domain(e.into()),
            })?;
            emit(out.as_deref(), &(doc.to_json() + "\n"))
        }
        Command::Replay { scene, log } => cmd_replay(&scene, &log),
        Command::Agent {
            scene,
            strategy: Strategy::Oracle,
            log_out,
        } => cmd_agent(&scene, log_out.as_deref()),
        Command::Schedule { n, seed } => {
            let doc = ScheduleExport::build(n, seed).map_err(usage)?;
            print_json(&doc)
        }
        Command::Analyze { metrics, ssq, text } => cmd_analyze(&metrics, ssq.as_deref(), text),
        Command::Bridge { scene, log_out } => cmd_bridge(&scene, log_out.as_deref()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Usage)
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Domain),
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing stdout")
            .map_err(Failure::Domain),
    }
}

fn print_json<T: Serialize>(value: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.into()))?;
    emit(None, &(text + "\n"))
}

fn load_scene(path: &Path) -> Result<SceneDocument, Failure> {
    SceneDocument::from_json(&read(path)?)
        .with_context(|| format!("scene {}", path.display()))
        .map_err(Failure::Usage)
}

fn cmd_replay(scene: &Path, log: &Path) -> CmdResult {
    let doc = load_scene(scene)?;
    let parsed = EventLog::from_jsonl(&read(log)?)
        .with_context(|| format!("log {}", log.display()))
        .map_err(Failure::Usage)?;
    let setup = doc.trial_setup().map_err(usage)?;
    let outcome = replay(setup, &parsed.log).map_err(|e| match e {
        StudyError::Replay(_) => usage(e),
        other => Failure::Internal(other.into()),
    })?;
    let mut report = serde_json::to_value(outcome.summary()).map_err(|e| Failure::Internal(e.into()))?;
    report["truncated"] = json!(parsed.truncated);
    print_json(&report)?;
    if parsed.truncated {
        return Err(Failure::Incomplete("log ends in a truncated line".into()));
    }
    if !outcome.completed {
        return Err(Failure::Incomplete("target was not revealed".into()));
    }
    Ok(())
}

fn cmd_agent(scene: &Path, log_out: Option<&Path>) -> CmdResult {
    let doc = load_scene(scene)?;
    let setup = doc.trial_setup().map_err(usage)?;
    let run = run_oracle_agent(&setup).map_err(|e| Failure::Internal(e.into()))?;
    if let Some(path) = log_out {
        emit(Some(path), &run.log.to_jsonl())?;
    }
    let mut report = serde_json::to_value(run.outcome.summary()).map_err(|e| Failure::Internal(e.into()))?;
    report["style"] = json!(doc.nav.style);
    report["aims"] = json!(run.aims);
    report["confirms"] = json!(run.confirms);
    if log_out.is_none() {
        report["log"] = json!(run.log.entries);
    }
    print_json(&report)
}

/// Reads every `*.json` file in `dir` (sorted by name); each holds one
/// trial record or an array of them.
fn load_records(dir: &Path) -> Result<Vec<TrialRecord>, Failure> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))
        .map_err(Failure::Usage)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut records = Vec::new();
    for path in paths {
        let value: Value = serde_json::from_str(&read(&path)?)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(Failure::Usage)?;
        let parsed = if value.is_array() {
            serde_json::from_value::<Vec<TrialRecord>>(value)
        } else {
            serde_json::from_value::<TrialRecord>(value).map(|r| vec![r])
        };
        records.extend(
            parsed
                .with_context(|| format!("trial records in {}", path.display()))
                .map_err(Failure::Usage)?,
        );
    }
    Ok(records)
}

fn cmd_analyze(dir: &Path, ssq: Option<&Path>, text: bool) -> CmdResult {
    let records = load_records(dir)?;
    let mut report = analyze_records(&records).map_err(usage)?;
    if let Some(path) = ssq {
        let rows: Vec<SsqRecord> = serde_json::from_str(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(Failure::Usage)?;
        report.ssq = analyze_ssq(&rows, &SsqWeightConfig::standard()).map_err(usage)?;
    }
    if text {
        emit(None, &format_table(&report))
    } else {
        print_json(&report)
    }
}

fn cmd_bridge(scene: &Path, log_out: Option<&Path>) -> CmdResult {
    let doc = load_scene(scene)?;
    let setup = doc.trial_setup().map_err(usage)?;
    let mut bridge = Bridge::new(setup).map_err(usage)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for line in io::stdin().lock().lines() {
        let line = line.map_err(|e| Failure::Domain(e.into()))?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(out, "{}", bridge.handle_line(&line)).map_err(|e| Failure::Domain(e.into()))?;
        out.flush().map_err(|e| Failure::Domain(e.into()))?;
    }
    if let Some(path) = log_out {
        emit(Some(path), &bridge.recorded().to_jsonl())?;
    }
    Ok(())
}
