//! Argument handling and process exit codes.
//!
//! Exit status: 0 for a clean run, 1 when a file runs but misses its
//! declared expectations, 2 for anything that prevents a run (unreadable
//! file, parse or semantic error, engine failure, bad flags).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use frlogic_core::scenario;

use crate::emit::emit;
use crate::report::{json_report, text_report};
use crate::runner::{CollapseOverride, ModeChoice, RunConfig, run_source};

#[derive(Parser)]
#[command(
    name = "frlogic",
    version,
    about = "Collapse-free measurement simulator and statement checker"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiment files and report their statements and checks.
    Run {
        /// Experiment files to run.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Arithmetic backend; defaults to exact when the file allows it.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Seed for sampled collapse outcomes.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace a step with a projective collapse: step=K,outcome=LABEL.
        #[arg(long)]
        collapse: Option<String>,
        /// Report format.
        #[arg(long, value_enum, default_value_t = ReportArg::Text)]
        report: ReportArg,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress the report; only the exit code speaks.
        #[arg(long)]
        quiet: bool,
    },
    /// List the bundled scenarios.
    List,
    /// Write the bundled scenarios as experiment files.
    Emit {
        /// Target directory.
        #[arg(long, default_value = "scenarios")]
        dir: PathBuf,
        /// Scenario names to write; all of them when empty.
        names: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ReportArg {
    Text,
    Json,
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn entry() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => dispatch(cli),
        Err(e) => {
            // Keep clap's own exit convention for --help/--version.
            e.print().ok();
            if e.use_stderr() {
                2
            } else {
                0
            }
        }
    }
}

fn dispatch(cli: Cli) -> i32 {
    match cli.command {
        Command::Run {
            files,
            mode,
            seed,
            collapse,
            report,
            out,
            quiet,
        } => run_files(&files, mode, seed, collapse.as_deref(), report, out.as_deref(), quiet),
        Command::List => {
            for s in scenario::bundled() {
                println!("{:<24} {}", s.name, s.about);
            }
            0
        }
        Command::Emit { dir, names } => emit_bundled(&dir, &names),
    }
}

fn run_files(
    files: &[PathBuf],
    mode: Option<ModeArg>,
    seed: u64,
    collapse: Option<&str>,
    report: ReportArg,
    out: Option<&Path>,
    quiet: bool,
) -> i32 {
    let collapse = match collapse.map(CollapseOverride::parse).transpose() {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{msg}");
            return 2;
        }
    };
    let cfg = RunConfig {
        mode: mode.map(|m| match m {
            ModeArg::Exact => ModeChoice::Exact,
            ModeArg::Float => ModeChoice::Float,
        }),
        seed,
        collapse,
    };

    let mut code = 0;
    let mut texts = Vec::new();
    let mut jsons = Vec::new();
    for path in files {
        let source = match fs::read_to_string(path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                code = 2;
                continue;
            }
        };
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "experiment".to_string());
        match run_source(&name, &source, &cfg) {
            Ok((scenario, run)) => {
                if !run.passed() {
                    code = code.max(1);
                }
                match report {
                    ReportArg::Text => texts.push(text_report(&scenario, &run)),
                    ReportArg::Json => jsons.push(json_report(&scenario, &run)),
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                code = 2;
            }
        }
    }

    let rendered = match report {
        ReportArg::Text => texts.join("\n"),
        ReportArg::Json => {
            if jsons.len() == 1 {
                serde_json::to_string_pretty(&jsons[0]).expect("serializable")
            } else {
                serde_json::to_string_pretty(&jsons).expect("serializable")
            }
        }
    };
    if let Some(path) = out {
        if let Err(e) = fs::write(path, rendered + "\n") {
            eprintln!("{}: {e}", path.display());
            return 2;
        }
    } else if !quiet && !rendered.is_empty() {
        println!("{rendered}");
    }
    code
}

fn emit_bundled(dir: &Path, names: &[String]) -> i32 {
    let all = scenario::bundled();
    let selected: Vec<_> = if names.is_empty() {
        all.iter().collect()
    } else {
        let mut picked = Vec::new();
        for name in names {
            match all.iter().find(|s| s.name == *name) {
                Some(s) => picked.push(s),
                None => {
                    eprintln!("no bundled scenario named `{name}`");
                    return 2;
                }
            }
        }
        picked
    };
    if let Err(e) = fs::create_dir_all(dir) {
        eprintln!("{}: {e}", dir.display());
        return 2;
    }
    for s in selected {
        let path = dir.join(format!("{}.fr", s.name));
        if let Err(e) = fs::write(&path, emit(s)) {
            eprintln!("{}: {e}", path.display());
            return 2;
        }
        println!("{}", path.display());
    }
    0
}
