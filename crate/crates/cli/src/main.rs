//! `fgrow`: growth, folding, mapping tori, splittings and divergence.

mod commands;
mod report;
mod svg;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{DivergenceArgs, FoldArgs, GrowthArgs, HierarchyArgs, SplitArgs, TorusArgs};

#[derive(Parser)]
#[command(name = "fgrow", version, about = "Free group automorphisms and their mapping tori")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the growth of a map or of one conjugacy class.
    Growth(GrowthArgs),
    /// Fold a subgroup to its Stallings graph.
    Fold(FoldArgs),
    /// Mapping torus presentation and fiber intersections.
    Torus(TorusArgs),
    /// Validate a graph of groups, verify it is fixed, induce to the torus.
    Split(SplitArgs),
    /// Verify a fixed hierarchy and report its depth.
    Hierarchy(HierarchyArgs),
    /// Cayley-ball detour sampling.
    Divergence(DivergenceArgs),
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("FGROW_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("FGROW_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("fgrow: {e}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Growth(a) => commands::growth(a),
        Command::Fold(a) => commands::fold(a),
        Command::Torus(a) => commands::torus(a),
        Command::Split(a) => commands::split(a),
        Command::Hierarchy(a) => commands::hierarchy(a),
        Command::Divergence(a) => commands::divergence(a),
    };
    match result {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &out.text),
                None => std::io::stdout().write_all(out.text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("fgrow: cannot write output: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("fgrow: {f}");
            ExitCode::from(f.code())
        }
    }
}
