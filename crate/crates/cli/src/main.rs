//! `indax`: Scott analysis, independent axiomatizations, set families and bounded
//! verification from the command line.
//!
//! Exit codes: 0 when every check passes, 1 when a check or a precondition fails, 2 when
//! the input is malformed or a resource cap stops the run.

mod commands;
mod input;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgGroup, Parser, Subcommand};
use indax_core::model::EnumerationLimits;
use indax_core::scott::DEFAULT_MATERIALIZE_CAP;

use commands::{FuzzCounts, Globals, MethodArg, Outcome, SetfamMode, TransformArgs};

#[derive(Parser, Debug)]
#[command(name = "indax", version, about = "Independent axiomatizations over bounded model spaces")]
struct Cli {
    /// Largest universe size of the model space.
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    max_size: u64,
    /// Seed for the fuzz command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for report.json and any emitted files; stdout gets the report otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Maximum number of isomorphism classes to enumerate.
    #[arg(long, global = true)]
    cap_classes: Option<usize>,
    /// Largest structure whose Scott sentence may be built.
    #[arg(long, global = true, default_value_t = DEFAULT_MATERIALIZE_CAP)]
    cap_materialize: usize,
    /// Sentences with more expanded nodes than this are reported by size only.
    #[arg(long, global = true, default_value_t = 100_000)]
    print_limit: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scott height, canonical invariant and Scott sentence of a structure file.
    Scott { structure: PathBuf },
    /// Counts of realized types per level for the models of a theory.
    Analyze { theory: PathBuf },
    /// Rewrite a theory into an equivalent independent one.
    Transform {
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        theory: PathBuf,
        /// Index of the pivot sentence (partition method).
        #[arg(long)]
        pivot: Option<usize>,
        /// Theory file with one block per non-pivot sentence (partition method).
        #[arg(long)]
        parts: Option<PathBuf>,
        /// Theory file of sentences to pair with the input (reznikoff method).
        #[arg(long)]
        extra: Option<PathBuf>,
    },
    /// Independence checks and transforms on finite set families.
    #[command(group(ArgGroup::new("source").required(true).args(["family", "from_theory"])))]
    #[command(group(ArgGroup::new("mode").args(["check", "independize", "case1", "case2"])))]
    Setfam {
        family: Option<PathBuf>,
        /// Use the model sets of a theory's sentences as the family.
        #[arg(long)]
        from_theory: Option<PathBuf>,
        /// Report whether the family is independent (the default).
        #[arg(long)]
        check: bool,
        /// Replace the family by an equivalent independent one.
        #[arg(long)]
        independize: bool,
        /// Apply the complement-splitting transform around the given set.
        #[arg(long, value_name = "I0")]
        case1: Option<usize>,
        /// Apply the cumulative-union transform.
        #[arg(long)]
        case2: bool,
    },
    /// Check independence of a theory and, optionally, equivalence with another.
    Verify {
        theory: PathBuf,
        /// Check independence; on by default when --equivalent-to is absent.
        #[arg(long)]
        independent: bool,
        #[arg(long)]
        equivalent_to: Option<PathBuf>,
    },
    /// Run the randomized verification suites from --seed.
    Fuzz {
        #[arg(long, default_value_t = 500)]
        theories: usize,
        #[arg(long, default_value_t = 1000)]
        families: usize,
        #[arg(long, default_value_t = 50)]
        partitions: usize,
        #[arg(long, default_value_t = 100)]
        reznikoff: usize,
        #[arg(long, default_value_t = 20)]
        trees: usize,
        #[arg(long, default_value_t = 2)]
        tree_level: usize,
    },
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let mut limits = EnumerationLimits::default();
    if let Some(k) = cli.cap_classes {
        limits.max_classes = k;
    }
    let g = Globals {
        max_size: cli.max_size as usize,
        seed: cli.seed,
        limits,
        materialize_cap: cli.cap_materialize,
        print_limit: cli.print_limit,
    };
    match &cli.command {
        Command::Scott { structure } => commands::scott(structure, &g),
        Command::Analyze { theory } => commands::analyze(theory, &g),
        Command::Transform {
            method,
            theory,
            pivot,
            parts,
            extra,
        } => commands::transform(
            &TransformArgs {
                method: *method,
                theory,
                pivot: *pivot,
                parts: parts.as_deref(),
                extra: extra.as_deref(),
            },
            &g,
        ),
        Command::Setfam {
            family,
            from_theory,
            independize,
            case1,
            case2,
            ..
        } => {
            let mode = match (independize, case1, case2) {
                (true, _, _) => SetfamMode::Independize,
                (_, Some(i0), _) => SetfamMode::Case1(*i0),
                (_, _, true) => SetfamMode::Case2,
                _ => SetfamMode::Check,
            };
            commands::setfam(family.as_deref(), from_theory.as_deref(), mode, &g)
        }
        Command::Verify {
            theory,
            independent,
            equivalent_to,
        } => {
            let independent = *independent || equivalent_to.is_none();
            commands::verify(theory, independent, equivalent_to.as_deref(), &g)
        }
        Command::Fuzz {
            theories,
            families,
            partitions,
            reznikoff,
            trees,
            tree_level,
        } => commands::fuzz(
            &FuzzCounts {
                theories: *theories,
                families: *families,
                partitions: *partitions,
                reznikoff: *reznikoff,
                trees: *trees,
                tree_level: *tree_level,
            },
            &g,
        ),
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<()> {
    let mut report = serde_json::to_string_pretty(&outcome.report)?;
    report.push('\n');
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join("report.json"), &report).with_context(|| format!("writing {}", dir.display()))?;
            for (name, contents) in &outcome.files {
                fs::write(dir.join(name), contents).with_context(|| format!("writing {name}"))?;
            }
        }
        None => std::io::stdout().lock().write_all(report.as_bytes())?,
    }
    for line in &outcome.summary {
        eprintln!("{line}");
    }
    eprintln!("{}", if outcome.passed { "PASS" } else { "FAIL" });
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&cli, &outcome) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
