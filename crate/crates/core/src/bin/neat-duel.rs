use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use neat_duel::cli::{self, CliError, DuelRequest};
use neat_duel::duel::Winner;

/// Coevolve robot duel controllers with NEAT and measure progress.
#[derive(Parser)]
#[command(name = "neat-duel", version)]
struct Args {
    /// Worker threads for game evaluation (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its archive.
    Evolve {
        config: PathBuf,
        /// Archive directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play one duel. Exit status: 0 A wins, 3 B wins, 4 draw.
    Duel {
        genome_a: PathBuf,
        genome_b: PathBuf,
        /// Run config supplying the duel physics.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use comparison food layout N instead of the training layout.
        #[arg(long)]
        layout: Option<usize>,
        /// Start robot A on the east side.
        #[arg(long)]
        swap: bool,
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Recompute the dominance hierarchy of an archive.
    Tournament {
        archive: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a champion against the dominance hierarchies of archives.
    Compare {
        champion: PathBuf,
        #[arg(required = true)]
        archives: Vec<PathBuf>,
    },
    /// Write CSV tables and SVG charts for an archive.
    Report { archive: PathBuf, out: PathBuf },
}

fn run(args: Args) -> Result<u8, CliError> {
    let mut stdout = std::io::stdout();
    match args.command {
        Command::Evolve { config, out } => {
            let archive = cli::cmd_evolve(&config, out.as_deref(), args.workers, &mut stdout)?;
            println!("dominance levels: {}", archive.hierarchy.len());
        }
        Command::Duel {
            genome_a,
            genome_b,
            config,
            layout,
            swap,
            replay,
        } => {
            let outcome = cli::cmd_duel(&DuelRequest {
                genome_a: &genome_a,
                genome_b: &genome_b,
                config: config.as_deref(),
                layout,
                swap,
                replay: replay.as_deref(),
            })?;
            println!("winner: {:?} reason: {:?} steps: {}", outcome.winner, outcome.reason, outcome.steps);
            return Ok(match outcome.winner {
                Winner::A => 0,
                Winner::B => 3,
                Winner::Draw => 4,
            });
        }
        Command::Tournament { archive, out } => {
            let report = cli::cmd_tournament(&archive, args.workers)?;
            let text = cli::dominance_report(&report.hierarchy);
            print!("{text}");
            println!("comparisons: {}", report.comparisons);
            println!("matches archive: {}", report.matches_archive);
            if let Some(path) = out {
                std::fs::write(&path, &text).map_err(|source| CliError::Io { path, source })?;
            }
            if !report.matches_archive {
                return Err(CliError::Data("recomputed hierarchy differs from the archive".into()));
            }
        }
        Command::Compare { champion, archives } => {
            let report = cli::cmd_compare(&champion, &archives, args.workers)?;
            println!("archive,levels,score");
            for (dir, levels, score) in &report.runs {
                println!("{},{levels},{score:.4}", dir.display());
            }
            println!("mean,,{:.4}", report.mean);
        }
        Command::Report { archive, out } => cli::cmd_report(&archive, &out)?,
    }
    let _ = stdout.flush();
    Ok(0)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
