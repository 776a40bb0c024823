//! `ghostsim`: scenario files in, CSV profiles and ray diagrams out.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ghostsim::Error;

use crate::scenario::Scenario;

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Verb {
    /// Solve the coincidence imaging equation for both sources
    Solve,
    /// Wave-model ghost image
    Image,
    /// Monte-Carlo correlation of thermal light
    Mc,
    /// Ray-construction diagrams
    Rays,
    /// Both images of a type-I source
    Dual,
}

#[derive(Parser)]
#[command(name = "ghostsim", version, about = "Coincidence imaging with thermal and entangled light")]
struct Args {
    #[command(subcommand)]
    verb: Verb,
    /// Scenario file (TOML)
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory; must exist
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides run.seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Evaluate layouts that miss the imaging equation
    #[arg(long, global = true)]
    allow_defocus: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::DegenerateGeometry(_) => 3,
        Error::SamplingViolation(_) => 4,
        Error::Io(_) => 5,
        _ => 2,
    }
}

fn run(args: &Args) -> Result<(), Error> {
    let path = args
        .scenario
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("--scenario is required".into()))?;
    let mut sc = Scenario::load(path)?;
    if let Some(seed) = args.seed {
        sc.run.seed = seed;
    }
    sc.run.allow_defocus |= args.allow_defocus;
    let writes = args.verb != Verb::Solve;
    if writes && !args.out.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("output directory {} does not exist", args.out.display()),
        )));
    }
    let out = match args.verb {
        Verb::Solve => commands::solve(&sc)?,
        Verb::Image => commands::image(&sc)?,
        Verb::Mc => commands::monte_carlo(&sc)?,
        Verb::Rays => commands::rays(&sc)?,
        Verb::Dual => commands::dual(&sc)?,
    };
    print!("{}", out.stdout);
    for p in out.commit(&args.out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ghostsim: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
