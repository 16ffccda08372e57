use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod config;
mod input;
mod output;

use args::{Cli, Command};

/// Exit status: 0 success or certified, 1 a theorem check failed, 2 bad input.
fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let run = || -> anyhow::Result<(commands::Outcome, Vec<std::path::PathBuf>)> {
        let cfg = config::resolve(name, cli.command.args())?;
        let outcome = match &cli.command {
            Command::Walks(_) => commands::walks(&cfg),
            Command::Embed(_) => commands::embed(&cfg),
            Command::Verify(_) => commands::verify(&cfg),
            Command::Correlate(_) => commands::correlate_cmd(&cfg),
            Command::Collide(_) => commands::collide(&cfg),
            Command::Lipschitz(_) => commands::lipschitz(&cfg),
        }?;
        let written = output::write_all(&cfg.out_dir, &outcome.artifacts)?;
        Ok((outcome, written))
    };
    match run() {
        Ok((outcome, written)) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            println!("{name}: {}", outcome.summary);
            if outcome.certified {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
