mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use commands::Outcome;

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let (format, result) = match &cli.command {
        Command::Construct(t) => (t.format, commands::construct(t)),
        Command::Verify(a) => (a.target.format, commands::verify(a)),
        Command::Integrate(a) => (a.target.format, commands::integrate(a)),
        Command::Sweep(t) => (t.format, commands::sweep(t)),
    };
    match result {
        Ok(outcome) => {
            emit(format, &outcome);
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("hamext: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(format: Format, o: &Outcome) {
    let text = match format {
        Format::Plain => o.plain.clone(),
        Format::Latex => o.latex.clone().unwrap_or_else(|| o.plain.clone()),
        Format::Json => serde_json::to_string_pretty(&o.json).expect("serializable") + "\n",
    };
    // a reader that closed the pipe early is not an error worth reporting
    let _ = std::io::stdout().write_all(text.as_bytes());
}
