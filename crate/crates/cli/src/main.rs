mod args;
mod commands;
mod error;
mod manifest;
mod settings;

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use serde_json::Map;

use args::{Cli, Command};
use commands::Output;
use error::{CliError, CliResult};
use manifest::RunManifest;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => {
                    print_usage_help();
                    ExitCode::from(3)
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Help of the subcommand named on the command line, or of the program.
fn print_usage_help() {
    let mut cmd = Cli::command();
    cmd.build();
    let sub = std::env::args()
        .skip(1)
        .find(|a| !a.starts_with('-'))
        .and_then(|name| cmd.find_subcommand(&name).cloned());
    let help = match sub {
        Some(mut s) => s.render_help(),
        None => cmd.render_help(),
    };
    eprintln!("\n{help}");
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if cli.seed.is_some() {
        return Err(CliError::usage(
            "--seed is not accepted: every command is deterministic",
        ));
    }
    let name = cli.command.name();
    let file = match &cli.config {
        Some(path) => settings::file_layer(path, name)?,
        None => Map::new(),
    };
    let start = Instant::now();
    let out = match &cli.command {
        Command::Roots(a) => commands::roots(a, file)?,
        Command::Curves(a) => commands::curves(a, file)?,
        Command::Toy(a) => commands::toy_cmd(a, file)?,
        Command::Profile(a) => commands::profile(a, file)?,
        Command::Kernel(a) => commands::kernel(a, file)?,
        Command::Simulate(a) => commands::simulate(a, file)?,
        Command::Table(a) => commands::table(a, file)?,
    };
    let elapsed = start.elapsed().as_secs_f64();
    let stdout = io::stdout();
    let mut w = stdout.lock();
    match &cli.out {
        Some(dir) => {
            write_outputs(dir, name, &out, elapsed)?;
            print_summary(&mut w, &out)?;
        }
        None => match &out.stdout_csv {
            Some(text) => w.write_all(text.as_bytes())?,
            None => print_summary(&mut w, &out)?,
        },
    }
    Ok(())
}

fn print_summary<W: Write>(w: &mut W, out: &Output) -> io::Result<()> {
    for (k, v) in &out.summary {
        writeln!(w, "{k}={v}")?;
    }
    Ok(())
}

fn write_outputs(dir: &std::path::Path, name: &str, out: &Output, elapsed: f64) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    for (file, bytes) in &out.files {
        fs::write(dir.join(file), bytes)?;
    }
    RunManifest {
        command: name.to_string(),
        params: out.params.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: out.files.iter().map(|(f, _)| f.clone()).collect(),
        duration_seconds: elapsed,
    }
    .write(dir)
}
