mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::Cli;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation; exit code 2.
    Usage(String),
    /// Failure while running; exit code 1.
    Runtime(&'static str, String),
}

impl From<dcsbm_core::Error> for CliError {
    fn from(e: dcsbm_core::Error) -> Self {
        match e {
            dcsbm_core::Error::Config(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.kind(), other.to_string()),
        }
    }
}

fn error_line(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{line}");
}

fn parse(argv: &[OsString]) -> Result<Cli, clap::Error> {
    let matches = Cli::command().try_get_matches_from(argv)?;
    let cli = Cli::from_arg_matches(&matches)?;
    match &cli.config {
        None => Ok(cli),
        Some(path) => {
            let merged = match config::merge(argv, &matches, path) {
                Ok(m) => m,
                Err(e) => {
                    return Err(Cli::command().error(clap::error::ErrorKind::InvalidValue, describe(&e)));
                }
            };
            let matches = Cli::command().try_get_matches_from(merged)?;
            Cli::from_arg_matches(&matches)
        }
    }
}

fn describe(e: &CliError) -> String {
    match e {
        CliError::Usage(m) | CliError::Runtime(_, m) => m.clone(),
    }
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let text = e.render().to_string();
            let body: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect();
            error_line("usage", body.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };

    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_target(false)
        .format_timestamp(None)
        .init();

    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            error_line("usage", &msg);
            ExitCode::from(2)
        }
        Err(CliError::Runtime(kind, msg)) => {
            eprintln!("error: {msg}");
            error_line(kind, &msg);
            ExitCode::from(1)
        }
    }
}
