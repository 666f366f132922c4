mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;

use args::Cli;
use config::Settings;
use error::CliError;

fn init_logging() {
    let env = env_logger::Env::new().filter_or("LITCAL_LOG", "warn");
    env_logger::Builder::from_env(env).format_timestamp(None).init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            // clap's own exit code (2) would collide with the missing-file code
            let _ = e.print();
            let message = e.kind().as_str().unwrap_or("invalid command line").to_string();
            eprintln!("{}", CliError::usage(message));
            return ExitCode::from(1);
        }
    };
    init_logging();
    let result = Settings::load(cli.config.as_deref(), cli.command.section())
        .and_then(|settings| commands::run(cli.command, &settings));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit)
        }
    }
}
