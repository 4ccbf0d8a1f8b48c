use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use robcal_cli::args::Cli;
use robcal_cli::{error_line, run, ErrorCode};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default();
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", error_line(ErrorCode::Usage, msg));
            return ExitCode::from(ErrorCode::Usage.exit_status() as u8);
        }
    };

    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                log::info!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = ErrorCode::of(&e);
            eprintln!("{}", error_line(code, &e.to_string()));
            ExitCode::from(code.exit_status() as u8)
        }
    }
}
