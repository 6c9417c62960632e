use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use lgdepth::cli::{run, Cli};

fn report(kind: &str, message: &str) {
    eprintln!(
        "{}",
        serde_json::json!({"error": {"kind": kind, "message": message}})
    );
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("usage", e.render().to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
