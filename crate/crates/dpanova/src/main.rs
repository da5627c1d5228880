use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use dpanova::cli::{run, Cli};
use dpanova::error::{ErrorBody, ErrorRecord};

fn fail(record: &ErrorRecord, code: u8) -> ExitCode {
    let json = serde_json::to_string(record).unwrap_or_else(|_| String::from(r#"{"error":{"kind":"internal"}}"#));
    eprintln!("{json}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let record = ErrorRecord {
                error: ErrorBody {
                    kind: "usage",
                    message: e.to_string().trim().to_owned(),
                },
            };
            return fail(&record, 2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e.record(), if e.kind() == "usage" { 2 } else { 1 }),
    }
}
