use std::process::ExitCode;

use acx_cli::report::ErrorRecord;
use acx_cli::{command_name, error_kind, run};
use clap::error::ErrorKind;
use clap::Parser;

fn fail(command: &str, kind: &str, message: String) -> ExitCode {
    let rec = ErrorRecord { command: command.into(), kind: kind.into(), message };
    eprintln!("{}", serde_json::to_string_pretty(&rec).expect("error records serialize"));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match acx_cli::cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("", "Usage", e.to_string()),
    };
    let name = command_name(&cli);
    let (report, csv) = match run(&cli) {
        Ok(r) => r,
        Err(e) => return fail(&name, &error_kind(&e), format!("{e:#}")),
    };
    let text = report.to_json();
    print!("{text}");
    if let Some(p) = &cli.global.report {
        if let Err(e) = std::fs::write(p, &text) {
            return fail(&name, "Io", format!("cannot write {}: {e}", p.display()));
        }
    }
    if let (Some(p), Some(csv)) = (&cli.global.csv, csv) {
        if let Err(e) = std::fs::write(p, csv) {
            return fail(&name, "Io", format!("cannot write {}: {e}", p.display()));
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
