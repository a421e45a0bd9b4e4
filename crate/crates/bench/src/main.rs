use std::fs::File;
use std::io::BufWriter;
use std::process::ExitCode;

use clap::Parser;
use spgemm_bench::cli::Cli;
use spgemm_bench::{run, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let out = run(cli)?;
    let json_to_stdout = cli
        .global
        .json
        .as_deref()
        .is_some_and(|p| p.as_os_str() == "-");
    if json_to_stdout {
        println!("{}", out.report.to_json());
    } else {
        for line in &out.summary {
            println!("{line}");
        }
    }
    if let Some(path) = cli.global.json.as_deref().filter(|_| !json_to_stdout) {
        out.report.write_json(path)?;
    }
    if let (Some(path), Some(csv)) = (&cli.global.csv, &out.csv) {
        csv.write(BufWriter::new(File::create(path)?))?;
    }
    match out.failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}
