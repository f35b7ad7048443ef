mod args;
mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use sylow_stats::Error;

use args::{Cli, Format};

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Argument(_) => 2,
        Error::Precision(_) | Error::Budget(_) => 3,
        Error::Invariant(_) | Error::Falsified(_) => 4,
        Error::Io(_) | Error::Json(_) => 1,
    }
}

fn emit(report: &output::Report, format: Format, path: Option<&std::path::Path>) -> io::Result<()> {
    let mut out: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match format {
        Format::Json => out.write_all(report.to_json().as_bytes())?,
        Format::Csv => report.write_csv(&mut out).map_err(io::Error::other)?,
    }
    out.flush()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let c = commands::common(&cli.command);
    let report = match commands::run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = emit(&report, c.format, c.output.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    for note in &report.notes {
        eprintln!("{note}");
    }
    if !report.falsified.is_empty() {
        for f in &report.falsified {
            eprintln!("falsified: {f}");
        }
        return ExitCode::from(4);
    }
    ExitCode::SUCCESS
}
