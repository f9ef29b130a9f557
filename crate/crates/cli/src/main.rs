mod config;
mod modes;
mod table;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use config::{Args, Format};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICS: u8 = 2;

/// Writes next to the target and renames, so a failed write leaves nothing behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.partial"));
    let result = std::fs::write(&tmp, bytes).and_then(|()| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match config::resolve(args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("qbattery: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    if let Ok(n) = std::env::var("QBATTERY_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                // only fails if a pool already exists, which cannot happen here
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("qbattery: QBATTERY_THREADS must be a positive integer, got `{n}`");
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }

    let table = match modes::run(&cfg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("qbattery: {e}");
            return ExitCode::from(EXIT_NUMERICS);
        }
    };
    let bytes = match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    let written = match &cfg.output {
        Some(path) => write_atomic(path, &bytes),
        None => std::io::stdout().lock().write_all(&bytes),
    };
    if let Err(e) = written {
        eprintln!("qbattery: writing output: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    ExitCode::SUCCESS
}
