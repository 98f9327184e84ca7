//! `bss`: simulate Brownian semistationary paths, estimate multipower variations,
//! evaluate asymptotic constants and run Monte Carlo experiments.

mod commands;

use std::process::ExitCode;

use bss_core::Error;
use clap::Parser;

use commands::Cli;

/// Exit status for each error class.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Validation(_) | Error::Domain(_) | Error::Condition(_) | Error::Json(_) | Error::Io(_) => 2,
        Error::Integration { .. } | Error::DegenerateCovariance(_) | Error::Simulation(_) => 3,
        Error::Data(_) | Error::Csv(_) => 4,
    }
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("BSS_THREADS") {
        let n: usize = v.parse().map_err(|_| format!("BSS_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match commands::dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
