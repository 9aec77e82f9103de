//! `tensornorm` command-line front end.
//!
//! Exit codes: 0 on success, 1 on input errors (and failed `verify`
//! checks), 2 when a solver fails to converge.

mod args;
mod bench;
mod gen;
mod norms;
mod output;
mod verify;

use std::process::ExitCode;

use clap::Parser;
use tensornorm::{exec, Error};

use crate::args::{Cli, Command};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged { .. } | Error::Numerical(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        exec::configure_threads(n);
    }
    let result = match &cli.command {
        Command::Snorm(a) => norms::snorm(a),
        Command::Nnorm(a) => norms::nnorm(a),
        Command::Gen(a) => gen::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Verify(a) => verify::run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_failures_exit_with_two() {
        let nc = Error::NotConverged { iterations: 1, primal_residual: 1.0, stationarity_residual: 1.0 };
        assert_eq!(exit_code(&nc), 2);
        assert_eq!(exit_code(&Error::Numerical("x".into())), 2);
        assert_eq!(exit_code(&Error::Format("x".into())), 1);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 1);
        assert_eq!(exit_code(&Error::EmptyPointSet), 1);
    }
}
