//! Batch front end for `robcal`: calibrate from measurement files, simulate
//! studies, and run Monte Carlo comparisons.
//!
//! Failures are reported as one line on standard error,
//!
//! ```text
//! error[E_PARSE]: measurements.csv:12: column `fx_n`: cannot parse `abc`
//! ```
//!
//! with a process exit status that depends only on the code:
//!
//! | code          | exit | cause                                             |
//! |---------------|------|---------------------------------------------------|
//! | `E_USAGE`     | 2    | bad command line or out-of-range option            |
//! | `E_PARSE`     | 3    | malformed model, measurement or noise file         |
//! | `E_IO`        | 4    | file cannot be read or output cannot be written    |
//! | `E_MODEL`     | 5    | inconsistent model or records that do not match it |
//! | `E_NOISE`     | 6    | missing or insufficient noise information          |
//! | `E_RANK`      | 7    | parameters not identifiable from the data          |
//! | `E_NUMERIC`   | 8    | non-finite data or a degenerate numerical result   |
//! | `E_TRIALS`    | 9    | too many Monte Carlo trials failed                 |

pub mod args;
pub mod commands;
pub mod output;
pub mod report;

use std::path::PathBuf;

use robcal_core::Error;

use crate::args::{Cli, Command};

/// Stable machine-readable error classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Usage,
    Parse,
    Io,
    Model,
    Noise,
    Rank,
    Numeric,
    Trials,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Usage => "E_USAGE",
            ErrorCode::Parse => "E_PARSE",
            ErrorCode::Io => "E_IO",
            ErrorCode::Model => "E_MODEL",
            ErrorCode::Noise => "E_NOISE",
            ErrorCode::Rank => "E_RANK",
            ErrorCode::Numeric => "E_NUMERIC",
            ErrorCode::Trials => "E_TRIALS",
        }
    }

    pub fn exit_status(self) -> i32 {
        match self {
            ErrorCode::Usage => 2,
            ErrorCode::Parse => 3,
            ErrorCode::Io => 4,
            ErrorCode::Model => 5,
            ErrorCode::Noise => 6,
            ErrorCode::Rank => 7,
            ErrorCode::Numeric => 8,
            ErrorCode::Trials => 9,
        }
    }

    pub fn of(err: &Error) -> Self {
        match err {
            Error::Parse { .. } => ErrorCode::Parse,
            Error::Io(_) => ErrorCode::Io,
            Error::InvalidModel(_)
            | Error::InvalidMarker { .. }
            | Error::JointCount { .. }
            | Error::UnknownParameter(_)
            | Error::NoBucket { .. } => ErrorCode::Model,
            Error::MissingNoise(_) | Error::TooFewReplicates { .. } => ErrorCode::Noise,
            Error::RankDeficient { .. } | Error::Underdetermined { .. } => ErrorCode::Rank,
            Error::InvalidArgument(_) => ErrorCode::Usage,
            Error::NonFinite(_)
            | Error::EmptySelection
            | Error::Dimension(_)
            | Error::InvalidWeights(_)
            | Error::NegativeVariance { .. } => ErrorCode::Numeric,
            Error::TooManyFailures { .. } => ErrorCode::Trials,
        }
    }
}

/// The single line printed for a failure.
pub fn error_line(code: ErrorCode, message: &str) -> String {
    let flat: Vec<&str> = message.split_whitespace().collect();
    format!("error[{}]: {}", code.as_str(), flat.join(" "))
}

/// Executes a parsed command line and returns the files written.
pub fn run(cli: &Cli) -> robcal_core::Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Calibrate(a) => commands::run_calibrate(a),
        Command::Simulate(a) => commands::run_simulate(a),
        Command::Compare(a) => commands::run_compare(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_lines_are_single_line() {
        let l = error_line(ErrorCode::Parse, "a.csv:3: bad\n  value");
        assert_eq!(l, "error[E_PARSE]: a.csv:3: bad value");
    }

    #[test]
    fn codes_are_distinct() {
        let all = [
            ErrorCode::Usage,
            ErrorCode::Parse,
            ErrorCode::Io,
            ErrorCode::Model,
            ErrorCode::Noise,
            ErrorCode::Rank,
            ErrorCode::Numeric,
            ErrorCode::Trials,
        ];
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                assert_ne!(a.exit_status(), b.exit_status());
                assert_ne!(a.as_str(), b.as_str());
            }
        }
    }
}
