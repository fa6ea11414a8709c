//! Driver behind the `wellposed` command: system files, reports and
//! simulations.

pub mod pipeline;
pub mod simulate;
pub mod system;

pub use pipeline::{AnalysisReport, GaugeRequest, Session, Settings, SCHEMA_VERSION};
pub use system::SystemFile;

use wellposed_core::error::{Error, ErrorKind};

/// Process exit status for a failure.
pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Input | ErrorKind::Numerical => 2,
        ErrorKind::Unsupported => 3,
        ErrorKind::Inconsistent => 4,
        ErrorKind::Budget => 5,
        ErrorKind::Internal => 1,
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
