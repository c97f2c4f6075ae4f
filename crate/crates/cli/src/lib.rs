//! Scenario files, query execution and reports for `conhist`.

pub mod complex;
pub mod demos;
pub mod error;
pub mod report;
pub mod run;
pub mod scenario;
pub mod workspace;

pub use demos::{find_demo, list_demos, Demo, DEMOS};
pub use error::CliError;
pub use report::{QueryRecord, Report, Status};
pub use run::{run, RunOptions};
pub use scenario::{parse_scenario, parse_syntax, Scenario};
