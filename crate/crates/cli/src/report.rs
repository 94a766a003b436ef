use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

/// One JSON object per run. Everything except `duration_secs` is a
/// function of the parameters.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub parameters: Value,
    pub results: Value,
    pub duration_secs: f64,
}

pub struct Timer {
    command: &'static str,
    start: Instant,
}

impl Timer {
    pub fn start(command: &'static str) -> Self {
        Self {
            command,
            start: Instant::now(),
        }
    }

    pub fn finish(self, parameters: impl Serialize, results: impl Serialize) -> RunReport {
        RunReport {
            command: self.command,
            parameters: serde_json::to_value(parameters).expect("serializable parameters"),
            results: serde_json::to_value(results).expect("serializable results"),
            duration_secs: self.start.elapsed().as_secs_f64(),
        }
    }
}
