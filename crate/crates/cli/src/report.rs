use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::scenario::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskError {
    pub code: String,
    pub message: String,
}

impl From<lindyn_core::Error> for TaskError {
    fn from(e: lindyn_core::Error) -> Self {
        Self { code: e.code().to_string(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: Task,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<TaskError>,
    pub wall_clock_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub version: String,
    pub rng_seed: u64,
    pub tasks: Vec<TaskReport>,
}

impl Report {
    pub fn new(scenario: impl Into<String>, rng_seed: u64) -> Self {
        Self { scenario: scenario.into(), version: crate::VERSION.to_string(), rng_seed, tasks: Vec::new() }
    }

    pub fn has_errors(&self) -> bool {
        self.tasks.iter().any(|t| t.status == Status::Error)
    }

    pub fn task(&self, task: Task) -> Option<&TaskReport> {
        self.tasks.iter().find(|t| t.task == task)
    }

    /// Copy with every wall-clock field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for t in &mut r.tasks {
            t.wall_clock_ms = 0.0;
        }
        r
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are always serializable")
    }
}
