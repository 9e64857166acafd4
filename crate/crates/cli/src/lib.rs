//! Scenario runner: JSON configs in, JSON reports (plus optional CSV side files) out.

mod report;
mod scenario;
mod tasks;

use std::path::Path;

pub use report::{Report, Status, TaskError, TaskReport};
pub use scenario::{
    ClassifyParams, ConjugacyParams, CutDesc, ExpansivityParams, HomoclinicParams, HypercyclicParams, LinfParams, NamedCut,
    Parameters, PerturbationDesc, Scenario, ShadowMethodDesc, ShadowParams, SplitDesc, SuiteParams, Task, VectorDesc,
};
pub use tasks::{num, run_scenario, run_suite, scalar_json, vector_json};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("invalid config at {location}: {message}")]
    ConfigInvalid { location: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::ConfigInvalid { .. } => "CONFIG_INVALID",
            CliError::Io(_) => "IO_ERROR",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid { .. } => 2,
            CliError::Io(_) => 1,
        }
    }
}

pub struct Example {
    pub name: &'static str,
    pub description: &'static str,
    pub json: &'static str,
}

pub const EXAMPLES: &[Example] = &[
    Example { name: "lockdown", description: "generalized hyperbolic weighted shift with homoclinic points", json: include_str!("../scenarios/lockdown.json") },
    Example { name: "tucides", description: "diagonal operator whose weights approach the unit circle", json: include_str!("../scenarios/tucides.json") },
    Example { name: "diag", description: "hyperbolic diag(1/2, 2): bounds, shadowing and windowed estimates", json: include_str!("../scenarios/diag.json") },
    Example { name: "rotation", description: "rotation by a quarter turn: no spectral splitting, growing windowed constants", json: include_str!("../scenarios/rotation.json") },
    Example { name: "rolewicz", description: "scaled backward shift with a dense orbit witness", json: include_str!("../scenarios/rolewicz.json") },
    Example { name: "gh_bump", description: "conjugacy between diag(1/2, 2) and a bump perturbation", json: include_str!("../scenarios/gh_bump.json") },
];

pub fn example(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}

/// Loads a config path, or a bundled example written as `example:<name>`.
pub fn load_scenario(config: &str) -> Result<Scenario, CliError> {
    match config.strip_prefix("example:") {
        Some(name) => {
            let ex = example(name).ok_or_else(|| CliError::ConfigInvalid {
                location: config.to_string(),
                message: format!("no bundled example named {name:?}"),
            })?;
            Scenario::from_json(ex.json, config)
        }
        None => Scenario::from_path(Path::new(config)),
    }
}

/// Runs a scenario. CSV side files land next to the report path `out`, or in the
/// working directory without one.
pub fn run_config(config: &str, out: Option<&Path>) -> Result<Report, CliError> {
    let scenario = load_scenario(config)?;
    let side_dir = out.and_then(Path::parent).filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    Ok(run_scenario(&scenario, side_dir))
}

pub fn write_report(report: &Report, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, report.to_json_pretty() + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_examples_parse() {
        for ex in EXAMPLES {
            let sc = Scenario::from_json(ex.json, ex.name).unwrap_or_else(|e| panic!("{}: {e}", ex.name));
            assert_eq!(sc.name, ex.name);
            assert!(!sc.tasks.is_empty());
        }
    }

    #[test]
    fn unknown_task_is_rejected_with_location() {
        let json = r#"{"name":"x","operator":{"kind":"shift","offset":1,"norm":"l2"},"tasks":["classify","fly"]}"#;
        match Scenario::from_json(json, "inline") {
            Err(CliError::ConfigInvalid { location, .. }) => assert!(location.starts_with("inline:1:")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let json = r#"{"name":"x","operator":{"kind":"shift","offset":1,"norm":"l2"},"parameters":{"shadow":{"delt":1}}}"#;
        assert_eq!(Scenario::from_json(json, "p").unwrap_err().code(), "CONFIG_INVALID");
    }

    #[test]
    fn bad_operator_is_a_config_error() {
        let json = r#"{"name":"x","operator":{"kind":"dense","matrix":[[1,2]],"norm":"l2"}}"#;
        let e = Scenario::from_json(json, "p").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn example_prefix() {
        assert_eq!(load_scenario("example:diag").unwrap().name, "diag");
        assert!(load_scenario("example:nope").is_err());
        assert_eq!(load_scenario("/definitely/not/here.json").unwrap_err().code(), "IO_ERROR");
    }

    #[test]
    fn non_finite_numbers_are_strings() {
        assert_eq!(num(f64::INFINITY), serde_json::json!("inf"));
        assert_eq!(num(1.5), serde_json::json!(1.5));
    }
}
