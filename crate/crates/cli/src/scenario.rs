use std::collections::BTreeMap;
use std::path::Path;

use lindyn_core::operators::JsonScalar;
use lindyn_core::splitting::{spectral_split, Cut, Splitting, DEFAULT_CIRCLE_GAP};
use lindyn_core::stability::LipschitzPerturbation;
use lindyn_core::{DenseMatrix, DenseVector, LinOp, NormTag, OpDesc, Scalar, SparseBiSeq, Vector};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classify,
    Shadow,
    Bounds,
    Linf,
    Expansivity,
    Hypercyclic,
    Conjugacy,
    Homoclinic,
    Suite,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Classify => "classify",
            Task::Shadow => "shadow",
            Task::Bounds => "bounds",
            Task::Linf => "linf",
            Task::Expansivity => "expansivity",
            Task::Hypercyclic => "hypercyclic",
            Task::Conjugacy => "conjugacy",
            Task::Homoclinic => "homoclinic",
            Task::Suite => "suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedCut {
    AllStable,
    AllUnstable,
}

/// `S` is the coordinates with index `<= cut`; or one of the two trivial splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutDesc {
    AtMost(i64),
    Named(NamedCut),
}

impl From<CutDesc> for Cut {
    fn from(c: CutDesc) -> Self {
        match c {
            CutDesc::AtMost(k) => Cut::AtMost(k),
            CutDesc::Named(NamedCut::AllStable) => Cut::AllStable,
            CutDesc::Named(NamedCut::AllUnstable) => Cut::AllUnstable,
        }
    }
}

fn default_gap() -> f64 {
    DEFAULT_CIRCLE_GAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitDesc {
    Coordinate { cut: CutDesc },
    Spectral {
        #[serde(default = "default_gap")]
        circle_gap: f64,
    },
    Projection { p_s: Vec<Vec<JsonScalar>> },
}

impl SplitDesc {
    pub fn build(&self, op: &LinOp) -> lindyn_core::Result<Splitting> {
        match self {
            SplitDesc::Coordinate { cut } => Ok(Splitting::coordinate((*cut).into(), op.norm_tag())),
            SplitDesc::Spectral { circle_gap } => spectral_split(op, *circle_gap),
            SplitDesc::Projection { p_s } => {
                let rows = p_s.iter().map(|r| r.iter().map(|z| z.value()).collect()).collect();
                Splitting::from_projections(DenseMatrix::new(rows)?, op.norm_tag())
            }
        }
    }
}

/// A dense vector as a list of entries, or a finitely supported sequence as
/// `{"index": value}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorDesc {
    Dense(Vec<JsonScalar>),
    Sparse(BTreeMap<String, JsonScalar>),
}

impl VectorDesc {
    pub fn build(&self, tag: NormTag) -> lindyn_core::Result<Vector> {
        match self {
            VectorDesc::Dense(v) => Ok(Vector::Dense(DenseVector::new(v.iter().map(|z| z.value()).collect(), tag)?)),
            VectorDesc::Sparse(m) => {
                let mut entries = Vec::with_capacity(m.len());
                for (k, z) in m {
                    let k: i64 = k
                        .trim()
                        .parse()
                        .map_err(|_| lindyn_core::Error::InvalidInput(format!("sequence index {k:?} is not an integer")))?;
                    entries.push((k, z.value()));
                }
                Ok(Vector::Sparse(SparseBiSeq::from_entries(entries, tag)?))
            }
        }
    }
}

fn point(v: &[f64]) -> Vec<Scalar> {
    v.iter().map(|x| Scalar::new(*x, 0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationDesc {
    Bump { center: Vec<f64>, direction: Vec<f64>, sup: f64, lip: f64 },
    Constant { value: Vec<f64> },
    Zero { dim: usize },
}

impl PerturbationDesc {
    pub fn build(&self, tag: NormTag) -> lindyn_core::Result<LipschitzPerturbation> {
        match self {
            PerturbationDesc::Bump { center, direction, sup, lip } => {
                LipschitzPerturbation::bump(point(center), point(direction), *sup, *lip, tag)
            }
            PerturbationDesc::Constant { value } => LipschitzPerturbation::constant(point(value), tag),
            PerturbationDesc::Zero { dim } => Ok(LipschitzPerturbation::zero(*dim, tag)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowMethodDesc {
    #[default]
    Auto,
    Series,
    Contraction,
    Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyParams {
    pub horizon: usize,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self { horizon: lindyn_core::shadowing::CERTIFY_HORIZON }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadowParams {
    pub delta: f64,
    pub start: i64,
    pub end: i64,
    pub seed: Option<VectorDesc>,
    pub method: ShadowMethodDesc,
    pub tail_tol: f64,
    pub trajectory_csv: Option<String>,
}

impl Default for ShadowParams {
    fn default() -> Self {
        Self { delta: 1e-3, start: 0, end: 100, seed: None, method: ShadowMethodDesc::Auto, tail_tol: 1e-12, trajectory_csv: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinfParams {
    pub n_list: Vec<usize>,
    pub samples: usize,
    pub scan_radii: Vec<f64>,
    pub scan_trials: usize,
    pub scan_csv: Option<String>,
}

impl Default for LinfParams {
    fn default() -> Self {
        Self { n_list: vec![8, 16, 32], samples: 8, scan_radii: Vec::new(), scan_trials: 4, scan_csv: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansivityParams {
    pub gap: f64,
    pub m_max: usize,
    pub n_list: Vec<usize>,
    pub horizon: usize,
    pub growth_csv: Option<String>,
}

impl Default for ExpansivityParams {
    fn default() -> Self {
        let q = lindyn_core::expansivity::ExpansivityQuery::default();
        Self { gap: q.gap, m_max: q.m_max, n_list: q.n_list, horizon: q.horizon, growth_csv: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypercyclicParams {
    pub targets: Vec<VectorDesc>,
    pub random_targets: usize,
    pub eps: f64,
    pub step_budget: usize,
}

impl Default for HypercyclicParams {
    fn default() -> Self {
        Self { targets: Vec::new(), random_targets: 3, eps: 1e-6, step_budget: lindyn_core::hypercyclic::DEFAULT_STEP_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjugacyParams {
    pub perturbation: Option<PerturbationDesc>,
    pub tol: f64,
    pub max_depth: usize,
    pub points: usize,
    pub radius: f64,
    pub inverse: bool,
    pub csv: Option<String>,
}

impl Default for ConjugacyParams {
    fn default() -> Self {
        Self { perturbation: None, tol: 1e-8, max_depth: 64, points: 100, radius: 2.0, inverse: true, csv: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomoclinicParams {
    pub horizon: usize,
    pub tol: f64,
    pub vector: Option<VectorDesc>,
    pub n_list: Vec<usize>,
    pub decay_csv: Option<String>,
}

impl Default for HomoclinicParams {
    fn default() -> Self {
        Self {
            horizon: lindyn_core::homoclinic::DEFAULT_HORIZON,
            tol: lindyn_core::homoclinic::DEFAULT_TOL,
            vector: None,
            n_list: vec![5, 10, 15],
            decay_csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteParams {
    pub size: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self { size: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Parameters {
    pub classify: ClassifyParams,
    pub shadow: ShadowParams,
    pub bounds: BTreeMap<String, serde_json::Value>,
    pub linf: LinfParams,
    pub expansivity: ExpansivityParams,
    pub hypercyclic: HypercyclicParams,
    pub conjugacy: ConjugacyParams,
    pub homoclinic: HomoclinicParams,
    pub suite: SuiteParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub operator: OpDesc,
    #[serde(default)]
    pub splitting: Option<SplitDesc>,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Scenario {
    /// Parses and validates; the operator is built once so bad descriptions fail here.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid {
            location: format!("{origin}:{}:{}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        sc.operator.build().map_err(|e| CliError::ConfigInvalid {
            location: format!("{origin}: operator"),
            message: e.to_string(),
        })?;
        if !sc.parameters.bounds.is_empty() {
            return Err(CliError::ConfigInvalid {
                location: format!("{origin}: parameters.bounds"),
                message: "bounds takes no parameters".into(),
            });
        }
        Ok(sc)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }
}
