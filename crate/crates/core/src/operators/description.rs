//! JSON descriptions of operators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LinOp, WeightRule};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, NormTag, Scalar};

/// A scalar written either as a real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonScalar {
    Real(f64),
    Complex([f64; 2]),
}

impl JsonScalar {
    pub fn value(self) -> Scalar {
        match self {
            JsonScalar::Real(x) => Scalar::new(x, 0.0),
            JsonScalar::Complex([re, im]) => Scalar::new(re, im),
        }
    }
}

impl From<Scalar> for JsonScalar {
    fn from(z: Scalar) -> Self {
        if z.im == 0.0 {
            JsonScalar::Real(z.re)
        } else {
            JsonScalar::Complex([z.re, z.im])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum RuleDesc {
    SignSplit { neg_and_zero: JsonScalar, pos: JsonScalar },
    Table { table: BTreeMap<String, JsonScalar>, default: JsonScalar },
}

impl RuleDesc {
    pub fn to_rule(&self) -> Result<WeightRule> {
        Ok(match self {
            RuleDesc::SignSplit { neg_and_zero, pos } => {
                WeightRule::SignSplit { neg_and_zero: neg_and_zero.value(), pos: pos.value() }
            }
            RuleDesc::Table { table, default } => {
                let mut entries = BTreeMap::new();
                for (k, z) in table {
                    let k: i64 = k
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("weight table key {k:?} is not an integer")))?;
                    entries.insert(k, z.value());
                }
                WeightRule::Table { entries, default: default.value() }
            }
        })
    }
}

/// Operator description; `norm` may be omitted on factors of a composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpDesc {
    Dense {
        matrix: Vec<Vec<JsonScalar>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm: Option<NormTag>,
    },
    Diag {
        rule: RuleDesc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm: Option<NormTag>,
    },
    Shift {
        offset: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm: Option<NormTag>,
    },
    BackwardScaled {
        factor: JsonScalar,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm: Option<NormTag>,
    },
    Compose {
        factors: Vec<OpDesc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm: Option<NormTag>,
    },
}

impl OpDesc {
    fn own_norm(&self) -> Option<NormTag> {
        match self {
            OpDesc::Dense { norm, .. }
            | OpDesc::Diag { norm, .. }
            | OpDesc::Shift { norm, .. }
            | OpDesc::BackwardScaled { norm, .. }
            | OpDesc::Compose { norm, .. } => *norm,
        }
    }

    pub fn build(&self) -> Result<LinOp> {
        self.build_with(None)
    }

    fn build_with(&self, inherited: Option<NormTag>) -> Result<LinOp> {
        let tag = match (self.own_norm(), inherited) {
            (Some(a), Some(b)) if a != b => return Err(Error::NormMismatch(a, b)),
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::InvalidInput("operator description lacks \"norm\"".into())),
        };
        match self {
            OpDesc::Dense { matrix, .. } => {
                let rows = matrix.iter().map(|r| r.iter().map(|z| z.value()).collect()).collect();
                LinOp::dense(DenseMatrix::new(rows)?, tag)
            }
            OpDesc::Diag { rule, .. } => LinOp::diagonal(rule.to_rule()?, tag),
            OpDesc::Shift { offset, .. } => Ok(LinOp::shift(*offset, tag)),
            OpDesc::BackwardScaled { factor, .. } => LinOp::backward_scaled(factor.value(), tag),
            OpDesc::Compose { factors, .. } => {
                LinOp::compose(factors.iter().map(|f| f.build_with(Some(tag))).collect::<Result<Vec<_>>>()?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::lockdown;

    #[test]
    fn lockdown_from_json() {
        let json = r#"{"kind":"compose","norm":"l1","factors":[
            {"kind":"shift","offset":1},
            {"kind":"diag","rule":{"neg_and_zero":0.5,"pos":2.0}}]}"#;
        let desc: OpDesc = serde_json::from_str(json).unwrap();
        let (l, _, _) = lockdown(0.5, NormTag::L1).unwrap();
        assert_eq!(desc.build().unwrap(), l);
    }

    #[test]
    fn complex_dense_entries() {
        let json = r#"{"kind":"dense","norm":"l2","matrix":[[[0,1],0],[0,[0,-1]]]}"#;
        let op = serde_json::from_str::<OpDesc>(json).unwrap().build().unwrap();
        assert_eq!(op.matrix().unwrap()[(0, 0)], Scalar::new(0.0, 1.0));
    }

    #[test]
    fn table_rule_and_missing_norm() {
        let json = r#"{"kind":"diag","rule":{"table":{"0":0.5,"-1":0.25},"default":1.0}}"#;
        let desc: OpDesc = serde_json::from_str(json).unwrap();
        assert!(matches!(desc.build(), Err(Error::InvalidInput(_))));
        let json = r#"{"kind":"diag","norm":"linf","rule":{"table":{"0":0.5,"-1":0.25},"default":1.0}}"#;
        let op = serde_json::from_str::<OpDesc>(json).unwrap().build().unwrap();
        assert_eq!(op.operator_norm(), 1.0);
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!(serde_json::from_str::<OpDesc>(r#"{"kind":"warp","norm":"l1"}"#).is_err());
    }
}
