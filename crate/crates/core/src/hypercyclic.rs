//! Rolewicz operators, dense-orbit witnesses built from right inverses, and the
//! adjoint-eigenvector obstruction in finite dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{dense_eig, DenseVector, NormTag, Scalar, SparseBiSeq, Vector};
use crate::operators::LinOp;

pub const DEFAULT_STEP_BUDGET: usize = 100_000;

/// `(Lξ)_k = factor ξ_{k+1}` for `k >= 0` on bilateral sequences (zero at negative indices).
pub fn rolewicz(factor: f64) -> Result<LinOp> {
    if !(factor > 1.0) || !factor.is_finite() {
        return Err(Error::BadFactor(factor));
    }
    LinOp::backward_scaled(Scalar::new(factor, 0.0), NormTag::L2)
}

/// Operator with scaled forward shifts as right inverses of its powers.
#[derive(Debug, Clone)]
pub struct CriterionData {
    op: LinOp,
    factor: f64,
    /// Entries below this modulus are dropped from targets.
    pub truncation: f64,
}

impl CriterionData {
    pub fn rolewicz(factor: f64) -> Result<Self> {
        Ok(Self { op: rolewicz(factor)?, factor, truncation: 0.0 })
    }

    pub fn op(&self) -> &LinOp {
        &self.op
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    /// `S_n(y) = factor^{-n}` times `y` shifted forward by `n`.
    pub fn right_inverse(&self, n: usize, y: &SparseBiSeq) -> SparseBiSeq {
        let s = self.factor.powi(-(n as i32));
        SparseBiSeq::canonical(y.iter().map(|(k, z)| (k + n as i64, z * s)).collect(), y.norm_tag())
    }

    /// Finitely supported approximation of `y` within `tol`: the smallest-modulus entries
    /// are dropped while their removed norm stays below `tol`.
    pub fn truncate(&self, y: &SparseBiSeq, tol: f64) -> SparseBiSeq {
        let mut entries: Vec<(i64, Scalar)> = y.iter().collect();
        entries.sort_by(|a, b| a.1.norm().total_cmp(&b.1.norm()));
        let mut dropped = Vec::new();
        let mut keep_from = 0;
        for (i, e) in entries.iter().enumerate() {
            dropped.push(*e);
            let removed = SparseBiSeq::canonical(dropped.iter().copied().collect(), y.norm_tag()).norm();
            if removed > tol.max(self.truncation) {
                break;
            }
            keep_from = i + 1;
        }
        SparseBiSeq::canonical(entries[keep_from..].iter().copied().collect(), y.norm_tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessResult {
    pub seed: SparseBiSeq,
    pub visit_times: Vec<usize>,
    pub visit_errors: Vec<f64>,
    /// Spacing between consecutive visit times.
    pub gap: usize,
}

impl WitnessResult {
    pub fn to_json(&self) -> Value {
        let support: Vec<Value> = self.seed.iter().map(|(k, z)| json!([k, z.re, z.im])).collect();
        json!({
            "seed_support": support,
            "visit_times": self.visit_times,
            "visit_errors": self.visit_errors,
            "gap": self.gap,
        })
    }
}

fn as_seq(v: &Vector) -> Result<&SparseBiSeq> {
    v.as_sparse().ok_or_else(|| Error::KindMismatch("targets must be sequences".into()))
}

/// Seed whose orbit visits every target within `eps`, in order.
pub fn criterion_witness(cd: &CriterionData, targets: &[Vector], eps: f64, step_budget: usize) -> Result<WitnessResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if targets.is_empty() {
        return Err(Error::InvalidInput("no targets".into()));
    }
    let tag = cd.op.norm_tag();
    let mut trimmed = Vec::with_capacity(targets.len());
    for t in targets {
        let y = as_seq(t)?;
        tag.ensure_same(y.norm_tag())?;
        if y.support_bounds().is_some_and(|(lo, _)| lo < 0) {
            return Err(Error::InvalidInput("targets must be supported on nonnegative indices".into()));
        }
        trimmed.push(cd.truncate(y, eps / 4.0));
    }
    let width = trimmed.iter().filter_map(|y| y.support_bounds()).map(|(_, hi)| hi as usize + 1).max().unwrap_or(0);
    let biggest = trimmed.iter().map(SparseBiSeq::norm).fold(0.0, f64::max);
    let m = trimmed.len() as f64;
    let decay = if biggest > 0.0 { ((2.0 * m * biggest / eps).ln() / cd.factor.ln()).ceil().max(0.0) as usize } else { 0 };
    let gap = width + 1 + decay;
    let last = gap.checked_mul(trimmed.len()).filter(|n| *n <= step_budget);
    if last.is_none() {
        return Err(Error::CannotSeparate { budget: step_budget });
    }
    let visit_times: Vec<usize> = (1..=trimmed.len()).map(|j| j * gap).collect();
    let mut seed = SparseBiSeq::zero(tag);
    for (n, y) in visit_times.iter().zip(&trimmed) {
        seed = seed.add(&cd.right_inverse(*n, y))?;
    }
    let seed_v = Vector::Sparse(seed.clone());
    let mut visit_errors = Vec::with_capacity(targets.len());
    for (n, t) in visit_times.iter().zip(targets) {
        let err = cd.op.apply_power(*n as i64, &seed_v)?.distance(t)?;
        if err > eps {
            return Err(Error::CannotSeparate { budget: step_budget });
        }
        visit_errors.push(err);
    }
    Ok(WitnessResult { seed, visit_times, visit_errors, gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusTrend {
    Decaying,
    Constant,
    Growing,
}

/// Eigenpair `L^H φ = μ φ`: the scalars `φ^H L^n x = conj(μ)^n φ^H x` have monotone or
/// constant modulus, so no orbit can be dense.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionCertificate {
    pub eigenvalue: Scalar,
    pub functional: DenseVector,
    pub trend: ModulusTrend,
    /// Largest relative deviation of `φ^H L^{n+1} x` from `conj(μ) φ^H L^n x` on the replay.
    pub replay_defect: f64,
}

const REPLAY_STEPS: usize = 24;

pub fn adjoint_eigen_obstruction(op: &LinOp) -> Result<ObstructionCertificate> {
    let m = op.matrix().ok_or_else(|| Error::KindMismatch("obstruction needs a dense operator".into()))?;
    let d = m.dim();
    let pair = dense_eig(&m.adjoint())?.into_iter().next().ok_or_else(|| Error::NoConvergence("no eigenpair".into()))?;
    let mu = pair.value;
    let phi = pair.vector.coords().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
    let mut x: Vec<Scalar> = (0..d).map(|_| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let pairing = |x: &[Scalar]| -> Scalar { phi.iter().zip(x).map(|(f, v)| f.conj() * v).sum() };
    let mut s = pairing(&x);
    let mut defect: f64 = 0.0;
    for _ in 0..REPLAY_STEPS {
        x = m.mul_coords(&x);
        let next = pairing(&x);
        let predicted = mu.conj() * s;
        let scale = predicted.norm().max(x.iter().map(|z| z.norm()).fold(0.0, f64::max)).max(1e-300);
        defect = defect.max((next - predicted).norm() / scale);
        s = next;
        let n = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if n > 1e100 || (n < 1e-100 && n > 0.0) {
            for z in x.iter_mut() {
                *z /= n;
            }
            s /= n;
        }
    }
    let trend = match mu.norm() {
        r if r < 1.0 - 1e-12 => ModulusTrend::Decaying,
        r if r > 1.0 + 1e-12 => ModulusTrend::Growing,
        _ => ModulusTrend::Constant,
    };
    if defect > 1e-6 {
        return Err(Error::NoConvergence(format!("adjoint eigenpair replay defect {defect:e}")));
    }
    Ok(ObstructionCertificate { eigenvalue: mu, functional: pair.vector, trend, replay_defect: defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(entries: &[(i64, f64)]) -> Vector {
        Vector::Sparse(SparseBiSeq::from_real(entries.iter().copied(), NormTag::L2).unwrap())
    }

    #[test]
    fn rolewicz_examples() {
        let l = rolewicz(2.0).unwrap();
        assert_eq!(l.apply(&seq(&[(1, 1.0)])).unwrap(), seq(&[(0, 2.0)]));
        assert!(l.apply(&seq(&[(0, 1.0)])).unwrap().is_zero());
        let cd = CriterionData::rolewicz(2.0).unwrap();
        let s3 = cd.right_inverse(3, as_seq(&seq(&[(0, 1.0)])).unwrap());
        assert_eq!(Vector::Sparse(s3.clone()), seq(&[(3, 0.125)]));
        assert_eq!(l.apply_power(3, &Vector::Sparse(s3)).unwrap(), seq(&[(0, 1.0)]));
        assert_eq!(rolewicz(1.0).unwrap_err(), Error::BadFactor(1.0));
    }

    #[test]
    fn single_target_is_exact() {
        let cd = CriterionData::rolewicz(2.0).unwrap();
        let w = criterion_witness(&cd, &[seq(&[(0, 1.0)])], 1e-6, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(w.visit_errors, vec![0.0]);
        assert_eq!(w.seed.support_len(), 1);
    }

    #[test]
    fn two_targets() {
        let cd = CriterionData::rolewicz(2.0).unwrap();
        let targets = [seq(&[(0, 1.0)]), seq(&[(0, 1.0), (1, 1.0)])];
        let w = criterion_witness(&cd, &targets, 1e-6, DEFAULT_STEP_BUDGET).unwrap();
        assert!(w.gap >= 20 + 2);
        for ((n, t), e) in w.visit_times.iter().zip(&targets).zip(&w.visit_errors) {
            let mut x = Vector::Sparse(w.seed.clone());
            for _ in 0..*n {
                x = cd.op().apply(&x).unwrap();
            }
            assert!(x.distance(t).unwrap() <= 1e-6 && *e <= 1e-6);
        }
        let json = w.to_json();
        assert_eq!(json["visit_times"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn huge_target_cannot_separate() {
        let cd = CriterionData::rolewicz(2.0).unwrap();
        let targets = [seq(&[(0, 1e6)]), seq(&[(2, 1.0)])];
        assert_eq!(criterion_witness(&cd, &targets, 1e-12, 40), Err(Error::CannotSeparate { budget: 40 }));
    }

    #[test]
    fn truncation_keeps_large_entries() {
        let cd = CriterionData::rolewicz(2.0).unwrap();
        let y = as_seq(&seq(&[(0, 1.0), (1, 1e-9), (2, 0.5)])).unwrap().clone();
        let t = cd.truncate(&y, 1e-6);
        assert_eq!(t.support_len(), 2);
        assert!(t.sub(&y).unwrap().norm() <= 1e-6);
    }

    #[test]
    fn obstruction_examples() {
        let d = LinOp::from_real_rows(&[vec![0.5, 0.0], vec![0.0, 2.0]], NormTag::L2).unwrap();
        let c = adjoint_eigen_obstruction(&d).unwrap();
        assert!((c.eigenvalue - Scalar::new(0.5, 0.0)).norm() < 1e-12 || (c.eigenvalue - Scalar::new(2.0, 0.0)).norm() < 1e-12);
        let rot = LinOp::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]], NormTag::L2).unwrap();
        let c = adjoint_eigen_obstruction(&rot).unwrap();
        assert!((c.eigenvalue.norm() - 1.0).abs() < 1e-12 && c.eigenvalue.re.abs() < 1e-12);
        assert_eq!(c.trend, ModulusTrend::Constant);
        let one = LinOp::dense(crate::linalg::DenseMatrix::new(vec![vec![Scalar::new(0.3, 0.7)]]).unwrap(), NormTag::L2).unwrap();
        let c = adjoint_eigen_obstruction(&one).unwrap();
        assert!((c.eigenvalue - Scalar::new(0.3, -0.7)).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn right_inverse_identities(factor in 1.1f64..4.0, n in 0usize..30, vals in proptest::collection::vec(-3.0f64..3.0, 1..6)) {
            let cd = CriterionData::rolewicz(factor).unwrap();
            let y = SparseBiSeq::from_real(vals.iter().enumerate().map(|(k, v)| (k as i64, *v)), NormTag::L2).unwrap();
            let s = cd.right_inverse(n, &y);
            prop_assert!((s.norm() - factor.powi(-(n as i32)) * y.norm()).abs() <= 1e-12 * y.norm().max(1e-300));
            let back = cd.op().apply_power(n as i64, &Vector::Sparse(s)).unwrap();
            prop_assert!(back.distance(&Vector::Sparse(y.clone())).unwrap() <= 1e-12 * y.norm().max(1.0));
        }

        #[test]
        fn obstruction_is_total(rows in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 3)) {
            let op = LinOp::from_real_rows(&rows, NormTag::L2);
            prop_assume!(op.is_ok());
            prop_assert!(adjoint_eigen_obstruction(&op.unwrap()).is_ok());
        }
    }
}
