//! Operator families: dense matrices, diagonal weights, shifts, the one-sided
//! scaled backward shift, and compositions of these.
//!
//! Every sequence operator is reduced to a single weighted shift, so
//! application, powers, inverses and norms are exact on `SparseBiSeq`.

mod description;
mod weights;

use std::collections::BTreeMap;

pub use description::{JsonScalar, OpDesc, RuleDesc};
pub use weights::{IndexRange, WeightRule};
pub(crate) use weights::{Weight, WeightedShift};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, DenseMatrix, DenseVector, NormTag, Scalar, SparseBiSeq, Vector};

/// Default iteration count for the Gelfand estimate.
pub const GELFAND_ITERS: usize = 64;

/// Consecutive non-improving powers after which the Gelfand estimate stops.
const STAGNATION_RUN: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    Dense(DenseMatrix),
    DiagonalWeights(WeightRule),
    /// `(L xi)_k = xi_{k+offset}`.
    Shift(i64),
    /// `(L xi)_k = factor * xi_{k+1}` for `k >= 0`, zero for `k < 0`.
    BackwardScaled(Scalar),
    /// Factors applied right to left: `[A, B]` is `A ∘ B`.
    Composition(Vec<LinOp>),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Form {
    Dense { m: DenseMatrix, inv: Option<DenseMatrix> },
    Seq(WeightedShift),
}

/// A bounded linear operator with its norm tag and invertibility flag.
#[derive(Debug, Clone, PartialEq)]
pub struct LinOp {
    kind: OpKind,
    norm_tag: NormTag,
    invertible: bool,
    form: Form,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRadius {
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorReport {
    pub op_norm: f64,
    pub inv_norm: Option<f64>,
    pub spectral_radius_estimate: f64,
    pub gelfand_iterations: usize,
}

impl LinOp {
    pub fn dense(m: DenseMatrix, norm_tag: NormTag) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(m.rows()));
        }
        let inv = m.inverse().ok();
        Ok(LinOp {
            invertible: inv.is_some(),
            kind: OpKind::Dense(m.clone()),
            norm_tag,
            form: Form::Dense { m, inv },
        })
    }

    pub fn from_real_rows(rows: &[Vec<f64>], norm_tag: NormTag) -> Result<Self> {
        Self::dense(DenseMatrix::from_real(rows)?, norm_tag)
    }

    pub fn diagonal(rule: WeightRule, norm_tag: NormTag) -> Result<Self> {
        let weight = rule.to_weight();
        let sup = weight.sup_abs_on(&IndexRange::ALL);
        if !sup.is_finite() {
            return Err(Error::NonFinite("diagonal weight"));
        }
        let invertible = weight.inf_abs_on(&IndexRange::ALL) > 0.0;
        Ok(LinOp {
            kind: OpKind::DiagonalWeights(rule),
            norm_tag,
            invertible,
            form: Form::Seq(WeightedShift { offset: 0, weight }),
        })
    }

    pub fn shift(offset: i64, norm_tag: NormTag) -> Self {
        LinOp {
            kind: OpKind::Shift(offset),
            norm_tag,
            invertible: true,
            form: Form::Seq(WeightedShift { offset, weight: Weight::constant(Scalar::new(1.0, 0.0)) }),
        }
    }

    pub fn backward_scaled(factor: Scalar, norm_tag: NormTag) -> Result<Self> {
        crate::linalg::DenseVector::new(vec![factor], norm_tag)?;
        Ok(LinOp {
            kind: OpKind::BackwardScaled(factor),
            norm_tag,
            invertible: false,
            form: Form::Seq(WeightedShift { offset: 1, weight: Weight::one_sided(factor, 0) }),
        })
    }

    pub fn compose(factors: Vec<LinOp>) -> Result<Self> {
        let first = factors.first().ok_or_else(|| Error::InvalidInput("empty composition".into()))?;
        let norm_tag = first.norm_tag;
        for f in &factors {
            norm_tag.ensure_same(f.norm_tag)?;
        }
        let form = match &first.form {
            Form::Dense { m, .. } => {
                let mut acc = DenseMatrix::identity(m.rows());
                for f in &factors {
                    match &f.form {
                        Form::Dense { m, .. } if m.rows() == acc.rows() => acc = acc.mul(m),
                        Form::Dense { m, .. } => return Err(Error::Dimension(m.rows())),
                        Form::Seq(_) => return Err(Error::KindMismatch("dense and sequence factors".into())),
                    }
                }
                let inv = acc.inverse().ok();
                Form::Dense { m: acc, inv }
            }
            Form::Seq(_) => {
                let mut acc = WeightedShift::identity();
                for f in &factors {
                    match &f.form {
                        Form::Seq(ws) => acc = acc.compose(ws),
                        Form::Dense { .. } => {
                            return Err(Error::KindMismatch("dense and sequence factors".into()))
                        }
                    }
                }
                Form::Seq(acc)
            }
        };
        let invertible = factors.iter().all(|f| f.invertible);
        Ok(LinOp { kind: OpKind::Composition(factors), norm_tag, invertible, form })
    }

    pub fn kind(&self) -> &OpKind {
        &self.kind
    }

    pub fn norm_tag(&self) -> NormTag {
        self.norm_tag
    }

    pub fn is_invertible(&self) -> bool {
        self.invertible
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.form, Form::Dense { .. })
    }

    /// Dimension of a dense operator.
    pub fn dim(&self) -> Option<usize> {
        self.matrix().map(DenseMatrix::rows)
    }

    /// The matrix of a dense operator (product of factors for compositions).
    pub fn matrix(&self) -> Option<&DenseMatrix> {
        match &self.form {
            Form::Dense { m, .. } => Some(m),
            Form::Seq(_) => None,
        }
    }

    pub fn inverse_matrix(&self) -> Option<&DenseMatrix> {
        match &self.form {
            Form::Dense { inv, .. } => inv.as_ref(),
            Form::Seq(_) => None,
        }
    }

    pub(crate) fn shift_form(&self) -> Option<&WeightedShift> {
        match &self.form {
            Form::Seq(ws) => Some(ws),
            Form::Dense { .. } => None,
        }
    }

    pub(crate) fn inverse_shift_form(&self) -> Result<WeightedShift> {
        if !self.invertible {
            return Err(Error::NotInvertible);
        }
        self.shift_form()
            .ok_or_else(|| Error::KindMismatch("dense operator has no shift form".into()))?
            .inverse()
            .ok_or(Error::NotInvertible)
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        match v {
            Vector::Dense(x) => self.apply_dense(x).map(Vector::Dense),
            Vector::Sparse(s) => self.apply_seq(s).map(Vector::Sparse),
        }
    }

    pub fn apply_dense(&self, v: &DenseVector) -> Result<DenseVector> {
        self.norm_tag.ensure_same(v.norm_tag())?;
        match &self.form {
            Form::Dense { m, .. } => m.apply(v),
            Form::Seq(_) => Err(Error::KindMismatch("sequence operator applied to dense vector".into())),
        }
    }

    pub fn apply_seq(&self, v: &SparseBiSeq) -> Result<SparseBiSeq> {
        self.norm_tag.ensure_same(v.norm_tag())?;
        match &self.form {
            Form::Seq(ws) => Ok(ws.apply(v)),
            Form::Dense { .. } => Err(Error::KindMismatch("dense operator applied to sequence".into())),
        }
    }

    pub fn apply_inverse(&self, v: &Vector) -> Result<Vector> {
        self.apply_power(-1, v)
    }

    /// `L^n v`; negative `n` uses the inverse.
    pub fn apply_power(&self, n: i64, v: &Vector) -> Result<Vector> {
        self.norm_tag.ensure_same(v.norm_tag())?;
        if n < 0 && !self.invertible {
            return Err(Error::NotInvertible);
        }
        match (&self.form, v) {
            (Form::Dense { m, inv }, Vector::Dense(x)) => {
                let step = if n < 0 { inv.as_ref().ok_or(Error::NotInvertible)? } else { m };
                let mut y = x.clone();
                for _ in 0..n.unsigned_abs() {
                    y = step.apply(&y)?;
                }
                Ok(Vector::Dense(y))
            }
            (Form::Seq(ws), Vector::Sparse(s)) => {
                let inv;
                let step = if n < 0 {
                    inv = ws.inverse().ok_or(Error::NotInvertible)?;
                    &inv
                } else {
                    ws
                };
                let mut y = s.clone();
                for _ in 0..n.unsigned_abs() {
                    y = step.apply(&y);
                }
                Ok(Vector::Sparse(y))
            }
            _ => Err(Error::KindMismatch(format!("operator does not act on {} vectors", v.kind()))),
        }
    }

    pub fn inverse(&self) -> Result<LinOp> {
        if !self.invertible {
            return Err(Error::NotInvertible);
        }
        let kind = match &self.kind {
            OpKind::Dense(_) => {
                let inv = self.inverse_matrix().ok_or(Error::NotInvertible)?.clone();
                return LinOp::dense(inv, self.norm_tag);
            }
            OpKind::DiagonalWeights(rule) => OpKind::DiagonalWeights(reciprocal_rule(rule)),
            OpKind::Shift(s) => OpKind::Shift(-s),
            OpKind::BackwardScaled(_) => return Err(Error::NotInvertible),
            OpKind::Composition(fs) => {
                let inverses = fs.iter().rev().map(LinOp::inverse).collect::<Result<Vec<_>>>()?;
                return LinOp::compose(inverses);
            }
        };
        let form = match &self.form {
            Form::Seq(ws) => Form::Seq(ws.inverse().ok_or(Error::NotInvertible)?),
            Form::Dense { .. } => unreachable!("dense handled above"),
        };
        Ok(LinOp { kind, norm_tag: self.norm_tag, invertible: true, form })
    }

    pub fn operator_norm(&self) -> f64 {
        match &self.form {
            Form::Dense { m, .. } => m.op_norm(self.norm_tag),
            Form::Seq(ws) => ws.norm_on(&IndexRange::ALL),
        }
    }

    pub fn inverse_norm(&self) -> Option<f64> {
        if !self.invertible {
            return None;
        }
        match &self.form {
            Form::Dense { inv, .. } => inv.as_ref().map(|m| m.op_norm(self.norm_tag)),
            Form::Seq(ws) => ws.inverse().map(|w| w.norm_on(&IndexRange::ALL)),
        }
    }

    /// `‖L^n‖`, negative `n` through the inverse.
    pub fn power_norm(&self, n: i64) -> Result<f64> {
        if n < 0 && !self.invertible {
            return Err(Error::NotInvertible);
        }
        match &self.form {
            Form::Dense { m, inv } => {
                let base = if n < 0 { inv.as_ref().ok_or(Error::NotInvertible)? } else { m };
                Ok(base.pow(n.unsigned_abs() as usize).op_norm(self.norm_tag))
            }
            Form::Seq(ws) => {
                let base = if n < 0 { ws.inverse().ok_or(Error::NotInvertible)? } else { ws.clone() };
                Ok(base.power(n.unsigned_abs() as u32).norm_on(&IndexRange::ALL))
            }
        }
    }

    /// Max eigenvalue modulus for dense operators, Gelfand estimate otherwise.
    pub fn spectral_radius(&self, iters: usize) -> Result<SpectralRadius> {
        if iters == 0 {
            return Err(Error::InvalidInput("spectral radius needs iters >= 1".into()));
        }
        match &self.form {
            Form::Dense { m, .. } => {
                let value = eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
                Ok(SpectralRadius { value, iterations: 0 })
            }
            Form::Seq(ws) => {
                let mut power = WeightedShift::identity();
                Ok(gelfand(iters, |_| {
                    power = power.compose(ws);
                    power.norm_on(&IndexRange::ALL)
                }))
            }
        }
    }

    pub fn report(&self, iters: usize) -> Result<OperatorReport> {
        let sr = self.spectral_radius(iters)?;
        Ok(OperatorReport {
            op_norm: self.operator_norm(),
            inv_norm: self.inverse_norm(),
            spectral_radius_estimate: sr.value,
            gelfand_iterations: sr.iterations,
        })
    }

    /// Dense operator plus a matrix of the same size.
    pub fn perturbed(&self, delta: &DenseMatrix) -> Result<LinOp> {
        let m = self.matrix().ok_or_else(|| Error::KindMismatch("perturbation of a sequence operator".into()))?;
        if delta.rows() != m.rows() {
            return Err(Error::Dimension(delta.rows()));
        }
        LinOp::dense(m.add(delta), self.norm_tag)
    }
}

fn reciprocal_rule(rule: &WeightRule) -> WeightRule {
    let one = Scalar::new(1.0, 0.0);
    match rule {
        WeightRule::SignSplit { neg_and_zero, pos } => {
            WeightRule::SignSplit { neg_and_zero: one / neg_and_zero, pos: one / pos }
        }
        WeightRule::Table { entries, default } => WeightRule::Table {
            entries: entries.iter().map(|(k, z)| (*k, one / z)).collect::<BTreeMap<_, _>>(),
            default: one / default,
        },
    }
}

/// `min_{k <= iters} a_k^{1/k}` for a submultiplicative sequence `a_k = norm_of_power(k)`.
pub(crate) fn gelfand<F: FnMut(usize) -> f64>(iters: usize, mut norm_of_power: F) -> SpectralRadius {
    let mut best = f64::INFINITY;
    let mut flat = 0;
    for k in 1..=iters {
        let a = norm_of_power(k);
        if a == 0.0 {
            return SpectralRadius { value: 0.0, iterations: k };
        }
        let root = a.powf(1.0 / k as f64);
        if root < best * (1.0 - 1e-12) {
            best = root;
            flat = 0;
        } else {
            flat += 1;
            if flat >= STAGNATION_RUN {
                return SpectralRadius { value: best, iterations: k };
            }
        }
    }
    SpectralRadius { value: best, iterations: iters }
}

/// The bilateral operator `L = R ∘ W` with `W = diag(alpha on k <= 0, 1/alpha on k > 0)`
/// and `R` the shift `(R xi)_k = xi_{k+1}`.
pub fn lockdown(alpha: f64, norm_tag: NormTag) -> Result<(LinOp, LinOp, LinOp)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside (0,1)")));
    }
    let w = LinOp::diagonal(WeightRule::sign_split(alpha, 1.0 / alpha), norm_tag)?;
    let r = LinOp::shift(1, norm_tag);
    let l = LinOp::compose(vec![r.clone(), w.clone()])?;
    Ok((l, w, r))
}

/// Diagonal contraction with weights `-(1 - 2^{-(k+1)})` for `0 <= k < 64`, `-1` elsewhere.
pub fn tucides(norm_tag: NormTag) -> Result<LinOp> {
    let entries = (0..64).map(|k| (k, Scalar::new(-(1.0 - 0.5f64.powi(k as i32 + 1)), 0.0))).collect();
    LinOp::diagonal(WeightRule::Table { entries, default: Scalar::new(-1.0, 0.0) }, norm_tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Scalar {
        Scalar::new(x, 0.0)
    }

    fn unit(k: i64) -> Vector {
        Vector::Sparse(SparseBiSeq::unit(k, NormTag::L1))
    }

    #[test]
    fn shift_moves_index_down() {
        let r = LinOp::shift(1, NormTag::L1);
        assert_eq!(r.apply(&unit(1)).unwrap(), unit(0));
        assert_eq!(r.operator_norm(), 1.0);
        assert_eq!(r.inverse().unwrap().kind(), &OpKind::Shift(-1));
    }

    #[test]
    fn lockdown_powers() {
        let (l, w, _) = lockdown(0.5, NormTag::L1).unwrap();
        assert_eq!(w.apply(&unit(0)).unwrap(), unit(0).scale(c(0.5)));
        assert_eq!(w.operator_norm(), 2.0);
        assert_eq!(l.apply_power(3, &unit(0)).unwrap(), unit(-3).scale(c(0.125)));
        assert_eq!(l.apply_power(-3, &unit(0)).unwrap(), unit(3).scale(c(0.125)));
        assert_eq!(l.apply_power(0, &unit(7)).unwrap(), unit(7));
    }

    #[test]
    fn composition_inverse_reverses_factors() {
        let (l, w, r) = lockdown(0.5, NormTag::L1).unwrap();
        let inv = l.inverse().unwrap();
        match inv.kind() {
            OpKind::Composition(fs) => {
                assert_eq!(fs[0], w.inverse().unwrap());
                assert_eq!(fs[1], r.inverse().unwrap());
            }
            other => panic!("unexpected {other:?}"),
        }
        let v = Vector::Sparse(SparseBiSeq::from_real([(-2, 1.5), (0, -1.0), (4, 3.0)], NormTag::L1).unwrap());
        assert_eq!(inv.apply(&l.apply(&v).unwrap()).unwrap(), v);
    }

    #[test]
    fn dense_norms_and_radius() {
        let d = LinOp::from_real_rows(&[vec![0.5, 0.0], vec![0.0, 2.0]], NormTag::Linf).unwrap();
        assert_eq!(d.operator_norm(), 2.0);
        assert!((d.spectral_radius(GELFAND_ITERS).unwrap().value - 2.0).abs() < 1e-12);
        let inv = d.inverse().unwrap();
        assert_eq!(inv.matrix().unwrap()[(0, 0)], c(2.0));
        assert_eq!(inv.matrix().unwrap()[(1, 1)], c(0.5));
        let rot = LinOp::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]], NormTag::L2).unwrap();
        assert!((rot.spectral_radius(1).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_identity_is_identity() {
        let id = LinOp::dense(DenseMatrix::identity(3), NormTag::L2).unwrap();
        let v = DenseVector::from_real(&[1.0, -2.0, 0.5], NormTag::L2).unwrap();
        assert_eq!(id.apply_dense(&v).unwrap(), v);
    }

    #[test]
    fn kind_and_tag_mismatch() {
        let r = LinOp::shift(1, NormTag::L1);
        let v = Vector::Dense(DenseVector::zeros(2, NormTag::L1));
        assert!(matches!(r.apply(&v), Err(Error::KindMismatch(_))));
        assert!(matches!(r.apply(&Vector::Sparse(SparseBiSeq::zero(NormTag::L2))), Err(Error::NormMismatch(..))));
    }

    #[test]
    fn backward_scaled_not_invertible() {
        let b = LinOp::backward_scaled(c(2.0), NormTag::L2).unwrap();
        assert!(!b.is_invertible());
        assert!(matches!(b.apply_power(-1, &unit(0).with_tag(NormTag::L2)), Err(Error::NotInvertible)));
        let e1 = Vector::Sparse(SparseBiSeq::unit(1, NormTag::L2));
        assert_eq!(b.apply(&e1).unwrap(), Vector::Sparse(SparseBiSeq::unit(0, NormTag::L2).scale(c(2.0))));
        assert!(b.apply(&Vector::Sparse(SparseBiSeq::unit(0, NormTag::L2))).unwrap().is_zero());
    }

    #[test]
    fn tucides_radius_reaches_one() {
        let t = tucides(NormTag::L1).unwrap();
        assert_eq!(t.operator_norm(), 1.0);
        assert!((t.spectral_radius(GELFAND_ITERS).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lockdown_gelfand_is_two() {
        let (l, _, _) = lockdown(0.5, NormTag::L1).unwrap();
        let sr = l.spectral_radius(GELFAND_ITERS).unwrap();
        assert!((sr.value - 2.0).abs() < 1e-12);
        assert!(sr.iterations <= GELFAND_ITERS);
    }

    impl Vector {
        fn with_tag(self, tag: NormTag) -> Vector {
            match self {
                Vector::Sparse(s) => Vector::Sparse(s.with_norm_tag(tag)),
                Vector::Dense(v) => Vector::Dense(v.with_norm_tag(tag)),
            }
        }
    }

    fn tag() -> impl Strategy<Value = NormTag> {
        prop_oneof![Just(NormTag::L1), Just(NormTag::L2), Just(NormTag::Linf)]
    }

    fn seq_op(tag: NormTag) -> impl Strategy<Value = LinOp> {
        let diag = (0.1f64..3.0, 0.1f64..3.0)
            .prop_map(move |(a, b)| LinOp::diagonal(WeightRule::sign_split(a, b), tag).unwrap());
        let table = (proptest::collection::btree_map(-5i64..5, 0.1f64..3.0, 0..6), 0.1f64..3.0).prop_map(
            move |(m, d)| {
                let entries = m.into_iter().map(|(k, x)| (k, Scalar::new(x, 0.0))).collect();
                LinOp::diagonal(WeightRule::Table { entries, default: Scalar::new(d, 0.0) }, tag).unwrap()
            },
        );
        let shift = (-3i64..=3).prop_map(move |s| LinOp::shift(s, tag));
        let leaf = prop_oneof![diag, table, shift];
        proptest::collection::vec(leaf, 1..4).prop_map(|fs| LinOp::compose(fs).unwrap())
    }

    fn seq(tag: NormTag) -> impl Strategy<Value = SparseBiSeq> {
        proptest::collection::vec((-8i64..8, -4.0f64..4.0, -4.0f64..4.0), 0..6).prop_map(move |es| {
            SparseBiSeq::from_entries(es.into_iter().map(|(k, a, b)| (k, Scalar::new(a, b))), tag).unwrap()
        })
    }

    fn dense_op(tag: NormTag) -> impl Strategy<Value = LinOp> {
        (1usize..5).prop_flat_map(move |d| {
            proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, d), d)
                .prop_map(move |rows| LinOp::from_real_rows(&rows, tag).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn seq_norm_bound(t in tag(), (op, v) in tag().prop_flat_map(|t| (seq_op(t), seq(t)))) {
            let _ = t;
            let y = op.apply_seq(&v).unwrap();
            prop_assert!(y.norm() <= op.operator_norm() * v.norm() * (1.0 + 1e-12) + 1e-300);
            let r = op.spectral_radius(GELFAND_ITERS).unwrap().value;
            prop_assert!(r <= op.operator_norm() + 1e-9);
        }

        #[test]
        fn dense_norm_bound((op, x) in tag().prop_flat_map(|t| dense_op(t).prop_flat_map(move |op| {
            let d = op.dim().unwrap();
            (Just(op), proptest::collection::vec(-5.0f64..5.0, d)
                .prop_map(move |c| DenseVector::from_real(&c, t).unwrap()))
        }))) {
            let y = op.apply_dense(&x).unwrap();
            prop_assert!(y.norm() <= op.operator_norm() * x.norm() * (1.0 + 1e-10) + 1e-12);
            if let Ok(r) = op.spectral_radius(GELFAND_ITERS) {
                prop_assert!(r.value <= op.operator_norm() + 1e-9);
            }
        }

        #[test]
        fn power_law_exact(op in seq_op(NormTag::L1), v in seq(NormTag::L1), m in -4i64..5, n in -4i64..5) {
            let v = Vector::Sparse(v);
            let lhs = op.apply_power(m + n, &v).unwrap();
            let rhs = op.apply_power(m, &op.apply_power(n, &v).unwrap()).unwrap();
            let err = lhs.distance(&rhs).unwrap();
            prop_assert!(err <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn composition_norm_submultiplicative(a in seq_op(NormTag::L2), b in seq_op(NormTag::L2)) {
            let ab = LinOp::compose(vec![a.clone(), b.clone()]).unwrap();
            prop_assert!(ab.operator_norm() <= a.operator_norm() * b.operator_norm() * (1.0 + 1e-12));
        }

        #[test]
        fn inverse_round_trip(op in seq_op(NormTag::Linf), v in seq(NormTag::Linf)) {
            let inv = op.inverse().unwrap();
            let v = Vector::Sparse(v);
            let back = inv.apply(&op.apply(&v).unwrap()).unwrap();
            prop_assert!(back.distance(&v).unwrap() <= 1e-12 * (1.0 + v.norm()));
        }
    }
}
