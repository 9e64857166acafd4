//! Splittings `X = S ⊕ U`, their certification, and hyperbolicity classes.

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, DenseMatrix, DenseVector, NormTag, Scalar, SparseBiSeq, Vector};
use crate::operators::{gelfand, IndexRange, LinOp, WeightedShift, GELFAND_ITERS};

pub const DEFAULT_CIRCLE_GAP: f64 = 1e-6;

/// Radii this close to 1 are reported as undetermined.
pub const UNDETERMINED_BAND: f64 = 1e-6;

const PROJECTION_TOL: f64 = 1e-10;
const INVARIANCE_TOL: f64 = 1e-9;
const SERIES_TERM_CAP: usize = 10_000;
const WITNESS_SEARCH: i64 = 64;

/// Index cut for coordinate splittings. For sequences `k <= c` lies in `S`; for
/// dense vectors the 0-based coordinate index is compared instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    AllStable,
    AllUnstable,
    AtMost(i64),
}

impl Cut {
    pub fn stable_range(&self) -> IndexRange {
        match self {
            Cut::AllStable => IndexRange::ALL,
            Cut::AllUnstable => IndexRange::empty(),
            Cut::AtMost(c) => IndexRange::at_most(*c),
        }
    }

    pub fn unstable_range(&self) -> IndexRange {
        match self {
            Cut::AllStable => IndexRange::empty(),
            Cut::AllUnstable => IndexRange::ALL,
            Cut::AtMost(c) => IndexRange::above(*c),
        }
    }

    fn projections(&self, d: usize) -> (DenseMatrix, DenseMatrix) {
        let r = self.stable_range();
        let ps: Vec<f64> = (0..d).map(|i| if r.contains(i as i64) { 1.0 } else { 0.0 }).collect();
        let pu: Vec<f64> = ps.iter().map(|x| 1.0 - x).collect();
        (DenseMatrix::diagonal_real(&ps).unwrap(), DenseMatrix::diagonal_real(&pu).unwrap())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitKind {
    SpectralDense { p_s: DenseMatrix, p_u: DenseMatrix },
    CoordinateIndex(Cut),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    pub kind: SplitKind,
    pub proj_s_norm: f64,
    pub proj_u_norm: f64,
    pub norm_tag: NormTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Powers `L^k` restricted to `S`.
    Stable,
    /// Powers `L^{-k}` restricted to `U`.
    Unstable,
}

impl Splitting {
    pub fn coordinate(cut: Cut, norm_tag: NormTag) -> Self {
        let (s, u) = match cut {
            Cut::AllStable => (1.0, 0.0),
            Cut::AllUnstable => (0.0, 1.0),
            Cut::AtMost(_) => (1.0, 1.0),
        };
        Splitting { kind: SplitKind::CoordinateIndex(cut), proj_s_norm: s, proj_u_norm: u, norm_tag }
    }

    /// Splitting from explicit complementary projections.
    pub fn from_projections(p_s: DenseMatrix, norm_tag: NormTag) -> Result<Self> {
        let d = p_s.rows();
        let id = DenseMatrix::identity(d);
        let p_u = id.sub(&p_s);
        let scale = 1.0 + p_s.max_abs();
        if p_s.mul(&p_s).sub(&p_s).max_abs() > PROJECTION_TOL * scale * scale {
            return Err(Error::InvalidSplitting("P_S is not idempotent".into()));
        }
        Ok(Splitting {
            proj_s_norm: p_s.op_norm(norm_tag),
            proj_u_norm: p_u.op_norm(norm_tag),
            kind: SplitKind::SpectralDense { p_s, p_u },
            norm_tag,
        })
    }

    pub fn is_coordinate(&self) -> bool {
        matches!(self.kind, SplitKind::CoordinateIndex(_))
    }

    pub fn cut(&self) -> Option<Cut> {
        match self.kind {
            SplitKind::CoordinateIndex(c) => Some(c),
            SplitKind::SpectralDense { .. } => None,
        }
    }

    /// Projection matrices on `C^d`.
    pub fn projections(&self, d: usize) -> Result<(DenseMatrix, DenseMatrix)> {
        match &self.kind {
            SplitKind::SpectralDense { p_s, p_u } if p_s.rows() == d => Ok((p_s.clone(), p_u.clone())),
            SplitKind::SpectralDense { p_s, .. } => Err(Error::Dimension(p_s.rows())),
            SplitKind::CoordinateIndex(cut) => Ok(cut.projections(d)),
        }
    }

    pub fn project(&self, side: Side, v: &Vector) -> Result<Vector> {
        match (v, &self.kind) {
            (Vector::Sparse(s), SplitKind::CoordinateIndex(cut)) => {
                let range = match side {
                    Side::Stable => cut.stable_range(),
                    Side::Unstable => cut.unstable_range(),
                };
                Ok(Vector::Sparse(s.restrict(|k| range.contains(k))))
            }
            (Vector::Dense(x), _) => {
                let (ps, pu) = self.projections(x.dim())?;
                let p = if side == Side::Stable { ps } else { pu };
                Ok(Vector::Dense(p.apply(x)?))
            }
            (Vector::Sparse(_), SplitKind::SpectralDense { .. }) => {
                Err(Error::KindMismatch("spectral splitting applied to a sequence".into()))
            }
        }
    }

    pub fn proj_norm(&self, side: Side) -> f64 {
        match side {
            Side::Stable => self.proj_s_norm,
            Side::Unstable => self.proj_u_norm,
        }
    }
}

/// Riesz splitting of a dense invertible operator along the unit circle.
pub fn spectral_split(op: &LinOp, circle_gap_tol: f64) -> Result<Splitting> {
    let m = op.matrix().ok_or_else(|| Error::KindMismatch("spectral split needs a dense operator".into()))?;
    if !op.is_invertible() {
        return Err(Error::NotInvertible);
    }
    let ev = eigenvalues(m)?;
    if let Some(z) = ev.iter().find(|z| (z.norm() - 1.0).abs() < circle_gap_tol) {
        return Err(Error::CircleEigenvalue(*z));
    }
    let n_stable = ev.iter().filter(|z| z.norm() < 1.0).count();
    let d = m.rows();
    let p_s = if n_stable == 0 {
        DenseMatrix::zeros(d, d)
    } else if n_stable == d {
        DenseMatrix::identity(d)
    } else {
        stable_projector(m)?
    };
    // a projector's rank is its trace
    let trace: f64 = (0..d).map(|i| p_s[(i, i)].re).sum();
    if (trace - n_stable as f64).abs() > 1e-6 {
        return Err(Error::IllConditioned(p_s.op_norm(NormTag::L2)));
    }
    Splitting::from_projections(p_s, op.norm_tag()).map_err(|_| Error::IllConditioned(p_s_norm_guess(m)))
}

fn p_s_norm_guess(m: &DenseMatrix) -> f64 {
    m.op_norm(NormTag::L2) * m.inverse().map(|i| i.op_norm(NormTag::L2)).unwrap_or(f64::INFINITY)
}

/// Projector onto the generalized eigenspace of `|λ| < 1`: `(I - sign(C)) / 2`
/// with the Cayley transform `C = (A + I)(A - I)^{-1}` sending the disk to `Re < 0`.
fn stable_projector(a: &DenseMatrix) -> Result<DenseMatrix> {
    let d = a.rows();
    let id = DenseMatrix::identity(d);
    let c = a.add(&id).mul(&a.sub(&id).inverse()?);
    let mut s = c;
    for _ in 0..100 {
        let inv = s.inverse().map_err(|_| Error::IllConditioned(f64::INFINITY))?;
        let mu = (inv.frobenius() / s.frobenius()).sqrt();
        let next = s.scale(Scalar::new(0.5 * mu, 0.0)).add(&inv.scale(Scalar::new(0.5 / mu, 0.0)));
        let change = next.sub(&s).frobenius();
        s = next;
        if change <= 1e-14 * s.frobenius() {
            break;
        }
    }
    let p = id.sub(&s).scale(Scalar::new(0.5, 0.0));
    let resid = p.mul(&p).sub(&p).max_abs();
    if !(resid <= 1e-9 * (1.0 + p.max_abs())) {
        return Err(Error::IllConditioned(p.op_norm(NormTag::L2)));
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperbolicityClass {
    Hyperbolic,
    GeneralizedHyperbolic,
    Neither,
    Undetermined,
}

/// `L(S) ⊆ S`, `L⁻¹(U) ⊆ U`, `S ⊆ L(S)` and `L(U) ⊆ U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Invariance {
    pub forward_s: bool,
    pub backward_u: bool,
    pub s_in_image: bool,
    pub forward_u: bool,
}

impl Invariance {
    pub fn all(&self) -> bool {
        self.forward_s && self.backward_u && self.s_in_image && self.forward_u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicityReport {
    pub class: HyperbolicityClass,
    pub r_s: f64,
    pub r_u_inv: f64,
    pub invariance: Invariance,
    /// Nonzero element of `L(U) ∩ S`, when one was found.
    pub witness: Option<Vector>,
    pub circle_gap: f64,
}

impl HyperbolicityReport {
    pub fn is_certified(&self) -> bool {
        matches!(self.class, HyperbolicityClass::Hyperbolic | HyperbolicityClass::GeneralizedHyperbolic)
    }
}

fn decide(r_s: f64, r_u_inv: f64, hyperbolic_shape: bool) -> HyperbolicityClass {
    let near = |r: f64| (r - 1.0).abs() <= UNDETERMINED_BAND;
    if near(r_s) || near(r_u_inv) {
        HyperbolicityClass::Undetermined
    } else if r_s > 1.0 || r_u_inv > 1.0 {
        HyperbolicityClass::Neither
    } else if hyperbolic_shape {
        HyperbolicityClass::Hyperbolic
    } else {
        HyperbolicityClass::GeneralizedHyperbolic
    }
}

/// Classify `op` against `split`. `horizon` bounds the Gelfand iteration used for
/// restricted radii of sequence operators.
pub fn classify(op: &LinOp, split: &Splitting, horizon: usize) -> Result<HyperbolicityReport> {
    op.norm_tag().ensure_same(split.norm_tag)?;
    if !op.is_invertible() {
        return Err(Error::NotInvertible);
    }
    match (op.matrix(), &split.kind) {
        (Some(m), _) => classify_dense(op, m, split),
        (None, SplitKind::CoordinateIndex(cut)) => classify_seq(op, *cut, horizon.max(1)),
        (None, SplitKind::SpectralDense { .. }) => {
            Err(Error::KindMismatch("spectral splitting for a sequence operator".into()))
        }
    }
}

fn classify_dense(op: &LinOp, m: &DenseMatrix, split: &Splitting) -> Result<HyperbolicityReport> {
    let d = m.rows();
    let (ps, pu) = split.projections(d)?;
    let inv = op.inverse_matrix().ok_or(Error::NotInvertible)?;
    if ps.add(&pu).sub(&DenseMatrix::identity(d)).max_abs() > PROJECTION_TOL {
        return Err(Error::InvalidSplitting("P_S + P_U differs from I".into()));
    }
    let leak = |a: &DenseMatrix, x: &DenseMatrix, b: &DenseMatrix| {
        a.mul(x).mul(b).max_abs() <= INVARIANCE_TOL * (1.0 + x.max_abs())
    };
    let invariance = Invariance {
        forward_s: leak(&pu, m, &ps),
        backward_u: leak(&ps, inv, &pu),
        s_in_image: leak(&pu, inv, &ps),
        forward_u: leak(&ps, m, &pu),
    };
    if !invariance.forward_s {
        return Err(Error::InvalidSplitting("L(S) is not contained in S".into()));
    }
    if !invariance.backward_u {
        return Err(Error::InvalidSplitting("L^-1(U) is not contained in U".into()));
    }
    let radius = |x: &DenseMatrix, p: &DenseMatrix| -> Result<f64> {
        if p.max_abs() == 0.0 {
            return Ok(0.0);
        }
        Ok(eigenvalues(&x.mul(p))?.iter().map(|z| z.norm()).fold(0.0, f64::max))
    };
    let r_s = radius(m, &ps)?;
    let r_u_inv = radius(inv, &pu)?;
    let cross = ps.mul(m).mul(&pu);
    let witness = if invariance.forward_u {
        None
    } else {
        let j = (0..d)
            .max_by(|a, b| {
                let na = NormTag::L2.of(&cross.column(*a));
                let nb = NormTag::L2.of(&cross.column(*b));
                na.partial_cmp(&nb).unwrap()
            })
            .unwrap();
        let col = cross.column(j);
        let n = split.norm_tag.of(&col);
        Some(Vector::Dense(DenseVector::new(col.iter().map(|z| z / n).collect(), split.norm_tag)?))
    };
    let class = decide(r_s, r_u_inv, invariance.all());
    Ok(HyperbolicityReport { class, r_s, r_u_inv, invariance, witness, circle_gap: DEFAULT_CIRCLE_GAP })
}

fn classify_seq(op: &LinOp, cut: Cut, horizon: usize) -> Result<HyperbolicityReport> {
    let ws = op.shift_form().expect("sequence operator");
    let inv = op.inverse_shift_form()?;
    let s = cut.stable_range();
    let u = cut.unstable_range();
    let invariance = Invariance {
        forward_s: ws.maps_into(&s, &s),
        backward_u: inv.maps_into(&u, &u),
        s_in_image: inv.maps_into(&s, &s),
        forward_u: ws.maps_into(&u, &u),
    };
    if !invariance.forward_s {
        return Err(Error::InvalidSplitting("L(S) is not contained in S".into()));
    }
    if !invariance.backward_u {
        return Err(Error::InvalidSplitting("L^-1(U) is not contained in U".into()));
    }
    let r_s = restricted_radius(ws, &s, horizon);
    let r_u_inv = restricted_radius(&inv, &u, horizon);
    let witness = crossing_witness(ws, cut, op.norm_tag());
    let class = decide(r_s, r_u_inv, invariance.all());
    Ok(HyperbolicityReport { class, r_s, r_u_inv, invariance, witness, circle_gap: DEFAULT_CIRCLE_GAP })
}

fn restricted_radius(ws: &WeightedShift, range: &IndexRange, horizon: usize) -> f64 {
    if range.is_empty() {
        return 0.0;
    }
    let mut power = WeightedShift::identity();
    gelfand(horizon, |_| {
        power = power.compose(ws);
        power.norm_on(range)
    })
    .value
}

/// Basis vector `e_j` in `U` whose image is a nonzero multiple of a basis vector in `S`.
/// Returns the unit image.
fn crossing_witness(ws: &WeightedShift, cut: Cut, tag: NormTag) -> Option<Vector> {
    let c = match cut {
        Cut::AtMost(c) => c,
        _ => return None,
    };
    let s = cut.stable_range();
    (c + 1..=c + WITNESS_SEARCH).find_map(|j| {
        let k = j - ws.offset;
        (s.contains(k) && ws.weight.eval(k).norm() > 0.0).then(|| Vector::Sparse(SparseBiSeq::unit(k, tag)))
    })
}

/// Check the hypotheses that make `R ∘ W` generalized hyperbolic and look for a
/// nonzero element of `R(U) ∩ S` that rules out hyperbolicity.
pub fn composed_shift_check(w: &LinOp, r: &LinOp, split: &Splitting) -> Result<HyperbolicityReport> {
    w.norm_tag().ensure_same(r.norm_tag())?;
    if !w.is_invertible() || !r.is_invertible() {
        return Err(Error::NotInvertible);
    }
    let cut = split
        .cut()
        .ok_or_else(|| Error::KindMismatch("composed shift check needs a coordinate splitting".into()))?;
    let (wf, rf) = match (w.shift_form(), r.shift_form()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::KindMismatch("composed shift check needs sequence operators".into())),
    };
    let (wi, ri) = (w.inverse_shift_form()?, r.inverse_shift_form()?);
    let s = cut.stable_range();
    let u = cut.unstable_range();
    let checks = [
        ("W(S) ⊆ S", wf.maps_into(&s, &s)),
        ("W⁻¹(U) ⊆ U", wi.maps_into(&u, &u)),
        ("R(S) ⊆ S", rf.maps_into(&s, &s)),
        ("R⁻¹(U) ⊆ U", ri.maps_into(&u, &u)),
        ("‖R‖·‖W|_S‖ < 1", rf.norm_on(&IndexRange::ALL) * wf.norm_on(&s) < 1.0),
        ("‖W⁻¹|_U‖·‖R⁻¹‖ < 1", wi.norm_on(&u) * ri.norm_on(&IndexRange::ALL) < 1.0),
    ];
    if let Some((name, _)) = checks.iter().find(|(_, ok)| !ok) {
        return Err(Error::HypothesisFailed((*name).to_string()));
    }
    let l = LinOp::compose(vec![r.clone(), w.clone()])?;
    let mut report = classify(&l, split, GELFAND_ITERS)?;
    report.class = HyperbolicityClass::GeneralizedHyperbolic;
    report.witness = crossing_witness(rf, cut, r.norm_tag());
    Ok(report)
}

/// Partial sums of `a_k = ‖L^k|_S‖` (k >= 0) or `‖L^{-k}|_U‖` (k >= 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedSeries {
    /// Certified upper bound for the full series.
    pub sum: f64,
    pub terms: usize,
    pub tail_bound: f64,
}

/// Successive restricted power norms for one side of a certified splitting.
pub struct RestrictedPowers {
    inner: PowersInner,
    k: usize,
}

enum PowersInner {
    Seq { step: WeightedShift, power: WeightedShift, range: IndexRange },
    Dense { step: DenseMatrix, power: DenseMatrix, restrictor: Restrictor, tag: NormTag },
}

impl RestrictedPowers {
    pub fn new(op: &LinOp, split: &Splitting, side: Side) -> Result<Self> {
        let inner = match (op.matrix(), &split.kind) {
            (Some(m), _) => {
                let d = m.rows();
                let (ps, pu) = split.projections(d)?;
                // stepping with L P keeps rounding off the complementary side
                let (step, p) = match side {
                    Side::Stable => (m.mul(&ps), ps),
                    Side::Unstable => (op.inverse_matrix().ok_or(Error::NotInvertible)?.mul(&pu), pu),
                };
                PowersInner::Dense {
                    power: DenseMatrix::identity(d),
                    step,
                    restrictor: Restrictor::new(&p, op.norm_tag()),
                    tag: op.norm_tag(),
                }
            }
            (None, SplitKind::CoordinateIndex(cut)) => {
                let (step, range) = match side {
                    Side::Stable => (op.shift_form().unwrap().clone(), cut.stable_range()),
                    Side::Unstable => (op.inverse_shift_form()?, cut.unstable_range()),
                };
                PowersInner::Seq { step, power: WeightedShift::identity(), range }
            }
            (None, _) => return Err(Error::KindMismatch("spectral splitting for a sequence operator".into())),
        };
        Ok(RestrictedPowers { inner, k: 0 })
    }

    /// Index of the next norm returned by `next`.
    pub fn index(&self) -> usize {
        self.k
    }

    pub fn is_trivial(&self) -> bool {
        match &self.inner {
            PowersInner::Seq { range, .. } => range.is_empty(),
            PowersInner::Dense { restrictor, .. } => restrictor.is_trivial(),
        }
    }
}

impl Iterator for RestrictedPowers {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = match &mut self.inner {
            PowersInner::Seq { step, power, range } => {
                let v = power.norm_on(range);
                *power = step.compose(power);
                v
            }
            PowersInner::Dense { step, power, restrictor, tag } => {
                let v = restrictor.norm(power, *tag).0;
                *power = step.mul(power);
                v
            }
        };
        self.k += 1;
        Some(out)
    }
}

/// Restricted norm helper for a dense subspace given by a projector.
#[derive(Debug, Clone)]
pub(crate) enum Restrictor {
    Trivial,
    /// Subspace spanned by these coordinates.
    Aligned(Vec<usize>),
    /// Orthonormal basis (d x r) for L2, projector for the others.
    General { basis: DenseMatrix, projector: DenseMatrix },
}

impl Restrictor {
    pub fn new(p: &DenseMatrix, _tag: NormTag) -> Self {
        let d = p.rows();
        if p.max_abs() <= 1e-14 {
            return Restrictor::Trivial;
        }
        let mut aligned = true;
        let mut idx = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let z = p[(i, j)];
                let target = if i == j && (z - Scalar::new(1.0, 0.0)).norm() < 1e-12 { 1.0 } else { 0.0 };
                if (z - Scalar::new(target, 0.0)).norm() > 1e-12 {
                    aligned = false;
                }
                if i == j && target == 1.0 {
                    idx.push(i);
                }
            }
        }
        if aligned {
            return Restrictor::Aligned(idx);
        }
        let cols: Vec<Vec<Scalar>> = (0..d).map(|j| p.column(j)).collect();
        let basis = DenseMatrix::orthonormal_columns(&cols, 1e-8);
        Restrictor::General { basis: DenseMatrix::from_columns(&basis, d), projector: p.clone() }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, Restrictor::Trivial) || matches!(self, Restrictor::Aligned(v) if v.is_empty())
    }

    /// Norm of `m` restricted to the subspace, with a flag telling whether it is exact
    /// (otherwise it is the upper bound `‖m P‖`).
    pub fn norm(&self, m: &DenseMatrix, tag: NormTag) -> (f64, bool) {
        match self {
            Restrictor::Trivial => (0.0, true),
            Restrictor::Aligned(idx) => {
                let cols: Vec<Vec<Scalar>> = idx.iter().map(|j| m.column(*j)).collect();
                if cols.is_empty() {
                    return (0.0, true);
                }
                let sub = DenseMatrix::from_columns(&cols, m.rows());
                (sub.op_norm(tag), true)
            }
            Restrictor::General { basis, projector } => match tag {
                NormTag::L2 => (m.mul(basis).op_norm(NormTag::L2), true),
                _ => (m.mul(projector).op_norm(tag), false),
            },
        }
    }

    /// Vectors spanning the subspace, used for sampled lower estimates.
    pub fn spanning(&self, d: usize) -> Vec<Vec<Scalar>> {
        match self {
            Restrictor::Trivial => Vec::new(),
            Restrictor::Aligned(idx) => idx
                .iter()
                .map(|i| (0..d).map(|j| Scalar::new(if j == *i { 1.0 } else { 0.0 }, 0.0)).collect())
                .collect(),
            Restrictor::General { basis, .. } => (0..basis.cols()).map(|j| basis.column(j)).collect(),
        }
    }
}

/// Sum `a_0 + a_1 + ...` (or from `a_1` when `skip_first`) with a certified tail:
/// once some `a_p < 1` (p >= 1), submultiplicativity gives
/// `sum_{j >= K} a_j <= (a_K + ... + a_{K+p-1}) / (1 - a_p)`.
pub fn restricted_series(
    op: &LinOp,
    split: &Splitting,
    side: Side,
    skip_first: bool,
    tail_tol: f64,
) -> Result<RestrictedSeries> {
    let mut powers = RestrictedPowers::new(op, split, side)?;
    if powers.is_trivial() {
        return Ok(RestrictedSeries { sum: 0.0, terms: 0, tail_bound: 0.0 });
    }
    let mut a: Vec<f64> = Vec::new();
    let mut contraction: Option<(usize, f64)> = None;
    loop {
        let k = a.len();
        if k > SERIES_TERM_CAP {
            return Err(Error::TrajectoryBudget(SERIES_TERM_CAP));
        }
        let ak = powers.next().unwrap();
        a.push(ak);
        if contraction.is_none() && k >= 1 && ak < 1.0 {
            contraction = Some((k, ak));
        }
        if let Some((p, q)) = contraction {
            if k + 1 > p {
                // a holds a_0..=a_k; candidate cut K = k + 1 - p
                let cut = k + 1 - p;
                let window: f64 = a[cut..=k].iter().sum();
                let tail = window / (1.0 - q);
                let start = if skip_first { 1 } else { 0 };
                if cut >= start && tail <= tail_tol {
                    let partial: f64 = a[start..cut].iter().sum();
                    return Ok(RestrictedSeries { sum: partial + tail, terms: cut, tail_bound: tail });
                }
            }
        }
    }
}
