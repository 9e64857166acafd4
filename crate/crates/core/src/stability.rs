//! Conjugacies `H = I + h` between a hyperbolic dense operator `L` and a Lipschitz
//! perturbation `L + β`, local linearization of smooth maps at a hyperbolic fixed
//! point, and summability of bounded sequences along the orbit of a stable operator.
//!
//! `h` is never stored on a grid. Each evaluation replays the series
//! `Γ(α)(x) = Σ_{k≥0} L^k P_S α(R^{-k-1} x) − Σ_{k≥1} L^{-k} P_U α(R^{k-1} x)`
//! at the requested point, nesting Picard levels and caching evaluations.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector, NormTag, Scalar, Vector};
use crate::operators::LinOp;
use crate::shadowing::{certify, generate_pseudo_orbit, shadow_splitting_series, Window};
use crate::splitting::{restricted_series, spectral_split, Side, Splitting, DEFAULT_CIRCLE_GAP};

pub type Point = Vec<Scalar>;
pub type MapFn = Arc<dyn Fn(&[Scalar]) -> Point + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[Scalar]) -> DenseMatrix + Send + Sync>;

/// Largest slope of the bump profile `(1 - t²)²` on `[0, 1]`, reached at `t = 1/√3`.
pub const BUMP_SLOPE: f64 = 1.539_600_717_839_002;
const CONSTANT_TAIL_TOL: f64 = 1e-12;
const QUANTUM: f64 = 1e-12;
const INVERSE_MAP_MAX_ITER: usize = 200;

#[derive(Clone)]
enum Shape {
    Zero,
    Constant(Point),
    Bump { center: Point, direction: Point, amplitude: f64, radius: f64 },
    /// `χ(‖x‖ / radius) field(x)` with `χ(t) = clamp(2 - t, 0, 1)`.
    Cutoff { field: MapFn, radius: f64 },
}

/// Bounded Lipschitz map `β` on `C^d` from a parametric family with known constants.
#[derive(Clone)]
pub struct LipschitzPerturbation {
    shape: Shape,
    dim: usize,
    tag: NormTag,
    pub sup_norm: f64,
    pub lip_const: f64,
}

impl fmt::Debug for LipschitzPerturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shape = match &self.shape {
            Shape::Zero => "zero",
            Shape::Constant(_) => "constant",
            Shape::Bump { .. } => "bump",
            Shape::Cutoff { .. } => "cutoff",
        };
        f.debug_struct("LipschitzPerturbation")
            .field("shape", &shape)
            .field("dim", &self.dim)
            .field("sup_norm", &self.sup_norm)
            .field("lip_const", &self.lip_const)
            .field("support_radius", &self.support_radius())
            .finish()
    }
}

fn check_finite(v: &[Scalar], what: &'static str) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn diff(a: &[Scalar], b: &[Scalar]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn sum(a: &[Scalar], b: &[Scalar]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl LipschitzPerturbation {
    pub fn zero(dim: usize, tag: NormTag) -> Self {
        Self { shape: Shape::Zero, dim, tag, sup_norm: 0.0, lip_const: 0.0 }
    }

    /// Constant field on the whole space.
    pub fn constant(value: Point, tag: NormTag) -> Result<Self> {
        check_finite(&value, "constant field")?;
        let sup_norm = tag.of(&value);
        Ok(Self { dim: value.len(), shape: Shape::Constant(value), tag, sup_norm, lip_const: 0.0 })
    }

    /// `sup · (1 - t²)² · u` with `t = ‖x - center‖ / radius` and `u` the normalized
    /// direction; the radius is chosen so the Lipschitz constant equals `lip`.
    pub fn bump(center: Point, direction: Point, sup: f64, lip: f64, tag: NormTag) -> Result<Self> {
        check_finite(&center, "bump center")?;
        check_finite(&direction, "bump direction")?;
        if center.len() != direction.len() {
            return Err(Error::Dimension(direction.len()));
        }
        if !(sup >= 0.0 && lip >= 0.0) || !sup.is_finite() || !lip.is_finite() {
            return Err(Error::InvalidInput(format!("bump needs finite nonnegative sup and lip, got {sup}, {lip}")));
        }
        let dn = tag.of(&direction);
        if dn == 0.0 {
            return Err(Error::InvalidInput("bump direction is zero".into()));
        }
        if sup == 0.0 {
            return Ok(Self::zero(center.len(), tag));
        }
        if lip == 0.0 {
            return Err(Error::InvalidInput("a compactly supported bump needs a positive Lipschitz constant".into()));
        }
        let direction: Point = direction.iter().map(|z| z / dn).collect();
        let radius = sup * BUMP_SLOPE / lip;
        Ok(Self {
            dim: center.len(),
            shape: Shape::Bump { center, direction, amplitude: sup, radius },
            tag,
            sup_norm: sup,
            lip_const: lip,
        })
    }

    /// Field cut off outside the ball of radius `2 radius`; `sup` and `lip` must bound
    /// the cut-off map.
    pub fn cutoff(field: MapFn, dim: usize, radius: f64, sup: f64, lip: f64, tag: NormTag) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("cutoff radius must be positive, got {radius}")));
        }
        Ok(Self { shape: Shape::Cutoff { field, radius }, dim, tag, sup_norm: sup, lip_const: lip })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_tag(&self) -> NormTag {
        self.tag
    }

    /// Center and radius of a ball outside which the map vanishes.
    pub fn support(&self) -> Option<(Point, f64)> {
        match &self.shape {
            Shape::Zero => Some((vec![Scalar::new(0.0, 0.0); self.dim], 0.0)),
            Shape::Constant(_) => None,
            Shape::Bump { center, radius, .. } => Some((center.clone(), *radius)),
            Shape::Cutoff { radius, .. } => Some((vec![Scalar::new(0.0, 0.0); self.dim], 2.0 * radius)),
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.support().map_or(f64::INFINITY, |(_, r)| r)
    }

    /// True when `x` lies farther than `margin` from the support.
    fn far_from_support(&self, x: &[Scalar], margin: f64) -> bool {
        match self.support() {
            None => false,
            Some((c, r)) => self.tag.of(&diff(x, &c)) > r + margin,
        }
    }

    pub fn evaluate(&self, x: &[Scalar]) -> Point {
        let zero = || vec![Scalar::new(0.0, 0.0); self.dim];
        match &self.shape {
            Shape::Zero => zero(),
            Shape::Constant(v) => v.clone(),
            Shape::Bump { center, direction, amplitude, radius } => {
                let t = self.tag.of(&diff(x, center)) / radius;
                if t >= 1.0 {
                    return zero();
                }
                let s = amplitude * (1.0 - t * t).powi(2);
                direction.iter().map(|z| z * s).collect()
            }
            Shape::Cutoff { field, radius } => {
                let chi = (2.0 - self.tag.of(x) / radius).clamp(0.0, 1.0);
                if chi == 0.0 {
                    return zero();
                }
                field(x).into_iter().map(|z| z * chi).collect()
            }
        }
    }
}

/// The map `R` driving the trajectories inside `Γ`.
#[derive(Debug, Clone, Copy)]
pub enum RMap<'a> {
    Linear,
    Perturbed(&'a LipschitzPerturbation),
}

/// Truncated `Γ` series for one operator and splitting.
#[derive(Debug, Clone)]
struct GammaSeries {
    l: DenseMatrix,
    l_inv: DenseMatrix,
    stable: Vec<DenseMatrix>,
    unstable: Vec<DenseMatrix>,
    tag: NormTag,
}

impl GammaSeries {
    fn new(op: &LinOp, split: &Splitting, alpha_sup: f64, tail_tol: f64) -> Result<Self> {
        let l = op.matrix().ok_or_else(|| Error::KindMismatch("conjugacies need a dense operator".into()))?.clone();
        let l_inv = op.inverse_matrix().ok_or(Error::NotInvertible)?.clone();
        let d = l.dim();
        let (ps, pu) = split.projections(d)?;
        let proj = split.proj_s_norm.max(split.proj_u_norm).max(1e-300);
        let (mut stable, mut unstable) = (Vec::new(), Vec::new());
        if alpha_sup > 0.0 {
            let each = tail_tol / (2.0 * proj * alpha_sup);
            let ks = restricted_series(op, split, Side::Stable, false, each)?.terms;
            let ku = restricted_series(op, split, Side::Unstable, true, each)?.terms;
            let mut p = ps;
            for _ in 0..ks {
                stable.push(p.clone());
                p = l.mul(&p);
            }
            let mut p = l_inv.mul(&pu);
            for _ in 1..ku {
                unstable.push(p.clone());
                p = l_inv.mul(&p);
            }
        }
        Ok(Self { l, l_inv, stable, unstable, tag: op.norm_tag() })
    }

    /// `alpha` returns `None` where it vanishes.
    fn apply<A, B, F>(&self, x: &[Scalar], mut alpha: A, mut back: B, mut fwd: F) -> Result<Point>
    where
        A: FnMut(&[Scalar]) -> Result<Option<Point>>,
        B: FnMut(&[Scalar]) -> Result<Point>,
        F: FnMut(&[Scalar]) -> Result<Point>,
    {
        let mut out = vec![Scalar::new(0.0, 0.0); x.len()];
        let mut y = back(x)?;
        for m in &self.stable {
            if let Some(a) = alpha(&y)? {
                out = sum(&out, &m.mul_coords(&a));
            }
            y = back(&y)?;
        }
        let mut z = x.to_vec();
        for m in &self.unstable {
            if let Some(a) = alpha(&z)? {
                out = diff(&out, &m.mul_coords(&a));
            }
            z = fwd(&z)?;
        }
        Ok(out)
    }

    fn perturbed_forward(&self, beta: &LipschitzPerturbation, x: &[Scalar]) -> Point {
        sum(&self.l.mul_coords(x), &beta.evaluate(x))
    }

    /// Solves `L x + β(x) = y` by iterating `x = L^{-1}(y - β(x))`.
    fn perturbed_backward(&self, beta: &LipschitzPerturbation, y: &[Scalar]) -> Result<Point> {
        let mut x = self.l_inv.mul_coords(y);
        for _ in 0..INVERSE_MAP_MAX_ITER {
            let next = self.l_inv.mul_coords(&diff(y, &beta.evaluate(&x)));
            let step = self.tag.of(&diff(&next, &x));
            x = next;
            if step <= 1e-15 * self.tag.of(&x).max(1.0) {
                return Ok(x);
            }
        }
        Err(Error::NoConvergence("inverse of the perturbed map".into()))
    }
}

/// `d (A + B)` with `d` the larger projection norm, `A = Σ_{k≥0} ‖L^k|_S‖` and
/// `B = Σ_{k≥1} ‖L^{-k}|_U‖`.
pub fn gamma_norm(op: &LinOp, split: &Splitting) -> Result<f64> {
    let a = restricted_series(op, split, Side::Stable, false, CONSTANT_TAIL_TOL)?.sum;
    let b = restricted_series(op, split, Side::Unstable, true, CONSTANT_TAIL_TOL)?.sum;
    Ok(split.proj_s_norm.max(split.proj_u_norm) * (a + b))
}

/// One evaluation of `Γ(α)` at `x`.
pub fn gamma_eval(op: &LinOp, split: &Splitting, alpha: &LipschitzPerturbation, r: RMap<'_>, x: &[Scalar], tail_tol: f64) -> Result<Point> {
    certify(op, split)?;
    let g = GammaSeries::new(op, split, alpha.sup_norm, tail_tol)?;
    if x.len() != g.l.dim() {
        return Err(Error::Dimension(x.len()));
    }
    let a = |y: &[Scalar]| Ok((!alpha.far_from_support(y, 0.0)).then(|| alpha.evaluate(y)));
    match r {
        RMap::Linear => g.apply(x, a, |y| Ok(g.l_inv.mul_coords(y)), |y| Ok(g.l.mul_coords(y))),
        RMap::Perturbed(beta) => {
            g.apply(x, a, |y| g.perturbed_backward(beta, y), |y| Ok(g.perturbed_forward(beta, y)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldDirection {
    /// `H ∘ L = (L + β) ∘ H`.
    Forward,
    /// `H' ∘ (L + β) = L ∘ H'`.
    Inverse,
}

type MemoKey = (usize, Vec<u64>);

/// Lazily evaluated displacement `h` of a conjugacy `H = I + h`.
pub struct ConjugacyField {
    op: LinOp,
    split: Splitting,
    beta: LipschitzPerturbation,
    direction: FieldDirection,
    series: GammaSeries,
    pub tail_tol: f64,
    pub picard_depth: usize,
    /// `d (A + B)`.
    pub gamma_norm: f64,
    /// `d (A + B) Lip(β)`.
    pub contraction_factor: f64,
    /// Certified bound on `‖h‖` at every point.
    pub h_bound: f64,
    memo: Mutex<HashMap<MemoKey, Point>>,
}

impl fmt::Debug for ConjugacyField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConjugacyField")
            .field("direction", &self.direction)
            .field("beta", &self.beta)
            .field("picard_depth", &self.picard_depth)
            .field("gamma_norm", &self.gamma_norm)
            .field("contraction_factor", &self.contraction_factor)
            .field("h_bound", &self.h_bound)
            .finish()
    }
}

fn snap(x: &[Scalar]) -> Point {
    let s = |v: f64| if v.abs() < 1e6 { (v / QUANTUM).round() * QUANTUM } else { v };
    x.iter().map(|z| Scalar::new(s(z.re), s(z.im))).collect()
}

fn key(depth: usize, x: &[Scalar]) -> MemoKey {
    (depth, x.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect())
}

impl ConjugacyField {
    fn build(op: &LinOp, beta: &LipschitzPerturbation, tol: f64, direction: FieldDirection) -> Result<(Splitting, GammaSeries, f64, f64)> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
        }
        let m = op.matrix().ok_or_else(|| Error::KindMismatch("conjugacies need a dense operator".into()))?;
        if m.dim() != beta.dim() {
            return Err(Error::Dimension(beta.dim()));
        }
        op.norm_tag().ensure_same(beta.norm_tag())?;
        let split = spectral_split(op, DEFAULT_CIRCLE_GAP).map_err(|e| match e {
            Error::CircleEigenvalue(_) => Error::NotCertified,
            other => other,
        })?;
        certify(op, &split)?;
        let gn = gamma_norm(op, &split)?;
        let factor = gn * beta.lip_const;
        if factor >= 1.0 {
            return Err(Error::NotContraction { factor });
        }
        if direction == FieldDirection::Inverse {
            let q = op.inverse_norm().ok_or(Error::NotInvertible)? * beta.lip_const;
            if q >= 1.0 {
                return Err(Error::NotContraction { factor: q });
            }
        }
        let series = GammaSeries::new(op, &split, beta.sup_norm, tol / 100.0)?;
        Ok((split, series, gn, factor))
    }

    pub fn direction(&self) -> FieldDirection {
        self.direction
    }

    pub fn op(&self) -> &LinOp {
        &self.op
    }

    pub fn split(&self) -> &Splitting {
        &self.split
    }

    pub fn perturbation(&self) -> &LipschitzPerturbation {
        &self.beta
    }

    pub fn dim(&self) -> usize {
        self.beta.dim()
    }

    fn check_point(&self, x: &[Scalar]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(x.len()));
        }
        check_finite(x, "conjugacy point")
    }

    /// `h` at the final Picard depth.
    pub fn h(&self, x: &[Scalar]) -> Result<Point> {
        self.h_at_depth(self.picard_depth, x)
    }

    /// Picard iterate `h_m`, with `h_0 = 0`. Points are snapped to a `1e-12` grid first.
    pub fn h_at_depth(&self, depth: usize, x: &[Scalar]) -> Result<Point> {
        self.check_point(x)?;
        self.eval(depth, &snap(x))
    }

    fn eval(&self, depth: usize, x: &[Scalar]) -> Result<Point> {
        if depth == 0 || self.beta.sup_norm == 0.0 {
            return Ok(vec![Scalar::new(0.0, 0.0); x.len()]);
        }
        let k = key(depth, x);
        if let Some(v) = self.memo.lock().expect("memo lock").get(&k) {
            return Ok(v.clone());
        }
        let s = &self.series;
        let v = match self.direction {
            FieldDirection::Forward => {
                let alpha = |y: &[Scalar]| -> Result<Option<Point>> {
                    if self.beta.far_from_support(y, self.h_bound) {
                        return Ok(None);
                    }
                    let y = snap(y);
                    let hy = self.eval(depth - 1, &y)?;
                    Ok(Some(self.beta.evaluate(&sum(&y, &hy))))
                };
                s.apply(x, alpha, |y| Ok(s.l_inv.mul_coords(y)), |y| Ok(s.l.mul_coords(y)))?
            }
            FieldDirection::Inverse => {
                let alpha = |y: &[Scalar]| -> Result<Option<Point>> {
                    if self.beta.far_from_support(y, 0.0) {
                        return Ok(None);
                    }
                    Ok(Some(self.beta.evaluate(y).into_iter().map(|z| -z).collect()))
                };
                s.apply(x, alpha, |y| s.perturbed_backward(&self.beta, y), |y| Ok(s.perturbed_forward(&self.beta, y)))?
            }
        };
        self.memo.lock().expect("memo lock").insert(k, v.clone());
        Ok(v)
    }

    /// `H(x) = x + h(x)`.
    pub fn conjugacy(&self, x: &[Scalar]) -> Result<Point> {
        Ok(sum(x, &self.h(x)?))
    }

    /// `sup_x ‖h_{m+1}(x) - h_m(x)‖` over `points` for `m = 0 .. picard_depth - 1`.
    pub fn picard_differences(&self, points: &[Point]) -> Result<Vec<f64>> {
        let tag = self.op.norm_tag();
        let mut out = Vec::new();
        for m in 0..self.picard_depth {
            let mut worst: f64 = 0.0;
            for x in points {
                let a = self.h_at_depth(m + 1, x)?;
                let b = self.h_at_depth(m, x)?;
                worst = worst.max(tag.of(&diff(&a, &b)));
            }
            out.push(worst);
        }
        Ok(out)
    }

    pub fn memo_len(&self) -> usize {
        self.memo.lock().expect("memo lock").len()
    }
}

/// Conjugacy `H = I + h` with `H ∘ L = (L + β) ∘ H` by Picard iteration
/// `h_{m+1} = Γ(β ∘ (I + h_m))` from `h_0 = 0`.
pub fn conjugacy_solve(op: &LinOp, beta: &LipschitzPerturbation, tol: f64, max_depth: usize) -> Result<ConjugacyField> {
    let (split, series, gn, factor) = ConjugacyField::build(op, beta, tol, FieldDirection::Forward)?;
    let start = gn * beta.sup_norm;
    let mut depth = 0;
    if start > 0.0 {
        depth = 1;
        while factor.powi(depth as i32) * start > tol {
            depth += 1;
            if depth > max_depth {
                return Err(Error::NoConvergence(format!("Picard depth would exceed {max_depth}")));
            }
        }
    }
    Ok(ConjugacyField {
        op: op.clone(),
        split,
        beta: beta.clone(),
        direction: FieldDirection::Forward,
        series,
        tail_tol: tol / 100.0,
        picard_depth: depth,
        gamma_norm: gn,
        contraction_factor: factor,
        h_bound: start + tol,
        memo: Mutex::new(HashMap::new()),
    })
}

/// `h' = Γ(-β)` with `R = L + β`, so that `H' = I + h'` satisfies `H' ∘ (L + β) = L ∘ H'`.
pub fn inverse_conjugacy(op: &LinOp, beta: &LipschitzPerturbation, tol: f64) -> Result<ConjugacyField> {
    let (split, series, gn, factor) = ConjugacyField::build(op, beta, tol, FieldDirection::Inverse)?;
    Ok(ConjugacyField {
        op: op.clone(),
        split,
        beta: beta.clone(),
        direction: FieldDirection::Inverse,
        series,
        tail_tol: tol / 100.0,
        picard_depth: usize::from(beta.sup_norm > 0.0),
        gamma_norm: gn,
        contraction_factor: factor,
        h_bound: gn * beta.sup_norm + tol,
        memo: Mutex::new(HashMap::new()),
    })
}

/// Largest conjugacy defect over `points`.
pub fn conjugacy_residual(field: &ConjugacyField, points: &[Point]) -> Result<f64> {
    let s = &field.series;
    let tag = field.op.norm_tag();
    let mut worst: f64 = 0.0;
    for x in points {
        field.check_point(x)?;
        let x = snap(x);
        let r = match field.direction {
            FieldDirection::Forward => {
                let lhs = field.conjugacy(&s.l.mul_coords(&x))?;
                let rhs = s.perturbed_forward(&field.beta, &field.conjugacy(&x)?);
                tag.of(&diff(&lhs, &rhs))
            }
            FieldDirection::Inverse => {
                let lhs = field.conjugacy(&s.perturbed_forward(&field.beta, &x))?;
                let rhs = s.l.mul_coords(&field.conjugacy(&x)?);
                tag.of(&diff(&lhs, &rhs))
            }
        };
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `sup ‖H'(H(x)) - x‖` over `points`.
pub fn composition_defect(forward: &ConjugacyField, inverse: &ConjugacyField, points: &[Point]) -> Result<f64> {
    if forward.direction != FieldDirection::Forward || inverse.direction != FieldDirection::Inverse {
        return Err(Error::InvalidInput("expected a forward field and an inverse field".into()));
    }
    let tag = forward.op.norm_tag();
    let mut worst: f64 = 0.0;
    for x in points {
        let hx = forward.conjugacy(x)?;
        worst = worst.max(tag.of(&diff(&inverse.conjugacy(&hx)?, x)));
    }
    Ok(worst)
}

/// Deterministic real test points, uniform in the sup-ball of the given radius.
pub fn test_points(dim: usize, radius: f64, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..dim).map(|_| Scalar::new(rng.gen_range(-radius..=radius), 0.0)).collect()).collect()
}

/// A smooth map together with its derivative.
#[derive(Clone)]
pub struct SmoothMap {
    pub map: MapFn,
    pub derivative: JacobianFn,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SmoothMap")
    }
}

#[derive(Debug)]
pub struct LocalLinearization {
    pub field: ConjugacyField,
    /// Radius of the ball on which the cut-off remainder equals `F(p + x) - p - DF_p x`.
    pub radius: f64,
    pub linear_part: LinOp,
    pub estimated_sup: f64,
    pub estimated_lip: f64,
}

const GH_MIN_RADIUS: f64 = 1e-4;
const GH_TARGET_FACTOR: f64 = 0.5;
const GH_SAMPLES: usize = 512;
const GH_SAFETY: f64 = 1.1;

/// Sampled sup of `‖α‖` and of `‖Dα‖` on the ball of the given radius.
fn sample_remainder(f: &SmoothMap, p: &[Scalar], a: &DenseMatrix, radius: f64, tag: NormTag, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let d = p.len();
    let mut sup: f64 = 0.0;
    let mut der: f64 = 0.0;
    let mut probe = |y: Point| {
        let fx = (f.map)(&sum(&y, p));
        let alpha = diff(&diff(&fx, p), &a.mul_coords(&y));
        sup = sup.max(tag.of(&alpha));
        der = der.max((f.derivative)(&sum(&y, p)).sub(a).op_norm(tag));
    };
    for mask in 0..(1usize << d.min(10)) {
        probe((0..d).map(|i| Scalar::new(if mask >> i & 1 == 1 { radius } else { -radius }, 0.0)).collect());
    }
    for _ in 0..GH_SAMPLES {
        let y: Point = (0..d).map(|_| Scalar::new(rng.gen_range(-radius..=radius), 0.0)).collect();
        let n = tag.of(&y);
        if n > radius {
            probe(y.iter().map(|z| z * (radius / n)).collect());
        } else {
            probe(y);
        }
    }
    (sup, der)
}

/// Conjugacy between `DF_p` and the cut-off remainder of `F` around a hyperbolic fixed point `p`.
pub fn grobman_hartman_local(f: &SmoothMap, p: &[Scalar], box_radius: f64, tol: f64, tag: NormTag) -> Result<LocalLinearization> {
    check_finite(p, "fixed point")?;
    if !(box_radius > 0.0) {
        return Err(Error::InvalidInput(format!("box radius must be positive, got {box_radius}")));
    }
    let fp = (f.map)(p);
    if fp.len() != p.len() {
        return Err(Error::Dimension(fp.len()));
    }
    if tag.of(&diff(&fp, p)) > 1e-10 {
        return Err(Error::HypothesisFailed("p is not a fixed point of F".into()));
    }
    let a = (f.derivative)(p);
    let linear_part = LinOp::dense(a.clone(), tag)?;
    let split = spectral_split(&linear_part, DEFAULT_CIRCLE_GAP).map_err(|e| match e {
        Error::CircleEigenvalue(_) => Error::NotCertified,
        other => other,
    })?;
    certify(&linear_part, &split)?;
    let gn = gamma_norm(&linear_part, &split)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.len() as u64);
    let mut radius = box_radius;
    loop {
        let (sup_a, der) = sample_remainder(f, p, &a, 2.0 * radius, tag, &mut rng);
        let sup = GH_SAFETY * sup_a;
        let lip = GH_SAFETY * (der + sup_a / radius);
        let factor = gn * lip;
        if factor <= GH_TARGET_FACTOR {
            let (pp, ff, aa) = (p.to_vec(), f.map.clone(), a.clone());
            let field: MapFn = Arc::new(move |y: &[Scalar]| {
                let fx = ff(&sum(y, &pp));
                diff(&diff(&fx, &pp), &aa.mul_coords(y))
            });
            let beta = LipschitzPerturbation::cutoff(field, p.len(), radius, sup, lip, tag)?;
            let field = conjugacy_solve(&linear_part, &beta, tol, 64)?;
            return Ok(LocalLinearization { field, radius, linear_part, estimated_sup: sup, estimated_lip: lip });
        }
        radius /= 2.0;
        if radius < GH_MIN_RADIUS {
            return Err(Error::NotContraction { factor });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport {
    /// `Σ_k ‖L^k‖`.
    pub gamma: f64,
    pub max_ratio: f64,
    pub trials: usize,
    pub violations: usize,
}

/// Checks `‖Σ_k L^k x_k‖ ≤ γ sup_k ‖x_k‖` on random bounded sequences.
pub fn summability_verify(op: &LinOp, trials: usize, seq_len: usize, rng_seed: u64) -> Result<SummabilityReport> {
    let m = op.matrix().ok_or_else(|| Error::KindMismatch("summability check needs a dense operator".into()))?;
    let r = op.spectral_radius(1)?.value;
    if r >= 1.0 {
        return Err(Error::NotContractiveSpectrum(r));
    }
    let tag = op.norm_tag();
    let d = m.dim();
    let all_stable = Splitting::from_projections(DenseMatrix::identity(d), tag)?;
    let gamma = restricted_series(op, &all_stable, Side::Stable, false, CONSTANT_TAIL_TOL)?.sum;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..trials {
        let xs: Vec<Point> = (0..seq_len)
            .map(|_| (0..d).map(|_| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
            .collect();
        let sup = xs.iter().map(|x| tag.of(x)).fold(0.0, f64::max);
        if sup == 0.0 {
            continue;
        }
        let mut s = vec![Scalar::new(0.0, 0.0); d];
        for x in xs.iter().rev() {
            s = sum(&m.mul_coords(&s), x);
        }
        let ratio = tag.of(&s) / sup;
        if ratio > gamma * (1.0 + 1e-12) {
            violations += 1;
        }
        max_ratio = max_ratio.max(ratio);
    }
    Ok(SummabilityReport { gamma, max_ratio, trials, violations })
}

/// Shadows one random `δ`-pseudo-orbit of a stable operator through the all-stable
/// splitting and returns `(sup error, accepted)` with acceptance `sup error ≤ γ δ`.
pub fn summability_shadow_check(op: &LinOp, gamma: f64, delta: f64, len: usize, rng_seed: u64) -> Result<(f64, bool)> {
    let d = op.dim().ok_or_else(|| Error::KindMismatch("summability check needs a dense operator".into()))?;
    let tag = op.norm_tag();
    let all_stable = Splitting::from_projections(DenseMatrix::identity(d), tag)?;
    let seed = Vector::Dense(DenseVector::from_real(&vec![1.0; d], tag)?);
    let po = generate_pseudo_orbit(op, &seed, Window::new(0, len as i64)?, delta, rng_seed)?;
    let res = shadow_splitting_series(op, &all_stable, &po, CONSTANT_TAIL_TOL)?;
    Ok((res.sup_error, res.sup_error <= gamma * delta * (1.0 + 1e-9)))
}

/// CSV rows `point, coord, x_re, x_im, hx_re, hx_im` with `hx = H(x)`.
pub fn write_conjugacy_csv<W: std::io::Write>(out: W, field: &ConjugacyField, points: &[Point]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["point", "coord", "x_re", "x_im", "hx_re", "hx_im"]).map_err(io)?;
    for (i, x) in points.iter().enumerate() {
        let hx = field.conjugacy(x)?;
        for (j, (a, b)) in x.iter().zip(&hx).enumerate() {
            w.serialize((i, j, a.re, a.im, b.re, b.im)).map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn re(v: &[f64]) -> Point {
        v.iter().map(|x| Scalar::new(*x, 0.0)).collect()
    }

    fn diag_op() -> LinOp {
        LinOp::from_real_rows(&[vec![0.5, 0.0], vec![0.0, 2.0]], NormTag::Linf).unwrap()
    }

    fn small_bump() -> LipschitzPerturbation {
        LipschitzPerturbation::bump(re(&[0.1, -0.2]), re(&[1.0, 1.0]), 0.01, 0.01, NormTag::Linf).unwrap()
    }

    #[test]
    fn bump_constants() {
        let b = small_bump();
        assert!((b.support_radius() - 1.539_600_717_839_002).abs() < 1e-12);
        assert_eq!(b.evaluate(&re(&[0.1, -0.2])), re(&[0.01, 0.01]));
        assert_eq!(b.evaluate(&re(&[3.0, 0.0])), re(&[0.0, 0.0]));
    }

    #[test]
    fn gamma_of_zero_and_constant() {
        let op = diag_op();
        let split = spectral_split(&op, DEFAULT_CIRCLE_GAP).unwrap();
        let z = LipschitzPerturbation::zero(2, NormTag::Linf);
        assert_eq!(gamma_eval(&op, &split, &z, RMap::Linear, &re(&[0.3, 0.4]), 1e-12).unwrap(), re(&[0.0, 0.0]));
        // S = first axis: Σ 2^{-k} v_0 = 2 v_0; U: -Σ_{k≥1} 2^{-k} v_1 = -v_1
        let c = LipschitzPerturbation::constant(re(&[0.3, -0.7]), NormTag::Linf).unwrap();
        let g = gamma_eval(&op, &split, &c, RMap::Linear, &re(&[5.0, 1.0]), 1e-13).unwrap();
        assert!((g[0].re - 0.6).abs() < 1e-12 && (g[1].re - 0.7).abs() < 1e-12, "{g:?}");
    }

    #[test]
    fn gamma_vanishes_far_from_support() {
        let op = diag_op();
        let split = spectral_split(&op, DEFAULT_CIRCLE_GAP).unwrap();
        // backward orbit of (10, 0) moves away along the first axis; forward orbit shrinks onto (0, 0)
        // but the bump sits around (5, 5)
        let b = LipschitzPerturbation::bump(re(&[5.0, 5.0]), re(&[1.0, 0.0]), 0.01, 0.01, NormTag::Linf).unwrap();
        let g = gamma_eval(&op, &split, &b, RMap::Linear, &re(&[10.0, 0.0]), 1e-12).unwrap();
        assert_eq!(g, re(&[0.0, 0.0]));
    }

    #[test]
    fn zero_perturbation_gives_identity() {
        let op = diag_op();
        let f = conjugacy_solve(&op, &LipschitzPerturbation::zero(2, NormTag::Linf), 1e-8, 10).unwrap();
        assert_eq!(f.picard_depth, 0);
        assert_eq!(f.h(&re(&[0.2, 0.1])).unwrap(), re(&[0.0, 0.0]));
        assert_eq!(conjugacy_residual(&f, &test_points(2, 2.0, 10, 1)).unwrap(), 0.0);
        let inv = inverse_conjugacy(&op, &LipschitzPerturbation::zero(2, NormTag::Linf), 1e-8).unwrap();
        assert_eq!(inv.h(&re(&[0.2, 0.1])).unwrap(), re(&[0.0, 0.0]));
    }

    #[test]
    fn bump_conjugacy() {
        let op = diag_op();
        let beta = small_bump();
        let f = conjugacy_solve(&op, &beta, 1e-8, 32).unwrap();
        assert!((f.gamma_norm - 3.0).abs() < 1e-9);
        assert!(f.contraction_factor <= 0.03 + 1e-9);
        let pts = test_points(2, 2.0, 20, 9);
        for x in &pts {
            assert!(NormTag::Linf.of(&f.h(x).unwrap()) <= 0.03 + 1e-8);
        }
        assert!(conjugacy_residual(&f, &pts).unwrap() <= 1e-6);
        let diffs = f.picard_differences(&pts).unwrap();
        for w in diffs.windows(2) {
            if w[0] > 1e-10 {
                assert!(w[1] <= (f.contraction_factor + 1e-9) * w[0], "{diffs:?}");
            }
        }
        let inv = inverse_conjugacy(&op, &beta, 1e-8).unwrap();
        assert!(conjugacy_residual(&inv, &pts).unwrap() <= 1e-6);
        assert!(composition_defect(&f, &inv, &pts).unwrap() <= 1e-5);
        for x in &pts {
            assert!(NormTag::Linf.of(&inv.h(x).unwrap()) <= inv.h_bound);
        }
    }

    #[test]
    fn escaping_point_has_tiny_residual() {
        let f = conjugacy_solve(&diag_op(), &small_bump(), 1e-8, 32).unwrap();
        let r = conjugacy_residual(&f, &[re(&[0.0, 50.0])]).unwrap();
        assert!(r <= f.tail_tol, "{r}");
    }

    #[test]
    fn large_lipschitz_is_rejected() {
        let beta = LipschitzPerturbation::bump(re(&[0.0, 0.0]), re(&[1.0, 0.0]), 0.01, 0.5, NormTag::Linf).unwrap();
        match conjugacy_solve(&diag_op(), &beta, 1e-8, 32) {
            Err(Error::NotContraction { factor }) => assert!((factor - 1.5).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    fn quadratic_map() -> SmoothMap {
        SmoothMap {
            map: Arc::new(|v: &[Scalar]| vec![v[0] * 0.5 + v[0] * v[0] * 0.005, v[1] * 2.0 - v[1] * v[1] * v[1] * 0.005]),
            derivative: Arc::new(|v: &[Scalar]| {
                DenseMatrix::diagonal(&[Scalar::new(0.5, 0.0) + v[0] * 0.01, Scalar::new(2.0, 0.0) - v[1] * v[1] * 0.015]).unwrap()
            }),
        }
    }

    #[test]
    fn local_linearization() {
        let gh = grobman_hartman_local(&quadratic_map(), &re(&[0.0, 0.0]), 0.5, 1e-7, NormTag::Linf).unwrap();
        assert!(gh.radius >= 0.05);
        let pts = test_points(2, gh.radius, 20, 4);
        assert!(conjugacy_residual(&gh.field, &pts).unwrap() <= 1e-5);
    }

    #[test]
    fn linear_map_needs_no_correction() {
        let lin = SmoothMap {
            map: Arc::new(|v: &[Scalar]| vec![v[0] * 0.5, v[1] * 2.0]),
            derivative: Arc::new(|_: &[Scalar]| DenseMatrix::diagonal_real(&[0.5, 2.0]).unwrap()),
        };
        let gh = grobman_hartman_local(&lin, &re(&[0.0, 0.0]), 1.0, 1e-8, NormTag::Linf).unwrap();
        assert_eq!(gh.radius, 1.0);
        assert_eq!(gh.field.h(&re(&[0.3, 0.3])).unwrap(), re(&[0.0, 0.0]));
    }

    #[test]
    fn rotation_is_not_certified() {
        let rot = SmoothMap {
            map: Arc::new(|v: &[Scalar]| vec![-v[1], v[0]]),
            derivative: Arc::new(|_: &[Scalar]| DenseMatrix::from_real(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap()),
        };
        assert_eq!(grobman_hartman_local(&rot, &re(&[0.0, 0.0]), 1.0, 1e-8, NormTag::Linf).unwrap_err(), Error::NotCertified);
    }

    #[test]
    fn summability_examples() {
        let half = LinOp::from_real_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]], NormTag::L2).unwrap();
        let rep = summability_verify(&half, 20, 60, 1).unwrap();
        assert!((rep.gamma - 2.0).abs() < 1e-9);
        assert!(rep.max_ratio <= 2.0 && rep.violations == 0);
        let dd = LinOp::from_real_rows(&[vec![0.5, 0.0], vec![0.0, 1.0 / 3.0]], NormTag::L2).unwrap();
        let m = dd.matrix().unwrap();
        let mut s = re(&[0.0, 0.0]);
        for _ in 0..80 {
            s = sum(&m.mul_coords(&s), &re(&[0.0, 1.0]));
        }
        assert!((s[1].re - 1.5).abs() < 1e-12);
        let e0: Point = re(&[1.0, 0.0]);
        let mut s = re(&[0.0, 0.0]);
        for _ in 0..80 {
            s = sum(&m.mul_coords(&s), &e0);
        }
        assert!((s[0].re - 2.0).abs() < 1e-12);
        let (err, ok) = summability_shadow_check(&half, rep.gamma, 1e-3, 100, 3).unwrap();
        assert!(ok, "{err}");
        let two = LinOp::from_real_rows(&[vec![2.0]], NormTag::L2).unwrap();
        assert!(matches!(summability_verify(&two, 1, 1, 0), Err(Error::NotContractiveSpectrum(_))));
    }

    #[test]
    fn csv_export() {
        let f = conjugacy_solve(&diag_op(), &small_bump(), 1e-6, 32).unwrap();
        let mut buf = Vec::new();
        write_conjugacy_csv(&mut buf, &f, &test_points(2, 1.0, 3, 2)).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn bump_respects_its_constants(cx in -1.0f64..1.0, cy in -1.0f64..1.0, sup in 0.001f64..0.1, lip in 0.001f64..0.1, seed in 0u64..1000) {
            let b = LipschitzPerturbation::bump(re(&[cx, cy]), re(&[1.0, -0.5]), sup, lip, NormTag::L2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let span = b.support_radius() * 1.5 + 2.0;
            for _ in 0..200 {
                let x = re(&[rng.gen_range(-span..span), rng.gen_range(-span..span)]);
                let y = re(&[rng.gen_range(-span..span), rng.gen_range(-span..span)]);
                let (bx, by) = (b.evaluate(&x), b.evaluate(&y));
                prop_assert!(NormTag::L2.of(&bx) <= sup * (1.0 + 1e-12));
                prop_assert!(NormTag::L2.of(&diff(&bx, &by)) <= lip * NormTag::L2.of(&diff(&x, &y)) * (1.0 + 1e-9) + 1e-15);
                if NormTag::L2.of(&diff(&x, &re(&[cx, cy]))) > b.support_radius() {
                    prop_assert!(bx.iter().all(|z| *z == Scalar::new(0.0, 0.0)));
                }
            }
        }
    }
}
