//! Pseudo-orbits and the three shadowing constructions, plus bounds on the
//! shadowableness constant.
//!
//! Convention: the defect is `z_n = L x_n - x_{n+1}` and a correction `e` with
//! `e_{n+1} = L e_n + z_n` turns `x + e` into an exact orbit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{banach_fixed_point, DenseMatrix, DenseVector, NormTag, Scalar, SparseBiSeq, Vector};
use crate::operators::{IndexRange, LinOp};
use crate::orbit_window::{Blocks, OrbitWindow};
use crate::splitting::{classify, restricted_series, Restrictor, Side, SplitKind, Splitting};

/// Horizon handed to `classify` before any construction that needs a certificate.
pub const CERTIFY_HORIZON: usize = 256;
pub const WINDOW_SOLVE_MAX_DIM: usize = 8;
pub const WINDOW_SOLVE_MAX_LEN: usize = 512;
const ORBIT_REL_TOL: f64 = 1e-12;
const WINDOW_SOLVE_SEED: u64 = 0x5eed_0001;

/// Closed index interval `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl Window {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if end < start {
            return Err(Error::InvalidInput(format!("empty window [{start}, {end}]")));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoOrbit {
    window: Window,
    points: Vec<Vector>,
    delta: f64,
}

fn defect_slack(scale: f64) -> f64 {
    1e-12 * scale.max(1.0)
}

impl PseudoOrbit {
    /// Wrap explicit points, checking every step defect against `delta`.
    pub fn new(op: &LinOp, start: i64, points: Vec<Vector>, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInput(format!("delta must be a finite nonnegative number, got {delta}")));
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("pseudo-orbit without points".into()));
        }
        let window = Window::new(start, start + points.len() as i64 - 1)?;
        let po = Self { window, points, delta };
        for (i, z) in po.defects(op)?.iter().enumerate() {
            let bound = delta + defect_slack(po.points[i + 1].norm());
            if z.norm() > bound {
                return Err(Error::NotAChain { index: i, defect: z.norm(), bound: delta });
            }
        }
        Ok(po)
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `z_n = L x_n - x_{n+1}` for each step of the window.
    pub fn defects(&self, op: &LinOp) -> Result<Vec<Vector>> {
        self.points.windows(2).map(|w| op.apply(&w[0])?.sub(&w[1])).collect()
    }

    /// Largest step defect actually present.
    pub fn measured_delta(&self, op: &LinOp) -> Result<f64> {
        Ok(self.defects(op)?.iter().map(Vector::norm).fold(0.0, f64::max))
    }
}

fn random_like(like: &Vector, radius: f64, rng: &mut ChaCha8Rng) -> Result<Vector> {
    if radius == 0.0 {
        return Ok(like.zero_like());
    }
    let draw = |rng: &mut ChaCha8Rng, real: bool| {
        let re = rng.gen_range(-1.0..1.0);
        let im = if real { 0.0 } else { rng.gen_range(-1.0..1.0) };
        Scalar::new(re, im)
    };
    let raw = match like {
        Vector::Dense(v) => {
            let real = v.coords().iter().all(|z| z.im == 0.0);
            let coords: Vec<Scalar> = (0..v.dim()).map(|_| draw(rng, real)).collect();
            Vector::Dense(DenseVector::new(coords, v.norm_tag())?)
        }
        Vector::Sparse(s) => {
            let real = s.iter().all(|(_, z)| z.im == 0.0);
            let (lo, hi) = s.support_bounds().unwrap_or((0, 0));
            let entries: Vec<(i64, Scalar)> =
                (0..4).map(|_| (rng.gen_range(lo - 2..=hi + 2), draw(rng, real))).collect();
            Vector::Sparse(SparseBiSeq::from_entries(entries, s.norm_tag())?)
        }
    };
    let n = raw.norm();
    if n == 0.0 {
        return Ok(like.zero_like());
    }
    let target = radius * rng.gen_range(0.0..1.0);
    Ok(raw.scale(Scalar::new(target / n, 0.0)))
}

/// Orbit of `seed` plus bounded noise `η_n` with `η_{n0} = 0`, so that the step
/// perturbation `η_{n+1} - L η_n` never exceeds `delta`.
pub fn generate_pseudo_orbit(op: &LinOp, seed: &Vector, window: Window, delta: f64, rng_seed: u64) -> Result<PseudoOrbit> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!("delta must be a finite nonnegative number, got {delta}")));
    }
    if window.start < 0 && !op.is_invertible() {
        return Err(Error::NotInvertible);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let radius = delta / (1.0 + op.operator_norm()) * (1.0 - 1e-9);
    let mut points = Vec::with_capacity(window.len());
    let mut orbit = seed.clone();
    points.push(seed.clone());
    for _ in 1..window.len() {
        orbit = op.apply(&orbit)?;
        let eta = random_like(&orbit, radius, &mut rng)?;
        points.push(orbit.add(&eta)?);
    }
    PseudoOrbit::new(op, window.start, points, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShadowMethod {
    SplittingSeries,
    ContractionFixpoint,
    WindowSolve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowResult {
    pub shadow_seed: Vector,
    pub trajectory: Vec<Vector>,
    pub sup_error: f64,
    pub constant_used: f64,
    pub method: ShadowMethod,
}

fn sup_distance(a: &[Vector], b: &[Vector]) -> Result<f64> {
    a.iter().zip(b).try_fold(0.0, |m, (x, y)| Ok(f64::max(m, x.distance(y)?)))
}

/// Largest relative step residual `‖L y_n - y_{n+1}‖ / scale` of a trajectory.
pub fn orbit_residual(op: &LinOp, traj: &[Vector]) -> Result<f64> {
    let scale = traj.iter().map(Vector::norm).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for w in traj.windows(2) {
        worst = worst.max(op.apply(&w[0])?.distance(&w[1])?);
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

fn finish(op: &LinOp, po: &PseudoOrbit, trajectory: Vec<Vector>, constant_used: f64, method: ShadowMethod) -> Result<ShadowResult> {
    let r = orbit_residual(op, &trajectory)?;
    if r > ORBIT_REL_TOL {
        return Err(Error::NoConvergence(format!("shadow trajectory is not an exact orbit (relative residual {r:e})")));
    }
    let sup_error = sup_distance(&trajectory, &po.points)?;
    Ok(ShadowResult { shadow_seed: trajectory[0].clone(), trajectory, sup_error, constant_used, method })
}

/// Upper shadowableness constant `‖P_S‖ A + ‖P_U‖ B` of a certified splitting.
pub(crate) fn series_constant(op: &LinOp, split: &Splitting, tail_tol: f64) -> Result<UpperTerms> {
    let a = restricted_series(op, split, Side::Stable, false, tail_tol)?;
    let b = restricted_series(op, split, Side::Unstable, true, tail_tol)?;
    Ok(UpperTerms {
        proj_s_norm: split.proj_s_norm,
        series_a: a.sum,
        proj_u_norm: split.proj_u_norm,
        series_b: b.sum,
    })
}

pub(crate) fn certify(op: &LinOp, split: &Splitting) -> Result<()> {
    let rep = classify(op, split, CERTIFY_HORIZON)?;
    if rep.is_certified() {
        Ok(())
    } else {
        Err(Error::NotCertified)
    }
}

/// Shadow with the stable part of the defects pushed forward and the unstable part
/// pulled back; defects outside the window count as zero.
pub fn shadow_splitting_series(op: &LinOp, split: &Splitting, po: &PseudoOrbit, tail_tol: f64) -> Result<ShadowResult> {
    certify(op, split)?;
    let constant = series_constant(op, split, tail_tol)?.upper();
    let z = po.defects(op)?;
    let n = po.len();
    let zero = po.points[0].zero_like();
    let mut f = vec![zero.clone(); n];
    for i in 0..n - 1 {
        f[i + 1] = split.project(Side::Stable, &op.apply(&f[i])?.add(&z[i])?)?;
    }
    let mut g = vec![zero; n];
    for i in (0..n - 1).rev() {
        let pushed = g[i + 1].sub(&split.project(Side::Unstable, &z[i])?)?;
        g[i] = split.project(Side::Unstable, &op.apply_inverse(&pushed)?)?;
    }
    let trajectory = (0..n)
        .map(|i| po.points[i].add(&f[i])?.add(&g[i]))
        .collect::<Result<Vec<_>>>()?;
    finish(op, po, trajectory, constant, ShadowMethod::SplittingSeries)
}

/// Fixed point of `Γ(ξ)_0 = x_0`, `Γ(ξ)_i = L ξ_{i-1}` under the sup metric.
pub fn shadow_contraction(op: &LinOp, po: &PseudoOrbit, tol: f64) -> Result<ShadowResult> {
    let lambda = op.operator_norm();
    if !(lambda < 1.0) {
        return Err(Error::NonContracting { observed: lambda, bound: 1.0 });
    }
    let first = po.points[0].clone();
    let gamma = |xi: &Vec<Vector>| -> Result<Vec<Vector>> {
        let mut out = Vec::with_capacity(xi.len());
        out.push(first.clone());
        for v in &xi[..xi.len() - 1] {
            out.push(op.apply(v)?);
        }
        Ok(out)
    };
    let dist = |a: &Vec<Vector>, b: &Vec<Vector>| sup_distance(a, b);
    let bound = lambda.max(f64::EPSILON);
    let fp = banach_fixed_point(gamma, dist, po.points.clone(), bound, tol)?;
    // the fixed point is the orbit of x_0; rebuild it exactly from its first entry
    let mut trajectory = vec![fp.point[0].clone()];
    for i in 1..po.len() {
        let next = op.apply(&trajectory[i - 1])?;
        trajectory.push(next);
    }
    finish(op, po, trajectory, 1.0 / (1.0 - lambda), ShadowMethod::ContractionFixpoint)
}

fn dense_blocks(v: &[Vector]) -> Result<Blocks> {
    v.iter()
        .map(|x| x.as_dense().map(|d| d.coords().to_vec()).ok_or_else(|| Error::KindMismatch("dense vectors expected".into())))
        .collect()
}

/// Exact orbit nearest to the pseudo-orbit in the window sup norm.
pub fn shadow_window_solve(op: &LinOp, po: &PseudoOrbit) -> Result<ShadowResult> {
    let m = op.matrix().ok_or_else(|| Error::KindMismatch("window solve needs a dense operator".into()))?;
    if m.dim() > WINDOW_SOLVE_MAX_DIM {
        return Err(Error::InvalidInput(format!("window solve supports d <= {WINDOW_SOLVE_MAX_DIM}")));
    }
    if po.len() > WINDOW_SOLVE_MAX_LEN {
        return Err(Error::InvalidInput(format!("window solve supports at most {WINDOW_SOLVE_MAX_LEN} points")));
    }
    if po.len() == 1 {
        return finish(op, po, po.points.clone(), 0.0, ShadowMethod::WindowSolve);
    }
    let tag = op.norm_tag();
    let z = dense_blocks(&po.defects(op)?)?;
    let x = dense_blocks(&po.points)?;
    let window = OrbitWindow::new(m, po.len() - 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(WINDOW_SOLVE_SEED);
    let (e, best) = window.min_sup_solution(&z, tag, &mut rng);
    let trajectory = x
        .iter()
        .zip(&e)
        .map(|(a, b)| {
            let coords = a.iter().zip(b).map(|(p, q)| p + q).collect();
            Ok(Vector::Dense(DenseVector::new(coords, tag)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let constant = if po.delta > 0.0 { best / po.delta } else { 0.0 };
    finish(op, po, trajectory, constant, ShadowMethod::WindowSolve)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperTerms {
    pub proj_s_norm: f64,
    pub series_a: f64,
    pub proj_u_norm: f64,
    pub series_b: f64,
}

impl UpperTerms {
    pub fn upper(&self) -> f64 {
        self.proj_s_norm * self.series_a + self.proj_u_norm * self.series_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadBounds {
    pub upper: f64,
    pub lower: f64,
    pub upper_formula_terms: UpperTerms,
}

const SHAD_TAIL_TOL: f64 = 1e-12;
const LOWER_SAMPLES: usize = 64;
const SUM_TERM_CAP: usize = 10_000;

/// Two-sided bounds on the shadowableness constant of a certified splitting.
pub fn shad_bounds(op: &LinOp, split: &Splitting) -> Result<ShadBounds> {
    certify(op, split)?;
    let terms = match series_constant(op, split, SHAD_TAIL_TOL) {
        Ok(t) => t,
        Err(Error::TrajectoryBudget(_)) => UpperTerms {
            proj_s_norm: split.proj_s_norm,
            series_a: f64::INFINITY,
            proj_u_norm: split.proj_u_norm,
            series_b: f64::INFINITY,
        },
        Err(e) => return Err(e),
    };
    let lower = match op.matrix() {
        Some(m) => dense_lower(op, m, split)?,
        None => seq_lower(op, split)?,
    };
    Ok(ShadBounds { upper: terms.upper(), lower, upper_formula_terms: terms })
}

fn dense_lower(op: &LinOp, m: &DenseMatrix, split: &Splitting) -> Result<f64> {
    let d = m.dim();
    let tag = op.norm_tag();
    let (ps, pu) = split.projections(d)?;
    let id = DenseMatrix::identity(d);
    let inv = op.inverse_matrix().ok_or(Error::NotInvertible)?;
    let mut best: f64 = 0.0;
    for (step, p, lead) in [(m, &ps, &id), (inv, &pu, inv)] {
        let restrictor = Restrictor::new(p, tag);
        if restrictor.is_trivial() {
            continue;
        }
        let resolvent = id.sub(step).inverse()?.mul(lead).mul(p);
        let (n, exact) = restrictor.norm(&resolvent, tag);
        best = best.max(if exact { n } else { sampled_norm(&resolvent, &restrictor, d, tag) });
    }
    Ok(best)
}

fn sampled_norm(m: &DenseMatrix, restrictor: &Restrictor, d: usize, tag: NormTag) -> f64 {
    let span = restrictor.spanning(d);
    let mut rng = ChaCha8Rng::seed_from_u64(LOWER_SAMPLES as u64);
    let mut best: f64 = 0.0;
    let mut probe = |v: &[Scalar]| {
        let n = tag.of(v);
        if n > 0.0 {
            best = best.max(tag.of(&m.mul_coords(v)) / n);
        }
    };
    for v in &span {
        probe(v);
    }
    for _ in 0..LOWER_SAMPLES {
        let mut v = vec![Scalar::new(0.0, 0.0); d];
        for b in &span {
            let c = Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            for (x, y) in v.iter_mut().zip(b) {
                *x += c * y;
            }
        }
        probe(&v);
    }
    best
}

/// Indices of `range` closest to its finite boundary.
fn boundary_indices(range: IndexRange, count: i64) -> Vec<i64> {
    match (range.lo, range.hi) {
        (_, Some(h)) => (0..count).map(|i| h - i).filter(|k| range.contains(*k)).collect(),
        (Some(l), None) => (0..count).map(|i| l + i).collect(),
        (None, None) => (-count / 2..count / 2).collect(),
    }
}

fn seq_lower(op: &LinOp, split: &Splitting) -> Result<f64> {
    let cut = match &split.kind {
        SplitKind::CoordinateIndex(c) => *c,
        SplitKind::SpectralDense { .. } => return Err(Error::KindMismatch("spectral splitting for a sequence operator".into())),
    };
    let tag = op.norm_tag();
    let mut best: f64 = 0.0;
    for (range, forward) in [(cut.stable_range(), true), (cut.unstable_range(), false)] {
        if range.is_empty() {
            continue;
        }
        let idx = boundary_indices(range, 64);
        let mut candidates: Vec<SparseBiSeq> = idx.iter().take(16).map(|k| SparseBiSeq::unit(*k, tag)).collect();
        for w in [8usize, 64] {
            let block = SparseBiSeq::from_real(idx.iter().take(w).map(|k| (*k, 1.0)), tag)?;
            candidates.push(block);
        }
        for v in candidates {
            let v = Vector::Sparse(v);
            let norm = v.norm();
            if norm == 0.0 {
                continue;
            }
            let mut term = if forward { v.clone() } else { op.apply_inverse(&v)? };
            let mut sum = term.clone();
            let mut k = 0;
            while term.norm() > 1e-16 * sum.norm() {
                k += 1;
                if k > SUM_TERM_CAP {
                    return Err(Error::TrajectoryBudget(SUM_TERM_CAP));
                }
                term = if forward { op.apply(&term)? } else { op.apply_inverse(&term)? };
                sum = sum.add(&term)?;
            }
            best = best.max(sum.norm() / norm);
        }
    }
    Ok(best)
}

/// Certified interval `lo <= Shad <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ShadInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0) || !(hi >= lo - 1e-9) {
            return Err(Error::InvalidInput(format!("bad shadowableness interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }
}

impl From<ShadBounds> for ShadInterval {
    fn from(b: ShadBounds) -> Self {
        Self { lo: b.lower, hi: b.upper }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShadRule {
    /// Interval for `H L H^{-1}` from one for `L`.
    Conjugacy { h_norm: f64, h_inv_norm: f64 },
    /// Interval for a direct product from those of its factors.
    Product,
    /// Interval for `L^{-1}` from one for `L`.
    Inverse { op_norm: f64, inv_norm: f64 },
}

pub fn shad_calculus(rule: ShadRule, inputs: &[ShadInterval]) -> Result<ShadInterval> {
    let single = || {
        if inputs.len() == 1 {
            Ok(inputs[0])
        } else {
            Err(Error::InvalidInput(format!("rule takes one interval, got {}", inputs.len())))
        }
    };
    match rule {
        ShadRule::Conjugacy { h_norm, h_inv_norm } => {
            let i = single()?;
            let kappa = h_norm * h_inv_norm;
            Ok(ShadInterval { lo: i.lo / kappa, hi: i.hi * kappa })
        }
        ShadRule::Product => {
            if inputs.is_empty() {
                return Err(Error::InvalidInput("product rule needs at least one interval".into()));
            }
            Ok(ShadInterval {
                lo: inputs.iter().map(|i| i.lo).fold(0.0, f64::max),
                hi: inputs.iter().map(|i| i.hi).fold(0.0, f64::max),
            })
        }
        ShadRule::Inverse { op_norm, inv_norm } => {
            let i = single()?;
            Ok(ShadInterval { lo: i.lo / inv_norm, hi: i.hi * op_norm })
        }
    }
}

/// Trajectory as CSV rows `n, coord, re, im`; sequence entries use their own index.
pub fn write_trajectory_csv<W: std::io::Write>(out: W, start: i64, trajectory: &[Vector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["n", "coord", "re", "im"]).map_err(io)?;
    for (i, v) in trajectory.iter().enumerate() {
        let n = (start + i as i64).to_string();
        let rows: Vec<(i64, Scalar)> = match v {
            Vector::Dense(d) => d.coords().iter().enumerate().map(|(j, z)| (j as i64, *z)).collect(),
            Vector::Sparse(s) => s.iter().collect(),
        };
        for (j, z) in rows {
            w.write_record([n.clone(), j.to_string(), z.re.to_string(), z.im.to_string()]).map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::lockdown;
    use crate::splitting::{spectral_split, Cut, DEFAULT_CIRCLE_GAP};
    use proptest::prelude::*;

    fn diag(a: f64, b: f64, tag: NormTag) -> LinOp {
        LinOp::from_real_rows(&[vec![a, 0.0], vec![0.0, b]], tag).unwrap()
    }

    fn dv(x: &[f64], tag: NormTag) -> Vector {
        Vector::Dense(DenseVector::from_real(x, tag).unwrap())
    }

    fn rotation() -> LinOp {
        LinOp::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]], NormTag::L2).unwrap()
    }

    #[test]
    fn generator_respects_delta() {
        let op = diag(0.5, 2.0, NormTag::Linf);
        let po = generate_pseudo_orbit(&op, &dv(&[1.0, 1.0], NormTag::Linf), Window::new(0, 10).unwrap(), 1e-3, 42).unwrap();
        assert_eq!(po.len(), 11);
        assert_eq!(po.points()[0], dv(&[1.0, 1.0], NormTag::Linf));
        assert!(po.measured_delta(&op).unwrap() <= 1e-3);
        assert!(po.measured_delta(&op).unwrap() > 0.0);
    }

    #[test]
    fn zero_delta_is_exact_orbit() {
        let op = diag(0.5, 2.0, NormTag::Linf);
        let po = generate_pseudo_orbit(&op, &dv(&[1.0, 1.0], NormTag::Linf), Window::new(0, 6).unwrap(), 0.0, 1).unwrap();
        assert_eq!(po.measured_delta(&op).unwrap(), 0.0);
        let single = generate_pseudo_orbit(&op, &dv(&[1.0, 1.0], NormTag::Linf), Window::new(3, 3).unwrap(), 0.5, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single.defects(&op).unwrap().is_empty());
    }

    #[test]
    fn explicit_points_are_checked() {
        let op = diag(0.5, 2.0, NormTag::Linf);
        let pts = vec![dv(&[1.0, 0.0], NormTag::Linf), dv(&[0.6, 0.0], NormTag::Linf)];
        assert!(matches!(PseudoOrbit::new(&op, 0, pts.clone(), 0.05), Err(Error::NotAChain { index: 0, .. })));
        assert!(PseudoOrbit::new(&op, 0, pts, 0.1).is_ok());
    }

    #[test]
    fn series_on_diag_within_three_delta() {
        let op = diag(0.5, 2.0, NormTag::Linf);
        let split = Splitting::coordinate(Cut::AtMost(0), NormTag::Linf);
        let po = generate_pseudo_orbit(&op, &dv(&[0.7, 0.0], NormTag::Linf), Window::new(0, 80).unwrap(), 1e-3, 9).unwrap();
        let res = shadow_splitting_series(&op, &split, &po, 1e-12).unwrap();
        assert!((res.constant_used - 3.0).abs() < 1e-9);
        assert!(res.sup_error <= 3e-3 + 1e-9, "{}", res.sup_error);
        assert_eq!(res.method, ShadowMethod::SplittingSeries);
    }

    #[test]
    fn series_on_exact_orbit_is_identity() {
        let op = diag(0.5, 2.0, NormTag::Linf);
        let split = Splitting::coordinate(Cut::AtMost(0), NormTag::Linf);
        let po = generate_pseudo_orbit(&op, &dv(&[0.7, 0.3], NormTag::Linf), Window::new(0, 5).unwrap(), 0.0, 9).unwrap();
        let res = shadow_splitting_series(&op, &split, &po, 1e-12).unwrap();
        assert_eq!(res.sup_error, 0.0);
        assert_eq!(res.trajectory, po.points());
    }

    #[test]
    fn series_on_lockdown() {
        let (l, _, _) = lockdown(0.5, NormTag::L1).unwrap();
        let split = Splitting::coordinate(Cut::AtMost(0), NormTag::L1);
        let seed = Vector::Sparse(SparseBiSeq::from_real([(0, 1.0), (1, -0.5), (-2, 0.25)], NormTag::L1).unwrap());
        let po = generate_pseudo_orbit(&l, &seed, Window::new(-5, 20).unwrap(), 1e-4, 3).unwrap();
        let res = shadow_splitting_series(&l, &split, &po, 1e-12).unwrap();
        assert!((res.constant_used - 3.0).abs() < 1e-9);
        assert!(res.sup_error <= 3e-4 + 1e-9);
        assert!(orbit_residual(&l, &res.trajectory).unwrap() <= 1e-12);
    }

    #[test]
    fn series_rejects_uncertified_split() {
        let op = diag(0.5, 2.0, NormTag::Linf);
        let split = Splitting::coordinate(Cut::AllStable, NormTag::Linf);
        let po = generate_pseudo_orbit(&op, &dv(&[0.7, 0.0], NormTag::Linf), Window::new(0, 3).unwrap(), 1e-3, 9).unwrap();
        assert_eq!(shadow_splitting_series(&op, &split, &po, 1e-12), Err(Error::NotCertified));
    }

    #[test]
    fn contraction_shadower() {
        let op = diag(0.5, 0.5, NormTag::L2);
        let po = generate_pseudo_orbit(&op, &dv(&[1.0, -1.0], NormTag::L2), Window::new(0, 40).unwrap(), 0.05, 4).unwrap();
        let res = shadow_contraction(&op, &po, 1e-12).unwrap();
        assert!(res.sup_error <= 0.1 + 1e-12);
        assert_eq!(res.shadow_seed, po.points()[0]);
        let exact = generate_pseudo_orbit(&op, &dv(&[1.0, -1.0], NormTag::L2), Window::new(0, 10).unwrap(), 0.0, 4).unwrap();
        assert_eq!(shadow_contraction(&op, &exact, 1e-12).unwrap().trajectory, exact.points());
        let rot = rotation();
        let po = generate_pseudo_orbit(&rot, &dv(&[1.0, 0.0], NormTag::L2), Window::new(0, 4).unwrap(), 0.0, 4).unwrap();
        assert!(matches!(shadow_contraction(&rot, &po, 1e-12), Err(Error::NonContracting { .. })));
    }

    #[test]
    fn window_solve_beats_series() {
        let op = diag(0.5, 2.0, NormTag::Linf);
        let split = Splitting::coordinate(Cut::AtMost(0), NormTag::Linf);
        let po = generate_pseudo_orbit(&op, &dv(&[0.3, 0.0], NormTag::Linf), Window::new(0, 60).unwrap(), 1e-3, 17).unwrap();
        let s = shadow_splitting_series(&op, &split, &po, 1e-12).unwrap();
        let w = shadow_window_solve(&op, &po).unwrap();
        assert!(w.sup_error <= s.sup_error + 1e-6, "{} vs {}", w.sup_error, s.sup_error);
        assert!(w.sup_error <= w.constant_used * po.delta() + 1e-9);
        let exact = generate_pseudo_orbit(&op, &dv(&[0.3, 0.1], NormTag::Linf), Window::new(0, 9).unwrap(), 0.0, 17).unwrap();
        assert!(shadow_window_solve(&op, &exact).unwrap().sup_error < 1e-12);
    }

    #[test]
    fn rotation_window_error_grows() {
        let rot = rotation();
        let delta = 1e-3;
        let mut last = 0.0;
        for n in [8usize, 16, 32, 64] {
            // resonant chain: x_{k+1} = R x_k + delta R^k u
            let u = dv(&[1.0, 0.0], NormTag::L2);
            let mut pts = vec![u.zero_like()];
            let mut push = u.scale(Scalar::new(delta, 0.0));
            for _ in 0..n {
                let next = rot.apply(pts.last().unwrap()).unwrap().add(&push).unwrap();
                pts.push(next);
                push = rot.apply(&push).unwrap();
            }
            let po = PseudoOrbit::new(&rot, 0, pts, delta).unwrap();
            let w = shadow_window_solve(&rot, &po).unwrap();
            assert!(w.sup_error >= last - 1e-12);
            last = w.sup_error;
        }
        assert!(last >= 10.0 * delta, "{last}");
    }

    #[test]
    fn shad_bounds_examples() {
        let op = diag(0.5, 2.0, NormTag::Linf);
        let b = shad_bounds(&op, &Splitting::coordinate(Cut::AtMost(0), NormTag::Linf)).unwrap();
        assert!((b.upper - 3.0).abs() < 1e-9 && (b.lower - 2.0).abs() < 1e-9, "{b:?}");
        let half = diag(0.5, 0.5, NormTag::Linf);
        let b = shad_bounds(&half, &Splitting::coordinate(Cut::AllStable, NormTag::Linf)).unwrap();
        assert!((b.upper - 2.0).abs() < 1e-9 && (b.lower - 2.0).abs() < 1e-9, "{b:?}");
        let (l, _, _) = lockdown(0.5, NormTag::L1).unwrap();
        let b = shad_bounds(&l, &Splitting::coordinate(Cut::AtMost(0), NormTag::L1)).unwrap();
        assert!((b.upper - 3.0).abs() < 1e-9);
        assert!(b.lower <= b.upper + 1e-9 && b.lower >= 1.0);
        let twice = diag(2.0, 2.0, NormTag::Linf);
        let b = shad_bounds(&twice, &Splitting::coordinate(Cut::AllUnstable, NormTag::Linf)).unwrap();
        assert!((b.upper - 1.0).abs() < 1e-9 && (b.lower - 1.0).abs() < 1e-9, "{b:?}");
    }

    #[test]
    fn shad_bounds_on_spectral_split() {
        let op = LinOp::from_real_rows(&[vec![0.5, 1.0], vec![0.0, 3.0]], NormTag::L1).unwrap();
        let split = spectral_split(&op, DEFAULT_CIRCLE_GAP).unwrap();
        let b = shad_bounds(&op, &split).unwrap();
        assert!(b.lower > 0.0 && b.lower <= b.upper + 1e-9 && b.upper.is_finite(), "{b:?}");
    }

    #[test]
    fn calculus_examples() {
        let a = ShadInterval::new(2.0, 3.0).unwrap();
        let b = ShadInterval::new(2.0, 2.0).unwrap();
        assert_eq!(shad_calculus(ShadRule::Product, &[a, b]).unwrap(), a);
        let iso = ShadRule::Conjugacy { h_norm: 1.0, h_inv_norm: 1.0 };
        assert_eq!(shad_calculus(iso, &[a]).unwrap(), a);
        let inv = shad_calculus(ShadRule::Inverse { op_norm: 2.0, inv_norm: 2.0 }, &[a]).unwrap();
        assert_eq!(inv, ShadInterval { lo: 1.0, hi: 6.0 });
        assert!(shad_calculus(ShadRule::Product, &[]).is_err());
    }

    #[test]
    fn inverse_reversal_swaps_roles() {
        let op = diag(0.5, 2.0, NormTag::Linf);
        let inv = op.inverse().unwrap();
        let po = generate_pseudo_orbit(&inv, &dv(&[0.0, 0.4], NormTag::Linf), Window::new(0, 30).unwrap(), 1e-3, 5).unwrap();
        // stable side of the inverse is the expanding coordinate of op
        let swapped = Splitting::from_projections(
            DenseMatrix::from_real(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            NormTag::Linf,
        )
        .unwrap();
        let a = shadow_splitting_series(&inv, &swapped, &po, 1e-12).unwrap();
        let reversed: Vec<Vector> = po.points().iter().rev().cloned().collect();
        let rpo = PseudoOrbit::new(&op, 0, reversed, 2.0 * 1e-3).unwrap();
        let b = shadow_splitting_series(&op, &Splitting::coordinate(Cut::AtMost(0), NormTag::Linf), &rpo, 1e-12).unwrap();
        for (x, y) in a.trajectory.iter().zip(b.trajectory.iter().rev()) {
            assert!(x.distance(y).unwrap() < 1e-12);
        }
    }

    #[test]
    fn trajectory_csv() {
        let traj = vec![dv(&[1.0, 2.0], NormTag::L2), dv(&[3.0, 4.0], NormTag::L2)];
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, 5, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("n,coord,re,im"));
        assert_eq!(text.lines().nth(3), Some("6,0,3,0"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn series_error_bounded_by_constant(a in 0.1f64..0.8, b in 1.3f64..4.0, seed in 0u64..1000, len in 2i64..60) {
            let op = diag(a, b, NormTag::Linf);
            let split = Splitting::coordinate(Cut::AtMost(0), NormTag::Linf);
            let po = generate_pseudo_orbit(&op, &dv(&[0.5, 0.0], NormTag::Linf), Window::new(0, len).unwrap(), 1e-3, seed).unwrap();
            let res = shadow_splitting_series(&op, &split, &po, 1e-12).unwrap();
            prop_assert!(res.sup_error <= res.constant_used * 1e-3 + 1e-9);
            prop_assert!(orbit_residual(&op, &res.trajectory).unwrap() <= 1e-12);
            let bounds = shad_bounds(&op, &split).unwrap();
            prop_assert!(bounds.lower <= bounds.upper + 1e-9);
        }
    }
}
