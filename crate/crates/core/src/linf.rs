//! The sequence-space map `(L∞ ξ)_n = ξ_{n+1} - L ξ_n` on finite windows
//! `-N..=N`, with sequences vanishing outside the window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dense_eig, DenseMatrix, DenseVector, NormTag, Scalar, Vector};
use crate::operators::LinOp;
use crate::orbit_window::{sub_assign, sup_norm, BlockTridiag, Blocks, OrbitWindow};
use crate::search::AffineMinimax;
use crate::shadowing::shad_bounds;
use crate::splitting::{spectral_split, DEFAULT_CIRCLE_GAP};

pub const MARGIN_MAX_UNKNOWNS: usize = 4096;
const INVERSE_ITERATIONS: usize = 12;
const POLISH_DIRECTIONS: usize = 6;
/// Window and sample count used to re-estimate perturbed operators in the robustness scan.
pub const SCAN_WINDOW: usize = 16;
pub const SCAN_SAMPLES: usize = 8;

#[derive(Debug, Clone)]
pub struct WindowedLinf {
    base: LinOp,
    n: usize,
}

fn zero_blocks(len: usize, d: usize) -> Blocks {
    vec![vec![Scalar::new(0.0, 0.0); d]; len]
}

impl WindowedLinf {
    pub fn new(base: LinOp, n: usize) -> Self {
        Self { base, n }
    }

    pub fn base(&self) -> &LinOp {
        &self.base
    }

    pub fn half_width(&self) -> usize {
        self.n
    }

    /// `2N` outputs `ξ_{n+1} - L ξ_n` for `n = -N..N-1`.
    pub fn apply(&self, xi: &[Vector]) -> Result<Vec<Vector>> {
        if xi.len() != 2 * self.n + 1 {
            return Err(Error::InvalidInput(format!("window of half-width {} needs {} entries, got {}", self.n, 2 * self.n + 1, xi.len())));
        }
        let dense = self.base.is_dense();
        for v in xi {
            let ok = match v {
                Vector::Dense(x) => dense && Some(x.dim()) == self.base.dim(),
                Vector::Sparse(_) => !dense,
            };
            if !ok {
                return Err(Error::KindMismatch(format!("{} entry for this operator", v.kind())));
            }
        }
        xi.windows(2).map(|w| w[1].sub(&self.base.apply(&w[0])?)).collect()
    }

    fn matrix(&self) -> Result<&DenseMatrix> {
        self.base.matrix().ok_or_else(|| Error::KindMismatch("windowed diagnostics need a dense operator".into()))
    }

    /// Outputs including the two boundary rows `ξ_{-N}` and `-L ξ_N`.
    fn stacked(&self, m: &DenseMatrix, xi: &Blocks) -> Blocks {
        let mut out = Vec::with_capacity(xi.len() + 1);
        out.push(xi[0].clone());
        for w in xi.windows(2) {
            let mut v = w[1].clone();
            sub_assign(&mut v, &m.mul_coords(&w[0]));
            out.push(v);
        }
        let mut last = m.mul_coords(&xi[xi.len() - 1]);
        for z in last.iter_mut() {
            *z = -*z;
        }
        out.push(last);
        out
    }

    fn ratio(&self, m: &DenseMatrix, xi: &Blocks) -> f64 {
        let tag = self.base.norm_tag();
        let nx = sup_norm(xi, tag);
        if nx == 0.0 {
            return f64::INFINITY;
        }
        sup_norm(&self.stacked(m, xi), tag) / nx
    }
}

/// Free-function form of [`WindowedLinf::apply`].
pub fn linf_apply(w: &WindowedLinf, xi: &[Vector]) -> Result<Vec<Vector>> {
    w.apply(xi)
}

fn tapered(lambda: Scalar, v: &[Scalar], n: usize, taper: bool) -> Blocks {
    let len = 2 * n + 1;
    (0..len)
        .map(|j| {
            let k = j as i32 - n as i32;
            let t = if taper { 1.0 - (k.unsigned_abs() as f64) / (n as f64 + 1.0) } else { 1.0 };
            let f = lambda.powi(k) * t;
            v.iter().map(|x| x * f).collect()
        })
        .collect()
}

fn normalize(b: &mut Blocks) {
    let n: f64 = b.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in b.iter_mut().flatten() {
            *z /= n;
        }
    }
}

/// Smallest `sup ‖L∞ ξ‖` over `sup ‖ξ‖ = 1` (boundary rows included), estimated from
/// above by eigen-sequences and the smallest singular vector, then improved by an
/// anchored convex search over their span. `N = 0` gives `+inf`.
pub fn linf_injectivity_margin(w: &WindowedLinf) -> Result<f64> {
    let m = w.matrix()?;
    if w.n == 0 {
        return Ok(f64::INFINITY);
    }
    let d = m.dim();
    let len = 2 * w.n + 1;
    if d * len > MARGIN_MAX_UNKNOWNS {
        return Err(Error::InvalidInput(format!("margin supports d(2N+1) <= {MARGIN_MAX_UNKNOWNS}")));
    }
    let mut cands: Vec<Blocks> = Vec::new();
    for pair in dense_eig(m)? {
        for taper in [true, false] {
            cands.push(tapered(pair.value, pair.vector.coords(), w.n, taper));
        }
    }
    // inverse iteration on A^H A for the smallest singular vector
    let adj = m.adjoint();
    let gram = BlockTridiag::new(
        &DenseMatrix::identity(d).add(&adj.mul(m)),
        &adj.scale(Scalar::new(-1.0, 0.0)),
        &m.scale(Scalar::new(-1.0, 0.0)),
        len,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(len as u64);
    let mut x: Blocks = (0..len)
        .map(|_| (0..d).map(|_| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
    for _ in 0..INVERSE_ITERATIONS {
        x = gram.solve(&x);
        normalize(&mut x);
    }
    cands.push(x);
    let mut scored: Vec<(f64, Blocks)> = cands.into_iter().map(|c| (w.ratio(m, &c), c)).filter(|(r, _)| r.is_finite()).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = scored.first().map_or(f64::INFINITY, |s| s.0);
    if let Some(polished) = anchored_polish(w, m, &scored, &mut rng) {
        best = best.min(polished);
    }
    Ok(best)
}

fn anchored_polish(w: &WindowedLinf, m: &DenseMatrix, scored: &[(f64, Blocks)], rng: &mut ChaCha8Rng) -> Option<f64> {
    let tag = w.base.norm_tag();
    let (_, lead) = scored.first()?;
    let (mut bn, mut bi, mut big) = (0, 0, 0.0);
    for (n, v) in lead.iter().enumerate() {
        for (i, z) in v.iter().enumerate() {
            if z.norm() > big {
                (bn, bi, big) = (n, i, z.norm());
            }
        }
    }
    let pivot = lead[bn][bi];
    let anchor: Blocks = lead.iter().map(|v| v.iter().map(|z| z / pivot).collect()).collect();
    let dirs: Vec<Blocks> = scored
        .iter()
        .skip(1)
        .take(POLISH_DIRECTIONS)
        .map(|(_, b)| {
            let c = b[bn][bi];
            b.iter().zip(&anchor).map(|(v, a)| v.iter().zip(a).map(|(x, y)| x - c * y).collect()).collect()
        })
        .collect();
    if dirs.is_empty() {
        return None;
    }
    let offsets = w.stacked(m, &anchor);
    let images: Vec<Blocks> = dirs.iter().map(|b| w.stacked(m, b)).collect();
    let rows = m.dim();
    let maps = (0..offsets.len())
        .map(|n| {
            let cols: Vec<Vec<Scalar>> = images.iter().map(|img| img[n].clone()).collect();
            DenseMatrix::from_columns(&cols, rows)
        })
        .collect();
    let prob = AffineMinimax { offsets, maps, tag };
    let f0 = prob.value(&vec![Scalar::new(0.0, 0.0); dirs.len()]);
    let sol = prob.minimize(4.0 * (1.0 + f0) * (anchor.len() as f64).sqrt(), 1e-12, 2, rng);
    let mut xi = anchor;
    for (a, b) in sol.coeffs.iter().zip(&dirs) {
        for (v, u) in xi.iter_mut().zip(b) {
            for (x, y) in v.iter_mut().zip(u) {
                *x += a * y;
            }
        }
    }
    Some(w.ratio(m, &xi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinfShadEstimate {
    /// Largest minimal solution norm found over the samples.
    pub estimate: f64,
    /// Per-sample minimal solution norms.
    pub per_sample: Vec<f64>,
    /// `1 + ‖L‖`, the envelope for `‖L∞‖`.
    pub linf_norm_bound: f64,
    /// `1 / (1 + ‖L‖)`; the estimate never falls below it.
    pub floor: f64,
}

fn chain_sample(m: &DenseMatrix, u: &[Scalar], steps: usize, tag: NormTag) -> Blocks {
    let mut out: Blocks = Vec::with_capacity(steps);
    let mut v = u.to_vec();
    for _ in 0..steps {
        let n = tag.of(&v);
        out.push(v.iter().map(|z| z / n).collect());
        v = m.mul_coords(&out[out.len() - 1]);
        if tag.of(&v) == 0.0 {
            v = u.to_vec();
        }
    }
    out
}

/// Lower estimate of the shadowableness constant from `z_samples` unit defect
/// sequences on the window: normalized orbit chains first, then seeded random ones.
pub fn shad_estimate_linf(w: &WindowedLinf, z_samples: usize, rng_seed: u64) -> Result<LinfShadEstimate> {
    let m = w.matrix()?;
    let tag = w.base.norm_tag();
    let d = m.dim();
    let norm = w.base.operator_norm();
    let floor = 1.0 / (1.0 + norm);
    if w.n == 0 {
        return Ok(LinfShadEstimate { estimate: 0.0, per_sample: Vec::new(), linf_norm_bound: 1.0 + norm, floor });
    }
    let steps = 2 * w.n;
    let window = OrbitWindow::new(m, steps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut units: Vec<Vec<Scalar>> = (0..d).map(|i| DenseVector::basis(d, i, tag).coords().to_vec()).collect();
    units.extend(dense_eig(m)?.into_iter().map(|p| p.vector.coords().to_vec()));
    let mut per_sample = Vec::with_capacity(z_samples);
    for s in 0..z_samples {
        let z = if s < units.len() {
            chain_sample(m, &units[s], steps, tag)
        } else {
            let mut z = zero_blocks(steps, d);
            for v in z.iter_mut().flatten() {
                *v = Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let n = sup_norm(&z, tag);
            for v in z.iter_mut().flatten() {
                *v /= n;
            }
            z
        };
        let (_, value) = window.min_sup_solution(&z, tag, &mut rng);
        per_sample.push(value);
    }
    let estimate = per_sample.iter().copied().fold(0.0, f64::max);
    Ok(LinfShadEstimate { estimate, per_sample, linf_norm_bound: 1.0 + norm, floor })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub radius: f64,
    pub trial: usize,
    pub pass: bool,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessScan {
    pub rows: Vec<ScanRow>,
    /// Upper shadowableness bound of the unperturbed operator.
    pub base_upper: f64,
    /// Perturbation size below which eigenvalues provably stay off the unit circle.
    pub certified_radius: f64,
    /// Every row with `radius < certified_radius` passed.
    pub all_pass_below_margin: bool,
}

/// Eigenvalue-perturbation radius: `gap / (κ(V) c)` with `V` the eigenvector matrix and
/// `c` converting the operator's norm to the spectral norm.
pub fn bauer_fike_radius(op: &LinOp) -> Result<f64> {
    let m = op.matrix().ok_or_else(|| Error::KindMismatch("dense operator expected".into()))?;
    let d = m.dim();
    let pairs = dense_eig(m)?;
    let gap = pairs.iter().map(|p| (p.value.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
    let cols: Vec<Vec<Scalar>> = pairs.iter().map(|p| p.vector.coords().to_vec()).collect();
    let v = DenseMatrix::from_columns(&cols, d);
    let kappa = match v.inverse() {
        Ok(vi) => v.op_norm(NormTag::L2) * vi.op_norm(NormTag::L2),
        Err(_) => return Ok(0.0),
    };
    let c = match op.norm_tag() {
        NormTag::L2 => 1.0,
        NormTag::L1 | NormTag::Linf => (d as f64).sqrt(),
    };
    Ok(gap / (kappa * c))
}

fn random_perturbation(d: usize, radius: f64, tag: NormTag, rng: &mut ChaCha8Rng) -> Result<DenseMatrix> {
    if radius == 0.0 {
        return Ok(DenseMatrix::zeros(d, d));
    }
    let rows: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let e = DenseMatrix::from_real(&rows)?;
    let n = e.op_norm(tag);
    let target = radius * rng.gen_range(0.05..=1.0);
    Ok(if n > 0.0 { e.scale(Scalar::new(target / n, 0.0)) } else { e })
}

/// Perturb `op` by random matrices of norm at most each radius and re-estimate the
/// shadowableness constant; a trial passes when the estimate stays within twice the
/// original upper bound.
pub fn shadowing_robustness_scan(op: &LinOp, radii: &[f64], trials: usize, rng_seed: u64) -> Result<RobustnessScan> {
    let m = op.matrix().ok_or_else(|| Error::KindMismatch("robustness scan needs a dense operator".into()))?;
    let split = spectral_split(op, DEFAULT_CIRCLE_GAP)?;
    let base_upper = shad_bounds(op, &split)?.upper;
    if !base_upper.is_finite() {
        return Err(Error::NotCertified);
    }
    let certified_radius = bauer_fike_radius(op)?;
    let d = m.dim();
    let tag = op.norm_tag();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rows = Vec::new();
    for &radius in radii {
        if !(radius >= 0.0) {
            return Err(Error::InvalidInput(format!("negative radius {radius}")));
        }
        for trial in 0..trials {
            let e = random_perturbation(d, radius, tag, &mut rng)?;
            let (estimate, pass) = match op.perturbed(&e) {
                Ok(p) => {
                    let est = shad_estimate_linf(&WindowedLinf::new(p, SCAN_WINDOW), SCAN_SAMPLES, rng_seed ^ trial as u64)?.estimate;
                    (est, est.is_finite() && est <= 2.0 * base_upper)
                }
                Err(Error::NotInvertible) => (f64::INFINITY, false),
                Err(e) => return Err(e),
            };
            rows.push(ScanRow { radius, trial, pass, estimate });
        }
    }
    let all_pass_below_margin = rows.iter().filter(|r| r.radius < certified_radius).all(|r| r.pass);
    Ok(RobustnessScan { rows, base_upper, certified_radius, all_pass_below_margin })
}

/// Scan table as CSV rows `radius, trial, pass, estimate`.
pub fn write_scan_csv<W: std::io::Write>(out: W, scan: &RobustnessScan) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["radius", "trial", "pass", "estimate"]).map_err(io)?;
    for r in &scan.rows {
        w.write_record([r.radius.to_string(), r.trial.to_string(), r.pass.to_string(), r.estimate.to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
