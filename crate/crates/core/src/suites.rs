//! Randomized cross-checks between independent diagnostics: eigenvalue hyperbolicity
//! against shadowing bounds, expansivity and window growth; direct sums; the interval
//! calculus for shadowableness constants; summability for stable operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansivity::{central_window_growth, expansive_eigen_test, EigenVerdict};
use crate::linalg::{eigenvalues, DenseMatrix, NormTag, Scalar};
use crate::linf::{shad_estimate_linf, WindowedLinf};
use crate::operators::LinOp;
use crate::shadowing::{shad_bounds, shad_calculus, ShadInterval, ShadRule};
use crate::splitting::{spectral_split, DEFAULT_CIRCLE_GAP};
use crate::stability::{summability_shadow_check, summability_verify};

pub const MAX_SUITE_SIZE: usize = 10_000;
pub const GROWTH_WINDOWS: [usize; 3] = [16, 32, 64];
pub const GROWTH_FACTOR: f64 = 1.5;
pub const EIGEN_MARGIN: f64 = 0.05;
const KEPT_FAILURES: usize = 5;

fn random_real(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DenseMatrix {
    let rows: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-scale..scale)).collect()).collect();
    DenseMatrix::from_real(&rows).expect("finite entries")
}

fn margin(m: &DenseMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| (z.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min))
}

/// Random real matrix whose eigenvalue moduli all differ from 1 by at least `margin`.
pub fn random_hyperbolic(rng: &mut ChaCha8Rng, d: usize, min_margin: f64) -> Result<DenseMatrix> {
    for _ in 0..10_000 {
        let m = random_real(rng, d, 1.5);
        if margin(&m)? >= min_margin && m.inverse().is_ok() {
            return Ok(m);
        }
    }
    Err(Error::NoConvergence("rejection sampling for hyperbolic matrices".into()))
}

fn random_modulus(rng: &mut ChaCha8Rng, min_margin: f64) -> f64 {
    if rng.gen_bool(0.5) {
        rng.gen_range(0.2..1.0 - min_margin)
    } else {
        rng.gen_range(1.0 + min_margin..3.0)
    }
}

/// `V B V^{-1}` with `B` a rotation block on the unit circle followed by real eigenvalues
/// at least `margin` away from it, and `V` a random near-identity change of basis.
pub fn random_circle_control(rng: &mut ChaCha8Rng, d: usize, min_margin: f64) -> Result<DenseMatrix> {
    if d < 2 {
        return Err(Error::Dimension(d));
    }
    let theta = rng.gen_range(0.3..2.8f64);
    let mut rows = vec![vec![0.0; d]; d];
    rows[0][0] = theta.cos();
    rows[0][1] = -theta.sin();
    rows[1][0] = theta.sin();
    rows[1][1] = theta.cos();
    for (i, row) in rows.iter_mut().enumerate().skip(2) {
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        row[i] = s * random_modulus(rng, min_margin);
    }
    let b = DenseMatrix::from_real(&rows)?;
    let v = DenseMatrix::identity(d).add(&random_real(rng, d, 0.3));
    Ok(v.mul(&b).mul(&v.inverse()?))
}

/// Random real matrix rescaled to a spectral radius drawn from `[0.1, r_max]`.
pub fn random_stable(rng: &mut ChaCha8Rng, d: usize, r_max: f64) -> Result<DenseMatrix> {
    loop {
        let m = random_real(rng, d, 1.0);
        let r = eigenvalues(&m)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if r > 1e-3 && m.inverse().is_ok() {
            let target = rng.gen_range(0.1..r_max);
            return Ok(m.scale(Scalar::new(target / r, 0.0)));
        }
    }
}

pub fn block_diagonal(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (p, q) = (a.dim(), b.dim());
    let zero = Scalar::new(0.0, 0.0);
    let rows = (0..p + q)
        .map(|i| {
            (0..p + q)
                .map(|j| match (i < p, j < p) {
                    (true, true) => a[(i, j)],
                    (false, false) => b[(i - p, j - p)],
                    _ => zero,
                })
                .collect()
        })
        .collect();
    DenseMatrix::new(rows).expect("square blocks")
}

/// The four finite-dimensional characterizations of hyperbolicity for one operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EquivalenceCase {
    pub eigen_hyperbolic: bool,
    pub shad_finite: bool,
    pub expansive: bool,
    pub growth_unbounded: bool,
}

impl EquivalenceCase {
    pub fn agrees(&self) -> bool {
        let v = self.eigen_hyperbolic;
        self.shad_finite == v && self.expansive == v && self.growth_unbounded == v
    }
}

pub fn equivalence_case(op: &LinOp) -> Result<EquivalenceCase> {
    let m = op.matrix().ok_or_else(|| Error::KindMismatch("dense operator expected".into()))?;
    let eigen_hyperbolic = margin(m)? > DEFAULT_CIRCLE_GAP;
    let shad_finite = match spectral_split(op, DEFAULT_CIRCLE_GAP) {
        Ok(split) => shad_bounds(op, &split)?.upper.is_finite(),
        Err(Error::CircleEigenvalue(_)) => false,
        Err(e) => return Err(e),
    };
    let expansive = expansive_eigen_test(op, DEFAULT_CIRCLE_GAP)? == EigenVerdict::Expansive;
    let growth = central_window_growth(op, &GROWTH_WINDOWS)?;
    let growth_unbounded = growth.windows(2).all(|w| w[1].value >= GROWTH_FACTOR * w[0].value);
    Ok(EquivalenceCase { eigen_hyperbolic, shad_finite, expansive, growth_unbounded })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    /// First few failure descriptions.
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    fn new(name: &'static str) -> Self {
        Self { name, passed: 0, failed: 0, failures: Vec::new() }
    }

    fn record(&mut self, trial: usize, outcome: Result<Option<String>>) {
        let problem = match outcome {
            Ok(None) => {
                self.passed += 1;
                return;
            }
            Ok(Some(msg)) => msg,
            Err(e) => e.to_string(),
        };
        self.failed += 1;
        if self.failures.len() < KEPT_FAILURES {
            self.failures.push(format!("trial {trial}: {problem}"));
        }
    }

    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub size: usize,
    pub suites: Vec<SuiteOutcome>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.suites.iter().all(SuiteOutcome::all_pass)
    }
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

/// Eigenvalue hyperbolicity, finite bounds, expansivity and window growth agree;
/// odd trials use an operator with a planted unimodular pair.
pub fn equivalence_suite(seed: u64, size: usize, d: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("finite_dim_equivalence");
    let mut rng = rng_for(seed, 1);
    for t in 0..size {
        let res = (|| {
            let m = if t % 2 == 0 {
                random_hyperbolic(&mut rng, d, EIGEN_MARGIN)?
            } else {
                random_circle_control(&mut rng, d, EIGEN_MARGIN)?
            };
            let c = equivalence_case(&LinOp::dense(m, NormTag::L2)?)?;
            Ok((!c.agrees()).then(|| format!("{c:?}")))
        })();
        out.record(t, res);
    }
    out
}

const DIRECT_SUM_WINDOW: usize = 4;
const DIRECT_SUM_SAMPLES: usize = 4;

/// Windowed estimate for a block-diagonal operator against the larger block estimate,
/// within a factor `2 max(‖P_S‖, ‖P_U‖)`.
pub fn direct_sum_suite(seed: u64, size: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("direct_sum");
    let mut rng = rng_for(seed, 2);
    for t in 0..size {
        let res = (|| {
            let a = random_hyperbolic(&mut rng, 2, 0.2)?;
            let b = random_hyperbolic(&mut rng, 2, 0.2)?;
            let whole = LinOp::dense(block_diagonal(&a, &b), NormTag::L2)?;
            let split = spectral_split(&whole, DEFAULT_CIRCLE_GAP)?;
            let factor = 2.0 * split.proj_s_norm.max(split.proj_u_norm);
            let est = |op: LinOp| -> Result<f64> {
                Ok(shad_estimate_linf(&WindowedLinf::new(op, DIRECT_SUM_WINDOW), DIRECT_SUM_SAMPLES, t as u64)?.estimate)
            };
            let blocks = est(LinOp::dense(a, NormTag::L2)?)?.max(est(LinOp::dense(b, NormTag::L2)?)?);
            let e = est(whole)?;
            Ok((e > factor * blocks || e < blocks / factor).then(|| format!("whole {e}, blocks {blocks}, factor {factor}")))
        })();
        out.record(t, res);
    }
    out
}

fn intersects(a: ShadInterval, b: ShadInterval) -> bool {
    let slack = 1e-9 * (1.0 + a.hi.max(b.hi));
    a.lo <= b.hi + slack && b.lo <= a.hi + slack
}

/// Bounds computed directly for `H D H^{-1}`, `D_1 × D_2` and `D^{-1}` must be
/// compatible with the intervals propagated from those of the pieces.
pub fn interval_calculus_suite(seed: u64, size: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("interval_calculus");
    let mut rng = rng_for(seed, 3);
    let tag = NormTag::L2;
    for t in 0..size {
        let res = (|| {
            let mut diag = || -> Result<LinOp> {
                let v: Vec<f64> = (0..2).map(|_| random_modulus(&mut rng, 0.2)).collect();
                LinOp::dense(DenseMatrix::diagonal_real(&v)?, tag)
            };
            let (d1, d2) = (diag()?, diag()?);
            let bounds = |op: &LinOp| -> Result<ShadInterval> {
                Ok(shad_bounds(op, &spectral_split(op, DEFAULT_CIRCLE_GAP)?)?.into())
            };
            let (i1, i2) = (bounds(&d1)?, bounds(&d2)?);
            let h = DenseMatrix::identity(2).add(&random_real(&mut rng, 2, 0.4));
            let h_inv = h.inverse()?;
            let conj = LinOp::dense(h.mul(d1.matrix().unwrap()).mul(&h_inv), tag)?;
            let rule = ShadRule::Conjugacy { h_norm: h.op_norm(tag), h_inv_norm: h_inv.op_norm(tag) };
            if !intersects(bounds(&conj)?, shad_calculus(rule, &[i1])?) {
                return Ok(Some("conjugacy rule".to_string()));
            }
            let prod = LinOp::dense(block_diagonal(d1.matrix().unwrap(), d2.matrix().unwrap()), tag)?;
            if !intersects(bounds(&prod)?, shad_calculus(ShadRule::Product, &[i1, i2])?) {
                return Ok(Some("product rule".to_string()));
            }
            let inv = d1.inverse()?;
            let rule = ShadRule::Inverse { op_norm: d1.operator_norm(), inv_norm: inv.operator_norm() };
            if !intersects(bounds(&inv)?, shad_calculus(rule, &[i1])?) {
                return Ok(Some("inverse rule".to_string()));
            }
            Ok(None)
        })();
        out.record(t, res);
    }
    out
}

pub const SUMMABILITY_SEQUENCES: usize = 20;
pub const SUMMABILITY_SEQ_LEN: usize = 80;
pub const SUMMABILITY_DELTA: f64 = 1e-3;

/// `‖Σ L^k x_k‖ ≤ γ sup ‖x_k‖` and `γ` accepted as a shadowing constant.
pub fn summability_suite(seed: u64, size: usize, d: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("summability");
    let mut rng = rng_for(seed, 4);
    for t in 0..size {
        let res = (|| {
            let op = LinOp::dense(random_stable(&mut rng, d, 0.9)?, NormTag::L2)?;
            let rep = summability_verify(&op, SUMMABILITY_SEQUENCES, SUMMABILITY_SEQ_LEN, t as u64)?;
            if rep.violations > 0 {
                return Ok(Some(format!("{} violations, gamma {}", rep.violations, rep.gamma)));
            }
            let (err, ok) = summability_shadow_check(&op, rep.gamma, SUMMABILITY_DELTA, SUMMABILITY_SEQ_LEN, t as u64)?;
            Ok((!ok).then(|| format!("shadow error {err} above gamma delta {}", rep.gamma * SUMMABILITY_DELTA)))
        })();
        out.record(t, res);
    }
    out
}

/// All suites with `size` trials each.
pub fn run_suites(seed: u64, size: usize) -> Result<SuiteReport> {
    if size > MAX_SUITE_SIZE {
        return Err(Error::InvalidInput(format!("suite size {size} exceeds {MAX_SUITE_SIZE}")));
    }
    Ok(SuiteReport {
        seed,
        size,
        suites: vec![
            equivalence_suite(seed, size, 4),
            direct_sum_suite(seed, size),
            interval_calculus_suite(seed, size),
            summability_suite(seed, size, 4),
        ],
    })
}
