//! Expansivity diagnostics: eigenvalue verdict, uniform doubling search,
//! central-window growth and geometric-decay membership.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, DenseMatrix, DenseVector, NormTag, Scalar, Vector};
use crate::operators::LinOp;
use crate::search::coordinate_descent;
use crate::splitting::{RestrictedPowers, Side, Splitting};

/// Growth threshold of the uniform dichotomy.
pub const DOUBLING: f64 = 2.0;
pub const DEFAULT_MIXTURES: usize = 64;
pub const GROWTH_MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenVerdict {
    Expansive,
    NotExpansive,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthPoint {
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcsCertificate {
    pub c: f64,
    pub beta: f64,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansivityReport {
    pub eigen_verdict: EigenVerdict,
    pub uniform_m: Option<usize>,
    pub window_growth: Vec<GrowthPoint>,
    pub ecs_certificate: Option<EcsCertificate>,
}

/// Expansive iff no eigenvalue modulus lies within `gap` of 1.
pub fn expansive_eigen_test(op: &LinOp, gap: f64) -> Result<EigenVerdict> {
    let Some(m) = op.matrix() else {
        return Ok(EigenVerdict::NotApplicable);
    };
    if !op.is_invertible() {
        return Err(Error::NotInvertible);
    }
    let near = eigenvalues(m)?.iter().any(|z| (z.norm() - 1.0).abs() <= gap);
    Ok(if near { EigenVerdict::NotExpansive } else { EigenVerdict::Expansive })
}

/// Basis vectors followed by `mixtures` seeded unit combinations.
pub fn default_samples(d: usize, tag: NormTag, mixtures: usize, rng_seed: u64) -> Result<Vec<Vector>> {
    let mut out: Vec<Vector> = (0..d).map(|i| Vector::Dense(DenseVector::basis(d, i, tag))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    while out.len() < d + mixtures {
        let coords: Vec<Scalar> = (0..d).map(|_| Scalar::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let v = DenseVector::new(coords, tag)?;
        let n = v.norm();
        if n > 1e-3 {
            out.push(Vector::Dense(v.scale(Scalar::new(1.0 / n, 0.0))));
        }
    }
    Ok(out)
}

fn check_unit(samples: &[Vector]) -> Result<()> {
    match samples.iter().position(|v| (v.norm() - 1.0).abs() > 1e-9) {
        Some(i) => Err(Error::InvalidInput(format!("sample {i} is not a unit vector"))),
        None => Ok(()),
    }
}

/// Smallest `m <= m_max` with `‖L^m x‖ >= 2` or `‖L^{-m} x‖ >= 2`, per sample.
pub fn dichotomy_table(op: &LinOp, m_max: usize, samples: &[Vector]) -> Result<Vec<Option<usize>>> {
    check_unit(samples)?;
    let invertible = op.is_invertible();
    samples
        .iter()
        .map(|x| {
            let (mut fwd, mut bwd) = (x.clone(), x.clone());
            for m in 1..=m_max {
                fwd = op.apply(&fwd)?;
                if invertible {
                    bwd = op.apply_inverse(&bwd)?;
                }
                if fwd.norm() >= DOUBLING || (invertible && bwd.norm() >= DOUBLING) {
                    return Ok(Some(m));
                }
            }
            Ok(None)
        })
        .collect()
}

/// Smallest `m` that works for every sample at once.
pub fn uniform_expansivity_search(op: &LinOp, m_max: usize, samples: &[Vector]) -> Result<Option<usize>> {
    check_unit(samples)?;
    for m in 1..=m_max {
        let mut all = true;
        for x in samples {
            let f = op.apply_power(m as i64, x)?.norm();
            let b = if op.is_invertible() { op.apply_power(-(m as i64), x)?.norm() } else { 0.0 };
            if f < DOUBLING && b < DOUBLING {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// Largest eigenbasis condition number for which window norms are evaluated in
/// eigen-coordinates rather than from stored powers.
const EIGEN_FORM_MAX_COND: f64 = 1e8;

/// `max_{|n| <= N} ‖L^n x‖` either from stored powers or, for a well-conditioned
/// eigenbasis `V`, as `‖V Λ^n c‖` with `x = V c`. The second form keeps rounding in
/// `x` from being amplified by the dominant eigenvalues of `L^{±n}`.
enum PowerWindow {
    Powers { powers: Vec<DenseMatrix>, tag: NormTag },
    Eigen { v: DenseMatrix, lambdas: Vec<Scalar>, tag: NormTag },
}

impl PowerWindow {
    fn new(m: &DenseMatrix, inv: &DenseMatrix, n: usize, tag: NormTag) -> Result<Self> {
        let d = m.dim();
        let pairs = crate::linalg::dense_eig(m)?;
        if pairs.len() == d {
            let cols: Vec<Vec<Scalar>> = pairs.iter().map(|p| p.vector.coords().to_vec()).collect();
            let v = DenseMatrix::from_columns(&cols, d);
            if let Ok(v_inv) = v.inverse() {
                if v.op_norm(NormTag::L2) * v_inv.op_norm(NormTag::L2) <= EIGEN_FORM_MAX_COND {
                    return Ok(PowerWindow::Eigen { v, lambdas: pairs.iter().map(|p| p.value).collect(), tag });
                }
            }
        }
        let mut powers = vec![DenseMatrix::identity(d)];
        let (mut f, mut b) = (DenseMatrix::identity(d), DenseMatrix::identity(d));
        for _ in 0..n {
            f = m.mul(&f);
            b = inv.mul(&b);
            powers.push(f.clone());
            powers.push(b.clone());
        }
        Ok(PowerWindow::Powers { powers, tag })
    }

    /// Search coordinates of the start vectors.
    fn coordinates(&self, x: &[Scalar]) -> Vec<Scalar> {
        match self {
            PowerWindow::Powers { .. } => x.to_vec(),
            PowerWindow::Eigen { v, .. } => v.inverse().map(|vi| vi.mul_coords(x)).unwrap_or_else(|_| x.to_vec()),
        }
    }

    /// Unit coordinate vectors are eigenvectors in the eigen form.
    fn is_eigen(&self) -> bool {
        matches!(self, PowerWindow::Eigen { .. })
    }

    /// `max_{|n| <= N} ‖L^n x‖ / ‖x‖` for the vector with search coordinates `c`.
    fn ratio(&self, c: &[Scalar], n: usize) -> f64 {
        match self {
            PowerWindow::Powers { powers, tag } => {
                let nx = tag.of(c);
                if nx == 0.0 {
                    return f64::INFINITY;
                }
                powers[..2 * n + 1].iter().map(|p| tag.of(&p.mul_coords(c))).fold(0.0, f64::max) / nx
            }
            PowerWindow::Eigen { v, lambdas, tag } => {
                let nx = tag.of(&v.mul_coords(c));
                if nx == 0.0 {
                    return f64::INFINITY;
                }
                let mut best: f64 = 0.0;
                for k in -(n as i32)..=(n as i32) {
                    let scaled: Vec<Scalar> = c.iter().zip(lambdas).map(|(a, l)| a * l.powi(k)).collect();
                    best = best.max(tag.of(&v.mul_coords(&scaled)));
                }
                best / nx
            }
        }
    }
}

fn to_real(x: &[Scalar]) -> Vec<f64> {
    x.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn from_real(x: &[f64]) -> Vec<Scalar> {
    x.chunks(2).map(|c| Scalar::new(c[0], c[1])).collect()
}

/// Estimate of `min_{‖x‖=1} max_{|n|<=N} ‖L^n x‖` for each `N`: eigenvectors, basis
/// vectors and seeded random starts, with the best few polished by coordinate descent.
/// Every reported value is attained by an explicit vector.
pub fn central_window_growth(op: &LinOp, n_list: &[usize]) -> Result<Vec<GrowthPoint>> {
    let m = op.matrix().ok_or_else(|| Error::KindMismatch("window growth needs a dense operator".into()))?;
    let inv = op.inverse_matrix().ok_or(Error::NotInvertible)?;
    let d = m.dim();
    if d > GROWTH_MAX_DIM {
        return Err(Error::InvalidInput(format!("window growth supports d <= {GROWTH_MAX_DIM}")));
    }
    let tag = op.norm_tag();
    let n_max = n_list.iter().copied().max().unwrap_or(0);
    let window = PowerWindow::new(m, inv, n_max, tag)?;
    let mut starts: Vec<Vec<Scalar>> = Vec::new();
    if window.is_eigen() {
        starts.extend((0..d).map(|i| DenseVector::basis(d, i, tag).coords().to_vec()));
    } else {
        starts.extend(crate::linalg::dense_eig(m)?.into_iter().map(|p| p.vector.coords().to_vec()));
    }
    for i in 0..d {
        starts.push(window.coordinates(DenseVector::basis(d, i, tag).coords()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
    for _ in 0..8 {
        starts.push((0..d).map(|_| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
    }
    n_list
        .iter()
        .map(|&n| {
            let mut scored: Vec<(f64, Vec<Scalar>)> = starts.iter().map(|x| (window.ratio(x, n), x.clone())).collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut best = scored[0].0;
            for (_, x) in scored.iter().take(2) {
                let scale = NormTag::L2.of(x);
                let x0: Vec<f64> = to_real(x).iter().map(|v| v / scale).collect();
                let polished = coordinate_descent(|y| window.ratio(&from_real(y), n), &x0, 0.5, 4);
                best = best.min(polished.value);
            }
            Ok(GrowthPoint { n, value: best })
        })
        .collect()
}

/// `‖L^n x‖ <= c β^n ‖x‖` for all `0 <= n <= horizon`.
pub fn ecs_membership(op: &LinOp, x: &Vector, c: f64, beta: f64, horizon: usize) -> Result<bool> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidInput(format!("beta must lie in (0, 1), got {beta}")));
    }
    let nx = x.norm();
    let mut y = x.clone();
    let mut bound = c * nx;
    for n in 0..=horizon {
        if n > 0 {
            y = op.apply(&y)?;
            bound *= beta;
        }
        if y.norm() > bound * (1.0 + 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Decay certificate on the stable side of a certified splitting, verified on the
/// stable parts of `samples`.
pub fn ecs_certificate(op: &LinOp, split: &Splitting, horizon: usize, samples: &[Vector]) -> Result<Option<EcsCertificate>> {
    let norms: Vec<f64> = RestrictedPowers::new(op, split, Side::Stable)?.take(horizon + 1).collect();
    let radius = norms.iter().enumerate().skip(1).map(|(k, a)| a.powf(1.0 / k as f64)).fold(f64::INFINITY, f64::min);
    if !(radius < 1.0) {
        return Ok(None);
    }
    let beta = 0.5 * (1.0 + radius.max(0.0));
    let c = norms.iter().enumerate().map(|(k, a)| a / beta.powi(k as i32)).fold(0.0, f64::max).max(1.0);
    for x in samples {
        let xs = split.project(Side::Stable, x)?;
        if !ecs_membership(op, &xs, c * (1.0 + 1e-9), beta, horizon)? {
            return Ok(None);
        }
    }
    Ok(Some(EcsCertificate { c, beta, horizon }))
}

/// Inputs of a full expansivity report.
#[derive(Debug, Clone)]
pub struct ExpansivityQuery {
    pub gap: f64,
    pub m_max: usize,
    pub n_list: Vec<usize>,
    pub horizon: usize,
    pub rng_seed: u64,
}

impl Default for ExpansivityQuery {
    fn default() -> Self {
        Self { gap: 1e-6, m_max: 32, n_list: vec![0, 4, 8, 16], horizon: 50, rng_seed: 7 }
    }
}

pub fn expansivity_report(op: &LinOp, split: Option<&Splitting>, q: &ExpansivityQuery) -> Result<ExpansivityReport> {
    let eigen_verdict = expansive_eigen_test(op, q.gap)?;
    let (samples, window_growth) = match op.dim() {
        Some(d) => {
            let growth = if d <= GROWTH_MAX_DIM { central_window_growth(op, &q.n_list)? } else { Vec::new() };
            (default_samples(d, op.norm_tag(), DEFAULT_MIXTURES, q.rng_seed)?, growth)
        }
        None => {
            let tag = op.norm_tag();
            let units = (-4..=4).map(|k| Vector::Sparse(crate::linalg::SparseBiSeq::unit(k, tag))).collect();
            (units, Vec::new())
        }
    };
    let uniform_m = uniform_expansivity_search(op, q.m_max, &samples)?;
    let ecs_certificate = match split {
        Some(s) => ecs_certificate(op, s, q.horizon, &samples)?,
        None => None,
    };
    Ok(ExpansivityReport { eigen_verdict, uniform_m, window_growth, ecs_certificate })
}

/// Growth table as CSV rows `N, value`.
pub fn write_growth_csv<W: std::io::Write>(out: W, table: &[GrowthPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["N", "value"]).map_err(io)?;
    for p in table {
        w.write_record([p.n.to_string(), p.value.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseBiSeq;
    use crate::operators::lockdown;
    use crate::splitting::{spectral_split, Cut};
    use proptest::prelude::*;

    fn diag(a: f64, b: f64, tag: NormTag) -> LinOp {
        LinOp::from_real_rows(&[vec![a, 0.0], vec![0.0, b]], tag).unwrap()
    }

    fn rotation(tag: NormTag) -> LinOp {
        LinOp::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]], tag).unwrap()
    }

    #[test]
    fn eigen_verdicts() {
        assert_eq!(expansive_eigen_test(&diag(0.5, 2.0, NormTag::L2), 1e-6).unwrap(), EigenVerdict::Expansive);
        assert_eq!(expansive_eigen_test(&rotation(NormTag::L2), 1e-6).unwrap(), EigenVerdict::NotExpansive);
        assert_eq!(expansive_eigen_test(&diag(0.5, 1.0 + 1e-9, NormTag::L2), 1e-6).unwrap(), EigenVerdict::NotExpansive);
        let (l, _, _) = lockdown(0.5, NormTag::L1).unwrap();
        assert_eq!(expansive_eigen_test(&l, 1e-6).unwrap(), EigenVerdict::NotApplicable);
    }

    #[test]
    fn uniform_search_examples() {
        let op = diag(0.5, 2.0, NormTag::Linf);
        let basis: Vec<Vector> = (0..2).map(|i| Vector::Dense(DenseVector::basis(2, i, NormTag::Linf))).collect();
        assert_eq!(uniform_expansivity_search(&op, 8, &basis).unwrap(), Some(1));
        let mixed = default_samples(2, NormTag::Linf, 64, 11).unwrap();
        assert!(uniform_expansivity_search(&op, 8, &mixed).unwrap().unwrap() <= 2);
        let rot = rotation(NormTag::L2);
        let samples = default_samples(2, NormTag::L2, 16, 1).unwrap();
        assert_eq!(uniform_expansivity_search(&rot, 50, &samples).unwrap(), None);
    }

    #[test]
    fn lockdown_dichotomy_table() {
        let (l, _, _) = lockdown(0.5, NormTag::L1).unwrap();
        let samples: Vec<Vector> = (-3..=3).map(|k| Vector::Sparse(SparseBiSeq::unit(k, NormTag::L1))).collect();
        let table = dichotomy_table(&l, 8, &samples).unwrap();
        // e_0 is homoclinic: neither direction ever doubles it
        assert_eq!(table[3], None);
        for (i, m) in table.iter().enumerate().filter(|(i, _)| *i != 3) {
            assert!(matches!(m, Some(m) if *m <= 2), "sample {i}: {m:?}");
        }
    }

    #[test]
    fn growth_examples() {
        let op = diag(0.5, 2.0, NormTag::L2);
        let g = central_window_growth(&op, &[0, 1, 4, 8]).unwrap();
        assert!((g[0].value - 1.0).abs() < 1e-12);
        for p in &g[1..] {
            assert!(p.value >= 2f64.powi(p.n as i32) / 2f64.sqrt() - 1e-9, "{p:?}");
        }
        let rot = central_window_growth(&rotation(NormTag::L2), &[0, 8, 32]).unwrap();
        assert!(rot.iter().all(|p| (p.value - 1.0).abs() < 1e-9), "{rot:?}");
    }

    #[test]
    fn ecs_examples() {
        let op = diag(0.5, 2.0, NormTag::L2);
        let e1 = Vector::Dense(DenseVector::basis(2, 0, NormTag::L2));
        let e2 = Vector::Dense(DenseVector::basis(2, 1, NormTag::L2));
        assert!(ecs_membership(&op, &e1, 1.0, 0.5, 50).unwrap());
        assert!(!ecs_membership(&op, &e2, 1.0, 0.5, 50).unwrap());
        let (l, _, _) = lockdown(0.5, NormTag::L1).unwrap();
        let e0 = Vector::Sparse(SparseBiSeq::unit(0, NormTag::L1));
        assert!(ecs_membership(&l, &e0, 2.0, 0.5, 50).unwrap());
        assert!(ecs_membership(&op, &e1, 1.0, 1.0, 5).is_err());
    }

    #[test]
    fn certificate_on_lockdown() {
        let (l, _, _) = lockdown(0.5, NormTag::L1).unwrap();
        let split = Splitting::coordinate(Cut::AtMost(0), NormTag::L1);
        let samples: Vec<Vector> = (-3..=3).map(|k| Vector::Sparse(SparseBiSeq::unit(k, NormTag::L1))).collect();
        let cert = ecs_certificate(&l, &split, 40, &samples).unwrap().unwrap();
        assert!(cert.beta < 1.0 && cert.c >= 1.0);
    }

    #[test]
    fn report_and_csv() {
        let op = diag(0.5, 2.0, NormTag::L2);
        let split = spectral_split(&op, 1e-6).unwrap();
        let rep = expansivity_report(&op, Some(&split), &ExpansivityQuery::default()).unwrap();
        assert_eq!(rep.eigen_verdict, EigenVerdict::Expansive);
        assert!(rep.uniform_m.is_some() && rep.ecs_certificate.is_some());
        let mut buf = Vec::new();
        write_growth_csv(&mut buf, &rep.window_growth).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("N,value\n0,1"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        // stable and unstable parts of a vector decay forward and backward respectively
        #[test]
        fn hyperbolic_vectors_split_into_decaying_parts(
            a in 0.3f64..0.8, b in 1.3f64..3.0, t in -2.0f64..2.0, x0 in -1.0f64..1.0, x1 in -1.0f64..1.0,
        ) {
            let op = LinOp::from_real_rows(&[vec![a, t], vec![0.0, b]], NormTag::L2).unwrap();
            let split = spectral_split(&op, 1e-6).unwrap();
            let x = Vector::Dense(DenseVector::from_real(&[x0, x1], NormTag::L2).unwrap());
            let xs = split.project(Side::Stable, &x).unwrap();
            let xu = split.project(Side::Unstable, &x).unwrap();
            let inv = op.inverse().unwrap();
            let c = 1.0 + split.proj_s_norm.max(split.proj_u_norm) * 4.0;
            prop_assert!(ecs_membership(&op, &xs, c, (a + 1.0) / 2.0, 12).unwrap());
            prop_assert!(ecs_membership(&inv, &xu, c, (1.0 / b + 1.0) / 2.0, 12).unwrap());
        }
    }
}
