//! Homoclinic points of invertible operators, the subspace `Ĥ = ∪ L^n(U) ∩ L^{-m}(S)`
//! for coordinate splittings, and sums of closed chains.

use crate::error::{Error, Result};
use crate::linalg::{DenseVector, NormTag, Scalar, Vector};
use crate::operators::{IndexRange, LinOp};
use crate::splitting::{classify, HyperbolicityClass, Restrictor, Side, Splitting};

/// Largest `|index|` and power tried by the searches below.
pub const SEARCH_BOUND: i64 = 64;
pub const DEFAULT_HORIZON: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-9;
const CHAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HomoclinicEvidence {
    pub vector: Vector,
    pub horizon: usize,
    /// `‖L^n x‖` for `n = 0..=horizon`.
    pub forward_decay: Vec<f64>,
    /// `‖L^{-n} x‖` for `n = 0..=horizon`.
    pub backward_decay: Vec<f64>,
    pub verdict: bool,
}

/// Final value at most `tol`, and no new maximum inside the last quarter.
fn decays(a: &[f64], tol: f64) -> bool {
    let h = a.len() - 1;
    if a[h] > tol {
        return false;
    }
    let q = h - h / 4;
    let mut top = a[q];
    for v in &a[q + 1..] {
        if *v > top * (1.0 + 1e-12) {
            return false;
        }
        top = top.max(*v);
    }
    true
}

fn orbit_norms(op: &LinOp, x: &Vector, horizon: usize, backward: bool) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(horizon + 1);
    let mut y = x.clone();
    out.push(y.norm());
    for _ in 0..horizon {
        y = if backward { op.apply_inverse(&y)? } else { op.apply(&y)? };
        out.push(y.norm());
    }
    Ok(out)
}

/// Finite-horizon test of `L^n x → 0` as `n → ±∞`.
pub fn is_homoclinic(op: &LinOp, x: &Vector, horizon: usize, tol: f64) -> Result<HomoclinicEvidence> {
    if !op.is_invertible() {
        return Err(Error::NotInvertible);
    }
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let forward_decay = orbit_norms(op, x, horizon, false)?;
    let backward_decay = orbit_norms(op, x, horizon, true)?;
    let verdict = decays(&forward_decay, tol) && decays(&backward_decay, tol);
    Ok(HomoclinicEvidence { vector: x.clone(), horizon, forward_decay, backward_decay, verdict })
}

fn ranges(split: &Splitting) -> Result<(IndexRange, IndexRange)> {
    let cut = split.cut().ok_or_else(|| Error::KindMismatch("needs a coordinate splitting".into()))?;
    Ok((cut.stable_range(), cut.unstable_range()))
}

fn supported_in(v: &Vector, range: &IndexRange) -> bool {
    match v {
        Vector::Sparse(s) => s.iter().all(|(k, _)| range.contains(k)),
        Vector::Dense(d) => d.coords().iter().enumerate().all(|(i, z)| range.contains(i as i64) || z.norm() == 0.0),
    }
}

/// Exact membership of `x` in `L^n(U) ∩ L^{-m}(S)`.
pub fn hhat_member(op: &LinOp, split: &Splitting, x: &Vector, n: usize, m: usize) -> Result<bool> {
    let (s, u) = ranges(split)?;
    let back = op.apply_power(-(n as i64), x)?;
    let fwd = op.apply_power(m as i64, x)?;
    Ok(supported_in(&back, &u) && supported_in(&fwd, &s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HhatApproximation {
    /// `L^n P_U L^{-n} P_S x`.
    pub stable_approx: Vector,
    /// `L^{-n} P_S L^n P_U x`.
    pub unstable_approx: Vector,
    pub stable_error: f64,
    pub unstable_error: f64,
    /// Membership of the two approximants in `Ĥ`, when the splitting is coordinate.
    pub members: Option<(bool, bool)>,
}

/// Elements of `Ĥ` approximating the two components of a homoclinic point.
pub fn hhat_approximate(op: &LinOp, split: &Splitting, x: &Vector, n: usize) -> Result<HhatApproximation> {
    if !is_homoclinic(op, x, DEFAULT_HORIZON, DEFAULT_TOL)?.verdict {
        return Err(Error::NotHomoclinic);
    }
    let n_i = n as i64;
    let ps = split.project(Side::Stable, x)?;
    let pu = split.project(Side::Unstable, x)?;
    let stable_approx = op.apply_power(n_i, &split.project(Side::Unstable, &op.apply_power(-n_i, &ps)?)?)?;
    let unstable_approx = op.apply_power(-n_i, &split.project(Side::Stable, &op.apply_power(n_i, &pu)?)?)?;
    let members = if split.is_coordinate() {
        Some((hhat_member(op, split, &stable_approx, n, 0)?, hhat_member(op, split, &unstable_approx, 0, n)?))
    } else {
        None
    };
    Ok(HhatApproximation {
        stable_error: ps.distance(&stable_approx)?,
        unstable_error: pu.distance(&unstable_approx)?,
        stable_approx,
        unstable_approx,
        members,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomoclinicVerdict {
    pub class: HyperbolicityClass,
    pub hyperbolic: bool,
    /// Nonzero element of `L(U) ∩ S`.
    pub witness: Option<Vector>,
    pub witness_evidence: Option<HomoclinicEvidence>,
    /// Basis vectors of `U` with `|index| ≤ searched` were examined.
    pub searched: i64,
}

/// Looks for a nonzero vector in `L(U) ∩ S` among images of basis vectors of `U`;
/// such a vector is homoclinic, so its absence is what hyperbolicity requires.
pub fn hyperbolic_iff_trivial_h(op: &LinOp, split: &Splitting, horizon: usize) -> Result<HomoclinicVerdict> {
    let rep = classify(op, split, horizon)?;
    if !rep.is_certified() {
        return Err(Error::NotCertified);
    }
    let tag = op.norm_tag();
    let mut witness = None;
    let mut searched = 0;
    match op.dim() {
        None => {
            let (s, u) = ranges(split)?;
            for j in -SEARCH_BOUND..=SEARCH_BOUND {
                if !u.contains(j) {
                    continue;
                }
                searched = searched.max(j.abs());
                let y = op.apply(&Vector::Sparse(crate::linalg::SparseBiSeq::unit(j, tag)))?;
                if !y.is_zero() && supported_in(&y, &s) {
                    witness = Some(y.scale(Scalar::new(1.0 / y.norm(), 0.0)));
                    break;
                }
            }
        }
        Some(d) => {
            let (_, pu) = split.projections(d)?;
            let m = op.matrix().expect("dense operator");
            searched = d as i64;
            for b in Restrictor::new(&pu, tag).spanning(d) {
                let y = m.mul_coords(&b);
                let leak = tag.of(&pu.mul_coords(&y));
                let size = tag.of(&y);
                if size > 0.0 && leak <= 1e-12 * size {
                    let unit = y.iter().map(|z| z / size).collect();
                    witness = Some(Vector::Dense(DenseVector::new(unit, tag)?));
                    break;
                }
            }
        }
    }
    let witness_evidence = match &witness {
        Some(w) => Some(is_homoclinic(op, w, horizon, DEFAULT_TOL)?),
        None => None,
    };
    Ok(HomoclinicVerdict { class: rep.class, hyperbolic: witness.is_none(), witness, witness_evidence, searched })
}

fn chain_defects(op: &LinOp, chain: &[Vector]) -> Result<Vec<f64>> {
    chain.windows(2).map(|w| op.apply(&w[0])?.distance(&w[1])).collect()
}

fn check_chain(op: &LinOp, chain: &[Vector], bound: f64) -> Result<()> {
    if chain.len() < 2 {
        return Err(Error::InvalidInput("a chain needs at least two points".into()));
    }
    for (index, defect) in chain_defects(op, chain)?.into_iter().enumerate() {
        if defect > bound + CHAIN_SLACK * (1.0 + chain[index].norm()) {
            return Err(Error::NotAChain { index, defect, bound });
        }
    }
    let closing = chain[0].distance(&chain[chain.len() - 1])?;
    if closing > CHAIN_SLACK * (1.0 + chain[0].norm()) {
        return Err(Error::InvalidInput(format!("chain does not return to its start (gap {closing:e})")));
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Repeats a closed chain with `p` steps until it has `steps` steps.
fn repeat_chain(chain: &[Vector], steps: usize) -> Vec<Vector> {
    let p = chain.len() - 1;
    (0..=steps).map(|i| chain[i % p].clone()).collect()
}

/// Sum of closed `δ/2`-chains through `x` and `y`: both are repeated to a common
/// length and added pointwise, giving a closed `δ`-chain through `x + y`.
pub fn chain_combine(chain_x: &[Vector], chain_y: &[Vector], op: &LinOp, delta: f64) -> Result<Vec<Vector>> {
    check_chain(op, chain_x, delta / 2.0)?;
    check_chain(op, chain_y, delta / 2.0)?;
    let (p, q) = (chain_x.len() - 1, chain_y.len() - 1);
    let steps = p / gcd(p, q) * q;
    let out: Vec<Vector> = repeat_chain(chain_x, steps)
        .iter()
        .zip(repeat_chain(chain_y, steps).iter())
        .map(|(a, b)| a.add(b))
        .collect::<Result<_>>()?;
    check_chain(op, &out, delta)?;
    Ok(out)
}

/// `λ` times a closed `δ/|λ|`-chain.
pub fn chain_scale(chain: &[Vector], lambda: Scalar, op: &LinOp, delta: f64) -> Result<Vec<Vector>> {
    if lambda.norm() == 0.0 {
        return Ok(vec![chain.first().ok_or_else(|| Error::InvalidInput("empty chain".into()))?.zero_like(); chain.len()]);
    }
    check_chain(op, chain, delta / lambda.norm())?;
    let out: Vec<Vector> = chain.iter().map(|v| v.scale(lambda)).collect();
    check_chain(op, &out, delta)?;
    Ok(out)
}

/// CSV rows `n, forward, backward`.
pub fn write_decay_csv<W: std::io::Write>(out: W, ev: &HomoclinicEvidence) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["n", "forward", "backward"]).map_err(io)?;
    for (n, (f, b)) in ev.forward_decay.iter().zip(&ev.backward_decay).enumerate() {
        w.serialize((n, f, b)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// `Σ_{k=-depth}^{0} ratio^{-k} e_k`, a finitely supported homoclinic point of lockdown-type shifts.
pub fn geometric_tail(depth: i64, ratio: f64, tag: NormTag) -> Result<Vector> {
    let s = crate::linalg::SparseBiSeq::from_real((-depth..=0).map(|k| (k, ratio.powi((-k) as i32))), tag)?;
    Ok(Vector::Sparse(s))
}
