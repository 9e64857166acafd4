//! Complex eigen-decomposition for small dense matrices.
//!
//! Householder reduction to upper Hessenberg form, shifted QR iteration to a
//! complex Schur form `A = Q T Q^H`, then eigenvectors of the triangular
//! factor by back substitution.

use super::matrix::DenseMatrix;
use super::vector::{DenseVector, NormTag, Scalar, MAX_DIM};
use crate::error::{Error, Result};

const ZERO: Scalar = Scalar::new(0.0, 0.0);

/// Iterations allowed per eigenvalue before giving up.
const ITERS_PER_EIGENVALUE: usize = 60;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Scalar,
    /// Unit vector (L2) satisfying `A v ~ value v`; carries the norm tag it is asked for.
    pub vector: DenseVector,
}

/// Complex Schur form `A = Q T Q^H`.
#[derive(Debug, Clone)]
pub struct Schur {
    pub q: DenseMatrix,
    pub t: DenseMatrix,
}

pub fn schur(m: &DenseMatrix) -> Result<Schur> {
    let n = m.rows();
    if !m.is_square() || n == 0 || n > MAX_DIM {
        return Err(Error::Dimension(n));
    }
    let mut h = m.clone();
    let mut q = DenseMatrix::identity(n);
    hessenberg(&mut h, &mut q);
    qr_iterate(&mut h, &mut q)?;
    Ok(Schur { q, t: h })
}

fn hessenberg(h: &mut DenseMatrix, q: &mut DenseMatrix) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Scalar> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let xnorm = NormTag::L2.of(&x);
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { Scalar::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = NormTag::L2.of(&v);
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vnorm);
        // H <- (I - 2 v v^H) H on rows k+1..n
        for j in 0..n {
            let s: Scalar = v.iter().enumerate().map(|(a, va)| va.conj() * h[(k + 1 + a, j)]).sum();
            for (a, va) in v.iter().enumerate() {
                h[(k + 1 + a, j)] -= 2.0 * va * s;
            }
        }
        // H <- H (I - 2 v v^H) on columns k+1..n, and accumulate Q likewise
        for target in [&mut *h, &mut *q] {
            for i in 0..n {
                let s: Scalar = v.iter().enumerate().map(|(a, va)| target[(i, k + 1 + a)] * va).sum();
                for (a, va) in v.iter().enumerate() {
                    target[(i, k + 1 + a)] -= 2.0 * s * va.conj();
                }
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = ZERO;
        }
    }
}

fn givens(a: Scalar, b: Scalar) -> (Scalar, Scalar) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        (Scalar::new(1.0, 0.0), ZERO)
    } else {
        (a / r, b / r)
    }
}

fn qr_iterate(h: &mut DenseMatrix, q: &mut DenseMatrix) -> Result<()> {
    let n = h.rows();
    if n == 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if sub <= eps * diag || sub <= 1e-300 * scale {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if its > ITERS_PER_EIGENVALUE || total > ITERS_PER_EIGENVALUE * n {
            return Err(Error::NoConvergence(format!(
                "shifted QR stalled at index {hi} after {total} iterations"
            )));
        }
        let mu = if its.is_multiple_of(11) {
            // exceptional shift breaks cycles
            h[(hi, hi)] + Scalar::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let m1 = (a + d) * 0.5 + disc;
            let m2 = (a + d) * 0.5 - disc;
            if (m1 - d).norm() < (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };
        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = c.conj() * x + s.conj() * y;
                h[(k + 1, j)] = -s * x + c * y;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((k, c, s));
        }
        for &(k, c, s) in &rots {
            let top = (k + 2).min(hi);
            for i in 0..=top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s;
                h[(i, k + 1)] = -x * s.conj() + y * c.conj();
            }
            for i in 0..n {
                let x = q[(i, k)];
                let y = q[(i, k + 1)];
                q[(i, k)] = x * c + y * s;
                q[(i, k + 1)] = -x * s.conj() + y * c.conj();
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    Ok(())
}

/// Eigenvalues with unit (L2) eigenvectors. Vectors are tagged with `tag`.
pub fn dense_eig_tagged(m: &DenseMatrix, tag: NormTag) -> Result<Vec<EigenPair>> {
    let Schur { q, t } = schur(m)?;
    let n = t.rows();
    let tnorm = t.max_abs().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![ZERO; n];
        y[k] = Scalar::new(1.0, 0.0);
        for j in (0..k).rev() {
            let s: Scalar = ((j + 1)..=k).map(|i| t[(j, i)] * y[i]).sum();
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = Scalar::new(small, 0.0);
            }
            y[j] = -s / denom;
        }
        let mut v = q.mul_coords(&y);
        let vn = NormTag::L2.of(&v);
        v.iter_mut().for_each(|z| *z /= vn);
        for z in &v {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NoConvergence("eigenvector back substitution overflowed".into()));
            }
        }
        out.push(EigenPair { value: lambda, vector: DenseVector::from_parts(v, tag) });
    }
    Ok(out)
}

/// Eigenpairs of `m`, vectors tagged L2.
pub fn dense_eig(m: &DenseMatrix) -> Result<Vec<EigenPair>> {
    dense_eig_tagged(m, NormTag::L2)
}

pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<Scalar>> {
    let s = schur(m)?;
    Ok((0..s.t.rows()).map(|i| s.t[(i, i)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<Scalar>) -> Vec<Scalar> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn diagonal_spectrum() {
        let m = DenseMatrix::diagonal_real(&[0.5, 2.0]).unwrap();
        let ev = sorted_re(eigenvalues(&m).unwrap());
        assert!((ev[0].re - 0.5).abs() < 1e-15 && (ev[1].re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_spectrum() {
        let m = DenseMatrix::from_real(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let ev = sorted_re(eigenvalues(&m).unwrap());
        let mut ims: Vec<f64> = ev.iter().map(|z| z.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
        assert!(ev.iter().all(|z| z.re.abs() < 1e-12));
    }

    #[test]
    fn companion_of_golden_polynomial() {
        // z^2 - z - 1: roots from the quadratic formula
        let m = DenseMatrix::from_real(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let ev = sorted_re(eigenvalues(&m).unwrap());
        assert!((ev[0].re - (1.0 - phi)).abs() < 1e-9 * phi);
        assert!((ev[1].re - phi).abs() < 1e-9 * phi);
    }

    #[test]
    fn residuals_of_nonnormal_matrix() {
        let m = DenseMatrix::from_real(&[
            vec![1.0, 2.0, 3.0],
            vec![0.5, -1.0, 4.0],
            vec![0.0, 0.25, 2.0],
        ])
        .unwrap();
        let norm = m.op_norm(NormTag::L2);
        for p in dense_eig(&m).unwrap() {
            let r = m.apply(&p.vector).unwrap().sub(&p.vector.scale(p.value)).unwrap();
            assert!(r.norm() <= 1e-8 * norm);
        }
    }

    #[test]
    fn repeated_eigenvalue() {
        let m = DenseMatrix::diagonal_real(&[0.5, 0.5, 0.5]).unwrap();
        let pairs = dense_eig(&m).unwrap();
        assert_eq!(pairs.len(), 3);
        for p in pairs {
            assert!((p.value.re - 0.5).abs() < 1e-15);
        }
    }
}
