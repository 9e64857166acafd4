//! Finite orbit windows `e_0, ..., e_N` of a dense operator and the defect map
//! `(Ce)_n = e_{n+1} - L e_n`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, NormTag, Scalar};
use crate::search::AffineMinimax;

pub(crate) type Blocks = Vec<Vec<Scalar>>;

/// Block-tridiagonal system with constant blocks, factored once (block Thomas).
#[derive(Debug, Clone)]
pub(crate) struct BlockTridiag {
    sup: DenseMatrix,
    pivots_inv: Vec<DenseMatrix>,
    // multipliers[n] = sub * pivots_inv[n - 1]
    multipliers: Vec<DenseMatrix>,
}

impl BlockTridiag {
    pub(crate) fn new(diag: &DenseMatrix, sup: &DenseMatrix, sub: &DenseMatrix, blocks: usize) -> Result<Self> {
        let mut pivots_inv = Vec::with_capacity(blocks);
        let mut multipliers = Vec::with_capacity(blocks);
        multipliers.push(DenseMatrix::zeros(diag.rows(), diag.cols()));
        pivots_inv.push(diag.inverse()?);
        for n in 1..blocks {
            let m = sub.mul(&pivots_inv[n - 1]);
            let pivot = diag.sub(&m.mul(sup));
            pivots_inv.push(pivot.inverse()?);
            multipliers.push(m);
        }
        Ok(Self { sup: sup.clone(), pivots_inv, multipliers })
    }

    pub(crate) fn solve(&self, rhs: &[Vec<Scalar>]) -> Blocks {
        let nb = self.pivots_inv.len();
        let mut y: Blocks = Vec::with_capacity(nb);
        for n in 0..nb {
            let mut v = rhs[n].clone();
            if n > 0 {
                let c = self.multipliers[n].mul_coords(&y[n - 1]);
                sub_assign(&mut v, &c);
            }
            y.push(v);
        }
        let mut x: Blocks = vec![Vec::new(); nb];
        for n in (0..nb).rev() {
            let mut v = y[n].clone();
            if n + 1 < nb {
                let c = self.sup.mul_coords(&x[n + 1]);
                sub_assign(&mut v, &c);
            }
            x[n] = self.pivots_inv[n].mul_coords(&v);
        }
        x
    }
}

pub(crate) fn sub_assign(a: &mut [Scalar], b: &[Scalar]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x -= y;
    }
}

pub(crate) fn inner(a: &Blocks, b: &Blocks) -> Scalar {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn sup_norm(e: &Blocks, tag: NormTag) -> f64 {
    e.iter().map(|v| tag.of(v)).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub(crate) struct OrbitWindow {
    l: DenseMatrix,
    l_adj: DenseMatrix,
    steps: usize,
    gram: BlockTridiag,
}

impl OrbitWindow {
    pub(crate) fn new(l: &DenseMatrix, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidInput("window needs at least one step".into()));
        }
        let d = l.dim();
        let l_adj = l.adjoint();
        let diag = DenseMatrix::identity(d).add(&l.mul(&l_adj));
        let sup = l_adj.scale(Scalar::new(-1.0, 0.0));
        let sub = l.scale(Scalar::new(-1.0, 0.0));
        let gram = BlockTridiag::new(&diag, &sup, &sub, steps)?;
        Ok(Self { l: l.clone(), l_adj, steps, gram })
    }

    pub(crate) fn dim(&self) -> usize {
        self.l.dim()
    }

    pub(crate) fn defect(&self, e: &Blocks) -> Blocks {
        (0..self.steps)
            .map(|n| {
                let mut v = e[n + 1].clone();
                sub_assign(&mut v, &self.l.mul_coords(&e[n]));
                v
            })
            .collect()
    }

    fn adjoint_apply(&self, w: &Blocks) -> Blocks {
        let zero = vec![Scalar::new(0.0, 0.0); self.dim()];
        (0..=self.steps)
            .map(|j| {
                let mut v = if j > 0 { w[j - 1].clone() } else { zero.clone() };
                if j < self.steps {
                    sub_assign(&mut v, &self.l_adj.mul_coords(&w[j]));
                }
                v
            })
            .collect()
    }

    /// Least-squares (minimum 2-norm) solution of `Ce = z`.
    pub(crate) fn particular(&self, z: &Blocks) -> Blocks {
        self.adjoint_apply(&self.gram.solve(z))
    }

    /// Orthonormal basis (window 2-norm) of exact orbit windows.
    pub(crate) fn kernel_basis(&self, rng: &mut ChaCha8Rng) -> Vec<Blocks> {
        let d = self.dim();
        let mut basis: Vec<Blocks> = Vec::new();
        for _ in 0..(3 * d + 4) {
            if basis.len() == d {
                break;
            }
            let r: Blocks = (0..=self.steps)
                .map(|_| (0..d).map(|_| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
                .collect();
            let p = self.particular(&self.defect(&r));
            let mut k: Blocks = r.iter().zip(&p).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
            let before = inner(&k, &k).re.sqrt();
            for _ in 0..2 {
                for b in &basis {
                    let c = inner(b, &k);
                    for (kv, bv) in k.iter_mut().zip(b) {
                        for (x, y) in kv.iter_mut().zip(bv) {
                            *x -= c * y;
                        }
                    }
                }
            }
            let nrm = inner(&k, &k).re.sqrt();
            if nrm > 1e-8 * before.max(1e-300) {
                for v in k.iter_mut().flatten() {
                    *v /= nrm;
                }
                basis.push(k);
            }
        }
        basis
    }

    /// Solution of `Ce = z` minimizing `max_n ‖e_n‖` in `tag`, up to the search tolerance.
    pub(crate) fn min_sup_solution(&self, z: &Blocks, tag: NormTag, rng: &mut ChaCha8Rng) -> (Blocks, f64) {
        let p = self.particular(z);
        let basis = self.kernel_basis(rng);
        let d = self.dim();
        let m = basis.len();
        let maps: Vec<DenseMatrix> = (0..=self.steps)
            .map(|n| {
                let cols: Vec<Vec<Scalar>> = basis.iter().map(|b| b[n].clone()).collect();
                DenseMatrix::from_columns(&cols, d)
            })
            .collect();
        let prob = AffineMinimax { offsets: p.clone(), maps, tag };
        let f0 = prob.value(&vec![Scalar::new(0.0, 0.0); m]);
        if f0 == 0.0 {
            return (p, 0.0);
        }
        let radius = 2.0 * f0 * (((self.steps + 1) * d) as f64).sqrt();
        let sol = prob.minimize(radius, 1e-10 * f0, 3, rng);
        let mut e = p;
        for (j, b) in basis.iter().enumerate() {
            for (ev, bv) in e.iter_mut().zip(b) {
                for (x, y) in ev.iter_mut().zip(bv) {
                    *x += sol.coeffs[j] * y;
                }
            }
        }
        let value = sup_norm(&e, tag);
        (e, value)
    }
}
