//! Deterministic minimizers for small convex problems.
//!
//! The workhorse is the central-cut ellipsoid method, which needs only a
//! subgradient and certifies its own optimality gap. Golden-section line
//! searches and coordinate descent polish the result.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{DenseMatrix, NormTag, Scalar};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Certified lower bound on the true minimum (ellipsoid runs only; `-inf` otherwise).
    pub lower_bound: f64,
    pub iterations: usize,
}

/// Minimize a convex function given a value-and-subgradient oracle, starting from
/// the ball of `radius` around `x0` which must contain a minimizer.
pub fn ellipsoid<F>(mut oracle: F, x0: &[f64], radius: f64, max_iter: usize, tol: f64) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        p[i * n + i] = radius * radius;
    }
    let (mut best_x, mut best) = (x.clone(), f64::INFINITY);
    let mut lower = f64::NEG_INFINITY;
    let nf = n as f64;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let (f, g) = oracle(&x);
        if f < best {
            best = f;
            best_x = x.clone();
        }
        let pg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| p[i * n + j] * g[j]).sum()).collect();
        let gpg: f64 = g.iter().zip(&pg).map(|(a, b)| a * b).sum();
        if !(gpg > 0.0) {
            // zero subgradient: x is optimal
            lower = f;
            break;
        }
        let width = gpg.sqrt();
        lower = lower.max(f - width);
        if best - lower <= tol {
            break;
        }
        if n == 1 {
            let step = pg[0] / width;
            x[0] -= 0.5 * step;
            p[0] *= 0.25;
            continue;
        }
        let b: Vec<f64> = pg.iter().map(|v| v / width).collect();
        for i in 0..n {
            x[i] -= b[i] / (nf + 1.0);
        }
        let scale = nf * nf / (nf * nf - 1.0);
        let shrink = 2.0 / (nf + 1.0);
        for i in 0..n {
            for j in 0..n {
                p[i * n + j] = scale * (p[i * n + j] - shrink * b[i] * b[j]);
            }
        }
        for i in 0..n {
            for j in 0..i {
                let s = 0.5 * (p[i * n + j] + p[j * n + i]);
                p[i * n + j] = s;
                p[j * n + i] = s;
            }
        }
    }
    Minimum { x: best_x, value: best, lower_bound: lower, iterations: it }
}

/// Golden-section search for a unimodal function on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Cyclic coordinate descent with golden-section line searches on `[x_i - h, x_i + h]`,
/// halving `h` after every sweep.
pub fn coordinate_descent<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], h0: f64, sweeps: usize) -> Minimum {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut h = h0;
    for _ in 0..sweeps {
        for i in 0..x.len() {
            let centre = x[i];
            let mut probe = x.clone();
            let (t, ft) = golden_section(
                |t| {
                    probe[i] = t;
                    f(&probe)
                },
                centre - h,
                centre + h,
                h * 1e-6,
            );
            if ft < fx {
                x[i] = t;
                fx = ft;
            }
        }
        h *= 0.5;
    }
    Minimum { x, value: fx, lower_bound: f64::NEG_INFINITY, iterations: sweeps }
}

/// `min_a max_n ‖p_n + K_n a‖` over complex coefficient vectors `a`.
#[derive(Debug, Clone)]
pub struct AffineMinimax {
    pub offsets: Vec<Vec<Scalar>>,
    /// Each `K_n` is `rows x m`.
    pub maps: Vec<DenseMatrix>,
    pub tag: NormTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxSolution {
    pub coeffs: Vec<Scalar>,
    pub value: f64,
    pub lower_bound: f64,
}

fn to_complex(x: &[f64]) -> Vec<Scalar> {
    x.chunks(2).map(|c| Scalar::new(c[0], c[1])).collect()
}

impl AffineMinimax {
    pub fn unknowns(&self) -> usize {
        self.maps.first().map_or(0, |k| k.cols())
    }

    fn residual(&self, n: usize, a: &[Scalar]) -> Vec<Scalar> {
        let k = &self.maps[n];
        let mut r = self.offsets[n].clone();
        for (i, ri) in r.iter_mut().enumerate() {
            for (j, aj) in a.iter().enumerate() {
                *ri += k[(i, j)] * aj;
            }
        }
        r
    }

    pub fn value(&self, a: &[Scalar]) -> f64 {
        (0..self.offsets.len()).map(|n| self.tag.of(&self.residual(n, a))).fold(0.0, f64::max)
    }

    /// Value at the real parametrization `x = (re a_0, im a_0, ...)` with a subgradient.
    pub fn value_and_subgradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let a = to_complex(x);
        let mut best = (-1.0, 0usize, Vec::new());
        for n in 0..self.offsets.len() {
            let r = self.residual(n, &a);
            let v = self.tag.of(&r);
            if v > best.0 {
                best = (v, n, r);
            }
        }
        let (v, n, r) = best;
        let dual = dual_vector(&r, self.tag, v);
        let k = &self.maps[n];
        let mut g = vec![0.0; x.len()];
        for j in 0..a.len() {
            let s: Scalar = (0..r.len()).map(|i| dual[i].conj() * k[(i, j)]).sum();
            g[2 * j] = s.re;
            g[2 * j + 1] = -s.im;
        }
        (v.max(0.0), g)
    }

    /// Ellipsoid runs from `restarts` deterministic centres, then a coordinate-descent polish.
    pub fn minimize(&self, radius: f64, tol: f64, restarts: usize, rng: &mut ChaCha8Rng) -> MinimaxSolution {
        let m = self.unknowns();
        if m == 0 {
            let v = self.value(&[]);
            return MinimaxSolution { coeffs: Vec::new(), value: v, lower_bound: v };
        }
        let n = 2 * m;
        let max_iter = 400 * n * n + 2000;
        let mut best: Option<Minimum> = None;
        let mut lower = f64::NEG_INFINITY;
        for r in 0..restarts.max(1) {
            let x0: Vec<f64> = if r == 0 {
                vec![0.0; n]
            } else {
                (0..n).map(|_| rng.gen_range(-0.25..0.25) * radius).collect()
            };
            let run = ellipsoid(|x| self.value_and_subgradient(x), &x0, radius * (1.0 + 0.5 * r as f64), max_iter, tol);
            lower = lower.max(run.lower_bound);
            if best.as_ref().is_none_or(|b| run.value < b.value) {
                best = Some(run);
            }
            if best.as_ref().unwrap().value - lower <= tol {
                break;
            }
        }
        let best = best.unwrap();
        let h = (best.value - lower).abs().max(tol).min(radius);
        let polished = coordinate_descent(|x| self.value(&to_complex(x)), &best.x, h, 6);
        let (x, value) = if polished.value < best.value { (polished.x, polished.value) } else { (best.x, best.value) };
        MinimaxSolution { coeffs: to_complex(&x), value, lower_bound: lower.min(value) }
    }
}

/// A vector `u` with `‖u‖_* = 1` and `Re <u, r> = ‖r‖` for the given norm.
pub(crate) fn dual_vector(r: &[Scalar], tag: NormTag, norm: f64) -> Vec<Scalar> {
    let zero = Scalar::new(0.0, 0.0);
    if norm == 0.0 {
        return vec![zero; r.len()];
    }
    match tag {
        NormTag::L2 => r.iter().map(|z| z / norm).collect(),
        NormTag::L1 => r.iter().map(|z| if z.norm() > 0.0 { z / z.norm() } else { zero }).collect(),
        NormTag::Linf => {
            let i = (0..r.len()).max_by(|a, b| r[*a].norm().partial_cmp(&r[*b].norm()).unwrap()).unwrap();
            let mut u = vec![zero; r.len()];
            u[i] = r[i] / r[i].norm();
            u
        }
    }
}
