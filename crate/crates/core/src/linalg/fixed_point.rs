//! Picard iteration for contractions of complete metric spaces.

use super::vector::{DenseVector, Scalar};
use crate::error::{Error, Result};

/// Slack allowed on observed step ratios before the declared bound is rejected.
const RATIO_SLACK: f64 = 1e-9;

/// Points that can produce a nearby distinct point. Used once, before iterating,
/// to probe the map's Lipschitz ratio even when the start is already fixed.
pub trait Perturb: Sized {
    fn perturbed(&self) -> Self;
}

impl Perturb for f64 {
    fn perturbed(&self) -> Self {
        self + 1e-3 * self.abs().max(1.0)
    }
}

impl Perturb for DenseVector {
    fn perturbed(&self) -> Self {
        let scale = self.norm().max(1.0) * 1e-3;
        let coords: Vec<Scalar> = self
            .coords()
            .iter()
            .enumerate()
            .map(|(i, z)| z + Scalar::new(scale / (i + 1) as f64, 0.5 * scale / (i + 1) as f64))
            .collect();
        DenseVector::from_parts(coords, self.norm_tag())
    }
}

impl<T: Perturb + Clone> Perturb for Vec<T> {
    fn perturbed(&self) -> Self {
        self.iter().map(Perturb::perturbed).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FixedPoint<P> {
    pub point: P,
    pub iterations: usize,
    /// Distance between the last two iterates, `d(map(p), p)` up to one more step.
    pub last_step: f64,
    /// Step ratios observed along the way (each at most the declared bound).
    pub ratios: Vec<f64>,
}

/// Upper bound on the iterations needed to reach `tol` from an initial step `d0`.
pub fn iteration_bound(d0: f64, lambda: f64, tol: f64) -> usize {
    if d0 <= tol || lambda <= 0.0 {
        return 1;
    }
    let k = ((tol * (1.0 - lambda) / d0).ln() / lambda.ln()).ceil();
    k.max(0.0) as usize + 1
}

/// Iterate `map` from `x0` until consecutive iterates are within `tol`.
///
/// The caller asserts `dist(map(x), map(y)) <= contraction_bound * dist(x, y)`.
/// Every observed step ratio is checked against that bound, including a probe
/// at a perturbed start, and `Error::NonContracting` reports the first violation.
pub fn banach_fixed_point<P, M, D>(
    map: M,
    dist: D,
    x0: P,
    contraction_bound: f64,
    tol: f64,
) -> Result<FixedPoint<P>>
where
    P: Perturb + Clone,
    M: Fn(&P) -> Result<P>,
    D: Fn(&P, &P) -> Result<f64>,
{
    if !(contraction_bound > 0.0 && contraction_bound < 1.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "contraction bound {contraction_bound} must lie in (0,1) and tol {tol} must be positive"
        )));
    }
    let limit = contraction_bound + RATIO_SLACK;

    let probe = x0.perturbed();
    let probe_gap = dist(&probe, &x0)?;
    let mut x = x0;
    let mut fx = map(&x)?;
    if probe_gap > 0.0 {
        let ratio = dist(&map(&probe)?, &fx)? / probe_gap;
        if ratio > limit {
            return Err(Error::NonContracting { observed: ratio, bound: contraction_bound });
        }
    }

    let d0 = dist(&fx, &x)?;
    let budget = iteration_bound(d0, contraction_bound, tol) + 2;
    let mut step = d0;
    let mut ratios = Vec::new();
    let mut iterations = 0;
    while step > tol {
        if iterations >= budget {
            return Err(Error::NonContracting { observed: f64::NAN, bound: contraction_bound });
        }
        let ffx = map(&fx)?;
        let next = dist(&ffx, &fx)?;
        let ratio = next / step;
        if ratio > limit {
            return Err(Error::NonContracting { observed: ratio, bound: contraction_bound });
        }
        ratios.push(ratio);
        x = fx;
        fx = ffx;
        step = next;
        iterations += 1;
    }
    // fx = map(x) and d(fx, x) <= tol; fx is one step closer still
    let _ = x;
    Ok(FixedPoint { point: fx, iterations, last_step: step, ratios })
}
