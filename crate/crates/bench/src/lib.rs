//! Shared fixtures for the criterion benches.

use lindyn_core::operators::lockdown;
use lindyn_core::shadowing::{generate_pseudo_orbit, PseudoOrbit, Window};
use lindyn_core::splitting::{Cut, Splitting};
use lindyn_core::suites::random_hyperbolic;
use lindyn_core::{DenseMatrix, DenseVector, LinOp, NormTag, SparseBiSeq, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn diag_half_two() -> LinOp {
    LinOp::dense(DenseMatrix::diagonal_real(&[0.5, 2.0]).expect("valid diagonal"), NormTag::Linf).expect("invertible")
}

pub fn coordinate_split(tag: NormTag) -> Splitting {
    Splitting::coordinate(Cut::AtMost(0), tag)
}

pub fn lockdown_op() -> LinOp {
    lockdown(0.5, NormTag::L1).expect("valid weights").0
}

pub fn rotation() -> LinOp {
    LinOp::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]], NormTag::L2).expect("invertible")
}

/// Seeded random `d × d` matrix with eigenvalue moduli at least 0.05 away from 1.
pub fn hyperbolic_matrix(d: usize, seed: u64) -> LinOp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LinOp::dense(random_hyperbolic(&mut rng, d, 0.05).expect("sampler terminates"), NormTag::L2).expect("invertible")
}

pub fn diag_pseudo_orbit(len: i64, seed: u64) -> PseudoOrbit {
    let op = diag_half_two();
    let x0 = Vector::Dense(DenseVector::from_real(&[0.7, 0.0], NormTag::Linf).expect("finite"));
    generate_pseudo_orbit(&op, &x0, Window::new(0, len - 1).expect("nonempty"), 1e-3, seed).expect("valid chain")
}

pub fn lockdown_seed() -> Vector {
    Vector::Sparse(SparseBiSeq::from_real([(0, 1.0), (1, -0.5), (-2, 0.25)], NormTag::L1).expect("finite"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(hyperbolic_matrix(6, 1).dim(), Some(6));
        assert_eq!(diag_pseudo_orbit(50, 1).len(), 50);
        assert!(lockdown_op().is_invertible());
        assert!(!lockdown_seed().is_zero());
        assert!(coordinate_split(NormTag::L1).is_coordinate());
        assert_eq!(rotation().operator_norm(), 1.0);
    }
}
