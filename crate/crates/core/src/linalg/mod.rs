//! Scalars, vectors, norms, dense kernels and the fixed-point iterator.

mod eig;
mod fixed_point;
mod matrix;
mod sequence;
mod vector;

pub use eig::{dense_eig, dense_eig_tagged, eigenvalues, schur, EigenPair, Schur};
pub use fixed_point::{banach_fixed_point, iteration_bound, FixedPoint, Perturb};
pub use matrix::DenseMatrix;
pub use sequence::{SparseBiSeq, DENORMAL_FLOOR};
pub use vector::{DenseVector, NormTag, Scalar, MAX_DIM};


use crate::error::{Error, Result};

/// Either a point of C^d or a finitely supported bilateral sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Vector {
    Dense(DenseVector),
    Sparse(SparseBiSeq),
}

impl Vector {
    pub fn norm(&self) -> f64 {
        match self {
            Vector::Dense(v) => v.norm(),
            Vector::Sparse(s) => s.norm(),
        }
    }

    pub fn norm_tag(&self) -> NormTag {
        match self {
            Vector::Dense(v) => v.norm_tag(),
            Vector::Sparse(s) => s.norm_tag(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Vector::Dense(v) => v.is_zero(),
            Vector::Sparse(s) => s.is_zero(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Vector::Dense(_) => "dense",
            Vector::Sparse(_) => "sparse",
        }
    }

    pub fn zero_like(&self) -> Vector {
        match self {
            Vector::Dense(v) => Vector::Dense(DenseVector::zeros(v.dim(), v.norm_tag())),
            Vector::Sparse(s) => Vector::Sparse(SparseBiSeq::zero(s.norm_tag())),
        }
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        match (self, other) {
            (Vector::Dense(a), Vector::Dense(b)) => Ok(Vector::Dense(a.add(b)?)),
            (Vector::Sparse(a), Vector::Sparse(b)) => Ok(Vector::Sparse(a.add(b)?)),
            _ => Err(mismatch(self, other)),
        }
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        match (self, other) {
            (Vector::Dense(a), Vector::Dense(b)) => Ok(Vector::Dense(a.sub(b)?)),
            (Vector::Sparse(a), Vector::Sparse(b)) => Ok(Vector::Sparse(a.sub(b)?)),
            _ => Err(mismatch(self, other)),
        }
    }

    pub fn scale(&self, s: Scalar) -> Vector {
        match self {
            Vector::Dense(v) => Vector::Dense(v.scale(s)),
            Vector::Sparse(q) => Vector::Sparse(q.scale(s)),
        }
    }

    pub fn distance(&self, other: &Vector) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    pub fn as_dense(&self) -> Option<&DenseVector> {
        match self {
            Vector::Dense(v) => Some(v),
            Vector::Sparse(_) => None,
        }
    }

    pub fn as_sparse(&self) -> Option<&SparseBiSeq> {
        match self {
            Vector::Sparse(s) => Some(s),
            Vector::Dense(_) => None,
        }
    }
}

fn mismatch(a: &Vector, b: &Vector) -> Error {
    Error::KindMismatch(format!("{} vs {} vector", a.kind(), b.kind()))
}

impl From<DenseVector> for Vector {
    fn from(v: DenseVector) -> Self {
        Vector::Dense(v)
    }
}

impl From<SparseBiSeq> for Vector {
    fn from(s: SparseBiSeq) -> Self {
        Vector::Sparse(s)
    }
}

impl Perturb for Vector {
    fn perturbed(&self) -> Self {
        match self {
            Vector::Dense(v) => Vector::Dense(v.perturbed()),
            Vector::Sparse(s) => {
                let scale = s.norm().max(1.0) * 1e-3;
                Vector::Sparse(s.add(&SparseBiSeq::unit(0, s.norm_tag()).scale(Scalar::new(scale, 0.0))).unwrap())
            }
        }
    }
}

/// Norm of `v` under its own tag.
pub fn vec_norm(v: &Vector) -> f64 {
    v.norm()
}
