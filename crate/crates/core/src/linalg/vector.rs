use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Field of scalars. Every constructed value is finite.
pub type Scalar = Complex64;

pub const MAX_DIM: usize = 32;

pub(crate) fn check_finite(z: Scalar, what: &'static str) -> Result<Scalar> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(what))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormTag {
    L1,
    L2,
    Linf,
}

impl NormTag {
    /// Norm of a finite family of coordinates.
    pub fn of<'a, I: IntoIterator<Item = &'a Scalar>>(self, coords: I) -> f64 {
        match self {
            NormTag::L1 => coords.into_iter().map(|z| z.norm()).sum(),
            NormTag::L2 => {
                // scaled accumulation keeps 2^±600 entries from overflowing
                let mut scale = 0.0f64;
                let mut ssq = 1.0f64;
                for z in coords {
                    for a in [z.re.abs(), z.im.abs()] {
                        if a == 0.0 {
                            continue;
                        }
                        if scale < a {
                            ssq = 1.0 + ssq * (scale / a) * (scale / a);
                            scale = a;
                        } else {
                            ssq += (a / scale) * (a / scale);
                        }
                    }
                }
                scale * ssq.sqrt()
            }
            NormTag::Linf => coords.into_iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    pub fn ensure_same(self, other: NormTag) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::NormMismatch(self, other))
        }
    }
}

/// A point of C^d, 1 <= d <= 32, measured in a fixed norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    coords: Vec<Scalar>,
    norm_tag: NormTag,
}

impl DenseVector {
    pub fn new(coords: Vec<Scalar>, norm_tag: NormTag) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Dimension(coords.len()));
        }
        for z in &coords {
            check_finite(*z, "vector coordinate")?;
        }
        Ok(Self { coords, norm_tag })
    }

    pub fn from_real(coords: &[f64], norm_tag: NormTag) -> Result<Self> {
        Self::new(coords.iter().map(|&x| Scalar::new(x, 0.0)).collect(), norm_tag)
    }

    pub fn zeros(dim: usize, norm_tag: NormTag) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        Self { coords: vec![Scalar::new(0.0, 0.0); dim], norm_tag }
    }

    pub fn basis(dim: usize, i: usize, norm_tag: NormTag) -> Self {
        let mut v = Self::zeros(dim, norm_tag);
        v.coords[i] = Scalar::new(1.0, 0.0);
        v
    }

    /// Internal constructor for arithmetic results whose inputs were already checked.
    pub(crate) fn from_parts(coords: Vec<Scalar>, norm_tag: NormTag) -> Self {
        Self { coords, norm_tag }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.coords
    }

    pub fn norm_tag(&self) -> NormTag {
        self.norm_tag
    }

    pub fn with_norm_tag(mut self, tag: NormTag) -> Self {
        self.norm_tag = tag;
        self
    }

    pub fn norm(&self) -> f64 {
        self.norm_tag.of(&self.coords)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|z| *z == Scalar::new(0.0, 0.0))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        self.norm_tag.ensure_same(other.norm_tag)?;
        if self.dim() != other.dim() {
            return Err(Error::KindMismatch(format!(
                "dimension {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::from_parts(
            self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
            self.norm_tag,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::from_parts(
            self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect(),
            self.norm_tag,
        ))
    }

    pub fn scale(&self, s: Scalar) -> Self {
        Self::from_parts(self.coords.iter().map(|z| z * s).collect(), self.norm_tag)
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = Scalar;
    fn index(&self, i: usize) -> &Scalar {
        &self.coords[i]
    }
}
