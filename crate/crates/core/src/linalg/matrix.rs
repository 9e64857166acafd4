use super::vector::{check_finite, DenseVector, NormTag, Scalar, MAX_DIM};
use crate::error::{Error, Result};

const ZERO: Scalar = Scalar::new(0.0, 0.0);
const ONE: Scalar = Scalar::new(1.0, 0.0);

/// Row-major complex matrix. Public constructors produce square matrices
/// of dimension 1..=32; rectangular shapes only appear inside the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl DenseMatrix {
    pub fn new(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let d = rows.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::Dimension(d));
        }
        let mut data = Vec::with_capacity(d * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::InvalidInput(format!(
                    "matrix must be square: row of length {} in a {d}-row matrix",
                    row.len()
                )));
            }
            for z in row {
                data.push(check_finite(z, "matrix entry")?);
            }
        }
        Ok(Self { rows: d, cols: d, data })
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.iter().map(|&x| Scalar::new(x, 0.0)).collect()).collect())
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn diagonal(diag: &[Scalar]) -> Result<Self> {
        let d = diag.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::Dimension(d));
        }
        let mut m = Self::zeros(d, d);
        for (i, z) in diag.iter().enumerate() {
            m[(i, i)] = check_finite(*z, "matrix entry")?;
        }
        Ok(m)
    }

    pub fn diagonal_real(diag: &[f64]) -> Result<Self> {
        Self::diagonal(&diag.iter().map(|&x| Scalar::new(x, 0.0)).collect::<Vec<_>>())
    }

    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    /// Matrix whose columns are the given coordinate vectors.
    pub(crate) fn from_columns(cols: &[Vec<Scalar>], rows: usize) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..rows {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Scalar>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_coords(&self, x: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, x.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn apply(&self, v: &DenseVector) -> Result<DenseVector> {
        if v.dim() != self.cols || !self.is_square() {
            return Err(Error::KindMismatch(format!(
                "{}x{} matrix applied to a vector of dimension {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        Ok(DenseVector::from_parts(self.mul_coords(v.coords()), v.norm_tag()))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: Scalar) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        NormTag::L2.of(&self.data)
    }

    /// Induced operator norm under `tag` (L1: max column sum, Linf: max row sum,
    /// L2: largest singular value).
    pub fn op_norm(&self, tag: NormTag) -> f64 {
        match tag {
            NormTag::L1 => (0..self.cols)
                .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
                .fold(0.0, f64::max),
            NormTag::Linf => (0..self.rows)
                .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max),
            NormTag::L2 => self.singular_values().first().copied().unwrap_or(0.0),
        }
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let gram = self.adjoint().mul(self);
        let mut ev = hermitian_eigenvalues(&gram);
        ev.iter_mut().for_each(|x| *x = x.max(0.0).sqrt());
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ev
    }

    /// Inverse by Gaussian elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NotInvertible);
        }
        let n = self.rows;
        let scale = self.max_abs();
        if scale == 0.0 {
            return Err(Error::NotInvertible);
        }
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let (piv, pmax) = (col..n)
                .map(|r| (r, a[(r, col)].norm()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= scale * 1e-14 {
                return Err(Error::NotInvertible);
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let ac = a[(col, j)];
                    let ic = inv[(col, j)];
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        for z in &inv.data {
            check_finite(*z, "matrix inverse")?;
        }
        Ok(inv)
    }

    /// Numerical rank with relative threshold `rel_tol` on the singular values.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let sv = self.singular_values();
        let top = sv.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * top).count()
    }

    /// Orthonormal basis (Gram-Schmidt, twice) of the span of the given columns;
    /// columns whose residual falls below `tol` relative to their norm are dropped.
    pub(crate) fn orthonormal_columns(cols: &[Vec<Scalar>], tol: f64) -> Vec<Vec<Scalar>> {
        let mut basis: Vec<Vec<Scalar>> = Vec::new();
        for c in cols {
            let n0 = NormTag::L2.of(c);
            if n0 == 0.0 {
                continue;
            }
            let mut v = c.clone();
            for _ in 0..2 {
                for b in &basis {
                    let proj: Scalar = b.iter().zip(&v).map(|(bi, vi)| bi.conj() * vi).sum();
                    v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= proj * bi);
                }
            }
            let n1 = NormTag::L2.of(&v);
            if n1 > tol * n0 {
                v.iter_mut().for_each(|z| *z /= n1);
                basis.push(v);
            }
        }
        basis
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a Hermitian matrix via cyclic Jacobi on its real symmetric embedding.
pub(crate) fn hermitian_eigenvalues(h: &DenseMatrix) -> Vec<f64> {
    let n = h.rows;
    let m = 2 * n;
    let mut a = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            a[i * m + j] = z.re;
            a[(i + n) * m + (j + n)] = z.re;
            a[i * m + (j + n)] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    // symmetrize away rounding asymmetry
    for i in 0..m {
        for j in 0..i {
            let s = 0.5 * (a[i * m + j] + a[j * m + i]);
            a[i * m + j] = s;
            a[j * m + i] = s;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum();
        let diag: f64 = (0..m).map(|i| a[i * m + i] * a[i * m + i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // each eigenvalue of h appears twice in the embedding
    ev.chunks(2).map(|c| 0.5 * (c[0] + c[c.len() - 1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norms_of_diagonal() {
        let m = DenseMatrix::diagonal_real(&[0.5, 2.0]).unwrap();
        assert_eq!(m.op_norm(NormTag::Linf), 2.0);
        assert_eq!(m.op_norm(NormTag::L1), 2.0);
        assert!((m.op_norm(NormTag::L2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn l2_norm_matches_closed_form() {
        // [[1,1],[0,1]] has largest singular value golden ratio
        let m = DenseMatrix::from_real(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((m.op_norm(NormTag::L2) - phi).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        let m = DenseMatrix::from_real(&[vec![1.5, 1.0], vec![0.0, 1.0 / 3.0]]).unwrap();
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        assert!(id.sub(&DenseMatrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = DenseMatrix::from_real(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(m.inverse(), Err(Error::NotInvertible));
        assert_eq!(m.rank(1e-10), 1);
    }

    #[test]
    fn non_square_rejected() {
        assert!(DenseMatrix::from_real(&[vec![1.0, 2.0]]).is_err());
    }
}
