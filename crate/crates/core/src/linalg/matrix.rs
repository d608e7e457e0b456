use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Hermiticity tolerance on the max-entry deviation `|A - A†|`.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Dense complex square matrix acting on a tensor product space.
///
/// `factors` lists the local dimensions in tensor order (leftmost factor is
/// the most significant digit of the row/column index). Their product always
/// equals the matrix dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    mat: DMatrix<C64>,
    factors: Vec<usize>,
}

pub(crate) fn strides(factors: &[usize]) -> Vec<usize> {
    let mut s = vec![1; factors.len()];
    for i in (0..factors.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * factors[i + 1];
    }
    s
}

/// All offsets `Σ digit_i * stride_i` for the selected factor positions, in
/// row-major order of the selected digits.
fn offsets(factors: &[usize], strides: &[usize], positions: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(out.len() * factors[p]);
        for &base in &out {
            for digit in 0..factors[p] {
                next.push(base + digit * strides[p]);
            }
        }
        out = next;
    }
    out
}

impl CMatrix {
    pub fn new(mat: DMatrix<C64>, factors: Vec<usize>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let dim = mat.nrows();
        if factors.contains(&0) || factors.iter().product::<usize>() != dim {
            return Err(Error::FactorMismatch { factors, dim });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { mat, factors })
    }

    /// Single-factor matrix.
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        let d = mat.nrows();
        Self::new(mat, vec![d])
    }

    pub fn from_fn(factors: &[usize], f: impl FnMut(usize, usize) -> C64) -> Self {
        let dim = factors.iter().product();
        Self {
            mat: DMatrix::from_fn(dim, dim, f),
            factors: factors.to_vec(),
        }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(factors: &[usize], entries: &[C64]) -> Result<Self> {
        let dim: usize = factors.iter().product();
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries), factors.to_vec())
    }

    pub fn identity(factors: &[usize]) -> Self {
        let dim = factors.iter().product();
        Self {
            mat: DMatrix::identity(dim, dim),
            factors: factors.to_vec(),
        }
    }

    pub fn zeros(factors: &[usize]) -> Self {
        let dim = factors.iter().product();
        Self {
            mat: DMatrix::zeros(dim, dim),
            factors: factors.to_vec(),
        }
    }

    /// Rank-one projector `|v⟩⟨v|` (not normalized).
    pub fn outer(v: &[C64], factors: &[usize]) -> Result<Self> {
        let dim: usize = factors.iter().product();
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        Ok(Self::from_fn(factors, |i, j| v[i] * v[j].conj()))
    }

    /// Computational basis projector `|k⟩⟨k|` on a `d`-dimensional space.
    pub fn basis_projector(d: usize, k: usize) -> Self {
        Self::from_fn(&[d], |i, j| {
            if i == k && j == k {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    /// Reinterprets the same entries under a different factorization.
    pub fn with_factors(self, factors: Vec<usize>) -> Result<Self> {
        Self::new(self.mat, factors)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
            factors: self.factors.clone(),
        }
    }

    /// Full transpose in the computational basis.
    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
            factors: self.factors.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: &self.mat * C64::new(s, 0.0),
            factors: self.factors.clone(),
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            mat: &self.mat * s,
            factors: self.factors.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_ij |a_ij - b_ij|`. Panics on dimension mismatch.
    pub fn max_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_diff: dimension mismatch");
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius (Hilbert–Schmidt) norm.
    pub fn hs_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let mat = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        Self {
            mat,
            factors: self.factors.clone(),
        }
    }

    /// Matrix product. Factors of `self` are kept.
    pub fn matmul(&self, other: &CMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            mat: &self.mat * &other.mat,
            factors: self.factors.clone(),
        })
    }

    /// `Tr[self · other]` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.mat[(i, j)] * other.mat[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Traces out every factor not listed in `keep`. Kept factors retain
    /// their original relative order regardless of the order of `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let count = self.factors.len();
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if let Some(&bad) = kept.iter().find(|&&k| k >= count) {
            return Err(Error::FactorIndexOutOfRange { index: bad, count });
        }
        let traced: Vec<usize> = (0..count).filter(|i| !kept.contains(i)).collect();
        let st = strides(&self.factors);
        let keep_off = offsets(&self.factors, &st, &kept);
        let trace_off = offsets(&self.factors, &st, &traced);
        let new_factors: Vec<usize> = kept.iter().map(|&k| self.factors[k]).collect();
        let m = &self.mat;
        let mat = DMatrix::from_fn(keep_off.len(), keep_off.len(), |r, c| {
            let (ro, co) = (keep_off[r], keep_off[c]);
            trace_off.iter().map(|&t| m[(ro + t, co + t)]).sum()
        });
        Ok(Self {
            mat,
            factors: new_factors,
        })
    }

    /// Traces out the listed factors.
    pub fn trace_out(&self, traced: &[usize]) -> Result<Self> {
        let count = self.factors.len();
        if let Some(&bad) = traced.iter().find(|&&k| k >= count) {
            return Err(Error::FactorIndexOutOfRange { index: bad, count });
        }
        let keep: Vec<usize> = (0..count).filter(|i| !traced.contains(i)).collect();
        self.partial_trace(&keep)
    }

    /// Reorders tensor factors: factor `k` of the result is factor
    /// `order[k]` of `self`.
    pub fn permute_factors(&self, order: &[usize]) -> Result<Self> {
        let count = self.factors.len();
        let mut seen = vec![false; count];
        if order.len() != count {
            return Err(Error::InvalidPermutation(order.to_vec()));
        }
        for &o in order {
            if o >= count || seen[o] {
                return Err(Error::InvalidPermutation(order.to_vec()));
            }
            seen[o] = true;
        }
        let new_factors: Vec<usize> = order.iter().map(|&o| self.factors[o]).collect();
        let old_st = strides(&self.factors);
        // new index -> old index
        let map = offsets(&self.factors, &old_st, order);
        Ok(Self {
            mat: self.conjugated_entries(&map),
            factors: new_factors,
        })
    }

    /// `out[i, j] = self[map[i], map[j]]`.
    fn conjugated_entries(&self, map: &[usize]) -> DMatrix<C64> {
        let m = &self.mat;
        DMatrix::from_fn(map.len(), map.len(), |i, j| m[(map[i], map[j])])
    }

    /// Conjugation `U A U†` by the permutation matrix sending basis state
    /// `x` to `image[x]`.
    pub(crate) fn conjugate_by_index_map(&self, image: &[usize]) -> Self {
        let mut inv = vec![0; image.len()];
        for (x, &y) in image.iter().enumerate() {
            inv[y] = x;
        }
        Self {
            mat: self.conjugated_entries(&inv),
            factors: self.factors.clone(),
        }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .hermitian_part()
            .mat
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Tensor product; the factor list is the concatenation of both inputs'.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut factors = a.factors.clone();
    factors.extend_from_slice(&b.factors);
    CMatrix {
        mat: a.mat.kronecker(&b.mat),
        factors,
    }
}

/// Left-folded tensor product of a non-empty sequence.
pub fn kron_all<'a>(mats: impl IntoIterator<Item = &'a CMatrix>) -> Option<CMatrix> {
    let mut it = mats.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, m| kron(&acc, m)))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(m.hermitian_eigenvalues().first().copied().unwrap_or(0.0))
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim(), rhs.dim(), "add: dimension mismatch");
        CMatrix {
            mat: &self.mat + &rhs.mat,
            factors: self.factors.clone(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim(), rhs.dim(), "sub: dimension mismatch");
        CMatrix {
            mat: &self.mat - &rhs.mat,
            factors: self.factors.clone(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim(), rhs.dim(), "mul: dimension mismatch");
        CMatrix {
            mat: &self.mat * &rhs.mat,
            factors: self.factors.clone(),
        }
    }
}
