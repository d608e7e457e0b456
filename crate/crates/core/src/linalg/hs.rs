//! Hilbert–Schmidt operator bases and product-basis expansions.
//!
//! Every local basis has `σ_0 = 1`, traceless Hermitian `σ_i` for `i > 0`,
//! and the normalization `Tr[σ_i σ_j] = d δ_ij`. For qubits the order is
//! `(1, σ_x, σ_y, σ_z)`; larger dimensions use generalized Gell-Mann
//! matrices (symmetric/antisymmetric off-diagonal pairs in lexicographic
//! order, then the diagonal ones) rescaled to the same normalization.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::matrix::{strides, CMatrix, HERMITIAN_TOL};
use crate::error::{Error, Result};

/// One basis index per tensor factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermIndex(pub Vec<usize>);

impl TermIndex {
    pub fn identity(factors: usize) -> Self {
        Self(vec![0; factors])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Factor positions carrying a non-identity basis element.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .map(|(i, _)| i)
            .collect()
    }
}

impl fmt::Display for TermIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug)]
pub struct HsBasis {
    pub d: usize,
    pub ops: Vec<CMatrix>,
}

fn basis_matrices(d: usize) -> Vec<DMatrix<C64>> {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut ops = vec![DMatrix::identity(d, d)];
    let scale = (d as f64 / 2.0).sqrt();
    for j in 0..d {
        for k in j + 1..d {
            let mut sym = DMatrix::zeros(d, d);
            sym[(j, k)] = one * scale;
            sym[(k, j)] = one * scale;
            ops.push(sym);
            let mut anti = DMatrix::zeros(d, d);
            anti[(j, k)] = -i * scale;
            anti[(k, j)] = i * scale;
            ops.push(anti);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt() * scale;
        let mut diag = DMatrix::zeros(d, d);
        for j in 0..l {
            diag[(j, j)] = one * norm;
        }
        diag[(l, l)] = -one * (l as f64) * norm;
        ops.push(diag);
    }
    ops
}

/// Local Hilbert–Schmidt basis of dimension `d >= 2`.
pub fn hs_basis(d: usize) -> Result<HsBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let ops = basis_matrices(d)
        .into_iter()
        .map(|m| CMatrix::from_matrix(m).expect("square basis matrix"))
        .collect();
    Ok(HsBasis { d, ops })
}

/// Real expansion coefficients over the product basis `⊗σ_t`, stored densely
/// in lexicographic order of the term index.
#[derive(Clone, Debug, PartialEq)]
pub struct HsDecomposition {
    factors: Vec<usize>,
    coeffs: Vec<f64>,
}

impl HsDecomposition {
    pub fn zeros(factors: &[usize]) -> Self {
        let len = factors.iter().map(|d| d * d).product();
        Self {
            factors: factors.to_vec(),
            coeffs: vec![0.0; len],
        }
    }

    /// Builds a decomposition from sparse terms; repeated indices accumulate.
    pub fn from_terms(factors: &[usize], terms: impl IntoIterator<Item = (TermIndex, f64)>) -> Result<Self> {
        let mut out = Self::zeros(factors);
        for (t, c) in terms {
            let k = out.flat_index(&t)?;
            out.coeffs[k] += c;
        }
        Ok(out)
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn flat_index(&self, t: &TermIndex) -> Result<usize> {
        if t.0.len() != self.factors.len() {
            return Err(Error::TermLength {
                expected: self.factors.len(),
                found: t.0.len(),
            });
        }
        let mut k = 0;
        for (f, (&a, &d)) in t.0.iter().zip(&self.factors).enumerate() {
            if a >= d * d {
                return Err(Error::TermValue {
                    factor: f,
                    index: a,
                    size: d * d,
                });
            }
            k = k * d * d + a;
        }
        Ok(k)
    }

    pub fn term_index(&self, mut k: usize) -> TermIndex {
        let mut idx = vec![0; self.factors.len()];
        for (slot, &d) in idx.iter_mut().zip(&self.factors).rev() {
            *slot = k % (d * d);
            k /= d * d;
        }
        TermIndex(idx)
    }

    pub fn get(&self, t: &TermIndex) -> Result<f64> {
        Ok(self.coeffs[self.flat_index(t)?])
    }

    pub fn set(&mut self, t: &TermIndex, value: f64) -> Result<()> {
        let k = self.flat_index(t)?;
        self.coeffs[k] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermIndex, f64)> + '_ {
        self.coeffs.iter().enumerate().map(|(k, &c)| (self.term_index(k), c))
    }

    /// Terms with `|coeff| > threshold`, in index order.
    pub fn nonzero(&self, threshold: f64) -> Vec<(TermIndex, f64)> {
        self.iter().filter(|(_, c)| c.abs() > threshold).collect()
    }
}

/// Applies a `s×s` matrix along every axis of a tensor whose axes all have
/// size `s_f = d_f²` (one per factor).
fn transform_axes(mut data: Vec<C64>, sizes: &[usize], mats: &[DMatrix<C64>]) -> Vec<C64> {
    let st = strides(sizes);
    let total = data.len();
    let mut buf = vec![C64::new(0.0, 0.0); total];
    for (f, m) in mats.iter().enumerate() {
        let s = sizes[f];
        if s == 1 {
            // only the 1x1 identity basis exists on trivial factors
            continue;
        }
        let post = st[f];
        let block = s * post;
        for base in (0..total).step_by(block) {
            for inner in 0..post {
                for a in 0..s {
                    let mut acc = C64::new(0.0, 0.0);
                    for p in 0..s {
                        acc += m[(a, p)] * data[base + p * post + inner];
                    }
                    buf[base + a * post + inner] = acc;
                }
            }
        }
        std::mem::swap(&mut data, &mut buf);
    }
    data
}

/// Row/column contributions to the interleaved `(r_f, c_f)` pair index.
fn pair_offsets(factors: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let sizes: Vec<usize> = factors.iter().map(|d| d * d).collect();
    let pst = strides(&sizes);
    let dst = strides(factors);
    let dim: usize = factors.iter().product();
    let mut row = vec![0; dim];
    let mut col = vec![0; dim];
    for x in 0..dim {
        for (f, &d) in factors.iter().enumerate() {
            let digit = (x / dst[f]) % d;
            row[x] += digit * d * pst[f];
            col[x] += digit * pst[f];
        }
    }
    (row, col)
}

/// Expands a Hermitian matrix as `m = Σ_t w_t ⊗σ_t` with
/// `w_t = Tr[m ⊗σ_t] / dim`. Trivial (dimension-1) factors carry index 0.
pub fn hs_decompose(m: &CMatrix) -> Result<HsDecomposition> {
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(hs_decompose_unchecked(&m.hermitian_part()))
}

pub(crate) fn hs_decompose_unchecked(m: &CMatrix) -> HsDecomposition {
    let factors = m.factors().to_vec();
    let sizes: Vec<usize> = factors.iter().map(|d| d * d).collect();
    let (row, col) = pair_offsets(&factors);
    let dim = m.dim();
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            data[row[r] + col[c]] = m.get(r, c);
        }
    }
    let mats: Vec<DMatrix<C64>> = factors
        .iter()
        .map(|&d| {
            let ops = basis_matrices(d);
            DMatrix::from_fn(d * d, d * d, |a, p| ops[a][(p % d, p / d)] / d as f64)
        })
        .collect();
    let out = transform_axes(data, &sizes, &mats);
    HsDecomposition {
        factors,
        coeffs: out.into_iter().map(|z| z.re).collect(),
    }
}

/// Inverse of [`hs_decompose`].
pub fn hs_compose(coeffs: &HsDecomposition) -> CMatrix {
    let factors = coeffs.factors.clone();
    let sizes: Vec<usize> = factors.iter().map(|d| d * d).collect();
    let mats: Vec<DMatrix<C64>> = factors
        .iter()
        .map(|&d| {
            let ops = basis_matrices(d);
            DMatrix::from_fn(d * d, d * d, |p, a| ops[a][(p / d, p % d)])
        })
        .collect();
    let data = coeffs.coeffs.iter().map(|&c| C64::new(c, 0.0)).collect();
    let out = transform_axes(data, &sizes, &mats);
    let (row, col) = pair_offsets(&factors);
    CMatrix::from_fn(&factors, |r, c| out[row[r] + col[c]])
}
