use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{enumerate_sn, invariance_deviations, is_invariant};
use crate::error::{Error, Result};
use crate::linalg::{hs_decompose_unchecked, kron_all, lab_index_map, CMatrix, PartyLayout};
use crate::process::{allowed_mask, ProcessMatrix};

/// Threshold on `max_trace` above which a sector is reported feasible.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// Gram eigenvalues below this count as null directions.
const NULL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SectorLabel {
    /// Trivial representation: `U_g v = v`.
    Symmetric,
    /// Sign representation: `U_g v = sgn(g) v`.
    Antisymmetric,
    /// No sector constraint.
    Full,
}

impl SectorLabel {
    fn character(self, sign: i32) -> f64 {
        match self {
            SectorLabel::Symmetric | SectorLabel::Full => 1.0,
            SectorLabel::Antisymmetric => sign as f64,
        }
    }
}

impl fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            SectorLabel::Symmetric => "symmetric",
            SectorLabel::Antisymmetric => "antisymmetric",
            SectorLabel::Full => "full",
        })
    }
}

impl FromStr for SectorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" | "sym" | "+" => Ok(SectorLabel::Symmetric),
            "antisymmetric" | "anti" | "-" => Ok(SectorLabel::Antisymmetric),
            "full" => Ok(SectorLabel::Full),
            _ => Err(Error::UnsupportedLabel(s.to_string())),
        }
    }
}

/// Orthogonal projector onto a sign sector of the state space.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorProjector {
    pub proj: CMatrix,
    pub label: SectorLabel,
    pub n: usize,
}

impl SectorProjector {
    /// Rank, read off the trace.
    pub fn rank(&self) -> usize {
        self.proj.trace().re.round() as usize
    }
}

/// `P₊ = (1/n!) Σ_g U_g`, `P₋ = (1/n!) Σ_g sgn(g) U_g`, or the identity for
/// [`SectorLabel::Full`].
pub fn sector_projector(label: SectorLabel, layout: &PartyLayout) -> Result<SectorProjector> {
    let factors = layout.factors();
    let n = layout.n_parties;
    if label == SectorLabel::Full {
        return Ok(SectorProjector {
            proj: CMatrix::identity(&factors),
            label,
            n,
        });
    }
    let group = enumerate_sn(n)?;
    let dim = layout.dim();
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for g in &group {
        let w = label.character(g.sign());
        for (x, y) in lab_index_map(g, layout)?.into_iter().enumerate() {
            acc[(y, x)] += w;
        }
    }
    let scale = 1.0 / group.len() as f64;
    let proj = CMatrix::new(acc.map(|v| C64::new(v * scale, 0.0)), factors)?;
    Ok(SectorProjector { proj, label, n })
}

/// Orthonormal basis of the range of `p` (Gram–Schmidt over its columns).
pub fn sector_basis(p: &SectorProjector) -> Vec<DVector<C64>> {
    let m = p.proj.matrix();
    let mut basis: Vec<DVector<C64>> = Vec::new();
    for col in m.column_iter() {
        let mut v: DVector<C64> = col.into_owned();
        // two passes keep the basis orthogonal to machine precision
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / C64::new(norm, 0.0));
        }
    }
    basis
}

/// Split of a swap-invariant bipartite operator into its sector blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeSplit {
    pub plus: CMatrix,
    pub minus: CMatrix,
    /// `‖w − plus − minus‖_max`.
    pub cross_norm: f64,
}

/// `W = P₊WP₊ + P₋WP₋` for swap-invariant bipartite `W`.
pub fn charge_components(w: &ProcessMatrix) -> Result<ChargeSplit> {
    let layout = w.layout();
    if layout.n_parties != 2 {
        return Err(Error::Unsupported(format!(
            "charge split needs exactly 2 parties, got {}",
            layout.n_parties
        )));
    }
    let deviation = invariance_deviations(w.matrix(), layout)?
        .into_iter()
        .fold(0.0f64, |m, (_, d)| m.max(d));
    if deviation > 1e-9 {
        return Err(Error::NotInvariant { deviation });
    }
    let p = sector_projector(SectorLabel::Symmetric, layout)?.proj;
    let q = sector_projector(SectorLabel::Antisymmetric, layout)?.proj;
    let a = w.matrix();
    let plus = &(&p * a) * &p;
    let minus = &(&q * a) * &q;
    let cross_norm = (&(a - &plus) - &minus).max_abs();
    Ok(ChargeSplit {
        plus,
        minus,
        cross_norm,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    /// Rank of the sector projector.
    pub sector_dim: usize,
    /// Real dimension of the Hermitian operators inside the sector with no
    /// forbidden terms.
    pub allowed_subspace_dim: usize,
    /// `max |Tr X|` over unit Hilbert–Schmidt norm `X` in that subspace.
    pub max_trace: f64,
    pub feasible_flag: bool,
}

/// Hermitian, Hilbert–Schmidt orthonormal basis of `r × r` matrices.
fn hermitian_basis(r: usize) -> Vec<DMatrix<C64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(r * r);
    for j in 0..r {
        let mut e = DMatrix::zeros(r, r);
        e[(j, j)] = C64::new(1.0, 0.0);
        out.push(e);
    }
    for j in 0..r {
        for k in j + 1..r {
            let mut e = DMatrix::zeros(r, r);
            e[(j, k)] = C64::new(s, 0.0);
            e[(k, j)] = C64::new(s, 0.0);
            out.push(e);
            let mut e = DMatrix::zeros(r, r);
            e[(j, k)] = C64::new(0.0, s);
            e[(k, j)] = C64::new(0.0, -s);
            out.push(e);
        }
    }
    out
}

/// Decides whether any operator supported in the sector and free of
/// forbidden terms can have nonzero trace.
///
/// Works in the real space of Hermitian `X = V E V†`, where the columns of
/// `V` span the sector. The allowed operators form the null space of the
/// forbidden-coefficient Gram matrix, and `max_trace` is the length of the
/// trace functional projected onto it.
pub fn sector_feasibility(label: SectorLabel, layout: &PartyLayout) -> Result<FeasibilityReport> {
    let p = sector_projector(label, layout)?;
    let basis = sector_basis(&p);
    let r = basis.len();
    let dim = layout.dim();
    let factors = layout.factors();
    let v = DMatrix::from_columns(&basis);
    let mask = allowed_mask(layout);
    let forbidden: Vec<usize> = (0..mask.len()).filter(|&k| !mask[k]).collect();
    let herm = hermitian_basis(r);
    let scale = (dim as f64).sqrt();
    let rows: Vec<Vec<f64>> = herm
        .par_iter()
        .map(|e| {
            let x = CMatrix::new(&v * e * v.adjoint(), factors.clone()).expect("sector operator dims");
            let c = hs_decompose_unchecked(&x);
            forbidden.iter().map(|&k| c.coeffs()[k] * scale).collect()
        })
        .collect();
    let f = DMatrix::from_fn(herm.len(), forbidden.len(), |i, j| rows[i][j]);
    let gram = &f * f.transpose();
    let eig = gram.symmetric_eigen();
    let trace: DVector<f64> = DVector::from_iterator(herm.len(), herm.iter().map(|e| e.trace().re));
    let mut allowed_subspace_dim = 0;
    let mut proj2 = 0.0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < NULL_TOL {
            allowed_subspace_dim += 1;
            proj2 += eig.eigenvectors.column(k).dot(&trace).powi(2);
        }
    }
    let max_trace = proj2.sqrt();
    Ok(FeasibilityReport {
        sector_dim: r,
        allowed_subspace_dim,
        max_trace,
        feasible_flag: max_trace > FEASIBILITY_TOL,
    })
}

fn random_hermitian(rng: &mut ChaCha8Rng, factors: &[usize]) -> CMatrix {
    CMatrix::from_fn(factors, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        C64::new(a, b)
    })
    .hermitian_part()
}

/// Checks on `trials` random sector operators that discarding one lab
/// (chosen at random) leaves an operator in the same sector of the
/// remaining labs, to within `1e-10`.
pub fn sector_partial_trace_check(label: SectorLabel, layout: &PartyLayout, trials: usize, seed: u64) -> Result<bool> {
    let n = layout.n_parties;
    if n < 2 {
        return Err(Error::PartyCount(n));
    }
    let p = sector_projector(label, layout)?.proj;
    let reduced_layout = layout.with_parties(n - 1);
    let q = sector_projector(label, &reduced_layout)?.proj;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let g = random_hermitian(&mut rng, &layout.factors());
        let x = &(&p * &g) * &p;
        let lab = rng.random_range(0..n);
        let keep: Vec<usize> = (0..n)
            .filter(|&l| l != lab)
            .flat_map(|l| layout.lab_factor_range(l))
            .collect();
        let y = x.partial_trace(&keep)?;
        let back = &(&q * &y) * &q;
        if back.max_diff(&y) > 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductInvariance {
    pub invariant: bool,
    pub all_factors_equal: bool,
}

/// Whether `⊗ ms` is permutation invariant, and whether all local factors
/// coincide.
pub fn product_invariance_check(ms: &[CMatrix], layout: &PartyLayout, tol: f64) -> Result<ProductInvariance> {
    if ms.len() != layout.n_parties {
        return Err(Error::DimensionMismatch {
            expected: layout.n_parties,
            found: ms.len(),
        });
    }
    let lab = layout.lab_dim();
    if let Some(m) = ms.iter().find(|m| m.dim() != lab) {
        return Err(Error::DimensionMismatch {
            expected: lab,
            found: m.dim(),
        });
    }
    let locals: Vec<CMatrix> = ms
        .iter()
        .map(|m| m.clone().with_factors(layout.lab_factors()))
        .collect::<Result<_>>()?;
    let product = kron_all(&locals).expect("at least one party");
    let invariant = is_invariant(&product, layout, tol)?;
    let all_factors_equal = ms.windows(2).all(|w| w[0].max_diff(&w[1]) <= tol);
    Ok(ProductInvariance {
        invariant,
        all_factors_equal,
    })
}
