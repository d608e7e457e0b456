//! Choi operators of local maps, instruments, and random samplers.
//!
//! Instrument elements use the transposed Choi convention
//! `M = [(id ⊗ 𝓜)(|φ⁺⟩⟨φ⁺|)]ᵀ` on `X_I ⊗ X_O`, so trace preservation reads
//! `Tr_{X_O} M = 1`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix, PartyLayout};

/// Choi operator of a CP map acting at one lab.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMap {
    pub mat: CMatrix,
    /// Factor positions of `mat` that are outputs.
    pub outputs: Vec<usize>,
    pub party: usize,
}

impl ChoiMap {
    /// Map on `X_I ⊗ X_O`, factors `[d_in, d_out]`.
    pub fn new(mat: CMatrix, party: usize) -> Result<Self> {
        if mat.factors().len() != 2 {
            return Err(Error::FactorMismatch {
                factors: mat.factors().to_vec(),
                dim: mat.dim(),
            });
        }
        Ok(Self {
            mat,
            outputs: vec![1],
            party,
        })
    }

    pub fn with_outputs(mat: CMatrix, outputs: Vec<usize>, party: usize) -> Result<Self> {
        let count = mat.factors().len();
        if let Some(&bad) = outputs.iter().find(|&&o| o >= count) {
            return Err(Error::FactorIndexOutOfRange { index: bad, count });
        }
        Ok(Self { mat, outputs, party })
    }

    pub fn input_dim(&self) -> usize {
        self.mat.dim() / self.output_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.iter().map(|&o| self.mat.factors()[o]).product()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.mat.hermitian_eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn is_cp(&self, tol: f64) -> bool {
        self.mat.is_hermitian(tol.max(crate::linalg::HERMITIAN_TOL)) && self.min_eigenvalue() >= -tol
    }

    /// `max |Tr_out M - 1_in|`.
    pub fn tp_deviation(&self) -> f64 {
        output_marginal_deviation(&self.mat, &self.outputs)
    }

    pub fn is_tp(&self, tol: f64) -> bool {
        self.tp_deviation() <= tol
    }
}

fn output_marginal_deviation(mat: &CMatrix, outputs: &[usize]) -> f64 {
    let marginal = mat.trace_out(outputs).expect("output positions validated");
    marginal.max_diff(&CMatrix::identity(marginal.factors()))
}

/// A set of CP maps on one lab summing to a CPTP map.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    pub elements: Vec<ChoiMap>,
}

impl Instrument {
    pub fn new(elements: Vec<ChoiMap>) -> Result<Self> {
        let first = elements.first().ok_or(Error::EmptyInstrument)?;
        for e in &elements[1..] {
            if e.party != first.party {
                return Err(Error::InstrumentMismatch(format!(
                    "party {} vs {}",
                    e.party, first.party
                )));
            }
            if e.mat.factors() != first.mat.factors() || e.outputs != first.outputs {
                return Err(Error::InstrumentMismatch(format!(
                    "factors {:?} vs {:?}",
                    e.mat.factors(),
                    first.mat.factors()
                )));
            }
        }
        Ok(Self { elements })
    }

    pub fn party(&self) -> usize {
        self.elements[0].party
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Choi operator of the summed channel.
    pub fn total(&self) -> ChoiMap {
        let mut sum = CMatrix::zeros(self.elements[0].mat.factors());
        for e in &self.elements {
            sum = &sum + &e.mat;
        }
        ChoiMap {
            mat: sum,
            outputs: self.elements[0].outputs.clone(),
            party: self.party(),
        }
    }

    /// The same elements relabelled to act at `party`.
    pub fn at_party(&self, party: usize) -> Instrument {
        let elements = self.elements.iter().map(|e| ChoiMap { party, ..e.clone() }).collect();
        Instrument { elements }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentReport {
    /// Smallest eigenvalue across all elements.
    pub min_eig: f64,
    /// `max |Tr_out Σ M_i - 1|`.
    pub tp_deviation: f64,
    pub valid: bool,
}

pub fn validate_instrument(ins: &Instrument, tol: f64) -> InstrumentReport {
    let hermitian = ins
        .elements
        .iter()
        .all(|e| e.mat.is_hermitian(tol.max(crate::linalg::HERMITIAN_TOL)));
    let min_eig = ins
        .elements
        .iter()
        .map(ChoiMap::min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let tp_deviation = ins.total().tp_deviation();
    InstrumentReport {
        min_eig,
        tp_deviation,
        valid: hermitian && min_eig >= -tol && tp_deviation <= tol,
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Unnormalized `|φ⁺⟩⟨φ⁺|`, the Choi operator of the identity channel.
pub fn identity_channel(d: usize) -> CMatrix {
    CMatrix::from_fn(&[d, d], |r, c| {
        if r % (d + 1) == 0 && c % (d + 1) == 0 {
            re(1.0)
        } else {
            re(0.0)
        }
    })
}

/// Completely depolarizing channel `1 ⊗ 1/d_out`.
pub fn depolarizing_channel(d_in: usize, d_out: usize) -> CMatrix {
    CMatrix::identity(&[d_in, d_out]).scale(1.0 / d_out as f64)
}

/// Discard the input and prepare `|ψ⟩` (normalized here).
pub fn preparation_channel(d_in: usize, psi: &[C64]) -> CMatrix {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
    let rho = CMatrix::outer(&v, &[v.len()]).expect("vector length matches");
    kron(&CMatrix::identity(&[d_in]), &rho.transpose())
}

/// Choi operator of `ρ ↦ Σ_k K_k ρ K_k†`; each Kraus operator is `d_out × d_in`.
pub fn kraus_choi(kraus: &[DMatrix<C64>], d_in: usize, d_out: usize) -> CMatrix {
    CMatrix::from_fn(&[d_in, d_out], |r, c| {
        let (i, o) = (r / d_out, r % d_out);
        let (j, p) = (c / d_out, c % d_out);
        kraus.iter().map(|k| k[(p, j)] * k[(o, i)].conj()).sum()
    })
}

/// Unitary channel `ρ ↦ U ρ U†`.
pub fn unitary_channel(u: &DMatrix<C64>) -> CMatrix {
    kraus_choi(std::slice::from_ref(u), u.ncols(), u.nrows())
}

/// Projective measurement of `|k⟩` followed by re-preparation of `|k⟩`.
pub fn measure_reprepare(d: usize, k: usize) -> CMatrix {
    kron(&CMatrix::basis_projector(d, k), &CMatrix::basis_projector(d, k))
}

/// Projective measurement of `|k⟩` on the input, maximally mixed output.
pub fn measure_discard(d_in: usize, d_out: usize, k: usize) -> CMatrix {
    kron(
        &CMatrix::basis_projector(d_in, k),
        &CMatrix::identity(&[d_out]).scale(1.0 / d_out as f64),
    )
}

/// Computational-basis measure-and-reprepare instrument, one element per outcome.
pub fn projective_instrument(d: usize, party: usize) -> Instrument {
    let elements = (0..d)
        .map(|k| ChoiMap {
            mat: measure_reprepare(d, k),
            outputs: vec![1],
            party,
        })
        .collect();
    Instrument { elements }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        C64::new(a, b)
    })
}

/// `X^{-1/2}` for a positive definite Hermitian `X`.
fn inverse_sqrt(x: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (x + x.adjoint()) * re(0.5);
    let eig = h.symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| re(1.0 / l.sqrt())));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Random instrument with `outcomes` elements: a Haar-like Stinespring
/// isometry whose Kraus operators are split among outcomes, followed by an
/// exact trace-preservation correction.
pub fn random_instrument(d_in: usize, d_out: usize, outcomes: usize, seed: u64) -> Result<Instrument> {
    if d_in == 0 || d_out == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if outcomes == 0 {
        return Err(Error::EmptyInstrument);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env = (d_in * d_out).max(outcomes);
    let g = gaussian_matrix(&mut rng, d_out * env, d_in);
    let v = g.qr().q();
    let kraus: Vec<DMatrix<C64>> = (0..env)
        .map(|e| DMatrix::from_fn(d_out, d_in, |o, i| v[(o * env + e, i)]))
        .collect();
    let mut mats: Vec<CMatrix> = (0..outcomes)
        .map(|k| {
            let group: Vec<DMatrix<C64>> = kraus.iter().skip(k).step_by(outcomes).cloned().collect();
            kraus_choi(&group, d_in, d_out)
        })
        .collect();
    let mut total = CMatrix::zeros(&[d_in, d_out]);
    for m in &mats {
        total = &total + m;
    }
    let marginal = total.trace_out(&[1])?;
    let fix = CMatrix::new(inverse_sqrt(marginal.matrix()), vec![d_in])?;
    let fix = kron(&fix, &CMatrix::identity(&[d_out]));
    for m in &mut mats {
        let corrected = &(&fix * m) * &fix;
        *m = corrected.hermitian_part();
    }
    let elements = mats
        .into_iter()
        .map(|mat| ChoiMap {
            mat,
            outputs: vec![1],
            party: 0,
        })
        .collect();
    Ok(Instrument { elements })
}

/// Random CPTP map `d_in → d_out`, deterministic in `seed`.
pub fn random_cptp(d_in: usize, d_out: usize, seed: u64) -> Result<ChoiMap> {
    Ok(random_instrument(d_in, d_out, 1, seed)?.elements.remove(0))
}

/// Random CPTP map on one whole lab block of `layout` (system plus frame
/// factors, in lab factor order).
pub fn random_lab_cptp(layout: &PartyLayout, party: usize, seed: u64) -> Result<ChoiMap> {
    random_lab_instrument(layout, party, 1, seed).map(|mut i| i.elements.remove(0))
}

pub fn random_lab_instrument(layout: &PartyLayout, party: usize, outcomes: usize, seed: u64) -> Result<Instrument> {
    let ins = random_instrument(layout.lab_input_dim(), layout.lab_output_dim(), outcomes, seed)?;
    let elements = ins
        .elements
        .into_iter()
        .map(|e| {
            to_lab_order(e.mat, layout).map(|mat| ChoiMap {
                mat,
                outputs: layout.lab_output_positions(),
                party,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instrument { elements })
}

/// Reorders a Choi operator on `(in_total) ⊗ (out_total)` into lab factor
/// order `S_I, S_O[, R_I, R_O]`.
pub(crate) fn to_lab_order(mat: CMatrix, layout: &PartyLayout) -> Result<CMatrix> {
    match layout.frame {
        None => mat.with_factors(vec![layout.d_in, layout.d_out]),
        Some(f) => mat
            .with_factors(vec![layout.d_in, f.d_frame_in, layout.d_out, f.d_frame_out])?
            .permute_factors(&[0, 2, 1, 3]),
    }
}
