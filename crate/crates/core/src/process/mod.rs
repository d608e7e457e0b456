//! Process matrices: validity constraints, the forbidden-term rule, the
//! generalized Born rule and reduced processes.

mod choi;
pub mod fixtures;
mod oracle;

pub use choi::{
    depolarizing_channel, identity_channel, kraus_choi, measure_discard, measure_reprepare, preparation_channel,
    projective_instrument, random_cptp, random_instrument, random_lab_cptp, random_lab_instrument, unitary_channel,
    validate_instrument, ChoiMap, Instrument, InstrumentReport,
};
pub use oracle::{mc_normalization_oracle, probe_channels};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{hs_decompose_unchecked, CMatrix, HsDecomposition, PartyLayout, TermIndex, HERMITIAN_TOL};

/// Default tolerance for validity checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A matrix claimed to be a process on `layout`. Validity is checked by
/// [`validate_process`], never assumed.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    mat: CMatrix,
    layout: PartyLayout,
}

impl ProcessMatrix {
    /// Wraps `mat`, re-tagging its factors with the layout's canonical order.
    pub fn new(mat: CMatrix, layout: PartyLayout) -> Result<Self> {
        layout.check_dim(mat.dim())?;
        let mat = mat.with_factors(layout.factors())?;
        Ok(Self { mat, layout })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn layout(&self) -> &PartyLayout {
        &self.layout
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }
}

/// Whether an expansion term may appear in a valid process.
///
/// A term is forbidden exactly when it acts nontrivially on at least one lab
/// and every lab it touches carries a nontrivial output index. Such a term
/// survives for some product of channels and would shift the total
/// probability away from one; any other term is annihilated by every product
/// of trace-preserving maps.
pub fn term_allowed(t: &TermIndex, layout: &PartyLayout) -> Result<bool> {
    let factors = layout.factors();
    if t.0.len() != factors.len() {
        return Err(Error::TermLength {
            expected: factors.len(),
            found: t.0.len(),
        });
    }
    for (f, (&a, &d)) in t.0.iter().zip(&factors).enumerate() {
        if a >= d * d {
            return Err(Error::TermValue {
                factor: f,
                index: a,
                size: d * d,
            });
        }
    }
    Ok(term_allowed_unchecked(&t.0, layout))
}

fn term_allowed_unchecked(idx: &[usize], layout: &PartyLayout) -> bool {
    let k = layout.factors_per_lab();
    let outputs = layout.lab_output_positions();
    let mut touched = false;
    for lab in idx.chunks(k) {
        if lab.iter().all(|&a| a == 0) {
            continue;
        }
        touched = true;
        if !outputs.iter().any(|&o| lab[o] > 0) {
            return true;
        }
    }
    !touched
}

/// Allowed/forbidden flags in the dense term order of [`HsDecomposition`].
pub fn allowed_mask(layout: &PartyLayout) -> Vec<bool> {
    let template = HsDecomposition::zeros(&layout.factors());
    (0..template.len())
        .map(|k| term_allowed_unchecked(&template.term_index(k).0, layout))
        .collect()
}

/// `sqrt(Σ forbidden coeff²)` together with the forbidden terms sorted by
/// decreasing magnitude (those above `threshold`).
pub fn forbidden_terms(coeffs: &HsDecomposition, layout: &PartyLayout, threshold: f64) -> (f64, Vec<(TermIndex, f64)>) {
    let mask = allowed_mask(layout);
    let mut norm2 = 0.0;
    let mut terms = Vec::new();
    for (k, (&c, &ok)) in coeffs.coeffs().iter().zip(&mask).enumerate() {
        if !ok {
            norm2 += c * c;
            if c.abs() > threshold {
                terms.push((coeffs.term_index(k), c));
            }
        }
    }
    terms.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
    (norm2.sqrt(), terms)
}

/// Forbidden-coefficient norm of an arbitrary operator on `layout`.
pub fn forbidden_norm(m: &CMatrix, layout: &PartyLayout) -> Result<f64> {
    layout.check_dim(m.dim())?;
    let m = m.clone().with_factors(layout.factors())?;
    Ok(forbidden_terms(&hs_decompose_unchecked(&m.hermitian_part()), layout, f64::INFINITY).0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidityReport {
    pub hermitian: bool,
    pub hermitian_deviation: f64,
    pub min_eig: f64,
    pub trace: f64,
    pub expected_trace: f64,
    pub trace_dev: f64,
    pub forbidden_norm: f64,
    /// Forbidden terms above tolerance, largest first.
    pub forbidden: Vec<(TermIndex, f64)>,
    pub valid: bool,
}

/// Checks positivity, normalization and the forbidden-term constraints.
/// Spectral and expansion quantities are computed on the Hermitian part.
pub fn validate_process(w: &ProcessMatrix, tol: f64) -> ValidityReport {
    let hermitian_deviation = w.mat.hermitian_deviation();
    let hermitian = hermitian_deviation <= HERMITIAN_TOL.max(tol);
    let h = w.mat.hermitian_part();
    let min_eig = h.hermitian_eigenvalues().first().copied().unwrap_or(0.0);
    let tr = w.mat.trace();
    let expected_trace = w.layout.total_output_dim() as f64;
    let trace_dev = (tr - C64::new(expected_trace, 0.0)).norm();
    let coeffs = hs_decompose_unchecked(&h);
    let (forbidden_norm, forbidden) = forbidden_terms(&coeffs, &w.layout, tol);
    let valid = hermitian && min_eig >= -tol && trace_dev <= tol && forbidden_norm <= tol;
    ValidityReport {
        hermitian,
        hermitian_deviation,
        min_eig,
        trace: tr.re,
        expected_trace,
        trace_dev,
        forbidden_norm,
        forbidden,
        valid,
    }
}

/// Contracts the last lab block of `x` against `m`:
/// `out[a, b] = Σ_{u,v} x[(a,u), (b,v)] m[v, u]`.
fn contract_last(x: &DMatrix<C64>, m: &DMatrix<C64>) -> DMatrix<C64> {
    let b = m.nrows();
    let rest = x.nrows() / b;
    DMatrix::from_fn(rest, rest, |r, c| {
        let mut acc = C64::new(0.0, 0.0);
        for u in 0..b {
            for v in 0..b {
                acc += x[(r * b + u, c * b + v)] * m[(v, u)];
            }
        }
        acc
    })
}

/// `Tr[W (M_1 ⊗ … ⊗ M_n)]` for one operator per lab, in lab order.
pub fn born_value(w: &CMatrix, layout: &PartyLayout, ms: &[&CMatrix]) -> Result<C64> {
    layout.check_dim(w.dim())?;
    if ms.len() != layout.n_parties {
        return Err(Error::DimensionMismatch {
            expected: layout.n_parties,
            found: ms.len(),
        });
    }
    for m in ms {
        if m.dim() != layout.lab_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.lab_dim(),
                found: m.dim(),
            });
        }
    }
    let mut x = w.matrix().clone();
    for m in ms.iter().rev() {
        x = contract_last(&x, m.matrix());
    }
    Ok(x[(0, 0)])
}

/// Generalized Born rule: the probability of jointly realizing the given
/// instrument elements, one per lab (in lab order).
pub fn born_probability(w: &ProcessMatrix, ms: &[ChoiMap]) -> Result<f64> {
    let refs: Vec<&CMatrix> = ms.iter().map(|m| &m.mat).collect();
    Ok(born_value(&w.mat, &w.layout, &refs)?.re)
}

/// Process seen by the labs in `keep_labs` when the others are discarded:
/// their factors are traced out and the result is divided by their total
/// output dimension (equivalently, the discarded labs apply the completely
/// depolarizing channel).
pub fn reduced_process(w: &ProcessMatrix, keep_labs: &[usize]) -> Result<ProcessMatrix> {
    let mut keep = keep_labs.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let n = w.layout.n_parties;
    if let Some(&bad) = keep.iter().find(|&&l| l >= n) {
        return Err(Error::LabIndexOutOfRange { index: bad, count: n });
    }
    let factors: Vec<usize> = keep.iter().flat_map(|&l| w.layout.lab_factor_range(l)).collect();
    let discarded = (n - keep.len()) as u32;
    let scale = 1.0 / (w.layout.lab_output_dim().pow(discarded) as f64);
    let mat = w.mat.partial_trace(&factors)?.scale(scale);
    ProcessMatrix::new(mat, w.layout.with_parties(keep.len()))
}

#[cfg(test)]
mod tests {
    use super::fixtures::{self, ket};
    use super::*;
    use crate::linalg::{hs_basis, hs_compose, kron_all};

    fn term(idx: &[usize]) -> TermIndex {
        TermIndex(idx.to_vec())
    }

    fn pauli_process(idx: &[usize], weight: f64) -> ProcessMatrix {
        let b = hs_basis(2).unwrap();
        let ops: Vec<&CMatrix> = idx.iter().map(|&i| &b.ops[i]).collect();
        let t = kron_all(ops).unwrap();
        let id = CMatrix::identity(&[2, 2, 2, 2]);
        ProcessMatrix::new((&id + &t.scale(weight)).scale(0.25), PartyLayout::qubits(2)).unwrap()
    }

    #[test]
    fn bipartite_forbidden_list() {
        let l = PartyLayout::qubits(2);
        // A_I alone, A_I A_O B_I: allowed
        assert!(term_allowed(&term(&[3, 0, 0, 0]), &l).unwrap());
        assert!(term_allowed(&term(&[3, 3, 3, 0]), &l).unwrap());
        // A_O, A_I A_O: forbidden
        assert!(!term_allowed(&term(&[0, 1, 0, 0]), &l).unwrap());
        assert!(!term_allowed(&term(&[1, 1, 0, 0]), &l).unwrap());
        for t in [
            [0, 0, 0, 1],
            [0, 1, 0, 1],
            [1, 1, 0, 1],
            [0, 1, 1, 1],
            [1, 1, 1, 1],
            [0, 0, 2, 3],
        ] {
            assert!(!term_allowed(&term(&t), &l).unwrap(), "{t:?}");
        }
        for t in [[0, 0, 0, 0], [0, 2, 1, 0], [1, 0, 0, 2], [1, 0, 1, 0], [2, 0, 1, 1]] {
            assert!(term_allowed(&term(&t), &l).unwrap(), "{t:?}");
        }
        assert!(matches!(
            term_allowed(&term(&[0, 0, 0]), &l),
            Err(Error::TermLength { .. })
        ));
    }

    #[test]
    fn identity_process_valid() {
        let w = fixtures::identity(&PartyLayout::qubits(2));
        let r = validate_process(&w, DEFAULT_TOL);
        assert!(r.valid, "{r:?}");
        assert!((r.trace - 4.0).abs() < 1e-12);
    }

    #[test]
    fn negative_process_invalid() {
        let r = validate_process(&pauli_process(&[3, 0, 0, 0], 2.0), DEFAULT_TOL);
        assert!(!r.valid);
        assert!((r.min_eig + 0.25).abs() < 1e-12);
        assert!(r.forbidden_norm < 1e-15);
    }

    #[test]
    fn forbidden_term_invalid_and_named() {
        let r = validate_process(&pauli_process(&[1, 1, 0, 0], 1.0), DEFAULT_TOL);
        assert!(!r.valid);
        assert!(r.min_eig >= -1e-12);
        assert_eq!(r.forbidden, vec![(term(&[1, 1, 0, 0]), 0.25)]);
    }

    #[test]
    fn born_rule_recovers_state_measurement() {
        // single lab: W = ρ ⊗ 1, measurement of Π with the output discarded
        let l = PartyLayout::qubits(1);
        let rho = ket(&[0.6, 0.8]);
        let w = ProcessMatrix::new(kron_all([&rho, &CMatrix::identity(&[2])]).unwrap(), l).unwrap();
        let pi = ket(&[1.0, 0.0]);
        let m = ChoiMap::new(kron_all([&pi, &CMatrix::identity(&[2]).scale(0.5)]).unwrap(), 0).unwrap();
        assert!((born_probability(&w, &[m]).unwrap() - 0.36).abs() < 1e-14);
    }

    #[test]
    fn born_rule_cptp_normalization() {
        let w = fixtures::branciard();
        for seed in 0..10 {
            let ms = [random_cptp(2, 2, seed).unwrap(), random_cptp(2, 2, seed + 100).unwrap()];
            assert!((born_probability(&w, &ms).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn born_rule_matches_dense_trace() {
        let w = fixtures::branciard();
        let a = random_instrument(2, 2, 2, 5).unwrap();
        let b = random_instrument(2, 2, 3, 6).unwrap();
        let mut total = 0.0;
        for ea in &a.elements {
            for eb in &b.elements {
                let p = born_probability(&w, &[ea.clone(), eb.clone()]).unwrap();
                let dense = w
                    .matrix()
                    .trace_product(&crate::linalg::kron(&ea.mat, &eb.mat))
                    .unwrap();
                assert!((p - dense.re).abs() < 1e-13);
                assert!(p >= -1e-12);
                total += p;
            }
        }
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn born_dimension_mismatch() {
        let w = fixtures::identity(&PartyLayout::qubits(2));
        let m = random_cptp(2, 2, 0).unwrap();
        assert!(born_probability(&w, std::slice::from_ref(&m)).is_err());
        let big = random_cptp(3, 2, 0).unwrap();
        assert!(born_probability(&w, &[m, big]).is_err());
    }

    #[test]
    fn reduced_identity() {
        let w = fixtures::identity(&PartyLayout::qubits(3));
        let r = reduced_process(&w, &[0, 2]).unwrap();
        assert_eq!(r.layout(), &PartyLayout::qubits(2));
        assert!(r.matrix().max_diff(&CMatrix::identity(&[2, 2, 2, 2]).scale(0.25)) < 1e-15);
        assert!(matches!(reduced_process(&w, &[]), Err(Error::EmptyKeepSet)));
        assert!(reduced_process(&w, &[3]).is_err());
    }

    #[test]
    fn reduced_channel_marginal() {
        let w = fixtures::channel(&ket(&[1.0, 0.0]), &identity_channel(2)).unwrap();
        let r = reduced_process(&w, &[1]).unwrap();
        // Tr_A[ρ ⊗ φ⁺ ⊗ 1] = 1 ⊗ 1, divided by d_out(A) = 2
        assert!(r.matrix().max_diff(&CMatrix::identity(&[2, 2]).scale(0.5)) < 1e-15);
        assert!(validate_process(&r, DEFAULT_TOL).valid);
    }

    #[test]
    fn reduced_random_processes_stay_valid() {
        let l = PartyLayout::qubits(3);
        for seed in 0..10 {
            let w = fixtures::random_process(&l, seed).unwrap();
            assert!(validate_process(&w, DEFAULT_TOL).valid);
            let r = reduced_process(&w, &[0, 1]).unwrap();
            assert!(validate_process(&r, DEFAULT_TOL).valid, "seed {seed}");
        }
    }

    #[test]
    fn forbidden_norm_of_composed_terms() {
        let l = PartyLayout::qubits(2);
        let c = HsDecomposition::from_terms(&l.factors(), [(term(&[0, 0, 0, 0]), 0.25), (term(&[0, 3, 0, 3]), 0.1)])
            .unwrap();
        assert!((forbidden_norm(&hs_compose(&c), &l).unwrap() - 0.1).abs() < 1e-15);
    }
}
