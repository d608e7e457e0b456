//! Deterministic example processes.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{allowed_mask, ProcessMatrix};
use crate::error::{Error, Result};
use crate::linalg::{hs_compose, hs_decompose_unchecked, kron_all, CMatrix, HsDecomposition, PartyLayout, TermIndex};

/// Coefficients `a'` of the bipartite causally indefinite qubit process.
pub const BRANCIARD_COEFFS: [f64; 5] = [0.0390, 0.3355, 0.2451, 0.4291, 0.2097];

const X: usize = 1;
const Y: usize = 2;
const Z: usize = 3;

/// Normalized projector onto a real vector.
pub fn ket(amplitudes: &[f64]) -> CMatrix {
    let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
    let v: Vec<C64> = amplitudes.iter().map(|a| C64::new(a / norm, 0.0)).collect();
    CMatrix::outer(&v, &[v.len()]).expect("length matches")
}

/// Expansion terms of the causally indefinite bipartite qubit process,
/// including the overall `1/4`.
pub fn branciard_terms(a: [f64; 5]) -> Vec<(TermIndex, f64)> {
    let t = |idx: [usize; 4], c: f64| (TermIndex(idx.to_vec()), c / 4.0);
    vec![
        t([0, 0, 0, 0], 1.0),
        t([Z, 0, Z, 0], a[0]),
        t([Z, 0, 0, 0], -a[1]),
        t([0, 0, Z, 0], -a[1]),
        t([Z, 0, 0, Z], -a[2]),
        t([0, Z, Z, 0], -a[2]),
        t([Z, 0, Z, Z], a[3]),
        t([Z, Z, Z, 0], a[3]),
        t([Z, 0, X, X], a[4]),
        t([Z, 0, Y, Y], -a[4]),
        t([X, X, Z, 0], a[4]),
        t([Y, Y, Z, 0], -a[4]),
    ]
}

pub fn branciard_with(a: [f64; 5]) -> ProcessMatrix {
    let layout = PartyLayout::qubits(2);
    let coeffs = HsDecomposition::from_terms(&layout.factors(), branciard_terms(a)).expect("valid term indices");
    ProcessMatrix::new(hs_compose(&coeffs), layout).expect("qubit layout")
}

/// The permutation-invariant, causally indefinite bipartite qubit process.
pub fn branciard() -> ProcessMatrix {
    branciard_with(BRANCIARD_COEFFS)
}

fn channel_parts(rho: &CMatrix, t: &CMatrix) -> Result<(PartyLayout, CMatrix)> {
    let d_in = rho.dim();
    if t.factors().len() != 2 || t.factors()[1] != d_in {
        return Err(Error::Format {
            field: "channel".into(),
            message: format!(
                "channel factors {:?} must end in the input dimension {d_in}",
                t.factors()
            ),
        });
    }
    let d_out = t.factors()[0];
    let layout = PartyLayout::new(2, d_in, d_out)?;
    let rho = rho.clone().with_factors(vec![d_in])?;
    let w = kron_all([&rho, t, &CMatrix::identity(&[d_out])]).expect("nonempty");
    Ok((layout, w))
}

/// `ρ^{A_I} T^{A_O B_I} 1^{B_O}`: a state prepared for A, whose output is
/// sent to B through the channel with (unnormalized, untransposed) Choi
/// operator `t` on `A_O ⊗ B_I`.
pub fn channel(rho: &CMatrix, t: &CMatrix) -> Result<ProcessMatrix> {
    let (layout, w) = channel_parts(rho, t)?;
    ProcessMatrix::new(w, layout)
}

/// Equal mixture of the channel process and its mirror image
/// `ρ^{B_I} T^{B_O A_I} 1^{A_O}`.
pub fn channel_mix(rho: &CMatrix, t: &CMatrix) -> Result<ProcessMatrix> {
    let (layout, w) = channel_parts(rho, t)?;
    // factors of `w` read as (B_I, B_O, A_I, A_O); bring to (A_I, A_O, B_I, B_O)
    let mirrored = w.permute_factors(&[2, 3, 0, 1])?;
    let mat = (&w + &mirrored).scale(0.5);
    ProcessMatrix::new(mat, layout)
}

/// The normalized identity process `1 · ∏d_out / dim`.
pub fn identity(layout: &PartyLayout) -> ProcessMatrix {
    let scale = layout.total_output_dim() as f64 / layout.dim() as f64;
    ProcessMatrix::new(CMatrix::identity(&layout.factors()).scale(scale), layout.clone()).expect("layout dims")
}

/// Random valid process: the identity process plus a random Hermitian
/// perturbation restricted to allowed traceless terms, scaled to keep the
/// spectrum strictly positive.
pub fn random_process(layout: &PartyLayout, seed: u64) -> Result<ProcessMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = layout.factors();
    let g = CMatrix::from_fn(&factors, |_, _| {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        C64::new(a, b)
    });
    let mut coeffs = hs_decompose_unchecked(&g.hermitian_part());
    let mask = allowed_mask(layout);
    for (c, &ok) in coeffs.coeffs_mut().iter_mut().zip(&mask) {
        if !ok {
            *c = 0.0;
        }
    }
    coeffs.coeffs_mut()[0] = 0.0;
    let y = hs_compose(&coeffs);
    let spread = y.hermitian_eigenvalues().iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let base = identity(layout);
    let floor = base.matrix().get(0, 0).re;
    let strength: f64 = rng.random_range(0.1..0.99);
    let w = &base.into_matrix() + &y.scale(strength * floor / spread.max(f64::MIN_POSITIVE));
    ProcessMatrix::new(w, layout.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hs_decompose;
    use crate::process::{identity_channel, validate_process, DEFAULT_TOL};

    #[test]
    fn branciard_trace_and_coefficient() {
        let w = branciard();
        assert!((w.matrix().trace().re - 4.0).abs() < 1e-12);
        let c = hs_decompose(w.matrix()).unwrap();
        let zz = c.get(&TermIndex(vec![3, 0, 3, 0])).unwrap();
        assert!((zz - 0.00975).abs() < 1e-15);
        assert!((c.get(&TermIndex(vec![2, 2, 3, 0])).unwrap() + 0.2097 / 4.0).abs() < 1e-15);
        assert_eq!(c.nonzero(1e-14).len(), 12);
    }

    #[test]
    fn branciard_rounding_leaves_small_negative_eigenvalue() {
        // the four-decimal coefficients sit just outside the positive cone;
        // reference value from an independent numpy eigensolve
        let r = validate_process(&branciard(), DEFAULT_TOL);
        assert!(r.hermitian && r.trace_dev < 1e-12 && r.forbidden_norm < 1e-12);
        assert!((r.min_eig + 1.494_324_073_16e-5).abs() < 1e-12, "{}", r.min_eig);
        assert!(!r.valid);
        // shrinking the coefficients by 1e-4 (below their printed precision) restores positivity
        let a = BRANCIARD_COEFFS.map(|x| x * (1.0 - 1e-4));
        assert!(validate_process(&branciard_with(a), DEFAULT_TOL).valid);
    }

    #[test]
    fn channel_fixture_valid() {
        let w = channel(&ket(&[1.0, 0.0]), &identity_channel(2)).unwrap();
        assert!(validate_process(&w, DEFAULT_TOL).valid);
        let m = channel_mix(&ket(&[1.0, 0.0]), &identity_channel(2)).unwrap();
        assert!(validate_process(&m, DEFAULT_TOL).valid);
        assert!(channel(&ket(&[1.0, 0.0, 0.0]), &identity_channel(2)).is_err());
    }

    #[test]
    fn random_processes_valid() {
        for n in 1..=3 {
            for seed in 0..5 {
                let w = random_process(&PartyLayout::qubits(n), seed).unwrap();
                let r = validate_process(&w, DEFAULT_TOL);
                assert!(r.valid, "n={n} seed={seed} {r:?}");
                assert!(r.min_eig > 0.0);
            }
        }
        let l = PartyLayout::new(2, 3, 2).unwrap();
        assert!(validate_process(&random_process(&l, 3).unwrap(), DEFAULT_TOL).valid);
    }
}
