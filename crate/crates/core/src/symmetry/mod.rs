//! Party permutations acting on process space: the symmetric group, the
//! twirl, invariance tests and the sign sectors.

mod sector;

use itertools::Itertools;

pub use sector::{
    charge_components, product_invariance_check, sector_basis, sector_feasibility, sector_partial_trace_check,
    sector_projector, ChargeSplit, FeasibilityReport, ProductInvariance, SectorLabel, SectorProjector, FEASIBILITY_TOL,
};

use crate::error::{Error, Result};
use crate::linalg::{conjugate, CMatrix, PartyLayout, Permutation};

/// Largest party count accepted by [`enumerate_sn`].
pub const MAX_PARTIES: usize = 6;

/// All `n!` elements of `S_n` in lexicographic order of their image lists.
pub fn enumerate_sn(n: usize) -> Result<Vec<Permutation>> {
    if !(1..=MAX_PARTIES).contains(&n) {
        return Err(Error::PartyCount(n));
    }
    Ok((0..n)
        .permutations(n)
        .map(|image| Permutation::new(image).expect("itertools yields permutations"))
        .collect())
}

/// Group average `(1/n!) Σ_g U_g a U_g†`. Terms are summed in the order of
/// [`enumerate_sn`], so the result is bit-stable.
pub fn twirl(a: &CMatrix, layout: &PartyLayout) -> Result<CMatrix> {
    layout.check_dim(a.dim())?;
    let group = enumerate_sn(layout.n_parties)?;
    let mut acc = CMatrix::zeros(a.factors());
    for g in &group {
        acc = &acc + &conjugate(a, g, layout)?;
    }
    Ok(acc.scale(1.0 / group.len() as f64))
}

/// `‖U_g a U_g† − a‖_max` for every `g ∈ S_n`.
pub fn invariance_deviations(a: &CMatrix, layout: &PartyLayout) -> Result<Vec<(Permutation, f64)>> {
    layout.check_dim(a.dim())?;
    enumerate_sn(layout.n_parties)?
        .into_iter()
        .map(|g| {
            let dev = conjugate(a, &g, layout)?.max_diff(a);
            Ok((g, dev))
        })
        .collect()
}

pub fn is_invariant(a: &CMatrix, layout: &PartyLayout, tol: f64) -> Result<bool> {
    Ok(invariance_deviations(a, layout)?.iter().all(|(_, d)| *d <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{fixtures, identity_channel};

    #[test]
    fn group_sizes_and_signs() {
        assert_eq!(enumerate_sn(1).unwrap(), vec![Permutation::identity(1)]);
        let s2 = enumerate_sn(2).unwrap();
        assert_eq!(s2.iter().map(Permutation::sign).collect::<Vec<_>>(), vec![1, -1]);
        let s3 = enumerate_sn(3).unwrap();
        assert_eq!(s3.len(), 6);
        assert_eq!(s3.iter().filter(|g| g.sign() == -1).count(), 3);
        assert!(s3.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_sn(6).unwrap().len(), 720);
        assert!(enumerate_sn(0).is_err() && enumerate_sn(7).is_err());
    }

    #[test]
    fn twirl_of_identity_and_branciard() {
        let l = PartyLayout::qubits(2);
        let id = fixtures::identity(&l);
        assert!(twirl(id.matrix(), &l).unwrap().max_diff(id.matrix()) < 1e-15);
        let b = fixtures::branciard();
        assert!(twirl(b.matrix(), &l).unwrap().max_diff(b.matrix()) < 1e-15);
        assert!(is_invariant(b.matrix(), &l, 1e-12).unwrap());
    }

    #[test]
    fn twirl_of_channel_is_channel_mix() {
        let rho = fixtures::ket(&[1.0, 0.0]);
        let t = identity_channel(2);
        let w = fixtures::channel(&rho, &t).unwrap();
        let mix = fixtures::channel_mix(&rho, &t).unwrap();
        let l = w.layout().clone();
        assert!(!is_invariant(w.matrix(), &l, 1e-9).unwrap());
        let tw = twirl(w.matrix(), &l).unwrap();
        assert_eq!(tw, *mix.matrix());
        assert!(is_invariant(&tw, &l, 0.0).unwrap());
    }

    #[test]
    fn deviation_table_lists_group() {
        let l = PartyLayout::qubits(3);
        let w = fixtures::random_process(&l, 4).unwrap();
        let table = invariance_deviations(w.matrix(), &l).unwrap();
        assert_eq!(table.len(), 6);
        assert_eq!(table[0].1, 0.0);
        assert!(table[1..].iter().any(|(_, d)| *d > 1e-6));
    }

    #[test]
    fn dimension_mismatch() {
        let l = PartyLayout::qubits(2);
        assert!(twirl(&CMatrix::identity(&[8]), &l).is_err());
    }
}
