//! Monte-Carlo normalization oracle.
//!
//! Evaluates `|Tr[W ⊗M_j] - 1|` over products of local CPTP maps: a fixed
//! grid of deterministic probes followed by seeded random channels. The
//! oracle never looks at the expansion terms of `W`, which makes it an
//! independent check of [`term_allowed`](super::term_allowed).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::choi::{depolarizing_channel, identity_channel, kraus_choi, preparation_channel, random_lab_cptp};
use super::{born_value, ProcessMatrix};
use crate::error::Result;
use crate::linalg::{kron, CMatrix, PartyLayout};

/// Upper bound on the size of the full product grid of probes.
const MAX_PROBE_GRID: usize = 20_000;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Discrete Fourier transform and quadratic phase gate on `d` levels; for
/// qubits these are the Hadamard and `S` gates.
fn fourier(d: usize) -> DMatrix<C64> {
    let s = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(d, d, |j, k| {
        C64::from_polar(s, 2.0 * std::f64::consts::PI * (j * k) as f64 / d as f64)
    })
}

fn phase(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |j, k| {
        if j == k {
            C64::from_polar(1.0, std::f64::consts::PI * (j * j) as f64 / d as f64)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Deterministic CPTP probes `d_in → d_out`.
///
/// Contains the completely depolarizing channel, the identity channel and a
/// few Clifford-like unitary channels (when `d_in == d_out`), and
/// preparations of `|0⟩`, `|+⟩` and `|+i⟩`.
pub fn probe_channels(d_in: usize, d_out: usize) -> Vec<CMatrix> {
    let mut out = vec![depolarizing_channel(d_in, d_out)];
    if d_in == d_out {
        out.push(identity_channel(d_in));
        if d_in > 1 {
            let f = fourier(d_in);
            let s = phase(d_in);
            for u in [f.clone(), s.clone(), &f * &s, &s * &f] {
                out.push(kraus_choi(&[u], d_in, d_out));
            }
        }
    }
    if d_out > 1 {
        let mut zero = vec![c(0.0, 0.0); d_out];
        zero[0] = c(1.0, 0.0);
        let mut plus = zero.clone();
        plus[1] = c(1.0, 0.0);
        let mut plus_i = zero.clone();
        plus_i[1] = c(0.0, 1.0);
        for psi in [zero, plus, plus_i] {
            out.push(preparation_channel(d_in, &psi));
        }
    }
    out
}

/// Probe channels on a whole lab block: system probes tensored with frame
/// probes when the layout carries a frame.
fn lab_probes(layout: &PartyLayout) -> Vec<CMatrix> {
    let system = probe_channels(layout.d_in, layout.d_out);
    match layout.frame {
        None => system,
        Some(f) => {
            let frame = probe_channels(f.d_frame_in, f.d_frame_out);
            let mut out = Vec::new();
            for s in &system {
                for r in &frame {
                    // kron order (S_I, S_O, R_I, R_O) is already lab order
                    out.push(kron(s, r));
                }
            }
            out
        }
    }
}

/// Index tuples of probes to evaluate, one probe index per lab.
fn probe_grid(n: usize, count: usize) -> Vec<Vec<usize>> {
    let full = count.checked_pow(n as u32).filter(|&t| t <= MAX_PROBE_GRID);
    if let Some(total) = full {
        return (0..total)
            .map(|mut k| {
                let mut idx = vec![0; n];
                for slot in idx.iter_mut().rev() {
                    *slot = k % count;
                    k /= count;
                }
                idx
            })
            .collect();
    }
    // too many labs: vary one lab at a time around two fixed backgrounds
    // (probe 0 = depolarizing everywhere, probe 1 = identity everywhere)
    let mut grid = Vec::new();
    for background in 0..count.min(2) {
        grid.push(vec![background; n]);
        for lab in 0..n {
            for p in 0..count {
                let mut idx = vec![background; n];
                idx[lab] = p;
                grid.push(idx);
            }
        }
    }
    grid
}

/// Largest normalization deviation `|Tr[W ⊗M_j] - 1|` over the
/// deterministic probe grid and `samples` products of random CPTP maps.
///
/// The probe grid always contains the all-depolarizing product, the
/// all-identity product and every identity-on-one-lab combination.
pub fn mc_normalization_oracle(w: &ProcessMatrix, samples: usize, seed: u64) -> Result<f64> {
    let layout = w.layout();
    let n = layout.n_parties;
    let probes: Vec<CMatrix> = lab_probes(layout)
        .into_iter()
        .map(|p| p.with_factors(layout.lab_factors()))
        .collect::<Result<_>>()?;
    let grid = probe_grid(n, probes.len());
    let probe_dev = grid
        .par_iter()
        .map(|idx| {
            let ms: Vec<&CMatrix> = idx.iter().map(|&k| &probes[k]).collect();
            born_value(w.matrix(), layout, &ms).map(|v| (v - c(1.0, 0.0)).norm())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    let random_dev = (0..samples)
        .into_par_iter()
        .map(|s| {
            let ms = (0..n)
                .map(|lab| {
                    let stream = seed
                        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                        .wrapping_add((s * n + lab) as u64);
                    random_lab_cptp(layout, lab, stream).map(|m| m.mat)
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&CMatrix> = ms.iter().collect();
            born_value(w.matrix(), layout, &refs).map(|v| (v - c(1.0, 0.0)).norm())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(probe_dev.max(random_dev))
}
