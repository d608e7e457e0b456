//! Material reference frames.
//!
//! Every lab receives a reference system `R` alongside its system `S`. The
//! map `R(·)` attaches the frame state `[0 1 … n−1]` (lab `j` holds `|j⟩`)
//! and averages over joint relabellings of system and frame, which turns
//! arbitrary processes and instruments into permutation-invariant ones
//! without changing any probability.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::linalg::{conjugate, kron, kron_all, CMatrix, FrameDims, PartyLayout, Permutation};
use crate::process::{validate_process, Instrument, ProcessMatrix, DEFAULT_TOL};
use crate::symmetry::enumerate_sn;

/// A system layout extended by one reference system per lab: an
/// `n`-dimensional input `R_I` and a `d_frame_out`-dimensional output `R_O`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FramedLayout {
    pub base: PartyLayout,
    pub d_frame_out: usize,
}

impl FramedLayout {
    pub fn new(base: PartyLayout, d_frame_out: usize) -> Result<Self> {
        if base.frame.is_some() {
            return Err(Error::Unsupported("base layout already carries a frame".into()));
        }
        if d_frame_out == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(Self { base, d_frame_out })
    }

    /// Frame with a trivial (one-dimensional) output.
    pub fn trivial_output(base: PartyLayout) -> Result<Self> {
        Self::new(base, 1)
    }

    pub fn d_frame_in(&self) -> usize {
        self.base.n_parties
    }

    pub fn n_parties(&self) -> usize {
        self.base.n_parties
    }

    /// Full layout with factors `S_I, S_O, R_I, R_O` per lab.
    pub fn layout(&self) -> PartyLayout {
        self.base
            .clone()
            .with_frame(FrameDims {
                d_frame_in: self.d_frame_in(),
                d_frame_out: self.d_frame_out,
            })
            .expect("frame dimensions are positive")
    }
}

/// `a ⊗ ([0]⊗s·1 ⊗ [1]⊗s·1 ⊗ …)` with factors regrouped lab by lab.
fn attach_frame(a: &CMatrix, framed: &FramedLayout, output_scale: f64) -> Result<CMatrix> {
    framed.base.check_dim(a.dim())?;
    let n = framed.n_parties();
    let ro = CMatrix::identity(&[framed.d_frame_out]).scale(output_scale);
    let refs: Vec<CMatrix> = (0..n).map(|j| kron(&CMatrix::basis_projector(n, j), &ro)).collect();
    let frame = kron_all(&refs).expect("at least one party");
    let a = a.clone().with_factors(framed.base.factors())?;
    let joint = kron(&a, &frame);
    // joint factors: S blocks (2 per lab) then R blocks (2 per lab)
    let order: Vec<usize> = (0..n)
        .flat_map(|j| [2 * j, 2 * j + 1, 2 * n + 2 * j, 2 * n + 2 * j + 1])
        .collect();
    joint.permute_factors(&order)
}

fn r_map_scaled(a: &CMatrix, framed: &FramedLayout, output_scale: f64) -> Result<CMatrix> {
    let layout = framed.layout();
    let x = attach_frame(a, framed, output_scale)?;
    let mut acc = CMatrix::zeros(x.factors());
    for g in enumerate_sn(framed.n_parties())? {
        acc = &acc + &conjugate(&x, &g, &layout)?;
    }
    Ok(acc)
}

/// `R(a) = Σ_g U_g (a ⊗ [01…n−1]^{R_I} ⊗ 1^{R_O}) U_g†`, with `U_g` moving
/// each lab's system and frame together.
pub fn r_map(a: &CMatrix, framed: &FramedLayout) -> Result<CMatrix> {
    r_map_scaled(a, framed, 1.0)
}

fn invariant_process_unchecked(w: &ProcessMatrix, framed: &FramedLayout) -> Result<ProcessMatrix> {
    if *w.layout() != framed.base {
        return Err(Error::Unsupported(format!(
            "process layout {:?} does not match frame base {:?}",
            w.layout(),
            framed.base
        )));
    }
    let n_fact: usize = (1..=framed.n_parties()).product();
    let mat = r_map(w.matrix(), framed)?.scale(1.0 / n_fact as f64);
    ProcessMatrix::new(mat, framed.layout())
}

/// `W^inv = R(W) / n!`: a permutation-invariant process on the framed
/// layout. The input must pass [`validate_process`] at [`DEFAULT_TOL`].
pub fn invariant_process(w: &ProcessMatrix, framed: &FramedLayout) -> Result<ProcessMatrix> {
    let report = validate_process(w, DEFAULT_TOL);
    if !report.valid {
        return Err(Error::InvalidProcess(format!(
            "min_eig={:e} trace_dev={:e} forbidden_norm={:e}",
            report.min_eig, report.trace_dev, report.forbidden_norm
        )));
    }
    invariant_process_unchecked(w, framed)
}

/// One element of an invariant instrument, tagged with the joint outcome
/// `(i_1, …, i_n)` it stands for.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantInstrumentElement {
    pub mat: CMatrix,
    pub outcome: Vec<usize>,
}

fn check_instruments(ins_per_lab: &[Instrument], framed: &FramedLayout) -> Result<()> {
    let n = framed.n_parties();
    if ins_per_lab.len() != n {
        return Err(Error::InstrumentMismatch(format!(
            "{} instruments for {n} labs",
            ins_per_lab.len()
        )));
    }
    let expected = framed.base.lab_factors();
    for (lab, ins) in ins_per_lab.iter().enumerate() {
        let found = ins.elements[0].mat.factors();
        if found != expected.as_slice() {
            return Err(Error::InstrumentMismatch(format!(
                "lab {lab} has factors {found:?}, expected {expected:?}"
            )));
        }
    }
    Ok(())
}

fn joint_product(ins_per_lab: &[Instrument], outcome: &[usize]) -> CMatrix {
    let locals: Vec<&CMatrix> = ins_per_lab
        .iter()
        .zip(outcome)
        .map(|(ins, &i)| &ins.elements[i].mat)
        .collect();
    kron_all(locals).expect("at least one party")
}

fn outcomes(ins_per_lab: &[Instrument]) -> impl Iterator<Item = Vec<usize>> {
    ins_per_lab.iter().map(|ins| 0..ins.len()).multi_cartesian_product()
}

/// Completes local instruments into a permutation-invariant instrument on
/// the framed space:
///
/// `M^inv_i = R̃(M_{i_1} ⊗ … ⊗ M_{i_n}) + (1^{SR} − R(1^S)) / (N d_O)`
///
/// where `R̃` attaches `1^{R_O}/d_{R_O}` instead of `1^{R_O}`, `N` is the
/// number of joint outcomes and `d_O` the total output dimension of the
/// framed space. Elements come in the lexicographic order of outcomes.
pub fn invariant_instrument(
    ins_per_lab: &[Instrument],
    framed: &FramedLayout,
) -> Result<Vec<InvariantInstrumentElement>> {
    check_instruments(ins_per_lab, framed)?;
    let layout = framed.layout();
    let total: usize = ins_per_lab.iter().map(Instrument::len).product();
    let d_o = layout.total_output_dim() as f64;
    let r_one = r_map(&CMatrix::identity(&framed.base.factors()), framed)?;
    let completion = (&CMatrix::identity(&layout.factors()) - &r_one).scale(1.0 / (total as f64 * d_o));
    let ro_scale = 1.0 / framed.d_frame_out as f64;
    outcomes(ins_per_lab)
        .map(|outcome| {
            let product = joint_product(ins_per_lab, &outcome);
            let mat = &r_map_scaled(&product, framed, ro_scale)? + &completion;
            Ok(InvariantInstrumentElement { mat, outcome })
        })
        .collect()
}

/// Largest `|Tr[W^inv M^inv_i] − Tr[W (M_{i_1} ⊗ … ⊗ M_{i_n})]|` over all
/// joint outcomes.
pub fn born_preservation_check(w: &ProcessMatrix, ins_per_lab: &[Instrument], framed: &FramedLayout) -> Result<f64> {
    let w_inv = invariant_process_unchecked(w, framed)?;
    let elements = invariant_instrument(ins_per_lab, framed)?;
    let mut worst = 0.0f64;
    for el in &elements {
        let framed_p = w_inv.matrix().trace_product(&el.mat)?;
        let locals: Vec<&CMatrix> = ins_per_lab
            .iter()
            .zip(&el.outcome)
            .map(|(ins, &i)| &ins.elements[i].mat)
            .collect();
        let plain = crate::process::born_value(w.matrix(), w.layout(), &locals)?;
        worst = worst.max((framed_p - plain).norm());
    }
    Ok(worst)
}

/// Measures the frames in configuration `g` (lab `g(j)` holds `|j⟩`) and
/// traces them out, leaving an operator on the system labs. For an element
/// built from `M_{i_1} ⊗ … ⊗ M_{i_n}` this returns `U_g (⊗ M) U_g†`.
pub fn condition_on_frame(el: &InvariantInstrumentElement, g: &Permutation, framed: &FramedLayout) -> Result<CMatrix> {
    let layout = framed.layout();
    layout.check_dim(el.mat.dim())?;
    let n = framed.n_parties();
    if g.len() != n {
        return Err(Error::PermutationSize {
            perm: g.len(),
            parties: n,
        });
    }
    let reference = attach_frame(&CMatrix::identity(&framed.base.factors()), framed, 1.0)?;
    let q = conjugate(&reference, g, &layout)?;
    let projected = &(&q * &el.mat.clone().with_factors(layout.factors())?) * &q;
    let keep: Vec<usize> = (0..n).flat_map(|j| [4 * j, 4 * j + 1]).collect();
    projected.partial_trace(&keep)
}
