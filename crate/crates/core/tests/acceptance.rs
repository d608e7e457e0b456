//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails. Run with `cargo test -p procmat --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use itertools::Itertools;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use procmat::frame::{
    born_preservation_check, condition_on_frame, invariant_instrument, invariant_process, r_map, FramedLayout,
};
use procmat::linalg::{conjugate, hs_basis, kron_all, CMatrix, PartyLayout, TermIndex};
use procmat::process::{
    fixtures, forbidden_norm, identity_channel, mc_normalization_oracle, random_lab_instrument, term_allowed,
    validate_process, Instrument, ProcessMatrix, DEFAULT_TOL,
};
use procmat::symmetry::{
    charge_components, enumerate_sn, is_invariant, sector_feasibility, sector_partial_trace_check, sector_projector,
    twirl, SectorLabel,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_matrix(factors: &[usize], rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(factors, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        C64::new(a, b)
    })
}

fn all_fixtures() -> Vec<(&'static str, ProcessMatrix)> {
    let rho = fixtures::ket(&[1.0, 0.0]);
    let t = identity_channel(2);
    vec![
        ("identity", fixtures::identity(&PartyLayout::qubits(2))),
        ("channel", fixtures::channel(&rho, &t).unwrap()),
        ("channel_mix", fixtures::channel_mix(&rho, &t).unwrap()),
        ("branciard", fixtures::branciard()),
    ]
}

fn sector_dimensions() -> Outcome {
    let start = Instant::now();
    let l = PartyLayout::qubits(2);
    let plus = sector_projector(SectorLabel::Symmetric, &l).unwrap().rank();
    let minus = sector_projector(SectorLabel::Antisymmetric, &l).unwrap().rank();
    let elapsed = start.elapsed();
    outcome(
        plus == 10 && minus == 6 && elapsed < Duration::from_secs(1),
        format!("rank(P+)={plus} rank(P-)={minus} in {elapsed:.2?}"),
    )
}

fn no_go() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let start = Instant::now();
        for label in [SectorLabel::Symmetric, SectorLabel::Antisymmetric] {
            let r = sector_feasibility(label, &PartyLayout::qubits(n)).unwrap();
            pass &= r.max_trace <= 1e-10 && !r.feasible_flag;
            parts.push(format!("n={n} {label} max_trace={:.1e}", r.max_trace));
        }
        let elapsed = start.elapsed();
        if n == 3 {
            pass &= elapsed < Duration::from_secs(30);
        }
        parts.push(format!("n={n} in {elapsed:.2?}"));
    }
    outcome(pass, parts.join(", "))
}

fn fixture_validity() -> Outcome {
    let w = fixtures::branciard();
    let r = validate_process(&w, DEFAULT_TOL);
    let invariant = is_invariant(w.matrix(), w.layout(), 1e-12).unwrap();
    let pass = r.min_eig >= -1e-9 && r.trace_dev <= 1e-9 && r.forbidden_norm <= 1e-9 && invariant && r.valid;
    let mut detail = format!(
        "min_eig={:.4e} trace={} forbidden_norm={:.1e} invariant={invariant}",
        r.min_eig, r.trace, r.forbidden_norm
    );
    if !pass {
        let shrunk = fixtures::branciard_with(fixtures::BRANCIARD_COEFFS.map(|a| a * (1.0 - 1e-4)));
        let s = validate_process(&shrunk, DEFAULT_TOL);
        detail.push_str(&format!(
            "; the printed four-decimal coefficients leave a negative eigenvalue \
             (coefficients scaled by 1-1e-4: min_eig={:.3e}, valid={})",
            s.min_eig, s.valid
        ));
    }
    outcome(pass, detail)
}

fn charge_split() -> Outcome {
    let w = fixtures::branciard();
    let split = charge_components(&w).unwrap();
    let recon = (&split.plus + &split.minus).max_diff(w.matrix());
    let fp = forbidden_norm(&split.plus, w.layout()).unwrap();
    let fm = forbidden_norm(&split.minus, w.layout()).unwrap();
    outcome(
        recon <= 1e-12 && fp.max(fm) > 1e-6,
        format!("reconstruction={recon:.1e} forbidden(plus)={fp:.3e} forbidden(minus)={fm:.3e}"),
    )
}

fn term_rule_oracle() -> Outcome {
    let start = Instant::now();
    let layout = PartyLayout::qubits(2);
    let basis = hs_basis(2).unwrap();
    let identity = CMatrix::identity(&layout.factors());
    let mut pass = true;
    let mut allowed_types = 0;
    let mut worst_allowed = 0.0f64;
    let mut weakest_forbidden = f64::INFINITY;
    let mut checked = 0;
    for support in (0..4).powerset() {
        // every Pauli assignment on the support
        let choices: Vec<Vec<usize>> = (0..4)
            .map(|f| if support.contains(&f) { vec![1, 2, 3] } else { vec![0] })
            .collect();
        let mut type_allowed = None;
        for idx in choices.into_iter().multi_cartesian_product() {
            let t = TermIndex(idx.clone());
            let allowed = term_allowed(&t, &layout).unwrap();
            type_allowed = Some(allowed);
            let w = if support.is_empty() {
                identity.scale(0.25)
            } else {
                let term = kron_all(idx.iter().map(|&i| &basis.ops[i])).unwrap();
                (&identity + &term.scale(0.3)).scale(0.25)
            };
            let w = ProcessMatrix::new(w, layout.clone()).unwrap();
            checked += 1;
            if allowed {
                let dev = mc_normalization_oracle(&w, 1000, checked as u64).unwrap();
                worst_allowed = worst_allowed.max(dev);
                pass &= dev <= 1e-9;
            } else {
                let dev = mc_normalization_oracle(&w, 0, 0).unwrap();
                weakest_forbidden = weakest_forbidden.min(dev);
                pass &= dev >= 0.01;
            }
        }
        if type_allowed == Some(true) {
            allowed_types += 1;
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "16 supports ({allowed_types} allowed), {checked} terms: max allowed deviation={worst_allowed:.1e}, \
             min forbidden deviation={weakest_forbidden:.3} in {elapsed:.2?}"
        ),
    )
}

fn r_map_algebra() -> Outcome {
    let framed = FramedLayout::trivial_output(PartyLayout::qubits(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut lin, mut mul) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let a = random_matrix(&framed.base.factors(), &mut rng);
        let b = random_matrix(&framed.base.factors(), &mut rng);
        let (ra, rb) = (r_map(&a, &framed).unwrap(), r_map(&b, &framed).unwrap());
        lin = lin.max((&ra + &rb).max_diff(&r_map(&(&a + &b), &framed).unwrap()));
        mul = mul.max((&ra * &rb).max_diff(&r_map(&(&a * &b), &framed).unwrap()));
    }
    outcome(
        lin <= 1e-12 && mul <= 1e-12,
        format!("linearity={lin:.1e} multiplicativity={mul:.1e} (100 pairs each)"),
    )
}

fn random_instrument_sets(layout: &PartyLayout, count: usize, outcomes: usize, seed: u64) -> Vec<Vec<Instrument>> {
    (0..count as u64)
        .map(|s| {
            (0..layout.n_parties)
                .map(|lab| random_lab_instrument(layout, lab, outcomes, seed + 100 * s + lab as u64).unwrap())
                .collect()
        })
        .collect()
}

fn frame_round_trip() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut worst_born = 0.0f64;
    let mut worst_psd = 0.0f64;
    let mut worst_tp = 0.0f64;
    for (name, w) in all_fixtures() {
        let framed = FramedLayout::trivial_output(w.layout().clone()).unwrap();
        let layout = framed.layout();
        match invariant_process(&w, &framed) {
            Ok(w_inv) => {
                let valid = validate_process(&w_inv, DEFAULT_TOL).valid;
                pass &= valid;
                if !valid {
                    parts.push(format!("{name}: W_inv invalid"));
                }
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
        for set in random_instrument_sets(w.layout(), 10, 2, 77) {
            worst_born = worst_born.max(born_preservation_check(&w, &set, &framed).unwrap());
            let els = invariant_instrument(&set, &framed).unwrap();
            let mut sum = CMatrix::zeros(&layout.factors());
            for el in &els {
                worst_psd = worst_psd.max(-el.mat.hermitian_eigenvalues()[0]);
                sum = &sum + &el.mat;
            }
            let outputs: Vec<usize> = (0..layout.factors().len())
                .filter(|&k| layout.is_output_factor(k))
                .collect();
            let reduced = sum.trace_out(&outputs).unwrap();
            worst_tp = worst_tp.max(reduced.max_diff(&CMatrix::identity(reduced.factors())));
        }
    }
    pass &= worst_born <= 1e-10 && worst_psd <= 1e-12 && worst_tp <= 1e-12;
    parts.push(format!(
        "born={worst_born:.1e} psd_violation={worst_psd:.1e} tp={worst_tp:.1e}"
    ));
    outcome(pass, parts.join("; "))
}

fn conditioning_recovery() -> Outcome {
    let framed = FramedLayout::trivial_output(PartyLayout::qubits(2)).unwrap();
    let set = &random_instrument_sets(&framed.base, 1, 2, 5)[0];
    let els = invariant_instrument(set, &framed).unwrap();
    let mut worst = 0.0f64;
    for g in enumerate_sn(2).unwrap() {
        for el in &els {
            let locals: Vec<&CMatrix> = set
                .iter()
                .zip(&el.outcome)
                .map(|(ins, &i)| &ins.elements[i].mat)
                .collect();
            let product = kron_all(locals).unwrap().with_factors(framed.base.factors()).unwrap();
            let expected = conjugate(&product, &g, &framed.base).unwrap();
            worst = worst.max(condition_on_frame(el, &g, &framed).unwrap().max_diff(&expected));
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{} outcomes x 2 configurations, max deviation={worst:.1e}", els.len()),
    )
}

fn partial_trace_sectors() -> Outcome {
    let l = PartyLayout::qubits(3);
    let sym = sector_partial_trace_check(SectorLabel::Symmetric, &l, 50, 9).unwrap();
    let anti = sector_partial_trace_check(SectorLabel::Antisymmetric, &l, 50, 10).unwrap();
    outcome(
        sym && anti,
        format!("symmetric={sym} antisymmetric={anti} (50 trials each)"),
    )
}

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let layouts = [PartyLayout::qubits(2), PartyLayout::qubits(3)];
    let (mut idem, mut adj, mut block) = (0.0f64, 0.0f64, 0.0f64);
    let mut permuted_ok = 0;
    let instances = 50;
    let l2 = &layouts[0];
    let p = sector_projector(SectorLabel::Symmetric, l2).unwrap().proj;
    let q = sector_projector(SectorLabel::Antisymmetric, l2).unwrap().proj;
    for k in 0..instances {
        let l = &layouts[k % 2];
        let a = random_matrix(&l.factors(), &mut rng);
        let b = random_matrix(&l.factors(), &mut rng);
        let ta = twirl(&a, l).unwrap();
        idem = idem.max(twirl(&ta, l).unwrap().max_diff(&ta));
        let lhs = ta.trace_product(&b).unwrap();
        let rhs = a.trace_product(&twirl(&b, l).unwrap()).unwrap();
        adj = adj.max((lhs - rhs).norm());

        let s = twirl(&random_matrix(&l2.factors(), &mut rng), l2).unwrap();
        block = block.max((&(&p * &s) * &q).max_abs());

        let w = fixtures::random_process(l, 1000 + k as u64).unwrap();
        let all_valid = enumerate_sn(l.n_parties).unwrap().iter().all(|g| {
            let moved = ProcessMatrix::new(conjugate(w.matrix(), g, l).unwrap(), l.clone()).unwrap();
            validate_process(&moved, DEFAULT_TOL).valid
        });
        permuted_ok += all_valid as usize;
    }
    let pass = idem <= 1e-12 && adj <= 1e-10 && block <= 1e-12 && permuted_ok == instances;
    outcome(
        pass,
        format!(
            "{instances} instances: idempotence={idem:.1e} self-adjointness={adj:.1e} \
             block={block:.1e} permuted-valid={permuted_ok}/{instances}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("sector dimensions", sector_dimensions),
        ("sector no-go", no_go),
        ("fixture validity", fixture_validity),
        ("charge-split anomaly", charge_split),
        ("term rule vs oracle", term_rule_oracle),
        ("R-map algebra", r_map_algebra),
        ("frame round trip", frame_round_trip),
        ("conditioning recovery", conditioning_recovery),
        ("partial-trace sectors", partial_trace_sectors),
        ("property suite", property_suite),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        failures += !o.pass as usize;
        println!("[{status}] {:>2} {name}: {} ({:.2?})", k + 1, o.detail, start.elapsed());
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
