//! `procmat`: validate, twirl and analyse process matrices stored as JSON.
//!
//! Exit codes: 0 success (valid / invariant / preserved), 2 the check
//! failed, 1 I/O or parse error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use procmat::frame::{born_preservation_check, invariant_process, FramedLayout};
use procmat::io::{parse_process_file, read_process, write_process, Representation};
use procmat::linalg::PartyLayout;
use procmat::process::{
    fixtures, identity_channel, projective_instrument, random_lab_instrument, validate_process, Instrument,
    ProcessMatrix, ValidityReport,
};
use procmat::symmetry::{invariance_deviations, sector_feasibility, sector_projector, twirl, SectorLabel};

/// Version of the plain-text report layout.
const REPORT_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "procmat", version, about = "Process matrices, twirls and reference frames")]
struct Cli {
    /// Numerical tolerance for all checks.
    #[arg(long, global = true, env = "PROCMAT_TOL", default_value_t = 1e-9)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check positivity, normalization and forbidden terms.
    Validate { path: PathBuf },
    /// Average a process over all party permutations.
    Twirl {
        path: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-permutation deviation table.
    Invariance { path: PathBuf },
    /// Feasibility of a sign sector for valid processes.
    Sector {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        din: usize,
        #[arg(long, default_value_t = 2)]
        dout: usize,
        /// symmetric, antisymmetric or full
        #[arg(long)]
        label: String,
    },
    /// Encode a process and random instruments with reference frames and
    /// compare probabilities.
    Frame {
        path: PathBuf,
        /// Number of random instrument draws on top of the projective one.
        #[arg(long, default_value_t = 3)]
        demo_instruments: usize,
        #[arg(long, default_value_t = 1)]
        d_frame_out: usize,
    },
    /// Regenerate the bundled fixture files and print the regression table.
    Demo {
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
    },
}

type CmdResult = Result<bool, Box<dyn std::error::Error>>;

fn print_validity(r: &ValidityReport) {
    println!("hermitian: {} (deviation {:e})", r.hermitian, r.hermitian_deviation);
    println!("min_eig: {:e}", r.min_eig);
    println!(
        "trace: {} (expected {}, deviation {:e})",
        r.trace, r.expected_trace, r.trace_dev
    );
    println!("forbidden_norm: {:e}", r.forbidden_norm);
    for (t, c) in &r.forbidden {
        println!("forbidden_term: {t} coeff={c:e}");
    }
    println!("valid: {}", r.valid);
}

fn representation_of(path: &Path) -> Result<Representation, Box<dyn std::error::Error>> {
    Ok(parse_process_file(&std::fs::read_to_string(path)?)?.representation)
}

fn cmd_validate(path: &Path, tol: f64) -> CmdResult {
    let w = read_process(path)?;
    println!("report_version: {REPORT_VERSION}");
    println!("file: {}", path.display());
    let r = validate_process(&w, tol);
    print_validity(&r);
    Ok(r.valid)
}

fn cmd_twirl(path: &Path, out: &Path) -> CmdResult {
    let w = read_process(path)?;
    let t = twirl(w.matrix(), w.layout())?;
    let t = ProcessMatrix::new(t, w.layout().clone())?;
    write_process(out, &t, representation_of(path)?)?;
    println!("wrote {}", out.display());
    Ok(true)
}

fn cmd_invariance(path: &Path, tol: f64) -> CmdResult {
    let w = read_process(path)?;
    println!("report_version: {REPORT_VERSION}");
    let table = invariance_deviations(w.matrix(), w.layout())?;
    let mut worst = 0.0f64;
    for (g, d) in &table {
        println!("{g} sign={:+} deviation={d:e}", g.sign());
        worst = worst.max(*d);
    }
    let invariant = worst <= tol;
    println!("max_deviation: {worst:e}");
    println!("invariant: {invariant}");
    Ok(invariant)
}

fn cmd_sector(n: usize, din: usize, dout: usize, label: &str) -> CmdResult {
    let label: SectorLabel = label.parse()?;
    let layout = PartyLayout::new(n, din, dout)?;
    let r = sector_feasibility(label, &layout)?;
    println!("report_version: {REPORT_VERSION}");
    println!(
        "label={label} n={n} din={din} dout={dout} sector_dim={} allowed_subspace_dim={} max_trace={:e} feasible={}",
        r.sector_dim, r.allowed_subspace_dim, r.max_trace, r.feasible_flag
    );
    Ok(true)
}

/// Projective instruments on every lab, then `draws` sets of random
/// two-outcome instruments.
fn demo_instruments(layout: &PartyLayout, draws: usize) -> Vec<Vec<Instrument>> {
    let n = layout.n_parties;
    let mut sets = Vec::new();
    if layout.d_in == layout.d_out {
        sets.push((0..n).map(|lab| projective_instrument(layout.d_in, lab)).collect());
    }
    for s in 0..draws {
        let set = (0..n)
            .map(|lab| {
                random_lab_instrument(layout, lab, 2, 1000 * s as u64 + lab as u64).expect("positive dimensions")
            })
            .collect();
        sets.push(set);
    }
    sets
}

fn frame_report(
    w: &ProcessMatrix,
    draws: usize,
    d_frame_out: usize,
    tol: f64,
) -> Result<(f64, bool), Box<dyn std::error::Error>> {
    let framed = FramedLayout::new(w.layout().clone(), d_frame_out)?;
    let w_inv_ok = match invariant_process(w, &framed) {
        Ok(w_inv) => {
            let r = validate_process(&w_inv, tol);
            println!("w_inv: valid={} min_eig={:e} trace={}", r.valid, r.min_eig, r.trace);
            r.valid
        }
        Err(e) => {
            println!("w_inv: not built ({e})");
            false
        }
    };
    let mut worst = 0.0f64;
    for (k, set) in demo_instruments(w.layout(), draws).iter().enumerate() {
        let dev = born_preservation_check(w, set, &framed)?;
        println!("instrument_set {k}: born_deviation={dev:e}");
        worst = worst.max(dev);
    }
    println!("max_born_deviation: {worst:e}");
    Ok((worst, w_inv_ok))
}

fn cmd_frame(path: &Path, draws: usize, d_frame_out: usize, tol: f64) -> CmdResult {
    let w = read_process(path)?;
    println!("report_version: {REPORT_VERSION}");
    let (worst, w_inv_ok) = frame_report(&w, draws, d_frame_out, tol)?;
    Ok(w_inv_ok && worst <= tol.max(1e-10))
}

fn demo_fixtures() -> Result<Vec<(&'static str, ProcessMatrix)>, Box<dyn std::error::Error>> {
    let rho = fixtures::ket(&[1.0, 0.0]);
    let t = identity_channel(2);
    Ok(vec![
        ("branciard", fixtures::branciard()),
        ("channel", fixtures::channel(&rho, &t)?),
        ("channel_mix", fixtures::channel_mix(&rho, &t)?),
        ("identity", fixtures::identity(&PartyLayout::qubits(2))),
    ])
}

fn cmd_demo(dir: &Path, tol: f64) -> CmdResult {
    std::fs::create_dir_all(dir)?;
    let fixtures = demo_fixtures()?;
    println!("report_version: {REPORT_VERSION}");
    println!("# fixtures");
    for (name, w) in &fixtures {
        let path = dir.join(format!("{name}.json"));
        write_process(&path, w, Representation::Hs)?;
        let r = validate_process(w, tol);
        println!(
            "{name:<12} file={} valid={} min_eig={:e} trace={}",
            path.display(),
            r.valid,
            r.min_eig,
            r.trace
        );
    }
    println!("# sectors");
    let mut ok = true;
    for n in [2, 3] {
        let layout = PartyLayout::qubits(n);
        for label in [SectorLabel::Symmetric, SectorLabel::Antisymmetric] {
            let rank = sector_projector(label, &layout)?.rank();
            let r = sector_feasibility(label, &layout)?;
            println!(
                "n={n} {label:<13} rank={rank:<3} max_trace={:e} feasible={}",
                r.max_trace, r.feasible_flag
            );
            ok &= !r.feasible_flag;
        }
    }
    println!("# twirl");
    let channel = &fixtures[1].1;
    let mix = &fixtures[2].1;
    let same = twirl(channel.matrix(), channel.layout())? == *mix.matrix();
    println!("twirl(channel) == channel_mix: {same}");
    ok &= same;
    println!("# born preservation");
    for (name, w) in &fixtures {
        let mut worst = 0.0f64;
        let framed = FramedLayout::trivial_output(w.layout().clone())?;
        for set in demo_instruments(w.layout(), 10) {
            worst = worst.max(born_preservation_check(w, &set, &framed)?);
        }
        println!("{name:<12} max_born_deviation={worst:e}");
        ok &= worst <= 1e-10;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = cli.tol;
    let result = match &cli.command {
        Command::Validate { path } => cmd_validate(path, tol),
        Command::Twirl { path, out } => cmd_twirl(path, out),
        Command::Invariance { path } => cmd_invariance(path, tol),
        Command::Sector { n, din, dout, label } => cmd_sector(*n, *din, *dout, label),
        Command::Frame {
            path,
            demo_instruments,
            d_frame_out,
        } => cmd_frame(path, *demo_instruments, *d_frame_out, tol),
        Command::Demo { dir } => cmd_demo(dir, tol),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
