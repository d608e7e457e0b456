//! JSON process files.
//!
//! Two representations are accepted: `"hs"`, a sparse list of expansion
//! terms, and `"dense"`, the row-major list of `[re, im]` entries. The
//! canonical writer sorts terms, drops coefficients below `1e-14` and prints
//! every number with 17 significant digits, so reading and rewriting a
//! canonical file reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hs_compose, hs_decompose, CMatrix, FrameDims, HsDecomposition, PartyLayout, TermIndex};
use crate::process::ProcessMatrix;

pub const FORMAT_VERSION: u32 = 1;

/// Terms with smaller magnitude are dropped by the canonical writer.
pub const HS_DROP_THRESHOLD: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Hs,
    Dense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsTerm {
    pub indices: Vec<usize>,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessFile {
    pub version: u32,
    pub n_parties: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub frame: Option<FrameDims>,
    pub representation: Representation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<HsTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<[f64; 2]>>,
}

fn format_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Format {
        field: field.into(),
        message: message.into(),
    }
}

/// 17 significant digits, no negative zero.
fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

impl ProcessFile {
    /// Describes `w` in the requested representation. Expansion terms are
    /// sorted by index and those below [`HS_DROP_THRESHOLD`] are dropped.
    pub fn from_process(w: &ProcessMatrix, representation: Representation) -> Result<Self> {
        let l = w.layout();
        let (terms, entries) = match representation {
            Representation::Hs => {
                let coeffs = hs_decompose(w.matrix())?;
                let terms = coeffs
                    .iter()
                    .filter(|(_, c)| c.abs() >= HS_DROP_THRESHOLD)
                    .map(|(t, coeff)| HsTerm { indices: t.0, coeff })
                    .collect();
                (Some(terms), None)
            }
            Representation::Dense => {
                let m = w.matrix().matrix();
                let dim = m.nrows();
                let entries = (0..dim * dim).map(|k| {
                    let z = m[(k / dim, k % dim)];
                    [z.re, z.im]
                });
                (None, Some(entries.collect()))
            }
        };
        Ok(Self {
            version: FORMAT_VERSION,
            n_parties: l.n_parties,
            d_in: l.d_in,
            d_out: l.d_out,
            frame: l.frame,
            representation,
            terms,
            entries,
        })
    }

    pub fn layout(&self) -> Result<PartyLayout> {
        let base =
            PartyLayout::new(self.n_parties, self.d_in, self.d_out).map_err(|e| format_err("layout", e.to_string()))?;
        match self.frame {
            None => Ok(base),
            Some(f) => base.with_frame(f).map_err(|e| format_err("frame", e.to_string())),
        }
    }

    /// Builds the process matrix, checking every field against the layout.
    pub fn to_process(&self) -> Result<ProcessMatrix> {
        if self.version != FORMAT_VERSION {
            return Err(format_err(
                "version",
                format!("unsupported version {}, expected {FORMAT_VERSION}", self.version),
            ));
        }
        let layout = self.layout()?;
        let factors = layout.factors();
        let mat = match self.representation {
            Representation::Hs => {
                if self.entries.is_some() {
                    return Err(format_err("entries", "not allowed with representation \"hs\""));
                }
                let terms = self
                    .terms
                    .as_ref()
                    .ok_or_else(|| format_err("terms", "missing for representation \"hs\""))?;
                let mut coeffs = HsDecomposition::zeros(&factors);
                let mut seen = vec![false; coeffs.len()];
                for (k, term) in terms.iter().enumerate() {
                    let field = format!("terms[{k}].indices");
                    let t = TermIndex(term.indices.clone());
                    let flat = coeffs
                        .flat_index(&t)
                        .map_err(|e| format_err(field.clone(), e.to_string()))?;
                    if std::mem::replace(&mut seen[flat], true) {
                        return Err(format_err(field, format!("duplicate term {t}")));
                    }
                    coeffs.coeffs_mut()[flat] = term.coeff;
                }
                hs_compose(&coeffs)
            }
            Representation::Dense => {
                if self.terms.is_some() {
                    return Err(format_err("terms", "not allowed with representation \"dense\""));
                }
                let entries = self
                    .entries
                    .as_ref()
                    .ok_or_else(|| format_err("entries", "missing for representation \"dense\""))?;
                let dim = layout.dim();
                if entries.len() != dim * dim {
                    return Err(format_err(
                        "entries",
                        format!("expected {} entries, found {}", dim * dim, entries.len()),
                    ));
                }
                let values: Vec<C64> = entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                CMatrix::from_row_slice(&factors, &values)?
            }
        };
        ProcessMatrix::new(mat, layout)
    }

    /// Canonical JSON text, terminated by a newline.
    pub fn to_canonical_string(&self) -> String {
        let mut s = String::from("{\n");
        let _ = writeln!(s, "  \"version\": {},", self.version);
        let _ = writeln!(s, "  \"n_parties\": {},", self.n_parties);
        let _ = writeln!(s, "  \"d_in\": {},", self.d_in);
        let _ = writeln!(s, "  \"d_out\": {},", self.d_out);
        match self.frame {
            None => s.push_str("  \"frame\": null,\n"),
            Some(f) => {
                let _ = writeln!(
                    s,
                    "  \"frame\": {{\"d_frame_in\": {}, \"d_frame_out\": {}}},",
                    f.d_frame_in, f.d_frame_out
                );
            }
        }
        match self.representation {
            Representation::Hs => {
                s.push_str("  \"representation\": \"hs\",\n  \"terms\": [");
                let mut terms: Vec<&HsTerm> = self.terms.iter().flatten().collect();
                terms.sort_by(|a, b| a.indices.cmp(&b.indices));
                for (k, t) in terms.iter().enumerate() {
                    let idx: Vec<String> = t.indices.iter().map(usize::to_string).collect();
                    let sep = if k + 1 < terms.len() { "," } else { "" };
                    let _ = write!(
                        s,
                        "\n    {{\"indices\": [{}], \"coeff\": {}}}{sep}",
                        idx.join(", "),
                        num(t.coeff)
                    );
                }
            }
            Representation::Dense => {
                s.push_str("  \"representation\": \"dense\",\n  \"entries\": [");
                let entries = self.entries.as_deref().unwrap_or_default();
                for (k, [re, im]) in entries.iter().enumerate() {
                    let sep = if k + 1 < entries.len() { "," } else { "" };
                    let _ = write!(s, "\n    [{}, {}]{sep}", num(*re), num(*im));
                }
            }
        }
        s.push_str("\n  ]\n}\n");
        s
    }
}

/// Parses a process file; syntax errors carry line and column.
pub fn parse_process_file(text: &str) -> Result<ProcessFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_process(text: &str) -> Result<ProcessMatrix> {
    parse_process_file(text)?.to_process()
}

pub fn read_process(path: impl AsRef<Path>) -> Result<ProcessMatrix> {
    parse_process(&std::fs::read_to_string(path)?)
}

/// Canonical text of `w`.
pub fn process_to_string(w: &ProcessMatrix, representation: Representation) -> Result<String> {
    Ok(ProcessFile::from_process(w, representation)?.to_canonical_string())
}

pub fn write_process(path: impl AsRef<Path>, w: &ProcessMatrix, representation: Representation) -> Result<()> {
    std::fs::write(path, process_to_string(w, representation)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::fixtures;

    #[test]
    fn hs_roundtrip_is_bit_exact() {
        let w = fixtures::branciard();
        let text = process_to_string(&w, Representation::Hs).unwrap();
        let file = parse_process_file(&text).unwrap();
        let zz = file
            .terms
            .as_ref()
            .unwrap()
            .iter()
            .find(|t| t.indices == [3, 0, 3, 0])
            .unwrap();
        assert!((zz.coeff - 0.00975).abs() < 1e-15);
        assert_eq!(file.to_canonical_string(), text);
        // going through the dense matrix may move the last digit, nothing more
        let back = parse_process(&text).unwrap();
        assert!(back.matrix().max_diff(w.matrix()) < 1e-16);
        let again = parse_process_file(&process_to_string(&back, Representation::Hs).unwrap()).unwrap();
        for (a, b) in again.terms.unwrap().iter().zip(file.terms.as_ref().unwrap()) {
            assert_eq!(a.indices, b.indices);
            assert!((a.coeff - b.coeff).abs() < 1e-16);
        }
    }

    #[test]
    fn dense_roundtrip_is_exact() {
        let w = fixtures::random_process(&PartyLayout::qubits(2), 9).unwrap();
        let text = process_to_string(&w, Representation::Dense).unwrap();
        let back = parse_process(&text).unwrap();
        assert_eq!(back, w);
        assert_eq!(process_to_string(&back, Representation::Dense).unwrap(), text);
    }

    #[test]
    fn framed_layout_roundtrip() {
        let l = PartyLayout::qubits(2)
            .with_frame(FrameDims {
                d_frame_in: 2,
                d_frame_out: 1,
            })
            .unwrap();
        let w = fixtures::identity(&l);
        let text = process_to_string(&w, Representation::Hs).unwrap();
        assert!(text.contains("\"frame\": {\"d_frame_in\": 2, \"d_frame_out\": 1}"));
        assert_eq!(parse_process(&text).unwrap(), w);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let err = parse_process("{\n  \"version\": 1,\n  \"n_parties\": oops\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let bad_index = r#"{"version": 1, "n_parties": 1, "d_in": 2, "d_out": 2, "frame": null,
            "representation": "hs", "terms": [{"indices": [0, 7], "coeff": 1.0}]}"#;
        let err = parse_process(bad_index).unwrap_err();
        assert!(err.to_string().starts_with("terms[0].indices"), "{err}");
        let short = r#"{"version": 1, "n_parties": 1, "d_in": 2, "d_out": 2, "frame": null,
            "representation": "dense", "entries": [[1.0, 0.0]]}"#;
        assert!(parse_process(short).unwrap_err().to_string().starts_with("entries"));
        let dup = r#"{"version": 1, "n_parties": 1, "d_in": 2, "d_out": 2, "frame": null,
            "representation": "hs", "terms": [{"indices": [0, 0], "coeff": 1.0}, {"indices": [0, 0], "coeff": 1.0}]}"#;
        assert!(parse_process(dup).unwrap_err().to_string().contains("duplicate"));
        let unknown = r#"{"version": 1, "n_parties": 1, "d_in": 2, "d_out": 2, "frame": null,
            "representation": "hs", "terms": [], "extra": 0}"#;
        assert!(parse_process(unknown).unwrap_err().to_string().contains("extra"));
    }

    #[test]
    fn negative_zero_is_normalized() {
        assert_eq!(num(-0.0), num(0.0));
        assert_eq!(num(0.25), "2.5000000000000000e-1");
    }
}
