use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Local dimensions of the per-lab reference-frame system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDims {
    pub d_frame_in: usize,
    pub d_frame_out: usize,
}

/// Arrangement of labs and their local spaces.
///
/// Factor order is lab by lab: `S_I, S_O` and, when a frame is attached,
/// `R_I, R_O`. All labs share the same local dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyLayout {
    pub n_parties: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub frame: Option<FrameDims>,
}

impl PartyLayout {
    pub fn new(n_parties: usize, d_in: usize, d_out: usize) -> Result<Self> {
        if n_parties == 0 {
            return Err(Error::PartyCount(0));
        }
        for d in [d_in, d_out] {
            if d == 0 {
                return Err(Error::InvalidDimension(d));
            }
        }
        Ok(Self {
            n_parties,
            d_in,
            d_out,
            frame: None,
        })
    }

    /// `n` labs with qubit input and output.
    pub fn qubits(n_parties: usize) -> Self {
        Self {
            n_parties,
            d_in: 2,
            d_out: 2,
            frame: None,
        }
    }

    pub fn with_frame(mut self, frame: FrameDims) -> Result<Self> {
        if frame.d_frame_in == 0 || frame.d_frame_out == 0 {
            return Err(Error::InvalidDimension(0));
        }
        self.frame = Some(frame);
        Ok(self)
    }

    /// Same layout with the frame factors dropped.
    pub fn system(&self) -> Self {
        Self {
            frame: None,
            ..self.clone()
        }
    }

    /// Same local dimensions with a different number of labs.
    pub fn with_parties(&self, n_parties: usize) -> Self {
        Self {
            n_parties,
            ..self.clone()
        }
    }

    pub fn lab_factors(&self) -> Vec<usize> {
        match self.frame {
            None => vec![self.d_in, self.d_out],
            Some(f) => vec![self.d_in, self.d_out, f.d_frame_in, f.d_frame_out],
        }
    }

    /// Positions of output factors inside one lab block.
    pub fn lab_output_positions(&self) -> Vec<usize> {
        match self.frame {
            None => vec![1],
            Some(_) => vec![1, 3],
        }
    }

    pub fn lab_input_positions(&self) -> Vec<usize> {
        match self.frame {
            None => vec![0],
            Some(_) => vec![0, 2],
        }
    }

    pub fn factors_per_lab(&self) -> usize {
        self.lab_factors().len()
    }

    pub fn factors(&self) -> Vec<usize> {
        self.lab_factors().repeat(self.n_parties)
    }

    pub fn lab_dim(&self) -> usize {
        self.lab_factors().iter().product()
    }

    pub fn lab_input_dim(&self) -> usize {
        self.d_in * self.frame.map_or(1, |f| f.d_frame_in)
    }

    pub fn lab_output_dim(&self) -> usize {
        self.d_out * self.frame.map_or(1, |f| f.d_frame_out)
    }

    pub fn dim(&self) -> usize {
        self.lab_dim().pow(self.n_parties as u32)
    }

    /// Total output dimension; the trace of every valid process.
    pub fn total_output_dim(&self) -> usize {
        self.lab_output_dim().pow(self.n_parties as u32)
    }

    /// Global factor positions belonging to `lab`.
    pub fn lab_factor_range(&self, lab: usize) -> std::ops::Range<usize> {
        let k = self.factors_per_lab();
        lab * k..(lab + 1) * k
    }

    pub fn lab_of_factor(&self, factor: usize) -> usize {
        factor / self.factors_per_lab()
    }

    pub fn is_output_factor(&self, factor: usize) -> bool {
        self.lab_output_positions().contains(&(factor % self.factors_per_lab()))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }
}
