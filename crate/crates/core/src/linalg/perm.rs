use std::fmt;

use num_complex::Complex64 as C64;

use super::layout::PartyLayout;
use super::matrix::CMatrix;
use crate::error::{Error, Result};

/// Element of the symmetric group `S_n`, stored as its image list on
/// `0..n`: lab `j` is sent to `image[j]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; image.len()];
        for &i in &image {
            if i >= image.len() || seen[i] {
                return Err(Error::InvalidPermutation(image));
            }
            seen[i] = true;
        }
        Ok(Self { image })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            image: (0..n).collect(),
        }
    }

    /// Transposition of `a` and `b` in `S_n`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        let mut image: Vec<usize> = (0..n).collect();
        if a >= n || b >= n {
            return Err(Error::InvalidPermutation(vec![a, b]));
        }
        image.swap(a, b);
        Ok(Self { image })
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply(&self, j: usize) -> usize {
        self.image[j]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "compose: size mismatch");
        Permutation {
            image: other.image.iter().map(|&j| self.image[j]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut image = vec![0; self.len()];
        for (j, &g) in self.image.iter().enumerate() {
            image[g] = j;
        }
        Permutation { image }
    }

    /// Parity: `+1` for even, `-1` for odd permutations.
    pub fn sign(&self) -> i32 {
        let n = self.len();
        let mut visited = vec![false; n];
        let mut transpositions = 0;
        for start in 0..n {
            if visited[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !visited[j] {
                visited[j] = true;
                j = self.image[j];
                len += 1;
            }
            transpositions += len - 1;
        }
        if transpositions % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for Permutation {
    /// One-line notation on `1..n`, e.g. `[2 1 3]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.image.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "]")
    }
}

/// Basis-state map of `U_g`: whole lab blocks move, so the block of lab `j`
/// lands at lab position `g(j)`.
pub(crate) fn lab_index_map(g: &Permutation, layout: &PartyLayout) -> Result<Vec<usize>> {
    if g.len() != layout.n_parties {
        return Err(Error::PermutationSize {
            perm: g.len(),
            parties: layout.n_parties,
        });
    }
    let n = layout.n_parties;
    let b = layout.lab_dim();
    let dim = layout.dim();
    // weight of lab position p in the flat index
    let weights: Vec<usize> = (0..n).map(|p| b.pow((n - 1 - p) as u32)).collect();
    let mut map = vec![0; dim];
    for (x, slot) in map.iter_mut().enumerate() {
        let mut rest = x;
        let mut y = 0;
        for (j, &w) in weights.iter().enumerate() {
            let digit = rest / w;
            rest %= w;
            y += digit * weights[g.apply(j)];
        }
        *slot = y;
    }
    Ok(map)
}

/// The permutation matrix `U_g` acting on the layout's full space.
pub fn permutation_unitary(g: &Permutation, layout: &PartyLayout) -> Result<CMatrix> {
    let map = lab_index_map(g, layout)?;
    Ok(CMatrix::from_fn(&layout.factors(), |y, x| {
        if map[x] == y {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// `U_g a U_g†`, computed by index relabelling.
pub fn conjugate(a: &CMatrix, g: &Permutation, layout: &PartyLayout) -> Result<CMatrix> {
    layout.check_dim(a.dim())?;
    Ok(a.conjugate_by_index_map(&lab_index_map(g, layout)?))
}
