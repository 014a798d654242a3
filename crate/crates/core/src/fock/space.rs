use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Qutrit level. The discriminant is the basis index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    G = 0,
    E = 1,
    F = 2,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::G, Level::E, Level::F];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Level::G => "g",
            Level::E => "e",
            Level::F => "f",
        };
        f.write_str(s)
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" | "G" => Ok(Level::G),
            "e" | "E" => Ok(Level::E),
            "f" | "F" => Ok(Level::F),
            other => Err(Error::InvalidArgument(format!(
                "unknown qutrit level `{other}`"
            ))),
        }
    }
}

pub const QUTRIT_DIM: usize = 3;

/// Layout of the composite space: one qutrit followed by `n` cavities.
///
/// Basis flattening puts the qutrit on the slowest index and cavity `n` on the
/// fastest. Slot 0 is the qutrit, slot `j + 1` is cavity `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpec {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    cavity_block: usize,
}

impl HilbertSpec {
    /// `cutoffs[j]` is the largest retained photon number of cavity `j`.
    pub fn new(cutoffs: Vec<usize>) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one cavity is required".into(),
            ));
        }
        if let Some(j) = cutoffs.iter().position(|&c| c < 1) {
            return Err(Error::InvalidArgument(format!("cavity {j} has cutoff < 1")));
        }
        let mut strides = vec![1usize; cutoffs.len()];
        for j in (0..cutoffs.len() - 1).rev() {
            strides[j] = strides[j + 1] * (cutoffs[j + 1] + 1);
        }
        let cavity_block = strides[0] * (cutoffs[0] + 1);
        Ok(Self {
            cutoffs,
            strides,
            cavity_block,
        })
    }

    pub fn uniform(n_cavities: usize, cutoff: usize) -> Result<Self> {
        Self::new(vec![cutoff; n_cavities])
    }

    pub fn n_cavities(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn cutoff(&self, cavity: usize) -> usize {
        self.cutoffs[cavity]
    }

    /// Dimension of the product of all cavity factors.
    pub fn cavity_block(&self) -> usize {
        self.cavity_block
    }

    pub fn dim(&self) -> usize {
        QUTRIT_DIM * self.cavity_block
    }

    pub fn stride(&self, cavity: usize) -> usize {
        self.strides[cavity]
    }

    pub fn n_slots(&self) -> usize {
        self.cutoffs.len() + 1
    }

    pub fn slot_dim(&self, slot: usize) -> usize {
        if slot == 0 {
            QUTRIT_DIM
        } else {
            self.cutoffs[slot - 1] + 1
        }
    }

    pub fn flatten(&self, level: Level, photons: &[usize]) -> usize {
        debug_assert_eq!(photons.len(), self.n_cavities());
        level.index() * self.cavity_block
            + photons
                .iter()
                .zip(&self.strides)
                .map(|(&n, &s)| n * s)
                .sum::<usize>()
    }

    pub fn unflatten(&self, index: usize) -> (Level, Vec<usize>) {
        let level = Level::from_index(index / self.cavity_block).expect("index out of range");
        let mut rest = index % self.cavity_block;
        let photons = self
            .strides
            .iter()
            .map(|&s| {
                let n = rest / s;
                rest %= s;
                n
            })
            .collect();
        (level, photons)
    }

    /// Photon number of `cavity` at basis `index`.
    pub fn photons_at(&self, index: usize, cavity: usize) -> usize {
        (index % self.cavity_block) / self.strides[cavity] % (self.cutoffs[cavity] + 1)
    }

    pub fn level_at(&self, index: usize) -> Level {
        Level::from_index(index / self.cavity_block).expect("index out of range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_unflatten_bijection() {
        let spec = HilbertSpec::new(vec![3, 1, 4]).unwrap();
        assert_eq!(spec.dim(), 3 * 4 * 2 * 5);
        for i in 0..spec.dim() {
            let (lvl, n) = spec.unflatten(i);
            assert_eq!(spec.flatten(lvl, &n), i);
            assert_eq!(spec.level_at(i), lvl);
            for (j, &nj) in n.iter().enumerate() {
                assert_eq!(spec.photons_at(i, j), nj);
            }
        }
    }

    #[test]
    fn qutrit_is_slowest_index() {
        let spec = HilbertSpec::uniform(2, 2).unwrap();
        assert_eq!(spec.flatten(Level::E, &[0, 0]), 9);
        assert_eq!(spec.flatten(Level::G, &[0, 1]), 1);
        assert_eq!(spec.flatten(Level::G, &[1, 0]), 3);
    }

    #[test]
    fn rejects_zero_cutoff() {
        assert!(HilbertSpec::new(vec![2, 0]).is_err());
        assert!(HilbertSpec::new(vec![]).is_err());
    }

    #[test]
    fn level_parsing() {
        assert_eq!("e".parse::<Level>().unwrap(), Level::E);
        assert!("x".parse::<Level>().is_err());
    }
}
