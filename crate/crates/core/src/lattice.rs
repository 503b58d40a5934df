use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of states [`LatticeSpec::enumerate_states`] will visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// The lattice `A^d`: `d` coordinates sharing one strictly increasing support `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    dim: usize,
    support: Vec<f64>,
}

impl LatticeSpec {
    pub fn new(dim: usize, support: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidLattice("dimension must be at least 1".into()));
        }
        if support.len() < 2 {
            return Err(Error::InvalidLattice(
                "support must contain at least two values".into(),
            ));
        }
        if support.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("lattice support"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLattice(
                "support must be strictly increasing".into(),
            ));
        }
        Ok(Self { dim, support })
    }

    /// `{-k, ..., k}^d`.
    pub fn symmetric_integer(dim: usize, k: usize) -> Result<Self> {
        let k = k as i64;
        Self::new(dim, (-k..=k).map(|a| a as f64).collect())
    }

    /// `{0, 1}^d`.
    pub fn binary(dim: usize) -> Result<Self> {
        Self::new(dim, vec![0.0, 1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn num_levels(&self) -> usize {
        self.support.len()
    }

    pub fn is_binary(&self) -> bool {
        self.support == [0.0, 1.0]
    }

    /// Position of `value` in the support, if it is a support point.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        self.support
            .binary_search_by(|a| a.total_cmp(&value))
            .ok()
    }

    pub fn indices_of(&self, s: &[f64]) -> Result<Vec<usize>> {
        self.check_dim(s.len())?;
        s.iter()
            .map(|&v| self.index_of(v).ok_or(Error::OffLattice(v)))
            .collect()
    }

    pub fn values_of(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&k| self.support[k]).collect()
    }

    pub fn contains(&self, s: &[f64]) -> bool {
        s.len() == self.dim && s.iter().all(|&v| self.index_of(v).is_some())
    }

    pub fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }

    /// `K^d`, or `None` if it does not fit in a `u128`.
    pub fn num_states(&self) -> Option<u128> {
        (self.support.len() as u128).checked_pow(u32::try_from(self.dim).ok()?)
    }

    /// Iterates every lattice point in lexicographic order (last coordinate varies fastest).
    ///
    /// Refuses with [`Error::EnumerationCap`] when `K^d > cap`.
    pub fn enumerate_states(&self, cap: u64) -> Result<StateIter<'_>> {
        let count = self.num_states().unwrap_or(u128::MAX);
        if count > cap as u128 {
            return Err(Error::EnumerationCap { count, cap });
        }
        Ok(StateIter {
            lattice: self,
            idx: vec![0; self.dim],
            remaining: count as u64,
        })
    }
}

/// Iterator returned by [`LatticeSpec::enumerate_states`].
#[derive(Debug)]
pub struct StateIter<'a> {
    lattice: &'a LatticeSpec,
    idx: Vec<usize>,
    remaining: u64,
}

impl Iterator for StateIter<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.lattice.values_of(&self.idx);
        let k = self.lattice.num_levels();
        for slot in self.idx.iter_mut().rev() {
            *slot += 1;
            if *slot < k {
                break;
            }
            *slot = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for StateIter<'_> {}

/// Position `s` and momentum `u` of an augmented chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub s: Vec<f64>,
    pub u: Vec<f64>,
}

impl ChainState {
    pub fn new(s: Vec<f64>, u: Vec<f64>) -> Self {
        Self { s, u }
    }

    /// State with zero momentum.
    pub fn at_rest(s: Vec<f64>) -> Self {
        let u = vec![0.0; s.len()];
        Self { s, u }
    }

    pub fn validate(&self, lattice: &LatticeSpec) -> Result<()> {
        lattice.check_dim(self.s.len())?;
        lattice.check_dim(self.u.len())?;
        if let Some(&v) = self.s.iter().find(|&&v| lattice.index_of(v).is_none()) {
            return Err(Error::OffLattice(v));
        }
        if self.u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("momentum"));
        }
        Ok(())
    }
}
