use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::proposal::logsumexp;
use crate::target::TargetModel;

use super::ChainMatrix;

/// Probabilities over the joint support cells of a coordinate subset.
/// Cells are ordered lexicographically with the last listed coordinate varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalTable {
    coords: Vec<usize>,
    levels: usize,
    probs: Vec<f64>,
}

impl MarginalTable {
    pub fn new(coords: Vec<usize>, levels: usize, probs: Vec<f64>) -> Result<Self> {
        let cells = u32::try_from(coords.len())
            .ok()
            .and_then(|k| levels.checked_pow(k))
            .ok_or_else(|| Error::InvalidParameter("table too large".into()))?;
        if probs.len() != cells {
            return Err(Error::DimensionMismatch { expected: cells, got: probs.len() });
        }
        Ok(Self { coords, levels, probs })
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cell_of(&self, idx: &[usize]) -> usize {
        cell_index(&self.coords, idx, self.levels)
    }
}

/// Cell index of the sub-vector `idx[coords]`.
pub(crate) fn cell_index(coords: &[usize], idx: &[usize], levels: usize) -> usize {
    coords.iter().fold(0, |acc, &c| acc * levels + idx[c])
}

/// Normalized `exp(f)` over the whole lattice.
pub fn exact_joint<T: TargetModel + ?Sized>(target: &T, cap: u64) -> Result<MarginalTable> {
    let lattice = target.lattice();
    let logp: Vec<f64> = lattice
        .enumerate_states(cap)?
        .map(|s| target.potential(&s))
        .collect();
    if logp.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::NonFinite("potential"));
    }
    let lse = logsumexp(&logp);
    let probs = logp.iter().map(|l| (l - lse).exp()).collect();
    MarginalTable::new((0..lattice.dim()).collect(), lattice.num_levels(), probs)
}

/// Sums out every coordinate of `joint` not listed in `coords`.
pub fn marginalize(joint: &MarginalTable, coords: &[usize]) -> Result<MarginalTable> {
    let pos: Vec<usize> = coords
        .iter()
        .map(|c| {
            joint.coords.iter().position(|x| x == c).ok_or_else(|| {
                Error::InvalidParameter(format!("coordinate {c} is not in the table"))
            })
        })
        .collect::<Result<_>>()?;
    let k = joint.levels;
    let n_src = joint.coords.len();
    let mut out = vec![0.0; k.pow(coords.len() as u32)];
    let mut digits = vec![0usize; n_src];
    for &p in &joint.probs {
        let cell = pos.iter().fold(0, |acc, &q| acc * k + digits[q]);
        out[cell] += p;
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    MarginalTable::new(coords.to_vec(), k, out)
}

fn count_into(
    counts: &mut [u64],
    states: impl Iterator<Item = impl AsRef<[f64]>>,
    coords: &[usize],
    lattice: &LatticeSpec,
) -> Result<u64> {
    let k = lattice.num_levels();
    let mut n = 0;
    for s in states {
        let s = s.as_ref();
        let cell = coords.iter().try_fold(0usize, |acc, &c| {
            lattice
                .index_of(s[c])
                .map(|i| acc * k + i)
                .ok_or(Error::OffLattice(s[c]))
        })?;
        counts[cell] += 1;
        n += 1;
    }
    Ok(n)
}

fn check_coords(coords: &[usize], lattice: &LatticeSpec) -> Result<()> {
    if let Some(&c) = coords.iter().find(|&&c| c >= lattice.dim()) {
        return Err(Error::InvalidParameter(format!("coordinate {c} out of range")));
    }
    Ok(())
}

/// Frequencies of the first `n_draws` draws (all draws when `None`) of one chain.
pub fn empirical_marginal_chain(
    chain: &crate::samplers::ChainRecord,
    coords: &[usize],
    lattice: &LatticeSpec,
    n_draws: Option<usize>,
) -> Result<MarginalTable> {
    check_coords(coords, lattice)?;
    let k = lattice.num_levels();
    let mut counts = vec![0u64; k.pow(coords.len() as u32)];
    let take = n_draws.unwrap_or(chain.len()).min(chain.len());
    let n = count_into(&mut counts, chain.states().take(take), coords, lattice)?;
    if n == 0 {
        return Err(Error::InvalidParameter("no draws to count".into()));
    }
    MarginalTable::new(coords.to_vec(), k, counts.iter().map(|&c| c as f64 / n as f64).collect())
}

/// Frequencies over the kept draws of every chain, pooled.
pub fn empirical_marginal(
    chains: &ChainMatrix,
    coords: &[usize],
    lattice: &LatticeSpec,
) -> Result<MarginalTable> {
    check_coords(coords, lattice)?;
    let k = lattice.num_levels();
    let mut counts = vec![0u64; k.pow(coords.len() as u32)];
    let mut n = 0;
    for rec in chains.chains() {
        n += count_into(&mut counts, rec.states(), coords, lattice)?;
    }
    MarginalTable::new(coords.to_vec(), k, counts.iter().map(|&c| c as f64 / n as f64).collect())
}

/// `½ Σ |p − q|` over matching cells.
pub fn tv_distance(p: &MarginalTable, q: &MarginalTable) -> Result<f64> {
    if p.coords != q.coords || p.levels != q.levels || p.probs.len() != q.probs.len() {
        return Err(Error::MismatchedTables);
    }
    let l1: f64 = p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * l1).min(1.0))
}
