use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::samplers::ChainRecord;

use super::tables::{cell_index, MarginalTable};
use super::{marginalize, mean_sd};

/// `M` chains of `T` kept draws each.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainMatrix {
    chains: Vec<ChainRecord>,
}

impl ChainMatrix {
    pub fn new(chains: Vec<ChainRecord>) -> Result<Self> {
        let first = chains
            .first()
            .ok_or_else(|| Error::InvalidParameter("need at least one chain".into()))?;
        let (t, d) = (first.len(), first.dim());
        if t == 0 {
            return Err(Error::InvalidParameter("chains have no draws".into()));
        }
        if chains.iter().any(|c| c.len() != t || c.dim() != d) {
            return Err(Error::InvalidParameter("chains must all have the same shape".into()));
        }
        Ok(Self { chains })
    }

    pub fn chains(&self) -> &[ChainRecord] {
        &self.chains
    }

    pub fn num_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn num_draws(&self) -> usize {
        self.chains[0].len()
    }

    pub fn dim(&self) -> usize {
        self.chains[0].dim()
    }

    /// `M × T` trace of coordinate `i`.
    pub fn coordinate(&self, i: usize) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.coordinate(i)).collect()
    }

    /// `M × T` trace of `f(s)`.
    pub fn potentials(&self) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.potentials().to_vec()).collect()
    }

    pub fn into_chains(self) -> Vec<ChainRecord> {
        self.chains
    }
}

/// Multi-chain ESS `T·W/B` with `W` the pooled within-chain variance and `B` the
/// between-chain variance of chain means scaled by `T`.
///
/// Returns 0 when `W = 0` and `+inf` when `B = 0`, logging a warning in both cases.
pub fn ess_multichain(x: &[Vec<f64>]) -> Result<f64> {
    let m = x.len();
    if m < 2 {
        return Err(Error::InvalidParameter("ESS needs at least two chains".into()));
    }
    let t = x[0].len();
    if t < 2 || x.iter().any(|c| c.len() != t) {
        return Err(Error::InvalidParameter(
            "ESS needs chains of equal length with at least two draws".into(),
        ));
    }
    let means: Vec<f64> = x.iter().map(|c| c.iter().sum::<f64>() / t as f64).collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    let within: f64 = x
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|v| (v - mu).powi(2)).sum::<f64>())
        .sum();
    let w = within / (m as f64 * (t as f64 - 1.0));
    let b = t as f64 * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    if w == 0.0 {
        log::warn!("within-chain variance is zero; reporting ESS 0");
        return Ok(0.0);
    }
    if b == 0.0 {
        log::warn!("between-chain variance is zero; reporting infinite ESS");
        return Ok(f64::INFINITY);
    }
    Ok(t as f64 * w / b)
}

/// Fraction of accepted steps over all chains.
pub fn acceptance_rate(chains: &ChainMatrix) -> f64 {
    let (acc, n) = chains.chains.iter().fold((0usize, 0usize), |(a, n), c| {
        (a + c.accepted().iter().filter(|&&x| x).count(), n + c.len())
    });
    acc as f64 / n as f64
}

/// Mean `‖s_{t+1} − s_t‖₁` over consecutive kept draws of every chain.
pub fn average_flips(chains: &ChainMatrix) -> f64 {
    let t = chains.num_draws();
    if t < 2 {
        return 0.0;
    }
    let total: f64 = chains
        .chains
        .iter()
        .map(|c| {
            (1..t)
                .map(|k| {
                    c.state(k)
                        .iter()
                        .zip(c.state(k - 1))
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum();
    total / (chains.num_chains() * (t - 1)) as f64
}

fn check_binary(chains: &ChainMatrix) -> Result<()> {
    let ok = chains
        .chains
        .iter()
        .all(|c| c.states().flatten().all(|&v| v == 0.0 || v == 1.0));
    if !ok {
        return Err(Error::InvalidParameter("inclusion probabilities need binary draws".into()));
    }
    Ok(())
}

/// Per-chain inclusion frequencies, `M` vectors of length `d`.
pub fn pip_per_chain(chains: &ChainMatrix) -> Result<Vec<Vec<f64>>> {
    check_binary(chains)?;
    let (t, d) = (chains.num_draws(), chains.dim());
    Ok(chains
        .chains
        .iter()
        .map(|c| {
            let mut acc = vec![0.0; d];
            for s in c.states() {
                for (a, v) in acc.iter_mut().zip(s) {
                    *a += v;
                }
            }
            acc.iter().map(|a| a / t as f64).collect()
        })
        .collect())
}

/// Inclusion frequencies pooled over all chains.
pub fn pip_estimates(chains: &ChainMatrix) -> Result<Vec<f64>> {
    let per = pip_per_chain(chains)?;
    let m = per.len() as f64;
    Ok((0..chains.dim())
        .map(|i| per.iter().map(|p| p[i]).sum::<f64>() / m)
        .collect())
}

/// Biased sample autocorrelations for lags `0..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let t = x.len();
    if t <= max_lag {
        return Err(Error::InvalidParameter(format!(
            "series of length {t} is too short for lag {max_lag}"
        )));
    }
    let mean = x.iter().sum::<f64>() / t as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = c.iter().map(|v| v * v).sum();
    if c0 == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((0..=max_lag)
        .map(|k| c[..t - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// One point of a TV-versus-draws curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvPoint {
    pub draws: usize,
    pub mean_tv: f64,
    pub sd_tv: f64,
}

/// TV distance between the exact marginals of `joint` and the empirical marginals of the
/// first `n` draws of each chain, for every `n` in `checkpoints`. Mean and standard
/// deviation are taken across chains, then averaged over `subsets`.
pub fn tv_curve(
    chains: &ChainMatrix,
    joint: &MarginalTable,
    lattice: &LatticeSpec,
    subsets: &[Vec<usize>],
    checkpoints: &[usize],
) -> Result<Vec<TvPoint>> {
    if subsets.is_empty() {
        return Err(Error::InvalidParameter("no coordinate subsets".into()));
    }
    let t = chains.num_draws();
    if let Some(&bad) = checkpoints.iter().find(|&&n| n == 0 || n > t) {
        return Err(Error::InvalidParameter(format!("checkpoint {bad} outside 1..={t}")));
    }
    let k = lattice.num_levels();
    let mut mean_acc = vec![0.0; checkpoints.len()];
    let mut sd_acc = vec![0.0; checkpoints.len()];
    for coords in subsets {
        let exact = marginalize(joint, coords)?;
        let mut per_chain = vec![Vec::with_capacity(chains.num_chains()); checkpoints.len()];
        for c in &chains.chains {
            let mut counts = vec![0u64; exact.probs().len()];
            let mut seen = 0usize;
            for (ci, &n) in checkpoints.iter().enumerate() {
                while seen < n {
                    let idx = lattice.indices_of(c.state(seen))?;
                    counts[cell_index(coords, &idx, k)] += 1;
                    seen += 1;
                }
                let l1: f64 = counts
                    .iter()
                    .zip(exact.probs())
                    .map(|(&c, p)| (c as f64 / n as f64 - p).abs())
                    .sum();
                per_chain[ci].push(0.5 * l1);
            }
        }
        for (ci, tvs) in per_chain.iter().enumerate() {
            let (m, s) = mean_sd(tvs);
            mean_acc[ci] += m;
            sd_acc[ci] += s;
        }
    }
    let ns = subsets.len() as f64;
    Ok(checkpoints
        .iter()
        .enumerate()
        .map(|(ci, &n)| TvPoint { draws: n, mean_tv: mean_acc[ci] / ns, sd_tv: sd_acc[ci] / ns })
        .collect())
}
