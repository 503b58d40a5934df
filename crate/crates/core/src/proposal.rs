//! Product-form softmax proposals `Q(s) = Π_i softmax_a(ℓ_i(a))`.

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::overrelax::CdfTable;
use crate::rng::RngStream;

/// `log Σ exp(x)` with max subtraction. Returns `-inf` for an empty slice or all `-inf` input.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Clone, Debug)]
struct Coordinate {
    log_weights: Vec<f64>,
    log_probs: Vec<f64>,
    log_norm: f64,
    table: CdfTable,
}

/// Independent categorical distributions over the shared support, one per coordinate.
#[derive(Clone, Debug)]
pub struct ProductCategorical {
    support: Vec<f64>,
    coords: Vec<Coordinate>,
}

impl ProductCategorical {
    /// Builds the distribution from unnormalized log-weights laid out coordinate-major
    /// (`log_weights[i * K + k]` is `ℓ_i(a_k)`). Entries may be `-inf`.
    pub fn from_log_weights(lattice: &LatticeSpec, log_weights: &[f64]) -> Result<Self> {
        let k = lattice.num_levels();
        let d = lattice.dim();
        if log_weights.len() != d * k {
            return Err(Error::DimensionMismatch {
                expected: d * k,
                got: log_weights.len(),
            });
        }
        if log_weights.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::NonFinite("proposal log-weights"));
        }
        let coords = log_weights
            .chunks_exact(k)
            .map(|row| {
                let log_norm = logsumexp(row);
                if log_norm == f64::NEG_INFINITY {
                    return Err(Error::InvalidParameter(
                        "every log-weight of a coordinate is -inf".into(),
                    ));
                }
                let log_probs: Vec<f64> = row.iter().map(|l| l - log_norm).collect();
                let probs: Vec<f64> = log_probs.iter().map(|l| l.exp()).collect();
                Ok(Coordinate {
                    log_weights: row.to_vec(),
                    log_probs,
                    log_norm,
                    table: CdfTable::from_probs(&probs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            support: lattice.support().to_vec(),
            coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn num_levels(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn log_weights(&self, i: usize) -> &[f64] {
        &self.coords[i].log_weights
    }

    pub fn log_probs(&self, i: usize) -> &[f64] {
        &self.coords[i].log_probs
    }

    pub fn probs(&self, i: usize) -> &[f64] {
        self.coords[i].table.probs()
    }

    /// Cumulative table of coordinate `i`; the last entry is exactly 1.
    pub fn cdf(&self, i: usize) -> &[f64] {
        self.coords[i].table.cdf()
    }

    pub fn cdf_table(&self, i: usize) -> &CdfTable {
        &self.coords[i].table
    }

    /// `log Z_i = logsumexp_k ℓ_i(a_k)`.
    pub fn log_normalizer(&self, i: usize) -> f64 {
        self.coords[i].log_norm
    }

    pub fn total_log_normalizer(&self) -> f64 {
        self.coords.iter().map(|c| c.log_norm).sum()
    }

    /// Inverse-CDF index for coordinate `i`: the smallest `k` with `w < F_i(a_k)`.
    pub fn sample_index(&self, i: usize, w: f64) -> usize {
        self.coords[i].table.locate(w)
    }

    pub fn log_prob_indices(&self, idx: &[usize]) -> f64 {
        idx.iter()
            .zip(&self.coords)
            .map(|(&k, c)| c.log_probs[k])
            .sum()
    }
}

/// Proposal with `ℓ_i(a) = c_i·a − q·a²`.
pub fn informed_weights(c: &[f64], q: f64, lattice: &LatticeSpec) -> Result<ProductCategorical> {
    lattice.check_dim(c.len())?;
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("proposal coefficients"));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quadratic coefficient must be positive, got {q}"
        )));
    }
    let a = lattice.support();
    let mut lw = Vec::with_capacity(c.len() * a.len());
    for &ci in c {
        lw.extend(a.iter().map(|&ak| ci * ak - q * ak * ak));
    }
    ProductCategorical::from_log_weights(lattice, &lw)
}

/// Draws support indices coordinate-wise, one uniform per coordinate.
pub fn sample_product_indices(pc: &ProductCategorical, rng: &mut RngStream) -> (Vec<usize>, f64) {
    let idx: Vec<usize> = (0..pc.dim())
        .map(|i| pc.sample_index(i, rng.uniform()))
        .collect();
    let lp = pc.log_prob_indices(&idx);
    (idx, lp)
}

/// Draws a lattice point and returns it with its log-probability.
pub fn sample_product(pc: &ProductCategorical, rng: &mut RngStream) -> (Vec<f64>, f64) {
    let (idx, lp) = sample_product_indices(pc, rng);
    (idx.iter().map(|&k| pc.support[k]).collect(), lp)
}

/// `Σ_i log p_i(s_i)`. Off-support values and zero-probability cells give `-inf`.
pub fn log_prob_product(pc: &ProductCategorical, s: &[f64]) -> f64 {
    if s.len() != pc.dim() {
        return f64::NEG_INFINITY;
    }
    let mut total = 0.0;
    for (c, &v) in pc.coords.iter().zip(s) {
        match pc.support.binary_search_by(|a| a.total_cmp(&v)) {
            Ok(k) => total += c.log_probs[k],
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    total
}

/// `Σ_i logsumexp_{a∈A} (g_i·a − q·(anchor_i − a)²)`.
pub fn log_normalizer_sums(
    gradient: &[f64],
    anchor: &[f64],
    q: f64,
    lattice: &LatticeSpec,
) -> Result<f64> {
    lattice.check_dim(gradient.len())?;
    lattice.check_dim(anchor.len())?;
    let a = lattice.support();
    let mut buf = vec![0.0; a.len()];
    let mut total = 0.0;
    for (&g, &z) in gradient.iter().zip(anchor) {
        for (b, &ak) in buf.iter_mut().zip(a) {
            let r = z - ak;
            *b = g * ak - q * r * r;
        }
        total += logsumexp(&buf);
    }
    if total.is_nan() {
        return Err(Error::NonFinite("normalizer sum"));
    }
    Ok(total)
}
