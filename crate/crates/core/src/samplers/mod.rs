//! One-step transition kernels and the chain runner.
//!
//! Every kernel returns a [`StepOutcome`] carrying the raw (unclamped) log
//! acceptance ratio. The accept test draws exactly one uniform per step and
//! accepts when it is below `exp(min(0, log_ratio))`.

mod dhams;
mod gwg;
mod informed;
mod metropolis;
mod runner;

pub use dhams::{
    dhams_proposal_log_prob, odhams_log_ratio, odhams_step, vdhams_log_ratio, vdhams_step,
};
pub use gwg::{gwg_candidates, gwg_step};
pub use informed::{avg_log_ratio, avg_step, ncg_log_ratio, ncg_proposal, ncg_step};
pub use metropolis::{metropolis_neighbor_count, metropolis_step};
pub use runner::{initial_state, run_chain, run_chain_with, ChainRecord, Recorder};

use crate::error::{Error, Result};
use crate::lattice::ChainState;
use crate::params::{SamplerKind, SamplerParams};
use crate::rng::RngStream;
use crate::target::TargetModel;

/// Result of one kernel application.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub proposal_s: Vec<f64>,
    /// Proposed momentum, for the momentum-carrying samplers.
    pub proposal_u: Option<Vec<f64>>,
    /// Raw log acceptance ratio before clamping at zero.
    pub log_accept_ratio: f64,
    pub accepted: bool,
    pub next: ChainState,
}

/// A lattice point with cached support indices, potential and gradient.
#[derive(Clone, Debug)]
pub(crate) struct Point {
    pub s: Vec<f64>,
    pub idx: Vec<usize>,
    pub f: f64,
    pub grad: Vec<f64>,
}

impl Point {
    pub fn new<T: TargetModel + ?Sized>(target: &T, s: Vec<f64>) -> Result<Self> {
        let idx = target.lattice().indices_of(&s)?;
        Self::from_indices(target, idx)
    }

    pub fn from_indices<T: TargetModel + ?Sized>(target: &T, idx: Vec<usize>) -> Result<Self> {
        let s = target.lattice().values_of(&idx);
        let (f, grad) = target.potential_and_gradient(&s);
        if !f.is_finite() {
            return Err(Error::NonFinite("potential"));
        }
        if grad.len() != s.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                got: grad.len(),
            });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(Self { s, idx, f, grad })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// One uniform draw compared against `exp(min(0, log_ratio))`. NaN ratios reject.
pub(crate) fn accept(log_ratio: f64, rng: &mut RngStream) -> bool {
    let w = rng.uniform();
    w < log_ratio.min(0.0).exp()
}

/// Internal step on a cached point. Returns the outcome and the point the chain moved to.
pub(crate) fn step_point<T: TargetModel + ?Sized>(
    kind: SamplerKind,
    target: &T,
    cur: &Point,
    u: &[f64],
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<(StepOutcome, Option<Point>)> {
    match kind {
        SamplerKind::Metropolis => metropolis::step(target, cur, params, rng),
        SamplerKind::OrdinalGwg => gwg::step(target, cur, params, rng),
        SamplerKind::Ncg => informed::ncg(target, cur, params, rng),
        SamplerKind::Avg => informed::avg(target, cur, params, rng),
        SamplerKind::Vdhams => dhams::step(target, cur, u, params, false, rng),
        SamplerKind::Odhams => dhams::step(target, cur, u, params, true, rng),
    }
}

/// Applies one step of `kind` to `state`. Samplers without momentum return zero momentum.
pub fn step<T: TargetModel + ?Sized>(
    kind: SamplerKind,
    target: &T,
    state: &ChainState,
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    params.validate()?;
    state.validate(target.lattice())?;
    let cur = Point::new(target, state.s.clone())?;
    Ok(step_point(kind, target, &cur, &state.u, params, rng)?.0)
}

/// Builds the outcome of a sampler without momentum.
pub(crate) fn plain_outcome(
    cur: &Point,
    proposal: Point,
    log_ratio: f64,
    rng: &mut RngStream,
) -> (StepOutcome, Option<Point>) {
    let accepted = accept(log_ratio, rng);
    let next_s = if accepted { proposal.s.clone() } else { cur.s.clone() };
    let outcome = StepOutcome {
        proposal_s: proposal.s.clone(),
        proposal_u: None,
        log_accept_ratio: log_ratio,
        accepted,
        next: ChainState::at_rest(next_s),
    };
    (outcome, accepted.then_some(proposal))
}
