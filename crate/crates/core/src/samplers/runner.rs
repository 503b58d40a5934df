use super::{step_point, Point};
use crate::error::{Error, Result};
use crate::lattice::ChainState;
use crate::params::{SamplerKind, SamplerParams};
use crate::rng::{draw_std_normal_vector, RngStream};
use crate::target::TargetModel;

/// Receives every kept draw of a chain.
pub trait Recorder {
    fn record(&mut self, state: &ChainState, f: f64, accepted: bool);
}

/// Kept draws of one chain, stored row-major.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainRecord {
    dim: usize,
    states: Vec<f64>,
    momenta: Option<Vec<f64>>,
    potentials: Vec<f64>,
    accepted: Vec<bool>,
}

impl ChainRecord {
    pub fn new(dim: usize, record_momentum: bool) -> Self {
        Self {
            dim,
            momenta: record_momentum.then(Vec::new),
            ..Default::default()
        }
    }

    /// Builds a record from explicit draws, e.g. read back from disk.
    pub fn from_parts(
        dim: usize,
        states: Vec<f64>,
        potentials: Vec<f64>,
        accepted: Vec<bool>,
    ) -> Result<Self> {
        let t = potentials.len();
        if dim == 0 || states.len() != dim * t || accepted.len() != t {
            return Err(Error::InvalidParameter(
                "chain record parts have inconsistent lengths".into(),
            ));
        }
        Ok(Self {
            dim,
            states,
            momenta: None,
            potentials,
            accepted,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.potentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potentials.is_empty()
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.dim..(t + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn momentum(&self, t: usize) -> Option<&[f64]> {
        self.momenta
            .as_ref()
            .map(|m| &m[t * self.dim..(t + 1) * self.dim])
    }

    pub fn has_momentum(&self) -> bool {
        self.momenta.is_some()
    }

    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    pub fn accepted(&self) -> &[bool] {
        &self.accepted
    }

    /// Trace of coordinate `i`.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.states().map(|s| s[i]).collect()
    }

    /// Trace of momentum coordinate `i`, if momentum was recorded.
    pub fn momentum_coordinate(&self, i: usize) -> Option<Vec<f64>> {
        let m = self.momenta.as_ref()?;
        Some(m.chunks_exact(self.dim).map(|u| u[i]).collect())
    }
}

impl Recorder for ChainRecord {
    fn record(&mut self, state: &ChainState, f: f64, accepted: bool) {
        self.states.extend_from_slice(&state.s);
        if let Some(m) = self.momenta.as_mut() {
            m.extend_from_slice(&state.u);
        }
        self.potentials.push(f);
        self.accepted.push(accepted);
    }
}

/// Uniform position on the lattice and standard normal momentum.
pub fn initial_state<T: TargetModel + ?Sized>(target: &T, rng: &mut RngStream) -> ChainState {
    let a = target.lattice().support();
    let s = (0..target.dim()).map(|_| a[rng.below(a.len())]).collect();
    let u = draw_std_normal_vector(rng, target.dim());
    ChainState::new(s, u)
}

/// Runs `n_burn + n_keep` steps from `init` (or a random start) and passes the kept states
/// to `recorder`. Returns the final state.
#[allow(clippy::too_many_arguments)]
pub fn run_chain_with<T: TargetModel + ?Sized, R: Recorder + ?Sized>(
    kind: SamplerKind,
    target: &T,
    params: &SamplerParams,
    n_burn: usize,
    n_keep: usize,
    rng: &mut RngStream,
    init: Option<ChainState>,
    recorder: &mut R,
) -> Result<ChainState> {
    params.validate()?;
    if n_keep == 0 {
        return Err(Error::InvalidParameter("n_keep must be at least 1".into()));
    }
    let mut state = match init {
        Some(s) => s,
        None => initial_state(target, rng),
    };
    state.validate(target.lattice())?;
    let mut cur = Point::new(target, state.s.clone())?;
    for t in 0..n_burn + n_keep {
        let (outcome, moved) = step_point(kind, target, &cur, &state.u, params, rng)?;
        if let Some(p) = moved {
            cur = p;
        }
        state = outcome.next;
        if t >= n_burn {
            recorder.record(&state, cur.f, outcome.accepted);
        }
    }
    Ok(state)
}

/// Runs a chain from a random start and records every kept draw.
/// Momentum is recorded for the momentum-carrying samplers.
pub fn run_chain<T: TargetModel + ?Sized>(
    kind: SamplerKind,
    target: &T,
    params: &SamplerParams,
    n_burn: usize,
    n_keep: usize,
    rng: &mut RngStream,
) -> Result<ChainRecord> {
    let mut rec = ChainRecord::new(target.dim(), kind.uses_momentum());
    run_chain_with(kind, target, params, n_burn, n_keep, rng, None, &mut rec)?;
    Ok(rec)
}
