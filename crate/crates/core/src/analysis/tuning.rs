use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ChainState;
use crate::params::{SamplerKind, SamplerParams};
use crate::rng::RngStream;
use crate::samplers::{run_chain, run_chain_with, Recorder};
use crate::target::TargetModel;

use super::{average_flips, ess_multichain, ChainMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepsizePoint {
    pub delta: f64,
    pub acceptance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepsizeTuning {
    pub delta: f64,
    pub acceptance: f64,
    pub trace: Vec<StepsizePoint>,
}

/// Multiplicative step-size search towards a target acceptance rate.
///
/// Probe `m` measures the acceptance `α_m` at `δ_m`; then
/// `δ_{m+1} = δ_m·exp(+(1+m)^{-a})` if `α_m > α` and `δ_m·exp(−(1+m)^{-a})` if `α_m < α`.
/// Returns the probed `δ_m` whose acceptance is closest to `α`.
pub fn adapt_stepsize<F>(
    init_delta: f64,
    target_alpha: f64,
    a_exp: f64,
    m_max: usize,
    mut probe: F,
) -> Result<StepsizeTuning>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(target_alpha > 0.0 && target_alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target acceptance must lie in (0, 1), got {target_alpha}"
        )));
    }
    if !(init_delta.is_finite() && init_delta > 0.0) {
        return Err(Error::InvalidParameter(format!("initial delta must be positive, got {init_delta}")));
    }
    if !(a_exp.is_finite() && a_exp > 0.0) {
        return Err(Error::InvalidParameter(format!("decay exponent must be positive, got {a_exp}")));
    }
    if m_max == 0 {
        return Err(Error::InvalidParameter("need at least one probe".into()));
    }
    let mut delta = init_delta;
    let mut trace = Vec::with_capacity(m_max);
    for m in 0..m_max {
        let acceptance = probe(delta)?;
        trace.push(StepsizePoint { delta, acceptance });
        let step = (1.0 + m as f64).powf(-a_exp);
        if acceptance > target_alpha {
            delta *= step.exp();
        } else if acceptance < target_alpha {
            delta *= (-step).exp();
        }
    }
    let best = trace
        .iter()
        .min_by(|a, b| {
            (a.acceptance - target_alpha)
                .abs()
                .total_cmp(&(b.acceptance - target_alpha).abs())
        })
        .copied()
        .unwrap();
    Ok(StepsizeTuning { delta: best.delta, acceptance: best.acceptance, trace })
}

struct AcceptCounter {
    accepted: usize,
    total: usize,
}

impl Recorder for AcceptCounter {
    fn record(&mut self, _state: &ChainState, _f: f64, accepted: bool) {
        self.accepted += accepted as usize;
        self.total += 1;
    }
}

/// [`adapt_stepsize`] with probes of `probe_len` steps of one chain. The chain
/// continues from where the previous probe stopped.
#[allow(clippy::too_many_arguments)]
pub fn tune_stepsize_target_acceptance<T: TargetModel + ?Sized>(
    kind: SamplerKind,
    target: &T,
    base: &SamplerParams,
    init_delta: f64,
    target_alpha: f64,
    a_exp: f64,
    m_max: usize,
    probe_len: usize,
    rng: &mut RngStream,
) -> Result<StepsizeTuning> {
    let mut state: Option<ChainState> = None;
    adapt_stepsize(init_delta, target_alpha, a_exp, m_max, |delta| {
        let params = SamplerParams { delta, ..base.clone() };
        let mut counter = AcceptCounter { accepted: 0, total: 0 };
        let end = run_chain_with(kind, target, &params, 0, probe_len, rng, state.take(), &mut counter)?;
        state = Some(end);
        Ok(counter.accepted as f64 / counter.total as f64)
    })
}

/// What the DHAMS grid search maximizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningCriterion {
    /// Multi-chain ESS of `f(s)`.
    EnergyEss,
    /// Mean L1 distance between consecutive draws.
    AverageFlips,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub params: SamplerParams,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridTuning {
    pub best: SamplerParams,
    pub score: f64,
    pub trace: Vec<GridPoint>,
}

fn best_of(points: &[GridPoint]) -> &GridPoint {
    let key = |p: &GridPoint| if p.score.is_nan() { f64::NEG_INFINITY } else { p.score };
    points
        .iter()
        .reduce(|best, p| if key(p) > key(best) { p } else { best })
        .unwrap()
}

/// Two-stage grid search: `δ` over `delta_grid` with `φ = 0`, then `φ` over `phi_grid` at
/// the best `δ`. `ε` and `β` are taken from `base`. Higher scores are better.
pub fn grid_search_dhams<F>(
    base: &SamplerParams,
    delta_grid: &[f64],
    phi_grid: &[f64],
    mut score: F,
) -> Result<GridTuning>
where
    F: FnMut(&SamplerParams) -> Result<f64>,
{
    if delta_grid.is_empty() || phi_grid.is_empty() {
        return Err(Error::InvalidParameter("tuning grids must be nonempty".into()));
    }
    let mut trace = Vec::new();
    let mut stage = Vec::new();
    for &delta in delta_grid {
        let params = SamplerParams { delta, phi: 0.0, ..base.clone() };
        params.validate()?;
        stage.push(GridPoint { score: score(&params)?, params });
    }
    let delta = best_of(&stage).params.delta;
    trace.append(&mut stage);
    for &phi in phi_grid {
        let params = SamplerParams { delta, phi, ..base.clone() };
        params.validate()?;
        stage.push(GridPoint { score: score(&params)?, params });
    }
    let best = best_of(&stage).clone();
    trace.append(&mut stage);
    Ok(GridTuning { best: best.params, score: best.score, trace })
}

/// Length of each tuning run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSettings {
    pub chains: usize,
    pub burn_in: usize,
    pub draws: usize,
}

/// [`grid_search_dhams`] scored by short multi-chain runs of `kind`.
#[allow(clippy::too_many_arguments)]
pub fn tune_dhams<T: TargetModel + ?Sized>(
    kind: SamplerKind,
    target: &T,
    base: &SamplerParams,
    delta_grid: &[f64],
    phi_grid: &[f64],
    criterion: TuningCriterion,
    settings: ProbeSettings,
    rng: &mut RngStream,
) -> Result<GridTuning> {
    if settings.chains < 2 && criterion == TuningCriterion::EnergyEss {
        return Err(Error::InvalidParameter("ESS scoring needs at least two chains".into()));
    }
    if settings.chains == 0 || settings.draws < 2 {
        return Err(Error::InvalidParameter("tuning runs need chains and at least two draws".into()));
    }
    grid_search_dhams(base, delta_grid, phi_grid, |params| {
        let records = (0..settings.chains)
            .map(|_| {
                let mut r = rng.split();
                run_chain(kind, target, params, settings.burn_in, settings.draws, &mut r)
            })
            .collect::<Result<Vec<_>>>()?;
        let chains = ChainMatrix::new(records)?;
        match criterion {
            TuningCriterion::EnergyEss => ess_multichain(&chains.potentials()),
            TuningCriterion::AverageFlips => Ok(average_flips(&chains)),
        }
    })
}
