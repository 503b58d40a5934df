use super::{plain_outcome, Point, StepOutcome};
use crate::error::{Error, Result};
use crate::lattice::{ChainState, LatticeSpec};
use crate::params::SamplerParams;
use crate::rng::RngStream;
use crate::target::TargetModel;

fn window(k: usize, idx: usize, r: usize) -> (usize, usize) {
    (idx.saturating_sub(r), (idx + r).min(k - 1))
}

/// Number of lattice points within index distance `r` (L∞) of `idx`, excluding `idx` itself.
pub fn metropolis_neighbor_count(lattice: &LatticeSpec, idx: &[usize], r: usize) -> u128 {
    let k = lattice.num_levels();
    let boxed: u128 = idx
        .iter()
        .map(|&i| {
            let (lo, hi) = window(k, i, r);
            (hi - lo + 1) as u128
        })
        .product();
    boxed - 1
}

pub(super) fn step<T: TargetModel + ?Sized>(
    target: &T,
    cur: &Point,
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<(StepOutcome, Option<Point>)> {
    let lattice = target.lattice();
    let k = lattice.num_levels();
    let r = params.window_r;
    let n_cur = metropolis_neighbor_count(lattice, &cur.idx, r);
    if n_cur == 0 {
        return Err(Error::InvalidParameter("empty Metropolis neighborhood".into()));
    }
    let mut prop = vec![0usize; cur.idx.len()];
    loop {
        for (p, &i) in prop.iter_mut().zip(&cur.idx) {
            let (lo, hi) = window(k, i, r);
            *p = lo + rng.below(hi - lo + 1);
        }
        if prop != cur.idx {
            break;
        }
    }
    let n_prop = metropolis_neighbor_count(lattice, &prop, r);
    let proposal = Point::from_indices(target, prop)?;
    let log_ratio = proposal.f - cur.f + (n_cur as f64).ln() - (n_prop as f64).ln();
    Ok(plain_outcome(cur, proposal, log_ratio, rng))
}

/// Random-walk Metropolis with a uniform proposal over the L∞ box of radius `window_r`
/// (in support-index units) around `s_t`, excluding `s_t`.
pub fn metropolis_step<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    super::step(
        crate::params::SamplerKind::Metropolis,
        target,
        &ChainState::at_rest(s_t.to_vec()),
        params,
        rng,
    )
}
