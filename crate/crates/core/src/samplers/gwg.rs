use super::{plain_outcome, Point, StepOutcome};
use crate::error::Result;
use crate::lattice::{ChainState, LatticeSpec};
use crate::params::{SamplerKind, SamplerParams};
use crate::proposal::logsumexp;
use crate::rng::RngStream;
use crate::target::TargetModel;

/// A candidate move: `None` stays put, `Some((i, k))` sets coordinate `i` to level `k`.
type Move = Option<(usize, usize)>;

fn candidates(lattice: &LatticeSpec, p: &Point, r: usize) -> (Vec<Move>, Vec<f64>) {
    let a = lattice.support();
    let k = a.len();
    let mut moves = vec![None];
    let mut logw = vec![0.0];
    for (i, &ci) in p.idx.iter().enumerate() {
        let lo = ci.saturating_sub(r);
        let hi = (ci + r).min(k - 1);
        for (level, &v) in a.iter().enumerate().take(hi + 1).skip(lo) {
            if level != ci {
                moves.push(Some((i, level)));
                logw.push(0.5 * p.grad[i] * (v - p.s[i]));
            }
        }
    }
    (moves, logw)
}

fn log_prob_of(moves: &[Move], logw: &[f64], target: Move) -> f64 {
    let lse = logsumexp(logw);
    moves
        .iter()
        .position(|m| *m == target)
        .map_or(f64::NEG_INFINITY, |pos| logw[pos] - lse)
}

pub(super) fn step<T: TargetModel + ?Sized>(
    target: &T,
    cur: &Point,
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<(StepOutcome, Option<Point>)> {
    let lattice = target.lattice();
    let r = params.window_r;
    let (moves, logw) = candidates(lattice, cur, r);
    let lse = logsumexp(&logw);
    let w = rng.uniform();
    let mut acc = 0.0;
    let mut chosen = moves.len() - 1;
    for (pos, lw) in logw.iter().enumerate() {
        acc += (lw - lse).exp();
        if w < acc {
            chosen = pos;
            break;
        }
    }
    let mv = moves[chosen];
    let log_fwd = logw[chosen] - lse;
    let mut idx = cur.idx.clone();
    if let Some((i, level)) = mv {
        idx[i] = level;
    }
    let proposal = Point::from_indices(target, idx)?;
    let reverse = mv.map(|(i, _)| (i, cur.idx[i]));
    let (bmoves, blogw) = candidates(lattice, &proposal, r);
    let log_bwd = log_prob_of(&bmoves, &blogw, reverse);
    let log_ratio = proposal.f - cur.f + log_bwd - log_fwd;
    Ok(plain_outcome(cur, proposal, log_ratio, rng))
}

/// The ordinal GWG candidate set at `s` (itself plus single-coordinate moves within the
/// window) with the proposal probability of each candidate.
pub fn gwg_candidates<T: TargetModel + ?Sized>(
    target: &T,
    s: &[f64],
    params: &SamplerParams,
) -> Result<Vec<(Vec<f64>, f64)>> {
    params.validate()?;
    let p = Point::new(target, s.to_vec())?;
    let (moves, logw) = candidates(target.lattice(), &p, params.window_r);
    let lse = logsumexp(&logw);
    Ok(moves
        .iter()
        .zip(&logw)
        .map(|(m, lw)| {
            let mut s = p.s.clone();
            if let Some((i, level)) = *m {
                s[i] = target.lattice().support()[level];
            }
            (s, (lw - lse).exp())
        })
        .collect())
}

/// Ordinal Gibbs-with-gradients step with Hamming radius 1.
pub fn gwg_step<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    super::step(
        SamplerKind::OrdinalGwg,
        target,
        &ChainState::at_rest(s_t.to_vec()),
        params,
        rng,
    )
}
