use super::informed::anchored_kernel;
use super::{accept, dot, norm_sq, Point, StepOutcome};
use crate::error::Result;
use crate::lattice::{ChainState, LatticeSpec};
use crate::overrelax::{sample_overrelaxed, transition_prob};
use crate::params::{SamplerKind, SamplerParams};
use crate::proposal::{log_normalizer_sums, sample_product_indices, ProductCategorical};
use crate::rng::{draw_std_normal_vector, RngStream};
use crate::target::TargetModel;

/// `s_t − δ·u`, the anchor of the forward proposal.
fn forward_anchor(s: &[f64], u_half: &[f64], delta: f64) -> Vec<f64> {
    s.iter().zip(u_half).map(|(s, u)| s - delta * u).collect()
}

/// `u* = −u_half + (s_t − s*)/δ + φ(∇f(s*) − ∇f(s_t))`.
fn proposed_momentum(cur: &Point, prop: &Point, u_half: &[f64], delta: f64, phi: f64) -> Vec<f64> {
    (0..u_half.len())
        .map(|i| {
            -u_half[i] + (cur.s[i] - prop.s[i]) / delta + phi * (prop.grad[i] - cur.grad[i])
        })
        .collect()
}

fn vanilla_ratio(
    lattice: &LatticeSpec,
    cur: &Point,
    prop: &Point,
    u_half: &[f64],
    u_star: &[f64],
    delta: f64,
) -> Result<f64> {
    let q = 0.5 / (delta * delta);
    let anchor_f = forward_anchor(&cur.s, u_half, delta);
    let anchor_b: Vec<f64> = prop.s.iter().zip(u_star).map(|(s, u)| s + delta * u).collect();
    let ds: Vec<f64> = prop.s.iter().zip(&cur.s).map(|(a, b)| a - b).collect();
    let du: Vec<f64> = u_star.iter().zip(u_half).map(|(a, b)| a - b).collect();
    let energy = prop.f - cur.f + dot(&prop.grad, &cur.s) - dot(&cur.grad, &prop.s)
        - norm_sq(u_star)
        + norm_sq(u_half)
        - dot(&ds, &du) / delta;
    let normalizers = log_normalizer_sums(&cur.grad, &anchor_f, q, lattice)?
        - log_normalizer_sums(&prop.grad, &anchor_b, q, lattice)?;
    Ok(energy + normalizers)
}

fn log_transition(fwd: &ProductCategorical, from: &[usize], to: &[usize], beta: f64) -> f64 {
    let mut total = 0.0;
    for (i, (&a, &b)) in from.iter().zip(to).enumerate() {
        match transition_prob(a, b, fwd.cdf_table(i), beta) {
            Ok(p) => total += p.ln(),
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    total
}

fn overrelaxed_ratio(
    lattice: &LatticeSpec,
    cur: &Point,
    prop: &Point,
    fwd: &ProductCategorical,
    u_half: &[f64],
    u_star: &[f64],
    params: &SamplerParams,
) -> Result<f64> {
    let delta = params.delta;
    let anchor_b: Vec<f64> = prop.s.iter().zip(u_star).map(|(s, u)| s + delta * u).collect();
    let bwd = anchored_kernel(lattice, &prop.grad, &anchor_b, delta)?;
    let log_fwd = log_transition(fwd, &cur.idx, &prop.idx, params.beta);
    let log_bwd = log_transition(&bwd, &prop.idx, &cur.idx, params.beta);
    if log_bwd == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let joint = (prop.f - 0.5 * norm_sq(u_star)) - (cur.f - 0.5 * norm_sq(u_half));
    Ok(joint + log_bwd - log_fwd)
}

pub(super) fn step<T: TargetModel + ?Sized>(
    target: &T,
    cur: &Point,
    u: &[f64],
    params: &SamplerParams,
    overrelaxed: bool,
    rng: &mut RngStream,
) -> Result<(StepOutcome, Option<Point>)> {
    let lattice = target.lattice();
    lattice.check_dim(u.len())?;
    let d = cur.s.len();
    let (eps, delta) = (params.epsilon, params.delta);
    let noise = draw_std_normal_vector(rng, d);
    let scale = (1.0 - eps * eps).sqrt();
    let u_half: Vec<f64> = u.iter().zip(&noise).map(|(u, z)| eps * u + scale * z).collect();
    let anchor_f = forward_anchor(&cur.s, &u_half, delta);
    let fwd = anchored_kernel(lattice, &cur.grad, &anchor_f, delta)?;
    let reversed: Vec<f64> = u_half.iter().map(|x| -x).collect();

    let idx = if overrelaxed {
        let mut idx = Vec::with_capacity(d);
        for i in 0..d {
            match sample_overrelaxed(cur.idx[i], fwd.cdf_table(i), params.beta, rng) {
                Ok(draw) => idx.push(draw.x1),
                Err(_) => {
                    // The forward reference gives the current value no mass: reject.
                    let _ = accept(f64::NEG_INFINITY, rng);
                    let outcome = StepOutcome {
                        proposal_s: cur.s.clone(),
                        proposal_u: None,
                        log_accept_ratio: f64::NEG_INFINITY,
                        accepted: false,
                        next: ChainState::new(cur.s.clone(), reversed),
                    };
                    return Ok((outcome, None));
                }
            }
        }
        idx
    } else {
        sample_product_indices(&fwd, rng).0
    };

    let prop = Point::from_indices(target, idx)?;
    let u_star = proposed_momentum(cur, &prop, &u_half, delta, params.phi);
    let log_ratio = if overrelaxed {
        overrelaxed_ratio(lattice, cur, &prop, &fwd, &u_half, &u_star, params)?
    } else {
        vanilla_ratio(lattice, cur, &prop, &u_half, &u_star, delta)?
    };
    let accepted = accept(log_ratio, rng);
    let next = if accepted {
        ChainState::new(prop.s.clone(), u_star.clone())
    } else {
        ChainState::new(cur.s.clone(), reversed)
    };
    let outcome = StepOutcome {
        proposal_s: prop.s.clone(),
        proposal_u: Some(u_star),
        log_accept_ratio: log_ratio,
        accepted,
        next,
    };
    Ok((outcome, accepted.then_some(prop)))
}

/// Vanilla discrete HAMS step: momentum auto-regression, a product-form proposal anchored
/// at `s_t − δ·u_half`, and a generalized Metropolis–Hastings test with momentum negation.
pub fn vdhams_step<T: TargetModel + ?Sized>(
    target: &T,
    state: &ChainState,
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    super::step(SamplerKind::Vdhams, target, state, params, rng)
}

/// Over-relaxed discrete HAMS step: as [`vdhams_step`], but each coordinate of `s*` is an
/// over-relaxed draw from the forward reference started at `s_t,i`.
pub fn odhams_step<T: TargetModel + ?Sized>(
    target: &T,
    state: &ChainState,
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    super::step(SamplerKind::Odhams, target, state, params, rng)
}

fn points<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    u_half: &[f64],
    s_star: &[f64],
    params: &SamplerParams,
) -> Result<(Point, Point)> {
    params.validate()?;
    target.lattice().check_dim(u_half.len())?;
    Ok((
        Point::new(target, s_t.to_vec())?,
        Point::new(target, s_star.to_vec())?,
    ))
}

/// Vanilla DHAMS log acceptance ratio for a proposal `s_star` made from `(s_t, u_half)`.
/// Returns the ratio and the proposed momentum `u*`.
pub fn vdhams_log_ratio<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    u_half: &[f64],
    s_star: &[f64],
    params: &SamplerParams,
) -> Result<(f64, Vec<f64>)> {
    let (cur, prop) = points(target, s_t, u_half, s_star, params)?;
    let u_star = proposed_momentum(&cur, &prop, u_half, params.delta, params.phi);
    let r = vanilla_ratio(target.lattice(), &cur, &prop, u_half, &u_star, params.delta)?;
    Ok((r, u_star))
}

/// Over-relaxed DHAMS log acceptance ratio for a proposal `s_star` made from `(s_t, u_half)`.
/// Returns the ratio and the proposed momentum `u*`.
pub fn odhams_log_ratio<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    u_half: &[f64],
    s_star: &[f64],
    params: &SamplerParams,
) -> Result<(f64, Vec<f64>)> {
    let (cur, prop) = points(target, s_t, u_half, s_star, params)?;
    let lattice = target.lattice();
    let anchor_f = forward_anchor(&cur.s, u_half, params.delta);
    let fwd = anchored_kernel(lattice, &cur.grad, &anchor_f, params.delta)?;
    let u_star = proposed_momentum(&cur, &prop, u_half, params.delta, params.phi);
    let r = overrelaxed_ratio(lattice, &cur, &prop, &fwd, u_half, &u_star, params)?;
    Ok((r, u_star))
}

/// Log-probability that a DHAMS step from `(s_t, u_half)` proposes `s_star`.
pub fn dhams_proposal_log_prob<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    u_half: &[f64],
    s_star: &[f64],
    params: &SamplerParams,
    overrelaxed: bool,
) -> Result<f64> {
    let (cur, prop) = points(target, s_t, u_half, s_star, params)?;
    let anchor_f = forward_anchor(&cur.s, u_half, params.delta);
    let fwd = anchored_kernel(target.lattice(), &cur.grad, &anchor_f, params.delta)?;
    Ok(if overrelaxed {
        log_transition(&fwd, &cur.idx, &prop.idx, params.beta)
    } else {
        fwd.log_prob_indices(&prop.idx)
    })
}
