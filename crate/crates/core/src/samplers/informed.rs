use super::{dot, plain_outcome, Point, StepOutcome};
use crate::error::Result;
use crate::lattice::{ChainState, LatticeSpec};
use crate::params::{SamplerKind, SamplerParams};
use crate::proposal::{
    informed_weights, log_normalizer_sums, sample_product_indices, ProductCategorical,
};
use crate::rng::{draw_std_normal_vector, RngStream};
use crate::target::TargetModel;

fn ncg_kernel(lattice: &LatticeSpec, p: &Point, delta: f64) -> Result<ProductCategorical> {
    let c: Vec<f64> = p
        .grad
        .iter()
        .zip(&p.s)
        .map(|(g, s)| 0.5 * g + s / delta)
        .collect();
    informed_weights(&c, 0.5 / delta, lattice)
}

pub(super) fn ncg<T: TargetModel + ?Sized>(
    target: &T,
    cur: &Point,
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<(StepOutcome, Option<Point>)> {
    let lattice = target.lattice();
    let fwd = ncg_kernel(lattice, cur, params.delta)?;
    let (idx, log_fwd) = sample_product_indices(&fwd, rng);
    let proposal = Point::from_indices(target, idx)?;
    let bwd = ncg_kernel(lattice, &proposal, params.delta)?;
    let log_bwd = bwd.log_prob_indices(&cur.idx);
    let log_ratio = proposal.f - cur.f + log_bwd - log_fwd;
    Ok(plain_outcome(cur, proposal, log_ratio, rng))
}

/// The NCG proposal distribution at `s_t`.
pub fn ncg_proposal<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    delta: f64,
) -> Result<ProductCategorical> {
    let p = Point::new(target, s_t.to_vec())?;
    ncg_kernel(target.lattice(), &p, delta)
}

/// NCG log acceptance ratio for the move `s_t → s_star`.
pub fn ncg_log_ratio<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    s_star: &[f64],
    delta: f64,
) -> Result<f64> {
    let cur = Point::new(target, s_t.to_vec())?;
    let prop = Point::new(target, s_star.to_vec())?;
    let fwd = ncg_kernel(target.lattice(), &cur, delta)?;
    let bwd = ncg_kernel(target.lattice(), &prop, delta)?;
    Ok(prop.f - cur.f + bwd.log_prob_indices(&cur.idx) - fwd.log_prob_indices(&prop.idx))
}

/// Kernel with `ℓ_i(a) = g_i·a − (a − anchor_i)²/(2δ²)`, up to a constant in `a`.
pub(super) fn anchored_kernel(
    lattice: &LatticeSpec,
    grad: &[f64],
    anchor: &[f64],
    delta: f64,
) -> Result<ProductCategorical> {
    let inv = 1.0 / (delta * delta);
    let c: Vec<f64> = grad.iter().zip(anchor).map(|(g, z)| g + z * inv).collect();
    informed_weights(&c, 0.5 * inv, lattice)
}

fn avg_ratio(lattice: &LatticeSpec, cur: &Point, prop: &Point, z: &[f64], delta: f64) -> Result<f64> {
    let q = 0.5 / (delta * delta);
    let lhs = log_normalizer_sums(&cur.grad, z, q, lattice)? - dot(&cur.grad, &cur.s);
    let rhs = log_normalizer_sums(&prop.grad, z, q, lattice)? - dot(&prop.grad, &prop.s);
    let diff: Vec<f64> = cur.s.iter().zip(&prop.s).map(|(a, b)| a - b).collect();
    let gsum: Vec<f64> = cur.grad.iter().zip(&prop.grad).map(|(a, b)| a + b).collect();
    Ok(lhs - rhs + (prop.f - cur.f) + dot(&gsum, &diff))
}

pub(super) fn avg<T: TargetModel + ?Sized>(
    target: &T,
    cur: &Point,
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<(StepOutcome, Option<Point>)> {
    let lattice = target.lattice();
    let delta = params.delta;
    let noise = draw_std_normal_vector(rng, cur.s.len());
    let z: Vec<f64> = cur.s.iter().zip(&noise).map(|(s, e)| s + delta * e).collect();
    let fwd = anchored_kernel(lattice, &cur.grad, &z, delta)?;
    let (idx, _) = sample_product_indices(&fwd, rng);
    let proposal = Point::from_indices(target, idx)?;
    let log_ratio = avg_ratio(lattice, cur, &proposal, &z, delta)?;
    Ok(plain_outcome(cur, proposal, log_ratio, rng))
}

/// AVG log acceptance ratio for `s_t → s_star` given the auxiliary point `z`.
pub fn avg_log_ratio<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    z: &[f64],
    s_star: &[f64],
    delta: f64,
) -> Result<f64> {
    let lattice = target.lattice();
    lattice.check_dim(z.len())?;
    let cur = Point::new(target, s_t.to_vec())?;
    let prop = Point::new(target, s_star.to_vec())?;
    avg_ratio(lattice, &cur, &prop, z, delta)
}

/// Gradient-informed sampler with a product-form proposal centered on a Langevin step.
pub fn ncg_step<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    super::step(SamplerKind::Ncg, target, &ChainState::at_rest(s_t.to_vec()), params, rng)
}

/// Auxiliary-variable gradient sampler: draws `z ~ N(s_t, δ²I)` and then `s*` given `z`.
pub fn avg_step<T: TargetModel + ?Sized>(
    target: &T,
    s_t: &[f64],
    params: &SamplerParams,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    super::step(SamplerKind::Avg, target, &ChainState::at_rest(s_t.to_vec()), params, rng)
}
