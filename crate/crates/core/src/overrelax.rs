//! Discrete over-relaxation through latent uniforms.
//!
//! A value `x0` drawn from a categorical `p` is represented by a latent
//! `w0 ∈ [F(x0⁻), F(x0))`. The latent moves by `w1 = (−w0 + β·w̃) mod 1` with
//! `w̃ ~ Unif[0,1)`, which keeps `Unif[0,1)` invariant and is reversible, and
//! the new value is the cell containing `w1`. `β = ±1` gives independent draws
//! from `p`; `β = 0` gives the most anti-correlated coupling.
//!
//! [`transition_prob`] evaluates `P(x1 = j | x0 = i)` exactly. For `β ≠ 0`,
//! `y = −w0 + β·w̃` (before wrapping) has a trapezoidal density equal to the
//! overlap length of `[−F(i), −F(i⁻)]` and `[y − max(0,β), y − min(0,β)]`,
//! divided by `|β|·p_i`. Integrating it exactly over the wrapped copies of
//! `[F(j⁻), F(j))` gives the transition probability in `O(1)` per entry.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A categorical distribution on `0..K` with its cumulative table. `F_K = 1` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfTable {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

fn compensated_prefix_sums(xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

impl CdfTable {
    /// Builds the table from nonnegative weights, normalizing them to sum to one.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty probability table".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total = *compensated_prefix_sums(probs).last().unwrap();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("probabilities sum to zero".into()));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let mut cdf = compensated_prefix_sums(&probs);
        let mut running = 0.0f64;
        for f in cdf.iter_mut() {
            running = running.max(f.min(1.0));
            *f = running;
        }
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self { probs, cdf })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::from_probs(&vec![1.0; k])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// `F(k⁻)`.
    pub fn lower(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.cdf[k - 1]
        }
    }

    /// `F(k)`.
    pub fn upper(&self, k: usize) -> f64 {
        self.cdf[k]
    }

    /// Length of the latent interval `[F(k⁻), F(k))`.
    pub fn width(&self, k: usize) -> f64 {
        self.upper(k) - self.lower(k)
    }

    /// The smallest `k` with `w < F(k)`, for `w ∈ [0, 1)`.
    pub fn locate(&self, w: f64) -> usize {
        self.cdf
            .partition_point(|&f| f <= w)
            .min(self.cdf.len() - 1)
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.len() {
            return Err(Error::InvalidParameter(format!(
                "index {k} out of range for {} cells",
                self.len()
            )));
        }
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && (-1.0..=1.0).contains(&beta)) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in [-1, 1], got {beta}"
        )));
    }
    Ok(())
}

fn check_unit(name: &str, w: f64) -> Result<()> {
    if !(w.is_finite() && (0.0..1.0).contains(&w)) {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1), got {w}"
        )));
    }
    Ok(())
}

/// `(−w0 + β·wt) mod 1`, mapped into `[0, 1)`.
pub fn latent_step(w0: f64, wt: f64, beta: f64) -> Result<f64> {
    check_unit("w0", w0)?;
    check_unit("wt", wt)?;
    check_beta(beta)?;
    Ok(wrap_unit(-w0 + beta * wt))
}

fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // A tiny negative operand can round up to exactly 1.
    if r >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        r
    }
}

/// Result of one over-relaxed draw, with the latent uniforms exposed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverrelaxedDraw {
    pub x1: usize,
    pub w0: f64,
    pub w1: f64,
}

/// Deterministic part of the update given `w0` and `w̃`.
pub fn overrelax_from_latents(cdf: &CdfTable, beta: f64, w0: f64, wt: f64) -> Result<OverrelaxedDraw> {
    let w1 = latent_step(w0, wt, beta)?;
    Ok(OverrelaxedDraw {
        x1: cdf.locate(w1),
        w0,
        w1,
    })
}

/// One over-relaxed draw starting from cell `x0`. Consumes two uniforms.
pub fn sample_overrelaxed(
    x0: usize,
    cdf: &CdfTable,
    beta: f64,
    rng: &mut RngStream,
) -> Result<OverrelaxedDraw> {
    cdf.check_index(x0)?;
    check_beta(beta)?;
    let width = cdf.width(x0);
    if width <= 0.0 {
        return Err(Error::ZeroProbability(x0));
    }
    let lo = cdf.lower(x0);
    let mut w0 = lo + width * rng.uniform();
    if w0 >= cdf.upper(x0) {
        // Rounding can land on the excluded right endpoint.
        w0 = lo;
    }
    let wt = rng.uniform();
    overrelax_from_latents(cdf, beta, w0, wt)
}

/// Overlap length of `[a, b]` and `[c, d]`.
fn overlap(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (b.min(d) - a.max(c)).max(0.0)
}

/// `∫_c^d g(y) dy` where `g(y)` is the overlap length of `[a, b]` and `[y − hi, y − lo]`.
fn trapezoid_mass(a: f64, b: f64, lo: f64, hi: f64, c: f64, d: f64) -> f64 {
    let left = c.max(a + lo);
    let right = d.min(b + hi);
    if right <= left {
        return 0.0;
    }
    let g = |y: f64| overlap(a, b, y - hi, y - lo);
    let mut knots = [left, a + hi, b + lo, right];
    knots[1..3].sort_by(f64::total_cmp);
    let mut area = 0.0;
    let mut x0 = left;
    let mut g0 = g(left);
    for &x in &knots[1..] {
        if x <= x0 {
            continue;
        }
        let x = x.min(right);
        let gx = g(x);
        area += 0.5 * (x - x0) * (g0 + gx);
        x0 = x;
        g0 = gx;
        if x0 >= right {
            break;
        }
    }
    area
}

/// `p_i · P(x1 = j | x0 = i)`, measured as latent-interval lengths. The measure is
/// symmetric in `(i, j)`, so it is always evaluated with `i ≤ j` to keep it symmetric
/// in floating point too.
fn joint_mass(cdf: &CdfTable, i: usize, j: usize, beta: f64) -> f64 {
    let (i, j) = (i.min(j), i.max(j));
    let (il, ir) = (cdf.lower(i), cdf.upper(i));
    let (jl, jr) = (cdf.lower(j), cdf.upper(j));
    if beta == 0.0 {
        return overlap(1.0 - ir, 1.0 - il, jl, jr);
    }
    let (lo, hi) = if beta > 0.0 { (0.0, beta) } else { (beta, 0.0) };
    let (a, b) = (-ir, -il);
    let area: f64 = (-2..=1)
        .map(|n| {
            let n = n as f64;
            trapezoid_mass(a, b, lo, hi, jl + n, jr + n)
        })
        .sum();
    area / beta.abs()
}

/// `P(x1 = j | x0 = i)` of the over-relaxed update.
pub fn transition_prob(i: usize, j: usize, cdf: &CdfTable, beta: f64) -> Result<f64> {
    cdf.check_index(i)?;
    cdf.check_index(j)?;
    check_beta(beta)?;
    let width = cdf.width(i);
    if width <= 0.0 {
        return Err(Error::ZeroProbability(i));
    }
    if beta.abs() == 1.0 {
        return Ok(cdf.probs()[j]);
    }
    Ok((joint_mass(cdf, i, j, beta) / width).clamp(0.0, 1.0))
}

/// Row `P(· | x0 = i)`.
pub fn transition_row(i: usize, cdf: &CdfTable, beta: f64) -> Result<Vec<f64>> {
    (0..cdf.len()).map(|j| transition_prob(i, j, cdf, beta)).collect()
}

/// Full transition matrix. Rows of zero-probability cells are left as zeros.
pub fn transition_matrix(cdf: &CdfTable, beta: f64) -> Result<Vec<Vec<f64>>> {
    check_beta(beta)?;
    (0..cdf.len())
        .map(|i| {
            if cdf.width(i) > 0.0 {
                transition_row(i, cdf, beta)
            } else {
                Ok(vec![0.0; cdf.len()])
            }
        })
        .collect()
}

/// Sample correlation of `(w0, w1)` with `w0 ~ Unif[0,1)`.
pub fn correlation_at_beta(beta: f64, n_samples: usize, rng: &mut RngStream) -> Result<f64> {
    check_beta(beta)?;
    if n_samples < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 10000 samples, got {n_samples}"
        )));
    }
    let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for n in 1..=n_samples {
        let w0 = rng.uniform();
        let w1 = latent_step(w0, rng.uniform(), beta)?;
        let nf = n as f64;
        let dx = w0 - mx;
        let dy = w1 - my;
        mx += dx / nf;
        my += dy / nf;
        sxx += dx * (w0 - mx);
        syy += dy * (w1 - my);
        sxy += dx * (w1 - my);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BETAS: [f64; 7] = [-1.0, -0.62, -0.37, 0.0, 0.37, 0.62, 1.0];

    #[test]
    fn latent_step_examples() {
        assert!((latent_step(0.3, 0.9, 0.0).unwrap() - 0.7).abs() < 1e-15);
        assert!((latent_step(0.2, 0.5, 1.0).unwrap() - 0.3).abs() < 1e-15);
        assert!((latent_step(0.1, 0.4, -0.5).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn latent_step_rejects_out_of_range() {
        assert!(latent_step(1.0, 0.5, 0.5).is_err());
        assert!(latent_step(-0.1, 0.5, 0.5).is_err());
        assert!(latent_step(0.5, 1.0, 0.5).is_err());
        assert!(latent_step(0.5, 0.5, 1.5).is_err());
    }

    #[test]
    fn wrap_never_returns_one() {
        assert!(wrap_unit(-1e-20) < 1.0);
        assert_eq!(wrap_unit(0.0), 0.0);
    }

    #[test]
    fn bernoulli_forced_latent() {
        let cdf = CdfTable::from_probs(&[0.7, 0.3]).unwrap();
        let d = overrelax_from_latents(&cdf, 0.0, 0.2, 0.123).unwrap();
        assert!((d.w1 - 0.8).abs() < 1e-15);
        assert_eq!(d.x1, 1);
    }

    #[test]
    fn single_cell_is_fixed() {
        let cdf = CdfTable::from_probs(&[1.0]).unwrap();
        let mut rng = RngStream::new(0, 0);
        for beta in BETAS {
            for _ in 0..100 {
                assert_eq!(sample_overrelaxed(0, &cdf, beta, &mut rng).unwrap().x1, 0);
            }
            assert_eq!(transition_prob(0, 0, &cdf, beta).unwrap(), 1.0);
        }
    }

    #[test]
    fn zero_probability_start_is_an_error() {
        let cdf = CdfTable::from_probs(&[0.5, 0.0, 0.5]).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert!(matches!(
            sample_overrelaxed(1, &cdf, 0.5, &mut rng),
            Err(Error::ZeroProbability(1))
        ));
        assert!(matches!(
            transition_prob(1, 0, &cdf, 0.5),
            Err(Error::ZeroProbability(1))
        ));
    }

    #[test]
    fn unit_beta_is_independent() {
        let cdf = CdfTable::from_probs(&[0.1, 0.25, 0.05, 0.4, 0.2]).unwrap();
        for beta in [1.0, -1.0] {
            for i in 0..5 {
                for j in 0..5 {
                    let p = transition_prob(i, j, &cdf, beta).unwrap();
                    assert!((p - cdf.probs()[j]).abs() < 1e-12, "{beta} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn unit_beta_integral_agrees_with_shortcut() {
        let cdf = CdfTable::from_probs(&[0.1, 0.25, 0.05, 0.4, 0.2]).unwrap();
        for beta in [1.0, -1.0] {
            for i in 0..5 {
                for j in 0..5 {
                    let p = joint_mass(&cdf, i, j, beta) / cdf.width(i);
                    assert!((p - cdf.probs()[j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_beta_sampling_frequencies() {
        let cdf = CdfTable::from_probs(&[0.1, 0.25, 0.05, 0.4, 0.2]).unwrap();
        let n = 1_000_000;
        for beta in [1.0, -1.0] {
            let mut rng = RngStream::new(99, 0);
            let mut counts = [0usize; 5];
            for t in 0..n {
                counts[sample_overrelaxed(t % 5, &cdf, beta, &mut rng).unwrap().x1] += 1;
            }
            for (j, &c) in counts.iter().enumerate() {
                let p = cdf.probs()[j];
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((c as f64 / n as f64 - p).abs() < 4.0 * se);
            }
        }
    }

    #[test]
    fn bernoulli_minimal_coupling() {
        let cdf = CdfTable::from_probs(&[0.7, 0.3]).unwrap();
        let p00 = transition_prob(0, 0, &cdf, 0.0).unwrap();
        assert!((p00 - 4.0 / 7.0).abs() < 1e-12);
        assert!((0.7 * p00 - 0.4).abs() < 1e-12);
    }

    fn random_table(k: usize, rng: &mut RngStream) -> CdfTable {
        let w: Vec<f64> = (0..k).map(|_| 0.05 + rng.uniform()).collect();
        CdfTable::from_probs(&w).unwrap()
    }

    #[test]
    fn rows_balance_and_marginals() {
        let mut rng = RngStream::new(1234, 0);
        for k in [2, 3, 5, 10] {
            for _ in 0..5 {
                let cdf = random_table(k, &mut rng);
                let p = cdf.probs();
                for beta in BETAS {
                    let m = transition_matrix(&cdf, beta).unwrap();
                    for i in 0..k {
                        assert!((m[i].iter().sum::<f64>() - 1.0).abs() < 1e-10);
                        for j in 0..k {
                            assert!((p[i] * m[i][j] - p[j] * m[j][i]).abs() < 1e-10);
                        }
                    }
                    for j in 0..k {
                        let col: f64 = (0..k).map(|i| p[i] * m[i][j]).sum();
                        assert!((col - p[j]).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn matches_monte_carlo_on_small_table() {
        let cdf = CdfTable::from_probs(&[0.15, 0.5, 0.35]).unwrap();
        let n = 200_000;
        let mut rng = RngStream::new(5, 5);
        for beta in [0.37, -0.62] {
            for i in 0..3 {
                let mut counts = [0usize; 3];
                for _ in 0..n {
                    counts[sample_overrelaxed(i, &cdf, beta, &mut rng).unwrap().x1] += 1;
                }
                for (j, &c) in counts.iter().enumerate() {
                    let p = transition_prob(i, j, &cdf, beta).unwrap();
                    let se = (p * (1.0 - p) / n as f64).sqrt();
                    let tol = 4.0 * se + 1.0 / n as f64;
                    assert!((c as f64 / n as f64 - p).abs() < tol, "{beta} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn zero_beta_correlation_is_minus_one() {
        let mut rng = RngStream::new(3, 0);
        let r = correlation_at_beta(0.0, 100_000, &mut rng).unwrap();
        assert!((r + 1.0).abs() < 1e-6);
    }

    #[test]
    fn unit_beta_correlation_is_zero() {
        let n = 1_000_000;
        for beta in [1.0, -1.0] {
            let mut rng = RngStream::new(4, 0);
            let r = correlation_at_beta(beta, n, &mut rng).unwrap();
            assert!(r.abs() < 5.0 / (n as f64).sqrt(), "{r}");
        }
    }

    /// `corr(w0, w1)` by quadrature of the joint density: given `w0`, `w1` is uniform on
    /// the arc `[−w0, −w0 + β]` wrapped to the unit interval. The inner integral is split
    /// where the arc wraps so each piece is linear; the outer one uses the midpoint rule.
    fn quadrature_correlation(beta: f64, n: usize) -> f64 {
        assert!(beta > 0.0);
        let h = 1.0 / n as f64;
        let mut exy = 0.0;
        for a in 0..n {
            let w0 = (a as f64 + 0.5) * h;
            let mut cuts = vec![0.0, 1.0];
            if w0 < beta {
                cuts.insert(1, w0 / beta);
            }
            let inner: f64 = cuts
                .windows(2)
                .map(|c| {
                    let mid = 0.5 * (c[0] + c[1]);
                    (c[1] - c[0]) * (-w0 + beta * mid).rem_euclid(1.0)
                })
                .sum();
            exy += w0 * inner * h;
        }
        (exy - 0.25) * 12.0
    }

    #[test]
    fn half_beta_correlation_matches_quadrature() {
        let n = 1_000_000;
        let mut rng = RngStream::new(6, 0);
        let r = correlation_at_beta(0.5, n, &mut rng).unwrap();
        let want = quadrature_correlation(0.5, 2000);
        let se = (1.0 - want * want) / (n as f64).sqrt();
        assert!((r - want).abs() < 3.0 * se, "{r} vs {want}");
    }

    #[test]
    fn correlation_needs_enough_samples() {
        let mut rng = RngStream::new(0, 0);
        assert!(correlation_at_beta(0.5, 100, &mut rng).is_err());
    }

    #[test]
    fn locate_skips_empty_cells() {
        let cdf = CdfTable::from_probs(&[0.5, 0.0, 0.5]).unwrap();
        assert_eq!(cdf.locate(0.0), 0);
        assert_eq!(cdf.locate(0.5), 2);
        assert_eq!(cdf.locate(0.999_999), 2);
    }

    proptest! {
        #[test]
        fn latent_step_in_unit_interval(w0 in 0.0f64..1.0, wt in 0.0f64..1.0, beta in -1.0f64..=1.0) {
            let w1 = latent_step(w0, wt, beta).unwrap();
            prop_assert!((0.0..1.0).contains(&w1));
        }

        #[test]
        fn detailed_balance_on_random_tables(
            w in prop::collection::vec(0.0f64..1.0, 2..8),
            beta in -1.0f64..=1.0,
        ) {
            prop_assume!(w.iter().sum::<f64>() > 1e-3);
            let cdf = CdfTable::from_probs(&w).unwrap();
            let m = transition_matrix(&cdf, beta).unwrap();
            let p = cdf.probs();
            for i in 0..w.len() {
                if p[i] > 0.0 {
                    prop_assert!((m[i].iter().sum::<f64>() - 1.0).abs() < 1e-10);
                }
                for j in 0..w.len() {
                    prop_assert!((p[i] * m[i][j] - p[j] * m[j][i]).abs() < 1e-10);
                }
            }
        }
    }
}
