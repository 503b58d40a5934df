use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::proposal::logsumexp;
use crate::target::TargetModel;

/// Equi-correlated discrete Gaussian on `{-k, ..., k}^d` with
/// `Σ = σ²[ρ11ᵀ + (1 − ρ)I]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquiCorrGaussianSpec {
    pub dim: usize,
    pub k: usize,
    pub sigma: f64,
    pub rho: f64,
}

#[derive(Clone, Debug)]
pub struct DiscreteGaussian {
    lattice: LatticeSpec,
    spec: EquiCorrGaussianSpec,
    /// `1 / (σ²(1 − ρ))`.
    scale: f64,
    /// `ρ / (1 + (d − 1)ρ)`.
    shrink: f64,
}

pub fn discrete_gaussian(spec: &EquiCorrGaussianSpec) -> Result<DiscreteGaussian> {
    let d = spec.dim;
    if !(spec.sigma.is_finite() && spec.sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {}",
            spec.sigma
        )));
    }
    let lower = if d > 1 { -1.0 / (d as f64 - 1.0) } else { f64::NEG_INFINITY };
    if !(spec.rho.is_finite() && spec.rho < 1.0 && spec.rho > lower) {
        return Err(Error::NotPositiveDefinite(format!(
            "rho = {} is outside ({lower}, 1) for d = {d}",
            spec.rho
        )));
    }
    if spec.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let lattice = LatticeSpec::symmetric_integer(d, spec.k)?;
    let scale = 1.0 / (spec.sigma * spec.sigma * (1.0 - spec.rho));
    let shrink = spec.rho / (1.0 + (d as f64 - 1.0) * spec.rho);
    Ok(DiscreteGaussian {
        lattice,
        spec: spec.clone(),
        scale,
        shrink,
    })
}

impl DiscreteGaussian {
    pub fn spec(&self) -> &EquiCorrGaussianSpec {
        &self.spec
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let (s2, rho) = (self.spec.sigma * self.spec.sigma, self.spec.rho);
        let d = self.spec.dim;
        DMatrix::from_fn(d, d, |i, j| if i == j { s2 } else { s2 * rho })
    }

    pub fn precision(&self) -> DMatrix<f64> {
        let d = self.spec.dim;
        DMatrix::from_fn(d, d, |i, j| {
            self.scale * (if i == j { 1.0 } else { 0.0 } - self.shrink)
        })
    }
}

impl TargetModel for DiscreteGaussian {
    fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    fn potential(&self, s: &[f64]) -> f64 {
        let sum: f64 = s.iter().sum();
        let sq: f64 = s.iter().map(|x| x * x).sum();
        -0.5 * self.scale * (sq - self.shrink * sum * sum)
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let sum: f64 = s.iter().sum();
        s.iter()
            .map(|x| -self.scale * (x - self.shrink * sum))
            .collect()
    }

    fn is_permutation_symmetric(&self) -> bool {
        true
    }

    fn name(&self) -> &str {
        "discrete_gaussian"
    }
}

/// Equal-weight mixture of discretized Gaussian kernels on `{-k, ..., k}^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub dim: usize,
    pub k: usize,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
}

impl MixtureSpec {
    /// Components with means `c_m·1` and covariance `var·I`.
    pub fn diagonal_line(dim: usize, k: usize, centers: &[f64], var: f64) -> Self {
        let cov: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { var } else { 0.0 }).collect())
            .collect();
        Self {
            dim,
            k,
            means: centers.iter().map(|&c| vec![c; dim]).collect(),
            covariances: vec![cov; centers.len()],
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadraticMixture {
    lattice: LatticeSpec,
    means: Vec<DVector<f64>>,
    precisions: Vec<DMatrix<f64>>,
    symmetric: bool,
}

fn is_equicorrelated(m: &DMatrix<f64>) -> bool {
    let d = m.nrows();
    let diag = m[(0, 0)];
    let off = if d > 1 { m[(0, 1)] } else { 0.0 };
    (0..d).all(|i| (0..d).all(|j| m[(i, j)] == if i == j { diag } else { off }))
}

pub fn quadratic_mixture(spec: &MixtureSpec) -> Result<QuadraticMixture> {
    let d = spec.dim;
    if spec.means.is_empty() || spec.means.len() != spec.covariances.len() {
        return Err(Error::InvalidParameter(
            "mixture needs one covariance per mean and at least one component".into(),
        ));
    }
    if spec.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let lattice = LatticeSpec::symmetric_integer(d, spec.k)?;
    let mut means = Vec::new();
    let mut precisions = Vec::new();
    let mut symmetric = true;
    for (m, (mu, cov)) in spec.means.iter().zip(&spec.covariances).enumerate() {
        lattice.check_dim(mu.len())?;
        if cov.len() != d || cov.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter(format!(
                "covariance {m} is not {d}x{d}"
            )));
        }
        if mu.iter().chain(cov.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("mixture spec"));
        }
        let c = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        if (&c - c.transpose()).abs().max() > 1e-12 * c.abs().max().max(1.0) {
            return Err(Error::NotPositiveDefinite(format!("covariance {m} is not symmetric")));
        }
        let chol = c
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite(format!("covariance {m}")))?;
        symmetric &= mu.windows(2).all(|w| w[0] == w[1]) && is_equicorrelated(&c);
        means.push(DVector::from_vec(mu.clone()));
        precisions.push(chol.inverse());
    }
    Ok(QuadraticMixture {
        lattice,
        means,
        precisions,
        symmetric,
    })
}

impl QuadraticMixture {
    fn exponents(&self, s: &[f64]) -> (Vec<f64>, Vec<DVector<f64>>) {
        let s = DVector::from_column_slice(s);
        let mut ex = Vec::with_capacity(self.means.len());
        let mut pulls = Vec::with_capacity(self.means.len());
        for (mu, p) in self.means.iter().zip(&self.precisions) {
            let diff = mu - &s;
            let pull = p * &diff;
            ex.push(-0.5 * diff.dot(&pull));
            pulls.push(pull);
        }
        (ex, pulls)
    }

    pub fn num_components(&self) -> usize {
        self.means.len()
    }
}

impl TargetModel for QuadraticMixture {
    fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    fn potential(&self, s: &[f64]) -> f64 {
        logsumexp(&self.exponents(s).0)
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        self.potential_and_gradient(s).1
    }

    fn potential_and_gradient(&self, s: &[f64]) -> (f64, Vec<f64>) {
        let (ex, pulls) = self.exponents(s);
        let f = logsumexp(&ex);
        let mut g = DVector::zeros(s.len());
        for (e, pull) in ex.iter().zip(&pulls) {
            g.axpy((e - f).exp(), pull, 1.0);
        }
        (f, g.as_slice().to_vec())
    }

    fn is_permutation_symmetric(&self) -> bool {
        self.symmetric
    }

    fn name(&self) -> &str {
        "quadratic_mixture"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::exact_joint;
    use crate::rng::RngStream;

    fn central_difference(t: &dyn TargetModel, s: &[f64], h: f64) -> Vec<f64> {
        (0..s.len())
            .map(|i| {
                let mut p = s.to_vec();
                let mut m = s.to_vec();
                p[i] += h;
                m[i] -= h;
                (t.potential(&p) - t.potential(&m)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn origin_is_flat() {
        let t = discrete_gaussian(&EquiCorrGaussianSpec { dim: 3, k: 2, sigma: 1.0, rho: 0.5 }).unwrap();
        assert_eq!(t.potential(&[0.0; 3]), 0.0);
        assert!(t.gradient(&[0.0; 3]).iter().all(|g| *g == 0.0));
    }

    #[test]
    fn uncorrelated_case() {
        let t = discrete_gaussian(&EquiCorrGaussianSpec { dim: 3, k: 3, sigma: 1.7, rho: 0.0 }).unwrap();
        let s = [1.0, -2.0, 3.0];
        let want = -(1.0 + 4.0 + 9.0) / (2.0 * 1.7 * 1.7);
        assert!((t.potential(&s) - want).abs() < 1e-14);
    }

    #[test]
    fn closed_form_inverse_and_gradient() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..20 {
            let d = 2 + rng.below(6);
            let lower = -1.0 / (d as f64 - 1.0);
            let rho = lower + (1.0 - lower) * (0.05 + 0.9 * rng.uniform());
            let spec = EquiCorrGaussianSpec { dim: d, k: 3, sigma: 0.5 + 2.0 * rng.uniform(), rho };
            let t = discrete_gaussian(&spec).unwrap();
            let eye = t.covariance() * t.precision();
            assert!((eye - DMatrix::identity(d, d)).abs().max() < 1e-10);
            let s: Vec<f64> = (0..d).map(|_| rng.below(7) as f64 - 3.0).collect();
            let fd = central_difference(&t, &s, 1e-5);
            for (g, f) in t.gradient(&s).iter().zip(&fd) {
                assert!(rel_err(*g, *f) < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_non_positive_definite() {
        assert!(discrete_gaussian(&EquiCorrGaussianSpec { dim: 3, k: 2, sigma: 1.0, rho: -0.5 }).is_err());
        assert!(discrete_gaussian(&EquiCorrGaussianSpec { dim: 3, k: 2, sigma: 1.0, rho: 1.0 }).is_err());
        assert!(discrete_gaussian(&EquiCorrGaussianSpec { dim: 3, k: 2, sigma: 0.0, rho: 0.0 }).is_err());
    }

    #[test]
    fn even_potential_gives_symmetric_joint() {
        let t = discrete_gaussian(&EquiCorrGaussianSpec { dim: 2, k: 2, sigma: 1.5, rho: 0.5 }).unwrap();
        let joint = exact_joint(&t, 1000).unwrap();
        let p = joint.probs();
        let n = p.len();
        for c in 0..n {
            assert!((p[c] - p[n - 1 - c]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_standard_component() {
        let t = quadratic_mixture(&MixtureSpec::diagonal_line(1, 3, &[0.0], 1.0)).unwrap();
        assert!((t.potential(&[2.0]) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn separated_components_dominant_term() {
        let spec = MixtureSpec::diagonal_line(2, 10, &[-7.0, 0.0, 7.0], 0.5);
        let t = quadratic_mixture(&spec).unwrap();
        // Cross-component exponent at μ_1: −½·(7² + 7²)/0.5 = −98.
        let f = t.potential(&[-7.0, -7.0]);
        assert!(f.abs() <= (-98.0f64).exp() * 2.0 + 1e-300);
    }

    #[test]
    fn mixture_gradient_matches_finite_differences() {
        let mut rng = RngStream::new(2, 0);
        for _ in 0..20 {
            let d = 3;
            let means: Vec<Vec<f64>> = (0..3).map(|_| (0..d).map(|_| 6.0 * (rng.uniform() - 0.5)).collect()).collect();
            let covariances: Vec<Vec<Vec<f64>>> = (0..3)
                .map(|_| {
                    let a = DMatrix::from_fn(d, d, |_, _| rng.uniform() - 0.5);
                    let c = &a * a.transpose() + DMatrix::identity(d, d) * 0.5;
                    (0..d).map(|i| (0..d).map(|j| c[(i, j)]).collect()).collect()
                })
                .collect();
            let t = quadratic_mixture(&MixtureSpec { dim: d, k: 3, means, covariances }).unwrap();
            let s: Vec<f64> = (0..d).map(|_| rng.below(7) as f64 - 3.0).collect();
            let fd = central_difference(&t, &s, 1e-5);
            for (g, f) in t.gradient(&s).iter().zip(&fd) {
                assert!(rel_err(*g, *f) < 1e-6, "{g} vs {f}");
            }
        }
    }

    #[test]
    fn symmetry_detection() {
        let sym = quadratic_mixture(&MixtureSpec::diagonal_line(3, 3, &[-1.0, 1.0], 0.8)).unwrap();
        assert!(sym.is_permutation_symmetric());
        let mut spec = MixtureSpec::diagonal_line(3, 3, &[-1.0, 1.0], 0.8);
        spec.means[0][1] = 0.5;
        assert!(!quadratic_mixture(&spec).unwrap().is_permutation_symmetric());
    }

    #[test]
    fn permutation_invariance() {
        let g = discrete_gaussian(&EquiCorrGaussianSpec { dim: 4, k: 3, sigma: 1.1, rho: 0.3 }).unwrap();
        let m = quadratic_mixture(&MixtureSpec::diagonal_line(4, 3, &[-2.0, 1.5], 0.7)).unwrap();
        let s = [1.0, -3.0, 2.0, 0.0];
        let p = [2.0, 0.0, -3.0, 1.0];
        assert!((g.potential(&s) - g.potential(&p)).abs() < 1e-12);
        assert!((m.potential(&s) - m.potential(&p)).abs() < 1e-12);
    }
}
