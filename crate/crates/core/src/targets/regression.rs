use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::target::TargetModel;

/// How the gradient of the marginal posterior is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Differentiate as if `X·diag(s)` were the column-selected `X_s`.
    #[default]
    ColumnRestricted,
    /// Differentiate the continuous extension with `X·diag(s)` exactly.
    Exact,
}

/// Bayesian variable selection with a ridge-type g-prior.
#[derive(Clone, Debug)]
pub struct RegressionSpec {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub alpha_psi: f64,
    pub beta_psi: f64,
    pub alpha_sigma: f64,
    pub beta_sigma: f64,
    pub g: f64,
    pub kappa: f64,
    pub lambda: f64,
}

impl RegressionSpec {
    /// Default hyper-parameters: `α_ψ = 0.1`, `β_ψ = 10`, `α_σ = β_σ = 0.1`, `g = n`,
    /// `κ = 0.995` and `λ` calibrated from `X`.
    pub fn with_defaults(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let kappa = 0.995;
        let lambda = calibrate_ridge_lambda(&x, kappa)?;
        Ok(Self {
            g: x.nrows() as f64,
            x,
            y,
            alpha_psi: 0.1,
            beta_psi: 10.0,
            alpha_sigma: 0.1,
            beta_sigma: 0.1,
            kappa,
            lambda,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = self.x.shape();
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter("design matrix is empty".into()));
        }
        if self.y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.y.len() });
        }
        if self.x.iter().chain(self.y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("regression data"));
        }
        let positive = [
            ("alpha_psi", self.alpha_psi),
            ("beta_psi", self.beta_psi),
            ("alpha_sigma", self.alpha_sigma),
            ("beta_sigma", self.beta_sigma),
            ("g", self.g),
            ("lambda", self.lambda),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa must lie in (0, 1], got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// `λ = (1 − κ)·tr(XᵀX)/d`.
pub fn calibrate_ridge_lambda(x: &DMatrix<f64>, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa must lie in (0, 1], got {kappa}"
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidParameter("design matrix has no columns".into()));
    }
    let trace: f64 = x.iter().map(|v| v * v).sum();
    Ok((1.0 - kappa) * trace / x.ncols() as f64)
}

/// Log marginal posterior of the inclusion mask `s ∈ {0,1}^d`, up to a constant.
#[derive(Clone, Debug)]
pub struct RegressionPosterior {
    lattice: LatticeSpec,
    spec: RegressionSpec,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    mode: GradientMode,
}

pub fn regression_posterior(spec: RegressionSpec, mode: GradientMode) -> Result<RegressionPosterior> {
    spec.validate()?;
    let lattice = LatticeSpec::binary(spec.x.ncols())?;
    let gram = spec.x.tr_mul(&spec.x);
    let xty = spec.x.tr_mul(&spec.y);
    let yty = spec.y.dot(&spec.y);
    Ok(RegressionPosterior { lattice, spec, gram, xty, yty, mode })
}

fn chol_logdet(c: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

impl RegressionPosterior {
    pub fn spec(&self) -> &RegressionSpec {
        &self.spec
    }

    pub fn gradient_mode(&self) -> GradientMode {
        self.mode
    }

    pub fn with_gradient_mode(mut self, mode: GradientMode) -> Self {
        self.mode = mode;
        self
    }

    fn c_sigma(&self) -> f64 {
        self.spec.alpha_sigma + 0.5 * self.spec.x.nrows() as f64
    }

    fn prior(&self, s: &[f64]) -> (f64, f64) {
        let d = s.len() as f64;
        let k: f64 = s.iter().sum();
        let (a, b) = (k + self.spec.alpha_psi, d - k + self.spec.beta_psi);
        (ln_gamma(a) + ln_gamma(b), digamma(a) - digamma(b))
    }

    /// `f(s)` and, when requested, its gradient under `mode`. Works on the
    /// continuous extension, so `s` need not be binary.
    pub fn evaluate(&self, s: &[f64], mode: Option<GradientMode>) -> Result<(f64, Option<Vec<f64>>)> {
        self.lattice.check_dim(s.len())?;
        let sp = &self.spec;
        let (prior, dprior) = self.prior(s);
        let sel: Vec<usize> = (0..s.len()).filter(|&i| s[i] != 0.0).collect();
        let m = sel.len();
        let c_sigma = self.c_sigma();
        let gk = sp.g + sp.kappa;

        let dvals: Vec<f64> = sel.iter().map(|&i| s[i]).collect();
        let g_ss = DMatrix::from_fn(m, m, |a, b| self.gram[(sel[a], sel[b])]);
        let b_s = DVector::from_fn(m, |a, _| self.xty[sel[a]]);
        let dgd = DMatrix::from_fn(m, m, |a, b| dvals[a] * g_ss[(a, b)] * dvals[b]);
        let v = DVector::from_fn(m, |a, _| dvals[a] * b_s[a]);
        let eye = DMatrix::<f64>::identity(m, m);

        let a1 = (&dgd + &eye * sp.lambda)
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("X̃ᵀX̃ + λI".into()))?;
        let a2 = (&dgd * gk + &eye * sp.lambda)
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("(g+κ)X̃ᵀX̃ + λI".into()))?;
        let tv = a2.solve(&v);
        let h = 2.0 * sp.beta_sigma + self.yty - sp.g * v.dot(&tv);
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::NonFinite("residual sum of squares"));
        }
        let f = prior + 0.5 * (chol_logdet(&a1) - chol_logdet(&a2)) - c_sigma * h.ln();

        let Some(mode) = mode else {
            return Ok((f, None));
        };
        let mut grad = vec![dprior; s.len()];
        if m > 0 {
            let dg: Vec<f64> = match mode {
                GradientMode::Exact => dvals.clone(),
                GradientMode::ColumnRestricted => vec![1.0; m],
            };
            // Under the restricted mode every selected column enters with weight one.
            let (a1i, ti, tv) = if mode == GradientMode::Exact {
                (a1.inverse(), a2.inverse(), tv)
            } else {
                let dgd1 = DMatrix::from_fn(m, m, |a, b| dg[a] * g_ss[(a, b)] * dg[b]);
                let v1 = DVector::from_fn(m, |a, _| dg[a] * b_s[a]);
                let a1r = (&dgd1 + &eye * sp.lambda)
                    .cholesky()
                    .ok_or_else(|| Error::NotPositiveDefinite("X_sᵀX_s + λI".into()))?;
                let a2r = (&dgd1 * gk + &eye * sp.lambda)
                    .cholesky()
                    .ok_or_else(|| Error::NotPositiveDefinite("(g+κ)X_sᵀX_s + λI".into()))?;
                let tv = a2r.solve(&v1);
                (a1r.inverse(), a2r.inverse(), tv)
            };
            let gd = DMatrix::from_fn(m, m, |a, b| g_ss[(a, b)] * dg[b]);
            let gdtv = &gd * &tv;
            let coef = 2.0 * sp.g * c_sigma / h;
            for (a, &i) in sel.iter().enumerate() {
                let t1 = gd.row(a).dot(&a1i.column(a).transpose());
                let t2 = gk * gd.row(a).dot(&ti.column(a).transpose());
                let t3 = coef * (b_s[a] * tv[a] - gk * gdtv[a] * tv[a]);
                grad[i] += t1 - t2 + t3;
            }
        }
        Ok((f, Some(grad)))
    }

    /// `f(s)` assembled from full `d×d` matrices with `X̃ = X·diag(s)`. Slow; for cross-checks.
    pub fn potential_dense(&self, s: &[f64]) -> Result<f64> {
        self.lattice.check_dim(s.len())?;
        let sp = &self.spec;
        let d = s.len();
        let xt = &sp.x * DMatrix::from_diagonal(&DVector::from_column_slice(s));
        let xtx = xt.tr_mul(&xt);
        let eye = DMatrix::<f64>::identity(d, d);
        let a1 = (&xtx + &eye * sp.lambda)
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("dense A1".into()))?;
        let a2 = (&xtx * (sp.g + sp.kappa) + &eye * sp.lambda)
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("dense A2".into()))?;
        let v = xt.tr_mul(&sp.y);
        let h = 2.0 * sp.beta_sigma + self.yty - sp.g * v.dot(&a2.solve(&v));
        Ok(self.prior(s).0 + 0.5 * (chol_logdet(&a1) - chol_logdet(&a2)) - self.c_sigma() * h.ln())
    }
}

impl TargetModel for RegressionPosterior {
    fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    fn potential(&self, s: &[f64]) -> f64 {
        self.evaluate(s, None).map_or(f64::NAN, |r| r.0)
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        self.potential_and_gradient(s).1
    }

    fn potential_and_gradient(&self, s: &[f64]) -> (f64, Vec<f64>) {
        match self.evaluate(s, Some(self.mode)) {
            Ok((f, g)) => (f, g.unwrap_or_default()),
            Err(_) => (f64::NAN, vec![f64::NAN; s.len()]),
        }
    }

    fn name(&self) -> &str {
        "regression"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::targets::data::synth_sparse_response;

    fn random_problem(n: usize, d: usize, seed: u64) -> RegressionSpec {
        let mut rng = RngStream::new(seed, 0);
        let x = DMatrix::from_fn(n, d, |_, _| rng.std_normal());
        let y = DVector::from_fn(n, |_, _| rng.std_normal());
        RegressionSpec::with_defaults(x, y).unwrap()
    }

    #[test]
    fn empty_mask_collapse() {
        let spec = random_problem(15, 6, 1);
        let t = regression_posterior(spec.clone(), GradientMode::Exact).unwrap();
        let (n, d) = (15.0, 6.0);
        let yty = spec.y.dot(&spec.y);
        let want = ln_gamma(spec.alpha_psi) + ln_gamma(d + spec.beta_psi)
            - ((2.0 * spec.alpha_sigma + n) / 2.0) * (2.0 * spec.beta_sigma + yty).ln();
        assert!((t.potential(&[0.0; 6]) - want).abs() < 1e-12);
    }

    #[test]
    fn exact_gradient_matches_finite_differences() {
        let t = regression_posterior(random_problem(20, 8, 2), GradientMode::Exact).unwrap();
        let mut rng = RngStream::new(3, 0);
        let h = 1e-5;
        for _ in 0..20 {
            let s: Vec<f64> = (0..8).map(|_| 0.2 + rng.uniform()).collect();
            let g = t.gradient(&s);
            for i in 0..8 {
                let mut p = s.clone();
                let mut m = s.clone();
                p[i] += h;
                m[i] -= h;
                let fd = (t.potential(&p) - t.potential(&m)) / (2.0 * h);
                assert!((g[i] - fd).abs() / fd.abs().max(1.0) < 1e-5, "{} vs {fd}", g[i]);
            }
        }
    }

    #[test]
    fn restricted_and_exact_agree_on_masks() {
        let spec = random_problem(20, 8, 4);
        let t = regression_posterior(spec, GradientMode::Exact).unwrap();
        let mut rng = RngStream::new(5, 0);
        for _ in 0..20 {
            let s: Vec<f64> = (0..8).map(|_| rng.below(2) as f64).collect();
            let (f, ge) = t.evaluate(&s, Some(GradientMode::Exact)).unwrap();
            let (_, gr) = t.evaluate(&s, Some(GradientMode::ColumnRestricted)).unwrap();
            let dense = t.potential_dense(&s).unwrap();
            assert!((f - dense).abs() < 1e-9, "{f} vs {dense}");
            for (a, b) in ge.unwrap().iter().zip(gr.unwrap()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn duplicated_columns_swap_symmetry() {
        let mut rng = RngStream::new(6, 0);
        let x = DMatrix::from_fn(30, 6, |_, _| rng.below(3) as f64);
        let (x, y) = synth_sparse_response(&x, 0, 4, 0.1, &mut rng).unwrap();
        let t = regression_posterior(RegressionSpec::with_defaults(x, y).unwrap(), GradientMode::ColumnRestricted).unwrap();
        for _ in 0..20 {
            let mut s: Vec<f64> = (0..6).map(|_| rng.below(2) as f64).collect();
            let f = t.potential(&s);
            s.swap(0, 4);
            assert!((f - t.potential(&s)).abs() < 1e-9);
        }
    }

    #[test]
    fn lambda_calibration() {
        let x = DMatrix::<f64>::identity(2, 2);
        assert!((calibrate_ridge_lambda(&x, 0.5).unwrap() - 0.5).abs() < 1e-15);
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((calibrate_ridge_lambda(&x, 0.995).unwrap() - 0.005).abs() < 1e-15);
        assert_eq!(calibrate_ridge_lambda(&x, 1.0).unwrap(), 0.0);
        assert!(calibrate_ridge_lambda(&x, 0.0).is_err());
    }

    #[test]
    fn zero_lambda_is_caught() {
        let mut spec = random_problem(10, 3, 7);
        spec.kappa = 1.0;
        spec.lambda = calibrate_ridge_lambda(&spec.x, 1.0).unwrap();
        assert!(regression_posterior(spec, GradientMode::Exact).is_err());
    }
}
