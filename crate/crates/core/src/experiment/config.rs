use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::TuningCriterion;
use crate::error::{Error, Result};
use crate::lattice::DEFAULT_ENUMERATION_CAP;
use crate::params::{SamplerKind, SamplerParams};
use crate::targets::GradientMode;

fn one() -> usize {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP
}
fn default_subset() -> usize {
    2
}
fn yes() -> bool {
    true
}
fn half() -> f64 {
    0.5
}
fn four() -> usize {
    4
}

/// One run: target, sampler, chain layout and outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetConfig,
    pub sampler: SamplerConfig,
    #[serde(default = "one")]
    pub chains: usize,
    #[serde(default)]
    pub burn_in: usize,
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
    #[serde(default)]
    pub tv: TvSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    Tv,
    Ess,
    Pip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    DiscreteGaussian {
        dim: usize,
        k: usize,
        sigma: f64,
        rho: f64,
    },
    QuadraticMixture {
        dim: usize,
        k: usize,
        means: Vec<Vec<f64>>,
        covariances: Vec<Vec<Vec<f64>>>,
    },
    Linear {
        coefficients: Vec<f64>,
        support: Vec<f64>,
    },
    Regression {
        /// CSV whose last column is the response. Relative paths resolve against the config file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<PathBuf>,
        /// Take `y` from the last column of `data`. When false, `y` is read from `response`.
        #[serde(default = "yes")]
        response_last: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        response: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        synthetic: Option<SyntheticDesign>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_psi: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta_psi: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta_sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default)]
        gradient: GradientMode,
    },
}

/// Genotype-like design with one signal column copied into a second column.
/// Column numbers are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDesign {
    pub n: usize,
    pub d: usize,
    pub signal_col: usize,
    pub duplicate_col: usize,
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    #[serde(default = "d_delta")]
    pub delta: f64,
    #[serde(default = "d_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "one")]
    pub window_r: usize,
    #[serde(default = "one")]
    pub hamming_radius: usize,
}

fn d_delta() -> f64 {
    SamplerParams::default().delta
}
fn d_epsilon() -> f64 {
    SamplerParams::default().epsilon
}
fn d_beta() -> f64 {
    SamplerParams::default().beta
}

impl SamplerConfig {
    pub fn params(&self) -> SamplerParams {
        SamplerParams {
            delta: self.delta,
            epsilon: self.epsilon,
            phi: self.phi,
            beta: self.beta,
            window_r: self.window_r,
            hamming_radius: self.hamming_radius,
        }
    }
}

/// TV-curve settings: marginals over all coordinate subsets of `subset_size`
/// (only the first subset when the target is permutation symmetric), evaluated every
/// `every` draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvSettings {
    #[serde(default = "default_subset")]
    pub subset_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub every: Option<usize>,
    #[serde(default = "yes")]
    pub use_symmetry: bool,
}

impl Default for TvSettings {
    fn default() -> Self {
        Self { subset_size: 2, every: None, use_symmetry: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum TuningConfig {
    /// Step-size search towards a target acceptance rate.
    TargetAcceptance {
        target_alpha: f64,
        #[serde(default = "half")]
        a_exp: f64,
        m_max: usize,
        probe_len: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        init_delta: Option<f64>,
    },
    /// Two-stage `δ` then `φ` grid search for the DHAMS samplers.
    DhamsGrid {
        delta_grid: Vec<f64>,
        phi_grid: Vec<f64>,
        criterion: TuningCriterion,
        #[serde(default = "four")]
        chains: usize,
        #[serde(default)]
        burn_in: usize,
        draws: usize,
    },
}

fn bad(path: &str, msg: impl Into<String>) -> Error {
    Error::config(path, msg)
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(path, format!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    /// Range and consistency checks not expressed by the schema.
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(bad("chains", "must be at least 1"));
        }
        if self.draws == 0 {
            return Err(bad("draws", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(bad("threads", "must be at least 1"));
        }
        if let Err((field, msg)) = self.sampler.params().check() {
            return Err(bad(&format!("sampler.{field}"), msg));
        }
        let dim = self.validate_target()?;
        if self.diagnostics.contains(&Diagnostic::Ess) && (self.chains < 2 || self.draws < 2) {
            return Err(bad("diagnostics", "ess needs at least two chains of at least two draws"));
        }
        if self.tv.subset_size == 0 || self.tv.subset_size > dim {
            return Err(bad("tv.subset_size", format!("must lie in 1..={dim}")));
        }
        if self.tv.every == Some(0) {
            return Err(bad("tv.every", "must be at least 1"));
        }
        if let Some(t) = &self.tuning {
            validate_tuning(t)?;
        }
        Ok(())
    }

    fn validate_target(&self) -> Result<usize> {
        match &self.target {
            TargetConfig::DiscreteGaussian { dim, k, sigma, rho } => {
                check_dim_k(*dim, *k)?;
                positive("target.sigma", *sigma)?;
                let lower = if *dim > 1 { -1.0 / (*dim as f64 - 1.0) } else { f64::NEG_INFINITY };
                if !(rho.is_finite() && *rho > lower && *rho < 1.0) {
                    return Err(bad("target.rho", format!("must lie in ({lower}, 1), got {rho}")));
                }
                Ok(*dim)
            }
            TargetConfig::QuadraticMixture { dim, k, means, covariances } => {
                check_dim_k(*dim, *k)?;
                if means.is_empty() {
                    return Err(bad("target.means", "need at least one component"));
                }
                if means.len() != covariances.len() {
                    return Err(bad("target.covariances", "need one covariance per mean"));
                }
                if let Some(m) = means.iter().position(|m| m.len() != *dim) {
                    return Err(bad(&format!("target.means[{m}]"), format!("must have length {dim}")));
                }
                Ok(*dim)
            }
            TargetConfig::Linear { coefficients, support } => {
                if coefficients.is_empty() {
                    return Err(bad("target.coefficients", "must be nonempty"));
                }
                if support.len() < 2 || support.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
                    return Err(bad("target.support", "must be strictly increasing with at least two values"));
                }
                Ok(coefficients.len())
            }
            TargetConfig::Regression {
                data,
                response_last,
                response,
                synthetic,
                alpha_psi,
                beta_psi,
                alpha_sigma,
                beta_sigma,
                g,
                kappa,
                lambda,
                ..
            } => {
                for (name, v) in [
                    ("alpha_psi", alpha_psi),
                    ("beta_psi", beta_psi),
                    ("alpha_sigma", alpha_sigma),
                    ("beta_sigma", beta_sigma),
                    ("g", g),
                    ("lambda", lambda),
                ] {
                    if let Some(v) = v {
                        positive(&format!("target.{name}"), *v)?;
                    }
                }
                if let Some(k) = kappa {
                    if !(*k > 0.0 && *k <= 1.0) {
                        return Err(bad("target.kappa", format!("must lie in (0, 1], got {k}")));
                    }
                    if *k == 1.0 && lambda.is_none() {
                        return Err(bad("target.kappa", "kappa = 1 calibrates lambda to 0; set lambda explicitly"));
                    }
                }
                match (data, synthetic) {
                    (Some(p), None) => {
                        if !p.exists() {
                            return Err(bad("target.data", format!("file {} does not exist", p.display())));
                        }
                        match (response_last, response) {
                            (true, Some(_)) => {
                                return Err(bad("target.response", "set response_last = false to read y from a file"))
                            }
                            (false, None) => {
                                return Err(bad("target.response", "needed when response_last is false"))
                            }
                            (false, Some(r)) if !r.exists() => {
                                return Err(bad("target.response", format!("file {} does not exist", r.display())))
                            }
                            _ => {}
                        }
                        // Column count is only known after loading.
                        Ok(usize::MAX)
                    }
                    (None, Some(s)) => {
                        if s.n == 0 || s.d == 0 {
                            return Err(bad("target.synthetic", "n and d must be at least 1"));
                        }
                        for (name, c) in [("signal_col", s.signal_col), ("duplicate_col", s.duplicate_col)] {
                            if c == 0 || c > s.d {
                                return Err(bad(&format!("target.synthetic.{name}"), format!("must lie in 1..={}", s.d)));
                            }
                        }
                        if !(s.noise_sd.is_finite() && s.noise_sd >= 0.0) {
                            return Err(bad("target.synthetic.noise_sd", "must be nonnegative"));
                        }
                        Ok(s.d)
                    }
                    _ => Err(bad("target", "regression needs exactly one of `data` and `synthetic`")),
                }
            }
        }
    }
}

fn check_dim_k(dim: usize, k: usize) -> Result<()> {
    if dim == 0 {
        return Err(bad("target.dim", "must be at least 1"));
    }
    if k == 0 {
        return Err(bad("target.k", "must be at least 1"));
    }
    Ok(())
}

fn validate_tuning(t: &TuningConfig) -> Result<()> {
    match t {
        TuningConfig::TargetAcceptance { target_alpha, a_exp, m_max, probe_len, init_delta } => {
            if !(*target_alpha > 0.0 && *target_alpha < 1.0) {
                return Err(bad("tuning.target_alpha", format!("must lie in (0, 1), got {target_alpha}")));
            }
            positive("tuning.a_exp", *a_exp)?;
            if *m_max == 0 {
                return Err(bad("tuning.m_max", "must be at least 1"));
            }
            if *probe_len == 0 {
                return Err(bad("tuning.probe_len", "must be at least 1"));
            }
            if let Some(d) = init_delta {
                positive("tuning.init_delta", *d)?;
            }
        }
        TuningConfig::DhamsGrid { delta_grid, phi_grid, chains, draws, criterion, .. } => {
            if delta_grid.is_empty() {
                return Err(bad("tuning.delta_grid", "must be nonempty"));
            }
            if phi_grid.is_empty() {
                return Err(bad("tuning.phi_grid", "must be nonempty"));
            }
            if let Some(d) = delta_grid.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
                return Err(bad("tuning.delta_grid", format!("entries must be positive, got {d}")));
            }
            if let Some(p) = phi_grid.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                return Err(bad("tuning.phi_grid", format!("entries must be nonnegative, got {p}")));
            }
            let min_chains = if *criterion == TuningCriterion::EnergyEss { 2 } else { 1 };
            if *chains < min_chains {
                return Err(bad("tuning.chains", format!("must be at least {min_chains}")));
            }
            if *draws < 2 {
                return Err(bad("tuning.draws", "must be at least 2"));
            }
        }
    }
    Ok(())
}

/// Parses and validates a config string. Errors carry the key path of the offending entry.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a config file. A relative regression `data` path is
/// resolved against the directory holding the config.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("", format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let p = e.path().to_string();
        Error::config(if p == "." { String::new() } else { p }, e.into_inner().to_string())
    })?;
    if let TargetConfig::Regression { data, response, .. } = &mut cfg.target {
        for p in [data, response].into_iter().flatten() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
