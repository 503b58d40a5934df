use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    coordinate_subsets, ess_multichain, exact_joint, mean_sd, pip_per_chain, tune_dhams,
    tune_stepsize_target_acceptance, tv_curve, ChainMatrix, ProbeSettings, TuningCriterion,
};
use crate::error::{Error, Result};
use crate::params::SamplerParams;
use crate::rng::RngStream;
use crate::samplers::{run_chain_with, ChainRecord};
use crate::target::TargetModel;
use crate::targets::{
    calibrate_ridge_lambda, discrete_gaussian, linear_product, load_design_matrix,
    quadratic_mixture, regression_posterior, synth_genotype_matrix, synth_sparse_response,
    EquiCorrGaussianSpec, MixtureSpec, RegressionSpec,
};

use super::config::{Diagnostic, ExperimentConfig, TargetConfig, TuningConfig};
use super::io::{create, format_float, read_draws_csv, write_draws_csv, write_err};

/// Command-line overrides applied on top of a parsed config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub chains: Option<usize>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Applies `o` and re-validates.
    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(p) = &o.output_dir {
            self.output_dir = p.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(c) = o.chains {
            self.chains = c;
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        self.validate()?;
        Ok(self)
    }
}

/// What a sampling run produced.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub acceptance_rates: Vec<f64>,
    pub average_flips: f64,
    pub wall_time_seconds: f64,
    pub files: Vec<PathBuf>,
}

/// Instantiates the configured target.
pub fn build_target(config: &ExperimentConfig) -> Result<Box<dyn TargetModel>> {
    Ok(match &config.target {
        TargetConfig::DiscreteGaussian { dim, k, sigma, rho } => Box::new(discrete_gaussian(
            &EquiCorrGaussianSpec { dim: *dim, k: *k, sigma: *sigma, rho: *rho },
        )?),
        TargetConfig::QuadraticMixture { dim, k, means, covariances } => {
            Box::new(quadratic_mixture(&MixtureSpec {
                dim: *dim,
                k: *k,
                means: means.clone(),
                covariances: covariances.clone(),
            })?)
        }
        TargetConfig::Linear { coefficients, support } => {
            Box::new(linear_product(coefficients.clone(), support.clone())?)
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
            gradient,
        } => {
            let (x, y) = match (data, synthetic) {
                (Some(path), _) => {
                    let d = load_design_matrix(path, *response_last)?;
                    let y = match (d.y, response) {
                        (Some(y), _) => y,
                        (None, Some(r)) => {
                            let r = load_design_matrix(r, false)?;
                            if r.cols() != 1 {
                                return Err(Error::config("target.response", "must have exactly one column"));
                            }
                            r.x.column(0).into_owned()
                        }
                        (None, None) => return Err(Error::config("target.response", "no response given")),
                    };
                    (d.x, y)
                }
                (None, Some(s)) => {
                    let mut rng = RngStream::new(s.seed, 0);
                    let x = synth_genotype_matrix(s.n, s.d, &mut rng);
                    synth_sparse_response(&x, s.signal_col - 1, s.duplicate_col - 1, s.noise_sd, &mut rng)?
                }
                (None, None) => return Err(Error::config("target", "regression needs data")),
            };
            let mut spec = RegressionSpec::with_defaults(x, y)?;
            if let Some(k) = kappa {
                spec.kappa = *k;
                if lambda.is_none() {
                    spec.lambda = calibrate_ridge_lambda(&spec.x, *k)?;
                }
            }
            let set = |slot: &mut f64, v: &Option<f64>| {
                if let Some(v) = v {
                    *slot = *v;
                }
            };
            set(&mut spec.alpha_psi, alpha_psi);
            set(&mut spec.beta_psi, beta_psi);
            set(&mut spec.alpha_sigma, alpha_sigma);
            set(&mut spec.beta_sigma, beta_sigma);
            set(&mut spec.g, g);
            set(&mut spec.lambda, lambda);
            Box::new(regression_posterior(spec, *gradient)?)
        }
    })
}

fn in_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the configured chains in parallel. Chain `m` uses `RngStream::new(seed, m)`.
pub fn sample_chains(config: &ExperimentConfig, target: &dyn TargetModel) -> Result<ChainMatrix> {
    let params = config.sampler.params();
    let records = in_pool(config.threads, || {
        (0..config.chains)
            .into_par_iter()
            .map(|m| {
                let mut rng = RngStream::new(config.seed, m as u64);
                let mut rec = ChainRecord::new(target.dim(), false);
                run_chain_with(
                    config.sampler.kind,
                    target,
                    &params,
                    config.burn_in,
                    config.draws,
                    &mut rng,
                    None,
                    &mut rec,
                )?;
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    ChainMatrix::new(records)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(format!("cannot create directory {}", dir.display()), e))
}

/// Samples, writes `draws.csv`, the requested diagnostics and `manifest.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    ensure_dir(&config.output_dir)?;
    let target = build_target(config)?;
    let start = Instant::now();
    let chains = sample_chains(config, target.as_ref())?;
    let wall = start.elapsed().as_secs_f64();
    log::info!("sampled {} chains of {} draws in {wall:.3}s", chains.num_chains(), chains.num_draws());

    let draws = config.output_dir.join("draws.csv");
    write_draws_csv(&draws, &chains)?;
    let mut files = vec![draws];
    for &d in &config.diagnostics {
        files.push(write_diagnostic(config, target.as_ref(), &chains, d)?);
    }
    let acceptance_rates = chains
        .chains()
        .iter()
        .map(|c| c.accepted().iter().filter(|&&a| a).count() as f64 / c.len() as f64)
        .collect();
    let summary = RunSummary {
        output_dir: config.output_dir.clone(),
        acceptance_rates,
        average_flips: crate::analysis::average_flips(&chains),
        wall_time_seconds: wall,
        files,
    };
    let manifest_path = config.output_dir.join("manifest.json");
    let manifest = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "target": target.name(),
        "dim": target.dim(),
        "config": config,
        "summary": &summary,
    });
    let mut w = create(&manifest_path)?;
    serde_json::to_writer_pretty(&mut w, &manifest)
        .map_err(|e| Error::io(format!("cannot write {}", manifest_path.display()), e.into()))?;
    w.flush().map_err(write_err(&manifest_path))?;
    let mut summary = summary;
    summary.files.push(manifest_path);
    Ok(summary)
}

/// Recomputes one diagnostic from the `draws.csv` in the output directory.
pub fn run_diagnostic(config: &ExperimentConfig, which: Diagnostic) -> Result<PathBuf> {
    let chains = read_draws_csv(&config.output_dir.join("draws.csv"))?;
    let target = build_target(config)?;
    target.lattice().check_dim(chains.dim())?;
    write_diagnostic(config, target.as_ref(), &chains, which)
}

fn write_rows(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let err = write_err(path);
    let mut w = create(path)?;
    writeln!(w, "{header}").map_err(&err)?;
    for r in rows {
        writeln!(w, "{r}").map_err(&err)?;
    }
    w.flush().map_err(&err)
}

fn write_diagnostic(
    config: &ExperimentConfig,
    target: &dyn TargetModel,
    chains: &ChainMatrix,
    which: Diagnostic,
) -> Result<PathBuf> {
    let dir = &config.output_dir;
    ensure_dir(dir)?;
    match which {
        Diagnostic::Tv => {
            let joint = exact_joint(target, config.enumeration_cap)?;
            let d = target.dim();
            let k = config.tv.subset_size;
            if k > d {
                return Err(Error::config("tv.subset_size", format!("must lie in 1..={d}")));
            }
            let subsets = if config.tv.use_symmetry && target.is_permutation_symmetric() {
                vec![(0..k).collect()]
            } else {
                coordinate_subsets(d, k)
            };
            let t = chains.num_draws();
            let every = config.tv.every.unwrap_or((t / 20).max(1)).min(t);
            let mut checkpoints: Vec<usize> = (every..=t).step_by(every).collect();
            if checkpoints.last() != Some(&t) {
                checkpoints.push(t);
            }
            let curve = tv_curve(chains, &joint, target.lattice(), &subsets, &checkpoints)?;
            let path = dir.join("tv_curve.csv");
            write_rows(
                &path,
                "draws,mean_tv,sd_tv",
                curve
                    .iter()
                    .map(|p| format!("{},{},{}", p.draws, format_float(p.mean_tv), format_float(p.sd_tv))),
            )?;
            Ok(path)
        }
        Diagnostic::Ess => {
            let mut rows = Vec::with_capacity(chains.dim() + 1);
            for i in 0..chains.dim() {
                let ess = ess_multichain(&chains.coordinate(i))?;
                rows.push(format!("s_{},{}", i + 1, format_float(ess)));
            }
            let ess = ess_multichain(&chains.potentials())?;
            rows.push(format!("energy,{}", format_float(ess)));
            let path = dir.join("ess.csv");
            write_rows(&path, "quantity,ess", rows)?;
            Ok(path)
        }
        Diagnostic::Pip => {
            let per = pip_per_chain(chains)?;
            let path = dir.join("pip.csv");
            write_rows(
                &path,
                "coordinate,mean_pip,sd_pip",
                (0..chains.dim()).map(|i| {
                    let (m, s) = mean_sd(&per.iter().map(|p| p[i]).collect::<Vec<_>>());
                    format!("{},{},{}", i + 1, format_float(m), format_float(s))
                }),
            )?;
            Ok(path)
        }
    }
}

/// Outcome of a tuning run.
#[derive(Clone, Debug)]
pub struct TuningReport {
    pub best: SamplerParams,
    pub value: f64,
    pub path: PathBuf,
}

/// Runs the configured tuning procedure and writes `tuning.csv`.
/// Tuning draws from stream `u64::MAX` of the configured seed.
pub fn run_tuning(config: &ExperimentConfig) -> Result<TuningReport> {
    let tuning = config
        .tuning
        .as_ref()
        .ok_or_else(|| Error::config("tuning", "the config has no tuning section"))?;
    ensure_dir(&config.output_dir)?;
    let target = build_target(config)?;
    let base = config.sampler.params();
    let kind = config.sampler.kind;
    let mut rng = RngStream::new(config.seed, u64::MAX);
    let (criterion, trace, best, value): (&str, Vec<(SamplerParams, f64)>, SamplerParams, f64) =
        match tuning {
            TuningConfig::TargetAcceptance { target_alpha, a_exp, m_max, probe_len, init_delta } => {
                let t = tune_stepsize_target_acceptance(
                    kind,
                    target.as_ref(),
                    &base,
                    init_delta.unwrap_or(base.delta),
                    *target_alpha,
                    *a_exp,
                    *m_max,
                    *probe_len,
                    &mut rng,
                )?;
                let trace = t
                    .trace
                    .iter()
                    .map(|p| (SamplerParams { delta: p.delta, ..base.clone() }, p.acceptance))
                    .collect();
                ("acceptance", trace, SamplerParams { delta: t.delta, ..base.clone() }, t.acceptance)
            }
            TuningConfig::DhamsGrid { delta_grid, phi_grid, criterion, chains, burn_in, draws } => {
                let t = tune_dhams(
                    kind,
                    target.as_ref(),
                    &base,
                    delta_grid,
                    phi_grid,
                    *criterion,
                    ProbeSettings { chains: *chains, burn_in: *burn_in, draws: *draws },
                    &mut rng,
                )?;
                let name = match criterion {
                    TuningCriterion::EnergyEss => "energy_ess",
                    TuningCriterion::AverageFlips => "average_flips",
                };
                let trace = t.trace.iter().map(|p| (p.params.clone(), p.score)).collect();
                (name, trace, t.best, t.score)
            }
        };
    let selected = trace
        .iter()
        .rposition(|(p, v)| *p == best && (v == &value || (v.is_nan() && value.is_nan())));
    let path = config.output_dir.join("tuning.csv");
    write_rows(
        &path,
        "probe,delta,epsilon,phi,beta,criterion,value,selected",
        trace.iter().enumerate().map(|(i, (p, v))| {
            format!(
                "{i},{},{},{},{},{criterion},{},{}",
                format_float(p.delta),
                format_float(p.epsilon),
                format_float(p.phi),
                format_float(p.beta),
                format_float(*v),
                u8::from(Some(i) == selected)
            )
        }),
    )?;
    Ok(TuningReport { best, value, path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::parse_config_str;

    fn config(dir: &Path, extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"{{
                "target": {{"kind": "discrete_gaussian", "dim": 2, "k": 1, "sigma": 1.0, "rho": 0.3}},
                "sampler": {{"kind": "odhams", "delta": 1.0, "epsilon": 0.8, "phi": 0.5, "beta": -0.5}},
                "chains": 3, "burn_in": 10, "draws": 200, "seed": 7,
                "output_dir": {:?}{extra}
            }}"#,
            dir.display().to_string()
        );
        parse_config_str(&text).unwrap()
    }

    #[test]
    fn run_writes_outputs_and_diagnostics_reload() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), r#", "diagnostics": ["tv", "ess"]"#);
        let summary = run_experiment(&cfg).unwrap();
        assert_eq!(summary.acceptance_rates.len(), 3);
        for f in ["draws.csv", "tv_curve.csv", "ess.csv", "manifest.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let ess = std::fs::read_to_string(dir.path().join("ess.csv")).unwrap();
        assert_eq!(ess.lines().count(), 4);
        assert!(ess.lines().last().unwrap().starts_with("energy,"));

        let tv_first = std::fs::read_to_string(dir.path().join("tv_curve.csv")).unwrap();
        run_diagnostic(&cfg, Diagnostic::Tv).unwrap();
        let tv_again = std::fs::read_to_string(dir.path().join("tv_curve.csv")).unwrap();
        assert_eq!(tv_first, tv_again);
        let last = tv_first.lines().last().unwrap();
        assert!(last.starts_with("200,"));
    }

    #[test]
    fn seeds_are_per_chain() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "");
        let target = build_target(&cfg).unwrap();
        let a = sample_chains(&cfg, target.as_ref()).unwrap();
        let mut one = cfg.clone();
        one.chains = 1;
        one.threads = Some(1);
        let b = sample_chains(&one, target.as_ref()).unwrap();
        assert_eq!(a.chains()[0], b.chains()[0]);
        assert_ne!(a.chains()[0], a.chains()[1]);
    }

    #[test]
    fn pip_requires_binary_lattice() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), r#", "diagnostics": ["pip"]"#);
        assert!(matches!(run_experiment(&cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn synthetic_regression_pip_and_tuning() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            r#"{{
                "target": {{"kind": "regression",
                    "synthetic": {{"n": 40, "d": 6, "signal_col": 1, "duplicate_col": 4, "noise_sd": 1.0, "seed": 3}}}},
                "sampler": {{"kind": "vdhams", "delta": 0.5, "epsilon": 0.9, "phi": 0.5}},
                "chains": 2, "draws": 100, "seed": 1, "diagnostics": ["pip", "ess"],
                "tuning": {{"method": "dhams_grid", "delta_grid": [0.3, 0.6], "phi_grid": [0.0, 0.5],
                            "criterion": "average_flips", "chains": 2, "draws": 30}},
                "output_dir": {:?}
            }}"#,
            dir.path().display().to_string()
        );
        let cfg = parse_config_str(&text).unwrap();
        run_experiment(&cfg).unwrap();
        let pip = std::fs::read_to_string(dir.path().join("pip.csv")).unwrap();
        assert_eq!(pip.lines().count(), 7);
        let report = run_tuning(&cfg).unwrap();
        let tuning = std::fs::read_to_string(&report.path).unwrap();
        assert_eq!(tuning.lines().count(), 5);
        assert_eq!(tuning.lines().filter(|l| l.ends_with(",1")).count(), 1);
    }

    #[test]
    fn target_acceptance_tuning() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(
            dir.path(),
            r#", "tuning": {"method": "target_acceptance", "target_alpha": 0.6, "m_max": 5, "probe_len": 50}"#,
        );
        let report = run_tuning(&cfg).unwrap();
        let text = std::fs::read_to_string(&report.path).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().nth(1).unwrap().contains(",acceptance,"));
    }
}
