//! Diagnostics and offline tuning.

mod chains;
mod tables;
mod tuning;

pub use chains::{
    acceptance_rate, autocorrelation, average_flips, ess_multichain, pip_estimates,
    pip_per_chain, tv_curve, ChainMatrix, TvPoint,
};
pub use tables::{
    empirical_marginal, empirical_marginal_chain, exact_joint, marginalize, tv_distance,
    MarginalTable,
};
pub use tuning::{
    adapt_stepsize, grid_search_dhams, tune_dhams, tune_stepsize_target_acceptance,
    GridPoint, GridTuning, ProbeSettings, StepsizePoint, StepsizeTuning, TuningCriterion,
};

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// All `k`-element subsets of `0..d` in lexicographic order.
pub fn coordinate_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > d {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == d - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}
