use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::target::TargetModel;

/// `f(s) = aᵀs`: independent coordinates, each a discretized exponential family.
#[derive(Clone, Debug)]
pub struct LinearTarget {
    lattice: LatticeSpec,
    a: Vec<f64>,
}

impl LinearTarget {
    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }
}

/// Linear potential `aᵀs` on `support^len(a)`.
pub fn linear_product(a: Vec<f64>, support: Vec<f64>) -> Result<LinearTarget> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("linear coefficients"));
    }
    let lattice = LatticeSpec::new(a.len(), support)?;
    Ok(LinearTarget { lattice, a })
}

impl TargetModel for LinearTarget {
    fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    fn potential(&self, s: &[f64]) -> f64 {
        self.a.iter().zip(s).map(|(a, s)| a * s).sum()
    }

    fn gradient(&self, _s: &[f64]) -> Vec<f64> {
        self.a.clone()
    }

    fn is_permutation_symmetric(&self) -> bool {
        self.a.windows(2).all(|w| w[0] == w[1])
    }

    fn name(&self) -> &str {
        "linear"
    }
}
