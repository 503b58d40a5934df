use crate::error::{Error, Result};
use crate::lattice::{ChainState, LatticeSpec};

/// A distribution `π(s) ∝ exp(f(s))` on a lattice, given through its negative
/// potential `f` and the gradient of a differentiable extension of `f`.
pub trait TargetModel: Send + Sync {
    fn lattice(&self) -> &LatticeSpec;

    /// `f(s)`. Callers guarantee `s.len() == dim`.
    fn potential(&self, s: &[f64]) -> f64;

    /// `∇f(s)`, a vector of length `dim`.
    fn gradient(&self, s: &[f64]) -> Vec<f64>;

    fn potential_and_gradient(&self, s: &[f64]) -> (f64, Vec<f64>) {
        (self.potential(s), self.gradient(s))
    }

    /// Whether `f` is invariant under permutations of the coordinates.
    fn is_permutation_symmetric(&self) -> bool {
        false
    }

    fn name(&self) -> &str;

    fn dim(&self) -> usize {
        self.lattice().dim()
    }
}

impl<T: TargetModel + ?Sized> TargetModel for Box<T> {
    fn lattice(&self) -> &LatticeSpec {
        (**self).lattice()
    }
    fn potential(&self, s: &[f64]) -> f64 {
        (**self).potential(s)
    }
    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        (**self).gradient(s)
    }
    fn potential_and_gradient(&self, s: &[f64]) -> (f64, Vec<f64>) {
        (**self).potential_and_gradient(s)
    }
    fn is_permutation_symmetric(&self) -> bool {
        (**self).is_permutation_symmetric()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: TargetModel + ?Sized> TargetModel for std::sync::Arc<T> {
    fn lattice(&self) -> &LatticeSpec {
        (**self).lattice()
    }
    fn potential(&self, s: &[f64]) -> f64 {
        (**self).potential(s)
    }
    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        (**self).gradient(s)
    }
    fn potential_and_gradient(&self, s: &[f64]) -> (f64, Vec<f64>) {
        (**self).potential_and_gradient(s)
    }
    fn is_permutation_symmetric(&self) -> bool {
        (**self).is_permutation_symmetric()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

/// `log π(s, u) = f(s) − ½‖u‖²`, unnormalized.
pub fn augmented_log_density<T: TargetModel + ?Sized>(
    target: &T,
    state: &ChainState,
) -> Result<f64> {
    let lattice = target.lattice();
    lattice.check_dim(state.s.len())?;
    lattice.check_dim(state.u.len())?;
    let f = target.potential(&state.s);
    if !f.is_finite() {
        return Err(Error::NonFinite("potential"));
    }
    Ok(f - 0.5 * state.u.iter().map(|x| x * x).sum::<f64>())
}
