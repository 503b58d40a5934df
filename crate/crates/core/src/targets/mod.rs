//! Built-in target distributions.

mod data;
mod gaussian;
mod linear;
mod regression;

pub use data::{load_design_matrix, synth_genotype_matrix, synth_sparse_response, DesignData};
pub use gaussian::{
    discrete_gaussian, quadratic_mixture, DiscreteGaussian, EquiCorrGaussianSpec, MixtureSpec,
    QuadraticMixture,
};
pub use linear::{linear_product, LinearTarget};
pub use regression::{
    calibrate_ridge_lambda, regression_posterior, GradientMode, RegressionPosterior,
    RegressionSpec,
};
