//! Gradient-informed samplers for distributions on finite lattices.
//!
//! The crate implements the momentum-augmented DHAMS samplers (vanilla and
//! over-relaxed) together with the baselines they are usually
//! compared against (L∞-window Metropolis, ordinal Gibbs-with-gradients, NCG
//! and AVG). All samplers target a [`TargetModel`] on a lattice `A^d` and
//! expose the raw log acceptance ratio of every step so that properties such
//! as rejection-freeness on linear potentials can be checked exactly.
//!
//! Module map:
//!
//! * [`lattice`], [`target`], [`rng`], [`params`]: shared domain types.
//! * [`proposal`]: product-form softmax proposals and their normalizers.
//! * [`overrelax`]: discrete over-relaxation with exact transition probabilities.
//! * [`samplers`]: one-step kernels and the chain runner.
//! * [`targets`]: built-in target distributions.
//! * [`analysis`]: TV distance, multi-chain ESS, PIP, ACF and tuning.
//! * [`experiment`]: config-driven runs writing CSV outputs.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod lattice;
pub mod overrelax;
pub mod params;
pub mod proposal;
pub mod rng;
pub mod samplers;
pub mod target;
pub mod targets;

pub use error::{Error, Result};
pub use lattice::{ChainState, LatticeSpec, DEFAULT_ENUMERATION_CAP};
pub use params::{SamplerKind, SamplerParams};
pub use rng::RngStream;
pub use samplers::StepOutcome;
pub use target::{augmented_log_density, TargetModel};
