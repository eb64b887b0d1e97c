//! Stable laws, convolution powers of squared-variable densities, and
//! chaoticity diagnostics for product measures restricted to Kac's sphere.

pub mod clt;
pub mod densities;
pub mod error;
pub mod kac;
pub mod quad;
pub mod stable;

pub use densities::{
    estimate_tail_law, h_of, make_model, moments, nu_f, skew_fractions, DensityModel, Moment,
    MomentSummary, TailAsymptote, TailLaw,
};
pub use error::{Error, Result};
pub use kac::{
    cross_entropy_per_particle, duality_lower_bound, entropy_target, fisher_information,
    fisher_relative, log_normalisation, pinsker_margin, relative_entropy, wasserstein1, ChaosReport,
    CrossEntropy, GridDensity, SphereLaw,
};
pub use stable::{
    charfn_stable, exponent_from_tail, exponent_from_tail_with, stable_density,
    stable_density_at_zero, CosineConvention, SourceLaw, StableDensity, StableParams,
};
