//! Characteristic functions of squared-variable laws, their convolution powers
//! and the local limit diagnostics built on them.

mod charfn;
mod diagnostics;
mod nfold;

pub use charfn::{
    charfn_h, decay_constant, spectral_sample, SpectralSample, CHARFN_ABS_TOL, FRESNEL_C_MAX,
    FRESNEL_S_MAX,
};
pub use diagnostics::*;
pub use nfold::*;
