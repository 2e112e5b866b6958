//! Online identification of a reaction coefficient in a parabolic equation
//! from partial, possibly noisy observations of the state.

pub mod error;
pub mod fem1d;
pub mod observation;

pub use error::{Error, Result};
pub mod gains;
pub mod estimator;
pub mod config;
pub mod diagnostics;
pub mod io;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/discretization.md")]
    mod discretization {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/noisy-data.md")]
    mod noisy_data {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
