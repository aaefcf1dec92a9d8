//! Bayesian two-stage circular-circular regression with zero-inflated
//! response and covariate.
//!
//! The regression link is the Möbius transformation
//! `μ(x) = β0 (x + β1) / (1 + conj(β1) x)` on the unit circle with wrapped
//! Cauchy angular errors. Zero-inflation arises from censoring latent angles
//! that fall inside a window `(-δ, δ)` to exactly zero. Estimation runs a
//! Metropolis–Hastings sampler with data augmentation, drawing censored
//! latents from truncated wrapped Cauchy full conditionals using a Möbius
//! pull-back sampler with O(1) cost per draw.
//!
//! Module map:
//!
//! * [`angle`]: angle arithmetic and descriptive circular statistics.
//! * [`distributions`]: wrapped Cauchy, truncated wrapped Cauchy, von Mises.
//! * [`mobius`]: the regression link and its special-case reparameterization.
//! * [`model`]: model variants, censoring, priors and full conditionals.
//! * [`mcmc`]: the data-augmentation sampler and chain storage.
//! * [`inference`]: posterior summaries, HPD intervals, Geweke, prediction.
//! * [`sim`]: simulation studies (parameter recovery, model comparison).
//! * [`io`], [`plot`]: tabular IO, axis preprocessing and SVG output.

pub mod angle;
pub mod distributions;
pub mod error;
pub mod inference;
pub mod io;
pub mod mcmc;
pub mod mobius;
pub mod model;
pub mod par;
pub mod plot;
pub mod sim;

pub use angle::{angle_difference, circular_summary, wrap, Angle, CircularSummary, UnitComplex};
pub use error::{Error, ErrorKind, Result};
