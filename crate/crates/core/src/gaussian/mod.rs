//! Deterministic random streams and correlated Gaussian sampling.

mod factor;
mod normal;
mod rng;

pub use factor::{factor_psd, sample_increment, PsdFactor, DEFAULT_MAX_JITTER};
pub use normal::inverse_normal_cdf;
pub use rng::{derive_seed, RngStream};
