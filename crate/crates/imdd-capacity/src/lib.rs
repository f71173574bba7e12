//! Capacity computations for intensity-modulation direct-detection (IM/DD)
//! Gaussian optical wireless channels.
//!
//! The crate covers the single-user channel (exact numerical capacity through
//! Blahut-Arimoto plus a Smith-type optimality certificate, and the full set
//! of analytic lower/upper bounds and asymptotics), parallel and MIMO
//! configurations (intensity allocation, SIMO/MISO reductions, QR achievable
//! rates, low/high-SNR asymptotics), and 2-user broadcast / multiple-access
//! rate regions.
//!
//! All rates are in nats per transmission; the noise variance is normalized
//! to one, so intensities are measured in noise standard deviations.

pub mod bounds;
pub mod capacity;
pub mod channel;
pub mod error;
pub mod mi;
pub mod multi_aperture;
pub mod multi_user;
pub mod numeric;

pub use channel::{DiscreteDistribution, RateNats, SisoChannel, TruncGaussParams};
pub use error::{Error, Result};
