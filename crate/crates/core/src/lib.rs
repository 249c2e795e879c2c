//! High-order photon coherence (g², g³, g⁴) of phase-dependent squeezed
//! coherent states as seen by a four-detector Hanbury Brown–Twiss setup with
//! on/off counters, finite efficiency and Poissonian background noise.
//!
//! The pipeline is
//!
//! ```text
//! state::squeezed_distribution -> detection::detect -> clicks::click_probabilities
//!                                                   -> clicks::coherence_from_clicks
//! ```
//!
//! with [`analytic`] providing the ideal closed forms and factorial-moment
//! oracle, [`mc`] a seeded stochastic simulation of the same chain, and
//! [`sweep`] grid scans and extremum searches over the parameters.

pub mod analytic;
#[cfg(feature = "cli")]
pub mod cli;
pub mod clicks;
pub mod detection;
pub mod error;
pub mod mc;
pub mod numfmt;
pub mod state;
pub mod sweep;

pub use analytic::{factorial_moments, g_ideal, gaussian_moments, ideal_coherence, IdealReport};
pub use clicks::{click_probabilities, coherence_from_clicks, occupancy_oracle, ClickDistribution, CoherenceTriple};
pub use detection::{bernoulli_loss, detect, noise_convolve, DetectionParams};
pub use error::{CoherenceError, Result};
pub use state::{coherent_distribution, hermite_scaled, squeezed_distribution, PhotonDistribution, StateParams};
pub use sweep::squeezing_db;
