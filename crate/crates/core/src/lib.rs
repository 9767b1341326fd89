//! Synchronization energy of power system devices.
//!
//! The synchronization energy of a device is the Teager energy of its
//! complex power `s = v conj(i)`. Written with the complex frequencies of
//! the voltage and current Park vectors it splits into a frequency-mismatch
//! term and a conditional frequency-spread term:
//!
//! ```text
//! psi_c(s) = 2 |s|^2 (omega_v - omega_i)^2 + 2 |s|^2 (sigma2_v + sigma2_i)
//! ```
//!
//! A device is locally synchronized when `psi_c(s)` converges to zero.
//!
//! Modules:
//! * [`signal`]: grids, Park series, phase unwrapping, finite differences,
//!   complex frequency and complex power.
//! * [`energy`]: Teager energy operators, Lie bracket, conditional variance.
//! * [`sync`]: synchronization energy, its numerical estimate, classifier.
//! * [`pll`]: synchronous-reference-frame PLL.
//! * [`sim`]: SMIB swing simulator and synthetic signals.
//! * [`analysis`]: end-to-end pipeline from Park series to energy series.
//! * [`harness`]: scenario files, runs, CSV output, sweeps, verification.

pub mod analysis;
pub mod energy;
pub mod error;
pub mod harness;
pub mod ode;
pub mod pll;
pub mod signal;
pub mod sim;
pub mod sync;

pub use error::{ParamError, SignalError};
pub use signal::{ParkSeries, Stencil, TimeGrid};
