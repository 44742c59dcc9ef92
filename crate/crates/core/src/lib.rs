//! Full-duplex OFDM self-interference cancellation with joint estimation of
//! the SI channel and the third-order transmitter and receiver
//! nonlinearities.
//!
//! The crate is organised bottom up:
//!
//! - [`dsp`]: unitary DFT, OFDM framing, resampling.
//! - [`channel`]: Rician multipath channels and frequency responses.
//! - [`impairments`]: cubic nonlinearities, phase noise, AWGN, ADC.
//! - [`estimation`]: LS channel estimation, CIR denoising, the successive
//!   coefficient estimator and the joint iterative loop.
//! - [`metrics`]: cancellation, residual interference plus distortion plus
//!   noise (RIDN) and rates.
//! - [`sim`]: one Monte Carlo trial of a complete frame.
//! - [`harness`]: TOML scenarios, sweeps and CSV/JSON output.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dsp;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod impairments;
pub mod metrics;
pub mod serde_db;
pub mod sim;

pub use channel::{generate_channel, ChannelRealization, ChannelResponse, PowerDelayProfile};
pub use dsp::{ComplexSignal, OfdmGeometry, OfdmGrid};
pub use error::{Error, Result};
pub use estimation::{joint_iterative_estimate, EstimationConfig, EstimationReport};
pub use harness::{run_sweep, OutputFormat, ScenarioConfig, SweepResult};
pub use impairments::{CubicConvention, ImpairmentConfig, NonlinearityCoefficients};
pub use metrics::{compute_ridn, RidnReport};
pub use serde_db::Db;
pub use sim::BaselineMode;

pub use num_complex::Complex64;
