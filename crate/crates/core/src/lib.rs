//! Charging of a harmonic-oscillator quantum battery through a Drude-Ohmic
//! reservoir (Caldeira-Leggett model), with an exact discretized-bath oracle.
//!
//! Units: hbar = k_B = 1. Frequencies, energies and temperatures are in
//! whatever unit the caller uses for `omega0`; times are in its inverse.

// `!(x > 0.0)` is how inputs reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Kronrod nodes are kept as published.
#![allow(clippy::excessive_precision)]
// Sums over the three roots read better indexed.
#![allow(clippy::needless_range_loop)]

pub mod asymptotics;
pub mod cmath;
pub mod energetics;
pub mod error;
pub mod kernels;
pub mod oracle;
pub mod params;
pub mod quad;
pub mod response;
pub mod special;
pub mod spectral;
pub mod variances;

pub use energetics::{ledger, trace, EnergyLedger};
pub use error::{Error, Result};
pub use params::{CircuitParams, RegimeKind, RegimeTag, SubRegime, SystemParams};
pub use quad::QuadratureSpec;
pub use response::{solve_characteristic, ResponseFunction};
