//! Design toolkit for two-crystal, cavity-enhanced SPDC sources of
//! polarization-entangled photon pairs.
//!
//! The crate is organised bottom-up:
//!
//! - [`materials`]: Sellmeier-type dispersion models loaded from data files.
//! - [`phasematch`]: quasi-phase-matching, SPDC bandwidth, temperature slope.
//! - [`resonator`]: mode numbers, free spectral ranges and cluster spacings of
//!   the four cavity modes.
//! - [`biphoton`]: frequency-comb amplitudes and state fidelities.
//! - [`cavity`]: finesse, linewidth and loss budgets.
//! - [`sweep`]: scenarios, parameter sweeps, figure reproduction, design queries.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biphoton;
pub mod cavity;
pub mod error;
pub mod materials;
pub mod phasematch;
pub mod resonator;
pub mod roots;
pub mod sweep;
pub mod units;

pub use error::{exit_code_for, Error, Result};
pub use units::Magnitude;
