//! Constant-envelope pilot carrier-frequency-offset estimation for massive
//! MU-MIMO uplinks.
//!
//! Every user terminal transmits a unit-modulus complex exponential whose
//! frequency is offset by `2π·u/K` from its neighbours (`u` is the zero-based
//! user index). The base station averages the periodogram of the received
//! samples over all `M` antennas and picks, for each user, the grid offset
//! that maximizes it inside the user's band.
//!
//! The crate is `no_std` with `alloc`; I/O, the Monte-Carlo harness and the
//! command-line front end live in the `cecfo` crate.
//!
//! Module map:
//! - [`signal`]: pilots, fading channels, CFO draws and received frames.
//! - [`estimator`]: the search grid, spatially averaged periodogram and
//!   per-user argmax.
//! - [`moments`]: Dirichlet kernel, the noise/cross/signal term split of the
//!   periodogram and its closed-form first and second moments.
//! - [`seed`]: deterministic per-trial random streams.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod config;
pub mod error;
pub mod estimator;
pub mod moments;
pub mod seed;
pub mod signal;

pub use num_complex::Complex64;

pub use config::{PowerDelayProfile, SystemConfig};
pub use error::{Error, Result};
pub use estimator::{
    build_grid, estimate_all, estimate_cfo, periodogram_at, AmplitudeProfile, FrequencyGrid,
    PeriodogramPlan, PeriodogramResult,
};
pub use moments::{
    analytic_moments, decompose_terms, dirichlet_kernel, kernel_power_ratio, AnalyticMoments,
    TermDecomposition,
};
pub use signal::{
    draw_cfos, gen_pilot, sample_channel, sample_noise, synth_frame, CfoVector, ChannelRealization,
    GroundTruth, ReceivedFrame,
};
