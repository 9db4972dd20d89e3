//! Simulation and analysis toolkit for diffusion-based molecular 2×2 MIMO links.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`] – erfc, gamma and incomplete gamma kernels.
//! * [`particle_sim`] – 3-D Brownian motion with two absorbing receive spheres.
//! * [`channel_model`] – closed-form SISO hitting CDF, the fitted MIMO model
//!   function and its least-squares fit, per-slot hitting probabilities.
//! * [`link_sim`] – symbol-level BCSK link simulation with ISI and ILI.
//! * [`detection`] – interference statistics, MAP thresholds and the five
//!   detectors.
//! * [`analysis`] – SIR, generalized Gaussian fits, error probability,
//!   the `h(Q1)` crossover and BER sweeps.
//! * [`protocol`] – ITA2 framing and an end-to-end text demo.
//!
//! Every numeric type is generic over [`Real`]; the aliases at the crate root
//! fix the scalar to `f64`, which is what the simulators and the CLI use.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel_model;
pub mod detection;
pub mod error;
pub mod linalg;
pub mod link_sim;
pub mod particle_sim;
pub mod protocol;
pub mod rng;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Real;

pub use channel_model::LinkClass;
pub use detection::DetectorKind;
pub use particle_sim::{Absorption, Layout, Rx, Tx};

pub type Topology = particle_sim::Topology<f64>;
pub type SimConfig = particle_sim::SimConfig<f64>;
pub type HittingRecord = particle_sim::HittingRecord<f64>;
pub type EmpiricalCdf = particle_sim::EmpiricalCdf<f64>;
pub type LinkCdfs = particle_sim::LinkCdfs<f64>;

pub type ChannelModelParams = channel_model::ChannelModelParams<f64>;
pub type SlotProbabilities = channel_model::SlotProbabilities<f64>;
pub type FitReport = channel_model::FitReport<f64>;

pub type TxConfig = link_sim::TxConfig<f64>;
pub type NoiseConfig = link_sim::NoiseConfig<f64>;
pub type SlotObservation = link_sim::SlotObservation<f64>;

pub type InterferenceStats = detection::InterferenceStats<f64>;
pub type DetectorStats = detection::DetectorStats<f64>;
pub type ThresholdPair = detection::ThresholdPair<f64>;
pub type DetectorBank = detection::DetectorBank<f64>;

pub type GgdParams = analysis::GgdParams<f64>;
pub type QuadraticH = analysis::QuadraticH<f64>;

pub type Mat2 = linalg::Mat2<f64>;

/// Single-precision variants, for callers that only need the analytic kernels.
pub type Topology32 = particle_sim::Topology<f32>;
pub type ChannelModelParams32 = channel_model::ChannelModelParams<f32>;
pub type SlotProbabilities32 = channel_model::SlotProbabilities<f32>;
