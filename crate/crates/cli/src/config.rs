//! Experiment configuration: one TOML file drives every subcommand.
//!
//! Every section and field is optional; omitted values take the defaults of
//! the analysed parameter range (D = 50 µm²/s, d = 2 µm, r_r = 4 µm,
//! h = 2 µm, π1 = 0.5, σ_n² = 100).

use std::path::PathBuf;

use molmimo::analysis::BerSweepConfig;
use molmimo::channel_model::DEFAULT_MEMORY;
use molmimo::{Absorption, ChannelModelParams, DetectorKind, Layout, LinkClass, SimConfig, Topology};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub detectors: Vec<DetectorKind>,
    pub topology: TopologySection,
    pub sim: SimSection,
    pub channel: ChannelSection,
    pub link: LinkSection,
    pub sir: SirSection,
    pub threshold: ThresholdSection,
    pub protocol: ProtocolSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut detectors = DetectorKind::MIMO.to_vec();
        detectors.push(DetectorKind::SisoAdaptive);
        Self {
            seed: 1,
            output_dir: PathBuf::from("out"),
            detectors,
            topology: TopologySection::default(),
            sim: SimSection::default(),
            channel: ChannelSection::default(),
            link: LinkSection::default(),
            sir: SirSection::default(),
            threshold: ThresholdSection::default(),
            protocol: ProtocolSection::default(),
        }
    }
}

/// Lengths in µm, diffusion in µm²/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    pub distance: f64,
    pub separation: f64,
    pub receiver_radius: f64,
    pub diffusion: f64,
    pub layout: Layout,
}

impl Default for TopologySection {
    fn default() -> Self {
        let t = Topology::reference();
        Self {
            distance: t.distance,
            separation: t.separation,
            receiver_radius: t.receiver_radius,
            diffusion: t.diffusion,
            layout: t.layout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub t_max: f64,
    pub molecules_per_emission: usize,
    pub replications: usize,
    pub absorption: Absorption,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            dt: s.dt,
            t_max: s.t_max,
            molecules_per_emission: s.molecules_per_emission,
            replications: 50,
            absorption: s.absorption,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl From<&ChannelModelParams> for Coefficients {
    fn from(p: &ChannelModelParams) -> Self {
        Self {
            b1: p.b1,
            b2: p.b2,
            b3: p.b3,
        }
    }
}

/// Fitted model coefficients of the pair and cross links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub pair: Coefficients,
    pub cross: Coefficients,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            pair: (&ChannelModelParams::reference_pair()).into(),
            cross: (&ChannelModelParams::reference_cross()).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub q1_values: Vec<u64>,
    pub symbol_durations: Vec<f64>,
    pub pi1: f64,
    pub sigma_n: f64,
    /// Past slots of interference memory.
    pub memory: usize,
    pub n_bits: usize,
    pub replications: usize,
    pub calibration_bits: usize,
}

impl Default for LinkSection {
    fn default() -> Self {
        let b = BerSweepConfig::default();
        Self {
            q1_values: (1..=10).map(|k| k * 100).collect(),
            symbol_durations: b.symbol_durations,
            pi1: b.pi1,
            sigma_n: b.sigma_n,
            memory: DEFAULT_MEMORY,
            n_bits: b.n_bits,
            replications: b.replications,
            calibration_bits: b.calibration_bits,
        }
    }
}

/// Topology grid of the SIR sweep; the channel coefficients are shared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SirSection {
    pub distances: Vec<f64>,
    pub separations: Vec<f64>,
    pub radii: Vec<f64>,
    pub symbol_durations: Vec<f64>,
}

impl Default for SirSection {
    fn default() -> Self {
        Self {
            distances: vec![2.0, 4.0],
            separations: vec![1.0, 2.0],
            radii: vec![2.0, 4.0],
            symbol_durations: (1..=20).map(|k| k as f64 * 0.05).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    /// Interference memories for the `h(Q1)` crossover table.
    pub memories: Vec<usize>,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        Self {
            memories: (2..=8).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub text: String,
    pub q1: u64,
    pub sigma_n: f64,
    pub memory: usize,
    pub symbol_duration: f64,
    pub detector: DetectorKind,
    pub calibration_bits: usize,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            text: "YONSEI".into(),
            q1: 1000,
            sigma_n: 0.0,
            memory: 0,
            symbol_duration: 0.08,
            detector: DetectorKind::ZfIn,
            calibration_bits: 20_000,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn nonempty<T>(v: &[T], name: &str) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(CliError::Config(format!("{name} must not be empty")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(config_err)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Full-size runs: 500 replications of the particle simulation and
    /// 5×10⁵ bits × 20 replications per BER point.
    pub fn full_scale(mut self) -> Self {
        self.sim.replications = 500;
        let b = BerSweepConfig::default().full_scale();
        self.link.n_bits = b.n_bits;
        self.link.replications = b.replications;
        self.link.calibration_bits = b.calibration_bits;
        self
    }

    pub fn topology(&self) -> Result<Topology, CliError> {
        let t = &self.topology;
        Ok(Topology::new(t.distance, t.separation, t.receiver_radius, t.diffusion)
            .map_err(config_err)?
            .with_layout(t.layout))
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let s = SimConfig {
            dt: self.sim.dt,
            t_max: self.sim.t_max,
            molecules_per_emission: self.sim.molecules_per_emission,
            replications: self.sim.replications,
            seed: self.seed,
            absorption: self.sim.absorption,
        };
        s.validate().map_err(config_err)?;
        Ok(s)
    }

    pub fn channel_on(&self, topology: Topology) -> Result<(ChannelModelParams, ChannelModelParams), CliError> {
        let (p, c) = (self.channel.pair, self.channel.cross);
        Ok((
            ChannelModelParams::new(LinkClass::Pair, p.b1, p.b2, p.b3, topology).map_err(config_err)?,
            ChannelModelParams::new(LinkClass::Cross, c.b1, c.b2, c.b3, topology).map_err(config_err)?,
        ))
    }

    pub fn channel(&self) -> Result<(ChannelModelParams, ChannelModelParams), CliError> {
        self.channel_on(self.topology()?)
    }

    pub fn ber_sweep(&self) -> Result<BerSweepConfig, CliError> {
        let (pair, cross) = self.channel()?;
        let l = &self.link;
        let cfg = BerSweepConfig {
            pair,
            cross,
            q1_values: l.q1_values.clone(),
            symbol_durations: l.symbol_durations.clone(),
            detectors: self.detectors.clone(),
            pi1: l.pi1,
            sigma_n: l.sigma_n,
            memory: l.memory,
            n_bits: l.n_bits,
            replications: l.replications,
            calibration_bits: l.calibration_bits,
            seed: self.seed,
        };
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }

    /// Checks every section against the preconditions of the module it feeds.
    pub fn validate(&self) -> Result<(), CliError> {
        self.sim_config()?;
        self.ber_sweep()?;
        let s = &self.sir;
        nonempty(&s.distances, "sir.distances")?;
        nonempty(&s.separations, "sir.separations")?;
        nonempty(&s.radii, "sir.radii")?;
        nonempty(&s.symbol_durations, "sir.symbol_durations")?;
        for &d in &s.distances {
            for &h in &s.separations {
                for &r in &s.radii {
                    self.channel_on(Topology::new(d, h, r, self.topology.diffusion).map_err(config_err)?)?;
                }
            }
        }
        if s.symbol_durations.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(CliError::Config("sir.symbol_durations must be finite and > 0".into()));
        }
        nonempty(&self.threshold.memories, "threshold.memories")?;
        let p = &self.protocol;
        if p.q1 == 0 || p.sigma_n.is_nan() || p.sigma_n < 0.0 || p.symbol_duration.is_nan() || p.symbol_duration <= 0.0
        {
            return Err(CliError::Config(
                "protocol needs q1 >= 1, sigma_n >= 0 and symbol_duration > 0".into(),
            ));
        }
        if p.detector == DetectorKind::Genie && p.calibration_bits == 0 {
            return Err(CliError::Config(
                "protocol.calibration_bits must be >= 1 for the genie detector".into(),
            ));
        }
        Ok(())
    }
}
