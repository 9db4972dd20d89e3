use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::channel_model::{slot_probs, ChannelModelParams, LinkClass, SlotProbabilities, DEFAULT_MEMORY};
use crate::detection::{DetectorBank, DetectorKind, Tally};
use crate::error::ensure;
use crate::link_sim::{simulate_trace, LinkTrace, NoiseConfig, TxConfig};
use crate::{Error, Result};

const SISO_SEED_TAG: u64 = 0x5153_4953_4f00_0001;
const LANE_BITS: u32 = 20;
const CALIBRATION_LANE: u64 = (1 << LANE_BITS) - 1;

/// A BER sweep over `Q1 × t_s`, every detector evaluated on shared traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerSweepConfig {
    pub pair: ChannelModelParams<f64>,
    pub cross: ChannelModelParams<f64>,
    pub q1_values: Vec<u64>,
    pub symbol_durations: Vec<f64>,
    pub detectors: Vec<DetectorKind>,
    pub pi1: f64,
    pub sigma_n: f64,
    pub memory: usize,
    /// Bits per antenna per replication.
    pub n_bits: usize,
    pub replications: usize,
    /// Bits per antenna of the held-out genie calibration trace.
    pub calibration_bits: usize,
    pub seed: u64,
}

impl Default for BerSweepConfig {
    fn default() -> Self {
        let mut detectors = DetectorKind::MIMO.to_vec();
        detectors.push(DetectorKind::SisoAdaptive);
        Self {
            pair: ChannelModelParams::reference_pair(),
            cross: ChannelModelParams::reference_cross(),
            q1_values: (3..=10).map(|k| k * 100).collect(),
            symbol_durations: vec![0.08],
            detectors,
            pi1: 0.5,
            sigma_n: 10.0,
            memory: DEFAULT_MEMORY,
            n_bits: 50_000,
            replications: 5,
            calibration_bits: 50_000,
            seed: 1,
        }
    }
}

impl BerSweepConfig {
    /// 5×10⁵ bits per antenna and 20 replications.
    pub fn full_scale(mut self) -> Self {
        self.n_bits = 500_000;
        self.replications = 20;
        self.calibration_bits = 500_000;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.pair.validate()?;
        self.cross.validate()?;
        ensure(
            !self.q1_values.is_empty() && self.q1_values.iter().all(|&q| q >= 1),
            "q1_values",
            || "needs at least one Q1 >= 1".into(),
        )?;
        ensure(
            !self.symbol_durations.is_empty() && self.symbol_durations.iter().all(|&t| t > 0.0 && t.is_finite()),
            "symbol_durations",
            || "needs at least one finite t_s > 0".into(),
        )?;
        ensure(!self.detectors.is_empty(), "detectors", || {
            "needs at least one detector".into()
        })?;
        ensure((0.0..=1.0).contains(&self.pi1), "pi1", || {
            format!("must lie in [0, 1], got {}", self.pi1)
        })?;
        NoiseConfig::new(self.sigma_n)?;
        ensure(self.n_bits >= 1, "n_bits", || "must be >= 1".into())?;
        ensure(
            self.replications >= 1 && (self.replications as u64) < CALIBRATION_LANE,
            "replications",
            || format!("must lie in [1, {CALIBRATION_LANE})"),
        )?;
        if self.detectors.contains(&DetectorKind::Genie) {
            ensure(self.calibration_bits >= 1, "calibration_bits", || {
                "genie needs a calibration trace".into()
            })?;
        }
        Ok(())
    }

    fn points(&self) -> Vec<(u64, f64)> {
        self.q1_values
            .iter()
            .flat_map(|&q| self.symbol_durations.iter().map(move |&t| (q, t)))
            .collect()
    }
}

/// One row of a BER table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub detector: DetectorKind,
    pub q1: u64,
    pub t_s: f64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Wall time of trace generation plus this detector's decisions, summed
    /// over replications. The only non-deterministic column.
    pub runtime_s: f64,
    pub bits: usize,
    pub errors: usize,
    pub lower_threshold_triggers: usize,
    pub genie_fallbacks: usize,
    pub replications: usize,
}

/// Mean with a two-sided 95% Student-t interval; degenerate for one value.
pub fn student_t_ci(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("df >= 1")
        .inverse_cdf(0.975);
    let half = t * (var / n as f64).sqrt();
    (mean, mean - half, mean + half)
}

/// Single-link slot probabilities: the single-sphere CDF on the pair
/// distance and no cross link.
pub fn siso_probabilities(
    pair: &ChannelModelParams<f64>,
    symbol_duration: f64,
    memory: usize,
) -> Result<SlotProbabilities<f64>> {
    let siso = ChannelModelParams::siso_limit(LinkClass::Pair, pair.topology);
    Ok(slot_probs(&siso, &siso, symbol_duration, memory)?.without_cross())
}

struct PointSetup {
    q1: u64,
    t_s: f64,
    mimo: Option<(SlotProbabilities<f64>, DetectorBank<f64>)>,
    siso: Option<(SlotProbabilities<f64>, DetectorBank<f64>)>,
}

fn setup_point(cfg: &BerSweepConfig, index: usize, q1: u64, t_s: f64) -> Result<PointSetup> {
    let wants_mimo = cfg.detectors.iter().any(|&k| k != DetectorKind::SisoAdaptive);
    let mimo = if wants_mimo {
        let probs = slot_probs(&cfg.pair, &cfg.cross, t_s, cfg.memory)?;
        let mut bank = DetectorBank::new(&probs, q1, cfg.pi1, cfg.sigma_n)?;
        if cfg.detectors.contains(&DetectorKind::Genie) {
            let tx = TxConfig::new(q1, cfg.pi1, t_s, cfg.calibration_bits)?;
            let lane = (index as u64) << LANE_BITS | CALIBRATION_LANE;
            let calib = simulate_trace(&tx, &probs, &NoiseConfig::new(cfg.sigma_n)?, cfg.seed, lane)?;
            bank.calibrate_genie(&calib)?;
        }
        Some((probs, bank))
    } else {
        None
    };
    let siso = if cfg.detectors.contains(&DetectorKind::SisoAdaptive) {
        let probs = siso_probabilities(&cfg.pair, t_s, cfg.memory)?;
        let bank = DetectorBank::new(&probs, q1, cfg.pi1, cfg.sigma_n)?;
        Some((probs, bank))
    } else {
        None
    };
    Ok(PointSetup { q1, t_s, mimo, siso })
}

fn run_replication(
    cfg: &BerSweepConfig,
    index: usize,
    setup: &PointSetup,
    rep: usize,
) -> Result<Vec<(DetectorKind, Tally, f64)>> {
    let tx = TxConfig::new(setup.q1, cfg.pi1, setup.t_s, cfg.n_bits)?;
    let noise = NoiseConfig::new(cfg.sigma_n)?;
    let lane = (index as u64) << LANE_BITS | rep as u64;
    let mut out = Vec::with_capacity(cfg.detectors.len());
    let mut run =
        |probs: &SlotProbabilities<f64>, bank: &DetectorBank<f64>, seed: u64, kinds: &[DetectorKind]| -> Result<()> {
            let start = Instant::now();
            let trace: LinkTrace<f64> = simulate_trace(&tx, probs, &noise, seed, lane)?;
            let sim_secs = start.elapsed().as_secs_f64();
            for &kind in kinds {
                let start = Instant::now();
                let tally = bank.tally(kind, &trace);
                out.push((kind, tally, sim_secs + start.elapsed().as_secs_f64()));
            }
            Ok(())
        };
    let mimo_kinds: Vec<DetectorKind> = cfg
        .detectors
        .iter()
        .copied()
        .filter(|&k| k != DetectorKind::SisoAdaptive)
        .collect();
    if let Some((probs, bank)) = &setup.mimo {
        run(probs, bank, cfg.seed, &mimo_kinds)?;
    }
    if let Some((probs, bank)) = &setup.siso {
        run(probs, bank, cfg.seed ^ SISO_SEED_TAG, &[DetectorKind::SisoAdaptive])?;
    }
    Ok(out)
}

/// Runs every `(Q1, t_s)` point and replication in parallel. Each job draws
/// from substreams keyed by its point index and replication, so the table
/// (apart from `runtime_s`) does not depend on the thread count.
///
/// Rows come out ordered by `Q1`, then `t_s`, then the configured detector order.
pub fn run_ber_experiment(cfg: &BerSweepConfig) -> Result<Vec<BerPoint>> {
    cfg.validate()?;
    let points = cfg.points();
    let setups: Vec<PointSetup> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(q, t))| setup_point(cfg, i, q, t))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.replications).map(move |r| (p, r)))
        .collect();
    let results: Vec<Vec<(DetectorKind, Tally, f64)>> = jobs
        .par_iter()
        .map(|&(p, r)| run_replication(cfg, p, &setups[p], r))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(points.len() * cfg.detectors.len());
    for (p, setup) in setups.iter().enumerate() {
        let reps = &results[p * cfg.replications..(p + 1) * cfg.replications];
        for &kind in &cfg.detectors {
            let mut bers = Vec::with_capacity(cfg.replications);
            let mut total = Tally::default();
            let mut secs = 0.0;
            for rep in reps {
                let (_, t, s) = rep
                    .iter()
                    .find(|(k, _, _)| *k == kind)
                    .ok_or_else(|| Error::param("detectors", format!("{kind} produced no tally")))?;
                bers.push(t.ber());
                total.bits += t.bits;
                total.errors += t.errors;
                total.lower_threshold_triggers += t.lower_threshold_triggers;
                total.genie_fallbacks += t.genie_fallbacks;
                secs += s;
            }
            let (ber, lo, hi) = student_t_ci(&bers);
            rows.push(BerPoint {
                detector: kind,
                q1: setup.q1,
                t_s: setup.t_s,
                ber,
                ci_low: lo.max(0.0),
                ci_high: hi.min(1.0),
                runtime_s: secs,
                bits: total.bits,
                errors: total.errors,
                lower_threshold_triggers: total.lower_threshold_triggers,
                genie_fallbacks: total.genie_fallbacks,
                replications: cfg.replications,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BerSweepConfig {
        BerSweepConfig {
            q1_values: vec![300, 700],
            n_bits: 4000,
            replications: 3,
            calibration_bits: 4000,
            ..Default::default()
        }
    }

    #[test]
    fn ci_of_constant_and_known_values() {
        let (m, lo, hi) = student_t_ci(&[0.1, 0.1, 0.1]);
        assert!((m - 0.1).abs() < 1e-15 && (hi - lo).abs() < 1e-15);
        let (m, lo, hi) = student_t_ci(&[1.0, 2.0, 3.0]);
        // t_{0.975, 2} = 4.302653; s = 1.
        assert_eq!(m, 2.0);
        assert!((hi - 2.0 - 4.302_653 / 3f64.sqrt()).abs() < 1e-5);
        assert!((m - lo - (hi - m)).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_thread_count_independent() {
        let cfg = small();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let strip = |v: Vec<BerPoint>| {
            v.into_iter()
                .map(|mut p| {
                    p.runtime_s = 0.0;
                    p
                })
                .collect::<Vec<_>>()
        };
        let a = strip(one.install(|| run_ber_experiment(&cfg)).unwrap());
        let b = strip(four.install(|| run_ber_experiment(&cfg)).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * cfg.detectors.len());
    }

    #[test]
    fn adaptive_and_zf_ex_agree_on_shared_traces() {
        let rows = run_ber_experiment(&small()).unwrap();
        for q in [300, 700] {
            let get = |k| rows.iter().find(|r| r.q1 == q && r.detector == k).unwrap();
            assert_eq!(get(DetectorKind::Adaptive).errors, get(DetectorKind::ZfEx).errors);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = small();
        c.q1_values.clear();
        assert!(run_ber_experiment(&c).is_err());
        let mut c = small();
        c.replications = 0;
        assert!(c.validate().is_err());
        let mut c = small();
        c.symbol_durations = vec![-1.0];
        assert!(c.validate().is_err());
    }
}
