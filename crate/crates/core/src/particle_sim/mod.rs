//! 3-D Brownian motion of emitted molecules towards two absorbing receive
//! spheres, and empirical first-hitting CDFs per (Tx, Rx) link.
//!
//! Geometry: the transmit points and the sphere centres form a rectangle in
//! the x–y plane. Tx₁ sits at the origin, Tx₂ at `(0, 2r_r + h, 0)`, and the
//! receive spheres are centred at `x = d + r_r` on the same rows, so each
//! pair gap (point to sphere surface) is `d` and the sphere surfaces are `h`
//! apart.

mod cdf;

pub use cdf::{estimate_cdfs, pool_symmetric, time_grid, CdfRow, EmpiricalCdf, LinkCdfs};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::rng::{substream, Domain};
use crate::{Error, Real, Result};

/// Transmit antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tx {
    Tx1,
    Tx2,
}

/// Receive antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rx {
    Rx1,
    Rx2,
}

impl Tx {
    pub const ALL: [Tx; 2] = [Tx::Tx1, Tx::Tx2];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl Rx {
    pub const ALL: [Rx; 2] = [Rx::Rx1, Rx::Rx2];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Which receive spheres exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    #[default]
    Mimo,
    /// Rx₂ removed (moved to infinity); reduces to the single-sphere channel.
    Siso,
}

/// Geometry and physics of the 2×2 setup. Lengths in µm, diffusion in µm²/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Topology<T> {
    /// Pair Tx–Rx gap `d` (point to sphere surface).
    pub distance: T,
    /// Receive-antenna surface separation `h`.
    pub separation: T,
    /// Receive-antenna radius `r_r`.
    pub receiver_radius: T,
    /// Diffusion coefficient `D`.
    pub diffusion: T,
    #[serde(default)]
    pub layout: Layout,
}

impl<T: Real> Topology<T> {
    pub fn new(distance: T, separation: T, receiver_radius: T, diffusion: T) -> Result<Self> {
        let t = Self {
            distance,
            separation,
            receiver_radius,
            diffusion,
            layout: Layout::Mimo,
        };
        t.validate()?;
        Ok(t)
    }

    /// The geometry used throughout the performance evaluation:
    /// d = 2 µm, r_r = 4 µm, h = 2 µm, D = 50 µm²/s.
    pub fn reference() -> Self {
        Self::new(T::lit(2.0), T::lit(2.0), T::lit(4.0), T::lit(50.0)).expect("valid reference")
    }

    pub fn with_layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    /// Checks the invariants. `D = 0` is accepted so that motionless
    /// simulations can be expressed; the analytic CDFs still require `D > 0`.
    pub fn validate(&self) -> Result<()> {
        ensure(self.distance > T::zero(), "d", || {
            format!("must be > 0, got {}", self.distance)
        })?;
        ensure(self.separation >= T::zero(), "h", || {
            format!("must be >= 0, got {}", self.separation)
        })?;
        ensure(self.receiver_radius > T::zero(), "r_r", || {
            format!("must be > 0, got {}", self.receiver_radius)
        })?;
        ensure(self.diffusion >= T::zero() && self.diffusion.is_finite(), "D", || {
            format!("must be finite and >= 0, got {}", self.diffusion)
        })
    }

    fn row(&self, idx: usize) -> T {
        if idx == 0 {
            T::zero()
        } else {
            T::lit(2.0) * self.receiver_radius + self.separation
        }
    }

    pub fn tx_position(&self, tx: Tx) -> [T; 3] {
        [T::zero(), self.row(tx.index()), T::zero()]
    }

    pub fn rx_center(&self, rx: Rx) -> [T; 3] {
        [self.distance + self.receiver_radius, self.row(rx.index()), T::zero()]
    }

    /// Receive spheres present in this layout.
    pub fn receivers(&self) -> &'static [Rx] {
        match self.layout {
            Layout::Mimo => &Rx::ALL,
            Layout::Siso => &Rx::ALL[..1],
        }
    }

    /// `d₁₁ = d₂₂ = d`.
    pub fn pair_distance(&self) -> T {
        self.distance
    }

    /// `d₁₂ = d₂₁ = √((d + r_r)² + (2r_r + h)²) − r_r`.
    pub fn cross_distance(&self) -> T {
        let dx = self.distance + self.receiver_radius;
        let dy = T::lit(2.0) * self.receiver_radius + self.separation;
        dx.hypot(dy) - self.receiver_radius
    }
}

/// How absorption is tested during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Absorption {
    /// Only the step-end position is tested.
    StepEnd,
    /// Step-end test plus a Brownian-bridge crossing probability
    /// `exp(−a·b / (D·Δt))` for start/end surface distances `a`, `b`.
    #[default]
    BridgeCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    /// Step `Δt` in seconds.
    pub dt: T,
    /// Horizon in seconds.
    pub t_max: T,
    pub molecules_per_emission: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub absorption: Absorption,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(0.001),
            t_max: T::lit(1.5),
            molecules_per_emission: 5000,
            replications: 500,
            seed: 0,
            absorption: Absorption::default(),
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        ensure(self.dt > T::zero(), "dt", || format!("must be > 0, got {}", self.dt))?;
        ensure(self.t_max >= self.dt, "t_max", || {
            format!("must be >= dt ({}), got {}", self.dt, self.t_max)
        })?;
        ensure(self.molecules_per_emission >= 1, "molecules_per_emission", || {
            "must be >= 1".into()
        })?;
        ensure(self.replications >= 1, "replications", || "must be >= 1".into())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt + T::lit(1e-9)).floor().to_usize().unwrap_or(0)
    }

    /// Molecules emitted per source over all replications.
    pub fn emitted_per_source(&self) -> usize {
        self.molecules_per_emission * self.replications
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingRecord<T> {
    pub source: Tx,
    pub sink: Rx,
    #[serde(rename = "hit_time_s")]
    pub hit_time: T,
}

fn dist2<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// One Gaussian displacement, each axis `N(0, 2·D·dt)`.
pub fn step_particle<T: Real, R: Rng + ?Sized>(pos: [T; 3], dt: T, diffusion: T, rng: &mut R) -> [T; 3] {
    let sigma = (T::lit(2.0) * diffusion * dt).sqrt();
    let mut out = pos;
    for c in &mut out {
        let z: f64 = rng.sample(StandardNormal);
        *c += sigma * T::lit(z);
    }
    out
}

/// Walks one molecule from `origin` until absorption or the horizon.
/// Returns the absorbing sphere and the step-end time of absorption.
pub fn simulate_molecule<T: Real, R: Rng + ?Sized>(
    topology: &Topology<T>,
    origin: [T; 3],
    config: &SimConfig<T>,
    rng: &mut R,
) -> Option<(Rx, T)> {
    if topology.diffusion == T::zero() {
        return None;
    }
    let receivers = topology.receivers();
    let radius = topology.receiver_radius;
    let r2 = radius * radius;
    let centers: Vec<[T; 3]> = receivers.iter().map(|&rx| topology.rx_center(rx)).collect();
    let d_dt = topology.diffusion * config.dt;
    // Bridge crossing probability below e^-40 is treated as zero.
    let bridge_cutoff = T::lit(40.0);
    let mut surface: [T; 2] = [T::zero(); 2];
    for (s, c) in surface.iter_mut().zip(&centers) {
        *s = dist2(&origin, c).sqrt() - radius;
    }

    let mut pos = origin;
    for step in 1..=config.steps() {
        pos = step_particle(pos, config.dt, topology.diffusion, rng);
        let t = T::count(step) * config.dt;
        for (k, c) in centers.iter().enumerate() {
            let d2 = dist2(&pos, c);
            if d2 <= r2 {
                return Some((receivers[k], t));
            }
            let end = d2.sqrt() - radius;
            if config.absorption == Absorption::BridgeCorrected {
                let x = surface[k] * end / d_dt;
                if x < bridge_cutoff {
                    let u: f64 = rng.random();
                    if T::lit(u) < (-x).exp() {
                        return Some((receivers[k], t));
                    }
                }
            }
            surface[k] = end;
        }
    }
    None
}

fn check_source<T: Real>(topology: &Topology<T>, source: Tx) -> Result<[T; 3]> {
    topology.validate()?;
    let origin = topology.tx_position(source);
    let r2 = topology.receiver_radius * topology.receiver_radius;
    for &rx in topology.receivers() {
        if dist2(&origin, &topology.rx_center(rx)) <= r2 {
            return Err(Error::SourceInsideReceiver(source.index() + 1));
        }
    }
    Ok(origin)
}

fn sort_records<T: Real>(records: &mut [HittingRecord<T>]) {
    records.sort_by(|a, b| {
        (a.source, a.sink)
            .cmp(&(b.source, b.sink))
            .then(a.hit_time.partial_cmp(&b.hit_time).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// One replication: `molecules_per_emission` molecules from `source`.
/// Records are sorted by (sink, hit_time).
pub fn simulate_replication<T: Real>(
    topology: &Topology<T>,
    source: Tx,
    config: &SimConfig<T>,
    replication: usize,
) -> Result<Vec<HittingRecord<T>>> {
    config.validate()?;
    let origin = check_source(topology, source)?;
    let lane = (replication as u64) << 1 | source.index() as u64;
    let mut records: Vec<_> = (0..config.molecules_per_emission)
        .into_par_iter()
        .filter_map(|m| {
            let mut rng = substream(config.seed, Domain::Molecule, lane, m as u64);
            simulate_molecule(topology, origin, config, &mut rng).map(|(sink, hit_time)| HittingRecord {
                source,
                sink,
                hit_time,
            })
        })
        .collect();
    sort_records(&mut records);
    Ok(records)
}

/// All replications for one source, pooled and canonically sorted.
pub fn simulate_emission<T: Real>(
    topology: &Topology<T>,
    source: Tx,
    config: &SimConfig<T>,
) -> Result<Vec<HittingRecord<T>>> {
    config.validate()?;
    check_source(topology, source)?;
    let per_rep: Result<Vec<_>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| simulate_replication(topology, source, config, rep))
        .collect();
    let mut records: Vec<_> = per_rep?.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

/// Both sources, sorted by (source, sink, hit_time).
pub fn simulate_all<T: Real>(topology: &Topology<T>, config: &SimConfig<T>) -> Result<Vec<HittingRecord<T>>> {
    let mut records = simulate_emission(topology, Tx::Tx1, config)?;
    records.extend(simulate_emission(topology, Tx::Tx2, config)?);
    sort_records(&mut records);
    Ok(records)
}
