//! Channel CDFs: the closed-form single-sphere hitting fraction, the fitted
//! MIMO model function, its least-squares fit to simulated CDFs, and the
//! per-slot hitting probabilities derived from the fitted model.

mod fit;

pub use fit::{fit_model, FitReport, FIT_MAX_ITERATIONS, FIT_MIN_POINTS, FIT_REL_TOL};

use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::particle_sim::Topology;
use crate::special::erfc;
use crate::{Error, Real, Result};

/// Past slots that still contribute interference, by default.
pub const DEFAULT_MEMORY: usize = 3;

/// Pair links (Tx_i → Rx_i) versus cross links (Tx_i → Rx_j, i ≠ j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkClass {
    Pair,
    Cross,
}

impl LinkClass {
    pub fn distance<T: Real>(self, topology: &Topology<T>) -> T {
        match self {
            LinkClass::Pair => topology.pair_distance(),
            LinkClass::Cross => topology.cross_distance(),
        }
    }
}

/// Expected absorbed fraction for one sphere and a point source:
/// `r_r/(r_r+d) · erfc(d / √(4Dt))`.
pub fn siso_cdf<T: Real>(t: T, receiver_radius: T, distance: T, diffusion: T) -> Result<T> {
    ensure(t >= T::zero(), "t", || format!("must be >= 0, got {t}"))?;
    ensure(receiver_radius > T::zero(), "r_r", || {
        format!("must be > 0, got {receiver_radius}")
    })?;
    ensure(distance > T::zero(), "d", || format!("must be > 0, got {distance}"))?;
    ensure(diffusion > T::zero(), "D", || format!("must be > 0, got {diffusion}"))?;
    if t == T::zero() {
        return Ok(T::zero());
    }
    let amplitude = receiver_radius / (receiver_radius + distance);
    Ok(amplitude * erfc(distance / (T::lit(4.0) * diffusion * t).sqrt()))
}

/// Fitted coefficients of the MIMO model function for one link class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModelParams<T> {
    pub link_class: LinkClass,
    pub b1: T,
    pub b2: T,
    pub b3: T,
    pub topology: Topology<T>,
}

impl<T: Real> ChannelModelParams<T> {
    pub fn new(link_class: LinkClass, b1: T, b2: T, b3: T, topology: Topology<T>) -> Result<Self> {
        let p = Self {
            link_class,
            b1,
            b2,
            b3,
            topology,
        };
        p.validate()?;
        Ok(p)
    }

    /// Published fit for the reference topology, pair link.
    #[allow(clippy::approx_constant)] // b2 is a fitted value, not π/6.
    pub fn reference_pair() -> Self {
        Self::new(
            LinkClass::Pair,
            T::lit(0.9155),
            T::lit(0.5236),
            T::lit(0.5476),
            Topology::reference(),
        )
        .expect("valid")
    }

    /// Published fit for the reference topology, cross link.
    pub fn reference_cross() -> Self {
        Self::new(
            LinkClass::Cross,
            T::lit(0.2981),
            T::lit(0.5315),
            T::lit(0.5363),
            Topology::reference(),
        )
        .expect("valid")
    }

    /// The model with `b1 = 1`, `b2 = b3 = 1/2`, i.e. the single-sphere formula.
    pub fn siso_limit(link_class: LinkClass, topology: Topology<T>) -> Self {
        Self {
            link_class,
            b1: T::one(),
            b2: T::lit(0.5),
            b3: T::lit(0.5),
            topology,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cap = T::lit(1.5);
        for (name, v) in [("b1", self.b1), ("b2", self.b2), ("b3", self.b3)] {
            ensure(v > T::zero() && v <= cap, name, || {
                format!("must lie in (0, 1.5], got {v}")
            })?;
        }
        self.topology.validate()
    }

    pub fn distance(&self) -> T {
        self.link_class.distance(&self.topology)
    }

    /// Model CDF at `t` on this link's own distance.
    pub fn cdf(&self, t: T) -> T {
        model_cdf(t, self, self.distance())
    }

    /// Probability of absorption in `[t1, t2)` after emission.
    pub fn interval(&self, t1: T, t2: T) -> T {
        self.cdf(t2) - self.cdf(t1)
    }

    /// `t → ∞` limit `b1·r_r/(d_ij + r_r)`.
    pub fn limit(&self) -> T {
        let r = self.topology.receiver_radius;
        self.b1 * r / (self.distance() + r)
    }

    pub fn coefficients(&self) -> [T; 3] {
        [self.b1, self.b2, self.b3]
    }
}

/// `(b1·r_r/(d_ij+r_r)) · erfc(d_ij / ((4D)^{b2} · t^{b3}))`, zero at `t ≤ 0`.
pub fn model_cdf<T: Real>(t: T, params: &ChannelModelParams<T>, d_ij: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    let r = params.topology.receiver_radius;
    let amplitude = params.b1 * r / (d_ij + r);
    if t == T::infinity() {
        return amplitude;
    }
    let scale = (T::lit(4.0) * params.topology.diffusion).powf(params.b2) * t.powf(params.b3);
    amplitude * erfc(d_ij / scale)
}

/// `d₁₂ = √((d+r_r)² + (2r_r+h)²) − r_r`.
pub fn cross_distance<T: Real>(topology: &Topology<T>) -> T {
    topology.cross_distance()
}

/// Mean per-slot hitting probabilities: `pair[k] = A_k`, `cross[k] = B_k`
/// for the k-th slot after emission, `k = 0..=memory`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotProbabilities<T> {
    pub pair: Vec<T>,
    pub cross: Vec<T>,
    pub symbol_duration: T,
}

impl<T: Real> SlotProbabilities<T> {
    pub fn new(pair: Vec<T>, cross: Vec<T>, symbol_duration: T) -> Result<Self> {
        ensure(!pair.is_empty(), "pair", || "needs at least the current slot".into())?;
        if pair.len() != cross.len() {
            return Err(Error::LengthMismatch(pair.len(), cross.len()));
        }
        ensure(symbol_duration > T::zero(), "t_s", || {
            format!("must be > 0, got {symbol_duration}")
        })?;
        for &p in pair.iter().chain(&cross) {
            ensure(p >= T::zero() && p <= T::one(), "probability", || {
                format!("{p} outside [0, 1]")
            })?;
        }
        Ok(Self {
            pair,
            cross,
            symbol_duration,
        })
    }

    /// Interference memory `K`: number of past slots that still contribute.
    pub fn memory(&self) -> usize {
        self.pair.len() - 1
    }

    pub fn a0(&self) -> T {
        self.pair[0]
    }

    pub fn b0(&self) -> T {
        self.cross[0]
    }

    /// Same pair probabilities with every cross probability set to zero.
    pub fn without_cross(&self) -> Self {
        Self {
            pair: self.pair.clone(),
            cross: vec![T::zero(); self.cross.len()],
            symbol_duration: self.symbol_duration,
        }
    }

    /// Truncates or keeps the memory at `memory` past slots.
    pub fn truncated(&self, memory: usize) -> Self {
        let n = (memory + 1).min(self.pair.len());
        Self {
            pair: self.pair[..n].to_vec(),
            cross: self.cross[..n].to_vec(),
            symbol_duration: self.symbol_duration,
        }
    }

    /// `Σ_{k≥1} (A_k² + B_k²)`.
    pub fn isi_square_sum(&self) -> T {
        self.pair[1..]
            .iter()
            .zip(&self.cross[1..])
            .map(|(&a, &b)| a * a + b * b)
            .sum()
    }

    /// `A₀² > B₀²`.
    pub fn full_rank(&self) -> bool {
        self.a0() * self.a0() > self.b0() * self.b0()
    }
}

/// `A_k = F₁₁((k+1)t_s) − F₁₁(k·t_s)`, `B_k` likewise on the cross link.
pub fn slot_probs<T: Real>(
    pair: &ChannelModelParams<T>,
    cross: &ChannelModelParams<T>,
    symbol_duration: T,
    memory: usize,
) -> Result<SlotProbabilities<T>> {
    ensure(symbol_duration > T::zero(), "t_s", || {
        format!("must be > 0, got {symbol_duration}")
    })?;
    let slots = |p: &ChannelModelParams<T>| -> Vec<T> {
        (0..=memory)
            .map(|k| {
                let t0 = T::count(k) * symbol_duration;
                p.interval(t0, t0 + symbol_duration).max(T::zero())
            })
            .collect()
    };
    SlotProbabilities::new(slots(pair), slots(cross), symbol_duration)
}
