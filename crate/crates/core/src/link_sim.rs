//! Symbol-level 2×2 BCSK link: binomial arrivals per slot, ISI and ILI
//! superposition, additive Gaussian counting noise.
//!
//! Per slot `m` and receiver `i` (with `j` the other antenna):
//!
//! `y_i[m] = S_ii[0]·x_i[m] + S_ij[0]·x_j[m] + Σ_{k=1..min(m,K)} (S_ii[k]·x_i[m−k] + S_ij[k]·x_j[m−k]) + n_i[m]`
//!
//! where each `S[k] ~ Binomial(Q1, A_k or B_k)` is drawn fresh and
//! `n_i ~ N(0, σ_n²)`. The noise is real-valued and never clipped.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel_model::SlotProbabilities;
use crate::error::ensure;
use crate::linalg::Mat2;
use crate::rng::{substream, Domain};
use crate::{Error, Real, Result};

/// Transmitter side; bit-0 always releases nothing (`Q0 = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TxConfig<T> {
    pub q1: u64,
    pub pi1: T,
    pub symbol_duration: T,
    pub n_bits: usize,
}

impl<T: Real> TxConfig<T> {
    pub fn new(q1: u64, pi1: T, symbol_duration: T, n_bits: usize) -> Result<Self> {
        let c = Self {
            q1,
            pi1,
            symbol_duration,
            n_bits,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.q1 >= 1, "Q1", || "must be >= 1".into())?;
        ensure(self.pi1 >= T::zero() && self.pi1 <= T::one(), "pi1", || {
            format!("must lie in [0, 1], got {}", self.pi1)
        })?;
        ensure(self.symbol_duration > T::zero(), "t_s", || {
            format!("must be > 0, got {}", self.symbol_duration)
        })
    }

    pub fn q0(&self) -> u64 {
        0
    }

    pub fn pi0(&self) -> T {
        T::one() - self.pi1
    }

    pub fn q1_real(&self) -> T {
        T::lit(self.q1 as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig<T> {
    pub sigma_n: T,
}

impl<T: Real> NoiseConfig<T> {
    pub fn new(sigma_n: T) -> Result<Self> {
        ensure(sigma_n >= T::zero() && sigma_n.is_finite(), "sigma_n", || {
            format!("must be finite and >= 0, got {sigma_n}")
        })?;
        Ok(Self { sigma_n })
    }

    pub fn noiseless() -> Self {
        Self { sigma_n: T::zero() }
    }

    pub fn variance(&self) -> T {
        self.sigma_n * self.sigma_n
    }
}

impl<T: Real> Default for NoiseConfig<T> {
    /// `σ_n² = 100`.
    fn default() -> Self {
        Self { sigma_n: T::lit(10.0) }
    }
}

/// One received slot with its labelled partial sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotObservation<T> {
    pub slot: usize,
    pub y: [T; 2],
    /// Current-slot draws `S_ij[0]`; row = receiver, column = transmitter.
    /// Column `j` reaches `y` only when `x_j = 1`.
    pub realized_h: [[u64; 2]; 2],
    pub x: [u8; 2],
    /// `S_ii[0]·x_i[m]`.
    pub desired: [u64; 2],
    /// Current-slot inter-link term `S_ij[0]·x_j[m]`.
    pub ili: [u64; 2],
    /// Past-slot terms from both antennas.
    pub isi: [u64; 2],
    pub noise: [T; 2],
}

impl<T: Real> SlotObservation<T> {
    /// ISI plus noise, the `I_i[m]` term.
    pub fn interference(&self) -> [T; 2] {
        [0, 1].map(|i| T::lit(self.isi[i] as f64) + self.noise[i])
    }

    pub fn realized_matrix(&self) -> Mat2<T> {
        let h = self.realized_h.map(|row| row.map(|v| T::lit(v as f64)));
        Mat2 { m: h }
    }

    pub fn trace_row(&self) -> TraceRow<T> {
        let [[h11, h12], [h21, h22]] = self.realized_h;
        TraceRow {
            slot: self.slot,
            y1: self.y[0],
            y2: self.y[1],
            x1: self.x[0],
            x2: self.x[1],
            h11,
            h12,
            h21,
            h22,
        }
    }
}

/// Flat CSV row of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow<T> {
    pub slot: usize,
    pub y1: T,
    pub y2: T,
    pub x1: u8,
    pub x2: u8,
    pub h11: u64,
    pub h12: u64,
    pub h21: u64,
    pub h22: u64,
}

fn binomial(q: u64, p: f64) -> Result<Binomial> {
    Binomial::new(q, p).map_err(|e| Error::param("p", format!("{e} (p = {p})")))
}

/// One `Binomial(Q, p)` draw.
pub fn sample_arrivals<T: Real, R: Rng + ?Sized>(q: u64, p: T, rng: &mut R) -> Result<u64> {
    ensure(p >= T::zero() && p <= T::one(), "p", || {
        format!("must lie in [0, 1], got {p}")
    })?;
    Ok(binomial(q, p.to_f64_lossy())?.sample(rng))
}

/// i.i.d. Bernoulli(π1) bits.
pub fn random_bits<T: Real, R: Rng + ?Sized>(n: usize, pi1: T, rng: &mut R) -> Vec<u8> {
    let p = pi1.to_f64_lossy();
    (0..n).map(|_| u8::from(rng.random::<f64>() < p)).collect()
}

/// Simulates both receivers for the given pair of bit sequences.
pub fn simulate_link<T: Real, R: Rng + ?Sized>(
    x1: &[u8],
    x2: &[u8],
    tx: &TxConfig<T>,
    probs: &SlotProbabilities<T>,
    noise: &NoiseConfig<T>,
    rng: &mut R,
) -> Result<Vec<SlotObservation<T>>> {
    if x1.len() != x2.len() {
        return Err(Error::LengthMismatch(x1.len(), x2.len()));
    }
    tx.validate()?;
    ensure(x1.iter().chain(x2).all(|&b| b <= 1), "bits", || "must be 0 or 1".into())?;
    let pair: Vec<Binomial> = probs
        .pair
        .iter()
        .map(|p| binomial(tx.q1, p.to_f64_lossy()))
        .collect::<Result<_>>()?;
    let cross: Vec<Binomial> = probs
        .cross
        .iter()
        .map(|p| binomial(tx.q1, p.to_f64_lossy()))
        .collect::<Result<_>>()?;
    let memory = probs.memory();
    let xs = [x1, x2];
    let sigma = noise.sigma_n.to_f64_lossy();

    let mut out = Vec::with_capacity(x1.len());
    for m in 0..x1.len() {
        let x = [x1[m], x2[m]];
        let mut h = [[0u64; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j {
                    pair[0].sample(rng)
                } else {
                    cross[0].sample(rng)
                };
            }
        }
        let mut desired = [0u64; 2];
        let mut ili = [0u64; 2];
        let mut isi = [0u64; 2];
        let mut nz = [T::zero(); 2];
        let mut y = [T::zero(); 2];
        for i in 0..2 {
            let j = 1 - i;
            desired[i] = h[i][i] * u64::from(x[i]);
            ili[i] = h[i][j] * u64::from(x[j]);
            for k in 1..=memory.min(m) {
                if xs[i][m - k] == 1 {
                    isi[i] += pair[k].sample(rng);
                }
                if xs[j][m - k] == 1 {
                    isi[i] += cross[k].sample(rng);
                }
            }
            if sigma > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                nz[i] = T::lit(sigma * z);
            }
            y[i] = T::lit((desired[i] + ili[i] + isi[i]) as f64) + nz[i];
        }
        out.push(SlotObservation {
            slot: m,
            y,
            realized_h: h,
            x,
            desired,
            ili,
            isi,
            noise: nz,
        });
    }
    Ok(out)
}

/// Bits and observations of one simulated link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTrace<T> {
    pub x1: Vec<u8>,
    pub x2: Vec<u8>,
    pub observations: Vec<SlotObservation<T>>,
}

impl<T: Real> LinkTrace<T> {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Draws `tx.n_bits` random bits per antenna and simulates them, using
/// substreams keyed by `(seed, lane)`.
pub fn simulate_trace<T: Real>(
    tx: &TxConfig<T>,
    probs: &SlotProbabilities<T>,
    noise: &NoiseConfig<T>,
    seed: u64,
    lane: u64,
) -> Result<LinkTrace<T>> {
    let x1 = random_bits(tx.n_bits, tx.pi1, &mut substream(seed, Domain::Bits, lane, 0));
    let x2 = random_bits(tx.n_bits, tx.pi1, &mut substream(seed, Domain::Bits, lane, 1));
    let observations = simulate_link(&x1, &x2, tx, probs, noise, &mut substream(seed, Domain::Link, lane, 0))?;
    Ok(LinkTrace { x1, x2, observations })
}

/// `H̄_ex = Q1·A₀·I` and `H̄_in = Q1·[[A₀, B₀], [B₀, A₀]]`.
pub fn mean_channel_matrices<T: Real>(probs: &SlotProbabilities<T>, q1: u64) -> Result<(Mat2<T>, Mat2<T>)> {
    let (a0, b0) = (probs.a0(), probs.b0());
    ensure(a0 > T::zero(), "A0", || "must be > 0".into())?;
    let q = T::lit(q1 as f64);
    Ok((
        Mat2::diagonal(q * a0, q * a0),
        Mat2::new(q * a0, q * b0, q * b0, q * a0),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::{slot_probs, ChannelModelParams};

    fn probs(memory: usize) -> SlotProbabilities<f64> {
        slot_probs(
            &ChannelModelParams::reference_pair(),
            &ChannelModelParams::reference_cross(),
            0.08,
            memory,
        )
        .unwrap()
    }

    fn tx(q1: u64) -> TxConfig<f64> {
        TxConfig::new(q1, 0.5, 0.08, 0).unwrap()
    }

    #[test]
    fn arrivals_edge_probabilities() {
        let mut rng = substream(1, Domain::Demo, 0, 0);
        assert_eq!(sample_arrivals(700, 0.0, &mut rng).unwrap(), 0);
        assert_eq!(sample_arrivals(700, 1.0, &mut rng).unwrap(), 700);
        assert!(sample_arrivals(700, 1.1, &mut rng).is_err());
    }

    #[test]
    fn arrivals_moments() {
        let mut rng = substream(2, Domain::Demo, 0, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_arrivals(700, 0.1, &mut rng).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean / 70.0 - 1.0).abs() < 0.01, "{mean}");
        assert!((var / 63.0 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn zero_bits_give_zero_output() {
        let mut rng = substream(3, Domain::Demo, 0, 0);
        let zeros = vec![0u8; 200];
        let obs = simulate_link(&zeros, &zeros, &tx(700), &probs(3), &NoiseConfig::noiseless(), &mut rng).unwrap();
        assert!(obs.iter().all(|o| o.y == [0.0, 0.0]));
    }

    #[test]
    fn single_slot_without_memory() {
        let p = probs(0);
        let mut rng = substream(4, Domain::Demo, 0, 0);
        let n = 20_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let o = simulate_link(&[1], &[0], &tx(700), &p, &NoiseConfig::noiseless(), &mut rng).unwrap();
            assert_eq!(o[0].y[0], o[0].realized_h[0][0] as f64);
            assert_eq!(o[0].y[1], o[0].realized_h[1][0] as f64);
            s1 += o[0].y[0];
            s2 += o[0].y[1];
        }
        let (m1, m2) = (s1 / n as f64, s2 / n as f64);
        assert!((m1 / (700.0 * p.a0()) - 1.0).abs() < 0.01, "{m1}");
        assert!((m2 / (700.0 * p.b0()) - 1.0).abs() < 0.1, "{m2}");
    }

    #[test]
    fn length_mismatch() {
        let mut rng = substream(5, Domain::Demo, 0, 0);
        let r = simulate_link(&[1, 0], &[1], &tx(10), &probs(0), &NoiseConfig::noiseless(), &mut rng);
        assert!(matches!(r, Err(Error::LengthMismatch(2, 1))));
    }

    #[test]
    fn conservation_and_integrality() {
        let t = TxConfig::new(300, 0.5, 0.08, 5000).unwrap();
        let trace = simulate_trace(&t, &probs(3), &NoiseConfig::noiseless(), 9, 0).unwrap();
        for o in &trace.observations {
            for j in 0..2 {
                // Current-slot arrivals from Tx_j at either sink.
                let cap = 300 * u64::from(o.x[j]);
                assert!(o.desired[j] <= cap && o.ili[1 - j] <= cap);
                assert!(o.realized_h[0][j] <= 300 && o.realized_h[1][j] <= 300);
            }
            for i in 0..2 {
                assert_eq!(o.y[i], (o.desired[i] + o.ili[i] + o.isi[i]) as f64);
                assert!(o.y[i] >= 0.0 && o.y[i].fract() == 0.0);
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let t = TxConfig::new(500, 0.5, 0.08, 1000).unwrap();
        let a = simulate_trace(&t, &probs(3), &NoiseConfig::default(), 11, 2).unwrap();
        let b = simulate_trace(&t, &probs(3), &NoiseConfig::default(), 11, 2).unwrap();
        assert_eq!(a, b);
        let c = simulate_trace(&t, &probs(3), &NoiseConfig::default(), 11, 3).unwrap();
        assert_ne!(a.x1, c.x1);
    }

    #[test]
    fn mean_matrices() {
        let p = probs(3);
        let (ex, inn) = mean_channel_matrices(&p, 700).unwrap();
        assert_eq!(ex.m[0][1], 0.0);
        assert!(inn.m[0][1] < inn.m[0][0]);
        let want_det = 700.0f64.powi(2) * (p.a0().powi(2) - p.b0().powi(2));
        assert!((inn.det() / want_det - 1.0).abs() < 1e-12);
        let (ex, inn) = mean_channel_matrices(&p.without_cross(), 700).unwrap();
        assert_eq!(ex, inn);
    }
}
