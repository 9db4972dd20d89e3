//! Interference statistics, conditional detector-output statistics, the
//! closed-form MAP thresholds and the five detectors.
//!
//! All detector outputs are normalised so that a bit-1 on the detected
//! stream shifts the mean by one (`ŷ_ex`, `ŷ_in`, `ŷ_g`), except for adaptive
//! thresholding whose output `y/Q1` is `A₀` times the `ŷ_ex` output.

use serde::{Deserialize, Serialize};

use crate::channel_model::SlotProbabilities;
use crate::error::ensure;
use crate::linalg::Mat2;
use crate::link_sim::{mean_channel_matrices, LinkTrace, SlotObservation};
use crate::{Error, Real, Result};

/// Default empirical threshold of the fixed detector, in units of `y/Q1`.
pub const FIXED_THRESHOLD: f64 = 0.2;
/// Genie threshold scan range and step.
pub const GENIE_SCAN: (f64, f64, f64) = (-0.5, 1.5, 1e-3);

/// Mean and variance of `Bernoulli(π1) · Binomial(Q1, p)`.
pub fn bernoulli_binomial_moments<T: Real>(q1: T, p: T, pi1: T) -> (T, T) {
    let pi0 = T::one() - pi1;
    let mean = pi1 * q1 * p;
    let var = pi1 * q1 * p * (T::one() - p) + pi0 * pi1 * q1 * q1 * p * p;
    (mean, var)
}

/// Steady-state interference `I_i = ISI_i + n_i` for one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceStats<T> {
    pub mean: T,
    pub variance: T,
    /// Per past slot `k = 1..=K`: `(mean, variance)` of the pair plus cross term.
    pub components: Vec<(T, T)>,
    pub noise_variance: T,
    /// Current-slot inter-link term `S_ij[0]·x_j`.
    pub ili_mean: T,
    pub ili_variance: T,
}

/// `μ_I = π1·Q1·Σ_{k≥1}(A_k + B_k)`,
/// `σ_I² = π0π1Q1²·Σ(A_k² + B_k²) + π1Q1·Σ(A_k(1−A_k) + B_k(1−B_k)) + σ_n²`.
///
/// The sums run over the `K = probs.memory()` past slots; with no memory
/// only the noise remains.
pub fn interference_stats<T: Real>(probs: &SlotProbabilities<T>, q1: T, pi1: T, sigma_n: T) -> InterferenceStats<T> {
    let components: Vec<(T, T)> = probs.pair[1..]
        .iter()
        .zip(&probs.cross[1..])
        .map(|(&a, &b)| {
            let (ma, va) = bernoulli_binomial_moments(q1, a, pi1);
            let (mb, vb) = bernoulli_binomial_moments(q1, b, pi1);
            (ma + mb, va + vb)
        })
        .collect();
    let noise_variance = sigma_n * sigma_n;
    let (ili_mean, ili_variance) = bernoulli_binomial_moments(q1, probs.b0(), pi1);
    InterferenceStats {
        mean: components.iter().map(|c| c.0).sum(),
        variance: components.iter().map(|c| c.1).sum::<T>() + noise_variance,
        components,
        noise_variance,
        ili_mean,
        ili_variance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Fixed,
    Adaptive,
    ZfEx,
    ZfIn,
    Genie,
    /// Adaptive thresholding on a single link with no second antenna pair.
    SisoAdaptive,
}

impl DetectorKind {
    pub const MIMO: [DetectorKind; 5] = [
        DetectorKind::Fixed,
        DetectorKind::Adaptive,
        DetectorKind::ZfEx,
        DetectorKind::ZfIn,
        DetectorKind::Genie,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Fixed => "fixed",
            DetectorKind::Adaptive => "adaptive",
            DetectorKind::ZfEx => "zf_ex",
            DetectorKind::ZfIn => "zf_in",
            DetectorKind::Genie => "genie",
            DetectorKind::SisoAdaptive => "siso_adaptive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::MIMO.as_slice(), &[DetectorKind::SisoAdaptive]]
            .concat()
            .into_iter()
            .find(|k| k.name() == s)
    }
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Gaussian-approximation output statistics conditioned on the sent bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorStats<T> {
    pub kind: DetectorKind,
    pub mu0: T,
    pub mu1: T,
    pub var0: T,
    pub var1: T,
}

impl<T: Real> DetectorStats<T> {
    /// `(σ1/σ0)²`.
    pub fn beta_ratio(&self) -> T {
        self.var1 / self.var0
    }

    /// Output statistics of `c·ŷ`.
    pub fn scaled(&self, c: T, kind: DetectorKind) -> Self {
        Self {
            kind,
            mu0: c * self.mu0,
            mu1: c * self.mu1,
            var0: c * c * self.var0,
            var1: c * c * self.var1,
        }
    }
}

pub fn detector_stats_ex<T: Real>(probs: &SlotProbabilities<T>, q1: T, pi1: T, sigma_n: T) -> Result<DetectorStats<T>> {
    let (a0, b0) = (probs.a0(), probs.b0());
    ensure(a0 > T::zero(), "A0", || "must be > 0".into())?;
    let pi0 = T::one() - pi1;
    let i = interference_stats(probs, q1, pi1, sigma_n);
    let mu0 = pi1 * b0 / a0 + i.mean / (q1 * a0);
    let var0 = pi1 * b0 * (T::one() - b0) / (a0 * a0 * q1)
        + pi0 * pi1 * b0 * b0 / (a0 * a0)
        + i.variance / (q1 * q1 * a0 * a0);
    Ok(DetectorStats {
        kind: DetectorKind::ZfEx,
        mu0,
        mu1: T::one() + mu0,
        var0,
        var1: (T::one() - a0) / (q1 * a0) + var0,
    })
}

pub fn detector_stats_in<T: Real>(probs: &SlotProbabilities<T>, q1: T, pi1: T, sigma_n: T) -> Result<DetectorStats<T>> {
    let (a0, b0) = (probs.a0(), probs.b0());
    let delta = a0 * a0 - b0 * b0;
    if delta <= T::zero() {
        return Err(Error::RankDeficient {
            a0_sq: (a0 * a0).to_f64_lossy(),
            b0_sq: (b0 * b0).to_f64_lossy(),
        });
    }
    let i = interference_stats(probs, q1, pi1, sigma_n);
    let one = T::one();
    let mu0 = (a0 - b0) * i.mean / (q1 * delta);
    let var0 = (a0 / delta).powi(2) * pi1 * b0 * (one - b0) / q1
        + (b0 / delta).powi(2) * pi1 * a0 * (one - a0) / q1
        + (a0 * a0 + b0 * b0) / (q1 * q1 * delta * delta) * i.variance;
    let var1 = (a0.powi(3) * (one - a0) + b0.powi(3) * (one - b0)) / (q1 * delta * delta) + var0;
    Ok(DetectorStats {
        kind: DetectorKind::ZfIn,
        mu0,
        mu1: one + mu0,
        var0,
        var1,
    })
}

/// Statistics of `ŷ_a = y/Q1`: the `ŷ_ex` statistics scaled by `A₀`.
pub fn detector_stats_adaptive<T: Real>(
    probs: &SlotProbabilities<T>,
    q1: T,
    pi1: T,
    sigma_n: T,
) -> Result<DetectorStats<T>> {
    Ok(detector_stats_ex(probs, q1, pi1, sigma_n)?.scaled(probs.a0(), DetectorKind::Adaptive))
}

/// Decision thresholds; bit-0 iff `lower < ŷ < upper`, bit-1 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> ThresholdPair<T> {
    pub fn single(upper: T) -> Self {
        Self {
            lower: T::neg_infinity(),
            upper,
        }
    }

    pub fn decide(&self, v: T) -> u8 {
        u8::from(!(v > self.lower && v < self.upper))
    }

    /// `v ≤ lower`: a bit-1 decision caused by the lower threshold.
    pub fn below_lower(&self, v: T) -> bool {
        v <= self.lower
    }
}

/// Intersections of `N(μ0, σ0²)` and `N(μ1, σ1²)`:
///
/// `η = μ0 + Δμ·(−1 ± √(1 + (β−1)(1 + (σ0/Δμ)²·β·ln β)))/(β−1)`, `Δμ = μ1 − μ0`.
///
/// With `Δμ = 1` this is the usual normalised-output form. Equal variances
/// give the single midpoint threshold.
pub fn threshold_pair<T: Real>(stats: &DetectorStats<T>) -> Result<ThresholdPair<T>> {
    let (mu0, mu1, v0, v1) = (stats.mu0, stats.mu1, stats.var0, stats.var1);
    if !(v0 > T::zero()) || !v0.is_finite() || !v1.is_finite() {
        return Err(Error::DegenerateVariance);
    }
    let dmu = mu1 - mu0;
    ensure(dmu > T::zero(), "mu1 - mu0", || format!("must be > 0, got {dmu}"))?;
    let beta = v1 / v0;
    let tol = T::lit(1e-12);
    if beta < T::one() - tol {
        return Err(Error::VarianceRatioBelowOne(beta.to_f64_lossy()));
    }
    if beta <= T::one() + tol {
        return Ok(ThresholdPair::single((mu0 + mu1) / T::lit(2.0)));
    }
    let bm1 = beta - T::one();
    let root = (T::one() + bm1 * (T::one() + v0 / (dmu * dmu) * beta * beta.ln())).sqrt();
    Ok(ThresholdPair {
        lower: mu0 + dmu * (-T::one() - root) / bm1,
        upper: mu0 + dmu * (-T::one() + root) / bm1,
    })
}

/// `ln(σ1/σ0) − (η−μ0)²/(2σ0²) + (η−μ1)²/(2σ1²)`: zero at an intersection.
pub fn density_log_residual<T: Real>(stats: &DetectorStats<T>, eta: T) -> T {
    let half = T::lit(0.5);
    half * (stats.var1 / stats.var0).ln() - (eta - stats.mu0).powi(2) / (T::lit(2.0) * stats.var0)
        + (eta - stats.mu1).powi(2) / (T::lit(2.0) * stats.var1)
}

fn decide2<T: Real>(v: [T; 2], thr: &ThresholdPair<T>) -> [u8; 2] {
    [thr.decide(v[0]), thr.decide(v[1])]
}

/// Bit-1 iff `y_i/Q1 ≥ η_f`.
pub fn detect_fixed<T: Real>(y: [T; 2], q1: T, eta_f: T) -> [u8; 2] {
    y.map(|v| u8::from(v / q1 >= eta_f))
}

/// `ŷ_a = y/Q1`.
pub fn adaptive_output<T: Real>(y: [T; 2], q1: T) -> [T; 2] {
    y.map(|v| v / q1)
}

/// Adaptive thresholding; `thr` must be built from the `A₀`-scaled statistics.
pub fn detect_adaptive<T: Real>(y: [T; 2], q1: T, thr: &ThresholdPair<T>) -> [u8; 2] {
    decide2(adaptive_output(y, q1), thr)
}

/// `ŷ_ex = H̄_ex⁻¹·y`.
pub fn zf_ex_output<T: Real>(y: [T; 2], h_ex: &Mat2<T>) -> Result<[T; 2]> {
    let [[a, b], [c, d]] = h_ex.m;
    if b != T::zero() || c != T::zero() {
        return Err(Error::param("H_ex", "must be diagonal"));
    }
    if a == T::zero() || d == T::zero() {
        return Err(Error::SingularMatrix((a * d).to_f64_lossy()));
    }
    Ok([y[0] / a, y[1] / d])
}

pub fn detect_zf_ex<T: Real>(y: [T; 2], h_ex: &Mat2<T>, thr: &ThresholdPair<T>) -> Result<[u8; 2]> {
    Ok(decide2(zf_ex_output(y, h_ex)?, thr))
}

/// `1/(a² − b²)·[[a, −b], [−b, a]]` for `H̄_in = [[a, b], [b, a]]`.
pub fn zf_in_inverse<T: Real>(h_in: &Mat2<T>) -> Result<Mat2<T>> {
    let [[a, b], [c, d]] = h_in.m;
    if a != d || b != c {
        return Err(Error::param("H_in", "must have the form [[a, b], [b, a]]"));
    }
    let det = a * a - b * b;
    if det <= T::zero() {
        return Err(Error::RankDeficient {
            a0_sq: (a * a).to_f64_lossy(),
            b0_sq: (b * b).to_f64_lossy(),
        });
    }
    Ok(Mat2::new(a, -b, -b, a).scale(det.recip()))
}

/// `ŷ_in = H̄_in⁻¹·y`, given the precomputed inverse.
pub fn zf_in_output<T: Real>(y: [T; 2], h_in_inv: &Mat2<T>) -> [T; 2] {
    h_in_inv.mul_vec(y)
}

pub fn detect_zf_in<T: Real>(y: [T; 2], h_in: &Mat2<T>, thr: &ThresholdPair<T>) -> Result<[u8; 2]> {
    Ok(decide2(zf_in_output(y, &zf_in_inverse(h_in)?), thr))
}

/// `ŷ_g = H⁻¹·y` with the realized current-slot matrix; `None` when singular.
pub fn genie_output<T: Real>(y: [T; 2], realized: &Mat2<T>) -> Option<[T; 2]> {
    realized.inverse().ok().map(|inv| inv.mul_vec(y))
}

/// Outcome of one genie decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenieDecision {
    pub bits: [u8; 2],
    /// The realized matrix was singular and `zf_in` decided instead.
    pub fell_back: bool,
}

pub fn detect_genie<T: Real>(
    y: [T; 2],
    realized: &Mat2<T>,
    thr: &ThresholdPair<T>,
    fallback_inv: &Mat2<T>,
    fallback_thr: &ThresholdPair<T>,
) -> GenieDecision {
    match genie_output(y, realized) {
        Some(v) => GenieDecision {
            bits: decide2(v, thr),
            fell_back: false,
        },
        None => GenieDecision {
            bits: decide2(zf_in_output(y, fallback_inv), fallback_thr),
            fell_back: true,
        },
    }
}

/// Result of a brute-force single-threshold scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan<T> {
    pub threshold: T,
    pub errors: usize,
    pub samples: usize,
}

impl<T: Real> ThresholdScan<T> {
    pub fn error_rate(&self) -> T {
        T::count(self.errors) / T::count(self.samples.max(1))
    }
}

fn sorted<T: Real>(v: &[T]) -> Vec<T> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Errors of the single-threshold rule `ŷ ≥ η → 1` at `η`, from sorted samples.
fn errors_at<T: Real>(s0: &[T], s1: &[T], eta: T) -> usize {
    (s0.len() - s0.partition_point(|&v| v < eta)) + s1.partition_point(|&v| v < eta)
}

/// Scans `η = lo, lo+step, …, hi` and returns the grid point minimising the
/// error count of `ŷ ≥ η → 1`. Among tied grid points the middle of the
/// first minimal run is taken.
pub fn scan_optimal_threshold<T: Real>(
    outputs0: &[T],
    outputs1: &[T],
    lo: T,
    hi: T,
    step: T,
) -> Result<ThresholdScan<T>> {
    ensure(step > T::zero() && hi >= lo, "scan", || {
        "needs step > 0 and hi >= lo".into()
    })?;
    ensure(!outputs0.is_empty() || !outputs1.is_empty(), "samples", || {
        "needs data".into()
    })?;
    let (s0, s1) = (sorted(outputs0), sorted(outputs1));
    let n = ((hi - lo) / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    let counts: Vec<usize> = (0..=n).map(|k| errors_at(&s0, &s1, lo + T::count(k) * step)).collect();
    let best = *counts.iter().min().expect("non-empty");
    let first = counts.iter().position(|&c| c == best).expect("present");
    let run = counts[first..].iter().take_while(|&&c| c == best).count();
    let k = first + (run - 1) / 2;
    Ok(ThresholdScan {
        threshold: lo + T::count(k) * step,
        errors: best,
        samples: s0.len() + s1.len(),
    })
}

/// Error count of a full threshold pair on labelled outputs.
pub fn count_errors<T: Real>(outputs0: &[T], outputs1: &[T], thr: &ThresholdPair<T>) -> usize {
    outputs0.iter().filter(|&&v| thr.decide(v) == 1).count() + outputs1.iter().filter(|&&v| thr.decide(v) == 0).count()
}

/// Detector outputs of one kind from a trace, split by the sent bit on the
/// detected stream. Fixed uses `y/Q1`. Genie slots with a singular realized
/// matrix are skipped.
pub fn split_outputs<T: Real>(bank: &DetectorBank<T>, kind: DetectorKind, trace: &LinkTrace<T>) -> (Vec<T>, Vec<T>) {
    let mut zero = Vec::new();
    let mut one = Vec::new();
    for o in &trace.observations {
        if let Some(v) = bank.output(kind, o) {
            for (&x, &v) in o.x.iter().zip(&v) {
                if x == 1 {
                    one.push(v);
                } else {
                    zero.push(v);
                }
            }
        }
    }
    (zero, one)
}

/// Per-detector error tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub bits: usize,
    pub errors: usize,
    pub lower_threshold_triggers: usize,
    pub genie_fallbacks: usize,
}

impl Tally {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }
}

/// Everything the detectors need for a fixed operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorBank<T> {
    pub q1: T,
    pub a0: T,
    pub fixed_threshold: T,
    pub h_ex: Mat2<T>,
    pub h_in: Mat2<T>,
    pub h_in_inv: Mat2<T>,
    pub adaptive: ThresholdPair<T>,
    pub zf_ex: ThresholdPair<T>,
    pub zf_in: ThresholdPair<T>,
    pub genie: ThresholdPair<T>,
}

impl<T: Real> DetectorBank<T> {
    /// Analytic thresholds from the Gaussian statistics. The genie threshold
    /// starts at `1/2` and is meant to be replaced by [`Self::calibrate_genie`].
    pub fn new(probs: &SlotProbabilities<T>, q1: u64, pi1: T, sigma_n: T) -> Result<Self> {
        let q = T::lit(q1 as f64);
        let (h_ex, h_in) = mean_channel_matrices(probs, q1)?;
        let ex = detector_stats_ex(probs, q, pi1, sigma_n)?;
        let inn = detector_stats_in(probs, q, pi1, sigma_n)?;
        Ok(Self {
            q1: q,
            a0: probs.a0(),
            fixed_threshold: T::lit(FIXED_THRESHOLD),
            h_ex,
            h_in,
            h_in_inv: zf_in_inverse(&h_in)?,
            adaptive: threshold_pair(&ex.scaled(probs.a0(), DetectorKind::Adaptive))?,
            zf_ex: threshold_pair(&ex)?,
            zf_in: threshold_pair(&inn)?,
            genie: ThresholdPair::single(T::lit(0.5)),
        })
    }

    /// Replaces the genie threshold by the brute-force optimum on `trace`.
    pub fn calibrate_genie(&mut self, trace: &LinkTrace<T>) -> Result<ThresholdScan<T>> {
        let (zero, one) = split_outputs(self, DetectorKind::Genie, trace);
        let (lo, hi, step) = GENIE_SCAN;
        let scan = scan_optimal_threshold(&zero, &one, T::lit(lo), T::lit(hi), T::lit(step))?;
        self.genie = ThresholdPair::single(scan.threshold);
        Ok(scan)
    }

    pub fn thresholds(&self, kind: DetectorKind) -> ThresholdPair<T> {
        match kind {
            DetectorKind::Fixed => ThresholdPair::single(self.fixed_threshold),
            DetectorKind::Adaptive | DetectorKind::SisoAdaptive => self.adaptive,
            DetectorKind::ZfEx => self.zf_ex,
            DetectorKind::ZfIn => self.zf_in,
            DetectorKind::Genie => self.genie,
        }
    }

    /// Soft output of a detector; `None` for a singular genie slot.
    pub fn output(&self, kind: DetectorKind, o: &SlotObservation<T>) -> Option<[T; 2]> {
        match kind {
            DetectorKind::Fixed | DetectorKind::Adaptive | DetectorKind::SisoAdaptive => {
                Some(adaptive_output(o.y, self.q1))
            }
            DetectorKind::ZfEx => zf_ex_output(o.y, &self.h_ex).ok(),
            DetectorKind::ZfIn => Some(zf_in_output(o.y, &self.h_in_inv)),
            DetectorKind::Genie => genie_output(o.y, &o.realized_matrix()),
        }
    }

    /// Bit decisions, lower-threshold flags and whether the genie fell back.
    pub fn decide(&self, kind: DetectorKind, o: &SlotObservation<T>) -> ([u8; 2], [bool; 2], bool) {
        let (v, thr, fell_back) = match (kind, self.output(kind, o)) {
            (_, Some(v)) => (v, self.thresholds(kind), false),
            (_, None) => (zf_in_output(o.y, &self.h_in_inv), self.zf_in, true),
        };
        let bits = if kind == DetectorKind::Fixed {
            detect_fixed(o.y, self.q1, self.fixed_threshold)
        } else {
            decide2(v, &thr)
        };
        let lower = [thr.below_lower(v[0]), thr.below_lower(v[1])];
        (bits, lower, fell_back)
    }

    /// Tallies decisions of `kind` over a trace, both streams pooled.
    pub fn tally(&self, kind: DetectorKind, trace: &LinkTrace<T>) -> Tally {
        let mut t = Tally::default();
        for o in &trace.observations {
            let (bits, lower, fell_back) = self.decide(kind, o);
            t.bits += 2;
            t.errors += usize::from(bits[0] != o.x[0]) + usize::from(bits[1] != o.x[1]);
            t.lower_threshold_triggers += lower.iter().filter(|&&b| b).count();
            t.genie_fallbacks += usize::from(fell_back);
        }
        t
    }
}
