//! Link-level analysis: SIR, generalized Gaussian output models and error
//! probability, the `h(Q1)` variance comparison of the two zero-forcing
//! detectors, throughput, and Monte Carlo BER sweeps.

mod ber;
mod ggd;

pub use ber::{run_ber_experiment, siso_probabilities, student_t_ci, BerPoint, BerSweepConfig};
pub use ggd::{
    average_error_probability, compare_ggd_gaussian, error_probability, fit_ggd, ks_distance, kurtosis_of_shape,
    sample_moments, FitComparison, GgdParams, GGD_MIN_SAMPLES, SHAPE_BRACKET, SHAPE_TOL,
};

use serde::{Deserialize, Serialize};

use crate::channel_model::{ChannelModelParams, SlotProbabilities};
use crate::detection::{detector_stats_ex, detector_stats_in};
use crate::error::ensure;
use crate::linalg::solve3;
use crate::{Error, Real, Result};

/// `F₁₁(0, t_s) / (F₁₁(t_s, ∞) + F₁₂(0, ∞))`, tails from the model limits.
pub fn sir<T: Real>(pair: &ChannelModelParams<T>, cross: &ChannelModelParams<T>, symbol_duration: T) -> Result<T> {
    ensure(symbol_duration > T::zero(), "t_s", || {
        format!("must be > 0, got {symbol_duration}")
    })?;
    let desired = pair.cdf(symbol_duration);
    let den = (pair.limit() - desired) + cross.limit();
    if den <= T::zero() {
        return Err(Error::param("SIR", "zero interference denominator"));
    }
    Ok(desired / den)
}

/// `M·L/t_s·(1 − BER)` in bits/s.
pub fn throughput<T: Real>(modulation_order: T, streams: T, symbol_duration: T, ber: T) -> Result<T> {
    ensure(ber >= T::zero() && ber <= T::one(), "ber", || {
        format!("must lie in [0, 1], got {ber}")
    })?;
    ensure(symbol_duration > T::zero(), "t_s", || {
        format!("must be > 0, got {symbol_duration}")
    })?;
    Ok(modulation_order * streams / symbol_duration * (T::one() - ber))
}

/// `h(Q1) = Q1²(σ_ex0² − σ_in0²) = a·Q1² + b·Q1 + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticH<T> {
    /// Coefficients recovered from three evaluations of `h`.
    pub a: T,
    pub b: T,
    pub c: T,
    /// Closed forms of the same coefficients, for cross-checking.
    pub a_closed: T,
    pub b_closed: T,
    pub c_closed: T,
    /// Largest positive root `𝒯`, if any.
    pub root: Option<T>,
    pub positive_roots: usize,
    /// `A₀² − 2B₀² > 0`.
    pub ili_ok: bool,
    /// `(A₀² − 2B₀²)/3 > Σ_{k≥1}(A_k² + B_k²)`.
    pub isi_ok: bool,
}

/// Interpolation nodes for recovering `(a, b, c)`.
pub const H_NODES: [f64; 3] = [1.0, 100.0, 10_000.0];

impl<T: Real> QuadraticH<T> {
    pub fn eval(&self, q1: T) -> T {
        (self.a * q1 + self.b) * q1 + self.c
    }

    pub fn acceptable_interference(&self) -> bool {
        self.ili_ok && self.isi_ok
    }

    /// Largest relative deviation between the interpolated and closed-form `a`, `c`.
    pub fn closed_form_mismatch(&self) -> T {
        let rel = |x: T, y: T| (x - y).abs() / y.abs().max(T::min_positive_value());
        rel(self.a, self.a_closed).max(rel(self.c, self.c_closed))
    }
}

/// `Q1²·(σ_ex0² − σ_in0²)` evaluated through the detector statistics.
pub fn h_value<T: Real>(probs: &SlotProbabilities<T>, q1: T, sigma_n: T, pi1: T) -> Result<T> {
    let ex = detector_stats_ex(probs, q1, pi1, sigma_n)?;
    let inn = detector_stats_in(probs, q1, pi1, sigma_n)?;
    Ok(q1 * q1 * (ex.var0 - inn.var0))
}

/// Roots of `a·x² + b·x + c`, numerically stable form.
fn real_roots<T: Real>(a: T, b: T, c: T) -> Vec<T> {
    if a == T::zero() {
        return if b == T::zero() { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - T::lit(4.0) * a * c;
    if disc < T::zero() {
        return vec![];
    }
    let q = -T::lit(0.5) * (b + b.signum() * disc.sqrt());
    let mut r = vec![q / a];
    if q != T::zero() {
        r.push(c / q);
    }
    r
}

pub fn h_of_q1<T: Real>(probs: &SlotProbabilities<T>, sigma_n: T, pi1: T) -> Result<QuadraticH<T>> {
    let (a0, b0) = (probs.a0(), probs.b0());
    let (a2, b2) = (a0 * a0, b0 * b0);
    let delta = a2 - b2;
    if delta <= T::zero() {
        return Err(Error::RankDeficient {
            a0_sq: a2.to_f64_lossy(),
            b0_sq: b2.to_f64_lossy(),
        });
    }
    let one = T::one();
    let pi0 = one - pi1;
    let s2 = probs.isi_square_sum();
    let s1: T = probs.pair[1..]
        .iter()
        .zip(&probs.cross[1..])
        .map(|(&a, &b)| a * (one - a) + b * (one - b))
        .sum();
    // 1/A0² − (A0²+B0²)/Δ², rewritten without cancellation.
    let g = b2 * (b2 - T::lit(3.0) * a2) / (a2 * delta * delta);
    let a_closed = pi0 * pi1 * (b2 / a2 + s2 * g);
    let c_closed = sigma_n * sigma_n * g;
    let b_closed = pi1 * b0 * (one - b0) / a2 + pi1 * s1 / a2
        - (pi1 * a2 * b0 * (one - b0) + pi1 * b2 * a0 * (one - a0) + (a2 + b2) * pi1 * s1) / (delta * delta);

    let nodes = H_NODES.map(T::lit);
    let mut rows = [[T::zero(); 3]; 3];
    let mut rhs = [T::zero(); 3];
    for (i, &q) in nodes.iter().enumerate() {
        rows[i] = [q * q, q, one];
        rhs[i] = h_value(probs, q, sigma_n, pi1)?;
    }
    let [a, b, c] = solve3(rows, rhs)?;

    // Roots from the closed-form a, c: their signs fix the root count even
    // when h is at rounding level and the interpolated a, c are noise.
    let positive: Vec<T> = real_roots(a_closed, b, c_closed)
        .into_iter()
        .filter(|&r| r > T::zero())
        .collect();
    let root = positive
        .iter()
        .copied()
        .fold(None, |m: Option<T>, r| Some(m.map_or(r, |m| m.max(r))));
    let ili = a2 - T::lit(2.0) * b2;
    Ok(QuadraticH {
        a,
        b,
        c,
        a_closed,
        b_closed,
        c_closed,
        root,
        positive_roots: positive.len(),
        ili_ok: ili > T::zero(),
        isi_ok: ili / T::lit(3.0) > s2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::slot_probs;

    fn params() -> (ChannelModelParams<f64>, ChannelModelParams<f64>) {
        (
            ChannelModelParams::reference_pair(),
            ChannelModelParams::reference_cross(),
        )
    }

    #[test]
    fn sir_limits_and_monotonicity() {
        let (p, c) = params();
        // F₁₁(∞) / F₁₂(∞).
        let long = sir(&p, &c, f64::INFINITY).unwrap();
        assert!((long - p.limit() / c.limit()).abs() < 1e-9);
        assert!((long - 5.969).abs() < 2e-3, "{long}");
        assert!(sir(&p, &c, 1e-6).unwrap() < 1e-12);
        let mut prev = 0.0;
        for i in 0..=95 {
            let s = sir(&p, &c, 0.05 + i as f64 * 0.01).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn throughput_formula() {
        assert!((throughput(1.0_f64, 2.0, 0.08, 0.0).unwrap() - 25.0).abs() < 1e-12);
        assert_eq!(throughput(1.0, 2.0, 0.08, 1.0).unwrap(), 0.0);
        assert!(throughput(1.0, 2.0, 0.08, 1.5).is_err());
    }

    #[test]
    fn h_vanishes_without_cross_links() {
        let (p, c) = params();
        let probs = slot_probs(&p, &c, 0.08, 3).unwrap().without_cross();
        for q in [10.0, 700.0, 1e5] {
            assert!(h_value(&probs, q, 10.0, 0.5).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn h_interpolation_matches_closed_forms() {
        let (p, c) = params();
        for memory in [1, 3, 4, 8] {
            let probs = slot_probs(&p, &c, 0.08, memory).unwrap();
            let h = h_of_q1(&probs, 10.0, 0.5).unwrap();
            assert!(h.closed_form_mismatch() < 1e-9, "{memory}: {h:?}");
            assert!((h.b / h.b_closed - 1.0).abs() < 1e-9);
            assert!(h.a > 0.0 && h.c < 0.0);
            assert_eq!(h.positive_roots, 1);
            for q in [50.0, 333.0, 2000.0] {
                let direct = h_value(&probs, q, 10.0, 0.5).unwrap();
                assert!((h.eval(q) - direct).abs() <= 1e-8 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn noise_only_moves_c() {
        let (p, c) = params();
        let probs = slot_probs(&p, &c, 0.08, 4).unwrap();
        let loud = h_of_q1(&probs, 10.0, 0.5).unwrap();
        let quiet = h_of_q1(&probs, 2.0, 0.5).unwrap();
        assert!((loud.a_closed - quiet.a_closed).abs() < 1e-18);
        assert!((loud.b_closed - quiet.b_closed).abs() < 1e-15);
        assert!(quiet.c > loud.c);
        assert!(quiet.root.unwrap() < loud.root.unwrap());
    }
}
