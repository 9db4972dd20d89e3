use serde::{Deserialize, Serialize};

use crate::special::{gamma, ln_gamma, regularized_lower_gamma};
use crate::{Error, Real, Result};

/// Shape bracket for the kurtosis inversion.
pub const SHAPE_BRACKET: (f64, f64) = (0.5, 20.0);
pub const SHAPE_TOL: f64 = 1e-8;
pub const GGD_MIN_SAMPLES: usize = 10_000;

/// Generalized Gaussian law with density
/// `β/(2αΓ(1/β)) · exp(−(|q−μ|/α)^β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GgdParams<T> {
    pub mu: T,
    pub alpha: T,
    pub beta: T,
    pub kurtosis: T,
    pub variance: T,
}

/// `κ(β) = Γ(5/β)Γ(1/β)/Γ(3/β)²`; strictly decreasing, `κ(2) = 3`.
pub fn kurtosis_of_shape<T: Real>(beta: T) -> T {
    let inv = beta.recip();
    (ln_gamma(T::lit(5.0) * inv) + ln_gamma(inv) - T::lit(2.0) * ln_gamma(T::lit(3.0) * inv)).exp()
}

impl<T: Real> GgdParams<T> {
    /// Location, variance and shape; the scale follows from
    /// `σ² = α²Γ(3/β)/Γ(1/β)`.
    pub fn from_moments(mu: T, variance: T, beta: T) -> Result<Self> {
        if !(variance > T::zero()) || !variance.is_finite() {
            return Err(Error::DegenerateVariance);
        }
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(Error::param("beta", format!("must be finite and > 0, got {beta}")));
        }
        let inv = beta.recip();
        let ratio = (ln_gamma(inv) - ln_gamma(T::lit(3.0) * inv)).exp();
        Ok(Self {
            mu,
            alpha: (variance * ratio).sqrt(),
            beta,
            kurtosis: kurtosis_of_shape(beta),
            variance,
        })
    }

    pub fn gaussian(mu: T, variance: T) -> Result<Self> {
        Self::from_moments(mu, variance, T::lit(2.0))
    }

    pub fn pdf(&self, q: T) -> T {
        let z = (q - self.mu).abs() / self.alpha;
        self.beta / (T::lit(2.0) * self.alpha * gamma(self.beta.recip())) * (-z.powf(self.beta)).exp()
    }

    /// `P(X ≤ q) = ½ ± ½·P(1/β, (|q−μ|/α)^β)`.
    pub fn cdf(&self, q: T) -> T {
        let half = T::lit(0.5);
        let z = ((q - self.mu).abs() / self.alpha).powf(self.beta);
        let p = regularized_lower_gamma(self.beta.recip(), z);
        if q >= self.mu {
            half + half * p
        } else {
            half - half * p
        }
    }

    /// `½ − γ(1/β, (|η−μ|/α)^β)/(2Γ(1/β))`: the mass on the side of `η`
    /// away from `μ`.
    pub fn tail_beyond(&self, eta: T) -> T {
        let z = ((eta - self.mu).abs() / self.alpha).powf(self.beta);
        T::lit(0.5) - T::lit(0.5) * regularized_lower_gamma(self.beta.recip(), z)
    }

    /// `P(X ≥ η)`.
    pub fn upper_tail(&self, eta: T) -> T {
        T::one() - self.cdf(eta)
    }
}

/// Sample mean, population variance and `m₄/m₂²`.
pub fn sample_moments<T: Real>(samples: &[T]) -> (T, T, T) {
    let n = T::count(samples.len());
    let mean = samples.iter().copied().sum::<T>() / n;
    let (mut m2, mut m4) = (T::zero(), T::zero());
    for &s in samples {
        let d2 = (s - mean) * (s - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    let (m2, m4) = (m2 / n, m4 / n);
    (mean, m2, m4 / (m2 * m2))
}

/// Moment-matched GGD; the shape is found by bisection on `κ(β)` over
/// [`SHAPE_BRACKET`].
pub fn fit_ggd<T: Real>(samples: &[T]) -> Result<GgdParams<T>> {
    if samples.len() < GGD_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: GGD_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let (mean, var, kurt) = sample_moments(samples);
    if !(var > T::zero()) {
        return Err(Error::DegenerateVariance);
    }
    let (lo, hi) = (T::lit(SHAPE_BRACKET.0), T::lit(SHAPE_BRACKET.1));
    let (k_hi, k_lo) = (kurtosis_of_shape(lo), kurtosis_of_shape(hi));
    if !(kurt <= k_hi && kurt >= k_lo) {
        return Err(Error::KurtosisOutOfRange {
            kurtosis: kurt.to_f64_lossy(),
            low: k_lo.to_f64_lossy(),
            high: k_hi.to_f64_lossy(),
        });
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > T::lit(SHAPE_TOL) {
        let mid = (a + b) / T::lit(2.0);
        if kurtosis_of_shape(mid) > kurt {
            a = mid;
        } else {
            b = mid;
        }
    }
    GgdParams::from_moments(mean, var, (a + b) / T::lit(2.0))
}

/// `Pe = f_γ(μ0, α0, β0) + f_γ(μ1, α1, β1)` at the upper threshold.
///
/// Meant for `μ0 ≤ η⁺ ≤ μ1`, where each `f_γ` is that bit's error
/// probability; outside that range `f_γ` is the far tail on the wrong side.
pub fn error_probability<T: Real>(ggd0: &GgdParams<T>, ggd1: &GgdParams<T>, eta_plus: T) -> T {
    ggd0.tail_beyond(eta_plus) + ggd1.tail_beyond(eta_plus)
}

/// Per-bit error rate `π0·P(ŷ ≥ η | 0) + π1·P(ŷ < η | 1)` of a single
/// threshold, valid for any `η`.
pub fn average_error_probability<T: Real>(ggd0: &GgdParams<T>, ggd1: &GgdParams<T>, eta_plus: T, pi1: T) -> T {
    (T::one() - pi1) * ggd0.upper_tail(eta_plus) + pi1 * ggd1.cdf(eta_plus)
}

/// Kolmogorov–Smirnov distance `sup |F_n − F|`.
pub fn ks_distance<T: Real>(samples: &[T], cdf: impl Fn(T) -> T) -> T {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = T::count(s.len());
    s.iter().enumerate().fold(T::zero(), |worst, (i, &x)| {
        let f = cdf(x);
        let above = T::count(i + 1) / n - f;
        let below = f - T::count(i) / n;
        worst.max(above).max(below)
    })
}

/// KS distance of the moment-matched GGD and Gaussian fits to the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitComparison<T> {
    pub ggd: GgdParams<T>,
    pub ks_ggd: T,
    pub ks_gaussian: T,
}

pub fn compare_ggd_gaussian<T: Real>(samples: &[T]) -> Result<FitComparison<T>> {
    let ggd = fit_ggd(samples)?;
    let gauss = GgdParams::gaussian(ggd.mu, ggd.variance)?;
    Ok(FitComparison {
        ks_ggd: ks_distance(samples, |x| ggd.cdf(x)),
        ks_gaussian: ks_distance(samples, |x| gauss.cdf(x)),
        ggd,
    })
}
