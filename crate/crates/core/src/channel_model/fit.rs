use serde::{Deserialize, Serialize};

use super::{ChannelModelParams, LinkClass};
use crate::linalg::solve3;
use crate::particle_sim::{EmpiricalCdf, Topology};
use crate::special::erfc;
use crate::{Error, Real, Result};

pub const FIT_MAX_ITERATIONS: usize = 200;
pub const FIT_REL_TOL: f64 = 1e-8;
pub const FIT_MIN_POINTS: usize = 50;

const B_FLOOR: f64 = 1e-6;
const B_CAP: f64 = 1.5;
const LAMBDA_MAX: f64 = 1e16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<T> {
    pub params: ChannelModelParams<T>,
    /// `√Σ r_i²` over the fitted grid points.
    pub residual_norm: T,
    pub rms: T,
    pub iterations: usize,
    pub converged: bool,
}

struct Problem<'a, T> {
    t: &'a [T],
    y: &'a [T],
    amplitude: T,
    distance: T,
    ln4d: T,
    four_d: T,
}

impl<T: Real> Problem<'_, T> {
    fn cost(&self, b: [T; 3]) -> T {
        self.t
            .iter()
            .zip(self.y)
            .map(|(&t, &y)| {
                let r = self.value(b, t) - y;
                r * r
            })
            .sum()
    }

    fn value(&self, b: [T; 3], t: T) -> T {
        let u = self.distance / (self.four_d.powf(b[1]) * t.powf(b[2]));
        b[0] * self.amplitude * erfc(u)
    }

    /// Returns `(JᵀJ, Jᵀr)`.
    fn normal_equations(&self, b: [T; 3]) -> ([[T; 3]; 3], [T; 3]) {
        let mut jtj = [[T::zero(); 3]; 3];
        let mut jtr = [T::zero(); 3];
        let two_over_sqrt_pi = T::FRAC_2_SQRT_PI();
        for (&t, &y) in self.t.iter().zip(self.y) {
            let u = self.distance / (self.four_d.powf(b[1]) * t.powf(b[2]));
            let e = erfc(u);
            let r = b[0] * self.amplitude * e - y;
            let g = b[0] * self.amplitude * two_over_sqrt_pi * (-u * u).exp() * u;
            let j = [self.amplitude * e, g * self.ln4d, g * t.ln()];
            for p in 0..3 {
                jtr[p] += j[p] * r;
                for q in 0..3 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        (jtj, jtr)
    }
}

fn project<T: Real>(b: [T; 3]) -> [T; 3] {
    b.map(|v| v.max(T::lit(B_FLOOR)).min(T::lit(B_CAP)))
}

fn norm<T: Real>(v: [T; 3]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Levenberg–Marquardt least-squares fit of `(b1, b2, b3)` to an empirical CDF.
///
/// Starts at `(1, 1/2, 1/2)`; points with `t ≤ 0` are ignored. Stops once the
/// relative parameter step drops below [`FIT_REL_TOL`] or after
/// [`FIT_MAX_ITERATIONS`] Jacobian evaluations.
pub fn fit_model<T: Real>(
    cdf: &EmpiricalCdf<T>,
    topology: &Topology<T>,
    link_class: LinkClass,
) -> Result<FitReport<T>> {
    topology.validate()?;
    if topology.diffusion <= T::zero() {
        return Err(Error::param("D", "fit needs D > 0"));
    }
    let (t, y): (Vec<T>, Vec<T>) = cdf
        .time_grid
        .iter()
        .zip(&cdf.fraction)
        .filter(|(t, _)| **t > T::zero())
        .map(|(&t, &y)| (t, y))
        .unzip();
    if t.len() < FIT_MIN_POINTS {
        return Err(Error::TooFewSamples {
            needed: FIT_MIN_POINTS,
            got: t.len(),
        });
    }
    if y.iter().all(|&v| v == T::zero()) {
        return Err(Error::DegenerateCdf);
    }

    let distance = link_class.distance(topology);
    let r = topology.receiver_radius;
    let four_d = T::lit(4.0) * topology.diffusion;
    let problem = Problem {
        t: &t,
        y: &y,
        amplitude: r / (distance + r),
        distance,
        ln4d: four_d.ln(),
        four_d,
    };

    let mut b = [T::one(), T::lit(0.5), T::lit(0.5)];
    let mut cost = problem.cost(b);
    let mut lambda = T::lit(1e-3);
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = problem.normal_equations(b);
        loop {
            let mut a = jtj;
            for (p, row) in a.iter_mut().enumerate() {
                row[p] += lambda * jtj[p][p].max(T::lit(1e-30));
            }
            let delta = match solve3(a, jtr.map(|v| -v)) {
                Ok(d) => d,
                Err(_) => {
                    lambda *= T::lit(10.0);
                    if lambda > T::lit(LAMBDA_MAX) {
                        break 'outer;
                    }
                    continue;
                }
            };
            let candidate = project([b[0] + delta[0], b[1] + delta[1], b[2] + delta[2]]);
            let step = [candidate[0] - b[0], candidate[1] - b[1], candidate[2] - b[2]];
            let small = norm(step) <= T::lit(FIT_REL_TOL) * norm(b);
            let new_cost = problem.cost(candidate);
            if new_cost < cost {
                b = candidate;
                cost = new_cost;
                lambda = (lambda * T::lit(0.1)).max(T::lit(1e-12));
                if small {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            if small {
                converged = true;
                break 'outer;
            }
            lambda *= T::lit(10.0);
            if lambda > T::lit(LAMBDA_MAX) {
                break 'outer;
            }
        }
    }

    let params = ChannelModelParams {
        link_class,
        b1: b[0],
        b2: b[1],
        b3: b[2],
        topology: *topology,
    };
    let residual_norm = cost.sqrt();
    Ok(FitReport {
        params,
        residual_norm,
        rms: (cost / T::count(t.len())).sqrt(),
        iterations,
        converged,
    })
}
