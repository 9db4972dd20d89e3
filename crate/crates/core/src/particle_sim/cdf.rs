use serde::{Deserialize, Serialize};

use super::{HittingRecord, Rx, Tx};
use crate::{Error, Real, Result};

/// Fraction of emitted molecules absorbed by each grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf<T> {
    pub time_grid: Vec<T>,
    pub fraction: Vec<T>,
    pub n_emitted: usize,
}

impl<T: Real> EmpiricalCdf<T> {
    pub fn new(time_grid: Vec<T>, fraction: Vec<T>, n_emitted: usize) -> Result<Self> {
        if time_grid.len() != fraction.len() {
            return Err(Error::GridMismatch {
                left: time_grid.len(),
                right: fraction.len(),
            });
        }
        check_grid(&time_grid)?;
        Ok(Self {
            time_grid,
            fraction,
            n_emitted,
        })
    }

    pub fn len(&self) -> usize {
        self.time_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_grid.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.fraction.windows(2).all(|w| w[1] >= w[0])
    }

    /// Sup-norm distance to `f` over the grid points with `t ≥ from`.
    pub fn sup_distance(&self, from: T, f: impl Fn(T) -> T) -> T {
        self.time_grid
            .iter()
            .zip(&self.fraction)
            .filter(|(t, _)| **t >= from)
            .map(|(&t, &y)| (y - f(t)).abs())
            .fold(T::zero(), T::max)
    }

    /// Every other grid point, starting with the second.
    pub fn subsample2(&self) -> Self {
        let pick = |v: &[T]| v.iter().skip(1).step_by(2).copied().collect::<Vec<_>>();
        Self {
            time_grid: pick(&self.time_grid),
            fraction: pick(&self.fraction),
            n_emitted: self.n_emitted,
        }
    }
}

fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("time_grid", "must not be empty"));
    }
    if !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::param("time_grid", "must be strictly ascending"));
    }
    Ok(())
}

/// `dt, 2dt, …, t_max`: one point per simulation step.
pub fn time_grid<T: Real>(dt: T, t_max: T) -> Vec<T> {
    let n = (t_max / dt + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    (1..=n).map(|k| T::count(k) * dt).collect()
}

/// The four link CDFs; `f_ij` counts molecules from Tx_j absorbed at Rx_i.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCdfs<T> {
    pub f11: EmpiricalCdf<T>,
    pub f12: EmpiricalCdf<T>,
    pub f21: EmpiricalCdf<T>,
    pub f22: EmpiricalCdf<T>,
}

/// One output line `(t_s, f11, f12, f21, f22)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfRow<T> {
    pub t_s: T,
    pub f11: T,
    pub f12: T,
    pub f21: T,
    pub f22: T,
}

impl<T: Real> LinkCdfs<T> {
    pub fn get(&self, sink: Rx, source: Tx) -> &EmpiricalCdf<T> {
        match (sink, source) {
            (Rx::Rx1, Tx::Tx1) => &self.f11,
            (Rx::Rx1, Tx::Tx2) => &self.f12,
            (Rx::Rx2, Tx::Tx1) => &self.f21,
            (Rx::Rx2, Tx::Tx2) => &self.f22,
        }
    }

    /// F₁₁ pooled with F₂₂.
    pub fn pooled_pair(&self) -> Result<EmpiricalCdf<T>> {
        pool_symmetric(&self.f11, &self.f22)
    }

    /// F₁₂ pooled with F₂₁.
    pub fn pooled_cross(&self) -> Result<EmpiricalCdf<T>> {
        pool_symmetric(&self.f12, &self.f21)
    }

    pub fn rows(&self) -> Vec<CdfRow<T>> {
        (0..self.f11.len())
            .map(|i| CdfRow {
                t_s: self.f11.time_grid[i],
                f11: self.f11.fraction[i],
                f12: self.f12.fraction[i],
                f21: self.f21.fraction[i],
                f22: self.f22.fraction[i],
            })
            .collect()
    }

    /// Rebuilds the four CDFs from rows; every CDF gets `n_emitted`.
    pub fn from_rows(rows: &[CdfRow<T>], n_emitted: usize) -> Result<Self> {
        let grid: Vec<T> = rows.iter().map(|r| r.t_s).collect();
        let col = |f: fn(&CdfRow<T>) -> T| -> Result<EmpiricalCdf<T>> {
            EmpiricalCdf::new(grid.clone(), rows.iter().map(f).collect(), n_emitted)
        };
        Ok(Self {
            f11: col(|r| r.f11)?,
            f12: col(|r| r.f12)?,
            f21: col(|r| r.f21)?,
            f22: col(|r| r.f22)?,
        })
    }
}

/// `fraction(t) = #{records of (source, sink) with hit_time ≤ t} / n_emitted_per_source`.
pub fn estimate_cdfs<T: Real>(
    records: &[HittingRecord<T>],
    n_emitted_per_source: usize,
    grid: &[T],
) -> Result<LinkCdfs<T>> {
    check_grid(grid)?;
    if n_emitted_per_source == 0 {
        return Err(Error::param("n_emitted_per_source", "must be >= 1"));
    }
    let n = T::count(n_emitted_per_source);
    let one = |sink: Rx, source: Tx| {
        let mut times: Vec<T> = records
            .iter()
            .filter(|r| r.sink == sink && r.source == source)
            .map(|r| r.hit_time)
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let fraction = grid
            .iter()
            .map(|&t| T::count(times.partition_point(|&h| h <= t)) / n)
            .collect();
        EmpiricalCdf {
            time_grid: grid.to_vec(),
            fraction,
            n_emitted: n_emitted_per_source,
        }
    };
    Ok(LinkCdfs {
        f11: one(Rx::Rx1, Tx::Tx1),
        f12: one(Rx::Rx1, Tx::Tx2),
        f21: one(Rx::Rx2, Tx::Tx1),
        f22: one(Rx::Rx2, Tx::Tx2),
    })
}

/// Emission-count weighted average of two CDFs on the same grid.
pub fn pool_symmetric<T: Real>(a: &EmpiricalCdf<T>, b: &EmpiricalCdf<T>) -> Result<EmpiricalCdf<T>> {
    if a.time_grid != b.time_grid {
        return Err(Error::GridMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let total = a.n_emitted + b.n_emitted;
    if total == 0 {
        return Err(Error::param("n_emitted", "both CDFs have zero emissions"));
    }
    let wa = T::count(a.n_emitted) / T::count(total);
    let wb = T::count(b.n_emitted) / T::count(total);
    let fraction = a
        .fraction
        .iter()
        .zip(&b.fraction)
        .map(|(&x, &y)| wa * x + wb * y)
        .collect();
    Ok(EmpiricalCdf {
        time_grid: a.time_grid.clone(),
        fraction,
        n_emitted: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(source: Tx, sink: Rx, t: f64) -> HittingRecord<f64> {
        HittingRecord {
            source,
            sink,
            hit_time: t,
        }
    }

    #[test]
    fn grid_has_one_point_per_step() {
        let g = time_grid(0.001_f64, 1.5);
        assert_eq!(g.len(), 1500);
        assert!((g[0] - 0.001).abs() < 1e-15);
        assert!((g[1499] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn no_records_give_zero_cdfs() {
        let g = time_grid(0.01, 1.0);
        let c = estimate_cdfs::<f64>(&[], 100, &g).unwrap();
        for cdf in [&c.f11, &c.f12, &c.f21, &c.f22] {
            assert!(cdf.fraction.iter().all(|&f| f == 0.0));
        }
    }

    #[test]
    fn single_pair_steps_at_hit_time() {
        let g = time_grid(0.01, 0.3);
        let recs: Vec<_> = (0..10).map(|_| rec(Tx::Tx2, Rx::Rx1, 0.1)).collect();
        let c = estimate_cdfs(&recs, 10, &g).unwrap();
        for (t, f) in c.f12.time_grid.iter().zip(&c.f12.fraction) {
            let want = if *t >= 0.1 - 1e-12 { 1.0 } else { 0.0 };
            assert_eq!(*f, want, "t={t}");
        }
        assert!(c
            .f11
            .fraction
            .iter()
            .chain(&c.f21.fraction)
            .chain(&c.f22.fraction)
            .all(|&f| f == 0.0));
    }

    #[test]
    fn pooled_average_equals_union_recount() {
        let g = time_grid(0.05, 1.0);
        let recs = vec![
            rec(Tx::Tx1, Rx::Rx1, 0.12),
            rec(Tx::Tx1, Rx::Rx1, 0.4),
            rec(Tx::Tx1, Rx::Rx2, 0.4),
            rec(Tx::Tx2, Rx::Rx2, 0.07),
            rec(Tx::Tx2, Rx::Rx2, 0.93),
            rec(Tx::Tx2, Rx::Rx2, 0.5),
        ];
        let c = estimate_cdfs(&recs, 5, &g).unwrap();
        let pooled = c.pooled_pair().unwrap();
        // Direct recount: treat Rx_i-from-Tx_i as one link with 10 emissions.
        let union: Vec<f64> = recs
            .iter()
            .filter(|r| r.sink.index() == r.source.index())
            .map(|r| r.hit_time)
            .collect();
        for (t, f) in pooled.time_grid.iter().zip(&pooled.fraction) {
            let count = union.iter().filter(|&&h| h <= *t).count();
            assert!((f - count as f64 / 10.0).abs() < 1e-15);
        }
        assert_eq!(pooled.n_emitted, 10);
    }

    #[test]
    fn pooling_identical_and_equal_weights() {
        let a = EmpiricalCdf::new(vec![0.1_f64, 0.2], vec![0.3, 0.5], 5000).unwrap();
        assert_eq!(pool_symmetric(&a, &a).unwrap().fraction, a.fraction);
        let b = EmpiricalCdf::new(vec![0.1, 0.2], vec![0.1, 0.7], 5000).unwrap();
        let p = pool_symmetric(&a, &b).unwrap();
        assert!((p.fraction[0] - 0.2).abs() < 1e-15 && (p.fraction[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = EmpiricalCdf::new(vec![0.1, 0.2], vec![0.3, 0.5], 1).unwrap();
        let b = EmpiricalCdf::new(vec![0.1, 0.3], vec![0.3, 0.5], 1).unwrap();
        assert!(matches!(pool_symmetric(&a, &b), Err(Error::GridMismatch { .. })));
        assert!(EmpiricalCdf::new(vec![0.2, 0.1], vec![0.0, 0.0], 1).is_err());
    }
}
