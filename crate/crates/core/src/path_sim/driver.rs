//! Counter-generated Brownian increments: each increment is a pure function
//! of (seed, path_index, step, component), so regeneration is bitwise stable
//! under any worker assignment.

use crate::error::{Error, Result};
use crate::rng::{CounterRng, CHANNEL_INCREMENTS};

#[derive(Clone, Debug)]
pub struct BrownianDriver {
    pub d: usize,
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    pub path_index: u64,
    /// n * d increments, each column N(0, dt).
    pub increments: Vec<f64>,
}

pub fn make_driver(seed: u64, path_index: u64, n: usize, d: usize) -> Result<BrownianDriver> {
    if n == 0 {
        return Err(Error::validation("driver needs at least one step"));
    }
    if d == 0 {
        return Err(Error::validation("driver dimension must be positive"));
    }
    let dt = 1.0 / n as f64;
    let sigma = dt.sqrt();
    let rng = CounterRng::new(seed, path_index, CHANNEL_INCREMENTS);
    let mut increments = vec![0.0; n * d];
    for k in 0..n {
        for c in 0..d {
            increments[k * d + c] = sigma * rng.standard_normal((k * d + c) as u64);
        }
    }
    Ok(BrownianDriver { d, n, dt, seed, path_index, increments })
}

impl BrownianDriver {
    #[inline]
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[k * self.d..(k + 1) * self.d]
    }

    /// Sum groups of `stride` increments: the same Brownian path on a grid
    /// `stride` times coarser. Used by refinement studies.
    pub fn coarsen(&self, stride: usize) -> Result<BrownianDriver> {
        if stride == 0 || self.n % stride != 0 {
            return Err(Error::validation(format!(
                "stride {stride} must divide {} steps",
                self.n
            )));
        }
        let n = self.n / stride;
        let mut increments = vec![0.0; n * self.d];
        for k in 0..self.n {
            let row = k / stride;
            for c in 0..self.d {
                increments[row * self.d + c] += self.increments[k * self.d + c];
            }
        }
        Ok(BrownianDriver {
            d: self.d,
            n,
            dt: self.dt * stride as f64,
            seed: self.seed,
            path_index: self.path_index,
            increments,
        })
    }

    /// Shift by eps times the Cameron-Martin path h(t) = min(t, u) e_j, i.e.
    /// add eps * (min(t_{k+1}, u) - min(t_k, u)) to component j of step k.
    pub fn perturbed(&self, component: usize, u: f64, eps: f64) -> BrownianDriver {
        let mut out = self.clone();
        for k in 0..self.n {
            let t0 = k as f64 * self.dt;
            let t1 = (k + 1) as f64 * self.dt;
            let dh = t1.min(u) - t0.min(u);
            if dh > 0.0 {
                out.increments[k * self.d + component] += eps * dh;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_reproduces_bitwise() {
        let a = make_driver(99, 7, 256, 3).unwrap();
        let b = make_driver(99, 7, 256, 3).unwrap();
        assert_eq!(a.increments, b.increments);
        let c = make_driver(99, 8, 256, 3).unwrap();
        assert_ne!(a.increments, c.increments);
    }

    #[test]
    fn rejects_empty_grid() {
        assert!(matches!(make_driver(1, 0, 0, 1), Err(Error::Validation(_))));
        assert!(matches!(make_driver(1, 0, 8, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn increment_law() {
        // mean within 4 sigma of 0, variance within 2% of dt
        let n = 1024;
        let paths = 100;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for p in 0..paths {
            let drv = make_driver(2024, p, n, 1).unwrap();
            for v in &drv.increments {
                sum += v;
                sumsq += v * v;
            }
        }
        let count = (n * paths as usize) as f64;
        let dt = 1.0 / n as f64;
        let mean = sum / count;
        let var = sumsq / count - mean * mean;
        assert!(mean.abs() < 4.0 * (dt / count).sqrt(), "mean {mean}");
        assert!((var / dt - 1.0).abs() < 0.02, "var ratio {}", var / dt);
    }

    #[test]
    fn distinct_paths_uncorrelated() {
        let n = 1024;
        let mut num = 0.0;
        let mut den_a = 0.0;
        let mut den_b = 0.0;
        for p in 0..100u64 {
            let a = make_driver(55, 2 * p, n, 1).unwrap();
            let b = make_driver(55, 2 * p + 1, n, 1).unwrap();
            for k in 0..n {
                num += a.increments[k] * b.increments[k];
                den_a += a.increments[k] * a.increments[k];
                den_b += b.increments[k] * b.increments[k];
            }
        }
        let rho = num / (den_a * den_b).sqrt();
        assert!(rho.abs() < 0.02, "rho {rho}");
    }

    #[test]
    fn coarsen_sums_groups() {
        let drv = make_driver(3, 1, 16, 2).unwrap();
        let c = drv.coarsen(4).unwrap();
        assert_eq!(c.n, 4);
        let manual: f64 = (0..4).map(|k| drv.increments[k * 2]).sum();
        assert!((c.increments[0] - manual).abs() < 1e-15);
    }

    #[test]
    fn perturbation_is_cameron_martin() {
        let drv = make_driver(3, 1, 8, 2).unwrap();
        let u = 0.5;
        let eps = 1e-3;
        let p = drv.perturbed(1, u, eps);
        let mut h = 0.0;
        for k in 0..8 {
            h += p.increments[k * 2 + 1] - drv.increments[k * 2 + 1];
            let t1 = (k + 1) as f64 / 8.0;
            assert!((h - eps * t1.min(u)).abs() < 1e-15);
            // component 0 untouched
            assert_eq!(p.increments[k * 2], drv.increments[k * 2]);
        }
    }
}
