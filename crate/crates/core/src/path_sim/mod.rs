//! Brownian drivers and strong integration of the diffusion X, its Jacobian
//! flow J_{t<-0} and the inverse flow J_{0<-t} on a shared uniform grid over
//! [0, 1].

mod driver;
mod dump;
mod sde;

pub use driver::{make_driver, BrownianDriver};
pub use dump::{read_path_dump, write_path_dump};
pub use sde::{simulate_flow, simulate_x, FlowBundle, Scheme};

use crate::error::{Error, Result};

/// A sampled path on the uniform grid t_k = k * dt, dt = 1/n.
#[derive(Clone, Debug)]
pub struct SamplePath {
    pub d: usize,
    pub dt: f64,
    /// (n+1) * d values, row-major by time index.
    pub values: Vec<f64>,
}

impl SamplePath {
    pub fn new(d: usize, dt: f64, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() % d, 0);
        SamplePath { d, dt, values }
    }

    /// Number of steps (values has n_steps + 1 rows).
    pub fn n_steps(&self) -> usize {
        self.values.len() / self.d - 1
    }

    #[inline]
    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.d..(k + 1) * self.d]
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Restriction to every `stride`-th grid point.
    pub fn subsample(&self, stride: usize) -> Result<SamplePath> {
        let n = self.n_steps();
        if stride == 0 || n % stride != 0 {
            return Err(Error::validation(format!(
                "stride {stride} must divide the {n} steps"
            )));
        }
        let mut values = Vec::with_capacity((n / stride + 1) * self.d);
        for k in (0..=n).step_by(stride) {
            values.extend_from_slice(self.value(k));
        }
        Ok(SamplePath::new(self.d, self.dt * stride as f64, values))
    }
}
