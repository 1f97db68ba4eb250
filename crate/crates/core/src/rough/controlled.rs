//! Controlled paths and the compensated-sum rough integral.

use crate::error::{Error, Result};
use crate::rough::RoughPath;

/// A path controlled by the driver of a `RoughPath`.
///
/// `values` holds (nc+1) rows of m components. `gubinelli` holds, per node,
/// the m x driver_dim derivative: row p, column u is the sensitivity of
/// component p to driver component u.
#[derive(Clone, Debug)]
pub struct ControlledPath {
    pub m: usize,
    pub driver_dim: usize,
    pub dt: f64,
    pub values: Vec<f64>,
    pub gubinelli: Vec<f64>,
    /// Discrete 2-alpha Holder constant of the remainder Y_{s,t} - Y'_s X_{s,t}.
    pub remainder_norm_2a: f64,
}

impl ControlledPath {
    pub fn n_steps(&self) -> usize {
        self.values.len() / self.m - 1
    }

    #[inline]
    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.m..(k + 1) * self.m]
    }

    #[inline]
    pub fn deriv(&self, k: usize) -> &[f64] {
        let md = self.m * self.driver_dim;
        &self.gubinelli[k * md..(k + 1) * md]
    }

    /// Recompute the remainder norm against a driver over dyadic lags.
    pub fn measure_remainder(&mut self, rp: &RoughPath, alpha: f64) {
        let n = self.n_steps();
        let d = self.driver_dim;
        let mut inc = vec![0.0; d];
        let mut worst = 0.0f64;
        let mut lag = 1usize;
        while lag <= n {
            for s in 0..=(n - lag) {
                let t = s + lag;
                rp.increment_into(s, t, &mut inc);
                let ys = self.value(s);
                let yt = self.value(t);
                let dy = self.deriv(s);
                let mut r2 = 0.0;
                for p in 0..self.m {
                    let mut r = yt[p] - ys[p];
                    for u in 0..d {
                        r -= dy[p * d + u] * inc[u];
                    }
                    r2 += r * r;
                }
                let h = (lag as f64 * self.dt).powf(2.0 * alpha);
                worst = worst.max(r2.sqrt() / h);
            }
            lag *= 2;
        }
        self.remainder_norm_2a = worst;
    }
}

/// Rough integral of a linear-map-valued controlled integrand against the
/// lift: compensated sums
///
///   sum_k Y_k . X_{k,k+1} + Y'_k . XX_{k,k+1}.
///
/// `y.values` rows are m x d maps (row-major), `y.gubinelli` rows are
/// m x d x d tensors Y'[p][w][u] = sensitivity of Y[p][w] to driver u. The
/// output is m-valued with Gubinelli derivative Y itself.
pub fn rough_integral(y: &ControlledPath, rp: &RoughPath) -> Result<ControlledPath> {
    let d = rp.dim;
    if y.n_steps() != rp.n_steps() {
        return Err(Error::validation("grid mismatch in rough_integral"));
    }
    if y.driver_dim != d || y.m % d != 0 {
        return Err(Error::validation(
            "integrand must be (m x d)-map valued with an m x d x d derivative",
        ));
    }
    let m = y.m / d;
    let n = rp.n_steps();
    let mut values = vec![0.0; (n + 1) * m];
    let mut gub = vec![0.0; (n + 1) * m * d];
    let mut inc = vec![0.0; d];
    let mut xx = vec![0.0; d * d];
    for k in 0..=n {
        // output derivative is the integrand
        gub[k * m * d..(k + 1) * m * d].copy_from_slice(y.value(k));
    }
    for k in 0..n {
        rp.increment_into(k, k + 1, &mut inc);
        rp.second_level_into(k, k + 1, &mut xx);
        let yk = y.value(k);
        let dyk = y.deriv(k);
        for p in 0..m {
            let mut acc = 0.0;
            for w in 0..d {
                acc += yk[p * d + w] * inc[w];
            }
            for w in 0..d {
                for u in 0..d {
                    acc += dyk[(p * d + w) * d + u] * xx[u * d + w];
                }
            }
            values[(k + 1) * m + p] = values[k * m + p] + acc;
        }
    }
    let mut out = ControlledPath {
        m,
        driver_dim: d,
        dt: rp.dt,
        values,
        gubinelli: gub,
        remainder_norm_2a: 0.0,
    };
    out.measure_remainder(rp, rp.alpha);
    Ok(out)
}

/// The continuity-estimate bound on the controlled norm of (integral, Y):
/// ||Y||_a + |Y'|_inf ||XX|| + C (||X|| ||R^Y|| + ||Y'||_a ||XX||) with the
/// sewing constant C = (1 - 2^(1-3a))^{-1}. Diagnostic only.
pub fn remainder_bound(
    norm_y_alpha: f64,
    sup_dy: f64,
    norm_dy_alpha: f64,
    norm_ry: f64,
    norm_x_alpha: f64,
    norm_xx_2alpha: f64,
    alpha: f64,
) -> f64 {
    let c = 1.0 / (1.0 - 2f64.powf(1.0 - 3.0 * alpha));
    norm_y_alpha
        + sup_dy * norm_xx_2alpha
        + c * (norm_x_alpha * norm_ry + norm_dy_alpha * norm_xx_2alpha)
}
