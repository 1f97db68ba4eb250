//! Vector fields with Jacobian (and optional Hessian) oracles, and Lie
//! brackets that stay composable: a bracket is itself a `VectorField`, so
//! nested brackets and bracket Jacobians come for free.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::fd_step;

type ValFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type JacFn = Arc<dyn Fn(&[f64], &mut Mat) + Send + Sync>;
/// Directional Hessian: (x, u) -> matrix with entries sum_r d_q d_r W_p u_r.
type HessFn = Arc<dyn Fn(&[f64], &[f64], &mut Mat) + Send + Sync>;

#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    val: ValFn,
    jac: Option<JacFn>,
    hess: Option<HessFn>,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "VectorField(dim={})", self.dim)
    }
}

impl VectorField {
    pub fn from_fn(dim: usize, val: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        VectorField { dim, val: Arc::new(val), jac: None, hess: None }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64], &mut Mat) + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_hessian(
        mut self,
        hess: impl Fn(&[f64], &[f64], &mut Mat) + Send + Sync + 'static,
    ) -> Self {
        self.hess = Some(Arc::new(hess));
        self
    }

    pub fn constant(v: Vec<f64>) -> Self {
        let dim = v.len();
        let zero_jac = move |_: &[f64], out: &mut Mat| out.data.fill(0.0);
        let zero_hess = move |_: &[f64], _: &[f64], out: &mut Mat| out.data.fill(0.0);
        VectorField::from_fn(dim, move |_, out| out.copy_from_slice(&v))
            .with_jacobian(zero_jac)
            .with_hessian(zero_hess)
    }

    pub fn zero(dim: usize) -> Self {
        VectorField::constant(vec![0.0; dim])
    }

    /// V(y) = M y.
    pub fn linear(m: Mat) -> Self {
        let dim = m.d;
        let m_val = m.clone();
        VectorField::from_fn(dim, move |y, out| crate::linalg::mv(dim, &m_val.data, y, out))
            .with_jacobian(move |_, out| out.data.copy_from_slice(&m.data))
            .with_hessian(|_, _, out| out.data.fill(0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    #[inline]
    pub fn value_into(&self, x: &[f64], out: &mut [f64]) {
        (self.val)(x, out);
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.value_into(x, &mut out);
        out
    }

    pub fn jacobian_into(&self, x: &[f64], out: &mut Mat) {
        if let Some(j) = &self.jac {
            j(x, out);
            return;
        }
        let d = self.dim;
        let h = fd_step(x);
        let mut xp = x.to_vec();
        let mut vp = vec![0.0; d];
        let mut vm = vec![0.0; d];
        for q in 0..d {
            xp[q] = x[q] + h;
            self.value_into(&xp, &mut vp);
            xp[q] = x[q] - h;
            self.value_into(&xp, &mut vm);
            xp[q] = x[q];
            for p in 0..d {
                out.set(p, q, (vp[p] - vm[p]) / (2.0 * h));
            }
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> Mat {
        let mut m = Mat::zeros(self.dim);
        self.jacobian_into(x, &mut m);
        m
    }

    /// Directional Hessian sum_r d_q d_r W_p u_r; finite differences of the
    /// Jacobian when no closed form is attached.
    pub fn hess_dir_into(&self, x: &[f64], u: &[f64], out: &mut Mat) {
        if let Some(hs) = &self.hess {
            hs(x, u, out);
            return;
        }
        let d = self.dim;
        let h = fd_step(x);
        let scale = crate::linalg::norm2(u).max(1e-300);
        let step: Vec<f64> = u.iter().map(|c| c * h / scale).collect();
        let xp: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        let xm: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a - b).collect();
        let jp = self.jacobian(&xp);
        let jm = self.jacobian(&xm);
        for idx in 0..d * d {
            out.data[idx] = (jp.data[idx] - jm.data[idx]) / (2.0 * h) * scale;
        }
    }
}

/// [V, W] = DW . V - DV . W, returned as a field so brackets nest.
pub fn lie_bracket(v: &VectorField, w: &VectorField) -> VectorField {
    assert_eq!(v.dim, w.dim);
    let d = v.dim;
    let (v1, w1) = (v.clone(), w.clone());
    let val = move |x: &[f64], out: &mut [f64]| {
        let vx = v1.value(x);
        let wx = w1.value(x);
        let dv = v1.jacobian(x);
        let dw = w1.jacobian(x);
        let mut t = vec![0.0; d];
        crate::linalg::mv(d, &dw.data, &vx, out);
        crate::linalg::mv(d, &dv.data, &wx, &mut t);
        for i in 0..d {
            out[i] -= t[i];
        }
    };
    let base = VectorField::from_fn(d, val);
    if v.hess.is_some() && w.hess.is_some() && v.jac.is_some() && w.jac.is_some() {
        let (v2, w2) = (v.clone(), w.clone());
        // D[V,W] = HW[V] + DW DV - HV[W] - DV DW
        base.with_jacobian(move |x: &[f64], out: &mut Mat| {
            let vx = v2.value(x);
            let wx = w2.value(x);
            let dv = v2.jacobian(x);
            let dw = w2.jacobian(x);
            let mut hw = Mat::zeros(d);
            let mut hv = Mat::zeros(d);
            w2.hess_dir_into(x, &vx, &mut hw);
            v2.hess_dir_into(x, &wx, &mut hv);
            let dwdv = dw.matmul(&dv);
            let dvdw = dv.matmul(&dw);
            for idx in 0..d * d {
                out.data[idx] = hw.data[idx] + dwdv.data[idx] - hv.data[idx] - dvdw.data[idx];
            }
        })
    } else {
        base
    }
}

/// Bracket value at a point.
pub fn lie_bracket_at(v: &VectorField, w: &VectorField, x: &[f64]) -> Vec<f64> {
    lie_bracket(v, w).value(x)
}

/// The driving fields of an RDE: V_0 is the drift, V_1..V_d multiply the
/// rough-path components.
#[derive(Clone, Debug)]
pub struct VectorFieldSet {
    pub dim: usize,
    pub catalog_id: String,
    fields: Vec<VectorField>,
    /// sup-norm scales used by diagnostics; one entry per field.
    pub sup_bounds: Vec<f64>,
}

impl VectorFieldSet {
    /// `fields` holds V_0, V_1, ..., V_d in order.
    pub fn new(dim: usize, catalog_id: impl Into<String>, fields: Vec<VectorField>) -> Result<Self> {
        if fields.len() != dim + 1 {
            return Err(Error::validation(format!(
                "need {} fields (drift + {dim} noise), got {}",
                dim + 1,
                fields.len()
            )));
        }
        for f in &fields {
            if f.dim() != dim {
                return Err(Error::validation("field dimension mismatch"));
            }
        }
        let sup: Vec<f64> = vec![1.0; fields.len()];
        Ok(VectorFieldSet { dim, catalog_id: catalog_id.into(), fields, sup_bounds: sup })
    }

    pub fn drift(&self) -> &VectorField {
        &self.fields[0]
    }

    /// i in 1..=dim.
    pub fn noise(&self, i: usize) -> &VectorField {
        &self.fields[i]
    }

    pub fn noise_fields(&self) -> &[VectorField] {
        &self.fields[1..]
    }
}

/// Largest gap between supplied Jacobians and central differences of the
/// values over the probe points. The tolerance for a pass is
/// max(1e-6, 10 h^2 * scale) with the shared fd step h.
pub fn check_jacobian_consistency(set: &VectorFieldSet, probes: &[Vec<f64>]) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::validation("jacobian consistency needs probes"));
    }
    let d = set.dim;
    let mut worst = 0.0f64;
    for x in probes {
        let h = fd_step(x);
        for f in std::iter::once(set.drift()).chain(set.noise_fields()) {
            if !f.has_analytic_jacobian() {
                continue;
            }
            let supplied = f.jacobian(x);
            let mut fd = Mat::zeros(d);
            let mut xp = x.clone();
            let mut vp = vec![0.0; d];
            let mut vm = vec![0.0; d];
            for q in 0..d {
                xp[q] = x[q] + h;
                f.value_into(&xp, &mut vp);
                xp[q] = x[q] - h;
                f.value_into(&xp, &mut vm);
                xp[q] = x[q];
                for p in 0..d {
                    fd.set(p, q, (vp[p] - vm[p]) / (2.0 * h));
                }
            }
            for idx in 0..d * d {
                worst = worst.max((supplied.data[idx] - fd.data[idx]).abs());
            }
        }
    }
    Ok(worst)
}
