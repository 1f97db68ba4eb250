//! Built-in coefficient families and driving-field sets.
//!
//! Every entry ships closed-form derivatives (and square roots where the
//! matrix structure is scalar), so smoothness never rests on black-box
//! differentiation. User-supplied coefficients only enter through finite
//! differences and are treated as unverified.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::field::{VectorField, VectorFieldSet};
use crate::model::DiffusionSpec;

pub const COEFF_IDS: &[&str] = &["constant", "iso_sin", "perturbed_identity", "sin_1d", "tanh_1d"];

pub const FIELD_IDS: &[&str] = &[
    "euclidean",
    "hormander_pair",
    "hormander_sin",
    "linear_commuting",
    "scalar_linear",
    "degenerate_pair",
    "const_drift",
];

fn param(params: &[f64], idx: usize, default: f64) -> f64 {
    params.get(idx).copied().unwrap_or(default)
}

/// Coupling pattern for `perturbed_identity`: (I + 11^T/d)/2, eigenvalues
/// {1, 1/2}, spectral norm exactly 1.
fn coupling_pattern(d: usize) -> Mat {
    Mat::from_fn(d, |i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        0.5 * (base + 1.0 / d as f64)
    })
}

pub fn coeff_catalog(id: &str, params: &[f64], dim: usize) -> Result<DiffusionSpec> {
    if dim == 0 {
        return Err(Error::validation("dimension must be positive"));
    }
    let d = dim;
    match id {
        "constant" => {
            let c0 = param(params, 0, 1.0);
            if c0 <= 0.0 {
                return Err(Error::validation("constant coefficient needs c0 > 0"));
            }
            Ok(DiffusionSpec {
                dim: d,
                lambda_min: c0,
                lambda_max: c0,
                catalog_id: id.into(),
                params: vec![c0],
                a_fn: Arc::new(move |_, out| {
                    out.data.fill(0.0);
                    for i in 0..d {
                        out.data[i * d + i] = c0;
                    }
                }),
                da_fn: Some(Arc::new(move |_, out| {
                    for m in out.iter_mut() {
                        m.data.fill(0.0);
                    }
                })),
                sqrt_fn: Some(Arc::new(move |_, out| {
                    out.data.fill(0.0);
                    for i in 0..d {
                        out.data[i * d + i] = c0.sqrt();
                    }
                })),
                dsqrt_fn: Some(Arc::new(move |_, out| {
                    for m in out.iter_mut() {
                        m.data.fill(0.0);
                    }
                })),
                db_fn: Some(Arc::new(move |_, out| out.data.fill(0.0))),
            })
        }
        "iso_sin" => {
            // a(x) = (c0 + c1 sin x_1) I
            let c0 = param(params, 0, 1.0);
            let c1 = param(params, 1, 0.2);
            if c0 - c1.abs() <= 0.0 {
                return Err(Error::validation("iso_sin needs c0 > |c1|"));
            }
            Ok(DiffusionSpec {
                dim: d,
                lambda_min: c0 - c1.abs(),
                lambda_max: c0 + c1.abs(),
                catalog_id: id.into(),
                params: vec![c0, c1],
                a_fn: Arc::new(move |x, out| {
                    let s = c0 + c1 * x[0].sin();
                    out.data.fill(0.0);
                    for i in 0..d {
                        out.data[i * d + i] = s;
                    }
                }),
                da_fn: Some(Arc::new(move |x, out| {
                    let g = c1 * x[0].cos();
                    for (k, m) in out.iter_mut().enumerate() {
                        m.data.fill(0.0);
                        if k == 0 {
                            for i in 0..d {
                                m.data[i * d + i] = g;
                            }
                        }
                    }
                })),
                sqrt_fn: Some(Arc::new(move |x, out| {
                    let s = (c0 + c1 * x[0].sin()).sqrt();
                    out.data.fill(0.0);
                    for i in 0..d {
                        out.data[i * d + i] = s;
                    }
                })),
                dsqrt_fn: Some(Arc::new(move |x, out| {
                    let s = c0 + c1 * x[0].sin();
                    let g = c1 * x[0].cos() / (2.0 * s.sqrt());
                    for (k, m) in out.iter_mut().enumerate() {
                        m.data.fill(0.0);
                        if k == 0 {
                            for i in 0..d {
                                m.data[i * d + i] = g;
                            }
                        }
                    }
                })),
                db_fn: Some(Arc::new(move |x, out| {
                    out.data.fill(0.0);
                    out.data[0] = -0.5 * c1 * x[0].sin();
                })),
            })
        }
        "perturbed_identity" => {
            // a(x) = c0 I + c1 sin(x_1 + ... + x_d) S
            let c0 = param(params, 0, 1.0);
            let c1 = param(params, 1, 0.2);
            if c0 - c1.abs() <= 0.0 {
                return Err(Error::validation("perturbed_identity needs c0 > |c1|"));
            }
            let s_pat = coupling_pattern(d);
            let s_da = s_pat.clone();
            Ok(DiffusionSpec {
                dim: d,
                lambda_min: c0 - c1.abs(),
                lambda_max: c0 + c1.abs(),
                catalog_id: id.into(),
                params: vec![c0, c1],
                a_fn: Arc::new(move |x, out| {
                    let phase: f64 = x.iter().sum();
                    let w = c1 * phase.sin();
                    for i in 0..d {
                        for j in 0..d {
                            let diag = if i == j { c0 } else { 0.0 };
                            out.data[i * d + j] = diag + w * s_pat.data[i * d + j];
                        }
                    }
                }),
                da_fn: Some(Arc::new(move |x, out| {
                    let phase: f64 = x.iter().sum();
                    let g = c1 * phase.cos();
                    for m in out.iter_mut() {
                        for idx in 0..d * d {
                            m.data[idx] = g * s_da.data[idx];
                        }
                    }
                })),
                sqrt_fn: None,
                dsqrt_fn: None,
                db_fn: Some(Arc::new(move |x, out| {
                    // column sums of the coupling pattern are exactly 1
                    let phase: f64 = x.iter().sum();
                    let g = -0.5 * c1 * phase.sin();
                    out.data.fill(g);
                })),
            })
        }
        "sin_1d" => {
            if d != 1 {
                return Err(Error::validation("sin_1d is one-dimensional"));
            }
            let c0 = param(params, 0, 2.0);
            let c1 = param(params, 1, 1.0);
            if c0 - c1.abs() <= 0.0 {
                return Err(Error::validation("sin_1d needs c0 > |c1|"));
            }
            Ok(scalar_coeff_1d(
                id,
                vec![c0, c1],
                move |x| c0 + c1 * x.sin(),
                move |x| c1 * x.cos(),
                move |x| -c1 * x.sin(),
                c0 - c1.abs(),
                c0 + c1.abs(),
            ))
        }
        "tanh_1d" => {
            if d != 1 {
                return Err(Error::validation("tanh_1d is one-dimensional"));
            }
            let c0 = param(params, 0, 2.0);
            let c1 = param(params, 1, 0.5);
            if c0 - c1.abs() <= 0.0 {
                return Err(Error::validation("tanh_1d needs c0 > |c1|"));
            }
            Ok(scalar_coeff_1d(
                id,
                vec![c0, c1],
                move |x| c0 + c1 * x.tanh(),
                move |x| c1 / x.cosh().powi(2),
                move |x| -2.0 * c1 * x.tanh() / x.cosh().powi(2),
                c0 - c1.abs(),
                c0 + c1.abs(),
            ))
        }
        other => Err(Error::validation(format!(
            "unknown coefficient id '{other}', expected one of {COEFF_IDS:?}"
        ))),
    }
}

fn scalar_coeff_1d(
    id: &str,
    params: Vec<f64>,
    a: impl Fn(f64) -> f64 + Send + Sync + Copy + 'static,
    da: impl Fn(f64) -> f64 + Send + Sync + Copy + 'static,
    d2a: impl Fn(f64) -> f64 + Send + Sync + Copy + 'static,
    lambda_min: f64,
    lambda_max: f64,
) -> DiffusionSpec {
    DiffusionSpec {
        dim: 1,
        lambda_min,
        lambda_max,
        catalog_id: id.into(),
        params,
        a_fn: Arc::new(move |x, out| out.data[0] = a(x[0])),
        da_fn: Some(Arc::new(move |x, out| out[0].data[0] = da(x[0]))),
        sqrt_fn: Some(Arc::new(move |x, out| out.data[0] = a(x[0]).sqrt())),
        dsqrt_fn: Some(Arc::new(move |x, out| {
            out[0].data[0] = da(x[0]) / (2.0 * a(x[0]).sqrt())
        })),
        db_fn: Some(Arc::new(move |x, out| out.data[0] = 0.5 * d2a(x[0]))),
    }
}

pub fn field_catalog(id: &str, params: &[f64], dim: usize) -> Result<VectorFieldSet> {
    if dim == 0 {
        return Err(Error::validation("dimension must be positive"));
    }
    let d = dim;
    match id {
        "euclidean" => {
            let mut fields = vec![VectorField::zero(d)];
            for i in 0..d {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                fields.push(VectorField::constant(e));
            }
            VectorFieldSet::new(d, id, fields)
        }
        "hormander_pair" => {
            if d != 2 {
                return Err(Error::validation("hormander_pair is two-dimensional"));
            }
            let v2 = VectorField::from_fn(2, |y, out| {
                out[0] = 0.0;
                out[1] = y[0];
            })
            .with_jacobian(|_, m| {
                m.data.copy_from_slice(&[0.0, 0.0, 1.0, 0.0]);
            })
            .with_hessian(|_, _, m| m.data.fill(0.0));
            VectorFieldSet::new(
                2,
                id,
                vec![VectorField::zero(2), VectorField::constant(vec![1.0, 0.0]), v2],
            )
        }
        "hormander_sin" => {
            if d != 2 {
                return Err(Error::validation("hormander_sin is two-dimensional"));
            }
            let v2 = VectorField::from_fn(2, |y, out| {
                out[0] = 0.0;
                out[1] = y[0].sin();
            })
            .with_jacobian(|y: &[f64], m: &mut Mat| {
                m.data.copy_from_slice(&[0.0, 0.0, y[0].cos(), 0.0]);
            })
            .with_hessian(|y: &[f64], u: &[f64], m: &mut Mat| {
                m.data.copy_from_slice(&[0.0, 0.0, -y[0].sin() * u[0], 0.0]);
            });
            VectorFieldSet::new(
                2,
                id,
                vec![VectorField::zero(2), VectorField::constant(vec![1.0, 0.0]), v2],
            )
        }
        "linear_commuting" => {
            // V_i(y) = c y_i e_i: diagonal generators, mutually commuting.
            let c = param(params, 0, 0.5);
            let mut fields = vec![VectorField::zero(d)];
            for i in 0..d {
                let mut m = Mat::zeros(d);
                m.set(i, i, c);
                fields.push(VectorField::linear(m));
            }
            VectorFieldSet::new(d, id, fields)
        }
        "scalar_linear" => {
            if d != 1 {
                return Err(Error::validation("scalar_linear is one-dimensional"));
            }
            let mut m = Mat::zeros(1);
            m.set(0, 0, 1.0);
            VectorFieldSet::new(1, id, vec![VectorField::zero(1), VectorField::linear(m)])
        }
        "degenerate_pair" => {
            if d != 2 {
                return Err(Error::validation("degenerate_pair is two-dimensional"));
            }
            VectorFieldSet::new(
                2,
                id,
                vec![VectorField::zero(2), VectorField::constant(vec![1.0, 0.0]), VectorField::zero(2)],
            )
        }
        "const_drift" => {
            let c = param(params, 0, 1.0);
            let mut v0 = vec![0.0; d];
            v0[0] = c;
            let mut fields = vec![VectorField::constant(v0)];
            for _ in 0..d {
                fields.push(VectorField::zero(d));
            }
            VectorFieldSet::new(d, id, fields)
        }
        other => Err(Error::validation(format!(
            "unknown field id '{other}', expected one of {FIELD_IDS:?}"
        ))),
    }
}
