//! Second-order (Davie) stepping for RDEs driven by a lifted path:
//!
//!   Y_{k+1} = Y_k + V_0(Y_k) dt + sum_i V_i(Y_k) dX^i
//!           + sum_{i,j} (DV_i V_j)(Y_k) XX[j][i],
//!
//! one pass, no inner fixed point; accuracy is monitored by refinement
//! invariants. The Jacobian equations use the same step with integrand
//! derivatives D^2V_i[V_j] J + DV_i DV_j J (and the mirrored form for the
//! inverse), then the composition defect is checked and per-step inversion
//! takes over if it trips.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::VectorFieldSet;
use crate::rough::{ControlledPath, RoughPath};

pub fn solve_rde(fields: &VectorFieldSet, rp: &RoughPath, y0: &[f64]) -> Result<ControlledPath> {
    let d = fields.dim;
    if rp.dim != d {
        return Err(Error::validation("field/driver dimension mismatch"));
    }
    if y0.len() != d {
        return Err(Error::validation("initial condition dimension mismatch"));
    }
    let n = rp.n_steps();
    let dt = rp.dt;
    let mut values = vec![0.0; (n + 1) * d];
    let mut gub = vec![0.0; (n + 1) * d * d];
    values[..d].copy_from_slice(y0);

    let mut y = y0.to_vec();
    let mut v = vec![vec![0.0; d]; d + 1];
    let mut jv = vec![Mat::zeros(d); d + 1];
    let mut inc = vec![0.0; d];
    let mut xx = vec![0.0; d * d];
    let mut bracket = vec![0.0; d];

    for k in 0..=n {
        for i in 1..=d {
            fields.noise(i).value_into(&y, &mut v[i]);
        }
        // Gubinelli derivative: column i is V_i(Y_k)
        for p in 0..d {
            for i in 0..d {
                gub[k * d * d + p * d + i] = v[i + 1][p];
            }
        }
        if k == n {
            break;
        }
        fields.drift().value_into(&y, &mut v[0]);
        for i in 1..=d {
            fields.noise(i).jacobian_into(&y, &mut jv[i]);
        }
        rp.increment_into(k, k + 1, &mut inc);
        rp.second_level_into(k, k + 1, &mut xx);

        for p in 0..d {
            y[p] += v[0][p] * dt;
        }
        for i in 0..d {
            for p in 0..d {
                y[p] += v[i + 1][p] * inc[i];
            }
        }
        for i in 0..d {
            for j in 0..d {
                let a = xx[j * d + i];
                if a == 0.0 {
                    continue;
                }
                linalg::mv(d, &jv[i + 1].data, &v[j + 1], &mut bracket);
                for p in 0..d {
                    y[p] += bracket[p] * a;
                }
            }
        }
        if !y.iter().all(|c| c.is_finite()) {
            return Err(Error::BlowUp { step: k, context: "state non-finite in solve_rde".into() });
        }
        values[(k + 1) * d..(k + 2) * d].copy_from_slice(&y);
    }

    let mut out = ControlledPath {
        m: d,
        driver_dim: d,
        dt,
        values,
        gubinelli: gub,
        remainder_norm_2a: 0.0,
    };
    out.measure_remainder(rp, rp.alpha);
    Ok(out)
}

/// Forward and inverse Jacobian flows of an RDE solution.
#[derive(Clone, Debug)]
pub struct JacobianPair {
    pub d: usize,
    pub fwd: Vec<f64>,
    pub inv: Vec<f64>,
    pub raw_composition_defect: f64,
    pub composition_defect: f64,
    pub inversion_fallback: bool,
}

impl JacobianPair {
    #[inline]
    pub fn fwd(&self, k: usize) -> &[f64] {
        &self.fwd[k * self.d * self.d..(k + 1) * self.d * self.d]
    }

    #[inline]
    pub fn inv(&self, k: usize) -> &[f64] {
        &self.inv[k * self.d * self.d..(k + 1) * self.d * self.d]
    }

    /// J_{t_b <- t_a}.
    pub fn between(&self, a: usize, b: usize) -> Mat {
        let d = self.d;
        let mut out = Mat::zeros(d);
        linalg::mm(d, self.fwd(b), self.inv(a), &mut out.data);
        out
    }
}

pub fn solve_jacobian_rde(
    fields: &VectorFieldSet,
    rp: &RoughPath,
    y: &ControlledPath,
) -> Result<JacobianPair> {
    let d = fields.dim;
    if y.m != d || y.n_steps() != rp.n_steps() {
        return Err(Error::validation("solution/driver mismatch in solve_jacobian_rde"));
    }
    let n = rp.n_steps();
    let dt = rp.dt;
    let dd = d * d;
    let mut fwd = vec![0.0; (n + 1) * dd];
    let mut inv = vec![0.0; (n + 1) * dd];
    for i in 0..d {
        fwd[i * d + i] = 1.0;
        inv[i * d + i] = 1.0;
    }

    let mut v = vec![vec![0.0; d]; d + 1];
    let mut jv = vec![Mat::zeros(d); d + 1];
    let mut hess = vec![Mat::zeros(d); d * d]; // [i][j] -> D^2 V_{i+1}[V_{j+1}]
    let mut inc = vec![0.0; d];
    let mut xx = vec![0.0; d * d];
    let mut m_fwd = vec![0.0; dd];
    let mut m_inv = vec![0.0; dd];
    let mut prod = vec![0.0; dd];

    for k in 0..n {
        let yk = y.value(k);
        fields.drift().value_into(yk, &mut v[0]);
        fields.drift().jacobian_into(yk, &mut jv[0]);
        for i in 1..=d {
            fields.noise(i).value_into(yk, &mut v[i]);
            fields.noise(i).jacobian_into(yk, &mut jv[i]);
        }
        for i in 0..d {
            for j in 0..d {
                fields.noise(i + 1).hess_dir_into(yk, &v[j + 1], &mut hess[i * d + j]);
            }
        }
        rp.increment_into(k, k + 1, &mut inc);
        rp.second_level_into(k, k + 1, &mut xx);

        // m_fwd = DV_0 dt + sum DV_i dX^i + sum (D2V_i[V_j] + DV_i DV_j) XX[j][i]
        // m_inv = -DV_0 dt - sum DV_i dX^i + sum (DV_j DV_i - D2V_i[V_j]) XX[j][i]
        m_fwd.fill(0.0);
        m_inv.fill(0.0);
        linalg::axpy(dt, &jv[0].data, &mut m_fwd);
        linalg::axpy(-dt, &jv[0].data, &mut m_inv);
        for i in 0..d {
            linalg::axpy(inc[i], &jv[i + 1].data, &mut m_fwd);
            linalg::axpy(-inc[i], &jv[i + 1].data, &mut m_inv);
        }
        for i in 0..d {
            for j in 0..d {
                let a = xx[j * d + i];
                if a == 0.0 {
                    continue;
                }
                linalg::axpy(a, &hess[i * d + j].data, &mut m_fwd);
                linalg::axpy(-a, &hess[i * d + j].data, &mut m_inv);
                linalg::mm(d, &jv[i + 1].data, &jv[j + 1].data, &mut prod);
                linalg::axpy(a, &prod, &mut m_fwd);
                linalg::mm(d, &jv[j + 1].data, &jv[i + 1].data, &mut prod);
                linalg::axpy(a, &prod, &mut m_inv);
            }
        }
        for i in 0..d {
            m_fwd[i * d + i] += 1.0;
            m_inv[i * d + i] += 1.0;
        }
        let (head, tail) = fwd.split_at_mut((k + 1) * dd);
        linalg::mm(d, &m_fwd, &head[k * dd..], &mut tail[..dd]);
        let (head, tail) = inv.split_at_mut((k + 1) * dd);
        linalg::mm(d, &head[k * dd..], &m_inv, &mut tail[..dd]);
        if !fwd[(k + 1) * dd..(k + 2) * dd].iter().all(|c| c.is_finite()) {
            return Err(Error::BlowUp { step: k, context: "jacobian flow non-finite".into() });
        }
    }

    let mut raw = 0.0f64;
    let mut needs_fallback = false;
    for k in 0..=n {
        let jf = &fwd[k * dd..(k + 1) * dd];
        let ji = &inv[k * dd..(k + 1) * dd];
        let defect = linalg::composition_defect(d, jf, ji);
        raw = raw.max(defect);
        let tol = 1e-6 * (linalg::frobenius(jf) * linalg::frobenius(ji)).max(1.0);
        if defect > tol {
            needs_fallback = true;
        }
    }
    let mut composition_defect = raw;
    if needs_fallback {
        for k in 0..=n {
            let jf = Mat { d, data: fwd[k * dd..(k + 1) * dd].to_vec() };
            let m = linalg::invert(&jf)?;
            inv[k * dd..(k + 1) * dd].copy_from_slice(&m.data);
        }
        composition_defect = 0.0;
        for k in 0..=n {
            let jf = &fwd[k * dd..(k + 1) * dd];
            let ji = &inv[k * dd..(k + 1) * dd];
            composition_defect = composition_defect.max(linalg::composition_defect(d, jf, ji));
        }
    }

    Ok(JacobianPair {
        d,
        fwd,
        inv,
        raw_composition_defect: raw,
        composition_defect,
        inversion_fallback: needs_fallback,
    })
}
