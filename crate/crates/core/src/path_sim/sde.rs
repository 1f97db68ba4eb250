//! Ito stepping for dX = A(X) dW + B(X) dt and the linear flow equations
//!
//!   dJ      = sum_i DA_i(X) J dW^i + DB(X) J dt
//!   dJ^{-1} = -J^{-1} ( sum_i DA_i dW^i + (DB - sum_i DA_i^2) dt )
//!
//! with (DA_i)_{jl} = d_l A_{ji}. The Milstein variant adds only the diagonal
//! corrections (DW_i^2 - dt)/2; cross Levy areas belong to the rough lift.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{DiffusionSpec, DriftConvention, SqrtDiffMethod};
use crate::path_sim::{BrownianDriver, SamplePath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    Milstein,
}

pub fn simulate_x(
    spec: &DiffusionSpec,
    driver: &BrownianDriver,
    x0: &[f64],
    scheme: Scheme,
    convention: DriftConvention,
) -> Result<SamplePath> {
    let d = spec.dim;
    if driver.d != d {
        return Err(Error::validation(format!(
            "driver dimension {} != coefficient dimension {d}",
            driver.d
        )));
    }
    if x0.len() != d {
        return Err(Error::validation("initial condition dimension mismatch"));
    }
    let n = driver.n;
    let dt = driver.dt;
    let mut values = Vec::with_capacity((n + 1) * d);
    values.extend_from_slice(x0);

    let mut x = x0.to_vec();
    let mut a_root = Mat::zeros(d);
    let mut b = vec![0.0; d];
    let mut step = vec![0.0; d];
    for k in 0..n {
        spec.sqrt_a_into(&x, &mut a_root)?;
        spec.drift_into(&x, convention, &mut b);
        let dw = driver.increment(k);
        linalg::mv(d, &a_root.data, dw, &mut step);
        for j in 0..d {
            x[j] += step[j] + b[j] * dt;
        }
        if scheme == Scheme::Milstein {
            // + sum_i (DA_i A_i)(X) (dW_i^2 - dt)/2, (DA_i A_i)_j = d_l A_ji A_li
            let da = spec.sqrt_differential(&x, SqrtDiffMethod::Sylvester)?;
            for i in 0..d {
                let w2 = 0.5 * (dw[i] * dw[i] - dt);
                for j in 0..d {
                    let mut corr = 0.0;
                    for l in 0..d {
                        corr += da[l].get(j, i) * a_root.get(l, i);
                    }
                    x[j] += corr * w2;
                }
            }
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::BlowUp { step: k, context: "state non-finite in simulate_x".into() });
        }
        values.extend_from_slice(&x);
    }
    Ok(SamplePath::new(d, dt, values))
}

/// X together with the forward and inverse Jacobian flows on the same grid.
#[derive(Clone, Debug)]
pub struct FlowBundle {
    pub x: SamplePath,
    /// (n+1) row-major d x d blocks J_{t_k <- 0}.
    pub j_fwd: Vec<f64>,
    /// (n+1) blocks J_{0 <- t_k}.
    pub j_inv: Vec<f64>,
    pub d: usize,
    /// sup_t max(|X_t|, |J_fwd|_F, |J_inv|_F).
    pub phi_sup: f64,
    /// Largest ||J K - I||_F seen before any fallback.
    pub raw_composition_defect: f64,
    /// Composition defect after the (possible) inversion fallback.
    pub composition_defect: f64,
    /// True when the SDE-integrated inverse tripped the tolerance and was
    /// replaced by per-step matrix inversion.
    pub inversion_fallback: bool,
}

impl FlowBundle {
    #[inline]
    pub fn fwd(&self, k: usize) -> &[f64] {
        &self.j_fwd[k * self.d * self.d..(k + 1) * self.d * self.d]
    }

    #[inline]
    pub fn inv(&self, k: usize) -> &[f64] {
        &self.j_inv[k * self.d * self.d..(k + 1) * self.d * self.d]
    }

    /// J_{t_b <- t_a} = J_fwd[b] * J_inv[a].
    pub fn between(&self, a: usize, b: usize) -> Mat {
        let d = self.d;
        let mut out = Mat::zeros(d);
        linalg::mm(d, self.fwd(b), self.inv(a), &mut out.data);
        out
    }
}

/// Composition tolerance: 1e-6 times the conditioning scale of the pair.
fn composition_tolerance(_d: usize, j: &[f64], k: &[f64]) -> f64 {
    1e-6 * (linalg::frobenius(j) * linalg::frobenius(k)).max(1.0)
}

pub fn simulate_flow(
    spec: &DiffusionSpec,
    driver: &BrownianDriver,
    x: &SamplePath,
    scheme: Scheme,
    convention: DriftConvention,
) -> Result<FlowBundle> {
    let d = spec.dim;
    if x.d != d || x.n_steps() != driver.n {
        return Err(Error::validation("path/driver mismatch in simulate_flow"));
    }
    let n = driver.n;
    let dt = driver.dt;
    let dd = d * d;

    let mut j_fwd = vec![0.0; (n + 1) * dd];
    let mut j_inv = vec![0.0; (n + 1) * dd];
    for i in 0..d {
        j_fwd[i * d + i] = 1.0;
        j_inv[i * d + i] = 1.0;
    }

    let mut db = Mat::zeros(d);
    let mut da_mats = vec![Mat::zeros(d); d];
    let mut m_fwd = vec![0.0; dd];
    let mut m_inv = vec![0.0; dd];
    let mut scratch = vec![0.0; dd];
    let mut phi_sup = 0.0f64;

    for k in 0..n {
        let xk = x.value(k);
        phi_sup = phi_sup.max(linalg::norm2(xk));
        let da = spec.sqrt_differential(xk, SqrtDiffMethod::Sylvester)?;
        spec.drift_jacobian_into(xk, convention, &mut db);
        // (DA_i)_{jl} = d_l A_{ji}
        for i in 0..d {
            for j in 0..d {
                for l in 0..d {
                    da_mats[i].set(j, l, da[l].get(j, i));
                }
            }
        }
        let dw = driver.increment(k);

        // m_fwd = sum_i DA_i dW_i + DB dt (+ milstein diag), J_{k+1} = (I + m_fwd) J_k
        m_fwd.fill(0.0);
        m_inv.fill(0.0);
        for i in 0..d {
            linalg::axpy(dw[i], &da_mats[i].data, &mut m_fwd);
            linalg::axpy(-dw[i], &da_mats[i].data, &mut m_inv);
        }
        linalg::axpy(dt, &db.data, &mut m_fwd);
        linalg::axpy(-dt, &db.data, &mut m_inv);
        for i in 0..d {
            linalg::mm(d, &da_mats[i].data, &da_mats[i].data, &mut scratch);
            // inverse drift correction +DA_i^2 dt
            linalg::axpy(dt, &scratch, &mut m_inv);
            if scheme == Scheme::Milstein {
                let w2 = 0.5 * (dw[i] * dw[i] - dt);
                linalg::axpy(w2, &scratch, &mut m_fwd);
                linalg::axpy(w2, &scratch, &mut m_inv);
            }
        }
        for i in 0..d {
            m_fwd[i * d + i] += 1.0;
            m_inv[i * d + i] += 1.0;
        }

        let (head, tail) = j_fwd.split_at_mut((k + 1) * dd);
        linalg::mm(d, &m_fwd, &head[k * dd..], &mut tail[..dd]);
        let (head, tail) = j_inv.split_at_mut((k + 1) * dd);
        linalg::mm(d, &head[k * dd..], &m_inv, &mut tail[..dd]);

        let jf = &j_fwd[(k + 1) * dd..(k + 2) * dd];
        let ji = &j_inv[(k + 1) * dd..(k + 2) * dd];
        if !jf.iter().chain(ji).all(|v| v.is_finite()) {
            return Err(Error::BlowUp { step: k, context: "flow non-finite".into() });
        }
        phi_sup = phi_sup.max(linalg::frobenius(jf)).max(linalg::frobenius(ji));
    }
    phi_sup = phi_sup.max(linalg::norm2(x.value(n)));

    let mut raw_defect = 0.0f64;
    let mut needs_fallback = false;
    for k in 0..=n {
        let jf = &j_fwd[k * dd..(k + 1) * dd];
        let ji = &j_inv[k * dd..(k + 1) * dd];
        let defect = linalg::composition_defect(d, jf, ji);
        raw_defect = raw_defect.max(defect);
        if defect > composition_tolerance(d, jf, ji) {
            needs_fallback = true;
        }
    }

    let mut composition_defect = raw_defect;
    if needs_fallback {
        // the SDE-integrated inverse drifted; rebuild it by inversion
        for k in 0..=n {
            let jf = Mat { d, data: j_fwd[k * dd..(k + 1) * dd].to_vec() };
            let inv = linalg::invert(&jf).map_err(|_| Error::Numerical(
                format!("forward flow singular at step {k}; inverse unavailable"),
            ))?;
            j_inv[k * dd..(k + 1) * dd].copy_from_slice(&inv.data);
        }
        composition_defect = 0.0;
        for k in 0..=n {
            let jf = &j_fwd[k * dd..(k + 1) * dd];
            let ji = &j_inv[k * dd..(k + 1) * dd];
            composition_defect = composition_defect.max(linalg::composition_defect(d, jf, ji));
        }
    }

    Ok(FlowBundle {
        x: x.clone(),
        j_fwd,
        j_inv,
        d,
        phi_sup,
        raw_composition_defect: raw_defect,
        composition_defect,
        inversion_fallback: needs_fallback,
    })
}
