//! Coefficient fields a(x), their square roots A(x) = sqrt(a(x)) with
//! differentials, induced drifts, vector fields with Lie brackets, and the
//! checkers for ellipticity, the square-root non-degeneracy condition and the
//! parabolic Hormander condition.

mod bracket;
mod catalog;
mod field;

pub use bracket::{build_bracket_table, hormander_rank, BracketEntry, BracketExpr, BracketTable, RankReport};
pub use catalog::{coeff_catalog, field_catalog, COEFF_IDS, FIELD_IDS};
pub use field::{check_jacobian_consistency, lie_bracket, lie_bracket_at, VectorField, VectorFieldSet};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Central-difference step used by every finite-difference fallback.
pub fn fd_step(x: &[f64]) -> f64 {
    1e-5 * (1.0 + linalg::max_abs(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftConvention {
    /// B_j = 1/2 sum_i d_i a_ij — the drift that matches the divergence-form
    /// generator 1/2 sum d_i(a_ij d_j .).
    HalfDivergence,
    /// B_j = sum_i d_i a_ij.
    FullDivergence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqrtDiffMethod {
    /// Solve A dA_k + dA_k A = d_k a per derivative direction.
    Sylvester,
    /// Central differences of x -> sqrt(a(x)).
    FiniteDiff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContractionConvention {
    /// M_kj = sum_i v_i dA_k[i][j].
    LeftContract,
    /// M_ki = sum_j dA_k[i][j] v_j.
    RightContract,
}

type MatFn = Arc<dyn Fn(&[f64], &mut Mat) + Send + Sync>;
type TensorFn = Arc<dyn Fn(&[f64], &mut [Mat]) + Send + Sync>;

/// A diffusion coefficient a(x) with ellipticity band [lambda_min, lambda_max]
/// and optional closed-form derivatives / square roots from the catalog.
#[derive(Clone)]
pub struct DiffusionSpec {
    pub dim: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub catalog_id: String,
    pub params: Vec<f64>,
    pub(crate) a_fn: MatFn,
    pub(crate) da_fn: Option<TensorFn>,
    pub(crate) sqrt_fn: Option<MatFn>,
    pub(crate) dsqrt_fn: Option<TensorFn>,
    /// Jacobian of the half-divergence drift, when closed-form.
    pub(crate) db_fn: Option<MatFn>,
}

impl std::fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiffusionSpec")
            .field("dim", &self.dim)
            .field("catalog_id", &self.catalog_id)
            .field("params", &self.params)
            .field("lambda_min", &self.lambda_min)
            .field("lambda_max", &self.lambda_max)
            .finish()
    }
}

impl DiffusionSpec {
    pub fn a_into(&self, x: &[f64], out: &mut Mat) {
        (self.a_fn)(x, out);
    }

    pub fn a(&self, x: &[f64]) -> Mat {
        let mut m = Mat::zeros(self.dim);
        self.a_into(x, &mut m);
        m
    }

    /// Slices d_k a(x), analytic when the catalog provides them, otherwise
    /// central finite differences.
    pub fn da(&self, x: &[f64]) -> Vec<Mat> {
        let d = self.dim;
        let mut out = vec![Mat::zeros(d); d];
        if let Some(f) = &self.da_fn {
            f(x, &mut out);
            return out;
        }
        let h = fd_step(x);
        let mut xp = x.to_vec();
        let mut ap = Mat::zeros(d);
        let mut am = Mat::zeros(d);
        for k in 0..d {
            xp[k] = x[k] + h;
            self.a_into(&xp, &mut ap);
            xp[k] = x[k] - h;
            self.a_into(&xp, &mut am);
            xp[k] = x[k];
            for idx in 0..d * d {
                out[k].data[idx] = (ap.data[idx] - am.data[idx]) / (2.0 * h);
            }
        }
        out
    }

    /// A(x) = sqrt(a(x)); analytic catalog route or the symmetric-eigen root.
    pub fn sqrt_a_into(&self, x: &[f64], out: &mut Mat) -> Result<()> {
        if let Some(f) = &self.sqrt_fn {
            f(x, out);
            return Ok(());
        }
        let a = self.a(x);
        *out = matrix_sqrt(&a, self.lambda_min)?;
        Ok(())
    }

    pub fn sqrt_a(&self, x: &[f64]) -> Result<Mat> {
        let mut m = Mat::zeros(self.dim);
        self.sqrt_a_into(x, &mut m)?;
        Ok(m)
    }

    /// Rank-3 tensor d_k A(x), indexed [k][i][j].
    pub fn sqrt_differential(&self, x: &[f64], method: SqrtDiffMethod) -> Result<Vec<Mat>> {
        if let (Some(f), SqrtDiffMethod::Sylvester) = (&self.dsqrt_fn, method) {
            let mut out = vec![Mat::zeros(self.dim); self.dim];
            f(x, &mut out);
            return Ok(out);
        }
        match method {
            SqrtDiffMethod::Sylvester => {
                let a_root = self.sqrt_a(x)?;
                let da = self.da(x);
                let mut out = Vec::with_capacity(self.dim);
                for slice in &da {
                    let sol = linalg::solve_sylvester_spd(&a_root, slice)?;
                    // residual guard: A dA + dA A = d_k a
                    let mut resid = a_root.matmul(&sol);
                    let back = sol.matmul(&a_root);
                    for idx in 0..resid.data.len() {
                        resid.data[idx] += back.data[idx] - slice.data[idx];
                    }
                    let scale = 1.0 + slice.frobenius();
                    if resid.frobenius() > 1e-9 * scale {
                        return Err(Error::numerical(format!(
                            "sylvester residual {} above tolerance",
                            resid.frobenius()
                        )));
                    }
                    out.push(sol);
                }
                Ok(out)
            }
            SqrtDiffMethod::FiniteDiff => {
                let d = self.dim;
                let h = fd_step(x);
                let mut out = vec![Mat::zeros(d); d];
                let mut xp = x.to_vec();
                for k in 0..d {
                    xp[k] = x[k] + h;
                    let rp = self.sqrt_a(&xp)?;
                    xp[k] = x[k] - h;
                    let rm = self.sqrt_a(&xp)?;
                    xp[k] = x[k];
                    for idx in 0..d * d {
                        out[k].data[idx] = (rp.data[idx] - rm.data[idx]) / (2.0 * h);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Divergence drift B(x) from the slices of da.
    pub fn drift_into(&self, x: &[f64], convention: DriftConvention, out: &mut [f64]) {
        let d = self.dim;
        let da = self.da(x);
        let scale = match convention {
            DriftConvention::HalfDivergence => 0.5,
            DriftConvention::FullDivergence => 1.0,
        };
        for j in 0..d {
            let mut s = 0.0;
            for (k, slice) in da.iter().enumerate() {
                s += slice.get(k, j);
            }
            out[j] = scale * s;
        }
    }

    pub fn drift(&self, x: &[f64], convention: DriftConvention) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.drift_into(x, convention, &mut out);
        out
    }

    /// Jacobian of the drift, DB_jl = d_l B_j; analytic when the catalog
    /// provides it, otherwise central differences of `drift`.
    pub fn drift_jacobian_into(&self, x: &[f64], convention: DriftConvention, out: &mut Mat) {
        let scale = match convention {
            DriftConvention::HalfDivergence => 1.0,
            DriftConvention::FullDivergence => 2.0,
        };
        if let Some(f) = &self.db_fn {
            f(x, out);
            for v in out.data.iter_mut() {
                *v *= scale;
            }
            return;
        }
        let d = self.dim;
        let h = fd_step(x);
        let mut xp = x.to_vec();
        let mut bp = vec![0.0; d];
        let mut bm = vec![0.0; d];
        for l in 0..d {
            xp[l] = x[l] + h;
            self.drift_into(&xp, convention, &mut bp);
            xp[l] = x[l] - h;
            self.drift_into(&xp, convention, &mut bm);
            xp[l] = x[l];
            for j in 0..d {
                out.set(j, l, (bp[j] - bm[j]) / (2.0 * h));
            }
        }
    }

    /// Symmetry of a(x) at a point, relative to its magnitude.
    pub fn symmetry_defect(&self, x: &[f64]) -> f64 {
        let a = self.a(x);
        a.asymmetry() / (1.0 + a.max_abs())
    }
}

/// Unique symmetric PSD square root via eigendecomposition.
///
/// `lambda_floor` is the configured lower ellipticity constant; eigenvalues
/// below lambda_floor * (1 - 1e-8) are rejected.
pub fn matrix_sqrt(m: &Mat, lambda_floor: f64) -> Result<Mat> {
    let scale = m.max_abs().max(1e-300);
    if m.asymmetry() > 1e-12 * scale {
        return Err(Error::validation(format!(
            "matrix_sqrt requires a symmetric input (asymmetry {:.3e})",
            m.asymmetry() / scale
        )));
    }
    let (vals, q) = linalg::sym_eigen(m);
    if vals[0] < lambda_floor * (1.0 - 1e-8) {
        return Err(Error::Ellipticity(format!(
            "eigenvalue {} below floor {}",
            vals[0], lambda_floor
        )));
    }
    let d = m.d;
    let mut root = Mat::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += q.get(i, k) * vals[k].max(0.0).sqrt() * q.get(j, k);
            }
            root.set(i, j, s);
        }
    }
    // enforce exact symmetry against rounding
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (root.get(i, j) + root.get(j, i));
            root.set(i, j, v);
            root.set(j, i, v);
        }
    }
    Ok(root)
}

#[derive(Clone, Debug)]
pub struct EllipticityReport {
    pub min_rayleigh: f64,
    pub max_rayleigh: f64,
    pub pass: bool,
    pub argmin: (usize, usize),
}

/// Scan of the Rayleigh quotient of a(x) over probe points and directions.
pub fn check_ellipticity(
    spec: &DiffusionSpec,
    probes: &[Vec<f64>],
    directions: &[Vec<f64>],
) -> Result<EllipticityReport> {
    if probes.is_empty() || directions.is_empty() {
        return Err(Error::validation("ellipticity check needs probes and directions"));
    }
    let d = spec.dim;
    let mut a = Mat::zeros(d);
    let mut av = vec![0.0; d];
    let mut min_r = f64::INFINITY;
    let mut max_r = f64::NEG_INFINITY;
    let mut argmin = (0, 0);
    for (pi, x) in probes.iter().enumerate() {
        spec.a_into(x, &mut a);
        let scale = 1.0 + a.max_abs();
        if a.asymmetry() > 1e-12 * scale {
            return Err(Error::validation(format!(
                "a(x) asymmetric at probe {pi} (defect {:.3e})",
                a.asymmetry() / scale
            )));
        }
        for (vi, v) in directions.iter().enumerate() {
            linalg::mv(d, &a.data, v, &mut av);
            let r = linalg::dot(v, &av) / linalg::dot(v, v);
            if r < min_r {
                min_r = r;
                argmin = (pi, vi);
            }
            max_r = max_r.max(r);
        }
    }
    let pass = min_r >= spec.lambda_min * (1.0 - 1e-8) && max_r <= spec.lambda_max * (1.0 + 1e-8);
    Ok(EllipticityReport { min_rayleigh: min_r, max_rayleigh: max_r, pass, argmin })
}

#[derive(Clone, Debug)]
pub struct Assumption3Report {
    pub estimated_cj: f64,
    pub argmin_probe: usize,
    pub argmin_direction: Vec<f64>,
    pub constant_a: bool,
}

/// min over probes and unit v of |v^T dA(x)|^2.
///
/// With an empty direction list the inner minimum is computed exactly as the
/// smallest eigenvalue of G = sum_k dA_k dA_k^T (left contraction; the right
/// contraction transposes each slice). A non-empty list scans those
/// directions instead, which is the brute-force oracle route.
pub fn check_assumption3(
    spec: &DiffusionSpec,
    probes: &[Vec<f64>],
    directions: &[Vec<f64>],
    convention: ContractionConvention,
) -> Result<Assumption3Report> {
    if probes.is_empty() {
        return Err(Error::validation("assumption-3 check needs probe points"));
    }
    let d = spec.dim;
    let mut best = f64::INFINITY;
    let mut arg_probe = 0;
    let mut arg_dir = vec![0.0; d];
    let mut max_da = 0.0f64;
    for (pi, x) in probes.iter().enumerate() {
        let da = spec.sqrt_differential(x, SqrtDiffMethod::Sylvester)?;
        for s in &da {
            max_da = max_da.max(s.max_abs());
        }
        let mut gram = Mat::zeros(d);
        for slice in &da {
            let eff = match convention {
                ContractionConvention::LeftContract => slice.clone(),
                ContractionConvention::RightContract => slice.transpose(),
            };
            let outer = eff.matmul(&eff.transpose());
            for idx in 0..d * d {
                gram.data[idx] += outer.data[idx];
            }
        }
        if directions.is_empty() {
            let (vals, q) = linalg::sym_eigen(&gram);
            let v0 = vals[0].max(0.0);
            if v0 < best {
                best = v0;
                arg_probe = pi;
                arg_dir = (0..d).map(|i| q.get(i, 0)).collect();
            }
        } else {
            let mut gv = vec![0.0; d];
            for v in directions {
                linalg::mv(d, &gram.data, v, &mut gv);
                let r = linalg::dot(v, &gv) / linalg::dot(v, v);
                if r < best {
                    best = r;
                    arg_probe = pi;
                    arg_dir = v.clone();
                }
            }
        }
    }
    Ok(Assumption3Report {
        estimated_cj: best,
        argmin_probe: arg_probe,
        argmin_direction: arg_dir,
        constant_a: max_da < 1e-13,
    })
}
