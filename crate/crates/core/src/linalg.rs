//! Small dense linear algebra on row-major `&[f64]` slices.
//!
//! The simulation loops work on flat buffers of d x d blocks (d is 1..3 for
//! the built-in catalog), so the kernels here take slices instead of owning
//! types. Factorizations (symmetric eigen, SVD) are delegated to nalgebra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Owning square matrix, row-major. Thin wrapper used at module boundaries;
/// hot loops index the flat buffer directly.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub d: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(d: usize) -> Self {
        Mat { d, data: vec![0.0; d * d] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Mat::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = 1.0;
        }
        m
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.data[i * d + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let d = rows.len();
        let mut m = Mat::zeros(d);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), d);
            m.data[i * d..(i + 1) * d].copy_from_slice(r);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.d + j] = v;
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        let mut out = Mat::zeros(self.d);
        mm(self.d, &self.data, &other.data, &mut out.data);
        out
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.d, |i, j| self.get(j, i))
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.get(i, i)).sum()
    }

    /// Largest |m_ij - m_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.data)
    }

    pub fn from_na(m: &DMatrix<f64>) -> Mat {
        let d = m.nrows();
        Mat::from_fn(d, |i, j| m[(i, j)])
    }
}

/// out = a * b, all d x d row-major.
#[inline]
pub fn mm(d: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = s;
        }
    }
}

/// out = a * v for d x d `a` and d-vector `v`.
#[inline]
pub fn mv(d: usize, a: &[f64], v: &[f64], out: &mut [f64]) {
    for i in 0..d {
        let mut s = 0.0;
        for k in 0..d {
            s += a[i * d + k] * v[k];
        }
        out[i] = s;
    }
}

/// out = v^T * a (row vector times matrix).
#[inline]
pub fn vtm(d: usize, v: &[f64], a: &[f64], out: &mut [f64]) {
    for j in 0..d {
        let mut s = 0.0;
        for k in 0..d {
            s += v[k] * a[k * d + j];
        }
        out[j] = s;
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[inline]
pub fn frobenius(m: &[f64]) -> f64 {
    dot(m, m).sqrt()
}

#[inline]
pub fn max_abs(m: &[f64]) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// axpy: y += alpha * x.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// ||a*b - I||_F for d x d blocks; the flow composition monitor.
pub fn composition_defect(d: usize, a: &[f64], b: &[f64]) -> f64 {
    let mut prod = vec![0.0; d * d];
    mm(d, a, b, &mut prod);
    for i in 0..d {
        prod[i * d + i] -= 1.0;
    }
    frobenius(&prod)
}

/// Eigenvalues (ascending) and eigenvectors (columns of Q) of a symmetric
/// matrix.
pub fn sym_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let se = nalgebra::SymmetricEigen::new(m.to_na());
    let mut idx: Vec<usize> = (0..m.d).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let q = Mat::from_fn(m.d, |r, c| se.eigenvectors[(r, idx[c])]);
    (vals, q)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_eig_min(m: &Mat) -> f64 {
    sym_eigen(m).0[0]
}

/// Singular values (descending) of a d x k matrix given by column vectors.
pub fn singular_values(d: usize, cols: &[Vec<f64>]) -> Vec<f64> {
    let k = cols.len();
    let m = DMatrix::from_fn(d, k, |i, j| cols[j][i]);
    let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Inverse via LU; errors when the block is numerically singular.
pub fn invert(m: &Mat) -> Result<Mat> {
    m.to_na()
        .try_inverse()
        .map(|inv| Mat::from_na(&inv))
        .ok_or_else(|| Error::numerical(format!("singular {}x{} matrix", m.d, m.d)))
}

/// Solve A X + X A = S for symmetric positive definite A via the
/// eigendecomposition of A: in the eigenbasis X~_ij = S~_ij / (mu_i + mu_j).
pub fn solve_sylvester_spd(a: &Mat, s: &Mat) -> Result<Mat> {
    let d = a.d;
    let (mu, q) = sym_eigen(a);
    if mu[0] <= 0.0 {
        return Err(Error::numerical(format!(
            "sylvester solve requires SPD coefficient, min eigenvalue {}",
            mu[0]
        )));
    }
    let qt = q.transpose();
    let s_tilde = qt.matmul(s).matmul(&q);
    let x_tilde = Mat::from_fn(d, |i, j| s_tilde.get(i, j) / (mu[i] + mu[j]));
    Ok(q.matmul(&x_tilde).matmul(&qt))
}
