use super::*;
use crate::linalg::Mat;
use crate::model::{coeff_catalog, field_catalog, DriftConvention, SqrtDiffMethod};
use crate::path_sim::{make_driver, simulate_x, SamplePath, Scheme};

fn sample_fn(d: usize, n: usize, f: impl Fn(f64) -> Vec<f64>) -> SamplePath {
    let dt = 1.0 / n as f64;
    let mut values = Vec::with_capacity((n + 1) * d);
    for k in 0..=n {
        values.extend_from_slice(&f(k as f64 * dt));
    }
    SamplePath::new(d, dt, values)
}

fn brownian_path(seed: u64, idx: u64, n: usize, d: usize) -> SamplePath {
    let spec = coeff_catalog("constant", &[1.0], d).unwrap();
    let drv = make_driver(seed, idx, n, d).unwrap();
    simulate_x(&spec, &drv, &vec![0.0; d], Scheme::Euler, DriftConvention::HalfDivergence).unwrap()
}

#[test]
fn linear_path_second_level_is_half_square() {
    let v = [0.8, -0.3];
    let path = sample_fn(2, 1 << 10, |t| vec![t * v[0], t * v[1]]);
    let rp = midpoint_lift(&path, 4, 0.45).unwrap();
    let n = rp.n_steps();
    for &(s, t) in &[(0usize, n), (n / 4, n / 2), (3, 77)] {
        let dt = (t - s) as f64 * rp.dt;
        let xx = rp.second_level(s, t);
        for a in 0..2 {
            for b in 0..2 {
                let expect = 0.5 * dt * dt * v[a] * v[b];
                assert!(
                    (xx[a * 2 + b] - expect).abs() < 1e-12,
                    "(s,t)=({s},{t}) entry ({a},{b})"
                );
            }
        }
    }
}

#[test]
fn symmetry_identity_on_brownian_lift() {
    let path = brownian_path(10, 0, 1 << 12, 2);
    let rp = midpoint_lift(&path, 4, 0.45).unwrap();
    let n = rp.n_steps();
    let pairs: Vec<(usize, usize)> =
        (0..200).map(|k| ((k * 13) % n, n.min((k * 13) % n + 1 + (k * 7) % 50))).collect();
    let scale = 1.0 + crate::linalg::max_abs(&rp.x).powi(2);
    assert!(symmetry_defect(&rp, &pairs) <= 1e-10 * scale);
}

#[test]
fn circle_levy_area_matches_polygon_oracle() {
    let n = 1 << 14;
    let path = sample_fn(2, n, |t| {
        let th = std::f64::consts::TAU * t;
        vec![th.cos(), th.sin()]
    });
    let rp = midpoint_lift(&path, 1 << 4, 0.45).unwrap();
    let xx = rp.second_level(0, rp.n_steps());
    let levy = 0.5 * (xx[1] - xx[2]);

    // shoelace area of the sampled polygon
    let mut area = 0.0;
    for k in 0..n {
        let a = path.value(k);
        let b = path.value(k + 1);
        area += 0.5 * (a[0] * b[1] - b[0] * a[1]);
    }
    assert!((levy - area).abs() < 1e-12, "levy {levy} vs polygon {area}");
    assert!((levy - std::f64::consts::PI).abs() < 1e-3, "levy {levy} vs pi");
}

#[test]
fn chen_defect_zero_for_lifts_and_sensitive_to_block_corruption() {
    let path = brownian_path(11, 1, 1 << 10, 2);
    let rp = midpoint_lift(&path, 4, 0.45).unwrap();
    let n = rp.n_steps();
    let mut triples = Vec::new();
    for k in 0..200 {
        let s = (k * 29) % (n - 2);
        let u = s + 1 + (k * 17) % (n - s - 1);
        let t = u + (n - u) / 2;
        triples.push((s, u, t.max(u)));
    }
    let scale = 1.0 + crate::linalg::max_abs(&rp.xx0);
    assert!(chen_defect(&rp, &triples) <= 1e-12 * scale);

    // explicit-block route: corrupting one interval block shows up 1:1
    let (s, u, t) = (10usize, 40, 90);
    let mut xx_su = rp.second_level(s, u);
    let xx_ut = rp.second_level(u, t);
    let xx_st = rp.second_level(s, t);
    let mut inc_su = vec![0.0; 2];
    let mut inc_ut = vec![0.0; 2];
    rp.increment_into(s, u, &mut inc_su);
    rp.increment_into(u, t, &mut inc_ut);
    xx_su[1] += 0.01;
    let defect = chen_defect_explicit(2, &xx_st, &xx_su, &xx_ut, &inc_su, &inc_ut);
    assert!((defect - 0.01).abs() < 1e-10);
}

#[test]
fn polygonal_lift_two_routes_agree() {
    // vertices of a random polygon, sampled at its own vertices: midpoint
    // sums versus exact per-segment Riemann-Stieltjes blocks
    let rng = crate::rng::CounterRng::new(17, 0, 0);
    let n = 64;
    let path = sample_fn(2, n, |t| {
        let k = (t * n as f64).round() as u64;
        vec![rng.uniform(2 * k) - 0.5, rng.uniform(2 * k + 1) - 0.5]
    });
    let rp = midpoint_lift(&path, 1, 0.45).unwrap();

    // exact: XX_{0,k+1} = XX_{0,k} + X_{0,k} (x) dX + dX (x) dX / 2
    let mut exact = vec![0.0; 4];
    let x0 = path.value(0);
    for k in 0..n {
        let a = path.value(k);
        let b = path.value(k + 1);
        for u in 0..2 {
            for w in 0..2 {
                exact[u * 2 + w] +=
                    (a[u] - x0[u]) * (b[w] - a[w]) + 0.5 * (b[u] - a[u]) * (b[w] - a[w]);
            }
        }
    }
    let got = rp.second_level(0, n);
    for idx in 0..4 {
        assert!((got[idx] - exact[idx]).abs() < 1e-12);
    }
}

#[test]
fn holder_norms_linear_constant_scaling() {
    let v = [3.0, 4.0];
    let path = sample_fn(2, 1 << 8, |t| vec![t * v[0], t * v[1]]);
    let rp = midpoint_lift(&path, 1, 0.5).unwrap();
    let rep = holder_norms(&rp, 0.5, true).unwrap();
    // |v| (t-s)^{1-alpha} is maximized at t-s = 1
    assert!((rep.norm_x_alpha - 5.0).abs() < 1e-10);
    assert!((rep.rho_alpha - rep.norm_x_alpha - rep.norm_xx_2alpha).abs() < 1e-14);

    let flat = sample_fn(2, 64, |_| vec![1.0, -2.0]);
    let rp = midpoint_lift(&flat, 1, 0.5).unwrap();
    let rep = holder_norms(&rp, 0.5, true).unwrap();
    assert_eq!(rep.norm_x_alpha, 0.0);
    assert_eq!(rep.norm_xx_2alpha, 0.0);

    // homogeneity: scaling X by c scales levels by c and c^2
    let path = brownian_path(12, 2, 1 << 8, 2);
    let mut scaled = path.clone();
    for x in scaled.values.iter_mut() {
        *x *= 2.5;
    }
    let r1 = holder_norms(&midpoint_lift(&path, 1, 0.45).unwrap(), 0.45, false).unwrap();
    let r2 = holder_norms(&midpoint_lift(&scaled, 1, 0.45).unwrap(), 0.45, false).unwrap();
    assert!((r2.norm_x_alpha / r1.norm_x_alpha - 2.5).abs() < 1e-10);
    assert!((r2.norm_xx_2alpha / r1.norm_xx_2alpha - 6.25).abs() < 1e-9);
}

fn constant_integrand(l: &Mat, rp: &RoughPath) -> ControlledPath {
    let d = rp.dim;
    let n = rp.n_steps();
    let m = l.d; // square map here
    let mut values = Vec::with_capacity((n + 1) * m * d);
    for _ in 0..=n {
        values.extend_from_slice(&l.data);
    }
    ControlledPath {
        m: m * d,
        driver_dim: d,
        dt: rp.dt,
        values,
        gubinelli: vec![0.0; (n + 1) * m * d * d],
        remainder_norm_2a: 0.0,
    }
}

#[test]
fn rough_integral_constant_map() {
    let path = brownian_path(13, 3, 1 << 10, 2);
    let rp = midpoint_lift(&path, 4, 0.45).unwrap();
    let l = Mat::from_rows(&[&[1.0, 2.0], &[-0.5, 0.25]]);
    let y = constant_integrand(&l, &rp);
    let z = rough_integral(&y, &rp).unwrap();
    let n = rp.n_steps();
    let mut inc = vec![0.0; 2];
    rp.increment_into(0, n, &mut inc);
    let zt = z.value(n);
    for p in 0..2 {
        let expect = l.get(p, 0) * inc[0] + l.get(p, 1) * inc[1];
        assert!((zt[p] - expect).abs() < 1e-12);
    }
}

#[test]
fn rough_integral_of_path_against_itself_recovers_level_two() {
    let path = brownian_path(14, 4, 1 << 10, 2);
    let rp = midpoint_lift(&path, 4, 0.45).unwrap();
    let d = 2;
    let n = rp.n_steps();
    // integrand rows (i,j): Y[(i,j), w] = X_i delta_{jw}; Y'[(i,j), w, u] = delta_iu delta_jw
    let m = d * d;
    let mut values = vec![0.0; (n + 1) * m * d];
    let mut gub = vec![0.0; (n + 1) * m * d * d];
    for k in 0..=n {
        let x = rp.value(k);
        for i in 0..d {
            for j in 0..d {
                let p = i * d + j;
                values[k * m * d + p * d + j] = x[i];
                gub[(k * m * d + p * d + j) * d + i] = 1.0;
            }
        }
    }
    let y = ControlledPath { m: m * d, driver_dim: d, dt: rp.dt, values, gubinelli: gub, remainder_norm_2a: 0.0 };
    let z = rough_integral(&y, &rp).unwrap();
    let zt = z.value(n);
    let xx = rp.second_level(0, n);
    let x0 = rp.value(0);
    let mut inc = vec![0.0; d];
    rp.increment_into(0, n, &mut inc);
    for i in 0..d {
        for j in 0..d {
            let expect = xx[i * d + j] + x0[i] * inc[j];
            assert!(
                (zt[i * d + j] - expect).abs() < 1e-11,
                "entry ({i},{j}): {} vs {expect}",
                zt[i * d + j]
            );
        }
    }
}

#[test]
fn rough_integral_linear_in_integrand() {
    let path = brownian_path(15, 5, 1 << 9, 2);
    let rp = midpoint_lift(&path, 2, 0.45).unwrap();
    let rng = crate::rng::CounterRng::new(31, 0, 0);
    let n = rp.n_steps();
    let mk = |base: u64| {
        let values: Vec<f64> = (0..(n + 1) * 4).map(|k| rng.uniform(base + k as u64) - 0.5).collect();
        let gub: Vec<f64> =
            (0..(n + 1) * 8).map(|k| rng.uniform(base + 10_000 + k as u64) - 0.5).collect();
        ControlledPath { m: 4, driver_dim: 2, dt: rp.dt, values, gubinelli: gub, remainder_norm_2a: 0.0 }
    };
    let y1 = mk(0);
    let y2 = mk(50_000);
    let (a, b) = (1.3, -0.7);
    let mut combo = y1.clone();
    for (c, (v1, v2)) in combo.values.iter_mut().zip(y1.values.iter().zip(&y2.values)) {
        *c = a * v1 + b * v2;
    }
    for (c, (g1, g2)) in combo.gubinelli.iter_mut().zip(y1.gubinelli.iter().zip(&y2.gubinelli)) {
        *c = a * g1 + b * g2;
    }
    let z1 = rough_integral(&y1, &rp).unwrap();
    let z2 = rough_integral(&y2, &rp).unwrap();
    let zc = rough_integral(&combo, &rp).unwrap();
    for k in 0..=n {
        for p in 0..2 {
            let expect = a * z1.value(k)[p] + b * z2.value(k)[p];
            assert!((zc.value(k)[p] - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn rough_integral_polynomial_matches_fine_stieltjes() {
    // smooth driver, cubic integrand f(X) = (X1^2 X2, X1 X2^2) against dX;
    // compensated sums are second-order exact, the cubic terms decay O(h^2)
    let n = 1 << 16;
    let path = sample_fn(2, n, |t| {
        let th = std::f64::consts::TAU * t;
        vec![th.sin(), (2.0 * th).cos()]
    });
    // midpoint fine oracle
    let mut oracle = 0.0;
    for k in 0..n {
        let a = path.value(k);
        let b = path.value(k + 1);
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        oracle += mid[0] * mid[0] * mid[1] * (b[0] - a[0]) + mid[0] * mid[1] * mid[1] * (b[1] - a[1]);
    }

    let mut errs = Vec::new();
    for stride in [64usize, 32] {
        let rp = midpoint_lift(&path, stride, 0.45).unwrap();
        let nc = rp.n_steps();
        let mut values = vec![0.0; (nc + 1) * 2];
        let mut gub = vec![0.0; (nc + 1) * 4];
        for k in 0..=nc {
            let x = rp.value(k);
            values[k * 2] = x[0] * x[0] * x[1];
            values[k * 2 + 1] = x[0] * x[1] * x[1];
            gub[k * 4] = 2.0 * x[0] * x[1];
            gub[k * 4 + 1] = x[0] * x[0];
            gub[k * 4 + 2] = x[1] * x[1];
            gub[k * 4 + 3] = 2.0 * x[0] * x[1];
        }
        let y = ControlledPath { m: 2, driver_dim: 2, dt: rp.dt, values, gubinelli: gub, remainder_norm_2a: 0.0 };
        let z = rough_integral(&y, &rp).unwrap();
        errs.push((z.value(nc)[0] - oracle).abs());
    }
    assert!(errs[0] < 5e-3, "coarse error {}", errs[0]);
    let ratio = errs[0] / errs[1];
    assert!(ratio > 2.0, "weak decay under refinement: {errs:?}");
}

#[test]
fn solve_rde_trivial_cases() {
    // pure drift: Y = y0 + c t e1
    let fields = field_catalog("const_drift", &[0.7], 2).unwrap();
    let path = brownian_path(16, 6, 1 << 8, 2);
    let rp = midpoint_lift(&path, 2, 0.45).unwrap();
    let y = solve_rde(&fields, &rp, &[0.1, 0.2]).unwrap();
    let n = rp.n_steps();
    assert!((y.value(n)[0] - (0.1 + 0.7)).abs() < 1e-12);
    assert!((y.value(n)[1] - 0.2).abs() < 1e-12);

    // additive fields: Y = y0 + X
    let fields = field_catalog("euclidean", &[], 2).unwrap();
    let y = solve_rde(&fields, &rp, &[1.0, -1.0]).unwrap();
    for k in 0..=n {
        let x = rp.value(k);
        let x0 = rp.value(0);
        assert!((y.value(k)[0] - (1.0 + x[0] - x0[0])).abs() < 1e-13);
        assert!((y.value(k)[1] - (-1.0 + x[1] - x0[1])).abs() < 1e-13);
    }
}

#[test]
fn solve_rde_scalar_exponential_oracle() {
    // dY = Y dX (geometric lift) has Y_t = y0 exp(X_t - X_0)
    let spec = coeff_catalog("sin_1d", &[2.0, 0.5], 1).unwrap();
    let fields = field_catalog("scalar_linear", &[], 1).unwrap();
    for p in 0..5 {
        let drv = make_driver(404, p, 1 << 12, 1).unwrap();
        let x = simulate_x(&spec, &drv, &[0.0], Scheme::Milstein, DriftConvention::HalfDivergence)
            .unwrap();
        let rp = midpoint_lift(&x, 4, 0.45).unwrap();
        let y = solve_rde(&fields, &rp, &[1.5]).unwrap();
        let n = rp.n_steps();
        let exact = 1.5 * (rp.value(n)[0] - rp.value(0)[0]).exp();
        let got = y.value(n)[0];
        assert!((got - exact).abs() < 1e-2 * exact.abs(), "path {p}: {got} vs {exact}");
    }
}

#[test]
fn solve_rde_refinement_order_at_least_one() {
    let spec = coeff_catalog("iso_sin", &[1.0, 0.2], 2).unwrap();
    let fields = field_catalog("hormander_sin", &[], 2).unwrap();
    let mut errs = Vec::new();
    let n_fine = 1 << 13;
    for p in 0..4u64 {
        let drv = make_driver(505, p, n_fine, 2).unwrap();
        let x = simulate_x(&spec, &drv, &[0.0, 0.0], Scheme::Euler, DriftConvention::HalfDivergence)
            .unwrap();
        let reference = {
            let rp = midpoint_lift(&x, 1, 0.45).unwrap();
            solve_rde(&fields, &rp, &[0.3, -0.2]).unwrap()
        };
        let refv = reference.value(reference.n_steps()).to_vec();
        let mut path_errs = Vec::new();
        for stride in [32usize, 16] {
            let rp = midpoint_lift(&x, stride, 0.45).unwrap();
            let y = solve_rde(&fields, &rp, &[0.3, -0.2]).unwrap();
            let yv = y.value(y.n_steps());
            let e = ((yv[0] - refv[0]).powi(2) + (yv[1] - refv[1]).powi(2)).sqrt();
            path_errs.push(e);
        }
        errs.push(path_errs);
    }
    let e_coarse: f64 = errs.iter().map(|e| e[0]).sum::<f64>();
    let e_fine: f64 = errs.iter().map(|e| e[1]).sum::<f64>();
    let order = (e_coarse / e_fine).log2();
    assert!(order >= 1.0, "observed order {order} ({e_coarse} vs {e_fine})");
}

/// Heun (Stratonovich predictor-corrector) for the coupled (X, Y) system
/// driven by the raw increments; the classical-side reference for the
/// rough solver.
fn heun_coupled(
    spec: &crate::model::DiffusionSpec,
    fields: &crate::model::VectorFieldSet,
    drv: &crate::path_sim::BrownianDriver,
    x0: &[f64],
    y0: &[f64],
) -> Vec<f64> {
    let d = spec.dim;
    let rhs = |z: &[f64], dw: &[f64], dt: f64| -> Vec<f64> {
        let (x, y) = z.split_at(d);
        let a = spec.sqrt_a(x).unwrap();
        let da = spec.sqrt_differential(x, SqrtDiffMethod::Sylvester).unwrap();
        let mut b = spec.drift(x, DriftConvention::HalfDivergence);
        // Ito-to-Stratonovich drift correction: b_i -= 1/2 sum_{j,l} d_l A_ij A_lj
        for i in 0..d {
            let mut corr = 0.0;
            for j in 0..d {
                for l in 0..d {
                    corr += da[l].get(i, j) * a.get(l, j);
                }
            }
            b[i] -= 0.5 * corr;
        }
        let mut out = vec![0.0; 2 * d];
        let mut vi = vec![0.0; d];
        // dX = A dW + b dt
        for i in 0..d {
            let mut s = b[i] * dt;
            for j in 0..d {
                s += a.get(i, j) * dw[j];
            }
            out[i] = s;
        }
        // dY = sum_i V_i(Y) dX^i + V_0 dt
        let mut v0 = vec![0.0; d];
        fields.drift().value_into(y, &mut v0);
        for p in 0..d {
            out[d + p] = v0[p] * dt;
        }
        for i in 0..d {
            fields.noise(i + 1).value_into(y, &mut vi);
            for p in 0..d {
                out[d + p] += vi[p] * out[i];
            }
        }
        out
    };
    let mut z: Vec<f64> = x0.iter().chain(y0).copied().collect();
    for k in 0..drv.n {
        let dw = drv.increment(k);
        let d1 = rhs(&z, dw, drv.dt);
        let pred: Vec<f64> = z.iter().zip(&d1).map(|(a, b)| a + b).collect();
        let d2 = rhs(&pred, dw, drv.dt);
        for i in 0..2 * d {
            z[i] += 0.5 * (d1[i] + d2[i]);
        }
    }
    z[d..].to_vec()
}

#[test]
fn solve_rde_agrees_with_stratonovich_heun() {
    let spec = coeff_catalog("iso_sin", &[1.0, 0.2], 2).unwrap();
    let fields = field_catalog("hormander_sin", &[], 2).unwrap();
    let y0 = [0.3, -0.1];
    for p in 0..3u64 {
        let drv = make_driver(606, p, 1 << 12, 2).unwrap();
        let x = simulate_x(&spec, &drv, &[0.0, 0.0], Scheme::Milstein, DriftConvention::HalfDivergence)
            .unwrap();
        let rp = midpoint_lift(&x, 4, 0.45).unwrap();
        let y = solve_rde(&fields, &rp, &y0).unwrap();
        let rough_y = y.value(y.n_steps());
        let heun_y = heun_coupled(&spec, &fields, &drv, &[0.0, 0.0], &y0);
        let gap = ((rough_y[0] - heun_y[0]).powi(2) + (rough_y[1] - heun_y[1]).powi(2)).sqrt();
        assert!(gap < 2e-2, "path {p}: gap {gap} ({rough_y:?} vs {heun_y:?})");
    }
}

#[test]
fn jacobian_rde_constant_fields_identity() {
    let fields = field_catalog("euclidean", &[], 2).unwrap();
    let path = brownian_path(18, 8, 1 << 8, 2);
    let rp = midpoint_lift(&path, 2, 0.45).unwrap();
    let y = solve_rde(&fields, &rp, &[0.0, 0.0]).unwrap();
    let jy = solve_jacobian_rde(&fields, &rp, &y).unwrap();
    for k in 0..=rp.n_steps() {
        assert!(crate::linalg::composition_defect(2, jy.fwd(k), &Mat::identity(2).data) < 1e-14);
    }
    assert!(!jy.inversion_fallback);
}

#[test]
fn jacobian_rde_scalar_exponential_and_composition() {
    let spec = coeff_catalog("sin_1d", &[2.0, 0.5], 1).unwrap();
    let fields = field_catalog("scalar_linear", &[], 1).unwrap();
    let drv = make_driver(707, 0, 1 << 12, 1).unwrap();
    let x = simulate_x(&spec, &drv, &[0.0], Scheme::Milstein, DriftConvention::HalfDivergence)
        .unwrap();
    let rp = midpoint_lift(&x, 4, 0.45).unwrap();
    let y = solve_rde(&fields, &rp, &[2.0]).unwrap();
    let jy = solve_jacobian_rde(&fields, &rp, &y).unwrap();
    let n = rp.n_steps();
    // J_{t<-0} = Y_t / y0 = exp(X_t - X_0)
    let expect = y.value(n)[0] / 2.0;
    assert!((jy.fwd(n)[0] - expect).abs() < 1e-10 * expect.abs());
    assert!(jy.composition_defect < 1e-6);
}

#[test]
fn jacobian_rde_commuting_linear_matches_matrix_exponential() {
    let fields = field_catalog("linear_commuting", &[0.5], 2).unwrap();
    let path = brownian_path(19, 9, 1 << 12, 2);
    let rp = midpoint_lift(&path, 4, 0.45).unwrap();
    let y = solve_rde(&fields, &rp, &[1.0, 1.0]).unwrap();
    let jy = solve_jacobian_rde(&fields, &rp, &y).unwrap();
    let n = rp.n_steps();
    let mut inc = vec![0.0; 2];
    rp.increment_into(0, n, &mut inc);
    // generators c e_i e_i^T commute: J = diag(exp(c X^i))
    for i in 0..2 {
        let expect = (0.5 * inc[i]).exp();
        let got = jy.fwd(n)[i * 2 + i];
        assert!((got - expect).abs() < 5e-3 * expect, "diag {i}: {got} vs {expect}");
    }
    assert!(jy.fwd(n)[1].abs() < 1e-12 && jy.fwd(n)[2].abs() < 1e-12);
}
