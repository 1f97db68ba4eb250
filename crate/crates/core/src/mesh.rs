//! Probe grids and unit-direction meshes shared by the checkers and the
//! direction-infimum estimators.

/// `count` unit directions covering the sphere up to sign.
///
/// d=1 is the single direction +1 (sign is irrelevant under |.|), d=2 uses
/// exact angle parametrization of the half-circle, higher d a Fibonacci
/// spiral on the full sphere.
pub fn unit_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(dim >= 1);
    match dim {
        1 => vec![vec![1.0]],
        2 => (0..count.max(4))
            .map(|k| {
                let theta = std::f64::consts::PI * k as f64 / count.max(4) as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect(),
        _ => {
            let n = count.max(8);
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            (0..n)
                .map(|k| {
                    // Fibonacci lattice on S^2, padded with zeros above d=3.
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = std::f64::consts::TAU * (k as f64 / golden).fract();
                    let mut v = vec![0.0; dim];
                    v[0] = r * phi.cos();
                    v[1] = r * phi.sin();
                    v[2] = z;
                    v
                })
                .collect()
        }
    }
}

/// Uniform lattice of probe points in the box [-half_width, half_width]^dim.
pub fn probe_grid(dim: usize, half_width: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let per_axis = per_axis.max(1);
    let coords: Vec<f64> = if per_axis == 1 {
        vec![0.0]
    } else {
        (0..per_axis)
            .map(|k| -half_width + 2.0 * half_width * k as f64 / (per_axis - 1) as f64)
            .collect()
    };
    let mut points = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(points.len() * per_axis);
        for p in &points {
            for &c in &coords {
                let mut q = p.clone();
                q.push(c);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    #[test]
    fn directions_are_unit() {
        for dim in [1usize, 2, 3] {
            for v in unit_directions(dim, 32) {
                assert!((norm2(&v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_size() {
        assert_eq!(probe_grid(2, 1.0, 5).len(), 25);
        assert_eq!(probe_grid(3, 0.5, 3).len(), 27);
    }
}
