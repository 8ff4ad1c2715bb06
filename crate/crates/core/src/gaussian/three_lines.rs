use crate::error::{invalid, Error, Result};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Geometric and apparent angles of three lines through the origin of `R³`.
///
/// `angles[0]` is the angle between lines 2 and 3, `angles[1]` between 3 and 1,
/// `angles[2]` between 1 and 2. `apparent[i]` is the same angle seen along line `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeLinesReport {
    pub angles: [f64; 3],
    pub apparent: [f64; 3],
    pub sine_ratios: [f64; 3],
    pub max_ratio_spread: f64,
    pub order_consistent: bool,
}

fn line_angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a.dot(b).abs() / (a.norm() * b.norm())).min(1.0).acos()
}

fn project_out(v: &Vector3<f64>, axis: &Vector3<f64>) -> Vector3<f64> {
    v - axis * v.dot(axis)
}

pub fn three_lines(u1: Vector3<f64>, u2: Vector3<f64>, u3: Vector3<f64>) -> Result<ThreeLinesReport> {
    let us = [u1, u2, u3];
    if us.iter().any(|u| !(u.norm() > 0.0) || u.iter().any(|x| !x.is_finite())) {
        return Err(invalid("direction vectors must be nonzero and finite"));
    }
    let us: Vec<Vector3<f64>> = us.iter().map(|u| u.normalize()).collect();
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        if us[i].cross(&us[j]).norm() < 1e-12 {
            return Err(Error::Collinear(i + 1, j + 1));
        }
    }
    let mut angles = [0.0; 3];
    let mut apparent = [0.0; 3];
    let mut sine_ratios = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        angles[i] = line_angle(&us[j], &us[k]);
        apparent[i] = line_angle(&project_out(&us[j], &us[i]), &project_out(&us[k], &us[i]));
        sine_ratios[i] = apparent[i].sin() / angles[i].sin();
    }
    let hi = sine_ratios.iter().copied().fold(f64::MIN, f64::max);
    let lo = sine_ratios.iter().copied().fold(f64::MAX, f64::min);
    let order_consistent = (0..3).all(|i| {
        (0..3).all(|j| {
            let true_order = angles[i].total_cmp(&angles[j]);
            let seen_order = apparent[i].total_cmp(&apparent[j]);
            // Ties within roundoff in either ordering are accepted.
            true_order == seen_order || (angles[i] - angles[j]).abs() < 1e-12 || (apparent[i] - apparent[j]).abs() < 1e-12
        })
    });
    Ok(ThreeLinesReport { angles, apparent, sine_ratios, max_ratio_spread: hi - lo, order_consistent })
}

/// Unit vectors with prescribed pairwise angles `(∠(2,3), ∠(3,1), ∠(1,2))` in radians.
pub fn lines_with_angles(a23: f64, a31: f64, a12: f64) -> Result<[Vector3<f64>; 3]> {
    let u1 = Vector3::x();
    let u2 = Vector3::new(a12.cos(), a12.sin(), 0.0);
    let x = a31.cos();
    let y = (a23.cos() - a12.cos() * x) / a12.sin();
    let z2 = 1.0 - x * x - y * y;
    if z2 < 0.0 {
        return Err(invalid("angles violate the spherical triangle inequality"));
    }
    Ok([u1, u2, Vector3::new(x, y, z2.sqrt())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn orthonormal_axes() {
        let r = three_lines(Vector3::x(), Vector3::y(), Vector3::z()).unwrap();
        for i in 0..3 {
            assert_relative_eq!(r.angles[i], FRAC_PI_2, epsilon = 1e-15);
            assert_relative_eq!(r.apparent[i], FRAC_PI_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn collinear_rejected() {
        let e = three_lines(Vector3::x(), -Vector3::x(), Vector3::z());
        assert!(matches!(e, Err(Error::Collinear(1, 2))));
    }

    #[test]
    fn figure_configuration() {
        let deg = std::f64::consts::PI / 180.0;
        let [u1, u2, u3] = lines_with_angles(58.0 * deg, 71.0 * deg, 15.0 * deg).unwrap();
        let r = three_lines(u1, u2, u3).unwrap();
        let expected = [58.0, 71.0, 15.0];
        for i in 0..3 {
            assert_relative_eq!(r.angles[i] / deg, expected[i], epsilon = 1e-9);
            assert!(r.apparent[i] < r.angles[i]);
        }
        assert!(r.max_ratio_spread < 1e-10 && r.order_consistent);
    }
}
