use super::FinitePair;
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest alphabet accepted by the exhaustive event scan.
pub const EVENT_SCAN_CAP: usize = 20;
/// Largest alphabet enumerated by the α scan (the other side is optimized in closed form).
pub const ALPHA_SCAN_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventWitness {
    pub max_ratio: f64,
    pub event_x: Vec<usize>,
    pub event_y: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub mutual_information: f64,
}

#[derive(Clone, Copy)]
struct Candidate {
    ratio: f64,
    a: u32,
    b: u32,
}

impl Candidate {
    const NONE: Candidate = Candidate { ratio: 0.0, a: 0, b: 0 };

    fn better_than(&self, other: &Candidate) -> bool {
        match self.ratio.total_cmp(&other.ratio) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => (self.a, self.b) < (other.a, other.b),
        }
    }

    fn pick(self, other: Candidate) -> Candidate {
        if other.better_than(&self) {
            other
        } else {
            self
        }
    }
}

fn support_mask(marg: &[f64]) -> u32 {
    marg.iter().enumerate().filter(|(_, &p)| p > 0.0).fold(0, |m, (i, _)| m | 1 << i)
}

fn mask_to_states(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Exhaustive maximum of the normalized event covariance over nontrivial events.
///
/// Events are enumerated up to complement (state 0 is never in the witness sets).
pub fn event_extremes(pair: &FinitePair) -> Result<EventWitness> {
    let (n, m) = pair.joint.shape();
    for size in [n, m] {
        if size > EVENT_SCAN_CAP {
            return Err(Error::SizeCap { what: "event scan alphabet", size, cap: EVENT_SCAN_CAP });
        }
    }
    let px = pair.marginal_x();
    let py = pair.marginal_y();
    let (sx, sy) = (support_mask(&px), support_mask(&py));
    let py_total: f64 = py.iter().sum();
    let joint = &pair.joint;
    let best = (1u32..(1u32 << (n - 1)))
        .into_par_iter()
        .map(|half| {
            let a_mask = half << 1;
            let inter = a_mask & sx;
            if inter == 0 || inter == sx {
                return Candidate::NONE;
            }
            let mut col = vec![0.0; m];
            let mut pa = 0.0;
            let mut pac = 0.0;
            for a in 0..n {
                if a_mask >> a & 1 == 1 {
                    pa += px[a];
                    for (b, c) in col.iter_mut().enumerate() {
                        *c += joint[(a, b)];
                    }
                } else {
                    pac += px[a];
                }
            }
            let mut best = Candidate::NONE;
            let (mut pab, mut pb) = (0.0, 0.0);
            let mut b_mask = 0u32;
            for k in 1u32..(1u32 << (m - 1)) {
                let bit = k.trailing_zeros() + 1;
                b_mask ^= 1 << bit;
                let sign = if b_mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
                pab += sign * col[bit as usize];
                pb += sign * py[bit as usize];
                let bi = b_mask & sy;
                if bi == 0 || bi == sy {
                    continue;
                }
                let pbc = py_total - pb;
                let denom = (pa * pac * pb * pbc).sqrt();
                let ratio = (pab - pa * pb).abs() / denom;
                best = best.pick(Candidate { ratio, a: a_mask, b: b_mask });
            }
            best
        })
        .reduce(|| Candidate::NONE, Candidate::pick);
    Ok(EventWitness {
        max_ratio: best.ratio,
        event_x: mask_to_states(best.a),
        event_y: mask_to_states(best.b),
    })
}

/// α, β and mutual information of a finite pair.
pub fn mixing_coefficients(pair: &FinitePair) -> Result<MixingCoefficients> {
    let px = pair.marginal_x();
    let py = pair.marginal_y();
    let (n, m) = pair.joint.shape();
    let mut beta = 0.0;
    let mut mi = 0.0;
    for a in 0..n {
        for b in 0..m {
            let p = pair.joint[(a, b)];
            let q = px[a] * py[b];
            beta += (p - q).abs();
            if p > 0.0 {
                mi += p * (p / q).ln();
            }
        }
    }
    let alpha = if n <= m { alpha_scan(&pair.joint, &px, &py) } else { alpha_scan(&pair.joint.transpose(), &py, &px) }?;
    Ok(MixingCoefficients { alpha, beta: 0.5 * beta, mutual_information: mi.max(0.0) })
}

/// Enumerates row events; the best column event is the positive or negative part of the covariance row.
fn alpha_scan(joint: &nalgebra::DMatrix<f64>, px: &[f64], py: &[f64]) -> Result<f64> {
    let (n, m) = joint.shape();
    if n > ALPHA_SCAN_CAP {
        return Err(Error::SizeCap { what: "alpha scan alphabet", size: n, cap: ALPHA_SCAN_CAP });
    }
    if n < 2 {
        return Ok(0.0);
    }
    let best = (1u32..(1u32 << (n - 1)))
        .into_par_iter()
        .map(|half| {
            let a_mask = half << 1;
            let mut d = vec![0.0; m];
            let mut pa = 0.0;
            for a in (0..n).filter(|a| a_mask >> a & 1 == 1) {
                pa += px[a];
                for (b, x) in d.iter_mut().enumerate() {
                    *x += joint[(a, b)];
                }
            }
            let (mut pos, mut neg) = (0.0, 0.0);
            for (b, x) in d.iter().enumerate() {
                let v = x - pa * py[b];
                if v > 0.0 {
                    pos += v;
                } else {
                    neg -= v;
                }
            }
            f64::max(pos, neg)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::maxcorr_pair;
    use approx::assert_relative_eq;

    #[test]
    fn two_point_ranges_give_the_correlation() {
        let p = FinitePair::from_rows(&[vec![0.35, 0.15], vec![0.05, 0.45]]).unwrap();
        let w = event_extremes(&p).unwrap();
        assert_relative_eq!(w.max_ratio, maxcorr_pair(&p).rho, epsilon = 1e-12);
        assert_eq!(w.event_x, vec![1]);
        assert_eq!(w.event_y, vec![1]);
    }

    #[test]
    fn product_has_no_events() {
        let p = FinitePair::product(&[0.2, 0.3, 0.5], &[0.6, 0.4]).unwrap();
        assert!(event_extremes(&p).unwrap().max_ratio < 1e-15);
        let mc = mixing_coefficients(&p).unwrap();
        assert!(mc.alpha < 1e-15 && mc.beta < 1e-15 && mc.mutual_information < 1e-15);
    }

    #[test]
    fn alpha_matches_brute_force() {
        let rows = vec![vec![0.1, 0.05, 0.1], vec![0.02, 0.2, 0.03], vec![0.15, 0.05, 0.3]];
        let p = FinitePair::from_rows(&rows).unwrap();
        let px = p.marginal_x();
        let py = p.marginal_y();
        let mut brute: f64 = 0.0;
        for a in 0u32..8 {
            for b in 0u32..8 {
                let mut pab = 0.0;
                let (mut pa, mut pb) = (0.0, 0.0);
                for i in 0..3 {
                    if a >> i & 1 == 1 {
                        pa += px[i];
                    }
                    if b >> i & 1 == 1 {
                        pb += py[i];
                    }
                    for j in 0..3 {
                        if a >> i & 1 == 1 && b >> j & 1 == 1 {
                            pab += rows[i][j];
                        }
                    }
                }
                brute = brute.max((pab - pa * pb).abs());
            }
        }
        assert_relative_eq!(mixing_coefficients(&p).unwrap().alpha, brute, epsilon = 1e-15);
    }

    #[test]
    fn scan_cap_is_enforced() {
        let n = EVENT_SCAN_CAP + 1;
        let p = FinitePair::product(&vec![1.0 / n as f64; n], &[0.5, 0.5]).unwrap();
        assert!(matches!(event_extremes(&p), Err(Error::SizeCap { .. })));
    }
}
