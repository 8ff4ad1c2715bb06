//! Dense linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Dimension above which the leading singular triple is found by power iteration.
pub const DENSE_SVD_LIMIT: usize = 200;

/// Largest singular value with left and right singular vectors.
pub fn top_singular(m: &DMatrix<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (0.0, DVector::zeros(r), DVector::zeros(c));
    }
    if r.min(c) > DENSE_SVD_LIMIT {
        return top_singular_power(m, 1e-10);
    }
    let svd = m.clone().svd(true, true);
    let (mut best, mut val) = (0, f64::NEG_INFINITY);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > val {
            val = *s;
            best = i;
        }
    }
    let mut v: DVector<f64> = svd.v_t.as_ref().map(|vt| vt.row(best).transpose()).unwrap();
    if val <= 0.0 {
        let u = svd.u.as_ref().map(|u| u.column(best).into_owned()).unwrap();
        return (0.0, u, v);
    }
    // The bidiagonal 2x2 step can lose accuracy on nearly rank-deficient input; a few
    // power steps from the returned vector restore it.
    let mut sigma = (m * &v).norm();
    for _ in 0..50 {
        let w = m.transpose() * (m * &v);
        let nw = w.norm();
        if nw == 0.0 {
            break;
        }
        v = w / nw;
        let next = (m * &v).norm();
        let done = (next - sigma).abs() <= 1e-16 * next;
        sigma = next;
        if done {
            break;
        }
    }
    let u = m * &v / sigma;
    (sigma, u, v)
}

/// Power iteration on `MᵀM`, stopping at relative change `rtol`.
pub fn top_singular_power(m: &DMatrix<f64>, rtol: f64) -> (f64, DVector<f64>, DVector<f64>) {
    let c = m.ncols();
    let mut v = DVector::from_fn(c, |i, _| 1.0 + (i as f64 * 0.618_033_988_7).fract());
    v /= v.norm();
    let mut sigma = 0.0;
    for _ in 0..100_000 {
        let u = m * &v;
        let w = m.transpose() * &u;
        let nw = w.norm();
        if nw == 0.0 {
            return (0.0, DVector::zeros(m.nrows()), v);
        }
        let next = nw.sqrt();
        v = w / nw;
        if (next - sigma).abs() <= rtol * next {
            sigma = next;
            break;
        }
        sigma = next;
    }
    let mut u = m * &v;
    let nu = u.norm();
    if nu > 0.0 {
        u /= nu;
    }
    (sigma, u, v)
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    top_singular(m).0
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues in ascending order.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Pseudo-inverse of a symmetric PSD matrix dropping eigenvalues at or below `cutoff`.
pub fn pinv_psd(m: &DMatrix<f64>, cutoff: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let (vals, vecs) = sym_eigen_sorted(m);
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        if lam > cutoff {
            let col = vecs.column(k);
            out += (col * col.transpose()) / lam;
        }
    }
    out
}

/// Whitening map `W` (rows span the non-degenerate directions) with `W Σ Wᵀ = I`.
pub fn whitening(m: &DMatrix<f64>, cutoff: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen_sorted(m);
    let kept: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > cutoff).collect();
    DMatrix::from_fn(kept.len(), m.nrows(), |r, c| {
        vecs[(c, kept[r])] / vals[kept[r]].sqrt()
    })
}

pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Compensated::default();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Extreme eigenvalues of a symmetric operator by Lanczos with full reorthogonalization.
///
/// Returns `(smallest, largest)` Ritz values once both have stabilized to `tol`.
pub fn lanczos_extremes<F>(n: usize, matvec: F, max_iter: usize, tol: f64) -> (f64, f64)
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut q = DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.754_877_666).fract());
    q /= q.norm();
    let mut prev = (f64::NAN, f64::NAN);
    let limit = max_iter.min(n);
    for k in 0..limit {
        let mut w = matvec(&q);
        let alpha = q.dot(&w);
        w -= &q * alpha;
        if let Some(b) = betas.last() {
            w -= &basis[k - 1] * *b;
        }
        basis.push(q.clone());
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w -= b * c;
            }
        }
        alphas.push(alpha);
        let beta = w.norm();
        let t = DMatrix::from_fn(alphas.len(), alphas.len(), |r, c| {
            if r == c {
                alphas[r]
            } else if r + 1 == c {
                betas[r]
            } else if c + 1 == r {
                betas[c]
            } else {
                0.0
            }
        });
        let (vals, _) = sym_eigen_sorted(&t);
        let cur = (vals[0], vals[vals.len() - 1]);
        let settled = (cur.0 - prev.0).abs() <= tol * cur.0.abs().max(cur.1.abs())
            && (cur.1 - prev.1).abs() <= tol * cur.0.abs().max(cur.1.abs());
        if beta < 1e-14 || (k > 8 && settled) {
            return cur;
        }
        prev = cur;
        betas.push(beta);
        q = w / beta;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn top_singular_matches_power_on_random() {
        let m = DMatrix::from_fn(7, 5, |r, c| ((r * 31 + c * 17) % 11) as f64 / 11.0 - 0.3);
        let (s1, _, _) = top_singular(&m);
        let (s2, _, _) = top_singular_power(&m, 1e-14);
        assert_relative_eq!(s1, s2, max_relative = 1e-9);
    }

    #[test]
    fn pinv_of_rank_one() {
        let v = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let m = &v * v.transpose();
        let p = pinv_psd(&m, 1e-10);
        let back = &m * &p * &m;
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn lanczos_finds_extremes_of_diagonal() {
        let d: Vec<f64> = (0..300).map(|i| (i as f64 / 299.0) * 2.0 - 0.5).collect();
        let (lo, hi) = lanczos_extremes(300, |x| DVector::from_fn(300, |i, _| d[i] * x[i]), 300, 1e-13);
        assert_relative_eq!(lo, -0.5, epsilon = 1e-8);
        assert_relative_eq!(hi, 1.5, epsilon = 1e-8);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1.0];
        v.extend(std::iter::repeat_n(1e-16, 10_000));
        assert_relative_eq!(compensated_sum(v), 1.0 + 1e-12, max_relative = 1e-15);
    }
}
