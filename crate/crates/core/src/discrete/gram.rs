use crate::error::{invalid, Result};
use crate::linalg::{sym_eigen_sorted, Compensated};
use nalgebra::DMatrix;

/// Maximal correlation of a pair whose `X` alphabet is too large to hold densely.
///
/// Rows of the joint table are streamed in as sparse `(y, p(x, y))` lists. The accumulator keeps the
/// `M × M` matrix `G(y, y′) = Σ_x p(x, y) p(x, y′) / p(x)`, from which `ρ²` is the second eigenvalue of
/// `D^{-1/2} G D^{-1/2}`.
#[derive(Debug, Clone)]
pub struct ColumnGram {
    m: usize,
    gram: Vec<Compensated>,
    column: Vec<Compensated>,
    total: Compensated,
    rows: usize,
}

impl ColumnGram {
    pub fn new(m: usize) -> Self {
        Self { m, gram: vec![Compensated::default(); m * m], column: vec![Compensated::default(); m], total: Compensated::default(), rows: 0 }
    }

    /// Adds one row; entries must have distinct column indices.
    pub fn add_row(&mut self, row: &[(usize, f64)]) {
        let mass: f64 = row.iter().map(|&(_, p)| p).sum();
        if mass <= 0.0 {
            return;
        }
        self.total.add(mass);
        self.rows += 1;
        for (k, &(a, pa)) in row.iter().enumerate() {
            self.column[a].add(pa);
            for &(b, pb) in &row[k..] {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                self.gram[lo * self.m + hi].add(pa * pb / mass);
            }
        }
    }

    /// Folds in another accumulator; merging in a fixed order keeps results reproducible.
    pub fn merge(&mut self, other: &ColumnGram) {
        for (a, b) in self.gram.iter_mut().zip(&other.gram) {
            a.add(b.value());
        }
        for (a, b) in self.column.iter_mut().zip(&other.column) {
            a.add(b.value());
        }
        self.total.add(other.total.value());
        self.rows += other.rows;
    }

    pub fn rho(&self) -> Result<f64> {
        let total = self.total.value();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("streamed rows carry mass {total}, not 1")));
        }
        let py: Vec<f64> = self.column.iter().map(|c| c.value()).collect();
        let keep: Vec<usize> = (0..self.m).filter(|&b| py[b] > 0.0).collect();
        if keep.len() < 2 || self.rows < 2 {
            return Ok(0.0);
        }
        let entry = |a: usize, b: usize| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            self.gram[lo * self.m + hi].value()
        };
        let k = DMatrix::from_fn(keep.len(), keep.len(), |r, c| {
            let (a, b) = (keep[r], keep[c]);
            entry(a, b) / (py[a] * py[b]).sqrt() - (py[a] * py[b]).sqrt()
        });
        let (eig, _) = sym_eigen_sorted(&k);
        Ok(eig[eig.len() - 1].clamp(0.0, 1.0).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{maxcorr_pair, FinitePair};
    use crate::seeds::rng;
    use rand::Rng;

    #[test]
    fn matches_dense_computation() {
        let mut r = rng(5);
        for _ in 0..20 {
            let (n, m) = (r.random_range(2..9), r.random_range(2..6));
            let raw: Vec<f64> = (0..n * m).map(|_| if r.random_bool(0.3) { 0.0 } else { r.random::<f64>() }).collect();
            let s: f64 = raw.iter().sum();
            let rows: Vec<Vec<f64>> = raw.chunks(m).map(|c| c.iter().map(|v| v / s).collect()).collect();
            let dense = maxcorr_pair(&FinitePair::from_rows(&rows).unwrap()).rho;
            let mut g = ColumnGram::new(m);
            for row in &rows {
                let sparse: Vec<(usize, f64)> = row.iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect();
                g.add_row(&sparse);
            }
            let got = g.rho().unwrap();
            assert!((got * got - dense * dense).abs() < 1e-13, "{got} vs {dense}");
        }
    }

    #[test]
    fn incomplete_mass_is_rejected() {
        let mut g = ColumnGram::new(2);
        g.add_row(&[(0, 0.5)]);
        assert!(g.rho().is_err());
    }
}
