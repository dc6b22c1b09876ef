//! Small dense linear algebra used by the geometry and alignment code:
//! rank and nullspace by row reduction, and least squares for the
//! stacked alignment systems.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Pivot threshold multiplier for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn mean(a: &[f64]) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        a.iter().sum::<f64>() / a.len() as f64
    }
}

fn max_abs_rows(rows: &[Vec<f64>]) -> f64 {
    rows.iter().fold(0.0, |m, r| m.max(max_abs(r)))
}

/// Reduced row echelon form with partial pivoting. Returns the reduced
/// matrix and the pivot columns. A pivot counts as zero when its magnitude
/// is at most `RANK_TOL * (1 + max|entry|)` of the input.
pub fn rref(rows: &[Vec<f64>], ncols: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    rref_with_tol(rows, ncols, RANK_TOL)
}

fn rref_with_tol(rows: &[Vec<f64>], ncols: usize, tol: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let threshold = tol * (1.0 + max_abs_rows(rows));
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let (best, val) = (r..m.len())
            .map(|i| (i, m[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= threshold {
            for row in m.iter_mut().skip(r) {
                row[c] = 0.0;
            }
            continue;
        }
        m.swap(r, best);
        let p = m[r][c];
        for x in m[r].iter_mut() {
            *x /= p;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

pub fn rank(rows: &[Vec<f64>]) -> usize {
    rank_with_tol(rows, RANK_TOL)
}

/// Rank with a caller-chosen relative pivot threshold.
pub fn rank_with_tol(rows: &[Vec<f64>], tol: f64) -> usize {
    match rows.first() {
        None => 0,
        Some(first) => rref_with_tol(rows, first.len(), tol).1.len(),
    }
}

/// Basis of `{x : rows · x = 0}`.
pub fn nullspace(rows: &[Vec<f64>], ncols: usize) -> Vec<Vec<f64>> {
    let (m, pivots) = rref(rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0.0; ncols];
            v[f] = 1.0;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f];
            }
            v
        })
        .collect()
}

/// Dimension of the intersection of subspaces of `R^n`, each given by a
/// spanning set of vectors. Computed as the nullspace of the stacked
/// orthogonal complements.
pub fn intersection_dim(spans: &[Vec<Vec<f64>>], n: usize) -> usize {
    let mut stacked: Vec<Vec<f64>> = Vec::new();
    for span in spans {
        if span.is_empty() {
            // {0}: complement is the whole space
            return 0;
        }
        stacked.extend(nullspace(span, n));
    }
    if stacked.is_empty() {
        return n;
    }
    n - rank(&stacked)
}

/// A linear system `A x ≈ b` with sparse rows.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub ncols: usize,
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
}

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: Vec<f64>,
    /// Max-abs entry of `A x - b`.
    pub residual: f64,
}

impl SparseSystem {
    pub fn new(ncols: usize) -> Self {
        SparseSystem { ncols, rows: Vec::new() }
    }

    pub fn push(&mut self, entries: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push((entries, rhs));
    }

    fn residual_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(e, b)| b - e.iter().map(|&(j, v)| v * x[j]).sum::<f64>())
            .collect()
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        max_abs(&self.residual_vec(x))
    }

    fn transpose_times(&self, r: &[f64]) -> DVector<f64> {
        let mut h = DVector::<f64>::zeros(self.ncols);
        for ((e, _), ri) in self.rows.iter().zip(r) {
            for &(j, v) in e {
                h[j] += v * ri;
            }
        }
        h
    }

    /// Minimum-norm least-squares solution through the eigendecomposition
    /// of the normal matrix, polished by a few rounds of iterative
    /// refinement against the original rows.
    pub fn solve(&self) -> LstsqSolution {
        let n = self.ncols;
        if n == 0 {
            return LstsqSolution { x: vec![], residual: self.residual(&[]) };
        }
        let mut g = DMatrix::<f64>::zeros(n, n);
        for (e, _) in &self.rows {
            for &(j, vj) in e {
                for &(k, vk) in e {
                    g[(j, k)] += vj * vk;
                }
            }
        }
        let eig = SymmetricEigen::new(g);
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cut = 1e-14 * lmax.max(1e-300);
        let pinv = |h: &DVector<f64>| -> Vec<f64> {
            let qt_h = eig.eigenvectors.transpose() * h;
            let mut y = DVector::<f64>::zeros(n);
            for i in 0..n {
                let l = eig.eigenvalues[i];
                if l.abs() > cut {
                    y[i] = qt_h[i] / l;
                }
            }
            (&eig.eigenvectors * y).iter().copied().collect()
        };
        let b: Vec<f64> = self.rows.iter().map(|r| r.1).collect();
        let mut x = pinv(&self.transpose_times(&b));
        let mut r = self.residual_vec(&x);
        let mut best = max_abs(&r);
        for _ in 0..4 {
            let dx = pinv(&self.transpose_times(&r));
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let rc = self.residual_vec(&cand);
            let m = max_abs(&rc);
            if m.is_nan() || m >= best {
                break;
            }
            x = cand;
            r = rc;
            best = m;
        }
        LstsqSolution { x, residual: best }
    }
}
