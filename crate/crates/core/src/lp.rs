//! Dense two-phase primal simplex for the small programs that arise here
//! (at most a few hundred rows, a few dozen columns). Bland's rule keeps it
//! from cycling on the highly degenerate adjacency programs.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// `maximize c·x` subject to `rows` and `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct Lp {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Cmp, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-11;
const MAX_ITERS: usize = 50_000;

struct Tableau {
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        for x in self.a[r].iter_mut() {
            *x /= p;
        }
        self.rhs[r] /= p;
        let prow = self.a[r].clone();
        let prhs = self.rhs[r];
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][c];
            if f != 0.0 {
                for (x, y) in self.a[i].iter_mut().zip(&prow) {
                    *x -= f * y;
                }
                self.a[i][c] = 0.0;
                self.rhs[i] -= f * prhs;
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations maximizing `cost` over columns `< allowed`.
    /// Returns false when unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        for _ in 0..MAX_ITERS {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let zj: f64 = self
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| cost[b] * self.a[i][j])
                    .sum();
                cost[j] - zj > EPS
            });
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let v = self.a[i][c];
                if v > EPS {
                    let ratio = self.rhs[i] / v;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - EPS
                                || (ratio <= br + EPS && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
        true
    }
}

impl Lp {
    pub fn new(objective: Vec<f64>) -> Self {
        Lp { objective, rows: Vec::new() }
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) {
        self.rows.push((coeffs, cmp, rhs));
    }

    pub fn solve(&self) -> LpOutcome {
        let n = self.objective.len();
        let m = self.rows.len();
        // normalize to nonnegative right-hand sides
        let rows: Vec<(Vec<f64>, Cmp, f64)> = self
            .rows
            .iter()
            .map(|(c, cmp, b)| {
                if *b < 0.0 {
                    let flipped = match cmp {
                        Cmp::Le => Cmp::Ge,
                        Cmp::Ge => Cmp::Le,
                        Cmp::Eq => Cmp::Eq,
                    };
                    (c.iter().map(|x| -x).collect(), flipped, -b)
                } else {
                    (c.clone(), *cmp, *b)
                }
            })
            .collect();
        let n_slack = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Cmp::Le).count();
        let ncols = n + n_slack + n_art;
        let art_start = n + n_slack;

        let mut t = Tableau {
            a: vec![vec![0.0; ncols]; m],
            rhs: vec![0.0; m],
            basis: vec![0; m],
            ncols,
        };
        let (mut si, mut ai) = (n, art_start);
        for (i, (coeffs, cmp, b)) in rows.iter().enumerate() {
            t.a[i][..n].copy_from_slice(&coeffs[..n]);
            t.rhs[i] = *b;
            match cmp {
                Cmp::Le => {
                    t.a[i][si] = 1.0;
                    t.basis[i] = si;
                    si += 1;
                }
                Cmp::Ge => {
                    t.a[i][si] = -1.0;
                    si += 1;
                    t.a[i][ai] = 1.0;
                    t.basis[i] = ai;
                    ai += 1;
                }
                Cmp::Eq => {
                    t.a[i][ai] = 1.0;
                    t.basis[i] = ai;
                    ai += 1;
                }
            }
        }

        if n_art > 0 {
            let mut phase1 = vec![0.0; ncols];
            for c in phase1.iter_mut().skip(art_start) {
                *c = -1.0;
            }
            t.optimize(&phase1, ncols);
            let infeas: f64 = t
                .basis
                .iter()
                .zip(&t.rhs)
                .filter(|(b, _)| **b >= art_start)
                .map(|(_, r)| *r)
                .sum();
            if infeas > 1e-9 {
                return LpOutcome::Infeasible;
            }
            // drive zero-level artificials out of the basis where possible
            for r in 0..m {
                if t.basis[r] >= art_start {
                    if let Some(c) = (0..art_start).find(|&j| t.a[r][j].abs() > 1e-9) {
                        t.pivot(r, c);
                    }
                }
            }
        }

        let mut cost = vec![0.0; t.ncols];
        cost[..n].copy_from_slice(&self.objective);
        if !t.optimize(&cost, art_start) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; n];
        for (r, &b) in t.basis.iter().enumerate() {
            if b < n {
                x[b] = t.rhs[r].max(0.0);
            }
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}
