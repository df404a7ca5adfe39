//! Dense bounded-variable simplex for problems of the form
//!
//! ```text
//! maximize    cᵀλ
//! subject to  A λ = b,   0 ≤ λᵢ ≤ uᵢ
//! ```
//!
//! Every LP in the crate (zonotope membership, chord extents, the lifting step
//! of the exact sampler) has this shape. Problems are small and dense, so the
//! basis inverse is kept explicitly and updated by elementary row operations.
//! Entering and leaving variables are chosen by Bland's rule.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Solver tolerances. Equality tolerance is scaled by the magnitude of the
/// problem data (see [`BoxLp::scale`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub equality: f64,
    pub bound: f64,
    pub optimality: f64,
    pub pivot: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equality: 1e-9,
            bound: 1e-12,
            optimality: 1e-9,
            pivot: 1e-11,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxLp {
    /// Maximized.
    pub objective: Vec<f64>,
    /// Row-major `rows × cols`.
    pub matrix: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub rhs: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(f64, &[f64])> {
        match self {
            LpOutcome::Optimal { value, x } => Some((*value, x)),
            _ => None,
        }
    }
}

impl BoxLp {
    /// Builds a problem from a column-major list of constraint columns.
    pub fn from_columns(columns: &[Vec<f64>], rhs: Vec<f64>, upper: Vec<f64>, objective: Vec<f64>) -> Self {
        let rows = rhs.len();
        let cols = columns.len();
        let mut matrix = vec![0.0; rows * cols];
        for (j, col) in columns.iter().enumerate() {
            for (i, &a) in col.iter().enumerate().take(rows) {
                matrix[i * cols + j] = a;
            }
        }
        BoxLp { objective, matrix, rows, cols, rhs, upper }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.cols + j]
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.matrix.len() != self.rows * self.cols {
            return Err(LpError::Malformed(format!(
                "matrix has {} entries, expected {}×{}",
                self.matrix.len(),
                self.rows,
                self.cols
            )));
        }
        if self.rhs.len() != self.rows {
            return Err(LpError::Malformed("rhs length differs from row count".into()));
        }
        if self.upper.len() != self.cols || self.objective.len() != self.cols {
            return Err(LpError::Malformed("bounds or objective length differs from column count".into()));
        }
        if let Some(u) = self.upper.iter().find(|u| !u.is_finite() || **u < 0.0) {
            return Err(LpError::Malformed(format!("upper bound {u} must be finite and non-negative")));
        }
        if self.matrix.iter().chain(&self.rhs).chain(&self.objective).any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("non-finite data".into()));
        }
        Ok(())
    }

    /// Magnitude used to scale the equality tolerance.
    pub fn scale(&self) -> f64 {
        let mut s: f64 = 1.0;
        for i in 0..self.rows {
            let mut row = self.rhs[i].abs();
            for j in 0..self.cols {
                row = row.max(self.get(i, j).abs() * self.upper[j]);
            }
            s = s.max(row);
        }
        s
    }

    /// Largest violation of `A x = b`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        (0..self.rows)
            .map(|i| {
                let ax: f64 = (0..self.cols).map(|j| self.get(i, j) * x[j]).sum();
                (ax - self.rhs[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn solve(lp: &BoxLp) -> Result<LpOutcome, LpError> {
    solve_with(lp, &Tolerances::default())
}

pub fn solve_with(lp: &BoxLp, tol: &Tolerances) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let eq_tol = tol.equality * lp.scale();
    let mut simplex = Simplex::new(lp, tol);

    let mut phase1_cost = vec![0.0; simplex.total];
    for c in phase1_cost.iter_mut().skip(lp.cols) {
        *c = -1.0;
    }
    if simplex.run(&phase1_cost)? == Phase::Unbounded {
        return Err(LpError::Numerical("phase one reported unbounded".into()));
    }
    simplex.refresh();
    let worst_artificial = (lp.cols..simplex.total)
        .map(|j| simplex.value(j))
        .fold(0.0, f64::max);
    if worst_artificial > eq_tol {
        return Ok(LpOutcome::Infeasible);
    }

    for j in lp.cols..simplex.total {
        simplex.upper[j] = 0.0;
        simplex.at_upper[j] = false;
    }
    let mut phase2_cost = vec![0.0; simplex.total];
    phase2_cost[..lp.cols].copy_from_slice(&lp.objective);
    if simplex.run(&phase2_cost)? == Phase::Unbounded {
        return Ok(LpOutcome::Unbounded);
    }
    simplex.refresh();

    let x: Vec<f64> = (0..lp.cols)
        .map(|j| simplex.value(j).clamp(0.0, lp.upper[j]))
        .collect();
    let residual = lp.residual(&x);
    if residual > eq_tol {
        return Err(LpError::Numerical(format!(
            "solution violates equalities by {residual:e}"
        )));
    }
    let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal { value, x })
}

/// Feasibility of `A λ = b, 0 ≤ λ ≤ u`; returns a witness when feasible.
pub fn feasible(columns: &[Vec<f64>], rhs: &[f64], upper: &[f64]) -> Result<Option<Vec<f64>>, LpError> {
    let lp = BoxLp::from_columns(columns, rhs.to_vec(), upper.to_vec(), vec![0.0; columns.len()]);
    match solve(&lp)? {
        LpOutcome::Optimal { x, .. } => Ok(Some(x)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(LpError::Numerical("zero objective reported unbounded".into())),
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Phase {
    Optimal,
    Unbounded,
}

/// Working state. Columns `0..cols` are structural, `cols..cols+rows` are
/// artificials (identity after the rows are sign-normalized so `b ≥ 0`).
struct Simplex<'a> {
    lp: &'a BoxLp,
    tol: &'a Tolerances,
    rows: usize,
    total: usize,
    sign: Vec<f64>,
    rhs: Vec<f64>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a BoxLp, tol: &'a Tolerances) -> Self {
        let rows = lp.rows;
        let total = lp.cols + rows;
        let sign: Vec<f64> = lp.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let rhs: Vec<f64> = lp.rhs.iter().zip(&sign).map(|(b, s)| b * s).collect();
        let mut upper = lp.upper.clone();
        upper.extend(std::iter::repeat_n(f64::INFINITY, rows));
        let basis: Vec<usize> = (lp.cols..total).collect();
        let mut position = vec![None; total];
        for (i, &j) in basis.iter().enumerate() {
            position[j] = Some(i);
        }
        let mut binv = vec![0.0; rows * rows];
        for i in 0..rows {
            binv[i * rows + i] = 1.0;
        }
        Simplex {
            lp,
            tol,
            rows,
            total,
            sign,
            xb: rhs.clone(),
            rhs,
            upper,
            at_upper: vec![false; total],
            basis,
            position,
            binv,
            iterations: 0,
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        if j < self.lp.cols {
            self.sign[i] * self.lp.get(i, j)
        } else if j - self.lp.cols == i {
            1.0
        } else {
            0.0
        }
    }

    /// `B⁻¹ A_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let r = self.rows;
        let mut out = vec![0.0; r];
        if j >= self.lp.cols {
            let k = j - self.lp.cols;
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.binv[i * r + k];
            }
            return out;
        }
        for k in 0..r {
            let a = self.entry(k, j);
            if a != 0.0 {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += self.binv[i * r + k] * a;
                }
            }
        }
        out
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }

    fn value(&self, j: usize) -> f64 {
        match self.position[j] {
            Some(i) => self.xb[i],
            None => self.nonbasic_value(j),
        }
    }

    /// Recomputes basic values from the nonbasic ones.
    fn refresh(&mut self) {
        let r = self.rows;
        let mut residual = self.rhs.clone();
        for j in 0..self.total {
            if self.position[j].is_none() && self.at_upper[j] {
                let u = self.upper[j];
                for (i, res) in residual.iter_mut().enumerate() {
                    *res -= self.entry(i, j) * u;
                }
            }
        }
        for i in 0..r {
            self.xb[i] = (0..r).map(|k| self.binv[i * r + k] * residual[k]).sum();
        }
    }

    fn run(&mut self, cost: &[f64]) -> Result<Phase, LpError> {
        let r = self.rows;
        loop {
            self.iterations += 1;
            if self.iterations > self.tol.max_iterations {
                return Err(LpError::IterationLimit(self.tol.max_iterations));
            }
            if self.iterations.is_multiple_of(64) {
                self.refresh();
            }

            // Duals y = c_Bᵀ B⁻¹.
            let mut y = vec![0.0; r];
            for (i, &bj) in self.basis.iter().enumerate() {
                let cb = cost[bj];
                if cb != 0.0 {
                    for (k, yk) in y.iter_mut().enumerate() {
                        *yk += cb * self.binv[i * r + k];
                    }
                }
            }

            // Bland: lowest-index improving column.
            let mut entering = None;
            for j in 0..self.total {
                if self.position[j].is_some() || self.upper[j] == 0.0 {
                    continue;
                }
                let mut d = cost[j];
                for (k, yk) in y.iter().enumerate() {
                    d -= yk * self.entry(k, j);
                }
                if !self.at_upper[j] && d > self.tol.optimality {
                    entering = Some((j, 1.0));
                    break;
                }
                if self.at_upper[j] && d < -self.tol.optimality {
                    entering = Some((j, -1.0));
                    break;
                }
            }
            let Some((j, dir)) = entering else {
                return Ok(Phase::Optimal);
            };

            let alpha = self.ftran(j);
            let mut theta = self.upper[j];
            let mut leaving: Option<(usize, bool)> = None;
            for (i, &a) in alpha.iter().enumerate() {
                if a.abs() <= self.tol.pivot {
                    continue;
                }
                let s = dir * a;
                let bj = self.basis[i];
                let (limit, to_upper) = if s > 0.0 {
                    (self.xb[i] / s, false)
                } else if self.upper[bj].is_finite() {
                    ((self.upper[bj] - self.xb[i]) / -s, true)
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let better = match leaving {
                    _ if limit < theta => true,
                    Some((li, _)) if limit == theta => bj < self.basis[li],
                    _ => false,
                };
                if better {
                    theta = limit;
                    leaving = Some((i, to_upper));
                }
            }
            if !theta.is_finite() {
                return Ok(Phase::Unbounded);
            }

            for (x, a) in self.xb.iter_mut().zip(&alpha) {
                *x -= dir * theta * a;
            }
            match leaving {
                None => {
                    self.at_upper[j] = !self.at_upper[j];
                }
                Some((row, to_upper)) => {
                    let entering_value = self.nonbasic_value(j) + dir * theta;
                    let out = self.basis[row];
                    self.position[out] = None;
                    self.at_upper[out] = to_upper;
                    self.basis[row] = j;
                    self.position[j] = Some(row);
                    self.at_upper[j] = false;
                    self.xb[row] = entering_value;

                    let pivot = alpha[row];
                    for k in 0..r {
                        self.binv[row * r + k] /= pivot;
                    }
                    for (i, &a) in alpha.iter().enumerate() {
                        if i != row && a != 0.0 {
                            for k in 0..r {
                                self.binv[i * r + k] -= a * self.binv[row * r + k];
                            }
                        }
                    }
                }
            }
        }
    }
}
