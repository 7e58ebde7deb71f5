use ndarray::Array2;

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;

/// Bounds on a single variable; `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bound {
    pub const FREE: Bound = Bound { lower: None, upper: None };
    pub const NONNEGATIVE: Bound = Bound { lower: Some(0.0), upper: None };

    pub fn between(lower: f64, upper: f64) -> Self {
        Bound { lower: Some(lower), upper: Some(upper) }
    }
}

/// `minimize cᵀy` (or maximize) subject to `A y ≤ b` and per-variable bounds.
///
/// Variables without explicit bounds are free.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub maximize: bool,
    pub a: Array2<f64>,
    pub b: Vec<f64>,
    pub bounds: Option<Vec<Bound>>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>, a: Array2<f64>, b: Vec<f64>) -> Self {
        LinearProgram { objective, maximize: false, a, b, bounds: None }
    }

    pub fn maximize(objective: Vec<f64>, a: Array2<f64>, b: Vec<f64>) -> Self {
        LinearProgram { objective, maximize: true, a, b, bounds: None }
    }

    pub fn with_bounds(mut self, bounds: Vec<Bound>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = self.a.dim();
        if m == 0 {
            return Err(Error::invalid("linear program needs at least one constraint row"));
        }
        if self.objective.len() != n {
            return Err(Error::DimensionMismatch {
                context: "LP objective",
                expected: n,
                actual: self.objective.len(),
            });
        }
        if self.b.len() != m {
            return Err(Error::DimensionMismatch { context: "LP right-hand side", expected: m, actual: self.b.len() });
        }
        if let Some(bounds) = &self.bounds {
            if bounds.len() != n {
                return Err(Error::DimensionMismatch { context: "LP bounds", expected: n, actual: bounds.len() });
            }
        }
        if self.a.iter().chain(&self.b).chain(&self.objective).any(|v| !v.is_finite()) {
            return Err(Error::invalid("linear program has non-finite data"));
        }
        Ok(())
    }
}

/// One original variable written as `offset + Σ coef · y'[col]` over
/// nonnegative standard-form columns.
struct VarMap {
    offset: f64,
    terms: Vec<(usize, f64)>,
}

/// Dense two-phase simplex with Bland's anti-cycling rule.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let (m0, n0) = lp.a.dim();
    let bounds = lp.bounds.clone().unwrap_or_else(|| vec![Bound::FREE; n0]);

    let mut maps = Vec::with_capacity(n0);
    let mut ncols = 0;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for bd in &bounds {
        match (bd.lower, bd.upper) {
            (Some(l), u) => {
                if let Some(u) = u {
                    if u < l {
                        return Err(Error::Infeasible);
                    }
                    extra_rows.push((ncols, u - l));
                }
                maps.push(VarMap { offset: l, terms: vec![(ncols, 1.0)] });
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap { offset: u, terms: vec![(ncols, -1.0)] });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap { offset: 0.0, terms: vec![(ncols, 1.0), (ncols + 1, -1.0)] });
                ncols += 2;
            }
        }
    }

    let m = m0 + extra_rows.len();
    let mut rows = Array2::<f64>::zeros((m, ncols));
    let mut rhs = vec![0.0; m];
    for i in 0..m0 {
        let mut r = lp.b[i];
        for (j, map) in maps.iter().enumerate() {
            let aij = lp.a[[i, j]];
            if aij == 0.0 {
                continue;
            }
            r -= aij * map.offset;
            for &(col, coef) in &map.terms {
                rows[[i, col]] += aij * coef;
            }
        }
        rhs[i] = r;
    }
    for (k, &(col, width)) in extra_rows.iter().enumerate() {
        rows[[m0 + k, col]] = 1.0;
        rhs[m0 + k] = width;
    }
    let sign = if lp.maximize { -1.0 } else { 1.0 };
    let mut cost = vec![0.0; ncols];
    for (j, map) in maps.iter().enumerate() {
        let cj = sign * lp.objective[j];
        for &(col, coef) in &map.terms {
            cost[col] += cj * coef;
        }
    }

    let y = Tableau::build(&rows, &rhs).solve(&cost)?;

    let x: Vec<f64> = maps
        .iter()
        .map(|map| map.offset + map.terms.iter().map(|&(c, k)| k * y[c]).sum::<f64>())
        .collect();
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective })
}

/// Tableau over columns `[structural | slack | artificial | rhs]` with the
/// objective in a separate row.
struct Tableau {
    t: Array2<f64>,
    basis: Vec<usize>,
    n_struct: usize,
    n_slack: usize,
    n_art: usize,
}

impl Tableau {
    fn build(rows: &Array2<f64>, rhs: &[f64]) -> Self {
        let (m, n) = rows.dim();
        let art_rows: Vec<usize> = (0..m).filter(|&i| rhs[i] < 0.0).collect();
        let n_art = art_rows.len();
        let width = n + m + n_art + 1;
        let mut t = Array2::<f64>::zeros((m, width));
        let mut basis = vec![0; m];
        let mut art = 0;
        for i in 0..m {
            let flip = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                t[[i, j]] = flip * rows[[i, j]];
            }
            t[[i, n + i]] = flip;
            t[[i, width - 1]] = flip * rhs[i];
            if flip < 0.0 {
                t[[i, n + m + art]] = 1.0;
                basis[i] = n + m + art;
                art += 1;
            } else {
                basis[i] = n + i;
            }
        }
        Tableau { t, basis, n_struct: n, n_slack: m, n_art }
    }

    fn rhs_col(&self) -> usize {
        self.t.ncols() - 1
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.n_struct + self.n_slack && col < self.rhs_col()
    }

    fn solve(mut self, cost: &[f64]) -> Result<Vec<f64>> {
        let width = self.t.ncols();
        if self.n_art > 0 {
            let mut phase1 = vec![0.0; width - 1];
            for c in (self.n_struct + self.n_slack)..(width - 1) {
                phase1[c] = 1.0;
            }
            let value = self.optimize(&phase1, true)?;
            let scale = 1.0 + self.t.column(self.rhs_col()).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if value > 1e-9 * scale {
                return Err(Error::Infeasible);
            }
            self.drive_out_artificials();
        }
        let mut phase2 = vec![0.0; width - 1];
        phase2[..self.n_struct].copy_from_slice(cost);
        self.optimize(&phase2, false)?;

        let mut y = vec![0.0; self.n_struct];
        let rc = self.rhs_col();
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                y[b] = self.t[[i, rc]];
            }
        }
        Ok(y)
    }

    fn reduced_costs(&self, cost: &[f64]) -> (Vec<f64>, f64) {
        let width = self.t.ncols();
        let mut red = cost.to_vec();
        let mut value = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == 0.0 {
                continue;
            }
            for j in 0..(width - 1) {
                red[j] -= cb * self.t[[i, j]];
            }
            value += cb * self.t[[i, width - 1]];
        }
        (red, value)
    }

    fn optimize(&mut self, cost: &[f64], allow_artificial: bool) -> Result<f64> {
        let rc = self.rhs_col();
        for _ in 0..MAX_PIVOTS {
            let (red, value) = self.reduced_costs(cost);
            let entering = (0..rc).find(|&j| {
                red[j] < -PIVOT_TOL && (allow_artificial || !self.is_artificial(j)) && !self.basis.contains(&j)
            });
            let Some(col) = entering else {
                return Ok(value);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.basis.len() {
                let a = self.t[[i, col]];
                if a > PIVOT_TOL {
                    let ratio = self.t[[i, rc]].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-15 * lr.abs().max(1.0)
                                || (ratio <= lr + 1e-15 * lr.abs().max(1.0) && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(row, col);
        }
        Err(Error::Numerical(format!("simplex exceeded {MAX_PIVOTS} pivots")))
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.t.ncols();
        let p = self.t[[row, col]];
        for j in 0..width {
            self.t[[row, j]] /= p;
        }
        self.t[[row, col]] = 1.0;
        for i in 0..self.basis.len() {
            if i == row {
                continue;
            }
            let f = self.t[[i, col]];
            if f == 0.0 {
                continue;
            }
            for j in 0..width {
                let v = self.t[[row, j]];
                if v != 0.0 {
                    self.t[[i, j]] -= f * v;
                }
            }
            self.t[[i, col]] = 0.0;
        }
        self.basis[row] = col;
    }

    fn drive_out_artificials(&mut self) {
        let limit = self.n_struct + self.n_slack;
        for row in 0..self.basis.len() {
            if !self.is_artificial(self.basis[row]) {
                continue;
            }
            if let Some(col) = (0..limit).find(|&j| self.t[[row, j]].abs() > 1e-9 && !self.basis.contains(&j)) {
                self.pivot(row, col);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn max_violation(lp: &LinearProgram, x: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (i, row) in lp.a.rows().into_iter().enumerate() {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            worst = worst.max(lhs - lp.b[i]);
        }
        worst
    }

    #[test]
    fn maximize_single_variable() {
        let lp = LinearProgram::maximize(vec![1.0], array![[1.0], [-1.0]], vec![1.0, 0.0]);
        let s = lp_solve(&lp).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_program_of_square() {
        // maximize r s.t. ±z_k + r ≤ 1, r ≥ 0
        let a = array![
            [1.0, 0.0, 1.0],
            [0.0, 1.0, 1.0],
            [-1.0, 0.0, 1.0],
            [0.0, -1.0, 1.0]
        ];
        let lp = LinearProgram::maximize(vec![0.0, 0.0, 1.0], a, vec![1.0; 4]).with_bounds(vec![
            Bound::FREE,
            Bound::FREE,
            Bound::NONNEGATIVE,
        ]);
        let s = lp_solve(&lp).unwrap();
        assert!(s.x[0].abs() < 1e-12 && s.x[1].abs() < 1e-12);
        assert!((s.x[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_detected() {
        let lp = LinearProgram::minimize(vec![1.0], array![[1.0], [-1.0]], vec![-1.0, -1.0]);
        assert!(matches!(lp_solve(&lp), Err(Error::Infeasible)));
    }

    #[test]
    fn unbounded_detected() {
        let lp = LinearProgram::maximize(vec![1.0], array![[-1.0]], vec![0.0]);
        assert!(matches!(lp_solve(&lp), Err(Error::Unbounded)));
    }

    #[test]
    fn crossed_bounds_infeasible() {
        let lp = LinearProgram::minimize(vec![1.0], array![[1.0]], vec![5.0]).with_bounds(vec![Bound::between(2.0, 1.0)]);
        assert!(matches!(lp_solve(&lp), Err(Error::Infeasible)));
    }

    #[test]
    fn bounded_variables_respected() {
        // minimize x + y, x ∈ [1, 3], y ≤ -2 upper only, with x + y ≥ -10
        let lp = LinearProgram::minimize(vec![1.0, 1.0], array![[-1.0, -1.0]], vec![10.0]).with_bounds(vec![
            Bound::between(1.0, 3.0),
            Bound { lower: None, upper: Some(-2.0) },
        ]);
        let s = lp_solve(&lp).unwrap();
        assert!((s.objective + 10.0).abs() < 1e-10);
        assert!(s.x[0] >= 1.0 - 1e-12 && s.x[0] <= 3.0 + 1e-12 && s.x[1] <= -2.0 + 1e-12);
    }

    #[test]
    fn empty_constraints_rejected() {
        let lp = LinearProgram::minimize(vec![1.0], Array2::zeros((0, 1)), vec![]);
        assert!(lp_solve(&lp).is_err());
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // many constraints through the optimum (1,1)
        let a = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [1.0, 2.0], [-1.0, 0.0], [0.0, -1.0]];
        let b = vec![1.0, 1.0, 2.0, 3.0, 3.0, 0.0, 0.0];
        let lp = LinearProgram::maximize(vec![1.0, 1.0], a, b);
        let s = lp_solve(&lp).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    /// Brute force: enumerate intersections of constraint pairs, keep feasible
    /// ones, take the best objective.
    fn vertex_enumeration(c: &[f64; 2], a: &Array2<f64>, b: &[f64]) -> f64 {
        let m = a.nrows();
        let mut best = f64::NEG_INFINITY;
        for i in 0..m {
            for j in (i + 1)..m {
                let det = a[[i, 0]] * a[[j, 1]] - a[[i, 1]] * a[[j, 0]];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (b[i] * a[[j, 1]] - a[[i, 1]] * b[j]) / det;
                let y = (a[[i, 0]] * b[j] - b[i] * a[[j, 0]]) / det;
                let feasible = (0..m).all(|k| a[[k, 0]] * x + a[[k, 1]] * y <= b[k] + 1e-9);
                if feasible {
                    best = best.max(c[0] * x + c[1] * y);
                }
            }
        }
        best
    }

    #[test]
    fn random_2d_programs_match_vertex_enumeration() {
        let mut rng = crate::rng::seeded(99);
        for _ in 0..200 {
            // bounded polygon: random half-planes tangent to circles around a point inside the box
            let m = rng.random_range(3..9);
            let mut rows = Vec::new();
            let mut b = Vec::new();
            for k in 0..(m + 4) {
                let theta = if k < 4 {
                    std::f64::consts::FRAC_PI_2 * k as f64
                } else {
                    rng.random_range(0.0..std::f64::consts::TAU)
                };
                rows.push(vec![theta.cos(), theta.sin()]);
                b.push(rng.random_range(0.2..2.0));
            }
            let a = crate::numerics::array_from_rows(&rows).unwrap();
            let c = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let lp = LinearProgram::maximize(c.to_vec(), a.clone(), b.clone());
            let s = lp_solve(&lp).unwrap();
            assert!(max_violation(&lp, &s.x) <= 1e-9);
            let brute = vertex_enumeration(&c, &a, &b);
            assert!((s.objective - brute).abs() <= 1e-9, "{} vs {}", s.objective, brute);
        }
    }
}
