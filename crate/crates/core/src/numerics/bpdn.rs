use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::{least_squares, norm2, Cholesky};
use crate::{Error, Result};

/// Tolerance on `‖Ψa − f‖₂ ≤ ε` relative to `‖f‖₂`.
pub const FEASIBILITY_RTOL: f64 = 1e-6;

/// Relative ℓ1 slack within which a polished point replaces the ADMM answer;
/// it exceeds the ADMM tolerance so loosely converged iterates do not win on
/// round-off.
const POLISH_SLACK: f64 = 1e-4;

const RHO_UPDATE_EVERY: usize = 10;
const RHO_BALANCE: f64 = 10.0;
const RHO_MIN: f64 = 1e-4;
const RHO_MAX: f64 = 1e8;

#[derive(Debug, Clone, Copy)]
pub struct BpdnOptions {
    /// Initial ADMM penalty on the normalized problem, rebalanced against the
    /// residuals as the iteration proceeds.
    pub rho: f64,
    pub max_iter: usize,
    /// Primal and dual residual threshold.
    pub tol: f64,
}

impl Default for BpdnOptions {
    fn default() -> Self {
        BpdnOptions { rho: 10.0, max_iter: 5000, tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct BpdnSolution {
    pub coefficients: Array1<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the returned point is not a BPDN optimum: ε below the least
    /// squares residual, or no feasible iterate within the iteration cap.
    pub warning: Option<String>,
    /// Weighted ‖a‖₁ of the best feasible iterate, recorded after each
    /// iteration once one exists. The incumbent is returned when ADMM stops
    /// without converging.
    pub incumbent_trace: Vec<f64>,
}

/// Solves `min ‖a‖₁ s.t. ‖Ψa − f‖₂ ≤ ε`.
///
/// Columns of Ψ are scaled to unit norm (and `f` to unit norm) before the
/// ADMM iteration, so the ℓ1 objective is weighted by the column norms of the
/// original Ψ. Coefficients are returned in the original scaling.
pub fn bpdn_solve(
    psi: ArrayView2<'_, f64>,
    f: ArrayView1<'_, f64>,
    epsilon: f64,
    opts: &BpdnOptions,
) -> Result<BpdnSolution> {
    let (k, o) = psi.dim();
    if k == 0 {
        return Err(Error::invalid("basis pursuit needs at least one sample"));
    }
    if f.len() != k {
        return Err(Error::DimensionMismatch { context: "bpdn right-hand side", expected: k, actual: f.len() });
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("epsilon must be finite and nonnegative, got {epsilon}")));
    }
    if psi.iter().chain(f.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("basis pursuit data has non-finite entries"));
    }

    let f_norm = norm2(f);
    if f_norm <= epsilon || f_norm == 0.0 {
        return Ok(BpdnSolution {
            coefficients: Array1::zeros(o),
            residual_norm: f_norm,
            iterations: 0,
            converged: true,
            warning: None,
            incumbent_trace: vec![0.0],
        });
    }

    let col_norms: Vec<f64> = psi.axis_iter(Axis(1)).map(norm2).collect();
    let active: Vec<usize> = (0..o).filter(|&j| col_norms[j] > 0.0).collect();
    let mut a_n = Array2::<f64>::zeros((k, active.len()));
    for (c, &j) in active.iter().enumerate() {
        let inv = 1.0 / col_norms[j];
        a_n.column_mut(c).assign(&psi.column(j).mapv(|v| v * inv));
    }
    let f_n = f.mapv(|v| v / f_norm);
    let mut eps_n = epsilon / f_norm;

    let denormalize = |x: &Array1<f64>| {
        let mut out = Array1::<f64>::zeros(o);
        for (c, &j) in active.iter().enumerate() {
            out[j] = x[c] * f_norm / col_norms[j];
        }
        out
    };
    let residual = |x: &Array1<f64>| -> f64 { norm2((a_n.dot(x) - &f_n).view()) };

    let start;
    if k >= active.len() {
        let ls = least_squares(a_n.view(), f_n.view())?;
        let r_min = residual(&ls);
        if eps_n + FEASIBILITY_RTOL < r_min {
            let coefficients = denormalize(&ls);
            return Ok(BpdnSolution {
                residual_norm: r_min * f_norm,
                coefficients,
                iterations: 0,
                converged: false,
                warning: Some(format!(
                    "epsilon {epsilon:e} is below the least-squares residual {:e}; returning the least-squares solution",
                    r_min * f_norm
                )),
                incumbent_trace: Vec::new(),
            });
        }
        eps_n = eps_n.max(r_min * (1.0 + 1e-9));
        start = Some(ls);
    } else {
        start = min_norm_solution(a_n.view(), f_n.view());
    }
    let start = start
        .filter(|x| residual(x) <= eps_n + FEASIBILITY_RTOL)
        .map(|x| {
            let l1 = x.iter().map(|v| v.abs()).sum::<f64>();
            (x, l1)
        });

    let admm = Admm::new(a_n.view(), f_n.view(), eps_n, *opts)?;
    let out = admm.run(&residual, start);

    let l1_of = |x: &Array1<f64>| x.iter().map(|v| v.abs()).sum::<f64>();
    let mut best = if out.converged && residual(&out.last) <= eps_n + FEASIBILITY_RTOL {
        Some((out.last.clone(), l1_of(&out.last)))
    } else {
        out.incumbent.clone()
    };
    if let Some(polished) = polish(a_n.view(), f_n.view(), &out.last) {
        let feasible = residual(&polished) <= eps_n + FEASIBILITY_RTOL;
        let l1 = l1_of(&polished);
        let accept = match &best {
            Some((_, inc_l1)) => feasible && l1 <= inc_l1 * (1.0 + POLISH_SLACK),
            None => feasible,
        };
        if accept {
            best = Some((polished, l1));
        }
    }

    let (x, warning) = match best {
        Some((x, _)) => (x, None),
        None => (
            out.last.clone(),
            Some(format!("no iterate reached ‖Ψa − f‖ ≤ ε within {} iterations", out.iterations)),
        ),
    };
    Ok(BpdnSolution {
        residual_norm: residual(&x) * f_norm,
        coefficients: denormalize(&x),
        iterations: out.iterations,
        converged: out.converged,
        warning,
        incumbent_trace: out.trace,
    })
}

/// `Ψᵀ(ΨΨᵀ)⁻¹f`, with a tiny ridge; `None` when the factorization fails.
fn min_norm_solution(psi: ArrayView2<'_, f64>, f: ArrayView1<'_, f64>) -> Option<Array1<f64>> {
    let mut gram = psi.dot(&psi.t());
    let ridge = 1e-14 * (0..gram.nrows()).map(|i| gram[[i, i]]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for i in 0..gram.nrows() {
        gram[[i, i]] += ridge;
    }
    let t = Cholesky::factor(&gram).ok()?.solve(&f.to_owned());
    Some(psi.t().dot(&t))
}

/// Least squares restricted to the support of `x`, when that support is small
/// enough to be determined.
fn polish(psi: ArrayView2<'_, f64>, f: ArrayView1<'_, f64>, x: &Array1<f64>) -> Option<Array1<f64>> {
    let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
    if support.is_empty() || support.len() > psi.nrows() {
        return None;
    }
    let sub = psi.select(Axis(1), &support);
    let coef = least_squares(sub.view(), f).ok()?;
    let mut out = Array1::<f64>::zeros(x.len());
    for (c, &j) in support.iter().enumerate() {
        out[j] = coef[c];
    }
    Some(out)
}

struct AdmmOutput {
    last: Array1<f64>,
    incumbent: Option<(Array1<f64>, f64)>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Scaled-form ADMM on `min ‖x‖₁ + 1{‖y − f‖ ≤ ε}` with `x = a`, `y = Ψa`.
struct Admm<'a> {
    psi: ArrayView2<'a, f64>,
    psi_t: Array2<f64>,
    f: ArrayView1<'a, f64>,
    eps: f64,
    opts: BpdnOptions,
    factor: Cholesky,
    wide: bool,
}

impl<'a> Admm<'a> {
    fn new(psi: ArrayView2<'a, f64>, f: ArrayView1<'a, f64>, eps: f64, opts: BpdnOptions) -> Result<Self> {
        let (k, o) = psi.dim();
        let wide = k < o;
        let mut gram = if wide { psi.dot(&psi.t()) } else { psi.t().dot(&psi) };
        for i in 0..gram.nrows() {
            gram[[i, i]] += 1.0;
        }
        let psi_t = psi.t().as_standard_layout().into_owned();
        Ok(Admm { psi, psi_t, f, eps, opts, factor: Cholesky::factor(&gram)?, wide })
    }

    /// Solves `(I + ΨᵀΨ) a = q`, through Woodbury when Ψ is wide.
    fn solve_normal(&self, q: &Array1<f64>) -> Array1<f64> {
        if self.wide {
            let t = self.factor.solve(&self.psi.dot(q));
            q - &self.psi_t.dot(&t)
        } else {
            self.factor.solve(q)
        }
    }

    fn project_ball(&self, v: &Array1<f64>) -> Array1<f64> {
        let diff = v - &self.f;
        let n = norm2(diff.view());
        if n <= self.eps {
            v.clone()
        } else {
            &self.f + &(diff * (self.eps / n))
        }
    }

    fn run(&self, residual: &dyn Fn(&Array1<f64>) -> f64, start: Option<(Array1<f64>, f64)>) -> AdmmOutput {
        let (k, o) = self.psi.dim();
        let mut rho = self.opts.rho;
        let mut x = Array1::<f64>::zeros(o);
        let mut y = self.f.to_owned();
        let mut u1 = Array1::<f64>::zeros(o);
        let mut u2 = Array1::<f64>::zeros(k);
        let mut incumbent = start;
        let mut trace = Vec::new();
        let feas_tol = self.eps + FEASIBILITY_RTOL;

        for it in 1..=self.opts.max_iter {
            let rhs = (&x - &u1) + self.psi_t.dot(&(&y - &u2));
            let a = self.solve_normal(&rhs);
            let psi_a = self.psi.dot(&a);

            let x_old = std::mem::replace(&mut x, (&a + &u1).mapv(|v| soft(v, 1.0 / rho)));
            let y_old = std::mem::replace(&mut y, self.project_ball(&(&psi_a + &u2)));

            let r1 = &a - &x;
            let r2 = &psi_a - &y;
            u1 += &r1;
            u2 += &r2;

            let l1 = x.iter().map(|v| v.abs()).sum::<f64>();
            if incumbent.as_ref().is_none_or(|(_, best)| l1 < *best) && residual(&x) <= feas_tol {
                incumbent = Some((x.clone(), l1));
            }
            if let Some((_, best)) = &incumbent {
                trace.push(*best);
            }

            let primal = (r1.dot(&r1) + r2.dot(&r2)).sqrt();
            let dual_vec = (&x - &x_old) + self.psi_t.dot(&(&y - &y_old));
            let dual = rho * norm2(dual_vec.view());
            let primal_scale = norm2(a.view()).max(norm2(psi_a.view())).max(1.0);
            let dual_scale = (rho * norm2((&u1 + &self.psi_t.dot(&u2)).view())).max(1.0);
            if primal <= self.opts.tol * primal_scale && dual <= self.opts.tol * dual_scale {
                return AdmmOutput { last: x, incumbent, trace, iterations: it, converged: true };
            }
            // residual balancing; the a-update is independent of rho, so the
            // factorization stays valid and only the scaled duals change
            if it % RHO_UPDATE_EVERY == 0 {
                let scale = if primal > RHO_BALANCE * dual {
                    2.0
                } else if dual > RHO_BALANCE * primal {
                    0.5
                } else {
                    1.0
                };
                if scale != 1.0 && (RHO_MIN..=RHO_MAX).contains(&(rho * scale)) {
                    rho *= scale;
                    u1 /= scale;
                    u2 /= scale;
                }
            }
        }
        AdmmOutput { last: x, incumbent, trace, iterations: self.opts.max_iter, converged: false }
    }
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(k: usize, o: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::seeded(seed);
        Array2::from_shape_fn((k, o), |_| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn square_invertible_interpolates() {
        let psi = array![[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let truth = array![1.0, -2.0, 0.5];
        let f = psi.dot(&truth);
        let s = bpdn_solve(psi.view(), f.view(), 0.0, &BpdnOptions::default()).unwrap();
        for i in 0..3 {
            assert!((s.coefficients[i] - truth[i]).abs() < 1e-6, "{:?}", s.coefficients);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let psi = gaussian(5, 8, 1);
        let f = Array1::zeros(5);
        let s = bpdn_solve(psi.view(), f.view(), 0.0, &BpdnOptions::default()).unwrap();
        assert!(s.coefficients.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn planted_sparse_recovery() {
        // O = 64 columns, K = O/4 rows, 3-sparse truth
        let (k, o) = (16, 64);
        let psi = gaussian(k, o, 5);
        let mut truth = Array1::<f64>::zeros(o);
        truth[3] = 1.5;
        truth[20] = -0.7;
        truth[41] = 2.2;
        let f = psi.dot(&truth);
        let s = bpdn_solve(psi.view(), f.view(), 1e-8, &BpdnOptions::default()).unwrap();
        for j in 0..o {
            assert!((s.coefficients[j] - truth[j]).abs() <= 1e-5, "j={j} {} vs {}", s.coefficients[j], truth[j]);
        }
        let support: Vec<usize> = (0..o).filter(|&j| s.coefficients[j].abs() > 1e-6).collect();
        assert_eq!(support, vec![3, 20, 41]);
    }

    #[test]
    fn residual_within_epsilon() {
        let psi = gaussian(20, 40, 8);
        let mut rng = crate::rng::seeded(2);
        let f = Array1::from_shape_fn(20, |_| rng.random_range(-1.0..1.0));
        let eps = 0.3;
        let s = bpdn_solve(psi.view(), f.view(), eps, &BpdnOptions::default()).unwrap();
        let r = norm2((psi.dot(&s.coefficients) - &f).view());
        assert!(r <= eps + FEASIBILITY_RTOL * norm2(f.view()), "{r}");
        assert!(s.warning.is_none());
    }

    #[test]
    fn incumbent_trace_nonincreasing() {
        let psi = gaussian(20, 40, 9);
        let mut rng = crate::rng::seeded(4);
        let f = Array1::from_shape_fn(20, |_| rng.random_range(-1.0..1.0));
        let s = bpdn_solve(psi.view(), f.view(), 0.5, &BpdnOptions::default()).unwrap();
        assert!(!s.incumbent_trace.is_empty());
        for w in s.incumbent_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn tall_system_matches_least_squares_when_sparse() {
        let psi = gaussian(40, 10, 12);
        let mut truth = Array1::<f64>::zeros(10);
        truth[2] = 1.0;
        truth[7] = -3.0;
        let f = psi.dot(&truth);
        let s = bpdn_solve(psi.view(), f.view(), 0.0, &BpdnOptions::default()).unwrap();
        let ls = least_squares(psi.view(), f.view()).unwrap();
        let rel = norm2((&s.coefficients - &ls).view()) / norm2(ls.view());
        assert!(rel <= 1e-6, "{rel}");
    }

    #[test]
    fn infeasible_epsilon_returns_least_squares_with_warning() {
        let psi = gaussian(30, 4, 13);
        let mut rng = crate::rng::seeded(6);
        let f = Array1::from_shape_fn(30, |_| rng.random_range(-1.0..1.0));
        let s = bpdn_solve(psi.view(), f.view(), 1e-6, &BpdnOptions::default()).unwrap();
        assert!(s.warning.is_some());
        let ls = least_squares(psi.view(), f.view()).unwrap();
        assert!(norm2((&s.coefficients - &ls).view()) < 1e-10);
    }

    #[test]
    fn zero_columns_get_zero_coefficients() {
        let mut psi = gaussian(6, 5, 14);
        psi.column_mut(2).fill(0.0);
        let f = psi.column(0).to_owned();
        let s = bpdn_solve(psi.view(), f.view(), 0.0, &BpdnOptions::default()).unwrap();
        assert_eq!(s.coefficients[2], 0.0);
    }

    #[test]
    fn argument_validation() {
        let psi = gaussian(3, 3, 1);
        let f = Array1::zeros(2);
        assert!(bpdn_solve(psi.view(), f.view(), 0.0, &BpdnOptions::default()).is_err());
        let f = Array1::zeros(3);
        assert!(bpdn_solve(psi.view(), f.view(), -1.0, &BpdnOptions::default()).is_err());
        let empty = Array2::<f64>::zeros((0, 3));
        assert!(bpdn_solve(empty.view(), Array1::zeros(0).view(), 0.0, &BpdnOptions::default()).is_err());
    }
}
