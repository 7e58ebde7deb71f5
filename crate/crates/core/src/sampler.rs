//! Hit-and-run sampling of the inactive polytope `{z : x = Wu + Vz ∈ [-1, 1]^d}`.

use ndarray::{concatenate, Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::DesignVector;
use crate::ingest::{designs_from_csv, designs_to_csv};
use crate::io::{fmt_f64, parse_f64, Header};
use crate::numerics::{lp_solve, norm2, Bound, LinearProgram};
use crate::rng::StreamRng;
use crate::subspace::SubspacePartition;
use crate::{Error, Result};

pub const DEFAULT_BURN_IN: usize = 100;
pub const DEFAULT_THIN: usize = 5;
pub const DEFAULT_SAMPLES: usize = 5000;

/// Constraint slack tolerated on returned points.
pub const CONSTRAINT_TOL: f64 = 1e-9;
/// `|aᵢᵀdir|` below this bounds nothing along the ray.
pub const PARALLEL_TOL: f64 = 1e-14;
/// Consecutive zero-length chords tolerated before giving up.
pub const RETRY_CAP: usize = 100;

/// `{z : A z ≤ b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    a: Array2<f64>,
    b: Array1<f64>,
}

impl Polytope {
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch { context: "polytope rows", expected: a.nrows(), actual: b.len() });
        }
        if a.ncols() == 0 {
            return Err(Error::invalid("polytope needs at least one dimension"));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("polytope has non-finite data"));
        }
        Ok(Polytope { a, b })
    }

    /// Axis-aligned box `lo ≤ z ≤ hi`.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { context: "box bounds", expected: lo.len(), actual: hi.len() });
        }
        let n = lo.len();
        let eye = Array2::<f64>::eye(n);
        let a = concatenate![Axis(0), eye, -&eye];
        let b = Array1::from_iter(hi.iter().copied().chain(lo.iter().map(|v| -v)));
        Polytope::new(a, b)
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Array1<f64> {
        &self.b
    }

    /// Largest constraint violation `max(Az − b)` (negative inside).
    pub fn max_violation(&self, z: &Array1<f64>) -> f64 {
        (self.a.dot(z) - &self.b).fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn contains(&self, z: &Array1<f64>) -> bool {
        z.len() == self.dim() && self.max_violation(z) <= CONSTRAINT_TOL
    }
}

/// The box constraints on `x = Wu + Vz` written in `z`:
/// `V z ≤ 1 − W u` and `−V z ≤ 1 + W u`.
#[derive(Debug, Clone, PartialEq)]
pub struct InactivePolytope {
    polytope: Polytope,
    w: Array2<f64>,
    v: Array2<f64>,
    u: Array1<f64>,
}

impl AsRef<Polytope> for InactivePolytope {
    fn as_ref(&self) -> &Polytope {
        &self.polytope
    }
}

impl AsRef<Polytope> for Polytope {
    fn as_ref(&self) -> &Polytope {
        self
    }
}

pub fn build_polytope(p: &SubspacePartition, u: &[f64]) -> Result<InactivePolytope> {
    if u.len() != p.rank() {
        return Err(Error::DimensionMismatch { context: "active coordinate", expected: p.rank(), actual: u.len() });
    }
    if p.inactive_dim() == 0 {
        return Err(Error::invalid("partition has no inactive directions to sample"));
    }
    let u = Array1::from(u.to_vec());
    let wu = p.w().dot(&u);
    let reach = wu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if reach > 1.0 {
        log::warn!("‖Wu‖∞ = {reach} exceeds 1; the inactive polytope may be empty");
    }
    let v = p.v().clone();
    let a = concatenate![Axis(0), v, -&v];
    let b = concatenate![Axis(0), wu.mapv(|t| 1.0 - t), wu.mapv(|t| 1.0 + t)];
    Ok(InactivePolytope { polytope: Polytope::new(a, b)?, w: p.w().clone(), v, u })
}

impl InactivePolytope {
    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn active_coordinate(&self) -> &Array1<f64> {
        &self.u
    }

    pub fn design_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn inactive_dim(&self) -> usize {
        self.v.ncols()
    }
}

/// `x = Wu + Vz`.
pub fn lift(poly: &InactivePolytope, z: &Array1<f64>) -> Result<DesignVector> {
    if z.len() != poly.inactive_dim() {
        return Err(Error::DimensionMismatch { context: "inactive coordinate", expected: poly.inactive_dim(), actual: z.len() });
    }
    let violation = poly.polytope.max_violation(z);
    if violation > CONSTRAINT_TOL {
        return Err(Error::invalid(format!("inactive coordinate violates the polytope by {violation:e}")));
    }
    let x = poly.w.dot(&poly.u) + poly.v.dot(z);
    DesignVector::new(x.to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevBall {
    pub center: Array1<f64>,
    pub radius: f64,
}

/// Centre of the largest inscribed ball: `max ρ` s.t. `aᵢᵀz + ρ‖aᵢ‖ ≤ bᵢ`.
pub fn chebyshev_center(poly: &impl AsRef<Polytope>) -> Result<ChebyshevBall> {
    let poly = poly.as_ref();
    let (m, n) = poly.a.dim();
    let mut a = Array2::<f64>::zeros((m, n + 1));
    a.slice_mut(ndarray::s![.., ..n]).assign(&poly.a);
    for i in 0..m {
        a[[i, n]] = norm2(poly.a.row(i));
    }
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut bounds = vec![Bound::FREE; n + 1];
    bounds[n] = Bound::NONNEGATIVE;
    let lp = LinearProgram::maximize(objective, a, poly.b.to_vec()).with_bounds(bounds);
    match lp_solve(&lp) {
        Ok(sol) => Ok(ChebyshevBall { center: Array1::from(sol.x[..n].to_vec()), radius: sol.x[n] }),
        Err(Error::Infeasible) => Err(Error::EmptyPolytope("the constraints admit no point".into())),
        Err(Error::Unbounded) => Err(Error::invalid("polytope is unbounded")),
        Err(e) => Err(e),
    }
}

/// Markov chain position.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub z: Array1<f64>,
    pub step: u64,
    rng: StreamRng,
}

impl ChainState {
    pub fn new(z: Array1<f64>, seed: u64) -> Self {
        ChainState { z, step: 0, rng: crate::rng::seeded(seed) }
    }

    /// One hit-and-run move: uniform direction, uniform point on the chord.
    pub fn advance(&mut self, poly: &Polytope) -> Result<()> {
        let n = poly.dim();
        let slack = &poly.b - &poly.a.dot(&self.z);
        for _ in 0..RETRY_CAP {
            let mut dir = Array1::from_shape_fn(n, |_| StandardNormal.sample(&mut self.rng));
            let len = norm2(dir.view());
            if len == 0.0 {
                continue;
            }
            dir /= len;
            let ad = poly.a.dot(&dir);
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for (&ai, &si) in ad.iter().zip(slack.iter()) {
                if ai.abs() < PARALLEL_TOL {
                    continue;
                }
                let t = si.max(0.0) / ai;
                if ai > 0.0 {
                    hi = hi.min(t);
                } else {
                    lo = lo.max(t);
                }
            }
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid("polytope is unbounded along a sampled direction"));
            }
            if hi > lo {
                let t = self.rng.random_range(lo..=hi);
                self.z.scaled_add(t, &dir);
                self.step += 1;
                return Ok(());
            }
        }
        Err(Error::EmptyPolytope(format!("{RETRY_CAP} consecutive zero-length chords; the polytope is degenerate")))
    }
}

/// `n` hit-and-run samples started from the Chebyshev centre, after `burn_in`
/// moves and keeping every `thin`-th move.
pub fn hit_and_run(poly: &impl AsRef<Polytope>, n: usize, seed: u64, burn_in: usize, thin: usize) -> Result<Vec<Array1<f64>>> {
    let poly = poly.as_ref();
    if thin == 0 {
        return Err(Error::invalid("thinning interval must be at least 1"));
    }
    let ball = chebyshev_center(poly)?;
    if ball.radius <= 0.0 {
        return Err(Error::EmptyPolytope("polytope has no interior".into()));
    }
    let mut chain = ChainState::new(ball.center, seed);
    for _ in 0..burn_in {
        chain.advance(poly)?;
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        for _ in 0..thin {
            chain.advance(poly)?;
        }
        let violation = poly.max_violation(&chain.z);
        if violation > CONSTRAINT_TOL {
            return Err(Error::Numerical(format!("chain left the polytope by {violation:e}")));
        }
        out.push(chain.z.clone());
    }
    Ok(out)
}

/// Lifted designs with the chain settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub u: Vec<f64>,
    pub seed: u64,
    pub burn_in: usize,
    pub thin: usize,
    pub designs: Vec<DesignVector>,
}

impl SampleSet {
    pub fn draw(poly: &InactivePolytope, n: usize, seed: u64, burn_in: usize, thin: usize) -> Result<Self> {
        let designs = hit_and_run(poly, n, seed, burn_in, thin)?
            .iter()
            .map(|z| lift(poly, z))
            .collect::<Result<_>>()?;
        Ok(SampleSet { u: poly.u.to_vec(), seed, burn_in, thin, designs })
    }

    /// CSV with the chain settings in the header; `extra` entries (input
    /// hashes and the like) are appended to it.
    pub fn to_csv(&self, extra: &[(&str, String)]) -> Result<String> {
        let mut h = Header::new("samples");
        h.set("u", self.u.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(";"));
        h.set("seed", self.seed);
        h.set("burn_in", self.burn_in);
        h.set("thin", self.thin);
        for (k, v) in extra {
            h.set(k, v);
        }
        designs_to_csv(&self.designs, &h)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (designs, header) = designs_from_csv(text)?;
        let h = header.ok_or_else(|| Error::format("samples", "missing header line"))?;
        let u_raw = h.get("u").ok_or_else(|| Error::format("samples", "header lacks `u`"))?;
        let u = if u_raw.is_empty() {
            Vec::new()
        } else {
            u_raw.split(';').map(|v| parse_f64(v, "active coordinate")).collect::<Result<_>>()?
        };
        Ok(SampleSet { u, seed: h.get_parsed("seed")?, burn_in: h.get_parsed("burn_in")?, thin: h.get_parsed("thin")?, designs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SymmetricMatrix;
    use crate::subspace::{partition, Rank};
    use ndarray::array;
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

    fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    fn random_partition(d: usize, r: usize, seed: u64) -> SubspacePartition {
        let mut rng = crate::rng::seeded(seed);
        let g = Array2::from_shape_fn((d, d), |_| StandardNormal.sample(&mut rng));
        partition(&SymmetricMatrix::new(g.dot(&g.t())).unwrap(), Rank::Fixed(r)).unwrap()
    }

    #[test]
    fn two_dimensional_nominal_polytope() {
        let p = partition(&SymmetricMatrix::from_diagonal(&[2.0, 1.0]), Rank::Fixed(1)).unwrap();
        let poly = build_polytope(&p, &[0.0]).unwrap();
        // V = ±e₂, so rows read ±z ≤ 1
        assert_eq!(poly.polytope().b(), &array![1.0, 1.0, 1.0, 1.0]);
        assert!(poly.polytope().contains(&array![1.0]));
        assert!(!poly.polytope().contains(&array![1.1]));
    }

    #[test]
    fn zero_active_coordinate_gives_unit_rhs() {
        let p = random_partition(6, 2, 3);
        let poly = build_polytope(&p, &[0.0, 0.0]).unwrap();
        assert!(poly.polytope().b().iter().all(|&v| v == 1.0));
        assert_eq!(poly.polytope().a().dim(), (12, 4));
    }

    #[test]
    fn interior_active_coordinate_keeps_origin_feasible() {
        let mut rng = crate::rng::seeded(11);
        for seed in 0..20 {
            let p = random_partition(8, 2, seed);
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-0.9..0.9)).collect();
            let u = p.active_coordinate_slice(&x).unwrap();
            let wu = p.w().dot(&u);
            if wu.iter().any(|v| v.abs() >= 1.0) {
                continue;
            }
            let poly = build_polytope(&p, u.as_slice().unwrap()).unwrap();
            assert!(poly.polytope().contains(&Array1::zeros(6)));
        }
    }

    #[test]
    fn build_rejects_wrong_u() {
        let p = random_partition(4, 1, 1);
        assert!(build_polytope(&p, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn chebyshev_of_boxes() {
        let b = chebyshev_center(&Polytope::boxed(&[-1.0, -1.0], &[1.0, 1.0]).unwrap()).unwrap();
        assert!(b.center.iter().all(|v| v.abs() < 1e-12));
        assert!((b.radius - 1.0).abs() < 1e-12);
        let b = chebyshev_center(&Polytope::boxed(&[0.0, -1.0], &[4.0, 1.0]).unwrap()).unwrap();
        assert!((b.radius - 1.0).abs() < 1e-12);
        assert!(b.center[1].abs() < 1e-12);
        // the centre can slide along x₁ ∈ [1, 3]; check it is a valid maximizer
        assert!(b.center[0] >= 1.0 - 1e-12 && b.center[0] <= 3.0 + 1e-12);
    }

    #[test]
    fn chebyshev_of_square_box_is_unique() {
        let b = chebyshev_center(&Polytope::boxed(&[2.0, 2.0], &[4.0, 4.0]).unwrap()).unwrap();
        assert!((b.center[0] - 3.0).abs() < 1e-12 && (b.center[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_empty_and_unbounded() {
        let empty = Polytope::new(array![[1.0], [-1.0]], array![-1.0, -1.0]).unwrap();
        assert!(matches!(chebyshev_center(&empty), Err(Error::EmptyPolytope(_))));
        let open = Polytope::new(array![[1.0, 0.0]], array![1.0]).unwrap();
        assert!(chebyshev_center(&open).is_err());
    }

    #[test]
    fn chebyshev_matches_grid_search() {
        let mut rng = crate::rng::seeded(99);
        let h = 0.01;
        for _ in 0..20 {
            let m = rng.random_range(5..9);
            let rows: Vec<(f64, f64, f64)> = (0..m)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * (i as f64 + rng.random_range(0.0..0.8)) / m as f64;
                    let scale = rng.random_range(0.5..2.0);
                    (scale * th.cos(), scale * th.sin(), scale * rng.random_range(0.3..1.5))
                })
                .collect();
            let a = Array2::from_shape_fn((m, 2), |(i, j)| if j == 0 { rows[i].0 } else { rows[i].1 });
            let b = Array1::from_iter(rows.iter().map(|r| r.2));
            let poly = Polytope::new(a, b).unwrap();
            let ball = chebyshev_center(&poly).unwrap();
            let depth = |x: f64, y: f64| {
                rows.iter().map(|r| (r.2 - r.0 * x - r.1 * y) / (r.0 * r.0 + r.1 * r.1).sqrt()).fold(f64::INFINITY, f64::min)
            };
            let mut best = f64::NEG_INFINITY;
            let steps = (4.0 / h) as i32;
            for i in 0..=steps {
                for j in 0..=steps {
                    best = best.max(depth(-2.0 + i as f64 * h, -2.0 + j as f64 * h));
                }
            }
            assert!(ball.radius >= best - 1e-12);
            assert!(ball.radius - best <= h, "{} vs {}", ball.radius, best);
            assert!((depth(ball.center[0], ball.center[1]) - ball.radius).abs() < 1e-9);
        }
    }

    #[test]
    fn interval_samples_are_uniform() {
        let poly = Polytope::boxed(&[-1.0], &[1.0]).unwrap();
        let s = hit_and_run(&poly, 10_000, 4, DEFAULT_BURN_IN, 1).unwrap();
        let ks = ks_statistic(s.iter().map(|z| z[0]).collect(), |x| (x + 1.0) / 2.0);
        assert!(ks <= 0.02, "{ks}");
    }

    #[test]
    fn square_means_are_centred() {
        let poly = Polytope::boxed(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let s = hit_and_run(&poly, 10_000, 5, 100, 5).unwrap();
        for j in 0..2 {
            let mean = s.iter().map(|z| z[j]).sum::<f64>() / s.len() as f64;
            assert!(mean.abs() <= 0.03, "{mean}");
        }
    }

    #[test]
    fn triangle_marginal_is_uniform_area() {
        // z₁, z₂ ≥ 0, z₁ + z₂ ≤ 1: z₁ has CDF 1 − (1 − t)²
        let poly = Polytope::new(array![[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], array![0.0, 0.0, 1.0]).unwrap();
        let s = hit_and_run(&poly, 10_000, 6, 100, 10).unwrap();
        let ks = ks_statistic(s.iter().map(|z| z[0]).collect(), |t| 1.0 - (1.0 - t).powi(2));
        assert!(ks <= 0.02, "{ks}");
    }

    #[test]
    fn chain_is_deterministic() {
        let poly = Polytope::boxed(&[-1.0, 0.0, 2.0], &[1.0, 3.0, 2.5]).unwrap();
        let a = hit_and_run(&poly, 50, 8, 10, 2).unwrap();
        let b = hit_and_run(&poly, 50, 8, 10, 2).unwrap();
        assert_eq!(a, b);
        let c = hit_and_run(&poly, 50, 9, 10, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_polytope_fails() {
        let flat = Polytope::new(array![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], array![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(hit_and_run(&flat, 10, 1, 0, 1).is_err());
        assert!(hit_and_run(&Polytope::boxed(&[0.0], &[1.0]).unwrap(), 1, 1, 0, 0).is_err());
    }

    #[test]
    fn lift_of_origin_is_zero() {
        let p = random_partition(5, 1, 2);
        let poly = build_polytope(&p, &[0.0]).unwrap();
        let x = lift(&poly, &Array1::zeros(4)).unwrap();
        assert!(x.as_slice().iter().all(|&v| v == 0.0));
        assert!(lift(&poly, &Array1::from_elem(4, 5.0)).is_err());
        assert!(lift(&poly, &Array1::zeros(3)).is_err());
    }

    #[test]
    fn sample_csv_round_trip() {
        let p = random_partition(4, 1, 7);
        let poly = build_polytope(&p, &[0.1]).unwrap();
        let set = SampleSet::draw(&poly, 20, 3, 10, 2).unwrap();
        let text = set.to_csv(&[("partition", "abc".to_string())]).unwrap();
        assert!(text.starts_with("# schema=1 kind=samples u=0.1 seed=3 burn_in=10 thin=2 partition=abc"));
        assert_eq!(SampleSet::from_csv(&text).unwrap(), set);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn lifted_samples_respect_box_and_active_coordinate(seed in any::<u64>(), d in 3usize..12, r_pick in 0usize..3, scale in 0.0f64..0.9) {
            let r = 1 + r_pick % (d - 1);
            let p = random_partition(d, r, seed);
            let mut rng = crate::rng::seeded(seed.wrapping_add(1));
            let x0: Vec<f64> = (0..d).map(|_| rng.random_range(-scale..=scale)).collect();
            let u = p.active_coordinate_slice(&x0).unwrap();
            let poly = build_polytope(&p, u.as_slice().unwrap()).unwrap();
            let samples = hit_and_run(&poly, 200, seed, 20, 2).unwrap();
            for z in &samples {
                prop_assert!(poly.polytope().max_violation(z) <= CONSTRAINT_TOL);
                let x = lift(&poly, z).unwrap();
                prop_assert!(x.as_slice().iter().all(|v| v.abs() <= 1.0 + CONSTRAINT_TOL));
                let back = p.active_coordinate_slice(x.as_slice()).unwrap();
                prop_assert!((&back - &u).iter().all(|e| e.abs() <= 1e-10));
                let zz = p.inactive_coordinate_slice(x.as_slice()).unwrap();
                prop_assert!((&zz - z).iter().all(|e| e.abs() <= 1e-10));
            }
        }
    }
}
