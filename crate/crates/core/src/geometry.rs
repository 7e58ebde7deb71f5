//! Airfoil profiles and free-form deformation.
//!
//! A profile is stored as one vector of points: suction side leading edge to
//! trailing edge, then pressure side leading edge to trailing edge. The
//! ordinates in that order are the vector `s` that the envelope statistics
//! work on. Deformation moves points pitchwise only, so abscissae never change.

use std::ops::Range;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::io::{fmt_f64, parse_f64, render_csv, CsvTable, Header};
use crate::numerics::least_squares;
use crate::{Error, Result};

/// Slack allowed on the `[-1, 1]` design bounds (lifted samples carry
/// roundoff from `Wu + Vz`).
pub const BOUND_TOL: f64 = 1e-9;

/// Abscissae closer than this are treated as the same station.
pub const ABSCISSA_TOL: f64 = 1e-12;

/// Default number of surface points (both sides together).
pub const DEFAULT_POINTS: usize = 240;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Suction,
    Pressure,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Suction => "suction",
            Side::Pressure => "pressure",
        }
    }

    fn parse(raw: &str) -> Result<Self> {
        match raw.trim() {
            "suction" => Ok(Side::Suction),
            "pressure" => Ok(Side::Pressure),
            other => Err(Error::format("profile", format!("unknown side `{other}`"))),
        }
    }
}

/// Point in the scaled design hypercube `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DesignVector(Vec<f64>);

impl DesignVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        for (index, &value) in x.iter().enumerate() {
            if !value.is_finite() || value.abs() > 1.0 + BOUND_TOL {
                return Err(Error::OutOfBounds { index: index + 1, value });
            }
        }
        Ok(DesignVector(x))
    }

    pub fn zeros(d: usize) -> Self {
        DesignVector(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_array(&self) -> Array1<f64> {
        Array1::from(self.0.clone())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for DesignVector {
    type Error = Error;
    fn try_from(x: Vec<f64>) -> Result<Self> {
        DesignVector::new(x)
    }
}

impl From<DesignVector> for Vec<f64> {
    fn from(x: DesignVector) -> Self {
        x.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AirfoilProfile {
    x: Vec<f64>,
    y: Vec<f64>,
    n_suction: usize,
}

impl AirfoilProfile {
    pub fn new(suction: (Vec<f64>, Vec<f64>), pressure: (Vec<f64>, Vec<f64>)) -> Result<Self> {
        let (sx, sy) = suction;
        let (px, py) = pressure;
        if sx.len() != sy.len() || px.len() != py.len() {
            return Err(Error::invalid("profile abscissae and ordinates differ in length"));
        }
        let n_suction = sx.len();
        let profile = AirfoilProfile { x: [sx, px].concat(), y: [sy, py].concat(), n_suction };
        profile.validate()?;
        Ok(profile)
    }

    fn validate(&self) -> Result<()> {
        if self.len() < 3 {
            return Err(Error::invalid(format!("a profile needs at least 3 points, got {}", self.len())));
        }
        if self.n_suction == 0 || self.n_suction == self.len() {
            return Err(Error::invalid("a profile needs points on both sides"));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("profile coordinates must be finite"));
        }
        for side in [Side::Suction, Side::Pressure] {
            if self.side_x(side).windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid(format!("{} side abscissae are not strictly ascending", side.as_str())));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.x
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.y
    }

    pub fn suction_len(&self) -> usize {
        self.n_suction
    }

    pub fn side_range(&self, side: Side) -> Range<usize> {
        match side {
            Side::Suction => 0..self.n_suction,
            Side::Pressure => self.n_suction..self.len(),
        }
    }

    pub fn side_x(&self, side: Side) -> &[f64] {
        &self.x[self.side_range(side)]
    }

    pub fn side_y(&self, side: Side) -> &[f64] {
        &self.y[self.side_range(side)]
    }

    pub fn side_of(&self, index: usize) -> Side {
        if index < self.n_suction {
            Side::Suction
        } else {
            Side::Pressure
        }
    }

    /// Same abscissae, new ordinates.
    pub fn with_ordinates(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.len() {
            return Err(Error::DimensionMismatch { context: "profile ordinates", expected: self.len(), actual: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("profile ordinates must be finite"));
        }
        Ok(AirfoilProfile { x: self.x.clone(), y, n_suction: self.n_suction })
    }

    pub fn shares_abscissae(&self, other: &AirfoilProfile) -> bool {
        self.n_suction == other.n_suction
            && self.len() == other.len()
            && self.x.iter().zip(&other.x).all(|(a, b)| (a - b).abs() <= ABSCISSA_TOL)
    }

    pub fn check_same_grid(&self, other: &AirfoilProfile) -> Result<()> {
        if self.shares_abscissae(other) {
            Ok(())
        } else {
            Err(Error::AbscissaMismatch(format!(
                "{} points ({} suction) vs {} points ({} suction)",
                self.len(),
                self.n_suction,
                other.len(),
                other.n_suction
            )))
        }
    }

    pub fn to_csv(&self) -> String {
        self.to_csv_with(Header::new("profile"))
    }

    /// CSV with extra header entries.
    pub fn to_csv_with(&self, header: Header) -> String {
        let header = header.with("points", self.len());
        let rows: Vec<Vec<String>> = (0..self.len())
            .map(|i| vec![self.side_of(i).as_str().to_string(), fmt_f64(self.x[i]), fmt_f64(self.y[i])])
            .collect();
        render_csv(Some(&header), &["side".into(), "x".into(), "y".into()], &rows)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let table = CsvTable::parse(text, "profile")?;
        let (Some(cs), Some(cx), Some(cy)) = (table.column("side"), table.column("x"), table.column("y")) else {
            return Err(Error::format("profile", "header must be `side,x,y`"));
        };
        let mut suction = (Vec::new(), Vec::new());
        let mut pressure = (Vec::new(), Vec::new());
        for row in &table.rows {
            let target = match Side::parse(&row[cs])? {
                Side::Suction => &mut suction,
                Side::Pressure => &mut pressure,
            };
            target.0.push(parse_f64(&row[cx], "profile x")?);
            target.1.push(parse_f64(&row[cy], "profile y")?);
        }
        AirfoilProfile::new(suction, pressure)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&crate::io::read_file(path)?)
    }

    /// Built-in cambered test profile made of two cubic arcs on `[0, 1]`,
    /// with cosine-clustered abscissae.
    pub fn synthetic_baseline(points_per_side: usize) -> Self {
        let n = points_per_side.max(2);
        let xs: Vec<f64> = (0..n)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
            .collect();
        let suction: Vec<f64> = xs.iter().map(|&x| x * (1.0 - x) * (0.45 - 0.2 * x)).collect();
        let pressure: Vec<f64> = xs.iter().map(|&x| x * (1.0 - x) * (0.15 - 0.25 * x)).collect();
        AirfoilProfile::new((xs.clone(), suction), (xs, pressure)).expect("synthetic profile is well formed")
    }
}

/// Piecewise-linear resampling of each side onto new abscissae.
pub fn resample(profile: &AirfoilProfile, target_suction: &[f64], target_pressure: &[f64]) -> Result<AirfoilProfile> {
    let ys = interpolate_side(profile, Side::Suction, target_suction)?;
    let yp = interpolate_side(profile, Side::Pressure, target_pressure)?;
    AirfoilProfile::new((target_suction.to_vec(), ys), (target_pressure.to_vec(), yp))
}

/// Resamples `profile` onto the abscissae of `grid`.
pub fn resample_onto(profile: &AirfoilProfile, grid: &AirfoilProfile) -> Result<AirfoilProfile> {
    resample(profile, grid.side_x(Side::Suction), grid.side_x(Side::Pressure))
}

fn interpolate_side(profile: &AirfoilProfile, side: Side, targets: &[f64]) -> Result<Vec<f64>> {
    let xs = profile.side_x(side);
    let ys = profile.side_y(side);
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    targets
        .iter()
        .map(|&t| {
            if !(t >= lo - ABSCISSA_TOL && t <= hi + ABSCISSA_TOL) {
                return Err(Error::Extrapolation { side: side.as_str(), abscissa: t, lo, hi });
            }
            match xs.binary_search_by(|v| v.total_cmp(&t)) {
                Ok(i) => Ok(ys[i]),
                Err(0) => Ok(ys[0]),
                Err(i) if i == xs.len() => Ok(ys[xs.len() - 1]),
                Err(i) => {
                    let w = (t - xs[i - 1]) / (xs[i] - xs[i - 1]);
                    Ok(ys[i - 1] + w * (ys[i] - ys[i - 1]))
                }
            }
        })
        .collect()
}

/// Pitchwise displacement `profile − baseline` at shared abscissae.
pub fn displacement(profile: &AirfoilProfile, baseline: &AirfoilProfile) -> Result<Vec<f64>> {
    profile.check_same_grid(baseline)?;
    Ok(profile.ordinates().iter().zip(baseline.ordinates()).map(|(a, b)| a - b).collect())
}

/// FFD box with `stations × rows` control nodes that move pitchwise.
///
/// Node `(station i, row j)` drives design coordinate `j · stations + i`.
/// A point at normalized box position `(s, t)` receives weight
/// `B_{i,stations−1}(s) · B_{j,rows−1}(t)` from that node, and a unit design
/// coordinate displaces the node by `amplitude` (in axial chords).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfdLattice {
    pub stations: usize,
    pub rows: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub amplitude: f64,
}

impl FfdLattice {
    pub const DEFAULT_AMPLITUDE: f64 = 0.015;
    pub const DEFAULT_MARGIN: f64 = 0.05;

    /// Box around `baseline` padded by `margin` on every side.
    pub fn enclosing(baseline: &AirfoilProfile, stations: usize, rows: usize, amplitude: f64, margin: f64) -> Result<Self> {
        if stations == 0 || rows == 0 {
            return Err(Error::invalid("FFD lattice needs at least one station and one row"));
        }
        if !(margin > 0.0) || !amplitude.is_finite() {
            return Err(Error::invalid("FFD margin must be positive and amplitude finite"));
        }
        let fold = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let (x0, x1) = fold(baseline.abscissae());
        let (y0, y1) = fold(baseline.ordinates());
        Ok(FfdLattice {
            stations,
            rows,
            x_min: x0 - margin,
            x_max: x1 + margin,
            y_min: y0 - margin,
            y_max: y1 + margin,
            amplitude,
        })
    }

    /// Standard layout for a `d`-dimensional space: `d/2` stations on two
    /// rows when `d` is even, a single row otherwise.
    pub fn for_dimension(baseline: &AirfoilProfile, d: usize, amplitude: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("design dimension must be at least 1"));
        }
        let (stations, rows) = if d % 2 == 0 { (d / 2, 2) } else { (d, 1) };
        Self::enclosing(baseline, stations, rows, amplitude, Self::DEFAULT_MARGIN)
    }

    pub fn dim(&self) -> usize {
        self.stations * self.rows
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x > self.x_min && x < self.x_max && y > self.y_min && y < self.y_max
    }

    /// Bernstein weights of every node at `(x, y)`.
    pub fn weights(&self, x: f64, y: f64) -> Vec<f64> {
        let s = (x - self.x_min) / (self.x_max - self.x_min);
        let t = (y - self.y_min) / (self.y_max - self.y_min);
        let bs = bernstein_all(self.stations - 1, s);
        let bt = bernstein_all(self.rows - 1, t);
        let mut w = Vec::with_capacity(self.dim());
        for bj in &bt {
            for bi in &bs {
                w.push(bi * bj);
            }
        }
        w
    }

    /// `N × d` matrix mapping a design vector to pitchwise displacements of
    /// the baseline points.
    pub fn displacement_matrix(&self, baseline: &AirfoilProfile) -> Result<Array2<f64>> {
        let n = baseline.len();
        let mut m = Array2::<f64>::zeros((n, self.dim()));
        for k in 0..n {
            let (x, y) = (baseline.abscissae()[k], baseline.ordinates()[k]);
            if !self.contains(x, y) {
                return Err(Error::invalid(format!("baseline point ({x}, {y}) is outside the FFD box")));
            }
            for (j, w) in self.weights(x, y).into_iter().enumerate() {
                m[[k, j]] = self.amplitude * w;
            }
        }
        Ok(m)
    }

    pub fn deform(&self, baseline: &AirfoilProfile, x: &DesignVector) -> Result<AirfoilProfile> {
        Deformer::new(baseline, self)?.deform(x)
    }
}

/// Baseline plus its precomputed displacement matrix, for deforming many
/// designs.
#[derive(Debug, Clone)]
pub struct Deformer {
    baseline: AirfoilProfile,
    matrix: Array2<f64>,
}

impl Deformer {
    pub fn new(baseline: &AirfoilProfile, lattice: &FfdLattice) -> Result<Self> {
        Ok(Deformer { baseline: baseline.clone(), matrix: lattice.displacement_matrix(baseline)? })
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn baseline(&self) -> &AirfoilProfile {
        &self.baseline
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn displacement_field(&self, x: &DesignVector) -> Result<Array1<f64>> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { context: "design vector", expected: self.dim(), actual: x.dim() });
        }
        Ok(self.matrix.dot(&x.to_array()))
    }

    pub fn deform(&self, x: &DesignVector) -> Result<AirfoilProfile> {
        let delta = self.displacement_field(x)?;
        let y = self.baseline.ordinates().iter().zip(delta.iter()).map(|(b, d)| b + d).collect();
        self.baseline.with_ordinates(y)
    }

    /// Least-squares design coordinates whose deformation best matches
    /// `profile` (no bound check: the result may leave the hypercube).
    pub fn project(&self, profile: &AirfoilProfile) -> Result<Array1<f64>> {
        let d = Array1::from(displacement(profile, &self.baseline)?);
        least_squares(self.matrix.view(), d.view())
    }
}

fn bernstein_all(degree: usize, t: f64) -> Vec<f64> {
    (0..=degree)
        .map(|i| binomial(degree, i) * t.powi(i as i32) * (1.0 - t).powi((degree - i) as i32))
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn baseline() -> AirfoilProfile {
        AirfoilProfile::synthetic_baseline(DEFAULT_POINTS / 2)
    }

    fn lattice(d: usize) -> FfdLattice {
        FfdLattice::for_dimension(&baseline(), d, FfdLattice::DEFAULT_AMPLITUDE).unwrap()
    }

    #[test]
    fn synthetic_baseline_shape() {
        let b = baseline();
        assert_eq!(b.len(), 240);
        assert_eq!(b.suction_len(), 120);
        for (s, p) in b.side_y(Side::Suction).iter().zip(b.side_y(Side::Pressure)) {
            assert!(s >= p);
        }
    }

    #[test]
    fn standard_layouts() {
        let l20 = lattice(20);
        assert_eq!((l20.stations, l20.rows), (10, 2));
        let l30 = lattice(30);
        assert_eq!((l30.stations, l30.rows), (15, 2));
    }

    #[test]
    fn zero_design_is_identity() {
        let b = baseline();
        let out = lattice(20).deform(&b, &DesignVector::zeros(20)).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn single_component_shifts_by_weight_times_amplitude() {
        let b = baseline();
        let l = lattice(20);
        let mut x = vec![0.0; 20];
        x[7] = 1.0;
        let x = DesignVector::new(x).unwrap();
        let k = 33;
        let w = l.weights(b.abscissae()[k], b.ordinates()[k])[7];
        let field = Deformer::new(&b, &l).unwrap().displacement_field(&x).unwrap();
        assert_eq!(field[k], w * l.amplitude);
        let out = l.deform(&b, &x).unwrap();
        assert!((out.ordinates()[k] - b.ordinates()[k] - w * l.amplitude).abs() < 1e-16);
        assert_eq!(out.abscissae(), b.abscissae());
    }

    #[test]
    fn weights_partition_unity() {
        let l = lattice(30);
        let sum: f64 = l.weights(0.3, 0.01).iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn out_of_bounds_design_rejected() {
        let err = DesignVector::new(vec![0.0, 1.5]).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { index: 2, value } if value == 1.5));
    }

    #[test]
    fn box_must_contain_baseline() {
        let b = baseline();
        let mut l = lattice(20);
        l.x_max = 0.5;
        assert!(l.deform(&b, &DesignVector::zeros(20)).is_err());
    }

    #[test]
    fn resample_identity_and_linear() {
        let b = baseline();
        assert_eq!(resample_onto(&b, &b).unwrap(), b);

        let p = AirfoilProfile::new((vec![0.0, 1.0], vec![0.0, 1.0]), (vec![0.0, 1.0], vec![0.0, -1.0])).unwrap();
        let r = resample(&p, &[0.5], &[0.25, 0.5]).unwrap();
        assert_eq!(r.ordinates(), &[0.5, -0.25, -0.5]);
    }

    #[test]
    fn resample_rejects_extrapolation() {
        let p = AirfoilProfile::new((vec![0.0, 1.0], vec![0.0, 1.0]), (vec![0.0, 1.0], vec![0.0, -1.0])).unwrap();
        let err = resample(&p, &[1.5], &[0.5]).unwrap_err();
        assert!(matches!(err, Error::Extrapolation { abscissa, .. } if abscissa == 1.5));
    }

    #[test]
    fn resample_error_is_second_order_in_spacing() {
        // analytic curve sin(3x) sampled densely, downsampled, compared on a fine grid
        let n = 401;
        let fine: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let f = |x: f64| (3.0 * x).sin();
        let dense = AirfoilProfile::new(
            (fine.clone(), fine.iter().map(|&x| f(x)).collect()),
            (fine.clone(), fine.iter().map(|&x| -f(x)).collect()),
        )
        .unwrap();
        let coarse_x: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
        let coarse = resample(&dense, &coarse_x, &coarse_x).unwrap();
        let back = resample(&coarse, &fine, &fine).unwrap();
        let h = 0.05;
        let bound = 9.0 * h * h / 8.0; // max|f''| h² / 8
        for (i, &x) in fine.iter().enumerate() {
            assert!((back.ordinates()[i] - f(x)).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn displacement_of_uniform_shift() {
        let b = baseline();
        let shifted = b.with_ordinates(b.ordinates().iter().map(|y| y + 0.25).collect()).unwrap();
        let d = displacement(&shifted, &b).unwrap();
        assert!(d.iter().all(|v| (v - 0.25).abs() < 1e-15));
        assert!(displacement(&b, &b).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn displacement_requires_shared_grid() {
        let a = AirfoilProfile::synthetic_baseline(10);
        let b = AirfoilProfile::synthetic_baseline(11);
        assert!(matches!(displacement(&a, &b), Err(Error::AbscissaMismatch(_))));
    }

    #[test]
    fn csv_round_trip() {
        let b = baseline();
        assert_eq!(AirfoilProfile::from_csv(&b.to_csv()).unwrap(), b);
    }

    #[test]
    fn csv_rejects_descending_side() {
        let text = "side,x,y\nsuction,0,0\nsuction,1,0.1\nsuction,0.5,0.1\npressure,0,0\npressure,1,0\n";
        assert!(AirfoilProfile::from_csv(text).is_err());
    }

    #[test]
    fn projection_recovers_design() {
        let b = baseline();
        let def = Deformer::new(&b, &lattice(20)).unwrap();
        let x = DesignVector::new((0..20).map(|i| ((i * 7) % 11) as f64 / 11.0 - 0.5).collect()).unwrap();
        let p = def.deform(&x).unwrap();
        let back = def.project(&p).unwrap();
        for i in 0..20 {
            assert!((back[i] - x.as_slice()[i]).abs() < 1e-6, "{i}: {} vs {}", back[i], x.as_slice()[i]);
        }
    }

    fn design(d: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..=1.0, d)
    }

    proptest! {
        #[test]
        fn negated_design_negates_displacement(x in design(20)) {
            let b = baseline();
            let def = Deformer::new(&b, &lattice(20)).unwrap();
            let pos = def.displacement_field(&DesignVector::new(x.clone()).unwrap()).unwrap();
            let neg = def.displacement_field(&DesignVector::new(x.iter().map(|v| -v).collect()).unwrap()).unwrap();
            for (p, n) in pos.iter().zip(neg.iter()) {
                prop_assert_eq!(*p, -*n);
            }
        }

        #[test]
        fn deformation_is_affine(x in design(20), y in design(20), alpha in -0.5f64..0.5, beta in -0.5f64..0.5) {
            let b = baseline();
            let def = Deformer::new(&b, &lattice(20)).unwrap();
            let disp = |v: Vec<f64>| displacement(&def.deform(&DesignVector::new(v).unwrap()).unwrap(), &b).unwrap();
            let combo: Vec<f64> = x.iter().zip(&y).map(|(a, c)| alpha * a + beta * c).collect();
            let lhs = disp(combo);
            let dx = disp(x);
            let dy = disp(y);
            for i in 0..lhs.len() {
                prop_assert!((lhs[i] - (alpha * dx[i] + beta * dy[i])).abs() <= 1e-12);
            }
        }

        #[test]
        fn resample_preserves_shared_knots(pick in proptest::collection::btree_set(0usize..120, 2..20)) {
            let b = baseline();
            let idx: Vec<usize> = pick.into_iter().collect();
            let xs: Vec<f64> = idx.iter().map(|&i| b.side_x(Side::Suction)[i]).collect();
            let xp: Vec<f64> = idx.iter().map(|&i| b.side_x(Side::Pressure)[i]).collect();
            let r = resample(&b, &xs, &xp).unwrap();
            for (k, &i) in idx.iter().enumerate() {
                prop_assert_eq!(r.side_y(Side::Suction)[k], b.side_y(Side::Suction)[i]);
                prop_assert_eq!(r.side_y(Side::Pressure)[k], b.side_y(Side::Pressure)[i]);
            }
        }
    }
}
