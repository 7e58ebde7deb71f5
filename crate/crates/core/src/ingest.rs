//! Input-output database: Monte Carlo designs, qoi tables, and the scalar
//! flow formulas applied to ingested flow summaries.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::DesignVector;
use crate::io::{fmt_f64, parse_f64, render_csv, CsvTable, Header};
use crate::rng;
use crate::{Error, Result};

/// Inlet/exit conditions of the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConditions {
    /// Inlet stagnation pressure, Pa.
    pub p01: f64,
    /// Inlet stagnation temperature, K.
    pub t01: f64,
    /// Exit static pressure, Pa.
    pub p2: f64,
    pub gamma: f64,
    /// Inlet density, kg/m³.
    pub rho: f64,
    pub reynolds: f64,
}

impl FlowConditions {
    /// LS89 operating point used for the reference database.
    pub const LS89: FlowConditions =
        FlowConditions { p01: 1.1e6, t01: 592.295, p2: 5.23e5, gamma: 1.4, rho: 1.2866, reynolds: 6.0e5 };

    pub fn validate(&self) -> Result<()> {
        let all = [self.p01, self.t01, self.p2, self.gamma, self.rho, self.reynolds];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("flow conditions must all be finite and strictly positive"));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::invalid(format!("heat capacity ratio must exceed 1, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// `K` i.i.d. uniform designs on `[-1, 1]^d`.
pub fn doe_uniform(d: usize, k: usize, seed: u64) -> Result<Vec<DesignVector>> {
    if d == 0 || k == 0 {
        return Err(Error::invalid(format!("doe needs d ≥ 1 and K ≥ 1, got d={d}, K={k}")));
    }
    let mut rng = rng::seeded(seed);
    Ok((0..k)
        .map(|_| DesignVector::new((0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()).expect("inside the cube"))
        .collect())
}

/// Stagnation pressure loss coefficient `(p02 − p01) / (p02 − p2)`.
///
/// No absolute value is taken, so a total-pressure drop gives a negative
/// coefficient.
pub fn loss_coefficient(p01: f64, p02: f64, p2: f64) -> Result<f64> {
    let denom = p02 - p2;
    if denom == 0.0 {
        return Err(Error::DivisionByZero("loss coefficient (p02 == p2)"));
    }
    Ok((p02 - p01) / denom)
}

/// Exit mass flow function `ṁ √T01 / p01 × 10⁴`.
pub fn mass_flow_function(mdot: f64, t01: f64, p01: f64) -> Result<f64> {
    if !(mdot > 0.0 && t01 > 0.0 && p01 > 0.0) {
        return Err(Error::invalid(format!(
            "mass flow function needs positive inputs, got mdot={mdot}, T01={t01}, p01={p01}"
        )));
    }
    Ok(mdot * t01.sqrt() / p01 * 1e4)
}

/// Isentropic Mach number from the local static pressure.
pub fn isentropic_mach(p01: f64, p: f64, gamma: f64) -> Result<f64> {
    if !(p > 0.0) || !(gamma > 1.0) {
        return Err(Error::invalid(format!("isentropic Mach needs p > 0 and gamma > 1, got p={p}, gamma={gamma}")));
    }
    if p > p01 {
        return Err(Error::invalid(format!("static pressure {p} exceeds stagnation pressure {p01}")));
    }
    let expo = (gamma - 1.0) / gamma;
    let radicand = 2.0 / (gamma - 1.0) * ((p01 / p).powf(expo) - 1.0);
    Ok(radicand.max(0.0).sqrt())
}

/// Pointwise isentropic Mach over a surface-pressure distribution.
pub fn isentropic_mach_distribution(p01: f64, pressures: &[f64], gamma: f64) -> Result<Vec<f64>> {
    pressures.iter().map(|&p| isentropic_mach(p01, p, gamma)).collect()
}

/// One row of the database.
#[derive(Debug, Clone, PartialEq)]
pub struct QoiRecord {
    pub design: DesignVector,
    pub values: BTreeMap<String, f64>,
    pub surface_pressure: Option<Vec<f64>>,
}

/// Named scalar qoi columns keyed by design id.
#[derive(Debug, Clone, PartialEq)]
pub struct QoiTable {
    pub names: Vec<String>,
    pub ids: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

impl QoiTable {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for n in &names {
            if n == "design_id" || !seen.insert(n.as_str()) || n.is_empty() || n.contains(',') {
                return Err(Error::invalid(format!("qoi name `{n}` is reserved, empty or duplicated")));
            }
        }
        Ok(QoiTable { names, ids: Vec::new(), values: Vec::new() })
    }

    pub fn push(&mut self, id: usize, row: Vec<f64>) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::DimensionMismatch { context: "qoi row", expected: self.names.len(), actual: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("qoi row for design {id} has non-finite values")));
        }
        self.ids.push(id);
        self.values.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::invalid(format!("qoi table has no column `{name}`")))?;
        Ok(self.values.iter().map(|r| r[c]).collect())
    }

    pub fn to_csv(&self, header: &Header) -> String {
        let mut cols = vec!["design_id".to_string()];
        cols.extend(self.names.iter().cloned());
        let rows: Vec<Vec<String>> = self
            .ids
            .iter()
            .zip(&self.values)
            .map(|(id, r)| std::iter::once(id.to_string()).chain(r.iter().map(|&v| fmt_f64(v))).collect())
            .collect();
        render_csv(Some(header), &cols, &rows)
    }

    pub fn from_csv(text: &str) -> Result<(Self, Option<Header>)> {
        let t = CsvTable::parse(text, "qoi table")?;
        if t.columns.first().map(String::as_str) != Some("design_id") {
            return Err(Error::format("qoi table", "first column must be `design_id`"));
        }
        let mut table = QoiTable::new(t.columns[1..].to_vec())?;
        for row in &t.rows {
            let id = row[0].parse().map_err(|_| Error::format("qoi table", format!("bad design_id `{}`", row[0])))?;
            let vals = row[1..].iter().map(|v| parse_f64(v, "qoi value")).collect::<Result<_>>()?;
            table.push(id, vals)?;
        }
        Ok((table, t.header))
    }

    /// Joins qoi rows with their designs (and optional pressure traces).
    pub fn records(&self, designs: &[DesignVector], pressures: Option<&PressureTable>) -> Result<Vec<QoiRecord>> {
        self.ids
            .iter()
            .zip(&self.values)
            .map(|(&id, row)| {
                let design = designs
                    .get(id)
                    .ok_or_else(|| Error::invalid(format!("qoi row references missing design {id}")))?
                    .clone();
                let values = self.names.iter().cloned().zip(row.iter().copied()).collect();
                let surface_pressure = pressures.and_then(|p| p.traces.get(&id).cloned());
                Ok(QoiRecord { design, values, surface_pressure })
            })
            .collect()
    }
}

pub fn designs_to_csv(designs: &[DesignVector], header: &Header) -> Result<String> {
    let d = designs.first().map_or(0, DesignVector::dim);
    if designs.iter().any(|x| x.dim() != d) {
        return Err(Error::invalid("design matrix rows differ in dimension"));
    }
    let cols: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    let rows: Vec<Vec<String>> = designs.iter().map(|x| x.as_slice().iter().map(|&v| fmt_f64(v)).collect()).collect();
    Ok(render_csv(Some(header), &cols, &rows))
}

pub fn designs_from_csv(text: &str) -> Result<(Vec<DesignVector>, Option<Header>)> {
    let t = CsvTable::parse(text, "design matrix")?;
    for (j, c) in t.columns.iter().enumerate() {
        if *c != format!("x{}", j + 1) {
            return Err(Error::format("design matrix", format!("column {} should be `x{}`, found `{c}`", j + 1, j + 1)));
        }
    }
    let designs = t
        .rows
        .iter()
        .map(|r| DesignVector::new(r.iter().map(|v| parse_f64(v, "design value")).collect::<Result<_>>()?))
        .collect::<Result<_>>()?;
    Ok((designs, t.header))
}

/// Surface pressure traces `p(s)` keyed by design id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PressureTable {
    pub traces: BTreeMap<usize, Vec<f64>>,
}

impl PressureTable {
    pub fn to_csv(&self, header: &Header) -> String {
        let cols = ["design_id", "s_index", "p"].map(String::from);
        let rows: Vec<Vec<String>> = self
            .traces
            .iter()
            .flat_map(|(id, tr)| tr.iter().enumerate().map(move |(i, &p)| vec![id.to_string(), i.to_string(), fmt_f64(p)]))
            .collect();
        render_csv(Some(header), &cols, &rows)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let t = CsvTable::parse(text, "pressure table")?;
        if t.columns != ["design_id", "s_index", "p"] {
            return Err(Error::format("pressure table", "header must be `design_id,s_index,p`"));
        }
        let mut traces: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for row in &t.rows {
            let id: usize = row[0].parse().map_err(|_| Error::format("pressure table", "bad design_id"))?;
            let idx: usize = row[1].parse().map_err(|_| Error::format("pressure table", "bad s_index"))?;
            let trace = traces.entry(id).or_default();
            if idx != trace.len() {
                return Err(Error::format("pressure table", format!("design {id}: s_index {idx} out of order")));
            }
            trace.push(parse_f64(&row[2], "pressure")?);
        }
        Ok(PressureTable { traces })
    }
}

/// Adapter for plain numeric tables as published alongside CFD campaigns:
/// one design per line (comma or whitespace separated, already scaled to
/// `[-1, 1]`) and a matching file of outputs from which `value_column`
/// (zero-based) is taken. Lines that do not parse as numbers are skipped as
/// headers.
pub fn import_plain_tables(
    designs_text: &str,
    values_text: &str,
    value_column: usize,
    name: &str,
) -> Result<(Vec<DesignVector>, QoiTable)> {
    let designs: Vec<DesignVector> =
        numeric_lines(designs_text).into_iter().map(DesignVector::new).collect::<Result<_>>()?;
    let values = numeric_lines(values_text);
    if designs.len() != values.len() {
        return Err(Error::format(
            "plain tables",
            format!("{} designs but {} output rows", designs.len(), values.len()),
        ));
    }
    let mut table = QoiTable::new(vec![name.to_string()])?;
    for (id, row) in values.iter().enumerate() {
        let v = *row
            .get(value_column)
            .ok_or_else(|| Error::format("plain tables", format!("row {id} has no column {value_column}")))?;
        table.push(id, vec![v])?;
    }
    Ok((designs, table))
}

fn numeric_lines(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter_map(|line| {
            let fields: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if fields.is_empty() {
                return None;
            }
            fields.iter().map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite())).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doe_shape_and_bounds() {
        let x = doe_uniform(20, 1000, 3).unwrap();
        assert_eq!(x.len(), 1000);
        assert!(x.iter().all(|v| v.dim() == 20 && v.as_slice().iter().all(|c| c.abs() <= 1.0)));
    }

    #[test]
    fn doe_reproducible() {
        assert_eq!(doe_uniform(4, 1, 77).unwrap(), doe_uniform(4, 1, 77).unwrap());
        assert_ne!(doe_uniform(4, 1, 77).unwrap(), doe_uniform(4, 1, 78).unwrap());
    }

    #[test]
    fn doe_rejects_empty() {
        assert!(doe_uniform(0, 5, 1).is_err());
        assert!(doe_uniform(5, 0, 1).is_err());
    }

    #[test]
    fn doe_component_means_near_zero() {
        // |mean| ≤ 3σ/√K with σ² = 1/3 → 3/√(3·10⁵) ≈ 0.0055; 0.02 is the stated bound
        let k = 100_000;
        let x = doe_uniform(5, k, 11).unwrap();
        for j in 0..5 {
            let mean = x.iter().map(|v| v.as_slice()[j]).sum::<f64>() / k as f64;
            assert!(mean.abs() <= 0.02);
        }
    }

    #[test]
    fn doe_passes_chi_squared_uniformity() {
        // 10 bins, K = 10⁴; χ²₉ critical value at 99% is 21.666
        let (d, k) = (20, 10_000);
        let x = doe_uniform(d, k, 5).unwrap();
        let mut passed = 0;
        for j in 0..d {
            let mut bins = [0usize; 10];
            for v in &x {
                let b = (((v.as_slice()[j] + 1.0) / 2.0 * 10.0) as usize).min(9);
                bins[b] += 1;
            }
            let expected = k as f64 / 10.0;
            let chi2: f64 = bins.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
            if chi2 <= 21.666 {
                passed += 1;
            }
        }
        assert!(passed as f64 >= 0.95 * d as f64, "{passed}/{d}");
    }

    #[test]
    fn loss_coefficient_values() {
        assert_eq!(loss_coefficient(1.0e6, 1.0e6, 5.0e5).unwrap(), 0.0);
        let y = loss_coefficient(1.1e6, 1.05e6, 5.23e5).unwrap();
        assert!((y - (-0.0948767)).abs() < 1e-6);
        let scaled = loss_coefficient(3.3e6, 3.15e6, 1.569e6).unwrap();
        assert!((scaled - y).abs() < 1e-12);
        assert!(matches!(loss_coefficient(1.0, 2.0, 2.0), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn mass_flow_values() {
        assert!((mass_flow_function(1.0, 1.0, 1e4).unwrap() - 1.0).abs() < 1e-15);
        let a = mass_flow_function(3.0, 500.0, 1e6).unwrap();
        let b = mass_flow_function(6.0, 500.0, 1e6).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15);
        let ls89 = FlowConditions::LS89;
        let fm = mass_flow_function(10.0, ls89.t01, ls89.p01).unwrap();
        assert!((fm - 2.21247).abs() < 1e-4, "{fm}");
        assert!(mass_flow_function(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn isentropic_mach_values() {
        assert_eq!(isentropic_mach(1e5, 1e5, 1.4).unwrap(), 0.0);
        let p = 1e5 / 1.2f64.powf(3.5);
        assert!((isentropic_mach(1e5, p, 1.4).unwrap() - 1.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let m = isentropic_mach(1e5, 1e3 * i as f64, 1.4).unwrap();
            assert!(m < prev);
            prev = m;
        }
        assert!(isentropic_mach(1e5, 2e5, 1.4).is_err());
        let dist = isentropic_mach_distribution(1e5, &[1e5, p], 1.4).unwrap();
        assert_eq!(dist.len(), 2);
    }

    #[test]
    fn flow_conditions_validation() {
        FlowConditions::LS89.validate().unwrap();
        let bad = FlowConditions { gamma: 1.0, ..FlowConditions::LS89 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn qoi_table_round_trip_is_lossless() {
        let mut t = QoiTable::new(vec!["Yp".into(), "fm".into()]).unwrap();
        t.push(0, vec![0.1 + 0.2, -1.0 / 3.0]).unwrap();
        t.push(1, vec![1e-17, 2.2124707]).unwrap();
        let h = Header::new("qoi_table").with("seed", 1);
        let (back, header) = QoiTable::from_csv(&t.to_csv(&h)).unwrap();
        assert_eq!(back, t);
        assert_eq!(header.unwrap().get("seed"), Some("1"));
    }

    #[test]
    fn qoi_names_must_be_unique() {
        assert!(QoiTable::new(vec!["Yp".into(), "Yp".into()]).is_err());
    }

    #[test]
    fn design_matrix_round_trip() {
        let x = doe_uniform(3, 4, 9).unwrap();
        let h = Header::new("design_matrix").with("seed", 9);
        let (back, header) = designs_from_csv(&designs_to_csv(&x, &h).unwrap()).unwrap();
        assert_eq!(back, x);
        assert_eq!(header.unwrap().get_parsed::<u64>("seed").unwrap(), 9);
    }

    #[test]
    fn pressure_table_round_trip_and_mach() {
        let mut p = PressureTable::default();
        p.traces.insert(0, vec![9e5, 8e5, 7e5]);
        p.traces.insert(3, vec![1.1e6, 6e5, 5.5e5]);
        let back = PressureTable::from_csv(&p.to_csv(&Header::new("pressure_table"))).unwrap();
        assert_eq!(back, p);
        let m = isentropic_mach_distribution(1.1e6, &back.traces[&3], 1.4).unwrap();
        assert_eq!(m[0], 0.0);
    }

    #[test]
    fn records_join_designs() {
        let x = doe_uniform(2, 3, 1).unwrap();
        let mut t = QoiTable::new(vec!["Yp".into()]).unwrap();
        t.push(2, vec![0.5]).unwrap();
        let rec = t.records(&x, None).unwrap();
        assert_eq!(rec[0].design, x[2]);
        assert_eq!(rec[0].values["Yp"], 0.5);
    }

    #[test]
    fn plain_table_adapter() {
        let designs = "x1 x2\n0.5 -0.25\n1 0\n";
        let values = "Yp,fm\n0.01,2.2\n0.02,2.3\n";
        let (x, t) = import_plain_tables(designs, values, 1, "fm").unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(t.column("fm").unwrap(), vec![2.2, 2.3]);
    }
}
