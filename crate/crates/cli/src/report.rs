//! Figures and their data tables under `report/`.

use blade_envelope::geometry::Side;
use blade_envelope::io::{fmt_f64, render_csv, Header};
use blade_envelope::subspace::active_coordinate;

use crate::artifacts::REPORT_DIR;
use crate::config::Stage;
use crate::error::CliResult;
use crate::pipeline::Pipeline;
use crate::svg::{heatmap, Chart, Series};

const HEATMAP_CELLS: usize = 120;
const GATE_CURVE_POINTS: usize = 200;

struct Writer<'a> {
    p: &'a Pipeline,
    header: Header,
}

impl Writer<'_> {
    fn table(&self, name: &str, cols: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
        let cols: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
        let mut h = self.header.clone();
        h.set("kind", name);
        self.p.store.write(&format!("{REPORT_DIR}/{name}.csv"), &render_csv(Some(&h), &cols, &rows))
    }

    fn svg(&self, name: &str, text: &str) -> CliResult<()> {
        self.p.store.write(&format!("{REPORT_DIR}/{name}.svg"), text)
    }
}

fn row(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| fmt_f64(v)).collect()
}

pub fn write_report(p: &Pipeline) -> CliResult<()> {
    let mut header = Header::new("report");
    header.set("config", p.cfg.stage_hash(Stage::Gate));
    let w = Writer { p, header };

    let (s, validation) = p.load_fit()?;
    let designs = p.load_designs()?;
    let f = p.load_qoi()?;
    let part = p.load_partition()?;
    let sample_qoi = p.load_sample_qoi()?;
    let e = p.load_envelope()?;
    let baseline = p.load_baseline()?;
    let gate = p.load_gate()?;

    // coefficient decay
    let mags = s.sorted_magnitudes();
    w.table("coefficients", &["rank", "magnitude"], mags.iter().enumerate().map(|(i, &m)| row(&[(i + 1) as f64, m])).collect())?;
    let mut c = Chart::new("Sorted coefficient magnitudes", "rank", "|c|")
        .with(Series::line("coefficients", mags.iter().enumerate().map(|(i, &m)| ((i + 1) as f64, m)).collect()));
    c.log_y = true;
    w.svg("coefficients", &c.render())?;

    // held-out validation
    let n = validation.train;
    let test: Vec<(f64, f64)> = designs[n..]
        .iter()
        .zip(&f[n..])
        .map(|(x, &t)| Ok((t, s.predict(x)?)))
        .collect::<blade_envelope::Result<_>>()?;
    w.table("validation", &["truth", "predicted"], test.iter().map(|&(a, b)| row(&[a, b])).collect())?;
    let (lo, hi) = test.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(a, _)| (l.min(a), h.max(a)));
    let mut c = Chart::new(
        &format!("Held-out predictions (R² = {})", validation.test_r_squared.map_or("n/a".into(), |r| format!("{r:.5}"))),
        "truth",
        "surrogate",
    )
    .with(Series::markers("test designs", test.clone()));
    if lo.is_finite() {
        c = c.with(Series::line("y = x", vec![(lo, lo), (hi, hi)]));
    }
    w.svg("validation", &c.render())?;

    // eigenvalues
    let ev = part.eigenvalues();
    w.table("eigenvalues", &["index", "eigenvalue"], ev.iter().enumerate().map(|(i, &l)| row(&[(i + 1) as f64, l])).collect())?;
    let mut c = Chart::new(&format!("Gradient covariance eigenvalues (r = {})", part.rank()), "index", "eigenvalue")
        .with(Series::markers("eigenvalues", ev.iter().enumerate().map(|(i, &l)| ((i + 1) as f64, l)).collect()));
    c.log_y = true;
    w.svg("eigenvalues", &c.render())?;

    // sufficient summary
    let mut summary = Vec::with_capacity(designs.len());
    for (x, &v) in designs.iter().zip(&f) {
        summary.push((active_coordinate(&part, x)?[0], v));
    }
    w.table("summary", &["u1", "qoi"], summary.iter().map(|&(a, b)| row(&[a, b])).collect())?;
    w.svg("summary", &Chart::new("Sufficient summary", "u1 = w1ᵀx", "qoi").with(Series::markers("designs", summary)).render())?;

    // invariance of the qoi over the inactive samples
    let count = sample_qoi.best().len().min(f.len());
    let inactive = &sample_qoi.best()[..count];
    let mut rows = Vec::new();
    for (i, v) in inactive.iter().enumerate() {
        rows.push(vec!["inactive".into(), i.to_string(), fmt_f64(*v)]);
    }
    for (i, v) in f[..count].iter().enumerate() {
        rows.push(vec!["random".into(), i.to_string(), fmt_f64(*v)]);
    }
    w.table("invariance", &["group", "index", "qoi"], rows)?;
    let chart = Chart::new("Qoi over inactive samples and random designs", "sample", "qoi")
        .with(Series::markers("random designs", f[..count].iter().enumerate().map(|(i, &v)| (i as f64, v)).collect()))
        .with(Series::markers("inactive samples", inactive.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect()));
    w.svg("invariance", &chart.render())?;

    // control zone, as deviations from the baseline
    let x = e.abscissae();
    let base = baseline.ordinates();
    let mut rows = Vec::new();
    for i in 0..e.len() {
        let side = baseline.side_of(i).as_str().to_string();
        let mut r = vec![i.to_string(), side];
        r.extend(row(&[x[i], base[i], e.mu()[i], e.lower()[i], e.upper()[i]]));
        rows.push(r);
    }
    w.table("envelope", &["index", "side", "x", "baseline", "mu", "c_l", "c_u"], rows)?;
    let mut chart = Chart::new("Envelope deviation from the baseline", "x", "Δy");
    for side in [Side::Suction, Side::Pressure] {
        let range = baseline.side_range(side);
        let series = |name: &str, v: &ndarray::Array1<f64>| {
            Series::line(&format!("{} {name}", side.as_str()), range.clone().map(|i| (x[i], v[i] - base[i])).collect())
        };
        chart = chart.with(series("c_l", e.lower())).with(series("c_u", e.upper()));
    }
    w.svg("envelope", &chart.render())?;

    let cov = e.covariance().as_array();
    let rows: Vec<Vec<String>> = cov
        .indexed_iter()
        .filter(|((i, j), _)| j >= i)
        .map(|((i, j), &v)| vec![i.to_string(), j.to_string(), fmt_f64(v)])
        .collect();
    w.table("covariance", &["i", "j", "value"], rows)?;
    w.svg("covariance", &heatmap(&format!("Tolerance covariance (rank {})", e.rank()), &cov.to_owned(), HEATMAP_CELLS))?;

    // gate
    let rows = gate
        .verdicts
        .iter()
        .map(|v| {
            vec![
                v.group.clone(),
                v.report.id.clone(),
                fmt_f64(v.report.zeta),
                fmt_f64(v.report.score),
                v.report.verdict.to_string(),
                fmt_f64(v.qoi),
                fmt_f64(v.qoi_deviation),
            ]
        })
        .collect();
    w.table("gate", &["group", "id", "zeta", "score", "verdict", "qoi", "qoi_deviation"], rows)?;
    let mut chart = Chart::new("Mahalanobis distance against qoi deviation", "ζ", "|Δqoi|");
    chart.log_x = true;
    for s in &gate.summaries {
        let pts = gate.verdicts.iter().filter(|v| v.group == s.group).map(|v| (v.report.zeta, v.qoi_deviation)).collect();
        chart = chart.with(Series::markers(&s.group, pts));
    }
    w.svg("gate", &chart.render())?;

    let zmax = (3.0 * e.buffer.zeta_hi).max(2.0 * e.gate.beta3);
    let curve: Vec<(f64, f64)> = (0..=GATE_CURVE_POINTS)
        .map(|i| {
            let z = zmax * i as f64 / GATE_CURVE_POINTS as f64;
            (z, e.gate.score(z))
        })
        .collect();
    w.table("gate_curve", &["zeta", "score"], curve.iter().map(|&(a, b)| row(&[a, b])).collect())?;
    let buffer = |z: f64| Series::line(&format!("ζ = {z:.3}"), vec![(z, 0.0), (z, 1.0)]);
    let chart = Chart::new("Gate score", "ζ", "score")
        .with(Series::line("score", curve))
        .with(buffer(e.buffer.zeta_lo))
        .with(buffer(e.buffer.zeta_hi));
    w.svg("gate_curve", &chart.render())?;
    log::info!("report: written to {}", p.store.path(REPORT_DIR).display());
    Ok(())
}
