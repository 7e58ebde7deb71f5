use std::path::Path;

use blade_envelope::geometry::AirfoilProfile;
use blade_envelope::ingest::doe_uniform;
use blade_envelope::testbed::SyntheticOracle;
use bladenv::artifacts;
use bladenv::config::PipelineConfig;
use bladenv::pipeline::Pipeline;

const SMALL: &str = r#"{
  "design": {"d": 6, "points_per_side": 30},
  "doe": {"k": 240, "train": 200},
  "subspace": {"m": 20000},
  "sampler": {"h": 600},
  "gating": {"random": 100, "cross_d": 10, "cross_count": 100}
}"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn bladenv(dir: &Path, config: &str, verb: &[&str]) -> i32 {
    let out = dir.join("out");
    let mut args = vec!["bladenv", "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(verb);
    bladenv::run(args)
}

#[test]
fn run_all_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    assert_eq!(bladenv(tmp.path(), &cfg, &["run-all"]), 0);
    let out = tmp.path().join("out");
    for name in artifacts::ALL {
        assert!(out.join(name).exists(), "{name}");
    }
    for fig in ["coefficients", "eigenvalues", "summary", "invariance", "envelope", "covariance", "gate", "gate_curve"] {
        assert!(out.join("report").join(format!("{fig}.svg")).exists(), "{fig}");
        assert!(out.join("report").join(format!("{fig}.csv")).exists(), "{fig}");
    }
    let p = Pipeline::new(PipelineConfig::from_json(SMALL).unwrap(), &out).unwrap();
    let gate = p.load_gate().unwrap();
    let members = gate.summaries.iter().find(|s| s.group == "members").unwrap();
    assert!(members.use_rate >= 0.99, "{members:?}");
    assert_eq!(gate.verdicts.len(), 600 + 100 + 100);
}

#[test]
fn missing_upstream_is_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    assert_eq!(bladenv(tmp.path(), &cfg, &["fit"]), 3);
    assert_eq!(bladenv(tmp.path(), &cfg, &["envelope"]), 3);
}

#[test]
fn stale_upstream_is_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    assert_eq!(bladenv(tmp.path(), &cfg, &["doe"]), 0);
    assert_eq!(bladenv(tmp.path(), &cfg, &["evaluate"]), 0);
    assert_eq!(bladenv(tmp.path(), &cfg, &["--seed", "99", "fit"]), 3);
    assert_eq!(bladenv(tmp.path(), &cfg, &["fit"]), 0);
}

#[test]
fn config_and_usage_errors_are_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), r#"{"design": {"d": 6, "colour": 1}}"#);
    assert_eq!(bladenv(tmp.path(), &bad, &["doe"]), 2);
    let missing = tmp.path().join("nope.json");
    assert_eq!(bladenv(tmp.path(), missing.to_str().unwrap(), &["doe"]), 2);
    assert_eq!(bladenv::run(["bladenv", "frobnicate"]), 2);
}

#[test]
fn mismatched_active_coordinate_is_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace(r#""sampler": {"h": 600}"#, r#""sampler": {"h": 600, "u": [0.0, 0.1, 0.2]}"#);
    let cfg = write_config(tmp.path(), &text);
    for verb in ["doe", "evaluate", "fit", "subspace"] {
        assert_eq!(bladenv(tmp.path(), &cfg, &[verb]), 0, "{verb}");
    }
    assert_eq!(bladenv(tmp.path(), &cfg, &["sample"]), 2);
}

#[test]
fn plain_tables_feed_the_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let designs = doe_uniform(6, 150, 4).unwrap();
    let oracle = SyntheticOracle::by_name("quadratic-ridge", 6, 0).unwrap();
    let mut xs = String::from("x1 x2 x3 x4 x5 x6\n");
    let mut ys = String::new();
    for x in &designs {
        let row: Vec<String> = x.as_slice().iter().map(|v| v.to_string()).collect();
        xs.push_str(&row.join(" "));
        xs.push('\n');
        ys.push_str(&format!("0.5,{}\n", oracle.evaluate(x).unwrap()));
    }
    std::fs::write(tmp.path().join("x.txt"), xs).unwrap();
    std::fs::write(tmp.path().join("y.txt"), ys).unwrap();
    let text = format!(
        r#"{{"design": {{"d": 6}}, "doe": {{"k": 150, "train": 120}},
            "qoi": {{"source": "table", "designs": "{}", "values": "{}", "column": 1}}}}"#,
        tmp.path().join("x.txt").display(),
        tmp.path().join("y.txt").display()
    );
    let p = Pipeline::new(PipelineConfig::from_json(&text).unwrap(), &tmp.path().join("out")).unwrap();
    p.doe().unwrap();
    p.evaluate().unwrap();
    let v = p.fit().unwrap();
    assert_eq!((v.train, v.test), (120, 30));
    assert!(v.test_r_squared.unwrap() > 0.999, "{v:?}");
    assert_eq!(p.load_designs().unwrap(), designs);

    let too_many = text.replace(r#""k": 150"#, r#""k": 151"#);
    let q = Pipeline::new(PipelineConfig::from_json(&too_many).unwrap(), &tmp.path().join("out2")).unwrap();
    assert_eq!(q.doe().unwrap_err().exit_code(), 2);
}

#[test]
fn external_profiles_are_gated() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    assert_eq!(bladenv(tmp.path(), &cfg, &["run-all"]), 0);
    let out = tmp.path().join("out");
    let p = Pipeline::new(PipelineConfig::from_json(SMALL).unwrap(), &out).unwrap();
    let e = p.load_envelope().unwrap();
    // the envelope mean, measured on a denser grid
    let mean = e.mean_profile().unwrap();
    let dense: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let measured = blade_envelope::geometry::resample(&mean, &dense, &dense).unwrap();
    std::fs::write(tmp.path().join("measured.csv"), measured.to_csv()).unwrap();
    let path = tmp.path().join("measured.csv");
    assert_eq!(bladenv(tmp.path(), &cfg, &["gate", "--profiles", path.to_str().unwrap()]), 0);
    let gate = p.load_gate().unwrap();
    let ext: Vec<_> = gate.verdicts.iter().filter(|v| v.group == "external").collect();
    assert_eq!(ext.len(), 1);
    assert!(ext[0].report.zeta.is_finite());

    let baseline = AirfoilProfile::read(&out.join(artifacts::BASELINE)).unwrap();
    assert_eq!(baseline.len(), 60);
    std::fs::write(tmp.path().join("bad.csv"), "side,x,y\nsuction,0,0\n").unwrap();
    let bad = tmp.path().join("bad.csv");
    assert_eq!(bladenv(tmp.path(), &cfg, &["gate", "--profiles", bad.to_str().unwrap()]), 2);
}

#[test]
fn calibrated_gate_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace(r#""sampler": {"h": 600},"#, r#""sampler": {"h": 600}, "envelope": {"gate": {"mode": "calibrate"}},"#);
    let cfg = write_config(tmp.path(), &text);
    for verb in ["doe", "evaluate", "fit", "subspace", "sample", "envelope"] {
        assert_eq!(bladenv(tmp.path(), &cfg, &[verb]), 0, "{verb}");
    }
    let p = Pipeline::new(PipelineConfig::from_json(&text).unwrap(), &tmp.path().join("out")).unwrap();
    let e = p.load_envelope().unwrap();
    assert!(e.provenance.contains_key("gate_calibration_loss"));
    assert_eq!(e.gate.beta1, 1.0);
    assert!(e.gate.beta2 > 0.0);
}
