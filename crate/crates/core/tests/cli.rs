use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bess_sizer::config::load_scenario;
use bess_sizer::report::read_curve_csv;
use bess_sizer::sizing::{sweep, Indicator};

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bess-sizer"))
        .arg(args[0])
        .arg(config)
        .args(&args[1..])
        .arg("--out")
        .arg(out)
        .env_remove("BESS_SIZER_THREADS")
        .output()
        .unwrap()
}

/// The bundled microgrid, shortened to two years at an hourly step.
fn quick_microgrid(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(bundled("microgrid.toml"))
        .unwrap()
        .replace("step_minutes = 1", "step_minutes = 60")
        .replace("lifetime_years = 20", "lifetime_years = 2")
        .replace("model = \"ec\"", "model = \"ep\"");
    let p = dir.join("quick.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_bundled_microgrid_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["simulate"], &bundled("microgrid.toml"), &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["lcoe_eur_per_mwh"].as_f64().unwrap() > 0.0);
    assert!(summary["replacement_years"].is_array());
    let annual = std::fs::read_to_string(out.join("annual.csv")).unwrap();
    assert_eq!(annual.lines().count(), 21);
    let cash = std::fs::read_to_string(out.join("cashflows.csv")).unwrap();
    assert_eq!(cash.lines().count(), 22);
}

#[test]
fn negative_capacity_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(bundled("microgrid.toml"))
        .unwrap()
        .replace("size_kwh = 444", "size_kwh = -10");
    let p = dir.path().join("neg.toml");
    std::fs::write(&p, text).unwrap();
    let o = run(&["simulate"], &p, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("battery.size_kwh"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(bundled("microgrid.toml"))
        .unwrap()
        .replace("[dispatch]\n", "[dispatch]\nstrategyy = 1\n");
    let p = dir.path().join("typo.toml");
    std::fs::write(&p, text).unwrap();
    let o = run(&["simulate"], &p, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("strategyy") && e.contains("line "), "{e}");
}

#[test]
fn missing_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
application = "microgrid"
[timeseries.csv]
step_minutes = 1
load = "missing_load.csv"
pv = "missing_pv.csv"
[components.pv]
installed_kwp = 130
[components.genset]
rated_kw = 80
[components.converter]
rating_kva = 200
[battery]
size_kwh = 111
[dispatch]
strategy = "basic"
"#;
    let p = dir.path().join("csv.toml");
    std::fs::write(&p, text).unwrap();
    let o = run(&["simulate"], &p, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing_"), "{}", stderr(&o));
}

#[test]
fn bogus_factor_exits_2_listing_factors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["sensitivity", "--factor", "bogus"],
        &quick_microgrid(dir.path()),
        &dir.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    for f in [
        "control_strategy",
        "forecast_quality",
        "efficiency_precision",
        "ageing",
        "model_fidelity",
        "time_step",
    ] {
        assert!(e.contains(f), "{e}");
    }
}

#[test]
fn sweep_sizes_and_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_microgrid(dir.path());
    let one = dir.path().join("one");
    let o = run(&["sweep", "--sizes", "333"], &cfg, &one);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_curve_csv(&one.join("curve.csv")).unwrap().len(), 1);

    let ten = dir.path().join("ten");
    let o = run(&["sweep", "--range", "111:1110:111"], &cfg, &ten);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = read_curve_csv(&ten.join("curve.csv")).unwrap();
    assert_eq!(curve.len(), 10);
    assert!(ten.join("optimum.json").exists());
    let svg = std::fs::read_to_string(ten.join("curve.svg")).unwrap();
    assert!(svg.starts_with("<svg"));

    // the file holds exactly the values computed in memory
    let sc = load_scenario(&cfg).unwrap();
    let sizes: Vec<f64> = curve.iter().map(|p| p.0).collect();
    let mem = sweep(&sc.system, &sizes, Indicator::Lcoe, 1).unwrap();
    assert_eq!(curve, mem.curve.points);
}

#[test]
fn sensitivity_writes_curves_and_variation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_microgrid(dir.path());
    let out = dir.path().join("cs");
    let o = run(
        &[
            "sensitivity",
            "--factor",
            "control_strategy",
            "--sizes",
            "111,222,333",
        ],
        &cfg,
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("curve_basic.csv").exists() && out.join("curve_optimized.csv").exists());
    let deltas = std::fs::read_to_string(out.join("deltas.csv")).unwrap();
    let header = deltas.lines().next().unwrap();
    assert_eq!(
        header,
        "size_kwh,basic,optimized,variation_pct_optimized_vs_basic"
    );
    assert_eq!(deltas.lines().count(), 4);
    assert!(out.join("optimum_shift.json").exists());

    let out = dir.path().join("ts");
    let o = run(
        &["sensitivity", "--factor", "time_step", "--sizes", "222"],
        &cfg,
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for s in ["step_1min", "step_10min", "step_60min"] {
        assert!(out.join(format!("curve_{s}.csv")).exists(), "{s}");
    }
}

#[test]
fn fastapprox_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_microgrid(dir.path());
    let out = dir.path().join("fa");
    let o = run(&["fastapprox", "--sizes", "222,444"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("fastapprox.json")).unwrap())
            .unwrap();
    assert!(v["mean_error_pct"].is_number());
    assert!(out.join("fastapprox.svg").exists());
}
