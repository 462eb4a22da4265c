use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use linkage::panel::{load_csv, CsvSchema};
use linkage::report::LabeledMatrix;
use linkage_cli::artifacts::*;
use serde::de::DeserializeOwned;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn linkage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linkage"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = linkage(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim_end()).expect("stderr is one JSON line")
}

fn config_path() -> String {
    data("pipeline.toml").to_string_lossy().into_owned()
}

fn fast_all(out: &Path, extra: &[&str]) {
    let config = config_path();
    let mut args = vec![
        "all",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--set",
        "forecast.epochs=1",
        "--set",
        "forecast.grid=[{feature_set = \"with_target\", lookback = 3}]",
    ];
    args.extend_from_slice(extra);
    run_ok(&args);
}

#[test]
fn missing_target_exits_two_naming_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = linkage(&[
        "stats",
        "--config",
        &config_path(),
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "input.target=Peanut",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "missing_column");
    assert_eq!(err["column"], "Peanut");
    assert!(err["message"].as_str().unwrap().contains("Peanut"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for bad in ["var.lags=2", "bogus.key=1", "forecast.models=[\"gru\"]"] {
        let out = linkage(&["forecast", "--config", &config_path(), "--out", d, "--set", bad]);
        assert_eq!(out.status.code(), Some(2), "{bad}");
        assert_eq!(stderr_json(&out)["exit_code"], 2);
    }
    let out = linkage(&["stats", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = linkage(&["nonsense", "--config", &config_path()]);
    assert_eq!(out.status.code(), Some(2));
    stderr_json(&out);
}

#[test]
fn runtime_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = linkage(&[
        "var",
        "--config",
        &config_path(),
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "var.p=400",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "too_few_observations");
}

#[test]
fn stats_table_has_one_row_per_series() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["stats", "--config", &config_path(), "--out", dir.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(dir.path().join("table1_stats.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "series,mean,variance,skewness,kurtosis,jb_reject,adf_p,weak_stationary"
    );
    assert_eq!(lines.count(), 5);
    let rows: Vec<StatsRow> = read_records(&dir.path().join("table1_stats.csv")).unwrap();
    assert!(rows.iter().all(|r| r.variance > 0.0 && (0.0..=1.0).contains(&r.adf_p)));
    let mut files: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    assert_eq!(
        files,
        ["fig3_box_stats.csv", "fig3_box_stats.json", "manifest.json", "table1_stats.csv", "table1_stats.json"]
    );
}

fn same_records<T: DeserializeOwned + PartialEq + std::fmt::Debug>(dir: &Path, name: &str) {
    let from_csv: Vec<T> = read_records(&dir.join(format!("{name}.csv"))).unwrap();
    let json = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    let from_json: Vec<T> = serde_json::from_str(&json).unwrap();
    assert!(!from_csv.is_empty(), "{name}");
    assert_eq!(from_csv, from_json, "{name}");
}

fn same_matrix(dir: &Path, name: &str, json_key: Option<&str>) {
    let csv = std::fs::read_to_string(dir.join(format!("{name}.csv"))).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap();
    let json = json_key.map_or(json.clone(), |k| json[k].clone());
    let from_json: LabeledMatrix = serde_json::from_value(json).unwrap();
    assert_eq!(LabeledMatrix::from_csv_str(&csv).unwrap(), from_json, "{name}");
}

#[test]
fn every_artifact_round_trips_between_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fast_all(d, &[]);
    same_records::<StatsRow>(d, "table1_stats");
    same_records::<BoxRow>(d, "fig3_box_stats");
    same_records::<CoefficientRow>(d, "table2_ols_prices");
    same_records::<OlsSummaryRow>(d, "table2_ols_prices_summary");
    same_records::<CoefficientRow>(d, "table3_ols_returns");
    same_records::<OlsSummaryRow>(d, "table3_ols_returns_summary");
    same_records::<VarCoefficientRow>(d, "var_coefficients");
    same_records::<RootRow>(d, "var_stability");
    same_records::<IrfRow>(d, "fig7_irf");
    same_records::<SigmaRow>(d, "fig8_egarch_sigma");
    same_records::<EgarchParamRow>(d, "egarch_params");
    same_records::<CorrelationRow>(d, "fig9_dcc_correlations");
    same_records::<MeanCorrelationRow>(d, "dcc_mean_correlations");
    same_records::<DccParamRow>(d, "dcc_params");
    same_records::<linkage::nn::forecast::ReportRow>(d, "tables4to7_forecast");
    same_records::<linkage::nn::forecast::ReportRow>(d, "tables4to7_baseline");
    same_matrix(d, "fig4_price_corr", None);
    same_matrix(d, "fig4_return_corr", None);
    same_matrix(d, "var_residual_cov", None);
    same_matrix(d, "fig5_coint_pvalues", Some("p_values"));
    same_matrix(d, "fig6_granger_pvalues", Some("p_values"));

    let irf: Vec<IrfRow> = read_records(&d.join("fig7_irf.csv")).unwrap();
    assert_eq!(irf.len(), 11 * 5 * 5);
    let sigma: Vec<SigmaRow> = read_records(&d.join("fig8_egarch_sigma.csv")).unwrap();
    assert_eq!(sigma.len(), 1000 * 5);
    assert!(sigma.iter().all(|r| r.sigma > 0.0));
    let ranks: Vec<MeanCorrelationRow> = read_records(&d.join("dcc_mean_correlations.csv")).unwrap();
    assert_eq!(ranks.len(), 10);
    assert!(ranks.windows(2).all(|w| w[0].mean_rho >= w[1].mean_rho));
}

#[test]
fn manifest_alone_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    fast_all(a.path(), &["--seed", "3"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["subcommand"], "all");
    let cfg = b.path().join("rerun.toml");
    std::fs::write(&cfg, manifest["config_toml"].as_str().unwrap()).unwrap();
    let out = b.path().join("out");
    run_ok(&["all", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    for name in manifest["artifacts"].as_array().unwrap() {
        let name = name.as_str().unwrap();
        let (x, y) = (std::fs::read(a.path().join(name)).unwrap(), std::fs::read(out.join(name)).unwrap());
        if name == "manifest.json" {
            let strip = |bytes: &[u8]| {
                let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
                v.as_object_mut().unwrap().remove("timestamp");
                v
            };
            assert_eq!(strip(&x), strip(&y));
        } else {
            assert!(x == y, "{name} differs");
        }
    }
}

#[test]
fn simulate_writes_a_loadable_panel_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    std::fs::write(
        &cfg,
        "[simulate]\nn = 120\nas_prices = true\nprocess = { type = \"white_noise\", columns = 2, sd = 0.01 }\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    run_ok(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5"]);
    let panel = load_csv(out.join("simulated_panel.csv"), &CsvSchema::default()).unwrap();
    assert_eq!((panel.rows(), panel.cols()), (121, 2));
    assert!(panel.columns().iter().all(|c| c[0] == 100.0));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("simulated_panel.json")).unwrap()).unwrap();
    assert_eq!(sidecar["metadata"]["spec"]["seed"], 5);
    assert_eq!(sidecar["metadata"]["spec"]["process"]["type"], "white_noise");
    assert_eq!(sidecar["columns"][0].as_array().unwrap().len(), 121);
}

#[test]
fn bundled_panel_matches_its_generator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = data("simulate_panel5.toml");
    run_ok(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let fresh = std::fs::read(dir.path().join("simulated_panel.csv")).unwrap();
    assert!(fresh == std::fs::read(data("panel5.csv")).unwrap());
}
