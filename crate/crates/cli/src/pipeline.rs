//! Subcommand stages. Each stage reads the loaded panel and writes its
//! artifacts; `all` runs them in pipeline order under one manifest.

use linkage::adf::{adf, AdfLags};
use linkage::coint::{coint_matrix_with, granger_matrix, CointOptions};
use linkage::dcc::{fit_dcc, joint_loglik, mean_dynamic_correlation};
use linkage::egarch::{fit_egarch, EgarchFit, Innovation};
use linkage::nn::forecast::{run_experiment_grid, GridOptions};
use linkage::ols::{fit_panel_regression, fit_returns_regression, OlsFit};
use linkage::panel::{log_returns, read_csv, CsvSchema};
use linkage::report::LabeledMatrix;
use linkage::simulate::{metadata, prices_from_returns, simulate, SimSpec};
use linkage::stats::{box_stats, jarque_bera, moments, pearson_matrix};
use linkage::var::{fit_var, irf, stability};
use linkage::{Panel, PanelKind};
use serde::Serialize;
use serde_json::json;

use crate::artifacts::*;
use crate::config::{InputConfig, RunConfig, SeriesScale};
use crate::error::CliError;

/// Loaded input: prices, their log returns and the file digest.
pub struct Data {
    pub prices: Panel,
    pub returns: Panel,
    pub sha256: String,
}

pub fn input(config: &RunConfig) -> Result<&InputConfig, CliError> {
    config
        .input
        .as_ref()
        .ok_or_else(|| CliError::config("an [input] section with `path` is required"))
}

pub fn target(config: &RunConfig) -> Result<&str, CliError> {
    input(config)?
        .target
        .as_deref()
        .ok_or_else(|| CliError::config("`input.target` is required for this subcommand"))
}

pub fn load_data(config: &RunConfig) -> Result<Data, CliError> {
    use sha2::{Digest, Sha256};
    let input = input(config)?;
    let bytes = std::fs::read(&input.path).map_err(|e| CliError::Config {
        kind: "unreadable_input".into(),
        message: format!("cannot read input {}: {e}", input.path.display()),
        column: None,
    })?;
    let schema = CsvSchema {
        date_column: input.date_column.clone(),
        columns: input.series.clone(),
    };
    let prices = read_csv(bytes.as_slice(), &schema)?;
    for name in input.target.iter().chain(config.var.ordering.iter().flatten()) {
        if prices.index_of(name).is_none() {
            return Err(linkage::Error::MissingColumn(name.clone()).into());
        }
    }
    let returns = log_returns(&prices)?;
    Ok(Data {
        prices,
        returns,
        sha256: format!("{:x}", Sha256::digest(&bytes)),
    })
}

fn adf_lags(max: Option<usize>) -> AdfLags {
    max.map_or(AdfLags::Auto, AdfLags::Max)
}

/// Table 1 on log returns and the box-plot summary of the same returns.
pub fn stats(config: &RunConfig, data: &Data, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let r = &data.returns;
    let mut table = Vec::with_capacity(r.cols());
    let mut boxes = Vec::with_capacity(r.cols());
    for (name, col) in r.names().iter().zip(r.columns()) {
        let m = moments(col)?;
        let jb = jarque_bera(col)?;
        let unit_root = adf(col, config.stats.adf, adf_lags(config.stats.adf_max_lags))?;
        table.push(StatsRow {
            series: name.clone(),
            mean: m.mean,
            variance: m.variance,
            skewness: m.skewness,
            kurtosis: m.excess_kurtosis,
            jb_reject: jb.reject_at_5pct,
            adf_p: unit_root.p_value,
            weak_stationary: unit_root.reject_at_5pct,
        });
        let b = box_stats(col)?;
        boxes.push(BoxRow {
            series: name.clone(),
            q1: b.q1,
            median: b.median,
            q3: b.q3,
            iqr: b.iqr,
            lower_whisker: b.lower_whisker,
            upper_whisker: b.upper_whisker,
            n_outliers: b.outliers.len(),
        });
    }
    out.records("table1_stats", &table)?;
    out.records("fig3_box_stats", &boxes)
}

pub fn corr(data: &Data, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let prices = pearson_matrix(&data.prices)?;
    out.matrix("fig4_price_corr", &prices, &prices)?;
    let returns = pearson_matrix(&data.returns)?;
    out.matrix("fig4_return_corr", &returns, &returns)
}

/// Engle-Granger p-values on price levels.
pub fn coint(config: &RunConfig, data: &Data, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let opts = CointOptions {
        lags: adf_lags(config.coint.adf_max_lags),
        both_directions: config.coint.both_directions,
    };
    let m = coint_matrix_with(&data.prices, opts)?;
    out.matrix("fig5_coint_pvalues", &m.p_values, &m)
}

pub fn granger(config: &RunConfig, data: &Data, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let panel = match config.granger.on {
        SeriesScale::Prices => &data.prices,
        SeriesScale::Returns => &data.returns,
    };
    let m = granger_matrix(panel, config.granger.lags)?;
    out.matrix("fig6_granger_pvalues", &m.p_values, &m)
}

fn coefficient_rows(fit: &OlsFit) -> Vec<CoefficientRow> {
    (0..fit.names.len())
        .map(|j| CoefficientRow {
            variable: fit.names[j].clone(),
            coefficient: fit.coefficients[j],
            std_error: fit.standard_errors[j],
            t_stat: fit.t_stats[j],
            p_value: fit.p_values[j],
            ci_low: fit.conf_intervals[j].0,
            ci_high: fit.conf_intervals[j].1,
        })
        .collect()
}

fn summary_row(target: &str, fit: &OlsFit) -> OlsSummaryRow {
    OlsSummaryRow {
        target: target.to_string(),
        n: fit.n,
        k: fit.k,
        r_squared: fit.r_squared,
        adj_r_squared: fit.adj_r_squared,
        f_statistic: fit.f_statistic,
        f_p_value: fit.f_p_value,
        durbin_watson: fit.durbin_watson,
        residual_jb_p: fit.residual_jb.as_ref().map(|r| r.p_value),
    }
}

/// Target on the other series, in price levels and in log returns.
pub fn ols(config: &RunConfig, data: &Data, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let target = target(config)?;
    for (name, fit) in [
        ("table2_ols_prices", fit_panel_regression(&data.prices, target)?),
        ("table3_ols_returns", fit_returns_regression(&data.returns, target)?),
    ] {
        out.records(name, &coefficient_rows(&fit))?;
        out.records(&format!("{name}_summary"), &[summary_row(target, &fit)])?;
    }
    Ok(())
}

/// VAR(p) on log returns: coefficients, companion roots and impulse responses.
pub fn var(config: &RunConfig, data: &Data, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let r = &data.returns;
    let fit = fit_var(r, config.var.p)?;
    let mut rows = Vec::new();
    for (name, eq) in fit.names.iter().zip(&fit.per_equation) {
        for j in 0..eq.names.len() {
            rows.push(VarCoefficientRow {
                equation: name.clone(),
                regressor: eq.names[j].clone(),
                coefficient: eq.coefficients[j],
                std_error: eq.standard_errors[j],
                t_stat: eq.t_stats[j],
                p_value: eq.p_values[j],
            });
        }
    }
    out.records("var_coefficients", &rows)?;
    let cov = LabeledMatrix::from_dense(fit.names.clone(), &fit.residual_cov);
    out.matrix("var_residual_cov", &cov, &cov)?;

    let report = stability(&fit);
    let roots: Vec<RootRow> = report
        .moduli
        .iter()
        .enumerate()
        .map(|(k, &modulus)| RootRow {
            root: k + 1,
            modulus,
            stable: modulus < 1.0,
        })
        .collect();
    out.records("var_stability", &roots)?;

    let ordering = config
        .var
        .ordering
        .as_ref()
        .map(|names| names.iter().map(|n| r.index_of(n).expect("checked at load")).collect::<Vec<_>>());
    let responses = irf(&fit, config.var.irf_horizon, config.var.orthogonalized, ordering.as_deref())?;
    let irf_rows: Vec<IrfRow> = responses
        .long_form()
        .into_iter()
        .map(|(horizon, shock, response, value)| IrfRow {
            horizon,
            shock: shock.to_string(),
            response: response.to_string(),
            value,
        })
        .collect();
    out.records("fig7_irf", &irf_rows)
}

pub fn fit_margins(config: &RunConfig, data: &Data) -> Result<Vec<EgarchFit>, CliError> {
    data.returns
        .columns()
        .iter()
        .map(|c| fit_egarch(c, config.egarch.innovation).map_err(CliError::from))
        .collect()
}

pub fn egarch(data: &Data, fits: &[EgarchFit], out: &mut ArtifactWriter) -> Result<(), CliError> {
    let r = &data.returns;
    let mut sigma = Vec::with_capacity(r.rows() * r.cols());
    let mut params = Vec::with_capacity(r.cols());
    for (name, fit) in r.names().iter().zip(fits) {
        sigma.extend(r.dates().iter().zip(&fit.sigma_path).map(|(d, &s)| SigmaRow {
            date: d.to_string(),
            series: name.clone(),
            sigma: s,
        }));
        let p = fit.params;
        params.push(EgarchParamRow {
            series: name.clone(),
            mu: p.mu,
            omega: p.omega,
            alpha: p.alpha,
            gamma: p.gamma,
            beta: p.beta,
            nu: match fit.innovation_dist {
                Innovation::Normal => None,
                Innovation::StudentT { nu } => Some(nu),
            },
            loglik: fit.loglik,
            converged: fit.converged,
            iterations: fit.iterations,
        });
    }
    out.records("fig8_egarch_sigma", &sigma)?;
    out.records("egarch_params", &params)
}

/// Dynamic correlations for every pair and their time averages, ranked.
pub fn dcc(data: &Data, fits: &[EgarchFit], out: &mut ArtifactWriter) -> Result<(), CliError> {
    let r = &data.returns;
    let names = r.names();
    let fit = fit_dcc(fits, names)?;
    let mut paths = Vec::new();
    let mut means = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let pair = format!("{}/{}", names[i], names[j]);
            paths.extend(r.dates().iter().zip(&fit.r_path).map(|(d, rt)| CorrelationRow {
                date: d.to_string(),
                pair: pair.clone(),
                rho: rt[i][j],
            }));
            means.push(MeanCorrelationRow {
                rank: 0,
                series_i: names[i].clone(),
                series_j: names[j].clone(),
                mean_rho: mean_dynamic_correlation(&fit, &names[i], &names[j])?,
            });
        }
    }
    means.sort_by(|a, b| b.mean_rho.total_cmp(&a.mean_rho));
    for (k, row) in means.iter_mut().enumerate() {
        row.rank = k + 1;
    }
    out.records("fig9_dcc_correlations", &paths)?;
    out.records("dcc_mean_correlations", &means)?;
    out.records(
        "dcc_params",
        &[DccParamRow {
            alpha: fit.alpha,
            beta: fit.beta,
            loglik_correlation_part: fit.loglik_correlation_part,
            joint_loglik: joint_loglik(fits, &fit)?,
            converged: fit.converged,
            iterations: fit.iterations,
        }],
    )
}

/// The feature-set x lookback grid on price levels; returns the effective
/// model configurations for the manifest.
pub fn forecast(
    config: &RunConfig,
    seed: u64,
    data: &Data,
    out: &mut ArtifactWriter,
) -> Result<serde_json::Value, CliError> {
    let f = &config.forecast;
    let options = GridOptions {
        horizon: f.horizon,
        train_fraction: f.train_fraction,
        seed,
        learning_rate: f.learning_rate,
        epochs: f.epochs,
        batch_size: f.batch_size,
        kinds: f.models.iter().map(|m| m.kind()).collect::<Result<_, _>>()?,
        ..GridOptions::new(target(config)?)
    };
    let report = run_experiment_grid(&data.prices, &f.grid, &options)?;
    out.records("tables4to7_forecast", &report.rows)?;
    out.records("tables4to7_baseline", &report.baseline_rows)?;
    Ok(json!({ "models": report.configs, "notes": report.notes }))
}

#[derive(Serialize)]
struct SimulatedJson<'a> {
    metadata: linkage::simulate::SimMetadata,
    as_prices: bool,
    start_price: Option<f64>,
    kind: PanelKind,
    names: &'a [String],
    dates: Vec<String>,
    columns: &'a [Vec<f64>],
}

pub fn run_simulate(config: &RunConfig, seed: u64, out: &mut ArtifactWriter) -> Result<(), CliError> {
    let sim = config
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::config("a [simulate] section is required"))?;
    let spec = SimSpec {
        process: sim.process.clone(),
        n: sim.n,
        seed,
    };
    let mut panel = simulate(&spec)?;
    if sim.as_prices {
        if panel.kind() != PanelKind::LogReturn {
            return Err(CliError::config("`as_prices` needs a process that produces log returns"));
        }
        panel = prices_from_returns(&panel, &vec![sim.start_price; panel.cols()])?;
    }
    if let Some(names) = &sim.names {
        if names.len() != panel.cols() {
            return Err(CliError::config(format!(
                "{} names for {} simulated columns",
                names.len(),
                panel.cols()
            )));
        }
        panel = Panel::new(panel.dates().to_vec(), names.clone(), panel.columns().to_vec(), panel.kind())?;
    }
    let csv_name = "simulated_panel.csv";
    let mut buf = Vec::new();
    panel.write_csv(&mut buf)?;
    out.raw(csv_name, &buf)?;
    out.json(
        "simulated_panel.json",
        &SimulatedJson {
            metadata: metadata(&spec),
            as_prices: sim.as_prices,
            start_price: sim.as_prices.then_some(sim.start_price),
            kind: panel.kind(),
            names: panel.names(),
            dates: panel.dates().iter().map(ToString::to_string).collect(),
            columns: panel.columns(),
        },
    )
}
