//! Descriptive moments, Jarque-Bera normality, correlation matrices and
//! box-plot statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::report::LabeledMatrix;

/// Sample moments of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n - 1) variance.
    pub variance: f64,
    pub skewness: f64,
    /// Fisher (excess) kurtosis.
    pub excess_kurtosis: f64,
}

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub reject_at_5pct: bool,
    /// Nuisance choices such as lags used or the deterministic spec.
    pub nuisance: BTreeMap<String, String>,
}

impl TestReport {
    pub fn new(test_name: &str, statistic: f64, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            test_name: test_name.to_string(),
            statistic,
            p_value,
            reject_at_5pct: p_value < 0.05,
            nuisance: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.nuisance.insert(key.to_string(), value.to_string());
        self
    }
}

pub(crate) fn check_finite(series: &[f64]) -> Result<()> {
    match series.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFiniteValue(i)),
        None => Ok(()),
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn moments(series: &[f64]) -> Result<Moments> {
    let n = series.len();
    if n < 4 {
        return Err(Error::TooFewObservations { needed: 4, got: n });
    }
    check_finite(series)?;
    let m = mean(series);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let nf = n as f64;
    let variance = m2 / (nf - 1.0);
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    if m2 <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(Moments {
        n,
        mean: m,
        variance,
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
    })
}

/// Jarque-Bera statistic `n/6 (S^2 + K^2/4)` against a chi-square(2) tail.
pub fn jarque_bera(series: &[f64]) -> Result<TestReport> {
    if series.len() < 20 {
        return Err(Error::TooFewObservations {
            needed: 20,
            got: series.len(),
        });
    }
    let m = moments(series)?;
    let stat = m.n as f64 / 6.0 * (m.skewness.powi(2) + m.excess_kurtosis.powi(2) / 4.0);
    Ok(TestReport::new("jarque_bera", stat, chi2_sf(stat, 2.0))
        .with("skewness", m.skewness)
        .with("excess_kurtosis", m.excess_kurtosis))
}

pub(crate) fn chi2_sf(x: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive df").sf(x)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson correlation of every column pair; unit diagonal.
pub fn pearson_matrix(panel: &Panel) -> Result<LabeledMatrix> {
    let k = panel.cols();
    if k < 2 {
        return Err(Error::InvalidPanel("correlation needs at least two columns".into()));
    }
    if panel.rows() < 3 {
        return Err(Error::TooFewObservations {
            needed: 3,
            got: panel.rows(),
        });
    }
    for (j, col) in panel.columns().iter().enumerate() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(Error::ZeroVariance(panel.names()[j].clone()));
        }
    }
    let mut values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let r = pearson(panel.column(i), panel.column(j));
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(LabeledMatrix::from_dense(panel.names().to_vec(), &values))
}

/// Box-plot summary with Tukey 1.5 IQR whiskers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartiles, whiskers and outliers.
///
/// Whisker fences sit at `q1 - 1.5 iqr` and `q3 + 1.5 iqr` and are pulled
/// in to the most extreme observation inside the fence.
pub fn box_stats(series: &[f64]) -> Result<BoxStats> {
    if series.len() < 5 {
        return Err(Error::TooFewObservations {
            needed: 5,
            got: series.len(),
        });
    }
    check_finite(series)?;
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = sorted.iter().copied().filter(|&v| v >= lo_fence && v <= hi_fence);
    let lower_whisker = inside.clone().fold(f64::INFINITY, f64::min);
    let upper_whisker = inside.fold(f64::NEG_INFINITY, f64::max);
    let outliers = series
        .iter()
        .copied()
        .filter(|&v| v < lo_fence || v > hi_fence)
        .collect();
    Ok(BoxStats {
        q1,
        median,
        q3,
        iqr,
        lower_whisker,
        upper_whisker,
        outliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::PanelKind;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp, StandardNormal};

    fn panel_of(cols: Vec<Vec<f64>>) -> Panel {
        let n = cols[0].len();
        let start = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
        let names = (0..cols.len()).map(|i| format!("S{i}")).collect();
        Panel::new(
            (0..n).map(|i| start + chrono::Days::new(i as u64)).collect(),
            names,
            cols,
            PanelKind::Level,
        )
        .unwrap()
    }

    #[test]
    fn constant_series_is_degenerate() {
        assert_eq!(moments(&[1.0; 4]).unwrap_err(), Error::DegenerateVariance);
        assert!(matches!(moments(&[1.0, 2.0]), Err(Error::TooFewObservations { .. })));
        assert_eq!(moments(&[1.0, f64::NAN, 1.0, 2.0]).unwrap_err(), Error::NonFiniteValue(1));
    }

    #[test]
    fn symmetric_series_has_zero_skew() {
        let xs: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let m = moments(&xs).unwrap();
        assert_eq!(m.mean, 0.0);
        assert_eq!(m.skewness, 0.0);
        // two-point distribution: kurtosis 1, excess -2
        assert!((m.excess_kurtosis + 2.0).abs() < 1e-12);
        assert!((m.variance - 100.0 / 99.0).abs() < 1e-12);
    }

    #[test]
    fn jb_accepts_normal_data_mostly() {
        let accepted = (0..200u64)
            .filter(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let xs: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
                jarque_bera(&xs).unwrap().p_value > 0.05
            })
            .count();
        assert!(accepted >= 180, "accepted {accepted}/200");
    }

    #[test]
    fn jb_rejects_exponential_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let exp = Exp::new(1.0).unwrap();
        let xs: Vec<f64> = (0..1000).map(|_| exp.sample(&mut rng)).collect();
        assert!(jarque_bera(&xs).unwrap().p_value < 0.01);
    }

    #[test]
    fn pearson_examples() {
        let a: Vec<f64> = (0..20).map(|i| ((i * 13) % 7) as f64).collect();
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let m = pearson_matrix(&panel_of(vec![a.clone(), a.clone(), neg])).unwrap();
        assert!((m.get(0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((m.get(0, 2).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(m.get(1, 1), Some(1.0));
        assert_eq!(m.get(2, 0), m.get(0, 2));

        let flat = panel_of(vec![a, vec![3.0; 20]]);
        assert_eq!(pearson_matrix(&flat).unwrap_err(), Error::ZeroVariance("S1".into()));
    }

    #[test]
    fn box_stats_examples() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        let b = box_stats(&xs).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (25.75, 50.5, 75.25));
        assert!(b.outliers.is_empty());
        assert_eq!((b.lower_whisker, b.upper_whisker), (1.0, 100.0));

        let mut spike = vec![0.0; 99];
        spike.push(10.0);
        let b = box_stats(&spike).unwrap();
        assert_eq!(b.outliers, vec![10.0]);
        assert_eq!(b.upper_whisker, 0.0);
    }

    proptest! {
        #[test]
        fn affine_equivariance(
            xs in proptest::collection::vec(-10.0f64..10.0, 8..64),
            a in 0.1f64..20.0,
            b in -50.0f64..50.0,
        ) {
            prop_assume!(moments(&xs).is_ok());
            let m = moments(&xs).unwrap();
            prop_assume!(m.variance > 1e-3);
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let my = moments(&ys).unwrap();
            prop_assert!((my.mean - (a * m.mean + b)).abs() < 1e-9 * (1.0 + my.mean.abs()));
            prop_assert!((my.skewness - m.skewness).abs() < 1e-9);
            prop_assert!((my.excess_kurtosis - m.excess_kurtosis).abs() < 1e-9);
        }

        #[test]
        fn jb_statistic_nonnegative(xs in proptest::collection::vec(-5.0f64..5.0, 20..80)) {
            if let Ok(r) = jarque_bera(&xs) {
                prop_assert!(r.statistic >= 0.0);
                prop_assert!((0.0..=1.0).contains(&r.p_value));
            }
        }

        #[test]
        fn jb_p_decreases_with_statistic(s1 in 0.0f64..50.0, s2 in 0.0f64..50.0) {
            let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
            prop_assert!(chi2_sf(lo, 2.0) >= chi2_sf(hi, 2.0));
        }

        #[test]
        fn pearson_affine_invariant(
            a in proptest::collection::vec(-3.0f64..3.0, 10..30),
            scale in 0.01f64..100.0,
            shift in -100.0f64..100.0,
        ) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * 0.5 + (i % 3) as f64).collect();
            let p = panel_of(vec![a.clone(), b.clone()]);
            prop_assume!(pearson_matrix(&p).is_ok());
            let scaled: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
            let q = panel_of(vec![scaled, b]);
            let (r1, r2) = (pearson_matrix(&p).unwrap(), pearson_matrix(&q).unwrap());
            prop_assert!((r1.get(0, 1).unwrap() - r2.get(0, 1).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn box_quartiles_ordered(xs in proptest::collection::vec(-1e3f64..1e3, 5..100)) {
            let b = box_stats(&xs).unwrap();
            prop_assert!(b.q1 <= b.median && b.median <= b.q3);
        }
    }

    #[test]
    fn symmetric_data_has_centered_median() {
        let xs = [-3.0, -1.0, 0.0, 1.0, 3.0, -2.0, 2.0];
        let b = box_stats(&xs).unwrap();
        assert!((b.median - b.q1 - (b.q3 - b.median)).abs() < 1e-12);
    }
}
