//! Explanatory regressions of redemption rates: the frequency/severity
//! decomposition, the macro factor model, the flow-performance model,
//! the VIX-conditional average and autocorrelation diagnostics.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowdata::CategorySeries;
use crate::special::norm_cdf;

/// Least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Intercept first when one was requested.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// 1 − SSR/Σ(y − ȳ)², floored at zero.
    pub centered_r2: f64,
    pub residual_variance: f64,
    pub n_obs: usize,
    pub has_intercept: bool,
}

impl RegressionResult {
    /// Slope on the `j`-th regressor (excluding the intercept).
    pub fn slope(&self, j: usize) -> f64 {
        self.coefficients[j + usize::from(self.has_intercept)]
    }

    pub fn slope_t(&self, j: usize) -> f64 {
        self.t_stats[j + usize::from(self.has_intercept)]
    }
}

/// Relative pivot below which the normal equations count as singular.
const SINGULAR_TOL: f64 = 1e-10;

/// Ordinary least squares of `y` on the columns of `x` via the normal
/// equations.
pub fn ols(y: &[f64], x: &[Vec<f64>], include_intercept: bool) -> Result<RegressionResult> {
    let n = y.len();
    let k = x.len() + usize::from(include_intercept);
    if x.iter().any(|c| c.len() != n) {
        return Err(Error::Input("regressor length differs from the response".into()));
    }
    if n <= k {
        return Err(Error::SampleSize { need: k + 1, got: n });
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Input("regression data contain missing or non-finite values".into()));
    }
    if k == 0 {
        return Err(Error::Input("regression without any regressor".into()));
    }
    let design = DMatrix::from_fn(n, k, |i, j| {
        if include_intercept {
            if j == 0 { 1.0 } else { x[j - 1][i] }
        } else {
            x[j][i]
        }
    });
    // Scale columns to unit norm so the pivot test is scale free.
    let norms: Vec<f64> = (0..k).map(|j| design.column(j).norm()).collect();
    if norms.iter().any(|v| *v == 0.0) {
        return Err(Error::SingularDesign);
    }
    let scaled = DMatrix::from_fn(n, k, |i, j| design[(i, j)] / norms[j]);
    let yv = DVector::from_column_slice(y);
    let xtx = scaled.transpose() * &scaled;
    let chol = xtx.clone().cholesky().ok_or(Error::SingularDesign)?;
    let l = chol.l();
    let diag: Vec<f64> = (0..k).map(|j| l[(j, j)]).collect();
    let dmax = diag.iter().fold(0.0f64, |m, v| m.max(*v));
    if diag.iter().any(|v| *v < SINGULAR_TOL.sqrt() * dmax) {
        return Err(Error::SingularDesign);
    }
    let beta_scaled = chol.solve(&(scaled.transpose() * &yv));
    let inv = chol.inverse();
    let coefficients: Vec<f64> = (0..k).map(|j| beta_scaled[j] / norms[j]).collect();
    let fitted = &design * DVector::from_column_slice(&coefficients);
    let ssr: f64 = (0..n).map(|i| (y[i] - fitted[i]).powi(2)).sum();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let residual_variance = ssr / (n - k) as f64;
    let std_errors: Vec<f64> = (0..k).map(|j| (residual_variance * inv[(j, j)]).sqrt() / norms[j]).collect();
    let t_stats = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
        .collect();
    let centered_r2 = if sst > 0.0 { (1.0 - ssr / sst).clamp(0.0, 1.0) } else { 0.0 };
    Ok(RegressionResult {
        coefficients,
        std_errors,
        t_stats,
        centered_r2,
        residual_variance,
        n_obs: n,
        has_intercept: include_intercept,
    })
}

/// The three nested fits of the decomposition R = F × R*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFits {
    /// R(t) on the frequency F(t).
    pub frequency: RegressionResult,
    /// R(t) on the severity R*(t).
    pub severity: RegressionResult,
    /// R(t) on both.
    pub joint: RegressionResult,
}

/// Minimum number of observations of the decomposition and
/// autocorrelation diagnostics.
pub const MIN_OBS: usize = 30;

/// Regresses the rate on its frequency and severity components, using the
/// days where the severity is defined.
pub fn decomposition_fits(s: &CategorySeries) -> Result<DecompositionFits> {
    let mut rate = Vec::new();
    let mut freq = Vec::new();
    let mut sev = Vec::new();
    for i in 0..s.len() {
        if let Some(v) = s.severity[i] {
            rate.push(s.rate[i]);
            freq.push(s.frequency[i]);
            sev.push(v);
        }
    }
    if rate.len() < MIN_OBS {
        return Err(Error::SampleSize { need: MIN_OBS, got: rate.len() });
    }
    let lenient = |cols: &[Vec<f64>]| match ols(&rate, cols, true) {
        // A component that never varies explains nothing.
        Err(Error::SingularDesign) => ols(&rate, &[], true).map(|mut r| {
            r.coefficients.extend(std::iter::repeat_n(0.0, cols.len()));
            r.std_errors.extend(std::iter::repeat_n(f64::NAN, cols.len()));
            r.t_stats.extend(std::iter::repeat_n(0.0, cols.len()));
            r
        }),
        other => other,
    };
    let frequency = lenient(&[freq.clone()])?;
    let severity = lenient(&[sev.clone()])?;
    let joint = match ols(&rate, &[freq, sev], true) {
        // One component is constant: the joint model collapses onto the
        // better single-regressor fit.
        Err(Error::SingularDesign) => {
            if frequency.centered_r2 >= severity.centered_r2 {
                frequency.clone()
            } else {
                severity.clone()
            }
        }
        other => other?,
    };
    Ok(DecompositionFits { frequency, severity, joint })
}

/// A dated observation series.
pub type Dated = Vec<(NaiveDate, f64)>;

/// Reads a `date,value` CSV file (with header, ISO dates).
pub fn read_factor_csv<R: Read>(reader: R) -> Result<Dated> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Input(format!("factor file row {}: {e}", i + 2)))?;
        if row.len() < 2 {
            return Err(Error::Input(format!("factor file row {}: expected date,value", i + 2)));
        }
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d")
            .map_err(|e| Error::Input(format!("factor file row {}: bad date '{}': {e}", i + 2, &row[0])))?;
        let value: f64 = row[1]
            .parse()
            .map_err(|e| Error::Input(format!("factor file row {}: bad value '{}': {e}", i + 2, &row[1])))?;
        out.push((date, value));
    }
    out.sort_by_key(|p| p.0);
    if out.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Input("factor file has duplicate dates".into()));
    }
    Ok(out)
}

/// Macro factors over an h-day horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSeries {
    pub dates: Vec<NaiveDate>,
    pub bond_return: Vec<f64>,
    pub stock_return: Vec<f64>,
    pub vol_change: Vec<f64>,
    pub horizon: usize,
}

impl FactorSeries {
    /// Builds h-day total returns of the bond and stock index levels and
    /// the h-day change of the volatility index, on the dates common to
    /// all three inputs.
    pub fn from_levels(bond: &Dated, stock: &Dated, vix: &Dated, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Domain("horizon must be at least one day".into()));
        }
        let b: BTreeMap<_, _> = bond.iter().copied().collect();
        let s: BTreeMap<_, _> = stock.iter().copied().collect();
        let v: BTreeMap<_, _> = vix.iter().copied().collect();
        let common: Vec<(NaiveDate, f64, f64, f64)> = b
            .iter()
            .filter_map(|(d, bv)| Some((*d, *bv, *s.get(d)?, *v.get(d)?)))
            .collect();
        if common.len() <= horizon {
            return Err(Error::SampleSize { need: horizon + 1, got: common.len() });
        }
        let mut out = FactorSeries {
            dates: Vec::new(),
            bond_return: Vec::new(),
            stock_return: Vec::new(),
            vol_change: Vec::new(),
            horizon,
        };
        for t in horizon..common.len() {
            let (d, b1, s1, v1) = common[t];
            let (_, b0, s0, v0) = common[t - horizon];
            if b0 <= 0.0 || s0 <= 0.0 {
                return Err(Error::InvalidDenominator(format!("nonpositive index level before {d}")));
            }
            out.dates.push(d);
            out.bond_return.push(b1 / b0 - 1.0);
            out.stock_return.push(s1 / s0 - 1.0);
            out.vol_change.push(v1 - v0);
        }
        Ok(out)
    }
}

/// Regression of the redemption rate on the bond, stock and volatility
/// factors, on the dates shared by both series.
pub fn macro_fit(s: &CategorySeries, f: &FactorSeries) -> Result<RegressionResult> {
    let idx: BTreeMap<NaiveDate, usize> = f.dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let mut y = Vec::new();
    let mut cols = vec![Vec::new(), Vec::new(), Vec::new()];
    for (d, r) in s.dates.iter().zip(&s.rate) {
        if let Some(&i) = idx.get(d) {
            y.push(*r);
            cols[0].push(f.bond_return[i]);
            cols[1].push(f.stock_return[i]);
            cols[2].push(f.vol_change[i]);
        }
    }
    ols(&y, &cols, true)
}

/// Default rolling window of the market-model regressions.
pub const DEFAULT_ALPHA_WINDOW: usize = 60;
const HYPOTHESIS_Z: f64 = 1.96;

/// Two-stage flow-performance fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPerformanceFit {
    /// Full-sample market model R_f = α + β R_mkt.
    pub market_model: RegressionResult,
    /// Realized alphas R_f(t) − β̂(t)R_mkt(t), β̂ from the preceding window.
    pub alpha: Vec<Option<f64>>,
    /// Redemption rate on its lags and on lagged alphas and fund returns.
    /// Regressor order: per lag h = 1..p, (rate, alpha, fund return).
    pub flows: RegressionResult,
    /// δ at lag one is significantly negative (relative performance).
    pub h1_relative: bool,
    /// φ at lag one is significantly negative (absolute performance).
    pub h2_absolute: bool,
}

pub fn flow_performance_fit(
    rates: &[f64],
    fund_returns: &[f64],
    market_returns: &[f64],
    lags: usize,
    window: usize,
) -> Result<FlowPerformanceFit> {
    let n = rates.len();
    if fund_returns.len() != n || market_returns.len() != n {
        return Err(Error::Input("rate and return series must have the same length".into()));
    }
    if window < 3 {
        return Err(Error::Domain("rolling window must hold at least 3 observations".into()));
    }
    let market_model = ols(fund_returns, &[market_returns.to_vec()], true)?;
    let mut alpha = vec![None; n];
    for t in window..n {
        let fit = ols(&fund_returns[t - window..t], &[market_returns[t - window..t].to_vec()], true)?;
        alpha[t] = Some(fund_returns[t] - fit.slope(0) * market_returns[t]);
    }
    let start = window + lags;
    let mut y = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 3 * lags];
    for t in start..n {
        y.push(rates[t]);
        for h in 1..=lags {
            cols[3 * (h - 1)].push(rates[t - h]);
            cols[3 * (h - 1) + 1].push(alpha[t - h].expect("alpha defined past the window"));
            cols[3 * (h - 1) + 2].push(fund_returns[t - h]);
        }
    }
    let flows = ols(&y, &cols, true)?;
    let (h1_relative, h2_absolute) = if lags >= 1 {
        (flows.slope_t(1) < -HYPOTHESIS_Z, flows.slope_t(2) < -HYPOTHESIS_Z)
    } else {
        (false, false)
    };
    Ok(FlowPerformanceFit { market_model, alpha, flows, h1_relative, h2_absolute })
}

/// VIX level above which a day counts as stressed.
pub const DEFAULT_VIX_THRESHOLD: f64 = 30.0;

/// Relative variation of the average rate on days with VIX ≥ threshold
/// with respect to the whole period.
pub fn vix_conditional(rates: &[f64], vix: &[f64], threshold: f64) -> Result<f64> {
    if rates.len() != vix.len() {
        return Err(Error::Input("rate and VIX series must be aligned".into()));
    }
    if rates.is_empty() {
        return Err(Error::EmptySample);
    }
    let high: Vec<f64> = rates.iter().zip(vix).filter(|(_, v)| **v >= threshold).map(|(r, _)| *r).collect();
    if high.is_empty() {
        return Err(Error::RegimeEmpty(format!("no day with VIX ≥ {threshold}")));
    }
    let all = rates.iter().sum::<f64>() / rates.len() as f64;
    if all == 0.0 {
        return Err(Error::InvalidDenominator("average redemption rate is zero".into()));
    }
    if high.len() == rates.len() {
        return Ok(0.0);
    }
    Ok(high.iter().sum::<f64>() / high.len() as f64 / all - 1.0)
}

/// Aligns a category series with a dated factor on common dates.
pub fn align(s: &CategorySeries, f: &Dated) -> (Vec<f64>, Vec<f64>) {
    let map: BTreeMap<_, _> = f.iter().copied().collect();
    s.dates
        .iter()
        .zip(&s.rate)
        .filter_map(|(d, r)| map.get(d).map(|v| (*r, *v)))
        .unzip()
}

/// Sample autocorrelations of orders 1..=max_order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autocorrelation {
    pub rho: Vec<f64>,
    /// Two-sided p-values of the 1/√n asymptotic test.
    pub p_values: Vec<f64>,
    /// Largest autocorrelation across orders and its order.
    pub max: f64,
    pub max_order: usize,
    /// The maximum is significant at 5%.
    pub significant: bool,
}

/// Autocorrelation of order k as the correlation between (x₁…x_{n−k}) and
/// (x_{k+1}…x_n).
pub fn autocorrelation(series: &[f64], max_order: usize) -> Result<Autocorrelation> {
    let n = series.len();
    if n < MIN_OBS {
        return Err(Error::SampleSize { need: MIN_OBS, got: n });
    }
    if max_order == 0 || max_order >= n - 2 {
        return Err(Error::Domain(format!("order {max_order} out of range")));
    }
    if series.iter().all(|v| *v == series[0]) {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    let mut rho = Vec::with_capacity(max_order);
    for k in 1..=max_order {
        let (a, b) = (&series[..n - k], &series[k..]);
        let m = (n - k) as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / m, b.iter().sum::<f64>() / m);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        if saa == 0.0 || sbb == 0.0 {
            return Err(Error::UndefinedCorrelation(format!("lag {k} window is constant")));
        }
        rho.push(sab / (saa * sbb).sqrt());
    }
    let sqrt_n = (n as f64).sqrt();
    let p_values: Vec<f64> = rho.iter().map(|r| 2.0 * (1.0 - norm_cdf(r.abs() * sqrt_n))).collect();
    let (max_idx, max) = rho
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, r)| if r > best.1 { (i, r) } else { best });
    Ok(Autocorrelation {
        significant: p_values[max_idx] < 0.05,
        rho,
        p_values,
        max,
        max_order: max_idx + 1,
    })
}
