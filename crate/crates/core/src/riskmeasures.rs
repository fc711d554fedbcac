//! Historical risk measures on redemption samples, the Gaussian CVaR/VaR
//! benchmark, the X-statistic and the coherency-rule shock builder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{norm_pdf, norm_ppf};

/// Samples smaller than this are flagged as low confidence.
pub const DEFAULT_RELIABILITY_FLOOR: usize = 200;

/// Empirical risk measures of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub mean: f64,
    /// mean + c · standard deviation
    pub sd_measure: f64,
    /// Value-at-risk ℚ(α).
    pub var: f64,
    /// Conditional value-at-risk ℂ(α).
    pub cvar: f64,
    /// ℂ/ℚ; `+inf` when ℚ = 0 < ℂ, NaN when both are zero.
    pub ratio: f64,
    pub n: usize,
    pub alpha: f64,
    pub c: f64,
    pub low_confidence: bool,
}

/// Index (0-based, into the sorted sample) of the empirical α-quantile.
///
/// The quantile is the order statistic x_(k) with k = ⌊αn⌋ + 1, capped at
/// n: the smallest observation whose empirical CDF exceeds α. The tail set
/// {x ≥ ℚ(α)} therefore always contains at least one point.
pub fn quantile_index(n: usize, alpha: f64) -> usize {
    // A tiny guard keeps products such as 0.29 · 100 from flooring to 28.
    let k = (alpha * n as f64 + 1e-9).floor() as usize + 1;
    k.min(n) - 1
}

/// Empirical α-quantile of a sorted slice.
pub fn sorted_quantile(sorted: &[f64], alpha: f64) -> f64 {
    sorted[quantile_index(sorted.len(), alpha)]
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("confidence level {alpha} must lie in (0, 1)")))
    }
}

/// Ratio ℂ/ℚ with the conventions of [`MeasureReport::ratio`].
pub fn cvar_var_ratio(var: f64, cvar: f64) -> f64 {
    if var > 0.0 {
        cvar / var
    } else if cvar > 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    }
}

/// Mean, mean + c·sd, VaR, CVaR and their ratio for a sample of rates.
pub fn empirical_measures(values: &[f64], c: f64, alpha: f64, reliability_floor: usize) -> Result<MeasureReport> {
    check_alpha(alpha)?;
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let k = quantile_index(n, alpha);
    let var = sorted[k];
    let start = sorted.partition_point(|&v| v < var);
    let tail = &sorted[start..];
    let cvar = tail.iter().sum::<f64>() / tail.len() as f64;
    Ok(MeasureReport {
        mean,
        sd_measure: mean + c * sd,
        var,
        cvar,
        ratio: cvar_var_ratio(var, cvar),
        n,
        alpha,
        c,
        low_confidence: n < reliability_floor,
    })
}

/// CVaR/VaR ratio of a Gaussian law: φ(Φ⁻¹(α)) / ((1 − α) Φ⁻¹(α)).
pub fn gaussian_ratio(alpha: f64) -> Result<f64> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::Domain(format!("gaussian ratio needs 0.5 < alpha < 1 (got {alpha})")));
    }
    let z = norm_ppf(alpha);
    Ok(norm_pdf(z) / ((1.0 - alpha) * z))
}

/// Largest of the per-fund maximum redemption rates.
pub fn x_statistic(per_fund_maxima: &[f64]) -> Result<f64> {
    per_fund_maxima
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(Error::EmptySample)
}

/// Scales a one-fund X-measure to `n` funds: 1 − (1 − x₁)ⁿ.
pub fn x_granularity(x1: f64, n: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x1) {
        return Err(Error::Domain(format!("rate {x1} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::Domain("fund count must be at least 1".into()));
    }
    Ok(-(n as f64 * (-x1).ln_1p()).exp_m1())
}

/// Probability that the maximum of `n` independent Bernoulli(p) indicators
/// is one, divided by p: (1 − (1 − p)ⁿ) / p.
pub fn max_vs_sum_ratio(p: f64, n: u64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("probability must lie in (0, 1] (got {p})")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    Ok(-(n as f64 * (-p).ln_1p()).exp_m1() / p)
}

/// Rule used to fill a shock matrix from one-dimensional anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoherencyRule {
    /// S(j,k) = m(j) · S(k): investor anchors scaled by fund multipliers.
    C1,
    /// S(j,k) = m(k) · S(j): fund anchors scaled by investor multipliers.
    C2,
    /// Average of C1 and C2.
    C3,
}

impl std::str::FromStr for CoherencyRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "C1" => Ok(CoherencyRule::C1),
            "C2" => Ok(CoherencyRule::C2),
            "C3" => Ok(CoherencyRule::C3),
            other => Err(Error::Parameter(format!("unknown coherency rule '{other}'"))),
        }
    }
}

/// Inputs of the coherency rules. `j` indexes fund categories and `k`
/// investor categories. Vectors not used by the chosen rule may be empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoherencyInputs {
    /// Investor-category anchors S(k).
    pub s_k: Vec<f64>,
    /// Fund-category anchors S(j).
    pub s_j: Vec<f64>,
    /// Fund-category multipliers m(j).
    pub m_j: Vec<f64>,
    /// Investor-category multipliers m(k).
    pub m_k: Vec<f64>,
}

/// Shock per (fund category j, investor category k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockMatrix {
    pub rule: CoherencyRule,
    /// `shocks[j][k]`
    pub shocks: Vec<Vec<f64>>,
    pub inputs: CoherencyInputs,
    pub warnings: Vec<String>,
}

impl ShockMatrix {
    /// Checks risk-ordering coherency. `fund_order` and `investor_order`
    /// list indices from the riskiest category to the least risky one;
    /// shocks must be nonincreasing along both orders.
    pub fn is_coherent(&self, fund_order: &[usize], investor_order: &[usize]) -> bool {
        let rows_ok = self.shocks.iter().all(|row| investor_order.windows(2).all(|w| row[w[0]] >= row[w[1]]));
        let cols = self.shocks.first().map_or(0, Vec::len);
        let cols_ok = (0..cols).all(|k| fund_order.windows(2).all(|w| self.shocks[w[0]][k] >= self.shocks[w[1]][k]));
        rows_ok && cols_ok
    }
}

fn nonneg(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::Parameter(format!("{name} must be finite and nonnegative")));
    }
    Ok(())
}

/// Fills a shock matrix with one of the coherency rules. Shocks above 100%
/// are clipped and reported in `warnings`.
pub fn coherency_shocks(inputs: &CoherencyInputs, rule: CoherencyRule) -> Result<ShockMatrix> {
    nonneg("S(k)", &inputs.s_k)?;
    nonneg("S(j)", &inputs.s_j)?;
    nonneg("m(j)", &inputs.m_j)?;
    nonneg("m(k)", &inputs.m_k)?;
    let (nj, nk) = match rule {
        CoherencyRule::C1 => (inputs.m_j.len(), inputs.s_k.len()),
        CoherencyRule::C2 => (inputs.s_j.len(), inputs.m_k.len()),
        CoherencyRule::C3 => {
            if inputs.m_j.len() != inputs.s_j.len() || inputs.s_k.len() != inputs.m_k.len() {
                return Err(Error::Parameter(
                    "C3 needs S(j), m(j) of equal length and S(k), m(k) of equal length".into(),
                ));
            }
            (inputs.m_j.len(), inputs.s_k.len())
        }
    };
    if nj == 0 || nk == 0 {
        return Err(Error::Parameter(format!("rule {rule:?} is missing anchors or multipliers")));
    }
    let mut warnings = Vec::new();
    let mut shocks = vec![vec![0.0; nk]; nj];
    for (j, row) in shocks.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            let c1 = || inputs.m_j[j] * inputs.s_k[k];
            let c2 = || inputs.m_k[k] * inputs.s_j[j];
            let s = match rule {
                CoherencyRule::C1 => c1(),
                CoherencyRule::C2 => c2(),
                CoherencyRule::C3 => 0.5 * (c1() + c2()),
            };
            *cell = if s > 1.0 {
                warnings.push(format!("shock ({j}, {k}) = {s:.4} clipped to 1"));
                1.0
            } else {
                s
            };
        }
    }
    Ok(ShockMatrix { rule, shocks, inputs: inputs.clone(), warnings })
}

/// Observation-count buckets used to grade the confidence of a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConfidenceBucket {
    UpTo10,
    UpTo50,
    UpTo200,
    UpTo1000,
    UpTo10000,
    Above10000,
}

impl ConfidenceBucket {
    pub fn from_count(n: usize) -> Self {
        match n {
            0..=10 => ConfidenceBucket::UpTo10,
            11..=50 => ConfidenceBucket::UpTo50,
            51..=200 => ConfidenceBucket::UpTo200,
            201..=1000 => ConfidenceBucket::UpTo1000,
            1001..=10000 => ConfidenceBucket::UpTo10000,
            _ => ConfidenceBucket::Above10000,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ConfidenceBucket::UpTo10 => "0–10",
            ConfidenceBucket::UpTo50 => "11–50",
            ConfidenceBucket::UpTo200 => "51–200",
            ConfidenceBucket::UpTo1000 => "201–1000",
            ConfidenceBucket::UpTo10000 => "1001–10000",
            ConfidenceBucket::Above10000 => "10000+",
        }
    }
}
