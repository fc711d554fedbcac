//! Individual-based redemption model 𝓘𝓜(n, ω, p̃, μ̃, σ̃).
//!
//! Each of n unitholders redeems independently with probability p̃ a fraction
//! of its holding drawn from a severity law with mean μ̃ and std σ̃. The fund
//! redemption rate is Σ ω_i B_i Y_i. Its first two moments depend on the
//! liability weights only through the Herfindahl index 𝓗(ω) = Σ ω_i².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::minimize_bfgs;
use crate::severity::{SeverityDist, SeverityFamily};
use crate::special::expit;

const SIMPLEX_TOL: f64 = 1e-10;

/// Liability structure of a fund: explicit weights or a Herfindahl summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LiabilityStructure {
    Weights { weights: Vec<f64> },
    /// `n = None` stands for an infinite number of unitholders.
    Summary { n: Option<u64>, herfindahl: f64 },
}

/// Herfindahl index and effective number of unitholders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub herfindahl: f64,
    pub effective_n: f64,
}

fn check_simplex(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::EmptySample);
    }
    if w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::ConstraintViolation("liability weights must be positive".into()));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Normalization { sum });
    }
    Ok(())
}

impl LiabilityStructure {
    pub fn weights(weights: Vec<f64>) -> Result<Self> {
        check_simplex(&weights)?;
        Ok(LiabilityStructure::Weights { weights })
    }

    /// Normalizes nonnegative holdings (amounts or percentages) to weights.
    pub fn from_holdings(holdings: &[f64]) -> Result<Self> {
        let total: f64 = holdings.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDenominator("holdings sum to zero".into()));
        }
        Self::weights(holdings.iter().map(|h| h / total).collect())
    }

    pub fn equal(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("at least one unitholder is needed".into()));
        }
        Ok(LiabilityStructure::Summary { n: Some(n), herfindahl: 1.0 / n as f64 })
    }

    pub fn summary(n: Option<u64>, herfindahl: f64) -> Result<Self> {
        let s = LiabilityStructure::Summary { n, herfindahl };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LiabilityStructure::Weights { weights } => check_simplex(weights),
            LiabilityStructure::Summary { n, herfindahl } => {
                let lower = match n {
                    Some(0) => return Err(Error::Domain("at least one unitholder is needed".into())),
                    Some(n) => 1.0 / *n as f64,
                    None => 0.0,
                };
                let h = *herfindahl;
                let ok = if n.is_some() { h >= lower * (1.0 - 1e-12) } else { h >= 0.0 };
                if !ok || h > 1.0 || !h.is_finite() {
                    return Err(Error::ConstraintViolation(format!(
                        "Herfindahl index {h} outside [{lower}, 1]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Number of unitholders as a real number (`inf` for an infinite summary).
    pub fn n(&self) -> f64 {
        match self {
            LiabilityStructure::Weights { weights } => weights.len() as f64,
            LiabilityStructure::Summary { n, .. } => n.map_or(f64::INFINITY, |n| n as f64),
        }
    }

    pub fn herfindahl(&self) -> f64 {
        match self {
            LiabilityStructure::Weights { weights } => weights.iter().map(|w| w * w).sum(),
            LiabilityStructure::Summary { herfindahl, .. } => *herfindahl,
        }
    }

    pub fn concentration(&self) -> Concentration {
        let h = self.herfindahl();
        Concentration { herfindahl: h, effective_n: 1.0 / h }
    }
}

/// Herfindahl index of a weight vector and its inverse 𝓝(ω).
pub fn herfindahl(weights: &[f64]) -> Result<Concentration> {
    check_simplex(weights)?;
    let h: f64 = weights.iter().map(|w| w * w).sum();
    Ok(Concentration { herfindahl: h, effective_n: 1.0 / h })
}

/// Integer display of an effective number, rounding half up.
pub fn effective_n_display(effective_n: f64) -> u64 {
    (effective_n + 0.5).floor() as u64
}

/// Geometric liability structure ω_i ∝ q^i. With `n = None` the series is
/// infinite and only its summary is returned: 𝓝 = (1 + q)/(1 − q).
pub fn geometric_structure(q: f64, n: Option<u64>) -> Result<LiabilityStructure> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("geometric ratio {q} must lie in (0, 1)")));
    }
    match n {
        None => Ok(LiabilityStructure::Summary { n: None, herfindahl: (1.0 - q) / (1.0 + q) }),
        Some(0) => Err(Error::Domain("at least one unitholder is needed".into())),
        Some(n) => {
            let raw: Vec<f64> = (0..n).map(|i| q.powi(i as i32)).collect();
            let total: f64 = raw.iter().sum();
            Ok(LiabilityStructure::Weights { weights: raw.into_iter().map(|w| w / total).collect() })
        }
    }
}

/// The `m` largest weights (1 − q)q^i of an infinite geometric structure.
pub fn geometric_top_weights(q: f64, m: usize) -> Result<Vec<f64>> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("geometric ratio {q} must lie in (0, 1)")));
    }
    Ok((0..m).map(|i| (1.0 - q) * q.powi(i as i32)).collect())
}

/// Upper bound on the Herfindahl index when only the `m` largest weights
/// are known: the unseen mass is spread in chunks no larger than ω_(m).
pub fn herfindahl_upper_bound(top: &[f64]) -> Result<Concentration> {
    let last = *top.last().ok_or(Error::EmptySample)?;
    if top.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) {
        return Err(Error::Domain("each known weight must lie in (0, 1]".into()));
    }
    if top.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Ordering("known weights must be sorted in descending order".into()));
    }
    let seen: f64 = top.iter().sum();
    if seen > 1.0 + SIMPLEX_TOL {
        return Err(Error::ConstraintViolation(format!("known weights sum to {seen} > 1")));
    }
    let h = top.iter().map(|w| w * w).sum::<f64>() + (1.0 - seen).max(0.0) * last;
    Ok(Concentration { herfindahl: h, effective_n: 1.0 / h })
}

/// Probability that nobody redeems: (1 − p̃)ⁿ.
pub fn prob_no_redemption(n: f64, p_tilde: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("unitholder count {n} must be at least 1")));
    }
    check_prob(p_tilde)?;
    Ok((1.0 - p_tilde).powf(n))
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("probability {p} outside [0, 1]")))
    }
}

/// Sum of the `m` largest weights: the outflow when the m largest
/// unitholders redeem in full.
pub fn largest_holder_stress(weights: &[f64], m: usize) -> Result<f64> {
    if m == 0 || m > weights.len() {
        return Err(Error::Domain(format!("m = {m} must lie in 1..={}", weights.len())));
    }
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[..m].iter().sum::<f64>().min(1.0))
}

/// Individual-based model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImModel {
    pub structure: LiabilityStructure,
    pub p_tilde: f64,
    pub mu_tilde: f64,
    pub sigma_tilde: f64,
    #[serde(default = "default_family")]
    pub severity_family: SeverityFamily,
}

fn default_family() -> SeverityFamily {
    SeverityFamily::Beta
}

impl ImModel {
    pub fn new(structure: LiabilityStructure, p_tilde: f64, mu_tilde: f64, sigma_tilde: f64) -> Result<Self> {
        structure.validate()?;
        check_prob(p_tilde)?;
        if !(mu_tilde >= 0.0 && sigma_tilde >= 0.0) {
            return Err(Error::Parameter("individual severity moments must be nonnegative".into()));
        }
        Ok(ImModel { structure, p_tilde, mu_tilde, sigma_tilde, severity_family: SeverityFamily::Beta })
    }

    /// Individual severity law with moments (μ̃, σ̃).
    pub fn severity(&self) -> Result<SeverityDist> {
        SeverityDist::match_moments(self.severity_family, self.mu_tilde, self.sigma_tilde)
    }
}

/// Mean and variance of a redemption rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanVariance {
    pub mean: f64,
    pub variance: f64,
}

/// E = p̃μ̃ and V = p̃(σ̃² + (1 − p̃)μ̃²)·𝓗(ω).
pub fn im_moments(m: &ImModel) -> MeanVariance {
    let (p, mu, s) = (m.p_tilde, m.mu_tilde, m.sigma_tilde);
    MeanVariance {
        mean: p * mu,
        variance: p * (s * s + (1.0 - p) * mu * mu) * m.structure.herfindahl(),
    }
}

/// Zero-inflated parameters (p, μ, σ) with the same zero probability, mean
/// and variance as an individual-based model. `mu`/`sigma` are `None` when
/// p = 0, where they are undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZiParams {
    pub p: f64,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
}

pub fn match_zi_from_im(m: &ImModel) -> Result<ZiParams> {
    m.structure.validate()?;
    let n = m.structure.n();
    let p = 1.0 - prob_no_redemption(n, m.p_tilde)?;
    if p == 0.0 {
        return Ok(ZiParams { p, mu: None, sigma: None });
    }
    let v = im_moments(m);
    let mu = v.mean / p;
    let var = (v.variance - p * (1.0 - p) * mu * mu) / p;
    Ok(ZiParams { p, mu: Some(mu), sigma: Some(var.max(0.0).sqrt()) })
}

/// Individual parameters (p̃, μ̃, σ̃) reproducing a ZI(p, μ, σ) model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImParams {
    pub p_tilde: f64,
    pub mu_tilde: f64,
    pub sigma_tilde: f64,
    /// μ̃ or σ̃ exceeds one, which no redemption law can produce.
    pub unrealistic: bool,
}

pub fn match_im_from_zi(p: f64, mu: f64, sigma: f64, n: f64, herfindahl: f64) -> Result<ImParams> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!("p = {p} must lie in (0, 1)")));
    }
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("unitholder count {n} must be at least 1")));
    }
    if !(herfindahl >= (1.0 / n) * (1.0 - 1e-12) && herfindahl <= 1.0) {
        return Err(Error::ConstraintViolation(format!("Herfindahl index {herfindahl} outside [1/n, 1]")));
    }
    let p_tilde = -(((-p).ln_1p()) / n).exp_m1();
    let mu_tilde = p * mu / p_tilde;
    let second = p * (sigma * sigma + (1.0 - p) * mu * mu);
    let s2 = second / (p_tilde * herfindahl) - (1.0 - p_tilde) * mu_tilde * mu_tilde;
    if s2 < 0.0 {
        return Err(Error::Infeasible(format!(
            "individual severity variance would be negative ({s2:.6e})"
        )));
    }
    let sigma_tilde = s2.sqrt();
    Ok(ImParams { p_tilde, mu_tilde, sigma_tilde, unrealistic: mu_tilde > 1.0 || sigma_tilde > 1.0 })
}

/// Zero-inflated estimates of one fund used by [`calibrate_im`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundEstimate {
    pub p_hat: f64,
    pub mu_hat: f64,
    pub sigma_hat: f64,
    /// Effective number of unitholders 𝓝 = 1/𝓗.
    pub effective_n: f64,
}

/// Weights of the three moment conditions (frequency, mean, variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentWeights {
    pub frequency: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Default for MomentWeights {
    fn default() -> Self {
        MomentWeights { frequency: 1.0, mean: 1.0, variance: 1.0 }
    }
}

/// Outcome of [`calibrate_im`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImCalibration {
    pub p_tilde: f64,
    pub mu_tilde: f64,
    pub sigma_tilde: f64,
    pub objective: f64,
    /// Per fund: (frequency, mean, variance) residuals at the optimum.
    pub residuals: Vec<[f64; 3]>,
    pub unrealistic: bool,
}

/// Upper bound of μ̃ and σ̃ in the calibration.
pub const IM_PARAM_BOUND: f64 = 10.0;
const CALIB_GTOL: f64 = 1e-12;
const CALIB_MAX_ITER: usize = 2000;
/// Gradient norm (of the scaled objective) accepted when the line search
/// stalls at floating-point resolution before reaching `CALIB_GTOL`.
const CALIB_ACCEPT_GTOL: f64 = 1e-6;

/// Fund weights proportional to observation counts.
pub fn weights_from_counts(counts: &[usize]) -> Result<Vec<f64>> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidDenominator("observation counts sum to zero".into()));
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

fn residuals(f: &FundEstimate, p: f64, mu: f64, s: f64) -> [f64; 3] {
    let target_var = f.p_hat * (f.sigma_hat.powi(2) + (1.0 - f.p_hat) * f.mu_hat.powi(2));
    [
        f.p_hat - 1.0 + (1.0 - p).powf(f.effective_n),
        f.p_hat * f.mu_hat - p * mu,
        target_var - p * (s * s + (1.0 - p) * mu * mu) / f.effective_n,
    ]
}

/// Exact inversion for one fund, when it exists inside the bounds.
fn exact_single(f: &FundEstimate) -> Option<(f64, f64, f64)> {
    if !(f.p_hat > 0.0 && f.p_hat < 1.0) {
        return None;
    }
    let z = match_im_from_zi(f.p_hat, f.mu_hat, f.sigma_hat, f.effective_n, 1.0 / f.effective_n).ok()?;
    let inside = |v: f64| v > 0.0 && v <= IM_PARAM_BOUND;
    (inside(z.mu_tilde) && inside(z.sigma_tilde)).then_some((z.p_tilde, z.mu_tilde, z.sigma_tilde))
}

/// Weighted quadratic moment-matching calibration of (p̃, μ̃, σ̃) across funds.
///
/// p̃ is searched in (0, 1) and μ̃, σ̃ in (0, 10] through a logistic
/// reparameterization; BFGS runs from five deterministic starting points
/// and the best optimum is kept. A single fund whose moments can be matched
/// exactly returns the exact inversion, so 𝓝 = 1 reproduces (p̂, μ̂, σ̂).
pub fn calibrate_im(funds: &[FundEstimate], fund_weights: &[f64], moment_weights: MomentWeights) -> Result<ImCalibration> {
    if funds.is_empty() {
        return Err(Error::EmptySample);
    }
    if fund_weights.len() != funds.len() {
        return Err(Error::Input(format!(
            "{} fund weights for {} funds",
            fund_weights.len(),
            funds.len()
        )));
    }
    for f in funds {
        if !(f.effective_n >= 1.0) {
            return Err(Error::Domain(format!("effective number {} must be at least 1", f.effective_n)));
        }
        check_prob(f.p_hat)?;
        if !(f.mu_hat >= 0.0 && f.sigma_hat >= 0.0) {
            return Err(Error::Parameter("fund severity moments must be nonnegative".into()));
        }
    }
    let mw = [moment_weights.frequency, moment_weights.mean, moment_weights.variance];
    if fund_weights.iter().chain(&mw).any(|w| !(*w >= 0.0)) {
        return Err(Error::Parameter("weights must be nonnegative".into()));
    }

    let finish = |p: f64, mu: f64, s: f64| {
        let res: Vec<[f64; 3]> = funds.iter().map(|f| residuals(f, p, mu, s)).collect();
        let objective = res
            .iter()
            .zip(fund_weights)
            .map(|(r, w)| w * (mw[0] * r[0] * r[0] + mw[1] * r[1] * r[1] + mw[2] * r[2] * r[2]))
            .sum();
        ImCalibration {
            p_tilde: p,
            mu_tilde: mu,
            sigma_tilde: s,
            objective,
            residuals: res,
            unrealistic: mu > 1.0 || s > 1.0,
        }
    };

    let exact = if funds.len() == 1 { exact_single(&funds[0]) } else { None };
    if let Some((p, mu, s)) = exact {
        return Ok(finish(p, mu, s));
    }

    // Parameter map z -> (p̃, μ̃, σ̃) and its derivative.
    let to_params = |z: &[f64]| (expit(z[0]), IM_PARAM_BOUND * expit(z[1]), IM_PARAM_BOUND * expit(z[2]));
    let objective_and_grad = |z: &[f64]| -> (f64, [f64; 3]) {
        let (p, mu, s) = to_params(z);
        let mut value = 0.0;
        let mut g = [0.0; 3];
        for (f, &w) in funds.iter().zip(fund_weights) {
            let r = residuals(f, p, mu, s);
            let n = f.effective_n;
            // Partial derivatives of the residuals with respect to (p, mu, s).
            let d0 = [-n * (1.0 - p).powf(n - 1.0), 0.0, 0.0];
            let d1 = [-mu, -p, 0.0];
            let d2 = [
                -(s * s + (1.0 - 2.0 * p) * mu * mu) / n,
                -2.0 * p * (1.0 - p) * mu / n,
                -2.0 * p * s / n,
            ];
            value += w * (mw[0] * r[0] * r[0] + mw[1] * r[1] * r[1] + mw[2] * r[2] * r[2]);
            for k in 0..3 {
                g[k] += 2.0 * w * (mw[0] * r[0] * d0[k] + mw[1] * r[1] * d1[k] + mw[2] * r[2] * d2[k]);
            }
        }
        let jac = [p * (1.0 - p), mu * (1.0 - mu / IM_PARAM_BOUND), s * (1.0 - s / IM_PARAM_BOUND)];
        (value, [g[0] * jac[0], g[1] * jac[1], g[2] * jac[2]])
    };

    let to_z = |p: f64, mu: f64, s: f64| {
        let logit = |x: f64| (x / (1.0 - x)).ln();
        vec![logit(p), logit(mu / IM_PARAM_BOUND), logit(s / IM_PARAM_BOUND)]
    };
    let total_w: f64 = fund_weights.iter().sum();
    if !(total_w > 0.0) {
        return Err(Error::InvalidDenominator("fund weights sum to zero".into()));
    }
    let avg = |g: &dyn Fn(&FundEstimate) -> f64| funds.iter().zip(fund_weights).map(|(f, w)| w * g(f)).sum::<f64>() / total_w;
    let pooled = FundEstimate {
        p_hat: avg(&|f| f.p_hat),
        mu_hat: avg(&|f| f.mu_hat),
        sigma_hat: avg(&|f| f.sigma_hat),
        effective_n: avg(&|f| f.effective_n),
    };
    let mut starts = Vec::with_capacity(5);
    if let Some((p, mu, s)) = exact_single(&pooled) {
        starts.push(to_z(p.clamp(1e-8, 1.0 - 1e-8), mu.min(IM_PARAM_BOUND * 0.999), s.min(IM_PARAM_BOUND * 0.999)));
    }
    for &(p, mu, s) in &[(0.01, 0.1, 0.1), (0.05, 0.3, 0.3), (0.001, 1.0, 1.0), (0.2, 0.05, 0.05), (0.0001, 5.0, 5.0)] {
        if starts.len() == 5 {
            break;
        }
        starts.push(to_z(p, mu, s));
    }

    let scale = starts
        .iter()
        .map(|z| objective_and_grad(z).0)
        .fold(f64::INFINITY, f64::min)
        .max(1e-300);
    let mut best: Option<crate::optim::Minimum> = None;
    for z0 in &starts {
        let run = minimize_bfgs(
            |z| objective_and_grad(z).0 / scale,
            |z| objective_and_grad(z).1.iter().map(|g| g / scale).collect(),
            z0,
            CALIB_GTOL,
            CALIB_MAX_ITER,
        );
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    let (p, mu, s) = to_params(&best.x);
    let out = finish(p, mu, s);
    let at_optimum = best.converged || best.grad_norm < CALIB_ACCEPT_GTOL || out.objective <= 1e-24 || best.value <= 1e-14;
    if !at_optimum || !out.objective.is_finite() {
        return Err(Error::numerical(
            "calibrate_im",
            format!(
                "no optimum reached (gradient norm {:.3e}); residuals {:?}",
                best.grad_norm, out.residuals
            ),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE_WEIGHTS: [f64; 8] = [0.30, 0.20, 0.15, 0.10, 0.09, 0.07, 0.05, 0.04];

    #[test]
    fn herfindahl_examples() {
        let c = herfindahl(&[0.25; 4]).unwrap();
        assert!((c.herfindahl - 0.25).abs() < 1e-15 && (c.effective_n - 4.0).abs() < 1e-12);
        let c = herfindahl(&[0.42, 0.17, 0.15, 0.13, 0.09, 0.03, 0.01]).unwrap();
        assert!((c.effective_n - 3.94).abs() < 0.01, "{}", c.effective_n);
        let c = herfindahl(&EXAMPLE_WEIGHTS).unwrap();
        assert!((c.herfindahl - 0.1796).abs() < 5e-5);
    }

    #[test]
    fn herfindahl_rejects_bad_simplex() {
        assert!(matches!(herfindahl(&[0.5, 0.4]), Err(Error::Normalization { .. })));
        assert!(herfindahl(&[1.2, -0.2]).is_err());
        assert!(herfindahl(&[]).is_err());
    }

    #[test]
    fn geometric_effective_numbers() {
        for (q, expect) in [(0.98, 99.0), (0.5, 3.0), (0.99, 199.0)] {
            let s = geometric_structure(q, None).unwrap();
            assert!((s.concentration().effective_n - expect).abs() < 1e-9);
        }
        let finite = geometric_structure(0.9, Some(2000)).unwrap();
        assert!((finite.concentration().effective_n - 19.0).abs() < 1e-9);
        assert!(geometric_structure(1.0, None).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        let c = herfindahl_upper_bound(&EXAMPLE_WEIGHTS[..3]).unwrap();
        assert!((c.herfindahl - 0.2050).abs() < 5e-5);
        let all = herfindahl_upper_bound(&EXAMPLE_WEIGHTS).unwrap();
        assert!((all.herfindahl - herfindahl(&EXAMPLE_WEIGHTS).unwrap().herfindahl).abs() < 1e-15);
        let top = geometric_top_weights(0.9, 5).unwrap();
        let c = herfindahl_upper_bound(&top).unwrap();
        assert!((c.effective_n - 13.7).abs() < 0.05, "{}", c.effective_n);
        assert_eq!(effective_n_display(c.effective_n), 14);
        assert!(matches!(herfindahl_upper_bound(&[0.1, 0.2]), Err(Error::Ordering(_))));
    }

    #[test]
    fn no_redemption_probabilities() {
        assert!((prob_no_redemption(10.0, 0.05).unwrap() - 0.5987).abs() < 5e-5);
        assert!((prob_no_redemption(10.0, 0.01).unwrap() - 0.9044).abs() < 5e-5);
        assert_eq!(prob_no_redemption(1.0, 0.3).unwrap(), 0.7);
        assert!(prob_no_redemption(0.0, 0.3).is_err());
    }

    #[test]
    fn largest_holders() {
        let top = geometric_top_weights(0.9, 2).unwrap();
        assert!((largest_holder_stress(&top, 2).unwrap() - 0.19).abs() < 1e-12);
        let top = geometric_top_weights(0.5, 5).unwrap();
        assert!((largest_holder_stress(&top, 5).unwrap() - 0.96875).abs() < 1e-12);
        assert_eq!(largest_holder_stress(&[0.25; 4], 1).unwrap(), 0.25);
        assert!(largest_holder_stress(&[0.25; 4], 5).is_err());
        assert!(largest_holder_stress(&[0.25; 4], 0).is_err());
    }

    #[test]
    fn moments_of_equal_structure() {
        let m = ImModel::new(LiabilityStructure::equal(10).unwrap(), 0.1, 0.5, 0.3).unwrap();
        let v = im_moments(&m);
        assert!((v.mean - 0.05).abs() < 1e-15);
        assert!((v.variance - 0.00315).abs() < 1e-15);
        let inf = ImModel::new(LiabilityStructure::summary(None, 0.0).unwrap(), 0.1, 0.5, 0.3).unwrap();
        assert_eq!(im_moments(&inf).variance, 0.0);
    }

    #[test]
    fn zi_from_im_table() {
        let cases = [
            (0.002, 0.5, 0.1, 0.0198, 0.0505, 0.0111),
            (0.01, 0.5, 0.1, 0.0956, 0.0523, 0.0148),
            (0.01, 0.3, 0.2, 0.0956, 0.0314, 0.0214),
        ];
        for (pt, mt, st, p, mu, s) in cases {
            let m = ImModel::new(LiabilityStructure::equal(10).unwrap(), pt, mt, st).unwrap();
            let z = match_zi_from_im(&m).unwrap();
            assert!((z.p - p).abs() < 5e-5, "{z:?}");
            assert!((z.mu.unwrap() - mu).abs() < 5e-5, "{z:?}");
            assert!((z.sigma.unwrap() - s).abs() < 5e-5, "{z:?}");
        }
        let one = ImModel::new(LiabilityStructure::equal(1).unwrap(), 0.07, 0.2, 0.1).unwrap();
        let z = match_zi_from_im(&one).unwrap();
        assert!((z.p - 0.07).abs() < 1e-15 && (z.mu.unwrap() - 0.2).abs() < 1e-14 && (z.sigma.unwrap() - 0.1).abs() < 1e-13);
        let zero = ImModel::new(LiabilityStructure::equal(5).unwrap(), 0.0, 0.2, 0.1).unwrap();
        assert_eq!(match_zi_from_im(&zero).unwrap(), ZiParams { p: 0.0, mu: None, sigma: None });
    }

    #[test]
    fn im_from_zi_table() {
        let r = match_im_from_zi(0.05, 0.02, 0.05, 10.0, 0.1).unwrap();
        assert!((r.p_tilde - 0.0051).abs() < 5e-5);
        assert!((r.mu_tilde - 0.1955).abs() < 5e-5);
        assert!((r.sigma_tilde - 0.4934).abs() < 5e-5);
        assert!(!r.unrealistic);
        let r = match_im_from_zi(0.10, 0.05, 0.10, 10.0, 0.1).unwrap();
        assert!((r.p_tilde - 0.0105).abs() < 5e-5);
        assert!((r.mu_tilde - 0.4771).abs() < 5e-5);
        assert!((r.sigma_tilde - 0.9714).abs() < 5e-5);
    }

    #[test]
    fn im_zi_round_trip() {
        let r = match_im_from_zi(0.12, 0.04, 0.06, 7.0, 1.0 / 7.0).unwrap();
        let m = ImModel::new(LiabilityStructure::equal(7).unwrap(), r.p_tilde, r.mu_tilde, r.sigma_tilde).unwrap();
        let z = match_zi_from_im(&m).unwrap();
        assert!((z.p - 0.12).abs() < 1e-9 && (z.mu.unwrap() - 0.04).abs() < 1e-9 && (z.sigma.unwrap() - 0.06).abs() < 1e-9);
    }

    #[test]
    fn im_from_zi_infeasible_variance() {
        // A zero aggregate spread is out of reach for a concentrated structure.
        let err = match_im_from_zi(0.5, 0.5, 0.0, 2.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err:?}");
    }

    fn institutional(n: f64) -> FundEstimate {
        FundEstimate { p_hat: 0.0823, mu_hat: 0.0323, sigma_hat: 0.1086, effective_n: n }
    }

    #[test]
    fn calibration_single_fund() {
        let one = calibrate_im(&[institutional(1.0)], &[1.0], MomentWeights::default()).unwrap();
        assert!((one.p_tilde - 0.0823).abs() < 1e-12);
        assert!((one.mu_tilde - 0.0323).abs() < 1e-12);
        assert!((one.sigma_tilde - 0.1086).abs() < 1e-12);

        let five = calibrate_im(&[institutional(5.0)], &[1.0], MomentWeights::default()).unwrap();
        assert!((five.p_tilde - 0.0170).abs() < 5e-4, "{five:?}");
        assert!((five.mu_tilde - 0.1561).abs() < 5e-4, "{five:?}");
        assert!((five.sigma_tilde - 0.5331).abs() < 5e-4, "{five:?}");

        let twenty = calibrate_im(&[institutional(20.0)], &[1.0], MomentWeights::default()).unwrap();
        assert!((twenty.p_tilde - 0.0043).abs() < 5e-4);
        assert!((twenty.mu_tilde - 0.6204).abs() < 5e-4);
    }

    #[test]
    fn calibration_several_funds_by_optimization() {
        let truth: (f64, f64, f64) = (0.02, 0.2, 0.3);
        let funds: Vec<FundEstimate> = [3.0f64, 8.0, 15.0]
            .iter()
            .map(|&n| {
                let (pt, mt, st) = truth;
                let p = 1.0 - (1.0 - pt).powf(n);
                let mu = pt * mt / p;
                let v = pt * (st * st + (1.0 - pt) * mt * mt) / n;
                let sigma = ((v - p * (1.0 - p) * mu * mu) / p).sqrt();
                FundEstimate { p_hat: p, mu_hat: mu, sigma_hat: sigma, effective_n: n }
            })
            .collect();
        let w = weights_from_counts(&[100, 300, 600]).unwrap();
        let c = calibrate_im(&funds, &w, MomentWeights::default()).unwrap();
        assert!((c.p_tilde - truth.0).abs() < 1e-6, "{c:?}");
        assert!((c.mu_tilde - truth.1).abs() < 1e-5, "{c:?}");
        assert!((c.sigma_tilde - truth.2).abs() < 1e-4, "{c:?}");
    }

    #[test]
    fn calibration_rejects_bad_input() {
        assert!(calibrate_im(&[], &[], MomentWeights::default()).is_err());
        assert!(calibrate_im(&[institutional(0.5)], &[1.0], MomentWeights::default()).is_err());
        assert!(calibrate_im(&[institutional(2.0)], &[1.0, 2.0], MomentWeights::default()).is_err());
    }
}
