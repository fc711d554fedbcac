//! Severity laws on [0, 1]: the distribution of a redemption rate given that
//! a redemption happens.
//!
//! Five two-parameter families are available. Beta uses closed-form
//! moments; the others are integrated numerically. The gamma and
//! log-logistic laws live on the half line and are truncated to [0, 1] by
//! dividing by their mass G(1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{minimize_bfgs, newton_bracketed, numeric_gradient};
use crate::quad::integrate_adaptive;
use crate::special::{
    beta_inc, beta_inc_upper, expit, gamma_p, gamma_q, ln_beta, ln_gamma, logit, norm_cdf, norm_pdf, norm_ppf,
};

/// Iteration cap for quantile root-finding.
pub const QUANTILE_MAX_ITER: usize = 200;
/// Tolerance on the probability scale for quantile root-finding.
pub const QUANTILE_TOL: f64 = 1e-12;
const MOMENT_TOL: f64 = 1e-12;

/// Family tag without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityFamily {
    Beta,
    Kumaraswamy,
    LogitNormal,
    TruncGamma,
    TruncLogLogistic,
}

impl SeverityFamily {
    pub const ALL: [SeverityFamily; 5] = [
        SeverityFamily::Beta,
        SeverityFamily::Kumaraswamy,
        SeverityFamily::LogitNormal,
        SeverityFamily::TruncGamma,
        SeverityFamily::TruncLogLogistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeverityFamily::Beta => "beta",
            SeverityFamily::Kumaraswamy => "kumaraswamy",
            SeverityFamily::LogitNormal => "logit_normal",
            SeverityFamily::TruncGamma => "trunc_gamma",
            SeverityFamily::TruncLogLogistic => "trunc_log_logistic",
        }
    }
}

impl std::str::FromStr for SeverityFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        SeverityFamily::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::Parameter(format!("unknown severity family '{s}'")))
    }
}

/// A parametric severity distribution.
///
/// Parameter meaning per family:
/// * `Beta { a, b }`: shape parameters.
/// * `Kumaraswamy { a, b }`: G(x) = 1 − (1 − x^a)^b.
/// * `LogitNormal { a, b }`: logit(Y) ~ N(a, b²).
/// * `TruncGamma { a, b }`: shape `a`, rate `b`, truncated to [0, 1].
/// * `TruncLogLogistic { a, b }`: scale `a`, shape `b`, G(x) = x^b / (a^b + x^b), truncated to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SeverityDist {
    Beta { a: f64, b: f64 },
    Kumaraswamy { a: f64, b: f64 },
    LogitNormal { a: f64, b: f64 },
    TruncGamma { a: f64, b: f64 },
    TruncLogLogistic { a: f64, b: f64 },
}

/// Mean, variance, skewness and excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

impl SeverityDist {
    /// Builds a distribution of `family` and checks its parameters.
    pub fn new(family: SeverityFamily, a: f64, b: f64) -> Result<Self> {
        let d = match family {
            SeverityFamily::Beta => SeverityDist::Beta { a, b },
            SeverityFamily::Kumaraswamy => SeverityDist::Kumaraswamy { a, b },
            SeverityFamily::LogitNormal => SeverityDist::LogitNormal { a, b },
            SeverityFamily::TruncGamma => SeverityDist::TruncGamma { a, b },
            SeverityFamily::TruncLogLogistic => SeverityDist::TruncLogLogistic { a, b },
        };
        d.validate()?;
        Ok(d)
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(SeverityFamily::Beta, a, b)
    }

    /// Beta law with mean `mu` and standard deviation `sigma`.
    pub fn beta_musigma(mu: f64, sigma: f64) -> Result<Self> {
        let (a, b) = beta_from_musigma(mu, sigma)?;
        Self::beta(a, b)
    }

    pub fn family(&self) -> SeverityFamily {
        match self {
            SeverityDist::Beta { .. } => SeverityFamily::Beta,
            SeverityDist::Kumaraswamy { .. } => SeverityFamily::Kumaraswamy,
            SeverityDist::LogitNormal { .. } => SeverityFamily::LogitNormal,
            SeverityDist::TruncGamma { .. } => SeverityFamily::TruncGamma,
            SeverityDist::TruncLogLogistic { .. } => SeverityFamily::TruncLogLogistic,
        }
    }

    pub fn params(&self) -> (f64, f64) {
        match *self {
            SeverityDist::Beta { a, b }
            | SeverityDist::Kumaraswamy { a, b }
            | SeverityDist::LogitNormal { a, b }
            | SeverityDist::TruncGamma { a, b }
            | SeverityDist::TruncLogLogistic { a, b } => (a, b),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.params();
        let ok = match self {
            SeverityDist::LogitNormal { .. } => a.is_finite() && b.is_finite() && b > 0.0,
            _ => a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "{} requires finite parameters with {}b > 0 (got a = {a}, b = {b})",
                self.family().name(),
                if matches!(self, SeverityDist::LogitNormal { .. }) { "" } else { "a > 0, " }
            )))
        }
    }

    /// Cumulative distribution function, clamped to the support.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match *self {
            SeverityDist::Beta { a, b } => beta_inc(a, b, x),
            SeverityDist::Kumaraswamy { a, b } => -((b * (-x.powf(a)).ln_1p()).exp_m1()),
            SeverityDist::LogitNormal { a, b } => norm_cdf((logit(x) - a) / b),
            SeverityDist::TruncGamma { a, b } => gamma_p(a, b * x) / gamma_p(a, b),
            SeverityDist::TruncLogLogistic { a, b } => {
                // x^b (a^b + 1) / (a^b + x^b)
                let ab = a.powf(b);
                let xb = x.powf(b);
                xb * (ab + 1.0) / (ab + xb)
            }
        }
    }

    /// Survival function 1 − G(x), accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x >= 1.0 {
            return 0.0;
        }
        match *self {
            SeverityDist::Beta { a, b } => beta_inc_upper(a, b, x),
            SeverityDist::Kumaraswamy { a, b } => (b * (-x.powf(a)).ln_1p()).exp(),
            SeverityDist::LogitNormal { a, b } => norm_cdf(-(logit(x) - a) / b),
            SeverityDist::TruncGamma { a, b } => {
                (gamma_q(a, b * x) - gamma_q(a, b)) / gamma_p(a, b)
            }
            SeverityDist::TruncLogLogistic { a, b } => {
                let ab = a.powf(b);
                let xb = x.powf(b);
                ab * (1.0 - xb) / (ab + xb)
            }
        }
    }

    /// Density. At an endpoint where the density diverges this returns
    /// `f64::INFINITY` (for example Beta with `a < 1` at `x = 0`).
    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match *self {
            SeverityDist::Beta { a, b } => {
                if x == 0.0 {
                    return endpoint_density(a, (-ln_beta(a, b)).exp());
                }
                if x == 1.0 {
                    return endpoint_density(b, (-ln_beta(a, b)).exp());
                }
                ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)).exp()
            }
            SeverityDist::Kumaraswamy { a, b } => {
                if x == 0.0 {
                    return endpoint_density(a, a * b);
                }
                if x == 1.0 {
                    return endpoint_density(b, a * b);
                }
                let xa = x.powf(a);
                a * b * x.powf(a - 1.0) * ((b - 1.0) * (-xa).ln_1p()).exp()
            }
            SeverityDist::LogitNormal { a, b } => {
                if x == 0.0 || x == 1.0 {
                    return 0.0;
                }
                norm_pdf((logit(x) - a) / b) / (b * x * (1.0 - x))
            }
            SeverityDist::TruncGamma { a, b } => {
                if x == 0.0 {
                    return endpoint_density(a, b / gamma_p(a, b) / ln_gamma(a).exp());
                }
                ((a - 1.0) * x.ln() + a * b.ln() - b * x - ln_gamma(a)).exp() / gamma_p(a, b)
            }
            SeverityDist::TruncLogLogistic { a, b } => {
                if x == 0.0 {
                    return endpoint_density(b, (a.powf(b) + 1.0) / a);
                }
                let z = x / a;
                let zb = z.powf(b);
                (b / a) * z.powf(b - 1.0) / ((1.0 + zb) * (1.0 + zb)) * (a.powf(b) + 1.0)
            }
        }
    }

    /// Quantile function G⁻¹(u).
    ///
    /// Kumaraswamy, logit-normal and truncated log-logistic laws invert in
    /// closed form; Beta and truncated gamma use a bracketed Newton search
    /// on the CDF (bisection fallback).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) || u.is_nan() {
            return Err(Error::Domain(format!("quantile level {u} outside [0, 1]")));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(1.0);
        }
        match *self {
            SeverityDist::Kumaraswamy { a, b } => {
                // (1 − (1 − u)^{1/b})^{1/a}
                let inner = -((-u).ln_1p() / b).exp_m1();
                Ok(inner.powf(1.0 / a))
            }
            SeverityDist::LogitNormal { a, b } => Ok(expit(a + b * norm_ppf(u))),
            SeverityDist::TruncLogLogistic { a, b } => {
                let ab = a.powf(b);
                let xb = u * ab / (ab + 1.0 - u);
                Ok(xb.powf(1.0 / b).min(1.0))
            }
            SeverityDist::Beta { a, b } => {
                let m = a / (a + b);
                let s = (a * b / ((a + b) * (a + b) * (a + b + 1.0))).sqrt();
                let x0 = (m + s * norm_ppf(u)).clamp(1e-6, 1.0 - 1e-6);
                self.invert(u, x0)
            }
            SeverityDist::TruncGamma { .. } => self.invert(u, 0.5),
        }
    }

    fn invert(&self, u: f64, x0: f64) -> Result<f64> {
        // Work on the tail that is farther from 1 to keep the residual
        // meaningful when u is close to 1.
        let root = if u <= 0.5 {
            newton_bracketed(|x| self.cdf(x), |x| self.pdf(x), u, 0.0, 1.0, x0, QUANTILE_TOL, QUANTILE_MAX_ITER)
        } else {
            newton_bracketed(
                |x| -self.sf(x),
                |x| self.pdf(x),
                -(1.0 - u),
                0.0,
                1.0,
                x0,
                QUANTILE_TOL,
                QUANTILE_MAX_ITER,
            )
        };
        root.map(|r| r.x).map_err(|e| match e {
            Error::Numerical { detail, .. } => Error::numerical(
                "severity quantile",
                format!("{} at u = {u}: {detail}", self.family().name()),
            ),
            other => other,
        })
    }

    /// E[Y^k] for k ≥ 1.
    pub fn raw_moment(&self, k: u32) -> f64 {
        if let SeverityDist::Beta { a, b } = *self {
            let mut m = 1.0;
            for j in 0..k {
                let j = j as f64;
                m *= (a + j) / (a + b + j);
            }
            return m;
        }
        let kf = k as f64;
        integrate_adaptive(|x| kf * x.powi(k as i32 - 1) * self.sf(x), 0.0, 1.0, MOMENT_TOL)
    }

    /// Mean, variance, skewness and excess kurtosis.
    pub fn moments(&self) -> Moments {
        match *self {
            SeverityDist::Beta { a, b } => beta_moments(a, b),
            _ => {
                let mean = self.raw_moment(1);
                let central = |k: i32| {
                    // E[(Y − m)^k] = (−m)^k + ∫ k (x − m)^{k−1} (1 − G(x)) dx
                    let kf = k as f64;
                    (-mean).powi(k)
                        + integrate_adaptive(|x| kf * (x - mean).powi(k - 1) * self.sf(x), 0.0, 1.0, MOMENT_TOL)
                };
                let variance = central(2).max(0.0);
                let m3 = central(3);
                let m4 = central(4);
                Moments {
                    mean,
                    variance,
                    skewness: m3 / variance.powf(1.5),
                    excess_kurtosis: m4 / (variance * variance) - 3.0,
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SeverityDist::Beta { a, b } => a / (a + b),
            _ => self.raw_moment(1),
        }
    }

    /// Finds the member of `family` with mean `mu` and standard deviation
    /// `sigma`. Beta is solved in closed form; the other families by
    /// quasi-Newton on their (log-)parameters.
    pub fn match_moments(family: SeverityFamily, mu: f64, sigma: f64) -> Result<Self> {
        check_musigma(mu, sigma)?;
        if family == SeverityFamily::Beta {
            return Self::beta_musigma(mu, sigma);
        }
        let (a0, b0) = beta_from_musigma(mu, sigma)?;
        let cv = sigma / mu;
        let start: [f64; 2] = match family {
            SeverityFamily::Kumaraswamy => [a0.ln(), b0.ln()],
            SeverityFamily::LogitNormal => [logit(mu), (sigma / (mu * (1.0 - mu))).ln()],
            SeverityFamily::TruncGamma => [(1.0 / (cv * cv)).ln(), (mu / (sigma * sigma)).ln()],
            SeverityFamily::TruncLogLogistic => [mu.ln(), (std::f64::consts::PI / (3f64.sqrt() * cv)).max(1.2).ln()],
            SeverityFamily::Beta => unreachable!(),
        };
        let build = |z: &[f64]| -> Option<SeverityDist> {
            let (a, b) = match family {
                SeverityFamily::LogitNormal => (z[0], z[1].exp()),
                _ => (z[0].exp(), z[1].exp()),
            };
            SeverityDist::new(family, a, b).ok()
        };
        let objective = |z: &[f64]| -> f64 {
            match build(z) {
                Some(d) => {
                    let m = d.moments();
                    let e1 = (m.mean - mu) / mu;
                    let e2 = (m.variance.sqrt() - sigma) / sigma;
                    let v = e1 * e1 + e2 * e2;
                    if v.is_finite() { v } else { f64::INFINITY }
                }
                None => f64::INFINITY,
            }
        };
        let min = minimize_bfgs(objective, |z| numeric_gradient(&objective, z), &start, 1e-12, 300);
        let d = build(&min.x).ok_or_else(|| Error::numerical("moment matching", "left parameter space"))?;
        if min.value.sqrt() > 1e-6 {
            return Err(Error::numerical(
                "moment matching",
                format!(
                    "{} cannot reach mean {mu} and std {sigma} (relative residual {:.3e})",
                    family.name(),
                    min.value.sqrt()
                ),
            ));
        }
        Ok(d)
    }
}

fn endpoint_density(shape: f64, finite_value: f64) -> f64 {
    if shape < 1.0 {
        f64::INFINITY
    } else if shape == 1.0 {
        finite_value
    } else {
        0.0
    }
}

fn beta_moments(a: f64, b: f64) -> Moments {
    let s = a + b;
    Moments {
        mean: a / s,
        variance: a * b / (s * s * (s + 1.0)),
        skewness: 2.0 * (b - a) * (s + 1.0).sqrt() / ((s + 2.0) * (a * b).sqrt()),
        excess_kurtosis: 6.0 * (a - b) * (a - b) * (s + 1.0) / (a * b * (s + 2.0) * (s + 3.0))
            - 6.0 / (s + 3.0),
    }
}

fn check_musigma(mu: f64, sigma: f64) -> Result<()> {
    let bound = mu * (1.0 - mu);
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::InfeasibleMoments { mu, sigma, bound });
    }
    if !(sigma > 0.0) || sigma * sigma >= bound {
        return Err(Error::InfeasibleMoments { mu, sigma, bound });
    }
    Ok(())
}

/// Method-of-moments Beta parameters: the (a, b) whose Beta law has mean
/// `mu` and standard deviation `sigma`.
pub fn beta_from_musigma(mu: f64, sigma: f64) -> Result<(f64, f64)> {
    check_musigma(mu, sigma)?;
    let k = mu * (1.0 - mu) / (sigma * sigma) - 1.0;
    Ok((mu * k, (1.0 - mu) * k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_gl;

    fn all_families() -> Vec<SeverityDist> {
        vec![
            SeverityDist::Beta { a: 2.0, b: 8.0 },
            SeverityDist::Beta { a: 0.6, b: 1.7 },
            SeverityDist::Kumaraswamy { a: 1.5, b: 3.0 },
            SeverityDist::LogitNormal { a: -1.0, b: 0.8 },
            SeverityDist::TruncGamma { a: 2.0, b: 9.0 },
            SeverityDist::TruncLogLogistic { a: 0.2, b: 3.0 },
        ]
    }

    #[test]
    fn symmetric_and_uniform_cases() {
        assert!((SeverityDist::Beta { a: 3.3, b: 3.3 }.cdf(0.5) - 0.5).abs() < 1e-14);
        assert!((SeverityDist::Kumaraswamy { a: 1.0, b: 1.0 }.cdf(0.3) - 0.3).abs() < 1e-15);
        assert!((SeverityDist::LogitNormal { a: 0.0, b: 1.0 }.cdf(0.5) - 0.5).abs() < 1e-15);
        assert!((SeverityDist::Beta { a: 7.0, b: 7.0 }.quantile(0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((SeverityDist::Kumaraswamy { a: 1.0, b: 1.0 }.quantile(0.7).unwrap() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn density_values() {
        for &x in &[0.1, 0.5, 0.93] {
            assert!((SeverityDist::Beta { a: 1.0, b: 1.0 }.pdf(x) - 1.0).abs() < 1e-14);
        }
        assert!((SeverityDist::Kumaraswamy { a: 2.0, b: 1.0 }.pdf(0.5) - 1.0).abs() < 1e-14);
        assert_eq!(SeverityDist::Beta { a: 0.5, b: 2.0 }.pdf(0.0), f64::INFINITY);
        assert_eq!(SeverityDist::Beta { a: 2.0, b: 0.5 }.pdf(1.0), f64::INFINITY);
    }

    #[test]
    fn beta_12_12_density_integrates_to_one() {
        let d = SeverityDist::Beta { a: 12.0, b: 12.0 };
        let total = integrate_gl(|x| d.pdf(x), 0.0, 1.0, 128);
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn every_density_integrates_to_one() {
        for d in all_families() {
            let total = integrate_adaptive(|x| d.pdf(x), 1e-14, 1.0 - 1e-14, 1e-11);
            assert!((total - 1.0).abs() < 1e-6, "{d:?}: {total}");
        }
    }

    #[test]
    fn cdf_is_integral_of_pdf() {
        for d in all_families() {
            for &x in &[0.05, 0.2, 0.6] {
                let area = integrate_adaptive(|t| d.pdf(t), 1e-15, x, 1e-12);
                assert!((area - d.cdf(x)).abs() < 1e-7, "{d:?} at {x}: {area} vs {}", d.cdf(x));
            }
        }
    }

    #[test]
    fn beta_12_12_upper_quantile() {
        let d = SeverityDist::Beta { a: 12.0, b: 12.0 };
        let v = d.quantile(0.99).unwrap();
        // independent CDF: integrate the density up to v
        let area = integrate_gl(|x| d.pdf(x), 0.0, v, 256);
        assert!((area - 0.99).abs() < 1e-10, "{area}");
    }

    #[test]
    fn quantile_inverts_cdf_for_all_families() {
        for d in all_families() {
            for i in 1..40 {
                let u = i as f64 / 40.0;
                let x = d.quantile(u).unwrap();
                assert!((d.cdf(x) - u).abs() < 1e-10, "{d:?} u={u}");
            }
            assert_eq!(d.quantile(0.0).unwrap(), 0.0);
            assert_eq!(d.quantile(1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn truncated_cdf_reaches_one() {
        let g = SeverityDist::TruncGamma { a: 0.7, b: 0.4 };
        let l = SeverityDist::TruncLogLogistic { a: 3.0, b: 0.9 };
        assert!((g.cdf(1.0 - 1e-15) - 1.0).abs() < 1e-12);
        assert!((l.cdf(1.0 - 1e-15) - 1.0).abs() < 1e-12);
        assert_eq!(g.cdf(1.0), 1.0);
    }

    #[test]
    fn log_logistic_formula_pinned() {
        // G(x) = x^b / (a^b + x^b) renormalized by G(1) = 1 / (a^b + 1)
        let (a, b, x) = (0.3_f64, 2.5_f64, 0.2_f64);
        let raw = x.powf(b) / (a.powf(b) + x.powf(b));
        let g1 = 1.0 / (a.powf(b) + 1.0);
        let d = SeverityDist::TruncLogLogistic { a, b };
        assert!((d.cdf(x) - raw / g1).abs() < 1e-14);
        let dens = (b / a) * (x / a).powf(b - 1.0) / (1.0 + (x / a).powf(b)).powi(2) / g1;
        assert!((d.pdf(x) - dens).abs() < 1e-12);
    }

    #[test]
    fn beta_moments_closed_form() {
        let m = SeverityDist::Beta { a: 12.0, b: 12.0 }.moments();
        assert!((m.mean - 0.5).abs() < 1e-15);
        assert!((m.variance - 0.01).abs() < 1e-15);
        assert!(m.skewness.abs() < 1e-15);
        let u = SeverityDist::Kumaraswamy { a: 1.0, b: 1.0 }.moments();
        assert!((u.mean - 0.5).abs() < 1e-10);
        assert!((u.variance - 1.0 / 12.0).abs() < 1e-10);
        assert!((u.excess_kurtosis + 1.2).abs() < 1e-8);
    }

    #[test]
    fn beta_closed_form_agrees_with_quadrature() {
        for &(a, b) in &[(2.0, 8.0), (0.7, 3.0), (12.0, 12.0), (5.0, 1.5)] {
            let d = SeverityDist::Beta { a, b };
            let closed = d.moments();
            let mean = integrate_adaptive(|x| d.sf(x), 0.0, 1.0, 1e-13);
            let m2 = integrate_adaptive(|x| 2.0 * x * d.sf(x), 0.0, 1.0, 1e-13);
            let m3 = integrate_adaptive(|x| 3.0 * x * x * d.sf(x), 0.0, 1.0, 1e-13);
            let var = m2 - mean * mean;
            let mu3 = m3 - 3.0 * mean * m2 + 2.0 * mean.powi(3);
            assert!((closed.mean - mean).abs() < 1e-8);
            assert!((closed.variance - var).abs() < 1e-8);
            assert!((closed.skewness - mu3 / var.powf(1.5)).abs() < 1e-6);
        }
    }

    #[test]
    fn musigma_examples() {
        let (a, b) = beta_from_musigma(0.5, 0.1).unwrap();
        assert!((a - 12.0).abs() < 1e-12 && (b - 12.0).abs() < 1e-12);
        let (a, b) = beta_from_musigma(0.2, 0.1).unwrap();
        assert!((a - 3.0).abs() < 1e-12 && (b - 12.0).abs() < 1e-12);
        let bound = (0.3f64 * 0.7).sqrt();
        assert!(matches!(beta_from_musigma(0.3, bound), Err(Error::InfeasibleMoments { .. })));
        assert!(matches!(beta_from_musigma(0.3, 0.0), Err(Error::InfeasibleMoments { .. })));
    }

    #[test]
    fn moment_matching_for_other_families() {
        for fam in [
            SeverityFamily::Kumaraswamy,
            SeverityFamily::LogitNormal,
            SeverityFamily::TruncGamma,
            SeverityFamily::TruncLogLogistic,
        ] {
            let d = SeverityDist::match_moments(fam, 0.3, 0.15).unwrap();
            let m = d.moments();
            assert!((m.mean - 0.3).abs() < 1e-6, "{fam:?}");
            assert!((m.std_dev() - 0.15).abs() < 1e-6, "{fam:?}");
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(SeverityDist::beta(0.0, 1.0).is_err());
        assert!(SeverityDist::new(SeverityFamily::LogitNormal, -3.0, 1.0).is_ok());
        assert!(SeverityDist::new(SeverityFamily::LogitNormal, 0.0, 0.0).is_err());
        assert!(SeverityDist::new(SeverityFamily::TruncGamma, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn family_parses_from_text() {
        assert_eq!("beta".parse::<SeverityFamily>().unwrap(), SeverityFamily::Beta);
        assert_eq!("trunc-log-logistic".parse::<SeverityFamily>().unwrap(), SeverityFamily::TruncLogLogistic);
        assert!("lognormal".parse::<SeverityFamily>().is_err());
    }
}
