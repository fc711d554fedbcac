//! Exchangeable copulas for redemption indicators.
//!
//! Investors redeem when their latent uniform falls in the upper p̃ tail;
//! the copula couples those latent variables. The frequency moments only
//! need the bivariate survival diagonal, while the no-redemption
//! probability needs the n-dimensional diagonal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liability::ImModel;
use crate::optim::bisect;
use crate::quad::{gauss_hermite_normal, integrate_adaptive};
use crate::special::{norm_cdf, norm_ppf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaFamily {
    Product,
    Clayton,
    Normal,
    UpperFrechet,
}

impl CopulaFamily {
    pub fn name(self) -> &'static str {
        match self {
            CopulaFamily::Product => "product",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::Normal => "normal",
            CopulaFamily::UpperFrechet => "upper_frechet",
        }
    }
}

impl std::str::FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "product" | "independent" | "independence" => Ok(CopulaFamily::Product),
            "clayton" => Ok(CopulaFamily::Clayton),
            "normal" | "gaussian" => Ok(CopulaFamily::Normal),
            "upper_frechet" | "frechet" | "comonotone" => Ok(CopulaFamily::UpperFrechet),
            other => Err(Error::Parameter(format!("unknown copula family '{other}'"))),
        }
    }
}

/// A copula family with its parameter θ (ignored for Product/UpperFrechet).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    pub family: CopulaFamily,
    #[serde(default)]
    pub theta: f64,
}

impl CopulaSpec {
    pub const PRODUCT: CopulaSpec = CopulaSpec { family: CopulaFamily::Product, theta: 0.0 };
    pub const UPPER_FRECHET: CopulaSpec = CopulaSpec { family: CopulaFamily::UpperFrechet, theta: 0.0 };

    pub fn new(family: CopulaFamily, theta: f64) -> Result<Self> {
        let spec = CopulaSpec { family, theta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::new(CopulaFamily::Clayton, theta)
    }

    pub fn normal(theta: f64) -> Result<Self> {
        Self::new(CopulaFamily::Normal, theta)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.theta;
        match self.family {
            CopulaFamily::Product | CopulaFamily::UpperFrechet => Ok(()),
            CopulaFamily::Clayton if t.is_finite() && t >= 0.0 => Ok(()),
            CopulaFamily::Clayton => Err(Error::UnsupportedRange(format!(
                "Clayton parameter must be finite and nonnegative (got {t})"
            ))),
            CopulaFamily::Normal if (0.0..=1.0).contains(&t) => Ok(()),
            CopulaFamily::Normal => Err(Error::UnsupportedRange(format!(
                "Normal copula correlation must lie in [0, 1] (got {t})"
            ))),
        }
    }

    /// The same copula with boundary parameters mapped to Product or
    /// UpperFrechet.
    pub fn canonical(&self) -> CopulaSpec {
        match self.family {
            CopulaFamily::Clayton | CopulaFamily::Normal if self.theta == 0.0 => CopulaSpec::PRODUCT,
            CopulaFamily::Normal if self.theta == 1.0 => CopulaSpec::UPPER_FRECHET,
            _ => *self,
        }
    }
}

fn check_unit(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability {u} outside [0, 1]")))
    }
}

const GH_START: usize = 128;
const GH_MAX: usize = 256;
const GH_TOL: f64 = 1e-10;
const FACTOR_SPAN: f64 = 12.0;
const ADAPTIVE_TOL: f64 = 1e-12;

/// E over a standard normal factor s of f(s), by Gauss-Hermite doubling
/// with an adaptive fallback when the rule does not settle. `kink` is where
/// the integrand changes fastest; the fallback splits its range there.
fn factor_expectation<F: Fn(f64) -> f64>(f: F, kink: f64) -> f64 {
    let eval = |n: usize| {
        let rule = gauss_hermite_normal(n);
        rule.nodes.iter().zip(&rule.weights).map(|(s, w)| w * f(*s)).sum::<f64>()
    };
    let mut n = GH_START;
    let mut prev = eval(n);
    while n < GH_MAX {
        n *= 2;
        let next = eval(n);
        if (next - prev).abs() < GH_TOL {
            return next;
        }
        prev = next;
    }
    let g = |s: f64| (-0.5 * s * s).exp() / (2.0 * PI).sqrt() * f(s);
    let k = kink.clamp(-FACTOR_SPAN, FACTOR_SPAN);
    integrate_adaptive(g, -FACTOR_SPAN, k, ADAPTIVE_TOL) + integrate_adaptive(g, k, FACTOR_SPAN, ADAPTIVE_TOL)
}

/// n-dimensional diagonal C(u, …, u). `n` may be `inf`.
pub fn diagonal(c: &CopulaSpec, u: f64, n: f64) -> Result<f64> {
    c.validate()?;
    check_unit(u)?;
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("dimension {n} must be at least 1")));
    }
    if u == 0.0 || u == 1.0 || n == 1.0 {
        return Ok(u);
    }
    let c = c.canonical();
    let v = match c.family {
        CopulaFamily::Product => u.powf(n),
        CopulaFamily::UpperFrechet => u,
        CopulaFamily::Clayton => {
            // (n u^{-θ} − n + 1)^{-1/θ}, written to stay accurate as θ → 0.
            let t = c.theta;
            (-(n * (-t * u.ln()).exp_m1()).ln_1p() / t).exp()
        }
        CopulaFamily::Normal => {
            let rho = c.theta;
            let z = norm_ppf(u);
            let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
            // One-factor form: ∫ φ(s) Φ((z − √ρ s)/√(1 − ρ))ⁿ ds.
            factor_expectation(|s| norm_cdf((z - a * s) / b).powf(n), z / a)
        }
    };
    Ok(v.clamp(u.powf(n), u))
}

/// Bivariate copula C(u₁, u₂).
pub fn bivariate(c: &CopulaSpec, u1: f64, u2: f64) -> Result<f64> {
    c.validate()?;
    check_unit(u1)?;
    check_unit(u2)?;
    if u1 == 0.0 || u2 == 0.0 {
        return Ok(0.0);
    }
    if u1 == 1.0 {
        return Ok(u2);
    }
    if u2 == 1.0 {
        return Ok(u1);
    }
    let c = c.canonical();
    let v = match c.family {
        CopulaFamily::Product => u1 * u2,
        CopulaFamily::UpperFrechet => u1.min(u2),
        CopulaFamily::Clayton => {
            let t = c.theta;
            let s = (-t * u1.ln()).exp_m1() + (-t * u2.ln()).exp_m1();
            (-s.ln_1p() / t).exp()
        }
        CopulaFamily::Normal => {
            let rho = c.theta;
            let (z1, z2) = (norm_ppf(u1), norm_ppf(u2));
            let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
            factor_expectation(|s| norm_cdf((z1 - a * s) / b) * norm_cdf((z2 - a * s) / b), 0.5 * (z1 + z2) / a)
        }
    };
    Ok(v.clamp(u1 * u2, u1.min(u2)))
}

/// Joint exceedance probability C̆(u₁, u₂) = u₁ + u₂ − 1 + C(1 − u₁, 1 − u₂):
/// E[X₁X₂] for Bernoulli(u₁), Bernoulli(u₂) indicators coupled by `c`.
pub fn survival(c: &CopulaSpec, u1: f64, u2: f64) -> Result<f64> {
    check_unit(u1)?;
    check_unit(u2)?;
    let c = c.canonical();
    match c.family {
        CopulaFamily::Product => return Ok(u1 * u2),
        CopulaFamily::UpperFrechet => return Ok(u1.min(u2)),
        _ => {}
    }
    if c.family == CopulaFamily::Normal {
        // Radial symmetry: the survival copula is the copula itself, which
        // avoids the cancellation in u₁ + u₂ − 1 + C(·).
        return bivariate(&c, u1, u2);
    }
    let v = u1 + u2 - 1.0 + bivariate(&c, 1.0 - u1, 1.0 - u2)?;
    Ok(v.clamp(u1 * u2, u1.min(u2)))
}

/// Survival diagonal C̆(u, u).
pub fn survival_diag2(c: &CopulaSpec, u: f64) -> Result<f64> {
    survival(c, u, u)
}

/// Kendall's tau, Spearman's rho and Pearson correlation of a copula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationViews {
    pub kendall_tau: f64,
    pub spearman_rho: f64,
    pub pearson_rho: f64,
}

/// Correlation views. For Clayton, Pearson is sin(πθ/(2θ + 4)) and
/// Spearman uses the approximation (6/π)·arcsin(½·sin(πθ/(2θ + 4))).
pub fn correlation_views(c: &CopulaSpec) -> Result<CorrelationViews> {
    c.validate()?;
    let t = c.theta;
    Ok(match c.canonical().family {
        CopulaFamily::Product => CorrelationViews { kendall_tau: 0.0, spearman_rho: 0.0, pearson_rho: 0.0 },
        CopulaFamily::UpperFrechet => CorrelationViews { kendall_tau: 1.0, spearman_rho: 1.0, pearson_rho: 1.0 },
        CopulaFamily::Clayton => {
            let pearson = (PI * t / (2.0 * t + 4.0)).sin();
            CorrelationViews {
                kendall_tau: t / (t + 2.0),
                spearman_rho: 6.0 / PI * (0.5 * pearson).asin(),
                pearson_rho: pearson,
            }
        }
        CopulaFamily::Normal => CorrelationViews {
            kendall_tau: 2.0 / PI * t.asin(),
            spearman_rho: 6.0 / PI * (0.5 * t).asin(),
            pearson_rho: t,
        },
    })
}

/// Copula of `family` whose Pearson view equals `rho`. A Clayton target of
/// one returns the UpperFrechet copula.
pub fn theta_from_pearson(family: CopulaFamily, rho: f64) -> Result<CopulaSpec> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::UnsupportedRange(format!("correlation {rho} outside [0, 1]")));
    }
    match family {
        CopulaFamily::Product => Ok(CopulaSpec::PRODUCT),
        CopulaFamily::UpperFrechet => Ok(CopulaSpec::UPPER_FRECHET),
        CopulaFamily::Normal => CopulaSpec::normal(rho),
        CopulaFamily::Clayton => {
            if rho == 1.0 {
                return Ok(CopulaSpec::UPPER_FRECHET);
            }
            // sin(πθ/(2θ + 4)) = ρ  ⇔  θ = 4a/(π − 2a) with a = arcsin ρ.
            let a = rho.asin();
            CopulaSpec::clayton(4.0 * a / (PI - 2.0 * a))
        }
    }
}

/// Mean and variance of the weighted redemption frequency F = Σ ωᵢ Eᵢ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqMoments {
    pub mean: f64,
    pub variance: f64,
}

fn check_h(h: f64) -> Result<()> {
    if h >= 0.0 && h <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("Herfindahl index {h} outside [0, 1]")))
    }
}

/// Mean p̃ and variance p̃(H − p̃) + C̆(p̃, p̃)(1 − H).
pub fn freq_moments(p_tilde: f64, herfindahl: f64, c: &CopulaSpec) -> Result<FreqMoments> {
    check_unit(p_tilde)?;
    check_h(herfindahl)?;
    let joint = survival_diag2(c, p_tilde)?;
    let variance = p_tilde * (herfindahl - p_tilde) + joint * (1.0 - herfindahl);
    Ok(FreqMoments { mean: p_tilde, variance: variance.max(0.0) })
}

/// Result of [`calibrate_theta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaCalibration {
    pub copula: CopulaSpec,
    pub pearson: f64,
    /// Target value of C̆(F̄, F̄).
    pub target: f64,
}

const THETA_XTOL: f64 = 1e-12;

/// Copula parameter reproducing the observed mean and standard deviation
/// of the redemption frequency: C̆(F̄, F̄) = (σ̂² − F̄(H − F̄))/(1 − H).
///
/// The search runs on the Pearson scale, along which C̆ is increasing.
pub fn calibrate_theta(mean_f: f64, std_f: f64, herfindahl: f64, family: CopulaFamily) -> Result<ThetaCalibration> {
    if !(mean_f > 0.0 && mean_f < 1.0) {
        return Err(Error::Domain(format!("mean frequency {mean_f} must lie in (0, 1)")));
    }
    if !(std_f >= 0.0) {
        return Err(Error::Domain(format!("standard deviation {std_f} must be nonnegative")));
    }
    if !(herfindahl >= 0.0 && herfindahl < 1.0) {
        return Err(Error::Domain(format!("Herfindahl index {herfindahl} must lie in [0, 1)")));
    }
    if !matches!(family, CopulaFamily::Clayton | CopulaFamily::Normal) {
        return Err(Error::Parameter(format!("{} has no parameter to calibrate", family.name())));
    }
    let target = (std_f * std_f - mean_f * (herfindahl - mean_f)) / (1.0 - herfindahl);
    let (lower, upper) = (mean_f * mean_f, mean_f);
    let slack = 1e-12;
    if target < lower - slack {
        return Err(Error::InfeasibleCorrelation { target, violated: "independence (lower)", bound: lower });
    }
    if target > upper + slack {
        return Err(Error::InfeasibleCorrelation { target, violated: "comonotone (upper)", bound: upper });
    }
    if target <= lower {
        return Ok(ThetaCalibration { copula: CopulaSpec::new(family, 0.0)?, pearson: 0.0, target });
    }
    if target >= upper {
        return Ok(ThetaCalibration { copula: CopulaSpec::UPPER_FRECHET, pearson: 1.0, target });
    }
    let gap = |rho: f64| -> f64 {
        theta_from_pearson(family, rho)
            .and_then(|c| survival_diag2(&c, mean_f))
            .map_or(f64::NAN, |v| v - target)
    };
    let root = bisect(gap, 0.0, 1.0, THETA_XTOL, 200)?;
    let copula = theta_from_pearson(family, root.x)?;
    Ok(ThetaCalibration { copula, pearson: root.x, target })
}

/// Pearson correlation between the frequencies of two investor groups.
///
/// `cross` couples investors of different groups; `intra1`/`intra2` hold
/// each group's own copula and Herfindahl index.
pub fn cross_correlation(
    p1: f64,
    p2: f64,
    cross: &CopulaSpec,
    intra1: (&CopulaSpec, f64),
    intra2: (&CopulaSpec, f64),
) -> Result<f64> {
    let v1 = freq_moments(p1, intra1.1, intra1.0)?.variance;
    let v2 = freq_moments(p2, intra2.1, intra2.0)?.variance;
    if !(v1 > 0.0 && v2 > 0.0) {
        return Err(Error::UndefinedCorrelation("a frequency has zero variance".into()));
    }
    let cov = survival(cross, p1, p2)? - p1 * p2;
    Ok(cov / (v1 * v2).sqrt())
}

/// Statistics of the copula-based model 𝓒𝓜(n, ω, p̃, μ̃, σ̃, θ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmStats {
    pub prob_no_redemption: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Pr{R = 0} = C(1 − p̃, …, 1 − p̃), E[R] = p̃μ̃ and
/// V[R] = (p̃σ̃² + (p̃ − C̆)μ̃²)𝓗 + (C̆ − p̃²)μ̃² with C̆ = C̆(p̃, p̃).
pub fn cm_stats(m: &ImModel, c: &CopulaSpec) -> Result<CmStats> {
    m.structure.validate()?;
    let (p, mu, s) = (m.p_tilde, m.mu_tilde, m.sigma_tilde);
    let h = m.structure.herfindahl();
    let joint = survival_diag2(c, p)?;
    let variance = (p * s * s + (p - joint) * mu * mu) * h + (joint - p * p) * mu * mu;
    Ok(CmStats {
        prob_no_redemption: diagonal(c, 1.0 - p, m.structure.n())?,
        mean: p * mu,
        variance: variance.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liability::{im_moments, LiabilityStructure};

    fn clayton(t: f64) -> CopulaSpec {
        CopulaSpec::clayton(t).unwrap()
    }

    #[test]
    fn diagonal_examples() {
        let d = diagonal(&clayton(1e-10), 0.9, 10.0).unwrap();
        assert!((d - 0.9f64.powi(10)).abs() < 1e-6);
        for n in [1.0, 2.0, 50.0, f64::INFINITY] {
            assert_eq!(diagonal(&CopulaSpec::UPPER_FRECHET, 0.9, n).unwrap(), 0.9);
        }
        let d = diagonal(&clayton(2.0), 0.9, 2.0).unwrap();
        assert!((d - (2.0 * 0.9f64.powi(-2) - 1.0).powf(-0.5)).abs() < 1e-14);
        assert!(diagonal(&CopulaSpec { family: CopulaFamily::Normal, theta: -0.1 }, 0.5, 2.0).is_err());
    }

    #[test]
    fn normal_diagonal_exact_cases() {
        // n = 2, u = 1/2: Pr{X₁ ≤ 0, X₂ ≤ 0} = 1/4 + arcsin(ρ)/(2π).
        for rho in [0.1, 0.5, 0.9, 0.99] {
            let d = diagonal(&CopulaSpec::normal(rho).unwrap(), 0.5, 2.0).unwrap();
            let exact = 0.25 + rho.asin() / (2.0 * PI);
            assert!((d - exact).abs() < 1e-9, "rho={rho}: {d} vs {exact}");
        }
        // n = 3, u = 1/2: 1/8 + 3 arcsin(ρ)/(4π).
        let d = diagonal(&CopulaSpec::normal(0.3).unwrap(), 0.5, 3.0).unwrap();
        assert!((d - (0.125 + 3.0 * 0.3f64.asin() / (4.0 * PI))).abs() < 1e-9);
        let d = diagonal(&CopulaSpec::normal(0.4).unwrap(), 0.7, 1.0).unwrap();
        assert_eq!(d, 0.7);
    }

    #[test]
    fn diagonal_orderings() {
        let u = 0.95;
        let mut prev = 1.0;
        for n in [1.0, 2.0, 5.0, 20.0, 100.0] {
            let d = diagonal(&CopulaSpec::normal(0.4).unwrap(), u, n).unwrap();
            assert!(d <= prev + 1e-12 && d >= u.powf(n) - 1e-12 && d <= u);
            prev = d;
        }
        let mut prev = 0.0;
        for t in [0.0, 0.5, 1.0, 3.0, 10.0] {
            let d = diagonal(&clayton(t), u, 10.0).unwrap();
            assert!(d >= prev - 1e-12);
            prev = d;
        }
        assert_eq!(diagonal(&clayton(2.0), u, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn survival_diagonal_examples() {
        assert!((survival_diag2(&CopulaSpec::PRODUCT, 0.3).unwrap() - 0.09).abs() < 1e-15);
        assert!((survival_diag2(&CopulaSpec::UPPER_FRECHET, 0.3).unwrap() - 0.3).abs() < 1e-15);
        let v = survival_diag2(&clayton(2.0), 0.25).unwrap();
        let exact = 2.0 * 0.25 - 1.0 + (2.0 * 0.75f64.powi(-2) - 1.0).powf(-0.5);
        assert!((v - exact).abs() < 1e-14);
        assert_eq!(survival_diag2(&clayton(2.0), 0.0).unwrap(), 0.0);
        assert_eq!(survival_diag2(&clayton(2.0), 1.0).unwrap(), 1.0);
    }

    #[test]
    fn correlation_table() {
        let clayton_rows = [
            (1.0, 0.3333, 0.4826, 0.5000),
            (2.0, 0.5000, 0.6902, 0.7071),
            (5.0, 0.7143, 0.8925, 0.9010),
            (10.0, 0.8333, 0.9626, 0.9659),
            (50.0, 0.9615, 0.9980, 0.9982),
        ];
        for (t, tau, rho_s, rho) in clayton_rows {
            let v = correlation_views(&clayton(t)).unwrap();
            assert!((v.kendall_tau - tau).abs() < 5e-5, "{t}: {v:?}");
            assert!((v.spearman_rho - rho_s).abs() < 5e-5, "{t}: {v:?}");
            assert!((v.pearson_rho - rho).abs() < 5e-5, "{t}: {v:?}");
        }
        let normal_rows = [
            (0.2, 0.1282, 0.1913),
            (0.5, 0.3333, 0.4826),
            (0.75, 0.5399, 0.7341),
            (0.9, 0.7129, 0.8915),
            (0.99, 0.9099, 0.9890),
        ];
        for (t, tau, rho_s) in normal_rows {
            let v = correlation_views(&CopulaSpec::normal(t).unwrap()).unwrap();
            assert!((v.kendall_tau - tau).abs() < 5e-5 && (v.spearman_rho - rho_s).abs() < 5e-5, "{t}: {v:?}");
            assert_eq!(v.pearson_rho, t);
        }
        let zero = correlation_views(&clayton(0.0)).unwrap();
        assert_eq!((zero.kendall_tau, zero.spearman_rho, zero.pearson_rho), (0.0, 0.0, 0.0));
    }

    #[test]
    fn pearson_inversion() {
        assert!((theta_from_pearson(CopulaFamily::Clayton, 0.5).unwrap().theta - 1.0).abs() < 1e-12);
        assert_eq!(theta_from_pearson(CopulaFamily::Normal, 0.2).unwrap().theta, 0.2);
        assert_eq!(theta_from_pearson(CopulaFamily::Clayton, 0.0).unwrap().theta, 0.0);
        assert_eq!(theta_from_pearson(CopulaFamily::Clayton, 1.0).unwrap(), CopulaSpec::UPPER_FRECHET);
        for rho in [0.05, 0.3, 0.77, 0.999] {
            let c = theta_from_pearson(CopulaFamily::Clayton, rho).unwrap();
            assert!((correlation_views(&c).unwrap().pearson_rho - rho).abs() < 1e-10);
        }
    }

    #[test]
    fn frequency_moment_limits() {
        let v = freq_moments(0.2, 0.1, &CopulaSpec::PRODUCT).unwrap();
        assert!((v.variance - 0.2 * 0.8 * 0.1).abs() < 1e-15);
        let v = freq_moments(0.2, 0.0, &CopulaSpec::UPPER_FRECHET).unwrap();
        assert!((v.variance - 0.16).abs() < 1e-15);
        for t in [0.3, 2.0, 8.0] {
            let v = freq_moments(0.2, 0.05, &clayton(t)).unwrap().variance;
            assert!(v >= 0.2 * 0.8 * 0.05 - 1e-15 && v <= 0.16 + 1e-15);
        }
    }

    #[test]
    fn theta_calibration_examples() {
        let c = calibrate_theta(0.25, 0.20, 1.0 / 20.0, CopulaFamily::Clayton).unwrap();
        assert!((c.pearson - 0.445).abs() < 0.005, "{c:?}");
        let indep = (0.3f64 * 0.7 / 20.0).sqrt();
        let c = calibrate_theta(0.3, indep, 1.0 / 20.0, CopulaFamily::Clayton).unwrap();
        assert!(c.copula.theta.abs() < 1e-8 && c.pearson.abs() < 1e-8);
        let err = calibrate_theta(0.2, 0.01, 1.0 / 20.0, CopulaFamily::Normal).unwrap_err();
        assert!(matches!(err, Error::InfeasibleCorrelation { violated, .. } if violated.starts_with("independence")));
        let err = calibrate_theta(0.1, 0.5, 1.0 / 20.0, CopulaFamily::Clayton).unwrap_err();
        assert!(matches!(err, Error::InfeasibleCorrelation { violated, .. } if violated.starts_with("comonotone")));
    }

    #[test]
    fn theta_calibration_round_trip() {
        for (family, theta) in [(CopulaFamily::Clayton, 1.7), (CopulaFamily::Normal, 0.35)] {
            let spec = CopulaSpec::new(family, theta).unwrap();
            let h = 1.0 / 15.0;
            let v = freq_moments(0.12, h, &spec).unwrap();
            let c = calibrate_theta(0.12, v.variance.sqrt(), h, family).unwrap();
            assert!((c.copula.theta - theta).abs() < 1e-8, "{family:?}: {c:?}");
        }
    }

    #[test]
    fn cross_correlation_cases() {
        let intra = clayton(1.5);
        let r = cross_correlation(0.1, 0.2, &CopulaSpec::PRODUCT, (&intra, 0.1), (&intra, 0.05)).unwrap();
        assert_eq!(r, 0.0);
        let r = cross_correlation(0.1, 0.1, &intra, (&intra, 0.0), (&intra, 0.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let c12 = clayton(0.8);
        let a = cross_correlation(0.1, 0.3, &c12, (&intra, 0.1), (&clayton(3.0), 0.2)).unwrap();
        let b = cross_correlation(0.3, 0.1, &c12, (&clayton(3.0), 0.2), (&intra, 0.1)).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!(matches!(
            cross_correlation(0.0, 0.1, &c12, (&intra, 0.1), (&intra, 0.1)),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn cm_statistics() {
        let m = ImModel::new(LiabilityStructure::equal(20).unwrap(), 0.1, 0.5, 0.3).unwrap();
        let s = cm_stats(&m, &CopulaSpec::PRODUCT).unwrap();
        let v = im_moments(&m);
        assert!((s.mean - v.mean).abs() < 1e-15 && (s.variance - v.variance).abs() < 1e-15);
        assert!((s.prob_no_redemption - 0.9f64.powi(20)).abs() < 1e-15);

        let c = theta_from_pearson(CopulaFamily::Clayton, 0.5).unwrap();
        let s = cm_stats(&m, &c).unwrap();
        assert!(s.prob_no_redemption > 0.9f64.powi(20) && s.prob_no_redemption < 0.9);
        assert!((s.mean - 0.05).abs() < 1e-15);
        let upper = 0.1 * 0.09 / 20.0 + 0.1 * 0.9 * 0.25;
        assert!(s.variance >= v.variance && s.variance <= upper);

        let inf = ImModel::new(LiabilityStructure::summary(None, 0.0).unwrap(), 0.1, 0.5, 0.3).unwrap();
        let s = cm_stats(&inf, &CopulaSpec::UPPER_FRECHET).unwrap();
        assert!((s.variance - 0.1 * 0.9 * 0.25).abs() < 1e-15);
    }
}
