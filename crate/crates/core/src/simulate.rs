//! Monte Carlo engine.
//!
//! Draws are produced in chunks of `chunk_size`. Chunk k owns the ChaCha8
//! stream k of the generator seeded by `seed`, so a run depends only on
//! (seed, n_sims, chunk_size) and never on how chunks are scheduled across
//! threads. Chunk outputs are concatenated in chunk order.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaFamily, CopulaSpec};
use crate::error::{Error, Result};
use crate::liability::{ImModel, LiabilityStructure};
use crate::riskmeasures::{empirical_measures, sorted_quantile, MeasureReport, DEFAULT_RELIABILITY_FLOOR};
use crate::severity::SeverityDist;
use crate::special::norm_cdf;
use crate::zeroinflated::{ZiModel, DAYS_PER_YEAR};

/// Number of daily draws behind the empirical quantile table used by
/// [`aggregate_over_horizon`].
pub const QUANTILE_TABLE_DRAWS: usize = 100_000;
/// Stream reserved for the quantile-table calibration run.
const TABLE_STREAM: u64 = u64::MAX;
/// Two-sample KS critical constant at the 99% level.
pub const KS_C99: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_sims: usize,
    pub seed: u64,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
}

fn default_chunk() -> usize {
    10_000
}

impl SimConfig {
    pub fn new(n_sims: usize, seed: u64) -> Self {
        SimConfig { n_sims, seed, chunk_size: default_chunk() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sims == 0 {
            return Err(Error::Domain("n_sims must be at least 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::Domain("chunk_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Generator for one stream of a seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `draw` `cfg.n_sims` times, chunk by chunk in parallel, and returns
/// the values in chunk order.
fn run_chunks<F>(cfg: &SimConfig, draw: F) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng, &mut Vec<f64>) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let n_chunks = cfg.n_sims.div_ceil(cfg.chunk_size);
    let chunks: Vec<Result<Vec<f64>>> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(cfg.seed, k as u64);
            let len = cfg.chunk_size.min(cfg.n_sims - k * cfg.chunk_size);
            let mut scratch = Vec::new();
            (0..len).map(|_| draw(&mut rng, &mut scratch)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(cfg.n_sims);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Simulated redemption rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSample {
    pub values: Vec<f64>,
    pub model: String,
    pub config: SimConfig,
}

fn open01<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Fills `out` with `n` uniforms coupled by the copula `c`.
pub fn fill_copula<R: Rng>(c: &CopulaSpec, n: usize, rng: &mut R, out: &mut Vec<f64>) -> Result<()> {
    c.validate()?;
    out.clear();
    let c = c.canonical();
    match c.family {
        CopulaFamily::Product => out.extend((0..n).map(|_| open01(rng))),
        CopulaFamily::UpperFrechet => {
            let u = open01(rng);
            out.extend(std::iter::repeat_n(u, n));
        }
        CopulaFamily::Clayton => {
            // Marshall-Olkin: V ~ Gamma(1/θ, 1), uᵢ = (1 + Eᵢ/V)^{−1/θ}.
            let t = c.theta;
            let frailty = Gamma::new(1.0 / t, 1.0)
                .map_err(|e| Error::Parameter(format!("Clayton frailty: {e}")))?
                .sample(rng);
            out.extend((0..n).map(|_| {
                let e = -open01(rng).ln();
                (-(e / frailty).ln_1p() / t).exp()
            }));
        }
        CopulaFamily::Normal => {
            let (a, b) = (c.theta.sqrt(), (1.0 - c.theta).sqrt());
            let z0: f64 = rng.sample(StandardNormal);
            out.extend((0..n).map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                norm_cdf(a * z0 + b * z)
            }));
        }
    }
    Ok(())
}

/// `n` uniforms with dependence `c`.
pub fn sample_copula<R: Rng>(c: &CopulaSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    fill_copula(c, n, rng, &mut out)?;
    Ok(out)
}

/// Sampler for a severity law. Beta laws use the gamma-ratio sampler of
/// `rand_distr`; the other families invert their quantile function.
#[derive(Debug, Clone)]
pub enum SeveritySampler {
    Beta(Beta<f64>),
    Quantile(SeverityDist),
}

impl SeveritySampler {
    pub fn new(dist: &SeverityDist) -> Result<Self> {
        dist.validate()?;
        Ok(match dist {
            SeverityDist::Beta { a, b } => SeveritySampler::Beta(
                Beta::new(*a, *b).map_err(|e| Error::Parameter(format!("beta sampler: {e}")))?,
            ),
            other => SeveritySampler::Quantile(*other),
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<f64> {
        match self {
            SeveritySampler::Beta(b) => Ok(b.sample(rng)),
            SeveritySampler::Quantile(d) => d.quantile(open01(rng)),
        }
    }
}

/// Liability weights of a structure that can be simulated.
fn explicit_weights(s: &LiabilityStructure) -> Result<Vec<f64>> {
    match s {
        LiabilityStructure::Weights { weights } => Ok(weights.clone()),
        LiabilityStructure::Summary { n: Some(n), herfindahl } if (herfindahl * *n as f64 - 1.0).abs() < 1e-9 => {
            Ok(vec![1.0 / *n as f64; *n as usize])
        }
        _ => Err(Error::Input(
            "simulation needs explicit weights or an equal-weight structure with finite n".into(),
        )),
    }
}

/// Draws of the copula-based model: investors redeem when their coupled
/// uniform reaches 1 − p̃, each with an independent severity draw, and the
/// fund rate is Σ ωᵢ Eᵢ Yᵢ. The Product copula gives the individual-based
/// model.
pub fn simulate_cm(m: &ImModel, c: &CopulaSpec, cfg: &SimConfig) -> Result<SimSample> {
    let weights = explicit_weights(&m.structure)?;
    c.validate()?;
    let sampler = SeveritySampler::new(&m.severity()?)?;
    let threshold = 1.0 - m.p_tilde;
    let n = weights.len();
    let values = run_chunks(cfg, |rng, buf| {
        fill_copula(c, n, rng, buf)?;
        let mut r = 0.0;
        for (u, w) in buf.iter().zip(&weights) {
            if *u >= threshold && m.p_tilde > 0.0 {
                r += w * sampler.sample(rng)?;
            }
        }
        Ok(r.min(1.0))
    })?;
    Ok(SimSample {
        values,
        model: format!(
            "CM(n={n}, p={}, mu={}, sigma={}, copula={}({}))",
            m.p_tilde,
            m.mu_tilde,
            m.sigma_tilde,
            c.family.name(),
            c.theta
        ),
        config: *cfg,
    })
}

/// Draws of a zero-inflated model.
pub fn simulate_zi(m: &ZiModel, cfg: &SimConfig) -> Result<SimSample> {
    let sampler = SeveritySampler::new(&m.severity)?;
    let p = m.p;
    let values = run_chunks(cfg, |rng, _| {
        if open01(rng) <= p {
            sampler.sample(rng)
        } else {
            Ok(0.0)
        }
    })?;
    Ok(SimSample { values, model: format!("ZI(p={p}, {:?})", m.severity), config: *cfg })
}

/// A daily model that can be aggregated over a horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DailyModel {
    Zi { model: ZiModel },
    Cm { model: ImModel, copula: CopulaSpec },
}

impl DailyModel {
    pub fn simulate(&self, cfg: &SimConfig) -> Result<SimSample> {
        match self {
            DailyModel::Zi { model } => simulate_zi(model, cfg),
            DailyModel::Cm { model, copula } => simulate_cm(model, copula, cfg),
        }
    }
}

/// Empirical quantile with linear interpolation between order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    sorted: Vec<f64>,
}

impl QuantileTable {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        values.sort_by(f64::total_cmp);
        Ok(QuantileTable { sorted: values })
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let m = self.sorted.len();
        let pos = u.clamp(0.0, 1.0) * (m - 1) as f64;
        let i = (pos.floor() as usize).min(m - 1);
        let frac = pos - i as f64;
        if i + 1 < m {
            self.sorted[i] + frac * (self.sorted[i + 1] - self.sorted[i])
        } else {
            self.sorted[i]
        }
    }
}

/// Rate over several days from daily rates: 1 − Π(1 − Rₕ).
pub fn compound(daily: &[f64]) -> f64 {
    1.0 - daily.iter().map(|r| 1.0 - r).product::<f64>()
}

/// Redemption rate over `n_h` days, R = 1 − Π(1 − R_h), where the daily
/// rates are coupled through a Gaussian AR(1) with lag-one correlation
/// `rho_time` and mapped to the daily law by its empirical quantile.
pub fn aggregate_over_horizon(daily: &DailyModel, n_h: usize, rho_time: f64, cfg: &SimConfig) -> Result<SimSample> {
    if n_h == 0 {
        return Err(Error::Domain("horizon must be at least one day".into()));
    }
    if !(0.0..=1.0).contains(&rho_time) {
        return Err(Error::Domain(format!("time correlation {rho_time} outside [0, 1]")));
    }
    cfg.validate()?;
    let table_cfg = SimConfig { n_sims: QUANTILE_TABLE_DRAWS, seed: cfg.seed, chunk_size: QUANTILE_TABLE_DRAWS };
    let table = {
        // The calibration run uses its own stream so it never overlaps the
        // streams of the aggregation chunks.
        let mut rng = stream_rng(cfg.seed, TABLE_STREAM);
        let sub_seed: u64 = rng.random();
        let daily_sample = daily.simulate(&SimConfig { seed: sub_seed, ..table_cfg })?;
        QuantileTable::new(daily_sample.values)?
    };
    let innovation = (1.0 - rho_time * rho_time).sqrt();
    let values = run_chunks(cfg, |rng, path| {
        path.clear();
        let mut z: f64 = rng.sample(StandardNormal);
        for h in 0..n_h {
            if h > 0 {
                let e: f64 = rng.sample(StandardNormal);
                z = rho_time * z + innovation * e;
            }
            path.push(table.quantile(norm_cdf(z)));
        }
        Ok(compound(path))
    })?;
    Ok(SimSample {
        values,
        model: format!("aggregate(n_h={n_h}, rho_time={rho_time})"),
        config: *cfg,
    })
}

/// Risk measures of a simulated sample with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub measures: MeasureReport,
    pub se_mean: f64,
    pub se_sd_measure: f64,
    pub se_var: f64,
    pub se_cvar: f64,
    /// Share of strictly positive draws.
    pub p_eff: f64,
    pub t_years: f64,
    /// Stress scenario with return time `t_years`.
    pub stress: f64,
    pub warnings: Vec<String>,
}

const MIN_TAIL: usize = 10;

/// Empirical ℚ/ℂ/𝕄/𝕊𝔻 of a sample, their standard errors, and the stress
/// scenario: the positive-draw quantile at 1 − 1/(p_eff·T_days).
///
/// The ℚ standard error comes from the order-statistic spread
/// (x₍k+d₎ − x₍k−d₎)/2 with d = √(nα(1 − α)); the ℂ one is the tail std
/// over √(tail count).
pub fn mc_risk_measures(sample: &SimSample, alpha: f64, c: f64, t_years: f64) -> Result<McReport> {
    if !(t_years > 0.0) {
        return Err(Error::Domain(format!("return time must be positive (got {t_years})")));
    }
    let values = &sample.values;
    let measures = empirical_measures(values, c, alpha, DEFAULT_RELIABILITY_FLOOR)?;
    let n = values.len();
    let nf = n as f64;
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let mean = measures.mean;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    let constant = sorted[0] == sorted[n - 1];
    let sd = if constant { 0.0 } else { m2.sqrt() };
    let se_mean = sd / nf.sqrt();
    let se_sd = if sd > 0.0 { ((m4 - m2 * m2).max(0.0) / (4.0 * m2 * nf)).sqrt() } else { 0.0 };

    let k = crate::riskmeasures::quantile_index(n, alpha);
    let d = (nf * alpha * (1.0 - alpha)).sqrt().ceil() as usize;
    let hi = sorted[(k + d).min(n - 1)];
    let lo = sorted[k.saturating_sub(d)];
    let se_var = 0.5 * (hi - lo);

    let start = sorted.partition_point(|&v| v < measures.var);
    let tail = &sorted[start..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let tail_sd = if tail.len() > 1 && tail[0] != tail[tail.len() - 1] {
        (tail.iter().map(|v| (v - tail_mean).powi(2)).sum::<f64>() / (tail.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let se_cvar = tail_sd / (tail.len() as f64).sqrt();
    let mut warnings = Vec::new();
    if tail.len() < MIN_TAIL {
        warnings.push(format!("quantile-degenerate tail: only {} draws at or above the {alpha} quantile", tail.len()));
    }

    let positives = &sorted[sorted.partition_point(|&v| v <= 0.0)..];
    let p_eff = positives.len() as f64 / nf;
    let t_days = t_years * DAYS_PER_YEAR;
    let stress = if p_eff <= 1.0 / t_days || positives.is_empty() {
        0.0
    } else {
        let level = 1.0 - 1.0 / (p_eff * t_days);
        if level * positives.len() as f64 >= positives.len() as f64 - 1.0 {
            warnings.push(format!("return time {t_years} years exceeds the sample resolution"));
        }
        sorted_quantile(positives, level)
    };
    Ok(McReport {
        measures,
        se_mean,
        se_sd_measure: c.abs() * se_sd,
        se_var,
        se_cvar,
        p_eff,
        t_years,
        stress,
        warnings,
    })
}

/// Two-sample Kolmogorov-Smirnov comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub pass_at_99: bool,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        // Step past every copy of the smallest remaining value in both
        // samples so ties are compared at the same abscissa.
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let critical = KS_C99 * (((na + nb) as f64) / (na as f64 * nb as f64)).sqrt();
    Ok(KsResult { statistic: d, critical, pass_at_99: d < critical })
}

/// One-sample KS distance between a sample and a CDF that may have atoms:
/// both one-sided limits are compared at every observation.
pub fn ks_against_cdf<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(sample: &[f64], cdf: F, cdf_left: G) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < x.len() {
        let v = x[i];
        let first = i;
        while i < x.len() && x[i] == v {
            i += 1;
        }
        d = d.max((i as f64 / n - cdf(v)).abs()).max((first as f64 / n - cdf_left(v)).abs());
    }
    Ok(d)
}

/// AR(1) reduced form of the spillover loop R(t) = R̄ + φR(t − 1) + u(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spillover {
    pub phi: f64,
    pub r_bar: f64,
    pub long_run_mean: f64,
}

/// A simulated spillover path and the number of clipped steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpilloverPath {
    pub values: Vec<f64>,
    pub clipped: usize,
}

pub fn spillover_scaling(phi1: f64, phi2: f64, r_bar: f64) -> Result<Spillover> {
    let phi = phi1 * phi2;
    if !(phi.abs() < 1.0) {
        return Err(Error::Nonstationary { phi: phi.abs() });
    }
    Ok(Spillover { phi, r_bar, long_run_mean: r_bar / (1.0 - phi) })
}

impl Spillover {
    /// Iterates the recursion from `r0` with Gaussian noise of std
    /// `noise_sd`, clipping each step to [0, 1].
    pub fn path<R: Rng>(&self, steps: usize, r0: f64, noise_sd: f64, rng: &mut R) -> SpilloverPath {
        let mut values = Vec::with_capacity(steps);
        let mut r = r0;
        let mut clipped = 0;
        for _ in 0..steps {
            let e: f64 = rng.sample(StandardNormal);
            let next = self.r_bar + self.phi * r + noise_sd * e;
            r = next.clamp(0.0, 1.0);
            if r != next {
                clipped += 1;
            }
            values.push(r);
        }
        SpilloverPath { values, clipped }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liability::im_moments;
    use crate::special::norm_ppf;
    use crate::zeroinflated::{zi_cdf, zi_quantile};

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    fn gaussian_corr(c: &CopulaSpec, draws: usize) -> f64 {
        let mut rng = stream_rng(7, 0);
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for _ in 0..draws {
            let u = sample_copula(c, 2, &mut rng).unwrap();
            let (x, y) = (norm_ppf(u[0]), norm_ppf(u[1]));
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn copula_sampler_correlations() {
        let n = 200_000;
        let se = 1.0 / (n as f64).sqrt();
        assert!(gaussian_corr(&CopulaSpec::PRODUCT, n).abs() < 3.0 * se);
        let r = gaussian_corr(&CopulaSpec::normal(0.5).unwrap(), n);
        assert!((r - 0.5).abs() < 3.0 * (1.0 - 0.25) * se, "{r}");
    }

    #[test]
    fn clayton_sampler_kendall_tau() {
        let mut rng = stream_rng(11, 3);
        let c = CopulaSpec::clayton(2.0).unwrap();
        let pairs: Vec<(f64, f64)> = (0..3000)
            .map(|_| {
                let u = sample_copula(&c, 2, &mut rng).unwrap();
                (u[0], u[1])
            })
            .collect();
        let mut concordant = 0i64;
        let mut total = 0i64;
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                let s = (pairs[i].0 - pairs[j].0) * (pairs[i].1 - pairs[j].1);
                concordant += if s > 0.0 { 1 } else { -1 };
                total += 1;
            }
        }
        let tau = concordant as f64 / total as f64;
        assert!((tau - 0.5).abs() < 0.02, "{tau}");
    }

    #[test]
    fn clayton_sampler_matches_diagonal() {
        let c = CopulaSpec::clayton(2.0).unwrap();
        let mut rng = stream_rng(5, 1);
        let draws = 200_000;
        let hits = (0..draws)
            .filter(|_| sample_copula(&c, 2, &mut rng).unwrap().iter().all(|u| *u <= 0.9))
            .count();
        let freq = hits as f64 / draws as f64;
        let exact = crate::copula::diagonal(&c, 0.9, 2.0).unwrap();
        let se = (exact * (1.0 - exact) / draws as f64).sqrt();
        assert!((freq - exact).abs() < 4.0 * se, "{freq} vs {exact}");
    }

    #[test]
    fn product_cm_matches_im_moments() {
        let m = ImModel::new(LiabilityStructure::equal(10).unwrap(), 0.1, 0.5, 0.3).unwrap();
        let s = simulate_cm(&m, &CopulaSpec::PRODUCT, &SimConfig::new(200_000, 42)).unwrap();
        let (mean, var) = mean_var(&s.values);
        let v = im_moments(&m);
        let n = s.values.len() as f64;
        assert!((mean - v.mean).abs() < 4.0 * (v.variance / n).sqrt());
        assert!((var - v.variance).abs() < 0.05 * v.variance, "{var} vs {}", v.variance);
        assert!(s.values.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn single_investor_is_zero_inflated() {
        let m = ImModel::new(LiabilityStructure::equal(1).unwrap(), 0.3, 0.2, 0.1).unwrap();
        let s = simulate_cm(&m, &CopulaSpec::clayton(3.0).unwrap(), &SimConfig::new(20_000, 1)).unwrap();
        let zi = ZiModel::beta_musigma(0.3, 0.2, 0.1).unwrap();
        let left = |x: f64| if x > 0.0 { zi_cdf(&zi, x) } else { 0.0 };
        let d = ks_against_cdf(&s.values, |x| zi_cdf(&zi, x), left).unwrap();
        assert!(d < KS_C99 / (s.values.len() as f64).sqrt(), "{d}");
    }

    #[test]
    fn comonotone_severity_averages() {
        let n = 16;
        let m = ImModel::new(LiabilityStructure::equal(n).unwrap(), 0.2, 0.4, 0.2).unwrap();
        let s = simulate_cm(&m, &CopulaSpec::UPPER_FRECHET, &SimConfig::new(50_000, 9)).unwrap();
        let pos: Vec<f64> = s.values.iter().copied().filter(|v| *v > 0.0).collect();
        let (mean, var) = mean_var(&pos);
        assert!((mean - 0.4).abs() < 0.005);
        assert!((var.sqrt() - 0.2 / (n as f64).sqrt()).abs() < 0.003, "{}", var.sqrt());
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let m = ImModel::new(LiabilityStructure::equal(5).unwrap(), 0.2, 0.3, 0.2).unwrap();
        let cfg = SimConfig { n_sims: 5000, seed: 3, chunk_size: 700 };
        let c = CopulaSpec::normal(0.4).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_cm(&m, &c, &cfg).unwrap());
        let b = four.install(|| simulate_cm(&m, &c, &cfg).unwrap());
        assert_eq!(a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn horizon_of_one_day_reproduces_daily_law() {
        let daily = DailyModel::Zi { model: ZiModel::beta_musigma(0.4, 0.1, 0.05).unwrap() };
        let cfg = SimConfig::new(20_000, 17);
        let agg = aggregate_over_horizon(&daily, 1, 0.3, &cfg).unwrap();
        let direct = daily.simulate(&SimConfig::new(20_000, 99)).unwrap();
        assert!(ks_two_sample(&agg.values, &direct.values).unwrap().pass_at_99);
        assert!(aggregate_over_horizon(&daily, 0, 0.3, &cfg).is_err());
    }

    #[test]
    fn compounding_bounds() {
        let daily = [0.1, 0.0, 0.3, 0.05];
        let r = compound(&daily);
        assert!(r >= 0.3 && r <= daily.iter().sum::<f64>());
        assert_eq!(compound(&[0.25]), 0.25);
        let model = DailyModel::Zi { model: ZiModel::beta_musigma(0.5, 0.2, 0.1).unwrap() };
        let cfg = SimConfig::new(20_000, 4);
        let q99 = |rho| {
            let s = aggregate_over_horizon(&model, 5, rho, &cfg).unwrap();
            assert!(s.values.iter().all(|v| (0.0..=1.0).contains(v)));
            let mut v = s.values;
            v.sort_by(f64::total_cmp);
            sorted_quantile(&v, 0.99)
        };
        assert!(q99(0.8) > q99(0.0));
    }

    #[test]
    fn risk_measures_on_simulated_samples() {
        let constant = SimSample { values: vec![0.2; 500], model: "c".into(), config: SimConfig::new(500, 0) };
        let r = mc_risk_measures(&constant, 0.99, 2.0, 1.0).unwrap();
        assert!((r.measures.var - 0.2).abs() < 1e-15 && (r.measures.cvar - 0.2).abs() < 1e-12);
        assert_eq!((r.se_var, r.se_cvar), (0.0, 0.0));
        assert_eq!((r.se_mean, r.se_sd_measure), (0.0, 0.0));

        let zi = ZiModel::new(0.1, SeverityDist::beta(12.0, 12.0).unwrap()).unwrap();
        let s = simulate_zi(&zi, &SimConfig::new(400_000, 8)).unwrap();
        let r = mc_risk_measures(&s, 0.99, 2.0, 1.0).unwrap();
        let q = zi_quantile(&zi, 0.99).unwrap();
        assert!((r.measures.var - q).abs() < 3.0 * r.se_var.max(1e-4), "{} vs {q} (se {})", r.measures.var, r.se_var);
        assert!(r.measures.cvar >= r.measures.var);
        assert!((r.p_eff - 0.1).abs() < 0.002);
    }

    #[test]
    fn ks_statistic() {
        let a = [0.1, 0.2, 0.3];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass_at_99);
        let r = ks_two_sample(&[0.0, 0.0, 1.0], &[2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(ks_two_sample(&[], &a).is_err());
    }

    #[test]
    fn spillover() {
        let s = spillover_scaling(1.0, 0.5, 0.02).unwrap();
        assert!((s.long_run_mean - 0.04).abs() < 1e-15);
        assert_eq!(spillover_scaling(0.0, 0.7, 0.03).unwrap().long_run_mean, 0.03);
        assert!(matches!(spillover_scaling(2.0, 0.5, 0.01), Err(Error::Nonstationary { .. })));
        let s = spillover_scaling(0.8, 0.5, 0.2).unwrap();
        let mut rng = stream_rng(1, 0);
        let path = s.path(1_000_000, s.long_run_mean, 0.01, &mut rng);
        assert_eq!(path.clipped, 0);
        let (m, _) = mean_var(&path.values);
        // AR(1) long-run std of the mean: σ/(1 − φ)/√n.
        let se = 0.01 / (1.0 - s.phi) / (path.values.len() as f64).sqrt();
        assert!((m - s.long_run_mean).abs() < 3.0 * se, "{m}");
    }
}
