//! One function per subcommand. Each returns the tables to write; per-cell
//! failures become rows with an `error` column instead of aborting.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use redstress::copula::{calibrate_theta, cm_stats, correlation_views, CopulaFamily, CopulaSpec};
use redstress::factors::{
    align, autocorrelation, decomposition_fits, flow_performance_fit, macro_fit, read_factor_csv,
    vix_conditional, Dated, FactorSeries, RegressionResult,
};
use redstress::flowdata::{
    daily_series, pool, read_flow_csv, CategoryCell, FlowRecord, FundKind, PoolFilter, RedemptionSample,
    SeriesWeighting, Taxonomy,
};
use redstress::liability::{calibrate_im, weights_from_counts, FundEstimate, ImModel, LiabilityStructure, MomentWeights};
use redstress::riskmeasures::{coherency_shocks, empirical_measures, CoherencyInputs, ConfidenceBucket};
use redstress::simulate::{aggregate_over_horizon, mc_risk_measures, DailyModel, SimConfig};
use redstress::zeroinflated::{fit_mle, fit_mm, zi_moments, zi_stress, ZiFit, ZiModel};
use redstress::{Error, SeverityDist, SeverityFamily};

use crate::config::{Estimator, RunConfig, SimModelKind};
use crate::report::{Cell, Table};
use crate::CliError;

/// Flow records with their category cells.
pub struct FlowData {
    pub records: Vec<FlowRecord>,
    pub cells: Vec<CategoryCell>,
}

/// Reads the flow file. A bad header is fatal; bad rows are reported on
/// stderr with their line numbers and skipped.
pub fn load_flows(cfg: &RunConfig) -> Result<FlowData, CliError> {
    let path = cfg.flows_path()?;
    let file = File::open(path).map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    let report = read_flow_csv(file).map_err(|e| CliError::Ingest(format!("{}: {e}", path.display())))?;
    for r in &report.rejected {
        eprintln!("warning: {}:{}: {}", path.display(), r.line, r.message);
    }
    let observed = Taxonomy::from_records(&report.records);
    let taxonomy = Taxonomy {
        investor_categories: pick(&cfg.taxonomy.investor_categories, observed.investor_categories),
        fund_categories: pick(&cfg.taxonomy.fund_categories, observed.fund_categories),
    };
    Ok(FlowData { records: report.records, cells: taxonomy.cells() })
}

fn pick(configured: &[String], observed: Vec<String>) -> Vec<String> {
    if configured.is_empty() {
        observed
    } else {
        configured.to_vec()
    }
}

fn filter(cfg: &RunConfig) -> PoolFilter {
    PoolFilter {
        exclude_mandates: cfg.filter.exclude_mandates,
        min_tna: cfg.filter.min_tna,
        date_from: cfg.filter.date_from,
        date_to: cfg.filter.date_to,
    }
}

fn cell_prefix(c: &CategoryCell) -> Vec<Cell> {
    vec![c.investor_category.as_str().into(), c.fund_category.as_str().into()]
}

fn blanks(n: usize) -> Vec<Cell> {
    vec![Cell::Empty; n]
}

/// Runs `f` on every cell in parallel, keeping the cell order.
fn per_cell<F>(cells: &[CategoryCell], f: F) -> Vec<Vec<Cell>>
where
    F: Fn(&CategoryCell) -> Vec<Vec<Cell>> + Sync + Send,
{
    cells.par_iter().map(f).collect::<Vec<_>>().into_iter().flatten().collect()
}

pub fn stats(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let data = load_flows(cfg)?;
    let flt = filter(cfg);
    let m = &cfg.measures;
    let mut t = Table::new(
        "stats",
        &[
            "investor_category", "fund_category", "n", "n0", "n1", "confidence", "mean", "sd_measure", "var",
            "cvar", "ratio", "low_confidence", "error",
        ],
    );
    t.rows = per_cell(&data.cells, |cell| {
        let s = pool(&data.records, cell, &flt);
        let mut row = cell_prefix(cell);
        row.extend([s.n.into(), s.n0.into(), s.n1.into(), ConfidenceBucket::from_count(s.n).label().into()]);
        match empirical_measures(&s.values, m.c, m.alpha, m.reliability_floor) {
            Ok(r) => row.extend([
                r.mean.into(),
                r.sd_measure.into(),
                r.var.into(),
                r.cvar.into(),
                r.ratio.into(),
                r.low_confidence.into(),
                Cell::Empty,
            ]),
            Err(e) => {
                row.extend(blanks(5));
                row.extend([true.into(), e.to_string().into()]);
            }
        }
        vec![row]
    });
    t.meta("alpha", m.alpha);
    t.meta("c", m.c);
    Ok(vec![t])
}

/// ZI fit of a sample with the configured estimator. Cells with fewer than
/// two positive rates get a frequency-only fit.
fn fit_zi_sample(s: &RedemptionSample, est: Estimator) -> Result<ZiFit, Error> {
    if s.n1 < 2 {
        return fit_mle(s);
    }
    match est {
        Estimator::Mle => fit_mle(s),
        Estimator::Mm => fit_mm(s),
    }
}

/// The fitted severity in the configured family (moment matching for
/// families other than Beta).
fn family_severity(fit: &ZiFit, family: SeverityFamily) -> Result<Option<SeverityDist>, Error> {
    match (fit.severity, fit.mu_hat, fit.sigma_hat) {
        (Some(sev), _, _) if family == SeverityFamily::Beta => Ok(Some(sev)),
        (Some(_), Some(mu), Some(sigma)) => SeverityDist::match_moments(family, mu, sigma).map(Some),
        _ => Ok(None),
    }
}

pub fn fit_zi(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let data = load_flows(cfg)?;
    let flt = filter(cfg);
    let family = cfg.model.severity_family;
    let mut t = Table::new(
        "fit_zi",
        &[
            "investor_category", "fund_category", "n", "n0", "n1", "confidence", "p", "mu", "sigma", "family",
            "param_a", "param_b", "loglik", "converged", "low_confidence", "error",
        ],
    );
    t.rows = per_cell(&data.cells, |cell| {
        let s = pool(&data.records, cell, &flt);
        let mut row = cell_prefix(cell);
        row.extend([s.n.into(), s.n0.into(), s.n1.into(), ConfidenceBucket::from_count(s.n).label().into()]);
        let low = s.n1 < 2 || s.n < cfg.measures.reliability_floor;
        let fit = fit_zi_sample(&s, cfg.model.estimator)
            .and_then(|f| family_severity(&f, family).map(|sev| (f, sev)));
        match fit {
            Ok((f, sev)) => {
                let (a, b) = sev.map(|d| d.params()).unzip();
                let mut issues = f.warnings.clone();
                issues.extend(f.issue.clone());
                row.extend([
                    f.p.into(),
                    f.mu_hat.into(),
                    f.sigma_hat.into(),
                    sev.map_or(Cell::Empty, |_| family.name().into()),
                    a.into(),
                    b.into(),
                    f.loglik.into(),
                    f.converged.into(),
                    low.into(),
                    issues.join("; ").into(),
                ]);
            }
            Err(e) => {
                row.extend(blanks(8));
                row.extend([true.into(), e.to_string().into()]);
            }
        }
        vec![row]
    });
    t.meta("estimator", format!("{:?}", cfg.model.estimator).to_lowercase());
    Ok(vec![t])
}

/// Per-fund moment estimates of one cell, with observation counts.
fn fund_estimates(
    records: &[FlowRecord],
    cell: &CategoryCell,
    flt: &PoolFilter,
    effective_n: f64,
) -> (Vec<FundEstimate>, Vec<usize>, usize) {
    let mut by_fund: BTreeMap<&str, Vec<FlowRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.investor_category == cell.investor_category && r.fund_category == cell.fund_category) {
        by_fund.entry(r.fund_id.as_str()).or_default().push(r.clone());
    }
    let (mut funds, mut counts, mut skipped) = (Vec::new(), Vec::new(), 0);
    for recs in by_fund.values() {
        let s = pool(recs, cell, flt);
        let n_eff = if recs.iter().all(|r| r.fund_kind == FundKind::MandateOrDedicated) { 1.0 } else { effective_n };
        match fit_mm(&s) {
            Ok(f) => {
                funds.push(FundEstimate {
                    p_hat: f.p,
                    mu_hat: f.mu_hat.unwrap_or(0.0),
                    sigma_hat: f.sigma_hat.unwrap_or(0.0),
                    effective_n: n_eff,
                });
                counts.push(s.n);
            }
            Err(_) => skipped += 1,
        }
    }
    (funds, counts, skipped)
}

pub fn fit_im(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let data = load_flows(cfg)?;
    let flt = filter(cfg);
    let mut t = Table::new(
        "fit_im",
        &[
            "investor_category", "fund_category", "n_funds", "n_funds_skipped", "n", "p_tilde", "mu_tilde",
            "sigma_tilde", "objective", "unrealistic", "low_confidence", "error",
        ],
    );
    t.rows = per_cell(&data.cells, |cell| {
        let (funds, counts, skipped) = fund_estimates(&data.records, cell, &flt, cfg.model.effective_n);
        let n: usize = counts.iter().sum();
        let mut row = cell_prefix(cell);
        row.extend([funds.len().into(), skipped.into(), n.into()]);
        let low = n < cfg.measures.reliability_floor;
        let fit = weights_from_counts(&counts)
            .and_then(|w| calibrate_im(&funds, &w, MomentWeights::default()))
            .map_err(|e| if funds.is_empty() { Error::EmptySample } else { e });
        match fit {
            Ok(c) => row.extend([
                c.p_tilde.into(),
                c.mu_tilde.into(),
                c.sigma_tilde.into(),
                c.objective.into(),
                c.unrealistic.into(),
                low.into(),
                Cell::Empty,
            ]),
            Err(e) => {
                row.extend(blanks(5));
                row.extend([true.into(), e.to_string().into()]);
            }
        }
        vec![row]
    });
    t.meta("effective_n", cfg.model.effective_n);
    Ok(vec![t])
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 { xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, v.sqrt())
}

pub fn fit_copula(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let data = load_flows(cfg)?;
    let flt = filter(cfg);
    let (h, family) = (cfg.model.herfindahl, cfg.model.copula_family);
    let mut t = Table::new(
        "fit_copula",
        &[
            "investor_category", "fund_category", "n_days", "confidence", "mean_frequency", "std_frequency",
            "herfindahl", "family", "theta", "pearson_rho", "kendall_tau", "spearman_rho", "target", "error",
        ],
    );
    t.rows = per_cell(&data.cells, |cell| {
        let s = daily_series(&data.records, cell, &flt, SeriesWeighting::Equal);
        let mut row = cell_prefix(cell);
        row.extend([s.len().into(), ConfidenceBucket::from_count(s.len()).label().into()]);
        if s.is_empty() {
            row.extend(blanks(9));
            row.push(Error::EmptySample.to_string().into());
            return vec![row];
        }
        let (mean, sd) = mean_sd(&s.frequency);
        row.extend([mean.into(), sd.into(), h.into(), family.name().into()]);
        let fit = calibrate_theta(mean, sd, h, family).and_then(|c| Ok((correlation_views(&c.copula)?, c)));
        match fit {
            Ok((views, c)) => row.extend([
                c.copula.theta.into(),
                views.pearson_rho.into(),
                views.kendall_tau.into(),
                views.spearman_rho.into(),
                c.target.into(),
                Cell::Empty,
            ]),
            Err(e) => {
                row.extend(blanks(5));
                row.push(e.to_string().into());
            }
        }
        vec![row]
    });
    Ok(vec![t])
}

/// Label of a configured triplet, as written in the file.
fn triplet_label(p: f64, mu: f64, sigma: f64) -> String {
    format!("({p}, {mu}, {sigma})")
}

pub fn stress(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    struct Source {
        origin: &'static str,
        label: String,
        params: Result<(f64, f64, f64, SeverityFamily), Error>,
    }
    let mut sources: Vec<Source> = cfg
        .stress
        .scenarios
        .iter()
        .map(|s| {
            let label = s.name.clone().unwrap_or_else(|| triplet_label(s.p, s.mu, s.sigma));
            let family = s.severity_family.unwrap_or(cfg.model.severity_family);
            Source { origin: "config", label, params: Ok((s.p, s.mu, s.sigma, family)) }
        })
        .collect();
    if cfg.stress.from_fits && cfg.input.flows.is_some() {
        let data = load_flows(cfg)?;
        let flt = filter(cfg);
        let fitted: Vec<Source> = data
            .cells
            .par_iter()
            .map(|cell| {
                let s = pool(&data.records, cell, &flt);
                let params = fit_zi_sample(&s, cfg.model.estimator).and_then(|f| match (f.mu_hat, f.sigma_hat) {
                    (Some(mu), Some(sigma)) => Ok((f.p, mu, sigma, cfg.model.severity_family)),
                    _ => Err(Error::SeverityUnfittable(f.issue.unwrap_or_else(|| "no positive observations".into()))),
                });
                Source { origin: "fit", label: cell.to_string(), params }
            })
            .collect();
        sources.extend(fitted);
    }
    if sources.is_empty() && cfg.stress.coherency.is_none() {
        return Err(CliError::Config("no stress scenarios: add [[stress.scenarios]] or an input flow file".into()));
    }
    let grid = &cfg.measures.t_grid;
    let mut t = Table::new(
        "stress",
        &["source", "label", "p", "mu", "sigma", "family", "t_years", "stress", "error"],
    );
    for src in &sources {
        match &src.params {
            Ok((p, mu, sigma, family)) => {
                let head = || -> Vec<Cell> {
                    vec![
                        src.origin.into(),
                        src.label.as_str().into(),
                        (*p).into(),
                        (*mu).into(),
                        (*sigma).into(),
                        family.name().into(),
                    ]
                };
                let model = SeverityDist::match_moments(*family, *mu, *sigma).and_then(|d| ZiModel::new(*p, d));
                match model {
                    Ok(m) => {
                        for &ty in grid {
                            let mut row = head();
                            row.push(ty.into());
                            match zi_stress(&m, ty) {
                                Ok(v) => row.extend([v.into(), Cell::Empty]),
                                Err(e) => row.extend([Cell::Empty, e.to_string().into()]),
                            }
                            t.push(row);
                        }
                    }
                    Err(e) => {
                        let mut row = head();
                        row.extend([Cell::Empty, Cell::Empty, e.to_string().into()]);
                        t.push(row);
                    }
                }
            }
            Err(e) => {
                let mut row = vec![src.origin.into(), src.label.as_str().into()];
                row.extend(blanks(6));
                row.push(e.to_string().into());
                t.push(row);
            }
        }
    }
    let mut tables = vec![t];
    if let Some(c) = &cfg.stress.coherency {
        let inputs = CoherencyInputs { s_k: c.s_k.clone(), s_j: c.s_j.clone(), m_j: c.m_j.clone(), m_k: c.m_k.clone() };
        let mut ct = Table::new("stress_coherency", &["rule", "fund_index", "investor_index", "shock", "error"]);
        match coherency_shocks(&inputs, c.rule) {
            Ok(m) => {
                for (j, row) in m.shocks.iter().enumerate() {
                    for (k, v) in row.iter().enumerate() {
                        let note = if m.warnings.is_empty() { Cell::Empty } else { m.warnings.join("; ").into() };
                        ct.push(vec![format!("{:?}", c.rule).into(), j.into(), k.into(), (*v).into(), note]);
                    }
                }
            }
            Err(e) => ct.push(vec![format!("{:?}", c.rule).into(), Cell::Empty, Cell::Empty, Cell::Empty, e.to_string().into()]),
        }
        tables.push(ct);
    }
    Ok(tables)
}

pub fn simulate(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let sc = &cfg.simulation;
    let family = sc.severity_family.unwrap_or(cfg.model.severity_family);
    let sim = SimConfig { n_sims: sc.n_sims, seed: sc.seed, chunk_size: sc.chunk_size };
    let fatal = |e: Error| CliError::Model(e.to_string());
    let copula = match sc.copula_family.unwrap_or(CopulaFamily::Product) {
        f @ (CopulaFamily::Product | CopulaFamily::UpperFrechet) => CopulaSpec { family: f, theta: 0.0 },
        f => CopulaSpec::new(f, sc.theta).map_err(fatal)?,
    };
    let (daily, analytic, n_holders) = match sc.model {
        SimModelKind::Zi => {
            let m = SeverityDist::match_moments(family, sc.mu, sc.sigma)
                .and_then(|d| ZiModel::new(sc.p, d))
                .map_err(fatal)?;
            let mo = zi_moments(&m);
            (DailyModel::Zi { model: m }, (1.0 - m.p, mo.mean, mo.variance), 1.0)
        }
        SimModelKind::Cm => {
            let structure = match &sc.weights {
                Some(w) => LiabilityStructure::weights(w.clone()),
                None => LiabilityStructure::equal(sc.n),
            }
            .map_err(fatal)?;
            let n = structure.n();
            let mut m = ImModel::new(structure, sc.p, sc.mu, sc.sigma).map_err(fatal)?;
            m.severity_family = family;
            let st = cm_stats(&m, &copula).map_err(fatal)?;
            (DailyModel::Cm { model: m, copula }, (st.prob_no_redemption, st.mean, st.variance), n)
        }
    };
    let sample = if sc.horizon_days == 1 {
        daily.simulate(&sim)
    } else {
        aggregate_over_horizon(&daily, sc.horizon_days, sc.rho_time, &sim)
    }
    .map_err(fatal)?;
    let rep = mc_risk_measures(&sample, cfg.measures.alpha, cfg.measures.c, sc.t_years).map_err(fatal)?;
    let n = sample.values.len() as f64;
    let zero_mc = sample.values.iter().filter(|v| **v == 0.0).count() as f64 / n;
    let mean_mc = sample.values.iter().sum::<f64>() / n;
    let var_mc = sample.values.iter().map(|v| (v - mean_mc).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    // Closed forms describe the daily law only.
    let daily_only = |v: f64| if sc.horizon_days == 1 { Cell::Num(v) } else { Cell::Empty };
    let me = &rep.measures;
    let mut t = Table::new(
        "simulate",
        &[
            "model", "copula", "theta", "n_holders", "severity_family", "p", "mu", "sigma", "n_sims", "seed",
            "horizon_days", "rho_time", "alpha", "c", "mean", "se_mean", "sd_measure", "se_sd_measure", "var",
            "se_var", "cvar", "se_cvar", "ratio", "p_eff", "t_years", "stress", "prob_zero_mc",
            "prob_zero_analytic", "mean_analytic", "variance_mc", "variance_analytic", "warnings",
        ],
    );
    t.push(vec![
        sample.model.as_str().into(),
        copula.family.name().into(),
        copula.theta.into(),
        n_holders.into(),
        family.name().into(),
        sc.p.into(),
        sc.mu.into(),
        sc.sigma.into(),
        sc.n_sims.into(),
        sc.seed.into(),
        sc.horizon_days.into(),
        sc.rho_time.into(),
        me.alpha.into(),
        me.c.into(),
        me.mean.into(),
        rep.se_mean.into(),
        me.sd_measure.into(),
        rep.se_sd_measure.into(),
        me.var.into(),
        rep.se_var.into(),
        me.cvar.into(),
        rep.se_cvar.into(),
        me.ratio.into(),
        rep.p_eff.into(),
        rep.t_years.into(),
        rep.stress.into(),
        zero_mc.into(),
        daily_only(analytic.0),
        daily_only(analytic.1),
        var_mc.into(),
        daily_only(analytic.2),
        rep.warnings.join("; ").into(),
    ]);
    t.meta("seed", sc.seed);
    let mut tables = vec![t];
    if sc.dump_sample {
        let mut raw = Table::new("simulate_sample", &["value"]);
        raw.rows = sample.values.iter().map(|v| vec![Cell::Num(*v)]).collect();
        tables.push(raw);
    }
    Ok(tables)
}

fn read_dated(path: Option<&Path>) -> Result<Option<Dated>, CliError> {
    path.map(|p| {
        let f = File::open(p).map_err(|e| CliError::Io(format!("cannot open {}: {e}", p.display())))?;
        read_factor_csv(f).map_err(|e| CliError::Ingest(format!("{}: {e}", p.display())))
    })
    .transpose()
}

fn regression_rows(prefix: &[Cell], analysis: &str, terms: &[&str], r: &RegressionResult) -> Vec<Vec<Cell>> {
    let mut names = Vec::new();
    if r.has_intercept {
        names.push("intercept");
    }
    names.extend_from_slice(terms);
    names
        .iter()
        .enumerate()
        .map(|(i, term)| {
            let mut row = prefix.to_vec();
            row.extend([
                analysis.into(),
                (*term).into(),
                r.coefficients[i].into(),
                r.std_errors[i].into(),
                r.t_stats[i].into(),
                r.centered_r2.into(),
                r.n_obs.into(),
                Cell::Empty,
                Cell::Empty,
            ]);
            row
        })
        .collect()
}

fn error_row(prefix: &[Cell], analysis: &str, e: &Error) -> Vec<Cell> {
    let mut row = prefix.to_vec();
    row.push(analysis.into());
    row.extend(blanks(7));
    row.push(e.to_string().into());
    row
}

pub fn factors(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let data = load_flows(cfg)?;
    let flt = filter(cfg);
    let fc = &cfg.factors;
    let bond = read_dated(cfg.input.bond.as_deref())?;
    let stock = read_dated(cfg.input.stock.as_deref())?;
    let vix = read_dated(cfg.input.vix.as_deref())?;
    let fund_ret = read_dated(cfg.input.fund_returns.as_deref())?;
    let market_ret = read_dated(cfg.input.market_returns.as_deref())?;
    let factor_series = match (&bond, &stock, &vix) {
        (Some(b), Some(s), Some(v)) => Some(FactorSeries::from_levels(b, s, v, fc.horizon)),
        _ => None,
    };
    let mut t = Table::new(
        "factors",
        &[
            "investor_category", "fund_category", "analysis", "term", "estimate", "std_error", "t_stat", "r2",
            "n_obs", "flag", "error",
        ],
    );
    t.rows = per_cell(&data.cells, |cell| {
        let prefix = cell_prefix(cell);
        let s = daily_series(&data.records, cell, &flt, SeriesWeighting::Equal);
        let mut rows = Vec::new();
        match decomposition_fits(&s) {
            Ok(d) => {
                rows.extend(regression_rows(&prefix, "decomposition_frequency", &["frequency"], &d.frequency));
                rows.extend(regression_rows(&prefix, "decomposition_severity", &["severity"], &d.severity));
                let joint_terms: &[&str] = if d.joint.coefficients.len() == 3 { &["frequency", "severity"] } else { &["component"] };
                rows.extend(regression_rows(&prefix, "decomposition_joint", joint_terms, &d.joint));
            }
            Err(e) => rows.push(error_row(&prefix, "decomposition", &e)),
        }
        match &factor_series {
            Some(Ok(f)) => match macro_fit(&s, f) {
                Ok(r) => rows.extend(regression_rows(&prefix, "macro", &["bond", "stock", "vol"], &r)),
                Err(e) => rows.push(error_row(&prefix, "macro", &e)),
            },
            Some(Err(e)) => rows.push(error_row(&prefix, "macro", e)),
            None => {}
        }
        if let Some(v) = &vix {
            let (rates, levels) = align(&s, v);
            let res = if rates.is_empty() { Err(Error::EmptySample) } else { vix_conditional(&rates, &levels, fc.vix_threshold) };
            match res {
                Ok(x) => {
                    let mut row = prefix.clone();
                    row.extend([
                        "vix_conditional".into(),
                        format!("vix>={}", fc.vix_threshold).into(),
                        x.into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        rates.len().into(),
                        Cell::Empty,
                        Cell::Empty,
                    ]);
                    rows.push(row);
                }
                Err(e) => rows.push(error_row(&prefix, "vix_conditional", &e)),
            }
        }
        match autocorrelation(&s.rate, fc.max_order) {
            Ok(a) => {
                for (k, (r, pv)) in a.rho.iter().zip(&a.p_values).enumerate() {
                    let mut row = prefix.clone();
                    row.extend([
                        "autocorrelation".into(),
                        format!("order{}", k + 1).into(),
                        (*r).into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        s.len().into(),
                        (*pv < 0.05).into(),
                        Cell::Empty,
                    ]);
                    rows.push(row);
                }
                let mut row = prefix.clone();
                row.extend([
                    "autocorrelation".into(),
                    "max".into(),
                    a.max.into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    s.len().into(),
                    a.significant.into(),
                    Cell::Empty,
                ]);
                rows.push(row);
            }
            Err(e) => rows.push(error_row(&prefix, "autocorrelation", &e)),
        }
        if let (Some(fr), Some(mr)) = (&fund_ret, &market_ret) {
            let fm: BTreeMap<_, _> = fr.iter().copied().collect();
            let mm: BTreeMap<_, _> = mr.iter().copied().collect();
            let (mut y, mut f, mut m) = (Vec::new(), Vec::new(), Vec::new());
            for (d, r) in s.dates.iter().zip(&s.rate) {
                if let (Some(a), Some(b)) = (fm.get(d), mm.get(d)) {
                    y.push(*r);
                    f.push(*a);
                    m.push(*b);
                }
            }
            match flow_performance_fit(&y, &f, &m, fc.lags, fc.window) {
                Ok(fit) => {
                    let terms: Vec<String> = (1..=fc.lags)
                        .flat_map(|h| [format!("rate_lag{h}"), format!("alpha_lag{h}"), format!("return_lag{h}")])
                        .collect();
                    let term_refs: Vec<&str> = terms.iter().map(String::as_str).collect();
                    let mut fl = regression_rows(&prefix, "flow_performance", &term_refs, &fit.flows);
                    if fc.lags >= 1 {
                        fl[2][9] = fit.h1_relative.into();
                        fl[3][9] = fit.h2_absolute.into();
                    }
                    rows.extend(fl);
                }
                Err(e) => rows.push(error_row(&prefix, "flow_performance", &e)),
            }
        }
        rows
    });
    t.meta("horizon", fc.horizon);
    Ok(vec![t])
}

