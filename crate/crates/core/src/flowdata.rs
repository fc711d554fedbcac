//! Fund-flow records, redemption rates, pooled samples per classification
//! cell and daily category time series.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact header expected in flow CSV files.
pub const FLOW_CSV_HEADER: [&str; 8] = [
    "date",
    "fund_id",
    "investor_category",
    "fund_category",
    "fund_kind",
    "tna_held",
    "inflow",
    "outflow",
];

/// Default minimum holder TNA for a record to enter a pooled sample.
pub const DEFAULT_MIN_TNA: f64 = 5_000_000.0;

const WEIGHT_SUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FundKind {
    Pooled,
    MandateOrDedicated,
}

impl FundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FundKind::Pooled => "pooled",
            FundKind::MandateOrDedicated => "mandate_or_dedicated",
        }
    }
}

impl std::str::FromStr for FundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pooled" => Ok(FundKind::Pooled),
            "mandate_or_dedicated" | "mandate" | "dedicated" => Ok(FundKind::MandateOrDedicated),
            other => Err(Error::Input(format!("unknown fund_kind '{other}'"))),
        }
    }
}

/// One investor-category holding in one fund on one date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub date: NaiveDate,
    pub fund_id: String,
    pub investor_category: String,
    pub fund_category: String,
    pub fund_kind: FundKind,
    pub tna_held: f64,
    pub inflow: f64,
    pub outflow: f64,
}

impl FlowRecord {
    /// Checks the record invariants: nonnegative amounts and an outflow no
    /// larger than the holding.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tna_held", self.tna_held), ("inflow", self.inflow), ("outflow", self.outflow)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::ConstraintViolation(format!("{name} must be a nonnegative number (got {v})")));
            }
        }
        if self.outflow > self.tna_held {
            return Err(Error::ConstraintViolation(format!(
                "outflow {} exceeds tna_held {}",
                self.outflow, self.tna_held
            )));
        }
        Ok(())
    }

    pub fn cell(&self) -> CategoryCell {
        CategoryCell::new(&self.investor_category, &self.fund_category)
    }
}

/// One cell of the investor × fund classification matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CategoryCell {
    pub investor_category: String,
    pub fund_category: String,
}

impl CategoryCell {
    pub fn new(investor_category: &str, fund_category: &str) -> Self {
        CategoryCell {
            investor_category: investor_category.to_string(),
            fund_category: fund_category.to_string(),
        }
    }
}

impl std::fmt::Display for CategoryCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.investor_category, self.fund_category)
    }
}

/// Configured investor and fund category lists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub investor_categories: Vec<String>,
    pub fund_categories: Vec<String>,
}

impl Taxonomy {
    /// Builds the taxonomy observed in a record batch.
    pub fn from_records(records: &[FlowRecord]) -> Self {
        let inv: BTreeSet<_> = records.iter().map(|r| r.investor_category.clone()).collect();
        let fund: BTreeSet<_> = records.iter().map(|r| r.fund_category.clone()).collect();
        Taxonomy {
            investor_categories: inv.into_iter().collect(),
            fund_categories: fund.into_iter().collect(),
        }
    }

    pub fn check(&self, cell: &CategoryCell) -> Result<()> {
        if !self.investor_categories.contains(&cell.investor_category) {
            return Err(Error::Input(format!("investor category '{}' not in taxonomy", cell.investor_category)));
        }
        if !self.fund_categories.contains(&cell.fund_category) {
            return Err(Error::Input(format!("fund category '{}' not in taxonomy", cell.fund_category)));
        }
        Ok(())
    }

    /// All cells of the matrix, investor-major.
    pub fn cells(&self) -> Vec<CategoryCell> {
        let mut out = Vec::new();
        for i in &self.investor_categories {
            for f in &self.fund_categories {
                out.push(CategoryCell::new(i, f));
            }
        }
        out
    }
}

/// Pooled redemption rates of one classification cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedemptionSample {
    pub cell: Option<CategoryCell>,
    pub values: Vec<f64>,
    pub n: usize,
    pub n0: usize,
    pub n1: usize,
}

impl RedemptionSample {
    /// Wraps raw rates, counting zeros and positives. Every value must lie
    /// in [0, 1].
    pub fn from_values(cell: Option<CategoryCell>, values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("redemption rate {bad} outside [0, 1]")));
        }
        let n1 = values.iter().filter(|&&v| v > 0.0).count();
        let n = values.len();
        Ok(RedemptionSample { cell, values, n, n0: n - n1, n1 })
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// The strictly positive rates.
    pub fn positives(&self) -> Vec<f64> {
        self.values.iter().copied().filter(|&v| v > 0.0).collect()
    }
}

/// Selection applied before pooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolFilter {
    pub exclude_mandates: bool,
    pub min_tna: f64,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
}

impl Default for PoolFilter {
    fn default() -> Self {
        PoolFilter { exclude_mandates: false, min_tna: DEFAULT_MIN_TNA, date_from: None, date_to: None }
    }
}

impl PoolFilter {
    /// A filter that keeps every record with positive holding.
    pub fn keep_all() -> Self {
        PoolFilter { min_tna: 0.0, ..Default::default() }
    }

    fn keeps_kind_and_date(&self, r: &FlowRecord) -> bool {
        if self.exclude_mandates && r.fund_kind == FundKind::MandateOrDedicated {
            return false;
        }
        if self.date_from.is_some_and(|d| r.date < d) || self.date_to.is_some_and(|d| r.date > d) {
            return false;
        }
        true
    }
}

/// Gross redemption rate outflow / TNA.
pub fn gross_rate(outflow: f64, tna: f64) -> Result<f64> {
    if !(tna > 0.0) {
        return Err(Error::InvalidDenominator(format!("TNA must be positive (got {tna})")));
    }
    if !(outflow >= 0.0) {
        return Err(Error::ConstraintViolation(format!("outflow must be nonnegative (got {outflow})")));
    }
    if outflow > tna {
        return Err(Error::ConstraintViolation(format!("outflow {outflow} exceeds TNA {tna}")));
    }
    Ok(outflow / tna)
}

/// Net flow rate and net redemption rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetRates {
    pub net_flow_rate: f64,
    pub net_redemption_rate: f64,
}

pub fn net_rates(inflow: f64, outflow: f64, tna: f64) -> Result<NetRates> {
    gross_rate(outflow, tna)?;
    if !(inflow >= 0.0) {
        return Err(Error::ConstraintViolation(format!("inflow must be nonnegative (got {inflow})")));
    }
    let net_flow_rate = (inflow - outflow) / tna;
    Ok(NetRates { net_flow_rate, net_redemption_rate: (-net_flow_rate).max(0.0) })
}

/// Net flow implied by the change in TNA net of performance.
pub fn implied_net_flow(tna_t1: f64, tna_t0: f64, nav_t1: f64, nav_t0: f64) -> Result<f64> {
    if !(nav_t0 > 0.0) {
        return Err(Error::InvalidDenominator(format!("previous NAV must be positive (got {nav_t0})")));
    }
    if !(tna_t0 >= 0.0) {
        return Err(Error::ConstraintViolation(format!("previous TNA must be nonnegative (got {tna_t0})")));
    }
    Ok(tna_t1 - (nav_t1 / nav_t0) * tna_t0)
}

/// Fund-level rate as the liability-weighted average of category rates.
pub fn fund_rate_from_categories(weights: &[f64], rates: &[f64]) -> Result<f64> {
    if weights.len() != rates.len() {
        return Err(Error::Parameter(format!(
            "{} weights for {} rates",
            weights.len(),
            rates.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::Parameter("weights must be nonnegative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Normalization { sum });
    }
    if let Some(bad) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Domain(format!("rate {bad} outside [0, 1]")));
    }
    Ok(weights.iter().zip(rates).map(|(w, r)| w * r).sum::<f64>().clamp(0.0, 1.0))
}

/// Holdings of one (fund, date) pair inside a cell.
struct Holding {
    tna: f64,
    outflow: f64,
}

fn group_cell(records: &[FlowRecord], cell: &CategoryCell, filter: &PoolFilter) -> BTreeMap<(NaiveDate, String), Holding> {
    let mut groups: BTreeMap<(NaiveDate, String), Holding> = BTreeMap::new();
    for r in records {
        if r.investor_category != cell.investor_category || r.fund_category != cell.fund_category {
            continue;
        }
        if !filter.keeps_kind_and_date(r) {
            continue;
        }
        let h = groups.entry((r.date, r.fund_id.clone())).or_insert(Holding { tna: 0.0, outflow: 0.0 });
        h.tna += r.tna_held;
        h.outflow += r.outflow;
    }
    groups.retain(|_, h| h.tna > 0.0 && h.tna >= filter.min_tna);
    groups
}

/// Pools every (fund, date) gross rate of `cell` passing `filter`.
///
/// Several records for the same fund, date and cell are merged before the
/// rate is taken. Values are ordered by (date, fund id), so the result does
/// not depend on the input order. An empty result is returned as an empty
/// sample, not an error.
pub fn pool(records: &[FlowRecord], cell: &CategoryCell, filter: &PoolFilter) -> RedemptionSample {
    let values: Vec<f64> = group_cell(records, cell, filter)
        .values()
        .map(|h| (h.outflow / h.tna).clamp(0.0, 1.0))
        .collect();
    RedemptionSample::from_values(Some(cell.clone()), values).expect("rates are clamped to [0, 1]")
}

/// How funds are averaged in the daily category series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesWeighting {
    #[default]
    Equal,
    Tna,
}

/// Daily redemption rate, frequency and severity of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySeries {
    pub dates: Vec<NaiveDate>,
    pub rate: Vec<f64>,
    pub frequency: Vec<f64>,
    /// Mean rate over funds that redeemed; `None` on days without any.
    pub severity: Vec<Option<f64>>,
    pub support: Vec<usize>,
    pub support_positive: Vec<usize>,
}

impl CategorySeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Builds the daily series of `cell`: for each date, the average rate of
/// the funds holding a positive position, the share of those funds with a
/// redemption, and the average rate among the redeeming funds.
pub fn daily_series(
    records: &[FlowRecord],
    cell: &CategoryCell,
    filter: &PoolFilter,
    weighting: SeriesWeighting,
) -> CategorySeries {
    let groups = group_cell(records, cell, filter);
    let mut by_date: BTreeMap<NaiveDate, Vec<(f64, f64)>> = BTreeMap::new();
    for ((date, _), h) in &groups {
        by_date.entry(*date).or_default().push(((h.outflow / h.tna).clamp(0.0, 1.0), h.tna));
    }
    let mut s = CategorySeries {
        dates: Vec::new(),
        rate: Vec::new(),
        frequency: Vec::new(),
        severity: Vec::new(),
        support: Vec::new(),
        support_positive: Vec::new(),
    };
    for (date, funds) in by_date {
        let weight = |tna: f64| match weighting {
            SeriesWeighting::Equal => 1.0,
            SeriesWeighting::Tna => tna,
        };
        let total: f64 = funds.iter().map(|&(_, t)| weight(t)).sum();
        let pos_w: f64 = funds.iter().filter(|f| f.0 > 0.0).map(|&(_, t)| weight(t)).sum();
        let pos_sum: f64 = funds.iter().filter(|f| f.0 > 0.0).map(|&(r, t)| r * weight(t)).sum();
        let n_pos = funds.iter().filter(|f| f.0 > 0.0).count();
        s.dates.push(date);
        s.rate.push(pos_sum / total);
        s.frequency.push(pos_w / total);
        s.severity.push(if n_pos > 0 { Some(pos_sum / pos_w) } else { None });
        s.support.push(funds.len());
        s.support_positive.push(n_pos);
    }
    s
}

/// One rejected input row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line number in the file (the header is line 1).
    pub line: u64,
    pub message: String,
}

/// Result of reading a flow file: the valid records and a report of the
/// rows that were skipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub records: Vec<FlowRecord>,
    pub rejected: Vec<RowError>,
}

fn parse_amount(field: &str, name: &str) -> std::result::Result<f64, String> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("{name}: cannot parse '{field}' as a number"))
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<FlowRecord, String> {
    if row.len() != FLOW_CSV_HEADER.len() {
        return Err(format!("expected {} fields, found {}", FLOW_CSV_HEADER.len(), row.len()));
    }
    let date = NaiveDate::parse_from_str(row[0].trim(), "%Y-%m-%d")
        .map_err(|e| format!("date: cannot parse '{}' ({e})", &row[0]))?;
    let fund_kind = row[4].parse::<FundKind>().map_err(|e| e.to_string())?;
    let rec = FlowRecord {
        date,
        fund_id: row[1].trim().to_string(),
        investor_category: row[2].trim().to_string(),
        fund_category: row[3].trim().to_string(),
        fund_kind,
        tna_held: parse_amount(&row[5], "tna_held")?,
        inflow: parse_amount(&row[6], "inflow")?,
        outflow: parse_amount(&row[7], "outflow")?,
    };
    rec.validate().map_err(|e| e.to_string())?;
    Ok(rec)
}

/// Reads flow records from CSV. The header must match [`FLOW_CSV_HEADER`]
/// exactly; a bad header is fatal, a bad row is reported and skipped.
pub fn read_flow_csv<R: Read>(reader: R) -> Result<IngestReport> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Input(format!("cannot read header: {e}")))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != FLOW_CSV_HEADER {
        return Err(Error::Input(format!(
            "flow CSV header must be '{}' (got '{}')",
            FLOW_CSV_HEADER.join(","),
            got.join(",")
        )));
    }
    let mut report = IngestReport::default();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        match row {
            Ok(row) => match parse_row(&row) {
                Ok(rec) => report.records.push(rec),
                Err(message) => report.rejected.push(RowError { line, message }),
            },
            Err(e) => report.rejected.push(RowError { line, message: e.to_string() }),
        }
    }
    Ok(report)
}

/// Writes records in the ingest format.
pub fn write_flow_csv<W: Write>(writer: W, records: &[FlowRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Input(e.to_string());
    w.write_record(FLOW_CSV_HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.fund_id.clone(),
            r.investor_category.clone(),
            r.fund_category.clone(),
            r.fund_kind.as_str().to_string(),
            r.tna_held.to_string(),
            r.inflow.to_string(),
            r.outflow.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(day: u32, fund: &str, kind: FundKind, tna: f64, outflow: f64) -> FlowRecord {
        FlowRecord {
            date: NaiveDate::from_ymd_opt(2020, 1, day).unwrap(),
            fund_id: fund.into(),
            investor_category: "retail".into(),
            fund_category: "equity".into(),
            fund_kind: kind,
            tna_held: tna,
            inflow: 0.0,
            outflow,
        }
    }

    fn cell() -> CategoryCell {
        CategoryCell::new("retail", "equity")
    }

    #[test]
    fn gross_rate_examples() {
        assert!((gross_rate(100.0, 5000.0).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(gross_rate(0.0, 100.0).unwrap(), 0.0);
        assert_eq!(gross_rate(100.0, 100.0).unwrap(), 1.0);
        assert!(matches!(gross_rate(1.0, 0.0), Err(Error::InvalidDenominator(_))));
        assert!(matches!(gross_rate(101.0, 100.0), Err(Error::ConstraintViolation(_))));
    }

    #[test]
    fn net_rate_examples() {
        let r = net_rates(0.0, 10.0, 100.0).unwrap();
        assert!((r.net_flow_rate + 0.1).abs() < 1e-15 && (r.net_redemption_rate - 0.1).abs() < 1e-15);
        let r = net_rates(30.0, 10.0, 100.0).unwrap();
        assert!((r.net_flow_rate - 0.2).abs() < 1e-15 && r.net_redemption_rate == 0.0);
        let r = net_rates(10.0, 30.0, 100.0).unwrap();
        assert!((r.net_flow_rate + 0.2).abs() < 1e-15 && (r.net_redemption_rate - 0.2).abs() < 1e-15);
    }

    #[test]
    fn implied_flow_examples() {
        assert!(implied_net_flow(110.0, 100.0, 1.10, 1.00).unwrap().abs() < 1e-12);
        assert_eq!(implied_net_flow(100.0, 100.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(implied_net_flow(95.0, 100.0, 1.0, 1.0).unwrap(), -5.0);
        assert!(matches!(implied_net_flow(1.0, 1.0, 1.0, 0.0), Err(Error::InvalidDenominator(_))));
    }

    #[test]
    fn category_average_examples() {
        assert!((fund_rate_from_categories(&[0.5, 0.5], &[0.02, 0.04]).unwrap() - 0.03).abs() < 1e-15);
        assert_eq!(fund_rate_from_categories(&[1.0], &[0.07]).unwrap(), 0.07);
        assert!((fund_rate_from_categories(&[0.25, 0.75], &[0.0, 0.08]).unwrap() - 0.06).abs() < 1e-15);
        assert!(matches!(
            fund_rate_from_categories(&[0.5, 0.6], &[0.0, 0.0]),
            Err(Error::Normalization { .. })
        ));
    }

    #[test]
    fn pool_two_records() {
        let recs = vec![rec(1, "A", FundKind::Pooled, 100.0, 0.0), rec(1, "B", FundKind::Pooled, 100.0, 5.0)];
        let s = pool(&recs, &cell(), &PoolFilter::keep_all());
        assert_eq!(s.values, vec![0.0, 0.05]);
        assert_eq!((s.n, s.n0, s.n1), (2, 1, 1));
    }

    #[test]
    fn pool_filters() {
        let recs = vec![
            rec(1, "A", FundKind::Pooled, 10e6, 0.0),
            rec(1, "M", FundKind::MandateOrDedicated, 10e6, 1e6),
            rec(2, "S", FundKind::Pooled, 1e6, 1e5),
        ];
        let mut f = PoolFilter { exclude_mandates: true, ..Default::default() };
        let s = pool(&recs, &cell(), &f);
        assert_eq!(s.values, vec![0.0]);
        f.exclude_mandates = false;
        let s = pool(&recs, &cell(), &f);
        assert_eq!(s.n, 2);
        assert_eq!(s.n1, 1);
        f.date_from = NaiveDate::from_ymd_opt(2020, 1, 2);
        f.min_tna = 0.0;
        assert_eq!(pool(&recs, &cell(), &f).values, vec![0.1]);
    }

    #[test]
    fn all_zero_pool_has_no_positives() {
        let recs = vec![rec(1, "A", FundKind::Pooled, 100.0, 0.0), rec(2, "A", FundKind::Pooled, 100.0, 0.0)];
        let s = pool(&recs, &cell(), &PoolFilter::keep_all());
        assert_eq!(s.n1, 0);
        assert!(pool(&recs, &CategoryCell::new("x", "y"), &PoolFilter::keep_all()).is_empty());
    }

    #[test]
    fn series_examples() {
        let one = vec![rec(1, "A", FundKind::Pooled, 100.0, 4.0)];
        let s = daily_series(&one, &cell(), &PoolFilter::keep_all(), SeriesWeighting::Equal);
        assert!((s.rate[0] - 0.04).abs() < 1e-15);
        assert_eq!(s.frequency[0], 1.0);
        assert!((s.severity[0].unwrap() - 0.04).abs() < 1e-15);

        let two = vec![rec(1, "A", FundKind::Pooled, 100.0, 0.0), rec(1, "B", FundKind::Pooled, 50.0, 5.0)];
        let s = daily_series(&two, &cell(), &PoolFilter::keep_all(), SeriesWeighting::Equal);
        assert!((s.rate[0] - 0.05).abs() < 1e-15);
        assert_eq!(s.frequency[0], 0.5);
        assert!((s.severity[0].unwrap() - 0.1).abs() < 1e-15);

        let zero = vec![rec(1, "A", FundKind::Pooled, 100.0, 0.0)];
        let s = daily_series(&zero, &cell(), &PoolFilter::keep_all(), SeriesWeighting::Equal);
        assert_eq!((s.rate[0], s.frequency[0], s.severity[0]), (0.0, 0.0, None));
    }

    #[test]
    fn tna_weighting_keeps_identity() {
        let recs = vec![
            rec(1, "A", FundKind::Pooled, 300.0, 0.0),
            rec(1, "B", FundKind::Pooled, 100.0, 10.0),
            rec(1, "C", FundKind::Pooled, 100.0, 30.0),
        ];
        let s = daily_series(&recs, &cell(), &PoolFilter::keep_all(), SeriesWeighting::Tna);
        assert!((s.rate[0] - 40.0 / 500.0).abs() < 1e-15);
        assert!((s.rate[0] - s.frequency[0] * s.severity[0].unwrap()).abs() < 1e-15);
    }

    #[test]
    fn csv_ingest_reports_bad_rows() {
        let text = "date,fund_id,investor_category,fund_category,fund_kind,tna_held,inflow,outflow\n\
                    2020-01-02,F1,retail,equity,pooled,100,0,5\n\
                    2020-01-02,F2,retail,equity,pooled,0,0,5\n\
                    2020-13-02,F3,retail,equity,pooled,100,0,5\n\
                    2020-01-03,F1,retail,equity,mandate_or_dedicated,100,1,2\n";
        let rep = read_flow_csv(text.as_bytes()).unwrap();
        assert_eq!(rep.records.len(), 2);
        assert_eq!(rep.rejected.iter().map(|r| r.line).collect::<Vec<_>>(), vec![3, 4]);
        assert!(rep.rejected[0].message.contains("exceeds"));
    }

    #[test]
    fn csv_header_is_strict() {
        let text = "date,fund,investor_category,fund_category,fund_kind,tna_held,inflow,outflow\n";
        assert!(matches!(read_flow_csv(text.as_bytes()), Err(Error::Input(_))));
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![rec(1, "A", FundKind::Pooled, 123.5, 0.25), rec(2, "B", FundKind::MandateOrDedicated, 7.0, 7.0)];
        let mut buf = Vec::new();
        write_flow_csv(&mut buf, &recs).unwrap();
        let back = read_flow_csv(buf.as_slice()).unwrap();
        assert!(back.rejected.is_empty());
        assert_eq!(back.records, recs);
    }

    #[test]
    fn taxonomy_cells() {
        let recs = vec![rec(1, "A", FundKind::Pooled, 1.0, 0.0)];
        let t = Taxonomy::from_records(&recs);
        assert_eq!(t.cells(), vec![cell()]);
        assert!(t.check(&CategoryCell::new("insurer", "equity")).is_err());
    }
}
