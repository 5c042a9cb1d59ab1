//! Statistical audits of event logs and published count tables.
//!
//! Every test reports its statistic and p-value; flags only say whether the
//! p-value fell below the chosen level. Nothing here issues a verdict.

mod datasets;
mod stats;

pub use datasets::{audit_dataset, bundled, dataset, BundledDataset, DATASET_NAMES, NIST_ASSUMED_TOTAL};
pub use stats::{
    chi2_sf, chi_square_contingency, chi_square_equal_rates, chi_square_weighted,
    exact_binomial_two_sided, normal_two_sided, rate_normal_p, two_proportion_test, two_rate_test,
    ChiSquareTest, ZTest, EXACT_BINOMIAL_MAX,
};

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counts::{CountsTable, Outcome, SettingPair, Subject};
use crate::lhv::correlator_from_counts;
use crate::sim::{EventLog, TrialRecord};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Below this many events per setting pair a correlator is flagged as low statistics.
pub const LOW_STATISTICS: u64 = 10;

pub const EQUAL_EXPOSURE_NOTE: &str =
    "rate comparisons condition on the summed count and assume equal exposure per setting";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("both counts are zero; the rate comparison is undefined")]
    NoEvents,
    #[error("a proportion arm has zero trials")]
    EmptyArm,
    #[error("a count exceeds its total")]
    CountExceedsTotal,
    #[error("significance level {0} outside (0,1)")]
    BadAlpha(f64),
    #[error("bin width must be positive")]
    BadBinWidth,
    #[error("degenerate test: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    Z,
    ChiSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRow {
    pub name: String,
    pub kind: StatKind,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df: Option<u32>,
    pub p_value: f64,
    pub flagged: bool,
    pub bonferroni_flagged: bool,
    pub method: String,
}

impl TestRow {
    pub fn z(name: impl Into<String>, t: ZTest, method: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: StatKind::Z,
            statistic: t.z,
            df: None,
            p_value: t.p_value,
            flagged: false,
            bonferroni_flagged: false,
            method: method.into(),
        }
    }

    pub fn chi2(name: impl Into<String>, t: ChiSquareTest, method: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: StatKind::ChiSquare,
            statistic: t.chi2,
            df: Some(t.df),
            p_value: t.p_value,
            flagged: false,
            bonferroni_flagged: false,
            method: method.into(),
        }
    }
}

/// One time bin of the ratio test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub start_ns: u64,
    pub end_ns: u64,
    pub count_1: u64,
    pub count_2: u64,
    /// `p̂(A₁=+1) / p̂(A₂=+1)` within the bin.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRow {
    pub pair: SettingPair,
    pub value: f64,
    pub standard_error: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub title: String,
    pub alpha: f64,
    pub tests: Vec<TestRow>,
    pub untestable: Vec<String>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bins: Vec<BinRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub correlators: Vec<CorrelatorRow>,
}

impl AuditReport {
    pub fn new(title: impl Into<String>, alpha: f64) -> Result<Self, AuditError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(AuditError::BadAlpha(alpha));
        }
        Ok(Self {
            title: title.into(),
            alpha,
            tests: Vec::new(),
            untestable: Vec::new(),
            warnings: Vec::new(),
            notes: Vec::new(),
            bins: Vec::new(),
            correlators: Vec::new(),
        })
    }

    /// Sets per-test flags at `alpha` and Bonferroni flags at `alpha / m`.
    pub fn finalize(mut self) -> Self {
        let m = self.tests.len().max(1) as f64;
        for t in &mut self.tests {
            t.flagged = t.p_value < self.alpha;
            t.bonferroni_flagged = t.p_value < self.alpha / m;
        }
        if self.tests.is_empty() && !self.untestable.iter().any(|u| u == "no testable cells") {
            self.untestable.insert(0, "no testable cells".into());
        }
        self
    }

    pub fn any_flagged(&self) -> bool {
        self.tests.iter().any(|t| t.flagged)
    }

    pub fn test(&self, name: &str) -> Option<&TestRow> {
        self.tests.iter().find(|t| t.name == name)
    }

    /// Appends another report's rows and annotations under this title.
    pub fn absorb(&mut self, other: AuditReport) {
        self.tests.extend(other.tests);
        self.untestable.extend(other.untestable.into_iter().filter(|u| u != "no testable cells"));
        self.warnings.extend(other.warnings);
        for n in other.notes {
            if !self.notes.contains(&n) {
                self.notes.push(n);
            }
        }
        self.bins.extend(other.bins);
        self.correlators.extend(other.correlators);
    }

    /// One JSON object per line: a header, then each test row.
    pub fn machine_lines(&self) -> Vec<String> {
        let mut out = vec![serde_json::json!({
            "record": "report",
            "title": self.title,
            "alpha": self.alpha,
            "n_tests": self.tests.len(),
            "untestable": self.untestable,
            "warnings": self.warnings,
            "notes": self.notes,
        })
        .to_string()];
        for t in &self.tests {
            let mut v = serde_json::to_value(t).expect("row serializes");
            v["record"] = "test".into();
            out.push(v.to_string());
        }
        out
    }

    /// Plot-ready two-column table `bin_start_ns ratio`.
    pub fn ratio_series(&self) -> String {
        let mut s = String::from("# bin_start_ns ratio\n");
        for b in &self.bins {
            s.push_str(&format!("{} {}\n", b.start_ns, b.ratio));
        }
        s
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (alpha = {})", self.title, self.alpha)?;
        for c in &self.correlators {
            writeln!(f, "  E{} = {:+.6} +/- {:.6} (N = {})", c.pair, c.value, c.standard_error, c.n)?;
        }
        for t in &self.tests {
            let stat = match (t.kind, t.df) {
                (StatKind::ChiSquare, Some(df)) => format!("chi2 = {:.4} (df {df})", t.statistic),
                _ => format!("z = {:+.4}", t.statistic),
            };
            let flag = match (t.flagged, t.bonferroni_flagged) {
                (_, true) => "  [flag, bonferroni]",
                (true, false) => "  [flag]",
                _ => "",
            };
            writeln!(f, "  {:<40} {stat}  p = {:.6}{flag}  ({})", t.name, t.p_value, t.method)?;
        }
        for u in &self.untestable {
            writeln!(f, "  untestable: {u}")?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        if !self.bins.is_empty() {
            writeln!(f, "  bins: {}", self.bins.len())?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCounts {
    pub table: CountsTable,
    /// Trial ids of malformed records left out of the table.
    pub skipped: Vec<u64>,
}

fn count_record(t: &mut CountsTable, r: &TrialRecord) {
    let p = r.settings();
    t.add(Subject::A, p, Outcome::Single(r.outcome_a), 1);
    t.add(Subject::B, p, Outcome::Single(r.outcome_b), 1);
    t.add(Subject::Product, p, Outcome::Single(r.outcome_a * r.outcome_b), 1);
    t.add(Subject::Joint, p, Outcome::Pair(r.outcome_a, r.outcome_b), 1);
    for s in [Subject::A, Subject::B, Subject::Product, Subject::Joint] {
        t.add_total(s, p, 1);
    }
    if let Some(c) = r.outcome_c {
        t.add(Subject::C, p, Outcome::Single(c as i8), 1);
        t.add_total(Subject::C, p, 1);
    }
}

/// Per-setting outcome counts with trial totals.
pub fn marginal_counts(log: &EventLog) -> MarginalCounts {
    const CHUNK: usize = 1 << 15;
    let source = format!("{} log, seed {}", log.header.generator, log.header.seed);
    let (mut table, skipped) = log
        .records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut t = CountsTable::default();
            let mut skipped = Vec::new();
            for r in chunk {
                if r.is_well_formed() {
                    count_record(&mut t, r);
                } else {
                    skipped.push(r.trial_id);
                }
            }
            (t, skipped)
        })
        .reduce(
            || (CountsTable::default(), Vec::new()),
            |(mut t1, mut s1), (t2, s2)| {
                t1.merge(&t2);
                s1.extend(s2);
                (t1, s1)
            },
        );
    table.source = source;
    MarginalCounts { table, skipped }
}

fn cell_name(subject: Subject, pair: SettingPair, v: i8) -> String {
    format!("p({subject}{pair}={})", Outcome::Single(v))
}

/// Compares one outcome cell of `subject` between two setting pairs.
///
/// Uses a pooled proportion test when both trial totals are known and the
/// conditional rate test when only the two counts are.
fn compare_cells(
    counts: &CountsTable,
    subject: Subject,
    p1: SettingPair,
    p2: SettingPair,
    v: i8,
) -> Option<TestRow> {
    let o = Outcome::Single(v);
    let name = format!("{} = {}", cell_name(subject, p1, v), cell_name(subject, p2, v));
    if let (Some(n1), Some(n2)) = (counts.total(subject, p1), counts.total(subject, p2)) {
        let k1 = counts.count_or_zero(subject, p1, o)?;
        let k2 = counts.count_or_zero(subject, p2, o)?;
        let t = two_proportion_test(k1, n1, k2, n2).ok()?;
        return Some(TestRow::z(name, t, "pooled two-proportion z"));
    }
    let (k1, k2) = (counts.get(subject, p1, o)?, counts.get(subject, p2, o)?);
    let t = two_rate_test(k1, k2).ok()?;
    let method = if k1 + k2 <= EXACT_BINOMIAL_MAX {
        "conditional rate, exact binomial"
    } else {
        "conditional rate, normal approximation"
    };
    Some(TestRow::z(name, t, method))
}

/// The no-signaling equalities: A's marginal must not depend on B's setting,
/// B's not on A's, and a herald C on neither.
pub fn nosignaling_suite(counts: &CountsTable, alpha: f64) -> Result<AuditReport, AuditError> {
    let mut report = AuditReport::new(format!("no-signaling audit: {}", counts.source), alpha)?;
    let sp = |a, b| SettingPair { a, b };
    let mut comparisons = vec![
        (Subject::A, sp(1, 3), sp(1, 4)),
        (Subject::A, sp(2, 3), sp(2, 4)),
        (Subject::B, sp(1, 3), sp(2, 3)),
        (Subject::B, sp(1, 4), sp(2, 4)),
    ];
    let has_c = counts.has_subject(Subject::C) || counts.totals().any(|((s, _), _)| *s == Subject::C);
    if has_c {
        for i in 0..4 {
            for j in i + 1..4 {
                comparisons.push((Subject::C, SettingPair::ALL[i], SettingPair::ALL[j]));
            }
        }
    }
    for (subject, p1, p2) in comparisons {
        let v = 1;
        match compare_cells(counts, subject, p1, p2, v) {
            Some(row) => {
                if !row.method.starts_with("pooled") && !report.notes.iter().any(|n| n == EQUAL_EXPOSURE_NOTE) {
                    report.notes.push(EQUAL_EXPOSURE_NOTE.into());
                }
                report.tests.push(row);
            }
            None => report
                .untestable
                .push(format!("{} = {}", cell_name(subject, p1, v), cell_name(subject, p2, v))),
        }
    }
    if has_c {
        match c_homogeneity(counts) {
            Some(row) => report.tests.push(row),
            None => report.untestable.push("C homogeneity over four settings".into()),
        }
    }
    Ok(report.finalize())
}

fn c_homogeneity(counts: &CountsTable) -> Option<TestRow> {
    let o = Outcome::Single(1);
    let totals: Option<Vec<u64>> = SettingPair::ALL.iter().map(|&p| counts.total(Subject::C, p)).collect();
    if let Some(n) = totals {
        let k: Vec<u64> =
            SettingPair::ALL.iter().map(|&p| counts.count_or_zero(Subject::C, p, o).unwrap_or(0)).collect();
        let table = vec![k.clone(), k.iter().zip(&n).map(|(k, n)| n - k).collect()];
        let t = chi_square_contingency(&table).ok()?;
        return Some(TestRow::chi2("C homogeneity over four settings", t, "chi-square 2x4 contingency"));
    }
    let present: Vec<u64> = SettingPair::ALL.iter().filter_map(|&p| counts.get(Subject::C, p, o)).collect();
    let t = chi_square_equal_rates(&present).ok()?;
    let name = if present.len() == 4 {
        "C homogeneity over four settings".to_string()
    } else {
        format!("C homogeneity over {} listed settings", present.len())
    };
    Some(TestRow::chi2(name, t, "chi-square equal rates"))
}

/// Tests whether `p̂(A₁=+1)/p̂(A₂=+1)` is constant across time bins of A's
/// detection tags.
///
/// Equivalent to homogeneity of the two settings' detection-time histograms.
/// A bin with no setting-2 detections is merged into the next one; a
/// trailing such bin joins the last nonempty one.
pub fn binned_ratio_test(log: &EventLog, bin_width_ns: u64, alpha: f64) -> Result<AuditReport, AuditError> {
    if bin_width_ns == 0 {
        return Err(AuditError::BadBinWidth);
    }
    let mut report = AuditReport::new(format!("binned ratio audit ({bin_width_ns} ns bins)"), alpha)?;
    let n1 = log.records.iter().filter(|r| r.setting_a == 1).count() as f64;
    let n2 = log.records.iter().filter(|r| r.setting_a == 2).count() as f64;
    let hits: Vec<&TrialRecord> = log.records.iter().filter(|r| r.outcome_a == 1).collect();
    let Some(t0) = hits.iter().map(|r| r.timetag_a).min() else {
        report.untestable.push("no A=+1 detections".into());
        return Ok(report.finalize());
    };
    let t_max = hits.iter().map(|r| r.timetag_a).max().unwrap_or(t0);
    let n_bins = ((t_max - t0) / bin_width_ns + 1) as usize;
    let mut raw = vec![(0u64, 0u64); n_bins];
    for r in &hits {
        let b = ((r.timetag_a - t0) / bin_width_ns) as usize;
        if r.setting_a == 1 {
            raw[b].0 += 1;
        } else {
            raw[b].1 += 1;
        }
    }

    let mut bins: Vec<BinRow> = Vec::new();
    let mut start = 0usize;
    let (mut c1, mut c2) = (0u64, 0u64);
    for (b, &(k1, k2)) in raw.iter().enumerate() {
        c1 += k1;
        c2 += k2;
        if c2 > 0 {
            bins.push(BinRow {
                start_ns: t0 + start as u64 * bin_width_ns,
                end_ns: t0 + (b as u64 + 1) * bin_width_ns,
                count_1: c1,
                count_2: c2,
                ratio: 0.0,
            });
            start = b + 1;
            c1 = 0;
            c2 = 0;
        }
    }
    if c1 > 0 {
        match bins.last_mut() {
            Some(last) => {
                last.count_1 += c1;
                last.end_ns = t0 + n_bins as u64 * bin_width_ns;
            }
            None => {
                report.untestable.push("no setting-2 detections".into());
                return Ok(report.finalize());
            }
        }
    }
    for b in &mut bins {
        b.ratio = (b.count_1 as f64 / n1) / (b.count_2 as f64 / n2);
    }
    let k1: u64 = bins.iter().map(|b| b.count_1).sum();
    let k2: u64 = bins.iter().map(|b| b.count_2).sum();
    report.notes.push(format!("pooled ratio {:.6}", (k1 as f64 / n1) / (k2 as f64 / n2)));
    if bins.len() < 2 {
        report.untestable.push("insufficient bins".into());
    } else {
        let table = vec![bins.iter().map(|b| b.count_1).collect(), bins.iter().map(|b| b.count_2).collect()];
        match chi_square_contingency(&table) {
            Ok(t) => report.tests.push(TestRow::chi2(
                format!("ratio constancy across {} bins", bins.len()),
                t,
                "chi-square 2xB contingency",
            )),
            Err(_) => report.untestable.push("insufficient bins".into()),
        }
    }
    report.bins = bins;
    Ok(report.finalize())
}

/// Compares the magnitudes of the four correlators.
pub fn correlator_equality_test(counts: &CountsTable, alpha: f64) -> Result<AuditReport, AuditError> {
    let mut report = AuditReport::new(format!("correlator equality audit: {}", counts.source), alpha)?;
    for pair in SettingPair::ALL {
        let n = [1i8, -1, 0]
            .iter()
            .map(|&v| counts.get(Subject::Product, pair, Outcome::Single(v)).unwrap_or(0))
            .sum::<u64>();
        match correlator_from_counts(counts, pair) {
            Ok(e) => {
                if n < LOW_STATISTICS {
                    report.warnings.push(format!("low statistics for setting {pair}: {n} events"));
                }
                report.correlators.push(CorrelatorRow { pair, value: e.value, standard_error: e.standard_error, n });
            }
            Err(_) => report.untestable.push(format!("|E{pair}|: no product counts")),
        }
    }
    let rows = report.correlators.clone();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b) = (&rows[i], &rows[j]);
            let name = format!("|E{}| = |E{}|", a.pair, b.pair);
            let se = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
            let diff = a.value.abs() - b.value.abs();
            let t = if se > 0.0 {
                let z = diff / se;
                ZTest { z, p_value: normal_two_sided(z) }
            } else if diff == 0.0 {
                ZTest { z: 0.0, p_value: 1.0 }
            } else {
                report.warnings.push(format!("{name}: zero standard error"));
                continue;
            };
            report.tests.push(TestRow::z(name, t, "difference of magnitudes over combined se"));
        }
    }
    if rows.len() >= 2 {
        let values: Vec<(f64, f64)> = rows.iter().map(|r| (r.value.abs(), r.standard_error)).collect();
        match chi_square_weighted(&values) {
            Ok(t) => report.tests.push(TestRow::chi2(
                format!("|E| homogeneity over {} settings", rows.len()),
                t,
                "inverse-variance weighted chi-square",
            )),
            Err(e) => report.untestable.push(format!("|E| homogeneity: {e}")),
        }
    }
    if rows.len() == 4 {
        let signs: Vec<i32> = rows.iter().map(|r| if r.value < 0.0 { -1 } else { 1 }).collect();
        let neg = signs.iter().filter(|&&s| s < 0).count();
        let pattern: String = signs.iter().map(|&s| if s < 0 { '-' } else { '+' }).collect();
        let verdict = if neg == 1 || neg == 3 { "three alike, one opposite" } else { "not three-and-one" };
        report.notes.push(format!("sign pattern over 13,14,23,24: {pattern} ({verdict})"));
    }
    report.notes.push("magnitude statistics are a defined family; no single published statistic is reproduced".into());
    Ok(report.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, Generator, SimConfig};

    #[test]
    fn empty_log_gives_empty_table() {
        let log = run(&SimConfig::new(Generator::Quantum, 1, 0)).unwrap();
        let m = marginal_counts(&log);
        assert!(m.table.is_empty() && m.skipped.is_empty());
        let r = nosignaling_suite(&m.table, 0.05).unwrap();
        assert!(r.tests.is_empty());
        assert_eq!(r.untestable[0], "no testable cells");
    }

    #[test]
    fn totals_conserved_and_malformed_skipped() {
        let mut log = run(&SimConfig::new(Generator::Quantum, 1, 100)).unwrap();
        let m = marginal_counts(&log);
        let total: u64 = SettingPair::ALL.iter().map(|&p| m.table.total(Subject::A, p).unwrap_or(0)).sum();
        assert_eq!(total, 100);
        for p in SettingPair::ALL {
            assert_eq!(m.table.cell_sum(Subject::A, p), m.table.total(Subject::A, p).unwrap_or(0));
        }
        log.records[5].setting_a = 7;
        let m = marginal_counts(&log);
        assert_eq!(m.skipped, vec![5]);
    }

    #[test]
    fn bonferroni_implies_individual_flag() {
        let mut counts = CountsTable::new("t");
        let p = |a, b| SettingPair { a, b };
        counts.add(Subject::C, p(1, 3), Outcome::Single(1), 79);
        counts.add(Subject::C, p(1, 4), Outcome::Single(1), 51);
        counts.add(Subject::C, p(2, 3), Outcome::Single(1), 60);
        counts.add(Subject::C, p(2, 4), Outcome::Single(1), 30);
        let r = nosignaling_suite(&counts, 0.05).unwrap();
        assert!(r.tests.iter().all(|t| !t.bonferroni_flagged || t.flagged));
        assert!(r.tests.iter().any(|t| t.bonferroni_flagged));
        assert_eq!(r.tests.len(), 7);
        assert_eq!(r.untestable.len(), 4);
    }

    #[test]
    fn single_bin_is_insufficient() {
        let log = run(&SimConfig::new(Generator::Quantum, 1, 200)).unwrap();
        let r = binned_ratio_test(&log, 1000, 0.05).unwrap();
        assert!(r.tests.is_empty());
        assert!(r.untestable.iter().any(|u| u == "insufficient bins"));
        assert_eq!(r.bins.len(), 1);
    }

    #[test]
    fn zero_denominator_bins_merge_rightward() {
        let mut log = run(&SimConfig::new(Generator::Quantum, 1, 0)).unwrap();
        let rec = |id, a, t| TrialRecord {
            trial_id: id,
            setting_a: a,
            setting_b: 3,
            outcome_a: 1,
            outcome_b: 1,
            outcome_c: None,
            timetag_a: t,
            timetag_b: 0,
            timetag_c: None,
            tampered: false,
            completion_ns: None,
        };
        log.records = vec![rec(0, 1, 0), rec(1, 1, 5), rec(2, 2, 12), rec(3, 2, 21), rec(4, 1, 33)];
        let r = binned_ratio_test(&log, 10, 0.05).unwrap();
        let counts: Vec<(u64, u64, u64)> = r.bins.iter().map(|b| (b.start_ns, b.count_1, b.count_2)).collect();
        assert_eq!(counts, vec![(0, 2, 1), (20, 1, 1)]);
        assert_eq!(r.bins[1].end_ns, 40);
    }

    #[test]
    fn equal_counts_give_zero_chi_square() {
        let mut counts = CountsTable::new("eq");
        for p in SettingPair::ALL {
            counts.add(Subject::Product, p, Outcome::Single(1), 100);
            counts.add(Subject::Product, p, Outcome::Single(-1), 400);
        }
        let r = correlator_equality_test(&counts, 0.05).unwrap();
        let chi = r.tests.iter().find(|t| t.kind == StatKind::ChiSquare).unwrap();
        assert!(chi.statistic.abs() < 1e-12);
        assert_eq!(r.tests.len(), 7);
    }

    #[test]
    fn low_statistics_warning() {
        let mut counts = CountsTable::new("few");
        counts.add(Subject::Product, SettingPair { a: 1, b: 3 }, Outcome::Single(1), 3);
        counts.add(Subject::Product, SettingPair { a: 1, b: 3 }, Outcome::Single(-1), 2);
        let r = correlator_equality_test(&counts, 0.05).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.untestable.len(), 4);
    }

    #[test]
    fn machine_lines_parse() {
        let mut counts = CountsTable::new("t");
        counts.add(Subject::C, SettingPair { a: 1, b: 4 }, Outcome::Single(1), 79);
        counts.add(Subject::C, SettingPair { a: 2, b: 4 }, Outcome::Single(1), 51);
        let r = nosignaling_suite(&counts, 0.05).unwrap();
        for line in r.machine_lines() {
            let v: serde_json::Value = serde_json::from_str(&line).unwrap();
            if v["record"] == "test" {
                assert!((0.0..=1.0).contains(&v["p_value"].as_f64().unwrap()));
            }
        }
    }
}
