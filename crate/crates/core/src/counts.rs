//! Setting-conditioned outcome counts shared by the estimators and audits.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One joint setting: A's choice in {1,2}, B's choice in {3,4}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SettingPair {
    pub a: u8,
    pub b: u8,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair { a: 1, b: 3 },
        SettingPair { a: 1, b: 4 },
        SettingPair { a: 2, b: 3 },
        SettingPair { a: 2, b: 4 },
    ];

    pub fn new(a: u8, b: u8) -> Option<Self> {
        ((1..=2).contains(&a) && (3..=4).contains(&b)).then_some(Self { a, b })
    }

    /// Parses the two-digit form `"13"`.
    pub fn parse(s: &str) -> Option<Self> {
        let bytes = s.as_bytes();
        if bytes.len() != 2 {
            return None;
        }
        Self::new(bytes[0].wrapping_sub(b'0'), bytes[1].wrapping_sub(b'0'))
    }

    /// Position in [`SettingPair::ALL`].
    pub fn index(self) -> usize {
        ((self.a - 1) * 2 + (self.b - 3)) as usize
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.a, self.b)
    }
}

/// What a count refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subject {
    A,
    B,
    C,
    /// Product of A's and B's outcomes.
    Product,
    /// Joint (A, B) outcome pair.
    Joint,
}

impl Subject {
    pub fn as_str(self) -> &'static str {
        match self {
            Subject::A => "A",
            Subject::B => "B",
            Subject::C => "C",
            Subject::Product => "AB",
            Subject::Joint => "A:B",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "A" => Subject::A,
            "B" => Subject::B,
            "C" => Subject::C,
            "AB" => Subject::Product,
            "A:B" => Subject::Joint,
            _ => return None,
        })
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Single(i8),
    Pair(i8, i8),
}

fn fmt_value(v: i8) -> &'static str {
    match v {
        1 => "+1",
        -1 => "-1",
        _ => "0",
    }
}

fn parse_value(s: &str) -> Option<i8> {
    Some(match s {
        "+" | "+1" | "1" => 1,
        "-" | "-1" | "−" => -1,
        "0" => 0,
        _ => return None,
    })
}

impl Outcome {
    pub fn parse(s: &str) -> Option<Self> {
        match s.split_once(',') {
            Some((a, b)) => Some(Outcome::Pair(parse_value(a)?, parse_value(b)?)),
            None => Some(Outcome::Single(parse_value(s)?)),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Single(v) => f.write_str(fmt_value(*v)),
            Outcome::Pair(a, b) => write!(f, "{},{}", fmt_value(*a), fmt_value(*b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CountKey {
    pub subject: Subject,
    pub settings: SettingPair,
    pub outcome: Outcome,
}

/// Counts `N(X_ij = v)` with optional explicit trial totals per `(X, ij)`.
///
/// Totals are known for tables built from event logs. Published tables often
/// list only some outcome cells; without a total those cells support rate
/// comparisons but not proportion tests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CountsTable {
    entries: BTreeMap<CountKey, u64>,
    totals: BTreeMap<(Subject, SettingPair), u64>,
    pub source: String,
}

impl CountsTable {
    pub fn new(source: impl Into<String>) -> Self {
        Self { source: source.into(), ..Default::default() }
    }

    pub fn add(&mut self, subject: Subject, settings: SettingPair, outcome: Outcome, n: u64) {
        *self.entries.entry(CountKey { subject, settings, outcome }).or_insert(0) += n;
    }

    pub fn add_total(&mut self, subject: Subject, settings: SettingPair, n: u64) {
        *self.totals.entry((subject, settings)).or_insert(0) += n;
    }

    pub fn set_total(&mut self, subject: Subject, settings: SettingPair, n: u64) {
        self.totals.insert((subject, settings), n);
    }

    pub fn get(&self, subject: Subject, settings: SettingPair, outcome: Outcome) -> Option<u64> {
        self.entries.get(&CountKey { subject, settings, outcome }).copied()
    }

    /// Count, treating a missing cell as zero when the total is known.
    pub fn count_or_zero(&self, subject: Subject, settings: SettingPair, outcome: Outcome) -> Option<u64> {
        self.get(subject, settings, outcome)
            .or_else(|| self.total(subject, settings).map(|_| 0))
    }

    pub fn total(&self, subject: Subject, settings: SettingPair) -> Option<u64> {
        self.totals.get(&(subject, settings)).copied()
    }

    /// Sum over every listed outcome cell of `(subject, settings)`.
    pub fn cell_sum(&self, subject: Subject, settings: SettingPair) -> u64 {
        self.entries
            .iter()
            .filter(|(k, _)| k.subject == subject && k.settings == settings)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn has_subject(&self, subject: Subject) -> bool {
        self.entries.keys().any(|k| k.subject == subject)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.totals.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&CountKey, u64)> {
        self.entries.iter().map(|(k, &n)| (k, n))
    }

    pub fn totals(&self) -> impl Iterator<Item = (&(Subject, SettingPair), u64)> {
        self.totals.iter().map(|(k, &n)| (k, n))
    }

    /// Adds another table cell by cell. Associative and commutative.
    pub fn merge(&mut self, other: &CountsTable) {
        for (k, n) in other.entries() {
            *self.entries.entry(*k).or_insert(0) += n;
        }
        for (k, n) in other.totals() {
            *self.totals.entry(*k).or_insert(0) += n;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct CountsParseError {
    pub line: usize,
    pub reason: String,
}

impl CountsTable {
    /// Line format: `subject settings outcome count`, plus
    /// `total subject settings n`; `#` starts a comment, and a leading
    /// `# source: ...` line sets the source.
    pub fn to_text(&self) -> String {
        let mut s = format!("# source: {}\n", self.source);
        for (k, n) in self.entries() {
            s.push_str(&format!("{} {} {} {}\n", k.subject, k.settings, k.outcome, n));
        }
        for ((subject, settings), n) in self.totals() {
            s.push_str(&format!("total {subject} {settings} {n}\n"));
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self, CountsParseError> {
        let mut table = CountsTable::default();
        for (i, raw) in text.lines().enumerate() {
            let err = |reason: String| CountsParseError { line: i + 1, reason };
            let trimmed = raw.trim();
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some(src) = rest.trim().strip_prefix("source:") {
                    table.source = src.trim().to_string();
                }
                continue;
            }
            let line = trimmed.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let subject = |s: &str| Subject::parse(s).ok_or_else(|| err(format!("unknown subject `{s}`")));
            let settings =
                |s: &str| SettingPair::parse(s).ok_or_else(|| err(format!("invalid setting pair `{s}`")));
            let number = |s: &str| s.parse::<u64>().map_err(|_| err(format!("invalid count `{s}`")));
            match tok.as_slice() {
                ["total", s, p, n] => table.add_total(subject(s)?, settings(p)?, number(n)?),
                [s, p, o, n] => {
                    let outcome = Outcome::parse(o).ok_or_else(|| err(format!("invalid outcome `{o}`")))?;
                    table.add(subject(s)?, settings(p)?, outcome, number(n)?);
                }
                _ => return Err(err(format!("expected 4 fields, found {}", tok.len()))),
            }
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setting_pair_parse_and_index() {
        assert_eq!(SettingPair::parse("24"), Some(SettingPair { a: 2, b: 4 }));
        assert_eq!(SettingPair::parse("31"), None);
        assert_eq!(SettingPair::parse("1"), None);
        for (i, p) in SettingPair::ALL.iter().enumerate() {
            assert_eq!(p.index(), i);
        }
    }

    #[test]
    fn outcome_parse() {
        assert_eq!(Outcome::parse("+"), Some(Outcome::Single(1)));
        assert_eq!(Outcome::parse("-"), Some(Outcome::Single(-1)));
        assert_eq!(Outcome::parse("1,0"), Some(Outcome::Pair(1, 0)));
        assert_eq!(Outcome::parse("2"), None);
        assert_eq!(Outcome::parse(&Outcome::Pair(-1, 1).to_string()), Some(Outcome::Pair(-1, 1)));
    }

    #[test]
    fn totals_and_missing_cells() {
        let p = SettingPair::new(1, 4).unwrap();
        let mut t = CountsTable::new("test");
        t.add(Subject::C, p, Outcome::Single(1), 79);
        assert_eq!(t.count_or_zero(Subject::C, p, Outcome::Single(0)), None);
        t.set_total(Subject::C, p, 1000);
        assert_eq!(t.count_or_zero(Subject::C, p, Outcome::Single(0)), Some(0));
        assert_eq!(t.cell_sum(Subject::C, p), 79);
    }

    #[test]
    fn text_round_trip() {
        let p = SettingPair::new(2, 3).unwrap();
        let mut t = CountsTable::new("demo set");
        t.add(Subject::Product, p, Outcome::Single(-1), 1012);
        t.add(Subject::Joint, p, Outcome::Pair(1, 0), 4);
        t.set_total(Subject::A, p, 99);
        let back = CountsTable::parse_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
        let e = CountsTable::parse_text("A 13 +1 5\nA 99 +1 5\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(CountsTable::parse_text("A 13 +1").is_err());
        assert!(CountsTable::parse_text("A 13 +1 -4").is_err());
    }
}
