//! Broadcasting each readout to independent stores, attacking some of them,
//! and excluding every trial whose copies disagree.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EventLog, RewriteRule, SimError, TrialRecord};
use crate::spacetime::Party;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreSpec {
    pub id: String,
    /// Write latency after the previous copy, nanoseconds (at least 1 is used).
    pub latency_ns: u64,
}

impl StoreSpec {
    pub fn new(id: impl Into<String>, latency_ns: u64) -> Self {
        Self { id: id.into(), latency_ns }
    }

    /// `m` stores named `store0..` with the given latency.
    pub fn uniform(m: usize, latency_ns: u64) -> Vec<Self> {
        (0..m).map(|k| Self::new(format!("store{k}"), latency_ns)).collect()
    }
}

/// What one store holds for one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopySnapshot {
    pub outcome_a: i8,
    pub outcome_b: i8,
    pub outcome_c: Option<u8>,
    pub timetag_a: u64,
    pub timetag_b: u64,
    pub timetag_c: Option<u64>,
    pub store_time_ns: u64,
}

impl CopySnapshot {
    fn of(r: &TrialRecord, store_time_ns: u64) -> Self {
        Self {
            outcome_a: r.outcome_a,
            outcome_b: r.outcome_b,
            outcome_c: r.outcome_c,
            timetag_a: r.timetag_a,
            timetag_b: r.timetag_b,
            timetag_c: r.timetag_c,
            store_time_ns,
        }
    }

    /// Equality of the stored data, ignoring when it was written.
    pub fn agrees_with(&self, other: &CopySnapshot) -> bool {
        (self.outcome_a, self.outcome_b, self.outcome_c, self.timetag_a, self.timetag_b, self.timetag_c)
            == (other.outcome_a, other.outcome_b, other.outcome_c, other.timetag_a, other.timetag_b, other.timetag_c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClonedRecord {
    pub base: TrialRecord,
    pub copies: Vec<CopySnapshot>,
    pub store_ids: Vec<String>,
    /// Latest store time over all copies.
    pub final_time_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloneBatch {
    pub log: EventLog,
    pub m: usize,
    pub records: Vec<ClonedRecord>,
}

impl CloneBatch {
    /// A single copy leaves post-readout tampering undetectable.
    pub fn loophole_open(&self) -> bool {
        self.m < 2
    }
}

/// Snapshots every record into the first `m` of `stores`.
///
/// Copy `k` is written at the trial's last time tag plus the cumulative
/// latency of stores `0..=k`, so store times strictly increase.
pub fn clone_records(log: &EventLog, m: usize, stores: &[StoreSpec]) -> Result<CloneBatch, SimError> {
    if m == 0 {
        return Err(SimError::ZeroCopies);
    }
    let distinct: HashSet<&str> = stores.iter().map(|s| s.id.as_str()).collect();
    if distinct.len() != stores.len() || stores.len() < m {
        return Err(SimError::NotEnoughStores { m, stores: distinct.len() });
    }
    let stores = &stores[..m];
    let store_ids: Vec<String> = stores.iter().map(|s| s.id.clone()).collect();
    let records = log
        .records
        .iter()
        .map(|r| {
            let mut t = r.timetag_a.max(r.timetag_b).max(r.timetag_c.unwrap_or(0));
            let copies: Vec<CopySnapshot> = stores
                .iter()
                .map(|s| {
                    t += s.latency_ns.max(1);
                    CopySnapshot::of(r, t)
                })
                .collect();
            ClonedRecord { base: r.clone(), final_time_ns: t, copies, store_ids: store_ids.clone() }
        })
        .collect();
    Ok(CloneBatch { log: log.clone(), m, records })
}

/// An adversary with write access to some stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attacker {
    pub delay_ns: u64,
    /// Indices of the stores the attacker can reach.
    pub stores: Vec<usize>,
    pub rule: RewriteRule,
    pub party: Party,
    pub tamper_fraction: f64,
    /// Seed of the attacker's own trial selection.
    pub seed: u64,
}

impl Attacker {
    pub fn new(stores: Vec<usize>, tamper_fraction: f64, delay_ns: u64, seed: u64) -> Self {
        Self { delay_ns, stores, rule: RewriteRule::ChshMax, party: Party::A, tamper_fraction, seed }
    }

    fn targets(&self, trial_id: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial_id);
        rng.random::<f64>() < self.tamper_fraction
    }
}

/// Rewrites the attacked party's outcome in every reachable store of every
/// selected trial, stamping it with the time the rewrite completed
/// (nominal tag plus delay). The same values go to every reached store, so
/// copies diverge only when some store is out of reach.
pub fn tamper_copies(batch: &CloneBatch, attacker: &Attacker) -> Result<CloneBatch, SimError> {
    if let Some(&bad) = attacker.stores.iter().find(|&&k| k >= batch.m) {
        return Err(SimError::InvalidConfig {
            field: "attacker.stores",
            reason: format!("store index {bad} with only {} copies", batch.m),
        });
    }
    if !(0.0..=1.0).contains(&attacker.tamper_fraction) {
        return Err(SimError::InvalidConfig {
            field: "attacker.tamper_fraction",
            reason: format!("{} outside [0,1]", attacker.tamper_fraction),
        });
    }
    let mut out = batch.clone();
    if attacker.stores.is_empty() {
        return Ok(out);
    }
    for rec in &mut out.records {
        if !attacker.targets(rec.base.trial_id) {
            continue;
        }
        let pair = rec.base.settings();
        for &k in &attacker.stores {
            let copy = &mut rec.copies[k];
            match attacker.party {
                Party::B => {
                    copy.outcome_b = attacker.rule.apply(Party::B, pair, copy.outcome_b, copy.outcome_a);
                    copy.timetag_b = rec.base.timetag_b + attacker.delay_ns;
                }
                _ => {
                    copy.outcome_a = attacker.rule.apply(Party::A, pair, copy.outcome_a, copy.outcome_b);
                    copy.timetag_a = rec.base.timetag_a + attacker.delay_ns;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    /// Unanimous trials, with the values all copies agree on.
    pub clean: EventLog,
    pub excluded: Vec<u64>,
}

impl Verification {
    pub fn exclusion_rate(&self) -> f64 {
        let total = self.clean.records.len() + self.excluded.len();
        if total == 0 {
            0.0
        } else {
            self.excluded.len() as f64 / total as f64
        }
    }
}

/// Compares copies and drops every trial on which any two disagree.
pub fn verify_clones(batch: &CloneBatch) -> Result<Verification, SimError> {
    if batch.loophole_open() {
        return Err(SimError::ObjectivityLoopholeOpen);
    }
    let mut clean = Vec::new();
    let mut excluded = Vec::new();
    for rec in &batch.records {
        let first = &rec.copies[0];
        if rec.copies[1..].iter().all(|c| c.agrees_with(first)) {
            clean.push(TrialRecord {
                outcome_a: first.outcome_a,
                outcome_b: first.outcome_b,
                outcome_c: first.outcome_c,
                timetag_a: first.timetag_a,
                timetag_b: first.timetag_b,
                timetag_c: first.timetag_c,
                ..rec.base.clone()
            });
        } else {
            excluded.push(rec.base.trial_id);
        }
    }
    let mut header = batch.log.header.clone();
    header.n_trials = clean.len() as u64;
    Ok(Verification { clean: EventLog { header, records: clean }, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, Generator, SimConfig};

    fn log(n: u64) -> EventLog {
        run(&SimConfig::new(Generator::Lhv, 3, n)).unwrap()
    }

    #[test]
    fn store_times_increase_and_final_is_max() {
        let stores = vec![StoreSpec::new("x", 0), StoreSpec::new("y", 40), StoreSpec::new("z", 5)];
        let batch = clone_records(&log(50), 3, &stores).unwrap();
        for rec in &batch.records {
            let times: Vec<u64> = rec.copies.iter().map(|c| c.store_time_ns).collect();
            assert!(times.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(rec.final_time_ns, *times.iter().max().unwrap());
            assert!(rec.copies.iter().all(|c| c.agrees_with(&rec.copies[0])));
        }
    }

    #[test]
    fn store_errors() {
        let l = log(5);
        assert!(matches!(clone_records(&l, 3, &StoreSpec::uniform(2, 1)), Err(SimError::NotEnoughStores { .. })));
        let dup = vec![StoreSpec::new("s", 1), StoreSpec::new("s", 1)];
        assert!(matches!(clone_records(&l, 2, &dup), Err(SimError::NotEnoughStores { .. })));
        assert!(matches!(clone_records(&l, 0, &dup), Err(SimError::ZeroCopies)));
    }

    #[test]
    fn single_copy_cannot_verify() {
        let batch = clone_records(&log(5), 1, &StoreSpec::uniform(1, 1)).unwrap();
        assert!(batch.loophole_open());
        assert!(matches!(verify_clones(&batch), Err(SimError::ObjectivityLoopholeOpen)));
    }

    #[test]
    fn untouched_batch_verifies_unchanged() {
        let l = log(200);
        for m in 2..5 {
            let batch = clone_records(&l, m, &StoreSpec::uniform(m, 10)).unwrap();
            let v = verify_clones(&batch).unwrap();
            assert!(v.excluded.is_empty());
            assert_eq!(v.clean, l);
        }
    }

    #[test]
    fn attacker_reach() {
        let l = log(1000);
        let batch = clone_records(&l, 2, &StoreSpec::uniform(2, 10)).unwrap();
        assert_eq!(tamper_copies(&batch, &Attacker::new(vec![], 1.0, 5000, 1)).unwrap(), batch);

        let one = tamper_copies(&batch, &Attacker::new(vec![1], 1.0, 5000, 1)).unwrap();
        assert_eq!(verify_clones(&one).unwrap().excluded.len(), 1000);
        assert!(one.records.iter().all(|r| r.copies[0] == batch.records[r.base.trial_id as usize].copies[0]));

        let all = tamper_copies(&batch, &Attacker::new(vec![0, 1], 1.0, 5000, 1)).unwrap();
        let v = verify_clones(&all).unwrap();
        assert!(v.excluded.is_empty());
        assert_ne!(v.clean, l);

        assert!(tamper_copies(&batch, &Attacker::new(vec![2], 1.0, 5000, 1)).is_err());
    }
}
