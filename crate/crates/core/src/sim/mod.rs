//! Event-by-event trial generation.
//!
//! Every trial draws from its own ChaCha stream (seed, stream = trial id), so
//! trials can be produced in parallel and merged by id without changing a
//! single byte of the output. Per trial the uniforms are consumed in a fixed
//! order: setting A, setting B, outcome/strategy, efficiency A, efficiency B,
//! jitter A, jitter B, jitter C, then the hacker's targeting draw.

mod clone;

pub use clone::{
    clone_records, tamper_copies, verify_clones, Attacker, CloneBatch, ClonedRecord,
    CopySnapshot, StoreSpec, Verification,
};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::counts::SettingPair;
use crate::lhv::{chsh_sign, DeterministicStrategy, Game};
use crate::quantum::{
    self, anomaly_local_povm, anomaly_state, phase_projectors, sample_index, swap_projector,
    swapping_state, AnomalySetup, OperatorKind, Povm, QOperator, QuantumError, SWAP_A, SWAP_B,
    SWAP_LOWER_A, SWAP_LOWER_B,
};
use crate::spacetime::{tamper_threshold, validate_layout, LayoutConfig, Party, SpacetimeError};

pub const LOG_SCHEMA: &str = "bellab/eventlog";
pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error(transparent)]
    Layout(#[from] SpacetimeError),
    #[error("layout fails lightcone validation: {0}")]
    LayoutFails(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("strategy mixture is empty")]
    EmptyMixture,
    #[error("hacked generator requires a `hacker` block")]
    MissingHacker,
    #[error(
        "hack delay {delay_ns} ns is shorter than the light-travel threshold {threshold_ns:.1} ns \
         (set allow_superluminal to explore faster-than-light hypotheses)"
    )]
    HackerTooFast { delay_ns: u64, threshold_ns: f64 },
    #[error("{stores} distinct stores available but {m} copies requested")]
    NotEnoughStores { m: usize, stores: usize },
    #[error("copy count must be at least 1")]
    ZeroCopies,
    #[error("objectivity loophole open: a single copy cannot be verified")]
    ObjectivityLoopholeOpen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Quantum,
    Lhv,
    HackedLhv,
    Anomaly,
}

impl Generator {
    pub fn as_str(self) -> &'static str {
        match self {
            Generator::Quantum => "quantum",
            Generator::Lhv => "lhv",
            Generator::HackedLhv => "hacked_lhv",
            Generator::Anomaly => "anomaly",
        }
    }
}

/// How a hacker rewrites a targeted outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RewriteRule {
    /// Set the local outcome so the trial's product carries the sign of its
    /// CHSH term (a sign flip exactly when that raises the contribution).
    #[default]
    ChshMax,
    /// Force the local outcome to +1 whenever the remote setting is the
    /// first one, biasing the local marginal by the remote choice.
    MarginalShift,
}

impl RewriteRule {
    /// Rewritten outcome of `party` given the trial's settings and the
    /// other party's outcome.
    pub fn apply(self, party: Party, pair: SettingPair, own: i8, other: i8) -> i8 {
        match self {
            RewriteRule::ChshMax => {
                if other == 0 {
                    own
                } else {
                    chsh_sign(pair) * other
                }
            }
            RewriteRule::MarginalShift => {
                let remote_first = match party {
                    Party::B => pair.a == 1,
                    _ => pair.b == 3,
                };
                if remote_first {
                    1
                } else {
                    own
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HackerConfig {
    pub delay_ns: u64,
    pub tamper_fraction: f64,
    /// Stores reached when the log is later cloned.
    #[serde(default)]
    pub target_copies: Vec<usize>,
    #[serde(default)]
    pub rule: RewriteRule,
    /// Party whose record is rewritten (A or B).
    #[serde(default = "default_party")]
    pub party: Party,
    #[serde(default)]
    pub allow_superluminal: bool,
}

fn default_party() -> Party {
    Party::A
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureEntry {
    pub strategy: DeterministicStrategy,
    pub weight: f64,
}

/// Uniform mixture over all 16 ±1 strategies.
pub fn uniform_mixture() -> Vec<MixtureEntry> {
    DeterministicStrategy::all(Game::Chsh)
        .into_iter()
        .map(|strategy| MixtureEntry { strategy, weight: 1.0 / 16.0 })
        .collect()
}

/// Uniform mixture over the strategies that saturate the CHSH bound.
pub fn optimal_mixture() -> Vec<MixtureEntry> {
    let best = crate::lhv::lhv_bound(Game::Chsh).argmax;
    let w = 1.0 / best.len() as f64;
    best.into_iter().map(|strategy| MixtureEntry { strategy, weight: w }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyConfig {
    pub setup: AnomalySetup,
    /// Extra detection delay per auxiliary level, nanoseconds.
    #[serde(default)]
    pub aux_delay_ns: BTreeMap<usize, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub generator: Generator,
    /// `(φ₁, φ₂, φ₃, φ₄)` in radians.
    pub angles: [f64; 4],
    pub efficiency_a: f64,
    pub efficiency_b: f64,
    pub layout: LayoutConfig,
    pub seed: u64,
    pub n_trials: u64,
    /// Width of the window before the nominal readout in which time tags fall.
    pub jitter_ns: u64,
    /// Simulate entanglement swapping with a heralding station C.
    pub heralding: bool,
    pub mixture: Option<Vec<MixtureEntry>>,
    pub hacker: Option<HackerConfig>,
    pub anomaly: Option<AnomalyConfig>,
}

pub fn standard_angles() -> [f64; 4] {
    use std::f64::consts::PI;
    [0.0, PI / 2.0, 5.0 * PI / 4.0, 3.0 * PI / 4.0]
}

impl SimConfig {
    pub fn new(generator: Generator, seed: u64, n_trials: u64) -> Self {
        Self {
            generator,
            angles: standard_angles(),
            efficiency_a: 1.0,
            efficiency_b: 1.0,
            layout: LayoutConfig::default(),
            seed,
            n_trials,
            jitter_ns: 0,
            heralding: false,
            mixture: None,
            hacker: None,
            anomaly: None,
        }
    }

    /// SHA-256 over the canonical JSON form of every field.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field, reason: String| Err(SimError::InvalidConfig { field, reason });
        for (field, eff) in [("efficiency_a", self.efficiency_a), ("efficiency_b", self.efficiency_b)] {
            if !(0.0..=1.0).contains(&eff) {
                return bad(field, format!("{eff} outside [0,1]"));
            }
        }
        if self.angles.iter().any(|a| !a.is_finite()) {
            return bad("angles", "non-finite angle".into());
        }
        let report = validate_layout(&self.layout)?;
        if !report.passes() {
            let failed: Vec<String> =
                report.violations().map(|c| format!("{} <-> {}", c.first, c.second)).collect();
            return Err(SimError::LayoutFails(failed.join(", ")));
        }
        let timing = Timing::from_config(self)?;
        for (label, t) in [("readout_A_done", timing.readout_a), ("readout_B_done", timing.readout_b)] {
            if self.jitter_ns > t {
                return bad("jitter_ns", format!("{} exceeds {label} time {t} ns", self.jitter_ns));
            }
        }
        if let Some(mix) = &self.mixture {
            check_mixture(mix)?;
        }
        match (self.generator, &self.hacker) {
            (Generator::HackedLhv, None) => return Err(SimError::MissingHacker),
            (Generator::HackedLhv, Some(h)) => {
                if !(0.0..=1.0).contains(&h.tamper_fraction) {
                    return bad("hacker.tamper_fraction", format!("{} outside [0,1]", h.tamper_fraction));
                }
                if h.party == Party::C {
                    return bad("hacker.party", "must be A or B".into());
                }
                if !h.allow_superluminal {
                    let threshold_ns = self.hack_threshold_ns(h.party)?;
                    if (h.delay_ns as f64) < threshold_ns {
                        return Err(SimError::HackerTooFast { delay_ns: h.delay_ns, threshold_ns });
                    }
                }
            }
            _ => {}
        }
        if self.generator == Generator::Anomaly {
            match &self.anomaly {
                None => return bad("anomaly", "anomaly generator requires an `anomaly` block".into()),
                Some(a) => a.setup.validate()?,
            }
        }
        Ok(())
    }

    /// Delay after which `party`'s readout enters the remote choice's lightcone.
    pub fn hack_threshold_ns(&self, party: Party) -> Result<f64, SimError> {
        let (readout, remote) = match party {
            Party::B => ("readout_B_done", "choice_a"),
            _ => ("readout_A_done", "choice_b"),
        };
        let r = self
            .layout
            .event(readout)
            .ok_or_else(|| SpacetimeError::MissingLabel(readout.into()))?;
        let c = self
            .layout
            .event(remote)
            .ok_or_else(|| SpacetimeError::MissingLabel(remote.into()))?;
        Ok(tamper_threshold(r, c, self.layout.c) * 1e9)
    }
}

fn check_mixture(mix: &[MixtureEntry]) -> Result<(), SimError> {
    if mix.is_empty() {
        return Err(SimError::EmptyMixture);
    }
    let mut total = 0.0;
    for entry in mix {
        let s = entry.strategy;
        DeterministicStrategy::new(s.a1, s.a2, s.b3, s.b4, Game::Chsh).map_err(|e| {
            SimError::InvalidConfig { field: "mixture", reason: e.to_string() }
        })?;
        if entry.weight.is_nan() || entry.weight < 0.0 {
            return Err(SimError::InvalidConfig {
                field: "mixture",
                reason: format!("negative weight {}", entry.weight),
            });
        }
        total += entry.weight;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(SimError::InvalidConfig { field: "mixture", reason: format!("weights sum to {total}") });
    }
    Ok(())
}

/// Nominal readout times relative to the local choice, nanoseconds.
#[derive(Debug, Clone, Copy)]
struct Timing {
    readout_a: u64,
    readout_b: u64,
    readout_c: u64,
}

impl Timing {
    fn from_config(config: &SimConfig) -> Result<Self, SimError> {
        let layout = &config.layout;
        let t = |label: &str| {
            layout
                .event(label)
                .map(|e| e.t)
                .ok_or_else(|| SpacetimeError::MissingLabel(label.to_string()))
        };
        let since = |readout: &str, choice: &str| -> Result<u64, SimError> {
            let dt = t(readout)? - t(choice)?;
            if dt < 0.0 {
                return Err(SimError::InvalidConfig {
                    field: "layout",
                    reason: format!("{readout} precedes {choice}"),
                });
            }
            Ok((dt * 1e9).round() as u64)
        };
        let readout_c = if config.heralding {
            let c = t("readout_C_done")?;
            let first_choice = t("choice_a")?.min(t("choice_b")?);
            ((c - first_choice).max(0.0) * 1e9).round() as u64
        } else {
            0
        };
        Ok(Self {
            readout_a: since("readout_A_done", "choice_a")?,
            readout_b: since("readout_B_done", "choice_b")?,
            readout_c,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub setting_a: u8,
    pub setting_b: u8,
    pub outcome_a: i8,
    pub outcome_b: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_c: Option<u8>,
    pub timetag_a: u64,
    pub timetag_b: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timetag_c: Option<u64>,
    /// Simulator ground truth.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tampered: bool,
    /// Simulator ground truth: when the rewritten record was really final.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_ns: Option<u64>,
}

impl TrialRecord {
    pub fn settings(&self) -> SettingPair {
        SettingPair { a: self.setting_a, b: self.setting_b }
    }

    /// Copy without ground-truth fields.
    pub fn redacted(&self) -> Self {
        Self { tampered: false, completion_ns: None, ..self.clone() }
    }

    pub fn is_well_formed(&self) -> bool {
        SettingPair::new(self.setting_a, self.setting_b).is_some()
            && (-1..=1).contains(&self.outcome_a)
            && (-1..=1).contains(&self.outcome_b)
            && self.outcome_c.is_none_or(|c| c <= 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema: String,
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub generator: String,
    pub n_trials: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    pub header: LogHeader,
    pub records: Vec<TrialRecord>,
}

impl EventLog {
    pub fn new(config: &SimConfig, records: Vec<TrialRecord>) -> Self {
        Self {
            header: LogHeader {
                schema: LOG_SCHEMA.into(),
                schema_version: LOG_SCHEMA_VERSION,
                config_hash: config.hash(),
                seed: config.seed,
                generator: config.generator.as_str().into(),
                n_trials: records.len() as u64,
            },
            records,
        }
    }

    pub fn redacted(&self) -> Self {
        Self { header: self.header.clone(), records: self.records.iter().map(TrialRecord::redacted).collect() }
    }

    /// Trials kept after heralding: `C = 1`, or every trial when no C was recorded.
    pub fn heralded(&self) -> Self {
        let records: Vec<TrialRecord> =
            self.records.iter().filter(|r| r.outcome_c.is_none_or(|c| c == 1)).cloned().collect();
        Self { header: LogHeader { n_trials: records.len() as u64, ..self.header.clone() }, records }
    }
}

fn trial_rng(seed: u64, trial_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_id);
    rng
}

/// Uniform draws of one trial in the documented order.
struct Draws {
    setting_a: f64,
    setting_b: f64,
    outcome: f64,
    eff_a: f64,
    eff_b: f64,
    jitter_a: f64,
    jitter_b: f64,
    jitter_c: f64,
    tamper: f64,
}

impl Draws {
    fn new(seed: u64, trial_id: u64) -> Self {
        let mut rng = trial_rng(seed, trial_id);
        let mut u = || rng.random::<f64>();
        Self {
            setting_a: u(),
            setting_b: u(),
            outcome: u(),
            eff_a: u(),
            eff_b: u(),
            jitter_a: u(),
            jitter_b: u(),
            jitter_c: u(),
            tamper: u(),
        }
    }

    fn settings(&self) -> SettingPair {
        SettingPair {
            a: if self.setting_a < 0.5 { 1 } else { 2 },
            b: if self.setting_b < 0.5 { 3 } else { 4 },
        }
    }
}

fn jittered(readout: u64, jitter: u64, u: f64) -> u64 {
    readout - (u * jitter as f64).floor() as u64
}

/// Outcome `(a, b, c)` table with Born weights for one setting pair.
#[derive(Debug, Clone)]
struct OutcomeTable {
    outcomes: Vec<(i8, i8, Option<u8>, usize)>,
    weights: Vec<f64>,
}

impl OutcomeTable {
    fn sample(&self, u: f64) -> (i8, i8, Option<u8>, usize) {
        let idx = sample_index(&self.weights, u).expect("Born weights are non-degenerate");
        self.outcomes[idx]
    }
}

fn parse_pm(label: &str) -> i8 {
    if label == "+1" {
        1
    } else {
        -1
    }
}

fn quantum_tables(config: &SimConfig) -> Result<[OutcomeTable; 4], SimError> {
    let mut tables = Vec::with_capacity(4);
    for pair in SettingPair::ALL {
        let pa = phase_projectors(config.angles[pair.a as usize - 1]);
        let pb = phase_projectors(config.angles[pair.b as usize - 1]);
        let dist = if config.heralding {
            let state = swapping_state();
            let c = swap_projector();
            let not_c = QOperator::new(
                quantum::CMatrix::identity(4, 4) - c.matrix(),
                vec![2, 2],
                OperatorKind::Projector,
            )?;
            let herald = Povm::projective(vec![("1".into(), c), ("0".into(), not_c)])?;
            quantum::joint_distribution(
                &state.density(),
                &[(&herald, &[SWAP_LOWER_A, SWAP_LOWER_B]), (&pa, &[SWAP_A]), (&pb, &[SWAP_B])],
            )?
            .into_iter()
            .map(|(l, p)| ((parse_pm(&l[1]), parse_pm(&l[2]), Some(l[0].parse::<u8>().unwrap())), p))
            .collect::<Vec<_>>()
        } else {
            quantum::joint_distribution(
                &quantum::bell_singlet().density(),
                &[(&pa, &[0]), (&pb, &[1])],
            )?
            .into_iter()
            .map(|(l, p)| ((parse_pm(&l[0]), parse_pm(&l[1]), None), p))
            .collect::<Vec<_>>()
        };
        tables.push(OutcomeTable {
            outcomes: dist.iter().map(|((a, b, c), _)| (*a, *b, *c, 0)).collect(),
            weights: dist.iter().map(|(_, p)| *p).collect(),
        });
    }
    Ok(tables.try_into().expect("four setting pairs"))
}

fn generate<F>(config: &SimConfig, trial: F) -> Vec<TrialRecord>
where
    F: Fn(u64, &Draws) -> TrialRecord + Sync,
{
    (0..config.n_trials)
        .into_par_iter()
        .map(|id| trial(id, &Draws::new(config.seed, id)))
        .collect()
}

fn detect(outcome: i8, efficiency: f64, u: f64) -> i8 {
    if u < efficiency {
        outcome
    } else {
        0
    }
}

pub fn run(config: &SimConfig) -> Result<EventLog, SimError> {
    match config.generator {
        Generator::Quantum => run_quantum(config),
        Generator::Lhv => {
            let mix = config.mixture.clone().unwrap_or_else(uniform_mixture);
            run_lhv(config, &mix)
        }
        Generator::HackedLhv => run_hacked_lhv(config),
        Generator::Anomaly => run_anomaly(config),
    }
}

/// Singlet trials with Born-sampled outcomes and per-party detection loss.
pub fn run_quantum(config: &SimConfig) -> Result<EventLog, SimError> {
    config.validate()?;
    let timing = Timing::from_config(config)?;
    let tables = quantum_tables(config)?;
    let records = generate(config, |id, d| {
        let pair = d.settings();
        let (a, b, c, _) = tables[pair.index()].sample(d.outcome);
        TrialRecord {
            trial_id: id,
            setting_a: pair.a,
            setting_b: pair.b,
            outcome_a: detect(a, config.efficiency_a, d.eff_a),
            outcome_b: detect(b, config.efficiency_b, d.eff_b),
            outcome_c: c,
            timetag_a: jittered(timing.readout_a, config.jitter_ns, d.jitter_a),
            timetag_b: jittered(timing.readout_b, config.jitter_ns, d.jitter_b),
            timetag_c: c.map(|_| jittered(timing.readout_c, config.jitter_ns.min(timing.readout_c), d.jitter_c)),
            tampered: false,
            completion_ns: None,
        }
    });
    Ok(EventLog::new(config, records))
}

/// Trials from a mixture of deterministic local strategies.
pub fn run_lhv(config: &SimConfig, mixture: &[MixtureEntry]) -> Result<EventLog, SimError> {
    config.validate()?;
    check_mixture(mixture)?;
    let records = lhv_records(config, mixture)?;
    Ok(EventLog::new(config, records))
}

fn lhv_records(config: &SimConfig, mixture: &[MixtureEntry]) -> Result<Vec<TrialRecord>, SimError> {
    let timing = Timing::from_config(config)?;
    let weights: Vec<f64> = mixture.iter().map(|m| m.weight).collect();
    Ok(generate(config, |id, d| {
        let pair = d.settings();
        let idx = sample_index(&weights, d.outcome).expect("mixture has positive weight");
        let s = mixture[idx].strategy;
        TrialRecord {
            trial_id: id,
            setting_a: pair.a,
            setting_b: pair.b,
            outcome_a: detect(s.outcome_a(pair.a), config.efficiency_a, d.eff_a),
            outcome_b: detect(s.outcome_b(pair.b), config.efficiency_b, d.eff_b),
            outcome_c: None,
            timetag_a: jittered(timing.readout_a, config.jitter_ns, d.jitter_a),
            timetag_b: jittered(timing.readout_b, config.jitter_ns, d.jitter_b),
            timetag_c: None,
            tampered: false,
            completion_ns: None,
        }
    }))
}

/// A local-strategy log whose records are rewritten after readout using the
/// remote setting. Nominal time tags are kept; the ground-truth completion
/// time is the nominal tag plus the hack delay.
pub fn run_hacked_lhv(config: &SimConfig) -> Result<EventLog, SimError> {
    config.validate()?;
    let hacker = config.hacker.as_ref().ok_or(SimError::MissingHacker)?;
    let mixture = config.mixture.clone().unwrap_or_else(uniform_mixture);
    check_mixture(&mixture)?;
    let mut records = lhv_records(config, &mixture)?;
    records.par_iter_mut().for_each(|r| {
        let d = Draws::new(config.seed, r.trial_id);
        if d.tamper < hacker.tamper_fraction {
            hack_record(r, hacker);
        }
    });
    Ok(EventLog::new(config, records))
}

fn hack_record(r: &mut TrialRecord, hacker: &HackerConfig) {
    let pair = r.settings();
    match hacker.party {
        Party::B => {
            r.outcome_b = hacker.rule.apply(Party::B, pair, r.outcome_b, r.outcome_a);
            r.completion_ns = Some(r.timetag_b + hacker.delay_ns);
        }
        _ => {
            r.outcome_a = hacker.rule.apply(Party::A, pair, r.outcome_a, r.outcome_b);
            r.completion_ns = Some(r.timetag_a + hacker.delay_ns);
        }
    }
    r.tampered = true;
}

/// Trials from the enlarged-space model: outcomes are `+1` on a detection
/// and `0` otherwise, and a detection's time tag is shifted earlier by the
/// remaining delay budget of the auxiliary level it came through.
pub fn run_anomaly(config: &SimConfig) -> Result<EventLog, SimError> {
    config.validate()?;
    let anomaly = config.anomaly.as_ref().ok_or(SimError::InvalidConfig {
        field: "anomaly",
        reason: "missing".into(),
    })?;
    let timing = Timing::from_config(config)?;
    let setup = &anomaly.setup;
    let rho = anomaly_state(setup.n_aux)?.density();
    let max_delay = anomaly.aux_delay_ns.values().copied().max().unwrap_or(0);

    let level_of = |label: &str| -> Option<usize> { label.strip_prefix("1:").map(|k| k.parse().unwrap()) };
    let mut tables = Vec::with_capacity(4);
    for pair in SettingPair::ALL {
        let pa = anomaly_local_povm(setup, pair.a)?;
        let pb = anomaly_local_povm(setup, pair.b)?;
        let dist = quantum::joint_distribution(&rho, &[(&pa, &[0, 1]), (&pb, &[2, 3])])?;
        tables.push(OutcomeTable {
            outcomes: dist
                .iter()
                .map(|(l, _)| {
                    let ka = level_of(&l[0]);
                    let kb = level_of(&l[1]);
                    (ka.map_or(0, |_| 1), kb.map_or(0, |_| 1), None, ka.unwrap_or(0))
                })
                .collect(),
            weights: dist.iter().map(|(_, p)| *p).collect(),
        });
    }

    let records = generate(config, |id, d| {
        let pair = d.settings();
        let (a, b, _, level) = tables[pair.index()].sample(d.outcome);
        let shift = max_delay - anomaly.aux_delay_ns.get(&level).copied().unwrap_or(0);
        let base_a = jittered(timing.readout_a, config.jitter_ns, d.jitter_a);
        TrialRecord {
            trial_id: id,
            setting_a: pair.a,
            setting_b: pair.b,
            outcome_a: a,
            outcome_b: b,
            outcome_c: None,
            timetag_a: base_a.saturating_sub(shift),
            timetag_b: jittered(timing.readout_b, config.jitter_ns, d.jitter_b),
            timetag_c: None,
            tampered: false,
            completion_ns: None,
        }
    });
    Ok(EventLog::new(config, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quantum_config(n: u64) -> SimConfig {
        SimConfig::new(Generator::Quantum, 7, n)
    }

    #[test]
    fn deterministic_given_seed() {
        let c = quantum_config(2000);
        assert_eq!(run(&c).unwrap(), run(&c).unwrap());
        let mut other = c.clone();
        other.seed = 8;
        assert_ne!(run(&c).unwrap().records, run(&other).unwrap().records);
    }

    #[test]
    fn hash_covers_fields() {
        let base = quantum_config(10);
        let h = base.hash();
        let mut variants = Vec::new();
        let mut c = base.clone();
        c.seed += 1;
        variants.push(c);
        let mut c = base.clone();
        c.n_trials += 1;
        variants.push(c);
        let mut c = base.clone();
        c.angles[2] += 1e-9;
        variants.push(c);
        let mut c = base.clone();
        c.efficiency_b = 0.9;
        variants.push(c);
        let mut c = base.clone();
        c.jitter_ns = 1;
        variants.push(c);
        let mut c = base.clone();
        c.heralding = true;
        variants.push(c);
        let mut c = base.clone();
        c.layout.c *= 2.0;
        variants.push(c);
        let mut c = base.clone();
        c.generator = Generator::Lhv;
        variants.push(c);
        let mut c = base.clone();
        c.mixture = Some(uniform_mixture());
        variants.push(c);
        for v in variants {
            assert_ne!(v.hash(), h);
        }
        assert_eq!(base.clone().hash(), h);
    }

    #[test]
    fn invalid_layout_refused() {
        let mut c = quantum_config(10);
        c.layout = LayoutConfig::chsh(600.0, 5e-6);
        assert!(matches!(run(&c), Err(SimError::LayoutFails(_))));
    }

    #[test]
    fn config_validation() {
        let mut c = quantum_config(10);
        c.efficiency_a = 1.2;
        assert!(matches!(c.validate(), Err(SimError::InvalidConfig { field: "efficiency_a", .. })));

        let c = SimConfig::new(Generator::HackedLhv, 1, 10);
        assert!(matches!(c.validate(), Err(SimError::MissingHacker)));

        let mut c = quantum_config(10);
        c.jitter_ns = 5000;
        assert!(matches!(c.validate(), Err(SimError::InvalidConfig { field: "jitter_ns", .. })));
    }

    #[test]
    fn empty_mixture_rejected() {
        let c = SimConfig::new(Generator::Lhv, 1, 10);
        assert!(matches!(run_lhv(&c, &[]), Err(SimError::EmptyMixture)));
    }

    #[test]
    fn hacker_must_respect_light_travel() {
        let mut c = SimConfig::new(Generator::HackedLhv, 1, 10);
        let threshold = c.hack_threshold_ns(Party::A).unwrap();
        assert!((threshold - (1200.0 / crate::spacetime::SPEED_OF_LIGHT * 1e9 - 2000.0)).abs() < 1e-6);
        c.hacker = Some(HackerConfig {
            delay_ns: 100,
            tamper_fraction: 1.0,
            target_copies: vec![],
            rule: RewriteRule::ChshMax,
            party: Party::A,
            allow_superluminal: false,
        });
        assert!(matches!(run(&c), Err(SimError::HackerTooFast { .. })));
        c.hacker.as_mut().unwrap().allow_superluminal = true;
        assert!(run(&c).is_ok());
    }

    #[test]
    fn time_tags_within_window() {
        let mut c = quantum_config(500);
        c.jitter_ns = 300;
        let log = run(&c).unwrap();
        assert!(log.records.iter().all(|r| (1700..=2001).contains(&r.timetag_a)));
    }

    #[test]
    fn heralding_records_c() {
        let mut c = quantum_config(4000);
        c.heralding = true;
        c.layout = LayoutConfig::swapping(600.0, 2e-6, 1e-6);
        let log = run(&c).unwrap();
        assert!(log.records.iter().all(|r| r.outcome_c.is_some() && r.timetag_c.is_some()));
        let rate = log.heralded().records.len() as f64 / 4000.0;
        assert!((rate - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / 4000.0).sqrt());
    }

    #[test]
    fn rewrite_rules() {
        let p24 = SettingPair { a: 2, b: 4 };
        let p13 = SettingPair { a: 1, b: 3 };
        assert_eq!(RewriteRule::ChshMax.apply(Party::A, p24, 1, 1), -1);
        assert_eq!(RewriteRule::ChshMax.apply(Party::A, p13, -1, 1), 1);
        assert_eq!(RewriteRule::ChshMax.apply(Party::A, p13, -1, 0), -1);
        assert_eq!(RewriteRule::MarginalShift.apply(Party::A, p13, -1, 1), 1);
        assert_eq!(RewriteRule::MarginalShift.apply(Party::A, p24, -1, 1), -1);
        assert_eq!(RewriteRule::MarginalShift.apply(Party::B, p13, -1, 1), 1);
    }
}
