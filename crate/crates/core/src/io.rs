//! File formats: event logs, layouts, run configs and manifests.
//!
//! Writes go through a temporary file in the target directory followed by
//! a rename, so readers never observe a partial file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::AnomalySetup;
use crate::sim::{
    standard_angles, AnomalyConfig, EventLog, Generator, HackerConfig, LogHeader, MixtureEntry, SimConfig,
    TrialRecord, LOG_SCHEMA, LOG_SCHEMA_VERSION,
};
use crate::spacetime::{LayoutConfig, Party, SpacetimeEvent, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("{path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

/// Writes `contents` to `path` atomically.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.flush().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| IoError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

/// Header line, then one record per line. Ground-truth fields are written
/// only when `reveal_truth` is set.
pub fn event_log_to_string(log: &EventLog, reveal_truth: bool) -> String {
    let mut s = serde_json::to_string(&log.header).expect("header serializes");
    s.push('\n');
    for r in &log.records {
        let line = if reveal_truth {
            serde_json::to_string(r)
        } else {
            serde_json::to_string(&r.redacted())
        };
        s.push_str(&line.expect("record serializes"));
        s.push('\n');
    }
    s
}

pub fn parse_event_log(text: &str, path: &Path) -> Result<EventLog, IoError> {
    let perr = |line: usize, reason: String| IoError::Parse { path: path.to_path_buf(), line, reason };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| perr(1, "empty file, expected a header line".into()))?;
    let header: LogHeader = serde_json::from_str(first).map_err(|e| perr(1, format!("header: {e}")))?;
    if header.schema != LOG_SCHEMA {
        return Err(perr(1, format!("unknown schema `{}`", header.schema)));
    }
    if header.schema_version != LOG_SCHEMA_VERSION {
        return Err(perr(1, format!("unsupported schema version {}", header.schema_version)));
    }
    let mut records = Vec::with_capacity(header.n_trials as usize);
    for (i, line) in lines {
        let r: TrialRecord = serde_json::from_str(line).map_err(|e| perr(i + 1, e.to_string()))?;
        records.push(r);
    }
    if records.len() as u64 != header.n_trials {
        return Err(IoError::Invalid {
            path: path.to_path_buf(),
            reason: format!("header announces {} trials, found {}", header.n_trials, records.len()),
        });
    }
    Ok(EventLog { header, records })
}

pub fn read_event_log(path: &Path) -> Result<EventLog, IoError> {
    parse_event_log(&read_text(path)?, path)
}

pub fn write_event_log(path: &Path, log: &EventLog, reveal_truth: bool) -> Result<(), IoError> {
    write_atomic(path, event_log_to_string(log, reveal_truth).as_bytes())
}

/// Layout text:
///
/// ```text
/// c = 299792458
/// event label=choice_a party=A t=0 x=-600 y=0 z=0
/// require choice_b readout_A_done
/// ```
pub fn parse_layout(text: &str, path: &Path) -> Result<LayoutConfig, IoError> {
    let perr = |line: usize, reason: String| IoError::Parse { path: path.to_path_buf(), line, reason };
    let mut c = SPEED_OF_LIGHT;
    let mut events = Vec::new();
    let mut required = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("c") => {
                let rest: Vec<&str> = tok.collect();
                let value = match rest.as_slice() {
                    ["=", v] => v,
                    [v] => v.strip_prefix('=').unwrap_or(v),
                    _ => return Err(perr(n, "expected `c = <meters per second>`".into())),
                };
                c = value.parse().map_err(|_| perr(n, format!("invalid speed `{value}`")))?;
            }
            Some("event") => {
                let mut fields = BTreeMap::new();
                for kv in tok {
                    let (k, v) = kv.split_once('=').ok_or_else(|| perr(n, format!("expected key=value, got `{kv}`")))?;
                    if fields.insert(k, v).is_some() {
                        return Err(perr(n, format!("repeated key `{k}`")));
                    }
                }
                let get = |k: &str| fields.get(k).copied().ok_or_else(|| perr(n, format!("missing `{k}`")));
                let num = |k: &str| -> Result<f64, IoError> {
                    match fields.get(k) {
                        None if k != "t" => Ok(0.0),
                        None => Err(perr(n, "missing `t`".into())),
                        Some(v) => v.parse().map_err(|_| perr(n, format!("invalid number for `{k}`: `{v}`"))),
                    }
                };
                let label = get("label")?;
                let party = Party::parse(get("party")?).ok_or_else(|| perr(n, "party must be A, B or C".into()))?;
                if let Some(k) = fields.keys().find(|k| !["label", "party", "t", "x", "y", "z"].contains(k)) {
                    return Err(perr(n, format!("unknown key `{k}`")));
                }
                events.push(SpacetimeEvent::new(label, party, num("t")?, [num("x")?, num("y")?, num("z")?]));
            }
            Some("require") => {
                let labels: Vec<&str> = tok.collect();
                match labels.as_slice() {
                    [a, b] => required.push((a.to_string(), b.to_string())),
                    _ => return Err(perr(n, "expected `require <label> <label>`".into())),
                }
            }
            Some(other) => return Err(perr(n, format!("unknown directive `{other}`"))),
            None => {}
        }
    }
    LayoutConfig::new(events, c, required)
        .map_err(|e| IoError::Invalid { path: path.to_path_buf(), reason: e.to_string() })
}

pub fn layout_to_string(layout: &LayoutConfig) -> String {
    let mut s = format!("c = {}\n", layout.c);
    for e in &layout.events {
        let _ = writeln!(
            s,
            "event label={} party={} t={:e} x={} y={} z={}",
            e.label, e.party, e.t, e.pos[0], e.pos[1], e.pos[2]
        );
    }
    for (a, b) in &layout.required_separations {
        let _ = writeln!(s, "require {a} {b}");
    }
    s
}

pub fn read_layout(path: &Path) -> Result<LayoutConfig, IoError> {
    parse_layout(&read_text(path)?, path)
}

/// The TOML form of a run configuration. Only `generator`, `seed` and
/// `n_trials` are required; a layout may be given inline or as a path
/// relative to the config file.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub generator: Generator,
    pub seed: u64,
    pub n_trials: u64,
    #[serde(default = "standard_angles")]
    pub angles: [f64; 4],
    #[serde(default = "one")]
    pub efficiency_a: f64,
    #[serde(default = "one")]
    pub efficiency_b: f64,
    #[serde(default)]
    pub jitter_ns: u64,
    #[serde(default)]
    pub heralding: bool,
    #[serde(default)]
    pub layout: Option<LayoutConfig>,
    #[serde(default)]
    pub layout_file: Option<PathBuf>,
    #[serde(default)]
    pub mixture: Option<Vec<MixtureEntry>>,
    #[serde(default)]
    pub hacker: Option<HackerConfig>,
    #[serde(default)]
    pub anomaly: Option<AnomalyFile>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalyFile {
    pub n_aux: usize,
    /// Keys are choice digits as strings ("1".."4").
    pub phases: BTreeMap<String, f64>,
    #[serde(default)]
    pub aux_efficiency: BTreeMap<String, f64>,
    #[serde(default)]
    pub null_choice: Option<u8>,
    #[serde(default)]
    pub aux_delay_ns: BTreeMap<String, u64>,
}

fn one() -> f64 {
    1.0
}

fn int_keys<K: std::str::FromStr + Ord, V: Copy>(
    map: &BTreeMap<String, V>,
    field: &str,
) -> Result<BTreeMap<K, V>, String> {
    map.iter()
        .map(|(k, v)| k.parse::<K>().map(|k| (k, *v)).map_err(|_| format!("{field}: key `{k}` is not an integer")))
        .collect()
}

impl AnomalyFile {
    fn into_config(self) -> Result<AnomalyConfig, String> {
        Ok(AnomalyConfig {
            setup: AnomalySetup {
                n_aux: self.n_aux,
                phases: int_keys(&self.phases, "anomaly.phases")?,
                aux_efficiency: int_keys(&self.aux_efficiency, "anomaly.aux_efficiency")?,
                null_choice: self.null_choice,
            },
            aux_delay_ns: int_keys(&self.aux_delay_ns, "anomaly.aux_delay_ns")?,
        })
    }
}

pub fn parse_config(text: &str, path: &Path) -> Result<SimConfig, IoError> {
    let invalid = |reason: String| IoError::Invalid { path: path.to_path_buf(), reason };
    let file: ConfigFile = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
    let layout = match (file.layout, file.layout_file) {
        (Some(_), Some(_)) => return Err(invalid("give either `layout` or `layout_file`, not both".into())),
        (Some(l), None) => l,
        (None, Some(rel)) => {
            let base = path.parent().unwrap_or(Path::new("."));
            read_layout(&base.join(rel))?
        }
        (None, None) => LayoutConfig::default(),
    };
    let anomaly = file.anomaly.map(AnomalyFile::into_config).transpose().map_err(invalid)?;
    Ok(SimConfig {
        generator: file.generator,
        angles: file.angles,
        efficiency_a: file.efficiency_a,
        efficiency_b: file.efficiency_b,
        layout,
        seed: file.seed,
        n_trials: file.n_trials,
        jitter_ns: file.jitter_ns,
        heralding: file.heralding,
        mixture: file.mixture,
        hacker: file.hacker,
        anomaly,
    })
}

pub fn read_config(path: &Path) -> Result<SimConfig, IoError> {
    parse_config(&read_text(path)?, path)
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub generator: String,
    pub n_trials: u64,
    pub log_schema_version: u32,
    /// Seconds since the Unix epoch when the run finished.
    pub created_unix_s: u64,
    pub module_versions: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(config: &SimConfig, log: &EventLog) -> Self {
        let created_unix_s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let version = env!("CARGO_PKG_VERSION").to_string();
        let module_versions = ["quantum", "lhv", "spacetime", "sim", "audit", "vacuum", "io"]
            .iter()
            .map(|m| (m.to_string(), version.clone()))
            .collect();
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config_hash: config.hash(),
            seed: config.seed,
            generator: config.generator.as_str().into(),
            n_trials: log.records.len() as u64,
            log_schema_version: LOG_SCHEMA_VERSION,
            created_unix_s,
            module_versions,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        write_atomic(path, s.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, HackerConfig, RewriteRule};

    #[test]
    fn event_log_round_trip() {
        let mut config = SimConfig::new(Generator::HackedLhv, 5, 300);
        config.efficiency_a = 0.7;
        config.jitter_ns = 50;
        config.hacker = Some(HackerConfig {
            delay_ns: 5000,
            tamper_fraction: 0.5,
            target_copies: vec![],
            rule: RewriteRule::ChshMax,
            party: Party::A,
            allow_superluminal: false,
        });
        let log = run(&config).unwrap();
        let p = Path::new("mem");
        assert_eq!(parse_event_log(&event_log_to_string(&log, true), p).unwrap(), log);
        let hidden = event_log_to_string(&log, false);
        assert!(!hidden.contains("tampered") && !hidden.contains("completion_ns"));
        assert_eq!(parse_event_log(&hidden, p).unwrap(), log.redacted());
    }

    #[test]
    fn event_log_errors() {
        let p = Path::new("mem");
        assert!(matches!(parse_event_log("", p), Err(IoError::Parse { line: 1, .. })));
        let log = run(&SimConfig::new(Generator::Quantum, 1, 2)).unwrap();
        let text = event_log_to_string(&log, false);
        let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_event_log(&truncated, p), Err(IoError::Invalid { .. })));
        let broken = text.replace("\"setting_a\":", "\"setting_x\":");
        assert!(matches!(parse_event_log(&broken, p), Err(IoError::Parse { line: 2, .. })));
        let wrong = text.replacen("bellab/eventlog", "other", 1);
        assert!(parse_event_log(&wrong, p).is_err());
    }

    #[test]
    fn layout_round_trip() {
        for layout in [LayoutConfig::default(), LayoutConfig::swapping(400.0, 1e-6, 5e-7).with_c(1.5e8)] {
            let back = parse_layout(&layout_to_string(&layout), Path::new("mem")).unwrap();
            assert_eq!(back, layout);
        }
    }

    #[test]
    fn layout_errors() {
        let p = Path::new("mem");
        let e = parse_layout("c = 3e8\nevent label=x party=Q t=0\n", p).unwrap_err();
        assert!(matches!(e, IoError::Parse { line: 2, .. }));
        assert!(parse_layout("event label=x party=A\n", p).is_err());
        assert!(parse_layout("frobnicate\n", p).is_err());
        assert!(parse_layout("event label=x party=A t=0\nevent label=x party=B t=0\n", p).is_err());
        assert!(parse_layout("c = -1\n", p).is_err());
    }

    #[test]
    fn config_defaults_and_errors() {
        let p = Path::new("mem.toml");
        let c = parse_config("generator = \"quantum\"\nseed = 3\nn_trials = 10\n", p).unwrap();
        assert_eq!(c, SimConfig::new(Generator::Quantum, 3, 10));
        let e = parse_config("generator = \"quantum\"\nseed = 3\nn_trials = 10\nefficency_a = 1\n", p).unwrap_err();
        assert!(e.to_string().contains("efficency_a"));
        let c = parse_config(
            "generator = \"anomaly\"\nseed = 1\nn_trials = 5\n[anomaly]\nn_aux = 3\nphases = { 1 = 0.0, 2 = 1.0, 3 = 2.0, 4 = 3.0 }\naux_efficiency = { 1 = 0.8 }\naux_delay_ns = { 2 = 6 }\n",
            p,
        )
        .unwrap();
        let a = c.anomaly.unwrap();
        assert_eq!(a.setup.phases.len(), 4);
        assert_eq!(a.aux_delay_ns.get(&2), Some(&6));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
