//! Command-line surface.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 validation or check
//! failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::audit::{
    audit_dataset, binned_ratio_test, correlator_equality_test, dataset, marginal_counts, nosignaling_suite,
    AuditError, AuditReport, DATASET_NAMES,
};
use crate::counts::CountsTable;
use crate::io::{self, IoError, RunManifest};
use crate::lhv::{estimate_from_counts, Game};
use crate::sim::{
    clone_records, run, tamper_copies, verify_clones, Attacker, EventLog, RewriteRule, SimConfig, SimError,
    StoreSpec,
};
use crate::spacetime::{validate_layout, Party, SpacetimeError};
use crate::vacuum::{
    classify_momentum, conservation_forces_zero, realism_admissible, FourVector, InvariantCorrelator,
    MomentumClass,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    /// A check ran and failed; the text is the full report.
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Sim(_) | CliError::Audit(_) | CliError::Spacetime(_) | CliError::CheckFailed(_) => EXIT_CHECK,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bellab", version, about = "Bell-test simulation, lightcone checks and no-signaling audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an event log from a TOML run config.
    Simulate(SimulateArgs),
    /// Run statistical audits on a log, a counts file or a bundled dataset.
    Audit(AuditArgs),
    /// Clone a log to m stores, optionally attack some, and exclude mismatches.
    CloneVerify(CloneVerifyArgs),
    /// Check that every required event pair of a layout is spacelike.
    LayoutCheck(LayoutCheckArgs),
    /// Classify an invariant correlator against the realism constraints.
    VacuumCheck(VacuumCheckArgs),
    /// Bell estimates plus every applicable audit for one log.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Write simulator ground truth (tampered flags, completion times).
    #[arg(long)]
    pub reveal_truth: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Nosignaling,
    Binned,
    Correlators,
    All,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, conflicts_with_all = ["counts", "dataset"])]
    pub log: Option<PathBuf>,
    #[arg(long, conflicts_with = "dataset")]
    pub counts: Option<PathBuf>,
    /// One of the bundled datasets.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 4)]
    pub bin_width_ns: u64,
    /// Restrict a log to heralded trials (C = 1) before auditing.
    #[arg(long)]
    pub heralded: bool,
    /// Write machine-readable records (one JSON object per line).
    #[arg(long)]
    pub machine: Option<PathBuf>,
    /// Write the per-bin ratio series as a two-column table.
    #[arg(long)]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    ChshMax,
    MarginalShift,
}

#[derive(Debug, Args)]
pub struct CloneVerifyArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// Number of copies.
    #[arg(long, short = 'm')]
    pub copies: usize,
    #[arg(long, default_value_t = 10)]
    pub latency_ns: u64,
    /// Comma-separated indices of stores the attacker reaches.
    #[arg(long, value_delimiter = ',')]
    pub attack_stores: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub tamper_fraction: f64,
    #[arg(long, default_value_t = 10_000)]
    pub delay_ns: u64,
    #[arg(long, default_value_t = 0)]
    pub attack_seed: u64,
    #[arg(long, value_enum, default_value = "chsh-max")]
    pub rule: RuleArg,
    /// Party whose outcome the attacker rewrites.
    #[arg(long, default_value = "A")]
    pub party: String,
    /// Where to write the clean log.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write excluded trial ids, one per line.
    #[arg(long)]
    pub excluded: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LayoutCheckArgs {
    #[arg(long)]
    pub layout: PathBuf,
    /// Replace the layout's speed of light (m/s).
    #[arg(long, conflicts_with = "c_scale")]
    pub c: Option<f64>,
    /// Multiply the layout's speed of light.
    #[arg(long)]
    pub c_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VacuumCheckArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub xi: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: f64,
    /// Four-momentum as `p0,p1,p2,p3`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub p: Vec<f64>,
    /// Also impose transversality (current conservation).
    #[arg(long)]
    pub conservation: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 4)]
    pub bin_width_ns: u64,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let config = io::read_config(&args.config)?;
    simulate_config(&config, &args.out, args.manifest.as_deref(), args.reveal_truth)
}

pub fn simulate_config(
    config: &SimConfig,
    out: &Path,
    manifest: Option<&Path>,
    reveal_truth: bool,
) -> Result<String, CliError> {
    let log = run(config)?;
    io::write_event_log(out, &log, reveal_truth)?;
    let manifest_file = manifest.map(Path::to_path_buf).unwrap_or_else(|| manifest_path(out));
    RunManifest::new(config, &log).write(&manifest_file)?;
    let mut s = format!(
        "wrote {} trials ({} generator, seed {}) to {}\nconfig hash {}\n",
        log.records.len(),
        config.generator.as_str(),
        config.seed,
        out.display(),
        log.header.config_hash
    );
    s.push_str(&bell_summary(&log));
    Ok(s)
}

fn bell_summary(log: &EventLog) -> String {
    let mut s = String::new();
    let heralded = log.records.iter().any(|r| r.outcome_c.is_some());
    let view = if heralded { log.heralded() } else { log.clone() };
    if heralded {
        let _ = writeln!(s, "heralded trials (C = 1): {} of {}", view.records.len(), log.records.len());
    }
    let counts = marginal_counts(&view).table;
    for (name, game) in [("CHSH", Game::Chsh), ("Eberhard", Game::Eberhard)] {
        match estimate_from_counts(&counts, game) {
            Ok(e) => {
                let _ = writeln!(s, "{name} estimate {:+.6} +/- {:.6}", e.value, e.standard_error);
            }
            Err(e) => {
                let _ = writeln!(s, "{name} estimate unavailable: {e}");
            }
        }
    }
    s
}

fn write_outputs(report: &AuditReport, machine: Option<&Path>, series: Option<&Path>) -> Result<(), CliError> {
    if let Some(path) = machine {
        let mut text = report.machine_lines().join("\n");
        text.push('\n');
        io::write_atomic(path, text.as_bytes())?;
    }
    if let Some(path) = series {
        io::write_atomic(path, report.ratio_series().as_bytes())?;
    }
    Ok(())
}

fn audit_log(log: &EventLog, suite: Suite, alpha: f64, bin_width_ns: u64) -> Result<AuditReport, CliError> {
    let marg = marginal_counts(log);
    let mut report = AuditReport::new(format!("audit: {}", marg.table.source), alpha)?;
    if !marg.skipped.is_empty() {
        report.warnings.push(format!(
            "skipped {} malformed records: {:?}",
            marg.skipped.len(),
            &marg.skipped[..marg.skipped.len().min(20)]
        ));
    }
    if matches!(suite, Suite::Nosignaling | Suite::All) {
        report.absorb(nosignaling_suite(&marg.table, alpha)?);
    }
    if matches!(suite, Suite::Binned | Suite::All) {
        report.absorb(binned_ratio_test(log, bin_width_ns, alpha)?);
    }
    if matches!(suite, Suite::Correlators | Suite::All) {
        report.absorb(correlator_equality_test(&marg.table, alpha)?);
    }
    Ok(report.finalize())
}

fn audit_counts(counts: &CountsTable, suite: Suite, alpha: f64) -> Result<AuditReport, CliError> {
    let mut report = AuditReport::new(format!("audit: {}", counts.source), alpha)?;
    if matches!(suite, Suite::Binned) {
        return Err(CliError::Usage("the binned suite needs an event log with time tags".into()));
    }
    if matches!(suite, Suite::Nosignaling | Suite::All) {
        report.absorb(nosignaling_suite(counts, alpha)?);
    }
    if matches!(suite, Suite::Correlators | Suite::All) {
        report.absorb(correlator_equality_test(counts, alpha)?);
    }
    Ok(report.finalize())
}

pub fn cmd_audit(args: &AuditArgs) -> Result<String, CliError> {
    let report = match (&args.log, &args.counts, &args.dataset) {
        (Some(path), None, None) => {
            let mut log = io::read_event_log(path)?;
            if args.heralded {
                log = log.heralded();
            }
            audit_log(&log, args.suite, args.alpha, args.bin_width_ns)?
        }
        (None, Some(path), None) => {
            let text = io::read_text(path)?;
            let mut counts = CountsTable::parse_text(&text).map_err(|e| {
                CliError::Io(IoError::Parse { path: path.clone(), line: e.line, reason: e.reason })
            })?;
            if counts.source.is_empty() {
                counts.source = path.display().to_string();
            }
            audit_counts(&counts, args.suite, args.alpha)?
        }
        (None, None, Some(name)) => {
            let ds = dataset(name).ok_or_else(|| {
                CliError::Usage(format!("unknown dataset `{name}`; known: {}", DATASET_NAMES.join(", ")))
            })?;
            audit_dataset(&ds, args.alpha)?
        }
        _ => return Err(CliError::Usage("give exactly one of --log, --counts, --dataset".into())),
    };
    write_outputs(&report, args.machine.as_deref(), args.series.as_deref())?;
    Ok(report.to_string())
}

pub fn cmd_clone_verify(args: &CloneVerifyArgs) -> Result<String, CliError> {
    let log = io::read_event_log(&args.log)?;
    let party = Party::parse(&args.party)
        .filter(|p| *p != Party::C)
        .ok_or_else(|| CliError::Usage(format!("--party must be A or B, got `{}`", args.party)))?;
    let stores = StoreSpec::uniform(args.copies, args.latency_ns);
    let batch = clone_records(&log, args.copies, &stores)?;
    if batch.loophole_open() {
        return Err(SimError::ObjectivityLoopholeOpen.into());
    }
    let attacker = Attacker {
        delay_ns: args.delay_ns,
        stores: args.attack_stores.clone(),
        rule: match args.rule {
            RuleArg::ChshMax => RewriteRule::ChshMax,
            RuleArg::MarginalShift => RewriteRule::MarginalShift,
        },
        party,
        tamper_fraction: args.tamper_fraction,
        seed: args.attack_seed,
    };
    let batch = tamper_copies(&batch, &attacker)?;
    let v = verify_clones(&batch)?;
    if let Some(out) = &args.out {
        io::write_event_log(out, &v.clean, false)?;
    }
    if let Some(path) = &args.excluded {
        let text: String = v.excluded.iter().map(|id| format!("{id}\n")).collect();
        io::write_atomic(path, text.as_bytes())?;
    }
    let mut s = format!(
        "copies {}, attacker reaches stores {:?} at tamper fraction {}\nexcluded {} of {} trials (rate {:.6})\n",
        args.copies,
        args.attack_stores,
        args.tamper_fraction,
        v.excluded.len(),
        log.records.len(),
        v.exclusion_rate()
    );
    s.push_str("clean log:\n");
    s.push_str(&bell_summary(&v.clean));
    if args.attack_stores.len() == args.copies && args.tamper_fraction > 0.0 {
        s.push_str("note: an attacker reaching every store writes consistent copies; comparison cannot detect it\n");
    }
    Ok(s)
}

pub fn cmd_layout_check(args: &LayoutCheckArgs) -> Result<String, CliError> {
    let mut layout = io::read_layout(&args.layout)?;
    if let Some(c) = args.c {
        layout = layout.with_c(c);
    }
    if let Some(k) = args.c_scale {
        layout = layout.with_c(layout.c * k);
    }
    let report = validate_layout(&layout)?;
    let text = format!("{report}\n");
    if report.passes() {
        Ok(text)
    } else {
        Err(CliError::CheckFailed(text))
    }
}

pub fn cmd_vacuum_check(args: &VacuumCheckArgs) -> Result<String, CliError> {
    let [p0, p1, p2, p3] = args.p[..] else {
        return Err(CliError::Usage(format!("--p needs 4 components, got {}", args.p.len())));
    };
    let p = FourVector::new(p0, p1, p2, p3);
    if p.0.iter().any(|x| !x.is_finite()) || !args.xi.is_finite() || !args.eta.is_finite() {
        return Err(CliError::Usage("all inputs must be finite".into()));
    }
    let c = InvariantCorrelator::new(args.xi, args.eta);
    let class = classify_momentum(&p);
    let adm = realism_admissible(&c, &p);
    let mut s = format!("p is {class:?}, p.p = {}\n", crate::vacuum::minkowski_dot(&p, &p)).to_lowercase();
    let _ = writeln!(s, "realism constraints: {adm}");
    if args.conservation {
        if class == MomentumClass::Spacelike {
            let (zero, w) = conservation_forces_zero(&c, &p).expect("spacelike checked");
            let _ = writeln!(s, "transversality residual p_mu G^mu nu = {:?}", w.residual.0);
            let _ = writeln!(s, "transverse: {}, G vanishes: {}", w.transverse, w.vanishes);
            if zero {
                s.push_str("conclusion: the correlator vanishes identically\n");
            } else if adm.is_compatible() && !w.transverse {
                s.push_str("conclusion: admissible but not conserved; conservation forces xi = 0 and hence G = 0\n");
            } else {
                s.push_str("conclusion: not both admissible and conserved\n");
            }
        } else {
            s.push_str("conservation check applies to spacelike p only\n");
        }
    }
    Ok(s)
}

pub fn report_text(log: &EventLog, alpha: f64, bin_width_ns: u64) -> Result<String, CliError> {
    let mut s = format!(
        "log: {} generator, seed {}, {} trials, config hash {}\n",
        log.header.generator,
        log.header.seed,
        log.records.len(),
        log.header.config_hash
    );
    s.push_str(&bell_summary(log));
    let heralded = log.records.iter().any(|r| r.outcome_c.is_some());
    let all = audit_log(log, Suite::Nosignaling, alpha, bin_width_ns)?;
    s.push_str("\n[no-signaling]\n");
    s.push_str(&all.to_string());
    let view = if heralded { log.heralded() } else { log.clone() };
    let rest = audit_log(&view, Suite::Correlators, alpha, bin_width_ns)?;
    s.push_str(if heralded { "\n[correlators, heralded trials]\n" } else { "\n[correlators]\n" });
    s.push_str(&rest.to_string());
    let binned = audit_log(&view, Suite::Binned, alpha, bin_width_ns)?;
    s.push_str("\n[detection ratio by time bin]\n");
    s.push_str(&binned.to_string());
    Ok(s)
}

pub fn cmd_report(args: &ReportArgs) -> Result<String, CliError> {
    let log = io::read_event_log(&args.log)?;
    let text = report_text(&log, args.alpha, args.bin_width_ns)?;
    if let Some(out) = &args.out {
        io::write_atomic(out, text.as_bytes())?;
    }
    Ok(text)
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Audit(a) => cmd_audit(a),
        Command::CloneVerify(a) => cmd_clone_verify(a),
        Command::LayoutCheck(a) => cmd_layout_check(a),
        Command::VacuumCheck(a) => cmd_vacuum_check(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `args`, runs the command and returns the exit code. Normal
/// output goes to `out`, diagnostics to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let target: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let _ = write!(out, "{text}");
            EXIT_OK
        }
        Err(CliError::CheckFailed(text)) => {
            let _ = write!(out, "{text}");
            EXIT_CHECK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
