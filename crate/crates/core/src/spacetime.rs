//! Lightcone predicates and experiment-layout validation.
//!
//! A layout passes when every required (choice, readout) pair is strictly
//! spacelike separated. The lightlike boundary counts as a failure.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative tolerance for the lightlike boundary.
pub const LIGHTLIKE_RTOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpacetimeError {
    #[error("layout has no event labelled {0:?}")]
    MissingLabel(String),
    #[error("event label {0:?} appears more than once")]
    DuplicateLabel(String),
    #[error("speed of light must be positive and finite, got {0}")]
    InvalidSpeed(f64),
    #[error("event {0:?} has a non-finite coordinate")]
    NonFinite(String),
    #[error("delay must be non-negative, got {0}")]
    NegativeDelay(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "A" | "a" => Some(Party::A),
            "B" | "b" => Some(Party::B),
            "C" | "c" => Some(Party::C),
            _ => None,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Party::A => "A",
            Party::B => "B",
            Party::C => "C",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeEvent {
    /// Seconds.
    pub t: f64,
    /// Meters.
    pub pos: [f64; 3],
    pub label: String,
    pub party: Party,
}

impl SpacetimeEvent {
    pub fn new(label: impl Into<String>, party: Party, t: f64, pos: [f64; 3]) -> Self {
        Self { t, pos, label: label.into(), party }
    }

    pub fn distance_to(&self, other: &SpacetimeEvent) -> f64 {
        self.pos
            .iter()
            .zip(&other.pos)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn is_finite(&self) -> bool {
        self.t.is_finite() && self.pos.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalClass {
    Timelike,
    Spacelike,
    Lightlike,
}

impl fmt::Display for IntervalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IntervalClass::Timelike => "timelike",
            IntervalClass::Spacelike => "spacelike",
            IntervalClass::Lightlike => "lightlike",
        };
        f.write_str(s)
    }
}

/// `r − c|Δt|` in meters; positive means spacelike.
pub fn separation_margin(e1: &SpacetimeEvent, e2: &SpacetimeEvent, c: f64) -> f64 {
    e1.distance_to(e2) - c * (e1.t - e2.t).abs()
}

pub fn interval_class(e1: &SpacetimeEvent, e2: &SpacetimeEvent, c: f64) -> IntervalClass {
    let r = e1.distance_to(e2);
    let ct = c * (e1.t - e2.t).abs();
    if (r - ct).abs() <= LIGHTLIKE_RTOL * r.max(ct).max(1.0) {
        IntervalClass::Lightlike
    } else if r > ct {
        IntervalClass::Spacelike
    } else {
        IntervalClass::Timelike
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub events: Vec<SpacetimeEvent>,
    pub c: f64,
    pub required_separations: Vec<(String, String)>,
}

impl LayoutConfig {
    pub fn new(
        events: Vec<SpacetimeEvent>,
        c: f64,
        required_separations: Vec<(String, String)>,
    ) -> Result<Self, SpacetimeError> {
        let layout = Self { events, c, required_separations };
        layout.check()?;
        Ok(layout)
    }

    /// Structural checks: positive `c`, unique labels, finite coordinates.
    pub fn check(&self) -> Result<(), SpacetimeError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SpacetimeError::InvalidSpeed(self.c));
        }
        let mut seen = HashSet::new();
        for e in &self.events {
            if !seen.insert(e.label.as_str()) {
                return Err(SpacetimeError::DuplicateLabel(e.label.clone()));
            }
            if !e.is_finite() {
                return Err(SpacetimeError::NonFinite(e.label.clone()));
            }
        }
        Ok(())
    }

    pub fn event(&self, label: &str) -> Option<&SpacetimeEvent> {
        self.events.iter().find(|e| e.label == label)
    }

    fn require(&self, label: &str) -> Result<&SpacetimeEvent, SpacetimeError> {
        self.event(label).ok_or_else(|| SpacetimeError::MissingLabel(label.to_string()))
    }

    /// Two-party layout on the x axis: parties at `∓half_distance`, choices at
    /// `t = 0`, readouts completed at `readout`. Requires each readout to be
    /// spacelike from the remote choice.
    pub fn chsh(half_distance: f64, readout: f64) -> Self {
        let events = vec![
            SpacetimeEvent::new("choice_a", Party::A, 0.0, [-half_distance, 0.0, 0.0]),
            SpacetimeEvent::new("choice_b", Party::B, 0.0, [half_distance, 0.0, 0.0]),
            SpacetimeEvent::new("readout_A_done", Party::A, readout, [-half_distance, 0.0, 0.0]),
            SpacetimeEvent::new("readout_B_done", Party::B, readout, [half_distance, 0.0, 0.0]),
        ];
        let required = vec![
            ("choice_b".to_string(), "readout_A_done".to_string()),
            ("choice_a".to_string(), "readout_B_done".to_string()),
        ];
        Self { events, c: SPEED_OF_LIGHT, required_separations: required }
    }

    /// The CHSH layout plus a heralding station C at the midpoint, required
    /// spacelike from both choices.
    pub fn swapping(half_distance: f64, readout: f64, herald: f64) -> Self {
        let mut layout = Self::chsh(half_distance, readout);
        layout
            .events
            .push(SpacetimeEvent::new("readout_C_done", Party::C, herald, [0.0, 0.0, 0.0]));
        layout.required_separations.push(("choice_a".into(), "readout_C_done".into()));
        layout.required_separations.push(("choice_b".into(), "readout_C_done".into()));
        layout
    }

    /// Copy with the speed of light replaced.
    pub fn with_c(&self, c: f64) -> Self {
        Self { c, ..self.clone() }
    }

    /// Copy with the listed events delayed by `delay` seconds.
    pub fn with_shifted(&self, labels: &[&str], delay: f64) -> Result<Self, SpacetimeError> {
        let mut out = self.clone();
        for label in labels {
            let idx = out
                .events
                .iter()
                .position(|e| e.label == *label)
                .ok_or_else(|| SpacetimeError::MissingLabel(label.to_string()))?;
            out.events[idx] = effective_event_shift(&out.events[idx], delay)?;
        }
        Ok(out)
    }
}

impl Default for LayoutConfig {
    /// 1.2 km baseline with readouts complete 2 µs after the choices.
    fn default() -> Self {
        Self::chsh(600.0, 2e-6)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub first: String,
    pub second: String,
    pub class: IntervalClass,
    /// `r − c|Δt|` in meters.
    pub margin_m: f64,
}

impl PairCheck {
    pub fn passes(&self) -> bool {
        self.class == IntervalClass::Spacelike
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub c: f64,
    pub checks: Vec<PairCheck>,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(PairCheck::passes)
    }

    pub fn violations(&self) -> impl Iterator<Item = &PairCheck> {
        self.checks.iter().filter(|c| !c.passes())
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "c = {} m/s", self.c)?;
        for check in &self.checks {
            writeln!(
                f,
                "{:<6} {} <-> {}: {} (margin {:.3} m)",
                if check.passes() { "ok" } else { "FAIL" },
                check.first,
                check.second,
                check.class,
                check.margin_m
            )?;
        }
        write!(f, "layout {}", if self.passes() { "passes" } else { "fails" })
    }
}

pub fn validate_layout(layout: &LayoutConfig) -> Result<ValidationReport, SpacetimeError> {
    layout.check()?;
    let checks = layout
        .required_separations
        .iter()
        .map(|(a, b)| {
            let e1 = layout.require(a)?;
            let e2 = layout.require(b)?;
            Ok(PairCheck {
                first: a.clone(),
                second: b.clone(),
                class: interval_class(e1, e2, layout.c),
                margin_m: separation_margin(e1, e2, layout.c),
            })
        })
        .collect::<Result<Vec<_>, SpacetimeError>>()?;
    Ok(ValidationReport { c: layout.c, checks })
}

/// The event as it effectively happened after a post-readout delay.
pub fn effective_event_shift(e: &SpacetimeEvent, delay: f64) -> Result<SpacetimeEvent, SpacetimeError> {
    if delay.is_nan() || delay < 0.0 {
        return Err(SpacetimeError::NegativeDelay(delay));
    }
    Ok(SpacetimeEvent { t: e.t + delay, ..e.clone() })
}

/// Smallest delay of `readout` that puts it on or inside the future
/// lightcone of `choice`: `max(0, t_choice + r/c − t_readout)`.
pub fn tamper_threshold(readout: &SpacetimeEvent, choice: &SpacetimeEvent, c: f64) -> f64 {
    (choice.t + readout.distance_to(choice) / c - readout.t).max(0.0)
}
