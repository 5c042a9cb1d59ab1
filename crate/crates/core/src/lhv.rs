//! Bell functionals and their local-realist bounds.
//!
//! The CHSH combination is `⟨A₁B₃⟩ + ⟨A₁B₄⟩ + ⟨A₂B₃⟩ − ⟨A₂B₄⟩`; the Eberhard
//! combination is `p(1₁,1₃) − p(1₁,0₄) − p(0₂,1₃) − p(1₂,1₄)` with `−1`
//! outcomes folded into `0`. Classical bounds are certified by enumerating
//! all 16 deterministic local strategies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counts::{CountsTable, Outcome, SettingPair, Subject};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LhvError {
    #[error("value {value} for {what} is outside {range}")]
    OutOfRange { what: String, value: f64, range: &'static str },
    #[error("no trials recorded for setting pair {0}")]
    InsufficientData(SettingPair),
    #[error("strategy value {0} is not in the declared outcome set")]
    InvalidStrategy(i8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    Chsh,
    Eberhard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshInput {
    correlators: [f64; 4],
}

impl ChshInput {
    /// Correlators in the order `(13, 14, 23, 24)`.
    pub fn new(e13: f64, e14: f64, e23: f64, e24: f64) -> Result<Self, LhvError> {
        let correlators = [e13, e14, e23, e24];
        for (p, &e) in SettingPair::ALL.iter().zip(&correlators) {
            if !(-1.0..=1.0).contains(&e) {
                return Err(LhvError::OutOfRange {
                    what: format!("correlator {p}"),
                    value: e,
                    range: "[-1, 1]",
                });
            }
        }
        Ok(Self { correlators })
    }

    pub fn correlator(&self, pair: SettingPair) -> f64 {
        self.correlators[pair.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EberhardInput {
    /// `p(1₁,1₃)`
    pub p11_13: f64,
    /// `p(1₁,0₄)`
    pub p10_14: f64,
    /// `p(0₂,1₃)`
    pub p01_23: f64,
    /// `p(1₂,1₄)`
    pub p11_24: f64,
}

impl EberhardInput {
    pub fn new(p11_13: f64, p10_14: f64, p01_23: f64, p11_24: f64) -> Result<Self, LhvError> {
        let names = ["p(1_1,1_3)", "p(1_1,0_4)", "p(0_2,1_3)", "p(1_2,1_4)"];
        for (name, p) in names.iter().zip([p11_13, p10_14, p01_23, p11_24]) {
            if !(0.0..=1.0).contains(&p) {
                return Err(LhvError::OutOfRange { what: name.to_string(), value: p, range: "[0, 1]" });
            }
        }
        Ok(Self { p11_13, p10_14, p01_23, p11_24 })
    }
}

pub fn chsh_value(input: &ChshInput) -> f64 {
    let [e13, e14, e23, e24] = input.correlators;
    e13 + e14 + e23 - e24
}

pub fn eberhard_value(input: &EberhardInput) -> f64 {
    input.p11_13 - input.p10_14 - input.p01_23 - input.p11_24
}

/// Sign of each pair's term in the CHSH combination.
pub fn chsh_sign(pair: SettingPair) -> i8 {
    if pair.a == 2 && pair.b == 4 {
        -1
    } else {
        1
    }
}

/// Assignment of an outcome to every setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub a1: i8,
    pub a2: i8,
    pub b3: i8,
    pub b4: i8,
}

impl DeterministicStrategy {
    pub fn new(a1: i8, a2: i8, b3: i8, b4: i8, game: Game) -> Result<Self, LhvError> {
        let allowed: &[i8] = match game {
            Game::Chsh => &[-1, 1],
            Game::Eberhard => &[0, 1],
        };
        for v in [a1, a2, b3, b4] {
            if !allowed.contains(&v) {
                return Err(LhvError::InvalidStrategy(v));
            }
        }
        Ok(Self { a1, a2, b3, b4 })
    }

    /// All 16 strategies over the game's outcome set.
    pub fn all(game: Game) -> Vec<DeterministicStrategy> {
        let values: [i8; 2] = match game {
            Game::Chsh => [-1, 1],
            Game::Eberhard => [0, 1],
        };
        let mut out = Vec::with_capacity(16);
        for &a1 in &values {
            for &a2 in &values {
                for &b3 in &values {
                    for &b4 in &values {
                        out.push(DeterministicStrategy { a1, a2, b3, b4 });
                    }
                }
            }
        }
        out
    }

    pub fn outcome_a(&self, setting: u8) -> i8 {
        if setting == 1 {
            self.a1
        } else {
            self.a2
        }
    }

    pub fn outcome_b(&self, setting: u8) -> i8 {
        if setting == 3 {
            self.b3
        } else {
            self.b4
        }
    }

    /// Value of the game's functional at this deterministic point.
    pub fn value(&self, game: Game) -> f64 {
        match game {
            Game::Chsh => {
                let e = |p: SettingPair| f64::from(self.outcome_a(p.a) * self.outcome_b(p.b));
                e(SettingPair { a: 1, b: 3 }) + e(SettingPair { a: 1, b: 4 })
                    + e(SettingPair { a: 2, b: 3 })
                    - e(SettingPair { a: 2, b: 4 })
            }
            Game::Eberhard => {
                let ind = |c: bool| if c { 1.0 } else { 0.0 };
                ind(self.a1 == 1 && self.b3 == 1)
                    - ind(self.a1 == 1 && self.b4 == 0)
                    - ind(self.a2 == 0 && self.b3 == 1)
                    - ind(self.a2 == 1 && self.b4 == 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LhvBound {
    pub value: f64,
    pub argmax: Vec<DeterministicStrategy>,
}

/// Exhaustive maximum over the 16 deterministic strategies.
pub fn lhv_bound(game: Game) -> LhvBound {
    extremum(game, 1.0)
}

/// Exhaustive minimum (the maximum of the negated functional).
pub fn lhv_min(game: Game) -> LhvBound {
    let mut b = extremum(game, -1.0);
    b.value = -b.value;
    b
}

fn extremum(game: Game, sign: f64) -> LhvBound {
    let strategies = DeterministicStrategy::all(game);
    let best = strategies
        .iter()
        .map(|s| sign * s.value(game))
        .fold(f64::NEG_INFINITY, f64::max);
    let argmax = strategies.into_iter().filter(|s| sign * s.value(game) == best).collect();
    LhvBound { value: best, argmax }
}

/// Ideal singlet correlators `−cos(φᵢ − φⱼ)` for angles `(φ₁, φ₂, φ₃, φ₄)`.
pub fn quantum_chsh_input(angles: [f64; 4]) -> ChshInput {
    let e = |i: usize, j: usize| crate::quantum::singlet_correlator(angles[i], angles[j]);
    ChshInput { correlators: [e(0, 2), e(0, 3), e(1, 2), e(1, 3)] }
}

/// Ideal singlet joint probabilities with `−1` read as `0`:
/// `p(1ᵢ,1ⱼ) = (1 − cos Δ)/4`, `p(1ᵢ,0ⱼ) = p(0ᵢ,1ⱼ) = (1 + cos Δ)/4`.
pub fn quantum_eberhard_input(angles: [f64; 4]) -> EberhardInput {
    let cos = |i: usize, j: usize| (angles[i] - angles[j]).cos();
    EberhardInput {
        p11_13: (1.0 - cos(0, 2)) / 4.0,
        p10_14: (1.0 + cos(0, 3)) / 4.0,
        p01_23: (1.0 + cos(1, 2)) / 4.0,
        p11_24: (1.0 - cos(1, 3)) / 4.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
}

/// Correlator `Ê = (N₊ − N₋)/N` of one setting pair from product counts.
///
/// `N` includes zero-product trials when present; the standard error is
/// `√((E₂ − Ê²)/N)` with `E₂ = (N₊ + N₋)/N`, which is `√((1 − Ê²)/N)` when no
/// zeros were recorded.
pub fn correlator_from_counts(counts: &CountsTable, pair: SettingPair) -> Result<Estimate, LhvError> {
    let get = |v: i8| counts.get(Subject::Product, pair, Outcome::Single(v)).unwrap_or(0) as f64;
    let (plus, minus, zero) = (get(1), get(-1), get(0));
    let n = plus + minus + zero;
    if n == 0.0 {
        return Err(LhvError::InsufficientData(pair));
    }
    let e = (plus - minus) / n;
    let second = (plus + minus) / n;
    Ok(Estimate { value: e, standard_error: ((second - e * e).max(0.0) / n).sqrt() })
}

fn joint_fraction(
    counts: &CountsTable,
    pair: SettingPair,
    want_a: i8,
    want_b: i8,
) -> Result<Estimate, LhvError> {
    // Eberhard reading: +1 → 1, everything else → 0.
    let fold = |v: i8| if v == 1 { 1 } else { 0 };
    let mut hits = 0u64;
    let mut n = 0u64;
    for a in [-1i8, 0, 1] {
        for b in [-1i8, 0, 1] {
            let c = counts.get(Subject::Joint, pair, Outcome::Pair(a, b)).unwrap_or(0);
            n += c;
            if fold(a) == want_a && fold(b) == want_b {
                hits += c;
            }
        }
    }
    if n == 0 {
        return Err(LhvError::InsufficientData(pair));
    }
    let p = hits as f64 / n as f64;
    Ok(Estimate { value: p, standard_error: (p * (1.0 - p) / n as f64).sqrt() })
}

/// Plug-in estimate of the game's value from counts, with Wald standard
/// errors combined in quadrature.
pub fn estimate_from_counts(counts: &CountsTable, game: Game) -> Result<Estimate, LhvError> {
    let terms: Vec<(f64, Estimate)> = match game {
        Game::Chsh => SettingPair::ALL
            .iter()
            .map(|&p| Ok((f64::from(chsh_sign(p)), correlator_from_counts(counts, p)?)))
            .collect::<Result<_, LhvError>>()?,
        Game::Eberhard => vec![
            (1.0, joint_fraction(counts, SettingPair { a: 1, b: 3 }, 1, 1)?),
            (-1.0, joint_fraction(counts, SettingPair { a: 1, b: 4 }, 1, 0)?),
            (-1.0, joint_fraction(counts, SettingPair { a: 2, b: 3 }, 0, 1)?),
            (-1.0, joint_fraction(counts, SettingPair { a: 2, b: 4 }, 1, 1)?),
        ],
    };
    let value = terms.iter().map(|(s, e)| s * e.value).sum();
    let var: f64 = terms.iter().map(|(_, e)| e.standard_error.powi(2)).sum();
    Ok(Estimate { value, standard_error: var.sqrt() })
}
