//! The periodic four-state switching waveform.
//!
//! A [`ModulationSchedule`] describes one element: four rectangular windows of
//! equal length `τ` per modulation period `T_p`, each carrying one complex
//! phase state. Between windows the module is open and the waveform is zero.
//!
//! Times are stored internally as fractions of the period in `[0, 1)`; the
//! public accessors convert back to seconds.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmaError};

/// Tolerance on time comparisons, as a fraction of the period.
pub const TIME_TOL: f64 = 1e-9;

/// Tolerance on the unit magnitude of a phase state.
pub const UNIT_TOL: f64 = 1e-12;

/// Window offsets closer than this (in period fractions) to a window start
/// are treated as lying on that start.
const EDGE_EPS: f64 = 1e-12;

/// Nominal 2-bit phase states `(1, e^{jπ/2}, −1, e^{j3π/2})`.
pub const NOMINAL_STATES: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// Reduces a period fraction into `[0, 1)`, mapping `-0.0` to `0.0`.
pub(crate) fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can return exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r + 0.0
    }
}

/// Signed circular difference folded into `[-0.5, 0.5]`.
pub(crate) fn circular_residual(x: f64) -> f64 {
    x - x.round()
}

/// One element's periodic switching plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationSchedule {
    period: f64,
    on_fraction: f64,
    starts: [f64; 4],
    states: [Complex64; 4],
}

impl ModulationSchedule {
    /// Builds a schedule from raw parts in seconds without checking the
    /// window invariants; use [`validate_schedule`] for that. Only the period
    /// is checked since every stored time is relative to it.
    pub fn from_parts(
        period: f64,
        on_duration: f64,
        window_starts: [f64; 4],
        phase_states: [Complex64; 4],
    ) -> Result<Self> {
        check_period(period)?;
        Self::from_fractions(
            period,
            on_duration / period,
            window_starts.map(|t| t / period),
            phase_states,
        )
    }

    /// Same as [`from_parts`](Self::from_parts) with times given as
    /// fractions of the period.
    pub fn from_fractions(
        period: f64,
        on_fraction: f64,
        start_fractions: [f64; 4],
        phase_states: [Complex64; 4],
    ) -> Result<Self> {
        check_period(period)?;
        if !on_fraction.is_finite() || start_fractions.iter().any(|s| !s.is_finite()) {
            return Err(TmaError::Degenerate("non-finite schedule timing".into()));
        }
        Ok(Self {
            period,
            on_fraction,
            starts: start_fractions.map(wrap_unit),
            states: phase_states,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mod_freq(&self) -> f64 {
        1.0 / self.period
    }

    pub fn on_duration(&self) -> f64 {
        self.on_fraction * self.period
    }

    pub fn on_fraction(&self) -> f64 {
        self.on_fraction
    }

    /// Window starts `(t_1, t_2, t_3, t_4)` in seconds, each in `[0, T_p)`.
    pub fn window_starts(&self) -> [f64; 4] {
        self.starts.map(|s| s * self.period)
    }

    pub fn start_fractions(&self) -> [f64; 4] {
        self.starts
    }

    pub fn phase_states(&self) -> [Complex64; 4] {
        self.states
    }

    /// Copy of this schedule carrying different phase states.
    pub fn with_states(&self, states: [Complex64; 4]) -> Self {
        Self { states, ..*self }
    }

    /// Copy of this schedule with new timing (fractions of the period).
    pub(crate) fn with_timing(&self, on_fraction: f64, starts: [f64; 4]) -> Self {
        Self {
            on_fraction,
            starts: starts.map(wrap_unit),
            ..*self
        }
    }

    /// Waveform value at `t` seconds. See [`evaluate_waveform`].
    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.evaluate_fraction(t / self.period)
    }

    /// Waveform value at a time given in periods.
    pub fn evaluate_fraction(&self, u: f64) -> Complex64 {
        let u = wrap_unit(u);
        let mut best: Option<(f64, Complex64)> = None;
        for (start, state) in self.starts.iter().zip(self.states) {
            let mut offset = wrap_unit(u - start);
            if offset > 1.0 - EDGE_EPS {
                offset = 0.0;
            }
            if offset < self.on_fraction && best.is_none_or(|(b, _)| offset < b) {
                best = Some((offset, state));
            }
        }
        best.map_or(Complex64::new(0.0, 0.0), |(_, c)| c)
    }

    /// Advances all window starts by `delta` seconds.
    pub fn shifted(&self, delta: f64) -> Self {
        let d = delta / self.period;
        Self {
            starts: self.starts.map(|s| wrap_unit(s + d)),
            ..*self
        }
    }
}

fn check_period(period: f64) -> Result<()> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(TmaError::InvalidPeriod(period))
    }
}

pub(crate) fn check_duty(on_fraction: f64, max: f64) -> Result<()> {
    if on_fraction > 0.0 && on_fraction <= max * (1.0 + TIME_TOL) {
        Ok(())
    } else {
        Err(TmaError::InvalidDuty {
            fraction: on_fraction,
            max,
        })
    }
}

/// Window starts (fractions) of an SSB staircase whose first window opens at
/// `t1`: `t_2 = t_1 − 1/4`, `t_3 = t_1 + 1/2`, `t_4 = t_1 + 1/4`.
pub(crate) fn ssb_start_fractions(t1: f64) -> [f64; 4] {
    [t1, t1 - 0.25, t1 + 0.5, t1 + 0.25].map(wrap_unit)
}

/// Constructs the SSB-constrained schedule with nominal phase states.
///
/// `t1` is the start of the window carrying state `1`; the remaining starts
/// follow from the half-period and quarter-period spacing rules.
pub fn build_ssb_schedule(period: f64, on_duration: f64, t1: f64) -> Result<ModulationSchedule> {
    check_period(period)?;
    let on_fraction = on_duration / period;
    check_duty(on_fraction, 0.25)?;
    if !t1.is_finite() {
        return Err(TmaError::Degenerate(format!("non-finite t1 {t1}")));
    }
    ModulationSchedule::from_fractions(
        period,
        on_fraction.min(0.25),
        ssb_start_fractions(t1 / period),
        NOMINAL_STATES,
    )
}

/// Returns `c_k` when `t` (taken modulo `T_p`) falls in window `k`, zero
/// otherwise. Windows are half-open `[t_k, t_k + τ)`, so an instant shared by
/// two windows belongs to the later one.
pub fn evaluate_waveform(s: &ModulationSchedule, t: f64) -> Complex64 {
    s.evaluate(t)
}

pub fn shift_schedule(s: &ModulationSchedule, delta: f64) -> ModulationSchedule {
    s.shifted(delta)
}

/// A failed schedule invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// `τ/T_p` outside `(0, 1/4]`.
    Duty { on_fraction: f64 },
    /// Windows `first` and `second` (0-based) intersect modulo the period.
    Overlap {
        first: usize,
        second: usize,
        gap_fraction: f64,
    },
    /// Phase state `index` does not have unit magnitude.
    NonUnitState { index: usize, magnitude: f64 },
    /// One of the SSB spacing rules does not hold; `residual` is the
    /// deviation in period fractions.
    SsbConstraint { constraint: SsbRule, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SsbRule {
    /// `t_3 − t_1 ≡ T_p/2`
    ThirdMinusFirst,
    /// `t_4 − t_2 ≡ T_p/2`
    FourthMinusSecond,
    /// `t_1 − t_2 ≡ T_p/4`
    FirstMinusSecond,
}

impl SsbRule {
    fn describe(self) -> &'static str {
        match self {
            SsbRule::ThirdMinusFirst => "t3 - t1 = T/2",
            SsbRule::FourthMinusSecond => "t4 - t2 = T/2",
            SsbRule::FirstMinusSecond => "t1 - t2 = T/4",
        }
    }
}

impl Violation {
    /// Structural violations make the waveform ill-defined (overlapping or
    /// empty windows); the others only mean the schedule is not an ideal SSB
    /// staircase.
    pub fn is_structural(&self) -> bool {
        matches!(self, Violation::Duty { .. } | Violation::Overlap { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Duty { on_fraction } => {
                write!(f, "duty: tau/T = {on_fraction} outside (0, 0.25]")
            }
            Violation::Overlap {
                first,
                second,
                gap_fraction,
            } => write!(
                f,
                "overlap: windows {} and {} are {gap_fraction} T apart",
                first + 1,
                second + 1
            ),
            Violation::NonUnitState { index, magnitude } => {
                write!(f, "unit state: |c{}| = {magnitude}", index + 1)
            }
            Violation::SsbConstraint {
                constraint,
                residual,
            } => write!(
                f,
                "SSB constraint: {} off by {residual} T",
                constraint.describe()
            ),
        }
    }
}

/// Checks every schedule invariant and lists the ones that fail.
pub fn validate_schedule(s: &ModulationSchedule) -> Vec<Violation> {
    let mut out = Vec::new();
    let d = s.on_fraction;
    if check_duty(d, 0.25).is_err() {
        out.push(Violation::Duty { on_fraction: d });
    }
    let st = s.starts;
    for i in 0..4 {
        for j in i + 1..4 {
            let gap = wrap_unit(st[j] - st[i]);
            let gap = gap.min(1.0 - gap);
            if gap < d - TIME_TOL {
                out.push(Violation::Overlap {
                    first: i,
                    second: j,
                    gap_fraction: gap,
                });
            }
        }
    }
    for (index, c) in s.states.iter().enumerate() {
        let magnitude = c.norm();
        if (magnitude - 1.0).abs() > UNIT_TOL {
            out.push(Violation::NonUnitState { index, magnitude });
        }
    }
    let rules = [
        (SsbRule::ThirdMinusFirst, st[2] - st[0] - 0.5),
        (SsbRule::FourthMinusSecond, st[3] - st[1] - 0.5),
        (SsbRule::FirstMinusSecond, st[0] - st[1] - 0.25),
    ];
    for (constraint, raw) in rules {
        let residual = circular_residual(raw);
        if residual.abs() > TIME_TOL {
            out.push(Violation::SsbConstraint {
                constraint,
                residual,
            });
        }
    }
    out
}

/// Rejects schedules whose windows are structurally ill-formed.
pub(crate) fn require_structural(s: &ModulationSchedule) -> Result<()> {
    let bad: Vec<_> = validate_schedule(s)
        .into_iter()
        .filter(Violation::is_structural)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(TmaError::InvalidSchedule(bad))
    }
}

/// Unit phasor `e^{jφ}`.
pub(crate) fn phasor(phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi)
}
