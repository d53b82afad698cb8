//! Uniform linear array of time-modulated elements.
//!
//! Every harmonic is radiated at the carrier wavelength; the `h·f_p` offset
//! changes the electrical spacing by `f_p/f_c` (under 0.1% for 1 MHz on
//! 1.16 GHz) and is ignored. Elements are isotropic with no coupling.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmaError};
use crate::harmonics::coefficient;
use crate::waveform::{
    build_ssb_schedule, phasor, require_structural, wrap_unit, ModulationSchedule,
};

/// dB value reported for linear ratios below [`LINEAR_FLOOR`].
pub const DB_FLOOR: f64 = -240.0;

pub const LINEAR_FLOOR: f64 = 1e-12;

/// `20·log10(ratio)`, floored at [`DB_FLOOR`].
pub fn amplitude_db(ratio: f64) -> f64 {
    if ratio < LINEAR_FLOOR {
        DB_FLOOR
    } else {
        (20.0 * ratio.log10()).max(DB_FLOOR)
    }
}

/// Array geometry, frequencies and per-element schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    spacing: f64,
    carrier_freq: f64,
    schedules: Vec<ModulationSchedule>,
}

impl ArrayConfig {
    /// `spacing` is in carrier wavelengths. All schedules must share the same
    /// period and on-duration.
    pub fn new(
        spacing: f64,
        carrier_freq: f64,
        schedules: Vec<ModulationSchedule>,
    ) -> Result<Self> {
        let Some(first) = schedules.first() else {
            return Err(TmaError::InvalidConfig(
                "array needs at least one element".into(),
            ));
        };
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(TmaError::InvalidConfig(format!(
                "spacing {spacing} must be positive"
            )));
        }
        if !(carrier_freq.is_finite() && carrier_freq > 0.0) {
            return Err(TmaError::InvalidConfig(format!(
                "carrier frequency {carrier_freq} must be positive"
            )));
        }
        let mod_freq = first.mod_freq();
        if mod_freq >= carrier_freq {
            return Err(TmaError::InvalidConfig(format!(
                "modulation frequency {mod_freq} Hz must be below the carrier {carrier_freq} Hz"
            )));
        }
        if mod_freq / carrier_freq > 0.01 {
            warn!(
                "f_p/f_c = {:.4}: harmonics evaluated at the carrier wavelength are inaccurate",
                mod_freq / carrier_freq
            );
        }
        for (n, s) in schedules.iter().enumerate() {
            let same_period = ((s.period() - first.period()) / first.period()).abs() <= 1e-12;
            let same_tau = (s.on_fraction() - first.on_fraction()).abs() <= 1e-12;
            if !(same_period && same_tau) {
                return Err(TmaError::InvalidConfig(format!(
                    "element {n} timing differs from element 0"
                )));
            }
            require_structural(s)?;
        }
        Ok(Self {
            spacing,
            carrier_freq,
            schedules,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.schedules.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn mod_freq(&self) -> f64 {
        self.schedules[0].mod_freq()
    }

    pub fn schedules(&self) -> &[ModulationSchedule] {
        &self.schedules
    }

    /// Same geometry with different schedules.
    pub fn with_schedules(&self, schedules: Vec<ModulationSchedule>) -> Result<Self> {
        Self::new(self.spacing, self.carrier_freq, schedules)
    }

    /// `A_{h,n}` for every element.
    pub fn element_coefficients(&self, h: i64) -> Vec<Complex64> {
        self.schedules.iter().map(|s| coefficient(s, h)).collect()
    }
}

/// Per-element schedules that point the −1st-harmonic beam at `steer_deg`.
///
/// Element `n` opens its first window at `t_{1,n} = (−n·d·sin θ_0) mod 1`
/// periods. The −1st coefficient has phase `2π t_1/T_p + π τ/T_p`, so this
/// cancels the geometric phase `2π n d sin θ_0` at the steer angle.
pub fn synthesize_steering(
    n_elements: usize,
    spacing: f64,
    period: f64,
    on_duration: f64,
    steer_deg: f64,
) -> Result<Vec<ModulationSchedule>> {
    check_angle(steer_deg)?;
    if n_elements == 0 {
        return Err(TmaError::InvalidConfig(
            "array needs at least one element".into(),
        ));
    }
    let progression = spacing * steer_deg.to_radians().sin();
    (0..n_elements)
        .map(|n| {
            let t1 = wrap_unit(-(n as f64) * progression);
            build_ssb_schedule(period, on_duration, t1 * period)
        })
        .collect()
}

fn check_angle(deg: f64) -> Result<()> {
    if deg.is_finite() && deg.abs() < 90.0 {
        Ok(())
    } else {
        Err(TmaError::InvalidAngle(deg))
    }
}

/// Geometric phase weights `e^{j2π d n sin θ}`.
fn steering_vector(n: usize, spacing: f64, theta_deg: f64) -> impl Iterator<Item = Complex64> {
    let step = spacing * theta_deg.to_radians().sin();
    (0..n).map(move |k| phasor(2.0 * PI * (k as f64 * step).rem_euclid(1.0)))
}

fn combine(coeffs: &[Complex64], spacing: f64, theta_deg: f64) -> Complex64 {
    coeffs
        .iter()
        .zip(steering_vector(coeffs.len(), spacing, theta_deg))
        .map(|(a, w)| a * w)
        .sum()
}

/// `Σ_n A_{h,n} e^{j2π d n sin θ}` at order `h`.
pub fn array_factor(cfg: &ArrayConfig, h: i64, theta_deg: f64) -> Complex64 {
    combine(&cfg.element_coefficients(h), cfg.spacing, theta_deg)
}

/// Array factor sampled over an angle grid at one harmonic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCut {
    pub harmonic: i64,
    pub angles: Vec<f64>,
    pub values: Vec<Complex64>,
    /// `20·log10(|value|/ref)`, `ref` the peak magnitude of the −1st-harmonic
    /// cut on the same grid.
    pub power_db: Vec<f64>,
}

/// Evenly spaced angles `from, from + step, …` up to and including `to`
/// (within a millionth of a step).
pub fn angle_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && from.is_finite() && to.is_finite()) || from > to {
        return Err(TmaError::InvalidGrid(format!(
            "from {from}, to {to}, step {step}"
        )));
    }
    let count = ((to - from) / step + 1e-6).floor() as usize + 1;
    Ok((0..count)
        .map(|i| {
            let a = from + i as f64 * step;
            // snap to 1e-9 deg so grids built from decimal steps hit 0 exactly
            (a * 1e9).round() / 1e9 + 0.0
        })
        .collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(TmaError::EmptyGrid);
    }
    if grid.iter().any(|a| !(-90.0..=90.0).contains(a)) {
        return Err(TmaError::InvalidGrid("angles must lie in [-90, 90]".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TmaError::InvalidGrid(
            "angles must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Samples the order-`h` array factor on `grid` (degrees).
pub fn pattern_cut(cfg: &ArrayConfig, h: i64, grid: &[f64]) -> Result<PatternCut> {
    check_grid(grid)?;
    let coeffs = cfg.element_coefficients(h);
    let values: Vec<Complex64> = grid
        .iter()
        .map(|&th| combine(&coeffs, cfg.spacing, th))
        .collect();
    let reference = if h == -1 {
        max_magnitude(&values)
    } else {
        let main = cfg.element_coefficients(-1);
        grid.iter()
            .map(|&th| combine(&main, cfg.spacing, th).norm())
            .fold(0.0, f64::max)
    };
    if reference < 1e-300 {
        return Err(TmaError::Degenerate(
            "the -1st harmonic vanishes on the whole grid".into(),
        ));
    }
    let power_db = values
        .iter()
        .map(|v| amplitude_db(v.norm() / reference))
        .collect();
    Ok(PatternCut {
        harmonic: h,
        angles: grid.to_vec(),
        values,
        power_db,
    })
}

fn max_magnitude(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Level of each order at angle `theta_deg`, in dB relative to the −1st
/// order. Suppressed orders sit at [`DB_FLOOR`].
pub fn power_spectrum_at(
    cfg: &ArrayConfig,
    theta_deg: f64,
    h_min: i64,
    h_max: i64,
) -> Result<Vec<(i64, f64)>> {
    if h_min > h_max {
        return Err(TmaError::InvalidRange { h_min, h_max });
    }
    let reference = array_factor(cfg, -1, theta_deg).norm();
    if reference < 1e-15 {
        return Err(TmaError::Degenerate(format!(
            "the -1st harmonic is nulled at {theta_deg} deg"
        )));
    }
    Ok((h_min..=h_max)
        .map(|h| {
            (
                h,
                amplitude_db(array_factor(cfg, h, theta_deg).norm() / reference),
            )
        })
        .collect())
}

/// Summary figures of one pattern cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamMetrics {
    pub peak_angle: f64,
    pub peak_db: f64,
    /// Highest level outside the main lobe, [`DB_FLOOR`] if the main lobe
    /// covers the whole cut.
    pub max_sidelobe_db: f64,
    pub beamwidth_3db: f64,
}

/// Peak, sidelobe and −3 dB beamwidth of a cut.
///
/// The main lobe extends from the peak to the first local minimum on each
/// side. Sidelobe and beamwidth levels are relative to the peak.
pub fn beam_metrics(cut: &PatternCut) -> Result<BeamMetrics> {
    let p = &cut.power_db;
    let a = &cut.angles;
    if p.len() < 3 || p.len() != a.len() {
        return Err(TmaError::Degenerate("cut needs at least 3 samples".into()));
    }
    let (peak, peak_db) =
        p.iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    let low = p.iter().copied().fold(f64::INFINITY, f64::min);
    if peak_db - low < 1e-9 {
        return Err(TmaError::Degenerate("pattern is flat".into()));
    }

    let mut left = peak;
    while left > 0 && p[left - 1] <= p[left] {
        left -= 1;
    }
    let mut right = peak;
    while right + 1 < p.len() && p[right + 1] <= p[right] {
        right += 1;
    }
    let max_sidelobe_db = p[..left]
        .iter()
        .chain(&p[right + 1..])
        .map(|v| v - peak_db)
        .fold(DB_FLOOR, f64::max);

    let half = peak_db - 3.0;
    let crossing = |outer: usize, inner: usize| -> f64 {
        let (pa, pb) = (p[outer], p[inner]);
        a[outer] + (a[inner] - a[outer]) * (half - pa) / (pb - pa)
    };
    let lo = (1..=peak)
        .rev()
        .find(|&i| p[i - 1] < half)
        .map(|i| crossing(i - 1, i));
    let hi = (peak..p.len() - 1)
        .find(|&i| p[i + 1] < half)
        .map(|i| crossing(i + 1, i));
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return Err(TmaError::Degenerate(
            "main lobe does not fall 3 dB on both sides within the cut".into(),
        ));
    };

    Ok(BeamMetrics {
        peak_angle: a[peak],
        peak_db,
        max_sidelobe_db,
        beamwidth_3db: hi - lo,
    })
}
