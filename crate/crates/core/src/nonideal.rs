//! Hardware imperfections: phase-state errors of the delay lines and finite
//! controller timing resolution, plus Monte Carlo statistics of the residual
//! sidebands they leave behind.

use log::warn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::amplitude_db;
use crate::error::{Result, TmaError};
use crate::harmonics::{coefficient, HarmonicSpectrum};
use crate::waveform::{build_ssb_schedule, phasor, wrap_unit, ModulationSchedule, TIME_TOL};

/// Multiplies state `k` by `e^{jε_k}` (`ε` in degrees). Timing is untouched.
pub fn apply_phase_errors(s: &ModulationSchedule, errors_deg: [f64; 4]) -> ModulationSchedule {
    let states = s.phase_states();
    let perturbed = std::array::from_fn(|k| states[k] * phasor(errors_deg[k].to_radians()));
    s.with_states(perturbed)
}

/// Per-element, per-state phase offsets bounded in magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseErrorModel {
    errors_deg: Vec<[f64; 4]>,
    bound_deg: f64,
}

impl PhaseErrorModel {
    pub fn new(errors_deg: Vec<[f64; 4]>, bound_deg: f64) -> Result<Self> {
        if !(bound_deg.is_finite() && bound_deg >= 0.0) {
            return Err(TmaError::InvalidPhaseErrors(format!(
                "bound {bound_deg} must be finite and non-negative"
            )));
        }
        for (n, row) in errors_deg.iter().enumerate() {
            if let Some(e) = row
                .iter()
                .find(|e| e.is_nan() || e.abs() > bound_deg * (1.0 + 1e-12))
            {
                return Err(TmaError::InvalidPhaseErrors(format!(
                    "element {n}: error {e} exceeds bound {bound_deg}"
                )));
            }
        }
        Ok(Self {
            errors_deg,
            bound_deg,
        })
    }

    /// Error-free model for `n` elements.
    pub fn ideal(n: usize) -> Self {
        Self {
            errors_deg: vec![[0.0; 4]; n],
            bound_deg: 0.0,
        }
    }

    /// Independent draws, uniform on `[−bound, bound]`, from a ChaCha8
    /// stream seeded with `seed`. Elements are drawn in order, states 1..4
    /// within an element. With `exact_reference` the 0° state carries no
    /// error (it is the reference line).
    pub fn uniform(n: usize, bound_deg: f64, seed: u64, exact_reference: bool) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let errors = (0..n)
            .map(|_| {
                let mut row = draw_errors(&mut rng, bound_deg);
                if exact_reference {
                    row[0] = 0.0;
                }
                row
            })
            .collect();
        Self::new(errors, bound_deg)
    }

    pub fn errors_deg(&self) -> &[[f64; 4]] {
        &self.errors_deg
    }

    pub fn bound_deg(&self) -> f64 {
        self.bound_deg
    }

    /// Perturbs one schedule per element.
    pub fn apply(&self, schedules: &[ModulationSchedule]) -> Result<Vec<ModulationSchedule>> {
        if schedules.len() != self.errors_deg.len() {
            return Err(TmaError::InvalidPhaseErrors(format!(
                "{} error rows for {} elements",
                self.errors_deg.len(),
                schedules.len()
            )));
        }
        Ok(schedules
            .iter()
            .zip(&self.errors_deg)
            .map(|(s, e)| apply_phase_errors(s, *e))
            .collect())
    }
}

fn draw_errors(rng: &mut ChaCha8Rng, bound_deg: f64) -> [f64; 4] {
    std::array::from_fn(|_| {
        if bound_deg > 0.0 {
            rng.gen_range(-bound_deg..=bound_deg)
        } else {
            0.0
        }
    })
}

/// Snaps `x` (in ticks) to the nearest integer, ties toward the earlier tick.
fn snap_ticks(x: f64) -> f64 {
    let k = x.floor();
    if x - k > 0.5 + 1e-9 {
        k + 1.0
    } else {
        k
    }
}

/// Snaps window starts and the on-duration to a controller clock.
///
/// Starts go to the nearest tick (ties to the earlier one). The on-duration
/// is rounded the same way, then clamped to at least one tick and at most the
/// largest whole number of ticks fitting in a quarter period, so the windows
/// cannot overlap. The spacing rules may hold only approximately afterwards;
/// [`validate_schedule`](crate::waveform::validate_schedule) reports the
/// residuals.
pub fn quantize_schedule(s: &ModulationSchedule, clock_period: f64) -> Result<ModulationSchedule> {
    let tick = clock_period / s.period();
    if !(tick.is_finite() && tick > 0.0 && tick <= 0.125 * (1.0 + TIME_TOL)) {
        return Err(TmaError::InvalidClock {
            clock: clock_period,
            period: s.period(),
        });
    }
    let per_period = 1.0 / tick;
    if (per_period - per_period.round()).abs() > 1e-9 * per_period {
        warn!("period is {per_period} clock ticks, not a whole number");
    }
    let max_ticks = (0.25 / tick + 1e-9).floor();
    let tau_ticks = snap_ticks(s.on_fraction() / tick).clamp(1.0, max_ticks);
    let starts = s
        .start_fractions()
        .map(|u| wrap_unit(snap_ticks(u / tick) * tick));
    Ok(s.with_timing(tau_ticks * tick, starts))
}

/// Level of order `h` relative to the −1st order, in dB.
pub fn residual_level_db(spec: &HarmonicSpectrum, h: i64) -> Result<f64> {
    let wanted = spec.get(-1).ok_or(TmaError::MissingOrder(-1))?;
    let other = spec.get(h).ok_or(TmaError::MissingOrder(h))?;
    residual_from(other, wanted)
}

fn residual_from(other: Complex64, wanted: Complex64) -> Result<f64> {
    if wanted.norm() < 1e-15 {
        return Err(TmaError::Degenerate("the -1st harmonic vanishes".into()));
    }
    Ok(amplitude_db(other.norm() / wanted.norm()))
}

/// Residual statistics of one harmonic order over all trials, in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub order: i64,
    pub median_db: f64,
    pub p90_db: f64,
    pub max_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub seed: u64,
    pub bound_deg: f64,
    pub trials: usize,
    pub stats: Vec<ResidualStats>,
}

/// Monte Carlo over the nominal quarter-duty staircase. See
/// [`monte_carlo_residuals_for`].
pub fn monte_carlo_residuals(
    bound_deg: f64,
    orders: &[i64],
    trials: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    let base = build_ssb_schedule(1.0, 0.25, 0.25)?;
    monte_carlo_residuals_for(&base, bound_deg, orders, trials, seed)
}

/// Draws independent per-state errors uniform on `[−bound, bound]` for each
/// trial and records the residual level of every requested order.
///
/// Trial `i` uses ChaCha8 seeded with `seed` on stream `i`, so results do not
/// depend on the order trials are evaluated in. Percentiles interpolate
/// linearly between order statistics.
pub fn monte_carlo_residuals_for(
    base: &ModulationSchedule,
    bound_deg: f64,
    orders: &[i64],
    trials: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(TmaError::Degenerate(
            "at least one trial is required".into(),
        ));
    }
    if !(bound_deg.is_finite() && bound_deg >= 0.0) {
        return Err(TmaError::InvalidPhaseErrors(format!("bound {bound_deg}")));
    }
    let mut levels: Vec<Vec<f64>> = vec![Vec::with_capacity(trials); orders.len()];
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let s = apply_phase_errors(base, draw_errors(&mut rng, bound_deg));
        let wanted = coefficient(&s, -1);
        for (slot, &h) in levels.iter_mut().zip(orders) {
            slot.push(residual_from(coefficient(&s, h), wanted)?);
        }
    }
    let stats = orders
        .iter()
        .zip(levels)
        .map(|(&order, mut v)| {
            v.sort_by(f64::total_cmp);
            ResidualStats {
                order,
                median_db: quantile(&v, 0.5),
                p90_db: quantile(&v, 0.9),
                max_db: v[v.len() - 1],
            }
        })
        .collect();
    Ok(MonteCarloReport {
        seed,
        bound_deg,
        trials,
        stats,
    })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::DB_FLOOR;
    use crate::harmonics::{spectrum_analytic, spectrum_numeric_oracle};
    use crate::waveform::{circular_residual, validate_schedule, Violation};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn ideal() -> ModulationSchedule {
        build_ssb_schedule(1.0, 0.25, 0.25).unwrap()
    }

    #[test]
    fn zero_errors_are_identity() {
        assert_eq!(apply_phase_errors(&ideal(), [0.0; 4]), ideal());
    }

    #[test]
    fn single_state_error() {
        let s = apply_phase_errors(&ideal(), [5.0, 0.0, 0.0, 0.0]);
        assert!(validate_schedule(&s).is_empty());
        let a0 = coefficient(&s, 0).norm();
        // (1/4)|e^{j5°} − 1| = sin(2.5°)/2
        assert_abs_diff_eq!(a0, (2.5f64).to_radians().sin() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a0, 0.021_81, epsilon = 1e-5);
        let spec = spectrum_analytic(&s, -3, 3).unwrap();
        let r = residual_level_db(&spec, 0).unwrap();
        assert_abs_diff_eq!(r, -32.31, epsilon = 0.01);
    }

    #[test]
    fn adversarial_errors() {
        let s = apply_phase_errors(&ideal(), [5.0, 5.0, -5.0, -5.0]);
        let a0 = coefficient(&s, 0).norm();
        let closed = 2.0 * 2f64.sqrt() * (5f64).to_radians().sin() / 4.0;
        assert_abs_diff_eq!(a0, closed, epsilon = 1e-12);
        assert_abs_diff_eq!(a0, 0.061_628, epsilon = 1e-6);
        assert!((spectrum_numeric_oracle(&s, 0, 1_000_000).norm() - a0).abs() < 1e-4);
        let spec = spectrum_analytic(&s, -1, 0).unwrap();
        let r = residual_level_db(&spec, 0).unwrap();
        // |A_-1| shrinks by cos 5°, so the level is 20·log10(π tan 5°/4)
        assert_abs_diff_eq!(
            r,
            20.0 * (PI * (5f64).to_radians().tan() / 4.0).log10(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(r, -23.26, epsilon = 0.01);
    }

    #[test]
    fn first_order_scaling() {
        for eps in [1.0f64, 2.0, 5.0] {
            let s = apply_phase_errors(&ideal(), [0.0, eps, 0.0, 0.0]);
            let want = 2.0 * (eps.to_radians() / 2.0).sin() / 4.0;
            assert_abs_diff_eq!(coefficient(&s, 0).norm(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn residual_errors_and_floor() {
        let spec = spectrum_analytic(&ideal(), -2, 2).unwrap();
        assert_eq!(residual_level_db(&spec, 0).unwrap(), DB_FLOOR);
        assert_eq!(residual_level_db(&spec, 5), Err(TmaError::MissingOrder(5)));
        let no_main = spectrum_analytic(&ideal(), 0, 2).unwrap();
        assert_eq!(
            residual_level_db(&no_main, 0),
            Err(TmaError::MissingOrder(-1))
        );
        let dead = HarmonicSpectrum::new(1.0, -1, vec![Complex64::new(0.0, 0.0); 2]);
        assert!(matches!(
            residual_level_db(&dead, 0),
            Err(TmaError::Degenerate(_))
        ));
    }

    #[test]
    fn quantize_examples() {
        let s = build_ssb_schedule(1.0, 0.25, 0.678_606_195).unwrap();
        let q = quantize_schedule(&s, 0.01).unwrap();
        assert_abs_diff_eq!(q.start_fractions()[0], 0.68, epsilon = 1e-12);
        assert!(validate_schedule(&q).is_empty());
        let dphi = (coefficient(&q, -1) / coefficient(&s, -1))
            .arg()
            .to_degrees();
        assert_abs_diff_eq!(dphi, 360.0 * (0.68 - 0.678_606_195), epsilon = 1e-6);
        assert_abs_diff_eq!(dphi, 0.50, epsilon = 0.01);

        let aligned = build_ssb_schedule(1.0, 0.25, 0.5).unwrap();
        assert_eq!(quantize_schedule(&aligned, 0.25 / 2.0).unwrap(), aligned);

        let short = build_ssb_schedule(1.0, 0.001, 0.5).unwrap();
        assert_abs_diff_eq!(quantize_schedule(&short, 0.01).unwrap().on_fraction(), 0.01);
    }

    #[test]
    fn quantize_ties_round_down() {
        let s = build_ssb_schedule(1.0, 0.1, 0.005).unwrap();
        let q = quantize_schedule(&s, 0.01).unwrap();
        assert_abs_diff_eq!(q.start_fractions()[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quantize_rejects_bad_clock() {
        assert!(matches!(
            quantize_schedule(&ideal(), 0.2),
            Err(TmaError::InvalidClock { .. })
        ));
        assert!(quantize_schedule(&ideal(), 0.0).is_err());
        assert!(quantize_schedule(&ideal(), -0.01).is_err());
    }

    #[test]
    fn quantize_uneven_clock_reports_residuals() {
        let s = build_ssb_schedule(1.0, 0.25, 0.1).unwrap();
        let q = quantize_schedule(&s, 0.07).unwrap();
        assert!(q.on_fraction() <= 0.25);
        let v = validate_schedule(&q);
        assert!(v.iter().all(|x| !x.is_structural()), "{v:?}");
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::SsbConstraint { .. })));
    }

    #[test]
    fn quantization_phase_bound() {
        for k in [64.0, 100.0, 256.0] {
            for i in 0..50 {
                let t1 = (i as f64 * 0.618_033_988_75).fract();
                let s = build_ssb_schedule(1.0, 0.25, t1).unwrap();
                let q = quantize_schedule(&s, 1.0 / k).unwrap();
                let err = circular_residual(
                    (coefficient(&q, -1) / coefficient(&s, -1)).arg() / (2.0 * PI),
                );
                assert!(err.abs() * 360.0 <= 360.0 / (2.0 * k) + 1e-9);
            }
        }
    }

    #[test]
    fn model_validation_and_draws() {
        assert!(PhaseErrorModel::new(vec![[6.0, 0.0, 0.0, 0.0]], 5.0).is_err());
        assert!(PhaseErrorModel::new(vec![[5.0, -5.0, 0.0, 0.0]], 5.0).is_ok());
        assert!(PhaseErrorModel::new(vec![], -1.0).is_err());
        let m = PhaseErrorModel::uniform(8, 5.0, 7, false).unwrap();
        assert_eq!(m.errors_deg().len(), 8);
        assert!(m.errors_deg().iter().flatten().all(|e| e.abs() <= 5.0));
        assert_eq!(m, PhaseErrorModel::uniform(8, 5.0, 7, false).unwrap());
        let r = PhaseErrorModel::uniform(8, 5.0, 7, true).unwrap();
        assert!(r.errors_deg().iter().all(|row| row[0] == 0.0));
        assert!(m.apply(&[ideal()]).is_err());
        assert_eq!(
            PhaseErrorModel::ideal(2)
                .apply(&[ideal(), ideal()])
                .unwrap(),
            vec![ideal(); 2]
        );
    }

    #[test]
    fn monte_carlo_zero_bound_hits_floor() {
        let rep = monte_carlo_residuals(0.0, &[0, 2, -2], 20, 3).unwrap();
        for st in &rep.stats {
            assert_eq!(
                (st.median_db, st.p90_db, st.max_db),
                (DB_FLOOR, DB_FLOOR, DB_FLOOR)
            );
        }
        assert!(monte_carlo_residuals(1.0, &[0], 0, 3).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = monte_carlo_residuals(5.0, &[0, 2], 100, 11).unwrap();
        let b = monte_carlo_residuals(5.0, &[0, 2], 100, 11).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_residuals(5.0, &[0, 2], 100, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn monte_carlo_decade_scaling() {
        let med = |b: f64| monte_carlo_residuals(b, &[0], 400, 5).unwrap().stats[0].median_db;
        let (m5, m1, m01) = (med(5.0), med(1.0), med(0.1));
        assert!(m5 > m1 && m1 > m01);
        // linear regime: each 10x in bound is 20 dB
        assert_abs_diff_eq!(m1 - m01, 20.0, epsilon = 0.1);
        assert_abs_diff_eq!(m5 - m1, 20.0 * 5f64.log10(), epsilon = 0.1);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.9), 7.0);
    }
}
