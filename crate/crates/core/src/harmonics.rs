//! Fourier analysis of the switching waveform.
//!
//! Coefficients use the analysis convention
//! `A_h = (1/T_p) ∫ U(t) e^{−j2π h f_p t} dt`, so a descending phase staircase
//! puts its power at `h = −1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmaError};
use crate::waveform::{check_duty, phasor, require_structural, ModulationSchedule};

/// Below this duty fraction the insertion loss is reported as `-inf`.
pub const MIN_DUTY_FOR_LOSS: f64 = 1e-12;

/// Default sample count for [`spectrum_numeric_oracle`].
pub const DEFAULT_ORACLE_SAMPLES: usize = 1_000_000;

/// Unnormalized sinc, `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        // second-order Taylor term keeps full precision near 0
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Coefficient of one pulse with everything expressed in period fractions.
pub(crate) fn pulse_term(start: f64, duty: f64, state: Complex64, h: i64) -> Complex64 {
    let hf = h as f64;
    let envelope = duty * sinc(PI * hf * duty);
    // reduce the phase argument mod 2 before scaling by π to keep precision at large h
    let turns = (hf * (2.0 * start + duty)).rem_euclid(2.0);
    state * envelope * phasor(-PI * turns)
}

/// Fourier coefficient at order `h` of a single rectangular pulse of height
/// `state` occupying `[start, start + τ)` once per period.
///
/// Equals `state · (τ/T_p) · sinc(π h τ/T_p) · e^{−jπ h (2·start + τ)/T_p}`.
pub fn pulse_coefficient(
    start: f64,
    on_duration: f64,
    period: f64,
    state: Complex64,
    h: i64,
) -> Result<Complex64> {
    if !(period.is_finite() && period > 0.0) {
        return Err(TmaError::InvalidPeriod(period));
    }
    let duty = on_duration / period;
    check_duty(duty, 1.0)?;
    Ok(pulse_term(start / period, duty, state, h))
}

/// Fourier coefficients over a contiguous range of harmonic orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpectrum {
    mod_freq: f64,
    h_min: i64,
    coefficients: Vec<Complex64>,
}

impl HarmonicSpectrum {
    pub fn new(mod_freq: f64, h_min: i64, coefficients: Vec<Complex64>) -> Self {
        Self {
            mod_freq,
            h_min,
            coefficients,
        }
    }

    pub fn mod_freq(&self) -> f64 {
        self.mod_freq
    }

    pub fn h_min(&self) -> i64 {
        self.h_min
    }

    pub fn h_max(&self) -> i64 {
        self.h_min + self.coefficients.len() as i64 - 1
    }

    pub fn get(&self, h: i64) -> Option<Complex64> {
        let idx = usize::try_from(h.checked_sub(self.h_min)?).ok()?;
        self.coefficients.get(idx).copied()
    }

    /// `(order, coefficient)` pairs in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        (self.h_min..).zip(self.coefficients.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `Σ |A_h|²` over the stored orders.
    pub fn power(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Exact coefficient at order `h`: the sum of the four pulse terms.
pub fn coefficient(s: &ModulationSchedule, h: i64) -> Complex64 {
    let duty = s.on_fraction();
    s.start_fractions()
        .iter()
        .zip(s.phase_states())
        .map(|(&start, state)| pulse_term(start, duty, state, h))
        .sum()
}

/// Analytic spectrum of any structurally valid schedule, phase states
/// arbitrary.
pub fn spectrum_analytic(
    s: &ModulationSchedule,
    h_min: i64,
    h_max: i64,
) -> Result<HarmonicSpectrum> {
    if h_min > h_max {
        return Err(TmaError::InvalidRange { h_min, h_max });
    }
    require_structural(s)?;
    let coefficients = (h_min..=h_max).map(|h| coefficient(s, h)).collect();
    Ok(HarmonicSpectrum::new(s.mod_freq(), h_min, coefficients))
}

/// Closed-form coefficient of the ideal SSB staircase.
///
/// `A_h = F · e^{−jπ h f_p (2 t_1 + τ)} · (e^{jπ(1+h)/2} + 1)` with
/// `F = (2/(hπ)) · sin(hπ τ f_p) · p_h`, where `p_h` is 1 for odd `h` and 0
/// for even `h`. Zero at `h = 0`.
pub fn coefficient_closed_form(
    h: i64,
    t1: f64,
    on_duration: f64,
    period: f64,
) -> Result<Complex64> {
    if !(period.is_finite() && period > 0.0) {
        return Err(TmaError::InvalidPeriod(period));
    }
    let duty = on_duration / period;
    check_duty(duty, 0.25)?;
    if h % 2 == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let hf = h as f64;
    let f = 2.0 / (hf * PI) * (hf * PI * duty).sin();
    let turns = (hf * (2.0 * t1 / period + duty)).rem_euclid(2.0);
    let pair = phasor(PI * (1.0 + hf) / 2.0) + 1.0;
    Ok(f * phasor(-PI * turns) * pair)
}

/// Midpoint Riemann sum of `(1/T_p) ∫₀^{T_p} U(t) e^{−j2π h f_p t} dt` with
/// `samples` points.
///
/// The waveform is only ever sampled through
/// [`ModulationSchedule::evaluate_fraction`]. Because `U` is piecewise
/// constant, consecutive equal samples are grouped into runs and each run's
/// phasor sum is evaluated as a finite geometric series, which gives the
/// same value as the sample-by-sample sum without its accumulated rounding.
pub fn spectrum_numeric_oracle(s: &ModulationSchedule, h: i64, samples: usize) -> Complex64 {
    NumericOracle::sample(s, samples).coefficient(h)
}

/// Sampled waveform, reusable across harmonic orders.
#[derive(Debug, Clone)]
pub struct NumericOracle {
    samples: usize,
    runs: Vec<(usize, usize, Complex64)>,
}

impl NumericOracle {
    pub fn sample(s: &ModulationSchedule, samples: usize) -> Self {
        assert!(samples > 0, "oracle needs at least one sample");
        let n = samples as f64;
        let mut runs: Vec<(usize, usize, Complex64)> = Vec::new();
        for i in 0..samples {
            let v = s.evaluate_fraction((i as f64 + 0.5) / n);
            match runs.last_mut() {
                Some((_, len, value)) if *value == v => *len += 1,
                _ => runs.push((i, 1, v)),
            }
        }
        runs.retain(|r| r.2 != Complex64::new(0.0, 0.0));
        Self { samples, runs }
    }

    pub fn coefficient(&self, h: i64) -> Complex64 {
        let n = self.samples as i128;
        let h = h as i128;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(first, len, value) in &self.runs {
            // sample i sits at (i + 1/2)/n periods: phase −π·h(2i+1)/n
            let head = pi_multiple(h * (2 * first as i128 + 1), n);
            acc += value * phasor(-PI * head) * geometric_sum(h, n, len as i128);
        }
        acc / self.samples as f64
    }
}

/// `num/den` reduced modulo 2 in exact integer arithmetic; the angle is π
/// times the result.
fn pi_multiple(num: i128, den: i128) -> f64 {
    num.rem_euclid(2 * den) as f64 / den as f64
}

/// `Σ_{k=0}^{len−1} e^{−j2π k h/n}`.
fn geometric_sum(h: i128, n: i128, len: i128) -> Complex64 {
    if h.rem_euclid(n) == 0 {
        return Complex64::new(len as f64, 0.0);
    }
    // (1 − w^L)/(1 − w) = e^{−jπ(L−1)h/n} · sin(πLh/n) / sin(πh/n)
    let num = (PI * pi_multiple(h * len, n)).sin();
    let den = (PI * pi_multiple(h, n)).sin();
    phasor(-PI * pi_multiple(h * (len - 1), n)) * (num / den)
}

/// True iff order `h` vanishes for the ideal SSB staircase: `h` even or
/// `h ≡ 1 (mod 4)`. The survivors are `…, −5, −1, 3, 7, …`.
pub fn is_suppressed(h: i64) -> bool {
    h.rem_euclid(4) != 3
}

/// Power in the −1st harmonic relative to an unmodulated unit carrier,
/// `20·log10(4·sin(π τ/T_p)/π)`. Returns `-inf` for vanishing duty.
pub fn insertion_loss_db(on_duration: f64, period: f64) -> Result<f64> {
    if !(period.is_finite() && period > 0.0) {
        return Err(TmaError::InvalidPeriod(period));
    }
    let duty = on_duration / period;
    check_duty(duty, 0.25)?;
    if duty < MIN_DUTY_FOR_LOSS {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(20.0 * (4.0 * (PI * duty.min(0.25)).sin() / PI).log10())
}

/// Time-average power of the waveform, `(τ/T_p) Σ_k |c_k|²`; `4τ/T_p` for
/// unit states. Parseval's identity makes this the limit of `Σ_h |A_h|²`.
pub fn total_power(s: &ModulationSchedule) -> f64 {
    s.on_fraction() * s.phase_states().iter().map(|c| c.norm_sqr()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{build_ssb_schedule, NOMINAL_STATES};
    use approx::assert_abs_diff_eq;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn ideal() -> ModulationSchedule {
        build_ssb_schedule(1.0, 0.25, 0.25).unwrap()
    }

    /// Plain per-sample midpoint sum, the literal definition.
    fn brute_force(s: &ModulationSchedule, h: i64, n: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            acc += s.evaluate_fraction(u) * phasor(-2.0 * PI * h as f64 * u);
        }
        acc / n as f64
    }

    #[test]
    fn sinc_basics() {
        assert_eq!(sinc(0.0), 1.0);
        assert_abs_diff_eq!(sinc(PI), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(sinc(1e-9), (1e-9f64).sin() / 1e-9, epsilon = 1e-16);
        assert_abs_diff_eq!(sinc(-2.0), sinc(2.0));
    }

    #[test]
    fn pulse_examples() {
        let dc = pulse_coefficient(0.0, 0.25, 1.0, one(), 0).unwrap();
        assert_abs_diff_eq!(dc.re, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(dc.im, 0.0, epsilon = 1e-15);
        let null = pulse_coefficient(0.0, 0.25, 1.0, one(), 4).unwrap();
        assert!(null.norm() < 1e-15);
        // value frozen from a 10^6-point midpoint sum: 0.1591549 (1 - j)
        let a1 = pulse_coefficient(0.0, 0.25, 1.0, one(), 1).unwrap();
        assert_abs_diff_eq!(a1.norm(), 0.22508, epsilon = 1e-5);
        assert_abs_diff_eq!(a1.arg(), -PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a1.re, 0.159_154_943_092, epsilon = 1e-9);
        assert_abs_diff_eq!(a1.im, -0.159_154_943_092, epsilon = 1e-9);
    }

    #[test]
    fn pulse_matches_riemann_sum() {
        let s = ModulationSchedule::from_fractions(
            1.0,
            0.25,
            [0.0, 0.0, 0.0, 0.0],
            [
                one(),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let oracle = brute_force(&s, 1, 1_000_000);
        let a1 = pulse_coefficient(0.0, 0.25, 1.0, one(), 1).unwrap();
        assert!((oracle - a1).norm() < 1e-6);
    }

    #[test]
    fn pulse_rejects_bad_duty() {
        assert!(pulse_coefficient(0.0, 0.0, 1.0, one(), 1).is_err());
        assert!(pulse_coefficient(0.0, 1.5, 1.0, one(), 1).is_err());
        assert!(pulse_coefficient(0.0, 1.0, 1.0, one(), 1).is_ok());
    }

    #[test]
    fn analytic_examples() {
        let spec = spectrum_analytic(&ideal(), -5, 5).unwrap();
        assert!(spec.get(0).unwrap().norm() < 1e-15);
        assert_abs_diff_eq!(
            spec.get(-1).unwrap().norm(),
            2.0 * 2f64.sqrt() / PI,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(spec.get(-1).unwrap().norm(), 0.90032, epsilon = 1e-5);
        assert_abs_diff_eq!(spec.get(3).unwrap().norm(), 0.30011, epsilon = 1e-5);
        assert_eq!(spec.get(6), None);
        assert_eq!(spec.get(-6), None);
        assert_eq!((spec.h_min(), spec.h_max(), spec.len()), (-5, 5, 11));
    }

    #[test]
    fn analytic_rejects_bad_input() {
        assert!(matches!(
            spectrum_analytic(&ideal(), 3, 2),
            Err(TmaError::InvalidRange { .. })
        ));
        let overlapping =
            ModulationSchedule::from_fractions(1.0, 0.3, [0.25, 0.0, 0.75, 0.5], NOMINAL_STATES)
                .unwrap();
        assert!(matches!(
            spectrum_analytic(&overlapping, -1, 1),
            Err(TmaError::InvalidSchedule(_))
        ));
    }

    #[test]
    fn closed_form_examples() {
        let z = coefficient_closed_form(0, 0.3, 0.2, 1.0).unwrap();
        assert_eq!(z, Complex64::new(0.0, 0.0));
        let m1 = coefficient_closed_form(-1, 0.25, 0.25, 1.0).unwrap();
        assert_abs_diff_eq!(m1.norm(), 0.900_316_316, epsilon = 1e-9);
        for (t1, tau) in [(0.0, 0.1), (0.37, 0.25), (0.9, 0.01)] {
            assert!(coefficient_closed_form(2, t1, tau, 1.0).unwrap().norm() < 1e-15);
        }
        assert!(coefficient_closed_form(1, 0.0, 0.3, 1.0).is_err());
    }

    #[test]
    fn oracle_examples() {
        let s = ideal();
        let analytic = coefficient(&s, -1);
        let o = spectrum_numeric_oracle(&s, -1, DEFAULT_ORACLE_SAMPLES);
        assert!((o - analytic).norm() < 1e-4);
        assert!(spectrum_numeric_oracle(&s, 0, DEFAULT_ORACLE_SAMPLES).norm() < 1e-4);
        let zero = s.with_states([Complex64::new(0.0, 0.0); 4]);
        assert_eq!(
            spectrum_numeric_oracle(&zero, 3, 10_000),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn run_grouping_equals_per_sample_sum() {
        let s = ModulationSchedule::from_fractions(
            1.0,
            0.17,
            [0.03, 0.31, 0.52, 0.77],
            [one(), phasor(1.0), phasor(-2.0), phasor(0.3)],
        )
        .unwrap();
        let oracle = NumericOracle::sample(&s, 10_000);
        for h in -7..=7 {
            let a = oracle.coefficient(h);
            let b = brute_force(&s, h, 10_000);
            assert!((a - b).norm() < 1e-12, "h={h}: {a} vs {b}");
        }
        // midpoint sampling: h = n aliases to −DC, h = 2n to DC
        assert!((oracle.coefficient(10_000) + oracle.coefficient(0)).norm() < 1e-12);
        assert!((oracle.coefficient(20_000) - oracle.coefficient(0)).norm() < 1e-12);
    }

    #[test]
    fn suppression_examples() {
        assert!(is_suppressed(0));
        assert!(is_suppressed(5));
        assert!(is_suppressed(1));
        assert!(is_suppressed(-2));
        assert!(is_suppressed(-3));
        assert!(!is_suppressed(-1));
        assert!(!is_suppressed(3));
        assert!(!is_suppressed(-5));
        assert!(!is_suppressed(7));
    }

    #[test]
    fn insertion_loss_examples() {
        assert_abs_diff_eq!(
            insertion_loss_db(0.25, 1.0).unwrap(),
            -0.91,
            epsilon = 0.005
        );
        let eighth = insertion_loss_db(0.125, 1.0).unwrap();
        assert_abs_diff_eq!(eighth, -6.245_004_415_66, epsilon = 1e-9);
        let s = build_ssb_schedule(1.0, 0.125, 0.0).unwrap();
        let o = spectrum_numeric_oracle(&s, -1, DEFAULT_ORACLE_SAMPLES);
        assert_abs_diff_eq!(20.0 * o.norm().log10(), eighth, epsilon = 1e-4);
        assert_eq!(insertion_loss_db(1e-14, 1.0).unwrap(), f64::NEG_INFINITY);
        assert!(insertion_loss_db(0.0, 1.0).is_err());
        assert!(insertion_loss_db(0.3, 1.0).is_err());
    }

    #[test]
    fn total_power_examples() {
        assert_abs_diff_eq!(total_power(&ideal()), 1.0, epsilon = 1e-15);
        let half = build_ssb_schedule(1.0, 0.125, 0.0).unwrap();
        assert_abs_diff_eq!(total_power(&half), 0.5, epsilon = 1e-15);
        let partial = spectrum_analytic(&ideal(), -2001, 2001).unwrap().power();
        assert!((partial - 1.0).abs() < 1e-3);
        // tail bound 4/(π² H)
        assert!(1.0 - partial <= 4.0 / (PI * PI * 2001.0));
    }

    #[test]
    fn time_shift_phase_law() {
        let s = build_ssb_schedule(1e-6, 0.2e-6, 0.13e-6).unwrap();
        let delta = 0.377e-6;
        let shifted = s.shifted(delta);
        for h in -21..=21 {
            let want = coefficient(&s, h) * phasor(-2.0 * PI * h as f64 * 1e6 * delta);
            assert!((coefficient(&shifted, h) - want).norm() < 1e-12, "h={h}");
        }
    }
}
