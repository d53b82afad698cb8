//! The study commands. Each returns a [`Report`] and, where it makes sense,
//! a [`Plot`] of the same data.

use std::path::Path;

use serde_json::{json, Value};
use tma_core::array::{angle_grid, beam_metrics, pattern_cut, power_spectrum_at, ArrayConfig};
use tma_core::harmonics::{coefficient, insertion_loss_db};
use tma_core::waveform::ModulationSchedule;
use tma_core::Complex64;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{Cell, Report, Table};
use crate::svg::{Plot, Series};

/// dB plots bottom out here.
const PLOT_FLOOR_DB: f64 = -60.0;

/// Config plus an optional explicit set of element timings.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub timings: Option<Vec<ModulationSchedule>>,
}

impl Scenario {
    fn array(&self, steer_deg: f64) -> Result<ArrayConfig, CliError> {
        let schedules = match &self.timings {
            Some(t) => t.clone(),
            None => self.config.schedules(steer_deg)?,
        };
        self.config.array(schedules)
    }

    fn report(&self, command: &'static str, params: Value, table: Table) -> Report {
        let Value::Object(params) = params else {
            unreachable!("params are always built with json!({{..}})")
        };
        Report {
            command,
            params,
            config: self.config.clone(),
            table,
            sections: Vec::new(),
        }
    }
}

pub struct Outcome {
    pub report: Report,
    pub plot: Option<Plot>,
}

fn db_plot(title: String, x_label: &str, series: Vec<Series>) -> Plot {
    Plot {
        title,
        x_label: x_label.into(),
        y_label: "relative level (dB)".into(),
        y_range: (PLOT_FLOOR_DB, 0.0),
        series,
    }
}

pub fn spectrum(
    sc: &Scenario,
    steer_deg: f64,
    theta_deg: f64,
    h_min: i64,
    h_max: i64,
) -> Result<Outcome, CliError> {
    let array = sc.array(steer_deg)?;
    let rows = power_spectrum_at(&array, theta_deg, h_min, h_max)?;
    let mut table = Table::new(vec!["order", "power_db"]);
    table.rows = rows
        .iter()
        .map(|&(h, db)| vec![Cell::Int(h), Cell::Fixed(db)])
        .collect();
    let params = json!({
        "steer_deg": steer_deg,
        "theta_deg": theta_deg,
        "h_min": h_min,
        "h_max": h_max,
        "explicit_timings": sc.timings.is_some(),
    });
    let plot = db_plot(
        format!("Harmonic levels at theta = {theta_deg} deg"),
        "harmonic order",
        vec![Series {
            label: "relative to order -1".into(),
            points: rows.iter().map(|&(h, db)| (h as f64, db)).collect(),
        }],
    );
    Ok(Outcome {
        report: sc.report("spectrum", params, table),
        plot: Some(plot),
    })
}

pub fn pattern(
    sc: &Scenario,
    steer_deg: f64,
    harmonic: i64,
    grid_step: f64,
) -> Result<Outcome, CliError> {
    let array = sc.array(steer_deg)?;
    let grid = angle_grid(-90.0, 90.0, grid_step)?;
    let cut = pattern_cut(&array, harmonic, &grid)?;
    let mut table = Table::new(vec!["theta_deg", "power_db"]);
    table.rows = cut
        .angles
        .iter()
        .zip(&cut.power_db)
        .map(|(&a, &p)| vec![Cell::Fixed(a), Cell::Fixed(p)])
        .collect();
    let params = json!({
        "steer_deg": steer_deg,
        "harmonic": harmonic,
        "grid_step_deg": grid_step,
        "explicit_timings": sc.timings.is_some(),
    });
    let plot = db_plot(
        format!("Order {harmonic} pattern, steer {steer_deg} deg"),
        "theta (deg)",
        vec![Series {
            label: format!("h = {harmonic}"),
            points: cut
                .angles
                .iter()
                .copied()
                .zip(cut.power_db.iter().copied())
                .collect(),
        }],
    );
    Ok(Outcome {
        report: sc.report("pattern", params, table),
        plot: Some(plot),
    })
}

pub fn scan(
    sc: &Scenario,
    from: f64,
    to: f64,
    step: f64,
    harmonic: i64,
    grid_step: f64,
) -> Result<Outcome, CliError> {
    if sc.timings.is_some() {
        return Err(CliError::Usage(
            "scan synthesizes its own timings; drop --timings".into(),
        ));
    }
    if from > to || step.is_nan() || step <= 0.0 {
        return Err(CliError::Usage(format!(
            "invalid scan range from {from} to {to} step {step}"
        )));
    }
    let steers = angle_grid(from, to, step)?;
    let grid = angle_grid(-90.0, 90.0, grid_step)?;
    let mut summary = Table::new(vec![
        "steer_deg",
        "peak_angle_deg",
        "peak_db",
        "sidelobe_db",
        "beamwidth_deg",
    ]);
    let mut cuts = Table::new(vec!["steer_deg", "theta_deg", "power_db"]);
    let mut series = Vec::new();
    for &steer in &steers {
        let cut = pattern_cut(&sc.array(steer)?, harmonic, &grid)?;
        let m = beam_metrics(&cut)?;
        summary.rows.push(vec![
            Cell::Fixed(steer),
            Cell::Fixed(m.peak_angle),
            Cell::Fixed(m.peak_db),
            Cell::Fixed(m.max_sidelobe_db),
            Cell::Fixed(m.beamwidth_3db),
        ]);
        for (&a, &p) in cut.angles.iter().zip(&cut.power_db) {
            cuts.rows
                .push(vec![Cell::Fixed(steer), Cell::Fixed(a), Cell::Fixed(p)]);
        }
        series.push(Series {
            label: format!("{steer} deg"),
            points: cut
                .angles
                .iter()
                .copied()
                .zip(cut.power_db.iter().copied())
                .collect(),
        });
    }
    let params = json!({
        "from_deg": from,
        "to_deg": to,
        "step_deg": step,
        "harmonic": harmonic,
        "grid_step_deg": grid_step,
    });
    let mut report = sc.report("scan", params, summary);
    report.sections.push(("cuts", cuts));
    Ok(Outcome {
        report,
        plot: Some(db_plot(
            format!("Order {harmonic} scan"),
            "theta (deg)",
            series,
        )),
    })
}

pub const SCHEDULE_COLUMNS: [&str; 17] = [
    "element",
    "t1_s",
    "t2_s",
    "t3_s",
    "t4_s",
    "t1_frac",
    "t2_frac",
    "t3_frac",
    "t4_frac",
    "tau_s",
    "tau_frac",
    "phase1_deg",
    "phase2_deg",
    "phase3_deg",
    "phase4_deg",
    "harmonic_m1_phase_deg",
    "harmonic_m1_level_db",
];

pub fn schedule(sc: &Scenario, steer_deg: f64) -> Result<Outcome, CliError> {
    let array = sc.array(steer_deg)?;
    let mut table = Table::new(SCHEDULE_COLUMNS.to_vec());
    for (n, s) in array.schedules().iter().enumerate() {
        let mut row = vec![Cell::Int(n as i64)];
        row.extend(s.window_starts().map(Cell::Sci));
        row.extend(s.start_fractions().map(Cell::Precise));
        row.push(Cell::Sci(s.on_duration()));
        row.push(Cell::Precise(s.on_fraction()));
        row.extend(
            s.phase_states()
                .map(|c| Cell::Precise(c.arg().to_degrees())),
        );
        let main = coefficient(s, -1);
        row.push(Cell::Fixed(main.arg().to_degrees()));
        row.push(Cell::Fixed(20.0 * main.norm().log10()));
        table.rows.push(row);
    }
    let params = json!({
        "steer_deg": steer_deg,
        "explicit_timings": sc.timings.is_some(),
    });
    Ok(Outcome {
        report: sc.report("schedule", params, table),
        plot: None,
    })
}

pub const DEFAULT_SWEEP: [f64; 6] = [0.25, 0.2, 0.15, 0.125, 0.1, 0.05];

pub fn sweep_loss(sc: &Scenario, fractions: &[f64]) -> Result<Outcome, CliError> {
    if fractions.is_empty() {
        return Err(CliError::Usage("no tau fractions given".into()));
    }
    let mut table = Table::new(vec!["tau_fraction", "loss_db"]);
    let mut points = Vec::new();
    for &f in fractions {
        if !(f > 0.0 && f <= 0.25) {
            return Err(CliError::Usage(format!(
                "tau fraction {f} outside (0, 0.25]"
            )));
        }
        let loss = insertion_loss_db(f, 1.0)?;
        table.rows.push(vec![Cell::Fixed(f), Cell::Fixed(loss)]);
        points.push((f, loss));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let params = json!({ "tau_fractions": fractions });
    Ok(Outcome {
        report: sc.report("sweep-loss", params, table),
        plot: Some(db_plot(
            "Insertion loss of the -1st harmonic".into(),
            "tau / T_p",
            vec![Series {
                label: "loss".into(),
                points,
            }],
        )),
    })
}

/// Reads element timings written by the `schedule` command.
pub fn read_timings(path: &Path, period: f64) -> Result<Vec<ModulationSchedule>, CliError> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column {name}")))
    };
    let starts_idx = [
        column("t1_frac")?,
        column("t2_frac")?,
        column("t3_frac")?,
        column("t4_frac")?,
    ];
    let phase_idx = [
        column("phase1_deg")?,
        column("phase2_deg")?,
        column("phase3_deg")?,
        column("phase4_deg")?,
    ];
    let tau_idx = column("tau_frac")?;
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64, CliError> {
            record
                .get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    bad(format!(
                        "row {}: bad value in column {}",
                        line + 1,
                        &headers[i]
                    ))
                })
        };
        let mut starts = [0.0; 4];
        let mut states = [Complex64::new(0.0, 0.0); 4];
        for k in 0..4 {
            starts[k] = num(starts_idx[k])?;
            states[k] = Complex64::from_polar(1.0, num(phase_idx[k])?.to_radians());
        }
        out.push(ModulationSchedule::from_fractions(
            period,
            num(tau_idx)?,
            starts,
            states,
        )?);
    }
    if out.is_empty() {
        return Err(bad("no element rows".into()));
    }
    Ok(out)
}
