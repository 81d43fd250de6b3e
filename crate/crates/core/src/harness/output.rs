use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::report::ContinuityReport;
use super::scenario::Scenario;
use super::sim::{Event, Mode, Termination, TrajectoryLog};
use super::svg::{auto_range, Chart, Series, PALETTE};
use super::HarnessError;
use crate::geometry::Barrier;

#[derive(Debug, Clone, Copy, Default)]
pub struct OutputOptions {
    /// Write measured QP solve times to the `qp_us` column instead of 0.
    /// Timed output is not reproducible byte for byte.
    pub include_timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub trajectory_csv: PathBuf,
    pub events_json: PathBuf,
    pub controls_svg: PathBuf,
    pub workspace_svg: PathBuf,
    pub alpha_svg: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::other(format!("{other:?}")),
    };
    HarnessError::Io { path: path.to_path_buf(), source }
}

/// Writes the trajectory CSV to any writer.
pub fn write_csv<W: Write>(log: &TrajectoryLog, out: W, opts: OutputOptions) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let first = log.records.first();
    let n = first.map_or(0, |r| r.state.len());
    let k = first.map_or(0, |r| r.u.len());
    let m = log.reach_count;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=k).map(|i| format!("u_{i}")));
    header.extend((1..=m).map(|i| format!("alpha_{i}")));
    header.extend((1..=log.barrier_names.len()).map(|i| format!("h_{i}")));
    header.push("softmin".into());
    header.push("qp_us".into());
    w.write_record(&header)?;
    for r in &log.records {
        let qp_us = if opts.include_timing { r.qp_seconds * 1e6 } else { 0.0 };
        let row = std::iter::once(r.t)
            .chain(r.state.iter().copied())
            .chain(r.u.iter().copied())
            .chain(r.alpha.iter().copied())
            .chain(r.h.iter().copied())
            .chain([r.softmin, qp_us])
            .map(|v| v.to_string());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EventsFile<'a> {
    scenario: &'a str,
    mode: Mode,
    dt: f64,
    termination: Termination,
    records: usize,
    barriers: &'a [String],
    arrival_times: Vec<f64>,
    transition_end_times: Vec<f64>,
    continuity: &'a ContinuityReport,
    events: &'a [Event],
}

/// Polygon outline of a barrier's zero level set, if bounded.
fn outline(b: &Barrier) -> Option<Vec<(f64, f64)>> {
    const N: usize = 96;
    match b {
        Barrier::Ellipsoid(e) => {
            let ([cx, cy], [a, bb]) = (e.center(), e.semi_axes());
            Some((0..N).map(|i| TAU * i as f64 / N as f64).map(|t| (cx + a * t.cos(), cy + bb * t.sin())).collect())
        }
        Barrier::Superellipse(o) => Some(
            (0..N)
                .map(|i| o.boundary_point(TAU * i as f64 / N as f64))
                .map(|[x, y]| (x, y))
                .collect(),
        ),
        Barrier::Halfplane(_) => None,
    }
}

fn controls_chart(log: &TrajectoryLog) -> Chart {
    let k = log.records.first().map_or(0, |r| r.u.len());
    let series: Vec<Series> = (0..k)
        .map(|i| {
            Series::line(
                format!("u_{}", i + 1),
                PALETTE[i % PALETTE.len()],
                log.records.iter().map(|r| (r.t, r.u[i])).collect(),
            )
        })
        .collect();
    let (x_range, y_range) = auto_range(&series);
    Chart {
        title: format!("{} ({}): control input", log.scenario, log.mode),
        x_label: "t [s]".into(),
        y_label: "u".into(),
        x_range,
        y_range,
        equal_aspect: false,
        series,
        markers: vec![],
    }
}

fn alpha_chart(log: &TrajectoryLog) -> Chart {
    let series: Vec<Series> = (0..log.reach_count)
        .map(|i| {
            Series::line(
                format!("alpha_{} ({})", i + 1, log.barrier_names[i]),
                PALETTE[i % PALETTE.len()],
                log.records.iter().map(|r| (r.t, r.alpha[i])).collect(),
            )
        })
        .collect();
    let (x_range, _) = auto_range(&series);
    Chart {
        title: format!("{} ({}): transition weights", log.scenario, log.mode),
        x_label: "t [s]".into(),
        y_label: "alpha".into(),
        x_range,
        y_range: (-0.05, 1.05),
        equal_aspect: false,
        series,
        markers: vec![],
    }
}

fn workspace_chart(log: &TrajectoryLog, scenario: &Scenario) -> Chart {
    let mut series = Vec::new();
    for (i, b) in scenario.reach_barriers.iter().enumerate() {
        if let Some(pts) = outline(&b.barrier) {
            let c = PALETTE[(i + 2) % PALETTE.len()];
            series.push(Series::region(b.name.clone(), c, pts, c));
        }
    }
    for b in &scenario.safety_barriers {
        if let Some(pts) = outline(&b.barrier) {
            series.push(Series::region(b.name.clone(), "#555555", pts, "#888888"));
        }
    }
    series.push(Series::line(
        "trajectory",
        PALETTE[0],
        log.records.iter().map(|r| (r.state[0], r.state[1])).collect(),
    ));
    let markers = log
        .records
        .first()
        .map(|r| vec![(r.state[0], r.state[1], "start".to_string())])
        .unwrap_or_default();
    let w = scenario.workspace;
    Chart {
        title: format!("{} ({}): workspace", log.scenario, log.mode),
        x_label: "x [m]".into(),
        y_label: "y [m]".into(),
        x_range: (w.min[0], w.max[0]),
        y_range: (w.min[1], w.max[1]),
        equal_aspect: true,
        series,
        markers,
    }
}

/// Writes `trajectory.csv`, `events.json` and three SVG plots into `out_dir`,
/// creating it if needed.
pub fn emit_outputs(
    log: &TrajectoryLog,
    report: &ContinuityReport,
    scenario: &Scenario,
    out_dir: &Path,
    opts: OutputOptions,
) -> Result<OutputPaths, HarnessError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let paths = OutputPaths {
        trajectory_csv: out_dir.join("trajectory.csv"),
        events_json: out_dir.join("events.json"),
        controls_svg: out_dir.join("controls.svg"),
        workspace_svg: out_dir.join("workspace.svg"),
        alpha_svg: out_dir.join("alpha.svg"),
    };

    let file = fs::File::create(&paths.trajectory_csv).map_err(io_err(&paths.trajectory_csv))?;
    write_csv(log, std::io::BufWriter::new(file), opts).map_err(|e| csv_err(&paths.trajectory_csv, e))?;

    let events = EventsFile {
        scenario: &log.scenario,
        mode: log.mode,
        dt: log.dt,
        termination: log.termination,
        records: log.len(),
        barriers: &log.barrier_names,
        arrival_times: log.arrival_times(),
        transition_end_times: log
            .events
            .iter()
            .filter_map(|e| match e {
                Event::TransitionEnd { t, .. } => Some(*t),
                _ => None,
            })
            .collect(),
        continuity: report,
        events: &log.events,
    };
    let json = serde_json::to_string_pretty(&events).map_err(|e| HarnessError::Io {
        path: paths.events_json.clone(),
        source: std::io::Error::other(e),
    })?;
    fs::write(&paths.events_json, json + "\n").map_err(io_err(&paths.events_json))?;

    for (path, chart) in [
        (&paths.controls_svg, controls_chart(log)),
        (&paths.workspace_svg, workspace_chart(log, scenario)),
        (&paths.alpha_svg, alpha_chart(log)),
    ] {
        fs::write(path, chart.render()).map_err(io_err(path))?;
    }
    Ok(paths)
}
