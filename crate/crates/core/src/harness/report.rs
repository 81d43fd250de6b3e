use serde::Serialize;

use super::sim::TrajectoryLog;

/// Step changes of `u` above this are listed in [`ContinuityReport::jump_times`].
pub const JUMP_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    /// `max_k ||u_{k+1} - u_k||_inf`.
    pub max_jump: f64,
    /// Time of the later sample of the largest jump.
    pub max_jump_time: Option<f64>,
    pub jump_times: Vec<f64>,
    pub threshold: f64,
}

/// Step-to-step control variation of a log.
pub fn continuity_metric(log: &TrajectoryLog) -> ContinuityReport {
    let mut report =
        ContinuityReport { max_jump: 0.0, max_jump_time: None, jump_times: Vec::new(), threshold: JUMP_THRESHOLD };
    for w in log.records.windows(2) {
        let jump = w[0].u.iter().zip(&w[1].u).map(|(a, b)| (b - a).abs()).fold(0.0, f64::max);
        if jump > report.max_jump {
            report.max_jump = jump;
            report.max_jump_time = Some(w[1].t);
        }
        if jump > JUMP_THRESHOLD {
            report.jump_times.push(w[1].t);
        }
    }
    report
}

/// One row per (mode, dt) run of the same scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeComparison {
    pub scenario: String,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub mode: String,
    pub dt: f64,
    pub max_jump: f64,
    pub max_jump_time: Option<f64>,
    pub completed: bool,
}

pub fn compare_modes(logs: &[&TrajectoryLog]) -> ModeComparison {
    ModeComparison {
        scenario: logs.first().map(|l| l.scenario.clone()).unwrap_or_default(),
        rows: logs
            .iter()
            .map(|log| {
                let r = continuity_metric(log);
                ComparisonRow {
                    mode: log.mode.to_string(),
                    dt: log.dt,
                    max_jump: r.max_jump,
                    max_jump_time: r.max_jump_time,
                    completed: log.completed(),
                }
            })
            .collect(),
    }
}

impl ModeComparison {
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<10} {:>10} {:>12} {:>12} {:>10}\n", "mode", "dt", "max_jump", "at_t", "completed");
        for r in &self.rows {
            let at = r.max_jump_time.map_or_else(|| "-".to_string(), |t| format!("{t:.4}"));
            out.push_str(&format!(
                "{:<10} {:>10} {:>12.6} {:>12} {:>10}\n",
                r.mode, r.dt, r.max_jump, at, r.completed
            ));
        }
        out
    }
}
