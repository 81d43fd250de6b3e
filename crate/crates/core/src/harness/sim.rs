//! Fixed-step closed loop in smooth (composite row) or discrete
//! (switched FCBF rows) mode.

use std::time::Instant;

use serde::Serialize;

use super::scenario::{ControlPoint, Scenario, SystemConfig};
use super::HarnessError;
use crate::constraints::{composite_row, fcbf_row, zcbf_row, CompositeContext};
use crate::dynamics::{integrate, nid_point, nid_to_unicycle, ControlAffineSystem};
use crate::geometry::{softmin, Barrier};
use crate::qp::{max_linear, solve_min_norm, HalfplaneConstraint, QpProblem};
use crate::scheduler::{advance_phase, Phase, PhaseState};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Smooth,
    Discrete,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smooth" => Ok(Self::Smooth),
            "discrete" => Ok(Self::Discrete),
            other => Err(format!("unknown mode `{other}` (expected smooth or discrete)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Smooth => "smooth",
            Self::Discrete => "discrete",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub state: Vec<f64>,
    /// QP decision variable (planar NID velocity for the NID unicycle).
    pub u: Vec<f64>,
    /// Input applied to the plant.
    pub applied: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_dot: Vec<f64>,
    /// Reachability barriers first, then safety barriers.
    pub h: Vec<f64>,
    pub softmin: f64,
    pub active_set: Vec<String>,
    pub qp_seconds: f64,
    pub task_index: usize,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowDump {
    pub label: String,
    pub a: Vec<f64>,
    pub b: f64,
}

impl From<&HalfplaneConstraint> for RowDump {
    fn from(c: &HalfplaneConstraint) -> Self {
        Self { label: c.label.clone(), a: c.a.clone(), b: c.b }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Arrival { task: usize, target: String, t: f64, step: usize },
    TransitionEnd { task: usize, t: f64, step: usize },
    Completed { t: f64, step: usize },
    SlackApplied { t: f64, step: usize, label: String, requested_b: f64, relaxed_b: f64 },
    Infeasible { t: f64, step: usize, state: Vec<f64>, controlled_point: Vec<f64>, rows: Vec<RowDump>, bound: f64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Infeasible,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub scenario: String,
    pub mode: Mode,
    pub dt: f64,
    pub records: Vec<StepRecord>,
    pub events: Vec<Event>,
    pub termination: Termination,
    /// Column names for `h`, in order.
    pub barrier_names: Vec<String>,
    pub reach_count: usize,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn arrival_times(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Arrival { t, .. } => Some(*t),
                _ => None,
            })
            .collect()
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// Minimum of each safety barrier over the logged trajectory.
    pub fn safety_minima(&self) -> Vec<f64> {
        (self.reach_count..self.barrier_names.len())
            .map(|j| self.records.iter().map(|r| r.h[j]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    pub fn mean_qp_seconds(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.qp_seconds).sum::<f64>() / self.records.len() as f64
    }
}

/// How the QP variable maps to the plant.
struct Plant {
    system: ControlAffineSystem,
    /// System the barrier rows are built on.
    qp_system: ControlAffineSystem,
    nid: Option<crate::dynamics::NidConfig>,
}

impl Plant {
    fn new(cfg: &SystemConfig) -> Self {
        match *cfg {
            SystemConfig::SingleIntegrator => Self {
                system: ControlAffineSystem::SingleIntegrator,
                qp_system: ControlAffineSystem::SingleIntegrator,
                nid: None,
            },
            SystemConfig::Unicycle { nid, control: ControlPoint::Nid } => Self {
                system: ControlAffineSystem::Unicycle,
                qp_system: ControlAffineSystem::SingleIntegrator,
                nid: Some(nid),
            },
            SystemConfig::Unicycle { control: ControlPoint::Direct, .. } => Self {
                system: ControlAffineSystem::Unicycle,
                qp_system: ControlAffineSystem::Unicycle,
                nid: None,
            },
        }
    }

    fn controlled(&self, x: &[f64]) -> Vec<f64> {
        match self.nid {
            Some(cfg) => nid_point(x, cfg).to_vec(),
            None => x.to_vec(),
        }
    }

    fn applied(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        match self.nid {
            Some(cfg) => {
                let (v, w) = nid_to_unicycle([u[0], u[1]], x[2], cfg);
                vec![v, w]
            }
            None => u.to_vec(),
        }
    }
}

struct Outcome {
    u: Vec<f64>,
    active_set: Vec<String>,
    seconds: f64,
}

fn solve(
    problem: &QpProblem,
    reach_rows: usize,
    slack: bool,
    t: f64,
    step: usize,
    events: &mut Vec<Event>,
) -> Result<Outcome, Error> {
    let start = Instant::now();
    let first = solve_min_norm(problem);
    let mut seconds = start.elapsed().as_secs_f64();
    let sol = match first {
        Ok(sol) => sol,
        Err(Error::Infeasible(_)) if slack => {
            // Reachability rows come first; relax them one at a time against
            // the safety rows and the rows already relaxed.
            let safety = problem.constraints[reach_rows..].to_vec();
            let mut relaxed = QpProblem { constraints: safety, ..problem.clone() };
            for row in &problem.constraints[..reach_rows] {
                let best = max_linear(&relaxed, &row.a)?;
                let b = row.b.min(best);
                if b < row.b {
                    events.push(Event::SlackApplied {
                        t,
                        step,
                        label: row.label.clone(),
                        requested_b: row.b,
                        relaxed_b: b,
                    });
                }
                relaxed.constraints.push(HalfplaneConstraint::new(row.a.clone(), b, row.label.clone()));
            }
            relaxed.constraints.rotate_right(reach_rows);
            let start = Instant::now();
            let sol = solve_min_norm(&relaxed)?;
            seconds += start.elapsed().as_secs_f64();
            sol
        }
        Err(e) => return Err(e),
    };
    Ok(Outcome { u: sol.u, active_set: sol.active_set, seconds })
}

fn label_rows(rows: &mut [HalfplaneConstraint], names: &[&str], prefix: &str) {
    for (row, name) in rows.iter_mut().zip(names) {
        row.label = format!("{prefix}:{name}");
    }
}

/// Runs the closed loop until the last task completes (plus the tail),
/// `t_max` is reached, or the QP becomes infeasible.
///
/// Infeasibility is not an `Err`: it ends the run with
/// [`Termination::Infeasible`] and an [`Event::Infeasible`] holding the
/// rows of the offending step.
pub fn run(scenario: &Scenario, mode: Mode) -> Result<TrajectoryLog, HarnessError> {
    scenario.validate()?;
    let plant = Plant::new(&scenario.system);
    let plan = &scenario.plan;
    let reach: Vec<Barrier> = scenario.reach_barriers.iter().map(|b| b.barrier.clone()).collect();
    let safety: Vec<Barrier> = scenario.safety_barriers.iter().map(|b| b.barrier.clone()).collect();
    let reach_names: Vec<&str> = scenario.reach_barriers.iter().map(|b| b.name.as_str()).collect();
    let safety_names: Vec<&str> = scenario.safety_barriers.iter().map(|b| b.name.as_str()).collect();
    let m = reach.len();
    let dt = scenario.dt;
    let last_step = (scenario.t_max / dt + 1e-9).floor() as usize;
    let tail_steps = (scenario.tail / dt).round() as usize;

    let mut log = TrajectoryLog {
        scenario: scenario.name.clone(),
        mode,
        dt,
        records: Vec::with_capacity(last_step.min(1 << 20) + 1),
        events: Vec::new(),
        termination: Termination::TimedOut,
        barrier_names: reach_names.iter().chain(&safety_names).map(|s| s.to_string()).collect(),
        reach_count: m,
    };

    let mut x = scenario.initial_state.clone();
    let mut phase = PhaseState::initial(plan);
    let mut done_at: Option<usize> = None;

    for k in 0..=last_step {
        let t = k as f64 * dt;
        let p = plant.controlled(&x);

        let previous = phase.clone();
        match mode {
            Mode::Smooth => phase = advance_phase(&phase, &p, t, plan, &reach, &scenario.transition)?,
            Mode::Discrete => {
                if phase.phase == Phase::Reaching && plan.map.contains(plan.tasks[phase.task_index].target, &reach, &p)? {
                    phase.arrival_time = t;
                    if phase.task_index + 1 < plan.len() {
                        phase.task_index += 1;
                    } else {
                        phase.phase = Phase::Done;
                    }
                    phase.alpha = vec![0.0; m];
                    for &j in plan.delta(phase.task_index) {
                        phase.alpha[j] = 1.0;
                    }
                }
            }
        }
        let arrived = match mode {
            Mode::Smooth => previous.phase == Phase::Reaching && phase.phase != Phase::Reaching,
            Mode::Discrete => previous.task_index != phase.task_index || previous.phase != phase.phase,
        };
        if arrived {
            let task = previous.task_index;
            log.events.push(Event::Arrival { task, target: plan.target_name(task).to_string(), t, step: k });
        }
        if mode == Mode::Smooth && previous.phase == Phase::Transitioning && phase.phase == Phase::Reaching {
            log.events.push(Event::TransitionEnd { task: previous.task_index, t, step: k });
        }
        if phase.phase == Phase::Done && done_at.is_none() {
            done_at = Some(k);
            log.events.push(Event::Completed { t, step: k });
        }

        let mut rows: Vec<HalfplaneConstraint> = Vec::new();
        let mut h = Vec::with_capacity(m + safety.len());
        let sm;
        match mode {
            Mode::Smooth => {
                let ctx = CompositeContext {
                    barriers: &reach,
                    alpha: &phase.alpha,
                    alpha_dot: &phase.alpha_dot,
                    gamma: scenario.composite_gamma,
                    softmin_set: scenario.softmin_set,
                };
                let c = composite_row(&ctx, plant.qp_system, &p)?;
                rows.push(c.row);
                h.extend(c.values);
                sm = c.softmin;
            }
            Mode::Discrete => {
                for b in &reach {
                    h.push(b.value(&p)?);
                }
                for &j in plan.delta(phase.task_index) {
                    let mut row = fcbf_row(&reach[j], plant.qp_system, &p, scenario.fcbf)?;
                    row.label = format!("fcbf:{}", reach_names[j]);
                    rows.push(row);
                }
                let weighted: Vec<f64> = phase.alpha.iter().zip(&h).map(|(a, h)| a * h).collect();
                sm = softmin(&weighted)?;
            }
        }
        let reach_rows = rows.len();
        let mut safety_rows = safety
            .iter()
            .map(|b| zcbf_row(b, plant.qp_system, &p, scenario.safety_kappa))
            .collect::<Result<Vec<_>, _>>()?;
        label_rows(&mut safety_rows, &safety_names, "zcbf");
        for b in &safety {
            h.push(b.value(&p)?);
        }
        rows.extend(safety_rows);

        let problem = QpProblem { constraints: rows, bound: scenario.input_bound, dim: plant.qp_system.input_dim() };
        let outcome = match solve(&problem, reach_rows, scenario.slack_on_infeasible, t, k, &mut log.events) {
            Ok(o) => o,
            Err(Error::Infeasible(message)) => {
                log.events.push(Event::Infeasible {
                    t,
                    step: k,
                    state: x.clone(),
                    controlled_point: p.clone(),
                    rows: problem.constraints.iter().map(RowDump::from).collect(),
                    bound: problem.bound,
                    message,
                });
                log.termination = Termination::Infeasible;
                return Ok(log);
            }
            Err(e) => return Err(e.into()),
        };
        let applied = plant.applied(&x, &outcome.u);

        log.records.push(StepRecord {
            t,
            state: x.clone(),
            u: outcome.u,
            applied: applied.clone(),
            alpha: phase.alpha.clone(),
            alpha_dot: phase.alpha_dot.clone(),
            h,
            softmin: sm,
            active_set: outcome.active_set,
            qp_seconds: outcome.seconds,
            task_index: phase.task_index,
            phase: phase.phase,
        });

        if done_at.is_some_and(|d| k >= d + tail_steps) {
            break;
        }
        if k < last_step {
            x = integrate(plant.system, &x, &applied, dt, scenario.integrator)?;
        }
    }
    if done_at.is_some() {
        log.termination = Termination::Completed;
    }
    Ok(log)
}
