//! Task sequencing: which reachability barriers are weighted in, and how the
//! weights move when one target is reached and the next one takes over.
//!
//! The phase machine alternates between a reachability phase, where the
//! current target's barriers carry weight 1 and every other barrier weight 0,
//! and a transition phase, where the current target's weights ramp down with
//! `cos^2` while the next target's ramp up with `sin^2`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::Barrier;

/// Completion threshold on the transition weights.
pub const ALPHA_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    pub name: String,
    /// Barrier indices whose superlevel sets intersect to this target.
    pub barriers: Vec<usize>,
}

/// Map from targets to the reachability barriers that characterize them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityMap {
    targets: Vec<TargetSet>,
    barrier_count: usize,
}

impl ReachabilityMap {
    pub fn new(barrier_count: usize, targets: Vec<TargetSet>) -> Result<Self> {
        for t in &targets {
            if t.barriers.is_empty() {
                return Err(Error::Config(format!("target `{}` has no barriers", t.name)));
            }
            if let Some(i) = t.barriers.iter().find(|i| **i >= barrier_count) {
                return Err(Error::Config(format!(
                    "target `{}` references barrier {i} but only {barrier_count} exist",
                    t.name
                )));
            }
        }
        Ok(Self { targets, barrier_count })
    }

    pub fn barrier_count(&self) -> usize {
        self.barrier_count
    }

    pub fn targets(&self) -> &[TargetSet] {
        &self.targets
    }

    pub fn indices(&self, target: usize) -> &[usize] {
        &self.targets[target].barriers
    }

    /// `true` iff every barrier of `target` is nonnegative at `state`.
    pub fn contains(&self, target: usize, barriers: &[Barrier], state: &[f64]) -> Result<bool> {
        for &j in self.indices(target) {
            if !barriers[j].contains(state)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Reach `target` while keeping every barrier in `safety` nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub target: usize,
    pub safety: Vec<usize>,
}

/// An ordered task list over one reachability map.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPlan {
    pub map: ReachabilityMap,
    pub tasks: Vec<Task>,
}

impl TaskPlan {
    pub fn new(map: ReachabilityMap, tasks: Vec<Task>) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::Config("task sequence is empty".into()));
        }
        for t in &tasks {
            if t.target >= map.targets().len() {
                return Err(Error::Config(format!("task references unknown target {}", t.target)));
            }
        }
        for w in tasks.windows(2) {
            if w[0] == w[1] {
                let name = &map.targets()[w[0].target].name;
                return Err(Error::Config(format!("consecutive tasks must differ (`{name}` repeats)")));
            }
        }
        Ok(Self { map, tasks })
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Barrier indices of the target of task `i`.
    pub fn delta(&self, i: usize) -> &[usize] {
        self.map.indices(self.tasks[i].target)
    }

    pub fn target_name(&self, i: usize) -> &str {
        &self.map.targets()[self.tasks[i].target].name
    }
}

/// `kappa_up(tau) = sin^2(s tau)` and `kappa_down(tau) = cos^2(s tau)` with
/// `s = pi / (2 duration)`, held at 1 and 0 once `tau >= duration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionFunctions {
    duration: f64,
}

impl TransitionFunctions {
    pub fn new(duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::Config(format!("transition duration must be positive, got {duration}")));
        }
        Ok(Self { duration })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    fn rate(&self) -> f64 {
        FRAC_PI_2 / self.duration
    }

    pub fn kappa_up(&self, tau: f64) -> f64 {
        if tau >= self.duration {
            1.0
        } else {
            (self.rate() * tau.max(0.0)).sin().powi(2)
        }
    }

    pub fn kappa_down(&self, tau: f64) -> f64 {
        if tau >= self.duration {
            0.0
        } else {
            (self.rate() * tau.max(0.0)).cos().powi(2)
        }
    }

    /// `d/dtau kappa_up = s sin(2 s tau)`.
    pub fn kappa_up_rate(&self, tau: f64) -> f64 {
        if tau >= self.duration || tau <= 0.0 {
            0.0
        } else {
            self.rate() * (2.0 * self.rate() * tau).sin()
        }
    }

    pub fn kappa_down_rate(&self, tau: f64) -> f64 {
        -self.kappa_up_rate(tau)
    }

    /// Supremum of `|d kappa / dtau|` over all `tau`.
    pub fn max_rate(&self) -> f64 {
        self.rate()
    }
}

impl Default for TransitionFunctions {
    /// The unscaled `sin^2` / `cos^2` pair, complete at `tau = pi / 2`.
    fn default() -> Self {
        Self { duration: FRAC_PI_2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Reaching,
    Transitioning,
    /// The last target has been reached; weights stay frozen.
    Done,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub task_index: usize,
    pub phase: Phase,
    /// Time the current task's target was entered (meaningful outside `Reaching`).
    pub arrival_time: f64,
    pub alpha: Vec<f64>,
    pub alpha_dot: Vec<f64>,
}

impl PhaseState {
    /// Reachability phase of the first task.
    pub fn initial(plan: &TaskPlan) -> Self {
        let m = plan.map.barrier_count();
        Self {
            task_index: 0,
            phase: Phase::Reaching,
            arrival_time: 0.0,
            alpha: indicator(m, plan.delta(0)),
            alpha_dot: vec![0.0; m],
        }
    }
}

fn indicator(m: usize, set: &[usize]) -> Vec<f64> {
    let mut a = vec![0.0; m];
    for &j in set {
        a[j] = 1.0;
    }
    a
}

/// Transition weights and their time derivatives at time `t`.
///
/// Barriers shared by the current and the next target take the ramp-up
/// profile so they never lose weight.
pub fn compute_alpha(
    t: f64,
    phase: &PhaseState,
    plan: &TaskPlan,
    tf: &TransitionFunctions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = plan.map.barrier_count();
    match phase.phase {
        Phase::Reaching | Phase::Done => {
            let i = phase.task_index.min(plan.len() - 1);
            Ok((indicator(m, plan.delta(i)), vec![0.0; m]))
        }
        Phase::Transitioning => {
            let i = phase.task_index;
            if i + 1 >= plan.len() {
                return Err(Error::Sequencing(format!("task {i} is the last task and has no successor")));
            }
            if t < phase.arrival_time {
                return Err(Error::Sequencing(format!(
                    "time {t} precedes the recorded arrival {}",
                    phase.arrival_time
                )));
            }
            let tau = t - phase.arrival_time;
            let mut alpha = vec![0.0; m];
            let mut alpha_dot = vec![0.0; m];
            for &j in plan.delta(i) {
                alpha[j] = tf.kappa_down(tau);
                alpha_dot[j] = tf.kappa_down_rate(tau);
            }
            for &l in plan.delta(i + 1) {
                alpha[l] = tf.kappa_up(tau);
                alpha_dot[l] = tf.kappa_up_rate(tau);
            }
            Ok((alpha, alpha_dot))
        }
    }
}

/// `true` once every next-target weight reached 1 and every weight that is
/// only in the current target reached 0.
pub fn transition_complete(alpha: &[f64], current: &[usize], next: &[usize]) -> bool {
    next.iter().all(|&k| alpha[k] >= 1.0 - ALPHA_EPS)
        && current.iter().filter(|j| !next.contains(j)).all(|&j| alpha[j] <= ALPHA_EPS)
}

/// One step of the phase machine at `(t, state)`; returns the updated phase
/// with `alpha` and `alpha_dot` evaluated at `t`.
///
/// Membership of the current target is only checked in the reachability
/// phase; leaving the target during a transition is not re-checked.
pub fn advance_phase(
    phase: &PhaseState,
    state: &[f64],
    t: f64,
    plan: &TaskPlan,
    barriers: &[Barrier],
    tf: &TransitionFunctions,
) -> Result<PhaseState> {
    let mut next = phase.clone();
    let i = phase.task_index;
    match phase.phase {
        Phase::Reaching => {
            if plan.map.contains(plan.tasks[i].target, barriers, state)? {
                next.arrival_time = t;
                next.phase = if i + 1 < plan.len() { Phase::Transitioning } else { Phase::Done };
            }
        }
        Phase::Transitioning => {
            let (alpha, _) = compute_alpha(t, phase, plan, tf)?;
            if transition_complete(&alpha, plan.delta(i), plan.delta(i + 1)) {
                next.task_index = i + 1;
                next.phase = Phase::Reaching;
            }
        }
        Phase::Done => {}
    }
    let (alpha, alpha_dot) = compute_alpha(t, &next, plan, tf)?;
    next.alpha = alpha;
    next.alpha_dot = alpha_dot;
    Ok(next)
}
