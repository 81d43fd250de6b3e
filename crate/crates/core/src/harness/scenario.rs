//! Scenario files: strict JSON, versioned by a `schema` field.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::constraints::{ClassKappa, FcbfParams, SoftminSet};
use crate::dynamics::{ControlAffineSystem, IntegrationMethod, NidConfig};
use crate::geometry::{Barrier, EllipsoidBarrier, HalfplaneBarrier, SuperellipseObstacleBarrier};
use crate::scheduler::{ReachabilityMap, TargetSet, Task, TaskPlan, TransitionFunctions};

pub const SCHEMA: &str = "cbf-transit/scenario/v1";

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub system: SystemSpec,
    pub workspace: WorkspaceSpec,
    pub reach_barriers: Vec<BarrierSpec>,
    #[serde(default)]
    pub safety_barriers: Vec<BarrierSpec>,
    pub targets: Vec<TargetSpec>,
    pub tasks: Vec<String>,
    #[serde(default)]
    pub fcbf: FcbfSpec,
    #[serde(default)]
    pub safety_kappa: KappaSpec,
    #[serde(default)]
    pub composite: CompositeSpec,
    #[serde(default)]
    pub transition: TransitionSpec,
    pub input_bound: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_tail")]
    pub tail: f64,
    pub initial_state: Vec<f64>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub slack_on_infeasible: bool,
}

fn default_dt() -> f64 {
    1e-2
}

fn default_tail() -> f64 {
    1.0
}

fn default_lookahead() -> f64 {
    NidConfig::DEFAULT_LOOKAHEAD
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    SingleIntegrator,
    Unicycle {
        #[serde(default = "default_lookahead")]
        nid_lookahead: f64,
        #[serde(default)]
        control: ControlPoint,
    },
}

/// How the unicycle QP is posed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlPoint {
    /// QP over the planar velocity of the NID point, mapped to `(v, omega)`.
    #[default]
    Nid,
    /// QP over `(v, omega)` directly with `g(x)` of the unicycle.
    Direct,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSpec {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum BarrierSpec {
    Ellipsoid { name: String, center: [f64; 2], semi_axes: [f64; 2] },
    Superellipse {
        name: String,
        center: [f64; 2],
        sigma: [f64; 2],
        rotation: f64,
        exponent: u32,
        offset: f64,
    },
    Halfplane { name: String, normal: [f64; 2], offset: f64 },
}

impl BarrierSpec {
    fn name(&self) -> &str {
        match self {
            Self::Ellipsoid { name, .. } | Self::Superellipse { name, .. } | Self::Halfplane { name, .. } => name,
        }
    }

    fn build(&self) -> crate::Result<Barrier> {
        Ok(match *self {
            Self::Ellipsoid { center, semi_axes, .. } => EllipsoidBarrier::new(center, semi_axes)?.into(),
            Self::Superellipse { center, sigma, rotation, exponent, offset, .. } => {
                SuperellipseObstacleBarrier::new(center, sigma, rotation, exponent, offset)?.into()
            }
            Self::Halfplane { normal, offset, .. } => HalfplaneBarrier::new(normal, offset)?.into(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub name: String,
    pub barriers: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcbfSpec {
    pub gamma: f64,
    pub rho: f64,
}

impl Default for FcbfSpec {
    fn default() -> Self {
        Self { gamma: 1.0, rho: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KappaSpec {
    Linear { gamma: f64 },
    Cubic { gamma: f64 },
    Power { gamma: f64, exponent: f64 },
}

impl Default for KappaSpec {
    fn default() -> Self {
        Self::Cubic { gamma: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftminSpec {
    #[default]
    All,
    ActiveOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSpec {
    pub gamma: f64,
    #[serde(default)]
    pub softmin: SoftminSpec,
}

impl Default for CompositeSpec {
    fn default() -> Self {
        Self { gamma: 1.0, softmin: SoftminSpec::All }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub duration: f64,
}

impl Default for TransitionSpec {
    fn default() -> Self {
        Self { duration: FRAC_PI_2 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorSpec {
    Euler,
    #[default]
    Rk4,
}

// ---------------------------------------------------------------------------
// Validated scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum SystemConfig {
    SingleIntegrator,
    Unicycle { nid: NidConfig, control: ControlPoint },
}

impl SystemConfig {
    pub fn plant(&self) -> ControlAffineSystem {
        match self {
            Self::SingleIntegrator => ControlAffineSystem::SingleIntegrator,
            Self::Unicycle { .. } => ControlAffineSystem::Unicycle,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedBarrier {
    pub name: String,
    pub barrier: Barrier,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workspace {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Workspace {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// A fully validated simulation setup. Fields are public so callers can
/// override them (e.g. from CLI flags); [`Scenario::validate`] re-checks the
/// scalar settings and is called again by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub system: SystemConfig,
    pub workspace: Workspace,
    pub reach_barriers: Vec<NamedBarrier>,
    pub safety_barriers: Vec<NamedBarrier>,
    pub plan: TaskPlan,
    pub fcbf: FcbfParams,
    pub safety_kappa: ClassKappa,
    pub composite_gamma: f64,
    pub softmin_set: SoftminSet,
    pub transition: TransitionFunctions,
    pub input_bound: f64,
    pub dt: f64,
    pub t_max: f64,
    pub tail: f64,
    pub initial_state: Vec<f64>,
    pub integrator: IntegrationMethod,
    pub slack_on_infeasible: bool,
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Validation(msg.into())
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(HarnessError::Parse)?;
        Self::from_file(file)
    }

    /// Scenarios shipped with the crate, by name.
    pub fn bundled(name: &str) -> Result<Self, HarnessError> {
        let text = match name {
            "motivating_example" => include_str!("../../scenarios/motivating_example.json"),
            "robotarium_replication" => include_str!("../../scenarios/robotarium_replication.json"),
            "obstacle_stress" => include_str!("../../scenarios/obstacle_stress.json"),
            "fcbf_line" => include_str!("../../scenarios/fcbf_line.json"),
            other => return Err(invalid(format!("no bundled scenario named `{other}`"))),
        };
        Self::from_json(text)
    }

    pub const BUNDLED: [&'static str; 4] =
        ["motivating_example", "robotarium_replication", "obstacle_stress", "fcbf_line"];

    pub fn from_file(f: ScenarioFile) -> Result<Self, HarnessError> {
        if f.schema != SCHEMA {
            return Err(invalid(format!("unsupported schema `{}`, expected `{SCHEMA}`", f.schema)));
        }
        let system = match f.system {
            SystemSpec::SingleIntegrator => SystemConfig::SingleIntegrator,
            SystemSpec::Unicycle { nid_lookahead, control } => SystemConfig::Unicycle {
                nid: NidConfig::new(nid_lookahead).map_err(|e| invalid(e.to_string()))?,
                control,
            },
        };
        let [lo, hi] = [f.workspace.min, f.workspace.max];
        if !(lo.iter().chain(&hi).all(|v| v.is_finite()) && lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(invalid(format!("workspace must be a bounded box with min < max, got {lo:?}..{hi:?}")));
        }
        let build = |specs: &[BarrierSpec]| -> Result<Vec<NamedBarrier>, HarnessError> {
            specs
                .iter()
                .map(|s| {
                    s.build()
                        .map(|barrier| NamedBarrier { name: s.name().to_string(), barrier })
                        .map_err(|e| invalid(format!("barrier `{}`: {e}", s.name())))
                })
                .collect()
        };
        let reach_barriers = build(&f.reach_barriers)?;
        let safety_barriers = build(&f.safety_barriers)?;
        if reach_barriers.is_empty() {
            return Err(invalid("at least one reachability barrier is required"));
        }
        let mut names: Vec<&str> =
            reach_barriers.iter().chain(&safety_barriers).map(|b| b.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!("duplicate barrier name `{}`", w[0])));
        }

        let mut targets = Vec::with_capacity(f.targets.len());
        for t in &f.targets {
            if targets.iter().any(|x: &TargetSet| x.name == t.name) {
                return Err(invalid(format!("duplicate target name `{}`", t.name)));
            }
            let barriers = t
                .barriers
                .iter()
                .map(|b| {
                    reach_barriers.iter().position(|r| &r.name == b).ok_or_else(|| {
                        invalid(format!("target `{}` references unknown reachability barrier `{b}`", t.name))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            targets.push(TargetSet { name: t.name.clone(), barriers });
        }
        let map = ReachabilityMap::new(reach_barriers.len(), targets).map_err(|e| invalid(e.to_string()))?;
        let safety: Vec<usize> = (0..safety_barriers.len()).collect();
        let tasks = f
            .tasks
            .iter()
            .map(|name| {
                map.targets()
                    .iter()
                    .position(|t| &t.name == name)
                    .map(|target| Task { target, safety: safety.clone() })
                    .ok_or_else(|| invalid(format!("task references unknown target `{name}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let plan = TaskPlan::new(map, tasks).map_err(|e| invalid(e.to_string()))?;

        let fcbf = FcbfParams::new(f.fcbf.gamma, f.fcbf.rho).map_err(|e| invalid(format!("fcbf: {e}")))?;
        let safety_kappa = match f.safety_kappa {
            KappaSpec::Linear { gamma } => ClassKappa::linear(gamma),
            KappaSpec::Cubic { gamma } => ClassKappa::cubic(gamma),
            KappaSpec::Power { gamma, exponent } => ClassKappa::signed_power(gamma, exponent),
        }
        .map_err(|e| invalid(format!("safety_kappa: {e}")))?;
        let transition = TransitionFunctions::new(f.transition.duration)
            .map_err(|e| invalid(format!("transition: {e}")))?;

        let scenario = Scenario {
            name: f.name,
            system,
            workspace: Workspace { min: lo, max: hi },
            reach_barriers,
            safety_barriers,
            plan,
            fcbf,
            safety_kappa,
            composite_gamma: f.composite.gamma,
            softmin_set: match f.composite.softmin {
                SoftminSpec::All => SoftminSet::All,
                SoftminSpec::ActiveOnly => SoftminSet::ActiveOnly,
            },
            transition,
            input_bound: f.input_bound,
            dt: f.dt,
            t_max: f.t_max,
            tail: f.tail,
            initial_state: f.initial_state,
            integrator: match f.integrator {
                IntegratorSpec::Euler => IntegrationMethod::Euler,
                IntegratorSpec::Rk4 => IntegrationMethod::Rk4,
            },
            slack_on_infeasible: f.slack_on_infeasible,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Re-checks the scalar settings and the initial state.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive = |what: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{what} must be positive and finite, got {v}")))
            }
        };
        positive("composite gamma", self.composite_gamma)?;
        positive("input_bound", self.input_bound)?;
        positive("dt", self.dt)?;
        positive("t_max", self.t_max)?;
        if !(self.tail >= 0.0 && self.tail.is_finite()) {
            return Err(invalid(format!("tail must be nonnegative, got {}", self.tail)));
        }
        if self.dt > self.t_max {
            return Err(invalid(format!("dt ({}) exceeds t_max ({})", self.dt, self.t_max)));
        }
        let n = self.system.plant().state_dim();
        if self.initial_state.len() != n {
            return Err(invalid(format!(
                "initial_state has {} entries, the system state has {n}",
                self.initial_state.len()
            )));
        }
        if !self.initial_state.iter().all(|v| v.is_finite()) {
            return Err(invalid("initial_state must be finite"));
        }
        let p = [self.initial_state[0], self.initial_state[1]];
        if !self.workspace.contains(p) {
            return Err(invalid(format!("initial position {p:?} lies outside the workspace")));
        }
        Ok(())
    }

    pub fn barrier_names(&self) -> impl Iterator<Item = &str> {
        self.reach_barriers.iter().chain(&self.safety_barriers).map(|b| b.name.as_str())
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    Scenario::from_json(&text)
}
