//! Control-affine models `x' = f(x) + g(x) u`, fixed-step integration and the
//! near-identity diffeomorphism (NID) that turns unicycle control into planar
//! velocity control of an off-center point.

use std::f64::consts::PI;

use crate::error::{ensure_finite, Error, Result};

/// The two closed-form control-affine systems the library knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlAffineSystem {
    /// `x' = u`, `x, u` in R^2.
    SingleIntegrator,
    /// `(x, y, phi)' = (v cos phi, v sin phi, omega)`, `u = (v, omega)`.
    Unicycle,
}

pub fn single_integrator() -> ControlAffineSystem {
    ControlAffineSystem::SingleIntegrator
}

pub fn unicycle() -> ControlAffineSystem {
    ControlAffineSystem::Unicycle
}

impl ControlAffineSystem {
    pub fn state_dim(self) -> usize {
        match self {
            Self::SingleIntegrator => 2,
            Self::Unicycle => 3,
        }
    }

    pub fn input_dim(self) -> usize {
        2
    }

    fn check_state(self, x: &[f64]) -> Result<()> {
        if x.len() != self.state_dim() {
            return Err(Error::Config(format!(
                "{self:?} expects a state of dimension {}, got {}",
                self.state_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Drift `f(x)`; zero for both models.
    pub fn drift(self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_state(x)?;
        Ok(vec![0.0; self.state_dim()])
    }

    /// Control matrix `g(x)`, row-major `state_dim x input_dim`.
    pub fn control_matrix(self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_state(x)?;
        Ok(match self {
            Self::SingleIntegrator => vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            Self::Unicycle => {
                let (s, c) = x[2].sin_cos();
                vec![vec![c, 0.0], vec![s, 0.0], vec![0.0, 1.0]]
            }
        })
    }

    /// `(L_f h, L_g h)` for a barrier gradient taken at `x`.
    pub fn lie_derivatives(self, gradient: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if gradient.len() != self.state_dim() {
            return Err(Error::Config(format!(
                "gradient has dimension {}, system state has {}",
                gradient.len(),
                self.state_dim()
            )));
        }
        let f = self.drift(x)?;
        let g = self.control_matrix(x)?;
        let lf = gradient.iter().zip(&f).map(|(a, b)| a * b).sum();
        let lg = (0..self.input_dim())
            .map(|j| gradient.iter().zip(&g).map(|(dh, row)| dh * row[j]).sum())
            .collect();
        Ok((lf, lg))
    }

    fn vector_field(self, x: &[f64], u: &[f64]) -> Vec<f64> {
        match self {
            Self::SingleIntegrator => vec![u[0], u[1]],
            Self::Unicycle => {
                let (s, c) = x[2].sin_cos();
                vec![u[0] * c, u[0] * s, u[1]]
            }
        }
    }

    fn wrap(self, mut x: Vec<f64>) -> Vec<f64> {
        if self == Self::Unicycle {
            x[2] = wrap_angle(x[2]);
        }
        x
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2 pi
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntegrationMethod {
    Euler,
    #[default]
    Rk4,
}

/// One zero-order-hold step of length `dt`.
pub fn integrate(
    system: ControlAffineSystem,
    state: &[f64],
    u: &[f64],
    dt: f64,
    method: IntegrationMethod,
) -> Result<Vec<f64>> {
    system.check_state(state)?;
    if u.len() != system.input_dim() {
        return Err(Error::Config(format!(
            "expected {} inputs, got {}",
            system.input_dim(),
            u.len()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("integration step must be positive, got {dt}")));
    }
    ensure_finite("state", state)?;
    ensure_finite("input", u)?;

    let axpy = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        x.iter().zip(k).map(|(a, b)| a + h * b).collect()
    };
    let next = match method {
        IntegrationMethod::Euler => axpy(state, &system.vector_field(state, u), dt),
        IntegrationMethod::Rk4 => {
            let k1 = system.vector_field(state, u);
            let k2 = system.vector_field(&axpy(state, &k1, dt / 2.0), u);
            let k3 = system.vector_field(&axpy(state, &k2, dt / 2.0), u);
            let k4 = system.vector_field(&axpy(state, &k3, dt), u);
            state
                .iter()
                .enumerate()
                .map(|(i, x)| x + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    };
    ensure_finite("integrated state", &next)?;
    Ok(system.wrap(next))
}

/// Look-ahead distance of the NID control point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NidConfig {
    lookahead: f64,
}

impl NidConfig {
    pub const DEFAULT_LOOKAHEAD: f64 = 0.05;

    pub fn new(lookahead: f64) -> Result<Self> {
        if !(lookahead > 0.0 && lookahead.is_finite()) {
            return Err(Error::Config(format!("NID look-ahead must be positive, got {lookahead}")));
        }
        Ok(Self { lookahead })
    }

    pub fn lookahead(&self) -> f64 {
        self.lookahead
    }
}

impl Default for NidConfig {
    fn default() -> Self {
        Self { lookahead: Self::DEFAULT_LOOKAHEAD }
    }
}

/// The point `(x + l cos phi, y + l sin phi)` steered by [`nid_to_unicycle`].
pub fn nid_point(state: &[f64], cfg: NidConfig) -> [f64; 2] {
    let (s, c) = state[2].sin_cos();
    [state[0] + cfg.lookahead * c, state[1] + cfg.lookahead * s]
}

/// Maps a desired velocity of the off-center point to `(v, omega)`.
pub fn nid_to_unicycle(planar_velocity: [f64; 2], phi: f64, cfg: NidConfig) -> (f64, f64) {
    let (s, c) = phi.sin_cos();
    let [vx, vy] = planar_velocity;
    (c * vx + s * vy, (-s * vx + c * vy) / cfg.lookahead)
}
