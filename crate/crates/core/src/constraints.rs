//! QP rows built from barrier functions.
//!
//! All three row kinds share the form `L_g h . u >= b`:
//!
//! * finite-time (FCBF): `b = -L_f h - gamma sign(h) |h|^rho`
//! * zeroing (ZCBF): `b = -L_f h - mu(h)`
//! * composite: the time-weighted sum over reachability barriers,
//!   `sum a_i L_g h_i . u >= -sum a_i L_f h_i - sum h_i a_i' - gamma tanh(softmin(a_i h_i))`
//!   where `a_i` are the transition weights.

use crate::dynamics::ControlAffineSystem;
use crate::error::{Error, Result};
use crate::geometry::{softmin, Barrier};
use crate::qp::HalfplaneConstraint;

/// Strictly increasing `mu` with `mu(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassKappa {
    /// `gamma h`
    Linear { gamma: f64 },
    /// `gamma h^3`
    Cubic { gamma: f64 },
    /// `gamma sign(h) |h|^q`; equals `gamma h^q` for odd integer `q`.
    SignedPower { gamma: f64, exponent: f64 },
}

impl ClassKappa {
    pub fn linear(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self::Linear { gamma })
    }

    pub fn cubic(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self::Cubic { gamma })
    }

    pub fn signed_power(gamma: f64, exponent: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::Config(format!("class-kappa exponent must be positive, got {exponent}")));
        }
        Ok(Self::SignedPower { gamma, exponent })
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            Self::Linear { gamma } | Self::Cubic { gamma } | Self::SignedPower { gamma, .. } => gamma,
        }
    }

    pub fn eval(&self, h: f64) -> f64 {
        match *self {
            Self::Linear { gamma } => gamma * h,
            Self::Cubic { gamma } => gamma * h * h * h,
            Self::SignedPower { gamma, exponent } => gamma * signum0(h) * h.abs().powf(exponent),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("gamma must be positive, got {gamma}")))
    }
}

/// `sign` with `sign(0) = 0`.
fn signum0(h: f64) -> f64 {
    if h == 0.0 {
        0.0
    } else {
        h.signum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcbfParams {
    gamma: f64,
    rho: f64,
}

impl FcbfParams {
    pub fn new(gamma: f64, rho: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::Config(format!("rho must lie in [0, 1), got {rho}")));
        }
        Ok(Self { gamma, rho })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `gamma sign(h) |h|^rho`, with `|0|^0` taken as irrelevant since `sign(0) = 0`.
    pub fn forcing(&self, h: f64) -> f64 {
        self.gamma * signum0(h) * h.abs().powf(self.rho)
    }
}

impl Default for FcbfParams {
    fn default() -> Self {
        Self { gamma: 1.0, rho: 0.5 }
    }
}

fn lie_row(barrier: &Barrier, system: ControlAffineSystem, state: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
    let v = barrier.eval(state)?;
    let (lf, lg) = system.lie_derivatives(&v.gradient, state)?;
    Ok((v.value, lf, lg))
}

/// Finite-time convergence row for a target barrier.
pub fn fcbf_row(
    barrier: &Barrier,
    system: ControlAffineSystem,
    state: &[f64],
    params: FcbfParams,
) -> Result<HalfplaneConstraint> {
    let (h, lf, lg) = lie_row(barrier, system, state)?;
    Ok(HalfplaneConstraint::new(lg, -lf - params.forcing(h), "fcbf"))
}

/// Forward-invariance row for a safety barrier.
pub fn zcbf_row(
    barrier: &Barrier,
    system: ControlAffineSystem,
    state: &[f64],
    mu: ClassKappa,
) -> Result<HalfplaneConstraint> {
    let (h, lf, lg) = lie_row(barrier, system, state)?;
    Ok(HalfplaneConstraint::new(lg, -lf - mu.eval(h), "zcbf"))
}

/// Which indices enter the softmin of the composite row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SoftminSet {
    /// Every barrier, including those with zero weight (each adds `exp(0) = 1`).
    #[default]
    All,
    /// Only barriers with positive weight; falls back to all when none is positive.
    ActiveOnly,
}

#[derive(Debug, Clone, Copy)]
pub struct CompositeContext<'a> {
    pub barriers: &'a [Barrier],
    pub alpha: &'a [f64],
    pub alpha_dot: &'a [f64],
    pub gamma: f64,
    pub softmin_set: SoftminSet,
}

impl CompositeContext<'_> {
    fn validate(&self) -> Result<()> {
        let m = self.barriers.len();
        if m == 0 {
            return Err(Error::Config("composite row needs at least one barrier".into()));
        }
        if self.alpha.len() != m || self.alpha_dot.len() != m {
            return Err(Error::Config(format!(
                "alpha ({}) and alpha_dot ({}) must match the {m} barriers",
                self.alpha.len(),
                self.alpha_dot.len()
            )));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Config(format!("alpha entries must lie in [0, 1], got {a}")));
        }
        crate::error::ensure_finite("alpha_dot", self.alpha_dot)?;
        check_gamma(self.gamma)
    }
}

/// The composite row plus the quantities the harness logs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRow {
    pub row: HalfplaneConstraint,
    /// `softmin_i(alpha_i h_i)` over the configured index set.
    pub softmin: f64,
    /// `h_i(state)` for each barrier.
    pub values: Vec<f64>,
}

pub fn composite_row(
    ctx: &CompositeContext<'_>,
    system: ControlAffineSystem,
    state: &[f64],
) -> Result<CompositeRow> {
    ctx.validate()?;
    let mut a = vec![0.0; system.input_dim()];
    let mut b = 0.0;
    let mut values = Vec::with_capacity(ctx.barriers.len());
    for ((barrier, &alpha), &alpha_dot) in ctx.barriers.iter().zip(ctx.alpha).zip(ctx.alpha_dot) {
        let (h, lf, lg) = lie_row(barrier, system, state)?;
        for (ai, gi) in a.iter_mut().zip(&lg) {
            *ai += alpha * gi;
        }
        b -= alpha * lf + h * alpha_dot;
        values.push(h);
    }
    let weighted: Vec<f64> = match ctx.softmin_set {
        SoftminSet::All => values.iter().zip(ctx.alpha).map(|(h, a)| a * h).collect(),
        SoftminSet::ActiveOnly => {
            let active: Vec<f64> = values
                .iter()
                .zip(ctx.alpha)
                .filter(|(_, a)| **a > 0.0)
                .map(|(h, a)| a * h)
                .collect();
            if active.is_empty() {
                values.iter().zip(ctx.alpha).map(|(h, a)| a * h).collect()
            } else {
                active
            }
        }
    };
    let sm = softmin(&weighted)?;
    b -= ctx.gamma * sm.tanh();
    Ok(CompositeRow { row: HalfplaneConstraint::new(a, b, "composite"), softmin: sm, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{single_integrator, unicycle};
    use crate::geometry::{EllipsoidBarrier, SuperellipseObstacleBarrier};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_disk() -> Barrier {
        EllipsoidBarrier::new([0.0, 0.0], [1.0, 1.0]).unwrap().into()
    }

    #[test]
    fn fcbf_row_examples() {
        let p = FcbfParams::new(1.0, 0.5).unwrap();
        let r = fcbf_row(&unit_disk(), single_integrator(), &[2.0, 0.0], p).unwrap();
        assert_eq!(r.a, vec![-4.0, 0.0]);
        assert_relative_eq!(r.b, 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r.b, 1.7321, epsilon = 1e-4);

        // boundary: b = 0
        let r = fcbf_row(&unit_disk(), single_integrator(), &[0.0, 1.0], p).unwrap();
        assert_eq!(r.b, 0.0);

        // rho = 0 outside: b = gamma regardless of |h|
        let p0 = FcbfParams::new(2.5, 0.0).unwrap();
        for x in [1.5, 3.0, 10.0] {
            let r = fcbf_row(&unit_disk(), single_integrator(), &[x, 0.0], p0).unwrap();
            assert_eq!(r.b, 2.5);
        }
    }

    #[test]
    fn fcbf_params_are_validated() {
        assert!(FcbfParams::new(0.0, 0.5).is_err());
        assert!(FcbfParams::new(1.0, 1.0).is_err());
        assert!(FcbfParams::new(1.0, -0.1).is_err());
        assert!(FcbfParams::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn zcbf_row_examples() {
        let mu = ClassKappa::linear(2.0).unwrap();
        let r = zcbf_row(&unit_disk(), single_integrator(), &[0.5, 0.0], mu).unwrap();
        assert_eq!(r.a, vec![-1.0, 0.0]);
        assert_relative_eq!(r.b, -1.5, epsilon = 1e-15);

        let r = zcbf_row(&unit_disk(), single_integrator(), &[1.0, 0.0], mu).unwrap();
        assert_eq!(r.b, 0.0);

        // cubic safety row on the unicycle: b = -gamma h^3 since L_f h = 0
        let obstacle: Barrier =
            SuperellipseObstacleBarrier::new([0.0, 0.0], [0.7, 0.2], std::f64::consts::FRAC_PI_2, 6, 1.0)
                .unwrap()
                .into();
        let x = [0.7, 0.0, 0.3];
        let h = obstacle.value(&x).unwrap();
        let r = zcbf_row(&obstacle, unicycle(), &x, ClassKappa::cubic(1.5).unwrap()).unwrap();
        assert_relative_eq!(r.b, -1.5 * h.powi(3), epsilon = 1e-12);
        let grad = obstacle.eval(&x).unwrap().gradient;
        assert_relative_eq!(r.a[0], grad[0] * 0.3f64.cos() + grad[1] * 0.3f64.sin(), epsilon = 1e-15);
        assert_eq!(r.a[1], 0.0);
    }

    #[test]
    fn class_kappa_shapes() {
        let c = ClassKappa::cubic(2.0).unwrap();
        assert_eq!(c.eval(-2.0), -16.0);
        assert_eq!(c.eval(0.0), 0.0);
        let p = ClassKappa::signed_power(1.0, 5.0).unwrap();
        assert_eq!(p.eval(-2.0), -32.0);
        assert!(ClassKappa::linear(-1.0).is_err());
        assert!(ClassKappa::signed_power(1.0, 0.0).is_err());
    }

    #[test]
    fn single_barrier_composite_is_the_plain_softmin_row() {
        let barriers = [unit_disk()];
        let ctx = CompositeContext {
            barriers: &barriers,
            alpha: &[1.0],
            alpha_dot: &[0.0],
            gamma: 1.7,
            softmin_set: SoftminSet::All,
        };
        let x = [1.7, -0.4];
        let c = composite_row(&ctx, single_integrator(), &x).unwrap();
        let v = unit_disk().eval(&x).unwrap();
        // sum over P = {1}: grad h . u >= -gamma tanh(-ln exp(-h)) = -gamma tanh(h)
        assert_eq!(c.row.a, v.gradient);
        assert!((c.row.b - (-1.7 * v.value.tanh())).abs() <= 1e-12);
        assert_eq!(c.softmin, v.value);
    }

    #[test]
    fn all_zero_weights_give_an_unsatisfiable_row() {
        let barriers = [
            unit_disk(),
            EllipsoidBarrier::new([2.0, 0.0], [0.5, 0.5]).unwrap().into(),
        ];
        let ctx = CompositeContext {
            barriers: &barriers,
            alpha: &[0.0, 0.0],
            alpha_dot: &[0.0, 0.0],
            gamma: 1.0,
            softmin_set: SoftminSet::All,
        };
        let c = composite_row(&ctx, single_integrator(), &[5.0, 5.0]).unwrap();
        assert_eq!(c.row.a, vec![0.0, 0.0]);
        // -gamma tanh(-ln 2) = tanh(ln 2) = 0.6: the row reads 0 . u >= 0.6
        assert_relative_eq!(c.row.b, -(-(2f64.ln())).tanh(), epsilon = 1e-15);
        assert_relative_eq!(c.row.b, 0.6, epsilon = 1e-15);
        let p = crate::qp::QpProblem::new(2, 10.0).with(c.row);
        assert!(matches!(crate::qp::solve_min_norm(&p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn exchange_term_matches_time_derivative() {
        let barriers: [Barrier; 2] = [
            EllipsoidBarrier::new([-1.0, 0.0], [0.4, 0.3]).unwrap().into(),
            EllipsoidBarrier::new([1.2, 0.5], [0.3, 0.3]).unwrap().into(),
        ];
        let x = [-0.6, 0.1];
        let tau = std::f64::consts::FRAC_PI_4;
        let alpha_at = |t: f64| [t.cos().powi(2), t.sin().powi(2)];
        let weighted_sum = |t: f64| {
            let a = alpha_at(t);
            a[0] * barriers[0].value(&x).unwrap() + a[1] * barriers[1].value(&x).unwrap()
        };
        let step = 1e-6;
        let fd = (weighted_sum(tau + step) - weighted_sum(tau - step)) / (2.0 * step);

        let alpha = alpha_at(tau);
        assert_relative_eq!(alpha[0], 0.5, epsilon = 1e-15);
        let ctx = CompositeContext {
            barriers: &barriers,
            alpha: &alpha,
            alpha_dot: &[-1.0, 1.0],
            gamma: 0.8,
            softmin_set: SoftminSet::All,
        };
        let c = composite_row(&ctx, single_integrator(), &x).unwrap();
        // single integrator: L_f h = 0, so b + gamma tanh(softmin) = -sum h_i alpha_i'
        let exchange = -(c.row.b + 0.8 * c.softmin.tanh());
        assert!((exchange - fd).abs() < 1e-8, "{exchange} vs {fd}");
        assert_relative_eq!(exchange, c.values[1] - c.values[0], epsilon = 1e-12);
    }

    #[test]
    fn active_only_softmin_drops_zero_weights() {
        let barriers = [
            unit_disk(),
            EllipsoidBarrier::new([3.0, 0.0], [0.5, 0.5]).unwrap().into(),
            EllipsoidBarrier::new([0.0, 3.0], [0.5, 0.5]).unwrap().into(),
        ];
        let x = [0.2, 0.1];
        let mk = |set| CompositeContext {
            barriers: &barriers,
            alpha: &[1.0, 0.0, 0.0],
            alpha_dot: &[0.0; 3],
            gamma: 1.0,
            softmin_set: set,
        };
        let lit = composite_row(&mk(SoftminSet::All), single_integrator(), &x).unwrap();
        let act = composite_row(&mk(SoftminSet::ActiveOnly), single_integrator(), &x).unwrap();
        let h = unit_disk().value(&x).unwrap();
        assert_eq!(act.softmin, h);
        let brute = -((-h).exp() + 2.0).ln();
        assert_relative_eq!(lit.softmin, brute, epsilon = 1e-12);
        assert_eq!(lit.row.a, act.row.a);
    }

    #[test]
    fn composite_context_is_validated() {
        let barriers = [unit_disk()];
        let bad_alpha = CompositeContext {
            barriers: &barriers,
            alpha: &[1.5],
            alpha_dot: &[0.0],
            gamma: 1.0,
            softmin_set: SoftminSet::All,
        };
        assert!(composite_row(&bad_alpha, single_integrator(), &[0.0, 0.0]).is_err());
        let short = CompositeContext { alpha: &[], ..bad_alpha };
        assert!(composite_row(&short, single_integrator(), &[0.0, 0.0]).is_err());
    }

    fn pair() -> [Barrier; 3] {
        [
            EllipsoidBarrier::new([-1.0, 0.3], [0.4, 0.3]).unwrap().into(),
            EllipsoidBarrier::new([1.2, 0.5], [0.3, 0.6]).unwrap().into(),
            EllipsoidBarrier::new([0.0, -1.0], [0.5, 0.2]).unwrap().into(),
        ]
    }

    proptest! {
        #[test]
        fn fcbf_matches_zcbf_with_signed_power(
            x in -3.0f64..3.0, y in -3.0f64..3.0, phi in -3.0f64..3.0,
            gamma in 0.1f64..5.0, rho in 0.01f64..0.99
        ) {
            for b in pair() {
                let f = fcbf_row(&b, unicycle(), &[x, y, phi], FcbfParams::new(gamma, rho).unwrap()).unwrap();
                let z = zcbf_row(&b, unicycle(), &[x, y, phi], ClassKappa::signed_power(gamma, rho).unwrap()).unwrap();
                prop_assert_eq!(&f.a, &z.a);
                prop_assert!((f.b - z.b).abs() <= 1e-12 * (1.0 + f.b.abs()));
            }
        }

        #[test]
        fn forcing_term_is_bounded_by_gamma(
            x in -3.0f64..3.0, y in -3.0f64..3.0,
            a0 in 0.0f64..=1.0, a1 in 0.0f64..=1.0, a2 in 0.0f64..=1.0,
            d0 in -2.0f64..2.0, d1 in -2.0f64..2.0, d2 in -2.0f64..2.0,
            gamma in 0.1f64..10.0, active in any::<bool>()
        ) {
            let barriers = pair();
            let alpha = [a0, a1, a2];
            let alpha_dot = [d0, d1, d2];
            let ctx = CompositeContext {
                barriers: &barriers, alpha: &alpha, alpha_dot: &alpha_dot, gamma,
                softmin_set: if active { SoftminSet::ActiveOnly } else { SoftminSet::All },
            };
            let c = composite_row(&ctx, single_integrator(), &[x, y]).unwrap();
            let exchange: f64 = c.values.iter().zip(&alpha_dot).map(|(h, d)| h * d).sum();
            prop_assert!((c.row.b + exchange).abs() <= gamma + 1e-12 * (1.0 + exchange.abs()));
        }

        #[test]
        fn one_hot_composite_shares_the_fcbf_normal(
            x in -3.0f64..3.0, y in -3.0f64..3.0, phi in -3.0f64..3.0, j in 0usize..3
        ) {
            let barriers = pair();
            let mut alpha = [0.0; 3];
            alpha[j] = 1.0;
            let ctx = CompositeContext {
                barriers: &barriers, alpha: &alpha, alpha_dot: &[0.0; 3], gamma: 1.0,
                softmin_set: SoftminSet::All,
            };
            let state = [x, y, phi];
            let c = composite_row(&ctx, unicycle(), &state).unwrap();
            let f = fcbf_row(&barriers[j], unicycle(), &state, FcbfParams::default()).unwrap();
            prop_assert_eq!(&c.row.a, &f.a);
            // inactive indices contribute exp(0) each to the softmin
            let h = barriers[j].value(&state).unwrap();
            let expect = -((-h).exp() + 2.0).ln();
            prop_assert!((c.softmin - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            prop_assert!((c.row.b + expect.tanh()).abs() <= 1e-12);
        }
    }
}
