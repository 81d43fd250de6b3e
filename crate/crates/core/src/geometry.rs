//! Barrier functions over the planar workspace.
//!
//! Every barrier depends only on the planar position `(x, y)` but accepts the
//! full state of either system: `(x, y)` for the single integrator and
//! `(x, y, phi)` for the unicycle. Gradients always have the length of the
//! state passed in, with a zero entry for the heading.

use crate::error::{Error, Result};

/// `h(x)` together with `dh/dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierValue {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// `h(p) = 1 - (p - c)^T P (p - c)` with `P = diag(1 / a_i^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidBarrier {
    center: [f64; 2],
    semi_axes: [f64; 2],
}

impl EllipsoidBarrier {
    pub fn new(center: [f64; 2], semi_axes: [f64; 2]) -> Result<Self> {
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::Config(format!("ellipsoid center must be finite, got {center:?}")));
        }
        if !semi_axes.iter().all(|a| a.is_finite() && *a > 0.0) {
            return Err(Error::Config(format!(
                "ellipsoid semi-axes must be strictly positive, got {semi_axes:?}"
            )));
        }
        Ok(Self { center, semi_axes })
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn semi_axes(&self) -> [f64; 2] {
        self.semi_axes
    }

    /// The quadratic form `(p - c)^T P (p - c)`.
    pub fn quadratic_form(&self, p: [f64; 2]) -> f64 {
        (0..2)
            .map(|i| {
                let d = (p[i] - self.center[i]) / self.semi_axes[i];
                d * d
            })
            .sum()
    }

    fn eval_planar(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        let mut grad = [0.0; 2];
        for i in 0..2 {
            let a2 = self.semi_axes[i] * self.semi_axes[i];
            grad[i] = -2.0 * (p[i] - self.center[i]) / a2;
        }
        (1.0 - self.quadratic_form(p), grad)
    }
}

/// Rotated superellipse obstacle barrier, safe outside:
///
/// ```text
/// h(p) = || diag(1/sigma) R(-theta) (p - center) ||_p - offset
/// ```
///
/// `h < 0` strictly inside the obstacle, `h = 0` on its boundary and `h > 0`
/// outside. For even exponents the norm is continuously differentiable
/// everywhere except at the center itself, where the gradient is reported
/// as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperellipseObstacleBarrier {
    center: [f64; 2],
    sigma: [f64; 2],
    rotation: f64,
    exponent: u32,
    offset: f64,
}

impl SuperellipseObstacleBarrier {
    pub fn new(
        center: [f64; 2],
        sigma: [f64; 2],
        rotation: f64,
        exponent: u32,
        offset: f64,
    ) -> Result<Self> {
        if !center.iter().all(|c| c.is_finite()) || !rotation.is_finite() {
            return Err(Error::Config("superellipse center and rotation must be finite".into()));
        }
        if !sigma.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::Config(format!(
                "superellipse sigma must be strictly positive, got {sigma:?}"
            )));
        }
        if exponent < 2 || !exponent.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "superellipse exponent must be an even integer >= 2, got {exponent}"
            )));
        }
        if !(offset.is_finite() && offset > 0.0) {
            return Err(Error::Config(format!("superellipse offset must be positive, got {offset}")));
        }
        Ok(Self { center, sigma, rotation, exponent, offset })
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn sigma(&self) -> [f64; 2] {
        self.sigma
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Maps a workspace point into the obstacle's normalized frame.
    fn local(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = snapped_sin_cos(self.rotation);
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        // R(-theta) (p - center)
        let rx = c * dx + s * dy;
        let ry = -s * dx + c * dy;
        [rx / self.sigma[0], ry / self.sigma[1]]
    }

    /// Boundary point at parameter `t` in `[0, 2 pi)`, used for plotting.
    pub fn boundary_point(&self, t: f64) -> [f64; 2] {
        let e = 2.0 / self.exponent as f64;
        let zx = self.offset * t.cos().signum() * t.cos().abs().powf(e);
        let zy = self.offset * t.sin().signum() * t.sin().abs().powf(e);
        let (lx, ly) = (zx * self.sigma[0], zy * self.sigma[1]);
        let (s, c) = snapped_sin_cos(self.rotation);
        [self.center[0] + c * lx - s * ly, self.center[1] + s * lx + c * ly]
    }

    fn eval_planar(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        let z = self.local(p);
        let scale = z[0].abs().max(z[1].abs());
        if scale == 0.0 {
            return (-self.offset, [0.0; 2]);
        }
        let pe = self.exponent as i32;
        let sum: f64 = z.iter().map(|zi| (zi / scale).powi(pe)).sum();
        let norm = scale * sum.powf(1.0 / pe as f64);
        // dh/dz_i = sign(z_i) (|z_i| / norm)^(p-1)
        let dz = z.map(|zi| zi.signum() * (zi.abs() / norm).powi(pe - 1));
        // dz/dp = diag(1/sigma) R(-theta), so dh/dp = R(theta) diag(1/sigma) dh/dz
        let wx = dz[0] / self.sigma[0];
        let wy = dz[1] / self.sigma[1];
        let (s, c) = snapped_sin_cos(self.rotation);
        (norm - self.offset, [c * wx - s * wy, s * wx + c * wy])
    }
}

/// `sin_cos` with entries below 1e-15 snapped to zero so right-angle
/// rotations stay exact.
fn snapped_sin_cos(angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    (snap(s), snap(c))
}

/// Affine barrier `h(p) = w . p + offset`, a half-plane region.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfplaneBarrier {
    normal: [f64; 2],
    offset: f64,
}

impl HalfplaneBarrier {
    pub fn new(normal: [f64; 2], offset: f64) -> Result<Self> {
        if !normal.iter().all(|w| w.is_finite()) || !offset.is_finite() {
            return Err(Error::Config("half-plane barrier coefficients must be finite".into()));
        }
        if normal == [0.0, 0.0] {
            return Err(Error::Config("half-plane barrier normal must be nonzero".into()));
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> [f64; 2] {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn eval_planar(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        (self.normal[0] * p[0] + self.normal[1] * p[1] + self.offset, self.normal)
    }
}

/// A continuously differentiable barrier whose superlevel set `{h >= 0}` is a region.
#[derive(Debug, Clone, PartialEq)]
pub enum Barrier {
    Ellipsoid(EllipsoidBarrier),
    Superellipse(SuperellipseObstacleBarrier),
    Halfplane(HalfplaneBarrier),
}

impl From<EllipsoidBarrier> for Barrier {
    fn from(b: EllipsoidBarrier) -> Self {
        Barrier::Ellipsoid(b)
    }
}

impl From<SuperellipseObstacleBarrier> for Barrier {
    fn from(b: SuperellipseObstacleBarrier) -> Self {
        Barrier::Superellipse(b)
    }
}

impl From<HalfplaneBarrier> for Barrier {
    fn from(b: HalfplaneBarrier) -> Self {
        Barrier::Halfplane(b)
    }
}

impl Barrier {
    /// Evaluates `h` and its analytic gradient at `state`.
    pub fn eval(&self, state: &[f64]) -> Result<BarrierValue> {
        let p = planar(state)?;
        let (value, g) = match self {
            Barrier::Ellipsoid(b) => b.eval_planar(p),
            Barrier::Superellipse(b) => b.eval_planar(p),
            Barrier::Halfplane(b) => b.eval_planar(p),
        };
        let mut gradient = vec![0.0; state.len()];
        gradient[..2].copy_from_slice(&g);
        Ok(BarrierValue { value, gradient })
    }

    /// Value only; skips the gradient allocation.
    pub fn value(&self, state: &[f64]) -> Result<f64> {
        let p = planar(state)?;
        Ok(match self {
            Barrier::Ellipsoid(b) => b.eval_planar(p).0,
            Barrier::Superellipse(b) => b.eval_planar(p).0,
            Barrier::Halfplane(b) => b.eval_planar(p).0,
        })
    }

    /// `true` iff `h(state) >= 0`; the superlevel set is closed.
    pub fn contains(&self, state: &[f64]) -> Result<bool> {
        Ok(self.value(state)? >= 0.0)
    }
}

pub fn eval(barrier: &Barrier, state: &[f64]) -> Result<BarrierValue> {
    barrier.eval(state)
}

pub fn in_superlevel_set(barrier: &Barrier, state: &[f64]) -> Result<bool> {
    barrier.contains(state)
}

fn planar(state: &[f64]) -> Result<[f64; 2]> {
    match state.len() {
        2 | 3 => Ok([state[0], state[1]]),
        n => Err(Error::Config(format!(
            "barrier expects a state of dimension 2 or 3, got {n}"
        ))),
    }
}

/// Log-sum-exp soft minimum `-ln(sum_i exp(-v_i))`.
///
/// Shifted by `min(v)` before exponentiating; satisfies
/// `min(v) - ln(len) <= softmin(v) <= min(v)`.
pub fn softmin(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Config("softmin of an empty set".into()));
    }
    crate::error::ensure_finite("softmin input", values)?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let sum: f64 = values.iter().map(|v| (-(v - lo)).exp()).sum();
    Ok(lo - sum.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_disk() -> Barrier {
        EllipsoidBarrier::new([0.0, 0.0], [1.0, 1.0]).unwrap().into()
    }

    fn obstacle() -> Barrier {
        SuperellipseObstacleBarrier::new([0.0, 0.0], [0.7, 0.2], FRAC_PI_2, 6, 1.0)
            .unwrap()
            .into()
    }

    #[test]
    fn ellipsoid_center_and_boundary() {
        let v = unit_disk().eval(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(v.value, 1.0);
        assert_eq!(v.gradient, vec![0.0, 0.0, 0.0]);

        let v = unit_disk().eval(&[1.0, 0.0, 0.3]).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.gradient, vec![-2.0, 0.0, 0.0]);
    }

    #[test]
    fn ellipsoid_membership() {
        let b: Barrier = EllipsoidBarrier::new([1.0, -1.0], [0.5, 0.25]).unwrap().into();
        assert!(b.contains(&[1.0, -1.0]).unwrap());
        assert!(b.contains(&[1.5, -1.0]).unwrap());
        // twice the semi-axis: h = 1 - 4
        assert_eq!(b.value(&[2.0, -1.0]).unwrap(), -3.0);
        assert!(!in_superlevel_set(&b, &[1.0, -0.5]).unwrap());
    }

    #[test]
    fn rejects_bad_dimensions_and_params() {
        assert!(matches!(unit_disk().eval(&[0.0]), Err(Error::Config(_))));
        assert!(matches!(unit_disk().eval(&[0.0; 4]), Err(Error::Config(_))));
        assert!(EllipsoidBarrier::new([0.0, 0.0], [-1.0, 1.0]).is_err());
        assert!(EllipsoidBarrier::new([0.0, 0.0], [0.0, 1.0]).is_err());
        assert!(SuperellipseObstacleBarrier::new([0.0; 2], [0.7, 0.2], 0.0, 5, 1.0).is_err());
        assert!(SuperellipseObstacleBarrier::new([0.0; 2], [0.7, 0.2], 0.0, 6, 0.0).is_err());
        assert!(HalfplaneBarrier::new([0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn rotated_obstacle_point_outside() {
        // R(-pi/2) (0.7, 0) = (0, -0.7); scaled by 1/sigma gives (0, -3.5).
        let v = obstacle().eval(&[0.7, 0.0, 0.0]).unwrap();
        assert_relative_eq!(v.value, 2.5, epsilon = 1e-12);
        assert!(v.value > 0.0);
        // the long axis now points along y
        assert!(obstacle().value(&[0.0, 0.65]).unwrap() < 0.0);
        assert!(obstacle().value(&[0.0, 0.75]).unwrap() > 0.0);
        assert!(obstacle().value(&[0.15, 0.0]).unwrap() < 0.0);
        assert!(obstacle().value(&[0.25, 0.0]).unwrap() > 0.0);
    }

    #[test]
    fn obstacle_sign_matches_direct_p_norm_on_grid() {
        // Independent classification: rotate by hand and compare sum |z_i|^6 against 1.
        let b = obstacle();
        let n = 121;
        for i in 0..n {
            for j in 0..n {
                let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                let y = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
                // R(-pi/2) (x, y) = (y, -x)
                let zx = y / 0.7;
                let zy = -x / 0.2;
                let s = zx.powi(6) + zy.powi(6);
                if (s - 1.0).abs() < 1e-9 {
                    continue;
                }
                let h = b.value(&[x, y]).unwrap();
                assert_eq!(h > 0.0, s > 1.0, "mismatch at ({x}, {y}): h = {h}, s = {s}");
            }
        }
    }

    #[test]
    fn obstacle_boundary_points_are_zero_level() {
        let b = obstacle();
        let Barrier::Superellipse(s) = &b else { unreachable!() };
        for k in 0..64 {
            let p = s.boundary_point(k as f64 * std::f64::consts::TAU / 64.0);
            assert!(b.value(&p).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn obstacle_center_has_zero_gradient() {
        let v = obstacle().eval(&[0.0, 0.0]).unwrap();
        assert_eq!(v.value, -1.0);
        assert_eq!(v.gradient, vec![0.0, 0.0]);
    }

    #[test]
    fn softmin_examples() {
        assert_eq!(softmin(&[0.0]).unwrap(), 0.0);
        assert_relative_eq!(softmin(&[1.0, 1.0]).unwrap(), 1.0 - 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(softmin(&[1.0, 1.0]).unwrap(), 0.306853, epsilon = 1e-6);
        let s = softmin(&[5.0, -3.0, 4.0]).unwrap();
        let brute = -((-5f64).exp() + 3f64.exp() + (-4f64).exp()).ln();
        assert_relative_eq!(s, brute, epsilon = 1e-12);
        assert!(s <= -3.0 && s >= -3.0 - 3f64.ln());
        assert!(matches!(softmin(&[]), Err(Error::Config(_))));
        assert!(softmin(&[f64::NAN]).is_err());
    }

    #[test]
    fn softmin_survives_large_magnitudes() {
        let s = softmin(&[-800.0, -799.0]).unwrap();
        assert!(s.is_finite());
        assert!(s <= -800.0 && s >= -800.0 - 2f64.ln());
    }

    fn central_difference(b: &Barrier, x: &[f64]) -> Vec<f64> {
        let step = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut lo = x.to_vec();
                let mut hi = x.to_vec();
                lo[i] -= step;
                hi[i] += step;
                (b.value(&hi).unwrap() - b.value(&lo).unwrap()) / (2.0 * step)
            })
            .collect()
    }

    fn barriers() -> Vec<Barrier> {
        vec![
            EllipsoidBarrier::new([0.3, -0.4], [0.25, 0.2]).unwrap().into(),
            obstacle(),
            SuperellipseObstacleBarrier::new([0.2, 0.1], [0.5, 0.3], 0.4, 4, 1.3).unwrap().into(),
            HalfplaneBarrier::new([-1.0, 0.5], 0.2).unwrap().into(),
        ]
    }

    proptest! {
        #[test]
        fn gradients_match_finite_differences(
            x in -2.0f64..2.0, y in -2.0f64..2.0, phi in -3.0f64..3.0
        ) {
            for b in barriers() {
                // the p-norm is not differentiable at the obstacle center
                if b.value(&[x, y]).unwrap() < -0.9 { continue; }
                let state = [x, y, phi];
                let analytic = b.eval(&state).unwrap().gradient;
                let numeric = central_difference(&b, &state);
                let scale = analytic.iter().map(|g| g.abs()).fold(1.0, f64::max);
                for (a, n) in analytic.iter().zip(&numeric) {
                    prop_assert!((a - n).abs() <= 1e-5 * scale, "{b:?}: {analytic:?} vs {numeric:?}");
                }
                prop_assert_eq!(analytic[2], 0.0);
            }
        }

        #[test]
        fn softmin_bounds_hold(v in prop::collection::vec(-50.0f64..50.0, 1..12)) {
            let s = softmin(&v).unwrap();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!(s <= lo + 1e-12);
            prop_assert!(s >= lo - (v.len() as f64).ln() - 1e-12);
        }

        #[test]
        fn softmin_is_permutation_invariant(mut v in prop::collection::vec(-50.0f64..50.0, 1..8)) {
            let s = softmin(&v).unwrap();
            v.reverse();
            v.rotate_left(1);
            prop_assert!((softmin(&v).unwrap() - s).abs() < 1e-12);
        }

        #[test]
        fn softmin_of_singleton_is_identity(c in -1e3f64..1e3) {
            prop_assert_eq!(softmin(&[c]).unwrap(), c);
        }

        #[test]
        fn ellipsoid_superlevel_matches_quadratic_form(
            x in -2.0f64..2.0, y in -2.0f64..2.0,
            a in 0.1f64..1.5, b in 0.1f64..1.5
        ) {
            let e = EllipsoidBarrier::new([0.2, -0.1], [a, b]).unwrap();
            let q = e.quadratic_form([x, y]);
            let bar: Barrier = e.into();
            prop_assert_eq!(bar.contains(&[x, y]).unwrap(), q <= 1.0);
        }
    }
}
