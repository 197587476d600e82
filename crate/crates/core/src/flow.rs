//! Constrained integration of the geodesic Hamiltonian vector field on the
//! unit cotangent bundle Y = {f = 0, y . grad f = 0, ‖y‖ = 1}:
//!
//!   xdot = y,   ydot = -(Hess(f)_x(y,y)/‖grad f(x)‖^2) grad f(x),
//!
//! by classical 4-stage Runge-Kutta with post-step Newton projection back
//! onto the constraints. The winding angle around the binding is integrated
//! alongside (x, y) as an extra state component with rate Theta(X_H), which
//! makes the angle a 4th-order quadrature of the angular form along the step;
//! each step is cross-checked against atan2 continuity. Steps shrink until
//! the angle increment is below `max_angle_per_step`, so unwrapping is always
//! unambiguous.

use crate::linalg;
use crate::section;
use crate::surface::{project_to_surface, DefiningSurface, PhasePoint, SurfaceError};
use crate::Real;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError<R: Real> {
    #[error("step size underflow at t = {at_time} (h shrank below {h:e})")]
    StepSizeUnderflow { at_time: R, h: R },
    #[error("constraint drift {residual:e} exceeds tolerance {tolerance:e} after projection")]
    ConstraintDrift { residual: R, tolerance: R },
    #[error("step budget {max_steps} exhausted in flow_to_time")]
    MaxStepsExceeded { max_steps: usize },
    #[error(transparent)]
    Surface(#[from] SurfaceError<R>),
}

pub type FlowResult<T, R> = Result<T, FlowError<R>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct IntegratorConfig<R> {
    /// Nominal RK4 step in flow time (default 1e-3 * 2 pi).
    pub base_step: R,
    /// Angle-limited stepping: shrink h until the winding increment is below
    /// this (default pi/8).
    pub max_angle_per_step: R,
    /// Post-projection residuals must stay below this (default 1e-10).
    pub constraint_tolerance: R,
    /// Hard cap on steps per trajectory (default 1e7).
    pub max_steps: usize,
}

impl<R: Real> Default for IntegratorConfig<R> {
    fn default() -> Self {
        Self {
            base_step: R::lit(1e-3) * R::TAU(),
            max_angle_per_step: R::PI() / R::lit(8.0),
            constraint_tolerance: R::lit(1e-10),
            max_steps: 10_000_000,
        }
    }
}

impl<R: Real> IntegratorConfig<R> {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.base_step > R::zero()) {
            return Err("base_step must be positive".into());
        }
        if !(self.max_angle_per_step > R::zero() && self.max_angle_per_step < R::FRAC_PI_2()) {
            return Err("max_angle_per_step must lie in (0, pi/2)".into());
        }
        if !(self.constraint_tolerance > R::zero()) {
            return Err("constraint_tolerance must be positive".into());
        }
        if self.max_steps == 0 {
            return Err("max_steps must be positive".into());
        }
        Ok(())
    }
}

/// Integration state: phase point, flow parameter, and the unwrapped winding
/// angle around the binding accumulated so far.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<R: Real> {
    pub phase: PhasePoint<R>,
    pub time: R,
    pub unwrapped_angle: R,
}

impl<R: Real> FlowState<R> {
    pub fn new(phase: PhasePoint<R>) -> Self {
        Self {
            phase,
            time: R::zero(),
            unwrapped_angle: R::zero(),
        }
    }
}

/// The geodesic Hamiltonian vector field at a phase point, as the pair
/// (xdot, ydot) of ambient vectors.
pub fn geodesic_vector_field<R: Real>(
    surface: &DefiningSurface<R>,
    phase: &PhasePoint<R>,
) -> FlowResult<(Vec<R>, Vec<R>), R> {
    let jet = surface.jet(&phase.x)?;
    let gn2 = linalg::dot(&jet.gradient, &jet.gradient);
    if gn2.sqrt() < R::lit(crate::surface::REGULARITY_FLOOR) {
        return Err(SurfaceError::Regularity {
            point: phase.x.clone(),
            grad_norm: gn2.sqrt(),
        }
        .into());
    }
    let coef = jet.hessian.quad_form(&phase.y, &phase.y) / gn2;
    Ok((phase.y.clone(), linalg::scale(&jet.gradient, -coef)))
}

struct Deriv<R> {
    dx: Vec<R>,
    dy: Vec<R>,
    dphi: R,
}

/// Right-hand side of the augmented system (x, y, phi); `direction` is +1
/// for forward flow and -1 for the negated field.
fn rhs<R: Real>(
    surface: &DefiningSurface<R>,
    x: &[R],
    y: &[R],
    direction: R,
) -> FlowResult<Deriv<R>, R> {
    let jet = surface.jet(x)?;
    let gn2 = linalg::dot(&jet.gradient, &jet.gradient);
    if gn2.sqrt() < R::lit(crate::surface::REGULARITY_FLOOR) {
        return Err(SurfaceError::Regularity {
            point: x.to_vec(),
            grad_norm: gn2.sqrt(),
        }
        .into());
    }
    let hyy = jet.hessian.quad_form(y, y);
    let coef = hyy / gn2;
    let x0 = x[0];
    let y0 = y[0];
    let r2 = x0 * x0 + y0 * y0;
    // On the binding itself the angular rate is 0/0; binding trajectories
    // carry no winding angle.
    let dphi = if r2 <= R::lit(1e-26) {
        R::zero()
    } else {
        let a = section::a_from_jet_parts(surface, x, hyy, gn2, jet.gradient[0])
            .map_err(FlowError::Surface)?;
        (a * x0 * x0 + y0 * y0) / r2
    };
    Ok(Deriv {
        dx: y.iter().map(|&yi| direction * yi).collect(),
        dy: linalg::scale(&jet.gradient, -direction * coef),
        dphi: direction * dphi,
    })
}

/// One raw RK4 step of size h (no projection); returns the advanced
/// (x, y, phi).
fn rk4_raw<R: Real>(
    surface: &DefiningSurface<R>,
    x: &[R],
    y: &[R],
    phi: R,
    h: R,
    direction: R,
) -> FlowResult<(Vec<R>, Vec<R>, R), R> {
    let half = R::lit(0.5);
    let k1 = rhs(surface, x, y, direction)?;
    let x2 = linalg::axpy(x, half * h, &k1.dx);
    let y2 = linalg::axpy(y, half * h, &k1.dy);
    let k2 = rhs(surface, &x2, &y2, direction)?;
    let x3 = linalg::axpy(x, half * h, &k2.dx);
    let y3 = linalg::axpy(y, half * h, &k2.dy);
    let k3 = rhs(surface, &x3, &y3, direction)?;
    let x4 = linalg::axpy(x, h, &k3.dx);
    let y4 = linalg::axpy(y, h, &k3.dy);
    let k4 = rhs(surface, &x4, &y4, direction)?;
    let sixth = h / R::lit(6.0);
    let two = R::lit(2.0);
    let combine = |a: &[R], b: &[R], c: &[R], d: &[R], base: &[R]| -> Vec<R> {
        base.iter()
            .enumerate()
            .map(|(i, &v)| v + sixth * (a[i] + two * b[i] + two * c[i] + d[i]))
            .collect()
    };
    let x_new = combine(&k1.dx, &k2.dx, &k3.dx, &k4.dx, x);
    let y_new = combine(&k1.dy, &k2.dy, &k3.dy, &k4.dy, y);
    let phi_new = phi + sixth * (k1.dphi + two * k2.dphi + two * k3.dphi + k4.dphi);
    Ok((x_new, y_new, phi_new))
}

/// Result of one accepted step.
#[derive(Debug, Clone)]
pub struct StepOutcome<R: Real> {
    pub state: FlowState<R>,
    pub h_used: R,
    /// Pre-projection constraint residual (O(h^5) for valid states).
    pub raw_drift: R,
    /// Post-projection constraint residual.
    pub post_drift: R,
    /// |RK4-quadrature angle increment - atan2 increment| for this step.
    pub angle_mismatch: R,
}

fn wrap_to_pi<R: Real>(a: R) -> R {
    let mut v = a;
    while v > R::PI() {
        v -= R::TAU();
    }
    while v < -R::PI() {
        v += R::TAU();
    }
    v
}

/// One RK4 step of exactly size h followed by constraint projection.
pub(crate) fn step_exact<R: Real>(
    surface: &DefiningSurface<R>,
    state: &FlowState<R>,
    h: R,
    direction: R,
) -> FlowResult<StepOutcome<R>, R> {
    let (x_raw, y_raw, phi_new) = rk4_raw(
        surface,
        &state.phase.x,
        &state.phase.y,
        state.unwrapped_angle,
        h,
        direction,
    )?;
    let raw_drift = PhasePoint::new(x_raw.clone(), y_raw.clone())
        .residuals(surface)?
        .max();
    let phase = project_to_surface(surface, &x_raw, &y_raw)?;
    let post_drift = phase.residuals(surface)?.max();

    // atan2 continuity cross-check of the integrated winding angle. The
    // unwrapped angle is the negated continuous argument of x0 + i y0.
    let r2_old = state.phase.x0() * state.phase.x0() + state.phase.y0() * state.phase.y0();
    let r2_new = phase.x0() * phase.x0() + phase.y0() * phase.y0();
    let angle_mismatch = if r2_old > R::lit(1e-26) && r2_new > R::lit(1e-26) {
        let arg_old = state.phase.y0().atan2(state.phase.x0());
        let arg_new = phase.y0().atan2(phase.x0());
        let d_atan = -wrap_to_pi(arg_new - arg_old);
        ((phi_new - state.unwrapped_angle) - d_atan).abs()
    } else {
        R::zero()
    };

    Ok(StepOutcome {
        state: FlowState {
            phase,
            time: state.time + direction * h,
            unwrapped_angle: phi_new,
        },
        h_used: h,
        raw_drift,
        post_drift,
        angle_mismatch,
    })
}

/// One accepted step of at most `h_max`, shrunk until the winding increment
/// is at most `max_angle_per_step`.
pub(crate) fn step_bounded<R: Real>(
    surface: &DefiningSurface<R>,
    state: &FlowState<R>,
    h_max: R,
    direction: R,
    config: &IntegratorConfig<R>,
) -> FlowResult<StepOutcome<R>, R> {
    let mut h = h_max;
    loop {
        let outcome = step_exact(surface, state, h, direction)?;
        let dphi = (outcome.state.unwrapped_angle - state.unwrapped_angle).abs();
        if dphi <= config.max_angle_per_step {
            if outcome.post_drift > config.constraint_tolerance {
                return Err(FlowError::ConstraintDrift {
                    residual: outcome.post_drift,
                    tolerance: config.constraint_tolerance,
                });
            }
            return Ok(outcome);
        }
        h = h * R::lit(0.5);
        if h < h_max * R::lit(1e-12) {
            return Err(FlowError::StepSizeUnderflow {
                at_time: state.time,
                h,
            });
        }
    }
}

/// One step from `state` with the configured base step.
pub fn step<R: Real>(
    surface: &DefiningSurface<R>,
    state: &FlowState<R>,
    config: &IntegratorConfig<R>,
) -> FlowResult<StepOutcome<R>, R> {
    step_bounded(surface, state, config.base_step, R::one(), config)
}

/// Integrates for flow time `t` (negative t integrates the negated field on
/// the same code path), invoking `on_step` after every accepted step.
pub fn flow_with<R: Real>(
    surface: &DefiningSurface<R>,
    phase: &PhasePoint<R>,
    t: R,
    config: &IntegratorConfig<R>,
    mut on_step: impl FnMut(&FlowState<R>, &StepOutcome<R>),
) -> FlowResult<PhasePoint<R>, R> {
    let direction = if t >= R::zero() { R::one() } else { -R::one() };
    let total = t.abs();
    let mut state = FlowState::new(phase.clone());
    let mut elapsed = R::zero();
    let tiny = total * R::lit(1e-15);
    let mut steps = 0usize;
    while total - elapsed > tiny {
        let h_max = config.base_step.min(total - elapsed);
        let outcome = step_bounded(surface, &state, h_max, direction, config)?;
        elapsed += outcome.h_used;
        state = outcome.state.clone();
        on_step(&state, &outcome);
        steps += 1;
        if steps > config.max_steps {
            return Err(FlowError::MaxStepsExceeded {
                max_steps: config.max_steps,
            });
        }
    }
    Ok(state.phase)
}

/// The time-t flow of a phase point.
pub fn flow_to_time<R: Real>(
    surface: &DefiningSurface<R>,
    phase: &PhasePoint<R>,
    t: R,
    config: &IntegratorConfig<R>,
) -> FlowResult<PhasePoint<R>, R> {
    flow_with(surface, phase, t, config, |_, _| {})
}
