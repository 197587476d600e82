//! Closed-form return maps: incomplete elliptic integrals of the first and
//! third kind (by adaptive quadrature of the defining integrands), the
//! ellipsoid return angle G(t), the Clairaut integral for hypersurfaces of
//! revolution, and the billiard limit G0(t) = 4 arccos t.
//!
//! Quadrature rather than AGM/Carlson keeps amplitudes of 2 pi and negative
//! parameters on one code path; a Carlson implementation could be swapped in
//! behind the same operations later.

use crate::expr::{parse_with_variables, ExprError, ExpressionAst};
use crate::linalg;
use crate::quad::{self, QuadError};
use crate::Real;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError<R: Real> {
    #[error("domain error: {detail}")]
    Domain { detail: String },
    #[error(transparent)]
    Quadrature(#[from] QuadError<R>),
    #[error("pole point: yvec = 0 is the meridian special case, not a rotation")]
    PolePoint,
    #[error("normal chord: tangential component is zero; the continuous limit G0(0) = 2pi is the identity")]
    NormalChord,
    #[error("profile asymmetric about pi/2: max |a(phi) - a(pi - phi)| = {violation:e}")]
    AsymmetricProfile { violation: R },
    #[error(transparent)]
    Expression(#[from] ExprError<R>),
}

pub type ClosedFormResult<T, R> = Result<T, ClosedFormError<R>>;

/// Default absolute quadrature tolerance (tight enough for the 1e-9 and 1e-8
/// agreement budgets downstream).
fn quad_tol<R: Real>() -> R {
    R::lit(1e-10).max(R::epsilon() * R::lit(64.0))
}

/// Arguments of the incomplete elliptic integrals: amplitude phi (may exceed
/// pi/2, up to full turns), parameter m (may be negative), characteristic n
/// (third kind only, n < 1 here).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticArgs<R> {
    pub amplitude: R,
    pub parameter: R,
    pub characteristic: R,
}

impl<R: Real> EllipticArgs<R> {
    pub fn first_kind(amplitude: R, parameter: R) -> Self {
        Self {
            amplitude,
            parameter,
            characteristic: R::zero(),
        }
    }

    pub fn third_kind(characteristic: R, amplitude: R, parameter: R) -> Self {
        Self {
            amplitude,
            parameter,
            characteristic,
        }
    }
}

/// Largest sin^2 over the integration range [0, phi].
fn max_sin_sq<R: Real>(phi: R) -> R {
    if phi.abs() >= R::FRAC_PI_2() {
        R::one()
    } else {
        let s = phi.sin();
        s * s
    }
}

fn check_positive_factor<R: Real>(coef: R, phi: R, what: &str) -> ClosedFormResult<(), R> {
    if coef * max_sin_sq(phi) >= R::one() {
        return Err(ClosedFormError::Domain {
            detail: format!("1 - {what} sin^2(theta) reaches zero on the integration range"),
        });
    }
    Ok(())
}

/// Splits phi into j half-periods plus a remainder in [-pi/2, pi/2); the
/// integrands have period pi, so value = 2 j * (complete integral) +
/// (incomplete remainder).
fn reduce_amplitude<R: Real>(phi: R) -> (i64, R) {
    let half = R::lit(0.5);
    let j = (phi / R::PI() + half).floor();
    let rem = phi - j * R::PI();
    (j.to_i64().expect("amplitude within i64 half-periods"), rem)
}

/// F(phi | m) = int_0^phi dtheta / sqrt(1 - m sin^2 theta).
pub fn elliptic_f<R: Real>(args: EllipticArgs<R>) -> ClosedFormResult<R, R> {
    let m = args.parameter;
    check_positive_factor(m, args.amplitude, "m")?;
    let integrand = move |theta: R| {
        let s = theta.sin();
        (R::one() - m * s * s).sqrt().recip()
    };
    let tol = quad_tol::<R>();
    let (j, rem) = reduce_amplitude(args.amplitude);
    let mut value = R::zero();
    if j != 0 {
        let complete = quad::adaptive(&integrand, R::zero(), R::FRAC_PI_2(), tol, 48)?.value;
        value += R::lit(2.0 * j as f64) * complete;
    }
    value += quad::adaptive(&integrand, R::zero(), rem, tol, 48)?.value;
    Ok(value)
}

/// Pi(n; phi | m) = int_0^phi dtheta / ((1 - n sin^2 theta) sqrt(1 - m sin^2 theta)).
pub fn elliptic_pi<R: Real>(args: EllipticArgs<R>) -> ClosedFormResult<R, R> {
    let m = args.parameter;
    let n = args.characteristic;
    check_positive_factor(m, args.amplitude, "m")?;
    check_positive_factor(n, args.amplitude, "n")?;
    let integrand = move |theta: R| {
        let s2 = {
            let s = theta.sin();
            s * s
        };
        ((R::one() - n * s2) * (R::one() - m * s2).sqrt()).recip()
    };
    let tol = quad_tol::<R>();
    let (j, rem) = reduce_amplitude(args.amplitude);
    let mut value = R::zero();
    if j != 0 {
        let complete = quad::adaptive(&integrand, R::zero(), R::FRAC_PI_2(), tol, 48)?.value;
        value += R::lit(2.0 * j as f64) * complete;
    }
    value += quad::adaptive(&integrand, R::zero(), rem, tol, 48)?.value;
    Ok(value)
}

/// Return angle of the ellipsoid x0^2/a0^2 + ‖x‖^2 = 1 as a function of the
/// tangential momentum t = ‖yvec‖:
/// G(t) = -(t (1-a0^2)/a0) F(2pi | m) + (t/a0) Pi(1-t^2; 2pi | m),
/// m = -(1-a0^2)(1-t^2)/a0^2.
pub fn ellipsoid_g<R: Real>(t: R, a0: R) -> ClosedFormResult<R, R> {
    if !(t > R::zero() && t <= R::one()) {
        return Err(ClosedFormError::Domain {
            detail: format!("t = {t} outside (0, 1]"),
        });
    }
    if a0 <= R::zero() {
        return Err(ClosedFormError::Domain {
            detail: format!("a0 = {a0} must be positive"),
        });
    }
    let one = R::one();
    let two_pi = R::TAU();
    let m = -(one - a0 * a0) * (one - t * t) / (a0 * a0);
    let f = elliptic_f(EllipticArgs::first_kind(two_pi, m))?;
    let pi3 = elliptic_pi(EllipticArgs::third_kind(one - t * t, two_pi, m))?;
    Ok(-(t * (one - a0 * a0) / a0) * f + (t / a0) * pi3)
}

/// Profile a(phi) of a hypersurface of revolution, parsed in the variable
/// `phi` and required to be symmetric about pi/2 (the A1 condition for the
/// revolved surface).
#[derive(Debug, Clone)]
pub struct RevolutionProfile<R: Real> {
    text: String,
    ast: ExpressionAst<R>,
}

impl<R: Real> RevolutionProfile<R> {
    pub fn parse(text: &str) -> ClosedFormResult<Self, R> {
        let ast = parse_with_variables::<R>(text, &["phi"])?;
        let profile = Self {
            text: text.to_string(),
            ast,
        };
        // Symmetry about pi/2 on a sample grid; also fixes the value scale.
        let mut violation = R::zero();
        let mut scale = R::one();
        for k in 0..=64 {
            let phi = R::PI() * R::of_usize(k) / R::lit(64.0);
            let a = profile.value(phi)?;
            let b = profile.value(R::PI() - phi)?;
            violation = violation.max((a - b).abs());
            scale = scale.max(a.abs());
        }
        if violation > R::lit(1e-10) * scale {
            return Err(ClosedFormError::AsymmetricProfile { violation });
        }
        Ok(profile)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn value(&self, phi: R) -> ClosedFormResult<R, R> {
        Ok(self.ast.eval(&[phi])?)
    }

    /// a'(phi) via the first-order jet.
    pub fn derivative(&self, phi: R) -> ClosedFormResult<R, R> {
        let (_, g) = self.ast.eval_with_gradient(&[phi])?;
        Ok(g[0])
    }

    /// If the profile is c*sin(phi) to 1e-10 on a grid, the coefficient c.
    pub fn sin_coefficient(&self) -> Option<R> {
        let c = self.value(R::FRAC_PI_2()).ok()?;
        let tol = R::lit(1e-10) * c.abs().max(R::one());
        for k in 0..=100 {
            let phi = R::PI() * R::of_usize(k) / R::lit(100.0);
            let a = self.value(phi).ok()?;
            if (a - c * phi.sin()).abs() > tol {
                return None;
            }
        }
        Some(c)
    }
}

/// Return angle by the Clairaut integral for a hypersurface of revolution
/// with profile a(phi):
/// G(t) = t int_0^{2pi} sqrt((1-t^2) sin^2 s + a'(arcsin(sqrt(1-t^2) sin s))^2)
///            / (1 - (1-t^2) sin^2 s) ds.
pub fn clairaut_g<R: Real>(t: R, profile: &RevolutionProfile<R>) -> ClosedFormResult<R, R> {
    if !(t >= R::lit(1e-3) && t <= R::one()) {
        return Err(ClosedFormError::Domain {
            detail: format!("t = {t} outside [1e-3, 1]"),
        });
    }
    let one = R::one();
    let q = one - t * t;
    let integrand = |sigma: R| -> ClosedFormResult<R, R> {
        let s = sigma.sin();
        let w = (q.sqrt() * s).max(-one).min(one);
        let da = profile.derivative(w.asin())?;
        let num = (q * s * s + da * da).sqrt();
        Ok(num / (one - q * s * s))
    };
    // The profile evaluation can fail only on domain errors; surface them by
    // probing the grid first, then integrate with the infallible closure.
    for k in 0..=16 {
        integrand(R::TAU() * R::of_usize(k) / R::lit(16.0))?;
    }
    let f = |sigma: R| integrand(sigma).unwrap_or(R::nan());
    let tol = R::lit(1e-9).max(R::epsilon() * R::lit(64.0));
    let res = quad::adaptive(&f, R::zero(), R::TAU(), tol, 48)?;
    Ok(t * res.value)
}

/// The billiard-limit return angle G0(t) = 4 arccos t (equals 2 pi at t = 0).
pub fn billiard_g0<R: Real>(t: R) -> R {
    R::lit(4.0) * t.acos()
}

/// The closed-form return map: a rotation by `g_value` in the plane spanned
/// by xhat and yvec/‖yvec‖, with y0 unchanged:
/// x' = x cos G + (y/‖y‖) sin G,  y' = y cos G - ‖y‖ x sin G.
pub fn closed_form_return_map<R: Real>(
    xhat: &[R],
    y0: R,
    yvec: &[R],
    g_value: R,
) -> ClosedFormResult<(Vec<R>, R, Vec<R>), R> {
    let t = linalg::norm(yvec);
    if t == R::zero() {
        return Err(ClosedFormError::PolePoint);
    }
    let xnorm = linalg::norm(xhat);
    if (xnorm - R::one()).abs() > R::lit(1e-6) {
        return Err(ClosedFormError::Domain {
            detail: format!("‖xhat‖ = {xnorm} is not 1"),
        });
    }
    let ortho = linalg::dot(xhat, yvec).abs();
    if ortho > R::lit(1e-6) {
        return Err(ClosedFormError::Domain {
            detail: format!("xhat . yvec = {ortho:e} is not 0"),
        });
    }
    let (sin_g, cos_g) = g_value.sin_cos();
    let y_hat = linalg::scale(yvec, t.recip());
    let x_new = linalg::axpy(&linalg::scale(xhat, cos_g), sin_g, &y_hat);
    let y_new = linalg::axpy(&linalg::scale(yvec, cos_g), -t * sin_g, xhat);
    Ok((x_new, y0, y_new))
}

/// Second iterate of the billiard map on the unit disk: the rotation by
/// G0(‖y_T‖) in the (xhat, y_T) plane.
pub fn billiard_second_iterate<R: Real>(
    xhat: &[R],
    yvec_t: &[R],
) -> ClosedFormResult<(Vec<R>, Vec<R>), R> {
    let t = linalg::norm(yvec_t);
    if t == R::zero() {
        return Err(ClosedFormError::NormalChord);
    }
    if t > R::one() + R::lit(1e-12) {
        return Err(ClosedFormError::Domain {
            detail: format!("‖y_T‖ = {t} exceeds 1"),
        });
    }
    let g0 = billiard_g0(t.min(R::one()));
    let (x_new, _, y_new) = closed_form_return_map(xhat, R::zero(), yvec_t, g0)?;
    Ok((x_new, y_new))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    /// Independent oracle: adaptive Simpson over the full range, no
    /// quarter-period reduction, different rule family than the implementation.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let s = |x0: f64, x1: f64| (x1 - x0) / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1));
        let whole = s(a, b);
        let left = s(a, m);
        let right = s(m, b);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            simpson(f, a, m, tol / 2.0, depth - 1) + simpson(f, m, b, tol / 2.0, depth - 1)
        }
    }

    fn f_oracle(phi: f64, m: f64) -> f64 {
        simpson(
            &|th: f64| 1.0 / (1.0 - m * th.sin().powi(2)).sqrt(),
            0.0,
            phi,
            1e-12,
            40,
        )
    }

    fn pi_oracle(n: f64, phi: f64, m: f64) -> f64 {
        simpson(
            &|th: f64| {
                let s2 = th.sin().powi(2);
                1.0 / ((1.0 - n * s2) * (1.0 - m * s2).sqrt())
            },
            0.0,
            phi,
            1e-12,
            40,
        )
    }

    #[test]
    fn f_of_zero_parameter_is_amplitude() {
        for phi in [0.0, 0.3, FRAC_PI_2, 2.0, TAU] {
            let v = elliptic_f(EllipticArgs::first_kind(phi, 0.0)).unwrap();
            assert!((v - phi).abs() < 1e-12, "F({phi}|0) = {v}");
        }
    }

    #[test]
    fn pi_of_zero_characteristic_and_parameter_is_amplitude() {
        for phi in [0.4, 1.0, 3.0, TAU] {
            let v = elliptic_pi(EllipticArgs::third_kind(0.0, phi, 0.0)).unwrap();
            assert!((v - phi).abs() < 1e-12);
        }
    }

    #[test]
    fn f_quarter_period_additivity_vs_oracle() {
        for m in [-1.0, -0.5, 0.5] {
            let full = elliptic_f(EllipticArgs::first_kind(TAU, m)).unwrap();
            let quarter = elliptic_f(EllipticArgs::first_kind(FRAC_PI_2, m)).unwrap();
            assert!((full - 4.0 * quarter).abs() < 1e-10, "m = {m}");
            assert!((full - f_oracle(TAU, m)).abs() < 1e-9, "m = {m}");
        }
    }

    #[test]
    fn f_incomplete_amplitudes_vs_oracle() {
        for (phi, m) in [(0.7, -2.0), (2.4, 0.3), (5.0, -0.8), (1.9, 0.9)] {
            let v = elliptic_f(EllipticArgs::first_kind(phi, m)).unwrap();
            assert!((v - f_oracle(phi, m)).abs() < 1e-9, "F({phi}|{m})");
        }
    }

    #[test]
    fn pi_full_turn_closed_antiderivative() {
        // int_0^{2pi} dth/(1 - n sin^2 th) = 2 pi / sqrt(1 - n) with n = 1 - t^2.
        for t in [0.25, 0.5, 0.9] {
            let n = 1.0 - t * t;
            let v = elliptic_pi(EllipticArgs::third_kind(n, TAU, 0.0)).unwrap();
            assert!((v - TAU / t).abs() < 1e-9, "t = {t}: {v} vs {}", TAU / t);
            assert!((v - pi_oracle(n, TAU, 0.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn pi_incomplete_vs_oracle() {
        for (n, phi, m) in [(0.5, 1.2, -0.7), (-1.5, TAU, 0.4), (0.84, 4.0, -1.0)] {
            let v = elliptic_pi(EllipticArgs::third_kind(n, phi, m)).unwrap();
            let o = pi_oracle(n, phi, m);
            assert!((v - o).abs() < 1e-9, "Pi({n};{phi}|{m}) = {v} vs {o}");
        }
    }

    #[test]
    fn elliptic_domain_errors() {
        assert!(matches!(
            elliptic_f(EllipticArgs::first_kind(TAU, 1.0)),
            Err(ClosedFormError::Domain { .. })
        ));
        assert!(matches!(
            elliptic_pi(EllipticArgs::third_kind(1.0, TAU, 0.0)),
            Err(ClosedFormError::Domain { .. })
        ));
        // Small amplitudes keep sin^2 below the pole.
        assert!(elliptic_f(EllipticArgs::first_kind(0.3, 2.0)).is_ok());
    }

    #[test]
    fn ellipsoid_g_is_two_pi_on_the_sphere() {
        for t in [0.05, 0.3, 0.6, 0.95, 1.0] {
            let g = ellipsoid_g(t, 1.0).unwrap();
            assert!((g - TAU).abs() < 1e-9, "G({t}) = {g}");
        }
    }

    #[test]
    fn ellipsoid_g_at_t_one_is_equator_rotation() {
        for a0 in [0.5, 0.8, 2.0] {
            let g = ellipsoid_g(1.0, a0).unwrap();
            assert!((g - TAU * a0).abs() < 1e-9, "G(1; {a0}) = {g}");
        }
    }

    #[test]
    fn ellipsoid_g_matches_clairaut_sin_profile() {
        let profile = RevolutionProfile::<f64>::parse("2*sin(phi)").unwrap();
        let g_e = ellipsoid_g(0.5, 2.0).unwrap();
        let g_c = clairaut_g(0.5, &profile).unwrap();
        assert!((g_e - g_c).abs() < 1e-8, "{g_e} vs {g_c}");
    }

    #[test]
    fn clairaut_grid_matches_ellipsoid_g() {
        for a0 in [0.5, 1.0, 2.0] {
            let profile = RevolutionProfile::<f64>::parse(&format!("{a0}*sin(phi)")).unwrap();
            for k in 1..=9 {
                let t = k as f64 / 10.0;
                let g_e = ellipsoid_g(t, a0).unwrap();
                let g_c = clairaut_g(t, &profile).unwrap();
                assert!(
                    (g_e - g_c).abs() < 1e-8,
                    "a0 = {a0}, t = {t}: {g_e} vs {g_c}"
                );
            }
        }
    }

    #[test]
    fn clairaut_zero_profile_is_billiard_g0() {
        let profile = RevolutionProfile::<f64>::parse("0").unwrap();
        for t in [0.1, 0.5, 0.9] {
            let g = clairaut_g(t, &profile).unwrap();
            assert!(
                (g - 4.0 * t.acos()).abs() < 1e-8,
                "t = {t}: {g} vs {}",
                4.0 * t.acos()
            );
        }
    }

    #[test]
    fn clairaut_at_t_one_reduces_to_profile_slope() {
        let profile = RevolutionProfile::<f64>::parse("0.7*sin(phi)").unwrap();
        let g = clairaut_g(1.0, &profile).unwrap();
        assert!((g - TAU * 0.7).abs() < 1e-8);
    }

    #[test]
    fn clairaut_degeneration_is_monotone() {
        let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        let mut sups = Vec::new();
        for c in [0.5, 0.2, 0.1, 0.05] {
            let profile = RevolutionProfile::<f64>::parse(&format!("{c}*sin(phi)")).unwrap();
            let sup = grid
                .iter()
                .map(|&t| (clairaut_g(t, &profile).unwrap() - billiard_g0(t)).abs())
                .fold(0.0f64, f64::max);
            sups.push(sup);
        }
        for w in sups.windows(2) {
            assert!(w[1] < w[0], "sup differences not decreasing: {sups:?}");
        }
    }

    #[test]
    fn profile_symmetry_enforced() {
        match RevolutionProfile::<f64>::parse("phi") {
            Err(ClosedFormError::AsymmetricProfile { .. }) => {}
            other => panic!("expected asymmetric profile, got {other:?}"),
        }
        assert!(RevolutionProfile::<f64>::parse("sin(phi)^3").is_ok());
    }

    #[test]
    fn sin_coefficient_detection() {
        let p = RevolutionProfile::<f64>::parse("0.5*sin(phi)").unwrap();
        assert!((p.sin_coefficient().unwrap() - 0.5).abs() < 1e-12);
        let q = RevolutionProfile::<f64>::parse("sin(phi)^3").unwrap();
        assert!(q.sin_coefficient().is_none());
        let z = RevolutionProfile::<f64>::parse("0").unwrap();
        assert_eq!(z.sin_coefficient(), Some(0.0));
    }

    #[test]
    fn rotation_map_special_angles() {
        let x = vec![1.0, 0.0];
        let y = vec![0.0, 0.6];
        let (x1, y0, y1) = closed_form_return_map(&x, 0.8, &y, TAU).unwrap();
        assert!((x1[0] - 1.0).abs() < 1e-12 && x1[1].abs() < 1e-12);
        assert_eq!(y0, 0.8);
        assert!((y1[1] - 0.6).abs() < 1e-12);
        let (x2, _, y2) = closed_form_return_map(&x, 0.8, &y, PI).unwrap();
        assert!((x2[0] + 1.0).abs() < 1e-12);
        assert!((y2[1] + 0.6).abs() < 1e-12);
    }

    #[test]
    fn rotation_map_preserves_invariants() {
        let mut rng = crate::sampling::SplitMix64::new(11);
        for _ in 0..50 {
            let x: Vec<f64> = rng.direction(3);
            // Tangential y of a random magnitude.
            let d: Vec<f64> = rng.direction(3);
            let proj = crate::linalg::axpy(&d, -crate::linalg::dot(&d, &x), &x);
            let t = 0.3 + 0.6 * rng.uniform::<f64>();
            let y = crate::linalg::scale(&proj, t / crate::linalg::norm(&proj));
            let y0 = (1.0 - t * t).sqrt();
            let g = rng.uniform_in(0.0, 20.0);
            let (x1, y0p, y1) = closed_form_return_map(&x, y0, &y, g).unwrap();
            assert_eq!(y0p, y0);
            assert!((crate::linalg::norm(&x1) - 1.0).abs() < 1e-12);
            assert!((crate::linalg::norm(&y1) - t).abs() < 1e-12);
            assert!(crate::linalg::dot(&x1, &y1).abs() < 1e-12);
        }
    }

    #[test]
    fn pole_point_rejected() {
        assert!(matches!(
            closed_form_return_map(&[1.0, 0.0], 1.0, &[0.0, 0.0], 1.0),
            Err(ClosedFormError::PolePoint)
        ));
    }

    /// Brute-force two-bounce billiard in the unit ball: segment-sphere
    /// intersection plus reflection, the geometric oracle for the closed form.
    fn two_bounce_oracle(x: &[f64], y_t: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t = crate::linalg::norm(y_t);
        let normal_in = crate::linalg::scale(x, -(1.0 - t * t).sqrt());
        let mut p = x.to_vec();
        let mut d = crate::linalg::add(y_t, &normal_in);
        for _ in 0..2 {
            // ‖p + s d‖ = 1 with ‖p‖ = 1, ‖d‖ = 1: s = -2 p.d
            let s = -2.0 * crate::linalg::dot(&p, &d);
            p = crate::linalg::axpy(&p, s, &d);
            let pd = crate::linalg::dot(&p, &d);
            d = crate::linalg::axpy(&d, -2.0 * pd, &p);
        }
        let tangential = crate::linalg::axpy(&d, -crate::linalg::dot(&d, &p), &p);
        (p, tangential)
    }

    #[test]
    fn billiard_tangential_is_identity() {
        let x = vec![0.0f64, 1.0, 0.0];
        let y_t = vec![1.0f64, 0.0, 0.0];
        let (x1, y1) = billiard_second_iterate(&x, &y_t).unwrap();
        for i in 0..3 {
            assert!((x1[i] - x[i]).abs() < 1e-12);
            assert!((y1[i] - y_t[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn billiard_45_degree_launch_is_antipodal() {
        let x = vec![1.0, 0.0];
        let t = std::f64::consts::FRAC_1_SQRT_2;
        let y_t = vec![0.0, t];
        let (x1, y1) = billiard_second_iterate(&x, &y_t).unwrap();
        assert!((x1[0] + 1.0).abs() < 1e-12 && x1[1].abs() < 1e-12);
        assert!((y1[1] + t).abs() < 1e-12);
    }

    #[test]
    fn billiard_matches_two_bounce_oracle() {
        let mut rng = crate::sampling::SplitMix64::new(99);
        for dim in [2usize, 3, 4] {
            for _ in 0..30 {
                let x: Vec<f64> = rng.direction(dim);
                let d: Vec<f64> = rng.direction(dim);
                let proj = crate::linalg::axpy(&d, -crate::linalg::dot(&d, &x), &x);
                let pn = crate::linalg::norm(&proj);
                if pn < 1e-6 {
                    continue;
                }
                let t = rng.uniform_in(0.05, 0.999);
                let y_t = crate::linalg::scale(&proj, t / pn);
                let (x1, y1) = billiard_second_iterate(&x, &y_t).unwrap();
                let (xo, yo) = two_bounce_oracle(&x, &y_t);
                for i in 0..dim {
                    assert!((x1[i] - xo[i]).abs() < 1e-10, "dim {dim}: x mismatch");
                    assert!((y1[i] - yo[i]).abs() < 1e-10, "dim {dim}: y mismatch");
                }
            }
        }
    }

    #[test]
    fn normal_chord_rejected() {
        assert!(matches!(
            billiard_second_iterate(&[1.0, 0.0], &[0.0, 0.0]),
            Err(ClosedFormError::NormalChord)
        ));
    }

    #[test]
    fn billiard_g0_endpoint_convention() {
        assert!((billiard_g0(0.0) - TAU).abs() < 1e-15);
        assert_eq!(billiard_g0(1.0), 0.0);
    }
}
