//! The hypersurface M = f^-1(0): defining-function families, hypothesis
//! audits (reflection symmetry, Hessian definiteness), curvature quantities,
//! and projection onto the unit cotangent bundle.
//!
//! Audits are sampling-based certificates: they are reported as "passed at N
//! samples", never as proofs. Sampling shoots rays from the origin along
//! low-discrepancy directions, which assumes the surface is star-shaped
//! around the origin (true for every convex surface containing 0).

use crate::closedform::RevolutionProfile;
use crate::expr::{ExprError, ExpressionAst, JetValue};
use crate::linalg::{self, SymMat};
use crate::sampling::{bracketed_root, cube_to_direction, QuasiRandom};
use crate::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gradient norms below this are treated as a failure of the regular-value
/// hypothesis.
pub const REGULARITY_FLOOR: f64 = 1e-8;

/// Newton projection drives |f| below this.
pub const PROJECTION_TOL: f64 = 1e-13;

/// Default constraint tolerance for phase-point invariants.
pub const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError<R: Real> {
    #[error("gradient norm {grad_norm:e} below regularity floor at {point:?}")]
    Regularity { point: Vec<R>, grad_norm: R },
    #[error("Hessian indefinite at witness {point:?}: eigenvalues span [{eigenvalue}, {max_eigenvalue}]")]
    Indefinite {
        point: Vec<R>,
        eigenvalue: R,
        eigenvector: Vec<R>,
        max_eigenvalue: R,
    },
    #[error("projection did not converge after {iterations} Newton steps (|f| = {residual:e})")]
    ProjectionDiverged { iterations: usize, residual: R },
    #[error("projected covector norm {norm:e} below 1e-8")]
    ZeroCovector { norm: R },
    #[error("tangent plane degenerate: |v ^ w| = {wedge:e}")]
    DegeneratePlane { wedge: R },
    #[error("no surface points found along {attempted} probe directions")]
    NoSurfacePoints { attempted: usize },
    #[error("unsupported revolution profile: {detail}")]
    UnsupportedProfile { detail: String },
    #[error("invalid surface family: {detail}")]
    InvalidFamily { detail: String },
    #[error(transparent)]
    Expression(#[from] ExprError<R>),
}

pub type SurfaceResult<T, R> = Result<T, SurfaceError<R>>;

#[derive(Debug, Clone)]
enum Family<R: Real> {
    Sphere { radius: R, ambient: usize },
    /// f = sum x_i^2 / a_i^2 - 1; also backs the revolution family, whose
    /// profile c*sin(phi) is exactly the ellipsoid with semiaxes (c, 1, .., 1).
    Ellipsoid { semiaxes: Vec<R> },
    Expression(ExpressionAst<R>),
}

/// A smooth defining function f with exact value/gradient/Hessian evaluation;
/// M is its zero level set. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct DefiningSurface<R: Real> {
    family: Family<R>,
    /// Revolution surfaces keep their profile for the closed-form side.
    profile: Option<RevolutionProfile<R>>,
    negated: bool,
    length_scale: R,
}

impl<R: Real> DefiningSurface<R> {
    pub fn sphere(radius: R, ambient_dim: usize) -> SurfaceResult<Self, R> {
        if radius <= R::zero() || ambient_dim < 3 || ambient_dim > 16 {
            return Err(SurfaceError::InvalidFamily {
                detail: "sphere needs radius > 0 and ambient dimension in 3..=16".into(),
            });
        }
        Ok(Self {
            family: Family::Sphere {
                radius,
                ambient: ambient_dim,
            },
            profile: None,
            negated: false,
            length_scale: radius + radius,
        })
    }

    pub fn ellipsoid(semiaxes: &[R]) -> SurfaceResult<Self, R> {
        if semiaxes.len() < 3 || semiaxes.len() > 16 || semiaxes.iter().any(|&a| a <= R::zero()) {
            return Err(SurfaceError::InvalidFamily {
                detail: "ellipsoid needs 3..=16 positive semiaxes".into(),
            });
        }
        let scale = semiaxes
            .iter()
            .fold(R::zero(), |m, &a| m.max(a));
        Ok(Self {
            family: Family::Ellipsoid {
                semiaxes: semiaxes.to_vec(),
            },
            profile: None,
            negated: false,
            length_scale: scale + scale,
        })
    }

    /// Hypersurface of revolution from a profile a(phi). The implicit form
    /// used for flow integration requires the profile to reduce to
    /// c*sin(phi); general symmetric profiles are supported by the
    /// closed-form module only.
    pub fn revolution(profile: RevolutionProfile<R>, ambient_dim: usize) -> SurfaceResult<Self, R> {
        if ambient_dim < 3 || ambient_dim > 16 {
            return Err(SurfaceError::InvalidFamily {
                detail: "revolution needs ambient dimension in 3..=16".into(),
            });
        }
        let c = profile
            .sin_coefficient()
            .ok_or_else(|| SurfaceError::UnsupportedProfile {
                detail: format!(
                    "`{}` does not reduce to c*sin(phi); only such profiles have an \
                     implicit defining function here",
                    profile.text()
                ),
            })?;
        if c <= R::zero() {
            return Err(SurfaceError::UnsupportedProfile {
                detail: "profile coefficient must be positive".into(),
            });
        }
        let mut semiaxes = vec![R::one(); ambient_dim];
        semiaxes[0] = c;
        let scale = c.max(R::one());
        Ok(Self {
            family: Family::Ellipsoid { semiaxes },
            profile: Some(profile),
            negated: false,
            length_scale: scale + scale,
        })
    }

    pub fn from_expression(ast: ExpressionAst<R>) -> SurfaceResult<Self, R> {
        if ast.dimension() < 3 {
            return Err(SurfaceError::InvalidFamily {
                detail: "expression surfaces need ambient dimension >= 3".into(),
            });
        }
        let mut surface = Self {
            family: Family::Expression(ast),
            profile: None,
            negated: false,
            length_scale: R::one(),
        };
        surface.length_scale = surface.probe_length_scale()?;
        Ok(surface)
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.family {
            Family::Sphere { ambient, .. } => *ambient,
            Family::Ellipsoid { semiaxes } => semiaxes.len(),
            Family::Expression(ast) => ast.dimension(),
        }
    }

    /// Dimension n of the hypersurface M itself.
    pub fn surface_dim(&self) -> usize {
        self.ambient_dim() - 1
    }

    pub fn sign_normalized(&self) -> bool {
        self.negated
    }

    /// Diameter estimate used to scale tolerances and strip widths.
    pub fn length_scale(&self) -> R {
        self.length_scale
    }

    pub fn profile(&self) -> Option<&RevolutionProfile<R>> {
        self.profile.as_ref()
    }

    /// For surfaces of revolution backed by c*sin(phi) (and for unit-equator
    /// ellipsoids), the closed-form semiaxis a0; `None` otherwise.
    pub fn revolution_coefficient(&self) -> Option<R> {
        match &self.family {
            Family::Ellipsoid { semiaxes } => {
                let unit_rest = semiaxes[1..].iter().all(|&a| a == R::one());
                unit_rest.then_some(semiaxes[0])
            }
            Family::Sphere { radius, .. } => (*radius == R::one()).then_some(R::one()),
            Family::Expression(_) => None,
        }
    }

    /// Copy with the defining function negated (sign normalization).
    pub fn negated_copy(&self) -> Self {
        let mut s = self.clone();
        s.negated = !self.negated;
        s
    }

    pub fn value(&self, x: &[R]) -> SurfaceResult<R, R> {
        let v = match &self.family {
            Family::Sphere { radius, .. } => linalg::dot(x, x) - *radius * *radius,
            Family::Ellipsoid { semiaxes } => {
                let mut acc = -R::one();
                for (xi, ai) in x.iter().zip(semiaxes) {
                    acc += *xi * *xi / (*ai * *ai);
                }
                acc
            }
            Family::Expression(ast) => ast.eval(x)?,
        };
        Ok(if self.negated { -v } else { v })
    }

    pub fn value_and_gradient(&self, x: &[R]) -> SurfaceResult<(R, Vec<R>), R> {
        let (v, g) = match &self.family {
            Family::Sphere { radius, .. } => (
                linalg::dot(x, x) - *radius * *radius,
                x.iter().map(|&xi| xi + xi).collect(),
            ),
            Family::Ellipsoid { semiaxes } => {
                let mut acc = -R::one();
                let mut g = Vec::with_capacity(x.len());
                for (xi, ai) in x.iter().zip(semiaxes) {
                    let inv = (*ai * *ai).recip();
                    acc += *xi * *xi * inv;
                    g.push((*xi + *xi) * inv);
                }
                (acc, g)
            }
            Family::Expression(ast) => ast.eval_with_gradient(x)?,
        };
        Ok(if self.negated {
            (-v, g.into_iter().map(|gi| -gi).collect())
        } else {
            (v, g)
        })
    }

    pub fn jet(&self, x: &[R]) -> SurfaceResult<JetValue<R>, R> {
        let dim = self.ambient_dim();
        let jet = match &self.family {
            Family::Sphere { radius, .. } => {
                let two = R::lit(2.0);
                JetValue {
                    value: linalg::dot(x, x) - *radius * *radius,
                    gradient: x.iter().map(|&xi| xi + xi).collect(),
                    hessian: SymMat::from_diagonal(&vec![two; dim]),
                }
            }
            Family::Ellipsoid { semiaxes } => {
                let mut value = -R::one();
                let mut gradient = Vec::with_capacity(dim);
                let mut diag = Vec::with_capacity(dim);
                for (xi, ai) in x.iter().zip(semiaxes) {
                    let inv = (*ai * *ai).recip();
                    value += *xi * *xi * inv;
                    gradient.push((*xi + *xi) * inv);
                    diag.push(inv + inv);
                }
                JetValue {
                    value,
                    gradient,
                    hessian: SymMat::from_diagonal(&diag),
                }
            }
            Family::Expression(ast) => ast.jet(x)?,
        };
        Ok(if self.negated {
            JetValue {
                value: -jet.value,
                gradient: jet.gradient.into_iter().map(|g| -g).collect(),
                hessian: jet.hessian.map(|h| -h),
            }
        } else {
            jet
        })
    }

    /// Gradient with the regularity floor enforced.
    pub fn regular_gradient(&self, x: &[R]) -> SurfaceResult<(R, Vec<R>), R> {
        let (v, g) = self.value_and_gradient(x)?;
        let gn = linalg::norm(&g);
        if gn < R::lit(REGULARITY_FLOOR) {
            return Err(SurfaceError::Regularity {
                point: x.to_vec(),
                grad_norm: gn,
            });
        }
        Ok((v, g))
    }

    fn probe_length_scale(&self) -> SurfaceResult<R, R> {
        let dim = self.ambient_dim();
        let mut seq = QuasiRandom::new(dim);
        let mut max_norm = R::zero();
        let mut hits = 0usize;
        let attempts = 256;
        for _ in 0..attempts {
            let dir = cube_to_direction::<R>(&seq.next_point());
            if let Some(x) = self.ray_shoot(&dir) {
                max_norm = max_norm.max(linalg::norm(&x));
                hits += 1;
            }
        }
        if hits == 0 {
            return Err(SurfaceError::NoSurfacePoints {
                attempted: attempts,
            });
        }
        Ok(max_norm + max_norm)
    }

    /// First zero of f along the ray s -> s*dir, s > 0.
    pub fn ray_shoot(&self, dir: &[R]) -> Option<Vec<R>> {
        let scale = self.length_scale.max(R::one());
        let g = |s: R| self.value(&linalg::scale(dir, s)).ok();
        let s = bracketed_root(&g, R::lit(1e-4) * scale, R::lit(64.0) * scale, 256, R::lit(1e-13))?;
        Some(linalg::scale(dir, s))
    }

    /// First zero of f along s -> (x0, s*dir_rest) within the slice
    /// {x_0 = x0}; used for strip and equator sampling.
    pub fn slice_shoot(&self, x0: R, dir_rest: &[R]) -> Option<Vec<R>> {
        debug_assert_eq!(dir_rest.len(), self.ambient_dim() - 1);
        let scale = self.length_scale.max(R::one());
        let point = |s: R| {
            let mut x = Vec::with_capacity(self.ambient_dim());
            x.push(x0);
            x.extend(dir_rest.iter().map(|&d| d * s));
            x
        };
        let g = |s: R| self.value(&point(s)).ok();
        let s = bracketed_root(&g, R::lit(1e-4) * scale, R::lit(64.0) * scale, 256, R::lit(1e-13))?;
        Some(point(s))
    }
}

/// JSON-facing surface description, one of:
///
/// ```json
/// {"family":"sphere","radius":1.0,"dimension":3}
/// {"family":"ellipsoid","semiaxes":[2,1,1]}
/// {"family":"revolution","profile":"0.5*sin(phi)","dimension":3}
/// {"expression":"x0^2/4 + x1^2 + x2^2 - 1","dimension":3}
/// ```
///
/// `dimension` is the ambient dimension n+1 (the number of variables).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semiaxes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
}

impl SurfaceSpec {
    pub fn build<R: Real>(&self) -> SurfaceResult<DefiningSurface<R>, R> {
        let invalid = |detail: &str| SurfaceError::InvalidFamily {
            detail: detail.to_string(),
        };
        if let Some(expr) = &self.expression {
            if self.family.is_some() || self.radius.is_some() || self.semiaxes.is_some() {
                return Err(invalid("expression surfaces take only `dimension`"));
            }
            let dim = self
                .dimension
                .ok_or_else(|| invalid("expression surfaces need `dimension`"))?;
            let ast = crate::expr::parse_expression::<R>(expr, dim)?;
            return DefiningSurface::from_expression(ast);
        }
        match self.family.as_deref() {
            Some("sphere") => {
                let r = self.radius.ok_or_else(|| invalid("sphere needs `radius`"))?;
                let dim = self.dimension.unwrap_or(3);
                DefiningSurface::sphere(R::lit(r), dim)
            }
            Some("ellipsoid") => {
                let axes = self
                    .semiaxes
                    .as_ref()
                    .ok_or_else(|| invalid("ellipsoid needs `semiaxes`"))?;
                if let Some(d) = self.dimension {
                    if d != axes.len() {
                        return Err(invalid("`dimension` must match the number of semiaxes"));
                    }
                }
                let axes: Vec<R> = axes.iter().map(|&a| R::lit(a)).collect();
                DefiningSurface::ellipsoid(&axes)
            }
            Some("revolution") => {
                let text = self
                    .profile
                    .as_ref()
                    .ok_or_else(|| invalid("revolution needs `profile`"))?;
                let dim = self.dimension.unwrap_or(3);
                let profile = RevolutionProfile::<R>::parse(text).map_err(|e| match e {
                    crate::closedform::ClosedFormError::Expression(err) => {
                        SurfaceError::Expression(err)
                    }
                    other => SurfaceError::UnsupportedProfile {
                        detail: other.to_string(),
                    },
                })?;
                DefiningSurface::revolution(profile, dim)
            }
            Some(other) => Err(invalid(&format!("unknown family `{other}`"))),
            None => Err(invalid(
                "surface needs either `family` or `expression`",
            )),
        }
    }
}

/// An ambient pair (x, y) representing a unit covector on M, identified with
/// a tangent vector through the induced metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint<R> {
    pub x: Vec<R>,
    pub y: Vec<R>,
}

/// Constraint residuals of a phase point: |f|, |y . grad f|, |‖y‖ - 1|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals<R> {
    pub level: R,
    pub tangency: R,
    pub unit_norm: R,
}

impl<R: Real> Residuals<R> {
    pub fn max(&self) -> R {
        self.level.max(self.tangency).max(self.unit_norm)
    }
}

impl<R: Real> PhasePoint<R> {
    pub fn new(x: Vec<R>, y: Vec<R>) -> Self {
        Self { x, y }
    }

    pub fn x0(&self) -> R {
        self.x[0]
    }

    pub fn y0(&self) -> R {
        self.y[0]
    }

    pub fn residuals(&self, surface: &DefiningSurface<R>) -> SurfaceResult<Residuals<R>, R> {
        let (f, g) = surface.value_and_gradient(&self.x)?;
        Ok(Residuals {
            level: f.abs(),
            tangency: linalg::dot(&self.y, &g).abs(),
            unit_norm: (linalg::norm(&self.y) - R::one()).abs(),
        })
    }

    /// Distance to another phase point in the ambient product metric.
    pub fn distance(&self, other: &Self) -> R {
        let dx = linalg::sub(&self.x, &other.x);
        let dy = linalg::sub(&self.y, &other.y);
        (linalg::dot(&dx, &dx) + linalg::dot(&dy, &dy)).sqrt()
    }
}

/// Moves `x_raw` onto M by Newton iteration along the gradient and projects
/// `y_raw` onto the unit tangent covectors at the result.
///
/// Idempotent to rounding, and never increases |f|.
pub fn project_to_surface<R: Real>(
    surface: &DefiningSurface<R>,
    x_raw: &[R],
    y_raw: &[R],
) -> SurfaceResult<PhasePoint<R>, R> {
    let tol = R::lit(PROJECTION_TOL);
    let mut x = x_raw.to_vec();
    let (mut f, mut g) = surface.regular_gradient(&x)?;
    let mut iterations = 0usize;
    while f.abs() > tol {
        if iterations >= 50 {
            return Err(SurfaceError::ProjectionDiverged {
                iterations,
                residual: f.abs(),
            });
        }
        let g2 = linalg::dot(&g, &g);
        let mut step = f / g2;
        // Damped Newton: never accept a step that increases |f|.
        let mut accepted = false;
        for _ in 0..30 {
            let cand = linalg::axpy(&x, -step, &g);
            let (fc, gc) = surface.regular_gradient(&cand)?;
            if fc.abs() <= f.abs() {
                x = cand;
                f = fc;
                g = gc;
                accepted = true;
                break;
            }
            step = step * R::lit(0.5);
        }
        if !accepted {
            return Err(SurfaceError::ProjectionDiverged {
                iterations,
                residual: f.abs(),
            });
        }
        iterations += 1;
    }
    let gn = linalg::norm(&g);
    let unit_normal = linalg::scale(&g, gn.recip());
    let y_tangent = linalg::axpy(y_raw, -linalg::dot(y_raw, &unit_normal), &unit_normal);
    let yn = linalg::norm(&y_tangent);
    if yn < R::lit(1e-8) {
        return Err(SurfaceError::ZeroCovector { norm: yn });
    }
    Ok(PhasePoint::new(x, linalg::scale(&y_tangent, yn.recip())))
}

/// The shape operator S(v) as a tangent vector: <S(v), w> = Hess(v,w)/‖grad f‖
/// for every tangent w.
pub fn shape_operator<R: Real>(
    surface: &DefiningSurface<R>,
    x: &[R],
    v: &[R],
) -> SurfaceResult<Vec<R>, R> {
    let jet = surface.jet(x)?;
    let gn = linalg::norm(&jet.gradient);
    if gn < R::lit(REGULARITY_FLOOR) {
        return Err(SurfaceError::Regularity {
            point: x.to_vec(),
            grad_norm: gn,
        });
    }
    let normal = linalg::scale(&jet.gradient, gn.recip());
    let hv = jet.hessian.mul_vec(v);
    let tangential = linalg::axpy(&hv, -linalg::dot(&hv, &normal), &normal);
    Ok(linalg::scale(&tangential, gn.recip()))
}

/// Sectional curvature of the tangent plane spanned by v, w at x:
/// K = (Hess(v,v) Hess(w,w) - Hess(v,w)^2)/‖grad f‖^2 after orthonormalizing
/// v, w within the tangent space.
pub fn sectional_curvature<R: Real>(
    surface: &DefiningSurface<R>,
    x: &[R],
    v: &[R],
    w: &[R],
) -> SurfaceResult<R, R> {
    let jet = surface.jet(x)?;
    let gn = linalg::norm(&jet.gradient);
    if gn < R::lit(REGULARITY_FLOOR) {
        return Err(SurfaceError::Regularity {
            point: x.to_vec(),
            grad_norm: gn,
        });
    }
    let normal = linalg::scale(&jet.gradient, gn.recip());
    let vt = linalg::axpy(v, -linalg::dot(v, &normal), &normal);
    let wt = linalg::axpy(w, -linalg::dot(w, &normal), &normal);
    let vn = linalg::norm(&vt);
    let wn = linalg::norm(&wt);
    let wedge_floor = R::lit(1e-10);
    if vn < wedge_floor || wn < wedge_floor {
        return Err(SurfaceError::DegeneratePlane {
            wedge: vn.min(wn),
        });
    }
    let v_hat = linalg::scale(&vt, vn.recip());
    let mut w_perp = linalg::axpy(&wt, -linalg::dot(&wt, &v_hat), &v_hat);
    let wp = linalg::norm(&w_perp);
    if wp < wedge_floor * wn {
        return Err(SurfaceError::DegeneratePlane { wedge: wp / wn });
    }
    w_perp = linalg::scale(&w_perp, wp.recip());
    let hvv = jet.hessian.quad_form(&v_hat, &v_hat);
    let hww = jet.hessian.quad_form(&w_perp, &w_perp);
    let hvw = jet.hessian.quad_form(&v_hat, &w_perp);
    Ok((hvv * hww - hvw * hvw) / (gn * gn))
}

/// Orthonormal tangent basis at x (n vectors), from tangentially projected
/// canonical axes.
pub fn tangent_basis<R: Real>(
    surface: &DefiningSurface<R>,
    x: &[R],
) -> SurfaceResult<Vec<Vec<R>>, R> {
    let (_, g) = surface.regular_gradient(x)?;
    let normal = vec![linalg::scale(&g, linalg::norm(&g).recip())];
    let dim = surface.ambient_dim();
    let seeds: Vec<Vec<R>> = (0..dim)
        .map(|i| {
            let mut e = vec![R::zero(); dim];
            e[i] = R::one();
            e
        })
        .collect();
    Ok(linalg::gram_schmidt(&normal, &seeds, R::lit(1e-8)))
}

// ---------------------------------------------------------------------------
// Sampling on M
// ---------------------------------------------------------------------------

/// Quasi-random points on M by ray shooting; directions that miss the surface
/// are skipped.
pub fn sample_points<R: Real>(
    surface: &DefiningSurface<R>,
    count: usize,
) -> SurfaceResult<Vec<Vec<R>>, R> {
    let dim = surface.ambient_dim();
    let mut seq = QuasiRandom::new(dim);
    let mut points = Vec::with_capacity(count);
    let attempts = count.saturating_mul(8).max(256);
    for _ in 0..attempts {
        if points.len() == count {
            break;
        }
        let dir = cube_to_direction::<R>(&seq.next_point());
        if let Some(x) = surface.ray_shoot(&dir) {
            points.push(x);
        }
    }
    if points.is_empty() {
        return Err(SurfaceError::NoSurfacePoints { attempted: attempts });
    }
    Ok(points)
}

/// Quasi-random phase points (x on M, y unit tangent covector).
pub fn sample_phases<R: Real>(
    surface: &DefiningSurface<R>,
    count: usize,
) -> SurfaceResult<Vec<PhasePoint<R>>, R> {
    let dim = surface.ambient_dim();
    let mut seq = QuasiRandom::new(2 * dim);
    let mut phases = Vec::with_capacity(count);
    let attempts = count.saturating_mul(8).max(256);
    for _ in 0..attempts {
        if phases.len() == count {
            break;
        }
        let u = seq.next_point::<R>();
        let dir = cube_to_direction::<R>(&u[..dim]);
        let ydir = cube_to_direction::<R>(&u[dim..]);
        if let Some(x) = surface.ray_shoot(&dir) {
            if let Ok(phase) = project_to_surface(surface, &x, &ydir) {
                phases.push(phase);
            }
        }
    }
    if phases.is_empty() {
        return Err(SurfaceError::NoSurfacePoints { attempted: attempts });
    }
    Ok(phases)
}

/// Points of M inside the strip |x_0| <= halfwidth, sampled slice by slice.
pub fn sample_strip<R: Real>(
    surface: &DefiningSurface<R>,
    halfwidth: R,
    count: usize,
) -> SurfaceResult<Vec<Vec<R>>, R> {
    let rest = surface.ambient_dim() - 1;
    let mut seq = QuasiRandom::new(rest + 1);
    let mut points = Vec::with_capacity(count);
    let attempts = count.saturating_mul(8).max(256);
    for _ in 0..attempts {
        if points.len() == count {
            break;
        }
        let u = seq.next_point::<R>();
        let x0 = (u[0] + u[0] - R::one()) * halfwidth;
        let dir = cube_to_direction::<R>(&u[1..]);
        if let Some(x) = surface.slice_shoot(x0, &dir) {
            points.push(x);
        }
    }
    if points.is_empty() {
        return Err(SurfaceError::NoSurfacePoints { attempted: attempts });
    }
    Ok(points)
}

/// Binding points: x on the equator {x_0 = 0}, y a unit tangent covector with
/// y_0 = 0.
pub fn sample_binding<R: Real>(
    surface: &DefiningSurface<R>,
    count: usize,
) -> SurfaceResult<Vec<PhasePoint<R>>, R> {
    let rest = surface.ambient_dim() - 1;
    let mut seq = QuasiRandom::new(2 * rest);
    let mut phases = Vec::with_capacity(count);
    let attempts = count.saturating_mul(8).max(256);
    for _ in 0..attempts {
        if phases.len() == count {
            break;
        }
        let u = seq.next_point::<R>();
        let dir = cube_to_direction::<R>(&u[..rest]);
        let Some(x) = surface.slice_shoot(R::zero(), &dir) else {
            continue;
        };
        let mut y_raw = vec![R::zero(); rest + 1];
        let ydir = cube_to_direction::<R>(&u[rest..]);
        y_raw[1..].copy_from_slice(&ydir);
        let Ok(mut phase) = project_to_surface(surface, &x, &y_raw) else {
            continue;
        };
        // For A1-symmetric surfaces the projection preserves the zeros
        // exactly; enforce them bitwise for binding starts anyway.
        phase.x[0] = R::zero();
        phase.y[0] = R::zero();
        if let Ok(p) = project_to_surface(surface, &phase.x, &phase.y) {
            phases.push(p);
        }
    }
    if phases.is_empty() {
        return Err(SurfaceError::NoSurfacePoints { attempted: attempts });
    }
    Ok(phases)
}

// ---------------------------------------------------------------------------
// Audits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct SymmetryFinding<R> {
    pub ok: bool,
    /// max |f(x0, x) - f(-x0, x)| over strip samples.
    pub max_violation: R,
    /// max |f_0(0, x)| over equator samples.
    pub max_odd_gradient: R,
    pub threshold: R,
    pub strip_halfwidth: R,
    pub samples: usize,
    pub witness: Option<Vec<R>>,
}

/// Checks the reflection symmetry f(x0, x) = f(-x0, x) on a strip of M and
/// the induced condition f_0 = 0 on the equator.
pub fn audit_symmetry<R: Real>(
    surface: &DefiningSurface<R>,
    strip_halfwidth: R,
    samples: usize,
) -> SurfaceResult<SymmetryFinding<R>, R> {
    let strip = sample_strip(surface, strip_halfwidth, samples)?;
    let mut max_violation = R::zero();
    let mut f_scale = R::one();
    let mut witness: Option<Vec<R>> = None;
    for x in &strip {
        let (_, g) = surface.regular_gradient(x)?;
        f_scale = f_scale.max(linalg::norm(&g) * surface.length_scale());
        let mut mirrored = x.clone();
        mirrored[0] = -mirrored[0];
        let v = (surface.value(x)? - surface.value(&mirrored)?).abs();
        if v > max_violation {
            max_violation = v;
            witness = Some(x.clone());
        }
    }
    let equator = sample_strip(surface, R::zero(), samples.min(1024).max(64))?;
    let mut max_odd_gradient = R::zero();
    for x in &equator {
        let (_, g) = surface.regular_gradient(x)?;
        if g[0].abs() > max_odd_gradient {
            max_odd_gradient = g[0].abs();
            if g[0].abs() > max_violation && witness.is_none() {
                witness = Some(x.clone());
            }
        }
    }
    let threshold = R::lit(1e-10) * f_scale;
    let ok = max_violation < threshold && max_odd_gradient < threshold;
    Ok(SymmetryFinding {
        ok,
        max_violation,
        max_odd_gradient,
        threshold,
        strip_halfwidth,
        samples: strip.len(),
        witness: if ok { None } else { witness },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    Positive,
    Negative,
    Indefinite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct DefinitenessFinding<R> {
    pub class: Definiteness,
    /// Smallest Hessian eigenvalue seen over all sampled points (of the
    /// original, un-normalized sign).
    pub min_eigenvalue: R,
    pub max_eigenvalue: R,
    pub witness_point: Vec<R>,
    pub samples: usize,
}

/// Classifies Hess(f) over sampled M-points by its extreme eigenvalues; a
/// negative-definite Hessian is normalized away by flipping the sign of f.
/// Indefinite Hessians are reported as an error carrying the witness.
pub fn audit_definiteness<R: Real>(
    surface: &DefiningSurface<R>,
    samples: usize,
) -> SurfaceResult<(DefinitenessFinding<R>, DefiningSurface<R>), R> {
    let points = sample_points(surface, samples)?;
    let evaluated: Vec<(R, Vec<R>, R, Vec<R>)> = points
        .par_iter()
        .map(|x| {
            let jet = surface.jet(x)?;
            let gn = linalg::norm(&jet.gradient);
            if gn < R::lit(REGULARITY_FLOOR) {
                return Err(SurfaceError::Regularity {
                    point: x.clone(),
                    grad_norm: gn,
                });
            }
            let (vals, vecs) = jet.hessian.eigen_jacobi();
            Ok((
                vals[0],
                vecs[0].clone(),
                vals[vals.len() - 1],
                x.clone(),
            ))
        })
        .collect::<SurfaceResult<_, R>>()?;
    let mut min_eig = R::infinity();
    let mut max_eig = R::neg_infinity();
    let mut min_entry: Option<(R, Vec<R>, Vec<R>)> = None;
    for (lo, vec_lo, hi, x) in &evaluated {
        if *lo < min_eig {
            min_eig = *lo;
            min_entry = Some((*lo, vec_lo.clone(), x.clone()));
        }
        max_eig = max_eig.max(*hi);
    }
    let (eigenvalue, eigenvector, witness) = min_entry.expect("at least one sample");
    let finding = |class| DefinitenessFinding {
        class,
        min_eigenvalue: min_eig,
        max_eigenvalue: max_eig,
        witness_point: witness.clone(),
        samples: evaluated.len(),
    };
    if min_eig > R::zero() {
        Ok((finding(Definiteness::Positive), surface.clone()))
    } else if max_eig < R::zero() {
        Ok((finding(Definiteness::Negative), surface.negated_copy()))
    } else {
        Err(SurfaceError::Indefinite {
            point: witness,
            eigenvalue,
            eigenvector,
            max_eigenvalue: max_eig,
        })
    }
}

/// Range of sampled sectional curvatures over coordinate planes of tangent
/// bases at sampled points.
pub fn curvature_range<R: Real>(
    surface: &DefiningSurface<R>,
    samples: usize,
) -> SurfaceResult<(R, R), R> {
    let points = sample_points(surface, samples)?;
    let ranges: Vec<(R, R)> = points
        .par_iter()
        .map(|x| {
            let basis = tangent_basis(surface, x)?;
            let mut lo = R::infinity();
            let mut hi = R::neg_infinity();
            for i in 0..basis.len() {
                for j in (i + 1)..basis.len() {
                    let k = sectional_curvature(surface, x, &basis[i], &basis[j])?;
                    lo = lo.min(k);
                    hi = hi.max(k);
                }
            }
            Ok((lo, hi))
        })
        .collect::<SurfaceResult<_, R>>()?;
    let lo = ranges.iter().fold(R::infinity(), |m, r| m.min(r.0));
    let hi = ranges.iter().fold(R::neg_infinity(), |m, r| m.max(r.1));
    Ok((lo, hi))
}

/// Audit summary for a surface; `epsilon_estimate` is filled by the section
/// module when the definiteness audit passed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct AuditReport<R> {
    pub format_version: u32,
    pub sample_count: usize,
    pub strip_halfwidth: R,
    pub symmetry: SymmetryFinding<R>,
    pub definiteness: Option<DefinitenessFinding<R>>,
    pub definiteness_witness: Option<Vec<R>>,
    pub sign_normalized: bool,
    pub curvature_range: Option<(R, R)>,
    pub epsilon_estimate: Option<R>,
    pub passed: bool,
}

pub const REPORT_FORMAT_VERSION: u32 = 1;
