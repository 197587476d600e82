//! The open book around the binding B = {x0 = y0 = 0}: winding angle, the
//! angular bound A(x,y), first-return maps onto the page P = {x0 = 0, y0 >= 0}
//! with return times, a-posteriori symplecticity checks of the return map,
//! and boundary behavior through the normal Hessian.
//!
//! Crossing detection works on the unwrapped winding angle rather than the
//! sign of x0: x0 vanishes twice per revolution with opposite y0 signs, and
//! the angle criterion selects the correct sheet automatically.

use crate::flow::{self, FlowError, FlowState, IntegratorConfig};
use crate::linalg;
use crate::surface::{
    audit_definiteness, audit_symmetry, curvature_range, project_to_surface, sample_binding,
    sample_phases, AuditReport, Definiteness, DefinitenessFinding, DefiningSurface, PhasePoint,
    SurfaceError, SurfaceResult, REPORT_FORMAT_VERSION,
};
use crate::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SectionError<R: Real> {
    #[error("point lies on the binding (x0^2 + y0^2 = {r2:e})")]
    OnBinding { r2: R },
    #[error("point is not on the binding: |x0| = {x0:e}, |y0| = {y0:e}")]
    NotOnBinding { x0: R, y0: R },
    #[error("start is not on the page: angle {angle}, expected {expected}")]
    NotOnPage { angle: R, expected: R },
    #[error("start too close to the binding for differencing: distance {distance:e} <= {required:e}")]
    BindingTooClose { distance: R, required: R },
    #[error("exceeded {max_steps} steps at unwrapped angle {angle_reached} (epsilon estimate too small or step too coarse)")]
    MaxStepsExceeded { max_steps: usize, angle_reached: R },
    #[error("sampled angular bound is not positive: min A = {min_a}; an audit should have failed upstream")]
    NonPositiveEpsilon { min_a: R },
    #[error("boundary extrapolation does not contract: ratios {ratios:?}")]
    NonConvergent { ratios: Vec<f64> },
    #[error("page tangent basis is degenerate: got {got} of {expected} directions")]
    DegenerateBasis { got: usize, expected: usize },
    #[error(transparent)]
    Flow(#[from] FlowError<R>),
}

impl<R: Real> From<SurfaceError<R>> for SectionError<R> {
    fn from(e: SurfaceError<R>) -> Self {
        SectionError::Flow(FlowError::Surface(e))
    }
}

pub type SectionResult<T, R> = Result<T, SectionError<R>>;

fn binding_r2<R: Real>(phase: &PhasePoint<R>) -> R {
    phase.x0() * phase.x0() + phase.y0() * phase.y0()
}

/// The angle map pi(x,y) = (x0 + i y0)/|x0 + i y0| as a value in [0, 2 pi);
/// the page P sits at pi/2.
pub fn page_angle<R: Real>(phase: &PhasePoint<R>) -> SectionResult<R, R> {
    let r2 = binding_r2(phase);
    if r2 < R::lit(1e-20) {
        return Err(SectionError::OnBinding { r2 });
    }
    let a = phase.y0().atan2(phase.x0());
    Ok(if a < R::zero() { a + R::TAU() } else { a })
}

/// A(x,y) = (Hess(f)_x(y,y)/‖grad f‖^2) * (f_0(x)/x_0), with the removable
/// singularity at x0 = 0 evaluated through f_00(0, x): the two branches agree
/// to O(threshold) at the switch (exactly, for surfaces even in x0 of
/// quadratic type).
pub fn a_value<R: Real>(
    surface: &DefiningSurface<R>,
    phase: &PhasePoint<R>,
) -> SectionResult<R, R> {
    let jet = surface.jet(&phase.x)?;
    let gn2 = linalg::dot(&jet.gradient, &jet.gradient);
    let hyy = jet.hessian.quad_form(&phase.y, &phase.y);
    Ok(a_from_jet_parts(
        surface,
        &phase.x,
        hyy,
        gn2,
        jet.gradient[0],
    )?)
}

/// Shared branch logic, reusing an already computed jet at x.
pub(crate) fn a_from_jet_parts<R: Real>(
    surface: &DefiningSurface<R>,
    x: &[R],
    hyy: R,
    gn2: R,
    g0: R,
) -> SurfaceResult<R, R> {
    let threshold = R::lit(1e-4) * surface.length_scale();
    let ratio = if x[0].abs() > threshold {
        g0 / x[0]
    } else {
        let mut x_eq = x.to_vec();
        x_eq[0] = R::zero();
        surface.jet(&x_eq)?.hessian.get(0, 0)
    };
    Ok(hyy / gn2 * ratio)
}

/// theta(X_H) = A x0^2 + y0^2 and its normalization Theta(X_H) =
/// theta/(x0^2 + y0^2); the latter is undefined on the binding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaField<R> {
    pub theta: R,
    pub capital_theta: Option<R>,
}

pub fn theta_of_field<R: Real>(
    surface: &DefiningSurface<R>,
    phase: &PhasePoint<R>,
) -> SectionResult<ThetaField<R>, R> {
    let a = a_value(surface, phase)?;
    let x0 = phase.x0();
    let y0 = phase.y0();
    let theta = a * x0 * x0 + y0 * y0;
    let r2 = x0 * x0 + y0 * y0;
    let capital_theta = (r2 >= R::lit(1e-20)).then(|| theta / r2);
    Ok(ThetaField {
        theta,
        capital_theta,
    })
}

/// Theta(X_H) alone, erroring on the binding.
pub fn capital_theta<R: Real>(
    surface: &DefiningSurface<R>,
    phase: &PhasePoint<R>,
) -> SectionResult<R, R> {
    let t = theta_of_field(surface, phase)?;
    t.capital_theta.ok_or(SectionError::OnBinding {
        r2: binding_r2(phase),
    })
}

/// Heuristic lower bound for A over Y \ B (hence for Theta, since
/// Theta >= min(A, 1)): the minimum over quasi-random phases, a quarter of
/// them on the binding to exercise the f_00 branch, refined by coordinate
/// descent at the ten smallest samples.
pub fn estimate_epsilon<R: Real>(
    surface: &DefiningSurface<R>,
    samples: usize,
) -> SectionResult<R, R> {
    let samples = samples.max(16);
    let n_binding = samples / 4;
    let mut phases = sample_phases(surface, samples - n_binding)?;
    phases.extend(sample_binding(surface, n_binding)?);
    let values: Vec<R> = phases
        .par_iter()
        .map(|p| a_value(surface, p))
        .collect::<SectionResult<_, R>>()?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        values[i]
            .partial_cmp(&values[j])
            .expect("finite A values")
            .then(i.cmp(&j))
    });
    let mut best = values[order[0]];
    for &i in order.iter().take(10) {
        best = best.min(descend_a(surface, &phases[i], values[i]));
    }
    if best <= R::zero() {
        return Err(SectionError::NonPositiveEpsilon { min_a: best });
    }
    Ok(best)
}

/// Local pattern search minimizing A from a starting phase, staying on Y by
/// re-projection after every trial move.
fn descend_a<R: Real>(surface: &DefiningSurface<R>, start: &PhasePoint<R>, start_value: R) -> R {
    let dim = surface.ambient_dim();
    let scale = surface.length_scale();
    let mut phase = start.clone();
    let mut best = start_value;
    let mut delta = R::lit(1e-2) * scale;
    let floor = R::lit(1e-7) * scale;
    let mut budget = 400usize;
    while delta > floor && budget > 0 {
        let mut improved = false;
        for j in 0..dim {
            for sign in [R::one(), -R::one()] {
                budget = budget.saturating_sub(1);
                let mut x = phase.x.clone();
                x[j] += sign * delta;
                if let Ok(p) = project_to_surface(surface, &x, &phase.y) {
                    if let Ok(a) = a_value(surface, &p) {
                        if a < best {
                            best = a;
                            phase = p;
                            improved = true;
                        }
                    }
                }
                let mut y = phase.y.clone();
                y[j] += sign * delta;
                if let Ok(p) = project_to_surface(surface, &phase.x, &y) {
                    if let Ok(a) = a_value(surface, &p) {
                        if a < best {
                            best = a;
                            phase = p;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            delta = delta * R::lit(0.5);
        }
    }
    best
}

/// Deterministic seeded page starts for sweeps: equator point by slice ray
/// shooting, upward component y0 uniform in [0.05, 0.95], tangential
/// direction uniform over the equator tangents. Row k draws from the
/// independent split stream k, so sweeps parallelize deterministically.
pub fn seeded_page_starts<R: Real>(
    surface: &DefiningSurface<R>,
    count: usize,
    seed: u64,
) -> SectionResult<Vec<PhasePoint<R>>, R> {
    let root = crate::sampling::SplitMix64::new(seed);
    let n = surface.ambient_dim() - 1;
    let mut starts = Vec::with_capacity(count);
    for row in 0..count {
        let mut rng = root.split(row as u64);
        let mut found = None;
        for _ in 0..256 {
            let dir: Vec<R> = rng.direction(n);
            let Some(x) = surface.slice_shoot(R::zero(), &dir) else {
                continue;
            };
            let Ok((_, grad)) = surface.regular_gradient(&x) else {
                continue;
            };
            // Equator tangent directions: orthogonal to the slice gradient.
            let g_rest = &grad[1..];
            let gn = linalg::norm(g_rest);
            if gn < R::lit(1e-10) {
                continue;
            }
            let g_hat = linalg::scale(g_rest, gn.recip());
            let ydir: Vec<R> = rng.direction(n);
            let w = linalg::axpy(&ydir, -linalg::dot(&ydir, &g_hat), &g_hat);
            let wn = linalg::norm(&w);
            if wn < R::lit(1e-6) {
                continue;
            }
            let y0 = rng.uniform_in(R::lit(0.05), R::lit(0.95));
            let t = (R::one() - y0 * y0).sqrt();
            let mut y = vec![R::zero(); n + 1];
            y[0] = y0;
            for i in 0..n {
                y[1 + i] = w[i] * t / wn;
            }
            if let Ok(p) = project_to_surface(surface, &x, &y) {
                found = Some(p);
                break;
            }
        }
        let p = found.ok_or(SectionError::Flow(FlowError::Surface(
            SurfaceError::NoSurfacePoints { attempted: 256 },
        )))?;
        starts.push(p);
    }
    Ok(starts)
}

/// One first-return record: start and end on the page, return time, step and
/// drift statistics, and the total winding angle (2 pi up to the bisection
/// tolerance).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct ReturnRecord<R: Real> {
    pub start: PhasePoint<R>,
    pub end: PhasePoint<R>,
    pub tau: R,
    pub steps: usize,
    pub max_drift: R,
    pub angle_total: R,
}

#[derive(Debug, Clone, Copy)]
pub struct ReturnOptions<R: Real> {
    /// Total winding angle to integrate to (2 pi for the first return, 4 pi
    /// for the second, ...).
    pub angle_target: R,
    /// Page angle offset from pi/2 (other pages of the S^1-family).
    pub page_offset: R,
    /// Snap the end point onto {x0 = 0} exactly (only for the standard page).
    pub snap_to_page: bool,
}

impl<R: Real> Default for ReturnOptions<R> {
    fn default() -> Self {
        Self {
            angle_target: R::TAU(),
            page_offset: R::zero(),
            snap_to_page: true,
        }
    }
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

/// Projects a phase point onto the page: x0 set to zero exactly, then back
/// onto the constraints (A1-symmetric surfaces keep x0 = 0 under projection).
pub fn project_to_page<R: Real>(
    surface: &DefiningSurface<R>,
    phase: &PhasePoint<R>,
) -> SectionResult<PhasePoint<R>, R> {
    let mut x = phase.x.clone();
    x[0] = R::zero();
    Ok(project_to_surface(surface, &x, &phase.y)?)
}

/// The first-return map to the page P = {x0 = 0, y0 >= 0}: integrates until
/// the unwrapped winding angle has increased by exactly 2 pi, refining the
/// crossing time by bisection to 1e-12 in angle.
pub fn return_map<R: Real>(
    surface: &DefiningSurface<R>,
    start: &PhasePoint<R>,
    config: &IntegratorConfig<R>,
) -> SectionResult<ReturnRecord<R>, R> {
    return_map_with(surface, start, config, ReturnOptions::default())
}

pub fn return_map_with<R: Real>(
    surface: &DefiningSurface<R>,
    start: &PhasePoint<R>,
    config: &IntegratorConfig<R>,
    options: ReturnOptions<R>,
) -> SectionResult<ReturnRecord<R>, R> {
    let r2 = binding_r2(start);
    if r2 < R::lit(1e-12) {
        return Err(SectionError::OnBinding { r2 });
    }
    let expected = R::FRAC_PI_2() + options.page_offset;
    let angle = page_angle(start)?;
    if wrap_to_pi(angle - expected).abs() > R::lit(1e-6) {
        return Err(SectionError::NotOnPage { angle, expected });
    }

    let target = options.angle_target;
    let mut state = FlowState::new(start.clone());
    let mut steps = 0usize;
    let mut max_drift = R::zero();
    let (prev, first_crossing) = loop {
        let before = state.clone();
        let outcome = flow::step(surface, &state, config)?;
        steps += 1;
        max_drift = max_drift.max(outcome.post_drift);
        if outcome.state.unwrapped_angle >= target {
            break (before, outcome);
        }
        state = outcome.state;
        if steps >= config.max_steps {
            return Err(SectionError::MaxStepsExceeded {
                max_steps: config.max_steps,
                angle_reached: state.unwrapped_angle,
            });
        }
    };

    // Bisection on the substep length within the crossing step (tighter than
    // the 1e-12 contract so the landing never biases tau upward materially).
    let angle_tol = R::lit(1e-13);
    let mut lo = R::zero();
    let mut hi = first_crossing.h_used;
    let mut end_outcome = first_crossing;
    for _ in 0..200 {
        if end_outcome.state.unwrapped_angle - target < angle_tol {
            break;
        }
        let mid = R::lit(0.5) * (lo + hi);
        let trial = flow::step_exact(surface, &prev, mid, R::one())?;
        if trial.state.unwrapped_angle >= target {
            hi = mid;
            end_outcome = trial;
        } else {
            lo = mid;
        }
    }
    max_drift = max_drift.max(end_outcome.post_drift);

    let end_raw = end_outcome.state.phase;
    let end = if options.snap_to_page && options.page_offset == R::zero() {
        let snapped = project_to_page(surface, &end_raw)?;
        if snapped.y0() < -R::lit(1e-9) {
            return Err(SectionError::NotOnPage {
                angle: page_angle(&snapped).unwrap_or(R::zero()),
                expected,
            });
        }
        snapped
    } else {
        end_raw
    };

    Ok(ReturnRecord {
        start: start.clone(),
        end,
        tau: end_outcome.state.time,
        steps,
        max_drift,
        angle_total: end_outcome.state.unwrapped_angle,
    })
}

/// Numerical symplecticity check of the return map at a page point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct SymplecticityReport<R> {
    /// max |(J^T Omega J - Omega)_kl| over the page basis.
    pub omega_defect: R,
    /// max_k |alpha(dPsi v_k) - alpha(v_k) - dtau(v_k)|.
    pub exactness_defect: R,
    pub basis_dim: usize,
}

fn omega_pairing<R: Real>(u: &[R], v: &[R], dim: usize) -> R {
    let mut acc = R::zero();
    for i in 0..dim {
        acc += u[i] * v[dim + i] - u[dim + i] * v[i];
    }
    acc
}

/// Builds an orthonormal basis of the tangent space of the page at `p`.
fn page_tangent_basis<R: Real>(
    surface: &DefiningSurface<R>,
    p: &PhasePoint<R>,
) -> SectionResult<Vec<Vec<R>>, R> {
    let dim = surface.ambient_dim();
    let jet = surface.jet(&p.x)?;
    let hy = jet.hessian.mul_vec(&p.y);
    let mut c1 = vec![R::zero(); 2 * dim];
    let mut c2 = vec![R::zero(); 2 * dim];
    let mut c3 = vec![R::zero(); 2 * dim];
    let mut c4 = vec![R::zero(); 2 * dim];
    c1[..dim].copy_from_slice(&jet.gradient);
    c2[..dim].copy_from_slice(&hy);
    c2[dim..].copy_from_slice(&jet.gradient);
    c3[dim..].copy_from_slice(&p.y);
    c4[0] = R::one();
    let fixed = linalg::gram_schmidt(&[], &[c1, c2, c3, c4], R::lit(1e-10));
    let seeds: Vec<Vec<R>> = (0..2 * dim)
        .map(|i| {
            let mut e = vec![R::zero(); 2 * dim];
            e[i] = R::one();
            e
        })
        .collect();
    let basis = linalg::gram_schmidt(&fixed, &seeds, R::lit(1e-8));
    // Page dimension 2n - 2 with n = dim - 1: ambient 2(n+1) minus the four
    // independent constraints f, y.grad f, ‖y‖, x0.
    let want = 2 * dim - 4;
    if fixed.len() != 4 || basis.len() < want {
        return Err(SectionError::DegenerateBasis {
            got: basis.len(),
            expected: want,
        });
    }
    Ok(basis.into_iter().take(want).collect())
}

/// Central-difference Jacobian of the return map in page coordinates and the
/// two symplecticity defects: ‖J^T Omega J - Omega‖_max and the exactness
/// defect of Psi* alpha - alpha = d tau.
pub fn symplecticity_defect<R: Real>(
    surface: &DefiningSurface<R>,
    start: &PhasePoint<R>,
    h: R,
    config: &IntegratorConfig<R>,
) -> SectionResult<SymplecticityReport<R>, R> {
    let r = binding_r2(start).sqrt();
    let required = R::lit(10.0) * h;
    if r <= required {
        return Err(SectionError::BindingTooClose {
            distance: r,
            required,
        });
    }
    let dim = surface.ambient_dim();
    let basis = page_tangent_basis(surface, start)?;
    let base = return_map(surface, start, config)?;

    let retract = |v: &[R], sign: R| -> SectionResult<PhasePoint<R>, R> {
        let x: Vec<R> = (0..dim)
            .map(|i| start.x[i] + sign * h * v[i])
            .collect();
        let y: Vec<R> = (0..dim)
            .map(|i| start.y[i] + sign * h * v[dim + i])
            .collect();
        Ok(project_to_surface(surface, &x, &y)?)
    };

    let columns: Vec<(Vec<R>, R)> = basis
        .par_iter()
        .map(|v| {
            let plus = return_map(surface, &retract(v, R::one())?, config)?;
            let minus = return_map(surface, &retract(v, -R::one())?, config)?;
            let inv = (h + h).recip();
            let mut col = Vec::with_capacity(2 * dim);
            for i in 0..dim {
                col.push((plus.end.x[i] - minus.end.x[i]) * inv);
            }
            for i in 0..dim {
                col.push((plus.end.y[i] - minus.end.y[i]) * inv);
            }
            let dtau = (plus.tau - minus.tau) * inv;
            Ok((col, dtau))
        })
        .collect::<SectionResult<_, R>>()?;

    let mut omega_defect = R::zero();
    for (k, (jk, _)) in columns.iter().enumerate() {
        for (l, (jl, _)) in columns.iter().enumerate() {
            let pushed = omega_pairing(jk, jl, dim);
            let original = omega_pairing(&basis[k], &basis[l], dim);
            omega_defect = omega_defect.max((pushed - original).abs());
        }
    }

    let mut exactness_defect = R::zero();
    for (k, (jk, dtau)) in columns.iter().enumerate() {
        let alpha_pushed: R = (0..dim).map(|i| base.end.y[i] * jk[i]).sum();
        let alpha_orig: R = (0..dim).map(|i| start.y[i] * basis[k][i]).sum();
        exactness_defect = exactness_defect.max((alpha_pushed - alpha_orig - *dtau).abs());
    }

    Ok(SymplecticityReport {
        omega_defect,
        exactness_defect,
        basis_dim: basis.len(),
    })
}

/// The normal Hessian sample S_N = diag(Hess(f)_x(y,y) f_00(x)/‖grad f‖^2, 1)
/// at a binding point; its positive-definiteness drives the smooth boundary
/// extension of the return map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct NormalHessianSample<R: Real> {
    pub binding_point: PhasePoint<R>,
    pub s00: R,
    pub s11: R,
    pub positive_definite: bool,
}

pub fn normal_hessian<R: Real>(
    surface: &DefiningSurface<R>,
    binding_point: &PhasePoint<R>,
) -> SectionResult<NormalHessianSample<R>, R> {
    let tol = R::lit(1e-8);
    if binding_point.x0().abs() > tol || binding_point.y0().abs() > tol {
        return Err(SectionError::NotOnBinding {
            x0: binding_point.x0().abs(),
            y0: binding_point.y0().abs(),
        });
    }
    let jet = surface.jet(&binding_point.x)?;
    let gn2 = linalg::dot(&jet.gradient, &jet.gradient);
    let hyy = jet.hessian.quad_form(&binding_point.y, &binding_point.y);
    let f00 = jet.hessian.get(0, 0);
    let s00 = hyy * f00 / gn2;
    Ok(NormalHessianSample {
        binding_point: binding_point.clone(),
        s00,
        s11: R::one(),
        positive_definite: s00 > R::zero(),
    })
}

/// Return-map endpoints for page starts lifted off a binding point by the
/// given offsets, Richardson-extrapolated to offset zero.
#[derive(Debug, Clone)]
pub struct BoundaryExtrapolation<R: Real> {
    pub limit: PhasePoint<R>,
    pub convergence_ratio: Option<R>,
    pub endpoints: Vec<PhasePoint<R>>,
}

pub fn boundary_return_extrapolation<R: Real>(
    surface: &DefiningSurface<R>,
    binding_point: &PhasePoint<R>,
    offsets: &[R],
    config: &IntegratorConfig<R>,
) -> SectionResult<BoundaryExtrapolation<R>, R> {
    let tol = R::lit(1e-8);
    if binding_point.x0().abs() > tol || binding_point.y0().abs() > tol {
        return Err(SectionError::NotOnBinding {
            x0: binding_point.x0().abs(),
            y0: binding_point.y0().abs(),
        });
    }
    if offsets.len() < 2
        || offsets.windows(2).any(|w| w[1] >= w[0])
        || offsets.iter().any(|&d| d <= R::zero() || d >= R::lit(0.5))
    {
        return Err(SectionError::NonConvergent { ratios: vec![] });
    }
    let mut endpoints = Vec::with_capacity(offsets.len());
    for &delta in offsets {
        let mut y = binding_point.y.clone();
        let scale = (R::one() - delta * delta).sqrt();
        for yi in y.iter_mut() {
            *yi *= scale;
        }
        y[0] = delta;
        let start = project_to_surface(surface, &binding_point.x, &y)?;
        let rec = return_map(surface, &start, config)?;
        endpoints.push(rec.end);
    }
    let diffs: Vec<R> = endpoints
        .windows(2)
        .map(|w| w[0].distance(&w[1]))
        .collect();
    let ratios: Vec<R> = diffs.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().any(|&r| !(r < R::lit(0.95))) {
        return Err(SectionError::NonConvergent {
            ratios: ratios.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect(),
        });
    }
    // First-order Richardson on the last pair.
    let m = offsets.len();
    let rho = offsets[m - 1] / offsets[m - 2];
    let e_last = &endpoints[m - 1];
    let e_prev = &endpoints[m - 2];
    let dim = surface.ambient_dim();
    let one = R::one();
    let mut x = Vec::with_capacity(dim);
    let mut y = Vec::with_capacity(dim);
    for i in 0..dim {
        x.push((e_last.x[i] - rho * e_prev.x[i]) / (one - rho));
        y.push((e_last.y[i] - rho * e_prev.y[i]) / (one - rho));
    }
    x[0] = R::zero();
    y[0] = R::zero();
    let limit = project_to_surface(surface, &x, &y)?;
    Ok(BoundaryExtrapolation {
        limit,
        convergence_ratio: ratios.last().copied(),
        endpoints,
    })
}

// ---------------------------------------------------------------------------
// Full audit pipeline (symmetry + definiteness + curvature + epsilon)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct AuditOptions<R: Real> {
    pub samples: usize,
    /// Defaults to 0.2 x length scale (the required strip width is not
    /// specified by the hypotheses; the report records the strip used).
    pub strip_halfwidth: Option<R>,
    pub epsilon_samples: usize,
}

impl<R: Real> Default for AuditOptions<R> {
    fn default() -> Self {
        Self {
            samples: 4096,
            strip_halfwidth: None,
            epsilon_samples: 2048,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuditOutcome<R: Real> {
    pub report: AuditReport<R>,
    /// Sign-normalized surface, present when the definiteness audit passed.
    pub normalized: Option<DefiningSurface<R>>,
}

/// Runs every audit and assembles the report; audit failures are recorded in
/// the report rather than raised (hard errors are reserved for sampling or
/// regularity breakdowns).
pub fn full_audit<R: Real>(
    surface: &DefiningSurface<R>,
    options: &AuditOptions<R>,
) -> SectionResult<AuditOutcome<R>, R> {
    let halfwidth = options
        .strip_halfwidth
        .unwrap_or(R::lit(0.2) * surface.length_scale());
    let symmetry = audit_symmetry(surface, halfwidth, options.samples)?;
    let (definiteness, witness, normalized) =
        match audit_definiteness(surface, options.samples) {
            Ok((finding, surf)) => (Some(finding), None, Some(surf)),
            Err(SurfaceError::Indefinite {
                point,
                eigenvalue,
                eigenvector: _,
                max_eigenvalue,
            }) => (
                Some(DefinitenessFinding {
                    class: Definiteness::Indefinite,
                    min_eigenvalue: eigenvalue,
                    max_eigenvalue,
                    witness_point: point.clone(),
                    samples: options.samples,
                }),
                Some(point),
                None,
            ),
            Err(e) => return Err(e.into()),
        };
    let curvature = match &normalized {
        Some(s) => curvature_range(s, options.samples.min(512)).ok(),
        None => None,
    };
    let epsilon = match (&normalized, symmetry.ok) {
        (Some(s), true) => match estimate_epsilon(s, options.epsilon_samples) {
            Ok(e) => Some(e),
            Err(SectionError::NonPositiveEpsilon { .. }) => None,
            Err(e) => return Err(e),
        },
        _ => None,
    };
    let passed = symmetry.ok && normalized.is_some() && epsilon.map_or(false, |e| e > R::zero());
    let report = AuditReport {
        format_version: REPORT_FORMAT_VERSION,
        sample_count: options.samples,
        strip_halfwidth: halfwidth,
        symmetry,
        definiteness,
        definiteness_witness: witness,
        sign_normalized: normalized.as_ref().map_or(false, |s| s.sign_normalized()),
        curvature_range: curvature,
        epsilon_estimate: epsilon,
        passed,
    };
    Ok(AuditOutcome { report, normalized })
}
