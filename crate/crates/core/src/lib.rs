//! Numerical laboratory for geodesic flows on convex implicit hypersurfaces
//! M = f^-1(0) in R^(n+1): construction and certification of global
//! hypersurfaces of section for the geodesic flow on the unit cotangent
//! bundle, first-return maps by constrained integration, and cross-validation
//! against closed-form return maps (ellipsoids, hypersurfaces of revolution,
//! and the billiard limit).
//!
//! The pieces:
//! - [`expr`]: defining-function parser with exact derivatives by
//!   second-order forward jets,
//! - [`surface`]: surface families, hypothesis audits, curvature, and
//!   constraint projection,
//! - [`flow`]: the geodesic Hamiltonian field and its RK4 + projection
//!   integrator with winding-angle tracking,
//! - [`section`]: the page P = {x0 = 0, y0 >= 0}, the angular bound, return
//!   maps, symplecticity checks, and boundary extrapolation,
//! - [`closedform`]: elliptic integrals, the ellipsoid/Clairaut return
//!   angles, and the billiard limit.
//!
//! Everything numerical is generic over the scalar type through [`Real`]
//! (f32 or f64); the aliases below pin f64, which all tools use.

pub mod closedform;
pub mod expr;
pub mod flow;
pub mod linalg;
pub mod quad;
pub mod sampling;
pub mod section;
pub mod surface;

mod real;
pub use real::Real;

pub type Ast64 = expr::ExpressionAst<f64>;
pub type Jet64 = expr::JetValue<f64>;
pub type Surface64 = surface::DefiningSurface<f64>;
pub type Phase64 = surface::PhasePoint<f64>;
pub type AuditReport64 = surface::AuditReport<f64>;
pub type IntegratorConfig64 = flow::IntegratorConfig<f64>;
pub type FlowState64 = flow::FlowState<f64>;
pub type ReturnRecord64 = section::ReturnRecord<f64>;
pub type Profile64 = closedform::RevolutionProfile<f64>;

pub type Ast32 = expr::ExpressionAst<f32>;
pub type Surface32 = surface::DefiningSurface<f32>;
