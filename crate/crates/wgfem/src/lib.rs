//! Weak Galerkin finite elements on general polygonal meshes.
//!
//! The discretization approximates second-order elliptic problems
//! `-div(a(x, u, grad u) grad u) = f` with Dirichlet data by weak functions
//! `v = {v0, vb}`: a polynomial of degree `k` inside each cell paired with an
//! independent polynomial trace of degree `k` on each edge. The element-local
//! weak gradient of `v` lives in `[P_{k-1}]^2` and is defined variationally
//! by `(grad_w v, q) = -(v0, div q) + <vb, q.n>`; a boundary penalty coupling
//! `v0` to `vb` stabilizes the resulting bilinear form. Meshes may contain
//! arbitrary polygonal cells and hanging nodes.
//!
//! The crate is generic over the working scalar (`f32`/`f64` via
//! [`real::Real`]); the aliases below fix `f64`, which all shipped
//! experiments use. The `cases` module reproduces four manufactured-solution
//! convergence studies end to end; see the CLI crate for the command line.

pub mod assembly;
pub mod cases;
pub mod dense;
pub mod error;
pub mod geom;
pub mod mesh;
pub mod postprocess;
pub mod quadrature;
pub mod real;
pub mod solver;
pub mod space;
pub mod weak_gradient;

pub use error::{Result, WgError};
pub use real::Real;

/// `f64` aliases for the main types; the working precision of the shipped
/// experiments and of the CLI.
pub type Point2 = geom::Point2<f64>;
pub type Vec2 = geom::Vec2<f64>;
pub type Mesh = mesh::PolygonalMesh<f64>;
pub type Space = space::WgSpace<f64>;
pub type WeakFunction = space::WeakFunction<f64>;
pub type Coefficient = space::Coefficient<f64>;
pub type QuadRule = quadrature::QuadRule<f64>;
pub type WeakGradients = weak_gradient::WeakGradients<f64>;
pub type SparseSystem = assembly::SparseSystem<f64>;
pub type CondensedSystem = assembly::CondensedSystem<f64>;
pub type SolveConfig = solver::SolveConfig<f64>;
pub type ErrorTriple = postprocess::ErrorTriple<f64>;
pub type FluxReport = postprocess::FluxReport<f64>;
