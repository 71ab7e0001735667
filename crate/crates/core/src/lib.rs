//! Gradient-constrained interpolation on Finsler quasi-metric spaces.
//!
//! A family of convex sets `x ↦ K(x)` induces the non-symmetric length
//! `d(x, y) = inf ∫ φ⁰(γ, γ̇)`, where `φ⁰` is the support function of `K(x)`.
//! The crate discretizes `d` on grid graphs and builds the maximal and minimal
//! extensions `S⁺`, `S⁻` of boundary data, the set where they coincide, and
//! the optimal level of supremal functionals `ess sup H(x, ∇u)`.

pub mod cli;
pub mod config;
pub mod convex;
pub mod domain;
pub mod error;
pub mod export;
pub mod expr;
pub mod extensions;
pub mod geodesic;
pub mod mesh;
pub mod regularity;
pub mod search;
pub mod supremal;
pub mod tolerance;

pub use convex::{hausdorff_dist, ConvexField, ConvexFieldSpec, ConvexSetInstance, Shape, ShapeSpec};
pub use domain::{build_domain, Domain, DomainSpec};
pub use error::{Error, Result};
pub use expr::Expr;
pub use geodesic::{finsler_length, quasi_dist, sweep, Direction, PathPolyline};
pub use mesh::{discretize, MeshGraph, NodeRole, ScalarField, Stencil};
