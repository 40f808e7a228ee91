//! Integral geometry of random lines through convex bodies.
//!
//! Lines are drawn from the kinematic measure (uniform direction, Lebesgue
//! offset in the orthogonal hyperplane), intersected with spheres,
//! ellipsoids, implicit convex bodies and triangle meshes, and fed to
//! Monte Carlo estimators for Crofton-type identities, chord statistics,
//! entry/exit independence and the curvature kernel of a boundary.
//!
//! The crate is `no_std` (it needs `alloc`). Parallel execution, file
//! formats and the command line live in the `croftonkit` crate.
#![no_std]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod curvature;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod geom;
pub mod intersect;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
pub use geom::{
    cap_area_exact, sigma_exact, surface_area_exact, ConvexBody, DirectedLine, ImplicitConvex,
    LevelFunction, Matrix, PowerSum, Region, Similarity, SurfacePatch, TriangleMesh, Vector,
};
