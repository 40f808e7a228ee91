use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use core::fmt;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use super::{Matrix, TriangleMesh, Vector, SURFACE_TOLERANCE};
use crate::{Error, Result};

/// A convex body `K = {g <= 0}` described by its level function.
///
/// Implementations must be convex, at least C2 near the boundary, and
/// negative at the origin.
pub trait LevelFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> Matrix;
}

/// `g(x) = sum_i |x_i / a_i|^p - 1` with `p >= 2`.
///
/// `p = 2` is an ellipsoid (a sphere when all `a_i = 1`); larger exponents
/// give rounded boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSum {
    exponent: f64,
    semi_axes: Vector,
}

impl PowerSum {
    pub fn new(exponent: f64, semi_axes: Vector) -> Result<Self> {
        if !(exponent >= 2.0 && exponent.is_finite()) {
            return Err(Error::InvalidBody(format!("power-sum exponent {exponent} must be >= 2")));
        }
        if semi_axes.len() < 2 || semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidBody("power-sum semi-axes must be positive, n >= 2".into()));
        }
        Ok(Self { exponent, semi_axes })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn semi_axes(&self) -> &Vector {
        &self.semi_axes
    }

    fn pow(&self, t: f64, p: f64) -> f64 {
        if p.fract() == 0.0 && p.abs() < 64.0 {
            t.powi(p as i32)
        } else {
            t.powf(p)
        }
    }

    /// A radius that contains the body: `|x_i| <= a_i` on `K`.
    pub fn bounding_radius(&self) -> f64 {
        self.semi_axes.norm()
    }
}

impl LevelFunction for PowerSum {
    fn dim(&self) -> usize {
        self.semi_axes.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        let p = self.exponent;
        x.iter().zip(self.semi_axes.iter()).map(|(xi, ai)| self.pow((xi / ai).abs(), p)).sum::<f64>() - 1.0
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let p = self.exponent;
        Vector::from_iterator(
            x.len(),
            x.iter().zip(self.semi_axes.iter()).map(|(xi, ai)| {
                let t = xi / ai;
                p * self.pow(t.abs(), p - 1.0) * t.signum() / ai
            }),
        )
    }

    fn hessian(&self, x: &Vector) -> Matrix {
        let p = self.exponent;
        let diag = Vector::from_iterator(
            x.len(),
            x.iter()
                .zip(self.semi_axes.iter())
                .map(|(xi, ai)| p * (p - 1.0) * self.pow((xi / ai).abs(), p - 2.0) / (ai * ai)),
        );
        Matrix::from_diagonal(&diag)
    }
}

/// Implicitly described convex body with a bounding radius and the
/// number of scan nodes used to bracket line intersections.
#[derive(Debug, Clone)]
pub struct ImplicitConvex {
    level: Arc<dyn LevelFunction>,
    bounding_radius: f64,
    grid_nodes: usize,
}

impl ImplicitConvex {
    pub const DEFAULT_GRID_NODES: usize = 64;

    pub fn new(level: Arc<dyn LevelFunction>, bounding_radius: f64) -> Result<Self> {
        let n = level.dim();
        if n < 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        if !(bounding_radius > 0.0 && bounding_radius.is_finite()) {
            return Err(Error::InvalidBody("bounding radius must be positive".into()));
        }
        if !(level.value(&Vector::zeros(n)) < 0.0) {
            return Err(Error::InvalidBody("level function must be negative at the origin".into()));
        }
        for i in 0..n {
            for sign in [-1.0, 1.0] {
                let probe = super::basis(n, i) * (sign * bounding_radius);
                if level.value(&probe) < 0.0 {
                    return Err(Error::InvalidBody(format!(
                        "bounding radius {bounding_radius} does not contain the body along axis {i}"
                    )));
                }
            }
        }
        Ok(Self { level, bounding_radius, grid_nodes: Self::DEFAULT_GRID_NODES })
    }

    pub fn with_grid_nodes(mut self, nodes: usize) -> Self {
        self.grid_nodes = nodes.max(4);
        self
    }

    pub fn level(&self) -> &dyn LevelFunction {
        &*self.level
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn grid_nodes(&self) -> usize {
        self.grid_nodes
    }
}

/// `x -> scale * rotation * x + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    rotation: Matrix,
    scale: f64,
    translation: Vector,
}

impl Similarity {
    pub fn new(rotation: Matrix, scale: f64, translation: Vector) -> Result<Self> {
        let n = translation.len();
        if rotation.nrows() != n || rotation.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rotation.nrows() });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument("similarity scale must be positive".into()));
        }
        let defect = (rotation.transpose() * &rotation - Matrix::identity(n, n)).amax();
        if defect > 1e-9 {
            return Err(Error::InvalidArgument(format!("rotation is not orthogonal (defect {defect:e})")));
        }
        Ok(Self { rotation, scale, translation })
    }

    pub fn translation_scale(translation: Vector, scale: f64) -> Result<Self> {
        let n = translation.len();
        Self::new(Matrix::identity(n, n), scale, translation)
    }

    pub fn rotation(&self) -> &Matrix {
        &self.rotation
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn translation(&self) -> &Vector {
        &self.translation
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.rotation * x * self.scale + &self.translation
    }

    pub fn apply_inverse(&self, y: &Vector) -> Vector {
        self.rotation.tr_mul(&(y - &self.translation)) / self.scale
    }

    pub fn rotate(&self, v: &Vector) -> Vector {
        &self.rotation * v
    }

    pub fn rotate_inverse(&self, v: &Vector) -> Vector {
        self.rotation.tr_mul(v)
    }
}

/// The bodies whose boundaries random lines are thrown at.
#[derive(Debug, Clone)]
pub enum ConvexBody {
    /// `S^(n-1)` bounding the unit ball in `R^n`.
    UnitSphere { dim: usize },
    /// Axis-aligned ellipsoid centred at the origin.
    Ellipsoid { semi_axes: Vector },
    Implicit(ImplicitConvex),
    /// Closed triangle mesh in `R^3`; convexity is assumed, not checked.
    Mesh(TriangleMesh),
    /// Image of another body under a similarity.
    Transformed { base: Box<ConvexBody>, motion: Similarity },
}

impl ConvexBody {
    pub fn unit_sphere(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Self::UnitSphere { dim })
    }

    /// Round sphere with arbitrary centre and radius.
    pub fn sphere(center: Vector, radius: f64) -> Result<Self> {
        let n = center.len();
        Self::unit_sphere(n)?.transformed(Similarity::translation_scale(center, radius)?)
    }

    pub fn ellipsoid(semi_axes: Vector) -> Result<Self> {
        if semi_axes.len() < 2 {
            return Err(Error::UnsupportedDimension(semi_axes.len()));
        }
        if semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidBody("ellipsoid semi-axes must be positive".into()));
        }
        Ok(Self::Ellipsoid { semi_axes })
    }

    pub fn implicit(body: ImplicitConvex) -> Self {
        Self::Implicit(body)
    }

    pub fn mesh(mesh: TriangleMesh) -> Self {
        Self::Mesh(mesh)
    }

    pub fn transformed(self, motion: Similarity) -> Result<Self> {
        if motion.translation().len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: motion.translation().len() });
        }
        Ok(Self::Transformed { base: Box::new(self), motion })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::UnitSphere { dim } => *dim,
            Self::Ellipsoid { semi_axes } => semi_axes.len(),
            Self::Implicit(b) => b.level.dim(),
            Self::Mesh(_) => 3,
            Self::Transformed { base, .. } => base.dim(),
        }
    }

    /// Centre and radius of a ball containing the body.
    pub fn bounding_ball(&self) -> (Vector, f64) {
        match self {
            Self::UnitSphere { dim } => (Vector::zeros(*dim), 1.0),
            Self::Ellipsoid { semi_axes } => (Vector::zeros(semi_axes.len()), semi_axes.max()),
            Self::Implicit(b) => (Vector::zeros(b.level.dim()), b.bounding_radius),
            Self::Mesh(m) => (m.center(), m.radius()),
            Self::Transformed { base, motion } => {
                let (c, r) = base.bounding_ball();
                (motion.apply(&c), r * motion.scale())
            }
        }
    }

    /// Length scale used for tolerances (the bounding radius).
    pub fn scale(&self) -> f64 {
        self.bounding_ball().1
    }

    /// Absolute on-surface tolerance: `1e-9` times the bounding diameter.
    pub fn surface_tolerance(&self) -> f64 {
        SURFACE_TOLERANCE * 2.0 * self.scale()
    }

    /// True for the round unit sphere in any dimension.
    pub fn unit_sphere_dim(&self) -> Option<usize> {
        match self {
            Self::UnitSphere { dim } => Some(*dim),
            _ => None,
        }
    }

    pub fn is_smooth(&self) -> bool {
        match self {
            Self::Mesh(_) => false,
            Self::Transformed { base, .. } => base.is_smooth(),
            _ => true,
        }
    }

    /// Level function `g` with `K = {g <= 0}`; `None` for meshes.
    pub fn level(&self, x: &Vector) -> Option<f64> {
        match self {
            Self::UnitSphere { .. } => Some(x.norm_squared() - 1.0),
            Self::Ellipsoid { semi_axes } => Some(x.component_div(semi_axes).norm_squared() - 1.0),
            Self::Implicit(b) => Some(b.level.value(x)),
            Self::Mesh(_) => None,
            Self::Transformed { base, motion } => base.level(&motion.apply_inverse(x)),
        }
    }

    pub fn level_gradient(&self, x: &Vector) -> Option<Vector> {
        match self {
            Self::UnitSphere { .. } => Some(x * 2.0),
            Self::Ellipsoid { semi_axes } => {
                Some(x.component_div(semi_axes).component_div(semi_axes) * 2.0)
            }
            Self::Implicit(b) => Some(b.level.gradient(x)),
            Self::Mesh(_) => None,
            Self::Transformed { base, motion } => base
                .level_gradient(&motion.apply_inverse(x))
                .map(|g| motion.rotate(&g) / motion.scale()),
        }
    }

    pub fn level_hessian(&self, x: &Vector) -> Option<Matrix> {
        match self {
            Self::UnitSphere { dim } => Some(Matrix::identity(*dim, *dim) * 2.0),
            Self::Ellipsoid { semi_axes } => {
                let d = semi_axes.map(|a| 2.0 / (a * a));
                Some(Matrix::from_diagonal(&d))
            }
            Self::Implicit(b) => Some(b.level.hessian(x)),
            Self::Mesh(_) => None,
            Self::Transformed { base, motion } => base.level_hessian(&motion.apply_inverse(x)).map(|h| {
                let r = motion.rotation();
                r * h * r.transpose() / (motion.scale() * motion.scale())
            }),
        }
    }

    /// Approximate distance from `x` to the boundary.
    ///
    /// Exact for spheres and meshes; first-order `|g| / |grad g|` otherwise.
    pub fn surface_distance(&self, x: &Vector) -> f64 {
        match self {
            Self::UnitSphere { .. } => (x.norm() - 1.0).abs(),
            Self::Mesh(m) => m.distance(x),
            Self::Transformed { base, motion } => base.surface_distance(&motion.apply_inverse(x)) * motion.scale(),
            _ => {
                let g = self.level(x).unwrap_or(f64::INFINITY);
                let grad = self.level_gradient(x).map(|v| v.norm()).unwrap_or(0.0);
                if grad > 0.0 {
                    g.abs() / grad
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn check_on_surface(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let distance = self.surface_distance(x);
        let tolerance = self.surface_tolerance();
        if distance <= tolerance {
            Ok(())
        } else {
            Err(Error::OffSurface { distance, tolerance })
        }
    }

    /// Outward unit normal at a boundary point (not checked to be on the boundary).
    pub fn outward_normal(&self, x: &Vector) -> Vector {
        match self {
            Self::UnitSphere { .. } => x.normalize(),
            Self::Mesh(m) => m.face_normal(m.nearest_face(x)),
            Self::Transformed { base, motion } => motion.rotate(&base.outward_normal(&motion.apply_inverse(x))),
            _ => self.level_gradient(x).expect("smooth body").normalize(),
        }
    }
}
