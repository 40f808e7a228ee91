use super::Vector;
use crate::{Error, Result};

/// An oriented line `{point + s * direction}`.
///
/// `point` is always the foot of the perpendicular from the origin, so two
/// descriptions of the same oriented line compare equal up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedLine {
    point: Vector,
    direction: Vector,
}

impl DirectedLine {
    /// Line through `point` with direction `direction` (normalized here).
    pub fn new(point: Vector, direction: Vector) -> Result<Self> {
        if point.len() != direction.len() {
            return Err(Error::DimensionMismatch { expected: point.len(), found: direction.len() });
        }
        if point.len() < 2 {
            return Err(Error::UnsupportedDimension(point.len()));
        }
        let norm = direction.norm();
        if !(norm > 0.0 && norm.is_finite()) || point.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("line needs a finite point and nonzero direction".into()));
        }
        Ok(Self::canonical(point, direction / norm))
    }

    /// Assumes `direction` is already a unit vector.
    pub(crate) fn canonical(point: Vector, direction: Vector) -> Self {
        let along = point.dot(&direction);
        let point = point - &direction * along;
        Self { point, direction }
    }

    pub fn point(&self) -> &Vector {
        &self.point
    }

    pub fn direction(&self) -> &Vector {
        &self.direction
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    /// Distance from the origin.
    pub fn offset(&self) -> f64 {
        self.point.norm()
    }

    pub fn at(&self, s: f64) -> Vector {
        &self.point + &self.direction * s
    }

    /// Signed parameter of the orthogonal projection of `x` onto the line.
    pub fn param_of(&self, x: &Vector) -> f64 {
        (x - &self.point).dot(&self.direction)
    }

    /// Re-derives the canonical form; idempotent.
    pub fn canonicalize(&self) -> Self {
        let n = self.direction.norm();
        Self::canonical(self.point.clone(), &self.direction / n)
    }

    pub fn reversed(&self) -> Self {
        Self { point: self.point.clone(), direction: -&self.direction }
    }
}
