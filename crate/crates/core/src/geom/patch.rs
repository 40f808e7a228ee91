use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use super::{ConvexBody, Vector};
use crate::{Error, Result};

/// Membership predicate for a region of a body's boundary.
///
/// Every predicate is closed: points exactly on a cap's rim belong to it.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Whole,
    /// `<x, axis> >= height` with `axis` a unit vector.
    Cap { axis: Vector, height: f64 },
    /// Latitude/longitude box on `S^2`, radians. Longitudes run from
    /// `lon_start` counter-clockwise over `lon_width`.
    LatLonBox { lat_min: f64, lat_max: f64, lon_start: f64, lon_width: f64 },
    /// `<normal, x> >= offset`.
    HalfSpace { normal: Vector, offset: f64 },
    Union(Box<Region>, Box<Region>),
    Intersection(Box<Region>, Box<Region>),
    Complement(Box<Region>),
}

impl Region {
    pub fn cap(axis: Vector, height: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&height) {
            return Err(Error::CapHeightOutOfRange(height));
        }
        let norm = axis.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidPatch("cap axis must be a nonzero vector".into()));
        }
        Ok(Self::Cap { axis: axis / norm, height })
    }

    pub fn half_space(normal: Vector, offset: f64) -> Result<Self> {
        if !(normal.norm() > 0.0) || !offset.is_finite() {
            return Err(Error::InvalidPatch("half-space needs a nonzero normal and finite offset".into()));
        }
        Ok(Self::HalfSpace { normal, offset })
    }

    pub fn lat_lon_box(lat_min: f64, lat_max: f64, lon_start: f64, lon_width: f64) -> Result<Self> {
        let half = PI / 2.0;
        if !(-half <= lat_min && lat_min <= lat_max && lat_max <= half) {
            return Err(Error::InvalidPatch("latitudes must satisfy -pi/2 <= min <= max <= pi/2".into()));
        }
        if !(0.0..=2.0 * PI).contains(&lon_width) || !lon_start.is_finite() {
            return Err(Error::InvalidPatch("longitude width must lie in [0, 2 pi]".into()));
        }
        Ok(Self::LatLonBox { lat_min, lat_max, lon_start, lon_width })
    }

    pub fn union(self, other: Region) -> Self {
        Self::Union(Box::new(self), Box::new(other))
    }

    pub fn intersection(self, other: Region) -> Self {
        Self::Intersection(Box::new(self), Box::new(other))
    }

    pub fn complement(self) -> Self {
        Self::Complement(Box::new(self))
    }

    /// Pure predicate; does not check that `x` lies on a boundary.
    pub fn contains(&self, x: &Vector) -> bool {
        match self {
            Self::Whole => true,
            Self::Cap { axis, height } => x.dot(axis) >= *height,
            Self::HalfSpace { normal, offset } => normal.dot(x) >= *offset,
            Self::LatLonBox { lat_min, lat_max, lon_start, lon_width } => {
                let r = x.norm();
                let lat = (x[2] / r).clamp(-1.0, 1.0).asin();
                if lat < *lat_min || lat > *lat_max {
                    return false;
                }
                if *lon_width >= 2.0 * PI {
                    return true;
                }
                let lon = x[1].atan2(x[0]);
                let mut offset = (lon - lon_start) % (2.0 * PI);
                if offset < 0.0 {
                    offset += 2.0 * PI;
                }
                offset <= *lon_width
            }
            Self::Union(a, b) => a.contains(x) || b.contains(x),
            Self::Intersection(a, b) => a.contains(x) && b.contains(x),
            Self::Complement(a) => !a.contains(x),
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            Self::Whole => Ok(()),
            Self::Cap { axis: v, .. } | Self::HalfSpace { normal: v, .. } if v.len() != n => {
                Err(Error::DimensionMismatch { expected: n, found: v.len() })
            }
            Self::Cap { .. } | Self::HalfSpace { .. } => Ok(()),
            Self::LatLonBox { .. } if n != 3 => Err(Error::DimensionMismatch { expected: 3, found: n }),
            Self::LatLonBox { .. } => Ok(()),
            Self::Union(a, b) | Self::Intersection(a, b) => a.check_dim(n).and(b.check_dim(n)),
            Self::Complement(a) => a.check_dim(n),
        }
    }

    fn has_lat_lon(&self) -> bool {
        match self {
            Self::LatLonBox { .. } => true,
            Self::Union(a, b) | Self::Intersection(a, b) => a.has_lat_lon() || b.has_lat_lon(),
            Self::Complement(a) => a.has_lat_lon(),
            _ => false,
        }
    }

    /// Expresses the region as a set of intervals of `<x, axis>` for a
    /// single axis, when every constituent is a cap about that axis.
    fn axial_intervals(&self, axis: &mut Option<Vector>) -> Option<Intervals> {
        match self {
            Self::Whole => Some(Intervals::full()),
            Self::Cap { axis: a, height } => axial_cap(axis, a, *height),
            Self::HalfSpace { normal, offset } => {
                let norm = normal.norm();
                axial_cap(axis, &(normal / norm), (offset / norm).clamp(-1.0, 1.0))
            }
            Self::LatLonBox { lat_min, lat_max, lon_width, .. } => {
                if *lon_width < 2.0 * PI {
                    return None;
                }
                let ez = super::basis(3, 2);
                let band = axial_cap(axis, &ez, lat_min.sin())?;
                let top = axial_cap(axis, &ez, lat_max.sin())?;
                // closedness of the upper rim has measure zero
                Some(band.intersect(&top.complement()))
            }
            Self::Union(a, b) => Some(a.axial_intervals(axis)?.union(&b.axial_intervals(axis)?)),
            Self::Intersection(a, b) => Some(a.axial_intervals(axis)?.intersect(&b.axial_intervals(axis)?)),
            Self::Complement(a) => Some(a.axial_intervals(axis)?.complement()),
        }
    }
}

fn axial_cap(axis: &mut Option<Vector>, a: &Vector, height: f64) -> Option<Intervals> {
    const ALIGN: f64 = 1e-12;
    let reference = axis.get_or_insert_with(|| a.clone());
    let c = reference.dot(a);
    if (c - 1.0).abs() < ALIGN {
        Some(Intervals(alloc::vec![(height, 1.0)]))
    } else if (c + 1.0).abs() < ALIGN {
        Some(Intervals(alloc::vec![(-1.0, -height)]))
    } else {
        None
    }
}

/// Sorted disjoint sub-intervals of `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
struct Intervals(Vec<(f64, f64)>);

impl Intervals {
    fn full() -> Self {
        Self(alloc::vec![(-1.0, 1.0)])
    }

    fn normalized(mut parts: Vec<(f64, f64)>) -> Self {
        parts.retain(|(a, b)| b > a);
        parts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(parts.len());
        for (a, b) in parts {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self(out)
    }

    fn union(&self, other: &Self) -> Self {
        Self::normalized(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    fn intersect(&self, other: &Self) -> Self {
        let mut parts = Vec::new();
        for &(a, b) in &self.0 {
            for &(c, d) in &other.0 {
                parts.push((a.max(c), b.min(d)));
            }
        }
        Self::normalized(parts)
    }

    fn complement(&self) -> Self {
        let mut parts = Vec::new();
        let mut cursor = -1.0;
        for &(a, b) in &self.0 {
            parts.push((cursor, a));
            cursor = b;
        }
        parts.push((cursor, 1.0));
        Self::normalized(parts)
    }
}

/// A region of the boundary of a particular body.
#[derive(Debug, Clone)]
pub struct SurfacePatch {
    body: Arc<ConvexBody>,
    region: Region,
}

impl SurfacePatch {
    pub fn new(body: Arc<ConvexBody>, region: Region) -> Result<Self> {
        region.check_dim(body.dim())?;
        if region.has_lat_lon() && body.unit_sphere_dim() != Some(3) {
            return Err(Error::InvalidPatch("latitude/longitude boxes are defined on the unit 2-sphere only".into()));
        }
        Ok(Self { body, region })
    }

    pub fn whole(body: Arc<ConvexBody>) -> Self {
        Self { body, region: Region::Whole }
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn body_arc(&self) -> &Arc<ConvexBody> {
        &self.body
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Same body, complementary region.
    pub fn complement(&self) -> Self {
        Self { body: self.body.clone(), region: self.region.clone().complement() }
    }

    pub fn with_region(&self, region: Region) -> Result<Self> {
        Self::new(self.body.clone(), region)
    }

    /// Membership of a boundary point; rejects points off the boundary.
    pub fn contains(&self, x: &Vector) -> Result<bool> {
        self.body.check_on_surface(x)?;
        Ok(self.region.contains(x))
    }
}

/// Area of the cap `{x in S^2 : x_3 >= t}`: `2 pi (1 - t)`.
pub fn cap_area_exact(t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::CapHeightOutOfRange(t));
    }
    Ok(2.0 * PI * (1.0 - t))
}

/// `H^(n-1)(S^(n-1)) = 2 pi^(n/2) / Gamma(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / libm::tgamma(half)
}

/// Normalized measure of the cap `{<x, a> >= t}` on `S^(n-1)`.
///
/// The cap is `int_t^1 (1 - s^2)^m ds` over its value at `t = -1`, with
/// `m = (n - 3) / 2`, evaluated by the reduction
/// `I_m = -t (1 - t^2)^m / (2m + 1) + 2m / (2m + 1) I_(m-1)`
/// from `I_0 = 1 - t` or `I_(-1/2) = acos t`.
pub fn cap_sigma(t: f64, n: usize) -> f64 {
    assert!(n >= 2, "sphere dimension must be at least 1");
    let t = t.clamp(-1.0, 1.0);
    let integral = |t: f64| {
        let twice_m = n as i64 - 3;
        let (mut m, mut value) = if twice_m % 2 == 0 { (0.0, 1.0 - t) } else { (-0.5, t.acos()) };
        let w = 1.0 - t * t;
        while 2.0 * m < twice_m as f64 {
            m += 1.0;
            value = -t * w.powf(m) / (2.0 * m + 1.0) + 2.0 * m / (2.0 * m + 1.0) * value;
        }
        value
    };
    (integral(t) / integral(-1.0)).clamp(0.0, 1.0)
}

/// Closed-form normalized measure `sigma(A)` of a patch on a unit sphere.
///
/// Available for caps, half-space cuts and latitude bands about a common
/// axis and their boolean combinations; `Ok(None)` otherwise.
pub fn sigma_exact(patch: &SurfacePatch) -> Result<Option<f64>> {
    let n = patch.body().unit_sphere_dim().ok_or(Error::NotASphere)?;
    let mut axis = None;
    Ok(patch
        .region()
        .axial_intervals(&mut axis)
        .map(|iv| iv.0.iter().map(|&(a, b)| cap_sigma(a, n) - cap_sigma(b, n)).sum::<f64>()))
}

/// Closed-form boundary area: spheres (any dimension, any similarity) and
/// meshes. `Ok(None)` for ellipsoids and implicit bodies.
pub fn surface_area_exact(body: &ConvexBody) -> Result<Option<f64>> {
    match body {
        ConvexBody::UnitSphere { dim } => Ok(Some(sphere_area(*dim))),
        ConvexBody::Mesh(m) => m.surface_area().map(Some),
        ConvexBody::Transformed { base, motion } => Ok(surface_area_exact(base)?
            .map(|a| a * motion.scale().powi(body.dim() as i32 - 1))),
        ConvexBody::Ellipsoid { .. } | ConvexBody::Implicit(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{basis, TriangleMesh};
    use alloc::vec;
    use proptest::prelude::*;

    fn sphere3() -> Arc<ConvexBody> {
        Arc::new(ConvexBody::unit_sphere(3).unwrap())
    }

    fn v(c: &[f64]) -> Vector {
        Vector::from_column_slice(c)
    }

    #[test]
    fn contains_examples() {
        let cap = SurfacePatch::new(sphere3(), Region::cap(basis(3, 2), 0.5).unwrap()).unwrap();
        assert!(cap.contains(&v(&[0.0, 0.0, 1.0])).unwrap());
        assert!(!cap.contains(&v(&[1.0, 0.0, 0.0])).unwrap());
        assert!(cap.complement().contains(&v(&[1.0, 0.0, 0.0])).unwrap());
        assert!(matches!(cap.contains(&v(&[0.0, 0.0, 1.1])), Err(Error::OffSurface { .. })));
        // rim is closed
        let hemi = Region::cap(basis(3, 2), 0.0).unwrap();
        assert!(hemi.contains(&v(&[1.0, 0.0, 0.0])));
    }

    #[test]
    fn cap_area_examples() {
        assert_eq!(cap_area_exact(1.0).unwrap(), 0.0);
        assert!((cap_area_exact(0.5).unwrap() - PI).abs() < 1e-15);
        assert!((cap_area_exact(-1.0).unwrap() - 4.0 * PI).abs() < 1e-15);
        assert_eq!(cap_area_exact(1.5), Err(Error::CapHeightOutOfRange(1.5)));
    }

    #[test]
    fn sigma_examples() {
        let s = sphere3();
        let hemi = SurfacePatch::new(s.clone(), Region::cap(basis(3, 2), 0.0).unwrap()).unwrap();
        assert!((sigma_exact(&hemi).unwrap().unwrap() - 0.5).abs() < 1e-15);
        let quarter = SurfacePatch::new(s.clone(), Region::cap(basis(3, 2), 0.5).unwrap()).unwrap();
        assert!((sigma_exact(&quarter).unwrap().unwrap() - 0.25).abs() < 1e-15);
        let boxed = SurfacePatch::new(s.clone(), Region::lat_lon_box(0.0, 1.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(sigma_exact(&boxed).unwrap(), None);
        let band = SurfacePatch::new(s.clone(), Region::lat_lon_box(0.0, PI / 2.0, 0.0, 2.0 * PI).unwrap()).unwrap();
        assert!((sigma_exact(&band).unwrap().unwrap() - 0.5).abs() < 1e-15);
        let skew = SurfacePatch::new(
            s.clone(),
            Region::cap(basis(3, 2), 0.0).unwrap().union(Region::cap(basis(3, 0), 0.0).unwrap()),
        )
        .unwrap();
        assert_eq!(sigma_exact(&skew).unwrap(), None);
        let ell = Arc::new(ConvexBody::ellipsoid(v(&[1.0, 1.0, 1.5])).unwrap());
        assert_eq!(sigma_exact(&SurfacePatch::whole(ell)), Err(Error::NotASphere));
    }

    #[test]
    fn antipodal_caps_combine() {
        // {z >= 0.5} union {z <= -0.5} via an opposite axis
        let r = Region::cap(basis(3, 2), 0.5).unwrap().union(Region::cap(-basis(3, 2), 0.5).unwrap());
        let p = SurfacePatch::new(sphere3(), r).unwrap();
        assert!((sigma_exact(&p).unwrap().unwrap() - 0.5).abs() < 1e-15);
        let c = p.complement();
        assert!((sigma_exact(&c).unwrap().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cap_sigma_general_dimensions() {
        // circle: arc fraction acos(t) / pi
        assert!((cap_sigma(0.5, 2) - (0.5f64).acos() / PI).abs() < 1e-15);
        for n in 2..12 {
            assert!((cap_sigma(0.0, n) - 0.5).abs() < 1e-13, "n = {n}");
            assert!((cap_sigma(-1.0, n) - 1.0).abs() < 1e-15);
            assert!(cap_sigma(1.0, n).abs() < 1e-15);
        }
        // S^3: density proportional to sqrt(1 - s^2); compare against midpoint quadrature
        let t = 0.3;
        let steps = 200_000;
        let h = (1.0 - t) / steps as f64;
        let num: f64 = (0..steps).map(|i| { let s = t + (i as f64 + 0.5) * h; (1.0 - s * s).sqrt() * h }).sum();
        assert!((cap_sigma(t, 4) - num / (PI / 2.0)).abs() < 1e-8);
    }

    #[test]
    fn areas() {
        assert!((surface_area_exact(&ConvexBody::unit_sphere(3).unwrap()).unwrap().unwrap() - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        let cube = ConvexBody::mesh(TriangleMesh::unit_cube());
        assert!((surface_area_exact(&cube).unwrap().unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(surface_area_exact(&ConvexBody::ellipsoid(v(&[1.0, 1.0, 1.5])).unwrap()).unwrap(), None);
        let big = ConvexBody::sphere(v(&[1.0, 2.0, 3.0]), 2.0).unwrap();
        assert!((surface_area_exact(&big).unwrap().unwrap() - 16.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn lat_lon_requires_sphere() {
        let ell = Arc::new(ConvexBody::ellipsoid(v(&[1.0, 1.0, 1.5])).unwrap());
        assert!(SurfacePatch::new(ell, Region::lat_lon_box(0.0, 1.0, 0.0, 1.0).unwrap()).is_err());
        let _ = vec![1];
    }

    proptest! {
        #[test]
        fn disjoint_cap_measures_add(t1 in -1.0f64..1.0, t2 in -1.0f64..1.0, n in 2usize..9) {
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let s = Arc::new(ConvexBody::unit_sphere(n).unwrap());
            let e = basis(n, n - 1);
            let top = Region::cap(e.clone(), hi).unwrap();
            let band = Region::cap(e.clone(), lo).unwrap().intersection(top.clone().complement());
            let sig = |r: Region| sigma_exact(&SurfacePatch::new(s.clone(), r).unwrap()).unwrap().unwrap();
            let whole = sig(top.clone().union(band.clone()));
            prop_assert!((whole - sig(top) - sig(band)).abs() < 1e-12);
        }

        #[test]
        fn complementary_cap_areas(t in -1.0f64..1.0) {
            // cap above t plus the cap below t (i.e. above -t about the opposite axis)
            prop_assert!((cap_area_exact(t).unwrap() + cap_area_exact(-t).unwrap() - 4.0 * PI).abs() < 1e-12);
        }
    }
}
