//! Line/boundary intersection and patch hit counting.

use alloc::vec::Vec;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use crate::geom::{ConvexBody, DirectedLine, ImplicitConvex, SurfacePatch, TriangleMesh, Vector};
use crate::{Error, Result};

/// Relative tangency tolerance: a line within `1e-12 * scale` of touching
/// the boundary is reported as a tangential contact.
pub const TANGENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contact {
    Transversal,
    Tangential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    /// Line parameter: `point = line.at(param)`.
    pub param: f64,
    pub point: Vector,
    pub contact: Contact,
}

/// Boundary crossings of one line, ordered along its direction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HitRecord {
    pub hits: Vec<Hit>,
}

impl HitRecord {
    fn from_params(line: &DirectedLine, params: &[f64], contact: Contact) -> Self {
        let hits = params.iter().map(|&param| Hit { param, point: line.at(param), contact }).collect();
        Self { hits }
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    /// True if any contact is tangential; such lines are resampled.
    pub fn is_degenerate(&self) -> bool {
        self.hits.iter().any(|h| h.contact == Contact::Tangential)
    }

    pub fn transversal_count(&self) -> usize {
        self.hits.iter().filter(|h| h.contact == Contact::Transversal).count()
    }

    pub fn points(&self) -> impl Iterator<Item = &Vector> {
        self.hits.iter().map(|h| &h.point)
    }

    /// First and last crossing of a non-degenerate record with at least two.
    pub fn entry_exit(&self) -> Option<(&Vector, &Vector)> {
        if self.is_degenerate() || self.hits.len() < 2 {
            return None;
        }
        Some((&self.hits[0].point, &self.hits[self.hits.len() - 1].point))
    }
}

/// Sphere of radius `radius` about the origin.
pub fn intersect_sphere(line: &DirectedLine, radius: f64) -> HitRecord {
    let rho = line.offset();
    let eps = TANGENT_TOLERANCE * radius;
    if rho > radius + eps {
        HitRecord::default()
    } else if (rho - radius).abs() <= eps {
        HitRecord::from_params(line, &[0.0], Contact::Tangential)
    } else {
        let half = ((radius - rho) * (radius + rho)).sqrt();
        HitRecord::from_params(line, &[-half, half], Contact::Transversal)
    }
}

/// Axis-aligned ellipsoid about the origin, solved in coordinates where it
/// is the unit sphere.
pub fn intersect_ellipsoid(line: &DirectedLine, semi_axes: &Vector) -> HitRecord {
    let p = line.point().component_div(semi_axes);
    let u = line.direction().component_div(semi_axes);
    let a = u.norm_squared();
    let b = p.dot(&u);
    // distance of the rescaled line from the origin
    let rho = (p.norm_squared() - b * b / a).max(0.0).sqrt();
    let centre = -b / a;
    if rho > 1.0 + TANGENT_TOLERANCE {
        HitRecord::default()
    } else if (rho - 1.0).abs() <= TANGENT_TOLERANCE {
        HitRecord::from_params(line, &[centre], Contact::Tangential)
    } else {
        let half = ((1.0 - rho) * (1.0 + rho)).sqrt() / a.sqrt();
        HitRecord::from_params(line, &[centre - half, centre + half], Contact::Transversal)
    }
}

/// Implicit convex body: scan `g` along the chord of the bounding ball,
/// then bisect each sign change to `1e-12 * R`.
///
/// When the scan sees no sign change the minimum of `g` along the line is
/// located from the monotone directional derivative, so short chords that
/// fall between two scan nodes are still found.
pub fn intersect_implicit(line: &DirectedLine, body: &ImplicitConvex) -> Result<HitRecord> {
    let radius = body.bounding_radius();
    let rho = line.offset();
    if rho >= radius {
        return Ok(HitRecord::default());
    }
    let g = body.level();
    let h = |s: f64| g.value(&line.at(s));
    let slope = |s: f64| g.gradient(&line.at(s)).dot(line.direction());
    let reach = ((radius - rho) * (radius + rho)).sqrt();
    let nodes = body.grid_nodes();
    let step = 2.0 * reach / (nodes - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..nodes)
        .map(|i| {
            let s = -reach + step * i as f64;
            (s, h(s))
        })
        .collect();
    if grid[0].1 < 0.0 || grid[nodes - 1].1 < 0.0 {
        return Err(Error::InvalidBody("boundary extends past the bounding radius".into()));
    }
    let changes: Vec<usize> = (1..nodes).filter(|&i| (grid[i - 1].1 > 0.0) != (grid[i].1 > 0.0)).collect();
    let tol = TANGENT_TOLERANCE * radius;
    let bisect = |mut lo: f64, mut hi: f64| {
        // invariant: sign of h differs at lo and hi
        let positive_lo = h(lo) > 0.0;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if (h(mid) > 0.0) == positive_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let roots = match changes.len() {
        0 => {
            let k = (0..nodes).min_by(|&i, &j| grid[i].1.total_cmp(&grid[j].1)).unwrap_or(0);
            let mut lo = grid[k.saturating_sub(1)].0;
            let mut hi = grid[(k + 1).min(nodes - 1)].0;
            let (a, b) = (lo, hi);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s_min = 0.5 * (lo + hi);
            let value = h(s_min);
            let grad = g.gradient(&line.at(s_min)).norm();
            if value > grad * tol {
                return Ok(HitRecord::default());
            }
            if value >= -grad * tol {
                return Ok(HitRecord::from_params(line, &[s_min], Contact::Tangential));
            }
            [bisect(a, s_min), bisect(s_min, b)]
        }
        2 => [bisect(grid[changes[0] - 1].0, grid[changes[0]].0), bisect(grid[changes[1] - 1].0, grid[changes[1]].0)],
        k => return Err(Error::NonConvexityDetected(k)),
    };
    let contact = if roots[1] - roots[0] < tangent_chord(radius) { Contact::Tangential } else { Contact::Transversal };
    Ok(HitRecord::from_params(line, &roots, contact))
}

/// Chord length below which two roots are treated as one tangential
/// contact; equals the chord of a sphere of radius `r` at offset
/// `(1 - 1e-12) r`.
fn tangent_chord(radius: f64) -> f64 {
    2.0 * (2.0 * TANGENT_TOLERANCE).sqrt() * radius
}

/// Watertight line/triangle crossing test over every face.
///
/// Edge functions are evaluated in a sheared frame where the line is the
/// `z` axis, so adjacent faces compute bitwise-negated values on shared
/// edges and no crossing falls through a crack. A crossing exactly on an
/// edge or vertex is reported by several faces; the one with the smallest
/// face index owns it. On a closed mesh an odd crossing count (a grazing
/// line) is flagged tangential; on an open mesh, any crossing through an
/// edge or vertex is.
pub fn intersect_mesh(line: &DirectedLine, mesh: &TriangleMesh) -> HitRecord {
    let centre = mesh.center();
    if (line.point() - &centre).norm_squared() - line.param_of(&centre).powi(2) > mesh.radius().powi(2) * (1.0 + 1e-9) {
        return HitRecord::default();
    }
    let org = crate::geom::mesh_v3(line.point());
    let dir = crate::geom::mesh_v3(line.direction());
    let kz = dir.iamax();
    let (mut kx, mut ky) = ((kz + 1) % 3, (kz + 2) % 3);
    if dir[kz] < 0.0 {
        core::mem::swap(&mut kx, &mut ky);
    }
    let sx = dir[kx] / dir[kz];
    let sy = dir[ky] / dir[kz];
    let sz = 1.0 / dir[kz];

    // (param, face, ownership key)
    let mut found: Vec<(f64, usize, Option<[usize; 2]>)> = Vec::new();
    for (f, idx) in mesh.faces().iter().enumerate() {
        let [a, b, c] = mesh.face_vertices(f).map(|v| v - org);
        let shear = |v: &nalgebra::Vector3<f64>| (v[kx] - sx * v[kz], v[ky] - sy * v[kz]);
        let (ax, ay) = shear(&a);
        let (bx, by) = shear(&b);
        let (cx, cy) = shear(&c);
        let eu = cx * by - cy * bx;
        let ev = ax * cy - ay * cx;
        let ew = bx * ay - by * ax;
        if (eu < 0.0 || ev < 0.0 || ew < 0.0) && (eu > 0.0 || ev > 0.0 || ew > 0.0) {
            continue;
        }
        let det = eu + ev + ew;
        if det == 0.0 {
            continue;
        }
        let t = (eu * sz * a[kz] + ev * sz * b[kz] + ew * sz * c[kz]) / det;
        let key = match (eu == 0.0, ev == 0.0, ew == 0.0) {
            (false, false, false) => None,
            (true, false, false) => Some(edge_key(idx[1], idx[2])),
            (false, true, false) => Some(edge_key(idx[2], idx[0])),
            (false, false, true) => Some(edge_key(idx[0], idx[1])),
            (true, true, _) => Some([idx[2], usize::MAX]),
            (false, true, true) => Some([idx[0], usize::MAX]),
            (true, false, true) => Some([idx[1], usize::MAX]),
        };
        found.push((t, f, key));
    }
    // faces are visited in index order, so the first report of a key wins
    let mut owned: Vec<[usize; 2]> = Vec::new();
    let mut params: Vec<f64> = Vec::with_capacity(found.len());
    let on_edge = found.iter().any(|(_, _, key)| key.is_some());
    for (t, _, key) in found {
        match key {
            Some(k) if owned.contains(&k) => {}
            Some(k) => {
                owned.push(k);
                params.push(t);
            }
            None => params.push(t),
        }
    }
    params.sort_by(f64::total_cmp);
    let grazing = if mesh.is_closed() { params.len() % 2 == 1 } else { on_edge };
    let contact = if grazing { Contact::Tangential } else { Contact::Transversal };
    HitRecord::from_params(line, &params, contact)
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    [a.min(b), a.max(b)]
}

/// Intersects a line with any supported body.
pub fn intersect(body: &ConvexBody, line: &DirectedLine) -> Result<HitRecord> {
    if line.dim() != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), found: line.dim() });
    }
    match body {
        ConvexBody::UnitSphere { .. } => Ok(intersect_sphere(line, 1.0)),
        ConvexBody::Ellipsoid { semi_axes } => Ok(intersect_ellipsoid(line, semi_axes)),
        ConvexBody::Implicit(b) => intersect_implicit(line, b),
        ConvexBody::Mesh(m) => Ok(intersect_mesh(line, m)),
        ConvexBody::Transformed { base, motion } => {
            let local = DirectedLine::canonical(motion.apply_inverse(line.point()), motion.rotate_inverse(line.direction()));
            let record = intersect(base, &local)?;
            let hits = record
                .hits
                .into_iter()
                .map(|h| {
                    let point = motion.apply(&h.point);
                    Hit { param: line.param_of(&point), point, contact: h.contact }
                })
                .collect();
            Ok(HitRecord { hits })
        }
    }
}

/// `n_l(A)`: number of boundary crossings of `line` that lie in `patch`.
///
/// Tangential lines are an error so callers can resample them.
pub fn count_patch_hits(line: &DirectedLine, patch: &SurfacePatch) -> Result<usize> {
    let record = intersect(patch.body(), line)?;
    if record.is_degenerate() {
        return Err(Error::TangentialContact);
    }
    Ok(record.points().filter(|p| patch.region().contains(p)).count())
}
