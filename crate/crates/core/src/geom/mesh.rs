use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use nalgebra::Vector3;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use super::Vector;
use crate::{Error, Result};

type V3 = Vector3<f64>;

/// Triangle surface in `R^3`.
///
/// Face normals are oriented away from the bounding-box centre, which is
/// outward for the convex (star-shaped) meshes this crate targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<V3>,
    faces: Vec<[usize; 3]>,
    normals: Vec<V3>,
    areas: Vec<f64>,
    cumulative: Vec<f64>,
    center: V3,
    radius: f64,
    closed: bool,
}

/// Edge incidence summary; a closed 2-manifold has neither kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MeshTopology {
    /// Edges used by exactly one face.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Edges used by three or more faces.
    pub nonmanifold_edges: Vec<[usize; 2]>,
}

impl MeshTopology {
    pub fn is_closed_manifold(&self) -> bool {
        self.boundary_edges.is_empty() && self.nonmanifold_edges.is_empty()
    }
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidBody("mesh has no faces".into()));
        }
        if let Some(bad) = vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidBody(format!("vertex {bad} is not finite")));
        }
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&k| k >= vertices.len()) {
                return Err(Error::InvalidBody(format!("face {i} references a missing vertex")));
            }
        }
        let vertices: Vec<V3> = vertices.into_iter().map(V3::from).collect();
        let mut lo = vertices[0];
        let mut hi = vertices[0];
        for v in &vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        let center = (lo + hi) * 0.5;
        let radius = vertices.iter().map(|v| (v - center).norm()).fold(0.0, f64::max);

        let mut normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        for f in &faces {
            let [a, b, c] = f.map(|k| vertices[k]);
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            let mut normal = if area > 0.0 { cross / (2.0 * area) } else { V3::zeros() };
            let centroid = (a + b + c) / 3.0;
            if normal.dot(&(centroid - center)) < 0.0 {
                normal = -normal;
            }
            normals.push(normal);
            areas.push(area);
        }
        let mut acc = 0.0;
        let cumulative = areas
            .iter()
            .map(|a| {
                acc += a;
                acc
            })
            .collect();
        let mut mesh = Self { vertices, faces, normals, areas, cumulative, center, radius, closed: false };
        mesh.closed = mesh.topology().is_closed_manifold();
        Ok(mesh)
    }

    /// Surface of `[-1/2, 1/2]^3`: 8 vertices, 12 triangles.
    pub fn unit_cube() -> Self {
        let mut vertices = Vec::with_capacity(8);
        for i in 0..8 {
            let c = |bit: usize| if i & bit != 0 { 0.5 } else { -0.5 };
            vertices.push([c(1), c(2), c(4)]);
        }
        let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
        let faces = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
        Self::new(vertices, faces).expect("static cube")
    }

    /// Geodesic sphere: an icosahedron subdivided `levels` times and
    /// projected to the unit sphere (`10 * 4^levels + 2` vertices).
    pub fn icosphere(levels: u32) -> Self {
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let mut vertices: Vec<V3> = [
            [-1.0, phi, 0.0], [1.0, phi, 0.0], [-1.0, -phi, 0.0], [1.0, -phi, 0.0],
            [0.0, -1.0, phi], [0.0, 1.0, phi], [0.0, -1.0, -phi], [0.0, 1.0, -phi],
            [phi, 0.0, -1.0], [phi, 0.0, 1.0], [-phi, 0.0, -1.0], [-phi, 0.0, 1.0],
        ]
        .iter()
        .map(|v| V3::from(*v).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = alloc::vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..levels {
            let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<V3>| {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        let vertices = vertices.iter().map(|v| [v.x, v.y, v.z]).collect();
        Self::new(vertices, faces).expect("static icosphere")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = [f64; 3]> + '_ {
        self.vertices.iter().map(|v| [v.x, v.y, v.z])
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub(crate) fn face_vertices(&self, face: usize) -> [V3; 3] {
        self.faces[face].map(|k| self.vertices[k])
    }

    pub fn face_area(&self, face: usize) -> f64 {
        self.areas[face]
    }

    pub fn face_normal(&self, face: usize) -> Vector {
        let n = self.normals[face];
        Vector::from_column_slice(n.as_slice())
    }

    /// Total area; fails on a zero-area face.
    pub fn surface_area(&self) -> Result<f64> {
        let floor = 1e-15 * self.radius * self.radius;
        if let Some(i) = self.areas.iter().position(|&a| a <= floor) {
            return Err(Error::DegenerateFace(i));
        }
        Ok(self.cumulative.last().copied().unwrap_or(0.0))
    }

    pub(crate) fn total_area(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn center(&self) -> Vector {
        Vector::from_column_slice(self.center.as_slice())
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// True when every edge is shared by exactly two faces.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn topology(&self) -> MeshTopology {
        let mut uses: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *uses.entry([a.min(b), a.max(b)]).or_default() += 1;
            }
        }
        let mut topo = MeshTopology::default();
        for (edge, count) in uses {
            match count {
                1 => topo.boundary_edges.push(edge),
                2 => {}
                _ => topo.nonmanifold_edges.push(edge),
            }
        }
        topo
    }

    /// Face containing the area-weighted quantile `u` in `[0, 1)`.
    pub(crate) fn face_at_quantile(&self, u: f64) -> usize {
        let target = u * self.total_area();
        self.cumulative.partition_point(|&c| c <= target).min(self.faces.len() - 1)
    }

    pub fn distance(&self, x: &Vector) -> f64 {
        let p = to_v3(x);
        (0..self.faces.len()).map(|f| (closest_on_triangle(&p, self.face_vertices(f)) - p).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn nearest_face(&self, x: &Vector) -> usize {
        let p = to_v3(x);
        let mut best = (f64::INFINITY, 0);
        for f in 0..self.faces.len() {
            let d = (closest_on_triangle(&p, self.face_vertices(f)) - p).norm_squared();
            if d < best.0 {
                best = (d, f);
            }
        }
        best.1
    }
}

pub(crate) fn to_v3(x: &Vector) -> V3 {
    V3::new(x[0], x[1], x[2])
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
fn closest_on_triangle(p: &V3, [a, b, c]: [V3; 3]) -> V3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}
