//! Vectors, directed lines, convex bodies and surface patches.

mod body;
mod line;
mod mesh;
mod patch;

pub use body::{ConvexBody, ImplicitConvex, LevelFunction, PowerSum, Similarity};
pub use line::DirectedLine;
pub(crate) use mesh::to_v3 as mesh_v3;
pub use mesh::{MeshTopology, TriangleMesh};
pub use patch::{
    cap_area_exact, cap_sigma, sigma_exact, sphere_area, surface_area_exact, Region, SurfacePatch,
};

/// A point or direction in `R^n`.
pub type Vector = nalgebra::DVector<f64>;
/// A dense real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Relative on-surface tolerance, multiplied by the body diameter.
pub const SURFACE_TOLERANCE: f64 = 1e-9;

/// Unit basis vector `e_i` in `R^n`.
pub fn basis(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = 1.0;
    v
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `u`.
///
/// Built from the Householder reflection that maps `e_n` to `u`, so the
/// result depends only on `u`.
pub fn orthonormal_complement(u: &Vector) -> alloc::vec::Vec<Vector> {
    let n = u.len();
    let last = n - 1;
    // reflect across the bisector of e_last and ±u, choosing the sign that avoids cancellation
    let sign = if u[last] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = u * sign;
    w[last] += 1.0;
    let ww = w.dot(&w);
    (0..last)
        .map(|i| {
            // H e_i = e_i - 2 w (w_i / ww)
            let mut col = &w * (-2.0 * w[i] / ww);
            col[i] += 1.0;
            col
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal() {
        for u in [
            Vector::from_vec(alloc::vec![0.0, 0.0, 1.0]),
            Vector::from_vec(alloc::vec![0.0, 0.0, -1.0]),
            Vector::from_vec(alloc::vec![0.6, 0.0, 0.8]),
            Vector::from_vec(alloc::vec![0.5, -0.5, 0.5, -0.5]),
        ] {
            let frame = orthonormal_complement(&u);
            assert_eq!(frame.len(), u.len() - 1);
            for (i, a) in frame.iter().enumerate() {
                assert!(a.dot(&u).abs() < 1e-15);
                for (j, b) in frame.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((a.dot(b) - expected).abs() < 1e-15);
                }
            }
        }
    }
}
