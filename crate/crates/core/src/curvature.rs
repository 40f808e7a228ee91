//! Normals, second fundamental forms, principal curvatures, the pair
//! kernel `F` and the sphere certificate built from them.
//!
//! Orientation: normals point outward, and the boundary near `x` is the
//! graph `x + z + phi(z) n(x)` over the tangent space with
//! `phi(z) = 1/2 <z, Q z> + o(|z|^2)`. With this orientation `Q` is
//! negative semi-definite on convex bodies, and the unit sphere has
//! `Q = -I`.

use alloc::vec::Vec;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use crate::exec::{run_chunked, Executor, StreamFamily};
use crate::geom::{orthonormal_complement, ConvexBody, Matrix, Vector};
use crate::sampler::BoundarySampler;
use crate::stats::{LinearFit, MeanAccumulator};
use crate::{Error, Result};
use alloc::sync::Arc;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Pairs closer than this (times the body scale) are rejected by the kernel.
pub const KERNEL_GUARD: f64 = 1e-6;
/// Step of the finite-difference second fundamental form (times the body scale).
pub const FD_STEP: f64 = 1e-4;

/// `Q` at a boundary point in an orthonormal tangent frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalForm {
    base_point: Vector,
    normal: Vector,
    /// `n x (n - 1)`, orthonormal columns spanning the tangent space.
    frame: Matrix,
    /// Symmetric `(n - 1) x (n - 1)`.
    q: Matrix,
}

impl SecondFundamentalForm {
    /// Builds a form from raw parts, symmetrizing `q`.
    pub fn new(base_point: Vector, normal: Vector, frame: Matrix, q: Matrix) -> Result<Self> {
        let n = base_point.len();
        if normal.len() != n || frame.shape() != (n, n - 1) || q.shape() != (n - 1, n - 1) {
            return Err(Error::DimensionMismatch { expected: n, found: frame.nrows() });
        }
        if (q.clone() - q.transpose()).amax() > 1e-9 * (1.0 + q.amax()) {
            return Err(Error::InvalidArgument("second fundamental form must be symmetric".into()));
        }
        let q = (&q + q.transpose()) * 0.5;
        Ok(Self { base_point, normal, frame, q })
    }

    pub fn base_point(&self) -> &Vector {
        &self.base_point
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn tangent_frame(&self) -> &Matrix {
        &self.frame
    }

    pub fn matrix(&self) -> &Matrix {
        &self.q
    }

    /// `<Q v, v>` for a tangent vector `v` given in ambient coordinates.
    pub fn quadratic(&self, v: &Vector) -> f64 {
        let local = self.frame.transpose() * v;
        local.dot(&(&self.q * &local))
    }

    /// True when every eigenvalue is at most `tolerance`.
    pub fn is_negative_semidefinite(&self, tolerance: f64) -> bool {
        principal_curvatures(self).last().is_none_or(|&l| l <= tolerance)
    }
}

fn dims_match(body: &ConvexBody, x: &Vector) -> Result<()> {
    if x.len() != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), found: x.len() });
    }
    Ok(())
}

/// Outward unit normal at a boundary point.
pub fn normal_at(body: &ConvexBody, x: &Vector) -> Result<Vector> {
    body.check_on_surface(x)?;
    Ok(body.outward_normal(x))
}

/// An orthonormal basis of the tangent space `n^perp`, as matrix columns.
pub fn tangent_frame(normal: &Vector) -> Matrix {
    let cols = orthonormal_complement(&normal.normalize());
    Matrix::from_columns(&cols)
}

/// The shape operator in ambient coordinates,
/// `W = -P H P / |grad g|` with `P = I - n n^T`, so that
/// `Q = E^T W E` for any tangent frame `E`.
pub fn shape_matrix(body: &ConvexBody, x: &Vector) -> Result<Matrix> {
    dims_match(body, x)?;
    let (grad, hess) = match (body.level_gradient(x), body.level_hessian(x)) {
        (Some(g), Some(h)) => (g, h),
        _ => return Err(Error::NotSmooth),
    };
    let norm = grad.norm();
    let n = &grad / norm;
    let p = Matrix::identity(x.len(), x.len()) - &n * n.transpose();
    Ok(-(&p * hess * &p) / norm)
}

/// `Q` at `x` in the default tangent frame.
///
/// Spheres and ellipsoids use their closed-form level functions; implicit
/// bodies the projected Hessian of theirs. Meshes are not smooth and are
/// refused.
pub fn second_fundamental_form(body: &ConvexBody, x: &Vector) -> Result<SecondFundamentalForm> {
    let normal = normal_at(body, x)?;
    let frame = tangent_frame(&normal);
    form_in_frame(body, x, normal, frame)
}

/// `Q` at `x` in a caller-supplied tangent frame (columns orthonormal and
/// orthogonal to the normal within `1e-9`).
pub fn second_fundamental_form_in(body: &ConvexBody, x: &Vector, frame: &Matrix) -> Result<SecondFundamentalForm> {
    let normal = normal_at(body, x)?;
    let n = x.len();
    if frame.shape() != (n, n - 1) {
        return Err(Error::DimensionMismatch { expected: n - 1, found: frame.ncols() });
    }
    let gram = frame.transpose() * frame - Matrix::identity(n - 1, n - 1);
    if gram.amax() > 1e-9 || (frame.transpose() * &normal).amax() > 1e-9 {
        return Err(Error::InvalidArgument("tangent frame must be orthonormal and orthogonal to the normal".into()));
    }
    form_in_frame(body, x, normal, frame.clone())
}

fn form_in_frame(body: &ConvexBody, x: &Vector, normal: Vector, frame: Matrix) -> Result<SecondFundamentalForm> {
    let w = shape_matrix(body, x)?;
    let q = frame.transpose() * w * &frame;
    SecondFundamentalForm::new(x.clone(), normal, frame, q)
}

/// Height `phi(z)` of the boundary above `x + z` along `normal`, found by
/// Newton's method on the level function.
pub fn graph_height(body: &ConvexBody, x: &Vector, normal: &Vector, z: &Vector) -> Result<f64> {
    let base = x + z;
    let scale = body.scale();
    let mut t = 0.0;
    for _ in 0..100 {
        let p = &base + normal * t;
        let (g, grad) = match (body.level(&p), body.level_gradient(&p)) {
            (Some(g), Some(d)) => (g, d),
            _ => return Err(Error::NotSmooth),
        };
        let slope = grad.dot(normal);
        if !(slope.abs() > 0.0) {
            return Err(Error::NoConvergence);
        }
        let step = g / slope;
        t -= step;
        if step.abs() <= 4.0 * f64::EPSILON * scale {
            return Ok(t);
        }
    }
    Err(Error::NoConvergence)
}

/// `Q` from central differences of the graph height with step
/// `h = FD_STEP * scale`, in the default tangent frame. Uses only level
/// values and gradients, so it is independent of the Hessian route.
pub fn finite_difference_form(body: &ConvexBody, x: &Vector) -> Result<SecondFundamentalForm> {
    let normal = normal_at(body, x)?;
    let frame = tangent_frame(&normal);
    let h = FD_STEP * body.scale();
    let m = x.len() - 1;
    let e: Vec<Vector> = (0..m).map(|i| frame.column(i).into_owned()).collect();
    let phi = |z: Vector| graph_height(body, x, &normal, &z);
    let center = phi(Vector::zeros(x.len()))?;
    let mut q = Matrix::zeros(m, m);
    for i in 0..m {
        let plus = phi(&e[i] * h)?;
        let minus = phi(&e[i] * -h)?;
        q[(i, i)] = (plus - 2.0 * center + minus) / (h * h);
        for j in 0..i {
            let pp = phi((&e[i] + &e[j]) * h)?;
            let pm = phi((&e[i] - &e[j]) * h)?;
            let mp = phi((&e[j] - &e[i]) * h)?;
            let mm = phi((&e[i] + &e[j]) * -h)?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    SecondFundamentalForm::new(x.clone(), normal, frame, q)
}

/// Eigenvalues of `Q`, ascending.
pub fn principal_curvatures(form: &SecondFundamentalForm) -> Vec<f64> {
    let mut eig: Vec<f64> = form.q.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Principal curvatures with their unit principal directions in ambient
/// coordinates, ascending by curvature.
pub fn principal_directions(form: &SecondFundamentalForm) -> Vec<(f64, Vector)> {
    let eig = form.q.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, Vector)> = (0..eig.eigenvalues.len())
        .map(|i| {
            let d = &form.frame * eig.eigenvectors.column(i);
            let norm = d.norm();
            (eig.eigenvalues[i], d / norm)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// `(max - min) / |max + min|` of a curvature list; zero at umbilic points.
pub fn umbilic_defect(curvatures: &[f64]) -> f64 {
    let (lo, hi) = curvatures.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    if curvatures.len() < 2 || hi - lo == 0.0 {
        return 0.0;
    }
    (hi - lo) / (hi + lo).abs()
}

/// `F(x, y) = |<n(x), y - x> <n(y), x - y>| / |y - x|^(n + 1)` from
/// precomputed unit normals.
pub fn kernel_from_normals(x: &Vector, nx: &Vector, y: &Vector, ny: &Vector) -> f64 {
    let d = y - x;
    let r = d.norm();
    (nx.dot(&d) * ny.dot(&d)).abs() / r.powi(x.len() as i32 + 1)
}

/// The kernel `F(x, y)` for boundary points at least
/// `KERNEL_GUARD * scale` apart.
pub fn kernel_f(body: &ConvexBody, x: &Vector, y: &Vector) -> Result<f64> {
    let nx = normal_at(body, x)?;
    let ny = normal_at(body, y)?;
    let distance = (y - x).norm();
    if distance < KERNEL_GUARD * body.scale() {
        return Err(Error::CoincidentPoints(distance));
    }
    Ok(kernel_from_normals(x, &nx, y, &ny))
}

/// One row of a local kernel scan.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AsymptoticRow {
    pub eps: f64,
    /// `|x - y|` for the boundary point `y` above `x + eps v`.
    pub distance: f64,
    pub kernel: f64,
    /// `1/4 <Q v, v>^2 eps^(3 - n)`.
    pub predicted: f64,
}

/// `F(x, y)` as `y` approaches `x` along a tangent direction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KernelAsymptotic {
    pub rows: Vec<AsymptoticRow>,
    /// `<Q v, v>`.
    pub normal_curvature: f64,
    /// `1/4 <Q v, v>^2`: the limit of `F eps^(n-3)`.
    pub limit: f64,
    /// Least-squares slope of `log F` against `log eps`; `3 - n` in the limit.
    pub log_log_slope: f64,
}

/// Geometric grid from `1e-1` down to `1e-3`, `points` values.
pub fn default_eps_grid(points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|i| 10f64.powf(-1.0 - 2.0 * i as f64 / (points - 1) as f64)).collect()
}

/// Scans `F(x, y)` with `y` the boundary point above `x + eps v` for each
/// `eps` of a decreasing grid. `v` must be a unit tangent vector at `x`.
pub fn kernel_local_asymptotic(body: &ConvexBody, x: &Vector, v: &Vector, eps_grid: &[f64]) -> Result<KernelAsymptotic> {
    let form = second_fundamental_form(body, x)?;
    let normal = form.normal().clone();
    dims_match(body, v)?;
    if (v.norm() - 1.0).abs() > 1e-9 || v.dot(&normal).abs() > 1e-9 {
        return Err(Error::InvalidArgument("direction must be a unit tangent vector".into()));
    }
    if eps_grid.len() < 2 || eps_grid.windows(2).any(|w| w[1] >= w[0]) || eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("eps grid must be positive and strictly decreasing".into()));
    }
    let n = x.len() as i32;
    let kv = form.quadratic(v);
    let limit = 0.25 * kv * kv;
    let guard = KERNEL_GUARD * body.scale();
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if eps < guard {
            return Err(Error::CoincidentPoints(eps));
        }
        let z = v * eps;
        let y = x + &z + &normal * graph_height(body, x, &normal, &z)?;
        let ny = body.outward_normal(&y);
        let distance = (&y - x).norm();
        rows.push(AsymptoticRow {
            eps,
            distance,
            kernel: kernel_from_normals(x, &normal, &y, &ny),
            predicted: limit * eps.powi(3 - n),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.kernel.ln()).collect();
    let fit = LinearFit::weighted(&xs, &ys, &alloc::vec![1.0; xs.len()]);
    Ok(KernelAsymptotic { rows, normal_curvature: kv, limit, log_log_slope: fit.slope })
}

/// Pass/fail limits of the sphere certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CertificateThresholds {
    pub kernel_cv: f64,
    pub umbilic_defect: f64,
}

impl Default for CertificateThresholds {
    fn default() -> Self {
        Self { kernel_cv: 0.01, umbilic_defect: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Verdict {
    SphereLike,
    NotSphere,
}

/// Numerical test of the two properties that characterize round spheres
/// among smooth convex bodies in `R^3`: a constant kernel `F` and
/// umbilic points everywhere.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SphereCertificate {
    pub kernel_mean: f64,
    /// Standard deviation over mean of `F` across sampled pairs.
    pub kernel_cv: f64,
    pub max_umbilic_defect: f64,
    pub verdict: Verdict,
    pub thresholds: CertificateThresholds,
    pub pairs: u64,
    pub points: u64,
    pub seed: u64,
}

#[derive(Default)]
struct DefectMax(f64);

/// Samples `pairs` uniform boundary pairs for the kernel statistic and
/// `points` uniform boundary points for the umbilic defect.
pub fn sphere_certificate<E: Executor + ?Sized>(
    exec: &E,
    body: &Arc<ConvexBody>,
    pairs: usize,
    points: usize,
    seed: u64,
    thresholds: CertificateThresholds,
) -> Result<SphereCertificate> {
    if body.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: body.dim() });
    }
    if !body.is_smooth() {
        return Err(Error::NotSmooth);
    }
    if pairs < 2 || points == 0 {
        return Err(Error::InvalidArgument("certificate needs at least two pairs and one point".into()));
    }
    let sampler = BoundarySampler::new(body.clone())?;
    let guard = KERNEL_GUARD * body.scale();
    let kernel = run_chunked(
        exec,
        pairs,
        seed,
        StreamFamily::PAIRS,
        |rng, len| {
            let mut acc = MeanAccumulator::default();
            while acc.count() < len as u64 {
                let (x, y) = (sampler.sample(rng)?, sampler.sample(rng)?);
                if (&x - &y).norm() < guard {
                    continue;
                }
                acc.push(kernel_from_normals(&x, &body.outward_normal(&x), &y, &body.outward_normal(&y)));
            }
            Ok(acc)
        },
        |acc, part| acc.merge(&part),
    )?;
    let defect = run_chunked(
        exec,
        points,
        seed,
        StreamFamily::POINTS,
        |rng, len| {
            let mut worst = DefectMax(0.0);
            for _ in 0..len {
                let x = sampler.sample(rng)?;
                let form = second_fundamental_form(body, &x)?;
                worst.0 = worst.0.max(umbilic_defect(&principal_curvatures(&form)));
            }
            Ok(worst)
        },
        |acc, part| acc.0 = acc.0.max(part.0),
    )?;
    let kernel_cv = kernel.std_dev() / kernel.mean();
    let verdict = if kernel_cv < thresholds.kernel_cv && defect.0 < thresholds.umbilic_defect {
        Verdict::SphereLike
    } else {
        Verdict::NotSphere
    };
    Ok(SphereCertificate {
        kernel_mean: kernel.mean(),
        kernel_cv,
        max_umbilic_defect: defect.0,
        verdict,
        thresholds,
        pairs: kernel.count(),
        points: points as u64,
        seed,
    })
}
