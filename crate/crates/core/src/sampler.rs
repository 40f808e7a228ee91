//! Reproducible random streams, uniform points on spheres, balls and
//! boundaries, and lines drawn from the kinematic measure.

use alloc::boxed::Box;
use alloc::sync::Arc;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geom::{ConvexBody, DirectedLine, Region, SurfacePatch, TriangleMesh, Vector};
use crate::intersect::{intersect, HitRecord};
use crate::{Error, Result};

/// A ChaCha8 substream keyed by `(seed, stream_id)`.
///
/// Each `(seed, stream_id)` pair yields a fixed sequence; different stream
/// ids select non-overlapping ChaCha streams.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Uniform point on `S^(n-1)` (normalized Gaussian).
pub fn uniform_sphere_point(n: usize, rng: &mut RandomStream) -> Vector {
    assert!(n >= 1, "sphere dimension must be positive");
    loop {
        let g = Vector::from_fn(n, |_, _| rng.normal());
        let norm = g.norm();
        if norm > 1e-150 {
            return g / norm;
        }
    }
}

/// Uniform point in the closed unit ball `B^m`.
pub fn uniform_ball_point(m: usize, rng: &mut RandomStream) -> Vector {
    let direction = uniform_sphere_point(m, rng);
    let radius = rng.uniform().powf(1.0 / m as f64);
    direction * radius
}

/// Entry and exit points of a line through a body.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordSample {
    pub line: DirectedLine,
    /// First crossing `X`.
    pub entry: Vector,
    /// Second crossing `Y`.
    pub exit: Vector,
}

impl ChordSample {
    pub fn length(&self) -> f64 {
        (&self.exit - &self.entry).norm()
    }
}

/// Proposal and acceptance counters of a line sampler.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SamplerStats {
    pub proposals: u64,
    pub accepted: u64,
    /// Accepted lines that crossed a mesh more than twice.
    pub excess_crossings: u64,
}

impl SamplerStats {
    pub fn merge(&mut self, other: &Self) {
        self.proposals += other.proposals;
        self.accepted += other.accepted;
        self.excess_crossings += other.excess_crossings;
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Lines from the kinematic measure conditioned to cross a body.
///
/// Directions are uniform on the sphere, offsets uniform on the disc of
/// the bounding ball orthogonal to the direction; proposals that miss the
/// body or touch it tangentially are rejected. Translation invariance of
/// the measure within each orthogonal hyperplane makes the accepted lines
/// exactly the kinematic measure restricted to lines meeting the body.
#[derive(Debug, Clone)]
pub struct KinematicLineSampler {
    body: Arc<ConvexBody>,
    center: Vector,
    bounding_radius: f64,
    max_consecutive_misses: u64,
    stats: SamplerStats,
}

impl KinematicLineSampler {
    pub const DEFAULT_MISS_CAP: u64 = 1_000_000;

    /// Uses the body's own bounding ball.
    pub fn new(body: Arc<ConvexBody>) -> Self {
        let (center, bounding_radius) = body.bounding_ball();
        Self { body, center, bounding_radius, max_consecutive_misses: Self::DEFAULT_MISS_CAP, stats: SamplerStats::default() }
    }

    /// Proposal ball of a chosen radius about the body's bounding centre.
    pub fn with_radius(body: Arc<ConvexBody>, radius: f64) -> Self {
        let mut sampler = Self::new(body);
        sampler.bounding_radius = radius;
        sampler
    }

    pub fn with_miss_cap(mut self, cap: u64) -> Self {
        self.max_consecutive_misses = cap.max(1);
        self
    }

    pub fn body(&self) -> &Arc<ConvexBody> {
        &self.body
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn stats(&self) -> SamplerStats {
        self.stats
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.stats.acceptance_rate()
    }

    /// One unconditioned proposal from the lines meeting the bounding ball.
    pub fn propose(&self, rng: &mut RandomStream) -> DirectedLine {
        let n = self.center.len();
        let u = uniform_sphere_point(n, rng);
        let offset = loop {
            let g = Vector::from_fn(n, |_, _| rng.normal());
            let w = &g - &u * g.dot(&u);
            let norm = w.norm();
            if norm > 1e-150 {
                break w / norm;
            }
        };
        let radius = self.bounding_radius * rng.uniform().powf(1.0 / (n - 1) as f64);
        DirectedLine::canonical(&self.center + offset * radius, u)
    }

    /// Draws proposals until one crosses the body transversally.
    pub fn sample_line(&mut self, rng: &mut RandomStream) -> Result<(DirectedLine, HitRecord)> {
        let mut misses = 0u64;
        loop {
            let line = self.propose(rng);
            self.stats.proposals += 1;
            let record = intersect(&self.body, &line)?;
            if !record.is_degenerate() && record.len() >= 2 {
                self.stats.accepted += 1;
                if record.len() > 2 {
                    self.stats.excess_crossings += 1;
                }
                return Ok((line, record));
            }
            misses += 1;
            if misses >= self.max_consecutive_misses {
                return Err(Error::ProposalCapExceeded(misses));
            }
        }
    }

    pub fn sample_kinematic_line(&mut self, rng: &mut RandomStream) -> Result<DirectedLine> {
        self.sample_line(rng).map(|(line, _)| line)
    }

    pub fn sample_chord(&mut self, rng: &mut RandomStream) -> Result<ChordSample> {
        let (line, record) = self.sample_line(rng)?;
        let (entry, exit) = record.entry_exit().expect("accepted lines cross twice");
        Ok(ChordSample { entry: entry.clone(), exit: exit.clone(), line })
    }
}

#[derive(Debug, Clone)]
enum Plan {
    Sphere(usize),
    /// Accept with probability `|s / a| * min(a)`.
    Ellipsoid { semi_axes: Vector, min_axis: f64 },
    /// Radial projection with an estimated weight envelope.
    Radial { envelope: f64 },
    Mesh,
    Transformed(Box<Plan>),
}

/// Uniform points on a body's boundary (normalized surface measure).
///
/// Spheres are sampled directly and meshes by area-weighted face choice.
/// Ellipsoids map a uniform sphere point through the axis scaling and keep
/// it with probability proportional to the area Jacobian. Implicit bodies
/// use the radial projection from the origin with weight
/// `r^(n-1) / <n, s>`, bounded by an envelope measured on a fixed pilot
/// set and padded by half; a draw above the envelope is an error.
#[derive(Debug, Clone)]
pub struct BoundarySampler {
    body: Arc<ConvexBody>,
    plan: Plan,
}

impl BoundarySampler {
    const PILOT: usize = 4096;

    pub fn new(body: Arc<ConvexBody>) -> Result<Self> {
        let plan = Self::plan(&body)?;
        Ok(Self { body, plan })
    }

    fn plan(body: &ConvexBody) -> Result<Plan> {
        Ok(match body {
            ConvexBody::UnitSphere { dim } => Plan::Sphere(*dim),
            ConvexBody::Ellipsoid { semi_axes } => Plan::Ellipsoid { semi_axes: semi_axes.clone(), min_axis: semi_axes.min() },
            ConvexBody::Mesh(m) => {
                if m.total_area() <= 0.0 {
                    return Err(Error::InvalidBody("mesh has zero area".into()));
                }
                Plan::Mesh
            }
            ConvexBody::Implicit(_) => {
                let mut rng = RandomStream::new(0x5eed_0f5a_3b1e, u64::MAX);
                let mut envelope: f64 = 0.0;
                for _ in 0..Self::PILOT {
                    let s = uniform_sphere_point(body.dim(), &mut rng);
                    envelope = envelope.max(radial_point(body, &s)?.1);
                }
                Plan::Radial { envelope: 1.5 * envelope }
            }
            ConvexBody::Transformed { base, .. } => Plan::Transformed(Box::new(Self::plan(base)?)),
        })
    }

    pub fn body(&self) -> &Arc<ConvexBody> {
        &self.body
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<Vector> {
        sample_with(&self.body, &self.plan, rng)
    }
}

fn sample_with(body: &ConvexBody, plan: &Plan, rng: &mut RandomStream) -> Result<Vector> {
    match (plan, body) {
        (Plan::Sphere(n), _) => Ok(uniform_sphere_point(*n, rng)),
        (Plan::Ellipsoid { semi_axes, min_axis }, _) => loop {
            let s = uniform_sphere_point(semi_axes.len(), rng);
            let accept = s.component_div(semi_axes).norm() * min_axis;
            if rng.uniform() < accept {
                return Ok(s.component_mul(semi_axes));
            }
        },
        (Plan::Radial { envelope }, _) => loop {
            let s = uniform_sphere_point(body.dim(), rng);
            let (x, weight) = radial_point(body, &s)?;
            if weight > *envelope {
                return Err(Error::EnvelopeExceeded { weight, bound: *envelope });
            }
            if rng.uniform() * envelope < weight {
                return Ok(x);
            }
        },
        (Plan::Mesh, ConvexBody::Mesh(mesh)) => Ok(mesh_point(mesh, rng)),
        (Plan::Transformed(inner), ConvexBody::Transformed { base, motion }) => {
            Ok(motion.apply(&sample_with(base, inner, rng)?))
        }
        _ => unreachable!("sampling plan built for a different body"),
    }
}

/// Boundary point along direction `s` from the origin and its area weight.
fn radial_point(body: &ConvexBody, s: &Vector) -> Result<(Vector, f64)> {
    let radius = body.scale();
    let g = |r: f64| body.level(&(s * r)).expect("smooth body");
    let (mut lo, mut hi) = (0.0, radius);
    if g(hi) < 0.0 {
        return Err(Error::InvalidBody("boundary extends past the bounding radius".into()));
    }
    while hi - lo > 1e-15 * radius {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let x = s * r;
    let normal = body.level_gradient(&x).expect("smooth body").normalize();
    let cosine = normal.dot(s);
    Ok((x, r.powi(body.dim() as i32 - 1) / cosine))
}

fn mesh_point(mesh: &TriangleMesh, rng: &mut RandomStream) -> Vector {
    let face = mesh.face_at_quantile(rng.uniform());
    let [a, b, c] = mesh.face_vertices(face);
    let r1 = rng.uniform().sqrt();
    let r2 = rng.uniform();
    let p = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
    Vector::from_column_slice(p.as_slice())
}

/// Uniform points on a patch by rejection from the whole boundary.
#[derive(Debug, Clone)]
pub struct PatchSampler {
    boundary: BoundarySampler,
    region: Region,
    max_rejections: u64,
}

impl PatchSampler {
    /// Consecutive rejections tolerated before the patch is declared too
    /// small; a patch of measure `1e-6` exhausts it with probability `e^-10`.
    pub const DEFAULT_REJECTION_BUDGET: u64 = 10_000_000;

    pub fn new(patch: &SurfacePatch) -> Result<Self> {
        Ok(Self {
            boundary: BoundarySampler::new(patch.body_arc().clone())?,
            region: patch.region().clone(),
            max_rejections: Self::DEFAULT_REJECTION_BUDGET,
        })
    }

    pub fn with_rejection_budget(mut self, budget: u64) -> Self {
        self.max_rejections = budget.max(1);
        self
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<Vector> {
        for _ in 0..self.max_rejections {
            let x = self.boundary.sample(rng)?;
            if self.region.contains(&x) {
                return Ok(x);
            }
        }
        Err(Error::PatchTooSmall(self.max_rejections))
    }
}

/// One uniform point on a patch. Builds a fresh [`PatchSampler`]; reuse
/// one directly when drawing many points.
pub fn uniform_patch_point(patch: &SurfacePatch, rng: &mut RandomStream) -> Result<Vector> {
    PatchSampler::new(patch)?.sample(rng)
}
