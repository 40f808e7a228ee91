//! Body and patch descriptors: a compact string grammar for the command
//! line and an equivalent JSON form for configuration files.
//!
//! Bodies:
//!
//! | string | body |
//! |---|---|
//! | `sphere` | unit sphere in `R^dim` |
//! | `sphere:c1,...,cn,r` | sphere with center `c` and radius `r` |
//! | `ellipsoid:a1,...,an` | axis-aligned ellipsoid |
//! | `powersum:p:a1,...,an` | `sum |x_i / a_i|^p <= 1`, `p >= 2` |
//! | `cube` | surface of `[-1/2, 1/2]^3` |
//! | `icosphere:levels` | subdivided icosahedron inscribed in the unit sphere |
//! | `mesh:path` | OFF or OBJ triangle mesh |
//!
//! Patches (axes default to the last coordinate axis):
//!
//! | string | region |
//! |---|---|
//! | `whole` | the whole boundary |
//! | `cap:t` / `cap:t:a1,...,an` | `<x, a> >= t` |
//! | `halfspace:b:v1,...,vn` | `<x, v> >= b` |
//! | `latlon:lat0,lat1,lon0,width` | latitude/longitude box on `S^2`, radians |
//! | `complement:<patch>` | complement of another patch |
//!
//! Either kind may also be given as a JSON object, e.g.
//! `{"kind":"ellipsoid","semi_axes":[1,1,1.5]}`.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use croftonkit_core::geom::{basis, ImplicitConvex, PowerSum, Region, SurfacePatch, TriangleMesh, Vector};
use croftonkit_core::ConvexBody;

use crate::error::{CliError, CliResult};
use crate::mesh_io::{load_mesh, LoadedMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BodySpec {
    Sphere {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
    Ellipsoid { semi_axes: Vec<f64> },
    PowerSum { exponent: f64, semi_axes: Vec<f64> },
    Cube {},
    Icosphere { levels: u32 },
    Mesh { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionSpec {
    Whole,
    Cap {
        height: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axis: Option<Vec<f64>>,
    },
    HalfSpace { offset: f64, normal: Vec<f64> },
    LatLon { lat_min: f64, lat_max: f64, lon_start: f64, lon_width: f64 },
    Complement { of: Box<RegionSpec> },
}

fn numbers(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::usage(format!("invalid number `{t}` in {what}"))))
        .collect()
}

fn json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::usage(format!("malformed {what} JSON: {e}")))
}

impl BodySpec {
    pub fn parse(text: &str) -> CliResult<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return json(text, "body");
        }
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let bad = || CliError::usage(format!("malformed body descriptor `{text}`"));
        match (kind, rest) {
            ("sphere", "") => Ok(Self::Sphere { center: None, radius: None }),
            ("sphere", args) => {
                let mut v = numbers(args, "sphere")?;
                let radius = v.pop().filter(|_| !v.is_empty()).ok_or_else(bad)?;
                Ok(Self::Sphere { center: Some(v), radius: Some(radius) })
            }
            ("ellipsoid", args) if !args.is_empty() => Ok(Self::Ellipsoid { semi_axes: numbers(args, "ellipsoid")? }),
            ("powersum", args) => {
                let (p, axes) = args.split_once(':').ok_or_else(bad)?;
                let exponent = p.trim().parse().map_err(|_| bad())?;
                Ok(Self::PowerSum { exponent, semi_axes: numbers(axes, "powersum")? })
            }
            ("cube", "") => Ok(Self::Cube {}),
            ("icosphere", levels) => Ok(Self::Icosphere { levels: levels.parse().map_err(|_| bad())? }),
            ("mesh", path) if !path.is_empty() => Ok(Self::Mesh { path: path.into() }),
            _ => Err(bad()),
        }
    }

    /// Dimension implied by the descriptor itself, if any.
    pub fn implied_dim(&self) -> Option<usize> {
        match self {
            Self::Sphere { center, .. } => center.as_ref().map(Vec::len),
            Self::Ellipsoid { semi_axes } | Self::PowerSum { semi_axes, .. } => Some(semi_axes.len()),
            Self::Cube {} | Self::Icosphere { .. } | Self::Mesh { .. } => Some(3),
        }
    }

    pub fn is_mesh(&self) -> bool {
        matches!(self, Self::Cube {} | Self::Icosphere { .. } | Self::Mesh { .. })
    }
}

/// A constructed body with its provenance.
#[derive(Debug, Clone)]
pub struct BuiltBody {
    pub body: Arc<ConvexBody>,
    /// Present for mesh bodies.
    pub mesh: Option<LoadedMesh>,
    /// SHA-256 of the canonical descriptor JSON, followed by the mesh file
    /// bytes for file meshes.
    pub hash: String,
}

impl BuiltBody {
    pub fn warnings(&self) -> &[String] {
        self.mesh.as_ref().map_or(&[], |m| &m.warnings)
    }

    /// Fails for open or non-manifold meshes, whose chords are undefined.
    pub fn require_closed(&self) -> CliResult<()> {
        match &self.mesh {
            Some(m) if !m.is_closed() => Err(CliError::Runtime(
                "chord estimators need a closed manifold mesh; this mesh is open or non-manifold".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Builds the body, reading mesh files from disk.
pub fn build_body(spec: &BodySpec, dim: usize) -> CliResult<BuiltBody> {
    let usage = |e: croftonkit_core::Error| CliError::usage(format!("invalid body: {e}"));
    if let Some(d) = spec.implied_dim() {
        if d != dim {
            return Err(CliError::usage(format!("body is {d}-dimensional but --dim is {dim}")));
        }
    }
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(spec).expect("descriptor serializes"));
    let mut mesh = None;
    let body = match spec {
        BodySpec::Sphere { center: None, radius: None } => ConvexBody::unit_sphere(dim).map_err(usage)?,
        BodySpec::Sphere { center, radius } => {
            let c = center.clone().unwrap_or_else(|| vec![0.0; dim]);
            ConvexBody::sphere(Vector::from_vec(c), radius.unwrap_or(1.0)).map_err(usage)?
        }
        BodySpec::Ellipsoid { semi_axes } => ConvexBody::ellipsoid(Vector::from_column_slice(semi_axes)).map_err(usage)?,
        BodySpec::PowerSum { exponent, semi_axes } => {
            let level = PowerSum::new(*exponent, Vector::from_column_slice(semi_axes)).map_err(usage)?;
            let radius = level.bounding_radius();
            ConvexBody::implicit(ImplicitConvex::new(Arc::new(level), radius).map_err(usage)?)
        }
        BodySpec::Cube {} | BodySpec::Icosphere { .. } | BodySpec::Mesh { .. } => {
            let loaded = match spec {
                BodySpec::Cube {} => LoadedMesh::from_mesh(TriangleMesh::unit_cube()),
                BodySpec::Icosphere { levels } if *levels <= 7 => LoadedMesh::from_mesh(TriangleMesh::icosphere(*levels)),
                BodySpec::Icosphere { .. } => return Err(CliError::usage("icosphere levels must be at most 7")),
                BodySpec::Mesh { path } => {
                    let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
                    hasher.update(&bytes);
                    load_mesh(path)?
                }
                _ => unreachable!(),
            };
            let body = ConvexBody::mesh(loaded.mesh.clone());
            mesh = Some(loaded);
            body
        }
    };
    let hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(BuiltBody { body: Arc::new(body), mesh, hash })
}

impl RegionSpec {
    pub fn parse(text: &str) -> CliResult<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return json(text, "patch");
        }
        if let Some(inner) = text.strip_prefix("complement:") {
            return Ok(Self::Complement { of: Box::new(Self::parse(inner)?) });
        }
        let bad = || CliError::usage(format!("malformed patch descriptor `{text}`"));
        let mut parts = text.splitn(3, ':');
        let kind = parts.next().unwrap_or("");
        let (a, b) = (parts.next(), parts.next());
        let scalar = |s: Option<&str>| s.and_then(|s| s.trim().parse::<f64>().ok()).ok_or_else(bad);
        match kind {
            "whole" if a.is_none() => Ok(Self::Whole),
            "cap" => Ok(Self::Cap { height: scalar(a)?, axis: b.map(|b| numbers(b, "cap axis")).transpose()? }),
            "halfspace" => Ok(Self::HalfSpace { offset: scalar(a)?, normal: numbers(b.ok_or_else(bad)?, "half-space normal")? }),
            "latlon" if b.is_none() => match numbers(a.ok_or_else(bad)?, "latlon")?[..] {
                [lat_min, lat_max, lon_start, lon_width] => Ok(Self::LatLon { lat_min, lat_max, lon_start, lon_width }),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }

    pub fn to_region(&self, dim: usize) -> CliResult<Region> {
        let usage = |e: croftonkit_core::Error| CliError::usage(format!("invalid patch: {e}"));
        let vector = |v: &[f64]| -> CliResult<Vector> {
            if v.len() != dim {
                return Err(CliError::usage(format!("patch vector has {} components, expected {dim}", v.len())));
            }
            Ok(Vector::from_column_slice(v))
        };
        Ok(match self {
            Self::Whole => Region::Whole,
            Self::Cap { height, axis } => {
                let axis = match axis {
                    Some(a) => vector(a)?,
                    None => basis(dim, dim - 1),
                };
                Region::cap(axis, *height).map_err(usage)?
            }
            Self::HalfSpace { offset, normal } => Region::half_space(vector(normal)?, *offset).map_err(usage)?,
            Self::LatLon { lat_min, lat_max, lon_start, lon_width } => {
                Region::lat_lon_box(*lat_min, *lat_max, *lon_start, *lon_width).map_err(usage)?
            }
            Self::Complement { of } => of.to_region(dim)?.complement(),
        })
    }
}

pub fn build_patch(body: &Arc<ConvexBody>, spec: &RegionSpec) -> CliResult<SurfacePatch> {
    SurfacePatch::new(body.clone(), spec.to_region(body.dim())?)
        .map_err(|e| CliError::usage(format!("invalid patch: {e}")))
}
