//! Concrete CAT(κ) spaces: distances, geodesics and comparison geometry.

mod center;
pub(crate) mod charts;
mod model;
mod projection;

use std::f64::consts::PI;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use charts::{hyperboloid, sphere, V3};

pub use center::{circumcenter, circumcenter_objective, weighted_frechet_mean};
pub use model::{comparison_angle, model_angle, model_third_side};
pub(crate) use projection::golden_section;
pub use projection::{metric_projection, ConvexSet};

/// Largest dimension / ray count / nesting accepted from descriptors.
pub const MAX_DIM: usize = 4096;
const MAX_DEPTH: usize = 8;
/// Relative tolerance for accepting chart coordinates from outside.
const CHART_TOL: f64 = 1e-9;

/// A geodesic metric space with unique geodesics (up to the sphere's cut locus).
pub trait MetricSpace {
    type Point: Clone + PartialEq + Debug;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;

    /// Point at fraction `t ∈ [0,1]` of the geodesic from `a` to `b`.
    fn geodesic_point(&self, a: &Self::Point, b: &Self::Point, t: f64) -> Result<Self::Point>;
}

/// Curvature upper bound κ together with the model diameter D_κ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureBound {
    pub kappa: f64,
    pub diameter: f64,
}

impl CurvatureBound {
    pub fn new(kappa: f64) -> Self {
        let diameter = if kappa > 0.0 {
            PI / kappa.sqrt()
        } else {
            f64::INFINITY
        };
        Self { kappa, diameter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub enum Space {
    Euclidean { dim: usize },
    Spider { rays: usize },
    Hyperbolic2,
    Sphere2 { kappa: f64 },
    Product { factors: Vec<Space> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SpaceRepr {
    Euclidean { dim: usize },
    Spider { rays: usize },
    Hyperbolic2,
    Sphere2 { kappa: f64 },
    Product { factors: Vec<Space> },
}

impl TryFrom<SpaceRepr> for Space {
    type Error = Error;

    fn try_from(r: SpaceRepr) -> Result<Self> {
        let s = match r {
            SpaceRepr::Euclidean { dim } => Space::Euclidean { dim },
            SpaceRepr::Spider { rays } => Space::Spider { rays },
            SpaceRepr::Hyperbolic2 => Space::Hyperbolic2,
            SpaceRepr::Sphere2 { kappa } => Space::Sphere2 { kappa },
            SpaceRepr::Product { factors } => Space::Product { factors },
        };
        s.validate()?;
        Ok(s)
    }
}

impl From<Space> for SpaceRepr {
    fn from(s: Space) -> Self {
        match s {
            Space::Euclidean { dim } => SpaceRepr::Euclidean { dim },
            Space::Spider { rays } => SpaceRepr::Spider { rays },
            Space::Hyperbolic2 => SpaceRepr::Hyperbolic2,
            Space::Sphere2 { kappa } => SpaceRepr::Sphere2 { kappa },
            Space::Product { factors } => SpaceRepr::Product { factors },
        }
    }
}

/// A point in chart coordinates. Spider points are `(ray, t)` with the
/// origin stored as `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PointRepr", into = "PointRepr")]
pub enum SpacePoint {
    Euclid(Vec<f64>),
    Spider { ray: usize, t: f64 },
    Hyperbolic(V3),
    Sphere(V3),
    Product(Vec<SpacePoint>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PointRepr {
    Euclid { x: Vec<f64> },
    Spider { ray: usize, t: f64 },
    Hyperbolic { h: V3 },
    Sphere { s: V3 },
    Product { factors: Vec<SpacePoint> },
}

impl From<PointRepr> for SpacePoint {
    fn from(r: PointRepr) -> Self {
        match r {
            PointRepr::Euclid { x } => SpacePoint::Euclid(x),
            PointRepr::Spider { ray, t } => SpacePoint::Spider { ray, t },
            PointRepr::Hyperbolic { h } => SpacePoint::Hyperbolic(h),
            PointRepr::Sphere { s } => SpacePoint::Sphere(s),
            PointRepr::Product { factors } => SpacePoint::Product(factors),
        }
    }
}

impl From<SpacePoint> for PointRepr {
    fn from(p: SpacePoint) -> Self {
        match p {
            SpacePoint::Euclid(x) => PointRepr::Euclid { x },
            SpacePoint::Spider { ray, t } => PointRepr::Spider { ray, t },
            SpacePoint::Hyperbolic(h) => PointRepr::Hyperbolic { h },
            SpacePoint::Sphere(s) => PointRepr::Sphere { s },
            SpacePoint::Product(factors) => PointRepr::Product { factors },
        }
    }
}

impl SpacePoint {
    /// Spider point with the origin canonicalized to ray 0.
    pub fn spider(ray: usize, t: f64) -> Self {
        if t <= 0.0 {
            SpacePoint::Spider { ray: 0, t: 0.0 }
        } else {
            SpacePoint::Spider { ray, t }
        }
    }

    pub fn spider_origin() -> Self {
        SpacePoint::Spider { ray: 0, t: 0.0 }
    }

    /// Hyperboloid point from its spatial coordinates.
    pub fn hyperbolic(x1: f64, x2: f64) -> Self {
        SpacePoint::Hyperbolic(hyperboloid::renormalize([0.0, x1, x2]))
    }

    pub fn euclid(coords: &[f64]) -> Self {
        SpacePoint::Euclid(coords.to_vec())
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidPoint(msg.into())
}

fn check_t(t: f64) -> Result<f64> {
    if !t.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&t) {
        return Err(Error::Unsupported(format!(
            "geodesic parameter {t} outside [0,1]"
        )));
    }
    Ok(t.clamp(0.0, 1.0))
}

impl Space {
    pub fn euclidean(dim: usize) -> Self {
        Space::Euclidean { dim }
    }

    pub fn spider(rays: usize) -> Self {
        Space::Spider { rays }
    }

    pub fn sphere(kappa: f64) -> Self {
        Space::Sphere2 { kappa }
    }

    pub fn product(factors: Vec<Space>) -> Self {
        Space::Product { factors }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_depth(0)
    }

    fn validate_depth(&self, depth: usize) -> Result<()> {
        match self {
            Space::Euclidean { dim } if *dim == 0 || *dim > MAX_DIM => Err(Error::InvalidSpace(
                format!("euclidean dim {dim} outside 1..={MAX_DIM}"),
            )),
            Space::Spider { rays } if *rays == 0 || *rays > MAX_DIM => Err(Error::InvalidSpace(
                format!("spider rays {rays} outside 1..={MAX_DIM}"),
            )),
            Space::Sphere2 { kappa } if !(kappa.is_finite() && *kappa > 0.0) => Err(
                Error::InvalidSpace(format!("sphere curvature {kappa} must be positive")),
            ),
            Space::Product { factors } => {
                if factors.is_empty() || factors.len() > MAX_DIM {
                    return Err(Error::InvalidSpace("product needs 1.. factors".into()));
                }
                if depth >= MAX_DEPTH {
                    return Err(Error::InvalidSpace("product nesting too deep".into()));
                }
                factors.iter().try_for_each(|f| f.validate_depth(depth + 1))
            }
            _ => Ok(()),
        }
    }

    pub fn curvature(&self) -> CurvatureBound {
        match self {
            Space::Sphere2 { kappa } => CurvatureBound::new(*kappa),
            Space::Product { factors } => {
                let k = factors
                    .iter()
                    .map(|f| f.curvature().kappa)
                    .fold(0.0_f64, f64::max);
                CurvatureBound::new(k)
            }
            _ => CurvatureBound::new(0.0),
        }
    }

    pub fn sphere_radius(kappa: f64) -> f64 {
        1.0 / kappa.sqrt()
    }

    /// A fixed reference point (origin, apex or north pole).
    pub fn base_point(&self) -> SpacePoint {
        match self {
            Space::Euclidean { dim } => SpacePoint::Euclid(vec![0.0; *dim]),
            Space::Spider { .. } => SpacePoint::spider_origin(),
            Space::Hyperbolic2 => SpacePoint::Hyperbolic([1.0, 0.0, 0.0]),
            Space::Sphere2 { kappa } => SpacePoint::Sphere([0.0, 0.0, Self::sphere_radius(*kappa)]),
            Space::Product { factors } => {
                SpacePoint::Product(factors.iter().map(Space::base_point).collect())
            }
        }
    }

    /// Checks chart constraints and returns the renormalized point.
    pub fn validate_point(&self, p: &SpacePoint) -> Result<SpacePoint> {
        match (self, p) {
            (Space::Euclidean { dim }, SpacePoint::Euclid(x)) => {
                if x.len() != *dim {
                    return Err(invalid(format!(
                        "expected {dim} coordinates, got {}",
                        x.len()
                    )));
                }
                if x.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("non-finite coordinate"));
                }
                Ok(p.clone())
            }
            (Space::Spider { rays }, SpacePoint::Spider { ray, t }) => {
                if !t.is_finite() || *t < 0.0 {
                    return Err(invalid(format!(
                        "spider distance {t} must be finite and >= 0"
                    )));
                }
                if *t == 0.0 {
                    return Ok(SpacePoint::spider_origin());
                }
                if *ray == 0 || ray > rays {
                    return Err(invalid(format!("ray {ray} outside 1..={rays}")));
                }
                Ok(p.clone())
            }
            (Space::Hyperbolic2, SpacePoint::Hyperbolic(x)) => {
                if x.iter().any(|c| !c.is_finite()) || x[0] <= 0.0 {
                    return Err(invalid(
                        "hyperboloid point needs finite coordinates and x0 > 0",
                    ));
                }
                let form = x[0] * x[0] - x[1] * x[1] - x[2] * x[2];
                if (form - 1.0).abs() > CHART_TOL * (1.0 + x[0] * x[0]) {
                    return Err(invalid(format!("x0^2 - x1^2 - x2^2 = {form}, expected 1")));
                }
                Ok(SpacePoint::Hyperbolic(hyperboloid::renormalize(*x)))
            }
            (Space::Sphere2 { kappa }, SpacePoint::Sphere(x)) => {
                let r = Self::sphere_radius(*kappa);
                if x.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("non-finite coordinate"));
                }
                let n = charts::norm(x);
                if (n - r).abs() > CHART_TOL * r {
                    return Err(invalid(format!("sphere point has norm {n}, expected {r}")));
                }
                Ok(SpacePoint::Sphere(sphere::renormalize(*x, r)))
            }
            (Space::Product { factors }, SpacePoint::Product(ps)) => {
                if ps.len() != factors.len() {
                    return Err(invalid(format!(
                        "expected {} factors, got {}",
                        factors.len(),
                        ps.len()
                    )));
                }
                let ps = factors
                    .iter()
                    .zip(ps)
                    .map(|(s, q)| s.validate_point(q))
                    .collect::<Result<_>>()?;
                Ok(SpacePoint::Product(ps))
            }
            _ => Err(invalid(format!("point kind does not match space {self:?}"))),
        }
    }

    /// RHS − LHS of the comparison inequality at the point γ_t of the geodesic
    /// from `b` to `c`, seen from `a`. Squared distances are compared; for κ > 0
    /// the RHS is the squared distance to the comparison point in M_κ.
    pub fn cat_defect(
        &self,
        a: &SpacePoint,
        b: &SpacePoint,
        c: &SpacePoint,
        t: f64,
    ) -> Result<f64> {
        let curv = self.curvature();
        let dab = self.distance(a, b);
        let dac = self.distance(a, c);
        let dbc = self.distance(b, c);
        if curv.kappa > 0.0 {
            let perimeter = dab + dac + dbc;
            if perimeter >= 2.0 * curv.diameter {
                return Err(Error::ComparisonUndefined {
                    perimeter,
                    limit: 2.0 * curv.diameter,
                });
            }
        }
        let g = self.geodesic_point(b, c, t)?;
        let lhs = self.distance(&g, a).powi(2);
        let rhs = if curv.kappa <= 0.0 {
            (1.0 - t) * dab * dab + t * dac * dac - t * (1.0 - t) * dbc * dbc
        } else if dbc == 0.0 || dab == 0.0 {
            // Degenerate comparison triangle: the comparison point is explicit.
            if dbc == 0.0 {
                dab * dab
            } else {
                (t * dbc).powi(2)
            }
        } else {
            let angle_b = model_angle(curv.kappa, dbc, dab, dac);
            model_third_side(curv.kappa, dab, t * dbc, angle_b).powi(2)
        };
        Ok(rhs - lhs)
    }

    /// Log map for the Riemannian kinds (and products of them): the initial
    /// velocity of the unit-time geodesic from `a` to `b`, in ambient
    /// coordinates except on the hyperbolic plane, which uses the
    /// orthonormal frame of `hyperboloid::frame`.
    pub(crate) fn riemannian_log(&self, a: &SpacePoint, b: &SpacePoint) -> Option<Vec<f64>> {
        match (self, a, b) {
            (Space::Euclidean { .. }, SpacePoint::Euclid(x), SpacePoint::Euclid(y)) => {
                Some(charts::sub(y, x))
            }
            (Space::Hyperbolic2, SpacePoint::Hyperbolic(x), SpacePoint::Hyperbolic(y)) => {
                Some(hyperboloid::to_frame(x, &hyperboloid::log(x, y)).to_vec())
            }
            (Space::Sphere2 { .. }, SpacePoint::Sphere(x), SpacePoint::Sphere(y)) => {
                Some(sphere::log(x, y).to_vec())
            }
            (Space::Product { factors }, SpacePoint::Product(xs), SpacePoint::Product(ys)) => {
                let mut out = Vec::new();
                for ((f, x), y) in factors.iter().zip(xs).zip(ys) {
                    out.extend(f.riemannian_log(x, y)?);
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// Length of the tangent vectors used by [`Self::riemannian_log`].
    pub(crate) fn ambient_dim(&self) -> usize {
        match self {
            Space::Euclidean { dim } => *dim,
            Space::Spider { .. } => 0,
            Space::Hyperbolic2 => 2,
            Space::Sphere2 { .. } => 3,
            Space::Product { factors } => factors.iter().map(Space::ambient_dim).sum(),
        }
    }

    /// Riemannian inner product of two tangent vectors at a common point.
    pub(crate) fn riemannian_inner(&self, v: &[f64], w: &[f64]) -> f64 {
        match self {
            Space::Product { factors } => {
                let mut off = 0;
                let mut acc = 0.0;
                for f in factors {
                    let n = f.ambient_dim();
                    acc += f.riemannian_inner(&v[off..off + n], &w[off..off + n]);
                    off += n;
                }
                acc
            }
            _ => charts::dot(v, w),
        }
    }

    pub(crate) fn riemannian_exp(&self, a: &SpacePoint, v: &[f64]) -> Option<SpacePoint> {
        match (self, a) {
            (Space::Euclidean { .. }, SpacePoint::Euclid(x)) => {
                Some(SpacePoint::Euclid(charts::axpy(1.0, v, x)))
            }
            (Space::Hyperbolic2, SpacePoint::Hyperbolic(x)) => {
                let v = hyperboloid::from_frame(x, v);
                Some(SpacePoint::Hyperbolic(hyperboloid::exp(x, &v)))
            }
            (Space::Sphere2 { kappa }, SpacePoint::Sphere(x)) => {
                let r = Self::sphere_radius(*kappa);
                let v = sphere::tangent_part(x, v, r);
                Some(SpacePoint::Sphere(sphere::exp(x, &v, r)))
            }
            (Space::Product { factors }, SpacePoint::Product(xs)) => {
                let mut off = 0;
                let mut out = Vec::with_capacity(xs.len());
                for (f, x) in factors.iter().zip(xs) {
                    let n = f.ambient_dim();
                    out.push(f.riemannian_exp(x, &v[off..off + n])?);
                    off += n;
                }
                Some(SpacePoint::Product(out))
            }
            _ => None,
        }
    }

    pub(crate) fn is_riemannian(&self) -> bool {
        match self {
            Space::Spider { .. } => false,
            Space::Product { factors } => factors.iter().all(Space::is_riemannian),
            _ => true,
        }
    }

    /// Column names for flattened chart coordinates (CSV export).
    pub fn coord_names(&self, prefix: &str) -> Vec<String> {
        match self {
            Space::Euclidean { dim } => (0..*dim).map(|i| format!("{prefix}x{i}")).collect(),
            Space::Spider { .. } => vec![format!("{prefix}ray"), format!("{prefix}t")],
            Space::Hyperbolic2 => (0..3).map(|i| format!("{prefix}h{i}")).collect(),
            Space::Sphere2 { .. } => (0..3).map(|i| format!("{prefix}s{i}")).collect(),
            Space::Product { factors } => factors
                .iter()
                .enumerate()
                .flat_map(|(i, f)| f.coord_names(&format!("{prefix}f{i}_")))
                .collect(),
        }
    }

    pub fn coord_len(&self) -> usize {
        match self {
            Space::Euclidean { dim } => *dim,
            Space::Spider { .. } => 2,
            Space::Hyperbolic2 | Space::Sphere2 { .. } => 3,
            Space::Product { factors } => factors.iter().map(Space::coord_len).sum(),
        }
    }

    pub fn point_coords(&self, p: &SpacePoint) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coord_len());
        push_coords(p, &mut out);
        out
    }

    /// Inverse of [`Self::point_coords`], validating the result.
    pub fn point_from_coords(&self, c: &[f64]) -> Result<SpacePoint> {
        if c.len() != self.coord_len() {
            return Err(invalid(format!(
                "expected {} coordinates, got {}",
                self.coord_len(),
                c.len()
            )));
        }
        let p = match self {
            Space::Euclidean { .. } => SpacePoint::Euclid(c.to_vec()),
            Space::Spider { .. } => {
                let ray = c[0];
                if !(ray >= 0.0 && ray.fract() == 0.0 && ray <= MAX_DIM as f64) {
                    return Err(invalid(format!("ray index {ray} is not a valid integer")));
                }
                SpacePoint::Spider {
                    ray: ray as usize,
                    t: c[1],
                }
            }
            Space::Hyperbolic2 => SpacePoint::Hyperbolic([c[0], c[1], c[2]]),
            Space::Sphere2 { .. } => SpacePoint::Sphere([c[0], c[1], c[2]]),
            Space::Product { factors } => {
                let mut off = 0;
                let mut ps = Vec::with_capacity(factors.len());
                for f in factors {
                    let n = f.coord_len();
                    ps.push(f.point_from_coords(&c[off..off + n])?);
                    off += n;
                }
                SpacePoint::Product(ps)
            }
        };
        self.validate_point(&p)
    }
}

fn push_coords(p: &SpacePoint, out: &mut Vec<f64>) {
    match p {
        SpacePoint::Euclid(x) => out.extend_from_slice(x),
        SpacePoint::Spider { ray, t } => out.extend_from_slice(&[*ray as f64, *t]),
        SpacePoint::Hyperbolic(x) | SpacePoint::Sphere(x) => out.extend_from_slice(x),
        SpacePoint::Product(ps) => ps.iter().for_each(|q| push_coords(q, out)),
    }
}

fn spider_same_branch(r1: usize, r2: usize) -> bool {
    r1 == r2 || r1 == 0 || r2 == 0
}

impl MetricSpace for Space {
    type Point = SpacePoint;

    fn distance(&self, a: &SpacePoint, b: &SpacePoint) -> f64 {
        match (self, a, b) {
            (Space::Euclidean { .. }, SpacePoint::Euclid(x), SpacePoint::Euclid(y)) => {
                charts::euclid_distance(x, y)
            }
            (
                Space::Spider { .. },
                SpacePoint::Spider { ray: r1, t: t1 },
                SpacePoint::Spider { ray: r2, t: t2 },
            ) => {
                if spider_same_branch(*r1, *r2) {
                    (t1 - t2).abs()
                } else {
                    t1 + t2
                }
            }
            (Space::Hyperbolic2, SpacePoint::Hyperbolic(x), SpacePoint::Hyperbolic(y)) => {
                hyperboloid::distance(x, y)
            }
            (Space::Sphere2 { kappa }, SpacePoint::Sphere(x), SpacePoint::Sphere(y)) => {
                Self::sphere_radius(*kappa) * sphere::angle(x, y)
            }
            (Space::Product { factors }, SpacePoint::Product(xs), SpacePoint::Product(ys)) => {
                factors
                    .iter()
                    .zip(xs.iter().zip(ys))
                    .map(|(f, (x, y))| f.distance(x, y).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
            _ => f64::NAN,
        }
    }

    fn geodesic_point(&self, a: &SpacePoint, b: &SpacePoint, t: f64) -> Result<SpacePoint> {
        let t = check_t(t)?;
        if a == b || t == 0.0 {
            return Ok(a.clone());
        }
        if t == 1.0 {
            return Ok(b.clone());
        }
        match (self, a, b) {
            (Space::Euclidean { .. }, SpacePoint::Euclid(x), SpacePoint::Euclid(y)) => {
                Ok(SpacePoint::Euclid(charts::lerp(x, y, t)))
            }
            (
                Space::Spider { .. },
                SpacePoint::Spider { ray: r1, t: t1 },
                SpacePoint::Spider { ray: r2, t: t2 },
            ) => {
                if spider_same_branch(*r1, *r2) {
                    let ray = (*r1).max(*r2);
                    Ok(SpacePoint::spider(ray, t1 + t * (t2 - t1)))
                } else {
                    let pos = t * (t1 + t2);
                    if pos <= *t1 {
                        Ok(SpacePoint::spider(*r1, t1 - pos))
                    } else {
                        Ok(SpacePoint::spider(*r2, pos - t1))
                    }
                }
            }
            (Space::Hyperbolic2, SpacePoint::Hyperbolic(x), SpacePoint::Hyperbolic(y)) => {
                let v = hyperboloid::log(x, y);
                Ok(SpacePoint::Hyperbolic(hyperboloid::exp(
                    x,
                    &v.map(|c| c * t),
                )))
            }
            (Space::Sphere2 { kappa }, SpacePoint::Sphere(x), SpacePoint::Sphere(y)) => {
                let r = Self::sphere_radius(*kappa);
                let theta = sphere::angle(x, y);
                if theta >= PI - 1e-9 {
                    return Err(Error::NonUniqueGeodesic {
                        distance: r * theta,
                        limit: r * PI,
                    });
                }
                let v = sphere::log(x, y);
                Ok(SpacePoint::Sphere(sphere::exp(x, &v.map(|c| c * t), r)))
            }
            (Space::Product { factors }, SpacePoint::Product(xs), SpacePoint::Product(ys)) => {
                let ps = factors
                    .iter()
                    .zip(xs.iter().zip(ys))
                    .map(|(f, (x, y))| f.geodesic_point(x, y, t))
                    .collect::<Result<_>>()?;
                Ok(SpacePoint::Product(ps))
            }
            _ => Err(invalid("point kind does not match space")),
        }
    }
}

/// RHS − LHS of the flat comparison inequality in any metric space; used for
/// spaces that are CAT(0) by construction (such as L²(Ω,Y)).
pub fn cat0_defect<S: MetricSpace>(
    space: &S,
    a: &S::Point,
    b: &S::Point,
    c: &S::Point,
    t: f64,
) -> Result<f64> {
    let g = space.geodesic_point(b, c, t)?;
    let dab = space.distance(a, b);
    let dac = space.distance(a, c);
    let dbc = space.distance(b, c);
    let lhs = space.distance(&g, a).powi(2);
    Ok((1.0 - t) * dab * dab + t * dac * dac - t * (1.0 - t) * dbc * dbc - lhs)
}
