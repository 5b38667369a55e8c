//! Metric projection onto closed convex sets.

use serde::{Deserialize, Serialize};

use super::{charts, MetricSpace, Space, SpacePoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    Ball {
        center: SpacePoint,
        radius: f64,
    },
    Segment {
        a: SpacePoint,
        b: SpacePoint,
    },
    /// Closed ray `index` of a spider, origin included.
    Ray {
        index: usize,
    },
    Product {
        factors: Vec<ConvexSet>,
    },
}

/// Nearest point of `set` to `y`.
pub fn metric_projection(space: &Space, set: &ConvexSet, y: &SpacePoint) -> Result<SpacePoint> {
    match set {
        ConvexSet::Ball { center, radius } => {
            if !(radius.is_finite() && *radius >= 0.0) {
                return Err(Error::Unsupported(format!("ball radius {radius}")));
            }
            if *radius >= space.curvature().diameter / 2.0 {
                return Err(Error::Unsupported("ball radius must stay below D/2".into()));
            }
            let d = space.distance(center, y);
            if d <= *radius {
                Ok(y.clone())
            } else {
                // Any point of the ball is at least d − r from y by the
                // triangle inequality, and this point attains it.
                space.geodesic_point(center, y, radius / d)
            }
        }
        ConvexSet::Segment { a, b } => {
            let s = segment_parameter(space, a, b, y)?;
            let p = space.geodesic_point(a, b, s)?;
            // With κ > 0 the distance to y can peak inside the arc, leaving
            // the minimum at an endpoint.
            Ok([a, b].into_iter().fold(p, |best, q| {
                if space.distance(y, q) < space.distance(y, &best) {
                    q.clone()
                } else {
                    best
                }
            }))
        }
        ConvexSet::Ray { index } => match (space, y) {
            (Space::Spider { rays }, SpacePoint::Spider { ray, .. }) => {
                if *index == 0 || index > rays {
                    return Err(Error::Unsupported(format!(
                        "ray {index} outside 1..={rays}"
                    )));
                }
                if ray == index || *ray == 0 {
                    Ok(y.clone())
                } else {
                    Ok(SpacePoint::spider_origin())
                }
            }
            _ => Err(Error::Unsupported("ray sets exist only in spiders".into())),
        },
        ConvexSet::Product { factors } => match (space, y) {
            (Space::Product { factors: spaces }, SpacePoint::Product(ys))
                if spaces.len() == factors.len() =>
            {
                let ps = spaces
                    .iter()
                    .zip(factors)
                    .zip(ys)
                    .map(|((s, c), q)| metric_projection(s, c, q))
                    .collect::<Result<_>>()?;
                Ok(SpacePoint::Product(ps))
            }
            _ => Err(Error::Unsupported(
                "product set needs a product space of equal arity".into(),
            )),
        },
    }
}

/// Parameter of the nearest point to `y` on the geodesic from `a` to `b`.
fn segment_parameter(space: &Space, a: &SpacePoint, b: &SpacePoint, y: &SpacePoint) -> Result<f64> {
    let dab = space.distance(a, b);
    if dab == 0.0 {
        return Ok(0.0);
    }
    match (space, a, b, y) {
        (
            Space::Euclidean { .. },
            SpacePoint::Euclid(pa),
            SpacePoint::Euclid(pb),
            SpacePoint::Euclid(py),
        ) => {
            let ab = charts::sub(pb, pa);
            let ay = charts::sub(py, pa);
            Ok((charts::dot(&ab, &ay) / charts::dot(&ab, &ab)).clamp(0.0, 1.0))
        }
        // In an R-tree the path from y joins [a,b] at the Gromov median.
        (Space::Spider { .. }, ..) => {
            let day = space.distance(a, y);
            let dby = space.distance(b, y);
            Ok(((dab + day - dby) / (2.0 * dab)).clamp(0.0, 1.0))
        }
        _ if space.is_riemannian() => {
            // Bisection on the sign of the derivative of d²(y, γ_s).
            let descends = |s: f64| -> Result<bool> {
                let g = space.geodesic_point(a, b, s)?;
                let to_y = space.riemannian_log(&g, y).unwrap_or_default();
                let along = space.riemannian_log(&g, b).unwrap_or_default();
                if s >= 1.0 || along.iter().all(|c| *c == 0.0) {
                    let back = space.riemannian_log(&g, a).unwrap_or_default();
                    return Ok(space.riemannian_inner(&to_y, &back) < 0.0);
                }
                Ok(space.riemannian_inner(&to_y, &along) > 0.0)
            };
            if !descends(0.0)? {
                return Ok(0.0);
            }
            if descends(1.0)? {
                return Ok(1.0);
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if descends(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
        _ => {
            // Mixed products: d²(y, γ_s) is convex in s.
            let f = |s: f64| -> Result<f64> {
                Ok(space.distance(y, &space.geodesic_point(a, b, s)?).powi(2))
            };
            golden_section(f, 0.0, 1.0, 1e-12)
        }
    }
}

/// Minimizer of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (a0, b0) = (lo, hi);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let mut arg = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    // Endpoints are never interior samples; compare them explicitly.
    if f_lo < arg.1 {
        arg = (a0, f_lo);
    }
    if f_hi < arg.1 {
        arg = (b0, f_hi);
    }
    Ok(arg.0)
}
