//! Built-in distance functionals on the concrete spaces.

use serde::{Deserialize, Serialize};

use super::Functional;
use crate::error::{Error, Result};
use crate::harness::gen::candidates_near;
use crate::spaces::{MetricSpace, Space, SpacePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinKind {
    /// ½d²(·, z), 1-convex.
    HalfSquaredDistance { z: SpacePoint },
    /// d(·, z), convex.
    DistanceTo { z: SpacePoint },
    /// Σ d(·, p_i), convex.
    SumOfDistances { points: Vec<SpacePoint> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Builtin {
    space: Space,
    kind: BuiltinKind,
}

impl Builtin {
    pub fn new(space: Space, kind: BuiltinKind) -> Result<Self> {
        space.validate()?;
        if space.curvature().kappa > 0.0 {
            return Err(Error::Unsupported(
                "built-in functionals need a curvature bound κ ≤ 0 for their convexity modulus"
                    .into(),
            ));
        }
        let kind = match kind {
            BuiltinKind::HalfSquaredDistance { z } => BuiltinKind::HalfSquaredDistance {
                z: space.validate_point(&z)?,
            },
            BuiltinKind::DistanceTo { z } => BuiltinKind::DistanceTo {
                z: space.validate_point(&z)?,
            },
            BuiltinKind::SumOfDistances { points } => {
                if points.is_empty() {
                    return Err(Error::Empty("sum_of_distances needs at least one point"));
                }
                BuiltinKind::SumOfDistances {
                    points: points
                        .iter()
                        .map(|p| space.validate_point(p))
                        .collect::<Result<_>>()?,
                }
            }
        };
        Ok(Self { space, kind })
    }

    pub fn half_squared_distance(space: Space, z: SpacePoint) -> Result<Self> {
        Self::new(space, BuiltinKind::HalfSquaredDistance { z })
    }

    pub fn distance_to(space: Space, z: SpacePoint) -> Result<Self> {
        Self::new(space, BuiltinKind::DistanceTo { z })
    }

    pub fn sum_of_distances(space: Space, points: Vec<SpacePoint>) -> Result<Self> {
        Self::new(space, BuiltinKind::SumOfDistances { points })
    }

    pub fn kind(&self) -> &BuiltinKind {
        &self.kind
    }

    fn anchors(&self) -> &[SpacePoint] {
        match &self.kind {
            BuiltinKind::HalfSquaredDistance { z } | BuiltinKind::DistanceTo { z } => {
                std::slice::from_ref(z)
            }
            BuiltinKind::SumOfDistances { points } => points,
        }
    }
}

impl Functional for Builtin {
    type Space = Space;

    fn space(&self) -> &Space {
        &self.space
    }

    fn eval(&self, y: &SpacePoint) -> f64 {
        match &self.kind {
            BuiltinKind::HalfSquaredDistance { z } => 0.5 * self.space.distance(y, z).powi(2),
            BuiltinKind::DistanceTo { z } => self.space.distance(y, z),
            BuiltinKind::SumOfDistances { points } => {
                points.iter().map(|p| self.space.distance(y, p)).sum()
            }
        }
    }

    fn lambda(&self) -> f64 {
        match self.kind {
            BuiltinKind::HalfSquaredDistance { .. } => 1.0,
            _ => 0.0,
        }
    }

    fn exact_prox(&self, tau: f64, y: &SpacePoint) -> Option<Result<SpacePoint>> {
        match &self.kind {
            // The minimizer lies on [y, z] and solves a 1-D quadratic there.
            BuiltinKind::HalfSquaredDistance { z } => {
                Some(self.space.geodesic_point(y, z, tau / (1.0 + tau)))
            }
            BuiltinKind::DistanceTo { z } => {
                let d = self.space.distance(y, z);
                Some(if d <= tau {
                    Ok(z.clone())
                } else {
                    self.space.geodesic_point(y, z, tau / d)
                })
            }
            BuiltinKind::SumOfDistances { points } => match self.space {
                Space::Spider { rays } => Some(Ok(spider_sum_prox(rays, points, tau, y))),
                _ => Some(weiszfeld_prox(&self.space, points, tau, y)),
            },
        }
    }

    fn slope_closed_form(&self, y: &SpacePoint) -> Option<f64> {
        match &self.kind {
            BuiltinKind::HalfSquaredDistance { z } => Some(self.space.distance(y, z)),
            // At z the global formula gives 0.
            BuiltinKind::DistanceTo { z } => Some(if self.space.distance(y, z) > 0.0 {
                1.0
            } else {
                0.0
            }),
            BuiltinKind::SumOfDistances { .. } => None,
        }
    }

    fn candidates(&self, y: &SpacePoint, count: usize, seed: u64) -> Vec<SpacePoint> {
        candidates_near(&self.space, y, self.anchors(), count, seed)
    }

    fn name(&self) -> String {
        match self.kind {
            BuiltinKind::HalfSquaredDistance { .. } => "half_squared_distance",
            BuiltinKind::DistanceTo { .. } => "distance_to",
            BuiltinKind::SumOfDistances { .. } => "sum_of_distances",
        }
        .into()
    }
}

fn spider_coords(p: &SpacePoint) -> (usize, f64) {
    match p {
        SpacePoint::Spider { ray, t } => (*ray, *t),
        _ => (0, 0.0),
    }
}

/// Prox of Σ d(·, p_i) by majorize–minimize: d(x, p) ≤ d²(x, p)/(2δ) + δ/2
/// with δ = d(x_k, p), so each step is the Fréchet mean of the p_i with
/// weights 1/δ_i and of y with weight 1/τ. The contraction factor is about
/// τ Σ 1/δ_i. Iterates never return to an anchor that is not optimal, since
/// the objective decreases monotonically.
fn weiszfeld_prox(
    space: &Space,
    points: &[SpacePoint],
    tau: f64,
    y: &SpacePoint,
) -> Result<SpacePoint> {
    const MAX_ITER: usize = 10_000;
    let objective = |x: &SpacePoint| {
        points.iter().map(|p| space.distance(x, p)).sum::<f64>()
            + space.distance(x, y).powi(2) / (2.0 * tau)
    };
    // one majorize–minimize step from x over the anchors in `active`
    let step = |x: &SpacePoint, active: &[bool]| {
        let mut pts = vec![y.clone()];
        let mut ws = vec![1.0 / tau];
        for (p, _) in points.iter().zip(active).filter(|(_, a)| **a) {
            pts.push(p.clone());
            ws.push(1.0 / space.distance(x, p).max(1e-300));
        }
        crate::spaces::weighted_frechet_mean(space, &pts, &ws, x)
    };
    let mut x = y.clone();
    let on_anchor: Vec<bool> = points.iter().map(|p| space.distance(y, p) == 0.0).collect();
    if on_anchor.iter().any(|&a| a) {
        // Pull of the other terms: the step toward them has length
        // |pull| / (S + 1/τ) to first order, with S = Σ 1/d(y, p_j).
        let others: Vec<bool> = on_anchor.iter().map(|a| !a).collect();
        let toward = step(y, &others)?;
        let s: f64 = points
            .iter()
            .zip(&others)
            .filter(|(_, o)| **o)
            .map(|(p, _)| 1.0 / space.distance(y, p))
            .sum();
        let len = space.distance(y, &toward);
        let pull = len * (s + 1.0 / tau);
        if pull <= 1.0 {
            return Ok(y.clone());
        }
        x = space.geodesic_point(y, &toward, (tau * (pull - 1.0) / len).min(1.0))?;
    }
    let all = vec![true; points.len()];
    let mut fx = objective(&x);
    // below this, steps are coordinate rounding
    let floor = 16.0 * f64::EPSILON * (1.0 + space.distance(y, &space.base_point()));
    for _ in 0..MAX_ITER {
        let next = step(&x, &all)?;
        let fn_ = objective(&next);
        if fn_ > fx + 8.0 * f64::EPSILON * fx.abs() {
            return Ok(x);
        }
        let moved = space.distance(&x, &next);
        x = next;
        fx = fn_;
        if moved <= (1e-13 * space.distance(&x, y).max(tau)).max(floor) {
            return Ok(x);
        }
    }
    Err(Error::ProxFailure(format!(
        "sum_of_distances prox did not settle in {MAX_ITER} majorize–minimize steps"
    )))
}

/// Exact prox of Σ d(·, p_i) on a spider: on each closed ray the objective
/// is a convex piecewise quadratic in the distance s from the origin, whose
/// minimizer is a kink or the stationary point of one piece.
fn spider_sum_prox(rays: usize, points: &[SpacePoint], tau: f64, y: &SpacePoint) -> SpacePoint {
    let (ry, ty) = spider_coords(y);
    let pts: Vec<(usize, f64)> = points.iter().map(spider_coords).collect();
    let mut best = (f64::INFINITY, SpacePoint::spider_origin());
    for k in 1..=rays {
        let c = if ry == k || ty == 0.0 { ty } else { -ty };
        let same: Vec<f64> = pts
            .iter()
            .filter(|(r, t)| *r == k && *t > 0.0)
            .map(|p| p.1)
            .collect();
        let n_other = pts.len() - same.len();
        let f = |s: f64| {
            let lin: f64 = pts
                .iter()
                .map(|&(r, t)| {
                    if r == k && t > 0.0 {
                        (s - t).abs()
                    } else {
                        s + t
                    }
                })
                .sum();
            lin + (s - c).powi(2) / (2.0 * tau)
        };
        let mut cands = vec![0.0];
        cands.extend(same.iter().copied());
        for j in 0..=same.len() {
            let slope_sum = n_other as f64 + 2.0 * j as f64 - same.len() as f64;
            cands.push((c - tau * slope_sum).max(0.0));
        }
        for s in cands {
            let v = f(s);
            if v < best.0 {
                best = (v, SpacePoint::spider(k, s));
            }
        }
    }
    best.1
}
