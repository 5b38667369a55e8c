//! Linear-algebra charts of the tangent cones of the concrete spaces.
//!
//! Riemannian kinds use the tangent plane (ambient coordinates, or an
//! orthonormal frame on the hyperbolic plane). A spider
//! has the spider itself as tangent cone at the origin and a line elsewhere.

use std::f64::consts::PI;

use super::{Direction, Germ};
use crate::error::{Error, Result};
use crate::spaces::charts::axpy;
use crate::spaces::{MetricSpace, Space, SpacePoint};

#[derive(Debug, Clone, PartialEq)]
pub enum TangentVec {
    /// Tangent-plane vector, in the coordinates of `Space::riemannian_log`.
    Flat(Vec<f64>),
    /// Cone at the spider origin: a length along one ray (ray 0 when zero).
    SpiderOrigin {
        ray: usize,
        len: f64,
    },
    /// Signed speed along the edge through a non-origin spider point;
    /// positive points away from the origin.
    SpiderEdge(f64),
    Product(Vec<TangentVec>),
}

fn zero_like(space: &Space, base: &SpacePoint) -> TangentVec {
    match (space, base) {
        (Space::Spider { .. }, SpacePoint::Spider { t, .. }) => {
            if *t == 0.0 {
                TangentVec::SpiderOrigin { ray: 0, len: 0.0 }
            } else {
                TangentVec::SpiderEdge(0.0)
            }
        }
        (Space::Product { factors }, SpacePoint::Product(ps)) => TangentVec::Product(
            factors
                .iter()
                .zip(ps)
                .map(|(f, p)| zero_like(f, p))
                .collect(),
        ),
        _ => TangentVec::Flat(vec![0.0; space.ambient_dim()]),
    }
}

impl TangentVec {
    pub fn from_direction(space: &Space, v: &Direction<SpacePoint>) -> Result<Self> {
        match &v.germ {
            Germ::Zero => Ok(zero_like(space, &v.base)),
            Germ::Toward { target, alpha } => Self::from_germ(space, &v.base, target, *alpha),
        }
    }

    fn from_germ(
        space: &Space,
        base: &SpacePoint,
        target: &SpacePoint,
        alpha: f64,
    ) -> Result<Self> {
        match (space, base, target) {
            (
                Space::Spider { .. },
                SpacePoint::Spider { ray, t },
                SpacePoint::Spider { ray: tr, t: tt },
            ) => {
                if *t == 0.0 {
                    Ok(TangentVec::SpiderOrigin {
                        ray: if *tt == 0.0 { 0 } else { *tr },
                        len: alpha * tt,
                    })
                } else if tr == ray && tt > t {
                    Ok(TangentVec::SpiderEdge(alpha * (tt - t)))
                } else {
                    Ok(TangentVec::SpiderEdge(
                        -alpha * space.distance(base, target),
                    ))
                }
            }
            (Space::Product { factors }, SpacePoint::Product(bs), SpacePoint::Product(ts)) => {
                factors
                    .iter()
                    .zip(bs.iter().zip(ts))
                    .map(|(f, (b, t))| Self::from_germ(f, b, t, alpha))
                    .collect::<Result<_>>()
                    .map(TangentVec::Product)
            }
            _ => {
                let log = space
                    .riemannian_log(base, target)
                    .ok_or_else(|| Error::InvalidPoint("point kind does not match space".into()))?;
                Ok(TangentVec::Flat(log.iter().map(|c| alpha * c).collect()))
            }
        }
    }

    pub fn norm(&self, space: &Space) -> f64 {
        match (self, space) {
            (TangentVec::Flat(v), _) => space.riemannian_inner(v, v).max(0.0).sqrt(),
            (TangentVec::SpiderOrigin { len, .. }, _) => *len,
            (TangentVec::SpiderEdge(x), _) => x.abs(),
            (TangentVec::Product(vs), Space::Product { factors }) => vs
                .iter()
                .zip(factors)
                .map(|(v, f)| v.norm(f).powi(2))
                .sum::<f64>()
                .sqrt(),
            _ => f64::NAN,
        }
    }

    pub fn distance(&self, space: &Space, other: &Self) -> f64 {
        match (self, other, space) {
            (TangentVec::Flat(a), TangentVec::Flat(b), _) => {
                let d: Vec<f64> = axpy(-1.0, b, a);
                space.riemannian_inner(&d, &d).max(0.0).sqrt()
            }
            (
                TangentVec::SpiderOrigin { ray: r1, len: a },
                TangentVec::SpiderOrigin { ray: r2, len: b },
                _,
            ) => {
                if r1 == r2 || *a == 0.0 || *b == 0.0 {
                    (a - b).abs()
                } else {
                    a + b
                }
            }
            (TangentVec::SpiderEdge(a), TangentVec::SpiderEdge(b), _) => (a - b).abs(),
            (TangentVec::Product(xs), TangentVec::Product(ys), Space::Product { factors }) => xs
                .iter()
                .zip(ys)
                .zip(factors)
                .map(|((x, y), f)| x.distance(f, y).powi(2))
                .sum::<f64>()
                .sqrt(),
            _ => f64::NAN,
        }
    }

    /// v ⊕ w, i.e. twice the cone midpoint.
    pub fn sum(&self, other: &Self) -> Self {
        match (self, other) {
            (TangentVec::Flat(a), TangentVec::Flat(b)) => TangentVec::Flat(axpy(1.0, a, b)),
            (
                TangentVec::SpiderOrigin { ray: r1, len: a },
                TangentVec::SpiderOrigin { ray: r2, len: b },
            ) => {
                if *b == 0.0 {
                    self.clone()
                } else if *a == 0.0 || r1 == r2 {
                    TangentVec::SpiderOrigin {
                        ray: *r2,
                        len: a + b,
                    }
                } else if a > b {
                    TangentVec::SpiderOrigin {
                        ray: *r1,
                        len: a - b,
                    }
                } else if b > a {
                    TangentVec::SpiderOrigin {
                        ray: *r2,
                        len: b - a,
                    }
                } else {
                    TangentVec::SpiderOrigin { ray: 0, len: 0.0 }
                }
            }
            (TangentVec::SpiderEdge(a), TangentVec::SpiderEdge(b)) => TangentVec::SpiderEdge(a + b),
            (TangentVec::Product(xs), TangentVec::Product(ys)) => {
                TangentVec::Product(xs.iter().zip(ys).map(|(x, y)| x.sum(y)).collect())
            }
            _ => self.clone(),
        }
    }

    /// Affine combination `Σ c_i v_i`, if it stays inside the cone.
    pub fn affine(coeffs: &[f64], vs: &[Self]) -> Option<Self> {
        let first = vs.first()?;
        match first {
            TangentVec::Flat(a) => {
                let mut acc = vec![0.0; a.len()];
                for (c, v) in coeffs.iter().zip(vs) {
                    let TangentVec::Flat(x) = v else { return None };
                    acc = axpy(*c, x, &acc);
                }
                Some(TangentVec::Flat(acc))
            }
            TangentVec::SpiderEdge(_) => {
                let mut acc = 0.0;
                for (c, v) in coeffs.iter().zip(vs) {
                    let TangentVec::SpiderEdge(x) = v else {
                        return None;
                    };
                    acc += c * x;
                }
                Some(TangentVec::SpiderEdge(acc))
            }
            TangentVec::SpiderOrigin { .. } => {
                let mut ray = 0;
                let mut acc = 0.0;
                for (c, v) in coeffs.iter().zip(vs) {
                    let TangentVec::SpiderOrigin { ray: r, len } = v else {
                        return None;
                    };
                    if *len != 0.0 {
                        if ray != 0 && ray != *r {
                            return None;
                        }
                        ray = *r;
                    }
                    acc += c * len;
                }
                if acc < -1e-12 * vs.iter().map(|v| v.raw_len()).fold(1.0, f64::max) {
                    return None;
                }
                Some(if acc > 0.0 && ray != 0 {
                    TangentVec::SpiderOrigin { ray, len: acc }
                } else {
                    TangentVec::SpiderOrigin { ray: 0, len: 0.0 }
                })
            }
            TangentVec::Product(parts) => {
                let mut out = Vec::with_capacity(parts.len());
                for i in 0..parts.len() {
                    let comp: Option<Vec<Self>> = vs
                        .iter()
                        .map(|v| match v {
                            TangentVec::Product(ps) => ps.get(i).cloned(),
                            _ => None,
                        })
                        .collect();
                    out.push(Self::affine(coeffs, &comp?)?);
                }
                Some(TangentVec::Product(out))
            }
        }
    }

    fn raw_len(&self) -> f64 {
        match self {
            TangentVec::SpiderOrigin { len, .. } => *len,
            TangentVec::SpiderEdge(x) => x.abs(),
            TangentVec::Flat(v) => v.iter().map(|c| c.abs()).fold(0.0, f64::max),
            TangentVec::Product(ps) => ps.iter().map(TangentVec::raw_len).fold(0.0, f64::max),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            TangentVec::Flat(v) => v.iter().all(|c| *c == 0.0),
            TangentVec::SpiderOrigin { len, .. } => *len == 0.0,
            TangentVec::SpiderEdge(x) => *x == 0.0,
            TangentVec::Product(ps) => ps.iter().all(TangentVec::is_zero),
        }
    }

    /// Largest time the germ can be followed from `base` without leaving a
    /// uniquely geodesic neighbourhood (∞ when unrestricted).
    fn reach_time(&self, space: &Space, base: &SpacePoint) -> f64 {
        let n = self.norm(space);
        if n == 0.0 {
            return f64::INFINITY;
        }
        match (self, space, base) {
            (TangentVec::Flat(_), Space::Hyperbolic2, _) => 1.0 / n,
            (TangentVec::Flat(_), Space::Sphere2 { kappa }, _) => {
                0.5 * PI * Space::sphere_radius(*kappa) / n
            }
            (TangentVec::SpiderEdge(x), _, SpacePoint::Spider { t, .. }) if *x < 0.0 => t / n,
            (TangentVec::Product(vs), Space::Product { factors }, SpacePoint::Product(bs)) => vs
                .iter()
                .zip(factors.iter().zip(bs))
                .map(|(v, (f, b))| v.reach_time(f, b))
                .fold(f64::INFINITY, f64::min),
            _ => f64::INFINITY,
        }
    }

    /// Point reached by following the germ for time `time`.
    fn follow(&self, space: &Space, base: &SpacePoint, time: f64) -> Result<SpacePoint> {
        match (self, space, base) {
            (TangentVec::Flat(v), _, _) => {
                let step: Vec<f64> = v.iter().map(|c| c * time).collect();
                space
                    .riemannian_exp(base, &step)
                    .ok_or_else(|| Error::InvalidPoint("point kind does not match space".into()))
            }
            (TangentVec::SpiderOrigin { ray, len }, _, _) => {
                Ok(SpacePoint::spider(*ray, len * time))
            }
            (TangentVec::SpiderEdge(x), _, SpacePoint::Spider { ray, t }) => {
                Ok(SpacePoint::spider(*ray, (t + x * time).max(0.0)))
            }
            (TangentVec::Product(vs), Space::Product { factors }, SpacePoint::Product(bs)) => vs
                .iter()
                .zip(factors.iter().zip(bs))
                .map(|(v, (f, b))| v.follow(f, b, time))
                .collect::<Result<_>>()
                .map(SpacePoint::Product),
            _ => Err(Error::InvalidPoint(
                "tangent vector does not match space".into(),
            )),
        }
    }

    /// Germ representative: target reached at time T ≤ 1, speed 1/T.
    pub fn to_direction(&self, space: &Space, base: &SpacePoint) -> Result<Direction<SpacePoint>> {
        if self.is_zero() {
            return Ok(Direction::zero(base.clone()));
        }
        let time = self.reach_time(space, base).min(1.0);
        let target = self.follow(space, base, time)?;
        if space.distance(base, &target) == 0.0 {
            return Ok(Direction::zero(base.clone()));
        }
        Direction::toward(base.clone(), target, 1.0 / time)
    }
}
