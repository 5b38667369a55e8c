//! Tangent cones built from geodesic germs.
//!
//! A [`Direction`] at `base` is either the formal zero or a germ
//! `(target, α)`: the geodesic from `base` toward `target` run at α times
//! unit-interval speed. Concrete spaces evaluate cone operations in closed
//! form (see [`chart`]); any [`MetricSpace`] can fall back on the dyadic
//! limits in this module.

pub mod chart;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spaces::{MetricSpace, Space, SpacePoint};
use chart::TangentVec;

#[derive(Debug, Clone, PartialEq)]
pub enum Germ<P> {
    Zero,
    Toward { target: P, alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Direction<P> {
    pub base: P,
    pub germ: Germ<P>,
}

impl<P: Clone + PartialEq> Direction<P> {
    pub fn zero(base: P) -> Self {
        Self {
            base,
            germ: Germ::Zero,
        }
    }

    /// The germ `α·(G_base^target)'₀`; collapses to zero when `α = 0` or
    /// `target = base`.
    pub fn toward(base: P, target: P, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::NegativeScale(alpha));
        }
        if alpha == 0.0 || target == base {
            return Ok(Self::zero(base));
        }
        Ok(Self {
            base,
            germ: Germ::Toward { target, alpha },
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.germ, Germ::Zero)
    }

    pub fn alpha(&self) -> f64 {
        match &self.germ {
            Germ::Zero => 0.0,
            Germ::Toward { alpha, .. } => *alpha,
        }
    }

    /// Scaling by λ ≥ 0.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::NegativeScale(lambda));
        }
        match &self.germ {
            Germ::Zero => Ok(self.clone()),
            Germ::Toward { target, alpha } => {
                Self::toward(self.base.clone(), target.clone(), alpha * lambda)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "P: Serialize", deserialize = "P: Deserialize<'de>"))]
struct DirectionRepr<P> {
    base: P,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<P>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    zero: bool,
}

impl<P: Serialize + Clone> Serialize for Direction<P> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match &self.germ {
            Germ::Zero => DirectionRepr {
                base: self.base.clone(),
                target: None,
                alpha: None,
                zero: true,
            },
            Germ::Toward { target, alpha } => DirectionRepr {
                base: self.base.clone(),
                target: Some(target.clone()),
                alpha: Some(*alpha),
                zero: false,
            },
        };
        repr.serialize(s)
    }
}

impl<'de, P: Deserialize<'de> + Clone + PartialEq> Deserialize<'de> for Direction<P> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = DirectionRepr::<P>::deserialize(d)?;
        match (r.zero, r.target, r.alpha) {
            (true, None, None) => Ok(Direction::zero(r.base)),
            (false, Some(target), Some(alpha)) => {
                Direction::toward(r.base, target, alpha).map_err(D::Error::custom)
            }
            _ => Err(D::Error::custom(
                "direction needs either `zero: true` or both `target` and `alpha`",
            )),
        }
    }
}

/// A cone distance with a one-sided error bracket: when `error_bound` is
/// known the exact value lies in `[value − error_bound, value]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeValue {
    pub value: f64,
    pub error_bound: Option<f64>,
}

impl ConeValue {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_bound: Some(0.0),
        }
    }

    pub fn lower(&self) -> Option<f64> {
        self.error_bound.map(|e| self.value - e)
    }
}

/// Dyadic sampling grid `t = 2^{-k}` for `k = k_min..=k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicGrid {
    pub k_min: u32,
    pub k_max: u32,
}

impl Default for DyadicGrid {
    fn default() -> Self {
        Self {
            k_min: 10,
            k_max: 20,
        }
    }
}

/// Cone operations at a point. Defaults go through dyadic limits and are
/// valid in any geodesic space; concrete spaces override them.
pub trait TangentCone: MetricSpace {
    fn cone_distance(
        &self,
        v: &Direction<Self::Point>,
        w: &Direction<Self::Point>,
    ) -> Result<ConeValue> {
        cone_distance_dyadic(self, v, w, DyadicGrid::default())
    }

    fn oplus(
        &self,
        v: &Direction<Self::Point>,
        w: &Direction<Self::Point>,
    ) -> Result<Direction<Self::Point>> {
        oplus_dyadic(self, v, w, DyadicGrid::default())
    }

    /// `Σ c_i v_i` with `Σ c_i = 1` when the cone is linear along the
    /// inputs; `None` when the combination leaves the cone.
    fn affine_combination(
        &self,
        _coeffs: &[f64],
        _dirs: &[Direction<Self::Point>],
    ) -> Result<Option<Direction<Self::Point>>> {
        Ok(None)
    }
}

fn check_base<S: MetricSpace + ?Sized>(
    space: &S,
    v: &Direction<S::Point>,
    w: &Direction<S::Point>,
) -> Result<()> {
    if v.base == w.base || space.distance(&v.base, &w.base) <= 1e-12 {
        Ok(())
    } else {
        Err(Error::MismatchedBase)
    }
}

/// The point γ_t of the germ, i.e. the geodesic point at fraction α·t.
pub fn germ_point<S: MetricSpace + ?Sized>(
    space: &S,
    v: &Direction<S::Point>,
    t: f64,
) -> Result<S::Point> {
    match &v.germ {
        Germ::Zero => Ok(v.base.clone()),
        Germ::Toward { target, alpha } => space.geodesic_point(&v.base, target, alpha * t),
    }
}

/// |v| = α·d(base, target).
pub fn norm<S: MetricSpace + ?Sized>(space: &S, v: &Direction<S::Point>) -> f64 {
    match &v.germ {
        Germ::Zero => 0.0,
        Germ::Toward { target, alpha } => alpha * space.distance(&v.base, target),
    }
}

/// ⟨v,w⟩ = ½(|v|² + |w|² − d²(v,w)).
pub fn inner<S: TangentCone>(
    space: &S,
    v: &Direction<S::Point>,
    w: &Direction<S::Point>,
) -> Result<f64> {
    let d = space.cone_distance(v, w)?.value;
    let (nv, nw) = (norm(space, v), norm(space, w));
    Ok(0.5 * (nv * nv + nw * nw - d * d))
}

/// d(γ_t, η_t)/t along the dyadic grid, finest last.
pub fn dyadic_ratios<S: MetricSpace + ?Sized>(
    space: &S,
    v: &Direction<S::Point>,
    w: &Direction<S::Point>,
    grid: DyadicGrid,
) -> Result<Vec<(f64, f64)>> {
    check_base(space, v, w)?;
    let c = 1f64.max(v.alpha()).max(w.alpha());
    (grid.k_min..=grid.k_max)
        .map(|k| {
            let t = 2f64.powi(-(k as i32)) / c;
            let p = germ_point(space, v, t)?;
            let q = germ_point(space, w, t)?;
            Ok((t, space.distance(&p, &q) / t))
        })
        .collect()
}

/// Generic cone distance: the ratio at the finest grid point, with the
/// monotone bracket when the ratios are nondecreasing in t.
pub fn cone_distance_dyadic<S: MetricSpace + ?Sized>(
    space: &S,
    v: &Direction<S::Point>,
    w: &Direction<S::Point>,
    grid: DyadicGrid,
) -> Result<ConeValue> {
    let ratios = dyadic_ratios(space, v, w, grid)?;
    let (_, value) = *ratios.last().ok_or(Error::Empty("empty dyadic grid"))?;
    let monotone = ratios.windows(2).all(|p| {
        let (t_fine, f_fine) = p[1];
        // absolute roundoff in the distance is amplified by 1/t
        f_fine <= p[0].1 + 1e-12 + 1e-13 / t_fine
    });
    let error_bound = if monotone && ratios.len() >= 2 {
        Some((ratios[ratios.len() - 2].1 - value).max(0.0))
    } else {
        None
    };
    Ok(ConeValue { value, error_bound })
}

/// Generic ⊕: `(2/t)·(G_y^{m_t})'₀` with m_t the midpoint of γ_t and η_t.
pub fn oplus_dyadic<S: MetricSpace + ?Sized>(
    space: &S,
    v: &Direction<S::Point>,
    w: &Direction<S::Point>,
    grid: DyadicGrid,
) -> Result<Direction<S::Point>> {
    check_base(space, v, w)?;
    let c = 1f64.max(v.alpha()).max(w.alpha());
    let t = 2f64.powi(-(grid.k_max as i32)) / c;
    let p = germ_point(space, v, t)?;
    let q = germ_point(space, w, t)?;
    let m = space.geodesic_point(&p, &q, 0.5)?;
    Direction::toward(v.base.clone(), m, 2.0 / t)
}

/// Pair (finite difference of ½d²(y_·, z) at t, −⟨difference-quotient germ,
/// germ toward z⟩) for a sampled curve.
pub fn first_variation<S, C>(
    space: &S,
    curve: C,
    z: &S::Point,
    t: f64,
    h: f64,
) -> Result<(f64, f64)>
where
    S: TangentCone,
    C: Fn(f64) -> Result<S::Point>,
{
    let y0 = curve(t)?;
    let y1 = curve(t + h)?;
    let fd = 0.5 * (space.distance(&y1, z).powi(2) - space.distance(&y0, z).powi(2)) / h;
    if space.distance(&y0, &y1) == 0.0 {
        return Ok((fd, 0.0));
    }
    let step = Direction::toward(y0.clone(), y1, 1.0 / h)?;
    let toward_z = Direction::toward(y0, z.clone(), 1.0)?;
    Ok((fd, -inner(space, &step, &toward_z)?))
}

impl TangentCone for Space {
    fn cone_distance(
        &self,
        v: &Direction<SpacePoint>,
        w: &Direction<SpacePoint>,
    ) -> Result<ConeValue> {
        check_base(self, v, w)?;
        let a = TangentVec::from_direction(self, v)?;
        let b = TangentVec::from_direction(self, w)?;
        Ok(ConeValue::exact(a.distance(self, &b)))
    }

    fn oplus(
        &self,
        v: &Direction<SpacePoint>,
        w: &Direction<SpacePoint>,
    ) -> Result<Direction<SpacePoint>> {
        check_base(self, v, w)?;
        let a = TangentVec::from_direction(self, v)?;
        let b = TangentVec::from_direction(self, w)?;
        a.sum(&b).to_direction(self, &v.base)
    }

    fn affine_combination(
        &self,
        coeffs: &[f64],
        dirs: &[Direction<SpacePoint>],
    ) -> Result<Option<Direction<SpacePoint>>> {
        let Some(first) = dirs.first() else {
            return Ok(None);
        };
        let vecs = dirs
            .iter()
            .map(|d| {
                check_base(self, first, d)?;
                TangentVec::from_direction(self, d)
            })
            .collect::<Result<Vec<_>>>()?;
        match TangentVec::affine(coeffs, &vecs) {
            Some(v) => Ok(Some(v.to_direction(self, &first.base)?)),
            None => Ok(None),
        }
    }
}

/// Unit-speed germ from `base` toward `target` (zero if they coincide).
pub fn unit_germ(
    space: &Space,
    base: &SpacePoint,
    target: &SpacePoint,
) -> Result<Direction<SpacePoint>> {
    let d = space.distance(base, target);
    if d == 0.0 {
        return Ok(Direction::zero(base.clone()));
    }
    Direction::toward(base.clone(), target.clone(), 1.0 / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spider_unit(ray: usize) -> Direction<SpacePoint> {
        Direction::toward(
            SpacePoint::spider_origin(),
            SpacePoint::spider(ray, 1.0),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_distance_is_the_norm() {
        let s = Space::spider(3);
        let o = SpacePoint::spider_origin();
        let w = Direction::toward(o.clone(), SpacePoint::spider(2, 2.0), 1.5).unwrap();
        let d = s.cone_distance(&Direction::zero(o), &w).unwrap();
        assert_eq!(d.value, 3.0);
    }

    #[test]
    fn spider_opposite_rays() {
        let s = Space::spider(3);
        let (v, w) = (spider_unit(1), spider_unit(2));
        assert_eq!(s.cone_distance(&v, &w).unwrap().value, 2.0);
        assert_eq!(inner(&s, &v, &w).unwrap(), -1.0);
        assert!(s.oplus(&v, &w).unwrap().is_zero());
        assert_eq!(s.oplus(&v, &Direction::zero(v.base.clone())).unwrap(), v);
    }

    #[test]
    fn euclid_unit_axes() {
        let s = Space::euclidean(2);
        let o = SpacePoint::euclid(&[0.0, 0.0]);
        let v = Direction::toward(o.clone(), SpacePoint::euclid(&[1.0, 0.0]), 1.0).unwrap();
        let w = Direction::toward(o.clone(), SpacePoint::euclid(&[0.0, 1.0]), 1.0).unwrap();
        assert_relative_eq!(s.cone_distance(&v, &w).unwrap().value, 2f64.sqrt());
        let sum = s.oplus(&v, &w).unwrap();
        let expected = Direction::toward(o, SpacePoint::euclid(&[1.0, 1.0]), 1.0).unwrap();
        assert!(s.cone_distance(&sum, &expected).unwrap().value < 1e-15);
    }

    #[test]
    fn scale_rules() {
        let v = spider_unit(1);
        assert!(v.scale(0.0).unwrap().is_zero());
        assert!(matches!(v.scale(-1.0), Err(Error::NegativeScale(_))));
        let s = Space::spider(3);
        assert_eq!(norm(&s, &v.scale(2.5).unwrap()), 2.5);
    }

    #[test]
    fn mismatched_bases_are_rejected() {
        let s = Space::spider(3);
        let v = spider_unit(1);
        let w = Direction::zero(SpacePoint::spider(1, 1.0));
        assert!(matches!(
            s.cone_distance(&v, &w),
            Err(Error::MismatchedBase)
        ));
    }

    #[test]
    fn dyadic_agrees_with_closed_form_on_hyperbolic() {
        let s = Space::Hyperbolic2;
        let y = SpacePoint::hyperbolic(0.4, -0.3);
        let v = Direction::toward(y.clone(), SpacePoint::hyperbolic(1.5, 0.2), 0.7).unwrap();
        let w = Direction::toward(y.clone(), SpacePoint::hyperbolic(-0.2, 1.1), 1.3).unwrap();
        let closed = s.cone_distance(&v, &w).unwrap().value;
        let dy = cone_distance_dyadic(&s, &v, &w, DyadicGrid::default()).unwrap();
        let lower = dy.lower().expect("CAT(0) ratios are monotone");
        assert!(
            lower - 1e-6 <= closed && closed <= dy.value + 1e-6,
            "{closed} vs {dy:?}"
        );
    }

    #[test]
    fn first_variation_examples() {
        let s = Space::euclidean(2);
        let z = SpacePoint::euclid(&[0.0, 0.0]);
        let line = |t: f64| Ok(SpacePoint::euclid(&[3.0 - t, 0.0]));
        let (fd, pairing) = first_variation(&s, line, &z, 0.5, 1e-6).unwrap();
        assert_relative_eq!(fd, -2.5, epsilon = 1e-5);
        assert_relative_eq!(pairing, -2.5, epsilon = 1e-9);
        let still = |_t: f64| Ok(SpacePoint::euclid(&[1.0, 1.0]));
        assert_eq!(
            first_variation(&s, still, &z, 0.0, 1e-3).unwrap(),
            (0.0, 0.0)
        );
        let circle = |t: f64| Ok(SpacePoint::euclid(&[t.cos(), t.sin()]));
        let (fd, pairing) = first_variation(&s, circle, &z, 0.3, 1e-6).unwrap();
        assert!(fd.abs() < 1e-9 && pairing.abs() < 1e-5);
    }

    #[test]
    fn directions_serialize_both_forms() {
        let v = spider_unit(2);
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(
            text,
            r#"{"base":{"ray":0,"t":0.0},"target":{"ray":2,"t":1.0},"alpha":1.0}"#
        );
        let z: Direction<SpacePoint> =
            serde_json::from_str(r#"{"base":{"x":[1.0]},"zero":true}"#).unwrap();
        assert!(z.is_zero());
        assert!(serde_json::from_str::<Direction<SpacePoint>>(r#"{"base":{"x":[1.0]}}"#).is_err());
    }
}
