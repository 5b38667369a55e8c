//! Law of cosines in the model surfaces M_κ.

use std::f64::consts::PI;

use super::{MetricSpace, Space, SpacePoint};
use crate::error::{Error, Result};

/// Angle opposite to side `c` in the M_κ triangle with sides `a, b, c`.
pub fn model_angle(kappa: f64, a: f64, b: f64, c: f64) -> f64 {
    let cos = if kappa == 0.0 {
        (a * a + b * b - c * c) / (2.0 * a * b)
    } else if kappa < 0.0 {
        let k = (-kappa).sqrt();
        ((k * a).cosh() * (k * b).cosh() - (k * c).cosh()) / ((k * a).sinh() * (k * b).sinh())
    } else {
        let k = kappa.sqrt();
        ((k * c).cos() - (k * a).cos() * (k * b).cos()) / ((k * a).sin() * (k * b).sin())
    };
    cos.clamp(-1.0, 1.0).acos()
}

/// Side opposite to the angle `gamma` enclosed by sides `a` and `b` in M_κ.
pub fn model_third_side(kappa: f64, a: f64, b: f64, gamma: f64) -> f64 {
    if kappa == 0.0 {
        (a * a + b * b - 2.0 * a * b * gamma.cos()).max(0.0).sqrt()
    } else if kappa < 0.0 {
        let k = (-kappa).sqrt();
        let ch = (k * a).cosh() * (k * b).cosh() - (k * a).sinh() * (k * b).sinh() * gamma.cos();
        ch.max(1.0).acosh() / k
    } else {
        let k = kappa.sqrt();
        let c = (k * a).cos() * (k * b).cos() + (k * a).sin() * (k * b).sin() * gamma.cos();
        c.clamp(-1.0, 1.0).acos() / k
    }
}

/// Angle at ȳ of the comparison triangle for (y, z1, z2) in M_κ.
pub fn comparison_angle(
    space: &Space,
    y: &SpacePoint,
    z1: &SpacePoint,
    z2: &SpacePoint,
    kappa: f64,
) -> Result<f64> {
    let a = space.distance(y, z1);
    let b = space.distance(y, z2);
    let c = space.distance(z1, z2);
    if a == 0.0 || b == 0.0 {
        return Err(Error::UndefinedAngle(
            "a side through the vertex has length 0".into(),
        ));
    }
    if kappa > 0.0 {
        let limit = 2.0 * PI / kappa.sqrt();
        if a + b + c >= limit {
            return Err(Error::ComparisonUndefined {
                perimeter: a + b + c,
                limit,
            });
        }
    }
    Ok(model_angle(kappa, a, b, c))
}
