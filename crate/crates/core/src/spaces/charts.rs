//! Closed-form chart formulas for the concrete spaces.
//!
//! Hyperboloid and sphere formulas are written in "difference" form so that
//! nearby points lose no precision: distances go through `asinh`/`atan2`
//! rather than `acosh`/`acos`.

pub(crate) type V3 = [f64; 3];

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

pub(crate) fn euclid_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn sub3(a: &V3, b: &V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &V3, b: &V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// sinh(x)/x, stable near zero.
pub(crate) fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// sin(x)/x, stable near zero.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub(crate) mod hyperboloid {
    use super::*;

    pub(crate) fn minkowski(a: &[f64], b: &[f64]) -> f64 {
        -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    pub(crate) fn renormalize(x: V3) -> V3 {
        [(1.0 + x[1] * x[1] + x[2] * x[2]).sqrt(), x[1], x[2]]
    }

    pub(crate) fn distance(a: &V3, b: &V3) -> f64 {
        let d = sub3(b, a);
        let q = minkowski(&d, &d).max(0.0);
        2.0 * (q.sqrt() / 2.0).asinh()
    }

    /// Initial velocity at `a` of the unit-time geodesic to `b`.
    pub(crate) fn log(a: &V3, b: &V3) -> V3 {
        let d = sub3(b, a);
        let q = minkowski(&d, &d).max(0.0);
        let dist = 2.0 * (q.sqrt() / 2.0).asinh();
        let w = [
            d[0] - 0.5 * q * a[0],
            d[1] - 0.5 * q * a[1],
            d[2] - 0.5 * q * a[2],
        ];
        let s = 1.0 / sinhc(dist);
        [w[0] * s, w[1] * s, w[2] * s]
    }

    /// Minkowski-orthonormal frame (radial, angular) of the tangent plane
    /// at `a`. Tangent vectors are stored in this frame: the ambient Minkowski
    /// norm of a short difference of long vectors cancels catastrophically.
    pub(crate) fn frame(a: &V3) -> (V3, V3) {
        let rho = a[1].hypot(a[2]);
        if rho == 0.0 {
            return ([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        }
        (
            [rho, a[0] * a[1] / rho, a[0] * a[2] / rho],
            [0.0, -a[2] / rho, a[1] / rho],
        )
    }

    pub(crate) fn to_frame(a: &V3, v: &V3) -> [f64; 2] {
        let (er, et) = frame(a);
        [minkowski(v, &er), minkowski(v, &et)]
    }

    pub(crate) fn from_frame(a: &V3, c: &[f64]) -> V3 {
        let (er, et) = frame(a);
        [
            c[0] * er[0] + c[1] * et[0],
            c[0] * er[1] + c[1] * et[1],
            c[0] * er[2] + c[1] * et[2],
        ]
    }

    pub(crate) fn exp(a: &V3, v: &[f64]) -> V3 {
        let n = minkowski(v, v).max(0.0).sqrt();
        let c = n.cosh();
        let s = sinhc(n);
        renormalize([
            c * a[0] + s * v[0],
            c * a[1] + s * v[1],
            c * a[2] + s * v[2],
        ])
    }
}

pub(crate) mod sphere {
    use super::*;

    pub(crate) fn renormalize(x: V3, radius: f64) -> V3 {
        let n = norm(&x);
        [x[0] * radius / n, x[1] * radius / n, x[2] * radius / n]
    }

    /// Central angle between two points of the sphere.
    pub(crate) fn angle(a: &V3, b: &V3) -> f64 {
        norm(&cross(a, b)).atan2(dot(a, b))
    }

    pub(crate) fn log(a: &V3, b: &V3) -> V3 {
        let theta = angle(a, b);
        let d = sub3(b, a);
        let c = 2.0 * (theta / 2.0).sin().powi(2);
        let w = [d[0] + c * a[0], d[1] + c * a[1], d[2] + c * a[2]];
        let s = 1.0 / sinc(theta);
        [w[0] * s, w[1] * s, w[2] * s]
    }

    pub(crate) fn tangent_part(a: &V3, v: &[f64], radius: f64) -> V3 {
        let c = dot(a, v) / (radius * radius);
        [v[0] - c * a[0], v[1] - c * a[1], v[2] - c * a[2]]
    }

    pub(crate) fn exp(a: &V3, v: &[f64], radius: f64) -> V3 {
        let phi = norm(v) / radius;
        let c = phi.cos();
        let s = sinc(phi);
        renormalize(
            [
                c * a[0] + s * v[0],
                c * a[1] + s * v[1],
                c * a[2] + s * v[2],
            ],
            radius,
        )
    }
}
