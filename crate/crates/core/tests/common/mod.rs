//! Closed-form oracles written directly from the model formulas, without
//! going through the library's geometry code.

#![allow(dead_code)]

use hflow::maps::{Domain, L2Map};
use hflow::tangent::Germ;
use hflow::{Direction, Space, SpacePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn point(r: &mut ChaCha8Rng, s: &Space) -> SpacePoint {
    match s {
        Space::Euclidean { dim } => {
            SpacePoint::Euclid((0..*dim).map(|_| r.gen_range(-3.0..3.0)).collect())
        }
        Space::Spider { rays } => SpacePoint::spider(r.gen_range(1..=*rays), r.gen_range(0.0..3.0)),
        Space::Hyperbolic2 => {
            let (a, b) = (r.gen_range(-4.0..4.0), r.gen_range(-4.0..4.0));
            SpacePoint::Hyperbolic([(1.0f64 + a * a + b * b).sqrt(), a, b])
        }
        Space::Product { factors } => {
            SpacePoint::Product(factors.iter().map(|f| point(r, f)).collect())
        }
        Space::Sphere2 { .. } => unimplemented!("no sphere oracle"),
    }
}

fn minkowski(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn dist(s: &Space, a: &SpacePoint, b: &SpacePoint) -> f64 {
    match (s, a, b) {
        (Space::Euclidean { .. }, SpacePoint::Euclid(x), SpacePoint::Euclid(y)) => x
            .iter()
            .zip(y)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt(),
        (
            Space::Spider { .. },
            SpacePoint::Spider { ray: r1, t: s1 },
            SpacePoint::Spider { ray: r2, t: s2 },
        ) => {
            if r1 == r2 {
                (s1 - s2).abs()
            } else {
                s1 + s2
            }
        }
        // chord form: acosh of −⟨x, y⟩ loses half the digits for close points
        (Space::Hyperbolic2, SpacePoint::Hyperbolic(x), SpacePoint::Hyperbolic(y)) => {
            let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
            2.0 * (0.5 * minkowski(&d, &d).max(0.0).sqrt()).asinh()
        }
        (Space::Product { factors }, SpacePoint::Product(xs), SpacePoint::Product(ys)) => factors
            .iter()
            .zip(xs.iter().zip(ys))
            .map(|(f, (x, y))| dist(f, x, y).powi(2))
            .sum::<f64>()
            .sqrt(),
        _ => panic!("no oracle for {s:?}"),
    }
}

/// Point at fraction t of the geodesic from a to b.
pub fn geod(s: &Space, a: &SpacePoint, b: &SpacePoint, t: f64) -> SpacePoint {
    match (s, a, b) {
        (Space::Euclidean { .. }, SpacePoint::Euclid(x), SpacePoint::Euclid(y)) => {
            SpacePoint::Euclid(x.iter().zip(y).map(|(p, q)| p + t * (q - p)).collect())
        }
        (
            Space::Spider { .. },
            SpacePoint::Spider { ray: r1, t: s1 },
            SpacePoint::Spider { ray: r2, t: s2 },
        ) => {
            if r1 == r2 {
                SpacePoint::spider(*r1, s1 + t * (s2 - s1))
            } else {
                let p = t * (s1 + s2);
                if p <= *s1 {
                    SpacePoint::spider(*r1, s1 - p)
                } else {
                    SpacePoint::spider(*r2, p - s1)
                }
            }
        }
        (Space::Hyperbolic2, SpacePoint::Hyperbolic(x), SpacePoint::Hyperbolic(y)) => {
            let d = dist(s, a, b);
            if d == 0.0 {
                return a.clone();
            }
            let (ca, cb) = (((1.0 - t) * d).sinh() / d.sinh(), (t * d).sinh() / d.sinh());
            SpacePoint::Hyperbolic([
                ca * x[0] + cb * y[0],
                ca * x[1] + cb * y[1],
                ca * x[2] + cb * y[2],
            ])
        }
        (Space::Product { factors }, SpacePoint::Product(xs), SpacePoint::Product(ys)) => {
            SpacePoint::Product(
                factors
                    .iter()
                    .zip(xs.iter().zip(ys))
                    .map(|(f, (x, y))| geod(f, x, y, t))
                    .collect(),
            )
        }
        _ => panic!("no oracle for {s:?}"),
    }
}

/// (1−t)d²(a,b) + t d²(a,c) − t(1−t)d²(b,c) − d²(a, γ_t) for γ from b to c.
pub fn cat0_defect(s: &Space, a: &SpacePoint, b: &SpacePoint, c: &SpacePoint, t: f64) -> f64 {
    let g = geod(s, b, c, t);
    let d2 = |p: &SpacePoint, q: &SpacePoint| dist(s, p, q).powi(2);
    (1.0 - t) * d2(a, b) + t * d2(a, c) - t * (1.0 - t) * d2(b, c) - d2(a, &g)
}

/// A tangent vector in the model chart of the cone at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum Tangent {
    /// Euclidean or hyperboloid (Minkowski-orthogonal) vector.
    Vector(Vec<f64>, bool),
    /// Signed length along the ray through a spider point off the origin.
    Line(f64),
    /// At the spider origin: (ray, length).
    Ray(usize, f64),
}

/// α · log_base(target) in the model chart.
pub fn log(s: &Space, base: &SpacePoint, target: &SpacePoint, alpha: f64) -> Tangent {
    match (s, base, target) {
        (Space::Euclidean { .. }, SpacePoint::Euclid(x), SpacePoint::Euclid(y)) => Tangent::Vector(
            x.iter().zip(y).map(|(p, q)| alpha * (q - p)).collect(),
            false,
        ),
        (Space::Hyperbolic2, SpacePoint::Hyperbolic(x), SpacePoint::Hyperbolic(y)) => {
            let d = dist(s, base, target);
            let c = if d == 0.0 { 0.0 } else { alpha * d / d.sinh() };
            let ch = d.cosh();
            Tangent::Vector((0..3).map(|i| c * (y[i] - ch * x[i])).collect(), true)
        }
        (
            Space::Spider { .. },
            SpacePoint::Spider { ray, t },
            SpacePoint::Spider { ray: r2, t: t2 },
        ) => {
            if *t == 0.0 {
                Tangent::Ray(*r2, alpha * t2)
            } else if ray == r2 {
                Tangent::Line(alpha * (t2 - t))
            } else {
                Tangent::Line(-alpha * (t + t2))
            }
        }
        _ => panic!("no oracle for {s:?}"),
    }
}

pub fn log_of(s: &Space, v: &Direction<SpacePoint>) -> Tangent {
    match &v.germ {
        Germ::Zero => log(s, &v.base, &v.base, 0.0),
        Germ::Toward { target, alpha } => log(s, &v.base, target, *alpha),
    }
}

fn vec_sq(v: &[f64], lorentz: bool) -> f64 {
    let sum: f64 = v.iter().map(|c| c * c).sum();
    if lorentz {
        sum - 2.0 * v[0] * v[0]
    } else {
        sum
    }
}

pub fn cone_dist(a: &Tangent, b: &Tangent) -> f64 {
    match (a, b) {
        (Tangent::Vector(u, l), Tangent::Vector(v, _)) => {
            let diff: Vec<f64> = u.iter().zip(v).map(|(p, q)| p - q).collect();
            vec_sq(&diff, *l).max(0.0).sqrt()
        }
        (Tangent::Line(p), Tangent::Line(q)) => (p - q).abs(),
        (Tangent::Ray(r1, p), Tangent::Ray(r2, q)) => {
            if r1 == r2 || *p == 0.0 || *q == 0.0 {
                (p - q).abs()
            } else {
                p + q
            }
        }
        _ => panic!("tangents at different bases"),
    }
}

pub fn tangent_norm(a: &Tangent) -> f64 {
    match a {
        Tangent::Vector(u, l) => vec_sq(u, *l).max(0.0).sqrt(),
        Tangent::Line(p) => p.abs(),
        Tangent::Ray(_, p) => *p,
    }
}

/// Vector sum where the cone is linear (euclidean, hyperbolic, spider off
/// the origin).
pub fn tangent_sum(a: &Tangent, b: &Tangent) -> Option<Tangent> {
    match (a, b) {
        (Tangent::Vector(u, l), Tangent::Vector(v, _)) => Some(Tangent::Vector(
            u.iter().zip(v).map(|(p, q)| p + q).collect(),
            *l,
        )),
        (Tangent::Line(p), Tangent::Line(q)) => Some(Tangent::Line(p + q)),
        _ => None,
    }
}

pub fn euclid(p: &SpacePoint) -> &[f64] {
    match p {
        SpacePoint::Euclid(x) => x,
        _ => panic!("not a euclidean point"),
    }
}

/// a_xy = m_x w_xy / (W_x r²) summed into s_xy = ½(a_xy + a_yx), per edge.
pub fn edge_weights(d: &Domain) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mut total = vec![0.0; n];
    for &(x, y, w) in d.edges() {
        total[x] += w;
        total[y] += w;
    }
    let r2 = d.scale() * d.scale();
    let m = d.measure();
    d.edges()
        .iter()
        .map(|&(x, y, w)| {
            let a = |p: usize| {
                if total[p] > 0.0 {
                    m[p] * w / (total[p] * r2)
                } else {
                    0.0
                }
            };
            (x, y, 0.5 * (a(x) + a(y)))
        })
        .collect()
}

/// ½ Σ_x m_x Σ_y w_xy d²(u_x, u_y) / (W_x r²).
pub fn ks_energy(d: &Domain, s: &Space, u: &L2Map) -> f64 {
    let n = d.len();
    let mut total = vec![0.0; n];
    let mut acc = vec![0.0; n];
    for &(x, y, w) in d.edges() {
        let d2 = dist(s, &u.0[x], &u.0[y]).powi(2);
        total[x] += w;
        total[y] += w;
        acc[x] += w * d2;
        acc[y] += w * d2;
    }
    let r2 = d.scale() * d.scale();
    (0..n)
        .filter(|&x| total[x] > 0.0)
        .map(|x| 0.5 * d.measure()[x] * acc[x] / (total[x] * r2))
        .sum()
}

pub fn l2_dist(d: &Domain, s: &Space, u: &L2Map, v: &L2Map) -> f64 {
    d.measure()
        .iter()
        .zip(u.0.iter().zip(&v.0))
        .map(|(m, (p, q))| m * dist(s, p, q).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn l2_geod(s: &Space, u: &L2Map, v: &L2Map, t: f64) -> L2Map {
    L2Map(
        u.0.iter()
            .zip(&v.0)
            .map(|(p, q)| geod(s, p, q, t))
            .collect(),
    )
}

/// Connected random graph: a path plus chords, measures and weights in [0.5, 2].
pub fn domain(r: &mut ChaCha8Rng, nodes: usize, boundary: Vec<usize>) -> Domain {
    let m = (0..nodes).map(|_| r.gen_range(0.5..2.0)).collect();
    let mut edges: Vec<(usize, usize, f64)> = (1..nodes)
        .map(|i| (i - 1, i, r.gen_range(0.5..2.0)))
        .collect();
    for _ in 0..nodes {
        let (i, j) = (r.gen_range(0..nodes), r.gen_range(0..nodes));
        if i != j {
            edges.push((i.min(j), i.max(j), r.gen_range(0.5..2.0)));
        }
    }
    Domain::new(m, edges, 1.0, boundary).expect("valid domain")
}

pub fn map(r: &mut ChaCha8Rng, d: &Domain, s: &Space) -> L2Map {
    L2Map((0..d.len()).map(|_| point(r, s)).collect())
}
