//! Seeded sample generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::maps::{Domain, L2Map};
use crate::spaces::{MetricSpace, Space, SpacePoint};
use crate::tangent::Direction;

/// Seeded sample stream. The same seed and call sequence always yields the
/// same samples.
#[derive(Debug, Clone)]
pub struct Generator {
    rng: ChaCha8Rng,
    /// Coordinate range R: euclidean coordinates in [−R, R], spider
    /// distances in [0, R].
    pub range: f64,
}

/// Radius of the tangent disk sampled for hyperbolic points.
pub const HYPERBOLIC_RADIUS: f64 = 3.0;

impl Generator {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            range: 2.0,
        }
    }

    pub fn with_range(seed: u64, range: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            range,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.gen::<f64>()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn point(&mut self, space: &Space) -> SpacePoint {
        match space {
            Space::Euclidean { dim } => {
                let r = self.range;
                SpacePoint::Euclid((0..*dim).map(|_| self.uniform(-r, r)).collect())
            }
            Space::Spider { rays } => {
                let ray = 1 + self.index(*rays);
                let t = self.uniform(0.0, self.range);
                SpacePoint::spider(ray, t)
            }
            Space::Hyperbolic2 => {
                let r = HYPERBOLIC_RADIUS * self.rng.gen::<f64>().sqrt();
                let th = self.uniform(0.0, std::f64::consts::TAU);
                SpacePoint::hyperbolic(r.sinh() * th.cos(), r.sinh() * th.sin())
            }
            Space::Sphere2 { kappa } => {
                let rad = Space::sphere_radius(*kappa);
                let z = self.uniform(-1.0, 1.0);
                let phi = self.uniform(0.0, std::f64::consts::TAU);
                let s = (1.0 - z * z).max(0.0).sqrt();
                SpacePoint::Sphere([rad * s * phi.cos(), rad * s * phi.sin(), rad * z])
            }
            Space::Product { factors } => {
                SpacePoint::Product(factors.iter().map(|f| self.point(f)).collect())
            }
        }
    }

    /// Point on the geodesic from `center` toward a fresh sample, at distance
    /// at most `radius` from `center`.
    pub fn point_near(
        &mut self,
        space: &Space,
        center: &SpacePoint,
        radius: f64,
    ) -> Result<SpacePoint> {
        let far = self.point(space);
        let d = space.distance(center, &far);
        if d == 0.0 {
            return Ok(far);
        }
        let r = radius * self.rng.gen::<f64>();
        space.geodesic_point(center, &far, (r / d).min(1.0))
    }

    /// Germ toward a fresh sample with speed α ∈ [0.1, 2].
    pub fn direction(&mut self, space: &Space, base: &SpacePoint) -> Result<Direction<SpacePoint>> {
        let target = self.point(space);
        let alpha = self.uniform(0.1, 2.0);
        Direction::toward(base.clone(), target, alpha)
    }

    pub fn map(&mut self, domain: &Domain, target: &Space) -> L2Map {
        L2Map((0..domain.len()).map(|_| self.point(target)).collect())
    }

    /// Connected random graph: a path through all nodes plus `extra` chords.
    pub fn domain(&mut self, nodes: usize, extra: usize) -> Domain {
        let m = (0..nodes).map(|_| self.uniform(0.5, 2.0)).collect();
        let mut edges: Vec<(usize, usize, f64)> = (1..nodes)
            .map(|i| (i - 1, i, self.uniform(0.5, 2.0)))
            .collect();
        if nodes > 2 {
            for _ in 0..extra {
                let i = self.index(nodes);
                let j = self.index(nodes);
                if i != j {
                    edges.push((i.min(j), i.max(j), self.uniform(0.5, 2.0)));
                }
            }
        }
        Domain::new(m, edges, 1.0, vec![]).expect("generated domain is valid")
    }
}

pub fn gen_point(space: &Space, seed: u64) -> SpacePoint {
    Generator::new(seed).point(space)
}

pub fn gen_direction(space: &Space, base: &SpacePoint, seed: u64) -> Result<Direction<SpacePoint>> {
    Generator::new(seed).direction(space, base)
}

pub fn gen_map(domain: &Domain, target: &Space, seed: u64) -> L2Map {
    Generator::new(seed).map(domain, target)
}

/// Candidate points for slope suprema and heuristic prox searches: samples
/// at log-spaced radii around `y` plus the listed anchor points and points
/// on the geodesics toward them.
pub fn candidates_near(
    space: &Space,
    y: &SpacePoint,
    anchors: &[SpacePoint],
    count: usize,
    seed: u64,
) -> Vec<SpacePoint> {
    let mut g = Generator::new(seed);
    let mut out = Vec::with_capacity(count + anchors.len() * 8);
    for a in anchors {
        out.push(a.clone());
        for k in 1..8 {
            if let Ok(p) = space.geodesic_point(y, a, 0.5f64.powi(k)) {
                out.push(p);
            }
        }
    }
    for i in 0..count {
        let radius = 10f64.powf(-4.0 + 4.5 * (i as f64 + 0.5) / count.max(1) as f64);
        if let Ok(p) = g.point_near(space, y, radius) {
            out.push(p);
        }
    }
    out
}
