//! The space L²(Ω, Y) over a finite weighted graph Ω, and the ι map between
//! its tangent directions and per-node sections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{MetricSpace, Space, SpacePoint};
use crate::tangent::{self, ConeValue, Direction, Germ, TangentCone};

/// Largest node or edge count accepted from descriptors.
pub const MAX_NODES: usize = 1 << 20;

/// Finite weighted graph with node measure, scale r and boundary nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainRepr", into = "DomainRepr")]
pub struct Domain {
    m: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    r: f64,
    boundary: Vec<usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
    is_boundary: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainRepr {
    nodes: usize,
    m: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    r: f64,
    #[serde(default)]
    boundary: Vec<usize>,
}

impl TryFrom<DomainRepr> for Domain {
    type Error = Error;

    fn try_from(d: DomainRepr) -> Result<Self> {
        if d.m.len() != d.nodes {
            return Err(Error::InvalidDomain(format!(
                "{} nodes but {} measures",
                d.nodes,
                d.m.len()
            )));
        }
        Domain::new(d.m, d.edges, d.r, d.boundary)
    }
}

impl From<Domain> for DomainRepr {
    fn from(d: Domain) -> Self {
        DomainRepr {
            nodes: d.m.len(),
            m: d.m,
            edges: d.edges,
            r: d.r,
            boundary: d.boundary,
        }
    }
}

impl Domain {
    pub fn new(
        m: Vec<f64>,
        edges: Vec<(usize, usize, f64)>,
        r: f64,
        boundary: Vec<usize>,
    ) -> Result<Self> {
        let n = m.len();
        let bad = |msg: String| Err(Error::InvalidDomain(msg));
        if n == 0 || n > MAX_NODES || edges.len() > MAX_NODES {
            return bad(format!(
                "need 1..={MAX_NODES} nodes and at most as many edges"
            ));
        }
        if let Some(x) = m.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return bad(format!("measure of node {x} is {}, must be positive", m[x]));
        }
        if !(r.is_finite() && r > 0.0) {
            return bad(format!("scale r = {r} must be positive"));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, w) in &edges {
            if i >= n || j >= n {
                return bad(format!("edge ({i}, {j}) refers to a missing node"));
            }
            if i == j {
                return bad(format!("self-loop at node {i}"));
            }
            if !(w.is_finite() && w >= 0.0) {
                return bad(format!("edge ({i}, {j}) has weight {w}"));
            }
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        let mut is_boundary = vec![false; n];
        let mut b = Vec::with_capacity(boundary.len());
        for x in boundary {
            if x >= n {
                return bad(format!("boundary node {x} is missing"));
            }
            if !is_boundary[x] {
                is_boundary[x] = true;
                b.push(x);
            }
        }
        Ok(Self {
            m,
            edges,
            r,
            boundary: b,
            adjacency,
            is_boundary,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidDomain(e.to_string()))
    }

    /// Lumped measure m_x = r·W_x/2, the length of the node's dual cell
    /// when every edge has length r. Then a_xy = w_xy/(2r) is symmetric.
    pub fn lumped(
        n: usize,
        edges: Vec<(usize, usize, f64)>,
        r: f64,
        boundary: Vec<usize>,
    ) -> Result<Self> {
        let mut m = vec![0.0; n];
        for &(i, j, w) in &edges {
            if i < n && j < n {
                m[i] += 0.5 * r * w;
                m[j] += 0.5 * r * w;
            }
        }
        Self::new(m, edges, r, boundary)
    }

    /// Path 0–1–…–(n−1) with unit weights and lumped measure: r inside,
    /// r/2 at the ends.
    pub fn path(n: usize, r: f64, boundary: Vec<usize>) -> Result<Self> {
        let edges = (1..n).map(|i| (i - 1, i, 1.0)).collect();
        Self::lumped(n, edges, r, boundary)
    }

    /// Cycle of n nodes with measure 1/n, unit weights and scale 1/n.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDomain(
                "a cycle needs at least 3 nodes".into(),
            ));
        }
        let edges = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        Self::new(vec![1.0 / n as f64; n], edges, 1.0 / n as f64, vec![])
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn measure(&self) -> &[f64] {
        &self.m
    }

    pub fn total_measure(&self) -> f64 {
        self.m.iter().sum()
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn scale(&self) -> f64 {
        self.r
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, x: usize) -> bool {
        self.is_boundary[x]
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// W_x = Σ_y w_xy.
    pub fn total_weight(&self, x: usize) -> f64 {
        self.adjacency[x].iter().map(|p| p.1).sum()
    }
}

/// A map Ω → Y as its node values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct L2Map(pub Vec<SpacePoint>);

impl L2Map {
    pub fn constant(domain: &Domain, p: &SpacePoint) -> Self {
        L2Map(vec![p.clone(); domain.len()])
    }
}

/// L²(Ω, Y) with d²(u, v) = Σ m_x d²(u(x), v(x)).
#[derive(Debug, Clone, PartialEq)]
pub struct L2Space {
    pub domain: Domain,
    pub target: Space,
}

impl L2Space {
    pub fn new(domain: Domain, target: Space) -> Result<Self> {
        target.validate()?;
        Ok(Self { domain, target })
    }

    pub fn validate_map(&self, u: &L2Map) -> Result<L2Map> {
        if u.0.len() != self.domain.len() {
            return Err(Error::InvalidPoint(format!(
                "map has {} values for {} nodes",
                u.0.len(),
                self.domain.len()
            )));
        }
        u.0.iter()
            .map(|p| self.target.validate_point(p))
            .collect::<Result<_>>()
            .map(L2Map)
    }

    /// Per-node geodesic from `u` to `v`.
    pub fn geodesic(&self, u: &L2Map, v: &L2Map, t: f64) -> Result<L2Map> {
        self.geodesic_point(u, v, t)
    }
}

impl MetricSpace for L2Space {
    type Point = L2Map;

    fn distance(&self, a: &L2Map, b: &L2Map) -> f64 {
        self.domain
            .measure()
            .iter()
            .zip(a.0.iter().zip(&b.0))
            .map(|(m, (p, q))| m * self.target.distance(p, q).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn geodesic_point(&self, a: &L2Map, b: &L2Map, t: f64) -> Result<L2Map> {
        if a.0.len() != b.0.len() {
            return Err(Error::InvalidPoint("maps on different domains".into()));
        }
        a.0.iter()
            .zip(&b.0)
            .map(|(p, q)| self.target.geodesic_point(p, q, t))
            .collect::<Result<_>>()
            .map(L2Map)
    }
}

/// A section of u*T_G Y: one direction per node, based at u(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub base: L2Map,
    pub dirs: Vec<Direction<SpacePoint>>,
}

impl Section {
    pub fn zero(base: &L2Map) -> Self {
        Self {
            base: base.clone(),
            dirs: base.0.iter().map(|p| Direction::zero(p.clone())).collect(),
        }
    }

    fn check_base(&self, other: &Section) -> Result<()> {
        if self.base != other.base || self.dirs.len() != other.dirs.len() {
            return Err(Error::MismatchedBase);
        }
        Ok(())
    }

    pub fn pointwise_norms(&self, target: &Space) -> Vec<f64> {
        self.dirs.iter().map(|d| tangent::norm(target, d)).collect()
    }

    /// (Σ m_x |S_x|²)^{1/2}.
    pub fn l2_norm(&self, domain: &Domain, target: &Space) -> f64 {
        domain
            .measure()
            .iter()
            .zip(self.pointwise_norms(target))
            .map(|(m, n)| m * n * n)
            .sum::<f64>()
            .sqrt()
    }

    pub fn pointwise_inner(&self, target: &Space, other: &Section) -> Result<Vec<f64>> {
        self.check_base(other)?;
        self.dirs
            .iter()
            .zip(&other.dirs)
            .map(|(a, b)| tangent::inner(target, a, b))
            .collect()
    }

    /// Σ m_x ⟨S_x, T_x⟩.
    pub fn l2_inner(&self, domain: &Domain, target: &Space, other: &Section) -> Result<f64> {
        Ok(domain
            .measure()
            .iter()
            .zip(self.pointwise_inner(target, other)?)
            .map(|(m, i)| m * i)
            .sum())
    }

    /// (Σ m_x d²(S_x, T_x))^{1/2}.
    pub fn l2_distance(&self, domain: &Domain, target: &Space, other: &Section) -> Result<f64> {
        self.check_base(other)?;
        let mut acc = 0.0;
        for ((m, a), b) in domain.measure().iter().zip(&self.dirs).zip(&other.dirs) {
            acc += m * target.cone_distance(a, b)?.value.powi(2);
        }
        Ok(acc.sqrt())
    }

    pub fn oplus(&self, target: &Space, other: &Section) -> Result<Section> {
        self.check_base(other)?;
        let dirs = self
            .dirs
            .iter()
            .zip(&other.dirs)
            .map(|(a, b)| target.oplus(a, b))
            .collect::<Result<_>>()?;
        Ok(Section {
            base: self.base.clone(),
            dirs,
        })
    }

    /// Per-node scaling x ↦ f(x)·S_x with f ≥ 0.
    pub fn scale(&self, f: &[f64]) -> Result<Section> {
        if f.len() != self.dirs.len() {
            return Err(Error::MismatchedBase);
        }
        let dirs = self
            .dirs
            .iter()
            .zip(f)
            .map(|(d, c)| d.scale(*c))
            .collect::<Result<_>>()?;
        Ok(Section {
            base: self.base.clone(),
            dirs,
        })
    }
}

/// ι(v)_x = α·germ(u(x) → w(x)) for v the germ toward w with speed α.
pub fn iota(v: &Direction<L2Map>) -> Result<Section> {
    let u = &v.base;
    let dirs = match &v.germ {
        Germ::Zero => u.0.iter().map(|p| Direction::zero(p.clone())).collect(),
        Germ::Toward { target, alpha } => {
            if target.0.len() != u.0.len() {
                return Err(Error::MismatchedBase);
            }
            u.0.iter()
                .zip(&target.0)
                .map(|(p, q)| Direction::toward(p.clone(), q.clone(), *alpha))
                .collect::<Result<_>>()?
        }
    };
    Ok(Section {
        base: u.clone(),
        dirs,
    })
}

/// Inverse of ι on germ sections: common speed α = max α_x and targets
/// moved to fraction α_x/α of each node geodesic.
pub fn iota_inv(target: &Space, s: &Section) -> Result<Direction<L2Map>> {
    if s.dirs.len() != s.base.0.len() {
        return Err(Error::MismatchedBase);
    }
    for (d, p) in s.dirs.iter().zip(&s.base.0) {
        if d.base != *p && target.distance(&d.base, p) > 1e-12 {
            return Err(Error::MismatchedBase);
        }
    }
    let alpha = s.dirs.iter().map(Direction::alpha).fold(0.0, f64::max);
    if alpha == 0.0 {
        return Ok(Direction::zero(s.base.clone()));
    }
    let points = s
        .dirs
        .iter()
        .zip(&s.base.0)
        .map(|(d, p)| match &d.germ {
            Germ::Zero => Ok(p.clone()),
            Germ::Toward {
                target: w,
                alpha: a,
            } => target.geodesic_point(p, w, a / alpha),
        })
        .collect::<Result<_>>()?;
    Direction::toward(s.base.clone(), L2Map(points), alpha)
}

impl TangentCone for L2Space {
    fn cone_distance(&self, v: &Direction<L2Map>, w: &Direction<L2Map>) -> Result<ConeValue> {
        let d = iota(v)?.l2_distance(&self.domain, &self.target, &iota(w)?)?;
        Ok(ConeValue::exact(d))
    }

    fn oplus(&self, v: &Direction<L2Map>, w: &Direction<L2Map>) -> Result<Direction<L2Map>> {
        iota_inv(&self.target, &iota(v)?.oplus(&self.target, &iota(w)?)?)
    }

    /// Per-node affine combination; nodes where the combination leaves the
    /// cone keep the last direction.
    fn affine_combination(
        &self,
        coeffs: &[f64],
        dirs: &[Direction<L2Map>],
    ) -> Result<Option<Direction<L2Map>>> {
        let Some(last) = dirs.last() else {
            return Ok(None);
        };
        let sections = dirs.iter().map(iota).collect::<Result<Vec<_>>>()?;
        let base = &last.base;
        let mut out = Vec::with_capacity(base.0.len());
        for x in 0..base.0.len() {
            let node: Vec<Direction<SpacePoint>> =
                sections.iter().map(|s| s.dirs[x].clone()).collect();
            let combined = self.target.affine_combination(coeffs, &node)?;
            out.push(combined.unwrap_or_else(|| node[node.len() - 1].clone()));
        }
        iota_inv(
            &self.target,
            &Section {
                base: base.clone(),
                dirs: out,
            },
        )
        .map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen::Generator;
    use crate::spaces::cat0_defect;

    fn three_nodes() -> Domain {
        Domain::new(
            vec![1.0, 2.0, 1.0],
            vec![(0, 1, 1.0), (1, 2, 1.0)],
            1.0,
            vec![0],
        )
        .unwrap()
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::new(vec![1.0], vec![(0, 0, 1.0)], 1.0, vec![]).is_err());
        assert!(Domain::new(vec![1.0, 1.0], vec![(0, 1, -1.0)], 1.0, vec![]).is_err());
        assert!(Domain::new(vec![0.0], vec![], 1.0, vec![]).is_err());
        assert!(Domain::new(vec![1.0], vec![], 0.0, vec![]).is_err());
        assert!(Domain::new(vec![1.0], vec![], 1.0, vec![3]).is_err());
        let d = Domain::from_json(
            r#"{"nodes":2,"m":[1,1],"edges":[[0,1,0.5]],"r":1,"boundary":[1,1]}"#,
        )
        .unwrap();
        assert_eq!(d.boundary(), &[1]);
        assert_eq!(d.total_weight(0), 0.5);
        assert!(Domain::from_json(r#"{"nodes":3,"m":[1,1],"edges":[],"r":1}"#).is_err());
        let back: Domain = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn distance_examples() {
        let s = L2Space::new(three_nodes(), Space::euclidean(1)).unwrap();
        let u = L2Map(vec![SpacePoint::euclid(&[0.0]); 3]);
        let v = L2Map(vec![
            SpacePoint::euclid(&[1.0]),
            SpacePoint::euclid(&[-1.0]),
            SpacePoint::euclid(&[2.0]),
        ]);
        assert!((s.distance(&u, &v) - 7f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.distance(&u, &u), 0.0);
        let a = L2Map::constant(&s.domain, &SpacePoint::euclid(&[1.0]));
        assert!((s.distance(&u, &a) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn geodesic_distance_scales_with_t() {
        let mut g = Generator::new(5);
        let domain = g.domain(8, 4);
        let s = L2Space::new(domain, Space::Hyperbolic2).unwrap();
        let u = g.map(&s.domain, &s.target);
        let v = g.map(&s.domain, &s.target);
        let mid = s.geodesic(&u, &v, 0.3).unwrap();
        assert!((s.distance(&u, &mid) - 0.3 * s.distance(&u, &v)).abs() < 1e-9);
    }

    #[test]
    fn l2_over_spider_is_cat0_on_samples() {
        let mut g = Generator::new(8);
        let domain = g.domain(6, 3);
        let s = L2Space::new(domain, Space::spider(3)).unwrap();
        for _ in 0..200 {
            let (a, b, c) = (
                g.map(&s.domain, &s.target),
                g.map(&s.domain, &s.target),
                g.map(&s.domain, &s.target),
            );
            let t = g.uniform(0.0, 1.0);
            assert!(cat0_defect(&s, &a, &b, &c, t).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn iota_of_constant_germ() {
        let d = three_nodes();
        let s = L2Space::new(d.clone(), Space::euclidean(2)).unwrap();
        let u = L2Map::constant(&d, &SpacePoint::euclid(&[0.0, 0.0]));
        let w = L2Map::constant(&d, &SpacePoint::euclid(&[3.0, 4.0]));
        let v = Direction::toward(u.clone(), w, 0.5).unwrap();
        let sec = iota(&v).unwrap();
        let expected = d.total_measure().sqrt() * 0.5 * 5.0;
        assert!((sec.l2_norm(&d, &s.target) - expected).abs() < 1e-12);
        assert!((tangent::norm(&s, &v) - expected).abs() < 1e-12);
        assert_eq!(
            iota(&Direction::zero(u.clone())).unwrap(),
            Section::zero(&u)
        );
    }

    #[test]
    fn iota_inv_inverts_iota() {
        let mut g = Generator::new(2);
        let domain = g.domain(7, 2);
        let s = L2Space::new(domain, Space::spider(3)).unwrap();
        let u = g.map(&s.domain, &s.target);
        let w = g.map(&s.domain, &s.target);
        let v = Direction::toward(u.clone(), w, 1.7).unwrap();
        let back = iota_inv(&s.target, &iota(&v).unwrap()).unwrap();
        assert!(s.cone_distance(&v, &back).unwrap().value < 1e-12);
        // A section with different speeds per node.
        let sec = iota(&v)
            .unwrap()
            .scale(&[0.0, 1.0, 2.0, 0.5, 3.0, 1.0, 0.25])
            .unwrap();
        let again = iota(&iota_inv(&s.target, &sec).unwrap()).unwrap();
        assert!(sec.l2_distance(&s.domain, &s.target, &again).unwrap() < 1e-12);
    }

    #[test]
    fn scaling_doubles_norms() {
        let mut g = Generator::new(3);
        let domain = g.domain(5, 1);
        let s = L2Space::new(domain, Space::euclidean(2)).unwrap();
        let u = g.map(&s.domain, &s.target);
        let v = Direction::toward(u, g.map(&s.domain, &s.target), 1.0).unwrap();
        let sec = iota(&v).unwrap();
        let doubled = sec.scale(&[2.0; 5]).unwrap();
        for (a, b) in sec
            .pointwise_norms(&s.target)
            .iter()
            .zip(doubled.pointwise_norms(&s.target))
        {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_bases_are_rejected() {
        let d = three_nodes();
        let u = L2Map::constant(&d, &SpacePoint::euclid(&[0.0]));
        let mut sec = Section::zero(&u);
        sec.dirs[1] = Direction::zero(SpacePoint::euclid(&[1.0]));
        assert_eq!(
            iota_inv(&Space::euclidean(1), &sec),
            Err(Error::MismatchedBase)
        );
    }
}
