//! Discrete Korevaar–Schoen energy on a weighted graph, harmonic maps and
//! the Laplacian of CAT(0)-valued maps.
//!
//! The energy density at scale r is
//! `e(x) = Σ_y w_xy d²(u(x), u(y)) / (W_x r²)` with `W_x = Σ_y w_xy`, and
//! `E(u) = ½ Σ_x m_x e(x)`. Written over edges this is `Σ_{xy} s_xy d²`
//! with `s_xy = ½(a_xy + a_yx)` and `a_xy = m_x w_xy / (W_x r²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{minimal_selection, Functional, SelectionSchedule};
use crate::maps::{iota, Domain, L2Map, L2Space, Section};
use crate::spaces::{weighted_frechet_mean, MetricSpace, Space, SpacePoint};
use crate::tangent::{self, Direction};

/// Default calibration constant between the discrete density and the
/// continuum |du|²; see `chain_rule_check`.
pub const KAPPA_NORM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Gauss–Seidel sweeps stop once the prox objective drops by less.
    pub sweep_tol: f64,
    pub max_sweeps: usize,
    /// Prox step of the outer minimizing-movement loop in `harmonic`.
    pub tau: f64,
    pub max_outer: usize,
    /// `harmonic` stops once an outer step moves the map by less (L²).
    pub step_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            sweep_tol: 1e-12,
            max_sweeps: 200_000,
            tau: 1e3,
            max_outer: 1000,
            step_tol: 1e-12,
        }
    }
}

/// Per-edge weights s_xy and the adjacency they induce.
#[derive(Debug, Clone, PartialEq)]
struct Links {
    edges: Vec<(usize, usize, f64)>,
    by_node: Vec<Vec<(usize, f64)>>,
}

impl Links {
    fn new(domain: &Domain) -> Self {
        let r2 = domain.scale().powi(2);
        let m = domain.measure();
        let a = |x: usize, w: f64| {
            let wx = domain.total_weight(x);
            if wx > 0.0 {
                m[x] * w / (wx * r2)
            } else {
                0.0
            }
        };
        let edges: Vec<(usize, usize, f64)> = domain
            .edges()
            .iter()
            .map(|&(x, y, w)| (x, y, 0.5 * (a(x, w) + a(y, w))))
            .collect();
        let mut by_node = vec![Vec::new(); domain.len()];
        for &(x, y, s) in &edges {
            by_node[x].push((y, s));
            by_node[y].push((x, s));
        }
        Self { edges, by_node }
    }
}

/// E^KS on L²(Ω, Y), optionally with prescribed boundary values (E^KS_ū).
#[derive(Debug, Clone, PartialEq)]
pub struct KsEnergy {
    space: L2Space,
    boundary_data: Option<L2Map>,
    links: Links,
    kappa_norm: f64,
}

/// Result of `harmonic`: the map and the per-iteration log.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSolution {
    pub map: L2Map,
    pub log: Vec<LogRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iter: usize,
    pub energy: f64,
    /// d(u_k, u_{k+1})/τ, an upper bound for the slope at u_{k+1}.
    pub slope_est: f64,
}

impl KsEnergy {
    pub fn new(domain: Domain, target: Space, boundary_data: Option<L2Map>) -> Result<Self> {
        let space = L2Space::new(domain, target)?;
        let boundary_data = boundary_data.map(|b| space.validate_map(&b)).transpose()?;
        let links = Links::new(&space.domain);
        Ok(Self {
            space,
            boundary_data,
            links,
            kappa_norm: KAPPA_NORM,
        })
    }

    pub fn with_kappa_norm(mut self, kappa_norm: f64) -> Self {
        self.kappa_norm = kappa_norm;
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.space.domain
    }

    pub fn target(&self) -> &Space {
        &self.space.target
    }

    pub fn l2(&self) -> &L2Space {
        &self.space
    }

    pub fn boundary_data(&self) -> Option<&L2Map> {
        self.boundary_data.as_ref()
    }

    fn is_fixed(&self, x: usize) -> bool {
        self.boundary_data.is_some() && self.space.domain.is_boundary(x)
    }

    pub fn density(&self, u: &L2Map) -> Vec<f64> {
        let d = &self.space.domain;
        let r2 = d.scale().powi(2);
        (0..d.len())
            .map(|x| {
                let wx = d.total_weight(x);
                if wx == 0.0 {
                    return 0.0;
                }
                let acc: f64 = d
                    .neighbors(x)
                    .iter()
                    .map(|&(y, w)| w * self.space.target.distance(&u.0[x], &u.0[y]).powi(2))
                    .sum();
                acc / (wx * r2)
            })
            .collect()
    }

    /// E^KS(u) = ½ Σ m_x e(x).
    pub fn energy(&self, u: &L2Map) -> f64 {
        self.links
            .edges
            .iter()
            .map(|&(x, y, s)| s * self.space.target.distance(&u.0[x], &u.0[y]).powi(2))
            .sum()
    }

    /// E^KS_ū: +∞ unless u agrees with the boundary data on boundary nodes.
    pub fn energy_b(&self, u: &L2Map) -> f64 {
        if u.0.len() != self.space.domain.len() {
            return f64::INFINITY;
        }
        if let Some(b) = &self.boundary_data {
            if self
                .space
                .domain
                .boundary()
                .iter()
                .any(|&x| u.0[x] != b.0[x])
            {
                return f64::INFINITY;
            }
        }
        self.energy(u)
    }

    /// The same quadratic form applied to a real function on the nodes.
    pub fn energy_of_function(&self, f: &[f64]) -> f64 {
        self.links
            .edges
            .iter()
            .map(|&(x, y, s)| s * (f[x] - f[y]).powi(2))
            .sum()
    }

    /// B(h, g) = Σ_{xy} s_xy (h_y − h_x)(g_y − g_x), so that E(h) = B(h, h).
    pub fn dirichlet_form(&self, h: &[f64], g: &[f64]) -> f64 {
        self.links
            .edges
            .iter()
            .map(|&(x, y, s)| s * (h[y] - h[x]) * (g[y] - g[x]))
            .sum()
    }

    fn check_boundary(&self, u: &L2Map) -> Result<()> {
        if !self.energy_b(u).is_finite() {
            return Err(Error::OutsideDomain);
        }
        Ok(())
    }

    /// Node-wise Gauss–Seidel minimization of E(·) + Σ m_x d²(·, y_x)/(2τ)
    /// in ascending node order. `omega > 1` over-relaxes euclidean targets.
    pub fn prox_gs(
        &self,
        tau: f64,
        y: &L2Map,
        omega: f64,
        params: &SolverParams,
    ) -> Result<(L2Map, usize)> {
        self.check_boundary(y)?;
        let target = &self.space.target;
        let m = self.space.domain.measure();
        let anchor = |x: usize| {
            if tau.is_finite() {
                m[x] / (2.0 * tau)
            } else {
                0.0
            }
        };
        let objective = |u: &L2Map| {
            let mut v = self.energy(u);
            if tau.is_finite() {
                v += (0..u.0.len())
                    .map(|x| anchor(x) * target.distance(&u.0[x], &y.0[x]).powi(2))
                    .sum::<f64>();
            }
            v
        };
        let euclid = matches!(target, Space::Euclidean { .. });
        let omega = if euclid { omega } else { 1.0 };
        let mut u = y.clone();
        let mut value = objective(&u);
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for sweep in 1..=params.max_sweeps {
            let mut moved = 0.0f64;
            for x in 0..u.0.len() {
                if self.is_fixed(x) {
                    continue;
                }
                pts.clear();
                ws.clear();
                for &(z, s) in &self.links.by_node[x] {
                    pts.push(u.0[z].clone());
                    ws.push(s);
                }
                if tau.is_finite() {
                    pts.push(y.0[x].clone());
                    ws.push(anchor(x));
                }
                if pts.is_empty() || ws.iter().sum::<f64>() <= 0.0 {
                    continue;
                }
                let mut next = weighted_frechet_mean(target, &pts, &ws, &u.0[x])?;
                if omega != 1.0 {
                    if let (SpacePoint::Euclid(a), SpacePoint::Euclid(b)) = (&u.0[x], &next) {
                        next = SpacePoint::Euclid(
                            a.iter().zip(b).map(|(a, b)| a + omega * (b - a)).collect(),
                        );
                    }
                }
                moved = moved.max(target.distance(&u.0[x], &next));
                u.0[x] = next;
            }
            let next_value = objective(&u);
            let decrease = value - next_value;
            value = next_value;
            if decrease < params.sweep_tol || moved == 0.0 {
                return Ok((u, sweep));
            }
        }
        Err(Error::NoConvergence(format!(
            "Gauss–Seidel prox still decreasing after {} sweeps",
            params.max_sweeps
        )))
    }

    fn sor_factor(&self) -> f64 {
        let n = self.space.domain.len() as f64;
        2.0 / (1.0 + (std::f64::consts::PI / (n + 1.0)).sin())
    }

    /// Minimizer of E^KS_ū by minimizing movements with step `params.tau`,
    /// each step solved by Gauss–Seidel sweeps.
    pub fn harmonic(&self, init: &L2Map, params: &SolverParams) -> Result<HarmonicSolution> {
        let (sol, converged) = self.harmonic_partial(init, params)?;
        if !converged {
            return Err(Error::NoConvergence(format!(
                "harmonic map not reached in {} outer steps",
                params.max_outer
            )));
        }
        Ok(sol)
    }

    /// As `harmonic`, but returns the last iterate and its log together
    /// with whether the step tolerance was reached.
    pub fn harmonic_partial(
        &self,
        init: &L2Map,
        params: &SolverParams,
    ) -> Result<(HarmonicSolution, bool)> {
        if self.boundary_data.is_none() || self.space.domain.boundary().is_empty() {
            return Err(Error::InvalidDomain(
                "harmonic maps need boundary nodes and boundary data".into(),
            ));
        }
        let mut u = self.space.validate_map(init)?;
        self.check_boundary(&u)?;
        let omega = self.sor_factor();
        let mut log = vec![LogRow {
            iter: 0,
            energy: self.energy(&u),
            slope_est: f64::NAN,
        }];
        for iter in 1..=params.max_outer {
            let (next, _) = self.prox_gs(params.tau, &u, omega, params)?;
            let step = self.space.distance(&u, &next);
            u = next;
            log.push(LogRow {
                iter,
                energy: self.energy(&u),
                slope_est: step / params.tau,
            });
            if step <= params.step_tol {
                return Ok((HarmonicSolution { map: u, log }, true));
            }
        }
        Ok((HarmonicSolution { map: u, log }, false))
    }

    /// Δ_ū u: the minimal selection of −∂⁻E^KS_ū at u, pushed through ι.
    pub fn laplacian(&self, u: &L2Map, schedule: &SelectionSchedule) -> Result<Section> {
        self.check_boundary(u)?;
        let sel = minimal_selection(self, u, schedule)?;
        iota(&sel.direction)
    }

    /// LHS − RHS of the first-variation inequality for the geodesic from u
    /// toward v. The right side is the difference quotient of E along the
    /// geodesic, extrapolated linearly to t = 0 from the two smallest t.
    pub fn first_variation_check(
        &self,
        u: &L2Map,
        v: &L2Map,
        lap: &Section,
        ts: &[f64],
    ) -> Result<f64> {
        let target = &self.space.target;
        let m = self.space.domain.measure();
        let mut lhs = 0.0;
        for x in 0..u.0.len() {
            if target.distance(&u.0[x], &v.0[x]) == 0.0 {
                continue;
            }
            let germ = Direction::toward(u.0[x].clone(), v.0[x].clone(), 1.0)?;
            lhs -= m[x] * tangent::inner(target, &lap.dirs[x], &germ)?;
        }
        let mut ts = ts.to_vec();
        ts.sort_by(f64::total_cmp);
        if ts.len() < 2 || ts[0] <= 0.0 {
            return Err(Error::Empty("first variation needs two positive times"));
        }
        let e0 = self.energy_b(u);
        let q = |t: f64| -> Result<f64> {
            Ok((self.energy_b(&self.space.geodesic(u, v, t)?) - e0) / t)
        };
        let (q1, q2) = (q(ts[0])?, q(ts[1])?);
        let rhs = q1 - ts[0] * (q2 - q1) / (ts[1] - ts[0]);
        Ok(lhs - rhs)
    }

    /// E(G_t) − (1 − t)E(u) − tE(v).
    pub fn convexity_defect(&self, u: &L2Map, v: &L2Map, t: f64) -> Result<f64> {
        let g = self.space.geodesic(u, v, t)?;
        Ok(self.energy(&g) - (1.0 - t) * self.energy(u) - t * self.energy(v))
    }

    /// E(G_t) + t(1 − t)E(d) − (1 − t)E(u) − tE(v) with d(x) = d(u(x), v(x)).
    pub fn improved_convexity_check(&self, u: &L2Map, v: &L2Map, t: f64) -> Result<f64> {
        let d: Vec<f64> =
            u.0.iter()
                .zip(&v.0)
                .map(|(p, q)| self.space.target.distance(p, q))
                .collect();
        Ok(self.convexity_defect(u, v, t)? + t * (1.0 - t) * self.energy_of_function(&d))
    }

    /// −B(f∘u, g) − λ·κ_norm·Σ g(x) m_x e(x): the weak form of
    /// Δ(f∘u) ≥ λ κ_norm |du|² tested against g ≥ 0.
    pub fn chain_rule_check<F: Fn(&SpacePoint) -> f64>(
        &self,
        u: &L2Map,
        f: F,
        lambda: f64,
        g: &[f64],
    ) -> Result<f64> {
        let n = self.space.domain.len();
        if g.len() != n || u.0.len() != n {
            return Err(Error::InvalidPoint(
                "test function and map must live on the domain nodes".into(),
            ));
        }
        if g.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidPoint(
                "test function must be nonnegative".into(),
            ));
        }
        let h: Vec<f64> = u.0.iter().map(&f).collect();
        let e = self.density(u);
        let m = self.space.domain.measure();
        let mass: f64 = (0..n).map(|x| g[x] * m[x] * e[x]).sum();
        Ok(-self.dirichlet_form(&h, g) - lambda * self.kappa_norm * mass)
    }

    /// Euclidean L² gradient norm (Σ_free |∂_x E|²/m_x)^{1/2}.
    fn euclid_slope(&self, u: &L2Map) -> Option<f64> {
        if !matches!(self.space.target, Space::Euclidean { .. }) {
            return None;
        }
        let m = self.space.domain.measure();
        let mut acc = 0.0;
        for x in 0..u.0.len() {
            if self.is_fixed(x) {
                continue;
            }
            let SpacePoint::Euclid(ux) = &u.0[x] else {
                return None;
            };
            let mut g = vec![0.0; ux.len()];
            for &(y, s) in &self.links.by_node[x] {
                let SpacePoint::Euclid(uy) = &u.0[y] else {
                    return None;
                };
                for (gi, (a, b)) in g.iter_mut().zip(ux.iter().zip(uy)) {
                    *gi += 2.0 * s * (a - b);
                }
            }
            acc += g.iter().map(|c| c * c).sum::<f64>() / m[x];
        }
        Some(acc.sqrt())
    }
}

impl Functional for KsEnergy {
    type Space = L2Space;

    fn space(&self) -> &L2Space {
        &self.space
    }

    fn eval(&self, u: &L2Map) -> f64 {
        self.energy_b(u)
    }

    fn lambda(&self) -> f64 {
        0.0
    }

    fn exact_prox(&self, tau: f64, y: &L2Map) -> Option<Result<L2Map>> {
        Some(
            self.prox_gs(tau, y, 1.0, &SolverParams::default())
                .map(|p| p.0),
        )
    }

    fn slope_closed_form(&self, u: &L2Map) -> Option<f64> {
        self.euclid_slope(u)
    }

    /// Prox points at log-spaced steps and dyadic points on the geodesics
    /// toward them; by convexity the difference quotients along these
    /// geodesics increase toward u.
    fn candidates(&self, u: &L2Map, count: usize, _seed: u64) -> Vec<L2Map> {
        let steps = count.clamp(1, 12);
        let mut out = Vec::new();
        for i in 0..steps {
            let tau = 10f64.powf(-8.0 + 8.0 * i as f64 / steps.max(2).saturating_sub(1) as f64);
            let Ok((p, _)) = self.prox_gs(tau, u, 1.0, &SolverParams::default()) else {
                continue;
            };
            for k in 0..24 {
                if let Ok(q) = self.space.geodesic(u, &p, 0.5f64.powi(k)) {
                    out.push(q);
                }
            }
        }
        out
    }

    fn name(&self) -> String {
        "ks_energy".into()
    }
}

/// Default horizons for the Laplacian: the KS flow is stiff (eigenvalues of
/// order 1/r²), so the difference quotients need short horizons.
pub fn laplacian_schedule() -> SelectionSchedule {
    SelectionSchedule {
        hs: vec![1e-5, 1e-6, 1e-7],
        ..SelectionSchedule::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::slope;
    use crate::harness::gen::Generator;
    use crate::tangent::TangentCone;

    fn e1(v: f64) -> SpacePoint {
        SpacePoint::euclid(&[v])
    }

    #[test]
    fn path_density_and_energy() {
        let d = Domain::path(3, 1.0, vec![]).unwrap();
        let k = KsEnergy::new(d, Space::euclidean(1), None).unwrap();
        let u = L2Map(vec![e1(0.0), e1(1.0), e1(2.0)]);
        assert_eq!(k.density(&u), vec![1.0, 1.0, 1.0]);
        // lumped measure [½, 1, ½]
        assert!((k.energy(&u) - 1.0).abs() < 1e-15);
        let uniform =
            Domain::new(vec![1.0; 3], vec![(0, 1, 1.0), (1, 2, 1.0)], 1.0, vec![]).unwrap();
        let ku = KsEnergy::new(uniform, Space::euclidean(1), None).unwrap();
        assert!((ku.energy(&u) - 1.5).abs() < 1e-15);
        let c = L2Map(vec![e1(3.0); 3]);
        assert_eq!(k.energy(&c), 0.0);
        let iso = Domain::new(vec![1.0, 1.0], vec![], 1.0, vec![]).unwrap();
        let k2 = KsEnergy::new(iso, Space::euclidean(1), None).unwrap();
        assert_eq!(k2.density(&L2Map(vec![e1(0.0), e1(5.0)])), vec![0.0, 0.0]);
    }

    #[test]
    fn edge_form_matches_density_form() {
        let mut g = Generator::new(6);
        let d = g.domain(9, 6);
        let k = KsEnergy::new(d.clone(), Space::spider(3), None).unwrap();
        let u = g.map(&d, &Space::spider(3));
        let half_sum: f64 = 0.5
            * d.measure()
                .iter()
                .zip(k.density(&u))
                .map(|(m, e)| m * e)
                .sum::<f64>();
        assert!((k.energy(&u) - half_sum).abs() < 1e-12 * (1.0 + half_sum));
    }

    #[test]
    fn boundary_mismatch_is_infinite() {
        let d = Domain::path(3, 1.0, vec![0, 2]).unwrap();
        let b = L2Map(vec![e1(0.0), e1(0.0), e1(2.0)]);
        let k = KsEnergy::new(d, Space::euclidean(1), Some(b)).unwrap();
        assert!(k
            .energy_b(&L2Map(vec![e1(0.0), e1(5.0), e1(2.0)]))
            .is_finite());
        assert_eq!(
            k.energy_b(&L2Map(vec![e1(0.1), e1(1.0), e1(2.0)])),
            f64::INFINITY
        );
    }

    #[test]
    fn path_harmonic_is_linear() {
        let d = Domain::path(5, 1.0, vec![0, 4]).unwrap();
        let b = L2Map(vec![e1(0.0), e1(0.0), e1(0.0), e1(0.0), e1(2.0)]);
        let k = KsEnergy::new(d, Space::euclidean(1), Some(b.clone())).unwrap();
        let sol = k.harmonic(&b, &SolverParams::default()).unwrap();
        for (i, p) in sol.map.0.iter().enumerate() {
            assert!(k.target().distance(p, &e1(0.5 * i as f64)) < 1e-10);
        }
        assert!(sol
            .log
            .windows(2)
            .all(|w| w[1].energy <= w[0].energy + 1e-15));
    }

    #[test]
    fn all_boundary_is_unchanged() {
        let d = Domain::path(3, 1.0, vec![0, 1, 2]).unwrap();
        let b = L2Map(vec![e1(0.0), e1(5.0), e1(2.0)]);
        let k = KsEnergy::new(d, Space::euclidean(1), Some(b.clone())).unwrap();
        assert_eq!(k.harmonic(&b, &SolverParams::default()).unwrap().map, b);
    }

    #[test]
    fn euclid_laplacian_matches_graph_gradient() {
        // Oracle: the L² gradient of the quadratic form, −∂_x E / m_x.
        let mut g = Generator::new(12);
        let d = g.domain(6, 3);
        let k = KsEnergy::new(d.clone(), Space::euclidean(2), None).unwrap();
        let u = g.map(&d, &Space::euclidean(2));
        let lap = k.laplacian(&u, &laplacian_schedule()).unwrap();
        let eps = 1e-6;
        for x in 0..d.len() {
            let SpacePoint::Euclid(ux) = &u.0[x] else {
                panic!()
            };
            let mut grad = [0.0; 2];
            for (i, gi) in grad.iter_mut().enumerate() {
                let mut plus = u.clone();
                let mut minus = u.clone();
                let mut p = ux.clone();
                p[i] += eps;
                plus.0[x] = SpacePoint::Euclid(p.clone());
                p[i] -= 2.0 * eps;
                minus.0[x] = SpacePoint::Euclid(p);
                *gi = -(k.energy(&plus) - k.energy(&minus)) / (2.0 * eps) / d.measure()[x];
            }
            let oracle = Direction::toward(
                u.0[x].clone(),
                SpacePoint::euclid(&[ux[0] + grad[0], ux[1] + grad[1]]),
                1.0,
            )
            .unwrap();
            let err = k
                .target()
                .cone_distance(&lap.dirs[x], &oracle)
                .unwrap()
                .value;
            let scale = 1.0 + tangent::norm(k.target(), &oracle);
            assert!(err < 1e-3 * scale, "node {x}: {err}");
        }
        let sl = slope(&k, &u).unwrap().value;
        assert!((lap.l2_norm(&d, k.target()) - sl).abs() < 1e-3 * (1.0 + sl));
    }

    #[test]
    fn improved_convexity_is_parallelogram_defect_in_flat_case() {
        let mut g = Generator::new(4);
        let d = g.domain(7, 4);
        let k = KsEnergy::new(d.clone(), Space::euclidean(1), None).unwrap();
        let u = g.map(&d, &Space::euclidean(1));
        let v = g.map(&d, &Space::euclidean(1));
        // In 1-D, d = |u − v| and E(|f|) ≤ E(f) with equality iff u − v
        // keeps one sign along every edge.
        let diff: Vec<f64> = (0..d.len())
            .map(|x| match (&u.0[x], &v.0[x]) {
                (SpacePoint::Euclid(a), SpacePoint::Euclid(b)) => a[0] - b[0],
                _ => unreachable!(),
            })
            .collect();
        let t = 0.3;
        let oracle = t
            * (1.0 - t)
            * (k.energy_of_function(&diff.iter().map(|c| c.abs()).collect::<Vec<_>>())
                - k.energy_of_function(&diff));
        let got = k.improved_convexity_check(&u, &v, t).unwrap();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
        assert!(got <= 1e-12);
    }

    #[test]
    fn chain_rule_vanishes_for_zero_test_function() {
        let d = Domain::path(5, 0.25, vec![0, 4]).unwrap();
        let k = KsEnergy::new(d, Space::euclidean(1), None).unwrap();
        let u = L2Map((0..5).map(|i| e1(i as f64)).collect());
        assert_eq!(
            k.chain_rule_check(&u, |p| k.target().distance(p, &e1(0.0)), 1.0, &[0.0; 5])
                .unwrap(),
            0.0
        );
    }
}
