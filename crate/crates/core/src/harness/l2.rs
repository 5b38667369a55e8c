//! L²-map, Korevaar–Schoen and Laplacian suites.

use std::f64::consts::{PI, TAU};

use super::geometry::is_flat;
use super::{samples, space_label, spaces, stream, Check, PropertyReport};
use crate::error::Result;
use crate::flow::{check_subdifferential, slope};
use crate::ks::KsEnergy;
use crate::maps::{iota, iota_inv, Domain, L2Map, L2Space};
use crate::scenario::ScenarioConfig;
use crate::spaces::{cat0_defect, MetricSpace, Space, SpacePoint};
use crate::tangent::{
    cone_distance_dyadic, norm, oplus_dyadic, Direction, DyadicGrid, Germ, TangentCone,
};

fn random_domain(g: &mut super::gen::Generator) -> Domain {
    let nodes = 5 + g.index(16);
    let extra = g.index(nodes);
    g.domain(nodes, extra)
}

pub(super) fn l2_structure(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let n = samples(cfg, 1000);
    let mut out = Vec::new();
    for target in spaces(cfg)
        .into_iter()
        .filter(|s| s.curvature().kappa <= 0.0)
    {
        let label = space_label(&target);
        let mut g = stream(cfg.seed, &format!("l2/{label}"));
        let names = [
            "l2_cat0",
            "l2_geodesic",
            "e1",
            "e2",
            "e3",
            "e4",
            "e5",
            "aggregation",
            "iota_round_trip",
        ];
        let mut c: Vec<Check> = names
            .iter()
            .map(|p| Check::new(format!("{p}[{label}]")))
            .collect();
        for _ in 0..n {
            let l2 = L2Space::new(random_domain(&mut g), target.clone())?;
            let (u, v, w) = (
                g.map(&l2.domain, &target),
                g.map(&l2.domain, &target),
                g.map(&l2.domain, &target),
            );
            let t = g.uniform(0.0, 1.0);
            c[0].record(-cat0_defect(&l2, &u, &v, &w, t)?);
            c[1].record(
                (l2.distance(&u, &l2.geodesic(&u, &v, t)?) - t * l2.distance(&u, &v)).abs(),
            );

            let dv = Direction::toward(u.clone(), v.clone(), g.uniform(0.1, 2.0))?;
            let dw = Direction::toward(u.clone(), w.clone(), g.uniform(0.1, 2.0))?;
            let (sv, sw) = (iota(&dv)?, iota(&dw)?);
            // L² side from germs of L² geodesics, section side node by node.
            let (nv, nw) = (norm(&l2, &dv), norm(&l2, &dw));
            let dist = cone_distance_dyadic(&l2, &dv, &dw, DyadicGrid::default())?.value;
            c[2].record((nv - sv.l2_norm(&l2.domain, &target)).abs());
            c[3].record(
                (0.5 * (nv * nv + nw * nw - dist * dist)
                    - sv.l2_inner(&l2.domain, &target, &sw)?)
                .abs(),
            );
            c[4].record((dist - sv.l2_distance(&l2.domain, &target, &sw)?).abs());
            let lambda = g.uniform(0.0, 3.0);
            let scaled = sv.scale(&vec![lambda; u.0.len()])?;
            c[5].record(iota(&dv.scale(lambda)?)?.l2_distance(&l2.domain, &target, &scaled)?);
            let summed = iota(&oplus_dyadic(&l2, &dv, &dw, DyadicGrid::default())?)?;
            c[6].record(summed.l2_distance(&l2.domain, &target, &sv.oplus(&target, &sw)?)?);
            let pointwise: f64 = sv
                .pointwise_inner(&target, &sw)?
                .iter()
                .zip(l2.domain.measure())
                .map(|(i, m)| m * i)
                .sum();
            c[7].record((sv.l2_inner(&l2.domain, &target, &sw)? - pointwise).abs());
            c[8].record(l2.cone_distance(&iota_inv(&target, &sv)?, &dv)?.value);
        }
        let exact = if is_flat(&target) { 1e-8 } else { 1e-6 };
        let tols = [1e-9, 1e-9, exact, exact, exact, 1e-6, 1e-6, 1e-12, 1e-9];
        out.extend(c.into_iter().zip(tols).map(|(c, t)| c.finish(t)));
    }
    Ok(out)
}

pub(super) fn ks_convexity(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let n = samples(cfg, 1000);
    let mut out = Vec::new();
    for target in spaces(cfg)
        .into_iter()
        .filter(|s| s.curvature().kappa <= 0.0)
    {
        let label = space_label(&target);
        let mut g = stream(cfg.seed, &format!("ks/{label}"));
        let mut convex = Check::new(format!("convexity[{label}]"));
        let mut improved = Check::new(format!("ks_int[{label}]"));
        for _ in 0..n {
            let k = KsEnergy::new(random_domain(&mut g), target.clone(), None)?;
            let (u, v) = (g.map(k.domain(), &target), g.map(k.domain(), &target));
            let t = g.uniform(0.0, 1.0);
            convex.record(k.convexity_defect(&u, &v, t)?);
            improved.record(k.improved_convexity_check(&u, &v, t)?);
        }
        out.push(convex.finish(1e-9));
        out.push(improved.finish(1e-8));
    }
    Ok(out)
}

/// Test maps that agree with `u` on the boundary.
fn free_perturbations(
    k: &KsEnergy,
    u: &L2Map,
    g: &mut super::gen::Generator,
    count: usize,
) -> Result<Vec<L2Map>> {
    let target = k.target();
    (0..count)
        .map(|i| {
            let mut w = u.clone();
            for x in (0..u.0.len()).filter(|x| !k.domain().is_boundary(*x)) {
                w.0[x] = if i % 2 == 0 {
                    g.point(target)
                } else {
                    g.point_near(target, &u.0[x], 0.1)?
                };
            }
            Ok(w)
        })
        .collect()
}

fn harmonic_certificates(
    cfg: &ScenarioConfig,
    label: &str,
    k: &KsEnergy,
    u: &L2Map,
    out: &mut Vec<PropertyReport>,
) -> Result<()> {
    let lap = k.laplacian(u, &cfg.laplacian)?;
    let mut lap_norm = Check::new(format!("laplacian_norm[{label}]"));
    lap_norm.record(lap.l2_norm(k.domain(), k.target()));
    out.push(lap_norm.finish(1e-4));
    let mut sl = Check::new(format!("slope[{label}]"));
    sl.record(slope(k, u)?.value);
    out.push(sl.finish(1e-6));
    let mut g = stream(cfg.seed, &format!("harmonic/tests/{label}"));
    let tests = free_perturbations(k, u, &mut g, 200)?;
    let mut minimizer = Check::new(format!("zero_subgradient[{label}]"));
    minimizer.record_aggregate(
        tests.len(),
        check_subdifferential(k, u, &Direction::zero(u.clone()), &tests)?,
    );
    out.push(minimizer.finish(1e-9));
    Ok(())
}

/// Path problem into ℝ² against linear interpolation, and the symmetric
/// three-legged star into spider(3) against the origin.
pub(super) fn harmonic(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    let mut g = stream(cfg.seed, "harmonic");

    let n = 9;
    let plane = Space::euclidean(2);
    let (a, b) = ([-1.0, 2.0], [3.0, -1.0]);
    let lerp = |i: usize| {
        let s = i as f64 / (n - 1) as f64;
        SpacePoint::euclid(&[a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
    };
    let mut init = L2Map((0..n).map(|_| g.point(&plane)).collect());
    init.0[0] = lerp(0);
    init.0[n - 1] = lerp(n - 1);
    let k = KsEnergy::new(
        Domain::path(n, 1.0, vec![0, n - 1])?,
        plane.clone(),
        Some(init.clone()),
    )?;
    let u = k.harmonic(&init, &cfg.solver)?.map;
    let mut linear = Check::new("linear_interpolation[path]");
    for (i, p) in u.0.iter().enumerate() {
        linear.record(plane.distance(p, &lerp(i)));
    }
    out.push(linear.finish(1e-8));
    harmonic_certificates(cfg, "path", &k, &u, &mut out)?;

    // node 0 is the center; leg i has middle node 2i−1 and end node 2i
    let spider = Space::spider(3);
    let mut edges = Vec::new();
    for leg in 1..=3 {
        edges.push((0, 2 * leg - 1, 1.0));
        edges.push((2 * leg - 1, 2 * leg, 1.0));
    }
    let star = Domain::lumped(7, edges, 1.0, vec![2, 4, 6])?;
    let mut init = L2Map((0..7).map(|_| g.point(&spider)).collect());
    for leg in 1..=3 {
        init.0[2 * leg] = SpacePoint::spider(leg, 1.0);
    }
    let k = KsEnergy::new(star, spider.clone(), Some(init.clone()))?;
    let u = k.harmonic(&init, &cfg.solver)?.map;
    let mut origin = Check::new("origin[spider_star]");
    origin.record(spider.distance(&u.0[0], &SpacePoint::spider_origin()));
    for leg in 1..=3 {
        origin.record(spider.distance(&u.0[2 * leg - 1], &SpacePoint::spider(leg, 0.5)));
    }
    out.push(origin.finish(1e-6));
    harmonic_certificates(cfg, "spider_star", &k, &u, &mut out)?;
    Ok(out)
}

fn euclid_vector(v: &Direction<SpacePoint>) -> Vec<f64> {
    match (&v.base, &v.germ) {
        (
            SpacePoint::Euclid(b),
            Germ::Toward {
                target: SpacePoint::Euclid(t),
                alpha,
            },
        ) => b.iter().zip(t).map(|(b, t)| alpha * (t - b)).collect(),
        (SpacePoint::Euclid(b), _) => vec![0.0; b.len()],
        _ => unreachable!("euclidean germs only"),
    }
}

fn coords(p: &SpacePoint) -> &[f64] {
    match p {
        SpacePoint::Euclid(x) => x,
        _ => unreachable!("euclidean points only"),
    }
}

/// −∂_x E / m_x for the edge form with s_xy = ½(a_xy + a_yx),
/// a_xy = m_x w_xy / (W_x r²).
fn euclid_gradient(d: &Domain, u: &L2Map, x: usize) -> Vec<f64> {
    let r2 = d.scale().powi(2);
    let m = d.measure();
    let ux = coords(&u.0[x]);
    let mut grad = vec![0.0; ux.len()];
    for &(y, w) in d.neighbors(x) {
        let s = 0.5 * (m[x] * w / (d.total_weight(x) * r2) + m[y] * w / (d.total_weight(y) * r2));
        for (gi, (a, b)) in grad.iter_mut().zip(ux.iter().zip(coords(&u.0[y]))) {
            *gi -= 2.0 * s * (a - b) / m[x];
        }
    }
    grad
}

/// First variation, slope vs section norm, and (euclidean targets) the
/// explicit gradient, on random graphs without boundary.
pub(super) fn laplacian(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let n = samples(cfg, 5);
    let mut out = Vec::new();
    for target in spaces(cfg)
        .into_iter()
        .filter(|s| s.curvature().kappa <= 0.0)
    {
        let label = space_label(&target);
        let mut g = stream(cfg.seed, &format!("laplacian/{label}"));
        let mut variation = Check::new(format!("first_variation[{label}]"));
        let mut slope_norm = Check::new(format!("slope_vs_norm[{label}]"));
        let mut gradient = Check::new(format!("euclid_gradient[{label}]"));
        let euclid = matches!(target, Space::Euclidean { .. });
        for _ in 0..n {
            let d = g.domain(6, 3);
            let k = KsEnergy::new(d.clone(), target.clone(), None)?.with_kappa_norm(cfg.kappa_norm);
            let u = g.map(&d, &target);
            let lap = k.laplacian(&u, &cfg.laplacian)?;
            for _ in 0..4 {
                let v = g.map(&d, &target);
                variation.record(k.first_variation_check(&u, &v, &lap, &[1e-7, 2e-7])?);
            }
            let sl = slope(&k, &u)?.value;
            slope_norm.record((lap.l2_norm(&d, &target) - sl).abs() / (1.0 + sl));
            if euclid {
                for x in 0..d.len() {
                    let want = euclid_gradient(&d, &u, x);
                    let got = euclid_vector(&lap.dirs[x]);
                    let err: f64 = want
                        .iter()
                        .zip(&got)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    let scale: f64 = want.iter().map(|a| a * a).sum::<f64>().sqrt();
                    gradient.record(err / (1.0 + scale));
                }
            }
        }
        out.push(variation.finish(1e-4));
        out.push(slope_norm.finish(1e-3));
        if euclid {
            out.push(gradient.finish(1e-3));
        }
    }
    Ok(out)
}

fn circle_section(n: usize, cfg: &ScenarioConfig) -> Result<(L2Map, Vec<Vec<f64>>)> {
    let k = KsEnergy::new(Domain::cycle(n)?, Space::euclidean(2), None)?;
    let u = L2Map(
        (0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64;
                SpacePoint::euclid(&[th.cos(), th.sin()])
            })
            .collect(),
    );
    let lap = k.laplacian(&u, &cfg.laplacian)?;
    let vecs = lap.dirs.iter().map(euclid_vector).collect();
    Ok((u, vecs))
}

/// Laplacian of the unit circle embedding on cycles of 64 and 128 nodes:
/// inward alignment, magnitude against 2N²(1 − cos 2π/N), and the change of
/// |Δu|/(2π)² between the two resolutions.
pub(super) fn circle_laplacian(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    let mut calibrated = Vec::new();
    for n in [64usize, 128] {
        let (u, vecs) = circle_section(n, cfg)?;
        let oracle = 2.0 * (n * n) as f64 * (1.0 - (TAU / n as f64).cos());
        let mut align = Check::new(format!("alignment[N={n}]"));
        let mut magnitude = Check::new(format!("magnitude[N={n}]"));
        let mut mean = 0.0;
        for (p, v) in u.0.iter().zip(&vecs) {
            let ux = coords(p);
            let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            let cos = -(v[0] * ux[0] + v[1] * ux[1]) / len.max(f64::MIN_POSITIVE);
            align.record(1.0 - cos);
            magnitude.record((len - oracle).abs() / oracle);
            mean += len / n as f64;
        }
        calibrated.push(mean / (TAU * TAU));
        out.push(align.finish(1e-3));
        out.push(magnitude.finish(0.02));
    }
    let mut refine = Check::new("calibrated_change[64->128]");
    refine.record((calibrated[1] - calibrated[0]).abs());
    out.push(refine.finish(1.0 / 64.0));
    Ok(out)
}

/// Residual of the weak chain-rule inequality for f = ½|· − p|² (λ = 1)
/// on harmonic interpolation of an interval grid with N cells, and for a
/// coordinate function (λ = 0).
pub(super) fn chain_rule(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let plane = Space::euclidean(2);
    let p = [-0.5, 0.3];
    let mut out = Vec::new();
    let mut residuals = Vec::new();
    let mut coordinate = Check::new("coordinate_harmonic");
    for n in [32usize, 64, 128, 256] {
        let h = 1.0 / n as f64;
        let edges = (0..n).map(|i| (i, i + 1, 1.0)).collect();
        let d = Domain::lumped(n + 1, edges, h, vec![0, n])?;
        let mut init = L2Map::constant(&d, &SpacePoint::euclid(&[0.0, 0.0]));
        init.0[n] = SpacePoint::euclid(&[1.0, 2.0]);
        let k =
            KsEnergy::new(d, plane.clone(), Some(init.clone()))?.with_kappa_norm(cfg.kappa_norm);
        let u = k.harmonic(&init, &cfg.solver)?.map;
        let g: Vec<f64> = (0..=n).map(|i| (PI * i as f64 * h).sin()).collect();
        let f =
            |q: &SpacePoint| 0.5 * ((coords(q)[0] - p[0]).powi(2) + (coords(q)[1] - p[1]).powi(2));
        let r = k.chain_rule_check(&u, f, 1.0, &g)?;
        let mut check = Check::new(format!("chain_rule[N={n}]"));
        check.record(-r);
        out.push(check.finish(1e-2));
        residuals.push(r);
        coordinate.record(k.chain_rule_check(&u, |q| coords(q)[0], 0.0, &g)?.abs());
    }
    let mut refine = Check::new("chain_rule_refinement");
    // the negative part must not grow under refinement; below 1e-10 it is
    // rounding in the harmonic solve
    let neg = |r: f64| (-r).max(0.0);
    for w in residuals.windows(2) {
        refine.record(neg(w[1]) - neg(w[0]).max(1e-10));
    }
    out.push(refine.finish(0.0));
    out.push(coordinate.finish(1e-8));
    Ok(out)
}
