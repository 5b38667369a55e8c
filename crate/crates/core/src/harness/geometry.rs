//! Comparison-geometry and tangent-cone suites.

use super::{samples, space_label, spaces, stream, Check, PropertyReport};
use crate::error::Result;
use crate::scenario::ScenarioConfig;
use crate::spaces::{
    circumcenter_objective, metric_projection, ConvexSet, MetricSpace, Space, SpacePoint,
};
use crate::tangent::{
    cone_distance_dyadic, dyadic_ratios, inner, norm, oplus_dyadic, Direction, DyadicGrid, Germ,
    TangentCone,
};

pub(super) fn cat0_comparison(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let n = samples(cfg, 10_000);
    let mut out = Vec::new();
    for s in spaces(cfg) {
        let label = space_label(&s);
        let mut g = stream(cfg.seed, &format!("cat0/{label}"));
        let mut defect = Check::new(format!("cat_defect[{label}]"));
        let mut consistency = Check::new(format!("geodesic_consistency[{label}]"));
        for _ in 0..n {
            let (a, b, c) = (g.point(&s), g.point(&s), g.point(&s));
            let t = g.uniform(0.0, 1.0);
            defect.record_result(s.cat_defect(&a, &b, &c, t).map(|d| -d))?;
            let u = g.uniform(0.0, 1.0);
            let r = s.geodesic_point(&a, &b, t).and_then(|p| {
                let q = s.geodesic_point(&a, &b, u)?;
                Ok((s.distance(&p, &q) - (t - u).abs() * s.distance(&a, &b)).abs())
            });
            consistency.record_result(r)?;
        }
        out.push(defect.finish(1e-9));
        out.push(consistency.finish(1e-10));

        // 1-Lipschitz needs κ ≤ 0; minimality over sampled members holds on
        // every space
        let cat0 = s.curvature().kappa <= 0.0;
        let mut lipschitz = Check::new(format!("projection_lipschitz[{label}]"));
        let mut minimal = Check::new(format!("projection_minimal[{label}]"));
        let radius_cap = 0.4 * s.curvature().diameter;
        for i in 0..n / 10 {
            let set = if i % 2 == 0 {
                ConvexSet::Ball {
                    center: g.point(&s),
                    radius: g.uniform(0.1, 1.0).min(radius_cap),
                }
            } else {
                ConvexSet::Segment {
                    a: g.point(&s),
                    b: g.point(&s),
                }
            };
            let (a, b) = (g.point(&s), g.point(&s));
            let member = match &set {
                ConvexSet::Ball { center, radius } => {
                    let q = g.point(&s);
                    let d = s.distance(center, &q);
                    let frac = if d > 0.0 {
                        (g.uniform(0.0, *radius) / d).min(1.0)
                    } else {
                        0.0
                    };
                    s.geodesic_point(center, &q, frac)
                }
                ConvexSet::Segment { a, b } => s.geodesic_point(a, b, g.uniform(0.0, 1.0)),
                _ => unreachable!("only balls and segments are sampled"),
            };
            let pa = metric_projection(&s, &set, &a);
            minimal.record_result(
                pa.clone()
                    .and_then(|pa| Ok(s.distance(&a, &pa) - s.distance(&a, &member?))),
            )?;
            if cat0 {
                let r = pa.and_then(|pa| {
                    Ok(s.distance(&pa, &metric_projection(&s, &set, &b)?) - s.distance(&a, &b))
                });
                lipschitz.record_result(r)?;
            }
        }
        if cat0 {
            out.push(lipschitz.finish(1e-8));
        }
        out.push(minimal.finish(1e-9));

        if s.curvature().kappa <= 0.0 {
            // max d² is 2-convex: f(γ₀) + f(γ₁) − 2f(γ½) ≥ ½d²(γ₀, γ₁).
            let mut convex = Check::new(format!("circumcenter_convexity[{label}]"));
            for _ in 0..n / 10 {
                let pts: Vec<SpacePoint> = (0..3).map(|_| g.point(&s)).collect();
                let (a, b) = (g.point(&s), g.point(&s));
                let m = s.geodesic_point(&a, &b, 0.5)?;
                let f = |y: &SpacePoint| circumcenter_objective(&s, y, &pts);
                let second = f(&a) + f(&b) - 2.0 * f(&m);
                convex.record(0.5 * s.distance(&a, &b).powi(2) - second);
            }
            out.push(convex.finish(1e-9));
        }
    }
    Ok(out)
}

/// Whether every factor has piecewise-linear geodesics, so dyadic limits
/// are exact up to rounding.
pub(super) fn is_flat(s: &Space) -> bool {
    match s {
        Space::Euclidean { .. } | Space::Spider { .. } => true,
        Space::Product { factors } => factors.iter().all(is_flat),
        _ => false,
    }
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

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(super) fn cone_calculus(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let n = samples(cfg, 10_000);
    let mut out = Vec::new();
    for s in spaces(cfg) {
        let label = space_label(&s);
        let mut g = stream(cfg.seed, &format!("cone/{label}"));
        let names = [
            "cs",
            "cseq",
            "pi",
            "concav",
            "prhom",
            "norm_homogeneity",
            "dyadic_distance",
            "dyadic_oplus",
        ];
        let mut checks: Vec<Check> = names
            .iter()
            .map(|p| Check::new(format!("{p}[{label}]")))
            .collect();
        let mut mondis = Check::new(format!("mondis[{label}]"));
        let mut linear = Check::new(format!("linear[{label}]"));
        let cat0 = s.curvature().kappa <= 0.0;
        let euclid = matches!(s, Space::Euclidean { .. });
        for _ in 0..n {
            let base = if g.index(8) == 0 {
                s.base_point()
            } else {
                g.point(&s)
            };
            let v = g.direction(&s, &base)?;
            let same_geodesic = g.index(4) == 0;
            let w = if same_geodesic {
                // Same geodesic, different length and speed: equality in CS.
                let Germ::Toward { target, .. } = &v.germ else {
                    unreachable!()
                };
                let along = s.geodesic_point(&base, target, g.uniform(0.2, 1.0))?;
                Direction::toward(base.clone(), along, g.uniform(0.1, 2.0))?
            } else {
                g.direction(&s, &base)?
            };
            let v2 = g.direction(&s, &base)?;
            let lambda = g.uniform(0.0, 3.0);
            let (nv, nw) = (norm(&s, &v), norm(&s, &w));
            let d = s.cone_distance(&v, &w)?.value;
            let ip = 0.5 * (nv * nv + nw * nw - d * d);

            checks[0].record(ip.abs() - nv * nw);
            // Equality cases come only from the constructed pairs: a tolerance
            // on ip − |v||w| admits angles of order its square root.
            if same_geodesic {
                checks[1].record(s.cone_distance(&v.scale(nw)?, &w.scale(nv)?)?.value);
            }
            let sum = s.oplus(&v, &w)?;
            checks[2].record(d * d + norm(&s, &sum).powi(2) - 2.0 * (nv * nv + nw * nw));
            let sum2 = s.oplus(&v, &v2)?;
            checks[3].record(ip + inner(&s, &v2, &w)? - inner(&s, &sum2, &w)?);
            checks[4].record((inner(&s, &v.scale(lambda)?, &w)? - lambda * ip).abs());
            checks[5].record(
                (s.cone_distance(&v.scale(lambda)?, &w.scale(lambda)?)?.value - lambda * d).abs(),
            );
            checks[6]
                .record((cone_distance_dyadic(&s, &v, &w, DyadicGrid::default())?.value - d).abs());
            let dy_sum = oplus_dyadic(&s, &v, &w, DyadicGrid::default())?;
            checks[7].record(s.cone_distance(&dy_sum, &sum)?.value);

            if cat0 {
                let ratios = dyadic_ratios(&s, &v, &w, DyadicGrid::default())?;
                for p in ratios.windows(2) {
                    // ratios run from coarse to fine; rounding in the distance
                    // is amplified by 1/t
                    let (t_fine, f_fine) = p[1];
                    mondis.record(f_fine - p[0].1 - 1e-13 / t_fine);
                }
            }
            if euclid {
                let (a, b) = (euclid_vector(&v), euclid_vector(&w));
                let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                linear.record((d - vec_norm(&diff)).abs());
                let total: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                let got = euclid_vector(&sum);
                linear.record(vec_norm(
                    &total
                        .iter()
                        .zip(&got)
                        .map(|(x, y)| x - y)
                        .collect::<Vec<_>>(),
                ));
            }
        }
        let tols = [1e-8, 1e-6, 1e-8, 1e-8, 1e-8, 1e-8, 1e-6, 1e-6];
        out.extend(checks.into_iter().zip(tols).map(|(c, t)| c.finish(t)));
        if cat0 {
            out.push(mondis.finish(1e-12));
        }
        if euclid {
            out.push(linear.finish(1e-10));
        }
    }
    Ok(out)
}
