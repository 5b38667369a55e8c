//! Flow, verifier and minimal-selection suites.

use super::{samples, space_label, spaces, stream, Check, PropertyReport};
use crate::error::Result;
use crate::flow::{
    self, check_subdifferential, energy_identity, flow, halving_ok, prox_firmness, slope,
    verify_apriori, verify_contraction, verify_evi, verify_regularization, Builtin, BuiltinKind,
    Functional,
};
use crate::scenario::ScenarioConfig;
use crate::spaces::{MetricSpace, SpacePoint};
use crate::tangent::norm;

struct Case {
    label: String,
    e: Builtin,
    start: SpacePoint,
    other: SpacePoint,
}

fn kind_label(k: &BuiltinKind) -> &'static str {
    match k {
        BuiltinKind::HalfSquaredDistance { .. } => "half_squared_distance",
        BuiltinKind::DistanceTo { .. } => "distance_to",
        BuiltinKind::SumOfDistances { .. } => "sum_of_distances",
    }
}

/// The configured functional when there is one; otherwise ½d²(·, z) and
/// d(·, z) toward a seeded z on every swept space with κ ≤ 0.
fn cases(cfg: &ScenarioConfig, tag: &str) -> Result<Vec<Case>> {
    if cfg.functional.is_some() {
        let e = cfg.builtin()?;
        let mut g = stream(cfg.seed, &format!("{tag}/configured"));
        let label = format!("{},{}", kind_label(e.kind()), space_label(&cfg.space));
        return Ok(vec![Case {
            label,
            start: cfg.start_point(),
            other: g.point(&cfg.space),
            e,
        }]);
    }
    let mut out = Vec::new();
    for s in spaces(cfg)
        .into_iter()
        .filter(|s| s.curvature().kappa <= 0.0)
    {
        let label = space_label(&s);
        let mut g = stream(cfg.seed, &format!("{tag}/{label}"));
        let z = g.point(&s);
        let (start, other) = (g.point(&s), g.point(&s));
        for e in [
            Builtin::half_squared_distance(s.clone(), z.clone())?,
            Builtin::distance_to(s.clone(), z.clone())?,
        ] {
            out.push(Case {
                label: format!("{},{label}", kind_label(e.kind())),
                e,
                start: start.clone(),
                other: other.clone(),
            });
        }
    }
    Ok(out)
}

/// Flow of ½d²(·, z) against the closed-form curve γ with d(γ_t, z) =
/// e^{−t} d(y₀, z) on the geodesic from z to y₀.
pub(super) fn flow_oracle(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    for c in cases(cfg, "oracle")? {
        let BuiltinKind::HalfSquaredDistance { z } = c.e.kind() else {
            continue;
        };
        let s = c.e.space();
        let traj = flow(&c.e, &c.start, cfg.flow.t_end, cfg.flow.steps)?;
        let mut check = Check::new(format!("exponential_decay[{}]", c.label));
        for (t, p) in traj.times.iter().zip(&traj.points) {
            let oracle = s.geodesic_point(z, &c.start, (-t).exp())?;
            check.record(s.distance(p, &oracle));
        }
        out.push(check.finish(1e-2));
    }
    Ok(out)
}

/// `evi`, `contraction` or `apriori` at τ and τ/2 plus the halving check.
pub(super) fn verifier(cfg: &ScenarioConfig, which: &str) -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    for c in cases(cfg, which)? {
        let s = c.e.space();
        let lambda = c.e.lambda();
        let mut g = stream(cfg.seed, &format!("{which}/tests/{}", c.label));
        let tests: Vec<SpacePoint> = (0..cfg.flow.tests).map(|_| g.point(s)).collect();
        let mut at = Vec::new();
        for steps in [cfg.flow.steps, 2 * cfg.flow.steps] {
            let ya = flow(&c.e, &c.start, cfg.flow.t_end, steps)?;
            let report = match which {
                "evi" => verify_evi(&ya, &c.e, lambda, &tests)?,
                "contraction" => verify_contraction(
                    s,
                    &ya,
                    &flow(&c.e, &c.other, cfg.flow.t_end, steps)?,
                    lambda,
                )?,
                _ => verify_apriori(&ya, &c.other, &c.e, lambda)?,
            };
            let mut check = Check::new(format!("{which}@tau={:e}[{}]", report.tau, c.label));
            check.record_aggregate(report.samples, report.max_violation);
            at.push((check.finish(1e-2), report.max_violation));
        }
        let mut halving = Check::new(format!("{which}_halving[{}]", c.label));
        halving.record(if halving_ok(at[0].1, at[1].1) {
            0.0
        } else {
            at[1].1 / at[0].1.max(1e-12)
        });
        out.extend(at.into_iter().map(|(r, _)| r));
        out.push(halving.finish(0.0));
    }
    Ok(out)
}

/// Energy identity, prox firmness, slope regularization and the τ vs τ/2
/// self-consistency of the endpoint.
pub(super) fn identities(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    let tau = cfg.tau();
    for c in cases(cfg, "identities")? {
        let s = c.e.space();
        let traj = flow(&c.e, &c.start, cfg.flow.t_end, cfg.flow.steps)?;
        if matches!(c.e.kind(), BuiltinKind::HalfSquaredDistance { .. }) {
            let mut energy = Check::new(format!("energy_identity[{}]", c.label));
            energy.record(energy_identity(&traj, &c.e));
            out.push(energy.finish(0.05));
        }
        let mut g = stream(cfg.seed, &format!("identities/pairs/{}", c.label));
        let pairs: Vec<(SpacePoint, SpacePoint)> = (0..samples(cfg, 100))
            .map(|_| (g.point(s), g.point(s)))
            .collect();
        let mut firm = Check::new(format!("prox_firmness[{}]", c.label));
        firm.record_aggregate(pairs.len(), prox_firmness(&c.e, tau, &pairs)?);
        out.push(firm.finish(1e-8));

        let reg = verify_regularization(&traj, &c.e, c.e.lambda())?;
        let mut regul = Check::new(format!("regularization[{}]", c.label));
        regul.record_aggregate(reg.samples, reg.max_violation);
        out.push(regul.finish(1e-2));

        let fine = flow(&c.e, &c.start, cfg.flow.t_end, 2 * cfg.flow.steps)?;
        let mut refine = Check::new(format!("refinement[{}]", c.label));
        refine.record(s.distance(traj.last(), fine.last()));
        out.push(refine.finish(1e-2));
    }
    Ok(out)
}

/// |norm(minimal_selection) − slope| and subdifferential membership at
/// seeded points.
pub(super) fn minimal_selection(cfg: &ScenarioConfig) -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    let n = samples(cfg, 100);
    for c in cases(cfg, "selection")? {
        let s = c.e.space();
        let mut g = stream(cfg.seed, &format!("selection/{}", c.label));
        let mut identity = Check::new(format!("slope_identity[{}]", c.label));
        let mut member = Check::new(format!("subdifferential[{}]", c.label));
        for i in 0..n {
            let y = if i == 0 { c.start.clone() } else { g.point(s) };
            let sel = flow::minimal_selection(&c.e, &y, &cfg.selection)?;
            let sl = slope(&c.e, &y)?.value;
            identity.record((norm(s, &sel.direction) - sl).abs());
            let mut tests: Vec<SpacePoint> = (0..1000)
                .map(|_| g.point_near(s, &y, 3.0))
                .collect::<Result<_>>()?;
            tests.extend(c.e.candidates(&y, 32, cfg.seed));
            member.record(check_subdifferential(&c.e, &y, &sel.direction, &tests)?);
        }
        out.push(identity.finish(1e-3));
        out.push(member.finish(1e-6));
    }
    Ok(out)
}
