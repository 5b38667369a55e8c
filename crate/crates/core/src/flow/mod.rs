//! λ-convex functionals, prox steps, minimizing movements, slopes, minimal
//! selections and verifiers for the flow inequalities.

mod builtins;
mod selection;
mod slope;
mod verify;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spaces::MetricSpace;
use crate::tangent::TangentCone;

pub use builtins::{Builtin, BuiltinKind};
pub use selection::{check_subdifferential, minimal_selection, Selection, SelectionSchedule};
pub use slope::{
    global_slope_bound, slope, slope_with, SlopeEstimate, SlopeMethod, DEFAULT_SLOPE_SAMPLES,
};
pub use verify::{
    energy_identity, halving_ok, prox_firmness, verify_apriori, verify_contraction, verify_evi,
    verify_regularization, VerifierReport,
};

/// Point type of a functional's space.
pub type Pt<F> = <<F as Functional>::Space as MetricSpace>::Point;

/// A λ-convex, lower semicontinuous functional `E: Y → ℝ ∪ {+∞}`.
pub trait Functional {
    type Space: TangentCone;

    fn space(&self) -> &Self::Space;

    /// Value at `y`; `f64::INFINITY` outside the domain.
    fn eval(&self, y: &Pt<Self>) -> f64;

    /// Convexity modulus λ.
    fn lambda(&self) -> f64;

    /// Exact resolvent, when available.
    fn exact_prox(&self, _tau: f64, _y: &Pt<Self>) -> Option<Result<Pt<Self>>> {
        None
    }

    fn slope_closed_form(&self, _y: &Pt<Self>) -> Option<f64> {
        None
    }

    /// Seeded test points around `y` for slope suprema and heuristic prox.
    fn candidates(&self, y: &Pt<Self>, count: usize, seed: u64) -> Vec<Pt<Self>>;

    fn name(&self) -> String;
}

/// Resolvent `argmin E(·) + d²(·, y)/(2τ)`.
pub fn prox<F: Functional + ?Sized>(e: &F, tau: f64, y: &Pt<F>) -> Result<Pt<F>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::ProxFailure(format!(
            "step {tau} must be positive and finite"
        )));
    }
    if 1.0 + e.lambda() * tau <= 0.0 {
        return Err(Error::ProxFailure(format!(
            "1 + λτ = {} is not positive",
            1.0 + e.lambda() * tau
        )));
    }
    match e.exact_prox(tau, y) {
        Some(r) => r,
        None => heuristic_prox(e, tau, y),
    }
}

/// Alternating geodesic line searches toward candidate points, with golden
/// section along each geodesic. Heuristic: used only for functionals without
/// an exact resolvent.
pub fn heuristic_prox<F: Functional + ?Sized>(e: &F, tau: f64, y: &Pt<F>) -> Result<Pt<F>> {
    const PASSES: usize = 200;
    let space = e.space();
    let objective = |x: &Pt<F>| e.eval(x) + space.distance(x, y).powi(2) / (2.0 * tau);
    let mut x = y.clone();
    let mut fx = objective(&x);
    if !fx.is_finite() {
        return Err(Error::ProxFailure(format!(
            "{} is infinite at the starting point",
            e.name()
        )));
    }
    for pass in 0..PASSES {
        let start = fx;
        for c in e.candidates(&x, 16, pass as u64) {
            let s = crate::spaces::golden_section(
                |s| Ok(objective(&space.geodesic_point(&x, &c, s)?)),
                0.0,
                1.0,
                1e-10,
            )?;
            let next = space.geodesic_point(&x, &c, s)?;
            let fn_ = objective(&next);
            if fn_ < fx {
                x = next;
                fx = fn_;
            }
        }
        if start - fx < 1e-12 {
            return Ok(x);
        }
    }
    Err(Error::ProxFailure(format!(
        "{}: line searches still decreasing after {PASSES} passes (objective {fx})",
        e.name()
    )))
}

/// Time-discretized flow curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<P> {
    pub times: Vec<f64>,
    pub points: Vec<P>,
    pub energies: Vec<f64>,
    /// Step used to reach each point after the first.
    pub step_tau: Vec<f64>,
}

impl<P> Trajectory<P> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> &P {
        self.points
            .last()
            .expect("trajectories hold the starting point")
    }

    /// Largest step of the schedule.
    pub fn tau(&self) -> f64 {
        self.step_tau.iter().copied().fold(0.0, f64::max)
    }

    /// Backward metric speed per point; the first entry repeats the second.
    pub fn speeds<S: MetricSpace<Point = P>>(&self, space: &S) -> Vec<f64> {
        let mut v: Vec<f64> = std::iter::once(0.0)
            .chain(
                self.points
                    .windows(2)
                    .zip(&self.step_tau)
                    .map(|(w, tau)| space.distance(&w[0], &w[1]) / tau),
            )
            .collect();
        if v.len() > 1 {
            v[0] = v[1];
        }
        v
    }
}

/// Minimizing movements with uniform step `t_end / steps`. Steps with
/// `1 + λτ ≤ 0` are split until every substep is admissible.
pub fn flow<F: Functional + ?Sized>(
    e: &F,
    y0: &Pt<F>,
    t_end: f64,
    steps: usize,
) -> Result<Trajectory<Pt<F>>> {
    if !(t_end > 0.0 && t_end.is_finite()) || steps == 0 {
        return Err(Error::InvalidConfig {
            path: "flow".into(),
            message: format!("need T > 0 and N ≥ 1, got T = {t_end}, N = {steps}"),
        });
    }
    let tau = t_end / steps as f64;
    let lambda = e.lambda();
    let split = if 1.0 + lambda * tau > 0.0 {
        1
    } else {
        (-2.0 * lambda * tau).ceil() as usize + 1
    };
    let sub = tau / split as f64;
    let e0 = e.eval(y0);
    let mut traj = Trajectory {
        times: vec![0.0],
        points: vec![y0.clone()],
        energies: vec![e0],
        step_tau: Vec::with_capacity(steps * split),
    };
    let mut y = y0.clone();
    for i in 0..steps {
        for j in 0..split {
            y = prox(e, sub, &y)?;
            let t = if j + 1 == split {
                (i + 1) as f64 * tau
            } else {
                i as f64 * tau + (j + 1) as f64 * sub
            };
            traj.times.push(t);
            traj.energies.push(e.eval(&y));
            traj.points.push(y.clone());
            traj.step_tau.push(sub);
        }
    }
    Ok(traj)
}
