//! Minimal-norm element of −∂⁻E(y) from right difference quotients of the flow.

use serde::{Deserialize, Serialize};

use super::{flow, Functional, Pt};
use crate::error::{Error, Result};
use crate::spaces::MetricSpace;
use crate::tangent::{inner, norm, Direction, TangentCone};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSchedule {
    /// Flow horizons h, coarsest first.
    pub hs: Vec<f64>,
    /// Prox steps per horizon (inner τ = h / steps).
    pub steps: usize,
    /// Cauchy tolerance on the last cone gap, relative to max(1, |v|).
    pub cauchy_tol: f64,
}

impl Default for SelectionSchedule {
    fn default() -> Self {
        Self {
            hs: vec![1e-2, 1e-3, 1e-4],
            steps: 100,
            cauchy_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "P: Serialize + Clone")]
pub struct Selection<P> {
    pub direction: Direction<P>,
    /// Finest horizon used.
    pub h: f64,
    /// Cone distance between the two finest difference quotients.
    pub gap: f64,
    /// Whether the germs were extrapolated to h = 0.
    pub extrapolated: bool,
}

/// Lagrange weights of the value at 0 for samples at `hs`.
fn extrapolation_weights(hs: &[f64]) -> Vec<f64> {
    (0..hs.len())
        .map(|i| {
            (0..hs.len())
                .filter(|&j| j != i)
                .map(|j| hs[j] / (hs[j] - hs[i]))
                .product()
        })
        .collect()
}

/// Runs the flow from `y` for each horizon h and returns the limit of the
/// germs (1/h)·(G_y^{y_h})'₀. When the cone is linear along the germs and
/// the gaps shrink like h, the germs are extrapolated to h = 0; otherwise
/// the finest germ is returned.
pub fn minimal_selection<F: Functional + ?Sized>(
    e: &F,
    y: &Pt<F>,
    schedule: &SelectionSchedule,
) -> Result<Selection<Pt<F>>> {
    let space = e.space();
    let mut hs = schedule.hs.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0 && h.is_finite())) || schedule.steps == 0 {
        return Err(Error::InvalidConfig {
            path: "selection".into(),
            message: "need positive horizons and at least one step".into(),
        });
    }
    let germs = hs
        .iter()
        .map(|&h| {
            let yh = flow(e, y, h, schedule.steps)?.last().clone();
            if space.distance(y, &yh) == 0.0 {
                Ok(Direction::zero(y.clone()))
            } else {
                Direction::toward(y.clone(), yh, 1.0 / h)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps = germs
        .windows(2)
        .map(|w| Ok(space.cone_distance(&w[0], &w[1])?.value))
        .collect::<Result<Vec<f64>>>()?;
    let finest = germs.last().expect("nonempty schedule").clone();
    let gap = gaps.last().copied().unwrap_or(0.0);
    let scale = 1f64.max(norm(space, &finest));
    if gap > schedule.cauchy_tol * scale {
        return Err(Error::NoConvergence(format!(
            "difference quotients of {} not Cauchy: gap {gap:.3e} at h = {:.1e} (tolerance {:.1e})",
            e.name(),
            hs[hs.len() - 1],
            schedule.cauchy_tol * scale
        )));
    }
    let h = hs[hs.len() - 1];
    let fallback = Selection {
        direction: finest.clone(),
        h,
        gap,
        extrapolated: false,
    };
    if hs.len() < 3 {
        return Ok(fallback);
    }
    let n = hs.len();
    let (g1, g2) = (gaps[n - 3], gaps[n - 2]);
    let negligible = g1 <= 1e-13 * scale && g2 <= 1e-13 * scale;
    let expected = (hs[n - 3] - hs[n - 2]) / (hs[n - 2] - hs[n - 1]);
    let linear_rate = g2 > 0.0 && (expected / 3.0..=expected * 3.0).contains(&(g1 / g2));
    if !(negligible || linear_rate) {
        return Ok(fallback);
    }
    let Some(extrapolated) = space.affine_combination(&extrapolation_weights(&hs), &germs)? else {
        return Ok(fallback);
    };
    if space.cone_distance(&extrapolated, &finest)?.value > 2.0 * gap + 1e-13 * scale {
        return Ok(fallback);
    }
    Ok(Selection {
        direction: extrapolated,
        h,
        gap,
        extrapolated: true,
    })
}

/// max over `tests` of E(y) − ⟨v, γ'₀⟩ + (λ/2)d²(y, z) − E(z), with γ the
/// geodesic from y to z. Points outside the domain are skipped.
pub fn check_subdifferential<F: Functional + ?Sized>(
    e: &F,
    y: &Pt<F>,
    v: &Direction<Pt<F>>,
    tests: &[Pt<F>],
) -> Result<f64> {
    let space = e.space();
    if space.distance(&v.base, y) > 1e-12 {
        return Err(Error::MismatchedBase);
    }
    let ey = e.eval(y);
    if !ey.is_finite() {
        return Err(Error::OutsideDomain);
    }
    let lambda = e.lambda();
    let mut worst = f64::NEG_INFINITY;
    for z in tests {
        let ez = e.eval(z);
        if !ez.is_finite() {
            continue;
        }
        let d = space.distance(y, z);
        let pairing = if d == 0.0 {
            0.0
        } else {
            inner(space, v, &Direction::toward(y.clone(), z.clone(), 1.0)?)?
        };
        worst = worst.max(ey - pairing + 0.5 * lambda * d * d - ez);
    }
    if worst == f64::NEG_INFINITY {
        return Err(Error::Empty("no test point inside the domain"));
    }
    Ok(worst)
}
