//! Descending slope |∂⁻E|(y).

use serde::Serialize;

use super::{Functional, Pt};
use crate::error::{Error, Result};
use crate::spaces::MetricSpace;

pub const DEFAULT_SLOPE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeMethod {
    ClosedForm,
    /// Sampled global supremum; a lower bound for the slope.
    GlobalSupSampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub value: f64,
    pub method: SlopeMethod,
    pub sample_count: usize,
}

pub fn slope<F: Functional + ?Sized>(e: &F, y: &Pt<F>) -> Result<SlopeEstimate> {
    slope_with(e, y, DEFAULT_SLOPE_SAMPLES, 0)
}

/// Closed form when the functional has one, else the sampled global bound.
pub fn slope_with<F: Functional + ?Sized>(
    e: &F,
    y: &Pt<F>,
    samples: usize,
    seed: u64,
) -> Result<SlopeEstimate> {
    if !e.eval(y).is_finite() {
        return Err(Error::OutsideDomain);
    }
    if let Some(value) = e.slope_closed_form(y) {
        return Ok(SlopeEstimate {
            value,
            method: SlopeMethod::ClosedForm,
            sample_count: 0,
        });
    }
    let zs = e.candidates(y, samples, seed);
    Ok(SlopeEstimate {
        value: global_slope_bound(e, y, &zs),
        method: SlopeMethod::GlobalSupSampled,
        sample_count: zs.len(),
    })
}

/// sup over `zs` of ((E(y) − E(z))/d + (λ/2)d)⁺ with d = d(y, z). Each
/// quotient is lowered by the rounding in E(y) − E(z), so candidates very
/// close to y cannot inflate the bound.
pub fn global_slope_bound<F: Functional + ?Sized>(e: &F, y: &Pt<F>, zs: &[Pt<F>]) -> f64 {
    let ey = e.eval(y);
    let lambda = e.lambda();
    zs.iter()
        .filter_map(|z| {
            let d = e.space().distance(y, z);
            let ez = e.eval(z);
            let noise = 64.0 * f64::EPSILON * (ey.abs() + ez.abs());
            (d > 0.0).then(|| (ey - ez - noise) / d + 0.5 * lambda * d)
        })
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}
