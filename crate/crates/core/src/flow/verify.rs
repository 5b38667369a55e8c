//! Discrete checks of EVI, contraction, the a-priori estimate, slope
//! regularization and the energy identity.

use serde::{Deserialize, Serialize};

use super::{flow, prox, slope, Functional, Pt, Trajectory};
use crate::error::{Error, Result};
use crate::spaces::MetricSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub check: String,
    pub max_violation: f64,
    pub tau: f64,
    pub samples: usize,
}

/// Sample indices: all of them when there are at most `max` points, else an
/// even stride that keeps the last index.
fn decimate(len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    let stride = len.div_ceil(max);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

fn uniform_steps<P>(traj: &Trajectory<P>) -> Result<(f64, usize)> {
    let n = traj.step_tau.len();
    let t_end = *traj.times.last().ok_or(Error::Empty("trajectory"))?;
    if n == 0 {
        return Err(Error::Empty("trajectory has no steps"));
    }
    let tau = t_end / n as f64;
    if traj.step_tau.iter().any(|s| (s - tau).abs() > 1e-9 * tau) {
        return Err(Error::Unsupported(
            "verifier needs a uniform step schedule".into(),
        ));
    }
    Ok((t_end, n))
}

/// max over interior times and test points of
/// d/dt ½d²(y_t, z) + E(y_t) + (λ/2)d²(y_t, z) − E(z), with the time
/// derivative by central differences.
pub fn verify_evi<F: Functional + ?Sized>(
    traj: &Trajectory<Pt<F>>,
    e: &F,
    lambda: f64,
    tests: &[Pt<F>],
) -> Result<VerifierReport> {
    let space = e.space();
    let n = traj.len();
    if n < 3 {
        return Err(Error::Empty("EVI needs at least three trajectory points"));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for z in tests {
        let ez = e.eval(z);
        if !ez.is_finite() {
            continue;
        }
        let half_sq: Vec<f64> = traj
            .points
            .iter()
            .map(|p| 0.5 * space.distance(p, z).powi(2))
            .collect();
        for i in 1..n - 1 {
            let dt = traj.times[i + 1] - traj.times[i - 1];
            let deriv = (half_sq[i + 1] - half_sq[i - 1]) / dt;
            worst = worst.max(deriv + traj.energies[i] + lambda * half_sq[i] - ez);
            samples += 1;
        }
    }
    Ok(VerifierReport {
        check: "evi".into(),
        max_violation: worst,
        tau: traj.tau(),
        samples,
    })
}

/// max over sampled s ≤ t of d(y_t, z_t) − e^{−λ(t−s)} d(y_s, z_s).
pub fn verify_contraction<S: MetricSpace + ?Sized>(
    space: &S,
    a: &Trajectory<S::Point>,
    b: &Trajectory<S::Point>,
    lambda: f64,
) -> Result<VerifierReport> {
    if a.times != b.times {
        return Err(Error::Unsupported(
            "contraction needs trajectories on one time grid".into(),
        ));
    }
    let idx = decimate(a.len(), 400);
    let d: Vec<f64> = idx
        .iter()
        .map(|&i| space.distance(&a.points[i], &b.points[i]))
        .collect();
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for (js, &s) in idx.iter().enumerate() {
        for (jt, &t) in idx.iter().enumerate().skip(js) {
            let decay = (-lambda * (a.times[t] - a.times[s])).exp();
            worst = worst.max(d[jt] - decay * d[js]);
            samples += 1;
        }
    }
    Ok(VerifierReport {
        check: "contraction".into(),
        max_violation: worst,
        tau: a.tau(),
        samples,
    })
}

/// ∫₀ᵘ θ_λ(r) dr with θ_λ(r) = ∫₀ʳ e^{−2λq} dq.
fn theta_integral(lambda: f64, u: f64) -> f64 {
    let x = 2.0 * lambda * u;
    if x.abs() < 1e-4 {
        u * u * (0.5 - x / 6.0 + x * x / 24.0)
    } else {
        (x + (-x).exp_m1()) / (4.0 * lambda * lambda)
    }
}

/// Both sides of the a-priori estimate for d²(y_t, z_s), t ≥ s > 0, with
/// the flow from `z` run on the schedule of `traj_y`. Returns the largest
/// excess of the left side; integrals are trapezoid sums on the grid.
pub fn verify_apriori<F: Functional + ?Sized>(
    traj_y: &Trajectory<Pt<F>>,
    z: &Pt<F>,
    e: &F,
    lambda: f64,
) -> Result<VerifierReport> {
    let space = e.space();
    let (t_end, steps) = uniform_steps(traj_y)?;
    let tau = t_end / steps as f64;
    let traj_z = flow(e, z, t_end, steps)?;
    let y = &traj_y.points[0];
    let (ey, ez) = (e.eval(y), e.eval(z));
    let slope_y = slope(e, y)?.value;
    let d0 = space.distance(y, z).powi(2);
    // prefix[k] = ∫₀^{kτ} d²(y_r, z) dr
    let sq: Vec<f64> = traj_y
        .points
        .iter()
        .map(|p| space.distance(p, z).powi(2))
        .collect();
    let mut prefix = vec![0.0; sq.len()];
    for k in 1..sq.len() {
        prefix[k] = prefix[k - 1] + 0.5 * tau * (sq[k - 1] + sq[k]);
    }
    let idx = decimate(traj_y.len(), 200);
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for &j in idx.iter().filter(|&&j| j > 0) {
        let s = traj_y.times[j];
        for &i in idx.iter().filter(|&&i| i >= j) {
            let k = i - j;
            let u = k as f64 * tau;
            let lhs = space.distance(&traj_y.points[i], &traj_z.points[j]).powi(2);
            let rhs = (-2.0 * lambda * s).exp()
                * (d0 + 2.0 * u * (ez - ey) + 2.0 * slope_y * slope_y * theta_integral(lambda, u)
                    - lambda * prefix[k]);
            worst = worst.max(lhs - rhs);
            samples += 1;
        }
    }
    Ok(VerifierReport {
        check: "apriori".into(),
        max_violation: worst,
        tau,
        samples,
    })
}

/// Largest increase of e^{λt}·|∂⁻E|(y_t) between consecutive sampled times.
pub fn verify_regularization<F: Functional + ?Sized>(
    traj: &Trajectory<Pt<F>>,
    e: &F,
    lambda: f64,
) -> Result<VerifierReport> {
    let max = if e.slope_closed_form(&traj.points[0]).is_some() {
        usize::MAX
    } else {
        100
    };
    let idx = decimate(traj.len(), max);
    let weighted = idx
        .iter()
        .map(|&i| Ok((lambda * traj.times[i]).exp() * slope(e, &traj.points[i])?.value))
        .collect::<Result<Vec<f64>>>()?;
    let worst = weighted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(VerifierReport {
        check: "regularization".into(),
        max_violation: if worst.is_finite() { worst } else { 0.0 },
        tau: traj.tau(),
        samples: idx.len(),
    })
}

/// Largest relative mismatch between −ΔE/Δt, the squared discrete speed and
/// (when available in closed form) the squared slope, over steps that move.
pub fn energy_identity<F: Functional + ?Sized>(traj: &Trajectory<Pt<F>>, e: &F) -> f64 {
    let space = e.space();
    let mut worst: f64 = 0.0;
    for i in 0..traj.step_tau.len() {
        let tau = traj.step_tau[i];
        let v2 = (space.distance(&traj.points[i], &traj.points[i + 1]) / tau).powi(2);
        if v2 < 1e-20 {
            continue;
        }
        let dissipation = (traj.energies[i] - traj.energies[i + 1]) / tau;
        worst = worst.max((dissipation - v2).abs() / v2);
        if let Some(s) = e.slope_closed_form(&traj.points[i + 1]) {
            worst = worst.max((s * s - v2).abs() / v2);
        }
    }
    worst
}

/// max over pairs of d(prox a, prox b) − d(a, b)/(1 + λτ).
pub fn prox_firmness<F: Functional + ?Sized>(
    e: &F,
    tau: f64,
    pairs: &[(Pt<F>, Pt<F>)],
) -> Result<f64> {
    let space = e.space();
    let mut worst = f64::NEG_INFINITY;
    for (a, b) in pairs {
        let pa = prox(e, tau, a)?;
        let pb = prox(e, tau, b)?;
        worst =
            worst.max(space.distance(&pa, &pb) - space.distance(a, b) / (1.0 + e.lambda() * tau));
    }
    Ok(worst)
}

/// Whether a violation at τ/2 is at most 2.5× half the violation at τ.
/// Violations at rounding level count as already halved; central
/// differences in t carry rounding of order ε·d²/τ, about 1e-11 at τ = 1e-5.
pub fn halving_ok(at_tau: f64, at_half_tau: f64) -> bool {
    at_half_tau <= 1.25 * at_tau.max(1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Builtin;
    use crate::spaces::{Space, SpacePoint};

    fn setup() -> (Space, Builtin, SpacePoint) {
        let s = Space::euclidean(2);
        let z = SpacePoint::euclid(&[0.5, -0.5]);
        let e = Builtin::half_squared_distance(s.clone(), z.clone()).unwrap();
        (s, e, z)
    }

    #[test]
    fn theta_integral_matches_quadrature() {
        for (lambda, u) in [(1.0, 2.0), (-0.5, 1.0), (1e-7, 0.3), (0.0, 1.5)] {
            let n = 100_000;
            let h = u / n as f64;
            let theta = |r: f64| {
                if lambda == 0.0 {
                    r
                } else {
                    (1.0 - (-2.0 * lambda * r).exp()) / (2.0 * lambda)
                }
            };
            let quad: f64 = (0..n).map(|k| h * theta((k as f64 + 0.5) * h)).sum();
            assert!(
                (theta_integral(lambda, u) - quad).abs() < 1e-9,
                "{lambda} {u}"
            );
        }
    }

    #[test]
    fn quadratic_verifiers_pass_at_small_tau() {
        let (s, e, _) = setup();
        let y0 = SpacePoint::euclid(&[2.0, 1.0]);
        let traj = flow(&e, &y0, 2.0, 2000).unwrap();
        let tests: Vec<_> = (0..10)
            .map(|i| crate::harness::gen::gen_point(&s, i))
            .collect();
        assert!(verify_evi(&traj, &e, 1.0, &tests).unwrap().max_violation <= 1e-2);
        let other = flow(&e, &SpacePoint::euclid(&[-1.0, 0.0]), 2.0, 2000).unwrap();
        assert!(
            verify_contraction(&s, &traj, &other, 1.0)
                .unwrap()
                .max_violation
                <= 1e-2
        );
        assert!(
            verify_apriori(&traj, &SpacePoint::euclid(&[-1.0, 0.0]), &e, 1.0)
                .unwrap()
                .max_violation
                <= 1e-2
        );
        assert!(verify_regularization(&traj, &e, 1.0).unwrap().max_violation <= 1e-2);
        assert!(energy_identity(&traj, &e) < 0.05);
    }

    #[test]
    fn constant_trajectory_has_no_violation() {
        let (s, e, z) = setup();
        let traj = flow(&e, &z, 1.0, 100).unwrap();
        let tests: Vec<_> = (0..5)
            .map(|i| crate::harness::gen::gen_point(&s, i))
            .collect();
        for r in [
            verify_evi(&traj, &e, 1.0, &tests).unwrap(),
            verify_contraction(&s, &traj, &traj, 1.0).unwrap(),
            verify_regularization(&traj, &e, 1.0).unwrap(),
        ] {
            assert!(r.max_violation <= 1e-10, "{}: {}", r.check, r.max_violation);
        }
    }

    #[test]
    fn prox_is_firm() {
        let (s, e, _) = setup();
        let mut g = crate::harness::gen::Generator::new(2);
        let pairs: Vec<_> = (0..100).map(|_| (g.point(&s), g.point(&s))).collect();
        assert!(prox_firmness(&e, 0.3, &pairs).unwrap() <= 1e-12);
    }

    #[test]
    fn halving_rule() {
        assert!(halving_ok(4e-3, 2e-3));
        assert!(halving_ok(4e-3, 4.9e-3));
        assert!(!halving_ok(4e-3, 6e-3));
        assert!(halving_ok(0.0, 1e-13));
        assert!(halving_ok(7e-12, 9e-12));
        assert!(!halving_ok(1e-9, 2e-9));
    }
}
