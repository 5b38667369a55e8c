//! Circumcenters (minimizers of max d²) and weighted Fréchet means.

use super::{charts, MetricSpace, Space, SpacePoint};
use crate::error::{Error, Result};
use crate::spaces::projection::golden_section;

/// `max_n d²(y, y_n)`.
pub fn circumcenter_objective(space: &Space, y: &SpacePoint, points: &[SpacePoint]) -> f64 {
    points
        .iter()
        .map(|p| space.distance(y, p).powi(2))
        .fold(0.0, f64::max)
}

/// Minimizer of `y ↦ max_n d²(y, y_n)`.
///
/// Spiders are solved exactly ray by ray. Riemannian spaces use an
/// ε-active descent: the descent direction points at the nearest point of
/// the convex hull of the log vectors of the nearly farthest points, and a
/// golden-section line search runs along the resulting geodesic.
pub fn circumcenter(space: &Space, points: &[SpacePoint]) -> Result<SpacePoint> {
    let first = points
        .first()
        .ok_or(Error::Empty("circumcenter needs at least one point"))?;
    if points.len() == 1 {
        return Ok(first.clone());
    }
    match space {
        Space::Spider { rays } => Ok(spider_circumcenter(*rays, points)),
        _ if space.is_riemannian() => riemannian_circumcenter(space, points),
        _ => Err(Error::Unsupported(
            "circumcenter on products with spider factors".into(),
        )),
    }
}

fn spider_coords(p: &SpacePoint) -> (usize, f64) {
    match p {
        SpacePoint::Spider { ray, t } => (*ray, *t),
        _ => (0, f64::NAN),
    }
}

fn spider_circumcenter(rays: usize, points: &[SpacePoint]) -> SpacePoint {
    // On ray k at height s every squared distance is (s − c_n)² with
    // c_n = t_n on the same ray and −t_n elsewhere; the upper envelope of
    // unit parabolas is minimized at the midpoint of the extreme centers.
    let mut best = (f64::INFINITY, SpacePoint::spider_origin());
    for k in 1..=rays {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            let (r, t) = spider_coords(p);
            let c = if r == k || r == 0 { t } else { -t };
            lo = lo.min(c);
            hi = hi.max(c);
        }
        let s = (0.5 * (lo + hi)).max(0.0);
        let value = (s - lo).powi(2).max((s - hi).powi(2));
        if value < best.0 {
            best = (value, SpacePoint::spider(k, s));
        }
    }
    best.1
}

fn riemannian_circumcenter(space: &Space, points: &[SpacePoint]) -> Result<SpacePoint> {
    let scale = points
        .iter()
        .map(|p| space.distance(&points[0], p))
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut y = weighted_frechet_mean(space, points, &vec![1.0; points.len()], &points[0])?;
    let mut f = circumcenter_objective(space, &y, points);
    let mut eps = 0.5 * f;
    for _ in 0..20_000 {
        if eps <= 1e-15 * scale * scale {
            break;
        }
        let logs: Vec<Vec<f64>> = points
            .iter()
            .filter(|p| space.distance(&y, p).powi(2) >= f - eps)
            .map(|p| space.riemannian_log(&y, p).unwrap_or_default())
            .collect();
        let gram: Vec<Vec<f64>> = logs
            .iter()
            .map(|v| logs.iter().map(|w| space.riemannian_inner(v, w)).collect())
            .collect();
        let weights = min_norm_point(&gram);
        let mut q = vec![0.0; space.ambient_dim()];
        for (w, v) in weights.iter().zip(&logs) {
            q = charts::axpy(*w, v, &q);
        }
        let qn = space.riemannian_inner(&q, &q).max(0.0).sqrt();
        if qn <= 1e-14 * scale {
            eps *= 0.1;
            continue;
        }
        let along = |s: f64| -> Result<f64> {
            let v: Vec<f64> = q.iter().map(|c| c * s).collect();
            let p = space
                .riemannian_exp(&y, &v)
                .ok_or(Error::Unsupported("exp".into()))?;
            Ok(circumcenter_objective(space, &p, points))
        };
        let s = golden_section(along, 0.0, 1.0, 1e-13)?;
        let v: Vec<f64> = q.iter().map(|c| c * s).collect();
        let cand = space
            .riemannian_exp(&y, &v)
            .ok_or(Error::Unsupported("exp".into()))?;
        let fc = circumcenter_objective(space, &cand, points);
        if fc < f {
            let gain = f - fc;
            y = cand;
            f = fc;
            if gain <= 1e-16 * f.max(1e-300) {
                eps *= 0.1;
            }
        } else {
            eps *= 0.1;
        }
    }
    Ok(y)
}

/// Barycentric weights of the minimum-norm point in the convex hull of
/// vectors given by their Gram matrix (Wolfe's algorithm).
pub(crate) fn min_norm_point(gram: &[Vec<f64>]) -> Vec<f64> {
    let n = gram.len();
    let scale = (0..n).map(|i| gram[i][i]).fold(0.0, f64::max).max(1e-300);
    let start = (0..n)
        .min_by(|&i, &j| gram[i][i].total_cmp(&gram[j][j]))
        .unwrap_or(0);
    let mut corral = vec![start];
    let mut lambda = vec![0.0; n];
    lambda[start] = 1.0;
    for _ in 0..(50 * n + 50) {
        let gx: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| lambda[i] * gram[i][j]).sum())
            .collect();
        let xx: f64 = (0..n).map(|i| lambda[i] * gx[i]).sum();
        let (j, gj) = gx
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0));
        if xx - gj <= 1e-13 * scale || corral.contains(&j) {
            break;
        }
        corral.push(j);
        while let Some(mu) = affine_min(gram, &corral) {
            if mu.iter().all(|m| *m > 1e-15) {
                for (k, &i) in corral.iter().enumerate() {
                    lambda[i] = mu[k];
                }
                break;
            }
            let mut theta: f64 = 1.0;
            for (k, &i) in corral.iter().enumerate() {
                if mu[k] <= 1e-15 && lambda[i] - mu[k] > 0.0 {
                    theta = theta.min(lambda[i] / (lambda[i] - mu[k]));
                }
            }
            for (k, &i) in corral.iter().enumerate() {
                lambda[i] += theta * (mu[k] - lambda[i]);
            }
            corral.retain(|&i| lambda[i] > 1e-15);
            for (i, l) in lambda.iter_mut().enumerate() {
                if !corral.contains(&i) {
                    *l = 0.0;
                }
            }
            if corral.len() <= 1 {
                if let Some(&i) = corral.first() {
                    lambda[i] = 1.0;
                }
                break;
            }
        }
    }
    lambda
}

/// Minimizer of |Σ μ_i p_i|² subject to Σ μ_i = 1 over the corral.
fn affine_min(gram: &[Vec<f64>], corral: &[usize]) -> Option<Vec<f64>> {
    let m = corral.len();
    let mut a = vec![vec![0.0; m + 2]; m + 1];
    for (r, &i) in corral.iter().enumerate() {
        for (c, &j) in corral.iter().enumerate() {
            a[r][c] = gram[i][j];
        }
        a[r][m] = 1.0;
        a[r][m + 1] = 0.0;
    }
    for c in 0..m {
        a[m][c] = 1.0;
    }
    a[m][m + 1] = 1.0;
    let x = solve(a)?;
    Some(x[..m].to_vec())
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..=n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Minimizer of `Σ w_i d²(·, p_i)`, starting from `init` where iterative.
///
/// Euclidean spaces use the weighted average and spiders the per-ray
/// quadratic; Riemannian charts run the Karcher fixed-point iteration.
/// A zero total weight returns `init`.
pub fn weighted_frechet_mean(
    space: &Space,
    points: &[SpacePoint],
    weights: &[f64],
    init: &SpacePoint,
) -> Result<SpacePoint> {
    if points.is_empty() {
        return Err(Error::Empty("Fréchet mean needs at least one point"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Ok(init.clone());
    }
    match (space, init) {
        (Space::Euclidean { dim }, _) => {
            let mut acc = vec![0.0; *dim];
            for (p, w) in points.iter().zip(weights) {
                if let SpacePoint::Euclid(x) = p {
                    acc = charts::axpy(*w / total, x, &acc);
                }
            }
            Ok(SpacePoint::Euclid(acc))
        }
        (Space::Spider { rays }, _) => {
            // On ray k, Σ w_i (s − c_i)² is minimized at the weighted mean
            // of the signed centers, clamped at the origin.
            let mut best = (f64::INFINITY, SpacePoint::spider_origin());
            for k in 1..=*rays {
                let mean: f64 = points
                    .iter()
                    .zip(weights)
                    .map(|(p, w)| {
                        let (r, t) = spider_coords(p);
                        w * if r == k || r == 0 { t } else { -t }
                    })
                    .sum::<f64>()
                    / total;
                let cand = SpacePoint::spider(k, mean.max(0.0));
                let value: f64 = points
                    .iter()
                    .zip(weights)
                    .map(|(p, w)| w * space.distance(&cand, p).powi(2))
                    .sum();
                if value < best.0 {
                    best = (value, cand);
                }
            }
            Ok(best.1)
        }
        (Space::Product { factors }, SpacePoint::Product(init_parts)) => {
            let parts = factors
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let comp: Vec<SpacePoint> = points
                        .iter()
                        .map(|p| match p {
                            SpacePoint::Product(ps) => ps[i].clone(),
                            other => other.clone(),
                        })
                        .collect();
                    weighted_frechet_mean(f, &comp, weights, &init_parts[i])
                })
                .collect::<Result<_>>()?;
            Ok(SpacePoint::Product(parts))
        }
        _ if space.is_riemannian() => {
            let mut y = init.clone();
            for _ in 0..500 {
                let mut step = vec![0.0; space.ambient_dim()];
                for (p, w) in points.iter().zip(weights) {
                    let v = space.riemannian_log(&y, p).unwrap_or_default();
                    step = charts::axpy(*w / total, &v, &step);
                }
                let len = space.riemannian_inner(&step, &step).max(0.0).sqrt();
                y = space
                    .riemannian_exp(&y, &step)
                    .ok_or(Error::Unsupported("exp".into()))?;
                if len <= 1e-15 {
                    return Ok(y);
                }
            }
            Ok(y)
        }
        _ => Err(Error::Unsupported("Fréchet mean for this space".into())),
    }
}
