//! Small dense linear algebra for the numeric components.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::limits::{Deadline, TimedOut};

pub(crate) type Matrix = Vec<Vec<f64>>;

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Population standard deviation.
pub(crate) fn std_dev(xs: &[f64], mean: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Covariance of the columns of a complete row-major matrix.
pub(crate) fn covariance(rows: &[Vec<f64>], means: &[f64]) -> Matrix {
    let d = means.len();
    let mut cov = vec![vec![0.0; d]; d];
    if rows.is_empty() {
        return cov;
    }
    for row in rows {
        for i in 0..d {
            let di = row[i] - means[i];
            for j in i..d {
                cov[i][j] += di * (row[j] - means[j]);
            }
        }
    }
    let n = rows.len() as f64;
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n;
            cov[j][i] = cov[i][j];
        }
    }
    cov
}

fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Eigenpairs of a symmetric positive semi-definite matrix by power iteration
/// with deflation, sorted by decreasing eigenvalue. Pairs whose eigenvalue is
/// not above `rel_tol * largest` are dropped.
pub(crate) fn power_eigen(
    matrix: &Matrix,
    rel_tol: f64,
    seed: u64,
    deadline: &Deadline,
) -> Result<Vec<(f64, Vec<f64>)>, TimedOut> {
    let d = matrix.len();
    let mut work = matrix.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::new();
    let scale = (0..d).map(|i| matrix[i][i].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(pairs);
    }
    for _ in 0..d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // keep the start vector orthogonal to what was already found
        for (_, u) in &pairs {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let n = norm(&v);
        if n == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= n);
        let mut lambda = 0.0;
        for iter in 0..2000 {
            if iter % 16 == 0 {
                deadline.check()?;
            }
            let w = mat_vec(&work, &v);
            let wn = norm(&w);
            if wn <= scale * 1e-15 {
                lambda = 0.0;
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / wn).collect();
            let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            lambda = wn;
            if delta < 1e-12 {
                break;
            }
        }
        let rayleigh: f64 = v.iter().zip(mat_vec(&work, &v)).map(|(a, b)| a * b).sum();
        lambda = if lambda == 0.0 { 0.0 } else { rayleigh };
        if lambda <= 0.0 {
            break;
        }
        for i in 0..d {
            for j in 0..d {
                work[i][j] -= lambda * v[i] * v[j];
            }
        }
        pairs.push((lambda, v));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let largest = pairs.first().map_or(0.0, |p| p.0);
    pairs.retain(|(l, _)| *l > rel_tol * largest && *l > scale * 1e-12);
    Ok(pairs)
}

/// Solves `a x = b` for symmetric positive-definite `a` by Cholesky.
pub(crate) fn solve_spd(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if v <= 0.0 || !v.is_finite() {
                    return None;
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Some(x)
}

/// Ridge least squares with an unpenalised intercept: returns (intercept, weights).
pub(crate) fn ridge_fit(rows: &[Vec<f64>], targets: &[f64], ridge: f64) -> (f64, Vec<f64>) {
    let d = rows.first().map_or(0, Vec::len);
    let x_means: Vec<f64> = (0..d).map(|j| mean(&rows.iter().map(|r| r[j]).collect::<Vec<_>>())).collect();
    let y_mean = mean(targets);
    let mut xtx = vec![vec![0.0; d]; d];
    let mut xty = vec![0.0; d];
    for (row, y) in rows.iter().zip(targets) {
        for i in 0..d {
            let xi = row[i] - x_means[i];
            xty[i] += xi * (y - y_mean);
            for j in 0..d {
                xtx[i][j] += xi * (row[j] - x_means[j]);
            }
        }
    }
    let diag_scale = (0..d).map(|i| xtx[i][i]).fold(0.0, f64::max).max(1.0);
    for (i, row) in xtx.iter_mut().enumerate() {
        row[i] += ridge.max(1e-12) * diag_scale;
    }
    let w = solve_spd(&xtx, &xty).unwrap_or_else(|| vec![0.0; d]);
    let intercept = y_mean - w.iter().zip(&x_means).map(|(a, b)| a * b).sum::<f64>();
    (intercept, w)
}

/// Linear-interpolated quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
