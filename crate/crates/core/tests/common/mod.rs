//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use freqlens::freq_analysis::Heatmap;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub fn cosine_f64(u: &[f32], v: &[f32]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| *a as f64 * *b as f64).sum();
    let nu: f64 = u.iter().map(|a| (*a as f64).powi(2)).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| (*a as f64).powi(2)).sum::<f64>().sqrt();
    dot / (nu * nv)
}

/// Mean cosine to `a` minus mean cosine to `b`.
pub fn brute_force_bias(x: &[f32], a: &[&[f32]], b: &[&[f32]]) -> f64 {
    let mean = |g: &[&[f32]]| g.iter().map(|v| cosine_f64(x, v)).sum::<f64>() / g.len() as f64;
    mean(a) - mean(b)
}

/// Coefficients and standard errors from `(XᵀX)⁻¹`, with residual degrees
/// of freedom.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> (DVector<f64>, DVector<f64>, usize) {
    let n = x.len();
    let k = x[0].len();
    let xm = DMatrix::from_fn(n, k, |i, j| x[i][j]);
    let yv = DVector::from_column_slice(y);
    let xtx_inv = (xm.transpose() * &xm).try_inverse().unwrap();
    let beta = &xtx_inv * xm.transpose() * &yv;
    let resid = &yv - &xm * &beta;
    let sigma2 = resid.norm_squared() / (n - k) as f64;
    let se = DVector::from_fn(k, |i, _| (sigma2 * xtx_inv[(i, i)]).sqrt());
    (beta, se, n - k)
}

/// RMSE of occupied cell means around their unweighted mean, from the raw
/// pair values.
pub fn brute_force_rmse(h: &Heatmap) -> Option<f64> {
    let means: Vec<f64> = h
        .cells()
        .iter()
        .filter(|c| !c.values.is_empty())
        .map(|c| c.values.iter().sum::<f64>() / c.values.len() as f64)
        .collect();
    if means.is_empty() {
        return None;
    }
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    Some((means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / means.len() as f64).sqrt())
}

/// Eigenpairs of the sample covariance, largest first, with the trace.
pub fn dense_pca(points: &[Vec<f64>]) -> (Vec<f64>, Vec<DVector<f64>>, f64) {
    let n = points.len();
    let d = points[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, d, |i, j| points[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    let trace = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    (values, vectors, trace)
}
