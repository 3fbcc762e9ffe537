//! Least squares by Householder QR.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OlsError {
    #[error("{rows} rows for {columns} columns")]
    TooFewRows { rows: usize, columns: usize },
    /// Indices of the columns involved in an exact linear dependency.
    #[error("collinear columns {0:?}")]
    RankDeficient(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `rss / (n - p)`.
    pub residual_variance: f64,
}

/// Relative size below which a diagonal entry of `R` counts as zero.
const RANK_TOL: f64 = 1e-9;

/// Fits `y ≈ X β` for row-major `X` with `n > p`. Standard errors come from
/// `σ² (RᵀR)⁻¹ = σ² R⁻¹R⁻ᵀ`; the normal equations are never formed.
pub fn ols_qr(rows: &[Vec<f64>], y: &[f64]) -> Result<OlsFit, OlsError> {
    let n = rows.len();
    let p = rows.first().map_or(0, |r| r.len());
    if n <= p || p == 0 {
        return Err(OlsError::TooFewRows { rows: n, columns: p });
    }
    // Column-major working copy.
    let mut a = vec![0.0; n * p];
    for (i, r) in rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            a[j * n + i] = v;
        }
    }
    let col_norm: Vec<f64> = (0..p).map(|j| a[j * n..(j + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut qty = y.to_vec();

    let mut v = vec![0.0; n];
    for k in 0..p {
        let col = &a[k * n..(k + 1) * n];
        let norm = col[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        let len = n - k;
        v[..len].copy_from_slice(&col[k..]);
        v[0] -= alpha;
        let vnorm2: f64 = v[..len].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |target: &mut [f64]| {
            let s = 2.0 * v[..len].iter().zip(target.iter()).map(|(a, b)| a * b).sum::<f64>() / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v[..len]) {
                *t -= s * vi;
            }
        };
        for j in k + 1..p {
            reflect(&mut a[j * n + k..(j + 1) * n]);
        }
        reflect(&mut qty[k..]);
        a[k * n + k] = alpha;
        for x in &mut a[k * n + k + 1..(k + 1) * n] {
            *x = 0.0;
        }
    }
    let r = |i: usize, j: usize| a[j * n + i];

    let deficient: Vec<usize> = (0..p).filter(|&k| r(k, k).abs() <= RANK_TOL * col_norm[k].max(f64::MIN_POSITIVE)).collect();
    if !deficient.is_empty() {
        let mut involved = Vec::new();
        for &k in &deficient {
            involved.push(k);
            // Express column k through the independent earlier columns.
            let mut c = vec![0.0; k];
            for i in (0..k).rev() {
                if deficient.contains(&i) {
                    continue;
                }
                let s: f64 = (i + 1..k).map(|j| r(i, j) * c[j]).sum();
                c[i] = (r(i, k) - s) / r(i, i);
            }
            let scale = col_norm[k].max(f64::MIN_POSITIVE);
            involved.extend((0..k).filter(|&i| (c[i] * col_norm[i]).abs() > 1e-8 * scale));
        }
        involved.sort_unstable();
        involved.dedup();
        return Err(OlsError::RankDeficient(involved));
    }

    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }
    let residuals: Vec<f64> = rows
        .iter()
        .zip(y)
        .map(|(row, &yi)| yi - row.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let residual_variance = rss / (n - p) as f64;

    // R⁻¹ column by column; upper triangular.
    let mut rinv = vec![vec![0.0; p]; p];
    for col in 0..p {
        for i in (0..=col).rev() {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=col).map(|j| r(i, j) * rinv[j][col]).sum();
            rinv[i][col] = (rhs - s) / r(i, i);
        }
    }
    let std_errors = (0..p)
        .map(|j| (residual_variance * rinv[j][j..].iter().map(|x| x * x).sum::<f64>()).sqrt())
        .collect();
    Ok(OlsFit {
        beta,
        std_errors,
        residuals,
        residual_variance,
    })
}
