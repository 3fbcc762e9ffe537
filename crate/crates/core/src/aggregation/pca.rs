//! Principal components of standardized team metrics.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PcaError {
    #[error("need at least 3 rows, got {0}")]
    TooFewRows(usize),
    #[error("need at least 2 columns, got {0}")]
    TooFewColumns(usize),
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow { row: String, found: usize, expected: usize },
    #[error("missing or non-finite value in row {row}, column {column}")]
    Missing { row: String, column: String },
    #[error("column {0} is constant")]
    ConstantColumn(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub columns: Vec<String>,
    pub rows: Vec<String>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub explained_ratio: Vec<f64>,
    /// `loadings[k][j]`: weight of column `j` in component `k`.
    pub loadings: Vec<Vec<f64>>,
    /// `scores[i][k]`: row `i` on component `k`.
    pub scores: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
    /// Standardized input, `standardized[i][j]`.
    pub standardized: Vec<Vec<f64>>,
}

/// Z-scores each column (sample standard deviation), diagonalizes the
/// correlation matrix and orients every component so that its largest
/// magnitude loading is positive.
pub fn style_pca(rows: &[(String, Vec<Option<f64>>)], columns: &[String]) -> Result<PcaResult, PcaError> {
    let n = rows.len();
    let p = columns.len();
    if n < 3 {
        return Err(PcaError::TooFewRows(n));
    }
    if p < 2 {
        return Err(PcaError::TooFewColumns(p));
    }
    let mut x = DMatrix::<f64>::zeros(n, p);
    for (i, (name, vals)) in rows.iter().enumerate() {
        if vals.len() != p {
            return Err(PcaError::RaggedRow {
                row: name.clone(),
                found: vals.len(),
                expected: p,
            });
        }
        for (j, v) in vals.iter().enumerate() {
            match v {
                Some(v) if v.is_finite() => x[(i, j)] = *v,
                _ => {
                    return Err(PcaError::Missing {
                        row: name.clone(),
                        column: columns[j].clone(),
                    })
                }
            }
        }
    }
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    for j in 0..p {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(PcaError::ConstantColumn(columns[j].clone()));
        }
        means[j] = mean;
        sds[j] = sd;
    }
    let z = DMatrix::from_fn(n, p, |i, j| (x[(i, j)] - means[j]) / sds[j]);
    let corr = (z.transpose() * &z) / (n - 1) as f64;
    let corr = (&corr + corr.transpose()) * 0.5;
    let eig = SymmetricEigen::new(corr.clone());

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().sum();
    let mut eigenvalues = Vec::with_capacity(p);
    let mut loadings = Vec::with_capacity(p);
    for &k in &order {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let mut pivot = 0;
        for j in 1..p {
            if v[j].abs() > v[pivot].abs() {
                pivot = j;
            }
        }
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        eigenvalues.push(eig.eigenvalues[k]);
        loadings.push(v);
    }
    let explained_ratio = eigenvalues.iter().map(|l| l / total).collect();
    let scores = (0..n)
        .map(|i| {
            loadings
                .iter()
                .map(|v| (0..p).map(|j| z[(i, j)] * v[j]).sum())
                .collect()
        })
        .collect();
    Ok(PcaResult {
        columns: columns.to_vec(),
        rows: rows.iter().map(|(r, _)| r.clone()).collect(),
        means,
        std_devs: sds,
        eigenvalues,
        explained_ratio,
        loadings,
        scores,
        correlation: (0..p).map(|i| (0..p).map(|j| corr[(i, j)]).collect()).collect(),
        standardized: (0..n).map(|i| (0..p).map(|j| z[(i, j)]).collect()).collect(),
    })
}
