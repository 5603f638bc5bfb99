//! Dense vector/matrix primitives, distances, the neighbour kernel, column
//! statistics and closed-form weighted ridge regression.
//!
//! Everything here is a pure function of its inputs. Matrices are small
//! (hundreds of columns at most), so the ridge solver forms the penalised
//! Gram matrix and factors it with a hand-written Cholesky decomposition.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest latent size used by the kernel's log-dimension scale.
pub const KERNEL_MIN_DIMENSIONS: usize = 100;

/// A finite vector of 64-bit floats.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vec64(Vec<f64>);

impl Vec64 {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Vec64(values))
    }

    pub fn zeros(len: usize) -> Self {
        Vec64(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Vec64 {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vec64 {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Vec64::new(values)
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat64 {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Mat64 {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::dim(rows * cols, values.len()));
        }
        check_finite(&values)?;
        Ok(Mat64 { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat64 {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::dim(cols, row.len()));
            }
            values.extend_from_slice(row);
        }
        Mat64::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    /// Returns the matrix made of the selected rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Mat64 {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Mat64 {
            rows: indices.len(),
            cols: self.cols,
            values,
        }
    }

    /// Returns the matrix made of the selected columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Mat64 {
        let mut values = Vec::with_capacity(self.rows * indices.len());
        for row in self.iter_rows() {
            values.extend(indices.iter().map(|&j| row[j]));
        }
        Mat64 {
            rows: self.rows,
            cols: indices.len(),
            values,
        }
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dim(a.len(), b.len()));
    }
    check_finite(a)?;
    check_finite(b)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Cosine similarity in `[-1, 1]`; fails on an all-zero vector.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("cosine distance of an all-zero vector".into()));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// `1 - cos(a, b)`, in `[0, 2]`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(1.0 - cosine_similarity(a, b)?)
}

/// Kernel weight of a neighbour at `distance` from the explained instance in
/// a latent space of `latent_dim` dimensions:
/// `exp(-distance * ln(D) / 2) * ln(D)` with `D = max(latent_dim, 100)`.
pub fn kernel_weight(distance: f64, latent_dim: usize) -> Result<f64> {
    if !(distance >= 0.0) || !distance.is_finite() {
        return Err(Error::Domain(format!(
            "kernel distance must be finite and >= 0, got {distance}"
        )));
    }
    if latent_dim == 0 {
        return Err(Error::Domain("latent dimension must be >= 1".into()));
    }
    let log_dims = (latent_dim.max(KERNEL_MIN_DIMENSIONS) as f64).ln();
    Ok((-distance * log_dims / 2.0).exp() * log_dims)
}

/// Per-dimension summary used to scale latent perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub dims: Vec<DimStats>,
}

impl FeatureStats {
    pub fn new(dims: Vec<DimStats>) -> Result<Self> {
        for (i, d) in dims.iter().enumerate() {
            check_finite(&[d.min, d.max, d.mean, d.std])?;
            if !(d.min <= d.mean && d.mean <= d.max && d.std >= 0.0) {
                return Err(Error::Validation(format!(
                    "feature stats {i}: need min <= mean <= max and std >= 0"
                )));
            }
        }
        Ok(FeatureStats { dims })
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn stds(&self) -> Vec<f64> {
        self.dims.iter().map(|d| d.std).collect()
    }
}

/// Column-wise min, max, mean and population standard deviation.
pub fn compute_feature_stats(x: &Mat64) -> Result<FeatureStats> {
    if x.rows() < 2 || x.cols() == 0 {
        return Err(Error::Domain(format!(
            "feature stats need at least 2 rows and 1 column, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let n = x.rows() as f64;
    let dims = (0..x.cols())
        .map(|j| {
            let col = x.column(j);
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            DimStats {
                min,
                max,
                // rounding can push the mean of a constant column past its bounds
                mean: mean.clamp(min, max),
                std: var.sqrt(),
            }
        })
        .collect();
    Ok(FeatureStats { dims })
}

/// A fitted linear model `y ≈ intercept + coefficients · x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
}

impl RidgeFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.coefficients, x)
    }
}

/// Weighted, mean-centred normal equations of a ridge problem.
///
/// The Gram matrix does not depend on the penalty, so a grid of alphas can be
/// solved from one instance.
#[derive(Debug, Clone)]
pub struct WeightedGram {
    gram: Vec<f64>,
    rhs: Vec<f64>,
    x_mean: Vec<f64>,
    y_mean: f64,
    p: usize,
}

impl WeightedGram {
    pub fn new(x: &Mat64, y: &[f64], weights: &[f64]) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if y.len() != n {
            return Err(Error::dim(n, y.len()));
        }
        if weights.len() != n {
            return Err(Error::dim(n, weights.len()));
        }
        check_finite(y)?;
        check_finite(weights)?;
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Domain("sample weights must be >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("at least one sample weight must be positive".into()));
        }

        let mut x_mean = vec![0.0; p];
        let mut y_mean = 0.0;
        for ((row, &yi), &w) in x.iter_rows().zip(y).zip(weights) {
            for (m, v) in x_mean.iter_mut().zip(row) {
                *m += w * v;
            }
            y_mean += w * yi;
        }
        x_mean.iter_mut().for_each(|m| *m /= total);
        y_mean /= total;

        let mut gram = vec![0.0; p * p];
        let mut rhs = vec![0.0; p];
        let mut centred = vec![0.0; p];
        for ((row, &yi), &w) in x.iter_rows().zip(y).zip(weights) {
            if w == 0.0 {
                continue;
            }
            for ((c, v), m) in centred.iter_mut().zip(row).zip(&x_mean) {
                *c = v - m;
            }
            let yc = w * (yi - y_mean);
            for a in 0..p {
                let wa = w * centred[a];
                if wa == 0.0 {
                    continue;
                }
                rhs[a] += centred[a] * yc;
                let grow = &mut gram[a * p..a * p + p];
                for b in a..p {
                    grow[b] += wa * centred[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                gram[a * p + b] = gram[b * p + a];
            }
        }

        Ok(WeightedGram {
            gram,
            rhs,
            x_mean,
            y_mean,
            p,
        })
    }

    pub fn solve(&self, alpha: f64) -> Result<RidgeFit> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
        }
        let p = self.p;
        let mut system = self.gram.clone();
        for i in 0..p {
            system[i * p + i] += alpha;
        }
        let factor = match cholesky(&system, p) {
            Some(l) => l,
            None if alpha == 0.0 => return Err(Error::RankDeficient),
            None => {
                for i in 0..p {
                    system[i * p + i] += 1e-10;
                }
                cholesky(&system, p).ok_or(Error::RankDeficient)?
            }
        };
        let coefficients = cholesky_solve(&factor, p, &self.rhs);
        let intercept = self.y_mean - dot(&coefficients, &self.x_mean);
        Ok(RidgeFit {
            coefficients,
            intercept,
            alpha,
        })
    }
}

/// Solves `(Xcᵀ W Xc + αI) β = Xcᵀ W yc` with weighted-mean centring; the
/// intercept absorbs the means and is not penalised.
pub fn weighted_ridge_fit(x: &Mat64, y: &[f64], weights: &[f64], alpha: f64) -> Result<RidgeFit> {
    WeightedGram::new(x, y, weights)?.solve(alpha)
}

/// Lower-triangular Cholesky factor of a symmetric matrix, or `None` when a
/// pivot is not safely positive.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > tol) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * z[k]).sum();
        z[i] = (z[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * z[k]).sum();
        z[i] = (z[i] - s) / l[i * n + i];
    }
    z
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
