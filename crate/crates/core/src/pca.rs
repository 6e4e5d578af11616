//! Principal component analysis over the feature matrix.
//!
//! Works on the correlation matrix of standardized features, so scale
//! differences between seconds, kilometers, and m/s2 columns do not
//! leak into the component weights. The eigensolver is a cyclic Jacobi
//! sweep: at 12x12 it is exact enough and has no convergence surprises
//! on symmetric input.

use crate::config::PcaConfig;
use crate::error::{Error, Result};

/// Dense row-major matrix. Small, owned, no aliasing tricks.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }
}

/// Standardized data plus the fit: (z, means, stds, kept columns).
pub type Standardized = (Mat, Vec<f64>, Vec<f64>, Vec<usize>);

/// Center and scale each column to unit sample variance.
///
/// A constant column cannot be standardized; it is an error unless
/// `drop_constant`, in which case it is removed and reported through
/// the returned kept-column indices.
pub fn standardize(m: &Mat, drop_constant: bool) -> Result<Standardized> {
    let n = m.rows;
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "standardization needs at least 2 rows, got {n}"
        )));
    }
    let mut means = Vec::with_capacity(m.cols);
    let mut stds = Vec::with_capacity(m.cols);
    let mut kept = Vec::with_capacity(m.cols);
    for j in 0..m.cols {
        let mean = (0..n).map(|i| m.at(i, j)).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (m.at(i, j) - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let std = var.sqrt();
        if std <= f64::EPSILON * mean.abs().max(1.0) {
            if drop_constant {
                continue;
            }
            return Err(Error::Numeric(format!(
                "column {j} is constant across all rows; standardization is undefined"
            )));
        }
        means.push(mean);
        stds.push(std);
        kept.push(j);
    }
    if kept.is_empty() {
        return Err(Error::Numeric("every column is constant".into()));
    }
    let mut z = Mat::zeros(n, kept.len());
    for (jj, &j) in kept.iter().enumerate() {
        for i in 0..n {
            *z.at_mut(i, jj) = (m.at(i, j) - means[jj]) / stds[jj];
        }
    }
    Ok((z, means, stds, kept))
}

/// Correlation matrix of already-standardized data: normalized cross
/// products, clamped into [-1, 1] against rounding spill.
pub fn correlation_matrix(z: &Mat) -> Mat {
    let n = z.rows as f64;
    let p = z.cols;
    let mut r = Mat::zeros(p, p);
    for j in 0..p {
        for k in j..p {
            let mut s = 0.0;
            for i in 0..z.rows {
                s += z.at(i, j) * z.at(i, k);
            }
            let v = (s / (n - 1.0)).clamp(-1.0, 1.0);
            *r.at_mut(j, k) = v;
            *r.at_mut(k, j) = v;
        }
    }
    r
}

fn off_diagonal_norm(a: &Mat) -> f64 {
    let mut s = 0.0;
    for i in 0..a.rows {
        for j in 0..a.cols {
            if i != j {
                s += a.at(i, j) * a.at(i, j);
            }
        }
    }
    s.sqrt()
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching
/// eigenvectors as columns. Each eigenvector is normalized so its
/// largest-magnitude entry (first such entry on ties) is positive;
/// exact eigenvalue ties are ordered by lexicographic comparison of
/// the vectors so the output is a deterministic function of the input.
pub fn eigendecompose_sym(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    let p = a.rows;
    if p != a.cols {
        return Err(Error::Numeric(format!("matrix is {}x{}, not square", a.rows, a.cols)));
    }
    let mut m = a.clone();
    let mut v = Mat::identity(p);
    let mut converged = off_diagonal_norm(&m) <= JACOBI_TOL;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let apq = m.at(i, j);
                if apq == 0.0 {
                    continue;
                }
                let tau = (m.at(j, j) - m.at(i, i)) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let (app, aqq) = (m.at(i, i), m.at(j, j));
                *m.at_mut(i, i) = app - t * apq;
                *m.at_mut(j, j) = aqq + t * apq;
                *m.at_mut(i, j) = 0.0;
                *m.at_mut(j, i) = 0.0;
                for k in 0..p {
                    if k == i || k == j {
                        continue;
                    }
                    let aki = m.at(k, i);
                    let akj = m.at(k, j);
                    let ni = c * aki - s * akj;
                    let nj = s * aki + c * akj;
                    *m.at_mut(k, i) = ni;
                    *m.at_mut(i, k) = ni;
                    *m.at_mut(k, j) = nj;
                    *m.at_mut(j, k) = nj;
                }
                for k in 0..p {
                    let vki = v.at(k, i);
                    let vkj = v.at(k, j);
                    *v.at_mut(k, i) = c * vki - s * vkj;
                    *v.at_mut(k, j) = s * vki + c * vkj;
                }
            }
        }
        converged = off_diagonal_norm(&m) <= JACOBI_TOL;
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut pairs: Vec<(f64, Vec<f64>)> =
        (0..p).map(|j| (m.at(j, j), fix_sign(v.column(j)))).collect();
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| lex_cmp(&a.1, &b.1))
    });
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors = Mat::zeros(p, p);
    for (j, (_, col)) in pairs.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            *vectors.at_mut(i, j) = *v;
        }
    }
    Ok((eigenvalues, vectors))
}

fn fix_sign(mut col: Vec<f64>) -> Vec<f64> {
    let mut best = 0usize;
    for (i, x) in col.iter().enumerate() {
        if x.abs() > col[best].abs() {
            best = i;
        }
    }
    if col[best] < 0.0 {
        for x in &mut col {
            *x = -*x;
        }
    }
    col
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap() {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Per-component share of total variance, plus the running sum.
pub fn contribution_rates(eigenvalues: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 || total.is_nan() {
        return Err(Error::Numeric(format!("eigenvalue total {total} is not positive")));
    }
    let rates: Vec<f64> = eigenvalues.iter().map(|l| l / total).collect();
    let mut cum = Vec::with_capacity(rates.len());
    let mut acc = 0.0;
    for r in &rates {
        acc += r;
        cum.push(acc);
    }
    Ok((rates, cum))
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub k: usize,
    pub rates: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Variance actually covered by the first k components.
    pub cumulative_k: f64,
    /// True when that coverage misses the configured target; the
    /// selection stands, but callers should surface the shortfall.
    pub cumulative_short: bool,
}

/// Keep every component whose eigenvalue is at least the threshold.
pub fn select_components(eigenvalues: &[f64], cfg: &PcaConfig) -> Result<Selection> {
    let (rates, cumulative) = contribution_rates(eigenvalues)?;
    let k = eigenvalues.iter().filter(|l| **l >= cfg.eig_threshold).count();
    if k == 0 {
        return Err(Error::Selection(format!(
            "no eigenvalue reaches {}; largest is {}",
            cfg.eig_threshold,
            eigenvalues.first().copied().unwrap_or(f64::NAN)
        )));
    }
    let cumulative_k = cumulative[k - 1];
    Ok(Selection {
        k,
        rates,
        cumulative,
        cumulative_k,
        cumulative_short: cumulative_k < cfg.cum_threshold,
    })
}

/// Project standardized rows onto the first k component axes.
pub fn project(z: &Mat, loadings: &Mat, k: usize) -> Mat {
    let mut out = Mat::zeros(z.rows, k);
    for i in 0..z.rows {
        for j in 0..k {
            let mut s = 0.0;
            for f in 0..z.cols {
                s += z.at(i, f) * loadings.at(f, j);
            }
            *out.at_mut(i, j) = s;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Original column indices that survived standardization.
    pub kept_columns: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    /// Columns are component axes, in eigenvalue order.
    pub loadings: Mat,
    pub rates: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub k: usize,
    pub cumulative_short: bool,
}

impl PcaModel {
    /// Standardize with the fitted means and scales, then project onto
    /// the selected components.
    pub fn transform(&self, m: &Mat) -> Result<Mat> {
        let need = self.kept_columns.iter().max().map_or(0, |j| j + 1);
        if m.cols < need {
            return Err(Error::Validation(format!(
                "matrix has {} columns, model needs at least {need}",
                m.cols
            )));
        }
        let mut z = Mat::zeros(m.rows, self.kept_columns.len());
        for (jj, &j) in self.kept_columns.iter().enumerate() {
            for i in 0..m.rows {
                *z.at_mut(i, jj) = (m.at(i, j) - self.means[jj]) / self.stds[jj];
            }
        }
        Ok(project(&z, &self.loadings, self.k))
    }
}

/// Fit on a feature matrix and return the model plus the scores of the
/// fitting rows.
pub fn fit_transform(m: &Mat, cfg: &PcaConfig) -> Result<(PcaModel, Mat)> {
    let (z, means, stds, kept_columns) = standardize(m, cfg.drop_constant)?;
    let r = correlation_matrix(&z);
    let (eigenvalues, loadings) = eigendecompose_sym(&r)?;
    let sel = select_components(&eigenvalues, cfg)?;
    let scores = project(&z, &loadings, sel.k);
    Ok((
        PcaModel {
            means,
            stds,
            kept_columns,
            eigenvalues,
            loadings,
            rates: sel.rates,
            cumulative: sel.cumulative,
            k: sel.k,
            cumulative_short: sel.cumulative_short,
        },
        scores,
    ))
}
