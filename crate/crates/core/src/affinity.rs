//! Builders for pairwise affinity matrices.
//!
//! Four constructions are provided: a statistical one over feature columns
//! (rank correlation mixed with spread), a Gaussian kernel over rows, raw
//! dot-product scores between query and key rows, and the concatenation
//! scorer used by graph attention layers.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Default mix between spread and decorrelation in [`build_corr_affinity`].
pub const DEFAULT_BETA: f64 = 0.5;
/// Default negative slope of the leaky ReLU in [`build_gat_scores`].
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

/// Samples-by-features table with one name per column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    data: Matrix,
    feature_names: Vec<String>,
}

impl FeatureDataset {
    pub fn new(data: Matrix, feature_names: Vec<String>) -> Result<Self> {
        if data.rows() < 2 {
            return Err(Error::EmptyDataset {
                what: "samples",
                required: 2,
                found: data.rows(),
            });
        }
        if feature_names.len() != data.cols() {
            return Err(Error::mismatch(
                "FeatureDataset::new",
                format!("{} feature names", data.cols()),
                format!("{}", feature_names.len()),
            ));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if name.is_empty() || !seen.insert(name.as_str()) {
                return Err(Error::InvalidFeatureName(name.clone()));
            }
        }
        Ok(Self {
            data,
            feature_names,
        })
    }

    /// Dataset with generated names `f0, f1, ...`.
    pub fn unnamed(data: Matrix) -> Result<Self> {
        let names = (0..data.cols()).map(|j| format!("f{j}")).collect();
        Self::new(data, names)
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_samples(&self) -> usize {
        self.data.rows()
    }

    pub fn n_features(&self) -> usize {
        self.data.cols()
    }
}

/// Square matrix with two optional, validated claims about its entries.
///
/// A flag that is set is guaranteed to hold; an unset flag claims nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    m: Matrix,
    nonnegative: bool,
    zero_diagonal: bool,
}

impl AffinityMatrix {
    /// Wraps `m`, setting each flag to whatever the entries satisfy.
    pub fn new(m: Matrix) -> Result<Self> {
        m.require_square("AffinityMatrix::new")?;
        let nonnegative = m.as_slice().iter().all(|&v| v >= 0.0);
        let zero_diagonal = (0..m.rows()).all(|i| m[(i, i)] == 0.0);
        Ok(Self {
            m,
            nonnegative,
            zero_diagonal,
        })
    }

    /// Wraps `m` with explicit claims, rejecting any claim that does not hold.
    pub fn with_flags(m: Matrix, nonnegative: bool, zero_diagonal: bool) -> Result<Self> {
        let inspected = Self::new(m)?;
        if nonnegative && !inspected.nonnegative {
            let p = inspected.m.as_slice().iter().position(|&v| !(v >= 0.0)).unwrap_or(0);
            let n = inspected.m.cols();
            return Err(Error::NegativeEntries {
                op: "AffinityMatrix::with_flags",
                row: p / n,
                col: p % n,
            });
        }
        if zero_diagonal && !inspected.zero_diagonal {
            return Err(Error::InvalidParameter {
                name: "zero_diagonal",
                reason: "diagonal has a nonzero entry".into(),
            });
        }
        Ok(Self {
            nonnegative,
            zero_diagonal,
            ..inspected
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn has_zero_diagonal(&self) -> bool {
        self.zero_diagonal
    }

    /// `P A P^T`; flags are preserved since permutation keeps both properties.
    pub fn permuted(&self, perm: &[usize]) -> AffinityMatrix {
        AffinityMatrix {
            m: self.m.permute_symmetric(perm),
            ..*self
        }
    }

    pub(crate) fn require_nonnegative(&self, op: &'static str) -> Result<()> {
        if self.nonnegative {
            return Ok(());
        }
        let n = self.m.cols();
        match self.m.as_slice().iter().position(|&v| !(v >= 0.0)) {
            Some(p) => Err(Error::NegativeEntries {
                op,
                row: p / n,
                col: p % n,
            }),
            None => Ok(()),
        }
    }
}

/// Fractional ranks (1-based) with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation; 0 when either column is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Feature-graph affinity mixing spread and rank decorrelation:
///
/// `A_ij = beta * max(s_i, s_j) + (1 - beta) * (1 - |spearman(i, j)|)`
///
/// where `s` is each column's standard deviation divided by the largest one
/// (all zero when every column is constant). The diagonal is zero.
pub fn build_corr_affinity(ds: &FeatureDataset, beta: f64) -> Result<AffinityMatrix> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter {
            name: "beta",
            reason: format!("must lie in [0, 1], got {beta}"),
        });
    }
    let n = ds.n_features();
    if n < 2 {
        return Err(Error::EmptyDataset {
            what: "features",
            required: 2,
            found: n,
        });
    }
    ds.data().require_finite("build_corr_affinity")?;

    let columns: Vec<Vec<f64>> = (0..n).map(|j| ds.data().column(j)).collect();
    let ranks: Vec<Vec<f64>> = columns.iter().map(|c| average_ranks(c)).collect();
    let sd: Vec<f64> = columns.iter().map(|c| std_dev(c)).collect();
    let sd_max = sd.iter().copied().fold(0.0, f64::max);
    let spread: Vec<f64> = if sd_max > 0.0 {
        sd.iter().map(|s| s / sd_max).collect()
    } else {
        vec![0.0; n]
    };

    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let rho = pearson(&ranks[i], &ranks[j]);
            let v = beta * spread[i].max(spread[j]) + (1.0 - beta) * (1.0 - rho.abs());
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    AffinityMatrix::with_flags(m, true, true)
}

/// Raw scores `q_i . k_j` for every query row against every key row.
pub fn dot_product_scores(q: &Matrix, k: &Matrix) -> Result<Matrix> {
    if q.cols() != k.cols() {
        return Err(Error::mismatch(
            "dot_product_scores",
            format!("keys with {} columns", q.cols()),
            format!("{}x{}", k.rows(), k.cols()),
        ));
    }
    q.matmul_transposed(k)
}

/// Self-affinity `Q K^T` for equally sized query and key sets. Use
/// [`dot_product_scores`] for rectangular (cross-attention) scores.
pub fn build_dot_product_affinity(q: &Matrix, k: &Matrix) -> Result<AffinityMatrix> {
    let scores = dot_product_scores(q, k)?;
    AffinityMatrix::with_flags(scores, false, false)
}

/// Gaussian kernel over rows: `A_ij = exp(-|x_i - x_j|^2 / h^2)`.
pub fn build_gaussian_affinity(x: &Matrix, h: f64) -> Result<AffinityMatrix> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    x.require_finite("build_gaussian_affinity")?;
    let n = x.rows();
    let h2 = h * h;
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in i + 1..n {
            let d2: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let v = (-d2 / h2).exp();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    AffinityMatrix::with_flags(m, true, false)
}

#[inline]
pub fn leaky_relu(z: f64, slope: f64) -> f64 {
    if z >= 0.0 {
        z
    } else {
        slope * z
    }
}

/// Graph-attention scores `e_ij = LeakyReLU(a . [W h_i || W h_j])` for all
/// ordered pairs. `a` has length `2 F'` where `W` is `F x F'`.
pub fn build_gat_scores(h: &Matrix, w: &Matrix, a: &[f64], slope: f64) -> Result<Matrix> {
    if !(slope > 0.0 && slope < 1.0) {
        return Err(Error::InvalidParameter {
            name: "slope",
            reason: format!("must lie in (0, 1), got {slope}"),
        });
    }
    if h.cols() != w.rows() {
        return Err(Error::mismatch(
            "build_gat_scores",
            format!("W with {} rows", h.cols()),
            format!("{}x{}", w.rows(), w.cols()),
        ));
    }
    let f_out = w.cols();
    if a.len() != 2 * f_out {
        return Err(Error::mismatch(
            "build_gat_scores",
            format!("attention vector of length {}", 2 * f_out),
            format!("length {}", a.len()),
        ));
    }
    let wh = h.matmul(w)?;
    let (a_src, a_dst) = a.split_at(f_out);
    // a . [u || v] splits into a_src . u + a_dst . v
    let src: Vec<f64> = (0..wh.rows()).map(|i| dot(a_src, wh.row(i))).collect();
    let dst: Vec<f64> = (0..wh.rows()).map(|j| dot(a_dst, wh.row(j))).collect();
    let n = h.rows();
    Ok(Matrix::from_fn(n, n, |i, j| leaky_relu(src[i] + dst[j], slope)))
}
