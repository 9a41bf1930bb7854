//! Turning raw scores into weights: row softmax (plain, scaled, masked),
//! symmetric degree normalisation, and the spectral-radius bound that keeps
//! power series over an affinity matrix convergent.

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::par;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;
/// Default position of `alpha * rho` inside the convergence interval (0, 1).
pub const DEFAULT_ALPHA_FRACTION: f64 = 0.5;

/// Which entries each row may attend to. Row `i` lists the neighborhood of `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodMask {
    n: usize,
    allowed: Vec<bool>,
}

impl NeighborhoodMask {
    /// Row-major `n x n` table; every row needs at least one allowed entry.
    pub fn new(n: usize, allowed: Vec<bool>) -> Result<Self> {
        if allowed.len() != n * n {
            return Err(Error::mismatch(
                "NeighborhoodMask::new",
                format!("{} entries", n * n),
                format!("{}", allowed.len()),
            ));
        }
        if let Some(row) = (0..n).find(|&i| !allowed[i * n..(i + 1) * n].iter().any(|&a| a)) {
            return Err(Error::EmptyNeighborhood { row });
        }
        Ok(Self { n, allowed })
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::mismatch(
                "NeighborhoodMask::from_rows",
                format!("{n} columns"),
                format!("{}", bad.len()),
            ));
        }
        Self::new(n, rows.concat())
    }

    pub fn full(n: usize) -> Self {
        Self {
            n,
            allowed: vec![true; n * n],
        }
    }

    /// Neighborhoods from the nonzero pattern of an adjacency matrix.
    pub fn from_adjacency(adj: &Matrix, self_loops: bool) -> Result<Self> {
        adj.require_square("NeighborhoodMask::from_adjacency")?;
        let n = adj.rows();
        let allowed = (0..n * n)
            .map(|p| adj.as_slice()[p] != 0.0 || (self_loops && p / n == p % n))
            .collect();
        Self::new(n, allowed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[bool] {
        &self.allowed[i * self.n..(i + 1) * self.n]
    }
}

/// A series weight `alpha` paired with the spectral radius it was chosen for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaScaling {
    alpha: f64,
    rho: f64,
}

impl AlphaScaling {
    /// Fails with [`Error::ConvergenceBound`] unless `alpha * rho < 1`.
    pub fn new(alpha: f64, rho: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be positive and finite, got {alpha}"),
            });
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: format!("must be nonnegative and finite, got {rho}"),
            });
        }
        let product = alpha * rho;
        if product >= 1.0 {
            return Err(Error::ConvergenceBound {
                alpha,
                rho,
                product,
            });
        }
        Ok(Self { alpha, rho })
    }

    /// Estimates `rho(A)` and checks the bound for a caller-chosen `alpha`.
    pub fn for_matrix(a: &AffinityMatrix, alpha: f64) -> Result<Self> {
        let rho = spectral_radius(a, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        Self::new(alpha, rho)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Numerically stable softmax of every row.
pub fn softmax_rows(s: &Matrix) -> Result<Matrix> {
    s.require_finite("softmax_rows")?;
    let mut out = s.clone();
    let cols = out.cols();
    par::for_each_row(out.as_mut_slice(), cols, |_, row| softmax_in_place(row));
    Ok(out)
}

/// Divides every score by `sqrt(d_k)`.
pub fn scale_scores(s: &Matrix, d_k: usize) -> Result<Matrix> {
    if d_k == 0 {
        return Err(Error::InvalidParameter {
            name: "d_k",
            reason: "must be at least 1".into(),
        });
    }
    s.require_finite("scale_scores")?;
    if d_k == 1 {
        return Ok(s.clone());
    }
    let root = (d_k as f64).sqrt();
    Ok(s.map(|v| v / root))
}

/// Softmax restricted to each row's neighborhood; entries outside it are 0.
pub fn masked_softmax_rows(s: &Matrix, mask: &NeighborhoodMask) -> Result<Matrix> {
    if s.rows() != mask.n() || s.cols() != mask.n() {
        return Err(Error::mismatch(
            "masked_softmax_rows",
            format!("{0}x{0} scores", mask.n()),
            format!("{}x{}", s.rows(), s.cols()),
        ));
    }
    s.require_finite("masked_softmax_rows")?;
    let mut out = s.clone();
    let cols = out.cols();
    par::for_each_row(out.as_mut_slice(), cols, |i, row| {
        let allowed = mask.row(i);
        for (v, &ok) in row.iter_mut().zip(allowed) {
            if !ok {
                *v = f64::NEG_INFINITY;
            }
        }
        // exp(-inf - max) is exactly 0, so excluded entries vanish before summing
        softmax_in_place(row);
    });
    Ok(out)
}

/// `A_ij / sqrt(deg(i) deg(j))` with weighted degrees `deg(i) = sum_j A_ij`.
pub fn sym_degree_normalize(a: &AffinityMatrix) -> Result<Matrix> {
    a.require_nonnegative("sym_degree_normalize")?;
    let deg = a.matrix().row_sums();
    if let Some(row) = deg.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::ZeroDegreeRow { row });
    }
    let m = a.matrix();
    Ok(Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        m[(i, j)] / (deg[i] * deg[j]).sqrt()
    }))
}

/// Power iteration on `A + I` from the all-ones vector.
///
/// The identity shift leaves the Perron vector unchanged and moves every
/// eigenvalue by one, which makes periodic (bipartite) graphs converge.
pub(crate) struct ShiftedPowerIteration<'a> {
    a: &'a Matrix,
    pub x: Vec<f64>,
}

impl<'a> ShiftedPowerIteration<'a> {
    pub fn new(a: &'a Matrix) -> Self {
        let n = a.rows();
        Self {
            a,
            x: vec![1.0 / (n as f64).sqrt(); n],
        }
    }

    /// One step; returns `(A x, x^T A x)` for the unit vector `x` before the step.
    pub fn step(&mut self) -> (Vec<f64>, f64) {
        let ax = self.a.matvec(&self.x).expect("square matrix");
        let rq = dot(&self.x, &ax);
        let mut next: Vec<f64> = ax.iter().zip(&self.x).map(|(a, x)| a + x).collect();
        let norm = dot(&next, &next).sqrt();
        for v in &mut next {
            *v /= norm;
        }
        self.x = next;
        (ax, rq)
    }
}

/// Spectral radius of a nonnegative square matrix by power iteration.
///
/// Stops once the relative change in the Rayleigh quotient drops below `tol`.
pub fn spectral_radius(a: &AffinityMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    check_iteration_params(tol, max_iter)?;
    a.require_nonnegative("spectral_radius")?;
    let m = a.matrix();
    m.require_finite("spectral_radius")?;
    if m.as_slice().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut it = ShiftedPowerIteration::new(m);
    let (_, mut prev) = it.step();
    for _ in 1..max_iter {
        let (_, rq) = it.step();
        if (rq - prev).abs() <= tol * rq.abs() {
            return Ok(rq.max(0.0));
        }
        prev = rq;
    }
    Err(Error::NonConvergence {
        op: "spectral_radius",
        iterations: max_iter,
    })
}

pub(crate) fn check_iteration_params(tol: f64, max_iter: usize) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter {
            name: "max_iter",
            reason: "must be at least 1".into(),
        });
    }
    Ok(())
}

/// Picks `alpha = fraction / rho` (or `fraction` itself when `rho == 0`).
pub fn choose_alpha(a: &AffinityMatrix, fraction: f64) -> Result<AlphaScaling> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "fraction",
            reason: format!("must lie in (0, 1), got {fraction}"),
        });
    }
    let rho = spectral_radius(a, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let alpha = if rho > 0.0 { fraction / rho } else { fraction };
    AlphaScaling::new(alpha, rho)
}
