//! Propagation over an affinity matrix.
//!
//! One hop is a single weighted aggregation `Z = W V`. Many hops are the
//! path sum `S = sum_k alpha^k A^k`, either truncated after `L` terms or in
//! closed form `(I - alpha A)^-1 - I` when `alpha * rho(A) < 1`. Row sums of
//! `S` give per-node relevance scores. Eigenvector centrality and PageRank
//! are the spectral and diffusion views of the same matrix.

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::normalize::{check_iteration_params, AlphaScaling, ShiftedPowerIteration};

pub const DEFAULT_DAMPING: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesLength {
    Truncated(usize),
    Infinite,
}

/// Accumulated path relevance between every pair of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSum {
    s: Matrix,
    alpha: f64,
    length: SeriesLength,
}

impl PathSum {
    pub fn matrix(&self) -> &Matrix {
        &self.s
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn length(&self) -> SeriesLength {
        self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CentralityKind {
    Eigenvector { eigenvalue: f64 },
    PageRank { damping: f64 },
}

/// Per-node centrality. Eigenvector values have unit norm; PageRank values sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub values: Vec<f64>,
    pub kind: CentralityKind,
    pub iterations: usize,
}

/// `Z = W V`: every output row is the `W`-weighted combination of value rows.
pub fn single_hop_aggregate(w: &Matrix, v: &Matrix) -> Result<Matrix> {
    if w.cols() != v.rows() {
        return Err(Error::mismatch(
            "single_hop_aggregate",
            format!("values with {} rows", w.cols()),
            format!("{}x{}", v.rows(), v.cols()),
        ));
    }
    w.matmul(v)
}

/// `sum_{k=1..L} alpha^k A^k` by Horner accumulation `T <- alpha A (I + T)`.
pub fn power_series_truncated(a: &AffinityMatrix, alpha: f64, length: usize) -> Result<PathSum> {
    if length == 0 {
        return Err(Error::InvalidParameter {
            name: "length",
            reason: "truncation length must be at least 1".into(),
        });
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("must be positive and finite, got {alpha}"),
        });
    }
    let step = a.matrix().scale(alpha);
    let mut t = step.clone();
    for _ in 1..length {
        t = step.add(&step.matmul(&t)?)?;
    }
    Ok(PathSum {
        s: t,
        alpha,
        length: SeriesLength::Truncated(length),
    })
}

/// `(I - alpha A)^-1 - I`, obtained by solving `(I - alpha A) X = alpha A`.
///
/// The scaling must certify `alpha * rho < 1`; a singular system means the
/// certificate was wrong and is reported as [`Error::SingularSystem`].
pub fn power_series_closed_form(a: &AffinityMatrix, scaling: &AlphaScaling) -> Result<PathSum> {
    let (alpha, rho) = (scaling.alpha(), scaling.rho());
    if alpha * rho >= 1.0 {
        return Err(Error::ConvergenceBound {
            alpha,
            rho,
            product: alpha * rho,
        });
    }
    let m = a.matrix();
    let scaled = m.scale(alpha);
    let system = Matrix::identity(m.rows()).sub(&scaled)?;
    let s = system.solve(&scaled)?;
    Ok(PathSum {
        s,
        alpha,
        length: SeriesLength::Infinite,
    })
}

/// Closed form with a caller-chosen `alpha`, checked against an estimated `rho(A)`.
pub fn power_series_closed_form_with_alpha(a: &AffinityMatrix, alpha: f64) -> Result<PathSum> {
    let scaling = AlphaScaling::for_matrix(a, alpha)?;
    power_series_closed_form(a, &scaling)
}

/// Node relevance as row sums of the path-sum matrix.
pub fn inffs_scores(ps: &PathSum) -> Vec<f64> {
    ps.s.row_sums()
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Principal eigenvector of a nonnegative matrix by shifted power iteration.
///
/// Returns once `|A v - lambda v| <= tol * lambda` with `lambda = v^T A v`.
pub fn eigenvector_centrality(
    a: &AffinityMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<CentralityVector> {
    check_iteration_params(tol, max_iter)?;
    a.require_nonnegative("eigenvector_centrality")?;
    let m = a.matrix();
    m.require_finite("eigenvector_centrality")?;
    if m.as_slice().iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroMatrix {
            op: "eigenvector_centrality",
        });
    }
    let mut it = ShiftedPowerIteration::new(m);
    for iteration in 1..=max_iter {
        let v = it.x.clone();
        let (av, lambda) = it.step();
        let residual: Vec<f64> = av.iter().zip(&v).map(|(a, x)| a - lambda * x).collect();
        if lambda > 0.0 && norm2(&residual) <= tol * lambda {
            let values = v.into_iter().map(|x| x.max(0.0)).collect::<Vec<_>>();
            let n = norm2(&values);
            return Ok(CentralityVector {
                values: values.into_iter().map(|x| x / n).collect(),
                kind: CentralityKind::Eigenvector { eigenvalue: lambda },
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence {
        op: "eigenvector_centrality",
        iterations: max_iter,
    })
}

/// Row-stochastic transition matrix; all-zero rows become uniform.
pub fn transition_matrix(a: &AffinityMatrix) -> Result<Matrix> {
    a.require_nonnegative("transition_matrix")?;
    let m = a.matrix();
    let n = m.rows();
    let sums = m.row_sums();
    Ok(Matrix::from_fn(n, n, |i, j| {
        if sums[i] > 0.0 {
            m[(i, j)] / sums[i]
        } else {
            1.0 / n as f64
        }
    }))
}

/// One damped step `damping * pi P + (1 - damping) / n`.
pub fn pagerank_step(p: &Matrix, pi: &[f64], damping: f64) -> Vec<f64> {
    let n = pi.len();
    let teleport = (1.0 - damping) / n as f64;
    let mut next = vec![teleport; n];
    for (i, &mass) in pi.iter().enumerate() {
        let share = damping * mass;
        for (nj, &pij) in next.iter_mut().zip(p.row(i)) {
            *nj += share * pij;
        }
    }
    next
}

/// Stationary distribution of the damped walk, iterated until the L1 change
/// between successive iterates is at most `tol`.
pub fn pagerank(
    a: &AffinityMatrix,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CentralityVector> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::InvalidParameter {
            name: "damping",
            reason: format!("must lie in (0, 1), got {damping}"),
        });
    }
    check_iteration_params(tol, max_iter)?;
    a.matrix().require_finite("pagerank")?;
    let p = transition_matrix(a)?;
    let n = a.n();
    let mut pi = vec![1.0 / n as f64; n];
    for iteration in 1..=max_iter {
        let mut next = pagerank_step(&p, &pi, damping);
        let total: f64 = next.iter().sum();
        for v in &mut next {
            *v /= total;
        }
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if change <= tol {
            return Ok(CentralityVector {
                values: pi,
                kind: CentralityKind::PageRank { damping },
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence {
        op: "pagerank",
        iterations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::{DEFAULT_MAX_ITER, DEFAULT_TOL};

    fn aff(rows: &[&[f64]]) -> AffinityMatrix {
        AffinityMatrix::from_rows(rows).unwrap()
    }

    fn swap() -> AffinityMatrix {
        aff(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn chain() -> AffinityMatrix {
        aff(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]])
    }

    /// Naive `sum alpha^k A^k` with explicit powers.
    fn naive_series(a: &Matrix, alpha: f64, length: usize) -> Matrix {
        let n = a.rows();
        let mut power = Matrix::identity(n);
        let mut acc = Matrix::zeros(n, n);
        let mut coef = 1.0;
        for _ in 0..length {
            power = power.matmul_seq(a).unwrap();
            coef *= alpha;
            acc = acc.add(&power.scale(coef)).unwrap();
        }
        acc
    }

    #[test]
    fn single_hop_examples() {
        let v = Matrix::from_rows(&[[1.0, 2.0], [3.0, 5.0], [-1.0, 0.5]]).unwrap();
        assert_eq!(single_hop_aggregate(&Matrix::identity(3), &v).unwrap(), v);
        let uniform = Matrix::filled(2, 3, 1.0 / 3.0);
        let z = single_hop_aggregate(&uniform, &v).unwrap();
        for i in 0..2 {
            for (zv, mean) in z.row(i).iter().zip(v.col_means()) {
                assert!((zv - mean).abs() < 1e-15);
            }
        }
        let w = Matrix::from_rows(&[[0.25, 0.75]]).unwrap();
        let v2 = Matrix::from_rows(&[[0.0, 4.0], [4.0, 0.0]]).unwrap();
        assert_eq!(single_hop_aggregate(&w, &v2).unwrap().as_slice(), &[3.0, 1.0]);
        assert!(single_hop_aggregate(&w, &v).is_err());
    }

    #[test]
    fn truncated_examples() {
        let zero = AffinityMatrix::new(Matrix::zeros(3, 3)).unwrap();
        let s = power_series_truncated(&zero, 0.7, 5).unwrap();
        assert!(s.matrix().as_slice().iter().all(|&v| v == 0.0));

        let a = chain();
        let one = power_series_truncated(&a, 0.3, 1).unwrap();
        assert_eq!(one.matrix(), &a.matrix().scale(0.3));

        let s = power_series_truncated(&swap(), 0.5, 3).unwrap();
        let expected = Matrix::from_rows(&[[0.25, 0.625], [0.625, 0.25]]).unwrap();
        assert!(s.matrix().max_abs_diff(&expected) < 1e-15);
        assert!(s.matrix().max_abs_diff(&naive_series(swap().matrix(), 0.5, 3)) < 1e-15);
        assert_eq!(s.length(), SeriesLength::Truncated(3));

        assert!(power_series_truncated(&a, 0.3, 0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let zero = AffinityMatrix::new(Matrix::zeros(2, 2)).unwrap();
        let s = power_series_closed_form(&zero, &AlphaScaling::new(0.5, 0.0).unwrap()).unwrap();
        assert!(s.matrix().as_slice().iter().all(|&v| v == 0.0));

        let scaling = AlphaScaling::new(0.4, 1.0).unwrap();
        let s = power_series_closed_form(&swap(), &scaling).unwrap();
        let expected =
            Matrix::from_rows(&[[4.0 / 21.0, 10.0 / 21.0], [10.0 / 21.0, 4.0 / 21.0]]).unwrap();
        assert!(s.matrix().max_abs_diff(&expected) < 1e-15);
        assert!(s.matrix().max_abs_diff(&naive_series(swap().matrix(), 0.4, 100)) < 1e-15);
        assert_eq!(s.length(), SeriesLength::Infinite);
    }

    #[test]
    fn closed_form_rejects_boundary() {
        assert!(matches!(
            power_series_closed_form_with_alpha(&swap(), 1.0),
            Err(Error::ConvergenceBound { .. })
        ));
        assert!(AlphaScaling::new(1.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_flags_a_lying_certificate() {
        // rho is really 1 here; a scaling that claims 0.5 does not make the system solvable
        let lie = AlphaScaling::new(1.0, 0.5).unwrap();
        assert!(matches!(
            power_series_closed_form(&swap(), &lie),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn score_examples() {
        let zero = AffinityMatrix::new(Matrix::zeros(3, 3)).unwrap();
        let ps = power_series_truncated(&zero, 0.5, 4).unwrap();
        assert_eq!(inffs_scores(&ps), vec![0.0; 3]);

        let a = aff(&[&[0.0, 0.2, 0.9], &[0.2, 0.0, 0.4], &[0.9, 0.4, 0.0]]);
        let scores = inffs_scores(&power_series_truncated(&a, 0.7, 1).unwrap());
        for (s, r) in scores.iter().zip(a.matrix().row_sums()) {
            assert!((s - 0.7 * r).abs() <= 1e-14);
        }

        // chain oracle: truncated L = 50 row sums [3/7, 5/7, 3/7]
        let closed = power_series_closed_form(&chain(), &AlphaScaling::new(0.25, 2f64.sqrt()).unwrap())
            .unwrap();
        let scores = inffs_scores(&closed);
        let oracle = naive_series(chain().matrix(), 0.25, 50).row_sums();
        for (s, o) in scores.iter().zip(&oracle) {
            assert!((s - o).abs() < 1e-12);
        }
        assert!((scores[1] - 5.0 / 7.0).abs() < 1e-12);
        assert!(scores[1] > scores[0] && scores[1] > scores[2]);
    }

    #[test]
    fn eigenvector_examples() {
        let n = 5;
        let complete = AffinityMatrix::new(Matrix::from_fn(n, n, |i, j| (i != j) as u8 as f64))
            .unwrap();
        let c = eigenvector_centrality(&complete, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        for v in &c.values {
            assert!((v - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
        }

        let zero = AffinityMatrix::new(Matrix::zeros(3, 3)).unwrap();
        assert!(matches!(
            eigenvector_centrality(&zero, DEFAULT_TOL, DEFAULT_MAX_ITER),
            Err(Error::ZeroMatrix { .. })
        ));

        // star: characteristic polynomial -l^3 + 2l gives l = sqrt(2), v ~ [sqrt2, 1, 1]
        let star = aff(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        let c = eigenvector_centrality(&star, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let CentralityKind::Eigenvector { eigenvalue } = c.kind else {
            panic!("wrong kind")
        };
        assert!((eigenvalue - 2f64.sqrt()).abs() < 1e-9);
        let expected = [2f64.sqrt() / 2.0, 0.5, 0.5];
        for (v, e) in c.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-9);
        }
        assert!(c.values[0] > c.values[1]);
    }

    #[test]
    fn pagerank_examples() {
        let pr = pagerank(&swap(), 0.85, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(pr.values, vec![0.5, 0.5]);

        let a = aff(&[&[0.0, 3.0, 0.1], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        let pr = pagerank(&a, 1e-9, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        for v in &pr.values {
            assert!((v - 1.0 / 3.0).abs() < 1e-6);
        }

        // chain oracle: solve (I - d P^T) pi = (1 - d)/3 * 1 -> [19, 36, 19] / 74
        let pr = pagerank(&chain(), 0.85, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let expected = [19.0 / 74.0, 36.0 / 74.0, 19.0 / 74.0];
        for (v, e) in pr.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-10);
        }
        assert!((pr.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        assert!(pagerank(&chain(), 1.0, 1e-10, 10).is_err());
        assert!(matches!(
            pagerank(&chain(), 0.99, 1e-15, 3),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn dangling_rows_become_uniform() {
        let a = aff(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let p = transition_matrix(&a).unwrap();
        assert_eq!(p.row(1), &[0.5, 0.5]);
    }
}
