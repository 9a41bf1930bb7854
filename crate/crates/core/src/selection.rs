//! Ranking, top-k selection and sigmoid feature gates.

use crate::error::{Error, Result};

/// Scores with a deterministic descending order (ties by ascending index).
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
    pub feature_names: Option<Vec<String>>,
}

impl RankingResult {
    /// 1-based rank of every feature, aligned with `scores`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.order.len()];
        for (pos, &idx) in self.order.iter().enumerate() {
            ranks[idx] = pos + 1;
        }
        ranks
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.feature_names
            .as_ref()
            .and_then(|n| n.get(index))
            .map(String::as_str)
    }
}

pub fn rank(scores: &[f64], names: Option<Vec<String>>) -> Result<RankingResult> {
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScores { index });
    }
    if let Some(n) = &names {
        if n.len() != scores.len() {
            return Err(Error::mismatch(
                "rank",
                format!("{} names", scores.len()),
                format!("{}", n.len()),
            ));
        }
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps ascending index among equal scores
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(RankingResult {
        scores: scores.to_vec(),
        order,
        feature_names: names,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub names: Option<Vec<String>>,
}

pub fn select_top_k(r: &RankingResult, k: usize) -> Result<Selection> {
    let n = r.order.len();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let indices = r.order[..k].to_vec();
    let names = r
        .feature_names
        .as_ref()
        .map(|names| indices.iter().map(|&i| names[i].clone()).collect());
    Ok(Selection { indices, names })
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-feature gate parameters; the gate value is `sigmoid(param)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateVector {
    pub params: Vec<f64>,
}

impl GateVector {
    pub fn new(params: Vec<f64>) -> Self {
        Self { params }
    }

    pub fn gates(&self) -> Vec<f64> {
        self.params.iter().map(|&p| sigmoid(p)).collect()
    }

    fn check_len(&self, op: &'static str, other: usize) -> Result<()> {
        if other != self.params.len() {
            return Err(Error::mismatch(
                op,
                format!("length {}", self.params.len()),
                format!("length {other}"),
            ));
        }
        Ok(())
    }
}

/// `out_i = sigmoid(p_i) * x_i`.
pub fn gate_forward(x: &[f64], g: &GateVector) -> Result<Vec<f64>> {
    g.check_len("gate_forward", x.len())?;
    Ok(x.iter().zip(&g.params).map(|(&xi, &p)| sigmoid(p) * xi).collect())
}

/// Gradient with respect to the gate parameters, chained with `upstream`:
/// `upstream_i * x_i * s_i (1 - s_i)`.
pub fn gate_gradient(x: &[f64], g: &GateVector, upstream: &[f64]) -> Result<Vec<f64>> {
    g.check_len("gate_gradient", x.len())?;
    g.check_len("gate_gradient", upstream.len())?;
    Ok(x.iter()
        .zip(&g.params)
        .zip(upstream)
        .map(|((&xi, &p), &u)| {
            let s = sigmoid(p);
            u * xi * s * (1.0 - s)
        })
        .collect())
}

/// Support mask `sigmoid(p_i) >= tau`, evaluated as `p_i >= logit(tau)` so
/// that `tau = 0.5` is exactly the sign test.
pub fn hard_threshold(g: &GateVector, tau: f64) -> Result<Vec<bool>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("must lie in (0, 1), got {tau}"),
        });
    }
    let logit = (tau / (1.0 - tau)).ln();
    Ok(g.params.iter().map(|&p| p >= logit).collect())
}
