//! The attention family, assembled from the affinity, normalize and
//! propagate building blocks.
//!
//! Every layer here is the same three steps: score all pairs, normalise the
//! scores into weights, aggregate values with one hop of those weights. The
//! layers differ only in how scores are built (dot product, embedded dot
//! product, concatenation scorer) and which pairs are allowed.

use crate::affinity::{build_gat_scores, dot_product_scores, DEFAULT_LEAKY_SLOPE};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::normalize::{masked_softmax_rows, scale_scores, softmax_rows, NeighborhoodMask};
use crate::par;
use crate::propagate::single_hop_aggregate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionConfig {
    d_model: usize,
    heads: usize,
    d_k: usize,
    scale: bool,
}

impl AttentionConfig {
    pub fn new(d_model: usize, heads: usize, scale: bool) -> Result<Self> {
        if d_model == 0 || heads == 0 {
            return Err(Error::InvalidParameter {
                name: "heads",
                reason: format!("d_model ({d_model}) and heads ({heads}) must be positive"),
            });
        }
        if d_model % heads != 0 {
            return Err(Error::Divisibility { d_model, heads });
        }
        Ok(Self {
            d_model,
            heads,
            d_k: d_model / heads,
            scale,
        })
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn d_k(&self) -> usize {
        self.d_k
    }

    pub fn scale(&self) -> bool {
        self.scale
    }
}

/// Query, key and value projections of one head, each `d_model x d_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadProjection {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
}

/// Per-head projections plus the output projection `(heads * d_k) x d_model`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub heads: Vec<HeadProjection>,
    pub w_out: Matrix,
}

impl ProjectionSet {
    pub fn validate(&self, cfg: &AttentionConfig) -> Result<()> {
        if self.heads.len() != cfg.heads {
            return Err(Error::mismatch(
                "ProjectionSet",
                format!("{} heads", cfg.heads),
                format!("{}", self.heads.len()),
            ));
        }
        let want = (cfg.d_model, cfg.d_k);
        for (h, p) in self.heads.iter().enumerate() {
            for (name, w) in [("wq", &p.wq), ("wk", &p.wk), ("wv", &p.wv)] {
                if w.shape() != want {
                    return Err(Error::mismatch(
                        "ProjectionSet",
                        format!("head {h} {name} of shape {}x{}", want.0, want.1),
                        format!("{}x{}", w.rows(), w.cols()),
                    ));
                }
            }
        }
        if self.w_out.shape() != (cfg.heads * cfg.d_k, cfg.d_model) {
            return Err(Error::mismatch(
                "ProjectionSet",
                format!("w_out of shape {}x{}", cfg.heads * cfg.d_k, cfg.d_model),
                format!("{}x{}", self.w_out.rows(), self.w_out.cols()),
            ));
        }
        Ok(())
    }
}

/// Row-softmaxed attention weights for queries against keys.
pub fn attention_weights(q: &Matrix, k: &Matrix, scale: bool) -> Result<Matrix> {
    let scores = dot_product_scores(q, k)?;
    let scores = if scale {
        scale_scores(&scores, q.cols())?
    } else {
        scores
    };
    softmax_rows(&scores)
}

/// `softmax(Q K^T / sqrt(d)) V`, with the scaling optional.
///
/// `Q` may come from a different source than `K` and `V` (cross-attention).
pub fn attention(q: &Matrix, k: &Matrix, v: &Matrix, scale: bool) -> Result<Matrix> {
    if k.rows() != v.rows() {
        return Err(Error::mismatch(
            "attention",
            format!("values with {} rows", k.rows()),
            format!("{}x{}", v.rows(), v.cols()),
        ));
    }
    let w = attention_weights(q, k, scale)?;
    single_hop_aggregate(&w, v)
}

/// Multi-head self-attention; also returns each head's weight matrix.
pub fn multi_head_attention_with_weights(
    x: &Matrix,
    cfg: &AttentionConfig,
    proj: &ProjectionSet,
) -> Result<(Matrix, Vec<Matrix>)> {
    if x.cols() != cfg.d_model {
        return Err(Error::mismatch(
            "multi_head_attention",
            format!("input with {} columns", cfg.d_model),
            format!("{}x{}", x.rows(), x.cols()),
        ));
    }
    proj.validate(cfg)?;
    let per_head = par::map_indices(proj.heads.len(), |h| -> Result<(Matrix, Matrix)> {
        let p = &proj.heads[h];
        let q = x.matmul(&p.wq)?;
        let k = x.matmul(&p.wk)?;
        let v = x.matmul(&p.wv)?;
        let w = attention_weights(&q, &k, cfg.scale)?;
        let out = single_hop_aggregate(&w, &v)?;
        Ok((out, w))
    });
    let mut outputs = Vec::with_capacity(cfg.heads);
    let mut weights = Vec::with_capacity(cfg.heads);
    for head in per_head {
        let (o, w) = head?;
        outputs.push(o);
        weights.push(w);
    }
    let joined = Matrix::hconcat(&outputs)?;
    Ok((joined.matmul(&proj.w_out)?, weights))
}

pub fn multi_head_attention(
    x: &Matrix,
    cfg: &AttentionConfig,
    proj: &ProjectionSet,
) -> Result<Matrix> {
    multi_head_attention_with_weights(x, cfg, proj).map(|(out, _)| out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonLocalVariant {
    /// Softmax over `theta(x_i) . phi(x_j)`.
    EmbeddedGaussian,
    /// `theta(x_i) . phi(x_j) / N`, no softmax.
    DotProduct,
}

/// Embeddings of a non-local block. `theta`, `phi`, `g` are `d x d_inner`,
/// `z` maps back with `d_inner x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonLocalProjections {
    pub theta: Matrix,
    pub phi: Matrix,
    pub g: Matrix,
    pub z: Matrix,
}

impl NonLocalProjections {
    /// Projections with `z` set to the identity (requires `d_inner == d`).
    pub fn with_identity_output(theta: Matrix, phi: Matrix, g: Matrix) -> Self {
        let z = Matrix::identity(g.cols());
        Self { theta, phi, g, z }
    }
}

/// Non-local block `X + (W (X Wg)) Wz`, with `W` built per `variant`.
pub fn non_local_block(
    x: &Matrix,
    proj: &NonLocalProjections,
    variant: NonLocalVariant,
) -> Result<Matrix> {
    let d = x.cols();
    if proj.theta.rows() != d || proj.phi.rows() != d || proj.g.rows() != d {
        return Err(Error::mismatch(
            "non_local_block",
            format!("embeddings with {d} rows"),
            format!(
                "theta {}x{}, phi {}x{}, g {}x{}",
                proj.theta.rows(),
                proj.theta.cols(),
                proj.phi.rows(),
                proj.phi.cols(),
                proj.g.rows(),
                proj.g.cols()
            ),
        ));
    }
    if proj.z.shape() != (proj.g.cols(), d) {
        return Err(Error::mismatch(
            "non_local_block",
            format!("z of shape {}x{d}", proj.g.cols()),
            format!("{}x{}", proj.z.rows(), proj.z.cols()),
        ));
    }
    let theta = x.matmul(&proj.theta)?;
    let phi = x.matmul(&proj.phi)?;
    let g = x.matmul(&proj.g)?;
    let scores = dot_product_scores(&theta, &phi)?;
    let w = match variant {
        NonLocalVariant::EmbeddedGaussian => softmax_rows(&scores)?,
        NonLocalVariant::DotProduct => scores.scale(1.0 / x.rows() as f64),
    };
    let y = single_hop_aggregate(&w, &g)?;
    x.add(&y.matmul(&proj.z)?)
}

/// Elementwise output nonlinearity for graph attention layers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Activation {
    #[default]
    Identity,
    Relu,
    Elu(f64),
    Tanh,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Elu(a) => {
                if z > 0.0 {
                    z
                } else {
                    a * z.exp_m1()
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }
}

/// One graph-attention head: scorer transform `w` (`F x F'`), value transform
/// `w_value` (`F x F'`), scorer vector `a` (length `2 F'`).
#[derive(Debug, Clone, PartialEq)]
pub struct GatParams {
    pub w: Matrix,
    pub w_value: Matrix,
    pub a: Vec<f64>,
    pub slope: f64,
    pub activation: Activation,
}

impl GatParams {
    /// Identity activation and the default leaky slope.
    pub fn new(w: Matrix, w_value: Matrix, a: Vec<f64>) -> Self {
        Self {
            w,
            w_value,
            a,
            slope: DEFAULT_LEAKY_SLOPE,
            activation: Activation::Identity,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    fn validate(&self, f_in: usize) -> Result<()> {
        if self.w_value.rows() != f_in {
            return Err(Error::mismatch(
                "gat_layer",
                format!("value transform with {f_in} rows"),
                format!("{}x{}", self.w_value.rows(), self.w_value.cols()),
            ));
        }
        if !(self.slope > 0.0 && self.slope < 1.0) {
            return Err(Error::InvalidParameter {
                name: "slope",
                reason: format!("must lie in (0, 1), got {}", self.slope),
            });
        }
        Ok(())
    }
}

/// Attention weights of one GAT head over the masked neighborhoods.
pub fn gat_weights(h: &Matrix, params: &GatParams, mask: &NeighborhoodMask) -> Result<Matrix> {
    params.validate(h.cols())?;
    let e = build_gat_scores(h, &params.w, &params.a, params.slope)?;
    masked_softmax_rows(&e, mask)
}

/// `h'_i = sigma(sum_{j in N(i)} alpha_ij W' h_j)`.
pub fn gat_layer(h: &Matrix, params: &GatParams, mask: &NeighborhoodMask) -> Result<Matrix> {
    let weights = gat_weights(h, params, mask)?;
    let values = h.matmul(&params.w_value)?;
    let out = single_hop_aggregate(&weights, &values)?;
    Ok(out.map(|z| params.activation.apply(z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadMerge {
    Concat,
    Average,
}

pub fn multi_head_gat(
    h: &Matrix,
    heads: &[GatParams],
    mask: &NeighborhoodMask,
    merge: HeadMerge,
) -> Result<Matrix> {
    if heads.is_empty() {
        return Err(Error::InvalidParameter {
            name: "heads",
            reason: "at least one head is required".into(),
        });
    }
    let outputs = par::map_indices(heads.len(), |i| gat_layer(h, &heads[i], mask))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    match merge {
        HeadMerge::Concat => Matrix::hconcat(&outputs),
        HeadMerge::Average => {
            let shape = outputs[0].shape();
            if let Some(bad) = outputs.iter().find(|o| o.shape() != shape) {
                return Err(Error::mismatch(
                    "multi_head_gat",
                    format!("heads of shape {}x{}", shape.0, shape.1),
                    format!("{}x{}", bad.rows(), bad.cols()),
                ));
            }
            let mut sum = outputs[0].clone();
            for o in &outputs[1..] {
                sum = sum.add(o)?;
            }
            Ok(sum.scale(1.0 / outputs.len() as f64))
        }
    }
}
