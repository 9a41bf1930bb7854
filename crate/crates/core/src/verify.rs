//! Cross-module equivalence checks on seeded random instances.
//!
//! Each property compares two independent routes to the same quantity and
//! records the worst deviation over all instances. Instances are generated
//! from [`Lcg64`] streams, so a given seed always produces the same report.

use std::time::{Duration, Instant};

use crate::affinity::{build_gat_scores, AffinityMatrix};
use crate::attention::{attention, gat_layer, non_local_block, GatParams, NonLocalProjections, NonLocalVariant};
use crate::error::{Error, Result};
use crate::normalize::{
    softmax_rows, spectral_radius, AlphaScaling, NeighborhoodMask, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::par;
use crate::propagate::{
    inffs_scores, power_series_closed_form, power_series_truncated, single_hop_aggregate,
};
use crate::rng::Lcg64;

pub const DEFAULT_SEED: u64 = 20_150_607;
pub const DEFAULT_INSTANCES: usize = 20;

pub const SERIES_TOL: f64 = 1e-8;
pub const ONE_HOP_TOL: f64 = 1e-14;
pub const NON_LOCAL_TOL: f64 = 1e-12;
pub const GAT_TOL: f64 = 1e-12;
pub const COMPOSITION_TOL: f64 = 1e-10;
pub const PERMUTATION_TOL: f64 = 1e-12;

/// Size of the random matrices in the series agreement check.
pub const SERIES_N: usize = 30;
pub const SERIES_TRUNCATION: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    ClosedFormVsTruncated,
    OneHopDegeneration,
    NonLocalIsAttention,
    GatDenseIsAttention,
    CompositionLaw,
    PermutationEquivariance,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::ClosedFormVsTruncated,
        Property::OneHopDegeneration,
        Property::NonLocalIsAttention,
        Property::GatDenseIsAttention,
        Property::CompositionLaw,
        Property::PermutationEquivariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::ClosedFormVsTruncated => "closed-form-vs-truncated",
            Property::OneHopDegeneration => "one-hop-degeneration",
            Property::NonLocalIsAttention => "non-local-equals-attention",
            Property::GatDenseIsAttention => "gat-dense-equals-attention",
            Property::CompositionLaw => "composition-law",
            Property::PermutationEquivariance => "permutation-equivariance",
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            Property::ClosedFormVsTruncated => SERIES_TOL,
            Property::OneHopDegeneration => ONE_HOP_TOL,
            Property::NonLocalIsAttention => NON_LOCAL_TOL,
            Property::GatDenseIsAttention => GAT_TOL,
            Property::CompositionLaw => COMPOSITION_TOL,
            Property::PermutationEquivariance => PERMUTATION_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub instances: usize,
    /// Target `alpha * rho` for the series checks; must lie in (0, 1).
    pub alpha_rho: f64,
    /// Replaces every property's tolerance when set.
    pub tolerance: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            instances: DEFAULT_INSTANCES,
            alpha_rho: 0.5,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub property: Property,
    pub max_error: f64,
    pub tolerance: f64,
    pub instances: usize,
    pub elapsed: Duration,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

/// Random nonnegative matrix with entries uniform in `[0, 1)`.
pub fn random_nonnegative(rng: &mut Lcg64, n: usize) -> AffinityMatrix {
    AffinityMatrix::new(rng.matrix(n, n, 0.0, 1.0)).expect("square")
}

/// `alpha` placing `alpha * rho` at `target` for this matrix.
fn scaling_for(a: &AffinityMatrix, target: f64) -> Result<AlphaScaling> {
    if !(target > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha_rho",
            reason: format!("must be positive, got {target}"),
        });
    }
    let rho = spectral_radius(a, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let alpha = if rho > 0.0 { target / rho } else { target };
    if target >= 1.0 && rho > 0.0 {
        return Err(Error::ConvergenceBound {
            alpha,
            rho,
            product: target,
        });
    }
    AlphaScaling::new(alpha, rho)
}

pub fn closed_form_vs_truncated(rng: &mut Lcg64, alpha_rho: f64) -> Result<f64> {
    let a = random_nonnegative(rng, SERIES_N);
    let scaling = scaling_for(&a, alpha_rho)?;
    let closed = power_series_closed_form(&a, &scaling)?;
    let truncated = power_series_truncated(&a, scaling.alpha(), SERIES_TRUNCATION)?;
    Ok(closed.matrix().max_abs_diff(truncated.matrix()))
}

pub fn one_hop_degeneration(rng: &mut Lcg64, alpha_rho: f64) -> Result<f64> {
    let n = rng.range(2, 30);
    let a = random_nonnegative(rng, n);
    let alpha = scaling_for(&a, alpha_rho)?.alpha();
    let scores = inffs_scores(&power_series_truncated(&a, alpha, 1)?);
    Ok(scores
        .iter()
        .zip(a.matrix().row_sums())
        .map(|(s, r)| (s - alpha * r).abs())
        .fold(0.0, f64::max))
}

pub fn non_local_is_attention(rng: &mut Lcg64) -> Result<f64> {
    let n = rng.range(2, 16);
    let d = rng.range(1, 8);
    let x = rng.matrix(n, d, -1.0, 1.0);
    let theta = rng.matrix(d, d, -1.0, 1.0);
    let phi = rng.matrix(d, d, -1.0, 1.0);
    let g = rng.matrix(d, d, -1.0, 1.0);
    let proj = NonLocalProjections::with_identity_output(theta.clone(), phi.clone(), g.clone());
    let y = non_local_block(&x, &proj, NonLocalVariant::EmbeddedGaussian)?.sub(&x)?;
    let reference = attention(&x.matmul(&theta)?, &x.matmul(&phi)?, &x.matmul(&g)?, false)?;
    Ok(y.max_abs_diff(&reference))
}

pub fn gat_dense_is_attention(rng: &mut Lcg64) -> Result<f64> {
    let n = rng.range(2, 16);
    let f_in = rng.range(1, 8);
    let f_out = rng.range(1, 8);
    let h = rng.matrix(n, f_in, -1.0, 1.0);
    let params = GatParams::new(
        rng.matrix(f_in, f_out, -1.0, 1.0),
        rng.matrix(f_in, f_out, -1.0, 1.0),
        rng.vector(2 * f_out, -1.0, 1.0),
    );
    let out = gat_layer(&h, &params, &NeighborhoodMask::full(n))?;
    let e = build_gat_scores(&h, &params.w, &params.a, params.slope)?;
    let manual = single_hop_aggregate(&softmax_rows(&e)?, &h.matmul(&params.w_value)?)?;
    Ok(out.max_abs_diff(&manual))
}

pub fn composition_law(rng: &mut Lcg64) -> Result<f64> {
    let n = rng.range(2, 32);
    let d = rng.range(1, 8);
    let w = softmax_rows(&rng.matrix(n, n, -3.0, 3.0))?;
    let v = rng.matrix(n, d, -1.0, 1.0);
    let twice = single_hop_aggregate(&w, &single_hop_aggregate(&w, &v)?)?;
    let squared = single_hop_aggregate(&w.matmul(&w)?, &v)?;
    Ok(twice.max_abs_diff(&squared))
}

pub fn permutation_equivariance(rng: &mut Lcg64, alpha_rho: f64) -> Result<f64> {
    let n = rng.range(2, 20);
    let perm = rng.permutation(n);

    let a = random_nonnegative(rng, n);
    let scaling = scaling_for(&a, alpha_rho)?;
    let scores = inffs_scores(&power_series_closed_form(&a, &scaling)?);
    let permuted = inffs_scores(&power_series_closed_form(&a.permuted(&perm), &scaling)?);
    let score_err = perm
        .iter()
        .zip(&permuted)
        .map(|(&p, s)| (s - scores[p]).abs())
        .fold(0.0, f64::max);

    let d = rng.range(1, 8);
    let q = rng.matrix(n, d, -1.0, 1.0);
    let k = rng.matrix(n, d, -1.0, 1.0);
    let v = rng.matrix(n, d, -1.0, 1.0);
    let out = attention(&q, &k, &v, true)?;
    let out_p = attention(&q.permute_rows(&perm), &k.permute_rows(&perm), &v.permute_rows(&perm), true)?;
    let attn_err = out_p.max_abs_diff(&out.permute_rows(&perm));

    Ok(score_err.max(attn_err))
}

/// Runs one property over `opts.instances` seeded instances.
pub fn check(property: Property, opts: &VerifyOptions) -> Result<PropertyReport> {
    let start = Instant::now();
    let salt = property as u64 * 1_000_003;
    let errors = par::map_indices(opts.instances, |i| {
        let mut rng = Lcg64::stream(opts.seed.wrapping_add(salt), i as u64);
        match property {
            Property::ClosedFormVsTruncated => closed_form_vs_truncated(&mut rng, opts.alpha_rho),
            Property::OneHopDegeneration => one_hop_degeneration(&mut rng, opts.alpha_rho),
            Property::NonLocalIsAttention => non_local_is_attention(&mut rng),
            Property::GatDenseIsAttention => gat_dense_is_attention(&mut rng),
            Property::CompositionLaw => composition_law(&mut rng),
            Property::PermutationEquivariance => permutation_equivariance(&mut rng, opts.alpha_rho),
        }
    });
    let mut max_error: f64 = 0.0;
    for e in errors {
        let e = e?;
        // NaN must fail the comparison, so it wins over any finite error
        max_error = if e.is_nan() { f64::NAN } else { max_error.max(e) };
    }
    Ok(PropertyReport {
        property,
        max_error,
        tolerance: opts.tolerance.unwrap_or(property.default_tolerance()),
        instances: opts.instances,
        elapsed: start.elapsed(),
    })
}

/// Runs every property in a fixed order.
pub fn run_suite(opts: &VerifyOptions) -> Result<Vec<PropertyReport>> {
    Property::ALL.iter().map(|&p| check(p, opts)).collect()
}
