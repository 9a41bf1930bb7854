//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use affinity_cli::commands::RankingReport;
use affinity_core::attention::{gat_layer, non_local_block, GatParams, NonLocalProjections, NonLocalVariant};
use affinity_core::normalize::{choose_alpha, softmax_rows, AlphaScaling, NeighborhoodMask};
use affinity_core::propagate::{
    eigenvector_centrality, inffs_scores, pagerank, power_series_closed_form,
    power_series_closed_form_with_alpha, power_series_truncated, single_hop_aggregate,
    CentralityKind,
};
use affinity_core::rng::Lcg64;
use affinity_core::selection::{gate_forward, gate_gradient, GateVector};
use affinity_core::{AffinityMatrix, Matrix};

const SEED: u64 = 0xACCE_5500;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_nonnegative(rng: &mut Lcg64, n: usize) -> AffinityMatrix {
    AffinityMatrix::new(rng.matrix(n, n, 0.0, 1.0)).unwrap()
}

// Straight-line reference implementations.

fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

fn naive_softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

fn naive_attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(q.rows(), v.cols());
    for i in 0..q.rows() {
        let scores: Vec<f64> = (0..k.rows())
            .map(|j| (0..q.cols()).map(|c| q[(i, c)] * k[(j, c)]).sum())
            .collect();
        let w = naive_softmax(&scores);
        for (j, wj) in w.iter().enumerate() {
            for c in 0..v.cols() {
                out.row_mut(i)[c] += wj * v[(j, c)];
            }
        }
    }
    out
}

fn c1_series_agreement() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let a = random_nonnegative(&mut Lcg64::stream(SEED, i), 30);
        let scaling = choose_alpha(&a, 0.5).unwrap();
        let closed = power_series_closed_form(&a, &scaling).unwrap();
        let truncated = power_series_truncated(&a, scaling.alpha(), 60).unwrap();
        worst = worst.max(closed.matrix().max_abs_diff(truncated.matrix()));
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-8 && elapsed < Duration::from_secs(2),
        format!("max |closed - truncated| = {worst:.3e} (<= 1e-8), {elapsed:.2?} (< 2s)"),
    )
}

fn c2_one_hop() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let mut rng = Lcg64::stream(SEED + 2, i);
        let n = rng.range(2, 40);
        let a = random_nonnegative(&mut rng, n);
        let alpha = choose_alpha(&a, 0.5).unwrap().alpha();
        let scores = inffs_scores(&power_series_truncated(&a, alpha, 1).unwrap());
        for (r, s) in scores.iter().enumerate() {
            let degree: f64 = (0..n).map(|c| a.matrix()[(r, c)]).sum();
            worst = worst.max((s - alpha * degree).abs());
        }
    }
    outcome(worst <= 1e-14, format!("max deviation from alpha * degree = {worst:.3e} (<= 1e-14)"))
}

fn c3_non_local() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let mut rng = Lcg64::stream(SEED + 3, i);
        let n = rng.range(1, 16);
        let d = rng.range(1, 8);
        let x = rng.matrix(n, d, -1.0, 1.0);
        let theta = rng.matrix(d, d, -1.0, 1.0);
        let phi = rng.matrix(d, d, -1.0, 1.0);
        let g = rng.matrix(d, d, -1.0, 1.0);
        let proj = NonLocalProjections::with_identity_output(theta.clone(), phi.clone(), g.clone());
        let block = non_local_block(&x, &proj, NonLocalVariant::EmbeddedGaussian).unwrap();
        let y = block.sub(&x).unwrap();
        let reference = naive_attention(
            &naive_matmul(&x, &theta),
            &naive_matmul(&x, &phi),
            &naive_matmul(&x, &g),
        );
        worst = worst.max(y.max_abs_diff(&reference));
    }
    outcome(worst <= 1e-12, format!("max |block - X - attention| = {worst:.3e} (<= 1e-12)"))
}

fn c4_gat_dense() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let mut rng = Lcg64::stream(SEED + 4, i);
        let n = rng.range(1, 16);
        let f_in = rng.range(1, 8);
        let f_out = rng.range(1, 8);
        let h = rng.matrix(n, f_in, -1.0, 1.0);
        let params = GatParams::new(
            rng.matrix(f_in, f_out, -1.0, 1.0),
            rng.matrix(f_in, f_out, -1.0, 1.0),
            rng.vector(2 * f_out, -1.0, 1.0),
        );
        let out = gat_layer(&h, &params, &NeighborhoodMask::full(n)).unwrap();

        let wh = naive_matmul(&h, &params.w);
        let values = naive_matmul(&h, &params.w_value);
        let (src, dst) = params.a.split_at(f_out);
        let mut manual = Matrix::zeros(n, f_out);
        for r in 0..n {
            let e: Vec<f64> = (0..n)
                .map(|j| {
                    let z: f64 = (0..f_out).map(|c| src[c] * wh[(r, c)] + dst[c] * wh[(j, c)]).sum();
                    if z >= 0.0 { z } else { params.slope * z }
                })
                .collect();
            for (j, w) in naive_softmax(&e).iter().enumerate() {
                for c in 0..f_out {
                    manual.row_mut(r)[c] += w * values[(j, c)];
                }
            }
        }
        worst = worst.max(out.max_abs_diff(&manual));
    }
    outcome(worst <= 1e-12, format!("max |gat_layer - manual| = {worst:.3e} (<= 1e-12)"))
}

fn c5_composition() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let mut rng = Lcg64::stream(SEED + 5, i);
        let n = rng.range(1, 32);
        let d = rng.range(1, 8);
        let w = softmax_rows(&rng.matrix(n, n, -3.0, 3.0)).unwrap();
        let v = rng.matrix(n, d, -1.0, 1.0);
        let twice = single_hop_aggregate(&w, &single_hop_aggregate(&w, &v).unwrap()).unwrap();
        let squared = single_hop_aggregate(&naive_matmul(&w, &w), &v).unwrap();
        worst = worst.max(twice.max_abs_diff(&squared));
    }
    outcome(worst <= 1e-10, format!("max |W(WV) - (W^2)V| = {worst:.3e} (<= 1e-10)"))
}

fn c6_bound() -> Outcome {
    let swap = AffinityMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
    let closed = power_series_closed_form_with_alpha(&swap, 1.0);
    let scaling = AlphaScaling::new(1.0, 1.0);
    let above = power_series_closed_form_with_alpha(&swap, 1.5);
    let inside = power_series_closed_form_with_alpha(&swap, 0.5);
    let pass = closed.is_err() && scaling.is_err() && above.is_err() && inside.is_ok();
    let detail = match &closed {
        Err(e) => format!("alpha = 1 on the swap graph rejected: {e}"),
        Ok(_) => "alpha = 1 on the swap graph returned a value".to_owned(),
    };
    outcome(pass, detail)
}

fn c7_softmax() -> Outcome {
    let mut sum_err = 0.0f64;
    let mut shift_err = 0.0f64;
    let mut cases: Vec<Matrix> = (0..50)
        .map(|i| {
            let mut rng = Lcg64::stream(SEED + 7, i);
            let (r, c) = (rng.range(1, 12), rng.range(1, 12));
            rng.matrix(r, c, -50.0, 50.0)
        })
        .collect();
    cases.push(Matrix::from_rows(&[[50.0, -50.0, 50.0], [-50.0, -50.0, -50.0]]).unwrap());
    for (i, s) in cases.iter().enumerate() {
        let p = softmax_rows(s).unwrap();
        for r in 0..p.rows() {
            sum_err = sum_err.max((p.row(r).iter().sum::<f64>() - 1.0).abs());
        }
        let mut rng = Lcg64::stream(SEED + 70, i as u64);
        let shifts = rng.vector(s.rows(), -50.0, 50.0);
        let shifted = Matrix::from_fn(s.rows(), s.cols(), |r, c| s[(r, c)] + shifts[r]);
        shift_err = shift_err.max(softmax_rows(&shifted).unwrap().max_abs_diff(&p));
    }
    outcome(
        sum_err <= 1e-12 && shift_err <= 1e-12,
        format!("row-sum error {sum_err:.3e}, shift error {shift_err:.3e} (<= 1e-12)"),
    )
}

fn c8_centrality() -> Outcome {
    let mut ec_ratio = 0.0f64;
    let mut pr_gap = 0.0f64;
    for i in 0..20 {
        let mut rng = Lcg64::stream(SEED + 8, i);
        let n = rng.range(2, 50);
        let a = random_nonnegative(&mut rng, n);
        let m = a.matrix();

        let ec = eigenvector_centrality(&a, 1e-10, 10_000).unwrap();
        let v = &ec.values;
        let av: Vec<f64> = (0..n).map(|r| (0..n).map(|c| m[(r, c)] * v[c]).sum()).collect();
        let lambda = av.iter().zip(v).map(|(x, y)| x * y).sum::<f64>()
            / v.iter().map(|x| x * x).sum::<f64>();
        let residual = av
            .iter()
            .zip(v)
            .map(|(x, y)| (x - lambda * y).powi(2))
            .sum::<f64>()
            .sqrt();
        ec_ratio = ec_ratio.max(residual / (1e-8 * lambda));

        let damping = 0.85;
        let pi = pagerank(&a, damping, 1e-12, 10_000).unwrap().values;
        let row_sum: Vec<f64> = (0..n).map(|r| (0..n).map(|c| m[(r, c)]).sum()).collect();
        let step: Vec<f64> = (0..n)
            .map(|c| {
                (1.0 - damping) / n as f64
                    + damping * (0..n).map(|r| pi[r] * m[(r, c)] / row_sum[r]).sum::<f64>()
            })
            .collect();
        pr_gap = pr_gap.max(step.iter().zip(&pi).map(|(x, y)| (x - y).abs()).sum());
    }

    let n = 6;
    let star = AffinityMatrix::new(Matrix::from_fn(n, n, |r, c| {
        if (r == 0) != (c == 0) { 1.0 } else { 0.0 }
    }))
    .unwrap();
    let ec = eigenvector_centrality(&star, 1e-10, 10_000).unwrap();
    let pr = pagerank(&star, 0.85, 1e-12, 10_000).unwrap();
    let center_first = |v: &[f64]| v[1..].iter().all(|&x| v[0] > x);
    let star_ok = center_first(&ec.values)
        && center_first(&pr.values)
        && matches!(ec.kind, CentralityKind::Eigenvector { .. });

    let pair = AffinityMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
    let pair_ok = pagerank(&pair, 0.85, 1e-12, 1000).unwrap().values == vec![0.5, 0.5];

    outcome(
        ec_ratio <= 1.0 && pr_gap <= 1e-10 && star_ok && pair_ok,
        format!(
            "eigen residual/(1e-8 lambda) = {ec_ratio:.3e} (<= 1), pagerank gap = {pr_gap:.3e} (<= 1e-10), star center first: {star_ok}, pair uniform: {pair_ok}"
        ),
    )
}

fn c9_gate_gradient() -> Outcome {
    let h = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let mut rng = Lcg64::stream(SEED + 9, i);
        let x = rng.vector(8, -5.0, 5.0);
        let params = rng.vector(8, -5.0, 5.0);
        let upstream = rng.vector(8, -5.0, 5.0);
        let analytic = gate_gradient(&x, &GateVector::new(params.clone()), &upstream).unwrap();
        let loss = |p: Vec<f64>| -> f64 {
            let out = gate_forward(&x, &GateVector::new(p)).unwrap();
            out.iter().zip(&upstream).map(|(o, u)| o * u).sum()
        };
        for k in 0..8 {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus[k] += h;
            minus[k] -= h;
            let fd = (loss(plus) - loss(minus)) / (2.0 * h);
            let scale = analytic[k].abs().max(fd.abs());
            if scale > 0.0 {
                worst = worst.max((analytic[k] - fd).abs() / scale);
            }
        }
    }
    outcome(worst <= 1e-5, format!("max relative error vs central differences = {worst:.3e} (<= 1e-5)"))
}

fn c10_cli() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_affinity");
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let data = fixtures.join("corr_4x3.csv");
    let tokens = fixtures.join("tokens_4x4.csv");
    let run = |args: &[&str]| Command::new(bin).args(args).output().expect("binary runs");

    let invocations: [Vec<&str>; 3] = [
        vec!["rank", "--input", data.to_str().unwrap()],
        vec!["rank", "--input", data.to_str().unwrap(), "--format", "csv"],
        vec!["attend", "--input", tokens.to_str().unwrap(), "--no-header", "--heads", "2", "--seed", "11"],
    ];
    let deterministic = invocations.iter().all(|args| {
        let (a, b) = (run(args), run(args));
        a.status.success() && a.stdout == b.stdout
    });

    let json: RankingReport = serde_json::from_slice(&run(&invocations[0]).stdout).unwrap();
    let csv_out = run(&invocations[1]).stdout;
    let mut reader = csv::Reader::from_reader(csv_out.as_slice());
    let rows: Vec<(String, f64, usize)> = reader.deserialize().map(Result::unwrap).collect();
    let round_trip = rows.len() == json.scores.len()
        && rows.iter().zip(&json.scores).all(|(r, e)| {
            r.0 == e.name && r.2 == e.rank && (r.1 - e.score).abs() <= 1e-12
        });

    let start = Instant::now();
    let verify = run(&["verify"]);
    let elapsed = start.elapsed();
    let verify_ok = verify.status.success() && elapsed < Duration::from_secs(10);

    outcome(
        deterministic && round_trip && verify_ok,
        format!(
            "byte-identical: {deterministic}, csv/json round trip: {round_trip}, verify exit {:?} in {elapsed:.2?} (< 10s)",
            verify.status.code()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed form agrees with truncated series", c1_series_agreement),
        ("one-hop scores are scaled degrees", c2_one_hop),
        ("non-local block is self-attention", c3_non_local),
        ("dense GAT is concatenation attention", c4_gat_dense),
        ("two hops compose to the squared operator", c5_composition),
        ("convergence bound is enforced", c6_bound),
        ("softmax rows and shift invariance", c7_softmax),
        ("centrality residuals and exact cases", c8_centrality),
        ("gate gradient matches finite differences", c9_gate_gradient),
        ("cli determinism, round trip and verify", c10_cli),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
