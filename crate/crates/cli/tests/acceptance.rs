//! Acceptance criteria, one line each. Exits nonzero when any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mpnn_walks::analysis::{collapse_check, correlate, fig2_witness, readout_census};
use mpnn_walks::lipschitz::verify_bound;
use mpnn_walks::mpnn::max_row_norm;
use mpnn_walks::rng::Prng;
use mpnn_walks::walks::{
    enumerate_normalized_walks_bruteforce, enumerate_walks_bruteforce, DEFAULT_ENUMERATION_BUDGET,
};
use mpnn_walks::{
    er_corpus, forward, generate, init_model, normalized_walk_sums, walk_census, walk_counts, BiasMode, DenseMatrix,
    ErCorpus, Graph, GraphCollection, LinearLayer, MlpBlock, Model, ModelSpec, ReadoutMode, SyntheticKind,
    SyntheticSpec, Variant,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Max relative entrywise gap, 0 when both sides vanish.
fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn corpus20(seed: u64) -> GraphCollection {
    er_corpus(&ErCorpus { count: 20, ..Default::default() }, seed).unwrap()
}

fn ac1_collapse() -> Outcome {
    let start = Instant::now();
    let dgcnn_graphs = er_corpus(&ErCorpus { count: 50, ..Default::default() }, 101).unwrap();
    // GAT aggregates over N(v) only, so isolated nodes are excluded
    let gat_graphs = er_corpus(&ErCorpus { count: 50, no_isolated: true, ..Default::default() }, 102).unwrap();
    let (mut worst, mut runs, mut failed) = (0.0f64, 0usize, 0usize);
    for (variant, graphs) in [(Variant::Dgcnn, &dgcnn_graphs), (Variant::Gat, &gat_graphs)] {
        for seed in 0..5 {
            for depth in 1..=5 {
                let model: Model = init_model(&ModelSpec::new(variant, depth, 8), seed).unwrap();
                for g in graphs.iter() {
                    let t = forward(g, &model).unwrap();
                    for k in 1..=depth {
                        let r = collapse_check(&t, k, 1e-10).unwrap();
                        worst = worst.max(r.max_deviation);
                        failed += usize::from(!r.passed);
                        runs += 1;
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failed == 0 && secs < 10.0,
        format!("{runs} layer checks over 50+50 graphs x 5 seeds x depths 1-5, max deviation {worst:.3e} (tol 1e-10), {failed} failed, {secs:.2}s (target < 10s)"),
    )
}

fn correlation_runs(spec: &ModelSpec, tol_check: impl Fn(f64) -> bool) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 1..=3u64 {
        let graphs = corpus20(1000 + seed);
        let model: Model = init_model(spec, seed).unwrap();
        let r = correlate(&graphs, &model, 3).unwrap();
        match r.pearson_r {
            Some(v) => {
                ok &= tol_check(v);
                parts.push(format!("seed {seed}: r={v:.15}"));
            }
            None => {
                ok = false;
                parts.push(format!("seed {seed}: degenerate"));
            }
        }
    }
    (ok, parts.join(", "))
}

fn ac2_gin0_correlation() -> Outcome {
    let (ok, d) = correlation_runs(&ModelSpec::gin0(3, 8, BiasMode::Zero), |r| (r - 1.0).abs() <= 1e-9);
    outcome(ok, format!("{d} (need |r-1| <= 1e-9)"))
}

fn ac3_gcn_correlation() -> Outcome {
    let (ok, d) = correlation_runs(&ModelSpec::new(Variant::Gcn, 3, 8), |r| (r - 1.0).abs() <= 1e-9);
    outcome(ok, format!("{d} (need |r-1| <= 1e-9)"))
}

fn ac4_biased_correlation() -> Outcome {
    let (ok, d) = correlation_runs(&ModelSpec::gin0(3, 8, BiasMode::RandomSmall), |r| r >= 0.95);
    outcome(ok, format!("{d} (need r >= 0.95)"))
}

fn ac5_bounds() -> Outcome {
    let graphs = er_corpus(&ErCorpus { count: 30, ..Default::default() }, 505).unwrap();
    let (mut checks, mut violations, mut min_slack) = (0usize, 0usize, f64::INFINITY);
    for (i, g) in graphs.iter().enumerate() {
        let seed = 5000 + i as u64;
        let gin: Model = init_model(&ModelSpec::gin0(3, 8, BiasMode::Zero), seed).unwrap();
        let gcn: Model = init_model(&ModelSpec::new(Variant::Gcn, 3, 8), seed).unwrap();
        let raw = walk_counts(g, 3).unwrap();
        let norm = normalized_walk_sums(g, 3);
        for k in 1..=3 {
            for r in [verify_bound(g, &gin, k, &raw, 1e-8).unwrap(), verify_bound(g, &gcn, k, &norm, 1e-8).unwrap()] {
                violations += r.violations.len();
                min_slack = min_slack.min(r.min_slack);
                checks += r.pair_count;
            }
        }
    }
    outcome(
        violations == 0,
        format!("30 instances x {{GIN-0, GCN}} x k=1..3: {checks} pair checks, {violations} violations at tol 1e-8, min slack {min_slack:.3e}"),
    )
}

fn connected(g: &Graph) -> bool {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn from_mask(n: usize, mask: u64) -> Graph {
    let mut edges = Vec::new();
    let mut bit = 0;
    for u in 0..n {
        for v in u + 1..n {
            if mask >> bit & 1 == 1 {
                edges.push((u, v));
            }
            bit += 1;
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Returns (exact mismatches, worst normalized relative gap).
fn oracle_check(g: &Graph, max_k: usize) -> (usize, f64) {
    let table = walk_census::<f64>(g, max_k).unwrap();
    let (mut mismatches, mut gap) = (0, 0.0f64);
    for v in 0..g.node_count() {
        for k in 0..=max_k {
            let brute = enumerate_walks_bruteforce(g, v, k, DEFAULT_ENUMERATION_BUDGET).unwrap();
            mismatches += usize::from(table.count(v, k) != Some(brute));
            let nb: f64 = enumerate_normalized_walks_bruteforce(g, v, k, DEFAULT_ENUMERATION_BUDGET).unwrap();
            let got = table.normalized(v, k).unwrap();
            gap = gap.max((got - nb).abs() / nb.abs().max(1.0));
        }
    }
    (mismatches, gap)
}

fn ac6_walk_oracle() -> Outcome {
    let (mut graphs, mut mismatches, mut gap) = (0usize, 0usize, 0.0f64);
    for n in 1..=6usize {
        let pairs = n * (n - 1) / 2;
        for mask in 0..(1u64 << pairs) {
            let g = from_mask(n, mask);
            if !connected(&g) {
                continue;
            }
            let (m, x) = oracle_check(&g, 4);
            graphs += 1;
            mismatches += m;
            gap = gap.max(x);
        }
    }
    let mut rng = Prng::new(606);
    let mut sampled = 0;
    while sampled < 200 {
        let n = rng.int_inclusive(1, 8);
        let p = rng.real(0.2, 0.8);
        let g = generate(&SyntheticSpec::new(SyntheticKind::ErdosRenyi { n, p }, rng.next_u64())).unwrap();
        if !connected(&g) {
            continue;
        }
        let (m, x) = oracle_check(&g, 4);
        sampled += 1;
        mismatches += m;
        gap = gap.max(x);
    }
    outcome(
        mismatches == 0 && gap <= 1e-12,
        format!("{graphs} connected labeled graphs n<=6 plus 200 random n<=8, k<=4: {mismatches} count mismatches, max normalized gap {gap:.3e} (tol 1e-12)"),
    )
}

fn ac7_fig2() -> Outcome {
    let model: Model = init_model(&ModelSpec::gin0(2, 8, BiasMode::Zero), 0).unwrap();
    let ws = fig2_witness(Some(&model)).unwrap();
    let graphs = mpnn_walks::fig2_collection();
    let signal = graphs.iter().map(|g| max_row_norm(&forward(g, &model).unwrap(), 2)).fold(0.0, f64::max);
    let Some(w) = ws.first() else {
        return outcome(false, "no witness found".into());
    };
    let dist = w.embedding_distance.unwrap();
    outcome(
        ws.len() == 1 && w.count == 10 && w.nodes.len() == 3 && w.distinct_degrees == [1, 2, 3] && dist <= 1e-9 && signal > 0.0,
        format!(
            "w^(2)={} for {} red nodes, degrees {:?}, layer-2 GIN-0 distance {dist:.3e} (tol 1e-9, max row norm {signal:.3})",
            w.count,
            w.nodes.len(),
            w.distinct_degrees
        ),
    )
}

fn ac8_readout() -> Outcome {
    let graphs = GraphCollection::new(vec![
        generate(&SyntheticSpec::new(SyntheticKind::Cycle { n: 3 }, 0)).unwrap(),
        generate(&SyntheticSpec::new(SyntheticKind::ErdosRenyi { n: 6, p: 0.5 }, 8)).unwrap(),
        generate(&SyntheticSpec::new(SyntheticKind::Path { n: 9 }, 0)).unwrap(),
    ]);
    let (mut ok, mut sum_dev, mut mean_dev) = (true, 0.0f64, 0.0f64);
    for seed in 0..5 {
        let model: Model = init_model(&ModelSpec::new(Variant::Dgcnn, 3, 8), seed).unwrap();
        let sum = readout_census(&graphs, &model, ReadoutMode::Sum).unwrap();
        // direct ratio check against the first graph
        let base: Vec<f64> = sum.vectors[0].clone();
        for (i, v) in sum.vectors.iter().enumerate() {
            let scaled: Vec<f64> = base.iter().map(|x| x * (i + 1) as f64).collect();
            sum_dev = sum_dev.max(rel_gap(v, &scaled));
        }
        let mean = readout_census(&graphs, &model, ReadoutMode::Mean).unwrap();
        mean_dev = mean_dev.max(mean.max_deviation);
        ok &= sum.passed && mean.passed;
    }
    ok &= sum_dev <= 1e-9 && mean_dev <= 1e-10;
    outcome(ok, format!("DGCNN sizes 3,6,9 over 5 seeds: sum ratio 1:2:3 gap {sum_dev:.3e} (tol 1e-9), mean gap {mean_dev:.3e} (tol 1e-10)"))
}

fn random_mlp(rng: &mut Prng) -> MlpBlock<f64> {
    let depth = rng.int_inclusive(1, 4);
    let mut dims = vec![rng.int_inclusive(1, 8)];
    for _ in 0..depth {
        dims.push(rng.int_inclusive(1, 8));
    }
    let layers = dims
        .windows(2)
        .map(|w| {
            let bound = (6.0 / w[0] as f64).sqrt();
            LinearLayer::without_bias(DenseMatrix::from_fn(w[1], w[0], |_, _| rng.symmetric(bound)))
        })
        .collect();
    MlpBlock::new(layers).unwrap()
}

fn ac9_homogeneity() -> Outcome {
    let mut rng = Prng::new(909);
    let (mut hom, mut add) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let mlp = random_mlp(&mut rng);
        let x: Vec<f64> = (0..mlp.in_dim()).map(|_| rng.symmetric(2.0)).collect();
        let a = (rng.real(-2.0, 2.0) * std::f64::consts::LN_10).exp();
        let fx = mlp.apply(&x).unwrap();
        let ax: Vec<f64> = x.iter().map(|v| a * v).collect();
        let afx: Vec<f64> = fx.iter().map(|v| a * v).collect();
        hom = hom.max(rel_gap(&mlp.apply(&ax).unwrap(), &afx));

        let coeffs: Vec<f64> = (0..rng.int_inclusive(2, 6)).map(|_| rng.real(0.01, 10.0)).collect();
        let mut sum_of_images = vec![0.0; mlp.out_dim()];
        for &c in &coeffs {
            let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
            for (s, y) in sum_of_images.iter_mut().zip(mlp.apply(&cx).unwrap()) {
                *s += y;
            }
        }
        let total: f64 = coeffs.iter().sum();
        let tx: Vec<f64> = x.iter().map(|v| total * v).collect();
        add = add.max(rel_gap(&mlp.apply(&tx).unwrap(), &sum_of_images));
    }
    outcome(
        hom <= 1e-12 && add <= 1e-11,
        format!("1000 zero-bias MLPs: homogeneity gap {hom:.3e} (tol 1e-12), additivity gap {add:.3e} (tol 1e-11)"),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn ac10_determinism() -> Outcome {
    let work = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 6] = [
        &["walks", "--synthetic", "er-corpus:count=5", "--seed", "3", "--k", "4"],
        &["embed", "--model", "gat", "--synthetic", "cycle:n=7"],
        &["verify", "--model", "gin0", "--synthetic", "erdos-renyi:n=25,p=0.3", "--count", "3", "--seed", "7"],
        &["correlate", "--model", "gcn", "--synthetic", "er-corpus:count=6", "--seed", "2"],
        &["collide", "--builtin-fig2", "--k", "2", "--model", "gin0", "--depth", "2"],
        &["lipschitz", "--model", "gin0", "--seed", "4"],
    ];
    let mut mismatched = Vec::new();
    for args in commands {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let status = Command::new(env!("CARGO_BIN_EXE_mpnn-walks"))
                .current_dir(work.path())
                .env_remove("MPNN_WALKS_OUT_DIR")
                .args(args)
                .args(["--format", "csv", "--out", "det"])
                .output()
                .unwrap()
                .status;
            if !status.success() {
                mismatched.push(format!("{} exited {status}", args[0]));
            }
            runs.push(snapshot(&work.path().join("det")));
            fs::remove_dir_all(work.path().join("det")).unwrap();
        }
        if runs[0] != runs[1] || runs[0].is_empty() {
            mismatched.push(args[0].to_owned());
        }
    }
    outcome(
        mismatched.is_empty(),
        if mismatched.is_empty() {
            "6 commands rerun with identical config: all outputs byte-identical".into()
        } else {
            format!("differences or failures: {}", mismatched.join(", "))
        },
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1 collapse of DGCNN and GAT", ac1_collapse),
        ("AC2 GIN-0 exact correlation", ac2_gin0_correlation),
        ("AC3 GCN exact correlation", ac3_gcn_correlation),
        ("AC4 biased GIN-0 correlation", ac4_biased_correlation),
        ("AC5 Lipschitz walk bounds", ac5_bounds),
        ("AC6 walk oracle equivalence", ac6_walk_oracle),
        ("AC7 equal-walk-count red nodes", ac7_fig2),
        ("AC8 readout census", ac8_readout),
        ("AC9 homogeneity and additivity", ac9_homogeneity),
        ("AC10 determinism", ac10_determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let o = check();
        failures += usize::from(!o.pass);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
