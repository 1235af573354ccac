//! One PASS/FAIL line per acceptance criterion. Pass criterion numbers as
//! arguments to run a subset, e.g. `cargo test --test acceptance -- 2 5`.

use std::collections::BTreeMap;
use std::time::Instant;

use genclus_core::eval::{ami, ari, evaluate, nmi, Clusterer, PipelineConfig, PipelineStep, Postprocess};
use genclus_core::graph::{symmetric_normalize, GroundTruth};
use genclus_core::harness::{bench_quality, bench_time, ExperimentConfig, Method, TimingConfig};
use genclus_core::richcom::{build_b_fixed, richcom_fit, richcom_init, richcom_sweep, RichcomModel, RichcomOptions};
use genclus_core::solver::{fit, init_model, update_a, update_ub, ConstraintKind, ConstraintMode, FitOptions, GenClusModel};
use genclus_core::{best_psd_approx, objective, MultiViewGraph, NormalizationKind, NormalizedTensor};
use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Warn(String),
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array2<f64> {
    let m = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
    (&m + &m.t()) * (scale / 2.0)
}

/// Views drawn from `templates` planted rank-2 matrices plus symmetric noise.
fn structured_tensor(rng: &mut ChaCha8Rng, n: usize, k: usize, templates: usize, noise: f64) -> NormalizedTensor {
    let bases: Vec<Array2<f64>> = (0..templates)
        .map(|_| {
            let v = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
            v.dot(&v.t()) / n as f64
        })
        .collect();
    let slices = (0..k).map(|i| &bases[i % templates] + &random_sym(rng, n, noise)).collect();
    NormalizedTensor::new(slices, NormalizationKind::Raw).unwrap()
}

fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

fn fro2(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// `sum_k ||Y_k - sum_m A_km U diag(B_m) U^T||^2` from dense slices.
fn naive_objective(y: &NormalizedTensor, model: &GenClusModel) -> f64 {
    let n = y.num_nodes();
    let slabs: Vec<Array2<f64>> = (0..model.num_clusters())
        .map(|m| {
            let scaled = &model.u * &model.b.row(m);
            scaled.dot(&model.u.t())
        })
        .collect();
    let mut total = 0.0;
    for k in 0..y.num_views() {
        let mut rec = Array2::<f64>::zeros((n, n));
        for (m, s) in slabs.iter().enumerate() {
            rec.scaled_add(model.a[[k, m]], s);
        }
        total += fro2(&(y.slice(k) - &rec));
    }
    total
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut checks = 0usize;
    for inst in 0..50u64 {
        let n = rng.random_range(3..=40);
        let k = rng.random_range(1..=9);
        let clusters = rng.random_range(1..=3);
        let rank = rng.random_range(1..=8usize.min(clusters * n));
        let y = if inst % 2 == 0 {
            structured_tensor(&mut rng, n, k, clusters.max(2), 0.05)
        } else {
            let slices = (0..k).map(|_| random_sym(&mut rng, n, 0.5)).collect();
            NormalizedTensor::new(slices, NormalizationKind::Raw).unwrap()
        };
        for mode in ConstraintMode::all() {
            let mut model = init_model(&y, rank, clusters, mode, inst * 31 + 7).unwrap();
            let mut prev = objective(&y, &model).unwrap();
            for it in 0..8 {
                model.a = update_a(&y, &model).unwrap();
                let mid = objective(&y, &model).unwrap();
                let up = update_ub(&y, &model).unwrap();
                model = GenClusModel { u: up.u, b: up.b, partition: up.partition, ..model };
                let cur = objective(&y, &model).unwrap();
                if let Err(e) = model.check_feasible(1e-8) {
                    return Verdict::Fail(format!("instance {inst} {}: infeasible iterate: {e}", mode.label()));
                }
                for (before, after, what) in [(prev, mid, "A"), (mid, cur, "U/B")] {
                    checks += 1;
                    if after > before * (1.0 + 1e-9) {
                        return Verdict::Fail(format!(
                            "instance {inst} {} iteration {it}: {what} step raised {before} to {after}",
                            mode.label()
                        ));
                    }
                    if before > 0.0 {
                        worst = worst.max(after / before - 1.0);
                    }
                }
                prev = cur;
            }
        }
    }
    Verdict::Pass(format!("{checks} half-updates over 50 instances x 9 modes, worst relative increase {worst:.2e}"))
}

/// Cyclic Jacobi eigensolver; returns eigenvalues and eigenvectors as columns.
fn jacobi_eig(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = fro2(&a).sqrt().max(1e-300);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[[i, j]].powi(2)).sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]] == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for kk in 0..n {
                    let (akp, akq) = (a[[kk, p]], a[[kk, q]]);
                    a[[kk, p]] = c * akp - s * akq;
                    a[[kk, q]] = s * akp + c * akq;
                }
                for kk in 0..n {
                    let (apk, aqk) = (a[[p, kk]], a[[q, kk]]);
                    a[[p, kk]] = c * apk - s * aqk;
                    a[[q, kk]] = s * apk + c * aqk;
                }
                for kk in 0..n {
                    let (vkp, vkq) = (v[[kk, p]], v[[kk, q]]);
                    v[[kk, p]] = c * vkp - s * vkq;
                    v[[kk, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[[i, i]]).collect(), v)
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let n = rng.random_range(1..=8);
        let rank = rng.random_range(1..=n);
        let scale = rng.random_range(0.1..5.0);
        let y = random_sym(&mut rng, n, scale);
        let (vals, vecs) = jacobi_eig(&y);
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize > rank {
                continue;
            }
            let mut s = Array2::<f64>::zeros((n, n));
            for (i, &lam) in vals.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    let col = vecs.column(i).to_owned().insert_axis(Axis(1));
                    s.scaled_add(lam.max(0.0), &col.dot(&col.t()));
                }
            }
            best = best.min(fro2(&(&y - &s)).sqrt());
        }
        let (s, _) = best_psd_approx(&y, rank).unwrap();
        let got = fro2(&(&y - &s)).sqrt();
        let gap = (got - best).abs();
        worst = worst.max(gap);
        if gap > 1e-10 {
            return Verdict::Fail(format!("case {case} (I={n}, R={rank}): error {got} vs exhaustive {best}"));
        }
    }
    Verdict::Pass(format!("200 matrices, worst gap {worst:.2e}"))
}

fn criterion_3() -> Verdict {
    let mode = ConstraintMode::new(ConstraintKind::AllOnes, ConstraintKind::Unconstrained);
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for inst in 0..20u64 {
        let n = rng.random_range(3..=7);
        let clusters = rng.random_range(2..=3);
        let k = rng.random_range(clusters + 1..=10);
        let y = structured_tensor(&mut rng, n, k, clusters, 0.1);
        let mut model = init_model(&y, clusters * n, clusters, mode, inst).unwrap();
        for it in 0..6 {
            model.a = update_a(&y, &model).unwrap();
            let labels: Vec<Option<usize>> = (0..k).map(|row| (0..clusters).find(|&m| model.a[[row, m]] != 0.0)).collect();
            let up = update_ub(&y, &model).unwrap();
            model = GenClusModel { u: up.u, b: up.b, partition: up.partition, ..model };
            let mut means = Vec::new();
            for m in 0..clusters {
                let members: Vec<usize> = (0..k).filter(|&v| labels[v] == Some(m)).collect();
                let mut mean = Array2::<f64>::zeros((n, n));
                for &v in &members {
                    mean += y.slice(v);
                }
                if !members.is_empty() {
                    mean /= members.len() as f64;
                }
                let slab = (&model.u * &model.b.row(m)).dot(&model.u.t());
                let err = max_abs(&(&slab - &mean));
                worst = worst.max(err);
                if err > 1e-8 {
                    return Verdict::Fail(format!("instance {inst} iteration {it} cluster {m}: slice mean error {err}"));
                }
                means.push(mean);
            }
            let next = update_a(&y, &model).unwrap();
            for v in 0..k {
                let d: Vec<f64> = means.iter().map(|c| fro2(&(y.slice(v) - c))).collect();
                let mut lloyd = 0;
                for m in 1..clusters {
                    if d[m] < d[lloyd] {
                        lloyd = m;
                    }
                }
                let got = (0..clusters).find(|&m| next[[v, m]] != 0.0);
                if got != Some(lloyd) {
                    return Verdict::Fail(format!("instance {inst} iteration {it} view {v}: assigned {got:?}, Lloyd {lloyd}"));
                }
            }
        }
    }
    Verdict::Pass(format!("20 instances, worst slice-mean error {worst:.2e}, assignments identical"))
}

fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, r: usize) -> Array2<f64> {
    let g = Array2::from_shape_fn((n, r), |_| rng.random_range(-1.0..1.0));
    let (_, v) = jacobi_eig(&g.dot(&g.t()));
    let (vals, _) = jacobi_eig(&g.dot(&g.t()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    v.select(Axis(1), &order[..r])
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = rng.random_range(2..=10);
        let k = rng.random_range(1..=6);
        let r = rng.random_range(1..=n);
        let slices: Vec<Array2<f64>> = (0..k).map(|_| random_sym(&mut rng, n, 1.0)).collect();
        let y = NormalizedTensor::new(slices, NormalizationKind::Raw).unwrap();
        let u = random_orthonormal(&mut rng, n, r);
        let total = y.total_sq_norm();
        let q = u.dot(&u.t());

        // Multi-view spectral objective as a rank-one-in-views tensor fit.
        let mut a: Array1<f64> = Array1::from_shape_fn(k, |_| rng.random_range(0.0..1.0));
        let an = a.dot(&a).sqrt();
        a /= an;
        let lhs: f64 = (0..k).map(|v| fro2(&(y.slice(v) - &(&q * a[v])))).sum();
        let mut s = Array2::<f64>::zeros((n, n));
        for v in 0..k {
            s.scaled_add(a[v], y.slice(v));
        }
        let rhs = total - 2.0 * u.t().dot(&s).dot(&u).diag().sum() + r as f64;
        let g1 = rel_gap(lhs, rhs);

        // All-ones B: per-cluster loss equals total minus tr(U^T Z U).
        let w: Array1<f64> = Array1::from_shape_fn(k, |_| if rng.random_bool(0.7) { rng.random_range(-2.0..2.0) } else { 0.0 });
        let wn2 = w.dot(&w);
        let lhs: f64 = (0..k).map(|v| fro2(&(y.slice(v) - &(&q * w[v])))).sum();
        let mut z = Array2::<f64>::eye(n) * -wn2;
        for v in 0..k {
            z.scaled_add(2.0 * w[v], y.slice(v));
        }
        let rhs = total - u.t().dot(&z).dot(&u).diag().sum();
        let g2 = rel_gap(lhs, rhs);

        // General B: loss equals total - ||Z||^2 + ||Z - ||a|| U D U^T||^2.
        let g3 = if wn2 > 0.0 {
            let d: Array1<f64> = Array1::from_shape_fn(r, |_| rng.random_range(-2.0..2.0));
            let udu = (&u * &d).dot(&u.t());
            let lhs: f64 = (0..k).map(|v| fro2(&(y.slice(v) - &(&udu * w[v])))).sum();
            let mut z = Array2::<f64>::zeros((n, n));
            for v in 0..k {
                z.scaled_add(w[v] / wn2.sqrt(), y.slice(v));
            }
            let rhs = total - fro2(&z) + fro2(&(&z - &(&udu * wn2.sqrt())));
            rel_gap(lhs, rhs)
        } else {
            0.0
        };

        // Trace-expanded model objective against the dense residual.
        let clusters = rng.random_range(1..=3);
        let rank = rng.random_range(1..=(clusters * n).min(8));
        let mode = ConstraintMode::all()[case % 9];
        let mut model = init_model(&y, rank, clusters, mode, case as u64).unwrap();
        let up = update_ub(&y, &model).unwrap();
        model = GenClusModel { u: up.u, b: up.b, partition: up.partition, ..model };
        model.check_feasible(1e-8).unwrap();
        let g4 = rel_gap(objective(&y, &model).unwrap(), naive_objective(&y, &model));

        let g = g1.max(g2).max(g3).max(g4);
        worst = worst.max(g);
        if g > 1e-10 {
            return Verdict::Fail(format!("case {case}: gaps {g1:.2e} {g2:.2e} {g3:.2e} {g4:.2e}"));
        }
    }
    Verdict::Pass(format!("100 inputs x 4 identities, worst relative gap {worst:.2e}"))
}

fn criterion_5() -> Verdict {
    let sizes = [5usize, 4, 6];
    let n: usize = sizes.iter().sum();
    let mut x = Array2::<f64>::zeros((n, n));
    let mut labels = Vec::new();
    let mut start = 0;
    for (c, &s) in sizes.iter().enumerate() {
        for i in start..start + s {
            labels.push(c);
            for j in start..start + s {
                if i != j {
                    x[[i, j]] = 1.0;
                }
            }
        }
        start += s;
    }
    let y = symmetric_normalize(&MultiViewGraph::from_dense(&[x], true).unwrap()).unwrap();
    let opts = FitOptions { rank: 3, clusters: 1, ..Default::default() };
    let (model, rep) = fit(&y, &opts).unwrap();
    let truth = GroundTruth { view_labels: vec![0], node_labels: BTreeMap::from([(0, labels)]) };
    let step = PipelineStep { postprocess: Postprocess::Raw, unit_norm: false, clusterer: Clusterer::KMeans };
    let res = evaluate(&model.u, &model.a, &model.b, &truth, &PipelineConfig::single(step)).unwrap();
    let score = res.node_ami();
    if score == 1.0 {
        Verdict::Pass(format!("node AMI {score} after {} iterations", rep.iterations))
    } else {
        Verdict::Fail(format!("node AMI {score} (objective {})", rep.final_objective()))
    }
}

fn criterion_6() -> Verdict {
    let cfg = ExperimentConfig { samples: 11, gammas: vec![0.15, 0.13, 0.11], ..Default::default() };
    let out = bench_quality(&cfg, 1).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    for (gamma, bar) in [(0.15, 0.95), (0.13, 0.95), (0.11, 0.90)] {
        let Some(row) = out.summary.iter().find(|s| (s.gamma - gamma).abs() < 1e-12) else {
            return Verdict::Fail(format!("no summary row for gamma {gamma}"));
        };
        ok &= row.node_ami_median >= bar;
        notes.push(format!("gamma {gamma}: median {:.4} (>= {bar}, {})", row.node_ami_median, row.config));
    }
    let msg = notes.join("; ");
    if ok {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn criterion_7() -> Verdict {
    let timing = TimingConfig {
        dims: vec!["views".into(), "nodes".into()],
        methods: vec![Method::Genclus],
        ..Default::default()
    };
    let cfg = ExperimentConfig { timing, ..Default::default() };
    let out = bench_time(&cfg).unwrap();
    let slope = |dim: &str| out.slopes.iter().find(|s| s.dim == dim).map(|s| (s.slope, s.slope_per_iteration)).unwrap();
    let (kv, kv_it) = slope("views");
    let (iv, iv_it) = slope("nodes");
    let msg = format!(
        "K slope {kv:.3} (per iteration {kv_it:.3}, want [0.8, 1.6]); I slope {iv:.3} (per iteration {iv_it:.3}, want <= 3.5)"
    );
    if (0.8..=1.6).contains(&kv) && iv <= 3.5 {
        Verdict::Pass(msg)
    } else {
        Verdict::Warn(msg)
    }
}

fn planted_richcom(rng: &mut ChaCha8Rng, n: usize, k: usize, counts: &[usize], seed: u64) -> NormalizedTensor {
    let b = build_b_fixed(counts, counts.len(), counts.iter().sum(), seed).unwrap();
    let u = Array2::from_shape_fn((n, b.ncols()), |_| rng.random::<f64>());
    let mut a = Array2::<f64>::zeros((k, b.nrows()));
    for row in 0..k {
        a[[row, row % b.nrows()]] = 0.5 + rng.random::<f64>();
    }
    let w = a.dot(&b);
    let slices = (0..k).map(|i| (&u * &w.row(i)).dot(&u.t())).collect();
    NormalizedTensor::new(slices, NormalizationKind::Raw).unwrap()
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut notes = Vec::new();
    let cases = [(30usize, 6usize, vec![2usize, 1, 2]), (24, 8, vec![2, 2]), (16, 5, vec![1, 2, 1])];
    for (inst, (n, k, counts)) in cases.into_iter().enumerate() {
        let y = planted_richcom(&mut rng, n, k, &counts, inst as u64);
        let b = build_b_fixed(&counts, counts.len(), counts.iter().sum(), inst as u64).unwrap();

        let mut model: RichcomModel = richcom_init(&y, &b, 0.0, 500 + inst as u64).unwrap();
        for sweep in 1..=2000 {
            model = richcom_sweep(&y, &model).unwrap();
            if model.u.iter().chain(model.a.iter()).any(|&v| v < 0.0 || !v.is_finite()) {
                return Verdict::Fail(format!("instance {inst}: negative or non-finite entry after sweep {sweep}"));
            }
        }

        let opts = RichcomOptions { rho: 0.0, tol: 1e-10, max_iters: 5000, seed: 1000 + inst as u64, restarts: 8 };
        let (_, rep) = richcom_fit(&y, &b, &opts).unwrap();
        let ratio = rep.final_objective() / y.total_sq_norm();
        if ratio > 1e-3 {
            return Verdict::Fail(format!("instance {inst} (I={n}): residual ratio {ratio:.3e} after {} sweeps", rep.iterations));
        }
        notes.push(format!("I={n}: {ratio:.2e}"));
    }
    Verdict::Pass(format!("non-negative after 3 x 2000 sweeps; best of 8 starts: {}", notes.join(", ")))
}

#[derive(serde::Deserialize)]
struct Case {
    a: Vec<usize>,
    b: Vec<usize>,
    ami: f64,
    nmi: f64,
    ari: f64,
}

#[derive(serde::Deserialize)]
struct Fixture {
    cases: Vec<Case>,
}

fn criterion_9() -> Verdict {
    let f: Fixture = serde_json::from_str(include_str!("fixtures/metrics.json")).unwrap();
    let mut worst = 0.0f64;
    for (i, c) in f.cases.iter().enumerate() {
        let got = [ami(&c.a, &c.b).unwrap(), nmi(&c.a, &c.b).unwrap(), ari(&c.a, &c.b).unwrap()];
        for (g, want) in got.iter().zip([c.ami, c.nmi, c.ari]) {
            worst = worst.max((g - want).abs());
            if (g - want).abs() > 1e-9 {
                return Verdict::Fail(format!("case {i}: {got:?} vs ({}, {}, {})", c.ami, c.nmi, c.ari));
            }
        }
    }
    Verdict::Pass(format!("{} labeling pairs, worst error {worst:.2e}", f.cases.len()))
}

fn main() {
    let criteria: [(usize, &str, fn() -> Verdict); 9] = [
        (1, "monotone half-updates", criterion_1),
        (2, "best PSD approximation", criterion_2),
        (3, "k-means equivalence", criterion_3),
        (4, "algebraic identities", criterion_4),
        (5, "three-clique recovery", criterion_5),
        (6, "synthetic quality", criterion_6),
        (7, "timing scaling", criterion_7),
        (8, "Richcom planted recovery", criterion_8),
        (9, "clustering metrics", criterion_9),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let verdict = run();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Verdict::Pass(msg) => println!("PASS [{id}] {name} ({secs:.1}s): {msg}"),
            Verdict::Warn(msg) => println!("FAIL [{id}] {name} ({secs:.1}s, soft): {msg}"),
            Verdict::Fail(msg) => {
                failed += 1;
                println!("FAIL [{id}] {name} ({secs:.1}s): {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
