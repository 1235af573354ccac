use genclus_core::synth::{default_paper_spec, generate, GeneratorSpec, StructureSpec};

#[test]
fn block_densities_concentrate() {
    let spec = GeneratorSpec { flip_fraction: 0.0, ..default_paper_spec(0.15).with_seed(11) };
    let g = generate(&spec).unwrap();
    let truth = g.truth().unwrap();
    for k in 0..g.num_views() {
        let labels = &truth.node_labels[&truth.view_labels[k]];
        let dense = g.slice(k).to_dense(g.num_nodes());
        let blocks = labels.iter().max().unwrap() + 1;
        for c in 0..blocks {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            let pairs = (members.len() * (members.len() - 1)) as f64;
            let edges: f64 = members.iter().flat_map(|&i| members.iter().map(move |&j| (i, j))).map(|(i, j)| dense[[i, j]]).sum();
            let sd = (pairs * 0.15 * 0.85).sqrt();
            assert!((edges - 0.15 * pairs).abs() <= 3.0 * sd, "view {k} block {c}: {edges} edges of {pairs}");
        }
        let outside: f64 = dense.indexed_iter().filter(|((i, j), _)| labels[*i] != labels[*j]).map(|(_, v)| *v).sum();
        assert_eq!(outside, 0.0);
    }
}

#[test]
fn flipped_pairs_match_expectation() {
    let n = 40usize;
    let flip = 0.05;
    let expected = flip * (n * (n - 1)) as f64;
    let sd = (expected * (1.0 - flip)).sqrt();
    for seed in 0..50 {
        let spec = GeneratorSpec {
            structures: vec![StructureSpec { views: 2, cluster_sizes: vec![25, 15] }],
            gamma: 1.0,
            flip_fraction: flip,
            directed: true,
            seed,
        };
        let clean = generate(&GeneratorSpec { flip_fraction: 0.0, ..spec.clone() }).unwrap();
        let noisy = generate(&spec).unwrap();
        for k in 0..2 {
            let diff = (&clean.slice(k).to_dense(n) - &noisy.slice(k).to_dense(n)).mapv(f64::abs).sum();
            assert!((diff - expected).abs() <= 3.0 * sd, "seed {seed} view {k}: {diff}");
        }
    }
}

#[test]
fn same_seed_same_graph() {
    let spec = default_paper_spec(0.07).with_seed(99);
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    let c = generate(&spec.with_seed(100)).unwrap();
    for k in 0..a.num_views() {
        assert_eq!(a.slice(k), b.slice(k));
    }
    assert!((0..a.num_views()).any(|k| a.slice(k) != c.slice(k)));
}
