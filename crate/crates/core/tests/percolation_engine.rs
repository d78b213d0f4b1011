use entperc::lattice::{build_lattice, honeycomb_to_triangular_transform};
use entperc::percolation::{
    conversion_open_count, rqep_penalty_experiment, spans_with, threshold_estimate,
    BisectionOptions, Percolation, Workspace,
};
use entperc::rng::RandomStream;
use entperc::stats::{chi_square_homogeneity, chi_square_sf};
use entperc::{
    BoundaryMode, Disorder, Lattice, LatticeKind, Mode, ScpDistribution, ScpFamily, ScpSource,
    UnionFind,
};

fn open(kind: LatticeKind, l: usize) -> Lattice {
    build_lattice(kind, l, false, BoundaryMode::Open).unwrap()
}

// Component labels by depth-first search, canonicalised to the smallest
// member of each component.
fn dfs_labels(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut label = vec![usize::MAX; n];
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = start;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = start;
                    stack.push(w);
                }
            }
        }
    }
    label
}

fn uf_labels(n: usize, edges: &[(usize, usize)]) -> (Vec<usize>, usize) {
    let mut uf = UnionFind::new(n);
    for &(a, b) in edges {
        uf.union(a, b);
    }
    let mut smallest = vec![usize::MAX; n];
    for v in 0..n {
        let r = uf.find(v);
        smallest[r] = smallest[r].min(v);
    }
    ((0..n).map(|v| smallest[uf.find(v)]).collect(), uf.cluster_count())
}

#[test]
fn union_find_matches_dfs_on_random_five_node_graphs() {
    let mut rng = RandomStream::new(12);
    for _ in 0..5000 {
        let edges: Vec<(usize, usize)> = (0..rng.uniform().mul_add(8.0, 0.0) as usize)
            .map(|_| ((rng.uniform() * 5.0) as usize, (rng.uniform() * 5.0) as usize))
            .collect();
        let dfs = dfs_labels(5, &edges);
        let (uf, clusters) = uf_labels(5, &edges);
        assert_eq!(dfs, uf);
        let roots = dfs.iter().enumerate().filter(|(v, l)| v == *l).count();
        assert_eq!(clusters, roots);
    }
}

#[test]
fn union_find_matches_dfs_exhaustively_up_to_six_nodes() {
    for n in 1..=6usize {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &p)| p)
                .collect();
            assert_eq!(dfs_labels(n, &edges), uf_labels(n, &edges).0);
        }
    }
}

#[test]
fn certain_outcomes() {
    for kind in [LatticeKind::Square, LatticeKind::Triangular, LatticeKind::Honeycomb] {
        let l = open(kind, 16);
        let one = Percolation::new(&l, ScpSource::Fixed(1.0), Mode::Rcep).unwrap();
        let est = one.spanning_probability(50, 1, 2).unwrap();
        assert_eq!((est.spanning_probability, est.stderr), (1.0, 0.0));
        let zero = Percolation::new(&l, ScpSource::Fixed(0.0), Mode::Rcep).unwrap();
        assert_eq!(zero.spanning_probability(50, 1, 2).unwrap().spanning_probability, 0.0);
    }
}

#[test]
fn worker_count_does_not_change_estimates() {
    let l = open(LatticeKind::Square, 32);
    let dist = ScpDistribution::beta(2.0, 2.0).unwrap();
    let run = Percolation::new(&l, ScpSource::Distribution(dist), Mode::Rcep).unwrap();
    let base = run.spanning_probability(2000, 42, 1).unwrap();
    for workers in [2, 8] {
        let other = run.spanning_probability(2000, 42, workers).unwrap();
        assert_eq!(base, other);
        assert_eq!(base.spanning_probability.to_bits(), other.spanning_probability.to_bits());
    }
}

#[test]
fn spanning_is_monotone_in_p_for_shared_uniforms() {
    let l = open(LatticeKind::Square, 24);
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let runs: Vec<_> = grid
        .iter()
        .map(|&p| Percolation::new(&l, ScpSource::Fixed(p), Mode::Rcep).unwrap())
        .collect();
    let mut ws = Workspace::default();
    for t in 0..1000 {
        let spans: Vec<bool> = runs.iter().map(|r| r.trial(9, t, &mut ws)).collect();
        assert!(spans.windows(2).all(|w| w[0] <= w[1]), "trial {t}: {spans:?}");
    }
}

#[test]
fn edge_open_frequency_is_bernoulli_mean() {
    let mu = 0.55;
    let sources = [
        ScpSource::Distribution(ScpDistribution::bernoulli(mu).unwrap()),
        ScpSource::Distribution(ScpDistribution::uniform_range(0.45, 0.65).unwrap()),
        ScpSource::Distribution(ScpDistribution::beta(5.5, 4.5).unwrap()),
    ];
    let n = 1_000_000u64;
    let rows: Vec<(u64, u64)> = sources
        .iter()
        .enumerate()
        .map(|(k, s)| (conversion_open_count(s, n, 100 + k as u64), n))
        .collect();
    let (stat, dof) = chi_square_homogeneity(&rows);
    assert!(chi_square_sf(stat, dof) > 1e-3, "chi2 {stat}");
    for &(open, trials) in &rows {
        let f = open as f64 / trials as f64;
        assert!((f - mu).abs() < 4.0 * (mu * (1.0 - mu) / n as f64).sqrt());
    }
}

// Exact crossing probability of the open 3×3 square patch by enumeration.
fn exact_square3(p: f64) -> f64 {
    let l = open(LatticeKind::Square, 3);
    let m = l.edge_count();
    let mut total = 0.0;
    for mask in 0u32..(1 << m) {
        let edges: Vec<(usize, usize)> = l
            .edges()
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, e)| (e.a as usize, e.b as usize))
            .collect();
        let labels = dfs_labels(l.node_count(), &edges);
        let spans = l
            .source()
            .iter()
            .any(|&s| l.sink().iter().any(|&t| labels[s] == labels[t]));
        if spans {
            let k = mask.count_ones() as i32;
            total += p.powi(k) * (1.0 - p).powi(m as i32 - k);
        }
    }
    total
}

#[test]
fn stderr_intervals_cover_exact_value() {
    let l = open(LatticeKind::Square, 3);
    let p = 0.5;
    let exact = exact_square3(p);
    assert!(exact > 0.0 && exact < 1.0);
    let run = Percolation::new(&l, ScpSource::Fixed(p), Mode::Rcep).unwrap();
    let covered = (0..100)
        .filter(|&seed| {
            let e = run.spanning_probability(1000, seed, 1).unwrap();
            (e.spanning_probability - exact).abs() <= 2.0 * e.stderr
        })
        .count();
    assert!(covered >= 90, "coverage {covered}/100");
}

#[test]
fn spans_with_agrees_with_enumeration_oracle() {
    let l = open(LatticeKind::Triangular, 3);
    let mut uf = UnionFind::new(0);
    for mask in 0u32..(1 << l.edge_count()) {
        let edges: Vec<(usize, usize)> = l
            .edges()
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, e)| (e.a as usize, e.b as usize))
            .collect();
        let labels = dfs_labels(l.node_count(), &edges);
        let oracle = l
            .source()
            .iter()
            .any(|&s| l.sink().iter().any(|&t| labels[s] == labels[t]));
        assert_eq!(spans_with(&l, &mut uf, |e| mask >> e & 1 == 1), oracle);
    }
}

#[test]
fn shape_independence_at_equal_mean() {
    let l = open(LatticeKind::Square, 32);
    let families = [
        ScpFamily::Bernoulli,
        ScpFamily::Uniform { half_width: 0.1 },
        ScpFamily::Beta { concentration: 10.0 },
    ];
    let est: Vec<_> = families
        .iter()
        .enumerate()
        .map(|(k, f)| {
            Percolation::new(&l, f.at(0.52).unwrap(), Mode::Rcep)
                .unwrap()
                .spanning_probability(4000, 500 + k as u64, 1)
                .unwrap()
        })
        .collect();
    for a in 0..3 {
        for b in a + 1..3 {
            let diff = (est[a].spanning_probability - est[b].spanning_probability).abs();
            let se = est[a].stderr.hypot(est[b].stderr);
            assert!(diff <= 4.0 * se, "{a} vs {b}: {diff} > 4·{se}");
        }
    }
}

#[test]
fn quenched_disorder_is_reproducible() {
    let l = open(LatticeKind::Square, 16);
    let src = ScpSource::Distribution(ScpDistribution::haar());
    let a = Percolation::new(&l, src.clone(), Mode::Rcep)
        .unwrap()
        .with_disorder(Disorder::Quenched, 3)
        .spanning_probability(500, 8, 1)
        .unwrap();
    let b = Percolation::new(&l, src, Mode::Rcep)
        .unwrap()
        .with_disorder(Disorder::Quenched, 3)
        .spanning_probability(500, 8, 2)
        .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.disorder, Disorder::Quenched);
}

#[test]
fn rqep_conversion_happens_on_rewired_lattice() {
    let h = build_lattice(LatticeKind::Honeycomb, 12, true, BoundaryMode::Open).unwrap();
    let t = honeycomb_to_triangular_transform(&h).unwrap();
    let run = Percolation::new(&h, ScpSource::Fixed(1.0), Mode::Rqep(Box::new(t.clone()))).unwrap();
    assert_eq!(run.conversion_lattice().node_count(), t.lattice().node_count());
    assert_eq!(run.spanning_probability(20, 0, 1).unwrap().spanning_probability, 1.0);
    let wrong = open(LatticeKind::Honeycomb, 12);
    assert!(Percolation::new(&wrong, ScpSource::Fixed(1.0), Mode::Rqep(Box::new(t))).is_err());
}

#[test]
fn penalty_experiment_small_runs() {
    let point = ScpDistribution::point_mass(0.8).unwrap();
    let r = rqep_penalty_experiment(8, &point, 20, 1, 1).unwrap();
    assert!((r.post_swap_mean - 0.8).abs() < 1e-12);
    assert!(r.observed_penalty.abs() < 1e-12);
    assert_eq!(r.expected_penalty, 0.0);

    let haar = ScpDistribution::haar();
    let r = rqep_penalty_experiment(24, &haar, 200, 2, 1).unwrap();
    assert!(r.swapped_bonds >= 100_000);
    assert!((r.post_swap_mean - 1.0 / 7.0).abs() <= 4.0 * r.post_swap_stderr);
}

#[test]
fn small_square_threshold_brackets_one_half() {
    let l = open(LatticeKind::Square, 32);
    let est = threshold_estimate(
        &l,
        ScpFamily::Fixed,
        &Mode::Rcep,
        2000,
        4,
        BisectionOptions { resolution: 0.005, max_iterations: 20, workers: 1 },
    )
    .unwrap();
    assert!((est.threshold - 0.5).abs() < 0.02, "{}", est.threshold);
    assert!(est.ci.0 <= est.threshold && est.threshold <= est.ci.1);
}
