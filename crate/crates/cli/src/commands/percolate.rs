use anyhow::{bail, Context, Result};
use entperc::lattice::honeycomb_to_triangular_transform;
use entperc::percolation::{
    post_swap_mean, sweep, threshold_estimate, BisectionOptions, CurvePoint, Percolation,
};
use entperc::pdl::grid;
use entperc::rng::derive_seed;
use entperc::{
    Lattice, LatticeKind, LatticeSpec, Mode, PercolationEstimate, PostSwapMean, ScpDistribution,
    ScpFamily, ScpSource,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, ModeName};
use crate::output::{Artifacts, Csv};

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_MEAN: f64 = 0.5;
pub const COMPARE_MEAN: f64 = 0.55;

pub fn default_lattice() -> LatticeSpec {
    LatticeSpec::new(LatticeKind::Square, 64)
}

/// Exact bond-percolation thresholds of the infinite lattices.
pub fn exact_threshold(kind: LatticeKind) -> f64 {
    let s = (std::f64::consts::PI / 18.0).sin();
    match kind {
        LatticeKind::Square => 0.5,
        LatticeKind::Triangular => 2.0 * s,
        LatticeKind::Honeycomb => 1.0 - 2.0 * s,
    }
}

/// Families compared at equal mean by `--compare-shapes`.
pub fn shape_families() -> Vec<(&'static str, ScpFamily)> {
    vec![
        ("bernoulli", ScpFamily::Bernoulli),
        ("uniform", ScpFamily::Uniform { half_width: 0.1 }),
        ("beta", ScpFamily::Beta { concentration: 10.0 }),
    ]
}

/// Fills in defaults so the hash describes what actually runs.
pub fn resolve(cfg: &ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = cfg.clone();
    let mut lattice = cfg.lattice.unwrap_or_else(default_lattice);
    let mode = cfg.mode.unwrap_or(ModeName::Rcep);
    if mode == ModeName::Rqep {
        if lattice.kind != LatticeKind::Honeycomb {
            bail!("rqep mode rewires a double-bond honeycomb; got a {} lattice", lattice.kind.name());
        }
        lattice.double_bonds = true;
    }
    cfg.lattice = Some(lattice);
    cfg.mode = Some(mode);
    cfg.trials = Some(cfg.trials.unwrap_or(DEFAULT_TRIALS));
    cfg.seed = Some(cfg.seed());
    if cfg.distribution.is_none() {
        cfg.family = Some(cfg.family.unwrap_or(ScpFamily::Fixed));
        let default_mean = if cfg.compare_shapes { COMPARE_MEAN } else { DEFAULT_MEAN };
        cfg.mean = Some(cfg.mean.unwrap_or(default_mean));
    }
    if cfg.trials == Some(0) {
        bail!("trials must be positive");
    }
    if cfg.distribution.is_some() && (cfg.sweep.is_some() || cfg.threshold || cfg.compare_shapes) {
        bail!("sweeps, thresholds and shape comparisons run over a `family`, not a fixed `distribution`");
    }
    Ok(cfg)
}

fn build_mode(lattice: &Lattice, mode: ModeName) -> Result<Mode> {
    Ok(match mode {
        ModeName::Rcep => Mode::Rcep,
        ModeName::Rqep => Mode::Rqep(Box::new(honeycomb_to_triangular_transform(lattice)?)),
    })
}

#[derive(Debug, Serialize)]
pub struct PointReport {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
    pub config_hash: String,
    pub details: PercolationEstimate,
    /// Mean SCP of the swap-generated bonds (rqep only).
    pub effective_bond_mean: Option<PostSwapMean>,
}

#[derive(Debug, Serialize)]
pub struct ThresholdReport {
    pub estimate: f64,
    pub stderr: f64,
    pub ci: (f64, f64),
    pub trials: u64,
    pub seed: u64,
    pub config_hash: String,
    pub lattice: String,
    pub family: ScpFamily,
    pub exact_threshold: Option<f64>,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Serialize)]
pub struct ShapeEstimate {
    pub family: String,
    pub distribution: String,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub mean: f64,
    pub trials: u64,
    pub seed: u64,
    pub config_hash: String,
    pub lattice: String,
    pub estimates: Vec<ShapeEstimate>,
    /// Largest `|p_a − p_b| / √(se_a² + se_b²)` over pairs.
    pub max_pairwise_z: f64,
}

#[derive(Debug, Serialize)]
pub struct CurveReport {
    pub trials: u64,
    pub seed: u64,
    pub config_hash: String,
    pub lattice: String,
    pub family: ScpFamily,
    pub points: Vec<CurvePoint>,
}

pub fn run(cfg: &ExperimentConfig, workers: usize) -> Result<Artifacts> {
    let cfg = resolve(cfg)?;
    let hash = cfg.hash();
    let spec = cfg.lattice.expect("resolved");
    let lattice = spec.build().context("building lattice")?;
    let mode = build_mode(&lattice, cfg.mode.expect("resolved"))?;
    let trials = cfg.trials.expect("resolved");
    let seed = cfg.seed();
    let mut out = Artifacts::new(&cfg.out_dir())?;

    if cfg.compare_shapes {
        let mean = cfg.mean.expect("resolved");
        let mut estimates = Vec::new();
        let mut curves = Csv::new(&["family", "x", "y", "yerr"]);
        for (k, (name, family)) in shape_families().into_iter().enumerate() {
            let fseed = derive_seed(seed, k as u64);
            let source = family.at(mean)?;
            let est = Percolation::new(&lattice, source.clone(), mode.clone())?
                .with_disorder(cfg.disorder, fseed)
                .spanning_probability(trials, fseed, workers)?;
            println!("{name:<10} {:<40} P_span = {:.4} ± {:.4}", source.label(), est.spanning_probability, est.stderr);
            estimates.push(ShapeEstimate {
                family: name.to_string(),
                distribution: source.label(),
                estimate: est.spanning_probability,
                stderr: est.stderr,
            });
            if let Some(r) = cfg.sweep {
                let xs = grid(r.start, r.stop, r.points);
                for p in sweep(&lattice, family, &mode, &xs, trials, fseed, workers)? {
                    curves.row(&[&name, &p.x, &p.y, &p.yerr]);
                }
            }
        }
        let mut max_z: f64 = 0.0;
        for a in 0..estimates.len() {
            for b in a + 1..estimates.len() {
                let se = estimates[a].stderr.hypot(estimates[b].stderr);
                let diff = (estimates[a].estimate - estimates[b].estimate).abs();
                let z = if se > 0.0 { diff / se } else if diff > 0.0 { f64::INFINITY } else { 0.0 };
                max_z = max_z.max(z);
            }
        }
        println!("largest pairwise difference: {max_z:.2} combined standard errors");
        if cfg.sweep.is_some() {
            out.csv("compare_shapes.csv", &curves)?;
        }
        out.json(
            "compare_shapes.json",
            &CompareReport {
                mean,
                trials,
                seed,
                config_hash: hash,
                lattice: lattice.label().to_string(),
                estimates,
                max_pairwise_z: max_z,
            },
        )?;
        return Ok(out);
    }

    if cfg.threshold {
        let family = cfg.family.expect("resolved");
        let options = BisectionOptions {
            workers,
            ..BisectionOptions::default()
        };
        let est = threshold_estimate(&lattice, family, &mode, trials, seed, options)?;
        let exact = (family == ScpFamily::Fixed && matches!(mode, Mode::Rcep) && !spec.double_bonds)
            .then(|| exact_threshold(spec.kind));
        println!(
            "{}: threshold {:.4} (ci {:.4}..{:.4}){}",
            lattice.label(),
            est.threshold,
            est.ci.0,
            est.ci.1,
            exact.map(|e| format!(", exact infinite-lattice value {e:.4}")).unwrap_or_default()
        );
        let mut csv = Csv::new(&["x", "y", "yerr"]);
        for p in &est.points {
            csv.row(&[&p.x, &p.y, &p.yerr]);
        }
        out.csv("threshold_points.csv", &csv)?;
        out.json(
            "threshold.json",
            &ThresholdReport {
                estimate: est.threshold,
                stderr: 0.25 * (est.ci.1 - est.ci.0),
                ci: est.ci,
                trials,
                seed,
                config_hash: hash,
                lattice: lattice.label().to_string(),
                family,
                exact_threshold: exact,
                points: est.points,
            },
        )?;
        return Ok(out);
    }

    if let Some(r) = cfg.sweep {
        let family = cfg.family.expect("resolved");
        let xs = grid(r.start, r.stop, r.points);
        let points = sweep(&lattice, family, &mode, &xs, trials, seed, workers)?;
        let mut csv = Csv::new(&["x", "y", "yerr"]);
        for p in &points {
            println!("x = {:.4}  P_span = {:.4} ± {:.4}", p.x, p.y, p.yerr);
            csv.row(&[&p.x, &p.y, &p.yerr]);
        }
        out.csv("percolate_curve.csv", &csv)?;
        out.json(
            "percolate_curve.json",
            &CurveReport {
                trials,
                seed,
                config_hash: hash,
                lattice: lattice.label().to_string(),
                family,
                points,
            },
        )?;
        return Ok(out);
    }

    let source = match &cfg.distribution {
        Some(d) => ScpSource::Distribution(ScpDistribution::new(d.clone())?),
        None => cfg.family.expect("resolved").at(cfg.mean.expect("resolved"))?,
    };
    let est = Percolation::new(&lattice, source.clone(), mode.clone())?
        .with_disorder(cfg.disorder, seed)
        .spanning_probability(trials, seed, workers)?;
    let effective_bond_mean = match &mode {
        Mode::Rqep(t) => Some(post_swap_mean(&lattice, t, &source, trials.min(1000), derive_seed(seed, 0x5a))?),
        Mode::Rcep => None,
    };
    println!(
        "{} {} [{}]: P_span = {:.4} ± {:.4} over {trials} trials",
        lattice.label(),
        est.mode,
        est.distribution,
        est.spanning_probability,
        est.stderr
    );
    if let Some(m) = &effective_bond_mean {
        println!("mean SCP of swapped bonds: {:.5} ± {:.5} ({} bonds)", m.mean, m.stderr, m.bonds);
    }
    out.json(
        "percolate.json",
        &PointReport {
            estimate: est.spanning_probability,
            stderr: est.stderr,
            trials,
            seed,
            config_hash: hash,
            details: est,
            effective_bond_mean,
        },
    )?;
    Ok(out)
}
