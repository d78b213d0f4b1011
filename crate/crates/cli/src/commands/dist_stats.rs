use anyhow::{bail, Result};
use entperc::scp::{beta_expected_min, beta_shape_constant, ScpSpec};
use entperc::{DistributionStats, ScpDistribution};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{opt, Artifacts, Csv};

/// Rows of the standard distribution table.
pub fn table1_rows() -> Vec<ScpSpec> {
    vec![
        ScpSpec::Uniform { mean: 0.5, std: 0.2 },
        ScpSpec::TruncatedGaussian { mean: 0.5, std: 0.05 },
        ScpSpec::Bernoulli { mean: 0.3 },
        ScpSpec::SymmetricBimodal { mean: 0.5, std: 0.2 },
        ScpSpec::Beta { alpha: 2.0, beta: 5.0 },
        ScpSpec::Haar,
    ]
}

/// Closed forms of `E[X_min]`, `C` and the penalty `Δ/2` where one exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForm {
    pub expected_min: f64,
    pub shape_constant: Option<f64>,
    pub penalty: f64,
}

pub fn closed_form(spec: &ScpSpec, stats: &DistributionStats) -> Option<ClosedForm> {
    let (mu, sigma) = (stats.mean, stats.std);
    let ls = |c: f64| ClosedForm {
        expected_min: mu - c * sigma,
        shape_constant: Some(c),
        penalty: c * sigma,
    };
    match *spec {
        ScpSpec::Uniform { .. } => Some(ls(1.0 / 3f64.sqrt())),
        ScpSpec::SymmetricBimodal { .. } => Some(ls(0.5)),
        // only in the regime where truncation is negligible
        ScpSpec::TruncatedGaussian { mean, std } => {
            let d = ScpDistribution::truncated_gaussian(mean, std).ok()?;
            (d.untruncated_tail_mass() < 1e-6).then(|| ls(1.0 / std::f64::consts::PI.sqrt()))
        }
        ScpSpec::Bernoulli { mean } => Some(ClosedForm {
            expected_min: mean * mean,
            shape_constant: None,
            penalty: mean * (1.0 - mean),
        }),
        ScpSpec::Beta { alpha, beta } => {
            let e = beta_expected_min(alpha, beta).ok()?;
            Some(ClosedForm {
                expected_min: e,
                shape_constant: Some(beta_shape_constant(alpha, beta)),
                penalty: mu - e,
            })
        }
        ScpSpec::Haar => Some(ClosedForm {
            expected_min: 1.0 / 7.0,
            shape_constant: Some(15f64.sqrt() / 7.0),
            penalty: 3.0 / 28.0,
        }),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub kind: String,
    pub label: String,
    pub spec: ScpSpec,
    pub stats: DistributionStats,
    pub closed_form: Option<ClosedForm>,
    /// Largest deviation between computed and closed-form columns.
    pub max_abs_deviation: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    config_hash: String,
    rows: &'a [Row],
}

pub fn compute(specs: &[ScpSpec]) -> Result<Vec<Row>> {
    specs
        .iter()
        .map(|spec| {
            let dist = ScpDistribution::new(spec.clone())?;
            let stats = dist.stats()?;
            let closed_form = closed_form(spec, &stats);
            let max_abs_deviation = closed_form.map(|c| {
                let mut d = (c.expected_min - stats.expected_min)
                    .abs()
                    .max((c.penalty - stats.penalty).abs());
                if let (Some(a), Some(b)) = (c.shape_constant, stats.shape_constant) {
                    d = d.max((a - b).abs());
                }
                d
            });
            Ok(Row {
                kind: spec.kind().to_string(),
                label: spec.label(),
                spec: spec.clone(),
                stats,
                closed_form,
                max_abs_deviation,
            })
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig, reproduce_table1: bool) -> Result<Artifacts> {
    let mut specs = cfg.distributions.clone();
    if reproduce_table1 {
        specs.extend(table1_rows());
    }
    if specs.is_empty() {
        bail!("no distributions configured; pass --reproduce-table1 or list `distributions` in the config");
    }
    let rows = compute(&specs)?;

    println!(
        "{:<44} {:>9} {:>9} {:>9} {:>10} {:>9} {:>9}",
        "distribution", "mean", "std", "Delta", "E[X_min]", "C", "penalty"
    );
    for r in &rows {
        let s = &r.stats;
        let c = s
            .shape_constant
            .map(|c| format!("{c:.6}"))
            .unwrap_or_else(|| "---".into());
        println!(
            "{:<44} {:>9.6} {:>9.6} {:>9.6} {:>10.6} {:>9} {:>9.6}",
            r.label, s.mean, s.std, s.mean_abs_diff, s.expected_min, c, s.penalty
        );
    }

    let mut csv = Csv::new(&[
        "kind",
        "label",
        "mean",
        "std",
        "mean_abs_diff",
        "expected_min",
        "shape_constant",
        "penalty",
        "closed_form_expected_min",
        "closed_form_shape_constant",
        "closed_form_penalty",
        "max_abs_deviation",
    ]);
    for r in &rows {
        let s = &r.stats;
        let cf = r.closed_form;
        csv.row(&[
            &r.kind,
            &r.label,
            &s.mean,
            &s.std,
            &s.mean_abs_diff,
            &s.expected_min,
            &opt(s.shape_constant),
            &s.penalty,
            &opt(cf.map(|c| c.expected_min)),
            &opt(cf.and_then(|c| c.shape_constant)),
            &opt(cf.map(|c| c.penalty)),
            &opt(r.max_abs_deviation),
        ]);
    }
    let mut out = Artifacts::new(&cfg.out_dir())?;
    out.csv("dist_stats.csv", &csv)?;
    out.json(
        "dist_stats.json",
        &Report {
            config_hash: cfg.hash(),
            rows: &rows,
        },
    )?;
    Ok(out)
}
