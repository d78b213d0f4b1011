use anyhow::{bail, Result};
use entperc::pdl::{
    grid, induced_scp_density, kde_reflected, mean_scp, pdl_of_scp,
    sample_pdl, scp_of_pdl, weak_pdl_mean_approx, Budget, MeanMethod, MeanScp, PdlModel, PdlSpec,
};
use entperc::rng::derive_seed;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{Artifacts, Csv};

pub const LIN_JIANG_ELEMENTS_DB: [f64; 5] = [0.8, 1.2, 1.4, 1.0, 0.7];
pub const FIG1_MEAN_DB: f64 = 2.35;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;

pub fn fig1_models() -> Vec<PdlSpec> {
    vec![
        PdlSpec::Maxwellian { mean_db: FIG1_MEAN_DB },
        PdlSpec::WeakElementChain { mean_db: FIG1_MEAN_DB, n: 200 },
        PdlSpec::ConcatenatedLink { elements_db: LIN_JIANG_ELEMENTS_DB.to_vec() },
    ]
}

/// Reference mean SCP and tolerance for the three standard models.
pub fn reference_for(spec: &PdlSpec) -> Option<(f64, f64)> {
    match spec {
        PdlSpec::Maxwellian { mean_db } if *mean_db == FIG1_MEAN_DB => Some((0.714, 0.02)),
        PdlSpec::WeakElementChain { mean_db, .. } if *mean_db == FIG1_MEAN_DB => Some((0.739, 0.02)),
        PdlSpec::ConcatenatedLink { elements_db } if elements_db[..] == LIN_JIANG_ELEMENTS_DB => {
            Some((0.755, 0.005))
        }
        _ => None,
    }
}

fn parameterization(model: &PdlModel) -> String {
    match model {
        &PdlModel::Maxwellian { scale_db } => format!(
            "Maxwell density of the PDL magnitude in dB, scale a = <P> sqrt(pi/2) / 2 = {scale_db} dB \
             (mean of the dB value matched)"
        ),
        PdlModel::ConcatenatedLink { elements_db } => format!(
            "elements {elements_db:?} dB, each preceded by a Haar-random unitary coupling"
        ),
        &PdlModel::WeakElementChain { target_mean_db, n, element_db } => format!(
            "{n} equal elements of {element_db} dB with Haar-random coupling, element PDL calibrated \
             so that the mean accumulated PDL is {target_mean_db} dB"
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    Analytic,
    KernelEstimate,
    PointMass,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub index: usize,
    pub spec: PdlSpec,
    pub label: String,
    pub parameterization: String,
    pub density: DensityKind,
    pub mean_pdl_db: f64,
    pub mean_scp: f64,
    pub mean_scp_stderr: f64,
    pub mean_scp_method: MeanMethod,
    pub samples: usize,
    pub weak_pdl_approximation: f64,
    /// Trapezoid integral of the emitted SCP density over the grid.
    pub grid_density_integral: Option<f64>,
    pub reference_mean_scp: Option<f64>,
    pub reference_tolerance: Option<f64>,
    pub discrepancy: Option<f64>,
    pub within_tolerance: Option<bool>,
    pub note: Option<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub seed: u64,
    pub samples: u64,
    pub grid_points: usize,
    pub models: Vec<ModelSummary>,
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn empirical_cdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&s| s <= x) as f64 / sorted.len() as f64
}

pub fn run(cfg: &ExperimentConfig, reproduce_fig1: bool) -> Result<(Artifacts, Summary)> {
    let mut specs = cfg.pdl_models.clone();
    if reproduce_fig1 {
        specs.extend(fig1_models());
    }
    if specs.is_empty() {
        bail!("no PDL models configured; pass --reproduce-fig1 or list `pdl_models` in the config");
    }
    let g = cfg.grid;
    if g.points < 2 || !(g.pdl_max_db > 0.0) || !(0.0 < g.scp_min && g.scp_min < g.scp_max && g.scp_max < 1.0) {
        bail!("invalid density grid {g:?}");
    }
    let samples = cfg.trials.unwrap_or(DEFAULT_SAMPLES);
    if samples < 2 {
        bail!("need at least two samples");
    }
    let seed = cfg.seed();
    let p_grid = grid(0.0, g.pdl_max_db, g.points);
    let x_grid = grid(g.scp_min, g.scp_max, g.points);
    let mut out = Artifacts::new(&cfg.out_dir())?;
    let mut models = Vec::new();

    for (index, spec) in specs.iter().enumerate() {
        let model_seed = derive_seed(seed, index as u64);
        let model = spec.build(model_seed)?;
        let stem = format!("model{index}_{}", model_kind(spec));
        let budget = Budget {
            samples: samples as usize,
            seed: model_seed,
            tolerance: 1e-10,
        };
        let mut files = Vec::new();
        let (density, mean, mean_pdl_db, grid_density_integral);

        if let Some(p0) = model.deterministic_pdl() {
            density = DensityKind::PointMass;
            mean = mean_scp(&model, &budget)?;
            mean_pdl_db = p0;
            grid_density_integral = None;
            let x0 = scp_of_pdl(p0);
            let mut cdf = Csv::new(&["x", "F_X"]);
            for &x in &x_grid {
                cdf.row(&[&x, &if x >= x0 { 1.0 } else { 0.0 }]);
            }
            files.push(out.csv(&format!("scp_cdf_{stem}.csv"), &cdf)?);
        } else if model.has_density() {
            density = DensityKind::Analytic;
            mean = mean_scp(&model, &budget)?;
            mean_pdl_db = model.mean_pdl().expect("analytic mean");
            let mut fp = Csv::new(&["P", "f_P"]);
            for &p in &p_grid {
                fp.row(&[&p, &model.pdl_density(p)?]);
            }
            let fx: Vec<f64> = x_grid
                .iter()
                .map(|&x| induced_scp_density(&model, x))
                .collect::<entperc::Result<_>>()?;
            let mut fx_csv = Csv::new(&["x", "f_X"]);
            let mut cdf = Csv::new(&["x", "F_X"]);
            for (&x, &f) in x_grid.iter().zip(&fx) {
                fx_csv.row(&[&x, &f]);
                let tail = model.pdl_cdf(pdl_of_scp(x)).expect("analytic cdf");
                cdf.row(&[&x, &(1.0 - tail)]);
            }
            grid_density_integral = Some(trapezoid(&x_grid, &fx));
            files.push(out.csv(&format!("pdl_density_{stem}.csv"), &fp)?);
            files.push(out.csv(&format!("scp_density_{stem}.csv"), &fx_csv)?);
            files.push(out.csv(&format!("scp_cdf_{stem}.csv"), &cdf)?);
        } else {
            density = DensityKind::KernelEstimate;
            // same draws as `mean_scp` with this budget
            let mut ps = sample_pdl(&model, budget.samples, budget.seed);
            mean_pdl_db = ps.iter().sum::<f64>() / ps.len() as f64;
            mean = MeanScp::from_samples(&ps.iter().map(|&p| scp_of_pdl(p)).collect::<Vec<_>>());
            ps.sort_by(f64::total_cmp);
            let p_hi = ps[ps.len() - 1].max(g.pdl_max_db);
            let fp = kde_reflected(&ps, &p_grid, 0.0, p_hi);
            let mut xs: Vec<f64> = ps.iter().map(|&p| scp_of_pdl(p)).collect();
            xs.reverse();
            let fx = kde_reflected(&xs, &x_grid, 0.0, 1.0);
            let mut fp_csv = Csv::new(&["P", "f_P_estimate"]);
            for (p, f) in p_grid.iter().zip(&fp) {
                fp_csv.row(&[p, f]);
            }
            let mut fx_csv = Csv::new(&["x", "f_X_estimate"]);
            let mut cdf = Csv::new(&["x", "F_X_empirical"]);
            for (&x, f) in x_grid.iter().zip(&fx) {
                fx_csv.row(&[&x, f]);
                cdf.row(&[&x, &empirical_cdf(&xs, x)]);
            }
            grid_density_integral = Some(trapezoid(&x_grid, &fx));
            files.push(out.csv(&format!("pdl_density_{stem}.csv"), &fp_csv)?);
            files.push(out.csv(&format!("scp_density_{stem}.csv"), &fx_csv)?);
            files.push(out.csv(&format!("scp_cdf_{stem}.csv"), &cdf)?);
        }

        let reference = reference_for(spec);
        let discrepancy = reference.map(|(r, _)| mean.mean - r);
        let within = reference.map(|(r, tol)| (mean.mean - r).abs() <= tol);
        let note = match (reference, within) {
            (Some((r, tol)), Some(false)) => Some(format!(
                "mean SCP {:.5} differs from the reference {r} by {:+.5}, outside ±{tol}; \
                 reported as computed under the stated parameterization",
                mean.mean,
                mean.mean - r
            )),
            _ => None,
        };
        models.push(ModelSummary {
            index,
            spec: spec.clone(),
            label: model.label(),
            parameterization: parameterization(&model),
            density,
            mean_pdl_db,
            mean_scp: mean.mean,
            mean_scp_stderr: mean.stderr,
            mean_scp_method: mean.method,
            samples: mean.samples,
            weak_pdl_approximation: weak_pdl_mean_approx(mean_pdl_db)?,
            grid_density_integral,
            reference_mean_scp: reference.map(|r| r.0),
            reference_tolerance: reference.map(|r| r.1),
            discrepancy,
            within_tolerance: within,
            note,
            files: files
                .iter()
                .map(|f| f.file_name().unwrap().to_string_lossy().into_owned())
                .collect(),
        });
    }

    for m in &models {
        let reference = match (m.reference_mean_scp, m.within_tolerance) {
            (Some(r), Some(ok)) => format!(
                "  reference {r} ({})",
                if ok { "within tolerance" } else { "OUTSIDE tolerance" }
            ),
            _ => String::new(),
        };
        println!(
            "{:<48} <P> = {:.4} dB  mean SCP = {:.5} ± {:.1e}{reference}",
            m.label, m.mean_pdl_db, m.mean_scp, m.mean_scp_stderr
        );
    }

    let summary = Summary {
        config_hash: cfg.hash(),
        seed,
        samples,
        grid_points: g.points,
        models,
    };
    out.json("pdl_summary.json", &summary)?;
    Ok((out, summary))
}

fn model_kind(spec: &PdlSpec) -> &'static str {
    match spec {
        PdlSpec::Maxwellian { .. } => "maxwellian",
        PdlSpec::ConcatenatedLink { .. } => "concatenated-link",
        PdlSpec::WeakElementChain { .. } => "weak-element-chain",
    }
}
