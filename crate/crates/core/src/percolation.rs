//! Monte Carlo spanning estimates for classical (RCEP) and q-swap (RQEP)
//! entanglement percolation.
//!
//! A trial draws one SCP per edge, converts every edge independently
//! (`open ⇔ u_e < scp_e`) and asks whether open edges join the source and
//! sink boundaries. Draws are keyed by `(seed, trial)` so estimates do not
//! depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{honeycomb_to_triangular_transform, Lattice, LatticeKind, LatticeSpec, SwapTransform};
use crate::pdl::{scp_of_pdl, PdlModel};
use crate::rng::{derive_seed, Channel, RandomStream};
use crate::scp::ScpDistribution;
use crate::union_find::UnionFind;

/// Where per-edge SCPs come from.
#[derive(Debug, Clone)]
pub enum ScpSource {
    Fixed(f64),
    Distribution(ScpDistribution),
    /// SCPs `X(P)` with `P` drawn from a PDL model.
    Pdl(PdlModel),
}

impl ScpSource {
    pub fn label(&self) -> String {
        match self {
            ScpSource::Fixed(p) => format!("fixed(p={p})"),
            ScpSource::Distribution(d) => d.label(),
            ScpSource::Pdl(m) => format!("pdl-induced({})", m.label()),
        }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        match self {
            ScpSource::Fixed(p) => *p,
            ScpSource::Distribution(d) => d.sample(rng),
            ScpSource::Pdl(m) => scp_of_pdl(m.sample(rng)),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ScpSource::Fixed(p) if !(0.0..=1.0).contains(p) => Err(Error::InvalidParameter(
                format!("fixed SCP must lie in [0, 1], got {p}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Mode {
    Rcep,
    /// Rewire with the given transform before conversion.
    Rqep(Box<SwapTransform>),
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Rcep => "rcep",
            Mode::Rqep(_) => "rqep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Disorder {
    /// Fresh SCPs every trial.
    #[default]
    Annealed,
    /// One SCP draw shared by every trial; only conversions are redrawn.
    Quenched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationEstimate {
    pub spanning_probability: f64,
    pub stderr: f64,
    pub trials: u64,
    pub spanning_trials: u64,
    pub lattice: String,
    pub distribution: String,
    pub mode: String,
    pub disorder: Disorder,
    pub seed: u64,
}

impl PercolationEstimate {
    fn from_counts(spans: u64, trials: u64, run: &Percolation<'_>, seed: u64) -> Self {
        let p = spans as f64 / trials as f64;
        Self {
            spanning_probability: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
            spanning_trials: spans,
            lattice: run.lattice.label().to_string(),
            distribution: run.source.label(),
            mode: run.mode.name().to_string(),
            disorder: run.disorder,
            seed,
        }
    }
}

/// Scratch buffers reused across trials on one worker.
#[derive(Debug, Default)]
pub struct Workspace {
    input: Vec<f64>,
    output: Vec<f64>,
    uf: Option<UnionFind>,
}

/// Whether open edges join the source and sink of `lattice`; `is_open` is
/// queried once per edge, in edge order, until spanning is certain.
pub fn spans_with(lattice: &Lattice, uf: &mut UnionFind, mut is_open: impl FnMut(usize) -> bool) -> bool {
    let n = lattice.node_count();
    let (s, t) = (n, n + 1);
    uf.reset(n + 2);
    for &v in lattice.source() {
        uf.union(v, s);
    }
    for &v in lattice.sink() {
        uf.union(v, t);
    }
    for (e, edge) in lattice.edges().iter().enumerate() {
        if is_open(e) {
            uf.union(edge.a as usize, edge.b as usize);
        }
        if e % 64 == 63 && uf.connected(s, t) {
            return true;
        }
    }
    uf.connected(s, t)
}

/// One percolation experiment: lattice, SCP source, mode and disorder.
#[derive(Debug, Clone)]
pub struct Percolation<'a> {
    lattice: &'a Lattice,
    source: ScpSource,
    mode: Mode,
    disorder: Disorder,
    quenched: Option<Vec<f64>>,
}

const QUENCHED_KEY: u64 = u64::MAX >> 3;

impl<'a> Percolation<'a> {
    pub fn new(lattice: &'a Lattice, source: ScpSource, mode: Mode) -> Result<Self> {
        source.validate()?;
        if let Mode::Rqep(t) = &mode {
            if t.input_edge_count() != lattice.edge_count() {
                return Err(Error::InvalidPlan(format!(
                    "transform expects {} edges, lattice has {}",
                    t.input_edge_count(),
                    lattice.edge_count()
                )));
            }
        }
        Ok(Self {
            lattice,
            source,
            mode,
            disorder: Disorder::Annealed,
            quenched: None,
        })
    }

    /// Switches disorder; quenched SCPs are drawn once from `seed`.
    pub fn with_disorder(mut self, disorder: Disorder, seed: u64) -> Self {
        self.disorder = disorder;
        self.quenched = match disorder {
            Disorder::Annealed => None,
            Disorder::Quenched => {
                let mut rng = RandomStream::keyed(seed, QUENCHED_KEY, Channel::Scp);
                Some(self.draw_input(&mut rng))
            }
        };
        self
    }

    pub fn lattice(&self) -> &Lattice {
        self.lattice
    }

    pub fn source(&self) -> &ScpSource {
        &self.source
    }

    /// The lattice on which conversion happens.
    pub fn conversion_lattice(&self) -> &Lattice {
        match &self.mode {
            Mode::Rcep => self.lattice,
            Mode::Rqep(t) => t.lattice(),
        }
    }

    fn draw_input(&self, rng: &mut RandomStream) -> Vec<f64> {
        (0..self.lattice.edge_count())
            .map(|_| self.source.sample(rng))
            .collect()
    }

    /// One trial with explicit SCP and conversion streams.
    pub fn trial_with(
        &self,
        scp_rng: &mut RandomStream,
        conversion_rng: &mut RandomStream,
        ws: &mut Workspace,
    ) -> bool {
        let uf = ws.uf.get_or_insert_with(|| UnionFind::new(0));
        let target = self.conversion_lattice();
        // Fixed-p RCEP needs no SCP buffer.
        if let (ScpSource::Fixed(p), Mode::Rcep) = (&self.source, &self.mode) {
            let p = *p;
            return spans_with(target, uf, |_| conversion_rng.uniform() < p);
        }
        let input: &[f64] = match &self.quenched {
            Some(q) => q,
            None => {
                ws.input.clear();
                for _ in 0..self.lattice.edge_count() {
                    ws.input.push(self.source.sample(scp_rng));
                }
                &ws.input
            }
        };
        let scps: &[f64] = match &self.mode {
            Mode::Rcep => input,
            Mode::Rqep(t) => {
                t.apply_into(input, &mut ws.output);
                &ws.output
            }
        };
        spans_with(target, uf, |e| conversion_rng.uniform() < scps[e])
    }

    /// Trial `index` of the run seeded with `seed`.
    pub fn trial(&self, seed: u64, index: u64, ws: &mut Workspace) -> bool {
        let mut scp_rng = RandomStream::keyed(seed, index, Channel::Scp);
        let mut conv_rng = RandomStream::keyed(seed, index, Channel::Conversion);
        self.trial_with(&mut scp_rng, &mut conv_rng, ws)
    }

    /// Fraction of spanning trials, run on `workers` threads.
    pub fn spanning_probability(&self, trials: u64, seed: u64, workers: usize) -> Result<PercolationEstimate> {
        if trials == 0 {
            return Err(Error::InvalidParameter("need at least one trial".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        let spans: u64 = pool.install(|| {
            (0..trials as usize)
                .into_par_iter()
                .with_min_len(8)
                .map_init(Workspace::default, |ws, t| self.trial(seed, t as u64, ws) as u64)
                .sum()
        });
        Ok(PercolationEstimate::from_counts(spans, trials, self, seed))
    }
}

/// Single trial: SCPs from `rng`, conversions from a stream keyed by the
/// next draw of `rng`.
pub fn trial(lattice: &Lattice, source: &ScpSource, mode: &Mode, rng: &mut RandomStream) -> Result<bool> {
    let run = Percolation::new(lattice, source.clone(), mode.clone())?;
    let key = rand::RngCore::next_u64(rng);
    let mut conversion = RandomStream::keyed(key, 0, Channel::Conversion);
    Ok(run.trial_with(rng, &mut conversion, &mut Workspace::default()))
}

/// Annealed spanning probability on all available threads.
pub fn spanning_probability(
    lattice: &Lattice,
    source: ScpSource,
    mode: Mode,
    trials: u64,
    seed: u64,
) -> Result<PercolationEstimate> {
    Percolation::new(lattice, source, mode)?.spanning_probability(trials, seed, rayon::current_num_threads())
}

/// One-parameter SCP families indexed by their mean, used for threshold
/// scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ScpFamily {
    /// Every edge has SCP `μ`.
    Fixed,
    Bernoulli,
    /// Uniform on `[μ − w, μ + w]` with `w = min(half_width, μ, 1 − μ)`.
    Uniform { half_width: f64 },
    /// Beta with `α + β = concentration`.
    Beta { concentration: f64 },
}

impl ScpFamily {
    pub fn at(&self, mean: f64) -> Result<ScpSource> {
        if !(0.0..=1.0).contains(&mean) {
            return Err(Error::InvalidParameter(format!(
                "family mean must lie in [0, 1], got {mean}"
            )));
        }
        Ok(match *self {
            ScpFamily::Fixed => ScpSource::Fixed(mean),
            ScpFamily::Bernoulli => ScpSource::Distribution(ScpDistribution::bernoulli(mean)?),
            ScpFamily::Uniform { half_width } => {
                let w = half_width.min(mean).min(1.0 - mean).max(0.0);
                ScpSource::Distribution(ScpDistribution::uniform_range(mean - w, mean + w)?)
            }
            ScpFamily::Beta { concentration } => {
                if mean <= 0.0 || mean >= 1.0 {
                    ScpSource::Fixed(mean)
                } else {
                    ScpSource::Distribution(ScpDistribution::beta(
                        mean * concentration,
                        (1.0 - mean) * concentration,
                    )?)
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub yerr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub threshold: f64,
    pub ci: (f64, f64),
    /// Every evaluated `(μ, spanning probability)` in evaluation order.
    pub points: Vec<CurvePoint>,
    pub trials_per_point: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionOptions {
    /// Stop once the bracket is narrower than this.
    pub resolution: f64,
    pub max_iterations: usize,
    pub workers: usize,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self {
            resolution: 0.002,
            max_iterations: 20,
            workers: rayon::current_num_threads(),
        }
    }
}

/// Bisection on `μ` for spanning probability 1/2 at fixed lattice size.
pub fn threshold_estimate(
    lattice: &Lattice,
    family: ScpFamily,
    mode: &Mode,
    trials_per_point: u64,
    seed: u64,
    options: BisectionOptions,
) -> Result<ThresholdEstimate> {
    let mut points = Vec::new();
    let mut eval = |mu: f64| -> Result<PercolationEstimate> {
        let point_seed = derive_seed(seed, points.len() as u64);
        let est = Percolation::new(lattice, family.at(mu)?, mode.clone())?
            .spanning_probability(trials_per_point, point_seed, options.workers)?;
        points.push(CurvePoint {
            x: mu,
            y: est.spanning_probability,
            yerr: est.stderr,
        });
        Ok(est)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut p_lo, mut p_hi) = (eval(lo)?, eval(hi)?);
    if p_lo.spanning_probability >= 0.5 || p_hi.spanning_probability < 0.5 {
        return Err(Error::NonBracketing {
            lo,
            hi,
            p_lo: p_lo.spanning_probability,
            p_hi: p_hi.spanning_probability,
        });
    }
    let mut iterations = 0;
    while hi - lo > options.resolution && iterations < options.max_iterations {
        let mid = 0.5 * (lo + hi);
        let est = eval(mid)?;
        if est.spanning_probability < 0.5 {
            lo = mid;
            p_lo = est;
        } else {
            hi = mid;
            p_hi = est;
        }
        iterations += 1;
    }
    let threshold = 0.5 * (lo + hi);
    // Noise at the final bracket, translated to μ through the local slope.
    let slope = (p_hi.spanning_probability - p_lo.spanning_probability) / (hi - lo);
    let noise = 2.0 * p_lo.stderr.max(p_hi.stderr);
    let half = 0.5 * (hi - lo) + if slope > 0.0 { (noise / slope).min(0.5) } else { 0.5 * (hi - lo) };
    Ok(ThresholdEstimate {
        threshold,
        ci: ((threshold - half).max(0.0), (threshold + half).min(1.0)),
        points,
        trials_per_point,
        seed,
    })
}

/// Spanning probabilities over a grid of family means.
pub fn sweep(
    lattice: &Lattice,
    family: ScpFamily,
    mode: &Mode,
    means: &[f64],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<CurvePoint>> {
    means
        .iter()
        .enumerate()
        .map(|(k, &mu)| {
            let est = Percolation::new(lattice, family.at(mu)?, mode.clone())?
                .spanning_probability(trials, derive_seed(seed, k as u64), workers)?;
            Ok(CurvePoint {
                x: mu,
                y: est.spanning_probability,
                yerr: est.stderr,
            })
        })
        .collect()
}

/// Number of open edges among `edges` RCEP conversions with SCPs from `source`.
pub fn conversion_open_count(source: &ScpSource, edges: u64, seed: u64) -> u64 {
    let mut scp_rng = RandomStream::keyed(seed, 0, Channel::Scp);
    let mut conv_rng = RandomStream::keyed(seed, 0, Channel::Conversion);
    (0..edges)
        .filter(|_| conv_rng.uniform() < source.sample(&mut scp_rng))
        .count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostSwapMean {
    pub mean: f64,
    /// Standard error from per-swap-node averages, which are independent.
    pub stderr: f64,
    pub bonds: u64,
    pub swap_nodes: u64,
}

/// Mean SCP of the bonds created by `transform` over `draws` fresh SCP
/// draws on `lattice`.
pub fn post_swap_mean(
    lattice: &Lattice,
    transform: &SwapTransform,
    source: &ScpSource,
    draws: u64,
    seed: u64,
) -> Result<PostSwapMean> {
    if transform.input_edge_count() != lattice.edge_count() {
        return Err(Error::InvalidPlan("transform does not match lattice".into()));
    }
    let (mut sum, mut sum_sq, mut nodes, mut bonds) = (0.0, 0.0, 0u64, 0u64);
    let mut input = Vec::new();
    let mut output = Vec::new();
    for t in 0..draws {
        let mut rng = RandomStream::keyed(seed, t, Channel::Scp);
        input.clear();
        input.extend((0..lattice.edge_count()).map(|_| source.sample(&mut rng)));
        transform.apply_into(&input, &mut output);
        for g in transform.groups() {
            let m = g.iter().map(|&e| output[e]).sum::<f64>() / g.len() as f64;
            sum += m;
            sum_sq += m * m;
            nodes += 1;
            bonds += g.len() as u64;
        }
    }
    if nodes < 2 {
        return Err(Error::InvalidParameter("no swapped bonds; lattice too small".into()));
    }
    let n = nodes as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(PostSwapMean {
        mean,
        stderr: (var / n).sqrt(),
        bonds,
        swap_nodes: nodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyReport {
    pub lattice: String,
    pub distribution: String,
    pub mean: f64,
    pub expected_min: f64,
    /// `Δ/2` from the distribution statistics.
    pub expected_penalty: f64,
    pub post_swap_mean: f64,
    /// Standard error from per-swap-node averages (independent across nodes).
    pub post_swap_stderr: f64,
    pub observed_penalty: f64,
    pub swapped_bonds: u64,
    pub swap_nodes: u64,
    pub rcep: PercolationEstimate,
    pub rqep: PercolationEstimate,
}

/// Measures the mean SCP of the triangular bonds produced by 3-swaps on a
/// double-bond honeycomb of side `size`, and compares RCEP on the honeycomb
/// (two slots per link) with RQEP on the rewired lattice.
pub fn rqep_penalty_experiment(
    size: usize,
    dist: &ScpDistribution,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<PenaltyReport> {
    let lattice = LatticeSpec::new(LatticeKind::Honeycomb, size)
        .double_bonds(true)
        .build()?;
    let transform = honeycomb_to_triangular_transform(&lattice)?;
    let stats = dist.stats()?;
    let source = ScpSource::Distribution(dist.clone());

    let swapped = post_swap_mean(&lattice, &transform, &source, trials, derive_seed(seed, 0x5a))?;

    let rcep = Percolation::new(&lattice, source.clone(), Mode::Rcep)?.spanning_probability(
        trials,
        derive_seed(seed, 1),
        workers,
    )?;
    let rqep = Percolation::new(&lattice, source, Mode::Rqep(Box::new(transform)))?
        .spanning_probability(trials, derive_seed(seed, 2), workers)?;

    Ok(PenaltyReport {
        lattice: lattice.label().to_string(),
        distribution: dist.label(),
        mean: stats.mean,
        expected_min: stats.expected_min,
        expected_penalty: 0.5 * stats.mean_abs_diff,
        post_swap_mean: swapped.mean,
        post_swap_stderr: swapped.stderr,
        observed_penalty: stats.mean - swapped.mean,
        swapped_bonds: swapped.bonds,
        swap_nodes: swapped.swap_nodes,
        rcep,
        rqep,
    })
}
