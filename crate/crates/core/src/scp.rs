//! Edge singlet-conversion-probability (SCP) distributions on `[0, 1]`.
//!
//! For two i.i.d. copies `X₁, X₂` with CDF `F`, the q-swap bond carries
//! `min(X₁, X₂)` and
//!
//! ```text
//! E[min] = ∫₀¹ (1 − F)² dp = μ − Δ/2,      Δ = E|X₁ − X₂| = 2 ∫₀¹ F (1 − F) dp.
//! ```
//!
//! Continuous kinds evaluate these integrals by adaptive quadrature over
//! their support; discrete kinds (Bernoulli, bimodal, empirical) use exact
//! finite sums over the step CDF.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use libm::erfc;

use crate::error::{Error, Result};
use crate::pdl::{scp_of_pdl, PdlModel, PdlSpec};
use crate::quadrature::{integrate, DEFAULT_TOLERANCE};

/// Largest tolerated violation of `E[min] = μ − Δ/2` in [`ScpDistribution::stats`].
pub const IDENTITY_TOLERANCE: f64 = 1e-8;

/// Below this standard deviation a distribution counts as a point mass.
const DEGENERATE_STD: f64 = 1e-12;

/// Serializable description of an SCP distribution,
/// `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum ScpSpec {
    /// Uniform with the given mean and standard deviation
    /// (half-width `√3·std`).
    Uniform { mean: f64, std: f64 },
    /// Gaussian with parent mean/std, truncated to `[0, 1]`.
    TruncatedGaussian { mean: f64, std: f64 },
    /// SCP 1 with probability `mean`, else 0.
    Bernoulli { mean: f64 },
    /// `mean ± std` with probability 1/2 each.
    SymmetricBimodal { mean: f64, std: f64 },
    Beta { alpha: f64, beta: f64 },
    /// Haar-random pure states: Beta(1, 3).
    Haar,
    /// Pushforward of an analytic PDL law through `X(P) = 2 / (1 + 10^{P/10})`.
    PdlInduced { model: PdlSpec },
    /// Step CDF of a sample buffer.
    Empirical { samples: Vec<f64> },
}

impl ScpSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ScpSpec::Uniform { .. } => "uniform",
            ScpSpec::TruncatedGaussian { .. } => "truncated-gaussian",
            ScpSpec::Bernoulli { .. } => "bernoulli",
            ScpSpec::SymmetricBimodal { .. } => "symmetric-bimodal",
            ScpSpec::Beta { .. } => "beta",
            ScpSpec::Haar => "haar",
            ScpSpec::PdlInduced { .. } => "pdl-induced",
            ScpSpec::Empirical { .. } => "empirical",
        }
    }

    /// Short human-readable label, e.g. `uniform(mean=0.5, std=0.1)`.
    pub fn label(&self) -> String {
        match self {
            ScpSpec::Uniform { mean, std } => format!("uniform(mean={mean}, std={std})"),
            ScpSpec::TruncatedGaussian { mean, std } => {
                format!("truncated-gaussian(mean={mean}, std={std})")
            }
            ScpSpec::Bernoulli { mean } => format!("bernoulli(mean={mean})"),
            ScpSpec::SymmetricBimodal { mean, std } => {
                format!("symmetric-bimodal(mean={mean}, std={std})")
            }
            ScpSpec::Beta { alpha, beta } => format!("beta(alpha={alpha}, beta={beta})"),
            ScpSpec::Haar => "haar".to_string(),
            ScpSpec::PdlInduced { model } => format!("pdl-induced({})", model.label()),
            ScpSpec::Empirical { samples } => format!("empirical(n={})", samples.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub mean: f64,
    pub std: f64,
    pub mean_abs_diff: f64,
    pub expected_min: f64,
    /// `(μ − E[min]) / σ`; `None` for point masses and for Bernoulli.
    pub shape_constant: Option<f64>,
    /// `μ − E[min]`, the q-swap penalty relative to classical percolation.
    pub penalty: f64,
}

#[derive(Debug, Clone)]
enum Shape {
    Uniform {
        lo: f64,
        hi: f64,
    },
    TruncatedGaussian {
        mu: f64,
        sigma: f64,
        cdf_lo: f64,
        mass: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
        ln_norm: f64,
        sampler: rand_distr::Beta<f64>,
    },
    Pdl {
        model: PdlModel,
    },
    /// Sorted atoms `(value, probability)` with cumulative probabilities.
    Discrete {
        atoms: Vec<(f64, f64)>,
        cumulative: Vec<f64>,
    },
}

/// An immutable SCP distribution; construct through [`ScpDistribution::new`]
/// or the kind-specific helpers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ScpSpec", into = "ScpSpec")]
pub struct ScpDistribution {
    spec: ScpSpec,
    shape: Shape,
}

impl PartialEq for ScpDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl From<ScpDistribution> for ScpSpec {
    fn from(d: ScpDistribution) -> Self {
        d.spec
    }
}

impl TryFrom<ScpSpec> for ScpDistribution {
    type Error = Error;

    fn try_from(spec: ScpSpec) -> Result<Self> {
        ScpDistribution::new(spec)
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {x}")))
    }
}

fn check_std(std: f64) -> Result<()> {
    if std.is_finite() && std >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("std must be finite and nonnegative, got {std}")))
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn discrete(mut atoms: Vec<(f64, f64)>) -> Shape {
    atoms.retain(|a| a.1 > 0.0);
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (v, p) in atoms {
        match merged.last_mut() {
            Some(last) if last.0 == v => last.1 += p,
            _ => merged.push((v, p)),
        }
    }
    let total: f64 = merged.iter().map(|a| a.1).sum();
    let mut acc = 0.0;
    let cumulative = merged
        .iter_mut()
        .map(|a| {
            a.1 /= total;
            acc += a.1;
            acc
        })
        .collect::<Vec<_>>();
    let mut cumulative = cumulative;
    if let Some(last) = cumulative.last_mut() {
        *last = 1.0;
    }
    Shape::Discrete {
        atoms: merged,
        cumulative,
    }
}

fn point_mass(x: f64) -> Shape {
    discrete(vec![(x, 1.0)])
}

impl ScpDistribution {
    pub fn new(spec: ScpSpec) -> Result<Self> {
        let shape = match &spec {
            &ScpSpec::Uniform { mean, std } => {
                check_unit("mean", mean)?;
                check_std(std)?;
                let half = 3f64.sqrt() * std;
                let (lo, hi) = (mean - half, mean + half);
                if lo < -1e-12 || hi > 1.0 + 1e-12 {
                    return Err(invalid(format!(
                        "uniform support [{lo}, {hi}] leaves [0, 1]"
                    )));
                }
                if std < DEGENERATE_STD {
                    point_mass(mean)
                } else {
                    Shape::Uniform {
                        lo: lo.max(0.0),
                        hi: hi.min(1.0),
                    }
                }
            }
            &ScpSpec::TruncatedGaussian { mean, std } => {
                if !mean.is_finite() {
                    return Err(invalid("gaussian mean must be finite"));
                }
                check_std(std)?;
                if std < DEGENERATE_STD {
                    check_unit("mean", mean)?;
                    point_mass(mean)
                } else {
                    let cdf_lo = std_normal_cdf(-mean / std);
                    let mass = std_normal_cdf((1.0 - mean) / std) - cdf_lo;
                    if mass < 1e-3 {
                        return Err(invalid(format!(
                            "gaussian(mean={mean}, std={std}) has only {mass:e} mass in [0, 1]"
                        )));
                    }
                    Shape::TruncatedGaussian {
                        mu: mean,
                        sigma: std,
                        cdf_lo,
                        mass,
                    }
                }
            }
            &ScpSpec::Bernoulli { mean } => {
                check_unit("mean", mean)?;
                discrete(vec![(0.0, 1.0 - mean), (1.0, mean)])
            }
            &ScpSpec::SymmetricBimodal { mean, std } => {
                check_unit("mean", mean)?;
                check_std(std)?;
                if mean - std < -1e-12 || mean + std > 1.0 + 1e-12 {
                    return Err(invalid(format!(
                        "bimodal atoms {} and {} leave [0, 1]",
                        mean - std,
                        mean + std
                    )));
                }
                discrete(vec![
                    ((mean - std).max(0.0), 0.5),
                    ((mean + std).min(1.0), 0.5),
                ])
            }
            &ScpSpec::Beta { alpha, beta } => beta_shape(alpha, beta)?,
            ScpSpec::Haar => beta_shape(1.0, 3.0)?,
            ScpSpec::PdlInduced { model } => {
                let model = model.build_analytic()?;
                match model.deterministic_pdl() {
                    Some(p) => point_mass(scp_of_pdl(p)),
                    None if model.has_density() => Shape::Pdl { model },
                    None => return Err(Error::SamplerOnly(model.label())),
                }
            }
            ScpSpec::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(invalid("empirical distribution needs at least one sample"));
                }
                for &s in samples {
                    check_unit("sample", s)?;
                }
                discrete(samples.iter().map(|&s| (s, 1.0)).collect())
            }
        };
        Ok(Self { spec, shape })
    }

    pub fn uniform(mean: f64, std: f64) -> Result<Self> {
        Self::new(ScpSpec::Uniform { mean, std })
    }

    /// Uniform on `[lo, hi]`.
    pub fn uniform_range(lo: f64, hi: f64) -> Result<Self> {
        Self::uniform(0.5 * (lo + hi), (hi - lo) / 12f64.sqrt())
    }

    pub fn truncated_gaussian(mean: f64, std: f64) -> Result<Self> {
        Self::new(ScpSpec::TruncatedGaussian { mean, std })
    }

    pub fn bernoulli(mean: f64) -> Result<Self> {
        Self::new(ScpSpec::Bernoulli { mean })
    }

    pub fn symmetric_bimodal(mean: f64, std: f64) -> Result<Self> {
        Self::new(ScpSpec::SymmetricBimodal { mean, std })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(ScpSpec::Beta { alpha, beta })
    }

    pub fn haar() -> Self {
        Self::new(ScpSpec::Haar).expect("Beta(1, 3) is valid")
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Self::new(ScpSpec::Empirical { samples })
    }

    /// Degenerate distribution at `x`, stored as a one-sample empirical law.
    pub fn point_mass(x: f64) -> Result<Self> {
        Self::empirical(vec![x])
    }

    pub fn pdl_induced(model: PdlSpec) -> Result<Self> {
        Self::new(ScpSpec::PdlInduced { model })
    }

    pub fn spec(&self) -> &ScpSpec {
        &self.spec
    }

    pub fn kind(&self) -> &'static str {
        self.spec.kind()
    }

    pub fn label(&self) -> String {
        self.spec.label()
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.shape, Shape::Discrete { .. })
    }

    /// Whether the family is of location-scale type on its support.
    pub fn is_location_scale(&self) -> bool {
        matches!(
            self.spec,
            ScpSpec::Uniform { .. } | ScpSpec::TruncatedGaussian { .. } | ScpSpec::SymmetricBimodal { .. }
        )
    }

    /// Smallest interval outside which `F` is constant.
    pub fn support(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Uniform { lo, hi } => (*lo, *hi),
            Shape::TruncatedGaussian { .. } | Shape::Beta { .. } | Shape::Pdl { .. } => (0.0, 1.0),
            Shape::Discrete { atoms, .. } => (atoms[0].0, atoms[atoms.len() - 1].0),
        }
    }

    /// Parent-Gaussian mass outside `[0, 1]`; zero for other kinds.
    pub fn untruncated_tail_mass(&self) -> f64 {
        match self.shape {
            Shape::TruncatedGaussian { mass, .. } => 1.0 - mass,
            _ => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.shape {
            Shape::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Shape::TruncatedGaussian { mu, sigma, .. } => loop {
                let z: f64 = StandardNormal.sample(rng);
                let x = mu + sigma * z;
                if (0.0..=1.0).contains(&x) {
                    break x;
                }
            },
            Shape::Beta { sampler, .. } => sampler.sample(rng),
            Shape::Pdl { model } => scp_of_pdl(model.sample(rng)),
            Shape::Discrete { atoms, cumulative } => {
                let u: f64 = rng.random();
                let k = cumulative.partition_point(|&c| c <= u);
                atoms[k.min(atoms.len() - 1)].0
            }
        }
    }

    /// Right-continuous CDF; 0 below 0 and 1 from 1 on.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match &self.shape {
            Shape::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Shape::TruncatedGaussian {
                mu,
                sigma,
                cdf_lo,
                mass,
            } => ((std_normal_cdf((x - mu) / sigma) - cdf_lo) / mass).clamp(0.0, 1.0),
            Shape::Beta { alpha, beta, .. } => {
                if x <= 0.0 {
                    0.0
                } else {
                    beta_reg(*alpha, *beta, x)
                }
            }
            Shape::Pdl { model } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let p = crate::pdl::pdl_of_scp(x);
                    1.0 - model.pdl_cdf(p).expect("analytic model")
                }
            }
            Shape::Discrete { atoms, cumulative } => {
                let k = atoms.partition_point(|a| a.0 <= x);
                if k == 0 {
                    0.0
                } else {
                    cumulative[k - 1]
                }
            }
        }
    }

    /// Density for continuous kinds, `None` for discrete ones.
    pub fn density(&self, x: f64) -> Option<f64> {
        let inside = x > 0.0 && x < 1.0;
        match &self.shape {
            Shape::Uniform { lo, hi } => Some(if x >= *lo && x <= *hi {
                1.0 / (hi - lo)
            } else {
                0.0
            }),
            Shape::TruncatedGaussian {
                mu, sigma, mass, ..
            } => Some(if (0.0..=1.0).contains(&x) {
                std_normal_pdf((x - mu) / sigma) / (sigma * mass)
            } else {
                0.0
            }),
            Shape::Beta {
                alpha,
                beta,
                ln_norm,
                ..
            } => Some(if inside {
                ((alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_norm).exp()
            } else {
                0.0
            }),
            Shape::Pdl { model } => Some(if inside {
                crate::pdl::induced_density_with(|p| model.pdl_density(p).unwrap_or(0.0), x)
            } else {
                0.0
            }),
            Shape::Discrete { .. } => None,
        }
    }

    /// Atoms `(value, probability)` of a discrete distribution.
    pub fn atoms(&self) -> Option<&[(f64, f64)]> {
        match &self.shape {
            Shape::Discrete { atoms, .. } => Some(atoms),
            _ => None,
        }
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(self.order_statistics()?.mean)
    }

    pub fn std(&self) -> Result<f64> {
        match &self.shape {
            Shape::Uniform { lo, hi } => Ok((hi - lo) / 12f64.sqrt()),
            Shape::TruncatedGaussian {
                mu, sigma, mass, ..
            } => {
                let a = -mu / sigma;
                let b = (1.0 - mu) / sigma;
                let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));
                let shift = (pa - pb) / mass;
                let var = sigma * sigma * (1.0 + (a * pa - b * pb) / mass - shift * shift);
                Ok(var.max(0.0).sqrt())
            }
            Shape::Beta { alpha, beta, .. } => {
                let s = alpha + beta;
                Ok((alpha * beta / (s * s * (s + 1.0))).sqrt())
            }
            Shape::Pdl { .. } => {
                let mean = self.mean()?;
                let (lo, hi) = self.support();
                let second = lo * lo
                    + integrate(|x| 2.0 * x * (1.0 - self.cdf(x)), lo, hi, DEFAULT_TOLERANCE)?
                        .value;
                Ok((second - mean * mean).max(0.0).sqrt())
            }
            Shape::Discrete { atoms, .. } => {
                let mean: f64 = atoms.iter().map(|(v, p)| v * p).sum();
                let var: f64 = atoms.iter().map(|(v, p)| p * (v - mean).powi(2)).sum();
                Ok(var.sqrt())
            }
        }
    }

    /// `E[min(X₁, X₂)] = ∫₀¹ (1 − F)²`.
    pub fn expected_min(&self) -> Result<f64> {
        Ok(self.order_statistics()?.expected_min)
    }

    /// `Δ = E|X₁ − X₂| = 2 ∫₀¹ F (1 − F)`.
    pub fn mean_abs_diff(&self) -> Result<f64> {
        Ok(self.order_statistics()?.mean_abs_diff)
    }

    /// `C = (μ − E[min]) / σ`. `None` when `σ = 0` or for Bernoulli.
    pub fn shape_constant(&self) -> Result<Option<f64>> {
        Ok(self.stats()?.shape_constant)
    }

    pub fn stats(&self) -> Result<DistributionStats> {
        let o = self.order_statistics()?;
        let std = self.std()?;
        let gap = (o.expected_min - (o.mean - 0.5 * o.mean_abs_diff)).abs();
        if gap > IDENTITY_TOLERANCE {
            return Err(Error::IdentityViolation(gap));
        }
        let degenerate = std < DEGENERATE_STD;
        let penalty = if degenerate { 0.0 } else { o.mean - o.expected_min };
        let shape_constant = if degenerate || matches!(self.spec, ScpSpec::Bernoulli { .. }) {
            None
        } else {
            Some(penalty / std)
        };
        Ok(DistributionStats {
            mean: o.mean,
            std,
            mean_abs_diff: o.mean_abs_diff,
            expected_min: o.expected_min,
            shape_constant,
            penalty,
        })
    }

    fn order_statistics(&self) -> Result<OrderStats> {
        match &self.shape {
            Shape::Discrete { atoms, cumulative } => Ok(discrete_order_stats(atoms, cumulative)),
            _ => {
                let (lo, hi) = self.support();
                let tol = DEFAULT_TOLERANCE;
                // Below the support F = 0: survival 1 contributes `lo` to
                // both the mean and E[min]; above it everything vanishes.
                let mean = lo + integrate(|x| 1.0 - self.cdf(x), lo, hi, tol)?.value;
                let expected_min = lo
                    + integrate(
                        |x| {
                            let s = 1.0 - self.cdf(x);
                            s * s
                        },
                        lo,
                        hi,
                        tol,
                    )?
                    .value;
                let mean_abs_diff = 2.0
                    * integrate(
                        |x| {
                            let f = self.cdf(x);
                            f * (1.0 - f)
                        },
                        lo,
                        hi,
                        tol,
                    )?
                    .value;
                Ok(OrderStats {
                    mean,
                    expected_min,
                    mean_abs_diff,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct OrderStats {
    mean: f64,
    expected_min: f64,
    mean_abs_diff: f64,
}

fn discrete_order_stats(atoms: &[(f64, f64)], cumulative: &[f64]) -> OrderStats {
    let base = atoms[0].0;
    let (mut mean, mut expected_min, mut half_delta) = (base, base, 0.0);
    for k in 0..atoms.len() - 1 {
        let gap = atoms[k + 1].0 - atoms[k].0;
        let f = cumulative[k];
        let s = 1.0 - f;
        mean += gap * s;
        expected_min += gap * s * s;
        half_delta += gap * f * s;
    }
    OrderStats {
        mean,
        expected_min,
        mean_abs_diff: 2.0 * half_delta,
    }
}

fn beta_shape(alpha: f64, beta: f64) -> Result<Shape> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(invalid(format!(
            "beta parameters must be positive, got ({alpha}, {beta})"
        )));
    }
    let sampler = rand_distr::Beta::new(alpha, beta)
        .map_err(|e| invalid(format!("beta({alpha}, {beta}): {e}")))?;
    Ok(Shape::Beta {
        alpha,
        beta,
        ln_norm: ln_beta(alpha, beta),
        sampler,
    })
}

/// Closed form of `E[min]` for Beta(α, β):
/// `α/(α+β) − 2 B(2α, 2β) / ((α+β) B(α, β)²)`, evaluated in log space.
pub fn beta_expected_min(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(invalid(format!(
            "beta parameters must be positive, got ({alpha}, {beta})"
        )));
    }
    let s = alpha + beta;
    let penalty = 2.0 * (ln_beta(2.0 * alpha, 2.0 * beta) - 2.0 * ln_beta(alpha, beta)).exp() / s;
    Ok(alpha / s - penalty)
}

/// Closed-form shape constant of Beta(α, β):
/// `2 √(α+β+1) B(2α, 2β) / (B(α, β)² √(αβ))`.
pub fn beta_shape_constant(alpha: f64, beta: f64) -> f64 {
    2.0 * (alpha + beta + 1.0).sqrt()
        * (ln_beta(2.0 * alpha, 2.0 * beta) - 2.0 * ln_beta(alpha, beta)).exp()
        / (alpha * beta).sqrt()
}

/// Shape constants of the location-scale families.
pub mod shape_constants {
    pub const UNIFORM: f64 = 0.577_350_269_189_625_8; // 1/√3
    pub const GAUSSIAN: f64 = 0.564_189_583_547_756_3; // 1/√π
    pub const SYMMETRIC_BIMODAL: f64 = 0.5;
}
