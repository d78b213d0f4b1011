//! Polarization-dependent loss (PDL) channels.
//!
//! A PDL of `P` dB between the two polarization modes turns a Bell pair into
//! a state with singlet-conversion probability
//!
//! ```text
//! X(P) = 2 / (1 + 10^{P/10}),        P(X) = 10 log₁₀((2 − X) / X),
//! ```
//!
//! so any law `f_P` pushes forward to an SCP density
//! `f_X(x) = f_P(P(x)) · 20 / (ln 10 · x (2 − x))`.
//!
//! Three PDL models are provided: a Maxwellian law in dB, a fixed list of
//! concatenated diattenuators with Haar-random polarization coupling, and a
//! chain of many identical weak elements calibrated to a target mean.

use std::f64::consts::{LN_10, PI};
use std::ops::Mul;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erf;

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::rng::{Channel, RandomStream};

/// `d(dB)/d(ln ratio)` for intensity ratios.
const DB_PER_NEPER: f64 = 10.0 / LN_10;

/// Samples drawn per parallel chunk; each chunk owns a keyed stream.
const CHUNK: usize = 1 << 14;

/// SCP of a channel with `pdl_db` dB of PDL. Unchecked; see [`scp_from_pdl`].
#[inline]
pub fn scp_of_pdl(pdl_db: f64) -> f64 {
    2.0 / (1.0 + (pdl_db / DB_PER_NEPER).exp())
}

/// PDL in dB that produces SCP `x`. Unchecked; see [`pdl_from_scp`].
#[inline]
pub fn pdl_of_scp(x: f64) -> f64 {
    DB_PER_NEPER * (2.0 * (1.0 - x) / x).ln_1p()
}

pub fn scp_from_pdl(pdl_db: f64) -> Result<f64> {
    if !(pdl_db >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "PDL must be nonnegative, got {pdl_db}"
        )));
    }
    Ok(scp_of_pdl(pdl_db))
}

pub fn pdl_from_scp(x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "SCP must lie in (0, 1], got {x}"
        )));
    }
    Ok(pdl_of_scp(x))
}

/// `f_X(x)` for a PDL density `pdl_density`, without domain checks.
pub fn induced_density_with<F: Fn(f64) -> f64>(pdl_density: F, x: f64) -> f64 {
    pdl_density(pdl_of_scp(x)) * 2.0 * DB_PER_NEPER / (x * (2.0 - x))
}

/// Induced SCP density of `model` at `x ∈ (0, 1)`.
pub fn induced_scp_density(model: &PdlModel, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "SCP density is defined on (0, 1), got {x}"
        )));
    }
    let f = model.pdl_density(pdl_of_scp(x))?;
    Ok(f * 2.0 * DB_PER_NEPER / (x * (2.0 - x)))
}

/// First-order estimate `1 − (ln 10 / 20)·E[P]`, clamped to `[0, 1]`.
pub fn weak_pdl_mean_approx(mean_pdl_db: f64) -> Result<f64> {
    if !(mean_pdl_db >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean PDL must be nonnegative, got {mean_pdl_db}"
        )));
    }
    Ok((1.0 - LN_10 / 20.0 * mean_pdl_db).clamp(0.0, 1.0))
}

// Maxwellian law of the PDL magnitude, in dB.

/// Scale `a` of the Maxwellian with mean `mean_db`.
pub fn maxwellian_scale_for_mean(mean_db: f64) -> f64 {
    mean_db * (PI / 2.0).sqrt() / 2.0
}

pub fn maxwellian_mean(scale_db: f64) -> f64 {
    2.0 * scale_db * (2.0 / PI).sqrt()
}

/// `√(2/π) P² exp(−P²/2a²) / a³`.
pub fn maxwellian_density(scale_db: f64, pdl_db: f64) -> Result<f64> {
    if !(scale_db > 0.0 && scale_db.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Maxwellian scale must be positive, got {scale_db}"
        )));
    }
    if !(pdl_db >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "PDL must be nonnegative, got {pdl_db}"
        )));
    }
    Ok(maxwell_pdf(scale_db, pdl_db))
}

fn maxwell_pdf(a: f64, p: f64) -> f64 {
    let r = p / a;
    (2.0 / PI).sqrt() * r * r * (-0.5 * r * r).exp() / a
}

fn maxwell_cdf(a: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    let r = p / a;
    (erf(r / 2f64.sqrt()) - (2.0 / PI).sqrt() * r * (-0.5 * r * r).exp()).clamp(0.0, 1.0)
}

// Jones calculus.

/// 2×2 complex amplitude transfer matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub [[Complex64; 2]; 2]);

impl JonesMatrix {
    pub const IDENTITY: JonesMatrix = JonesMatrix([
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ]);

    /// Diattenuator with amplitude transmissions `1` and `10^{−ρ/20}`.
    pub fn diattenuator(pdl_db: f64) -> Self {
        let t = 10f64.powf(-pdl_db / 20.0);
        JonesMatrix([
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(t, 0.0)],
        ])
    }

    /// Real rotation of the polarization basis by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        JonesMatrix([
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    /// Haar-random unitary: Gram–Schmidt on a complex Gaussian matrix.
    pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut g = || {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        };
        let (a0, a1, b0, b1) = (g(), g(), g(), g());
        let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        let (u0, u1) = (a0 / n, a1 / n);
        let proj = u0.conj() * b0 + u1.conj() * b1;
        let (w0, w1) = (b0 - proj * u0, b1 - proj * u1);
        let m = (w0.norm_sqr() + w1.norm_sqr()).sqrt();
        JonesMatrix([[u0, w0 / m], [u1, w1 / m]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        JonesMatrix([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn determinant(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Largest entry of `|M†M − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint() * *self;
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p.0[i][j] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Squared singular values `(s₁², s₂²)`, `s₁ ≥ s₂`.
    pub fn intensity_transmissions(&self) -> (f64, f64) {
        let m = &self.0;
        let p = m[0][0].norm_sqr() + m[0][1].norm_sqr();
        let q = m[1][0].norm_sqr() + m[1][1].norm_sqr();
        let r = m[0][0] * m[1][0].conj() + m[0][1] * m[1][1].conj();
        let gap = ((p - q) * (p - q) + 4.0 * r.norm_sqr()).sqrt();
        let s1 = 0.5 * (p + q + gap);
        let s2 = if s1 > 0.0 {
            self.determinant().norm_sqr() / s1
        } else {
            0.0
        };
        (s1, s2)
    }

    pub fn singular_values(&self) -> (f64, f64) {
        let (a, b) = self.intensity_transmissions();
        (a.sqrt(), b.sqrt())
    }

    /// `10 log₁₀(η₁/η₂) = 20 log₁₀(s₁/s₂)`.
    pub fn pdl_db(&self) -> f64 {
        let (e1, e2) = self.intensity_transmissions();
        10.0 * (e1 / e2).log10()
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        let (a, b) = (&self.0, &rhs.0);
        let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        JonesMatrix(c)
    }
}

fn check_elements(elements: &[f64]) -> Result<()> {
    match elements.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        Some(bad) => Err(Error::InvalidParameter(format!(
            "element PDL must be finite and nonnegative, got {bad}"
        ))),
        None => Ok(()),
    }
}

/// Total PDL of `D_N U_N ⋯ D_1 U_1` with the given couplings `U_i`.
pub fn jones_concatenation(elements_db: &[f64], couplings: &[JonesMatrix]) -> Result<f64> {
    check_elements(elements_db)?;
    if couplings.len() != elements_db.len() {
        return Err(Error::InvalidParameter(format!(
            "{} couplings for {} elements",
            couplings.len(),
            elements_db.len()
        )));
    }
    let total = elements_db
        .iter()
        .zip(couplings)
        .fold(JonesMatrix::IDENTITY, |t, (&rho, u)| {
            JonesMatrix::diattenuator(rho) * (*u * t)
        });
    Ok(total.pdl_db())
}

/// One draw of the accumulated PDL with Haar-random coupling before every
/// element.
pub fn jones_concatenation_sample<R: Rng + ?Sized>(elements_db: &[f64], rng: &mut R) -> Result<f64> {
    check_elements(elements_db)?;
    Ok(concatenate_random(elements_db.iter().copied(), rng))
}

fn concatenate_random<R: Rng + ?Sized, I: Iterator<Item = f64>>(elements: I, rng: &mut R) -> f64 {
    let mut t = JonesMatrix::IDENTITY;
    for rho in elements {
        let u = JonesMatrix::haar_unitary(rng);
        t = u * t;
        // Diagonal diattenuator: scale the second row.
        let amp = 10f64.powf(-rho / 20.0);
        t.0[1][0] *= amp;
        t.0[1][1] *= amp;
    }
    t.pdl_db()
}

// Models.

/// Config form of a PDL model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PdlSpec {
    Maxwellian { mean_db: f64 },
    ConcatenatedLink { elements_db: Vec<f64> },
    WeakElementChain { mean_db: f64, n: usize },
}

impl PdlSpec {
    pub fn label(&self) -> String {
        match self {
            PdlSpec::Maxwellian { mean_db } => format!("maxwellian(mean_db={mean_db})"),
            PdlSpec::ConcatenatedLink { elements_db } => {
                format!("concatenated-link(elements_db={elements_db:?})")
            }
            PdlSpec::WeakElementChain { mean_db, n } => {
                format!("weak-element-chain(mean_db={mean_db}, n={n})")
            }
        }
    }

    /// Resolves the model, calibrating weak-element chains with `seed`.
    pub fn build(&self, seed: u64) -> Result<PdlModel> {
        match self {
            PdlSpec::WeakElementChain { mean_db, n } => weak_element_chain(*mean_db, *n, seed),
            _ => self.build_analytic(),
        }
    }

    /// Resolves models that need no calibration.
    pub fn build_analytic(&self) -> Result<PdlModel> {
        match self {
            &PdlSpec::Maxwellian { mean_db } => PdlModel::maxwellian(mean_db),
            PdlSpec::ConcatenatedLink { elements_db } => {
                PdlModel::concatenated_link(elements_db.clone())
            }
            &PdlSpec::WeakElementChain { mean_db, n } if n == 1 => {
                weak_element_chain(mean_db, 1, 0)
            }
            other => Err(Error::SamplerOnly(format!(
                "{} needs calibration; use PdlSpec::build",
                other.label()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PdlModel {
    Maxwellian {
        scale_db: f64,
    },
    ConcatenatedLink {
        elements_db: Vec<f64>,
    },
    WeakElementChain {
        target_mean_db: f64,
        n: usize,
        element_db: f64,
    },
}

impl PdlModel {
    /// Maxwellian matched to mean `mean_db`: `a = ⟨P⟩ √(π/2) / 2`.
    pub fn maxwellian(mean_db: f64) -> Result<Self> {
        if !(mean_db > 0.0 && mean_db.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Maxwellian mean must be positive, got {mean_db}"
            )));
        }
        Ok(PdlModel::Maxwellian {
            scale_db: maxwellian_scale_for_mean(mean_db),
        })
    }

    pub fn concatenated_link(elements_db: Vec<f64>) -> Result<Self> {
        check_elements(&elements_db)?;
        Ok(PdlModel::ConcatenatedLink { elements_db })
    }

    pub fn spec(&self) -> PdlSpec {
        match self {
            &PdlModel::Maxwellian { scale_db } => PdlSpec::Maxwellian {
                mean_db: maxwellian_mean(scale_db),
            },
            PdlModel::ConcatenatedLink { elements_db } => PdlSpec::ConcatenatedLink {
                elements_db: elements_db.clone(),
            },
            &PdlModel::WeakElementChain {
                target_mean_db, n, ..
            } => PdlSpec::WeakElementChain {
                mean_db: target_mean_db,
                n,
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            PdlModel::WeakElementChain { n, element_db, .. } => {
                format!("{} [element_db={element_db:.6}, n={n}]", self.spec().label())
            }
            _ => self.spec().label(),
        }
    }

    /// Fixed PDL value for deterministic models.
    pub fn deterministic_pdl(&self) -> Option<f64> {
        match self {
            PdlModel::Maxwellian { .. } => None,
            PdlModel::ConcatenatedLink { elements_db } => match elements_db.len() {
                0 => Some(0.0),
                1 => Some(elements_db[0]),
                _ => None,
            },
            PdlModel::WeakElementChain { n, element_db, .. } => match n {
                0 => Some(0.0),
                1 => Some(*element_db),
                _ => None,
            },
        }
    }

    pub fn has_density(&self) -> bool {
        matches!(self, PdlModel::Maxwellian { .. })
    }

    /// `f_P(p)`; only the Maxwellian model has one.
    pub fn pdl_density(&self, p: f64) -> Result<f64> {
        match self {
            &PdlModel::Maxwellian { scale_db } => maxwellian_density(scale_db, p),
            _ => Err(Error::SamplerOnly(self.label())),
        }
    }

    /// `F_P(p)` for the Maxwellian and deterministic models.
    pub fn pdl_cdf(&self, p: f64) -> Option<f64> {
        match self {
            &PdlModel::Maxwellian { scale_db } => Some(maxwell_cdf(scale_db, p)),
            _ => self
                .deterministic_pdl()
                .map(|p0| if p >= p0 { 1.0 } else { 0.0 }),
        }
    }

    /// Analytic mean PDL where available.
    pub fn mean_pdl(&self) -> Option<f64> {
        match self {
            &PdlModel::Maxwellian { scale_db } => Some(maxwellian_mean(scale_db)),
            _ => self.deterministic_pdl(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            &PdlModel::Maxwellian { scale_db } => {
                let (x, y, z): (f64, f64, f64) = (
                    StandardNormal.sample(rng),
                    StandardNormal.sample(rng),
                    StandardNormal.sample(rng),
                );
                scale_db * (x * x + y * y + z * z).sqrt()
            }
            PdlModel::ConcatenatedLink { elements_db } => {
                concatenate_random(elements_db.iter().copied(), rng)
            }
            &PdlModel::WeakElementChain { n, element_db, .. } => {
                if n == 1 {
                    element_db
                } else {
                    concatenate_random(std::iter::repeat_n(element_db, n), rng)
                }
            }
        }
    }
}

/// Draws `n` PDL values in parallel chunks; the result depends only on
/// `(model, n, seed)`.
pub fn sample_pdl(model: &PdlModel, n: usize, seed: u64) -> Vec<f64> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = RandomStream::keyed(seed, c as u64, Channel::Aux);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| model.sample(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// SCP samples `X(P)` for `n` PDL draws.
pub fn sample_scp(model: &PdlModel, n: usize, seed: u64) -> Vec<f64> {
    let mut v = sample_pdl(model, n, seed);
    v.iter_mut().for_each(|p| *p = scp_of_pdl(*p));
    v
}

/// Chain of `n` identical elements whose accumulated mean PDL is
/// `target_mean_db`. The element PDL is found by the fixed point
/// `ρ ← ρ · target / E[P](ρ)` on a Monte Carlo mean with common random
/// numbers, to 0.5 % relative tolerance.
pub fn weak_element_chain(target_mean_db: f64, n: usize, seed: u64) -> Result<PdlModel> {
    if !(target_mean_db > 0.0 && target_mean_db.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "target mean must be positive, got {target_mean_db}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("chain needs at least one element".into()));
    }
    if n == 1 {
        return Ok(PdlModel::WeakElementChain {
            target_mean_db,
            n,
            element_db: target_mean_db,
        });
    }
    const SAMPLES: usize = 40_000;
    const MAX_ITERATIONS: usize = 30;
    const RELATIVE_TOLERANCE: f64 = 0.005;

    // Random-walk estimate of the accumulated PDL vector: E|Σ| ≈ ρ √(8n/3π).
    let mut element_db = target_mean_db / (8.0 * n as f64 / (3.0 * PI)).sqrt();
    let mut relative_error = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let model = PdlModel::WeakElementChain {
            target_mean_db,
            n,
            element_db,
        };
        let samples = sample_pdl(&model, SAMPLES, seed);
        let mean = samples.iter().sum::<f64>() / SAMPLES as f64;
        relative_error = mean / target_mean_db - 1.0;
        if relative_error.abs() < RELATIVE_TOLERANCE {
            return Ok(model);
        }
        element_db *= target_mean_db / mean;
    }
    Err(Error::Calibration {
        iterations: MAX_ITERATIONS,
        relative_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanMethod {
    Exact,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanScp {
    pub mean: f64,
    /// Quadrature error bound or Monte Carlo standard error.
    pub stderr: f64,
    pub method: MeanMethod,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0,
            tolerance: 1e-10,
        }
    }
}

impl MeanScp {
    /// Sample mean with standard error `s/√N`.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        MeanScp {
            mean,
            stderr: (var / n).sqrt(),
            method: MeanMethod::MonteCarlo,
            samples: xs.len(),
        }
    }
}

/// Average SCP `E[X(P)]` of a PDL model.
pub fn mean_scp(model: &PdlModel, budget: &Budget) -> Result<MeanScp> {
    if let Some(p) = model.deterministic_pdl() {
        return Ok(MeanScp {
            mean: scp_of_pdl(p),
            stderr: 0.0,
            method: MeanMethod::Exact,
            samples: 0,
        });
    }
    match model {
        &PdlModel::Maxwellian { scale_db } => {
            let r = integrate(
                |p| maxwell_pdf(scale_db, p) * scp_of_pdl(p),
                0.0,
                40.0 * scale_db,
                budget.tolerance,
            )?;
            Ok(MeanScp {
                mean: r.value,
                stderr: r.error,
                method: MeanMethod::Quadrature,
                samples: 0,
            })
        }
        _ => {
            if budget.samples < 2 {
                return Err(Error::InvalidParameter(
                    "Monte Carlo mean needs at least two samples".into(),
                ));
            }
            Ok(MeanScp::from_samples(&sample_scp(model, budget.samples, budget.seed)))
        }
    }
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Gaussian kernel density estimate of `samples` at `points`, reflected at
/// the domain bounds `[lo, hi]`. Samples are pre-binned so the cost is
/// independent of the sample count.
pub fn kde_reflected(samples: &[f64], points: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    const BINS: usize = 4096;
    let n = samples.len() as f64;
    if samples.is_empty() || hi <= lo {
        return vec![0.0; points.len()];
    }
    let mean = samples.iter().sum::<f64>() / n;
    let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let width = (hi - lo) / BINS as f64;
    let bandwidth = (1.06 * std * n.powf(-0.2)).max(2.0 * width);
    let mut counts = vec![0u64; BINS];
    for &s in samples {
        let b = (((s - lo) / width) as isize).clamp(0, BINS as isize - 1) as usize;
        counts[b] += 1;
    }
    let norm = 1.0 / (n * bandwidth * (2.0 * PI).sqrt());
    points
        .iter()
        .map(|&x| {
            let mut acc = 0.0;
            for (b, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let center = lo + (b as f64 + 0.5) * width;
                for image in [center, 2.0 * lo - center, 2.0 * hi - center] {
                    let z = (x - image) / bandwidth;
                    if z.abs() < 8.0 {
                        acc += c as f64 * (-0.5 * z * z).exp();
                    }
                }
            }
            acc * norm
        })
        .collect()
}
