//! The effective scalar channel and the state evolution (SE) recursions.
//!
//! After decoupling, a section is observed through `Y = √m·S + Z` with `S`
//! one-hot, `Z` standard normal, and precision `m(E) = 1/Σ(E)² =
//! B·snr·ℛ(−snr·E)`. `T(E)` is the posterior-mean MSE of that channel.
//! By symmetry the sent symbol is placed at index 0, so the posterior is a
//! softmax of the exponents `0, √m(Z_j − Z_0) − m` (`j ≥ 1`).

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::free_probability::{Ensemble, SpectralModel};
use crate::math::softmax_in_place;
use crate::mc::{Estimate, GaussianBatch};
use crate::rng::{derive_seed, purpose};

/// `[squared error, ln Σ exp, symbol error]` of one section at precision `m`.
fn section_stats(z: &[f64], m: f64, buf: &mut [f64]) -> [f64; 3] {
    if m == f64::INFINITY {
        return [0.0, 0.0, 0.0];
    }
    let s = m.sqrt();
    buf[0] = 0.0;
    let mut wrong = 0.0;
    for j in 1..z.len() {
        buf[j] = s * (z[j] - z[0]) - m;
        if buf[j] > 0.0 {
            wrong = 1.0;
        }
    }
    let lse = softmax_in_place(buf);
    let mut se = (buf[0] - 1.0) * (buf[0] - 1.0);
    for p in &buf[1..] {
        se += p * p;
    }
    [se, lse, wrong]
}

/// The one-hot gaussian channel evaluated on a frozen noise batch.
#[derive(Debug, Clone)]
pub struct ScalarChannel {
    batch: Arc<GaussianBatch>,
}

impl ScalarChannel {
    pub fn new(batch: Arc<GaussianBatch>) -> Self {
        Self { batch }
    }

    pub fn section_size(&self) -> usize {
        self.batch.dim()
    }

    pub fn batch(&self) -> &Arc<GaussianBatch> {
        &self.batch
    }

    /// MSE of the posterior mean, `ln`-normalizer `E ln(1 + Σ e_j)` and the
    /// probability that the hard decision misses, all at precision `m`.
    pub fn statistics(&self, m: f64) -> [Estimate; 3] {
        let b = self.section_size() as f64;
        if m == 0.0 {
            return [
                Estimate::exact(1.0 - 1.0 / b),
                Estimate::exact(b.ln()),
                Estimate::exact(1.0 - 1.0 / b),
            ];
        }
        self.batch.estimate_multi(|z, buf| section_stats(z, m, buf))
    }

    pub fn mmse(&self, m: f64) -> Estimate {
        self.batch.estimate(|z, buf| section_stats(z, m, buf)[0])
    }

    /// `E ln(1 + Σ_{j≥1} exp(√m(Z_j − Z_0) − m))`.
    pub fn entropy(&self, m: f64) -> Estimate {
        if m == 0.0 {
            return Estimate::exact((self.section_size() as f64).ln());
        }
        self.batch.estimate(|z, buf| section_stats(z, m, buf)[1])
    }

    /// Paired estimate of `entropy(m_a) − entropy(m_b)` on the same samples.
    pub fn entropy_difference(&self, m_a: f64, m_b: f64) -> Estimate {
        self.batch
            .estimate(|z, buf| section_stats(z, m_a, buf)[1] - section_stats(z, m_b, buf)[1])
    }

    pub fn section_error(&self, m: f64) -> Estimate {
        self.batch.estimate(|z, buf| section_stats(z, m, buf)[2])
    }
}

/// Parameters of the asymptotic analysis at one rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SeParams {
    pub section_size: usize,
    pub snr: f64,
    pub rate: f64,
    pub ensemble: Ensemble,
    pub mc_samples: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl SeParams {
    pub fn new(section_size: usize, snr: f64, rate: f64, ensemble: Ensemble) -> Self {
        Self {
            section_size,
            snr,
            rate,
            ensemble,
            mc_samples: 100_000,
            seed: 0,
            max_iter: 200,
            tol: 1e-10,
        }
    }

    /// `α = log₂B/(R·B)`.
    pub fn alpha(&self) -> f64 {
        let b = self.section_size as f64;
        b.log2() / (self.rate * b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.section_size < 2 {
            return Err(Error::InvalidParams(alloc::format!(
                "B must be at least 2, got {}",
                self.section_size
            )));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return Err(domain("snr", self.snr, "(0, inf)"));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(domain("R", self.rate, "(0, inf)"));
        }
        let a = self.alpha();
        if !(a > 0.0 && a <= 1.0) {
            return Err(domain("alpha", a, "(0, 1]"));
        }
        if self.mc_samples < 1000 {
            return Err(Error::InvalidParams(alloc::format!(
                "mc_samples must be at least 1000, got {}",
                self.mc_samples
            )));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidParams("max_iter >= 1 and tol > 0 required".into()));
        }
        Ok(())
    }

    /// The noise batch these parameters ask for.
    pub fn batch(&self) -> Arc<GaussianBatch> {
        Arc::new(GaussianBatch::new(
            self.section_size,
            self.mc_samples,
            derive_seed(self.seed, purpose::MONTE_CARLO),
        ))
    }
}

/// SE iterates `E⁽⁰⁾, E⁽¹⁾, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeTrajectory {
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub converged: bool,
    pub fixed_point: f64,
}

/// Per-iteration prediction for the VAMP decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct VampSeTrajectory {
    /// Predicted MSE per section of the denoiser output at each iteration.
    pub mse: Vec<Estimate>,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
}

/// A zero of `T(E) − E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub energy: f64,
    /// `T − E` changes sign from positive to negative (a maximum of the
    /// potential).
    pub stable: bool,
}

const GAMMA_MIN: f64 = 1e-11;
const GAMMA_MAX: f64 = 1e11;

/// SE machinery for one `(B, snr, R, ensemble)`.
#[derive(Debug, Clone)]
pub struct StateEvolution {
    params: SeParams,
    model: SpectralModel,
    channel: ScalarChannel,
}

impl StateEvolution {
    pub fn new(params: SeParams) -> Result<Self> {
        params.validate()?;
        let batch = params.batch();
        Self::with_batch(params, batch)
    }

    /// Shares an existing batch, so that several rates see identical noise.
    pub fn with_batch(params: SeParams, batch: Arc<GaussianBatch>) -> Result<Self> {
        params.validate()?;
        if batch.dim() != params.section_size {
            return Err(Error::Dimension {
                what: "noise batch",
                expected: params.section_size,
                got: batch.dim(),
            });
        }
        let model = SpectralModel::new(params.ensemble.clone(), params.alpha())?;
        Ok(Self {
            params,
            model,
            channel: ScalarChannel::new(batch),
        })
    }

    pub fn params(&self) -> &SeParams {
        &self.params
    }

    pub fn model(&self) -> &SpectralModel {
        &self.model
    }

    pub fn channel(&self) -> &ScalarChannel {
        &self.channel
    }

    /// `1 − 1/B`.
    pub fn prior_variance(&self) -> f64 {
        1.0 - 1.0 / self.params.section_size as f64
    }

    /// `Σ(E)² = 1/(B·snr·ℛ(−snr·E))`; at `E = 0` this is `1/(B·snr·α)`.
    pub fn effective_sigma2(&self, e: f64) -> Result<f64> {
        Ok(1.0 / self.precision(e)?)
    }

    /// `m(E) = 1/Σ(E)²`.
    pub fn precision(&self, e: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&e) {
            return Err(domain("E", e, "[0, 1]"));
        }
        let b = self.params.section_size as f64;
        let snr = self.params.snr;
        let r = if e == 0.0 {
            self.model.r_transform_at_zero()
        } else {
            self.model.r_transform(-snr * e)?
        };
        Ok(b * snr * r)
    }

    /// `T(E)`, clamped to `[0, 1 − 1/B]`.
    pub fn se_operator_t(&self, e: f64) -> Result<Estimate> {
        let m = self.precision(e)?;
        let est = self.channel.mmse(m);
        Ok(Estimate {
            mean: est.mean.clamp(0.0, self.prior_variance()),
            stderr: est.stderr,
        })
    }

    /// `E⁽ᵗ⁺¹⁾ = T(E⁽ᵗ⁾)` from `E⁽⁰⁾ = 1 − 1/B`.
    pub fn run_se(&self) -> Result<SeTrajectory> {
        self.run_from(self.prior_variance())
    }

    /// The same recursion from an arbitrary start.
    pub fn run_from(&self, e0: f64) -> Result<SeTrajectory> {
        if !(0.0..=self.prior_variance()).contains(&e0) {
            return Err(domain("E0", e0, "[0, 1 - 1/B]"));
        }
        let mut values = alloc::vec![e0];
        let mut stderrs = alloc::vec![0.0];
        let mut converged = false;
        let mut e = e0;
        for _ in 0..self.params.max_iter {
            let t = self.se_operator_t(e)?;
            values.push(t.mean);
            stderrs.push(t.stderr);
            let step = (t.mean - e).abs();
            e = t.mean;
            if step < self.params.tol {
                converged = true;
                break;
            }
        }
        Ok(SeTrajectory {
            values,
            stderrs,
            converged,
            fixed_point: e,
        })
    }

    /// Two-stage recursion that follows the decoder iteration by iteration.
    ///
    /// With denoiser input precision `γ₁`, the section MSE is `E = mmse(γ₁)`;
    /// the extrinsic precision handed to the LMMSE stage is
    /// `γ₂ = B/E − γ₁`; the LMMSE variance per component is
    /// `v₂ = 𝒞(−γ₂/(snr·B))/(snr·B)`; and the next denoiser precision is
    /// `γ₁ = 1/v₂ − γ₂`. Its fixed points are those of [`Self::run_se`].
    pub fn run_vamp_se(&self, iterations: usize, gamma1_init: f64) -> Result<VampSeTrajectory> {
        if !(gamma1_init >= 0.0) || !gamma1_init.is_finite() {
            return Err(domain("gamma1", gamma1_init, "[0, inf)"));
        }
        let b = self.params.section_size as f64;
        let sb = self.params.snr * b;
        let mut out = VampSeTrajectory {
            mse: Vec::with_capacity(iterations + 1),
            gamma1: Vec::with_capacity(iterations + 1),
            gamma2: Vec::with_capacity(iterations + 1),
        };
        let mut g1 = gamma1_init;
        for _ in 0..=iterations {
            let e = self.channel.mmse(g1);
            let e_mean = e.mean.clamp(1e-300, self.prior_variance());
            let g2 = (b / e_mean - g1).clamp(GAMMA_MIN, GAMMA_MAX);
            out.mse.push(Estimate {
                mean: e.mean.clamp(0.0, self.prior_variance()),
                stderr: e.stderr,
            });
            out.gamma1.push(g1);
            out.gamma2.push(g2);
            let v2 = self.model.cauchy_transform(-g2 / sb)? / sb;
            g1 = (1.0 / v2 - g2).clamp(GAMMA_MIN, GAMMA_MAX);
        }
        Ok(out)
    }

    /// Probability that the hard decision of the effective channel at the
    /// fixed point `E*` misses the sent symbol.
    pub fn asymptotic_ser(&self, e_star: f64) -> Result<Estimate> {
        if !(0.0..=self.prior_variance()).contains(&e_star) {
            return Err(domain("E*", e_star, "[0, 1 - 1/B]"));
        }
        Ok(self.channel.section_error(self.precision(e_star)?))
    }

    /// Zeros of `T(E) − E`, located by a sign scan over `grid` (ascending,
    /// inside `(0, 1 − 1/B]`) and refined by regula falsi on the frozen batch.
    pub fn fixed_points(&self, grid: &[f64]) -> Result<Vec<FixedPoint>> {
        let g = |e: f64| -> Result<f64> { Ok(self.se_operator_t(e)?.mean - e) };
        let mut out = Vec::new();
        // `T(0) ≥ 0`; starting the scan at `E = 0` catches a stable point
        // below the first grid node.
        let (mut pe, mut pv) = (0.0, g(0.0)?.max(f64::MIN_POSITIVE));
        for &e in grid {
            let v = g(e)?;
            if (pv > 0.0) != (v > 0.0) {
                out.push(FixedPoint {
                    energy: illinois(&g, (pe, pv), (e, v))?,
                    stable: pv > 0.0,
                });
            }
            (pe, pv) = (e, v);
        }
        Ok(out)
    }
}

/// Root of `g` between two points of opposite sign by the Illinois variant
/// of regula falsi.
fn illinois<G: Fn(f64) -> Result<f64>>(g: &G, a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    let ((mut xa, mut fa), (mut xb, mut fb)) = (a, b);
    let mut side = 0i8;
    for _ in 0..100 {
        if (xb - xa).abs() <= 1e-12 * xa.abs().max(xb.abs()) || fa == fb {
            break;
        }
        let x = (xa * fb - xb * fa) / (fb - fa);
        let fx = g(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == (fb > 0.0) {
            (xb, fb) = (x, fx);
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            (xa, fa) = (x, fx);
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fx.abs() <= 1e-14 * x.abs().max(1e-300) {
            return Ok(x);
        }
    }
    Ok(if fa.abs() < fb.abs() { xa } else { xb })
}

/// Geometric spacing from `1e-6` to `0.05` followed by uniform spacing up to
/// `1 − 1/B`, `size` points in total.
pub fn energy_grid(section_size: usize, size: usize) -> Vec<f64> {
    let top = 1.0 - 1.0 / section_size as f64;
    let size = size.max(8);
    let n_geo = size / 3;
    let n_uni = size - n_geo;
    let (lo, knee) = (1e-6_f64, 0.05_f64.min(0.5 * top));
    let mut grid: Vec<f64> = (0..n_geo)
        .map(|i| lo * (knee / lo).powf(i as f64 / n_geo as f64))
        .collect();
    grid.extend((0..n_uni).map(|i| knee + (top - knee) * (i + 1) as f64 / n_uni as f64));
    grid
}
