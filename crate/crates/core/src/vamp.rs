//! VAMP decoding of sparse superposition codes.
//!
//! The decoder alternates a section-wise softmax denoiser `g₁` with the
//! LMMSE estimator `g₂`, passing extrinsic means and precisions between them.
//! `VampState` stores precisions; the denoiser is a softmax at temperature
//! `1/γ₁`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::codec::{hard_decision, mse_per_section, section_error_rate, Message};
use crate::error::{domain, Error, Result};
use crate::math::softmax_in_place;
use crate::operators::{check_len, CodingOperator};

/// Decoder settings.
#[derive(Debug, Clone, PartialEq)]
pub struct VampConfig {
    pub max_iter: usize,
    /// Stop when `|ΔE_L|` (or `‖Δx̂‖²/L` without ground truth) drops below.
    pub tol: f64,
    pub gamma_clamp: (f64, f64),
    pub alpha_clamp: (f64, f64),
    /// Weight of the new iterate in `(0, 1]`; 1 disables damping.
    pub damping: f64,
    /// Initial `r₁`; zeros when `None`.
    pub initial_r1: Option<Vec<f64>>,
    /// Initial precision `γ₁`.
    pub initial_gamma1: f64,
}

impl Default for VampConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-8,
            gamma_clamp: (1e-11, 1e11),
            alpha_clamp: (1e-11, 1.0 - 1e-11),
            damping: 1.0,
            initial_r1: None,
            initial_gamma1: 1e-6,
        }
    }
}

impl VampConfig {
    pub fn validate(&self) -> Result<()> {
        let (g0, g1) = self.gamma_clamp;
        let (a0, a1) = self.alpha_clamp;
        if !(g0 > 0.0 && g0 < g1 && g1.is_finite()) {
            return Err(Error::InvalidParams("gamma clamp must satisfy 0 < lo < hi < inf".into()));
        }
        if !(a0 > 0.0 && a0 < a1 && a1 < 1.0) {
            return Err(Error::InvalidParams("alpha clamp must satisfy 0 < lo < hi < 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(domain("damping", self.damping, "(0, 1]"));
        }
        if !(self.initial_gamma1 > 0.0) {
            return Err(domain("initial gamma1", self.initial_gamma1, "(0, inf)"));
        }
        Ok(())
    }
}

/// The two-track iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct VampState {
    pub r1: Vec<f64>,
    pub gamma1: f64,
    pub r2: Vec<f64>,
    pub gamma2: f64,
    pub xhat1: Vec<f64>,
    pub xhat2: Vec<f64>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub iteration: usize,
    /// Number of consecutive steps in which a precision hit its clamp.
    pub clamp_streak: usize,
    pub unstable: bool,
}

impl VampState {
    pub fn new(n: usize, config: &VampConfig) -> Result<Self> {
        let r1 = match &config.initial_r1 {
            Some(r) => {
                check_len("initial r1", n, r.len())?;
                r.clone()
            }
            None => vec![0.0; n],
        };
        Ok(Self {
            r1,
            gamma1: config.initial_gamma1,
            r2: vec![0.0; n],
            gamma2: config.initial_gamma1,
            xhat1: vec![0.0; n],
            xhat2: vec![0.0; n],
            alpha1: 0.5,
            alpha2: 0.5,
            iteration: 0,
            clamp_streak: 0,
            unstable: false,
        })
    }
}

/// Section-wise softmax of `r/γ` (temperature `γ`) and the clamped average
/// divergence `α = (1/N)·Σ γ⁻¹·x̂(1 − x̂)`.
pub fn denoise_g1(
    r: &[f64],
    gamma: f64,
    section_size: usize,
    alpha_clamp: (f64, f64),
) -> Result<(Vec<f64>, f64)> {
    if !(gamma > 0.0) {
        return Err(domain("gamma", gamma, "(0, inf)"));
    }
    if section_size == 0 || r.len() % section_size != 0 {
        return Err(Error::Dimension {
            what: "denoiser input",
            expected: r.len().div_ceil(section_size.max(1)) * section_size.max(1),
            got: r.len(),
        });
    }
    let inv = 1.0 / gamma;
    let mut xhat: Vec<f64> = r.iter().map(|&v| v * inv).collect();
    let mut div = 0.0;
    for sec in xhat.chunks_exact_mut(section_size) {
        softmax_in_place(sec);
        div += sec.iter().map(|&g| g * (1.0 - g)).sum::<f64>();
    }
    let alpha = (inv * div / r.len() as f64).clamp(alpha_clamp.0, alpha_clamp.1);
    Ok((xhat, alpha))
}

/// `x̂ = (snr·AᵀA + γI)⁻¹(snr·Aᵀy + γ·r)` and the clamped
/// `α = (γ/N)·Tr[(snr·AᵀA + γI)⁻¹]`.
pub fn lmmse_g2(
    r: &[f64],
    gamma: f64,
    op: &dyn CodingOperator,
    y: &[f64],
    snr: f64,
    alpha_clamp: (f64, f64),
) -> Result<(Vec<f64>, f64)> {
    check_len("observation", op.rows(), y.len())?;
    let aty = op.adjoint(y)?;
    lmmse_with_adjoint(r, gamma, op, &aty, snr, alpha_clamp)
}

fn lmmse_with_adjoint(
    r: &[f64],
    gamma: f64,
    op: &dyn CodingOperator,
    aty: &[f64],
    snr: f64,
    alpha_clamp: (f64, f64),
) -> Result<(Vec<f64>, f64)> {
    check_len("LMMSE input", op.cols(), r.len())?;
    let rhs: Vec<f64> = aty.iter().zip(r).map(|(&a, &v)| snr * a + gamma * v).collect();
    let xhat = op.resolvent_solve(&rhs, gamma, snr)?;
    let alpha = op.resolvent_trace(gamma, snr)?.clamp(alpha_clamp.0, alpha_clamp.1);
    Ok((xhat, alpha))
}

/// Extrinsic update `r' = (x̂ − α·r)/(1 − α)`, `γ' = γ(1 − α)/α`, with `γ'`
/// clamped. The flag reports whether the clamp was active.
pub fn onsager_update(
    xhat: &[f64],
    alpha: f64,
    r: &[f64],
    gamma: f64,
    gamma_clamp: (f64, f64),
) -> (Vec<f64>, f64, bool) {
    let scale = 1.0 / (1.0 - alpha);
    let r_new = xhat
        .iter()
        .zip(r)
        .map(|(&x, &v)| (x - alpha * v) * scale)
        .collect();
    let raw = gamma * (1.0 - alpha) / alpha;
    let g = raw.clamp(gamma_clamp.0, gamma_clamp.1);
    (r_new, g, g != raw)
}

fn blend(new: &mut [f64], old: &[f64], w: f64) {
    if w < 1.0 {
        new.iter_mut()
            .zip(old)
            .for_each(|(n, &o)| *n = w * *n + (1.0 - w) * o);
    }
}

/// One full iteration: denoise, extrinsic update, LMMSE, extrinsic update.
pub fn vamp_step(
    state: &VampState,
    op: &dyn CodingOperator,
    y: &[f64],
    snr: f64,
    config: &VampConfig,
) -> Result<VampState> {
    check_len("observation", op.rows(), y.len())?;
    let aty = op.adjoint(y)?;
    step_with_adjoint(state, op, &aty, snr, config)
}

fn step_with_adjoint(
    state: &VampState,
    op: &dyn CodingOperator,
    aty: &[f64],
    snr: f64,
    config: &VampConfig,
) -> Result<VampState> {
    let b = op.section_size();
    let (xhat1, alpha1) = denoise_g1(&state.r1, 1.0 / state.gamma1, b, config.alpha_clamp)?;
    let (mut r2, mut gamma2, c2) =
        onsager_update(&xhat1, alpha1, &state.r1, state.gamma1, config.gamma_clamp);
    let w = config.damping;
    if state.iteration > 0 {
        blend(&mut r2, &state.r2, w);
        gamma2 = w * gamma2 + (1.0 - w) * state.gamma2;
    }
    let (xhat2, alpha2) = lmmse_with_adjoint(&r2, gamma2, op, aty, snr, config.alpha_clamp)?;
    let (mut r1, mut gamma1, c1) = onsager_update(&xhat2, alpha2, &r2, gamma2, config.gamma_clamp);
    blend(&mut r1, &state.r1, w);
    gamma1 = w * gamma1 + (1.0 - w) * state.gamma1;
    if r1.iter().chain(&r2).any(|v| !v.is_finite()) {
        return Err(domain("VAMP iterate", f64::NAN, "finite values"));
    }
    let clamp_streak = if c1 || c2 { state.clamp_streak + 1 } else { 0 };
    Ok(VampState {
        r1,
        gamma1,
        r2,
        gamma2,
        xhat1,
        xhat2,
        alpha1,
        alpha2,
        iteration: state.iteration + 1,
        clamp_streak,
        unstable: state.unstable || clamp_streak >= 2,
    })
}

/// Diagnostics of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `E_L` and `SER_L` of the denoiser output, when the truth is known.
    pub mse: Option<f64>,
    pub ser: Option<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub clamped: bool,
}

/// Output of [`decode`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// `x̂₁` after the last iteration.
    pub estimate: Vec<f64>,
    pub decision: Message,
    /// `E_L` per denoiser output, `iterations + 1` entries (empty without truth).
    pub mse: Vec<f64>,
    pub ser: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub unstable: bool,
    /// A step error that ended the run early.
    pub failure: Option<Error>,
}

/// Runs VAMP until `max_iter` or convergence.
pub fn decode(
    op: &dyn CodingOperator,
    y: &[f64],
    snr: f64,
    config: &VampConfig,
    truth: Option<&Message>,
) -> Result<DecodeResult> {
    config.validate()?;
    check_len("observation", op.rows(), y.len())?;
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(domain("snr", snr, "(0, inf)"));
    }
    let (n, b) = (op.cols(), op.section_size());
    let l = n / b;
    if let Some(t) = truth {
        check_len("truth sections", l, t.sections())?;
    }
    let x_true = truth.map(|t| t.to_signal());
    let aty = op.adjoint(y)?;
    let metrics = |xhat: &[f64]| -> Result<(Option<f64>, Option<f64>)> {
        match (truth, &x_true) {
            (Some(t), Some(x)) => {
                let mse = mse_per_section(x, xhat, l)?;
                let ser = section_error_rate(t, &hard_decision(xhat, l, b)?)?;
                Ok((Some(mse), Some(ser)))
            }
            _ => Ok((None, None)),
        }
    };

    let mut state = VampState::new(n, config)?;
    let mut result = DecodeResult {
        estimate: Vec::new(),
        decision: Message::new(vec![0; l], b)?,
        mse: Vec::new(),
        ser: Vec::new(),
        records: Vec::new(),
        iterations: 0,
        converged: false,
        unstable: false,
        failure: None,
    };
    let mut previous: Option<Vec<f64>> = None;
    for _ in 0..config.max_iter {
        let next = match step_with_adjoint(&state, op, &aty, snr, config) {
            Ok(s) => s,
            Err(e) => {
                result.failure = Some(e);
                break;
            }
        };
        state = next;
        let (mse, ser) = metrics(&state.xhat1)?;
        result.records.push(IterationRecord {
            iteration: state.iteration - 1,
            mse,
            ser,
            gamma1: state.gamma1,
            gamma2: state.gamma2,
            alpha1: state.alpha1,
            alpha2: state.alpha2,
            clamped: state.clamp_streak > 0,
        });
        if let (Some(m), Some(s)) = (mse, ser) {
            result.mse.push(m);
            result.ser.push(s);
        }
        let change = match (mse, result.mse.len()) {
            (Some(m), k) if k >= 2 => Some((m - result.mse[k - 2]).abs()),
            (None, _) => previous.as_ref().map(|p| {
                p.iter()
                    .zip(&state.xhat1)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / l as f64
            }),
            _ => None,
        };
        previous = Some(state.xhat1.clone());
        if change.is_some_and(|c| c < config.tol) {
            result.converged = true;
            break;
        }
    }
    let (xhat, _) = denoise_g1(&state.r1, 1.0 / state.gamma1, b, config.alpha_clamp)?;
    if let (Some(m), Some(s)) = metrics(&xhat)? {
        result.mse.push(m);
        result.ser.push(s);
    }
    result.iterations = state.iteration;
    result.unstable = state.unstable;
    result.decision = hard_decision(&xhat, l, b)?;
    result.estimate = xhat;
    Ok(result)
}
