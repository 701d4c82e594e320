//! Sampled coding matrices.
//!
//! Every operator is used only through [`CodingOperator`]: products with `A`
//! and `Aᵀ`, the regularized solve `(snr·AᵀA + γI)⁻¹v`, its normalized trace,
//! and the spectrum of `B⁻¹AᵀA`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::free_probability::Ensemble;

#[cfg(feature = "std")]
mod dct;
mod dense;

#[cfg(feature = "std")]
pub use dct::DctOperator;
pub use dense::{DenseOperator, DenseParts};

/// Code dimensions and channel quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeParams {
    /// Number of sections `L`.
    pub sections: usize,
    /// Section size `B`.
    pub section_size: usize,
    /// Requested rate `R` in bits per channel use.
    pub rate: f64,
    pub snr: f64,
}

impl CodeParams {
    /// Validates the parameters; `M = round(L·log₂B/R)` must lie in `[1, N]`.
    pub fn new(sections: usize, section_size: usize, rate: f64, snr: f64) -> Result<Self> {
        if sections == 0 {
            return Err(Error::InvalidParams(format!("L must be at least 1, got {sections}")));
        }
        if section_size < 2 {
            return Err(Error::InvalidParams(format!("B must be at least 2, got {section_size}")));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(domain("R", rate, "(0, inf)"));
        }
        if !(snr > 0.0) {
            return Err(domain("snr", snr, "(0, inf]"));
        }
        let p = Self {
            sections,
            section_size,
            rate,
            snr,
        };
        let m = p.rows_f64();
        if m < 0.5 {
            return Err(Error::InvalidParams(format!("rate {rate} leaves no channel uses")));
        }
        if p.rows() > p.cols() {
            return Err(Error::InvalidParams(format!(
                "rate {rate} gives M = {} > N = {} (aspect ratio above 1)",
                p.rows(),
                p.cols()
            )));
        }
        Ok(p)
    }

    fn rows_f64(&self) -> f64 {
        self.sections as f64 * (self.section_size as f64).log2() / self.rate
    }

    /// `M`.
    pub fn rows(&self) -> usize {
        self.rows_f64().round() as usize
    }

    /// `N = L·B`.
    pub fn cols(&self) -> usize {
        self.sections * self.section_size
    }

    /// Realized aspect ratio `M/N`.
    pub fn alpha(&self) -> f64 {
        self.rows() as f64 / self.cols() as f64
    }

    /// Aspect ratio implied by the requested rate, `log₂B/(R·B)`.
    pub fn design_alpha(&self) -> f64 {
        (self.section_size as f64).log2() / (self.rate * self.section_size as f64)
    }

    /// `L·log₂B/M` after rounding `M`.
    pub fn realized_rate(&self) -> f64 {
        self.sections as f64 * (self.section_size as f64).log2() / self.rows() as f64
    }
}

/// Which matrix construction to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Gaussian,
    RowOrthogonal,
    DiscreteTri,
    /// Subsampled DCT with random signs and column order, a fast stand-in for
    /// row-orthogonal.
    DctProxy,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Gaussian => "gaussian",
            OperatorKind::RowOrthogonal => "row-orthogonal",
            OperatorKind::DiscreteTri => "discrete",
            OperatorKind::DctProxy => "dct-proxy",
        }
    }

    /// The asymptotic spectrum the construction converges to.
    pub fn ensemble(self) -> Ensemble {
        match self {
            OperatorKind::Gaussian => Ensemble::Gaussian,
            OperatorKind::RowOrthogonal | OperatorKind::DctProxy => Ensemble::RowOrthogonal,
            OperatorKind::DiscreteTri => Ensemble::DiscreteTri,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            OperatorKind::Gaussian => 0,
            OperatorKind::RowOrthogonal => 1,
            OperatorKind::DiscreteTri => 2,
            OperatorKind::DctProxy => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => OperatorKind::Gaussian,
            1 => OperatorKind::RowOrthogonal,
            2 => OperatorKind::DiscreteTri,
            3 => OperatorKind::DctProxy,
            _ => return None,
        })
    }
}

/// Everything needed to sample one operator deterministically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub kind: OperatorKind,
    pub params: CodeParams,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: OperatorKind, params: CodeParams, seed: u64) -> Self {
        Self { kind, params, seed }
    }

    /// Samples the operator.
    pub fn build(&self) -> Result<Box<dyn CodingOperator>> {
        Ok(match self.kind {
            OperatorKind::Gaussian => Box::new(DenseOperator::sample_gaussian(self)?),
            OperatorKind::RowOrthogonal => Box::new(DenseOperator::sample_row_orthogonal(self)?),
            OperatorKind::DiscreteTri => Box::new(DenseOperator::sample_discrete(self)?),
            #[cfg(feature = "std")]
            OperatorKind::DctProxy => Box::new(DctOperator::build(self)?),
            #[cfg(not(feature = "std"))]
            OperatorKind::DctProxy => {
                return Err(Error::InvalidParams("the DCT proxy needs the `std` feature".into()))
            }
        })
    }
}

/// A coding matrix `A` of shape `M × N` seen through its products.
pub trait CodingOperator: Send + Sync {
    fn kind(&self) -> OperatorKind;
    /// `M`.
    fn rows(&self) -> usize;
    /// `N`.
    fn cols(&self) -> usize;
    /// `B`.
    fn section_size(&self) -> usize;

    /// `Ax`.
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `Aᵀy`.
    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>>;

    /// `(snr·AᵀA + γI)⁻¹ v`.
    fn resolvent_solve(&self, v: &[f64], gamma: f64, snr: f64) -> Result<Vec<f64>>;

    /// `(γ/N)·Tr[(snr·AᵀA + γI)⁻¹]`.
    fn resolvent_trace(&self, gamma: f64, snr: f64) -> Result<f64>;

    /// The `N` eigenvalues of `B⁻¹AᵀA`, ascending, zeros included.
    fn spectrum(&self) -> Vec<f64>;
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}

pub(crate) fn check_resolvent_args(gamma: f64, snr: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(domain("gamma", gamma, "(0, inf)"));
    }
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(domain("snr", snr, "[0, inf)"));
    }
    Ok(())
}

/// Kolmogorov–Smirnov distance between an ascending sample and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // Ties (e.g. the atom at zero) are handled as one jump.
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let x = sorted[i];
        let f_left = cdf(x - 1e-12 * (1.0 + x.abs()));
        let f = cdf(x);
        let below = i as f64 / n;
        let above = (j + 1) as f64 / n;
        worst = worst.max((f_left - below).abs()).max((f - above).abs());
        i = j + 1;
    }
    worst
}
