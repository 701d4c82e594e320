//! Messages, encoding, the AWGN channel and the two error metrics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::operators::CodingOperator;
use crate::rng::{purpose, stream_rng};

/// One symbol in `[0, B)` per section.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    indices: Vec<usize>,
    section_size: usize,
}

impl Message {
    pub fn new(indices: Vec<usize>, section_size: usize) -> Result<Self> {
        if indices.is_empty() || section_size < 2 {
            return Err(Error::InvalidParams(format!(
                "a message needs L >= 1 and B >= 2 (got L = {}, B = {section_size})",
                indices.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= section_size) {
            return Err(Error::InvalidParams(format!("section index {bad} >= B = {section_size}")));
        }
        Ok(Self {
            indices,
            section_size,
        })
    }

    /// i.i.d. uniform symbols.
    pub fn sample(sections: usize, section_size: usize, seed: u64) -> Result<Self> {
        if section_size < 2 {
            return Err(Error::InvalidParams(format!("B must be at least 2, got {section_size}")));
        }
        let mut rng = stream_rng(seed, purpose::MESSAGE);
        Self::new(
            (0..sections).map(|_| rng.random_range(0..section_size)).collect(),
            section_size,
        )
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn sections(&self) -> usize {
        self.indices.len()
    }

    pub fn section_size(&self) -> usize {
        self.section_size
    }

    /// The `N = L·B` vector with a one at `l·B + index_l` in every section.
    pub fn to_signal(&self) -> Vec<f64> {
        let b = self.section_size;
        let mut x = vec![0.0; self.indices.len() * b];
        for (l, &i) in self.indices.iter().enumerate() {
            x[l * b + i] = 1.0;
        }
        x
    }
}

/// Free-function form of [`Message::sample`].
pub fn sample_message(sections: usize, section_size: usize, seed: u64) -> Result<Message> {
    Message::sample(sections, section_size, seed)
}

/// Free-function form of [`Message::to_signal`].
pub fn to_signal(msg: &Message) -> Vec<f64> {
    msg.to_signal()
}

/// Received vector `y` together with the channel snr.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    pub y: Vec<f64>,
    pub snr: f64,
}

/// `y = Ax + σg` with `σ = snr^(-1/2)`; `snr = ∞` is the noiseless channel.
pub fn transmit(op: &dyn CodingOperator, x: &[f64], snr: f64, seed: u64) -> Result<ChannelOutput> {
    if !(snr > 0.0) {
        return Err(domain("snr", snr, "(0, inf]"));
    }
    let mut y = op.forward(x)?;
    if snr.is_finite() {
        let sigma = 1.0 / snr.sqrt();
        let mut rng = stream_rng(seed, purpose::NOISE);
        for v in y.iter_mut() {
            *v += sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(ChannelOutput { y, snr })
}

/// Per section, the position of the largest entry (lowest index on ties).
pub fn hard_decision(xhat: &[f64], sections: usize, section_size: usize) -> Result<Message> {
    if xhat.len() != sections * section_size {
        return Err(Error::Dimension {
            what: "estimate",
            expected: sections * section_size,
            got: xhat.len(),
        });
    }
    let indices = xhat
        .chunks_exact(section_size)
        .map(|sec| {
            let mut best = 0;
            for (i, &v) in sec.iter().enumerate().skip(1) {
                if v > sec[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    Message::new(indices, section_size)
}

/// Fraction of sections decoded wrongly.
pub fn section_error_rate(truth: &Message, est: &Message) -> Result<f64> {
    if truth.sections() != est.sections() || truth.section_size != est.section_size {
        return Err(Error::Dimension {
            what: "message",
            expected: truth.sections(),
            got: est.sections(),
        });
    }
    let wrong = truth
        .indices
        .iter()
        .zip(&est.indices)
        .filter(|(a, b)| a != b)
        .count();
    Ok(wrong as f64 / truth.sections() as f64)
}

/// `‖x − x̂‖²/L`.
pub fn mse_per_section(x: &[f64], xhat: &[f64], sections: usize) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(Error::Dimension {
            what: "estimate",
            expected: x.len(),
            got: xhat.len(),
        });
    }
    if sections == 0 {
        return Err(Error::InvalidParams("L must be at least 1".into()));
    }
    let sq: f64 = x.iter().zip(xhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sq / sections as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{CodeParams, EnsembleSpec, OperatorKind};
    use proptest::prelude::*;

    #[test]
    fn signal_layout() {
        let m = Message::new(vec![0, 1], 2).unwrap();
        assert_eq!(m.to_signal(), vec![1.0, 0.0, 0.0, 1.0]);
        assert!(Message::new(vec![2], 2).is_err());
        assert!(Message::new(vec![], 2).is_err());
    }

    #[test]
    fn hard_decision_examples() {
        let m = hard_decision(&[0.2, 0.5, 0.3], 1, 3).unwrap();
        assert_eq!(m.indices(), &[1]);
        let m = hard_decision(&[0.25; 8], 2, 4).unwrap();
        assert_eq!(m.indices(), &[0, 0]);
        assert!(hard_decision(&[0.0; 5], 2, 2).is_err());
    }

    #[test]
    fn metric_examples() {
        let truth = Message::new(vec![0, 1, 2, 3], 4).unwrap();
        assert_eq!(section_error_rate(&truth, &truth).unwrap(), 0.0);
        let x = truth.to_signal();
        assert_eq!(mse_per_section(&x, &x, 4).unwrap(), 0.0);
        let half = Message::new(vec![1, 0, 2, 3], 4).unwrap();
        assert_eq!(section_error_rate(&truth, &half).unwrap(), 0.5);
        assert_eq!(mse_per_section(&x, &half.to_signal(), 4).unwrap(), 1.0);
        let uniform = vec![0.25; 16];
        assert!((mse_per_section(&x, &uniform, 4).unwrap() - 0.75).abs() < 1e-15);
        let short = Message::new(vec![0], 4).unwrap();
        assert!(section_error_rate(&truth, &short).is_err());
        assert!(mse_per_section(&x, &uniform[..8], 4).is_err());
    }

    #[test]
    fn uniform_symbols_pass_chi_square() {
        let b = 8;
        let m = Message::sample(100_000, b, 11).unwrap();
        let mut counts = vec![0usize; b];
        m.indices().iter().for_each(|&i| counts[i] += 1);
        let e = 100_000.0 / b as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 99th percentile of χ² with 7 degrees of freedom.
        assert!(chi2 < 18.475, "χ² = {chi2}");
        assert_eq!(m, Message::sample(100_000, b, 11).unwrap());
    }

    #[test]
    fn channel_noise() {
        let params = CodeParams::new(16, 4, 1.0, 4.0).unwrap();
        let op = EnsembleSpec::new(OperatorKind::RowOrthogonal, params, 1).build().unwrap();
        let x = Message::sample(16, 4, 2).unwrap().to_signal();
        let clean = transmit(op.as_ref(), &x, f64::INFINITY, 3).unwrap();
        assert_eq!(clean.y, op.forward(&x).unwrap());
        assert!(transmit(op.as_ref(), &x, 0.0, 3).is_err());
        assert!(transmit(op.as_ref(), &x, -1.0, 3).is_err());
        let a = transmit(op.as_ref(), &x, 4.0, 3).unwrap();
        assert_eq!(a, transmit(op.as_ref(), &x, 4.0, 3).unwrap());
    }

    #[cfg(feature = "std")]
    #[test]
    fn empirical_noise_variance() {
        let params = CodeParams::new(50_000, 2, 0.5, 4.0).unwrap();
        let op = EnsembleSpec::new(OperatorKind::DctProxy, params, 1).build().unwrap();
        let x = vec![0.0; op.cols()];
        let out = transmit(op.as_ref(), &x, 4.0, 9).unwrap();
        let n = out.y.len() as f64;
        assert!(n >= 1e5);
        let var = out.y.iter().map(|v| v * v).sum::<f64>() / n;
        // Var of a χ²₁/n-mean is 2σ⁴/n.
        let se = (2.0 / n).sqrt() * 0.25;
        assert!((var - 0.25).abs() < 3.0 * se, "{var}");
    }

    proptest! {
        #[test]
        fn signal_roundtrip(seed in any::<u64>(), l in 1usize..50, b in 2usize..17) {
            let m = Message::sample(l, b, seed).unwrap();
            let x = m.to_signal();
            prop_assert_eq!(x.iter().sum::<f64>(), l as f64);
            prop_assert_eq!(hard_decision(&x, l, b).unwrap(), m);
        }
    }
}
