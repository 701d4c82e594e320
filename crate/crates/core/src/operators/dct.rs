use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rustdct::{DctPlanner, TransformType2And3};

use super::{check_len, check_resolvent_args, CodingOperator, EnsembleSpec, OperatorKind};
use crate::error::{Error, Result};
use crate::rng::{purpose, stream_rng};

/// `A = √B · S · C · diag(ε) · Π`: a random column permutation `Π`, random
/// signs `ε`, the orthonormal DCT-II `C`, and a uniformly drawn subset `S` of
/// `M` output rows. Products cost `O(N log N)` and the resolvent is diagonal
/// in the DCT basis.
#[derive(Clone)]
pub struct DctOperator {
    section_size: usize,
    n: usize,
    signs: Vec<f64>,
    /// `(Πx)ₖ = x[perm[k]]`.
    perm: Vec<usize>,
    /// Selected rows, ascending.
    rows: Vec<usize>,
    /// `selected[k]` is true if DCT coefficient `k` is observed.
    selected: Vec<bool>,
    dct: Arc<dyn TransformType2And3<f64>>,
}

impl core::fmt::Debug for DctOperator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DctOperator")
            .field("section_size", &self.section_size)
            .field("n", &self.n)
            .field("m", &self.rows.len())
            .finish()
    }
}

impl DctOperator {
    pub fn build(spec: &EnsembleSpec) -> Result<Self> {
        if spec.kind != OperatorKind::DctProxy {
            return Err(Error::InvalidParams("DCT proxy built from a non-DCT spec".into()));
        }
        let p = spec.params;
        let (m, n) = (p.rows(), p.cols());
        if m > n {
            return Err(Error::InvalidParams("M > N is not supported".into()));
        }
        let mut sign_rng = stream_rng(spec.seed, purpose::SIGNS);
        let signs = (0..n)
            .map(|_| if sign_rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut stream_rng(spec.seed, purpose::PERMUTATION));
        let mut rows = index::sample(&mut stream_rng(spec.seed, purpose::ROWS), n, m).into_vec();
        rows.sort_unstable();
        let mut selected = vec![false; n];
        rows.iter().for_each(|&r| selected[r] = true);
        let dct = DctPlanner::new().plan_dct2(n);
        Ok(Self {
            section_size: p.section_size,
            n,
            signs,
            perm,
            rows,
            selected,
            dct,
        })
    }

    pub fn selected_rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// `diag(ε)·Π·x`.
    fn scramble(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().zip(&self.signs).map(|(&j, s)| x[j] * s).collect()
    }

    /// `Πᵀ·diag(ε)·u`.
    fn unscramble(&self, u: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for ((&j, s), v) in self.perm.iter().zip(&self.signs).zip(u) {
            x[j] = v * s;
        }
        x
    }

    fn weight(&self, k: usize) -> f64 {
        let n = self.n as f64;
        if k == 0 {
            (1.0 / n).sqrt()
        } else {
            (2.0 / n).sqrt()
        }
    }

    /// `C·u` in place.
    fn dct2(&self, buf: &mut [f64]) {
        self.dct.process_dct2(buf);
        for (k, v) in buf.iter_mut().enumerate() {
            *v *= self.weight(k);
        }
    }

    /// `Cᵀ·c` in place.
    fn dct2_transpose(&self, buf: &mut [f64]) {
        // The unnormalized DCT-III halves the zeroth term.
        for (k, v) in buf.iter_mut().enumerate() {
            *v *= if k == 0 { 2.0 * self.weight(0) } else { self.weight(k) };
        }
        self.dct.process_dct3(buf);
    }
}

impl CodingOperator for DctOperator {
    fn kind(&self) -> OperatorKind {
        OperatorKind::DctProxy
    }

    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn section_size(&self) -> usize {
        self.section_size
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("forward input", self.n, x.len())?;
        let mut buf = self.scramble(x);
        self.dct2(&mut buf);
        let scale = (self.section_size as f64).sqrt();
        Ok(self.rows.iter().map(|&r| scale * buf[r]).collect())
    }

    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint input", self.rows(), y.len())?;
        let scale = (self.section_size as f64).sqrt();
        let mut buf = vec![0.0; self.n];
        for (&r, &v) in self.rows.iter().zip(y) {
            buf[r] = scale * v;
        }
        self.dct2_transpose(&mut buf);
        Ok(self.unscramble(&buf))
    }

    fn resolvent_solve(&self, v: &[f64], gamma: f64, snr: f64) -> Result<Vec<f64>> {
        check_len("resolvent input", self.n, v.len())?;
        check_resolvent_args(gamma, snr)?;
        let b = self.section_size as f64;
        let mut buf = self.scramble(v);
        self.dct2(&mut buf);
        for (c, &sel) in buf.iter_mut().zip(&self.selected) {
            *c /= if sel { snr * b + gamma } else { gamma };
        }
        self.dct2_transpose(&mut buf);
        Ok(self.unscramble(&buf))
    }

    fn resolvent_trace(&self, gamma: f64, snr: f64) -> Result<f64> {
        check_resolvent_args(gamma, snr)?;
        let (m, n) = (self.rows() as f64, self.n as f64);
        let b = self.section_size as f64;
        Ok((n - m + m * gamma / (snr * b + gamma)) / n)
    }

    fn spectrum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n - self.rows()];
        s.resize(self.n, 1.0);
        s
    }
}
