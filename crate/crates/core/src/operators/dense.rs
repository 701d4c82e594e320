use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_len, check_resolvent_args, CodingOperator, EnsembleSpec, OperatorKind};
use crate::error::{Error, Result};
use crate::rng::{purpose, stream_rng};

/// A dense `M × N` matrix kept together with the eigendecomposition
/// `AAᵀ = U·diag(d)·Uᵀ`, which turns the `N × N` resolvent into an `M × M`
/// diagonal solve (Woodbury).
#[derive(Debug, Clone)]
pub struct DenseOperator {
    kind: OperatorKind,
    section_size: usize,
    a: DMatrix<f64>,
    /// `None` means `U = I`.
    u: Option<DMatrix<f64>>,
    d: Vec<f64>,
}

/// Raw storage of a [`DenseOperator`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParts {
    pub kind: OperatorKind,
    pub section_size: usize,
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
    pub d: Vec<f64>,
    pub u: Option<Vec<f64>>,
}

fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

/// First `m` columns of a Haar orthogonal `n × n` matrix: QR of an `n × m`
/// gaussian matrix, with each column multiplied by the sign of `R`'s diagonal.
fn haar_columns<R: Rng>(n: usize, m: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(n, m, 1.0, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn check_spec(spec: &EnsembleSpec, kind: OperatorKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidParams(alloc::format!(
            "spec asks for {}, sampler builds {}",
            spec.kind.name(),
            kind.name()
        )));
    }
    if spec.params.rows() > spec.params.cols() {
        return Err(Error::InvalidParams("M > N is not supported".into()));
    }
    Ok(())
}

impl DenseOperator {
    /// i.i.d. `N(0, 1/L)` entries.
    pub fn sample_gaussian(spec: &EnsembleSpec) -> Result<Self> {
        check_spec(spec, OperatorKind::Gaussian)?;
        let p = spec.params;
        let mut rng = stream_rng(spec.seed, purpose::MATRIX);
        let a = gaussian_matrix(p.rows(), p.cols(), (1.0 / p.sections as f64).sqrt(), &mut rng);
        let eig = SymmetricEigen::new(&a * a.transpose());
        let d = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        Ok(Self {
            kind: OperatorKind::Gaussian,
            section_size: p.section_size,
            a,
            u: Some(eig.eigenvectors),
            d,
        })
    }

    /// `√B` times `M` rows of a Haar orthogonal `N × N` matrix.
    pub fn sample_row_orthogonal(spec: &EnsembleSpec) -> Result<Self> {
        check_spec(spec, OperatorKind::RowOrthogonal)?;
        let p = spec.params;
        let mut rng = stream_rng(spec.seed, purpose::MATRIX);
        let b = p.section_size as f64;
        let a = haar_columns(p.cols(), p.rows(), &mut rng).transpose() * b.sqrt();
        Ok(Self {
            kind: OperatorKind::RowOrthogonal,
            section_size: p.section_size,
            a,
            u: None,
            d: vec![b; p.rows()],
        })
    }

    /// `U·√D·Vᵀ` with Haar `U`, `V` and the nonzero part of `D` split between
    /// `B/2` (`⌈M/2⌉` times) and `3B/2` (`⌊M/2⌋` times), rescaled to mean `B`.
    pub fn sample_discrete(spec: &EnsembleSpec) -> Result<Self> {
        check_spec(spec, OperatorKind::DiscreteTri)?;
        let p = spec.params;
        let (m, n) = (p.rows(), p.cols());
        let b = p.section_size as f64;
        let low = m.div_ceil(2);
        let raw: Vec<f64> = (0..m).map(|i| if i < low { 0.5 } else { 1.5 }).collect();
        let scale = m as f64 / raw.iter().sum::<f64>();
        let d: Vec<f64> = raw.iter().map(|&v| b * scale * v).collect();
        let u = haar_columns(m, m, &mut stream_rng(spec.seed, purpose::HAAR_LEFT));
        let v = haar_columns(n, m, &mut stream_rng(spec.seed, purpose::HAAR_RIGHT));
        let mut us = u.clone();
        for (j, &dj) in d.iter().enumerate() {
            us.column_mut(j).scale_mut(dj.sqrt());
        }
        let a = &us * v.transpose();
        Ok(Self {
            kind: OperatorKind::DiscreteTri,
            section_size: p.section_size,
            a,
            u: Some(u),
            d,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn to_parts(&self) -> DenseParts {
        let row_major = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
        DenseParts {
            kind: self.kind,
            section_size: self.section_size,
            rows: self.a.nrows(),
            cols: self.a.ncols(),
            a: row_major(&self.a),
            d: self.d.clone(),
            u: self.u.as_ref().map(row_major),
        }
    }

    pub fn from_parts(parts: DenseParts) -> Result<Self> {
        let (m, n) = (parts.rows, parts.cols);
        check_len("matrix payload", m * n, parts.a.len())?;
        check_len("eigenvalue payload", m, parts.d.len())?;
        if let Some(u) = &parts.u {
            check_len("eigenvector payload", m * m, u.len())?;
        }
        if parts.kind == OperatorKind::DctProxy || parts.section_size < 2 || m > n {
            return Err(Error::InvalidParams("inconsistent dense operator parts".into()));
        }
        Ok(Self {
            kind: parts.kind,
            section_size: parts.section_size,
            a: DMatrix::from_row_slice(m, n, &parts.a),
            u: parts.u.map(|u| DMatrix::from_row_slice(m, m, &u)),
            d: parts.d,
        })
    }
}

impl CodingOperator for DenseOperator {
    fn kind(&self) -> OperatorKind {
        self.kind
    }

    fn rows(&self) -> usize {
        self.a.nrows()
    }

    fn cols(&self) -> usize {
        self.a.ncols()
    }

    fn section_size(&self) -> usize {
        self.section_size
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("forward input", self.cols(), x.len())?;
        let x = DVector::from_column_slice(x);
        Ok((&self.a * x).data.into())
    }

    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint input", self.rows(), y.len())?;
        let y = DVector::from_column_slice(y);
        Ok(self.a.tr_mul(&y).data.into())
    }

    fn resolvent_solve(&self, v: &[f64], gamma: f64, snr: f64) -> Result<Vec<f64>> {
        check_len("resolvent input", self.cols(), v.len())?;
        check_resolvent_args(gamma, snr)?;
        let vv = DVector::from_column_slice(v);
        let mut t = &self.a * &vv;
        if let Some(u) = &self.u {
            t = u.tr_mul(&t);
        }
        for (ti, &di) in t.iter_mut().zip(&self.d) {
            *ti *= snr / (snr * di + gamma);
        }
        if let Some(u) = &self.u {
            t = u * t;
        }
        let w = self.a.tr_mul(&t);
        Ok(v.iter().zip(w.iter()).map(|(&vi, &wi)| (vi - wi) / gamma).collect())
    }

    fn resolvent_trace(&self, gamma: f64, snr: f64) -> Result<f64> {
        check_resolvent_args(gamma, snr)?;
        let (m, n) = (self.rows() as f64, self.cols() as f64);
        let bulk: f64 = self.d.iter().map(|&di| gamma / (snr * di + gamma)).sum();
        Ok((n - m + bulk) / n)
    }

    fn spectrum(&self) -> Vec<f64> {
        let b = self.section_size as f64;
        let mut s = vec![0.0; self.cols() - self.rows()];
        s.extend(self.d.iter().map(|&v| v / b));
        s.sort_by(|x, y| x.total_cmp(y));
        s
    }
}
