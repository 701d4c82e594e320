//! Asymptotic spectra of `B⁻¹AᵀA` and their transforms.
//!
//! Every model has the form `ρ = (1−α)δ₀ + α·ρ_supp` with `∫λ ρ_supp = 1`.
//! Conventions:
//!
//! * Cauchy transform `𝒞(z) = ∫ ρ(λ)/(λ − z) dλ` for `z` below the support.
//! * R-transform `ℛ(z) = 𝒞⁻¹(−z) − 1/z`, evaluated for `z < 0`.
//! * `Ψ(z) = lim_{α→0} ℛ(z)/α`, computed from the restricted density `ρ₀`
//!   through `Ψ(z)·z = E[1/(1 − zλ₀)] − 1`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::math::integrate;

/// A point mass of a spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

impl Atom {
    pub const fn new(location: f64, mass: f64) -> Self {
        Self { location, mass }
    }
}

const MASS_TOL: f64 = 1e-10;

fn check_unit_atoms(atoms: &[Atom], what: &str) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidParams(alloc::format!("{what}: no atoms")));
    }
    for a in atoms {
        if !(a.location > 0.0 && a.location.is_finite()) || !(a.mass >= 0.0) {
            return Err(Error::InvalidParams(alloc::format!(
                "{what}: atom ({}, {}) needs a positive finite location and a non-negative mass",
                a.location,
                a.mass
            )));
        }
    }
    let mass: f64 = atoms.iter().map(|a| a.mass).sum();
    let mean: f64 = atoms.iter().map(|a| a.mass * a.location).sum();
    if (mass - 1.0).abs() > MASS_TOL || (mean - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidParams(alloc::format!(
            "{what}: total mass {mass} and mean {mean} must both equal 1"
        )));
    }
    Ok(())
}

/// The `α → 0` limit `ρ₀` of `ρ_supp`: atoms on `(0, ∞)` with unit mass and
/// unit mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedDensity {
    atoms: Vec<Atom>,
}

impl RestrictedDensity {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        check_unit_atoms(&atoms, "restricted density")?;
        Ok(Self { atoms })
    }

    /// `δ₁`, the limit for gaussian and row-orthogonal matrices.
    pub fn unit() -> Self {
        Self {
            atoms: vec![Atom::new(1.0, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `E[1/(1 − zλ₀)]`.
    pub fn mean_inverse(&self, z: f64) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.mass / (1.0 - z * a.location))
            .sum()
    }

    /// `Ψ(z)` from the identity `Ψ(z)·z = E[1/(1 − zλ₀)] − 1`.
    pub fn psi(&self, z: f64) -> f64 {
        // Σ m/(1 − zλ) − 1 = z Σ mλ/(1 − zλ), which avoids the cancellation.
        self.atoms
            .iter()
            .map(|a| a.mass * a.location / (1.0 - z * a.location))
            .sum()
    }

    pub fn is_unit(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| a.mass == 0.0 || (a.location - 1.0).abs() <= 1e-12)
    }
}

/// A user supplied spectrum: `ρ_supp` as atoms, plus the optional `ρ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomSpectrum {
    support: Vec<Atom>,
    restricted: Option<RestrictedDensity>,
}

impl CustomSpectrum {
    pub fn new(support: Vec<Atom>, restricted: Option<RestrictedDensity>) -> Result<Self> {
        check_unit_atoms(&support, "custom spectrum")?;
        Ok(Self {
            support,
            restricted,
        })
    }

    pub fn support(&self) -> &[Atom] {
        &self.support
    }

    pub fn restricted(&self) -> Option<&RestrictedDensity> {
        self.restricted.as_ref()
    }
}

/// Matrix ensembles with known asymptotic spectra.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    /// i.i.d. gaussian entries: Marchenko–Pastur bulk.
    Gaussian,
    /// Rows of a Haar orthogonal matrix: `ρ_supp = δ₁`.
    RowOrthogonal,
    /// Haar rotations around `ρ_supp = ½δ_{1/2} + ½δ_{3/2}`.
    DiscreteTri,
    Custom(CustomSpectrum),
}

impl Ensemble {
    pub fn name(&self) -> &'static str {
        match self {
            Ensemble::Gaussian => "gaussian",
            Ensemble::RowOrthogonal => "row-orthogonal",
            Ensemble::DiscreteTri => "discrete",
            Ensemble::Custom(_) => "custom",
        }
    }

    /// `ρ₀`, if known.
    pub fn restricted_density(&self) -> Option<RestrictedDensity> {
        match self {
            Ensemble::Gaussian | Ensemble::RowOrthogonal => Some(RestrictedDensity::unit()),
            Ensemble::DiscreteTri => Some(RestrictedDensity {
                atoms: vec![Atom::new(0.5, 0.5), Atom::new(1.5, 0.5)],
            }),
            Ensemble::Custom(c) => c.restricted.clone(),
        }
    }

    /// `Ψ(z)` for `z < 0`.
    pub fn psi(&self, z: f64) -> Result<f64> {
        if !(z < 0.0) {
            return Err(domain("z", z, "(-inf, 0)"));
        }
        match self {
            Ensemble::Gaussian | Ensemble::RowOrthogonal => Ok(1.0 / (1.0 - z)),
            Ensemble::DiscreteTri => Ok((4.0 - 3.0 * z) / ((z - 2.0) * (3.0 * z - 2.0))),
            Ensemble::Custom(c) => c
                .restricted
                .as_ref()
                .map(|r| r.psi(z))
                .ok_or(Error::MissingRestrictedDensity),
        }
    }

    /// `∫₀^a Ψ(−u) du`.
    pub fn psi_integral(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(domain("a", a, "[0, inf)"));
        }
        match self {
            Ensemble::Gaussian | Ensemble::RowOrthogonal => Ok(a.ln_1p()),
            Ensemble::DiscreteTri => Ok(0.5 * (0.5 * a).ln_1p() + 0.5 * (1.5 * a).ln_1p()),
            Ensemble::Custom(c) => {
                let r = c.restricted.as_ref().ok_or(Error::MissingRestrictedDensity)?;
                // ∫₀^a λ/(1+uλ) du = ln(1 + aλ).
                Ok(r.atoms.iter().map(|at| at.mass * (a * at.location).ln_1p()).sum())
            }
        }
    }
}

/// The asymptotic spectrum of `B⁻¹AᵀA` for an ensemble at aspect ratio `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    ensemble: Ensemble,
    alpha: f64,
    /// Point masses of `ρ`, including `(1−α)δ₀`; the gaussian bulk is kept
    /// separately.
    atoms: Vec<Atom>,
}

impl SpectralModel {
    pub fn new(ensemble: Ensemble, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(domain("alpha", alpha, "(0, 1]"));
        }
        let mut atoms = Vec::new();
        if alpha < 1.0 {
            atoms.push(Atom::new(0.0, 1.0 - alpha));
        }
        match &ensemble {
            Ensemble::Gaussian => {}
            Ensemble::RowOrthogonal => atoms.push(Atom::new(1.0, alpha)),
            Ensemble::DiscreteTri => {
                atoms.push(Atom::new(0.5, 0.5 * alpha));
                atoms.push(Atom::new(1.5, 0.5 * alpha));
            }
            Ensemble::Custom(c) => atoms.extend(
                c.support
                    .iter()
                    .map(|a| Atom::new(a.location, a.mass * alpha)),
            ),
        }
        Ok(Self {
            ensemble,
            alpha,
            atoms,
        })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Marchenko–Pastur edges `(1 ∓ √α)²` of the gaussian bulk.
    fn mp_edges(&self) -> (f64, f64) {
        let s = self.alpha.sqrt();
        ((1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s))
    }

    /// Density of the continuous part of `ρ` (zero outside the bulk), or
    /// `None` for purely atomic models.
    pub fn continuous_density(&self, lambda: f64) -> Option<f64> {
        match self.ensemble {
            Ensemble::Gaussian => {
                let (lo, hi) = self.mp_edges();
                if lambda <= lo || lambda >= hi {
                    Some(0.0)
                } else {
                    Some(((lambda - lo) * (hi - lambda)).sqrt() / (2.0 * PI * lambda))
                }
            }
            _ => None,
        }
    }

    /// Cumulative distribution `ρ((−∞, λ])`.
    pub fn cdf(&self, lambda: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location <= lambda)
            .map(|a| a.mass)
            .sum();
        let bulk = match self.ensemble {
            Ensemble::Gaussian => {
                let (lo, hi) = self.mp_edges();
                if lambda <= lo {
                    0.0
                } else {
                    let top = lambda.min(hi);
                    // Substitute λ = c − w·cos θ to remove the edge singularities.
                    let (c, w) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                    let theta_max = ((c - top) / w).clamp(-1.0, 1.0).acos();
                    integrate(
                        |t| {
                            let l = c - w * t.cos();
                            let s = w * t.sin();
                            s * s / (2.0 * PI * l)
                        },
                        0.0,
                        theta_max,
                        1e-12,
                    )
                }
            }
            _ => 0.0,
        };
        atoms + bulk
    }

    /// Lowest point of the support.
    pub fn support_infimum(&self) -> f64 {
        let atoms = self
            .atoms
            .iter()
            .filter(|a| a.mass > 0.0)
            .map(|a| a.location)
            .fold(f64::INFINITY, f64::min);
        match self.ensemble {
            Ensemble::Gaussian => atoms.min(self.mp_edges().0),
            _ => atoms,
        }
    }

    /// Raw moments `∫λᵏρ` for `k = 1, 2, 3`.
    fn moments(&self) -> [f64; 3] {
        let a = self.alpha;
        let mut m = [0.0; 3];
        for at in &self.atoms {
            let l = at.location;
            m[0] += at.mass * l;
            m[1] += at.mass * l * l;
            m[2] += at.mass * l * l * l;
        }
        if self.ensemble == Ensemble::Gaussian {
            m[0] += a;
            m[1] += a * (1.0 + a);
            m[2] += a * (1.0 + 3.0 * a + a * a);
        }
        m
    }

    /// `𝒞(z)` for `z` strictly below the support.
    pub fn cauchy_transform(&self, z: f64) -> Result<f64> {
        let inf = self.support_infimum();
        if !(z < inf) {
            return Err(domain("z", z, "below the support infimum"));
        }
        Ok(self.cauchy_unchecked(z))
    }

    fn cauchy_unchecked(&self, z: f64) -> f64 {
        match self.ensemble {
            Ensemble::Gaussian => {
                // Positive root of z·y² + (z − α + 1)·y + 1 = 0, written without
                // cancellation for either sign of the linear coefficient.
                let b = z - self.alpha + 1.0;
                let disc = (b * b - 4.0 * z).sqrt();
                if b >= 0.0 {
                    (b + disc) / (-2.0 * z)
                } else {
                    2.0 / (disc - b)
                }
            }
            _ => self
                .atoms
                .iter()
                .map(|a| a.mass / (a.location - z))
                .sum(),
        }
    }

    /// `𝒞⁻¹(y)` on the branch below the support, by safeguarded bisection.
    pub fn cauchy_inverse(&self, y: f64) -> Result<f64> {
        let inf = self.support_infimum();
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Unattainable {
                value: y,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let mut lo = -1e12;
        while self.cauchy_unchecked(lo) > y {
            lo *= 10.0;
            if !lo.is_finite() {
                return Err(Error::Unattainable {
                    value: y,
                    lo: 0.0,
                    hi: f64::INFINITY,
                });
            }
        }
        let mut gap = 1e-12_f64.max(inf.abs() * 1e-15);
        let mut hi = inf - gap;
        while self.cauchy_unchecked(hi) < y {
            gap *= 1e-3;
            let next = inf - gap;
            if next == hi || next >= inf {
                return Err(Error::Unattainable {
                    value: y,
                    lo: 0.0,
                    hi: self.cauchy_unchecked(hi),
                });
            }
            hi = next;
        }
        for _ in 0..4096 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cauchy_unchecked(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (rl, rh) = (
            (self.cauchy_unchecked(lo) - y).abs(),
            (self.cauchy_unchecked(hi) - y).abs(),
        );
        Ok(if rl <= rh { lo } else { hi })
    }

    /// `ℛ(z)` for `z < 0`, in closed form where available.
    pub fn r_transform(&self, z: f64) -> Result<f64> {
        if !(z < 0.0) || !z.is_finite() {
            return Err(domain("z", z, "(-inf, 0)"));
        }
        let a = self.alpha;
        Ok(match self.ensemble {
            Ensemble::Gaussian => a / (1.0 - z),
            // All eigenvalues sit at one: the R-transform is constant.
            Ensemble::RowOrthogonal if a >= 1.0 => 1.0,
            Ensemble::RowOrthogonal => {
                let s = ((1.0 - z) * (1.0 - z) + 4.0 * a * z).sqrt();
                2.0 * a / (s + 1.0 - z)
            }
            _ => self.r_numeric_unchecked(z)?,
        })
    }

    /// `ℛ(z) = 𝒞⁻¹(−z) − 1/z` through [`Self::cauchy_inverse`], for every model.
    ///
    /// Close to the origin the subtraction loses all digits, so for
    /// `|z| < 1e-4` the free-cumulant series `κ₁ + κ₂z + κ₃z²` is used.
    pub fn r_transform_numeric(&self, z: f64) -> Result<f64> {
        if !(z < 0.0) || !z.is_finite() {
            return Err(domain("z", z, "(-inf, 0)"));
        }
        self.r_numeric_unchecked(z)
    }

    fn r_numeric_unchecked(&self, z: f64) -> Result<f64> {
        if z > -1e-4 {
            let [m1, m2, m3] = self.moments();
            let k2 = m2 - m1 * m1;
            let k3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1;
            return Ok(m1 + z * (k2 + z * k3));
        }
        Ok(self.cauchy_inverse(-z)? - 1.0 / z)
    }

    /// `ℛ(0) = ∫λρ = α`.
    pub fn r_transform_at_zero(&self) -> f64 {
        self.moments()[0]
    }

    /// `∫₀^a ℛ(−x) dx`.
    pub fn r_transform_integral(&self, a: f64) -> Result<f64> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(domain("a", a, "[0, inf)"));
        }
        if a == 0.0 {
            return Ok(0.0);
        }
        match self.ensemble {
            Ensemble::Gaussian => Ok(self.alpha * a.ln_1p()),
            _ => {
                // Integrand is positive and bounded by α, so failures only
                // come from the inversion, which cannot fail for x > 0.
                let value = integrate(
                    |x| self.r_transform(-x).unwrap_or(f64::NAN),
                    0.0,
                    a,
                    1e-11,
                );
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(domain("a", a, "range where the R-transform is finite"))
                }
            }
        }
    }

    /// `Ψ(z)` of the ensemble (independent of `α`).
    pub fn psi(&self, z: f64) -> Result<f64> {
        self.ensemble.psi(z)
    }

    /// `∫₀^a Ψ(−u) du`.
    pub fn psi_integral(&self, a: f64) -> Result<f64> {
        self.ensemble.psi_integral(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn builtin() -> [Ensemble; 3] {
        [Ensemble::Gaussian, Ensemble::RowOrthogonal, Ensemble::DiscreteTri]
    }

    /// `𝒞` by direct quadrature of the Marchenko–Pastur bulk plus the atom.
    fn gaussian_cauchy_oracle(alpha: f64, z: f64) -> f64 {
        let model = SpectralModel::new(Ensemble::Gaussian, alpha).unwrap();
        let (lo, hi) = model.mp_edges();
        let (c, w) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let bulk = integrate(
            |t| {
                let l = c - w * t.cos();
                let s = w * t.sin();
                s * s / (2.0 * PI * l) / (l - z)
            },
            0.0,
            PI,
            1e-13,
        );
        let atom = if alpha < 1.0 { (1.0 - alpha) / -z } else { 0.0 };
        bulk + atom
    }

    #[test]
    fn cauchy_atom_arithmetic() {
        let ortho = SpectralModel::new(Ensemble::RowOrthogonal, 0.5).unwrap();
        assert_abs_diff_eq!(ortho.cauchy_transform(-1.0).unwrap(), 0.75, epsilon = 1e-15);
        let tri = SpectralModel::new(Ensemble::DiscreteTri, 0.5).unwrap();
        let expected = 0.5 + 0.25 / 1.5 + 0.25 / 2.5;
        assert_abs_diff_eq!(tri.cauchy_transform(-1.0).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.766_666_666_666_666_7, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_cauchy_matches_bulk_quadrature() {
        for &alpha in &[0.05, 0.3, 0.5, 1.0] {
            for &z in &[-30.0, -10.0, -1.0, -0.1, -1e-3] {
                let m = SpectralModel::new(Ensemble::Gaussian, alpha).unwrap();
                let got = m.cauchy_transform(z).unwrap();
                let want = gaussian_cauchy_oracle(alpha, z);
                assert!((got - want).abs() <= 1e-9 * want.max(1.0), "α={alpha} z={z}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn densities_have_unit_mass_and_mean_alpha() {
        for e in builtin() {
            for &alpha in &[0.1, 0.5, 1.0] {
                let m = SpectralModel::new(e.clone(), alpha).unwrap();
                assert_abs_diff_eq!(m.cdf(1e3), 1.0, epsilon = 1e-10);
                assert_abs_diff_eq!(m.r_transform_at_zero(), alpha, epsilon = 1e-15);
            }
        }
        let g = SpectralModel::new(Ensemble::Gaussian, 0.3).unwrap();
        let (lo, hi) = g.mp_edges();
        let mean = integrate(|l| l * g.continuous_density(l).unwrap(), lo, hi, 1e-12);
        assert_abs_diff_eq!(mean, 0.3, epsilon = 1e-8);
    }

    #[test]
    fn cauchy_domain_is_enforced() {
        let m = SpectralModel::new(Ensemble::DiscreteTri, 0.5).unwrap();
        assert!(matches!(m.cauchy_transform(0.0), Err(Error::Domain { .. })));
        let full = SpectralModel::new(Ensemble::DiscreteTri, 1.0).unwrap();
        assert_eq!(full.support_infimum(), 0.5);
        assert!(full.cauchy_transform(0.25).is_ok());
        assert!(full.cauchy_transform(0.6).is_err());
        assert!(SpectralModel::new(Ensemble::Gaussian, 1.5).is_err());
    }

    #[test]
    fn cauchy_inverse_examples() {
        let ortho = SpectralModel::new(Ensemble::RowOrthogonal, 0.5).unwrap();
        assert_abs_diff_eq!(ortho.cauchy_inverse(0.75).unwrap(), -1.0, epsilon = 1e-12);
        for e in builtin() {
            let m = SpectralModel::new(e, 0.37).unwrap();
            let y = m.cauchy_transform(-2.0).unwrap();
            assert_abs_diff_eq!(m.cauchy_inverse(y).unwrap(), -2.0, epsilon = 1e-10);
        }
        let tri = SpectralModel::new(Ensemble::DiscreteTri, 0.25).unwrap();
        let z = tri.cauchy_inverse(0.1).unwrap();
        assert!((tri.cauchy_transform(z).unwrap() - 0.1).abs() <= 1e-12);
        assert!(matches!(tri.cauchy_inverse(-1.0), Err(Error::Unattainable { .. })));
    }

    #[test]
    fn inversion_identity_on_log_grid() {
        for e in builtin() {
            for &alpha in &[0.02, 0.3, 1.0] {
                let m = SpectralModel::new(e.clone(), alpha).unwrap();
                for k in -40..=40 {
                    let y = 10f64.powf(k as f64 / 5.0);
                    let z = m.cauchy_inverse(y).unwrap();
                    let back = m.cauchy_transform(z).unwrap();
                    // dy/dz grows like y², so the round-trip error does too.
                    let tol = 1e-10 * y.max(1.0) + 1e-15 * y * y;
                    assert!((back - y).abs() <= tol, "{e:?} α={alpha} y={y}: {back}");
                }
            }
        }
    }

    #[test]
    fn r_transform_examples() {
        let g = SpectralModel::new(Ensemble::Gaussian, 0.5).unwrap();
        assert_abs_diff_eq!(g.r_transform(-1.0).unwrap(), 0.25, epsilon = 1e-15);
        let o = SpectralModel::new(Ensemble::RowOrthogonal, 0.5).unwrap();
        assert_abs_diff_eq!(o.r_transform(-1.0).unwrap(), 1.0 - 0.5 * 2f64.sqrt(), epsilon = 1e-15);
        for &alpha in &[0.1, 0.7] {
            let o = SpectralModel::new(Ensemble::RowOrthogonal, alpha).unwrap();
            assert_abs_diff_eq!(o.r_transform(-1e-12).unwrap(), alpha, epsilon = 1e-11);
        }
        assert!(o.r_transform(0.0).is_err());
        assert!(o.r_transform(0.5).is_err());
        let t = SpectralModel::new(Ensemble::DiscreteTri, 0.1).unwrap();
        let r = t.r_transform(-3.0).unwrap();
        let direct = t.cauchy_inverse(3.0).unwrap() + 1.0 / 3.0;
        assert_abs_diff_eq!(r, direct, epsilon = 1e-10);
    }

    #[test]
    fn closed_forms_agree_with_inversion() {
        for e in [Ensemble::Gaussian, Ensemble::RowOrthogonal] {
            for &alpha in &[0.01, 0.2, 0.5, 1.0] {
                let m = SpectralModel::new(e.clone(), alpha).unwrap();
                for k in 1..=300 {
                    let z = -0.1 * k as f64;
                    let a = m.r_transform(z).unwrap();
                    let n = m.r_transform_numeric(z).unwrap();
                    assert!((a - n).abs() <= 1e-8, "{e:?} α={alpha} z={z}: {a} vs {n}");
                }
                for &z in &[-1e-5, -1e-7, -1e-10] {
                    let a = m.r_transform(z).unwrap();
                    assert!((a - m.r_transform_numeric(z).unwrap()).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn r_transform_is_increasing() {
        for e in builtin() {
            for &alpha in &[0.05, 0.33, 1.0] {
                let m = SpectralModel::new(e.clone(), alpha).unwrap();
                let values: Vec<f64> = (1..=300)
                    .rev()
                    .map(|k| m.r_transform(-0.1 * k as f64).unwrap())
                    .collect();
                if matches!(e, Ensemble::RowOrthogonal) && alpha == 1.0 {
                    assert!(values.iter().all(|&v| v == 1.0));
                } else {
                    assert!(values.windows(2).all(|w| w[1] > w[0]), "{e:?} α={alpha}");
                }
            }
        }
    }

    #[test]
    fn r_transform_integral_examples() {
        let g = SpectralModel::new(Ensemble::Gaussian, 1.0).unwrap();
        assert_abs_diff_eq!(g.r_transform_integral(15.0).unwrap(), 16f64.ln(), epsilon = 1e-12);
        assert_eq!(g.r_transform_integral(0.0).unwrap(), 0.0);
        for e in builtin() {
            let m = SpectralModel::new(e, 0.4).unwrap();
            let vals: Vec<f64> = [0.0, 0.5, 1.0, 5.0, 20.0]
                .iter()
                .map(|&a| m.r_transform_integral(a).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]));
        }
        // Closed-form antiderivative for row-orthogonal cross-checked against
        // quadrature of the numeric (inversion based) R-transform.
        let o = SpectralModel::new(Ensemble::RowOrthogonal, 0.3).unwrap();
        let num = integrate(|x| o.r_transform_numeric(-x).unwrap(), 0.0, 7.0, 1e-12);
        let got = o.r_transform_integral(7.0).unwrap();
        assert!((got - num).abs() <= 1e-9 * num);
    }

    #[test]
    fn psi_examples() {
        let tri = Ensemble::DiscreteTri;
        assert_abs_diff_eq!(tri.psi(-1.0).unwrap(), 7.0 / 15.0, epsilon = 1e-15);
        let rho0 = tri.restricted_density().unwrap();
        let identity = 0.5 / (1.0 + 0.5) + 0.5 / (1.0 + 1.5) - 1.0;
        assert_abs_diff_eq!(identity, -7.0 / 15.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho0.mean_inverse(-1.0) - 1.0, identity, epsilon = 1e-15);
        assert_abs_diff_eq!(Ensemble::Gaussian.psi(-15.0).unwrap(), 0.0625, epsilon = 1e-15);
        let custom = Ensemble::Custom(CustomSpectrum::new(vec![Atom::new(1.0, 1.0)], None).unwrap());
        assert_eq!(custom.psi(-1.0), Err(Error::MissingRestrictedDensity));
    }

    #[test]
    fn psi_identity_and_bound() {
        for e in builtin() {
            let rho0 = e.restricted_density().unwrap();
            for k in 1..=300 {
                let z = -0.1 * k as f64;
                let psi = e.psi(z).unwrap();
                assert!((psi * z - rho0.mean_inverse(z) + 1.0).abs() <= 1e-10);
                let bound = 1.0 / (1.0 - z);
                match e {
                    Ensemble::DiscreteTri => assert!(psi < bound - 1e-6),
                    _ => assert!((psi - bound).abs() <= 1e-12),
                }
            }
        }
    }

    #[test]
    fn psi_integral_examples() {
        assert_abs_diff_eq!(Ensemble::Gaussian.psi_integral(15.0).unwrap(), 16f64.ln(), epsilon = 1e-14);
        let want = 0.5 * (17.0f64 / 2.0).ln() + 0.5 * (47.0f64 / 2.0).ln();
        assert_abs_diff_eq!(want, 2.648_533, epsilon = 1e-6);
        let tri = Ensemble::DiscreteTri;
        assert_abs_diff_eq!(tri.psi_integral(15.0).unwrap(), want, epsilon = 1e-13);
        let quad = integrate(|u| tri.psi(-u).unwrap(), 0.0, 15.0, 1e-12);
        assert_abs_diff_eq!(quad, want, epsilon = 1e-9);
        assert_eq!(tri.psi_integral(0.0).unwrap(), 0.0);
        let custom = Ensemble::Custom(
            CustomSpectrum::new(
                vec![Atom::new(0.5, 0.5), Atom::new(1.5, 0.5)],
                tri.restricted_density(),
            )
            .unwrap(),
        );
        assert_abs_diff_eq!(custom.psi_integral(15.0).unwrap(), want, epsilon = 1e-13);
        assert_abs_diff_eq!(custom.psi(-2.5).unwrap(), tri.psi(-2.5).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn small_alpha_expansion_is_linear() {
        for e in builtin() {
            for &z in &[-0.5, -3.0, -15.0] {
                let psi = e.psi(z).unwrap();
                let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
                    .iter()
                    .map(|&a| {
                        let m = SpectralModel::new(e.clone(), a).unwrap();
                        (m.r_transform(z).unwrap() / a - psi).abs()
                    })
                    .collect();
                if errs.iter().all(|&x| x < 1e-14) {
                    continue;
                }
                for w in errs.windows(2) {
                    let ratio = w[1] / w[0];
                    assert!((0.07..0.13).contains(&ratio), "{e:?} z={z}: {errs:?}");
                }
            }
        }
    }

    #[test]
    fn r_transform_at_zero_examples() {
        let cases = [
            (Ensemble::Gaussian, 0.3),
            (Ensemble::RowOrthogonal, 0.5),
            (Ensemble::DiscreteTri, 0.2),
        ];
        for (e, a) in cases {
            let m = SpectralModel::new(e, a).unwrap();
            assert_abs_diff_eq!(m.r_transform_at_zero(), a, epsilon = 1e-15);
        }
    }

    #[test]
    fn custom_spectrum_validation() {
        assert!(CustomSpectrum::new(vec![Atom::new(2.0, 1.0)], None).is_err());
        assert!(CustomSpectrum::new(vec![Atom::new(1.0, 0.5)], None).is_err());
        assert!(RestrictedDensity::new(vec![Atom::new(-1.0, 1.0)]).is_err());
        let c = CustomSpectrum::new(vec![Atom::new(0.5, 0.5), Atom::new(1.5, 0.5)], None).unwrap();
        let m = SpectralModel::new(Ensemble::Custom(c), 0.25).unwrap();
        let tri = SpectralModel::new(Ensemble::DiscreteTri, 0.25).unwrap();
        for &z in &[-0.3, -2.0, -20.0] {
            assert_abs_diff_eq!(m.r_transform(z).unwrap(), tri.r_transform(z).unwrap(), epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cauchy_is_increasing_and_positive(alpha in 0.01f64..1.0, z1 in -50.0f64..-1e-3, dz in 1e-4f64..5.0) {
            for e in builtin() {
                let m = SpectralModel::new(e, alpha).unwrap();
                let z2 = (z1 + dz).min(-1e-6);
                prop_assume!(z2 > z1);
                let (a, b) = (m.cauchy_transform(z1).unwrap(), m.cauchy_transform(z2).unwrap());
                prop_assert!(a > 0.0 && b > a);
            }
        }

        #[test]
        fn inverse_roundtrip(alpha in 0.01f64..=1.0, z in -100.0f64..-1e-3) {
            for e in builtin() {
                let m = SpectralModel::new(e, alpha).unwrap();
                let y = m.cauchy_transform(z).unwrap();
                let back = m.cauchy_inverse(y).unwrap();
                prop_assert!((back - z).abs() <= 1e-9 * z.abs().max(1.0));
            }
        }

        #[test]
        fn r_transform_bounded_by_alpha(alpha in 0.01f64..=1.0, z in -100.0f64..-1e-3) {
            for e in builtin() {
                let m = SpectralModel::new(e, alpha).unwrap();
                let r = m.r_transform(z).unwrap();
                prop_assert!(r > 0.0 && r < alpha);
            }
        }
    }
}
