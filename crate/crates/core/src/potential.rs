//! The replica-symmetric potential `Φ_B(E) = S_B(Σ(E)) − U_B(E)`, its
//! maxima, and the algorithmic (`R_VAMP`) and information-theoretic (`R_IT`)
//! thresholds, at finite section size and in the `B → ∞` limit.
//!
//! `S_B = E ln(1 + Σ_{j≥2} e_j)` uses the natural logarithm, and
//! `U_B(E) = (B/2)∫₀^{snr·E} ℛ(−x)dx − E/(2Σ(E)²)`. With these conventions
//! `∂_E Φ_B = m′(E)(E − T(E))/2`, so the maxima of `Φ_B` are exactly the
//! stable fixed points of state evolution.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::free_probability::Ensemble;
use crate::math::golden_section_max;
use crate::mc::{Estimate, GaussianBatch};
use crate::state_evolution::{energy_grid, FixedPoint, SeParams, StateEvolution};

/// `U_B(E)`, computed by quadrature.
pub fn energy_term(se: &StateEvolution, e: f64) -> Result<f64> {
    check_energy(se, e)?;
    if e == 0.0 {
        return Ok(0.0);
    }
    let p = se.params();
    let b = p.section_size as f64;
    let integral = se.model().r_transform_integral(p.snr * e)?;
    Ok(0.5 * b * integral - 0.5 * e * se.precision(e)?)
}

fn check_energy(se: &StateEvolution, e: f64) -> Result<()> {
    if (0.0..=se.prior_variance()).contains(&e) {
        Ok(())
    } else {
        Err(domain("E", e, "[0, 1 - 1/B]"))
    }
}

/// `Φ_B(E)` with the Monte Carlo standard error of `S_B`.
pub fn potential_phi(se: &StateEvolution, e: f64) -> Result<Estimate> {
    let u = energy_term(se, e)?;
    let s = se.channel().entropy(se.precision(e)?);
    Ok(Estimate {
        mean: s.mean - u,
        stderr: s.stderr,
    })
}

/// `Φ_B(e_a) − Φ_B(e_b)` estimated on paired samples.
pub fn potential_difference(se: &StateEvolution, e_a: f64, e_b: f64) -> Result<Estimate> {
    let du = energy_term(se, e_a)? - energy_term(se, e_b)?;
    let ds = se
        .channel()
        .entropy_difference(se.precision(e_a)?, se.precision(e_b)?);
    Ok(Estimate {
        mean: ds.mean - du,
        stderr: ds.stderr,
    })
}

/// Central difference of `Φ_B` at `e` with half-width `h`, clipped to the
/// domain; the standard error comes from the paired samples.
pub fn dphi(se: &StateEvolution, e: f64, h: f64) -> Result<Estimate> {
    check_energy(se, e)?;
    if !(h > 0.0) {
        return Err(domain("h", h, "(0, inf)"));
    }
    let lo = (e - h).max(0.0);
    let hi = (e + h).min(se.prior_variance());
    let d = potential_difference(se, hi, lo)?;
    let w = hi - lo;
    Ok(Estimate {
        mean: d.mean / w,
        stderr: d.stderr / w,
    })
}

/// `∂_E Φ_B` at a Monte Carlo fixed point `e` of `T`. The standard error adds
/// the uncertainty of the fixed point itself, `m′(E)·stderr(T)/2`, and the
/// round-off of the difference quotient to that of the central difference.
pub fn dphi_at_fixed_point(se: &StateEvolution, e: f64) -> Result<Estimate> {
    let h = (0.5 * e).clamp(1e-9, 1e-3);
    let d = dphi(se, e, h)?;
    let lo = (e - h).max(0.0);
    let hi = (e + h).min(se.prior_variance());
    let slope = (se.precision(hi)? - se.precision(lo)?) / (hi - lo);
    let t = se.se_operator_t(e)?;
    let round_off = 8.0 * f64::EPSILON * (1.0 + potential_phi(se, e)?.mean.abs()) / (hi - lo);
    Ok(Estimate {
        mean: d.mean,
        stderr: d.stderr.hypot(0.5 * slope * t.stderr).hypot(round_off),
    })
}

/// A located maximum of `Φ_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub energy: f64,
    pub value: f64,
    pub stderr: f64,
}

/// `Φ_B` sampled on an energy grid, with its maxima sorted by energy.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub maxima: Vec<Maximum>,
    /// More than two maxima survived the noise filter.
    pub extra_maxima: bool,
}

/// Accepted maxima must rise above the separating valley by this many
/// paired standard errors.
const PROMINENCE: f64 = 3.0;

/// Samples `Φ_B` on `grid_size` points, keeps local maxima that stand out of
/// the Monte Carlo noise, and refines each by golden-section search.
pub fn find_maxima(se: &StateEvolution, grid_size: usize) -> Result<PotentialCurve> {
    let grid = energy_grid(se.params().section_size, grid_size);
    let mut values = Vec::with_capacity(grid.len());
    let mut stderrs = Vec::with_capacity(grid.len());
    for &e in &grid {
        let p = potential_phi(se, e)?;
        values.push(p.mean);
        stderrs.push(p.stderr);
    }
    let n = grid.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || values[i] > values[i - 1]) && (i + 1 == n || values[i] >= values[i + 1]))
        .collect();

    // Drop the lower of two neighbouring peaks while the valley between them
    // is within noise of either one.
    'prune: loop {
        for k in 0..peaks.len().saturating_sub(1) {
            let (i, j) = (peaks[k], peaks[k + 1]);
            let valley = (i..=j)
                .min_by(|&a, &b| values[a].total_cmp(&values[b]))
                .unwrap_or(i);
            let di = potential_difference(se, grid[i], grid[valley])?;
            let dj = potential_difference(se, grid[j], grid[valley])?;
            let flat = |d: Estimate| d.mean <= PROMINENCE * d.stderr;
            if flat(di) || flat(dj) {
                let lower = if values[i] < values[j] { k } else { k + 1 };
                peaks.remove(lower);
                continue 'prune;
            }
        }
        break;
    }

    let top = se.prior_variance();
    let mut maxima = Vec::with_capacity(peaks.len());
    for &i in &peaks {
        let a = if i == 0 { 0.0 } else { grid[i - 1] };
        let b = if i + 1 == n { top } else { grid[i + 1] };
        let mut failure = None;
        let (energy, _) = golden_section_max(
            |e| match potential_phi(se, e) {
                Ok(p) => p.mean,
                Err(err) => {
                    failure = Some(err);
                    f64::NEG_INFINITY
                }
            },
            a,
            b,
            1e-4 * (b - a),
        );
        if let Some(err) = failure {
            return Err(err);
        }
        let p = potential_phi(se, energy)?;
        maxima.push(Maximum {
            energy,
            value: p.mean,
            stderr: p.stderr,
        });
    }
    Ok(PotentialCurve {
        extra_maxima: maxima.len() > 2,
        grid,
        values,
        stderrs,
        maxima,
    })
}

/// Settings of the threshold searches.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOptions {
    pub mc_samples: usize,
    pub seed: u64,
    /// Energy grid used for the fixed-point scan.
    pub grid_size: usize,
    /// Bisection tolerance on `R`.
    pub tol: f64,
    /// Lower end of the rate bracket (raised to keep `α ≤ 1`).
    pub r_min: f64,
    /// Iteration cap of the SE run used as a cross-check.
    pub se_max_iter: usize,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            mc_samples: 100_000,
            seed: 0,
            grid_size: 128,
            tol: 1e-3,
            r_min: 0.1,
            se_max_iter: 2000,
        }
    }
}

/// One predicate evaluation of a bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionStep {
    pub rate: f64,
    pub outcome: bool,
}

/// Both thresholds for one configuration. `section_size` is `None` in the
/// `B → ∞` limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub r_vamp: f64,
    pub r_it: f64,
    pub section_size: Option<usize>,
    pub snr: f64,
    pub ensemble: Ensemble,
    pub capacity: f64,
    /// No rate with two coexisting maxima was found above `r_vamp`.
    pub no_gap: bool,
    /// SE has a single fixed point all the way up to capacity.
    pub unique_at_capacity: bool,
    pub vamp_history: Vec<BisectionStep>,
    pub it_history: Vec<BisectionStep>,
}

/// Shannon capacity `½ log₂(1 + snr)` of the real AWGN channel.
pub fn capacity(snr: f64) -> f64 {
    0.5 * snr.ln_1p() / LN_2
}

fn check_snr(snr: f64) -> Result<()> {
    if snr > 0.0 && snr.is_finite() {
        Ok(())
    } else {
        Err(domain("snr", snr, "(0, inf)"))
    }
}

/// `R_VAMP(∞) = snr·Ψ(−snr)/(2 ln 2)`.
pub fn r_vamp_inf(snr: f64, ensemble: &Ensemble) -> Result<f64> {
    check_snr(snr)?;
    Ok(snr * ensemble.psi(-snr)? / (2.0 * LN_2))
}

/// `R_IT(∞) = ∫₀^snr Ψ(−u)du/(2 ln 2)`.
pub fn r_it_inf(snr: f64, ensemble: &Ensemble) -> Result<f64> {
    check_snr(snr)?;
    Ok(ensemble.psi_integral(snr)? / (2.0 * LN_2))
}

/// `(C − R_IT(∞), snr/(2(1 + snr) ln 2) − R_VAMP(∞))`: both vanish exactly
/// when the restricted spectrum is a point mass at one.
pub fn spectral_criterion_gap(snr: f64, ensemble: &Ensemble) -> Result<(f64, f64)> {
    let vamp_bound = snr / (2.0 * (1.0 + snr) * LN_2);
    Ok((
        capacity(snr) - r_it_inf(snr, ensemble)?,
        vamp_bound - r_vamp_inf(snr, ensemble)?,
    ))
}

/// The rescaled limit `Φ̃(E) = lim Φ_B(E)/ln B` at fixed rate:
/// `max(1, s/2) − (1 − E)s/2 − ∫₀^{snr·E} Ψ(−u)du/(2R ln 2)` with
/// `s = snr·Ψ(−snr·E)/(R ln 2)`.
pub fn phi_tilde(e: f64, snr: f64, rate: f64, ensemble: &Ensemble) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(domain("E", e, "[0, 1]"));
    }
    check_snr(snr)?;
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(domain("R", rate, "(0, inf)"));
    }
    // Ψ(0) is the mean of the restricted density, which is one.
    let psi = if e == 0.0 { 1.0 } else { ensemble.psi(-snr * e)? };
    let s = snr * psi / (rate * LN_2);
    let integral = ensemble.psi_integral(snr * e)? / (2.0 * rate * LN_2);
    Ok((0.5 * s).max(1.0) - 0.5 * (1.0 - e) * s - integral)
}

/// Both thresholds in the `B → ∞` limit.
pub fn large_b_thresholds(snr: f64, ensemble: &Ensemble) -> Result<Thresholds> {
    let r_vamp = r_vamp_inf(snr, ensemble)?;
    let r_it = r_it_inf(snr, ensemble)?;
    Ok(Thresholds {
        r_vamp,
        r_it,
        section_size: None,
        snr,
        ensemble: ensemble.clone(),
        capacity: capacity(snr),
        no_gap: r_it - r_vamp <= 0.0,
        unique_at_capacity: false,
        vamp_history: Vec::new(),
        it_history: Vec::new(),
    })
}

/// SE at varying rate, all on one frozen noise batch.
struct RateScan {
    section_size: usize,
    snr: f64,
    ensemble: Ensemble,
    opts: ThresholdOptions,
    batch: Arc<GaussianBatch>,
    grid: Vec<f64>,
}

impl RateScan {
    fn new(section_size: usize, snr: f64, ensemble: &Ensemble, opts: &ThresholdOptions) -> Result<Self> {
        check_snr(snr)?;
        if !(opts.tol > 0.0) || !(opts.r_min > 0.0) {
            return Err(Error::InvalidParams("tol and r_min must be positive".into()));
        }
        let mut params = SeParams::new(section_size, snr, capacity(snr), ensemble.clone());
        params.mc_samples = opts.mc_samples;
        params.seed = opts.seed;
        params.validate()?;
        Ok(Self {
            section_size,
            snr,
            ensemble: ensemble.clone(),
            batch: params.batch(),
            grid: energy_grid(section_size, opts.grid_size),
            opts: opts.clone(),
        })
    }

    /// Smallest admissible rate: `α ≤ 1` needs `R ≥ log₂B/B`.
    fn r_lo(&self) -> f64 {
        let b = self.section_size as f64;
        self.opts.r_min.max(b.log2() / b * (1.0 + 1e-9))
    }

    fn se(&self, rate: f64) -> Result<StateEvolution> {
        let mut p = SeParams::new(self.section_size, self.snr, rate, self.ensemble.clone());
        p.mc_samples = self.opts.mc_samples;
        p.seed = self.opts.seed;
        p.max_iter = self.opts.se_max_iter;
        StateEvolution::with_batch(p, self.batch.clone())
    }

    fn stable_points(se: &StateEvolution, grid: &[f64]) -> Result<Vec<FixedPoint>> {
        Ok(se.fixed_points(grid)?.into_iter().filter(|f| f.stable).collect())
    }

    /// Number of stable zeros of `T(E) − E` seen by the grid scan alone.
    fn stable_count(&self, rate: f64) -> Result<usize> {
        let se = self.se(rate)?;
        let mut count = 0;
        let mut prev = 1.0;
        for &e in &self.grid {
            let v = se.se_operator_t(e)?.mean - e;
            if prev > 0.0 && v <= 0.0 {
                count += 1;
            }
            prev = v;
        }
        Ok(count)
    }

    /// Where SE started from `E = 1 − 1/B` ends.
    fn se_end(&self, rate: f64) -> Result<f64> {
        Ok(self.se(rate)?.run_se()?.fixed_point)
    }

    /// Two maxima coexist and the low-error one is the global maximum.
    /// `None` when fewer than two maxima exist.
    fn good_dominates(&self, rate: f64) -> Result<Option<bool>> {
        let se = self.se(rate)?;
        let stable = Self::stable_points(&se, &self.grid)?;
        match (stable.first(), stable.last()) {
            (Some(good), Some(bad)) if stable.len() >= 2 => {
                Ok(Some(potential_difference(&se, good.energy, bad.energy)?.mean > 0.0))
            }
            _ => Ok(None),
        }
    }
}

/// Coarse rate steps used to find the coexistence window.
const RATE_SCAN_STEPS: usize = 40;

/// Bisection of a predicate that holds at `lo` and fails at `hi`.
fn bisect<P: FnMut(f64) -> Result<bool>>(
    mut pred: P,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    history: &mut Vec<BisectionStep>,
) -> Result<(f64, f64)> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let outcome = pred(mid)?;
        history.push(BisectionStep { rate: mid, outcome });
        if outcome {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// `R_VAMP(B)`: the largest rate at which SE has a unique fixed point,
/// bisected over `[max(r_min, log₂B/B), C]`.
pub fn r_vamp_threshold(
    section_size: usize,
    snr: f64,
    ensemble: &Ensemble,
    opts: &ThresholdOptions,
) -> Result<Thresholds> {
    let scan = RateScan::new(section_size, snr, ensemble, opts)?;
    vamp_search(&scan)
}

fn vamp_search(scan: &RateScan) -> Result<Thresholds> {
    let (lo, hi) = (scan.r_lo(), capacity(scan.snr));
    let mut result = Thresholds {
        r_vamp: hi,
        r_it: hi,
        section_size: Some(scan.section_size),
        snr: scan.snr,
        ensemble: scan.ensemble.clone(),
        capacity: hi,
        no_gap: false,
        unique_at_capacity: false,
        vamp_history: Vec::new(),
        it_history: Vec::new(),
    };
    if lo >= hi {
        return Err(Error::Bracket {
            lo,
            hi,
            lo_value: false,
            hi_value: false,
        });
    }
    let mut history = Vec::new();
    let at_lo = scan.stable_count(lo)? == 1;
    history.push(BisectionStep { rate: lo, outcome: at_lo });
    if !at_lo {
        return Err(Error::Bracket {
            lo,
            hi,
            lo_value: false,
            hi_value: false,
        });
    }

    // Uniqueness holds both below R_VAMP (good point only) and far above it
    // (bad point only), so first locate a rate where two stable points
    // coexist and bisect below it.
    let mut prev = lo;
    for k in 1..=RATE_SCAN_STEPS {
        let r = lo + (hi - lo) * k as f64 / RATE_SCAN_STEPS as f64;
        let unique = scan.stable_count(r)? == 1;
        history.push(BisectionStep { rate: r, outcome: unique });
        if !unique {
            let (a, b) = bisect(|x| Ok(scan.stable_count(x)? == 1), prev, r, scan.opts.tol, &mut history)?;
            result.r_vamp = 0.5 * (a + b);
            result.r_it = result.r_vamp;
            result.vamp_history = history;
            return Ok(result);
        }
        prev = r;
    }

    // No coexistence window: the SE end point jumps from the good to the bad
    // branch directly, or never leaves the good one.
    result.no_gap = true;
    let (e_lo, e_hi) = (scan.se_end(lo)?, scan.se_end(hi)?);
    if e_hi <= 10.0 * e_lo + 1e-3 {
        result.unique_at_capacity = true;
        result.vamp_history = history;
        return Ok(result);
    }
    let cut = (e_lo.max(1e-12) * e_hi).sqrt();
    let (a, b) = bisect(|x| Ok(scan.se_end(x)? <= cut), lo, hi, scan.opts.tol, &mut history)?;
    result.r_vamp = 0.5 * (a + b);
    result.r_it = result.r_vamp;
    result.vamp_history = history;
    Ok(result)
}

/// `R_VAMP(B)` and `R_IT(B)`. The latter bisects, above `R_VAMP`, the sign of
/// `Φ_B(E_good) − Φ_B(E_bad)` between the two stable fixed points.
pub fn thresholds(
    section_size: usize,
    snr: f64,
    ensemble: &Ensemble,
    opts: &ThresholdOptions,
) -> Result<Thresholds> {
    let scan = RateScan::new(section_size, snr, ensemble, opts)?;
    let mut out = vamp_search(&scan)?;
    if out.no_gap {
        return Ok(out);
    }
    let tol = scan.opts.tol;
    let lo = (out.r_vamp + tol).min(out.capacity);
    let mut history = Vec::new();
    let first = scan.good_dominates(lo)?;
    history.push(BisectionStep {
        rate: lo,
        outcome: first == Some(true),
    });
    match first {
        None => {
            out.no_gap = true;
            out.it_history = history;
            return Ok(out);
        }
        Some(false) => {
            out.it_history = history;
            return Ok(out);
        }
        Some(true) => {}
    }
    let hi = out.capacity;
    let at_hi = scan.good_dominates(hi)? == Some(true);
    history.push(BisectionStep { rate: hi, outcome: at_hi });
    if at_hi {
        out.r_it = hi;
        out.it_history = history;
        return Ok(out);
    }
    let (a, b) = bisect(
        |r| Ok(scan.good_dominates(r)? == Some(true)),
        lo,
        hi,
        tol,
        &mut history,
    )?;
    out.r_it = 0.5 * (a + b);
    out.it_history = history;
    Ok(out)
}

/// `R_IT(B)`; see [`thresholds`].
pub fn r_it_threshold(
    section_size: usize,
    snr: f64,
    ensemble: &Ensemble,
    opts: &ThresholdOptions,
) -> Result<Thresholds> {
    thresholds(section_size, snr, ensemble, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn se(b: usize, snr: f64, rate: f64, e: Ensemble, samples: usize) -> StateEvolution {
        let mut p = SeParams::new(b, snr, rate, e);
        p.mc_samples = samples;
        p.seed = 3;
        StateEvolution::new(p).unwrap()
    }

    #[test]
    fn capacity_examples() {
        assert_abs_diff_eq!(capacity(15.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(capacity(1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(capacity(3.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn large_b_closed_forms() {
        for e in [Ensemble::Gaussian, Ensemble::RowOrthogonal] {
            assert_abs_diff_eq!(r_it_inf(15.0, &e).unwrap(), 2.0, epsilon = 1e-9);
            let (d_it, d_vamp) = spectral_criterion_gap(15.0, &e).unwrap();
            assert!(d_it.abs() <= 1e-12 && d_vamp.abs() <= 1e-12);
        }
        let g = r_vamp_inf(15.0, &Ensemble::Gaussian).unwrap();
        assert_abs_diff_eq!(g, 15.0 / 16.0 / (2.0 * LN_2), epsilon = 1e-15);
        assert_abs_diff_eq!(g, 0.676_263, epsilon = 1e-6);
        let tri = Ensemble::DiscreteTri;
        let it = r_it_inf(15.0, &tri).unwrap();
        assert_abs_diff_eq!(it, 1.9105, epsilon = 5e-3);
        let direct = (0.5 * (17.0f64 / 2.0).ln() + 0.5 * (47.0f64 / 2.0).ln()) / (2.0 * LN_2);
        assert_abs_diff_eq!(it, direct, epsilon = 1e-14);
        assert_abs_diff_eq!(r_vamp_inf(15.0, &tri).unwrap(), 15.0 * 49.0 / 799.0 / (2.0 * LN_2), epsilon = 1e-14);
        let (d_it, d_vamp) = spectral_criterion_gap(15.0, &tri).unwrap();
        assert_abs_diff_eq!(d_it, 2.0 - direct, epsilon = 1e-14);
        assert!((d_it - 0.0895).abs() < 5e-3);
        assert!(d_vamp > 1e-3);
        assert!(r_it_inf(0.0, &tri).is_err());
    }

    #[test]
    fn large_b_thresholds_are_bounded() {
        for e in [Ensemble::Gaussian, Ensemble::RowOrthogonal, Ensemble::DiscreteTri] {
            for snr in [1.0, 15.0, 28.0] {
                let bound = snr / (2.0 * (1.0 + snr) * LN_2);
                assert!(r_vamp_inf(snr, &e).unwrap() <= bound + 1e-12);
                assert!(r_it_inf(snr, &e).unwrap() <= capacity(snr) + 1e-12);
                assert!(r_vamp_inf(snr, &e).unwrap() <= r_it_inf(snr, &e).unwrap());
            }
        }
    }

    #[test]
    fn phi_tilde_examples() {
        for e in [Ensemble::Gaussian, Ensemble::DiscreteTri] {
            // Both closed forms hold for R between the two large-B thresholds.
            let r = 0.5 * (r_vamp_inf(15.0, &e).unwrap() + r_it_inf(15.0, &e).unwrap());
            assert_abs_diff_eq!(phi_tilde(0.0, 15.0, r, &e).unwrap(), 0.0, epsilon = 1e-15);
            let one = 1.0 - e.psi_integral(15.0).unwrap() / (2.0 * r * LN_2);
            assert_abs_diff_eq!(phi_tilde(1.0, 15.0, r, &e).unwrap(), one, epsilon = 1e-14);
            // Where s(E) < 2 the limit is increasing.
            let s = |x: f64| 15.0 * e.psi(-15.0 * x).unwrap() / (r * LN_2);
            let knee = (1..1000).map(|k| k as f64 / 1000.0).find(|&x| s(x) < 2.0).unwrap();
            for k in 0..20 {
                let x = knee + (0.99 - knee) * k as f64 / 20.0;
                let d = phi_tilde(x + 1e-6, 15.0, r, &e).unwrap() - phi_tilde(x, 15.0, r, &e).unwrap();
                assert!(d > 0.0, "E = {x}");
            }
        }
        assert!(phi_tilde(1.5, 15.0, 1.0, &Ensemble::Gaussian).is_err());
    }

    #[test]
    fn entropy_and_energy_limits() {
        for b in [2, 4, 16] {
            let s = se(b, 28.0, 1.0, Ensemble::Gaussian, 20_000);
            let ent = s.channel().entropy(1e-12);
            assert_abs_diff_eq!(ent.mean, (b as f64).ln(), epsilon = 1e-3);
            assert_eq!(energy_term(&s, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn stationary_at_se_fixed_point() {
        let s = se(2, 28.0, 1.3, Ensemble::RowOrthogonal, 200_000);
        let e_star = s.run_se().unwrap().fixed_point;
        let d = dphi(&s, e_star, 1e-2 * e_star.max(1e-9)).unwrap();
        assert!(d.mean.abs() <= 5.0 * d.stderr, "{d:?} at {e_star}");
        // Away from the fixed point the derivative is resolved.
        let off = dphi(&s, 0.3, 1e-3).unwrap();
        assert!(off.mean.abs() > 5.0 * off.stderr);
    }

    #[test]
    fn maxima_follow_fixed_points() {
        let low = se(4, 15.0, 1.0, Ensemble::Gaussian, 50_000);
        let curve = find_maxima(&low, 256).unwrap();
        assert_eq!(curve.maxima.len(), 1, "{:?}", curve.maxima);
        assert!(curve.grid.windows(2).all(|w| w[1] > w[0]));
        let e_star = low.run_from(1e-9).unwrap().fixed_point;
        assert!((curve.maxima[0].energy - e_star).abs() <= 1e-3);

        let gap = se(4, 28.0, 1.75, Ensemble::Gaussian, 50_000);
        let curve = find_maxima(&gap, 256).unwrap();
        assert_eq!(curve.maxima.len(), 2, "{:?}", curve.maxima);
        assert!(curve.maxima[0].energy < curve.maxima[1].energy);
        let stable: Vec<_> = gap
            .fixed_points(&energy_grid(4, 128))
            .unwrap()
            .into_iter()
            .filter(|f| f.stable)
            .collect();
        assert_eq!(stable.len(), 2);
        assert!((curve.maxima[0].energy - stable[0].energy).abs() <= 1e-3);
        // The flat upper maximum is only located to Monte Carlo accuracy;
        // the derivative at the SE point is what vanishes.
        assert!((curve.maxima[1].energy - stable[1].energy).abs() <= 2e-2);
        let d = dphi(&gap, stable[1].energy, 1e-3).unwrap();
        assert!(d.mean.abs() <= 5.0 * d.stderr, "{d:?}");
        assert!(!curve.extra_maxima);
    }

    #[test]
    fn threshold_ordering() {
        let opts = ThresholdOptions {
            mc_samples: 20_000,
            grid_size: 96,
            tol: 5e-3,
            ..ThresholdOptions::default()
        };
        let t = thresholds(4, 15.0, &Ensemble::Gaussian, &opts).unwrap();
        assert!(t.r_vamp < t.r_it && t.r_it < t.capacity, "{t:?}");
        assert!(!t.no_gap);
        assert!(t.vamp_history.len() >= 2 && t.it_history.len() >= 2);
        let repeat = thresholds(4, 15.0, &Ensemble::Gaussian, &opts).unwrap();
        assert_eq!(t, repeat);
    }

    #[test]
    fn domain_checks() {
        let s = se(4, 15.0, 1.0, Ensemble::Gaussian, 2_000);
        assert!(potential_phi(&s, 0.8).is_err());
        assert!(potential_phi(&s, -0.1).is_err());
        assert!(dphi(&s, 0.1, 0.0).is_err());
        assert!(r_vamp_inf(-1.0, &Ensemble::Gaussian).is_err());
    }
}
