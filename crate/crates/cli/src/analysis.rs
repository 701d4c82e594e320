//! The `se`, `potential`, `thresholds` and `asymptotic` commands.

use serde::Serialize;
use sparc_core::potential::{
    capacity, find_maxima, large_b_thresholds, r_it_inf, r_vamp_inf, spectral_criterion_gap, thresholds,
    ThresholdOptions, Thresholds,
};
use sparc_core::rng::derive_seed;
use sparc_core::{Ensemble, SeParams, StateEvolution};

use crate::cli::{
    check_mc_samples, check_rate, check_section_size, check_snr, AsymptoticArgs, PotentialArgs, SeArgs,
    ThresholdArgs,
};
use crate::error::CliError;
use crate::output::Sink;
use crate::spectrum::load_spectrum;

fn report(sink: Sink, config: &impl Serialize, seed: u64) -> Result<(), CliError> {
    for path in sink.finish(config, seed)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// SE at each rate, every rate on the noise batch of its own child seed.
fn state_evolutions(
    ensemble: &Ensemble,
    b: usize,
    snr: f64,
    rates: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<StateEvolution>, CliError> {
    check_section_size(b)?;
    check_snr(snr)?;
    check_mc_samples(mc_samples)?;
    for &r in rates {
        check_rate(b, r)?;
    }
    rates
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut p = SeParams::new(b, snr, r, ensemble.clone());
            p.mc_samples = mc_samples;
            p.seed = derive_seed(seed, i as u64);
            Ok(StateEvolution::new(p)?)
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct TrajectoryRow {
    rate: f64,
    recursion: &'static str,
    iteration: usize,
    energy: f64,
    stderr: f64,
}

#[derive(Debug, Serialize)]
struct FixedPointRow {
    rate: f64,
    alpha: f64,
    fixed_point: f64,
    converged: bool,
    iterations: usize,
    ser: f64,
    ser_stderr: f64,
}

pub fn run_se(args: &SeArgs) -> Result<(), CliError> {
    let rates = args.rates.rates()?;
    let ensemble = args.spectrum.resolve()?;
    let ses = state_evolutions(&ensemble, args.b, args.snr, &rates, args.mc_samples, args.common.seed)?;
    let mut sink = Sink::new(&args.common, "se")?;
    let (mut traj, mut fixed) = (Vec::new(), Vec::new());
    for (s, &rate) in ses.iter().zip(&rates) {
        let scalar = s.run_se()?;
        for (k, (&e, &err)) in scalar.values.iter().zip(&scalar.stderrs).enumerate() {
            traj.push(TrajectoryRow {
                rate,
                recursion: "scalar",
                iteration: k,
                energy: e,
                stderr: err,
            });
        }
        let two = s.run_vamp_se(args.iterations, 0.0)?;
        for (k, est) in two.mse.iter().enumerate() {
            traj.push(TrajectoryRow {
                rate,
                recursion: "vamp",
                iteration: k,
                energy: est.mean,
                stderr: est.stderr,
            });
        }
        let ser = s.asymptotic_ser(scalar.fixed_point)?;
        println!(
            "R = {rate:.4}: E* = {:.4e} ({} iterations{}), SER {:.3e}",
            scalar.fixed_point,
            scalar.values.len() - 1,
            if scalar.converged { "" } else { ", not converged" },
            ser.mean
        );
        fixed.push(FixedPointRow {
            rate,
            alpha: s.params().alpha(),
            fixed_point: scalar.fixed_point,
            converged: scalar.converged,
            iterations: scalar.values.len() - 1,
            ser: ser.mean,
            ser_stderr: ser.stderr,
        });
    }
    sink.table("se_trajectories", &traj)?;
    sink.table("se_fixed_points", &fixed)?;
    report(sink, args, args.common.seed)
}

#[derive(Debug, Serialize)]
struct CurveRow {
    rate: f64,
    energy: f64,
    phi: f64,
    stderr: f64,
}

#[derive(Debug, Serialize)]
struct MaximumRow {
    rate: f64,
    energy: f64,
    phi: f64,
    stderr: f64,
    global: bool,
}

pub fn run_potential(args: &PotentialArgs) -> Result<(), CliError> {
    let rates = args.rates.rates()?;
    if args.grid < 8 {
        return Err(CliError::Config("--grid must be at least 8".into()));
    }
    let ensemble = args.spectrum.resolve()?;
    let ses = state_evolutions(&ensemble, args.b, args.snr, &rates, args.mc_samples, args.common.seed)?;
    let mut sink = Sink::new(&args.common, "potential")?;
    let (mut curve, mut maxima) = (Vec::new(), Vec::new());
    for (s, &rate) in ses.iter().zip(&rates) {
        let c = find_maxima(s, args.grid)?;
        for ((&e, &v), &err) in c.grid.iter().zip(&c.values).zip(&c.stderrs) {
            curve.push(CurveRow {
                rate,
                energy: e,
                phi: v,
                stderr: err,
            });
        }
        let best = c.maxima.iter().map(|m| m.value).fold(f64::NEG_INFINITY, f64::max);
        let found: Vec<String> = c.maxima.iter().map(|m| format!("{:.4e}", m.energy)).collect();
        println!("R = {rate:.4}: maxima at E = [{}]", found.join(", "));
        if c.extra_maxima {
            eprintln!("warning: more than two maxima at R = {rate}");
        }
        maxima.extend(c.maxima.iter().map(|m| MaximumRow {
            rate,
            energy: m.energy,
            phi: m.value,
            stderr: m.stderr,
            global: m.value == best,
        }));
    }
    sink.table("potential_curve", &curve)?;
    sink.table("potential_maxima", &maxima)?;
    report(sink, args, args.common.seed)
}

/// One row of the thresholds table; `B` is empty for the large-B limit.
#[derive(Debug, Serialize)]
pub struct ThresholdRow {
    pub ensemble: String,
    #[serde(rename = "B")]
    pub b: Option<usize>,
    pub snr: f64,
    pub r_vamp: f64,
    pub r_it: f64,
    pub capacity: f64,
    pub no_gap: bool,
    pub unique_at_capacity: bool,
}

impl From<&Thresholds> for ThresholdRow {
    fn from(t: &Thresholds) -> Self {
        Self {
            ensemble: t.ensemble.name().to_string(),
            b: t.section_size,
            snr: t.snr,
            r_vamp: t.r_vamp,
            r_it: t.r_it,
            capacity: t.capacity,
            no_gap: t.no_gap,
            unique_at_capacity: t.unique_at_capacity,
        }
    }
}

#[derive(Debug, Serialize)]
struct HistoryRow {
    #[serde(rename = "B")]
    b: usize,
    search: &'static str,
    step: usize,
    rate: f64,
    outcome: bool,
}

pub fn run_thresholds(args: &ThresholdArgs) -> Result<(), CliError> {
    check_snr(args.snr)?;
    check_mc_samples(args.mc_samples)?;
    if args.b.is_empty() {
        return Err(CliError::Config("empty section size sweep".into()));
    }
    for &b in &args.b {
        check_section_size(b)?;
    }
    if !(args.tol > 0.0 && args.tol < 1.0) {
        return Err(CliError::Config(format!("--tol {} must lie in (0, 1)", args.tol)));
    }
    if args.grid < 8 {
        return Err(CliError::Config("--grid must be at least 8".into()));
    }
    let ensemble = args.spectrum.resolve()?;
    let mut sink = Sink::new(&args.common, "thresholds")?;
    let (mut rows, mut history) = (Vec::new(), Vec::new());
    for (i, &b) in args.b.iter().enumerate() {
        let opts = ThresholdOptions {
            mc_samples: args.mc_samples,
            seed: derive_seed(args.common.seed, i as u64),
            grid_size: args.grid,
            tol: args.tol,
            ..ThresholdOptions::default()
        };
        let t = thresholds(b, args.snr, &ensemble, &opts)?;
        println!(
            "B = {b:>4}: r_vamp = {:.4}, r_it = {:.4}{}",
            t.r_vamp,
            t.r_it,
            if t.no_gap { " (no gap)" } else { "" }
        );
        for (search, steps) in [("vamp", &t.vamp_history), ("it", &t.it_history)] {
            history.extend(steps.iter().enumerate().map(|(k, s)| HistoryRow {
                b,
                search,
                step: k,
                rate: s.rate,
                outcome: s.outcome,
            }));
        }
        rows.push(ThresholdRow::from(&t));
    }
    if ensemble.restricted_density().is_some() {
        let t = large_b_thresholds(args.snr, &ensemble)?;
        println!("B =  inf: r_vamp = {:.4}, r_it = {:.4}", t.r_vamp, t.r_it);
        rows.push(ThresholdRow::from(&t));
    }
    sink.table("thresholds", &rows)?;
    sink.table("thresholds_history", &history)?;
    report(sink, args, args.common.seed)
}

#[derive(Debug, Serialize)]
struct AsymptoticRow {
    ensemble: String,
    snr: f64,
    capacity: f64,
    r_vamp_inf: f64,
    r_it_inf: f64,
    r_it_deficit: f64,
    r_vamp_deficit: f64,
}

pub fn run_asymptotic(args: &AsymptoticArgs) -> Result<(), CliError> {
    if args.snr.is_empty() {
        return Err(CliError::Config("empty snr list".into()));
    }
    for &snr in &args.snr {
        check_snr(snr)?;
    }
    let mut ensembles = vec![Ensemble::Gaussian, Ensemble::RowOrthogonal, Ensemble::DiscreteTri];
    if let Some(path) = &args.spectrum_file {
        let custom = load_spectrum(path)?;
        if custom.restricted_density().is_none() {
            return Err(CliError::Config("the spectrum file needs a `restricted` density".into()));
        }
        ensembles.push(custom);
    }
    let mut sink = Sink::new(&args.common, "asymptotic")?;
    let mut rows = Vec::new();
    println!(
        "{:<16} {:>6} {:>10} {:>10} {:>10} {:>12} {:>14}",
        "ensemble", "snr", "capacity", "r_vamp", "r_it", "it_deficit", "vamp_deficit"
    );
    for &snr in &args.snr {
        for e in &ensembles {
            let (it_gap, vamp_gap) = spectral_criterion_gap(snr, e)?;
            let row = AsymptoticRow {
                ensemble: e.name().to_string(),
                snr,
                capacity: capacity(snr),
                r_vamp_inf: r_vamp_inf(snr, e)?,
                r_it_inf: r_it_inf(snr, e)?,
                r_it_deficit: it_gap,
                r_vamp_deficit: vamp_gap,
            };
            println!(
                "{:<16} {:>6} {:>10.6} {:>10.6} {:>10.6} {:>12.3e} {:>14.3e}",
                row.ensemble, snr, row.capacity, row.r_vamp_inf, row.r_it_inf, it_gap, vamp_gap
            );
            rows.push(row);
        }
    }
    sink.table("asymptotic", &rows)?;
    report(sink, args, args.common.seed)
}
