use std::path::Path;

use serde::{Deserialize, Serialize};
use sparc_core::free_probability::CustomSpectrum;
use sparc_core::operators::ks_distance;
use sparc_core::{Atom, CodeParams, CodingOperator, Ensemble, EnsembleSpec, RestrictedDensity, SpectralModel};

use crate::cache::dense_cached;
use crate::cli::{check_rate, check_section_size, SpectrumArgs, SpectrumSource};
use crate::error::CliError;
use crate::output::Sink;

#[derive(Debug, Deserialize)]
struct AtomSpec {
    location: f64,
    mass: f64,
}

/// A custom spectrum on disk: `ρ_supp` atoms and, optionally, the atoms of
/// its small aspect ratio limit.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumFile {
    support: Vec<AtomSpec>,
    #[serde(default)]
    restricted: Option<Vec<AtomSpec>>,
}

fn atoms(specs: &[AtomSpec]) -> Vec<Atom> {
    specs.iter().map(|a| Atom::new(a.location, a.mass)).collect()
}

pub fn load_spectrum(path: &Path) -> Result<Ensemble, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let file: SpectrumFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let restricted = file
        .restricted
        .as_deref()
        .map(|r| RestrictedDensity::new(atoms(r)))
        .transpose()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let custom = CustomSpectrum::new(atoms(&file.support), restricted).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Ensemble::Custom(custom))
}

impl SpectrumSource {
    pub fn resolve(&self) -> Result<Ensemble, CliError> {
        match &self.spectrum_file {
            Some(path) => load_spectrum(path),
            None => Ok(self.ensemble.ensemble()),
        }
    }
}

#[derive(Debug, Serialize)]
struct CheckRow {
    quantity: String,
    empirical: f64,
    model: f64,
    difference: f64,
}

#[derive(Debug, Serialize)]
struct ModelRow {
    z: f64,
    r_transform: f64,
    psi: Option<f64>,
    free_bound: f64,
}

const CAUCHY_POINTS: [f64; 3] = [-0.5, -1.0, -5.0];

fn sampled_check(args: &SpectrumArgs, sink: &mut Sink) -> Result<(), CliError> {
    let params = CodeParams::new(args.l, args.b, args.r, 1.0).map_err(|e| CliError::Config(e.to_string()))?;
    let spec = EnsembleSpec::new(args.spectrum.ensemble.kind(), params, args.common.seed);
    let op: Box<dyn CodingOperator> = match &args.cache_dir {
        Some(dir) => Box::new(dense_cached(&spec, dir)?.0),
        None => spec.build()?,
    };
    let alpha = params.alpha();
    let model = SpectralModel::new(args.spectrum.ensemble.ensemble(), alpha)?;
    let spectrum = op.spectrum();
    let n = spectrum.len() as f64;
    let mut rows = Vec::new();
    let mut push = |quantity: String, empirical: f64, model: f64| {
        rows.push(CheckRow {
            quantity,
            empirical,
            model,
            difference: empirical - model,
        })
    };
    // Round-off moves exact atoms off their locations.
    let snapped: Vec<f64> = spectrum.iter().map(|l| (l * 1e9).round() / 1e9).collect();
    push("ks_distance".into(), ks_distance(&snapped, |x| model.cdf(x)), 0.0);
    push("mean".into(), spectrum.iter().sum::<f64>() / n, alpha);
    let zeros = spectrum.iter().filter(|l| l.abs() < 1e-9).count() as f64 / n;
    push("zero_fraction".into(), zeros, 1.0 - alpha);
    for z in CAUCHY_POINTS {
        let empirical = spectrum.iter().map(|l| 1.0 / (l - z)).sum::<f64>() / n;
        push(format!("cauchy({z})"), empirical, model.cauchy_transform(z)?);
    }
    for row in &rows {
        println!("{:<14} empirical {:>12.6} model {:>12.6}", row.quantity, row.empirical, row.model);
    }
    sink.table("spectrum_check", &rows)
}

fn model_check(args: &SpectrumArgs, ensemble: Ensemble, sink: &mut Sink) -> Result<(), CliError> {
    let alpha = (args.b as f64).log2() / (args.r * args.b as f64);
    let model = SpectralModel::new(ensemble.clone(), alpha)?;
    let rows = (0..=60)
        .map(|k| {
            let z = -30.0 + (30.0 - 0.1) * k as f64 / 60.0;
            Ok(ModelRow {
                z,
                r_transform: model.r_transform(z)?,
                psi: ensemble.psi(z).ok(),
                free_bound: 1.0 / (1.0 - z),
            })
        })
        .collect::<Result<Vec<_>, sparc_core::Error>>()?;
    let increasing = rows.windows(2).all(|w| w[1].r_transform > w[0].r_transform);
    let bounded = rows.iter().all(|r| r.psi.map_or(true, |p| p <= r.free_bound + 1e-12));
    println!("alpha = {alpha:.6}: R-transform increasing on [-30, -0.1]: {increasing}");
    println!("Psi(z) <= 1/(1 - z): {bounded}");
    sink.table("spectrum_model", &rows)
}

pub fn run(args: &SpectrumArgs) -> Result<(), CliError> {
    check_section_size(args.b)?;
    check_rate(args.b, args.r)?;
    if args.l == 0 {
        return Err(CliError::Config("--L must be at least 1".into()));
    }
    let mut sink = Sink::new(&args.common, "spectrum-check")?;
    match &args.spectrum.spectrum_file {
        Some(_) => model_check(args, args.spectrum.resolve()?, &mut sink)?,
        None => sampled_check(args, &mut sink)?,
    }
    for path in sink.finish(args, args.common.seed)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
