use rayon::prelude::*;
use serde::Serialize;
use sparc_core::codec::{section_error_rate, transmit};
use sparc_core::rng::derive_seed;
use sparc_core::vamp::decode;
use sparc_core::{CodeParams, CodingOperator, EnsembleSpec, Message, OperatorKind, VampConfig};

use crate::cache::dense_cached;
use crate::cli::{check_section_size, check_snr, DecodeArgs};
use crate::error::CliError;
use crate::output::Sink;

#[derive(Debug, Serialize)]
struct TrialRow {
    rate: f64,
    realized_rate: f64,
    trial: usize,
    seed: u64,
    iterations: usize,
    converged: bool,
    unstable: bool,
    failure: Option<String>,
    ser: f64,
    mse: f64,
}

#[derive(Debug, Serialize)]
struct IterationRow {
    rate: f64,
    trial: usize,
    iteration: usize,
    mse: Option<f64>,
    ser: Option<f64>,
    gamma1: f64,
    gamma2: f64,
    alpha1: f64,
    alpha2: f64,
    clamped: bool,
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    rate: f64,
    realized_rate: f64,
    trials: usize,
    mean_ser: f64,
    stderr_ser: f64,
    mean_mse: f64,
    stderr_mse: f64,
    unstable: usize,
}

fn validate(args: &DecodeArgs) -> Result<Vec<(f64, CodeParams)>, CliError> {
    check_section_size(args.b)?;
    check_snr(args.snr)?;
    if args.l == 0 {
        return Err(CliError::Config("--L must be at least 1".into()));
    }
    if args.trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    if args.max_iter == 0 {
        return Err(CliError::Config("--max-iter must be at least 1".into()));
    }
    if args.cache_dir.is_some() && args.ensemble.kind() == OperatorKind::DctProxy {
        return Err(CliError::Config("--cache-dir applies to dense ensembles only".into()));
    }
    args.rates
        .rates()?
        .into_iter()
        .map(|r| {
            CodeParams::new(args.l, args.b, r, args.snr)
                .map(|p| (r, p))
                .map_err(|e| CliError::Config(e.to_string()))
        })
        .collect()
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

struct Trial {
    row: TrialRow,
    iterations: Vec<IterationRow>,
}

fn run_trial(args: &DecodeArgs, rate: f64, params: CodeParams, trial: usize, seed: u64) -> Result<Trial, CliError> {
    let spec = EnsembleSpec::new(args.ensemble.kind(), params, seed);
    let op: Box<dyn CodingOperator> = match &args.cache_dir {
        Some(dir) => Box::new(dense_cached(&spec, dir)?.0),
        None => spec.build()?,
    };
    let msg = Message::sample(args.l, args.b, seed)?;
    let out = transmit(op.as_ref(), &msg.to_signal(), args.snr, seed)?;
    let config = VampConfig {
        max_iter: args.max_iter,
        ..VampConfig::default()
    };
    let res = decode(op.as_ref(), &out.y, args.snr, &config, Some(&msg))?;
    let ser = section_error_rate(&msg, &res.decision)?;
    let iterations = res
        .records
        .iter()
        .map(|r| IterationRow {
            rate,
            trial,
            iteration: r.iteration,
            mse: r.mse,
            ser: r.ser,
            gamma1: r.gamma1,
            gamma2: r.gamma2,
            alpha1: r.alpha1,
            alpha2: r.alpha2,
            clamped: r.clamped,
        })
        .collect();
    Ok(Trial {
        row: TrialRow {
            rate,
            realized_rate: params.realized_rate(),
            trial,
            seed,
            iterations: res.iterations,
            converged: res.converged,
            unstable: res.unstable,
            failure: res.failure.map(|e| e.to_string()),
            ser,
            mse: res.mse.last().copied().unwrap_or(f64::NAN),
        },
        iterations,
    })
}

pub fn run(args: &DecodeArgs) -> Result<(), CliError> {
    let sweep = validate(args)?;
    let mut sink = Sink::new(&args.common, "decode")?;
    let jobs: Vec<(usize, usize)> = (0..sweep.len())
        .flat_map(|i| (0..args.trials).map(move |t| (i, t)))
        .collect();
    let results: Vec<Result<Trial, CliError>> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let seed = derive_seed(derive_seed(args.common.seed, i as u64), t as u64);
            run_trial(args, sweep[i].0, sweep[i].1, t, seed)
        })
        .collect();
    let trials = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut summary = Vec::with_capacity(sweep.len());
    for (i, &(rate, params)) in sweep.iter().enumerate() {
        let group = &trials[i * args.trials..(i + 1) * args.trials];
        let sers: Vec<f64> = group.iter().map(|t| t.row.ser).collect();
        let mses: Vec<f64> = group.iter().map(|t| t.row.mse).collect();
        let (mean_ser, stderr_ser) = mean_stderr(&sers);
        let (mean_mse, stderr_mse) = mean_stderr(&mses);
        summary.push(SummaryRow {
            rate,
            realized_rate: params.realized_rate(),
            trials: args.trials,
            mean_ser,
            stderr_ser,
            mean_mse,
            stderr_mse,
            unstable: group.iter().filter(|t| t.row.unstable).count(),
        });
        println!(
            "R = {rate:.4} (realized {:.4}): SER {mean_ser:.3e} ± {stderr_ser:.1e}, E_L {mean_mse:.3e}",
            params.realized_rate()
        );
    }

    let rows: Vec<&TrialRow> = trials.iter().map(|t| &t.row).collect();
    let iterations: Vec<&IterationRow> = trials.iter().flat_map(|t| &t.iterations).collect();
    sink.table("decode_trials", &rows)?;
    sink.table("decode_iterations", &iterations)?;
    sink.table("decode_summary", &summary)?;
    for path in sink.finish(args, args.common.seed)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
