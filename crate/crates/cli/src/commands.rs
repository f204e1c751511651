use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use onred_core::forward::{cdp_forward, read_measurement_set, simulate_cdp, write_measurement_set};
use onred_core::metrics::{aggregate_sweep, format_snr, image_snr_db, snr_db, write_summary_csv, SweepRun};
use onred_core::{phantom, red, ImageGrid, Measurement, MeasurementSet, Rng, RunOutput, RunTrace};
use rayon::prelude::*;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::settings::{Resolved, SettingsFile};
use crate::{pgm, EvalArgs, RunArgs, SimulateArgs, SweepArgs};

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path.display(), e))
}

fn load_set(path: &Path) -> CliResult<MeasurementSet> {
    let file = File::open(path).map_err(|e| CliError::io(path.display(), e))?;
    read_measurement_set(BufReader::new(file))
        .map_err(|e| CliError::io(path.display(), e))
}

fn load_truth(path: Option<&Path>, set: &MeasurementSet) -> CliResult<Option<ImageGrid>> {
    let Some(path) = path else { return Ok(None) };
    let truth = pgm::read(path)?;
    truth.ensure_shape(set.height(), set.width())?;
    Ok(Some(truth))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| CliError::io(path.display(), e))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::io(path.display(), e))
}

fn write_trace(path: &Path, trace: &RunTrace) -> CliResult<()> {
    trace.write_csv(create(path)?).map_err(|e| CliError::io(path.display(), e))
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let image = match (&args.phantom, &args.image) {
        (Some(name), _) => phantom::by_name(name)?,
        (None, Some(path)) => pgm::read(path)?,
        (None, None) => return Err(CliError::Config("either --phantom or --image is required".into())),
    };
    // Simulate from the image as it will be stored, so the truth file is exact.
    let truth = image.map(|v| f64::from(pgm::quantize(v)) / 65535.0);
    let mut rng = Rng::new(args.seed);
    let set = simulate_cdp(&truth, args.count, args.snr, &mut rng)?;

    let mut out = create(&args.out)?;
    write_measurement_set(&set, &mut out).map_err(|e| CliError::io(args.out.display(), e))?;
    let truth_path = args
        .truth_out
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out, ".truth.pgm"));
    pgm::write(&truth_path, &truth)?;

    let realized = realized_snr(&set, &truth)?;
    println!(
        "measurements={} size={}x{} realized_snr_db={}",
        set.len(),
        set.height(),
        set.width(),
        format_snr(realized)
    );
    Ok(())
}

/// SNR of the stored magnitudes against the noiseless ones, over all
/// measurements. Differs slightly from the target because of clamping.
fn realized_snr(set: &MeasurementSet, truth: &ImageGrid) -> CliResult<f64> {
    let mut clean = Vec::new();
    let mut noisy = Vec::new();
    for m in set.measurements() {
        if let Measurement::Cdp(c) = m {
            clean.extend(cdp_forward(truth, &c.mask)?);
            noisy.extend_from_slice(&c.magnitudes);
        }
    }
    Ok(snr_db(&noisy, &clean)?)
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let set = load_set(&args.measurements)?;
    let truth = load_truth(args.truth.as_deref(), &set)?;
    let resolved = args.solver.merged()?.resolve(&set)?;
    warn_all(&resolved.warnings);
    let output = red::run(&set, &resolved.start(&set), &resolved.config, truth.as_ref())?;

    write_trace(&with_suffix(&args.out, ".trace.csv"), &output.trace)?;
    pgm::write(&with_suffix(&args.out, ".pgm"), &output.reconstruction)?;
    write_json(&with_suffix(&args.out, ".json"), &resolved.sidecar())?;

    let last = output.trace.last().expect("trace always has a final row");
    let snr = last.snr_db.map(format_snr).unwrap_or_else(|| "na".into());
    println!(
        "alg={} gamma={:e} L={:e} iterations={} final_norm_acc={:e} snr_db={}",
        resolved.config.algorithm.name(),
        resolved.config.gamma,
        resolved.lipschitz,
        resolved.config.iterations,
        last.norm_acc,
        snr
    );
    Ok(())
}

/// Parses `a..b` (inclusive) or a comma-separated list.
pub fn parse_seeds(spec: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::Config(format!("bad seed list `{spec}`"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

struct Job {
    cell: usize,
    gamma_multiplier: f64,
    minibatch: usize,
    seed: u64,
    resolved: Resolved,
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let set = load_set(&args.measurements)?;
    let truth = load_truth(args.truth.as_deref(), &set)?;
    let seeds = parse_seeds(&args.seeds)?;
    if args.gammas.is_empty() || args.minibatches.is_empty() || seeds.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    let base = args.solver.merged()?;
    let base_mult = base.gamma_mult.unwrap_or(1.0);

    let mut jobs = Vec::new();
    let mut warnings = Vec::new();
    for (gi, &mult) in args.gammas.iter().enumerate() {
        for (bi, &b) in args.minibatches.iter().enumerate() {
            let cell = gi * args.minibatches.len() + bi;
            for &seed in &seeds {
                let settings = SettingsFile {
                    minibatch: Some(b),
                    seed: Some(seed.wrapping_add(cell as u64)),
                    gamma_mult: Some(base_mult * mult),
                    ..base.clone()
                };
                let resolved = settings.resolve(&set)?;
                for w in &resolved.warnings {
                    if !warnings.contains(w) {
                        warnings.push(w.clone());
                    }
                }
                jobs.push(Job { cell, gamma_multiplier: mult, minibatch: b, seed, resolved });
            }
        }
    }
    warn_all(&warnings);

    let outputs = jobs
        .par_iter()
        .map(|job| red::run(&set, &job.resolved.start(&set), &job.resolved.config, truth.as_ref()))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<RunOutput>, _>>()?;

    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(args.out_dir.display(), e))?;
    let mut records = Vec::with_capacity(jobs.len());
    for (job, out) in jobs.iter().zip(&outputs) {
        let stem = format!("cell{}_B{}_seed{}", job.cell, job.minibatch, job.seed);
        write_trace(&args.out_dir.join(format!("{stem}.trace.csv")), &out.trace)?;
        pgm::write(&args.out_dir.join(format!("{stem}.pgm")), &out.reconstruction)?;
        records.push(json!({
            "cell": job.cell,
            "gamma_multiplier": job.gamma_multiplier,
            "gamma": job.resolved.config.gamma,
            "B": job.minibatch,
            "seed": job.seed,
            "solver_seed": job.resolved.config.seed,
            "trace": format!("{stem}.trace.csv"),
        }));
    }

    let runs: Vec<SweepRun> = jobs
        .iter()
        .zip(&outputs)
        .map(|(job, out)| SweepRun {
            gamma_multiplier: job.gamma_multiplier,
            gamma: job.resolved.config.gamma,
            minibatch: job.minibatch,
            seed: job.seed,
            trace: &out.trace,
        })
        .collect();
    let cells = aggregate_sweep(&runs)?;
    let summary_path = args.out_dir.join("summary.csv");
    write_summary_csv(&cells, create(&summary_path)?)
        .map_err(|e| CliError::io(summary_path.display(), e))?;

    let first = &jobs[0].resolved;
    write_json(
        &args.out_dir.join("sweep.json"),
        &json!({
            "settings": SettingsFile { minibatch: None, seed: None, ..base.clone() },
            "lipschitz": first.lipschitz,
            "gammas": args.gammas,
            "Bs": args.minibatches,
            "seeds": seeds,
            "runs": records,
        }),
    )?;
    println!("cells={} runs={} summary={}", cells.len(), runs.len(), summary_path.display());
    Ok(())
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    if let (Some(recon), Some(truth)) = (&args.recon, &args.truth) {
        let recon = pgm::read(recon)?;
        let truth = pgm::read(truth)?;
        recon.ensure_shape(truth.height(), truth.width())?;
        println!("snr_db={}", format_snr(image_snr_db(&recon, &truth)?));
    }
    if let Some(path) = &args.trace {
        let file = File::open(path).map_err(|e| CliError::io(path.display(), e))?;
        let trace = RunTrace::read_csv(BufReader::new(file))
            .map_err(|e| CliError::io(path.display(), e))?;
        let (Some(last), Some(min)) = (trace.final_norm_acc(), trace.min_norm_acc()) else {
            return Err(CliError::Io(format!("{}: trace has no rows", path.display())));
        };
        println!("final_norm_acc={last:e}");
        println!("min_norm_acc={min:e}");
        if let Some(snr) = trace.last().and_then(|r| r.snr_db) {
            println!("final_snr_db={}", format_snr(snr));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_seeds("3").unwrap(), vec![3]);
        assert_eq!(parse_seeds("1, 5,9").unwrap(), vec![1, 5, 9]);
        assert!(parse_seeds("4..1").is_err());
        assert!(parse_seeds("a..b").is_err());
    }

    #[test]
    fn suffix_appends_to_prefix() {
        assert_eq!(with_suffix(Path::new("out/run1"), ".pgm"), PathBuf::from("out/run1.pgm"));
    }
}
