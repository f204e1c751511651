//! Reconstruction quality, fixed-point accuracy and trace aggregation.

use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};
use crate::grid::ImageGrid;

/// `20 log10(‖truth‖ / ‖truth − estimate‖)`; `+inf` when they are equal.
pub fn snr_db(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} values", truth.len()),
            found: format!("{} values", estimate.len()),
        });
    }
    let signal = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if signal == 0.0 {
        return Err(invalid("SNR is undefined for an all-zero reference"));
    }
    let err = truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| (t - e) * (t - e))
        .sum::<f64>()
        .sqrt();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (signal / err).log10())
}

/// Image SNR with the global sign ambiguity of phase retrieval resolved:
/// the better of `estimate` and `-estimate`.
pub fn image_snr_db(estimate: &ImageGrid, truth: &ImageGrid) -> Result<f64> {
    if !estimate.same_shape(truth) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", truth.height(), truth.width()),
            found: format!("{}x{}", estimate.height(), estimate.width()),
        });
    }
    let direct = snr_db(estimate.data(), truth.data())?;
    let negated: Vec<f64> = estimate.data().iter().map(|v| -v).collect();
    Ok(direct.max(snr_db(&negated, truth.data())?))
}

/// Formats an SNR value, writing `inf` for the exact-match sentinel.
pub fn format_snr(snr: f64) -> String {
    if snr == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{snr:.6}")
    }
}

/// One logged iterate of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    /// `‖G(x^k)‖²` with the full operator.
    pub grad_norm_sq: f64,
    /// `‖G(x^k)‖² / ‖G(x^0)‖²`
    pub norm_acc: f64,
    pub snr_db: Option<f64>,
    /// Component indices drawn for the step that produced `x^k`.
    pub sampled_indices: Vec<usize>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_HEADER: &str = "k,grad_norm_sq,norm_acc,snr_db,sampled_indices,wall_ms";

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_norm_acc(&self) -> Option<f64> {
        self.last().map(|r| r.norm_acc)
    }

    pub fn min_norm_acc(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.norm_acc).reduce(f64::min)
    }

    /// Recomputes `norm_acc` from `grad_norm_sq`.
    pub(crate) fn normalize(&mut self) {
        let acc = normalized_accuracy(&self.rows);
        for (row, v) in self.rows.iter_mut().zip(acc.values) {
            row.norm_acc = v;
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.rows {
            let snr = r.snr_db.map(format_snr).unwrap_or_default();
            let idx: Vec<String> = r.sampled_indices.iter().map(|i| i.to_string()).collect();
            writeln!(
                out,
                "{},{:e},{:e},{},{},{:.3}",
                r.k,
                r.grad_norm_sq,
                r.norm_acc,
                snr,
                idx.join(";"),
                r.wall_ms
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<RunTrace> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != TRACE_HEADER {
            return Err(Error::Format(format!("unexpected trace header `{header}`")));
        }
        let bad = |line: &str| Error::Format(format!("bad trace row `{line}`"));
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(&line));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&line));
            let snr_db = match f[3] {
                "" => None,
                "inf" => Some(f64::INFINITY),
                s => Some(num(s)?),
            };
            let sampled_indices = if f[4].is_empty() {
                Vec::new()
            } else {
                f[4].split(';')
                    .map(|s| s.parse::<usize>().map_err(|_| bad(&line)))
                    .collect::<Result<_>>()?
            };
            rows.push(TraceRow {
                k: f[0].parse().map_err(|_| bad(&line))?,
                grad_norm_sq: num(f[1])?,
                norm_acc: num(f[2])?,
                snr_db,
                sampled_indices,
                wall_ms: num(f[5])?,
            });
        }
        Ok(RunTrace { rows })
    }
}

/// Result of normalizing a residual trace.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAccuracy {
    pub values: Vec<f64>,
    /// Row 0 had zero residual: the run started at a fixed point and all
    /// values are reported as zero.
    pub started_at_fixed_point: bool,
}

/// Divides each row's `‖G‖²` by that of row 0.
pub fn normalized_accuracy(rows: &[TraceRow]) -> NormalizedAccuracy {
    let Some(first) = rows.first() else {
        return NormalizedAccuracy { values: Vec::new(), started_at_fixed_point: false };
    };
    let reference = first.grad_norm_sq;
    if reference == 0.0 {
        return NormalizedAccuracy {
            values: vec![0.0; rows.len()],
            started_at_fixed_point: true,
        };
    }
    NormalizedAccuracy {
        values: rows.iter().map(|r| r.grad_norm_sq / reference).collect(),
        started_at_fixed_point: false,
    }
}

/// One run entering a sweep summary.
#[derive(Debug, Clone)]
pub struct SweepRun<'a> {
    pub gamma_multiplier: f64,
    pub gamma: f64,
    pub minibatch: usize,
    pub seed: u64,
    pub trace: &'a RunTrace,
}

/// Per-(γ, B) cell statistics over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub gamma_multiplier: f64,
    pub gamma: f64,
    pub minibatch: usize,
    pub runs: usize,
    pub mean_norm_acc: f64,
    /// Population standard deviation of the final normalized accuracy.
    pub std_norm_acc: f64,
    pub mean_min_norm_acc: f64,
    pub mean_snr_db: Option<f64>,
}

pub const SUMMARY_HEADER: &str =
    "gamma_multiplier,gamma,B,runs,mean_norm_acc,std_norm_acc,mean_min_norm_acc,mean_snr_db";

/// Groups runs by `(γ, B)` in first-appearance order and averages the final
/// normalized accuracy across seeds.
pub fn aggregate_sweep(runs: &[SweepRun<'_>]) -> Result<Vec<SweepCell>> {
    if runs.is_empty() {
        return Err(invalid("sweep has no runs"));
    }
    let mut keys: Vec<(u64, usize)> = Vec::new();
    for r in runs {
        let key = (r.gamma.to_bits(), r.minibatch);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut cells = Vec::with_capacity(keys.len());
    for key in keys {
        let members: Vec<&SweepRun> = runs
            .iter()
            .filter(|r| (r.gamma.to_bits(), r.minibatch) == key)
            .collect();
        let finals = members
            .iter()
            .map(|r| r.trace.final_norm_acc().ok_or_else(|| invalid("empty trace in sweep")))
            .collect::<Result<Vec<f64>>>()?;
        let mins: Vec<f64> = members.iter().filter_map(|r| r.trace.min_norm_acc()).collect();
        let snrs: Vec<f64> = members
            .iter()
            .filter_map(|r| r.trace.last().and_then(|row| row.snr_db))
            .collect();
        let count = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / count;
        let var = finals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
        cells.push(SweepCell {
            gamma_multiplier: members[0].gamma_multiplier,
            gamma: members[0].gamma,
            minibatch: key.1,
            runs: members.len(),
            mean_norm_acc: mean,
            std_norm_acc: var.sqrt(),
            mean_min_norm_acc: mins.iter().sum::<f64>() / mins.len() as f64,
            mean_snr_db: (snrs.len() == members.len())
                .then(|| snrs.iter().sum::<f64>() / snrs.len() as f64),
        });
    }
    Ok(cells)
}

pub fn write_summary_csv<W: Write>(cells: &[SweepCell], mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for c in cells {
        let snr = c.mean_snr_db.map(|s| format!("{s:.5e}")).unwrap_or_default();
        writeln!(
            out,
            "{:.5e},{:.5e},{},{},{:.5e},{:.5e},{:.5e},{}",
            c.gamma_multiplier,
            c.gamma,
            c.minibatch,
            c.runs,
            c.mean_norm_acc,
            c.std_norm_acc,
            c.mean_min_norm_acc,
            snr
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, g: f64) -> TraceRow {
        TraceRow {
            k,
            grad_norm_sq: g,
            norm_acc: 0.0,
            snr_db: None,
            sampled_indices: vec![],
            wall_ms: 0.0,
        }
    }

    fn trace(values: &[f64]) -> RunTrace {
        let mut t = RunTrace {
            rows: values.iter().enumerate().map(|(k, &g)| row(k, g)).collect(),
        };
        t.normalize();
        t
    }

    #[test]
    fn snr_special_values() {
        let truth = [3.0, 4.0];
        assert_eq!(snr_db(&truth, &truth).unwrap(), f64::INFINITY);
        assert!(snr_db(&[0.0, 0.0], &truth).unwrap().abs() < 1e-12);
        // ‖truth‖ = 10, ‖error‖ = 1
        let truth = [6.0, 8.0];
        assert!((snr_db(&[6.6, 8.8], &truth).unwrap() - 20.0).abs() < 1e-9);
        assert!(snr_db(&[1.0], &[0.0]).is_err());
        assert!(snr_db(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn halving_error_adds_six_db() {
        let truth = [1.0, -2.0, 0.5, 4.0];
        let err = [0.3, 0.1, -0.2, 0.05];
        let est = |s: f64| -> Vec<f64> { truth.iter().zip(&err).map(|(t, e)| t + s * e).collect() };
        let a = snr_db(&est(1.0), &truth).unwrap();
        let b = snr_db(&est(0.5), &truth).unwrap();
        assert!((b - a - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn image_snr_resolves_sign() {
        let truth = ImageGrid::from_fn(2, 2, |r, c| 1.0 + (r + c) as f64);
        let flipped = truth.scaled(-1.0);
        assert_eq!(image_snr_db(&flipped, &truth).unwrap(), f64::INFINITY);
        assert!(image_snr_db(&ImageGrid::zeros(2, 2), &truth).unwrap().abs() < 1e-12);
    }

    #[test]
    fn normalized_accuracy_arithmetic() {
        let acc = normalized_accuracy(&trace(&[4.0, 2.0, 1.0]).rows);
        assert_eq!(acc.values, vec![1.0, 0.5, 0.25]);
        let acc = normalized_accuracy(&trace(&[3.0, 3.0, 3.0]).rows);
        assert_eq!(acc.values, vec![1.0; 3]);
    }

    #[test]
    fn normalized_accuracy_flags_fixed_point_start() {
        let acc = normalized_accuracy(&trace(&[0.0, 0.0]).rows);
        assert!(acc.started_at_fixed_point);
        assert_eq!(acc.values, vec![0.0, 0.0]);
    }

    #[test]
    fn normalized_accuracy_is_scale_invariant() {
        let a = normalized_accuracy(&trace(&[5.0, 2.5, 0.1]).rows);
        let b = normalized_accuracy(&trace(&[500.0, 250.0, 10.0]).rows);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn aggregate_single_and_identical() {
        let t = trace(&[2.0, 0.5]);
        let one = [SweepRun { gamma_multiplier: 1.0, gamma: 0.5, minibatch: 2, seed: 0, trace: &t }];
        let cells = aggregate_sweep(&one).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].mean_norm_acc, 0.25);
        assert_eq!(cells[0].std_norm_acc, 0.0);

        let two = [one[0].clone(), SweepRun { seed: 1, ..one[0].clone() }];
        let cells = aggregate_sweep(&two).unwrap();
        assert_eq!(cells[0].runs, 2);
        assert_eq!(cells[0].std_norm_acc, 0.0);
        assert!(aggregate_sweep(&[]).is_err());
    }

    #[test]
    fn aggregate_groups_cells() {
        let a = trace(&[1.0, 0.5]);
        let b = trace(&[1.0, 0.1]);
        let runs = [
            SweepRun { gamma_multiplier: 1.0, gamma: 1.0, minibatch: 1, seed: 0, trace: &a },
            SweepRun { gamma_multiplier: 1.0, gamma: 1.0, minibatch: 2, seed: 0, trace: &b },
            SweepRun { gamma_multiplier: 1.0, gamma: 1.0, minibatch: 1, seed: 1, trace: &b },
        ];
        let cells = aggregate_sweep(&runs).unwrap();
        assert_eq!(cells.len(), 2);
        assert!((cells[0].mean_norm_acc - 0.3).abs() < 1e-15);
        assert!((cells[0].std_norm_acc - 0.2).abs() < 1e-15);
        let mut out = Vec::new();
        write_summary_csv(&cells, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("1.00000e0,1.00000e0,1,2,3.00000e-1"));
    }

    #[test]
    fn trace_csv_round_trip() {
        let mut t = trace(&[2.0, 1.0e-7]);
        t.rows[1].sampled_indices = vec![3, 0, 3];
        t.rows[1].snr_db = Some(12.5);
        t.rows[0].snr_db = Some(f64::INFINITY);
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let back = RunTrace::read_csv(out.as_slice()).unwrap();
        assert_eq!(back, t);
        assert!(RunTrace::read_csv(&b"k,foo\n"[..]).is_err());
    }
}
