use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use super::csvio::{format_float, read_measurements, write_row, ReadError};
use super::{CliError, CompareArgs, InvertArgs, NfArgs, OracleArgs, Squeezing, SweepArgs};
use crate::analytic::{nf_forward_closed, nf_general, nf_reverse_closed, optimal_probe_transmission};
use crate::chain::{convergence_table, ChainConfig};
use crate::diagnostic::{invert_gains, predict_squeezing, InversionOptions};
use crate::model::NoiseResult;
use crate::params::{squeezing_from_gain, to_db, DetectionParams, MediumParams};

fn resolve_squeezing(sq: &Squeezing, default: Option<f64>) -> Result<f64, CliError> {
    match (sq.gain, sq.s) {
        (Some(g), None) => Ok(squeezing_from_gain(g)?),
        (None, Some(s)) => Ok(s),
        (None, None) => default.ok_or_else(|| CliError::usage("one of --gain or --s is required")),
        (Some(_), Some(_)) => Err(CliError::usage("--gain and --s are mutually exclusive")),
    }
}

struct Range {
    min: f64,
    max: f64,
    count: usize,
}

impl Range {
    fn parse(flag: &str, v: &[f64]) -> Result<Self, CliError> {
        let [min, max, count] = v else {
            return Err(CliError::usage(format!("{flag} expects min,max,count")));
        };
        if count.fract() != 0.0 || *count < 2.0 {
            return Err(CliError::usage(format!("{flag}: count must be an integer >= 2, got {count}")));
        }
        if !(min.is_finite() && max.is_finite() && min <= max) {
            return Err(CliError::usage(format!("{flag}: need finite min <= max, got {min},{max}")));
        }
        Ok(Self { min: *min, max: *max, count: *count as usize })
    }

    fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 })
            .collect()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path.display(), e))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::io("write failed", e)
}

fn closed_form_for(s: f64, m: &MediumParams, d: &DetectionParams) -> Result<Option<(&'static str, NoiseResult)>, CliError> {
    if !d.is_balanced() {
        return Ok(None);
    }
    if m.tb() == 1.0 {
        Ok(Some(("forward", nf_forward_closed(s, m.ta(), d.eta_a())?)))
    } else if m.ta() == 1.0 {
        Ok(Some(("reverse", nf_reverse_closed(s, m.tb(), d.eta_a())?)))
    } else {
        Ok(None)
    }
}

fn write_result(out: &mut dyn Write, label: &str, r: &NoiseResult) -> std::io::Result<()> {
    writeln!(
        out,
        "{label:<10} nf = {} ({} dB)  variance = {}  snl = {}  G_a = {}  G_b = {}",
        format_float(r.nf_linear),
        format_float(r.nf_db),
        format_float(r.variance_rel),
        format_float(r.snl_rel),
        format_float(r.gain_probe),
        format_float(r.gain_conjugate)
    )?;
    writeln!(
        out,
        "{:<10} shot noise {} + mixing {} + injected vacuum {}",
        "",
        format_float(r.breakdown.snl_term),
        format_float(r.breakdown.mixing_term),
        format_float(r.breakdown.vacuum_term)
    )
}

pub fn cmd_nf(args: &NfArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let s = resolve_squeezing(&args.squeezing, None)?;
    let m = MediumParams::new(s, args.ta, args.tb)?;
    let d = DetectionParams::new(args.eta_a.unwrap_or(args.eta), args.eta_b.unwrap_or(args.eta))?;
    let general = nf_general(&m, &d)?;
    let closed = closed_form_for(s, &m, &d)?;

    if args.json {
        let closed_json = closed.map(|(kind, r)| {
            json!({ "kind": kind, "result": r, "abs_difference": (r.nf_linear - general.nf_linear).abs() })
        });
        let doc = json!({
            "medium": { "s": s, "gain": m.gain(), "ta": m.ta(), "tb": m.tb() },
            "detection": { "eta_a": d.eta_a(), "eta_b": d.eta_b() },
            "general": general,
            "closed_form": closed_json,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable")).map_err(io_err)?;
        return Ok(());
    }

    writeln!(
        out,
        "S = {}  G = {}  Ta = {}  Tb = {}  eta_a = {}  eta_b = {}",
        format_float(s),
        format_float(m.gain()),
        format_float(m.ta()),
        format_float(m.tb()),
        format_float(d.eta_a()),
        format_float(d.eta_b())
    )
    .map_err(io_err)?;
    write_result(out, "general", &general).map_err(io_err)?;
    if let Some((kind, r)) = closed {
        write_result(out, kind, &r).map_err(io_err)?;
        writeln!(out, "{:<10} |closed - general| = {}", "", format_float((r.nf_linear - general.nf_linear).abs()))
            .map_err(io_err)?;
    }
    Ok(())
}

fn default_optimal_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sweep".into());
    out.with_file_name(format!("{stem}_optimal.csv"))
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ta = Range::parse("--ta-range", &args.ta_range)?;
    let gain = Range::parse("--gain-range", &args.gain_range)?;
    if ta.min <= 0.0 || ta.max > 1.0 {
        return Err(CliError::usage("--ta-range must lie in (0, 1]"));
    }
    if gain.min < 1.0 {
        return Err(CliError::usage("--gain-range must lie in [1, inf)"));
    }
    DetectionParams::balanced(args.eta)?;
    let gains = gain.values();
    let squeezing = gains.iter().map(|&g| squeezing_from_gain(g)).collect::<crate::Result<Vec<_>>>()?;

    let mut grid = create(&args.out)?;
    writeln!(grid, "ta,gain,nf_db").map_err(io_err)?;
    for t in ta.values() {
        for (&g, &s) in gains.iter().zip(&squeezing) {
            let r = nf_forward_closed(s, t, args.eta)?;
            write_row(&mut grid, &[t, g, r.nf_db]).map_err(io_err)?;
        }
    }
    grid.flush().map_err(io_err)?;

    let optimal_path = args.optimal_out.clone().unwrap_or_else(|| default_optimal_path(&args.out));
    let mut optimal = create(&optimal_path)?;
    writeln!(optimal, "gain,ta_star,nf_star_db").map_err(io_err)?;
    for (&g, &s) in gains.iter().zip(&squeezing) {
        // without mixing every transmission gives 0 dB and no optimum exists
        let (t_star, nf_db) = if s > 0.0 {
            let o = optimal_probe_transmission(s, args.eta)?;
            (o.ta_star, to_db(o.nf_star))
        } else {
            (f64::NAN, 0.0)
        };
        write_row(&mut optimal, &[g, t_star, nf_db]).map_err(io_err)?;
    }
    optimal.flush().map_err(io_err)?;

    writeln!(
        out,
        "wrote {} grid rows to {} and {} optimal rows to {}",
        ta.count * gain.count,
        args.out.display(),
        gain.count,
        optimal_path.display()
    )
    .map_err(io_err)
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let s = squeezing_from_gain(args.gain)?;
    let t = Range::parse("--t-range", &args.t_range)?;
    if t.min <= 0.0 || t.max > 1.0 {
        return Err(CliError::usage("--t-range must lie in (0, 1]"));
    }
    DetectionParams::balanced(args.eta)?;

    let mut rows = Vec::with_capacity(t.count);
    for tv in t.values() {
        let fwd = nf_forward_closed(s, tv, args.eta)?.nf_linear;
        let rev = nf_reverse_closed(s, tv, args.eta)?.nf_linear;
        if rev < fwd - 1e-12 * fwd.abs().max(1.0) {
            return Err(CliError::regression(format!(
                "reverse configuration beats forward at t = {tv}: {rev} < {fwd}; model inconsistency"
            )));
        }
        rows.push([tv, to_db(fwd), to_db(rev)]);
    }

    let mut body = Vec::new();
    writeln!(body, "t,nf_forward_db,nf_reverse_db").map_err(io_err)?;
    for row in &rows {
        write_row(&mut body, row).map_err(io_err)?;
    }
    match &args.out {
        Some(path) => {
            let mut f = create(path)?;
            f.write_all(&body).and_then(|_| f.flush()).map_err(|e| CliError::io(path.display(), e))
        }
        None => out.write_all(&body).map_err(io_err),
    }
}

pub fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let s = resolve_squeezing(&args.squeezing, Some(1.0))?;
    let m = MediumParams::new(s, args.ta, args.tb)?;
    let d = DetectionParams::balanced(args.eta)?;
    // surface the size limit before running the smaller rows
    if let Some(&largest) = args.stages.iter().max() {
        ChainConfig::new(m, largest)?.with_max_stages(args.max_stages).check_size()?;
    }
    let table = convergence_table(&m, &d, &args.stages)?;
    let reference = nf_general(&m, &d)?.nf_linear;

    if args.json {
        let doc = json!({ "continuum_nf": reference, "rows": table });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable")).map_err(io_err)?;
    } else {
        writeln!(out, "continuum nf = {}", format_float(reference)).map_err(io_err)?;
        writeln!(out, "{:>10}  {:>16}  {:>12}  {:>8}", "N", "nf_N", "|error|", "ratio").map_err(io_err)?;
        let mut prev: Option<f64> = None;
        for row in &table {
            let ratio = prev.map(|p| format_float(row.abs_error / p)).unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "{:>10}  {:>16}  {:>12}  {:>8}",
                row.stages,
                format_float(row.nf),
                format_float(row.abs_error),
                ratio
            )
            .map_err(io_err)?;
            prev = Some(row.abs_error);
        }
    }

    let last = table.last().expect("non-empty table");
    if last.abs_error > args.threshold {
        return Err(CliError::regression(format!(
            "final error {} at N = {} exceeds threshold {}",
            last.abs_error, last.stages, args.threshold
        )));
    }
    Ok(())
}

pub fn cmd_invert(args: &InvertArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    DetectionParams::balanced(args.eta)?;
    let file = File::open(&args.input).map_err(|e| CliError::io(args.input.display(), e))?;
    let table = read_measurements(file).map_err(|e| match e {
        ReadError::Io(e) => CliError::io(args.input.display(), e),
        ReadError::Parse { line, message } => {
            CliError::usage(format!("{}:{line}: {message}", args.input.display()))
        }
    })?;
    let opts = InversionOptions { tb_assumed: args.tb, ..Default::default() };

    let mut body = Vec::new();
    let header = if table.has_noise {
        "detuning_mhz,G_intrinsic,Ta,residual,nf_pred_db,nf_meas_db,excess_db"
    } else {
        "detuning_mhz,G_intrinsic,Ta,residual,nf_pred_db"
    };
    writeln!(body, "{header}").map_err(io_err)?;

    let mut failures = 0usize;
    for rec in &table.records {
        let outcome = invert_gains(rec, args.eta, &opts)
            .and_then(|inv| predict_squeezing(&inv, args.eta).map(|p| (inv, p)));
        let mut row = match outcome {
            Ok((inv, pred)) => vec![rec.detuning_mhz, inv.gain_intrinsic, inv.ta_inferred, inv.residual, pred.nf_db],
            Err(e) => {
                failures += 1;
                writeln!(err, "warning: detuning {}: {e}", format_float(rec.detuning_mhz)).map_err(io_err)?;
                vec![rec.detuning_mhz, f64::NAN, f64::NAN, f64::NAN, f64::NAN]
            }
        };
        if table.has_noise {
            let meas = rec.nf_db.unwrap_or(f64::NAN);
            row.push(meas);
            row.push(meas - row[4]);
        }
        write_row(&mut body, &row).map_err(io_err)?;
    }

    match &args.out {
        Some(path) => {
            let mut f = create(path)?;
            f.write_all(&body).and_then(|_| f.flush()).map_err(|e| CliError::io(path.display(), e))?;
        }
        None => out.write_all(&body).map_err(io_err)?,
    }
    if table.records.is_empty() {
        writeln!(err, "warning: {} contains no data rows", args.input.display()).map_err(io_err)?;
    }
    writeln!(err, "inverted {} rows, {failures} failed", table.records.len()).map_err(io_err)
}
