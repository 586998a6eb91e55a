//! Inversion of measured beam gains to intrinsic mixing parameters.
//!
//! With balanced detection `η` and an assumed conjugate transmission, the
//! measured effective gains `(G_a, G_b)` fix the first column `(α₁, α₂)` of
//! `e^{A0}`, which in turn fixes `(S, Ta)`. The forward map is smooth, so a
//! damped Newton iteration on `(S, log Ta)` with the analytic Jacobian
//! converges in a handful of steps; nested bisection backs it up.

use serde::{Deserialize, Serialize};

use crate::analytic::{effective_gains, nf_forward_closed, nf_general};
use crate::error::{Error, Result};
use crate::linalg::sinhc;
use crate::model::NoiseResult;
use crate::params::{check_transmission, from_db, gain_from_squeezing, to_db, DetectionParams, MediumParams};

/// One detuning point of a gain/noise measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// Pump detuning above line centre, MHz. Carried through, never used in
    /// the inversion.
    pub detuning_mhz: f64,
    pub gain_probe: f64,
    pub gain_conjugate: f64,
    pub nf_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    pub tb_assumed: f64,
    /// Absolute tolerance on both gain equations.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Conjugate gains below this fraction of the probe gain are treated as
    /// an unseeded conjugate (`S = 0`).
    pub unseeded_ratio: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self { tb_assumed: 1.0, tolerance: 1e-10, max_iterations: 200, unseeded_ratio: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionResult {
    pub gain_intrinsic: f64,
    pub squeezing: f64,
    pub ta_inferred: f64,
    pub tb_assumed: f64,
    /// Largest absolute mismatch of the two gain equations.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// First column of `e^{A0}` and its Jacobian in `(S, L = log Ta)`.
struct ForwardMap {
    lb: f64,
}

struct Evaluation {
    alpha: [f64; 2],
    jacobian: [[f64; 2]; 2],
}

/// `(cosh ξ − sinhc ξ)/ξ²`, the derivative of `sinhc` divided by `ξ`.
fn sinhc_slope(xi: f64) -> f64 {
    if xi.abs() < 1e-3 {
        let x2 = xi * xi;
        1.0 / 3.0 + x2 / 30.0 + x2 * x2 / 840.0
    } else {
        (xi.cosh() - xi.sinh() / xi) / (xi * xi)
    }
}

impl ForwardMap {
    fn alpha(&self, s: f64, l: f64) -> [f64; 2] {
        let m = 0.25 * (l + self.lb);
        let h = 0.25 * (l - self.lb);
        let xi = s.hypot(h);
        let em = m.exp();
        let k = sinhc(xi);
        [em * (xi.cosh() + k * h), em * k * s]
    }

    fn eval(&self, s: f64, l: f64) -> Evaluation {
        let m = 0.25 * (l + self.lb);
        let h = 0.25 * (l - self.lb);
        let xi = s.hypot(h);
        let em = m.exp();
        let k = sinhc(xi);
        let q = sinhc_slope(xi);
        let a1 = em * (xi.cosh() + k * h);
        let a2 = em * k * s;
        let jacobian = [
            [em * (k * s + q * s * h), 0.25 * a1 + 0.25 * em * (k * h + q * h * h + k)],
            [em * (q * s * s + k), 0.25 * a2 + 0.25 * em * q * s * h],
        ];
        Evaluation { alpha: [a1, a2], jacobian }
    }
}

fn gain_residual(alpha: [f64; 2], eta: f64, rec: &MeasurementRecord) -> f64 {
    let r1 = eta * alpha[0] * alpha[0] - rec.gain_probe;
    let r2 = eta * alpha[1] * alpha[1] - rec.gain_conjugate;
    r1.abs().max(r2.abs())
}

/// Solves the effective-gain equations for `(G, Ta)` at fixed `Tb`.
pub fn invert_gains(rec: &MeasurementRecord, eta: f64, opts: &InversionOptions) -> Result<InversionResult> {
    check_transmission("eta", eta)?;
    check_transmission("Tb", opts.tb_assumed)?;
    if !(rec.gain_probe.is_finite() && rec.gain_probe > 0.0) {
        return Err(Error::Domain(format!("probe gain must be finite and > 0, got {}", rec.gain_probe)));
    }
    if !(rec.gain_conjugate.is_finite() && rec.gain_conjugate >= 0.0) {
        return Err(Error::Domain(format!("conjugate gain must be finite and >= 0, got {}", rec.gain_conjugate)));
    }

    let finish = |s: f64, l: f64, iterations: usize| -> Result<InversionResult> {
        let ta = l.exp();
        let medium = MediumParams::new(s, ta, opts.tb_assumed)?;
        let (ga, gb) = effective_gains(&medium, &DetectionParams::balanced(eta)?);
        let residual = (ga - rec.gain_probe).abs().max((gb - rec.gain_conjugate).abs());
        Ok(InversionResult {
            gain_intrinsic: gain_from_squeezing(s),
            squeezing: s,
            ta_inferred: ta,
            tb_assumed: opts.tb_assumed,
            residual,
            converged: residual <= opts.tolerance,
            iterations,
        })
    };

    if rec.gain_conjugate < opts.unseeded_ratio * rec.gain_probe {
        let ta = rec.gain_probe / eta;
        if ta > 1.0 {
            return Err(Error::NoSolution(format!(
                "unseeded conjugate but probe gain {} exceeds detection efficiency {eta}",
                rec.gain_probe
            )));
        }
        let mut out = finish(0.0, ta.ln(), 0)?;
        out.ta_inferred = ta;
        return Ok(out);
    }

    let map = ForwardMap { lb: opts.tb_assumed.ln() };
    let target = [(rec.gain_probe / eta).sqrt(), (rec.gain_conjugate / eta).sqrt()];

    if let Some((s, l, it)) = newton(&map, target, eta, rec, opts) {
        return finish(s, l, it);
    }
    match bisection(&map, target)? {
        Some((s, l)) => {
            let out = finish(s, l, opts.max_iterations)?;
            if out.converged {
                Ok(out)
            } else {
                Err(Error::NotConverged { iterations: opts.max_iterations, residual: out.residual })
            }
        }
        None => Err(Error::NoSolution(format!(
            "gains ({}, {}) are not reachable with S >= 0 and Ta in (0, 1] at eta = {eta}",
            rec.gain_probe, rec.gain_conjugate
        ))),
    }
}

fn newton(
    map: &ForwardMap,
    target: [f64; 2],
    eta: f64,
    rec: &MeasurementRecord,
    opts: &InversionOptions,
) -> Option<(f64, f64, usize)> {
    let g0 = rec.gain_probe / eta;
    let mut s = (g0.max(1.0) - 1.0).sqrt().asinh();
    let mut l = 0.0;
    let mut ev = map.eval(s, l);
    let mut res = gain_residual(ev.alpha, eta, rec);

    for it in 0..opts.max_iterations {
        if res <= opts.tolerance {
            return Some((s, l, it));
        }
        let f = [ev.alpha[0] - target[0], ev.alpha[1] - target[1]];
        let j = ev.jacobian;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let ds = (j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dl = (j[0][0] * f[1] - j[1][0] * f[0]) / det;

        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let s_new = (s - damping * ds).max(0.0);
            let l_new = (l - damping * dl).min(0.0);
            let ev_new = map.eval(s_new, l_new);
            let res_new = gain_residual(ev_new.alpha, eta, rec);
            if res_new < res {
                s = s_new;
                l = l_new;
                ev = ev_new;
                res = res_new;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (res <= opts.tolerance).then_some((s, l, opts.max_iterations))
}

const LOG_TA_FLOOR: f64 = -60.0;
const S_CEILING: f64 = 50.0;

/// Outer bisection on `log Ta`, inner bisection on `S` matching `α₂`.
fn bisection(map: &ForwardMap, target: [f64; 2]) -> Result<Option<(f64, f64)>> {
    let s_for = |l: f64| -> Option<f64> {
        if map.alpha(S_CEILING, l)[1] < target[1] {
            return None;
        }
        let (mut lo, mut hi) = (0.0, S_CEILING);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if map.alpha(mid, l)[1] < target[1] {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    };
    let mismatch = |l: f64| s_for(l).map(|s| (s, map.alpha(s, l)[0] - target[0]));

    let (Some((_, top)), Some((_, bottom))) = (mismatch(0.0), mismatch(LOG_TA_FLOOR)) else {
        return Ok(None);
    };
    if top < 0.0 || bottom > 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (LOG_TA_FLOOR, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match mismatch(mid) {
            Some((_, g)) if g > 0.0 => hi = mid,
            Some(_) => lo = mid,
            None => return Ok(None),
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    let l = 0.5 * (lo + hi);
    Ok(s_for(l).map(|s| (s, l)))
}

/// Inverts a batch of records, preserving input order.
pub fn invert_batch(records: &[MeasurementRecord], eta: f64, opts: &InversionOptions) -> Vec<Result<InversionResult>> {
    records.iter().map(|r| invert_gains(r, eta, opts)).collect()
}

/// Noise figure the model predicts for the inferred parameters.
pub fn predict_squeezing(inv: &InversionResult, eta: f64) -> Result<NoiseResult> {
    if !inv.converged {
        return Err(Error::Domain("cannot predict from an unconverged inversion".into()));
    }
    if inv.tb_assumed == 1.0 {
        nf_forward_closed(inv.squeezing, inv.ta_inferred, eta)
    } else {
        let m = MediumParams::new(inv.squeezing, inv.ta_inferred, inv.tb_assumed)?;
        nf_general(&m, &DetectionParams::balanced(eta)?)
    }
}

/// Measured noise with a background's excess over shot noise removed.
///
/// Both levels are converted to linear power relative to shot noise and
/// `P_meas − (P_bg − 1)` is returned in dB. Treating the background as an
/// additive, uncorrelated excess is a modelling choice, not a measured fact.
pub fn excess_noise_db(nf_db_meas: f64, nf_db_background: f64) -> Result<f64> {
    if !(nf_db_meas.is_finite() && nf_db_background.is_finite()) {
        return Err(Error::Domain("noise levels must be finite".into()));
    }
    let corrected = from_db(nf_db_meas) - (from_db(nf_db_background) - 1.0);
    if corrected <= 0.0 {
        return Err(Error::Domain(format!(
            "background {nf_db_background} dB exceeds measurement {nf_db_meas} dB"
        )));
    }
    Ok(to_db(corrected))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ga: f64, gb: f64) -> MeasurementRecord {
        MeasurementRecord { detuning_mhz: 0.0, gain_probe: ga, gain_conjugate: gb, nf_db: None }
    }

    fn synthetic(s: f64, ta: f64, eta: f64) -> MeasurementRecord {
        let (ga, gb) = effective_gains(&MediumParams::new(s, ta, 1.0).unwrap(), &DetectionParams::balanced(eta).unwrap());
        record(ga, gb)
    }

    #[test]
    fn lossless_inversion() {
        let eta = 0.85;
        let inv = invert_gains(&record(3.0 * eta, 2.0 * eta), eta, &InversionOptions::default()).unwrap();
        assert!(inv.converged);
        assert!((inv.gain_intrinsic - 3.0).abs() < 1e-10);
        assert!((inv.ta_inferred - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_single_point() {
        let inv = invert_gains(&synthetic(0.9, 0.6, 0.85), 0.85, &InversionOptions::default()).unwrap();
        assert!((inv.gain_intrinsic - 0.9f64.cosh().powi(2)).abs() < 1e-8);
        assert!((inv.ta_inferred - 0.6).abs() < 1e-8);
        let pred = predict_squeezing(&inv, 0.85).unwrap();
        let direct = nf_forward_closed(inv.squeezing, inv.ta_inferred, 0.85).unwrap();
        assert_eq!(pred, direct);
    }

    #[test]
    fn unseeded_conjugate() {
        let eta = 0.85;
        let inv = invert_gains(&record(0.2 * eta, 0.0), eta, &InversionOptions::default()).unwrap();
        assert_eq!(inv.squeezing, 0.0);
        assert_eq!(inv.ta_inferred, 0.2 * eta / eta);
        assert!(matches!(
            invert_gains(&record(1.5, 0.0), 0.85, &InversionOptions::default()),
            Err(Error::NoSolution(_))
        ));
    }

    #[test]
    fn inconsistent_gains_have_no_solution() {
        // without conjugate loss α₁² − α₂² <= 1, so G_a − G_b > η is unreachable
        let err = invert_gains(&record(3.0, 1.0), 0.85, &InversionOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoSolution(_)), "{err:?}");
    }

    #[test]
    fn bad_inputs() {
        let o = InversionOptions::default();
        assert!(invert_gains(&record(0.0, 1.0), 0.85, &o).is_err());
        assert!(invert_gains(&record(1.0, -1.0), 0.85, &o).is_err());
        assert!(invert_gains(&record(1.0, 0.5), 1.2, &o).is_err());
    }

    #[test]
    fn bisection_fallback_agrees_with_newton() {
        let rec = synthetic(1.4, 0.3, 0.9);
        let map = ForwardMap { lb: 0.0 };
        let target = [(rec.gain_probe / 0.9).sqrt(), (rec.gain_conjugate / 0.9).sqrt()];
        let (s, l) = bisection(&map, target).unwrap().unwrap();
        assert!((s - 1.4).abs() < 1e-9, "{s}");
        assert!((l.exp() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let map = ForwardMap { lb: -0.2 };
        for &(s, l) in &[(0.7, -0.5), (1e-4, -1.0), (2.0, -0.01)] {
            let ev = map.eval(s, l);
            let h = 1e-6;
            for (col, (ds, dl)) in [(h, 0.0), (0.0, h)].into_iter().enumerate() {
                let p = map.alpha(s + ds, l + dl);
                let m = map.alpha(s - ds, l - dl);
                for row in 0..2 {
                    let fd = (p[row] - m[row]) / (2.0 * h);
                    assert!((fd - ev.jacobian[row][col]).abs() < 1e-7, "({s},{l}) [{row}][{col}]");
                }
            }
        }
    }

    #[test]
    fn assumed_conjugate_loss_round_trip() {
        let (ga, gb) = effective_gains(&MediumParams::new(1.1, 0.5, 0.9).unwrap(), &DetectionParams::balanced(0.8).unwrap());
        let opts = InversionOptions { tb_assumed: 0.9, ..Default::default() };
        let inv = invert_gains(&record(ga, gb), 0.8, &opts).unwrap();
        assert!((inv.squeezing - 1.1).abs() < 1e-8 && (inv.ta_inferred - 0.5).abs() < 1e-8);
        assert!(predict_squeezing(&inv, 0.8).is_ok());
    }

    #[test]
    fn prediction_examples() {
        let inv = invert_gains(&record(3.0 * 0.85, 2.0 * 0.85), 0.85, &InversionOptions::default()).unwrap();
        let r = predict_squeezing(&inv, 0.85).unwrap();
        assert!((r.nf_linear - 0.32).abs() < 1e-9);
        let inv = invert_gains(&record(0.85, 0.0), 0.85, &InversionOptions::default()).unwrap();
        assert_eq!(predict_squeezing(&inv, 0.85).unwrap().nf_linear, 1.0);
    }

    #[test]
    fn background_subtraction() {
        assert!((excess_noise_db(-2.5, 0.0).unwrap() + 2.5).abs() < 1e-12);
        assert!(excess_noise_db(3.01, 3.01).unwrap().abs() < 1e-12);
        // 3.01 dB is only approximately a factor of two, so use a background
        // that is unambiguously more than twice shot noise
        assert!(matches!(excess_noise_db(0.0, 3.5), Err(Error::Domain(_))));
        assert!(matches!(excess_noise_db(0.0, to_db(2.0) + 1e-9), Err(Error::Domain(_))));
    }
}
