//! Noise-figure formulas: ideal mixing, post-mixing loss, the general
//! continuum model with distributed loss, and its closed-form special cases.

use crate::error::{Error, Result};
use crate::linalg::{exp_congruence_integral, sylvester_solve, sym_exp, SymMat2, Vec2};
use crate::model::{a0_matrix, loss_matrix, vacuum_rhs, ClosedFormAux, NoiseResult, VarianceBreakdown};
use crate::params::{check_transmission, DetectionParams, MediumParams};

/// Relative conditioning below which the Sylvester route hands over to the
/// integral form of the vacuum sum. Measured as the smallest eigenvalue sum
/// of `A0` over its largest entry.
const SYLVESTER_MIN_GAP: f64 = 1e-6;

fn check_gain(gain: f64) -> Result<()> {
    if gain.is_finite() && gain >= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("intrinsic gain must be finite and >= 1, got {gain}")))
    }
}

/// Noise figure `1/(2G − 1)` of lossless mixing with ideal detection.
pub fn nf_ideal(gain: f64) -> Result<NoiseResult> {
    check_gain(gain)?;
    let nf = 1.0 / (2.0 * gain - 1.0);
    Ok(NoiseResult::from_nf(nf, gain, gain - 1.0, VarianceBreakdown::from_parts(nf - 1.0, 0.0)))
}

/// Lossless mixing followed by beamsplitter losses `η_a`, `η_b`.
pub fn nf_post_loss(gain: f64, d: &DetectionParams) -> Result<NoiseResult> {
    check_gain(gain)?;
    let (ea, eb) = (d.eta_a(), d.eta_b());
    let g1 = gain - 1.0;
    let diff = ea - eb;
    let nf = 1.0 + 2.0 * g1 * (gain * diff * diff - eb * eb) / (gain * ea + g1 * eb);
    Ok(NoiseResult::from_nf(nf, ea * gain, eb * g1, VarianceBreakdown::from_parts(nf - 1.0, 0.0)))
}

/// Vacuum sum `X` of the continuum model.
///
/// Solved from `A0·X + X·A0 = e^{A0}·T·e^{A0} − T`. The lossless medium
/// returns zero. Where `A0` has an eigenvalue sum at (or numerically near)
/// zero, the equivalent integral `∫₀¹ e^{uA0}·T·e^{uA0} du` is used.
pub fn vacuum_sum(m: &MediumParams) -> Result<SymMat2> {
    if m.is_lossless() {
        return Ok(SymMat2::ZERO);
    }
    let a0 = a0_matrix(m);
    let (l1, l2) = a0.eigenvalues();
    let gap = [2.0 * l1, l1 + l2, 2.0 * l2].iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
    if gap < SYLVESTER_MIN_GAP * a0.max_abs() {
        return Ok(exp_congruence_integral(&a0, &loss_matrix(m)));
    }
    match sylvester_solve(&a0, &vacuum_rhs(m)) {
        Err(Error::SingularSystem { .. }) => Ok(exp_congruence_integral(&a0, &loss_matrix(m))),
        other => other,
    }
}

/// Detected beam powers relative to the incident probe, `(η_a·α₁², η_b·α₂²)`,
/// where `(α₁, α₂)` is the first column of `e^{A0}`.
pub fn effective_gains(m: &MediumParams, d: &DetectionParams) -> (f64, f64) {
    let e = sym_exp(&a0_matrix(m));
    (d.eta_a() * e.a11 * e.a11, d.eta_b() * e.a12 * e.a12)
}

/// General continuum model with distributed loss on both beams and
/// post-medium detection losses.
///
/// The breakdown assigns `vᵀ·P·X·P·v / SNL` (the in-medium injected vacuum)
/// to `vacuum_term` and the rest of the excess over shot noise to
/// `mixing_term`. The closed-form special cases group their terms
/// differently, so the two breakdowns agree only in their sum.
pub fn nf_general(m: &MediumParams, d: &DetectionParams) -> Result<NoiseResult> {
    let (ea, eb) = (d.eta_a(), d.eta_b());
    if m.s() == 0.0 {
        return Ok(NoiseResult::from_nf(1.0, ea * m.ta(), 0.0, VarianceBreakdown::from_parts(0.0, 0.0)));
    }
    let a0 = a0_matrix(m);
    let e = sym_exp(&a0);
    let e2 = sym_exp(&a0.scale(2.0));
    let x = vacuum_sum(m)?;
    let v: Vec2 = [e.a11, -e.a12];
    let p = SymMat2::diag(ea, eb);
    let detection_vacuum = SymMat2::diag((1.0 - ea) * ea, (1.0 - eb) * eb);

    let medium = p.congruence(&(e2 + x)) + detection_vacuum;
    let variance = medium.quad_form(v);
    let (ga, gb) = (ea * v[0] * v[0], eb * v[1] * v[1]);
    let snl = ga + gb;
    let vacuum = p.congruence(&x).quad_form(v) / snl;
    let nf = variance / snl;
    Ok(NoiseResult::from_variance(variance, ga, gb, VarianceBreakdown::from_parts(nf - 1.0 - vacuum, vacuum)))
}

fn check_scalar_inputs(s: f64, t: f64, eta: f64) -> Result<()> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::Domain(format!("squeezing parameter must be finite and >= 0, got {s}")));
    }
    check_transmission("transmission", t)?;
    check_transmission("eta", eta)
}

/// Closed form for balanced detection and a loss-free conjugate (`Tb = 1`).
pub fn nf_forward_closed(s: f64, ta: f64, eta: f64) -> Result<NoiseResult> {
    check_scalar_inputs(s, ta, eta)?;
    let m = MediumParams::new(s, ta, 1.0)?;
    let d = DetectionParams::balanced(eta)?;
    let (ga, gb) = effective_gains(&m, &d);
    if s == 0.0 {
        return Ok(NoiseResult::from_nf(1.0, ga, gb, VarianceBreakdown::from_parts(0.0, 0.0)));
    }
    let ClosedFormAux { xi, chi } = ClosedFormAux::new(&m);
    let denom = (2.0 * xi + chi).cosh();
    let sh = xi.sinh();
    let log_ta = ta.ln();
    let mixing = -eta * 2.0 * s * sh * sh / (xi * denom);
    let vacuum = eta * ta.sqrt() * s * log_ta * log_ta * sh.powi(4) / (2.0 * xi.powi(3) * denom);
    let breakdown = VarianceBreakdown::from_parts(mixing, vacuum);
    Ok(NoiseResult::from_nf(breakdown.total(), ga, gb, breakdown))
}

/// Closed form for balanced detection and a loss-free probe (`Ta = 1`).
pub fn nf_reverse_closed(s: f64, tb: f64, eta: f64) -> Result<NoiseResult> {
    check_scalar_inputs(s, tb, eta)?;
    let m = MediumParams::new(s, 1.0, tb)?;
    let d = DetectionParams::balanced(eta)?;
    let (ga, gb) = effective_gains(&m, &d);
    if s == 0.0 {
        return Ok(NoiseResult::from_nf(1.0, ga, gb, VarianceBreakdown::from_parts(0.0, 0.0)));
    }
    let ClosedFormAux { xi, chi } = ClosedFormAux::new(&m);
    let denom = (2.0 * xi + chi).cosh();
    let ch = (xi + chi).cosh();
    let mixing = -eta * 2.0 * s * ch * ch / (xi * denom);
    let inner = 4.0 * s - tb.ln() * (2.0 * xi + chi).sinh();
    let vacuum = eta * tb.sqrt() * s * inner * inner / (8.0 * xi.powi(3) * denom);
    let breakdown = VarianceBreakdown::from_parts(mixing, vacuum);
    Ok(NoiseResult::from_nf(breakdown.total(), ga, gb, breakdown))
}

/// Probe transmission minimizing the forward noise figure.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OptimalTransmission {
    pub ta_star: f64,
    pub nf_star: f64,
}

const BRACKET_POINTS: usize = 100;
const GOLDEN_TOL: f64 = 1e-8;

/// Minimizes [`nf_forward_closed`] over `Ta ∈ (0, 1]`.
///
/// A 100-point grid brackets the minimum, golden-section search refines it.
pub fn optimal_probe_transmission(s: f64, eta: f64) -> Result<OptimalTransmission> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain(format!("squeezing parameter must be > 0, got {s}")));
    }
    check_transmission("eta", eta)?;
    let f = |ta: f64| nf_forward_closed(s, ta, eta).map(|r| r.nf_linear);

    let step = 1.0 / BRACKET_POINTS as f64;
    let grid: Vec<f64> = (1..=BRACKET_POINTS).map(|k| k as f64 * step).collect();
    let values = grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(BRACKET_POINTS - 1);

    let mut lo = if best == 0 { 0.5 * grid[0] } else { grid[best - 1] };
    let mut hi = if best + 1 == grid.len() { 1.0 } else { grid[best + 1] };

    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }

    let mid = 0.5 * (lo + hi);
    let mut candidates = vec![(mid, f(mid)?), (grid[best], values[best])];
    if hi >= 1.0 {
        candidates.push((1.0, f(1.0)?));
    }
    let (ta_star, nf_star) = candidates
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("candidate list is non-empty");
    Ok(OptimalTransmission { ta_star, nf_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::squeezing_from_gain;

    fn general(s: f64, ta: f64, tb: f64, ea: f64, eb: f64) -> f64 {
        let m = MediumParams::new(s, ta, tb).unwrap();
        nf_general(&m, &DetectionParams::new(ea, eb).unwrap()).unwrap().nf_linear
    }

    #[test]
    fn ideal_examples() {
        assert_eq!(nf_ideal(1.0).unwrap().nf_linear, 1.0);
        let r = nf_ideal(3.0).unwrap();
        assert!((r.nf_linear - 0.2).abs() < 1e-15);
        assert!((r.nf_db + 6.9897).abs() < 1e-4);
        assert_eq!((r.gain_probe, r.gain_conjugate), (3.0, 2.0));
        assert!(nf_ideal(1e6).unwrap().nf_linear < 1e-6);
        assert!(matches!(nf_ideal(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn post_loss_examples() {
        let d = DetectionParams::new(0.3, 0.9).unwrap();
        assert_eq!(nf_post_loss(1.0, &d).unwrap().nf_linear, 1.0);
        let ideal = nf_post_loss(3.0, &DetectionParams::ideal()).unwrap();
        assert!((ideal.nf_linear - 0.2).abs() < 1e-15);
        let lossy = nf_post_loss(3.0, &DetectionParams::balanced(0.85).unwrap()).unwrap();
        // balanced: 1 − 2η(G−1)/(2G−1) = 1 − 2·0.85·2/5
        assert!((lossy.nf_linear - 0.32).abs() < 1e-15);
        assert!((lossy.nf_db + 4.9485).abs() < 1e-4);
        assert!(nf_post_loss(0.9, &d).is_err());
    }

    #[test]
    fn general_examples() {
        assert_eq!(general(0.0, 1.0, 1.0, 1.0, 1.0), 1.0);
        let s = squeezing_from_gain(3.0).unwrap();
        assert!((general(s, 1.0, 1.0, 0.85, 0.85) - 0.32).abs() < 1e-12);
    }

    #[test]
    fn general_pure_absorption_is_shot_noise_limited() {
        let m = MediumParams::new(1e-300, 0.5, 1.0).unwrap();
        let r = nf_general(&m, &DetectionParams::balanced(0.7).unwrap()).unwrap();
        assert!((r.nf_linear - 1.0).abs() < 1e-12);
    }

    #[test]
    fn general_handles_zero_eigenvalue() {
        // S² = ¼·log Ta·log Tb puts an eigenvalue of A0 at zero
        let (ta, tb) = (0.4f64, 0.6f64);
        let s = (0.25 * ta.ln() * tb.ln()).sqrt();
        let m = MediumParams::new(s, ta, tb).unwrap();
        let a0 = a0_matrix(&m);
        assert!(a0.det().abs() < 1e-15);
        let at = general(s, ta, tb, 0.9, 0.9);
        let near = general(s * (1.0 + 1e-5), ta, tb, 0.9, 0.9);
        assert!((at - near).abs() < 1e-5, "{at} vs {near}");
    }

    #[test]
    fn vacuum_sum_routes_agree() {
        let m = MediumParams::new(0.9, 0.35, 0.8).unwrap();
        let via_solver = vacuum_sum(&m).unwrap();
        let via_integral = exp_congruence_integral(&a0_matrix(&m), &loss_matrix(&m));
        assert!((via_solver - via_integral).max_abs() < 1e-13);
    }

    #[test]
    fn effective_gain_examples() {
        let ideal = DetectionParams::ideal();
        let d = DetectionParams::new(0.7, 0.9).unwrap();
        assert_eq!(effective_gains(&MediumParams::lossless(0.0).unwrap(), &d), (0.7, 0.0));
        let s = 1.3f64;
        let (ga, gb) = effective_gains(&MediumParams::lossless(s).unwrap(), &ideal);
        assert!((ga - s.cosh().powi(2)).abs() < 1e-13 && (gb - s.sinh().powi(2)).abs() < 1e-13);
        assert!((ga - gb - 1.0).abs() < 1e-12);
        let (ga, gb) = effective_gains(&MediumParams::new(0.0, 0.5, 1.0).unwrap(), &ideal);
        assert!((ga - 0.5).abs() < 1e-15 && gb == 0.0);
    }

    #[test]
    fn forward_closed_limits() {
        assert_eq!(nf_forward_closed(0.0, 0.3, 0.85).unwrap().nf_linear, 1.0);
        for &s in &[0.2, 1.0, 2.2] {
            let r = nf_forward_closed(s, 1.0, 1.0).unwrap();
            let want = 1.0 / (2.0 * s.cosh().powi(2) - 1.0);
            assert!((r.nf_linear - want).abs() < 1e-12);
            assert_eq!(r.breakdown.vacuum_term, 0.0);
        }
        let closed = nf_forward_closed(1.2, 0.8, 0.85).unwrap().nf_linear;
        assert!((closed - general(1.2, 0.8, 1.0, 0.85, 0.85)).abs() < 1e-9);
        assert!(nf_forward_closed(1.0, 0.0, 0.85).is_err());
        assert!(nf_forward_closed(-1.0, 0.5, 0.85).is_err());
    }

    #[test]
    fn reverse_closed_limits() {
        for &s in &[0.2, 1.0, 2.2] {
            let r = nf_reverse_closed(s, 1.0, 1.0).unwrap();
            assert!((r.nf_linear - 1.0 / (2.0 * s.cosh().powi(2) - 1.0)).abs() < 1e-12);
        }
        let s = squeezing_from_gain(3.0).unwrap();
        let closed = nf_reverse_closed(s, 0.8, 0.85).unwrap().nf_linear;
        assert!((closed - general(s, 1.0, 0.8, 0.85, 0.85)).abs() < 1e-9);
    }

    #[test]
    fn reverse_never_beats_forward_at_g3() {
        let s = squeezing_from_gain(3.0).unwrap();
        for k in 1..200 {
            let t = k as f64 / 200.0;
            let f = nf_forward_closed(s, t, 0.85).unwrap().nf_linear;
            let r = nf_reverse_closed(s, t, 0.85).unwrap().nf_linear;
            assert!(r >= f, "t = {t}: reverse {r} < forward {f}");
        }
    }

    #[test]
    fn breakdown_sums() {
        let r = nf_forward_closed(0.8, 0.6, 0.85).unwrap();
        assert!((r.breakdown.total() - r.nf_linear).abs() < 1e-15);
        assert!(r.breakdown.mixing_term <= 0.0 && r.breakdown.vacuum_term >= 0.0);
        let m = MediumParams::new(0.8, 0.6, 0.9).unwrap();
        let g = nf_general(&m, &DetectionParams::new(0.8, 0.9).unwrap()).unwrap();
        assert!((g.breakdown.total() - g.nf_linear).abs() < 1e-12);
    }

    #[test]
    fn optimal_transmission_examples() {
        let s5 = squeezing_from_gain(5.0).unwrap();
        let opt = optimal_probe_transmission(s5, 0.85).unwrap();
        assert!(opt.ta_star < 1.0);

        let s2 = squeezing_from_gain(2.0).unwrap();
        let opt = optimal_probe_transmission(s2, 0.85).unwrap();
        assert!(opt.nf_star <= nf_forward_closed(s2, 1.0, 0.85).unwrap().nf_linear);

        assert!(optimal_probe_transmission(0.0, 0.85).is_err());
    }

    #[test]
    fn optimal_transmission_matches_fine_grid() {
        let s = squeezing_from_gain(3.0).unwrap();
        let n = 100_000;
        let (mut best_t, mut best_nf) = (1.0, f64::INFINITY);
        for k in 1..=n {
            let t = k as f64 / n as f64;
            let v = nf_forward_closed(s, t, 0.85).unwrap().nf_linear;
            if v < best_nf {
                best_nf = v;
                best_t = t;
            }
        }
        let opt = optimal_probe_transmission(s, 0.85).unwrap();
        assert!((opt.nf_star - best_nf).abs() <= 1e-6);
        assert!(opt.nf_star <= best_nf + 1e-12);
        assert!((opt.ta_star - best_t).abs() < 1e-3);
    }
}
