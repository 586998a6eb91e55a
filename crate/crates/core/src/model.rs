//! Continuum-model building blocks and result types.

use serde::{Deserialize, Serialize};

use crate::linalg::{sym_exp, SymMat2};
use crate::params::{to_db, MediumParams};

/// Generator of the continuum gain/loss map,
/// `[[½·log Ta, S], [S, ½·log Tb]]`. Its exponential is the lossy
/// two-mode squeeze transform of the whole medium.
pub fn a0_matrix(m: &MediumParams) -> SymMat2 {
    SymMat2::new(0.5 * m.ta().ln(), m.s(), 0.5 * m.tb().ln())
}

/// Distributed loss rates `diag(−log Ta, −log Tb)`.
pub fn loss_matrix(m: &MediumParams) -> SymMat2 {
    SymMat2::diag(-m.ta().ln(), -m.tb().ln())
}

/// Right-hand side `e^{A0}·T·e^{A0} − T` of the vacuum-sum Sylvester equation.
pub fn vacuum_rhs(m: &MediumParams) -> SymMat2 {
    let e = sym_exp(&a0_matrix(m));
    let t = loss_matrix(m);
    e.congruence(&t) - t
}

/// Auxiliary angles `(ξ, χ)` of the closed-form noise figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormAux {
    pub xi: f64,
    pub chi: f64,
}

impl ClosedFormAux {
    pub fn new(m: &MediumParams) -> Self {
        let d = m.ta().ln() - m.tb().ln();
        let xi = 0.25 * (16.0 * m.s() * m.s() + d * d).sqrt();
        let chi = if xi == 0.0 {
            0.0
        } else {
            let lim = 1.0 - 1e-15;
            (d / (4.0 * xi)).clamp(-lim, lim).atanh()
        };
        Self { xi, chi }
    }
}

/// Split of a noise figure into shot-noise, mixing-correlation and
/// injected-vacuum contributions. `snl_term` is always 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceBreakdown {
    pub snl_term: f64,
    pub mixing_term: f64,
    pub vacuum_term: f64,
}

impl VarianceBreakdown {
    pub fn from_parts(mixing_term: f64, vacuum_term: f64) -> Self {
        Self { snl_term: 1.0, mixing_term, vacuum_term }
    }

    pub fn total(&self) -> f64 {
        self.snl_term + self.mixing_term + self.vacuum_term
    }
}

/// Relative-intensity noise of the detected twin beams.
///
/// `variance_rel` and `snl_rel` are in units of the incident probe photon
/// number; `nf_linear` is their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseResult {
    pub nf_linear: f64,
    pub nf_db: f64,
    pub variance_rel: f64,
    pub snl_rel: f64,
    pub gain_probe: f64,
    pub gain_conjugate: f64,
    pub breakdown: VarianceBreakdown,
}

impl NoiseResult {
    pub(crate) fn from_variance(
        variance_rel: f64,
        gain_probe: f64,
        gain_conjugate: f64,
        breakdown: VarianceBreakdown,
    ) -> Self {
        let snl_rel = gain_probe + gain_conjugate;
        let nf_linear = variance_rel / snl_rel;
        Self { nf_linear, nf_db: to_db(nf_linear), variance_rel, snl_rel, gain_probe, gain_conjugate, breakdown }
    }

    /// Builds a result from a noise figure known in closed form; the variance
    /// is recovered as `nf·snl`.
    pub(crate) fn from_nf(
        nf_linear: f64,
        gain_probe: f64,
        gain_conjugate: f64,
        breakdown: VarianceBreakdown,
    ) -> Self {
        let snl_rel = gain_probe + gain_conjugate;
        Self {
            nf_linear,
            nf_db: to_db(nf_linear),
            variance_rel: nf_linear * snl_rel,
            snl_rel,
            gain_probe,
            gain_conjugate,
            breakdown,
        }
    }
}
