//! Medium and detection parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Intrinsic squeezing parameter and single-pass intensity transmissions of
/// the mixing medium.
///
/// `s` is the overall squeezing accumulated over the medium in the absence of
/// loss; `ta` and `tb` are the probe and conjugate transmissions in the absence
/// of mixing. The intrinsic gain is `cosh²(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    s: f64,
    ta: f64,
    tb: f64,
}

impl MediumParams {
    pub fn new(s: f64, ta: f64, tb: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::Domain(format!("squeezing parameter must be finite and >= 0, got {s}")));
        }
        check_transmission("Ta", ta)?;
        check_transmission("Tb", tb)?;
        Ok(Self { s, ta, tb })
    }

    /// Builds the medium from an intrinsic gain `G = cosh²(S)` instead of `S`.
    pub fn from_gain(gain: f64, ta: f64, tb: f64) -> Result<Self> {
        Self::new(squeezing_from_gain(gain)?, ta, tb)
    }

    pub fn lossless(s: f64) -> Result<Self> {
        Self::new(s, 1.0, 1.0)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn ta(&self) -> f64 {
        self.ta
    }

    pub fn tb(&self) -> f64 {
        self.tb
    }

    pub fn gain(&self) -> f64 {
        gain_from_squeezing(self.s)
    }

    pub fn is_lossless(&self) -> bool {
        self.ta == 1.0 && self.tb == 1.0
    }
}

/// Post-medium intensity transmissions (optics and detector efficiency).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    eta_a: f64,
    eta_b: f64,
}

impl DetectionParams {
    pub fn new(eta_a: f64, eta_b: f64) -> Result<Self> {
        check_transmission("eta_a", eta_a)?;
        check_transmission("eta_b", eta_b)?;
        Ok(Self { eta_a, eta_b })
    }

    pub fn balanced(eta: f64) -> Result<Self> {
        Self::new(eta, eta)
    }

    pub fn ideal() -> Self {
        Self { eta_a: 1.0, eta_b: 1.0 }
    }

    pub fn eta_a(&self) -> f64 {
        self.eta_a
    }

    pub fn eta_b(&self) -> f64 {
        self.eta_b
    }

    pub fn is_balanced(&self) -> bool {
        self.eta_a == self.eta_b
    }
}

pub(crate) fn check_transmission(name: &str, t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in (0, 1], got {t}")))
    }
}

pub fn gain_from_squeezing(s: f64) -> f64 {
    let c = s.cosh();
    c * c
}

/// Inverse of [`gain_from_squeezing`] on `S >= 0`.
pub fn squeezing_from_gain(gain: f64) -> Result<f64> {
    if !(gain.is_finite() && gain >= 1.0) {
        return Err(Error::Domain(format!("intrinsic gain must be finite and >= 1, got {gain}")));
    }
    // asinh(sqrt(G - 1)) is better conditioned than acosh(sqrt(G)) near G = 1.
    Ok((gain - 1.0).sqrt().asinh())
}

/// Linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
