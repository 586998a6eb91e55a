//! Discrete interleaved squeeze/loss chain.
//!
//! The medium is cut into `N` stages, each an ideal two-mode squeeze by
//! `s = S/N` followed by beamsplitter loss with amplitude transmissions
//! `t_a = Ta^{1/2N}` and `t_b = Tb^{1/2N}`. Every loss injects a fresh vacuum
//! mode. The noise figure is evaluated exactly from the resulting Bogoliubov
//! coefficients and converges to the continuum model as `N → ∞`, which makes
//! the chain an independent check on the matrix-exponential route.

use serde::Serialize;

use crate::analytic::nf_general;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::model::{NoiseResult, VarianceBreakdown};
use crate::params::{DetectionParams, MediumParams};

pub const DEFAULT_MAX_STAGES: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub medium: MediumParams,
    pub stages: u64,
    pub max_stages: u64,
}

impl ChainConfig {
    pub fn new(medium: MediumParams, stages: u64) -> Result<Self> {
        if stages == 0 {
            return Err(Error::Domain("chain needs at least one stage".into()));
        }
        Ok(Self { medium, stages, max_stages: DEFAULT_MAX_STAGES })
    }

    pub fn with_max_stages(mut self, max_stages: u64) -> Self {
        self.max_stages = max_stages;
        self
    }

    pub fn check_size(&self) -> Result<()> {
        if self.stages > self.max_stages {
            return Err(Error::Resource { requested: self.stages, max: self.max_stages });
        }
        Ok(())
    }

    pub fn stage_squeeze(&self) -> f64 {
        self.medium.s() / self.stages as f64
    }

    /// Amplitude transmissions `(t_a, t_b)` of one stage.
    pub fn stage_transmissions(&self) -> (f64, f64) {
        let n = self.stages as f64;
        ((self.medium.ta().ln() / (2.0 * n)).exp(), (self.medium.tb().ln() / (2.0 * n)).exp())
    }

    /// Vacuum weights `(1 − t_a², 1 − t_b²)` of one stage, without cancellation.
    pub fn stage_vacuum_weights(&self) -> (f64, f64) {
        let n = self.stages as f64;
        (-(self.medium.ta().ln() / n).exp_m1(), -(self.medium.tb().ln() / n).exp_m1())
    }
}

/// One stage of squeeze then loss, acting on `(a, b†)`.
pub fn stage_matrix(cfg: &ChainConfig) -> Mat2 {
    let s = cfg.stage_squeeze();
    let (ta, tb) = cfg.stage_transmissions();
    let (c, sh) = (s.cosh(), s.sinh());
    Mat2::new(ta * c, ta * sh, tb * sh, tb * c)
}

/// Bogoliubov coefficients of the output `a_N` (`alpha`) and `b_N†` (`beta`)
/// over the input modes `a_0, b_0†, x_1, y_1†, …, x_N, y_N†`.
///
/// Odd positions (1-based) are annihilation operators, even positions are
/// creation operators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl CoefficientSet {
    fn signed_sum(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.alpha.len()).map(|i| if i % 2 == 0 { f(i) } else { -f(i) }).sum()
    }

    /// `[a_N, a_N†]`, equal to 1 for a canonical output.
    pub fn probe_commutator(&self) -> f64 {
        self.signed_sum(|i| self.alpha[i] * self.alpha[i])
    }

    /// `[b_N†, b_N]`, equal to −1 for a canonical output.
    pub fn conjugate_commutator(&self) -> f64 {
        self.signed_sum(|i| self.beta[i] * self.beta[i])
    }

    /// `[a_N, b_N]`, equal to 0.
    pub fn cross_commutator(&self) -> f64 {
        self.signed_sum(|i| self.alpha[i] * self.beta[i])
    }
}

pub fn chain_coefficients(cfg: &ChainConfig) -> Result<CoefficientSet> {
    cfg.check_size()?;
    let n = cfg.stages as usize;
    let a = stage_matrix(cfg);
    let (wa, wb) = cfg.stage_vacuum_weights();
    let (ka, kb) = (wa.sqrt(), wb.sqrt());

    let mut alpha = vec![0.0; 2 * n + 2];
    let mut beta = vec![0.0; 2 * n + 2];
    // stage i sees A^{N-i}; walk k = N - i upward from the last stage
    let mut power = Mat2::IDENTITY;
    for k in 0..n {
        let i = n - k;
        alpha[2 * i] = power.a11 * ka;
        beta[2 * i] = power.a21 * ka;
        alpha[2 * i + 1] = power.a12 * kb;
        beta[2 * i + 1] = power.a22 * kb;
        power = a * power;
    }
    alpha[0] = power.a11;
    alpha[1] = power.a12;
    beta[0] = power.a21;
    beta[1] = power.a22;
    Ok(CoefficientSet { alpha, beta })
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Noise figure of the `N`-stage chain followed by detection losses.
///
/// With `w = (η_a·α₁, −η_b·β₁)` every input mode `j` contributes
/// `(wᵀ·c_j)²` where `c_j` is its coefficient column, so the sum streams
/// through the row vectors `wᵀ·A^k` without storing coefficients.
pub fn nf_discrete(cfg: &ChainConfig, d: &DetectionParams) -> Result<NoiseResult> {
    cfg.check_size()?;
    let (ea, eb) = (d.eta_a(), d.eta_b());
    let a = stage_matrix(cfg);
    let (wa, wb) = cfg.stage_vacuum_weights();

    let first_col = a.pow(cfg.stages).col(0);
    let (alpha1, beta1) = (first_col[0], first_col[1]);
    let mut u: Vec2 = [ea * alpha1, -eb * beta1];

    let mut vacuum = CompensatedSum::default();
    for _ in 0..cfg.stages {
        vacuum.add(u[0] * u[0] * wa + u[1] * u[1] * wb);
        u = a.vec_mul(u);
    }
    let inputs = u[0] * u[0] + u[1] * u[1];
    let detection = ea * (1.0 - ea) * alpha1 * alpha1 + eb * (1.0 - eb) * beta1 * beta1;

    let (ga, gb) = (ea * alpha1 * alpha1, eb * beta1 * beta1);
    let snl = ga + gb;
    let vacuum = vacuum.value();
    let variance = inputs + vacuum + detection;
    let nf = variance / snl;
    let vacuum_term = vacuum / snl;
    Ok(NoiseResult::from_variance(
        variance,
        ga,
        gb,
        VarianceBreakdown::from_parts(nf - 1.0 - vacuum_term, vacuum_term),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub stages: u64,
    pub nf: f64,
    pub abs_error: f64,
}

/// Discrete noise figure at each `N` and its distance from the continuum model.
pub fn convergence_table(m: &MediumParams, d: &DetectionParams, stages: &[u64]) -> Result<Vec<ConvergenceRow>> {
    if stages.is_empty() {
        return Err(Error::Domain("stage list is empty".into()));
    }
    if stages.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("stage list must be strictly ascending".into()));
    }
    let reference = nf_general(m, d)?.nf_linear;
    stages
        .iter()
        .map(|&n| {
            let nf = nf_discrete(&ChainConfig::new(*m, n)?, d)?.nf_linear;
            Ok(ConvergenceRow { stages: n, nf, abs_error: (nf - reference).abs() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(s: f64, ta: f64, tb: f64, n: u64) -> ChainConfig {
        ChainConfig::new(MediumParams::new(s, ta, tb).unwrap(), n).unwrap()
    }

    /// Noise figure straight from the full coefficient lists.
    fn nf_from_coefficients(c: &CoefficientSet, d: &DetectionParams) -> f64 {
        let (ea, eb) = (d.eta_a(), d.eta_b());
        let (a1, b1) = (c.alpha[0], c.beta[0]);
        let mut num: f64 = c
            .alpha
            .iter()
            .zip(&c.beta)
            .map(|(a, b)| (ea * a1 * a - eb * b1 * b).powi(2))
            .sum();
        num += ea * (1.0 - ea) * a1 * a1 + eb * (1.0 - eb) * b1 * b1;
        num / (ea * a1 * a1 + eb * b1 * b1)
    }

    #[test]
    fn stage_matrix_examples() {
        assert_eq!(stage_matrix(&cfg(0.0, 1.0, 1.0, 7)), Mat2::IDENTITY);
        let s0 = 0.6f64;
        let m = stage_matrix(&cfg(s0, 1.0, 1.0, 1));
        assert_eq!(m, Mat2::new(s0.cosh(), s0.sinh(), s0.sinh(), s0.cosh()));
        let m = stage_matrix(&cfg(0.0, 0.81, 1.0, 1));
        assert!(m.max_abs_diff(&Mat2::new(0.9, 0.0, 0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn single_lossless_stage_coefficients() {
        let s = 0.8f64;
        let c = chain_coefficients(&cfg(s, 1.0, 1.0, 1)).unwrap();
        assert_eq!(c.alpha, vec![s.cosh(), s.sinh(), 0.0, 0.0]);
        assert_eq!(c.beta, vec![s.sinh(), s.cosh(), 0.0, 0.0]);
    }

    #[test]
    fn two_stage_absorption_by_hand() {
        // t_a = 0.25^{1/4} = √0.5, so A = diag(√0.5, 1) and A² = diag(0.5, 1)
        let c = chain_coefficients(&cfg(0.0, 0.25, 1.0, 2)).unwrap();
        let h = 0.5f64.sqrt();
        let want_alpha = [0.5, 0.0, h * h, 0.0, h, 0.0];
        let want_beta = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        for i in 0..6 {
            assert!((c.alpha[i] - want_alpha[i]).abs() < 1e-15, "alpha[{i}]");
            assert!((c.beta[i] - want_beta[i]).abs() < 1e-15, "beta[{i}]");
        }
    }

    #[test]
    fn resource_limit() {
        let c = cfg(1.0, 0.7, 1.0, 1_000).with_max_stages(999);
        assert!(matches!(chain_coefficients(&c), Err(Error::Resource { requested: 1000, max: 999 })));
        assert!(matches!(nf_discrete(&c, &DetectionParams::ideal()), Err(Error::Resource { .. })));
        assert!(ChainConfig::new(MediumParams::lossless(1.0).unwrap(), 0).is_err());
    }

    #[test]
    fn streaming_matches_coefficient_sum() {
        let d = DetectionParams::new(0.8, 0.9).unwrap();
        for &(s, ta, tb, n) in &[(1.0, 0.7, 1.0, 50), (0.4, 0.5, 0.8, 13), (2.0, 1.0, 0.6, 200)] {
            let c = cfg(s, ta, tb, n);
            let streamed = nf_discrete(&c, &d).unwrap().nf_linear;
            let direct = nf_from_coefficients(&chain_coefficients(&c).unwrap(), &d);
            assert!((streamed - direct).abs() < 1e-12, "{streamed} vs {direct}");
        }
    }

    #[test]
    fn lossless_chain_is_exact_for_every_n() {
        let s = 1.1f64;
        let want = 1.0 / (2.0 * s.cosh().powi(2) - 1.0);
        for &n in &[1, 2, 17, 1000, 100_000] {
            let nf = nf_discrete(&cfg(s, 1.0, 1.0, n), &DetectionParams::ideal()).unwrap().nf_linear;
            assert!((nf - want).abs() < 1e-11, "N = {n}: {nf}");
        }
        let nf = nf_discrete(&cfg(0.0, 1.0, 1.0, 10), &DetectionParams::ideal()).unwrap().nf_linear;
        assert_eq!(nf, 1.0);
    }

    #[test]
    fn convergence_table_validates_input() {
        let m = MediumParams::new(1.0, 0.7, 1.0).unwrap();
        let d = DetectionParams::ideal();
        assert!(convergence_table(&m, &d, &[]).is_err());
        assert!(convergence_table(&m, &d, &[100, 50]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn commutators_preserved(s in 0.0f64..2.5, ta in 0.05f64..=1.0, tb in 0.05f64..=1.0, n in 1u64..400) {
            let c = chain_coefficients(&cfg(s, ta, tb, n)).unwrap();
            prop_assert!((c.probe_commutator() - 1.0).abs() <= 1e-9);
            prop_assert!((c.conjugate_commutator() + 1.0).abs() <= 1e-9);
            prop_assert!(c.cross_commutator().abs() <= 1e-9);
        }
    }
}
