//! Fusion statistics formed at the feed outputs.
//!
//! The optimal test is the likelihood ratio of the Gaussian mixture induced
//! by the 2^K decision patterns; it is exact but exponential in K and, at
//! realistic noise levels, only computable in log domain. The practical
//! alternative is a widely linear statistic Re(a† y) + Re(a^T conj(y)),
//! written here as the augmented inner product ā† ȳ with ā = [a; conj(a)].
//! Weight vectors are unit-norm and conjugate-pair by construction, which
//! keeps the statistic exactly real.
//!
//! Weights are ranked by deflection: the squared separation of the
//! statistic's conditional means over its conditional variance. Three
//! design kinds are supported; two normalize by the decision-induced
//! interference plus noise under either hypothesis, the third assumes
//! error-free decisions so only thermal noise remains. Each kind's optimal
//! weights maximize its deflection over all augmented vectors, a
//! generalized matched filter obtained from one Hermitian solve.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::sensing::{
    augment, conditional_moments, DecisionPmf, Hypothesis, SensingError, SensorStats,
};
use crate::{CMat, CVec};

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("augmented weight vector must have even length, got {0}")]
    OddAugmentedLength(usize),
    #[error("augmented weights break conjugate-pair structure (residual {0:e})")]
    NotConjugatePair(f64),
    #[error("weight vector is zero")]
    ZeroWeights,
    #[error("design signal is zero: uninformative sensors or fully blocked channel")]
    ZeroSignal,
    #[error("quadratic form is not positive: {0}")]
    NonPositiveQuadraticForm(f64),
    #[error("noise power must be positive for this operation, got {0}")]
    NonPositiveNoise(f64),
    #[error("augmented covariance solve failed: matrix is singular")]
    SingularCovariance,
    #[error("dimension mismatch: {what} has {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Sensing(#[from] SensingError),
}

/// Weight design criteria.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesignKind {
    /// Deflection with the interference-plus-noise covariance evaluated
    /// under the target-absent hypothesis.
    MatchedAbsent,
    /// Deflection with the covariance evaluated under the target-present
    /// hypothesis.
    MatchedPresent,
    /// Ideal-sensor approximation: decisions assumed error-free, so the
    /// statistic is matched against thermal noise only.
    IdealSensor,
}

impl DesignKind {
    pub const ALL: [DesignKind; 3] = [
        DesignKind::MatchedAbsent,
        DesignKind::MatchedPresent,
        DesignKind::IdealSensor,
    ];

    /// Hypothesis whose covariance normalizes the deflection, when any.
    pub fn conditioning(self) -> Option<Hypothesis> {
        match self {
            DesignKind::MatchedAbsent => Some(Hypothesis::Absent),
            DesignKind::MatchedPresent => Some(Hypothesis::Present),
            DesignKind::IdealSensor => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DesignKind::MatchedAbsent => "matched-h0",
            DesignKind::MatchedPresent => "matched-h1",
            DesignKind::IdealSensor => "ideal-sensor",
        }
    }
}

const CONJUGATE_PAIR_TOL: f64 = 1e-9;

/// Unit-norm widely linear fusion weights over the augmented observation.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionWeights {
    aug: CVec,
}

impl FusionWeights {
    /// Accepts an augmented vector, verifies it is conjugate-paired within
    /// tolerance, then rebuilds the pair exactly and normalizes.
    pub fn from_augmented(aug: CVec) -> Result<Self, FusionError> {
        if aug.len() % 2 != 0 {
            return Err(FusionError::OddAugmentedLength(aug.len()));
        }
        let n = aug.len() / 2;
        let scale = aug.norm();
        if scale == 0.0 {
            return Err(FusionError::ZeroWeights);
        }
        let mut residual: f64 = 0.0;
        for i in 0..n {
            residual = residual.max((aug[i] - aug[n + i].conj()).norm());
        }
        if residual > CONJUGATE_PAIR_TOL * scale {
            return Err(FusionError::NotConjugatePair(residual / scale));
        }
        let half = CVec::from_fn(n, |i, _| (aug[i] + aug[n + i].conj()) * 0.5);
        Self::from_half(half)
    }

    /// Builds [a; conj(a)] / norm from the non-augmented half.
    pub fn from_half(half: CVec) -> Result<Self, FusionError> {
        let mut aug = augment(&half);
        let norm = aug.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(FusionError::ZeroWeights);
        }
        aug /= Complex64::new(norm, 0.0);
        Ok(Self { aug })
    }

    pub fn augmented(&self) -> &CVec {
        &self.aug
    }

    /// First half of the augmented vector.
    pub fn half(&self) -> CVec {
        let n = self.dim();
        CVec::from_fn(n, |i, _| self.aug[i])
    }

    /// Observation dimension N (the augmented vector has length 2N).
    pub fn dim(&self) -> usize {
        self.aug.len() / 2
    }
}

/// Widely linear statistic ā† ȳ. Exactly real for conjugate-paired weights;
/// the residual imaginary part is asserted negligible and discarded.
pub fn wl_statistic(weights: &FusionWeights, y: &CVec) -> f64 {
    assert_eq!(weights.dim(), y.len(), "weights sized for this observation");
    let value = weights.aug.dotc(&augment(y));
    assert!(
        value.im.abs() <= 1e-10 * (1.0 + y.norm()),
        "widely linear statistic should be real, got imaginary part {}",
        value.im
    );
    value.re
}

/// Decide target-present when the statistic strictly exceeds the
/// threshold; ties go to target-absent.
pub fn threshold_test(statistic: f64, gamma: f64) -> Hypothesis {
    if statistic > gamma {
        Hypothesis::Present
    } else {
        Hypothesis::Absent
    }
}

fn scaled_target(channel_eff: &CMat, stats: &SensorStats, target: &DVector<f64>) -> CVec {
    let k = stats.num_sensors();
    let weighted = CVec::from_fn(k, |i, _| {
        Complex64::new(stats.alpha()[i] * target[i], 0.0)
    });
    channel_eff * weighted
}

/// Deflection of the widely linear statistic under the given design kind.
pub fn deflection(
    kind: DesignKind,
    weights: &FusionWeights,
    channel_eff: &CMat,
    stats: &SensorStats,
    noise_power: f64,
) -> Result<f64, FusionError> {
    if channel_eff.nrows() != weights.dim() {
        return Err(FusionError::Dimension {
            what: "channel rows",
            got: channel_eff.nrows(),
            expected: weights.dim(),
        });
    }
    let aug = weights.augmented();
    match kind.conditioning() {
        Some(h) => {
            let signal = augment(&scaled_target(channel_eff, stats, &stats.prob_gap()));
            let numerator = {
                let s = aug.dotc(&signal);
                4.0 * s.re * s.re
            };
            let cov = conditional_moments(channel_eff, stats, noise_power, h)?.augmented_cov();
            let denominator = aug.dotc(&(&cov * aug)).re;
            if !(denominator > 0.0) {
                return Err(FusionError::NonPositiveQuadraticForm(denominator));
            }
            Ok(numerator / denominator)
        }
        None => {
            if !(noise_power > 0.0) {
                return Err(FusionError::NonPositiveNoise(noise_power));
            }
            let ones = DVector::from_element(stats.num_sensors(), 1.0);
            let signal = augment(&scaled_target(channel_eff, stats, &ones));
            let s = aug.dotc(&signal);
            // weights are unit norm, so ā†ā = 1 needs no explicit division
            Ok(4.0 / noise_power * s.re * s.re)
        }
    }
}

/// Deflection-optimal weights for the given design kind.
///
/// The matched kinds solve the augmented-covariance system against the
/// augmented signal direction (a generalized matched filter); the
/// ideal-sensor kind reduces to the normalized augmented signal itself.
pub fn optimal_weights(
    kind: DesignKind,
    channel_eff: &CMat,
    stats: &SensorStats,
    noise_power: f64,
) -> Result<FusionWeights, FusionError> {
    match kind.conditioning() {
        Some(h) => {
            let signal = augment(&scaled_target(channel_eff, stats, &stats.prob_gap()));
            if signal.norm() == 0.0 {
                return Err(FusionError::ZeroSignal);
            }
            let cov = conditional_moments(channel_eff, stats, noise_power, h)?.augmented_cov();
            let solution = match cov.clone().cholesky() {
                Some(chol) => chol.solve(&signal),
                None => cov
                    .lu()
                    .solve(&signal)
                    .ok_or(FusionError::SingularCovariance)?,
            };
            FusionWeights::from_augmented(solution)
        }
        None => {
            let ones = DVector::from_element(stats.num_sensors(), 1.0);
            let signal = scaled_target(channel_eff, stats, &ones);
            if signal.norm() == 0.0 {
                return Err(FusionError::ZeroSignal);
            }
            FusionWeights::from_half(signal)
        }
    }
}

/// Streaming log-sum-exp accumulator.
struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn add(&mut self, value: f64) {
        if value == f64::NEG_INFINITY {
            return;
        }
        if value <= self.max {
            self.sum += (value - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - value).exp() + 1.0;
            self.max = value;
        }
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// Exact log likelihood ratio of the received snapshot, marginalizing over
/// all 2^K decision patterns under each hypothesis.
///
/// Builds both joint tables on every call; trial loops should build the
/// tables once and use [`llr_with_pmfs`].
pub fn llr(
    y: &CVec,
    channel_eff: &CMat,
    stats: &SensorStats,
    noise_power: f64,
) -> Result<f64, FusionError> {
    let absent = stats.decision_pmf(Hypothesis::Absent)?;
    let present = stats.decision_pmf(Hypothesis::Present)?;
    llr_with_pmfs(y, channel_eff, stats.alpha(), &absent, &present, noise_power)
}

/// Log likelihood ratio with caller-provided decision tables.
///
/// Enumerates patterns in Gray-code order so each step updates the residual
/// by a single column, and accumulates both hypotheses in log domain; the
/// result stays finite even when individual exponents are far below the
/// underflow threshold.
pub fn llr_with_pmfs(
    y: &CVec,
    channel_eff: &CMat,
    alpha: &DVector<f64>,
    absent: &DecisionPmf,
    present: &DecisionPmf,
    noise_power: f64,
) -> Result<f64, FusionError> {
    let k = channel_eff.ncols();
    let n = channel_eff.nrows();
    if y.len() != n {
        return Err(FusionError::Dimension {
            what: "observation",
            got: y.len(),
            expected: n,
        });
    }
    if alpha.len() != k || absent.num_sensors() != k || present.num_sensors() != k {
        return Err(FusionError::Dimension {
            what: "decision tables",
            got: absent.num_sensors(),
            expected: k,
        });
    }
    if !(noise_power > 0.0) {
        return Err(FusionError::NonPositiveNoise(noise_power));
    }

    // columns of H_eff D_α
    let cols: Vec<CVec> = (0..k)
        .map(|j| {
            CVec::from_fn(n, |i, _| channel_eff[(i, j)] * alpha[j])
        })
        .collect();

    // start at pattern 0: all decisions -1
    let mut residual = y.clone();
    for col in &cols {
        residual += col;
    }

    let mut lse = [LogSumExp::new(), LogSumExp::new()];
    let mut mask = 0usize;
    let total = 1usize << k;
    for step in 0..total {
        if step > 0 {
            // Gray code: flip exactly one sensor per step
            let bit = step.trailing_zeros() as usize;
            mask ^= 1 << bit;
            let flipped_up = mask >> bit & 1 == 1;
            // decision at `bit` moved by ±2
            if flipped_up {
                residual.axpy(Complex64::new(-2.0, 0.0), &cols[bit], Complex64::ONE);
            } else {
                residual.axpy(Complex64::new(2.0, 0.0), &cols[bit], Complex64::ONE);
            }
        }
        let base = -residual.norm_squared() / noise_power;
        lse[0].add(base + absent.prob(mask).ln());
        lse[1].add(base + present.prob(mask).ln());
    }
    Ok(lse[1].value() - lse[0].value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use approx::assert_relative_eq;

    fn ones(k: usize) -> DVector<f64> {
        DVector::from_element(k, 1.0)
    }

    fn random_channel(n: usize, k: usize, seed: u64) -> CMat {
        let mut rng = RandomStream::from_seed(seed);
        CMat::from_fn(n, k, |_, _| rng.complex_normal(1.0))
    }

    fn random_weights(n: usize, seed: u64) -> FusionWeights {
        let mut rng = RandomStream::from_seed(seed);
        FusionWeights::from_half(CVec::from_fn(n, |_, _| rng.complex_normal(1.0))).unwrap()
    }

    fn random_y(n: usize, seed: u64) -> CVec {
        let mut rng = RandomStream::from_seed(seed);
        CVec::from_fn(n, |_, _| rng.complex_normal(1.0))
    }

    #[test]
    fn weights_structure_is_enforced() {
        let a = CVec::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(0.5, -1.0)]);
        let w = FusionWeights::from_half(a.clone()).unwrap();
        assert_relative_eq!(w.augmented().norm(), 1.0, epsilon = 1e-14);
        assert_eq!(w.augmented()[2], w.augmented()[0].conj());
        assert_eq!(w.augmented()[3], w.augmented()[1].conj());

        // an augmented vector that is not conjugate-paired is rejected
        let broken = CVec::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ]);
        assert!(matches!(
            FusionWeights::from_augmented(broken),
            Err(FusionError::NotConjugatePair(_))
        ));
        assert!(matches!(
            FusionWeights::from_half(CVec::zeros(2)),
            Err(FusionError::ZeroWeights)
        ));
        assert!(matches!(
            FusionWeights::from_augmented(CVec::from_vec(vec![Complex64::ONE; 3])),
            Err(FusionError::OddAugmentedLength(3))
        ));
    }

    #[test]
    fn wl_statistic_is_twice_the_real_projection() {
        let w = random_weights(3, 4);
        let y = random_y(3, 9);
        let direct = 2.0 * w.half().dotc(&y).re;
        assert_relative_eq!(wl_statistic(&w, &y), direct, max_relative = 1e-12);
    }

    #[test]
    fn wl_statistic_is_linear_in_y() {
        let w = random_weights(2, 1);
        let y1 = random_y(2, 2);
        let y2 = random_y(2, 3);
        let sum = &y1 + &y2;
        assert_relative_eq!(
            wl_statistic(&w, &sum),
            wl_statistic(&w, &y1) + wl_statistic(&w, &y2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn threshold_ties_decide_absent() {
        assert_eq!(threshold_test(1.0, 1.0), Hypothesis::Absent);
        assert_eq!(threshold_test(1.0 + 1e-12, 1.0), Hypothesis::Present);
        assert_eq!(threshold_test(0.5, 1.0), Hypothesis::Absent);
    }

    #[test]
    fn deflection_zero_for_uninformative_sensors() {
        let h = random_channel(2, 3, 11);
        let stats = SensorStats::iid(3, 0.3, 0.3, ones(3)).unwrap();
        let w = random_weights(2, 5);
        let d = deflection(DesignKind::MatchedAbsent, &w, &h, &stats, 0.5).unwrap();
        assert_eq!(d, 0.0);
        assert!(matches!(
            optimal_weights(DesignKind::MatchedAbsent, &h, &stats, 0.5),
            Err(FusionError::ZeroSignal)
        ));
    }

    #[test]
    fn deflection_matches_moment_form() {
        // the design formula must equal (E1[Λ] - E0[Λ])² / var(Λ) computed
        // straight from the conditional moments
        let h = random_channel(3, 4, 17);
        let stats = SensorStats::iid_per_sensor(
            DVector::from_vec(vec![0.9, 0.8, 0.7, 0.6]),
            DVector::from_vec(vec![0.1, 0.2, 0.05, 0.3]),
            DVector::from_vec(vec![1.0, 1.5, 0.7, 1.2]),
        )
        .unwrap();
        let sigma2 = 0.4;
        for (kind, h_cond) in [
            (DesignKind::MatchedAbsent, Hypothesis::Absent),
            (DesignKind::MatchedPresent, Hypothesis::Present),
        ] {
            for seed in [1, 2, 3] {
                let w = random_weights(3, seed);
                let m0 = conditional_moments(&h, &stats, sigma2, Hypothesis::Absent).unwrap();
                let m1 = conditional_moments(&h, &stats, sigma2, Hypothesis::Present).unwrap();
                let mc = conditional_moments(&h, &stats, sigma2, h_cond).unwrap();
                let gap = w
                    .augmented()
                    .dotc(&(m1.augmented_mean() - m0.augmented_mean()))
                    .re;
                let var = w
                    .augmented()
                    .dotc(&(mc.augmented_cov() * w.augmented()))
                    .re;
                let expected = gap * gap / var;
                let got = deflection(kind, &w, &h, &stats, sigma2).unwrap();
                assert_relative_eq!(got, expected, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn ideal_sensor_deflection_scales_with_inverse_noise() {
        let h = random_channel(2, 3, 23);
        let stats = SensorStats::iid(3, 0.9, 0.05, ones(3)).unwrap();
        let w = random_weights(2, 8);
        let d1 = deflection(DesignKind::IdealSensor, &w, &h, &stats, 0.2).unwrap();
        let d2 = deflection(DesignKind::IdealSensor, &w, &h, &stats, 0.4).unwrap();
        assert_relative_eq!(d1, 2.0 * d2, max_relative = 1e-12);
        assert!(matches!(
            deflection(DesignKind::IdealSensor, &w, &h, &stats, 0.0),
            Err(FusionError::NonPositiveNoise(_))
        ));
    }

    #[test]
    fn optimal_weights_beat_random_probes() {
        let h = random_channel(2, 4, 31);
        let stats = SensorStats::iid(4, 0.6, 0.1, ones(4)).unwrap();
        let sigma2 = 0.3;
        for kind in DesignKind::ALL {
            let best = optimal_weights(kind, &h, &stats, sigma2).unwrap();
            let d_best = deflection(kind, &best, &h, &stats, sigma2).unwrap();
            for seed in 0..50 {
                let probe = random_weights(2, 1000 + seed);
                let d = deflection(kind, &probe, &h, &stats, sigma2).unwrap();
                assert!(
                    d <= d_best * (1.0 + 1e-10),
                    "{kind:?}: probe {d} beats optimum {d_best}"
                );
            }
        }
    }

    #[test]
    fn matched_weights_collapse_to_ideal_under_perfect_sensors() {
        let h = random_channel(3, 2, 41);
        let stats = SensorStats::ideal(2, ones(2)).unwrap();
        let sigma2 = 0.7;
        let matched = optimal_weights(DesignKind::MatchedAbsent, &h, &stats, sigma2).unwrap();
        let ideal = optimal_weights(DesignKind::IdealSensor, &h, &stats, sigma2).unwrap();
        // prob_gap = 1 and covariance = σ² I: same direction up to phase
        let overlap = matched.augmented().dotc(ideal.augmented()).norm();
        assert_relative_eq!(overlap, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn ideal_weights_single_feed_closed_form() {
        let h = random_channel(1, 3, 47);
        let alpha = DVector::from_vec(vec![1.0, 2.0, 0.5]);
        let stats = SensorStats::iid(3, 0.8, 0.1, alpha.clone()).unwrap();
        let w = optimal_weights(DesignKind::IdealSensor, &h, &stats, 0.1).unwrap();
        let c: Complex64 = (0..3).map(|k| h[(0, k)] * alpha[k]).sum();
        let expected = c / (2.0f64.sqrt() * c.norm());
        assert_relative_eq!(w.augmented()[0].re, expected.re, max_relative = 1e-12);
        assert_relative_eq!(w.augmented()[0].im, expected.im, max_relative = 1e-12);
        assert_relative_eq!(w.augmented()[1].re, expected.conj().re, max_relative = 1e-12);
    }

    #[test]
    fn llr_zero_when_hypotheses_coincide() {
        let h = random_channel(2, 3, 53);
        let stats = SensorStats::iid(3, 0.4, 0.4, ones(3)).unwrap();
        let y = random_y(2, 6);
        assert_eq!(llr(&y, &h, &stats, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn llr_vanishes_as_noise_dominates() {
        let h = random_channel(2, 3, 59);
        let stats = SensorStats::iid(3, 0.9, 0.1, ones(3)).unwrap();
        let y = random_y(2, 7);
        let v = llr(&y, &h, &stats, 1e12).unwrap();
        assert!(v.abs() < 1e-9, "llr {v}");
    }

    #[test]
    fn llr_matches_direct_enumeration() {
        // direct sum without Gray updates or log-sum-exp, at a noise level
        // where the naive form cannot overflow
        let h = random_channel(2, 3, 61);
        let alpha = DVector::from_vec(vec![1.0, 0.8, 1.3]);
        let stats = SensorStats::iid_per_sensor(
            DVector::from_vec(vec![0.9, 0.7, 0.85]),
            DVector::from_vec(vec![0.15, 0.05, 0.2]),
            alpha.clone(),
        )
        .unwrap();
        let sigma2 = 1.7;
        for seed in 0..20 {
            let y = random_y(2, 100 + seed);
            let mut sums = [0.0f64; 2];
            for (hi, hyp) in Hypothesis::BOTH.iter().enumerate() {
                let pmf = stats.decision_pmf(*hyp).unwrap();
                for mask in 0..8usize {
                    let x = DVector::from_fn(3, |k, _| {
                        if mask >> k & 1 == 1 {
                            1.0
                        } else {
                            -1.0
                        }
                    });
                    let mut r = y.clone();
                    for k in 0..3 {
                        r -= h.column(k).into_owned() * Complex64::new(alpha[k] * x[k], 0.0);
                    }
                    sums[hi] += pmf.prob(mask) * (-r.norm_squared() / sigma2).exp();
                }
            }
            let expected = (sums[1] / sums[0]).ln();
            let got = llr(&y, &h, &stats, sigma2).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn llr_finite_at_operational_noise_floor() {
        // exponents near -1e7 underflow the naive form; the log-domain path
        // must stay finite
        let mut rng = RandomStream::from_seed(71);
        let h = CMat::from_fn(1, 10, |_, _| rng.complex_normal(1e-6));
        let stats = SensorStats::iid(10, 0.5, 0.05, ones(10)).unwrap();
        let y = CVec::from_vec(vec![Complex64::new(3e-2, -1e-2)]);
        let v = llr(&y, &h, &stats, 1e-8).unwrap();
        assert!(v.is_finite(), "llr {v}");
    }

    #[test]
    fn llr_invariant_under_sensor_relabeling() {
        let h = random_channel(2, 3, 67);
        let alpha = DVector::from_vec(vec![1.0, 2.0, 0.5]);
        // correlated tables to exercise the joint path
        let mut rng = RandomStream::from_seed(3);
        let raw: Vec<f64> = (0..8).map(|_| rng.uniform(0.1, 1.0)).collect();
        let total: f64 = raw.iter().sum();
        let base: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let shift: Vec<f64> = {
            let raw: Vec<f64> = (0..8).map(|i| base[i] * (1.0 + 0.3 * (i as f64))).collect();
            let t: f64 = raw.iter().sum();
            raw.iter().map(|v| v / t).collect()
        };
        let perm = [2usize, 0, 1]; // new position of each sensor
        let permute_mask = |mask: usize| -> usize {
            (0..3).fold(0, |acc, k| acc | ((mask >> k & 1) << perm[k]))
        };
        let permute_table = |t: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; 8];
            for (mask, &p) in t.iter().enumerate() {
                out[permute_mask(mask)] = p;
            }
            out
        };
        let y = random_y(2, 8);
        let sigma2 = 0.9;

        let p0 = DecisionPmf::from_table(base.clone()).unwrap();
        let p1 = DecisionPmf::from_table(shift.clone()).unwrap();
        let direct = llr_with_pmfs(&y, &h, &alpha, &p0, &p1, sigma2).unwrap();

        let mut h_perm = CMat::zeros(2, 3);
        let mut alpha_perm = DVector::zeros(3);
        for k in 0..3 {
            h_perm.set_column(perm[k], &h.column(k));
            alpha_perm[perm[k]] = alpha[k];
        }
        let q0 = DecisionPmf::from_table(permute_table(&base)).unwrap();
        let q1 = DecisionPmf::from_table(permute_table(&shift)).unwrap();
        let permuted = llr_with_pmfs(&y, &h_perm, &alpha_perm, &q0, &q1, sigma2).unwrap();
        assert_relative_eq!(direct, permuted, max_relative = 1e-11);
    }

    #[test]
    fn llr_rejects_bad_inputs() {
        let h = random_channel(2, 3, 73);
        let stats = SensorStats::iid(3, 0.9, 0.1, ones(3)).unwrap();
        let y = random_y(3, 5);
        assert!(matches!(
            llr(&y, &h, &stats, 0.5),
            Err(FusionError::Dimension { .. })
        ));
        let y = random_y(2, 5);
        assert!(matches!(
            llr(&y, &h, &stats, 0.0),
            Err(FusionError::NonPositiveNoise(_))
        ));
    }
}
