//! Local sensor decisions and the signal they induce at the receiver.
//!
//! Each sensor broadcasts its binary decision as an antipodal symbol
//! x_k in {-1, +1} with per-sensor amplitude α_k; all sensors transmit at
//! once over the same channel, so the receiver observes
//! y = H_eff D_α x + w with circularly symmetric noise w.
//!
//! Decision quality is captured by the probability of reporting +1 under
//! each hypothesis. Two decision laws are supported: independent sensors
//! (the default), and an explicit joint probability table over all 2^K
//! decision patterns for correlated deployments. Both expose the first and
//! second moments the fusion layer consumes.
//!
//! Because x is discrete, y is non-Gaussian: its conditional second-order
//! description needs the covariance and the pseudo-covariance together, or
//! equivalently the covariance of the augmented vector [y; conj(y)]. The
//! augmented forms are assembled here and used by every widely linear
//! operation downstream.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomStream;
use crate::{CMat, CVec};

/// Largest sensor count for which an explicit joint table is accepted.
pub const MAX_TABLE_SENSORS: usize = 20;
/// Joint tables must sum to one within this tolerance.
pub const PMF_NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Target absent (null hypothesis).
    Absent,
    /// Target present.
    Present,
}

impl Hypothesis {
    pub const BOTH: [Hypothesis; 2] = [Hypothesis::Absent, Hypothesis::Present];

    pub fn index(self) -> usize {
        match self {
            Hypothesis::Absent => 0,
            Hypothesis::Present => 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("sensor {sensor}: need 0 <= false alarm {pf} <= detection {pd} <= 1")]
    InvalidProbabilities { sensor: usize, pf: f64, pd: f64 },
    #[error("amplitude vector has {got} entries, expected {expected}")]
    AmplitudeMismatch { got: usize, expected: usize },
    #[error("amplitude {0} must be positive and finite")]
    InvalidAmplitude(f64),
    #[error("joint table has {0} entries, which is not a power of two")]
    TableNotPowerOfTwo(usize),
    #[error("joint table implies {0} sensors, more than the supported {MAX_TABLE_SENSORS}")]
    TableTooLarge(usize),
    #[error("joint table sums to {0}, outside the normalization tolerance")]
    TableNotNormalized(f64),
    #[error("joint table entry {index} is negative or not finite: {value}")]
    TableBadEntry { index: usize, value: f64 },
    #[error("decision vector has {got} entries, channel expects {expected}")]
    DecisionMismatch { got: usize, expected: usize },
    #[error("noise power must be nonnegative, got {0}")]
    NegativeNoisePower(f64),
}

/// Joint probability mass over decision patterns. Pattern index is a
/// bitmask: bit k set means sensor k reported +1.
#[derive(Clone, Debug)]
pub struct DecisionPmf {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    num_sensors: usize,
}

impl DecisionPmf {
    pub fn from_table(probs: Vec<f64>) -> Result<Self, SensingError> {
        let len = probs.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(SensingError::TableNotPowerOfTwo(len));
        }
        let num_sensors = len.trailing_zeros() as usize;
        if num_sensors > MAX_TABLE_SENSORS {
            return Err(SensingError::TableTooLarge(num_sensors));
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(SensingError::TableBadEntry { index, value });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_NORMALIZATION_TOL {
            return Err(SensingError::TableNotNormalized(total));
        }
        let mut cumulative = Vec::with_capacity(len);
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        Ok(Self {
            probs,
            cumulative,
            num_sensors,
        })
    }

    /// Product law from per-sensor probabilities of reporting +1.
    pub fn from_marginals(prob_one: &DVector<f64>) -> Result<Self, SensingError> {
        let k = prob_one.len();
        if k > MAX_TABLE_SENSORS {
            return Err(SensingError::TableTooLarge(k));
        }
        let mut probs = vec![0.0; 1 << k];
        for (mask, slot) in probs.iter_mut().enumerate() {
            let mut p = 1.0;
            for sensor in 0..k {
                let q = prob_one[sensor];
                p *= if mask >> sensor & 1 == 1 { q } else { 1.0 - q };
            }
            *slot = p;
        }
        Self::from_table(probs)
    }

    pub fn num_sensors(&self) -> usize {
        self.num_sensors
    }

    pub fn prob(&self, mask: usize) -> f64 {
        self.probs[mask]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Marginal probability that sensor k reports +1.
    pub fn marginal_one(&self, sensor: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(mask, _)| mask >> sensor & 1 == 1)
            .map(|(_, &p)| p)
            .sum()
    }

    fn sample(&self, rng: &mut RandomStream) -> usize {
        let u = rng.next_f64();
        // cumulative is nondecreasing and ends at ~1; partition_point finds
        // the first pattern whose cumulative mass exceeds u
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.probs.len() - 1)
    }

    /// Mean of the antipodal decision vector under this law.
    pub fn mean_x(&self) -> DVector<f64> {
        DVector::from_fn(self.num_sensors, |k, _| 2.0 * self.marginal_one(k) - 1.0)
    }

    /// Covariance of the antipodal decision vector under this law.
    pub fn cov_x(&self) -> DMatrix<f64> {
        let k = self.num_sensors;
        let mean = self.mean_x();
        let mut second = DMatrix::zeros(k, k);
        for (mask, &p) in self.probs.iter().enumerate() {
            for i in 0..k {
                let xi = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                for j in 0..k {
                    let xj = if mask >> j & 1 == 1 { 1.0 } else { -1.0 };
                    second[(i, j)] += p * xi * xj;
                }
            }
        }
        &second - &mean * mean.transpose()
    }
}

#[derive(Clone, Debug)]
enum DecisionLaw {
    Iid { prob_one: [DVector<f64>; 2] },
    Table { pmf: [DecisionPmf; 2] },
}

/// Decision quality, transmit amplitudes, and the induced moments of the
/// antipodal decision vector under both hypotheses.
#[derive(Clone, Debug)]
pub struct SensorStats {
    law: DecisionLaw,
    alpha: DVector<f64>,
    prob_one: [DVector<f64>; 2],
    cov: [DMatrix<f64>; 2],
}

impl SensorStats {
    /// Independent sensors with identical quality (P_D, P_F) and the given
    /// amplitudes.
    pub fn iid(
        num_sensors: usize,
        pd: f64,
        pf: f64,
        alpha: DVector<f64>,
    ) -> Result<Self, SensingError> {
        Self::iid_per_sensor(
            DVector::from_element(num_sensors, pd),
            DVector::from_element(num_sensors, pf),
            alpha,
        )
    }

    /// Independent sensors with per-sensor quality.
    pub fn iid_per_sensor(
        pd: DVector<f64>,
        pf: DVector<f64>,
        alpha: DVector<f64>,
    ) -> Result<Self, SensingError> {
        let k = pd.len();
        for sensor in 0..k {
            let (d, f) = (pd[sensor], pf[sensor]);
            if !(0.0..=1.0).contains(&f) || !(0.0..=1.0).contains(&d) || f > d {
                return Err(SensingError::InvalidProbabilities {
                    sensor,
                    pf: f,
                    pd: d,
                });
            }
        }
        let alpha = validate_alpha(alpha, k)?;
        let cov = [diag_cov(&pf), diag_cov(&pd)];
        Ok(Self {
            law: DecisionLaw::Iid {
                prob_one: [pf.clone(), pd.clone()],
            },
            alpha,
            prob_one: [pf, pd],
            cov,
        })
    }

    /// Perfect sensors: P_D = 1, P_F = 0. Decisions are deterministic given
    /// the hypothesis and their covariance vanishes.
    pub fn ideal(num_sensors: usize, alpha: DVector<f64>) -> Result<Self, SensingError> {
        Self::iid(num_sensors, 1.0, 0.0, alpha)
    }

    /// Correlated sensors described by explicit joint tables per hypothesis.
    pub fn from_joint_tables(
        absent: DecisionPmf,
        present: DecisionPmf,
        alpha: DVector<f64>,
    ) -> Result<Self, SensingError> {
        let k = absent.num_sensors();
        if present.num_sensors() != k {
            return Err(SensingError::DecisionMismatch {
                got: present.num_sensors(),
                expected: k,
            });
        }
        let alpha = validate_alpha(alpha, k)?;
        let prob_one = [
            DVector::from_fn(k, |s, _| absent.marginal_one(s)),
            DVector::from_fn(k, |s, _| present.marginal_one(s)),
        ];
        for sensor in 0..k {
            let (f, d) = (prob_one[0][sensor], prob_one[1][sensor]);
            if f > d + PMF_NORMALIZATION_TOL {
                return Err(SensingError::InvalidProbabilities {
                    sensor,
                    pf: f,
                    pd: d,
                });
            }
        }
        let cov = [absent.cov_x(), present.cov_x()];
        Ok(Self {
            law: DecisionLaw::Table {
                pmf: [absent, present],
            },
            alpha,
            prob_one,
            cov,
        })
    }

    pub fn num_sensors(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Per-sensor probability of reporting +1 under the hypothesis.
    pub fn prob_one(&self, h: Hypothesis) -> &DVector<f64> {
        &self.prob_one[h.index()]
    }

    /// Mean of x under the hypothesis: 2ρ - 1 entrywise.
    pub fn mean_x(&self, h: Hypothesis) -> DVector<f64> {
        self.prob_one[h.index()].map(|p| 2.0 * p - 1.0)
    }

    /// Covariance of x under the hypothesis. Diagonal 4ρ(1-ρ) for
    /// independent sensors.
    pub fn cov_x(&self, h: Hypothesis) -> &DMatrix<f64> {
        &self.cov[h.index()]
    }

    /// Gap between the +1 probabilities under the two hypotheses,
    /// ρ_present - ρ_absent. Zero for uninformative sensors.
    pub fn prob_gap(&self) -> DVector<f64> {
        &self.prob_one[1] - &self.prob_one[0]
    }

    /// Joint decision law as an explicit table. For independent sensors the
    /// product table is materialized, which caps K at MAX_TABLE_SENSORS;
    /// build once and reuse in trial loops.
    pub fn decision_pmf(&self, h: Hypothesis) -> Result<DecisionPmf, SensingError> {
        match &self.law {
            DecisionLaw::Iid { prob_one } => DecisionPmf::from_marginals(&prob_one[h.index()]),
            DecisionLaw::Table { pmf } => Ok(pmf[h.index()].clone()),
        }
    }

    pub fn is_iid(&self) -> bool {
        matches!(self.law, DecisionLaw::Iid { .. })
    }
}

fn validate_alpha(alpha: DVector<f64>, k: usize) -> Result<DVector<f64>, SensingError> {
    if alpha.len() != k {
        return Err(SensingError::AmplitudeMismatch {
            got: alpha.len(),
            expected: k,
        });
    }
    for &a in alpha.iter() {
        if !(a > 0.0) || !a.is_finite() {
            return Err(SensingError::InvalidAmplitude(a));
        }
    }
    Ok(alpha)
}

fn diag_cov(prob_one: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&prob_one.map(|p| 4.0 * p * (1.0 - p)))
}

/// Draws one antipodal decision vector under the hypothesis.
pub fn sample_decisions(
    stats: &SensorStats,
    h: Hypothesis,
    rng: &mut RandomStream,
) -> DVector<f64> {
    match &stats.law {
        DecisionLaw::Iid { prob_one } => {
            let p = &prob_one[h.index()];
            DVector::from_fn(p.len(), |k, _| if rng.bernoulli(p[k]) { 1.0 } else { -1.0 })
        }
        DecisionLaw::Table { pmf } => {
            let mask = pmf[h.index()].sample(rng);
            DVector::from_fn(stats.num_sensors(), |k, _| {
                if mask >> k & 1 == 1 {
                    1.0
                } else {
                    -1.0
                }
            })
        }
    }
}

/// One receiver snapshot y = H_eff D_α x + w with w ~ CN(0, σ² I).
pub fn received_signal(
    channel_eff: &CMat,
    stats: &SensorStats,
    decisions: &DVector<f64>,
    noise_power: f64,
    rng: &mut RandomStream,
) -> Result<CVec, SensingError> {
    if decisions.len() != stats.num_sensors() || channel_eff.ncols() != stats.num_sensors() {
        return Err(SensingError::DecisionMismatch {
            got: decisions.len(),
            expected: channel_eff.ncols(),
        });
    }
    if noise_power < 0.0 {
        return Err(SensingError::NegativeNoisePower(noise_power));
    }
    let scaled = DVector::from_fn(decisions.len(), |k, _| {
        Complex64::new(stats.alpha[k] * decisions[k], 0.0)
    });
    let mut y = channel_eff * scaled;
    for entry in y.iter_mut() {
        *entry += rng.complex_normal(noise_power);
    }
    Ok(y)
}

/// Stack a vector with its conjugate: [v; conj(v)].
pub fn augment(v: &CVec) -> CVec {
    let n = v.len();
    let mut out = CVec::zeros(2 * n);
    for i in 0..n {
        out[i] = v[i];
        out[n + i] = v[i].conj();
    }
    out
}

/// Stack a matrix with its conjugate: [A; conj(A)].
pub fn augment_matrix(a: &CMat) -> CMat {
    let (n, k) = a.shape();
    let mut out = CMat::zeros(2 * n, k);
    for col in 0..k {
        for row in 0..n {
            out[(row, col)] = a[(row, col)];
            out[(n + row, col)] = a[(row, col)].conj();
        }
    }
    out
}

/// Second-order description of y under one hypothesis. The covariance is
/// Hermitian and the pseudo-covariance symmetric by construction:
/// both are explicitly symmetrized after assembly so the equalities hold
/// exactly, not just to rounding.
#[derive(Clone, Debug)]
pub struct ConditionalMoments {
    pub mean: CVec,
    pub cov: CMat,
    pub pcov: CMat,
    pub noise_power: f64,
}

impl ConditionalMoments {
    pub fn augmented_mean(&self) -> CVec {
        augment(&self.mean)
    }

    /// Covariance of [y; conj(y)]: [[cov, pcov], [conj(pcov), conj(cov)]].
    pub fn augmented_cov(&self) -> CMat {
        let n = self.mean.len();
        let mut out = CMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self.cov[(i, j)];
                out[(i, n + j)] = self.pcov[(i, j)];
                out[(n + i, j)] = self.pcov[(i, j)].conj();
                out[(n + i, n + j)] = self.cov[(i, j)].conj();
            }
        }
        out
    }
}

/// Conditional mean, covariance, and pseudo-covariance of y under `h`.
pub fn conditional_moments(
    channel_eff: &CMat,
    stats: &SensorStats,
    noise_power: f64,
    h: Hypothesis,
) -> Result<ConditionalMoments, SensingError> {
    if channel_eff.ncols() != stats.num_sensors() {
        return Err(SensingError::DecisionMismatch {
            got: stats.num_sensors(),
            expected: channel_eff.ncols(),
        });
    }
    if noise_power < 0.0 {
        return Err(SensingError::NegativeNoisePower(noise_power));
    }
    let n = channel_eff.nrows();
    let k = stats.num_sensors();
    // A = H_eff D_α
    let a = CMat::from_fn(n, k, |r, c| channel_eff[(r, c)] * stats.alpha[c]);
    let mean_x = stats.mean_x(h);
    let mean = &a * DVector::from_fn(k, |i, _| Complex64::new(mean_x[i], 0.0));
    let cov_x = stats.cov_x(h);
    let cov_x_c = CMat::from_fn(k, k, |r, c| Complex64::new(cov_x[(r, c)], 0.0));
    let ac = &a * &cov_x_c;
    let mut cov = &ac * a.adjoint();
    let mut pcov = &ac * a.transpose();
    for i in 0..n {
        cov[(i, i)] += Complex64::new(noise_power, 0.0);
    }
    // enforce the structural symmetries exactly
    for i in 0..n {
        for j in (i + 1)..n {
            let c = (cov[(i, j)] + cov[(j, i)].conj()) * 0.5;
            cov[(i, j)] = c;
            cov[(j, i)] = c.conj();
            let p = (pcov[(i, j)] + pcov[(j, i)]) * 0.5;
            pcov[(i, j)] = p;
            pcov[(j, i)] = p;
        }
        cov[(i, i)] = Complex64::new(cov[(i, i)].re, 0.0);
    }
    Ok(ConditionalMoments {
        mean,
        cov,
        pcov,
        noise_power,
    })
}
