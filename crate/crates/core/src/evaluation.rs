//! Detection performance evaluation: Monte Carlo operating curves, the
//! centralized bound set by the decisions themselves, and the power budget
//! of the receive architectures.
//!
//! Monte Carlo trials draw every random quantity from a substream indexed
//! by hypothesis and trial number, so the collected statistics are a pure
//! function of the parent stream regardless of how the trial loop is
//! scheduled; curves built from them are reproducible byte for byte.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fusion::{llr_with_pmfs, wl_statistic, FusionError, FusionWeights};
use crate::rng::RandomStream;
use crate::sensing::{
    received_signal, sample_decisions, Hypothesis, SensingError, SensorStats,
};
use crate::CMat;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("at least one trial per hypothesis is required")]
    NoTrials,
    #[error("statistic for trial {trial} under {hypothesis:?} is not finite")]
    NonFiniteStatistic { hypothesis: Hypothesis, trial: usize },
    #[error("false-alarm target {0} must lie in (0, 1]")]
    InvalidTarget(f64),
    #[error("false-alarm target {target} is below the resolution {resolution} of the curve")]
    TargetBelowResolution { target: f64, resolution: f64 },
    #[error("no curve point reaches a false-alarm rate of {target} (maximum {max})")]
    UnreachableTarget { target: f64, max: f64 },
    #[error("curve has no points")]
    EmptyCurve,
    #[error("channel carries {got} sensors, statistics cover {expected}")]
    SensorMismatch { got: usize, expected: usize },
    #[error("noise power must be nonnegative, got {0}")]
    NegativeNoise(f64),
    #[error("sensor count {0} is outside 1..=64")]
    SensorCount(usize),
    #[error("probabilities must satisfy 0 <= pf <= pd <= 1, got pd {pd}, pf {pf}")]
    InvalidProbabilities { pd: f64, pf: f64 },
    #[error("power model entries must be finite and nonnegative")]
    InvalidPower,
    #[error("receive hardware draws no power, the consumption ratio is undefined")]
    DegeneratePower,
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
}

/// One operating point: the threshold and the exceedance probabilities of
/// the statistic under both hypotheses (strict comparison, matching the
/// decision rule).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RocPoint {
    pub gamma: f64,
    pub pf0: f64,
    pub pd0: f64,
}

/// Operating curve, points ordered by increasing threshold so the
/// false-alarm rate is nonincreasing along the list. The first point is
/// the γ = -∞ sentinel where both rates are one. Trial counts of zero mark
/// an exact curve rather than a Monte Carlo estimate.
#[derive(Clone, Debug, Serialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub trials_absent: usize,
    pub trials_present: usize,
}

fn strictly_above(sorted: &[f64], gamma: f64) -> usize {
    sorted.len() - sorted.partition_point(|&s| s <= gamma)
}

impl RocCurve {
    pub fn from_points(
        points: Vec<RocPoint>,
        trials_absent: usize,
        trials_present: usize,
    ) -> Self {
        Self {
            points,
            trials_absent,
            trials_present,
        }
    }

    /// Empirical curve from per-hypothesis statistic samples: one point per
    /// distinct observed value plus the sentinel.
    pub fn from_samples(
        mut absent: Vec<f64>,
        mut present: Vec<f64>,
    ) -> Result<Self, EvaluationError> {
        if absent.is_empty() || present.is_empty() {
            return Err(EvaluationError::NoTrials);
        }
        for (hypothesis, samples) in [
            (Hypothesis::Absent, &absent),
            (Hypothesis::Present, &present),
        ] {
            if let Some(trial) = samples.iter().position(|s| !s.is_finite()) {
                return Err(EvaluationError::NonFiniteStatistic { hypothesis, trial });
            }
        }
        let trials_absent = absent.len();
        let trials_present = present.len();
        absent.sort_by(f64::total_cmp);
        present.sort_by(f64::total_cmp);
        let mut thresholds: Vec<f64> =
            absent.iter().chain(present.iter()).cloned().collect();
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();

        let mut points = Vec::with_capacity(thresholds.len() + 1);
        points.push(RocPoint {
            gamma: f64::NEG_INFINITY,
            pf0: 1.0,
            pd0: 1.0,
        });
        for &gamma in &thresholds {
            points.push(RocPoint {
                gamma,
                pf0: strictly_above(&absent, gamma) as f64 / trials_absent as f64,
                pd0: strictly_above(&present, gamma) as f64 / trials_present as f64,
            });
        }
        Ok(Self {
            points,
            trials_absent,
            trials_present,
        })
    }

    /// Detection probability at the given false-alarm rate, linearly
    /// interpolated between the bracketing operating points (the curve of
    /// the threshold test randomized between adjacent thresholds).
    pub fn detection_at_pfa(&self, target: f64) -> Result<f64, EvaluationError> {
        if !(target > 0.0 && target <= 1.0) {
            return Err(EvaluationError::InvalidTarget(target));
        }
        if self.trials_absent > 0 {
            let resolution = 1.0 / self.trials_absent as f64;
            if target < resolution {
                return Err(EvaluationError::TargetBelowResolution { target, resolution });
            }
        }
        let first = self.points.first().ok_or(EvaluationError::EmptyCurve)?;
        if target > first.pf0 {
            return Err(EvaluationError::UnreachableTarget {
                target,
                max: first.pf0,
            });
        }
        for w in self.points.windows(2) {
            let (hi, lo) = (w[0], w[1]);
            if target <= hi.pf0 && target >= lo.pf0 {
                if hi.pf0 == lo.pf0 {
                    return Ok(hi.pd0.max(lo.pd0));
                }
                let t = (target - lo.pf0) / (hi.pf0 - lo.pf0);
                return Ok(lo.pd0 + t * (hi.pd0 - lo.pd0));
            }
        }
        let min = self.points.last().map_or(0.0, |p| p.pf0);
        Err(EvaluationError::UnreachableTarget { target, max: min })
    }

    /// Binomial standard errors of the two rates at each point; zero for
    /// exact curves.
    pub fn standard_errors(&self, point: &RocPoint) -> (f64, f64) {
        let se = |p: f64, n: usize| {
            if n == 0 {
                0.0
            } else {
                (p * (1.0 - p) / n as f64).sqrt()
            }
        };
        (
            se(point.pf0, self.trials_absent),
            se(point.pd0, self.trials_present),
        )
    }

    /// Plain CSV emission; float formatting is shortest-roundtrip, so equal
    /// curves serialize to equal bytes.
    pub fn to_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "gamma,pf0,pd0,se_pf0,se_pd0")?;
        for point in &self.points {
            let (se_pf, se_pd) = self.standard_errors(point);
            writeln!(
                out,
                "{},{},{},{},{}",
                point.gamma, point.pf0, point.pd0, se_pf, se_pd
            )?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Test statistic applied to each received snapshot.
#[derive(Clone, Debug)]
pub enum FusionRule {
    /// Exact log likelihood ratio (exponential in the sensor count).
    Llr,
    /// Widely linear statistic with fixed weights.
    Wl(FusionWeights),
}

/// Simulates the statistic under both hypotheses and returns the empirical
/// operating curve.
///
/// Trial t under hypothesis h draws its decisions and noise from the
/// substream (h, t) of `stream`, so the curve depends only on the stream,
/// the system, and the trial count, not on scheduling.
pub fn roc_monte_carlo(
    rule: &FusionRule,
    channel_eff: &CMat,
    stats: &SensorStats,
    noise_power: f64,
    trials: usize,
    stream: &RandomStream,
) -> Result<RocCurve, EvaluationError> {
    if trials == 0 {
        return Err(EvaluationError::NoTrials);
    }
    if channel_eff.ncols() != stats.num_sensors() {
        return Err(EvaluationError::SensorMismatch {
            got: channel_eff.ncols(),
            expected: stats.num_sensors(),
        });
    }
    if noise_power < 0.0 {
        return Err(EvaluationError::NegativeNoise(noise_power));
    }
    // the joint decision tables are trial-invariant; build them once
    let tables = match rule {
        FusionRule::Llr => Some((
            stats.decision_pmf(Hypothesis::Absent)?,
            stats.decision_pmf(Hypothesis::Present)?,
        )),
        FusionRule::Wl(_) => None,
    };

    let simulate = |hypothesis: Hypothesis, label: &'static str| {
        (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = stream.indexed_substream(label, trial as u64);
                let decisions = sample_decisions(stats, hypothesis, &mut rng);
                let y = received_signal(channel_eff, stats, &decisions, noise_power, &mut rng)?;
                let statistic = match (rule, &tables) {
                    (FusionRule::Wl(weights), _) => wl_statistic(weights, &y),
                    (FusionRule::Llr, Some((absent, present))) => llr_with_pmfs(
                        &y,
                        channel_eff,
                        stats.alpha(),
                        absent,
                        present,
                        noise_power,
                    )?,
                    (FusionRule::Llr, None) => unreachable!("tables built above"),
                };
                if !statistic.is_finite() {
                    return Err(EvaluationError::NonFiniteStatistic { hypothesis, trial });
                }
                Ok(statistic)
            })
            .collect::<Result<Vec<f64>, EvaluationError>>()
    };

    let absent = simulate(Hypothesis::Absent, "trial-absent")?;
    let present = simulate(Hypothesis::Present, "trial-present")?;
    RocCurve::from_samples(absent, present)
}

/// Exact operating curve of the best centralized test on the local
/// decisions themselves, before any channel: with exchangeable sensors the
/// count of positive decisions is sufficient, its law is binomial, and
/// randomization between adjacent count thresholds fills in the hull.
/// Every fusion rule operating on the received signal is bounded by this
/// curve.
pub fn observation_bound(
    num_sensors: usize,
    pd: f64,
    pf: f64,
) -> Result<RocCurve, EvaluationError> {
    if num_sensors == 0 || num_sensors > 64 {
        return Err(EvaluationError::SensorCount(num_sensors));
    }
    if !(0.0..=1.0).contains(&pf) || !(pf..=1.0).contains(&pd) {
        return Err(EvaluationError::InvalidProbabilities { pd, pf });
    }
    let tail_absent = binomial_tails(num_sensors, pf);
    let tail_present = binomial_tails(num_sensors, pd);
    let mut points = Vec::with_capacity(num_sensors + 2);
    points.push(RocPoint {
        gamma: f64::NEG_INFINITY,
        pf0: 1.0,
        pd0: 1.0,
    });
    for j in 0..=num_sensors {
        points.push(RocPoint {
            gamma: j as f64,
            pf0: tail_absent[j + 1],
            pd0: tail_present[j + 1],
        });
    }
    Ok(RocCurve::from_points(points, 0, 0))
}

/// tails[j] = P(count >= j) for count ~ Binomial(k, p); length k + 2 with
/// the trailing zero for j = k + 1.
fn binomial_tails(k: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0_f64; k + 1];
    if p == 0.0 {
        pmf[0] = 1.0;
    } else if p == 1.0 {
        pmf[k] = 1.0;
    } else {
        let q = 1.0 - p;
        pmf[0] = q.powi(k as i32);
        for i in 0..k {
            pmf[i + 1] = pmf[i] * (k - i) as f64 / (i + 1) as f64 * (p / q);
        }
    }
    let mut tails = vec![0.0_f64; k + 2];
    for j in (0..=k).rev() {
        tails[j] = tails[j + 1] + pmf[j];
    }
    tails
}

/// Static power accounting for one detection interval.
#[derive(Clone, Debug, Serialize)]
pub struct PowerModel {
    /// Total transmit power of the sensors (sum of squared amplitudes).
    pub transmit_sum_sq: f64,
    /// Per-sensor circuit power.
    pub sensor_circuit: f64,
    /// Per-element consumption of the reconfigurable surface.
    pub element_circuit: f64,
    /// Per-chain consumption of a full receive chain.
    pub chain_circuit: f64,
    /// Fixed baseband overhead.
    pub overhead: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PowerBudget {
    pub holographic: f64,
    pub digital: f64,
    /// Receive-hardware consumption of the digital array relative to the
    /// surface-based receiver.
    pub receive_ratio: f64,
}

/// Compares the surface-based receiver (num_elements passive-ish elements
/// plus num_feeds full chains) against a conventional array with one chain
/// per antenna.
pub fn power_comparison(
    model: &PowerModel,
    num_sensors: usize,
    num_elements: usize,
    num_feeds: usize,
    num_digital: usize,
) -> Result<PowerBudget, EvaluationError> {
    let entries = [
        model.transmit_sum_sq,
        model.sensor_circuit,
        model.element_circuit,
        model.chain_circuit,
        model.overhead,
    ];
    if entries.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(EvaluationError::InvalidPower);
    }
    let common = model.transmit_sum_sq + num_sensors as f64 * model.sensor_circuit + model.overhead;
    let surface_receive =
        num_elements as f64 * model.element_circuit + num_feeds as f64 * model.chain_circuit;
    let digital_receive = num_digital as f64 * model.chain_circuit;
    if surface_receive <= 0.0 {
        return Err(EvaluationError::DegeneratePower);
    }
    Ok(PowerBudget {
        holographic: common + surface_receive,
        digital: common + digital_receive,
        receive_ratio: digital_receive / surface_receive,
    })
}
