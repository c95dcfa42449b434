//! Scenario families: each draws deployments and channels, designs the
//! surface and the fusion weights, simulates operating curves, and reduces
//! them to summary tables.
//!
//! Randomness discipline: one master seed; every scenario, point,
//! realization, design initializer, and Monte Carlo trial pulls from its
//! own named substream. Points and realizations therefore evaluate
//! identically no matter how the work is scheduled, and changing the trial
//! count never perturbs the channel draws.

use crate::artifact::ArtifactWriter;
use crate::config::ExperimentConfig;
use anyhow::{bail, Context};
use holofuse_core::channel::ChannelSet;
use holofuse_core::evaluation::{
    observation_bound, power_comparison, roc_monte_carlo, FusionRule, PowerModel,
};
use holofuse_core::fusion::{optimal_weights, DesignKind};
use holofuse_core::geometry::{build_scene, Scene};
use holofuse_core::optimizer::{ao_joint_design, quantize_phases, AoOptions, PhaseConfig};
use holofuse_core::rng::RandomStream;
use holofuse_core::sensing::SensorStats;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    RocDesign,
    PdVsElements,
    PdVsSensors,
    Quantization,
    PowerTable,
}

impl Scenario {
    pub fn parse(id: &str) -> Option<Self> {
        match id {
            "roc_design" => Some(Self::RocDesign),
            "pd_vs_M" => Some(Self::PdVsElements),
            "pd_vs_K" => Some(Self::PdVsSensors),
            "quantization" => Some(Self::Quantization),
            "power_table" => Some(Self::PowerTable),
            _ => None,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Self::RocDesign => "roc_design",
            Self::PdVsElements => "pd_vs_M",
            Self::PdVsSensors => "pd_vs_K",
            Self::Quantization => "quantization",
            Self::PowerTable => "power_table",
        }
    }
}

pub struct ScenarioReport {
    pub scenario: &'static str,
    pub files: Vec<PathBuf>,
}

/// Executes the scenario and writes its CSV table plus the provenance
/// sidecar into `out`.
pub fn run(scenario: Scenario, cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<ScenarioReport> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        bail!("configuration invalid: {}", violations.join("; "));
    }
    let mut writer = ArtifactWriter::new(out)?;
    let mut files = Vec::new();
    match scenario {
        Scenario::RocDesign => {
            let outcome = run_roc_design(cfg)?;
            files.push(writer.write_csv("roc_design.csv", &outcome.csv())?);
        }
        Scenario::PdVsElements => {
            let outcome = run_pd_vs_elements(cfg)?;
            files.push(writer.write_csv("pd_vs_M.csv", &outcome.csv())?);
        }
        Scenario::PdVsSensors => {
            let outcome = run_pd_vs_sensors(cfg)?;
            files.push(writer.write_csv("pd_vs_K.csv", &outcome.csv())?);
        }
        Scenario::Quantization => {
            let outcome = run_quantization(cfg)?;
            files.push(writer.write_csv("quantization.csv", &outcome.csv())?);
        }
        Scenario::PowerTable => {
            let outcome = run_power_table(cfg)?;
            files.push(writer.write_csv("power_table.csv", &outcome.csv())?);
        }
    }
    files.push(writer.write_provenance(scenario.id(), cfg)?);
    Ok(ScenarioReport {
        scenario: scenario.id(),
        files,
    })
}

/// One drawn deployment: scene, channels, decision statistics, noise.
pub struct SystemDraw {
    pub scene: Scene,
    pub channels: ChannelSet,
    pub stats: SensorStats,
    pub noise_power: f64,
}

pub fn draw_system(
    cfg: &ExperimentConfig,
    elements: usize,
    feeds: usize,
    sensors: usize,
    include_digital: bool,
    stream: &RandomStream,
) -> anyhow::Result<SystemDraw> {
    let mut scene_rng = stream.substream("scene");
    let scene = build_scene(&cfg.scene_config(elements, feeds, sensors), &mut scene_rng)?;
    let mut fading_rng = stream.substream("fading");
    let params = cfg.fading_params(sensors, &mut fading_rng)?;
    let channels = ChannelSet::build(
        &scene,
        &params,
        &stream.substream("channels"),
        include_digital,
    )?;
    let stats = cfg.sensor_stats(sensors)?;
    Ok(SystemDraw {
        scene,
        channels,
        stats,
        noise_power: cfg.noise_power(),
    })
}

fn ao_options(cfg: &ExperimentConfig) -> AoOptions {
    AoOptions {
        max_outer: cfg.design.max_outer,
        tol: cfg.design.tolerance,
        mm_steps_per_outer: cfg.design.mm_steps,
    }
}

/// Sample mean and its standard error across realizations.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// False-alarm grid for curve tables: standard decades plus the configured
/// summary target, restricted to rates the trial count can resolve.
fn pfa_grid(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut grid = vec![
        0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0,
    ];
    grid.push(cfg.pfa_target);
    let resolution = 1.0 / cfg.trials as f64;
    grid.retain(|&p| p >= resolution);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

// ---------------------------------------------------------------------------
// roc_design: designed surface vs undesigned surface at fixed aperture

pub struct RuleCurveRow {
    pub rule: String,
    pub pfa: f64,
    pub pd_mean: f64,
    pub pd_se: f64,
}

pub struct RocDesignOutcome {
    pub pfa_grid: Vec<f64>,
    pub rows: Vec<RuleCurveRow>,
    pub realizations: usize,
    pub trials: usize,
}

impl RocDesignOutcome {
    pub fn pd_at(&self, rule: &str, pfa: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.rule == rule && r.pfa == pfa)
            .map(|r| r.pd_mean)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("rule,pfa,pd_mean,pd_se,realizations,trials\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.rule, r.pfa, r.pd_mean, r.pd_se, self.realizations, self.trials
            )
            .expect("write to String cannot fail");
        }
        out
    }
}

/// Fusion rules compared by the fixed-aperture study, in emission order.
pub fn roc_design_rules() -> Vec<String> {
    let mut rules: Vec<String> = DesignKind::ALL
        .iter()
        .map(|k| format!("wl-{}-designed", k.label()))
        .collect();
    rules.extend(
        DesignKind::ALL
            .iter()
            .map(|k| format!("wl-{}-random", k.label())),
    );
    rules.push("llr-designed".into());
    rules.push("llr-random".into());
    rules
}

pub fn run_roc_design(cfg: &ExperimentConfig) -> anyhow::Result<RocDesignOutcome> {
    let root = RandomStream::from_seed(cfg.seed).substream("roc_design");
    let grid = pfa_grid(cfg);
    let per_realization: Vec<Vec<(String, Vec<f64>)>> = (0..cfg.redraws)
        .into_par_iter()
        .map(|r| {
            let stream = root.indexed_substream("realization", r as u64);
            roc_design_realization(cfg, &grid, &stream)
                .with_context(|| format!("scenario roc_design, realization {r}"))
        })
        .collect::<anyhow::Result<_>>()?;

    let rules = roc_design_rules();
    let mut rows = Vec::new();
    for (idx, rule) in rules.iter().enumerate() {
        for (g, &pfa) in grid.iter().enumerate() {
            let samples: Vec<f64> = per_realization
                .iter()
                .map(|real| {
                    debug_assert_eq!(&real[idx].0, rule);
                    real[idx].1[g]
                })
                .collect();
            let (pd_mean, pd_se) = mean_se(&samples);
            rows.push(RuleCurveRow {
                rule: rule.clone(),
                pfa,
                pd_mean,
                pd_se,
            });
        }
    }
    Ok(RocDesignOutcome {
        pfa_grid: grid,
        rows,
        realizations: cfg.redraws,
        trials: cfg.trials,
    })
}

fn roc_design_realization(
    cfg: &ExperimentConfig,
    grid: &[f64],
    stream: &RandomStream,
) -> anyhow::Result<Vec<(String, Vec<f64>)>> {
    let m = cfg.surface.elements;
    let sys = draw_system(cfg, m, cfg.surface.feeds, cfg.sensors.count, false, stream)?;
    let mut init_rng = stream.substream("design-init");
    let init = PhaseConfig::random(m, &mut init_rng);
    let mut undesigned_rng = stream.substream("undesigned-surface");
    let undesigned = PhaseConfig::random(m, &mut undesigned_rng);
    let options = ao_options(cfg);

    let mut systems: Vec<(String, FusionRule, PhaseConfig)> = Vec::new();
    let mut conditioned_phases = None;
    for kind in DesignKind::ALL {
        let design = ao_joint_design(
            kind,
            &sys.channels,
            &sys.stats,
            sys.noise_power,
            &init,
            &options,
        )
        .with_context(|| format!("joint design, kind {}", kind.label()))?;
        if kind == DesignKind::MatchedAbsent {
            conditioned_phases = Some(design.phases.clone());
        }
        systems.push((
            format!("wl-{}-designed", kind.label()),
            FusionRule::Wl(design.weights),
            design.phases,
        ));
    }
    let undesigned_eff = sys.channels.effective(undesigned.as_slice());
    for kind in DesignKind::ALL {
        let weights = optimal_weights(kind, &undesigned_eff, &sys.stats, sys.noise_power)
            .with_context(|| format!("weights on the undesigned surface, kind {}", kind.label()))?;
        systems.push((
            format!("wl-{}-random", kind.label()),
            FusionRule::Wl(weights),
            undesigned.clone(),
        ));
    }
    let designed_phases = conditioned_phases.expect("matched-absent design ran");
    systems.push(("llr-designed".into(), FusionRule::Llr, designed_phases));
    systems.push(("llr-random".into(), FusionRule::Llr, undesigned));

    // one trial stream shared by every rule: each trial's decisions and
    // noise are common random numbers, so rules differ only by design
    let trial_stream = stream.substream("trials");
    let mut out = Vec::with_capacity(systems.len());
    for (label, rule, phases) in systems {
        let effective = sys.channels.effective(phases.as_slice());
        let curve = roc_monte_carlo(
            &rule,
            &effective,
            &sys.stats,
            sys.noise_power,
            cfg.trials,
            &trial_stream,
        )
        .with_context(|| format!("simulation of rule {label}"))?;
        let pds = grid
            .iter()
            .map(|&pfa| curve.detection_at_pfa(pfa))
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("summary of rule {label}"))?;
        out.push((label, pds));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// pd_vs_M: aperture sweep with a conventional-array baseline

pub struct ElementsRow {
    pub arch: String,
    pub kind: String,
    pub elements: usize,
    pub feeds: usize,
    pub pd_mean: f64,
    pub pd_se: f64,
}

pub struct ElementsSweepOutcome {
    pub rows: Vec<ElementsRow>,
    pub realizations: usize,
    pub trials: usize,
}

impl ElementsSweepOutcome {
    pub fn pd(&self, arch: &str, kind: &str, elements: usize, feeds: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.arch == arch && r.kind == kind && r.elements == elements && r.feeds == feeds)
            .map(|r| r.pd_mean)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("arch,kind,elements,feeds,pd_mean,pd_se,realizations,trials\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.arch, r.kind, r.elements, r.feeds, r.pd_mean, r.pd_se, self.realizations, self.trials
            )
            .expect("write to String cannot fail");
        }
        out
    }
}

pub fn run_pd_vs_elements(cfg: &ExperimentConfig) -> anyhow::Result<ElementsSweepOutcome> {
    let root = RandomStream::from_seed(cfg.seed).substream("pd_vs_M");
    let mut points: Vec<(usize, usize)> = Vec::new();
    for &m in &cfg.sweep.elements {
        for &n in &cfg.sweep.feeds {
            points.push((m, n));
        }
    }
    // flat (point, realization) grid so points and redraws run concurrently
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.redraws).map(move |r| (p, r)))
        .collect();
    let results: Vec<Vec<(String, f64)>> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let (m, n) = points[p];
            let stream = root
                .substream(&format!("m{m}-n{n}"))
                .indexed_substream("realization", r as u64);
            designed_point_realization(cfg, m, n, &stream)
                .with_context(|| format!("scenario pd_vs_M, point M={m} N={n}, realization {r}"))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut rows = Vec::new();
    for (p, &(m, n)) in points.iter().enumerate() {
        for (kidx, kind) in DesignKind::ALL.iter().enumerate() {
            let samples: Vec<f64> = (0..cfg.redraws)
                .map(|r| results[p * cfg.redraws + r][kidx].1)
                .collect();
            let (pd_mean, pd_se) = mean_se(&samples);
            rows.push(ElementsRow {
                arch: "holographic".into(),
                kind: kind.label().into(),
                elements: m,
                feeds: n,
                pd_mean,
                pd_se,
            });
        }
    }

    // conventional baseline: one full receive chain per antenna, optimal
    // widely linear weights of each kind on the unconfigurable channel
    let digital_root = root.substream("digital");
    let digital: Vec<Vec<(String, f64)>> = (0..cfg.redraws)
        .into_par_iter()
        .map(|r| {
            let stream = digital_root.indexed_substream("realization", r as u64);
            digital_baseline_realization(cfg, &stream)
                .with_context(|| format!("scenario pd_vs_M, digital baseline, realization {r}"))
        })
        .collect::<anyhow::Result<_>>()?;
    for (kidx, kind) in DesignKind::ALL.iter().enumerate() {
        let samples: Vec<f64> = (0..cfg.redraws).map(|r| digital[r][kidx].1).collect();
        let (pd_mean, pd_se) = mean_se(&samples);
        rows.push(ElementsRow {
            arch: "digital".into(),
            kind: kind.label().into(),
            elements: 0,
            feeds: cfg.digital.antennas,
            pd_mean,
            pd_se,
        });
    }

    Ok(ElementsSweepOutcome {
        rows,
        realizations: cfg.redraws,
        trials: cfg.trials,
    })
}

/// Detection probability at the summary target for each design kind on one
/// drawn system.
fn designed_point_realization(
    cfg: &ExperimentConfig,
    elements: usize,
    feeds: usize,
    stream: &RandomStream,
) -> anyhow::Result<Vec<(String, f64)>> {
    let sys = draw_system(cfg, elements, feeds, cfg.sensors.count, false, stream)?;
    let mut init_rng = stream.substream("design-init");
    let init = PhaseConfig::random(elements, &mut init_rng);
    let options = ao_options(cfg);
    let trial_stream = stream.substream("trials");
    let mut out = Vec::with_capacity(DesignKind::ALL.len());
    for kind in DesignKind::ALL {
        let design = ao_joint_design(
            kind,
            &sys.channels,
            &sys.stats,
            sys.noise_power,
            &init,
            &options,
        )
        .with_context(|| format!("joint design, kind {}", kind.label()))?;
        let effective = sys.channels.effective(design.phases.as_slice());
        let curve = roc_monte_carlo(
            &FusionRule::Wl(design.weights),
            &effective,
            &sys.stats,
            sys.noise_power,
            cfg.trials,
            &trial_stream,
        )?;
        out.push((kind.label().to_string(), curve.detection_at_pfa(cfg.pfa_target)?));
    }
    Ok(out)
}

fn digital_baseline_realization(
    cfg: &ExperimentConfig,
    stream: &RandomStream,
) -> anyhow::Result<Vec<(String, f64)>> {
    // aperture choice is immaterial, only the digital channel is consumed
    let elements = cfg.sweep.elements.first().copied().unwrap_or(25);
    let sys = draw_system(cfg, elements, 1, cfg.sensors.count, true, stream)?;
    let channel = sys
        .channels
        .sensor_to_digital
        .as_ref()
        .expect("digital channel requested");
    let trial_stream = stream.substream("trials");
    let mut out = Vec::with_capacity(DesignKind::ALL.len());
    for kind in DesignKind::ALL {
        let weights = optimal_weights(kind, channel, &sys.stats, sys.noise_power)?;
        let curve = roc_monte_carlo(
            &FusionRule::Wl(weights),
            channel,
            &sys.stats,
            sys.noise_power,
            cfg.trials,
            &trial_stream,
        )?;
        out.push((kind.label().to_string(), curve.detection_at_pfa(cfg.pfa_target)?));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// pd_vs_K: sensor-count sweep against the decision-count bound

pub struct SensorsRow {
    pub sensors: usize,
    pub kind: String,
    pub pd_mean: f64,
    pub pd_se: f64,
    /// Exact ceiling from the local decisions alone.
    pub bound: f64,
}

pub struct SensorsSweepOutcome {
    pub rows: Vec<SensorsRow>,
    pub realizations: usize,
    pub trials: usize,
}

impl SensorsSweepOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::from("sensors,kind,pd_mean,pd_se,bound,realizations,trials\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.sensors, r.kind, r.pd_mean, r.pd_se, r.bound, self.realizations, self.trials
            )
            .expect("write to String cannot fail");
        }
        out
    }
}

pub fn run_pd_vs_sensors(cfg: &ExperimentConfig) -> anyhow::Result<SensorsSweepOutcome> {
    let root = RandomStream::from_seed(cfg.seed).substream("pd_vs_K");
    let counts: Vec<usize> = (cfg.sweep.sensors_min..=cfg.sweep.sensors_max).collect();
    let jobs: Vec<(usize, usize)> = (0..counts.len())
        .flat_map(|p| (0..cfg.redraws).map(move |r| (p, r)))
        .collect();
    let m = cfg.sweep.study_elements;
    let n = cfg.surface.feeds;
    let results: Vec<Vec<(String, f64)>> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let k = counts[p];
            let stream = root
                .substream(&format!("k{k}"))
                .indexed_substream("realization", r as u64);
            sensors_point_realization(cfg, m, n, k, &stream)
                .with_context(|| format!("scenario pd_vs_K, K={k}, realization {r}"))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut rows = Vec::new();
    for (p, &k) in counts.iter().enumerate() {
        let bound = observation_bound(
            k,
            cfg.sensors.prob_detection,
            cfg.sensors.prob_false_alarm,
        )?
        .detection_at_pfa(cfg.pfa_target)?;
        for (kidx, kind) in DesignKind::ALL.iter().enumerate() {
            let samples: Vec<f64> = (0..cfg.redraws)
                .map(|r| results[p * cfg.redraws + r][kidx].1)
                .collect();
            let (pd_mean, pd_se) = mean_se(&samples);
            rows.push(SensorsRow {
                sensors: k,
                kind: kind.label().into(),
                pd_mean,
                pd_se,
                bound,
            });
        }
    }
    Ok(SensorsSweepOutcome {
        rows,
        realizations: cfg.redraws,
        trials: cfg.trials,
    })
}

fn sensors_point_realization(
    cfg: &ExperimentConfig,
    elements: usize,
    feeds: usize,
    sensors: usize,
    stream: &RandomStream,
) -> anyhow::Result<Vec<(String, f64)>> {
    let sys = draw_system(cfg, elements, feeds, sensors, false, stream)?;
    let mut init_rng = stream.substream("design-init");
    let init = PhaseConfig::random(elements, &mut init_rng);
    let options = ao_options(cfg);
    let trial_stream = stream.substream("trials");
    let mut out = Vec::with_capacity(DesignKind::ALL.len());
    for kind in DesignKind::ALL {
        let design = ao_joint_design(
            kind,
            &sys.channels,
            &sys.stats,
            sys.noise_power,
            &init,
            &options,
        )?;
        let effective = sys.channels.effective(design.phases.as_slice());
        let curve = roc_monte_carlo(
            &FusionRule::Wl(design.weights),
            &effective,
            &sys.stats,
            sys.noise_power,
            cfg.trials,
            &trial_stream,
        )?;
        out.push((kind.label().to_string(), curve.detection_at_pfa(cfg.pfa_target)?));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// quantization: finite phase resolution against the full-precision design

pub struct QuantizationRow {
    pub kind: String,
    /// None marks the full-precision reference.
    pub bits: Option<u32>,
    pub pd_mean: f64,
    pub pd_se: f64,
}

pub struct QuantizationOutcome {
    pub rows: Vec<QuantizationRow>,
    pub realizations: usize,
    pub trials: usize,
}

impl QuantizationOutcome {
    pub fn pd(&self, kind: &str, bits: Option<u32>) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.kind == kind && r.bits == bits)
            .map(|r| r.pd_mean)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("kind,bits,pd_mean,pd_se,realizations,trials\n");
        for r in &self.rows {
            let bits = r
                .bits
                .map_or_else(|| "full".to_string(), |b| b.to_string());
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.kind, bits, r.pd_mean, r.pd_se, self.realizations, self.trials
            )
            .expect("write to String cannot fail");
        }
        out
    }
}

pub fn run_quantization(cfg: &ExperimentConfig) -> anyhow::Result<QuantizationOutcome> {
    let root = RandomStream::from_seed(cfg.seed).substream("quantization");
    let levels: Vec<Option<u32>> = std::iter::once(None)
        .chain(cfg.sweep.bits.iter().map(|&b| Some(b)))
        .collect();
    let results: Vec<Vec<(String, Option<u32>, f64)>> = (0..cfg.redraws)
        .into_par_iter()
        .map(|r| {
            let stream = root.indexed_substream("realization", r as u64);
            quantization_realization(cfg, &levels, &stream)
                .with_context(|| format!("scenario quantization, realization {r}"))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut rows = Vec::new();
    for (kidx, kind) in DesignKind::ALL.iter().enumerate() {
        for (lidx, &bits) in levels.iter().enumerate() {
            let flat = kidx * levels.len() + lidx;
            let samples: Vec<f64> = (0..cfg.redraws).map(|r| results[r][flat].2).collect();
            let (pd_mean, pd_se) = mean_se(&samples);
            rows.push(QuantizationRow {
                kind: kind.label().into(),
                bits,
                pd_mean,
                pd_se,
            });
        }
    }
    Ok(QuantizationOutcome {
        rows,
        realizations: cfg.redraws,
        trials: cfg.trials,
    })
}

fn quantization_realization(
    cfg: &ExperimentConfig,
    levels: &[Option<u32>],
    stream: &RandomStream,
) -> anyhow::Result<Vec<(String, Option<u32>, f64)>> {
    let m = cfg.sweep.study_elements;
    let sys = draw_system(cfg, m, cfg.surface.feeds, cfg.sensors.count, false, stream)?;
    let mut init_rng = stream.substream("design-init");
    let init = PhaseConfig::random(m, &mut init_rng);
    let options = ao_options(cfg);
    let trial_stream = stream.substream("trials");
    let mut out = Vec::with_capacity(DesignKind::ALL.len() * levels.len());
    for kind in DesignKind::ALL {
        let design = ao_joint_design(
            kind,
            &sys.channels,
            &sys.stats,
            sys.noise_power,
            &init,
            &options,
        )?;
        for &bits in levels {
            // quantizing the profile detunes the weights; re-derive them
            // for the surface actually deployed
            let (phases, weights) = match bits {
                None => (design.phases.clone(), design.weights.clone()),
                Some(b) => {
                    let quantized = quantize_phases(&design.phases, b)?;
                    let effective = sys.channels.effective(quantized.as_slice());
                    let weights =
                        optimal_weights(kind, &effective, &sys.stats, sys.noise_power)?;
                    (quantized, weights)
                }
            };
            let effective = sys.channels.effective(phases.as_slice());
            let curve = roc_monte_carlo(
                &FusionRule::Wl(weights),
                &effective,
                &sys.stats,
                sys.noise_power,
                cfg.trials,
                &trial_stream,
            )?;
            out.push((
                kind.label().to_string(),
                bits,
                curve.detection_at_pfa(cfg.pfa_target)?,
            ));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// power_table: consumption of the two receive architectures

pub struct PowerRow {
    pub arch: String,
    pub elements: usize,
    pub feeds: usize,
    pub total: f64,
    pub receive_ratio: f64,
}

pub struct PowerTableOutcome {
    pub rows: Vec<PowerRow>,
}

impl PowerTableOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::from("arch,elements,feeds,total_mw,receive_ratio\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.arch, r.elements, r.feeds, r.total, r.receive_ratio
            )
            .expect("write to String cannot fail");
        }
        out
    }
}

pub fn run_power_table(cfg: &ExperimentConfig) -> anyhow::Result<PowerTableOutcome> {
    let k = cfg.sensors.count;
    let model = PowerModel {
        transmit_sum_sq: k as f64 * cfg.sensors.amplitude * cfg.sensors.amplitude,
        sensor_circuit: cfg.power.sensor_circuit,
        element_circuit: cfg.power.element_circuit,
        chain_circuit: cfg.power.chain_circuit,
        overhead: cfg.power.overhead,
    };
    let mut rows = Vec::new();
    let mut digital_total = None;
    for &m in &cfg.sweep.elements {
        for &n in &cfg.sweep.feeds {
            let budget = power_comparison(&model, k, m, n, cfg.digital.antennas)?;
            digital_total.get_or_insert(budget.digital);
            rows.push(PowerRow {
                arch: "holographic".into(),
                elements: m,
                feeds: n,
                total: budget.holographic,
                receive_ratio: budget.receive_ratio,
            });
        }
    }
    if let Some(total) = digital_total {
        rows.push(PowerRow {
            arch: "digital".into(),
            elements: 0,
            feeds: cfg.digital.antennas,
            total,
            receive_ratio: 1.0,
        });
    }
    Ok(PowerTableOutcome { rows })
}
