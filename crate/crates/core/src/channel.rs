//! Propagation models linking sensors, surface, feeds, and the digital
//! reference array.
//!
//! Three matrices describe one scene realization:
//!
//! * `sensor_to_surface` (M x K): Rician fading columns. Sensor k arrives
//!   from its angle pair with a uniform-phase line-of-sight steering
//!   component blended against an iid scattered component, the blend set by
//!   the per-sensor Rician factor, the whole column scaled by the square
//!   root of the distance path loss.
//! * `surface_to_feeds` (N x M): deterministic near-field coupling. Each
//!   entry carries the spherical-wave phase exp(-j 2π d) / d between element
//!   and feed plus the element and feed aperture gains, both following a
//!   cos^(2q) power profile that radiates only into the front half-space.
//!   The profile is normalized so the total radiated power integrates to 1
//!   over the sphere for any q >= 0.
//! * `sensor_to_digital` (N_dig x K, optional): the same Rician construction
//!   over the half-wavelength reference grid, reusing the per-sensor Rician
//!   factors but with fading draws from an independent stream.
//!
//! Lengths are in wavelengths; powers in linear units (watts when absolute).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::geometry::{arrival_angles, GeometryError, Scene};
use crate::rng::RandomStream;
use crate::{CMat, CVec};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("feed {feed} coincides with element {element}")]
    CoincidentPositions { feed: usize, element: usize },
    #[error("{name} out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("{0} Rician factors supplied for {1} sensors")]
    RicianCountMismatch(usize, usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("channel entry ({row},{col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("coupling magnitude {value} exceeds the free-space bound {bound}")]
    BoundViolation { value: f64, bound: f64 },
}

/// Large-scale and small-scale fading parameters shared by the surface and
/// digital channels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FadingParams {
    /// Path gain at the reference distance (linear, not dB).
    pub reference_gain: f64,
    pub reference_distance: f64,
    pub path_loss_exponent: f64,
    /// Per-sensor Rician factors κ_k, linear. Infinite means pure
    /// line-of-sight, zero means pure scattering.
    pub rician_factors: Vec<f64>,
    /// Aperture efficiency η in [0, 1].
    pub efficiency: f64,
}

impl FadingParams {
    pub fn new(
        reference_gain: f64,
        reference_distance: f64,
        path_loss_exponent: f64,
        rician_factors: Vec<f64>,
        efficiency: f64,
    ) -> Result<Self, ChannelError> {
        let check = |name: &'static str, value: f64, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(ChannelError::InvalidParameter { name, value })
            }
        };
        check("reference_gain", reference_gain, reference_gain > 0.0 && reference_gain.is_finite())?;
        check(
            "reference_distance",
            reference_distance,
            reference_distance > 0.0 && reference_distance.is_finite(),
        )?;
        check(
            "path_loss_exponent",
            path_loss_exponent,
            path_loss_exponent >= 0.0 && path_loss_exponent.is_finite(),
        )?;
        check("efficiency", efficiency, (0.0..=1.0).contains(&efficiency))?;
        for &k in &rician_factors {
            check("rician_factor", k, k >= 0.0 && !k.is_nan())?;
        }
        Ok(Self {
            reference_gain,
            reference_distance,
            path_loss_exponent,
            rician_factors,
            efficiency,
        })
    }

    /// Reference parameterization: -30 dB gain at 1λ, square-law decay,
    /// unit efficiency, per-sensor Rician factors drawn uniformly from
    /// 3..5 dB.
    pub fn sample_reference(num_sensors: usize, rng: &mut RandomStream) -> Self {
        let rician_factors = (0..num_sensors)
            .map(|_| db_to_linear(rng.uniform(3.0, 5.0)))
            .collect();
        Self::new(db_to_linear(-30.0), 1.0, 2.0, rician_factors, 1.0)
            .expect("reference parameters are valid")
    }

    /// Line-of-sight blend b_k = sqrt(κ_k / (1 + κ_k)).
    pub fn los_blend(&self, sensor: usize) -> f64 {
        let kappa = self.rician_factors[sensor];
        if kappa.is_infinite() {
            1.0
        } else {
            (kappa / (1.0 + kappa)).sqrt()
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Distance path loss μ (d / d0)^(-ν).
pub fn path_loss(distance: f64, params: &FadingParams) -> Result<f64, ChannelError> {
    if !(distance > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance));
    }
    Ok(params.reference_gain
        * (distance / params.reference_distance).powf(-params.path_loss_exponent))
}

/// Uniform planar array steering vector for a square grid with the given
/// pitch (in wavelengths), indexed row-major with the horizontal index
/// fastest. Entries have unit modulus.
pub fn upa_steering(theta: f64, phi: f64, side: usize, spacing: f64) -> CVec {
    let (sin_t, cos_p) = (theta.sin(), phi.cos());
    let sin_p = phi.sin();
    let horizontal = TAU * spacing * sin_t * cos_p;
    let vertical = TAU * spacing * sin_t * sin_p;
    DVector::from_iterator(
        side * side,
        (0..side).flat_map(|my| {
            (0..side).map(move |mx| {
                Complex64::from_polar(1.0, mx as f64 * horizontal + my as f64 * vertical)
            })
        }),
    )
}

/// Normalized power pattern 2(2q+1) cos^(2q) θ on the front half-space,
/// zero behind. The normalization makes the pattern integrate to one over
/// the full sphere for every q >= 0.
pub fn directivity(q: f64, cos_theta: f64) -> f64 {
    debug_assert!(q >= 0.0, "directivity exponent must be nonnegative");
    if cos_theta <= 0.0 {
        return 0.0;
    }
    2.0 * (2.0 * q + 1.0) * cos_theta.min(1.0).powf(2.0 * q)
}

fn rician_column(
    steering: CVec,
    blend: f64,
    amplitude: f64,
    rng: &mut RandomStream,
) -> CVec {
    let tau = rng.uniform_phase();
    let los_phase = Complex64::from_polar(1.0, tau);
    let scatter = (1.0 - blend * blend).max(0.0).sqrt();
    let mut column = steering;
    for entry in column.iter_mut() {
        let diffuse = rng.complex_normal(1.0);
        *entry = amplitude * (blend * *entry * los_phase + scatter * diffuse);
    }
    column
}

fn fading_matrix(
    scene: &Scene,
    params: &FadingParams,
    stream: &RandomStream,
    side: usize,
    spacing: f64,
    label: &str,
) -> Result<(CMat, Vec<usize>), ChannelError> {
    let k = scene.num_sensors();
    if params.rician_factors.len() != k {
        return Err(ChannelError::RicianCountMismatch(
            params.rician_factors.len(),
            k,
        ));
    }
    let rows = side * side;
    let mut matrix = DMatrix::zeros(rows, k);
    let mut zeroed = Vec::new();
    for sensor in 0..k {
        let angles = arrival_angles(scene, sensor)?;
        if angles.is_behind() {
            zeroed.push(sensor);
            continue;
        }
        let amplitude = path_loss(scene.sensor_range(sensor)?, params)?.sqrt();
        // Draw order per sensor: line-of-sight phase first, then the
        // scattered entries in element order. Each sensor has its own
        // substream so columns never shift when others are zeroed.
        let mut rng = stream.indexed_substream(label, sensor as u64);
        let steering = upa_steering(angles.theta, angles.phi, side, spacing);
        let column = rician_column(steering, params.los_blend(sensor), amplitude, &mut rng);
        matrix.set_column(sensor, &column);
    }
    Ok((matrix, zeroed))
}

/// Rician fading matrix from the sensors to the surface elements (M x K).
/// Sensors behind the surface plane contribute an all-zero column; their
/// indices are returned alongside the matrix.
pub fn sensor_rhs_channel(
    scene: &Scene,
    params: &FadingParams,
    stream: &RandomStream,
) -> Result<(CMat, Vec<usize>), ChannelError> {
    fading_matrix(
        scene,
        params,
        stream,
        scene.element_side(),
        scene.element_spacing,
        "sensor-column",
    )
}

/// Rician fading matrix from the sensors to the digital reference array
/// (N_dig x K). Shares the Rician factors with the surface channel but
/// draws its own fading realizations.
pub fn digital_channel(
    scene: &Scene,
    params: &FadingParams,
    stream: &RandomStream,
) -> Result<(CMat, Vec<usize>), ChannelError> {
    fading_matrix(
        scene,
        params,
        stream,
        scene.digital_side(),
        scene.digital_spacing,
        "digital-column",
    )
}

/// Deterministic near-field coupling between surface elements and feeds
/// (N x M). Entry (n, m) models a spherical wave weighted by the element
/// and feed patterns; pairs outside each other's front half-space couple
/// with exactly zero gain.
pub fn rhs_feed_channel(scene: &Scene, params: &FadingParams) -> Result<CMat, ChannelError> {
    let q = scene.directivity_exponent;
    if !(q >= 0.0) {
        return Err(ChannelError::InvalidParameter {
            name: "directivity_exponent",
            value: q,
        });
    }
    let element_area = scene.element_spacing * scene.element_spacing;
    let feed_area = scene.feed_spacing * scene.feed_spacing;
    let n_feeds = scene.num_feeds();
    let m_elements = scene.num_elements();
    let mut g = DMatrix::zeros(n_feeds, m_elements);
    for n in 0..n_feeds {
        for m in 0..m_elements {
            let v = scene.feed_positions[n] - scene.element_positions[m];
            let d = v.norm();
            if d == 0.0 {
                return Err(ChannelError::CoincidentPositions { feed: n, element: m });
            }
            let to_feed = v / d;
            let cos_element = scene.surface_boresight.dot(&to_feed);
            let cos_feed = scene.feed_boresights[n].dot(&(-to_feed));
            let gain_element = 4.0 * PI * element_area * directivity(q, cos_element);
            let gain_feed = 4.0 * PI * feed_area * directivity(q, cos_feed);
            let magnitude =
                (params.efficiency * gain_element * gain_feed).sqrt() / (4.0 * PI * d);
            g[(n, m)] = Complex64::from_polar(magnitude, -TAU * d);
        }
    }
    Ok(g)
}

/// Upper bound on any coupling magnitude: peak gains on both ends at the
/// closest element-feed distance.
pub fn coupling_magnitude_bound(scene: &Scene, params: &FadingParams) -> f64 {
    let q = scene.directivity_exponent;
    let peak = 2.0 * (2.0 * q + 1.0);
    let max_area = (scene.element_spacing * scene.element_spacing)
        .max(scene.feed_spacing * scene.feed_spacing);
    let gain_max = 4.0 * PI * max_area * peak;
    let d_min = scene
        .feed_positions
        .iter()
        .flat_map(|f| scene.element_positions.iter().map(move |e| (f - e).norm()))
        .fold(f64::INFINITY, f64::min);
    (params.efficiency * gain_max * gain_max).sqrt() / (4.0 * PI * d_min)
}

/// The matrices for one scene realization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelSet {
    /// M x K fading matrix, sensors to surface elements.
    pub sensor_to_surface: CMat,
    /// N x M near-field coupling, surface elements to feeds.
    pub surface_to_feeds: CMat,
    /// N_dig x K fading matrix for the digital reference array.
    pub sensor_to_digital: Option<CMat>,
    /// Sensors behind the surface plane whose columns were zeroed.
    pub zeroed_sensors: Vec<usize>,
}

impl ChannelSet {
    /// Draws all matrices for a scene. The surface and digital fading draws
    /// come from separate named substreams of `stream`, so enabling or
    /// disabling the digital array never changes the surface realization.
    pub fn build(
        scene: &Scene,
        params: &FadingParams,
        stream: &RandomStream,
        include_digital: bool,
    ) -> Result<Self, ChannelError> {
        let (sensor_to_surface, zeroed_sensors) =
            sensor_rhs_channel(scene, params, &stream.substream("surface-channel"))?;
        let surface_to_feeds = rhs_feed_channel(scene, params)?;
        let sensor_to_digital = if include_digital {
            Some(digital_channel(scene, params, &stream.substream("digital-channel"))?.0)
        } else {
            None
        };
        let set = Self {
            sensor_to_surface,
            surface_to_feeds,
            sensor_to_digital,
            zeroed_sensors,
        };
        set.validate(scene, params)?;
        Ok(set)
    }

    pub fn num_sensors(&self) -> usize {
        self.sensor_to_surface.ncols()
    }

    pub fn num_elements(&self) -> usize {
        self.sensor_to_surface.nrows()
    }

    pub fn num_feeds(&self) -> usize {
        self.surface_to_feeds.nrows()
    }

    /// End-to-end channel G diag(e^{jφ}) H for a surface phase profile.
    pub fn effective(&self, phases: &[f64]) -> CMat {
        assert_eq!(
            phases.len(),
            self.num_elements(),
            "one phase per surface element"
        );
        let mut shifted = self.sensor_to_surface.clone();
        for (m, &phi) in phases.iter().enumerate() {
            let theta = Complex64::from_polar(1.0, phi);
            for entry in shifted.row_mut(m).iter_mut() {
                *entry *= theta;
            }
        }
        &self.surface_to_feeds * shifted
    }

    /// Checks every entry is finite and every coupling magnitude respects
    /// the free-space bound.
    pub fn validate(&self, scene: &Scene, params: &FadingParams) -> Result<(), ChannelError> {
        let finite = |m: &CMat| -> Result<(), ChannelError> {
            for col in 0..m.ncols() {
                for row in 0..m.nrows() {
                    let z = m[(row, col)];
                    if !z.re.is_finite() || !z.im.is_finite() {
                        return Err(ChannelError::NonFiniteEntry { row, col });
                    }
                }
            }
            Ok(())
        };
        finite(&self.sensor_to_surface)?;
        finite(&self.surface_to_feeds)?;
        if let Some(dig) = &self.sensor_to_digital {
            finite(dig)?;
        }
        let bound = coupling_magnitude_bound(scene, params) * (1.0 + 1e-12);
        for z in self.surface_to_feeds.iter() {
            if z.norm() > bound {
                return Err(ChannelError::BoundViolation {
                    value: z.norm(),
                    bound,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
