//! Deployment geometry for the sensing scene.
//!
//! All lengths are expressed in carrier wavelengths (λ = 1). The receiving
//! surface is a square grid of sub-wavelength elements fixed in the y-z plane
//! with boresight along -x; its feed cluster sits on a line parallel to the
//! x axis behind the surface's field of view, each feed oriented toward the
//! surface center. The fully digital reference array reuses the surface
//! center and plane with half-wavelength spacing. Sensors are dropped
//! uniformly at random inside an axis-aligned box.
//!
//! Element grids are indexed row-major with the horizontal (y) index running
//! fastest; serialized artifacts and steering vectors rely on that order.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomStream;

/// Horizontal axis of the surface plane.
const PLANE_H: Vector3<f64> = Vector3::new(0.0, 1.0, 0.0);
/// Vertical axis of the surface plane.
const PLANE_V: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);
/// Surface boresight; sensors live in the half-space it points into.
const BORESIGHT: Vector3<f64> = Vector3::new(-1.0, 0.0, 0.0);

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("element count {0} is not a perfect square")]
    NonSquareElementCount(usize),
    #[error("digital antenna count {0} is not a perfect square")]
    NonSquareDigitalCount(usize),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("sensor box is degenerate: min {min:?} exceeds max {max:?} on some axis")]
    DegenerateBox { min: [f64; 3], max: [f64; 3] },
    #[error("sensor count must be at least 1")]
    NoSensors,
    #[error("feed count must be at least 1")]
    NoFeeds,
    #[error("sensor index {index} out of range ({count} sensors)")]
    SensorIndex { index: usize, count: usize },
    #[error("sensor {0} coincides with the surface center")]
    SensorAtCenter(usize),
}

/// Scene construction parameters. Defaults follow the reference deployment:
/// sensors in a 40λ x 40λ x 3λ box near the origin, surface centered at
/// (70, 20, 10)λ with λ/3 element pitch, two-wavelength-ish feed offset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneConfig {
    pub num_sensors: usize,
    pub num_elements: usize,
    pub num_feeds: usize,
    pub num_digital_antennas: usize,
    pub element_spacing: f64,
    pub feed_spacing: f64,
    pub digital_spacing: f64,
    pub sensor_box_min: [f64; 3],
    pub sensor_box_max: [f64; 3],
    pub surface_center: [f64; 3],
    pub feed_center: [f64; 3],
    /// Exponent q of the cos^(2q) element radiation profile.
    pub directivity_exponent: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            num_sensors: 10,
            num_elements: 64,
            num_feeds: 1,
            num_digital_antennas: 100,
            element_spacing: 1.0 / 3.0,
            feed_spacing: 0.5,
            digital_spacing: 0.5,
            sensor_box_min: [0.0, 0.0, 0.0],
            sensor_box_max: [40.0, 40.0, 3.0],
            surface_center: [70.0, 20.0, 10.0],
            feed_center: [68.0, 18.0, 10.0],
            directivity_exponent: 1.5,
        }
    }
}

/// Concrete positions for one scene realization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scene {
    pub sensor_positions: Vec<Vector3<f64>>,
    pub element_positions: Vec<Vector3<f64>>,
    pub surface_center: Vector3<f64>,
    pub surface_boresight: Vector3<f64>,
    pub feed_positions: Vec<Vector3<f64>>,
    /// Unit vectors from each feed toward the surface center.
    pub feed_boresights: Vec<Vector3<f64>>,
    pub digital_positions: Vec<Vector3<f64>>,
    pub element_spacing: f64,
    pub feed_spacing: f64,
    pub digital_spacing: f64,
    pub directivity_exponent: f64,
}

/// Angle of arrival at the surface, measured in its local frame:
/// `theta` is the polar angle off boresight, `phi` the in-plane azimuth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrivalAngles {
    pub theta: f64,
    pub phi: f64,
}

impl ArrivalAngles {
    /// True when the source sits behind the surface plane; such sensors get
    /// no propagation path through the surface.
    pub fn is_behind(&self) -> bool {
        self.theta > std::f64::consts::FRAC_PI_2
    }
}

fn exact_square_side(count: usize) -> Option<usize> {
    let side = (count as f64).sqrt().round() as usize;
    (side * side == count).then_some(side)
}

/// Centered square grid in the surface plane, row-major, horizontal fastest.
fn plane_grid(center: Vector3<f64>, side: usize, spacing: f64) -> Vec<Vector3<f64>> {
    let half = (side as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            let dh = (col as f64 - half) * spacing;
            let dv = (row as f64 - half) * spacing;
            positions.push(center + PLANE_H * dh + PLANE_V * dv);
        }
    }
    positions
}

/// Builds a scene realization. Deterministic for a fixed stream seed: the
/// only randomness is the sensor placement, drawn coordinate by coordinate
/// from `rng` in sensor order.
pub fn build_scene(config: &SceneConfig, rng: &mut RandomStream) -> Result<Scene, GeometryError> {
    if config.num_sensors == 0 {
        return Err(GeometryError::NoSensors);
    }
    if config.num_feeds == 0 {
        return Err(GeometryError::NoFeeds);
    }
    let element_side = exact_square_side(config.num_elements)
        .filter(|&s| s > 0)
        .ok_or(GeometryError::NonSquareElementCount(config.num_elements))?;
    let digital_side = exact_square_side(config.num_digital_antennas)
        .filter(|&s| s > 0)
        .ok_or(GeometryError::NonSquareDigitalCount(config.num_digital_antennas))?;
    for (name, value) in [
        ("element_spacing", config.element_spacing),
        ("feed_spacing", config.feed_spacing),
        ("digital_spacing", config.digital_spacing),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(GeometryError::NonPositive { name, value });
        }
    }
    if config
        .sensor_box_min
        .iter()
        .zip(&config.sensor_box_max)
        .any(|(lo, hi)| lo > hi || !lo.is_finite() || !hi.is_finite())
    {
        return Err(GeometryError::DegenerateBox {
            min: config.sensor_box_min,
            max: config.sensor_box_max,
        });
    }

    let surface_center = Vector3::from(config.surface_center);
    let feed_center = Vector3::from(config.feed_center);

    let mut sensor_positions = Vec::with_capacity(config.num_sensors);
    for _ in 0..config.num_sensors {
        let mut p = Vector3::zeros();
        for axis in 0..3 {
            p[axis] = rng.uniform(config.sensor_box_min[axis], config.sensor_box_max[axis]);
        }
        sensor_positions.push(p);
    }

    let element_positions = plane_grid(surface_center, element_side, config.element_spacing);
    let digital_positions = plane_grid(surface_center, digital_side, config.digital_spacing);

    let half = (config.num_feeds as f64 - 1.0) / 2.0;
    let feed_axis = Vector3::new(1.0, 0.0, 0.0);
    let feed_positions: Vec<_> = (0..config.num_feeds)
        .map(|n| feed_center + feed_axis * ((n as f64 - half) * config.feed_spacing))
        .collect();
    let feed_boresights = feed_positions
        .iter()
        .map(|p| (surface_center - p).normalize())
        .collect();

    Ok(Scene {
        sensor_positions,
        element_positions,
        surface_center,
        surface_boresight: BORESIGHT,
        feed_positions,
        feed_boresights,
        digital_positions,
        element_spacing: config.element_spacing,
        feed_spacing: config.feed_spacing,
        digital_spacing: config.digital_spacing,
        directivity_exponent: config.directivity_exponent,
    })
}

impl Scene {
    pub fn num_sensors(&self) -> usize {
        self.sensor_positions.len()
    }

    pub fn num_elements(&self) -> usize {
        self.element_positions.len()
    }

    pub fn num_feeds(&self) -> usize {
        self.feed_positions.len()
    }

    pub fn element_side(&self) -> usize {
        exact_square_side(self.element_positions.len()).expect("element grid is square")
    }

    pub fn digital_side(&self) -> usize {
        exact_square_side(self.digital_positions.len()).expect("digital grid is square")
    }

    /// Distance from sensor k to the surface center, the range used by the
    /// far-field path loss model.
    pub fn sensor_range(&self, k: usize) -> Result<f64, GeometryError> {
        let p = self
            .sensor_positions
            .get(k)
            .ok_or(GeometryError::SensorIndex {
                index: k,
                count: self.sensor_positions.len(),
            })?;
        Ok((p - self.surface_center).norm())
    }
}

/// Fraunhofer distance of the surface/feed pair: the far-field boundary
/// 2 max{(√M Δ_el)², (N Δ_fc)²} in wavelengths. Feeds placed closer than
/// this operate in the surface's radiating near field.
pub fn fraunhofer_distance(
    num_elements: usize,
    num_feeds: usize,
    element_spacing: f64,
    feed_spacing: f64,
) -> f64 {
    let surface_extent = num_elements as f64 * element_spacing * element_spacing;
    let feed_extent = (num_feeds as f64 * feed_spacing).powi(2);
    2.0 * surface_extent.max(feed_extent)
}

/// Angle of arrival of sensor k seen from the surface center.
pub fn arrival_angles(scene: &Scene, sensor: usize) -> Result<ArrivalAngles, GeometryError> {
    let p = scene
        .sensor_positions
        .get(sensor)
        .ok_or(GeometryError::SensorIndex {
            index: sensor,
            count: scene.sensor_positions.len(),
        })?;
    let d = p - scene.surface_center;
    let norm = d.norm();
    if norm == 0.0 {
        return Err(GeometryError::SensorAtCenter(sensor));
    }
    let dir = d / norm;
    let cos_theta = dir.dot(&scene.surface_boresight).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let phi = dir.dot(&PLANE_V).atan2(dir.dot(&PLANE_H));
    Ok(ArrivalAngles { theta, phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scene_with(config: &SceneConfig, seed: u64) -> Scene {
        let mut rng = RandomStream::from_seed(seed);
        build_scene(config, &mut rng).unwrap()
    }

    #[test]
    fn single_element_sits_at_center() {
        let config = SceneConfig {
            num_elements: 1,
            ..SceneConfig::default()
        };
        let scene = scene_with(&config, 1);
        assert_eq!(scene.element_positions.len(), 1);
        assert_relative_eq!(
            (scene.element_positions[0] - scene.surface_center).norm(),
            0.0
        );
    }

    #[test]
    fn two_by_two_grid_spacing_and_centroid() {
        let config = SceneConfig {
            num_elements: 4,
            element_spacing: 1.0 / 3.0,
            ..SceneConfig::default()
        };
        let scene = scene_with(&config, 1);
        let pos = &scene.element_positions;
        assert_eq!(pos.len(), 4);
        // nearest-neighbor distance equals the pitch
        for i in 0..4 {
            let nn = (0..4)
                .filter(|&j| j != i)
                .map(|j| (pos[i] - pos[j]).norm())
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(nn, 1.0 / 3.0, max_relative = 1e-12);
        }
        let centroid = (pos[0] + pos[1] + pos[2] + pos[3]) / 4.0;
        assert_relative_eq!((centroid - scene.surface_center).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_is_row_major_horizontal_fastest() {
        let config = SceneConfig {
            num_elements: 9,
            element_spacing: 0.5,
            ..SceneConfig::default()
        };
        let scene = scene_with(&config, 1);
        // consecutive indices differ along y (horizontal), rows step along z
        let step_h = scene.element_positions[1] - scene.element_positions[0];
        let step_v = scene.element_positions[3] - scene.element_positions[0];
        assert_relative_eq!(step_h.y, 0.5, epsilon = 1e-12);
        assert_relative_eq!(step_h.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(step_h.z, 0.0, epsilon = 1e-12);
        assert_relative_eq!(step_v.z, 0.5, epsilon = 1e-12);
        assert_relative_eq!(step_v.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn default_feed_offset_matches_deployment() {
        let scene = scene_with(&SceneConfig::default(), 5);
        let d = (scene.feed_positions[0] - scene.surface_center).norm();
        assert_relative_eq!(d, 8.0_f64.sqrt(), max_relative = 1e-12);
        // within 1% of the nominal 2.8λ separation
        assert!((d - 2.8).abs() / 2.8 < 0.02);
        let b = scene.feed_boresights[0];
        assert_relative_eq!(b.norm(), 1.0, max_relative = 1e-12);
        assert!(b.dot(&(scene.surface_center - scene.feed_positions[0])) > 0.0);
    }

    #[test]
    fn two_feeds_straddle_feed_center_along_x() {
        let config = SceneConfig {
            num_feeds: 2,
            ..SceneConfig::default()
        };
        let scene = scene_with(&config, 5);
        let mid = (scene.feed_positions[0] + scene.feed_positions[1]) / 2.0;
        assert_relative_eq!((mid - Vector3::from(config.feed_center)).norm(), 0.0, epsilon = 1e-12);
        let gap = scene.feed_positions[1] - scene.feed_positions[0];
        assert_relative_eq!(gap.norm(), config.feed_spacing, max_relative = 1e-12);
        assert_relative_eq!(gap.y.abs() + gap.z.abs(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fraunhofer_reference_values() {
        // 100 elements at λ/3: 2·100/9 ≈ 22.2λ
        assert_relative_eq!(
            fraunhofer_distance(100, 2, 1.0 / 3.0, 0.5),
            200.0 / 9.0,
            max_relative = 1e-12
        );
        // 25 elements at λ/3: ≈ 5.56λ
        assert_relative_eq!(
            fraunhofer_distance(25, 1, 1.0 / 3.0, 0.5),
            50.0 / 9.0,
            max_relative = 1e-12
        );
        // degenerate single element, single feed at λ/2 pitch
        assert_relative_eq!(fraunhofer_distance(1, 1, 0.5, 0.5), 0.5);
    }

    #[test]
    fn default_feeds_are_in_the_near_field() {
        for m in [25, 49, 100, 144] {
            let config = SceneConfig {
                num_elements: m,
                ..SceneConfig::default()
            };
            let scene = scene_with(&config, 2);
            let d = (scene.feed_positions[0] - scene.surface_center).norm();
            let boundary =
                fraunhofer_distance(m, 1, config.element_spacing, config.feed_spacing);
            assert!(d < boundary, "M={m}: feed at {d}λ, boundary {boundary}λ");
        }
    }

    #[test]
    fn build_is_deterministic_per_seed() {
        let config = SceneConfig::default();
        let a = scene_with(&config, 77);
        let b = scene_with(&config, 77);
        for (pa, pb) in a.sensor_positions.iter().zip(&b.sensor_positions) {
            for axis in 0..3 {
                assert_eq!(pa[axis].to_bits(), pb[axis].to_bits());
            }
        }
        let c = scene_with(&config, 78);
        assert!(a
            .sensor_positions
            .iter()
            .zip(&c.sensor_positions)
            .any(|(pa, pc)| pa != pc));
    }

    #[test]
    fn sensors_stay_inside_the_box() {
        let config = SceneConfig::default();
        let scene = scene_with(&config, 13);
        for p in &scene.sensor_positions {
            for axis in 0..3 {
                assert!(p[axis] >= config.sensor_box_min[axis]);
                assert!(p[axis] < config.sensor_box_max[axis]);
            }
        }
    }

    #[test]
    fn arrival_angles_on_boresight_and_in_plane() {
        let mut config = SceneConfig::default();
        // place sensors deterministically by collapsing the box
        config.num_sensors = 1;
        config.sensor_box_min = [0.0, 20.0, 10.0];
        config.sensor_box_max = [0.0, 20.0, 10.0];
        let scene = scene_with(&config, 1);
        let ang = arrival_angles(&scene, 0).unwrap();
        assert_relative_eq!(ang.theta, 0.0, epsilon = 1e-12);
        assert!(!ang.is_behind());

        // sensor inside the surface plane: 90° off boresight
        config.sensor_box_min = [70.0, 35.0, 10.0];
        config.sensor_box_max = [70.0, 35.0, 10.0];
        let scene = scene_with(&config, 1);
        let ang = arrival_angles(&scene, 0).unwrap();
        assert_relative_eq!(ang.theta, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        assert_relative_eq!(ang.phi, 0.0, epsilon = 1e-12);

        // sensor behind the plane is flagged
        config.sensor_box_min = [75.0, 20.0, 10.0];
        config.sensor_box_max = [75.0, 20.0, 10.0];
        let scene = scene_with(&config, 1);
        assert!(arrival_angles(&scene, 0).unwrap().is_behind());
    }

    #[test]
    fn default_box_sensors_are_in_front() {
        let scene = scene_with(&SceneConfig::default(), 99);
        for k in 0..scene.num_sensors() {
            assert!(!arrival_angles(&scene, k).unwrap().is_behind());
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut rng = RandomStream::from_seed(0);
        let bad_m = SceneConfig {
            num_elements: 3,
            ..SceneConfig::default()
        };
        assert!(matches!(
            build_scene(&bad_m, &mut rng),
            Err(GeometryError::NonSquareElementCount(3))
        ));
        let bad_dig = SceneConfig {
            num_digital_antennas: 60,
            ..SceneConfig::default()
        };
        assert!(matches!(
            build_scene(&bad_dig, &mut rng),
            Err(GeometryError::NonSquareDigitalCount(60))
        ));
        let bad_spacing = SceneConfig {
            element_spacing: 0.0,
            ..SceneConfig::default()
        };
        assert!(matches!(
            build_scene(&bad_spacing, &mut rng),
            Err(GeometryError::NonPositive { .. })
        ));
        let bad_box = SceneConfig {
            sensor_box_min: [1.0, 0.0, 0.0],
            sensor_box_max: [0.0, 40.0, 3.0],
            ..SceneConfig::default()
        };
        assert!(matches!(
            build_scene(&bad_box, &mut rng),
            Err(GeometryError::DegenerateBox { .. })
        ));
    }

    proptest! {
        #[test]
        fn fraunhofer_monotone_in_aperture(
            m1 in 1usize..200, extra in 0usize..100,
            n in 1usize..8, d_el in 0.05f64..1.0, d_fc in 0.05f64..1.0,
        ) {
            let base = fraunhofer_distance(m1, n, d_el, d_fc);
            let grown = fraunhofer_distance(m1 + extra, n, d_el, d_fc);
            prop_assert!(grown >= base);
        }
    }
}
