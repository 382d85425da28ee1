//! Synthetic orbiting-circles dataset.
//!
//! Four roles, each on its own orbit around the origin so that only the
//! co-moving pair can ever intersect:
//!
//! 1. a constant-radius circle on a small orbit,
//! 2. and 3. two circles travelling together on a wide orbit whose radii grow
//!    linearly, overlapping from the middle of the run onwards,
//! 4. a shrinking circle orbiting in the opposite direction.
//!
//! Objects beyond the fourth get constant-radius circles on outer orbits.

use super::{
    AttributeKind, AttributeSpec, AttributeValue, DatasetError, MovingObject, MovingRegionDataset,
    RegionObservation,
};
use crate::geometry::{ConvexPolygon, Point};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Circles are discretized as regular polygons with this many sides.
    pub polygon_sides: usize,
    /// Radians per timestep; the counter-rotating object uses the negative.
    pub angular_speed: f64,
    pub small_orbit_radius: f64,
    pub small_region_radius: f64,
    pub pair_orbit_radius: f64,
    pub pair_radius_start: f64,
    pub pair_radius_end: f64,
    /// Centre-to-centre distance of the co-moving pair. `None` picks the sum of
    /// the start and end radii, which makes the pair overlap exactly from the
    /// midpoint of the run.
    pub pair_separation: Option<f64>,
    pub counter_orbit_radius: f64,
    pub counter_radius_start: f64,
    pub counter_radius_end: f64,
    pub extra_orbit_radius: f64,
    pub extra_orbit_spacing: f64,
    pub extra_region_radius: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            polygon_sides: 32,
            angular_speed: TAU / 50.0,
            small_orbit_radius: 1.0,
            small_region_radius: 0.6,
            pair_orbit_radius: 7.0,
            pair_radius_start: 0.4,
            pair_radius_end: 2.0,
            pair_separation: None,
            counter_orbit_radius: 3.5,
            counter_radius_start: 1.2,
            counter_radius_end: 0.4,
            extra_orbit_radius: 11.0,
            extra_orbit_spacing: 3.0,
            extra_region_radius: 0.6,
        }
    }
}

const LABELS: [&str; 4] = ["green", "orange", "blue", "pink"];

/// Generates the orbit dataset with the default configuration.
pub fn generate_synthetic_orbits(
    num_objects: usize,
    num_timesteps: usize,
    seed: u64,
) -> Result<MovingRegionDataset, DatasetError> {
    generate_synthetic_orbits_with(num_objects, num_timesteps, seed, &SyntheticConfig::default())
}

pub fn generate_synthetic_orbits_with(
    num_objects: usize,
    num_timesteps: usize,
    seed: u64,
    config: &SyntheticConfig,
) -> Result<MovingRegionDataset, DatasetError> {
    if num_objects < 1 {
        return Err(DatasetError::InvalidArguments("need at least one object".into()));
    }
    if num_timesteps < 2 {
        return Err(DatasetError::InvalidArguments("need at least two timesteps".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // one phase per orbit; the pair shares its orbit phase
    let phases: Vec<f64> = (0..num_objects.max(4) - 1).map(|_| rng.random::<f64>() * TAU).collect();

    let pair_sep = config
        .pair_separation
        .unwrap_or(config.pair_radius_start + config.pair_radius_end);
    let pair_offset = 2.0 * (pair_sep / (2.0 * config.pair_orbit_radius)).clamp(-1.0, 1.0).asin();
    let lerp = |a: f64, b: f64, s: f64| a + (b - a) * s;
    let last = (num_timesteps - 1) as f64;

    let mut objects = Vec::with_capacity(num_objects);
    for i in 0..num_objects {
        let mut observations = BTreeMap::new();
        for step in 0..num_timesteps {
            let s = step as f64 / last;
            let turn = config.angular_speed * step as f64;
            let (orbit, angle, radius) = match i {
                0 => (config.small_orbit_radius, phases[0] + turn, config.small_region_radius),
                1 | 2 => {
                    let offset = if i == 1 { 0.0 } else { pair_offset };
                    (
                        config.pair_orbit_radius,
                        phases[1] + turn + offset,
                        lerp(config.pair_radius_start, config.pair_radius_end, s),
                    )
                }
                3 => (
                    config.counter_orbit_radius,
                    phases[2] - turn,
                    lerp(config.counter_radius_start, config.counter_radius_end, s),
                ),
                k => (
                    config.extra_orbit_radius + config.extra_orbit_spacing * (k - 4) as f64,
                    phases[k - 1] + 0.7 * turn,
                    config.extra_region_radius,
                ),
            };
            let center = Point::new(orbit * angle.cos(), orbit * angle.sin());
            let polygon = ConvexPolygon::regular(center, radius, config.polygon_sides, 0.0).map_err(|source| {
                DatasetError::Geometry {
                    record: format!("obj{}@{step}", i + 1),
                    source,
                }
            })?;
            let mut obs = RegionObservation::new(polygon.into());
            obs.attributes.insert("radius".into(), AttributeValue::Number(radius));
            observations.insert(step as i64, obs);
        }
        let label = LABELS
            .get(i)
            .map(|s| s.to_string())
            .unwrap_or_else(|| format!("extra-{}", i - 3));
        objects.push(MovingObject {
            id: format!("obj{}", i + 1),
            label,
            observations,
        });
    }
    MovingRegionDataset::new(
        objects,
        (0..num_timesteps as i64).collect(),
        vec![AttributeSpec {
            name: "radius".into(),
            kind: AttributeKind::Numeric,
        }],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::to_regions_json;
    use crate::geometry::intersection_area;

    #[test]
    fn pair_overlaps_exactly_in_second_half() {
        let ds = generate_synthetic_orbits(4, 50, 0).unwrap();
        for t in 0..50i64 {
            let a = ds.objects[1].observations[&t].region();
            let b = ds.objects[2].observations[&t].region();
            let w = intersection_area(&a, &b);
            if t >= 25 {
                assert!(w > 0.0, "t={t}");
            } else {
                assert_eq!(w, 0.0, "t={t}");
            }
        }
    }

    #[test]
    fn other_pairs_never_intersect() {
        let ds = generate_synthetic_orbits(6, 50, 11).unwrap();
        for t in 0..50i64 {
            for i in 0..6 {
                for j in (i + 1)..6 {
                    if (i, j) == (1, 2) {
                        continue;
                    }
                    let a = ds.objects[i].observations[&t].region();
                    let b = ds.objects[j].observations[&t].region();
                    assert_eq!(intersection_area(&a, &b), 0.0, "t={t} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn single_object_two_steps() {
        let ds = generate_synthetic_orbits(1, 2, 0).unwrap();
        assert_eq!(ds.objects.len(), 1);
        let obs = &ds.objects[0].observations;
        assert_eq!(obs.len(), 2);
        assert!((obs[&0].area() - obs[&1].area()).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = to_regions_json(&generate_synthetic_orbits(4, 50, 0).unwrap());
        let b = to_regions_json(&generate_synthetic_orbits(4, 50, 0).unwrap());
        assert_eq!(a, b);
        let c = to_regions_json(&generate_synthetic_orbits(4, 50, 1).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(generate_synthetic_orbits(0, 5, 0).is_err());
        assert!(generate_synthetic_orbits(3, 1, 0).is_err());
    }
}
