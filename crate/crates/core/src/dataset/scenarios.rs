//! Seeded scenario generators beyond the orbit dataset: random convex
//! regions for fuzzing, plus stand-ins for pedestrian tracking and storm-track
//! sources emitted in their on-disk CSV formats.

use super::{DatasetError, MovingObject, MovingRegionDataset, RegionObservation};
use crate::geometry::{convex_hull, Point};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

/// Objects drifting in a 6×6 square, each a hull of random points around its
/// center; every object is missing at roughly one timestep in seven.
pub fn generate_random_regions(num_objects: usize, num_timesteps: usize, seed: u64) -> Result<MovingRegionDataset, DatasetError> {
    if num_objects == 0 || num_timesteps == 0 {
        return Err(DatasetError::InvalidArguments("need at least one object and one timestep".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects = Vec::with_capacity(num_objects);
    for k in 0..num_objects {
        let mut center = Point::new(rng.random_range(0.0..6.0), rng.random_range(0.0..6.0));
        let radius = rng.random_range(0.3..1.4);
        let mut observations = BTreeMap::new();
        for t in 0..num_timesteps {
            center = center + Point::new(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
            center = Point::new(center.x.clamp(0.0, 6.0), center.y.clamp(0.0, 6.0));
            if rng.random::<f64>() < 0.15 && !(t + 1 == num_timesteps && observations.is_empty()) {
                continue;
            }
            let polygon = loop {
                let n = rng.random_range(3..9);
                let pts: Vec<Point> = (0..n)
                    .map(|_| {
                        let a = rng.random_range(0.0..TAU);
                        let r = radius * rng.random_range(0.3..1.0);
                        center + Point::new(a.cos(), a.sin()) * r
                    })
                    .collect();
                if let Ok(hull) = convex_hull(&pts) {
                    if crate::geometry::area(&hull) > 1e-3 {
                        break hull;
                    }
                }
            };
            observations.insert(t as i64, RegionObservation::new(polygon.into()));
        }
        objects.push(MovingObject {
            id: format!("r{k}"),
            label: format!("region {k}"),
            observations,
        });
    }
    MovingRegionDataset::from_objects(objects)
}

/// Frame size of the pedestrian scenario, in pixels.
pub const FRAME: (f64, f64) = (1920.0, 1080.0);

/// `tracking-csv` text for people walking across a fixed camera view: 14
/// tracks over 234 frames, boxes scaled with depth so that nearer people
/// appear larger and occlude those behind them.
pub fn pedestrian_tracking_csv(seed: u64) -> String {
    const PEOPLE: usize = 14;
    const FRAMES: i64 = 234;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("id,t,xmin,ymin,xmax,ymax,speed\n");
    for p in 0..PEOPLE {
        let start = if p < 6 { 0 } else { rng.random_range(0..FRAMES - 60) };
        let length = rng.random_range(60..=FRAMES);
        let end = (start + length).min(FRAMES);
        // ground position: x across the frame, depth in [0, 1] (0 far, 1 near)
        let mut x = rng.random_range(100.0..FRAME.0 - 100.0);
        let mut depth: f64 = rng.random_range(0.1..0.9);
        let mut heading = rng.random_range(0.0..TAU);
        let speed = rng.random_range(2.0..7.0);
        for t in start..end {
            heading += rng.random_range(-0.15..0.15);
            x += speed * heading.cos();
            depth += 0.004 * speed * heading.sin() / 5.0;
            if !(60.0..=FRAME.0 - 60.0).contains(&x) {
                heading = std::f64::consts::PI - heading;
                x = x.clamp(60.0, FRAME.0 - 60.0);
            }
            if !(0.05..=0.95).contains(&depth) {
                heading = -heading;
                depth = depth.clamp(0.05, 0.95);
            }
            let height = 110.0 + 330.0 * depth;
            let width = 0.42 * height;
            let foot = 420.0 + 640.0 * depth;
            let (xmin, xmax) = (x - width / 2.0, x + width / 2.0);
            let (ymin, ymax) = (foot - height, foot);
            let _ = writeln!(out, "p{p:02},{t},{xmin:.1},{ymin:.1},{xmax:.1},{ymax:.1},{speed:.2}");
        }
    }
    out
}

/// `hurdat-csv` text for 70 storms spread over a 104-day season, six-hourly
/// fixes whose tracks head west and then recurve north-east.
pub fn storm_track_csv(seed: u64) -> String {
    const STORMS: usize = 70;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("id,timestamp,lon,lat,extent_km,wind,pressure\n");
    let season = chrono::NaiveDate::from_ymd_opt(2005, 7, 1)
        .expect("valid date")
        .and_hms_opt(0, 0, 0)
        .expect("valid time");
    for s in 0..STORMS {
        let genesis_hours = 6 * rng.random_range(0..(92 * 4));
        let fixes = rng.random_range(12..48);
        let mut lon: f64 = rng.random_range(-65.0..-25.0);
        let mut lat: f64 = rng.random_range(10.0..22.0);
        let recurve = rng.random_range(0.3..0.9);
        let peak_extent = rng.random_range(250.0..700.0);
        let peak_wind = rng.random_range(40.0..150.0);
        for f in 0..fixes {
            let phase = f as f64 / (fixes - 1) as f64;
            let (dlon, dlat) = if phase < recurve {
                (-rng.random_range(0.6..1.2), rng.random_range(0.05..0.4))
            } else {
                (rng.random_range(0.2..1.4), rng.random_range(0.4..1.0))
            };
            lon += dlon;
            lat = (lat + dlat).min(55.0);
            let shape = (std::f64::consts::PI * phase).sin().max(0.15);
            let extent = peak_extent * shape;
            let wind = (peak_wind * shape).round();
            let pressure = (1012.0 - 0.9 * wind).round();
            let when = season + chrono::Duration::hours(genesis_hours + 6 * f as i64);
            let _ = writeln!(
                out,
                "S{s:02},{},{lon:.2},{lat:.2},{extent:.1},{wind},{pressure}",
                when.format("%Y-%m-%d %H:%M")
            );
        }
    }
    out
}
