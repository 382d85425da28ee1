//! Readers and writers for the supported on-disk dataset formats.
//!
//! * `regions-json`: the native format, one polygon per observation.
//! * `tracking-csv`: `id,t,xmin,ymin,xmax,ymax[,attr...]`, one box per row.
//! * `hurdat-csv`: `id,timestamp,lon,lat,extent_km[,wind,pressure]`, storm fixes
//!   grouped into fixed-length time windows. Each fix becomes a square of side
//!   `extent_km` centred on the fix (converted to degrees, plate carrée) and
//!   the observation for a window is the convex hull of all its squares.

use super::{
    infer_schema, AttributeValue, DatasetError, MovingObject, MovingRegionDataset, RegionObservation,
    Timestep,
};
use crate::geometry::{self, check_convex_ring, ConvexPolygon, GeometryError, Point};
use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

const KM_PER_DEGREE: f64 = 111.32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    RegionsJson,
    TrackingCsv,
    HurdatCsv,
}

impl FromStr for DatasetFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "regions-json" => Ok(Self::RegionsJson),
            "tracking-csv" => Ok(Self::TrackingCsv),
            "hurdat-csv" => Ok(Self::HurdatCsv),
            other => Err(format!(
                "unknown dataset format '{other}' (expected regions-json, tracking-csv or hurdat-csv)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    /// Replace non-convex or mis-wound polygons by their convex hull instead of rejecting them.
    pub hull: bool,
    /// Length of one timestep for `hurdat-csv`, in days.
    pub window_days: f64,
    /// Drop the year from `hurdat-csv` timestamps so that seasons line up.
    pub ignore_year: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            hull: false,
            window_days: 2.0,
            ignore_year: false,
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<MovingRegionDataset, DatasetError> {
    load_dataset_with(path, format, &IngestOptions::default())
}

pub fn load_dataset_with(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    options: &IngestOptions,
) -> Result<MovingRegionDataset, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let location = path.display().to_string();
    match format {
        DatasetFormat::RegionsJson => parse_regions_json(&text, &location, options),
        DatasetFormat::TrackingCsv => parse_tracking_csv(&text, &location, options),
        DatasetFormat::HurdatCsv => parse_hurdat_csv(&text, &location, options),
    }
}

/// Writes `dataset` as regions-json.
pub fn save_dataset(dataset: &MovingRegionDataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    std::fs::write(path, to_regions_json(dataset)).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionsFile {
    timesteps: Vec<Timestep>,
    objects: Vec<ObjectRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectRecord {
    id: String,
    #[serde(default)]
    label: Option<String>,
    observations: BTreeMap<Timestep, ObservationRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationRecord {
    polygon: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attributes: BTreeMap<String, AttributeValue>,
}

pub fn to_regions_json(dataset: &MovingRegionDataset) -> String {
    let file = RegionsFile {
        timesteps: dataset.timesteps.clone(),
        objects: dataset
            .objects
            .iter()
            .map(|o| ObjectRecord {
                id: o.id.clone(),
                label: Some(o.label.clone()),
                observations: o
                    .observations
                    .iter()
                    .map(|(&t, obs)| {
                        (
                            t,
                            ObservationRecord {
                                polygon: obs.polygon.iter().map(|&p| p.into()).collect(),
                                attributes: obs.attributes.clone(),
                            },
                        )
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("dataset serializes");
    s.push('\n');
    s
}

fn parse_regions_json(text: &str, location: &str, options: &IngestOptions) -> Result<MovingRegionDataset, DatasetError> {
    let file: RegionsFile = serde_json::from_str(text).map_err(|e| DatasetError::Parse {
        location: format!("{location}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let mut objects = Vec::with_capacity(file.objects.len());
    for rec in file.objects {
        let mut observations = BTreeMap::new();
        for (t, o) in rec.observations {
            let ring: Vec<Point> = o.polygon.into_iter().map(Point::from).collect();
            let polygon = if options.hull { hull_if_needed(ring, &rec.id, t)? } else { ring };
            observations.insert(
                t,
                RegionObservation {
                    polygon,
                    attributes: o.attributes,
                },
            );
        }
        objects.push(MovingObject {
            label: rec.label.unwrap_or_else(|| rec.id.clone()),
            id: rec.id,
            observations,
        });
    }
    let schema = infer_schema(&objects);
    MovingRegionDataset::new(objects, file.timesteps, schema)
}

fn hull_if_needed(ring: Vec<Point>, id: &str, t: Timestep) -> Result<Vec<Point>, DatasetError> {
    match check_convex_ring(&ring) {
        Ok(()) => Ok(ring),
        Err(_) => geometry::convex_hull(&ring)
            .map(Vec::from)
            .map_err(|source| DatasetError::Geometry {
                record: format!("{id}@{t}"),
                source,
            }),
    }
}

fn parse_number(field: &str, what: &str, location: &str) -> Result<f64, DatasetError> {
    field.trim().parse::<f64>().map_err(|_| DatasetError::Parse {
        location: location.to_string(),
        message: format!("{what}: '{field}' is not a number"),
    })
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn check_header(headers: &csv::StringRecord, expected: &[&str], location: &str) -> Result<(), DatasetError> {
    let got: Vec<&str> = headers.iter().take(expected.len()).collect();
    if got != expected {
        return Err(DatasetError::Parse {
            location: format!("{location}:1"),
            message: format!("expected header starting with {}, got {}", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn parse_tracking_csv(text: &str, location: &str, options: &IngestOptions) -> Result<MovingRegionDataset, DatasetError> {
    const COLUMNS: [&str; 6] = ["id", "t", "xmin", "ymin", "xmax", "ymax"];
    let mut reader = csv_reader(text);
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::Parse {
            location: location.to_string(),
            message: e.to_string(),
        })?
        .clone();
    check_header(&headers, &COLUMNS, location)?;
    let extra: Vec<String> = headers.iter().skip(COLUMNS.len()).map(str::to_string).collect();

    let mut by_id: BTreeMap<String, MovingObject> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = format!("{location}:{}", row + 2);
        let record = record.map_err(|e| DatasetError::Parse {
            location: line.clone(),
            message: e.to_string(),
        })?;
        let id = record[0].to_string();
        let t: Timestep = record[1].parse().map_err(|_| DatasetError::Parse {
            location: line.clone(),
            message: format!("timestep '{}' is not an integer", &record[1]),
        })?;
        let mut coords = [0.0; 4];
        for (k, c) in coords.iter_mut().enumerate() {
            *c = parse_number(&record[2 + k], COLUMNS[2 + k], &line)?;
        }
        let [xmin, ymin, xmax, ymax] = coords;
        let polygon = ConvexPolygon::from_box(xmin, ymin, xmax, ymax).map_err(|source| DatasetError::Geometry {
            record: format!("{id}@{t}"),
            source,
        })?;
        let mut obs = RegionObservation::new(polygon.into());
        for (name, value) in extra.iter().zip(record.iter().skip(COLUMNS.len())) {
            if value.is_empty() {
                continue;
            }
            let v = value
                .parse::<f64>()
                .map(AttributeValue::Number)
                .unwrap_or_else(|_| AttributeValue::Text(value.to_string()));
            obs.attributes.insert(name.clone(), v);
        }
        let object = by_id.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            MovingObject {
                id: id.clone(),
                label: id.clone(),
                observations: BTreeMap::new(),
            }
        });
        if object.observations.insert(t, obs).is_some() {
            return Err(DatasetError::Parse {
                location: line,
                message: format!("duplicate observation for {id} at t={t}"),
            });
        }
    }
    let _ = options;
    let objects = order.into_iter().filter_map(|id| by_id.remove(&id)).collect();
    MovingRegionDataset::from_objects(objects)
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    const FORMATS: [&str; 6] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
        "%Y%m%d %H%M",
        "%Y%m%d%H%M",
    ];
    for f in FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, f) {
            return Some(dt);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Moves a timestamp into a fixed non-leap year, keeping month, day and time.
fn strip_year(dt: NaiveDateTime) -> NaiveDateTime {
    let (m, d) = if dt.month() == 2 && dt.day() == 29 { (2, 28) } else { (dt.month(), dt.day()) };
    NaiveDate::from_ymd_opt(2001, m, d)
        .expect("valid calendar date")
        .and_time(dt.time())
}

struct Fix {
    id: String,
    when: NaiveDateTime,
    lon: f64,
    lat: f64,
    extent_km: f64,
    wind: Option<f64>,
    pressure: Option<f64>,
}

fn fix_square(fix: &Fix) -> [Point; 4] {
    let half_lat = 0.5 * fix.extent_km / KM_PER_DEGREE;
    let half_lon = half_lat / fix.lat.to_radians().cos().max(1e-6);
    [
        Point::new(fix.lon - half_lon, fix.lat - half_lat),
        Point::new(fix.lon + half_lon, fix.lat - half_lat),
        Point::new(fix.lon + half_lon, fix.lat + half_lat),
        Point::new(fix.lon - half_lon, fix.lat + half_lat),
    ]
}

fn parse_hurdat_csv(text: &str, location: &str, options: &IngestOptions) -> Result<MovingRegionDataset, DatasetError> {
    const COLUMNS: [&str; 5] = ["id", "timestamp", "lon", "lat", "extent_km"];
    if !(options.window_days > 0.0) {
        return Err(DatasetError::InvalidArguments("window_days must be positive".into()));
    }
    let mut reader = csv_reader(text);
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::Parse {
            location: location.to_string(),
            message: e.to_string(),
        })?
        .clone();
    check_header(&headers, &COLUMNS, location)?;
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (wind_col, pressure_col) = (col("wind"), col("pressure"));

    let mut fixes = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = format!("{location}:{}", row + 2);
        let record = record.map_err(|e| DatasetError::Parse {
            location: line.clone(),
            message: e.to_string(),
        })?;
        let id = record[0].to_string();
        let mut when = parse_timestamp(&record[1]).ok_or_else(|| DatasetError::Parse {
            location: line.clone(),
            message: format!("unrecognized timestamp '{}'", &record[1]),
        })?;
        if options.ignore_year {
            when = strip_year(when);
        }
        let lon = parse_number(&record[2], "lon", &line)?;
        let lat = parse_number(&record[3], "lat", &line)?;
        let extent_km = parse_number(&record[4], "extent_km", &line)?;
        if !(extent_km > 0.0) {
            return Err(DatasetError::Geometry {
                record: id,
                source: GeometryError::Degenerate(extent_km),
            });
        }
        let optional = |c: Option<usize>| -> Result<Option<f64>, DatasetError> {
            match c.and_then(|c| record.get(c)).filter(|s| !s.is_empty()) {
                Some(s) => parse_number(s, "attribute", &line).map(Some),
                None => Ok(None),
            }
        };
        fixes.push(Fix {
            wind: optional(wind_col)?,
            pressure: optional(pressure_col)?,
            id,
            when,
            lon,
            lat,
            extent_km,
        });
    }
    let Some(origin) = fixes.iter().map(|f| f.when).min() else {
        return Err(DatasetError::Parse {
            location: location.to_string(),
            message: "no fixes".into(),
        });
    };
    let window_secs = options.window_days * 86_400.0;

    // (id, window) -> fixes, objects kept in first-seen order
    let mut order: Vec<String> = Vec::new();
    let mut windows: BTreeMap<String, BTreeMap<Timestep, Vec<&Fix>>> = BTreeMap::new();
    for fix in &fixes {
        let secs = (fix.when - origin).num_seconds() as f64;
        let t = (secs / window_secs).floor() as Timestep;
        if !windows.contains_key(&fix.id) {
            order.push(fix.id.clone());
        }
        windows
            .entry(fix.id.clone())
            .or_default()
            .entry(t)
            .or_default()
            .push(fix);
    }

    let mut objects = Vec::with_capacity(order.len());
    for id in order {
        let per_window = windows.remove(&id).unwrap_or_default();
        let mut observations = BTreeMap::new();
        for (t, group) in per_window {
            let corners: Vec<Point> = group.iter().flat_map(|f| fix_square(f)).collect();
            let hull = geometry::convex_hull(&corners).map_err(|source| DatasetError::Geometry {
                record: format!("{id}@{t}"),
                source,
            })?;
            let mut obs = RegionObservation::new(hull.into());
            if let Some(w) = group.iter().filter_map(|f| f.wind).reduce(f64::max) {
                obs.attributes.insert("wind".into(), AttributeValue::Number(w));
            }
            if let Some(p) = group.iter().filter_map(|f| f.pressure).reduce(f64::min) {
                obs.attributes.insert("pressure".into(), AttributeValue::Number(p));
            }
            observations.insert(t, obs);
        }
        objects.push(MovingObject {
            label: id.clone(),
            id,
            observations,
        });
    }
    MovingRegionDataset::from_objects(objects)
}
