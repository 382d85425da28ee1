//! Moving-regions data model, validation, ingestion and synthetic data.

mod io;
mod scenarios;
mod synthetic;

pub use io::{load_dataset, load_dataset_with, save_dataset, to_regions_json, DatasetFormat, IngestOptions};
pub use scenarios::{generate_random_regions, pedestrian_tracking_csv, storm_track_csv, FRAME};
pub use synthetic::{generate_synthetic_orbits, generate_synthetic_orbits_with, SyntheticConfig};

use crate::geometry::{self, check_convex_ring, ConvexPolygon, GeometryError, Point};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

pub type Timestep = i64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeValue {
    Number(f64),
    Text(String),
}

impl AttributeValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttributeValue::Number(v) => Some(*v),
            AttributeValue::Text(_) => None,
        }
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Number(v) => write!(f, "{v}"),
            AttributeValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
}

/// One observed region: a convex CCW polygon plus scalar attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionObservation {
    pub polygon: Vec<Point>,
    pub attributes: BTreeMap<String, AttributeValue>,
}

impl RegionObservation {
    pub fn new(polygon: Vec<Point>) -> Self {
        Self {
            polygon,
            attributes: BTreeMap::new(),
        }
    }

    /// The observation's region. Only meaningful on validated data.
    pub fn region(&self) -> ConvexPolygon {
        ConvexPolygon::new_unchecked(self.polygon.clone())
    }

    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.polygon)
    }

    pub fn centroid(&self) -> Point {
        geometry::centroid(&self.region())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovingObject {
    pub id: String,
    pub label: String,
    /// Observations keyed by timestep; objects may be missing at any timestep.
    pub observations: BTreeMap<Timestep, RegionObservation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovingRegionDataset {
    pub objects: Vec<MovingObject>,
    pub timesteps: Vec<Timestep>,
    pub attribute_schema: Vec<AttributeSpec>,
}

impl MovingRegionDataset {
    /// Builds a dataset and rejects it if any invariant is violated.
    pub fn new(
        objects: Vec<MovingObject>,
        timesteps: Vec<Timestep>,
        attribute_schema: Vec<AttributeSpec>,
    ) -> Result<Self, DatasetError> {
        let ds = Self {
            objects,
            timesteps,
            attribute_schema,
        };
        let report = validate(&ds);
        if report.is_empty() {
            Ok(ds)
        } else {
            Err(DatasetError::Validation(report))
        }
    }

    /// Builds a dataset whose timesteps and attribute schema are inferred from the objects.
    pub fn from_objects(objects: Vec<MovingObject>) -> Result<Self, DatasetError> {
        let timesteps: BTreeSet<Timestep> = objects
            .iter()
            .flat_map(|o| o.observations.keys().copied())
            .collect();
        let schema = infer_schema(&objects);
        Self::new(objects, timesteps.into_iter().collect(), schema)
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn object(&self, id: &str) -> Option<&MovingObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Indices of the objects observed at `t`, in dataset order.
    pub fn observed_at(&self, t: Timestep) -> Vec<usize> {
        self.objects
            .iter()
            .enumerate()
            .filter(|(_, o)| o.observations.contains_key(&t))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn num_observations(&self) -> usize {
        self.objects.iter().map(|o| o.observations.len()).sum()
    }

    pub fn observations(&self) -> impl Iterator<Item = (usize, Timestep, &RegionObservation)> {
        self.objects.iter().enumerate().flat_map(|(i, o)| {
            o.observations.iter().map(move |(&t, obs)| (i, t, obs))
        })
    }

    /// Bounding box of all observation centroids as `(min, max)`.
    pub fn centroid_bounds(&self) -> Option<(Point, Point)> {
        bounds_of(self.observations().map(|(_, _, obs)| obs.centroid()))
    }

    /// Bounding box of all polygon vertices as `(min, max)`.
    pub fn polygon_bounds(&self) -> Option<(Point, Point)> {
        bounds_of(
            self.observations()
                .flat_map(|(_, _, obs)| obs.polygon.iter().copied()),
        )
    }

    pub fn attribute_kind(&self, name: &str) -> Option<AttributeKind> {
        self.attribute_schema
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.kind)
    }
}

fn bounds_of(points: impl Iterator<Item = Point>) -> Option<(Point, Point)> {
    let mut it = points.peekable();
    it.peek()?;
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in it {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    Some((lo, hi))
}

/// Numeric when every value seen for a name is a number, categorical otherwise.
pub(crate) fn infer_schema(objects: &[MovingObject]) -> Vec<AttributeSpec> {
    let mut kinds: BTreeMap<&str, AttributeKind> = BTreeMap::new();
    for obs in objects.iter().flat_map(|o| o.observations.values()) {
        for (name, value) in &obs.attributes {
            let kind = match value {
                AttributeValue::Number(_) => AttributeKind::Numeric,
                AttributeValue::Text(_) => AttributeKind::Categorical,
            };
            kinds
                .entry(name.as_str())
                .and_modify(|k| {
                    if kind == AttributeKind::Categorical {
                        *k = AttributeKind::Categorical;
                    }
                })
                .or_insert(kind);
        }
    }
    kinds
        .into_iter()
        .map(|(name, kind)| AttributeSpec {
            name: name.to_string(),
            kind,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Winding,
    NonConvex,
    SelfIntersecting,
    Degenerate,
    DuplicateId,
    EmptyObject,
    TimestepOrder,
    UnknownTimestep,
    UnknownAttribute,
    AttributeKind,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::Winding => "winding",
            ViolationKind::NonConvex => "non-convex",
            ViolationKind::SelfIntersecting => "self-intersecting",
            ViolationKind::Degenerate => "degenerate",
            ViolationKind::DuplicateId => "duplicate-id",
            ViolationKind::EmptyObject => "empty-object",
            ViolationKind::TimestepOrder => "timestep-order",
            ViolationKind::UnknownTimestep => "unknown-timestep",
            ViolationKind::UnknownAttribute => "unknown-attribute",
            ViolationKind::AttributeKind => "attribute-kind",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub object_id: Option<String>,
    pub timestep: Option<Timestep>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        match (&self.object_id, self.timestep) {
            (Some(id), Some(t)) => write!(f, " at ({id}, {t})")?,
            (Some(id), None) => write!(f, " at {id}")?,
            (None, Some(t)) => write!(f, " at t={t}")?,
            (None, None) => {}
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn kinds(&self) -> Vec<ViolationKind> {
        self.violations.iter().map(|v| v.kind).collect()
    }

    fn push(&mut self, kind: ViolationKind, id: Option<&str>, t: Option<Timestep>, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            object_id: id.map(str::to_string),
            timestep: t,
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every invariant violation of `dataset`; empty iff the dataset is valid.
pub fn validate(dataset: &MovingRegionDataset) -> ValidationReport {
    let mut report = ValidationReport::default();

    for w in dataset.timesteps.windows(2) {
        if w[1] <= w[0] {
            report.push(
                ViolationKind::TimestepOrder,
                None,
                Some(w[1]),
                format!("timestep {} does not follow {}", w[1], w[0]),
            );
        }
    }
    let known: BTreeSet<Timestep> = dataset.timesteps.iter().copied().collect();
    let schema: BTreeMap<&str, AttributeKind> = dataset
        .attribute_schema
        .iter()
        .map(|s| (s.name.as_str(), s.kind))
        .collect();

    let mut seen = BTreeSet::new();
    for obj in &dataset.objects {
        let id = obj.id.as_str();
        if !seen.insert(id) {
            report.push(ViolationKind::DuplicateId, Some(id), None, "object id is not unique");
        }
        if obj.observations.is_empty() {
            report.push(ViolationKind::EmptyObject, Some(id), None, "object has no observations");
        }
        for (&t, obs) in &obj.observations {
            if !known.contains(&t) {
                report.push(
                    ViolationKind::UnknownTimestep,
                    Some(id),
                    Some(t),
                    "observation timestep not listed in dataset timesteps",
                );
            }
            if let Err(e) = check_convex_ring(&obs.polygon) {
                let kind = match e {
                    GeometryError::Clockwise => ViolationKind::Winding,
                    GeometryError::NonConvex(_) => ViolationKind::NonConvex,
                    GeometryError::SelfIntersecting => ViolationKind::SelfIntersecting,
                    _ => ViolationKind::Degenerate,
                };
                report.push(kind, Some(id), Some(t), e.to_string());
            }
            for (name, value) in &obs.attributes {
                match schema.get(name.as_str()) {
                    None => report.push(
                        ViolationKind::UnknownAttribute,
                        Some(id),
                        Some(t),
                        format!("attribute '{name}' is not in the schema"),
                    ),
                    Some(AttributeKind::Numeric) if value.as_f64().is_none() => report.push(
                        ViolationKind::AttributeKind,
                        Some(id),
                        Some(t),
                        format!("attribute '{name}' should be numeric"),
                    ),
                    _ => {}
                }
            }
        }
    }
    report
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },
    #[error("invalid record {record}: {source}")]
    Geometry {
        record: String,
        #[source]
        source: GeometryError,
    },
    #[error("dataset failed validation:\n{0}")]
    Validation(ValidationReport),
    #[error("invalid generator arguments: {0}")]
    InvalidArguments(String),
}

impl DatasetError {
    /// Identifier of the first offending record, when known.
    pub fn record_id(&self) -> Option<&str> {
        match self {
            DatasetError::Geometry { record, .. } => Some(record),
            DatasetError::Validation(r) => r.violations.first().and_then(|v| v.object_id.as_deref()),
            _ => None,
        }
    }
}
