//! Read-only queries over a computed layout and its dataset, as served to
//! the interactive explorer.

use crate::dataset::{AttributeKind, AttributeValue, MovingRegionDataset, Timestep};
use crate::geometry::Point;
use crate::layout::Layout;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Per-object aggregates usable in [`Explorer::filter_objects`] next to the
/// dataset's numeric attributes.
pub const PSEUDO_ATTRIBUTES: [&str; 3] = ["mean_area", "path_length", "observation_count"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExploreError {
    #[error("invalid timestep range [{t0}, {t1}]")]
    BadRange { t0: Timestep, t1: Timestep },
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("attribute '{0}' is categorical and cannot be range-filtered")]
    Categorical(String),
    #[error("layout and dataset disagree: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Real,
    Spurious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionEdge {
    pub i: String,
    pub j: String,
    /// Scaled 2D intersection area; zero on spurious edges.
    pub w: f64,
    /// Unscaled 2D intersection area.
    pub area: f64,
    /// Vertical overlap of the two rectangles.
    pub achieved: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionGraphSlice {
    pub timestep: Timestep,
    /// Objects with at least one edge, sorted.
    pub nodes: Vec<String>,
    pub edges: Vec<IntersectionEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub timestep: Timestep,
    pub centroid: Point,
    pub polygon: Vec<Point>,
    pub attributes: BTreeMap<String, AttributeValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangePredicate {
    pub attribute: String,
    pub min: f64,
    pub max: f64,
}

pub struct Explorer {
    layout: Layout,
    dataset: MovingRegionDataset,
}

impl Explorer {
    pub fn new(layout: Layout, dataset: MovingRegionDataset) -> Result<Self, ExploreError> {
        for r in &layout.rects {
            let observed = dataset
                .object(&r.object_id)
                .is_some_and(|o| o.observations.contains_key(&r.timestep));
            if !observed {
                return Err(ExploreError::Mismatch(format!(
                    "'{}' has a rectangle at t = {} but no observation",
                    r.object_id, r.timestep
                )));
            }
        }
        Ok(Self { layout, dataset })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn dataset(&self) -> &MovingRegionDataset {
        &self.dataset
    }

    /// One graph per layout timestep in `[t0, t1]`. With `objects`, only edges
    /// between two listed objects are kept.
    pub fn get_intersections(
        &self,
        t0: Timestep,
        t1: Timestep,
        objects: Option<&BTreeSet<String>>,
    ) -> Result<Vec<IntersectionGraphSlice>, ExploreError> {
        let (Some(&first), Some(&last)) = (self.layout.timesteps.first(), self.layout.timesteps.last()) else {
            return Err(ExploreError::BadRange { t0, t1 });
        };
        if t0 > t1 || t0 < first || t1 > last {
            return Err(ExploreError::BadRange { t0, t1 });
        }
        if let Some(ids) = objects {
            if let Some(missing) = ids.iter().find(|id| self.dataset.object(id).is_none()) {
                return Err(ExploreError::UnknownObject(missing.clone()));
            }
        }
        let keep = |id: &str| objects.is_none_or(|ids| ids.contains(id));
        let mut out = Vec::new();
        for &t in self.layout.timesteps.iter().filter(|&&t| t >= t0 && t <= t1) {
            let mut edges = Vec::new();
            if let Some(slice) = self.layout.slice(t) {
                for p in &slice.pairs {
                    if !(keep(&p.i) && keep(&p.j)) {
                        continue;
                    }
                    let kind = if p.is_a() {
                        EdgeKind::Real
                    } else if p.is_spurious() {
                        EdgeKind::Spurious
                    } else {
                        continue;
                    };
                    edges.push(IntersectionEdge {
                        i: p.i.clone(),
                        j: p.j.clone(),
                        w: p.w,
                        area: p.w * self.layout.area_scale,
                        achieved: p.achieved,
                        kind,
                    });
                }
            }
            let nodes: BTreeSet<String> = edges.iter().flat_map(|e| [e.i.clone(), e.j.clone()]).collect();
            out.push(IntersectionGraphSlice {
                timestep: t,
                nodes: nodes.into_iter().collect(),
                edges,
            });
        }
        Ok(out)
    }

    pub fn get_object_track(&self, id: &str) -> Result<Vec<TrackPoint>, ExploreError> {
        let object = self
            .dataset
            .object(id)
            .ok_or_else(|| ExploreError::UnknownObject(id.to_string()))?;
        Ok(object
            .observations
            .iter()
            .map(|(&t, obs)| TrackPoint {
                timestep: t,
                centroid: obs.centroid(),
                polygon: obs.polygon.clone(),
                attributes: obs.attributes.clone(),
            })
            .collect())
    }

    /// Per-object aggregate of `attribute`: the mean over observations for a
    /// numeric attribute, or one of [`PSEUDO_ATTRIBUTES`].
    pub fn aggregate(&self, id: &str, attribute: &str) -> Result<Option<f64>, ExploreError> {
        let object = self
            .dataset
            .object(id)
            .ok_or_else(|| ExploreError::UnknownObject(id.to_string()))?;
        let obs = &object.observations;
        match attribute {
            "mean_area" => Ok(Some(obs.values().map(|o| o.area()).sum::<f64>() / obs.len() as f64)),
            "path_length" => {
                let centroids: Vec<Point> = obs.values().map(|o| o.centroid()).collect();
                Ok(Some(centroids.windows(2).map(|w| w[0].distance(w[1])).sum()))
            }
            "observation_count" => Ok(Some(obs.len() as f64)),
            name => match self.dataset.attribute_kind(name) {
                None => Err(ExploreError::UnknownAttribute(name.to_string())),
                Some(AttributeKind::Categorical) => Err(ExploreError::Categorical(name.to_string())),
                Some(AttributeKind::Numeric) => {
                    let values: Vec<f64> = obs
                        .values()
                        .filter_map(|o| o.attributes.get(name).and_then(AttributeValue::as_f64))
                        .collect();
                    Ok((!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64))
                }
            },
        }
    }

    /// Ids, in dataset order, whose aggregates lie within every range.
    /// Objects without any value for a filtered attribute are dropped.
    pub fn filter_objects(&self, predicates: &[RangePredicate]) -> Result<Vec<String>, ExploreError> {
        for p in predicates {
            if !PSEUDO_ATTRIBUTES.contains(&p.attribute.as_str()) {
                match self.dataset.attribute_kind(&p.attribute) {
                    None => return Err(ExploreError::UnknownAttribute(p.attribute.clone())),
                    Some(AttributeKind::Categorical) => return Err(ExploreError::Categorical(p.attribute.clone())),
                    Some(AttributeKind::Numeric) => {}
                }
            }
        }
        let mut out = Vec::new();
        'objects: for object in &self.dataset.objects {
            for p in predicates {
                match self.aggregate(&object.id, &p.attribute)? {
                    Some(v) if v >= p.min && v <= p.max => {}
                    _ => continue 'objects,
                }
            }
            out.push(object.id.clone());
        }
        Ok(out)
    }
}
