//! Layout documents (JSON) and static SVG plots.

mod color;
mod svg;

pub use color::{bilinear, colormap_position, spatial_color, spatial_color_with, Rgb, DEFAULT_CORNERS, PALETTE, RAMP};
pub use svg::{render_svg, ColorMode, RenderError, RenderSpec};

use crate::layout::Layout;
use crate::metrics::MetricsReport;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON schema of [`LayoutDocument`].
pub const LAYOUT_SCHEMA: &str = include_str!("../../../../docs/layout.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDocument {
    pub schema_version: u32,
    pub layout: Layout,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("layout document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {found}, expected {SCHEMA_VERSION}")]
    Version { found: u32 },
}

/// Pretty-printed document with a trailing newline.
pub fn layout_to_json(layout: &Layout, metrics: Option<&MetricsReport>) -> String {
    let doc = LayoutDocument {
        schema_version: SCHEMA_VERSION,
        layout: layout.clone(),
        metrics: metrics.cloned(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("layout documents always serialize");
    s.push('\n');
    s
}

pub fn layout_from_json(text: &str) -> Result<LayoutDocument, ExportError> {
    let doc: LayoutDocument = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ExportError::Version {
            found: doc.schema_version,
        });
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic_orbits, MovingObject, MovingRegionDataset, RegionObservation};
    use crate::geometry::ConvexPolygon;
    use crate::layout::{compute_layout, LayoutConfig};
    use crate::metrics::compute_metrics;

    #[test]
    fn minimal_document() {
        let ds = MovingRegionDataset::from_objects(vec![MovingObject {
            id: "a".into(),
            label: "a".into(),
            observations: [(0, RegionObservation::new(ConvexPolygon::from_box(0.0, 0.0, 1.0, 1.0).unwrap().into()))].into(),
        }])
        .unwrap();
        let layout = compute_layout(&ds, &LayoutConfig::default()).unwrap();
        let doc = layout_from_json(&layout_to_json(&layout, None)).unwrap();
        assert_eq!(doc.layout.rects.len(), 1);
        assert!(doc.layout.links.is_empty());
    }

    #[test]
    fn round_trip_is_identity() {
        let ds = generate_synthetic_orbits(4, 20, 1).unwrap();
        let layout = compute_layout(&ds, &LayoutConfig::default()).unwrap();
        let metrics = compute_metrics(&ds, &layout);
        let text = layout_to_json(&layout, Some(&metrics));
        let doc = layout_from_json(&text).unwrap();
        assert_eq!(doc.layout, layout);
        assert_eq!(doc.metrics.as_ref(), Some(&metrics));
        assert_eq!(layout_to_json(&doc.layout, doc.metrics.as_ref()), text);
    }

    #[test]
    fn synthetic_document_matches_schema() {
        let ds = generate_synthetic_orbits(4, 50, 0).unwrap();
        let layout = compute_layout(&ds, &LayoutConfig::default()).unwrap();
        let metrics = compute_metrics(&ds, &layout);
        let value: serde_json::Value = serde_json::from_str(&layout_to_json(&layout, Some(&metrics))).unwrap();
        let schema: serde_json::Value = serde_json::from_str(LAYOUT_SCHEMA).unwrap();
        let validator = jsonschema::validator_for(&schema).unwrap();
        let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:?}");

        let mut broken = value.clone();
        broken["layout"]["rects"][0]["height"] = serde_json::json!("tall");
        assert!(!validator.is_valid(&broken));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = r#"{"schema_version": 2, "layout": {"timesteps": [], "rects": [], "links": [], "slices": [], "area_scale": 1.0, "config": {}}}"#;
        assert!(layout_from_json(text).is_err());
    }
}
