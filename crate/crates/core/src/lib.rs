//! Ribbon layouts for datasets of moving convex regions.
//!
//! The pipeline turns a [`MovingRegionDataset`] into a [`Layout`]: every
//! observation is projected to one dimension, rectangle heights encode region
//! areas, and a small mixed-integer quadratic program per timestep moves the
//! rectangles so that their vertical overlaps reproduce the 2D intersections.
//! Quality metrics, JSON/SVG export and the read-only queries behind the
//! HTTP explorer live alongside.

pub mod dataset;
pub mod explore;
pub mod export;
pub mod geometry;
pub mod layout;
pub mod metrics;
pub mod miqp;
pub mod projection;

pub use dataset::{
    generate_random_regions, generate_synthetic_orbits, load_dataset, load_dataset_with, save_dataset, validate,
    AttributeKind, AttributeSpec, AttributeValue, DatasetError, DatasetFormat, IngestOptions, MovingObject,
    MovingRegionDataset, RegionObservation, SyntheticConfig, Timestep, ValidationReport, Violation,
};
pub use explore::{EdgeKind, ExploreError, Explorer, IntersectionEdge, IntersectionGraphSlice, RangePredicate, TrackPoint};
pub use export::{
    layout_from_json, layout_to_json, render_svg, spatial_color, ColorMode, ExportError, LayoutDocument, RenderError,
    RenderSpec, Rgb,
};
pub use geometry::{ConvexPolygon, Point};
pub use layout::{
    compute_layout, compute_layout_with, ExecutionOptions, Layout, LayoutConfig, LayoutError, PairRecord, RibbonLink,
    RibbonRect, SliceStatus, TimeSliceSolution,
};
pub use metrics::{compute_metrics, compute_metrics_with, MetricsOptions, MetricsReport};
pub use miqp::{MiqpProblem, MiqpSolution, SolveStatus, SolverError};
pub use projection::{project, DistanceMode, ProjectionConfig, ProjectionMethod, ProjectionResult};
