//! Static SVG rendering of a layout.
//!
//! Only ribbon rectangles are emitted as `<rect>`; bands, bars, the color bar
//! and the background are `<path>` elements told apart by their class.

use super::color::{bilinear, colormap_position, Rgb, DEFAULT_CORNERS, PALETTE, RAMP};
use crate::dataset::{AttributeValue, MovingRegionDataset, Timestep};
use crate::layout::{Layout, RibbonRect};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorMode {
    IdentityPalette,
    Attribute,
    SpatialColormap,
}

impl FromStr for ColorMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" | "identity-palette" => Ok(Self::IdentityPalette),
            "attribute" => Ok(Self::Attribute),
            "spatial" | "spatial-colormap" => Ok(Self::SpatialColormap),
            other => Err(format!("unknown color mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    pub color_mode: ColorMode,
    pub attribute_name: Option<String>,
    /// Bottom-left, bottom-right, top-left, top-right.
    pub colormap_corners: [Rgb; 4],
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            width: 1200,
            height: 600,
            color_mode: ColorMode::SpatialColormap,
            attribute_name: None,
            colormap_corners: DEFAULT_CORNERS,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("color mode 'attribute' needs an attribute name")]
    MissingAttribute,
    #[error("an attribute name is only used with color mode 'attribute'")]
    UnexpectedAttribute,
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("canvas {0}x{1} is too small")]
    TooSmall(u32, u32),
    #[error("layout object '{0}' is missing from the dataset")]
    UnknownObject(String),
}

impl RenderSpec {
    pub fn check(&self) -> Result<(), RenderError> {
        match (self.color_mode, &self.attribute_name) {
            (ColorMode::Attribute, None) => return Err(RenderError::MissingAttribute),
            (ColorMode::IdentityPalette | ColorMode::SpatialColormap, Some(_)) => {
                return Err(RenderError::UnexpectedAttribute)
            }
            _ => {}
        }
        if self.width < 200 || self.height < 150 {
            return Err(RenderError::TooSmall(self.width, self.height));
        }
        Ok(())
    }
}

const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 20.0;
const BAR_TOP: f64 = 10.0;
const BAR_HEIGHT: f64 = 50.0;
const PLOT_TOP: f64 = 80.0;
const COLORBAR_X: f64 = 15.0;
const COLORBAR_WIDTH: f64 = 24.0;

/// Three decimals, never "-0.000".
fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    column: f64,
    fill: f64,
    top: f64,
    bottom: f64,
    lo: f64,
    hi: f64,
    index: HashMap<Timestep, usize>,
}

impl Frame {
    fn y(&self, v: f64) -> f64 {
        self.bottom - (v - self.lo) / (self.hi - self.lo) * (self.bottom - self.top)
    }

    fn center_x(&self, t: Timestep) -> f64 {
        self.x0 + (self.index[&t] as f64 + 0.5) * self.column
    }

    fn half_width(&self) -> f64 {
        self.fill * self.column / 2.0
    }
}

fn rect_colors(layout: &Layout, dataset: &MovingRegionDataset, spec: &RenderSpec) -> Result<Vec<Rgb>, RenderError> {
    let position: HashMap<&str, usize> = dataset.objects.iter().enumerate().map(|(i, o)| (o.id.as_str(), i)).collect();
    let observation = |r: &RibbonRect| {
        position
            .get(r.object_id.as_str())
            .and_then(|&i| dataset.objects[i].observations.get(&r.timestep))
            .ok_or_else(|| RenderError::UnknownObject(r.object_id.clone()))
    };
    match spec.color_mode {
        ColorMode::IdentityPalette => layout
            .rects
            .iter()
            .map(|r| {
                position
                    .get(r.object_id.as_str())
                    .map(|&i| PALETTE[i % PALETTE.len()])
                    .ok_or_else(|| RenderError::UnknownObject(r.object_id.clone()))
            })
            .collect(),
        ColorMode::SpatialColormap => {
            let bounds = dataset.centroid_bounds();
            layout
                .rects
                .iter()
                .map(|r| {
                    let (u, v) = colormap_position(bounds, observation(r)?.centroid());
                    Ok(bilinear(&spec.colormap_corners, u, v))
                })
                .collect()
        }
        ColorMode::Attribute => {
            let name = spec.attribute_name.as_deref().ok_or(RenderError::MissingAttribute)?;
            if dataset.attribute_kind(name).is_none() {
                return Err(RenderError::UnknownAttribute(name.to_string()));
            }
            let values: Vec<Option<AttributeValue>> = layout
                .rects
                .iter()
                .map(|r| Ok(observation(r)?.attributes.get(name).cloned()))
                .collect::<Result<_, RenderError>>()?;
            let numbers: Vec<f64> = values.iter().flatten().filter_map(AttributeValue::as_f64).collect();
            let missing = Rgb::new(0xbb, 0xbb, 0xbb);
            if numbers.len() == values.iter().flatten().count() && !numbers.is_empty() {
                let lo = numbers.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = numbers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok(values
                    .iter()
                    .map(|v| match v.as_ref().and_then(AttributeValue::as_f64) {
                        Some(x) if hi > lo => RAMP[0].lerp(RAMP[1], (x - lo) / (hi - lo)),
                        Some(_) => RAMP[0].lerp(RAMP[1], 0.5),
                        None => missing,
                    })
                    .collect())
            } else {
                let mut categories: Vec<String> = values.iter().flatten().map(|v| v.to_string()).collect();
                categories.sort();
                categories.dedup();
                Ok(values
                    .iter()
                    .map(|v| match v {
                        Some(v) => {
                            let k = categories.binary_search(&v.to_string()).unwrap_or(0);
                            PALETTE[k % PALETTE.len()]
                        }
                        None => missing,
                    })
                    .collect())
            }
        }
    }
}

pub fn render_svg(layout: &Layout, dataset: &MovingRegionDataset, spec: &RenderSpec) -> Result<String, RenderError> {
    spec.check()?;
    let colors = rect_colors(layout, dataset, spec)?;
    let (w, h) = (spec.width as f64, spec.height as f64);
    let (lo, hi) = match layout.y_range() {
        Some((lo, hi)) if hi > lo => (lo, hi),
        Some((lo, _)) => (lo - 0.5, lo + 0.5),
        None => (0.0, 1.0),
    };
    let columns = layout.timesteps.len().max(1);
    let frame = Frame {
        x0: MARGIN_LEFT,
        column: (w - MARGIN_LEFT - MARGIN_RIGHT) / columns as f64,
        fill: layout.config.column_fill,
        top: PLOT_TOP,
        bottom: h - MARGIN_BOTTOM,
        lo,
        hi,
        index: layout.timesteps.iter().enumerate().map(|(k, &t)| (t, k)).collect(),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        spec.width, spec.height, spec.width, spec.height
    );
    out.push_str(
        "<defs><pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"6\" height=\"6\" patternTransform=\"rotate(45)\">\
         <path d=\"M0 0 L0 6\" stroke=\"#444444\" stroke-width=\"2\"/></pattern></defs>\n",
    );
    let _ = writeln!(
        out,
        r##"<path class="background" d="M0 0 H{} V{} H0 Z" fill="#ffffff"/>"##,
        num(w),
        num(h)
    );

    // bands
    let rect_index: HashMap<(&str, Timestep), usize> = layout
        .rects
        .iter()
        .enumerate()
        .map(|(k, r)| ((r.object_id.as_str(), r.timestep), k))
        .collect();
    out.push_str("<g class=\"bands\">\n");
    for link in &layout.links {
        let (Some(&a), Some(&b)) = (
            rect_index.get(&(link.object_id.as_str(), link.from)),
            rect_index.get(&(link.object_id.as_str(), link.to)),
        ) else {
            continue;
        };
        let (ra, rb) = (&layout.rects[a], &layout.rects[b]);
        let xa = frame.center_x(ra.timestep) + frame.half_width();
        let xb = frame.center_x(rb.timestep) - frame.half_width();
        let d = format!(
            "M{} {} L{} {} L{} {} L{} {} Z",
            num(xa),
            num(frame.y(ra.top())),
            num(xb),
            num(frame.y(rb.top())),
            num(xb),
            num(frame.y(rb.bottom())),
            num(xa),
            num(frame.y(ra.bottom()))
        );
        if link.is_spurious() {
            let _ = writeln!(
                out,
                r#"<path class="band hatched" data-object="{}" data-from="{}" data-to="{}" d="{d}" fill="url(#hatch)" fill-opacity="0.8" stroke="{}" stroke-width="0.5"/>"#,
                escape(&link.object_id),
                link.from,
                link.to,
                colors[a]
            );
        } else {
            let _ = writeln!(
                out,
                r#"<path class="band" data-object="{}" data-from="{}" data-to="{}" d="{d}" fill="{}" fill-opacity="0.55"/>"#,
                escape(&link.object_id),
                link.from,
                link.to,
                colors[a]
            );
        }
    }
    out.push_str("</g>\n<g class=\"ribbons\">\n");
    for (r, color) in layout.rects.iter().zip(&colors) {
        let _ = writeln!(
            out,
            r#"<rect class="ribbon" data-object="{}" data-t="{}" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            escape(&r.object_id),
            r.timestep,
            num(frame.center_x(r.timestep) - frame.half_width()),
            num(frame.y(r.top())),
            num(2.0 * frame.half_width()),
            num(frame.y(r.bottom()) - frame.y(r.top())),
            color
        );
    }
    out.push_str("</g>\n");

    // spurious-intersection bar chart
    let counts: BTreeMap<Timestep, usize> = layout.slices.iter().map(|s| (s.timestep, s.spurious_count)).collect();
    let max_count = counts.values().copied().max().unwrap_or(0);
    let _ = writeln!(out, r#"<g class="spurious-bars" data-max="{max_count}">"#);
    for &t in &layout.timesteps {
        let count = counts.get(&t).copied().unwrap_or(0);
        let bar = if max_count > 0 {
            BAR_HEIGHT * count as f64 / max_count as f64
        } else {
            0.0
        };
        let x = frame.center_x(t) - frame.half_width();
        let base = BAR_TOP + BAR_HEIGHT;
        let _ = writeln!(
            out,
            r##"<path class="bar" data-t="{t}" data-count="{count}" d="M{} {} H{} V{} H{} Z" fill="#c0392b"/>"##,
            num(x),
            num(base),
            num(x + 2.0 * frame.half_width()),
            num(base - bar),
            num(x)
        );
    }
    out.push_str("</g>\n");

    // color bar: per pixel row, the average color of every rectangle covering it
    out.push_str("<g class=\"colorbar\">\n");
    let first_row = frame.top.floor() as i64;
    let last_row = frame.bottom.ceil() as i64;
    let spans: Vec<(f64, f64, [f64; 3])> = layout
        .rects
        .iter()
        .zip(&colors)
        .map(|(r, c)| (frame.y(r.top()), frame.y(r.bottom()), c.to_linear()))
        .collect();
    let mut runs: Vec<(i64, i64, Rgb)> = Vec::new();
    for row in first_row..last_row {
        let (y0, y1) = (row as f64, row as f64 + 1.0);
        let mut acc = [0.0; 3];
        let mut weight = 0.0;
        for &(top, bottom, c) in &spans {
            let cover = (bottom.min(y1) - top.max(y0)).max(0.0);
            if cover > 0.0 {
                for k in 0..3 {
                    acc[k] += c[k] * cover;
                }
                weight += cover;
            }
        }
        if weight == 0.0 {
            continue;
        }
        let color = Rgb::from_channels(acc.map(|v| v / weight));
        match runs.last_mut() {
            Some((_, end, c)) if *end == row && *c == color => *end = row + 1,
            _ => runs.push((row, row + 1, color)),
        }
    }
    for (start, end, color) in runs {
        let _ = writeln!(
            out,
            r#"<path class="colorbar-cell" d="M{} {} H{} V{} H{} Z" fill="{color}"/>"#,
            num(COLORBAR_X),
            start,
            num(COLORBAR_X + COLORBAR_WIDTH),
            end,
            num(COLORBAR_X)
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic_orbits, MovingObject, RegionObservation};
    use crate::geometry::ConvexPolygon;
    use crate::layout::{compute_layout, LayoutConfig};

    fn count(svg: &str, needle: &str) -> usize {
        svg.matches(needle).count()
    }

    fn attr(element: &str, name: &str) -> f64 {
        let key = format!(" {name}=\"");
        let start = element.find(&key).unwrap() + key.len();
        let end = start + element[start..].find('"').unwrap();
        element[start..end].parse().unwrap()
    }

    fn one_object_two_steps() -> (MovingRegionDataset, Layout) {
        let sq = |x: f64| RegionObservation::new(ConvexPolygon::from_box(x, 0.0, x + 1.0, 1.0).unwrap().into());
        let ds = MovingRegionDataset::from_objects(vec![MovingObject {
            id: "a".into(),
            label: "a".into(),
            observations: [(0, sq(0.0)), (1, sq(2.0))].into(),
        }])
        .unwrap();
        let layout = compute_layout(&ds, &LayoutConfig::default()).unwrap();
        (ds, layout)
    }

    #[test]
    fn element_counts() {
        let (ds, layout) = one_object_two_steps();
        let svg = render_svg(&layout, &ds, &RenderSpec::default()).unwrap();
        assert_eq!(count(&svg, "<rect"), 2);
        assert_eq!(count(&svg, "<path class=\"band"), 1);
        assert_eq!(count(&svg, "class=\"band hatched\""), 0);
    }

    #[test]
    fn spurious_links_are_hatched() {
        let (ds, mut layout) = one_object_two_steps();
        let svg = render_svg(&layout, &ds, &RenderSpec::default()).unwrap();
        assert_eq!(count(&svg, "band hatched"), 0);
        // a second object whose link crosses the first one's
        let mut ds2 = ds.clone();
        let mut other = ds.objects[0].clone();
        other.id = "b".into();
        ds2.objects.push(other);
        let mut extra = layout.links[0].clone();
        extra.object_id = "b".into();
        extra.spurious_crossings = vec!["a".into()];
        layout.links[0].spurious_crossings = vec!["b".into()];
        layout.links.push(extra);
        for r in layout.rects.clone() {
            let mut r = r;
            r.object_id = "b".into();
            layout.rects.push(r);
        }
        let svg = render_svg(&layout, &ds2, &RenderSpec::default()).unwrap();
        assert_eq!(count(&svg, "class=\"band hatched\""), 2);
    }

    #[test]
    fn rect_heights_are_proportional() {
        let ds = generate_synthetic_orbits(4, 12, 0).unwrap();
        let layout = compute_layout(&ds, &LayoutConfig::default()).unwrap();
        let spec = RenderSpec::default();
        let svg = render_svg(&layout, &ds, &spec).unwrap();
        let (lo, hi) = layout.y_range().unwrap();
        let plot = spec.height as f64 - MARGIN_BOTTOM - PLOT_TOP;
        let rects: Vec<&str> = svg.lines().filter(|l| l.starts_with("<rect")).collect();
        assert_eq!(rects.len(), layout.rects.len());
        for (line, r) in rects.iter().zip(&layout.rects) {
            let px = attr(line, "height");
            assert!((px / plot - r.height / (hi - lo)).abs() < 2e-3, "{line}");
        }
    }

    #[test]
    fn bar_chart_peaks_at_largest_spurious_count() {
        let ds = crate::dataset::generate_random_regions(6, 12, 11).unwrap();
        let layout = compute_layout(&ds, &LayoutConfig::default()).unwrap();
        let svg = render_svg(&layout, &ds, &RenderSpec::default()).unwrap();
        let bars: Vec<f64> = svg.lines().filter(|l| l.contains("class=\"bar\"")).map(|l| attr(l, "data-count")).collect();
        let max_slice = layout.slices.iter().map(|s| s.spurious_count as f64).fold(0.0, f64::max);
        assert_eq!(bars.len(), layout.timesteps.len());
        assert!((bars.iter().copied().fold(0.0, f64::max) - max_slice).abs() < 1e-9);
    }

    #[test]
    fn spec_validation() {
        let (ds, layout) = one_object_two_steps();
        let spec = RenderSpec {
            color_mode: ColorMode::Attribute,
            ..Default::default()
        };
        assert_eq!(render_svg(&layout, &ds, &spec), Err(RenderError::MissingAttribute));
        let spec = RenderSpec {
            attribute_name: Some("radius".into()),
            ..Default::default()
        };
        assert_eq!(render_svg(&layout, &ds, &spec), Err(RenderError::UnexpectedAttribute));
    }

    #[test]
    fn attribute_coloring() {
        let ds = generate_synthetic_orbits(4, 6, 0).unwrap();
        let layout = compute_layout(&ds, &LayoutConfig::default()).unwrap();
        let spec = RenderSpec {
            color_mode: ColorMode::Attribute,
            attribute_name: Some("radius".into()),
            ..Default::default()
        };
        let svg = render_svg(&layout, &ds, &spec).unwrap();
        assert_eq!(count(&svg, "<rect"), layout.rects.len());
        let bad = RenderSpec {
            attribute_name: Some("nope".into()),
            ..spec
        };
        assert!(matches!(render_svg(&layout, &ds, &bad), Err(RenderError::UnknownAttribute(_))));
    }

    #[test]
    fn output_is_stable() {
        let ds = generate_synthetic_orbits(4, 10, 0).unwrap();
        let layout = compute_layout(&ds, &LayoutConfig::default()).unwrap();
        let a = render_svg(&layout, &ds, &RenderSpec::default()).unwrap();
        let b = render_svg(&layout, &ds, &RenderSpec::default()).unwrap();
        assert_eq!(a, b);
    }
}
