use crate::dataset::MovingRegionDataset;
use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub fn to_linear(self) -> [f64; 3] {
        [self.r as f64, self.g as f64, self.b as f64]
    }

    pub fn from_channels(c: [f64; 3]) -> Self {
        let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
        Self::new(q(c[0]), q(c[1]), q(c[2]))
    }

    /// `(1 − t)·self + t·other`, channel-wise.
    pub fn lerp(self, other: Rgb, t: f64) -> Rgb {
        let (a, b) = (self.to_linear(), other.to_linear());
        Self::from_channels([0, 1, 2].map(|k| a[k] + (b[k] - a[k]) * t))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }
}

impl FromStr for Rgb {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s.strip_prefix('#').unwrap_or(s);
        if hex.len() != 6 {
            return Err(format!("expected #rrggbb, got '{s}'"));
        }
        let ch = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|e| format!("bad color '{s}': {e}"));
        Ok(Self::new(ch(0)?, ch(2)?, ch(4)?))
    }
}

/// Corners of the 2D colormap: bottom-left, bottom-right, top-left, top-right.
pub const DEFAULT_CORNERS: [Rgb; 4] = [
    Rgb::new(0x1b, 0x9e, 0x9a),
    Rgb::new(0xf2, 0xd0, 0x2b),
    Rgb::new(0x6a, 0x3d, 0x9a),
    Rgb::new(0xe0, 0x3a, 0x9d),
];

/// Categorical palette for identity coloring.
pub const PALETTE: [Rgb; 10] = [
    Rgb::new(0x4e, 0x79, 0xa7),
    Rgb::new(0xf2, 0x8e, 0x2b),
    Rgb::new(0xe1, 0x57, 0x59),
    Rgb::new(0x76, 0xb7, 0xb2),
    Rgb::new(0x59, 0xa1, 0x4f),
    Rgb::new(0xed, 0xc9, 0x48),
    Rgb::new(0xb0, 0x7a, 0xa1),
    Rgb::new(0xff, 0x9d, 0xa7),
    Rgb::new(0x9c, 0x75, 0x5f),
    Rgb::new(0xba, 0xb0, 0xac),
];

/// Low and high ends of the numeric attribute ramp.
pub const RAMP: [Rgb; 2] = [Rgb::new(0x44, 0x01, 0x54), Rgb::new(0xfd, 0xe7, 0x25)];

/// Bilinear blend of `corners` at `(u, v) ∈ [0, 1]²` (clamped).
pub fn bilinear(corners: &[Rgb; 4], u: f64, v: f64) -> Rgb {
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    let [bl, br, tl, tr] = corners.map(Rgb::to_linear);
    Rgb::from_channels([0, 1, 2].map(|k| {
        let bottom = bl[k] * (1.0 - u) + br[k] * u;
        let top = tl[k] * (1.0 - u) + tr[k] * u;
        bottom * (1.0 - v) + top * v
    }))
}

/// Color of `point` under the default colormap stretched over the bounding
/// box of the dataset's centroids.
pub fn spatial_color(dataset: &MovingRegionDataset, point: Point) -> Rgb {
    spatial_color_with(dataset, point, &DEFAULT_CORNERS)
}

pub fn spatial_color_with(dataset: &MovingRegionDataset, point: Point, corners: &[Rgb; 4]) -> Rgb {
    let (u, v) = colormap_position(dataset.centroid_bounds(), point);
    bilinear(corners, u, v)
}

/// Position of `point` in the unit square spanned by `bounds`; a degenerate
/// axis maps to 0.5.
pub fn colormap_position(bounds: Option<(Point, Point)>, point: Point) -> (f64, f64) {
    let Some((lo, hi)) = bounds else {
        return (0.5, 0.5);
    };
    let norm = |v: f64, a: f64, b: f64| if b > a { (v - a) / (b - a) } else { 0.5 };
    (norm(point.x, lo.x, hi.x), norm(point.y, lo.y, hi.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{MovingObject, RegionObservation};
    use crate::geometry::ConvexPolygon;

    fn unit_box_dataset() -> MovingRegionDataset {
        let tiny = |id: &str, x: f64, y: f64| MovingObject {
            id: id.into(),
            label: id.into(),
            observations: [(0, RegionObservation::new(ConvexPolygon::from_box(x - 1e-3, y - 1e-3, x + 1e-3, y + 1e-3).unwrap().into()))].into(),
        };
        MovingRegionDataset::from_objects(vec![tiny("a", 0.0, 0.0), tiny("b", 1.0, 1.0)]).unwrap()
    }

    #[test]
    fn corners_are_exact() {
        let ds = unit_box_dataset();
        let c = DEFAULT_CORNERS;
        assert_eq!(spatial_color(&ds, Point::new(0.0, 0.0)), c[0]);
        assert_eq!(spatial_color(&ds, Point::new(1.0, 0.0)), c[1]);
        assert_eq!(spatial_color(&ds, Point::new(0.0, 1.0)), c[2]);
        assert_eq!(spatial_color(&ds, Point::new(1.0, 1.0)), c[3]);
        // outside the box clamps onto it
        assert_eq!(spatial_color(&ds, Point::new(-5.0, 9.0)), c[2]);
    }

    #[test]
    fn center_is_equal_blend() {
        let ds = unit_box_dataset();
        let lin = DEFAULT_CORNERS.map(Rgb::to_linear);
        let want = Rgb::from_channels([0, 1, 2].map(|k| lin.iter().map(|c| c[k]).sum::<f64>() / 4.0));
        assert_eq!(spatial_color(&ds, Point::new(0.5, 0.5)), want);
    }

    #[test]
    fn quarter_along_bottom_edge() {
        let ds = unit_box_dataset();
        let [bl, br, _, _] = DEFAULT_CORNERS.map(Rgb::to_linear);
        let want = Rgb::from_channels([0, 1, 2].map(|k| 0.75 * bl[k] + 0.25 * br[k]));
        assert_eq!(spatial_color(&ds, Point::new(0.25, 0.0)), want);
    }

    #[test]
    fn hex_round_trip() {
        for c in PALETTE {
            assert_eq!(c.to_string().parse::<Rgb>().unwrap(), c);
        }
        assert!("#12345".parse::<Rgb>().is_err());
    }
}
