//! Space-filling curve indices over the centroid bounding box.

use super::ProjectionMethod;
use crate::geometry::Point;

/// Hilbert index of cell `(x, y)` on an `n × n` grid (`n` a power of two).
pub fn hilbert_index(n: u64, mut x: u64, mut y: u64) -> u64 {
    let mut d = 0;
    let mut s = n / 2;
    while s > 0 {
        let rx = u64::from(x & s > 0);
        let ry = u64::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}

/// Z-order index: bits of `x` on even positions, bits of `y` on odd ones.
pub fn morton_index(x: u64, y: u64) -> u64 {
    fn spread(mut v: u64) -> u64 {
        v &= 0xffff_ffff;
        v = (v | (v << 16)) & 0x0000_ffff_0000_ffff;
        v = (v | (v << 8)) & 0x00ff_00ff_00ff_00ff;
        v = (v | (v << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
        v = (v | (v << 2)) & 0x3333_3333_3333_3333;
        v = (v | (v << 1)) & 0x5555_5555_5555_5555;
        v
    }
    spread(x) | (spread(y) << 1)
}

pub(super) fn curve_positions(points: &[Point], method: ProjectionMethod, order: u32) -> Vec<f64> {
    let n = 1u64 << order;
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let cell = |v: f64, min: f64, max: f64| -> u64 {
        let span = max - min;
        if span <= 0.0 {
            return 0;
        }
        (((v - min) / span) * n as f64).floor().clamp(0.0, (n - 1) as f64) as u64
    };
    points
        .iter()
        .map(|p| {
            let (cx, cy) = (cell(p.x, lo.x, hi.x), cell(p.y, lo.y, hi.y));
            let d = match method {
                ProjectionMethod::Morton => morton_index(cx, cy),
                _ => hilbert_index(n, cx, cy),
            };
            d as f64
        })
        .collect()
}
