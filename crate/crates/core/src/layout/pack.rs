//! Disjoint vertical placement of independently solved groups.

/// Vertical footprint of one solved group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupExtent {
    /// Center of the interval covering all member rectangles.
    pub mean: f64,
    /// Length of that interval.
    pub height: f64,
    /// Tie-breaker for equal means (smallest member id).
    pub key: String,
}

impl GroupExtent {
    /// Extent of rectangles with the given centers and heights.
    pub fn of(centers: &[f64], heights: &[f64], key: String) -> Self {
        let bottom = centers
            .iter()
            .zip(heights)
            .map(|(y, h)| y - h / 2.0)
            .fold(f64::INFINITY, f64::min);
        let top = centers
            .iter()
            .zip(heights)
            .map(|(y, h)| y + h / 2.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let height = top - bottom;
        Self {
            mean: bottom + height / 2.0,
            height,
            key,
        }
    }
}

/// Indices of `groups` sorted bottom to top.
pub fn stacking_order(groups: &[GroupExtent]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| {
        groups[a]
            .mean
            .total_cmp(&groups[b].mean)
            .then_with(|| groups[a].key.cmp(&groups[b].key))
    });
    order
}

/// Closest centers to the group means such that consecutive groups (in
/// [`stacking_order`]) do not overlap. Returned in input order.
///
/// Substituting `z_g = y_g − s_g`, with `s_g` the stacked offset of group `g`,
/// turns the separation constraints into `z` being non-decreasing, so the
/// least-squares problem is an isotonic regression solved by pooling
/// adjacent violators.
pub fn pack_groups(groups: &[GroupExtent]) -> Vec<f64> {
    let order = stacking_order(groups);
    let mut offsets = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &g in &order {
        offsets.push(acc + groups[g].height / 2.0);
        acc += groups[g].height;
    }
    let targets: Vec<f64> = order.iter().zip(&offsets).map(|(&g, s)| groups[g].mean - s).collect();
    let z = isotonic(&targets);
    let mut centers = vec![0.0; groups.len()];
    for ((&g, s), z) in order.iter().zip(&offsets).zip(z) {
        centers[g] = z + s;
    }
    centers
}

fn isotonic(targets: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(targets.len());
    for &t in targets {
        blocks.push((t, 1));
        while blocks.len() >= 2 {
            let (s2, n2) = blocks[blocks.len() - 1];
            let (s1, n1) = blocks[blocks.len() - 2];
            if s1 / n1 as f64 <= s2 / n2 as f64 {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = (s1 + s2, n1 + n2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(s, n)| std::iter::repeat_n(s / n as f64, n))
        .collect()
}
