//! Flags link crossings between objects that are apart at both ends.

use super::Layout;
use crate::dataset::{MovingRegionDataset, Timestep};
use crate::geometry::intersection_area;
use std::collections::{BTreeMap, HashMap};

/// Marks every pair of links over the same `(from, to)` span whose segments
/// properly cross while their objects are disjoint at `from` and at `to`.
/// Previous flags are cleared first.
pub fn flag_spurious_crossings(layout: &mut Layout, dataset: &MovingRegionDataset) {
    let centers: HashMap<(&str, Timestep), f64> = layout
        .rects
        .iter()
        .map(|r| ((r.object_id.as_str(), r.timestep), r.y_center))
        .collect();

    let mut spans: BTreeMap<(Timestep, Timestep), Vec<usize>> = BTreeMap::new();
    for (idx, link) in layout.links.iter().enumerate() {
        spans.entry((link.from, link.to)).or_default().push(idx);
    }

    let disjoint_at = |a: &str, b: &str, t: Timestep| -> bool {
        match (dataset.object(a).and_then(|o| o.observations.get(&t)), dataset.object(b).and_then(|o| o.observations.get(&t))) {
            (Some(p), Some(q)) => intersection_area(&p.region(), &q.region()) <= 0.0,
            _ => true,
        }
    };

    let mut flags: Vec<(usize, String)> = Vec::new();
    for ((from, to), idxs) in &spans {
        for (a, &la) in idxs.iter().enumerate() {
            for &lb in &idxs[a + 1..] {
                let ida = layout.links[la].object_id.as_str();
                let idb = layout.links[lb].object_id.as_str();
                let (Some(&a0), Some(&a1), Some(&b0), Some(&b1)) = (
                    centers.get(&(ida, *from)),
                    centers.get(&(ida, *to)),
                    centers.get(&(idb, *from)),
                    centers.get(&(idb, *to)),
                ) else {
                    continue;
                };
                let before = a0 - b0;
                let after = a1 - b1;
                if before * after >= 0.0 {
                    continue;
                }
                if disjoint_at(ida, idb, *from) && disjoint_at(ida, idb, *to) {
                    flags.push((la, idb.to_string()));
                    flags.push((lb, ida.to_string()));
                }
            }
        }
    }

    for link in &mut layout.links {
        link.spurious_crossings.clear();
    }
    for (idx, other) in flags {
        layout.links[idx].spurious_crossings.push(other);
    }
    for link in &mut layout.links {
        link.spurious_crossings.sort();
        link.spurious_crossings.dedup();
    }
}
