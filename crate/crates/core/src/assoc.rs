//! k-nearest-neighbor association of component lists from consecutive
//! frames.
//!
//! A pair is matched when each endpoint is among the other's k nearest
//! candidates, the centroid distance is within `max_dist`, and the pair
//! survives greedy selection in ascending-distance order. Matching is
//! injective on both sides. Component counts per frame are small, so
//! candidate sets come from a brute-force distance matrix.

use crate::ccl::CC;

/// Tri-state outlier flag filled by the motion estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InlierFlag {
    Unset,
    Inlier,
    Outlier,
}

/// A matched component pair across consecutive frames.
///
/// `dx`/`dy` are oriented previous -> current. `residual` is the
/// post-registration distance, filled by the motion module.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub prev_label: u32,
    pub cur_label: u32,
    pub dx: f64,
    pub dy: f64,
    pub dist: f64,
    pub residual: Option<f64>,
    pub inlier: InlierFlag,
}

/// Candidate count and distance gate of the matcher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnParams {
    /// Number of nearest candidates considered on each side, >= 1.
    pub k: usize,
    /// Maximum association distance in pixels; may be `f64::INFINITY`.
    pub max_dist: f64,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self {
            k: 3,
            max_dist: 100.0,
        }
    }
}

/// Indices of the k nearest `to` entries for each `from` entry, ties
/// broken by smaller label.
fn knn_sets(from: &[CC], to: &[CC], k: usize) -> Vec<Vec<usize>> {
    from.iter()
        .map(|a| {
            let mut order: Vec<usize> = (0..to.len()).collect();
            order.sort_by(|&i, &j| {
                let di = hypot(a, &to[i]);
                let dj = hypot(a, &to[j]);
                di.total_cmp(&dj).then(to[i].label.cmp(&to[j].label))
            });
            order.truncate(k);
            order
        })
        .collect()
}

#[inline]
fn hypot(a: &CC, b: &CC) -> f64 {
    let dx = a.cx - b.cx;
    let dy = a.cy - b.cy;
    (dx * dx + dy * dy).sqrt()
}

/// Match components of the previous frame against the current one.
///
/// Output is sorted by current label. Empty inputs yield an empty
/// output. Both input lists must carry unique labels.
pub fn match_knn(prev: &[CC], cur: &[CC], p: &KnnParams) -> Vec<Association> {
    if prev.is_empty() || cur.is_empty() || p.k == 0 {
        return Vec::new();
    }
    let fwd = knn_sets(prev, cur, p.k); // prev -> cur candidates
    let back = knn_sets(cur, prev, p.k); // cur -> prev candidates

    // Mutual candidates within the distance gate, then greedy selection
    // by ascending distance, ties by (prev_label, cur_label).
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, targets) in fwd.iter().enumerate() {
        for &j in targets {
            if back[j].contains(&i) {
                let d = hypot(&prev[i], &cur[j]);
                if d <= p.max_dist {
                    cands.push((d, i, j));
                }
            }
        }
    }
    cands.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(prev[a.1].label.cmp(&prev[b.1].label))
            .then(cur[a.2].label.cmp(&cur[b.2].label))
    });

    let mut used_prev = vec![false; prev.len()];
    let mut used_cur = vec![false; cur.len()];
    let mut out = Vec::new();
    for (d, i, j) in cands {
        if used_prev[i] || used_cur[j] {
            continue;
        }
        used_prev[i] = true;
        used_cur[j] = true;
        out.push(Association {
            prev_label: prev[i].label,
            cur_label: cur[j].label,
            dx: cur[j].cx - prev[i].cx,
            dy: cur[j].cy - prev[i].cy,
            dist: d,
            residual: None,
            inlier: InlierFlag::Unset,
        });
    }
    out.sort_by_key(|a| a.cur_label);
    out
}
