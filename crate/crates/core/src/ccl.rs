//! Connected-component labeling with fused component analysis, plus the
//! hysteresis and surface filters applied to the resulting component list.
//!
//! The labeler is a two-pass union-find over 8-connectivity. Features
//! (area, centroid, bounding box, peak intensity) are accumulated during
//! the relabeling pass, so a single call yields both the label map and
//! the analyzed component list. Labels are assigned in raster-scan order
//! of first encounter and are therefore deterministic across runs.

use thiserror::Error;

use crate::imgproc::{BinaryMask, GrayFrame};

/// A connected component and its features, the unit of detection.
#[derive(Debug, Clone, PartialEq)]
pub struct CC {
    /// Positive label, unique within one frame.
    pub label: u32,
    /// Area in pixels.
    pub area: u32,
    /// Centroid (mean of member pixel coordinates).
    pub cx: f64,
    pub cy: f64,
    /// Inclusive bounding box.
    pub xmin: u32,
    pub xmax: u32,
    pub ymin: u32,
    pub ymax: u32,
    /// Maximum source intensity within the component.
    pub peak: u8,
}

impl CC {
    /// Convenience constructor for a component known only by centroid,
    /// mostly useful in tests.
    pub fn point(label: u32, cx: f64, cy: f64) -> Self {
        Self {
            label,
            area: 1,
            cx,
            cy,
            xmin: cx.floor() as u32,
            xmax: cx.ceil() as u32,
            ymin: cy.floor() as u32,
            ymax: cy.ceil() as u32,
            peak: 255,
        }
    }
}

/// Row-major label image; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u32>,
}

impl LabelMap {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.labels[y as usize * self.width as usize + x as usize]
    }
}

/// Inclusive area band of the surface filter. `u32::MAX` is the "no upper
/// bound" sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceParams {
    pub min_area: u32,
    pub max_area: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SurfaceParamError {
    #[error("minimum area must be at least 1")]
    ZeroMin,
    #[error("minimum area {0} exceeds maximum area {1}")]
    Inverted(u32, u32),
}

impl SurfaceParams {
    pub fn new(min_area: u32, max_area: u32) -> Result<Self, SurfaceParamError> {
        if min_area == 0 {
            return Err(SurfaceParamError::ZeroMin);
        }
        if min_area > max_area {
            return Err(SurfaceParamError::Inverted(min_area, max_area));
        }
        Ok(Self { min_area, max_area })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("mask geometry {mask_w}x{mask_h} does not match frame {frame_w}x{frame_h}")]
pub struct GeometryMismatch {
    pub mask_w: u32,
    pub mask_h: u32,
    pub frame_w: u32,
    pub frame_h: u32,
}

#[inline]
fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        // path halving
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

#[inline]
fn union(parent: &mut [u32], a: u32, b: u32) {
    let ra = find(parent, a);
    let rb = find(parent, b);
    if ra < rb {
        parent[rb as usize] = ra;
    } else if rb < ra {
        parent[ra as usize] = rb;
    }
}

struct Acc {
    area: u32,
    sum_x: u64,
    sum_y: u64,
    xmin: u32,
    xmax: u32,
    ymin: u32,
    ymax: u32,
    peak: u8,
}

/// Label the mask under 8-connectivity and analyze every component.
///
/// Returns the label map and the component list sorted by ascending
/// label. Two foreground pixels share a label iff they are 8-connected.
pub fn label_and_analyze(
    mask: &BinaryMask,
    frame: &GrayFrame,
) -> Result<(LabelMap, Vec<CC>), GeometryMismatch> {
    if mask.width != frame.width || mask.height != frame.height {
        return Err(GeometryMismatch {
            mask_w: mask.width,
            mask_h: mask.height,
            frame_w: frame.width,
            frame_h: frame.height,
        });
    }
    let w = mask.width as usize;
    let h = mask.height as usize;

    // Pass 1: provisional labels + equivalences.
    let mut prov = vec![0u32; w * h];
    let mut parent: Vec<u32> = vec![0]; // label 0 reserved for background
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask.bits[i] {
                continue;
            }
            // Already-scanned neighbors: W, NW, N, NE.
            let mut neigh = [0u32; 4];
            let mut n = 0;
            if x > 0 && prov[i - 1] != 0 {
                neigh[n] = prov[i - 1];
                n += 1;
            }
            if y > 0 {
                let j = i - w;
                if x > 0 && prov[j - 1] != 0 {
                    neigh[n] = prov[j - 1];
                    n += 1;
                }
                if prov[j] != 0 {
                    neigh[n] = prov[j];
                    n += 1;
                }
                if x + 1 < w && prov[j + 1] != 0 {
                    neigh[n] = prov[j + 1];
                    n += 1;
                }
            }
            if n == 0 {
                let l = parent.len() as u32;
                parent.push(l);
                prov[i] = l;
            } else {
                let mut m = neigh[0];
                for &l in &neigh[1..n] {
                    if l < m {
                        m = l;
                    }
                }
                prov[i] = m;
                for &l in &neigh[..n] {
                    union(&mut parent, m, l);
                }
            }
        }
    }

    // Pass 2: final labels in raster order of first encounter, features
    // accumulated in the same sweep.
    let mut root_to_final = vec![0u32; parent.len()];
    let mut accs: Vec<Acc> = Vec::new();
    let mut labels = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let p = prov[i];
            if p == 0 {
                continue;
            }
            let r = find(&mut parent, p);
            let fl = if root_to_final[r as usize] != 0 {
                root_to_final[r as usize]
            } else {
                accs.push(Acc {
                    area: 0,
                    sum_x: 0,
                    sum_y: 0,
                    xmin: x as u32,
                    xmax: x as u32,
                    ymin: y as u32,
                    ymax: y as u32,
                    peak: 0,
                });
                let fl = accs.len() as u32;
                root_to_final[r as usize] = fl;
                fl
            };
            labels[i] = fl;
            let a = &mut accs[fl as usize - 1];
            a.area += 1;
            a.sum_x += x as u64;
            a.sum_y += y as u64;
            a.xmin = a.xmin.min(x as u32);
            a.xmax = a.xmax.max(x as u32);
            a.ymin = a.ymin.min(y as u32);
            a.ymax = a.ymax.max(y as u32);
            a.peak = a.peak.max(frame.data[i]);
        }
    }

    let ccs = accs
        .into_iter()
        .enumerate()
        .map(|(k, a)| CC {
            label: k as u32 + 1,
            area: a.area,
            cx: a.sum_x as f64 / a.area as f64,
            cy: a.sum_y as f64 / a.area as f64,
            xmin: a.xmin,
            xmax: a.xmax,
            ymin: a.ymin,
            ymax: a.ymax,
            peak: a.peak,
        })
        .collect();

    Ok((
        LabelMap {
            width: mask.width,
            height: mask.height,
            labels,
        },
        ccs,
    ))
}

/// Keep the components containing at least one pixel >= `high`,
/// completing the hysteresis segmentation. Order preserved.
pub fn filter_hysteresis(ccs: &[CC], high: u8) -> Vec<CC> {
    ccs.iter().filter(|c| c.peak >= high).cloned().collect()
}

/// Keep the components whose area lies in `[min_area, max_area]`
/// (inclusive both ends). Order preserved.
pub fn filter_surface(ccs: &[CC], p: &SurfaceParams) -> Vec<CC> {
    ccs.iter()
        .filter(|c| c.area >= p.min_area && c.area <= p.max_area)
        .cloned()
        .collect()
}
