//! Global rigid camera-motion estimation from associations, registration
//! of the current frame onto the previous one, and the static/moving
//! split on post-registration residuals.
//!
//! The estimator is the closed-form 2D least-squares rigid fit
//! (Procrustes without scaling): with centered point sets it recovers
//! theta from the cross/dot accumulators and the translation from the
//! rotated means. Exact on noiseless rigid data, O(n), no dependencies.
//! A two-pass variant rejects residual outliers (moving objects) so they
//! do not pollute the camera-motion fit.

use std::collections::HashMap;

use thiserror::Error;

use crate::assoc::{Association, InlierFlag};
use crate::ccl::CC;

/// Rigid 2D transform: rotation by `theta` about the origin followed by
/// translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    pub tx: f64,
    pub ty: f64,
    /// Radians, in (-pi, pi].
    pub theta: f64,
}

impl RigidMotion {
    pub const IDENTITY: RigidMotion = RigidMotion {
        tx: 0.0,
        ty: 0.0,
        theta: 0.0,
    };

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (c * x - s * y + self.tx, s * x + c * y + self.ty)
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &RigidMotion) -> RigidMotion {
        let (tx, ty) = self.apply(first.tx, first.ty);
        RigidMotion {
            tx,
            ty,
            theta: wrap_angle(self.theta + first.theta),
        }
    }
}

fn wrap_angle(mut a: f64) -> f64 {
    while a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    }
    while a <= -std::f64::consts::PI {
        a += 2.0 * std::f64::consts::PI;
    }
    a
}

/// Residual statistics of a two-pass fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionStats {
    /// Mean inlier residual against the final motion, pixels.
    pub mean_residual: f64,
    /// Population standard deviation of inlier residuals, pixels.
    pub std_residual: f64,
    pub n_inliers: usize,
    pub n_outliers: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum MotionError {
    #[error("rigid fit needs at least 2 associations, got {0}")]
    InsufficientData(usize),
    #[error("degenerate geometry: all previous centroids coincide")]
    DegenerateGeometry,
    #[error("association references unknown label {label} on the {side} side")]
    UnknownLabel { label: u32, side: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionClass {
    Static,
    Moving,
}

fn centroid_index(ccs: &[CC]) -> HashMap<u32, (f64, f64)> {
    ccs.iter().map(|c| (c.label, (c.cx, c.cy))).collect()
}

/// Matched point pairs (previous, current) in association order.
fn paired_points(
    assocs: &[Association],
    prev: &[CC],
    cur: &[CC],
) -> Result<Vec<((f64, f64), (f64, f64))>, MotionError> {
    let pi = centroid_index(prev);
    let ci = centroid_index(cur);
    assocs
        .iter()
        .map(|a| {
            let p = pi.get(&a.prev_label).ok_or(MotionError::UnknownLabel {
                label: a.prev_label,
                side: "previous",
            })?;
            let q = ci.get(&a.cur_label).ok_or(MotionError::UnknownLabel {
                label: a.cur_label,
                side: "current",
            })?;
            Ok((*p, *q))
        })
        .collect()
}

fn fit_pairs(pairs: &[((f64, f64), (f64, f64))]) -> Result<RigidMotion, MotionError> {
    let n = pairs.len();
    if n < 2 {
        return Err(MotionError::InsufficientData(n));
    }
    let inv = 1.0 / n as f64;
    let (mut px, mut py, mut qx, mut qy) = (0.0, 0.0, 0.0, 0.0);
    for ((ax, ay), (bx, by)) in pairs {
        px += ax;
        py += ay;
        qx += bx;
        qy += by;
    }
    px *= inv;
    py *= inv;
    qx *= inv;
    qy *= inv;

    let mut spread = 0.0f64;
    let (mut dot, mut cross) = (0.0, 0.0);
    for ((ax, ay), (bx, by)) in pairs {
        let (ux, uy) = (ax - px, ay - py);
        let (vx, vy) = (bx - qx, by - qy);
        spread = spread.max(ux.abs()).max(uy.abs());
        dot += ux * vx + uy * vy;
        cross += ux * vy - uy * vx;
    }
    if spread < 1e-12 {
        return Err(MotionError::DegenerateGeometry);
    }
    let theta = wrap_angle(cross.atan2(dot));
    let (s, c) = theta.sin_cos();
    Ok(RigidMotion {
        tx: qx - (c * px - s * py),
        ty: qy - (s * px + c * py),
        theta,
    })
}

/// Least-squares rigid transform mapping previous centroids onto current
/// ones.
pub fn estimate_rigid(
    assocs: &[Association],
    prev: &[CC],
    cur: &[CC],
) -> Result<RigidMotion, MotionError> {
    if assocs.len() < 2 {
        return Err(MotionError::InsufficientData(assocs.len()));
    }
    fit_pairs(&paired_points(assocs, prev, cur)?)
}

/// Fill each association's residual: distance between the motion-mapped
/// previous centroid and the current centroid.
pub fn register_residuals(
    assocs: &mut [Association],
    prev: &[CC],
    cur: &[CC],
    m: &RigidMotion,
) -> Result<(), MotionError> {
    let pairs = paired_points(assocs, prev, cur)?;
    for (a, ((px, py), (qx, qy))) in assocs.iter_mut().zip(pairs) {
        let (rx, ry) = m.apply(px, py);
        a.residual = Some(((rx - qx).powi(2) + (ry - qy).powi(2)).sqrt());
    }
    Ok(())
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Robust center and spread of the residual sample: median and scaled
/// median absolute deviation (the MAD scaled by 1.4826 estimates sigma
/// for Gaussian data, so `sigma_factor` keeps its meaning).
fn robust_center_scale(residuals: &[f64]) -> (f64, f64) {
    let center = median_of(residuals.to_vec());
    let mad = median_of(residuals.iter().map(|r| (r - center).abs()).collect());
    (center, 1.4826 * mad)
}

/// Sub-pixel floor of the outlier threshold. On nearly exact data the
/// residual spread collapses to numerical noise and a bare
/// `mean + sigma * std` cut would reject machine dust; anything below a
/// quarter pixel cannot be object motion.
const REJECT_FLOOR_PX: f64 = 0.25;

/// Two-pass rigid fit with residual-based outlier rejection.
///
/// Pass 1 fits on all associations and flags any with residual above
/// `max(median + sigma_factor * 1.4826 * MAD, 0.25 px)` as outliers.
/// Robust statistics are essential here: the rejection threshold is
/// computed on the very residuals the outliers contaminate, and with
/// mean/std a handful of large movers masks the smaller ones. Pass 2
/// refits on the inliers and recomputes every residual against the
/// refined motion. If fewer than 2 inliers remain (or the inliers are
/// degenerate), the pass-1 motion stands and everything is marked
/// inlier.
pub fn estimate_two_pass(
    assocs: &mut [Association],
    prev: &[CC],
    cur: &[CC],
    sigma_factor: f64,
) -> Result<(RigidMotion, MotionStats), MotionError> {
    if assocs.len() < 2 {
        return Err(MotionError::InsufficientData(assocs.len()));
    }
    let pairs = paired_points(assocs, prev, cur)?;
    let pass1 = fit_pairs(&pairs)?;
    let residual_against = |m: &RigidMotion, ((px, py), (qx, qy)): &((f64, f64), (f64, f64))| {
        let (rx, ry) = m.apply(*px, *py);
        ((rx - qx).powi(2) + (ry - qy).powi(2)).sqrt()
    };
    let r1: Vec<f64> = pairs.iter().map(|p| residual_against(&pass1, p)).collect();
    let (center, scale) = robust_center_scale(&r1);
    let threshold = (center + sigma_factor * scale).max(REJECT_FLOOR_PX);
    let flags: Vec<InlierFlag> = r1
        .iter()
        .map(|&r| {
            if r > threshold {
                InlierFlag::Outlier
            } else {
                InlierFlag::Inlier
            }
        })
        .collect();

    let inlier_pairs: Vec<_> = pairs
        .iter()
        .zip(&flags)
        .filter(|(_, f)| **f == InlierFlag::Inlier)
        .map(|(p, _)| *p)
        .collect();

    let refined = if inlier_pairs.len() >= 2 {
        fit_pairs(&inlier_pairs).ok()
    } else {
        None
    };

    match refined {
        Some(m2) => {
            let mut inlier_res = Vec::with_capacity(inlier_pairs.len());
            for ((a, pair), flag) in assocs.iter_mut().zip(&pairs).zip(&flags) {
                let r = residual_against(&m2, pair);
                a.residual = Some(r);
                a.inlier = *flag;
                if *flag == InlierFlag::Inlier {
                    inlier_res.push(r);
                }
            }
            let (mean2, std2) = mean_std(inlier_res.iter().copied());
            Ok((
                m2,
                MotionStats {
                    mean_residual: mean2,
                    std_residual: std2,
                    n_inliers: inlier_res.len(),
                    n_outliers: assocs.len() - inlier_res.len(),
                },
            ))
        }
        None => {
            // Rejection emptied the fit; keep pass 1 and everything.
            for (a, r) in assocs.iter_mut().zip(&r1) {
                a.residual = Some(*r);
                a.inlier = InlierFlag::Inlier;
            }
            let (mean, std) = mean_std(r1.iter().copied());
            Ok((
                pass1,
                MotionStats {
                    mean_residual: mean,
                    std_residual: std,
                    n_inliers: assocs.len(),
                    n_outliers: 0,
                },
            ))
        }
    }
}

/// Static/moving split: moving iff residual >= `r_min`. Associations
/// with no residual yet are classified static.
pub fn classify_motion(assocs: &[Association], r_min: f64) -> Vec<MotionClass> {
    assocs
        .iter()
        .map(|a| match a.residual {
            Some(r) if r >= r_min => MotionClass::Moving,
            _ => MotionClass::Static,
        })
        .collect()
}
