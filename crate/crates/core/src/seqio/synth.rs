//! Seeded synthetic night-sky sequences with exported ground truth.
//!
//! Stars are rendered as small Gaussian spots rigidly transformed per
//! frame by cumulative camera jitter; meteors are moving streaks drawn
//! on top. Ground-truth meteor centroids are recorded in image
//! coordinates after jitter, one entry per live frame. Generation is
//! bit-reproducible for a fixed seed (ChaCha8 stream).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::imgproc::GrayFrame;
use crate::motion::RigidMotion;

/// A single meteor: linear motion from `(x0, y0)` at `velocity`
/// px/frame, alive for `duration` frames starting at `t_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeteorSpec {
    pub t_start: u64,
    pub duration: u64,
    pub x0: f64,
    pub y0: f64,
    pub vx: f64,
    pub vy: f64,
    pub intensity: u8,
    /// Streak thickness in pixels.
    pub thickness: f64,
}

impl MeteorSpec {
    pub fn speed(&self) -> f64 {
        (self.vx * self.vx + self.vy * self.vy).sqrt()
    }
}

/// Full description of a synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    pub n_frames: u64,
    pub n_stars: usize,
    /// Inclusive intensity range for star peaks.
    pub star_intensity: (u8, u8),
    pub meteors: Vec<MeteorSpec>,
    /// Per-frame jitter translation bound, pixels (uniform in +-bound).
    pub max_jitter_shift: f64,
    /// Per-frame jitter rotation bound, radians (uniform in +-bound).
    pub max_jitter_rot: f64,
    pub background: u8,
    /// Additive uniform noise amplitude (+-amp around background).
    pub noise_amp: u8,
    pub seed: u64,
}

impl SceneSpec {
    /// Desk-scale default scene: 50 bright stars, mild jitter, no meteors.
    pub fn basic(width: u32, height: u32, n_frames: u64, seed: u64) -> Self {
        Self {
            width,
            height,
            n_frames,
            n_stars: 50,
            star_intensity: (110, 245),
            meteors: Vec::new(),
            max_jitter_shift: 1.5,
            max_jitter_rot: 0.0008,
            background: 12,
            noise_amp: 6,
            seed,
        }
    }

    /// Place `n` meteors with detectable speed (>= 2 px/frame), mutually
    /// separated trajectories and a safety margin against jitter drift.
    /// Placement is deterministic for a fixed scene seed.
    pub fn scatter_meteors(&mut self, n: usize) -> Result<(), SceneError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x6d65_7465_6f72);
        let margin = 40.0;
        let (w, h) = (self.width as f64, self.height as f64);
        if w <= 2.0 * margin || h <= 2.0 * margin {
            return Err(SceneError::Invalid(
                "frame too small for meteor placement margins".into(),
            ));
        }
        let stars: Vec<(f64, f64)> = sample_stars(self).iter().map(|s| (s.x, s.y)).collect();
        for _ in 0..n {
            let mut placed = false;
            for _attempt in 0..200 {
                let duration = rng.gen_range(8..=20.min(self.n_frames.saturating_sub(2).max(8)));
                if duration + 2 > self.n_frames {
                    return Err(SceneError::Invalid(format!(
                        "stream of {} frames too short for a meteor",
                        self.n_frames
                    )));
                }
                let t_start = rng.gen_range(1..=self.n_frames - duration - 1);
                let speed = rng.gen_range(2.0..5.0);
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let (vx, vy) = (speed * angle.cos(), speed * angle.sin());
                let reach = speed * duration as f64;
                let x0 = rng.gen_range(margin..w - margin);
                let y0 = rng.gen_range(margin..h - margin);
                let (x1, y1) = (x0 + vx * duration as f64, y0 + vy * duration as f64);
                if x1 < margin || x1 > w - margin || y1 < margin || y1 > h - margin {
                    continue;
                }
                let cand = MeteorSpec {
                    t_start,
                    duration,
                    x0,
                    y0,
                    vx,
                    vy,
                    intensity: rng.gen_range(190..=250),
                    thickness: rng.gen_range(2.0..3.5),
                };
                // Keep trajectories far apart so components never merge.
                let disjoint = self.meteors.iter().all(|m| {
                    let sep = ((m.x0 - cand.x0).powi(2) + (m.y0 - cand.y0).powi(2)).sqrt();
                    sep > reach + m.speed() * m.duration as f64 + 30.0
                });
                // And clear of every star: a streak grazing a star blends
                // the two components for a frame and drags both centroids.
                let (ex, ey) = (
                    x0 + vx * (duration as f64 + 1.0),
                    y0 + vy * (duration as f64 + 1.0),
                );
                let clear_of_stars = stars.iter().all(|&(sx, sy)| {
                    dist2_to_segment(sx, sy, x0, y0, ex, ey) > STAR_MIN_SEP * STAR_MIN_SEP
                });
                if disjoint && clear_of_stars {
                    self.meteors.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(SceneError::Invalid(
                    "could not place mutually disjoint meteors".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Per-meteor true centroid positions, one per live frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MeteorTruth {
    pub meteor_id: u32,
    pub points: Vec<(u64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub meteors: Vec<MeteorTruth>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("meteor {meteor} leaves the frame at t={t} ({x:.1}, {y:.1})")]
    OutOfBounds { meteor: usize, t: u64, x: f64, y: f64 },
    #[error("invalid scene: {0}")]
    Invalid(String),
}

struct Star {
    x: f64,
    y: f64,
    sigma: f64,
    intensity: f64,
}

// Distinct RNG streams so star placement, jitter and pixel noise do not
// shift each other when parameters change.
const STAR_STREAM: u64 = 0x5354_4152;
const MOTION_STREAM: u64 = 0x4a49_5454;

/// Minimum star separation. Two spots closer than this can merge into
/// one component under the low threshold, and a blended component's
/// centroid flickers with pixel noise, breaking the premise that a
/// static star yields a stable detection.
const STAR_MIN_SEP: f64 = 8.0;

fn sample_stars(spec: &SceneSpec) -> Vec<Star> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ STAR_STREAM);
    let margin = 6.0;
    let (w, h) = (spec.width as f64, spec.height as f64);
    let mut stars: Vec<Star> = Vec::with_capacity(spec.n_stars);
    let mut attempts = 0usize;
    while stars.len() < spec.n_stars && attempts < spec.n_stars * 200 {
        attempts += 1;
        let x = rng.gen_range(margin..w - 1.0 - margin);
        let y = rng.gen_range(margin..h - 1.0 - margin);
        if stars
            .iter()
            .any(|s| (s.x - x).powi(2) + (s.y - y).powi(2) < STAR_MIN_SEP * STAR_MIN_SEP)
        {
            continue;
        }
        stars.push(Star {
            x,
            y,
            sigma: rng.gen_range(0.8..1.4),
            intensity: rng.gen_range(spec.star_intensity.0 as f64..=spec.star_intensity.1 as f64),
        });
    }
    stars
}

/// Apply a jitter transform about the image center.
#[inline]
fn jitter_apply(m: &RigidMotion, cx: f64, cy: f64, x: f64, y: f64) -> (f64, f64) {
    let (rx, ry) = m.apply(x - cx, y - cy);
    (rx + cx, ry + cy)
}

fn splat_gaussian(buf: &mut [f64], w: u32, h: u32, x: f64, y: f64, sigma: f64, amp: f64) {
    let reach = 3.0 * sigma;
    let x_lo = ((x - reach).floor().max(0.0)) as u32;
    let x_hi = ((x + reach).ceil().min(w as f64 - 1.0)) as u32;
    let y_lo = ((y - reach).floor().max(0.0)) as u32;
    let y_hi = ((y + reach).ceil().min(h as f64 - 1.0)) as u32;
    if x + reach < 0.0 || y + reach < 0.0 || x - reach > w as f64 - 1.0 || y - reach > h as f64 - 1.0
    {
        return;
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    for py in y_lo..=y_hi {
        for px in x_lo..=x_hi {
            let d2 = (px as f64 - x).powi(2) + (py as f64 - y).powi(2);
            buf[py as usize * w as usize + px as usize] += amp * (-d2 * inv).exp();
        }
    }
}

/// Squared distance from a point to a segment.
fn dist2_to_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (ux, uy) = (bx - ax, by - ay);
    let len2 = ux * ux + uy * uy;
    let t = if len2 > 0.0 {
        (((px - ax) * ux + (py - ay) * uy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (ax + t * ux, ay + t * uy);
    (px - cx).powi(2) + (py - cy).powi(2)
}

fn splat_streak(
    buf: &mut [f64],
    w: u32,
    h: u32,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    sigma: f64,
    amp: f64,
) {
    let reach = 3.0 * sigma;
    let x_lo = ((ax.min(bx) - reach).floor().max(0.0)) as u32;
    let x_hi = ((ax.max(bx) + reach).ceil().min(w as f64 - 1.0)) as u32;
    let y_lo = ((ay.min(by) - reach).floor().max(0.0)) as u32;
    let y_hi = ((ay.max(by) + reach).ceil().min(h as f64 - 1.0)) as u32;
    let inv = 1.0 / (2.0 * sigma * sigma);
    for py in y_lo..=y_hi {
        for px in x_lo..=x_hi {
            let d2 = dist2_to_segment(px as f64, py as f64, ax, ay, bx, by);
            buf[py as usize * w as usize + px as usize] += amp * (-d2 * inv).exp();
        }
    }
}

/// Generate the frame sequence and its ground truth.
///
/// Deterministic for a fixed seed. Fails if any meteor's rendered streak
/// (with its Gaussian reach) leaves the frame during its lifetime.
pub fn generate(spec: &SceneSpec) -> Result<(Vec<GrayFrame>, GroundTruth), SceneError> {
    if spec.width < 2 || spec.height < 2 {
        return Err(SceneError::Invalid("frame must be at least 2x2".into()));
    }
    if spec.star_intensity.0 > spec.star_intensity.1 {
        return Err(SceneError::Invalid("star intensity range inverted".into()));
    }
    for (i, m) in spec.meteors.iter().enumerate() {
        if m.duration == 0 {
            return Err(SceneError::Invalid(format!("meteor {i} has zero duration")));
        }
        if m.t_start + m.duration > spec.n_frames {
            return Err(SceneError::Invalid(format!(
                "meteor {i} outlives the {}-frame stream",
                spec.n_frames
            )));
        }
        if m.thickness <= 0.0 {
            return Err(SceneError::Invalid(format!("meteor {i} has no thickness")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);

    let stars = sample_stars(spec);

    // Cumulative camera jitter about the image center; identity at t=0.
    let mut motion_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ MOTION_STREAM);
    let mut jitters = Vec::with_capacity(spec.n_frames as usize);
    jitters.push(RigidMotion::IDENTITY);
    for _ in 1..spec.n_frames {
        let delta = RigidMotion {
            tx: motion_rng.gen_range(-spec.max_jitter_shift..=spec.max_jitter_shift),
            ty: motion_rng.gen_range(-spec.max_jitter_shift..=spec.max_jitter_shift),
            theta: if spec.max_jitter_rot > 0.0 {
                motion_rng.gen_range(-spec.max_jitter_rot..=spec.max_jitter_rot)
            } else {
                0.0
            },
        };
        jitters.push(delta.after(jitters.last().unwrap()));
    }

    // Validate meteor paths (after jitter) before rendering anything.
    let mut truth = GroundTruth::default();
    for (i, m) in spec.meteors.iter().enumerate() {
        let sigma = (m.thickness / 2.0).max(0.6);
        let inset = 3.0 * sigma + 1.0;
        let mut points = Vec::with_capacity(m.duration as usize);
        for t in m.t_start..m.t_start + m.duration {
            let age = (t - m.t_start) as f64;
            let (ax, ay) = (m.x0 + m.vx * age, m.y0 + m.vy * age);
            let (bx, by) = (ax + m.vx, ay + m.vy);
            let jm = &jitters[t as usize];
            let (jax, jay) = jitter_apply(jm, cx, cy, ax, ay);
            let (jbx, jby) = jitter_apply(jm, cx, cy, bx, by);
            for &(x, y) in &[(jax, jay), (jbx, jby)] {
                if x < inset || x > w as f64 - 1.0 - inset || y < inset || y > h as f64 - 1.0 - inset
                {
                    return Err(SceneError::OutOfBounds { meteor: i, t, x, y });
                }
            }
            points.push((t, (jax + jbx) / 2.0, (jay + jby) / 2.0));
        }
        truth.meteors.push(MeteorTruth {
            meteor_id: i as u32,
            points,
        });
    }

    let mut frames = Vec::with_capacity(spec.n_frames as usize);
    let npix = w as usize * h as usize;
    let mut buf = vec![0.0f64; npix];
    for t in 0..spec.n_frames {
        buf.iter_mut().for_each(|v| *v = spec.background as f64);
        if spec.noise_amp > 0 {
            let amp = spec.noise_amp as i32;
            for v in buf.iter_mut() {
                *v += rng.gen_range(-amp..=amp) as f64;
            }
        }
        let jm = &jitters[t as usize];
        for s in &stars {
            let (jx, jy) = jitter_apply(jm, cx, cy, s.x, s.y);
            splat_gaussian(&mut buf, w, h, jx, jy, s.sigma, s.intensity);
        }
        for m in &spec.meteors {
            if t < m.t_start || t >= m.t_start + m.duration {
                continue;
            }
            let age = (t - m.t_start) as f64;
            let (ax, ay) = (m.x0 + m.vx * age, m.y0 + m.vy * age);
            let (bx, by) = (ax + m.vx, ay + m.vy);
            let (jax, jay) = jitter_apply(jm, cx, cy, ax, ay);
            let (jbx, jby) = jitter_apply(jm, cx, cy, bx, by);
            let sigma = (m.thickness / 2.0).max(0.6);
            splat_streak(&mut buf, w, h, jax, jay, jbx, jby, sigma, m.intensity as f64);
        }
        let data: Vec<u8> = buf.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect();
        frames.push(GrayFrame {
            width: w,
            height: h,
            t,
            data,
        });
    }
    Ok((frames, truth))
}

/// Write ground truth as CSV `meteor_id,t,x,y` with a header.
pub fn write_truth_csv(truth: &GroundTruth, path: &Path) -> Result<(), std::io::Error> {
    let mut out = String::from("meteor_id,t,x,y\n");
    for m in &truth.meteors {
        for &(t, x, y) in &m.points {
            out.push_str(&format!("{},{},{:.3},{:.3}\n", m.meteor_id, t, x, y));
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())
}

/// Read ground truth written by [`write_truth_csv`].
pub fn read_truth_csv(path: &Path) -> Result<GroundTruth, std::io::Error> {
    let text = fs::read_to_string(path)?;
    let mut by_id: BTreeMap<u32, Vec<(u64, f64, f64)>> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parse = |line: &str| -> Option<(u32, u64, f64, f64)> {
            let mut it = line.split(',');
            Some((
                it.next()?.trim().parse().ok()?,
                it.next()?.trim().parse().ok()?,
                it.next()?.trim().parse().ok()?,
                it.next()?.trim().parse().ok()?,
            ))
        };
        let (id, t, x, y) = parse(line).ok_or_else(|| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("bad truth row at line {}", lineno + 1),
            )
        })?;
        by_id.entry(id).or_default().push((t, x, y));
    }
    Ok(GroundTruth {
        meteors: by_id
            .into_iter()
            .map(|(meteor_id, points)| MeteorTruth { meteor_id, points })
            .collect(),
    })
}
