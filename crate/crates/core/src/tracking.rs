//! Temporal tracker chaining moving associations across frames.
//!
//! A new track opens with both endpoints of its first association, so an
//! object seen moving on 3 consecutive frames (2 associations) reaches
//! the 3-frame confirmation bar. A single missed frame terminates a
//! track; there is no coasting. Updates must arrive in strictly
//! increasing frame order from a single thread.

use std::collections::HashMap;

use thiserror::Error;

use crate::assoc::Association;
use crate::ccl::CC;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    /// Below the confirmation bar but still alive at end of stream.
    Potential,
    /// Seen moving on enough frames; sticky once reached.
    Confirmed,
    /// Ended mid-stream before reaching the confirmation bar.
    Terminated,
}

impl TrackStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackStatus::Potential => "potential",
            TrackStatus::Confirmed => "confirmed",
            TrackStatus::Terminated => "terminated",
        }
    }
}

/// One observation of a tracked object.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPoint {
    pub t: u64,
    pub x: f64,
    pub y: f64,
    /// Post-registration residual of the association that produced this
    /// point, a speed estimate in pixels/frame.
    pub residual: f64,
}

/// Temporal chain of moving detections.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub t_begin: u64,
    pub t_end: u64,
    /// Strictly increasing in `t`, no gaps.
    pub states: Vec<TrackPoint>,
    pub status: TrackStatus,
}

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    #[error("frame index {t} not greater than last updated frame {last}")]
    NonMonotonicFrame { t: u64, last: u64 },
    #[error("associations cannot exist at frame 0")]
    AssociationAtFrameZero,
    #[error("moving association references unknown current label {0}")]
    UnknownCurLabel(u32),
}

/// Stateful tracker. Keys of the active map are the current-frame labels
/// of the last processed frame's moving associations; ids are never
/// reused.
#[derive(Debug)]
pub struct Tracker {
    confirm_frames: usize,
    active: HashMap<u32, Track>,
    finished: Vec<Track>,
    next_id: u64,
    last_t: Option<u64>,
}

impl Tracker {
    /// `confirm_frames` is the number of frames of observed motion that
    /// confirms a track (3 in the reference configuration).
    pub fn new(confirm_frames: usize) -> Self {
        Self {
            confirm_frames,
            active: HashMap::new(),
            finished: Vec::new(),
            next_id: 1,
            last_t: None,
        }
    }

    /// Ingest the moving associations of frame `t`.
    ///
    /// Extensions re-key active tracks to their new current label;
    /// unmatched moving associations open new tracks seeded with both
    /// endpoints (frames `t-1` and `t`); active tracks not extended at
    /// `t` are closed.
    pub fn update(&mut self, t: u64, moving: &[Association], cur: &[CC]) -> Result<(), TrackError> {
        if let Some(last) = self.last_t {
            if t <= last {
                return Err(TrackError::NonMonotonicFrame { t, last });
            }
        }
        if t == 0 && !moving.is_empty() {
            return Err(TrackError::AssociationAtFrameZero);
        }
        self.last_t = Some(t);

        let pos: HashMap<u32, (f64, f64)> = cur.iter().map(|c| (c.label, (c.cx, c.cy))).collect();
        let mut next_active: HashMap<u32, Track> = HashMap::with_capacity(moving.len());

        for a in moving {
            let &(cx, cy) = pos
                .get(&a.cur_label)
                .ok_or(TrackError::UnknownCurLabel(a.cur_label))?;
            let residual = a.residual.unwrap_or(a.dist);
            let extended = match self.active.remove(&a.prev_label) {
                // Only a track that reaches exactly the previous frame
                // can be extended; anything else is stale.
                Some(track) if track.t_end + 1 == t => Some(track),
                Some(stale) => {
                    self.close(stale);
                    None
                }
                None => None,
            };
            let mut track = match extended {
                Some(mut track) => {
                    track.states.push(TrackPoint {
                        t,
                        x: cx,
                        y: cy,
                        residual,
                    });
                    track.t_end = t;
                    track
                }
                None => {
                    let id = self.next_id;
                    self.next_id += 1;
                    Track {
                        id,
                        t_begin: t - 1,
                        t_end: t,
                        states: vec![
                            TrackPoint {
                                t: t - 1,
                                x: cx - a.dx,
                                y: cy - a.dy,
                                residual,
                            },
                            TrackPoint {
                                t,
                                x: cx,
                                y: cy,
                                residual,
                            },
                        ],
                        status: TrackStatus::Potential,
                    }
                }
            };
            if track.states.len() >= self.confirm_frames {
                track.status = TrackStatus::Confirmed;
            }
            next_active.insert(a.cur_label, track);
        }

        // close() would re-borrow self while the drain is live.
        for (_, track) in self.active.drain() {
            Self::close_into(&mut self.finished, track);
        }
        self.active = next_active;
        Ok(())
    }

    fn close(&mut self, track: Track) {
        Self::close_into(&mut self.finished, track);
    }

    fn close_into(finished: &mut Vec<Track>, mut track: Track) {
        if track.status != TrackStatus::Confirmed {
            track.status = TrackStatus::Terminated;
        }
        finished.push(track);
    }

    /// Flush still-active tracks and return everything sorted by
    /// `(t_begin, id)`. Tracks alive at end of stream keep `Potential`
    /// if they never confirmed.
    pub fn finalize(&mut self) -> Vec<Track> {
        let mut all = std::mem::take(&mut self.finished);
        let mut flushed: Vec<Track> = self.active.drain().map(|(_, t)| t).collect();
        all.append(&mut flushed);
        all.sort_by_key(|t| (t.t_begin, t.id));
        all
    }
}
