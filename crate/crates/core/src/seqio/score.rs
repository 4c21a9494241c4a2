//! Scoring of confirmed tracks against generator ground truth.

use std::collections::HashMap;

use crate::seqio::synth::GroundTruth;
use crate::tracking::{Track, TrackStatus};

/// Result of matching confirmed tracks against truth meteors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreReport {
    /// Detected truth meteors / total truth meteors (1.0 when there is
    /// no truth).
    pub recall: f64,
    /// Confirmed tracks that match no truth meteor.
    pub false_positives: usize,
    pub detected: usize,
    pub total_truth: usize,
}

/// A truth meteor counts as detected when some confirmed track coincides
/// with it on at least 3 frames within `tol` pixels; a confirmed track
/// coinciding with no meteor on 3 frames is a false positive.
pub fn score(tracks: &[Track], truth: &GroundTruth, tol: f64) -> ScoreReport {
    let tol2 = tol * tol;
    let confirmed: Vec<&Track> = tracks
        .iter()
        .filter(|t| t.status == TrackStatus::Confirmed)
        .collect();
    let truth_maps: Vec<HashMap<u64, (f64, f64)>> = truth
        .meteors
        .iter()
        .map(|m| m.points.iter().map(|&(t, x, y)| (t, (x, y))).collect())
        .collect();

    let mut meteor_detected = vec![false; truth.meteors.len()];
    let mut false_positives = 0usize;
    for track in &confirmed {
        let mut matched_any = false;
        for (mi, tmap) in truth_maps.iter().enumerate() {
            let coincident = track
                .states
                .iter()
                .filter(|s| {
                    tmap.get(&s.t).map_or(false, |&(x, y)| {
                        (s.x - x).powi(2) + (s.y - y).powi(2) <= tol2
                    })
                })
                .count();
            if coincident >= 3 {
                meteor_detected[mi] = true;
                matched_any = true;
            }
        }
        if !matched_any {
            false_positives += 1;
        }
    }

    let detected = meteor_detected.iter().filter(|&&d| d).count();
    let total = truth.meteors.len();
    ScoreReport {
        recall: if total == 0 {
            1.0
        } else {
            detected as f64 / total as f64
        },
        false_positives,
        detected,
        total_truth: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqio::synth::MeteorTruth;
    use crate::tracking::TrackPoint;

    fn track_from(id: u64, status: TrackStatus, pts: &[(u64, f64, f64)]) -> Track {
        Track {
            id,
            t_begin: pts.first().unwrap().0,
            t_end: pts.last().unwrap().0,
            states: pts
                .iter()
                .map(|&(t, x, y)| TrackPoint {
                    t,
                    x,
                    y,
                    residual: 2.0,
                })
                .collect(),
            status,
        }
    }

    fn truth_one() -> GroundTruth {
        GroundTruth {
            meteors: vec![MeteorTruth {
                meteor_id: 0,
                points: vec![(3, 10.0, 10.0), (4, 13.0, 10.0), (5, 16.0, 10.0)],
            }],
        }
    }

    #[test]
    fn exact_match_scores_perfectly() {
        let tracks = vec![track_from(
            1,
            TrackStatus::Confirmed,
            &[(3, 10.0, 10.0), (4, 13.0, 10.0), (5, 16.0, 10.0)],
        )];
        let r = score(&tracks, &truth_one(), 1.0);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.false_positives, 0);
    }

    #[test]
    fn empty_tracks_miss_everything() {
        let truth = GroundTruth {
            meteors: vec![
                truth_one().meteors[0].clone(),
                MeteorTruth {
                    meteor_id: 1,
                    points: vec![(8, 50.0, 50.0), (9, 52.0, 50.0), (10, 54.0, 50.0)],
                },
            ],
        };
        let r = score(&[], &truth, 1.0);
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.total_truth, 2);
        assert_eq!(r.false_positives, 0);
    }

    #[test]
    fn perturbation_within_tolerance_still_detects() {
        let tracks = vec![track_from(
            1,
            TrackStatus::Confirmed,
            &[(3, 10.5, 10.0), (4, 13.0, 10.5), (5, 15.5, 10.0)],
        )];
        let r = score(&tracks, &truth_one(), 1.0);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.false_positives, 0);
    }

    #[test]
    fn unrelated_confirmed_track_is_false_positive() {
        let tracks = vec![track_from(
            1,
            TrackStatus::Confirmed,
            &[(3, 200.0, 200.0), (4, 203.0, 200.0), (5, 206.0, 200.0)],
        )];
        let r = score(&tracks, &truth_one(), 1.0);
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.false_positives, 1);
    }

    #[test]
    fn unconfirmed_tracks_are_ignored() {
        let tracks = vec![track_from(
            1,
            TrackStatus::Terminated,
            &[(3, 200.0, 200.0), (4, 203.0, 200.0)],
        )];
        let r = score(&tracks, &truth_one(), 1.0);
        assert_eq!(r.false_positives, 0);
    }

    #[test]
    fn no_truth_means_perfect_recall() {
        let r = score(&[], &GroundTruth::default(), 1.0);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.total_truth, 0);
    }

    #[test]
    fn two_coincident_frames_are_not_enough() {
        let tracks = vec![track_from(
            1,
            TrackStatus::Confirmed,
            &[(3, 10.0, 10.0), (4, 13.0, 10.0), (5, 30.0, 10.0)],
        )];
        let r = score(&tracks, &truth_one(), 1.0);
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.false_positives, 1);
    }
}
