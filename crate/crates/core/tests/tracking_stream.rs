//! Randomized association streams against the tracker's structural
//! invariants: the confirmation biconditional, replay determinism, and
//! output ordering.

use bolide_core::assoc::{Association, InlierFlag};
use bolide_core::ccl::CC;
use bolide_core::tracking::{Track, TrackStatus, Tracker};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Frame = (u64, Vec<Association>, Vec<CC>);

/// Random stream: a handful of labels per frame, each moving label
/// chained to an arbitrary previous label so extensions, collisions and
/// terminations all occur.
fn random_stream(seed: u64) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_frames = rng.gen_range(2..30u64);
    let mut frames = Vec::new();
    for t in 1..n_frames {
        let n_ccs = rng.gen_range(0..6usize);
        let ccs: Vec<CC> = (0..n_ccs)
            .map(|i| {
                CC::point(
                    i as u32 + 1,
                    rng.gen_range(0.0..100.0),
                    rng.gen_range(0.0..100.0),
                )
            })
            .collect();
        let n_moving = if n_ccs == 0 { 0 } else { rng.gen_range(0..=n_ccs) };
        // Injective on both sides: sample distinct prev labels.
        let mut prev_labels: Vec<u32> = (1..=8u32).collect();
        let mut assocs = Vec::new();
        for j in 0..n_moving {
            let pick = rng.gen_range(0..prev_labels.len());
            let prev_label = prev_labels.swap_remove(pick);
            assocs.push(Association {
                prev_label,
                cur_label: ccs[j].label,
                dx: rng.gen_range(-3.0..3.0),
                dy: rng.gen_range(-3.0..3.0),
                dist: 1.0,
                residual: Some(rng.gen_range(0.8..5.0)),
                inlier: InlierFlag::Inlier,
            });
        }
        assocs.sort_by_key(|a| a.cur_label);
        frames.push((t, assocs, ccs));
    }
    frames
}

fn run(stream: &[Frame]) -> Vec<Track> {
    let mut tracker = Tracker::new(3);
    for (t, assocs, ccs) in stream {
        tracker.update(*t, assocs, ccs).unwrap();
    }
    tracker.finalize()
}

#[test]
fn confirmation_biconditional_and_structure() {
    for seed in 0..200 {
        let stream = random_stream(seed);
        let tracks = run(&stream);
        for tr in &tracks {
            // Confirmed <=> at least 3 states (frames of observed motion).
            assert_eq!(
                tr.status == TrackStatus::Confirmed,
                tr.states.len() >= 3,
                "seed {seed} track {}",
                tr.id
            );
            // States dense and aligned with the span.
            assert_eq!(tr.t_end - tr.t_begin + 1, tr.states.len() as u64);
            assert!(tr
                .states
                .windows(2)
                .all(|w| w[1].t == w[0].t + 1));
            assert_eq!(tr.states.first().unwrap().t, tr.t_begin);
            assert_eq!(tr.states.last().unwrap().t, tr.t_end);
        }
    }
}

#[test]
fn replay_is_deterministic() {
    for seed in 0..100 {
        let stream = random_stream(seed);
        assert_eq!(run(&stream), run(&stream), "seed {seed}");
    }
}

#[test]
fn finalize_order_matches_sort_oracle() {
    for seed in 0..100 {
        let tracks = run(&random_stream(seed));
        // Comparison-sort oracle over the returned set.
        let mut expected: Vec<(u64, u64)> = tracks.iter().map(|t| (t.t_begin, t.id)).collect();
        let got = expected.clone();
        expected.sort();
        assert_eq!(got, expected, "seed {seed}");
        // Ids unique and in creation order overall.
        let mut ids: Vec<u64> = tracks.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), tracks.len());
    }
}
