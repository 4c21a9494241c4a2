//! End-to-end behavior of the generator through the algorithmic chain,
//! and PGM round-trip properties.

use bolide_core::assoc::{match_knn, KnnParams};
use bolide_core::ccl::{filter_hysteresis, filter_surface, label_and_analyze, SurfaceParams};
use bolide_core::imgproc::{binarize, GrayFrame};
use bolide_core::motion::{classify_motion, estimate_two_pass, MotionClass};
use bolide_core::seqio::{generate, read_pgm, write_pgm, SceneSpec};
use proptest::prelude::*;

/// One frame through the pixel front end.
fn detect_ccs(frame: &GrayFrame) -> Vec<bolide_core::ccl::CC> {
    let mask = binarize(frame, 55);
    let (_, ccs) = label_and_analyze(&mask, frame).unwrap();
    let bright = filter_hysteresis(&ccs, 80);
    filter_surface(&bright, &SurfaceParams::new(3, 1000).unwrap())
}

#[test]
fn zero_jitter_star_field_classifies_all_static() {
    let spec = SceneSpec {
        max_jitter_shift: 0.0,
        max_jitter_rot: 0.0,
        ..SceneSpec::basic(320, 240, 6, 99)
    };
    let (frames, _) = generate(&spec).unwrap();
    let mut moving_total = 0;
    for w in frames.windows(2) {
        let prev = detect_ccs(&w[0]);
        let cur = detect_ccs(&w[1]);
        assert!(prev.len() >= 40, "most of the 50 stars should be detected");
        let mut assocs = match_knn(&prev, &cur, &KnnParams::default());
        assert!(assocs.len() >= 40);
        estimate_two_pass(&mut assocs, &prev, &cur, 1.0).unwrap();
        moving_total += classify_motion(&assocs, 0.8)
            .iter()
            .filter(|c| **c == MotionClass::Moving)
            .count();
    }
    assert_eq!(moving_total, 0, "static stars must not classify as moving");
}

#[test]
fn jittered_star_field_still_classifies_all_static() {
    let spec = SceneSpec::basic(320, 240, 6, 4242); // 1.5 px jitter default
    let (frames, _) = generate(&spec).unwrap();
    for w in frames.windows(2) {
        let prev = detect_ccs(&w[0]);
        let cur = detect_ccs(&w[1]);
        let mut assocs = match_knn(&prev, &cur, &KnnParams::default());
        estimate_two_pass(&mut assocs, &prev, &cur, 1.0).unwrap();
        let moving = classify_motion(&assocs, 0.8)
            .iter()
            .filter(|c| **c == MotionClass::Moving)
            .count();
        assert_eq!(moving, 0, "registration must absorb camera jitter");
    }
}

#[test]
fn meteor_is_the_only_mover() {
    let mut spec = SceneSpec::basic(320, 240, 20, 7);
    spec.scatter_meteors(1).unwrap();
    let meteor = spec.meteors[0].clone();
    let (frames, _) = generate(&spec).unwrap();
    let mut seen_moving_frames = 0;
    for w in frames.windows(2) {
        let t = w[1].t;
        let prev = detect_ccs(&w[0]);
        let cur = detect_ccs(&w[1]);
        let mut assocs = match_knn(&prev, &cur, &KnnParams::default());
        if assocs.len() < 2 {
            continue;
        }
        estimate_two_pass(&mut assocs, &prev, &cur, 1.0).unwrap();
        let moving = classify_motion(&assocs, 0.8)
            .iter()
            .filter(|c| **c == MotionClass::Moving)
            .count();
        let live = t > meteor.t_start && t < meteor.t_start + meteor.duration;
        if live {
            assert_eq!(moving, 1, "exactly the meteor moves at t={t}");
            seen_moving_frames += 1;
        } else {
            assert_eq!(moving, 0, "nothing moves at t={t}");
        }
    }
    assert!(seen_moving_frames >= 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn pgm_round_trip(
        w in 2u32..48,
        h in 2u32..48,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
        let frame = GrayFrame::new(w, h, 0, data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prop.pgm");
        write_pgm(&frame, &path).unwrap();
        let back = read_pgm(&path).unwrap();
        prop_assert_eq!(back, frame);
    }
}
