//! Exhaustive pair-enumeration oracle for the matcher plus its
//! structural invariants.

use bolide_core::assoc::{match_knn, KnnParams};
use bolide_core::ccl::CC;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: &CC, b: &CC) -> f64 {
    ((a.cx - b.cx).powi(2) + (a.cy - b.cy).powi(2)).sqrt()
}

/// Oracle: rank-count mutual-kNN predicate over all pairs, distance
/// gate, then greedy selection in ascending (dist, prev, cur) order.
/// Structurally independent of the implementation's partial-sort
/// candidate sets.
fn oracle_match(prev: &[CC], cur: &[CC], k: usize, max_dist: f64) -> Vec<(u32, u32)> {
    let within_k = |d_ij: f64, j_label: u32, others: &[(f64, u32)]| {
        let closer = others
            .iter()
            .filter(|&&(d, l)| (d, l) < (d_ij, j_label))
            .count();
        closer < k
    };
    let mut cands = Vec::new();
    for (i, a) in prev.iter().enumerate() {
        for (j, b) in cur.iter().enumerate() {
            let d = dist(a, b);
            if d > max_dist {
                continue;
            }
            let fwd: Vec<(f64, u32)> = cur.iter().map(|c| (dist(a, c), c.label)).collect();
            let back: Vec<(f64, u32)> = prev.iter().map(|c| (dist(c, b), c.label)).collect();
            if within_k(d, b.label, &fwd) && within_k(d, a.label, &back) {
                cands.push((d, a.label, b.label, i, j));
            }
        }
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_prev = vec![false; prev.len()];
    let mut used_cur = vec![false; cur.len()];
    let mut out = Vec::new();
    for (_, pl, cl, i, j) in cands {
        if !used_prev[i] && !used_cur[j] {
            used_prev[i] = true;
            used_cur[j] = true;
            out.push((pl, cl));
        }
    }
    out.sort_by_key(|&(_, cl)| cl);
    out
}

fn random_ccs(rng: &mut ChaCha8Rng, n: usize, span: f64) -> Vec<CC> {
    (0..n)
        .map(|i| CC::point(i as u32 + 1, rng.gen_range(0.0..span), rng.gen_range(0.0..span)))
        .collect()
}

#[test]
fn matches_exhaustive_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA550C);
    for case in 0..300 {
        let n_prev = rng.gen_range(0..=30);
        let n_cur = rng.gen_range(0..=30);
        // Tight spans force heavy candidate contention.
        let span = if case % 3 == 0 { 40.0 } else { 200.0 };
        let prev = random_ccs(&mut rng, n_prev, span);
        let cur = random_ccs(&mut rng, n_cur, span);
        let k = rng.gen_range(1..=4);
        let max_dist = if case % 5 == 0 { f64::INFINITY } else { 60.0 };
        let got = match_knn(&prev, &cur, &KnnParams { k, max_dist });
        let want = oracle_match(&prev, &cur, k, max_dist);
        let got_pairs: Vec<(u32, u32)> = got.iter().map(|a| (a.prev_label, a.cur_label)).collect();
        assert_eq!(got_pairs, want, "case {case} k={k} max_dist={max_dist}");

        // Distance vector bookkeeping on the same output.
        for a in &got {
            assert!((a.dist - (a.dx * a.dx + a.dy * a.dy).sqrt()).abs() < 1e-9);
            assert!(a.dist <= max_dist);
        }
    }
}

proptest! {
    #[test]
    fn injective_both_sides(
        prev_pts in prop::collection::vec((0.0f64..300.0, 0.0f64..300.0), 0..40),
        cur_pts in prop::collection::vec((0.0f64..300.0, 0.0f64..300.0), 0..40),
        k in 1usize..5,
    ) {
        let mk = |pts: &[(f64, f64)]| -> Vec<CC> {
            pts.iter().enumerate().map(|(i, &(x, y))| CC::point(i as u32 + 1, x, y)).collect()
        };
        let m = match_knn(&mk(&prev_pts), &mk(&cur_pts), &KnnParams { k, max_dist: 80.0 });
        let mut prev_seen = std::collections::HashSet::new();
        let mut cur_seen = std::collections::HashSet::new();
        for a in &m {
            prop_assert!(prev_seen.insert(a.prev_label), "prev label repeated");
            prop_assert!(cur_seen.insert(a.cur_label), "cur label repeated");
        }
        // Output sorted by current label.
        prop_assert!(m.windows(2).all(|w| w[0].cur_label < w[1].cur_label));
    }

    #[test]
    fn translation_equivariance(
        pts in prop::collection::vec((0.0f64..200.0, 0.0f64..200.0), 1..25),
        shift in ((-40.0f64..40.0), (-40.0f64..40.0)),
    ) {
        let prev: Vec<CC> = pts.iter().enumerate()
            .map(|(i, &(x, y))| CC::point(i as u32 + 1, x, y)).collect();
        let cur: Vec<CC> = pts.iter().enumerate()
            .map(|(i, &(x, y))| CC::point(i as u32 + 1, x + 3.0, y - 2.0)).collect();
        let p = KnnParams { k: 3, max_dist: f64::INFINITY };
        let base = match_knn(&prev, &cur, &p);
        let moved: Vec<CC> = cur.iter()
            .map(|c| CC::point(c.label, c.cx + shift.0, c.cy + shift.1)).collect();
        let shifted = match_knn(&prev, &moved, &p);
        let pairs = |m: &[bolide_core::assoc::Association]| -> Vec<(u32, u32)> {
            m.iter().map(|a| (a.prev_label, a.cur_label)).collect()
        };
        // The invariant is conditional on the matching being unchanged.
        if pairs(&base) == pairs(&shifted) {
            for (a, b) in base.iter().zip(&shifted) {
                prop_assert!((b.dx - (a.dx + shift.0)).abs() < 1e-9);
                prop_assert!((b.dy - (a.dy + shift.1)).abs() < 1e-9);
            }
        }
    }
}

/// A matched pair strictly closer than every other pair sharing one of
/// its endpoints must survive when k or the distance gate grows.
#[test]
fn dominant_pairs_survive_larger_k_and_gate() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0);
    for _ in 0..200 {
        let n_prev = rng.gen_range(2..20);
        let n_cur = rng.gen_range(2..20);
        let prev = random_ccs(&mut rng, n_prev, 120.0);
        let cur = random_ccs(&mut rng, n_cur, 120.0);
        let k = rng.gen_range(1..=3);
        let gate = 50.0;
        let base = match_knn(&prev, &cur, &KnnParams { k, max_dist: gate });
        let dominant: Vec<(u32, u32)> = base
            .iter()
            .filter(|a| {
                let pi = prev.iter().find(|c| c.label == a.prev_label).unwrap();
                let cj = cur.iter().find(|c| c.label == a.cur_label).unwrap();
                prev.iter().all(|p| p.label == pi.label || dist(p, cj) > a.dist)
                    && cur.iter().all(|c| c.label == cj.label || dist(pi, c) > a.dist)
            })
            .map(|a| (a.prev_label, a.cur_label))
            .collect();
        for grown in [
            KnnParams { k: k + 1, max_dist: gate },
            KnnParams { k, max_dist: gate * 2.0 },
            KnnParams { k: k + 2, max_dist: f64::INFINITY },
        ] {
            let m = match_knn(&prev, &cur, &grown);
            for d in &dominant {
                assert!(
                    m.iter().any(|a| (a.prev_label, a.cur_label) == *d),
                    "dominant pair {d:?} lost under {grown:?}"
                );
            }
        }
    }
}
