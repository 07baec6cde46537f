//! The tandem-repeat detector against a brute-force oracle that filters the
//! full candidate space by the definition: occurrence, maximality,
//! primitivity, right-shift omission.

use patgen_core::eventlog::Trace;
use patgen_core::tandem::{
    detect_tandem_repeats, extend_trace, reduce_trace, TandemRepeat,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn occurrence(t: &Trace, s: usize, alpha: &Trace, k: usize) -> bool {
    let len = alpha.len();
    if len == 0 || s == 0 || s + k * len - 1 > t.len() {
        return false;
    }
    (0..k).all(|m| (1..=len).all(|j| t.at(s + m * len + j - 1) == alpha.at(j)))
}

/// Literal filter over all (start, length, repetitions) triples.
fn oracle(t: &Trace) -> Vec<TandemRepeat> {
    let n = t.len();
    let mut candidates = Vec::new();
    for s in 1..=n {
        for len in 1..=n / 2 {
            let alpha = if s + len - 1 <= n {
                t.slice(s, s + len - 1)
            } else {
                continue;
            };
            for k in 2..=n {
                if !occurrence(t, s, &alpha, k) {
                    continue;
                }
                // Maximal: neither one more copy on the left nor on the right.
                if occurrence(t, s, &alpha, k + 1) {
                    continue;
                }
                if s > len && occurrence(t, s - len, &alpha, k + 1) {
                    continue;
                }
                // Primitive: alpha must not be a square itself.
                let square = (1..len)
                    .filter(|p| len % p == 0)
                    .any(|p| (p + 1..=len).all(|i| alpha.at(i) == alpha.at(i - p)));
                if square {
                    continue;
                }
                // No right shift of any occurrence.
                let shifted = (1..len).any(|x| {
                    if s <= x {
                        return false;
                    }
                    let mut rot = alpha.slice(len - x + 1, len);
                    rot.extend_from(&alpha.slice(1, len - x));
                    occurrence(t, s - x, &rot, k)
                });
                if shifted {
                    continue;
                }
                candidates.push(TandemRepeat {
                    start: s,
                    repeat_type: alpha.clone(),
                    repetitions: k,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        let span = |r: &TandemRepeat| r.repeat_type.len() * r.repetitions;
        a.start
            .cmp(&b.start)
            .then(span(b).cmp(&span(a)))
            .then(a.repeat_type.cmp(&b.repeat_type))
    });
    candidates
}

fn random_trace(rng: &mut ChaCha8Rng, max_len: usize, alphabet: usize) -> Trace {
    let len = rng.gen_range(0..=max_len);
    let names = ["A", "B", "C", "D"];
    let labels: Vec<&str> = (0..len)
        .map(|_| names[rng.gen_range(0..alphabet)])
        .collect();
    Trace::from_names(&labels).unwrap()
}

#[test]
fn detector_matches_brute_force_on_500_random_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    for case in 0..500 {
        let alphabet = rng.gen_range(1..=4);
        let t = random_trace(&mut rng, 30, alphabet);
        let detected = detect_tandem_repeats(&t);
        let expected = oracle(&t);
        assert_eq!(detected, expected, "case {case}, trace {t}");
    }
}

#[test]
fn reduction_preserves_symbols_outside_repeats_and_repeat_types() {
    // The reduced trace keeps the non-repeat symbols and two copies of each
    // chosen repeat type, so its multiset of labels per repeat region is a
    // sub-multiset of the original.
    let mut rng = ChaCha8Rng::seed_from_u64(0xbeef);
    for _ in 0..200 {
        let t = random_trace(&mut rng, 24, 3);
        let reduced = reduce_trace(&t);
        assert!(reduced.len() <= t.len());
        fn counts(tr: &Trace) -> BTreeMap<&str, isize> {
            let mut m = BTreeMap::new();
            for l in tr.iter() {
                *m.entry(l.as_str()).or_insert(0) += 1;
            }
            m
        }
        // Every label of the reduced trace came from the original.
        for (label, c) in counts(&reduced) {
            assert!(counts(&t).get(label).copied().unwrap_or(0) >= c);
        }
        // A trace without repeats reduces to itself.
        if detect_tandem_repeats(&t).is_empty() {
            assert_eq!(reduced, t);
        }
    }
}

#[test]
fn reduce_is_idempotent_on_running_example_reductions() {
    for names in [
        vec!["X", "X", "X", "X", "A", "A", "A", "A", "B", "C"],
        vec!["X", "X", "A", "X", "X", "A", "X", "B", "C"],
        vec!["X", "A", "X", "A", "X", "A", "C", "B"],
    ] {
        let t = Trace::from_names(&names).unwrap();
        let once = reduce_trace(&t);
        assert_eq!(reduce_trace(&once), once);
    }
}

#[test]
fn extension_pumps_every_chosen_repeat_to_reduced_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xabcd);
    let mut pumped_cases = 0;
    for _ in 0..300 {
        let t = random_trace(&mut rng, 20, 3);
        let rt = reduce_trace(&t);
        if rt.len() < 2 {
            continue;
        }
        let et = extend_trace(&rt);
        // Walk the chosen repeats of the extended trace: each must now have
        // |rt| repetitions (when the reduced trace is longer than two
        // symbols the pump is real).
        for repeat in patgen_core::tandem::chosen_repeats(&et) {
            if detect_tandem_repeats(&rt)
                .iter()
                .any(|r| r.repeat_type == repeat.repeat_type)
            {
                assert_eq!(repeat.repetitions, rt.len(), "in {et}");
                pumped_cases += 1;
            }
        }
    }
    assert!(pumped_cases > 50, "generator produced too few repeats");
}
