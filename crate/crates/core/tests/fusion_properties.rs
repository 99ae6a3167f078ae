use proptest::prelude::*;
use seamgrasp::fusion::{merge, CrossingDetection, CrossingType, DetectionSource, FusionConfig};

fn detection(source: DetectionSource) -> impl Strategy<Value = CrossingDetection> {
    // Coarse grids so that coincident points and confidence ties show up.
    (1u8..=3, 0u32..40, 0u32..40, 0u32..=10).prop_map(move |(c, x, y, conf)| CrossingDetection {
        c: CrossingType::try_from(c).unwrap(),
        x: f64::from(x * 8),
        y: f64::from(y * 8),
        confidence: f64::from(conf) / 10.0,
        source,
    })
}

fn lists() -> impl Strategy<Value = (Vec<CrossingDetection>, Vec<CrossingDetection>)> {
    (
        prop::collection::vec(detection(DetectionSource::Scd1), 0..10),
        prop::collection::vec(detection(DetectionSource::Scd2), 0..10),
    )
}

fn config() -> impl Strategy<Value = FusionConfig> {
    (1usize..4, 1usize..4, 1usize..4, prop::sample::select(vec![0.0, 8.0, 20.0, 45.0])).prop_map(
        |(a, b, c, r)| FusionConfig {
            max_per_type: [a, b, c],
            dedup_radius: r,
        },
    )
}

fn dist(a: &CrossingDetection, b: &CrossingDetection) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Lehmer-code permutation of `v` from `seed`.
fn permuted<T: Clone>(v: &[T], mut seed: u64) -> Vec<T> {
    let mut pool = v.to_vec();
    let mut out = Vec::with_capacity(v.len());
    while !pool.is_empty() {
        let i = (seed % pool.len() as u64) as usize;
        seed /= pool.len() as u64;
        out.push(pool.remove(i));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn output_respects_caps_radius_and_sources((a, b) in lists(), cfg in config()) {
        let out = merge(&a, &b, &cfg);
        for t in CrossingType::ALL {
            prop_assert!(out.iter().filter(|d| d.c == t).count() <= cfg.cap(t));
        }
        for (i, d) in out.iter().enumerate() {
            for e in &out[i + 1..] {
                prop_assert!(d.c != e.c || dist(d, e) > cfg.dedup_radius);
            }
            prop_assert!(a.contains(d) || b.contains(d), "synthesised {:?}", d);
        }
    }

    #[test]
    fn merging_the_output_again_changes_nothing((a, b) in lists(), cfg in config()) {
        let out = merge(&a, &b, &cfg);
        prop_assert_eq!(merge(&out, &[], &cfg), out.clone());
        prop_assert_eq!(merge(&[], &out, &cfg), out);
    }

    #[test]
    fn swapping_sources_gives_the_same_set((a, b) in lists(), cfg in config()) {
        prop_assert_eq!(merge(&a, &b, &cfg), merge(&b, &a, &cfg));
    }

    #[test]
    fn input_order_is_irrelevant((a, b) in lists(), cfg in config(), s1 in any::<u64>(), s2 in any::<u64>(), split in 0usize..20) {
        let reference = merge(&a, &b, &cfg);
        // Reshuffle everything and redistribute between the two argument lists.
        let all: Vec<_> = a.iter().chain(&b).copied().collect();
        let shuffled = permuted(&all, s1);
        let cut = split.min(shuffled.len());
        let (x, y) = shuffled.split_at(cut);
        prop_assert_eq!(merge(&permuted(x, s2), y, &cfg), reference);
    }

    /// Every detection missing from the output is either within the radius
    /// of a kept detection of its type that ranks at least as high, or its
    /// type's cap is full of higher ranked detections.
    #[test]
    fn every_rejection_is_justified((a, b) in lists(), cfg in config()) {
        let out = merge(&a, &b, &cfg);
        for d in a.iter().chain(&b) {
            if out.contains(d) {
                continue;
            }
            let near = out.iter().any(|k| k.c == d.c && dist(k, d) <= cfg.dedup_radius && k.confidence >= d.confidence);
            let full = out.iter().filter(|k| k.c == d.c && k.confidence >= d.confidence).count() >= cfg.cap(d.c);
            prop_assert!(near || full, "{:?} dropped without cause from {:?}", d, out);
        }
    }
}

#[test]
fn exhaustive_orderings_agree() {
    let mk = |c: CrossingType, x: f64, conf: f64, source| CrossingDetection {
        c,
        x,
        y: 100.0,
        confidence: conf,
        source,
    };
    use CrossingType::*;
    use DetectionSource::*;
    let dets = [
        mk(Shoulder, 108.0, 0.9, Scd1),
        mk(Shoulder, 110.0, 0.9, Scd2),
        mk(Shoulder, 125.0, 0.95, Scd1),
        mk(Shoulder, 400.0, 0.5, Scd2),
        mk(Shoulder, 700.0, 0.6, Scd1),
        mk(NeckPoint, 110.0, 0.9, Scd2),
    ];
    let cfg = FusionConfig::default();
    let reference = merge(&dets, &[], &cfg);
    // 720 permutations, each cut at every position.
    for seed in 0..720u64 {
        let p = permuted(&dets, seed);
        for cut in 0..=p.len() {
            let (x, y) = p.split_at(cut);
            assert_eq!(merge(x, y, &cfg), reference);
        }
    }
    let xs: Vec<f64> = reference.iter().map(|d| d.x).collect();
    assert_eq!(xs, vec![125.0, 700.0, 110.0]);
}
