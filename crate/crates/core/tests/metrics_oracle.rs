use proptest::prelude::*;
use seamgrasp::geometry::Point;
use seamgrasp::metrics::{aggregate, iou, mean_ci95, ncov, AggregateOptions, CoverageMask, EpisodeMetrics, StepMetrics};
use seamgrasp::sim::CanonicalGarment;

fn counts(a: &CoverageMask, b: &CoverageMask) -> (u64, u64, u64) {
    let (mut na, mut inter, mut union) = (0, 0, 0);
    for y in 0..a.height() {
        for x in 0..a.width() {
            let (p, q) = (a.get(x, y), b.get(x, y));
            na += u64::from(p);
            inter += u64::from(p && q);
            union += u64::from(p || q);
        }
    }
    (na, inter, union)
}

fn random_mask() -> impl Strategy<Value = CoverageMask> {
    (prop::collection::vec(any::<bool>(), 97 * 61), 0.0..1.0f64).prop_map(|(bits, density)| {
        let mut m = CoverageMask::new(97, 61);
        for (i, b) in bits.into_iter().enumerate() {
            // Skew density so near-empty and near-full masks also occur.
            if b && (i as f64 * 0.618_033_988_7).fract() < density {
                m.set((i % 97) as u32, (i / 97) as u32, true);
            }
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ratios_match_pixel_counts(a in random_mask(), b in random_mask()) {
        let (na, inter, union) = counts(&a, &b);
        prop_assert_eq!(a.count(), na);
        let expected_iou = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
        prop_assert_eq!(iou(&a, &b).unwrap(), expected_iou);
        prop_assert_eq!(ncov(&a, 97 * 61).unwrap(), na as f64 / (97.0 * 61.0));
    }
}

#[test]
fn goal_shifted_by_half_its_width() {
    let g = CanonicalGarment::tshirt();
    let goal = g.goal_mask();
    let (xmin, xmax) = g.outline.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
    let dx = ((xmax - xmin) / 2.0).round();
    let shifted: Vec<Point> = g.outline.iter().map(|p| Point::new(p.x + dx, p.y)).collect();
    let m = CoverageMask::from_polygons(g.width, g.height, [shifted.as_slice()]);
    let (_, inter, union) = counts(&m, goal);
    let v = iou(&m, goal).unwrap();
    assert_eq!(v, inter as f64 / union as f64);
    assert!(v > 0.1 && v < 0.6, "{v}");
    assert_eq!(ncov(goal, g.cov_max()).unwrap(), 1.0);
}

#[test]
fn aggregate_matches_two_pass_statistics() {
    // Welford as the independent routine.
    let vals: Vec<f64> = (0..20).map(|i| ((i * 37 % 20) as f64) / 20.0).collect();
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, v) in vals.iter().enumerate() {
        let d = v - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (v - mean);
    }
    let sd = (m2 / 19.0).sqrt();
    let trials: Vec<EpisodeMetrics> = vals
        .iter()
        .enumerate()
        .map(|(i, &v)| EpisodeMetrics {
            trial_id: i as u64,
            initial_ncov: None,
            per_step: vec![StepMetrics {
                ncov: v,
                iou: 1.0 - v,
                excluded: false,
            }],
        })
        .collect();
    let row = &aggregate(&trials, &AggregateOptions::default()).unwrap()[0];
    assert!((row.mean_ncov - mean).abs() < 1e-12);
    assert!((row.ci95_ncov - 1.96 * sd / 20f64.sqrt()).abs() < 1e-12);
    assert!((row.mean_iou - (1.0 - mean)).abs() < 1e-12);
    assert_eq!(mean_ci95(&[0.7; 20]).1, 0.0);
}
