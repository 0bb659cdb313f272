use fairalloc::policies::{make_schedule, threshold_policy};
use fairalloc::solvers::StaticPolicy;
use proptest::prelude::*;

/// `T − ⌊exp(1.05^{50−k})⌋` for k = 1..=50 at T = 65536, evaluated with
/// 50-digit arithmetic.
const LONG_RAW: [usize; 50] = [
    10192, 32635, 45487, 53027, 57554, 60333, 62074, 63188, 63914, 64395, 64720, 64943, 65099,
    65209, 65288, 65345, 65388, 65419, 65443, 65461, 65475, 65486, 65495, 65501, 65507, 65511,
    65515, 65518, 65520, 65522, 65524, 65525, 65527, 65528, 65529, 65529, 65530, 65530, 65531,
    65531, 65532, 65532, 65532, 65533, 65533, 65533, 65533, 65533, 65534, 65534,
];

#[test]
fn long_horizon_matches_high_precision_reference() {
    // ln ln 65536 / ln 1.05 = 49.3148 in high precision, so K = 50
    let s = make_schedule(65536, 1.05, 2).unwrap();
    assert_eq!(s.k, 50);
    let mut expected = vec![0];
    expected.extend(LONG_RAW);
    expected.dedup();
    assert_eq!(s.epochs, expected);
    assert_eq!(s.epochs.len(), 41);
}

#[test]
fn merged_epochs_keep_the_later_threshold() {
    let s = make_schedule(65536, 1.05, 2).unwrap();
    // raw epochs 35 and 36 coincide at 65529; the survivor uses γ_36
    let i = s.epochs.iter().position(|&t| t == 65529).unwrap();
    let gamma_36 = (65536.0 - 65530.0) / (8.0 * (65536.0 - 65529.0));
    assert_eq!(s.thresholds[i], gamma_36);
}

#[test]
fn first_threshold_uses_the_first_epoch() {
    let s = make_schedule(65536, 1.05, 2).unwrap();
    assert_eq!(s.thresholds[0], (65536.0 - 10192.0) / (8.0 * 65536.0));
}

proptest! {
    #[test]
    fn schedule_invariants(t in 1usize..2_000_000, eta in 1.001f64..1.333, n in 1usize..8) {
        let s = make_schedule(t, eta, n).unwrap();
        prop_assert_eq!(s.epochs[0], 0);
        prop_assert!(s.epochs.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.epochs.len() <= s.k + 1);
        prop_assert_eq!(s.epochs.len(), s.thresholds.len());
        let cap = 1.0 / (2.0 * (n * n) as f64);
        prop_assert!(s.thresholds.iter().all(|&g| (0.0..cap).contains(&g)));
        prop_assert_eq!(*s.thresholds.last().unwrap(), 0.0);
        if t >= 4 {
            prop_assert_eq!(*s.epochs.last().unwrap(), t - 2);
            prop_assert!((s.k as f64) >= (t as f64).ln().ln() / eta.ln());
        }
    }

    #[test]
    fn thresholded_rows_stay_feasible(
        raw in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 1..6),
        frac in 0.0f64..1.0,
    ) {
        let rows: Vec<Vec<f64>> = raw
            .into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                if s == 0.0 { vec![0.25; 4] } else { r.iter().map(|x| x / s).collect() }
            })
            .collect();
        let xi = StaticPolicy::new(rows).unwrap();
        let gamma = frac * 0.25 * 0.999;
        let out = threshold_policy(&xi, gamma).unwrap();
        for (before, after) in xi.rows().zip(out.rows()) {
            prop_assert!((after.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(after.iter().all(|&x| x == 0.0 || x >= gamma));
            // the largest share only grows; survivors are untouched
            let top = (0..4).fold(0, |b, i| if before[i] > before[b] { i } else { b });
            prop_assert!(after[top] >= before[top] - 1e-15);
            for i in (0..4).filter(|&i| i != top) {
                prop_assert!(after[i] == before[i] || after[i] == 0.0);
            }
        }
    }
}
