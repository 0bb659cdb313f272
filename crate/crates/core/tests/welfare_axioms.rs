use fairalloc::welfare::WelfareParam;
use proptest::prelude::*;

const QS: [f64; 7] = [f64::NEG_INFINITY, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0];

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0)
}

fn at_least(a: f64, b: f64) -> bool {
    a >= b - 1e-10 * a.abs().max(b.abs()).max(1.0)
}

fn utilities() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..100.0, 2..7)
}

proptest! {
    #[test]
    fn monotone(b in utilities(), bumps in prop::collection::vec(0.0f64..10.0, 7), qi in 0usize..7) {
        let w = WelfareParam::new(QS[qi]).unwrap();
        let higher: Vec<f64> = b.iter().zip(&bumps).map(|(x, d)| x + d).collect();
        prop_assert!(at_least(w.value(&higher), w.value(&b)));
    }

    #[test]
    fn symmetric(b in utilities(), shift in 0usize..7, qi in 0usize..7) {
        let w = WelfareParam::new(QS[qi]).unwrap();
        let mut rotated = b.clone();
        rotated.rotate_left(shift % b.len());
        rotated.reverse();
        prop_assert!(close(w.value(&rotated), w.value(&b)));
    }

    #[test]
    fn homogeneous(b in utilities(), c in 0.001f64..1000.0, qi in 0usize..7) {
        let w = WelfareParam::new(QS[qi]).unwrap();
        let scaled: Vec<f64> = b.iter().map(|x| c * x).collect();
        prop_assert!(close(w.value(&scaled), c * w.value(&b)));
    }

    #[test]
    fn pigou_dalton(b in utilities(), frac in 0.0f64..0.5, qi in 0usize..7) {
        // move part of the gap from the richest to the poorest agent
        let w = WelfareParam::new(QS[qi]).unwrap();
        let (lo, hi) = (0..b.len()).fold((0, 0), |(lo, hi), i| {
            (if b[i] < b[lo] { i } else { lo }, if b[i] > b[hi] { i } else { hi })
        });
        let mut fairer = b.clone();
        let d = frac * (b[hi] - b[lo]);
        fairer[lo] += d;
        fairer[hi] -= d;
        prop_assert!(at_least(w.value(&fairer), w.value(&b)));
    }

    #[test]
    fn increasing_in_q(b in utilities(), qa in -5.0f64..1.0, qb in -5.0f64..1.0) {
        let (lo, hi) = if qa < qb { (qa, qb) } else { (qb, qa) };
        let wl = WelfareParam::new(lo).unwrap().value(&b);
        let wh = WelfareParam::new(hi).unwrap().value(&b);
        prop_assert!(at_least(wh, wl));
        prop_assert!(at_least(wl, WelfareParam::Egalitarian.value(&b)));
    }

    #[test]
    fn zero_component_conventions(b in utilities(), qi in 0usize..7) {
        let q = QS[qi];
        let mut z = b.clone();
        z[0] = 0.0;
        let v = WelfareParam::new(q).unwrap().value(&z);
        if q <= 0.0 {
            prop_assert_eq!(v, 0.0);
        } else {
            prop_assert!(v > 0.0);
        }
    }
}
