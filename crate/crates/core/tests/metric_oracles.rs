use wfa_core::metric::{distance, seminorm_interval, truncated_seminorm};
use wfa_core::random::{random_umdp, random_wfa, rng};
use wfa_core::wfa::words_up_to;
use wfa_core::{Matrix, SearchOptions, Umdp, Vector};

#[test]
fn reduced_and_raw_searches_overlap() {
    let mut r = rng(101);
    let raw = SearchOptions {
        reduce: false,
        eps: 1e-5,
        ..Default::default()
    };
    for _ in 0..8 {
        let a = random_wfa(&mut r, 2, 2, 0.5);
        let b = random_wfa(&mut r, 2, 2, 0.5);
        let reduced = distance(&a, &b, 0.5, &SearchOptions::default()).unwrap();
        let full = distance(&a, &b, 0.5, &raw).unwrap();
        assert!(reduced.lower <= full.upper + 1e-9 && full.lower <= reduced.upper + 1e-9);
    }
}

#[test]
fn interval_brackets_exhaustive_truncations() {
    let mut r = rng(102);
    for _ in 0..5 {
        let a = random_wfa(&mut r, 2, 3, 0.8);
        let iv = seminorm_interval(&a, a.alpha(), 0.6, &SearchOptions::default()).unwrap();
        for depth in [0, 4, 10] {
            let t = truncated_seminorm(&a, a.alpha(), 0.6, depth).unwrap();
            assert!(t <= iv.upper + 1e-12, "depth {depth}: {t} > {}", iv.upper);
        }
        // the tail after depth 12 is at most ||beta|| ||alpha|| sum_{j>12} (0.6*0.8)^j
        let t12 = truncated_seminorm(&a, a.alpha(), 0.6, 12).unwrap();
        let tail = a.beta().norm() * a.alpha().norm() * 0.48f64.powi(13) / 0.52;
        assert!(iv.lower <= t12 + tail + 1e-12);
    }
}

fn dominated_umdp() -> Umdp {
    // action `a` moves everything to the rewarding state, `b` away from it
    Umdp::new(
        vec!["a".into(), "b".into()],
        Vector::from_vec(vec![0.5, 0.5]),
        Vector::from_vec(vec![0.0, 1.0]),
        vec![
            Matrix::from_row_slice(2, 2, &[0.1, 0.9, 0.0, 1.0]),
            Matrix::from_row_slice(2, 2, &[0.9, 0.1, 0.5, 0.5]),
        ],
        0.8,
    )
    .unwrap()
}

#[test]
fn dominating_action_is_the_witness() {
    let u = dominated_umdp();
    // exhaustive depth-10 oracle
    let (best, arg) = words_up_to(2, 10)
        .into_iter()
        .filter(|x| x.len() == 10)
        .map(|x| (u.value_truncated(&x, 10).unwrap(), x))
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, c| {
            if c.0 > acc.0 {
                c
            } else {
                acc
            }
        });
    assert!(arg.iter().all(|&s| s == 0));
    let iv = u.sup_value_interval(&SearchOptions::default()).unwrap();
    assert!(iv.lower >= best - 1e-12);
    assert!(!iv.witness_prefix.is_empty());
    assert!(
        iv.witness_prefix.iter().all(|s| s == "a"),
        "{:?}",
        iv.witness_prefix
    );
}

#[test]
fn zero_rewards_give_zero_interval() {
    let u = Umdp::new(
        vec!["a".into()],
        Vector::from_vec(vec![1.0, 0.0]),
        Vector::zeros(2),
        vec![Matrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5])],
        0.9,
    )
    .unwrap();
    let iv = u.sup_value_interval(&SearchOptions::default()).unwrap();
    assert_eq!((iv.lower, iv.upper), (0.0, 0.0));
}

#[test]
fn more_reward_never_lowers_the_lower_bound() {
    let mut r = rng(103);
    for _ in 0..5 {
        let u = random_umdp(&mut r, 2, 3, 0.7);
        let richer = Umdp::new(
            u.actions().to_vec(),
            u.alpha().clone(),
            u.beta().map(|x| x + 0.1),
            u.trans().to_vec(),
            u.gamma(),
        )
        .unwrap();
        let opts = SearchOptions::default();
        let base = u.sup_value_interval(&opts).unwrap();
        let more = richer.sup_value_interval(&opts).unwrap();
        assert!(more.lower >= base.lower - 1e-12);
    }
}
