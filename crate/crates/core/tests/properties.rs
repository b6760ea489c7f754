use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use vcausal_core::behavior::Behavior;
use vcausal_core::certifier::local_decomposition_2222;
use vcausal_core::ch::{ch_facets, ch_value};
use vcausal_core::inequality::InequalityS;
use vcausal_core::linalg::ComplexMatrix;
use vcausal_core::prob::rat;
use vcausal_core::quantum::{Observable, QuantumModel, StateVector};
use vcausal_core::spacetime::{boost, interval, speed_bound, v_connected, Event, FrameBoost, C};
use vcausal_core::vcausal::VCausalModel;

fn random_behavior(weights: &[u32]) -> Behavior<BigRational> {
    // 16 blocks of 16 outcomes, each block normalized
    Behavior::from_fn(vec![2; 4], vec![2; 4], |xs, os| {
        let s = xs.iter().fold(0, |a, x| 2 * a + x);
        let o = os.iter().fold(0, |a, x| 2 * a + x);
        let block = &weights[16 * s..16 * s + 16];
        let total: u32 = block.iter().sum();
        rat(block[o] as i64, total as i64)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn s_is_linear_under_mixing(
        w1 in prop::collection::vec(1u32..20, 256),
        w2 in prop::collection::vec(1u32..20, 256),
        t in 0i64..=8,
    ) {
        let s = InequalityS::four_party();
        let (b1, b2) = (random_behavior(&w1), random_behavior(&w2));
        let weight = rat(t, 8);
        let mixed = b1.mix(&b2, &weight).unwrap();
        let at = [0; 4];
        let lhs = s.evaluate_at(&mixed, &at).unwrap();
        let rhs = &weight * s.evaluate_at(&b1, &at).unwrap()
            + (rat(1, 1) - &weight) * s.evaluate_at(&b2, &at).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn ch_is_linear(
        w1 in prop::collection::vec(1u32..20, 16),
        w2 in prop::collection::vec(1u32..20, 16),
        t in 0i64..=6,
    ) {
        let two = |w: &[u32]| Behavior::from_fn(vec![2, 2], vec![2, 2], |xs, os| {
            let block = &w[4 * (2 * xs[0] + xs[1])..][..4];
            rat(block[2 * os[0] + os[1]] as i64, block.iter().sum::<u32>() as i64)
        }).unwrap();
        let (b1, b2) = (two(&w1), two(&w2));
        let weight = rat(t, 6);
        let mixed = b1.mix(&b2, &weight).unwrap();
        for f in ch_facets() {
            let lhs = ch_value(&mixed, f.id).unwrap();
            let rhs = &weight * ch_value(&b1, f.id).unwrap()
                + (rat(1, 1) - &weight) * ch_value(&b2, f.id).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn operator_and_behavior_paths_agree(
        angles in prop::collection::vec((0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU), 8),
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
    ) {
        let norm: f64 = amps.iter().map(|(re, im)| re * re + im * im).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let state = StateVector::new(amps.iter().map(|&(re, im)| Complex64::new(re / norm, im / norm)).collect()).unwrap();
        // n·σ for a unit vector n is a Hermitian involution
        let obs: Vec<Vec<Observable>> = angles.chunks(2).map(|pair| {
            pair.iter().map(|&(th, ph)| {
                let m = &(&ComplexMatrix::sigma_x().scale_real(th.sin() * ph.cos())
                    + &ComplexMatrix::sigma_y().scale_real(th.sin() * ph.sin()))
                    + &ComplexMatrix::sigma_z().scale_real(th.cos());
                Observable::new(m).unwrap()
            }).collect()
        }).collect();
        let q = QuantumModel::new(state, obs).unwrap();
        let s = InequalityS::four_party();
        let op = s.evaluate_quantum(&q).unwrap();
        let beh = s.evaluate(&q.behavior(), &1e-9).unwrap();
        prop_assert!((op - beh).abs() < 1e-10, "{} vs {}", op, beh);
    }

    #[test]
    fn v_cone_is_monotone_in_v(
        dt in -2.0f64..2.0,
        r in prop::array::uniform3(-1e9f64..1e9),
        k1 in 1.0001f64..50.0,
        extra in 0.0f64..50.0,
    ) {
        let e1 = Event::new("1", 0.0, &[0.0]);
        let e2 = Event::new("2", dt, &r);
        let (v1, v2) = (k1 * C, (k1 + extra) * C);
        if v_connected(&e1, &e2, v1) {
            prop_assert!(v_connected(&e1, &e2, v2));
        }
    }

    #[test]
    fn boost_preserves_interval_and_round_trips(
        t in prop::array::uniform2(-1e-3f64..1e-3),
        r1 in prop::array::uniform3(-1e5f64..1e5),
        r2 in prop::array::uniform3(-1e5f64..1e5),
        beta in prop::array::uniform3(-0.5f64..0.5),
    ) {
        let f = FrameBoost::new(beta.map(|b| b * C)).unwrap();
        let e1 = Event::new("1", t[0], &r1);
        let e2 = Event::new("2", t[1], &r2);
        let (b1, b2) = (boost(&e1, &f), boost(&e2, &f));
        let (i0, i1) = (interval(&e1, &e2), interval(&b1, &b2));
        let dr2: f64 = (0..3).map(|k| (r1[k] - r2[k]).powi(2)).sum();
        let scale = C * C * (t[0] - t[1]).powi(2) + dr2;
        prop_assert!((i0 - i1).abs() <= 1e-9 * scale);
        let back = boost(&b1, &f.inverse());
        // errors relative to the event's own extent in time and space units
        let extent = e1.t.abs() * C + r1.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((back.t - e1.t).abs() * C <= 1e-9 * extent);
        for k in 0..3 {
            prop_assert!((back.r[k] - e1.r[k]).abs() <= 1e-9 * extent);
        }
    }

    #[test]
    fn speed_bound_decreases_with_sync_uncertainty(
        d in 1.0f64..1e6,
        t in -1e-6f64..1e-6,
        s1 in 1e-12f64..1e-6,
        extra in 0.0f64..1e-6,
        beta in prop::array::uniform3(-1e-3f64..1e-3),
    ) {
        let f = FrameBoost::new(beta.map(|b| b * C)).unwrap();
        let e1 = Event::new("1", 0.0, &[0.0]);
        let e2 = Event::new("2", t, &[d]);
        let a = speed_bound(&e1, &e2, s1, &f).unwrap();
        let b = speed_bound(&e1, &e2, s1 + extra, &f).unwrap();
        prop_assert!(b <= a);
    }

    #[test]
    fn models_without_influence_have_local_pairs(
        weights in prop::collection::vec(1u32..10, 1..4),
        resp in prop::collection::vec(0u32..=8, 48),
    ) {
        let total: u32 = weights.iter().sum();
        let rho: Vec<f64> = weights.iter().map(|&w| w as f64 / total as f64).collect();
        let lambdas = rho.len();
        let m = VCausalModel::from_fn(vec![2; 3], vec![2; 3], rho, vec![], |party, lambda, x, _| {
            let k = resp[(party * 4 + lambda) * 2 + x] as f64 / 8.0;
            vec![k, 1.0 - k]
        }).unwrap();
        prop_assert_eq!(m.lambda_weights.len(), lambdas);
        let b = m.behavior().unwrap();
        b.validate(&1e-12).unwrap();
        prop_assert!(b.is_no_signalling(&1e-12));
        for pair in [[0, 1], [0, 2], [1, 2]] {
            let two = b.marginal(&pair).unwrap().restrict(&[0, 0, 0]).to_rational();
            // snap float products back onto the exact 1/(64·total) grid
            let snapped = two.map(|p| {
                let scaled = p * rat(8 * 8 * total as i64, 1);
                scaled.round() / rat(8 * 8 * total as i64, 1)
            });
            prop_assert!(local_decomposition_2222(&snapped).unwrap().is_feasible());
        }
    }
}

#[test]
fn ch_extremes() {
    let uniform: Behavior<BigRational> = Behavior::uniform(vec![2, 2], vec![2, 2]);
    assert_eq!(ch_value(&uniform, 0).unwrap(), rat(-1, 2));
    assert!(ch_facets().iter().all(|f| ch_value(&uniform, f.id).unwrap() == rat(-1, 2)));
    let pr = Behavior::from_fn(vec![2, 2], vec![2, 2], |xs, os| {
        if (os[0] ^ os[1]) == (xs[0] & xs[1]) {
            rat(1, 2)
        } else {
            BigRational::zero()
        }
    })
    .unwrap();
    let values: Vec<BigRational> = ch_facets().iter().map(|f| ch_value(&pr, f.id).unwrap()).collect();
    assert_eq!(values.iter().max().unwrap(), &rat(1, 2));
}
