use proptest::prelude::*;
use suu_core::schedule::raw_mass_between;
use suu_core::util::success_probability;
use suu_core::{concat, mass_at, ObliviousSchedule, ProblemInstance, Step};

fn instance(m: usize, n: usize) -> impl Strategy<Value = ProblemInstance> {
    proptest::collection::vec(proptest::collection::vec(0.01f64..=1.0, n), m)
        .prop_map(|p| ProblemInstance::independent(p).unwrap())
}

fn schedule(m: usize, n: usize, max_len: usize) -> impl Strategy<Value = ObliviousSchedule> {
    proptest::collection::vec(proptest::collection::vec(proptest::option::of(0..n), m), 1..=max_len)
        .prop_map(|steps| ObliviousSchedule::from_steps(steps.iter().map(|s| Step::from_dense(s))))
}

fn case() -> impl Strategy<Value = (ProblemInstance, ObliviousSchedule, ObliviousSchedule)> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(m, n)| (instance(m, n), schedule(m, n, 12), schedule(m, n, 12)))
}

proptest! {
    #[test]
    fn probability_bounds_small_sum(xs in proptest::collection::vec(0.0f64..=1.0, 1..10)) {
        let total: f64 = xs.iter().sum();
        let xs: Vec<f64> = if total > 1.0 { xs.iter().map(|x| x / total).collect() } else { xs };
        let sum: f64 = xs.iter().sum();
        let q = success_probability(xs.iter().copied());
        prop_assert!((-1f64).exp() * sum <= q + 1e-12);
        prop_assert!(q <= sum + 1e-12);
    }

    #[test]
    fn probability_upper_bound_any_sum(xs in proptest::collection::vec(0.0f64..=1.0, 1..20)) {
        let q = success_probability(xs.iter().copied());
        let direct = 1.0 - xs.iter().map(|x| 1.0 - x).product::<f64>();
        prop_assert!((q - direct).abs() <= 1e-12);
        prop_assert!(q <= xs.iter().sum::<f64>() + 1e-12);
    }

    #[test]
    fn mass_is_monotone((inst, a, _b) in case()) {
        let mut prev = vec![0.0; inst.n];
        for t in 1..=a.len() {
            let now = mass_at(&a, &inst, t).unwrap();
            for (j, &p) in prev.iter().enumerate() {
                prop_assert!(now.raw[j] + 1e-12 >= p);
                prop_assert!(now.capped[j] <= 1.0);
            }
            prev = now.raw;
        }
    }

    #[test]
    fn concat_keeps_mass((inst, a, b) in case()) {
        let c = concat(&a, &b);
        prop_assert_eq!(c.len(), a.len() + b.len());
        let base = mass_at(&a, &inst, a.len()).unwrap();
        for k in 1..=b.len() {
            let later = mass_at(&c, &inst, a.len() + k).unwrap();
            for j in 0..inst.n {
                prop_assert!(later.capped[j] + 1e-12 >= base.capped[j]);
            }
        }
        let tail = raw_mass_between(&c, &inst, a.len() + 1, c.len());
        let direct = raw_mass_between(&b, &inst, 1, b.len());
        for j in 0..inst.n {
            prop_assert!((tail[j] - direct[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn json_round_trip((inst, a, _b) in case()) {
        let back = ObliviousSchedule::from_json(&a.to_json()).unwrap();
        prop_assert_eq!(back.len(), a.len());
        for t in 1..=a.len() {
            prop_assert_eq!(back.step(t).unwrap(), a.step(t).unwrap());
        }
        prop_assert!(a.validate_for(&inst).is_ok());
    }
}

#[test]
fn mass_by_direct_summation() {
    let inst = ProblemInstance::independent(vec![vec![0.5, 0.25], vec![0.75, 0.125]]).unwrap();
    let s = ObliviousSchedule::from_steps([
        Step::from_pairs(vec![(0, 0), (1, 1)]).unwrap(),
        Step::from_pairs(vec![(0, 0), (1, 0)]).unwrap(),
        Step::idle(),
    ]);
    let m = mass_at(&s, &inst, 3).unwrap();
    assert!((m.raw[0] - 1.75).abs() < 1e-12);
    assert_eq!(m.capped[0], 1.0);
    assert!((m.raw[1] - 0.125).abs() < 1e-12);
    assert!(mass_at(&s, &inst, 4).is_err());
}
