use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qdyn::transfer::{
    self, build, equilibrium_subgradient, invariance_witness, lambda, property_suite, spectral_potential, theorem4_check,
    xi_upper, FiniteSystem, InvarianceVerdict, MeasureVector, TransferOp,
};

fn operator() -> impl Strategy<Value = TransferOp<f64>> {
    (1usize..=12).prop_flat_map(|n| {
        (proptest::collection::vec(0..n, n), proptest::collection::vec(-1.0f64..1.0, n))
            .prop_map(|(map, c)| build(&FiniteSystem::new(map).unwrap(), &c).unwrap())
    })
}

fn with_functions() -> impl Strategy<Value = (TransferOp<f64>, Vec<f64>, Vec<f64>)> {
    operator().prop_flat_map(|op| {
        let n = op.len();
        (Just(op), proptest::collection::vec(-1.0f64..1.0, n), proptest::collection::vec(-1.0f64..1.0, n))
    })
}

/// Systems whose functional graph has exactly one cycle `0 -> 1 -> .. -> m-1 -> 0`;
/// every other state maps to a smaller one.
fn single_cycle() -> impl Strategy<Value = (Vec<usize>, Vec<f64>)> {
    (1usize..=6, 0usize..=6).prop_flat_map(|(m, extra)| {
        let trees: Vec<BoxedStrategy<usize>> = (m..m + extra).map(|x| (0..x).boxed()).collect();
        (trees, proptest::collection::vec(-1.0f64..1.0, m + extra)).prop_map(move |(tails, c)| {
            let mut map: Vec<usize> = (0..m).map(|x| (x + 1) % m).collect();
            map.extend(tails);
            (map, c)
        })
    })
}

/// `(1/n) ln |M^n 1|` by dense matrix-vector products.
fn brute_lambda(op: &TransferOp<f64>, a: &[f64], n: usize) -> f64 {
    let m = op.weight(a).unwrap().matrix();
    let mut v = vec![1.0; op.len()];
    let mut log = 0.0;
    for _ in 0..n {
        v = m.iter().map(|row| row.iter().zip(&v).map(|(x, y)| x * y).sum()).collect();
        let s = v.iter().cloned().fold(0.0, f64::max);
        v.iter_mut().for_each(|x| *x /= s);
        log += s.ln();
    }
    log / n as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn module_identity_and_positivity((op, f, g) in with_functions()) {
        let ft = op.system().compose(&f);
        let lhs = op.apply(&g.iter().zip(&ft).map(|(x, y)| x * y).collect::<Vec<_>>());
        let ag = op.apply(&g);
        let scale = ag.iter().map(|x| x.abs()).fold(1.0, f64::max) * 4.0;
        for x in 0..op.len() {
            prop_assert!((lhs[x] - f[x] * ag[x]).abs() <= 1e-14 * scale);
        }
        let m = op.matrix();
        for y in 0..op.len() {
            for x in 0..op.len() {
                prop_assert!(m[x][y] >= 0.0);
                prop_assert_eq!(m[x][y] != 0.0, op.system().apply(y) == x);
            }
        }
    }

    #[test]
    fn potential_matches_cycle_means((op, a, _b) in with_functions()) {
        let v = spectral_potential(&op, &a, 1e-13, 100_000).unwrap();
        prop_assert!(v.converged);
        let oracle = op.weight(&a).unwrap().log_spectral_radius_from_cycles();
        prop_assert!((v.value - oracle).abs() <= 1e-12, "{} vs {}", v.value, oracle);
        prop_assert!((brute_lambda(&op, &a, 3000) - oracle).abs() <= 0.01);
    }

    #[test]
    fn seven_properties(op in operator(), seed in any::<u64>()) {
        let report = property_suite(&op, 5, 1e-6, seed).unwrap();
        prop_assert!(report.all_passed(), "{:?}", report);
        prop_assert_eq!(report.checks.len(), 7);
    }

    #[test]
    fn birkhoff_identity((op, a, f) in with_functions(), n in 0usize..=20) {
        prop_assert!(transfer::birkhoff_identity_check(&op, &a, &f, n).unwrap().passed);
    }

    #[test]
    fn subgradients_are_invariant_probabilities((op, a, _b) in with_functions()) {
        let h = 1e-4;
        let eq = equilibrium_subgradient(&op, &a, h).unwrap();
        let w = eq.measure.weights();
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(eq.invariant && eq.invariance_defect <= 10.0 * h);
        prop_assert!(MeasureVector::new(w.to_vec()).is_ok());
    }

    #[test]
    fn theorem4_on_single_cycles((map, c) in single_cycle(), seed in any::<u64>()) {
        let op = build(&FiniteSystem::new(map).unwrap(), &c).unwrap();
        let report = theorem4_check(&op, 10, 1e-6, seed).unwrap();
        prop_assert!(report.passed, "{:?}", report);
    }

    #[test]
    fn xi_upper_bounds_at_the_invariant_measure((map, c) in single_cycle(), tests in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 12), 1..5)) {
        let op = build(&FiniteSystem::new(map.clone()).unwrap(), &c).unwrap();
        let n = op.len();
        let cycle = &op.system().cycles()[0];
        let mu = MeasureVector::uniform_on(n, cycle);
        let tests: Vec<Vec<f64>> = tests.into_iter().map(|t| t[..n].to_vec()).collect();
        let lam0 = lambda(&op, &vec![0.0; n]).unwrap();
        prop_assert!(xi_upper(&op, &mu, &tests).unwrap() >= lam0 - 1e-9);
        prop_assert!((xi_upper(&op, &mu, &[vec![0.0; n]]).unwrap() - lam0).abs() <= 1e-12);
    }
}

fn five_cycle(c: &[f64]) -> TransferOp<f64> {
    build(&FiniteSystem::new(vec![1, 2, 3, 4, 0]).unwrap(), c).unwrap()
}

#[test]
fn worked_potentials() {
    let op = five_cycle(&[0.0; 5]);
    assert!((lambda(&op, &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap() - 0.2).abs() < 1e-12);
    let collapse: TransferOp<f64> = build(&FiniteSystem::new(vec![0, 2, 0, 2]).unwrap(), &[0.0; 4]).unwrap();
    assert!(lambda(&collapse, &[0.0; 4]).unwrap().abs() < 1e-12);
    for t0 in [-2.0, 0.5, 3.0] {
        assert!((lambda(&collapse, &[t0; 4]).unwrap() - t0).abs() < 1e-12);
    }
}

#[test]
fn witness_drives_xi_down() {
    let op = five_cycle(&[0.0; 5]);
    let delta = MeasureVector::point_mass(5, 0);
    let t_max = 50.0;
    let InvarianceVerdict::Witness { state, gap, t, value, predicted } = invariance_witness(&op, &delta, t_max, 1e-9).unwrap() else {
        panic!("point mass on a cycle is not invariant");
    };
    assert_eq!((state, gap), (0, 1.0));
    assert!((predicted - (0.0 - t_max)).abs() < 1e-12);
    assert!((value - predicted).abs() < 1e-9);
    let mut a = vec![0.0; 5];
    a[0] = t;
    a[4] = -t;
    let xi = xi_upper(&op, &delta, &[vec![0.0; 5], a]).unwrap();
    assert!(xi < -1.0);
}

#[test]
fn subgradient_inequality_spot_check() {
    let op = build(&FiniteSystem::new(vec![1, 0, 3, 4, 2, 0, 2]).unwrap(), &[0.3, 0.1, 0.2, -0.4, 0.0, 1.0, 1.0]).unwrap();
    let a = [0.2, -0.1, 0.5, 0.0, 0.1, 0.0, 0.0];
    let eq = equilibrium_subgradient(&op, &a, 1e-4).unwrap();
    let la = lambda(&op, &a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12345);
    for _ in 0..20 {
        let b: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        assert!(lambda(&op, &ab).unwrap() - la >= eq.measure.integrate(&b) - 1e-6);
    }
}

#[test]
fn input_json() {
    let input: transfer::SystemInput = serde_json::from_str(r#"{"map": [1, 2, 0], "c": [0.1, 0.2, 0.3]}"#).unwrap();
    let op = TransferOp::<f64>::from_input(&input).unwrap();
    assert!((lambda(&op, &[0.0; 3]).unwrap() - 0.2).abs() < 1e-12);
    let bare: transfer::SystemInput = serde_json::from_str(r#"{"map": [0, 0]}"#).unwrap();
    assert_eq!(TransferOp::<f64>::from_input(&bare).unwrap().potential(), &[0.0, 0.0]);
    let bad: transfer::SystemInput = serde_json::from_str(r#"{"map": [0, 5]}"#).unwrap();
    assert!(TransferOp::<f64>::from_input(&bad).is_err());
}
