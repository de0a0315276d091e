use std::f64::consts::TAU;

use proptest::prelude::*;

use qcmkl_core::kernels::{
    combine_grams, kernel_eval, prepared_gram, GramMatrix, KernelKind, KernelSpec, QaoaTopology,
};
use qcmkl_core::metrics::{aucroc, spectral_ratio};
use qcmkl_core::mkl::{distance_vector, optimal_weights, project_bisimplex, solve_easymkl, MklProblem};
use qcmkl_core::statevector::{Axis, Statevector};
use qcmkl_core::svm::train_svm;

fn kind() -> impl Strategy<Value = KernelKind> {
    prop::sample::select(KernelKind::ALL.to_vec())
}

fn points(m: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..TAU, d), m)
}

fn spec_for(kind: KernelKind, d: usize, seed: u64) -> KernelSpec {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    KernelSpec::initial(kind, d, QaoaTopology::AllPairs, &mut rng).unwrap()
}

/// Labels with both classes present.
fn labels(m: usize) -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(prop::bool::ANY, m).prop_map(|bits| {
        let mut y: Vec<i8> = bits.into_iter().map(|b| if b { 1 } else { -1 }).collect();
        y[0] = 1;
        let last = y.len() - 1;
        y[last] = -1;
        y
    })
}

fn instance() -> impl Strategy<Value = (usize, Vec<Vec<f64>>, Vec<i8>)> {
    (2usize..12, 1usize..4).prop_flat_map(|(m, d)| (Just(d), points(m, d), labels(m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotations_preserve_norm(angles in prop::collection::vec(-10.0..10.0f64, 1..12), n in 1usize..5) {
        let mut psi = Statevector::zero_state(n).unwrap();
        for (i, &a) in angles.iter().enumerate() {
            let axis = [Axis::X, Axis::Y, Axis::Z][i % 3];
            psi.apply_rotation(axis, i % n, a).unwrap();
            if n > 1 {
                psi.apply_zz(i % n, (i + 1) % n, a * 0.5).unwrap();
            }
            psi.apply_hadamard((i + 1) % n).unwrap();
        }
        prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kernels_are_symmetric(k in kind(), d in 1usize..4, seed in any::<u64>(), pts in points(2, 3)) {
        let spec = spec_for(k, d, seed);
        let (x, y) = (&pts[0][..d], &pts[1][..d]);
        let a = kernel_eval(&spec, x, y).unwrap();
        let b = kernel_eval(&spec, y, x).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn quantum_kernels_are_fidelities(k in prop::sample::select(vec![KernelKind::Rx, KernelKind::Iqp, KernelKind::Qaoa]),
                                      d in 1usize..5, seed in any::<u64>(), pts in points(2, 4)) {
        let spec = spec_for(k, d, seed);
        let v = kernel_eval(&spec, &pts[0][..d], &pts[1][..d]).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        prop_assert!((kernel_eval(&spec, &pts[0][..d], &pts[0][..d]).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn qaoa_kernel_reduces_to_rx(d in 1usize..5, seed in any::<u64>(), pts in points(2, 4)) {
        // the θ-dependent layer acts after the encoding and cancels in U(x')†U(x)
        let qaoa = spec_for(KernelKind::Qaoa, d, seed);
        let rx = KernelSpec::with_defaults(KernelKind::Rx, d).unwrap();
        let a = kernel_eval(&qaoa, &pts[0][..d], &pts[1][..d]).unwrap();
        let b = kernel_eval(&rx, &pts[0][..d], &pts[1][..d]).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn prepared_grams_are_valid(k in kind(), seed in any::<u64>(), (d, pts, _y) in instance()) {
        let spec = spec_for(k, d, seed);
        let g = prepared_gram(&spec, &pts).unwrap();
        prop_assert!(g.is_symmetric(1e-10));
        prop_assert!(g.min_eigenvalue() >= -1e-8);
        let m = g.size();
        let max_diag = (0..m).map(|i| g.get(i, i)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((max_diag - 1.0).abs() < 1e-10);
        prop_assert!(g.entries().iter().all(|v| v.abs() <= 1.0 + 1e-10));
        if spec.is_bounded() {
            prop_assert!((0..m).all(|i| (g.get(i, i) - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn combinations_stay_psd(a in kind(), b in kind(), w in 0.0..1.0f64, seed in any::<u64>(), (d, pts, _y) in instance()) {
        let ga = prepared_gram(&spec_for(a, d, seed), &pts).unwrap();
        let gb = prepared_gram(&spec_for(b, d, seed ^ 1), &pts).unwrap();
        let g = combine_grams(&[ga, gb], &[w, 1.0 - w]).unwrap();
        prop_assert!(g.min_eigenvalue() >= -1e-8);
    }

    #[test]
    fn bisimplex_projection_is_feasible_and_idempotent(v in prop::collection::vec(-5.0..5.0f64, 10), y in labels(10)) {
        let p = project_bisimplex(&v, &y).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        for class in [1i8, -1] {
            let s: f64 = p.iter().zip(&y).filter(|(_, &l)| l == class).map(|(x, _)| x).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        let again = project_bisimplex(&p, &y).unwrap();
        prop_assert!(p.iter().zip(&again).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn easymkl_solution_invariants(a in kind(), b in kind(), seed in any::<u64>(), lambda in 0.0..0.9f64,
                                   (d, pts, y) in instance()) {
        let grams = vec![
            prepared_gram(&spec_for(a, d, seed), &pts).unwrap(),
            prepared_gram(&spec_for(b, d, seed ^ 1), &pts).unwrap(),
        ];
        let sol = solve_easymkl(&MklProblem::new(grams.clone(), y.clone(), lambda).unwrap()).unwrap();
        for class in [1i8, -1] {
            let s: f64 = sol.phi.iter().zip(&y).filter(|(_, &l)| l == class).map(|(x, _)| x).sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
        }
        prop_assert!(sol.phi.iter().all(|&x| x >= 0.0));
        prop_assert!(sol.gamma.iter().all(|&g| g >= 0.0));
        prop_assert!((sol.gamma.iter().map(|g| g * g).sum::<f64>().sqrt() - 1.0).abs() < 1e-8);
        prop_assert!(distance_vector(&grams, &y, &sol.phi).unwrap().iter().all(|&v| v >= -1e-10));
        let l1: f64 = sol.gamma_l1().iter().sum();
        prop_assert!((l1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn easymkl_weights_are_scale_invariant(seed in any::<u64>(), c in 0.1..10.0f64, (d, pts, y) in instance()) {
        let grams = vec![
            prepared_gram(&spec_for(KernelKind::Rbf, d, seed), &pts).unwrap(),
            prepared_gram(&spec_for(KernelKind::Rx, d, seed), &pts).unwrap(),
        ];
        let scaled: Vec<GramMatrix> = grams
            .iter()
            .map(|g| GramMatrix::new(g.entries() * c, g.bounded(), g.normalized()).unwrap())
            .collect();
        let phi = solve_easymkl(&MklProblem::new(grams.clone(), y.clone(), 0.2).unwrap()).unwrap().phi;
        let a = optimal_weights(&distance_vector(&grams, &y, &phi).unwrap()).unwrap();
        let b = optimal_weights(&distance_vector(&scaled, &y, &phi).unwrap()).unwrap();
        for (x, z) in a.iter().zip(&b) {
            prop_assert!((x - z).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_ratio_bounds(k in kind(), seed in any::<u64>(), (d, pts, _y) in instance()) {
        let g = prepared_gram(&spec_for(k, d, seed), &pts).unwrap();
        let (ratio, raw) = spectral_ratio(&g).unwrap();
        let m = g.size() as f64;
        prop_assert!(ratio >= 1.0 / m - 1e-9 && ratio <= 1.0 + 1e-9);
        prop_assert!((raw * raw / m - ratio).abs() < 1e-9);
    }

    #[test]
    fn aucroc_in_unit_interval_and_flips(scores in prop::collection::vec(-3.0..3.0f64, 10), y in labels(10)) {
        let a = aucroc(&scores, &y).unwrap();
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        let b = aucroc(&negated, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svm_dual_is_feasible(k in kind(), seed in any::<u64>(), c in 0.1..10.0f64, (d, pts, y) in instance()) {
        let g = prepared_gram(&spec_for(k, d, seed), &pts).unwrap();
        let model = train_svm(&g, &y, c).unwrap();
        prop_assert!(model.alpha.iter().all(|&a| (-1e-12..=c + 1e-12).contains(&a)));
        let balance: f64 = model.alpha.iter().zip(&y).map(|(a, &l)| a * f64::from(l)).sum();
        prop_assert!(balance.abs() < 1e-9);
    }
}
