mod common;

use std::sync::Arc;

use adiabat::dual::{verify_condition_equivalence, verify_coupling_identity};
use adiabat::propagator::propagate;
use adiabat::quantum::TimeGrid;
use adiabat::spectral::{connection, coupling_via_hdot, track};
use adiabat::spinhalf::{hamiltonian_a, SpinHalfParams};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{dual_run, random_smooth_model};

fn coupling_tolerance(h: f64) -> f64 {
    1e-6f64.max(10.0 * h * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_three_level_models_keep_conditions(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = Arc::new(random_smooth_model(&mut rng));
        let run = dual_run(model, 4.0, 4000);
        let h = run.grid.step();
        for level in 0..3 {
            let (a, b) = run.reports(level, 0.1);
            let eq = verify_condition_equivalence(&a, &b);
            prop_assert!(eq.equivalent, "level {level}: deviation {:e}", eq.max_deviation);
        }
        let identity = verify_coupling_identity(&run.system, &run.path_a, &run.path_b).unwrap();
        prop_assert!(identity.transported_residual <= coupling_tolerance(h));
        prop_assert!(identity.modulus_residual <= 1e-6);
        // Finite-difference and dH/dt routes to the coupling agree.
        for k in (0..run.grid.len()).step_by(97) {
            for m in 0..3 {
                for n in 0..3 {
                    if m == n {
                        continue;
                    }
                    let fd = connection(&run.path_a, m, n, k).unwrap();
                    let an = coupling_via_hdot(run.system.primal(), &run.path_a, m, n, k).unwrap();
                    prop_assert!((fd - an).norm() <= coupling_tolerance(h), "k={k} ({m},{n})");
                }
            }
        }
    }

    #[test]
    fn coupling_moduli_are_gauge_invariant(seed in any::<u64>(), w in 0.05f64..1.0, th in 0.2f64..2.9) {
        let p = SpinHalfParams::new(1.0, w, th).unwrap();
        let model = hamiltonian_a(&p);
        let grid = TimeGrid::new(6.0, 600).unwrap();
        let path = track(&model, &grid).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let phases: Vec<[f64; 2]> = (0..grid.len())
            .map(|_| [rng.gen_range(-3.2..3.2), rng.gen_range(-3.2..3.2)])
            .collect();
        let scrambled = path.with_phases(|m, k| phases[k][m]);
        let repaired = scrambled.realign();
        for k in 0..grid.len() {
            let base = connection(&path, 0, 1, k).unwrap().norm();
            prop_assert!((connection(&repaired, 0, 1, k).unwrap().norm() - base).abs() <= 1e-9);
            // The dH/dt route is pointwise, so no repair is needed.
            let a = coupling_via_hdot(&model, &path, 0, 1, k).unwrap().norm();
            let b = coupling_via_hdot(&model, &scrambled, 0, 1, k).unwrap().norm();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn propagation_stays_unitary(w0 in 0.2f64..5.0, w in 0.0f64..2.0, th in 0.0f64..3.1) {
        let p = SpinHalfParams::new(w0, w, th).unwrap();
        let grid = TimeGrid::new(30.0, 3000).unwrap();
        let path = propagate(&hamiltonian_a(&p), &grid).unwrap();
        prop_assert!(path.max_unitarity_defect() <= 1e-8);
    }
}
