use approx::assert_relative_eq;
use hbac_core::gaussian::{
    compose, make_beam_splitter, make_displacement, make_phase_shift, make_squeezer, make_swap,
    random_gaussian_unitary, GaussianState,
};
use hbac_core::linalg::c;
use hbac_core::thermo::gibbs_occupation;
use proptest::prelude::*;

fn thermal_product(nbars: &[f64]) -> GaussianState {
    GaussianState::thermal(nbars).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_unitaries_stay_symplectic(modes in 1usize..6, s1 in any::<u64>(), s2 in any::<u64>()) {
        let u = random_gaussian_unitary(modes, s1, 1.5);
        let v = random_gaussian_unitary(modes, s2, 1.5);
        prop_assert!(u.residuals().within_tolerance(), "{:?}", u.residuals());
        let uv = compose(&u, &v).unwrap();
        prop_assert!(uv.residuals().within_tolerance(), "{:?}", uv.residuals());
    }

    #[test]
    fn single_mode_determinant_is_conserved(
        nbar in 0.0f64..20.0,
        r in -1.5f64..1.5,
        phi in -3.0f64..3.0,
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
    ) {
        let state = GaussianState::thermal(&[nbar]).unwrap();
        let u = compose(
            &make_displacement(&[c(re, im)]),
            &compose(&make_phase_shift(&[phi]), &make_squeezer(&[r])).unwrap(),
        )
        .unwrap();
        let out = state.apply_unitary(&u).unwrap();
        let (d0, d1) = (state.det_second_moments(), out.det_second_moments());
        prop_assert!(((d1 - d0) / d0).abs() < 1e-8, "{} vs {}", d0, d1);
        prop_assert!((out.thermal_excitation().unwrap() - nbar).abs() < 1e-8 * (1.0 + nbar));
    }

    #[test]
    fn occupation_decreases_with_beta_omega(x in 1e-3f64..30.0, dx in 1e-3f64..5.0) {
        prop_assert!(gibbs_occupation(x + dx) < gibbs_occupation(x));
    }

    #[test]
    fn output_modes_never_drop_below_the_coldest_input(
        nbars in prop::collection::vec(1e-3f64..10.0, 2..6),
        seed in any::<u64>(),
    ) {
        let state = thermal_product(&nbars);
        let u = random_gaussian_unitary(nbars.len(), seed, 1.0);
        let out = state.apply_unitary(&u).unwrap();
        let floor = nbars.iter().copied().fold(f64::INFINITY, f64::min);
        for j in 0..nbars.len() {
            prop_assert!(out.mode_thermal_excitation(j).unwrap() >= floor - 1e-9);
        }
    }

    #[test]
    fn uncertainty_relation_survives_random_unitaries(
        nbars in prop::collection::vec(0.0f64..5.0, 1..5),
        seed in any::<u64>(),
    ) {
        let out = thermal_product(&nbars).apply_unitary(&random_gaussian_unitary(nbars.len(), seed, 1.5)).unwrap();
        prop_assert!(out.uncertainty_min_eigenvalue() > -1e-10);
        let mut nu = out.symplectic_eigenvalues();
        nu.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = nbars.iter().map(|n| n + 0.5).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in nu.iter().zip(&expected) {
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + b), "{:?} vs {:?}", nu, expected);
        }
    }
}

#[test]
fn swap_with_the_coldest_mode_meets_the_floor() {
    let nbars = [3.0, 0.7, 0.2, 1.4];
    let out = thermal_product(&nbars).apply_unitary(&make_swap(0, 2, 4).unwrap()).unwrap();
    assert_relative_eq!(out.mode_thermal_excitation(0).unwrap(), 0.2, max_relative = 1e-12);
}

#[test]
fn beam_splitter_mixes_occupations_linearly() {
    let theta: f64 = 0.4;
    let out = thermal_product(&[2.0, 0.5]).apply_unitary(&make_beam_splitter(0, 1, 2, theta).unwrap()).unwrap();
    let (cs, sn) = (theta.cos().powi(2), theta.sin().powi(2));
    assert_relative_eq!(out.mean_excitation(0), cs * 2.0 + sn * 0.5, max_relative = 1e-12);
    assert_relative_eq!(out.mean_excitation(1), sn * 2.0 + cs * 0.5, max_relative = 1e-12);
    // entropy is invariant under any unitary
    assert_relative_eq!(out.entropy(), thermal_product(&[2.0, 0.5]).entropy(), max_relative = 1e-10);
}

#[test]
fn corrupted_unitary_fails_validation() {
    let u = random_gaussian_unitary(3, 7, 1.0);
    let bad = hbac_core::checks::corrupt(&u);
    assert!(!bad.residuals().within_tolerance());
    assert!(hbac_core::gaussian::GaussianUnitary::new(bad.displacement().clone(), bad.c().clone(), bad.s().clone())
        .is_err());
}
