use std::f64::consts::{FRAC_PI_2, PI};

use matryoshka::lattice::{build_chain, lift_angles, square_hamiltonian, ChainSpec, Tower};
use matryoshka::spectral::{
    bloch_bands, bulk_bands, chain_edge_states, diagonalize, edge_energies, k_grid, Side,
};
use matryoshka::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn fig3() -> Tower {
    let s2 = 2f64.sqrt();
    Tower::new(0.588f64.asin(), &[0.9 / s2, 0.8 / s2]).unwrap()
}

#[test]
fn periodic_order_two_has_eight_bands_matching_closed_form() {
    let tower = fig3();
    let spec = tower.spec(2, 3).unwrap().periodic();
    for p in bloch_bands(&spec, &k_grid(32)).unwrap() {
        let closed = tower.dispersion(2, p.k).unwrap();
        assert_eq!(p.energies.len(), 8);
        for (a, b) in p.energies.iter().zip(&closed) {
            assert!((a - b).abs() < 1e-10, "k = {}: {a} vs {b}", p.k);
        }
    }
}

#[test]
fn finite_periodic_chain_samples_the_bands() {
    let tower = fig3();
    let spec = tower.spec(1, 16).unwrap().periodic();
    let spectrum = diagonalize(&build_chain(&spec).unwrap()).unwrap();
    let ks: Vec<f64> = (0..16).map(|m| 2.0 * PI * m as f64 / 16.0).collect();
    let mut closed: Vec<f64> = ks.iter().flat_map(|&k| tower.dispersion(1, k).unwrap()).collect();
    closed.sort_by(f64::total_cmp);
    for (a, b) in spectrum.energies.iter().zip(&closed) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn bloch_bands_reject_open_chains() {
    let spec = fig3().spec(1, 4).unwrap();
    assert!(matches!(bloch_bands(&spec, &[0.0]), Err(Error::Config(_))));
}

#[test]
fn edge_states_sit_in_gaps_and_pair_up() {
    let tower = fig3();
    let (_, _, report) = chain_edge_states(&tower.spec(2, 40).unwrap(), 0.15).unwrap();
    let bands = bulk_bands(&tower.spec(2, 1).unwrap(), 64).unwrap();
    for s in &report.states {
        assert!(bands.iter().all(|(lo, hi)| s.energy < lo - 1e-6 || s.energy > hi + 1e-6));
        assert!(s.left_weight.max(s.right_weight) > 0.5);
    }
    let left = report.on_side(Side::Left).count();
    let right = report.on_side(Side::Right).count();
    assert!(left + right + report.on_side(Side::Hybridized).count() == report.count());
    let want = edge_energies(&[tower.scales()[1]]).unwrap();
    assert_eq!(want.len(), 6);
}

#[test]
fn dimerized_limit_has_exact_zero_mode() {
    // θ = π/2 leaves the first site isolated.
    let spec = ChainSpec::new(0, vec![0.0], 10).unwrap().with_sites(21);
    let lat = build_chain(&spec).unwrap();
    assert_eq!(lat.hamiltonian()[(0, 1)], 0.0);
    let spectrum = diagonalize(&lat).unwrap();
    assert!(spectrum.energies.iter().any(|e| e.abs() < 1e-14));
}

#[test]
fn lift_is_infeasible_for_large_scales() {
    match lift_angles(&[FRAC_PI_2 / 3.0], 5.0) {
        Err(Error::Infeasible(_)) | Err(Error::Domain(_)) => {}
        other => panic!("expected an error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chains_are_chiral(order in 0u32..3, seed in prop::collection::vec(0.0..FRAC_PI_2, 4), cells in 1usize..5, extra in 0usize..2) {
        let angles: Vec<f64> = seed.iter().cycle().take(1 << order).copied().collect();
        let spec = ChainSpec::new(order, angles, cells).unwrap();
        let n = spec.site_count() + extra;
        let lat = build_chain(&spec.with_sites(n)).unwrap();
        prop_assert_eq!(lat.chiral_defect(), 0.0);
        prop_assert!(lat.is_bipartite());
    }

    #[test]
    fn spectrum_is_mirror_symmetric(theta in 0.05..1.5f64, sites in 3usize..30) {
        let spec = ChainSpec::new(0, vec![theta], 1).unwrap().with_sites(sites);
        let e = diagonalize(&build_chain(&spec).unwrap()).unwrap().energies;
        for (a, b) in e.iter().zip(e.iter().rev()) {
            prop_assert!((a + b).abs() < 1e-10);
        }
    }

    #[test]
    fn lifting_closes_under_squaring(theta in 0.1..1.4f64, t in 0.2..0.9f64, cells in 2usize..6) {
        // Not every (θ, t) admits real square-root angles; the property is about those that do.
        let tower = match Tower::new(theta, &[t]) {
            Ok(tower) => tower,
            Err(Error::Infeasible(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(tower.residual(1) < 1e-10);
        let child = tower.spec(1, cells).unwrap().periodic();
        let parent = tower.spec(0, cells).unwrap().periodic();
        let sq = square_hamiltonian(&build_chain(&child).unwrap()).unwrap();
        let hp = build_chain(&parent).unwrap().hamiltonian().clone();
        let n = sq.b.nrows();
        prop_assert!(sq.cross < 1e-12);
        prop_assert!((&sq.b - DMatrix::identity(n, n) - hp * t).amax() < 1e-10);
    }
}
