use edgelink::lattice::{build_system, SystemSpec};
use edgelink::npsolver::{
    eigenvalues_boundary, fidelity_closed_form, fidelity_exact, g_bounds, qubit_weight, scaled_pair,
    two_level_from_spectrum, CotBranches, ExactBranches, ScaledCoupling,
};
use edgelink::perturb::CouplingSums;
use edgelink::spectral::{diagonalize, edge_window, EdgeCalibration, Spectrum};
use edgelink::Error;

fn lattice(l: usize) -> Spectrum {
    diagonalize(&build_system(&SystemSpec::square(l)).unwrap()).unwrap()
}

fn full(l: usize, eps: f64, g: f64) -> Spectrum {
    diagonalize(&build_system(&SystemSpec::square_with_qubits(l, eps, g)).unwrap()).unwrap()
}

fn branches(lat: &Spectrum) -> ExactBranches {
    let n = lat.lattice().len();
    ExactBranches::new(&CouplingSums::from_spectrum(lat, [1, n]).unwrap()).unwrap()
}

fn calibration(l: usize) -> (Spectrum, EdgeCalibration) {
    let lat = lattice(l);
    let cal = edge_window(&lat, -1.76).unwrap();
    (lat, cal)
}

#[test]
fn zero_coupling_roots_are_poles_and_eps() {
    let lat = lattice(7);
    let b = branches(&lat);
    let roots = eigenvalues_boundary(&b, -1.7, 0.0).unwrap();
    assert_eq!(roots.iter().filter(|r| r.lambda == -1.7).count(), 2);
    for r in roots.iter().filter(|r| r.lambda != -1.7) {
        assert!(lat.eigenvalues().iter().any(|e| (e - r.lambda).abs() < 1e-12));
    }
}

#[test]
fn weights_match_dense_and_sum_to_one() {
    let (l, eps, g) = (21, -1.76, 0.3);
    let lat = lattice(l);
    let b = branches(&lat);
    let roots = eigenvalues_boundary(&b, eps, g).unwrap();
    let total: f64 = roots.iter().map(|r| r.qubit_weight).sum();
    assert!((total - 1.0).abs() < 1e-10, "sum {total}");
    let dense = full(l, eps, g);
    let w = dense.qubit_weights().unwrap();
    for r in &roots {
        assert!(r.qubit_weight <= 0.5 && r.qubit_weight > 0.0);
        let n = (0..dense.len())
            .min_by(|&a, &c| {
                let da = (dense.eigenvalues()[a] - r.lambda).abs();
                let dc = (dense.eigenvalues()[c] - r.lambda).abs();
                da.total_cmp(&dc).then(w[c].0.total_cmp(&w[a].0))
            })
            .unwrap();
        assert!((w[n].0 - r.qubit_weight).abs() < 1e-6, "lambda {}", r.lambda);
        let direct = qubit_weight(&b, eps, r.lambda, g, r.parity).unwrap();
        assert!((direct - r.qubit_weight).abs() < 1e-12);
    }
}

#[test]
fn weight_is_half_the_eigenvalue_slope() {
    let (l, eps, g) = (11, -1.75, 0.25);
    let b = branches(&lattice(l));
    let h = 1e-6;
    let at = |e: f64| eigenvalues_boundary(&b, e, g).unwrap();
    let (mid, up, down) = (at(eps), at(eps + h), at(eps - h));
    for k in 0..mid.len() {
        let slope = (up[k].lambda - down[k].lambda) / (2.0 * h);
        assert!((mid[k].qubit_weight - 0.5 * slope).abs() < 1e-6);
    }
}

#[test]
fn non_root_is_a_contract_error() {
    let b = branches(&lattice(7));
    let r = qubit_weight(&b, -1.7, -1.234, 0.2, edgelink::spectral::Parity::Plus);
    assert!(matches!(r, Err(Error::Contract(_))));
}

#[test]
fn largest_weights_bracket_adjusted_potential() {
    let (l, g) = (21, 0.1);
    let (lat, cal) = calibration(l);
    let sc = ScaledCoupling::from_w(&cal, 0.4, cal.g0(g)).unwrap();
    let eps = sc.bare_eps(&cal, g);
    let mut roots = eigenvalues_boundary(&branches(&lat), eps, g).unwrap();
    roots.sort_by(|a, b| b.qubit_weight.total_cmp(&a.qubit_weight));
    let (lo, hi) = (
        roots[0].lambda.min(roots[1].lambda),
        roots[0].lambda.max(roots[1].lambda),
    );
    assert!(lo <= sc.eps_tilde && sc.eps_tilde <= hi);
    assert!(cal.e_l <= lo && hi <= cal.e_next);
}

#[test]
fn closed_form_roots_track_transcendental_ones() {
    let (_, cal) = calibration(21);
    let mut worst = 0.0_f64;
    for g0 in [0.01, 0.1, 0.3, 1.0, 3.0] {
        for k in 0..=20 {
            let sc = ScaledCoupling::from_w(&cal, k as f64 / 20.0, g0).unwrap();
            let r = scaled_pair(&sc, &cal).unwrap();
            worst = worst.max((r.xa0 - r.x0).abs()).max((r.xb1 - r.x1).abs());
        }
    }
    assert!(worst <= 0.048, "worst deviation {worst}");
}

#[test]
fn strong_coupling_midpoint_matches_dense() {
    let (l, g0) = (21, 3.0);
    let (_, cal) = calibration(l);
    let g = cal.g_from_g0(g0);
    let sc = ScaledCoupling::from_w(&cal, 0.5, g0).unwrap();
    let model = scaled_pair(&sc, &cal).unwrap();
    let dense = two_level_from_spectrum(&full(l, sc.bare_eps(&cal, g), g)).unwrap();
    let rel = (model.omega_eff - dense.omega_eff).abs() / dense.omega_eff;
    assert!(rel < 0.05, "model {} dense {}", model.omega_eff, dense.omega_eff);
}

#[test]
fn coupling_bounds_limits() {
    let (_, cal) = calibration(21);
    let (lo, hi) = g_bounds(&cal, 1e-4).unwrap();
    assert!(lo < 1e-2 && hi < 1e-1);
    assert!((hi / lo).powi(2) > 1e3);
    let (lo_near_one, _) = g_bounds(&cal, 1.0 - 1e-9).unwrap();
    assert!(lo_near_one > 1e3);
    assert!(matches!(g_bounds(&cal, 1.0), Err(Error::Domain(_))));
    assert!(matches!(g_bounds(&cal, 0.0), Err(Error::Domain(_))));
}

#[test]
fn fidelity_flattens_near_unit_coupling_and_decreases() {
    let (lat, cal) = calibration(21);
    let b = branches(&lat);
    let values: Vec<f64> = (0..=20)
        .map(|k| fidelity_closed_form(&ScaledCoupling::from_w(&cal, k as f64 / 20.0, 1.0).unwrap()))
        .collect();
    let spread =
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max) - values.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.05, "spread {spread}");

    let mut last = f64::INFINITY;
    for k in 0..=20 {
        let g0 = 0.5 * k as f64;
        let sc = ScaledCoupling::from_w(&cal, 0.5, g0).unwrap();
        let f = fidelity_closed_form(&sc);
        assert!(f <= last + 1e-12, "closed form rises at G0 = {g0}");
        last = f;
    }
    let mut last = f64::INFINITY;
    for g0 in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let g = cal.g_from_g0(g0);
        let sc = ScaledCoupling::from_w(&cal, 0.5, g0).unwrap();
        let f = fidelity_exact(&b, sc.bare_eps(&cal, g), g).unwrap().fidelity;
        assert!(f <= last + 1e-9, "exact fidelity rises at G0 = {g0}");
        last = f;
    }
}

#[test]
fn cot_model_roots_lie_in_window() {
    let (_, cal) = calibration(21);
    let cot = CotBranches::new(cal, cal.e_l - 3.0 * cal.delta_e, cal.e_next + 3.0 * cal.delta_e);
    let g = cal.g_from_g0(0.3);
    let sc = ScaledCoupling::from_w(&cal, 0.3, 0.3).unwrap();
    let roots = eigenvalues_boundary(&cot, sc.eps_tilde - cal.b_f * g * g, g).unwrap();
    let inside: Vec<f64> = roots
        .iter()
        .map(|r| r.lambda)
        .filter(|x| *x > cal.e_l && *x < cal.e_next)
        .collect();
    assert_eq!(inside.len(), 2);
    let pair = scaled_pair(&sc, &cal).unwrap();
    assert!((inside[0] - pair.lambda_minus).abs() < 1e-3 * cal.delta_e);
    assert!((inside[1] - pair.lambda_plus).abs() < 1e-3 * cal.delta_e);
}
