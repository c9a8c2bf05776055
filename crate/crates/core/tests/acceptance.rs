//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! every line is printed even when an earlier criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use edgelink::asym::{asym_metrics, AsymConfig};
use edgelink::dynamics::{analyze_trace, evolve, evolve_state, uniform_times};
use edgelink::lattice::{angle_distance, build_system, plaquette_flux, SystemSpec, FLUX};
use edgelink::npsolver::{
    eigenvalues_boundary, fidelity_closed_form, fidelity_exact, fidelity_from_spectrum, omega_bounds,
    two_level_from_spectrum, ExactBranches, ScaledCoupling,
};
use edgelink::perturb::{resonance_dynamics, CouplingSums};
use edgelink::spectral::{diagonalize, edge_window, inner_band_edge, outer_band_edge, Band, Spectrum};
use edgelink::symmetry::{build_symmetry_operator, commutator_norm};
use faer::{c64, Mat};

type Outcome = Result<String, String>;

fn lattice_spectrum(lx: usize, ly: usize) -> Spectrum {
    diagonalize(&build_system(&SystemSpec::rect(lx, ly)).unwrap()).unwrap()
}

fn full_spectrum(spec: &SystemSpec) -> Spectrum {
    diagonalize(&build_system(spec).unwrap()).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Row/column distance of a site to the nearest lattice edge.
fn edge_distance(site: usize, l: usize) -> usize {
    let r = (site - 1) / l + 1;
    let c = (site - 1) % l + 1;
    [r - 1, c - 1, l - r, l - c].into_iter().min().unwrap()
}

fn criterion_1() -> Outcome {
    let l = 35;
    let s = lattice_spectrum(l, l);
    let e = s.eigenvalues();
    let bound = 2.0 * 2f64.sqrt() + 1e-9;
    let max_abs = e.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let edge: Vec<f64> = (0..s.len())
        .filter(|&n| s.labels()[n].band == Band::Edge)
        .map(|n| e[n].abs())
        .collect();
    let edge_lo = edge.iter().copied().fold(f64::INFINITY, f64::min);
    let edge_hi = edge.iter().copied().fold(0.0, f64::max);
    // states strictly inside the analytic gap must live on the boundary
    let (inner, outer) = (inner_band_edge(), outer_band_edge());
    let mut min_boundary = f64::INFINITY;
    for n in 0..s.len() {
        if e[n].abs() > inner && e[n].abs() < outer {
            let w: f64 = (1..=l * l)
                .filter(|&site| edge_distance(site, l) < 4)
                .map(|site| s.amplitude(site - 1, n).norm_sqr())
                .sum();
            min_boundary = min_boundary.min(w);
        }
    }
    check(
        max_abs <= bound && edge_lo > 1.06 && edge_hi < 2.64 && min_boundary > 0.5,
        format!(
            "max|E|={max_abs:.6} gap states |E| in [{edge_lo:.4}, {edge_hi:.4}] min boundary weight {min_boundary:.3}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let s = lattice_spectrum(35, 35);
    let cal = edge_window(&s, -1.75).map_err(|e| e.to_string())?;
    check(
        (cal.a_f - 0.16).abs() <= 0.02 && (cal.b_f + 0.31).abs() <= 0.03 && (cal.rho_e - 0.46).abs() <= 0.02,
        format!("A_f={:.4} B_f={:.4} rho_e={:.4}", cal.a_f, cal.b_f, cal.rho_e),
    )
}

fn criterion_3() -> Outcome {
    let l = 35;
    let g = 0.01;
    let lat = lattice_spectrum(l, l);
    let e = lat.eigenvalues();
    let idx = (0..lat.len())
        .filter(|&n| lat.labels()[n].band == Band::Edge)
        .min_by(|&a, &b| (e[a] + 1.7307).abs().total_cmp(&(e[b] + 1.7307).abs()))
        .unwrap();
    let res = resonance_dynamics(&lat, idx, g).map_err(|e| e.to_string())?;
    let full = full_spectrum(&SystemSpec::square_with_qubits(l, e[idx], g));
    let trace = evolve(&full, 0, &uniform_times(25.0 * res.period, 4096)).map_err(|e| e.to_string())?;
    let a = analyze_trace(&trace).map_err(|e| e.to_string())?;
    let period = 2.0 * PI / a.omega;
    let peak_lat = trace.p_lat.iter().copied().fold(0.0, f64::max);
    check(
        (period / 4382.0 - 1.0).abs() <= 0.02 && (peak_lat - 0.5).abs() <= 0.02,
        format!(
            "E_l={:.5} T_dyn={period:.1} T_analytic={:.1} peak P_lat={peak_lat:.4}",
            e[idx], res.period
        ),
    )
}

fn criterion_4() -> Outcome {
    let l = 21;
    let eps = -1.8;
    let lat = lattice_spectrum(l, l);
    let sums = CouplingSums::from_spectrum(&lat, [1, l * l]).map_err(|e| e.to_string())?;
    let branches = ExactBranches::new(&sums).map_err(|e| e.to_string())?;
    let (lo, hi) = (-outer_band_edge(), -inner_band_edge());
    let mut worst = 0.0_f64;
    let mut counted = Vec::new();
    for g in [0.1, 0.5] {
        let roots = eigenvalues_boundary(&branches, eps, g).map_err(|e| e.to_string())?;
        let full = full_spectrum(&SystemSpec::square_with_qubits(l, eps, g));
        let weights = full.qubit_weights().unwrap();
        let dense: Vec<f64> = (0..full.len())
            .filter(|&n| weights[n].0 > 1e-12)
            .map(|n| full.eigenvalues()[n])
            .filter(|x| *x > lo && *x < hi)
            .collect();
        let in_window: Vec<f64> = roots.iter().map(|r| r.lambda).filter(|x| *x > lo && *x < hi).collect();
        for r in &in_window {
            let d = full
                .eigenvalues()
                .iter()
                .map(|x| (x - r).abs())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
        counted.push((in_window.len(), dense.len()));
    }
    let counts_match = counted.iter().all(|(a, b)| a == b);
    check(
        worst <= 1e-8 && counts_match,
        format!("max |root - dense| = {worst:.2e}; (roots, coupled dense levels) per g = {counted:?}"),
    )
}

fn criterion_5() -> Outcome {
    let l = 21;
    let lat = lattice_spectrum(l, l);
    let cal = edge_window(&lat, -1.76).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    let mut points = 0;
    for g0 in [0.05, 0.1, 0.3, 1.0, 3.0] {
        let g = cal.g_from_g0(g0);
        let (lo, hi) = omega_bounds(&cal, g).map_err(|e| e.to_string())?;
        for k in 0..8 {
            let w = (k as f64 + 0.5) / 8.0;
            let sc = ScaledCoupling::from_w(&cal, w, g0).map_err(|e| e.to_string())?;
            let eps = sc.bare_eps(&cal, g);
            let full = full_spectrum(&SystemSpec::square_with_qubits(l, eps, g));
            let pair = two_level_from_spectrum(&full).map_err(|e| e.to_string())?;
            let r = pair.omega_eff / cal.delta_e;
            worst = worst.max((lo - r).max(r - hi).max(0.0));
            points += 1;
        }
    }
    check(
        worst <= 0.02,
        format!(
            "{points} points, window [{:.4}, {:.4}], worst envelope violation {worst:.4} Delta E",
            cal.e_l, cal.e_next
        ),
    )
}

fn criterion_6() -> Outcome {
    let l = 31;
    let lat = lattice_spectrum(l, l);
    let cal = edge_window(&lat, -1.75).map_err(|e| e.to_string())?;
    let sums = CouplingSums::from_spectrum(&lat, [1, l * l]).map_err(|e| e.to_string())?;
    let branches = ExactBranches::new(&sums).map_err(|e| e.to_string())?;

    // (a) perturbative limits at g^2 L = 1e-3
    let g = (1e-3 / l as f64).sqrt();
    let mid = full_spectrum(&SystemSpec::square_with_qubits(l, cal.lambda_mid, g));
    let f_mid = fidelity_from_spectrum(&mid).map_err(|e| e.to_string())?.fidelity;
    let res = full_spectrum(&SystemSpec::square_with_qubits(l, cal.e_l, g));
    let f_res = fidelity_from_spectrum(&res).map_err(|e| e.to_string())?.fidelity;
    let part_a = f_mid >= 0.99 && (f_res - 0.75).abs() <= 0.01;

    // (b) closed form vs exact vs time average
    let (mut worst_closed, mut worst_time) = (0.0_f64, 0.0_f64);
    for g0 in [0.1, 1.0] {
        let g = cal.g_from_g0(g0);
        for k in 0..6 {
            let w = (k as f64 + 0.5) / 6.0;
            let sc = ScaledCoupling::from_w(&cal, w, g0).map_err(|e| e.to_string())?;
            let eps = sc.bare_eps(&cal, g);
            let exact = fidelity_exact(&branches, eps, g).map_err(|e| e.to_string())?.fidelity;
            worst_closed = worst_closed.max((fidelity_closed_form(&sc) - exact).abs());
            let full = full_spectrum(&SystemSpec::square_with_qubits(l, eps, g));
            let omega = two_level_from_spectrum(&full).map_err(|e| e.to_string())?.omega_eff;
            let times = uniform_times(100.0 * 2.0 * PI / omega, 20000);
            let avg = analyze_trace(&evolve(&full, 0, &times).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?
                .fidelity;
            worst_time = worst_time.max((avg - exact).abs());
        }
    }
    check(
        part_a && worst_closed <= 0.05 && worst_time <= 0.02,
        format!(
            "F_mid={f_mid:.4} F_res={f_res:.4}; max|closed-exact|={worst_closed:.4} max|time-exact|={worst_time:.4}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let (lx, ly) = (63, 21);
    let lat = lattice_spectrum(lx, ly);
    let e = lat.eigenvalues();
    let edge: Vec<f64> = (0..lat.len())
        .filter(|&n| lat.labels()[n].band == Band::Edge)
        .map(|n| e[n])
        .collect();
    let target = -1.765;
    let e_l = edge
        .iter()
        .copied()
        .filter(|x| *x <= target)
        .fold(f64::NEG_INFINITY, f64::max);
    let e_next = edge
        .iter()
        .copied()
        .filter(|x| *x > target)
        .fold(f64::INFINITY, f64::min);
    let distances = [4, 8, 16, 32];
    let (mut worst_omega, mut worst_f) = (0.0_f64, 0.0_f64);
    // diagnostic only: the same spread once the closest pair is left out
    let mut worst_far = 0.0_f64;
    let mut worst_at = (0.0, 0.0);
    for g0 in [0.1, 3.0] {
        let g = (g0 / ly as f64).sqrt();
        for k in 0..6 {
            let eps = e_l + (k as f64 + 0.5) / 6.0 * (e_next - e_l);
            let mut omegas = Vec::new();
            let mut fids = Vec::new();
            for &d in &distances {
                let full = full_spectrum(&SystemSpec::rect(lx, ly).with_edge_qubits(d, eps, g));
                omegas.push(two_level_from_spectrum(&full).map_err(|e| e.to_string())?.omega_eff);
                fids.push(fidelity_from_spectrum(&full).map_err(|e| e.to_string())?.fidelity);
            }
            let spread = |v: &[f64]| {
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (hi - lo) / (0.5 * (hi + lo))
            };
            let so = spread(&omegas);
            worst_far = worst_far.max(spread(&omegas[1..]));
            if so > worst_omega {
                worst_omega = so;
                worst_at = (g0, eps);
            }
            worst_f = worst_f.max(spread(&fids));
        }
    }
    check(
        worst_omega < 0.05 && worst_f < 0.05,
        format!(
            "d in {distances:?}, window [{e_l:.4}, {e_next:.4}]: max relative spread Omega {worst_omega:.4} (G0={}, eps={:.4}), F {worst_f:.4}; Omega spread for d >= 8 is {worst_far:.4}",
            worst_at.0, worst_at.1
        ),
    )
}

fn criterion_8() -> Outcome {
    let l = 21;
    let lat = lattice_spectrum(l, l);
    let cal = edge_window(&lat, -1.76).map_err(|e| e.to_string())?;
    let sums = CouplingSums::from_spectrum(&lat, [1, l * l]).map_err(|e| e.to_string())?;
    let mid = cal.lambda_mid;
    let mut worst = 0.0_f64;
    let mut rows = Vec::new();
    for (delta, g1, g2) in [(0.002, 0.05, 0.05), (0.001, 0.05, 0.05), (0.0, 0.04, 0.06)] {
        let eps = [mid - 0.5 * delta, mid + 0.5 * delta];
        let mut cfg = AsymConfig::from_sums(&sums, mid, eps, [g1, g2]).map_err(|e| e.to_string())?;
        cfg.delta_e = Some(cal.delta_e);
        let m = asym_metrics(&cfg).map_err(|e| e.to_string())?;
        let full = full_spectrum(&SystemSpec::square(l).with_corner_qubits(eps[0], g1, eps[1], g2));
        let times = uniform_times(4.0 * 2.0 * PI / m.omega_eff, 40000);
        let trace = evolve(&full, 0, &times).map_err(|e| e.to_string())?;
        let k_time = trace.p_q2.iter().copied().fold(0.0, f64::max);
        worst = worst.max((m.k_pr - k_time).abs());
        rows.push(format!("{:.4}/{:.4}", m.k_pr, k_time));
    }
    let sym = AsymConfig::from_sums(&sums, mid, [mid, mid], [0.05, 0.05]).map_err(|e| e.to_string())?;
    let k_sym = asym_metrics(&sym).map_err(|e| e.to_string())?.k_pr;
    check(
        worst <= 0.03 && k_sym == 1.0,
        format!("K_pr/time-max {rows:?}, worst {worst:.4}; symmetric K_pr = {k_sym}"),
    )
}

/// `exp(-i H t)` by scaling and squaring of a Taylor series.
fn expm_oracle(h: &Mat<c64>, t: f64) -> Mat<c64> {
    let n = h.nrows();
    let norm = (0..n)
        .map(|i| (0..n).map(|k| h[(i, k)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = c64::new(0.0, -t / 2f64.powi(s));
    let a = Mat::<c64>::from_fn(n, n, |i, k| h[(i, k)] * scale);
    let mut result = Mat::<c64>::identity(n, n);
    let mut term = Mat::<c64>::identity(n, n);
    for k in 1..=30 {
        term = &term * &a;
        let inv = 1.0 / k as f64;
        term = Mat::from_fn(n, n, |i, j| term[(i, j)] * inv);
        result = &result + &term;
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

fn criterion_9() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (l, eps, g) in [(3, -1.7, 0.3), (5, -1.75, 0.2), (7, -1.76, 0.2)] {
        let spec = SystemSpec::square_with_qubits(l, eps, g);
        let h = build_system(&spec).unwrap();
        let n = h.dim();
        let herm = (0..n)
            .flat_map(|i| (0..n).map(move |k| (i, k)))
            .all(|(i, k)| h.entry(i, k) == h.entry(k, i).conj());
        let mut flux_err = 0.0_f64;
        for r in 1..l {
            for c in 1..l {
                flux_err = flux_err.max(angle_distance(plaquette_flux(&h, r, c).unwrap(), FLUX));
            }
        }
        let u = build_symmetry_operator(&spec).unwrap();
        let comm = commutator_norm(&u, &h);
        let s = diagonalize(&h).unwrap();
        let trace_err = (s.eigenvalues().iter().sum::<f64>() - 2.0 * eps).abs();
        let weights = s.qubit_weights().unwrap();
        let weight_err = (weights.iter().map(|w| w.0).sum::<f64>() - 1.0).abs();
        // finite-difference derivative of every level with respect to both qubit energies
        let step = 1e-4;
        let shifted = |de: f64| {
            let h = build_system(&SystemSpec::square_with_qubits(l, eps + de, g)).unwrap();
            diagonalize(&h).unwrap().eigenvalues().to_vec()
        };
        let (up, down) = (shifted(step), shifted(-step));
        let deriv: Vec<f64> = up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * step)).collect();
        let deriv_err = (deriv.iter().sum::<f64>() - 2.0).abs();
        let hf_err = deriv
            .iter()
            .zip(&weights)
            .map(|(d, w)| (d - (w.0 + w.1)).abs())
            .fold(0.0, f64::max);
        let mut psi = vec![c64::new(0.0, 0.0); n];
        psi[0] = c64::new(1.0, 0.0);
        let (mut norm_err, mut reverse_err) = (0.0_f64, 0.0_f64);
        for t in [0.5, 17.0, 900.0] {
            let out = evolve_state(&s, &psi, t).unwrap();
            norm_err = norm_err.max((out.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs());
            let back = evolve_state(&s, &out, -t).unwrap();
            let drift = back.iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            reverse_err = reverse_err.max(drift);
        }
        let mut oracle_err = 0.0_f64;
        if l == 7 {
            let hm = h.matrix().to_owned();
            let times = uniform_times(60.0, 100);
            let trace = evolve(&s, 0, &times).unwrap();
            for (k, &t) in times.iter().enumerate() {
                let u = expm_oracle(&hm, t);
                let p1 = u[(0, 0)].norm_sqr();
                let p2 = u[(n - 1, 0)].norm_sqr();
                oracle_err = oracle_err
                    .max((p1 - trace.p_q1[k]).abs())
                    .max((p2 - trace.p_q2[k]).abs());
            }
        }
        let pass = herm
            && flux_err < 1e-12
            && comm == 0.0
            && trace_err < 1e-10
            && weight_err < 1e-10
            && deriv_err < 1e-8
            && hf_err < 1e-6
            && norm_err < 1e-12
            && reverse_err < 1e-10
            && oracle_err < 1e-10;
        ok &= pass;
        notes.push(format!(
            "L={l}: herm={herm} flux {flux_err:.1e} comm {comm:.1e} trace {trace_err:.1e} weights {weight_err:.1e} dlambda {deriv_err:.1e} norm {norm_err:.1e} reversal {reverse_err:.1e} expm {oracle_err:.1e}"
        ));
    }
    check(ok, notes.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 band bounds", criterion_1),
        ("2 calibration constants", criterion_2),
        ("3 resonance period", criterion_3),
        ("4 boundary-equation exactness", criterion_4),
        ("5 frequency envelope", criterion_5),
        ("6 fidelity limits and closed form", criterion_6),
        ("7 distance independence", criterion_7),
        ("8 asymmetric consistency", criterion_8),
        ("9 property suite", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1} s): {detail}");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
