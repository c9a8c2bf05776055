use std::f64::consts::PI;

use edgelink::asym::{asym_metrics, refine_exact, AsymConfig};
use edgelink::dynamics::{analyze_trace, evolve, uniform_times};
use edgelink::lattice::{build_system, SystemSpec};
use edgelink::npsolver::{
    eigenvalues_boundary, fidelity_closed_form, fidelity_from_roots, fidelity_from_spectrum, omega_bounds,
    two_level_from_spectrum, BoundaryRoot, BranchFunction, ExactBranches, ScaledCoupling,
};
use edgelink::perturb::CouplingSums;
use edgelink::spectral::{
    bulk_dispersion, diagonalize, edge_dispersion, edge_window, Band, EdgeCalibration, EdgeVariant, Spectrum,
};
use edgelink::symmetry::{build_symmetry_operator, classify_parity};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::*;
use crate::table::{Cell, Table};

pub enum Output {
    Table(Table),
    Json(Value),
    /// A table plus a JSON summary shown only in JSON output.
    Annotated(Table, Value),
}

type Res<T> = Result<T, CliError>;

fn lattice_spectrum(spec: &SystemSpec) -> Res<Spectrum> {
    Ok(diagonalize(&build_system(&spec.lattice_only())?)?)
}

fn full_spectrum(spec: &SystemSpec) -> Res<Spectrum> {
    Ok(diagonalize(&build_system(spec)?)?)
}

fn need_qubits(spec: &SystemSpec) -> Res<[edgelink::lattice::Qubit; 2]> {
    spec.qubits
        .ok_or_else(|| CliError::validation("spec", "this task needs qubits (eps1/g1) in the system"))
}

/// Runs `f` over `items` on the current pool and keeps input order.
pub fn ordered_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

pub fn run_task(task: Task, spec: &SystemSpec, p: &serde_json::Map<String, Value>, tol: f64) -> Res<Output> {
    match task {
        Task::Spectrum => {
            params::<NoParams>(task, p)?;
            spectrum(spec)
        }
        Task::Bands => bands(spec, params(task, p)?),
        Task::Calibrate => calibrate(spec, params(task, p)?),
        Task::Dynamics => dynamics(spec, params(task, p)?),
        Task::BoundaryRoots => {
            params::<NoParams>(task, p)?;
            boundary_roots(spec, tol)
        }
        Task::OmegaSweep => omega_sweep(spec, params(task, p)?),
        Task::FidelitySweep => fidelity_sweep(spec, params(task, p)?),
        Task::DistanceScan => distance_scan(spec, params(task, p)?),
        Task::Asym => asym(spec, params(task, p)?),
        Task::Bonds => {
            params::<NoParams>(task, p)?;
            bonds(spec)
        }
    }
}

fn spectrum(spec: &SystemSpec) -> Res<Output> {
    let mut s = full_spectrum(spec)?;
    if spec.is_symmetric() {
        s = classify_parity(&s, &build_symmetry_operator(spec)?)?;
    }
    let weights = s.qubit_weights();
    let mut t = Table::new(&["index", "energy", "band", "parity", "weight_q1", "weight_q2"]);
    for n in 0..s.len() {
        let label = s.labels()[n];
        let w = weights.as_ref().map(|w| w[n]);
        t.push(vec![
            n.into(),
            s.eigenvalues()[n].into(),
            label.band.as_str().into(),
            label.parity.map(|p| Cell::Int(p.as_i8() as i64)).unwrap_or(Cell::Empty),
            w.map(|w| w.0).into(),
            w.map(|w| w.1).into(),
        ]);
    }
    Ok(Output::Table(t))
}

fn bands(spec: &SystemSpec, p: BandsParams) -> Res<Output> {
    if p.kx_samples < 2 || p.ky_samples < 2 {
        return Err(CliError::validation(
            "task_params",
            "kx_samples and ky_samples must be >= 2",
        ));
    }
    let j = spec.j;
    let mut t = Table::new(&[
        "kind",
        "branch",
        "kx",
        "lambda",
        "decay_factor",
        "group_velocity",
        "edge_amplitude",
        "localized",
    ]);
    let kxs: Vec<f64> = (0..p.kx_samples)
        .map(|k| -PI + 2.0 * PI * k as f64 / (p.kx_samples - 1) as f64)
        .collect();
    for &kx in &kxs {
        let mut lo = [f64::INFINITY; 4];
        let mut hi = [f64::NEG_INFINITY; 4];
        for k in 0..p.ky_samples {
            let ky = -PI + 2.0 * PI * k as f64 / (p.ky_samples - 1) as f64;
            for (b, e) in bulk_dispersion(kx, ky, j).into_iter().enumerate() {
                lo[b] = lo[b].min(e);
                hi[b] = hi[b].max(e);
            }
        }
        for b in 0..4 {
            for (kind, e) in [("bulk-min", lo[b]), ("bulk-max", hi[b])] {
                t.push(vec![
                    kind.into(),
                    b.into(),
                    kx.into(),
                    e.into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                ]);
            }
        }
        for (variant, name) in [
            (EdgeVariant::BlackEdge, "black-edge"),
            (EdgeVariant::BlueEdge, "blue-edge"),
        ] {
            for d in edge_dispersion(kx, variant, j) {
                t.push(vec![
                    name.into(),
                    (d.branch_offset as usize).into(),
                    kx.into(),
                    d.lambda.into(),
                    d.decay_factor.into(),
                    d.group_velocity.into(),
                    d.edge_amplitude.into(),
                    Cell::Int(d.localized as i64),
                ]);
            }
        }
    }
    Ok(Output::Table(t))
}

fn calibration_json(cal: &EdgeCalibration) -> Value {
    json!({
        "E_l": cal.e_l,
        "E_next": cal.e_next,
        "delta_E": cal.delta_e,
        "rho_e": cal.rho_e,
        "A_f": cal.a_f,
        "B_f": cal.b_f,
        "lambda_mid": cal.lambda_mid,
        "parity_l": cal.parity_l.as_i8(),
        "l": cal.l,
        "size": cal.size,
    })
}

fn calibrate(spec: &SystemSpec, p: CalibrateParams) -> Res<Output> {
    let cal = edge_window(&lattice_spectrum(spec)?, p.eps_tilde)?;
    Ok(Output::Json(calibration_json(&cal)))
}

fn dynamics(spec: &SystemSpec, p: DynamicsParams) -> Res<Output> {
    if !(p.tmax > 0.0) || !p.tmax.is_finite() || p.samples < 2 {
        return Err(CliError::validation("task_params", "need tmax > 0 and samples >= 2"));
    }
    need_qubits(spec)?;
    let s = full_spectrum(spec)?;
    let initial = match p.initial {
        Initial::Q1 => 0,
        Initial::Q2 => s.len() - 1,
    };
    let trace = evolve(&s, initial, &uniform_times(p.tmax, p.samples))?;
    let mut t = Table::new(&["t", "p_q1", "p_q2", "p_lat"]);
    for k in 0..trace.len() {
        t.push(vec![
            trace.times[k].into(),
            trace.p_q1[k].into(),
            trace.p_q2[k].into(),
            trace.p_lat[k].into(),
        ]);
    }
    if p.analyze {
        let a = analyze_trace(&trace)?;
        let summary = json!({
            "omega": a.omega,
            "fidelity": a.fidelity,
            "max_transfer": a.max_transfer,
            "periods": a.periods,
        });
        return Ok(Output::Annotated(t, summary));
    }
    Ok(Output::Table(t))
}

fn corner_branches(lat: &Spectrum) -> Res<ExactBranches> {
    let n = lat.lattice().len();
    Ok(ExactBranches::new(&CouplingSums::from_spectrum(lat, [1, n])?)?)
}

/// Each root must sit where `g^2 f - (lambda - eps)` changes sign within `tol`.
fn check_located<B: BranchFunction>(b: &B, roots: &[BoundaryRoot], eps: f64, g: f64, tol: f64) -> Res<()> {
    for r in roots {
        let poles = b.poles(r.parity);
        if poles.iter().any(|p| (p - r.lambda).abs() <= tol) {
            continue;
        }
        let h = |x: f64| g * g * b.eval(r.parity, x).0 - (x - eps);
        if !(h(r.lambda - tol) >= 0.0 && h(r.lambda + tol) <= 0.0) {
            return Err(CliError {
                code: 3,
                kind: "solver".into(),
                message: format!("root {} not located to within {tol:e}", r.lambda),
            });
        }
    }
    Ok(())
}

fn boundary_roots(spec: &SystemSpec, tol: f64) -> Res<Output> {
    let [q1, _] = need_qubits(spec)?;
    if !spec.is_symmetric() {
        return Err(
            edgelink::Error::SymmetryUnavailable("boundary roots need a symmetric square system".into()).into(),
        );
    }
    let b = corner_branches(&lattice_spectrum(spec)?)?;
    let roots = eigenvalues_boundary(&b, q1.epsilon, q1.g)?;
    check_located(&b, &roots, q1.epsilon, q1.g, tol)?;
    let mut t = Table::new(&["parity", "lambda", "qubit_weight", "residual"]);
    for r in roots {
        t.push(vec![
            Cell::Int(r.parity.as_i8() as i64),
            r.lambda.into(),
            r.qubit_weight.into(),
            r.residual.into(),
        ]);
    }
    Ok(Output::Table(t))
}

fn window_fractions(n: usize) -> Res<Vec<f64>> {
    if n == 0 {
        return Err(CliError::validation(
            "task_params",
            "need at least one point per window",
        ));
    }
    Ok((0..n).map(|k| (k as f64 + 0.5) / n as f64).collect())
}

fn check_g0(g0: &[f64]) -> Res<()> {
    if g0.is_empty() || g0.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(CliError::validation(
            "task_params",
            "g0 must be a non-empty list of values >= 0",
        ));
    }
    Ok(())
}

/// `(Omega/Delta E, F)` from the exact boundary roots.
fn exact_point(b: &ExactBranches, cal: &EdgeCalibration, eps: f64, g: f64) -> Result<(f64, f64), edgelink::Error> {
    let mut roots = eigenvalues_boundary(b, eps, g)?;
    let f = fidelity_from_roots(&roots)?.fidelity;
    roots.sort_by(|a, c| c.qubit_weight.total_cmp(&a.qubit_weight));
    let omega = (roots[0].lambda - roots[1].lambda).abs();
    Ok((omega / cal.delta_e, f))
}

fn error_row(message: String, width: usize, leading: Vec<Cell>) -> Vec<Cell> {
    let mut row = leading;
    row.push(Cell::Text(message));
    row.resize(width, Cell::Empty);
    row
}

fn omega_sweep(spec: &SystemSpec, p: OmegaSweepParams) -> Res<Output> {
    check_g0(&p.g0)?;
    let ws = window_fractions(p.w_points)?;
    let lat = lattice_spectrum(spec)?;
    let cal = edge_window(&lat, p.window)?;
    let b = corner_branches(&lat)?;
    let columns = [
        "g2L",
        "eps_tilde_frac",
        "error",
        "g",
        "eps_tilde",
        "eps",
        "omega_over_dE",
        "omega_model_over_dE",
        "omega_mid_bound_over_dE",
        "omega_res_bound_over_dE",
        "F_numeric",
        "F_closed",
    ];
    let grid: Vec<(f64, f64)> = p.g0.iter().flat_map(|&g0| ws.iter().map(move |&w| (g0, w))).collect();
    let rows = ordered_map(&grid, |&(g0, w)| {
        let run = || -> Result<Vec<Cell>, edgelink::Error> {
            let g = cal.g_from_g0(g0);
            let sc = ScaledCoupling::from_w(&cal, w, g0)?;
            let eps = sc.bare_eps(&cal, g);
            let (omega, f) = exact_point(&b, &cal, eps, g)?;
            let model = edgelink::npsolver::scaled_pair(&sc, &cal)?;
            let (mid, res) = omega_bounds(&cal, g)?;
            Ok(vec![
                g0.into(),
                w.into(),
                Cell::Empty,
                g.into(),
                sc.eps_tilde.into(),
                eps.into(),
                omega.into(),
                (model.omega_eff / cal.delta_e).into(),
                mid.into(),
                res.into(),
                f.into(),
                fidelity_closed_form(&sc).into(),
            ])
        };
        run().unwrap_or_else(|e| error_row(e.to_string(), columns.len(), vec![g0.into(), w.into()]))
    });
    let mut t = Table::new(&columns);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(Output::Table(t))
}

fn fidelity_sweep(spec: &SystemSpec, p: FidelitySweepParams) -> Res<Output> {
    check_g0(&p.g0)?;
    let ws = window_fractions(p.w_points)?;
    let sizes = p.sizes.clone().unwrap_or_else(|| vec![spec.lx]);
    let columns = [
        "L",
        "g2L",
        "eps_tilde_frac",
        "error",
        "g",
        "eps_tilde",
        "eps",
        "omega_over_dE",
        "F_numeric",
        "F_closed",
        "F_closed_resonance",
        "F_closed_midpoint",
    ];
    let mut t = Table::new(&columns);
    for l in sizes {
        let lattice = SystemSpec {
            lx: l,
            ly: l,
            ..spec.lattice_only()
        };
        let prepared = lattice_spectrum(&lattice).and_then(|lat| {
            let cal = edge_window(&lat, p.window)?;
            Ok((corner_branches(&lat)?, cal))
        });
        let (b, cal) = match prepared {
            Ok(x) => x,
            Err(e) => {
                t.push(error_row(
                    e.message,
                    columns.len(),
                    vec![l.into(), Cell::Empty, Cell::Empty],
                ));
                continue;
            }
        };
        let grid: Vec<(f64, f64)> = p.g0.iter().flat_map(|&g0| ws.iter().map(move |&w| (g0, w))).collect();
        let rows = ordered_map(&grid, |&(g0, w)| {
            let run = || -> Result<Vec<Cell>, edgelink::Error> {
                let g = cal.g_from_g0(g0);
                let sc = ScaledCoupling::from_w(&cal, w, g0)?;
                let eps = sc.bare_eps(&cal, g);
                let (omega, f) = exact_point(&b, &cal, eps, g)?;
                let closed_at = |w: f64| ScaledCoupling::from_w(&cal, w, g0).map(|s| fidelity_closed_form(&s));
                Ok(vec![
                    l.into(),
                    g0.into(),
                    w.into(),
                    Cell::Empty,
                    g.into(),
                    sc.eps_tilde.into(),
                    eps.into(),
                    omega.into(),
                    f.into(),
                    fidelity_closed_form(&sc).into(),
                    closed_at(0.0)?.into(),
                    closed_at(0.5)?.into(),
                ])
            };
            run().unwrap_or_else(|e| error_row(e.to_string(), columns.len(), vec![l.into(), g0.into(), w.into()]))
        });
        rows.into_iter().for_each(|r| t.push(r));
    }
    Ok(Output::Table(t))
}

fn distance_scan(spec: &SystemSpec, p: DistanceScanParams) -> Res<Output> {
    check_g0(&p.g0)?;
    let fracs = window_fractions(p.eps_points)?;
    if p.d.iter().any(|&d| d == 0 || d > spec.lx - 1) {
        return Err(CliError::validation(
            "task_params",
            format!("d must lie in 1..={}", spec.lx - 1),
        ));
    }
    let lat = lattice_spectrum(spec)?;
    let e = lat.eigenvalues();
    let edge: Vec<f64> = (0..lat.len())
        .filter(|&n| lat.labels()[n].band == Band::Edge)
        .map(|n| e[n])
        .collect();
    let e_l = edge
        .iter()
        .copied()
        .filter(|x| *x <= p.window)
        .fold(f64::NEG_INFINITY, f64::max);
    let e_next = edge
        .iter()
        .copied()
        .filter(|x| *x > p.window)
        .fold(f64::INFINITY, f64::min);
    if !(e_l.is_finite() && e_next.is_finite()) {
        return Err(edgelink::Error::Calibration(format!("no edge states bracket {}", p.window)).into());
    }
    let size = spec.lx.min(spec.ly) as f64;
    let columns = [
        "d",
        "g2L",
        "eps_index",
        "error",
        "g",
        "eps",
        "omega_eff",
        "omega_over_dE",
        "fidelity",
    ];
    let mut grid = Vec::new();
    for &g0 in &p.g0 {
        for (k, &f) in fracs.iter().enumerate() {
            for &d in &p.d {
                grid.push((d, g0, k, e_l + f * (e_next - e_l)));
            }
        }
    }
    let base = spec.lattice_only();
    let rows = ordered_map(&grid, |&(d, g0, k, eps)| {
        let g = (g0 / size).sqrt() * spec.j;
        let run = || -> Result<Vec<Cell>, CliError> {
            let s = full_spectrum(&base.clone().with_edge_qubits(d, eps, g))?;
            let pair = two_level_from_spectrum(&s)?;
            let f = fidelity_from_spectrum(&s)?.fidelity;
            Ok(vec![
                d.into(),
                g0.into(),
                k.into(),
                Cell::Empty,
                g.into(),
                eps.into(),
                pair.omega_eff.into(),
                (pair.omega_eff / (e_next - e_l)).into(),
                f.into(),
            ])
        };
        run().unwrap_or_else(|e| error_row(e.message, columns.len(), vec![d.into(), g0.into(), k.into()]))
    });
    let mut t = Table::new(&columns);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(Output::Table(t))
}

fn asym(spec: &SystemSpec, p: AsymParams) -> Res<Output> {
    let [q1, q2] = need_qubits(spec)?;
    let lat = lattice_spectrum(spec)?;
    let sums = CouplingSums::from_spectrum(&lat, [q1.site, q2.site])?;
    let mean = 0.5 * (q1.epsilon + q2.epsilon);
    let cal = edge_window(&lat, mean).ok();
    let at = match (p.at, &cal) {
        (Some(at), _) => at,
        (None, Some(c)) => c.lambda_mid,
        (None, None) => {
            return Err(
                edgelink::Error::Calibration(format!("no edge window around {mean}; give task_params.at")).into(),
            )
        }
    };
    let mut cfg = AsymConfig::from_sums(&sums, at, [q1.epsilon, q2.epsilon], [q1.g, q2.g])?;
    cfg.delta_e = cal.as_ref().map(|c| c.delta_e);
    let r = asym_metrics(&cfg)?;
    let mut out = json!({
        "chi": r.chi,
        "lambda": r.lambda,
        "omega_eff": r.omega_eff,
        "k_pr": r.k_pr,
        "residual": r.residual,
        "limits": r.limits,
        "outside_constant_f": r.outside_constant_f,
        "f_plus": cfg.f_plus,
        "f_minus": cfg.f_minus,
        "at": at,
    });
    if p.refine {
        let x = refine_exact(&cfg, &sums)?;
        out["exact"] = json!({ "lambda": x.lambda, "weights_q1": x.weights_q1, "omega_eff": x.omega_eff });
    }
    Ok(Output::Json(out))
}

fn bonds(spec: &SystemSpec) -> Res<Output> {
    let h = build_system(spec)?;
    let lat = h.lattice();
    let mut t = Table::new(&[
        "from", "to", "from_row", "from_col", "to_row", "to_col", "re", "im", "phase",
    ]);
    for b in h.bond_table() {
        let (fr, fc) = lat.coords(b.from);
        let (tr, tc) = lat.coords(b.to);
        t.push(vec![
            b.from.into(),
            b.to.into(),
            fr.into(),
            fc.into(),
            tr.into(),
            tc.into(),
            b.amplitude.re.into(),
            b.amplitude.im.into(),
            b.phase().into(),
        ]);
    }
    Ok(Output::Table(t))
}
