//! Dense diagonalization, analytic band structure, and edge-window calibration.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use faer::linalg::solvers::SelfAdjointEigen;
use faer::{c64, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{max_asymmetry, HamiltonianMatrix, Lattice, Qubit};
use crate::perturb::CouplingSums;

/// Upper edge of the inner bulk band, `2 sqrt(1 - 1/sqrt 2)` in units of J.
pub fn inner_band_edge() -> f64 {
    2.0 * (1.0 - FRAC_1_SQRT_2).sqrt()
}

/// Lower edge of the outer bulk band, `2 sqrt(1 + 1/sqrt 2)` in units of J.
pub fn outer_band_edge() -> f64 {
    2.0 * (1.0 + FRAC_1_SQRT_2).sqrt()
}

/// Spectral radius of the infinite lattice, `2 sqrt 2` in units of J.
pub const BAND_TOP: f64 = 2.0 * SQRT_2;

/// Finite-size tolerance around the analytic band edges, in units of J.
pub const BAND_TOLERANCE: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Band {
    Bulk,
    Edge,
    QubitDominated,
}

impl Band {
    pub fn as_str(&self) -> &'static str {
        match self {
            Band::Bulk => "bulk",
            Band::Edge => "edge",
            Band::QubitDominated => "qubit-dominated",
        }
    }
}

/// Eigenvalue of the symmetry operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Plus => Parity::Minus,
            Parity::Minus => Parity::Plus,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s >= 0.0 {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Parity::Plus => 1,
            Parity::Minus => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateLabel {
    pub band: Band,
    pub parity: Option<Parity>,
}

/// Eigen-decomposition with ascending eigenvalues and unit-norm columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    vectors: Mat<c64>,
    labels: Vec<StateLabel>,
    lattice: Lattice,
    j: f64,
    qubits: Option<[Qubit; 2]>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are eigenvectors.
    pub fn vectors(&self) -> MatRef<'_, c64> {
        self.vectors.as_ref()
    }

    /// Amplitude of state `n` on basis index `i`.
    pub fn amplitude(&self, i: usize, n: usize) -> c64 {
        self.vectors[(i, n)]
    }

    pub fn labels(&self) -> &[StateLabel] {
        &self.labels
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn hopping(&self) -> f64 {
        self.j
    }

    pub fn qubits(&self) -> Option<&[Qubit; 2]> {
        self.qubits.as_ref()
    }

    pub fn has_qubits(&self) -> bool {
        self.qubits.is_some()
    }

    /// Basis index of 1-based lattice site `site`.
    pub fn basis_index(&self, site: usize) -> usize {
        if self.has_qubits() {
            site
        } else {
            site - 1
        }
    }

    /// Basis indices of Q1 and Q2, when qubits are attached.
    pub fn qubit_indices(&self) -> Option<(usize, usize)> {
        self.qubits.map(|_| (0, self.lattice.len() + 1))
    }

    /// `(|psi_n(Q1)|^2, |psi_n(Q2)|^2)` for every state.
    pub fn qubit_weights(&self) -> Option<Vec<(f64, f64)>> {
        let (a, b) = self.qubit_indices()?;
        Some(
            (0..self.len())
                .map(|n| (self.vectors[(a, n)].norm_sqr(), self.vectors[(b, n)].norm_sqr()))
                .collect(),
        )
    }

    pub(crate) fn set_parities(&mut self, parities: &[Parity]) {
        for (label, p) in self.labels.iter_mut().zip(parities) {
            label.parity = Some(*p);
        }
    }

    pub(crate) fn vectors_mut(&mut self) -> &mut Mat<c64> {
        &mut self.vectors
    }

    /// Sum of `|H psi - lambda psi|` over states, the worst one.
    pub fn max_residual(&self, h: &HamiltonianMatrix) -> f64 {
        let hv = h.matrix() * self.vectors.as_ref();
        let mut worst = 0.0_f64;
        for n in 0..self.len() {
            let mut r = 0.0;
            for i in 0..self.vectors.nrows() {
                r += (hv[(i, n)] - self.vectors[(i, n)] * self.eigenvalues[n]).norm_sqr();
            }
            worst = worst.max(r.sqrt());
        }
        worst
    }
}

/// Full eigen-decomposition with deterministic phases and band labels.
pub fn diagonalize(h: &HamiltonianMatrix) -> Result<Spectrum> {
    let asym = max_asymmetry(h.matrix());
    if asym > 1e-12 {
        return Err(Error::Integrity(asym));
    }
    let (eigenvalues, vectors) = eigh(h.matrix())?;
    let mut spectrum = Spectrum {
        labels: vec![
            StateLabel {
                band: Band::Bulk,
                parity: None,
            };
            eigenvalues.len()
        ],
        eigenvalues,
        vectors,
        lattice: h.lattice(),
        j: h.hopping(),
        qubits: h.qubits().copied(),
    };
    label_bands(&mut spectrum);
    Ok(spectrum)
}

/// Ascending eigenpairs of a Hermitian matrix with phase-fixed columns.
pub(crate) fn eigh(m: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let evd = SelfAdjointEigen::new(m, Side::Lower).map_err(|_| Error::Eigen)?;
    let n = m.nrows();
    let s = evd.S();
    let eigenvalues: Vec<f64> = (0..n).map(|k| s[k].re).collect();
    let mut vectors = evd.U().to_owned();
    for k in 0..n {
        fix_phase(&mut vectors, k);
    }
    Ok((eigenvalues, vectors))
}

/// Rotate column `k` so its first near-maximal component is real positive.
pub(crate) fn fix_phase(v: &mut Mat<c64>, k: usize) {
    let rows = v.nrows();
    let max = (0..rows).map(|i| v[(i, k)].norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = (0..rows).find(|&i| v[(i, k)].norm() >= max - 1e-9).unwrap_or(0);
    let a = v[(pivot, k)];
    let rot = a.conj() / a.norm();
    for i in 0..rows {
        v[(i, k)] *= rot;
    }
}

/// Band of a lattice energy under the tolerance band; ties go to edge.
pub fn band_of(energy: f64, j: f64) -> Band {
    let e = energy.abs() / j;
    if e >= inner_band_edge() - BAND_TOLERANCE && e <= outer_band_edge() + BAND_TOLERANCE {
        Band::Edge
    } else {
        Band::Bulk
    }
}

fn label_bands(s: &mut Spectrum) {
    let weights = s.qubit_weights();
    for n in 0..s.len() {
        let dominated = weights.as_ref().is_some_and(|w| w[n].0 + w[n].1 > 0.5);
        s.labels[n].band = if dominated {
            Band::QubitDominated
        } else {
            band_of(s.eigenvalues[n], s.j)
        };
    }
}

/// Recompute band labels; parity labels are kept.
pub fn classify_states(spectrum: &Spectrum) -> Spectrum {
    let mut s = spectrum.clone();
    label_bands(&mut s);
    s
}

/// The four bulk energies at `(kx, ky)`, ascending.
pub fn bulk_dispersion(kx: f64, ky: f64, j: f64) -> [f64; 4] {
    let root = (1.0 - (kx.sin().powi(2) + ky.sin().powi(2)) / 4.0).sqrt();
    let lo = 2.0 * j * (1.0 - root).max(0.0).sqrt();
    let hi = 2.0 * j * (1.0 + root).sqrt();
    [-hi, -lo, lo, hi]
}

/// Residual of the bulk secular quartic at energy `lambda`.
pub fn bulk_quartic(lambda: f64, kx: f64, ky: f64, j: f64) -> f64 {
    let y = lambda / (2.0 * j);
    let y2 = y * y;
    y2 * y2 - 2.0 * y2 + (kx.sin().powi(2) + ky.sin().powi(2)) / 4.0
}

/// Which sublattice forms the lower edge row of the strip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeVariant {
    BlackEdge,
    BlueEdge,
}

/// One edge-mode root of the strip secular equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DispersionPoint {
    pub kx: f64,
    pub lambda: f64,
    pub decay_factor: f64,
    pub group_velocity: f64,
    /// Row-1 amplitude of the column profile, when the root decays into the strip.
    pub edge_amplitude: Option<f64>,
    pub branch_offset: u8,
    pub localized: bool,
}

/// Row potentials `2 sin(kx/2 + pi/2 (r - r0))` for `r = 1, 2, 3`.
fn row_terms(kx: f64, r0: u8) -> [f64; 3] {
    let mut t = [0.0; 3];
    for (i, r) in (1..=3).enumerate() {
        t[i] = 2.0 * (kx / 2.0 + PI / 2.0 * (r as f64 - r0 as f64)).sin();
    }
    t
}

/// Coefficients `(a, b, c)` of the monic cubic `x^3 + a x^2 + b x + c` whose
/// roots make `a_4 = 0` for a strip starting at `a_0 = 0, a_1 = 1`.
fn edge_cubic(kx: f64, r0: u8) -> (f64, f64, f64) {
    // a4 = -(x - t3)(x - t2)(x - t1) + (x - t1) + (x - t3) with a4 = 0
    let [t1, t2, t3] = row_terms(kx, r0);
    let e1 = t1 + t2 + t3;
    let e2 = t1 * t2 + t1 * t3 + t2 * t3;
    let e3 = t1 * t2 * t3;
    (-e1, e2 - 2.0, -e3 + t1 + t3)
}

/// Recurrence coefficients `a_1..a_3` (with `a_0 = 0`, `a_1 = 1`) at energy `x = lambda/J`.
fn strip_coefficients(x: f64, kx: f64, r0: u8) -> [f64; 3] {
    let [t1, t2, _] = row_terms(kx, r0);
    let a1 = 1.0;
    let a2 = -a1 * (x - t1);
    let a3 = -a2 * (x - t2) - a1;
    [a1, a2, a3]
}

fn edge_roots(kx: f64, r0: u8) -> Vec<f64> {
    let (a, b, c) = edge_cubic(kx, r0);
    crate::roots::real_cubic_roots(a, b, c)
}

/// Edge-mode roots at `kx` for both sign choices of the chosen variant.
pub fn edge_dispersion(kx: f64, variant: EdgeVariant, j: f64) -> Vec<DispersionPoint> {
    const DK: f64 = 1e-4;
    let offsets: [u8; 2] = match variant {
        EdgeVariant::BlackEdge => [0, 2],
        EdgeVariant::BlueEdge => [1, 3],
    };
    let mut out = Vec::with_capacity(6);
    for r0 in offsets {
        for x in edge_roots(kx, r0) {
            let [a1, a2, a3] = strip_coefficients(x, kx, r0);
            // a4 = 0 makes a5 = -a3, so the column profile repeats with ratio d.
            let d = -a3 / a1;
            let nearest = |k: f64| {
                edge_roots(k, r0)
                    .into_iter()
                    .min_by(|p, q| (p - x).abs().total_cmp(&(q - x).abs()))
                    .unwrap_or(f64::NAN)
            };
            let nu = j * (nearest(kx + DK) - nearest(kx - DK)) / (2.0 * DK);
            let localized = d.abs() < 1.0;
            let edge_amplitude = localized.then(|| {
                let cell = a1 * a1 + a2 * a2 + a3 * a3;
                (a1 * a1 * (1.0 - d * d) / cell).sqrt()
            });
            out.push(DispersionPoint {
                kx,
                lambda: x * j,
                decay_factor: d,
                group_velocity: nu,
                edge_amplitude,
                branch_offset: r0,
                localized,
            });
        }
    }
    out
}

/// Residual of the printed strip cubic for the given variant and sign choice.
pub fn edge_cubic_residual(lambda: f64, kx: f64, variant: EdgeVariant, upper: bool, j: f64) -> f64 {
    let x = lambda / j;
    let s = (kx / 2.0).sin();
    let c = (kx / 2.0).cos();
    let sigma = if upper { 1.0 } else { -1.0 };
    match variant {
        EdgeVariant::BlackEdge => 2.0 * x - (x * x - 4.0 * c * c) * (x + sigma * 2.0 * s),
        EdgeVariant::BlueEdge => 2.0 * x - (x * x - 4.0 * s * s) * (x + sigma * 2.0 * c),
    }
}

/// Edge-window constants around a working energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCalibration {
    /// Spectrum index of `E_l`.
    pub l: usize,
    /// Spectrum index of `E_{l+1}`.
    pub l_next: usize,
    pub e_l: f64,
    pub e_next: f64,
    pub delta_e: f64,
    pub rho_e: f64,
    pub a_f: f64,
    pub b_f: f64,
    pub lambda_mid: f64,
    /// Parity of the state at `E_l`; the cot branch belongs to it.
    pub parity_l: Parity,
    /// Linear size entering `rho_e` and `G0`.
    pub size: usize,
    pub j: f64,
}

impl EdgeCalibration {
    /// `(lambda - E_l) / Delta E`.
    pub fn scaled(&self, lambda: f64) -> f64 {
        (lambda - self.e_l) / self.delta_e
    }

    /// `E_l + x Delta E`.
    pub fn unscaled(&self, x: f64) -> f64 {
        self.e_l + x * self.delta_e
    }

    /// `g^2 L / J^2`.
    pub fn g0(&self, g: f64) -> f64 {
        g * g * self.size as f64 / (self.j * self.j)
    }

    /// Inverse of [`EdgeCalibration::g0`].
    pub fn g_from_g0(&self, g0: f64) -> f64 {
        self.j * (g0 / self.size as f64).sqrt()
    }
}

/// Locate `E_l <= eps_tilde <= E_{l+1}` among edge states of an isolated
/// square lattice and evaluate the window constants at the midpoint.
pub fn edge_window(spectrum: &Spectrum, eps_tilde: f64) -> Result<EdgeCalibration> {
    if spectrum.has_qubits() {
        return Err(Error::Input("edge_window needs the isolated lattice spectrum".into()));
    }
    let j = spectrum.hopping();
    if band_of(eps_tilde, j) != Band::Edge {
        return Err(Error::Calibration(format!(
            "energy {eps_tilde} lies in a bulk band; the edge-state picture does not apply"
        )));
    }
    let e = spectrum.eigenvalues();
    let edge: Vec<usize> = (0..e.len())
        .filter(|&n| spectrum.labels()[n].band == Band::Edge)
        .collect();
    let below = edge.iter().copied().filter(|&n| e[n] <= eps_tilde).next_back();
    let above = edge.iter().copied().find(|&n| e[n] > eps_tilde);
    let (l, l_next) = match (below, above) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Calibration(format!("no edge states bracket {eps_tilde}"))),
    };
    let lat = spectrum.lattice();
    let sums = CouplingSums::from_spectrum(spectrum, [1, lat.len()])?;
    let e_l = e[l];
    let e_next = e[l_next];
    let delta_e = e_next - e_l;
    if !(delta_e > 0.0) {
        return Err(Error::Calibration(format!("zero level spacing at {e_l}")));
    }
    let lambda_mid = 0.5 * (e_l + e_next);
    let parity_l = sums.parity_of(l)?;
    let at_mid = sums.evaluate(lambda_mid)?;
    let (f_l, f_other) = match parity_l {
        Parity::Plus => (at_mid.f_plus, at_mid.f_minus),
        Parity::Minus => (at_mid.f_minus, at_mid.f_plus),
    };
    let size = lat.lx.min(lat.ly);
    Ok(EdgeCalibration {
        l,
        l_next,
        e_l,
        e_next,
        delta_e,
        rho_e: j / (size as f64 * delta_e),
        a_f: j / (2.0 * PI) * (f_l - f_other),
        b_f: j / 2.0 * (at_mid.f_plus + at_mid.f_minus),
        lambda_mid,
        parity_l,
        size,
        j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_square_system, SystemSpec};

    #[test]
    fn band_edges_match_closed_forms() {
        assert!((inner_band_edge() - 1.082392).abs() < 1e-6);
        assert!((outer_band_edge() - 2.613126).abs() < 1e-6);
        let b = bulk_dispersion(PI / 2.0, PI / 2.0, 1.0);
        assert!((b[2] - inner_band_edge()).abs() < 1e-12);
        assert!((b[3] - outer_band_edge()).abs() < 1e-12);
        let z = bulk_dispersion(0.0, 0.0, 1.0);
        assert_eq!(z[1], 0.0);
        assert!((z[3] - BAND_TOP).abs() < 1e-15);
    }

    #[test]
    fn band_labels() {
        assert_eq!(band_of(0.3, 1.0), Band::Bulk);
        assert_eq!(band_of(-1.75, 1.0), Band::Edge);
        assert_eq!(band_of(1.07, 1.0), Band::Edge);
        assert_eq!(band_of(2.7, 1.0), Band::Bulk);
    }

    #[test]
    fn strip_cubic_agrees_with_printed_black_edge_form() {
        for k in 0..20 {
            // kx = -pi makes the printed ratio 0/0
            let kx = -PI + 0.15 + 0.31 * k as f64;
            for (r0, upper) in [(0u8, true), (2u8, false)] {
                for x in edge_roots(kx, r0) {
                    let res = edge_cubic_residual(x, kx, EdgeVariant::BlackEdge, upper, 1.0);
                    assert!(res.abs() < 1e-12, "kx {kx} r0 {r0} x {x}: {res}");
                    let c = (kx / 2.0).cos();
                    let sigma = if upper { 1.0 } else { -1.0 };
                    let d_printed = -(x - sigma * 2.0 * c) / (x + sigma * 2.0 * c);
                    let [a1, _, a3] = strip_coefficients(x, kx, r0);
                    assert!(
                        (d_printed + a3 / a1).abs() < 1e-9 * (1.0 + d_printed.abs()),
                        "kx {kx} r0 {r0} x {x}: {d_printed} vs {}",
                        -a3 / a1
                    );
                }
            }
        }
    }

    #[test]
    fn diagonalize_small_system() {
        let h = build_square_system(&SystemSpec::square_with_qubits(5, -1.75, 0.0)).unwrap();
        let s = diagonalize(&h).unwrap();
        assert_eq!(s.len(), 27);
        let at_eps = s.eigenvalues().iter().filter(|e| (**e + 1.75).abs() < 1e-12).count();
        assert_eq!(at_eps, 2);
        assert!(s.max_residual(&h) < 1e-12);
    }
}
