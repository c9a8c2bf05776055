//! Single-excitation Hamiltonian of the quarter-flux Hofstadter lattice with
//! two attached qubits.
//!
//! Sites are addressed by 1-based `(row, col)` pairs and the linear index
//! `j(r, c) = (r - 1) * lx + c`. When qubits are attached the basis is
//! `[Q1, 1, ..., lx*ly, Q2]`, so lattice site `j` sits at basis index `j`;
//! without qubits it sits at `j - 1`.
//!
//! The gauge is fixed: blue sites sit at even `(r, c)` and every bulk row of
//! `H psi = lambda psi` reads
//!
//! ```text
//! even c: -iJ psi(r+1,c) + iJ psi(r-1,c) + (-1)^r J psi(r,c-1) - J psi(r,c+1)
//! odd  c:  -J psi(r+1,c) -  J psi(r-1,c) + (-1)^r J psi(r,c+1) - J psi(r,c-1)
//! ```
//!
//! which puts a flux of pi/2 through every plaquette.

use std::f64::consts::{PI, TAU};

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Basis index of the first qubit.
pub const Q1: usize = 0;

/// Which sublattice rows carry the blue (p-like) sites.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlueSites {
    /// Blue sites at even row and even column; corners and edges are black.
    #[default]
    EvenRows,
    /// Blue sites at odd row and even column (blue first row).
    OddRows,
}

/// One qubit: bare energy, coupling, and the 1-based lattice site it couples to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Qubit {
    pub epsilon: f64,
    pub g: f64,
    pub site: usize,
}

/// Lattice geometry, gauge choice, and qubit attachment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemDoc", into = "SystemDoc")]
pub struct SystemSpec {
    pub lx: usize,
    pub ly: usize,
    /// Hopping energy; all energies are in units of this.
    pub j: f64,
    pub qubits: Option<[Qubit; 2]>,
    /// Edge separation for the rectangular configuration.
    pub d: Option<usize>,
    pub blue_sites: BlueSites,
}

impl SystemSpec {
    /// Isolated `l x l` lattice.
    pub fn square(l: usize) -> Self {
        Self::rect(l, l)
    }

    /// Isolated `lx x ly` lattice.
    pub fn rect(lx: usize, ly: usize) -> Self {
        SystemSpec {
            lx,
            ly,
            j: 1.0,
            qubits: None,
            d: None,
            blue_sites: BlueSites::EvenRows,
        }
    }

    /// Symmetric qubits on opposite corners (sites 1 and `l^2`).
    pub fn square_with_qubits(l: usize, epsilon: f64, g: f64) -> Self {
        Self::square(l).with_corner_qubits(epsilon, g, epsilon, g)
    }

    pub fn with_corner_qubits(mut self, eps1: f64, g1: f64, eps2: f64, g2: f64) -> Self {
        let last = self.lx * self.ly;
        self.qubits = Some([
            Qubit {
                epsilon: eps1,
                g: g1,
                site: 1,
            },
            Qubit {
                epsilon: eps2,
                g: g2,
                site: last,
            },
        ]);
        self.d = None;
        self
    }

    /// Symmetric qubits on the first row, `d` sites apart around its center.
    pub fn with_edge_qubits(mut self, d: usize, epsilon: f64, g: f64) -> Self {
        let (s1, s2) = edge_sites(self.lx, d);
        self.qubits = Some([Qubit { epsilon, g, site: s1 }, Qubit { epsilon, g, site: s2 }]);
        self.d = Some(d);
        self
    }

    pub fn with_hopping(mut self, j: f64) -> Self {
        self.j = j;
        self
    }

    pub fn with_blue_sites(mut self, blue_sites: BlueSites) -> Self {
        self.blue_sites = blue_sites;
        self
    }

    /// Same geometry with the qubits removed.
    pub fn lattice_only(&self) -> Self {
        SystemSpec {
            qubits: None,
            d: None,
            ..self.clone()
        }
    }

    pub fn is_square(&self) -> bool {
        self.lx == self.ly
    }

    pub fn lattice(&self) -> Lattice {
        Lattice {
            lx: self.lx,
            ly: self.ly,
            blue_sites: self.blue_sites,
        }
    }

    /// True for the square, corner-coupled, equal-parameter configuration.
    pub fn is_symmetric(&self) -> bool {
        let n = self.lx * self.ly;
        match self.qubits {
            None => self.is_square() && self.lx % 2 == 1,
            Some([q1, q2]) => {
                self.is_square()
                    && self.lx % 2 == 1
                    && q1.epsilon == q2.epsilon
                    && q1.g == q2.g
                    && q1.site == 1
                    && q2.site == n
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("SystemSpec serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.lx < 3 || self.ly < 3 {
            return Err(Error::Geometry(format!(
                "lattice must be at least 3x3, got {}x{}",
                self.lx, self.ly
            )));
        }
        if !(self.j > 0.0) || !self.j.is_finite() {
            return Err(Error::Spec(format!("hopping must be positive, got {}", self.j)));
        }
        if let Some(qs) = &self.qubits {
            let lat = self.lattice();
            for (k, q) in qs.iter().enumerate() {
                if !(q.g >= 0.0) || !q.g.is_finite() || !q.epsilon.is_finite() {
                    return Err(Error::Spec(format!("qubit {} needs finite epsilon and g >= 0", k + 1)));
                }
                if q.site == 0 || q.site > lat.len() {
                    return Err(Error::Spec(format!(
                        "qubit {} site {} outside 1..={}",
                        k + 1,
                        q.site,
                        lat.len()
                    )));
                }
                if !lat.on_boundary(q.site) {
                    return Err(Error::Spec(format!(
                        "qubit {} site {} is not on the lattice boundary",
                        k + 1,
                        q.site
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Flat JSON form: `lx, ly, j, eps1, eps2, g1, g2, site1, site2, d`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    lx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ly: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    site1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    site2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    blue_first_row: bool,
}

impl TryFrom<SystemDoc> for SystemSpec {
    type Error = Error;

    fn try_from(doc: SystemDoc) -> Result<Self> {
        let ly = doc.ly.unwrap_or(doc.lx);
        let mut spec = SystemSpec::rect(doc.lx, ly).with_hopping(doc.j.unwrap_or(1.0));
        if doc.blue_first_row {
            spec.blue_sites = BlueSites::OddRows;
        }
        let any_qubit = doc.eps1.is_some() || doc.eps2.is_some() || doc.g1.is_some() || doc.g2.is_some();
        if !any_qubit {
            if doc.site1.is_some() || doc.site2.is_some() || doc.d.is_some() {
                return Err(Error::Spec("qubit sites given without eps1/g1".into()));
            }
            return Ok(spec);
        }
        let eps1 = doc.eps1.or(doc.eps2).unwrap_or(0.0);
        let eps2 = doc.eps2.unwrap_or(eps1);
        let g1 = doc.g1.or(doc.g2).unwrap_or(0.0);
        let g2 = doc.g2.unwrap_or(g1);
        let (s1, s2) = match (doc.site1, doc.site2, doc.d) {
            (Some(a), Some(b), _) => (a, b),
            (None, None, Some(d)) => {
                if d > spec.lx.saturating_sub(1) {
                    return Err(Error::Spec(format!("d = {d} exceeds lx - 1 = {}", spec.lx - 1)));
                }
                edge_sites(spec.lx, d)
            }
            (None, None, None) => (1, spec.lx * spec.ly),
            _ => return Err(Error::Spec("give both site1 and site2, or neither".into())),
        };
        spec.d = doc.d;
        spec.qubits = Some([
            Qubit {
                epsilon: eps1,
                g: g1,
                site: s1,
            },
            Qubit {
                epsilon: eps2,
                g: g2,
                site: s2,
            },
        ]);
        Ok(spec)
    }
}

impl From<SystemSpec> for SystemDoc {
    fn from(s: SystemSpec) -> Self {
        let mut doc = SystemDoc {
            lx: s.lx,
            ly: Some(s.ly),
            j: Some(s.j),
            d: s.d,
            blue_first_row: s.blue_sites == BlueSites::OddRows,
            ..Default::default()
        };
        if let Some([q1, q2]) = s.qubits {
            doc.eps1 = Some(q1.epsilon);
            doc.eps2 = Some(q2.epsilon);
            doc.g1 = Some(q1.g);
            doc.g2 = Some(q2.g);
            doc.site1 = Some(q1.site);
            doc.site2 = Some(q2.site);
        }
        doc
    }
}

/// First-row sites `d` apart around the central column: offsets `-ceil(d/2)`
/// and `+floor(d/2)`. Sites are clamped into the row so the caller can
/// validate them.
pub fn edge_sites(lx: usize, d: usize) -> (usize, usize) {
    let center = (lx + 1) / 2;
    let left = center.saturating_sub(d.div_ceil(2));
    let right = center + d / 2;
    (left, right)
}

/// Lattice geometry without any physical parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub lx: usize,
    pub ly: usize,
    pub blue_sites: BlueSites,
}

/// A directed hop `from -> to` with amplitude `H[to, from]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bond {
    pub from: usize,
    pub to: usize,
    pub amplitude: c64,
}

impl Bond {
    /// Peierls phase in `[0, 2pi)`, defined by `amplitude = -J exp(i phase)`.
    pub fn phase(&self) -> f64 {
        (-self.amplitude).arg().rem_euclid(TAU)
    }
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.lx * self.ly
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// 1-based linear index of `(row, col)`.
    pub fn site(&self, row: usize, col: usize) -> usize {
        (row - 1) * self.lx + col
    }

    /// `(row, col)` of a 1-based linear index.
    pub fn coords(&self, site: usize) -> (usize, usize) {
        ((site - 1) / self.lx + 1, (site - 1) % self.lx + 1)
    }

    pub fn is_blue(&self, row: usize, col: usize) -> bool {
        let row_even = row % 2 == 0;
        let blue_row = match self.blue_sites {
            BlueSites::EvenRows => row_even,
            BlueSites::OddRows => !row_even,
        };
        blue_row && col % 2 == 0
    }

    pub fn on_boundary(&self, site: usize) -> bool {
        let (r, c) = self.coords(site);
        r == 1 || c == 1 || r == self.ly || c == self.lx
    }

    /// `(-1)^r` in the default gauge, shifted by one row for the blue-first-row variant.
    fn row_sign(&self, row: usize) -> f64 {
        let shifted = match self.blue_sites {
            BlueSites::EvenRows => row,
            BlueSites::OddRows => row + 1,
        };
        if shifted % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Every nearest-neighbour bond once, oriented right and up.
    pub fn bonds(&self, j: f64) -> Vec<Bond> {
        let mut bonds = Vec::with_capacity(2 * self.len());
        for r in 1..=self.ly {
            for c in 1..=self.lx {
                let a = self.site(r, c);
                if c < self.lx {
                    // row of site a, coefficient of psi(r, c+1)
                    let h_ab = if c % 2 == 0 { -j } else { self.row_sign(r) * j };
                    bonds.push(Bond {
                        from: a,
                        to: self.site(r, c + 1),
                        amplitude: c64::new(h_ab, 0.0),
                    });
                }
                if r < self.ly {
                    let h_ab = if c % 2 == 0 {
                        c64::new(0.0, -j)
                    } else {
                        c64::new(-j, 0.0)
                    };
                    bonds.push(Bond {
                        from: a,
                        to: self.site(r + 1, c),
                        amplitude: h_ab.conj(),
                    });
                }
            }
        }
        bonds
    }
}

/// Dense single-excitation Hamiltonian plus the bookkeeping needed to read it.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    matrix: Mat<c64>,
    lattice: Lattice,
    j: f64,
    qubits: Option<[Qubit; 2]>,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn entry(&self, row: usize, col: usize) -> c64 {
        self.matrix[(row, col)]
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

    /// Basis index of Q2, when qubits are attached.
    pub fn q2_index(&self) -> Option<usize> {
        self.qubits.map(|_| self.lattice.len() + 1)
    }

    /// Basis index of 1-based lattice site `site`.
    pub fn basis_index(&self, site: usize) -> usize {
        if self.has_qubits() {
            site
        } else {
            site - 1
        }
    }

    /// Both qubits attach to the same lattice site (`d = 0`).
    pub fn coincident_ports(&self) -> bool {
        matches!(self.qubits, Some([a, b]) if a.site == b.site)
    }

    /// Largest entry of `|H - H^dagger|`.
    pub fn max_asymmetry(&self) -> f64 {
        max_asymmetry(self.matrix.as_ref())
    }

    /// `H' = D H D^dagger` with `D = diag(exp(i theta_k))`.
    pub fn gauge_transformed(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.dim() {
            return Err(Error::Input(format!(
                "need {} phases, got {}",
                self.dim(),
                phases.len()
            )));
        }
        let u: Vec<c64> = phases.iter().map(|&t| c64::cis(t)).collect();
        let matrix = Mat::from_fn(self.dim(), self.dim(), |i, k| u[i] * self.matrix[(i, k)] * u[k].conj());
        Ok(HamiltonianMatrix { matrix, ..self.clone() })
    }

    /// Lattice bonds read back from the matrix, one per neighbour pair.
    pub fn bond_table(&self) -> Vec<Bond> {
        self.lattice
            .bonds(self.j)
            .into_iter()
            .map(|b| Bond {
                amplitude: self.matrix[(self.basis_index(b.to), self.basis_index(b.from))],
                ..b
            })
            .collect()
    }
}

pub(crate) fn max_asymmetry(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for k in i..n {
            worst = worst.max((m[(i, k)] - m[(k, i)].conj()).norm());
        }
    }
    worst
}

fn assemble(spec: &SystemSpec) -> HamiltonianMatrix {
    let lattice = spec.lattice();
    let n = lattice.len();
    let offset = usize::from(spec.qubits.is_some());
    let dim = n + 2 * offset;
    let mut h = Mat::<c64>::zeros(dim, dim);
    for b in lattice.bonds(spec.j) {
        let (a, t) = (b.from - 1 + offset, b.to - 1 + offset);
        h[(t, a)] = b.amplitude;
        h[(a, t)] = b.amplitude.conj();
    }
    if let Some([q1, q2]) = spec.qubits {
        let q2_index = n + 1;
        h[(Q1, Q1)] = c64::new(q1.epsilon, 0.0);
        h[(q2_index, q2_index)] = c64::new(q2.epsilon, 0.0);
        h[(Q1, q1.site)] = c64::new(-q1.g, 0.0);
        h[(q1.site, Q1)] = c64::new(-q1.g, 0.0);
        h[(q2_index, q2.site)] = c64::new(-q2.g, 0.0);
        h[(q2.site, q2_index)] = c64::new(-q2.g, 0.0);
    }
    HamiltonianMatrix {
        matrix: h,
        lattice,
        j: spec.j,
        qubits: spec.qubits,
    }
}

/// Square `L x L` system, `L` odd. Qubits default to the corners.
pub fn build_square_system(spec: &SystemSpec) -> Result<HamiltonianMatrix> {
    if !spec.is_square() {
        return Err(Error::Geometry(format!(
            "square system needs lx == ly, got {}x{}",
            spec.lx, spec.ly
        )));
    }
    if spec.lx % 2 == 0 {
        return Err(Error::Geometry(format!(
            "square lattice size must be odd, got {}",
            spec.lx
        )));
    }
    spec.validate()?;
    Ok(assemble(spec))
}

/// Rectangular strip, `lx >= ly`, qubits on the first row `d` sites apart.
pub fn build_rect_system(spec: &SystemSpec) -> Result<HamiltonianMatrix> {
    if spec.lx < spec.ly {
        return Err(Error::Geometry(format!(
            "rectangular system needs lx >= ly, got {}x{}",
            spec.lx, spec.ly
        )));
    }
    spec.validate()?;
    if let Some(d) = spec.d {
        if d > spec.lx - 1 {
            return Err(Error::Spec(format!("d = {d} exceeds lx - 1 = {}", spec.lx - 1)));
        }
        if let Some([q1, q2]) = spec.qubits {
            let (s1, s2) = edge_sites(spec.lx, d);
            if s1 == 0 || s2 > spec.lx {
                return Err(Error::Spec(format!("d = {d} does not fit on a row of {}", spec.lx)));
            }
            if (q1.site, q2.site) != (s1, s2) {
                return Err(Error::Spec(format!(
                    "qubit sites ({}, {}) disagree with d = {d}",
                    q1.site, q2.site
                )));
            }
            if d == 0 {
                log::warn!("d = 0: both qubits couple to site {s1}");
            }
        }
    }
    Ok(assemble(spec))
}

/// Dispatch on geometry: rectangular builder when `d` is set or the lattice is not square.
pub fn build_system(spec: &SystemSpec) -> Result<HamiltonianMatrix> {
    if spec.d.is_some() || !spec.is_square() {
        build_rect_system(spec)
    } else {
        build_square_system(spec)
    }
}

/// Loop orientation for [`plaquette_flux_oriented`]; counterclockwise means
/// right along the row, then up to the next row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Counterclockwise,
    Clockwise,
}

/// Flux through the plaquette whose lower-left corner is `(row, col)`.
pub fn plaquette_flux(h: &HamiltonianMatrix, row: usize, col: usize) -> Result<f64> {
    plaquette_flux_oriented(h, row, col, Orientation::Counterclockwise)
}

pub fn plaquette_flux_oriented(h: &HamiltonianMatrix, row: usize, col: usize, orientation: Orientation) -> Result<f64> {
    let lat = h.lattice();
    if row == 0 || col == 0 || row >= lat.ly || col >= lat.lx {
        return Err(Error::Range { row, col });
    }
    let mut corners = [
        lat.site(row, col),
        lat.site(row, col + 1),
        lat.site(row + 1, col + 1),
        lat.site(row + 1, col),
    ];
    if orientation == Orientation::Clockwise {
        corners.reverse();
    }
    let mut total = 0.0;
    for k in 0..4 {
        let from = h.basis_index(corners[k]);
        let to = h.basis_index(corners[(k + 1) % 4]);
        total += (-h.entry(to, from)).arg();
    }
    Ok(total.rem_euclid(TAU))
}

/// Distance of an angle from `target` on the circle.
pub fn angle_distance(a: f64, target: f64) -> f64 {
    let d = (a - target).rem_euclid(TAU);
    d.min(TAU - d)
}

/// The flux every plaquette carries.
pub const FLUX: f64 = PI / 2.0;
