//! The pi-rotation combined with a sign flip on blue sites, and the parity
//! sectors it induces.

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::lattice::{HamiltonianMatrix, SystemSpec};
use crate::spectral::{eigh, fix_phase, Parity, Spectrum};

/// `U = sum_j b(j) |j><N-1-j|` as a signed permutation of basis indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryOperator {
    perm: Vec<usize>,
    signs: Vec<f64>,
}

impl SymmetryOperator {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// `(U v)_i = b(i) v_{perm(i)}`.
    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        self.perm.iter().zip(&self.signs).map(|(&k, &s)| v[k] * s).collect()
    }

    pub fn to_matrix(&self) -> Mat<f64> {
        let n = self.dim();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, self.perm[i])] = self.signs[i];
        }
        m
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }
}

/// Build the operator for a symmetric square system (or an isolated odd square lattice).
pub fn build_symmetry_operator(spec: &SystemSpec) -> Result<SymmetryOperator> {
    if !spec.is_symmetric() {
        return Err(Error::SymmetryUnavailable(
            "needs an odd square lattice with equal qubits on opposite corners".into(),
        ));
    }
    let lat = spec.lattice();
    let n_sites = lat.len();
    let offset = usize::from(spec.qubits.is_some());
    let dim = n_sites + 2 * offset;
    let perm: Vec<usize> = (0..dim).map(|i| dim - 1 - i).collect();
    let signs = (0..dim)
        .map(|i| {
            if i < offset || i >= n_sites + offset {
                return 1.0;
            }
            let (r, c) = lat.coords(i + 1 - offset);
            if lat.is_blue(r, c) {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    Ok(SymmetryOperator { perm, signs })
}

/// Largest entry of `U H - H U`.
pub fn commutator_norm(u: &SymmetryOperator, h: &HamiltonianMatrix) -> f64 {
    let n = u.dim();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for k in 0..n {
            // (UH)_{ik} = b(i) H[perm(i), k];  (HU)_{ik} = H[i, perm^-1(k)] b(perm^-1(k))
            let uh = h.entry(u.perm[i], k) * u.signs[i];
            let kk = u.perm[k];
            let hu = h.entry(i, kk) * u.signs[kk];
            worst = worst.max((uh - hu).norm());
        }
    }
    worst
}

/// Clusters of eigenvalues separated by less than this are rotated together.
pub const CLUSTER_GAP: f64 = 1e-9;

/// Rotate degenerate blocks into the operator's eigenbasis and label every
/// state with its parity. The spectrum is returned with updated vectors.
pub fn classify_parity(spectrum: &Spectrum, u: &SymmetryOperator) -> Result<Spectrum> {
    let n = spectrum.len();
    if u.dim() != spectrum.vectors().nrows() {
        return Err(Error::SymmetryUnavailable(format!(
            "operator dimension {} does not match spectrum dimension {}",
            u.dim(),
            spectrum.vectors().nrows()
        )));
    }
    let mut out = spectrum.clone();
    let e = spectrum.eigenvalues().to_vec();
    let mut parities = vec![Parity::Plus; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && e[end] - e[end - 1] < CLUSTER_GAP {
            end += 1;
        }
        let size = end - start;
        let v = out.vectors_mut();
        if size > 1 {
            // Project U into the cluster and diagonalize: U is Hermitian (real
            // symmetric signed permutation with U^2 = 1) so the block is too.
            let cols: Vec<Vec<c64>> = (start..end)
                .map(|k| (0..v.nrows()).map(|i| v[(i, k)]).collect())
                .collect();
            let ucols: Vec<Vec<c64>> = cols.iter().map(|c| u.apply(c)).collect();
            let block = Mat::from_fn(size, size, |a, b| {
                cols[a].iter().zip(&ucols[b]).map(|(x, y)| x.conj() * y).sum::<c64>()
            });
            let block = Mat::from_fn(size, size, |a, b| 0.5 * (block[(a, b)] + block[(b, a)].conj()));
            let (_, rot) = eigh(block.as_ref())?;
            for i in 0..v.nrows() {
                let row: Vec<c64> = (0..size)
                    .map(|b| (0..size).map(|a| cols[a][i] * rot[(a, b)]).sum())
                    .collect();
                for (b, val) in row.into_iter().enumerate() {
                    v[(i, start + b)] = val;
                }
            }
            for k in start..end {
                fix_phase(v, k);
            }
        }
        for k in start..end {
            let col: Vec<c64> = (0..v.nrows()).map(|i| v[(i, k)]).collect();
            let ucol = u.apply(&col);
            let overlap: f64 = col.iter().zip(&ucol).map(|(x, y)| (x.conj() * y).re).sum();
            let p = Parity::from_sign(overlap);
            let residual = col
                .iter()
                .zip(&ucol)
                .map(|(x, y)| (y - x * p.sign()).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if residual > 1e-8 {
                return Err(Error::Degeneracy(residual));
            }
            parities[k] = p;
        }
        start = end;
    }
    out.set_parities(&parities);
    Ok(out)
}
