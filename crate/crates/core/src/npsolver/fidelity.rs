use std::f64::consts::PI;

use serde::Serialize;

use super::boundary::{eigenvalues_boundary, BoundaryRoot, BranchFunction};
use super::scaled::ScaledCoupling;
use crate::error::{Error, Result};
use crate::spectral::{Parity, Spectrum};

/// Long-time qubit population and the weights behind it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityResult {
    pub fidelity: f64,
    /// `|psi_n(Q1)|^2` per eigenstate.
    pub qubit_weights: Vec<f64>,
    /// `|c_n|^2` of the initial state `|Q1>`; equal to the weights.
    pub overlaps: Vec<f64>,
}

/// `|psi_lambda(Q1)|^2 = 1 / (2 (1 - g^2 f'(lambda)))` at a root of the boundary equation.
pub fn qubit_weight<B: BranchFunction>(branches: &B, eps: f64, lambda: f64, g: f64, parity: Parity) -> Result<f64> {
    let (f, df) = branches.eval(parity, lambda);
    let g2 = g * g;
    let residual = g2 * f - (lambda - eps);
    let scale = (lambda - eps).abs() + g2 * f.abs() + 1e-12;
    // a root located to float adjacency still leaves slope * ulp of residual
    let slack = 8.0 * f64::EPSILON * lambda.abs().max(1.0) * (1.0 + g2 * df.abs());
    if !residual.is_finite() || residual.abs() > 1e-8 * scale + slack {
        return Err(Error::Contract(format!(
            "lambda = {lambda} is not a {parity:?} root (residual {residual:e})"
        )));
    }
    Ok(0.5 / (1.0 - g2 * df))
}

/// Smallest gap between levels that both carry weight above `1e-12`.
fn min_weighted_gap(levels: &[(f64, f64)]) -> f64 {
    let weighted: Vec<f64> = levels.iter().filter(|(_, w)| *w > 1e-12).map(|(e, _)| *e).collect();
    weighted
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min)
}

/// `F = 2 sum |psi_n(Q1)|^4` over boundary roots of a symmetric system.
pub fn fidelity_from_roots(roots: &[BoundaryRoot]) -> Result<FidelityResult> {
    let levels: Vec<(f64, f64)> = roots.iter().map(|r| (r.lambda, r.qubit_weight)).collect();
    let gap = min_weighted_gap(&levels);
    if gap <= 1e-9 {
        return Err(Error::Averaging(gap));
    }
    let weights: Vec<f64> = roots.iter().map(|r| r.qubit_weight).collect();
    Ok(FidelityResult {
        fidelity: 2.0 * weights.iter().map(|w| w * w).sum::<f64>(),
        overlaps: weights.clone(),
        qubit_weights: weights,
    })
}

/// Exact fidelity from the boundary roots at `(eps, g)`.
pub fn fidelity_exact<B: BranchFunction>(branches: &B, eps: f64, g: f64) -> Result<FidelityResult> {
    fidelity_from_roots(&eigenvalues_boundary(branches, eps, g)?)
}

/// `F = sum_n |psi_n(Q1)|^2 (|psi_n(Q1)|^2 + |psi_n(Q2)|^2)` from a dense
/// spectrum of any geometry.
pub fn fidelity_from_spectrum(spectrum: &Spectrum) -> Result<FidelityResult> {
    let w = spectrum
        .qubit_weights()
        .ok_or_else(|| Error::Input("spectrum has no qubits".into()))?;
    let levels: Vec<(f64, f64)> = spectrum.eigenvalues().iter().zip(&w).map(|(e, w)| (*e, w.0)).collect();
    let gap = min_weighted_gap(&levels);
    if gap <= 1e-9 {
        return Err(Error::Averaging(gap));
    }
    let q1: Vec<f64> = w.iter().map(|x| x.0).collect();
    Ok(FidelityResult {
        fidelity: w.iter().map(|(a, b)| a * (a + b)).sum(),
        overlaps: q1.clone(),
        qubit_weights: q1,
    })
}

/// The two most Q1-weighted dressed states of a dense spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumPair {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub omega_eff: f64,
    pub weight_minus: f64,
    pub weight_plus: f64,
}

pub fn two_level_from_spectrum(spectrum: &Spectrum) -> Result<SpectrumPair> {
    let w = spectrum
        .qubit_weights()
        .ok_or_else(|| Error::Input("spectrum has no qubits".into()))?;
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[b].0.total_cmp(&w[a].0).then(a.cmp(&b)));
    let (mut i, mut k) = (idx[0], idx[1]);
    if i > k {
        std::mem::swap(&mut i, &mut k);
    }
    let e = spectrum.eigenvalues();
    Ok(SpectrumPair {
        lambda_minus: e[i],
        lambda_plus: e[k],
        omega_eff: e[k] - e[i],
        weight_minus: w[i].0,
        weight_plus: w[k].0,
    })
}

/// Closed-form fidelity of the rational cot model.
pub fn fidelity_closed_form(sc: &ScaledCoupling) -> f64 {
    let (c0, r0, w) = (sc.c0, sc.r0, sc.w);
    if c0 == 0.0 {
        let resonant = w <= 0.0 || w >= 1.0;
        return if resonant { 0.75 } else { 1.0 };
    }
    let x = 2.0 * PI * r0;
    // sinh(x) / (cosh(x) - cos(2 pi w)), kept finite for large x
    let lattice_sum = if x > 40.0 {
        1.0
    } else {
        x.sinh() / (x.cosh() - (2.0 * PI * w).cos())
    };
    let bracket = PI / r0 * lattice_sum + 1.0 / (w * w + r0 * r0) + 1.0 / ((w - 1.0).powi(2) + r0 * r0);
    (1.0 - 0.5 * c0 * bracket) / (c0 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::EdgeCalibration;

    fn cal() -> EdgeCalibration {
        EdgeCalibration {
            l: 0,
            l_next: 1,
            e_l: -1.80,
            e_next: -1.73,
            delta_e: 0.07,
            rho_e: 0.455,
            a_f: 0.164,
            b_f: -0.312,
            lambda_mid: -1.765,
            parity_l: Parity::Plus,
            size: 31,
            j: 1.0,
        }
    }

    #[test]
    fn closed_form_limits() {
        let c = cal();
        let at = |w: f64, g0: f64| fidelity_closed_form(&ScaledCoupling::from_w(&c, w, g0).unwrap());
        assert!((at(0.0, 1e-7) - 0.75).abs() < 1e-3);
        assert!((at(0.5, 1e-7) - 1.0).abs() < 1e-3);
        assert!(at(0.5, 5.0) < at(0.5, 1.0));
    }
}
