use serde::Serialize;

use crate::error::{Error, Result};
use crate::perturb::{f_pm_approx, f_pm_approx_prime, CouplingSums};
use crate::roots::decreasing_root;
use crate::spectral::{EdgeCalibration, Parity};

/// A parity-resolved function `f(lambda)` with simple poles of positive residue.
pub trait BranchFunction {
    /// Value and energy derivative of the branch.
    fn eval(&self, parity: Parity, lambda: f64) -> (f64, f64);

    /// Sorted, distinct poles of the branch.
    fn poles(&self, parity: Parity) -> &[f64];

    /// True when `f -> 0` far from all poles, so the roots beyond the
    /// outermost poles exist and are searched for.
    fn has_outer_roots(&self) -> bool;

    /// Residue of pole `k` with the value and slope of the remaining terms at
    /// that pole, when the branch can split them out.
    fn pole_term(&self, _parity: Parity, _k: usize) -> Option<(f64, f64, f64)> {
        None
    }
}

/// Exact branches from the isolated-lattice sums of a symmetric system.
#[derive(Clone, Debug)]
pub struct ExactBranches {
    plus: Branch,
    minus: Branch,
}

#[derive(Clone, Debug, Default)]
struct Branch {
    poles: Vec<f64>,
    /// `2 |psi(1)|^2` merged over degenerate levels.
    residues: Vec<f64>,
}

impl Branch {
    fn eval(&self, lambda: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for (p, r) in self.poles.iter().zip(&self.residues) {
            let inv = 1.0 / (lambda - p);
            f += r * inv;
            df -= r * inv * inv;
        }
        (f, df)
    }

    fn without(&self, k: usize) -> (f64, f64) {
        let x = self.poles[k];
        let mut f = 0.0;
        let mut df = 0.0;
        for (i, (p, r)) in self.poles.iter().zip(&self.residues).enumerate() {
            if i != k {
                let inv = 1.0 / (x - p);
                f += r * inv;
                df -= r * inv * inv;
            }
        }
        (f, df)
    }
}

impl ExactBranches {
    /// Splits the poles of corner sums by parity.
    ///
    /// Residues are `|a|^2 +- Re(a b^*)`, which for a level of definite parity
    /// is `2 |psi(1)|^2` on its own branch and zero on the other. Summed over a
    /// degenerate cluster they do not depend on how the solver mixed it.
    pub fn new(sums: &CouplingSums) -> Result<Self> {
        let mut plus = Branch::default();
        let mut minus = Branch::default();
        let poles = sums.poles();
        let mut start = 0;
        while start < poles.len() {
            let mut end = start + 1;
            while end < poles.len() && poles[end].energy - poles[end - 1].energy < 1e-12 {
                end += 1;
            }
            let cluster = &poles[start..end];
            let energy = cluster.iter().map(|p| p.energy).sum::<f64>() / cluster.len() as f64;
            let w: f64 = cluster.iter().map(|p| p.a.norm_sqr()).sum();
            let cross: f64 = cluster.iter().map(|p| (p.a * p.b.conj()).re).sum();
            let wb: f64 = cluster.iter().map(|p| p.b.norm_sqr()).sum();
            if (w - wb).abs() > 1e-9 {
                return Err(Error::SymmetryUnavailable(format!(
                    "levels {start}..{end} weigh the two ports differently"
                )));
            }
            for (branch, residue) in [(&mut plus, w + cross), (&mut minus, w - cross)] {
                if residue < -1e-12 {
                    return Err(Error::SymmetryUnavailable(format!(
                        "negative parity residue {residue:e} at levels {start}..{end}"
                    )));
                }
                // rounding leaves ~1e-16 w on the wrong branch; |psi(1)| < 1e-12 is decoupled
                if w > 1e-24 && residue > 1e-9 * w {
                    branch.poles.push(energy);
                    branch.residues.push(residue);
                }
            }
            start = end;
        }
        Ok(ExactBranches { plus, minus })
    }

    fn branch(&self, parity: Parity) -> &Branch {
        match parity {
            Parity::Plus => &self.plus,
            Parity::Minus => &self.minus,
        }
    }
}

impl BranchFunction for ExactBranches {
    fn eval(&self, parity: Parity, lambda: f64) -> (f64, f64) {
        self.branch(parity).eval(lambda)
    }

    fn poles(&self, parity: Parity) -> &[f64] {
        &self.branch(parity).poles
    }

    fn has_outer_roots(&self) -> bool {
        true
    }

    fn pole_term(&self, parity: Parity, k: usize) -> Option<(f64, f64, f64)> {
        let b = self.branch(parity);
        let (f, df) = b.without(k);
        Some((b.residues[k], f, df))
    }
}

/// Cot/tan model branches restricted to `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct CotBranches {
    cal: EdgeCalibration,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl CotBranches {
    /// Poles `E_l + k Delta E` inside `[lo, hi]`; even `k` belong to the parity of `E_l`.
    pub fn new(cal: EdgeCalibration, lo: f64, hi: f64) -> Self {
        let kmin = ((lo - cal.e_l) / cal.delta_e).ceil() as i64;
        let kmax = ((hi - cal.e_l) / cal.delta_e).floor() as i64;
        let mut own = Vec::new();
        let mut other = Vec::new();
        for k in kmin..=kmax {
            let e = cal.e_l + k as f64 * cal.delta_e;
            if k.rem_euclid(2) == 0 {
                own.push(e);
            } else {
                other.push(e);
            }
        }
        let (plus, minus) = match cal.parity_l {
            Parity::Plus => (own, other),
            Parity::Minus => (other, own),
        };
        CotBranches { cal, plus, minus }
    }
}

impl BranchFunction for CotBranches {
    fn eval(&self, parity: Parity, lambda: f64) -> (f64, f64) {
        let (fp, fm) = f_pm_approx(&self.cal, lambda);
        let (dp, dm) = f_pm_approx_prime(&self.cal, lambda);
        match parity {
            Parity::Plus => (fp, dp),
            Parity::Minus => (fm, dm),
        }
    }

    fn poles(&self, parity: Parity) -> &[f64] {
        match parity {
            Parity::Plus => &self.plus,
            Parity::Minus => &self.minus,
        }
    }

    fn has_outer_roots(&self) -> bool {
        false
    }
}

/// One solution of the boundary equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryRoot {
    pub lambda: f64,
    pub parity: Parity,
    /// `|psi_lambda(Q1)|^2`
    pub qubit_weight: f64,
    /// `g^2 f(lambda) - (lambda - eps)`
    pub residual: f64,
}

/// All roots of `g^2 f(lambda) = lambda - eps`, one per inter-pole interval
/// and parity plus the two outer roots when the branch supports them.
/// Sorted by energy.
pub fn eigenvalues_boundary<B: BranchFunction>(branches: &B, eps: f64, g: f64) -> Result<Vec<BoundaryRoot>> {
    if !(g >= 0.0) || !g.is_finite() {
        return Err(Error::Domain(format!("coupling must be finite and >= 0, got {g}")));
    }
    let g2 = g * g;
    let mut roots = Vec::new();
    for parity in [Parity::Plus, Parity::Minus] {
        let poles = branches.poles(parity);
        if g2 == 0.0 {
            roots.extend(poles.iter().map(|&p| BoundaryRoot {
                lambda: p,
                parity,
                qubit_weight: 0.0,
                residual: 0.0,
            }));
            roots.push(BoundaryRoot {
                lambda: eps,
                parity,
                qubit_weight: 0.5,
                residual: 0.0,
            });
            continue;
        }
        let h = |x: f64| g2 * branches.eval(parity, x).0 - (x - eps);
        let mut found = Vec::with_capacity(poles.len() + 1);
        for w in poles.windows(2) {
            found.push(decreasing_root(h, w[0], w[1], 64)?);
        }
        if branches.has_outer_roots() {
            match (poles.first(), poles.last()) {
                (Some(&first), Some(&last)) => {
                    let lo = expand(&h, first, -1.0)?;
                    found.insert(0, decreasing_root(h, lo, first, 64)?);
                    let hi = expand(&h, last, 1.0)?;
                    found.push(decreasing_root(h, last, hi, 64)?);
                }
                _ => found.push(eps),
            }
        }
        for lambda in found {
            if let Some(root) = unresolved_root(branches, parity, lambda, eps, g2) {
                roots.push(root);
                continue;
            }
            let (f, df) = branches.eval(parity, lambda);
            let residual = g2 * f - (lambda - eps);
            if !residual.is_finite() {
                return Err(Error::Solver {
                    lo: lambda,
                    hi: lambda,
                    detail: "non-finite residual".into(),
                });
            }
            roots.push(BoundaryRoot {
                lambda,
                parity,
                qubit_weight: 0.5 / (1.0 - g2 * df),
                residual,
            });
        }
    }
    roots.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(roots)
}

/// A root closer to a pole than the pole's own ulp belongs to a level that is
/// all but decoupled; place it with the local expansion
/// `g^2 r / delta + g^2 f_rest(p) = p - eps`.
fn unresolved_root<B: BranchFunction>(b: &B, parity: Parity, lambda: f64, eps: f64, g2: f64) -> Option<BoundaryRoot> {
    let poles = b.poles(parity);
    let k = poles.partition_point(|&p| p < lambda);
    let k = [k.checked_sub(1), (k < poles.len()).then_some(k)]
        .into_iter()
        .flatten()
        .min_by(|&i, &j| (poles[i] - lambda).abs().total_cmp(&(poles[j] - lambda).abs()))?;
    let p = poles[k];
    if (p - lambda).abs() > 4.0 * f64::EPSILON * p.abs().max(1.0) {
        return None;
    }
    let (r, rest, drest) = b.pole_term(parity, k)?;
    let c = (p - eps) - g2 * rest;
    let delta = g2 * r / c;
    Some(BoundaryRoot {
        lambda: p + delta,
        parity,
        qubit_weight: 0.5 / (1.0 - g2 * drest + c * c / (g2 * r)),
        residual: -delta * (1.0 - g2 * drest),
    })
}

/// Step away from an outer pole until `h` changes to the sign expected at infinity.
fn expand<F: Fn(f64) -> f64>(h: &F, pole: f64, direction: f64) -> Result<f64> {
    let mut step = 1.0;
    for _ in 0..200 {
        let x = pole + direction * step;
        let v = h(x);
        if (direction < 0.0 && v > 0.0) || (direction > 0.0 && v < 0.0) {
            return Ok(x);
        }
        step *= 2.0;
    }
    Err(Error::Solver {
        lo: pole,
        hi: pole + direction * step,
        detail: "outer root not bracketed".into(),
    })
}
