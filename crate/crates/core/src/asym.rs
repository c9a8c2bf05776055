//! Unequal qubit energies and couplings under the constant-f approximation.
//!
//! All `f` values are in 1/energy, the same convention as
//! [`crate::perturb::PerturbationSums`]; the dimensionless form used in
//! some derivations is `J f`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::npsolver::TwoPort;
use crate::perturb::CouplingSums;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub g1: f64,
    pub g2: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    /// Level spacing of the working window, used only for the validity warning.
    pub delta_e: Option<f64>,
}

impl AsymConfig {
    /// Constants read from coupling sums at `at_energy` (normally the window midpoint).
    pub fn from_sums(sums: &CouplingSums, at_energy: f64, eps: [f64; 2], g: [f64; 2]) -> Result<Self> {
        let s = sums.evaluate(at_energy)?;
        Ok(AsymConfig {
            eps1: eps[0],
            eps2: eps[1],
            g1: g[0],
            g2: g[1],
            f_plus: s.f_plus,
            f_minus: s.f_minus,
            delta_e: None,
        })
    }

    pub fn swapped(&self) -> Self {
        AsymConfig {
            eps1: self.eps2,
            eps2: self.eps1,
            g1: self.g2,
            g2: self.g1,
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.g1 >= 0.0 && self.g2 >= 0.0) {
            return Err(Error::Domain("couplings must be >= 0".into()));
        }
        if self.f_plus == self.f_minus {
            return Err(Error::Degenerate("f+ equals f-".into()));
        }
        if let Some(de) = self.delta_e {
            if (self.eps2 - self.eps1).abs() > 0.5 * de {
                log::warn!(
                    "|eps2 - eps1| = {} exceeds half the level spacing; constant f is unreliable",
                    (self.eps2 - self.eps1).abs()
                );
            }
        }
        Ok(())
    }
}

/// Limiting-case formulas evaluated at the configuration's parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitCase {
    pub omega_eff: f64,
    pub k_pr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymResult {
    /// Mixing parameters; `inf` marks the pure antisymmetric branch.
    pub chi: [f64; 2],
    /// Levels ordered so `lambda[0]` belongs near `eps1`.
    pub lambda: [f64; 2],
    pub omega_eff: f64,
    pub k_pr: f64,
    /// Largest normalized residual of the two defining equations.
    pub residual: f64,
    pub limits: BTreeMap<String, LimitCase>,
    /// The detuning spans more than half the window.
    pub outside_constant_f: bool,
}

/// Both mixing parameters and their levels from the constant-f quadratic.
pub fn asym_pair_solution(cfg: &AsymConfig) -> Result<([f64; 2], [f64; 2], f64)> {
    cfg.validate()?;
    let a = 1.0 / cfg.f_plus;
    let b = 1.0 / cfg.f_minus;
    let (g1s, g2s) = (cfg.g1 * cfg.g1, cfg.g2 * cfg.g2);
    let gamma = g2s - g1s;
    let delta = cfg.eps2 - cfg.eps1;
    // chi^2 b (gamma + delta b) + chi (a - b)(g1^2 + g2^2) - a (gamma + delta a) = 0
    let qa = b * (gamma + delta * b);
    let qb = (a - b) * (g1s + g2s);
    let qc = -a * (gamma + delta * a);
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let q = if q == 0.0 { -0.5 * disc.sqrt() } else { q };
    let chis = if q == 0.0 {
        // a, b, c all vanish only for g = 0 and no detuning
        return Err(Error::Degenerate("vanishing couplings and detuning".into()));
    } else {
        [if qa == 0.0 { f64::INFINITY } else { q / qa }, qc / q]
    };
    let lambda_of = |chi: f64| -> f64 {
        if chi.is_infinite() {
            return cfg.eps1 + g1s / b;
        }
        let d1 = a + chi * b;
        let d2 = a - chi * b;
        if d1.abs() >= d2.abs() {
            cfg.eps1 + g1s * (1.0 + chi) / d1
        } else {
            cfg.eps2 + g2s * (1.0 - chi) / d2
        }
    };
    let mut lam = [lambda_of(chis[0]), lambda_of(chis[1])];
    let mut chi = chis;
    let keep = (lam[0] - cfg.eps1).abs() + (lam[1] - cfg.eps2).abs();
    let swap = (lam[1] - cfg.eps1).abs() + (lam[0] - cfg.eps2).abs();
    if swap < keep {
        lam.swap(0, 1);
        chi.swap(0, 1);
    }
    let residual = chi
        .iter()
        .zip(&lam)
        .map(|(&x, &l)| residual_at(cfg, a, b, x, l))
        .fold(0.0, f64::max);
    Ok((chi, lam, residual))
}

/// `g1^2 (1+chi) - (lambda - eps1)(a + chi b)` and its partner, divided by `max(1, |chi|)`.
fn residual_at(cfg: &AsymConfig, a: f64, b: f64, chi: f64, lambda: f64) -> f64 {
    let (g1s, g2s) = (cfg.g1 * cfg.g1, cfg.g2 * cfg.g2);
    let (r1, r2) = if chi.is_infinite() {
        (g1s - (lambda - cfg.eps1) * b, -g2s + (lambda - cfg.eps2) * b)
    } else {
        let s = chi.abs().max(1.0);
        (
            (g1s * (1.0 + chi) - (lambda - cfg.eps1) * (a + chi * b)) / s,
            (g2s * (1.0 - chi) - (lambda - cfg.eps2) * (a - chi * b)) / s,
        )
    };
    r1.abs().max(r2.abs())
}

/// Effective frequency, propagation factor, and the limiting-case report.
pub fn asym_metrics(cfg: &AsymConfig) -> Result<AsymResult> {
    let (chi, lambda, residual) = asym_pair_solution(cfg)?;
    let omega = omega_b10(cfg);
    if !(omega > 0.0) {
        return Err(Error::Degenerate("effective frequency vanishes".into()));
    }
    let fd = cfg.f_minus - cfg.f_plus;
    let fs = cfg.f_minus + cfg.f_plus;
    let k_pr = (cfg.g1 * cfg.g2 * fd / omega).powi(2);
    let delta = cfg.eps2 - cfg.eps1;
    let (g1s, g2s) = (cfg.g1 * cfg.g1, cfg.g2 * cfg.g2);
    let mut limits = BTreeMap::new();
    let g_sym = (cfg.g1 * cfg.g2).sqrt();
    limits.insert(
        "symmetric".to_string(),
        LimitCase {
            omega_eff: g_sym * g_sym * fd.abs(),
            k_pr: 1.0,
        },
    );
    limits.insert(
        "weak_coupling".to_string(),
        LimitCase {
            omega_eff: delta.abs(),
            k_pr: (cfg.g1 * cfg.g2 * fd / delta).powi(2),
        },
    );
    let g4 = g1s * g2s;
    limits.insert(
        "symmetric_coupling".to_string(),
        LimitCase {
            omega_eff: (delta * delta + g4 * fd * fd).sqrt(),
            k_pr: 1.0 / (1.0 + delta * delta / (g4 * fd * fd)),
        },
    );
    let gamma = g2s - g1s;
    limits.insert(
        "symmetric_potentials".to_string(),
        LimitCase {
            omega_eff: ((0.5 * gamma * fs).powi(2) + g4 * fd * fd).sqrt(),
            k_pr: 1.0 / (1.0 + 0.25 * (gamma / (cfg.g1 * cfg.g2)).powi(2) * (fs / fd).powi(2)),
        },
    );
    Ok(AsymResult {
        chi,
        lambda,
        omega_eff: omega,
        k_pr,
        residual,
        limits,
        outside_constant_f: cfg.delta_e.is_some_and(|de| delta.abs() > 0.5 * de),
    })
}

fn omega_b10(cfg: &AsymConfig) -> f64 {
    let delta = cfg.eps2 - cfg.eps1;
    let gamma = cfg.g2 * cfg.g2 - cfg.g1 * cfg.g1;
    let fd = cfg.f_minus - cfg.f_plus;
    let fs = cfg.f_minus + cfg.f_plus;
    ((delta + 0.5 * gamma * fs).powi(2) + (cfg.g1 * cfg.g2 * fd).powi(2)).sqrt()
}

/// Coupling needed for `K_pr >= 1/2` at equal couplings.
pub fn half_transfer_coupling(cfg: &AsymConfig) -> f64 {
    ((cfg.eps2 - cfg.eps1).abs() / (cfg.f_minus - cfg.f_plus).abs()).sqrt()
}

/// The two levels carrying the most Q1 weight after solving with the full
/// energy dependence of the sums, started from the constant-f estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactPair {
    pub lambda: [f64; 2],
    pub weights_q1: [f64; 2],
    pub omega_eff: f64,
}

pub fn refine_exact(cfg: &AsymConfig, sums: &CouplingSums) -> Result<ExactPair> {
    let (_, guess, _) = asym_pair_solution(cfg)?;
    let port = TwoPort::new(sums, [cfg.eps1, cfg.eps2], [cfg.g1, cfg.g2]);
    let mid = 0.5 * (guess[0] + guess[1]);
    let spread = (guess[0] - guess[1]).abs().max(1e-6);
    let mut radius = 4.0 * spread;
    for _ in 0..20 {
        let levels = port.levels_in(mid - radius, mid + radius);
        let mut weighted: Vec<(f64, f64)> = levels
            .iter()
            .map(|&l| port.weights(l).map(|w| (l, w.0)))
            .collect::<Result<_>>()?;
        if weighted.len() >= 2 {
            weighted.sort_by(|x, y| y.1.total_cmp(&x.1));
            let (mut p, mut q) = (weighted[0], weighted[1]);
            if p.0 > q.0 {
                std::mem::swap(&mut p, &mut q);
            }
            let total: f64 = weighted.iter().map(|x| x.1).sum();
            if p.1 + q.1 > 0.5 * total {
                return Ok(ExactPair {
                    lambda: [p.0, q.0],
                    weights_q1: [p.1, q.1],
                    omega_eff: q.0 - p.0,
                });
            }
        }
        radius *= 2.0;
    }
    Err(Error::Solver {
        lo: mid - radius,
        hi: mid + radius,
        detail: "no dominant pair near the constant-f estimate".into(),
    })
}
