use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::decreasing_root;
use crate::spectral::EdgeCalibration;

/// Dimensionless coupling variables of one working point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledCoupling {
    pub w: f64,
    pub g0: f64,
    pub c0: f64,
    pub r0: f64,
    pub eps_tilde: f64,
}

impl ScaledCoupling {
    /// From the bare qubit energy and coupling; `eps_tilde = eps + B_f g^2 / J`.
    pub fn new(cal: &EdgeCalibration, eps: f64, g: f64) -> Result<Self> {
        let eps_tilde = eps + cal.b_f * g * g / cal.j;
        Self::from_w(cal, cal.scaled(eps_tilde), cal.g0(g))
    }

    pub fn from_w(cal: &EdgeCalibration, w: f64, g0: f64) -> Result<Self> {
        if !(-1e-12..=1.0 + 1e-12).contains(&w) {
            return Err(Error::Domain(format!("w = {w} lies outside the window [0, 1]")));
        }
        if !(g0 >= 0.0) || !g0.is_finite() {
            return Err(Error::Domain(format!("G0 must be finite and >= 0, got {g0}")));
        }
        let c0 = 2.0 * g0 * cal.a_f * cal.rho_e;
        Ok(ScaledCoupling {
            w: w.clamp(0.0, 1.0),
            g0,
            c0,
            r0: (4.0 * c0 * (c0 + 1.0)).sqrt(),
            eps_tilde: cal.unscaled(w),
        })
    }

    /// Bare qubit energy for coupling `g`.
    pub fn bare_eps(&self, cal: &EdgeCalibration, g: f64) -> f64 {
        self.eps_tilde - cal.b_f * g * g / cal.j
    }

    /// Closed-form root above `w` from the rational cot approximation.
    pub fn x_a(&self, n: f64) -> f64 {
        let u = self.w - n;
        n + (u + (u * u + self.r0 * self.r0).sqrt()) / (2.0 * (self.c0 + 1.0))
    }

    /// Closed-form root below `w` from the rational cot approximation.
    pub fn x_b(&self, n: f64) -> f64 {
        let u = self.w - n;
        n + (u - (u * u + self.r0 * self.r0).sqrt()) / (2.0 * (self.c0 + 1.0))
    }
}

/// The pair of dressed levels bracketing the adjusted potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoLevelResult {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub omega_eff: f64,
    pub x0: f64,
    pub x1: f64,
    /// Closed forms `x_a(0)` and `x_b(1)`.
    pub xa0: f64,
    pub xb1: f64,
    /// Coupling range that can produce `omega_eff` inside this window.
    pub g_min: f64,
    pub g_max: f64,
}

/// Solve `x - w = G0 pi A_f rho_e cot(pi (x - n) / 2)` for `n = 0` on `(0, 2)`
/// and `n = 1` on `(-1, 1)`.
pub fn scaled_pair(sc: &ScaledCoupling, cal: &EdgeCalibration) -> Result<TwoLevelResult> {
    let k = sc.g0 * PI * cal.a_f * cal.rho_e;
    let (x0, x1) = if k == 0.0 {
        (sc.w, sc.w)
    } else {
        let h = |n: f64| move |x: f64| k / (PI / 2.0 * (x - n)).tan() - (x - sc.w);
        (
            decreasing_root(h(0.0), 0.0, 2.0, 64)?,
            decreasing_root(h(1.0), -1.0, 1.0, 64)?,
        )
    };
    let ratio = x0 - x1;
    let (g_min, g_max) = if ratio > 0.0 && ratio < 1.0 {
        g_bounds(cal, ratio)?
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(TwoLevelResult {
        lambda_minus: cal.unscaled(x1),
        lambda_plus: cal.unscaled(x0),
        omega_eff: ratio * cal.delta_e,
        x0,
        x1,
        xa0: sc.x_a(0.0),
        xb1: sc.x_b(1.0),
        g_min,
        g_max,
    })
}

fn g0_lower(cal: &EdgeCalibration, r: f64) -> f64 {
    r * (PI * r / 2.0).tan() / (PI * cal.a_f * cal.rho_e)
}

fn g0_upper(cal: &EdgeCalibration, r: f64) -> f64 {
    let t = PI * r / 2.0;
    r * (1.0 + t.sin()) / (2.0 * t.cos()) / (PI * cal.a_f * cal.rho_e)
}

/// Smallest and largest coupling giving `Omega / Delta E = ratio`.
pub fn g_bounds(cal: &EdgeCalibration, ratio: f64) -> Result<(f64, f64)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain(format!("Omega/Delta E must lie in (0, 1), got {ratio}")));
    }
    Ok((cal.g_from_g0(g0_lower(cal, ratio)), cal.g_from_g0(g0_upper(cal, ratio))))
}

/// Range of `Omega / Delta E` reachable at coupling `g` across the window:
/// `(at the midpoint, at resonance)`.
pub fn omega_bounds(cal: &EdgeCalibration, g: f64) -> Result<(f64, f64)> {
    let g0 = cal.g0(g);
    if g0 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let invert = |curve: fn(&EdgeCalibration, f64) -> f64| decreasing_root(|r| g0 - curve(cal, r), 0.0, 1.0, 64);
    Ok((invert(g0_upper)?, invert(g0_lower)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Parity;

    fn cal() -> EdgeCalibration {
        EdgeCalibration {
            l: 0,
            l_next: 1,
            e_l: -1.8132,
            e_next: -1.7081,
            delta_e: 0.1051,
            rho_e: 0.453,
            a_f: 0.1625,
            b_f: -0.3166,
            lambda_mid: -1.76065,
            parity_l: Parity::Plus,
            size: 21,
            j: 1.0,
        }
    }

    #[test]
    fn midpoint_pair_is_symmetric() {
        let c = cal();
        for g0 in [0.01, 0.1, 1.0, 3.0] {
            let sc = ScaledCoupling::from_w(&c, 0.5, g0).unwrap();
            let r = scaled_pair(&sc, &c).unwrap();
            assert!((r.x0 + r.x1 - 1.0).abs() < 1e-12);
            assert!((r.xa0 + r.xb1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bounds_invert() {
        let c = cal();
        let (lo, hi) = omega_bounds(&c, 0.2).unwrap();
        assert!(lo < hi);
        let (gmin, _) = g_bounds(&c, hi).unwrap();
        let (_, gmax) = g_bounds(&c, lo).unwrap();
        assert!((gmin - 0.2).abs() < 1e-9);
        assert!((gmax - 0.2).abs() < 1e-9);
        assert!(matches!(g_bounds(&c, 1.0), Err(Error::Domain(_))));
    }
}
