use faer::c64;

use crate::error::{Error, Result};
use crate::perturb::{CouplingSums, ZERO_RESIDUE};
use crate::roots::bisect;

/// Exact dressed levels of two qubits attached to arbitrary lattice sites,
/// from the isolated-lattice spectrum.
///
/// A level `lambda` of the full system is a zero of `K(lambda) - lambda` with
/// `K = diag(eps) + D G(lambda) D` and `G_ij = sum_n psi_n(s_i) psi_n(s_j)^* / (lambda - E_n)`.
/// Counting uses the inertia of that Schur complement, so levels are found by
/// bisection on an integer count and never missed.
#[derive(Clone, Debug)]
pub struct TwoPort<'a> {
    sums: &'a CouplingSums,
    eps: [f64; 2],
    g: [f64; 2],
}

/// `(K - lambda)` entries `m11, m12, m22` and the derivative matrix `P = -D G' D`.
struct Block {
    m11: f64,
    m12: c64,
    m22: f64,
    p11: f64,
    p12: c64,
    p22: f64,
}

impl<'a> TwoPort<'a> {
    pub fn new(sums: &'a CouplingSums, eps: [f64; 2], g: [f64; 2]) -> Self {
        TwoPort { sums, eps, g }
    }

    fn block(&self, lambda: f64) -> Block {
        let mut g11 = 0.0;
        let mut g22 = 0.0;
        let mut g12 = c64::new(0.0, 0.0);
        let mut d11 = 0.0;
        let mut d22 = 0.0;
        let mut d12 = c64::new(0.0, 0.0);
        for p in self.sums.poles() {
            let (wa, wb) = (p.a.norm_sqr(), p.b.norm_sqr());
            if wa + wb <= ZERO_RESIDUE {
                continue;
            }
            let inv = 1.0 / (lambda - p.energy);
            let cross = p.a * p.b.conj();
            g11 += wa * inv;
            g22 += wb * inv;
            g12 += cross * inv;
            let inv2 = inv * inv;
            d11 += wa * inv2;
            d22 += wb * inv2;
            d12 += cross * inv2;
        }
        let [g1, g2] = self.g;
        Block {
            m11: self.eps[0] + g1 * g1 * g11 - lambda,
            m12: g12 * (g1 * g2),
            m22: self.eps[1] + g2 * g2 * g22 - lambda,
            p11: g1 * g1 * d11,
            p12: d12 * (g1 * g2),
            p22: g2 * g2 * d22,
        }
    }

    /// Number of levels of the full system strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let lattice = self.sums.poles().iter().filter(|p| p.energy < lambda).count();
        let b = self.block(lambda);
        let det = b.m11 * b.m22 - b.m12.norm_sqr();
        let trace = b.m11 + b.m22;
        let negative = if det < 0.0 {
            1
        } else if trace < 0.0 {
            2
        } else {
            0
        };
        lattice + negative
    }

    /// All levels in the open interval `(lo, hi)`, ascending.
    pub fn levels_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n_lo = self.count_below(lo);
        let n_hi = self.count_below(hi);
        (n_lo..n_hi)
            .map(|k| {
                // smallest lambda whose count exceeds k
                let f = |x: f64| if self.count_below(x) > k { -1.0 } else { 1.0 };
                bisect(f, lo, hi, 1.0, 0.0)
            })
            .collect()
    }

    /// `(|psi(Q1)|^2, |psi(Q2)|^2)` of the level at `lambda`.
    pub fn weights(&self, lambda: f64) -> Result<(f64, f64)> {
        let b = self.block(lambda);
        // null vector of the 2x2 Hermitian block: eigenvector of the eigenvalue nearest zero
        let half_diff = 0.5 * (b.m11 - b.m22);
        let root = (half_diff * half_diff + b.m12.norm_sqr()).sqrt();
        let mean = 0.5 * (b.m11 + b.m22);
        let (e_lo, e_hi) = (mean - root, mean + root);
        let e = if e_lo.abs() <= e_hi.abs() { e_lo } else { e_hi };
        let (u1, u2) = if b.m12.norm() > 1e-300 {
            let v = (b.m12, c64::new(e - b.m11, 0.0));
            let alt = (c64::new(e - b.m22, 0.0), b.m12.conj());
            if v.0.norm_sqr() + v.1.norm_sqr() >= alt.0.norm_sqr() + alt.1.norm_sqr() {
                v
            } else {
                alt
            }
        } else if b.m11.abs() <= b.m22.abs() {
            (c64::new(1.0, 0.0), c64::new(0.0, 0.0))
        } else {
            (c64::new(0.0, 0.0), c64::new(1.0, 0.0))
        };
        let norm2 = u1.norm_sqr() + u2.norm_sqr();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::Solver {
                lo: lambda,
                hi: lambda,
                detail: "no null vector at level".into(),
            });
        }
        let quad = b.p11 * u1.norm_sqr() + b.p22 * u2.norm_sqr() + 2.0 * (u1.conj() * b.p12 * u2).re;
        let total = norm2 + quad;
        Ok((u1.norm_sqr() / total, u2.norm_sqr() / total))
    }
}
