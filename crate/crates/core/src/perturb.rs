//! Second-order degenerate perturbation theory around the qubit level.
//!
//! Every quantity here is a sum over the isolated-lattice spectrum weighted by
//! the amplitudes at the two connection sites.

use std::f64::consts::{PI, SQRT_2};

use faer::c64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{EdgeCalibration, Parity, Spectrum};

/// Residues below this are treated as exact zeros.
pub(crate) const ZERO_RESIDUE: f64 = 1e-28;

/// Coupling sums at one energy. All fields except `at_energy` carry units of 1/energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationSums {
    #[serde(serialize_with = "ser_complex")]
    pub s0: c64,
    pub s1: f64,
    pub s2: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    /// Derivatives of `f_plus` and `f_minus` with respect to energy.
    pub f_plus_prime: f64,
    pub f_minus_prime: f64,
    pub at_energy: f64,
}

fn ser_complex<S: serde::Serializer>(z: &c64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl PerturbationSums {
    /// Second-order shifts divided by `g^2`, upper then lower (Hermitian 2x2 form).
    pub fn shifts_over_g2(&self) -> (f64, f64) {
        let mean = 0.5 * (self.s1 + self.s2);
        let half = 0.5 * ((self.s1 - self.s2).powi(2) + 4.0 * self.s0.norm_sqr()).sqrt();
        (mean + half, mean - half)
    }

    pub fn f(&self, parity: Parity) -> f64 {
        match parity {
            Parity::Plus => self.f_plus,
            Parity::Minus => self.f_minus,
        }
    }

    pub fn f_prime(&self, parity: Parity) -> f64 {
        match parity {
            Parity::Plus => self.f_plus_prime,
            Parity::Minus => self.f_minus_prime,
        }
    }
}

/// One pole of the coupling sums: a lattice level and its port amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pole {
    pub energy: f64,
    /// `psi_n(port1)`
    pub a: c64,
    /// `psi_n(port2)`
    pub b: c64,
}

/// Precomputed port amplitudes of an isolated-lattice spectrum; evaluates the
/// sums at any energy in `O(N)`.
#[derive(Clone, Debug)]
pub struct CouplingSums {
    poles: Vec<Pole>,
    ports: [usize; 2],
    j: f64,
}

impl CouplingSums {
    /// Port sites are 1-based lattice indices.
    pub fn from_spectrum(spectrum: &Spectrum, ports: [usize; 2]) -> Result<Self> {
        if spectrum.has_qubits() {
            return Err(Error::Input("coupling sums need the isolated lattice spectrum".into()));
        }
        let n_sites = spectrum.lattice().len();
        for p in ports {
            if p == 0 || p > n_sites {
                return Err(Error::Input(format!("port {p} outside 1..={n_sites}")));
            }
        }
        let (i1, i2) = (spectrum.basis_index(ports[0]), spectrum.basis_index(ports[1]));
        let poles = (0..spectrum.len())
            .map(|n| Pole {
                energy: spectrum.eigenvalues()[n],
                a: spectrum.amplitude(i1, n),
                b: spectrum.amplitude(i2, n),
            })
            .collect();
        Ok(CouplingSums {
            poles,
            ports,
            j: spectrum.hopping(),
        })
    }

    pub fn from_poles(poles: Vec<Pole>, ports: [usize; 2], j: f64) -> Self {
        CouplingSums { poles, ports, j }
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn ports(&self) -> [usize; 2] {
        self.ports
    }

    pub fn hopping(&self) -> f64 {
        self.j
    }

    /// Parity of state `n` read off the black-corner relation `psi(L^2) = +-psi(1)`.
    pub fn parity_of(&self, n: usize) -> Result<Parity> {
        let p = &self.poles[n];
        let scale = p.a.norm().max(p.b.norm());
        if scale < 1e-12 {
            return Err(Error::DegenerateCoupling(n));
        }
        let overlap = (p.b * p.a.conj()).re / (scale * scale);
        if (overlap.abs() - 1.0).abs() > 1e-6 {
            return Err(Error::SymmetryUnavailable(format!(
                "state {n} has unequal port amplitudes"
            )));
        }
        Ok(Parity::from_sign(overlap))
    }

    /// Nearest pole with a nonzero residue, and its distance.
    pub fn nearest_pole(&self, energy: f64) -> Option<(usize, f64)> {
        self.poles
            .iter()
            .enumerate()
            .filter(|(_, p)| p.a.norm_sqr() + p.b.norm_sqr() > ZERO_RESIDUE)
            .map(|(n, p)| (n, (energy - p.energy).abs()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
    }

    /// Direct sums at `energy`; `f_plus/f_minus` are `S1 +- Re S0`.
    pub fn evaluate(&self, energy: f64) -> Result<PerturbationSums> {
        if let Some(p) = self.poles.iter().find(|p| (energy - p.energy).abs() <= 1e-9) {
            return Err(Error::Pole {
                energy,
                pole: p.energy,
                distance: (energy - p.energy).abs(),
            });
        }
        Ok(self.evaluate_unchecked(energy))
    }

    pub(crate) fn evaluate_unchecked(&self, energy: f64) -> PerturbationSums {
        let mut s0 = c64::new(0.0, 0.0);
        let mut s0p = c64::new(0.0, 0.0);
        let (mut s1, mut s2, mut s1p) = (0.0, 0.0, 0.0);
        for p in &self.poles {
            let inv = 1.0 / (energy - p.energy);
            let inv2 = inv * inv;
            let w1 = p.a.norm_sqr();
            let cross = p.a * p.b.conj();
            s0 += cross * inv;
            s0p -= cross * inv2;
            s1 += w1 * inv;
            s2 += p.b.norm_sqr() * inv;
            s1p -= w1 * inv2;
        }
        PerturbationSums {
            s0,
            s1,
            s2,
            f_plus: s1 + s0.re,
            f_minus: s1 - s0.re,
            f_plus_prime: s1p + s0p.re,
            f_minus_prime: s1p - s0p.re,
            at_energy: energy,
        }
    }

    /// `f` of one parity by the parity-resolved form `2 sum_{D} |psi(1)|^2 / (lambda - E)`.
    pub fn f_by_parity(&self, parities: &[Parity], parity: Parity, energy: f64) -> f64 {
        self.poles
            .iter()
            .zip(parities)
            .filter(|(_, q)| **q == parity)
            .map(|(p, _)| 2.0 * p.a.norm_sqr() / (energy - p.energy))
            .sum()
    }
}

/// Coupling sums of an isolated square lattice at its corners.
pub fn coupling_sums(spectrum: &Spectrum, energy: f64) -> Result<PerturbationSums> {
    let n = spectrum.lattice().len();
    CouplingSums::from_spectrum(spectrum, [1, n])?.evaluate(energy)
}

/// Cot/tan model of `f+-` near the window; returns `(f_plus, f_minus)`.
pub fn f_pm_approx(cal: &EdgeCalibration, lambda: f64) -> (f64, f64) {
    let phase = PI * (lambda - cal.e_l) / (2.0 * cal.delta_e);
    let pole_side = cal.a_f * PI / cal.j / phase.tan() + cal.b_f / cal.j;
    let other = -cal.a_f * PI / cal.j * phase.tan() + cal.b_f / cal.j;
    match cal.parity_l {
        Parity::Plus => (pole_side, other),
        Parity::Minus => (other, pole_side),
    }
}

/// Energy derivatives of [`f_pm_approx`].
pub fn f_pm_approx_prime(cal: &EdgeCalibration, lambda: f64) -> (f64, f64) {
    let k = PI / (2.0 * cal.delta_e);
    let phase = k * (lambda - cal.e_l);
    let pole_side = -cal.a_f * PI / cal.j * k / phase.sin().powi(2);
    let other = -cal.a_f * PI / cal.j * k / phase.cos().powi(2);
    match cal.parity_l {
        Parity::Plus => (pole_side, other),
        Parity::Minus => (other, pole_side),
    }
}

/// Perturbative effective frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbativeOmega {
    /// `g^2 |f+ - f-|` from the direct sums.
    pub exact: f64,
    /// `2 pi A_f g^2 / (J sin(pi (eps - E_l) / Delta E))`.
    pub closed_form: f64,
}

pub fn omega_perturbative(cal: &EdgeCalibration, sums: &PerturbationSums, g: f64) -> Result<PerturbativeOmega> {
    let eps = sums.at_energy;
    check_resonance(cal, eps)?;
    let s = (PI * (eps - cal.e_l) / cal.delta_e).sin();
    Ok(PerturbativeOmega {
        exact: g * g * (sums.f_plus - sums.f_minus).abs(),
        closed_form: 2.0 * PI * cal.a_f * g * g / (cal.j * s.abs()),
    })
}

/// Errors when `eps` is within `1e-6 Delta E` of a window level.
pub fn check_resonance(cal: &EdgeCalibration, eps: f64) -> Result<()> {
    let threshold = 1e-6 * cal.delta_e;
    for pole in [cal.e_l, cal.e_next] {
        let distance = (eps - pole).abs();
        if distance < threshold {
            return Err(Error::Pole {
                energy: eps,
                pole,
                distance,
            });
        }
    }
    Ok(())
}

/// Three-state oscillation at exact resonance with a window level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Resonance {
    pub omega0: f64,
    pub period: f64,
    pub energy: f64,
}

impl Resonance {
    /// `(P_Q1, P_Q2, P_lattice)` at time `t`.
    pub fn populations(&self, t: f64) -> (f64, f64, f64) {
        let c = (0.5 * self.omega0 * t).cos();
        let s = (0.5 * self.omega0 * t).sin();
        let q1 = c.powi(4);
        let q2 = s.powi(4);
        (q1, q2, 0.5 * (self.omega0 * t).sin().powi(2))
    }
}

/// `Omega_0 = g |psi_l(1)| sqrt 2` for level `l` of the isolated square lattice.
pub fn resonance_dynamics(spectrum: &Spectrum, l: usize, g: f64) -> Result<Resonance> {
    if spectrum.has_qubits() {
        return Err(Error::Input("resonance needs the isolated lattice spectrum".into()));
    }
    if l >= spectrum.len() {
        return Err(Error::Input(format!("state {l} out of range")));
    }
    let amp = spectrum.amplitude(spectrum.basis_index(1), l).norm();
    if amp < 1e-12 {
        return Err(Error::DegenerateCoupling(l));
    }
    let omega0 = g * amp * SQRT_2;
    Ok(Resonance {
        omega0,
        period: 2.0 * PI / omega0,
        energy: spectrum.eigenvalues()[l],
    })
}

/// Closed form of `|sum_n exp(i alpha n) / (z - n)|`.
pub fn s0_distance_kernel(alpha: f64, z: f64) -> Result<f64> {
    if (z - z.round()).abs() < 1e-12 {
        return Err(Error::Pole {
            energy: z,
            pole: z.round(),
            distance: (z - z.round()).abs(),
        });
    }
    let is_periodic_zero = (alpha / (2.0 * PI) - (alpha / (2.0 * PI)).round()).abs() < 1e-15;
    Ok(if alpha == 0.0 || is_periodic_zero {
        (PI / (PI * z).tan()).abs()
    } else {
        PI / (PI * z).sin().abs()
    })
}

/// Symmetric partial sum `|sum_{|n| <= n_max} exp(i alpha n) / (z - n)|`.
pub fn s0_partial_sum(alpha: f64, z: f64, n_max: i64) -> f64 {
    let mut acc = c64::new(0.0, 0.0);
    for n in -n_max..=n_max {
        acc += c64::cis(alpha * n as f64) / (z - n as f64);
    }
    acc.norm()
}

/// Mean `|psi_n(site)|` over the given states, the amplitude prefactor of the distance estimate.
pub fn mean_port_amplitude(sums: &CouplingSums, states: &[usize]) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    states.iter().map(|&n| sums.poles()[n].a.norm()).sum::<f64>() / states.len() as f64
}
