//! Exact single-excitation evolution by phase rotation of eigen-coefficients,
//! and frequency/fidelity extraction from the resulting traces.

use std::f64::consts::PI;

use faer::c64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::Spectrum;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DynamicsTrace {
    /// Units of `1/J`.
    pub times: Vec<f64>,
    pub p_q1: Vec<f64>,
    pub p_q2: Vec<f64>,
    /// Total population on lattice sites.
    pub p_lat: Vec<f64>,
}

impl DynamicsTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Input("time list is empty".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Input("time list contains non-finite values".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Input("time list is not monotone".into()));
    }
    Ok(())
}

/// `n` uniform samples on `[0, t_max]`.
pub fn uniform_times(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Populations after exciting basis state `initial` at `t = 0`.
///
/// Only the two qubit amplitudes are formed explicitly; the lattice share is
/// the conserved norm `sum |c_n|^2` minus the qubit populations.
pub fn evolve(spectrum: &Spectrum, initial: usize, times: &[f64]) -> Result<DynamicsTrace> {
    check_times(times)?;
    let n = spectrum.len();
    if initial >= n {
        return Err(Error::Input(format!(
            "initial index {initial} outside basis of size {n}"
        )));
    }
    let v = spectrum.vectors();
    let e = spectrum.eigenvalues();
    let c: Vec<c64> = (0..n).map(|k| v[(initial, k)].conj()).collect();
    let norm: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    let rows = spectrum.qubit_indices();
    // products c_n psi_n(Q) for both qubit rows
    let (w1, w2): (Vec<c64>, Vec<c64>) = match rows {
        Some((a, b)) => (0..n).map(|k| (c[k] * v[(a, k)], c[k] * v[(b, k)])).unzip(),
        None => (Vec::new(), Vec::new()),
    };
    let mut trace = DynamicsTrace {
        times: times.to_vec(),
        p_q1: Vec::with_capacity(times.len()),
        p_q2: Vec::with_capacity(times.len()),
        p_lat: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let (mut a1, mut a2) = (c64::new(0.0, 0.0), c64::new(0.0, 0.0));
        for k in 0..w1.len() {
            let phase = c64::cis(-e[k] * t);
            a1 += w1[k] * phase;
            a2 += w2[k] * phase;
        }
        let (p1, p2) = (a1.norm_sqr().min(1.0), a2.norm_sqr().min(1.0));
        trace.p_q1.push(p1);
        trace.p_q2.push(p2);
        trace.p_lat.push((norm - p1 - p2).clamp(0.0, 1.0));
    }
    Ok(trace)
}

/// Full state `exp(-iHt) psi` in the site basis.
pub fn evolve_state(spectrum: &Spectrum, psi: &[c64], t: f64) -> Result<Vec<c64>> {
    let n = spectrum.len();
    if psi.len() != n {
        return Err(Error::Input(format!("state has length {}, basis has {n}", psi.len())));
    }
    let v = spectrum.vectors();
    let e = spectrum.eigenvalues();
    let coeff: Vec<c64> = (0..n)
        .map(|k| {
            let mut s = c64::new(0.0, 0.0);
            for i in 0..n {
                s += v[(i, k)].conj() * psi[i];
            }
            s * c64::cis(-e[k] * t)
        })
        .collect();
    Ok((0..n)
        .map(|i| {
            let mut s = c64::new(0.0, 0.0);
            for k in 0..n {
                s += v[(i, k)] * coeff[k];
            }
            s
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceAnalysis {
    /// Dominant angular frequency of `p_q2`.
    pub omega: f64,
    /// Mean of `p_q1 + p_q2` over an integer number of dominant periods.
    pub fidelity: f64,
    pub max_transfer: f64,
    /// Periods covered by the fidelity window.
    pub periods: usize,
}

/// Frequency, fidelity and maximum transfer of a uniformly sampled trace.
pub fn analyze_trace(trace: &DynamicsTrace) -> Result<TraceAnalysis> {
    let n = trace.len();
    if n < 16 {
        return Err(Error::Analysis(format!("{n} samples are too few")));
    }
    let dt = (trace.times[n - 1] - trace.times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Analysis("trace has zero duration".into()));
    }
    let uniform = trace.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
    if !uniform {
        return Err(Error::Analysis("samples are not uniformly spaced".into()));
    }

    let mean = trace.p_q2.iter().sum::<f64>() / n as f64;
    let padded = 4 * n.next_power_of_two();
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = (0..padded)
        .map(|k| {
            let x = if k < n {
                let hann = 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
                (trace.p_q2[k] - mean) * hann
            } else {
                0.0
            };
            rustfft::num_complex::Complex::new(x, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let power: Vec<f64> = buf[..padded / 2].iter().map(|z| z.norm_sqr()).collect();
    // bins below 2 carry the window's own leakage from the mean
    let (peak, &p_max) = power
        .iter()
        .enumerate()
        .skip(2)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Analysis("empty spectrum".into()))?;
    let amplitude = trace.p_q2.iter().fold(0.0_f64, |m, p| m.max((p - mean).abs()));
    if !(p_max > 1e-24 * padded as f64) || amplitude < 1e-10 {
        return Err(Error::Analysis("no spectral peak above the noise floor".into()));
    }
    let offset = if peak + 1 < power.len() {
        let (a, b, c) = (power[peak - 1].ln(), p_max.ln(), power[peak + 1].ln());
        let denom = a - 2.0 * b + c;
        if denom.is_finite() && denom != 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let freq = (peak as f64 + offset) / (padded as f64 * dt);
    let omega = 2.0 * PI * freq;

    let period = 1.0 / freq;
    let span = trace.times[n - 1] - trace.times[0];
    let periods = (span / period).floor() as usize;
    let end = if periods >= 1 {
        trace.times[0] + periods as f64 * period
    } else {
        trace.times[n - 1]
    };
    let last = trace.times.partition_point(|&t| t <= end + 1e-12 * span).max(2) - 1;
    let kept: Vec<f64> = (0..=last).map(|k| trace.p_q1[k] + trace.p_q2[k]).collect();
    let fidelity = if last == 0 {
        kept[0]
    } else {
        let interior: f64 = kept[1..last].iter().sum();
        (interior + 0.5 * (kept[0] + kept[last])) / last as f64
    };
    Ok(TraceAnalysis {
        omega,
        fidelity,
        max_transfer: trace.p_q2.iter().copied().fold(0.0, f64::max),
        periods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_system, SystemSpec};
    use crate::spectral::diagonalize;

    fn small() -> Spectrum {
        let h = build_system(&SystemSpec::square_with_qubits(5, -1.7, 0.2)).unwrap();
        diagonalize(&h).unwrap()
    }

    #[test]
    fn rejects_bad_times() {
        let s = small();
        assert!(matches!(evolve(&s, 0, &[]), Err(Error::Input(_))));
        assert!(matches!(evolve(&s, 0, &[0.0, 2.0, 1.0]), Err(Error::Input(_))));
    }

    #[test]
    fn populations_sum_to_one() {
        let s = small();
        let tr = evolve(&s, 0, &uniform_times(200.0, 300)).unwrap();
        for k in 0..tr.len() {
            assert!((tr.p_q1[k] + tr.p_q2[k] + tr.p_lat[k] - 1.0).abs() < 1e-12);
        }
        assert_eq!(tr.p_q1[0], 1.0_f64.min(tr.p_q1[0]));
        assert!((tr.p_q1[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_tone_frequency() {
        let times = uniform_times(1000.0, 4096);
        let omega = 0.173;
        let p: Vec<f64> = times.iter().map(|t| (0.5 * omega * t).sin().powi(2)).collect();
        let tr = DynamicsTrace {
            p_q1: p.iter().map(|x| 1.0 - x).collect(),
            p_lat: vec![0.0; p.len()],
            p_q2: p,
            times,
        };
        let a = analyze_trace(&tr).unwrap();
        assert!((a.omega - omega).abs() < 1e-3 * omega);
        assert!((a.fidelity - 1.0).abs() < 1e-12);
        assert!(a.max_transfer > 0.999);
    }

    #[test]
    fn flat_trace_has_no_peak() {
        let times = uniform_times(10.0, 64);
        let tr = DynamicsTrace {
            p_q1: vec![1.0; 64],
            p_q2: vec![0.0; 64],
            p_lat: vec![0.0; 64],
            times,
        };
        assert!(matches!(analyze_trace(&tr), Err(Error::Analysis(_))));
    }
}
