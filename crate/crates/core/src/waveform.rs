//! Piecewise-constant amplitude control waveforms.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dpss::Taper;
use crate::error::{param, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    /// Rabi amplitudes Omega_n in rad/s.
    pub omega: Vec<f64>,
    /// Segment duration in seconds.
    pub dt: f64,
    pub label: String,
}

impl Waveform {
    pub fn new(omega: Vec<f64>, dt: f64, label: impl Into<String>) -> Result<Self> {
        if omega.is_empty() {
            return param("waveform needs at least one segment");
        }
        if !(dt > 0.0) {
            return param("segment duration must be positive");
        }
        if omega.iter().any(|x| !x.is_finite()) {
            return param("waveform amplitudes must be finite");
        }
        Ok(Waveform { omega, dt, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.omega.len() as f64
    }

    /// Theta(T) = dt * sum Omega_n.
    pub fn rotation_angle(&self) -> f64 {
        self.dt * self.omega.iter().sum::<f64>()
    }

    /// Integral of Omega(t)^2 over [0, T].
    pub fn power(&self) -> f64 {
        self.dt * self.omega.iter().map(|x| x * x).sum::<f64>()
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    pub fn max_abs(&self) -> f64 {
        self.omega.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, c: f64) -> Waveform {
        Waveform { omega: self.omega.iter().map(|x| x * c).collect(), dt: self.dt, label: self.label.clone() }
    }

    pub fn check_cap(&self, omega_max: f64) -> Result<()> {
        if self.max_abs() > omega_max {
            return param(format!("waveform `{}` peaks at {} rad/s above the cap {omega_max}", self.label, self.max_abs()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Cos,
    Sin,
    Ssb,
}

pub fn dpss_waveform(taper: &Taper, scale: f64, dt: f64) -> Result<Waveform> {
    Waveform::new(taper.values.iter().map(|v| scale * v).collect(), dt, format!("dpss k={}", taper.order))
}

/// Discrete Hilbert transform: imaginary part of the analytic signal,
/// computed on a zero-padded transform of length >= 4N.
pub fn hilbert(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let l = (4 * n).max(8).next_power_of_two();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(l, Complex::new(0.0, 0.0));
    planner.plan_fft_forward(l).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let h = if k == 0 || k == l / 2 {
            1.0
        } else if k < l / 2 {
            2.0
        } else {
            0.0
        };
        *z *= h;
    }
    planner.plan_fft_inverse(l).process(&mut buf);
    buf[..n].iter().map(|z| z.im / l as f64).collect()
}

pub fn modulate(w: &Waveform, mode: Modulation, omega_s: f64) -> Result<Waveform> {
    let limit = 2.0 * PI / w.dt;
    if !(0.0..limit).contains(&omega_s) {
        return param(format!("shift {omega_s} rad/s outside [0, 2pi/dt = {limit})"));
    }
    let phase = |n: usize| n as f64 * omega_s * w.dt;
    let omega: Vec<f64> = match mode {
        Modulation::Cos => w.omega.iter().enumerate().map(|(n, v)| v * phase(n).cos()).collect(),
        Modulation::Sin => w.omega.iter().enumerate().map(|(n, v)| v * phase(n).sin()).collect(),
        Modulation::Ssb => {
            let h = hilbert(&w.omega);
            w.omega
                .iter()
                .zip(&h)
                .enumerate()
                .map(|(n, (v, hv))| v * phase(n).cos() - hv * phase(n).sin())
                .collect()
        }
    };
    let tag = match mode {
        Modulation::Cos => "cos",
        Modulation::Sin => "sin",
        Modulation::Ssb => "ssb",
    };
    Ok(Waveform { omega, dt: w.dt, label: format!("{} {tag}@{omega_s:.6e}", w.label) })
}

/// COS and SIN members of a CS pair built on the same taper.
pub fn cs_pair(taper: &Taper, scale: f64, dt: f64, omega_s: f64) -> Result<(Waveform, Waveform)> {
    let base = dpss_waveform(taper, scale, dt)?;
    Ok((modulate(&base, Modulation::Cos, omega_s)?, modulate(&base, Modulation::Sin, omega_s)?))
}

pub fn normalize_power(w: &Waveform, target: f64) -> Result<Waveform> {
    let p = w.power();
    if !(p > 0.0) {
        return param(format!("cannot normalize all-zero waveform `{}`", w.label));
    }
    if !(target > 0.0) {
        return param("power target must be positive");
    }
    Ok(w.scaled((target / p).sqrt()))
}

/// Scale both members by one factor so their combined power hits the target.
pub fn normalize_pair(a: &Waveform, b: &Waveform, target: f64) -> Result<(Waveform, Waveform)> {
    let p = a.power() + b.power();
    if !(p > 0.0) {
        return param("cannot normalize an all-zero waveform pair");
    }
    let c = (target / p).sqrt();
    Ok((a.scaled(c), b.scaled(c)))
}

/// Flat-top waveform switching sign at (2j-1)T/(2n), j = 1..n.
pub fn cpmg_rse(n_switches: usize, amplitude: f64, total_time: f64, n_segments: usize) -> Result<Waveform> {
    if n_segments == 0 || !(total_time > 0.0) {
        return param("CPMG waveform needs positive duration and segment count");
    }
    if n_switches > 0 && n_segments % (2 * n_switches) != 0 {
        return param(format!("N = {n_segments} is not a multiple of 2n = {}", 2 * n_switches));
    }
    let dt = total_time / n_segments as f64;
    let omega = (0..n_segments)
        .map(|i| {
            if n_switches == 0 {
                return amplitude;
            }
            // Segment i lies in the interval after floor((2 n i / N + 1) / 2) switches.
            let flips = (2 * n_switches * i / n_segments + 1) / 2;
            if flips % 2 == 0 {
                amplitude
            } else {
                -amplitude
            }
        })
        .collect();
    Waveform::new(omega, dt, format!("cpmg n={n_switches}"))
}

pub fn repeat_base(w: &Waveform, repetitions: usize) -> Result<Waveform> {
    if repetitions == 0 {
        return param("repetition count must be at least 1");
    }
    let mut omega = Vec::with_capacity(w.len() * repetitions);
    for _ in 0..repetitions {
        omega.extend_from_slice(&w.omega);
    }
    Ok(Waveform { omega, dt: w.dt, label: format!("{} x{repetitions}", w.label) })
}

/// Linear combination sum_k c_k v_k of tapers.
pub fn combine_tapers(tapers: &[Taper], coeffs: &[f64], scale: f64, dt: f64) -> Result<Waveform> {
    if tapers.len() != coeffs.len() || tapers.is_empty() {
        return param("taper and coefficient counts differ");
    }
    let n = tapers[0].len();
    let mut omega = vec![0.0; n];
    for (t, c) in tapers.iter().zip(coeffs) {
        for (o, v) in omega.iter_mut().zip(&t.values) {
            *o += scale * c * v;
        }
    }
    Waveform::new(omega, dt, "ssqm")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpss::{compute_dpss, DpssParams};

    #[test]
    fn cos_at_zero_is_identity() {
        let w = Waveform::new(vec![1.0, -2.0, 3.0], 1e-6, "x").unwrap();
        assert_eq!(modulate(&w, Modulation::Cos, 0.0).unwrap().omega, w.omega);
        assert!(modulate(&w, Modulation::Sin, 0.0).unwrap().omega.iter().all(|&x| x == 0.0));
        assert!(modulate(&w, Modulation::Cos, 2.0 * PI / 1e-6).is_err());
    }

    #[test]
    fn cos_sin_energy_split() {
        let p = DpssParams::new(100, 0.04).unwrap();
        let t = &compute_dpss(&p, 1).unwrap()[1];
        let (c, s) = cs_pair(t, 3.0, 1e-5, 2.0e4).unwrap();
        for n in 0..100 {
            let base = 3.0 * t.values[n];
            assert!((c.omega[n].powi(2) + s.omega[n].powi(2) - base * base).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let w = Waveform::new(vec![0.3, 0.1, -0.2, 0.5], 4e-6, "x").unwrap();
        let a = normalize_power(&w, 900.0).unwrap();
        let b = normalize_power(&a, 900.0).unwrap();
        assert!((a.power() - 900.0).abs() < 1e-10);
        for (x, y) in a.omega.iter().zip(&b.omega) {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
        assert!(normalize_power(&w.scaled(0.0), 900.0).is_err());
    }

    #[test]
    fn cpmg_switch_positions() {
        let w = cpmg_rse(2, 1.0, 1.0, 8).unwrap();
        assert_eq!(w.omega, vec![1.0, 1.0, -1.0, -1.0, -1.0, -1.0, 1.0, 1.0]);
        let w = cpmg_rse(3, 1.0, 1.0, 6).unwrap();
        assert_eq!(w.omega, vec![1.0, -1.0, -1.0, 1.0, 1.0, -1.0]);
        assert!(cpmg_rse(3, 1.0, 1.0, 8).is_err());
        assert_eq!(cpmg_rse(0, 2.0, 1.0, 5).unwrap().omega, vec![2.0; 5]);
    }

    #[test]
    fn odd_cpmg_has_zero_area() {
        for n in [1usize, 3, 7] {
            let w = cpmg_rse(n, 5.0, 2e-3, 2 * n * 10).unwrap();
            assert!(w.rotation_angle().abs() < 1e-12);
        }
    }

    #[test]
    fn repeat_multiplies_angle() {
        let w = Waveform::new(vec![1.0, 2.0, 0.5], 1e-3, "b").unwrap();
        let r = repeat_base(&w, 20).unwrap();
        assert_eq!(r.len(), 60);
        assert!((r.rotation_angle() - 20.0 * w.rotation_angle()).abs() < 1e-12);
        assert_eq!(repeat_base(&w, 1).unwrap().omega, w.omega);
    }

    #[test]
    fn hilbert_of_cosine_is_sine() {
        let n = 256;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 16.0 * i as f64 / n as f64).cos()).collect();
        let h = hilbert(&x);
        // Away from the edges the padded transform acts like the continuous one.
        for i in 64..192 {
            let want = (2.0 * PI * 16.0 * i as f64 / n as f64).sin();
            assert!((h[i] - want).abs() < 0.05, "i={i} {} {want}", h[i]);
        }
    }
}
