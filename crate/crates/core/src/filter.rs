//! Amplitude filter functions F(omega) = s(omega, dt) |sum_n Omega_n e^{i omega n dt}|^2.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dtft::dtft_power;
use crate::error::{param, Error, Result};
use crate::psd::PsdModel;
use crate::quad::{trigamma, Integrator};
use crate::waveform::Waveform;

/// Default broadband cutoff as a multiple of the control Nyquist frequency.
pub const DEFAULT_CUTOFF_MULTIPLE: f64 = 8.0;

/// s(omega, dt) = sin^2(omega dt / 2) / omega^2, with the limit dt^2/4 at zero.
pub fn envelope(omega: f64, dt: f64) -> f64 {
    let x = 0.5 * omega * dt;
    if x.abs() < 1e-8 {
        dt * dt / 4.0 * (1.0 - x * x / 3.0)
    } else {
        let s = x.sin();
        s * s / (omega * omega)
    }
}

pub fn filter_eval(w: &Waveform, omega: f64) -> f64 {
    envelope(omega, w.dt) * dtft_power(&w.omega, omega * w.dt)
}

/// Weighted sum of single-waveform filters sharing one segment duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCurve {
    components: Vec<(f64, Waveform)>,
    dt: f64,
}

impl FilterCurve {
    pub fn new(w: &Waveform) -> Self {
        FilterCurve { components: vec![(1.0, w.clone())], dt: w.dt }
    }

    pub fn sum(ws: &[Waveform]) -> Result<Self> {
        Self::weighted(ws.iter().map(|w| (1.0, w.clone())).collect())
    }

    pub fn weighted(components: Vec<(f64, Waveform)>) -> Result<Self> {
        let Some(first) = components.first() else {
            return param("filter needs at least one waveform");
        };
        let dt = first.1.dt;
        if components.iter().any(|(_, w)| (w.dt - dt).abs() > 1e-12 * dt) {
            return param("filter components must share one segment duration");
        }
        Ok(FilterCurve { components, dt })
    }

    pub fn components(&self) -> &[(f64, Waveform)] {
        &self.components
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    pub fn duration(&self) -> f64 {
        self.components.iter().map(|(_, w)| w.duration()).fold(0.0, f64::max)
    }

    /// Main-lobe width 2pi/T.
    pub fn lobe_width(&self) -> f64 {
        2.0 * PI / self.duration()
    }

    /// Weighted time-domain power; (4/pi) times the positive-frequency area.
    pub fn power(&self) -> f64 {
        self.components.iter().map(|(c, w)| c * w.power()).sum()
    }

    /// Weighted |Omega~(omega)|^2 without the envelope; periodic in 2 omega_N.
    pub fn dtft_power(&self, omega: f64) -> f64 {
        self.components.iter().map(|(c, w)| c * dtft_power(&w.omega, omega * self.dt)).sum()
    }

    pub fn eval(&self, omega: f64) -> f64 {
        envelope(omega, self.dt) * self.dtft_power(omega)
    }

    pub fn sample(&self, omegas: &[f64]) -> Vec<f64> {
        omegas.iter().map(|&w| self.eval(w)).collect()
    }

    pub fn integrator(&self) -> Integrator {
        Integrator::new(self.lobe_width() / 2.0).with_tol(1e-9, 0.0)
    }

    /// Integral of F over [a, b].
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.integrator().integrate(&|w| self.eval(w), a, b, &[]).value
    }

    /// Integral of F * g over [a, b] with extra panel breakpoints.
    pub fn weighted_integral(&self, a: f64, b: f64, g: &dyn Fn(f64) -> f64, breaks: &[f64]) -> f64 {
        self.integrator().integrate(&|w| self.eval(w) * g(w), a, b, breaks).value
    }

    /// Integral of F over [0, inf), folding every Nyquist period onto [0, 2 omega_N]
    /// and summing the envelope tail in closed form with the trigamma function.
    pub fn total_area(&self) -> f64 {
        let wn = self.nyquist();
        let dt = self.dt;
        let weight = |w: f64| {
            let s = (0.5 * w * dt).sin();
            envelope(w, dt) + s * s * trigamma(1.0 + w / (2.0 * wn)) / (4.0 * wn * wn)
        };
        self.integrator().integrate(&|w| self.dtft_power(w) * weight(w), 0.0, 2.0 * wn, &[]).value
    }

    /// Integral of F over [x, inf).
    pub fn tail_area(&self, x: f64) -> f64 {
        (self.total_area() - self.integral(0.0, x)).max(0.0)
    }

    /// Integral of F over [2 m omega_N, inf) for m >= 1.
    pub fn area_beyond_period(&self, m: usize) -> f64 {
        if m == 0 {
            return self.total_area();
        }
        let wn = self.nyquist();
        let dt = self.dt;
        let weight = |w: f64| {
            let s = (0.5 * w * dt).sin();
            s * s * trigamma(m as f64 + w / (2.0 * wn)) / (4.0 * wn * wn)
        };
        self.integrator().integrate(&|w| self.dtft_power(w) * weight(w), 0.0, 2.0 * wn, &[]).value
    }

    /// Integral of F over [x, cutoff]. When the cutoff is a whole number of Nyquist
    /// periods the long stretch is obtained by folding instead of direct quadrature.
    pub fn area_between(&self, x: f64, cutoff: f64) -> f64 {
        if cutoff <= x {
            return 0.0;
        }
        let periods = cutoff / (2.0 * self.nyquist());
        let m = periods.round();
        if m >= 1.0 && (periods - m).abs() < 1e-12 * periods && cutoff - x > 2.0 * self.nyquist() {
            self.total_area() - self.area_beyond_period(m as usize) - self.integral(0.0, x)
        } else {
            self.integral(x, cutoff)
        }
    }

    /// Signal (1/2pi) * integral over all omega of S F = (1/pi) * integral_0^cut S F.
    pub fn overlap(&self, psd: &PsdModel, cutoff: f64) -> f64 {
        if psd.is_zero() {
            return 0.0;
        }
        let breaks = psd_breaks(psd);
        self.weighted_integral(0.0, cutoff, &|w| psd.eval(w), &breaks) / PI
    }
}

/// Breakpoints that resolve narrow PSD features regardless of the filter panel width.
pub fn psd_breaks(psd: &PsdModel) -> Vec<f64> {
    let width = psd.feature_width();
    let mut out = Vec::new();
    for c in psd.breakpoints() {
        out.push(c);
        for m in [0.5, 1.0, 2.0, 4.0, 8.0] {
            out.push(c - m * width);
            out.push(c + m * width);
        }
    }
    out.retain(|x| *x > 0.0);
    out
}

/// Upper limit for broadband integrals: the PSD support if bounded, else a
/// multiple of the Nyquist frequency (extended past slow Lorentzian tails).
pub fn broadband_cutoff(psd: &PsdModel, dt: f64, multiple: f64) -> f64 {
    let base = multiple * PI / dt;
    match (psd.support_limit(), psd) {
        (Some(s), _) => s.max(1e-300),
        (None, PsdModel::Lorentzian(l)) => base.max(l.center + 200.0 * l.width),
        (None, _) => base,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassbandSpec {
    pub center: f64,
    pub half_width: f64,
    pub a: f64,
    pub b: f64,
    /// A = (1/pi) * integral_a^b F.
    pub area: f64,
}

pub fn passband_bounds(omega_s: f64, w: f64, dt: f64) -> (f64, f64) {
    let half = 2.0 * PI * w / dt;
    ((omega_s - half).max(0.0), omega_s + half)
}

pub fn passband(filter: &FilterCurve, omega_s: f64, w: f64, dt: f64) -> Result<PassbandSpec> {
    if omega_s >= PI / dt || omega_s < 0.0 {
        return param(format!("shift {omega_s} rad/s outside [0, omega_N = {})", PI / dt));
    }
    let (a, b) = passband_bounds(omega_s, w, dt);
    Ok(PassbandSpec { center: omega_s, half_width: 2.0 * PI * w / dt, a, b, area: filter.integral(a, b) / PI })
}

/// (1/pi) * integral of F over [q dw, (q+1) dw] for q < count.
pub fn segment_areas(filter: &FilterCurve, dw: f64, count: usize) -> Vec<f64> {
    (0..count).map(|q| filter.integral(q as f64 * dw, (q + 1) as f64 * dw) / PI).collect()
}

/// Dirichlet-type comb factor sin^2(omega R T_B/2) / sin^2(omega T_B/2).
pub fn comb_factor(omega: f64, repetitions: usize, t_b: f64) -> f64 {
    let r = repetitions as f64;
    let den = (0.5 * omega * t_b).sin();
    if den.abs() < 1e-9 {
        r * r
    } else {
        let num = (0.5 * omega * r * t_b).sin();
        num * num / (den * den)
    }
}

pub fn comb_filter(base: &Waveform, repetitions: usize, omega: f64) -> f64 {
    comb_factor(omega, repetitions, base.duration()) * filter_eval(base, omega)
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Best rational approximation p/q of x with q <= max_den, if within tol.
fn rational(x: f64, max_den: u128, tol: f64) -> Option<(u128, u128)> {
    let (mut h0, mut h1, mut k0, mut k1) = (0u128, 1u128, 1u128, 0u128);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let ai = a as u128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (x - h1 as f64 / k1 as f64).abs() <= tol * x.abs().max(1.0) {
            return Some((h1, k1));
        }
        let frac = y - a;
        if frac < 1e-15 {
            break;
        }
        y = 1.0 / frac;
    }
    if k1 > 0 && (x - h1 as f64 / k1 as f64).abs() <= tol * x.abs().max(1.0) {
        Some((h1, k1))
    } else {
        None
    }
}

/// Greatest common divisor duration of a set of durations on a rational grid.
pub fn gcd_duration(durations: &[f64]) -> Result<f64> {
    let min = durations.iter().copied().fold(f64::INFINITY, f64::min);
    if durations.is_empty() || !(min > 0.0) {
        return param("durations must be positive");
    }
    let mut fr = Vec::with_capacity(durations.len());
    for &d in durations {
        let r = rational(d / min, 1_000_000, 1e-9)
            .ok_or_else(|| Error::Numeric(format!("duration {d} has no rational relation to {min}")))?;
        fr.push(r);
    }
    let lcm = fr.iter().fold(1u128, |l, &(_, q)| l / gcd(l, q) * q);
    let g = fr.iter().fold(0u128, |g, &(p, q)| gcd(g, p * (lcm / q)));
    Ok(min * g as f64 / lcm as f64)
}

/// min{2 n_seq pi / T_B, pi / dt_gcf}.
pub fn effective_nyquist(segment_durations: &[f64], n_seq: usize, t_b: f64) -> Result<f64> {
    if !(t_b > 0.0) || n_seq == 0 {
        return param("T_B and sequence count must be positive");
    }
    let g = gcd_duration(segment_durations)?;
    Ok((2.0 * n_seq as f64 * PI / t_b).min(PI / g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::cpmg_rse;

    #[test]
    fn constant_waveform_at_zero() {
        let w = Waveform::new(vec![3.0; 40], 1e-5, "c").unwrap();
        let t = w.duration();
        assert!((filter_eval(&w, 0.0) - 9.0 * t * t / 4.0).abs() < 1e-12 * 9.0 * t * t);
    }

    #[test]
    fn parseval_small() {
        let w = Waveform::new(vec![1.0, -0.5, 2.0, 0.25, -1.0], 1e-3, "x").unwrap();
        let f = FilterCurve::new(&w);
        let lhs = 4.0 / PI * f.total_area();
        assert!((lhs - w.power()).abs() < 1e-8 * w.power(), "{lhs} vs {}", w.power());
    }

    #[test]
    fn comb_ratio_at_harmonic() {
        let base = cpmg_rse(2, 1.0, 1e-3, 4).unwrap();
        let w = 2.0 * PI * 3.0 / 1e-3;
        assert!((comb_filter(&base, 20, w) / filter_eval(&base, w) - 400.0).abs() < 1e-6);
        assert_eq!(comb_factor(1234.5, 1, 1e-3), 1.0);
    }

    #[test]
    fn gcd_of_harmonic_durations() {
        let t_b = 942e-6;
        let d: Vec<f64> = (1..=12).map(|j| t_b / j as f64).collect();
        let g = gcd_duration(&d).unwrap();
        assert!((g - t_b / 27720.0).abs() < 1e-9 * g);
        let wn = effective_nyquist(&d, 12, t_b).unwrap();
        assert!((wn / (2.0 * PI) - 12.0 / t_b).abs() < 1e-6);
    }

    #[test]
    fn passband_at_zero_shift() {
        let w = Waveform::new(vec![1.0; 100], 1e-5, "c").unwrap();
        let pb = passband(&FilterCurve::new(&w), 0.0, 0.01, 1e-5).unwrap();
        assert_eq!(pb.a, 0.0);
        assert!((pb.b - 2.0 * PI * 0.01 / 1e-5).abs() < 1e-9);
        assert!(passband(&FilterCurve::new(&w), PI / 1e-5, 0.01, 1e-5).is_err());
    }
}
