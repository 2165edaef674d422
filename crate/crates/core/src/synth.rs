//! Stationary Gaussian noise realizations by frequency-domain synthesis.
//!
//! Covariance convention: C(tau) = (1/2pi) * integral S(omega) e^{i omega tau} d omega,
//! the same normalization under which the signal is (1/2pi) * integral S F.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::psd::PsdModel;
use crate::rng::sub_rng;

/// Variance fraction above the noise Nyquist frequency that triggers the warning.
pub const ALIASING_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrajectory {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub seed: u64,
    pub aliasing_warning: bool,
}

impl NoiseTrajectory {
    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }
}

/// Precomputed synthesis plan for one (model, dt, length) combination.
#[derive(Clone)]
pub struct NoiseSynthesizer {
    dt: f64,
    n_samples: usize,
    /// Per-bin standard deviations c_k for k = 0..=L/2.
    amplitude: Vec<f64>,
    block: usize,
    fft: Arc<dyn Fft<f64>>,
    aliasing_fraction: f64,
}

impl std::fmt::Debug for NoiseSynthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseSynthesizer")
            .field("dt", &self.dt)
            .field("n_samples", &self.n_samples)
            .field("block", &self.block)
            .finish()
    }
}

impl NoiseSynthesizer {
    pub fn new(model: &PsdModel, dt: f64, duration: f64) -> Result<Self> {
        if !(dt > 0.0 && duration > 0.0) {
            return param("noise dt and duration must be positive");
        }
        model.validate()?;
        let n_samples = (duration / dt - 1e-9).ceil().max(1.0) as usize;
        Self::with_samples(model, dt, n_samples)
    }

    pub fn with_samples(model: &PsdModel, dt: f64, n_samples: usize) -> Result<Self> {
        if n_samples == 0 {
            return param("trajectory needs at least one sample");
        }
        let block = (4 * n_samples).max(64).next_power_of_two();
        let scale = 1.0 / (block as f64 * dt);
        let amplitude = (0..=block / 2)
            .map(|k| {
                let omega = 2.0 * PI * k as f64 / (block as f64 * dt);
                (model.eval(omega) * scale).sqrt()
            })
            .collect();
        let var = model.variance();
        let aliasing_fraction = if var > 0.0 { (var - model.power_below(PI / dt)).max(0.0) / var } else { 0.0 };
        let fft = FftPlanner::new().plan_fft_inverse(block);
        Ok(NoiseSynthesizer { dt, n_samples, amplitude, block, fft, aliasing_fraction })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn block_len(&self) -> usize {
        self.block
    }

    pub fn aliasing_fraction(&self) -> f64 {
        self.aliasing_fraction
    }

    pub fn aliasing_warning(&self) -> bool {
        self.aliasing_fraction > ALIASING_THRESHOLD
    }

    fn bin_amp(&self, k: usize) -> f64 {
        if k <= self.block / 2 {
            self.amplitude[k]
        } else {
            self.amplitude[self.block - k]
        }
    }

    /// Two independent trajectories from one complex inverse FFT: with a
    /// symmetric amplitude profile the real and imaginary parts decorrelate.
    pub fn pair<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex<f64>> = (0..self.block)
            .map(|k| {
                let a = self.bin_amp(k);
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                Complex::new(a * x, a * y)
            })
            .collect();
        self.fft.process(&mut buf);
        let re = buf[..self.n_samples].iter().map(|z| z.re).collect();
        let im = buf[..self.n_samples].iter().map(|z| z.im).collect();
        (re, im)
    }

    /// Trajectory `index` for a given seed and stream.
    pub fn trajectory(&self, seed: u64, stream: u64, index: u64) -> NoiseTrajectory {
        let mut rng = sub_rng(seed, stream, index / 2);
        let (a, b) = self.pair(&mut rng);
        NoiseTrajectory {
            dt: self.dt,
            samples: if index % 2 == 0 { a } else { b },
            seed,
            aliasing_warning: self.aliasing_warning(),
        }
    }

    /// Exact covariance of the synthesized process at integer lag.
    pub fn lag_covariance(&self, lag: usize) -> f64 {
        let l = self.block as f64;
        (0..self.block)
            .map(|k| self.bin_amp(k).powi(2) * (2.0 * PI * k as f64 * lag as f64 / l).cos())
            .sum()
    }

    /// Exact variance of sum_j g_j x_j under the synthesized process.
    pub fn functional_variance(&self, weights: &[f64]) -> Result<f64> {
        if weights.len() > self.n_samples {
            return param("weight vector longer than the synthesized trajectory");
        }
        let mut buf: Vec<Complex<f64>> = weights.iter().map(|&g| Complex::new(g, 0.0)).collect();
        buf.resize(self.block, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        Ok(buf.iter().enumerate().map(|(k, z)| self.bin_amp(k).powi(2) * z.norm_sqr()).sum())
    }
}

pub fn synthesize(model: &PsdModel, dt: f64, duration: f64, seed: u64) -> Result<NoiseTrajectory> {
    Ok(NoiseSynthesizer::new(model, dt, duration)?.trajectory(seed, 0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let m = PsdModel::lorentzian(4e-4, 2e4, 7e3);
        let a = synthesize(&m, 5e-7, 2e-3, 9).unwrap();
        let b = synthesize(&m, 5e-7, 2e-3, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.duration() >= 2e-3 - 1e-12);
    }

    #[test]
    fn zero_lag_covariance_tracks_variance() {
        let m = PsdModel::lorentzian(4e-4, 2e4, 7e3);
        let s = NoiseSynthesizer::new(&m, 5e-7, 2e-3).unwrap();
        let c0 = s.lag_covariance(0);
        assert!((c0 - m.variance()).abs() < 2e-3 * m.variance(), "{c0} vs {}", m.variance());
    }

    #[test]
    fn warns_when_undersampled() {
        let m = PsdModel::lorentzian(1e-3, 0.0, 1e6);
        assert!(NoiseSynthesizer::new(&m, 1e-5, 1e-3).unwrap().aliasing_warning());
    }
}
