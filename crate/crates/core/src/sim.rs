//! Monte Carlo qubit sensor under pure amplitude noise.
//!
//! With beta_z = 0 the toggling-frame Hamiltonian is proportional to sigma_x at all
//! times, so the error rotation is exactly exp(-i a_x sigma_x) and survival along z
//! is cos^2(a_x).

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::filter::{broadband_cutoff, FilterCurve, DEFAULT_CUTOFF_MULTIPLE};
use crate::psd::PsdModel;
use crate::rng::sub_rng;
use crate::synth::{NoiseSynthesizer, NoiseTrajectory};
use crate::waveform::Waveform;

pub const DEFAULT_OVERSAMPLING: usize = 8;
const MARGINAL_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn tag(self) -> u64 {
        match self {
            Axis::X => 0x58,
            Axis::Y => 0x59,
            Axis::Z => 0x5a,
        }
    }
}

/// How the per-shot error angle is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Synthesize a full noise trajectory per shot and integrate it.
    Trajectory,
    /// Draw a_x from its exact Gaussian marginal under the same synthesized process.
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub waveform: Waveform,
    pub psd: PsdModel,
    pub shots: usize,
    pub oversampling: usize,
    pub seed: u64,
    /// Distinguishes experiments that share a seed.
    pub stream: u64,
    pub axes: Vec<Axis>,
    pub mode: SamplingMode,
}

impl ExperimentConfig {
    pub fn new(waveform: Waveform, psd: PsdModel, shots: usize, seed: u64) -> Self {
        ExperimentConfig {
            waveform,
            psd,
            shots,
            oversampling: DEFAULT_OVERSAMPLING,
            seed,
            stream: 0,
            axes: vec![Axis::Z],
            mode: SamplingMode::Trajectory,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return param("shot count M must be at least 1");
        }
        if self.oversampling == 0 {
            return param("noise oversampling must be at least 1");
        }
        if self.axes.is_empty() {
            return param("at least one measurement axis is required");
        }
        self.psd.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisCounts {
    pub axis: Axis,
    pub shots: usize,
    pub up: usize,
    pub p_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub label: String,
    pub shots: usize,
    pub axes: Vec<AxisCounts>,
    /// S^(T).
    pub signal: f64,
    /// Shot-noise proxy with var[S^(T)] = sigma2 / M.
    pub sigma2: f64,
    pub aliasing_warning: bool,
}

impl ExperimentResult {
    pub fn signal_variance(&self) -> f64 {
        self.sigma2 / self.shots as f64
    }

    pub fn p_hat(&self, axis: Axis) -> Option<f64> {
        self.axes.iter().find(|a| a.axis == axis).map(|a| a.p_hat)
    }
}

/// Error angle a_x = (1/2) sum_n Omega_n * (Riemann sum of beta over segment n).
pub fn error_angle(w: &Waveform, traj: &NoiseTrajectory) -> Result<f64> {
    let os = (w.dt / traj.dt).round();
    if os < 1.0 || (os * traj.dt - w.dt).abs() > 1e-9 * w.dt {
        return param(format!("noise spacing {} does not divide the segment duration {}", traj.dt, w.dt));
    }
    let os = os as usize;
    if traj.samples.len() < w.len() * os {
        return param("noise trajectory shorter than the waveform");
    }
    Ok(angle_from_samples(&w.omega, os, traj.dt, &traj.samples))
}

fn angle_from_samples(omega: &[f64], os: usize, dt_noise: f64, beta: &[f64]) -> f64 {
    let mut a = 0.0;
    for (n, &om) in omega.iter().enumerate() {
        let seg: f64 = beta[n * os..(n + 1) * os].iter().sum();
        a += om * seg;
    }
    0.5 * dt_noise * a
}

/// Everything about an experiment that does not depend on the seed.
#[derive(Clone)]
pub struct PreparedExperiment {
    cfg: ExperimentConfig,
    synth: Arc<NoiseSynthesizer>,
    marginal_std: f64,
}

impl PreparedExperiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let dt_noise = cfg.waveform.dt / cfg.oversampling as f64;
        let synth = Arc::new(NoiseSynthesizer::with_samples(&cfg.psd, dt_noise, cfg.waveform.len() * cfg.oversampling)?);
        Self::with_synthesizer(cfg, synth)
    }

    /// Reuse a synthesis plan; its spacing and length must match the waveform.
    pub fn with_synthesizer(cfg: ExperimentConfig, synth: Arc<NoiseSynthesizer>) -> Result<Self> {
        cfg.validate()?;
        let os = cfg.oversampling;
        if (synth.dt() * os as f64 - cfg.waveform.dt).abs() > 1e-9 * cfg.waveform.dt
            || synth.n_samples() < cfg.waveform.len() * os
        {
            return param("synthesizer grid does not match waveform and oversampling");
        }
        let weights: Vec<f64> =
            (0..cfg.waveform.len() * os).map(|j| 0.5 * cfg.waveform.omega[j / os] * synth.dt()).collect();
        let marginal_std = synth.functional_variance(&weights)?.sqrt();
        Ok(PreparedExperiment { cfg, synth, marginal_std })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn aliasing_warning(&self) -> bool {
        self.synth.aliasing_warning()
    }

    /// Exact variance of a_x under the synthesized process.
    pub fn angle_variance(&self) -> f64 {
        self.marginal_std * self.marginal_std
    }

    fn count_axis(&self, axis: Axis, seed: u64) -> usize {
        let m = self.cfg.shots;
        let stream = self.cfg.stream ^ (axis.tag() << 56);
        if axis == Axis::X {
            // Survival along x is 1 for rotations about x; still draw the shots.
            return (0..m.div_ceil(MARGINAL_CHUNK))
                .into_par_iter()
                .map(|c| {
                    let mut rng = sub_rng(seed, stream, c as u64);
                    let n = MARGINAL_CHUNK.min(m - c * MARGINAL_CHUNK);
                    (0..n).filter(|_| rng.random::<f64>() < 1.0).count()
                })
                .sum();
        }
        match self.cfg.mode {
            SamplingMode::Trajectory => {
                let os = self.cfg.oversampling;
                let dtn = self.synth.dt();
                (0..m.div_ceil(2))
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = sub_rng(seed, stream, i as u64);
                        let (a, b) = self.synth.pair(&mut rng);
                        let n = if 2 * i + 1 < m { 2 } else { 1 };
                        [a, b][..n]
                            .iter()
                            .filter(|beta| {
                                let ax = angle_from_samples(&self.cfg.waveform.omega, os, dtn, beta);
                                rng.random::<f64>() < ax.cos().powi(2)
                            })
                            .count()
                    })
                    .sum()
            }
            SamplingMode::Marginal => (0..m.div_ceil(MARGINAL_CHUNK))
                .into_par_iter()
                .map(|c| {
                    let mut rng = sub_rng(seed, stream, c as u64);
                    let n = MARGINAL_CHUNK.min(m - c * MARGINAL_CHUNK);
                    (0..n)
                        .filter(|_| {
                            let z: f64 = rng.sample(StandardNormal);
                            let ax = self.marginal_std * z;
                            rng.random::<f64>() < ax.cos().powi(2)
                        })
                        .count()
                })
                .sum(),
        }
    }

    pub fn run_seed(&self, seed: u64) -> ExperimentResult {
        let m = self.cfg.shots;
        let axes: Vec<AxisCounts> = self
            .cfg
            .axes
            .iter()
            .map(|&axis| {
                let up = self.count_axis(axis, seed);
                AxisCounts { axis, shots: m, up, p_hat: up as f64 / m as f64 }
            })
            .collect();
        let p = |ax: Axis| axes.iter().find(|a| a.axis == ax).map(|a| a.p_hat);
        let (signal, sigma2) = match (p(Axis::X), p(Axis::Y), p(Axis::Z)) {
            (Some(px), Some(py), Some(pz)) => {
                let s2 = 0.25 * [px, py, pz].iter().map(|q| q * (1.0 - q)).sum::<f64>();
                (0.5 * (1.0 + px - py - pz), s2)
            }
            (_, _, Some(pz)) => (1.0 - pz, pz * (1.0 - pz)),
            (_, Some(py), None) => (1.0 - py, py * (1.0 - py)),
            (Some(px), None, None) => (1.0 - px, px * (1.0 - px)),
            (None, None, None) => unreachable!("validated non-empty axes"),
        };
        ExperimentResult {
            label: self.cfg.waveform.label.clone(),
            shots: m,
            axes,
            signal,
            sigma2,
            aliasing_warning: self.synth.aliasing_warning(),
        }
    }

    pub fn run(&self) -> ExperimentResult {
        self.run_seed(self.cfg.seed)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    Ok(PreparedExperiment::new(cfg.clone())?.run())
}

/// S(T) = (1/pi) * integral_0^cut S F by quadrature, with the default broadband cutoff.
pub fn expected_signal(psd: &PsdModel, w: &Waveform) -> f64 {
    let f = FilterCurve::new(w);
    f.overlap(psd, broadband_cutoff(psd, w.dt, DEFAULT_CUTOFF_MULTIPLE))
}
