//! Measurement settings shared by the scenarios: waveform(s), filter, passband,
//! expected values and Monte Carlo draws.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dpss::{DpssParams, Taper};
use crate::error::{param, Result};
use crate::estimate::{eigenestimate, EstimateRecord, EstimatorTag, SignalMeasurement};
use crate::filter::{broadband_cutoff, passband, FilterCurve, PassbandSpec, DEFAULT_CUTOFF_MULTIPLE};
use crate::psd::PsdModel;
use crate::sim::{ExperimentConfig, PreparedExperiment, SamplingMode};
use crate::synth::NoiseSynthesizer;
use crate::waveform::{dpss_waveform, modulate, normalize_pair, normalize_power, Modulation, Waveform};

/// How a baseband taper is moved to its shift frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMode {
    #[default]
    Cos,
    /// COS and SIN experiments summed.
    Cs,
    Ssb,
}

/// One estimator setting: the experiment(s) it needs and the resulting filter.
#[derive(Debug, Clone)]
pub struct Setting {
    pub tag: EstimatorTag,
    pub waveforms: Vec<Waveform>,
    pub filter: FilterCurve,
    pub passband: PassbandSpec,
}

impl Setting {
    /// Shifted, power-normalized setting built from a baseband waveform.
    pub fn shifted(
        base: &Waveform,
        tag: EstimatorTag,
        w: f64,
        omega_s: f64,
        mode: ShiftMode,
        power: f64,
    ) -> Result<Setting> {
        let waveforms = match mode {
            ShiftMode::Cos => vec![normalize_power(&modulate(base, Modulation::Cos, omega_s)?, power)?],
            ShiftMode::Ssb => vec![normalize_power(&modulate(base, Modulation::Ssb, omega_s)?, power)?],
            ShiftMode::Cs => {
                let c = modulate(base, Modulation::Cos, omega_s)?;
                let s = modulate(base, Modulation::Sin, omega_s)?;
                if s.power() > 0.0 {
                    let (c, s) = normalize_pair(&c, &s, power)?;
                    vec![c, s]
                } else {
                    vec![normalize_power(&c, power)?]
                }
            }
        };
        Self::from_waveforms(waveforms, tag, w, omega_s, base.dt)
    }

    pub fn from_waveforms(waveforms: Vec<Waveform>, tag: EstimatorTag, w: f64, omega_s: f64, dt: f64) -> Result<Setting> {
        let filter = FilterCurve::sum(&waveforms)?;
        let pb = passband(&filter, omega_s, w, dt)?;
        Ok(Setting { tag, waveforms, filter, passband: pb })
    }

    pub fn dpss(taper: &Taper, params: &DpssParams, dt: f64, omega_s: f64, mode: ShiftMode, power: f64) -> Result<Setting> {
        let base = dpss_waveform(taper, 1.0, dt)?;
        Self::shifted(&base, EstimatorTag::Taper(taper.order), params.w(), omega_s, mode, power)
    }

    pub fn omega_s(&self) -> f64 {
        self.passband.center
    }

    pub fn expected_signal(&self, psd: &PsdModel) -> f64 {
        let cut = broadband_cutoff(psd, self.filter.dt(), DEFAULT_CUTOFF_MULTIPLE);
        self.filter.overlap(psd, cut)
    }

    /// Expected S(T) with the first-order survival probability per experiment.
    pub fn expected_measurement(&self, psd: &PsdModel, shots: usize) -> SignalMeasurement {
        let cut = broadband_cutoff(psd, self.filter.dt(), DEFAULT_CUTOFF_MULTIPLE);
        self.waveforms
            .iter()
            .map(|w| SignalMeasurement::expected(FilterCurve::new(w).overlap(psd, cut), shots))
            .reduce(|a, b| a.combine(&b))
            .expect("setting has at least one waveform")
    }

    pub fn expected_estimate(&self, psd: &PsdModel, shots: usize) -> Result<EstimateRecord> {
        eigenestimate(&self.expected_measurement(psd, shots), &self.passband, self.tag)
    }
}

/// Shared noise synthesis plans keyed by grid.
#[derive(Default)]
pub struct SynthCache {
    plans: Mutex<HashMap<(u64, usize), Arc<NoiseSynthesizer>>>,
}

impl SynthCache {
    pub fn get(&self, psd: &PsdModel, dt: f64, n: usize) -> Result<Arc<NoiseSynthesizer>> {
        let key = (dt.to_bits(), n);
        if let Some(s) = self.plans.lock().expect("cache lock").get(&key) {
            return Ok(s.clone());
        }
        let s = Arc::new(NoiseSynthesizer::with_samples(psd, dt, n)?);
        self.plans.lock().expect("cache lock").insert(key, s.clone());
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub shots: usize,
    pub oversampling: usize,
    pub mode: SamplingMode,
}

/// A setting ready for repeated Monte Carlo runs.
#[derive(Clone)]
pub struct PreparedSetting {
    experiments: Vec<PreparedExperiment>,
    passband: PassbandSpec,
    tag: EstimatorTag,
}

impl PreparedSetting {
    pub fn new(setting: &Setting, psd: &PsdModel, opts: &McOptions, stream: u64, cache: &SynthCache) -> Result<Self> {
        if opts.shots == 0 {
            return param("shot count must be at least 1");
        }
        let experiments = setting
            .waveforms
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let mut cfg = ExperimentConfig::new(w.clone(), psd.clone(), opts.shots, 0);
                cfg.oversampling = opts.oversampling;
                cfg.mode = opts.mode;
                cfg.stream = stream.wrapping_mul(8).wrapping_add(i as u64);
                let synth = cache.get(psd, w.dt / opts.oversampling as f64, w.len() * opts.oversampling)?;
                PreparedExperiment::with_synthesizer(cfg, synth)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedSetting { experiments, passband: setting.passband, tag: setting.tag })
    }

    pub fn measure(&self, seed: u64) -> SignalMeasurement {
        self.experiments
            .iter()
            .map(|e| SignalMeasurement::from_result(&e.run_seed(seed)))
            .reduce(|a, b| a.combine(&b))
            .expect("setting has at least one experiment")
    }

    pub fn estimate(&self, seed: u64) -> Result<EstimateRecord> {
        eigenestimate(&self.measure(seed), &self.passband, self.tag)
    }

    pub fn aliasing_warning(&self) -> bool {
        self.experiments.iter().any(|e| e.aliasing_warning())
    }
}

/// Prepare many settings; the stream of setting i is `stream_base + i`.
pub fn prepare_all(
    settings: &[Setting],
    psd: &PsdModel,
    opts: &McOptions,
    stream_base: u64,
    cache: &SynthCache,
) -> Result<Vec<PreparedSetting>> {
    settings
        .par_iter()
        .enumerate()
        .map(|(i, s)| PreparedSetting::new(s, psd, opts, stream_base.wrapping_add(i as u64), cache))
        .collect()
}

pub fn expected_all(settings: &[Setting], psd: &PsdModel, shots: usize) -> Result<Vec<EstimateRecord>> {
    settings.par_iter().map(|s| s.expected_estimate(psd, shots)).collect()
}
