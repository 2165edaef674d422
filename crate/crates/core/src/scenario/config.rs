//! Scenario configuration. Frequencies are given in Hz and times in seconds;
//! conversion to rad/s happens once, here.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::protocol::ShiftMode;
use crate::bayes::LambdaRule;
use crate::error::{param, Error, Result};
use crate::estimate::{AqmOptions, CombSignalMode, InitialEstimate};
use crate::psd::{GaussianPeak, Lorentzian, PsdModel};
use crate::sim::SamplingMode;

pub const SCHEMA_VERSION: u32 = 1;

pub fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    LorentzianVsRse,
    CombVsDpss,
    DetectLine,
    BayesRefine,
    Custom,
}

impl ScenarioName {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::LorentzianVsRse => "lorentzian-vs-rse",
            ScenarioName::CombVsDpss => "comb-vs-dpss",
            ScenarioName::DetectLine => "detect-line",
            ScenarioName::BayesRefine => "bayes-refine",
            ScenarioName::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Parameter(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorentzianHz {
    pub amplitude: f64,
    pub center_hz: f64,
    pub width_hz: f64,
}

impl LorentzianHz {
    fn model(&self) -> Lorentzian {
        Lorentzian { amplitude: self.amplitude, center: hz(self.center_hz), width: hz(self.width_hz) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianHz {
    pub amplitude: f64,
    pub center_hz: f64,
    pub sigma_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsdSpec {
    Lorentzian { amplitude: f64, center_hz: f64, width_hz: f64 },
    GaussianMix { peaks: Vec<GaussianHz> },
    WhitePlusLine { floor: f64, line: LorentzianHz, cutoff_hz: f64 },
    Zero,
}

impl PsdSpec {
    pub fn model(&self) -> Result<PsdModel> {
        let m = match self {
            PsdSpec::Lorentzian { amplitude, center_hz, width_hz } => {
                PsdModel::lorentzian(*amplitude, hz(*center_hz), hz(*width_hz))
            }
            PsdSpec::GaussianMix { peaks } => PsdModel::GaussianMix {
                peaks: peaks
                    .iter()
                    .map(|g| GaussianPeak { amplitude: g.amplitude, center: hz(g.center_hz), sigma: hz(g.sigma_hz) })
                    .collect(),
            },
            PsdSpec::WhitePlusLine { floor, line, cutoff_hz } => {
                PsdModel::WhitePlusLine { floor: *floor, line: line.model(), cutoff: hz(*cutoff_hz) }
            }
            PsdSpec::Zero => PsdModel::zero(),
        };
        m.validate()?;
        Ok(m)
    }
}

/// Shift frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftGrid {
    Linear { start_hz: f64, step_hz: f64, count: usize },
    /// h / period for h = first..=last.
    Harmonics { period_s: f64, first: usize, last: usize },
    List { hz: Vec<f64> },
}

impl ShiftGrid {
    pub fn hz(&self) -> Vec<f64> {
        match self {
            ShiftGrid::Linear { start_hz, step_hz, count } => (0..*count).map(|i| start_hz + step_hz * i as f64).collect(),
            ShiftGrid::Harmonics { period_s, first, last } => (*first..=*last).map(|h| h as f64 / period_s).collect(),
            ShiftGrid::List { hz } => hz.clone(),
        }
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.hz().into_iter().map(hz).collect()
    }

    fn validate(&self, what: &str) -> Result<()> {
        let v = self.hz();
        if v.is_empty() {
            return param(format!("{what}: shift grid is empty"));
        }
        if v.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
            return param(format!("{what}: shifts must be finite and >= 0"));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return param(format!("{what}: shifts must be strictly increasing"));
        }
        if let ShiftGrid::Harmonics { period_s, .. } = self {
            if !(*period_s > 0.0) {
                return param(format!("{what}: period must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpssSpec {
    pub n: usize,
    pub dt_s: f64,
    /// Half-bandwidth parameter; defaults to 1/N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
}

impl DpssSpec {
    pub fn w(&self) -> f64 {
        self.w.unwrap_or(1.0 / self.n as f64)
    }

    pub fn nyquist_hz(&self) -> f64 {
        0.5 / self.dt_s
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.n < 2 || !(self.dt_s > 0.0) {
            return param(format!("{what}: need N >= 2 and dt_s > 0"));
        }
        let w = self.w();
        if !(w > 0.0 && w < 0.5) || 2.0 * self.n as f64 * w < 1.0 - 1e-12 {
            return param(format!("{what}: W = {w} must satisfy 0 < W < 0.5 and 2NW >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub seed: u64,
    /// Independent Monte Carlo repetitions of the whole measurement record.
    pub repetitions: usize,
    pub sampling: SamplingMode,
    pub oversampling: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec { seed: 1, repetitions: 1, sampling: SamplingMode::Trajectory, oversampling: 8 }
    }
}

fn default_power() -> f64 {
    900.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorentzianVsRseSpec {
    pub dpss: DpssSpec,
    pub shifts: ShiftGrid,
    /// CPMG sign-switch counts; each RSE passband sits at n pi / T.
    pub rse_switches: Vec<usize>,
    #[serde(default = "default_power")]
    pub power_target: f64,
    #[serde(default)]
    pub shift_mode: ShiftMode,
    pub shots: usize,
}

impl Default for LorentzianVsRseSpec {
    fn default() -> Self {
        let mut rse = vec![0];
        rse.extend(2..=40);
        LorentzianVsRseSpec {
            dpss: DpssSpec { n: 500, dt_s: 4e-6, w: Some(1.0 / 500.0) },
            shifts: ShiftGrid::Linear { start_hz: 0.0, step_hz: 250.0, count: 41 },
            rse_switches: rse,
            power_target: 900.0,
            shift_mode: ShiftMode::Cos,
            shots: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombVsDpssSpec {
    pub t_b_s: f64,
    pub repetitions: usize,
    pub h_max: usize,
    pub cpmg_switches: usize,
    pub cpmg_segments: usize,
    #[serde(default)]
    pub comb_mode: CombSignalMode,
    pub dpss: DpssSpec,
    pub dpss_shifts: ShiftGrid,
    #[serde(default = "default_power")]
    pub power_target: f64,
    #[serde(default)]
    pub shift_mode: ShiftMode,
    pub shots: usize,
}

impl CombVsDpssSpec {
    /// Sequences chosen so that both Nyquist frequencies sit at 12.7 kHz.
    pub fn low_nyquist() -> Self {
        CombVsDpssSpec {
            t_b_s: 942e-6,
            repetitions: 20,
            h_max: 12,
            cpmg_switches: 2,
            cpmg_segments: 4,
            comb_mode: CombSignalMode::DeltaComb,
            dpss: DpssSpec { n: 260, dt_s: 39.3e-6, w: Some(1.0 / 260.0) },
            dpss_shifts: ShiftGrid::Harmonics { period_s: 942e-6, first: 1, last: 12 },
            power_target: 900.0,
            shift_mode: ShiftMode::Cos,
            shots: 2000,
        }
    }

    /// Shorter comb base and finer DPSS sampling: both Nyquist frequencies at 49 kHz.
    pub fn high_nyquist() -> Self {
        CombVsDpssSpec {
            t_b_s: 245e-6,
            dpss: DpssSpec { n: 1000, dt_s: 10.2e-6, w: Some(1.0 / 1000.0) },
            dpss_shifts: ShiftGrid::Harmonics { period_s: 942e-6, first: 1, last: 46 },
            ..Self::low_nyquist()
        }
    }
}

impl Default for CombVsDpssSpec {
    fn default() -> Self {
        Self::low_nyquist()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AqmSpec {
    pub tolerance: f64,
    pub max_iter: usize,
    pub initial: InitialEstimate,
    pub local_bias: bool,
}

impl Default for AqmSpec {
    fn default() -> Self {
        let o = AqmOptions::default();
        AqmSpec { tolerance: o.tolerance, max_iter: o.max_iter, initial: o.initial, local_bias: o.local_bias }
    }
}

impl AqmSpec {
    pub fn options(&self) -> AqmOptions {
        AqmOptions { tolerance: self.tolerance, max_iter: self.max_iter, initial: self.initial, local_bias: self.local_bias }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectLineSpec {
    pub dpss: DpssSpec,
    /// Tapers 0..orders-1 feed both multitaper estimators.
    pub orders: usize,
    pub shifts: ShiftGrid,
    pub shots: usize,
    pub aqm_shots_per_taper: usize,
    #[serde(default = "default_power")]
    pub power_target: f64,
    #[serde(default)]
    pub shift_mode: ShiftMode,
    #[serde(default)]
    pub aqm: AqmSpec,
    #[serde(default)]
    pub ssqm_seed: u64,
}

impl Default for DetectLineSpec {
    fn default() -> Self {
        DetectLineSpec {
            dpss: DpssSpec { n: 500, dt_s: 8e-6, w: Some(7.0 / 500.0) },
            orders: 13,
            shifts: ShiftGrid::Linear { start_hz: 0.0, step_hz: 1750.0, count: 9 },
            shots: 2600,
            aqm_shots_per_taper: 200,
            power_target: 900.0,
            shift_mode: ShiftMode::Cos,
            aqm: AqmSpec::default(),
            ssqm_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NarrowSpec {
    pub dpss: DpssSpec,
    pub shifts: ShiftGrid,
    pub shots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesRefineSpec {
    pub detect: DetectLineSpec,
    pub narrow: NarrowSpec,
    pub segments: usize,
    pub segment_width_hz: f64,
    pub lambda: LambdaRule,
    pub condition_threshold: f64,
    pub credible_level: f64,
    /// Frequency range (Hz) over which refinement quality is summarized.
    pub focus_hz: [f64; 2],
}

impl Default for BayesRefineSpec {
    fn default() -> Self {
        BayesRefineSpec {
            detect: DetectLineSpec::default(),
            narrow: NarrowSpec {
                dpss: DpssSpec { n: 500, dt_s: 20e-6, w: Some(1.0 / 500.0) },
                shifts: ShiftGrid::Linear { start_hz: 5450.0, step_hz: 150.0, count: 34 },
                shots: 2600,
            },
            segments: 94,
            segment_width_hz: 150.0,
            lambda: LambdaRule::PeakSquared,
            condition_threshold: 1e10,
            credible_level: 0.95,
            focus_hz: [5400.0, 10300.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSpec {
    pub dpss: DpssSpec,
    pub orders: Vec<usize>,
    pub shifts: ShiftGrid,
    #[serde(default)]
    pub shift_mode: ShiftMode,
    #[serde(default = "default_power")]
    pub power_target: f64,
    pub shots: usize,
}

impl Default for CustomSpec {
    fn default() -> Self {
        CustomSpec {
            dpss: DpssSpec { n: 200, dt_s: 5e-6, w: Some(2.0 / 200.0) },
            orders: vec![0, 1, 2],
            shifts: ShiftGrid::Linear { start_hz: 0.0, step_hz: 2000.0, count: 10 },
            shift_mode: ShiftMode::Cos,
            power_target: 900.0,
            shots: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: ScenarioName,
    pub psd: PsdSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lorentzian_vs_rse: Option<LorentzianVsRseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb_vs_dpss: Option<CombVsDpssSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detect_line: Option<DetectLineSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayes_refine: Option<BayesRefineSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSpec>,
}

pub fn lorentzian_psd(center_hz: f64) -> PsdSpec {
    PsdSpec::Lorentzian { amplitude: 4e-4, center_hz, width_hz: 1110.0 }
}

pub fn two_gaussian_psd() -> PsdSpec {
    PsdSpec::GaussianMix {
        peaks: vec![
            GaussianHz { amplitude: 0.5e-3, center_hz: 0.0, sigma_hz: 3500.0 },
            GaussianHz { amplitude: 0.35e-3, center_hz: 23900.0, sigma_hz: 6210.0 },
        ],
    }
}

pub fn white_line_psd() -> PsdSpec {
    PsdSpec::WhitePlusLine {
        floor: 2e-4,
        line: LorentzianHz { amplitude: 4e-3, center_hz: 7960.0, width_hz: 80.0 },
        cutoff_hz: 17500.0,
    }
}

impl ScenarioConfig {
    /// Built-in configuration reproducing the corresponding study.
    pub fn default_for(name: ScenarioName) -> Self {
        let mut c = ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            scenario: name,
            psd: PsdSpec::Zero,
            run: RunSpec::default(),
            lorentzian_vs_rse: None,
            comb_vs_dpss: None,
            detect_line: None,
            bayes_refine: None,
            custom: None,
        };
        match name {
            ScenarioName::LorentzianVsRse => {
                c.psd = lorentzian_psd(4620.0);
                c.lorentzian_vs_rse = Some(LorentzianVsRseSpec::default());
            }
            ScenarioName::CombVsDpss => {
                c.psd = two_gaussian_psd();
                c.comb_vs_dpss = Some(CombVsDpssSpec::default());
            }
            ScenarioName::DetectLine => {
                c.psd = white_line_psd();
                c.run.sampling = SamplingMode::Marginal;
                c.detect_line = Some(DetectLineSpec::default());
            }
            ScenarioName::BayesRefine => {
                c.psd = white_line_psd();
                c.run.sampling = SamplingMode::Marginal;
                c.bayes_refine = Some(BayesRefineSpec::default());
            }
            ScenarioName::Custom => {
                c.custom = Some(CustomSpec::default());
            }
        }
        c
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Config { path: format!("{origin}: {}", e.path()), message: e.inner().to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Fill the scenario's own section with defaults when it is absent.
    pub fn with_defaults(mut self) -> Self {
        let d = Self::default_for(self.scenario);
        match self.scenario {
            ScenarioName::LorentzianVsRse => self.lorentzian_vs_rse = self.lorentzian_vs_rse.or(d.lorentzian_vs_rse),
            ScenarioName::CombVsDpss => self.comb_vs_dpss = self.comb_vs_dpss.or(d.comb_vs_dpss),
            ScenarioName::DetectLine => self.detect_line = self.detect_line.or(d.detect_line),
            ScenarioName::BayesRefine => self.bayes_refine = self.bayes_refine.or(d.bayes_refine),
            ScenarioName::Custom => self.custom = self.custom.or(d.custom),
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |path: &str, m: String| Error::Config { path: path.to_string(), message: m };
        if self.schema_version != SCHEMA_VERSION {
            return Err(cfg_err("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        self.psd.model().map_err(|e| cfg_err("psd", e.to_string()))?;
        if self.run.repetitions == 0 || self.run.oversampling == 0 {
            return Err(cfg_err("run", "repetitions and oversampling must be at least 1".into()));
        }
        let sections = [
            (ScenarioName::LorentzianVsRse, self.lorentzian_vs_rse.is_some()),
            (ScenarioName::CombVsDpss, self.comb_vs_dpss.is_some()),
            (ScenarioName::DetectLine, self.detect_line.is_some()),
            (ScenarioName::BayesRefine, self.bayes_refine.is_some()),
            (ScenarioName::Custom, self.custom.is_some()),
        ];
        for (name, present) in sections {
            if present && name != self.scenario {
                let key = name.as_str().replace('-', "_");
                return Err(cfg_err(&key, format!("section does not belong to scenario `{}`", self.scenario.as_str())));
            }
        }
        let check_shifts = |path: &str, d: &DpssSpec, g: &ShiftGrid| -> Result<()> {
            d.validate(path).map_err(|e| cfg_err(path, e.to_string()))?;
            g.validate(path).map_err(|e| cfg_err(path, e.to_string()))?;
            Ok(())
        };
        let positive = |path: &str, x: f64| -> Result<()> {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(cfg_err(path, format!("must be positive, got {x}")))
            }
        };
        if let Some(s) = &self.lorentzian_vs_rse {
            check_shifts("lorentzian_vs_rse", &s.dpss, &s.shifts)?;
            positive("lorentzian_vs_rse.power_target", s.power_target)?;
            positive("lorentzian_vs_rse.shots", s.shots as f64)?;
        }
        if let Some(s) = &self.comb_vs_dpss {
            check_shifts("comb_vs_dpss", &s.dpss, &s.dpss_shifts)?;
            positive("comb_vs_dpss.t_b_s", s.t_b_s)?;
            positive("comb_vs_dpss.repetitions", s.repetitions as f64)?;
            positive("comb_vs_dpss.h_max", s.h_max as f64)?;
            positive("comb_vs_dpss.shots", s.shots as f64)?;
            positive("comb_vs_dpss.power_target", s.power_target)?;
            if s.cpmg_switches == 0 || s.cpmg_segments % (2 * s.cpmg_switches) != 0 {
                return Err(cfg_err("comb_vs_dpss.cpmg_segments", "must be a multiple of 2 * cpmg_switches".into()));
            }
        }
        let check_detect = |path: &str, s: &DetectLineSpec| -> Result<()> {
            check_shifts(path, &s.dpss, &s.shifts)?;
            if s.orders < 2 || s.orders > s.dpss.n {
                return Err(cfg_err(&format!("{path}.orders"), "need at least 2 tapers and no more than N".into()));
            }
            positive(&format!("{path}.shots"), s.shots as f64)?;
            positive(&format!("{path}.aqm_shots_per_taper"), s.aqm_shots_per_taper as f64)?;
            positive(&format!("{path}.power_target"), s.power_target)?;
            positive(&format!("{path}.aqm.tolerance"), s.aqm.tolerance)?;
            positive(&format!("{path}.aqm.max_iter"), s.aqm.max_iter as f64)?;
            Ok(())
        };
        if let Some(s) = &self.detect_line {
            check_detect("detect_line", s)?;
        }
        if let Some(s) = &self.bayes_refine {
            check_detect("bayes_refine.detect", &s.detect)?;
            check_shifts("bayes_refine.narrow", &s.narrow.dpss, &s.narrow.shifts)?;
            positive("bayes_refine.narrow.shots", s.narrow.shots as f64)?;
            positive("bayes_refine.segments", s.segments as f64)?;
            positive("bayes_refine.segment_width_hz", s.segment_width_hz)?;
            positive("bayes_refine.condition_threshold", s.condition_threshold)?;
            if !(s.credible_level > 0.0 && s.credible_level < 1.0) {
                return Err(cfg_err("bayes_refine.credible_level", "must lie in (0, 1)".into()));
            }
            if !(s.focus_hz[1] > s.focus_hz[0]) {
                return Err(cfg_err("bayes_refine.focus_hz", "upper bound must exceed lower bound".into()));
            }
        }
        if let Some(s) = &self.custom {
            check_shifts("custom", &s.dpss, &s.shifts)?;
            if s.orders.is_empty() || s.orders.iter().any(|k| *k >= s.dpss.n) {
                return Err(cfg_err("custom.orders", "orders must be non-empty and below N".into()));
            }
            positive("custom.shots", s.shots as f64)?;
            positive("custom.power_target", s.power_target)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        for name in [
            ScenarioName::LorentzianVsRse,
            ScenarioName::CombVsDpss,
            ScenarioName::DetectLine,
            ScenarioName::BayesRefine,
            ScenarioName::Custom,
        ] {
            let c = ScenarioConfig::default_for(name);
            c.validate().unwrap();
            let text = serde_json::to_string(&c).unwrap();
            assert_eq!(ScenarioConfig::from_json(&text, "t").unwrap(), c);
            assert_eq!(ScenarioName::parse(name.as_str()).unwrap(), name);
        }
    }

    #[test]
    fn unknown_key_reports_its_path() {
        let text = r#"{"schema_version":1,"scenario":"custom","psd":{"kind":"zero"},"run":{"seedd":3}}"#;
        match ScenarioConfig::from_json(text, "cfg.json") {
            Err(Error::Config { path, message }) => {
                assert!(path.contains("run"), "{path}");
                assert!(message.contains("seedd"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn foreign_section_rejected() {
        let mut c = ScenarioConfig::default_for(ScenarioName::Custom);
        c.detect_line = Some(DetectLineSpec::default());
        assert!(matches!(c.validate(), Err(Error::Config { .. })));
    }

    #[test]
    fn wrong_schema_version_rejected() {
        let mut c = ScenarioConfig::default_for(ScenarioName::Custom);
        c.schema_version = SCHEMA_VERSION + 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hz_to_rad() {
        assert!((hz(1.0) - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }
}
