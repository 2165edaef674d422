//! Parametric target spectra. All frequencies in rad/s.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lorentzian {
    /// Peak height C.
    pub amplitude: f64,
    /// Centre p (rad/s).
    pub center: f64,
    /// Half-width w_p (rad/s).
    pub width: f64,
}

impl Lorentzian {
    fn eval(&self, omega: f64) -> f64 {
        let x = (omega.abs() - self.center) / self.width;
        self.amplitude / (x * x + 1.0)
    }

    /// Integral over [0, x] of the one-sided profile.
    fn integral(&self, x: f64) -> f64 {
        self.amplitude * self.width * (((x - self.center) / self.width).atan() + (self.center / self.width).atan())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPeak {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
}

impl GaussianPeak {
    fn eval(&self, omega: f64) -> f64 {
        let d = omega.abs() - self.center;
        self.amplitude * (-d * d / (2.0 * self.sigma * self.sigma)).exp()
    }

    fn integral(&self, x: f64) -> f64 {
        let s = self.sigma * std::f64::consts::SQRT_2;
        self.amplitude * self.sigma * (PI / 2.0).sqrt() * (erf((x - self.center) / s) + erf(self.center / s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsdModel {
    Lorentzian(Lorentzian),
    GaussianMix { peaks: Vec<GaussianPeak> },
    WhitePlusLine { floor: f64, line: Lorentzian, cutoff: f64 },
}

impl PsdModel {
    pub fn lorentzian(amplitude: f64, center: f64, width: f64) -> Self {
        PsdModel::Lorentzian(Lorentzian { amplitude, center, width })
    }

    pub fn zero() -> Self {
        PsdModel::lorentzian(0.0, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let lor = |l: &Lorentzian| -> Result<()> {
            if !(l.amplitude >= 0.0 && l.center >= 0.0 && l.width > 0.0) {
                return param(format!("Lorentzian needs amplitude >= 0, center >= 0, width > 0: {l:?}"));
            }
            Ok(())
        };
        match self {
            PsdModel::Lorentzian(l) => lor(l),
            PsdModel::GaussianMix { peaks } => {
                for g in peaks {
                    if !(g.amplitude >= 0.0 && g.center >= 0.0 && g.sigma > 0.0) {
                        return param(format!("Gaussian peak needs amplitude >= 0, center >= 0, sigma > 0: {g:?}"));
                    }
                }
                Ok(())
            }
            PsdModel::WhitePlusLine { floor, line, cutoff } => {
                lor(line)?;
                if !(*floor >= 0.0 && *cutoff > 0.0) {
                    return param("white floor must be >= 0 and cutoff > 0");
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            PsdModel::Lorentzian(l) => l.eval(omega),
            PsdModel::GaussianMix { peaks } => peaks.iter().map(|g| g.eval(omega)).sum(),
            PsdModel::WhitePlusLine { floor, line, cutoff } => {
                if omega.abs() > *cutoff {
                    0.0
                } else {
                    floor + line.eval(omega)
                }
            }
        }
    }

    /// (1/pi) * integral_0^x S(omega) d omega, i.e. the process variance carried below x.
    pub fn power_below(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        let raw = match self {
            PsdModel::Lorentzian(l) => l.integral(x),
            PsdModel::GaussianMix { peaks } => peaks.iter().map(|g| g.integral(x)).sum(),
            PsdModel::WhitePlusLine { floor, line, cutoff } => {
                let y = x.min(*cutoff);
                floor * y + line.integral(y)
            }
        };
        raw / PI
    }

    /// Process variance (1/2pi) * integral S over all omega.
    pub fn variance(&self) -> f64 {
        self.power_below(f64::INFINITY)
    }

    /// Kinks and narrow features worth splitting quadrature panels at.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PsdModel::Lorentzian(l) => vec![l.center],
            PsdModel::GaussianMix { peaks } => peaks.iter().map(|g| g.center).collect(),
            PsdModel::WhitePlusLine { line, cutoff, .. } => vec![line.center, *cutoff],
        }
    }

    /// Frequency above which S vanishes to double precision, if the support is bounded.
    pub fn support_limit(&self) -> Option<f64> {
        match self {
            PsdModel::Lorentzian(l) if l.amplitude == 0.0 => Some(0.0),
            PsdModel::Lorentzian(_) => None,
            PsdModel::GaussianMix { peaks } => {
                Some(peaks.iter().map(|g| g.center + 12.0 * g.sigma).fold(0.0, f64::max))
            }
            PsdModel::WhitePlusLine { cutoff, .. } => Some(*cutoff),
        }
    }

    /// Smallest feature width; sets the quadrature panel scale.
    pub fn feature_width(&self) -> f64 {
        match self {
            PsdModel::Lorentzian(l) => l.width,
            PsdModel::GaussianMix { peaks } => peaks.iter().map(|g| g.sigma).fold(f64::INFINITY, f64::min),
            PsdModel::WhitePlusLine { line, .. } => line.width,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PsdModel::Lorentzian(l) => l.amplitude == 0.0,
            PsdModel::GaussianMix { peaks } => peaks.iter().all(|g| g.amplitude == 0.0),
            PsdModel::WhitePlusLine { floor, line, .. } => *floor == 0.0 && line.amplitude == 0.0,
        }
    }
}

pub fn psd_eval(model: &PsdModel, omega: f64) -> f64 {
    model.eval(omega)
}
