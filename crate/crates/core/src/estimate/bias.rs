//! Broadband and local bias of passband estimates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::filter::{FilterCurve, PassbandSpec};

/// Spectrum known at grid points, interpolated linearly and extended by its
/// edge values outside the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpectrum {
    pub omega: Vec<f64>,
    pub value: Vec<f64>,
}

impl GridSpectrum {
    pub fn new(omega: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if omega.is_empty() || omega.len() != value.len() {
            return param("grid spectrum needs matching, non-empty frequency and value vectors");
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return param("grid frequencies must be strictly increasing");
        }
        Ok(GridSpectrum { omega, value })
    }

    pub fn interp(&self, w: f64) -> f64 {
        let n = self.omega.len();
        if w <= self.omega[0] {
            return self.value[0];
        }
        if w >= self.omega[n - 1] {
            return self.value[n - 1];
        }
        let j = self.omega.partition_point(|&x| x <= w) - 1;
        let t = (w - self.omega[j]) / (self.omega[j + 1] - self.omega[j]);
        self.value[j] * (1.0 - t) + self.value[j + 1] * t
    }

    /// Forward difference at grid index p; None at the last point.
    pub fn forward_slope(&self, p: usize) -> Option<f64> {
        if p + 1 >= self.omega.len() {
            return None;
        }
        Some((self.value[p + 1] - self.value[p]) / (self.omega[p + 1] - self.omega[p]))
    }
}

/// (1/(pi A)) * integral of F S over [0, cutoff] minus the passband.
pub fn broadband_bias(spectrum: &dyn Fn(f64) -> f64, filter: &FilterCurve, pb: &PassbandSpec, cutoff: f64, breaks: &[f64]) -> f64 {
    let below = filter.weighted_integral(0.0, pb.a.min(cutoff), spectrum, breaks);
    let above = filter.weighted_integral(pb.b, cutoff, spectrum, breaks);
    (below + above) / (PI * pb.area)
}

/// First moment (1/(pi A)) * integral_a^b F (omega - omega_s).
pub fn local_bias_moment(filter: &FilterCurve, pb: &PassbandSpec) -> f64 {
    filter.weighted_integral(pb.a, pb.b, &|w| w - pb.center, &[pb.center]) / (PI * pb.area)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalBias {
    pub value: f64,
    /// Set when the forward neighbour needed for the slope was missing.
    pub missing_neighbor: bool,
}

/// l = 1 local bias with the slope from a forward difference of the grid spectrum.
pub fn local_bias(grid: &GridSpectrum, p: usize, filter: &FilterCurve, pb: &PassbandSpec) -> LocalBias {
    match grid.forward_slope(p) {
        Some(s) => LocalBias { value: s * local_bias_moment(filter, pb), missing_neighbor: false },
        None => LocalBias { value: 0.0, missing_neighbor: true },
    }
}

/// Bias terms as linear functionals of a grid spectrum (hat basis with constant
/// edge extension), so adaptive iterations reduce to dot products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasFunctionals {
    pub broadband: Vec<f64>,
    pub local_moment: f64,
}

impl BiasFunctionals {
    pub fn new(filter: &FilterCurve, pb: &PassbandSpec, knots: &[f64], cutoff: f64) -> Result<Self> {
        if knots.is_empty() || knots.windows(2).any(|w| !(w[1] > w[0])) {
            return param("bias knots must be non-empty and strictly increasing");
        }
        let p = knots.len();
        let norm = PI * pb.area;
        // Integral of F g over [lo, hi] with the passband removed.
        let outside = |lo: f64, hi: f64, g: &dyn Fn(f64) -> f64| -> f64 {
            let hi = hi.min(cutoff);
            if hi <= lo {
                return 0.0;
            }
            let mut s = 0.0;
            if lo < pb.a {
                s += filter.weighted_integral(lo, hi.min(pb.a), g, &[]);
            }
            if hi > pb.b {
                s += filter.weighted_integral(lo.max(pb.b), hi, g, &[]);
            }
            s
        };
        let mut m = vec![0.0; p];
        m[0] += outside(0.0, knots[0], &|_| 1.0);
        for j in 0..p - 1 {
            let (x0, x1) = (knots[j], knots[j + 1]);
            let h = x1 - x0;
            m[j] += outside(x0, x1, &|w| (x1 - w) / h);
            m[j + 1] += outside(x0, x1, &|w| (w - x0) / h);
        }
        let last = knots[p - 1];
        if cutoff > last {
            let mut tail = filter.area_between(last, cutoff);
            let (lo, hi) = (pb.a.max(last), pb.b.min(cutoff));
            if hi > lo {
                tail -= filter.integral(lo, hi);
            }
            m[p - 1] += tail.max(0.0);
        }
        m.iter_mut().for_each(|x| *x /= norm);
        Ok(BiasFunctionals { broadband: m, local_moment: local_bias_moment(filter, pb) })
    }

    pub fn broadband_bias(&self, values: &[f64]) -> f64 {
        self.broadband.iter().zip(values).map(|(m, v)| m * v).sum()
    }
}
