//! Passband estimators and their combinations.

mod aqm;
mod bias;
mod comb;
mod fisher;

pub use aqm::{
    adaptive_multitaper, effective_filter, effective_segment_areas, AqmChannel, AqmOptions, AqmOutcome, InitialEstimate,
};
pub use bias::{broadband_bias, local_bias, local_bias_moment, BiasFunctionals, GridSpectrum, LocalBias};
pub use comb::{comb_matrix, comb_reconstruct, CombBase, CombSignalMode, CombSolution, COMB_CONDITION_WARNING};
pub use fisher::{
    variance_correction, fisher_information, interpolated_estimate, passband_fisher, CorrectionCoefficient,
    InterpolatedEstimate,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::filter::PassbandSpec;
use crate::sim::ExperimentResult;

/// Passband areas at or below this are treated as degenerate.
pub const AREA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorTag {
    Taper(usize),
    Ss,
    M,
    Comb,
    Rse,
    Cs(usize),
}

impl fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorTag::Taper(k) => write!(f, "k{k}"),
            EstimatorTag::Ss => write!(f, "ss"),
            EstimatorTag::M => write!(f, "m"),
            EstimatorTag::Comb => write!(f, "comb"),
            EstimatorTag::Rse => write!(f, "rse"),
            EstimatorTag::Cs(k) => write!(f, "cs{k}"),
        }
    }
}

/// A measured (or expected) signal S^(T) with its sampling variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalMeasurement {
    pub signal: f64,
    pub variance: f64,
    pub shots: usize,
}

impl SignalMeasurement {
    pub fn from_result(r: &ExperimentResult) -> Self {
        SignalMeasurement { signal: r.signal, variance: r.signal_variance(), shots: r.shots }
    }

    /// Expected value with the first-order survival probability P = 1 - S(T).
    pub fn expected(signal: f64, shots: usize) -> Self {
        let p = (1.0 - signal).clamp(0.0, 1.0);
        SignalMeasurement { signal, variance: p * (1.0 - p) / shots as f64, shots }
    }

    /// Sum of independent experiments, as for the two halves of a CS pair.
    pub fn combine(&self, other: &SignalMeasurement) -> Self {
        SignalMeasurement {
            signal: self.signal + other.signal,
            variance: self.variance + other.variance,
            shots: self.shots + other.shots,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        SignalMeasurement { signal: c * self.signal, variance: c * c * self.variance, shots: self.shots }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub omega_s: f64,
    pub value: f64,
    pub variance: f64,
    pub tag: EstimatorTag,
    pub a: f64,
    pub b: f64,
    pub area: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_bb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_lb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl EstimateRecord {
    pub fn std_dev(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

/// S^_Omega(omega_s) = S^(T) / A with variance var[S^(T)] / A^2.
pub fn eigenestimate(m: &SignalMeasurement, pb: &PassbandSpec, tag: EstimatorTag) -> Result<EstimateRecord> {
    if !(pb.area > AREA_FLOOR) {
        return param(format!("degenerate passband area {} at shift {}", pb.area, pb.center));
    }
    Ok(EstimateRecord {
        omega_s: pb.center,
        value: m.signal / pb.area,
        variance: m.variance / (pb.area * pb.area),
        tag,
        a: pb.a,
        b: pb.b,
        area: pb.area,
        bias_bb: None,
        bias_lb: None,
        weights: None,
        iterations: None,
        flags: Vec::new(),
    })
}

/// SSQM estimate: an eigenestimate of the optimized-combination filter.
pub fn ssqm_estimate(m: &SignalMeasurement, pb: &PassbandSpec) -> Result<EstimateRecord> {
    eigenestimate(m, pb, EstimatorTag::Ss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub value: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub tag: EstimatorTag,
    pub points: Vec<SpectrumPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

impl SpectrumEstimate {
    pub fn from_records(tag: EstimatorTag, records: &[EstimateRecord]) -> Result<Self> {
        let points: Vec<SpectrumPoint> = records
            .iter()
            .map(|r| SpectrumPoint { omega: r.omega_s, value: r.value, std_dev: r.std_dev() })
            .collect();
        let s = SpectrumEstimate { tag, points, flags: Vec::new(), provenance: serde_json::Value::Null };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.iter().any(|p| !p.value.is_finite()) {
            return param("spectrum estimate contains non-finite values");
        }
        if self.points.windows(2).any(|w| !(w[1].omega > w[0].omega)) {
            return param("spectrum grid must be strictly increasing");
        }
        Ok(())
    }
}

/// Upper bound on the standard deviation of a passband estimate: 1/sqrt(4 M A^2).
pub fn sigma_bound(shots: usize, area: f64) -> f64 {
    1.0 / (4.0 * shots as f64 * area * area).sqrt()
}

/// The same bound for a weighted multitaper combination.
pub fn sigma_bound_multitaper(weights: &[f64], shots: &[usize], areas: &[f64]) -> f64 {
    weights
        .iter()
        .zip(shots)
        .zip(areas)
        .map(|((d, &m), a)| d * d / (4.0 * m as f64 * a * a))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub null_mean: f64,
    pub z: Vec<f64>,
}

/// z_p = (S^_p - mean) / sigma_bound_p against a flat null at the grid average.
pub fn significance_test(values: &[f64], sigma_bounds: &[f64]) -> Result<SignificanceResult> {
    if values.len() < 3 {
        return param("significance test needs at least 3 estimates");
    }
    if values.len() != sigma_bounds.len() || sigma_bounds.iter().any(|s| !(*s > 0.0)) {
        return param("need one positive sigma bound per estimate");
    }
    let null_mean = values.iter().sum::<f64>() / values.len() as f64;
    let z = values.iter().zip(sigma_bounds).map(|(v, s)| (v - null_mean) / s).collect();
    Ok(SignificanceResult { null_mean, z })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pb(area: f64) -> PassbandSpec {
        PassbandSpec { center: 10.0, half_width: 2.0, a: 8.0, b: 12.0, area }
    }

    #[test]
    fn eigenestimate_scales_by_area() {
        let m = SignalMeasurement { signal: 0.09, variance: 1e-5, shots: 2000 };
        let r = eigenestimate(&m, &pb(225.0), EstimatorTag::Taper(0)).unwrap();
        assert!((r.value - 0.09 / 225.0).abs() < 1e-18);
        assert!((r.variance - 1e-5 / 225.0f64.powi(2)).abs() < 1e-20);
        assert!(eigenestimate(&m, &pb(0.0), EstimatorTag::Taper(0)).is_err());
    }

    #[test]
    fn significance_of_flat_values() {
        let r = significance_test(&[1.0, 1.0, 1.0, 4.0], &[1.0; 4]).unwrap();
        assert_eq!(r.null_mean, 1.75);
        assert_eq!(r.z, vec![-0.75, -0.75, -0.75, 2.25]);
        assert!(significance_test(&[1.0, 2.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn sigma_bound_matches_worst_case_bernoulli() {
        let (m, a) = (2600, 225.0);
        let worst = (0.25 / m as f64).sqrt() / a;
        assert!((sigma_bound(m, a) - worst).abs() < 1e-18);
        let mt = sigma_bound_multitaper(&[1.0], &[m], &[a]);
        assert!((mt - worst).abs() < 1e-18);
    }
}
