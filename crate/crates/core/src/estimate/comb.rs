//! Frequency-comb reconstruction from repeated base sequences.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SignalMeasurement;
use crate::error::{param, Error, Result};
use crate::filter::{comb_filter, filter_eval};
use crate::quad::Integrator;
use crate::waveform::Waveform;

/// Condition numbers above this raise a warning flag.
pub const COMB_CONDITION_WARNING: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombBase {
    pub base: Waveform,
    pub repetitions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CombSignalMode {
    /// (2R/tau) F_base(omega_h) at harmonics commensurate with the base.
    #[default]
    DeltaComb,
    /// (1/pi) times the exact finite-R filter integrated over each harmonic cell.
    ExactFilter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombSolution {
    pub harmonics: Vec<f64>,
    pub values: Vec<f64>,
    pub variances: Vec<f64>,
    pub condition_number: f64,
    pub ill_conditioned: bool,
    /// Row-major design matrix, one row per base.
    pub matrix: Vec<Vec<f64>>,
}

fn commensurate(tau: f64, t_b: f64, h: usize) -> bool {
    let x = h as f64 * tau / t_b;
    (x - x.round()).abs() < 1e-6 && x.round() >= 1.0
}

/// Design matrix mapping S(omega_h), h = 1..h_max, to expected comb signals.
pub fn comb_matrix(bases: &[CombBase], t_b: f64, h_max: usize, mode: CombSignalMode) -> Result<DMatrix<f64>> {
    if bases.is_empty() || h_max == 0 || !(t_b > 0.0) {
        return param("comb reconstruction needs bases, h_max >= 1 and T_B > 0");
    }
    let d_omega = 2.0 * PI / t_b;
    let mut m = DMatrix::zeros(bases.len(), h_max);
    for (j, b) in bases.iter().enumerate() {
        if b.repetitions == 0 {
            return param("comb base needs at least one repetition");
        }
        let tau = b.base.duration();
        for h in 1..=h_max {
            let w = h as f64 * d_omega;
            m[(j, h - 1)] = match mode {
                CombSignalMode::DeltaComb => {
                    if commensurate(tau, t_b, h) {
                        2.0 * b.repetitions as f64 / tau * filter_eval(&b.base, w)
                    } else {
                        0.0
                    }
                }
                CombSignalMode::ExactFilter => {
                    let tooth = 2.0 * PI / (b.repetitions as f64 * tau);
                    let q = Integrator::new(0.25 * tooth.min(d_omega)).with_tol(1e-9, 0.0);
                    q.integrate(&|x| comb_filter(&b.base, b.repetitions, x), w - 0.5 * d_omega, w + 0.5 * d_omega, &[w]).value
                        / PI
                }
            };
        }
    }
    Ok(m)
}

/// Least-squares solve of signals = M S over harmonics 1..h_max via SVD.
pub fn comb_reconstruct(
    signals: &[SignalMeasurement],
    bases: &[CombBase],
    t_b: f64,
    h_max: usize,
    mode: CombSignalMode,
) -> Result<CombSolution> {
    if signals.len() != bases.len() {
        return param("need one signal per comb base");
    }
    if bases.len() < h_max {
        return param(format!("{} bases cannot determine {h_max} harmonics", bases.len()));
    }
    let m = comb_matrix(bases, t_b, h_max, mode)?;
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-14 * h_max as f64 {
        return Err(Error::Numeric(format!("comb system is singular (singular values {smin:e} .. {smax:e})")));
    }
    let cond = smax / smin;
    let pinv = svd.pseudo_inverse(0.0).map_err(|e| Error::Numeric(e.to_string()))?;
    let y = DVector::from_iterator(signals.len(), signals.iter().map(|s| s.signal));
    let x = &pinv * y;
    let variances = (0..h_max)
        .map(|h| (0..signals.len()).map(|j| pinv[(h, j)].powi(2) * signals[j].variance).sum())
        .collect();
    Ok(CombSolution {
        harmonics: (1..=h_max).map(|h| 2.0 * PI * h as f64 / t_b).collect(),
        values: x.iter().copied().collect(),
        variances,
        condition_number: cond,
        ill_conditioned: cond > COMB_CONDITION_WARNING,
        matrix: (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect(),
    })
}
