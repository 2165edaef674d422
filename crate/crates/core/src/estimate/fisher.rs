//! Fisher information of passband estimates about segment values, and the
//! interpolated estimate built from it.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// I_q = (dE[S^]/dS_q)^2 / var[S^] for one estimate, given its filter-matrix row
/// (A_q / A for a passband estimate, R_q for an adaptive multitaper estimate).
pub fn fisher_information(row: &[f64], variance: f64) -> Result<Vec<f64>> {
    if !(variance > 0.0) {
        return param(format!("Fisher information needs a positive variance, got {variance}"));
    }
    Ok(row.iter().map(|r| r * r / variance).collect())
}

/// M (A_q / sigma)^2 for a single-setting passband estimate with sigma^2 = P(1-P).
pub fn passband_fisher(segment_areas: &[f64], shots: usize, sigma2: f64) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0) {
        return param("Fisher information needs sigma^2 > 0");
    }
    Ok(segment_areas.iter().map(|a| shots as f64 * a * a / sigma2).collect())
}

/// Leading coefficient of the covariance-dependence term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionCoefficient {
    /// 2 {A_q (2P-1) / (P(1-P))}^2.
    #[default]
    Two,
    /// 1/2 {A_q (2P-1) / (P(1-P))}^2, from (1/2)(dSigma/dS_q)^2 / Sigma^2 with Sigma = P(1-P)/(M A^2).
    Half,
}

impl CorrectionCoefficient {
    pub fn value(self) -> f64 {
        match self {
            CorrectionCoefficient::Two => 2.0,
            CorrectionCoefficient::Half => 0.5,
        }
    }
}

/// Additive correction to the Fisher information from the dependence of the
/// sampling variance on the spectrum, evaluated at the survival probability P.
pub fn variance_correction(segment_areas: &[f64], p_up: f64, coef: CorrectionCoefficient) -> Result<Vec<f64>> {
    if !(p_up > 0.0 && p_up < 1.0) {
        return param(format!("survival probability {p_up} must lie strictly inside (0, 1)"));
    }
    let scale = (2.0 * p_up - 1.0) / (p_up * (1.0 - p_up));
    Ok(segment_areas.iter().map(|a| coef.value() * (a * scale).powi(2)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolatedEstimate {
    pub values: Vec<f64>,
    pub variances: Vec<f64>,
    /// Row-normalized weights, Q rows of length P.
    pub weights: Vec<Vec<f64>>,
    /// Segments with an all-zero information row; their value is reported as 0.
    pub unestimable: Vec<usize>,
}

/// S^_q = sum_p I_qp S^_p with I_qp the information of estimate p about segment q,
/// normalized over p. `information[p][q]` holds the unnormalized values.
pub fn interpolated_estimate(values: &[f64], variances: &[f64], information: &[Vec<f64>]) -> Result<InterpolatedEstimate> {
    let p = values.len();
    if p == 0 || variances.len() != p || information.len() != p {
        return param("interpolated estimate needs one variance and one information row per estimate");
    }
    let q = information[0].len();
    if information.iter().any(|r| r.len() != q) {
        return param("information rows must all have the same length");
    }
    let mut out = InterpolatedEstimate {
        values: vec![0.0; q],
        variances: vec![0.0; q],
        weights: vec![vec![0.0; p]; q],
        unestimable: Vec::new(),
    };
    for j in 0..q {
        let total: f64 = information.iter().map(|r| r[j].max(0.0)).sum();
        if !(total > 0.0) {
            out.unestimable.push(j);
            continue;
        }
        for i in 0..p {
            let w = information[i][j].max(0.0) / total;
            out.weights[j][i] = w;
            out.values[j] += w * values[i];
            out.variances[j] += w * w * variances[i];
        }
    }
    Ok(out)
}
