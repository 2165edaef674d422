//! Adaptive quantum multitaper: bias-driven reweighting of eigenestimates.

use serde::{Deserialize, Serialize};

use super::bias::{BiasFunctionals, GridSpectrum};
use super::{EstimateRecord, EstimatorTag};
use crate::error::{param, Result};
use crate::filter::FilterCurve;

/// One eigenestimate at one shift together with its bias functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqmChannel {
    pub estimate: EstimateRecord,
    pub bias: BiasFunctionals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialEstimate {
    #[default]
    EqualWeight,
    Taper0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AqmOptions {
    pub tolerance: f64,
    pub max_iter: usize,
    pub initial: InitialEstimate,
    pub local_bias: bool,
}

impl Default for AqmOptions {
    fn default() -> Self {
        AqmOptions { tolerance: 1e-6, max_iter: 50, initial: InitialEstimate::EqualWeight, local_bias: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqmOutcome {
    pub records: Vec<EstimateRecord>,
    pub iterations: usize,
    pub converged: bool,
    /// Grid estimate after every iteration, starting with the initial one.
    pub history: Vec<Vec<f64>>,
}

struct Step {
    weights: Vec<f64>,
    bb: Vec<f64>,
    lb: Vec<f64>,
    fallback: bool,
    missing_neighbor: bool,
}

fn weights_at(chans: &[AqmChannel], p: usize, grid: &GridSpectrum, opts: &AqmOptions) -> Step {
    let s = grid.value[p];
    let slope = if opts.local_bias { grid.forward_slope(p) } else { Some(0.0) };
    let mut step = Step {
        weights: Vec::with_capacity(chans.len()),
        bb: Vec::with_capacity(chans.len()),
        lb: Vec::with_capacity(chans.len()),
        fallback: false,
        missing_neighbor: slope.is_none(),
    };
    for c in chans {
        let bb = c.bias.broadband_bias(&grid.value);
        let lb = slope.unwrap_or(0.0) * c.bias.local_moment;
        let den = s + bb + lb;
        step.weights.push(if den > 0.0 { s / den } else { 0.0 });
        step.bb.push(bb);
        step.lb.push(lb);
    }
    let total: f64 = step.weights.iter().sum();
    if total > 0.0 && total.is_finite() {
        step.weights.iter_mut().for_each(|w| *w /= total);
    } else {
        step.fallback = true;
        let k = chans.len() as f64;
        step.weights.iter_mut().for_each(|w| *w = 1.0 / k);
    }
    step
}

fn combine(chans: &[AqmChannel], w: &[f64]) -> f64 {
    chans.iter().zip(w).map(|(c, d)| d * c.estimate.value).sum()
}

/// Iterates d_k = S / (S + B_BB,k + B_LB,k) over the whole shift grid at once,
/// with biases evaluated from the previous grid estimate (clipped at zero).
pub fn adaptive_multitaper(shifts: &[f64], channels: &[Vec<AqmChannel>], opts: &AqmOptions) -> Result<AqmOutcome> {
    let p = shifts.len();
    if p == 0 || channels.len() != p {
        return param("adaptive multitaper needs one channel set per shift");
    }
    if channels.iter().any(|c| c.len() < 2) {
        return param("adaptive multitaper needs at least two eigenestimates per shift");
    }
    if channels.iter().flatten().any(|c| c.bias.broadband.len() != p) {
        return param("bias functionals must be defined on the shift grid");
    }
    if !(opts.tolerance > 0.0) || opts.max_iter == 0 {
        return param("adaptive multitaper needs a positive tolerance and max_iter");
    }
    let mut current: Vec<f64> = channels
        .iter()
        .map(|c| match opts.initial {
            InitialEstimate::EqualWeight => c.iter().map(|x| x.estimate.value).sum::<f64>() / c.len() as f64,
            InitialEstimate::Taper0 => c[0].estimate.value,
        })
        .collect();
    let mut clipped_any = vec![false; p];
    let mut history = vec![current.clone()];
    let mut iterations = 0;
    let mut converged = false;
    let mut steps: Vec<Step> = Vec::new();
    while iterations < opts.max_iter {
        iterations += 1;
        let clipped: Vec<f64> = current.iter().map(|v| v.max(0.0)).collect();
        for (i, v) in current.iter().enumerate() {
            clipped_any[i] |= *v < 0.0;
        }
        let grid = GridSpectrum::new(shifts.to_vec(), clipped)?;
        steps = (0..p).map(|i| weights_at(&channels[i], i, &grid, opts)).collect();
        let next: Vec<f64> = (0..p).map(|i| combine(&channels[i], &steps[i].weights)).collect();
        let change = next
            .iter()
            .zip(&current)
            .map(|(n, c)| {
                let scale = n.abs().max(c.abs());
                if scale > 0.0 {
                    (n - c).abs() / scale
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        current = next;
        history.push(current.clone());
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }
    let records = (0..p)
        .map(|i| {
            let st = &steps[i];
            let chans = &channels[i];
            let e0 = &chans[0].estimate;
            let variance = chans.iter().zip(&st.weights).map(|(c, d)| d * d * c.estimate.variance).sum();
            let mut flags = Vec::new();
            if !converged {
                flags.push("not_converged".to_string());
            }
            if clipped_any[i] {
                flags.push("clipped_negative".to_string());
            }
            if st.fallback {
                flags.push("equal_weight_fallback".to_string());
            }
            if opts.local_bias && st.missing_neighbor {
                flags.push("missing_neighbor".to_string());
            }
            EstimateRecord {
                omega_s: shifts[i],
                value: current[i],
                variance,
                tag: EstimatorTag::M,
                a: e0.a,
                b: e0.b,
                area: chans.iter().zip(&st.weights).map(|(c, d)| d * c.estimate.area).sum(),
                bias_bb: Some(st.weights.iter().zip(&st.bb).map(|(d, b)| d * b).sum()),
                bias_lb: Some(st.weights.iter().zip(&st.lb).map(|(d, b)| d * b).sum()),
                weights: Some(st.weights.clone()),
                iterations: Some(iterations),
                flags,
            }
        })
        .collect();
    Ok(AqmOutcome { records, iterations, converged, history })
}

/// rho(omega) = sum_k d_k F_k(omega) / A_k.
pub fn effective_filter(weights: &[f64], filters: &[FilterCurve], areas: &[f64], omega: f64) -> f64 {
    weights.iter().zip(filters).zip(areas).map(|((d, f), a)| d * f.eval(omega) / a).sum()
}

/// R_q = sum_k d_k A_{k,q} / A_k from per-taper segment areas.
pub fn effective_segment_areas(weights: &[f64], segment_areas: &[Vec<f64>], areas: &[f64]) -> Vec<f64> {
    let q = segment_areas.first().map_or(0, |s| s.len());
    (0..q)
        .map(|j| weights.iter().zip(segment_areas).zip(areas).map(|((d, s), a)| d * s[j] / a).sum())
        .collect()
}
