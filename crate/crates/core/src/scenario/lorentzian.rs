//! Lorentzian PSD: shifted k=0 DPSS eigenestimates against CPMG rotary spin echo.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::json;

use super::config::{LorentzianVsRseSpec, ScenarioConfig};
use super::output::Bundle;
use super::protocol::{expected_all, prepare_all, McOptions, Setting, SynthCache};
use super::{estimates_table, filter_table, psd_table, push_estimate, repetition_seed};
use crate::dpss::{compute_dpss, DpssParams};
use crate::error::Result;
use crate::estimate::{EstimateRecord, EstimatorTag};
use crate::psd::PsdModel;
use crate::rng::stream_id;
use crate::waveform::{cpmg_rse, normalize_power};

/// Segment count for an RSE sequence with n switches: the smallest multiple of 2n
/// not below the DPSS length.
pub fn rse_segments(n_switches: usize, min_segments: usize) -> usize {
    if n_switches == 0 {
        return min_segments;
    }
    min_segments.div_ceil(2 * n_switches) * 2 * n_switches
}

/// RSE setting with n switches: passband centred on n pi / T with half-width 2 pi / T.
pub fn rse_setting(n_switches: usize, total_time: f64, min_segments: usize, power: f64) -> Result<Setting> {
    let n_seg = rse_segments(n_switches, min_segments);
    let w = normalize_power(&cpmg_rse(n_switches, 1.0, total_time, n_seg)?, power)?;
    let dt = w.dt;
    let omega_s = n_switches as f64 * PI / total_time;
    Setting::from_waveforms(vec![w], EstimatorTag::Rse, dt / total_time, omega_s, dt)
}

pub fn settings(spec: &LorentzianVsRseSpec) -> Result<(Vec<Setting>, Vec<Setting>)> {
    let d = &spec.dpss;
    let params = DpssParams::new(d.n, d.w())?;
    let taper = compute_dpss(&params, 0)?.remove(0);
    let dpss = spec
        .shifts
        .omegas()
        .par_iter()
        .map(|&ws| Setting::dpss(&taper, &params, d.dt_s, ws, spec.shift_mode, spec.power_target))
        .collect::<Result<Vec<_>>>()?;
    let total = d.n as f64 * d.dt_s;
    let rse = spec
        .rse_switches
        .par_iter()
        .map(|&n| rse_setting(n, total, d.n, spec.power_target))
        .collect::<Result<Vec<_>>>()?;
    Ok((dpss, rse))
}

fn max_abs_rel(records: &[EstimateRecord], psd: &PsdModel, f_lo: f64, f_hi: f64) -> f64 {
    records
        .iter()
        .filter(|r| {
            let f = r.omega_s / (2.0 * PI);
            f >= f_lo && f <= f_hi
        })
        .map(|r| ((r.value - psd.eval(r.omega_s)) / psd.eval(r.omega_s)).abs())
        .fold(0.0, f64::max)
}

pub(super) fn run(cfg: &ScenarioConfig, psd: &PsdModel, oracle_only: bool, bundle: &mut Bundle) -> Result<()> {
    let spec = cfg.lorentzian_vs_rse.as_ref().expect("section filled by defaults");
    let (dpss, rse) = settings(spec)?;
    let f_max = spec
        .shifts
        .hz()
        .into_iter()
        .chain(dpss.iter().chain(&rse).map(|s| s.omega_s() / (2.0 * PI)))
        .fold(1000.0, f64::max)
        * 1.5;
    bundle.tables.push(psd_table(psd, f_max, 1201));

    let exp_dpss = expected_all(&dpss, psd, spec.shots)?;
    let exp_rse = expected_all(&rse, psd, spec.shots)?;
    let mut est = estimates_table();
    for r in &exp_dpss {
        push_estimate(&mut est, "k0", "expected", None, r, psd);
    }
    for r in &exp_rse {
        push_estimate(&mut est, "rse", "expected", None, r, psd);
    }
    bundle.summary = json!({
        "dpss_max_abs_relative_error_0_2khz": max_abs_rel(&exp_dpss, psd, 0.0, 2000.0),
        "rse_max_abs_relative_error_0_2khz": max_abs_rel(&exp_rse, psd, 0.0, 2000.0),
        "shots": spec.shots,
    });

    let mut curves: Vec<(String, &crate::filter::FilterCurve)> = Vec::new();
    for s in &dpss {
        curves.push((format!("k0@{:.1}Hz", s.omega_s() / (2.0 * PI)), &s.filter));
    }
    for (s, n) in rse.iter().zip(&spec.rse_switches) {
        curves.push((format!("rse n={n}"), &s.filter));
    }
    bundle.tables.push(filter_table(&curves, f_max, 601));

    if !oracle_only {
        let cache = SynthCache::default();
        let opts = McOptions { shots: spec.shots, oversampling: cfg.run.oversampling, mode: cfg.run.sampling };
        let pd = prepare_all(&dpss, psd, &opts, stream_id("k0"), &cache)?;
        let pr = prepare_all(&rse, psd, &opts, stream_id("rse"), &cache)?;
        for rep in 0..cfg.run.repetitions {
            let seed = repetition_seed(cfg.run.seed, rep);
            let a = pd.par_iter().map(|p| p.estimate(seed)).collect::<Result<Vec<_>>>()?;
            let b = pr.par_iter().map(|p| p.estimate(seed)).collect::<Result<Vec<_>>>()?;
            for r in &a {
                push_estimate(&mut est, "k0", "monte_carlo", Some(rep), r, psd);
            }
            for r in &b {
                push_estimate(&mut est, "rse", "monte_carlo", Some(rep), r, psd);
            }
        }
    }
    bundle.tables.push(est);
    Ok(())
}
