//! User-defined DPSS eigenestimates at arbitrary orders and shifts.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::json;

use super::config::ScenarioConfig;
use super::output::Bundle;
use super::protocol::{prepare_all, McOptions, Setting, SynthCache};
use super::{estimates_table, filter_table, psd_table, push_estimate, repetition_seed};
use crate::dpss::{compute_dpss, DpssParams};
use crate::error::Result;
use crate::filter::FilterCurve;
use crate::psd::PsdModel;
use crate::rng::stream_id;

pub(super) fn run(cfg: &ScenarioConfig, psd: &PsdModel, oracle_only: bool, bundle: &mut Bundle) -> Result<()> {
    let spec = cfg.custom.as_ref().expect("section filled by defaults");
    let d = &spec.dpss;
    let params = DpssParams::new(d.n, d.w())?;
    let max = *spec.orders.iter().max().expect("validated non-empty");
    let tapers = compute_dpss(&params, max)?;
    let shifts = spec.shifts.omegas();
    let per_order: Vec<Vec<Setting>> = spec
        .orders
        .iter()
        .map(|&k| {
            shifts
                .par_iter()
                .map(|&ws| Setting::dpss(&tapers[k], &params, d.dt_s, ws, spec.shift_mode, spec.power_target))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let f_max = d.nyquist_hz();
    bundle.tables.push(psd_table(psd, f_max, 1201));
    let curves: Vec<(String, &FilterCurve)> = per_order
        .iter()
        .zip(&spec.orders)
        .flat_map(|(row, k)| row.iter().map(move |s| (format!("k{k}@{:.1}Hz", s.omega_s() / (2.0 * PI)), &s.filter)))
        .collect();
    bundle.tables.push(filter_table(&curves, f_max, 401));
    let mut est = estimates_table();
    for (row, k) in per_order.iter().zip(&spec.orders) {
        let recs = row.par_iter().map(|s| s.expected_estimate(psd, spec.shots)).collect::<Result<Vec<_>>>()?;
        for r in &recs {
            push_estimate(&mut est, &format!("k{k}"), "expected", None, r, psd);
        }
    }
    if !oracle_only {
        let cache = SynthCache::default();
        let opts = McOptions { shots: spec.shots, oversampling: cfg.run.oversampling, mode: cfg.run.sampling };
        let prepared = per_order
            .iter()
            .zip(&spec.orders)
            .map(|(row, k)| prepare_all(row, psd, &opts, stream_id(&format!("k{k}")), &cache))
            .collect::<Result<Vec<_>>>()?;
        for rep in 0..cfg.run.repetitions {
            let seed = repetition_seed(cfg.run.seed, rep);
            for (row, k) in prepared.iter().zip(&spec.orders) {
                let recs = row.par_iter().map(|p| p.estimate(seed)).collect::<Result<Vec<_>>>()?;
                for r in &recs {
                    push_estimate(&mut est, &format!("k{k}"), "monte_carlo", Some(rep), r, psd);
                }
            }
        }
    }
    bundle.tables.push(est);
    bundle.summary = json!({ "orders": spec.orders, "shifts": shifts.len() });
    Ok(())
}
