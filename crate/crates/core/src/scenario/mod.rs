//! Configuration-driven scenario runner.

pub mod config;
pub mod output;
pub mod protocol;

mod comb;
mod custom;
mod detect;
mod lorentzian;
mod refine;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{ScenarioConfig, ScenarioName, SCHEMA_VERSION};
pub use comb::{comb_effective_nyquist, comb_sequences, expected_comb_signals, interior_run_durations, CombSequence};
pub use detect::{median_z, DetectRun, DetectStage, PreparedDetect};
pub use lorentzian::{rse_segments, rse_setting};
pub use refine::{RefineResult, RefineStage};
pub use output::{read_manifest, write_bundle, Bundle, Manifest, Table};
pub use protocol::{McOptions, PreparedSetting, Setting, ShiftMode, SynthCache};

use crate::error::{Error, Result};
use crate::estimate::EstimateRecord;
use crate::filter::FilterCurve;
use crate::psd::PsdModel;
use crate::rng::{stream_id, sub_seed};
use output::num;

/// Seed of Monte Carlo repetition r.
pub fn repetition_seed(seed: u64, r: usize) -> u64 {
    sub_seed(seed, stream_id("repetition"), r as u64)
}

/// Run a scenario in memory. On failure the bundle holds whatever was produced.
pub fn run_scenario(cfg: &ScenarioConfig, oracle_only: bool, bundle: &mut Bundle) -> Result<()> {
    cfg.validate()?;
    let cfg = cfg.clone().with_defaults();
    let psd = cfg.psd.model()?;
    match cfg.scenario {
        ScenarioName::LorentzianVsRse => lorentzian::run(&cfg, &psd, oracle_only, bundle),
        ScenarioName::CombVsDpss => comb::run(&cfg, &psd, oracle_only, bundle),
        ScenarioName::DetectLine => detect::run(&cfg, &psd, oracle_only, bundle),
        ScenarioName::BayesRefine => refine::run(&cfg, &psd, oracle_only, bundle),
        ScenarioName::Custom => custom::run(&cfg, &psd, oracle_only, bundle),
    }
}

/// Run a scenario and write its bundle. A mid-run failure still writes the
/// partial tables together with an error manifest, then returns the error.
pub fn run_to_dir(cfg: &ScenarioConfig, out: &Path, oracle_only: bool) -> Result<PathBuf> {
    let cfg = cfg.clone().with_defaults();
    let mut bundle = Bundle::default();
    let res = run_scenario(&cfg, oracle_only, &mut bundle);
    let path = write_bundle(out, &cfg, &bundle, oracle_only, res.as_ref().err().map(|e| e.to_string()))?;
    match res {
        Ok(()) => Ok(path),
        Err(e) => Err(e),
    }
}

/// Regenerate a bundle from a manifest alone.
pub fn rerun_manifest(manifest: &Path, out: &Path) -> Result<PathBuf> {
    let m = read_manifest(manifest)?;
    if m.config.schema_version != SCHEMA_VERSION {
        return Err(Error::Config {
            path: "config.schema_version".into(),
            message: format!("manifest uses schema {}, this build reads {SCHEMA_VERSION}", m.config.schema_version),
        });
    }
    run_to_dir(&m.config, out, m.oracle_only)
}

pub(crate) fn psd_table(psd: &PsdModel, f_max_hz: f64, points: usize) -> Table {
    let mut t = Table::new("psd", &["frequency_hz", "omega_rad_per_s", "psd"]);
    for i in 0..points {
        let f = f_max_hz * i as f64 / (points - 1) as f64;
        let w = 2.0 * PI * f;
        t.push(vec![num(f), num(w), num(psd.eval(w))]);
    }
    t
}

pub(crate) fn filter_table(curves: &[(String, &FilterCurve)], f_max_hz: f64, points: usize) -> Table {
    let mut t = Table::new("filters", &["setting", "frequency_hz", "omega_rad_per_s", "filter_rad2"]);
    let rows: Vec<Vec<Vec<String>>> = curves
        .par_iter()
        .map(|(name, f)| {
            (0..points)
                .map(|i| {
                    let hz = f_max_hz * i as f64 / (points - 1) as f64;
                    let w = 2.0 * PI * hz;
                    vec![name.clone(), num(hz), num(w), num(f.eval(w))]
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().for_each(|r| t.push(r));
    t
}

pub(crate) const ESTIMATE_COLUMNS: [&str; 12] = [
    "estimator",
    "kind",
    "repetition",
    "omega_rad_per_s",
    "frequency_hz",
    "estimate",
    "std_dev",
    "true_psd",
    "relative_error",
    "passband_area",
    "iterations",
    "flags",
];

pub(crate) fn estimates_table() -> Table {
    Table::new("estimates", &ESTIMATE_COLUMNS)
}

pub(crate) fn push_estimate(t: &mut Table, name: &str, kind: &str, rep: Option<usize>, r: &EstimateRecord, psd: &PsdModel) {
    let truth = psd.eval(r.omega_s);
    let rel = if truth != 0.0 { num((r.value - truth) / truth) } else { String::new() };
    t.push(vec![
        name.to_string(),
        kind.to_string(),
        rep.map(|r| r.to_string()).unwrap_or_default(),
        num(r.omega_s),
        num(r.omega_s / (2.0 * PI)),
        num(r.value),
        num(r.std_dev()),
        num(truth),
        rel,
        num(r.area),
        r.iterations.map(|i| i.to_string()).unwrap_or_default(),
        r.flags.join(";"),
    ]);
}

pub(crate) fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn repetition_seeds_differ() {
        assert_ne!(repetition_seed(1, 0), repetition_seed(1, 1));
        assert_eq!(repetition_seed(7, 3), repetition_seed(7, 3));
    }
}
