//! Frequency-comb reconstruction against k=0 DPSS eigenestimates.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::json;

use super::config::{CombVsDpssSpec, ScenarioConfig};
use super::output::{Bundle, Table};
use super::protocol::{expected_all, prepare_all, McOptions, Setting, SynthCache};
use super::{estimates_table, filter_table, psd_table, push_estimate, repetition_seed};
use crate::dpss::{compute_dpss, DpssParams};
use crate::error::Result;
use crate::estimate::{comb_reconstruct, CombBase, CombSolution, EstimateRecord, EstimatorTag, SignalMeasurement};
use crate::filter::{broadband_cutoff, effective_nyquist, FilterCurve, DEFAULT_CUTOFF_MULTIPLE};
use crate::psd::PsdModel;
use crate::rng::stream_id;
use crate::sim::{ExperimentConfig, PreparedExperiment};
use crate::waveform::{cpmg_rse, normalize_power, repeat_base, Waveform};

/// One repeated base sequence: the full control waveform and its single period.
#[derive(Debug, Clone)]
pub struct CombSequence {
    pub full: Waveform,
    pub base: CombBase,
}

/// Bases of duration T_B / j for j = 1..=h_max, repeated R times and power-normalized.
pub fn comb_sequences(spec: &CombVsDpssSpec) -> Result<Vec<CombSequence>> {
    (1..=spec.h_max)
        .map(|j| {
            let tau = spec.t_b_s / j as f64;
            let one = cpmg_rse(spec.cpmg_switches, 1.0, tau, spec.cpmg_segments)?;
            let mut full = normalize_power(&repeat_base(&one, spec.repetitions)?, spec.power_target)?;
            full.label = format!("comb T_B/{j}");
            let base = Waveform::new(full.omega[..one.len()].to_vec(), one.dt, format!("base T_B/{j}"))?;
            Ok(CombSequence { full, base: CombBase { base, repetitions: spec.repetitions } })
        })
        .collect()
}

/// Durations of constant-sign runs strictly inside the waveform; all runs if none are interior.
pub fn interior_run_durations(w: &Waveform) -> Vec<f64> {
    let mut runs = Vec::new();
    let mut len = 0usize;
    let mut prev: Option<bool> = None;
    for &x in &w.omega {
        let s = x >= 0.0;
        if prev == Some(s) || prev.is_none() {
            len += 1;
        } else {
            runs.push(len as f64 * w.dt);
            len = 1;
        }
        prev = Some(s);
    }
    runs.push(len as f64 * w.dt);
    if runs.len() > 2 {
        runs[1..runs.len() - 1].to_vec()
    } else {
        runs
    }
}

pub fn comb_effective_nyquist(seqs: &[CombSequence], t_b: f64) -> Result<f64> {
    let durs: Vec<f64> = seqs.iter().flat_map(|s| interior_run_durations(&s.full)).collect();
    effective_nyquist(&durs, seqs.len(), t_b)
}

pub fn expected_comb_signals(seqs: &[CombSequence], psd: &PsdModel, shots: usize) -> Vec<SignalMeasurement> {
    seqs.par_iter()
        .map(|s| {
            let cut = broadband_cutoff(psd, s.full.dt, DEFAULT_CUTOFF_MULTIPLE);
            SignalMeasurement::expected(FilterCurve::new(&s.full).overlap(psd, cut), shots)
        })
        .collect()
}

/// DPSS settings below the Nyquist frequency, and the shifts (Hz) skipped above it.
pub fn dpss_settings(spec: &CombVsDpssSpec) -> Result<(Vec<Setting>, Vec<f64>)> {
    let d = &spec.dpss;
    let params = DpssParams::new(d.n, d.w())?;
    let taper = compute_dpss(&params, 0)?.remove(0);
    let (ok, skipped): (Vec<f64>, Vec<f64>) = spec.dpss_shifts.hz().into_iter().partition(|f| *f < d.nyquist_hz());
    let settings = ok
        .par_iter()
        .map(|&f| Setting::dpss(&taper, &params, d.dt_s, 2.0 * PI * f, spec.shift_mode, spec.power_target))
        .collect::<Result<Vec<_>>>()?;
    Ok((settings, skipped))
}

fn comb_records(sol: &CombSolution) -> Vec<EstimateRecord> {
    sol.harmonics
        .iter()
        .zip(&sol.values)
        .zip(&sol.variances)
        .map(|((&w, &v), &var)| EstimateRecord {
            omega_s: w,
            value: v,
            variance: var,
            tag: EstimatorTag::Comb,
            a: w,
            b: w,
            area: f64::NAN,
            bias_bb: None,
            bias_lb: None,
            weights: None,
            iterations: None,
            flags: if sol.ill_conditioned { vec!["ill_conditioned".into()] } else { Vec::new() },
        })
        .collect()
}

fn push_comb(t: &mut Table, kind: &str, rep: Option<usize>, sol: &CombSolution, psd: &PsdModel) {
    for r in comb_records(sol) {
        push_estimate(t, "comb", kind, rep, &r, psd);
        t.rows.last_mut().expect("row just pushed")[9] = String::new();
    }
}

pub(super) fn run(cfg: &ScenarioConfig, psd: &PsdModel, oracle_only: bool, bundle: &mut Bundle) -> Result<()> {
    let spec = cfg.comb_vs_dpss.as_ref().expect("section filled by defaults");
    let seqs = comb_sequences(spec)?;
    let omega_eff = comb_effective_nyquist(&seqs, spec.t_b_s)?;
    let (dpss, skipped) = dpss_settings(spec)?;
    let f_max = spec.dpss.nyquist_hz().max(omega_eff / (2.0 * PI)) * 1.5;
    bundle.tables.push(psd_table(psd, f_max, 1201));

    let bases: Vec<CombBase> = seqs.iter().map(|s| s.base.clone()).collect();
    let exp_sig = expected_comb_signals(&seqs, psd, spec.shots);
    let exp_comb = comb_reconstruct(&exp_sig, &bases, spec.t_b_s, spec.h_max, spec.comb_mode)?;
    let exp_dpss = expected_all(&dpss, psd, spec.shots)?;
    let mut est = estimates_table();
    push_comb(&mut est, "expected", None, &exp_comb, psd);
    for r in &exp_dpss {
        push_estimate(&mut est, "k0", "expected", None, r, psd);
    }

    let curves: Vec<(String, FilterCurve)> = seqs
        .iter()
        .map(|s| (s.full.label.clone(), FilterCurve::new(&s.full)))
        .chain(dpss.iter().map(|s| (format!("k0@{:.1}Hz", s.omega_s() / (2.0 * PI)), s.filter.clone())))
        .collect();
    let refs: Vec<(String, &FilterCurve)> = curves.iter().map(|(n, f)| (n.clone(), f)).collect();
    bundle.tables.push(filter_table(&refs, f_max, 801));
    bundle.json.push(("comb_expected".into(), serde_json::to_value(&exp_comb)?));
    bundle.summary = json!({
        "effective_nyquist_hz": omega_eff / (2.0 * PI),
        "dpss_nyquist_hz": spec.dpss.nyquist_hz(),
        "comb_condition_number": exp_comb.condition_number,
        "comb_ill_conditioned": exp_comb.ill_conditioned,
        "comb_resolution_hz": 1.0 / spec.t_b_s,
        "dpss_shifts_skipped_hz": skipped,
        "dpss_skip_reason": if skipped.is_empty() { "" } else { "beyond_nyquist" },
    });

    if !oracle_only {
        let cache = SynthCache::default();
        let os = cfg.run.oversampling;
        let comb_exp = seqs
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let mut c = ExperimentConfig::new(s.full.clone(), psd.clone(), spec.shots, 0);
                c.oversampling = os;
                c.mode = cfg.run.sampling;
                c.stream = stream_id("comb").wrapping_add(j as u64);
                let synth = cache.get(psd, s.full.dt / os as f64, s.full.len() * os)?;
                PreparedExperiment::with_synthesizer(c, synth)
            })
            .collect::<Result<Vec<_>>>()?;
        let opts = McOptions { shots: spec.shots, oversampling: os, mode: cfg.run.sampling };
        let pd = prepare_all(&dpss, psd, &opts, stream_id("k0"), &cache)?;
        for rep in 0..cfg.run.repetitions {
            let seed = repetition_seed(cfg.run.seed, rep);
            let sig: Vec<SignalMeasurement> =
                comb_exp.par_iter().map(|e| SignalMeasurement::from_result(&e.run_seed(seed))).collect();
            let sol = comb_reconstruct(&sig, &bases, spec.t_b_s, spec.h_max, spec.comb_mode)?;
            push_comb(&mut est, "monte_carlo", Some(rep), &sol, psd);
            let d = pd.par_iter().map(|p| p.estimate(seed)).collect::<Result<Vec<_>>>()?;
            for r in &d {
                push_estimate(&mut est, "k0", "monte_carlo", Some(rep), r, psd);
            }
        }
    }
    bundle.tables.push(est);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_runs_of_cpmg() {
        let w = repeat_base(&cpmg_rse(2, 1.0, 4.0, 4).unwrap(), 2).unwrap();
        // + - - + + - - +
        assert_eq!(interior_run_durations(&w), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn default_nyquist_near_12_7_khz() {
        let spec = CombVsDpssSpec::low_nyquist();
        let seqs = comb_sequences(&spec).unwrap();
        let f = comb_effective_nyquist(&seqs, spec.t_b_s).unwrap() / (2.0 * PI);
        assert!((f - 12.0 / 942e-6).abs() < 1e-6 * f, "{f}");
    }
}
