//! Line detection on a white floor: k=0 eigenestimates, SSQM and AQM with z-scores.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{DetectLineSpec, ScenarioConfig};
use super::output::{num, Bundle, Table};
use super::protocol::{prepare_all, McOptions, PreparedSetting, Setting, SynthCache};
use super::{estimates_table, filter_table, median, psd_table, push_estimate, repetition_seed};
use crate::dpss::{compute_dpss, DpssParams, Taper};
use crate::error::{param, Result};
use crate::estimate::{
    adaptive_multitaper, effective_filter, sigma_bound, sigma_bound_multitaper, significance_test, AqmChannel,
    AqmOptions, AqmOutcome, BiasFunctionals, EstimateRecord, EstimatorTag,
};
use crate::filter::{FilterCurve, DEFAULT_CUTOFF_MULTIPLE};
use crate::psd::PsdModel;
use crate::rng::stream_id;
use crate::ssqm::{ssqm_coefficients, SsqmCoefficients, SsqmOptions};
use crate::waveform::combine_tapers;

/// Seed-independent part of the detection protocol.
pub struct DetectStage {
    pub spec: DetectLineSpec,
    pub shifts: Vec<f64>,
    pub tapers: Vec<Taper>,
    pub ssqm: SsqmCoefficients,
    pub k0: Vec<Setting>,
    pub ss: Vec<Setting>,
    /// aqm[p][k]: taper k shifted to shift p.
    pub aqm: Vec<Vec<Setting>>,
    pub bias: Vec<Vec<BiasFunctionals>>,
    pub bias_cutoff: f64,
}

/// Estimates from one pass of the protocol, expected or simulated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectRun {
    pub k0: Vec<EstimateRecord>,
    pub ss: Vec<EstimateRecord>,
    pub channels: Vec<Vec<EstimateRecord>>,
    pub aqm: AqmOutcome,
    pub z_k0: Vec<f64>,
    pub z_ss: Vec<f64>,
    pub z_aqm: Vec<f64>,
}

pub struct PreparedDetect {
    k0: Vec<PreparedSetting>,
    ss: Vec<PreparedSetting>,
    aqm: Vec<Vec<PreparedSetting>>,
}

impl DetectStage {
    pub fn new(spec: &DetectLineSpec) -> Result<Self> {
        let d = &spec.dpss;
        let params = DpssParams::new(d.n, d.w())?;
        let tapers = compute_dpss(&params, spec.orders - 1)?;
        let shifts = spec.shifts.omegas();
        let (mode, power, dt) = (spec.shift_mode, spec.power_target, d.dt_s);
        let ssqm = ssqm_coefficients(&params, &tapers, spec.ssqm_seed, &SsqmOptions::default())?;
        let ss_base = combine_tapers(&tapers, &ssqm.coeffs, 1.0, dt)?;
        let k0 = shifts
            .par_iter()
            .map(|&ws| Setting::dpss(&tapers[0], &params, dt, ws, mode, power))
            .collect::<Result<Vec<_>>>()?;
        let ss = shifts
            .par_iter()
            .map(|&ws| Setting::shifted(&ss_base, EstimatorTag::Ss, params.w(), ws, mode, power))
            .collect::<Result<Vec<_>>>()?;
        let aqm = shifts
            .par_iter()
            .map(|&ws| tapers.iter().map(|t| Setting::dpss(t, &params, dt, ws, mode, power)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        // The experimenter does not know the spectrum, so the bias tail runs to a fixed multiple of Nyquist.
        let bias_cutoff = DEFAULT_CUTOFF_MULTIPLE * PI / dt;
        let bias = aqm
            .par_iter()
            .map(|row: &Vec<Setting>| {
                row.par_iter()
                    .map(|s| BiasFunctionals::new(&s.filter, &s.passband, &shifts, bias_cutoff))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DetectStage { spec: spec.clone(), shifts, tapers, ssqm, k0, ss, aqm, bias, bias_cutoff })
    }

    fn finish(&self, k0: Vec<EstimateRecord>, ss: Vec<EstimateRecord>, channels: Vec<Vec<EstimateRecord>>, opts: &AqmOptions) -> Result<DetectRun> {
        let chans: Vec<Vec<AqmChannel>> = channels
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                row.iter().zip(b).map(|(e, bf)| AqmChannel { estimate: e.clone(), bias: bf.clone() }).collect()
            })
            .collect();
        let aqm = adaptive_multitaper(&self.shifts, &chans, opts)?;
        let z = |recs: &[EstimateRecord], shots: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = recs.iter().map(|r| r.value).collect();
            let s: Vec<f64> = recs.iter().map(|r| sigma_bound(shots, r.area)).collect();
            Ok(significance_test(&v, &s)?.z)
        };
        let z_k0 = z(&k0, self.spec.shots)?;
        let z_ss = z(&ss, self.spec.shots)?;
        let shots = vec![self.spec.aqm_shots_per_taper; self.tapers.len()];
        let bounds: Vec<f64> = aqm
            .records
            .iter()
            .zip(&channels)
            .map(|(r, row)| {
                let areas: Vec<f64> = row.iter().map(|e| e.area).collect();
                sigma_bound_multitaper(r.weights.as_deref().unwrap_or(&[]), &shots, &areas)
            })
            .collect();
        let vals: Vec<f64> = aqm.records.iter().map(|r| r.value).collect();
        let z_aqm = significance_test(&vals, &bounds)?.z;
        Ok(DetectRun { k0, ss, channels, aqm, z_k0, z_ss, z_aqm })
    }

    pub fn expected(&self, psd: &PsdModel, opts: &AqmOptions) -> Result<DetectRun> {
        let (m, ma) = (self.spec.shots, self.spec.aqm_shots_per_taper);
        let k0 = self.k0.par_iter().map(|s| s.expected_estimate(psd, m)).collect::<Result<Vec<_>>>()?;
        let ss = self.ss.par_iter().map(|s| s.expected_estimate(psd, m)).collect::<Result<Vec<_>>>()?;
        let channels = self
            .aqm
            .par_iter()
            .map(|row| row.par_iter().map(|s| s.expected_estimate(psd, ma)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        self.finish(k0, ss, channels, opts)
    }

    pub fn prepare(&self, psd: &PsdModel, oversampling: usize, mode: crate::sim::SamplingMode, cache: &SynthCache) -> Result<PreparedDetect> {
        let o = McOptions { shots: self.spec.shots, oversampling, mode };
        let oa = McOptions { shots: self.spec.aqm_shots_per_taper, ..o };
        let k = self.tapers.len() as u64;
        Ok(PreparedDetect {
            k0: prepare_all(&self.k0, psd, &o, stream_id("k0"), cache)?,
            ss: prepare_all(&self.ss, psd, &o, stream_id("ss"), cache)?,
            aqm: self
                .aqm
                .iter()
                .enumerate()
                .map(|(p, row)| prepare_all(row, psd, &oa, stream_id("aqm").wrapping_add(p as u64 * k), cache))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn monte_carlo(&self, prepared: &PreparedDetect, seed: u64, opts: &AqmOptions) -> Result<DetectRun> {
        let k0 = prepared.k0.par_iter().map(|p| p.estimate(seed)).collect::<Result<Vec<_>>>()?;
        let ss = prepared.ss.par_iter().map(|p| p.estimate(seed)).collect::<Result<Vec<_>>>()?;
        let channels = prepared
            .aqm
            .par_iter()
            .map(|row| row.par_iter().map(|p| p.estimate(seed)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        self.finish(k0, ss, channels, opts)
    }

    /// Filter curves of the k=0 and SSQM settings plus the effective AQM filter of a run.
    pub fn filter_rows(&self, run: &DetectRun, f_max: f64, points: usize) -> Table {
        let curves: Vec<(String, &FilterCurve)> = self
            .k0
            .iter()
            .map(|s| (format!("k0@{:.1}Hz", s.omega_s() / (2.0 * PI)), &s.filter))
            .chain(self.ss.iter().map(|s| (format!("ss@{:.1}Hz", s.omega_s() / (2.0 * PI)), &s.filter)))
            .collect();
        let mut t = filter_table(&curves, f_max, points);
        for (p, row) in self.aqm.iter().enumerate() {
            let filters: Vec<FilterCurve> = row.iter().map(|s| s.filter.clone()).collect();
            let areas: Vec<f64> = row.iter().map(|s| s.passband.area).collect();
            let w = run.aqm.records[p].weights.clone().unwrap_or_default();
            let name = format!("m_effective@{:.1}Hz", self.shifts[p] / (2.0 * PI));
            for i in 0..points {
                let hz = f_max * i as f64 / (points - 1) as f64;
                let om = 2.0 * PI * hz;
                let a = row[0].passband.area;
                // Scaled back to filter units by the k=0 passband area.
                t.push(vec![name.clone(), num(hz), num(om), num(a * effective_filter(&w, &filters, &areas, om))]);
            }
        }
        t
    }
}

fn push_run(est: &mut Table, z: &mut Table, w: &mut Table, kind: &str, rep: Option<usize>, run: &DetectRun, psd: &PsdModel) {
    for (name, recs, zs) in [("k0", &run.k0, &run.z_k0), ("ss", &run.ss, &run.z_ss), ("m", &run.aqm.records, &run.z_aqm)] {
        for (p, (r, zv)) in recs.iter().zip(zs).enumerate() {
            push_estimate(est, name, kind, rep, r, psd);
            z.push(vec![
                name.into(),
                kind.into(),
                rep.map(|r| r.to_string()).unwrap_or_default(),
                p.to_string(),
                num(r.omega_s / (2.0 * PI)),
                num(*zv),
            ]);
        }
    }
    for (p, r) in run.aqm.records.iter().enumerate() {
        for (k, d) in r.weights.iter().flatten().enumerate() {
            w.push(vec![kind.into(), rep.map(|r| r.to_string()).unwrap_or_default(), p.to_string(), k.to_string(), num(*d)]);
        }
    }
}

pub fn zscore_table() -> Table {
    Table::new("zscores", &["estimator", "kind", "repetition", "shift_index", "frequency_hz", "z"])
}

pub fn weight_table() -> Table {
    Table::new("aqm_weights", &["kind", "repetition", "shift_index", "taper", "weight"])
}

/// Median over runs of each estimator's z-score at every shift.
pub fn median_z(runs: &[DetectRun]) -> serde_json::Value {
    let pick = |f: &dyn Fn(&DetectRun) -> &Vec<f64>| -> Vec<f64> {
        let p = runs.first().map_or(0, |r| f(r).len());
        (0..p).map(|i| median(&mut runs.iter().map(|r| f(r)[i]).collect::<Vec<_>>())).collect()
    };
    json!({
        "k0": pick(&|r| &r.z_k0),
        "ss": pick(&|r| &r.z_ss),
        "m": pick(&|r| &r.z_aqm),
    })
}

pub(super) fn run(cfg: &ScenarioConfig, psd: &PsdModel, oracle_only: bool, bundle: &mut Bundle) -> Result<()> {
    let spec = cfg.detect_line.as_ref().expect("section filled by defaults");
    if spec.shifts.hz().len() < 3 {
        return param("detection needs at least 3 shifts");
    }
    let stage = DetectStage::new(spec)?;
    let opts = spec.aqm.options();
    let f_max = spec.dpss.nyquist_hz().min(2.0 * spec.shifts.hz().last().copied().unwrap_or(1000.0)).max(1000.0);
    bundle.tables.push(psd_table(psd, f_max, 1201));
    let exp = stage.expected(psd, &opts)?;
    let (mut est, mut z, mut w) = (estimates_table(), zscore_table(), weight_table());
    push_run(&mut est, &mut z, &mut w, "expected", None, &exp, psd);
    bundle.tables.push(stage.filter_rows(&exp, f_max, 601));
    let mut summary = json!({
        "expected_z": median_z(std::slice::from_ref(&exp)),
        "expected_aqm_iterations": exp.aqm.iterations,
        "ssqm": stage.ssqm,
        "bias_cutoff_rad_per_s": stage.bias_cutoff,
    });
    let mut runs = Vec::new();
    if !oracle_only {
        let cache = SynthCache::default();
        let prepared = stage.prepare(psd, cfg.run.oversampling, cfg.run.sampling, &cache)?;
        for rep in 0..cfg.run.repetitions {
            let run = stage.monte_carlo(&prepared, repetition_seed(cfg.run.seed, rep), &opts)?;
            push_run(&mut est, &mut z, &mut w, "monte_carlo", Some(rep), &run, psd);
            runs.push(run);
        }
        let mut iters: Vec<f64> = runs.iter().map(|r| r.aqm.iterations as f64).collect();
        summary["monte_carlo_median_z"] = median_z(&runs);
        summary["monte_carlo_aqm_iterations_max"] = json!(iters.iter().copied().fold(0.0, f64::max));
        summary["monte_carlo_aqm_iterations_median"] = json!(median(&mut iters));
        summary["monte_carlo_aqm_converged_all"] = json!(runs.iter().all(|r| r.aqm.converged));
    }
    bundle.summary = summary;
    bundle.tables.push(est);
    bundle.tables.push(z);
    bundle.tables.push(w);
    Ok(())
}
