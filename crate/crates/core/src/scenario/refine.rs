//! Bayesian refinement: AQM detection data form the prior, narrow k=0 filters the likelihood.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{BayesRefineSpec, ScenarioConfig};
use super::detect::{DetectRun, DetectStage};
use super::output::{num, Bundle, Table};
use super::protocol::{prepare_all, McOptions, Setting, SynthCache};
use super::{estimates_table, median, psd_table, push_estimate, repetition_seed};
use crate::bayes::{build_prior, posterior, DiscretizedSpectrum, GaussianBelief, PriorOptions};
use crate::dpss::{compute_dpss, DpssParams};
use crate::error::Result;
use crate::estimate::{effective_segment_areas, fisher_information, interpolated_estimate, EstimateRecord, InterpolatedEstimate};
use crate::filter::{segment_areas, FilterCurve, PassbandSpec};
use crate::psd::PsdModel;
use crate::rng::stream_id;

/// Seed-independent geometry of the refinement.
pub struct RefineStage {
    pub spec: BayesRefineSpec,
    pub detect: DetectStage,
    pub grid: DiscretizedSpectrum,
    /// seg[p][k][q]: segment areas of AQM channel (p, k).
    pub seg: Vec<Vec<Vec<f64>>>,
    pub narrow: Vec<Setting>,
    /// P x Q narrow filter matrix A_q / A.
    pub f: Vec<Vec<f64>>,
    /// Segments whose centres lie in the focus band.
    pub focus: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineResult {
    pub interpolated: InterpolatedEstimate,
    pub prior: GaussianBelief,
    pub posterior: GaussianBelief,
    pub narrow: Vec<EstimateRecord>,
    pub peak_index: usize,
    pub peak_height: f64,
    pub true_peak_index: usize,
    pub true_peak_height: f64,
    pub prior_ci_width: f64,
    pub posterior_ci_width: f64,
}

fn argmax(xs: &[f64], idx: &[usize]) -> usize {
    *idx.iter().max_by(|a, b| xs[**a].total_cmp(&xs[**b])).expect("focus band is non-empty")
}

impl RefineStage {
    pub fn new(spec: &BayesRefineSpec) -> Result<Self> {
        let detect = DetectStage::new(&spec.detect)?;
        let grid = DiscretizedSpectrum::new(spec.segments, 2.0 * PI * spec.segment_width_hz)?;
        let seg = detect
            .aqm
            .par_iter()
            .map(|row| row.par_iter().map(|s| segment_areas(&s.filter, grid.width, grid.segments)).collect())
            .collect();
        let nd = &spec.narrow.dpss;
        let params = DpssParams::new(nd.n, nd.w())?;
        let taper = compute_dpss(&params, 0)?.remove(0);
        let narrow = spec
            .narrow
            .shifts
            .omegas()
            .par_iter()
            .map(|&ws| Setting::dpss(&taper, &params, nd.dt_s, ws, spec.detect.shift_mode, spec.detect.power_target))
            .collect::<Result<Vec<_>>>()?;
        let filters: Vec<FilterCurve> = narrow.iter().map(|s| s.filter.clone()).collect();
        let pbs: Vec<PassbandSpec> = narrow.iter().map(|s| s.passband).collect();
        let f = grid.filter_matrix(&filters, &pbs)?;
        let (lo, hi) = (2.0 * PI * spec.focus_hz[0], 2.0 * PI * spec.focus_hz[1]);
        let focus: Vec<usize> = grid.centers().iter().enumerate().filter(|(_, c)| **c >= lo && **c <= hi).map(|(q, _)| q).collect();
        if focus.is_empty() {
            return crate::error::param("focus band contains no segment centre");
        }
        Ok(RefineStage { spec: spec.clone(), detect, grid, seg, narrow, f, focus })
    }

    /// Fisher-weighted interpolation of the AQM estimates onto the segment grid.
    pub fn interpolate(&self, run: &DetectRun) -> Result<InterpolatedEstimate> {
        let recs = &run.aqm.records;
        let info = recs
            .iter()
            .enumerate()
            .map(|(p, r)| {
                let areas: Vec<f64> = run.channels[p].iter().map(|e| e.area).collect();
                let rq = effective_segment_areas(r.weights.as_deref().unwrap_or(&[]), &self.seg[p], &areas);
                fisher_information(&rq, r.variance)
            })
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = recs.iter().map(|r| r.value).collect();
        let vars: Vec<f64> = recs.iter().map(|r| r.variance).collect();
        interpolated_estimate(&values, &vars, &info)
    }

    pub fn refine(&self, run: &DetectRun, narrow: Vec<EstimateRecord>, truth: &[f64]) -> Result<RefineResult> {
        let interp = self.interpolate(run)?;
        let vars: Vec<f64> = run.aqm.records.iter().map(|r| r.variance).collect();
        let opts = PriorOptions { lambda: self.spec.lambda, condition_threshold: self.spec.condition_threshold };
        let prior = build_prior(&interp.values, &interp.weights, &vars, &opts)?;
        let data: Vec<f64> = narrow.iter().map(|r| r.value).collect();
        let dvar: Vec<f64> = narrow.iter().map(|r| r.variance).collect();
        let post = posterior(&prior, &data, &self.f, &dvar)?;
        let width = |b: &GaussianBelief| -> Result<f64> {
            let ci = b.credible_intervals(self.spec.credible_level)?;
            Ok(self.focus.iter().map(|&q| ci[q].1 - ci[q].0).sum::<f64>() / self.focus.len() as f64)
        };
        let pk = argmax(&post.mean, &self.focus);
        let tk = argmax(truth, &self.focus);
        Ok(RefineResult {
            prior_ci_width: width(&prior)?,
            posterior_ci_width: width(&post)?,
            peak_index: pk,
            peak_height: post.mean[pk],
            true_peak_index: tk,
            true_peak_height: truth[tk],
            interpolated: interp,
            prior,
            posterior: post,
            narrow,
        })
    }
}

fn posterior_table() -> Table {
    Table::new(
        "posterior",
        &[
            "kind",
            "repetition",
            "segment",
            "frequency_lo_hz",
            "frequency_hi_hz",
            "true_segment_average",
            "interpolated",
            "prior_mean",
            "prior_ci_low",
            "prior_ci_high",
            "posterior_mean",
            "posterior_ci_low",
            "posterior_ci_high",
        ],
    )
}

fn push_posterior(t: &mut Table, st: &RefineStage, kind: &str, rep: Option<usize>, r: &RefineResult, truth: &[f64]) -> Result<()> {
    let pci = r.prior.credible_intervals(st.spec.credible_level)?;
    let qci = r.posterior.credible_intervals(st.spec.credible_level)?;
    for q in 0..st.grid.segments {
        let (lo, hi) = st.grid.bounds(q);
        t.push(vec![
            kind.into(),
            rep.map(|r| r.to_string()).unwrap_or_default(),
            q.to_string(),
            num(lo / (2.0 * PI)),
            num(hi / (2.0 * PI)),
            num(truth[q]),
            num(r.interpolated.values[q]),
            num(r.prior.mean[q]),
            num(pci[q].0),
            num(pci[q].1),
            num(r.posterior.mean[q]),
            num(qci[q].0),
            num(qci[q].1),
        ]);
    }
    Ok(())
}

fn stats(st: &RefineStage, r: &RefineResult) -> serde_json::Value {
    let c = st.grid.centers();
    json!({
        "peak_hz": c[r.peak_index] / (2.0 * PI),
        "true_peak_hz": c[r.true_peak_index] / (2.0 * PI),
        "peak_segment_offset": r.peak_index as i64 - r.true_peak_index as i64,
        "peak_height": r.peak_height,
        "true_peak_height": r.true_peak_height,
        "peak_height_ratio": r.peak_height / r.true_peak_height,
        "prior_ci_width": r.prior_ci_width,
        "posterior_ci_width": r.posterior_ci_width,
        "lambda": r.prior.lambda,
        "prior_condition_number": r.prior.condition_number,
        "prior_flags": r.prior.flags,
        "posterior_flags": r.posterior.flags,
        "unestimable_segments": r.interpolated.unestimable,
    })
}

pub(super) fn run(cfg: &ScenarioConfig, psd: &PsdModel, oracle_only: bool, bundle: &mut Bundle) -> Result<()> {
    let spec = cfg.bayes_refine.as_ref().expect("section filled by defaults");
    let st = RefineStage::new(spec)?;
    let truth = st.grid.segment_averages(psd);
    bundle.tables.push(psd_table(psd, st.grid.omega_max() / (2.0 * PI), 1201));
    let aqm_opts = spec.detect.aqm.options();
    let mn = spec.narrow.shots;

    let exp_detect = st.detect.expected(psd, &aqm_opts)?;
    let exp_narrow = st.narrow.par_iter().map(|s| s.expected_estimate(psd, mn)).collect::<Result<Vec<_>>>()?;
    let exp = st.refine(&exp_detect, exp_narrow, &truth)?;
    let (mut est, mut post) = (estimates_table(), posterior_table());
    for r in &exp_detect.aqm.records {
        push_estimate(&mut est, "m", "expected", None, r, psd);
    }
    for r in &exp.narrow {
        push_estimate(&mut est, "narrow_k0", "expected", None, r, psd);
    }
    push_posterior(&mut post, &st, "expected", None, &exp, &truth)?;
    bundle.json.push(("posterior_expected".into(), serde_json::to_value(&exp.posterior)?));
    let mut summary = json!({ "expected": stats(&st, &exp), "segment_width_hz": spec.segment_width_hz });

    if !oracle_only {
        let cache = SynthCache::default();
        let prepared = st.detect.prepare(psd, cfg.run.oversampling, cfg.run.sampling, &cache)?;
        let opts = McOptions { shots: mn, oversampling: cfg.run.oversampling, mode: cfg.run.sampling };
        let pn = prepare_all(&st.narrow, psd, &opts, stream_id("narrow"), &cache)?;
        let mut results = Vec::new();
        for rep in 0..cfg.run.repetitions {
            let seed = repetition_seed(cfg.run.seed, rep);
            let det = st.detect.monte_carlo(&prepared, seed, &aqm_opts)?;
            let nar = pn.par_iter().map(|p| p.estimate(seed)).collect::<Result<Vec<_>>>()?;
            let res = st.refine(&det, nar, &truth)?;
            for r in &det.aqm.records {
                push_estimate(&mut est, "m", "monte_carlo", Some(rep), r, psd);
            }
            for r in &res.narrow {
                push_estimate(&mut est, "narrow_k0", "monte_carlo", Some(rep), r, psd);
            }
            push_posterior(&mut post, &st, "monte_carlo", Some(rep), &res, &truth)?;
            results.push(stats(&st, &res));
        }
        let col = |k: &str| -> Vec<f64> { results.iter().map(|r| r[k].as_f64().unwrap_or(f64::NAN)).collect() };
        summary["monte_carlo"] = json!({
            "median_peak_height_ratio": median(&mut col("peak_height_ratio")),
            "median_abs_peak_segment_offset": median(&mut col("peak_segment_offset").iter().map(|x| x.abs()).collect::<Vec<_>>()),
            "median_prior_ci_width": median(&mut col("prior_ci_width")),
            "median_posterior_ci_width": median(&mut col("posterior_ci_width")),
            "runs": results,
        });
    }
    bundle.summary = summary;
    bundle.tables.push(est);
    bundle.tables.push(post);
    Ok(())
}
