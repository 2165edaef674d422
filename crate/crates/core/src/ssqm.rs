//! Single-setting multitaper: optimize c so that |sum_k c_k eps_k U_k|^2 is flat on B_0.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dpss::{dpswf_theta, shannon_number, DpssParams, Taper};
use crate::error::{param, Result};
use crate::rng::sub_rng;

pub const SSQM_GRID: usize = 512;
pub const SSQM_RANDOM_STARTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsqmCoefficients {
    pub coeffs: Vec<f64>,
    /// Integrated squared deviation from 1/(2W) over B_0 (normalized frequency units).
    pub flatness_error: f64,
    pub start_error: f64,
    /// Set when no start improved on the uniform vector.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsqmOptions {
    pub out_of_band_weight: f64,
    pub max_iter: usize,
}

impl Default for SsqmOptions {
    fn default() -> Self {
        SsqmOptions { out_of_band_weight: 0.0, max_iter: 3000 }
    }
}

struct Cost<'a> {
    /// u[k][j]: DPSWF k at grid node j.
    u: Vec<Vec<f64>>,
    parity: Vec<bool>,
    h: f64,
    target: f64,
    gram: Vec<Vec<f64>>,
    weight: f64,
    _tapers: &'a [Taper],
}

impl Cost<'_> {
    fn parts(&self, c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.u[0].len();
        let mut e = vec![0.0; m];
        let mut o = vec![0.0; m];
        for (k, row) in self.u.iter().enumerate() {
            let dst = if self.parity[k] { &mut o } else { &mut e };
            for (d, v) in dst.iter_mut().zip(row) {
                *d += c[k] * v;
            }
        }
        (e, o)
    }

    fn in_band_energy(&self, c: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..c.len() {
            for j in 0..c.len() {
                s += c[i] * c[j] * self.gram[i][j];
            }
        }
        s
    }

    fn value(&self, c: &[f64]) -> f64 {
        let (e, o) = self.parts(c);
        let flat: f64 = e.iter().zip(&o).map(|(a, b)| (self.target - a * a - b * b).powi(2)).sum::<f64>() * self.h;
        flat + self.weight * (1.0 - self.in_band_energy(c))
    }

    fn flatness(&self, c: &[f64]) -> f64 {
        let (e, o) = self.parts(c);
        e.iter().zip(&o).map(|(a, b)| (self.target - a * a - b * b).powi(2)).sum::<f64>() * self.h
    }

    fn gradient(&self, c: &[f64]) -> Vec<f64> {
        let (e, o) = self.parts(c);
        let r: Vec<f64> = e.iter().zip(&o).map(|(a, b)| self.target - a * a - b * b).collect();
        let mut g = vec![0.0; c.len()];
        for (k, row) in self.u.iter().enumerate() {
            let part = if self.parity[k] { &o } else { &e };
            let s: f64 = row.iter().zip(part).zip(&r).map(|((u, p), rr)| rr * p * u).sum();
            g[k] = -4.0 * self.h * s;
            if self.weight != 0.0 {
                let gc: f64 = (0..c.len()).map(|l| self.gram[k][l] * c[l]).sum();
                g[k] -= 2.0 * self.weight * gc;
            }
        }
        g
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

fn descend(cost: &Cost, start: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let mut c = start.to_vec();
    normalize(&mut c);
    let mut f = cost.value(&c);
    let mut step = 1e-3;
    for _ in 0..max_iter {
        let g = cost.gradient(&c);
        let gc: f64 = g.iter().zip(&c).map(|(a, b)| a * b).sum();
        let tangent: Vec<f64> = g.iter().zip(&c).map(|(a, b)| a - gc * b).collect();
        let tn = tangent.iter().map(|x| x * x).sum::<f64>().sqrt();
        if tn < 1e-14 {
            break;
        }
        let mut accepted = false;
        step *= 2.0;
        while step * tn > 1e-15 {
            let mut trial: Vec<f64> = c.iter().zip(&tangent).map(|(a, t)| a - step * t).collect();
            normalize(&mut trial);
            let ft = cost.value(&trial);
            if ft < f - 1e-4 * step * tn * tn {
                let done = (f - ft) <= 1e-13 * f.abs().max(1e-300);
                c = trial;
                f = ft;
                accepted = true;
                if done {
                    return (c, f);
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (c, f)
}

/// Multi-start projected descent over unit-norm coefficient vectors.
pub fn ssqm_coefficients(params: &DpssParams, tapers: &[Taper], seed: u64, opts: &SsqmOptions) -> Result<SsqmCoefficients> {
    let k = tapers.len();
    if k == 0 {
        return param("SSQM needs at least one taper");
    }
    if k > shannon_number(params) + 2 {
        return param(format!("SSQM with {k} tapers exceeds Shannon number + 2 = {}", shannon_number(params) + 2));
    }
    let w = params.w();
    let h = 2.0 * w / SSQM_GRID as f64;
    let grid: Vec<f64> = (0..SSQM_GRID).map(|j| -w + (j as f64 + 0.5) * h).collect();
    let u: Vec<Vec<f64>> = tapers.iter().map(|t| grid.iter().map(|f| dpswf_theta(t, 2.0 * PI * f)).collect()).collect();
    let parity: Vec<bool> = tapers.iter().map(|t| t.order % 2 == 1).collect();
    let mut gram = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if parity[i] == parity[j] {
                gram[i][j] = u[i].iter().zip(&u[j]).map(|(a, b)| a * b).sum::<f64>() * h;
            }
        }
    }
    let cost = Cost { u, parity, h, target: 1.0 / (2.0 * w), gram, weight: opts.out_of_band_weight, _tapers: tapers };

    let uniform = vec![1.0 / (k as f64).sqrt(); k];
    let start_value = cost.value(&uniform);
    let mut best = descend(&cost, &uniform, opts.max_iter);
    let mut rng = sub_rng(seed, 0x55_51_4d, 0);
    for _ in 0..SSQM_RANDOM_STARTS {
        let s: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let cand = descend(&cost, &s, opts.max_iter);
        if cand.1 < best.1 {
            best = cand;
        }
    }
    let fallback = !(best.1 <= start_value) || best.0.iter().any(|x| !x.is_finite());
    let coeffs = if fallback { uniform.clone() } else { best.0 };
    Ok(SsqmCoefficients {
        flatness_error: cost.flatness(&coeffs),
        start_error: cost.flatness(&uniform),
        coeffs,
        fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpss::compute_dpss;

    #[test]
    fn improves_on_uniform_start() {
        let p = DpssParams::new(200, 0.02).unwrap();
        let t = compute_dpss(&p, 7).unwrap();
        let r = ssqm_coefficients(&p, &t, 3, &SsqmOptions::default()).unwrap();
        assert!(!r.fallback);
        assert!(r.flatness_error <= r.start_error);
        let n2: f64 = r.coeffs.iter().map(|x| x * x).sum();
        assert!((n2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_many_tapers() {
        let p = DpssParams::new(200, 0.01).unwrap();
        let t = compute_dpss(&p, 8).unwrap();
        assert!(ssqm_coefficients(&p, &t, 0, &SsqmOptions::default()).is_err());
    }
}
