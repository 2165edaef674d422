//! Discrete prolate spheroidal sequences via the commuting tridiagonal matrix.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dtft::centered_dtft;
use crate::error::{param, Error, Result};
use crate::quad::Integrator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpssParams {
    n: usize,
    w: f64,
}

impl DpssParams {
    pub fn new(n: usize, w: f64) -> Result<Self> {
        if n == 0 {
            return param("DPSS length N must be positive");
        }
        if !(w > 0.0 && w < 0.5) {
            return param(format!("half-bandwidth W = {w} must lie in (0, 0.5)"));
        }
        if 2.0 * n as f64 * w < 1.0 - 1e-9 {
            return param(format!("2NW = {} must be at least 1", 2.0 * n as f64 * w));
        }
        Ok(DpssParams { n, w })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// Half-width of the baseband passband in rad/s for sample spacing `dt`.
    pub fn half_band(&self, dt: f64) -> f64 {
        2.0 * PI * self.w / dt
    }
}

/// K = floor(2NW). A small guard absorbs round-off in W = m/N style inputs.
pub fn shannon_number(params: &DpssParams) -> usize {
    (2.0 * params.n as f64 * params.w + 1e-9).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taper {
    pub order: usize,
    pub values: Vec<f64>,
    pub eigenvalue: f64,
}

impl Taper {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Real-valued DPSWF U_k(omega) for sample spacing `dt`.
    pub fn dpswf(&self, dt: f64, omega: f64) -> f64 {
        dpswf_theta(self, omega * dt)
    }
}

/// DPSWF in terms of the normalized angle theta = omega*dt.
pub(crate) fn dpswf_theta(taper: &Taper, theta: f64) -> f64 {
    let (re, im) = centered_dtft(&taper.values, theta);
    if taper.order % 2 == 0 {
        re
    } else {
        // eps_k = i for odd k: i * (i * im) = -im.
        -im
    }
}

pub fn dpswf_eval(taper: &Taper, dt: f64, omega: f64) -> f64 {
    taper.dpswf(dt, omega)
}

/// Entry of the sinc kernel matrix at lag n - m.
pub fn sinc_kernel(w: f64, lag: i64) -> f64 {
    if lag == 0 {
        2.0 * w
    } else {
        let l = lag as f64;
        (2.0 * PI * w * l).sin() / (PI * l)
    }
}

struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    fn dpss(params: &DpssParams) -> Self {
        let n = params.n;
        let c = (2.0 * PI * params.w).cos();
        let diag = (0..n)
            .map(|i| {
                let h = (n as f64 - 1.0 - 2.0 * i as f64) / 2.0;
                h * h * c
            })
            .collect();
        let off = (1..n).map(|i| (i * (n - i)) as f64 / 2.0).collect();
        SymTridiagonal { diag, off }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    fn bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below x (Sturm count from LDL^T).
    fn count_below(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalue with ascending index `m` by bisection.
    fn eigenvalue(&self, m: usize) -> Result<f64> {
        let (mut lo, mut hi) = self.bounds();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        let pivmin = f64::MIN_POSITIVE * scale * 1e4;
        lo -= 1e-12 * scale;
        hi += 1e-12 * scale;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) || mid == lo || mid == hi {
                return Ok(mid);
            }
            if self.count_below(mid, pivmin) > m {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::Numeric(format!("bisection for eigenvalue {m} did not converge")))
    }

    /// Eigenvector for an accurately known eigenvalue by inverse iteration.
    fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.len();
        if n == 1 {
            return Ok(vec![1.0]);
        }
        let scale = self.diag.iter().chain(&self.off).fold(1.0f64, |a, &b| a.max(b.abs()));
        let d: Vec<f64> = self.diag.iter().map(|&v| v - lambda).collect();
        let lu = TriLu::factor(&self.off, &d, &self.off, f64::EPSILON * scale);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i as f64) * 0.61).sin()).collect();
        for _ in 0..4 {
            lu.solve(&mut x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::Numeric("inverse iteration broke down".into()));
            }
            x.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(x)
    }
}

/// LU factorization of a tridiagonal matrix with partial pivoting.
struct TriLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TriLu {
    fn factor(sub: &[f64], diag: &[f64], sup: &[f64], tiny: f64) -> Self {
        let n = diag.len();
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                } else {
                    dl[i] = 0.0;
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        TriLu { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// lambda = v^T A v for the sinc kernel A, clamped into the open interval (0, 1).
fn rayleigh_eigenvalue(w: f64, v: &[f64]) -> f64 {
    let n = v.len();
    let mut lambda = 0.0;
    for lag in 0..n {
        let r: f64 = v[..n - lag].iter().zip(&v[lag..]).map(|(a, b)| a * b).sum();
        let weight = if lag == 0 { 1.0 } else { 2.0 };
        lambda += weight * sinc_kernel(w, lag as i64) * r;
    }
    lambda.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn apply_sign_convention(order: usize, v: &mut [f64]) {
    let n = v.len();
    let c = (n as f64 - 1.0) / 2.0;
    let mut p = order % 2;
    while p < 12 {
        let m: f64 = v.iter().enumerate().map(|(i, x)| x * (i as f64 - c).powi(p as i32)).sum();
        let scale = c.max(1.0).powi(p as i32);
        if m.abs() > 1e-9 * scale {
            if m < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            return;
        }
        p += 2;
    }
}

/// Tapers of orders 0..=max_order, unit norm, sign-normalized.
pub fn compute_dpss(params: &DpssParams, max_order: usize) -> Result<Vec<Taper>> {
    let n = params.n;
    if max_order >= n {
        return param(format!("max_order {max_order} must be below N = {n}"));
    }
    let t = SymTridiagonal::dpss(params);
    let mut tapers: Vec<Taper> = Vec::with_capacity(max_order + 1);
    for k in 0..=max_order {
        let mu = t.eigenvalue(n - 1 - k)?;
        let mut v = t.eigenvector(mu)?;
        // Exact persymmetry: v_n = (-1)^k v_{N-1-n}.
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let sym: Vec<f64> = (0..n).map(|i| 0.5 * (v[i] + sign * v[n - 1 - i])).collect();
        v = sym;
        for prev in tapers.iter().filter(|p| p.order % 2 == k % 2) {
            let dot: f64 = prev.values.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(&prev.values).for_each(|(x, p)| *x -= dot * p);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Numeric(format!("taper {k} collapsed during orthogonalization")));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        apply_sign_convention(k, &mut v);
        let eigenvalue = rayleigh_eigenvalue(params.w, &v);
        tapers.push(Taper { order: k, values: v, eigenvalue });
    }
    Ok(tapers)
}

/// Integral of U_k^2 over the principal domain in normalized frequency units.
///
/// U_k^2 is a trigonometric polynomial of degree N-1 in theta, so the periodic
/// trapezoid rule on an FFT grid with at least 64 points per main lobe is exact.
fn principal_energy(values: &[f64]) -> f64 {
    let n = values.len();
    let l = (64 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(l, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(l).process(&mut buf);
    buf.iter().map(|z| z.norm_sqr()).sum::<f64>() / l as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concentration {
    pub ratio: f64,
    pub in_band: f64,
    pub principal: f64,
    pub converged: bool,
}

/// Spectral concentration in B_0 by quadrature of U_k^2 (ratio is dimensionless).
pub fn concentration(taper: &Taper, params: &DpssParams) -> Concentration {
    let n = taper.len() as f64;
    let lobe = 2.0 * PI / n;
    let band = 2.0 * PI * params.w;
    let f = |th: f64| {
        let u = dpswf_theta(taper, th);
        u * u
    };
    let r = Integrator::new(lobe / 4.0).with_tol(1e-10, 0.0).integrate(&f, 0.0, band, &[]);
    // Work in theta units: the principal integral of U^2 over [-pi, pi] is 2*pi times the mean.
    let principal = 2.0 * PI * principal_energy(&taper.values);
    let in_band = 2.0 * r.value;
    Concentration { ratio: in_band / principal, in_band, principal, converged: r.converged }
}

/// Average of the first K squared DPSWFs, evaluated for sample spacing `dt`.
#[derive(Debug, Clone)]
pub struct IdealFilterApprox {
    params: DpssParams,
    tapers: Vec<Taper>,
}

impl IdealFilterApprox {
    pub fn new(params: &DpssParams) -> Result<Self> {
        let k = shannon_number(params);
        if k == 0 {
            return param("Shannon number is zero; rho_K undefined");
        }
        Ok(IdealFilterApprox { params: *params, tapers: compute_dpss(params, k - 1)? })
    }

    pub fn k(&self) -> usize {
        self.tapers.len()
    }

    pub fn tapers(&self) -> &[Taper] {
        &self.tapers
    }

    pub fn eval(&self, dt: f64, omega: f64) -> f64 {
        self.eval_theta(omega * dt)
    }

    fn eval_theta(&self, theta: f64) -> f64 {
        self.tapers.iter().map(|t| dpswf_theta(t, theta).powi(2)).sum::<f64>() / self.k() as f64
    }

    /// Integral of rho_K over the principal domain in rad/s (2*pi/dt ideally).
    pub fn principal_integral(&self, dt: f64) -> f64 {
        let mean: f64 = self.tapers.iter().map(|t| principal_energy(&t.values)).sum::<f64>() / self.k() as f64;
        2.0 * PI / dt * mean
    }

    /// L1 distance to (1/2W) 1_{|f|<W} in normalized frequency f = omega*dt/(2*pi).
    pub fn l1_to_ideal(&self) -> f64 {
        let n = self.params.n as f64;
        let w = self.params.w;
        let height = 1.0 / (2.0 * w);
        // rho in f units equals rho in theta units since the map is theta = 2*pi*f
        // and each U_k^2 integrates to one over a unit interval of f.
        let g = |f: f64| (self.eval_theta(2.0 * PI * f) - height).abs();
        let h = |f: f64| self.eval_theta(2.0 * PI * f);
        let quad = Integrator { panel_width: 1.0 / (4.0 * n), rel_tol: 1e-7, abs_tol: 0.0, max_doublings: 3 };
        let band_abs = 2.0 * quad.integrate(&g, 0.0, w, &[]).value;
        let band_mass = 2.0 * quad.integrate(&h, 0.0, w, &[]).value;
        let total: f64 = self.tapers.iter().map(|t| principal_energy(&t.values)).sum::<f64>() / self.k() as f64;
        band_abs + (total - band_mass)
    }
}

/// rho_K(omega) = (1/K) sum_{k<K} U_k(omega)^2. Recomputes the tapers on each call;
/// use [`IdealFilterApprox`] for repeated evaluation.
pub fn rho_k(params: &DpssParams, dt: f64, omega: f64) -> Result<f64> {
    Ok(IdealFilterApprox::new(params)?.eval(dt, omega))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shannon_numbers() {
        for &(n, w, k) in &[(200, 0.008, 3), (400, 0.008, 6), (800, 0.008, 12), (1600, 0.008, 25), (500, 1.0 / 500.0, 2)] {
            assert_eq!(shannon_number(&DpssParams::new(n, w).unwrap()), k);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DpssParams::new(10, 0.6).is_err());
        assert!(DpssParams::new(10, 0.01).is_err());
        let p = DpssParams::new(16, 0.1).unwrap();
        assert!(compute_dpss(&p, 16).is_err());
    }

    #[test]
    fn orthonormal_and_parity() {
        let p = DpssParams::new(500, 7.0 / 500.0).unwrap();
        let t = compute_dpss(&p, 13).unwrap();
        for a in &t {
            for b in &t {
                let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
                let want = if a.order == b.order { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "k={} l={} dot={dot}", a.order, b.order);
            }
            let n = a.len();
            let s = if a.order % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..n {
                assert_eq!(a.values[i], s * a.values[n - 1 - i]);
            }
        }
    }

    #[test]
    fn sign_changes_match_order() {
        let p = DpssParams::new(500, 4.0 / 500.0).unwrap();
        for t in compute_dpss(&p, 3).unwrap() {
            let changes = t.values.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
            assert_eq!(changes, t.order);
        }
    }

    #[test]
    fn eigenvalues_decrease() {
        let p = DpssParams::new(100, 0.05).unwrap();
        let t = compute_dpss(&p, 12).unwrap();
        for w in t.windows(2) {
            assert!(w[0].eigenvalue > w[1].eigenvalue);
        }
        assert!(t.iter().all(|x| x.eigenvalue > 0.0 && x.eigenvalue < 1.0));
    }

    #[test]
    fn zero_frequency_dpswf_is_sum() {
        let p = DpssParams::new(64, 0.1).unwrap();
        let t = &compute_dpss(&p, 0).unwrap()[0];
        let s: f64 = t.values.iter().sum();
        assert!(s > 0.0);
        assert!((t.dpswf(1e-3, 0.0) - s).abs() < 1e-12);
    }

    #[test]
    fn dpswf_parity_in_omega() {
        let p = DpssParams::new(80, 0.05).unwrap();
        for t in compute_dpss(&p, 3).unwrap() {
            for &om in &[0.1, 0.7, 2.0] {
                let s = if t.order % 2 == 0 { 1.0 } else { -1.0 };
                assert!((t.dpswf(1.0, -om) - s * t.dpswf(1.0, om)).abs() < 1e-12);
            }
        }
    }
}
