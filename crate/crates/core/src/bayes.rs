//! Gaussian refinement of a discretized PSD from passband estimates.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{param, Error, Result};
use crate::filter::{segment_areas, FilterCurve, PassbandSpec};
use crate::psd::PsdModel;
use crate::quad::Integrator;

/// Q contiguous segments [q dw, (q+1) dw) covering [0, Q dw).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedSpectrum {
    pub segments: usize,
    pub width: f64,
}

impl DiscretizedSpectrum {
    pub fn new(segments: usize, width: f64) -> Result<Self> {
        if segments == 0 || !(width > 0.0) {
            return param("discretization needs Q >= 1 and a positive segment width");
        }
        Ok(DiscretizedSpectrum { segments, width })
    }

    pub fn omega_max(&self) -> f64 {
        self.segments as f64 * self.width
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.segments).map(|q| (q as f64 + 0.5) * self.width).collect()
    }

    pub fn bounds(&self, q: usize) -> (f64, f64) {
        (q as f64 * self.width, (q + 1) as f64 * self.width)
    }

    /// Segment index containing omega, if inside the range.
    pub fn index_of(&self, omega: f64) -> Option<usize> {
        if omega < 0.0 || omega >= self.omega_max() {
            return None;
        }
        Some(((omega / self.width) as usize).min(self.segments - 1))
    }

    pub fn sample_centers(&self, psd: &PsdModel) -> Vec<f64> {
        self.centers().iter().map(|&w| psd.eval(w)).collect()
    }

    /// Average of the PSD over each segment.
    pub fn segment_averages(&self, psd: &PsdModel) -> Vec<f64> {
        let q = Integrator::new((psd.feature_width() / 4.0).min(self.width)).with_tol(1e-10, 0.0);
        let breaks = psd.breakpoints();
        (0..self.segments)
            .map(|j| {
                let (lo, hi) = self.bounds(j);
                q.integrate(&|w| psd.eval(w), lo, hi, &breaks).value / self.width
            })
            .collect()
    }

    /// Filter matrix F_pq = A_q / A for passband estimates.
    pub fn filter_matrix(&self, filters: &[FilterCurve], passbands: &[PassbandSpec]) -> Result<Vec<Vec<f64>>> {
        if filters.len() != passbands.len() {
            return param("need one passband per filter");
        }
        Ok(filters
            .iter()
            .zip(passbands)
            .map(|(f, pb)| segment_areas(f, self.width, self.segments).into_iter().map(|a| a / pb.area).collect())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief {
    pub mean: Vec<f64>,
    /// Row-major Q x Q covariance.
    pub covariance: Vec<Vec<f64>>,
    pub lambda: f64,
    pub condition_number: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl GaussianBelief {
    pub fn new(mean: Vec<f64>, cov: &DMatrix<f64>, lambda: f64) -> Result<Self> {
        let q = mean.len();
        if cov.nrows() != q || cov.ncols() != q {
            return param("covariance shape does not match the mean");
        }
        Ok(GaussianBelief {
            mean,
            covariance: rows(cov),
            lambda,
            condition_number: condition_number(cov),
            flags: Vec::new(),
        })
    }

    /// Sigma = sigma0^2 I around the given mean.
    pub fn diffuse(mean: Vec<f64>, sigma0: f64) -> Result<Self> {
        if !(sigma0 > 0.0) {
            return param("diffuse prior needs sigma0 > 0");
        }
        let q = mean.len();
        Self::new(mean, &(DMatrix::identity(q, q) * (sigma0 * sigma0)), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn cov(&self) -> DMatrix<f64> {
        let q = self.dim();
        DMatrix::from_fn(q, q, |i, j| self.covariance[i][j])
    }

    pub fn std_devs(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.covariance[i][i].max(0.0).sqrt()).collect()
    }

    /// Marginal central credible intervals at the given level.
    pub fn credible_intervals(&self, level: f64) -> Result<Vec<(f64, f64)>> {
        if !(level > 0.0 && level < 1.0) {
            return param("credible level must lie in (0, 1)");
        }
        let z = Normal::standard().inverse_cdf(0.5 + 0.5 * level);
        Ok(self.mean.iter().zip(self.std_devs()).map(|(m, s)| (m - z * s, m + z * s)).collect())
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Ratio of extreme eigenvalues of a symmetric matrix; infinite when not positive definite.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let e = SymmetricEigen::new(symmetrize(m)).eigenvalues;
    let (lo, hi) = (e.min(), e.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// True when a - b is positive semidefinite up to tol relative to the scale of a.
pub fn loewner_dominates(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    let scale = SymmetricEigen::new(symmetrize(a)).eigenvalues.amax().max(f64::MIN_POSITIVE);
    SymmetricEigen::new(symmetrize(&(a - b))).eigenvalues.min() >= -tol * scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaRule {
    /// scale * trace(Sigma0) / Q.
    TraceScaled { scale: f64 },
    /// (max |mu0|)^2, a prior standard deviation on the order of the largest mean value.
    PeakSquared,
    Fixed { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorOptions {
    pub lambda: LambdaRule,
    pub condition_threshold: f64,
}

impl Default for PriorOptions {
    fn default() -> Self {
        PriorOptions { lambda: LambdaRule::TraceScaled { scale: 1e-6 }, condition_threshold: 1e10 }
    }
}

/// Prior from an interpolated estimate: mu0 = interpolated values and
/// Sigma0 = W diag(var) W^T + lambda I, with W the Q x P normalized information weights.
pub fn build_prior(mean: &[f64], weights: &[Vec<f64>], variances: &[f64], opts: &PriorOptions) -> Result<GaussianBelief> {
    let q = mean.len();
    if q == 0 || weights.len() != q || weights.iter().any(|r| r.len() != variances.len()) {
        return param("prior dimensions are inconsistent");
    }
    if variances.iter().any(|v| !(*v >= 0.0)) {
        return param("estimate variances must be non-negative");
    }
    let w = DMatrix::from_fn(q, variances.len(), |i, j| weights[i][j]);
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(variances));
    let sigma0 = symmetrize(&(&w * d * w.transpose()));
    let mut lambda = match opts.lambda {
        LambdaRule::TraceScaled { scale } => scale * sigma0.trace() / q as f64,
        LambdaRule::PeakSquared => mean.iter().fold(0.0f64, |m, x| m.max(x.abs())).powi(2),
        LambdaRule::Fixed { value } => value,
    };
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return param(format!("regularization lambda {lambda} is invalid"));
    }
    let mut flags = Vec::new();
    let mut reg = &sigma0 + DMatrix::identity(q, q) * lambda;
    let mut cond = condition_number(&reg);
    if !(cond < opts.condition_threshold) {
        if lambda == 0.0 {
            lambda = f64::MIN_POSITIVE.max(1e-12 * sigma0.trace().abs() / q as f64);
        }
        for _ in 0..200 {
            reg = &sigma0 + DMatrix::identity(q, q) * lambda;
            cond = condition_number(&reg);
            if cond < opts.condition_threshold {
                break;
            }
            lambda *= 10.0;
        }
        if !(cond < opts.condition_threshold) {
            return Err(Error::Numeric(format!("prior covariance stays ill-conditioned (cond {cond:e})")));
        }
        flags.push("lambda_increased".to_string());
    }
    let mut b = GaussianBelief::new(mean.to_vec(), &reg, lambda)?;
    b.condition_number = cond;
    b.flags = flags;
    Ok(b)
}

/// Conjugate update with data d ~ N(F S, diag(data_var)). Returns the posterior mean and covariance.
pub fn posterior(prior: &GaussianBelief, data: &[f64], f: &[Vec<f64>], data_var: &[f64]) -> Result<GaussianBelief> {
    let q = prior.dim();
    let p = data.len();
    if f.len() != p || data_var.len() != p || f.iter().any(|r| r.len() != q) {
        return param("posterior dimensions are inconsistent: F must be P x Q");
    }
    if data_var.iter().any(|v| !(*v > 0.0)) {
        return param("data variances must be positive");
    }
    if p == 0 {
        return Ok(prior.clone());
    }
    let s0 = prior.cov();
    let mu0 = DVector::from_column_slice(&prior.mean);
    let fm = DMatrix::from_fn(p, q, |i, j| f[i][j]);
    let d = DVector::from_column_slice(data);
    let prior_cond = condition_number(&s0);
    let (mean, cov) = if prior_cond < 1e6 {
        // Information form: well suited to flat priors.
        let s0_inv = Cholesky::new(s0.clone())
            .ok_or_else(|| Error::Numeric(format!("prior covariance not positive definite (cond {prior_cond:e})")))?
            .inverse();
        let rinv = DMatrix::from_diagonal(&DVector::from_iterator(p, data_var.iter().map(|v| 1.0 / v)));
        let info = symmetrize(&(&s0_inv + fm.transpose() * &rinv * &fm));
        let ch = Cholesky::new(info.clone()).ok_or_else(|| {
            Error::Numeric(format!("posterior information matrix not positive definite (cond {:e})", condition_number(&info)))
        })?;
        let rhs = &s0_inv * &mu0 + fm.transpose() * &rinv * &d;
        (ch.solve(&rhs), ch.inverse())
    } else {
        // Gain form with the Joseph update for strongly correlated priors.
        let r = DMatrix::from_diagonal(&DVector::from_column_slice(data_var));
        let innov = symmetrize(&(&fm * &s0 * fm.transpose() + &r));
        let ch = Cholesky::new(innov.clone()).ok_or_else(|| {
            Error::Numeric(format!("innovation covariance not positive definite (cond {:e})", condition_number(&innov)))
        })?;
        let gain = ch.solve(&(&fm * &s0)).transpose();
        let mean = &mu0 + &gain * (&d - &fm * &mu0);
        let ikf = DMatrix::identity(q, q) - &gain * &fm;
        let cov = &ikf * &s0 * ikf.transpose() + &gain * r * gain.transpose();
        (mean, cov)
    };
    let cov = symmetrize(&cov);
    let mut out = GaussianBelief::new(mean.iter().copied().collect(), &cov, prior.lambda)?;
    if out.mean.iter().any(|m| *m < 0.0) {
        out.flags.push("negative_mean".to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discretization_geometry() {
        let d = DiscretizedSpectrum::new(4, 2.0).unwrap();
        assert_eq!(d.omega_max(), 8.0);
        assert_eq!(d.centers(), vec![1.0, 3.0, 5.0, 7.0]);
        assert_eq!(d.index_of(7.99), Some(3));
        assert_eq!(d.index_of(8.0), None);
    }

    #[test]
    fn zero_lambda_diagonal_prior_passes_through() {
        let w = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let opts = PriorOptions { lambda: LambdaRule::Fixed { value: 0.0 }, ..Default::default() };
        let b = build_prior(&[1.0, 2.0], &w, &[0.5, 0.25], &opts).unwrap();
        assert_eq!(b.mean, vec![1.0, 2.0]);
        assert_eq!(b.covariance, vec![vec![0.5, 0.0], vec![0.0, 0.25]]);
        assert!(b.flags.is_empty());
    }

    #[test]
    fn singular_prior_gets_regularized() {
        let w = vec![vec![1.0], vec![1.0]];
        let opts = PriorOptions { lambda: LambdaRule::Fixed { value: 0.0 }, ..Default::default() };
        let b = build_prior(&[1.0, 1.0], &w, &[1.0], &opts).unwrap();
        assert!(b.lambda > 0.0 && b.condition_number < 1e10);
        assert_eq!(b.flags, vec!["lambda_increased".to_string()]);
    }

    #[test]
    fn diffuse_prior_inverts_square_system() {
        let prior = GaussianBelief::diffuse(vec![0.0, 0.0], 1e6).unwrap();
        let f = vec![vec![2.0, 1.0], vec![0.0, 1.0]];
        let post = posterior(&prior, &[5.0, 1.0], &f, &[1e-6, 1e-6]).unwrap();
        assert!((post.mean[0] - 2.0).abs() < 1e-6 && (post.mean[1] - 1.0).abs() < 1e-6);
        assert!(loewner_dominates(&prior.cov(), &post.cov(), 1e-12));
    }

    #[test]
    fn empty_data_is_identity() {
        let prior = GaussianBelief::diffuse(vec![1.0, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(posterior(&prior, &[], &[], &[]).unwrap(), prior);
    }
}
