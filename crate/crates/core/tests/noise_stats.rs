//! Statistics of synthesized noise and simulated survival probabilities.

use std::f64::consts::PI;

use slepian_qns::psd::PsdModel;
use slepian_qns::sim::{expected_signal, ExperimentConfig, PreparedExperiment, SamplingMode};
use slepian_qns::synth::NoiseSynthesizer;
use slepian_qns::waveform::{normalize_power, Waveform};
use statrs::distribution::{ContinuousCDF, Normal};

/// A^2 against a fully specified N(0, sigma^2).
fn anderson_darling(xs: &[f64], sigma: f64) -> f64 {
    let n = xs.len();
    let mut z: Vec<f64> = xs.iter().map(|x| x / sigma).collect();
    z.sort_by(|a, b| a.total_cmp(b));
    let nd = Normal::standard();
    let s: f64 = (0..n)
        .map(|i| {
            let fi = nd.cdf(z[i]).clamp(1e-300, 1.0 - 1e-16);
            let fj = nd.cdf(z[n - 1 - i]).clamp(1e-300, 1.0 - 1e-16);
            (2 * i + 1) as f64 * (fi.ln() + (1.0 - fj).ln())
        })
        .sum();
    -(n as f64) - s / n as f64
}

fn lorentzian() -> (PsdModel, f64, f64) {
    let (a, w) = (4e-4, 2.0 * PI * 2e3);
    (PsdModel::lorentzian(a, 0.0, w), a, w)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn lag_covariance_matches_band_limited_integral() {
    // Sampling at dt keeps C(tau) = (1/pi) int_0^{pi/dt} S(x) cos(x tau) dx.
    let (m, a, w) = lorentzian();
    let dt = 2e-6;
    let wn = PI / dt;
    let s = NoiseSynthesizer::with_samples(&m, dt, 1000).unwrap();
    let c0 = a * w / PI * (wn / w).atan();
    for lag in [0usize, 1, 10, 40, 100] {
        let tau = lag as f64 * dt;
        let want = simpson(|x| m.eval(x) * (x * tau).cos(), 0.0, wn, 200_000) / PI;
        let got = s.lag_covariance(lag);
        assert!((got - want).abs() < 2e-3 * c0, "lag {lag}: {got} vs {want}");
    }
    // Without the band limit the covariance is (A w / 2) e^{-w tau}; the gap at
    // lag 0 is the variance above omega_N.
    let full = 0.5 * a * w;
    assert!(((full - s.lag_covariance(0)) / full - (2.0 / PI) * (w / wn).atan()).abs() < 1e-3);
}

#[test]
fn empirical_covariance_and_normality() {
    let (m, _, _) = lorentzian();
    let dt = 2e-6;
    let s = NoiseSynthesizer::with_samples(&m, dt, 256).unwrap();
    let reps = 4000;
    let trajs: Vec<Vec<f64>> = (0..reps).map(|i| s.trajectory(17, 3, i as u64).samples).collect();
    for lag in [0usize, 5, 50] {
        let c: f64 = trajs.iter().map(|t| t[100] * t[100 + lag]).sum::<f64>() / reps as f64;
        let c0 = s.lag_covariance(0);
        // Standard error of a product moment is at most sqrt(2) C(0) / sqrt(reps).
        let se = 2f64.sqrt() * c0 / (reps as f64).sqrt();
        assert!((c - s.lag_covariance(lag)).abs() < 4.0 * se, "lag {lag}: {c} vs {}", s.lag_covariance(lag));
    }
    let xs: Vec<f64> = trajs.iter().map(|t| t[37]).collect();
    let a2 = anderson_darling(&xs, s.lag_covariance(0).sqrt());
    // 1% critical value for a fully specified normal.
    assert!(a2 < 3.857, "A^2 = {a2}");
}

#[test]
fn stationary_mean_and_variance_along_time() {
    let (m, _, _) = lorentzian();
    let s = NoiseSynthesizer::with_samples(&m, 2e-6, 512).unwrap();
    let reps = 2000;
    let c0 = s.lag_covariance(0);
    let trajs: Vec<Vec<f64>> = (0..reps).map(|i| s.trajectory(5, 0, i as u64).samples).collect();
    for t in [0usize, 255, 511] {
        let mean: f64 = trajs.iter().map(|x| x[t]).sum::<f64>() / reps as f64;
        let var: f64 = trajs.iter().map(|x| x[t] * x[t]).sum::<f64>() / reps as f64;
        assert!(mean.abs() < 4.0 * (c0 / reps as f64).sqrt(), "t={t}: mean {mean}");
        assert!((var - c0).abs() < 4.0 * c0 * (2.0 / reps as f64).sqrt(), "t={t}: var {var} vs {c0}");
    }
}

fn sine_waveform() -> Waveform {
    let w = Waveform::new((0..250).map(|n| (2.0 * PI * n as f64 / 50.0).cos()).collect(), 4e-6, "cos").unwrap();
    normalize_power(&w, 900.0).unwrap()
}

#[test]
fn angle_variance_matches_quadrature() {
    let psd = PsdModel::lorentzian(4e-4, 2.0 * PI * 5e3, 2.0 * PI * 1.1e3);
    let w = sine_waveform();
    let exp = PreparedExperiment::new(ExperimentConfig::new(w.clone(), psd.clone(), 10, 0)).unwrap();
    let q = expected_signal(&psd, &w);
    assert!((exp.angle_variance() - q).abs() < 1e-2 * q, "{} vs {q}", exp.angle_variance());
}

#[test]
fn survival_probability_is_gaussian_cos_squared() {
    // For a ~ N(0, v): E[cos^2 a] = (1 + e^{-2v}) / 2.
    let psd = PsdModel::lorentzian(2e-2, 2.0 * PI * 5e3, 2.0 * PI * 1.1e3);
    let w = sine_waveform();
    for mode in [SamplingMode::Trajectory, SamplingMode::Marginal] {
        let mut cfg = ExperimentConfig::new(w.clone(), psd.clone(), 20_000, 8);
        cfg.mode = mode;
        let exp = PreparedExperiment::new(cfg).unwrap();
        let v = exp.angle_variance();
        let p = 0.5 * (1.0 + (-2.0 * v).exp());
        let r = exp.run();
        let phat = r.axes[0].p_hat;
        let se = (p * (1.0 - p) / 20_000.0).sqrt();
        assert!(p < 0.95, "choose a PSD with visible flips, P = {p}");
        assert!((phat - p).abs() < 4.0 * se, "{mode:?}: {phat} vs {p} (se {se})");
    }
}
