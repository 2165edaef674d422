//! Composite Gauss-Legendre quadrature with panel doubling.

use std::sync::OnceLock;

const GL_ORDER: usize = 16;

fn gl_rule() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut x = [0.0; GL_ORDER];
        let mut w = [0.0; GL_ORDER];
        for i in 0..n {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

/// Fixed composite rule: `panels` equal Gauss-Legendre panels over [a, b].
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a || panels == 0 {
        return 0.0;
    }
    let (x, w) = gl_rule();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for i in 0..GL_ORDER {
            s += w[i] * f(mid + 0.5 * h * x[i]);
        }
        total += 0.5 * h * s;
    }
    total
}

#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    /// Target panel width; each panel carries 16 nodes.
    pub panel_width: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_doublings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

impl Integrator {
    pub fn new(panel_width: f64) -> Self {
        Integrator { panel_width, rel_tol: 1e-8, abs_tol: 0.0, max_doublings: 6 }
    }

    pub fn with_tol(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    /// Integrate over [a, b], splitting at any breakpoints strictly inside.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, breaks: &[f64]) -> QuadResult {
        if !(b > a) {
            return QuadResult { value: 0.0, error_estimate: 0.0, converged: true };
        }
        let mut cuts: Vec<f64> = vec![a];
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        cuts.extend(inner);
        cuts.push(b);

        let mut out = QuadResult { value: 0.0, error_estimate: 0.0, converged: true };
        for win in cuts.windows(2) {
            let r = self.integrate_piece(f, win[0], win[1]);
            out.value += r.value;
            out.error_estimate += r.error_estimate;
            out.converged &= r.converged;
        }
        out
    }

    fn integrate_piece<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> QuadResult {
        let mut panels = ((b - a) / self.panel_width).ceil().max(1.0) as usize;
        let mut prev = gauss_legendre(f, a, b, panels);
        for _ in 0..self.max_doublings {
            panels *= 2;
            let next = gauss_legendre(f, a, b, panels);
            let err = (next - prev).abs();
            if err <= self.rel_tol * next.abs() || err <= self.abs_tol {
                return QuadResult { value: next, error_estimate: err, converged: true };
            }
            prev = next;
        }
        let last = gauss_legendre(f, a, b, panels * 2);
        let err = (last - prev).abs();
        QuadResult {
            value: last,
            error_estimate: err,
            converged: err <= self.rel_tol * last.abs() || err <= self.abs_tol,
        }
    }
}

/// Trigamma function psi'(x) for x > 0.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    // Asymptotic series in 1/x with Bernoulli coefficients.
    acc + 1.0 / x
        + x2 / 2.0
        + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 * (1.0 / 30.0 - x2 * 5.0 / 66.0))))
}
