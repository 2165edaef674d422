//! Phase-centred discrete-time Fourier transform of a real sequence.

/// Returns (Re, Im) of sum_n x_n exp(i*theta*(n - c)) with c = (N-1)/2.
pub fn centered_dtft(x: &[f64], theta: f64) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let c = (n as f64 - 1.0) / 2.0;
    let (mut zr, mut zi) = ((-theta * c).cos(), (-theta * c).sin());
    let (sr, si) = (theta.cos(), theta.sin());
    let (mut re, mut im) = (0.0, 0.0);
    // Re-anchor the rotation periodically so round-off stays at machine level.
    const ANCHOR: usize = 64;
    for (j, &v) in x.iter().enumerate() {
        if j % ANCHOR == 0 && j > 0 {
            let ph = theta * (j as f64 - c);
            zr = ph.cos();
            zi = ph.sin();
        }
        re += v * zr;
        im += v * zi;
        let t = zr * sr - zi * si;
        zi = zr * si + zi * sr;
        zr = t;
    }
    (re, im)
}

/// |X(theta)|^2 of the centred DTFT.
pub fn dtft_power(x: &[f64], theta: f64) -> f64 {
    let (re, im) = centered_dtft(x, theta);
    re * re + im * im
}
