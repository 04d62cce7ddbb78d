//! Linear convolution of a grid function with a symmetric stencil via FFT.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Zero-padded spectrum of the stencil, laid out for correlation with length-`n` data.
pub(super) fn stencil_spectrum(stencil: &[f64], n: usize) -> (usize, Vec<Complex<f64>>) {
    let size = (n + stencil.len()).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); size];
    for (j, &c) in stencil.iter().enumerate() {
        buf[j] = Complex::new(c, 0.0);
    }
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    (size, buf)
}

/// `out_i = Σ_k stencil[k + reach] · data_{i+k}` for every `i`.
pub(super) fn convolve(
    size: usize,
    spectrum: &[Complex<f64>],
    data: &[f64],
    reach: usize,
) -> Vec<f64> {
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); size];
    for (j, &x) in data.iter().enumerate() {
        buf[j] = Complex::new(x, 0.0);
    }
    planner.plan_fft_forward(size).process(&mut buf);
    for (b, s) in buf.iter_mut().zip(spectrum) {
        *b *= s;
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / size as f64;
    // the stencil is symmetric, so convolution equals correlation shifted by `reach`
    (0..data.len()).map(|i| buf[i + reach].re * scale).collect()
}
