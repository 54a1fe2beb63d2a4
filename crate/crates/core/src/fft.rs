//! Thin wrappers over `rustfft` with the sign conventions used in this crate.
//!
//! `forward`: X_k = sum_n x_n exp(-2 pi i k n / M)
//! `inverse`: x_n = sum_k X_k exp(+2 pi i k n / M)   (no 1/M factor)

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn forward_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

pub fn inverse_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

pub fn forward(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    forward_in_place(&mut buf);
    buf
}

pub fn inverse(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    inverse_in_place(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn naive(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let m = x.len();
        (0..m)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(n, v)| v * Complex64::from_polar(1.0, sign * TAU * (k * n) as f64 / m as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn conventions_match_naive_sums() {
        let x: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64 * 0.3, (i * i) as f64 * 0.01)).collect();
        for (got, want) in forward(&x).iter().zip(naive(&x, -1.0)) {
            assert!((got - want).norm() < 1e-12);
        }
        for (got, want) in inverse(&x).iter().zip(naive(&x, 1.0)) {
            assert!((got - want).norm() < 1e-12);
        }
    }
}
