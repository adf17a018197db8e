//! FFT-based circular correlation and convolution.

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn spectra(a: &[f64], b: &[f64]) -> (Vec<Complex<f64>>, Vec<Complex<f64>>) {
    let n = a.len();
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(n);
        fft.process(&mut fa);
        fft.process(&mut fb);
    });
    (fa, fb)
}

fn inverse(mut spec: Vec<Complex<f64>>) -> Vec<f64> {
    let n = spec.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut spec));
    let scale = 1.0 / n as f64;
    spec.into_iter().map(|c| c.re * scale).collect()
}

/// `(a ⋆ b)_k = Σ_i a_i · b_{(k+i) mod d}`.
pub fn circular_correlation(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "circular correlation needs equal lengths");
    if a.is_empty() {
        return Vec::new();
    }
    let (fa, fb) = spectra(a, b);
    inverse(fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect())
}

/// `(a ∗ b)_k = Σ_i a_i · b_{(k−i) mod d}`.
pub fn circular_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "circular convolution needs equal lengths");
    if a.is_empty() {
        return Vec::new();
    }
    let (fa, fb) = spectra(a, b);
    inverse(fa.iter().zip(&fb).map(|(x, y)| x * y).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_corr(a: &[f64], b: &[f64]) -> Vec<f64> {
        let d = a.len();
        (0..d).map(|k| (0..d).map(|i| a[i] * b[(k + i) % d]).sum()).collect()
    }

    fn naive_conv(a: &[f64], b: &[f64]) -> Vec<f64> {
        let d = a.len();
        (0..d).map(|k| (0..d).map(|i| a[i] * b[(k + d - i) % d]).sum()).collect()
    }

    #[test]
    fn two_dimensional_example() {
        let c = circular_correlation(&[1.0, 2.0], &[3.0, 4.0]);
        assert!((c[0] - 11.0).abs() < 1e-12 && (c[1] - 10.0).abs() < 1e-12, "{c:?}");
    }

    proptest! {
        #[test]
        fn fft_matches_naive(v in (1usize..=256).prop_flat_map(|d| (
            proptest::collection::vec(-2.0f64..2.0, d),
            proptest::collection::vec(-2.0f64..2.0, d),
        ))) {
            let (a, b) = v;
            for (x, y) in circular_correlation(&a, &b).iter().zip(naive_corr(&a, &b)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            for (x, y) in circular_convolution(&a, &b).iter().zip(naive_conv(&a, &b)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
