use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Real-signal transforms of a fixed even length built on complex FFTs.
///
/// Plans are `Send + Sync`, so a single instance is shared across workers;
/// each call allocates its own buffer.
#[derive(Clone)]
pub(crate) struct RealFft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RealFft {
    pub fn new(len: usize) -> Self {
        assert!(len >= 2 && len % 2 == 0, "real FFT length must be even");
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn num_bins(&self) -> usize {
        self.len / 2 + 1
    }

    /// One-sided spectrum (`len/2 + 1` bins); DC and Nyquist imaginary parts
    /// are set to exactly zero.
    pub fn forward(&self, signal: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(signal.len(), self.len);
        let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf.truncate(self.num_bins());
        buf[0].im = 0.0;
        let last = buf.len() - 1;
        buf[last].im = 0.0;
        buf
    }

    /// Inverse of [`forward`](Self::forward), scaled by `1/len`. DC and
    /// Nyquist contribute through their real parts only.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let n = self.len;
        let half = n / 2;
        debug_assert_eq!(spectrum.len(), half + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(spectrum[0].re, 0.0);
        buf[half] = Complex64::new(spectrum[half].re, 0.0);
        for k in 1..half {
            buf[k] = spectrum[k];
            buf[n - k] = spectrum[k].conj();
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let fft = RealFft::new(16);
        let x: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
        let spec = fft.forward(&x);
        assert_eq!(spec.len(), 9);
        let y = fft.inverse(&spec);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn impulse_is_flat() {
        let fft = RealFft::new(8);
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        for c in fft.forward(&x) {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }
}
