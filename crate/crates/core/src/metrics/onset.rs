//! Onset-based time-of-arrival estimation.
//!
//! The IR is upsampled 10× by spectral zero padding, low-passed by an
//! 8th-order Butterworth filter at 3 kHz (four biquads, forward only), and
//! the onset is the first sample whose magnitude exceeds −10 dB relative to
//! the filtered signal's peak.
//!
//! Spectral upsampling yields one period of a periodic signal, so the filter
//! runs over two periods and the second one is kept. The estimate then
//! commutes with circular delays.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

pub const UPSAMPLING: usize = 10;
pub const LOWPASS_ORDER: usize = 8;
pub const LOWPASS_CUTOFF_HZ: f64 = 3000.0;
pub const ONSET_THRESHOLD_DB: f64 = -10.0;

/// Band-limited interpolation by `factor` via FFT zero padding. An even
/// length's Nyquist bin is split between the positive and negative halves.
pub fn upsample_fft(signal: &[f64], factor: usize) -> Vec<f64> {
    let n = signal.len();
    if n == 0 || factor == 0 {
        return Vec::new();
    }
    let m = n * factor;
    let mut planner = FftPlanner::new();
    let mut x: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut x);
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let positive = n / 2 + 1;
    for k in 0..positive.min(n) {
        y[k] = x[k];
    }
    for k in 1..n - n / 2 {
        y[m - k] = x[n - k];
    }
    if n % 2 == 0 && factor > 1 {
        let half = x[n / 2] * 0.5;
        y[n / 2] = half;
        y[m - n / 2] = half;
    }
    planner.plan_fft_inverse(m).process(&mut y);
    let scale = 1.0 / n as f64;
    y.iter().map(|c| c.re * scale).collect()
}

/// One second-order section, `b0 b1 b2 / 1 a1 a2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn run(&self, data: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in data.iter_mut() {
            let x = *v;
            let y = self.b[0] * x + s1;
            s1 = self.b[1] * x - self.a[0] * y + s2;
            s2 = self.b[2] * x - self.a[1] * y;
            *v = y;
        }
    }
}

/// Digital Butterworth low-pass as cascaded biquads (bilinear transform with
/// frequency prewarping). `order` must be even.
pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Vec<Biquad>> {
    if order == 0 || order % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "Butterworth order must be even and positive, got {order}"
        )));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "cutoff {cutoff_hz} Hz outside (0, {}) Hz",
            sample_rate_hz / 2.0
        )));
    }
    let k = 2.0 * sample_rate_hz;
    let wc = k * (PI * cutoff_hz / sample_rate_hz).tan();
    let sections = (1..=order / 2)
        .map(|i| {
            // Analog pole pair at angle θ from the negative real axis.
            let theta = PI * (2 * i - 1) as f64 / (2 * order) as f64;
            let a1 = 2.0 * theta.cos() * wc;
            let b = wc * wc;
            let a0 = k * k + a1 * k + b;
            Biquad {
                b: [b / a0, 2.0 * b / a0, b / a0],
                a: [(2.0 * b - 2.0 * k * k) / a0, (k * k - a1 * k + b) / a0],
            }
        })
        .collect();
    Ok(sections)
}

pub fn filter_cascade(sections: &[Biquad], data: &mut [f64]) {
    for s in sections {
        s.run(data);
    }
}

/// Onset time in seconds, at the resolution of the upsampled signal.
pub fn estimate_toa(ir: &[f64], sample_rate_hz: f64) -> Result<f64> {
    if ir.is_empty() {
        return Err(Error::InvalidParameter("empty impulse response".into()));
    }
    let fs_up = sample_rate_hz * UPSAMPLING as f64;
    let sections = butterworth_lowpass(LOWPASS_ORDER, LOWPASS_CUTOFF_HZ, fs_up)?;
    let period = upsample_fft(ir, UPSAMPLING);
    let mut y = [period.as_slice(), period.as_slice()].concat();
    filter_cascade(&sections, &mut y);
    let y = &y[period.len()..];
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::ZeroEnergy("impulse response".into()));
    }
    let threshold = peak * 10f64.powf(ONSET_THRESHOLD_DB / 20.0);
    let index = y
        .iter()
        .position(|v| v.abs() > threshold)
        .expect("peak exceeds threshold");
    Ok(index as f64 / fs_up)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsampling_keeps_original_samples() {
        let x: Vec<f64> = (0..16).map(|i| ((i * 5) % 7) as f64 - 3.0).collect();
        for factor in [1, 2, 10] {
            let y = upsample_fft(&x, factor);
            assert_eq!(y.len(), 16 * factor);
            for (i, v) in x.iter().enumerate() {
                assert!((y[i * factor] - v).abs() < 1e-12);
            }
        }
        let odd: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let y = upsample_fft(&odd, 3);
        for (i, v) in odd.iter().enumerate() {
            assert!((y[i * 3] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn butterworth_unity_dc_and_half_power_cutoff() {
        let s = butterworth_lowpass(8, 3000.0, 441000.0).unwrap();
        let dc: f64 = s
            .iter()
            .map(|q| (q.b[0] + q.b[1] + q.b[2]) / (1.0 + q.a[0] + q.a[1]))
            .product();
        assert!((dc - 1.0).abs() < 1e-9);
        // Magnitude at the cutoff is −3.0103 dB.
        let w = 2.0 * PI * 3000.0 / 441000.0;
        let z = Complex64::from_polar(1.0, -w);
        let h: Complex64 = s
            .iter()
            .map(|q| (q.b[0] + q.b[1] * z + q.b[2] * z * z) / (1.0 + q.a[0] * z + q.a[1] * z * z))
            .product();
        assert!((20.0 * h.norm().log10() + 3.0103).abs() < 1e-3);
        assert!(butterworth_lowpass(7, 3000.0, 441000.0).is_err());
    }

    #[test]
    fn impulse_onset_offset() {
        // Independent evaluation with scipy (resample by zero padding, sosfilt):
        // an impulse at sample k has its onset at k + 8.5 samples for 44.1 kHz.
        let fs = 44100.0;
        for k in [10usize, 100, 200] {
            let mut h = vec![0.0; 512];
            h[k] = 1.0;
            let toa = estimate_toa(&h, fs).unwrap() * fs;
            assert!((toa - (k as f64 + 8.5)).abs() < 0.05, "k={k}: {toa}");
        }
    }

    #[test]
    fn circular_delay_shifts_onset_exactly() {
        let fs = 44100.0;
        let h: Vec<f64> = (0..256)
            .map(|i| if i < 40 { 0.01 * (i as f64).sin() } else { (-(i as f64 - 40.0) / 6.0).exp() })
            .collect();
        let base = estimate_toa(&h, fs).unwrap();
        for d in [1usize, 37, 100] {
            let mut g = vec![0.0; h.len()];
            for (i, v) in h.iter().enumerate() {
                g[(i + d) % h.len()] = *v;
            }
            let t = estimate_toa(&g, fs).unwrap();
            assert!((t - base - d as f64 / fs).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn silent_ir_is_an_error() {
        assert!(matches!(estimate_toa(&[0.0; 64], 44100.0), Err(Error::ZeroEnergy(_))));
        assert!(estimate_toa(&[], 44100.0).is_err());
    }
}
