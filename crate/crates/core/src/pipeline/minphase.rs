//! Minimum-phase spectra from magnitude responses via the real cepstrum.

use std::f64::consts::LN_10;

use num_complex::Complex64;

use crate::fft::RealFft;

/// Zero-padding factor of the cepstral construction.
pub const OVERSAMPLING: usize = 8;

/// Minimum-phase spectrum whose magnitude is `10^(gain_db/20)` on the
/// one-sided grid of `gains_db` (length T/2 + 1).
///
/// The gains are linearly interpolated onto an 8× denser grid, the log
/// magnitude is folded in the cepstral domain, and the result is sampled
/// back at the original bins.
pub fn minimum_phase(gains_db: &[f64]) -> Vec<Complex64> {
    let bins = gains_db.len();
    assert!(bins >= 2, "minimum phase needs at least 2 bins");
    let fine_len = 2 * (bins - 1) * OVERSAMPLING;
    let fft = RealFft::new(fine_len);
    minimum_phase_with(&fft, gains_db)
}

pub(crate) fn minimum_phase_with(fft: &RealFft, gains_db: &[f64]) -> Vec<Complex64> {
    let bins = gains_db.len();
    let fine_bins = fft.num_bins();
    let fine_len = 2 * (fine_bins - 1);
    let log_mag: Vec<Complex64> = (0..fine_bins)
        .map(|j| {
            let pos = j / OVERSAMPLING;
            let frac = (j % OVERSAMPLING) as f64 / OVERSAMPLING as f64;
            let g = if pos + 1 < bins {
                gains_db[pos] + frac * (gains_db[pos + 1] - gains_db[pos])
            } else {
                gains_db[bins - 1]
            };
            Complex64::new(g * LN_10 / 20.0, 0.0)
        })
        .collect();
    let cepstrum = fft.inverse(&log_mag);
    let half = fine_len / 2;
    let folded: Vec<f64> = (0..fine_len)
        .map(|n| match n {
            0 => cepstrum[0],
            n if n < half => 2.0 * cepstrum[n],
            n if n == half => cepstrum[half],
            _ => 0.0,
        })
        .collect();
    let spectrum = fft.forward(&folded);
    (0..bins)
        .map(|k| {
            let v = spectrum[k * OVERSAMPLING].exp();
            if k == 0 || k == bins - 1 {
                Complex64::new(v.re, 0.0)
            } else {
                v
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_gain_is_identity() {
        let out = minimum_phase(&[0.0; 33]);
        assert!(out.iter().all(|c| *c == Complex64::new(1.0, 0.0)));
        let out = minimum_phase(&[6.0; 33]);
        let g = 10f64.powf(6.0 / 20.0);
        assert!(out.iter().all(|c| (c - g).norm() < 1e-12));
    }

    #[test]
    fn magnitude_is_preserved_for_smooth_gains() {
        let bins = 257;
        let gains: Vec<f64> = (0..bins)
            .map(|k| 6.0 * (k as f64 / 40.0).sin() - 3.0 * (k as f64 / 97.0).cos())
            .collect();
        let out = minimum_phase(&gains);
        for (g, c) in gains.iter().zip(&out) {
            assert!((20.0 * c.norm().log10() - g).abs() < 0.05);
        }
    }

    #[test]
    fn impulse_response_is_causal() {
        let bins = 129;
        let gains: Vec<f64> = (0..bins).map(|k| if k > 40 { -12.0 } else { 0.0 }).collect();
        let spec = minimum_phase(&gains);
        let ir = RealFft::new(256).inverse(&spec);
        let head: f64 = ir[..128].iter().map(|v| v * v).sum();
        let tail: f64 = ir[128..].iter().map(|v| v * v).sum();
        assert!(tail < 1e-3 * head);
    }
}
