//! Gammatone auditory smoothing.
//!
//! Each band accumulates spectral energy weighted by the magnitude-squared
//! response of a 4th-order Gammatone filter:
//! `A{X}(f_c) = 10·log10 Σ_f B(f_c, f)·|X(f)|²`.

use num_complex::Complex64;

use crate::grids::SphericalGrid;
use crate::spectrum::{bin_frequencies, HrtfSet};
use crate::{Ear, Error, Result, Table};

pub const DEFAULT_NUM_BANDS: usize = 41;
pub const DEFAULT_F_LOW_HZ: f64 = 50.0;
pub const DEFAULT_F_HIGH_HZ: f64 = 20_000.0;

/// Energy floor (−120 dB) applied before taking logarithms.
pub const ENERGY_FLOOR: f64 = 1e-12;

/// Bandwidth scale between the ERB and the 4th-order Gammatone parameter b.
const GAMMATONE_B: f64 = 1.019;

/// Glasberg–Moore equivalent rectangular bandwidth in Hz.
pub fn erb_hz(f_hz: f64) -> f64 {
    24.7 * (4.37 * f_hz / 1000.0 + 1.0)
}

/// ERB-number (Cams) of a frequency.
pub fn erb_number(f_hz: f64) -> f64 {
    21.4 * (4.37 * f_hz / 1000.0 + 1.0).log10()
}

pub fn erb_number_to_hz(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) * 1000.0 / 4.37
}

/// Un-normalized |GT(f)|² of a 4th-order Gammatone filter centred at `fc`.
pub fn gammatone_power(fc_hz: f64, f_hz: f64) -> f64 {
    let x = (f_hz - fc_hz) / (GAMMATONE_B * erb_hz(fc_hz));
    (1.0 + x * x).powi(-4)
}

/// Magnitude-squared band responses sampled on a linear bin grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GammatoneBank {
    f_low_hz: f64,
    f_high_hz: f64,
    sample_rate_hz: f64,
    center_freqs_hz: Vec<f64>,
    responses: Table<f64>,
}

impl GammatoneBank {
    /// 41 bands between 50 Hz and 20 kHz.
    pub fn standard(num_bins: usize, sample_rate_hz: f64) -> Result<Self> {
        design_bank(
            num_bins,
            sample_rate_hz,
            DEFAULT_NUM_BANDS,
            DEFAULT_F_LOW_HZ,
            DEFAULT_F_HIGH_HZ,
        )
    }

    pub fn num_bands(&self) -> usize {
        self.center_freqs_hz.len()
    }

    pub fn num_bins(&self) -> usize {
        self.responses.cols()
    }

    pub fn f_low_hz(&self) -> f64 {
        self.f_low_hz
    }

    pub fn f_high_hz(&self) -> f64 {
        self.f_high_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn center_freqs_hz(&self) -> &[f64] {
        &self.center_freqs_hz
    }

    /// `[bands × bins]`, each row peak-normalized to 1.
    pub fn responses(&self) -> &Table<f64> {
        &self.responses
    }

    /// Band values in dB of one spectrum.
    pub fn band_levels(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_bands()];
        self.band_levels_into(spectrum, &mut out);
        out
    }

    fn band_levels_into(&self, spectrum: &[Complex64], out: &mut [f64]) {
        let power: Vec<f64> = spectrum.iter().map(Complex64::norm_sqr).collect();
        for (b, o) in out.iter_mut().enumerate() {
            let energy: f64 = self
                .responses
                .row(b)
                .iter()
                .zip(&power)
                .map(|(w, p)| w * p)
                .sum();
            *o = 10.0 * energy.max(ENERGY_FLOOR).log10();
        }
    }
}

/// Designs `num_bands` Gammatone bands equally spaced in ERB-number from
/// `f_low` to `f_high`, sampled at the `num_bins` frequencies 0..fs/2.
pub fn design_bank(
    num_bins: usize,
    sample_rate_hz: f64,
    num_bands: usize,
    f_low_hz: f64,
    f_high_hz: f64,
) -> Result<GammatoneBank> {
    if num_bands < 2 {
        return Err(Error::InvalidParameter(format!(
            "filterbank needs at least 2 bands, got {num_bands}"
        )));
    }
    if num_bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "filterbank needs at least 2 bins, got {num_bins}"
        )));
    }
    if !(f_low_hz > 0.0 && f_low_hz < f_high_hz && f_high_hz <= sample_rate_hz / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "filterbank range must satisfy 0 < f_low < f_high <= fs/2, got {f_low_hz}..{f_high_hz} Hz at fs {sample_rate_hz} Hz"
        )));
    }
    let (e_low, e_high) = (erb_number(f_low_hz), erb_number(f_high_hz));
    let step = (e_high - e_low) / (num_bands - 1) as f64;
    let mut center_freqs_hz: Vec<f64> = (0..num_bands)
        .map(|b| erb_number_to_hz(e_low + b as f64 * step))
        .collect();
    center_freqs_hz[0] = f_low_hz;
    center_freqs_hz[num_bands - 1] = f_high_hz;
    let freqs = bin_frequencies(2 * (num_bins - 1), sample_rate_hz);
    let responses = Table::par_from_fn(num_bands, num_bins, |b, row| {
        let fc = center_freqs_hz[b];
        for (r, &f) in row.iter_mut().zip(&freqs) {
            *r = gammatone_power(fc, f);
        }
        let peak = row.iter().copied().fold(0.0, f64::max);
        row.iter_mut().for_each(|r| *r /= peak);
    });
    Ok(GammatoneBank {
        f_low_hz,
        f_high_hz,
        sample_rate_hz,
        center_freqs_hz,
        responses,
    })
}

/// Band levels in dB per ear, `[directions × bands]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditorySpectrumSet {
    grid: SphericalGrid,
    center_freqs_hz: Vec<f64>,
    values: [Table<f64>; 2],
}

impl AuditorySpectrumSet {
    pub fn new(
        grid: SphericalGrid,
        center_freqs_hz: Vec<f64>,
        left: Table<f64>,
        right: Table<f64>,
    ) -> Result<Self> {
        let shape = (grid.len(), center_freqs_hz.len());
        if left.shape() != shape || right.shape() != shape {
            return Err(Error::ShapeMismatch(format!(
                "auditory values {:?} / {:?}, expected {shape:?}",
                left.shape(),
                right.shape()
            )));
        }
        if left.as_slice().iter().chain(right.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("auditory spectrum".into()));
        }
        Ok(Self {
            grid,
            center_freqs_hz,
            values: [left, right],
        })
    }

    pub fn grid(&self) -> &SphericalGrid {
        &self.grid
    }

    pub fn center_freqs_hz(&self) -> &[f64] {
        &self.center_freqs_hz
    }

    pub fn num_bands(&self) -> usize {
        self.center_freqs_hz.len()
    }

    pub fn ear(&self, ear: Ear) -> &Table<f64> {
        &self.values[ear.index()]
    }

    pub fn levels(&self, ear: Ear, direction: usize) -> &[f64] {
        self.values[ear.index()].row(direction)
    }

    pub(crate) fn ensure_compatible(&self, other: &AuditorySpectrumSet, what: &str) -> Result<()> {
        self.grid.ensure_same(&other.grid, what)?;
        if self.center_freqs_hz != other.center_freqs_hz {
            return Err(Error::ShapeMismatch(format!(
                "{what}: {} vs {} auditory bands",
                self.num_bands(),
                other.num_bands()
            )));
        }
        Ok(())
    }
}

/// Applies the filterbank to every spectrum of the set.
pub fn auditory_filter(spectra: &HrtfSet, bank: &GammatoneBank) -> Result<AuditorySpectrumSet> {
    if spectra.num_bins() != bank.num_bins() || spectra.sample_rate_hz() != bank.sample_rate_hz {
        return Err(Error::ShapeMismatch(format!(
            "{} bins at {} Hz for a filterbank designed for {} bins at {} Hz",
            spectra.num_bins(),
            spectra.sample_rate_hz(),
            bank.num_bins(),
            bank.sample_rate_hz
        )));
    }
    let bands = bank.num_bands();
    let [l, r] = Ear::BOTH.map(|ear| {
        let src = spectra.ear(ear);
        Table::par_from_fn(src.rows(), bands, |d, row| bank.band_levels_into(src.row(d), row))
    });
    AuditorySpectrumSet::new(spectra.grid().clone(), bank.center_freqs_hz.clone(), l, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erb_values() {
        assert!((erb_hz(1000.0) - 132.639).abs() < 1e-9);
        for f in [50.0, 1000.0, 20000.0] {
            assert!((erb_number_to_hz(erb_number(f)) - f).abs() < 1e-9);
        }
    }

    #[test]
    fn default_bank() {
        let bank = GammatoneBank::standard(257, 44100.0).unwrap();
        let fc = bank.center_freqs_hz();
        assert_eq!(fc.len(), 41);
        assert_eq!(fc[0], 50.0);
        assert_eq!(fc[40], 20000.0);
        assert!(fc.windows(2).all(|w| w[1] > w[0]));
        let df = 44100.0 / 512.0;
        for (b, row) in bank.responses().iter_rows().enumerate() {
            let peak = row.iter().copied().fold(0.0, f64::max);
            assert_eq!(peak, 1.0);
            assert!(row.iter().all(|&v| v >= 0.0));
            let argmax = row.iter().position(|&v| v == peak).unwrap();
            assert!((argmax as f64 * df - fc[b]).abs() <= df);
        }
    }

    #[test]
    fn bank_preconditions() {
        assert!(design_bank(257, 44100.0, 1, 50.0, 20000.0).is_err());
        assert!(design_bank(257, 44100.0, 41, 500.0, 50.0).is_err());
        assert!(design_bank(257, 32000.0, 41, 50.0, 20000.0).is_err());
    }

    #[test]
    fn single_bin_and_flat_spectra() {
        let bank = GammatoneBank::standard(257, 44100.0).unwrap();
        let mut x = vec![Complex64::new(0.0, 0.0); 257];
        x[40] = Complex64::new(1.0, 0.0);
        let levels = bank.band_levels(&x);
        for b in 0..41 {
            let w = *bank.responses().get(b, 40);
            let expected = 10.0 * w.max(ENERGY_FLOOR).log10();
            assert!((levels[b] - expected).abs() < 1e-12);
        }
        let flat = vec![Complex64::new(1.0, 0.0); 257];
        let levels = bank.band_levels(&flat);
        for b in 0..41 {
            let sum: f64 = bank.responses().row(b).iter().sum();
            assert!((levels[b] - 10.0 * sum.log10()).abs() < 1e-12);
        }
        let zero = vec![Complex64::new(0.0, 0.0); 257];
        assert!(bank.band_levels(&zero).iter().all(|&v| v == -120.0));
    }
}
