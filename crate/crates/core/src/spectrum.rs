//! HRIR and HRTF sets: one stereo pair per grid direction.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::fft::RealFft;
use crate::grids::SphericalGrid;
use crate::sphere::HeadDimensions;
use crate::{Error, Result, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ear {
    Left,
    Right,
}

impl Ear {
    pub const BOTH: [Ear; 2] = [Ear::Left, Ear::Right];

    pub fn index(self) -> usize {
        match self {
            Ear::Left => 0,
            Ear::Right => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ear::Left => "left",
            Ear::Right => "right",
        }
    }
}

impl std::fmt::Display for Ear {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_rate(sample_rate_hz: f64) -> Result<()> {
    if sample_rate_hz.is_finite() && sample_rate_hz > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )))
    }
}

/// Time-domain set: `samples[ear]` is `[directions × ir_length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HrirSet {
    grid: SphericalGrid,
    sample_rate_hz: f64,
    samples: [Table<f64>; 2],
    subject_id: Option<String>,
    head: Option<HeadDimensions>,
    metadata: BTreeMap<String, String>,
}

impl HrirSet {
    pub fn new(
        grid: SphericalGrid,
        sample_rate_hz: f64,
        left: Table<f64>,
        right: Table<f64>,
    ) -> Result<Self> {
        check_rate(sample_rate_hz)?;
        if left.shape() != right.shape() || left.rows() != grid.len() || left.cols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "HRIRs {:?} / {:?} for {} directions",
                left.shape(),
                right.shape(),
                grid.len()
            )));
        }
        for (ear, t) in Ear::BOTH.iter().zip([&left, &right]) {
            if let Some(i) = t.as_slice().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "{ear} HRIR of direction {}, sample {}",
                    i / t.cols(),
                    i % t.cols()
                )));
            }
        }
        Ok(Self {
            grid,
            sample_rate_hz,
            samples: [left, right],
            subject_id: None,
            head: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_subject(mut self, subject_id: impl Into<String>) -> Self {
        self.subject_id = Some(subject_id.into());
        self
    }

    pub fn with_head(mut self, head: HeadDimensions) -> Self {
        self.head = Some(head);
        self
    }

    pub fn with_metadata(mut self, metadata: BTreeMap<String, String>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn grid(&self) -> &SphericalGrid {
        &self.grid
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn ir_length(&self) -> usize {
        self.samples[0].cols()
    }

    pub fn num_directions(&self) -> usize {
        self.grid.len()
    }

    pub fn ear(&self, ear: Ear) -> &Table<f64> {
        &self.samples[ear.index()]
    }

    pub fn ir(&self, ear: Ear, direction: usize) -> &[f64] {
        self.samples[ear.index()].row(direction)
    }

    pub fn subject_id(&self) -> Option<&str> {
        self.subject_id.as_deref()
    }

    pub fn head(&self) -> Option<&HeadDimensions> {
        self.head.as_ref()
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.metadata
    }

    /// One-sided spectra. Requires an even IR length.
    pub fn to_hrtf(&self) -> Result<HrtfSet> {
        let t = self.ir_length();
        if t < 2 || t % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "IR length must be even and >= 2 for spectral processing, got {t}"
            )));
        }
        let fft = RealFft::new(t);
        let bins = fft.num_bins();
        let spectra = self.samples.each_ref().map(|ear| {
            Table::par_from_fn(ear.rows(), bins, |i, row| {
                row.copy_from_slice(&fft.forward(ear.row(i)));
            })
        });
        let [left, right] = spectra;
        let mut set = HrtfSet::new(self.grid.clone(), self.sample_rate_hz, t, left, right)?;
        set.metadata = self.metadata.clone();
        Ok(set)
    }
}

/// Frequency-domain set: `spectra[ear]` is `[directions × (T/2 + 1)]`,
/// bins at `k·fs/T`.
#[derive(Debug, Clone, PartialEq)]
pub struct HrtfSet {
    grid: SphericalGrid,
    sample_rate_hz: f64,
    ir_length: usize,
    spectra: [Table<Complex64>; 2],
    pub(crate) metadata: BTreeMap<String, String>,
}

impl HrtfSet {
    /// DC and Nyquist bins must be real; the imaginary parts are rejected if
    /// larger than 1e-9 relative to the bin magnitude, and zeroed otherwise.
    pub fn new(
        grid: SphericalGrid,
        sample_rate_hz: f64,
        ir_length: usize,
        mut left: Table<Complex64>,
        mut right: Table<Complex64>,
    ) -> Result<Self> {
        check_rate(sample_rate_hz)?;
        if ir_length < 2 || ir_length % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "IR length must be even and >= 2, got {ir_length}"
            )));
        }
        let bins = ir_length / 2 + 1;
        if left.shape() != (grid.len(), bins) || right.shape() != (grid.len(), bins) {
            return Err(Error::ShapeMismatch(format!(
                "spectra {:?} / {:?}, expected ({}, {bins})",
                left.shape(),
                right.shape(),
                grid.len()
            )));
        }
        for (ear, t) in Ear::BOTH.iter().zip([&mut left, &mut right]) {
            if let Some(i) = t
                .as_slice()
                .iter()
                .position(|v| !v.re.is_finite() || !v.im.is_finite())
            {
                return Err(Error::NonFinite(format!(
                    "{ear} spectrum of direction {}, bin {}",
                    i / bins,
                    i % bins
                )));
            }
            for d in 0..t.rows() {
                let row = t.row_mut(d);
                for k in [0, bins - 1] {
                    if row[k].im.abs() > 1e-9 * row[k].norm().max(1e-300) {
                        return Err(Error::InvalidParameter(format!(
                            "{ear} spectrum of direction {d}: bin {k} must be real"
                        )));
                    }
                    row[k].im = 0.0;
                }
            }
        }
        Ok(Self {
            grid,
            sample_rate_hz,
            ir_length,
            spectra: [left, right],
            metadata: BTreeMap::new(),
        })
    }

    pub fn grid(&self) -> &SphericalGrid {
        &self.grid
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn ir_length(&self) -> usize {
        self.ir_length
    }

    pub fn num_bins(&self) -> usize {
        self.ir_length / 2 + 1
    }

    pub fn num_directions(&self) -> usize {
        self.grid.len()
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        bin_frequencies(self.ir_length, self.sample_rate_hz)
    }

    pub fn ear(&self, ear: Ear) -> &Table<Complex64> {
        &self.spectra[ear.index()]
    }

    pub fn spectrum(&self, ear: Ear, direction: usize) -> &[Complex64] {
        self.spectra[ear.index()].row(direction)
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    /// Same layout, new spectra computed per ear and direction.
    pub(crate) fn map_spectra<F>(&self, f: F) -> Result<HrtfSet>
    where
        F: Fn(Ear, usize, &[Complex64], &mut [Complex64]) + Send + Sync,
    {
        let bins = self.num_bins();
        let [l, r] = Ear::BOTH.map(|ear| {
            let src = self.ear(ear);
            Table::par_from_fn(src.rows(), bins, |i, row| f(ear, i, src.row(i), row))
        });
        let mut out = HrtfSet::new(self.grid.clone(), self.sample_rate_hz, self.ir_length, l, r)?;
        out.metadata = self.metadata.clone();
        Ok(out)
    }

    pub fn to_hrir(&self) -> Result<HrirSet> {
        let fft = RealFft::new(self.ir_length);
        let t = self.ir_length;
        let [l, r] = self.spectra.each_ref().map(|ear| {
            Table::par_from_fn(ear.rows(), t, |i, row| {
                row.copy_from_slice(&fft.inverse(ear.row(i)));
            })
        });
        Ok(HrirSet::new(self.grid.clone(), self.sample_rate_hz, l, r)?
            .with_metadata(self.metadata.clone()))
    }

    pub(crate) fn ensure_compatible(&self, other: &HrtfSet, what: &str) -> Result<()> {
        self.grid.ensure_same(&other.grid, what)?;
        if self.ir_length != other.ir_length || self.sample_rate_hz != other.sample_rate_hz {
            return Err(Error::ShapeMismatch(format!(
                "{what}: {} samples at {} Hz vs {} samples at {} Hz",
                self.ir_length, self.sample_rate_hz, other.ir_length, other.sample_rate_hz
            )));
        }
        Ok(())
    }
}

/// Bin centre frequencies `k·fs/T` for `k = 0..=T/2`.
pub fn bin_frequencies(ir_length: usize, sample_rate_hz: f64) -> Vec<f64> {
    (0..=ir_length / 2)
        .map(|k| k as f64 * sample_rate_hz / ir_length as f64)
        .collect()
}
