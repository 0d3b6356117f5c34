//! Evaluation metrics: auditory-band magnitude error ΔG, broadband ILD and
//! ITD errors, JND references, and directional averaging.

mod onset;
mod report;

pub use onset::{
    butterworth_lowpass, estimate_toa, filter_cascade, upsample_fft, Biquad, LOWPASS_CUTOFF_HZ,
    LOWPASS_ORDER, ONSET_THRESHOLD_DB, UPSAMPLING,
};
pub use report::{
    evaluate, BinauralErrors, EvaluationOptions, EvaluationReport, EvaluationSummary, Region,
    CSV_HEADER,
};

use serde::{Deserialize, Serialize};

use crate::auditory::{auditory_filter, GammatoneBank};
use crate::grids::{great_circle_distance, Direction, SphericalGrid};
use crate::spectrum::{HrirSet, HrtfSet};
use crate::{Ear, Error, Result, Table};

/// ΔG in dB per ear, `[directions × bands]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeErrors {
    grid: SphericalGrid,
    center_freqs_hz: Vec<f64>,
    values: [Table<f64>; 2],
}

impl MagnitudeErrors {
    pub fn grid(&self) -> &SphericalGrid {
        &self.grid
    }

    pub fn center_freqs_hz(&self) -> &[f64] {
        &self.center_freqs_hz
    }

    pub fn ear(&self, ear: Ear) -> &Table<f64> {
        &self.values[ear.index()]
    }

    /// Band indices with `f_c > min_hz`.
    pub fn bands_above(&self, min_hz: f64) -> Vec<usize> {
        (0..self.center_freqs_hz.len())
            .filter(|&b| self.center_freqs_hz[b] > min_hz)
            .collect()
    }

    /// ΔG(f_c): mean over directions, per band.
    pub fn per_band(&self, ear: Ear) -> Vec<f64> {
        let t = self.ear(ear);
        (0..t.cols())
            .map(|b| (0..t.rows()).map(|d| t.get(d, b)).sum::<f64>() / t.rows() as f64)
            .collect()
    }

    /// ΔG(Ω): mean over the given bands, per direction.
    pub fn per_direction(&self, ear: Ear, bands: &[usize]) -> Vec<f64> {
        self.ear(ear)
            .iter_rows()
            .map(|row| bands.iter().map(|&b| row[b]).sum::<f64>() / bands.len() as f64)
            .collect()
    }

    /// Per-band means over the directions within `radius_deg` of `center`.
    pub fn regional_per_band(&self, ear: Ear, center: &Direction, radius_deg: f64) -> Result<Vec<f64>> {
        let members = region_members(&self.grid, center, radius_deg)?;
        let t = self.ear(ear);
        Ok((0..t.cols())
            .map(|b| members.iter().map(|&d| t.get(d, b)).sum::<f64>() / members.len() as f64)
            .collect())
    }

    /// Mean over all directions and the given bands.
    pub fn mean(&self, ear: Ear, bands: &[usize]) -> f64 {
        let v = self.per_direction(ear, bands);
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn check_sets(test: &HrtfSet, reference: &HrtfSet) -> Result<()> {
    test.ensure_compatible(reference, "evaluation")
}

/// ΔG(f_c, Ω) = |A{test} − A{reference}| per ear, direction and band.
pub fn magnitude_error(test: &HrtfSet, reference: &HrtfSet, bank: &GammatoneBank) -> Result<MagnitudeErrors> {
    check_sets(test, reference)?;
    let a = auditory_filter(test, bank)?;
    let b = auditory_filter(reference, bank)?;
    let values = Ear::BOTH.map(|ear| {
        let (x, y) = (a.ear(ear), b.ear(ear));
        Table::from_vec(
            x.rows(),
            x.cols(),
            x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| (p - q).abs()).collect(),
        )
        .expect("same shape")
    });
    Ok(MagnitudeErrors {
        grid: test.grid().clone(),
        center_freqs_hz: bank.center_freqs_hz().to_vec(),
        values,
    })
}

fn region_members(grid: &SphericalGrid, center: &Direction, radius_deg: f64) -> Result<Vec<usize>> {
    if !(radius_deg > 0.0 && radius_deg <= 180.0) {
        return Err(Error::InvalidParameter(format!(
            "region radius must lie in (0, 180] degrees, got {radius_deg}"
        )));
    }
    let members: Vec<usize> = grid
        .directions()
        .iter()
        .enumerate()
        .filter(|(_, d)| great_circle_distance(d, center) <= radius_deg)
        .map(|(i, _)| i)
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyRegion {
            azimuth_deg: center.azimuth_deg(),
            elevation_deg: center.elevation_deg(),
            radius_deg,
        });
    }
    Ok(members)
}

/// Mean of per-direction `values` over directions within `radius_deg`
/// (great-circle, inclusive) of `center`.
pub fn regional_average(
    values: &[f64],
    grid: &SphericalGrid,
    center: &Direction,
    radius_deg: f64,
) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {} directions",
            values.len(),
            grid.len()
        )));
    }
    let members = region_members(grid, center, radius_deg)?;
    Ok(members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64)
}

/// Number of grid directions within `radius_deg` of `center`.
pub fn region_size(grid: &SphericalGrid, center: &Direction, radius_deg: f64) -> Result<usize> {
    region_members(grid, center, radius_deg).map(|m| m.len())
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Broadband ILD 10·log10(Σ l² / Σ r²) in dB.
pub fn ild(set: &HrirSet, direction: usize) -> Result<f64> {
    check_index(set, direction)?;
    let (l, r) = (energy(set.ir(Ear::Left, direction)), energy(set.ir(Ear::Right, direction)));
    if r == 0.0 {
        return Err(Error::ZeroEnergy(format!("right HRIR of direction {direction}")));
    }
    if l == 0.0 {
        return Err(Error::ZeroEnergy(format!("left HRIR of direction {direction}")));
    }
    Ok(10.0 * (l / r).log10())
}

/// ITD = TOA_left − TOA_right in seconds.
pub fn itd(set: &HrirSet, direction: usize) -> Result<f64> {
    check_index(set, direction)?;
    let fs = set.sample_rate_hz();
    Ok(estimate_toa(set.ir(Ear::Left, direction), fs)? - estimate_toa(set.ir(Ear::Right, direction), fs)?)
}

fn check_index(set: &HrirSet, direction: usize) -> Result<()> {
    if direction >= set.num_directions() {
        return Err(Error::InvalidParameter(format!(
            "direction index {direction} out of range ({} directions)",
            set.num_directions()
        )));
    }
    Ok(())
}

fn check_hrirs(test: &HrirSet, reference: &HrirSet) -> Result<()> {
    test.grid().ensure_same(reference.grid(), "evaluation")?;
    if test.sample_rate_hz() != reference.sample_rate_hz() {
        return Err(Error::ShapeMismatch(format!(
            "evaluation: sample rates {} Hz vs {} Hz",
            test.sample_rate_hz(),
            reference.sample_rate_hz()
        )));
    }
    Ok(())
}

/// |ILD_test − ILD_ref| per direction, dB.
pub fn ild_error(test: &HrirSet, reference: &HrirSet) -> Result<Vec<f64>> {
    check_hrirs(test, reference)?;
    crate::par::try_map_range(test.num_directions(), |d| {
        Ok((ild(test, d)? - ild(reference, d)?).abs())
    })
}

/// |ITD_test − ITD_ref| per direction, microseconds.
pub fn itd_error(test: &HrirSet, reference: &HrirSet) -> Result<Vec<f64>> {
    check_hrirs(test, reference)?;
    crate::par::try_map_range(test.num_directions(), |d| {
        Ok((itd(test, d)? - itd(reference, d)?).abs() * 1e6)
    })
}

/// Just-noticeable differences of the binaural cues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JndCurve {
    pub ild_jnd_db: f64,
    /// ITD JND at φ = 0° and 180°.
    pub itd_front_us: f64,
    /// ITD JND at φ = ±90°.
    pub itd_lateral_us: f64,
}

impl Default for JndCurve {
    fn default() -> Self {
        Self {
            ild_jnd_db: 1.0,
            itd_front_us: 20.0,
            itd_lateral_us: 100.0,
        }
    }
}

impl JndCurve {
    /// Linear in azimuth between the frontal/rear and lateral values.
    pub fn itd_jnd_us(&self, azimuth_deg: f64) -> f64 {
        let a = azimuth_deg.rem_euclid(360.0);
        let lateral = if a > 180.0 { 360.0 - a } else { a };
        let t = if lateral <= 90.0 { lateral / 90.0 } else { (180.0 - lateral) / 90.0 };
        self.itd_front_us + t * (self.itd_lateral_us - self.itd_front_us)
    }
}

/// Per-direction JND comparison (`error > jnd` counts as exceeding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JndExceedance {
    pub azimuths_deg: Vec<f64>,
    pub ild_exceeds: Vec<bool>,
    pub itd_exceeds: Vec<bool>,
    pub ild_fraction: f64,
    pub itd_fraction: f64,
}

/// JND comparison of binaural errors at the given azimuths.
pub fn jnd_exceedance(azimuths_deg: &[f64], ild_error_db: &[f64], itd_error_us: &[f64], jnd: &JndCurve) -> Result<JndExceedance> {
    if ild_error_db.len() != azimuths_deg.len() || itd_error_us.len() != azimuths_deg.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} azimuths, {} ILD errors, {} ITD errors",
            azimuths_deg.len(),
            ild_error_db.len(),
            itd_error_us.len()
        )));
    }
    let ild_exceeds: Vec<bool> = ild_error_db.iter().map(|&e| e > jnd.ild_jnd_db).collect();
    let itd_exceeds: Vec<bool> = azimuths_deg
        .iter()
        .zip(itd_error_us)
        .map(|(&az, &e)| e > jnd.itd_jnd_us(az))
        .collect();
    let fraction = |v: &[bool]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().filter(|&&b| b).count() as f64 / v.len() as f64
        }
    };
    Ok(JndExceedance {
        azimuths_deg: azimuths_deg.to_vec(),
        ild_fraction: fraction(&ild_exceeds),
        itd_fraction: fraction(&itd_exceeds),
        ild_exceeds,
        itd_exceeds,
    })
}
