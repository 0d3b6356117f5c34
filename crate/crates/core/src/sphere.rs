//! Rigid-sphere head model: plane-wave sphere transfer functions (STFs),
//! the optimal-radius regression, and synthetic sphere HRIR sets.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fft::RealFft;
use crate::grids::{Direction, SphericalGrid};
use crate::spectrum::{HrirSet, HrtfSet};
use crate::{Ear, Error, Result, Table};

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

/// Allowed head radii unless the model opts out of the check.
pub const RADIUS_WINDOW_M: (f64, f64) = (0.05, 0.15);

/// Safety delay applied to synthesized sphere IRs.
pub const PRE_DELAY_S: f64 = 1e-3;

/// Head-radius regression weights for half width, half height, half depth,
/// and the offset in metres (Algazi et al. 2001).
pub const ALGAZI_WEIGHTS: [f64; 3] = [0.51, 0.019, 0.18];
pub const ALGAZI_OFFSET_M: f64 = 0.032;

/// Head width, height and depth in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadDimensions {
    pub width_m: f64,
    pub height_m: f64,
    pub depth_m: f64,
}

impl HeadDimensions {
    pub fn optimal_radius(&self) -> Result<f64> {
        optimal_head_radius(self.width_m, self.height_m, self.depth_m)
    }
}

/// Sphere radius that best matches a head's ITDs, from its dimensions.
pub fn optimal_head_radius(width_m: f64, height_m: f64, depth_m: f64) -> Result<f64> {
    let dims = [width_m, height_m, depth_m];
    if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "head dimensions must be positive, got {dims:?} m"
        )));
    }
    Ok(ALGAZI_WEIGHTS
        .iter()
        .zip(dims)
        .map(|(w, d)| w * d / 2.0)
        .sum::<f64>()
        + ALGAZI_OFFSET_M)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadModel {
    pub radius_m: f64,
    #[serde(default = "default_ear_azimuths")]
    pub ear_azimuths_deg: [f64; 2],
    #[serde(default)]
    pub ear_elevations_deg: [f64; 2],
    #[serde(default = "default_speed")]
    pub speed_of_sound_mps: f64,
    /// Skip the radius sanity window.
    #[serde(default)]
    pub allow_any_radius: bool,
}

fn default_ear_azimuths() -> [f64; 2] {
    [90.0, 270.0]
}

fn default_speed() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}

impl HeadModel {
    /// Ears at (90°, 0°) and (270°, 0°), c = 343 m/s.
    pub fn new(radius_m: f64) -> Result<Self> {
        let head = Self {
            radius_m,
            ear_azimuths_deg: default_ear_azimuths(),
            ear_elevations_deg: [0.0, 0.0],
            speed_of_sound_mps: DEFAULT_SPEED_OF_SOUND,
            allow_any_radius: false,
        };
        head.validate()?;
        Ok(head)
    }

    pub fn with_speed_of_sound(mut self, c: f64) -> Result<Self> {
        self.speed_of_sound_mps = c;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m.is_finite() && self.radius_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "head radius must be positive, got {}",
                self.radius_m
            )));
        }
        if !self.allow_any_radius
            && !(RADIUS_WINDOW_M.0..=RADIUS_WINDOW_M.1).contains(&self.radius_m)
        {
            return Err(Error::HeadRadiusOutOfRange(self.radius_m));
        }
        if !(self.speed_of_sound_mps.is_finite() && self.speed_of_sound_mps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "speed of sound must be positive, got {}",
                self.speed_of_sound_mps
            )));
        }
        for ear in Ear::BOTH {
            self.ear_direction(ear)?;
        }
        Ok(())
    }

    pub fn ear_direction(&self, ear: Ear) -> Result<Direction> {
        let i = ear.index();
        Direction::new(self.ear_azimuths_deg[i], self.ear_elevations_deg[i])
    }

    /// Spatial aliasing frequency N·c / (2π·r₀) in Hz.
    pub fn aliasing_frequency(&self, order: usize) -> f64 {
        order as f64 * self.speed_of_sound_mps / (2.0 * PI * self.radius_m)
    }

    /// Woodworth ITD (r₀/c)(θ + sin θ) for lateral angle θ in radians.
    pub fn woodworth_itd_s(&self, lateral_angle_rad: f64) -> f64 {
        self.radius_m / self.speed_of_sound_mps * (lateral_angle_rad + lateral_angle_rad.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Hard cap on the number of series terms.
    pub max_terms: usize,
    /// Terms below this fraction of the largest term end the series.
    pub tolerance: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            max_terms: 1000,
            tolerance: 1e-17,
        }
    }
}

/// Modal weights (2n+1)(−i)ⁿ / h'ₙ(x) of the rigid-sphere series at x = ka,
/// where hₙ is the spherical Hankel function of the first kind.
pub fn modal_coefficients(x: f64, options: &SeriesOptions) -> Result<Vec<Complex64>> {
    let i = Complex64::i();
    let eix = Complex64::from_polar(1.0, x);
    let mut h_prev = -i * eix / x; // h0
    let mut h = -eix * (x + i) / (x * x); // h1
    let base_terms = (std::f64::consts::E * x / 2.0).ceil() as usize + 10;
    let mut coeffs = Vec::with_capacity(base_terms + 8);
    let mut minus_i_pow = Complex64::new(1.0, 0.0);
    let mut largest = 0.0f64;
    let mut n = 0usize;
    loop {
        if n >= options.max_terms {
            return Err(Error::SeriesDivergence { ka: x });
        }
        let deriv = if n == 0 {
            -h
        } else {
            h_prev - (n as f64 + 1.0) / x * h
        };
        let c = (2.0 * n as f64 + 1.0) * minus_i_pow / deriv;
        let mag = c.norm();
        let c = if mag.is_finite() { c } else { Complex64::new(0.0, 0.0) };
        largest = largest.max(c.norm());
        coeffs.push(c);
        if n >= base_terms && c.norm() <= options.tolerance * largest {
            break;
        }
        // Advance: after this step h_prev = h_{n}, h = h_{n+1} for the next n.
        if n > 0 {
            let next = (2.0 * n as f64 + 1.0) / x * h - h_prev;
            h_prev = h;
            h = next;
        }
        minus_i_pow *= -i;
        n += 1;
    }
    Ok(coeffs)
}

/// Rigid-sphere pressure at x = ka for a point on the sphere at angle Θ from
/// the incidence direction (cos Θ = `cos_angle`), e^{+iωt} DFT convention.
fn pressure(x: f64, coeffs: &[Complex64], cos_angle: f64) -> Complex64 {
    let mut p_prev = 1.0;
    let mut p = cos_angle;
    let mut sum = coeffs[0];
    for (n, c) in coeffs.iter().enumerate().skip(1) {
        if n > 1 {
            let nf = n as f64;
            let next = ((2.0 * nf - 1.0) * cos_angle * p - (nf - 1.0) * p_prev) / nf;
            p_prev = p;
            p = next;
        }
        sum += c * p;
    }
    (Complex64::i() / (x * x) * sum).conj()
}

/// Pressure ratio at a point with angle Θ to the source; `ka` = 0 gives 1.
pub fn rigid_sphere_response(ka: f64, cos_angle: f64, options: &SeriesOptions) -> Result<Complex64> {
    if ka == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(pressure(ka, &modal_coefficients(ka, options)?, cos_angle))
}

/// STFs on a grid: one complex spectrum per direction and ear.
#[derive(Debug, Clone, PartialEq)]
pub struct StfSet {
    head: HeadModel,
    spectra: HrtfSet,
}

impl StfSet {
    pub fn head(&self) -> &HeadModel {
        &self.head
    }

    pub fn spectra(&self) -> &HrtfSet {
        &self.spectra
    }

    pub fn into_spectra(self) -> HrtfSet {
        self.spectra
    }
}

/// Plane-wave rigid-sphere transfer functions at both ears for every grid
/// direction, on `num_bins` linearly spaced frequencies 0..fs/2.
///
/// The DC bin is exactly 1; the Nyquist bin is replaced by its magnitude so
/// the spectrum stays a valid one-sided real-signal spectrum.
pub fn sphere_transfer_function(
    head: &HeadModel,
    grid: &SphericalGrid,
    num_bins: usize,
    sample_rate_hz: f64,
) -> Result<StfSet> {
    sphere_transfer_function_with(head, grid, num_bins, sample_rate_hz, &SeriesOptions::default())
}

pub fn sphere_transfer_function_with(
    head: &HeadModel,
    grid: &SphericalGrid,
    num_bins: usize,
    sample_rate_hz: f64,
    options: &SeriesOptions,
) -> Result<StfSet> {
    head.validate()?;
    if num_bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "STF needs at least 2 bins, got {num_bins}"
        )));
    }
    let ir_length = 2 * (num_bins - 1);
    let ka_per_bin =
        2.0 * PI * sample_rate_hz / ir_length as f64 * head.radius_m / head.speed_of_sound_mps;
    let coeffs = crate::par::try_map_range(num_bins, |k| {
        if k == 0 {
            Ok(Vec::new())
        } else {
            modal_coefficients(k as f64 * ka_per_bin, options)
        }
    })?;
    let units: Vec<[f64; 3]> = grid.directions().iter().map(Direction::unit_vector).collect();
    let mut tables = Vec::with_capacity(2);
    for ear in Ear::BOTH {
        let e = head.ear_direction(ear)?.unit_vector();
        let table = Table::par_from_fn(grid.len(), num_bins, |d, row| {
            let u = units[d];
            let cos_angle = (u[0] * e[0] + u[1] * e[1] + u[2] * e[2]).clamp(-1.0, 1.0);
            row[0] = Complex64::new(1.0, 0.0);
            for k in 1..num_bins {
                row[k] = pressure(k as f64 * ka_per_bin, &coeffs[k], cos_angle);
            }
            let last = num_bins - 1;
            row[last] = Complex64::new(row[last].norm(), 0.0);
        });
        tables.push(table);
    }
    let right = tables.pop().expect("two ears");
    let left = tables.pop().expect("two ears");
    let mut spectra = HrtfSet::new(grid.clone(), sample_rate_hz, ir_length, left, right)?;
    spectra.metadata.insert("head_radius_m".into(), head.radius_m.to_string());
    Ok(StfSet {
        head: *head,
        spectra,
    })
}

/// Integer pre-delay, in samples, used by [`synth_sphere_hrirs`].
pub fn pre_delay_samples(sample_rate_hz: f64) -> usize {
    (PRE_DELAY_S * sample_rate_hz).round() as usize
}

/// Time-aliasing limit: energy in the last 10% of an IR relative to total.
pub const TAIL_LIMIT_DB: f64 = -60.0;

/// Tail-to-total energy ratio in dB of the last 10% of `ir`.
pub fn tail_energy_db(ir: &[f64]) -> f64 {
    let total: f64 = ir.iter().map(|v| v * v).sum();
    let start = ir.len() - ir.len() / 10;
    let tail: f64 = ir[start..].iter().map(|v| v * v).sum();
    10.0 * (tail / total).log10()
}

/// Synthetic HRIRs of a rigid sphere: inverse FFT of the STFs delayed by
/// [`PRE_DELAY_S`] (rounded to whole samples).
///
/// Fails with [`Error::TimeAliasing`] when any IR wraps around. Analytic
/// STFs are not band-limited, so the check runs on a copy whose upper half
/// band is rolled off with a raised cosine; the returned IRs are untapered.
pub fn synth_sphere_hrirs(
    head: &HeadModel,
    grid: &SphericalGrid,
    ir_length: usize,
    sample_rate_hz: f64,
) -> Result<HrirSet> {
    if ir_length < 4 || ir_length % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "IR length must be even and >= 4, got {ir_length}"
        )));
    }
    let delay = pre_delay_samples(sample_rate_hz);
    if delay >= ir_length {
        return Err(Error::InvalidParameter(format!(
            "IR length {ir_length} is shorter than the {delay}-sample pre-delay"
        )));
    }
    let bins = ir_length / 2 + 1;
    let stf = sphere_transfer_function(head, grid, bins, sample_rate_hz)?;
    let fft = RealFft::new(ir_length);
    let shift: Vec<Complex64> = (0..bins)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * (k * delay) as f64 / ir_length as f64))
        .collect();
    let taper: Vec<f64> = (0..bins)
        .map(|k| {
            let x = k as f64 / (bins - 1) as f64;
            if x <= 0.5 {
                1.0
            } else {
                0.5 * (1.0 + (PI * (x - 0.5) / 0.5).cos())
            }
        })
        .collect();
    let mut worst = (f64::NEG_INFINITY, 0usize, Ear::Left);
    let mut ears = Vec::with_capacity(2);
    for ear in Ear::BOTH {
        let spectra = stf.spectra.ear(ear);
        let tails = crate::par::map_range(grid.len(), |d| {
            let delayed: Vec<Complex64> =
                spectra.row(d).iter().zip(&shift).map(|(h, s)| h * s).collect();
            let tapered: Vec<Complex64> =
                delayed.iter().zip(&taper).map(|(h, t)| h * t).collect();
            (fft.inverse(&delayed), tail_energy_db(&fft.inverse(&tapered)))
        });
        let mut samples = Vec::with_capacity(grid.len() * ir_length);
        for (d, (ir, tail)) in tails.into_iter().enumerate() {
            if tail > worst.0 {
                worst = (tail, d, ear);
            }
            samples.extend(ir);
        }
        ears.push(Table::from_vec(grid.len(), ir_length, samples).expect("IR table shape"));
    }
    if worst.0 > TAIL_LIMIT_DB {
        return Err(Error::TimeAliasing {
            tail_db: worst.0,
            ir_length,
        });
    }
    let right = ears.pop().expect("two ears");
    let left = ears.pop().expect("two ears");
    let mut set = HrirSet::new(grid.clone(), sample_rate_hz, left, right)?;
    let meta = set.metadata_mut();
    meta.insert("generator".into(), "rigid-sphere".into());
    meta.insert("head_radius_m".into(), head.radius_m.to_string());
    meta.insert("speed_of_sound_mps".into(), head.speed_of_sound_mps.to_string());
    meta.insert("pre_delay_samples".into(), delay.to_string());
    Ok(set)
}
