//! Correction filter design and application.

use serde::{Deserialize, Serialize};

use crate::auditory::{erb_number, AuditorySpectrumSet};
use crate::fft::RealFft;
use crate::grids::SphericalGrid;
use crate::spectrum::{bin_frequencies, HrtfSet};
use crate::{Ear, Error, Result, Table};

use super::minphase::{minimum_phase_with, OVERSAMPLING};
use super::McaConfig;

/// Static soft-knee limiter with infinite ratio above the knee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limiter {
    pub limit_db: f64,
    pub knee_db: f64,
}

impl Limiter {
    pub fn new(limit_db: f64, knee_db: f64) -> Result<Self> {
        if !limit_db.is_finite() || !knee_db.is_finite() || knee_db < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "limiter needs a finite limit and a non-negative knee, got {limit_db} / {knee_db} dB"
            )));
        }
        Ok(Self { limit_db, knee_db })
    }

    /// Identity below `limit − knee/2`, quadratic knee, `limit` above
    /// `limit + knee/2`.
    pub fn apply(&self, gain_db: f64) -> f64 {
        let (t, w) = (self.limit_db, self.knee_db);
        let over = 2.0 * (gain_db - t);
        if over < -w {
            gain_db
        } else if over <= w && w > 0.0 {
            let d = gain_db - t + w / 2.0;
            gain_db - d * d / (2.0 * w)
        } else {
            t
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    Zero,
    #[default]
    Minimum,
}

impl std::str::FromStr for PhaseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(PhaseMode::Zero),
            "minimum" | "min" => Ok(PhaseMode::Minimum),
            _ => Err(Error::InvalidParameter(format!(
                "phase mode '{s}' (expected zero or minimum)"
            ))),
        }
    }
}

/// Lower fade edge: one third octave below `f_A`.
pub fn fade_low_hz(aliasing_freq_hz: f64) -> f64 {
    aliasing_freq_hz * 2f64.powf(-1.0 / 3.0)
}

/// Fade weight: 0 up to `low`, 1 from `high`, linear in frequency between.
pub fn fade_weight(f_hz: f64, low_hz: f64, high_hz: f64) -> f64 {
    ((f_hz - low_hz) / (high_hz - low_hz)).clamp(0.0, 1.0)
}

/// Per-direction, per-ear correction gains on the linear bin grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionFilterSet {
    pub(crate) grid: SphericalGrid,
    pub(crate) sample_rate_hz: f64,
    pub(crate) ir_length: usize,
    pub(crate) gains_db: [Table<f64>; 2],
    pub(crate) sparse_order: usize,
    pub(crate) aliasing_freq_hz: f64,
    pub(crate) fade_low_hz: f64,
    pub(crate) fade_enabled: bool,
    pub(crate) limiter: Option<Limiter>,
    pub(crate) phase_mode: PhaseMode,
}

/// Design settings carried alongside the gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    pub sparse_order: usize,
    pub aliasing_freq_hz: f64,
    pub fade_low_hz: f64,
    pub fade_enabled: bool,
    pub limiter: Option<Limiter>,
    pub phase_mode: PhaseMode,
}

impl CorrectionFilterSet {
    pub fn new(
        grid: SphericalGrid,
        sample_rate_hz: f64,
        ir_length: usize,
        left: Table<f64>,
        right: Table<f64>,
        design: FilterDesign,
    ) -> Result<Self> {
        let shape = (grid.len(), ir_length / 2 + 1);
        if left.shape() != shape || right.shape() != shape {
            return Err(Error::ShapeMismatch(format!(
                "correction gains {:?} / {:?}, expected {shape:?}",
                left.shape(),
                right.shape()
            )));
        }
        for (ear, t) in Ear::BOTH.iter().zip([&left, &right]) {
            if let Some(i) = t.as_slice().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "{ear} correction gain of direction {}, bin {}",
                    i / shape.1,
                    i % shape.1
                )));
            }
        }
        Ok(Self {
            grid,
            sample_rate_hz,
            ir_length,
            gains_db: [left, right],
            sparse_order: design.sparse_order,
            aliasing_freq_hz: design.aliasing_freq_hz,
            fade_low_hz: design.fade_low_hz,
            fade_enabled: design.fade_enabled,
            limiter: design.limiter,
            phase_mode: design.phase_mode,
        })
    }

    /// All-zero gains.
    pub fn null(
        grid: SphericalGrid,
        sample_rate_hz: f64,
        ir_length: usize,
        design: FilterDesign,
    ) -> Result<Self> {
        let t = Table::filled(grid.len(), ir_length / 2 + 1, 0.0);
        Self::new(grid, sample_rate_hz, ir_length, t.clone(), t, design)
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

    pub fn gains_db(&self, ear: Ear) -> &Table<f64> {
        &self.gains_db[ear.index()]
    }

    pub fn aliasing_freq_hz(&self) -> f64 {
        self.aliasing_freq_hz
    }

    pub fn fade_low_hz(&self) -> f64 {
        self.fade_low_hz
    }

    pub fn design(&self) -> FilterDesign {
        FilterDesign {
            sparse_order: self.sparse_order,
            aliasing_freq_hz: self.aliasing_freq_hz,
            fade_low_hz: self.fade_low_hz,
            fade_enabled: self.fade_enabled,
            limiter: self.limiter,
            phase_mode: self.phase_mode,
        }
    }

    pub fn phase_mode(&self) -> PhaseMode {
        self.phase_mode
    }

    /// Largest absolute gain over all directions, ears and bins.
    pub fn max_abs_gain_db(&self) -> f64 {
        self.gains_db
            .iter()
            .flat_map(|t| t.as_slice())
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Piecewise-linear interpolation of band values over the ERB-number axis,
/// constant beyond the outer bands.
pub fn bands_to_bins(band_fc_hz: &[f64], band_values: &[f64], bin_freqs_hz: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = band_fc_hz.iter().map(|&f| erb_number(f)).collect();
    let last = e.len() - 1;
    bin_freqs_hz
        .iter()
        .map(|&f| {
            let x = erb_number(f);
            if x <= e[0] {
                return band_values[0];
            }
            if x >= e[last] {
                return band_values[last];
            }
            let j = e.partition_point(|&v| v <= x) - 1;
            let t = (x - e[j]) / (e[j + 1] - e[j]);
            band_values[j] + t * (band_values[j + 1] - band_values[j])
        })
        .collect()
}

/// Correction gains from interpolated (`a_hat`) and re-analyzed (`a_of`)
/// auditory spectra: band differences, interpolated to bins, faded below
/// the aliasing frequency, then soft-limited.
pub fn design_correction(
    a_hat: &AuditorySpectrumSet,
    a_of: &AuditorySpectrumSet,
    cfg: &McaConfig,
    num_bins: usize,
    sample_rate_hz: f64,
) -> Result<CorrectionFilterSet> {
    a_hat.ensure_compatible(a_of, "correction design")?;
    if a_hat.num_bands() != cfg.bands.num_bands {
        return Err(Error::ShapeMismatch(format!(
            "{} auditory bands for a {}-band filterbank",
            a_hat.num_bands(),
            cfg.bands.num_bands
        )));
    }
    if num_bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "correction filters need at least 2 bins, got {num_bins}"
        )));
    }
    let ir_length = 2 * (num_bins - 1);
    let freqs = bin_frequencies(ir_length, sample_rate_hz);
    let f_a = cfg.head.aliasing_frequency(cfg.sparse_order);
    let f_low = fade_low_hz(f_a);
    let weights: Vec<f64> = freqs
        .iter()
        .map(|&f| if cfg.enable_aliasing_fade { fade_weight(f, f_low, f_a) } else { 1.0 })
        .collect();
    let fc = a_hat.center_freqs_hz();
    let [l, r] = Ear::BOTH.map(|ear| {
        Table::par_from_fn(a_hat.grid().len(), num_bins, |d, row| {
            let raw: Vec<f64> = a_hat
                .levels(ear, d)
                .iter()
                .zip(a_of.levels(ear, d))
                .map(|(h, o)| h - o)
                .collect();
            let interp = bands_to_bins(fc, &raw, &freqs);
            for ((o, g), w) in row.iter_mut().zip(interp).zip(&weights) {
                let faded = if *w == 0.0 { 0.0 } else { g * w };
                *o = match cfg.limiter {
                    Some(lim) => lim.apply(faded),
                    None => faded,
                };
            }
        })
    });
    CorrectionFilterSet::new(
        a_hat.grid().clone(),
        sample_rate_hz,
        ir_length,
        l,
        r,
        FilterDesign {
            sparse_order: cfg.sparse_order,
            aliasing_freq_hz: f_a,
            fade_low_hz: f_low,
            fade_enabled: cfg.enable_aliasing_fade,
            limiter: cfg.limiter,
            phase_mode: cfg.phase_mode,
        },
    )
}

/// Multiplies each spectrum by its correction filter: real gains in
/// zero-phase mode, minimum-phase spectra otherwise.
pub fn apply_correction(set: &HrtfSet, filters: &CorrectionFilterSet) -> Result<HrtfSet> {
    set.grid().ensure_same(&filters.grid, "correction")?;
    if set.ir_length() != filters.ir_length || set.sample_rate_hz() != filters.sample_rate_hz {
        return Err(Error::ShapeMismatch(format!(
            "correction: {} samples at {} Hz vs filters for {} samples at {} Hz",
            set.ir_length(),
            set.sample_rate_hz(),
            filters.ir_length,
            filters.sample_rate_hz
        )));
    }
    for t in &filters.gains_db {
        if t.as_slice().iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("correction gains".into()));
        }
    }
    let fine = RealFft::new(set.ir_length() * OVERSAMPLING);
    set.map_spectra(|ear, d, src, out| {
        let gains = filters.gains_db[ear.index()].row(d);
        match filters.phase_mode {
            PhaseMode::Zero => {
                for ((o, x), g) in out.iter_mut().zip(src).zip(gains) {
                    *o = x * 10f64.powf(g / 20.0);
                }
            }
            PhaseMode::Minimum => {
                let c = minimum_phase_with(&fine, gains);
                for ((o, x), c) in out.iter_mut().zip(src).zip(&c) {
                    *o = x * c;
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limiter_curve() {
        let lim = Limiter::new(6.0, 3.0).unwrap();
        assert_eq!(lim.apply(20.0), 6.0);
        assert_eq!(lim.apply(2.0), 2.0);
        assert_eq!(lim.apply(-30.0), -30.0);
        // Knee midpoint: x = T gives T − W/8.
        assert!((lim.apply(6.0) - (6.0 - 3.0 / 8.0)).abs() < 1e-15);
        // Knee edges are continuous.
        assert!((lim.apply(4.5) - 4.5).abs() < 1e-15);
        assert!((lim.apply(7.5) - 6.0).abs() < 1e-15);
        let hard = Limiter::new(0.0, 0.0).unwrap();
        assert_eq!(hard.apply(3.0), 0.0);
        assert_eq!(hard.apply(-3.0), -3.0);
        assert!(Limiter::new(6.0, -1.0).is_err());
    }

    #[test]
    fn fade_edges() {
        let fa = 1842.2;
        let lo = fade_low_hz(fa);
        assert!((lo - 1462.2).abs() < 0.1);
        assert_eq!(fade_weight(lo, lo, fa), 0.0);
        assert_eq!(fade_weight(fa, lo, fa), 1.0);
        assert_eq!(fade_weight(100.0, lo, fa), 0.0);
        assert!((fade_weight((lo + fa) / 2.0, lo, fa) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn band_interpolation() {
        let fc = [100.0, 1000.0, 10000.0];
        let v = [1.0, 3.0, -1.0];
        let out = bands_to_bins(&fc, &v, &[0.0, 100.0, 1000.0, 10000.0, 20000.0]);
        assert_eq!(out, vec![1.0, 1.0, 3.0, -1.0, -1.0]);
        let mid = erb_number_mid(100.0, 1000.0);
        let out = bands_to_bins(&fc, &v, &[mid]);
        assert!((out[0] - 2.0).abs() < 1e-12);
    }

    fn erb_number_mid(a: f64, b: f64) -> f64 {
        crate::auditory::erb_number_to_hz((erb_number(a) + erb_number(b)) / 2.0)
    }

    #[test]
    fn phase_mode_parse() {
        assert_eq!("zero".parse::<PhaseMode>().unwrap(), PhaseMode::Zero);
        assert_eq!("minimum".parse::<PhaseMode>().unwrap(), PhaseMode::Minimum);
        assert!("linear".parse::<PhaseMode>().is_err());
    }
}
