//! Evaluation of a test set against a reference, with CSV and JSON export.

use serde::{Deserialize, Serialize};

use super::{ild_error, itd_error, jnd_exceedance, magnitude_error, JndCurve, MagnitudeErrors};
use crate::auditory::design_bank;
use crate::grids::Direction;
use crate::pipeline::BandSettings;
use crate::spectrum::HrirSet;
use crate::{Ear, Error, Result};

/// Fixed CSV column order.
pub const CSV_HEADER: [&str; 7] = ["subject", "ear", "az_deg", "el_deg", "band_fc_hz", "metric", "value"];

/// A spherical cap used for regional averages.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub center: Direction,
    pub radius_deg: f64,
}

impl Region {
    pub fn frontal() -> Self {
        Self {
            name: "frontal_25deg".into(),
            center: Direction::new(0.0, 0.0).expect("valid"),
            radius_deg: 25.0,
        }
    }

    /// Contralateral cap of the left ear.
    pub fn contralateral() -> Self {
        Self {
            name: "contralateral_25deg".into(),
            center: Direction::new(270.0, 0.0).expect("valid"),
            radius_deg: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationOptions {
    pub bands: BandSettings,
    /// Lower edge (exclusive) of the "high band" summaries.
    pub high_band_min_hz: f64,
    pub jnd: JndCurve,
    /// Compute ILD / ITD errors (needs non-silent IRs).
    pub binaural: bool,
    /// Elevations within this tolerance count as horizontal for JND checks.
    pub horizontal_tolerance_deg: f64,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            bands: BandSettings::default(),
            high_band_min_hz: 4000.0,
            jnd: JndCurve::default(),
            binaural: true,
            horizontal_tolerance_deg: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinauralErrors {
    pub ild_db: Vec<f64>,
    pub itd_us: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub subject_id: String,
    pub magnitude: MagnitudeErrors,
    pub binaural: Option<BinauralErrors>,
    pub options: EvaluationOptions,
}

pub fn evaluate(test: &HrirSet, reference: &HrirSet, options: &EvaluationOptions) -> Result<EvaluationReport> {
    let t = test.to_hrtf()?;
    let r = reference.to_hrtf()?;
    let bank = design_bank(
        t.num_bins(),
        t.sample_rate_hz(),
        options.bands.num_bands,
        options.bands.f_low_hz,
        options.bands.f_high_hz,
    )?;
    let magnitude = magnitude_error(&t, &r, &bank)?;
    let binaural = if options.binaural {
        Some(BinauralErrors {
            ild_db: ild_error(test, reference)?,
            itd_us: itd_error(test, reference)?,
        })
    } else {
        None
    };
    let subject_id = test
        .subject_id()
        .or(reference.subject_id())
        .unwrap_or("unknown")
        .to_owned();
    Ok(EvaluationReport {
        subject_id,
        magnitude,
        binaural,
        options: options.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub center_deg: [f64; 2],
    pub radius_deg: f64,
    pub num_directions: usize,
    pub mean_db: f64,
    pub mean_high_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub band_fc_hz: f64,
    pub global_db: f64,
    pub frontal_25deg_db: Option<f64>,
    pub contralateral_25deg_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeSummary {
    pub ear: String,
    pub global_mean_db: f64,
    pub global_mean_high_db: f64,
    pub frontal_25deg: Option<RegionSummary>,
    pub contralateral_25deg: Option<RegionSummary>,
    pub right_ear_global_mean_db: f64,
    pub per_band: Vec<BandSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalSummary {
    pub num_directions: usize,
    pub ild_mean_db: f64,
    pub itd_mean_us: f64,
    pub ild_jnd_exceedance_fraction: f64,
    pub itd_jnd_exceedance_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinauralSummary {
    pub ild_mean_db: f64,
    pub ild_max_db: f64,
    pub itd_mean_us: f64,
    pub itd_max_us: f64,
    pub horizontal: Option<HorizontalSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub subject: String,
    pub grid: String,
    pub num_directions: usize,
    pub high_band_min_hz: f64,
    pub magnitude: MagnitudeSummary,
    pub binaural: Option<BinauralSummary>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

impl EvaluationReport {
    fn region(&self, region: &Region, ear: Ear) -> Option<(RegionSummary, Vec<f64>)> {
        let m = &self.magnitude;
        let all: Vec<usize> = (0..m.center_freqs_hz().len()).collect();
        let high = m.bands_above(self.options.high_band_min_hz);
        let size = super::region_size(m.grid(), &region.center, region.radius_deg).ok()?;
        let per_band = m.regional_per_band(ear, &region.center, region.radius_deg).ok()?;
        let avg = |bands: &[usize]| mean(&bands.iter().map(|&b| per_band[b]).collect::<Vec<_>>());
        Some((
            RegionSummary {
                center_deg: [region.center.azimuth_deg(), region.center.elevation_deg()],
                radius_deg: region.radius_deg,
                num_directions: size,
                mean_db: avg(&all),
                mean_high_db: if high.is_empty() { f64::NAN } else { avg(&high) },
            },
            per_band,
        ))
    }

    /// Left-ear summary with frontal and contralateral 25° caps.
    pub fn summary(&self) -> EvaluationSummary {
        let m = &self.magnitude;
        let all: Vec<usize> = (0..m.center_freqs_hz().len()).collect();
        let high = m.bands_above(self.options.high_band_min_hz);
        let frontal = self.region(&Region::frontal(), Ear::Left);
        let contra = self.region(&Region::contralateral(), Ear::Left);
        let global = m.per_band(Ear::Left);
        let per_band = m
            .center_freqs_hz()
            .iter()
            .enumerate()
            .map(|(b, &fc)| BandSummary {
                band_fc_hz: fc,
                global_db: global[b],
                frontal_25deg_db: frontal.as_ref().map(|(_, v)| v[b]),
                contralateral_25deg_db: contra.as_ref().map(|(_, v)| v[b]),
            })
            .collect();
        let magnitude = MagnitudeSummary {
            ear: Ear::Left.to_string(),
            global_mean_db: m.mean(Ear::Left, &all),
            global_mean_high_db: if high.is_empty() { f64::NAN } else { m.mean(Ear::Left, &high) },
            frontal_25deg: frontal.map(|(s, _)| s),
            contralateral_25deg: contra.map(|(s, _)| s),
            right_ear_global_mean_db: m.mean(Ear::Right, &all),
            per_band,
        };
        let binaural = self.binaural.as_ref().map(|b| {
            let dirs = m.grid().directions();
            let horizontal: Vec<usize> = (0..dirs.len())
                .filter(|&d| dirs[d].elevation_deg().abs() <= self.options.horizontal_tolerance_deg)
                .collect();
            let horizontal = (!horizontal.is_empty()).then(|| {
                let az: Vec<f64> = horizontal.iter().map(|&d| dirs[d].azimuth_deg()).collect();
                let ild: Vec<f64> = horizontal.iter().map(|&d| b.ild_db[d]).collect();
                let itd: Vec<f64> = horizontal.iter().map(|&d| b.itd_us[d]).collect();
                let ex = jnd_exceedance(&az, &ild, &itd, &self.options.jnd).expect("equal lengths");
                HorizontalSummary {
                    num_directions: horizontal.len(),
                    ild_mean_db: mean(&ild),
                    itd_mean_us: mean(&itd),
                    ild_jnd_exceedance_fraction: ex.ild_fraction,
                    itd_jnd_exceedance_fraction: ex.itd_fraction,
                }
            });
            BinauralSummary {
                ild_mean_db: mean(&b.ild_db),
                ild_max_db: max(&b.ild_db),
                itd_mean_us: mean(&b.itd_us),
                itd_max_us: max(&b.itd_us),
                horizontal,
            }
        });
        EvaluationSummary {
            subject: self.subject_id.clone(),
            grid: m.grid().name().to_owned(),
            num_directions: m.grid().len(),
            high_band_min_hz: self.options.high_band_min_hz,
            magnitude,
            binaural,
        }
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary()).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Long-format CSV: ΔG rows per ear, direction and band, then ΔILD and
    /// ΔITD rows (ear `both`, empty band column) per direction.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::InvalidParameter(format!("CSV export: {other:?}")),
        };
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        let m = &self.magnitude;
        let dirs = m.grid().directions();
        for ear in Ear::BOTH {
            let t = m.ear(ear);
            for (d, dir) in dirs.iter().enumerate() {
                let (az, el) = (dir.azimuth_deg().to_string(), dir.elevation_deg().to_string());
                for (b, fc) in m.center_freqs_hz().iter().enumerate() {
                    w.write_record([
                        self.subject_id.as_str(),
                        ear.as_str(),
                        &az,
                        &el,
                        &fc.to_string(),
                        "delta_g_db",
                        &t.get(d, b).to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        if let Some(b) = &self.binaural {
            for (d, dir) in dirs.iter().enumerate() {
                let (az, el) = (dir.azimuth_deg().to_string(), dir.elevation_deg().to_string());
                for (metric, value) in [("delta_ild_db", b.ild_db[d]), ("delta_itd_us", b.itd_us[d])] {
                    w.write_record([
                        self.subject_id.as_str(),
                        "both",
                        &az,
                        &el,
                        "",
                        metric,
                        &value.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}
