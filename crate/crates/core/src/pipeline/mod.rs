//! The MCA pipeline.
//!
//! ```text
//! H ──T──> H_T ──I──> Ĥ_T ──T⁻¹──> Ĥ ───────────────C──> Ĥ_C
//! │                               └──A──> A_Ĥ ──┐   ↑
//! └──A──> A_H ──I──> Â_H ───────────────────────┴───┘
//! ```
//!
//! `T` divides by rigid-sphere transfer functions, `I` is SH interpolation
//! to the target grid, `A` the Gammatone energy analysis, and `C` applies
//! correction filters designed from `Â_H − A_Ĥ`.

mod align;
mod correction;
mod interp;
mod minphase;

pub use align::{align, align_inverse};
pub use correction::{
    apply_correction, bands_to_bins, design_correction, fade_low_hz, fade_weight,
    CorrectionFilterSet, FilterDesign, Limiter, PhaseMode,
};
pub use interp::{interpolate_auditory, interpolate_sh};
pub use minphase::{minimum_phase, OVERSAMPLING as MINIMUM_PHASE_OVERSAMPLING};

use serde::{Deserialize, Serialize};

use crate::auditory::{
    auditory_filter, design_bank, AuditorySpectrumSet, DEFAULT_F_HIGH_HZ, DEFAULT_F_LOW_HZ,
    DEFAULT_NUM_BANDS,
};
use crate::grids::SphericalGrid;
use crate::sh::ShMode;
use crate::sphere::HeadModel;
use crate::spectrum::{HrirSet, HrtfSet};
use crate::{Ear, Error, Result, Table};

/// Filterbank layout used by the auditory branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSettings {
    pub num_bands: usize,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
}

impl Default for BandSettings {
    fn default() -> Self {
        Self {
            num_bands: DEFAULT_NUM_BANDS,
            f_low_hz: DEFAULT_F_LOW_HZ,
            f_high_hz: DEFAULT_F_HIGH_HZ,
        }
    }
}

/// How the sparse auditory spectra reach the target grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditoryBranch {
    /// `Â_H = I{A_H}`.
    #[default]
    Direct,
    /// `Â_H = A{STF_target} + I{A_H − A{STF_sparse}}`: the band levels of
    /// the alignment sphere are removed before interpolation and restored
    /// afterwards, so the correction of pure sphere data is null.
    SphereEqualized,
}

impl std::str::FromStr for AuditoryBranch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(AuditoryBranch::Direct),
            "sphere_equalized" | "sphere-equalized" => Ok(AuditoryBranch::SphereEqualized),
            _ => Err(Error::InvalidParameter(format!(
                "auditory branch '{s}' (expected direct or sphere_equalized)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McaConfig {
    pub sparse_order: usize,
    pub head: HeadModel,
    pub target_grid: SphericalGrid,
    pub enable_aliasing_fade: bool,
    pub limiter: Option<Limiter>,
    pub phase_mode: PhaseMode,
    pub sh_mode: ShMode,
    pub auditory_branch: AuditoryBranch,
    pub bands: BandSettings,
    /// When false the filters are forced to 0 dB and Ĥ_C = Ĥ.
    pub correction_enabled: bool,
}

impl McaConfig {
    /// Fade on, no limiter, minimum phase, automatic SH mode.
    pub fn new(sparse_order: usize, head: HeadModel, target_grid: SphericalGrid) -> Result<Self> {
        let cfg = Self {
            sparse_order,
            head,
            target_grid,
            enable_aliasing_fade: true,
            limiter: None,
            phase_mode: PhaseMode::Minimum,
            sh_mode: ShMode::Auto,
            auditory_branch: AuditoryBranch::Direct,
            bands: BandSettings::default(),
            correction_enabled: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sparse_order == 0 {
            return Err(Error::InvalidParameter(
                "sparse SH order must be at least 1".into(),
            ));
        }
        if self.target_grid.is_empty() {
            return Err(Error::InvalidParameter("target grid is empty".into()));
        }
        self.head.validate()
    }

    pub fn aliasing_frequency(&self) -> f64 {
        self.head.aliasing_frequency(self.sparse_order)
    }

    fn filter_design(&self) -> FilterDesign {
        let f_a = self.aliasing_frequency();
        FilterDesign {
            sparse_order: self.sparse_order,
            aliasing_freq_hz: f_a,
            fade_low_hz: fade_low_hz(f_a),
            fade_enabled: self.enable_aliasing_fade,
            limiter: self.limiter,
            phase_mode: self.phase_mode,
        }
    }
}

/// Dense results of [`mca_upsample`].
#[derive(Debug, Clone)]
pub struct McaOutput {
    /// Ĥ_C in the time domain.
    pub dense_corrected: HrirSet,
    /// Ĥ in the time domain.
    pub dense_uncorrected: HrirSet,
    pub filters: CorrectionFilterSet,
    pub corrected_spectra: HrtfSet,
    pub uncorrected_spectra: HrtfSet,
    /// Â_H on the target grid.
    pub interpolated_auditory: AuditorySpectrumSet,
}

/// Upsamples a sparse HRIR set to `cfg.target_grid`.
pub fn mca_upsample(sparse: &HrirSet, cfg: &McaConfig) -> Result<McaOutput> {
    let h = sparse.to_hrtf().map_err(|e| e.in_stage("spectrum"))?;
    let mut out = mca_upsample_spectra(&h, cfg)?;
    let tag = |set: HrirSet| {
        let mut set = set;
        if let Some(id) = sparse.subject_id() {
            set = set.with_subject(id);
        }
        if let Some(head) = sparse.head() {
            set = set.with_head(*head);
        }
        set
    };
    out.dense_corrected = tag(out.dense_corrected);
    out.dense_uncorrected = tag(out.dense_uncorrected);
    Ok(out)
}

/// [`mca_upsample`] on spectra.
pub fn mca_upsample_spectra(h: &HrtfSet, cfg: &McaConfig) -> Result<McaOutput> {
    cfg.validate()?;
    if let Some(n) = h.grid().nominal_order() {
        if n < cfg.sparse_order {
            return Err(Error::InvalidParameter(format!(
                "sparse grid '{}' supports SH order {n}, requested {}",
                h.grid().name(),
                cfg.sparse_order
            )));
        }
    }
    let order = cfg.sparse_order;
    let target = &cfg.target_grid;

    let stf_sparse = align::stf_like(h, &cfg.head).map_err(|e| e.in_stage("align"))?;
    let h_t = align::divide(h, &stf_sparse).map_err(|e| e.in_stage("align"))?;
    let h_hat_t =
        interpolate_sh(&h_t, order, target, cfg.sh_mode).map_err(|e| e.in_stage("interpolate"))?;
    let stf_dense =
        align::stf_like(&h_hat_t, &cfg.head).map_err(|e| e.in_stage("inverse-align"))?;
    let mut h_hat =
        align::multiply(&h_hat_t, &stf_dense).map_err(|e| e.in_stage("inverse-align"))?;
    h_hat.metadata = h.metadata().clone();

    let stage = |e: Error| e.in_stage("auditory");
    let bank = design_bank(
        h.num_bins(),
        h.sample_rate_hz(),
        cfg.bands.num_bands,
        cfg.bands.f_low_hz,
        cfg.bands.f_high_hz,
    )
    .map_err(stage)?;
    let a_h = auditory_filter(h, &bank).map_err(stage)?;
    let a_hat = match cfg.auditory_branch {
        AuditoryBranch::Direct => interpolate_auditory(&a_h, order, target, cfg.sh_mode),
        AuditoryBranch::SphereEqualized => {
            let a_sparse = auditory_filter(&stf_sparse, &bank).map_err(stage)?;
            let a_dense = auditory_filter(&stf_dense, &bank).map_err(stage)?;
            let residual = combine(&a_h, &a_sparse, -1.0)?;
            let interp = interpolate_auditory(&residual, order, target, cfg.sh_mode)
                .map_err(|e| e.in_stage("auditory-interpolate"))?;
            combine(&a_dense, &interp, 1.0)
        }
    }
    .map_err(|e| e.in_stage("auditory-interpolate"))?;
    let a_of = auditory_filter(&h_hat, &bank).map_err(stage)?;

    let (filters, h_c) = if cfg.correction_enabled {
        let filters = design_correction(&a_hat, &a_of, cfg, h.num_bins(), h.sample_rate_hz())
            .map_err(|e| e.in_stage("design"))?;
        let h_c = apply_correction(&h_hat, &filters).map_err(|e| e.in_stage("apply"))?;
        (filters, h_c)
    } else {
        let filters = CorrectionFilterSet::null(
            target.clone(),
            h.sample_rate_hz(),
            h.ir_length(),
            cfg.filter_design(),
        )?;
        (filters, h_hat.clone())
    };

    let stage = |e: Error| e.in_stage("synthesis");
    let mut dense_uncorrected = h_hat.to_hrir().map_err(stage)?;
    let mut dense_corrected = h_c.to_hrir().map_err(stage)?;
    for (set, corrected) in [(&mut dense_uncorrected, false), (&mut dense_corrected, true)] {
        let meta = set.metadata_mut();
        meta.insert("mca_sparse_order".into(), order.to_string());
        meta.insert("mca_sparse_grid".into(), h.grid().name().to_owned());
        meta.insert(
            "mca_aliasing_freq_hz".into(),
            format!("{:.3}", filters.aliasing_freq_hz()),
        );
        meta.insert(
            "mca_corrected".into(),
            (corrected && cfg.correction_enabled).to_string(),
        );
    }
    Ok(McaOutput {
        dense_corrected,
        dense_uncorrected,
        filters,
        corrected_spectra: h_c,
        uncorrected_spectra: h_hat,
        interpolated_auditory: a_hat,
    })
}

/// `a + sign·b`, bandwise.
fn combine(a: &AuditorySpectrumSet, b: &AuditorySpectrumSet, sign: f64) -> Result<AuditorySpectrumSet> {
    a.ensure_compatible(b, "auditory branch")?;
    let [l, r] = Ear::BOTH.map(|ear| {
        let (x, y) = (a.ear(ear), b.ear(ear));
        Table::from_vec(
            x.rows(),
            x.cols(),
            x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| p + sign * q).collect(),
        )
        .expect("same shape")
    });
    AuditorySpectrumSet::new(a.grid().clone(), a.center_freqs_hz().to_vec(), l, r)
}
