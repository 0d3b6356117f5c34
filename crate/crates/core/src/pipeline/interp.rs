//! SH interpolation of complex spectra and of auditory band levels.

use crate::auditory::AuditorySpectrumSet;
use crate::grids::SphericalGrid;
use crate::sh::{interpolate_real, sh_inverse, transform_with, ShMode, ShProjector};
use crate::spectrum::HrtfSet;
use crate::{Ear, Result};

/// `sh_inverse(sh_transform(set, order, mode), target)`.
pub fn interpolate_sh(
    set: &HrtfSet,
    order: usize,
    target: &SphericalGrid,
    mode: ShMode,
) -> Result<HrtfSet> {
    let projector = ShProjector::new(set.grid(), order, mode)?;
    let coeffs = transform_with(set, &projector)?;
    let mut out = sh_inverse(&coeffs, target)?;
    out.metadata = set.metadata().clone();
    Ok(out)
}

/// Bandwise SH interpolation of dB levels, treated as real functions on the
/// sphere. No alignment is involved.
pub fn interpolate_auditory(
    set: &AuditorySpectrumSet,
    order: usize,
    target: &SphericalGrid,
    mode: ShMode,
) -> Result<AuditorySpectrumSet> {
    let projector = ShProjector::new(set.grid(), order, mode)?;
    let [l, r] = [Ear::Left, Ear::Right]
        .map(|ear| interpolate_real(&projector, set.ear(ear), target.directions()));
    AuditorySpectrumSet::new(target.clone(), set.center_freqs_hz().to_vec(), l?, r?)
}
