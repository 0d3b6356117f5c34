//! Time alignment by spectral division with rigid-sphere transfer functions.

use crate::sphere::{sphere_transfer_function, HeadModel};
use crate::spectrum::HrtfSet;
use crate::Result;

/// Removes the sphere's direction-dependent delay and shading:
/// `H_T = H / STF`.
pub fn align(set: &HrtfSet, head: &HeadModel) -> Result<HrtfSet> {
    let stf = stf_like(set, head)?;
    let mut out = divide(set, &stf)?;
    out.metadata
        .insert("aligned_head_radius_m".into(), head.radius_m.to_string());
    Ok(out)
}

/// Restores sphere delays on a (possibly different) grid: `H = H_T · STF`.
pub fn align_inverse(set: &HrtfSet, head: &HeadModel) -> Result<HrtfSet> {
    let stf = stf_like(set, head)?;
    let mut out = multiply(set, &stf)?;
    out.metadata.remove("aligned_head_radius_m");
    Ok(out)
}

pub(crate) fn stf_like(set: &HrtfSet, head: &HeadModel) -> Result<HrtfSet> {
    Ok(
        sphere_transfer_function(head, set.grid(), set.num_bins(), set.sample_rate_hz())?
            .into_spectra(),
    )
}

pub(crate) fn divide(set: &HrtfSet, stf: &HrtfSet) -> Result<HrtfSet> {
    set.ensure_compatible(stf, "alignment")?;
    set.map_spectra(|ear, d, src, out| {
        for ((o, x), s) in out.iter_mut().zip(src).zip(stf.spectrum(ear, d)) {
            *o = x / s;
        }
    })
}

pub(crate) fn multiply(set: &HrtfSet, stf: &HrtfSet) -> Result<HrtfSet> {
    set.ensure_compatible(stf, "inverse alignment")?;
    set.map_spectra(|ear, d, src, out| {
        for ((o, x), s) in out.iter_mut().zip(src).zip(stf.spectrum(ear, d)) {
            *o = x * s;
        }
    })
}
