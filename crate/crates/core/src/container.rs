//! Native binary containers.
//!
//! Both formats share one framing, all integers little-endian:
//!
//! | offset | size | content                               |
//! |--------|------|---------------------------------------|
//! | 0      | 4    | magic (`MCAH` or `MCAF`)              |
//! | 4      | 4    | format version, u32 (currently 1)     |
//! | 8      | 8    | header length L in bytes, u64         |
//! | 16     | L    | UTF-8 JSON header                     |
//! | 16 + L | rest | payload                               |
//!
//! `MCAH` holds an HRIR set. Its payload is f32 samples, direction-major,
//! left ear then right ear within a direction, samples contiguous:
//! `num_directions × 2 × ir_length_samples × 4` bytes.
//!
//! `MCAF` holds correction filters. Its payload is f64 gains in dB with the
//! same ordering over `num_bins` bins, so a dump re-imports bit-exactly.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grids::{Direction, GridFile, SphericalGrid};
use crate::pipeline::{CorrectionFilterSet, FilterDesign};
use crate::sphere::HeadDimensions;
use crate::{ErrorClass, HrirSet, Result, Table};

pub const HRIR_MAGIC: [u8; 4] = *b"MCAH";
pub const FILTER_MAGIC: [u8; 4] = *b"MCAF";
pub const VERSION: u32 = 1;
const PREAMBLE: usize = 16;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic at byte 0: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("unsupported container version {version} at byte 4 (supported: {supported})")]
    UnsupportedVersion { version: u32, supported: u32 },

    #[error("truncated {section}: needed {needed} bytes at byte {offset}, found {available}")]
    Truncated {
        section: &'static str,
        offset: u64,
        needed: u64,
        available: u64,
    },

    #[error("header at byte {offset} is not valid JSON: {message}")]
    HeaderJson { offset: u64, message: String },

    #[error("invalid header: {0}")]
    HeaderInvalid(String),

    #[error(
        "payload length mismatch at byte {offset}: header implies {expected} bytes, found {actual}"
    )]
    PayloadLength {
        offset: u64,
        expected: u64,
        actual: u64,
    },

    #[error(
        "non-finite value at byte {offset} (direction {direction}, {ear} ear, index {index})"
    )]
    NonFinite {
        offset: u64,
        direction: usize,
        ear: &'static str,
        index: usize,
    },
}

impl ContainerError {
    pub fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}

/// JSON header of an `MCAH` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrirHeader {
    pub sample_rate_hz: f64,
    pub ir_length_samples: usize,
    pub num_directions: usize,
    pub directions: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<HeadDimensions>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

/// JSON header of an `MCAF` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterHeader {
    pub grid: GridFile,
    pub sample_rate_hz: f64,
    pub ir_length_samples: usize,
    pub num_bins: usize,
    #[serde(flatten)]
    pub design: FilterDesign,
}

fn write_framed(out: &mut impl Write, magic: [u8; 4], header: &[u8], payload: &[u8]) -> std::io::Result<()> {
    out.write_all(&magic)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(header.len() as u64).to_le_bytes())?;
    out.write_all(header)?;
    out.write_all(payload)
}

fn read_up_to(input: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}

/// Reads preamble and header; returns the header text and payload offset.
fn read_header(input: &mut impl Read, magic: [u8; 4]) -> Result<(String, u64)> {
    let mut pre = [0u8; PREAMBLE];
    let got = read_up_to(input, &mut pre)?;
    if got >= 4 && pre[..4] != magic {
        return Err(ContainerError::BadMagic {
            expected: String::from_utf8_lossy(&magic).into_owned(),
            found: String::from_utf8_lossy(&pre[..4]).into_owned(),
        }
        .into());
    }
    if got < PREAMBLE {
        return Err(ContainerError::Truncated {
            section: "preamble",
            offset: 0,
            needed: PREAMBLE as u64,
            available: got as u64,
        }
        .into());
    }
    let version = u32::from_le_bytes(pre[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion {
            version,
            supported: VERSION,
        }
        .into());
    }
    let len = u64::from_le_bytes(pre[8..16].try_into().expect("8 bytes"));
    let mut header = Vec::new();
    let got = input.take(len).read_to_end(&mut header)? as u64;
    if got < len {
        return Err(ContainerError::Truncated {
            section: "header",
            offset: PREAMBLE as u64,
            needed: len,
            available: got,
        }
        .into());
    }
    let text = String::from_utf8(header).map_err(|e| ContainerError::HeaderJson {
        offset: PREAMBLE as u64 + e.utf8_error().valid_up_to() as u64,
        message: "invalid UTF-8".into(),
    })?;
    Ok((text, PREAMBLE as u64 + len))
}

fn parse_header<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let offset = PREAMBLE as u64
            + text
                .lines()
                .take(e.line().saturating_sub(1))
                .map(|l| l.len() as u64 + 1)
                .sum::<u64>()
            + e.column().saturating_sub(1) as u64;
        ContainerError::HeaderJson {
            offset,
            message: e.to_string(),
        }
        .into()
    })
}

fn read_payload(input: &mut impl Read, offset: u64, expected: u64) -> Result<Vec<u8>> {
    let mut payload = Vec::new();
    input.read_to_end(&mut payload)?;
    if payload.len() as u64 != expected {
        return Err(ContainerError::PayloadLength {
            offset,
            expected,
            actual: payload.len() as u64,
        }
        .into());
    }
    Ok(payload)
}

const EARS: [&str; 2] = ["left", "right"];

/// Serializes an HRIR set to `MCAH` bytes. Samples are stored as f32.
pub fn encode_hrirs(set: &HrirSet) -> Vec<u8> {
    let grid = set.grid();
    let header = HrirHeader {
        sample_rate_hz: set.sample_rate_hz(),
        ir_length_samples: set.ir_length(),
        num_directions: grid.len(),
        directions: grid
            .directions()
            .iter()
            .map(|d| [d.azimuth_deg(), d.elevation_deg()])
            .collect(),
        weights: grid.weights().map(<[f64]>::to_vec),
        grid_name: Some(grid.name().to_owned()),
        nominal_order: grid.nominal_order(),
        subject_id: set.subject_id().map(str::to_owned),
        head: set.head().copied(),
        metadata: set.metadata().clone(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let t = set.ir_length();
    let mut payload = Vec::with_capacity(grid.len() * 2 * t * 4);
    for d in 0..grid.len() {
        for ear in crate::Ear::BOTH {
            for &v in set.ir(ear, d) {
                payload.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    let mut out = Vec::with_capacity(PREAMBLE + header.len() + payload.len());
    write_framed(&mut out, HRIR_MAGIC, &header, &payload).expect("writing to memory");
    out
}

/// Parses an `MCAH` stream.
pub fn decode_hrirs(mut input: impl Read) -> Result<HrirSet> {
    let (text, offset) = read_header(&mut input, HRIR_MAGIC)?;
    let header: HrirHeader = parse_header(&text)?;
    let (n, t) = (header.num_directions, header.ir_length_samples);
    if header.directions.len() != n {
        return Err(ContainerError::HeaderInvalid(format!(
            "num_directions is {n} but {} directions are listed",
            header.directions.len()
        ))
        .into());
    }
    if t == 0 {
        return Err(ContainerError::HeaderInvalid("ir_length_samples is 0".into()).into());
    }
    let expected = (n as u64)
        .checked_mul(2 * t as u64 * 4)
        .ok_or_else(|| ContainerError::HeaderInvalid("payload size overflows".into()))?;
    let directions = header
        .directions
        .iter()
        .map(|&[az, el]| Direction::new(az, el))
        .collect::<Result<Vec<_>>>()?;
    let grid = SphericalGrid::new(
        header.grid_name.clone().unwrap_or_else(|| "container".into()),
        directions,
        header.weights.clone(),
        header.nominal_order,
    )?;
    let payload = read_payload(&mut input, offset, expected)?;
    let mut ears = [Vec::with_capacity(n * t), Vec::with_capacity(n * t)];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        let (d, rest) = (i / (2 * t), i % (2 * t));
        let (ear, k) = (rest / t, rest % t);
        if !v.is_finite() {
            return Err(ContainerError::NonFinite {
                offset: offset + 4 * i as u64,
                direction: d,
                ear: EARS[ear],
                index: k,
            }
            .into());
        }
        ears[ear].push(v as f64);
    }
    let [l, r] = ears;
    let mut set = HrirSet::new(
        grid,
        header.sample_rate_hz,
        Table::from_vec(n, t, l).expect("payload shape"),
        Table::from_vec(n, t, r).expect("payload shape"),
    )?
    .with_metadata(header.metadata);
    if let Some(id) = header.subject_id {
        set = set.with_subject(id);
    }
    if let Some(head) = header.head {
        set = set.with_head(head);
    }
    Ok(set)
}

pub fn write_container(set: &HrirSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_hrirs(set))?;
    Ok(())
}

pub fn read_container(path: impl AsRef<Path>) -> Result<HrirSet> {
    let file = std::fs::File::open(path)?;
    decode_hrirs(std::io::BufReader::new(file))
}

/// Reads only the header of an `MCAH` file.
pub fn read_container_header(path: impl AsRef<Path>) -> Result<HrirHeader> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let (text, _) = read_header(&mut file, HRIR_MAGIC)?;
    parse_header(&text)
}

/// Serializes correction filters to `MCAF` bytes (f64 gains).
pub fn encode_filters(filters: &CorrectionFilterSet) -> Vec<u8> {
    let header = FilterHeader {
        grid: filters.grid().to_file(),
        sample_rate_hz: filters.sample_rate_hz(),
        ir_length_samples: filters.ir_length(),
        num_bins: filters.num_bins(),
        design: filters.design(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let bins = filters.num_bins();
    let mut payload = Vec::with_capacity(filters.grid().len() * 2 * bins * 8);
    for d in 0..filters.grid().len() {
        for ear in crate::Ear::BOTH {
            for &g in filters.gains_db(ear).row(d) {
                payload.extend_from_slice(&g.to_le_bytes());
            }
        }
    }
    let mut out = Vec::new();
    write_framed(&mut out, FILTER_MAGIC, &header, &payload).expect("writing to memory");
    out
}

pub fn decode_filters(mut input: impl Read) -> Result<CorrectionFilterSet> {
    let (text, offset) = read_header(&mut input, FILTER_MAGIC)?;
    let header: FilterHeader = parse_header(&text)?;
    let grid = SphericalGrid::from_file(header.grid)?;
    let (n, bins) = (grid.len(), header.num_bins);
    if bins != header.ir_length_samples / 2 + 1 {
        return Err(ContainerError::HeaderInvalid(format!(
            "num_bins {bins} does not match ir_length_samples {}",
            header.ir_length_samples
        ))
        .into());
    }
    let payload = read_payload(&mut input, offset, (n * 2 * bins * 8) as u64)?;
    let mut ears = [Vec::with_capacity(n * bins), Vec::with_capacity(n * bins)];
    for (i, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        let (d, rest) = (i / (2 * bins), i % (2 * bins));
        let (ear, k) = (rest / bins, rest % bins);
        if !v.is_finite() {
            return Err(ContainerError::NonFinite {
                offset: offset + 8 * i as u64,
                direction: d,
                ear: EARS[ear],
                index: k,
            }
            .into());
        }
        ears[ear].push(v);
    }
    let [l, r] = ears;
    CorrectionFilterSet::new(
        grid,
        header.sample_rate_hz,
        header.ir_length_samples,
        Table::from_vec(n, bins, l).expect("payload shape"),
        Table::from_vec(n, bins, r).expect("payload shape"),
        header.design,
    )
}

pub fn export_filters(filters: &CorrectionFilterSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_filters(filters))?;
    Ok(())
}

pub fn import_filters(path: impl AsRef<Path>) -> Result<CorrectionFilterSet> {
    let file = std::fs::File::open(path)?;
    decode_filters(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::lebedev_grid;
    use crate::Error;

    fn small_set() -> HrirSet {
        let grid = lebedev_grid(1).unwrap();
        let l = Table::from_vec(6, 4, (0..24).map(|i| i as f64 * 0.25).collect()).unwrap();
        let r = Table::from_vec(6, 4, (0..24).map(|i| -(i as f64)).collect()).unwrap();
        HrirSet::new(grid, 48000.0, l, r).unwrap().with_subject("s1")
    }

    #[test]
    fn round_trip() {
        let set = small_set();
        let bytes = encode_hrirs(&set);
        assert_eq!(&bytes[..4], b"MCAH");
        let back = decode_hrirs(&bytes[..]).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn layout_is_direction_then_ear() {
        let bytes = encode_hrirs(&small_set());
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let payload = &bytes[16 + len..];
        let at = |i: usize| f32::from_le_bytes(payload[4 * i..4 * i + 4].try_into().unwrap());
        // Direction 0: left samples 0..4, then right samples 0..4.
        assert_eq!(at(1), 0.25);
        assert_eq!(at(5), -1.0);
        // Direction 1 starts after 8 values.
        assert_eq!(at(8), 1.0);
    }

    fn container_err(bytes: &[u8]) -> ContainerError {
        match decode_hrirs(bytes).unwrap_err() {
            Error::Container(e) => e,
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn distinct_errors() {
        let good = encode_hrirs(&small_set());

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(container_err(&bad), ContainerError::BadMagic { .. }));

        let mut bad = good.clone();
        bad[4] = 7;
        assert!(matches!(
            container_err(&bad),
            ContainerError::UnsupportedVersion { version: 7, .. }
        ));

        let e = container_err(&good[..good.len() - 4]);
        assert!(e.to_string().contains("payload length mismatch"), "{e}");

        assert!(matches!(container_err(&good[..30]), ContainerError::Truncated { section: "header", .. }));
        assert!(matches!(container_err(&good[..10]), ContainerError::Truncated { section: "preamble", .. }));

        let mut bad = good.clone();
        let len = u64::from_le_bytes(bad[8..16].try_into().unwrap()) as usize;
        let pos = 16 + len + 4 * 9;
        bad[pos..pos + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        match container_err(&bad) {
            ContainerError::NonFinite { offset, direction, ear, index } => {
                assert_eq!(offset, pos as u64);
                assert_eq!((direction, ear, index), (1, "left", 1));
            }
            other => panic!("{other}"),
        }

        let mut bad = good.clone();
        bad[17] = b'!';
        assert!(matches!(container_err(&bad), ContainerError::HeaderJson { .. }));
    }
}
