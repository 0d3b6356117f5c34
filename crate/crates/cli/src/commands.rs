use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use mca::container::{
    export_filters, import_filters, read_container, read_container_header, write_container,
    FILTER_MAGIC, HRIR_MAGIC,
};
use mca::grids::{
    fliege_exact_order, lebedev_grid, supported_fliege_sizes, supported_lebedev_orders, GridSpec,
    SphericalGrid,
};
use mca::metrics::{evaluate as evaluate_sets, EvaluationOptions};
use mca::pipeline::{mca_upsample, AuditoryBranch, Limiter, McaConfig, PhaseMode};
use mca::sh::ShMode;
use mca::sphere::{synth_sphere_hrirs, HeadDimensions, HeadModel};
use mca::{Ear, HrirSet, HrtfSet};

use crate::config::FileConfig;
use crate::{EvaluateArgs, GridsCommand, HeadArgs, InfoArgs, Invalid, SynthArgs, UpsampleArgs};

const DEFAULT_RADIUS_M: f64 = 0.0875;

/// `println!` that returns write errors (closed pipes) instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout(), $($arg)*)?
    };
}

fn check_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("input file {} does not exist", path.display()),
        )
        .into());
    }
    Ok(())
}

fn check_output(path: &Path) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        if !dir.is_dir() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("output directory {} does not exist", dir.display()),
            )
            .into());
        }
    }
    if path.is_dir() {
        return Err(Invalid(format!("output {} is a directory", path.display())).into());
    }
    Ok(())
}

fn parse<T: std::str::FromStr<Err = mca::Error>>(text: &str) -> Result<T> {
    Ok(text.parse::<T>()?)
}

/// Radius source, from most to least specific.
enum RadiusSource {
    Radius(f64),
    Dimensions(HeadDimensions),
}

/// Flags, then config, then `fallback` (e.g. the container's own head).
fn head_model(args: &HeadArgs, file: &FileConfig, fallback: Option<RadiusSource>) -> Result<(HeadModel, String)> {
    let from_flags = match (&args.radius, &args.head) {
        (Some(r), _) => Some(RadiusSource::Radius(*r)),
        (None, Some(d)) => Some(RadiusSource::Dimensions(HeadDimensions {
            width_m: d[0],
            height_m: d[1],
            depth_m: d[2],
        })),
        (None, None) => None,
    };
    let from_file = file
        .radius_m
        .map(RadiusSource::Radius)
        .or(file.head.map(RadiusSource::Dimensions));
    let (source, origin) = match (from_flags, from_file, fallback) {
        (Some(s), _, _) => (Some(s), "flags"),
        (None, Some(s), _) => (Some(s), "config"),
        (None, None, Some(s)) => (Some(s), "input"),
        (None, None, None) => (None, "default"),
    };
    let radius = match source {
        Some(RadiusSource::Radius(r)) => r,
        Some(RadiusSource::Dimensions(d)) => d.optimal_radius()?,
        None => DEFAULT_RADIUS_M,
    };
    let mut head = HeadModel {
        radius_m: radius,
        allow_any_radius: args.allow_any_radius || file.allow_any_radius.unwrap_or(false),
        ..HeadModel::new(DEFAULT_RADIUS_M)?
    };
    if let Some(c) = args.speed_of_sound.or(file.speed_of_sound_mps) {
        head.speed_of_sound_mps = c;
    }
    if let Some(az) = file.ear_azimuths_deg {
        head.ear_azimuths_deg = az;
    }
    if let Some(el) = file.ear_elevations_deg {
        head.ear_elevations_deg = el;
    }
    head.validate()?;
    Ok((head, origin.to_owned()))
}

fn describe(grid: &SphericalGrid) -> String {
    format!("{} ({} directions)", grid.name(), grid.len())
}

pub fn synth_sphere(args: &SynthArgs, file: &FileConfig) -> Result<()> {
    check_output(&args.output)?;
    let (head, _) = head_model(&args.head, file, None)?;
    let spec = args.grid.clone().or(file.grid.clone()).unwrap_or_else(|| "lebedev:3".into());
    let grid = parse::<GridSpec>(&spec)?.resolve()?;
    let ir_length = args.ir_length.or(file.ir_length).unwrap_or(512);
    let fs = args.sample_rate.or(file.sample_rate_hz).unwrap_or(44_100.0);
    let start = Instant::now();
    let mut set = synth_sphere_hrirs(&head, &grid, ir_length, fs)?;
    if let Some(id) = args.subject.clone().or(file.subject.clone()) {
        set = set.with_subject(id);
    }
    write_container(&set, &args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;
    say!("grid: {}", describe(&grid));
    say!("head radius: {:.2} cm", head.radius_m * 100.0);
    say!("wrote {}", args.output.display());
    eprintln!("synth-sphere took {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn grids(cmd: &GridsCommand) -> Result<()> {
    match cmd {
        GridsCommand::List => {
            say!("lebedev (order: points)");
            for n in supported_lebedev_orders() {
                say!("  lebedev:{n}: {}", lebedev_grid(n)?.len());
            }
            say!("fliege (points: exact SH order)");
            for p in supported_fliege_sizes() {
                let exact = fliege_exact_order(p).map_or("-".to_owned(), |n| n.to_string());
                say!("  fliege:{p}: {exact}");
            }
            say!("horizontal:STEP (STEP must divide 360)");
        }
        GridsCommand::Show { spec } => {
            let grid = parse::<GridSpec>(spec)?.resolve()?;
            say!("name: {}", grid.name());
            say!("directions: {}", grid.len());
            match grid.nominal_order() {
                Some(n) => say!("nominal order: {n}"),
                None => say!("nominal order: none"),
            }
            say!("weights: {}", if grid.weights().is_some() { "yes" } else { "no" });
        }
        GridsCommand::Export { spec, output } => {
            check_output(output)?;
            let grid = parse::<GridSpec>(spec)?.resolve()?;
            grid.save(output)
                .with_context(|| format!("writing {}", output.display()))?;
            say!("wrote {} to {}", describe(&grid), output.display());
        }
    }
    Ok(())
}

fn upsample_config(args: &UpsampleArgs, file: &FileConfig, input: &HrirSet) -> Result<(McaConfig, String)> {
    let fallback = input
        .head()
        .copied()
        .map(RadiusSource::Dimensions)
        .or_else(|| {
            input
                .metadata()
                .get("head_radius_m")
                .and_then(|r| r.parse().ok())
                .map(RadiusSource::Radius)
        });
    let (head, origin) = head_model(&args.head, file, fallback)?;
    let order = match args.order.or(file.order).or(input.grid().nominal_order()) {
        Some(n) => n,
        None => {
            return Err(Invalid(format!(
                "grid '{}' has no nominal order; pass --order",
                input.grid().name()
            ))
            .into())
        }
    };
    let target = args.target.clone().or(file.target.clone()).unwrap_or_else(|| "fliege:900".into());
    let target = parse::<GridSpec>(&target)?.resolve()?;
    let mut cfg = McaConfig::new(order, head, target)?;
    cfg.enable_aliasing_fade = !args.no_fade && file.aliasing_fade.unwrap_or(true);
    cfg.limiter = match args.limit.as_deref() {
        Some("off") => None,
        Some(v) => {
            let limit: f64 = v
                .parse()
                .map_err(|_| Invalid(format!("--limit expects a number or 'off', got '{v}'")))?;
            let knee = args.knee.or(file.limiter.map(|l| l.knee_db)).unwrap_or(0.0);
            Some(Limiter::new(limit, knee)?)
        }
        None => match file.limiter {
            Some(l) => Some(Limiter::new(l.limit_db, args.knee.unwrap_or(l.knee_db))?),
            None => None,
        },
    };
    if let Some(p) = args.phase.as_deref().or(file.phase.as_deref()) {
        cfg.phase_mode = parse::<PhaseMode>(p)?;
    }
    if let Some(m) = args.sh_mode.as_deref().or(file.sh_mode.as_deref()) {
        cfg.sh_mode = parse::<ShMode>(m)?;
    }
    if let Some(b) = args.auditory_branch.as_deref().or(file.auditory_branch.as_deref()) {
        cfg.auditory_branch = parse::<AuditoryBranch>(b)?;
    }
    if let Some(bands) = file.bands {
        cfg.bands = bands;
    }
    cfg.correction_enabled = !args.no_correction && file.correction.unwrap_or(true);
    Ok((cfg, origin))
}

/// Largest |dB| difference between two spectral sets.
fn max_deviation_db(a: &HrtfSet, b: &HrtfSet) -> f64 {
    let mut worst = 0.0f64;
    for ear in Ear::BOTH {
        for (x, y) in a.ear(ear).as_slice().iter().zip(b.ear(ear).as_slice()) {
            worst = worst.max((20.0 * (x.norm() / y.norm()).log10()).abs());
        }
    }
    worst
}

pub fn upsample(args: &UpsampleArgs, file: &FileConfig) -> Result<()> {
    check_input(&args.input)?;
    check_output(&args.output)?;
    for path in [&args.emit_uncorrected, &args.emit_filters].into_iter().flatten() {
        check_output(path)?;
    }
    let start = Instant::now();
    let input = read_container(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let (cfg, origin) = upsample_config(args, file, &input)?;
    say!("f_A = {:.2} kHz", cfg.aliasing_frequency() / 1000.0);
    say!("sparse grid: {}, N = {}", describe(input.grid()), cfg.sparse_order);
    say!("target grid: {}", describe(&cfg.target_grid));
    say!("head radius: {:.2} cm ({origin})", cfg.head.radius_m * 100.0);

    let out = mca_upsample(&input, &cfg)?;
    say!("max |correction gain|: {:.4} dB", out.filters.max_abs_gain_db());
    if input.metadata().get("generator").map(String::as_str) == Some("rigid-sphere") {
        let reference = synth_sphere_hrirs(&cfg.head, &cfg.target_grid, input.ir_length(), input.sample_rate_hz())?
            .to_hrtf()?;
        say!(
            "sphere check, max per-bin deviation from analytic STF: corrected {:.4} dB, uncorrected {:.4} dB",
            max_deviation_db(&out.corrected_spectra, &reference),
            max_deviation_db(&out.uncorrected_spectra, &reference)
        );
    }
    write_container(&out.dense_corrected, &args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;
    say!("wrote {}", args.output.display());
    if let Some(path) = &args.emit_uncorrected {
        write_container(&out.dense_uncorrected, path)
            .with_context(|| format!("writing {}", path.display()))?;
        say!("wrote {}", path.display());
    }
    if let Some(path) = &args.emit_filters {
        export_filters(&out.filters, path).with_context(|| format!("writing {}", path.display()))?;
        say!("wrote {}", path.display());
    }
    eprintln!("upsample took {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs, file: &FileConfig) -> Result<()> {
    check_input(&args.test)?;
    check_input(&args.reference)?;
    for path in [&args.csv, &args.summary].into_iter().flatten() {
        check_output(path)?;
    }
    let start = Instant::now();
    let test = read_container(&args.test).with_context(|| format!("reading {}", args.test.display()))?;
    let reference = read_container(&args.reference)
        .with_context(|| format!("reading {}", args.reference.display()))?;
    let mut options = EvaluationOptions::default();
    if let Some(bands) = file.bands {
        options.bands = bands;
    }
    if let Some(f) = args.high_band_min_hz.or(file.high_band_min_hz) {
        options.high_band_min_hz = f;
    }
    options.binaural = !args.no_binaural && file.binaural.unwrap_or(true);
    if let Some(t) = args.horizontal_tolerance.or(file.horizontal_tolerance_deg) {
        options.horizontal_tolerance_deg = t;
    }
    let report = evaluate_sets(&test, &reference, &options)?;
    if let Some(path) = &args.csv {
        let out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        report.write_csv(out)?;
        if args.summary.is_some() {
            say!("wrote {}", path.display());
        } else {
            eprintln!("wrote {}", path.display());
        }
    }
    let json = report.summary_json();
    match &args.summary {
        Some(path) => {
            std::fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?;
            let s = report.summary();
            say!("global mean dG (left ear): {:.4} dB", s.magnitude.global_mean_db);
            for (name, region) in [
                ("frontal_25deg", &s.magnitude.frontal_25deg),
                ("contralateral_25deg", &s.magnitude.contralateral_25deg),
            ] {
                if let Some(r) = region {
                    say!("{name} mean dG: {:.4} dB ({} directions)", r.mean_db, r.num_directions);
                }
            }
            say!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(json.as_bytes())?,
    }
    eprintln!("evaluate took {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn info(args: &InfoArgs) -> Result<()> {
    check_input(&args.file)?;
    let mut magic = [0u8; 4];
    File::open(&args.file)?.read_exact(&mut magic)?;
    if magic == HRIR_MAGIC {
        let h = read_container_header(&args.file)?;
        say!("format: MCAH (HRIR set)");
        say!("grid: {} ({} directions)", h.grid_name.as_deref().unwrap_or("unnamed"), h.num_directions);
        if let Some(n) = h.nominal_order {
            say!("nominal order: {n}");
        }
        say!("sample rate: {} Hz", h.sample_rate_hz);
        say!("IR length: {} samples", h.ir_length_samples);
        say!("weights: {}", if h.weights.is_some() { "yes" } else { "no" });
        if let Some(id) = &h.subject_id {
            say!("subject: {id}");
        }
        if let Some(d) = &h.head {
            say!("head: {} x {} x {} m", d.width_m, d.height_m, d.depth_m);
        }
        for (k, v) in &h.metadata {
            say!("{k}: {v}");
        }
    } else if magic == FILTER_MAGIC {
        let f = import_filters(&args.file)?;
        say!("format: MCAF (correction filters)");
        say!("grid: {} ({} directions)", f.grid().name(), f.grid().len());
        say!("sample rate: {} Hz", f.sample_rate_hz());
        say!("bins: {}", f.num_bins());
        say!("aliasing frequency: {:.3} Hz", f.aliasing_freq_hz());
        say!("fade low edge: {:.3} Hz", f.fade_low_hz());
        say!("phase: {:?}", f.phase_mode());
        say!("max |gain|: {:.4} dB", f.max_abs_gain_db());
    } else {
        return Err(Invalid(format!("{}: not an MCAH or MCAF file", args.file.display())).into());
    }
    Ok(())
}
