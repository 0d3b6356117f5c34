use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn mca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mca"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = mca(args);
    assert!(o.status.success(), "mca {args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn code(args: &[&str]) -> i32 {
    mca(args).status.code().expect("exit code")
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    /// Sphere HRIRs on Lebedev order 3.
    fn sparse(&self, radius: &str) -> String {
        let out = self.s("sparse.mcah");
        ok(&["synth-sphere", "--radius", radius, "--grid", "lebedev:3", "-o", &out]);
        out
    }
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        vec!["--help"],
        vec!["synth-sphere", "--help"],
        vec!["grids", "--help"],
        vec!["grids", "list", "--help"],
        vec!["grids", "show", "--help"],
        vec!["grids", "export", "--help"],
        vec!["upsample", "--help"],
        vec!["evaluate", "--help"],
        vec!["info", "--help"],
    ] {
        let out = ok(&sub);
        assert!(out.contains("Usage:"), "{sub:?}");
    }
}

#[test]
fn unknown_flags_exit_with_validation_code() {
    assert_eq!(code(&["upsample", "--bogus"]), 3);
    assert_eq!(code(&["frobnicate"]), 3);
    assert_eq!(code(&["synth-sphere", "--radius", "0.08", "--head", "0.15,0.2,0.2", "-o", "x"]), 3);
}

#[test]
fn failure_classes_map_to_exit_codes() {
    let ws = Workspace::new();
    assert_eq!(code(&["upsample", &ws.s("missing.mcah"), "-o", &ws.s("out.mcah")]), 2);
    assert_eq!(code(&["synth-sphere", "-o", &ws.s("nodir/out.mcah")]), 2);
    assert_eq!(code(&["synth-sphere", "--radius", "0.3", "-o", &ws.s("a.mcah")]), 3);
    assert_eq!(code(&["synth-sphere", "--grid", "lebedev:99", "-o", &ws.s("a.mcah")]), 3);
    assert_eq!(code(&["synth-sphere", "--ir-length", "64", "-o", &ws.s("a.mcah")]), 4);
    std::fs::write(ws.path("junk.mcah"), b"not a container").unwrap();
    assert_eq!(code(&["info", &ws.s("junk.mcah")]), 3);
    assert_eq!(code(&["upsample", &ws.s("junk.mcah"), "-o", &ws.s("b.mcah")]), 3);
    let sparse = ws.sparse("0.0875");
    assert_eq!(code(&["upsample", &sparse, "-N", "4", "-o", &ws.s("b.mcah")]), 3);
    assert_eq!(code(&["upsample", &sparse, "--phase", "linear", "-o", &ws.s("b.mcah")]), 3);
}

#[test]
fn upsample_reports_aliasing_frequency() {
    let ws = Workspace::new();
    let sparse = ws.sparse("0.0889");
    let out = ok(&["upsample", &sparse, "--target", "lebedev:5", "-o", &ws.s("dense.mcah")]);
    assert!(out.contains("f_A = 1.84 kHz"), "{out}");
    assert!(out.contains("sparse grid: lebedev:3 (26 directions), N = 3"), "{out}");
    assert!(out.contains("head radius: 8.89 cm (input)"), "{out}");
    assert!(out.contains("sphere check"), "{out}");
}

#[test]
fn null_correction_output_equals_uncorrected_bitwise() {
    let ws = Workspace::new();
    let sparse = ws.sparse("0.0875");
    let (c, u) = (ws.s("c.mcah"), ws.s("u.mcah"));
    ok(&[
        "upsample", &sparse, "--target", "lebedev:5", "--phase", "zero", "--limit", "off",
        "--no-correction", "--emit-uncorrected", &u, "-o", &c,
    ]);
    assert_eq!(read(&c), read(&u));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let ws = Workspace::new();
    let sparse = ws.sparse("0.0875");
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let (o, f) = (ws.s(&format!("d{threads}.mcah")), ws.s(&format!("f{threads}.mcaf")));
        ok(&[
            "upsample", &sparse, "--threads", threads, "--target", "lebedev:7", "--emit-filters", &f,
            "-o", &o,
        ]);
        let (csv, json) = (ws.s(&format!("r{threads}.csv")), ws.s(&format!("r{threads}.json")));
        ok(&["evaluate", "--threads", threads, &o, &o, "--csv", &csv, "--summary", &json]);
        files.push([read(o), read(f), read(csv), read(json)]);
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn identical_sets_give_an_all_zero_report() {
    let ws = Workspace::new();
    let sparse = ws.sparse("0.0875");
    let csv = ws.s("r.csv");
    let json = ok(&["evaluate", &sparse, &sparse, "--csv", &csv]);
    let summary: serde_json::Value = serde_json::from_str(&json).unwrap();
    let magnitude = &summary["magnitude"];
    assert_eq!(magnitude["global_mean_db"], 0.0);
    assert!(magnitude.get("frontal_25deg").is_some());
    assert!(magnitude.get("contralateral_25deg").is_some());
    assert_eq!(summary["binaural"]["itd_max_us"], 0.0);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("subject,ear,az_deg,el_deg,band_fc_hz,metric,value"));
    let mut rows = 0;
    for line in lines {
        assert_eq!(line.rsplit(',').next(), Some("0"), "{line}");
        rows += 1;
    }
    // 26 directions x 2 ears x 41 bands, plus ILD and ITD per direction.
    assert_eq!(rows, 26 * 2 * 41 + 26 * 2);
}

#[test]
fn horizontal_targets_get_jnd_summaries() {
    let ws = Workspace::new();
    let sparse = ws.sparse("0.0875");
    let (dense, reference) = (ws.s("h.mcah"), ws.s("href.mcah"));
    ok(&["upsample", &sparse, "--target", "horizontal:10", "-o", &dense]);
    ok(&["synth-sphere", "--radius", "0.0875", "--grid", "horizontal:10", "-o", &reference]);
    let json = ok(&["evaluate", &dense, &reference]);
    let summary: serde_json::Value = serde_json::from_str(&json).unwrap();
    let horizontal = &summary["binaural"]["horizontal"];
    assert_eq!(horizontal["num_directions"], 36);
    assert!(horizontal["itd_jnd_exceedance_fraction"].as_f64().unwrap() <= 1.0);
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let ws = Workspace::new();
    let sparse = ws.sparse("0.0875");
    let cfg = ws.path("cfg.json");
    std::fs::write(&cfg, r#"{"radius_m": 0.0889, "target": "lebedev:5", "order": 2}"#).unwrap();
    let cfg = cfg.to_string_lossy().into_owned();
    let out = ok(&["upsample", &sparse, "--config", &cfg, "-o", &ws.s("a.mcah")]);
    assert!(out.contains("head radius: 8.89 cm (config)"), "{out}");
    assert!(out.contains("N = 2"), "{out}");
    assert!(out.contains("target grid: lebedev:5"), "{out}");
    let out = ok(&["upsample", &sparse, "--config", &cfg, "-N", "3", "--radius", "0.09", "-o", &ws.s("b.mcah")]);
    assert!(out.contains("head radius: 9.00 cm (flags)"), "{out}");
    assert!(out.contains("N = 3"), "{out}");

    let bad = ws.path("bad.json");
    std::fs::write(&bad, r#"{"radius_m": 0.0889, "head": {"width_m": 0.15, "height_m": 0.2, "depth_m": 0.2}}"#).unwrap();
    assert_eq!(code(&["upsample", &sparse, "--config", &bad.to_string_lossy(), "-o", &ws.s("c.mcah")]), 3);
    std::fs::write(&bad, r#"{"ordr": 3}"#).unwrap();
    assert_eq!(code(&["grids", "list", "--config", &bad.to_string_lossy()]), 3);
}

#[test]
fn info_describes_both_formats() {
    let ws = Workspace::new();
    let sparse = ws.sparse("0.0875");
    let out = ok(&["info", &sparse]);
    assert!(out.contains("format: MCAH"));
    assert!(out.contains("generator: rigid-sphere"));
    let filters = ws.s("f.mcaf");
    ok(&["upsample", &sparse, "--target", "lebedev:4", "--emit-filters", &filters, "-o", &ws.s("d.mcah")]);
    let out = ok(&["info", &filters]);
    assert!(out.contains("format: MCAF"));
    assert!(out.contains("grid: lebedev:4 (38 directions)"), "{out}");
}

#[test]
fn grids_export_round_trips() {
    let ws = Workspace::new();
    let out = ws.s("f900.json");
    ok(&["grids", "export", "fliege:900", "-o", &out]);
    let grid = mca::grids::SphericalGrid::load(&out).unwrap();
    assert_eq!(grid.len(), 900);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), grid.to_json());
    let shown = ok(&["grids", "show", &out]);
    assert!(shown.contains("directions: 900"));
    let listed = ok(&["grids", "list"]);
    assert!(listed.contains("lebedev:15: 350"));
}
