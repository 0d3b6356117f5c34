use mca::container::{
    export_filters, import_filters, read_container, read_container_header, write_container, FILTER_MAGIC,
};
use mca::grids::{great_circle_distance, lebedev_grid};
use mca::pipeline::{mca_upsample, CorrectionFilterSet, McaConfig, PhaseMode};
use mca::sphere::{synth_sphere_hrirs, HeadModel};
use mca::Ear;

fn bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

#[test]
fn sphere_set_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let head = HeadModel::new(0.0875).unwrap();
    let set = synth_sphere_hrirs(&head, &lebedev_grid(3).unwrap(), 256, 44_100.0).unwrap();
    let path = dir.path().join("sphere.mcah");
    write_container(&set, &path).unwrap();
    let back = read_container(&path).unwrap();
    for ear in Ear::BOTH {
        let single: Vec<f64> = set.ear(ear).as_slice().iter().map(|&v| v as f32 as f64).collect();
        assert_eq!(bits(back.ear(ear).as_slice()), bits(&single));
    }
    assert_eq!(back.metadata(), set.metadata());

    // Stored data are float32, so a second pass is bit-exact end to end.
    let again = dir.path().join("again.mcah");
    write_container(&back, &again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    assert_eq!(read_container(&again).unwrap(), back);
}

#[test]
fn header_directions_match_the_generating_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = lebedev_grid(3).unwrap();
    let set = synth_sphere_hrirs(&HeadModel::new(0.0875).unwrap(), &grid, 256, 44_100.0).unwrap();
    let path = dir.path().join("s.mcah");
    write_container(&set, &path).unwrap();
    let header = read_container_header(&path).unwrap();
    assert_eq!(header.num_directions, 26);
    assert_eq!(header.ir_length_samples, 256);
    for ([az, el], d) in header.directions.iter().zip(grid.directions()) {
        assert!((az - d.azimuth_deg()).abs() < 1e-9 && (el - d.elevation_deg()).abs() < 1e-9);
    }
    let back = read_container(&path).unwrap();
    for (a, b) in back.grid().directions().iter().zip(grid.directions()) {
        assert!(great_circle_distance(a, b) < 1e-9);
    }
    assert_eq!(back.grid().weights(), grid.weights());
}

#[test]
fn filter_dumps_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let head = HeadModel::new(0.0889).unwrap();
    let sparse = synth_sphere_hrirs(&head, &lebedev_grid(3).unwrap(), 256, 44_100.0).unwrap();
    let mut cfg = McaConfig::new(3, head, lebedev_grid(5).unwrap()).unwrap();
    cfg.phase_mode = PhaseMode::Zero;
    let filters = mca_upsample(&sparse, &cfg).unwrap().filters;
    assert!(filters.max_abs_gain_db() > 0.0);

    let path = dir.path().join("f.mcaf");
    export_filters(&filters, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes[..4], FILTER_MAGIC);
    let back = import_filters(&path).unwrap();
    assert_eq!(back, filters);
    assert_eq!(format!("{:.2}", back.aliasing_freq_hz() / 1000.0), "1.84");
    assert_eq!(back.design(), filters.design());

    let copy = dir.path().join("copy.mcaf");
    export_filters(&back, &copy).unwrap();
    assert_eq!(std::fs::read(&copy).unwrap(), bytes);
}

#[test]
fn null_filters_have_an_all_zero_payload() {
    let dir = tempfile::tempdir().unwrap();
    let head = HeadModel::new(0.0875).unwrap();
    let sparse = synth_sphere_hrirs(&head, &lebedev_grid(3).unwrap(), 128, 44_100.0).unwrap();
    let mut cfg = McaConfig::new(3, head, lebedev_grid(4).unwrap()).unwrap();
    cfg.correction_enabled = false;
    let filters: CorrectionFilterSet = mca_upsample(&sparse, &cfg).unwrap().filters;
    let path = dir.path().join("null.mcaf");
    export_filters(&filters, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let payload = &bytes[16 + header_len..];
    assert_eq!(payload.len(), 38 * 2 * 65 * 8);
    assert!(payload.iter().all(|&b| b == 0));
}
