use std::f64::consts::PI;
use std::path::Path;

use mca::grids::{
    fliege_exact_order, fliege_grid, lebedev_grid, supported_fliege_sizes, supported_lebedev_orders, SphericalGrid,
};
use mca::sh::sh_basis;
use sha2::{Digest, Sha256};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn embedded_tables_match_their_checksums() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let sums = std::fs::read_to_string(data.join("SHA256SUMS")).unwrap();
    let mut checked = 0;
    for line in sums.lines().filter(|l| !l.trim().is_empty()) {
        let (expected, name) = line.split_once("  ").expect("sha256sum format");
        let bytes = std::fs::read(data.join(name)).unwrap();
        assert_eq!(hex(&Sha256::digest(&bytes)), expected, "{name}");
        checked += 1;
    }
    assert_eq!(checked, 2);
}

/// Largest deviation of the quadrature Gram matrix from the identity.
fn gram_error(grid: &SphericalGrid, order: usize) -> f64 {
    let w = grid.weights().expect("weighted grid");
    let y = sh_basis(order, grid.directions());
    let y = y.values();
    let nc = y.cols();
    let mut worst: f64 = 0.0;
    for a in 0..nc {
        for b in a..nc {
            let s: f64 = (0..grid.len()).map(|d| w[d] * y.get(d, a) * y.get(d, b)).sum::<f64>() * 4.0 * PI;
            let expected = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((s - expected).abs());
        }
    }
    worst
}

#[test]
fn lebedev_grids_are_orthonormal_up_to_their_order() {
    for order in supported_lebedev_orders().into_iter().filter(|&n| n <= 15) {
        let grid = lebedev_grid(order).unwrap();
        assert_eq!(grid.nominal_order(), Some(order));
        let err = gram_error(&grid, order);
        assert!(err < 1e-8, "lebedev:{order}: {err:e}");
    }
}

#[test]
fn fliege_grids_are_orthonormal_up_to_half_their_exact_order() {
    for n in supported_fliege_sizes() {
        let grid = fliege_grid(n).unwrap();
        let order = fliege_exact_order(n).unwrap() / 2;
        let err = gram_error(&grid, order);
        assert!(err < 1e-8, "fliege:{n} at order {order}: {err:e}");
        let sum: f64 = grid.weights().unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
    }
}

#[test]
fn standard_grid_sizes() {
    assert_eq!(lebedev_grid(1).unwrap().len(), 6);
    assert_eq!(lebedev_grid(3).unwrap().len(), 26);
    assert_eq!(lebedev_grid(15).unwrap().len(), 350);
    let dense = fliege_grid(900).unwrap();
    assert_eq!(dense.nominal_order(), Some(29));
    assert_eq!(fliege_grid(4).unwrap().nominal_order(), Some(1));
}
