//! Real spherical harmonics.
//!
//! Orthonormal real SH without Condon–Shortley phase; coefficient (n, m) is
//! stored at index n² + n + m. For m > 0 the basis uses cos(mφ), for m < 0
//! sin(|m|φ).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grids::{Direction, SphericalGrid};
use crate::spectrum::HrtfSet;
use crate::{Error, Result, Table};

/// Largest condition number accepted for least-squares systems.
pub const MAX_CONDITION: f64 = 1e8;

/// Number of coefficients of an order-N expansion, (N+1)².
pub const fn num_coefficients(order: usize) -> usize {
    (order + 1) * (order + 1)
}

/// Storage index of degree `n`, order `m` (|m| ≤ n).
pub fn index(n: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= n);
    ((n * n + n) as i64 + m) as usize
}

/// Writes all basis values up to `order` at one direction into `out`.
pub fn eval_basis_into(order: usize, direction: &Direction, out: &mut [f64]) {
    let nc = num_coefficients(order);
    assert_eq!(out.len(), nc);
    let el = direction.elevation_deg();
    let (sin_t, cos_t) = if el.abs() == 90.0 {
        (0.0, el.signum())
    } else {
        let e = el.to_radians();
        (e.cos(), e.sin())
    };
    let phi = direction.azimuth_rad();

    // Fully normalized associated Legendre values, P̄[n][m] at index n² + n + m
    // for m ≥ 0 (the m < 0 slots receive the sine terms afterwards).
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=order {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_t;
        }
        let mut p_prev2 = 0.0;
        let mut p_prev = pmm;
        out[m * m + 2 * m] = pmm;
        if m < order {
            let p = (2.0 * m as f64 + 3.0).sqrt() * cos_t * pmm;
            let n = m + 1;
            out[n * n + n + m] = p;
            p_prev2 = pmm;
            p_prev = p;
        }
        for n in (m + 2)..=order {
            let nf = n as f64;
            let mf = m as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt();
            let p = a * (cos_t * p_prev - b * p_prev2);
            out[n * n + n + m] = p;
            p_prev2 = p_prev;
            p_prev = p;
        }
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    for m in 1..=order {
        let (s, c) = (m as f64 * phi).sin_cos();
        for n in m..=order {
            let base = n * n + n;
            let p = out[base + m];
            out[base + m] = sqrt2 * p * c;
            out[base - m] = sqrt2 * p * s;
        }
    }
}

/// Basis values of one direction.
pub fn eval_basis(order: usize, direction: &Direction) -> Vec<f64> {
    let mut out = vec![0.0; num_coefficients(order)];
    eval_basis_into(order, direction, &mut out);
    out
}

/// Basis values sampled at a list of directions, `[directions × (N+1)²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShBasisMatrix {
    order: usize,
    directions: Vec<Direction>,
    values: Table<f64>,
}

impl ShBasisMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn values(&self) -> &Table<f64> {
        &self.values
    }

    pub fn value(&self, direction: usize, n: usize, m: i64) -> f64 {
        *self.values.get(direction, index(n, m))
    }

    /// `values · coefficients` for complex coefficient rows.
    fn synthesize(&self, coeffs: &Table<Complex64>) -> Table<Complex64> {
        let bins = coeffs.cols();
        Table::par_from_fn(self.values.rows(), bins, |d, row| {
            for (c, &y) in self.values.row(d).iter().enumerate() {
                if y == 0.0 {
                    continue;
                }
                for (o, &x) in row.iter_mut().zip(coeffs.row(c)) {
                    *o += x * y;
                }
            }
        })
    }

    fn synthesize_real(&self, coeffs: &Table<f64>) -> Table<f64> {
        let bins = coeffs.cols();
        Table::par_from_fn(self.values.rows(), bins, |d, row| {
            for (c, &y) in self.values.row(d).iter().enumerate() {
                for (o, &x) in row.iter_mut().zip(coeffs.row(c)) {
                    *o += x * y;
                }
            }
        })
    }
}

pub fn sh_basis(order: usize, directions: &[Direction]) -> ShBasisMatrix {
    let nc = num_coefficients(order);
    let values = Table::par_from_fn(directions.len(), nc, |d, row| {
        eval_basis_into(order, &directions[d], row)
    });
    ShBasisMatrix {
        order,
        directions: directions.to_vec(),
        values,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShMode {
    /// Quadrature when the grid carries weights, least squares otherwise.
    #[default]
    Auto,
    Quadrature,
    LeastSquares,
}

impl ShMode {
    /// Concrete mode used for `grid`.
    pub fn resolve(self, grid: &SphericalGrid) -> ShMode {
        match self {
            ShMode::Auto if grid.weights().is_some() => ShMode::Quadrature,
            ShMode::Auto => ShMode::LeastSquares,
            other => other,
        }
    }
}

impl std::str::FromStr for ShMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(ShMode::Auto),
            "quadrature" => Ok(ShMode::Quadrature),
            "least_squares" | "least-squares" | "ls" => Ok(ShMode::LeastSquares),
            _ => Err(Error::InvalidParameter(format!(
                "SH mode '{s}' (expected auto, quadrature or least_squares)"
            ))),
        }
    }
}

/// Forward transform matrix `[(N+1)² × directions]` for one grid.
#[derive(Debug, Clone)]
pub struct ShProjector {
    order: usize,
    mode: ShMode,
    matrix: Table<f64>,
}

impl ShProjector {
    pub fn new(grid: &SphericalGrid, order: usize, mode: ShMode) -> Result<Self> {
        let nc = num_coefficients(order);
        if grid.len() < nc {
            return Err(Error::TooFewDirections {
                grid: grid.name().to_owned(),
                order,
                needed: nc,
                available: grid.len(),
            });
        }
        let basis = sh_basis(order, grid.directions());
        let mode = mode.resolve(grid);
        let matrix = match mode {
            ShMode::Quadrature => {
                let w = grid
                    .weights()
                    .ok_or_else(|| Error::MissingWeights(grid.name().to_owned()))?;
                Table::par_from_fn(nc, grid.len(), |c, row| {
                    for (d, v) in row.iter_mut().enumerate() {
                        *v = 4.0 * PI * w[d] * basis.values.get(d, c);
                    }
                })
            }
            _ => {
                let y = DMatrix::from_row_slice(grid.len(), nc, basis.values.as_slice());
                // Singular values decide conditioning. The solve goes through
                // Householder QR: the SVD vectors lose ~1e-8 accuracy when
                // singular values repeat, which symmetric grids produce.
                let s = y.singular_values();
                let (smax, smin) = (s.max(), s.min());
                let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
                if !(condition <= MAX_CONDITION) {
                    return Err(Error::RankDeficient {
                        grid: grid.name().to_owned(),
                        order,
                        condition,
                    });
                }
                let qr = y.qr();
                let pinv = qr
                    .r()
                    .solve_upper_triangular(&qr.q().transpose())
                    .ok_or_else(|| Error::RankDeficient {
                        grid: grid.name().to_owned(),
                        order,
                        condition,
                    })?;
                let mut data = Vec::with_capacity(nc * grid.len());
                for r in 0..nc {
                    data.extend(pinv.row(r).iter().copied());
                }
                Table::from_vec(nc, grid.len(), data).expect("pseudo-inverse shape")
            }
        };
        Ok(Self {
            order,
            mode,
            matrix,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Concrete mode (never `Auto`).
    pub fn mode(&self) -> ShMode {
        self.mode
    }

    pub fn num_directions(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Table<f64> {
        &self.matrix
    }

    fn project(&self, values: &Table<Complex64>) -> Table<Complex64> {
        debug_assert_eq!(values.rows(), self.num_directions());
        Table::par_from_fn(self.matrix.rows(), values.cols(), |c, row| {
            for (d, &p) in self.matrix.row(c).iter().enumerate() {
                for (o, &x) in row.iter_mut().zip(values.row(d)) {
                    *o += x * p;
                }
            }
        })
    }

    /// Projects real functions given as `[directions × columns]`.
    pub fn project_real(&self, values: &Table<f64>) -> Result<Table<f64>> {
        if values.rows() != self.num_directions() {
            return Err(Error::ShapeMismatch(format!(
                "{} value rows for a projector over {} directions",
                values.rows(),
                self.num_directions()
            )));
        }
        Ok(Table::par_from_fn(self.matrix.rows(), values.cols(), |c, row| {
            for (d, &p) in self.matrix.row(c).iter().enumerate() {
                for (o, &x) in row.iter_mut().zip(values.row(d)) {
                    *o += x * p;
                }
            }
        }))
    }
}

/// Per-ear SH coefficients of a spectral set, `[(N+1)² × bins]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShCoefficients {
    order: usize,
    sample_rate_hz: f64,
    ir_length: usize,
    data: [Table<Complex64>; 2],
}

impl ShCoefficients {
    pub fn new(
        order: usize,
        sample_rate_hz: f64,
        ir_length: usize,
        left: Table<Complex64>,
        right: Table<Complex64>,
    ) -> Result<Self> {
        let nc = num_coefficients(order);
        let bins = ir_length / 2 + 1;
        for t in [&left, &right] {
            if t.shape() != (nc, bins) {
                return Err(Error::ShapeMismatch(format!(
                    "SH coefficients {:?}, expected ({nc}, {bins})",
                    t.shape()
                )));
            }
            if t.as_slice().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::NonFinite("SH coefficients".into()));
            }
        }
        Ok(Self {
            order,
            sample_rate_hz,
            ir_length,
            data: [left, right],
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_bins(&self) -> usize {
        self.ir_length / 2 + 1
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn ear(&self, ear: crate::Ear) -> &Table<Complex64> {
        &self.data[ear.index()]
    }
}

/// Forward SH transform of both ears, per frequency bin.
pub fn sh_transform(set: &HrtfSet, order: usize, mode: ShMode) -> Result<ShCoefficients> {
    let projector = ShProjector::new(set.grid(), order, mode)?;
    transform_with(set, &projector)
}

pub(crate) fn transform_with(set: &HrtfSet, projector: &ShProjector) -> Result<ShCoefficients> {
    let [l, r] = crate::Ear::BOTH.map(|ear| projector.project(set.ear(ear)));
    ShCoefficients::new(projector.order, set.sample_rate_hz(), set.ir_length(), l, r)
}

/// Evaluates coefficients at the directions of `target`.
pub fn sh_inverse(coeffs: &ShCoefficients, target: &SphericalGrid) -> Result<HrtfSet> {
    let basis = sh_basis(coeffs.order, target.directions());
    let [l, r] = crate::Ear::BOTH.map(|ear| basis.synthesize(coeffs.ear(ear)));
    HrtfSet::new(
        target.clone(),
        coeffs.sample_rate_hz,
        coeffs.ir_length,
        l,
        r,
    )
}

/// Real-valued interpolation of `[directions × columns]` data from the
/// projector's grid to `target`.
pub fn interpolate_real(
    projector: &ShProjector,
    values: &Table<f64>,
    target: &[Direction],
) -> Result<Table<f64>> {
    let coeffs = projector.project_real(values)?;
    Ok(sh_basis(projector.order, target).synthesize_real(&coeffs))
}
