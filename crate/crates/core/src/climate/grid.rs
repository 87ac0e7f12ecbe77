//! Grid coordinates, great-circle distances and a synthetic lattice field.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ClimateError;

pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub id: String,
    /// Degrees north, in `[-90, 90]`.
    pub lat: f64,
    /// Degrees east, in `[-180, 180)`.
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    points: Vec<GridPoint>,
    index: HashMap<String, usize>,
}

impl GridSpec {
    pub fn new(points: Vec<GridPoint>) -> Result<Self, ClimateError> {
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if !(-90.0..=90.0).contains(&p.lat) {
                return Err(ClimateError::BadCoordinate(p.id.clone(), format!("latitude {}", p.lat)));
            }
            if !(-180.0..180.0).contains(&p.lon) {
                return Err(ClimateError::BadCoordinate(p.id.clone(), format!("longitude {}", p.lon)));
            }
            if index.insert(p.id.clone(), i).is_some() {
                return Err(ClimateError::DuplicatePoint(p.id.clone()));
            }
        }
        Ok(GridSpec { points, index })
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: &str) -> Option<&GridPoint> {
        self.index.get(id).map(|&i| &self.points[i])
    }

    pub fn ids(&self) -> Vec<String> {
        self.points.iter().map(|p| p.id.clone()).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ClimateError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["node", "lat", "lon"])?;
        for p in &self.points {
            wr.write_record([p.id.clone(), p.lat.to_string(), p.lon.to_string()])?;
        }
        wr.flush().map_err(|e| ClimateError::Csv(e.to_string()))
    }
}

/// Great-circle distance on a spherical earth.
pub fn haversine_km(a: &GridPoint, b: &GridPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// `rows × cols` points `step` degrees apart, centred on the equator and the
/// prime meridian, named `X1`, `X2`, ... row by row.
pub fn lattice_grid(rows: usize, cols: usize, step: f64) -> Result<GridSpec, ClimateError> {
    let lat0 = -(rows as f64 - 1.0) * step / 2.0;
    let lon0 = -(cols as f64 - 1.0) * step / 2.0;
    let points = (0..rows * cols)
        .map(|k| GridPoint {
            id: format!("X{}", k + 1),
            lat: lat0 + (k / cols) as f64 * step,
            lon: lon0 + (k % cols) as f64 * step,
        })
        .collect();
    GridSpec::new(points)
}

/// Monthly series on a `rows × cols` lattice: a Gaussian Markov random field
/// whose precision has unit diagonal and `-coupling` between 4-neighbours,
/// plus a seasonal cycle whose amplitude grows with latitude. Returns one
/// column per point with `12 · years` rows.
pub fn lattice_series(grid: &GridSpec, rows: usize, cols: usize, years: usize, coupling: f64, seed: u64) -> Result<Vec<Vec<f64>>, ClimateError> {
    let p = rows * cols;
    if grid.len() != p {
        return Err(ClimateError::ColumnMismatch(format!("{p} lattice points, {} grid points", grid.len())));
    }
    let mut precision = DMatrix::<f64>::identity(p, p);
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            if c + 1 < cols {
                precision[(k, k + 1)] = -coupling;
                precision[(k + 1, k)] = -coupling;
            }
            if r + 1 < rows {
                precision[(k, k + cols)] = -coupling;
                precision[(k + cols, k)] = -coupling;
            }
        }
    }
    let chol = precision
        .cholesky()
        .ok_or_else(|| ClimateError::BadCoordinate("lattice".into(), format!("coupling {coupling} is not positive definite")))?;
    // x = L⁻ᵀ z has covariance (L Lᵀ)⁻¹
    let lt = chol.l().transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 12 * years;
    let mut cols_out = vec![Vec::with_capacity(n); p];
    for t in 0..n {
        let z = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        let x = lt.solve_upper_triangular(&z).expect("cholesky factor is invertible");
        let phase = (t % 12) as f64 / 12.0 * std::f64::consts::TAU;
        for (k, col) in cols_out.iter_mut().enumerate() {
            let amplitude = 2.0 + grid.points()[k].lat.abs() / 10.0;
            col.push(15.0 + amplitude * phase.cos() + x[k]);
        }
    }
    Ok(cols_out)
}

/// Writes a series CSV: header of ids, then one row per month.
pub fn write_series<W: Write>(ids: &[String], columns: &[Vec<f64>], w: W) -> Result<(), ClimateError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(ids)?;
    let n = columns.first().map_or(0, Vec::len);
    for t in 0..n {
        wr.write_record(columns.iter().map(|c| c[t].to_string()))?;
    }
    wr.flush().map_err(|e| ClimateError::Csv(e.to_string()))
}
