//! Speed fields `f(x)`, running costs `K(x)` and their global bounds.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Bounds, Grid};

/// Largest admissible grayscale intensity.
pub const MAX_INTENSITY: f64 = 755.0;
/// Speed assigned to a zero-intensity pixel.
pub const MIN_PIXEL_SPEED: f64 = 0.001;

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `base + amplitude * prod_k sin(frequency * pi * x_k)` over all coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sinusoid {
    pub base: f64,
    pub amplitude: f64,
    pub frequency: f64,
}

impl Sinusoid {
    fn value(&self, x: &[f64]) -> f64 {
        let w = self.frequency * std::f64::consts::PI;
        let prod: f64 = x.iter().map(|&xi| (w * xi).sin()).product();
        self.base + self.amplitude * prod
    }
}

/// Piecewise-constant speed over a `rows x cols` pixel raster covering the
/// grid bounds. Columns run along `x`, rows along `y`, and row 0 sits at the
/// lower `y` edge.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelSpeed {
    rows: usize,
    cols: usize,
    speed: Vec<f64>,
    bounds: Bounds,
}

impl PixelSpeed {
    fn value(&self, x: &[f64]) -> f64 {
        let pick = |v: f64, lo: f64, n: usize| {
            let r = ((v - lo) / self.bounds.side * n as f64).floor();
            (r.max(0.0) as usize).min(n - 1)
        };
        let c = pick(x[0], self.bounds.min[0], self.cols);
        let r = pick(x[1], self.bounds.min[1], self.rows);
        self.speed[r * self.cols + c]
    }

    fn extrema(&self) -> (f64, f64) {
        self.speed
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Running cost `K(x) > 0` of the cost-weighted problem `|grad u| f0 = K`.
#[derive(Clone)]
pub enum CostField {
    Constant(f64),
    /// `1 + sum_i a_i exp(-|x - c_i|^2 / w_i)`.
    Observers(Vec<Observer>),
    Custom(PointFn),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observer {
    pub center: Vec<f64>,
    pub amplitude: f64,
    pub width: f64,
}

impl CostField {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            CostField::Constant(c) => *c,
            CostField::Observers(obs) => {
                1.0 + obs
                    .iter()
                    .map(|o| {
                        let d2: f64 = o.center.iter().zip(x).map(|(c, v)| (c - v) * (c - v)).sum();
                        o.amplitude * (-d2 / o.width).exp()
                    })
                    .sum::<f64>()
            }
            CostField::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for CostField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostField::Constant(c) => write!(f, "Constant({c})"),
            CostField::Observers(o) => f.debug_tuple("Observers").field(o).finish(),
            CostField::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Clone)]
pub enum SpeedKind {
    Constant(f64),
    Sinusoid(Sinusoid),
    Pixels(PixelSpeed),
    CostModified { base: Box<SpeedField>, cost: CostField },
    Custom(PointFn),
}

/// An evaluable speed together with bounds `0 < F1 <= f <= F2`.
#[derive(Clone)]
pub struct SpeedField {
    kind: SpeedKind,
    f1: f64,
    f2: f64,
}

impl fmt::Debug for SpeedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            SpeedKind::Constant(c) => format!("Constant({c})"),
            SpeedKind::Sinusoid(s) => format!("{s:?}"),
            SpeedKind::Pixels(p) => format!("Pixels({}x{})", p.rows, p.cols),
            SpeedKind::CostModified { base, cost } => format!("CostModified({base:?}, {cost:?})"),
            SpeedKind::Custom(_) => "Custom(..)".to_string(),
        };
        f.debug_struct("SpeedField")
            .field("kind", &kind)
            .field("f1", &self.f1)
            .field("f2", &self.f2)
            .finish()
    }
}

impl SpeedField {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::BadSpeed(format!("constant speed {c} must be positive")));
        }
        Ok(SpeedField {
            kind: SpeedKind::Constant(c),
            f1: c,
            f2: c,
        })
    }

    /// `base + A * prod sin(k pi x_i)`; bounds are `base -/+ |A|`.
    pub fn sinusoid(base: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        let (f1, f2) = (base - amplitude.abs(), base + amplitude.abs());
        if !(f1 > 0.0 && f2.is_finite()) {
            return Err(Error::BadSpeed(format!(
                "sinusoid {base} +/- {amplitude} is not bounded away from zero"
            )));
        }
        Ok(SpeedField {
            kind: SpeedKind::Sinusoid(Sinusoid {
                base,
                amplitude,
                frequency,
            }),
            f1,
            f2,
        })
    }

    /// `1 + 0.5 sin(20 pi x) sin(20 pi y)`.
    pub fn oscillatory_2d() -> Self {
        Self::sinusoid(1.0, 0.5, 20.0).expect("valid constants")
    }

    /// `1 + A sin(10 pi x) sin(10 pi y) sin(10 pi z)`.
    pub fn oscillatory_3d(amplitude: f64) -> Result<Self> {
        Self::sinusoid(1.0, amplitude, 10.0)
    }

    /// A closure-backed speed; bounds are taken as the extrema over `grid`.
    pub fn custom<F>(f: F, grid: &Grid) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let kind = SpeedKind::Custom(Arc::new(f));
        let (f1, f2) = lattice_extrema(&kind, grid)?;
        Ok(SpeedField { kind, f1, f2 })
    }

    pub fn kind(&self) -> &SpeedKind {
        &self.kind
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        kind_value(&self.kind, x)
    }

    /// `f(x)` for a point known to lie inside `bounds`.
    pub fn eval(&self, x: &[f64], bounds: &Bounds) -> Result<f64> {
        if x.len() != bounds.min.len() {
            return Err(Error::DimensionMismatch {
                expected: bounds.min.len(),
                got: x.len(),
            });
        }
        if !bounds.contains(x) {
            return Err(Error::OutsideBounds(x.to_vec()));
        }
        Ok(self.value(x))
    }

    /// `(F1, F2)`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.f1, self.f2)
    }

    /// Samples `f` once per lattice node.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(grid.len());
        let mut x = vec![0.0; grid.dim()];
        for n in 0..grid.len() {
            let id = crate::grid::NodeId(n as u32);
            for (a, xa) in x.iter_mut().enumerate() {
                *xa = grid.coord(id, a);
            }
            let v = self.value(&x);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::BadSpeed(format!("f = {v} at {x:?}")));
            }
            out.push(v);
        }
        Ok(out)
    }
}

fn kind_value(kind: &SpeedKind, x: &[f64]) -> f64 {
    match kind {
        SpeedKind::Constant(c) => *c,
        SpeedKind::Sinusoid(s) => s.value(x),
        SpeedKind::Pixels(p) => p.value(x),
        SpeedKind::CostModified { base, cost } => base.value(x) / cost.eval(x),
        SpeedKind::Custom(f) => f(x),
    }
}

fn lattice_extrema(kind: &SpeedKind, grid: &Grid) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in 0..grid.len() {
        let x = grid.position(crate::grid::NodeId(n as u32));
        let v = kind_value(kind, &x);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::BadSpeed(format!("f = {v} at {x:?}")));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// `(F1, F2)` of a field.
pub fn speed_bounds(field: &SpeedField) -> (f64, f64) {
    field.bounds()
}

/// `f0 / K`, with bounds taken over the lattice of `grid`.
pub fn cost_modified_speed(base: &SpeedField, cost: CostField, grid: &Grid) -> Result<SpeedField> {
    for n in 0..grid.len() {
        let x = grid.position(crate::grid::NodeId(n as u32));
        let k = cost.eval(&x);
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::NonPositiveCost { value: k, at: x });
        }
    }
    let kind = SpeedKind::CostModified {
        base: Box::new(base.clone()),
        cost,
    };
    let (f1, f2) = lattice_extrema(&kind, grid)?;
    Ok(SpeedField { kind, f1, f2 })
}

/// A rectangular raster of grayscale intensities in `[0, 755]`, stored
/// row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl IntensityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 || rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::EmptyMatrix);
        }
        Ok(IntensityMatrix {
            rows: n_rows,
            cols: n_cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Reads comma-separated rows of numbers.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    /// Reads an 8- or 16-bit grayscale PGM; sample values are taken verbatim.
    pub fn from_pgm_path(path: &Path) -> Result<Self> {
        let img = image::ImageReader::open(path)?
            .with_guessed_format()?
            .decode()
            .map_err(|e| Error::Parse(e.to_string()))?;
        let (cols, rows) = (img.width() as usize, img.height() as usize);
        let data: Vec<f64> = match img {
            image::DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
            image::DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
            other => {
                return Err(Error::Parse(format!(
                    "expected a grayscale image, got {:?}",
                    other.color()
                )))
            }
        };
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(IntensityMatrix { rows, cols, data })
    }

    /// Loads by extension: `.pgm` as PGM, anything else as CSV.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pgm") => Self::from_pgm_path(path),
            _ => Self::from_csv_path(path),
        }
    }

    /// Linearly maps `[0, max_raw]` onto `[0, 755]`.
    pub fn rescaled(&self, max_raw: f64) -> Self {
        let s = MAX_INTENSITY / max_raw;
        IntensityMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }
}

/// Speed `0.001 + i / 755` from pixel intensities, laid over `bounds`.
pub fn load_sampled_speed(matrix: &IntensityMatrix, bounds: &Bounds) -> Result<SpeedField> {
    if matrix.rows == 0 || matrix.cols == 0 || matrix.data.len() != matrix.rows * matrix.cols {
        return Err(Error::EmptyMatrix);
    }
    if bounds.min.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: bounds.min.len(),
        });
    }
    let mut speed = Vec::with_capacity(matrix.data.len());
    for (k, &i) in matrix.data.iter().enumerate() {
        if !(0.0..=MAX_INTENSITY).contains(&i) {
            return Err(Error::IntensityOutOfRange {
                row: k / matrix.cols,
                col: k % matrix.cols,
                value: i,
            });
        }
        speed.push(MIN_PIXEL_SPEED + i / MAX_INTENSITY);
    }
    let px = PixelSpeed {
        rows: matrix.rows,
        cols: matrix.cols,
        speed,
        bounds: bounds.clone(),
    };
    let (f1, f2) = px.extrema();
    Ok(SpeedField {
        kind: SpeedKind::Pixels(px),
        f1,
        f2,
    })
}
