//! Images as step functions and their cell means.
//!
//! Pixel `(i, j)` (1-based) is the constant value `a_ij` on the unit square
//! `(i-1, i] x (j-1, j]`. The first coordinate runs along image rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical meaning of the stored samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Celsius,
    #[serde(rename = "graylevel")]
    GrayLevel,
}

impl Unit {
    /// Default measurement resolution: 0.01 °C for thermograms, one gray level otherwise.
    pub fn default_resolution(self) -> f64 {
        match self {
            Unit::Celsius => 1e-2,
            Unit::GrayLevel => 1.0,
        }
    }
}

/// 1-based pixel coordinate, `row` along the first image axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub fn new(row: usize, col: usize) -> Self {
        Pixel { row, col }
    }
}

/// Rectangular matrix of finite samples, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    unit: Unit,
    resolution: f64,
}

impl GridImage {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("image must be non-empty, got {rows}x{cols}")));
        }
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "image {rows}x{cols} needs {} samples, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite sample at row {}, col {}",
                pos / cols + 1,
                pos % cols + 1
            )));
        }
        Ok(GridImage {
            rows,
            cols,
            values,
            unit,
            resolution: unit.default_resolution(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], unit: Unit) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::invalid(format!(
                "ragged image: row {} has {} values, expected {m}",
                bad + 1,
                rows[bad].len()
            )));
        }
        GridImage::new(n, m, rows.concat(), unit)
    }

    pub fn constant(rows: usize, cols: usize, value: f64, unit: Unit) -> Result<Self> {
        GridImage::new(rows, cols, vec![value; rows * cols], unit)
    }

    /// Replace the measurement resolution `P`.
    pub fn with_resolution(mut self, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::invalid(format!("measurement resolution must be > 0, got {resolution}")));
        }
        self.resolution = resolution;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sample at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

/// How cells reaching past the image border are filled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    /// Extend the image with its nearest border pixel.
    #[default]
    Replicate,
    /// Treat everything outside the image as zero.
    Zero,
}

/// Cell means `w² ∫_{R_k^w} I` over a rectangular range of cell indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMeanTable {
    w: f64,
    k_start: [i64; 2],
    dims: [usize; 2],
    means: Vec<f64>,
    boundary: BoundaryPolicy,
}

impl CellMeanTable {
    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn boundary_policy(&self) -> BoundaryPolicy {
        self.boundary
    }

    /// Half-open range of cell indices stored along `axis`.
    pub fn k_range(&self, axis: usize) -> std::ops::Range<i64> {
        self.k_start[axis]..self.k_start[axis] + self.dims[axis] as i64
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn get(&self, k1: i64, k2: i64) -> Option<f64> {
        let r = usize::try_from(k1 - self.k_start[0]).ok()?;
        let c = usize::try_from(k2 - self.k_start[1]).ok()?;
        (r < self.dims[0] && c < self.dims[1]).then(|| self.means[r * self.dims[1] + c])
    }

    /// All stored means for cell row `k1`, indexed from `k_range(1).start`.
    pub fn row(&self, k1: i64) -> Option<&[f64]> {
        let r = usize::try_from(k1 - self.k_start[0]).ok()?;
        (r < self.dims[0]).then(|| &self.means[r * self.dims[1]..(r + 1) * self.dims[1]])
    }

    pub fn max_abs(&self) -> f64 {
        self.means.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Number of cells `[k/w, (k+1)/w]`, `k >= 0`, that intersect `[0, n]`.
pub fn cells_per_axis(n: usize, w: f64) -> i64 {
    let span = n as f64 * w;
    let rounded = span.round();
    if (span - rounded).abs() <= 1e-9 * span.max(1.0) {
        rounded as i64
    } else {
        span.ceil() as i64
    }
}

/// Pixel fractions covering the cell `[k/w, (k+1)/w]` along one axis, as
/// `(0-based pixel, fraction of the cell)`.
fn axis_weights(k: i64, w: f64, n: usize, boundary: BoundaryPolicy) -> Vec<(usize, f64)> {
    let place = |pixel: i64, frac: f64, out: &mut Vec<(usize, f64)>| {
        let idx = match boundary {
            BoundaryPolicy::Replicate => pixel.clamp(0, n as i64 - 1) as usize,
            BoundaryPolicy::Zero if (0..n as i64).contains(&pixel) => pixel as usize,
            BoundaryPolicy::Zero => return,
        };
        match out.iter_mut().find(|(p, _)| *p == idx) {
            Some(entry) => entry.1 += frac,
            None => out.push((idx, frac)),
        }
    };
    let mut out = Vec::with_capacity(2);
    if w >= 1.0 && w.fract() == 0.0 {
        // Integer w: every cell sits inside a single pixel.
        place(k.div_euclid(w as i64), 1.0, &mut out);
        return out;
    }
    let lo = k as f64 / w;
    let hi = (k + 1) as f64 / w;
    let first = lo.floor() as i64 + 1;
    let last = hi.ceil() as i64;
    for pixel in first..=last {
        let overlap = hi.min(pixel as f64) - lo.max((pixel - 1) as f64);
        if overlap > 0.0 {
            place(pixel - 1, overlap * w, &mut out);
        }
    }
    out
}

/// Cell means for every cell intersecting the image.
pub fn cell_means(img: &GridImage, w: f64, boundary: BoundaryPolicy) -> Result<CellMeanTable> {
    cell_means_padded(img, w, boundary, [0, 0])
}

/// Cell means for every cell intersecting the image plus `pad[axis]` extra
/// cells on each side of each axis, filled according to `boundary`.
pub fn cell_means_padded(
    img: &GridImage,
    w: f64,
    boundary: BoundaryPolicy,
    pad: [usize; 2],
) -> Result<CellMeanTable> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::invalid(format!("w must be > 0, got {w}")));
    }
    let (n, m) = (img.rows(), img.cols());
    let k_start = [-(pad[0] as i64), -(pad[1] as i64)];
    let dims = [
        (cells_per_axis(n, w) + 2 * pad[0] as i64) as usize,
        (cells_per_axis(m, w) + 2 * pad[1] as i64) as usize,
    ];
    let col_weights: Vec<Vec<(usize, f64)>> = (0..dims[1])
        .map(|c| axis_weights(k_start[1] + c as i64, w, m, boundary))
        .collect();
    let mut means = Vec::with_capacity(dims[0] * dims[1]);
    let mut mixed = vec![0.0; m];
    for r in 0..dims[0] {
        mixed.iter_mut().for_each(|v| *v = 0.0);
        for (pixel, frac) in axis_weights(k_start[0] + r as i64, w, n, boundary) {
            for (acc, &a) in mixed.iter_mut().zip(img.row(pixel)) {
                *acc += frac * a;
            }
        }
        means.extend(
            col_weights
                .iter()
                .map(|cw| cw.iter().map(|&(p, f)| f * mixed[p]).sum::<f64>()),
        );
    }
    Ok(CellMeanTable {
        w,
        k_start,
        dims,
        means,
        boundary,
    })
}

/// Output sampling lattice: pixel centres of the `round(nR) x round(mR)` image.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrid {
    /// Row coordinates, `(i - 1/2)/R` for `i = 1..=round(nR)`.
    pub xs: Vec<f64>,
    /// Column coordinates, `(j - 1/2)/R` for `j = 1..=round(mR)`.
    pub ys: Vec<f64>,
}

impl OutputGrid {
    pub fn rows(&self) -> usize {
        self.xs.len()
    }

    pub fn cols(&self) -> usize {
        self.ys.len()
    }

    /// All points in row-major order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.xs
            .iter()
            .flat_map(|&x| self.ys.iter().map(move |&y| (x, y)))
            .collect()
    }
}

pub fn output_grid(n: usize, m: usize, scale: f64) -> Result<OutputGrid> {
    if !(scale >= 1.0 && scale.is_finite()) {
        return Err(Error::invalid(format!("scaling factor R must be >= 1, got {scale}")));
    }
    if n == 0 || m == 0 {
        return Err(Error::invalid("output grid needs a non-empty image"));
    }
    let axis = |len: usize| -> Vec<f64> {
        let count = (len as f64 * scale).round() as usize;
        (1..=count).map(|i| (i as f64 - 0.5) / scale).collect()
    };
    Ok(OutputGrid {
        xs: axis(n),
        ys: axis(m),
    })
}
