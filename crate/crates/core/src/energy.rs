//! Incidence factor of a thermal bridge along a pixel line:
//!
//! ```text
//! I_tb = Σ_p (T_i − T_p) / (N · (T_i − T_1D))
//! ```
//!
//! `T_i` is the internal air temperature, `T_1D` the surface temperature of
//! the undisturbed wall and `T_p` the pixel temperatures on the line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{GridImage, Pixel};

/// Published laboratory values for the pillar and the beam-pillar joint:
/// `(raw, enhanced, probe reference)`.
pub const PUBLISHED_ITB: [(&str, f64, f64, f64); 2] = [
    ("pillar", 1.611, 1.585, 1.439),
    ("beam-pillar joint", 1.467, 1.462, 1.303),
];

/// Improvements as stated alongside [`PUBLISHED_ITB`], in percent. The second
/// does not follow from the quoted values, which give about 3.0%.
pub const STATED_IMPROVEMENT_PERCENT: [f64; 2] = [15.0, 4.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItbInput {
    pub t_i: f64,
    pub t_1d: f64,
    pub line: Vec<Pixel>,
    pub temps: Vec<f64>,
}

impl ItbInput {
    pub fn new(t_i: f64, t_1d: f64, line: Vec<Pixel>, temps: Vec<f64>) -> Result<Self> {
        let inp = ItbInput { t_i, t_1d, line, temps };
        inp.validate()?;
        Ok(inp)
    }

    /// Attach the air and undisturbed-zone temperatures to a sampled line.
    pub fn from_line(t_i: f64, t_1d: f64, line: LineSample) -> Result<Self> {
        ItbInput::new(t_i, t_1d, line.pixels, line.temps)
    }

    fn validate(&self) -> Result<()> {
        if self.temps.is_empty() || self.line.len() != self.temps.len() {
            return Err(Error::invalid(format!(
                "need N >= 1 line pixels with one temperature each (pixels: {}, temperatures: {})",
                self.line.len(),
                self.temps.len()
            )));
        }
        let all = [self.t_i, self.t_1d].into_iter().chain(self.temps.iter().copied());
        if all.clone().any(|t| !t.is_finite()) {
            return Err(Error::invalid("temperatures must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.temps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temps.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItbSource {
    Raw,
    Enhanced,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItbReport {
    pub i_tb: f64,
    pub n: usize,
    pub source: ItbSource,
    pub input: ItbInput,
}

impl ItbReport {
    /// A bare value, e.g. a probe measurement with no pixel line behind it.
    pub fn external(i_tb: f64, source: ItbSource) -> Result<Self> {
        if !i_tb.is_finite() {
            return Err(Error::invalid(format!("I_tb must be finite, got {i_tb}")));
        }
        Ok(ItbReport {
            i_tb,
            n: 0,
            source,
            input: ItbInput {
                t_i: f64::NAN,
                t_1d: f64::NAN,
                line: Vec::new(),
                temps: Vec::new(),
            },
        })
    }
}

pub fn compute_itb(inp: &ItbInput, source: ItbSource) -> Result<ItbReport> {
    inp.validate()?;
    let span = inp.t_i - inp.t_1d;
    if span == 0.0 {
        return Err(Error::DivisionByZero(format!(
            "T_i = T_1D = {}; the index is undefined",
            inp.t_i
        )));
    }
    let n = inp.len();
    let deficit: f64 = inp.temps.iter().map(|t| inp.t_i - t).sum();
    let i_tb = deficit / (n as f64 * span);
    if !i_tb.is_finite() {
        return Err(Error::numeric(format!("I_tb overflowed ({deficit} / ({n} * {span}))")));
    }
    Ok(ItbReport {
        i_tb,
        n,
        source,
        input: inp.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    pub pixels: Vec<Pixel>,
    pub temps: Vec<f64>,
}

/// Bresenham pixels from `from` to `to`, both 1-based and inclusive.
pub fn bresenham(from: Pixel, to: Pixel) -> Vec<Pixel> {
    let (mut r, mut c) = (from.row as i64, from.col as i64);
    let (r1, c1) = (to.row as i64, to.col as i64);
    let dr = (r1 - r).abs();
    let dc = -(c1 - c).abs();
    let sr = if r < r1 { 1 } else { -1 };
    let sc = if c < c1 { 1 } else { -1 };
    let mut err = dr + dc;
    let mut out = Vec::with_capacity((dr.max(-dc) + 1) as usize);
    loop {
        out.push(Pixel::new(r as usize, c as usize));
        if r == r1 && c == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dc {
            err += dc;
            r += sr;
        }
        if e2 <= dr {
            err += dr;
            c += sc;
        }
    }
    out
}

pub fn sample_line(img: &GridImage, from: Pixel, to: Pixel) -> Result<LineSample> {
    for p in [from, to] {
        if p.row == 0 || p.col == 0 || p.row > img.rows() || p.col > img.cols() {
            return Err(Error::invalid(format!(
                "pixel ({}, {}) lies outside the {}x{} image (coordinates are 1-based)",
                p.row,
                p.col,
                img.rows(),
                img.cols()
            )));
        }
    }
    let pixels = bresenham(from, to);
    let temps = pixels.iter().map(|p| img.get(p.row - 1, p.col - 1)).collect();
    Ok(LineSample { pixels, temps })
}

/// Map a line given on an `n x m` image onto the same physical positions of
/// an image rescaled by `scale`: pixel `i` covers `(i-1, i]`, so its centre
/// `i - 1/2` becomes `(i - 1/2)·R`, i.e. pixel `ceil((i - 1/2)·R)`.
pub fn rescale_pixel(p: Pixel, scale: f64) -> Pixel {
    let map = |i: usize| (((i as f64 - 0.5) * scale).ceil() as usize).max(1);
    Pixel::new(map(p.row), map(p.col))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub source: ItbSource,
    pub i_tb: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItbComparison {
    pub reference: f64,
    pub rows: Vec<ComparisonRow>,
    /// `1 − |enhanced − ref| / |raw − ref|`, as a fraction; `None` when the
    /// raw error is zero or either report is missing.
    pub improvement: Option<f64>,
    pub note: Option<String>,
}

pub fn compare_itb(reports: &[ItbReport], reference: &ItbReport) -> ItbComparison {
    let rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| ComparisonRow {
            source: r.source,
            i_tb: r.i_tb,
            abs_error: (r.i_tb - reference.i_tb).abs(),
        })
        .collect();
    let error_of = |s| rows.iter().find(|r| r.source == s).map(|r| r.abs_error);
    let (improvement, note) = match (error_of(ItbSource::Raw), error_of(ItbSource::Enhanced)) {
        (Some(raw), Some(_)) if raw == 0.0 => (None, Some("raw error is zero; improvement undefined".into())),
        (Some(raw), Some(enh)) => (Some(1.0 - enh / raw), None),
        _ => (None, Some("improvement needs both a raw and an enhanced report".into())),
    };
    ItbComparison {
        reference: reference.i_tb,
        rows,
        improvement,
        note,
    }
}
