//! Bivariate sampling Kantorovich evaluation.
//!
//! `out(x) = Σ_k χ(w x - k) · m_k`, where `m_k` are the cell means of the
//! input step function and `x` runs over the output pixel centres. Two
//! strategies evaluate the same sum:
//!
//! * [`Strategy::Recompute`] evaluates the kernel at every term of every
//!   output point. For unbounded kernels the sum covers every stored cell,
//!   so the cost per point grows like `N·M·w²`.
//! * [`Strategy::PrecomputeTruncate`] builds one kernel matrix per class of
//!   fractional offsets `frac(w x)` (per axis), drops entries whose magnitude
//!   is below the truncation threshold, and reuses the sparse remainder.
//!
//! Unbounded kernels are summed over the image cells plus a replicated
//! border `kernel_truncation_radius` cells wide on each side.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, MultivariateKernel, QuadratureSpec, UnivariateKernel};
use crate::par;
use crate::signal::{cell_means_padded, output_grid, BoundaryPolicy, CellMeanTable, GridImage};

/// Name of the thermography preset: `J12 ⊗ J12`, `w = 15`, `R = 2`,
/// precomputed kernel matrix truncated at `1e-4`.
pub const THERMO_PRESET: &str = "paper-thermo";

/// Preset names accepted by [`EnhanceConfig::preset`].
pub const PRESET_NAMES: &[&str] = &[THERMO_PRESET];

/// Default border width, in cells, for kernels with unbounded support.
pub const DEFAULT_KERNEL_RADIUS: usize = 40;

// Fractional offsets closer than this share a cached kernel matrix.
const OFFSET_CLASS_RESOLUTION: f64 = 1e11;

// Above this many (row class, column class) pairs, kernel matrices are
// built per output row instead of once for the whole image.
const PAIR_CACHE_LIMIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Approach (1): kernel recomputed for every output point.
    Recompute,
    /// Approach (2): kernel matrix computed once, truncated, reused.
    #[serde(rename = "precompute")]
    PrecomputeTruncate,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Recompute => "recompute",
            Strategy::PrecomputeTruncate => "precompute",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "recompute" | "1" => Ok(Strategy::Recompute),
            "precompute" | "precompute-truncate" | "2" => Ok(Strategy::PrecomputeTruncate),
            other => Err(Error::parse(
                "strategy",
                format!("expected `recompute` or `precompute`, got `{other}`"),
            )),
        }
    }
}

/// Everything needed to evaluate one enhancement.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceConfig {
    pub w: f64,
    /// Output/input sampling ratio `R`.
    pub scale: f64,
    pub kernel: MultivariateKernel,
    pub strategy: Strategy,
    /// Replaces the formula threshold from [`truncation_threshold`].
    pub truncation_override: Option<f64>,
    pub kernel_truncation_radius: usize,
    pub boundary: BoundaryPolicy,
    /// Divide each output by the sum of the weights actually used, so that
    /// truncated kernels still reproduce constants.
    pub renormalize: bool,
    pub parallel: bool,
}

impl EnhanceConfig {
    pub fn new(kernel: MultivariateKernel, w: f64, scale: f64) -> Self {
        EnhanceConfig {
            w,
            scale,
            kernel,
            strategy: Strategy::PrecomputeTruncate,
            truncation_override: None,
            kernel_truncation_radius: DEFAULT_KERNEL_RADIUS,
            boundary: BoundaryPolicy::Replicate,
            renormalize: true,
            parallel: true,
        }
    }

    /// Isotropic bivariate kernel from a family.
    pub fn from_family(family: KernelFamily, w: f64, scale: f64, quad: &QuadratureSpec) -> Result<Self> {
        let kernel = MultivariateKernel::isotropic(family.build(quad)?, 2)?;
        Ok(EnhanceConfig::new(kernel, w, scale))
    }

    pub fn preset(name: &str, quad: &QuadratureSpec) -> Result<Self> {
        match name {
            THERMO_PRESET => {
                let mut cfg = EnhanceConfig::from_family(
                    KernelFamily::Jackson { k: 12, alpha: 1.0 },
                    15.0,
                    2.0,
                    quad,
                )?;
                cfg.truncation_override = Some(1e-4);
                Ok(cfg)
            }
            other => Err(Error::invalid(format!(
                "unknown preset `{other}`; known presets: {}",
                PRESET_NAMES.join(", ")
            ))),
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(Error::invalid(format!("w must be > 0, got {}", self.w)));
        }
        if !(self.scale >= 1.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!("scaling factor R must be >= 1, got {}", self.scale)));
        }
        if self.kernel.dims() != 2 {
            return Err(Error::invalid(format!(
                "enhancement needs a bivariate kernel, got {} factor(s)",
                self.kernel.dims()
            )));
        }
        if let Some(t) = self.truncation_override {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("truncation override must be >= 0, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationSource {
    /// No truncation (approach (1)).
    None,
    Formula,
    Override,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceResult {
    pub image: GridImage,
    /// Threshold `k̄` applied to kernel-matrix entries (0 when none).
    pub applied_truncation: f64,
    pub truncation_source: TruncationSource,
    /// Upper bound on `|out - out_untruncated|` over all output pixels.
    pub neglected_term_bound: f64,
    pub strategy_used: Strategy,
    pub timing_seconds: f64,
    pub est_memory_bits: f64,
    /// Distinct kernel matrices built (0 for [`Strategy::Recompute`]).
    pub kernel_matrices: usize,
    /// Entries surviving truncation, summed over the cached matrices.
    pub kept_weights: usize,
}

/// `k̄ = 0.4 P / (w² N M A)` with `A` the image maximum; 0 when `A <= 0`.
pub fn truncation_threshold(img: &GridImage, w: f64) -> f64 {
    let a = img.max();
    if a <= 0.0 {
        return 0.0;
    }
    let cells = w * w * img.rows() as f64 * img.cols() as f64;
    4e-1 * img.resolution() / (cells * a)
}

/// Closed-form kernel storage estimates of the two approaches, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryEstimate {
    pub bits_per_value: u32,
    /// `N M w² B`
    pub approach1_bits: f64,
    /// `N M w² R² B`
    pub approach2_bits: f64,
}

impl MemoryEstimate {
    pub fn for_strategy(&self, strategy: Strategy) -> f64 {
        match strategy {
            Strategy::Recompute => self.approach1_bits,
            Strategy::PrecomputeTruncate => self.approach2_bits,
        }
    }
}

pub fn memory_estimate(img: &GridImage, cfg: &EnhanceConfig, bits: u32) -> Result<MemoryEstimate> {
    memory_estimate_for(img.rows(), img.cols(), cfg.w, cfg.scale, bits)
}

pub fn memory_estimate_for(rows: usize, cols: usize, w: f64, scale: f64, bits: u32) -> Result<MemoryEstimate> {
    if bits == 0 {
        return Err(Error::invalid("bits per value must be > 0"));
    }
    let base = rows as f64 * cols as f64 * w * w * f64::from(bits);
    Ok(MemoryEstimate {
        bits_per_value: bits,
        approach1_bits: base,
        approach2_bits: base * scale * scale,
    })
}

/// Evaluate the operator on the `round(nR) x round(mR)` output grid.
pub fn enhance(img: &GridImage, cfg: &EnhanceConfig) -> Result<EnhanceResult> {
    cfg.validate()?;
    let grid = output_grid(img.rows(), img.cols(), cfg.scale)?;
    let factors = cfg.kernel.factors();
    let pad = [
        border_cells(&factors[0], cfg.kernel_truncation_radius),
        border_cells(&factors[1], cfg.kernel_truncation_radius),
    ];

    let (threshold, source) = match cfg.strategy {
        Strategy::Recompute => (0.0, TruncationSource::None),
        Strategy::PrecomputeTruncate => match cfg.truncation_override {
            Some(t) => (t, TruncationSource::Override),
            None => (truncation_threshold(img, cfg.w), TruncationSource::Formula),
        },
    };

    let start = Instant::now();
    let table = cell_means_padded(img, cfg.w, cfg.boundary, pad)?;
    let axes = [
        AxisPlan::new(&grid.xs, cfg.w, &factors[0], table.k_range(0)),
        AxisPlan::new(&grid.ys, cfg.w, &factors[1], table.k_range(1)),
    ];
    let ctx = EvalContext {
        table: &table,
        axes: &axes,
        factors,
        renormalize: cfg.renormalize,
        max_mean: table.max_abs(),
    };

    let (rows, matrices, kept) = match cfg.strategy {
        Strategy::Recompute => {
            let rows = par::map_indices(grid.rows(), cfg.parallel, |i| ctx.recompute_row(i));
            (rows, 0, 0)
        }
        Strategy::PrecomputeTruncate => {
            let cache = MatrixCache::build(&ctx, threshold, cfg.parallel);
            let rows = par::map_indices(grid.rows(), cfg.parallel, |i| ctx.precompute_row(i, &cache, threshold));
            (rows, cache.len(), cache.kept())
        }
    };
    let elapsed = start.elapsed().as_secs_f64();

    let mut values = Vec::with_capacity(grid.rows() * grid.cols());
    let mut bound: f64 = 0.0;
    for row in rows {
        let row = row?;
        bound = bound.max(row.bound);
        values.extend(row.values);
    }
    // Summation-order rounding between the two strategies.
    bound += 1e-12 * ctx.max_mean.max(1.0);
    if cfg.strategy == Strategy::Recompute {
        bound = 0.0;
    }

    let image = GridImage::new(grid.rows(), grid.cols(), values, img.unit())?
        .with_resolution(img.resolution())?;
    let memory = memory_estimate(img, cfg, 64)?;
    Ok(EnhanceResult {
        image,
        applied_truncation: threshold,
        truncation_source: source,
        neglected_term_bound: bound,
        strategy_used: cfg.strategy,
        timing_seconds: elapsed,
        est_memory_bits: memory.for_strategy(cfg.strategy),
        kernel_matrices: matrices,
        kept_weights: kept,
    })
}

/// Cells of replicated border needed beyond the image along one axis.
fn border_cells(kernel: &UnivariateKernel, radius: usize) -> usize {
    match kernel.support_radius() {
        Some(s) => s.ceil() as usize + 1,
        None => radius,
    }
}

/// Per-axis precomputation: scaled coordinates, bases and offset classes.
struct AxisPlan {
    ts: Vec<f64>,
    bases: Vec<i64>,
    class_of: Vec<usize>,
    class_frac: Vec<f64>,
    k_range: std::ops::Range<i64>,
    support: Option<f64>,
}

impl AxisPlan {
    fn new(coords: &[f64], w: f64, kernel: &UnivariateKernel, k_range: std::ops::Range<i64>) -> Self {
        let mut keys: HashMap<i64, usize> = HashMap::new();
        let mut class_frac = Vec::new();
        let mut ts = Vec::with_capacity(coords.len());
        let mut bases = Vec::with_capacity(coords.len());
        let mut class_of = Vec::with_capacity(coords.len());
        for &x in coords {
            let t = w * x;
            let mut base = t.floor();
            let mut frac = t - base;
            let mut key = (frac * OFFSET_CLASS_RESOLUTION).round() as i64;
            if key as f64 >= OFFSET_CLASS_RESOLUTION {
                base += 1.0;
                frac -= 1.0;
                key = 0;
            }
            let next = class_frac.len();
            let class = *keys.entry(key).or_insert(next);
            if class == next {
                class_frac.push(frac);
            }
            ts.push(t);
            bases.push(base as i64);
            class_of.push(class);
        }
        AxisPlan {
            ts,
            bases,
            class_of,
            class_frac,
            k_range,
            support: kernel.support_radius(),
        }
    }

    /// Cells contributing at scaled coordinate `t`.
    fn window(&self, t: f64) -> std::ops::Range<i64> {
        match self.support {
            Some(s) => {
                let lo = ((t - s).floor() as i64 + 1).max(self.k_range.start);
                let hi = ((t + s).ceil() as i64).min(self.k_range.end);
                lo..hi.max(lo)
            }
            None => self.k_range.clone(),
        }
    }

    /// Offsets `d = k - base` any output point on this axis can reach.
    fn offset_range(&self, frac: f64) -> std::ops::Range<i64> {
        match self.support {
            Some(s) => ((frac - s).floor() as i64 + 1)..((frac + s).ceil() as i64),
            None => {
                let min_base = self.bases.iter().copied().min().unwrap_or(0);
                let max_base = self.bases.iter().copied().max().unwrap_or(0);
                (self.k_range.start - max_base)..(self.k_range.end - min_base)
            }
        }
    }

    fn classes(&self) -> usize {
        self.class_frac.len()
    }
}

struct EvalContext<'a> {
    table: &'a CellMeanTable,
    axes: &'a [AxisPlan; 2],
    factors: &'a [UnivariateKernel],
    renormalize: bool,
    max_mean: f64,
}

struct RowOutput {
    values: Vec<f64>,
    bound: f64,
}

/// Sparse kernel matrix for one pair of offset classes, rows by `d1`.
struct KernelMatrix {
    row_d1: Vec<i64>,
    row_start: Vec<usize>,
    d2: Vec<i64>,
    weight: Vec<f64>,
    dropped_abs: f64,
}

impl KernelMatrix {
    fn build(phi1: &[(i64, f64)], phi2: &[(i64, f64)], threshold: f64) -> Self {
        let max2 = phi2.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
        let abs2: f64 = phi2.iter().map(|&(_, v)| v.abs()).sum();
        let mut m = KernelMatrix {
            row_d1: Vec::new(),
            row_start: vec![0],
            d2: Vec::new(),
            weight: Vec::new(),
            dropped_abs: 0.0,
        };
        for &(d1, f1) in phi1 {
            let row_total = f1.abs() * abs2;
            if f1 == 0.0 {
                continue;
            }
            if f1.abs() * max2 < threshold {
                m.dropped_abs += row_total;
                continue;
            }
            let mut kept_abs = 0.0;
            for &(d2, f2) in phi2 {
                let wt = f1 * f2;
                if wt != 0.0 && wt.abs() >= threshold {
                    m.d2.push(d2);
                    m.weight.push(wt);
                    kept_abs += wt.abs();
                }
            }
            m.dropped_abs += (row_total - kept_abs).max(0.0);
            if m.d2.len() > *m.row_start.last().unwrap() {
                m.row_d1.push(d1);
                m.row_start.push(m.d2.len());
            }
        }
        m
    }

    fn kept(&self) -> usize {
        self.weight.len()
    }
}

enum MatrixCache {
    Shared { pairs: Vec<KernelMatrix>, cols: usize },
    PerRow { kept_estimate: usize },
}

impl MatrixCache {
    fn build(ctx: &EvalContext<'_>, threshold: f64, parallel: bool) -> Self {
        let (c1, c2) = (ctx.axes[0].classes(), ctx.axes[1].classes());
        if c1 * c2 > PAIR_CACHE_LIMIT {
            return MatrixCache::PerRow { kept_estimate: 0 };
        }
        let phi1: Vec<_> = (0..c1).map(|c| ctx.factor_vector(0, c)).collect();
        let phi2: Vec<_> = (0..c2).map(|c| ctx.factor_vector(1, c)).collect();
        let pairs = par::map_indices(c1 * c2, parallel, |p| {
            KernelMatrix::build(&phi1[p / c2], &phi2[p % c2], threshold)
        });
        MatrixCache::Shared { pairs, cols: c2 }
    }

    fn len(&self) -> usize {
        match self {
            MatrixCache::Shared { pairs, .. } => pairs.len(),
            MatrixCache::PerRow { .. } => 0,
        }
    }

    fn kept(&self) -> usize {
        match self {
            MatrixCache::Shared { pairs, .. } => pairs.iter().map(KernelMatrix::kept).sum(),
            MatrixCache::PerRow { kept_estimate } => *kept_estimate,
        }
    }
}

impl EvalContext<'_> {
    /// Kernel factor values over every offset reachable from class `class`.
    fn factor_vector(&self, axis: usize, class: usize) -> Vec<(i64, f64)> {
        let plan = &self.axes[axis];
        let frac = plan.class_frac[class];
        plan.offset_range(frac)
            .map(|d| (d, self.factors[axis].evaluate(frac - d as f64)))
            .collect()
    }

    fn finish(&self, acc: f64, weight_sum: f64, i: usize, j: usize) -> Result<f64> {
        let v = if self.renormalize { acc / weight_sum } else { acc };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::numeric(format!(
                "non-finite output at pixel ({}, {}): sum {acc}, weight {weight_sum}",
                i + 1,
                j + 1
            )))
        }
    }

    fn recompute_row(&self, i: usize) -> Result<RowOutput> {
        let [ax, ay] = self.axes;
        let t1 = ax.ts[i];
        let win1 = ax.window(t1);
        let k2_start = self.table.k_range(1).start;
        let mut values = Vec::with_capacity(ay.ts.len());
        let mut phi1 = Vec::new();
        let mut phi2 = Vec::new();
        for (j, &t2) in ay.ts.iter().enumerate() {
            let win2 = ay.window(t2);
            // Fresh kernel values for this output point.
            phi1.clear();
            phi1.extend(win1.clone().map(|k1| self.factors[0].evaluate(t1 - k1 as f64)));
            phi2.clear();
            phi2.extend(win2.clone().map(|k2| self.factors[1].evaluate(t2 - k2 as f64)));
            let lo = (win2.start - k2_start) as usize;
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (k1, &f1) in win1.clone().zip(phi1.iter()) {
                let means = &self.table.row(k1).expect("window inside table")[lo..lo + phi2.len()];
                let (a, s) = weighted_row(f1, &phi2, means);
                acc += a;
                wsum += s;
            }
            values.push(self.finish(acc, wsum, i, j)?);
        }
        Ok(RowOutput { values, bound: 0.0 })
    }

    fn precompute_row(&self, i: usize, cache: &MatrixCache, threshold: f64) -> Result<RowOutput> {
        let [ax, ay] = self.axes;
        let c1 = ax.class_of[i];
        let mut local: HashMap<usize, KernelMatrix> = HashMap::new();
        let mut local_phi1 = None;
        let mut values = Vec::with_capacity(ay.ts.len());
        let mut bound: f64 = 0.0;
        for j in 0..ay.ts.len() {
            let c2 = ay.class_of[j];
            let matrix = match cache {
                MatrixCache::Shared { pairs, cols } => &pairs[c1 * cols + c2],
                MatrixCache::PerRow { .. } => {
                    let phi1 = local_phi1.get_or_insert_with(|| self.factor_vector(0, c1));
                    local
                        .entry(c2)
                        .or_insert_with(|| KernelMatrix::build(phi1, &self.factor_vector(1, c2), threshold))
                }
            };
            let (acc, wsum) = self.apply_matrix(matrix, ax.bases[i], ay.bases[j]);
            let v = self.finish(acc, wsum, i, j)?;
            let drop = matrix.dropped_abs;
            let b = if drop == 0.0 {
                0.0
            } else if self.renormalize {
                if wsum > drop {
                    (v.abs() + self.max_mean) * drop / (wsum - drop)
                } else {
                    f64::INFINITY
                }
            } else {
                drop * self.max_mean
            };
            bound = bound.max(b);
            values.push(v);
        }
        Ok(RowOutput { values, bound })
    }

    fn apply_matrix(&self, m: &KernelMatrix, base1: i64, base2: i64) -> (f64, f64) {
        let k1_range = self.table.k_range(0);
        let k2_range = self.table.k_range(1);
        let first_row = m.row_d1.partition_point(|&d1| base1 + d1 < k1_range.start);
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for r in first_row..m.row_d1.len() {
            let k1 = base1 + m.row_d1[r];
            if k1 >= k1_range.end {
                break;
            }
            let means = self.table.row(k1).expect("row inside table");
            let d2 = &m.d2[m.row_start[r]..m.row_start[r + 1]];
            let wt = &m.weight[m.row_start[r]..m.row_start[r + 1]];
            let lo = d2.partition_point(|&d| base2 + d < k2_range.start);
            let hi = d2.partition_point(|&d| base2 + d < k2_range.end);
            if lo >= hi {
                continue;
            }
            // Contiguous offsets (the untruncated case) index the table directly.
            let contiguous = d2[hi - 1] - d2[lo] == (hi - lo - 1) as i64;
            if contiguous {
                let start = (base2 + d2[lo] - k2_range.start) as usize;
                let (a, s) = weighted_row(1.0, &wt[lo..hi], &means[start..start + (hi - lo)]);
                acc += a;
                wsum += s;
            } else {
                for (&d, &w) in d2[lo..hi].iter().zip(&wt[lo..hi]) {
                    let mean = means[(base2 + d - k2_range.start) as usize];
                    acc += w * mean;
                    wsum += w;
                }
            }
        }
        (acc, wsum)
    }
}

/// `(Σ f1·φ2[j]·m[j], Σ f1·φ2[j])` with four independent accumulators.
#[inline]
fn weighted_row(f1: f64, phi2: &[f64], means: &[f64]) -> (f64, f64) {
    let mut acc = [0.0f64; 4];
    let mut ws = [0.0f64; 4];
    let chunks = phi2.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let idx = 4 * c + l;
            let wt = f1 * phi2[idx];
            acc[l] += wt * means[idx];
            ws[l] += wt;
        }
    }
    for idx in 4 * chunks..phi2.len() {
        let wt = f1 * phi2[idx];
        acc[0] += wt * means[idx];
        ws[0] += wt;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3]), (ws[0] + ws[1]) + (ws[2] + ws[3]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_bspline, product_kernel};
    use crate::signal::Unit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, n: usize, m: usize) -> GridImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..n * m).map(|_| rng.random_range(0.0..1.0)).collect();
        GridImage::new(n, m, vals, Unit::GrayLevel).unwrap()
    }

    fn cfg(spec: &str, w: f64, scale: f64) -> EnhanceConfig {
        EnhanceConfig::from_family(spec.parse().unwrap(), w, scale, &QuadratureSpec::default()).unwrap()
    }

    /// Direct evaluation of the operator sum at one output pixel.
    fn brute_force(img: &GridImage, c: &EnhanceConfig, i: usize, j: usize) -> f64 {
        let table = cell_means_padded(img, c.w, c.boundary, [60, 60]).unwrap();
        let x = (i as f64 + 0.5) / c.scale;
        let y = (j as f64 + 0.5) / c.scale;
        let mut acc = 0.0;
        let mut ws = 0.0;
        for k1 in table.k_range(0) {
            for k2 in table.k_range(1) {
                let wt = c.kernel.evaluate(&[c.w * x - k1 as f64, c.w * y - k2 as f64]);
                acc += wt * table.get(k1, k2).unwrap();
                ws += wt;
            }
        }
        if c.renormalize {
            acc / ws
        } else {
            acc
        }
    }

    #[test]
    fn threshold_formula() {
        let img = GridImage::constant(320, 240, 1.0, Unit::Celsius).unwrap();
        let k = truncation_threshold(&img, 15.0);
        assert!((k - 0.004 / (225.0 * 320.0 * 240.0)).abs() < 1e-22);
        assert!((k - 2.315e-10).abs() < 1e-13);
        let neg = GridImage::constant(3, 3, -2.0, Unit::Celsius).unwrap();
        assert_eq!(truncation_threshold(&neg, 15.0), 0.0);
        let one = GridImage::constant(1, 1, 1.0, Unit::Celsius)
            .unwrap()
            .with_resolution(1.0)
            .unwrap();
        assert!((truncation_threshold(&one, 1.0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn memory_formulas() {
        let img = GridImage::constant(10, 10, 1.0, Unit::Celsius).unwrap();
        let m = memory_estimate(&img, &cfg("bspline:3", 2.0, 2.0), 64).unwrap();
        assert_eq!((m.approach1_bits, m.approach2_bits), (25600.0, 102400.0));
        let m = memory_estimate(&img, &cfg("bspline:3", 2.0, 1.0), 64).unwrap();
        assert_eq!(m.approach1_bits, m.approach2_bits);
        let m = memory_estimate_for(320, 240, 15.0, 2.0, 64).unwrap();
        assert_eq!(m.approach2_bits, 4.0 * m.approach1_bits);
        assert!(memory_estimate(&img, &cfg("bspline:3", 2.0, 1.0), 0).is_err());
    }

    #[test]
    fn constant_reproduction_bspline() {
        let img = GridImage::constant(6, 5, 3.25, Unit::Celsius).unwrap();
        for w in [1.0, 2.0, 5.0, 15.0] {
            for strategy in [Strategy::Recompute, Strategy::PrecomputeTruncate] {
                let c = cfg("bspline:3", w, 1.0).with_strategy(strategy);
                let out = enhance(&img, &c).unwrap();
                for &v in out.image.values() {
                    assert!((v - 3.25).abs() < 1e-10, "w={w} {strategy}: {v}");
                }
            }
        }
    }

    #[test]
    fn output_shape_and_report_fields() {
        let img = random_image(1, 7, 5);
        let out = enhance(&img, &cfg("bspline:2", 1.0, 2.0)).unwrap();
        assert_eq!((out.image.rows(), out.image.cols()), (14, 10));
        assert_eq!(out.strategy_used, Strategy::PrecomputeTruncate);
        assert_eq!(out.truncation_source, TruncationSource::Formula);
        assert!(out.kernel_matrices >= 1);
        assert!(out.timing_seconds >= 0.0);
    }

    #[test]
    fn matches_brute_force_sum() {
        let img = random_image(2, 4, 3);
        for spec in ["bspline:3", "jackson:2", "fejer"] {
            for strategy in [Strategy::Recompute, Strategy::PrecomputeTruncate] {
                for renorm in [true, false] {
                    let mut c = cfg(spec, 2.5, 1.5).with_strategy(strategy);
                    c.truncation_override = Some(0.0);
                    c.renormalize = renorm;
                    c.kernel_truncation_radius = 60;
                    let out = enhance(&img, &c).unwrap();
                    for (i, j) in [(0usize, 0usize), (2, 1), (5, 3)] {
                        let want = brute_force(&img, &c, i, j);
                        let got = out.image.get(i, j);
                        assert!((got - want).abs() < 1e-12, "{spec} {strategy} renorm={renorm} ({i},{j}): {got} vs {want}");
                    }
                }
            }
        }
    }

    #[test]
    fn strategies_agree_within_bound() {
        let img = random_image(3, 8, 8);
        let base = cfg("jackson:12", 15.0, 2.0);
        let r1 = enhance(&img, &base.clone().with_strategy(Strategy::Recompute)).unwrap();
        for trunc in [None, Some(1e-4), Some(0.0)] {
            let mut c = base.clone();
            c.truncation_override = trunc;
            let r2 = enhance(&img, &c).unwrap();
            let diff = r1
                .image
                .values()
                .iter()
                .zip(r2.image.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(diff <= r2.neglected_term_bound, "trunc={trunc:?} diff={diff:e} bound={:e}", r2.neglected_term_bound);
            if trunc == Some(0.0) {
                assert!(diff < 1e-10);
            }
        }
    }

    #[test]
    fn formula_bound_stays_below_resolution_budget() {
        let img = random_image(4, 32, 32).with_resolution(1e-2).unwrap();
        let out = enhance(&img, &cfg("jackson:12", 15.0, 2.0)).unwrap();
        assert_eq!(out.truncation_source, TruncationSource::Formula);
        assert!(out.neglected_term_bound <= 0.4 * img.resolution(), "{}", out.neglected_term_bound);
    }

    #[test]
    fn incommensurate_offsets_use_per_row_matrices() {
        let img = random_image(5, 20, 20);
        let mut c = cfg("bspline:3", 1.37, 1.93);
        c.truncation_override = Some(0.0);
        let r2 = enhance(&img, &c).unwrap();
        assert_eq!(r2.kernel_matrices, 0);
        let r1 = enhance(&img, &c.clone().with_strategy(Strategy::Recompute)).unwrap();
        for (a, b) in r1.image.values().iter().zip(r2.image.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn thermo_preset_has_two_offset_classes_per_axis() {
        let c = EnhanceConfig::preset(THERMO_PRESET, &QuadratureSpec::default()).unwrap();
        assert_eq!((c.w, c.scale, c.truncation_override), (15.0, 2.0, Some(1e-4)));
        let img = random_image(6, 6, 6);
        let out = enhance(&img, &c).unwrap();
        assert_eq!(out.kernel_matrices, 4);
        assert_eq!(out.applied_truncation, 1e-4);
        assert!(EnhanceConfig::preset("nope", &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let img = random_image(7, 9, 11);
        let mut c = cfg("jackson:2", 3.0, 2.0);
        let a = enhance(&img, &c).unwrap();
        c.parallel = false;
        let b = enhance(&img, &c).unwrap();
        assert_eq!(a.image, b.image);
    }

    #[test]
    fn rejects_invalid_configs() {
        let img = random_image(8, 3, 3);
        let m3 = make_bspline(3).unwrap();
        let one_d = EnhanceConfig::new(product_kernel(vec![m3.clone()]).unwrap(), 2.0, 1.0);
        assert!(matches!(enhance(&img, &one_d), Err(Error::InvalidParameter(_))));
        assert!(enhance(&img, &cfg("bspline:3", 0.0, 1.0)).is_err());
        assert!(enhance(&img, &cfg("bspline:3", 1.0, 0.5)).is_err());
        let mut neg = cfg("bspline:3", 1.0, 1.0);
        neg.truncation_override = Some(-1.0);
        assert!(enhance(&img, &neg).is_err());
    }

    #[test]
    fn strategy_strings() {
        assert_eq!("precompute".parse::<Strategy>().unwrap(), Strategy::PrecomputeTruncate);
        assert_eq!("recompute".parse::<Strategy>().unwrap(), Strategy::Recompute);
        assert!("fast".parse::<Strategy>().is_err());
        assert_eq!(Strategy::PrecomputeTruncate.to_string(), "precompute");
    }
}
