//! End-to-end run: ingest → enhance → histogram → threshold → segment →
//! contours → `I_tb`, with every intermediate parameter collected into one
//! JSON report.
//!
//! Files written to the output directory:
//!
//! | file | content |
//! |------|---------|
//! | `enhanced.csv` / `enhanced.pgm` | enhanced image |
//! | `mask.pgm` | bridge area (255) vs external area (0) |
//! | `contours.csv` | 1-based `row,col` of the bridge contour |
//! | `config.json` | the configuration, re-runnable as is |
//! | `report.json` | the run report, also written when a stage fails |

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::energy::{compute_itb, rescale_pixel, sample_line, ItbInput, ItbReport, ItbSource};
use crate::engine::{enhance, EnhanceConfig, Strategy, TruncationSource, DEFAULT_KERNEL_RADIUS, THERMO_PRESET};
use crate::error::{Error, Result};
use crate::io::{self, ImageFormat};
use crate::kernel::{KernelFamily, QuadratureSpec};
use crate::segmentation::{build_histogram, contours, find_threshold, segment, ThresholdReport};
use crate::signal::{BoundaryPolicy, GridImage, Pixel, Unit};

/// How the enhancement operator is configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EnhanceSpec {
    Preset {
        name: String,
    },
    Explicit {
        kernel: KernelFamily,
        w: f64,
        scale: f64,
        strategy: Strategy,
        #[serde(default)]
        truncation_override: Option<f64>,
        #[serde(default = "default_radius")]
        kernel_truncation_radius: usize,
        #[serde(default)]
        boundary: BoundaryPolicy,
        #[serde(default = "yes")]
        renormalize: bool,
    },
}

fn default_radius() -> usize {
    DEFAULT_KERNEL_RADIUS
}

fn yes() -> bool {
    true
}

impl Default for EnhanceSpec {
    fn default() -> Self {
        EnhanceSpec::Preset {
            name: THERMO_PRESET.into(),
        }
    }
}

impl EnhanceSpec {
    pub fn to_config(&self, quad: &QuadratureSpec) -> Result<EnhanceConfig> {
        match self {
            EnhanceSpec::Preset { name } => EnhanceConfig::preset(name, quad),
            EnhanceSpec::Explicit {
                kernel,
                w,
                scale,
                strategy,
                truncation_override,
                kernel_truncation_radius,
                boundary,
                renormalize,
            } => {
                let mut cfg = EnhanceConfig::from_family(*kernel, *w, *scale, quad)?.with_strategy(*strategy);
                cfg.truncation_override = *truncation_override;
                cfg.kernel_truncation_radius = *kernel_truncation_radius;
                cfg.boundary = *boundary;
                cfg.renormalize = *renormalize;
                Ok(cfg)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationOptions {
    pub bins: usize,
    pub smoothing: usize,
    pub bridge_is_cold: bool,
}

impl Default for SegmentationOptions {
    fn default() -> Self {
        SegmentationOptions {
            bins: crate::segmentation::DEFAULT_BINS,
            smoothing: crate::segmentation::DEFAULT_SMOOTHING,
            bridge_is_cold: true,
        }
    }
}

/// Line across the bridge, in raw-image pixels (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItbLine {
    pub from: Pixel,
    pub to: Pixel,
    pub t_i: f64,
    pub t_1d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    /// Unit of CSV input; PGM input takes it from the scale sidecar.
    #[serde(default = "celsius")]
    pub unit: Unit,
    #[serde(default)]
    pub enhance: EnhanceSpec,
    #[serde(default)]
    pub segmentation: SegmentationOptions,
    #[serde(default)]
    pub itb: Option<ItbLine>,
    pub output_dir: PathBuf,
    #[serde(default = "csv")]
    pub output_format: ImageFormat,
    #[serde(default = "yes")]
    pub parallel: bool,
}

fn celsius() -> Unit {
    Unit::Celsius
}

fn csv() -> ImageFormat {
    ImageFormat::Csv
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input: input.into(),
            unit: Unit::Celsius,
            enhance: EnhanceSpec::default(),
            segmentation: SegmentationOptions::default(),
            itb: None,
            output_dir: output_dir.into(),
            output_format: ImageFormat::Csv,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub path: PathBuf,
    pub rows: usize,
    pub cols: usize,
    pub unit: Unit,
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhanceSummary {
    pub kernel: String,
    pub w: f64,
    pub scale: f64,
    pub strategy: Strategy,
    pub applied_truncation: f64,
    pub truncation_source: TruncationSource,
    pub neglected_term_bound: f64,
    pub output_rows: usize,
    pub output_cols: usize,
    pub kernel_matrices: usize,
    pub kept_weights: usize,
    pub est_memory_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSummary {
    pub bins: usize,
    pub smoothing_window: usize,
    pub bin_width: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub bridge_is_cold: bool,
    pub area_bridge: usize,
    pub area_external: usize,
    pub contour_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItbSummary {
    pub raw: ItbReport,
    pub enhanced: ItbReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub role: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub ok: bool,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub input: Option<InputSummary>,
    pub enhance: Option<EnhanceSummary>,
    pub histogram: Option<HistogramSummary>,
    pub threshold: Option<ThresholdReport>,
    pub segmentation: Option<SegmentSummary>,
    pub itb: Option<ItbSummary>,
    pub files: Vec<OutputFile>,
}

impl RunReport {
    pub fn file(&self, role: &str) -> Option<&Path> {
        self.files.iter().find(|f| f.role == role).map(|f| f.path.as_path())
    }
}

pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_FILE: &str = "config.json";

struct Run<'a> {
    cfg: &'a PipelineConfig,
    report: RunReport,
}

impl Run<'_> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut RunReport) -> Result<T>) -> Result<T> {
        f(&mut self.report).map_err(|e| {
            self.report.failed_stage = Some(name.into());
            self.report.error = Some(e.to_string());
            e.in_stage(name)
        })
    }

    fn write(&mut self, role: &str, name: &str, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let path = self.cfg.output_dir.join(name);
        f(&path)?;
        self.report.files.push(OutputFile { role: role.into(), path });
        Ok(())
    }

    fn execute(&mut self) -> Result<()> {
        let cfg = self.cfg;
        self.stage("output", |_| {
            fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))
        })?;
        let raw = self.stage("ingest", |rep| {
            let img = io::read_image(&cfg.input, cfg.unit)?;
            rep.input = Some(InputSummary {
                path: cfg.input.clone(),
                rows: img.rows(),
                cols: img.cols(),
                unit: img.unit(),
                resolution: img.resolution(),
            });
            Ok(img)
        })?;

        let (enhanced, scale) = self.stage("enhance", |rep| {
            let mut ecfg = cfg.enhance.to_config(&QuadratureSpec::default())?;
            ecfg.parallel = cfg.parallel;
            let out = enhance(&raw, &ecfg)?;
            rep.enhance = Some(EnhanceSummary {
                kernel: ecfg.kernel.label(),
                w: ecfg.w,
                scale: ecfg.scale,
                strategy: out.strategy_used,
                applied_truncation: out.applied_truncation,
                truncation_source: out.truncation_source,
                neglected_term_bound: out.neglected_term_bound,
                output_rows: out.image.rows(),
                output_cols: out.image.cols(),
                kernel_matrices: out.kernel_matrices,
                kept_weights: out.kept_weights,
                est_memory_bits: out.est_memory_bits,
            });
            Ok((out.image, ecfg.scale))
        })?;

        let opts = &cfg.segmentation;
        let hist = self.stage("histogram", |rep| {
            let h = build_histogram(&enhanced, opts.bins, opts.smoothing)?;
            rep.histogram = Some(HistogramSummary {
                bins: h.bins(),
                smoothing_window: h.smoothing_window,
                bin_width: h.bin_width,
                min: h.bin_edges[0],
                max: h.bin_edges[h.bins()],
            });
            Ok(h)
        })?;
        let t_m = self.stage("threshold", |rep| {
            let t = find_threshold(&hist)?;
            let t_m = t.t_m;
            rep.threshold = Some(t);
            Ok(t_m)
        })?;
        let mask = segment(&enhanced, t_m, opts.bridge_is_cold);
        let contour = contours(&mask);
        self.report.segmentation = Some(SegmentSummary {
            bridge_is_cold: opts.bridge_is_cold,
            area_bridge: mask.bridge_area(),
            area_external: mask.external_area(),
            contour_pixels: contour.len(),
        });

        if let Some(line) = &cfg.itb {
            self.stage("itb", |rep| {
                rep.itb = Some(itb_pair(&raw, &enhanced, scale, line)?);
                Ok(())
            })?;
        }

        let ext = match cfg.output_format {
            ImageFormat::Csv => "csv",
            ImageFormat::Pgm => "pgm",
        };
        let cfg_copy = cfg.clone();
        let result = (|| -> Result<()> {
            let name = format!("enhanced.{ext}");
            self.write("enhanced", &name, |p| io::write_image(p, &enhanced))?;
            self.write("mask", "mask.pgm", |p| io::write_mask_pgm(p, &mask))?;
            self.write("contours", "contours.csv", |p| {
                let mut text = String::from("row,col\n");
                for px in &contour {
                    text.push_str(&format!("{},{}\n", px.row, px.col));
                }
                fs::write(p, text).map_err(|e| Error::io(p, e))
            })?;
            self.write("config", CONFIG_FILE, |p| io::write_json(p, &cfg_copy))?;
            Ok(())
        })();
        self.stage("write", |_| result)
    }
}

fn itb_pair(raw: &GridImage, enhanced: &GridImage, scale: f64, line: &ItbLine) -> Result<ItbSummary> {
    let on_raw = sample_line(raw, line.from, line.to)?;
    let raw_report = compute_itb(&ItbInput::from_line(line.t_i, line.t_1d, on_raw)?, ItbSource::Raw)?;
    let clamp = |p: Pixel| Pixel::new(p.row.min(enhanced.rows()), p.col.min(enhanced.cols()));
    let (from, to) = (clamp(rescale_pixel(line.from, scale)), clamp(rescale_pixel(line.to, scale)));
    let on_enh = sample_line(enhanced, from, to)?;
    let enh_report = compute_itb(&ItbInput::from_line(line.t_i, line.t_1d, on_enh)?, ItbSource::Enhanced)?;
    Ok(ItbSummary {
        raw: raw_report,
        enhanced: enh_report,
    })
}

/// Run every stage and write the report, which records the failing stage
/// if any. Errors are returned wrapped in [`Error::Stage`].
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    let mut run = Run {
        cfg,
        report: RunReport::default(),
    };
    let outcome = run.execute();
    let mut report = run.report;
    report.ok = outcome.is_ok();
    let report_path = cfg.output_dir.join(REPORT_FILE);
    if cfg.output_dir.is_dir() {
        report.files.push(OutputFile {
            role: "report".into(),
            path: report_path.clone(),
        });
        let written = io::write_json(&report_path, &report);
        if outcome.is_ok() {
            written.map_err(|e| e.in_stage("write"))?;
        }
    }
    outcome.map(|_| report)
}
