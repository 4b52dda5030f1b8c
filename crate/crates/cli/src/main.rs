//! `skthermo` command-line tool.
//!
//! Exit status: 0 on success, 2 for invalid input (bad arguments, unreadable
//! or malformed files, unimodal histograms), 3 for numeric failures.
//! `SK_THREADS` caps the number of worker threads.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use skthermo::bench::{run_bench, BenchPlan};
use skthermo::energy::{compare_itb, compute_itb, sample_line, ItbInput, ItbReport, ItbSource};
use skthermo::engine::{enhance, EnhanceConfig, Strategy, THERMO_PRESET};
use skthermo::io::{self, write_json};
use skthermo::kernel::{check_axioms, GridSpec, KernelFamily, QuadratureSpec};
use skthermo::phantom::{phantom, PhantomKind, PhantomSpec};
use skthermo::pipeline::{run_pipeline, EnhanceSpec, ItbLine, PipelineConfig, SegmentationOptions};
use skthermo::segmentation::{build_histogram, contours, find_threshold, segment};
use skthermo::signal::{Pixel, Unit};
use skthermo::{Error, Result};

#[derive(Parser)]
#[command(name = "skthermo", version, about = "Sampling Kantorovich enhancement and thermal-bridge segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance an image with the sampling Kantorovich operator.
    Enhance(EnhanceArgs),
    /// Histogram threshold, mask and contours of an (enhanced) image.
    Segment(SegmentArgs),
    /// Thermal-bridge incidence factor along a pixel line.
    Itb(ItbArgs),
    /// Compare raw and enhanced I_tb against a reference value.
    ItbCompare(ItbCompareArgs),
    /// Time the recompute and precompute strategies.
    Bench(BenchArgs),
    /// Enhance, segment and evaluate I_tb in one run.
    Pipeline(PipelineArgs),
    /// Write a synthetic thermogram and its ground-truth mask.
    Phantom(PhantomArgs),
    /// Numerically check the kernel axioms.
    KernelCheck(KernelCheckArgs),
}

#[derive(Args, Clone)]
struct OperatorArgs {
    /// Named preset; the flags below override its settings.
    #[arg(long, conflicts_with = "kernel")]
    preset: Option<String>,
    /// Kernel family: fejer, jackson:K[:ALPHA], bspline:ORDER.
    #[arg(long)]
    kernel: Option<KernelFamily>,
    #[arg(long)]
    w: Option<f64>,
    /// Scaling factor R.
    #[arg(long)]
    scale: Option<f64>,
    /// recompute (1) or precompute (2).
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Fixed truncation threshold for the precompute strategy.
    #[arg(long)]
    truncation: Option<f64>,
    /// Border cells used for kernels with unbounded support.
    #[arg(long)]
    kernel_radius: Option<usize>,
    /// Report raw weighted sums instead of dividing by the weight total.
    #[arg(long)]
    no_renormalize: bool,
}

impl OperatorArgs {
    fn config(&self, quad: &QuadratureSpec) -> Result<EnhanceConfig> {
        let mut cfg = match (&self.preset, self.kernel) {
            (Some(name), _) => EnhanceConfig::preset(name, quad)?,
            (None, Some(kernel)) => EnhanceConfig::from_family(kernel, 15.0, 2.0, quad)?,
            (None, None) => EnhanceConfig::preset(THERMO_PRESET, quad)?,
        };
        if let Some(w) = self.w {
            cfg.w = w;
        }
        if let Some(r) = self.scale {
            cfg.scale = r;
        }
        if let Some(s) = self.strategy {
            cfg.strategy = s;
        }
        if self.truncation.is_some() {
            cfg.truncation_override = self.truncation;
        }
        if let Some(r) = self.kernel_radius {
            cfg.kernel_truncation_radius = r;
        }
        cfg.renormalize = !self.no_renormalize;
        Ok(cfg)
    }

    /// The preset by name when nothing overrides it, else the resolved settings.
    fn spec(&self, quad: &QuadratureSpec) -> Result<EnhanceSpec> {
        let untouched = self.kernel.is_none()
            && self.w.is_none()
            && self.scale.is_none()
            && self.strategy.is_none()
            && self.truncation.is_none()
            && self.kernel_radius.is_none()
            && !self.no_renormalize;
        if untouched {
            return Ok(EnhanceSpec::Preset {
                name: self.preset.clone().unwrap_or_else(|| THERMO_PRESET.into()),
            });
        }
        let cfg = self.config(quad)?;
        Ok(EnhanceSpec::Explicit {
            kernel: cfg.kernel.factors()[0].family(),
            w: cfg.w,
            scale: cfg.scale,
            strategy: cfg.strategy,
            truncation_override: cfg.truncation_override,
            kernel_truncation_radius: cfg.kernel_truncation_radius,
            boundary: cfg.boundary,
            renormalize: cfg.renormalize,
        })
    }
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output image (.csv or .pgm).
    #[arg(long)]
    out: PathBuf,
    /// Unit of CSV input.
    #[arg(long, default_value = "celsius", value_parser = parse_unit)]
    unit: Unit,
    #[command(flatten)]
    op: OperatorArgs,
    /// Optional JSON summary of the run.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Evaluate on a single thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = skthermo::segmentation::DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = skthermo::segmentation::DEFAULT_SMOOTHING)]
    smooth: usize,
    /// The bridge is warmer than the wall (default: colder).
    #[arg(long)]
    warm: bool,
    #[arg(long, default_value = "celsius", value_parser = parse_unit)]
    unit: Unit,
    #[arg(long)]
    out_mask: Option<PathBuf>,
    /// 1-based contour pixels as CSV.
    #[arg(long)]
    contours: Option<PathBuf>,
    /// Threshold report (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ItbArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `r1,c1:r2,c2`, 1-based.
    #[arg(long, value_parser = parse_line)]
    line: (Pixel, Pixel),
    /// Internal air temperature.
    #[arg(long)]
    ti: f64,
    /// Undisturbed-zone surface temperature.
    #[arg(long)]
    t1d: f64,
    #[arg(long, default_value = "raw", value_parser = parse_source)]
    source: ItbSource,
    #[arg(long, default_value = "celsius", value_parser = parse_unit)]
    unit: Unit,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ItbCompareArgs {
    /// I_tb report JSON, `{"i_tb": x}`, or a bare number.
    #[arg(long)]
    raw: PathBuf,
    #[arg(long)]
    enhanced: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Sizes: `N` for N×N or `NxM`, comma separated.
    #[arg(long, default_value = "1,2,3,5,10,20", value_delimiter = ',', value_parser = parse_size)]
    sizes: Vec<(usize, usize)>,
    #[arg(long = "w", default_value = "1,4,9,25,100,400", value_delimiter = ',')]
    w: Vec<f64>,
    #[arg(long, default_value = "jackson:2")]
    kernel: KernelFamily,
    #[arg(long, default_value_t = 2.0)]
    scale: f64,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long)]
    truncation: Option<f64>,
    /// Run the evaluation on all worker threads (default: one thread).
    #[arg(long)]
    parallel: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV table; the speedup summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Saved pipeline configuration; other flags are ignored when given.
    #[arg(long, conflicts_with_all = ["input", "out_dir"])]
    config: Option<PathBuf>,
    #[arg(long = "in", required_unless_present = "config")]
    input: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value = "celsius", value_parser = parse_unit)]
    unit: Unit,
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long, default_value_t = skthermo::segmentation::DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = skthermo::segmentation::DEFAULT_SMOOTHING)]
    smooth: usize,
    #[arg(long)]
    warm: bool,
    /// I_tb line on the input image, `r1,c1:r2,c2`.
    #[arg(long, value_parser = parse_line, requires_all = ["ti", "t1d"])]
    line: Option<(Pixel, Pixel)>,
    #[arg(long)]
    ti: Option<f64>,
    #[arg(long)]
    t1d: Option<f64>,
    /// Write the enhanced image as PGM instead of CSV.
    #[arg(long)]
    pgm: bool,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, default_value = "pillar")]
    kind: PhantomKind,
    #[arg(long, default_value_t = 64)]
    rows: usize,
    #[arg(long, default_value_t = 64)]
    cols: usize,
    #[arg(long, default_value_t = 18.5)]
    t_bridge: f64,
    #[arg(long, default_value_t = 22.5)]
    t_wall: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth mask PGM.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct KernelCheckArgs {
    #[arg(long, default_value = "jackson:12")]
    kernel: KernelFamily,
    /// Moment order β of the discrete absolute moment.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 200)]
    k_range: i64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_unit(s: &str) -> std::result::Result<Unit, String> {
    match s.to_ascii_lowercase().as_str() {
        "celsius" | "c" => Ok(Unit::Celsius),
        "graylevel" | "gray" => Ok(Unit::GrayLevel),
        _ => Err(format!("unknown unit `{s}` (celsius | graylevel)")),
    }
}

fn parse_source(s: &str) -> std::result::Result<ItbSource, String> {
    match s {
        "raw" => Ok(ItbSource::Raw),
        "enhanced" => Ok(ItbSource::Enhanced),
        "reference" => Ok(ItbSource::Reference),
        _ => Err(format!("unknown source `{s}` (raw | enhanced | reference)")),
    }
}

fn parse_pixel(s: &str) -> std::result::Result<Pixel, String> {
    let (r, c) = s.split_once(',').ok_or_else(|| format!("expected `row,col`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok(Pixel::new(num(r)?, num(c)?))
}

fn parse_line(s: &str) -> std::result::Result<(Pixel, Pixel), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected `r1,c1:r2,c2`, got `{s}`"))?;
    Ok((parse_pixel(a)?, parse_pixel(b)?))
}

fn parse_size(t: &str) -> std::result::Result<(usize, usize), String> {
    let t = t.trim();
    let num = |v: &str| v.parse::<usize>().map_err(|e| format!("size `{t}`: {e}"));
    match t.split_once(['x', 'X']) {
        Some((r, c)) => Ok((num(r)?, num(c)?)),
        None => num(t).map(|n| (n, n)),
    }
}

fn emit<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("serializable report"));
            Ok(())
        }
    }
}

/// Accepts a full report, an object with `i_tb`, or a bare number.
fn read_itb(path: &Path, source: ItbSource) -> Result<ItbReport> {
    let value: serde_json::Value = io::read_json(path)?;
    let bad = || Error::Parse {
        context: path.display().to_string(),
        message: "expected an I_tb report, {\"i_tb\": x} or a number".into(),
    };
    let i_tb = match &value {
        serde_json::Value::Number(n) => n.as_f64().ok_or_else(bad)?,
        serde_json::Value::Object(o) => o.get("i_tb").and_then(serde_json::Value::as_f64).ok_or_else(bad)?,
        _ => return Err(bad()),
    };
    if let Ok(mut full) = serde_json::from_value::<ItbReport>(value) {
        full.source = source;
        return Ok(full);
    }
    ItbReport::external(i_tb, source)
}

fn enhance_cmd(a: EnhanceArgs) -> Result<()> {
    let img = io::read_image(&a.input, a.unit)?;
    let mut cfg = a.op.config(&QuadratureSpec::default())?;
    cfg.parallel = !a.sequential;
    let out = enhance(&img, &cfg)?;
    io::write_image(&a.out, &out.image)?;
    let summary = serde_json::json!({
        "input": a.input,
        "output": a.out,
        "kernel": cfg.kernel.label(),
        "w": cfg.w,
        "scale": cfg.scale,
        "strategy": out.strategy_used,
        "rows": out.image.rows(),
        "cols": out.image.cols(),
        "applied_truncation": out.applied_truncation,
        "truncation_source": out.truncation_source,
        "neglected_term_bound": out.neglected_term_bound,
        "kernel_matrices": out.kernel_matrices,
        "kept_weights": out.kept_weights,
        "est_memory_bits": out.est_memory_bits,
        "timing_seconds": out.timing_seconds,
    });
    match &a.report {
        Some(p) => write_json(p, &summary),
        None => {
            eprintln!(
                "{}x{} -> {}x{} ({}, w={}, {}) in {:.3} s",
                img.rows(),
                img.cols(),
                out.image.rows(),
                out.image.cols(),
                cfg.kernel.label(),
                cfg.w,
                out.strategy_used,
                out.timing_seconds
            );
            Ok(())
        }
    }
}

fn segment_cmd(a: SegmentArgs) -> Result<()> {
    let img = io::read_image(&a.input, a.unit)?;
    let hist = build_histogram(&img, a.bins, a.smooth)?;
    let report = find_threshold(&hist)?;
    let mask = segment(&img, report.t_m, !a.warm);
    if let Some(p) = &a.out_mask {
        io::write_mask_pgm(p, &mask)?;
    }
    if let Some(p) = &a.contours {
        let mut text = String::from("row,col\n");
        for px in contours(&mask) {
            text.push_str(&format!("{},{}\n", px.row, px.col));
        }
        std::fs::write(p, text).map_err(|e| Error::Io { path: p.clone(), source: e })?;
    }
    emit(a.report.as_deref(), &report)
}

fn itb_cmd(a: ItbArgs) -> Result<()> {
    let img = io::read_image(&a.input, a.unit)?;
    let line = sample_line(&img, a.line.0, a.line.1)?;
    let report = compute_itb(&ItbInput::from_line(a.ti, a.t1d, line)?, a.source)?;
    emit(a.out.as_deref(), &report)
}

fn itb_compare_cmd(a: ItbCompareArgs) -> Result<()> {
    let raw = read_itb(&a.raw, ItbSource::Raw)?;
    let enh = read_itb(&a.enhanced, ItbSource::Enhanced)?;
    let reference = read_itb(&a.reference, ItbSource::Reference)?;
    let cmp = compare_itb(&[raw, enh], &reference);
    emit(a.out.as_deref(), &cmp)
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let plan = BenchPlan {
        sizes: a.sizes,
        w_values: a.w,
        kernel: a.kernel,
        scale: a.scale,
        repetitions: a.reps,
        single_threaded: !a.parallel,
        truncation_override: a.truncation,
        seed: a.seed,
    };
    let result = run_bench(&plan)?;
    if let Some(p) = &a.out {
        std::fs::write(p, result.to_csv()).map_err(|e| Error::Io { path: p.clone(), source: e })?;
    } else {
        print!("{}", result.to_csv());
    }
    if let Some(p) = &a.json {
        write_json(p, &result)?;
    }
    println!("speedup (1)/(2), threads: {}", result.threads);
    print!("{}", result.speedup_table());
    for note in &result.notes {
        println!("note: {note}");
    }
    Ok(())
}

fn pipeline_cmd(a: PipelineArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => io::read_json::<PipelineConfig>(p)?,
        None => {
            let mut cfg = PipelineConfig::new(a.input.clone().unwrap(), a.out_dir.clone().unwrap());
            cfg.unit = a.unit;
            cfg.enhance = a.op.spec(&QuadratureSpec::default())?;
            cfg.segmentation = SegmentationOptions {
                bins: a.bins,
                smoothing: a.smooth,
                bridge_is_cold: !a.warm,
            };
            cfg.itb = a.line.map(|(from, to)| ItbLine {
                from,
                to,
                t_i: a.ti.unwrap(),
                t_1d: a.t1d.unwrap(),
            });
            if a.pgm {
                cfg.output_format = io::ImageFormat::Pgm;
            }
            cfg.parallel = !a.sequential;
            cfg
        }
    };
    let report = run_pipeline(&cfg)?;
    if let (Some(t), Some(s)) = (&report.threshold, &report.segmentation) {
        println!(
            "T_m = {:.4} (peaks {:.4} / {:.4}); |A_B| = {}, |A_E| = {}",
            t.t_m, t.t_p1, t.t_p2, s.area_bridge, s.area_external
        );
    }
    if let Some(itb) = &report.itb {
        println!("I_tb raw = {:.4}, enhanced = {:.4}", itb.raw.i_tb, itb.enhanced.i_tb);
    }
    println!("report: {}", cfg.output_dir.join(skthermo::pipeline::REPORT_FILE).display());
    Ok(())
}

fn phantom_cmd(a: PhantomArgs) -> Result<()> {
    let spec = PhantomSpec {
        kind: a.kind,
        rows: a.rows,
        cols: a.cols,
        t_bridge: a.t_bridge,
        t_wall: a.t_wall,
        noise_sigma: a.sigma,
        seed: a.seed,
    };
    let p = phantom(&spec)?;
    io::write_image(&a.out, &p.image)?;
    if let Some(t) = &a.truth {
        io::write_mask_pgm(t, &p.truth)?;
    }
    Ok(())
}

fn kernel_check_cmd(a: KernelCheckArgs) -> Result<()> {
    let kern = a.kernel.build(&QuadratureSpec::default())?;
    if a.steps == 0 || a.k_range < 1 {
        return Err(Error::InvalidParameter("need --steps >= 1 and --k-range >= 1".into()));
    }
    let report = check_axioms(&kern, a.beta, &GridSpec::uniform(a.steps, a.k_range))?;
    let out = serde_json::json!({
        "kernel": a.kernel.to_string(),
        "normalization": kern.normalization(),
        "support_radius": kern.support_radius(),
        "axioms": report,
    });
    emit(a.out.as_deref(), &out)
}

#[cfg(feature = "parallel")]
fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SK_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::InvalidParameter(format!("SK_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParameter(format!("cannot configure {n} threads: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> Result<()> {
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Enhance(a) => enhance_cmd(a),
        Command::Segment(a) => segment_cmd(a),
        Command::Itb(a) => itb_cmd(a),
        Command::ItbCompare(a) => itb_compare_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Pipeline(a) => pipeline_cmd(a),
        Command::Phantom(a) => phantom_cmd(a),
        Command::KernelCheck(a) => kernel_check_cmd(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
