//! Sampling Kantorovich enhancement of thermographic images, bimodal
//! histogram segmentation of thermal bridges and the `I_tb` incidence index.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`]: Fejér, Jackson-type and central B-spline kernels, product
//!   kernels and numerical axiom checks.
//! * [`signal`]: images as step functions, cell means and output grids.
//! * [`engine`]: the bivariate operator with the recompute and
//!   precompute-and-truncate strategies.
//! * [`segmentation`]: histogram, valley threshold, masks and contours.
//! * [`energy`]: the thermal-bridge incidence factor along a pixel line.
//! * [`bench`]: timing harness comparing the two strategies.
//! * [`pipeline`], [`phantom`], [`io`]: end-to-end runs, synthetic
//!   thermograms and file formats.

pub mod bench;
pub mod energy;
pub mod engine;
pub mod error;
pub mod io;
pub mod kernel;
pub mod par;
pub mod phantom;
pub mod pipeline;
pub mod segmentation;
pub mod signal;

pub use engine::{enhance, EnhanceConfig, EnhanceResult, Strategy};
pub use error::{Error, Result};
pub use kernel::{KernelFamily, MultivariateKernel, QuadratureSpec, UnivariateKernel};
pub use bench::{run_bench, BenchPlan, BenchResult};
pub use energy::{compare_itb, compute_itb, sample_line, ItbInput, ItbReport, ItbSource};
pub use phantom::{phantom, Phantom, PhantomKind, PhantomSpec};
pub use pipeline::{run_pipeline, PipelineConfig, RunReport};
pub use segmentation::{build_histogram, contours, find_threshold, segment, Histogram, SegmentationMask, ThresholdReport};
pub use signal::{BoundaryPolicy, GridImage, Pixel, Unit};
