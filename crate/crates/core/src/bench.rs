//! Timing harness for the two evaluation strategies.
//!
//! Each cell of the plan (image size × `w`) is run once as warm-up and then
//! `repetitions` times per strategy on a seeded random image. Times cover the
//! operator evaluation, including the one-off kernel-matrix construction of
//! the precompute strategy, and exclude kernel normalisation and I/O.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{enhance, memory_estimate, EnhanceConfig, Strategy};
use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, QuadratureSpec};
use crate::signal::{GridImage, Unit};

pub const STRATEGIES: [Strategy; 2] = [Strategy::Recompute, Strategy::PrecomputeTruncate];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub sizes: Vec<(usize, usize)>,
    pub w_values: Vec<f64>,
    pub kernel: KernelFamily,
    pub scale: f64,
    pub repetitions: usize,
    pub single_threaded: bool,
    /// Fixed truncation for the precompute strategy; the measurement-resolution
    /// formula is used when `None`.
    pub truncation_override: Option<f64>,
    pub seed: u64,
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            sizes: [1, 2, 3, 5, 10, 20].iter().map(|&n| (n, n)).collect(),
            w_values: vec![1.0, 4.0, 9.0, 25.0, 100.0, 400.0],
            kernel: KernelFamily::Jackson { k: 2, alpha: 1.0 },
            scale: 2.0,
            repetitions: 3,
            single_threaded: true,
            truncation_override: None,
            seed: 0,
        }
    }
}

impl BenchPlan {
    fn validate(&self) -> Result<()> {
        if self.repetitions < 3 {
            return Err(Error::invalid(format!("need at least 3 repetitions, got {}", self.repetitions)));
        }
        if self.sizes.is_empty() || self.w_values.is_empty() {
            return Err(Error::invalid("benchmark plan needs at least one size and one w"));
        }
        if let Some(&(r, c)) = self.sizes.iter().find(|&&(r, c)| r == 0 || c == 0) {
            return Err(Error::invalid(format!("empty benchmark size {r}x{c}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub rows: usize,
    pub cols: usize,
    pub w: f64,
    pub strategy: Strategy,
    pub median_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub est_memory_bits: f64,
    pub applied_truncation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub rows: usize,
    pub cols: usize,
    pub w: f64,
    /// Recompute median over precompute median.
    pub ratio: f64,
    /// Largest difference between the two outputs.
    pub max_abs_diff: f64,
    pub neglected_term_bound: f64,
    pub gate_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub plan: BenchPlan,
    pub parallel: bool,
    pub threads: usize,
    pub cells: Vec<BenchCell>,
    pub speedups: Vec<Speedup>,
    pub notes: Vec<String>,
}

impl BenchResult {
    pub fn cell(&self, rows: usize, cols: usize, w: f64, strategy: Strategy) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| (c.rows, c.cols, c.strategy) == (rows, cols, strategy) && c.w == w)
    }

    pub fn gates_passed(&self) -> bool {
        self.speedups.iter().all(|s| s.gate_passed)
    }

    /// One line per (size, w, strategy).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rows,cols,w,strategy,median_s,min_s,max_s,est_memory_bits,truncation\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.3e}\n",
                c.rows,
                c.cols,
                c.w,
                c.strategy,
                c.median_seconds,
                c.min_seconds,
                c.max_seconds,
                c.est_memory_bits,
                c.applied_truncation
            ));
        }
        out
    }

    /// Speedup table, sizes down and `w` across.
    pub fn speedup_table(&self) -> String {
        let mut out = String::from("size");
        for w in &self.plan.w_values {
            out.push_str(&format!("\tw={w}"));
        }
        out.push('\n');
        for &(r, c) in &self.plan.sizes {
            out.push_str(&format!("{r}x{c}"));
            for &w in &self.plan.w_values {
                match self.speedups.iter().find(|s| (s.rows, s.cols) == (r, c) && s.w == w) {
                    Some(s) => out.push_str(&format!("\t{:.2}", s.ratio)),
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Uniform samples in `[18, 24)` °C.
pub fn random_image(rows: usize, cols: usize, seed: u64) -> Result<GridImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..rows * cols).map(|_| rng.random_range(18.0..24.0)).collect();
    GridImage::new(rows, cols, vals, Unit::Celsius)
}

fn order_stats(mut times: Vec<f64>) -> (f64, f64, f64) {
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = times.len();
    let median = if n % 2 == 1 { times[n / 2] } else { 0.5 * (times[n / 2 - 1] + times[n / 2]) };
    (median, times[0], times[n - 1])
}

pub fn run_bench(plan: &BenchPlan) -> Result<BenchResult> {
    plan.validate()?;
    let quad = QuadratureSpec::default();
    let kernel = crate::kernel::MultivariateKernel::isotropic(plan.kernel.build(&quad)?, 2)?;
    let parallel = !plan.single_threaded;
    let mut cells = Vec::new();
    let mut speedups = Vec::new();
    for (si, &(rows, cols)) in plan.sizes.iter().enumerate() {
        let img = random_image(rows, cols, plan.seed.wrapping_add(si as u64))?;
        for &w in &plan.w_values {
            let mut medians = [0.0; 2];
            let mut outputs = Vec::with_capacity(2);
            for (slot, strategy) in STRATEGIES.into_iter().enumerate() {
                let mut cfg = EnhanceConfig::new(kernel.clone(), w, plan.scale).with_strategy(strategy);
                cfg.truncation_override = plan.truncation_override;
                cfg.parallel = parallel;
                let warm = enhance(&img, &cfg)?;
                let mut times = Vec::with_capacity(plan.repetitions);
                for _ in 0..plan.repetitions {
                    // Clamp to a nanosecond so that tiny cells still report a positive time.
                    times.push(enhance(&img, &cfg)?.timing_seconds.max(1e-9));
                }
                let (median, min, max) = order_stats(times);
                medians[slot] = median;
                cells.push(BenchCell {
                    rows,
                    cols,
                    w,
                    strategy,
                    median_seconds: median,
                    min_seconds: min,
                    max_seconds: max,
                    est_memory_bits: memory_estimate(&img, &cfg, 64)?.for_strategy(strategy),
                    applied_truncation: warm.applied_truncation,
                });
                outputs.push(warm);
            }
            let (exact, truncated) = (&outputs[0], &outputs[1]);
            let diff = exact
                .image
                .values()
                .iter()
                .zip(truncated.image.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            speedups.push(Speedup {
                rows,
                cols,
                w,
                ratio: medians[0] / medians[1],
                max_abs_diff: diff,
                neglected_term_bound: truncated.neglected_term_bound,
                gate_passed: diff <= truncated.neglected_term_bound,
            });
        }
    }
    let threads = if parallel { crate::par::worker_threads() } else { 1 };
    let mut notes = vec![
        "times include kernel-matrix construction for the precompute strategy".to_string(),
        "median of the repetitions after one discarded warm-up run".to_string(),
    ];
    if speedups.iter().any(|s| !s.gate_passed) {
        notes.push("correctness gate failed for at least one cell; timings there are not comparable".into());
    }
    Ok(BenchResult {
        plan: plan.clone(),
        parallel,
        threads,
        cells,
        speedups,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> BenchPlan {
        BenchPlan {
            sizes: vec![(3, 3), (5, 4)],
            w_values: vec![1.0, 4.0],
            kernel: KernelFamily::BSpline { order: 3 },
            ..BenchPlan::default()
        }
    }

    #[test]
    fn order_statistics_hold() {
        let r = run_bench(&small_plan()).unwrap();
        assert_eq!(r.cells.len(), 2 * 2 * 2);
        for c in &r.cells {
            assert!(c.min_seconds > 0.0);
            assert!(c.min_seconds <= c.median_seconds && c.median_seconds <= c.max_seconds);
        }
        assert!(r.gates_passed());
        assert_eq!(r.speedups.len(), 4);
    }

    #[test]
    fn memory_follows_closed_forms() {
        let r = run_bench(&small_plan()).unwrap();
        let c1 = r.cell(5, 4, 4.0, Strategy::Recompute).unwrap();
        let c2 = r.cell(5, 4, 4.0, Strategy::PrecomputeTruncate).unwrap();
        assert_eq!(c1.est_memory_bits, 20.0 * 16.0 * 64.0);
        assert_eq!(c2.est_memory_bits, 4.0 * c1.est_memory_bits);
    }

    #[test]
    fn outputs_are_tabular() {
        let r = run_bench(&small_plan()).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + r.cells.len());
        assert!(csv.lines().all(|l| l.split(',').count() == 9));
        let table = r.speedup_table();
        assert_eq!(table.lines().count(), 3);
        let json = serde_json::to_string(&r).unwrap();
        let back: BenchResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back.cells.len(), r.cells.len());
    }

    #[test]
    fn plan_validation() {
        let few = BenchPlan { repetitions: 2, ..small_plan() };
        assert!(run_bench(&few).is_err());
        let empty = BenchPlan { sizes: vec![(0, 3)], ..small_plan() };
        assert!(run_bench(&empty).is_err());
    }

    #[test]
    fn median_of_even_count() {
        assert_eq!(order_stats(vec![4.0, 1.0, 3.0, 2.0]), (2.5, 1.0, 4.0));
        assert_eq!(order_stats(vec![5.0, 1.0, 3.0]), (3.0, 1.0, 5.0));
    }
}
