//! Kernel families for the sampling Kantorovich operator.
//!
//! Three univariate families are provided: the Fejér kernel, the
//! Jackson-type kernels `J_k` (normalized even powers of `sinc`) and the
//! central B-splines `M_s`. Multivariate kernels are tensor products of
//! univariate factors.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Normalized cardinal sine, `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    let z = PI * x;
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Parameters of a univariate kernel family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    Fejer,
    Jackson { k: u32, alpha: f64 },
    BSpline { order: u32 },
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelFamily::Fejer => write!(f, "fejer"),
            KernelFamily::Jackson { k, alpha } if alpha == 1.0 => write!(f, "jackson:{k}"),
            KernelFamily::Jackson { k, alpha } => write!(f, "jackson:{k}:{alpha}"),
            KernelFamily::BSpline { order } => write!(f, "bspline:{order}"),
        }
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    /// Accepts `bspline:<s>`, `jackson:<k>[:alpha]` and `fejer`.
    fn from_str(s: &str) -> Result<Self> {
        let spec = s.trim().to_ascii_lowercase();
        let mut parts = spec.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let bad = |msg: &str| Error::parse(format!("kernel spec `{s}`"), msg.to_string());
        let int_arg = |v: &str| v.parse::<u32>().map_err(|_| bad("expected a positive integer"));
        let family = match (name, args.as_slice()) {
            ("fejer", []) => KernelFamily::Fejer,
            ("bspline", [order]) => KernelFamily::BSpline {
                order: int_arg(order)?,
            },
            ("jackson", [k]) => KernelFamily::Jackson {
                k: int_arg(k)?,
                alpha: 1.0,
            },
            ("jackson", [k, alpha]) => KernelFamily::Jackson {
                k: int_arg(k)?,
                alpha: alpha.parse().map_err(|_| bad("alpha must be a real number"))?,
            },
            _ => return Err(bad("expected bspline:<s>, jackson:<k>[:alpha] or fejer")),
        };
        family.validate()?;
        Ok(family)
    }
}

impl Serialize for KernelFamily {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KernelFamily {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl KernelFamily {
    fn validate(&self) -> Result<()> {
        match *self {
            KernelFamily::Fejer => Ok(()),
            KernelFamily::BSpline { order } if order >= 1 => Ok(()),
            KernelFamily::BSpline { order } => Err(Error::invalid(format!(
                "B-spline order must be >= 1, got {order}"
            ))),
            KernelFamily::Jackson { k, alpha } => {
                if k < 1 {
                    Err(Error::invalid(format!("Jackson index k must be >= 1, got {k}")))
                } else if !(alpha >= 1.0 && alpha.is_finite()) {
                    Err(Error::invalid(format!("Jackson alpha must be >= 1, got {alpha}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Build the kernel, computing the Jackson normalization with `quad`.
    pub fn build(&self, quad: &QuadratureSpec) -> Result<UnivariateKernel> {
        match *self {
            KernelFamily::Fejer => Ok(make_fejer()),
            KernelFamily::BSpline { order } => make_bspline(order),
            KernelFamily::Jackson { k, alpha } => make_jackson(k, alpha, quad),
        }
    }
}

/// Composite trapezoid settings for the Jackson normalization integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Upper bound on the neglected tail of `∫ sinc^{2k}(v) dv`.
    pub tolerance: f64,
    /// Node spacing in the kernel's own variable; `None` picks `πα/2`,
    /// well below the `2πα` Nyquist spacing of the band-limited integrand.
    pub step: Option<f64>,
    pub max_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            tolerance: 1e-10,
            step: None,
            max_nodes: 4_000_000,
        }
    }
}

impl QuadratureSpec {
    /// Same domain rule, node spacing halved.
    pub fn refined(&self, alpha: f64) -> Self {
        let step = self.step.unwrap_or(PI * alpha / 2.0) / 2.0;
        QuadratureSpec {
            step: Some(step),
            max_nodes: self.max_nodes.saturating_mul(2),
            ..*self
        }
    }
}

/// A validated univariate kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateKernel {
    family: KernelFamily,
    normalization: f64,
    support_radius: Option<f64>,
    // C(s, i) / (s-1)! for B-splines, empty otherwise.
    spline_coeffs: Vec<f64>,
}

impl UnivariateKernel {
    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// `c_k` for Jackson kernels, 1 for the other families.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Half-width of the support, `None` when the support is unbounded.
    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Fejer => {
                let s = sinc(x / 2.0);
                0.5 * s * s
            }
            KernelFamily::Jackson { k, alpha } => {
                let scale = 2.0 * f64::from(k) * PI * alpha;
                self.normalization * sinc(x / scale).powi(2 * k as i32)
            }
            KernelFamily::BSpline { order } => self.eval_bspline(order, x),
        }
    }

    fn eval_bspline(&self, order: u32, x: f64) -> f64 {
        let half = f64::from(order) / 2.0;
        let ax = x.abs();
        if order == 1 {
            // Symmetric convention at the jump keeps the integer shifts summing to one.
            return if ax < 0.5 {
                1.0
            } else if ax == 0.5 {
                0.5
            } else {
                0.0
            };
        }
        if ax >= half {
            return 0.0;
        }
        // M_s is even; evaluating at -|x| keeps only the few leading terms active.
        let xl = -ax;
        let power = (order - 1) as i32;
        let mut acc = 0.0;
        for (i, c) in self.spline_coeffs.iter().enumerate() {
            let t = half + xl - i as f64;
            if t <= 0.0 {
                break;
            }
            let term = c * t.powi(power);
            if i % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }
}

/// Central B-spline `M_s` of order `s`, supported on `[-s/2, s/2]`.
pub fn make_bspline(order: u32) -> Result<UnivariateKernel> {
    let family = KernelFamily::BSpline { order };
    family.validate()?;
    let s = order as usize;
    let factorial: f64 = (1..s).map(|v| v as f64).product();
    let mut coeffs = Vec::with_capacity(s + 1);
    let mut binom = 1.0f64;
    for i in 0..=s {
        coeffs.push(binom / factorial);
        binom = binom * (s - i) as f64 / (i + 1) as f64;
    }
    Ok(UnivariateKernel {
        family,
        normalization: 1.0,
        support_radius: Some(f64::from(order) / 2.0),
        spline_coeffs: coeffs,
    })
}

/// Fejér kernel `F(x) = sinc²(x/2) / 2`.
pub fn make_fejer() -> UnivariateKernel {
    UnivariateKernel {
        family: KernelFamily::Fejer,
        normalization: 1.0,
        support_radius: None,
        spline_coeffs: Vec::new(),
    }
}

/// Jackson-type kernel `J_k(x) = c_k sinc^{2k}(x / (2kπα))`.
///
/// `c_k` is the reciprocal of `∫ sinc^{2k}(u/(2kπα)) du`, computed by the
/// composite trapezoid rule on a symmetric domain. The half-width is chosen
/// so that the bound `|sinc(v)| <= 1/(π|v|)` caps the neglected tail at
/// `quad.tolerance` (measured in the unscaled variable `v`).
pub fn make_jackson(k: u32, alpha: f64, quad: &QuadratureSpec) -> Result<UnivariateKernel> {
    let family = KernelFamily::Jackson { k, alpha };
    family.validate()?;
    if !(quad.tolerance > 0.0) {
        return Err(Error::invalid("quadrature tolerance must be positive"));
    }
    let integral = jackson_integral(k, alpha, quad)?;
    let normalization = 1.0 / integral;
    if !normalization.is_finite() || normalization <= 0.0 {
        return Err(Error::numeric(format!(
            "Jackson(k={k}, alpha={alpha}) normalization is not positive and finite: {normalization}"
        )));
    }
    Ok(UnivariateKernel {
        family,
        normalization,
        support_radius: None,
        spline_coeffs: Vec::new(),
    })
}

fn jackson_integral(k: u32, alpha: f64, quad: &QuadratureSpec) -> Result<f64> {
    let two_k = 2 * k;
    let scale = f64::from(two_k) * PI * alpha;
    // ∫_{|v|>L} sinc^{2k} <= 2 / (π^{2k} (2k-1) L^{2k-1})
    let denom = PI.powi(two_k as i32) * f64::from(two_k - 1) * quad.tolerance;
    let half_v = (2.0 / denom).powf(1.0 / f64::from(two_k - 1)).max(2.0);
    let half_u = half_v * scale;

    let target_step = quad.step.unwrap_or(PI * alpha / 2.0);
    if !(target_step > 0.0) {
        return Err(Error::invalid("quadrature step must be positive"));
    }
    let intervals = (2.0 * half_u / target_step).ceil();
    if !intervals.is_finite() || intervals > quad.max_nodes as f64 {
        return Err(Error::numeric(format!(
            "Jackson(k={k}, alpha={alpha}) normalization needs {intervals:.3e} trapezoid nodes on \
             [-{half_u:.3e}, {half_u:.3e}] to reach tail tolerance {:e}; limit is {} \
             (raise the tolerance or max_nodes)",
            quad.tolerance, quad.max_nodes
        )));
    }
    let n = intervals as usize;
    let h = 2.0 * half_u / n as f64;
    let f = |u: f64| sinc(u / scale).powi(two_k as i32);
    let interior: f64 = (1..n).map(|j| f(-half_u + j as f64 * h)).sum();
    let total = h * (interior + 0.5 * (f(-half_u) + f(half_u)));
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::numeric(format!(
            "Jackson(k={k}, alpha={alpha}) normalization integral evaluated to {total}"
        )));
    }
    Ok(total)
}

/// Tensor-product kernel on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateKernel {
    factors: Vec<UnivariateKernel>,
}

/// Product of univariate kernels, one per coordinate.
pub fn product_kernel(factors: Vec<UnivariateKernel>) -> Result<MultivariateKernel> {
    if factors.is_empty() {
        return Err(Error::invalid("product kernel needs at least one factor"));
    }
    Ok(MultivariateKernel { factors })
}

impl MultivariateKernel {
    /// `n`-fold product of the same univariate kernel.
    pub fn isotropic(kernel: UnivariateKernel, dims: usize) -> Result<Self> {
        product_kernel(vec![kernel; dims])
    }

    pub fn dims(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[UnivariateKernel] {
        &self.factors
    }

    /// Per-axis support half-widths.
    pub fn effective_support_radius(&self) -> Vec<Option<f64>> {
        self.factors.iter().map(|f| f.support_radius()).collect()
    }

    /// # Panics
    /// If `x.len()` differs from the kernel dimension.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.factors.len(), "kernel dimension mismatch");
        self.factors
            .iter()
            .zip(x)
            .map(|(f, &xi)| f.evaluate(xi))
            .product()
    }

    /// Compact label such as `jackson:12` or `bspline:3*fejer`.
    pub fn label(&self) -> String {
        let first = self.factors[0].family();
        if self.factors.iter().all(|f| f.family() == first) {
            first.to_string()
        } else {
            self.factors
                .iter()
                .map(|f| f.family().to_string())
                .collect::<Vec<_>>()
                .join("*")
        }
    }
}

/// Finite test lattice for the kernel axiom estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u_values: Vec<f64>,
    /// The integer sum runs over `k` in `-k_range..=k_range`.
    pub k_range: i64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::uniform(100, 200)
    }
}

impl GridSpec {
    /// `u` in `{0, 1/steps, ..., (steps-1)/steps}`.
    pub fn uniform(steps: usize, k_range: i64) -> Self {
        GridSpec {
            u_values: (0..steps).map(|i| i as f64 / steps as f64).collect(),
            k_range,
        }
    }

    fn describe(&self) -> String {
        let lo = self.u_values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.u_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        format!(
            "{} u-values in [{lo}, {hi}], k in [-{}, {}]",
            self.u_values.len(),
            self.k_range,
            self.k_range
        )
    }
}

/// Numerical estimates of summability, partition of unity and the discrete
/// absolute moment on a finite grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelAxiomReport {
    pub summability_estimate: f64,
    pub partition_of_unity_max_deviation: f64,
    pub moment_beta: f64,
    pub moment_estimate: f64,
    pub grid_spec: String,
}

pub fn check_axioms(kern: &UnivariateKernel, beta: f64, grid: &GridSpec) -> Result<KernelAxiomReport> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("moment order beta must be > 0, got {beta}")));
    }
    if grid.u_values.is_empty() || grid.k_range < 0 {
        return Err(Error::invalid("axiom grid needs u-values and a non-negative k-range"));
    }
    let mut summability: f64 = 0.0;
    let mut deviation: f64 = 0.0;
    let mut moment: f64 = 0.0;
    for &u in &grid.u_values {
        let mut signed = 0.0;
        let mut abs = 0.0;
        let mut mom = 0.0;
        for k in -grid.k_range..=grid.k_range {
            let t = u - k as f64;
            let v = kern.evaluate(t);
            signed += v;
            abs += v.abs();
            mom += v.abs() * t.abs().powf(beta);
        }
        deviation = deviation.max((signed - 1.0).abs());
        summability = summability.max(abs);
        moment = moment.max(mom);
    }
    Ok(KernelAxiomReport {
        summability_estimate: summability,
        partition_of_unity_max_deviation: deviation,
        moment_beta: beta,
        moment_estimate: moment,
        grid_spec: grid.describe(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exact `∫_R sinc^{2k}(v) dv` from the alternating binomial sum for
    /// `∫_0^∞ (sin x / x)^n dx`, accumulated in i128.
    fn sinc_power_integral(k: u32) -> f64 {
        let n = 2 * k as i128;
        let mut binom: i128 = 1;
        let mut sum: i128 = 0;
        for j in 0..=(n / 2) {
            let base = n - 2 * j;
            let term = binom * base.pow((n - 1) as u32);
            if j % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            binom = binom * (n - j) / (j + 1);
        }
        let fact: f64 = (1..n).map(|v| v as f64).product();
        let half_line = PI * sum as f64 / (2f64.powi(n as i32) * fact);
        2.0 * half_line / PI
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(3.0).abs() < 1e-15);
        let x = 1e-6;
        let direct = (PI * x).sin() / (PI * x);
        assert!((sinc(x) - direct).abs() < 1e-15);
    }

    #[test]
    fn bspline_values() {
        let m2 = make_bspline(2).unwrap();
        assert_eq!(m2.evaluate(0.0), 1.0);
        assert_eq!(m2.evaluate(1.0), 0.0);
        assert_eq!(m2.support_radius(), Some(1.0));
        let m3 = make_bspline(3).unwrap();
        assert!((m3.evaluate(0.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn bspline_order_three_matches_box_convolution() {
        // Riemann convolution of three unit boxes evaluated at 0.
        let n = 2000usize;
        let h = 1.0 / n as f64;
        let m2 = |x: f64| (1.0 - x.abs()).max(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            let t = -0.5 + (i as f64 + 0.5) * h;
            acc += m2(-t) * h;
        }
        let m3 = make_bspline(3).unwrap();
        assert!((m3.evaluate(0.0) - acc).abs() < 1e-6);
        for &x in &[0.3, 0.9, 1.2] {
            let mut acc = 0.0;
            for i in 0..n {
                let t = -0.5 + (i as f64 + 0.5) * h;
                acc += m2(x - t) * h;
            }
            assert!((m3.evaluate(x) - acc).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn bspline_is_zero_outside_support() {
        for s in 1..=7u32 {
            let m = make_bspline(s).unwrap();
            let half = f64::from(s) / 2.0;
            for &x in &[half + 1e-9, half + 0.5, -half - 1e-9, 100.0] {
                assert_eq!(m.evaluate(x), 0.0, "s={s} x={x}");
            }
        }
    }

    #[test]
    fn bspline_rejects_order_zero() {
        assert!(matches!(make_bspline(0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn fejer_values() {
        let f = make_fejer();
        assert_eq!(f.evaluate(0.0), 0.5);
        assert!(f.evaluate(2.0).abs() < 1e-16);
        assert!((f.evaluate(1.0) - 2.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn jackson_normalization_matches_closed_form() {
        for &(k, alpha) in &[(2u32, 1.0), (3, 1.0), (12, 1.0), (2, 1.5)] {
            let j = make_jackson(k, alpha, &QuadratureSpec::default()).unwrap();
            let exact = 1.0 / (2.0 * f64::from(k) * PI * alpha * sinc_power_integral(k));
            let rel = (j.normalization() - exact).abs() / exact;
            assert!(rel < 1e-9, "k={k} alpha={alpha} rel={rel:e}");
            assert_eq!(j.evaluate(0.0), j.normalization());
        }
    }

    #[test]
    fn jackson_normalization_stable_under_refinement() {
        let quad = QuadratureSpec::default();
        for &k in &[2u32, 5, 12] {
            let coarse = make_jackson(k, 1.0, &quad).unwrap().normalization();
            let fine = make_jackson(k, 1.0, &quad.refined(1.0)).unwrap().normalization();
            assert!((coarse - fine).abs() / coarse < 1e-10, "k={k}");
        }
    }

    #[test]
    fn jackson_integrates_to_one() {
        // Independent fine midpoint rule over a wide window.
        let j = make_jackson(12, 1.0, &QuadratureSpec::default()).unwrap();
        let h = 0.01;
        let mut acc = 0.0;
        let mut u = -400.0 + h / 2.0;
        while u < 400.0 {
            acc += j.evaluate(u) * h;
            u += h;
        }
        assert!((acc - 1.0).abs() < 1e-8, "{acc}");
    }

    #[test]
    fn jackson_k1_default_quadrature_reports_budget() {
        let err = make_jackson(1, 1.0, &QuadratureSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
        assert!(err.to_string().contains("trapezoid nodes"));
        let loose = QuadratureSpec {
            tolerance: 1e-6,
            ..QuadratureSpec::default()
        };
        let j1 = make_jackson(1, 1.0, &loose).unwrap();
        // ∫ sinc²(u/2π) du = 2π.
        assert!((j1.normalization() - 1.0 / (2.0 * PI)).abs() < 1e-6);
    }

    #[test]
    fn jackson_rejects_bad_parameters() {
        let q = QuadratureSpec::default();
        assert!(make_jackson(0, 1.0, &q).is_err());
        assert!(make_jackson(2, 0.5, &q).is_err());
    }

    #[test]
    fn product_kernel_cases() {
        let m3 = make_bspline(3).unwrap();
        let p = product_kernel(vec![m3.clone(), m3.clone()]).unwrap();
        assert!((p.evaluate(&[0.0, 0.0]) - 0.5625).abs() < 1e-15);
        assert_eq!(p.evaluate(&[0.2, 1.6]), 0.0);
        let single = product_kernel(vec![m3.clone()]).unwrap();
        for &x in &[-1.2, -0.1, 0.0, 0.7] {
            assert_eq!(single.evaluate(&[x]), m3.evaluate(x));
        }
        assert!(product_kernel(vec![]).is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["bspline:3", "jackson:12", "jackson:2:1.5", "fejer"] {
            let fam: KernelFamily = s.parse().unwrap();
            assert_eq!(fam.to_string(), s);
        }
        assert!("jackson:0".parse::<KernelFamily>().is_err());
        assert!("gauss:2".parse::<KernelFamily>().is_err());
        assert!("bspline".parse::<KernelFamily>().is_err());
    }

    #[test]
    fn axioms_bspline_exact() {
        let grid = GridSpec::default();
        for s in [2u32, 3, 4, 5] {
            let r = check_axioms(&make_bspline(s).unwrap(), 1.0, &grid).unwrap();
            assert!(r.partition_of_unity_max_deviation < 1e-12, "s={s}");
        }
        let r2 = check_axioms(&make_bspline(2).unwrap(), 1.0, &grid).unwrap();
        // Brute force: 2u(1-u) peaks at 1/2 on the grid.
        assert!(r2.moment_estimate <= 1.0 + 1e-12);
        assert!((r2.moment_estimate - 0.5).abs() < 1e-12);
        assert!((r2.summability_estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axioms_jackson_twelve() {
        let j = make_jackson(12, 1.0, &QuadratureSpec::default()).unwrap();
        let r = check_axioms(&j, 1.0, &GridSpec::default()).unwrap();
        assert!(r.partition_of_unity_max_deviation < 1e-9, "{r:?}");
        assert!(r.moment_estimate.is_finite() && r.moment_estimate > 0.0);
    }

    #[test]
    fn truncated_deviation_decreases_with_range() {
        let q = QuadratureSpec::default();
        for kern in [make_fejer(), make_jackson(2, 1.0, &q).unwrap()] {
            let devs: Vec<f64> = [25, 50, 100]
                .iter()
                .map(|&kr| {
                    check_axioms(&kern, 1.0, &GridSpec::uniform(50, kr))
                        .unwrap()
                        .partition_of_unity_max_deviation
                })
                .collect();
            assert!(devs[0] > devs[1] && devs[1] > devs[2], "{:?} {:?}", kern.family(), devs);
        }
    }

    #[test]
    fn axioms_reject_bad_beta() {
        assert!(check_axioms(&make_fejer(), 0.0, &GridSpec::default()).is_err());
    }

    proptest! {
        #[test]
        fn product_equals_factor_product(x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let q = QuadratureSpec::default();
            let a = make_jackson(2, 1.0, &q).unwrap();
            let b = make_bspline(4).unwrap();
            let p = product_kernel(vec![a.clone(), b.clone()]).unwrap();
            prop_assert_eq!(p.evaluate(&[x, y]), a.evaluate(x) * b.evaluate(y));
        }

        #[test]
        fn kernels_are_finite(x in -1e6f64..1e6) {
            let q = QuadratureSpec::default();
            for k in [make_fejer(), make_bspline(3).unwrap(), make_jackson(12, 1.0, &q).unwrap()] {
                prop_assert!(k.evaluate(x).is_finite());
            }
        }
    }
}
