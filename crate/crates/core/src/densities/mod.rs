//! One-dimensional densities for the prior and noise roles: construction,
//! evaluation, scaling, and the structural checks (symmetry, quasi-concavity,
//! log-concavity, concavity of `log f(e^x)`) the verification harness relies on.

mod kernels;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::quad;

use kernels::{
    CauchyKernel, CauchyUniformKernel, DoubleParetoKernel, Kernel, LaplaceKernel, LogisticKernel,
    NormalKernel, ScaledKernel, SmoothedUniformKernel, StudentTKernel,
};

/// One-sided tail mass left outside the effective support.
pub const EFFECTIVE_TAIL_MASS: f64 = 1e-12;

/// Relative tolerance for the structural checks; differences within this
/// count as flat rather than as violations.
pub const DEFAULT_CHECK_TOL: f64 = 1e-7;

/// Default number of points in a structural-check grid.
pub const DEFAULT_CHECK_POINTS: usize = 2048;

const PDF_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Normal,
    Logistic,
    DoubleExponential,
    StudentT,
    Cauchy,
    DoublePareto,
    SmoothedUniform,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Logistic => "logistic",
            Family::DoubleExponential => "doubleexponential",
            Family::StudentT => "studentt",
            Family::Cauchy => "cauchy",
            Family::DoublePareto => "doublepareto",
            Family::SmoothedUniform => "smootheduniform",
        }
    }
}

/// Family-specific shape parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeParam {
    None,
    /// Degrees of freedom for the student-t family.
    Degrees(f64),
    /// Tail index alpha for the double-Pareto family.
    TailIndex(f64),
    /// Flat half-width delta and quadratic log-decay rate d for the
    /// smoothed-uniform family.
    Smoothing { delta: f64, decay: f64 },
}

/// Serializable description of a density; canonical text form is
/// `family(location, scale[, shape...])`, e.g. `normal(0,1)` or
/// `studentt(0,1,3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySpec {
    pub family: Family,
    pub location: f64,
    pub scale: f64,
    pub shape: ShapeParam,
}

fn fmt_param(v: f64) -> String {
    format!("{v}")
}

impl DensitySpec {
    pub fn normal(location: f64, scale: f64) -> Self {
        Self {
            family: Family::Normal,
            location,
            scale,
            shape: ShapeParam::None,
        }
    }
    pub fn logistic(location: f64, scale: f64) -> Self {
        Self {
            family: Family::Logistic,
            location,
            scale,
            shape: ShapeParam::None,
        }
    }
    pub fn double_exponential(location: f64, scale: f64) -> Self {
        Self {
            family: Family::DoubleExponential,
            location,
            scale,
            shape: ShapeParam::None,
        }
    }
    pub fn student_t(location: f64, scale: f64, freedom: f64) -> Self {
        Self {
            family: Family::StudentT,
            location,
            scale,
            shape: ShapeParam::Degrees(freedom),
        }
    }
    pub fn cauchy(location: f64, scale: f64) -> Self {
        Self {
            family: Family::Cauchy,
            location,
            scale,
            shape: ShapeParam::None,
        }
    }
    pub fn double_pareto(location: f64, scale: f64, alpha: f64) -> Self {
        Self {
            family: Family::DoublePareto,
            location,
            scale,
            shape: ShapeParam::TailIndex(alpha),
        }
    }
    pub fn smoothed_uniform(location: f64, scale: f64, delta: f64, decay: f64) -> Self {
        Self {
            family: Family::SmoothedUniform,
            location,
            scale,
            shape: ShapeParam::Smoothing { delta, decay },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !self.location.is_finite() {
            return bad(format!("{}: location must be finite", self.family.name()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!(
                "{}: scale must be strictly positive, got {}",
                self.family.name(),
                self.scale
            ));
        }
        match (self.family, self.shape) {
            (Family::StudentT, ShapeParam::Degrees(nu)) if nu > 0.0 && nu.is_finite() => Ok(()),
            (Family::StudentT, _) => bad("studentt: degrees of freedom must be > 0".into()),
            (Family::DoublePareto, ShapeParam::TailIndex(a)) if a > 0.0 && a.is_finite() => Ok(()),
            (Family::DoublePareto, _) => bad("doublepareto: tail index must be > 0".into()),
            (Family::SmoothedUniform, ShapeParam::Smoothing { delta, decay })
                if delta > 0.0 && decay > 0.0 && delta.is_finite() && decay.is_finite() =>
            {
                Ok(())
            }
            (Family::SmoothedUniform, _) => {
                bad("smootheduniform: delta and decay must be > 0".into())
            }
            (_, ShapeParam::None) => Ok(()),
            (f, _) => bad(format!("{}: family takes no shape parameter", f.name())),
        }
    }

    /// Canonical text form, e.g. `normal(0,1)`.
    pub fn canonical(&self) -> String {
        let mut params = vec![fmt_param(self.location), fmt_param(self.scale)];
        match self.shape {
            ShapeParam::None => {}
            ShapeParam::Degrees(v) | ShapeParam::TailIndex(v) => params.push(fmt_param(v)),
            ShapeParam::Smoothing { delta, decay } => {
                params.push(fmt_param(delta));
                params.push(fmt_param(decay));
            }
        }
        format!("{}({})", self.family.name(), params.join(","))
    }

    /// Parse the canonical text form. `laplace` is accepted as an alias for
    /// `doubleexponential`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, args) = split_spec_text(text)?;
        let spec = match (name.as_str(), args.len()) {
            ("normal", 2) => DensitySpec::normal(args[0], args[1]),
            ("logistic", 2) => DensitySpec::logistic(args[0], args[1]),
            ("doubleexponential", 2) | ("laplace", 2) => {
                DensitySpec::double_exponential(args[0], args[1])
            }
            ("studentt", 3) => DensitySpec::student_t(args[0], args[1], args[2]),
            ("cauchy", 2) => DensitySpec::cauchy(args[0], args[1]),
            ("doublepareto", 3) => DensitySpec::double_pareto(args[0], args[1], args[2]),
            ("smootheduniform", 4) => {
                DensitySpec::smoothed_uniform(args[0], args[1], args[2], args[3])
            }
            ("normal" | "logistic" | "doubleexponential" | "laplace" | "cauchy", n) => {
                return Err(Error::InvalidParameter(format!(
                    "{name} takes 2 parameters (location, scale), got {n}"
                )))
            }
            ("studentt" | "doublepareto", n) => {
                return Err(Error::InvalidParameter(format!(
                    "{name} takes 3 parameters (location, scale, shape), got {n}"
                )))
            }
            ("smootheduniform", n) => {
                return Err(Error::InvalidParameter(format!(
                    "smootheduniform takes 4 parameters (location, scale, delta, decay), got {n}"
                )))
            }
            (other, _) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown density family `{other}` (expected one of: normal, logistic, \
                     doubleexponential, studentt, cauchy, doublepareto, smootheduniform)"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

pub(crate) fn split_spec_text(text: &str) -> Result<(String, Vec<f64>)> {
    let t = text.trim();
    let open = t.find('(').ok_or_else(|| {
        Error::InvalidParameter(format!("density spec `{t}` must look like family(p1,p2,...)"))
    })?;
    if !t.ends_with(')') {
        return Err(Error::InvalidParameter(format!(
            "density spec `{t}` is missing the closing parenthesis"
        )));
    }
    let name = t[..open].trim().to_ascii_lowercase();
    let inner = &t[open + 1..t.len() - 1];
    let mut args = Vec::new();
    for piece in inner.split(',') {
        let piece = piece.trim();
        let v: f64 = piece.parse().map_err(|_| {
            Error::InvalidParameter(format!("density spec `{t}`: `{piece}` is not a number"))
        })?;
        args.push(v);
    }
    Ok((name, args))
}

/// An evaluable one-dimensional probability density together with its
/// declared structural properties. Immutable after construction; all
/// evaluations are pure.
#[derive(Clone)]
pub struct Density {
    kernel: Arc<dyn Kernel>,
    spec: Option<DensitySpec>,
    label: String,
    center: f64,
    scale_hint: f64,
    support: (f64, f64),
    has_finite_first_moment: bool,
    admissible_as_noise: bool,
    annotation: Option<String>,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("label", &self.label)
            .field("center", &self.center)
            .field("support", &self.support)
            .field("admissible_as_noise", &self.admissible_as_noise)
            .finish()
    }
}

impl Density {
    pub fn pdf(&self, x: f64) -> f64 {
        self.kernel.pdf(x)
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        self.kernel.log_pdf(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.kernel.cdf(x)
    }

    /// Inverse cdf; analytic where the family provides one, bisection on the
    /// cdf otherwise.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!((0.0..=1.0).contains(&p), "quantile level out of [0,1]");
        match self.kernel.quantile(p) {
            Some(q) => q,
            None => bisect_quantile(|x| self.kernel.cdf(x), p, self.center, self.scale_hint),
        }
    }

    /// d/dx log pdf, preferring the family's analytic expression and falling
    /// back to a central difference.
    pub fn log_pdf_slope(&self, x: f64) -> f64 {
        self.kernel
            .log_pdf_deriv(x)
            .unwrap_or_else(|| self.numeric_log_pdf_slope(x))
    }

    /// Central-difference d/dx log pdf; kept as an independent cross-check
    /// of the analytic path.
    pub fn numeric_log_pdf_slope(&self, x: f64) -> f64 {
        let h = (1e-6 * self.scale_hint).max(1e-9 * x.abs()).max(1e-12);
        (self.kernel.log_pdf(x + h) - self.kernel.log_pdf(x - h)) / (2.0 * h)
    }

    /// Whether the family exposes an analytic log-density derivative.
    pub fn has_analytic_slope(&self) -> bool {
        self.kernel.log_pdf_deriv(self.center).is_some()
    }

    /// Symmetry center.
    pub fn center(&self) -> f64 {
        self.center
    }

    /// Half-width of the central ~68% mass; a dispersion proxy used to size
    /// grids and finite-difference steps.
    pub fn scale_hint(&self) -> f64 {
        self.scale_hint
    }

    /// Interval holding all but `EFFECTIVE_TAIL_MASS` of each tail.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn has_finite_first_moment(&self) -> bool {
        self.has_finite_first_moment
    }

    /// Centered at 0 with a finite absolute first moment.
    pub fn admissible_as_noise(&self) -> bool {
        self.admissible_as_noise
    }

    pub fn spec(&self) -> Option<&DensitySpec> {
        self.spec.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Construction notes (e.g. the spliced cap interval of the
    /// double-Pareto family).
    pub fn annotation(&self) -> Option<&str> {
        self.annotation.as_deref()
    }

    /// Interior kinks or curvature breaks (Laplace center, smoothed-uniform
    /// shoulders, double-Pareto splice junctions); integration panels align
    /// with these.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.kernel.breakpoints()
    }

    /// Same canonical construction (used for precondition checks like
    /// "both agents share the prior").
    pub fn same_construction(&self, other: &Density) -> bool {
        self.label == other.label
    }

    /// Closed-form convolution of a standard Cauchy and an independent
    /// Uniform[-1,1], then shifted by `location` and scaled by `scale`.
    pub fn cauchy_plus_uniform(location: f64, scale: f64) -> Result<Density> {
        if !(scale > 0.0 && scale.is_finite() && location.is_finite()) {
            return Err(Error::InvalidParameter(
                "cauchyuniform: scale must be > 0 and location finite".into(),
            ));
        }
        let kernel: Arc<dyn Kernel> = Arc::new(CauchyUniformKernel::new(location, scale));
        let mut d = Density {
            kernel,
            spec: None,
            label: format!("cauchyuniform({},{})", fmt_param(location), fmt_param(scale)),
            center: location,
            scale_hint: scale,
            support: (0.0, 0.0),
            has_finite_first_moment: false,
            admissible_as_noise: false,
            annotation: Some("independent sum of cauchy and uniform, closed-form pdf".into()),
        };
        d.finish_geometry();
        Ok(d)
    }

    /// Parse either a family spec (`normal(0,1)`) or the `cauchyuniform(0,1)`
    /// preset.
    pub fn parse(text: &str) -> Result<Density> {
        let (name, args) = split_spec_text(text)?;
        if name == "cauchyuniform" {
            if args.len() != 2 {
                return Err(Error::InvalidParameter(
                    "cauchyuniform takes 2 parameters (location, scale)".into(),
                ));
            }
            return Density::cauchy_plus_uniform(args[0], args[1]);
        }
        make_density(&DensitySpec::parse(text)?)
    }

    fn finish_geometry(&mut self) {
        let lo = self.quantile_raw(EFFECTIVE_TAIL_MASS);
        let hi = self.quantile_raw(1.0 - EFFECTIVE_TAIL_MASS);
        self.support = (lo, hi);
        let q16 = self.quantile_raw(0.158_655_253_931_457_05);
        let q84 = self.quantile_raw(0.841_344_746_068_542_9);
        self.scale_hint = ((q84 - q16) / 2.0).max(1e-12);
    }

    fn quantile_raw(&self, p: f64) -> f64 {
        match self.kernel.quantile(p) {
            Some(q) => q,
            None => bisect_quantile(|x| self.kernel.cdf(x), p, self.center, self.scale_hint),
        }
    }

    #[cfg(test)]
    pub(crate) fn with_declared_center(mut self, center: f64) -> Density {
        self.center = center;
        self
    }

    #[cfg(test)]
    pub(crate) fn test_mixture(weights: &[(f64, Density)]) -> Density {
        struct MixtureKernel {
            parts: Vec<(f64, Arc<dyn Kernel>)>,
        }
        impl Kernel for MixtureKernel {
            fn log_pdf(&self, x: f64) -> f64 {
                self.pdf(x).ln()
            }
            fn pdf(&self, x: f64) -> f64 {
                self.parts.iter().map(|(w, k)| w * k.pdf(x)).sum()
            }
            fn cdf(&self, x: f64) -> f64 {
                self.parts.iter().map(|(w, k)| w * k.cdf(x)).sum()
            }
            fn quantile(&self, _p: f64) -> Option<f64> {
                None
            }
        }
        let total: f64 = weights.iter().map(|(w, _)| w).sum();
        let center =
            weights.iter().map(|(w, d)| w * d.center()).sum::<f64>() / total;
        let mut d = Density {
            kernel: Arc::new(MixtureKernel {
                parts: weights
                    .iter()
                    .map(|(w, d)| (*w / total, d.kernel.clone()))
                    .collect(),
            }),
            spec: None,
            label: "test-mixture".into(),
            center,
            scale_hint: weights
                .iter()
                .map(|(_, d)| d.scale_hint() + (d.center() - center).abs())
                .fold(0.0, f64::max),
            support: (0.0, 0.0),
            has_finite_first_moment: weights.iter().all(|(_, d)| d.has_finite_first_moment),
            admissible_as_noise: false,
            annotation: None,
        };
        d.finish_geometry();
        d
    }
}

fn bisect_quantile<F: Fn(f64) -> f64>(cdf: F, p: f64, center: f64, scale: f64) -> f64 {
    let scale = scale.max(1e-12);
    let mut lo = center - scale;
    let mut hi = center + scale;
    let mut step = scale;
    while cdf(lo) > p {
        step *= 4.0;
        lo -= step;
    }
    let mut step = scale;
    while cdf(hi) < p {
        step *= 4.0;
        hi += step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            break;
        }
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Construct an evaluable density from a validated spec. The admissibility
/// flags follow the family: Cauchy, student-t with nu <= 1 and double-Pareto
/// with alpha <= 1 lack a finite absolute first moment and are therefore not
/// admissible in the noise role.
pub fn make_density(spec: &DensitySpec) -> Result<Density> {
    spec.validate()?;
    let (kernel, finite_first_moment, annotation): (Arc<dyn Kernel>, bool, Option<String>) =
        match (spec.family, spec.shape) {
            (Family::Normal, _) => (
                Arc::new(NormalKernel::new(spec.location, spec.scale)),
                true,
                None,
            ),
            (Family::Logistic, _) => (
                Arc::new(LogisticKernel::new(spec.location, spec.scale)),
                true,
                None,
            ),
            (Family::DoubleExponential, _) => (
                Arc::new(LaplaceKernel::new(spec.location, spec.scale)),
                true,
                None,
            ),
            (Family::StudentT, ShapeParam::Degrees(nu)) => (
                Arc::new(StudentTKernel::new(spec.location, spec.scale, nu)),
                nu > 1.0,
                None,
            ),
            (Family::Cauchy, _) => (
                Arc::new(CauchyKernel::new(spec.location, spec.scale)),
                false,
                None,
            ),
            (Family::DoublePareto, ShapeParam::TailIndex(alpha)) => (
                Arc::new(DoubleParetoKernel::new(spec.location, spec.scale, alpha)),
                alpha > 1.0,
                Some(format!(
                    "power tail with quadratic cap spliced on [{},{}] (pdf and derivative match at the junction)",
                    fmt_param(spec.location - spec.scale),
                    fmt_param(spec.location + spec.scale)
                )),
            ),
            (Family::SmoothedUniform, ShapeParam::Smoothing { delta, decay }) => (
                Arc::new(SmoothedUniformKernel::new(
                    spec.location,
                    spec.scale,
                    delta,
                    decay,
                )),
                true,
                None,
            ),
            _ => unreachable!("validate() pins the shape variant"),
        };

    let mut d = Density {
        kernel,
        spec: Some(*spec),
        label: spec.canonical(),
        center: spec.location,
        scale_hint: spec.scale,
        support: (0.0, 0.0),
        has_finite_first_moment: finite_first_moment,
        admissible_as_noise: finite_first_moment && spec.location == 0.0,
        annotation,
    };
    d.finish_geometry();
    Ok(d)
}

/// Density of `k * eps`: pdf(x) = pdf_eps(x/k) / k, center scaled accordingly.
pub fn scale_density(d: &Density, k: f64) -> Result<Density> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale factor must be strictly positive, got {k}"
        )));
    }
    if let Some(spec) = d.spec {
        // every family here is a location-scale family given its shape
        let scaled = DensitySpec {
            location: spec.location * k,
            scale: spec.scale * k,
            ..spec
        };
        return make_density(&scaled);
    }
    let mut out = Density {
        kernel: Arc::new(ScaledKernel {
            base: d.kernel.clone(),
            k,
        }),
        spec: None,
        label: format!("scale({},{})", fmt_param(k), d.label),
        center: d.center * k,
        scale_hint: d.scale_hint * k,
        support: (d.support.0 * k, d.support.1 * k),
        has_finite_first_moment: d.has_finite_first_moment,
        admissible_as_noise: d.admissible_as_noise && d.center == 0.0,
        annotation: d.annotation.clone(),
    };
    out.finish_geometry();
    Ok(out)
}

/// Location of a structural-check failure.
#[derive(Debug, Clone)]
pub struct Witness {
    pub x: f64,
    pub magnitude: f64,
    pub context: String,
}

/// Outcome of a structural check; `passed` iff no violation exceeded the
/// tolerance. `strict` reports, where meaningful, whether the property held
/// with strict margins everywhere (e.g. strictly concave vs. weakly).
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub passed: bool,
    pub max_violation: f64,
    pub witness: Option<Witness>,
    pub strict: Option<bool>,
    pub note: Option<String>,
}

impl CheckResult {
    fn pass() -> Self {
        CheckResult {
            passed: true,
            max_violation: 0.0,
            witness: None,
            strict: None,
            note: None,
        }
    }
}

/// Default composite grid for structural checks: linear core around the
/// center plus geometric tails out to the effective support.
pub fn default_check_grid(d: &Density, n: usize) -> GridSpec {
    let (lo, hi) = d.support();
    let outer = (d.center() - lo).max(hi - d.center());
    let inner = (4.0 * d.scale_hint()).min(outer / 2.0);
    if inner <= 0.0 || !(outer > inner) {
        return GridSpec::linear(lo, hi, n.max(16)).expect("support is a proper interval");
    }
    GridSpec::composite_symmetric(d.center(), inner, outer, n)
        .expect("validated composite parameters")
}

/// Max over the grid of |pdf(center+t) - pdf(center-t)| relative to the
/// local pdf level.
pub fn check_symmetry(d: &Density, grid: &GridSpec, tol: f64) -> CheckResult {
    let c = d.center();
    let mut worst = CheckResult::pass();
    for &x in grid.points() {
        let t = x - c;
        let p_plus = d.pdf(c + t);
        let p_minus = d.pdf(c - t);
        let viol = (p_plus - p_minus).abs() / p_plus.max(PDF_FLOOR);
        if viol > worst.max_violation {
            worst.max_violation = viol;
            worst.witness = Some(Witness {
                x,
                magnitude: viol,
                context: format!("pdf({})={p_plus:.6e} vs pdf({})={p_minus:.6e}", c + t, c - t),
            });
        }
    }
    worst.passed = worst.max_violation <= tol;
    if worst.passed {
        worst.witness = None;
    }
    worst
}

/// Nondecreasing up to the mode, nonincreasing after, with relative slack
/// `tol` on each comparison.
pub fn check_quasiconcave(d: &Density, grid: &GridSpec, tol: f64) -> CheckResult {
    let pts = grid.points();
    let vals: Vec<f64> = pts.iter().map(|&x| d.pdf(x)).collect();
    let m = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut worst = CheckResult::pass();
    let mut record = |i: usize, viol: f64, side: &str| {
        if viol > worst.max_violation {
            worst.max_violation = viol;
            let lo = i.saturating_sub(1);
            worst.witness = Some(Witness {
                x: pts[i + 1],
                magnitude: viol,
                context: format!(
                    "{side} segment not monotone near ({}, {}, {})",
                    pts[lo],
                    pts[i],
                    pts[i + 1]
                ),
            });
        }
    };
    for i in 0..m {
        // rising side: a drop of more than tol (relative) is a violation
        let viol = (vals[i] - vals[i + 1]) / vals[i].max(PDF_FLOOR);
        if viol > 0.0 {
            record(i, viol, "rising");
        }
    }
    for i in m..vals.len() - 1 {
        let viol = (vals[i + 1] - vals[i]) / vals[i].max(PDF_FLOOR);
        if viol > 0.0 {
            record(i, viol, "falling");
        }
    }
    worst.passed = worst.max_violation <= tol;
    if worst.passed {
        worst.witness = None;
    }
    worst
}

/// Shared slope-difference concavity test on (possibly uneven) abscissae.
/// Concavity means chord slopes never increase; `tol` is relative slack.
/// `strict` is set when every slope decrease has a clear margin.
fn concavity_on(xs: &[f64], ys: &[f64], tol: f64) -> CheckResult {
    let mut worst = CheckResult::pass();
    let mut min_drop = f64::INFINITY; // most marginal slope decrease
    for i in 1..xs.len() - 1 {
        let left = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
        let right = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        let scale = 1.0_f64.max(left.abs()).max(right.abs());
        let excess = (right - left) / scale;
        min_drop = min_drop.min(-(right - left));
        if excess > worst.max_violation {
            worst.max_violation = excess;
            worst.witness = Some(Witness {
                x: xs[i],
                magnitude: excess,
                context: format!("chord slope rises from {left:.6e} to {right:.6e}"),
            });
        }
    }
    worst.passed = worst.max_violation <= tol;
    if worst.passed {
        worst.witness = None;
    }
    worst.strict = Some(worst.passed && min_drop > tol);
    worst
}

/// Concavity of log pdf along the grid.
pub fn check_logconcave(d: &Density, grid: &GridSpec, tol: f64) -> CheckResult {
    let xs = grid.points();
    let ys: Vec<f64> = xs.iter().map(|&x| d.log_pdf(x)).collect();
    concavity_on(xs, &ys, tol)
}

/// Default grid (in log space) for `check_log_exp_concave`: covers the
/// quantiles of the positive half of the density.
pub fn default_log_exp_grid(d: &Density, n: usize) -> GridSpec {
    let u_lo = d.quantile(0.5 + 5e-7) - d.center();
    let u_hi = d.quantile(1.0 - 5e-10) - d.center();
    let u_lo = u_lo.max(1e-8 * d.scale_hint());
    GridSpec::linear(u_lo.ln(), u_hi.ln(), n).expect("positive-half quantile range")
}

/// Concavity of x -> log pdf(e^x); the scale-family order condition. The
/// density must be symmetric around 0.
pub fn check_log_exp_concave(d: &Density, grid: &GridSpec, tol: f64) -> CheckResult {
    let xs = grid.points();
    let ys: Vec<f64> = xs.iter().map(|&x| d.log_pdf(x.exp())).collect();
    concavity_on(xs, &ys, tol)
}

/// Quadrature of the pdf over the effective support; used by the
/// normalization invariant tests.
pub fn normalization_mass(d: &Density, rel_tol: f64, max_subdivisions: usize) -> Result<f64> {
    let knots = support_knots(d);
    let r = quad::integrate(
        |x| d.pdf(x),
        &knots,
        rel_tol,
        0.0,
        max_subdivisions,
        &format!("normalization of {}", d.label()),
    )?;
    Ok(r.value)
}

/// Panel boundaries covering the effective support: quantile-driven with a
/// geometric ladder into each tail so heavy tails get log-spaced panels.
pub fn support_knots(d: &Density) -> Vec<f64> {
    let (lo, hi) = d.support();
    let c = d.center();
    let s = d.scale_hint();
    let mut knots = vec![c];
    let mut t = s;
    while c + t < hi || c - t > lo {
        if c + t < hi {
            knots.push(c + t);
        }
        if c - t > lo {
            knots.push(c - t);
        }
        t *= 4.0;
    }
    knots.extend(d.breakpoints().iter().filter(|&&b| lo < b && b < hi));
    knots.push(lo);
    knots.push(hi);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
}

/// Symmetric log-concave prior that is flat on [-delta, delta] and decays
/// like exp(-d (|x| - delta)^2) outside; converges pointwise to the uniform
/// density on [-delta, delta] as `d` grows. The log-level normalizer has a
/// closed form; construction still verifies unit mass by quadrature.
pub fn make_necessity_prior(
    delta: f64,
    decay: f64,
    quad_cfg: &crate::posterior::QuadratureConfig,
) -> Result<Density> {
    let spec = DensitySpec::smoothed_uniform(0.0, 1.0, delta, decay);
    let d = make_density(&spec)?;
    let mass = normalization_mass(&d, quad_cfg.rel_tol, quad_cfg.max_subdivisions)?;
    let slack = 100.0 * quad_cfg.rel_tol + 10.0 * EFFECTIVE_TAIL_MASS;
    if (mass - 1.0).abs() > slack {
        return Err(Error::QuadratureFailure {
            context: format!("normalization of {}", d.label()),
            value: mass,
            error: (mass - 1.0).abs(),
        });
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::QuadratureConfig;

    fn dens(text: &str) -> Density {
        Density::parse(text).unwrap()
    }

    #[test]
    fn normal_pdf_at_center() {
        let d = dens("normal(0,1)");
        assert!((d.pdf(0.0) - 0.3989422804014327).abs() < 1e-12);
    }

    #[test]
    fn normal_symmetry_sampled() {
        let d = dens("normal(0.7,1.3)");
        for t in [0.1, 0.5, 1.0, 2.5, 4.0] {
            assert!((d.pdf(0.7 + t) - d.pdf(0.7 - t)).abs() < 1e-14);
        }
    }

    #[test]
    fn cauchy_not_admissible_as_noise() {
        let d = dens("cauchy(0,1)");
        assert!(!d.has_finite_first_moment());
        assert!(!d.admissible_as_noise());
        let t = dens("studentt(0,1,1)");
        assert!(!t.admissible_as_noise());
        let t3 = dens("studentt(0,1,3)");
        assert!(t3.admissible_as_noise());
        let dp1 = dens("doublepareto(0,1,1)");
        assert!(!dp1.admissible_as_noise());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(DensitySpec::parse("normal(0,-1)").is_err());
        assert!(DensitySpec::parse("studentt(0,1,0)").is_err());
        assert!(DensitySpec::parse("smootheduniform(0,1,1,-2)").is_err());
        assert!(DensitySpec::parse("gamma(1,1)").is_err());
        assert!(scale_density(&dens("normal(0,1)"), 0.0).is_err());
    }

    #[test]
    fn spec_canonical_round_trip() {
        for text in [
            "normal(0,1)",
            "logistic(0,1.5)",
            "doubleexponential(-0.5,2)",
            "studentt(0,1,3)",
            "cauchy(0,1)",
            "doublepareto(0,1,2)",
            "smootheduniform(0,1,1,50)",
        ] {
            let spec = DensitySpec::parse(text).unwrap();
            assert_eq!(spec.canonical(), text);
            assert_eq!(DensitySpec::parse(&spec.canonical()).unwrap(), spec);
        }
    }

    #[test]
    fn scaling_normal_matches_family() {
        let base = dens("normal(0,1)");
        let scaled = scale_density(&base, 1.5).unwrap();
        let direct = dens("normal(0,1.5)");
        for x in [-3.0, -1.0, 0.0, 0.4, 2.0, 5.0] {
            assert!((scaled.pdf(x) - direct.pdf(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn scaling_by_one_is_identity() {
        let base = dens("logistic(0,1)");
        let scaled = scale_density(&base, 1.0).unwrap();
        for x in [-4.0, -0.3, 0.0, 1.7] {
            assert!((scaled.pdf(x) - base.pdf(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn scaled_laplace_pdf_at_zero() {
        let d = scale_density(&dens("doubleexponential(0,1)"), 2.0).unwrap();
        assert!((d.pdf(0.0) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn scaled_cdf_identity() {
        let base = dens("studentt(0,1,3)");
        let k = 2.5;
        let scaled = scale_density(&base, k).unwrap();
        for x in [-8.0, -1.0, 0.0, 0.7, 3.0, 20.0] {
            assert!((scaled.cdf(x) - base.cdf(x / k)).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for text in [
            "normal(0,1)",
            "logistic(1,2)",
            "doubleexponential(0,1)",
            "studentt(0,1,3)",
            "cauchy(0,1)",
            "doublepareto(0,1,2)",
            "smootheduniform(0,1,1,10)",
            "cauchyuniform(0,1)",
        ] {
            let d = dens(text);
            for p in [1e-9, 1e-4, 0.2, 0.5, 0.8, 1.0 - 1e-4, 1.0 - 1e-9] {
                let q = d.quantile(p);
                assert!(
                    (d.cdf(q) - p).abs() < 1e-9,
                    "{text}: cdf(quantile({p})) = {} at q={q}",
                    d.cdf(q)
                );
            }
        }
    }

    #[test]
    fn symmetry_check_presets_pass() {
        for text in [
            "normal(0,1)",
            "logistic(0,1)",
            "doubleexponential(0,1)",
            "studentt(0,1,3)",
            "cauchy(0,1)",
            "doublepareto(0,1,2)",
            "smootheduniform(0,1,1,10)",
            "cauchyuniform(0,1)",
        ] {
            let d = dens(text);
            let grid = default_check_grid(&d, DEFAULT_CHECK_POINTS);
            let res = check_symmetry(&d, &grid, DEFAULT_CHECK_TOL);
            assert!(res.passed, "{text}: max violation {}", res.max_violation);
        }
    }

    #[test]
    fn symmetry_check_catches_wrong_center() {
        let d = dens("normal(0,1)").with_declared_center(0.5);
        let grid = GridSpec::linear(-5.0, 6.0, 512).unwrap();
        let res = check_symmetry(&d, &grid, DEFAULT_CHECK_TOL);
        assert!(!res.passed);
        let w = res.witness.expect("worst point reported");
        assert!(w.magnitude > 0.1);
    }

    #[test]
    fn quasiconcave_presets_pass() {
        for text in [
            "logistic(0,1)",
            "normal(0,1)",
            "doubleexponential(0,1)",
            "doublepareto(0,1,2)",
            "cauchyuniform(0,1)",
            "smootheduniform(0,1,1,50)",
        ] {
            let d = dens(text);
            let grid = default_check_grid(&d, DEFAULT_CHECK_POINTS);
            let res = check_quasiconcave(&d, &grid, DEFAULT_CHECK_TOL);
            assert!(res.passed, "{text}: max violation {}", res.max_violation);
        }
    }

    #[test]
    fn quasiconcave_detects_bimodal_dip() {
        let bimodal = Density::test_mixture(&[
            (0.5, dens("normal(-3,0.5)")),
            (0.5, dens("normal(3,0.5)")),
        ]);
        let grid = GridSpec::linear(-6.0, 6.0, 1024).unwrap();
        let res = check_quasiconcave(&bimodal, &grid, DEFAULT_CHECK_TOL);
        assert!(!res.passed);
        let w = res.witness.unwrap();
        assert!(w.x.abs() < 3.0, "dip witness at {}", w.x);
    }

    #[test]
    fn logconcave_families() {
        for (text, expect) in [
            ("normal(0,1)", true),
            ("logistic(0,1)", true),
            ("doubleexponential(0,1)", true),
            ("smootheduniform(0,1,1,50)", true),
            ("studentt(0,1,3)", false),
            ("cauchy(0,1)", false),
        ] {
            let d = dens(text);
            let grid = default_check_grid(&d, DEFAULT_CHECK_POINTS);
            let res = check_logconcave(&d, &grid, DEFAULT_CHECK_TOL);
            assert_eq!(res.passed, expect, "{text}: {:?}", res.witness);
        }
    }

    #[test]
    fn logconcave_strictness_flags() {
        let n = dens("normal(0,1)");
        let grid = default_check_grid(&n, DEFAULT_CHECK_POINTS);
        assert_eq!(check_logconcave(&n, &grid, DEFAULT_CHECK_TOL).strict, Some(true));
        // piecewise-linear log pdf: concave but not strictly
        let l = dens("doubleexponential(0,1)");
        let grid = default_check_grid(&l, DEFAULT_CHECK_POINTS);
        let res = check_logconcave(&l, &grid, DEFAULT_CHECK_TOL);
        assert!(res.passed);
        assert_eq!(res.strict, Some(false));
    }

    #[test]
    fn log_exp_concave_families() {
        for text in [
            "normal(0,1)",
            "logistic(0,1)",
            "doubleexponential(0,1)",
            "studentt(0,1,1)",
            "studentt(0,1,3)",
            "studentt(0,1,10)",
            "cauchy(0,1)",
            "doublepareto(0,1,1)",
            "doublepareto(0,1,2)",
        ] {
            let d = dens(text);
            let grid = default_log_exp_grid(&d, DEFAULT_CHECK_POINTS);
            let res = check_log_exp_concave(&d, &grid, DEFAULT_CHECK_TOL);
            assert!(res.passed, "{text}: {:?}", res.witness);
        }
    }

    #[test]
    fn necessity_prior_flat_ratio() {
        let quad_cfg = QuadratureConfig::default();
        let d = make_necessity_prior(1.0, 10.0, &quad_cfg).unwrap();
        let ratio = d.pdf(1.5) / d.pdf(0.0);
        assert!((ratio - (-2.5_f64).exp()).abs() < 1e-12);
        assert!((ratio - 0.08208499862389880).abs() < 1e-10);
    }

    #[test]
    fn necessity_prior_symmetric_and_logconcave() {
        let quad_cfg = QuadratureConfig::default();
        let d = make_necessity_prior(1.0, 10.0, &quad_cfg).unwrap();
        let grid = default_check_grid(&d, DEFAULT_CHECK_POINTS);
        assert!(check_symmetry(&d, &grid, DEFAULT_CHECK_TOL).passed);
        assert!(check_logconcave(&d, &grid, DEFAULT_CHECK_TOL).passed);
        for t in [0.2, 0.8, 1.4, 2.0] {
            assert!((d.pdf(t) - d.pdf(-t)).abs() < 1e-15);
        }
    }

    #[test]
    fn necessity_prior_approaches_uniform() {
        let quad_cfg = QuadratureConfig::default();
        let sample = [0.0, 0.3, -0.6, 0.9, 1.5];
        let uniform = |x: f64| if x.abs() <= 1.0 { 0.5 } else { 0.0 };
        let mut last_err = f64::INFINITY;
        for decay in [1.0, 10.0, 100.0, 1000.0] {
            let d = make_necessity_prior(1.0, decay, &quad_cfg).unwrap();
            let err = sample
                .iter()
                .map(|&x| (d.pdf(x) - uniform(x)).abs())
                .fold(0.0, f64::max);
            assert!(err < last_err, "pointwise error not shrinking at d={decay}");
            last_err = err;
        }
        assert!(last_err < 0.02);
    }

    #[test]
    fn normalization_presets() {
        for text in [
            "normal(0,1)",
            "logistic(0,1)",
            "doubleexponential(0,1)",
            "studentt(0,1,3)",
            "cauchy(0,1)",
            "doublepareto(0,1,2)",
            "doublepareto(0,1,1)",
            "smootheduniform(0,1,1,50)",
            "cauchyuniform(0,1)",
        ] {
            let d = dens(text);
            let mass = normalization_mass(&d, 1e-10, 400).unwrap();
            assert!(
                (mass - 1.0).abs() < 1e-9,
                "{text}: mass = {mass}"
            );
        }
    }
}
