//! Family-specific evaluators behind [`Density`](super::Density).
//!
//! Each kernel provides `log_pdf`, `cdf`, an analytic quantile where the
//! family has one (bisection on the cdf otherwise), and an analytic
//! log-density derivative used by the order checks.

use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};
use statrs::function::erf::erf;

use std::f64::consts::PI;

pub(crate) trait Kernel: Send + Sync {
    fn log_pdf(&self, x: f64) -> f64;
    fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }
    fn cdf(&self, x: f64) -> f64;
    /// Analytic quantile, if the family has one.
    fn quantile(&self, p: f64) -> Option<f64>;
    /// Analytic d/dx log pdf, if the family has one.
    fn log_pdf_deriv(&self, _x: f64) -> Option<f64> {
        None
    }
    /// Interior kinks or curvature breaks that integration panels should
    /// align with (the Laplace center, smoothed-uniform shoulders, ...).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

// ---------------------------------------------------------------- normal

pub(crate) struct NormalKernel {
    dist: Normal,
    mean: f64,
    sd: f64,
}

impl NormalKernel {
    pub fn new(mean: f64, sd: f64) -> Self {
        Self {
            dist: Normal::new(mean, sd).expect("validated parameters"),
            mean,
            sd,
        }
    }
}

impl Kernel for NormalKernel {
    fn log_pdf(&self, x: f64) -> f64 {
        self.dist.ln_pdf(x)
    }
    fn pdf(&self, x: f64) -> f64 {
        self.dist.pdf(x)
    }
    fn cdf(&self, x: f64) -> f64 {
        self.dist.cdf(x)
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        Some(self.dist.inverse_cdf(p))
    }
    fn log_pdf_deriv(&self, x: f64) -> Option<f64> {
        Some(-(x - self.mean) / (self.sd * self.sd))
    }
}

// --------------------------------------------------------------- logistic

pub(crate) struct LogisticKernel {
    loc: f64,
    scale: f64,
}

impl LogisticKernel {
    pub fn new(loc: f64, scale: f64) -> Self {
        Self { loc, scale }
    }
    fn z(&self, x: f64) -> f64 {
        (x - self.loc) / self.scale
    }
}

impl Kernel for LogisticKernel {
    fn log_pdf(&self, x: f64) -> f64 {
        let z = self.z(x);
        -z - 2.0 * softplus(-z) - self.scale.ln()
    }
    fn cdf(&self, x: f64) -> f64 {
        let z = self.z(x);
        if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        }
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        Some(self.loc + self.scale * (p / (1.0 - p)).ln())
    }
    fn log_pdf_deriv(&self, x: f64) -> Option<f64> {
        let s = self.cdf(x);
        Some((1.0 - 2.0 * s) / self.scale)
    }
}

// ------------------------------------------------------ double exponential

pub(crate) struct LaplaceKernel {
    loc: f64,
    scale: f64,
}

impl LaplaceKernel {
    pub fn new(loc: f64, scale: f64) -> Self {
        Self { loc, scale }
    }
}

impl Kernel for LaplaceKernel {
    fn log_pdf(&self, x: f64) -> f64 {
        -(2.0 * self.scale).ln() - (x - self.loc).abs() / self.scale
    }
    fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        if z < 0.0 {
            0.5 * z.exp()
        } else {
            1.0 - 0.5 * (-z).exp()
        }
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        Some(if p < 0.5 {
            self.loc + self.scale * (2.0 * p).ln()
        } else {
            self.loc - self.scale * (2.0 * (1.0 - p)).ln()
        })
    }
    fn log_pdf_deriv(&self, x: f64) -> Option<f64> {
        // kink at the center; the signed slope is what the order checks use
        Some(-(x - self.loc).signum() / self.scale)
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.loc]
    }
}

// ---------------------------------------------------------------- student-t

pub(crate) struct StudentTKernel {
    dist: StudentsT,
    loc: f64,
    scale: f64,
    freedom: f64,
}

impl StudentTKernel {
    pub fn new(loc: f64, scale: f64, freedom: f64) -> Self {
        Self {
            dist: StudentsT::new(loc, scale, freedom).expect("validated parameters"),
            loc,
            scale,
            freedom,
        }
    }
}

impl Kernel for StudentTKernel {
    fn log_pdf(&self, x: f64) -> f64 {
        self.dist.ln_pdf(x)
    }
    fn pdf(&self, x: f64) -> f64 {
        self.dist.pdf(x)
    }
    fn cdf(&self, x: f64) -> f64 {
        self.dist.cdf(x)
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        Some(self.dist.inverse_cdf(p))
    }
    fn log_pdf_deriv(&self, x: f64) -> Option<f64> {
        let z = (x - self.loc) / self.scale;
        Some(-(self.freedom + 1.0) * z / (self.scale * (self.freedom + z * z)))
    }
}

// ------------------------------------------------------------------ cauchy

pub(crate) struct CauchyKernel {
    loc: f64,
    scale: f64,
}

impl CauchyKernel {
    pub fn new(loc: f64, scale: f64) -> Self {
        Self { loc, scale }
    }
}

impl Kernel for CauchyKernel {
    fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        -(PI * self.scale).ln() - z.mul_add(z, 1.0).ln()
    }
    fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        0.5 + z.atan() / PI
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        Some(self.loc + self.scale * (PI * (p - 0.5)).tan())
    }
    fn log_pdf_deriv(&self, x: f64) -> Option<f64> {
        let z = (x - self.loc) / self.scale;
        Some(-2.0 * z / (self.scale * (1.0 + z * z)))
    }
}

// ------------------------------------------------------------ double pareto
//
// The raw symmetric |z|^{-alpha-1} form diverges at 0, so the central
// segment [-1, 1] (in standardized coordinates) carries a quadratic cap
// a - b z^2 whose value and derivative match the tail at |z| = 1. With
//   C = 3 alpha / (2 (alpha+1) (alpha+3))
//   b = C (alpha+1) / 2,  a = C (alpha+3) / 2
// the total mass is exactly 1.

pub(crate) struct DoubleParetoKernel {
    loc: f64,
    scale: f64,
    alpha: f64,
    tail_c: f64,
    cap_a: f64,
    cap_b: f64,
}

impl DoubleParetoKernel {
    pub fn new(loc: f64, scale: f64, alpha: f64) -> Self {
        let tail_c = 3.0 * alpha / (2.0 * (alpha + 1.0) * (alpha + 3.0));
        Self {
            loc,
            scale,
            alpha,
            tail_c,
            cap_a: tail_c * (alpha + 3.0) / 2.0,
            cap_b: tail_c * (alpha + 1.0) / 2.0,
        }
    }

    fn std_pdf(&self, z: f64) -> f64 {
        let az = z.abs();
        if az < 1.0 {
            self.cap_a - self.cap_b * z * z
        } else {
            self.tail_c * az.powf(-self.alpha - 1.0)
        }
    }

    /// cdf of the standardized density for z <= 0.
    fn std_cdf_lower(&self, z: f64) -> f64 {
        debug_assert!(z <= 0.0);
        if z <= -1.0 {
            self.tail_c / self.alpha * (-z).powf(-self.alpha)
        } else {
            let tail_mass = self.tail_c / self.alpha;
            tail_mass + self.cap_a * (z + 1.0) - self.cap_b * (z * z * z + 1.0) / 3.0
        }
    }
}

impl Kernel for DoubleParetoKernel {
    fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        (self.std_pdf(z) / self.scale).ln()
    }
    fn pdf(&self, x: f64) -> f64 {
        self.std_pdf((x - self.loc) / self.scale) / self.scale
    }
    fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        if z <= 0.0 {
            self.std_cdf_lower(z)
        } else {
            1.0 - self.std_cdf_lower(-z)
        }
    }
    fn quantile(&self, _p: f64) -> Option<f64> {
        None
    }
    fn log_pdf_deriv(&self, x: f64) -> Option<f64> {
        let z = (x - self.loc) / self.scale;
        Some(if z.abs() < 1.0 {
            -2.0 * self.cap_b * z / ((self.cap_a - self.cap_b * z * z) * self.scale)
        } else {
            -(self.alpha + 1.0) / (z * self.scale)
        })
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.loc - self.scale, self.loc + self.scale]
    }
}

// -------------------------------------------------------- smoothed uniform
//
// Log-density equal to a constant c on [-delta, delta] and c - d (|z|-delta)^2
// outside; c = -ln(2 delta + sqrt(pi/d)) normalizes in closed form.

pub(crate) struct SmoothedUniformKernel {
    loc: f64,
    scale: f64,
    delta: f64,
    decay: f64,
    log_level: f64,
}

impl SmoothedUniformKernel {
    pub fn new(loc: f64, scale: f64, delta: f64, decay: f64) -> Self {
        let log_level = -(2.0 * delta + (PI / decay).sqrt()).ln();
        Self {
            loc,
            scale,
            delta,
            decay,
            log_level,
        }
    }

    /// cdf of the standardized density for z <= 0.
    fn std_cdf_lower(&self, z: f64) -> f64 {
        let level = self.log_level.exp();
        let half_tail = level * 0.5 * (PI / self.decay).sqrt();
        if z <= -self.delta {
            // mass of exp(-d (t+delta)^2) below z
            half_tail * (1.0 + erf((self.decay.sqrt()) * (z + self.delta)))
        } else {
            half_tail + level * (z + self.delta)
        }
    }
}

impl Kernel for SmoothedUniformKernel {
    fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        let over = (z.abs() - self.delta).max(0.0);
        self.log_level - self.decay * over * over - self.scale.ln()
    }
    fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        if z <= 0.0 {
            self.std_cdf_lower(z)
        } else {
            1.0 - self.std_cdf_lower(-z)
        }
    }
    fn quantile(&self, _p: f64) -> Option<f64> {
        None
    }
    fn log_pdf_deriv(&self, x: f64) -> Option<f64> {
        let z = (x - self.loc) / self.scale;
        Some(if z.abs() <= self.delta {
            0.0
        } else {
            -2.0 * self.decay * (z - self.delta.copysign(z)) / self.scale
        })
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![
            self.loc - self.scale * self.delta,
            self.loc + self.scale * self.delta,
        ]
    }
}

// ------------------------------------------------- cauchy + uniform sum
//
// Closed-form convolution of a standard Cauchy with an independent
// Uniform[-1, 1] (then shifted/scaled): the standardized pdf is
//   (arctan(z+1) - arctan(z-1)) / (2 pi).
// For |z| > 1 the difference of arctans cancels badly, so the equivalent
// form arctan(2/z^2) is used there.

pub(crate) struct CauchyUniformKernel {
    loc: f64,
    scale: f64,
}

impl CauchyUniformKernel {
    pub fn new(loc: f64, scale: f64) -> Self {
        Self { loc, scale }
    }

    fn std_pdf(&self, z: f64) -> f64 {
        let spread = if z.abs() > 1.0 {
            (2.0 / (z * z)).atan()
        } else {
            (z + 1.0).atan() - (z - 1.0).atan()
        };
        spread / (2.0 * PI)
    }

    /// Upper-tail mass of the standardized density for z >= 1, cancellation-free:
    /// integral of arctan(1/u) du over [z-1, z+1] divided by 2 pi.
    fn std_upper_tail(&self, z: f64) -> f64 {
        debug_assert!(z >= 1.0);
        let b = |u: f64| u * (1.0 / u).atan() + 0.5 * u.mul_add(u, 1.0).ln();
        (b(z + 1.0) - b(z - 1.0)) / (2.0 * PI)
    }

    fn std_cdf(&self, z: f64) -> f64 {
        if z >= 2.0 {
            1.0 - self.std_upper_tail(z)
        } else if z <= -2.0 {
            self.std_upper_tail(-z)
        } else {
            let a = |u: f64| u * u.atan() - 0.5 * u.mul_add(u, 1.0).ln();
            (a(z + 1.0) - a(z - 1.0) + PI) / (2.0 * PI)
        }
    }
}

impl Kernel for CauchyUniformKernel {
    fn log_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }
    fn pdf(&self, x: f64) -> f64 {
        self.std_pdf((x - self.loc) / self.scale) / self.scale
    }
    fn cdf(&self, x: f64) -> f64 {
        self.std_cdf((x - self.loc) / self.scale)
    }
    fn quantile(&self, _p: f64) -> Option<f64> {
        None
    }
    fn log_pdf_deriv(&self, x: f64) -> Option<f64> {
        let z = (x - self.loc) / self.scale;
        let num = 1.0 / (z + 1.0).mul_add(z + 1.0, 1.0) - 1.0 / (z - 1.0).mul_add(z - 1.0, 1.0);
        let spread = if z.abs() > 1.0 {
            (2.0 / (z * z)).atan()
        } else {
            (z + 1.0).atan() - (z - 1.0).atan()
        };
        Some(num / (spread * self.scale))
    }
}

// ------------------------------------------------------------------ scaled

/// Density of `k * eps` for a base kernel of `eps`: pdf(x) = base(x/k) / k.
pub(crate) struct ScaledKernel {
    pub base: std::sync::Arc<dyn Kernel>,
    pub k: f64,
}

impl Kernel for ScaledKernel {
    fn log_pdf(&self, x: f64) -> f64 {
        self.base.log_pdf(x / self.k) - self.k.ln()
    }
    fn pdf(&self, x: f64) -> f64 {
        self.base.pdf(x / self.k) / self.k
    }
    fn cdf(&self, x: f64) -> f64 {
        self.base.cdf(x / self.k)
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        self.base.quantile(p).map(|q| q * self.k)
    }
    fn log_pdf_deriv(&self, x: f64) -> Option<f64> {
        self.base.log_pdf_deriv(x / self.k).map(|d| d / self.k)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.base.breakpoints().iter().map(|b| b * self.k).collect()
    }
}
