//! The precision order on noise densities: `eps_tilde` is less precise than
//! `eps` when the likelihood ratio f_tilde(x) / f(x) is nondecreasing for
//! x > 0 (and, by symmetry, nonincreasing for x < 0). Also the auxiliary
//! order checks: the scale-family shortcut and the single-crossing
//! mean-preserving-spread property of ordered pairs.

use crate::densities::{
    check_log_exp_concave, check_quasiconcave, check_symmetry, default_check_grid,
    default_log_exp_grid, scale_density, CheckResult, Density, Witness, DEFAULT_CHECK_POINTS,
    DEFAULT_CHECK_TOL,
};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Default relative tolerance for log likelihood-ratio slopes; distinguishes
/// true flat segments from drift.
pub const DEFAULT_SLOPE_TOL: f64 = 1e-8;

/// Number of points in the default order grid.
pub const DEFAULT_ORDER_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderRelation {
    LessPrecise,
    MorePrecise,
    Equal,
    Incomparable,
}

impl OrderRelation {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderRelation::LessPrecise => "less-precise",
            OrderRelation::MorePrecise => "more-precise",
            OrderRelation::Equal => "equal",
            OrderRelation::Incomparable => "incomparable",
        }
    }
}

/// A slope observation on the positive half-line.
#[derive(Debug, Clone, Copy)]
pub struct SlopeWitness {
    pub x: f64,
    pub slope: f64,
}

/// Outcome of a precision-order comparison of (eps_tilde vs eps).
#[derive(Debug, Clone)]
pub struct OrderVerdict {
    pub relation: OrderRelation,
    /// Most negative beyond-tolerance slope of log(f_tilde/f), if any.
    pub witness_decrease: Option<SlopeWitness>,
    /// Most positive beyond-tolerance slope, if any.
    pub witness_increase: Option<SlopeWitness>,
    pub grid_used: GridSpec,
    /// Whether the classification holds strictly (every grid slope clears
    /// the tolerance with the required sign).
    pub strict: bool,
}

/// f_tilde(x) / f(x), via the log-pdf difference for range safety.
pub fn likelihood_ratio(eps_tilde: &Density, eps: &Density, x: f64) -> f64 {
    (eps_tilde.log_pdf(x) - eps.log_pdf(x)).exp()
}

/// One point of a log likelihood-ratio profile.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    pub x: f64,
    pub log_ratio: f64,
    pub slope: f64,
}

/// Log-ratio and slope of log(f_tilde/f) along a grid; the slope uses the
/// analytic log-density derivatives where the families provide them.
pub fn log_ratio_profile(
    eps_tilde: &Density,
    eps: &Density,
    grid: &GridSpec,
) -> Vec<ProfilePoint> {
    grid.points()
        .iter()
        .map(|&x| ProfilePoint {
            x,
            log_ratio: eps_tilde.log_pdf(x) - eps.log_pdf(x),
            slope: eps_tilde.log_pdf_slope(x) - eps.log_pdf_slope(x),
        })
        .collect()
}

/// Default grid for order checks: log-spaced over the positive half-line up
/// to the 1 - 1e-10 quantile of the heavier-tailed density.
pub fn default_order_grid(a: &Density, b: &Density) -> GridSpec {
    let hi = a.quantile(1.0 - 1e-10).max(b.quantile(1.0 - 1e-10));
    let lo = 1e-6 * a.scale_hint().min(b.scale_hint());
    GridSpec::log_spaced(lo, hi, DEFAULT_ORDER_POINTS).expect("positive order-grid range")
}

fn require_noise_shape(d: &Density, role: &str) -> Result<()> {
    if d.center() != 0.0 {
        return Err(Error::InadmissibleDensity(format!(
            "{role} {} must be symmetric around 0 for the precision order",
            d.label()
        )));
    }
    let grid = default_check_grid(d, DEFAULT_CHECK_POINTS);
    let sym = check_symmetry(d, &grid, DEFAULT_CHECK_TOL);
    if !sym.passed {
        return Err(Error::InadmissibleDensity(format!(
            "{role} {} failed the symmetry check (violation {:.3e})",
            d.label(),
            sym.max_violation
        )));
    }
    let qc = check_quasiconcave(d, &grid, DEFAULT_CHECK_TOL);
    if !qc.passed {
        return Err(Error::InadmissibleDensity(format!(
            "{role} {} failed the quasi-concavity check (violation {:.3e})",
            d.label(),
            qc.max_violation
        )));
    }
    Ok(())
}

/// Classify the precision order of (eps_tilde vs eps) from the slope of
/// x -> log f_tilde(x) - log f(x) on a positive grid. Slopes within the
/// relative tolerance count as flat.
///
/// * all slopes >= -tol  -> `LessPrecise`
/// * all slopes <= +tol  -> `MorePrecise`
/// * all within +-tol    -> `Equal`
/// * both strict signs   -> `Incomparable`
pub fn check_less_precise(
    eps_tilde: &Density,
    eps: &Density,
    grid: &GridSpec,
    tol: f64,
) -> Result<OrderVerdict> {
    require_noise_shape(eps_tilde, "first density")?;
    require_noise_shape(eps, "second density")?;

    let mut witness_decrease: Option<SlopeWitness> = None;
    let mut witness_increase: Option<SlopeWitness> = None;
    let mut min_abs_excess = f64::INFINITY; // smallest |slope|/threshold margin
    let mut all_pos = true;
    let mut all_neg = true;

    for &x in grid.points() {
        let slope = eps_tilde.log_pdf_slope(x) - eps.log_pdf_slope(x);
        let thr = tol
            * 1.0_f64
                .max(eps_tilde.log_pdf(x).abs())
                .max(eps.log_pdf(x).abs());
        if slope < -thr {
            if witness_decrease.map_or(true, |w| slope < w.slope) {
                witness_decrease = Some(SlopeWitness { x, slope });
            }
        }
        if slope > thr {
            if witness_increase.map_or(true, |w| slope > w.slope) {
                witness_increase = Some(SlopeWitness { x, slope });
            }
        }
        all_pos &= slope > thr;
        all_neg &= slope < -thr;
        min_abs_excess = min_abs_excess.min(slope.abs() / thr.max(f64::MIN_POSITIVE));
    }

    let relation = match (witness_decrease.is_some(), witness_increase.is_some()) {
        (false, false) => OrderRelation::Equal,
        (false, true) => OrderRelation::LessPrecise,
        (true, false) => OrderRelation::MorePrecise,
        (true, true) => OrderRelation::Incomparable,
    };
    let strict = match relation {
        OrderRelation::LessPrecise => all_pos,
        OrderRelation::MorePrecise => all_neg,
        _ => false,
    };
    Ok(OrderVerdict {
        relation,
        witness_decrease,
        witness_increase,
        grid_used: grid.clone(),
        strict,
    })
}

/// Order check for the scale pair (sigma_prime * eps vs sigma * eps). When
/// the base density passes the `log f(e^x)` concavity test, scaling up is
/// ordered by construction and the verdict is `LessPrecise` without a grid
/// classification (the profile still fills the witnesses). Otherwise the
/// scaled pair goes through the direct grid check.
pub fn check_scale_less_precise(
    eps: &Density,
    sigma: f64,
    sigma_prime: f64,
) -> Result<OrderVerdict> {
    if !(sigma > 0.0 && sigma_prime > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scale parameters must be positive, got sigma={sigma}, sigma_prime={sigma_prime}"
        )));
    }
    if sigma_prime < sigma {
        return Err(Error::InvalidParameter(format!(
            "expected sigma_prime >= sigma, got sigma={sigma}, sigma_prime={sigma_prime}"
        )));
    }
    let scaled = scale_density(eps, sigma)?;
    let scaled_prime = scale_density(eps, sigma_prime)?;
    let grid = default_order_grid(&scaled_prime, &scaled);
    if sigma_prime == sigma {
        return Ok(OrderVerdict {
            relation: OrderRelation::Equal,
            witness_decrease: None,
            witness_increase: None,
            grid_used: grid,
            strict: false,
        });
    }
    let lg_grid = default_log_exp_grid(eps, DEFAULT_CHECK_POINTS);
    if check_log_exp_concave(eps, &lg_grid, DEFAULT_CHECK_TOL).passed {
        let mut witness_increase: Option<SlopeWitness> = None;
        let mut all_pos = true;
        for &x in grid.points() {
            let slope = scaled_prime.log_pdf_slope(x) - scaled.log_pdf_slope(x);
            let thr = DEFAULT_SLOPE_TOL
                * 1.0_f64
                    .max(scaled_prime.log_pdf(x).abs())
                    .max(scaled.log_pdf(x).abs());
            if slope > thr && witness_increase.map_or(true, |w| slope > w.slope) {
                witness_increase = Some(SlopeWitness { x, slope });
            }
            all_pos &= slope > thr;
        }
        return Ok(OrderVerdict {
            relation: OrderRelation::LessPrecise,
            witness_decrease: None,
            witness_increase,
            grid_used: grid,
            strict: all_pos,
        });
    }
    check_less_precise(&scaled_prime, &scaled, &grid, DEFAULT_SLOPE_TOL)
}

/// Default symmetric grid for the mean-preserving-spread check.
pub fn default_mps_grid(a: &Density, b: &Density) -> GridSpec {
    let hi = a.support().1.max(b.support().1);
    let inner = 4.0 * a.scale_hint().max(b.scale_hint());
    GridSpec::composite_symmetric(0.0, inner.min(hi / 2.0), hi, DEFAULT_CHECK_POINTS)
        .expect("mps grid range")
}

/// Single-crossing check of cdf_tilde - cdf: the sign pattern along the grid
/// must be +...+ 0...0 -...- (one crossing; consistent with eps_tilde being
/// a mean-preserving spread of eps), the all-zero degenerate pattern, or the
/// reversed pattern, which passes with the direction noted.
pub fn check_mean_preserving_spread(
    eps_tilde: &Density,
    eps: &Density,
    grid: &GridSpec,
    tol: f64,
) -> CheckResult {
    let mut signs: Vec<(f64, i8)> = Vec::new();
    let mut max_abs = 0.0f64;
    for &x in grid.points() {
        let d = eps_tilde.cdf(x) - eps.cdf(x);
        max_abs = max_abs.max(d.abs());
        let s = if d > tol {
            1
        } else if d < -tol {
            -1
        } else {
            0
        };
        signs.push((x, s));
    }

    let mut runs: Vec<(f64, i8)> = Vec::new();
    for &(x, s) in &signs {
        if s != 0 && runs.last().map_or(true, |&(_, ls)| ls != s) {
            runs.push((x, s));
        }
    }

    match runs.len() {
        0 => CheckResult {
            passed: true,
            max_violation: 0.0,
            witness: None,
            strict: None,
            note: Some("degenerate: cdf difference within tolerance everywhere".into()),
        },
        1 => CheckResult {
            // one-sided stochastic shift: no second crossing observed, but a
            // pure mean-preserving spread of a mean-0 pair should cross
            passed: false,
            max_violation: max_abs,
            witness: Some(Witness {
                x: runs[0].0,
                magnitude: max_abs,
                context: "cdf difference never changes sign".into(),
            }),
            strict: None,
            note: Some("no crossing: pair is stochastically shifted, not spread".into()),
        },
        2 => {
            let direction = if runs[0].1 > 0 {
                "spread direction: forward"
            } else {
                "spread direction: reversed"
            };
            CheckResult {
                passed: true,
                max_violation: 0.0,
                witness: None,
                strict: None,
                note: Some(format!("{direction}; crossing near x = {:.6}", runs[1].0)),
            }
        }
        _ => {
            let extra = runs[2];
            CheckResult {
                passed: false,
                max_violation: max_abs,
                witness: Some(Witness {
                    x: extra.0,
                    magnitude: max_abs,
                    context: format!("{} sign changes in cdf difference", runs.len() - 1),
                }),
                strict: None,
                note: None,
            }
        }
    }
}
