//! Adaptive Gauss-Kronrod integration (7-point Gauss embedded in 15-point
//! Kronrod), with caller-supplied initial panel boundaries.
//!
//! Integrands here are products of unimodal density factors, so the caller
//! seeds the panel list with knots at the factors' centers and quantiles;
//! the worst-error panel is then bisected until the global estimate meets
//! the tolerance. Error rescaling on each panel follows the classic
//! smoothness heuristic so that roundoff-dominated panels stop refining.

use crate::error::{Error, Result};

/// Positive abscissae of the 15-point Kronrod rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Weights of the embedded 7-point Gauss rule (odd-index Kronrod nodes).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Outcome of one integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    splittable: bool,
}

/// One 15-point Kronrod evaluation of `f` over `[a, b]` with the embedded
/// 7-point Gauss estimate used for the error.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_kronrod = f_center * WGK[7];
    let mut res_gauss = f_center * WG[3];
    let mut res_abs = res_kronrod.abs();

    let mut values = [0.0f64; 8]; // symmetric pair sums, values[7] = f_center
    values[7] = f_center;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let sum = f1 + f2;
        values[j] = sum;
        res_kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // odd-index Kronrod nodes are the Gauss-7 nodes
            res_gauss += WG[j / 2] * sum;
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * (values[j] - 2.0 * mean).abs();
    }

    let value = res_kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let raw_err = ((res_kronrod - res_gauss) * half).abs();
    (value, rescale_error(raw_err, res_abs, res_asc))
}

/// Smoothness-aware error rescaling: damp the raw Gauss/Kronrod difference
/// on smooth panels and floor it at the roundoff level of the panel.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// Integrate `f` over the interval spanned by `knots` (strictly increasing,
/// at least two points), bisecting the worst panel until the total error
/// estimate drops below `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    knots: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
    context: &str,
) -> Result<QuadResult> {
    if knots.len() < 2 || knots.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(format!(
            "integration knots must be >= 2 strictly increasing points ({context})"
        )));
    }

    let mut panels: Vec<Panel> = Vec::with_capacity(knots.len() + max_subdivisions);
    let mut evaluations = 0usize;
    for w in knots.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        evaluations += 15;
        panels.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
            splittable: true,
        });
    }

    let mut subdivisions = 0usize;
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        let bound = abs_tol.max(rel_tol * total.abs());
        if total_err <= bound {
            return Ok(QuadResult {
                value: total,
                abs_error: total_err,
                evaluations,
                subdivisions,
            });
        }

        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.splittable)
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i);

        let (worst, exhausted) = match worst {
            Some(i) if subdivisions < max_subdivisions => (i, false),
            _ => (0, true),
        };
        if exhausted {
            return Err(Error::QuadratureFailure {
                context: context.to_string(),
                value: total,
                error: total_err,
            });
        }

        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        // stop refining panels that have shrunk to roundoff width
        if !(p.a < mid && mid < p.b)
            || (p.b - p.a) < 50.0 * f64::EPSILON * (p.a.abs().max(p.b.abs()).max(1.0))
        {
            panels[worst].splittable = false;
            if panels.iter().all(|p| !p.splittable) {
                let total: f64 = panels.iter().map(|p| p.value).sum();
                let total_err: f64 = panels.iter().map(|p| p.error).sum();
                return Err(Error::QuadratureFailure {
                    context: context.to_string(),
                    value: total,
                    error: total_err,
                });
            }
            continue;
        }

        let (lv, le) = gk15(&f, p.a, mid);
        let (rv, re) = gk15(&f, mid, p.b);
        evaluations += 30;
        subdivisions += 1;
        panels[worst] = Panel {
            a: p.a,
            b: mid,
            value: lv,
            error: le,
            splittable: true,
        };
        panels.push(Panel {
            a: mid,
            b: p.b,
            value: rv,
            error: re,
            splittable: true,
        });
    }
}

/// Convenience wrapper for a plain interval without interior knots.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
    context: &str,
) -> Result<QuadResult> {
    integrate(f, &[a, b], rel_tol, abs_tol, max_subdivisions, context)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // GK15 integrates degree <= 22 exactly; x^4 over [0, 2] = 32/5
        let r = integrate_interval(|x| x.powi(4), 0.0, 2.0, 1e-12, 0.0, 50, "x^4").unwrap();
        assert!((r.value - 32.0 / 5.0).abs() < 1e-13);
    }

    #[test]
    fn standard_normal_mass() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let r = integrate(&f, &[-9.0, -2.0, 0.0, 2.0, 9.0], 1e-12, 0.0, 100, "phi").unwrap();
        assert!((r.value - 1.0).abs() < 1e-11, "got {}", r.value);
    }

    #[test]
    fn heavy_tail_with_geometric_knots() {
        // cauchy mass over [-1e9, 1e9] = 1 - 2/(pi*1e9) approximately
        let f = |x: f64| 1.0 / (std::f64::consts::PI * (1.0 + x * x));
        let mut knots = vec![0.0];
        let mut t = 1.0;
        while t < 1e9 {
            knots.push(t);
            t *= 4.0;
        }
        knots.push(1e9);
        let mut full: Vec<f64> = knots.iter().rev().map(|x| -x).collect();
        full.pop();
        full.extend_from_slice(&knots);
        let r = integrate(&f, &full, 1e-12, 0.0, 200, "cauchy").unwrap();
        let expected = 1.0 - 2.0 * (1e-9_f64).atan() / std::f64::consts::PI;
        assert!((r.value - expected).abs() < 1e-11, "got {}", r.value);
    }

    #[test]
    fn kink_resolved_by_knot() {
        let f = |x: f64| (-x.abs()).exp();
        let r = integrate(&f, &[-40.0, 0.0, 40.0], 1e-12, 0.0, 100, "laplace").unwrap();
        assert!((r.value - 2.0).abs() < 1e-11);
    }

    #[test]
    fn budget_exhaustion_reports_failure() {
        // highly oscillatory with a tiny budget
        let f = |x: f64| (200.0 * x).sin();
        let err = integrate_interval(f, 0.0, 10.0, 1e-14, 0.0, 2, "osc").unwrap_err();
        match err {
            Error::QuadratureFailure { .. } => {}
            other => panic!("expected quadrature failure, got {other}"),
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(integrate(|x: f64| x, &[1.0], 1e-10, 0.0, 10, "k").is_err());
        assert!(integrate(|x: f64| x, &[1.0, 1.0], 1e-10, 0.0, 10, "k").is_err());
    }
}
