//! Posterior densities and posterior means E[X|S=s] for a location
//! experiment S = X + eps, by adaptive quadrature over the product
//! f_X(x) f_eps(s - x), with the normal-normal closed form as built-in
//! oracle.

use rayon::prelude::*;

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::quad;

/// Tolerances and budgets governing all integrals.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub tail_mass: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            tail_mass: 1e-12,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.tail_mass > 0.0
            && self.max_subdivisions >= 1
        {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "quadrature config requires rel_tol, abs_tol, tail_mass > 0 and max_subdivisions >= 1"
                    .into(),
            ))
        }
    }

    /// Same config with the relative tolerance tightened by `factor`
    /// (used to give inner integrals of nested quadratures headroom).
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: (self.rel_tol / factor).max(1e-14),
            ..*self
        }
    }
}

/// Below this, the signal normalizer Z(s) is treated as underflowed and the
/// posterior is reported as degenerate rather than returning 0/0.
pub const NORMALIZER_UNDERFLOW: f64 = 1e-280;

/// A prior plus a noise density; optionally a distinct *believed* noise
/// density used by a subjective agent when conditioning.
#[derive(Debug, Clone)]
pub struct LocationExperiment {
    prior: Density,
    noise: Density,
    believed_noise: Option<Density>,
    outside_assumptions: bool,
}

impl LocationExperiment {
    /// Requires the noise to be centered at 0. A noise (or prior) without a
    /// finite absolute first moment does not abort construction: the
    /// experiment is flagged `outside_assumptions` and values are still
    /// computed where the integrals converge.
    pub fn new(prior: Density, noise: Density) -> Result<Self> {
        if noise.center() != 0.0 {
            return Err(Error::InadmissibleDensity(format!(
                "noise {} must be centered at 0 (unbiased signal)",
                noise.label()
            )));
        }
        let outside = !noise.admissible_as_noise() || !prior.has_finite_first_moment();
        Ok(Self {
            prior,
            noise,
            believed_noise: None,
            outside_assumptions: outside,
        })
    }

    pub fn with_believed_noise(mut self, believed: Density) -> Result<Self> {
        if believed.center() != 0.0 {
            return Err(Error::InadmissibleDensity(format!(
                "believed noise {} must be centered at 0",
                believed.label()
            )));
        }
        self.outside_assumptions |= !believed.admissible_as_noise();
        self.believed_noise = Some(believed);
        Ok(self)
    }

    pub fn prior(&self) -> &Density {
        &self.prior
    }

    /// The objective noise (always the sampling distribution of the signal).
    pub fn noise(&self) -> &Density {
        &self.noise
    }

    pub fn believed_noise(&self) -> Option<&Density> {
        self.believed_noise.as_ref()
    }

    /// The density used in the conditioning step: the believed noise when
    /// present, the objective noise otherwise.
    pub fn conditioning_noise(&self) -> &Density {
        self.believed_noise.as_ref().unwrap_or(&self.noise)
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior.center()
    }

    /// True when a density violates the finite-first-moment requirement;
    /// values are computed anyway but reports carry the flag.
    pub fn outside_assumptions(&self) -> bool {
        self.outside_assumptions
    }
}

/// Panel boundaries for integrating f_X(x) * f_eps(s - x) dx: the hull of
/// the prior support and the s-shifted noise support, with geometric ladders
/// around both modes (prior center and s) so that products of a narrow and a
/// heavy-tailed factor are resolved.
fn posterior_knots(prior: &Density, cond_noise: &Density, s: f64) -> Vec<f64> {
    let (plo, phi) = prior.support();
    let (nlo, nhi) = cond_noise.support();
    let lo = plo.min(s - nhi);
    let hi = phi.max(s - nlo);

    let mut knots = Vec::with_capacity(64);
    knots.push(lo);
    knots.push(hi);
    let mut ladder = |center: f64, hint: f64| {
        knots.push(center);
        let mut t = hint;
        let span = hi - lo;
        while t < span {
            knots.push(center + t);
            knots.push(center - t);
            t *= 4.0;
        }
    };
    ladder(prior.center(), prior.scale_hint());
    ladder(s - cond_noise.center(), cond_noise.scale_hint());
    knots.extend(prior.breakpoints());
    knots.extend(cond_noise.breakpoints().iter().map(|b| s - b));

    knots.retain(|&x| (lo..=hi).contains(&x));
    knots.sort_by(f64::total_cmp);
    let span = hi - lo;
    let mut out: Vec<f64> = Vec::with_capacity(knots.len());
    for x in knots {
        if out.last().map_or(true, |&l| x - l > 1e-13 * span) {
            out.push(x);
        }
    }
    if out.len() < 2 || *out.last().unwrap() < hi {
        out.push(hi);
    }
    out
}

/// Z(s) and the first-moment integral of the unnormalized posterior,
/// computed with shared panel boundaries.
fn normalizer_and_moment(
    exp: &LocationExperiment,
    s: f64,
    quad_cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let prior = exp.prior();
    let noise = exp.conditioning_noise();
    let knots = posterior_knots(prior, noise, s);
    let joint = |x: f64| (prior.log_pdf(x) + noise.log_pdf(s - x)).exp();

    let den = quad::integrate(
        joint,
        &knots,
        quad_cfg.rel_tol,
        0.0,
        quad_cfg.max_subdivisions,
        &format!("normalizer Z({s})"),
    )?;
    let z = den.value;
    if !(z > NORMALIZER_UNDERFLOW) {
        return Err(Error::DegenerateSignal { s, z });
    }

    // the numerator may legitimately be ~0 (signal at the prior mean), so its
    // absolute floor is tied to the scale of x times the normalizer
    let x_scale = s.abs().max(prior.scale_hint()).max(1.0);
    let num_floor = quad_cfg.rel_tol * z * x_scale;
    let num = quad::integrate(
        |x| x * joint(x),
        &knots,
        quad_cfg.rel_tol,
        num_floor,
        quad_cfg.max_subdivisions,
        &format!("posterior moment at s = {s}"),
    )?;
    Ok((z, num.value))
}

/// The posterior at a fixed signal realization, with the normalizer computed
/// once.
#[derive(Debug, Clone)]
pub struct ConditionedPosterior {
    prior: Density,
    cond_noise: Density,
    s: f64,
    z: f64,
}

impl ConditionedPosterior {
    pub fn pdf(&self, x: f64) -> f64 {
        (self.prior.log_pdf(x) + self.cond_noise.log_pdf(self.s - x)).exp() / self.z
    }

    pub fn normalizer(&self) -> f64 {
        self.z
    }

    pub fn signal(&self) -> f64 {
        self.s
    }
}

/// Condition the experiment on S = s; fails with `DegenerateSignal` when the
/// normalizer underflows.
pub fn condition(
    exp: &LocationExperiment,
    s: f64,
    quad_cfg: &QuadratureConfig,
) -> Result<ConditionedPosterior> {
    let prior = exp.prior();
    let noise = exp.conditioning_noise();
    let knots = posterior_knots(prior, noise, s);
    let joint = |x: f64| (prior.log_pdf(x) + noise.log_pdf(s - x)).exp();
    let den = quad::integrate(
        joint,
        &knots,
        quad_cfg.rel_tol,
        0.0,
        quad_cfg.max_subdivisions,
        &format!("normalizer Z({s})"),
    )?;
    if !(den.value > NORMALIZER_UNDERFLOW) {
        return Err(Error::DegenerateSignal { s, z: den.value });
    }
    Ok(ConditionedPosterior {
        prior: prior.clone(),
        cond_noise: noise.clone(),
        s,
        z: den.value,
    })
}

/// Posterior density f(x | S = s) = f_X(x) f_eps(s - x) / Z(s).
pub fn posterior_pdf(
    exp: &LocationExperiment,
    s: f64,
    x: f64,
    quad_cfg: &QuadratureConfig,
) -> Result<f64> {
    Ok(condition(exp, s, quad_cfg)?.pdf(x))
}

/// Posterior mean E[X | S = s]. When a believed noise is present it replaces
/// the objective noise in the conditioning step (the subjective posterior).
pub fn posterior_mean(
    exp: &LocationExperiment,
    s: f64,
    quad_cfg: &QuadratureConfig,
) -> Result<f64> {
    let (z, num) = normalizer_and_moment(exp, s, quad_cfg)?;
    Ok(num / z)
}

/// Closed-form posterior mean of the normal-normal experiment:
/// w s + (1 - w) mu with w = sigma_x^2 / (sigma_x^2 + sigma_eps^2).
pub fn normal_normal_oracle(mu: f64, sigma_x: f64, sigma_eps: f64, s: f64) -> f64 {
    assert!(
        sigma_x > 0.0 && sigma_eps > 0.0,
        "normal-normal oracle needs positive standard deviations"
    );
    let vx = sigma_x * sigma_x;
    let w = vx / (vx + sigma_eps * sigma_eps);
    w * s + (1.0 - w) * mu
}

/// Per-row outcome of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    OutsideAssumptions,
    Degenerate,
    Failed,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::OutsideAssumptions => "outside-assumptions",
            RowStatus::Degenerate => "degenerate",
            RowStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub s: f64,
    pub posterior_mean: f64,
    pub z: f64,
    pub status: RowStatus,
}

/// Elementwise posterior mean over a signal grid; per-row failures are
/// flagged rows, not a global abort. Grid points evaluate in parallel.
pub fn posterior_mean_sweep(
    exp: &LocationExperiment,
    s_grid: &GridSpec,
    quad_cfg: &QuadratureConfig,
) -> Vec<SweepRow> {
    s_grid
        .points()
        .par_iter()
        .map(|&s| match normalizer_and_moment(exp, s, quad_cfg) {
            Ok((z, num)) => SweepRow {
                s,
                posterior_mean: num / z,
                z,
                status: if exp.outside_assumptions() {
                    RowStatus::OutsideAssumptions
                } else {
                    RowStatus::Ok
                },
            },
            Err(Error::DegenerateSignal { z, .. }) => SweepRow {
                s,
                posterior_mean: f64::NAN,
                z,
                status: RowStatus::Degenerate,
            },
            Err(_) => SweepRow {
                s,
                posterior_mean: f64::NAN,
                z: f64::NAN,
                status: RowStatus::Failed,
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::Density;
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};

    fn dens(text: &str) -> Density {
        Density::parse(text).unwrap()
    }

    fn experiment(prior: &str, noise: &str) -> LocationExperiment {
        LocationExperiment::new(dens(prior), dens(noise)).unwrap()
    }

    #[test]
    fn oracle_examples() {
        assert!((normal_normal_oracle(0.0, 1.0, 1.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((normal_normal_oracle(0.0, 1.0, 1e-6, 2.0) - 2.0).abs() < 1e-11);
        assert!((normal_normal_oracle(3.0, 0.7, 2.3, 3.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn normal_normal_pdf_at_zero() {
        let exp = experiment("normal(0,1)", "normal(0,1)");
        let quad_cfg = QuadratureConfig::default();
        let p = posterior_pdf(&exp, 0.0, 0.0, &quad_cfg).unwrap();
        // posterior is N(0, 1/2); pdf(0) = 1/sqrt(pi)
        assert!((p - 0.5641895835477563).abs() < 1e-10, "got {p}");
    }

    #[test]
    fn posterior_symmetric_when_signal_at_center() {
        let exp = experiment("logistic(0.5,1)", "doubleexponential(0,1)");
        let quad_cfg = QuadratureConfig::default();
        let post = condition(&exp, 0.5, &quad_cfg).unwrap();
        for t in [0.2, 0.9, 1.7, 3.0] {
            let a = post.pdf(0.5 + t);
            let b = post.pdf(0.5 - t);
            assert!((a - b).abs() <= 1e-12 * a.max(1e-12), "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn normal_normal_mean_matches_oracle() {
        let quad_cfg = QuadratureConfig::default();
        for (sx, se) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
            let exp = experiment(&format!("normal(0,{sx})"), &format!("normal(0,{se})"));
            for s in [-4.0, -1.3, 0.0, 0.7, 2.0, 5.0] {
                let m = posterior_mean(&exp, s, &quad_cfg).unwrap();
                let o = normal_normal_oracle(0.0, sx, se, s);
                assert!((m - o).abs() < 1e-9, "sx={sx} se={se} s={s}: {m} vs {o}");
            }
        }
    }

    #[test]
    fn signal_at_prior_mean_returns_prior_mean() {
        let quad_cfg = QuadratureConfig::default();
        let exp = experiment("logistic(1.5,1)", "doubleexponential(0,1)");
        let m = posterior_mean(&exp, 1.5, &quad_cfg).unwrap();
        assert!((m - 1.5).abs() < 1e-9, "got {m}");
    }

    #[test]
    fn necessity_prior_matches_truncated_normal_oracle() {
        // near-uniform prior on [-1, 1] with normal noise: the posterior is a
        // clipped normal, whose mean has a closed form
        let quad_cfg = QuadratureConfig::default();
        let prior = crate::densities::make_necessity_prior(1.0, 1e8, &quad_cfg).unwrap();
        let noise = dens("normal(0,1)");
        let exp = LocationExperiment::new(prior, noise).unwrap();
        let s = 2.0;
        let m = posterior_mean(&exp, s, &quad_cfg).unwrap();

        let n = Normal::new(0.0, 1.0).unwrap();
        let trunc_mean_u = (n.pdf(s - 1.0) - n.pdf(s + 1.0)) / (n.cdf(s + 1.0) - n.cdf(s - 1.0));
        let oracle = s - trunc_mean_u;
        assert!((m - oracle).abs() < 2e-4, "{m} vs {oracle}");

        // posterior pdf proportional to the clipped normal inside the flat region
        let post = condition(&exp, s, &quad_cfg).unwrap();
        for x in [-0.5, 0.0, 0.5, 0.9] {
            let expected = n.pdf(s - x) / (n.cdf(s + 1.0) - n.cdf(s - 1.0));
            let got = post.pdf(x);
            assert!(
                (got - expected).abs() < 1e-3 * expected,
                "x={x}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn posterior_pdf_normalizes() {
        let quad_cfg = QuadratureConfig::default();
        for (prior, noise, s) in [
            ("normal(0,1)", "normal(0,1)", 1.7),
            ("logistic(0,1)", "doubleexponential(0,1)", -2.4),
            ("normal(0,2)", "studentt(0,1,3)", 3.0),
        ] {
            let exp = experiment(prior, noise);
            let post = condition(&exp, s, &quad_cfg).unwrap();
            let knots: Vec<f64> = super::posterior_knots(exp.prior(), exp.conditioning_noise(), s);
            let mass = quad::integrate(
                |x| post.pdf(x),
                &knots,
                1e-11,
                0.0,
                quad_cfg.max_subdivisions,
                "posterior mass",
            )
            .unwrap();
            assert!(
                (mass.value - 1.0).abs() < 1e-9,
                "{prior}+{noise}: mass {}",
                mass.value
            );
        }
    }

    #[test]
    fn deep_tail_signal_degenerates() {
        let quad_cfg = QuadratureConfig::default();
        let exp = experiment("normal(0,1)", "normal(0,1)");
        match posterior_mean(&exp, 60.0, &quad_cfg) {
            Err(Error::DegenerateSignal { s, .. }) => assert_eq!(s, 60.0),
            other => panic!("expected degenerate signal, got {other:?}"),
        }
        // not yet degenerate at s = 40 and still near the oracle
        let m = posterior_mean(&exp, 40.0, &quad_cfg).unwrap();
        assert!((m - 20.0).abs() < 1e-8, "got {m}");
    }

    #[test]
    fn believed_noise_governs_conditioning() {
        let quad_cfg = QuadratureConfig::default();
        let exp = experiment("normal(0,1)", "normal(0,1)")
            .with_believed_noise(dens("normal(0,0.5)"))
            .unwrap();
        let m = posterior_mean(&exp, 2.0, &quad_cfg).unwrap();
        // subjective weight 1/(1+0.25) = 0.8
        assert!((m - 1.6).abs() < 1e-9, "got {m}");
    }

    #[test]
    fn cauchy_noise_flagged_outside_assumptions() {
        let exp = experiment("normal(0,1)", "cauchy(0,1)");
        assert!(exp.outside_assumptions());
        let quad_cfg = QuadratureConfig::default();
        // the value still exists for a normal prior
        let m = posterior_mean(&exp, 2.0, &quad_cfg).unwrap();
        assert!(m.is_finite());
        assert!(m > 0.0 && m < 2.0);
        let grid = GridSpec::linear(-2.0, 2.0, 5).unwrap();
        let rows = posterior_mean_sweep(&exp, &grid, &quad_cfg);
        assert!(rows.iter().all(|r| r.status == RowStatus::OutsideAssumptions));
    }

    #[test]
    fn nonzero_noise_center_rejected() {
        let err = LocationExperiment::new(dens("normal(0,1)"), dens("normal(1,1)")).unwrap_err();
        match err {
            Error::InadmissibleDensity(_) => {}
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn sweep_antisymmetric_and_flags_degenerate_rows() {
        let quad_cfg = QuadratureConfig::default();
        let exp = experiment("normal(0,1)", "normal(0,1)");
        let grid = GridSpec::linear(-3.0, 3.0, 13).unwrap();
        let rows = posterior_mean_sweep(&exp, &grid, &quad_cfg);
        assert_eq!(rows.len(), 13);
        for (i, row) in rows.iter().enumerate() {
            let mirror = &rows[rows.len() - 1 - i];
            assert!((row.posterior_mean + mirror.posterior_mean).abs() < 1e-9);
            assert_eq!(row.status, RowStatus::Ok);
        }

        let wide = GridSpec::from_points(vec![-60.0, 0.0, 60.0]).unwrap();
        let rows = posterior_mean_sweep(&exp, &wide, &quad_cfg);
        assert_eq!(rows[0].status, RowStatus::Degenerate);
        assert!(rows[0].posterior_mean.is_nan());
        assert_eq!(rows[1].status, RowStatus::Ok);
        assert_eq!(rows[2].status, RowStatus::Degenerate);
    }

    #[test]
    fn logistic_noise_sweep_monotone() {
        let quad_cfg = QuadratureConfig::default();
        let exp = experiment("normal(0,1)", "logistic(0,1)");
        let grid = GridSpec::linear(-6.0, 6.0, 25).unwrap();
        let rows = posterior_mean_sweep(&exp, &grid, &quad_cfg);
        for w in rows.windows(2) {
            assert!(
                w[1].posterior_mean >= w[0].posterior_mean - 1e-10,
                "not monotone at s = {}",
                w[1].s
            );
        }
    }
}
