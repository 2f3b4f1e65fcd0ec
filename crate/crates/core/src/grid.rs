//! Evaluation grids for structural checks, order checks and sweeps.
//!
//! Heavy-tailed families need log-spaced tail coverage while near-mode
//! behavior needs linear resolution, so the default grids are composites:
//! a linear core around the center plus geometric ladders into each tail.

use crate::error::{Error, Result};

/// A strictly increasing, nonempty set of evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    points: Vec<f64>,
}

impl GridSpec {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("grid must be nonempty".into()));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "grid points must be strictly increasing and finite".into(),
            ));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("grid points must be finite".into()));
        }
        Ok(Self { points })
    }

    /// `n` equally spaced points from `lo` to `hi` inclusive.
    pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo < hi) || n < 2 {
            return Err(Error::InvalidParameter(format!(
                "linear grid needs lo < hi and n >= 2, got [{lo}, {hi}] n={n}"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        *points.last_mut().unwrap() = hi;
        Self::from_points(points)
    }

    /// `n` geometrically spaced points from `lo` to `hi`, both positive.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && lo < hi) || n < 2 {
            return Err(Error::InvalidParameter(format!(
                "log grid needs 0 < lo < hi and n >= 2, got [{lo}, {hi}] n={n}"
            )));
        }
        let (llo, lhi) = (lo.ln(), hi.ln());
        let step = (lhi - llo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| (llo + step * i as f64).exp()).collect();
        points[0] = lo;
        *points.last_mut().unwrap() = hi;
        Self::from_points(points)
    }

    /// Composite grid symmetric around `center`: a linear core of half-width
    /// `inner` plus geometric ladders out to half-width `outer` on both sides.
    /// Used for density structural checks (default n = 2048).
    pub fn composite_symmetric(center: f64, inner: f64, outer: f64, n: usize) -> Result<Self> {
        if !(inner > 0.0) || !(outer > inner) || n < 16 {
            return Err(Error::InvalidParameter(format!(
                "composite grid needs 0 < inner < outer and n >= 16, got inner={inner} outer={outer} n={n}"
            )));
        }
        let half = n / 2;
        let n_core = half / 2;
        let n_tail = half - n_core;
        let core = GridSpec::linear(0.0, inner, n_core + 1)?;
        let tail = GridSpec::log_spaced(inner, outer, n_tail + 1)?;
        let mut right: Vec<f64> = core.points[1..].to_vec();
        right.extend_from_slice(&tail.points[1..]);
        let mut points = Vec::with_capacity(2 * right.len() + 1);
        for &t in right.iter().rev() {
            points.push(center - t);
        }
        points.push(center);
        for &t in &right {
            points.push(center + t);
        }
        points.dedup_by(|a, b| a == b);
        Self::from_points(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        *self.points.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_endpoints_exact() {
        let g = GridSpec::linear(-2.0, 3.0, 11).unwrap();
        assert_eq!(g.lo(), -2.0);
        assert_eq!(g.hi(), 3.0);
        assert_eq!(g.len(), 11);
    }

    #[test]
    fn log_spacing_is_geometric() {
        let g = GridSpec::log_spaced(1.0, 1024.0, 11).unwrap();
        for w in g.points().windows(2) {
            assert!((w[1] / w[0] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn composite_is_symmetric() {
        let g = GridSpec::composite_symmetric(0.5, 2.0, 50.0, 256).unwrap();
        let pts = g.points();
        let n = pts.len();
        for i in 0..n {
            let mirrored = 1.0 - pts[n - 1 - i];
            assert!((pts[i] - mirrored).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unsorted() {
        assert!(GridSpec::from_points(vec![0.0, 0.0, 1.0]).is_err());
        assert!(GridSpec::from_points(vec![]).is_err());
        assert!(GridSpec::from_points(vec![1.0, 0.5]).is_err());
    }
}
