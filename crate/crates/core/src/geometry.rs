//! Axis-aligned boxes in R^N.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box given by per-dimension bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BoxDomain {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.is_empty() || min.len() != max.len() {
            return Err(Error::InvalidGeometry(format!(
                "bound lengths {} and {} must match and be nonzero",
                min.len(),
                max.len()
            )));
        }
        for (lo, hi) in min.iter().zip(&max) {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidGeometry(format!(
                    "degenerate interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// 1-D interval.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a], vec![b])
    }

    /// N-fold product of the same interval.
    pub fn cube(a: f64, b: f64, dim: usize) -> Result<Self> {
        Self::new(vec![a; dim], vec![b; dim])
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(lo, hi)| hi - lo)
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.min.iter().zip(&self.max))
                .all(|(xi, (lo, hi))| *xi >= *lo && *xi <= *hi)
    }

    /// True when `inner` lies strictly inside this box (positive gap on every face).
    pub fn strictly_contains(&self, inner: &BoxDomain) -> bool {
        inner.dim() == self.dim()
            && inner
                .min
                .iter()
                .zip(&self.min)
                .all(|(ilo, olo)| ilo > olo)
            && inner
                .max
                .iter()
                .zip(&self.max)
                .all(|(ihi, ohi)| ihi < ohi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Sup-norm distance from `x` to the box (0 inside).
    pub fn distance_inf(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(xi, (lo, hi))| {
                if xi < lo {
                    lo - xi
                } else if xi > hi {
                    xi - hi
                } else {
                    0.0
                }
            })
            .fold(0.0f64, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_containment() {
        let d = BoxDomain::interval(-1.0, 2.0).unwrap();
        let omega = BoxDomain::interval(0.0, 1.0).unwrap();
        assert!(d.strictly_contains(&omega));
        assert!(!omega.strictly_contains(&d));
        assert!(!d.strictly_contains(&d));
    }

    #[test]
    fn membership_and_distance() {
        let b = BoxDomain::cube(0.0, 1.0, 2).unwrap();
        assert!(b.contains(&[0.0, 1.0]));
        assert!(!b.contains(&[0.0, 1.0 + 1e-12]));
        assert_eq!(b.distance_inf(&[0.5, 0.5]), 0.0);
        assert_eq!(b.distance_inf(&[1.5, 0.5]), 0.5);
        assert_eq!(b.volume(), 1.0);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(BoxDomain::interval(1.0, 1.0).is_err());
        assert!(BoxDomain::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }
}
