use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// `[v]₊`, componentwise `max(v, 0)`.
pub fn project_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

pub fn project_nonneg_in_place(v: &mut [f64]) {
    for x in v {
        *x = x.max(0.0);
    }
}

/// Projects every per-site vector of `q` (stored contiguously, `site_dim`
/// components per site) onto the Euclidean ball of radius `alpha`.
pub fn project_l2_ball_sitewise(q: &mut [f64], site_dim: usize, alpha: f64) {
    debug_assert!(site_dim > 0 && q.len().is_multiple_of(site_dim));
    for site in q.chunks_exact_mut(site_dim) {
        let norm = site.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > alpha {
            let s = alpha / norm;
            for v in site.iter_mut() {
                *v *= s;
            }
        }
    }
}

/// Closed convex sets with an exact projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProjectionSet {
    /// `ℝⁿ`
    Whole,
    /// `ℝⁿ₊`
    NonNegative,
    /// `{x : lower ≤ x ≤ upper}`; bounds may be infinite.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Product of Euclidean balls, one per site of `site_dim` components.
    SitewiseBall { site_dim: usize, radius: f64 },
}

impl ProjectionSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_len("box bounds", lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| l > u || l.is_nan() || u.is_nan()) {
            return Err(Error::param("box", "lower bound exceeds upper bound"));
        }
        Ok(ProjectionSet::Box { lower, upper })
    }

    pub fn is_whole(&self) -> bool {
        matches!(self, ProjectionSet::Whole)
    }

    pub fn project_in_place(&self, v: &mut [f64]) {
        match self {
            ProjectionSet::Whole => {}
            ProjectionSet::NonNegative => project_nonneg_in_place(v),
            ProjectionSet::Box { lower, upper } => {
                for ((x, l), u) in v.iter_mut().zip(lower).zip(upper) {
                    *x = x.max(*l).min(*u);
                }
            }
            ProjectionSet::SitewiseBall { site_dim, radius } => {
                project_l2_ball_sitewise(v, *site_dim, *radius)
            }
        }
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.project_in_place(&mut out);
        out
    }

    /// Membership up to an absolute tolerance.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        match self {
            ProjectionSet::Whole => true,
            ProjectionSet::NonNegative => v.iter().all(|x| *x >= -tol),
            ProjectionSet::Box { lower, upper } => v
                .iter()
                .zip(lower)
                .zip(upper)
                .all(|((x, l), u)| *x >= l - tol && *x <= u + tol),
            ProjectionSet::SitewiseBall { site_dim, radius } => v
                .chunks(*site_dim)
                .all(|s| s.iter().map(|x| x * x).sum::<f64>().sqrt() <= radius + tol),
        }
    }

    /// Checks that the set is compatible with vectors of length `n`.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            ProjectionSet::Box { lower, .. } => check_len("box bounds", n, lower.len()),
            ProjectionSet::SitewiseBall { site_dim, radius } => {
                if *site_dim == 0 || !n.is_multiple_of(*site_dim) {
                    return Err(Error::param("site_dim", format!("{site_dim} does not divide {n}")));
                }
                if !(*radius > 0.0) {
                    return Err(Error::param("radius", "must be positive"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}
