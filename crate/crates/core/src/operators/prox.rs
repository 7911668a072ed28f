use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::projection::ProjectionSet;
use crate::error::{check_len, Error, Result};

/// A closed proper convex function known through its proximity operator
///
/// ```text
/// prox(y, c) = argmin_z { θ(z) + ‖z − y‖² / (2c) },   c > 0.
/// ```
pub trait ProxFunction: Send + Sync + fmt::Debug {
    /// Writes `prox(y, c)` into `out`.
    fn prox(&self, y: &[f64], c: f64, out: &mut [f64]) -> Result<()>;

    /// `θ(x)`, possibly `+∞`. `None` when the function is not evaluable.
    fn value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn prox_vec(&self, y: &[f64], c: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; y.len()];
        self.prox(y, c, &mut out)?;
        Ok(out)
    }
}

fn check_weight(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::param("c", format!("prox weight must be positive and finite, got {c}")))
    }
}

/// Soft thresholding: `sign(yᵢ)·max(|yᵢ| − c, 0)`.
pub fn prox_l1(y: &[f64], c: f64) -> Result<Vec<f64>> {
    check_weight(c)?;
    Ok(y.iter().map(|v| soft(*v, c)).collect())
}

#[inline]
fn soft(v: f64, c: f64) -> f64 {
    v.signum() * (v.abs() - c).max(0.0)
}

/// Prox of `θ(z) = ½ zᵀPz`: `(cP + I)⁻¹ y`.
pub fn prox_quadratic(y: &[f64], c: f64, p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let quad = Quadratic::new(p.clone(), None)?;
    quad.prox_vec(y, c)
}

/// `θ ≡ 0`; the prox is the identity.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroFunction;

impl ProxFunction for ZeroFunction {
    fn prox(&self, y: &[f64], c: f64, out: &mut [f64]) -> Result<()> {
        check_weight(c)?;
        out.copy_from_slice(y);
        Ok(())
    }

    fn value(&self, _x: &[f64]) -> Option<f64> {
        Some(0.0)
    }
}

/// `θ(x) = weight·‖x‖₁`
#[derive(Clone, Copy, Debug)]
pub struct L1Norm {
    pub weight: f64,
}

impl Default for L1Norm {
    fn default() -> Self {
        Self { weight: 1.0 }
    }
}

impl ProxFunction for L1Norm {
    fn prox(&self, y: &[f64], c: f64, out: &mut [f64]) -> Result<()> {
        check_weight(c)?;
        let t = c * self.weight;
        for (o, v) in out.iter_mut().zip(y) {
            *o = soft(*v, t);
        }
        Ok(())
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        Some(self.weight * x.iter().map(|v| v.abs()).sum::<f64>())
    }
}

/// `θ(x) = ½ xᵀPx + qᵀx` with `P` symmetric positive semidefinite.
///
/// Diagonal `P` is detected at construction and handled componentwise.
#[derive(Clone, Debug)]
pub struct Quadratic {
    p: DMatrix<f64>,
    q: Option<DVector<f64>>,
    diagonal: Option<Vec<f64>>,
}

impl Quadratic {
    pub fn new(p: DMatrix<f64>, q: Option<DVector<f64>>) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::param("P", "must be square"));
        }
        let scale = p.amax().max(1.0);
        for i in 0..p.nrows() {
            for j in 0..i {
                if (p[(i, j)] - p[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::param("P", "must be symmetric"));
                }
            }
        }
        if let Some(q) = &q {
            check_len("linear term", p.nrows(), q.len())?;
        }
        let is_diag = (0..p.nrows()).all(|i| (0..p.ncols()).all(|j| i == j || p[(i, j)] == 0.0));
        let diagonal = is_diag.then(|| p.diagonal().iter().copied().collect::<Vec<_>>());
        if let Some(d) = &diagonal {
            if d.iter().any(|v| *v < 0.0) {
                return Err(Error::param("P", "diagonal entries must be nonnegative"));
            }
        }
        Ok(Self { p, q, diagonal })
    }

    pub fn diagonal(d: Vec<f64>) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_vec(d)), None)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn linear(&self) -> Option<&DVector<f64>> {
        self.q.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }
}

impl ProxFunction for Quadratic {
    fn prox(&self, y: &[f64], c: f64, out: &mut [f64]) -> Result<()> {
        check_weight(c)?;
        check_len("quadratic prox input", self.dim(), y.len())?;
        // (cP + I) z = y − c q
        let shifted = |i: usize| y[i] - self.q.as_ref().map_or(0.0, |q| c * q[i]);
        if let Some(d) = &self.diagonal {
            for (i, o) in out.iter_mut().enumerate() {
                *o = shifted(i) / (c * d[i] + 1.0);
            }
            return Ok(());
        }
        let n = self.dim();
        let mut system = &self.p * c;
        for i in 0..n {
            system[(i, i)] += 1.0;
        }
        let rhs = DVector::from_fn(n, |i, _| shifted(i));
        let chol = system
            .cholesky()
            .ok_or_else(|| Error::param("P", "cP + I is not positive definite; P is not PSD"))?;
        let z = chol.solve(&rhs);
        out.copy_from_slice(z.as_slice());
        Ok(())
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        let v = DVector::from_column_slice(x);
        let quad = 0.5 * v.dot(&(&self.p * &v));
        Some(quad + self.q.as_ref().map_or(0.0, |q| q.dot(&v)))
    }
}

/// `θ(x) = weight·‖x‖₁ + ½ Σ dᵢ xᵢ²` with `d ≥ 0`.
#[derive(Clone, Debug)]
pub struct L1Quadratic {
    pub weight: f64,
    pub diag: Vec<f64>,
}

impl L1Quadratic {
    pub fn new(weight: f64, diag: Vec<f64>) -> Result<Self> {
        if weight < 0.0 || diag.iter().any(|d| *d < 0.0) {
            return Err(Error::param("l1_quadratic", "weights must be nonnegative"));
        }
        Ok(Self { weight, diag })
    }
}

impl ProxFunction for L1Quadratic {
    fn prox(&self, y: &[f64], c: f64, out: &mut [f64]) -> Result<()> {
        check_weight(c)?;
        check_len("l1+quadratic prox input", self.diag.len(), y.len())?;
        for ((o, v), d) in out.iter_mut().zip(y).zip(&self.diag) {
            *o = soft(*v, c * self.weight) / (1.0 + c * d);
        }
        Ok(())
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        let quad: f64 = x.iter().zip(&self.diag).map(|(v, d)| 0.5 * d * v * v).sum();
        Some(self.weight * l1 + quad)
    }
}

/// `θ + ι_X` realized as prox followed by projection.
///
/// Exact when `θ` is separable and `X` is a box (or the orthant): each
/// coordinate is then a one-dimensional convex problem whose constrained
/// minimizer is the clipped unconstrained one.
#[derive(Debug)]
pub struct Restricted<F> {
    pub inner: F,
    pub set: ProjectionSet,
}

impl<F: ProxFunction> ProxFunction for Restricted<F> {
    fn prox(&self, y: &[f64], c: f64, out: &mut [f64]) -> Result<()> {
        self.inner.prox(y, c, out)?;
        self.set.project_in_place(out);
        Ok(())
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        if self.set.contains(x, 1e-12) {
            self.inner.value(x)
        } else {
            Some(f64::INFINITY)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::vector::dist;
    use proptest::prelude::*;

    #[test]
    fn l1_examples() {
        assert_eq!(prox_l1(&[2.0, -0.5], 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(prox_l1(&[0.0, 0.0], 0.3).unwrap(), vec![0.0, 0.0]);
        assert_eq!(prox_l1(&[-2.0], 0.5).unwrap(), vec![-1.5]);
    }

    #[test]
    fn l1_rejects_nonpositive_weight() {
        assert!(prox_l1(&[1.0], 0.0).is_err());
        assert!(prox_l1(&[1.0], -1.0).is_err());
    }

    #[test]
    fn quadratic_examples() {
        let p = DMatrix::identity(1, 1);
        assert_eq!(prox_quadratic(&[3.0], 1.0, &p).unwrap(), vec![1.5]);

        // (c·Pii + 1)⁻¹ yi = (2·1+1)⁻¹·3, (2·0+1)⁻¹·4
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let z = prox_quadratic(&[3.0, 4.0], 2.0, &p).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-15 && (z[1] - 4.0).abs() < 1e-15);

        let p = DMatrix::zeros(3, 3);
        assert_eq!(prox_quadratic(&[1.0, -2.0, 7.5], 0.7, &p).unwrap(), vec![1.0, -2.0, 7.5]);
    }

    #[test]
    fn quadratic_rejects_nonsymmetric() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Quadratic::new(p, None).is_err());
    }

    #[test]
    fn dense_and_diagonal_paths_agree() {
        let dense = DMatrix::from_row_slice(2, 2, &[2.0, 1e-300, 1e-300, 3.0]);
        let diag = Quadratic::diagonal(vec![2.0, 3.0]).unwrap();
        let a = Quadratic::new(dense, None).unwrap().prox_vec(&[1.0, 1.0], 0.5).unwrap();
        let b = diag.prox_vec(&[1.0, 1.0], 0.5).unwrap();
        assert!(dist(&a, &b) < 1e-15);
    }

    fn sample_functions() -> Vec<Box<dyn ProxFunction>> {
        let p = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 0.5]);
        vec![
            Box::new(ZeroFunction),
            Box::new(L1Norm { weight: 0.8 }),
            Box::new(Quadratic::new(p, Some(DVector::from_vec(vec![0.1, -0.3, 1.0]))).unwrap()),
            Box::new(L1Quadratic::new(0.5, vec![1.0, 0.0, 2.0]).unwrap()),
            Box::new(Restricted { inner: L1Norm { weight: 1.0 }, set: ProjectionSet::NonNegative }),
        ]
    }

    proptest! {
        #[test]
        fn prox_nonexpansive_and_decreasing(
            y1 in prop::collection::vec(-4.0f64..4.0, 3),
            y2 in prop::collection::vec(-4.0f64..4.0, 3),
            c in 0.05f64..5.0,
        ) {
            for f in sample_functions() {
                let p1 = f.prox_vec(&y1, c).unwrap();
                let p2 = f.prox_vec(&y2, c).unwrap();
                prop_assert!(dist(&p1, &p2) <= dist(&y1, &y2) + 1e-12);
                if let (Some(fp), Some(fy)) = (f.value(&p1), f.value(&y1)) {
                    let lhs = fp + dist(&p1, &y1).powi(2) / (2.0 * c);
                    prop_assert!(lhs <= fy + 1e-10 * (1.0 + fy.abs()) || fy.is_infinite());
                }
            }
        }
    }
}
