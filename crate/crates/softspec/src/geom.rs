//! Small geometric value types: axis-aligned rectangles and symmetric 2x2
//! coefficient matrices.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn unit() -> Self {
        Rect::new(T::zero(), T::zero(), T::one(), T::one())
    }

    pub fn width(&self) -> T {
        self.x1 - self.x0
    }

    pub fn height(&self) -> T {
        self.y1 - self.y0
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn contains(&self, x: T, y: T) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    /// True if `other` lies inside `self` (boundary contact allowed).
    pub fn contains_rect(&self, other: &Rect<T>) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    /// Distance from `other` (a subset) to the boundary of `self`: the
    /// smallest of the four side clearances. Negative if `other` pokes out.
    pub fn clearance(&self, other: &Rect<T>) -> T {
        let a = other.x0 - self.x0;
        let b = self.x1 - other.x1;
        let c = other.y0 - self.y0;
        let d = self.y1 - other.y1;
        a.min(b).min(c).min(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x1 > self.x0 && self.y1 > self.y0) {
            return Err(Error::config(format!(
                "degenerate rectangle [{}, {}] x [{}, {}]",
                self.x0, self.x1, self.y0, self.y1
            )));
        }
        Ok(())
    }
}

/// Symmetric 2x2 matrix stored as (a11, a12, a22).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat2<T> {
    pub a11: T,
    pub a12: T,
    pub a22: T,
}

impl<T: Scalar> SymMat2<T> {
    pub fn new(a11: T, a12: T, a22: T) -> Self {
        SymMat2 { a11, a12, a22 }
    }

    pub fn identity() -> Self {
        SymMat2::new(T::one(), T::zero(), T::one())
    }

    pub fn diag(a: T, c: T) -> Self {
        SymMat2::new(a, T::zero(), c)
    }

    pub fn scale(a: T) -> Self {
        SymMat2::diag(a, a)
    }

    /// Row-major [a11, a12, a21, a22]; rejects asymmetry beyond a relative
    /// 1e-12 and non-positive-definite input.
    pub fn from_row_major(m: [T; 4]) -> Result<Self> {
        let scale = m.iter().fold(T::zero(), |s, v| s.max(v.abs()));
        let tol = T::of(1e-12) * scale.max(T::one());
        if (m[1] - m[2]).abs() > tol {
            return Err(Error::config(format!(
                "coefficient matrix not symmetric: a12 = {}, a21 = {}",
                m[1], m[2]
            )));
        }
        let a = SymMat2::new(m[0], (m[1] + m[2]) * T::of(0.5), m[3]);
        a.require_spd()?;
        Ok(a)
    }

    pub fn to_row_major(&self) -> [T; 4] {
        [self.a11, self.a12, self.a12, self.a22]
    }

    pub fn quadratic_form(&self, x: T, y: T) -> T {
        self.a11 * x * x + T::of(2.0) * self.a12 * x * y + self.a22 * y * y
    }

    /// A (x, y)^T.
    pub fn apply(&self, x: T, y: T) -> (T, T) {
        (self.a11 * x + self.a12 * y, self.a12 * x + self.a22 * y)
    }

    pub fn det(&self) -> T {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn is_spd(&self) -> bool {
        self.a11 > T::zero() && self.det() > T::zero()
    }

    pub fn require_spd(&self) -> Result<()> {
        if self.is_spd() {
            Ok(())
        } else {
            Err(Error::config(format!(
                "coefficient matrix not positive definite: a11 = {}, a12 = {}, a22 = {}",
                self.a11, self.a12, self.a22
            )))
        }
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> (T, T) {
        let half_tr = (self.a11 + self.a22) * T::of(0.5);
        let h = (self.a11 - self.a22) * T::of(0.5);
        let disc = (h * h + self.a12 * self.a12).sqrt();
        (half_tr - disc, half_tr + disc)
    }

    /// Loewner order check self <= other + tol*I, i.e. other - self + tol*I
    /// is positive semidefinite.
    pub fn leq(&self, other: &SymMat2<T>, tol: T) -> bool {
        let d = SymMat2::new(
            other.a11 - self.a11 + tol,
            other.a12 - self.a12,
            other.a22 - self.a22 + tol,
        );
        let (lo, _) = d.eigenvalues();
        lo >= -tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_clearance_signs() {
        let s: Rect<f64> = Rect::unit();
        let inner = Rect::new(0.25, 0.25, 0.75, 0.75);
        assert_eq!(s.clearance(&inner), 0.25);
        let poking = Rect::new(-0.1, 0.25, 0.5, 0.75);
        assert!(s.clearance(&poking) < 0.0);
        assert!(s.contains_rect(&inner));
        assert!(!s.contains_rect(&poking));
    }

    #[test]
    fn symmat_quadratic_and_eigs() {
        let a = SymMat2::new(2.0f64, 1.0, 3.0);
        // [2 1; 1 3] (1,1) = 2 + 2 + 3 = 7
        assert_eq!(a.quadratic_form(1.0, 1.0), 7.0);
        let (lo, hi) = a.eigenvalues();
        // eigenvalues of [2 1; 1 3]: (5 +- sqrt(5)) / 2
        assert!((lo - (5.0 - 5.0f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!((hi - (5.0 + 5.0f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!(a.is_spd());
        assert!(!SymMat2::new(1.0f64, 2.0, 1.0).is_spd());
    }

    #[test]
    fn row_major_rejects_asymmetry() {
        assert!(SymMat2::from_row_major([1.0f64, 0.5, 0.5, 2.0]).is_ok());
        assert!(SymMat2::from_row_major([1.0f64, 0.5, 0.6, 2.0]).is_err());
        assert!(SymMat2::from_row_major([-1.0f64, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn loewner_order() {
        let id = SymMat2::<f64>::identity();
        let two = SymMat2::scale(2.0);
        assert!(id.leq(&two, 1e-12));
        assert!(!two.leq(&id, 1e-12));
    }
}
