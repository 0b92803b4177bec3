//! Homogeneous 3-vectors and 3×3 matrices.
//!
//! Points of the projective plane and lifted spiral vertices are both [`HVec`]s.
//! The cross product is the join of two points (or the meet of two lines) and
//! [`triple`] is the determinant of three column vectors.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use nalgebra::{Complex, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative scale for degeneracy detection.
pub const EPS_DEG: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct HVec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for HVec {
    fn from([x, y, z]: [f64; 3]) -> Self {
        HVec { x, y, z }
    }
}

impl From<HVec> for [f64; 3] {
    fn from(v: HVec) -> Self {
        [v.x, v.y, v.z]
    }
}

impl HVec {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        HVec { x, y, z }
    }

    /// Affine point (x, y) in the chart z = 1.
    pub const fn affine(x: f64, y: f64) -> Self {
        HVec { x, y, z: 1.0 }
    }

    pub fn to_array(self) -> [f64; 3] {
        self.into()
    }

    pub fn dot(self, o: HVec) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn cross(self, o: HVec) -> HVec {
        cross(self, o)
    }

    /// Unit-norm representative whose first non-negligible component is positive.
    /// Returns `None` for the zero vector.
    pub fn proj_normalized(self) -> Option<HVec> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        let u = self * (1.0 / n);
        let lead = [u.x, u.y, u.z].into_iter().find(|c| c.abs() > EPS_DEG).unwrap_or(0.0);
        Some(if lead < 0.0 { -u } else { u })
    }

    /// Equality of the underlying projective points.
    pub fn proj_eq(self, o: HVec, eps: f64) -> bool {
        match (self.proj_normalized(), o.proj_normalized()) {
            (Some(u), Some(v)) => (u - v).max_abs() <= eps,
            _ => false,
        }
    }

    /// Sine of the angle between the two lines through the origin; zero when
    /// the vectors represent the same projective point.
    pub fn proj_distance(self, o: HVec) -> f64 {
        let d = self.norm() * o.norm();
        if d == 0.0 {
            return f64::INFINITY;
        }
        self.cross(o).norm() / d
    }

    /// Point in the affine chart z = 1, if it is not at infinity.
    pub fn dehomogenize(self) -> Option<(f64, f64)> {
        if self.z.abs() <= EPS_DEG * self.norm() {
            None
        } else {
            Some((self.x / self.z, self.y / self.z))
        }
    }

    /// Representative scaled to z = 1 when possible, unit norm otherwise.
    pub fn chart_normalized(self) -> HVec {
        match self.dehomogenize() {
            Some((x, y)) => HVec::affine(x, y),
            None => self.proj_normalized().unwrap_or(self),
        }
    }
}

impl Add for HVec {
    type Output = HVec;
    fn add(self, o: HVec) -> HVec {
        HVec::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for HVec {
    fn add_assign(&mut self, o: HVec) {
        *self = *self + o;
    }
}

impl Sub for HVec {
    type Output = HVec;
    fn sub(self, o: HVec) -> HVec {
        HVec::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for HVec {
    type Output = HVec;
    fn neg(self) -> HVec {
        HVec::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for HVec {
    type Output = HVec;
    fn mul(self, s: f64) -> HVec {
        HVec::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<HVec> for f64 {
    type Output = HVec;
    fn mul(self, v: HVec) -> HVec {
        v * self
    }
}

impl Index<usize> for HVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("HVec index {i} out of range"),
        }
    }
}

impl fmt::Display for HVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

pub fn cross(u: HVec, v: HVec) -> HVec {
    HVec::new(u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x)
}

/// det of the matrix with columns u, v, w.
pub fn triple(u: HVec, v: HVec, w: HVec) -> f64 {
    u.dot(cross(v, w))
}

/// (a×b)×(c×d): the intersection of line ab with line cd.
pub fn meet_of_joins(a: HVec, b: HVec, c: HVec, d: HVec) -> Result<HVec> {
    meet_of_joins_with(a, b, c, d, EPS_DEG)
}

pub fn meet_of_joins_with(a: HVec, b: HVec, c: HVec, d: HVec, eps_deg: f64) -> Result<HVec> {
    let out = cross(cross(a, b), cross(c, d));
    let scale = a.norm() * b.norm() * c.norm() * d.norm();
    if !(out.norm() > eps_deg * scale) || !out.is_finite() {
        return Err(Error::degenerate(None, "lines do not meet in a unique point"));
    }
    Ok(out)
}

/// Normalized |det(u, v, w)|; zero iff the three points are collinear.
pub fn collinearity(u: HVec, v: HVec, w: HVec) -> f64 {
    let s = u.norm() * v.norm() * w.norm();
    if s == 0.0 {
        0.0
    } else {
        triple(u, v, w).abs() / s
    }
}

/// Real 3×3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Mat3(pub [[f64; 3]; 3]);

impl From<[[f64; 3]; 3]> for Mat3 {
    fn from(rows: [[f64; 3]; 3]) -> Self {
        Mat3(rows)
    }
}

impl From<Mat3> for [[f64; 3]; 3] {
    fn from(m: Mat3) -> Self {
        m.0
    }
}

impl Default for Mat3 {
    fn default() -> Self {
        Mat3::identity()
    }
}

impl Mat3 {
    pub const fn identity() -> Self {
        Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub const fn zeros() -> Self {
        Mat3([[0.0; 3]; 3])
    }

    pub fn from_cols(c0: HVec, c1: HVec, c2: HVec) -> Self {
        Mat3([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    pub fn diag(d0: f64, d1: f64, d2: f64) -> Self {
        Mat3([[d0, 0.0, 0.0], [0.0, d1, 0.0], [0.0, 0.0, d2]])
    }

    /// Companion-form matrix with columns e₂, e₃, (c, b, a).
    pub fn companion(c: f64, b: f64, a: f64) -> Self {
        Mat3([[0.0, 0.0, c], [1.0, 0.0, b], [0.0, 1.0, a]])
    }

    pub fn col(&self, j: usize) -> HVec {
        HVec::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn apply(&self, v: HVec) -> HVec {
        let m = &self.0;
        HVec::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn det(&self) -> f64 {
        triple(self.col(0), self.col(1), self.col(2))
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Sum of the principal 2×2 minors.
    pub fn sigma2(&self) -> f64 {
        let m = &self.0;
        (m[0][0] * m[1][1] - m[0][1] * m[1][0])
            + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
            + (m[1][1] * m[2][2] - m[1][2] * m[2][1])
    }

    pub fn adjugate(&self) -> Self {
        // rows of the adjugate are cross products of columns
        let (c0, c1, c2) = (self.col(0), self.col(1), self.col(2));
        let r0 = cross(c1, c2);
        let r1 = cross(c2, c0);
        let r2 = cross(c0, c1);
        Mat3([r0.to_array(), r1.to_array(), r2.to_array()])
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        let scale = self.max_abs().powi(3);
        if !(det.abs() > EPS_DEG * scale) || !det.is_finite() {
            return Err(Error::SingularMatrix { det });
        }
        Ok(self.adjugate().scale(1.0 / det))
    }

    /// Rescale by the real cube root of 1/det so the result has det 1.
    pub fn normalize_to_sl3(&self) -> Result<Self> {
        let det = self.det();
        let scale = self.max_abs().powi(3);
        if !(det.abs() > EPS_DEG * scale) || !det.is_finite() {
            return Err(Error::SingularMatrix { det });
        }
        Ok(self.scale(1.0 / det.cbrt()))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.0;
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        Mat3(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    /// Largest entrywise [`crate::tol::rel_dev`].
    pub fn max_rel_dev(&self, o: &Mat3) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(o.0.iter().flatten())
            .map(|(&x, &y)| crate::tol::rel_dev(x, y))
            .fold(0.0, f64::max)
    }

    /// Complex eigenvalues ordered by modulus, then by argument.
    pub fn eigenvalues(&self) -> [Complex<f64>; 3] {
        let m = Matrix3::from_fn(|i, j| self.0[i][j]);
        let ev = m.complex_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2]];
        out.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
        out
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }
}

impl Mul<HVec> for Mat3 {
    type Output = HVec;
    fn mul(self, v: HVec) -> HVec {
        self.apply(v)
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut out = self.0;
        for (row, other) in out.iter_mut().zip(o.0) {
            for (x, y) in row.iter_mut().zip(other) {
                *x += y;
            }
        }
        Mat3(out)
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        self + o.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hvec() -> impl Strategy<Value = HVec> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| HVec::new(x, y, z))
    }

    /// Cofactor expansion along the first row, written out independently.
    fn det_cofactor(u: HVec, v: HVec, w: HVec) -> f64 {
        u.x * (v.y * w.z - w.y * v.z) - v.x * (u.y * w.z - w.y * u.z) + w.x * (u.y * v.z - v.y * u.z)
    }

    #[test]
    fn cross_examples() {
        let e1 = HVec::new(1.0, 0.0, 0.0);
        let e2 = HVec::new(0.0, 1.0, 0.0);
        assert_eq!(cross(e1, e2), HVec::new(0.0, 0.0, 1.0));
        let u = HVec::new(1.0, 2.0, 3.0);
        assert_eq!(cross(u, u), HVec::default());
        assert_eq!(cross(u, HVec::new(4.0, 5.0, 6.0)), HVec::new(-3.0, 6.0, -3.0));
    }

    #[test]
    fn triple_examples() {
        let (e1, e2, e3) = (
            HVec::new(1.0, 0.0, 0.0),
            HVec::new(0.0, 1.0, 0.0),
            HVec::new(0.0, 0.0, 1.0),
        );
        assert_eq!(triple(e1, e2, e3), 1.0);
        let u = HVec::new(0.3, -2.0, 1.5);
        assert_eq!(triple(u, u, e3), 0.0);
        assert_eq!(triple(e1, u, u), 0.0);
    }

    #[test]
    fn axes_meet_at_origin() {
        let x_axis = (HVec::affine(-1.0, 0.0), HVec::affine(2.0, 0.0));
        let y_axis = (HVec::affine(0.0, 3.0), HVec::affine(0.0, -0.5));
        let p = meet_of_joins(x_axis.0, x_axis.1, y_axis.0, y_axis.1).unwrap();
        assert!(p.proj_eq(HVec::new(0.0, 0.0, 1.0), 1e-12));
    }

    #[test]
    fn parallel_coincident_lines_are_degenerate() {
        let a = HVec::affine(0.0, 0.0);
        let b = HVec::affine(1.0, 1.0);
        assert!(meet_of_joins(a, b, a, b).is_err());
    }

    #[test]
    fn meet_matches_affine_intersection() {
        // lines through (0,1),(2,3) and (0,4),(4,0): y = x + 1, y = 4 - x
        let p = meet_of_joins(
            HVec::affine(0.0, 1.0),
            HVec::affine(2.0, 3.0),
            HVec::affine(0.0, 4.0),
            HVec::affine(4.0, 0.0),
        )
        .unwrap();
        let (x, y) = p.dehomogenize().unwrap();
        assert!((x - 1.5).abs() < 1e-14 && (y - 2.5).abs() < 1e-14);
    }

    #[test]
    fn mat_ops() {
        let two = Mat3::identity().scale(2.0);
        let n = two.normalize_to_sl3().unwrap();
        assert!((n.det() - 1.0).abs() < 1e-15);
        assert!(n.max_rel_dev(&Mat3::identity()) < 1e-15);

        let neg = Mat3::identity().scale(-8.0).normalize_to_sl3().unwrap();
        assert!((neg.get(1, 1) - 1.0).abs() < 1e-15);
        assert!((neg.det() - 1.0).abs() < 1e-15);

        let m = Mat3([[2.0, 1.0, 0.5], [-1.0, 3.0, 0.0], [0.25, 0.0, 1.0]]);
        let i = m * m.inverse().unwrap();
        assert!(i.max_rel_dev(&Mat3::identity()) < 1e-12);

        let sing = Mat3([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]]);
        assert!(matches!(sing.inverse(), Err(Error::SingularMatrix { .. })));
        assert!(sing.normalize_to_sl3().is_err());
    }

    #[test]
    fn proj_normalization_removes_sign() {
        let u = HVec::new(-2.0, 4.0, 0.0);
        let n = u.proj_normalized().unwrap();
        assert!(n.x > 0.0);
        assert!(u.proj_eq(HVec::new(1.0, -2.0, 0.0), 1e-15));
        assert!(HVec::default().proj_normalized().is_none());
    }

    #[test]
    fn eigenvalues_sorted() {
        let m = Mat3::diag(3.0, -1.0, 2.0);
        let ev = m.eigenvalues();
        assert!((ev[0].re + 1.0).abs() < 1e-12);
        assert!((ev[2].re - 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn triple_alternating(u in hvec(), v in hvec(), w in hvec()) {
            let t = triple(u, v, w);
            let scale = 1.0 + u.norm() * v.norm() * w.norm();
            prop_assert!((t - det_cofactor(u, v, w)).abs() <= 1e-12 * scale);
            prop_assert!((t + triple(v, u, w)).abs() <= 1e-12 * scale);
            prop_assert!((t + triple(u, w, v)).abs() <= 1e-12 * scale);
            prop_assert!((t + triple(w, v, u)).abs() <= 1e-12 * scale);
        }

        #[test]
        fn triple_multilinear(u in hvec(), u2 in hvec(), v in hvec(), w in hvec(), s in -3.0..3.0f64) {
            let lhs = triple(u + u2 * s, v, w);
            let rhs = triple(u, v, w) + s * triple(u2, v, w);
            let scale = 1.0 + (u.norm() + u2.norm() * s.abs()) * v.norm() * w.norm();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn meet_through_shared_point(a in hvec(), b in hvec(), c in hvec()) {
            let lhs = cross(cross(a, b), cross(b, c));
            let rhs = b * triple(a, b, c);
            let scale = 1.0 + a.norm() * b.norm().powi(2) * c.norm();
            prop_assert!((lhs - rhs).max_abs() <= 1e-10 * scale);
        }

        #[test]
        fn det_multiplicative(r in proptest::array::uniform9(-2.0..2.0f64), s in proptest::array::uniform9(-2.0..2.0f64)) {
            let a = Mat3([[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]]);
            let b = Mat3([[s[0], s[1], s[2]], [s[3], s[4], s[5]], [s[6], s[7], s[8]]]);
            let lhs = (a * b).det();
            let rhs = a.det() * b.det();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()) * 100.0);
        }

        #[test]
        fn sl3_normalization(r in proptest::array::uniform9(-2.0..2.0f64)) {
            let a = Mat3([[r[0] + 3.0, r[1], r[2]], [r[3], r[4] + 3.0, r[5]], [r[6], r[7], r[8] + 3.0]]);
            let n = a.normalize_to_sl3().unwrap();
            prop_assert!((n.det() - 1.0).abs() < 1e-12);
        }
    }
}
