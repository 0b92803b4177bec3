//! Real Laurent polynomials in one variable and 3×3 matrices over them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::projgeo::Mat3;

/// Coefficients smaller than this fraction of the absolute mass that
/// produced them are treated as cancelled to zero.
pub const CANCELLATION: f64 = 1e-10;

/// Finite sum of c_k μ^k, k ∈ ℤ.
///
/// Each coefficient carries the sum of absolute values of the products that
/// formed it, which bounds its rounding error.
#[derive(Debug, Clone, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<i32, (f64, f64)>,
}

impl PartialEq for LaurentPoly {
    fn eq(&self, o: &LaurentPoly) -> bool {
        self.terms.len() == o.terms.len() && self.terms().zip(o.terms()).all(|(a, b)| a == b)
    }
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly::default()
    }

    pub fn constant(c: f64) -> Self {
        LaurentPoly::monomial(c, 0)
    }

    pub fn monomial(c: f64, pow: i32) -> Self {
        let mut p = LaurentPoly::zero();
        p.add_term(pow, c);
        p
    }

    pub fn from_terms(it: impl IntoIterator<Item = (i32, f64)>) -> Self {
        let mut p = LaurentPoly::zero();
        for (k, c) in it {
            p.add_term(k, c);
        }
        p
    }

    pub fn add_term(&mut self, pow: i32, c: f64) {
        self.add_with_mass(pow, c, c.abs());
    }

    fn add_with_mass(&mut self, pow: i32, c: f64, mass: f64) {
        if c == 0.0 && mass == 0.0 {
            return;
        }
        let e = self.terms.entry(pow).or_insert((0.0, 0.0));
        e.0 += c;
        e.1 += mass;
        if e.0 == 0.0 {
            self.terms.remove(&pow);
        }
    }

    pub fn coeff(&self, pow: i32) -> f64 {
        self.terms.get(&pow).map_or(0.0, |t| t.0)
    }

    /// Absolute mass behind the coefficient of μ^pow.
    pub fn mass(&self, pow: i32) -> f64 {
        self.terms.get(&pow).map_or(0.0, |t| t.1)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.terms.iter().map(|(&k, &(c, _))| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_pow(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn max_pow(&self) -> Option<i32> {
        self.terms.keys().next_back().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0_f64, |m, c| m.max(c.0.abs()))
    }

    pub fn eval(&self, mu: f64) -> f64 {
        self.terms().map(|(k, c)| c * mu.powi(k)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        LaurentPoly {
            terms: self
                .terms
                .iter()
                .filter(|_| s != 0.0)
                .map(|(&k, &(c, m))| (k, (c * s, m * s.abs())))
                .collect(),
        }
    }

    /// Drop terms below `rel` times the largest coefficient, and terms that
    /// are rounding residue of cancellation.
    pub fn trimmed(&self, rel: f64) -> Self {
        let cut = rel * self.max_abs();
        LaurentPoly {
            terms: self
                .terms
                .iter()
                .filter(|(_, &(c, m))| c.abs() > cut && c.abs() > CANCELLATION * m)
                .map(|(&k, &t)| (k, t))
                .collect(),
        }
    }

    /// Quotient by `d`, which must divide exactly: any remainder above
    /// `rel` times the dividend's largest coefficient is an error.
    pub fn div_exact(&self, d: &LaurentPoly, rel: f64) -> Result<LaurentPoly> {
        let (Some(dl), Some(dt)) = (d.min_pow(), d.max_pow()) else {
            return Err(Error::NonDivisible {
                residual: f64::INFINITY,
            });
        };
        let (Some(pl), Some(pt)) = (self.min_pow(), self.max_pow()) else {
            return Ok(LaurentPoly::zero());
        };
        let lead = d.coeff(dt);
        let scale = self.max_abs();
        let mut rem = self.clone();
        let mut q = LaurentPoly::zero();
        let mut k = pt - dt;
        while k >= pl - dl {
            let (x, xm) = rem
                .terms
                .remove(&(k + dt))
                .map_or((0.0, 0.0), |(c, m)| (c / lead, m / lead.abs()));
            if x != 0.0 {
                q.add_with_mass(k, x, xm);
                for (&j, &(c, m)) in d.terms.iter().filter(|(&j, _)| j != dt) {
                    rem.add_with_mass(k + j, -x * c, xm * m);
                }
            }
            k -= 1;
        }
        let residual = rem
            .terms
            .values()
            .filter(|(c, m)| c.abs() > CANCELLATION * m)
            .fold(0.0_f64, |acc, (c, _)| acc.max(c.abs()))
            / scale;
        if residual > rel {
            return Err(Error::NonDivisible { residual });
        }
        Ok(q)
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, o: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (&k, &(c, m)) in &o.terms {
            out.add_with_mass(k, c, m);
        }
        out
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, o: &LaurentPoly) -> LaurentPoly {
        self + &(-o)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        self.scale(-1.0)
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, o: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (&i, &(a, am)) in &self.terms {
            for (&j, &(b, bm)) in &o.terms {
                out.add_with_mass(i + j, a * b, am * bm);
            }
        }
        out
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms().map(|(k, c)| format!("{c}·μ^{k}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// 3×3 matrix of Laurent polynomials.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentMat3(pub [[LaurentPoly; 3]; 3]);

impl LaurentMat3 {
    pub fn identity() -> Self {
        LaurentMat3::from_mat(&Mat3::identity())
    }

    /// μ-free matrix.
    pub fn from_mat(m: &Mat3) -> Self {
        let mut out = LaurentMat3::default();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = LaurentPoly::constant(m.get(i, j));
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.0[i][j]
    }

    pub fn eval(&self, mu: f64) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[i][j].eval(mu);
            }
        }
        Mat3(out)
    }

    fn minor(&self, r: [usize; 2], c: [usize; 2]) -> LaurentPoly {
        &(&self.0[r[0]][c[0]] * &self.0[r[1]][c[1]]) - &(&self.0[r[0]][c[1]] * &self.0[r[1]][c[0]])
    }

    pub fn det(&self) -> LaurentPoly {
        let m = &self.0;
        let t0 = &m[0][0] * &self.minor([1, 2], [1, 2]);
        let t1 = &m[0][1] * &self.minor([1, 2], [0, 2]);
        let t2 = &m[0][2] * &self.minor([1, 2], [0, 1]);
        &(&t0 - &t1) + &t2
    }

    pub fn trace(&self) -> LaurentPoly {
        &(&self.0[0][0] + &self.0[1][1]) + &self.0[2][2]
    }

    /// Sum of principal 2×2 minors.
    pub fn sigma2(&self) -> LaurentPoly {
        let a = self.minor([0, 1], [0, 1]);
        let b = self.minor([0, 2], [0, 2]);
        let c = self.minor([1, 2], [1, 2]);
        &(&a + &b) + &c
    }

    pub fn adjugate(&self) -> Self {
        let mut out = LaurentMat3::default();
        let others = |k: usize| -> [usize; 2] {
            match k {
                0 => [1, 2],
                1 => [0, 2],
                _ => [0, 1],
            }
        };
        for i in 0..3 {
            for j in 0..3 {
                let m = self.minor(others(j), others(i));
                out.0[i][j] = if (i + j) % 2 == 0 { m } else { -&m };
            }
        }
        out
    }

    pub fn div_exact(&self, d: &LaurentPoly, rel: f64) -> Result<Self> {
        let mut out = LaurentMat3::default();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = self.0[i][j].div_exact(d, rel)?;
            }
        }
        Ok(out)
    }
}

impl Mul for &LaurentMat3 {
    type Output = LaurentMat3;
    fn mul(self, o: &LaurentMat3) -> LaurentMat3 {
        let mut out = LaurentMat3::default();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = LaurentPoly::zero();
                for k in 0..3 {
                    acc = &acc + &(&self.0[i][k] * &o.0[k][j]);
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly() -> impl Strategy<Value = LaurentPoly> {
        proptest::collection::vec((-4i32..5, -3.0..3.0f64), 0..5).prop_map(LaurentPoly::from_terms)
    }

    fn mat() -> impl Strategy<Value = LaurentMat3> {
        proptest::array::uniform9(poly()).prop_map(|p| {
            let mut m = LaurentMat3::default();
            for (k, x) in p.into_iter().enumerate() {
                m.0[k / 3][k % 3] = x;
            }
            m
        })
    }

    #[test]
    fn arithmetic() {
        let p = LaurentPoly::from_terms([(-1, 2.0), (1, 3.0)]);
        let q = LaurentPoly::from_terms([(1, 1.0), (0, -1.0)]);
        let pq = &p * &q;
        assert_eq!(pq, LaurentPoly::from_terms([(0, 2.0), (-1, -2.0), (2, 3.0), (1, -3.0)]));
        assert_eq!((&p - &p), LaurentPoly::zero());
        assert!((p.eval(2.0) - 7.0).abs() < 1e-15);
    }

    #[test]
    fn exact_division() {
        let d = LaurentPoly::from_terms([(-1, 1.0), (1, 2.0)]);
        let q = LaurentPoly::from_terms([(-2, 0.5), (0, -1.0), (3, 4.0)]);
        let back = (&q * &d).div_exact(&d, 1e-13).unwrap();
        assert!(back
            .terms()
            .zip(q.terms())
            .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() < 1e-14));
        let bad = &(&q * &d) + &LaurentPoly::monomial(0.5, 0);
        assert!(matches!(bad.div_exact(&d, 1e-13), Err(Error::NonDivisible { .. })));
    }

    #[test]
    fn cancellation_residue_is_trimmed() {
        let s = &LaurentPoly::from_terms([(1, 0.1), (1, 0.2), (0, 1.0)]) + &LaurentPoly::monomial(-0.3, 1);
        assert!(s.coeff(1) != 0.0);
        assert_eq!(s.trimmed(0.0), LaurentPoly::constant(1.0));
    }

    #[test]
    fn trim_relative() {
        let p = LaurentPoly::from_terms([(0, 1.0), (2, 1e-15), (3, -0.5)]);
        assert_eq!(p.trimmed(1e-13), LaurentPoly::from_terms([(0, 1.0), (3, -0.5)]));
    }

    proptest! {
        #[test]
        fn eval_is_homomorphism(a in mat(), b in mat(), mu in prop::sample::select(vec![0.7, 1.3, -2.0])) {
            let prod = (&a * &b).eval(mu);
            let num = a.eval(mu) * b.eval(mu);
            let scale = 1.0 + prod.max_abs();
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((prod.get(i, j) - num.get(i, j)).abs() < 1e-10 * scale * 100.0);
                }
            }
            let d = a.det().eval(mu);
            prop_assert!((d - a.eval(mu).det()).abs() < 1e-9 * (1.0 + d.abs()) * 100.0);
            let adj = a.adjugate().eval(mu);
            let want = a.eval(mu).adjugate();
            prop_assert!(adj.max_rel_dev(&want) < 1e-9);
            prop_assert!((a.trace().eval(mu) - a.eval(mu).trace()).abs() < 1e-9 * 100.0);
            prop_assert!((a.sigma2().eval(mu) - a.eval(mu).sigma2()).abs() < 1e-9 * (1.0 + a.eval(mu).max_abs().powi(2)) * 100.0);
        }
    }
}
