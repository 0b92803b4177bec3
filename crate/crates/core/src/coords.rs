//! Moduli coordinates {a_i, b_i, c_N} of a canonical lift, the boundary
//! invariants they determine, and the gauge matrices relating the K_i.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::LiftedSpiral;
use crate::projgeo::{HVec, Mat3};
use crate::tol::Tolerances;

const GENERIC_EPS: f64 = 1e-12;

/// a₀…a_{N−1}, b₀…b_{N−1} and c_N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoords", into = "RawCoords")]
pub struct Coords {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c_n: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCoords {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c_n: f64,
}

impl TryFrom<RawCoords> for Coords {
    type Error = Error;
    fn try_from(r: RawCoords) -> Result<Coords> {
        Coords::new(r.n, r.a, r.b, r.c_n)
    }
}

impl From<Coords> for RawCoords {
    fn from(c: Coords) -> RawCoords {
        RawCoords {
            n: c.n,
            a: c.a,
            b: c.b,
            c_n: c.c_n,
        }
    }
}

fn nonzero(x: f64, scale: f64, what: &str) -> Result<f64> {
    if x.is_finite() && x.abs() > GENERIC_EPS * scale.max(1.0) {
        Ok(x)
    } else {
        Err(Error::GenericityViolation(format!("{what} = {x:e}")))
    }
}

impl Coords {
    pub fn new(n: usize, a: Vec<f64>, b: Vec<f64>, c_n: f64) -> Result<Coords> {
        if n < 5 {
            return Err(Error::InvalidN { n });
        }
        if a.len() != n || b.len() != n {
            return Err(Error::InvalidSeed(format!(
                "expected {n} a- and b-values, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        let c = Coords { n, a, b, c_n };
        c.check_generic()?;
        Ok(c)
    }

    fn check_generic(&self) -> Result<()> {
        if !self.a.iter().chain(&self.b).chain([&self.c_n]).all(|x| x.is_finite()) {
            return Err(Error::GenericityViolation("non-finite coordinate".into()));
        }
        let n = self.n;
        nonzero(self.a[0], 0.0, "a_0")?;
        nonzero(self.a[n - 1], 0.0, "a_{N-1}")?;
        nonzero(self.a[n - 2], 0.0, "a_{N-2}")?;
        nonzero(self.c_n, 0.0, "c_N")?;
        for i in 1..=3 {
            nonzero(self.big_a(i), self.big_a_scale(i), &format!("A_{i}"))?;
        }
        let a0 = self.a[n - 1] * self.c_n / (self.big_a(1) * self.a[0]);
        nonzero(a0, 0.0, "A_0")?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    /// c_i for i = 0…N.
    pub fn c(&self, i: usize) -> f64 {
        if i == self.n {
            self.c_n
        } else {
            1.0
        }
    }

    /// A_i = c_i + a_ib_{i−1} for i = 1…N−1.
    pub fn big_a(&self, i: usize) -> f64 {
        assert!((1..self.n).contains(&i));
        1.0 + self.a[i] * self.b[i - 1]
    }

    /// Size of the terms summed in A_i.
    fn big_a_scale(&self, i: usize) -> f64 {
        1.0 + (self.a[i] * self.b[i - 1]).abs()
    }

    /// Flat vector a₀…a_{N−1}, b₀…b_{N−1}, c_N.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.a.clone();
        v.extend(&self.b);
        v.push(self.c_n);
        v
    }

    /// Largest [`crate::tol::rel_dev`] between two charts of the same N.
    pub fn max_rel_dev(&self, o: &Coords) -> f64 {
        if self.n != o.n {
            return f64::INFINITY;
        }
        crate::tol::max_rel_dev(&self.to_flat(), &o.to_flat())
    }
}

/// Boundary invariants determined by the chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedInv {
    pub a_n: f64,
    pub b_n: f64,
    pub c_n1: f64,
    pub a_m1: f64,
    pub b_m1: f64,
    pub c_m1: f64,
    /// B_N = c_N + b_Na_{N−2}.
    #[serde(skip)]
    pub big_b_n: f64,
    /// A₀…A_N.
    #[serde(rename = "A")]
    pub big_a: Vec<f64>,
}

impl DerivedInv {
    pub fn big_a(&self, i: usize) -> f64 {
        self.big_a[i]
    }
}

pub fn derive(c: &Coords) -> Result<DerivedInv> {
    let n = c.n;
    let (a, b, c_n) = (&c.a, &c.b, c.c_n);
    let a1 = nonzero(c.big_a(1), c.big_a_scale(1), "A_1")?;
    let a2 = nonzero(c.big_a(2), c.big_a_scale(2), "A_2")?;
    let a0_coef = nonzero(a[0], 0.0, "a_0")?;
    let a_nm2 = nonzero(a[n - 2], 0.0, "a_{N-2}")?;
    nonzero(c_n, 0.0, "c_N")?;

    let a_n = a[1];
    let b_n = (c_n / a_nm2) * (c_n / (a1 * a2) - 1.0);
    let big_b_n = nonzero(c_n + b_n * a_nm2, c_n.abs() + (b_n * a_nm2).abs(), "B_N")?;
    let c_n1 = c_n / big_b_n;
    let c_m1 = a[n - 1] / a0_coef;
    let big_a0 = nonzero(a[n - 1] * c_n / (a1 * a0_coef), 0.0, "A_0")?;
    let b_m1 = (big_a0 - 1.0) / a0_coef;
    let a_m1 = a[n - 1].powi(2) * a_nm2 * a1 * a2 / (a0_coef.powi(2) * c_n * big_a0);

    let mut big_a = vec![big_a0];
    big_a.extend((1..n).map(|i| c.big_a(i)));
    big_a.push(c_n + a_n * b[n - 1]);
    Ok(DerivedInv {
        a_n,
        b_n,
        c_n1,
        a_m1,
        b_m1,
        c_m1,
        big_b_n,
        big_a,
    })
}

/// (c_i, b_i, a_i) and d_i = det ρ_i over a contiguous index range.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantTable {
    n: usize,
    lo: i64,
    cba: Vec<(f64, f64, f64)>,
    d: Vec<f64>,
}

impl InvariantTable {
    /// Closed forms on −1…N+1.
    pub fn from_coords(c: &Coords, dv: &DerivedInv) -> InvariantTable {
        let n = c.n;
        let ni = n as i64;
        let mut cba = vec![(dv.c_m1, dv.b_m1, dv.a_m1)];
        cba.extend((0..n).map(|i| (1.0, c.b[i], c.a[i])));
        cba.push((c.c_n, dv.b_n, dv.a_n));
        let a0 = dv.big_a[0];
        let a2 = dv.big_a[2];
        cba.push((dv.c_m1 * a2 / a0, dv.b_m1 * a2 / a0, c.a[2]));
        let mut d = vec![1.0 / dv.c_m1];
        d.extend(std::iter::repeat_n(1.0, n + 1));
        d.push(c.c_n);
        debug_assert_eq!(cba.len() as i64, ni + 3);
        InvariantTable { n, lo: -1, cba, d }
    }

    /// Read off a canonical lift on [lo, hi] (needs V up to hi+3).
    pub fn from_lift(ls: &LiftedSpiral, lo: i64, hi: i64) -> Result<InvariantTable> {
        let cba = (lo..=hi).map(|i| ls.recurrence_coeffs(i)).collect::<Result<Vec<_>>>()?;
        let d = (lo..=hi).map(|i| ls.frame_det(i)).collect::<Result<Vec<_>>>()?;
        Ok(InvariantTable { n: ls.n(), lo, cba, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.cba.len() as i64 - 1
    }

    fn idx(&self, i: i64) -> Result<usize> {
        if i < self.lo || i > self.hi() {
            Err(Error::IndexOutOfRange {
                index: i,
                lo: self.lo,
                hi: self.hi(),
            })
        } else {
            Ok((i - self.lo) as usize)
        }
    }

    pub fn cba(&self, i: i64) -> Result<(f64, f64, f64)> {
        Ok(self.cba[self.idx(i)?])
    }

    pub fn c(&self, i: i64) -> Result<f64> {
        Ok(self.cba(i)?.0)
    }

    pub fn b(&self, i: i64) -> Result<f64> {
        Ok(self.cba(i)?.1)
    }

    pub fn a(&self, i: i64) -> Result<f64> {
        Ok(self.cba(i)?.2)
    }

    pub fn d(&self, i: i64) -> Result<f64> {
        Ok(self.d[self.idx(i)?])
    }

    /// K_i = (e₂, e₃, (c_i, b_i, a_i)).
    pub fn k(&self, i: i64) -> Result<Mat3> {
        let (c, b, a) = self.cba(i)?;
        Ok(Mat3::companion(c, b, a))
    }
}

/// 𝒜_i, i ≥ 1: with j = i−1, columns d_{j−1}(c_{j−1},0,a_{j−1}),
/// d_jK_{j−1}(c_j,0,a_j) and d_{j+1}K_{j−1}K_j(c_{j+1},0,a_{j+1}).
pub fn gauge_a(t: &InvariantTable, i: i64) -> Result<Mat3> {
    if i < 1 {
        return Err(Error::IndexOutOfRange {
            index: i,
            lo: 1,
            hi: t.hi() - 1,
        });
    }
    let j = i - 1;
    let stub = |k: i64| -> Result<HVec> {
        let (c, _, a) = t.cba(k)?;
        Ok(HVec::new(c, 0.0, a) * t.d(k)?)
    };
    let k_prev = t.k(j - 1)?;
    let col0 = stub(j - 1)?;
    let col1 = k_prev.apply(stub(j)?);
    let col2 = (k_prev * t.k(j)?).apply(stub(j + 1)?);
    Ok(Mat3::from_cols(col0, col1, col2))
}

/// ℬ₋ᵢ for i in 3…N.
pub fn gauge_b(t: &InvariantTable, i: i64) -> Result<Mat3> {
    let n = t.n() as i64;
    if !(3..=n).contains(&i) {
        return Err(Error::IndexOutOfRange { index: i, lo: 3, hi: n });
    }
    let base = n - i - 1;
    let stub = |k: i64| -> Result<HVec> {
        let (c, b, _) = t.cba(k)?;
        Ok(HVec::new(c, b, 0.0) * (t.c(k + 3)? * t.d(k)?))
    };
    let k0 = t.k(base)?;
    let col0 = stub(base)?;
    let col1 = k0.apply(stub(base + 1)?);
    let col2 = (k0 * t.k(base + 1)?).apply(stub(base + 2)?);
    Ok(Mat3::from_cols(col0, col1, col2))
}

/// 𝒞₋₂ = (c_N𝒜₁K_N⁻¹K_{N−1}⁻¹K_{N−2}⁻¹K_{N−3}⁻¹(c_{N−3},b_{N−3},0), e₁, e₂),
/// whose inverse is K₋₂.
pub fn gauge_c_m2(t: &InvariantTable) -> Result<Mat3> {
    let n = t.n() as i64;
    let mut m = gauge_a(t, 1)?.scale(t.c(n)?);
    for k in (n - 3..=n).rev() {
        m = m * t.k(k)?.inverse()?;
    }
    let (c, b, _) = t.cba(n - 3)?;
    let col0 = m.apply(HVec::new(c, b, 0.0));
    Ok(Mat3::from_cols(
        col0,
        HVec::new(1.0, 0.0, 0.0),
        HVec::new(0.0, 1.0, 0.0),
    ))
}

/// Chart of a canonical lift.
pub fn extract_coords(ls: &LiftedSpiral) -> Result<Coords> {
    extract_coords_with(ls, &Tolerances::default())
}

pub fn extract_coords_with(ls: &LiftedSpiral, tol: &Tolerances) -> Result<Coords> {
    let n = ls.n();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n as i64 {
        let (c, bi, ai) = ls.recurrence_coeffs(i)?;
        if !((c - 1.0).abs() <= tol.lift) {
            return Err(Error::NotCanonical);
        }
        a.push(ai);
        b.push(bi);
    }
    let (c_n, _, _) = ls.recurrence_coeffs(n as i64)?;
    Coords::new(n, a, b, c_n)
}

/// ρ₀ = I, ρ_{i+1} = ρ_iK_i for i < count.
pub fn reconstruct_frames(t: &InvariantTable, count: usize) -> Result<Vec<Mat3>> {
    let mut out = vec![Mat3::identity()];
    for i in 0..count as i64 {
        let next = *out.last().expect("nonempty") * t.k(i)?;
        out.push(next);
    }
    Ok(out)
}

/// ρ₀⁻¹Mρ₀ = K₀K₁…K_N𝒜₁⁻¹K₋₁.
pub fn monodromy_representative(c: &Coords) -> Result<Mat3> {
    let dv = derive(c)?;
    let t = InvariantTable::from_coords(c, &dv);
    let mut p = Mat3::identity();
    for i in 0..=c.n as i64 {
        p = p * t.k(i)?;
    }
    Ok(p * gauge_a(&t, 1)?.inverse()? * t.k(-1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::canonical_lift;
    use crate::spiral::random_seed;
    use crate::tol::rel_dev;

    fn instance(n: usize, s: u64) -> (LiftedSpiral, Coords, DerivedInv) {
        let ls = canonical_lift(&random_seed(n, s, 0.25).unwrap()).unwrap();
        let c = extract_coords(&ls).unwrap();
        let d = derive(&c).unwrap();
        (ls, c, d)
    }

    #[test]
    fn base_c_values_are_one_and_recurrence_holds() {
        let (ls, _, _) = instance(6, 1);
        for i in ls.lo()..=ls.hi() - 3 {
            let (c, b, a) = ls.recurrence_coeffs(i).unwrap();
            if (0..6).contains(&i) {
                assert!((c - 1.0).abs() < 1e-9);
            }
            let pred = ls.get(i + 2).unwrap() * a + ls.get(i + 1).unwrap() * b + ls.get(i).unwrap() * c;
            assert!((pred - ls.get(i + 3).unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn derived_agree_with_geometry() {
        for (n, s) in [(5, 2), (6, 3), (8, 4), (9, 5)] {
            let (ls, c, d) = instance(n, s);
            let g = InvariantTable::from_lift(&ls, -1, n as i64 + 1).unwrap();
            let f = InvariantTable::from_coords(&c, &d);
            for i in -1..=n as i64 + 1 {
                let (x, y) = (g.cba(i).unwrap(), f.cba(i).unwrap());
                assert!(rel_dev(x.0, y.0) < 1e-8, "c at {i}");
                assert!(rel_dev(x.1, y.1) < 1e-7, "b at {i}");
                assert!(rel_dev(x.2, y.2) < 1e-7, "a at {i}");
                assert!(rel_dev(g.d(i).unwrap(), f.d(i).unwrap()) < 1e-8, "d at {i}");
            }
            assert!(rel_dev(d.a_n, c.a()[1]) < 1e-12);
            assert!(rel_dev(d.big_a[0] * d.big_a[1] / c.c_n(), d.c_m1) < 1e-9);
            assert!(rel_dev(d.big_b_n, c.c_n().powi(2) / (d.big_a[1] * d.big_a[2])) < 1e-9);
            let lhs = d.c_m1 / (1.0 + c.a()[0] * d.b_m1);
            let rhs = c.c_n() / (d.big_b_n * (1.0 + c.a()[2] * c.b()[1]));
            assert!(rel_dev(lhs, rhs) < 1e-9);
        }
    }

    #[test]
    fn gauge_a_relations() {
        let n = 8i64;
        let (ls, c, d) = instance(8, 6);
        let ls = ls.widen(-5, n + 8).unwrap();
        let g = InvariantTable::from_lift(&ls, -5, n + 5).unwrap();
        let f = InvariantTable::from_coords(&c, &d);
        let a1 = gauge_a(&f, 1).unwrap();
        assert!(rel_dev(a1.det() / d.c_m1, c.c_n()) < 1e-9);
        assert!(rel_dev(a1.det(), d.big_a[0] * d.big_a[1]) < 1e-9);
        for i in 1..=4 {
            let lhs = g.k(n + i).unwrap();
            let rhs = gauge_a(&f, i).unwrap().inverse().unwrap() * f.k(i - 2).unwrap() * gauge_a(&f, i + 1).unwrap();
            assert!(lhs.max_rel_dev(&rhs) < 1e-7, "i = {i}");
        }
    }

    #[test]
    fn gauge_b_relations() {
        let n = 8i64;
        let (ls, c, d) = instance(8, 7);
        let ls = ls.widen(-8, n + 5).unwrap();
        let g = InvariantTable::from_lift(&ls, -8, n + 2).unwrap();
        let f = InvariantTable::from_coords(&c, &d);
        for i in 4..=n {
            let b = gauge_b(&f, i).unwrap();
            assert!(b.det().abs() > 1e-10);
            let rhs = b.inverse().unwrap() * f.k(n - i - 1).unwrap() * gauge_b(&f, i - 1).unwrap();
            assert!(g.k(-i).unwrap().max_rel_dev(&rhs) < 1e-7, "i = {i}");
        }
        assert!(gauge_b(&f, 2).is_err());
        assert!(gauge_b(&f, n + 1).is_err());
    }

    #[test]
    fn gauge_b_first_column_is_linear_in_stub() {
        let (_, c, d) = instance(8, 9);
        let f = InvariantTable::from_coords(&c, &d);
        let mut zeroed = f.clone();
        let k = (8 - 4 - 1 - zeroed.lo) as usize;
        zeroed.cba[k].1 = 0.0;
        assert_eq!(gauge_b(&zeroed, 4).unwrap().get(1, 0), 0.0);
        assert_ne!(gauge_b(&f, 4).unwrap().get(1, 0), 0.0);
    }

    #[test]
    fn k_minus_two_from_elimination() {
        let (ls, c, d) = instance(9, 3);
        let g = InvariantTable::from_lift(&ls, -3, 0).unwrap();
        let f = InvariantTable::from_coords(&c, &d);
        let k = gauge_c_m2(&f).unwrap().inverse().unwrap();
        assert!(k.max_rel_dev(&g.k(-2).unwrap()) < 1e-7);
    }

    #[test]
    fn frames_and_monodromy() {
        for (n, s) in [(5, 11), (6, 12), (8, 13)] {
            let (ls, c, d) = instance(n, s);
            let f = InvariantTable::from_coords(&c, &d);
            let frames = reconstruct_frames(&f, n + 1).unwrap();
            for (i, r) in frames.iter().enumerate() {
                let want = if i == n + 1 { c.c_n() } else { 1.0 };
                assert!(rel_dev(r.det(), want) < 1e-10);
            }
            // V_i = ρ_i e₁ re-extracts to the same chart
            let vs: Vec<HVec> = frames
                .iter()
                .map(|r| r.col(0))
                .chain([frames[n + 1].col(1), frames[n + 1].col(2)])
                .collect();
            let w = |i: usize| vs[i];
            for i in 0..n {
                let r = Mat3::from_cols(w(i), w(i + 1), w(i + 2))
                    .inverse()
                    .unwrap()
                    .apply(w(i + 3));
                assert!(rel_dev(r.z, c.a()[i]) < 1e-10 && rel_dev(r.y, c.b()[i]) < 1e-10);
            }
            let rho0 = ls.frame(0).unwrap();
            let want = rho0.inverse().unwrap() * *ls.monodromy() * rho0;
            let got = monodromy_representative(&c).unwrap();
            assert!(got.max_rel_dev(&want) < 1e-8);
            assert!((got.det() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn projective_invariance() {
        let seed = random_seed(6, 21, 0.2).unwrap();
        let g = Mat3([[1.2, 0.3, -0.1], [0.05, 0.9, 0.2], [0.1, -0.2, 1.1]])
            .normalize_to_sl3()
            .unwrap();
        let gi = g.inverse().unwrap();
        let moved = crate::spiral::Seed::new(
            seed.points().iter().map(|p| g.apply(*p)).collect(),
            g.apply(seed.side_point()),
            g * *seed.monodromy() * gi,
        )
        .unwrap();
        let c0 = extract_coords(&canonical_lift(&seed).unwrap()).unwrap();
        let c1 = extract_coords(&canonical_lift(&moved).unwrap()).unwrap();
        assert!(c0.max_rel_dev(&c1) < 1e-9);
    }

    #[test]
    fn genericity_violation() {
        let mut a = vec![1.0; 5];
        a[0] = 0.0;
        assert!(matches!(
            Coords::new(5, a, vec![0.5; 5], 1.0),
            Err(Error::GenericityViolation(_))
        ));
        assert!(Coords::new(5, vec![1.0; 4], vec![0.5; 5], 1.0).is_err());
    }
}
