//! The shift map on spirals: geometric (advance the seed one vertex) and in
//! closed form on the chart, plus the μ-scaling action it commutes with.

use serde::{Deserialize, Serialize};

use crate::coords::{derive, extract_coords_with, Coords, DerivedInv};
use crate::error::{Error, Result};
use crate::lift::canonical_lift_with;
use crate::projgeo::Mat3;
use crate::spiral::{projective_window, Seed};
use crate::tol::{rel_dev, Tolerances};

/// Which of the two liftable residues N mod 3 a chart belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// N = 3s
    Zero,
    /// N = 3s+2
    Two,
}

impl Branch {
    pub fn of(n: usize) -> Result<Branch> {
        match n % 3 {
            0 => Ok(Branch::Zero),
            2 => Ok(Branch::Two),
            _ => Err(Error::InvalidN { n }),
        }
    }
}

/// Scale factors relating the canonical lift of a spiral to that of its shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
    pub branch: Branch,
}

impl AlphaBeta {
    /// α^r β^s.
    pub fn pow(&self, (r, s): (i32, i32)) -> f64 {
        self.alpha.powi(r) * self.beta.powi(s)
    }

    /// Residuals of the two defining equations, relative.
    pub fn residuals(&self, c: &Coords, dv: &DerivedInv) -> (f64, f64) {
        let k = dv.big_a[3] * dv.big_a[0] / dv.big_a[1];
        let (first, second) = match self.branch {
            Branch::Two => (self.pow((2, 1)), self.pow((-1, -2))),
            Branch::Zero => (self.pow((1, -1)), self.pow((-2, -1))),
        };
        ((first - c.c_n()).abs() / c.c_n().abs(), (second - k).abs() / k.abs())
    }
}

/// Real-branch solution of α²β = c_N, α⁻¹β⁻² = A₃A₀/A₁ (N = 3s+2) or
/// αβ⁻¹ = c_N, α⁻²β⁻¹ = A₃A₀/A₁ (N = 3s).
pub fn alpha_beta(c: &Coords, dv: &DerivedInv) -> Result<AlphaBeta> {
    let branch = Branch::of(c.n())?;
    let c_n = c.c_n();
    let k = dv.big_a[3] * dv.big_a[0] / dv.big_a[1];
    if !k.is_finite() || k == 0.0 {
        return Err(Error::GenericityViolation(format!("A_3 A_0 / A_1 = {k:e}")));
    }
    let u = (c_n / k).cbrt();
    let (alpha, beta) = match branch {
        Branch::Two => (c_n / u, u * u / c_n),
        Branch::Zero => (u, u / c_n),
    };
    if !(alpha.is_finite() && beta.is_finite()) || alpha == 0.0 || beta == 0.0 {
        return Err(Error::GenericityViolation("α or β degenerate".into()));
    }
    Ok(AlphaBeta { alpha, beta, branch })
}

/// Exponents (r, s) with V̂_j = α^r β^s V_j, for j in −2…N+4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpSchedule {
    n: usize,
    branch: Branch,
}

impl ExpSchedule {
    pub fn new(n: usize) -> Result<ExpSchedule> {
        Ok(ExpSchedule {
            n,
            branch: Branch::of(n)?,
        })
    }

    pub fn lo(&self) -> i64 {
        -2
    }

    pub fn hi(&self) -> i64 {
        self.n as i64 + 4
    }

    /// Exponent pair of V̂_j / V_j.
    pub fn exponent(&self, j: i64) -> Result<(i32, i32)> {
        let n = self.n as i64;
        if j < self.lo() || j > self.hi() {
            return Err(Error::IndexOutOfRange {
                index: j,
                lo: self.lo(),
                hi: self.hi(),
            });
        }
        let e = match (self.branch, j - n) {
            (_, _) if j == 0 => (-1, -1),
            (Branch::Two, 3) => (-1, -1),
            (Branch::Two, 4) => (1, 0),
            (Branch::Zero, 3) => (0, 1),
            (Branch::Zero, 4) => (-1, -1),
            (Branch::Two, _) => match j.rem_euclid(3) {
                0 => (0, 1),
                1 => (-1, -1),
                _ => (1, 0),
            },
            (Branch::Zero, _) => match j.rem_euclid(3) {
                0 => (1, 0),
                1 => (0, 1),
                _ => (-1, -1),
            },
        };
        Ok(e)
    }

    /// (r_i, s_i) with 𝒮(V_i) = α^{r_i}β^{s_i}V_{i+1}.
    pub fn step(&self, i: i64) -> Result<(i32, i32)> {
        self.exponent(i + 1)
    }
}

/// Factors multiplying a_k and b_k (k = 0…N−1, by k mod 3) and the boundary
/// factors for a_N, b_N, c_{N+1}.
struct ShiftFactors {
    a: [f64; 3],
    b: [f64; 3],
    a_n: f64,
    b_n: f64,
    c_n1: f64,
}

fn shift_factors(ab: &AlphaBeta) -> ShiftFactors {
    let p = |r, s| ab.pow((r, s));
    match ab.branch {
        Branch::Two => ShiftFactors {
            a: [p(-1, 1), p(-1, -2), p(2, 1)],
            b: [p(1, 2), p(-2, -1), p(1, -1)],
            a_n: 1.0,
            b_n: p(-1, -2),
            c_n1: p(1, -1),
        },
        Branch::Zero => ShiftFactors {
            a: [p(2, 1), p(-1, 1), p(-1, -2)],
            b: [p(1, -1), p(1, 2), p(-2, -1)],
            a_n: p(1, 2),
            b_n: 1.0,
            c_n1: p(-1, -2),
        },
    }
}

/// Closed-form shift, re-indexed to the standard chart:
/// a'_k = â_{k+1}, b'_k = b̂_{k+1}, c'_N = ĉ_{N+1}.
pub fn shift_coords(c: &Coords) -> Result<Coords> {
    let dv = derive(c)?;
    let ab = alpha_beta(c, &dv)?;
    let f = shift_factors(&ab);
    let n = c.n();
    let hat = |k: usize, base: &[f64], fac: &[f64; 3], last: f64, fac_last: f64| {
        if k == n {
            fac_last * last
        } else {
            fac[k % 3] * base[k]
        }
    };
    let a = (1..=n).map(|k| hat(k, c.a(), &f.a, dv.a_n, f.a_n)).collect();
    let b = (1..=n).map(|k| hat(k, c.b(), &f.b, dv.b_n, f.b_n)).collect();
    Coords::new(n, a, b, f.c_n1 * dv.c_n1)
}

/// k-fold shift.
pub fn shift_coords_n(c: &Coords, steps: usize) -> Result<Coords> {
    let mut out = c.clone();
    for _ in 0..steps {
        out = shift_coords(&out)?;
    }
    Ok(out)
}

/// Seed {p₂…p_{N+1}; p_{N+2}} with the same monodromy.
pub fn geometric_shift(seed: &Seed) -> Result<Seed> {
    let n = seed.n() as i64;
    let w = projective_window(seed, n + 2)?;
    let points = (2..=n + 1).map(|i| w.get(i)).collect::<Result<Vec<_>>>()?;
    Seed::new(points, w.get(n + 2)?, *seed.monodromy())
}

/// a_k → μa_k, b_k → μ⁻¹b_k, c_N fixed.
pub fn scaling_action(c: &Coords, mu: f64) -> Result<Coords> {
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::GenericityViolation(format!("scaling by μ = {mu}")));
    }
    Coords::new(
        c.n(),
        c.a().iter().map(|a| a * mu).collect(),
        c.b().iter().map(|b| b / mu).collect(),
        c.c_n(),
    )
}

/// Outcome of a numerical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub max_dev: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, max_dev: f64, tol: f64) -> Self {
        CheckReport {
            check: check.into(),
            max_dev,
            pass: max_dev <= tol,
        }
    }
}

/// max deviation of 𝒮∘scale_μ from scale_μ∘𝒮.
pub fn verify_equivariance(c: &Coords, mu: f64, tol: &Tolerances) -> Result<CheckReport> {
    let lhs = shift_coords(&scaling_action(c, mu)?)?;
    let rhs = scaling_action(&shift_coords(c)?, mu)?;
    Ok(CheckReport::new(
        format!("equivariance mu={mu}"),
        lhs.max_rel_dev(&rhs),
        tol.shift,
    ))
}

/// Chart of the geometric shift vs closed-form shift of the chart.
pub fn verify_shift_commutation(seed: &Seed, tol: &Tolerances) -> Result<CheckReport> {
    let c = extract_coords_with(&canonical_lift_with(seed, tol)?, tol)?;
    let geo = extract_coords_with(&canonical_lift_with(&geometric_shift(seed)?, tol)?, tol)?;
    Ok(CheckReport::new(
        "shift commutation",
        geo.max_rel_dev(&shift_coords(&c)?),
        tol.shift,
    ))
}

/// Largest mismatch between measured lift ratios V̂_j / V_j and the schedule.
pub fn verify_exponent_schedule(seed: &Seed, tol: &Tolerances) -> Result<CheckReport> {
    let ls = canonical_lift_with(seed, tol)?;
    let shifted = canonical_lift_with(&geometric_shift(seed)?, tol)?;
    let c = extract_coords_with(&ls, tol)?;
    let ab = alpha_beta(&c, &derive(&c)?)?;
    let sched = ExpSchedule::new(seed.n())?;
    let mut worst = 0.0_f64;
    for j in sched.lo()..=sched.hi() {
        let want = ab.pow(sched.exponent(j)?);
        let v = ls.get(j)?;
        let v_hat = shifted.get(j - 1)?;
        let pred = v * want;
        worst = worst.max(crate::tol::max_rel_dev(&v_hat.to_array(), &pred.to_array()));
    }
    Ok(CheckReport::new("exponent schedule", worst, tol.shift))
}

/// A₁/(A₃A₀): the factor with V₀ = factor·M⁻¹T̄(V_{N+1}).
pub fn tbar_failure_factor(dv: &DerivedInv) -> f64 {
    dv.big_a[1] / (dv.big_a[3] * dv.big_a[0])
}

/// The same factor as a monomial in α, β: αβ² (N = 3s+2), α²β (N = 3s).
pub fn tbar_failure_monomial(ab: &AlphaBeta) -> f64 {
    match ab.branch {
        Branch::Two => ab.pow((1, 2)),
        Branch::Zero => ab.pow((2, 1)),
    }
}

/// R_i = diag of the exponents at i+1, i+2, i+3.
pub fn r_mat(i: i64, ab: &AlphaBeta, sched: &ExpSchedule) -> Result<Mat3> {
    Ok(Mat3::diag(
        ab.pow(sched.exponent(i + 1)?),
        ab.pow(sched.exponent(i + 2)?),
        ab.pow(sched.exponent(i + 3)?),
    ))
}

/// Relative agreement helper for scalar identities.
pub fn scalar_report(check: &str, x: f64, y: f64, tol: f64) -> CheckReport {
    CheckReport::new(check, rel_dev(x, y), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::extract_coords;
    use crate::lift::canonical_lift;
    use crate::spiral::random_seed;
    use proptest::prelude::*;

    fn chart(n: usize, s: u64) -> (Seed, Coords) {
        let seed = random_seed(n, s, 0.25).unwrap();
        let c = extract_coords(&canonical_lift(&seed).unwrap()).unwrap();
        (seed, c)
    }

    #[test]
    fn alpha_beta_trivial() {
        // c_N = 1 and A₃A₀/A₁ = 1 force α = β = 1.
        for branch in [Branch::Two, Branch::Zero] {
            let c_n: f64 = 1.0;
            let k: f64 = 1.0;
            let u = (c_n / k).cbrt();
            let ab = match branch {
                Branch::Two => AlphaBeta {
                    alpha: c_n / u,
                    beta: u * u / c_n,
                    branch,
                },
                Branch::Zero => AlphaBeta {
                    alpha: u,
                    beta: u / c_n,
                    branch,
                },
            };
            assert_eq!((ab.alpha, ab.beta), (1.0, 1.0));
        }
    }

    #[test]
    fn alpha_beta_solves_defining_equations() {
        for (n, s) in [(5, 1), (6, 2), (8, 3), (9, 4)] {
            let (_, c) = chart(n, s);
            let dv = derive(&c).unwrap();
            let ab = alpha_beta(&c, &dv).unwrap();
            let (r1, r2) = ab.residuals(&c, &dv);
            assert!(r1 < 1e-12 && r2 < 1e-12, "N = {n}: {r1:e} {r2:e}");
        }
    }

    #[test]
    fn factors_identities() {
        for (n, s) in [(5, 31), (6, 32), (8, 33), (9, 34)] {
            let (_, c) = chart(n, s);
            let dv = derive(&c).unwrap();
            let ab = alpha_beta(&c, &dv).unwrap();
            let a = c.a();
            let alt = dv.big_a[1].powi(2) * a[0] / (dv.big_a[3] * a[n - 1] * c.c_n());
            assert!(rel_dev(tbar_failure_monomial(&ab), tbar_failure_factor(&dv)) < 1e-12);
            assert!(rel_dev(tbar_failure_factor(&dv), alt) < 1e-10);
        }
    }

    #[test]
    fn schedule_periodic_and_branches() {
        let s = ExpSchedule::new(8).unwrap();
        assert_eq!(s.exponent(0).unwrap(), (-1, -1));
        assert_eq!(s.exponent(1).unwrap(), (-1, -1));
        assert_eq!(s.exponent(2).unwrap(), (1, 0));
        assert_eq!(s.exponent(3).unwrap(), (0, 1));
        for j in 1..=7 {
            assert_eq!(s.exponent(j).unwrap(), s.exponent(j + 3).unwrap());
        }
        assert_eq!(s.exponent(11).unwrap(), (-1, -1));
        assert_eq!(s.exponent(12).unwrap(), (1, 0));
        assert!(s.exponent(13).is_err());
        let z = ExpSchedule::new(6).unwrap();
        assert_eq!(z.exponent(1).unwrap(), (0, 1));
        assert_eq!(z.exponent(3).unwrap(), (1, 0));
        assert_eq!(z.exponent(9).unwrap(), (0, 1));
        assert_eq!(z.exponent(10).unwrap(), (-1, -1));
        assert!(ExpSchedule::new(7).is_err());
    }

    #[test]
    fn shift_matches_geometry() {
        let tol = Tolerances::default();
        for (n, s) in [(5, 5), (6, 6), (8, 7), (9, 8)] {
            let (seed, _) = chart(n, s);
            let r = verify_shift_commutation(&seed, &tol).unwrap();
            assert!(r.pass, "N = {n}: {r:?}");
            let e = verify_exponent_schedule(&seed, &tol).unwrap();
            assert!(e.pass, "N = {n}: {e:?}");
        }
    }

    #[test]
    fn product_and_a_invariants() {
        let (_, c) = chart(5, 9);
        let sc = shift_coords(&c).unwrap();
        let p = |x: &Coords| x.a()[1] * x.a()[2] * x.a()[3] * x.a()[4];
        assert!(rel_dev(p(&c), p(&sc)) < 1e-10);
        for n in [5, 6, 8] {
            let (_, c) = chart(n, 40 + n as u64);
            let sc = shift_coords(&c).unwrap();
            for i in 1..n - 1 {
                assert!(rel_dev(sc.big_a(i), c.big_a(i + 1)) < 1e-10);
            }
            let (d0, d1) = (derive(&c).unwrap(), derive(&sc).unwrap());
            assert!(rel_dev(d1.big_a[0], d0.big_a[1]) < 1e-10);
        }
    }

    #[test]
    fn tbar_failure_measured() {
        for (n, s) in [(5, 12), (6, 13), (8, 14), (9, 15)] {
            let (seed, c) = chart(n, s);
            let ls = canonical_lift(&seed).unwrap();
            let ni = n as i64;
            let x = seed
                .monodromy()
                .inverse()
                .unwrap()
                .apply(ls.window().tbar_at(ni + 1).unwrap());
            let v0 = ls.get(0).unwrap();
            let dv = derive(&c).unwrap();
            let f = tbar_failure_factor(&dv);
            assert!(crate::tol::max_rel_dev(&v0.to_array(), &(x * f).to_array()) < 1e-9);
        }
    }

    #[test]
    fn scaling_basics() {
        let (_, c) = chart(6, 3);
        assert_eq!(scaling_action(&c, 1.0).unwrap(), c);
        let mu = 1.7;
        let (d, ds) = (derive(&c).unwrap(), derive(&scaling_action(&c, mu).unwrap()).unwrap());
        assert!(rel_dev(ds.a_n, mu * d.a_n) < 1e-12);
        assert!(rel_dev(ds.b_n, d.b_n / mu) < 1e-12);
        assert!(rel_dev(ds.c_n1, d.c_n1) < 1e-12);
        for (x, y) in d.big_a.iter().zip(&ds.big_a) {
            assert!(rel_dev(*x, *y) < 1e-12);
        }
        let r = verify_equivariance(&c, 1.0, &Tolerances::default()).unwrap();
        assert_eq!(r.max_dev, 0.0);
    }

    #[test]
    fn r_mat_identity_when_trivial() {
        let ab = AlphaBeta {
            alpha: 1.0,
            beta: 1.0,
            branch: Branch::Two,
        };
        let s = ExpSchedule::new(5).unwrap();
        for i in 0..=5 {
            assert_eq!(r_mat(i, &ab, &s).unwrap(), Mat3::identity());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]
        #[test]
        fn equivariance_random(seed in 0u64..100_000, n in prop::sample::select(vec![5usize, 6, 8, 9]), mu in prop::sample::select(vec![0.3, 2.5, -1.0, 0.7])) {
            let (_, c) = chart(n, seed);
            let r = verify_equivariance(&c, mu, &Tolerances::default()).unwrap();
            prop_assert!(r.pass, "{:?}", r);
            let (d0, d1) = (derive(&c).unwrap(), derive(&scaling_action(&c, mu).unwrap()).unwrap());
            let (a0, a1) = (alpha_beta(&c, &d0).unwrap(), alpha_beta(&scaling_action(&c, mu).unwrap(), &d1).unwrap());
            prop_assert!(rel_dev(a0.alpha, a1.alpha) < 1e-10 && rel_dev(a0.beta, a1.beta) < 1e-10);
        }
    }
}
