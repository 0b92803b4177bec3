//! Canonical lifts: rescaling an arbitrary lift so that every frame
//! determinant det(V_i, V_{i+1}, V_{i+2}), i = 0…N, equals 1.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projgeo::{HVec, Mat3};
use crate::spiral::{extend, lift_t, seed_window, Seed, VertexWindow};
use crate::tol::Tolerances;

/// Integer system A·Λ = ln|g| for the log-scales Λ_i = ln|λ_i|, with the
/// sign data of g carried alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSystem {
    pub n: usize,
    pub a: Vec<Vec<i64>>,
    pub rhs_log: Vec<f64>,
    pub rhs_sign: Vec<bool>,
}

/// Coefficients of Λ_k over Λ₀…Λ_N after reducing indices outside [0, N]
/// through Λ_{N+1} = Λ₋₁+Λ₀+Λ₁+Λ₂, Λ_{N+j} = Λ_{j−2}+…+Λ_{j+1} (j ≥ 2) and
/// Λ₋₁ = Λ_{N+4}+Λ_N+Λ_{N−1}+Λ_{N−2}.
pub fn reduce_index(n: usize, k: i64) -> Vec<i64> {
    let mut out = vec![0; n + 1];
    accumulate(n as i64, k, &mut out);
    out
}

fn accumulate(n: i64, k: i64, out: &mut [i64]) {
    if (0..=n).contains(&k) {
        out[k as usize] += 1;
    } else if k == n + 1 {
        for m in -1..=2 {
            accumulate(n, m, out);
        }
    } else if k > n + 1 {
        let j = k - n;
        for m in j - 2..=j + 1 {
            accumulate(n, m, out);
        }
    } else if k == -1 {
        for m in [n + 4, n, n - 1, n - 2] {
            accumulate(n, m, out);
        }
    } else {
        panic!("index {k} has no reduction");
    }
}

/// Coefficient matrix of the system: row i is Λ_i + Λ_{i+1} + Λ_{i+2}.
pub fn lambda_matrix(n: usize) -> Vec<Vec<i64>> {
    (0..=n as i64)
        .map(|i| {
            let mut row = vec![0; n + 1];
            for k in i..=i + 2 {
                for (r, c) in row.iter_mut().zip(reduce_index(n, k)) {
                    *r += c;
                }
            }
            row
        })
        .collect()
}

pub fn build_lambda_system(n: usize, g: &[f64]) -> LambdaSystem {
    assert_eq!(g.len(), n + 1, "need N+1 right-hand sides");
    LambdaSystem {
        n,
        a: lambda_matrix(n),
        rhs_log: g.iter().map(|x| x.abs().ln()).collect(),
        rhs_sign: g.iter().map(|&x| x < 0.0).collect(),
    }
}

impl LambdaSystem {
    /// Exact determinant of the coefficient matrix.
    pub fn det(&self) -> i128 {
        bareiss_det(&self.a)
    }
}

/// Fraction-free Gaussian elimination.
pub fn bareiss_det(a: &[Vec<i64>]) -> i128 {
    let n = a.len();
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| i128::from(x)).collect()).collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| m[r][k] != 0) else {
                return 0;
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    if n == 0 {
        1
    } else {
        sign * m[n - 1][n - 1]
    }
}

/// Solve A·x = b over GF(2); `None` if A is singular mod 2.
pub fn gf2_solve(a: &[Vec<i64>], b: &[bool]) -> Option<Vec<bool>> {
    let n = b.len();
    let mut m: Vec<Vec<bool>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r: Vec<bool> = row.iter().map(|x| x.rem_euclid(2) == 1).collect();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| m[r][col])?;
        m.swap(col, p);
        let pivot = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col && row[col] {
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x ^= *y;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n]).collect())
}

/// λ₀…λ_N with λ_iλ_{i+1}λ_{i+2} = g_i after index reduction.
pub fn solve_lambdas(sys: &LambdaSystem) -> Result<Vec<f64>> {
    solve_lambdas_with(sys, &Tolerances::default())
}

pub fn solve_lambdas_with(sys: &LambdaSystem, tol: &Tolerances) -> Result<Vec<f64>> {
    let n = sys.n;
    if n % 3 == 1 {
        return Err(Error::NotLiftable { n });
    }
    let dim = n + 1;
    let a = DMatrix::from_fn(dim, dim, |i, j| sys.a[i][j] as f64);
    let rhs = DVector::from_column_slice(&sys.rhs_log);
    let logs = a.clone().lu().solve(&rhs).ok_or(Error::IllConditioned {
        what: "singular log system".into(),
        residual: f64::INFINITY,
    })?;
    let residual = (&a * &logs - &rhs).amax();
    if !(residual <= tol.lift) {
        return Err(Error::IllConditioned {
            what: "log-magnitude system".into(),
            residual,
        });
    }
    let signs = gf2_solve(&sys.a, &sys.rhs_sign).ok_or(Error::IllConditioned {
        what: "sign system singular mod 2".into(),
        residual: f64::INFINITY,
    })?;
    Ok(logs
        .iter()
        .zip(signs)
        .map(|(l, neg)| if neg { -l.exp() } else { l.exp() })
        .collect())
}

/// λ_k for any reducible index k, from λ₀…λ_N.
pub fn lambda_at(lambdas: &[f64], k: i64) -> f64 {
    let n = lambdas.len() - 1;
    reduce_index(n, k)
        .iter()
        .zip(lambdas)
        .map(|(&e, &l)| l.powi(e as i32))
        .product()
}

/// From a window over [0, N+1], V₋₁ = M⁻¹T̄(V_N) and the closing vertex
/// M·T(V₀). V₋₁ does not depend on the scale of V_{N+1}.
pub fn close_boundary(seed: &Seed, w: &VertexWindow) -> Result<(HVec, HVec)> {
    let n = seed.n() as i64;
    let m = seed.monodromy();
    let base = w.slice(0, n + 1)?;
    let ext = extend(seed, &base, 3, 0)?;
    let vm1 = m.inverse()?.apply(ext.tbar_at(n)?);
    let closing = m.apply(lift_t(vm1, ext.get(0)?, ext.get(1)?, ext.get(2)?)?);
    Ok((vm1, closing))
}

fn with_last(w: &VertexWindow, n: i64, v: HVec) -> Result<VertexWindow> {
    let mut vs = w.slice(0, n)?.vectors().to_vec();
    vs.push(v);
    Ok(VertexWindow::new(0, vs))
}

/// Canonical lift built from the seed's own points.
pub fn canonical_lift(seed: &Seed) -> Result<LiftedSpiral> {
    canonical_lift_with(seed, &Tolerances::default())
}

pub fn canonical_lift_with(seed: &Seed, tol: &Tolerances) -> Result<LiftedSpiral> {
    canonicalize(seed, &seed_window(seed)?, tol)
}

/// Canonical lift from any lift Ṽ₀…Ṽ_{N+1} of the seed window.
pub fn canonicalize(seed: &Seed, arbitrary: &VertexWindow, tol: &Tolerances) -> Result<LiftedSpiral> {
    let n = seed.n();
    if n % 3 == 1 {
        return Err(Error::NotLiftable { n });
    }
    let ni = n as i64;
    let (_, closing) = close_boundary(seed, arbitrary)?;
    let w = extend(seed, &with_last(arbitrary, ni, closing)?, 1, 0)?;
    let g = (0..=ni)
        .map(|i| {
            let d = w.frame_det(i)?;
            if d == 0.0 || !d.is_finite() {
                Err(Error::degenerate(i, "frame determinant vanishes"))
            } else {
                Ok(1.0 / d)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let lambdas = solve_lambdas_with(&build_lambda_system(n, &g), tol)?;

    let scaled: Vec<HVec> = (0..=ni)
        .map(|i| w.get(i).map(|v| v * lambdas[i as usize]))
        .collect::<Result<_>>()?;
    let mut provisional = scaled.clone();
    provisional.push(closing);
    let (_, v_np1) = close_boundary(seed, &VertexWindow::new(0, provisional))?;
    let mut vs = scaled;
    vs.push(v_np1);
    let lifted =
        LiftedSpiral::from_canonical_window(seed.clone(), VertexWindow::new_canonical(0, vs))?.widen(-3, ni + 5)?;
    let residual = lifted.unit_det_residual();
    if !(residual <= tol.lift) {
        return Err(Error::IllConditioned {
            what: "unit-determinant constraints".into(),
            residual,
        });
    }
    Ok(lifted)
}

/// Canonical lift window together with its seed and monodromy.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSpiral {
    seed: Seed,
    window: VertexWindow,
}

impl LiftedSpiral {
    fn from_canonical_window(seed: Seed, window: VertexWindow) -> Result<Self> {
        Ok(LiftedSpiral { seed, window })
    }

    /// Rebuild from exported vectors; the seed is read off V₁…V_{N+1}.
    pub fn from_parts(n: usize, lo: i64, vectors: Vec<HVec>, monodromy: Mat3) -> Result<Self> {
        let window = VertexWindow::new_canonical(lo, vectors);
        let ni = n as i64;
        if lo > 0 || window.hi() < ni + 1 {
            return Err(Error::InvalidSeed(format!(
                "window [{lo}, {}] must cover [0, {}]",
                window.hi(),
                ni + 1
            )));
        }
        let points = (1..=ni)
            .map(|i| window.get(i).map(HVec::chart_normalized))
            .collect::<Result<Vec<_>>>()?;
        let side = window.get(ni + 1)?.chart_normalized();
        let seed = Seed::new(points, side, monodromy)?;
        let out = LiftedSpiral { seed, window };
        let residual = out.unit_det_residual();
        if !(residual <= Tolerances::default().lift) {
            return Err(Error::NotCanonical);
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.seed.n()
    }

    pub fn seed(&self) -> &Seed {
        &self.seed
    }

    pub fn monodromy(&self) -> &Mat3 {
        self.seed.monodromy()
    }

    pub fn window(&self) -> &VertexWindow {
        &self.window
    }

    pub fn lo(&self) -> i64 {
        self.window.lo()
    }

    pub fn hi(&self) -> i64 {
        self.window.hi()
    }

    pub fn get(&self, i: i64) -> Result<HVec> {
        self.window.get(i)
    }

    /// ρ_i = (V_i, V_{i+1}, V_{i+2}).
    pub fn frame(&self, i: i64) -> Result<Mat3> {
        Ok(Mat3::from_cols(self.get(i)?, self.get(i + 1)?, self.get(i + 2)?))
    }

    pub fn frame_det(&self, i: i64) -> Result<f64> {
        self.window.frame_det(i)
    }

    /// max |det ρ_i − 1| over i = 0…N.
    pub fn unit_det_residual(&self) -> f64 {
        (0..=self.n() as i64)
            .map(|i| self.frame_det(i).map_or(f64::INFINITY, |d| (d - 1.0).abs()))
            .fold(0.0, f64::max)
    }

    /// Same spiral on the window [lo, hi] (which must contain [0, N+1]).
    pub fn widen(&self, lo: i64, hi: i64) -> Result<Self> {
        let fwd = (hi - self.hi()).max(0) as usize;
        let bwd = (self.lo() - lo).max(0) as usize;
        let window = extend(&self.seed, &self.window, fwd, bwd)?;
        Ok(LiftedSpiral {
            seed: self.seed.clone(),
            window,
        })
    }

    /// (c_i, b_i, a_i) with V_{i+3} = a_iV_{i+2} + b_iV_{i+1} + c_iV_i.
    pub fn recurrence_coeffs(&self, i: i64) -> Result<(f64, f64, f64)> {
        use crate::projgeo::triple;
        let (v0, v1, v2, v3) = (self.get(i)?, self.get(i + 1)?, self.get(i + 2)?, self.get(i + 3)?);
        let d = triple(v0, v1, v2);
        if d == 0.0 {
            return Err(Error::degenerate(i, "zero frame determinant"));
        }
        Ok((triple(v3, v1, v2) / d, triple(v0, v3, v2) / d, triple(v0, v1, v3) / d))
    }
}

#[derive(Serialize, Deserialize)]
struct WindowBounds {
    lo: i64,
    hi: i64,
}

#[derive(Serialize, Deserialize)]
struct RawLifted {
    n: usize,
    window: WindowBounds,
    vectors: Vec<HVec>,
    monodromy: Mat3,
}

impl Serialize for LiftedSpiral {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawLifted {
            n: self.n(),
            window: WindowBounds {
                lo: self.lo(),
                hi: self.hi(),
            },
            vectors: self.window.vectors().to_vec(),
            monodromy: *self.monodromy(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LiftedSpiral {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawLifted::deserialize(d)?;
        if raw.window.hi - raw.window.lo + 1 != raw.vectors.len() as i64 {
            return Err(D::Error::custom("window bounds disagree with vector count"));
        }
        LiftedSpiral::from_parts(raw.n, raw.window.lo, raw.vectors, raw.monodromy).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spiral::random_seed;
    use proptest::prelude::*;

    #[test]
    fn determinant_trichotomy() {
        for n in [5, 6, 8, 9, 11, 12] {
            assert_eq!(bareiss_det(&lambda_matrix(n)).abs(), 3, "N = {n}");
        }
        for n in [7, 10, 13] {
            assert_eq!(bareiss_det(&lambda_matrix(n)), 0, "N = {n}");
        }
    }

    #[test]
    fn bareiss_small() {
        assert_eq!(bareiss_det(&[vec![2, 1], vec![1, 3]]), 5);
        assert_eq!(bareiss_det(&[vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(bareiss_det(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]), -3);
    }

    #[test]
    fn boundary_rows_for_large_n() {
        let n = 12;
        let a = lambda_matrix(n);
        let mut r1 = vec![1, 1, 2, 1, 1, 1];
        r1.extend(vec![0; n + 1 - 9]);
        r1.extend([1, 2, 2]);
        let mut r2 = vec![2, 2, 3, 2, 1, 1];
        r2.extend(vec![0; n + 1 - 9]);
        r2.extend([1, 1, 2]);
        assert_eq!(a[n - 1], r1);
        assert_eq!(a[n], r2);
        for row in &a[..n - 1] {
            assert_eq!(row.iter().sum::<i64>(), 3);
        }
    }

    #[test]
    fn unit_rhs_gives_unit_lambdas() {
        for n in [5, 6, 8] {
            let l = solve_lambdas(&build_lambda_system(n, &vec![1.0; n + 1])).unwrap();
            assert!(l.iter().all(|&x| (x - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn n7_not_liftable() {
        let sys = build_lambda_system(7, &[1.0; 8]);
        assert_eq!(solve_lambdas(&sys), Err(Error::NotLiftable { n: 7 }));
    }

    #[test]
    fn sign_flips_still_solve() {
        let n = 6;
        let g: Vec<f64> = (0..=n).map(|i| 0.5 + 0.3 * i as f64).collect();
        let a = lambda_matrix(n);
        for flip in 0..=n {
            let mut gg = g.clone();
            gg[flip] = -gg[flip];
            let l = solve_lambdas(&build_lambda_system(n, &gg)).unwrap();
            for (i, row) in a.iter().enumerate() {
                let prod: f64 = row.iter().zip(&l).map(|(&e, &x)| x.powi(e as i32)).product();
                assert!((prod - gg[i]).abs() < 1e-12 * gg[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn lift_is_unimodular() {
        for (n, s) in [(5, 1), (6, 2), (8, 3), (9, 4)] {
            let seed = random_seed(n, s, 0.25).unwrap();
            let ls = canonical_lift(&seed).unwrap();
            assert!(ls.unit_det_residual() < 1e-9);
            assert_eq!((ls.lo(), ls.hi()), (-3, n as i64 + 5));
            for i in 1..=n as i64 + 1 {
                assert!(ls.get(i).unwrap().proj_eq(seed.point(i as usize), 1e-9));
            }
        }
    }

    #[test]
    fn lifted_window_obeys_recurrences() {
        let seed = random_seed(8, 5, 0.3).unwrap();
        let ls = canonical_lift(&seed).unwrap();
        let m = seed.monodromy();
        let n = 8;
        for k in 1..=4 {
            let t = m.apply(ls.window().t_at(k - 1).unwrap());
            let v = ls.get(n + k).unwrap();
            assert!(crate::tol::max_rel_dev(&t.to_array(), &v.to_array()) < 1e-9);
        }
        let m_inv = m.inverse().unwrap();
        for i in 1..=3 {
            let t = m_inv.apply(ls.window().tbar_at(n - i + 1).unwrap());
            let v = ls.get(-i).unwrap();
            assert!(crate::tol::max_rel_dev(&t.to_array(), &v.to_array()) < 1e-9);
        }
    }

    #[test]
    fn lambda_minus_one_matches_observed_ratio() {
        let seed = random_seed(6, 8, 0.2).unwrap();
        let arb = seed_window(&seed).unwrap();
        let ls = canonical_lift(&seed).unwrap();
        let (vm1_arb, _) = close_boundary(&seed, &arb).unwrap();
        let lambdas: Vec<f64> = (0..=6).map(|i| ls.get(i).unwrap().x / arb.get(i).unwrap().x).collect();
        let ratio = ls.get(-1).unwrap().x / vm1_arb.x;
        assert!((ratio - lambda_at(&lambdas, -1)).abs() < 1e-8 * ratio.abs());
    }

    #[test]
    fn json_round_trip() {
        let ls = canonical_lift(&random_seed(5, 3, 0.2).unwrap()).unwrap();
        let j = serde_json::to_string(&ls).unwrap();
        let back: LiftedSpiral = serde_json::from_str(&j).unwrap();
        assert_eq!(back.window(), ls.window());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn rescaling_input_leaves_lift_unchanged(
            seed in 0u64..10_000,
            n in prop::sample::select(vec![5usize, 6, 8]),
            scales in proptest::collection::vec((0.2..5.0f64, any::<bool>()), 10),
        ) {
            let s = random_seed(n, seed, 0.2).unwrap();
            let base = seed_window(&s).unwrap();
            let vs: Vec<HVec> = base
                .vectors()
                .iter()
                .zip(scales.iter().cycle())
                .map(|(v, &(k, neg))| *v * if neg { -k } else { k })
                .collect();
            let a = canonical_lift(&s).unwrap();
            let b = canonicalize(&s, &VertexWindow::new(0, vs), &Tolerances::default()).unwrap();
            for i in a.lo()..=a.hi() {
                let (u, v) = (a.get(i).unwrap(), b.get(i).unwrap());
                prop_assert!(crate::tol::max_rel_dev(&u.to_array(), &v.to_array()) < 1e-8);
            }
        }
    }
}
