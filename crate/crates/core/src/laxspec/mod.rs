//! Lax matrices with spectral parameter μ, the monodromy M(μ) and the
//! coefficient table of its characteristic polynomial det(M(μ) − rI).

pub mod laurent;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::coords::{derive, Coords, InvariantTable};
use crate::error::{Error, Result};
use crate::projgeo::Mat3;
use crate::shiftmap::{alpha_beta, r_mat, shift_coords, ExpSchedule};
use crate::tol::Tolerances;

pub use laurent::{LaurentMat3, LaurentPoly};

/// K_i(μ) = (e₂, e₃, (c_i, μ⁻¹b_i, μa_i)).
pub fn k_mu(t: &InvariantTable, i: i64) -> Result<LaurentMat3> {
    let (c, b, a) = t.cba(i)?;
    let mut m = LaurentMat3::default();
    m.0[1][0] = LaurentPoly::constant(1.0);
    m.0[2][1] = LaurentPoly::constant(1.0);
    m.0[0][2] = LaurentPoly::constant(c);
    m.0[1][2] = LaurentPoly::monomial(b, -1);
    m.0[2][2] = LaurentPoly::monomial(a, 1);
    Ok(m)
}

/// Numeric K_i(μ).
pub fn k_at(t: &InvariantTable, i: i64, mu: f64) -> Result<Mat3> {
    let (c, b, a) = t.cba(i)?;
    Ok(Mat3::companion(c, b / mu, a * mu))
}

fn stub_mu(t: &InvariantTable, k: i64) -> Result<[LaurentPoly; 3]> {
    let (c, _, a) = t.cba(k)?;
    let d = t.d(k)?;
    Ok([
        LaurentPoly::constant(d * c),
        LaurentPoly::zero(),
        LaurentPoly::monomial(d * a, 1),
    ])
}

fn apply_mu(m: &LaurentMat3, v: &[LaurentPoly; 3]) -> [LaurentPoly; 3] {
    std::array::from_fn(|i| (0..3).fold(LaurentPoly::zero(), |acc, k| &acc + &(&m.0[i][k] * &v[k])))
}

/// 𝒜_i(μ): the gauge matrix with a's carrying μ and b's carrying μ⁻¹.
pub fn gauge_a_mu(t: &InvariantTable, i: i64) -> Result<LaurentMat3> {
    if i < 1 {
        return Err(Error::IndexOutOfRange {
            index: i,
            lo: 1,
            hi: t.hi() - 1,
        });
    }
    let j = i - 1;
    let k_prev = k_mu(t, j - 1)?;
    let cols = [
        stub_mu(t, j - 1)?,
        apply_mu(&k_prev, &stub_mu(t, j)?),
        apply_mu(&(&k_prev * &k_mu(t, j)?), &stub_mu(t, j + 1)?),
    ];
    let mut m = LaurentMat3::default();
    for (c, col) in cols.into_iter().enumerate() {
        for (r, x) in col.into_iter().enumerate() {
            m.0[r][c] = x;
        }
    }
    Ok(m)
}

/// M(μ) = K₀(μ)…K_N(μ)𝒜₁(μ)⁻¹K₋₁(μ), with 𝒜₁(μ)⁻¹ as adjugate over an exact
/// Laurent division by det 𝒜₁(μ).
pub fn monodromy_mu(c: &Coords) -> Result<LaurentMat3> {
    monodromy_mu_with(c, &Tolerances::default())
}

pub fn monodromy_mu_with(c: &Coords, tol: &Tolerances) -> Result<LaurentMat3> {
    let dv = derive(c)?;
    let t = InvariantTable::from_coords(c, &dv);
    let mut p = LaurentMat3::identity();
    for i in 0..=c.n() as i64 {
        p = &p * &k_mu(&t, i)?;
    }
    let a1 = gauge_a_mu(&t, 1)?;
    let det = a1.det().trimmed(tol.trim);
    let numer = &(&p * &a1.adjugate()) * &k_mu(&t, -1)?;
    numer.div_exact(&det, tol.trim)
}

/// Numeric M(μ), built directly from evaluated factors.
pub fn monodromy_at(c: &Coords, mu: f64) -> Result<Mat3> {
    let dv = derive(c)?;
    let t = InvariantTable::from_coords(c, &dv);
    let mut p = Mat3::identity();
    for i in 0..=c.n() as i64 {
        p = p * k_at(&t, i, mu)?;
    }
    let a1 = gauge_a_mu(&t, 1)?.eval(mu);
    Ok(p * a1.inverse()? * k_at(&t, -1, mu)?)
}

/// Coefficients of det(M(μ) − rI) keyed by (μ-power, r-power).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralTable {
    entries: BTreeMap<(i32, u8), f64>,
}

impl SpectralTable {
    pub fn get(&self, mu_pow: i32, r_pow: u8) -> f64 {
        self.entries.get(&(mu_pow, r_pow)).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = ((i32, u8), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn support(&self) -> BTreeSet<(i32, u8)> {
        self.entries.keys().copied().collect()
    }

    /// μ-powers present in the r^k block.
    pub fn block_support(&self, r_pow: u8) -> Vec<i32> {
        self.entries
            .keys()
            .filter(|(_, r)| *r == r_pow)
            .map(|(m, _)| *m)
            .collect()
    }

    pub fn block_max(&self, r_pow: u8) -> f64 {
        self.entries
            .iter()
            .filter(|((_, r), _)| *r == r_pow)
            .fold(0.0_f64, |m, (_, v)| m.max(v.abs()))
    }

    /// Per-entry deviation from `base`, normalized by base's largest
    /// coefficient of the same r-degree; `None` if the supports differ.
    pub fn max_dev_from(&self, base: &SpectralTable) -> Option<f64> {
        if self.support() != base.support() {
            return None;
        }
        let mut worst = 0.0_f64;
        for ((m, r), v) in base.entries() {
            let scale = base.block_max(r);
            worst = worst.max((self.get(m, r) - v).abs() / scale);
        }
        Some(worst)
    }
}

#[derive(Serialize, Deserialize)]
struct SpectralEntry {
    mu_pow: i32,
    r_pow: u8,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSpectral {
    entries: Vec<SpectralEntry>,
}

impl Serialize for SpectralTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut entries: Vec<SpectralEntry> = self
            .entries()
            .map(|((mu_pow, r_pow), coeff)| SpectralEntry { mu_pow, r_pow, coeff })
            .collect();
        entries.sort_by_key(|e| (e.r_pow, e.mu_pow));
        RawSpectral { entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpectral::deserialize(d)?;
        Ok(SpectralTable {
            entries: raw
                .entries
                .into_iter()
                .map(|e| ((e.mu_pow, e.r_pow), e.coeff))
                .collect(),
        })
    }
}

/// −r³ + tr M(μ)·r² − σ₂(M(μ))·r + det M(μ).
pub fn spectral_table(c: &Coords) -> Result<SpectralTable> {
    spectral_table_with(c, &Tolerances::default())
}

pub fn spectral_table_with(c: &Coords, tol: &Tolerances) -> Result<SpectralTable> {
    let dv = derive(c)?;
    let t = InvariantTable::from_coords(c, &dv);
    let m = monodromy_mu_with(c, tol)?;
    // det M = Π det K_i · det K₋₁ / det 𝒜₁ and σ₂(M) = det M · tr M⁻¹
    let a1 = gauge_a_mu(&t, 1)?;
    let c_prod: f64 = (-1..=c.n() as i64).map(|i| t.c(i)).product::<Result<f64>>()?;
    let det = LaurentPoly::constant(c_prod).div_exact(&a1.det().trimmed(tol.trim), tol.trim)?;
    let mut inv = &k_mu_inv(&t, -1)? * &a1;
    for i in (0..=c.n() as i64).rev() {
        inv = &inv * &k_mu_inv(&t, i)?;
    }
    let sigma2 = &det * &inv.trace();
    Ok(table_from_blocks(&det, &(-&sigma2), &m.trace(), tol.trim))
}

/// K_i(μ)⁻¹ = ((−μ⁻¹b_i/c_i, −μa_i/c_i, 1/c_i), e₁, e₂).
pub fn k_mu_inv(t: &InvariantTable, i: i64) -> Result<LaurentMat3> {
    let (c, b, a) = t.cba(i)?;
    if c == 0.0 {
        return Err(Error::GenericityViolation(format!("c_{i} = 0")));
    }
    let mut m = LaurentMat3::default();
    m.0[0][0] = LaurentPoly::monomial(-b / c, -1);
    m.0[1][0] = LaurentPoly::monomial(-a / c, 1);
    m.0[2][0] = LaurentPoly::constant(1.0 / c);
    m.0[0][1] = LaurentPoly::constant(1.0);
    m.0[1][2] = LaurentPoly::constant(1.0);
    Ok(m)
}

fn table_from_blocks(r0: &LaurentPoly, r1: &LaurentPoly, r2: &LaurentPoly, trim: f64) -> SpectralTable {
    let mut entries = BTreeMap::new();
    for (r, p) in [(0u8, r0), (1, r1), (2, r2)] {
        for (k, v) in p.trimmed(trim).terms() {
            entries.insert((k, r), v);
        }
    }
    entries.insert((0, 3), -1.0);
    SpectralTable { entries }
}

/// Outcome of the Lax compatibility check, one max-residual per sampled μ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaxReport {
    pub check: String,
    pub profile: Vec<(f64, f64)>,
    /// Indices i whose residual exceeds the tolerance, per μ.
    pub failing: Vec<Vec<i64>>,
    pub max_dev: f64,
    pub pass: bool,
}

/// 𝒮(K_i)(μ) against R_i⁻¹K_{i+1}(μ)R_{i+1}, i = 0…N−1, the compatibility
/// condition 𝒮(K_i) = N_i⁻¹K_iN_{i+1} with N_i = K_iR_i.
pub fn verify_lax(c: &Coords, samples: &[f64], tol: &Tolerances) -> Result<LaxReport> {
    let n = c.n() as i64;
    let dv = derive(c)?;
    let t = InvariantTable::from_coords(c, &dv);
    let shifted = shift_coords(c)?;
    let ts = InvariantTable::from_coords(&shifted, &derive(&shifted)?);
    let ab = alpha_beta(c, &dv)?;
    let sched = ExpSchedule::new(c.n())?;
    let mut profile = Vec::new();
    let mut failing = Vec::new();
    let mut worst = 0.0_f64;
    for &mu in samples {
        let mut row_worst = 0.0_f64;
        let mut bad = Vec::new();
        for i in 0..n {
            let lhs = k_at(&ts, i, mu)?;
            let rhs = r_mat(i, &ab, &sched)?.inverse()? * k_at(&t, i + 1, mu)? * r_mat(i + 1, &ab, &sched)?;
            let dev = lhs.max_rel_dev(&rhs);
            if !(dev <= tol.shift) {
                bad.push(i);
            }
            row_worst = row_worst.max(dev);
        }
        worst = worst.max(row_worst);
        profile.push((mu, row_worst));
        failing.push(bad);
    }
    let same_profile = failing.windows(2).all(|w| w[0] == w[1]);
    Ok(LaxReport {
        check: "lax compatibility".into(),
        profile,
        pass: worst <= tol.shift && same_profile,
        failing,
        max_dev: worst,
    })
}

/// Result of comparing spectral tables along a shift orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub check: String,
    pub steps: usize,
    pub max_dev: f64,
    pub support_stable: bool,
    pub trace_single_class: bool,
    /// First (step, μ-power, r-power) exceeding tolerance, if any.
    pub first_failure: Option<(usize, i32, u8)>,
    pub pass: bool,
}

/// Whether the μ-powers of the trace block all agree mod 3.
pub fn trace_single_class(t: &SpectralTable) -> bool {
    let classes: BTreeSet<i32> = t.block_support(2).iter().map(|k| k.rem_euclid(3)).collect();
    classes.len() <= 1
}

pub fn verify_spectral_invariance(c: &Coords, steps: usize, tol: &Tolerances) -> Result<SpectralReport> {
    let base = spectral_table_with(c, tol)?;
    let mut cur = c.clone();
    let mut worst = 0.0_f64;
    let mut support_stable = true;
    let mut single = trace_single_class(&base);
    let mut first_failure = None;
    for k in 1..=steps {
        cur = shift_coords(&cur)?;
        let t = spectral_table_with(&cur, tol)?;
        single &= trace_single_class(&t);
        match t.max_dev_from(&base) {
            None => {
                support_stable = false;
                if first_failure.is_none() {
                    let diff = t.support().symmetric_difference(&base.support()).next().copied();
                    let (m, r) = diff.unwrap_or((0, 0));
                    first_failure = Some((k, m, r));
                }
            }
            Some(d) => {
                if d > tol.spec && first_failure.is_none() {
                    first_failure = base
                        .entries()
                        .find(|&((m, r), v)| (t.get(m, r) - v).abs() / base.block_max(r) > tol.spec)
                        .map(|((m, r), _)| (k, m, r));
                }
                worst = worst.max(d);
            }
        }
    }
    Ok(SpectralReport {
        check: "spectral invariance".into(),
        steps,
        max_dev: worst,
        support_stable,
        trace_single_class: single,
        pass: support_stable && single && worst <= tol.spec,
        first_failure,
    })
}

/// Largest distance between the eigenvalue triples of two matrices under
/// the best matching.
pub fn eigenvalue_distance(a: &Mat3, b: &Mat3) -> f64 {
    let ea = a.eigenvalues();
    let eb = b.eigenvalues();
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS
        .iter()
        .map(|p| {
            (0..3)
                .map(|k| {
                    let (x, y): (Complex<f64>, Complex<f64>) = (ea[k], eb[p[k]]);
                    (x - y).norm() / x.norm().max(y.norm()).max(1.0)
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Numeric N_i(1) = K_iR_i; geometrically ρ_i⁻¹𝒮(ρ_i).
pub fn n_mat(t: &InvariantTable, i: i64, rmat: &Mat3) -> Result<Mat3> {
    Ok(t.k(i)? * *rmat)
}
