//! Seeds of twisted (N,1) spirals and the vertex recurrences that grow them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projgeo::{collinearity, cross, meet_of_joins, triple, HVec, Mat3, EPS_DEG};
use crate::tol::Tolerances;

/// N base points, the side point p_{N+1} and the monodromy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeed", into = "RawSeed")]
pub struct Seed {
    n: usize,
    points: Vec<HVec>,
    side_point: HVec,
    monodromy: Mat3,
}

#[derive(Serialize, Deserialize)]
struct RawSeed {
    n: usize,
    points: Vec<HVec>,
    side_point: HVec,
    monodromy: Mat3,
}

impl TryFrom<RawSeed> for Seed {
    type Error = Error;
    fn try_from(r: RawSeed) -> Result<Seed> {
        if r.points.len() != r.n {
            return Err(Error::InvalidSeed(format!(
                "n = {} but {} points given",
                r.n,
                r.points.len()
            )));
        }
        Seed::new(r.points, r.side_point, r.monodromy)
    }
}

impl From<Seed> for RawSeed {
    fn from(s: Seed) -> RawSeed {
        RawSeed {
            n: s.n,
            points: s.points,
            side_point: s.side_point,
            monodromy: s.monodromy,
        }
    }
}

impl Seed {
    /// Validated seed with default tolerances.
    pub fn new(points: Vec<HVec>, side_point: HVec, monodromy: Mat3) -> Result<Seed> {
        Seed::with_tolerances(points, side_point, monodromy, &Tolerances::default())
    }

    pub fn with_tolerances(points: Vec<HVec>, side_point: HVec, monodromy: Mat3, tol: &Tolerances) -> Result<Seed> {
        let seed = Seed {
            n: points.len(),
            points,
            side_point,
            monodromy,
        };
        seed.validate(tol)?;
        Ok(seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// p₁…p_N.
    pub fn points(&self) -> &[HVec] {
        &self.points
    }

    /// p_i for i in 1..=N+1.
    pub fn point(&self, i: usize) -> HVec {
        if i == self.n + 1 {
            self.side_point
        } else {
            self.points[i - 1]
        }
    }

    pub fn side_point(&self) -> HVec {
        self.side_point
    }

    pub fn monodromy(&self) -> &Mat3 {
        &self.monodromy
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        if self.n < 5 {
            return Err(Error::InvalidN { n: self.n });
        }
        let all_finite =
            self.points.iter().all(|p| p.is_finite()) && self.side_point.is_finite() && self.monodromy.is_finite();
        if !all_finite {
            return Err(Error::InvalidSeed("non-finite entry".into()));
        }
        if self.points.iter().chain([&self.side_point]).any(|p| p.norm() == 0.0) {
            return Err(Error::InvalidSeed("zero vector is not a point".into()));
        }
        let det = self.monodromy.det();
        if (det - 1.0).abs() > tol.lin.max(1e-12) * 100.0 {
            return Err(Error::InvalidSeed(format!("monodromy has det {det}, expected 1")));
        }
        let m_p1 = self.monodromy.apply(self.points[0]);
        let col = collinearity(self.point(self.n), self.side_point, m_p1);
        if col > tol.proj {
            return Err(Error::InvalidSeed(format!(
                "side point is not on the line through p_N and M·p_1 (deviation {col:e})"
            )));
        }
        for i in 1..self.n {
            let (u, v, w) = (self.point(i), self.point(i + 1), self.point(i + 2));
            if collinearity(u, v, w) <= tol.deg {
                return Err(Error::GenericityViolation(format!(
                    "p_{i}, p_{}, p_{} are collinear",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(())
    }
}

/// Contiguous run of lifted vertices V_lo…V_hi.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexWindow {
    lo: i64,
    vectors: Vec<HVec>,
    canonical: bool,
}

impl VertexWindow {
    /// Window of arbitrary (non-canonical) lifts starting at `lo`.
    pub fn new(lo: i64, vectors: Vec<HVec>) -> Self {
        VertexWindow {
            lo,
            vectors,
            canonical: false,
        }
    }

    pub(crate) fn new_canonical(lo: i64, vectors: Vec<HVec>) -> Self {
        VertexWindow {
            lo,
            vectors,
            canonical: true,
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.vectors.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn vectors(&self) -> &[HVec] {
        &self.vectors
    }

    pub fn contains(&self, i: i64) -> bool {
        i >= self.lo && i <= self.hi()
    }

    pub fn get(&self, i: i64) -> Result<HVec> {
        if self.contains(i) {
            Ok(self.vectors[(i - self.lo) as usize])
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                lo: self.lo,
                hi: self.hi(),
            })
        }
    }

    /// Sub-window [lo, hi].
    pub fn slice(&self, lo: i64, hi: i64) -> Result<VertexWindow> {
        self.get(lo)?;
        self.get(hi)?;
        let a = (lo - self.lo) as usize;
        let b = (hi - self.lo) as usize;
        Ok(VertexWindow {
            lo,
            vectors: self.vectors[a..=b].to_vec(),
            canonical: self.canonical,
        })
    }

    /// det(V_i, V_{i+1}, V_{i+2}).
    pub fn frame_det(&self, i: i64) -> Result<f64> {
        Ok(triple(self.get(i)?, self.get(i + 1)?, self.get(i + 2)?))
    }

    /// det ρ_{i+1} / det ρ_i.
    pub fn c_ratio(&self, i: i64) -> Result<f64> {
        let d0 = self.frame_det(i)?;
        if d0 == 0.0 {
            return Err(Error::degenerate(i, "zero frame determinant"));
        }
        Ok(self.frame_det(i + 1)? / d0)
    }

    /// Lifted pentagram image at index i.
    pub fn t_at(&self, i: i64) -> Result<HVec> {
        lift_t(self.get(i - 1)?, self.get(i)?, self.get(i + 1)?, self.get(i + 2)?).map_err(|e| reindex(e, i))
    }

    /// Lifted backward image at index i.
    pub fn tbar_at(&self, i: i64) -> Result<HVec> {
        let c_next = self.c_ratio(i + 1)?;
        lift_tbar(
            self.get(i - 2)?,
            self.get(i - 1)?,
            self.get(i)?,
            self.get(i + 1)?,
            c_next,
        )
        .map_err(|e| reindex(e, i))
    }

    fn push_back(&mut self, v: HVec) {
        self.vectors.push(v);
    }

    fn push_front(&mut self, v: HVec) {
        self.vectors.insert(0, v);
        self.lo -= 1;
    }
}

fn reindex(e: Error, i: i64) -> Error {
    match e {
        Error::DegenerateConfiguration { what, .. } => Error::DegenerateConfiguration { index: Some(i), what },
        other => other,
    }
}

/// (V₋₁ × V₁) × (V₀ × V₂).
pub fn lift_t(vm1: HVec, v0: HVec, v1: HVec, v2: HVec) -> Result<HVec> {
    meet_of_joins(vm1, v1, v0, v2)
}

/// c_next · (V₀ × V₁) × (V₋₂ × V₋₁).
pub fn lift_tbar(vm2: HVec, vm1: HVec, v0: HVec, v1: HVec, c_next: f64) -> Result<HVec> {
    Ok(meet_of_joins(v0, v1, vm2, vm1)? * c_next)
}

/// Grows the window by `fwd` vertices on the right and `bwd` on the left.
///
/// Forward uses V_{N+k} = M·T(V_{k−1}); backward uses V_j = M⁻¹·T̄(V_{N+j+1}),
/// which is only meaningful on canonical windows and only produces negative
/// indices.
pub fn extend(seed: &Seed, window: &VertexWindow, fwd: usize, bwd: usize) -> Result<VertexWindow> {
    let n = seed.n() as i64;
    let m = seed.monodromy();
    let mut w = window.clone();
    for _ in 0..fwd {
        let j = w.hi() + 1;
        if j < n + 2 {
            return Err(Error::IndexOutOfRange {
                index: j,
                lo: n + 2,
                hi: i64::MAX,
            });
        }
        let v = w.t_at(j - n - 1).map_err(|e| reindex(e, j))?;
        w.push_back(m.apply(v));
    }
    if bwd > 0 {
        if !w.canonical {
            return Err(Error::NotCanonical);
        }
        let m_inv = m.inverse()?;
        for _ in 0..bwd {
            let j = w.lo() - 1;
            if j > -1 {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    lo: i64::MIN,
                    hi: -1,
                });
            }
            let v = w.tbar_at(n + j + 1).map_err(|e| reindex(e, j))?;
            w.push_front(m_inv.apply(v));
        }
    }
    Ok(w)
}

/// Image of a closed polygon under the pentagram map: q_i = p_{i−1}p_{i+1} ∩ p_ip_{i+2}.
pub fn closed_pentagram_t(points: &[HVec]) -> Result<Vec<HVec>> {
    let n = points.len();
    if n < 5 {
        return Err(Error::InvalidN { n });
    }
    let p = |k: usize| points[k % n];
    (0..n)
        .map(|i| {
            meet_of_joins(p(i + n - 1), p(i + 1), p(i), p(i + 2))
                .map(HVec::chart_normalized)
                .map_err(|e| reindex(e, i as i64))
        })
        .collect()
}

/// Cross-ratio of the four lines joining `center` to a, b, c, d.
pub fn pencil_cross_ratio(center: HVec, a: HVec, b: HVec, c: HVec, d: HVec) -> f64 {
    let t = |x, y| triple(center, x, y);
    (t(a, c) * t(b, d)) / (t(a, d) * t(b, c))
}

/// Per-vertex projective invariants of a closed polygon: at p_i, the
/// cross-ratio of the lines to p_{i−2}, p_{i−1}, p_{i+1}, p_{i+2}.
pub fn corner_invariants(points: &[HVec]) -> Vec<f64> {
    let n = points.len();
    let p = |k: usize| points[k % n];
    (0..n)
        .map(|i| pencil_cross_ratio(p(i), p(i + n - 2), p(i + n - 1), p(i + 1), p(i + 2)))
        .collect()
}

/// Smallest invariant mismatch over all cyclic relabelings and reversals.
pub fn invariant_mismatch(p: &[HVec], q: &[HVec]) -> f64 {
    if p.len() != q.len() || p.is_empty() {
        return f64::INFINITY;
    }
    let ip = corner_invariants(p);
    let n = p.len();
    let mut best = f64::INFINITY;
    for reversed in [false, true] {
        let mut qq = q.to_vec();
        if reversed {
            qq.reverse();
        }
        let iq = corner_invariants(&qq);
        for shift in 0..n {
            let rot: Vec<f64> = (0..n).map(|k| iq[(k + shift) % n]).collect();
            best = best.min(crate::tol::max_rel_dev(&ip, &rot));
        }
    }
    best
}

/// Homography sending four points in general position to four others.
pub fn homography_from_frames(src: [HVec; 4], dst: [HVec; 4]) -> Result<Mat3> {
    fn basis(p: [HVec; 4]) -> Result<Mat3> {
        let b = Mat3::from_cols(p[0], p[1], p[2]);
        let coef = b.inverse()?.apply(p[3]);
        if coef.x.abs().min(coef.y.abs()).min(coef.z.abs()) <= EPS_DEG * coef.max_abs() {
            return Err(Error::degenerate(None, "four points not in general position"));
        }
        Ok(Mat3::from_cols(p[0] * coef.x, p[1] * coef.y, p[2] * coef.z))
    }
    Ok(basis(dst)? * basis(src)?.inverse()?)
}

/// Whether some relabeling (cyclic shift, optionally reversed) of `q` is the
/// image of `p` under a single homography, up to `tol` in projective distance.
pub fn projectively_equivalent(p: &[HVec], q: &[HVec], tol: f64) -> bool {
    let n = p.len();
    if n != q.len() || n < 4 {
        return false;
    }
    let src = [p[0], p[1], p[2], p[3]];
    for reversed in [false, true] {
        for shift in 0..n {
            let idx = |k: usize| {
                if reversed {
                    (shift + n - k % n) % n
                } else {
                    (k + shift) % n
                }
            };
            let dst = [q[idx(0)], q[idx(1)], q[idx(2)], q[idx(3)]];
            let Ok(h) = homography_from_frames(src, dst) else {
                continue;
            };
            if (0..n).all(|k| h.apply(p[k]).proj_distance(q[idx(k)]) <= tol) {
                return true;
            }
        }
    }
    false
}

/// Strict convexity (either orientation) of a closed polygon in the affine chart.
pub fn is_strictly_convex(points: &[HVec]) -> bool {
    let Some(aff) = points.iter().map(|p| p.dehomogenize()).collect::<Option<Vec<_>>>() else {
        return false;
    };
    let n = aff.len();
    if n < 3 {
        return false;
    }
    let mut sign = 0.0;
    let mut turning = 0.0;
    for i in 0..n {
        let (x0, y0) = aff[i];
        let (x1, y1) = aff[(i + 1) % n];
        let (x2, y2) = aff[(i + 2) % n];
        let (ex, ey) = (x1 - x0, y1 - y0);
        let (fx, fy) = (x2 - x1, y2 - y1);
        let z = ex * fy - ey * fx;
        if z == 0.0 || (sign != 0.0 && z.signum() != sign) {
            return false;
        }
        sign = z.signum();
        turning += z.atan2(ex * fx + ey * fy);
    }
    (turning.abs() - std::f64::consts::TAU).abs() < 1e-6
}

/// Matrix exponential by scaling and squaring with a Taylor core.
fn expm(x: &Mat3) -> Mat3 {
    let norm = x.max_abs() * 3.0;
    let mut squarings = 0;
    let mut scaled = *x;
    while norm / f64::from(1 << squarings) > 0.5 {
        squarings += 1;
    }
    scaled = scaled.scale(1.0 / f64::from(1 << squarings));
    let mut term = Mat3::identity();
    let mut sum = Mat3::identity();
    for k in 1..=20 {
        term = (term * scaled).scale(1.0 / k as f64);
        sum = sum + term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Deterministic pseudo-random seed: a perturbed regular N-gon, a side point
/// on segment p_N–M·p₁, and M = exp(twist·X) with X traceless.
pub fn random_seed(n: usize, rng_seed: u64, twist: f64) -> Result<Seed> {
    if n < 5 || n % 3 == 1 {
        return Err(Error::InvalidN { n });
    }
    if !twist.is_finite() {
        return Err(Error::InvalidSeed("twist must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..10_000 {
        let points: Vec<HVec> = (0..n)
            .map(|k| {
                let theta = std::f64::consts::TAU * k as f64 / n as f64;
                let r = rng.random_range(0.0..0.1);
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                HVec::affine(theta.cos() + r * phi.cos(), theta.sin() + r * phi.sin())
            })
            .collect();
        let monodromy = if twist == 0.0 {
            Mat3::identity()
        } else {
            let mut x = Mat3::zeros();
            for row in x.0.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.random_range(-1.0..1.0);
                }
            }
            let tr = x.trace() / 3.0;
            for i in 0..3 {
                x.0[i][i] -= tr;
            }
            expm(&x.scale(twist)).normalize_to_sl3()?
        };
        let t = rng.random_range(0.2..0.8);
        if !is_strictly_convex(&points) {
            continue;
        }
        let Some((mx, my)) = monodromy.apply(points[0]).dehomogenize() else {
            continue;
        };
        let (px, py) = points[n - 1].dehomogenize().expect("affine point");
        let side = HVec::affine((1.0 - t) * px + t * mx, (1.0 - t) * py + t * my);
        if let Ok(seed) = Seed::new(points, side, monodromy) {
            return Ok(seed);
        }
    }
    Err(Error::InvalidSeed(format!(
        "no generic seed found for rng_seed {rng_seed}"
    )))
}

/// The window [0, N+1] of an arbitrary lift built straight from the seed,
/// with V₀ = (M⁻¹p_{N−1} × M⁻¹p_N) × (M⁻¹p_{N+1} × p₂).
pub fn seed_window(seed: &Seed) -> Result<VertexWindow> {
    let n = seed.n();
    let m_inv = seed.monodromy().inverse()?;
    let v0 = cross(
        cross(m_inv.apply(seed.point(n - 1)), m_inv.apply(seed.point(n))),
        cross(m_inv.apply(seed.point(n + 1)), seed.point(2)),
    );
    if v0.norm() == 0.0 {
        return Err(Error::degenerate(0, "p_0 undefined"));
    }
    let mut vs = vec![v0];
    vs.extend((1..=n + 1).map(|i| seed.point(i)));
    Ok(VertexWindow::new(0, vs))
}

/// Projective window p_lo…p_hi of the spiral (lo ≥ 0), any lift.
pub fn projective_window(seed: &Seed, hi: i64) -> Result<VertexWindow> {
    let base = seed_window(seed)?;
    let n = seed.n() as i64;
    let fwd = (hi - (n + 1)).max(0) as usize;
    let w = extend(seed, &base, fwd, 0)?;
    let mut vs = w.vectors().to_vec();
    for v in vs.iter_mut() {
        *v = v.chart_normalized();
    }
    Ok(VertexWindow::new(0, vs))
}
