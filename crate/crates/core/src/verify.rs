//! Property suite run against a single seed: lift, chart identities, gauge
//! relations, shift commutation, scaling, Lax compatibility and spectral
//! invariance.

use serde::{Deserialize, Serialize};

use crate::coords::{derive, extract_coords_with, gauge_a, gauge_b, monodromy_representative, InvariantTable};
use crate::error::Result;
use crate::laxspec::{verify_lax, verify_spectral_invariance};
use crate::lift::{build_lambda_system, canonical_lift_with};
use crate::shiftmap::{
    alpha_beta, scaling_action, tbar_failure_factor, tbar_failure_monomial, verify_equivariance,
    verify_exponent_schedule, verify_shift_commutation, CheckReport,
};
use crate::spiral::Seed;
use crate::tol::{rel_dev, Tolerances};

/// Closed-form chart identities.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Formula vs geometric extraction, and gauge relations.
pub const GEOMETRY_TOL: f64 = 1e-7;

pub const SCALING_SAMPLES: [f64; 3] = [0.3, 1.0, 2.5];
pub const LAX_SAMPLES: [f64; 4] = [-1.0, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub n: usize,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn worst<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter()
        .fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
}

pub fn run_suite(seed: &Seed, tol: &Tolerances) -> Result<SuiteReport> {
    run_suite_with(seed, tol, &LAX_SAMPLES)
}

/// [`run_suite`] with the Lax check sampled at `lax_samples`.
pub fn run_suite_with(seed: &Seed, tol: &Tolerances, lax_samples: &[f64]) -> Result<SuiteReport> {
    let n = seed.n();
    let ni = n as i64;
    let mut checks = Vec::new();

    let ls = canonical_lift_with(seed, tol)?;
    checks.push(CheckReport::new(
        "lift unit determinants",
        ls.unit_det_residual(),
        tol.lift,
    ));
    let det = build_lambda_system(n, &vec![1.0; n + 1]).det();
    checks.push(CheckReport::new(
        "lambda system |det| = 3",
        (det.abs() - 3).abs() as f64,
        0.0,
    ));

    let c = extract_coords_with(&ls, tol)?;
    let dv = derive(&c)?;
    let wide = ls.widen(-8, ni + 8)?;
    let geo = InvariantTable::from_lift(&wide, -5, ni + 5)?;
    let formula = InvariantTable::from_coords(&c, &dv);

    let unit_c = worst((0..ni).map(|i| geo.c(i).map_or(f64::INFINITY, |x| (x - 1.0).abs())));
    checks.push(CheckReport::new("c_i = 1 for i < N", unit_c, tol.lift));
    checks.push(CheckReport::new(
        "a_N = a_1",
        rel_dev(geo.a(ni)?, c.a()[1]),
        IDENTITY_TOL,
    ));
    checks.push(CheckReport::new(
        "c_-1 = a_(N-1)/a_0",
        rel_dev(geo.c(-1)?, c.a()[n - 1] / c.a()[0]),
        IDENTITY_TOL,
    ));
    checks.push(CheckReport::new(
        "c_-1 = A_0 A_1 / c_N",
        rel_dev(dv.c_m1, dv.big_a[0] * dv.big_a[1] / c.c_n()),
        IDENTITY_TOL,
    ));
    checks.push(CheckReport::new(
        "c_(N+1) = c_N / B_N",
        rel_dev(geo.c(ni + 1)?, c.c_n() / (c.c_n() + dv.b_n * c.a()[n - 2])),
        IDENTITY_TOL,
    ));
    let rel_lhs = dv.c_m1 / (1.0 + c.a()[0] * dv.b_m1);
    let rel_rhs = c.c_n() / (dv.big_b_n * (1.0 + c.a()[2] * c.b()[1]));
    checks.push(CheckReport::new(
        "boundary relation chain",
        rel_dev(rel_lhs, rel_rhs),
        IDENTITY_TOL,
    ));

    let mut table_dev = 0.0_f64;
    for i in -1..=ni + 1 {
        let (x, y) = (geo.cba(i)?, formula.cba(i)?);
        table_dev = table_dev
            .max(rel_dev(x.0, y.0))
            .max(rel_dev(x.1, y.1))
            .max(rel_dev(x.2, y.2))
            .max(rel_dev(geo.d(i)?, formula.d(i)?));
    }
    checks.push(CheckReport::new(
        "derived invariants vs geometry",
        table_dev,
        GEOMETRY_TOL,
    ));

    let mut ga = 0.0_f64;
    for i in 1..=4 {
        let rhs = gauge_a(&formula, i)?.inverse()? * formula.k(i - 2)? * gauge_a(&formula, i + 1)?;
        ga = ga.max(geo.k(ni + i)?.max_rel_dev(&rhs));
    }
    checks.push(CheckReport::new("K_(N+i) = A_i^-1 K_(i-2) A_(i+1)", ga, GEOMETRY_TOL));
    let kn = gauge_a(&formula, 1)?.inverse()? * formula.k(-1)? * gauge_a(&formula, 2)?;
    checks.push(CheckReport::new(
        "K_(N+1) closed form",
        kn.max_rel_dev(&formula.k(ni + 1)?),
        GEOMETRY_TOL,
    ));
    let mut gb = 0.0_f64;
    for i in 4..=5.min(ni) {
        let rhs = gauge_b(&formula, i)?.inverse()? * formula.k(ni - i - 1)? * gauge_b(&formula, i - 1)?;
        gb = gb.max(geo.k(-i)?.max_rel_dev(&rhs));
    }
    checks.push(CheckReport::new("K_-i = B_-i^-1 K_(N-i-1) B_(-i+1)", gb, GEOMETRY_TOL));

    let rho0 = ls.frame(0)?;
    let m = monodromy_representative(&c)?;
    let want = rho0.inverse()? * *seed.monodromy() * rho0;
    checks.push(CheckReport::new(
        "monodromy from chart",
        m.max_rel_dev(&want),
        IDENTITY_TOL,
    ));

    let ab = alpha_beta(&c, &dv)?;
    let (r1, r2) = ab.residuals(&c, &dv);
    checks.push(CheckReport::new(
        "alpha, beta defining equations",
        r1.max(r2),
        IDENTITY_TOL,
    ));
    checks.push(CheckReport::new(
        "backward closing factor",
        rel_dev(tbar_failure_factor(&dv), tbar_failure_monomial(&ab)),
        IDENTITY_TOL,
    ));

    checks.push(verify_shift_commutation(seed, tol)?);
    checks.push(verify_exponent_schedule(seed, tol)?);
    for mu in SCALING_SAMPLES {
        checks.push(verify_equivariance(&c, mu, tol)?);
    }
    let mut ab_dev = 0.0_f64;
    for mu in SCALING_SAMPLES {
        let s = scaling_action(&c, mu)?;
        let abs = alpha_beta(&s, &derive(&s)?)?;
        ab_dev = ab_dev
            .max((abs.alpha - ab.alpha).abs() / ab.alpha.abs())
            .max((abs.beta - ab.beta).abs() / ab.beta.abs());
    }
    checks.push(CheckReport::new("alpha, beta scaling invariant", ab_dev, tol.lin));

    let lax = verify_lax(&c, lax_samples, tol)?;
    checks.push(CheckReport {
        check: lax.check,
        max_dev: lax.max_dev,
        pass: lax.pass,
    });
    let spec = verify_spectral_invariance(&c, n + 2, tol)?;
    checks.push(CheckReport {
        check: spec.check,
        max_dev: if spec.support_stable {
            spec.max_dev
        } else {
            f64::INFINITY
        },
        pass: spec.pass,
    });
    checks.push(CheckReport {
        check: "trace support in one class mod 3".into(),
        max_dev: 0.0,
        pass: spec.trace_single_class,
    });

    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport { n, checks, pass })
}
