use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative error for algebraic identities.
    pub lin: f64,
    /// Projective equality after normalization.
    pub proj: f64,
    /// Relative scale below which a quantity counts as degenerate.
    pub deg: f64,
    /// Residual of the unit-determinant constraints on a canonical lift.
    pub lift: f64,
    /// Closed-form vs geometric shift.
    pub shift: f64,
    /// Spectral coefficients, relative to the largest of the same r-degree.
    pub spec: f64,
    /// Laurent coefficients below this fraction of the max are dropped.
    pub trim: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lin: 1e-10,
            proj: 1e-8,
            deg: 1e-12,
            lift: 1e-8,
            shift: 1e-7,
            spec: 1e-6,
            trim: 1e-13,
        }
    }
}

/// Mixed absolute/relative deviation: relative above 1, absolute below.
pub fn rel_dev(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs()).max(1.0);
    (x - y).abs() / scale
}

/// Largest [`rel_dev`] over paired slices; `INFINITY` on length mismatch.
pub fn max_rel_dev(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.len() != ys.len() {
        return f64::INFINITY;
    }
    xs.iter().zip(ys).map(|(&x, &y)| rel_dev(x, y)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_deviation() {
        assert_eq!(rel_dev(1e-9, 0.0), 1e-9);
        assert!((rel_dev(1000.0, 1001.0) - 1.0 / 1001.0).abs() < 1e-15);
        assert_eq!(max_rel_dev(&[1.0], &[1.0, 2.0]), f64::INFINITY);
    }
}
