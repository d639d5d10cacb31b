//! Radial kernels: the coupled multiquadric `sqrt(1 + (r/c)^2) + r^5` and the
//! plain multiquadric `sqrt(1 + (r/c)^2)`, with closed-form Laplacians.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// Coupled multiquadric.
    Cmq,
    /// Plain multiquadric.
    Mq,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Cmq => "CMQ",
            KernelFamily::Mq => "MQ",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cmq" => Ok(KernelFamily::Cmq),
            "mq" => Ok(KernelFamily::Mq),
            other => Err(Error::InvalidArgument(format!("unknown kernel family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    shape: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, shape: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::InvalidArgument(format!("shape parameter must be positive, got {shape}")));
        }
        Ok(Self { family, shape })
    }

    pub fn cmq(shape: f64) -> Result<Self> {
        Self::new(KernelFamily::Cmq, shape)
    }

    pub fn mq(shape: f64) -> Result<Self> {
        Self::new(KernelFamily::Mq, shape)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }
}

/// Differential operator applied to the kernel in its first argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Identity,
    Laplacian,
}

#[inline]
fn mq_factor(r: f64, c: f64) -> f64 {
    let q = r / c;
    (1.0 + q * q).sqrt()
}

pub fn kernel_value(spec: KernelSpec, r: f64) -> f64 {
    let mq = mq_factor(r, spec.shape);
    match spec.family {
        KernelFamily::Mq => mq,
        KernelFamily::Cmq => {
            let r2 = r * r;
            mq + r2 * r2 * r
        }
    }
}

/// Laplacian in R^d of `x -> phi(|x - y|)`, as a function of `r = |x - y|`.
///
/// The multiquadric part is `phi'' + (d-1)/r phi'`, which reduces to
/// `1/(c^2 m^3) + (d-1)/(c^2 m)` with `m = sqrt(1 + (r/c)^2)`; that form is
/// already regular at `r = 0`, where it equals `d / c^2`. The quintic part
/// contributes `5 (d + 3) r^3`.
pub fn kernel_laplacian(spec: KernelSpec, r: f64, dim: usize) -> f64 {
    let c2 = spec.shape * spec.shape;
    let mq_part = if r == 0.0 {
        dim as f64 / c2
    } else {
        let m = mq_factor(r, spec.shape);
        1.0 / (c2 * m * m * m) + (dim as f64 - 1.0) / (c2 * m)
    };
    match spec.family {
        KernelFamily::Mq => mq_part,
        KernelFamily::Cmq => mq_part + 5.0 * (dim as f64 + 3.0) * r * r * r,
    }
}

#[inline]
pub fn apply_operator(spec: KernelSpec, op: Operator, r: f64, dim: usize) -> f64 {
    match op {
        Operator::Identity => kernel_value(spec, r),
        Operator::Laplacian => kernel_laplacian(spec, r, dim),
    }
}

/// Central finite-difference Laplacian of `x -> phi(|x|)` evaluated at a
/// point at distance `r` from the kernel center along direction `angle`
/// (ignored in 1D). Used to cross-check [`kernel_laplacian`].
pub fn fd_laplacian(spec: KernelSpec, r: f64, dim: usize, angle: f64, step: f64) -> f64 {
    let h2 = step * step;
    match dim {
        1 => {
            let f = |x: f64| kernel_value(spec, x.abs());
            (f(r + step) - 2.0 * f(r) + f(r - step)) / h2
        }
        _ => {
            let (x, y) = (r * angle.cos(), r * angle.sin());
            let f = |x: f64, y: f64| kernel_value(spec, x.hypot(y));
            (f(x + step, y) + f(x - step, y) + f(x, y + step) + f(x, y - step) - 4.0 * f(x, y)) / h2
        }
    }
}

/// Worst relative discrepancy `|analytic - fd| / (1 + |analytic|)` between a
/// Laplacian implementation and central finite differences, over `samples`
/// draws of `(r, c, d)` taken from `draw`.
///
/// `draw` returns uniform numbers in `[0, 1)`; `r` is mapped into
/// `(1e-3, 3)`, `c` into `(0.1, 5)` and `d` alternates between 1 and 2.
pub fn laplacian_discrepancy<L, D>(family: KernelFamily, samples: usize, mut draw: D, laplacian: L) -> f64
where
    L: Fn(KernelSpec, f64, usize) -> f64,
    D: FnMut() -> f64,
{
    const STEP: f64 = 1e-4;
    let mut worst = 0.0f64;
    for s in 0..samples {
        let r = 1e-3 + (3.0 - 1e-3) * draw();
        let c = 0.1 + (5.0 - 0.1) * draw();
        let angle = std::f64::consts::TAU * draw();
        let dim = 1 + s % 2;
        let spec = KernelSpec { family, shape: c };
        let analytic = laplacian(spec, r, dim);
        let numeric = fd_laplacian(spec, r, dim, angle, STEP);
        worst = worst.max((analytic - numeric).abs() / (1.0 + analytic.abs()));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cmq_values() {
        let c1 = KernelSpec::cmq(1.0).unwrap();
        assert_eq!(kernel_value(KernelSpec::cmq(0.3).unwrap(), 0.0), 1.0);
        assert_relative_eq!(kernel_value(c1, 1.0), 2f64.sqrt() + 1.0, max_relative = 1e-15);
        assert_relative_eq!(kernel_value(KernelSpec::cmq(0.8).unwrap(), 2.0), 7.25f64.sqrt() + 32.0, max_relative = 1e-15);
        assert_relative_eq!(kernel_value(KernelSpec::cmq(0.8).unwrap(), 2.0), 34.69258241, max_relative = 1e-9);
    }

    #[test]
    fn laplacian_limits() {
        let spec = KernelSpec::cmq(0.8).unwrap();
        assert_relative_eq!(kernel_laplacian(spec, 0.0, 2), 3.125, max_relative = 1e-15);
        assert_relative_eq!(apply_operator(spec, Operator::Laplacian, 0.0, 1), 1.0 / 0.64, max_relative = 1e-15);
        assert_eq!(apply_operator(spec, Operator::Identity, 0.0, 1), 1.0);
        // continuity across the removable singularity
        assert_relative_eq!(kernel_laplacian(spec, 1e-9, 2), 3.125, max_relative = 1e-12);
    }

    #[test]
    fn laplacian_closed_forms_match_finite_differences() {
        let c1 = KernelSpec::cmq(1.0).unwrap();
        let m1 = KernelSpec::mq(1.0).unwrap();
        let fd1 = fd_laplacian(c1, 1.0, 1, 0.0, 1e-5);
        let fd2 = fd_laplacian(c1, 1.0, 2, 0.7, 1e-4);
        let fdm = fd_laplacian(m1, 1.0, 1, 0.0, 1e-5);
        // values frozen from the finite-difference oracle
        assert_relative_eq!(fd1, 20.35355339, max_relative = 1e-6);
        assert_relative_eq!(fd2, 26.06066017, max_relative = 1e-6);
        assert_relative_eq!(fdm, 0.3535533906, max_relative = 1e-5);
        assert_relative_eq!(kernel_laplacian(c1, 1.0, 1), fd1, max_relative = 1e-6);
        assert_relative_eq!(kernel_laplacian(c1, 1.0, 2), fd2, max_relative = 1e-6);
        assert_relative_eq!(apply_operator(m1, Operator::Laplacian, 1.0, 1), 0.5f64.powf(1.5), max_relative = 1e-15);
    }

    #[test]
    fn cmq_minus_mq_is_quintic() {
        for &r in &[0.0, 0.1, 0.7, 1.3, 2.9] {
            let d = kernel_value(KernelSpec::cmq(0.8).unwrap(), r) - kernel_value(KernelSpec::mq(0.8).unwrap(), r);
            assert_relative_eq!(d, r.powi(5), max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_nonpositive_shape() {
        assert!(KernelSpec::cmq(0.0).is_err());
        assert!(KernelSpec::mq(-1.0).is_err());
        assert!(KernelSpec::mq(f64::NAN).is_err());
        assert!("xyz".parse::<KernelFamily>().is_err());
        assert_eq!("cmq".parse::<KernelFamily>().unwrap(), KernelFamily::Cmq);
    }
}
