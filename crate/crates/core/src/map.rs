//! The cosine-family map E(z) = a e^z + b e^{-z} and its derived constants.
//!
//! Everything downstream (strips, ray tails, escape classification) is driven
//! by a handful of constants fixed at construction: the half-log `c` locating
//! the critical points, the log branches `alpha`, `beta`, the critical values
//! `v1`, `v2`, the moduli extremes `K`, `K_max`, `M`, and the threshold
//! potential `T_ab` above which the inverse-branch telescope contracts.

use num_complex::Complex64;
use thiserror::Error;

pub use crate::tower::R_CAP;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum MapError {
    #[error("parameters a and b must both be nonzero")]
    ZeroParameter,
    #[error("exponential overflow ({side:?} real part beyond the cap)")]
    Overflow { side: OverflowSide },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverflowSide {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy)]
pub struct CosineMap {
    pub a: Complex64,
    pub b: Complex64,
    /// c = (1/2) ln(b/a), branch with |Im c| <= pi/2. Critical points are c + i*pi*Z.
    pub c: Complex64,
    /// alpha = ln a, principal branch (|Im| <= pi).
    pub alpha: Complex64,
    /// beta = ln b, principal branch (|Im| <= pi).
    pub beta: Complex64,
    /// Critical values: v1 = E(c) = 2 a e^c and v2 = -v1.
    pub v1: Complex64,
    pub v2: Complex64,
    /// K = min(|a|, |b|).
    pub k_min: f64,
    /// K_max = max(|a|, |b|).
    pub k_max: f64,
    /// M = max(|alpha|, |beta|).
    pub m: f64,
    /// Least T at or above every bracket term plus M + 2 with F(T) >= T + M + 4.
    pub t_ab: f64,
}

impl CosineMap {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self, MapError> {
        if a == Complex64::new(0.0, 0.0) || b == Complex64::new(0.0, 0.0) {
            return Err(MapError::ZeroParameter);
        }
        let c = 0.5 * (b / a).ln();
        let alpha = a.ln();
        let beta = b.ln();
        let v1 = 2.0 * a * c.exp();
        let v2 = -v1;
        let (na, nb) = (a.norm(), b.norm());
        let k_min = na.min(nb);
        let k_max = na.max(nb);
        let m = alpha.norm().max(beta.norm());

        let sum = na + nb;
        let terms = [
            (2.0 * nb / na).sqrt() * sum,
            (2.0 * na / nb).sqrt() * sum,
            8.0 * na * nb,
            1.0,
            0.5 * (2.0 * nb / na).ln(),
            0.5 * (2.0 * na / nb).ln(),
            (4.0 / na).ln(),
            (4.0 / nb).ln(),
        ];
        let start = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + m + 2.0;
        // F(T) - T - M - 4 is strictly increasing, so the least admissible T is
        // either the bracket value itself or the unique root above it.
        let gap = |t: f64| t.exp_m1() - (t + m + 4.0);
        let t_ab = if gap(start) >= 0.0 {
            start
        } else {
            let (mut lo, mut hi) = (start, start + 64.0);
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if gap(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };

        Ok(Self {
            a,
            b,
            c,
            alpha,
            beta,
            v1,
            v2,
            k_min,
            k_max,
            m,
            t_ab,
        })
    }

    /// E(z) = a e^z + b e^{-z}, guarded by the uniform overflow cap.
    pub fn eval(&self, z: Complex64) -> Result<Complex64, MapError> {
        if z.re.abs() > R_CAP {
            return Err(MapError::Overflow {
                side: if z.re > 0.0 {
                    OverflowSide::Positive
                } else {
                    OverflowSide::Negative
                },
            });
        }
        Ok(self.eval_raw(z))
    }

    /// E'(z) = a e^z - b e^{-z}, same guard as [`CosineMap::eval`].
    pub fn deriv(&self, z: Complex64) -> Result<Complex64, MapError> {
        if z.re.abs() > R_CAP {
            return Err(MapError::Overflow {
                side: if z.re > 0.0 {
                    OverflowSide::Positive
                } else {
                    OverflowSide::Negative
                },
            });
        }
        Ok(self.deriv_raw(z))
    }

    /// Unguarded evaluation; callers keep |Re z| a little beyond the cap at
    /// most (e^708 is still finite).
    pub(crate) fn eval_raw(&self, z: Complex64) -> Complex64 {
        self.a * z.exp() + self.b * (-z).exp()
    }

    pub(crate) fn deriv_raw(&self, z: Complex64) -> Complex64 {
        self.a * z.exp() - self.b * (-z).exp()
    }

    /// (8 + 6 pi + 2M) / K: scale of the telescope contraction bound.
    pub fn contraction_scale(&self) -> f64 {
        (8.0 + 6.0 * std::f64::consts::PI + 2.0 * self.m) / self.k_min
    }

    /// Bound on |g^{n+1}(t) - g^n(t)| for depth n >= 1.
    pub fn contraction_bound(&self, n: u32, t: f64) -> f64 {
        self.contraction_scale() / 2f64.powi(n as i32 - 1) * (-t).exp()
    }

    /// C1 = 2 (8 + 6 pi + 2M) / K + 4: constant of the tail asymptote error.
    pub fn c1(&self) -> f64 {
        2.0 * self.contraction_scale() + 4.0
    }

    /// Collision radius used when a pullback approaches a critical value.
    pub fn eps_crit(&self) -> f64 {
        1e-6 * (1.0 + self.v1.norm())
    }
}
