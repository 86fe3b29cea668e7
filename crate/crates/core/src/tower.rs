//! Overflow-safe arithmetic for the growth function F(t) = e^t - 1 and its
//! iterates.
//!
//! Potentials along escaping orbits grow like F(F(...F(t))), which leaves the
//! range of `f64` after two or three steps. A [`PotentialTower`] stores the
//! pair `(level m, base r)` for the value F^m(r), so arbitrarily deep iterates
//! stay comparable and invertible without ever forming the giant number.

use std::cmp::Ordering;
use thiserror::Error;

/// Uniform overflow guard: e^t is formed directly only for t <= R_CAP.
/// e^700 is still a normal `f64`, so one level above the cap stays exact.
pub const R_CAP: f64 = 700.0;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum TowerError {
    #[error("negative input outside the domain of F")]
    NegativeInput,
    #[error("value underflowed to zero (log of F^m(0))")]
    Underflow,
    #[error("value not representable at this tower depth")]
    Overflow,
}

/// F(t) = e^t - 1 on t >= 0.
pub fn f(t: f64) -> Result<f64, TowerError> {
    if !(t >= 0.0) {
        return Err(TowerError::NegativeInput);
    }
    Ok(t.exp_m1())
}

/// Inverse of F: y -> ln(1 + y), on y >= 0. `f_inv(f(t)) == t` to machine
/// precision because both sides go through `exp_m1`/`ln_1p`.
pub fn f_inv(y: f64) -> Result<f64, TowerError> {
    if !(y >= 0.0) {
        return Err(TowerError::NegativeInput);
    }
    Ok(y.ln_1p())
}

/// The value F^level(base), stored without evaluating the super-exponential.
///
/// Invariant: `0 <= base < R_CAP`. The canonical ("normal") form produced by
/// [`PotentialTower::normalize`] has the smallest level that keeps the base
/// below `R_CAP`; two towers compare through [`PotentialTower::compare`]
/// regardless of form.
#[derive(Debug, Clone, Copy)]
pub struct PotentialTower {
    level: u32,
    base: f64,
}

impl PotentialTower {
    /// Tower of level 0. Values at or above `R_CAP` are folded down with
    /// `ln_1p`, which represents the same quantity one level up.
    pub fn new(value: f64) -> Result<Self, TowerError> {
        if !(value >= 0.0) {
            return Err(TowerError::NegativeInput);
        }
        let mut level = 0u32;
        let mut base = value;
        while base >= R_CAP {
            base = base.ln_1p();
            level += 1;
        }
        Ok(Self { level, base })
    }

    /// F^level(base) with an explicit level.
    pub fn from_parts(level: u32, base: f64) -> Result<Self, TowerError> {
        let folded = Self::new(base)?;
        Ok(Self {
            level: folded.level + level,
            base: folded.base,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Apply F `steps` more times: only the level moves.
    pub fn apply_f(mut self, steps: u32) -> Self {
        self.level += steps;
        self
    }

    /// Apply the inverse of F `steps` times. Levels are consumed first; once
    /// at level 0 the base itself is pulled down through `ln_1p`.
    pub fn unapply_f(mut self, steps: u32) -> Self {
        for _ in 0..steps {
            if self.level > 0 {
                self.level -= 1;
            } else {
                self.base = self.base.ln_1p();
            }
        }
        self
    }

    /// Canonical form: reduce the level while the base stays below `R_CAP`.
    pub fn normalize(mut self) -> Self {
        while self.level > 0 {
            let lowered = self.base.exp_m1();
            if lowered >= R_CAP {
                break;
            }
            self.base = lowered;
            self.level -= 1;
        }
        self
    }

    /// The represented value as `f64`; +inf when it exceeds the range.
    pub fn value(&self) -> f64 {
        let mut v = self.base;
        for _ in 0..self.level {
            if !v.is_finite() {
                return f64::INFINITY;
            }
            v = v.exp_m1();
        }
        v
    }

    /// Total order on represented values. Both towers are normalized, then
    /// the deeper one's base is lifted level by level; the lift short-circuits
    /// as soon as it passes `R_CAP`, above every legal base.
    pub fn compare(&self, other: &Self) -> Ordering {
        let a = self.normalize();
        let b = other.normalize();
        if a.level == b.level {
            return a.base.partial_cmp(&b.base).unwrap_or(Ordering::Equal);
        }
        let flipped = a.level > b.level;
        let (lo, hi) = if flipped { (b, a) } else { (a, b) };
        let mut lifted = hi.base;
        for _ in 0..(hi.level - lo.level) {
            if lifted >= R_CAP {
                lifted = f64::INFINITY;
                break;
            }
            lifted = lifted.exp_m1();
        }
        let ord = lo.base.partial_cmp(&lifted).unwrap_or(Ordering::Equal);
        if flipped {
            ord.reverse()
        } else {
            ord
        }
    }
}

impl PartialEq for PotentialTower {
    fn eq(&self, other: &Self) -> bool {
        self.compare(other) == Ordering::Equal
    }
}

impl PartialOrd for PotentialTower {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.compare(other))
    }
}

/// ln(F^m(r)) without forming F^m(r). For m >= 1 this is
/// x + ln(1 - e^{-x}) with x = F^{m-1}(r), which keeps every digit even when
/// F^m(r) sits just below the overflow edge.
pub fn safe_log_modulus(t: &PotentialTower) -> Result<f64, TowerError> {
    let t = t.normalize();
    if t.level == 0 {
        if t.base == 0.0 {
            return Err(TowerError::Underflow);
        }
        return Ok(t.base.ln());
    }
    let below = PotentialTower {
        level: t.level - 1,
        base: t.base,
    }
    .value();
    if below == 0.0 {
        return Err(TowerError::Underflow);
    }
    if !below.is_finite() {
        return Err(TowerError::Overflow);
    }
    Ok(below + (-(-below).exp()).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_fixed_point_and_value() {
        assert_eq!(f(0.0).unwrap(), 0.0);
        assert!((f(1.0).unwrap() - 1.718_281_828_459_045).abs() < 1e-15);
        assert_eq!(f(-1.0), Err(TowerError::NegativeInput));
    }

    #[test]
    fn f_inv_round_trip() {
        for i in 0..=70 {
            let t = 10.0 * i as f64;
            let back = f_inv(f(t).unwrap()).unwrap();
            assert!((back - t).abs() <= 1e-12, "t={t} back={back}");
        }
    }

    #[test]
    fn tower_apply_keeps_parts() {
        let t = PotentialTower::new(5.0).unwrap().apply_f(3);
        assert_eq!(t.level(), 3);
        assert_eq!(t.base(), 5.0);
    }

    #[test]
    fn tower_unapply_matches_f_inv() {
        let t = PotentialTower::new(5.0).unwrap().apply_f(2).unapply_f(3);
        // F^2(5) pulled down three times = f_inv(5)
        assert!((t.value() - 5.0f64.ln_1p()).abs() < 1e-14);
    }

    #[test]
    fn tower_normalize_reduces_level() {
        let t = PotentialTower::from_parts(3, 5.0).unwrap().normalize();
        // F(5) = 147.4 < R_CAP, F(147.4) >> R_CAP: one reduction possible
        assert_eq!(t.level(), 2);
        assert!((t.base() - 5.0f64.exp_m1()).abs() < 1e-12);
    }

    #[test]
    fn tower_comparisons_across_levels() {
        let small = PotentialTower::new(650.0).unwrap();
        let big = PotentialTower::from_parts(1, 10.0).unwrap(); // F(10) = 22025
        assert_eq!(small.compare(&big), Ordering::Less);
        let huge = PotentialTower::from_parts(4, 10.0).unwrap();
        assert_eq!(big.compare(&huge), Ordering::Less);
        // near-tie at the same represented value
        let a = PotentialTower::from_parts(1, 5.0).unwrap();
        let b = PotentialTower::new(5.0f64.exp_m1()).unwrap();
        assert_eq!(a.compare(&b), Ordering::Equal);
    }

    #[test]
    fn safe_log_examples() {
        // ln(F(1)) = ln(e - 1)
        let t = PotentialTower::from_parts(1, 1.0).unwrap();
        let got = safe_log_modulus(&t).unwrap();
        assert!((got - (1.0f64.exp() - 1.0).ln()).abs() < 1e-14);
        assert!((got - 0.541_324_854_612_918_1).abs() < 1e-12);

        // ln(F(F(5))) agrees with the direct formula while representable
        let t2 = PotentialTower::from_parts(2, 5.0).unwrap();
        let x = 5.0f64.exp_m1();
        let expect = x + (-(-x).exp()).ln_1p();
        assert!((safe_log_modulus(&t2).unwrap() - expect).abs() < 1e-10);
        assert!((safe_log_modulus(&t2).unwrap() - 147.413_159_102_576_6).abs() < 1e-10);

        // F(0) = 0 has no log
        let z = PotentialTower::from_parts(1, 0.0).unwrap();
        assert_eq!(safe_log_modulus(&z), Err(TowerError::Underflow));
    }

    #[test]
    fn safe_log_deep_tower_overflows_cleanly() {
        let t = PotentialTower::from_parts(4, 10.0).unwrap();
        assert_eq!(safe_log_modulus(&t), Err(TowerError::Overflow));
    }
}
