//! The plane partition behind the symbolic dynamics: the cut A through the
//! critical values, the strips R_{n,L/R} tiling its preimage, inverse
//! branches, and orbit itineraries.
//!
//! A is the segment joining the critical values v2 and v1 together with the
//! vertical ray leaving v1 (upward when Im v1 >= Im v2, downward otherwise).
//! The strips are the connected components of the preimage of C \ A. Two
//! exact facts drive the implementation:
//!
//!  * the full preimage of the open segment (v2, v1) is the vertical line
//!    Re z = Re c, so the side letter is decided by Re z against Re c alone
//!    (this refines the sign criterion |E(z)| > |a| + |b| => side = sign Re z);
//!  * the preimages of the ray are curves that flatten onto horizontal
//!    heights theta + 2 pi k far out, so the integer label is read off from
//!    Im z there. Near the ellipse region, where the curves still bend, the
//!    point is carried out along an A-avoiding image path by Newton
//!    continuation and the label is read at the anchor.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

use super::address::{Side, StripSymbol};
use crate::map::{CosineMap, R_CAP};

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum PartitionError {
    #[error("image lies on the partition boundary (distance {distance:.3e})")]
    OnPartitionBoundary { distance: f64 },
    #[error("no inverse branch value found in the requested strip")]
    NotInvertibleHere,
    #[error("point or its image is outside the representable range")]
    Overflow,
    #[error("strip index exceeds the exact integer range")]
    IndexOverflow,
    #[error("continuation to the far-field anchor failed")]
    TraceFailed,
}

/// Direction of the unbounded ray in A.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayDirection {
    Up,
    Down,
}

/// Membership report for the cut A: the distance always comes along so that
/// callers can see how close a point sits to the boundary.
#[derive(Debug, Clone, Copy)]
pub struct Margin {
    pub contains: bool,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PartitionConfig {
    pub map: CosineMap,
    pub orientation: RayDirection,
    /// Relative boundary tolerance: points with dist(E(z), A) below
    /// `boundary_tol * (1 + |E(z)|)` are reported ambiguous, never assigned.
    pub boundary_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitStatus {
    Completed,
    HitBoundary,
    /// Orbit left the representable range after this many symbols — the
    /// expected outcome for escaping points.
    Overflowed(usize),
}

#[derive(Debug, Clone)]
pub struct OrbitAddress {
    pub symbols: Vec<StripSymbol>,
    pub status: OrbitStatus,
}

impl PartitionConfig {
    pub fn new(map: CosineMap) -> Self {
        Self::with_boundary_tol(map, 1e-12)
    }

    pub fn with_boundary_tol(map: CosineMap, boundary_tol: f64) -> Self {
        let orientation = if map.v1.im >= map.v2.im {
            RayDirection::Up
        } else {
            RayDirection::Down
        };
        Self {
            map,
            orientation,
            boundary_tol,
        }
    }

    fn ray_sign(&self) -> f64 {
        match self.orientation {
            RayDirection::Up => 1.0,
            RayDirection::Down => -1.0,
        }
    }

    /// Distance from w to the segment [v2, v1].
    fn dist_segment(&self, w: Complex64) -> f64 {
        let v1 = self.map.v1;
        // guard against |w|^2 overflow; the segment lives inside |v1|
        if w.re.abs() > 1e120 || w.im.abs() > 1e120 {
            return w.re.hypot(w.im) * 0.5;
        }
        let p = self.map.v2;
        let d = v1 - p;
        let len2 = d.norm_sqr();
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((w - p).re * d.re + (w - p).im * d.im) / len2).clamp(0.0, 1.0)
        };
        (w - (p + d.scale(t))).norm()
    }

    /// Distance from w to the vertical ray leaving v1.
    fn dist_ray(&self, w: Complex64) -> f64 {
        let v1 = self.map.v1;
        let s = self.ray_sign();
        let dx = w.re - v1.re;
        if s * (w.im - v1.im) >= 0.0 {
            dx.abs()
        } else {
            dx.hypot(w.im - v1.im)
        }
    }

    pub fn dist_to_a(&self, w: Complex64) -> f64 {
        self.dist_segment(w).min(self.dist_ray(w))
    }

    /// Membership in A with its margin.
    pub fn in_a(&self, w: Complex64) -> Margin {
        let distance = self.dist_to_a(w);
        Margin {
            contains: distance <= self.boundary_tol * (1.0 + w.re.hypot(w.im)),
            distance,
        }
    }

    /// The strip containing z.
    pub fn strip_of(&self, z: Complex64) -> Result<StripSymbol, PartitionError> {
        self.strip_of_with_image(z).map(|(s, _)| s)
    }

    /// Strip of z together with E(z), saving the caller a second evaluation.
    pub fn strip_of_with_image(
        &self,
        z: Complex64,
    ) -> Result<(StripSymbol, Complex64), PartitionError> {
        let w = self.map.eval(z).map_err(|_| PartitionError::Overflow)?;
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(PartitionError::Overflow);
        }
        let margin = self.in_a(w);
        if margin.contains {
            return Err(PartitionError::OnPartitionBoundary {
                distance: margin.distance,
            });
        }
        let side = if z.re > self.map.c.re { Side::R } else { Side::L };
        let n = match self.far_field_index(z, side) {
            Some(n) => n,
            None => {
                let z_end = self.lift_to_anchor(z, w)?;
                self.far_field_index(z_end, side)
                    .ok_or(PartitionError::TraceFailed)?
            }
        };
        if n.abs() >= 9.0e18 {
            return Err(PartitionError::IndexOverflow);
        }
        Ok((StripSymbol::new(n as i64, side), w))
    }

    /// Continuation-free strip index, valid only far out where the boundary
    /// curves hug their asymptotic heights. Returns None when the validity
    /// margin cannot be certified; the caller then falls back to the lift.
    fn far_field_index(&self, z: Complex64, side: Side) -> Option<f64> {
        let (amp, theta) = self.side_frame(side);
        let xr = match side {
            Side::R => z.re,
            Side::L => -z.re,
        };
        if xr <= 0.0 {
            return None;
        }
        let v1n = self.map.v1.norm();
        let delta = if xr > 60.0 {
            0.0
        } else {
            let ex = xr.exp();
            if amp * ex < 8.0 * (v1n + 1.0) {
                return None;
            }
            let ratio2 = (self.map.b / self.map.a)
                .norm()
                .max((self.map.a / self.map.b).norm());
            if ex * ex < 16.0 * ratio2 {
                return None;
            }
            (2.0 * v1n / (amp * ex)).min(1.0).asin() + 4.0 * ratio2 / (ex * ex)
        };
        let u = (z.im - theta) / TAU;
        let lattice_dist = TAU * (u - u.round()).abs();
        if lattice_dist > delta + 0.05 {
            Some(u.floor() + 1.0)
        } else {
            None
        }
    }

    /// (amplitude, asymptotic boundary-curve height in (0, 2 pi]) of a side.
    pub(crate) fn side_frame(&self, side: Side) -> (f64, f64) {
        let d = self.ray_sign();
        match side {
            Side::R => (
                self.map.a.norm(),
                wrap_2pi(d * FRAC_PI_2 - self.map.a.arg()),
            ),
            Side::L => (
                self.map.b.norm(),
                wrap_2pi(self.map.b.arg() - d * FRAC_PI_2),
            ),
        }
    }

    /// Far-field gap index of a height on one side: the label n whose strip
    /// asymptotically occupies heights in (theta + 2pi(n-1), theta + 2pi n).
    pub(crate) fn gap_index(&self, side: Side, height: f64) -> f64 {
        let (_, theta) = self.side_frame(side);
        ((height - theta) / TAU).floor() + 1.0
    }

    /// Carry z out to the far-field anchor by lifting an A-avoiding image
    /// path through Newton continuation. The path never crosses A, so the
    /// result stays in the strip of z.
    fn lift_to_anchor(&self, z: Complex64, w: Complex64) -> Result<Complex64, PartitionError> {
        let path = self.escape_path(w);
        let mut cur_z = z;
        let mut cur_w = w;
        for target in path.into_iter().skip(1) {
            cur_z = self.lift_segment(cur_z, cur_w, target)?;
            cur_w = target;
        }
        Ok(cur_z)
    }

    fn lift_segment(
        &self,
        mut z: Complex64,
        mut w: Complex64,
        target: Complex64,
    ) -> Result<Complex64, PartitionError> {
        let map = &self.map;
        let mut guard = 0usize;
        loop {
            guard += 1;
            if guard > 200_000 {
                return Err(PartitionError::TraceFailed);
            }
            let to_go = target - w;
            let dist_go = to_go.norm();
            if dist_go == 0.0 {
                return Ok(z);
            }
            let dcrit = (w - map.v1).norm().min((w - map.v2).norm());
            let deriv = map.deriv_raw(z);
            let mut cap = 0.2 * dcrit;
            if deriv.norm() > 0.0 {
                cap = cap.min(0.4 * deriv.norm());
            }
            cap = cap.max(1e-13 * (1.0 + w.norm()));
            let mut step = if dist_go <= cap {
                to_go
            } else {
                to_go.scale(cap / dist_go)
            };
            // shrink until the Newton solution stays close to the predictor
            let mut advanced = false;
            for _ in 0..60 {
                let w_next = w + step;
                let pred = if deriv.norm() > 0.0 {
                    z + step / deriv
                } else {
                    z
                };
                if let Some(z_next) = newton_solve(map, w_next, pred, 40) {
                    let moved = (z_next - pred).norm();
                    let expect = (pred - z).norm();
                    if moved <= 0.5f64.max(2.5 * expect) {
                        z = z_next;
                        w = w_next;
                        advanced = true;
                        break;
                    }
                }
                step = step.scale(0.5);
                if step.norm() < 1e-15 * (1.0 + w.norm()) {
                    return Err(PartitionError::TraceFailed);
                }
            }
            if !advanced {
                return Err(PartitionError::TraceFailed);
            }
        }
    }

    /// Waypoints of an image path from w to the anchor on the side of the
    /// plane opposite the ray of A: a straight escape leg along a direction
    /// that misses both pieces of A, then an arc that walks around the ray.
    fn escape_path(&self, w: Complex64) -> Vec<Complex64> {
        let map = &self.map;
        let d = self.ray_sign();
        let v1n = map.v1.norm();
        let r0 = 16.0 * (v1n + 1.0) + 2.0 * (map.a.norm() + map.b.norm()) + 8.0 * map.k_max + 24.0;
        let rm = r0.max(2.0 * w.norm());
        let phi_anchor = -d * FRAC_PI_2;

        let mut path = vec![w];

        // blocked direction arcs as seen from w: one per convex piece of A
        let seg_arc = arc_between((map.v1 - w).arg(), (map.v2 - w).arg());
        let ray_arc = arc_between((map.v1 - w).arg(), d * FRAC_PI_2);
        let dir = free_direction(&[seg_arc, ray_arc]);

        // leg 1: straight until radius rm
        let t_exit = ray_circle_exit(w, dir, rm);
        let p1 = w + Complex64::from_polar(t_exit, dir);
        path.push(p1);

        // leg 2: arc at radius |p1| to the anchor angle, sweeping away from
        // the single angle where the vertical ray of A meets that circle
        let r_arc = p1.norm();
        let phi_start = p1.arg();
        let phi_block = ray_circle_angle(map.v1, d, r_arc).unwrap_or(d * FRAC_PI_2);
        let ccw_span = wrap_2pi(phi_anchor - phi_start);
        let block_off = wrap_2pi(phi_block - phi_start);
        let go_ccw = !(block_off < ccw_span);
        let span = if go_ccw { ccw_span } else { TAU - ccw_span };
        let steps = (span / 0.05).ceil().max(1.0) as usize;
        for i in 1..=steps {
            let phi = if go_ccw {
                phi_start + span * i as f64 / steps as f64
            } else {
                phi_start - span * i as f64 / steps as f64
            };
            path.push(Complex64::from_polar(r_arc, phi));
        }
        path
    }

    /// Inverse branch into the strip `s`: Newton from the first-order seed
    /// ln w - alpha (right) or -ln w + beta (left) placed at the strip's
    /// height, verified against the strip; the two-sheet closed form is the
    /// fallback when Newton stalls or lands elsewhere.
    pub fn inverse_branch(
        &self,
        s: StripSymbol,
        w: Complex64,
    ) -> Result<Complex64, PartitionError> {
        let margin = self.in_a(w);
        if margin.contains {
            return Err(PartitionError::OnPartitionBoundary {
                distance: margin.distance,
            });
        }
        let map = &self.map;
        let target_im = TAU * s.n as f64;
        let ln_w = w.ln();
        let base = match s.side {
            Side::R => ln_w - map.alpha,
            Side::L => -ln_w + map.beta,
        };
        for shift in [0.0, TAU, -TAU] {
            let mut seed = base;
            seed.im += TAU * ((target_im - base.im) / TAU).round() + shift;
            if seed.re.abs() > R_CAP + 8.0 {
                continue;
            }
            if let Some(z) = newton_solve(map, w, seed, 64) {
                if self.strip_matches(z, s) {
                    return Ok(z);
                }
            }
        }
        // closed form: e^z = (w +- sqrt(w^2 - 4ab)) / 2a, one root per sheet
        let [u_right, u_left] = self.preimage_exp_branches(w);
        let u = match s.side {
            Side::R => u_right,
            Side::L => u_left,
        };
        let base = u.ln();
        let k0 = ((target_im - base.im) / TAU).round();
        for dk in [0.0, 1.0, -1.0] {
            let z = base + Complex64::new(0.0, TAU * (k0 + dk));
            if z.re.abs() > R_CAP + 8.0 {
                continue;
            }
            let z = newton_solve(map, w, z, 16).unwrap_or(z);
            if (map.eval_raw(z) - w).norm() <= 1e-10 * (1.0 + w.norm()) && self.strip_matches(z, s)
            {
                return Ok(z);
            }
        }
        Err(PartitionError::NotInvertibleHere)
    }

    /// Both exponential preimage roots of E(z) = w: `[right sheet, left sheet]`.
    /// Computed without cancellation (the small root comes from the product
    /// relation u+ u- = b/a) and without forming w^2 when |w| is huge.
    pub(crate) fn preimage_exp_branches(&self, w: Complex64) -> [Complex64; 2] {
        let map = &self.map;
        if w.norm() > 1e100 {
            return [w / map.a, map.b / w];
        }
        let disc = (w * w - 4.0 * map.a * map.b).sqrt();
        // pick the sign that adds, avoiding cancellation
        let num = if (w.re * disc.re + w.im * disc.im) >= 0.0 {
            w + disc
        } else {
            w - disc
        };
        let u_big = num / (2.0 * map.a);
        let u_other = (map.b / map.a) / u_big;
        // the right sheet is the root with |u| above |e^c| = sqrt|b/a|
        let threshold = (map.b / map.a).norm().sqrt();
        if u_big.norm() >= threshold {
            [u_big, u_other]
        } else {
            [u_other, u_big]
        }
    }

    pub(crate) fn strip_matches(&self, z: Complex64, s: StripSymbol) -> bool {
        let height = TAU * s.n as f64;
        if s.n.unsigned_abs() > 1 << 50 {
            // beyond exact index range: side plus height window
            let side = if z.re > self.map.c.re { Side::R } else { Side::L };
            return side == s.side && (z.im - height).abs() <= 3.0 * PI + height.abs() * 1e-12;
        }
        match self.strip_of(z) {
            Ok(sym) => sym == s,
            Err(_) => false,
        }
    }

    /// Itinerary of the forward orbit: symbols for the longest prefix that
    /// stays off A and inside the representable range.
    pub fn address_of_orbit(&self, z: Complex64, k_max: usize) -> OrbitAddress {
        let mut symbols = Vec::new();
        let mut cur = z;
        for _ in 1..=k_max {
            match self.strip_of_with_image(cur) {
                Ok((s, image)) => {
                    symbols.push(s);
                    cur = image;
                    if cur.re.abs() > R_CAP {
                        let k = symbols.len();
                        return OrbitAddress {
                            symbols,
                            status: OrbitStatus::Overflowed(k),
                        };
                    }
                }
                Err(PartitionError::OnPartitionBoundary { .. }) => {
                    return OrbitAddress {
                        symbols,
                        status: OrbitStatus::HitBoundary,
                    }
                }
                Err(PartitionError::Overflow) | Err(PartitionError::IndexOverflow) => {
                    let k = symbols.len();
                    return OrbitAddress {
                        symbols,
                        status: OrbitStatus::Overflowed(k),
                    };
                }
                Err(_) => {
                    return OrbitAddress {
                        symbols,
                        status: OrbitStatus::HitBoundary,
                    }
                }
            }
        }
        OrbitAddress {
            symbols,
            status: OrbitStatus::Completed,
        }
    }

    /// Force the continuation path even where the closed formula applies;
    /// used to cross-validate the far-field fast path.
    #[doc(hidden)]
    pub fn strip_of_via_lift(&self, z: Complex64) -> Result<StripSymbol, PartitionError> {
        let w = self.map.eval(z).map_err(|_| PartitionError::Overflow)?;
        let margin = self.in_a(w);
        if margin.contains {
            return Err(PartitionError::OnPartitionBoundary {
                distance: margin.distance,
            });
        }
        let side = if z.re > self.map.c.re { Side::R } else { Side::L };
        let z_end = self.lift_to_anchor(z, w)?;
        let n = self
            .far_field_index(z_end, side)
            .ok_or(PartitionError::TraceFailed)?;
        if n.abs() >= 9.0e18 {
            return Err(PartitionError::IndexOverflow);
        }
        Ok(StripSymbol::new(n as i64, side))
    }
}

/// Newton iteration for E(z) = w from a seed; None when it fails to settle.
pub(crate) fn newton_solve(
    map: &CosineMap,
    w: Complex64,
    seed: Complex64,
    max_steps: usize,
) -> Option<Complex64> {
    let scale = 1.0 + w.norm();
    let mut z = seed;
    for _ in 0..max_steps {
        let res = map.eval_raw(z) - w;
        if !res.re.is_finite() || !res.im.is_finite() {
            return None;
        }
        if res.norm() <= 1e-13 * scale {
            return Some(z);
        }
        let d = map.deriv_raw(z);
        if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
            return None;
        }
        let mut step = res / d;
        let n = step.norm();
        if n > 1.5 {
            step = step.scale(1.5 / n);
        }
        z -= step;
        if z.re.abs() > R_CAP + 9.0 {
            return None;
        }
    }
    let res = (map.eval_raw(z) - w).norm();
    if res <= 1e-11 * scale {
        Some(z)
    } else {
        None
    }
}

fn wrap_2pi(theta: f64) -> f64 {
    let mut t = theta % TAU;
    if t <= 0.0 {
        t += TAU;
    }
    t
}

/// The arc of directions between two angles, taken the short way (< pi wide),
/// as (start, width) with start in [0, 2 pi).
fn arc_between(a: f64, b: f64) -> (f64, f64) {
    let a = wrap_2pi(a) % TAU;
    let diff = wrap_2pi(b - a);
    if diff <= PI {
        (a, diff)
    } else {
        (wrap_2pi(b) % TAU, TAU - diff)
    }
}

/// A direction missing every blocked arc, with the most clearance. Two arcs
/// of width < pi each can never cover the circle.
fn free_direction(blocked: &[(f64, f64)]) -> f64 {
    // endpoints of blocked arcs partition the circle; test gap midpoints
    let mut cuts: Vec<f64> = Vec::new();
    for &(s, wdt) in blocked {
        cuts.push(s);
        cuts.push((s + wdt) % TAU);
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let inside = |phi: f64| -> bool {
        blocked
            .iter()
            .any(|&(s, wdt)| wrap_2pi(phi - s) % TAU <= wdt)
    };
    let mut best = (0.0f64, -1.0f64); // (midpoint, clearance)
    let m = cuts.len();
    for i in 0..m {
        let s = cuts[i];
        let e = if i + 1 < m { cuts[i + 1] } else { cuts[0] + TAU };
        let mid = (s + e) / 2.0;
        if !inside(mid) && e - s > best.1 {
            best = (mid, e - s);
        }
    }
    if best.1 > 0.0 {
        best.0
    } else {
        // degenerate fallback: scan
        for k in 0..720 {
            let phi = k as f64 * TAU / 720.0;
            if !inside(phi) {
                return phi;
            }
        }
        0.0
    }
}

/// Positive t with |w + t e^{i dir}| = r (exists for r > |w|).
fn ray_circle_exit(w: Complex64, dir: f64, r: f64) -> f64 {
    let u = Complex64::from_polar(1.0, dir);
    let b = w.re * u.re + w.im * u.im;
    let c = w.norm_sqr() - r * r;
    let disc = (b * b - c).max(0.0).sqrt();
    -b + disc
}

/// Angle at which the vertical ray from v1 (direction sign d) crosses the
/// circle of radius r, when it does.
fn ray_circle_angle(v1: Complex64, d: f64, r: f64) -> Option<f64> {
    let rest = r * r - v1.re * v1.re;
    if rest <= 0.0 {
        return None;
    }
    let y = d * rest.sqrt();
    if d * (y - v1.im) < 0.0 {
        return None;
    }
    Some(Complex64::new(v1.re, y).arg())
}
