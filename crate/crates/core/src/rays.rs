//! Dynamic rays: tail construction by the inverse-branch telescope, sampling,
//! pullback extension below the tail threshold, and orbit-separation checks.
//!
//! The tail of the ray with address s is the limit of
//!
//! ```text
//! g^n(t) = L_{s_1} ( L_{s_2} ( ... L_{s_n}( +-F^n(t) + 2 pi i s_{n+1} ) ... ) )
//! ```
//!
//! where the sign is + for a right symbol s_{n+1} and - for a left one. Each
//! added level multiplies the correction by at most 1/2, and by e^{-F^{n-1}(t)}
//! in practice, so a handful of levels reaches machine precision. Deepening
//! stops once the innermost potential passes the overflow cap; at that point
//! deeper iterates are fixed to the last computed value.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

use crate::classify::r_h;
use crate::map::{CosineMap, R_CAP};
use crate::symbolic::{
    newton_solve, tail_threshold, AddressError, ExternalAddress, PartitionConfig, PartitionError,
    Side, StripSymbol,
};

#[derive(Debug, Error)]
pub enum RayError {
    #[error("potential {t} is below the tail threshold {threshold}")]
    BelowTailThreshold { t: f64, threshold: f64 },
    #[error("inverse branch failed: {0}")]
    BranchFailure(#[from] PartitionError),
    #[error("address error: {0}")]
    Address(#[from] AddressError),
    #[error("pullback value approached a critical value at potential {t:.6e}")]
    SingularValueOnRay { t: f64 },
    #[error("nearest-preimage selection ambiguous at potential {t:.6e}")]
    ContinuityBreak { t: f64 },
    #[error("sample itinerary disagrees with the address at position {k}")]
    AddressMismatch { k: usize },
    #[error("invalid potential range")]
    InvalidPotential,
    #[error("potential left the representable range during extension")]
    PotentialOverflow,
}

/// One computed ray point.
#[derive(Debug, Clone, Copy)]
pub struct RaySample {
    /// Potential t.
    pub t: f64,
    /// The point g_s(t).
    pub z: Complex64,
    /// Telescope depth used (0 when the asymptote itself is exact).
    pub depth: u32,
    /// Upper estimate of the remaining error at acceptance: the measured
    /// last step |g^n - g^{n-1}| capped by the analytic remaining-tail bound
    /// at the accepted depth. The true residual after the overflow cap is far
    /// smaller (one extra level divides it by F^{depth}(t)).
    pub err_est: f64,
    /// Whether the sample came from pullback extension below the threshold.
    pub via_pullback: bool,
}

impl RaySample {
    pub const CSV_HEADER: &'static str = "t,re,im,depth,err_est,via_pullback";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{},{:.16e},{}",
            self.t, self.z.re, self.z.im, self.depth, self.err_est, self.via_pullback
        )
    }
}

/// An ordered sampling of a dynamic ray (t strictly increasing).
#[derive(Debug, Clone)]
pub struct Ray {
    pub addr: ExternalAddress,
    pub map: CosineMap,
    pub samples: Vec<RaySample>,
    pub t_min_reached: f64,
    /// The explicit tail-asymptote constant 2(8 + 6 pi + 2M)/K + 4.
    pub c1: f64,
}

impl Ray {
    pub fn min_t(&self) -> f64 {
        self.samples.first().map(|s| s.t).unwrap_or(f64::INFINITY)
    }

    pub fn max_t(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(f64::NEG_INFINITY)
    }

    /// Pairwise distinctness of the sampled points.
    pub fn is_injective(&self, tol: f64) -> bool {
        for i in 0..self.samples.len() {
            for j in (i + 1)..self.samples.len() {
                if (self.samples[i].z - self.samples[j].z).norm() <= tol {
                    return false;
                }
            }
        }
        true
    }

    /// Orbit-separation report between two potentials of this ray.
    pub fn separation_check(
        &self,
        t1: f64,
        t2: f64,
        k_max: usize,
    ) -> Result<SeparationReport, RayError> {
        separation_check(&self.map, &self.addr, t1, t2, k_max, TAU)
    }
}

/// Telescope trace: one record per computed depth, including every
/// intermediate branch value, for error-budget verification.
#[derive(Debug, Clone)]
pub struct TailDiagnostics {
    pub records: Vec<DepthRecord>,
}

#[derive(Debug, Clone)]
pub struct DepthRecord {
    pub depth: u32,
    pub value: Complex64,
    /// |g^n - g^{n-1}|, NaN on the depth-0 record.
    pub step_from_prev: f64,
    /// Intermediate branch values (level, point, potential F^{level-1}(t)).
    pub intermediates: Vec<LevelPoint>,
}

#[derive(Debug, Clone, Copy)]
pub struct LevelPoint {
    pub level: u32,
    pub z: Complex64,
    pub potential: f64,
}

/// First-order form of the tail: +-t -+ (alpha or beta) + 2 pi i s_1, plus
/// the half-turn the second symbol's sheet forces. A left second symbol sends
/// the inner argument to the negative real direction, which shifts the height
/// by pi; the sign of that shift is fixed by which candidate falls inside the
/// strip of s_1.
pub fn tail_asymptote(
    map: &CosineMap,
    addr: &ExternalAddress,
    t: f64,
) -> Result<Complex64, RayError> {
    let cfg = PartitionConfig::new(*map);
    let s1 = addr.symbol_at(1)?;
    let base = match s1.side {
        Side::R => Complex64::new(t, 0.0) - map.alpha,
        Side::L => Complex64::new(-t, 0.0) + map.beta,
    } + Complex64::new(0.0, TAU * s1.n as f64);
    if addr.side_at(2) == Side::R {
        return Ok(base);
    }
    let n1 = s1.n as f64;
    for cand in [base.im + PI, base.im - PI] {
        if cfg.gap_index(s1.side, cand) == n1 {
            return Ok(Complex64::new(base.re, cand));
        }
    }
    Ok(Complex64::new(base.re, base.im + PI))
}

/// The point g_s(t) on the ray tail, t at or above the tail threshold.
pub fn tail_point(
    map: &CosineMap,
    addr: &ExternalAddress,
    t: f64,
    tol: f64,
) -> Result<RaySample, RayError> {
    tail_point_traced(map, addr, t, tol).map(|(s, _)| s)
}

/// As [`tail_point`], returning the full telescope trace.
pub fn tail_point_traced(
    map: &CosineMap,
    addr: &ExternalAddress,
    t: f64,
    tol: f64,
) -> Result<(RaySample, TailDiagnostics), RayError> {
    let threshold = tail_threshold(map, addr);
    if !(t >= threshold) {
        return Err(RayError::BelowTailThreshold { t, threshold });
    }
    telescope(map, addr, t, tol)
}

/// Inverse-branch telescope at potential t. The threshold precondition is the
/// caller's: the pullback machinery evaluates shifted addresses right at
/// their thresholds, where the public entry point would reject rounding dust.
fn telescope(
    map: &CosineMap,
    addr: &ExternalAddress,
    t: f64,
    tol: f64,
) -> Result<(RaySample, TailDiagnostics), RayError> {
    let cfg = PartitionConfig::new(*map);
    let g0 = Complex64::new(addr.side_at(1).sign() * t, addr.offset_2pi(1));
    let mut records = vec![DepthRecord {
        depth: 0,
        value: g0,
        step_from_prev: f64::NAN,
        intermediates: Vec::new(),
    }];
    let mut pots = vec![t]; // pots[k] = F^k(t)
    let mut best = (g0, 0u32, f64::NAN);
    // the innermost branch value sits near F^{n-1}(t), so it remains
    // representable one level after its argument F^n(t) stops being so;
    // beyond that the next correction is below e^{-R_CAP} of the value
    let value_cap = 1e290 * map.k_min.min(1.0);
    for n in 1u32..=60 {
        let p_inner = pots[(n - 1) as usize]; // F^{n-1}(t)
        if !p_inner.is_finite() || p_inner > value_cap {
            break;
        }
        let side_in = addr.side_at(n as usize + 1);
        let mut z = if p_inner <= R_CAP {
            let f_n = p_inner.exp_m1(); // F^n(t), finite (<= e^700)
            pots.push(f_n);
            let s_n = addr.symbol_at(n as usize)?;
            let off_in = addr.offset_2pi(n as usize + 1);
            inner_branch(map, &cfg, s_n, p_inner, f_n, side_in.sign(), off_in)?
        } else {
            pots.push(f64::INFINITY);
            inner_branch_log_space(&cfg, addr, n as usize, p_inner, side_in.sign())
        };
        let mut intermediates = vec![LevelPoint {
            level: n,
            z,
            potential: p_inner,
        }];
        for k in (1..n).rev() {
            let s_k = addr.symbol_at(k as usize)?;
            z = cfg.inverse_branch(s_k, z)?;
            intermediates.push(LevelPoint {
                level: k,
                z,
                potential: pots[(k - 1) as usize],
            });
        }
        let step = (z - best.0).norm();
        records.push(DepthRecord {
            depth: n,
            value: z,
            step_from_prev: step,
            intermediates,
        });
        best = (z, n, step);
        if step < tol {
            break;
        }
    }
    // remaining error after depth n is at most the sum of the deeper
    // contraction bounds, i.e. twice the bound of the next transition
    let analytic = 2.0 * map.contraction_bound(best.1, t);
    let err_est = if best.2.is_nan() {
        analytic
    } else {
        best.2.min(analytic)
    };
    Ok((
        RaySample {
            t,
            z: best.0,
            depth: best.1,
            err_est,
            via_pullback: false,
        },
        TailDiagnostics { records },
    ))
}

/// Innermost branch L_{s_n}(+-F^n(t) + 2 pi i s_{n+1}), seeded in log space:
/// ln|w| is assembled from F^{n-1}(t) + ln(1 - e^{-F^{n-1}(t)}) so no digit is
/// lost when F^n(t) sits near the overflow cap, then one Newton polish.
fn inner_branch(
    map: &CosineMap,
    cfg: &PartitionConfig,
    s_n: StripSymbol,
    p_inner: f64,
    f_n: f64,
    sign: f64,
    off: f64,
) -> Result<Complex64, RayError> {
    let w = Complex64::new(sign * f_n, off);
    let ln_fn = if p_inner > 0.0 {
        p_inner + (-(-p_inner).exp()).ln_1p()
    } else {
        f_n.ln()
    };
    let ratio = off / f_n;
    let ln_abs = ln_fn + 0.5 * (ratio * ratio).ln_1p();
    let arg = off.atan2(sign * f_n);
    let ln_w = Complex64::new(ln_abs, arg);
    let base = match s_n.side {
        Side::R => ln_w - map.alpha,
        Side::L => -ln_w + map.beta,
    };
    let target_im = TAU * s_n.n as f64;
    for shift in [0.0, TAU, -TAU] {
        let mut seed = base;
        seed.im += TAU * ((target_im - base.im) / TAU).round() + shift;
        if let Some(z) = newton_solve(map, w, seed, 64) {
            if cfg.strip_matches(z, s_n) {
                return Ok(z);
            }
        }
    }
    cfg.inverse_branch(s_n, w).map_err(RayError::BranchFailure)
}

/// Innermost branch when F^n(t) is too large to materialize but
/// F^{n-1}(t) is not: the first-order inverse is exact to working precision
/// there (every neglected term is below e^{-2 R_CAP} relatively), so the
/// value is assembled purely in log space and not polished. The 2 pi i sheet
/// is the one whose height falls in the asymptotic band of the target strip;
/// for heights past exact-integer range the half-turn is sub-ulp anyway and
/// plain rounding stands.
fn inner_branch_log_space(
    cfg: &PartitionConfig,
    addr: &ExternalAddress,
    n: usize,
    p_inner: f64,
    sign: f64,
) -> Complex64 {
    let map = &cfg.map;
    let side_n = addr.side_at(n);
    // w = +-F^n(t) (1 + i rho), rho = 2 pi s_{n+1} / F^n(t), |rho| < 1/2
    let ln_fn = p_inner + (-(-p_inner).exp()).ln_1p();
    let rho = (addr.ln_abs_offset_2pi(n + 1) - ln_fn).exp() * addr.symbol_sign(n + 1);
    let ln_abs = ln_fn + 0.5 * (rho * rho).ln_1p();
    let arg = rho.atan2(sign);
    let ln_w = Complex64::new(ln_abs, arg);
    let base = match side_n {
        Side::R => ln_w - map.alpha,
        Side::L => -ln_w + map.beta,
    };
    let target_im = addr.offset_2pi(n); // already signed
    let k0 = ((target_im - base.im) / TAU).round();
    if target_im.abs() < 1e12 {
        let target_n = (target_im / TAU).round();
        for dk in [0.0, 1.0, -1.0] {
            let im = base.im + TAU * (k0 + dk);
            if cfg.gap_index(side_n, im) == target_n {
                return Complex64::new(base.re, im);
            }
        }
    }
    Complex64::new(base.re, base.im + TAU * k0)
}

/// Sample the tail at `count` potentials between t_lo and t_hi, geometrically
/// spaced in t - t_s, verifying each sample's realized itinerary against the
/// address.
pub fn sample_tail(
    map: &CosineMap,
    addr: &ExternalAddress,
    t_lo: f64,
    t_hi: f64,
    count: usize,
    tol: f64,
) -> Result<Ray, RayError> {
    let threshold = tail_threshold(map, addr);
    if !(t_lo >= threshold) {
        return Err(RayError::BelowTailThreshold {
            t: t_lo,
            threshold,
        });
    }
    if !(t_hi > t_lo) || count < 2 {
        return Err(RayError::InvalidPotential);
    }
    let t_s = addr.minimal_potential();
    let lo = t_lo - t_s;
    let hi = t_hi - t_s;
    let rho = (hi / lo).powf(1.0 / (count - 1) as f64);
    let cfg = PartitionConfig::new(*map);
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let t = t_s + lo * rho.powi(i as i32);
        let sample = tail_point(map, addr, t, tol)?;
        verify_itinerary(&cfg, addr, sample.z)?;
        samples.push(sample);
    }
    Ok(Ray {
        addr: addr.clone(),
        map: *map,
        t_min_reached: samples.first().map(|s| s.t).unwrap_or(t_lo),
        samples,
        c1: map.c1(),
    })
}

/// Compare a point's realized itinerary with the address, as far as both are
/// defined. Boundary hits end the comparison without failing it.
fn verify_itinerary(
    cfg: &PartitionConfig,
    addr: &ExternalAddress,
    z: Complex64,
) -> Result<(), RayError> {
    let oa = cfg.address_of_orbit(z, 24);
    for (i, s) in oa.symbols.iter().enumerate() {
        match addr.symbol_at(i + 1) {
            Ok(expect) => {
                if *s != expect {
                    return Err(RayError::AddressMismatch { k: i + 1 });
                }
            }
            Err(_) => break,
        }
    }
    Ok(())
}

/// Step control for the pullback descent.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    /// Reject a step once consecutive ray points move farther than this.
    pub max_plane_step: f64,
    pub initial_t_step: f64,
    pub min_t_step: f64,
    /// Telescope tolerance for the top-of-chain tail points.
    pub tol: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            max_plane_step: 0.5,
            initial_t_step: 0.1,
            min_t_step: 1e-9,
            tol: 1e-12,
        }
    }
}

struct Chain {
    t: f64,
    /// levels[j] = g_{sigma^j s}(F^j(t)); filled on demand for j above the
    /// pullback level.
    levels: Vec<Option<Complex64>>,
    top_depth: u32,
    top_err: f64,
}

struct Extender<'a> {
    map: CosineMap,
    cfg: PartitionConfig,
    addr: &'a ExternalAddress,
    shifted: Vec<ExternalAddress>,
    thresholds: Vec<f64>,
    tol: f64,
    max_level: usize,
}

impl<'a> Extender<'a> {
    fn new(map: CosineMap, addr: &'a ExternalAddress, tol: f64) -> Self {
        Self {
            map,
            cfg: PartitionConfig::new(map),
            addr,
            shifted: Vec::new(),
            thresholds: Vec::new(),
            tol,
            max_level: 60,
        }
    }

    fn shifted_addr(&mut self, j: usize) -> Result<&ExternalAddress, RayError> {
        while self.shifted.len() <= j {
            let next = match self.shifted.last() {
                None => self.addr.clone(),
                Some(prev) => prev.shift()?,
            };
            self.shifted.push(next);
        }
        Ok(&self.shifted[j])
    }

    fn threshold(&mut self, j: usize) -> Result<f64, RayError> {
        while self.thresholds.len() <= j {
            let jj = self.thresholds.len();
            self.shifted_addr(jj)?;
            let t = tail_threshold(&self.map, &self.shifted[jj]);
            self.thresholds.push(t);
        }
        Ok(self.thresholds[j])
    }

    /// F^j(t) ladder (stops at the first non-finite value).
    fn potential_ladder(&self, t: f64, upto: usize) -> Vec<f64> {
        let mut pots = vec![t];
        for _ in 0..upto {
            let next = pots.last().unwrap().exp_m1();
            if !next.is_finite() {
                break;
            }
            pots.push(next);
        }
        pots
    }

    /// Least level n with F^n(t) at or above the shifted threshold.
    fn choose_level(&mut self, pots: &[f64]) -> Result<usize, RayError> {
        for (n, &p) in pots.iter().enumerate() {
            if n >= self.max_level {
                break;
            }
            if p >= self.threshold(n)? {
                return Ok(n);
            }
        }
        Err(RayError::PotentialOverflow)
    }

    /// Fill a missing reference level of the previous chain; the previous
    /// potential is always in the tail zone at that level.
    fn fill_level(&mut self, chain: &mut Chain, j: usize) -> Result<Complex64, RayError> {
        if let Some(Some(z)) = chain.levels.get(j) {
            return Ok(*z);
        }
        let pots = self.potential_ladder(chain.t, j);
        let p_j = *pots.get(j).ok_or(RayError::PotentialOverflow)?;
        let addr_j = self.shifted_addr(j)?.clone();
        let (sample, _) = telescope(&self.map, &addr_j, p_j, self.tol)?;
        if chain.levels.len() <= j {
            chain.levels.resize(j + 1, None);
        }
        chain.levels[j] = Some(sample.z);
        Ok(sample.z)
    }

    /// Build the pullback chain at potential t, tracking continuity against
    /// the previous chain where the potential has dropped below the threshold.
    fn build_chain(&mut self, t: f64, prev: &mut Chain) -> Result<Chain, RayError> {
        let eps = self.map.eps_crit();
        let pots = self.potential_ladder(t, self.max_level);
        let n = self.choose_level(&pots)?;
        let addr_n = self.shifted_addr(n)?.clone();
        let (top, _) = telescope(&self.map, &addr_n, pots[n], self.tol)?;
        let mut levels: Vec<Option<Complex64>> = vec![None; n + 1];
        levels[n] = Some(top.z);
        for j in (0..n).rev() {
            let w = levels[j + 1].unwrap();
            if (w - self.map.v1).norm() < eps || (w - self.map.v2).norm() < eps {
                return Err(RayError::SingularValueOnRay { t: pots[j + 1] });
            }
            // below the top level the potential sits under the shifted
            // threshold (n was minimal), so branch choice must come from
            // continuity against the previous chain, never from strips
            let reference = self.fill_level(prev, j)?;
            let z = self.nearest_preimage(w, reference, pots[j])?;
            if (z - reference).norm() > 4.0 {
                return Err(RayError::ContinuityBreak { t: pots[j] });
            }
            levels[j] = Some(z);
        }
        Ok(Chain {
            t,
            levels,
            top_depth: top.depth,
            top_err: top.err_est,
        })
    }

    /// Preimage of w closest to the reference point, rejected as ambiguous
    /// when the runner-up is within a factor two in distance.
    fn nearest_preimage(
        &self,
        w: Complex64,
        reference: Complex64,
        t_level: f64,
    ) -> Result<Complex64, RayError> {
        let [u_right, u_left] = self.cfg.preimage_exp_branches(w);
        let mut cands: Vec<Complex64> = Vec::with_capacity(6);
        for u in [u_right, u_left] {
            let base = u.ln();
            let k0 = ((reference.im - base.im) / TAU).round();
            for dk in [-1.0, 0.0, 1.0] {
                cands.push(base + Complex64::new(0.0, TAU * (k0 + dk)));
            }
        }
        cands.sort_by(|p, q| {
            (p - reference)
                .norm()
                .partial_cmp(&(q - reference).norm())
                .unwrap()
        });
        let d0 = (cands[0] - reference).norm();
        let d1 = (cands[1] - reference).norm();
        if d1 < 2.0 * d0 {
            let crit = (w - self.map.v1).norm().min((w - self.map.v2).norm());
            return Err(if crit < 1e-3 * (1.0 + self.map.v1.norm()) {
                RayError::SingularValueOnRay { t: t_level }
            } else {
                RayError::ContinuityBreak { t: t_level }
            });
        }
        Ok(newton_solve(&self.map, w, cands[0], 24).unwrap_or(cands[0]))
    }
}

/// Extend a sampled ray to lower potentials by continuity-tracked pullback.
///
/// The descent is adaptive: potentials step down so that consecutive ray
/// points move less than `ctrl.max_plane_step` in the plane. If the step
/// underflows before reaching `t_target` (which happens close to the minimal
/// potential), the extension stops there and `t_min_reached` records the
/// achieved potential; approaching a critical value is an error.
pub fn extend_ray(ray: &Ray, t_target: f64, ctrl: &StepControl) -> Result<Ray, RayError> {
    let t_s = ray.addr.minimal_potential();
    if !(t_target > t_s) || !(t_target < ray.min_t()) || ray.samples.is_empty() {
        return Err(RayError::InvalidPotential);
    }
    let map = ray.map;
    let mut ext = Extender::new(map, &ray.addr, ctrl.tol);
    let t_start = ray.min_t();
    let mut prev = Chain {
        t: t_start,
        levels: vec![Some(ray.samples[0].z)],
        top_depth: ray.samples[0].depth,
        top_err: ray.samples[0].err_est,
    };
    let mut new_samples: Vec<RaySample> = Vec::new();
    let mut dt = ctrl.initial_t_step.min((t_start - t_target) * 0.5).max(ctrl.min_t_step);
    let mut t_cur = t_start;
    while t_cur > t_target {
        let t_next = (t_cur - dt).max(t_target);
        match ext.build_chain(t_next, &mut prev) {
            Ok(chain) => {
                let z0 = chain.levels[0].unwrap();
                let moved = (z0 - prev.levels[0].unwrap()).norm();
                if moved > ctrl.max_plane_step && dt > ctrl.min_t_step {
                    dt = (dt * 0.5).max(ctrl.min_t_step * 0.5);
                    if dt < ctrl.min_t_step {
                        break;
                    }
                    continue;
                }
                new_samples.push(RaySample {
                    t: t_next,
                    z: z0,
                    depth: chain.top_depth,
                    err_est: chain.top_err,
                    via_pullback: true,
                });
                t_cur = t_next;
                prev = chain;
                if moved < 0.2 * ctrl.max_plane_step {
                    dt = (dt * 1.6).min(ctrl.initial_t_step);
                }
            }
            Err(RayError::ContinuityBreak { .. }) if dt > ctrl.min_t_step => {
                dt *= 0.5;
            }
            Err(e) => return Err(e),
        }
        if dt < ctrl.min_t_step {
            break;
        }
    }
    if new_samples.is_empty() {
        return Err(RayError::InvalidPotential);
    }
    new_samples.reverse();
    let t_min_reached = new_samples[0].t;
    let mut samples = new_samples;
    samples.extend(ray.samples.iter().cloned());
    Ok(Ray {
        addr: ray.addr.clone(),
        map,
        samples,
        t_min_reached,
        c1: ray.c1,
    })
}

/// Report of the orbit-separation growth law |d_{k+1}| >= e^{|d_k|}.
#[derive(Debug, Clone)]
pub struct SeparationReport {
    /// d_k = Re E^{k-1}(g(t2)) - Re E^{k-1}(g(t1)).
    pub d: Vec<f64>,
    pub transitions_checked: usize,
    pub growth_ok: bool,
    pub hypothesis_met: bool,
    pub degenerate: bool,
}

/// Forward-iterate the two ray points g(t1), g(t2) and check the exponential
/// separation of their real parts while both orbits stay representable and
/// the hypotheses hold (real parts beyond R_h, same side, bounded vertical
/// offset h). Hypothesis failure is reported, not fatal.
pub fn separation_check(
    map: &CosineMap,
    addr: &ExternalAddress,
    t1: f64,
    t2: f64,
    k_max: usize,
    h: f64,
) -> Result<SeparationReport, RayError> {
    let tol = 1e-12;
    let small = tail_point(map, addr, t1, tol)?;
    let big = tail_point(map, addr, t2, tol)?;
    if t1 == t2 {
        return Ok(SeparationReport {
            d: vec![0.0; k_max.min(4)],
            transitions_checked: 0,
            growth_ok: true,
            hypothesis_met: true,
            degenerate: true,
        });
    }
    let orbit = |mut z: Complex64| -> Vec<Complex64> {
        let mut v = vec![z];
        for _ in 1..k_max {
            match map.eval(z) {
                Ok(next) => {
                    z = next;
                    v.push(z);
                }
                Err(_) => break,
            }
        }
        v
    };
    let za = orbit(small.z);
    let zb = orbit(big.z);
    let len = za.len().min(zb.len());
    let r_min = r_h(map, h);
    let mut d = Vec::with_capacity(len);
    let mut hypothesis_met = true;
    for k in 0..len {
        d.push(zb[k].re - za[k].re);
        let same_side = za[k].re * zb[k].re > 0.0;
        if za[k].re.abs() <= r_min || zb[k].re.abs() <= r_min || !same_side {
            hypothesis_met = false;
        }
        if (za[k].im - zb[k].im).abs() >= h {
            hypothesis_met = false;
        }
    }
    if d.first().map(|x| x.abs()).unwrap_or(0.0) < 3.0 {
        hypothesis_met = false;
    }
    let mut growth_ok = true;
    let mut transitions = 0;
    for k in 0..d.len().saturating_sub(1) {
        transitions += 1;
        if d[k + 1].abs() < d[k].abs().exp() {
            growth_ok = false;
        }
    }
    Ok(SeparationReport {
        d,
        transitions_checked: transitions,
        growth_ok,
        hypothesis_met,
        degenerate: false,
    })
}
