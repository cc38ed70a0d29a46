//! Thresholds and phase-boundary curves for both boundary conditions.
//!
//! Everything here rests on the tangent-line geometry of the zero-tilt
//! profile: the upper curve is the slope of the steepest line touching the
//! profile at the favored endpoint and at one more point without crossing
//! it, the lower curve the analogous construction at the other endpoint.
//! Closed forms exist on the linear pieces; the curved pieces come from
//! bracketed bisection on tangency residuals inside the convexity cell,
//! where monotonicity of the residual is guaranteed.

use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::params::{BoundaryCondition, ModelParams};
use crate::rate::{convexity_profile, RateProfile};

/// Plus-bc threshold concentration: phase separation exists iff `xi`
/// exceeds `w1/(2 m_star d) (g'(-m_star) - D*_g)^-1`.
pub fn xi_t_plus(p: &ModelParams) -> f64 {
    let ms = p.m_star();
    let denom = p.g_prime(-ms).unwrap() - p.d_star_g();
    p.w1() / (2.0 * ms * p.d() as f64) / denom
}

/// Lower critical curve for plus boundary conditions (piecewise linear).
pub fn b2_plus(p: &ModelParams, xi: f64) -> f64 {
    let ms = p.m_star();
    let d = p.d() as f64;
    if xi < xi_t_plus(p) {
        -p.w1() / (2.0 * ms) - xi * p.d_star_g()
    } else {
        -(d - 1.0) / d * p.w1() / (2.0 * ms) - xi * p.g_prime(-ms).unwrap()
    }
}

/// Interior tangency point of the upper plus-bc curve: the unique root of
/// `F(m) = E(m_star) - E(m) - (m_star - m) E'(m)` inside the convex cell.
/// Defined for `xi > xi_t` only.
pub fn m1_plus(p: &ModelParams, xi: f64) -> Result<f64> {
    if xi <= xi_t_plus(p) {
        return Err(Error::domain(format!(
            "m1 exists only above the threshold xi_t = {}, got xi = {xi}",
            xi_t_plus(p)
        )));
    }
    let ms = p.m_star();
    let prof = RateProfile::new(p, BoundaryCondition::Plus, xi)?;
    let crossings = convexity_profile(p, BoundaryCondition::Plus, xi)?;
    let c = *crossings.first().ok_or_else(|| {
        Error::Bracketing(format!("no convexity crossing at xi = {xi} above xi_t"))
    })?;
    let e_top = prof.value(ms)?;
    let f = |m: f64| e_top - prof.value(m).unwrap() - (ms - m) * prof.prime(m).unwrap();
    // F decreases across the convex cell, from positive at -m_star to
    // negative at the crossing
    bisect(f, -ms, c, "upper-curve tangency (plus)")
}

/// Upper critical curve for plus boundary conditions.
pub fn b1_plus(p: &ModelParams, xi: f64) -> Result<f64> {
    if xi <= xi_t_plus(p) {
        return Ok(b2_plus(p, xi));
    }
    let m1 = m1_plus(p, xi)?;
    RateProfile::new(p, BoundaryCondition::Plus, xi)?.prime(m1)
}

/// Slope of the upper plus-bc curve, via the chord identity
/// `b1'(xi) = -(g(m_star) - g(m1))/(m_star - m1)`.
pub fn b1_slope_plus(p: &ModelParams, xi: f64) -> Result<f64> {
    if xi <= xi_t_plus(p) {
        return Ok(-p.d_star_g());
    }
    let ms = p.m_star();
    let m1 = m1_plus(p, xi)?;
    Ok(-(p.g(ms)? - p.g(m1)?) / (ms - m1))
}

/// Global minimum of the zero-tilt profile over `[-m_star, m_star]`
/// (zero when the endpoints are not beaten).
pub fn min_hat(p: &ModelParams, bc: BoundaryCondition, xi: f64) -> Result<f64> {
    let ms = p.m_star();
    let prof = RateProfile::new(p, bc, xi)?;
    let slope = prof.chord_slope();
    let crossings = convexity_profile(p, bc, xi)?;
    let mut cuts = Vec::with_capacity(crossings.len() + 2);
    cuts.push(-ms);
    cuts.extend_from_slice(&crossings);
    cuts.push(ms);

    let mut best = 0.0f64;
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if p.t_ratio(bc, 0.5 * (lo + hi))? >= xi {
            continue; // concave cell: no interior minimum
        }
        let hp = |m: f64| prof.prime(m).unwrap() - slope;
        if hp(lo) <= 0.0 && hp(hi) >= 0.0 {
            let root = bisect(hp, lo, hi, "zero-tilt interior minimum")?;
            best = best.min(prof.hat(root)?);
        }
    }
    Ok(best)
}

/// Smallest `xi` at which the zero-tilt profile dips below zero, located
/// by bisection on `[~0, hi]`. The caller supplies an upper bracket `hi`
/// where the dip is already strictly negative.
pub fn locate_xi_threshold(p: &ModelParams, bc: BoundaryCondition, hi: f64) -> Result<f64> {
    // `min_hat` is exactly zero until an interior stationary point exists,
    // so a strict comparison is the sharpest usable predicate
    let dips = |xi: f64| -> Result<bool> { Ok(min_hat(p, bc, xi)? < 0.0) };
    let mut lo = hi * 1e-9;
    let mut hi = hi;
    if dips(lo)? {
        return Err(Error::Bracketing(format!(
            "threshold bracket: profile already dips at xi = {lo}"
        )));
    }
    if !dips(hi)? {
        return Err(Error::Bracketing(format!(
            "threshold bracket: profile does not dip at xi = {hi}"
        )));
    }
    for _ in 0..crate::numerics::BISECT_MAX_ITER {
        if (hi - lo).abs() <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if dips(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Threshold set for minus boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinusThresholds {
    /// Onset of phase separation.
    pub xi_t: f64,
    /// Upper end of the two-transition window; equals `xi_t` when the
    /// window is empty.
    pub xi_u: f64,
    /// Slope criterion at `m_star`: the zero-tilt derivative there changes
    /// sign at `xi_1`.
    pub xi_1: f64,
    /// Curvature criterion at `m_star`: the zero-tilt curvature there
    /// changes sign at `xi_2`.
    pub xi_2: f64,
    /// Triple-point magnetization, present only when `xi_t < xi_u`.
    pub m0: Option<f64>,
}

/// Computes `(xi_t, xi_u, xi_1, xi_2)` for minus boundary conditions.
///
/// `xi_1 >= xi_2` forces `xi_t = xi_u = xi_1` (single droplet transition);
/// otherwise `xi_u = xi_2` and `xi_t < xi_1` is located by bisection on
/// the dip of the zero-tilt profile.
pub fn thresholds_minus(p: &ModelParams) -> Result<MinusThresholds> {
    let ms = p.m_star();
    let d = p.d() as f64;
    let xi_1 = p.w1() / (2.0 * ms * d) / (p.d_star_g() - p.g_prime(ms)?);
    let xi_2 = -(d - 1.0) * p.w1() / ((2.0 * ms * d).powi(2) * p.g_second(ms)?);
    if xi_1 >= xi_2 {
        return Ok(MinusThresholds {
            xi_t: xi_1,
            xi_u: xi_1,
            xi_1,
            xi_2,
            m0: None,
        });
    }
    let xi_t = locate_xi_threshold(p, BoundaryCondition::Minus, xi_1)?;
    debug_assert!(xi_t < xi_1 && xi_1 < xi_2);

    // the zero-tilt profile touches zero at the triple point
    let prof = RateProfile::new(p, BoundaryCondition::Minus, xi_t)?;
    let crossings = convexity_profile(p, BoundaryCondition::Minus, xi_t)?;
    if crossings.len() != 2 {
        return Err(Error::Bracketing(format!(
            "expected a convexity cell at xi_t = {xi_t}, found {crossings:?}"
        )));
    }
    let slope = prof.chord_slope();
    let m0 = bisect(
        |m| prof.prime(m).unwrap() - slope,
        crossings[0],
        crossings[1],
        "triple-point magnetization",
    )?;
    Ok(MinusThresholds {
        xi_t,
        xi_u: xi_2,
        xi_1,
        xi_2,
        m0: Some(m0),
    })
}

/// One `xi`-slice of the minus-bc boundary curves plus the interior
/// tangency points where they exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildePoint {
    pub b1: f64,
    pub b2: f64,
    /// Tangency of the upper curve (two-transition window only).
    pub m1: Option<f64>,
    /// Tangency of the lower curve (any `xi > xi_t`).
    pub m2: Option<f64>,
}

/// Minus-bc curves at `xi`, reusing precomputed thresholds.
pub fn tilde_curves_with(
    p: &ModelParams,
    th: &MinusThresholds,
    xi: f64,
) -> Result<TildePoint> {
    let ms = p.m_star();
    let bc = BoundaryCondition::Minus;
    if xi <= th.xi_t {
        let b = p.w1() / (2.0 * ms) - xi * p.d_star_g();
        return Ok(TildePoint {
            b1: b,
            b2: b,
            m1: None,
            m2: None,
        });
    }
    let prof = RateProfile::new(p, bc, xi)?;
    let crossings = convexity_profile(p, bc, xi)?;
    let tangency_from_minus = |lo: f64, hi: f64| -> Result<f64> {
        let e_bot = prof.value(-ms)?;
        let g_res =
            |m: f64| prof.value(m).unwrap() - e_bot - (m + ms) * prof.prime(m).unwrap();
        bisect(g_res, lo, hi, "lower-curve tangency (minus)")
    };
    if xi >= th.xi_u {
        // upper curve is linear; lower curve touches once inside the
        // convex cell reaching up to m_star
        let c = *crossings.first().ok_or_else(|| {
            Error::Bracketing(format!("no convexity crossing at xi = {xi} >= xi_u"))
        })?;
        let d = p.d() as f64;
        let b1 = (d - 1.0) / d * p.w1() / (2.0 * ms) - xi * p.g_prime(ms)?;
        let m2 = tangency_from_minus(c, ms)?;
        return Ok(TildePoint {
            b1,
            b2: prof.prime(m2)?,
            m1: None,
            m2: Some(m2),
        });
    }
    // two-transition window: both tangencies sit inside the convex cell
    if crossings.len() != 2 {
        return Err(Error::Bracketing(format!(
            "expected two convexity crossings at xi = {xi} in ({}, {}), found {crossings:?}",
            th.xi_t, th.xi_u
        )));
    }
    let (c1, c2) = (crossings[0], crossings[1]);
    let e_top = prof.value(ms)?;
    let f_res = |m: f64| e_top - prof.value(m).unwrap() - (ms - m) * prof.prime(m).unwrap();
    let m1 = bisect(f_res, c1, c2, "upper-curve tangency (minus)")?;
    let m2 = tangency_from_minus(c1, c2)?;
    if m2 > m1 + 1e-9 {
        return Err(Error::Bracketing(format!(
            "tangency order violated at xi = {xi}: m2 = {m2} > m1 = {m1}"
        )));
    }
    Ok(TildePoint {
        b1: prof.prime(m1)?,
        b2: prof.prime(m2)?,
        m1: Some(m1),
        m2: Some(m2),
    })
}

/// Minus-bc curves at `xi` (computes the thresholds on the fly).
pub fn tilde_curves(p: &ModelParams, xi: f64) -> Result<TildePoint> {
    let th = thresholds_minus(p)?;
    tilde_curves_with(p, &th, xi)
}

/// Upper and lower boundary values at `xi` for either boundary condition.
pub fn curve_bounds(p: &ModelParams, bc: BoundaryCondition, xi: f64) -> Result<(f64, f64)> {
    match bc {
        BoundaryCondition::Plus => Ok((b1_plus(p, xi)?, b2_plus(p, xi))),
        BoundaryCondition::Minus => {
            let t = tilde_curves(p, xi)?;
            Ok((t.b1, t.b2))
        }
    }
}

/// Finite-concentration boundary curves of the infinite-volume model,
/// from the two-reservoir system
/// `q_+/(1-q_+) = e^kappa q_-/(1-q_-)`,
/// `q_+ (1+m_star)/2 + q_- (1-m_star)/2 = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Part1Boundary {
    /// Boundary against the liquid region.
    pub h_plus: f64,
    /// Boundary against the ice region (roles of the phases swapped).
    pub h_minus: f64,
    /// Salt occupation of the majority phase in the `h_plus` solve.
    pub q_plus: f64,
    /// Salt occupation of the minority phase in the `h_plus` solve.
    pub q_minus: f64,
}

pub fn part1_boundary(p: &ModelParams, c: f64) -> Result<Part1Boundary> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::NoSolution(format!(
            "concentration must lie in [0, 1), got {c}"
        )));
    }
    let solve = |ms: f64| -> Result<(f64, f64, f64)> {
        if c == 0.0 {
            return Ok((0.0, 0.0, 0.0));
        }
        let ek = p.kappa().exp();
        let q_plus_of = |qm: f64| ek * qm / ((1.0 - qm) + ek * qm);
        let f = |qm: f64| q_plus_of(qm) * 0.5 * (1.0 + ms) + qm * 0.5 * (1.0 - ms) - c;
        let qm = bisect(f, 0.0, 1.0, "salt occupation")?;
        let qp = q_plus_of(qm);
        Ok((0.5 * ((1.0 - qp) / (1.0 - qm)).ln(), qp, qm))
    };
    let (h_plus, q_plus, q_minus) = solve(p.m_star())?;
    let (h_minus, _, _) = solve(-p.m_star())?;
    Ok(Part1Boundary {
        h_plus,
        h_minus,
        q_plus,
        q_minus,
    })
}

/// The `xi`-interval where minus-bc phase separation persists at `b = 0`,
/// namely `(w1/(g(m_star) - g(-m_star)), (d-1)/d w1/(2 m_star g'(m_star)))`
/// when that interval is nonempty.
pub fn b0_separation_window(p: &ModelParams) -> Option<(f64, f64)> {
    let ms = p.m_star();
    let d = p.d() as f64;
    let lower = p.w1() / (p.g(ms).unwrap() - p.g(-ms).unwrap());
    let upper = (d - 1.0) / d * p.w1() / (2.0 * ms * p.g_prime(ms).unwrap());
    if lower < upper {
        Some((lower, upper))
    } else {
        None
    }
}

/// One sampled point of a pair of boundary curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub xi: f64,
    pub b_upper: f64,
    pub b_lower: f64,
}

/// Thresholds plus sampled boundary curves for one boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalCurves {
    pub bc: BoundaryCondition,
    pub xi_t: f64,
    pub xi_u: f64,
    pub xi_1: Option<f64>,
    pub xi_2: Option<f64>,
    pub m0: Option<f64>,
    pub samples: Vec<CurveSample>,
}

/// Samples both curves on a geometric `xi` grid reaching well past the
/// kink region (up to eight times the largest threshold).
pub fn sample_curves(
    p: &ModelParams,
    bc: BoundaryCondition,
    n_points: usize,
) -> Result<CriticalCurves> {
    if n_points < 2 {
        return Err(Error::domain("need at least 2 sample points"));
    }
    let (xi_t, xi_u, xi_1, xi_2, m0, th) = match bc {
        BoundaryCondition::Plus => {
            let t = xi_t_plus(p);
            (t, t, None, None, None, None)
        }
        BoundaryCondition::Minus => {
            let th = thresholds_minus(p)?;
            (
                th.xi_t,
                th.xi_u,
                Some(th.xi_1),
                Some(th.xi_2),
                th.m0,
                Some(th),
            )
        }
    };
    let hi = 8.0 * xi_t.max(xi_2.unwrap_or(0.0)).max(xi_u);
    let lo = hi / 1024.0;
    let ratio = (hi / lo).powf(1.0 / (n_points - 1) as f64);
    let mut samples = Vec::with_capacity(n_points);
    let mut xi = lo;
    for i in 0..n_points {
        let (b_upper, b_lower) = match bc {
            BoundaryCondition::Plus => (b1_plus(p, xi)?, b2_plus(p, xi)),
            BoundaryCondition::Minus => {
                let t = tilde_curves_with(p, th.as_ref().unwrap(), xi)?;
                (t.b1, t.b2)
            }
        };
        samples.push(CurveSample {
            xi,
            b_upper,
            b_lower,
        });
        xi = if i + 2 == n_points { hi } else { xi * ratio };
    }
    Ok(CriticalCurves {
        bc,
        xi_t,
        xi_u,
        xi_1,
        xi_2,
        m0,
        samples,
    })
}
