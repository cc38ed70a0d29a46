//! Closed forms of the analytic layer.
//!
//! All large-deviation objects used by the solvers are evaluated here:
//! the salt free-energy gain `g`, the pair entropy `upsilon`, the optimal
//! salt fraction `theta_star`, the surface cost `M_pm` of a droplet at
//! magnetization `m`, the joint and reduced rate functions, the field-free
//! profile `E_xi` with its zero-tilt version, and the curvature ratio
//! `T = M''/g''` that organizes all convexity arguments.
//!
//! Derivative conventions: first and second derivatives are exact closed
//! forms. The surface cost has a derivative singularity at the endpoint
//! favored by the boundary condition; there the derivative functions
//! return signed-infinity sentinels instead of erroring, and root finders
//! regularize with the substitution `u = ((m_star -/+ m)/(2 m_star))^(1/d)`.

use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::params::{BoundaryCondition, ModelParams, ThermoPoint};

impl ModelParams {
    /// Argument of the log in `g`: `(1-m)/2 + e^kappa (1+m)/2`.
    fn g_arg(&self, m: f64) -> f64 {
        let ek = self.kappa().exp();
        0.5 * ((1.0 - m) + ek * (1.0 + m))
    }

    fn check_unit(&self, m: f64) -> Result<()> {
        if !(-1.0..=1.0).contains(&m) {
            return Err(Error::domain(format!("|m| must be <= 1, got {m}")));
        }
        Ok(())
    }

    fn check_spont(&self, m: f64) -> Result<()> {
        if !(-self.m_star()..=self.m_star()).contains(&m) {
            return Err(Error::domain(format!(
                "|m| must be <= m_star = {}, got {m}",
                self.m_star()
            )));
        }
        Ok(())
    }

    /// `g(m) = log((1-m)/2 + e^kappa (1+m)/2)` on `[-1, 1]`.
    pub fn g(&self, m: f64) -> Result<f64> {
        self.check_unit(m)?;
        Ok(self.g_arg(m).ln())
    }

    /// `g'(m) = A'/A` with `A` the argument of the log and `A' = (e^kappa - 1)/2`.
    pub fn g_prime(&self, m: f64) -> Result<f64> {
        self.check_unit(m)?;
        let ap = 0.5 * (self.kappa().exp() - 1.0);
        Ok(ap / self.g_arg(m))
    }

    /// `g''(m) = -g'(m)^2`.
    pub fn g_second(&self, m: f64) -> Result<f64> {
        let gp = self.g_prime(m)?;
        Ok(-gp * gp)
    }

    /// Chord slope of `g` between `-m_star` and `m_star`.
    pub fn d_star_g(&self) -> f64 {
        let ms = self.m_star();
        (self.g(ms).unwrap() - self.g(-ms).unwrap()) / (2.0 * ms)
    }

    /// Optimal salt fraction: the unique stationary point of
    /// `theta -> kappa theta + upsilon(m, theta)`, namely
    /// `theta* = e^kappa (1+m) / (e^kappa (1+m) + (1-m))`.
    pub fn theta_star(&self, m: f64) -> Result<f64> {
        self.check_unit(m)?;
        let ek = self.kappa().exp();
        Ok(ek * (1.0 + m) / (ek * (1.0 + m) + (1.0 - m)))
    }

    /// Surface cost `M_pm(m) = ((m_star -/+ m)/(2 m_star))^((d-1)/d) w1`
    /// on `[-m_star, m_star]`; minus sign for plus boundary conditions.
    pub fn surface_rate(&self, bc: BoundaryCondition, m: f64) -> Result<f64> {
        self.check_spont(m)?;
        let ms = self.m_star();
        let base = (ms - bc.sign() * m) / (2.0 * ms);
        let alpha = (self.d() as f64 - 1.0) / self.d() as f64;
        Ok(base.powf(alpha) * self.w1())
    }

    /// First derivative of the surface cost. Returns a signed-infinity
    /// sentinel at the endpoint favored by `bc` (where the base vanishes).
    pub fn surface_rate_prime(&self, bc: BoundaryCondition, m: f64) -> Result<f64> {
        self.check_spont(m)?;
        let ms = self.m_star();
        let s = bc.sign();
        let base = (ms - s * m) / (2.0 * ms);
        let d = self.d() as f64;
        let alpha = (d - 1.0) / d;
        if base == 0.0 {
            // M' ~ -s * base^(-1/d) -> -s * inf
            return Ok(-s * f64::INFINITY);
        }
        Ok(self.w1() * alpha * base.powf(alpha - 1.0) * (-s / (2.0 * ms)))
    }

    /// Second derivative of the surface cost; strictly negative inside,
    /// `-inf` sentinel at the favored endpoint.
    pub fn surface_rate_second(&self, bc: BoundaryCondition, m: f64) -> Result<f64> {
        self.check_spont(m)?;
        let ms = self.m_star();
        let base = (ms - bc.sign() * m) / (2.0 * ms);
        let d = self.d() as f64;
        let alpha = (d - 1.0) / d;
        if base == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.w1() * alpha * (alpha - 1.0) * base.powf(alpha - 2.0) / (4.0 * ms * ms))
    }

    /// Joint rate `Q(m, theta) = -b m - xi kappa theta - xi upsilon(m, theta)
    /// + M_pm(m)`.
    pub fn q_joint(
        &self,
        bc: BoundaryCondition,
        pt: ThermoPoint,
        m: f64,
        theta: f64,
    ) -> Result<f64> {
        let ups = upsilon(m, theta)?;
        let surf = self.surface_rate(bc, m)?;
        Ok(-pt.b() * m - pt.xi() * (self.kappa() * theta + ups) + surf)
    }

    /// Reduced rate `Q(m) = -b m - xi g(m) + M_pm(m)`; equals
    /// `inf_theta q_joint` by the stationarity of `theta_star`.
    pub fn q_reduced(&self, bc: BoundaryCondition, pt: ThermoPoint, m: f64) -> Result<f64> {
        Ok(-pt.b() * m - pt.xi() * self.g(m)? + self.surface_rate(bc, m)?)
    }

    /// Curvature ratio `T(m) = M''(m)/g''(m) > 0`; `+inf` sentinel at the
    /// endpoint favored by `bc`.
    ///
    /// Closed form: `T(m) = C (m_star -/+ m)^(-(d+1)/d) (m + coth(kappa/2))^2`
    /// with `C = w1 (d-1) (2 m_star)^((d+1)/d - 2) / d^2`. Note the second
    /// factor is the hyperbolic cotangent, `coth(kappa/2) = (e^kappa + 1) /
    /// (e^kappa - 1)`: it arises from `-1/g'' = (A/A')^2 = (m + coth(kappa/2))^2`.
    pub fn t_ratio(&self, bc: BoundaryCondition, m: f64) -> Result<f64> {
        let mpp = self.surface_rate_second(bc, m)?;
        let gpp = self.g_second(m)?;
        Ok(mpp / gpp)
    }

    /// Location of the interior minimum of the extension of `m -> T(m)`
    /// past `-m_star` (minus boundary conditions). `T` is strictly
    /// decreasing below and strictly increasing above this point.
    pub(crate) fn t_dip_minus(&self) -> f64 {
        let d = self.d() as f64;
        let beta = (d + 1.0) / d;
        let ek = self.kappa().exp();
        let coth_half = (ek + 1.0) / (ek - 1.0);
        (beta * coth_half - 2.0 * self.m_star()) / (2.0 - beta)
    }
}

/// Pair entropy `upsilon(m, theta) = -theta log(2 theta/(1+m))
/// - (1-theta) log(2(1-theta)/(1-m))`, with the `0 log 0 = 0` convention
/// at `theta = 0` and `theta = 1`.
pub fn upsilon(m: f64, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::domain(format!("theta must lie in [0, 1], got {theta}")));
    }
    if !(-1.0..=1.0).contains(&m) {
        return Err(Error::domain(format!("|m| must be <= 1, got {m}")));
    }
    if theta > 0.0 && 1.0 + m <= 0.0 {
        return Err(Error::domain("upsilon needs 1 + m > 0 when theta > 0"));
    }
    if theta < 1.0 && 1.0 - m <= 0.0 {
        return Err(Error::domain("upsilon needs 1 - m > 0 when theta < 1"));
    }
    let mut v = 0.0;
    if theta > 0.0 {
        v -= theta * (2.0 * theta / (1.0 + m)).ln();
    }
    if theta < 1.0 {
        v -= (1.0 - theta) * (2.0 * (1.0 - theta) / (1.0 - m)).ln();
    }
    Ok(v)
}

/// The field-free profile `E_xi(m) = -xi g(m) + M_pm(m)` together with its
/// zero-tilt version, bundled with the `(params, bc, xi)` triple they
/// depend on.
#[derive(Debug, Clone, Copy)]
pub struct RateProfile {
    p: ModelParams,
    bc: BoundaryCondition,
    xi: f64,
}

impl RateProfile {
    pub fn new(p: &ModelParams, bc: BoundaryCondition, xi: f64) -> Result<Self> {
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(Error::domain(format!("xi must be >= 0, got {xi}")));
        }
        Ok(RateProfile { p: *p, bc, xi })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn value(&self, m: f64) -> Result<f64> {
        Ok(-self.xi * self.p.g(m)? + self.p.surface_rate(self.bc, m)?)
    }

    pub fn prime(&self, m: f64) -> Result<f64> {
        Ok(-self.xi * self.p.g_prime(m)? + self.p.surface_rate_prime(self.bc, m)?)
    }

    pub fn second(&self, m: f64) -> Result<f64> {
        Ok(-self.xi * self.p.g_second(m)? + self.p.surface_rate_second(self.bc, m)?)
    }

    /// Chord slope of `E_xi` between `-m_star` and `m_star`.
    pub fn chord_slope(&self) -> f64 {
        let ms = self.p.m_star();
        (self.value(ms).unwrap() - self.value(-ms).unwrap()) / (2.0 * ms)
    }

    /// Zero-tilt profile: `E_xi` minus its chord, vanishing at both
    /// `-m_star` and `m_star`.
    pub fn hat(&self, m: f64) -> Result<f64> {
        let ms = self.p.m_star();
        Ok(self.value(m)? - self.value(-ms)? - (m + ms) * self.chord_slope())
    }

    pub fn hat_prime(&self, m: f64) -> Result<f64> {
        Ok(self.prime(m)? - self.chord_slope())
    }

    pub fn hat_second(&self, m: f64) -> Result<f64> {
        self.second(m)
    }
}

/// Free-function evaluation of `E_xi` / `E_hat_xi`, mirroring [`RateProfile`].
pub fn e_profile(
    p: &ModelParams,
    bc: BoundaryCondition,
    xi: f64,
    m: f64,
    tilted: bool,
) -> Result<f64> {
    let prof = RateProfile::new(p, bc, xi)?;
    if tilted {
        prof.hat(m)
    } else {
        prof.value(m)
    }
}

/// Points of `(-m_star, m_star)` where the second derivative of the
/// zero-tilt profile changes sign, i.e. the solutions of `T(m) = xi`,
/// ascending. The profile is strictly convex where `T(m) < xi` and
/// strictly concave where `T(m) > xi`.
///
/// For plus boundary conditions `T` is strictly increasing, so there is
/// at most one crossing; for minus boundary conditions `T` dips once and
/// there are at most two.
pub fn convexity_profile(
    p: &ModelParams,
    bc: BoundaryCondition,
    xi: f64,
) -> Result<Vec<f64>> {
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::domain(format!("xi must be >= 0, got {xi}")));
    }
    let ms = p.m_star();
    let d = p.d() as i32;
    match bc {
        BoundaryCondition::Plus => {
            let t_at_lo = p.t_ratio(bc, -ms)?;
            if xi <= t_at_lo {
                return Ok(vec![]);
            }
            // Solve in u = ((m_star - m)/(2 m_star))^(1/d); the crossing
            // sits arbitrarily close to m_star for large xi and the
            // substitution keeps the bisection well conditioned there.
            let f = |u: f64| {
                let m = ms - 2.0 * ms * u.powi(d);
                p.t_ratio(bc, m).unwrap() - xi
            };
            let u = bisect(f, 0.0, 1.0, "convexity crossing (plus)")?;
            Ok(vec![ms - 2.0 * ms * u.powi(d)])
        }
        BoundaryCondition::Minus => {
            let m_dip = p.t_dip_minus();
            let f_m = |m: f64| p.t_ratio(bc, m).unwrap() - xi;
            let from_u = |u: f64| -ms + 2.0 * ms * u.powi(d);
            if m_dip >= ms {
                // strictly decreasing across the whole interval
                if xi <= p.t_ratio(bc, ms)? {
                    return Ok(vec![]);
                }
                let u = bisect(
                    |u| f_m(from_u(u)),
                    0.0,
                    1.0,
                    "convexity crossing (minus, monotone)",
                )?;
                return Ok(vec![from_u(u)]);
            }
            let t_min = p.t_ratio(bc, m_dip)?;
            if xi <= t_min {
                return Ok(vec![]);
            }
            let u_dip = ((m_dip + ms) / (2.0 * ms)).powf(1.0 / d as f64);
            let u = bisect(
                |u| f_m(from_u(u)),
                0.0,
                u_dip,
                "left convexity crossing (minus)",
            )?;
            let left = from_u(u);
            if xi < p.t_ratio(bc, ms)? {
                let right = bisect(f_m, m_dip, ms, "right convexity crossing (minus)")?;
                Ok(vec![left, right])
            } else {
                Ok(vec![left])
            }
        }
    }
}
