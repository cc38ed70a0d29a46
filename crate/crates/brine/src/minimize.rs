//! Global minimization of the reduced rate function `m -> Q(m)` over
//! `[-m_star, m_star]`.
//!
//! The search never scans blindly: the interval is partitioned by the
//! convexity crossings of the field-free profile, interior minima can only
//! sit inside (the closure of) convex cells, and there the derivative is
//! strictly increasing so a sign-change bisection pins them down.

use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::params::{BoundaryCondition, ModelParams, ThermoPoint};
use crate::rate::{convexity_profile, RateProfile};

/// Two candidate minimizers closer in value than this are reported together.
pub const VALUE_TOL: f64 = 1e-9;
/// Two candidate minimizers closer in location than this are merged.
pub const SEPARATION_TOL: f64 = 1e-6;

/// How the minimizing set sits in `[-m_star, m_star]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Unique minimizer at `+m_star`.
    AtPlusEndpoint,
    /// Unique minimizer at `-m_star`.
    AtMinusEndpoint,
    /// Unique interior minimizer.
    Interior,
    /// More than one minimizer within the value tolerance.
    Degenerate,
}

/// All global minimizers of the reduced rate function, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerSet {
    minimizers: Vec<f64>,
    value: f64,
    classification: Classification,
}

impl MinimizerSet {
    pub fn minimizers(&self) -> &[f64] {
        &self.minimizers
    }

    /// Common minimum of the rate function.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn multiplicity(&self) -> usize {
        self.minimizers.len()
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    /// The unique minimizer, or `None` when degenerate.
    pub fn unique(&self) -> Option<f64> {
        if self.minimizers.len() == 1 {
            Some(self.minimizers[0])
        } else {
            None
        }
    }

    pub fn smallest(&self) -> f64 {
        self.minimizers[0]
    }

    pub fn largest(&self) -> f64 {
        *self.minimizers.last().unwrap()
    }
}

/// Global minimizers of `m -> -b m + E_xi(m)` on `[-m_star, m_star]`.
///
/// Endpoints are always candidates. Interior candidates are the roots of
/// `Q'(m) = -b + E_xi'(m)` inside convex cells of the profile; concave
/// cells cannot hold an interior minimum. Candidates within
/// [`SEPARATION_TOL`] merge (keeping the lower value) and everything
/// within [`VALUE_TOL`] of the best survives.
pub fn minimize_q(
    p: &ModelParams,
    bc: BoundaryCondition,
    pt: ThermoPoint,
) -> Result<MinimizerSet> {
    let ms = p.m_star();
    let prof = RateProfile::new(p, bc, pt.xi())?;
    let q = |m: f64| -pt.b() * m + prof.value(m).unwrap();
    let qp = |m: f64| -pt.b() + prof.prime(m).unwrap();

    let crossings = convexity_profile(p, bc, pt.xi())?;
    let mut cuts = Vec::with_capacity(crossings.len() + 2);
    cuts.push(-ms);
    cuts.extend_from_slice(&crossings);
    cuts.push(ms);

    let mut candidates: Vec<(f64, f64)> = vec![(-ms, q(-ms)), (ms, q(ms))];
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let mid = 0.5 * (lo + hi);
        // convex exactly where T < xi
        if p.t_ratio(bc, mid)? >= pt.xi() {
            continue;
        }
        let (dlo, dhi) = (qp(lo), qp(hi));
        if dlo <= 0.0 && dhi >= 0.0 {
            let root = bisect(qp, lo, hi, "interior stationary point")?;
            candidates.push((root, q(root)));
        }
        // cell-edge minima are covered by the endpoint candidates or by
        // the neighboring cell's root; crossing points themselves are
        // never strict interior minima
    }

    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(candidates.len());
    for (m, v) in candidates {
        match merged.last_mut() {
            Some(last) if (m - last.0).abs() <= SEPARATION_TOL => {
                if v < last.1 {
                    *last = (m, v);
                }
            }
            _ => merged.push((m, v)),
        }
    }

    let vmin = merged.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let minimizers: Vec<f64> = merged
        .iter()
        .filter(|c| c.1 <= vmin + VALUE_TOL)
        .map(|c| c.0)
        .collect();
    debug_assert!(!minimizers.is_empty());
    debug_assert!(minimizers.len() <= 3, "at most three minimizers can tie");

    let classification = if minimizers.len() > 1 {
        Classification::Degenerate
    } else if (minimizers[0] - ms).abs() <= SEPARATION_TOL {
        Classification::AtPlusEndpoint
    } else if (minimizers[0] + ms).abs() <= SEPARATION_TOL {
        Classification::AtMinusEndpoint
    } else {
        Classification::Interior
    };

    Ok(MinimizerSet {
        minimizers,
        value: vmin,
        classification,
    })
}

/// The unique minimizer under plus boundary conditions; errs with the full
/// set when the point sits on a critical curve.
pub fn m_plus(p: &ModelParams, pt: ThermoPoint) -> Result<f64> {
    single(p, BoundaryCondition::Plus, pt)
}

/// The unique minimizer under minus boundary conditions.
pub fn m_minus(p: &ModelParams, pt: ThermoPoint) -> Result<f64> {
    single(p, BoundaryCondition::Minus, pt)
}

fn single(p: &ModelParams, bc: BoundaryCondition, pt: ThermoPoint) -> Result<f64> {
    let set = minimize_q(p, bc, pt)?;
    set.unique()
        .ok_or(Error::MultipleMinimizers(set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves;
    use crate::params::BoundaryCondition::{Minus, Plus};

    fn canonical() -> ModelParams {
        ModelParams::new(2, 0.8, 1.0, 1.0).unwrap()
    }

    fn steep() -> ModelParams {
        ModelParams::new(2, 0.98, 1.0, 4.0).unwrap()
    }

    fn pt(b: f64, xi: f64) -> ThermoPoint {
        ThermoPoint::new(b, xi).unwrap()
    }

    /// Uniform grid scan refined by golden section; deliberately ignorant
    /// of the convexity analysis used by `minimize_q`.
    fn brute_minimize(
        p: &ModelParams,
        bc: BoundaryCondition,
        point: ThermoPoint,
        n: usize,
    ) -> (f64, f64) {
        let ms = p.m_star();
        let q = |m: f64| p.q_reduced(bc, point, m).unwrap();
        let mut best = (-ms, q(-ms));
        for i in 0..n {
            // clamp: the grid arithmetic can land a hair outside the domain
            let m = (-ms + 2.0 * ms * i as f64 / (n - 1) as f64).clamp(-ms, ms);
            let v = q(m);
            if v < best.1 {
                best = (m, v);
            }
        }
        let step = 2.0 * ms / (n - 1) as f64;
        let lo = (best.0 - 2.0 * step).max(-ms);
        let hi = (best.0 + 2.0 * step).min(ms);
        let (gx, gv) = crate::numerics::golden_min(q, lo, hi, 1e-13);
        // keep the grid point when the refinement drifts off an endpoint
        if gv < best.1 {
            (gx, gv)
        } else {
            best
        }
    }

    #[test]
    fn zero_salt_zero_field_sits_at_favored_endpoint() {
        let p = canonical();
        let set = minimize_q(&p, Plus, pt(0.0, 0.0)).unwrap();
        assert_eq!(set.minimizers(), &[0.8]);
        assert!(set.value().abs() < 1e-15);
        assert_eq!(set.classification(), Classification::AtPlusEndpoint);

        let set = minimize_q(&p, Minus, pt(0.0, 0.0)).unwrap();
        assert_eq!(set.minimizers(), &[-0.8]);
        assert_eq!(set.classification(), Classification::AtMinusEndpoint);
    }

    #[test]
    fn liquid_and_ice_sides_at_xi_2() {
        let p = canonical();
        // b = 0 lies above b1(2): liquid
        let set = minimize_q(&p, Plus, pt(0.0, 2.0)).unwrap();
        assert_eq!(set.minimizers(), &[0.8]);
        // b = -3 lies below b2(2) ~ -1.77883: ice
        let set = minimize_q(&p, Plus, pt(-3.0, 2.0)).unwrap();
        assert_eq!(set.minimizers(), &[-0.8]);
    }

    #[test]
    fn interior_minimizer_between_the_curves() {
        let p = canonical();
        let b1 = curves::b1_plus(&p, 2.0).unwrap();
        let b2 = curves::b2_plus(&p, 2.0);
        let bmid = 0.5 * (b1 + b2);
        let m = m_plus(&p, pt(bmid, 2.0)).unwrap();
        assert!((m - (-0.68894492131006465)).abs() < 1e-9);
        // strictly increasing in b, staying below the convexity crossing
        let lo = m_plus(&p, pt(bmid - 0.02, 2.0)).unwrap();
        let hi = m_plus(&p, pt(bmid + 0.02, 2.0)).unwrap();
        assert!((lo - (-0.713125481962172)).abs() < 1e-9);
        assert!((hi - (-0.663744574402406)).abs() < 1e-9);
        assert!(lo < m && m < hi);
        assert!(hi < 0.14695439836254959);
    }

    #[test]
    fn agrees_with_grid_scan_oracle() {
        // 200 pseudo-random (b, xi, bc) points vs a 1e5-point scan
        let p = canonical();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for k in 0..200 {
            let b = -3.0 + 6.0 * next();
            let xi = 4.0 * next();
            let bc = if k % 2 == 0 { Plus } else { Minus };
            let point = pt(b, xi);
            let (bm, bv) = brute_minimize(&p, bc, point, 100_000);
            let set = minimize_q(&p, bc, point).unwrap();
            assert!(
                (set.value() - bv).abs() < 1e-9,
                "value mismatch at b={b} xi={xi} {bc:?}: {} vs {bv}",
                set.value()
            );
            let close = set.minimizers().iter().any(|m| (m - bm).abs() < 1e-6);
            assert!(
                close,
                "location mismatch at b={b} xi={xi} {bc:?}: {:?} vs {bm}",
                set.minimizers()
            );
        }
    }

    #[test]
    fn largest_minimizer_nondecreasing_in_b() {
        let p = canonical();
        let xi = 2.0;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..80 {
            let b = -2.5 + 3.0 * i as f64 / 79.0;
            let set = minimize_q(&p, Plus, pt(b, xi)).unwrap();
            let m = set.largest();
            assert!(m >= prev - 1e-12, "b = {b}");
            prev = m;
        }
    }

    #[test]
    fn jump_at_b1_and_continuity_at_b2() {
        let p = canonical();
        let xi = 2.0 * curves::xi_t_plus(&p);
        let b1 = curves::b1_plus(&p, xi).unwrap();
        let b2 = curves::b2_plus(&p, xi);
        let eps = 1e-6;
        let above = m_plus(&p, pt(b1 + eps, xi)).unwrap();
        let below = m_plus(&p, pt(b1 - eps, xi)).unwrap();
        let t_inv = convexity_profile(&p, Plus, xi).unwrap()[0];
        assert!(above - below >= (0.8 - t_inv) - 1e-3);
        // continuous across b2 for xi > xi_t
        let just_inside = m_plus(&p, pt(b2 + eps, xi)).unwrap();
        assert!((just_inside + 0.8).abs() < 1e-3);
    }

    #[test]
    fn two_minimizers_exactly_on_the_upper_curve() {
        let p = canonical();
        let b1 = curves::b1_plus(&p, 2.0).unwrap();
        let set = minimize_q(&p, Plus, pt(b1, 2.0)).unwrap();
        assert_eq!(set.multiplicity(), 2);
        assert_eq!(set.classification(), Classification::Degenerate);
        assert!((set.minimizers()[0] - (-0.55235138122052472)).abs() < 1e-7);
        assert!((set.minimizers()[1] - 0.8).abs() < 1e-9);
        let err = m_plus(&p, pt(b1, 2.0)).unwrap_err();
        assert!(matches!(err, Error::MultipleMinimizers(_)));
    }

    #[test]
    fn three_minimizers_at_the_triple_point() {
        let p = steep();
        let th = curves::thresholds_minus(&p).unwrap();
        let b = curves::tilde_curves(&p, th.xi_t).unwrap().b1;
        let set = minimize_q(&p, Minus, pt(b, th.xi_t)).unwrap();
        assert_eq!(set.multiplicity(), 3, "{:?}", set);
        assert!((set.minimizers()[0] + 0.98).abs() < 1e-6);
        assert!((set.minimizers()[1] - (-0.46741836673066852)).abs() < 1e-4);
        assert!((set.minimizers()[2] - 0.98).abs() < 1e-6);
    }

    #[test]
    fn separation_window_at_zero_field() {
        // inside the window the minus-bc minimizer is interior at b = 0
        let p = steep();
        let set = minimize_q(&p, Minus, pt(0.0, 0.4)).unwrap();
        assert_eq!(set.classification(), Classification::Interior);
        assert!((set.minimizers()[0] - 0.156881094353).abs() < 1e-5);
    }
}
