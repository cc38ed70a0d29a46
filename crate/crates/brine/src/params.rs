//! Physical inputs shared by every closed form: lattice dimension, the
//! spontaneous magnetization, the unit-droplet surface cost and the
//! salt-ice repulsion.

use crate::error::{Error, Result};

/// Model parameters of the analytic layer.
///
/// The Ising coupling enters only through `m_star` and `w1`, which are
/// free inputs here; see [`onsager_m_star`] for the classical d = 2
/// closed form when a concrete coupling is wanted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    d: u32,
    m_star: f64,
    w1: f64,
    kappa: f64,
}

impl ModelParams {
    /// Validates `d >= 2`, `0 < m_star < 1`, `w1 > 0`, `kappa > 0`.
    pub fn new(d: u32, m_star: f64, w1: f64, kappa: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain(format!("d must be >= 2, got {d}")));
        }
        if !(m_star > 0.0 && m_star < 1.0) {
            return Err(Error::domain(format!(
                "m_star must lie in (0, 1), got {m_star}"
            )));
        }
        if !(w1 > 0.0 && w1.is_finite()) {
            return Err(Error::domain(format!("w1 must be positive, got {w1}")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be positive, got {kappa}")));
        }
        Ok(ModelParams { d, m_star, w1, kappa })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn m_star(&self) -> f64 {
        self.m_star
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Which phase the fixed boundary ring favors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// All boundary spins +1 (liquid).
    Plus,
    /// All boundary spins -1 (ice).
    Minus,
}

impl BoundaryCondition {
    /// +1.0 for `Plus`, -1.0 for `Minus`.
    pub fn sign(self) -> f64 {
        match self {
            BoundaryCondition::Plus => 1.0,
            BoundaryCondition::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BoundaryCondition::Plus => "plus",
            BoundaryCondition::Minus => "minus",
        }
    }
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(BoundaryCondition::Plus),
            "minus" | "-" => Ok(BoundaryCondition::Minus),
            other => Err(Error::domain(format!(
                "boundary condition must be `plus` or `minus`, got `{other}`"
            ))),
        }
    }
}

/// A point of the scaled phase plane: `b` is the surface-order field
/// (limit of L h_L) and `xi >= 0` the surface-order concentration
/// (limit of L c_L).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoPoint {
    b: f64,
    xi: f64,
}

impl ThermoPoint {
    pub fn new(b: f64, xi: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::domain(format!("b must be finite, got {b}")));
        }
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(Error::domain(format!("xi must be >= 0, got {xi}")));
        }
        Ok(ThermoPoint { b, xi })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
}

/// Critical coupling of the square-lattice Ising model, `ln(1 + sqrt 2)/2`.
pub const ISING_2D_JC: f64 = 0.44068679350977147;

/// Spontaneous magnetization of the square-lattice Ising model,
/// `(1 - sinh(2J)^-4)^(1/8)` for `J > Jc`, `None` otherwise.
///
/// Classical closed form; provided only as a convenience for picking
/// `m_star` consistent with a simulated coupling.
pub fn onsager_m_star(j: f64) -> Option<f64> {
    if j <= ISING_2D_JC {
        return None;
    }
    Some((1.0 - (2.0 * j).sinh().powi(-4)).powf(0.125))
}
