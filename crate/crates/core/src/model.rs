//! Closed-form quantities of the stationary Rabi-coupled system
//!
//! ```text
//!   Δu = −u(1−u²−v²) − v(ω−αuv) =: F1(u,v)
//!   Δv = −v(1−u²−v²) − u(ω−αuv) =: F2(u,v)
//! ```
//!
//! together with its constant states, linearization, first integral and the
//! decay constants of the linearization at the wall end states.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 2×2 real matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("regime ConstantOnly (omega/alpha = {ratio} >= 1/2): no ordered end states (a, b)")]
    ConstantOnly { ratio: f64 },
    #[error("linearization degenerate at omega/alpha = {ratio} (requires omega/alpha < 1/2)")]
    Degenerate { ratio: f64 },
}

impl ModelError {
    pub fn name(&self) -> &'static str {
        match self {
            ModelError::InvalidParams(_) => "InvalidParams",
            ModelError::ConstantOnly { .. } => "ConstantOnly",
            ModelError::Degenerate { .. } => "Degenerate",
        }
    }
}

/// Qualitative regime, a pure function of ω/α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// 0 < ω/α < 1/2: ordered end states exist and walls connect them.
    Heteroclinic,
    /// ω = 0: end states (0, 1); decay rates decouple.
    OmegaZero,
    /// ω/α ≥ 1/2: the only positive solution is (c, c).
    ConstantOnly,
}

/// Physical parameters: α is the intercomponent coupling minus one, ω the
/// Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub alpha: f64,
    pub omega: f64,
}

impl Params {
    pub fn new(alpha: f64, omega: f64) -> Result<Self, ModelError> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "alpha must be finite and > 0, got {alpha}"
            )));
        }
        if !omega.is_finite() || omega < 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "omega must be finite and >= 0, got {omega}"
            )));
        }
        Ok(Self { alpha, omega })
    }

    /// ω/α
    pub fn ratio(&self) -> f64 {
        self.omega / self.alpha
    }

    pub fn regime(&self) -> Regime {
        let s = self.ratio();
        if s >= 0.5 {
            Regime::ConstantOnly
        } else if self.omega == 0.0 {
            Regime::OmegaZero
        } else {
            Regime::Heteroclinic
        }
    }
}

/// Constant states of the positive quadrant.
///
/// `(a, b)` solve `a² + b² = 1, ab = ω/α, a ≤ b` and exist only for
/// ω/α ≤ 1/2; `c = √((1+ω)/(2+α))` always exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibria {
    pub c: f64,
    ab: Option<(f64, f64)>,
}

impl Equilibria {
    pub fn a(&self) -> Option<f64> {
        self.ab.map(|(a, _)| a)
    }

    pub fn b(&self) -> Option<f64> {
        self.ab.map(|(_, b)| b)
    }

    pub fn ab(&self) -> Option<(f64, f64)> {
        self.ab
    }

    /// The ordered wall end states, `a < b` strictly.
    pub fn wall_states(&self, p: &Params) -> Result<(f64, f64), ModelError> {
        match self.ab {
            Some((a, b)) if a < b => Ok((a, b)),
            _ => Err(ModelError::ConstantOnly { ratio: p.ratio() }),
        }
    }

    /// Midpoint `(a+b)/2` used to pin translations.
    pub fn midpoint(&self) -> Option<f64> {
        self.ab.map(|(a, b)| 0.5 * (a + b))
    }
}

pub fn equilibria(p: &Params) -> Equilibria {
    let c = ((1.0 + p.omega) / (2.0 + p.alpha)).sqrt();
    let s = p.ratio();
    let ab = if s <= 0.5 {
        let disc = (1.0 - 4.0 * s * s).max(0.0).sqrt();
        Some((((1.0 - disc) / 2.0).sqrt(), ((1.0 + disc) / 2.0).sqrt()))
    } else {
        None
    };
    Equilibria { c, ab }
}

/// Right-hand sides `(F1, F2)`.
#[inline]
pub fn rhs(p: &Params, u: f64, v: f64) -> (f64, f64) {
    // grouped so that swapping u and v is exact in floating point
    let mass = 1.0 - (u * u + v * v);
    let rabi = p.omega - p.alpha * (u * v);
    (-u * mass - v * rabi, -v * mass - u * rabi)
}

/// `∂(F1, F2)/∂(u, v)`; symmetric.
#[inline]
pub fn jacobian(p: &Params, u: f64, v: f64) -> Mat2 {
    let ap1 = p.alpha + 1.0;
    let off = 2.0 * ap1 * (u * v) - p.omega;
    [
        [3.0 * u * u + ap1 * v * v - 1.0, off],
        [off, 3.0 * v * v + ap1 * u * u - 1.0],
    ]
}

fn potential(p: &Params, u: f64, v: f64) -> f64 {
    let mass = 1.0 - (u * u + v * v);
    let rabi = u * v - p.ratio();
    0.25 * mass * mass + 0.5 * p.alpha * rabi * rabi
}

/// First integral of the 1D system, constant along solutions and zero on
/// the heteroclinic.
#[inline]
pub fn hamiltonian(p: &Params, u: f64, v: f64, du: f64, dv: f64) -> f64 {
    0.5 * (du * du + dv * dv) - potential(p, u, v)
}

/// Integrand of the energy whose Euler–Lagrange equation is the system.
#[inline]
pub fn energy_density(p: &Params, u: f64, v: f64, du: f64, dv: f64) -> f64 {
    0.5 * (du * du + dv * dv) + potential(p, u, v)
}

/// Linearization constants at the end state `(b, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearData {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// Slow-eigenvector ratio; absent at ω = 0 where the limit depends on α.
    pub mu: Option<f64>,
}

impl LinearData {
    pub fn matrix(&self) -> Mat2 {
        [[self.a11, self.a12], [self.a12, self.a22]]
    }
}

pub fn linear_data(p: &Params) -> Result<LinearData, ModelError> {
    let s = p.ratio();
    if s >= 0.5 {
        return Err(ModelError::Degenerate { ratio: s });
    }
    let (a, b) = equilibria(p)
        .ab()
        .ok_or(ModelError::Degenerate { ratio: s })?;
    let (alpha, omega) = (p.alpha, p.omega);

    let a11 = 2.0 * b * b + alpha * a * a;
    let a22 = 2.0 * a * a + alpha * b * b;
    let a12 = -omega * (2.0 + alpha) / alpha;

    let root = ((alpha - 2.0).powi(2) + 32.0 * omega * omega / alpha).sqrt();
    let lambda_minus = (0.5 * ((alpha + 2.0) - root)).sqrt();
    let lambda_plus = (0.5 * ((alpha + 2.0) + root)).sqrt();

    let mu = if omega > 0.0 {
        let denom = alpha * ((alpha - 2.0) * (1.0 - 4.0 * s * s).sqrt() + root);
        Some(2.0 * omega * (alpha + 2.0) / denom)
    } else {
        None
    };

    Ok(LinearData {
        a11,
        a12,
        a22,
        lambda_minus,
        lambda_plus,
        mu,
    })
}
