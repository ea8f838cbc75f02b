//! Window-width penalties.

/// Disutility of promising a width-Δ window: linear `αΔ` or power
/// `(α/β)Δ^β` with β > 1 (strictly convex).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Penalty {
    Linear { alpha: f64 },
    Power { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyError {
    InvalidParams(&'static str),
}

impl core::fmt::Display for PenaltyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PenaltyError::InvalidParams(msg) => write!(f, "invalid penalty: {msg}"),
        }
    }
}

impl core::error::Error for PenaltyError {}

impl Penalty {
    pub fn linear(alpha: f64) -> Result<Self, PenaltyError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(PenaltyError::InvalidParams("alpha must be positive and finite"));
        }
        Ok(Penalty::Linear { alpha })
    }

    pub fn power(alpha: f64, beta: f64) -> Result<Self, PenaltyError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(PenaltyError::InvalidParams("alpha must be positive and finite"));
        }
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(PenaltyError::InvalidParams("beta must be > 1 for strict convexity"));
        }
        Ok(Penalty::Power { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Penalty::Linear { alpha } | Penalty::Power { alpha, .. } => alpha,
        }
    }

    pub fn is_strictly_convex(&self) -> bool {
        matches!(self, Penalty::Power { .. })
    }

    /// 𝒫(Δ)
    pub fn value(&self, delta: f64) -> f64 {
        match *self {
            Penalty::Linear { alpha } => alpha * delta,
            Penalty::Power { alpha, beta } => alpha / beta * libm::pow(delta, beta),
        }
    }

    /// g(Δ) = 𝒫′(Δ)
    pub fn derivative(&self, delta: f64) -> f64 {
        match *self {
            Penalty::Linear { alpha } => alpha,
            Penalty::Power { alpha, beta } => alpha * libm::pow(delta, beta - 1.0),
        }
    }

    /// 𝒫″(Δ)
    pub fn second_derivative(&self, delta: f64) -> f64 {
        match *self {
            Penalty::Linear { .. } => 0.0,
            Penalty::Power { alpha, beta } => {
                alpha * (beta - 1.0) * libm::pow(delta, beta - 2.0)
            }
        }
    }

    /// g⁻¹(x) for the strictly convex variant: Δ = (x/α)^{1/(β−1)}.
    /// Returns `None` for Linear (g is constant, not invertible).
    pub fn derivative_inverse(&self, x: f64) -> Option<f64> {
        match *self {
            Penalty::Linear { .. } => None,
            Penalty::Power { alpha, beta } => {
                if x <= 0.0 {
                    Some(0.0)
                } else {
                    Some(libm::pow(x / alpha, 1.0 / (beta - 1.0)))
                }
            }
        }
    }
}
