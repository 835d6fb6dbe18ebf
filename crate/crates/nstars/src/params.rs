//! Model parameters and the derived constants used by every formula.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Raw inputs of the model: star size `n` and the branch probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Star size N >= 3.
    pub n: u32,
    /// Probability of adding a new vertex at a step (0 < p <= 1).
    pub p: f64,
    /// Probability that an old-vertex step activates a star preferentially.
    pub q: f64,
    /// Probability that a new vertex joins a preferentially chosen team.
    pub r: f64,
}

impl ModelParams {
    pub fn new(n: u32, p: f64, q: f64, r: f64) -> Result<Self, ParamError> {
        let params = ModelParams { n, p, q, r };
        params.validate_simulation()?;
        Ok(params)
    }

    /// The model itself is defined for 0 < p <= 1 and closed q, r in [0,1].
    pub fn validate_simulation(&self) -> Result<(), ParamError> {
        if self.n < 3 {
            return Err(ParamError::InvalidParams(format!("N must be >= 3, got {}", self.n)));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(ParamError::InvalidParams(format!("p must be in (0,1], got {}", self.p)));
        }
        for (name, v) in [("q", self.q), ("r", self.r)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(ParamError::InvalidParams(format!("{name} must be in [0,1], got {v}")));
            }
        }
        Ok(())
    }

    /// The closed-form results assume open intervals for p, q and r.
    pub fn validate_analytic(&self) -> Result<(), ParamError> {
        self.validate_simulation()?;
        for (name, v) in [("p", self.p), ("q", self.q), ("r", self.r)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(ParamError::InvalidParams(format!(
                    "{name} must be in the open interval (0,1) for analytic formulas, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// The eight derived constants, plus the effective role split.
///
/// `r_eff`/`r_comp` hold the probability mass attached to each role so that
/// the two coordinates can be interchanged without touching the formulas:
/// swapping exchanges (a1, b1, r_eff) with (a2, b2, r_comp). `a11` and `a12`
/// always refer to the unswapped orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub a11: f64,
    pub a12: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub a: f64,
    pub b: f64,
    /// Probability weight of the first role's boundary case (r unswapped).
    pub r_eff: f64,
    /// Complement of `r_eff` (1 - r unswapped).
    pub r_comp: f64,
    /// True when the roles of the two coordinates are interchanged.
    pub swapped: bool,
}

/// Finiteness conditions for the conditional moments and the asymptotic
/// exponents they grow with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// b1 + 1 > a2: the conditional expectation is finite.
    pub e_finite: bool,
    /// b1 + 1 > 2*a2: the conditional second moment is finite.
    pub m_finite: bool,
    /// b2 + 1 > 2*a1: the role-swapped second moment is finite.
    pub m_finite_swapped: bool,
    /// a2 / a1, the growth exponent of the conditional expectation.
    pub e_exponent: f64,
    /// 2*a2 / a1, the growth exponent of the conditional second moment.
    pub m_exponent: f64,
}

/// Compute the derived constants from the raw parameters.
pub fn derive(params: ModelParams) -> Result<DerivedParams, ParamError> {
    params.validate_simulation()?;
    let ModelParams { n, p, q, r } = params;
    let nf = f64::from(n);
    let a11 = p * r;
    let a12 = (1.0 - p) * q;
    let a1 = a11 + a12;
    let a2 = p * r * (nf - 2.0) / (nf - 1.0) + (1.0 - p) * q;
    let b1 = (1.0 - p) * (1.0 - q) / p;
    let b2 = (nf - 1.0) * ((1.0 - r) + b1);
    Ok(DerivedParams {
        a11,
        a12,
        a1,
        a2,
        b1,
        b2,
        a: a1 + a2,
        b: b1 + b2,
        r_eff: r,
        r_comp: 1.0 - r,
        swapped: false,
    })
}

/// Evaluate the moment-finiteness conditions of the derived constants.
pub fn check_conditions(d: &DerivedParams) -> ConditionReport {
    ConditionReport {
        e_finite: d.b1 + 1.0 > d.a2,
        m_finite: d.b1 + 1.0 > 2.0 * d.a2,
        m_finite_swapped: d.b2 + 1.0 > 2.0 * d.a1,
        e_exponent: d.a2 / d.a1,
        m_exponent: 2.0 * d.a2 / d.a1,
    }
}
