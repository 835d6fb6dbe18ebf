//! The limit joint distribution of (central weight, peripheral weight) and
//! everything derived from it: marginals, conditional moments, tail
//! coefficients and the fluctuation-scaling constant.
//!
//! Each quantity is available by two independent routes — an exact recurrence
//! over a finite table and a Gamma-function closed form — so either can serve
//! as an oracle for the other.

use crate::params::DerivedParams;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("divergent moment: {0}")]
    DivergentMoment(String),
}

/// A moment that may be infinite, as a value rather than an error, so that
/// parameter sweeps can carry divergent cells alongside finite ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentValue {
    Finite(f64),
    Divergent,
}

impl MomentValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            MomentValue::Finite(v) => Some(v),
            MomentValue::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, MomentValue::Divergent)
    }
}

/// Closed-form results assume the open-interval parameter regime; in terms of
/// the derived constants that means every one of them is strictly positive
/// and the role split is non-degenerate.
fn validate(d: &DerivedParams) -> Result<(), AnalyticError> {
    let ok = d.a1 > 0.0
        && d.a2 > 0.0
        && d.b1 > 0.0
        && d.b2 > 0.0
        && d.r_eff > 0.0
        && d.r_eff < 1.0
        && d.r_comp > 0.0
        && d.r_comp < 1.0;
    if ok {
        Ok(())
    } else {
        Err(AnalyticError::InvalidParams(
            "analytic formulas require parameters in the open interval (0,1)".into(),
        ))
    }
}

/// Dense rectangle of the limit joint distribution, indexed (w1, w2).
#[derive(Debug, Clone)]
pub struct JointTable {
    pub w1_max: usize,
    pub w2_max: usize,
    values: Vec<f64>,
}

impl JointTable {
    #[inline]
    pub fn get(&self, w1: usize, w2: usize) -> f64 {
        self.values[w1 * (self.w2_max + 1) + w2]
    }

    /// All pairs (w1, w2, value) in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let cols = self.w2_max + 1;
        self.values.iter().enumerate().map(move |(i, &v)| (i / cols, i % cols, v))
    }
}

/// Fill the joint-distribution rectangle by the exact recurrence, sweeping
/// anti-diagonals w1 + w2 = s so every entry sees its two predecessors.
pub fn joint_table(
    d: &DerivedParams,
    w1_max: usize,
    w2_max: usize,
) -> Result<JointTable, AnalyticError> {
    validate(d)?;
    if w1_max < 1 || w2_max < 1 {
        return Err(AnalyticError::InvalidParams("table extents must be >= 1".into()));
    }
    let cols = w2_max + 1;
    let mut values = vec![0.0f64; (w1_max + 1) * cols];
    values[cols] = d.r_comp / (d.a1 + d.b + 1.0); // x_{1,0}
    values[1] = d.r_eff / (d.a2 + d.b + 1.0); // x_{0,1}
    for s in 2..=(w1_max + w2_max) {
        let lo = s.saturating_sub(w2_max);
        let hi = s.min(w1_max);
        for w1 in lo..=hi {
            let w2 = s - w1;
            let from_left = if w1 >= 1 {
                (d.a1 * (w1 as f64 - 1.0) + d.b1) * values[(w1 - 1) * cols + w2]
            } else {
                0.0
            };
            let from_below = if w2 >= 1 {
                (d.a2 * (w2 as f64 - 1.0) + d.b2) * values[w1 * cols + w2 - 1]
            } else {
                0.0
            };
            values[w1 * cols + w2] =
                (from_left + from_below) / (d.a1 * w1 as f64 + d.a2 * w2 as f64 + d.b + 1.0);
        }
    }
    Ok(JointTable { w1_max, w2_max, values })
}

/// Closed form for the first row x_{0,l}, l >= 1.
pub fn x_0l_closed(d: &DerivedParams, l: u64) -> Result<f64, AnalyticError> {
    validate(d)?;
    if l < 1 {
        return Err(AnalyticError::InvalidParams("l must be >= 1".into()));
    }
    let ratio = ln_gamma(1.0 + (d.b + 1.0) / d.a2) - ln_gamma(1.0 + d.b2 / d.a2)
        + ln_gamma(l as f64 + d.b2 / d.a2)
        - ln_gamma(l as f64 + (d.a2 + d.b + 1.0) / d.a2);
    Ok(d.r_eff / d.a2 * ratio.exp())
}

/// Closed form for the first column x_{k,0}, k >= 1.
pub fn x_k0_closed(d: &DerivedParams, k: u64) -> Result<f64, AnalyticError> {
    x_0l_closed(&swap_roles(d), k)
}

/// Evaluate x_{w1,l} from the row above it: a weighted sum of x_{w1-1,i}
/// (i = 1..=l, supplied in `previous_row`) plus a boundary term in x_{w1,0}.
pub fn row_via_b_coefficients(
    d: &DerivedParams,
    w1: u64,
    l: u64,
    previous_row: &[f64],
    x_w1_0: f64,
) -> Result<f64, AnalyticError> {
    validate(d)?;
    if w1 < 1 || l < 1 {
        return Err(AnalyticError::InvalidParams("requires w1 >= 1 and l >= 1".into()));
    }
    if previous_row.len() < l as usize {
        return Err(AnalyticError::InvalidParams(format!(
            "previous_row must hold at least {l} entries"
        )));
    }
    // c is the shifted index (w1*a1 + b + 1)/a2 shared by every coefficient.
    let c = (w1 as f64 * d.a1 + d.b + 1.0) / d.a2;
    let bb = d.b2 / d.a2;
    let common = ln_gamma(l as f64 + bb) - ln_gamma(l as f64 + 1.0 + c);
    let lead = (w1 as f64 - 1.0) * d.a1 + d.b1;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in 1..=l {
        let coef = lead / d.a2
            * (common + ln_gamma(i as f64 + c) - ln_gamma(i as f64 + bb)).exp();
        let term = coef * previous_row[i as usize - 1];
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    let boundary = (ln_gamma(1.0 + c) - ln_gamma(bb) + common).exp();
    Ok(sum + boundary * x_w1_0)
}

/// Marginal probability that a vertex has central weight `w1` in the limit.
pub fn marginal_closed(d: &DerivedParams, w1: u64) -> Result<f64, AnalyticError> {
    validate(d)?;
    match w1 {
        0 => Ok(d.r_eff / (d.b1 + 1.0)),
        1 => Ok(d.b1 / (d.a1 + d.b1 + 1.0)
            * (d.r_eff / (d.b1 + 1.0) + d.r_comp / d.b1)),
        _ => {
            let ratio = ln_gamma(w1 as f64 + d.b1 / d.a1) - ln_gamma(d.b1 / d.a1)
                + ln_gamma(1.0 + (d.b1 + 1.0) / d.a1)
                - ln_gamma(w1 as f64 + 1.0 + (d.b1 + 1.0) / d.a1);
            Ok(ratio.exp() * (d.r_comp + d.b1) / (d.b1 * (d.b1 + 1.0)))
        }
    }
}

/// The shifted-moment ledgers behind the conditional mean and second moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxMoments {
    /// Sum of x_{w1,l} (l + b2/a2) over l.
    pub a_w1: f64,
    /// Sum of x_{w1,l} (l + b2/a2)(l + 1 + b2/a2) over l, when finite.
    pub b_w1: MomentValue,
    pub a_1: f64,
    pub b_1: MomentValue,
}

fn aux_a1(d: &DerivedParams) -> Result<f64, AnalyticError> {
    if d.b1 + 1.0 <= d.a2 {
        return Err(AnalyticError::DivergentMoment(format!(
            "conditional expectation requires b1 + 1 > a2 (b1 = {}, a2 = {})",
            d.b1, d.a2
        )));
    }
    let shift = d.b2 / d.a2;
    Ok(d.r_eff / (d.b1 + 1.0 - d.a2) * (1.0 + shift) * d.b1
        / (d.a1 + d.b1 + 1.0 - d.a2)
        + d.r_comp * shift / (d.a1 + d.b1 + 1.0 - d.a2))
}

fn aux_b1(d: &DerivedParams) -> MomentValue {
    if d.b1 + 1.0 <= 2.0 * d.a2 {
        return MomentValue::Divergent;
    }
    let shift = d.b2 / d.a2;
    MomentValue::Finite(
        d.b1 / (d.a1 + d.b1 + 1.0 - 2.0 * d.a2) * d.r_eff / (d.b1 + 1.0 - 2.0 * d.a2)
            * (1.0 + shift)
            * (2.0 + shift)
            + shift * (1.0 + shift) * d.r_comp / (d.a1 + d.b1 + 1.0 - 2.0 * d.a2),
    )
}

/// The shifted first and second moment ledgers at a given row.
pub fn aux_moments(d: &DerivedParams, w1: u64) -> Result<AuxMoments, AnalyticError> {
    validate(d)?;
    let a_1 = aux_a1(d)?;
    let b_1 = aux_b1(d);
    let shift = d.b2 / d.a2;
    let (a_w1, b_w1) = match w1 {
        0 => {
            let a_0 = d.r_eff / (d.b1 + 1.0 - d.a2) * (1.0 + shift);
            let b_0 = match b_1 {
                MomentValue::Divergent => MomentValue::Divergent,
                MomentValue::Finite(_) => MomentValue::Finite(
                    d.r_eff / (d.b1 + 1.0 - 2.0 * d.a2) * (1.0 + shift) * (2.0 + shift),
                ),
            };
            (a_0, b_0)
        }
        _ => {
            let a_ratio = ln_gamma(w1 as f64 + d.b1 / d.a1) - ln_gamma(1.0 + d.b1 / d.a1)
                + ln_gamma(2.0 + (d.b1 + 1.0 - d.a2) / d.a1)
                - ln_gamma(w1 as f64 + 1.0 + (d.b1 + 1.0 - d.a2) / d.a1);
            let a_w1 = a_ratio.exp() * a_1;
            let b_w1 = match b_1 {
                MomentValue::Divergent => MomentValue::Divergent,
                MomentValue::Finite(b_1) => {
                    let b_ratio = ln_gamma(w1 as f64 + d.b1 / d.a1)
                        - ln_gamma(1.0 + d.b1 / d.a1)
                        + ln_gamma(2.0 + (d.b1 + 1.0 - 2.0 * d.a2) / d.a1)
                        - ln_gamma(w1 as f64 + 1.0 + (d.b1 + 1.0 - 2.0 * d.a2) / d.a1);
                    MomentValue::Finite(b_ratio.exp() * b_1)
                }
            };
            (a_w1, b_w1)
        }
    };
    Ok(AuxMoments { a_w1, b_w1, a_1, b_1 })
}

/// Conditional expectation of the peripheral weight given central weight w1.
pub fn expectation_closed(d: &DerivedParams, w1: u64) -> Result<f64, AnalyticError> {
    validate(d)?;
    let aux = aux_moments(d, w1)?;
    let marginal = marginal_closed(d, w1)?;
    Ok(aux.a_w1 / marginal - d.b2 / d.a2)
}

/// Conditional second moment of the peripheral weight given central weight
/// w1; `Divergent` when b1 + 1 <= 2*a2.
pub fn second_moment_closed(d: &DerivedParams, w1: u64) -> Result<MomentValue, AnalyticError> {
    validate(d)?;
    let aux = aux_moments(d, w1)?;
    let b_w1 = match aux.b_w1 {
        MomentValue::Divergent => return Ok(MomentValue::Divergent),
        MomentValue::Finite(v) => v,
    };
    let marginal = marginal_closed(d, w1)?;
    let e_w1 = aux.a_w1 / marginal - d.b2 / d.a2;
    let shift = d.b2 / d.a2;
    Ok(MomentValue::Finite(
        b_w1 / marginal - (1.0 + 2.0 * shift) * e_w1 - shift * (1.0 + shift),
    ))
}

/// Coefficients of the power-law tails of the joint distribution:
/// x_{w1,w2} ~ A(w2) w1^{-(1+(b2+1)/a1)} for fixed w2, and
/// x_{w1,w2} ~ C(w1) w2^{-(1+(b1+1)/a2)} for fixed w1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCoefficients {
    pub a_of_w2: f64,
    pub c_of_w1: f64,
}

pub fn tail_coefficients(
    d: &DerivedParams,
    w1: u64,
    w2: u64,
) -> Result<TailCoefficients, AnalyticError> {
    validate(d)?;
    let a_of_w2 = d.r_comp / d.a1
        * (-ln_gamma(w2 as f64 + 1.0) + ln_gamma(w2 as f64 + d.b2 / d.a2)
            - ln_gamma(d.b2 / d.a2)
            + ln_gamma(1.0 + (d.b + 1.0) / d.a1)
            - ln_gamma(1.0 + d.b1 / d.a1))
        .exp();
    let c_of_w1 = d.r_eff / d.a2
        * (-ln_gamma(w1 as f64 + 1.0) + ln_gamma(w1 as f64 + d.b1 / d.a1)
            - ln_gamma(d.b1 / d.a1)
            + ln_gamma(1.0 + (d.b + 1.0) / d.a2)
            - ln_gamma(1.0 + d.b2 / d.a2))
        .exp();
    Ok(TailCoefficients { a_of_w2, c_of_w1 })
}

/// The constant C such that M_{w1} ~ C * E_{w1}^2 as w1 grows; `Divergent`
/// when the second moment is infinite.
pub fn taylor_constant(d: &DerivedParams) -> Result<MomentValue, AnalyticError> {
    validate(d)?;
    let a_1 = match aux_a1(d) {
        Ok(v) => v,
        Err(AnalyticError::DivergentMoment(_)) => return Ok(MomentValue::Divergent),
        Err(e) => return Err(e),
    };
    let b_1 = match aux_b1(d) {
        MomentValue::Divergent => return Ok(MomentValue::Divergent),
        MomentValue::Finite(v) => v,
    };
    let x1dot = marginal_closed(d, 1)?;
    let gammas = ln_gamma(2.0 + (d.b1 + 1.0 - 2.0 * d.a2) / d.a1)
        + ln_gamma(2.0 + (d.b1 + 1.0) / d.a1)
        - 2.0 * ln_gamma(2.0 + (d.b1 + 1.0 - d.a2) / d.a1);
    Ok(MomentValue::Finite(b_1 * x1dot / (a_1 * a_1) * gammas.exp()))
}

/// View of the derived constants with the two coordinate roles interchanged:
/// the marginal/expectation/second-moment evaluators then describe the
/// peripheral-weight direction. An involution, bit-exactly.
pub fn swap_roles(d: &DerivedParams) -> DerivedParams {
    DerivedParams {
        a1: d.a2,
        a2: d.a1,
        b1: d.b2,
        b2: d.b1,
        r_eff: d.r_comp,
        r_comp: d.r_eff,
        swapped: !d.swapped,
        ..*d
    }
}

/// A truncated row sum together with an integral bound on the discarded
/// power-law tail, so truncation error stays auditable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSum {
    pub value: f64,
    pub tail_bound: f64,
}

/// Sum of x_{w1,l} * l^power over l = 0..=w2_max from a recurrence table,
/// with Kahan compensation. `power` must be 0, 1 or 2.
pub fn row_moment_truncated(
    d: &DerivedParams,
    table: &JointTable,
    w1: usize,
    power: u32,
) -> Result<TruncatedSum, AnalyticError> {
    if power > 2 {
        return Err(AnalyticError::InvalidParams("power must be 0, 1 or 2".into()));
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for l in 0..=table.w2_max {
        let term = table.get(w1, l) * (l as f64).powi(power as i32);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    // Tail of sum_{l>L} C(w1) l^{power - s} with s = 1 + (b1+1)/a2, bounded
    // by the integral from L upward when the exponent still decays.
    let s = 1.0 + (d.b1 + 1.0) / d.a2;
    let decay = s - power as f64;
    let tail_bound = if decay > 1.0 {
        let c = tail_coefficients(d, w1 as u64, 0)?.c_of_w1;
        c * (table.w2_max as f64).powf(1.0 - decay) / (decay - 1.0)
    } else {
        f64::INFINITY
    };
    Ok(TruncatedSum { value: sum, tail_bound })
}
