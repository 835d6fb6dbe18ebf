//! Empirical reductions of a simulated graph: the (w1, w2) histogram, the
//! per-bin conditional moments, and the log-log moment-curve fit.

use crate::simulator::GraphState;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("insufficient data: {0} usable rows, need at least 2")]
    InsufficientData(usize),
}

/// Exact histogram of (central weight, peripheral weight) over vertices.
#[derive(Debug, Clone)]
pub struct EmpiricalJoint {
    pub counts: BTreeMap<(u64, u64), u64>,
    pub total_vertices: u64,
}

pub fn empirical_joint(state: &GraphState) -> EmpiricalJoint {
    let mut counts = BTreeMap::new();
    for (w1, w2) in state.vertex_weights() {
        *counts.entry((w1, w2)).or_insert(0) += 1;
    }
    EmpiricalJoint { counts, total_vertices: state.vertex_count() as u64 }
}

/// Which coordinate to condition on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Fix w1, take moments of w2.
    FixW1,
    /// Fix w2, take moments of w1.
    FixW2,
}

/// Empirical marginal fraction and conditional moments at one fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub w: u64,
    pub count: u64,
    pub marginal: f64,
    pub mean: f64,
    pub second_moment: f64,
}

/// Conditional moments of the free coordinate for every fixed value whose
/// bin holds at least `min_count` vertices, in increasing order of the
/// fixed value.
pub fn conditional_moments(
    joint: &EmpiricalJoint,
    axis: Axis,
    min_count: u64,
) -> Vec<MomentRow> {
    let mut bins: BTreeMap<u64, (u64, u128, u128)> = BTreeMap::new();
    for (&(w1, w2), &count) in &joint.counts {
        let (fixed, free) = match axis {
            Axis::FixW1 => (w1, w2),
            Axis::FixW2 => (w2, w1),
        };
        let entry = bins.entry(fixed).or_insert((0, 0, 0));
        entry.0 += count;
        entry.1 += u128::from(count) * u128::from(free);
        entry.2 += u128::from(count) * u128::from(free) * u128::from(free);
    }
    bins.into_iter()
        .filter(|&(_, (count, _, _))| count >= min_count)
        .map(|(w, (count, sum, sum_sq))| MomentRow {
            w,
            count,
            marginal: count as f64 / joint.total_vertices as f64,
            mean: sum as f64 / count as f64,
            second_moment: sum_sq as f64 / count as f64,
        })
        .collect()
}

/// Outcome of the log-log moment fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Ordinary least squares of log10(second moment) on log10(mean), one point
/// per surviving bin. Rows below `min_count` or with a non-positive mean or
/// second moment are excluded; the count filter is the variance control
/// (weighting points by bin count would let the huge low-weight bins, which
/// sit before the power law kicks in, pull the slope well below its
/// asymptotic value no matter how long the run).
pub fn loglog_fit(rows: &[MomentRow], min_count: u64) -> Result<TaylorFit, FitError> {
    let usable: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.count >= min_count && r.mean > 0.0 && r.second_moment > 0.0)
        .map(|r| (r.mean.log10(), r.second_moment.log10()))
        .collect();
    if usable.len() < 2 {
        return Err(FitError::InsufficientData(usable.len()));
    }
    let n = usable.len() as f64;
    let xbar = usable.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let ybar = usable.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|&(x, _)| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = usable.iter().map(|&(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = usable
        .iter()
        .map(|&(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let ss_tot: f64 = usable.iter().map(|&(_, y)| (y - ybar) * (y - ybar)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(TaylorFit { slope, intercept, r_squared, points_used: usable.len() })
}
