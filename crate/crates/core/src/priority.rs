//! Priority scores: attribute binning, per-tract scores, OD-pair priorities
//! and priority groups.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::network::{NodeId, OdPair, PriorityProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct TractAttributes {
    pub tract_id: String,
    pub median_income: f64,
    /// Fraction of households owning a vehicle.
    pub vehicle_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    pub bins: usize,
    pub epsilon: f64,
    pub p_floor: f64,
    pub p_ceil: f64,
    pub groups: usize,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            bins: 10,
            epsilon: 0.01,
            p_floor: 0.05,
            p_ceil: 0.95,
            groups: 5,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 bins, got {}",
                self.bins
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 / self.bins as f64) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1/bins), got {}",
                self.epsilon
            )));
        }
        if !(self.p_floor > 0.0 && self.p_floor < self.p_ceil && self.p_ceil < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "priority clamp [{}, {}] must satisfy 0 < floor < ceil < 1",
                self.p_floor, self.p_ceil
            )));
        }
        if self.groups == 0 {
            return Err(Error::InvalidArgument("need at least one group".into()));
        }
        Ok(())
    }
}

/// 1-based equal-width bin of every value over `[min, max]`. Values on an
/// interior boundary fall in the upper bin; the maximum falls in the top bin;
/// a constant column falls entirely in bin 1.
pub fn bin_indices(values: &[f64], bins: usize) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot bin an empty column".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite value {v}")));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    Ok(values
        .iter()
        .map(|&v| {
            if span <= 0.0 {
                return 1;
            }
            let pos = (v - min) / span * bins as f64;
            ((pos + 1e-9).floor() as usize + 1).min(bins)
        })
        .collect())
}

/// Bin scores: bin `j` scores `j / bins`, the top bin scores `1 - epsilon`.
pub fn bin_scores(values: &[f64], bins: usize, epsilon: f64) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bins, got {bins}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 / bins as f64) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1/bins), got {epsilon}"
        )));
    }
    Ok(bin_indices(values, bins)?
        .into_iter()
        .map(|j| {
            if j == bins {
                1.0 - epsilon
            } else {
                j as f64 / bins as f64
            }
        })
        .collect())
}

/// Maps raw scores (high = affluent, car-owning) to priorities in
/// `[p_floor, p_ceil]`: `p_floor + (p_ceil - p_floor) * (1 - raw / max_raw)`.
/// A single tract gets the midpoint of the interval.
pub fn priorities_from_raw(raw: &[f64], p_floor: f64, p_ceil: f64) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::InvalidArgument("no tracts to score".into()));
    }
    if raw.len() == 1 {
        return Ok(vec![0.5 * (p_floor + p_ceil)]);
    }
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() || max <= 0.0 {
        return Err(Error::InvalidArgument("raw scores must be positive".into()));
    }
    Ok(raw
        .iter()
        .map(|&r| p_floor + (p_ceil - p_floor) * (1.0 - r / max))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TractScore {
    pub tract_id: String,
    pub income_score: f64,
    pub vehicle_score: f64,
    pub raw: f64,
    pub priority: f64,
}

/// Per-tract priority: income and vehicle-ownership bin scores are summed,
/// normalized by the largest sum, inverted (so the neediest tract ranks
/// highest) and rescaled into the configured clamp interval.
pub fn tract_priority(attrs: &[TractAttributes], config: &ScoringConfig) -> Result<Vec<TractScore>> {
    config.validate()?;
    if attrs.is_empty() {
        return Err(Error::InvalidArgument("no tracts to score".into()));
    }
    for t in attrs {
        if !(t.median_income.is_finite() && t.median_income > 0.0) {
            return Err(Error::Validation(format!(
                "tract {}: median income must be positive",
                t.tract_id
            )));
        }
        if !(0.0..=1.0).contains(&t.vehicle_rate) {
            return Err(Error::Validation(format!(
                "tract {}: vehicle rate must lie in [0, 1]",
                t.tract_id
            )));
        }
    }
    let incomes: Vec<f64> = attrs.iter().map(|t| t.median_income).collect();
    let rates: Vec<f64> = attrs.iter().map(|t| t.vehicle_rate).collect();
    let income_scores = bin_scores(&incomes, config.bins, config.epsilon)?;
    let vehicle_scores = bin_scores(&rates, config.bins, config.epsilon)?;
    let raw: Vec<f64> = income_scores
        .iter()
        .zip(&vehicle_scores)
        .map(|(a, b)| a + b)
        .collect();
    let priorities = priorities_from_raw(&raw, config.p_floor, config.p_ceil)?;
    Ok(attrs
        .iter()
        .enumerate()
        .map(|(i, t)| TractScore {
            tract_id: t.tract_id.clone(),
            income_score: income_scores[i],
            vehicle_score: vehicle_scores[i],
            raw: raw[i],
            priority: priorities[i],
        })
        .collect())
}

/// Labels every OD pair with the priority of its origin.
pub fn od_priorities(
    node_priorities: &BTreeMap<NodeId, f64>,
    pairs: &[OdPair],
    groups: usize,
) -> Result<PriorityProfile> {
    let mut out = BTreeMap::new();
    for &pair in pairs {
        let p = node_priorities.get(&pair.origin).ok_or_else(|| {
            Error::InvalidArgument(format!("node {} has no priority", pair.origin))
        })?;
        out.insert(pair, *p);
    }
    PriorityProfile::new(out, groups)
}

/// Splits `[min p, max p]` into `k` equal-width intervals; the interval with
/// the largest priorities is group 1. Boundary values go to the
/// higher-priority group.
pub fn assign_groups(priorities: &BTreeMap<OdPair, f64>, k: usize) -> Result<BTreeMap<OdPair, usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one priority group".into()));
    }
    let min = priorities.values().copied().fold(f64::INFINITY, f64::min);
    let max = priorities.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    Ok(priorities
        .iter()
        .map(|(&pair, &p)| {
            let group = if span <= 0.0 {
                1
            } else {
                let pos = (max - p) / span * k as f64;
                ((pos - 1e-9).ceil().max(1.0) as usize).min(k)
            };
            (pair, group)
        })
        .collect())
}
