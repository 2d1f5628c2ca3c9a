//! Hill tail-index estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Left,
    Right,
}

pub const PANEL_FRACTIONS: [f64; 4] = [0.01, 0.025, 0.05, 0.10];

/// Hill estimate from the `k + 1` largest values of one side.
///
/// `k = floor(tail_fraction * n)`. The right tail orders the values
/// descending, the left tail orders the negated values descending. The
/// threshold order statistic must be strictly positive on that side.
pub fn hill_estimator(x: &[f64], tail_fraction: f64, tail: Tail) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "tail fraction {tail_fraction} outside (0, 1)"
        )));
    }
    let k = (tail_fraction * x.len() as f64 + 1e-9).floor() as usize;
    if k < 2 {
        return Err(Error::InsufficientData(format!(
            "hill estimator needs k >= 2, got {k} from n = {}",
            x.len()
        )));
    }
    if k >= x.len() {
        return Err(Error::InsufficientData("tail covers the whole sample".into()));
    }
    let mut v: Vec<f64> = match tail {
        Tail::Right => x.to_vec(),
        Tail::Left => x.iter().map(|a| -a).collect(),
    };
    if v.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidInput("hill input contains non-finite values".into()));
    }
    // the k + 1 largest values, descending
    v.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = v[k];
    if !(threshold > 0.0) {
        return Err(Error::InsufficientData(format!(
            "fewer than {} strictly {} observations",
            k + 1,
            match tail {
                Tail::Right => "positive",
                Tail::Left => "negative",
            }
        )));
    }
    let lt = threshold.ln();
    let s: f64 = v[..k].iter().map(|a| a.ln() - lt).sum::<f64>() / k as f64;
    if !(s > 0.0) {
        return Err(Error::Degenerate("tied tail: log spacings sum to zero".into()));
    }
    Ok(1.0 / s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEntry {
    pub fraction: f64,
    pub left: Option<f64>,
    pub right: Option<f64>,
}

/// Hill indices at 1%, 2.5%, 5% and 10% for both tails.
pub fn hill_panel(x: &[f64]) -> Vec<HillEntry> {
    PANEL_FRACTIONS
        .iter()
        .map(|&fraction| HillEntry {
            fraction,
            left: hill_estimator(x, fraction, Tail::Left).ok(),
            right: hill_estimator(x, fraction, Tail::Right).ok(),
        })
        .collect()
}
