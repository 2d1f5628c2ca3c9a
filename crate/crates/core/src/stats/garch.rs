//! GARCH(1,1) maximum-likelihood filter with Gaussian or standardised
//! Student-t innovations.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::optim::nelder_mead;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    Gaussian,
    StudentT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub innovation: Innovation,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Degrees of freedom for Student-t innovations.
    pub nu: Option<f64>,
    /// Sample mean removed before filtering.
    pub mean: f64,
    pub log_likelihood: f64,
    /// Conditional standard deviations.
    pub sigma: Vec<f64>,
    /// Standardised residuals `z_t = eps_t / sigma_t`.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `alpha + beta` sits at the integrated boundary.
    pub igarch: bool,
}

const NU_MAX: f64 = 500.0;
const IGARCH_TOL: f64 = 1e-3;

fn feasible(p: &[f64]) -> bool {
    p[0] > 0.0
        && p[1] >= 0.0
        && p[2] >= 0.0
        && p[1] + p[2] < 1.0
        && p.get(3).is_none_or(|&nu| nu > 2.0 && nu < NU_MAX)
}

fn variances(eps: &[f64], omega: f64, alpha: f64, beta: f64, start: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(eps.len());
    let mut s2 = start;
    out.push(s2);
    for e in &eps[..eps.len() - 1] {
        s2 = omega + alpha * e * e + beta * s2;
        out.push(s2);
    }
    out
}

fn neg_log_likelihood(eps: &[f64], p: &[f64], start: f64) -> f64 {
    if !feasible(p) {
        return f64::INFINITY;
    }
    let buf = variances(eps, p[0], p[1], p[2], start);
    match p.get(3) {
        None => {
            let ln2pi = (2.0 * std::f64::consts::PI).ln();
            0.5 * eps
                .iter()
                .zip(buf.iter())
                .map(|(e, s2)| ln2pi + s2.ln() + e * e / s2)
                .sum::<f64>()
        }
        Some(&nu) => {
            let c = ln_gamma((nu + 1.0) / 2.0)
                - ln_gamma(nu / 2.0)
                - 0.5 * (std::f64::consts::PI * (nu - 2.0)).ln();
            -eps.iter()
                .zip(buf.iter())
                .map(|(e, s2)| {
                    c - 0.5 * s2.ln() - 0.5 * (nu + 1.0) * (1.0 + e * e / (s2 * (nu - 2.0))).ln()
                })
                .sum::<f64>()
        }
    }
}

/// Fit GARCH(1,1) `sigma2_t = omega + alpha eps2_{t-1} + beta sigma2_{t-1}`
/// to the demeaned series. The recursion starts at the sample variance.
///
/// Non-convergence and the `alpha + beta -> 1` boundary are flagged on the
/// result rather than raised.
pub fn garch_filter(series: &[f64], innovation: Innovation) -> Result<GarchFit> {
    if series.len() < 30 {
        return Err(Error::InsufficientData(format!(
            "garch needs at least 30 points, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("garch input contains non-finite values".into()));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::Degenerate("garch of a constant series".into()));
    }
    // fit in unit-variance coordinates for a well-scaled simplex
    let scale = var.sqrt();
    let eps: Vec<f64> = series.iter().map(|v| (v - mean) / scale).collect();
    let objective = |p: &[f64]| neg_log_likelihood(&eps, p, 1.0);
    let (mut x0, mut step) = (vec![0.05, 0.05, 0.9], vec![0.05, 0.04, -0.1]);
    if innovation == Innovation::StudentT {
        x0.push(8.0);
        step.push(3.0);
    }
    let mut best = nelder_mead(objective, &x0, &step, 1e-11, 4000);
    let mut iterations = best.iterations;
    // restarts guard against a collapsed simplex
    for _ in 0..3 {
        let step: Vec<f64> = best.x.iter().map(|v| 0.1 * v.abs().max(0.01)).collect();
        let again = nelder_mead(objective, &best.x, &step, 1e-11, 4000);
        iterations += again.iterations;
        let improved = again.value < best.value - 1e-9 * (1.0 + best.value.abs());
        best = if again.value <= best.value { again } else { best };
        if !improved {
            break;
        }
    }
    if !best.value.is_finite() {
        return Err(Error::Degenerate("garch likelihood is not finite anywhere".into()));
    }
    let (omega_u, alpha, beta) = (best.x[0], best.x[1], best.x[2]);
    let sigma: Vec<f64> = variances(&eps, omega_u, alpha, beta, 1.0)
        .iter().map(|s2| s2.sqrt() * scale).collect();
    let residuals: Vec<f64> = series
        .iter()
        .zip(&sigma)
        .map(|(v, s)| (v - mean) / s)
        .collect();
    Ok(GarchFit {
        innovation,
        omega: omega_u * var,
        alpha,
        beta,
        nu: best.x.get(3).copied(),
        mean,
        // undo the unit-variance change of variables
        log_likelihood: -best.value - n * scale.ln(),
        sigma,
        residuals,
        converged: best.converged,
        iterations,
        igarch: alpha + beta >= 1.0 - IGARCH_TOL,
    })
}
