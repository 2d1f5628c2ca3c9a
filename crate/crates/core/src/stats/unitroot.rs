//! Unit-root and stationarity tests: Dickey-Fuller (no deterministic
//! terms, no lagged differences), Phillips-Perron with a Newey-West long-run
//! variance, and KPSS around a linear trend.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const MIN_LENGTH: usize = 30;
pub const P_MIN: f64 = 0.001;
pub const P_MAX: f64 = 0.999;
pub const KPSS_P_MIN: f64 = 0.01;
pub const KPSS_P_MAX: f64 = 0.1;

/// Trend-stationary KPSS critical values `(p, statistic)`.
const KPSS_TREND: [(f64, f64); 4] = [(0.10, 0.119), (0.05, 0.146), (0.025, 0.176), (0.01, 0.216)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitRootTest {
    Adf,
    Pp,
    Kpss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub test: UnitRootTest,
    pub statistic: f64,
    /// Clipped to the table range, so boundary values are bounds.
    pub p_value: f64,
    pub critical_5: f64,
    /// ADF/PP: unit root rejected. KPSS: stationarity rejected.
    pub reject: bool,
    pub n: usize,
}

/// Finite-sample critical value for the no-constant Dickey-Fuller t statistic
/// from the response surface `b0 + b1/T + b2/T^2 + b3/T^3`.
pub fn df_critical_value(level: f64, t: usize) -> Result<f64> {
    let b = match level {
        l if (l - 0.01).abs() < 1e-12 => [-2.56574, -2.2358, -3.627, 0.0],
        l if (l - 0.05).abs() < 1e-12 => [-1.94100, -0.2686, -3.365, 31.223],
        l if (l - 0.10).abs() < 1e-12 => [-1.61682, 0.2656, -2.714, 25.364],
        _ => {
            return Err(Error::InvalidInput(format!(
                "critical values exist for 1%, 5% and 10%, not {level}"
            )))
        }
    };
    let t = t as f64;
    Ok(b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t))
}

/// Asymptotic p-value of the no-constant Dickey-Fuller t statistic
/// (normal-CDF polynomial approximation), clipped to `[0.001, 0.999]`.
pub fn df_p_value(stat: f64) -> f64 {
    const TAU_STAR: f64 = -1.04;
    const TAU_MIN: f64 = -19.04;
    let p = if stat < TAU_MIN {
        0.0
    } else {
        let z = if stat <= TAU_STAR {
            0.6344 + 1.2378 * stat + 0.032496 * stat * stat
        } else {
            0.4797 + 0.93557 * stat - 0.06999 * stat * stat + 0.033066 * stat.powi(3)
        };
        Normal::standard().cdf(z)
    };
    p.clamp(P_MIN, P_MAX)
}

/// Linear interpolation in the KPSS table, clipped to `[0.01, 0.1]`.
pub fn kpss_p_value(stat: f64) -> f64 {
    let (first, last) = (KPSS_TREND[0], KPSS_TREND[KPSS_TREND.len() - 1]);
    if stat <= first.1 {
        return KPSS_P_MAX;
    }
    if stat >= last.1 {
        return KPSS_P_MIN;
    }
    for w in KPSS_TREND.windows(2) {
        let ((p0, s0), (p1, s1)) = (w[0], w[1]);
        if stat <= s1 {
            return p0 + (p1 - p0) * (stat - s0) / (s1 - s0);
        }
    }
    KPSS_P_MIN
}

fn check(x: &[f64]) -> Result<()> {
    if x.len() < MIN_LENGTH {
        return Err(Error::InsufficientData(format!(
            "unit-root tests need at least {MIN_LENGTH} points, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("unit-root input contains non-finite values".into()));
    }
    Ok(())
}

struct DfRegression {
    t_stat: f64,
    residuals: Vec<f64>,
    se: f64,
    s: f64,
}

/// OLS of `y_t - y_{t-1}` on `y_{t-1}` without intercept.
fn df_regression(x: &[f64]) -> Result<DfRegression> {
    let lag = &x[..x.len() - 1];
    let dy: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let sxx: f64 = lag.iter().map(|v| v * v).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("lagged regressor is identically zero".into()));
    }
    let gamma = lag.iter().zip(&dy).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let residuals: Vec<f64> = lag.iter().zip(&dy).map(|(a, b)| b - gamma * a).collect();
    let t = residuals.len() as f64;
    let s2 = residuals.iter().map(|e| e * e).sum::<f64>() / (t - 1.0);
    if !(s2 > 0.0) {
        return Err(Error::Degenerate("perfect fit in the unit-root regression".into()));
    }
    let se = (s2 / sxx).sqrt();
    Ok(DfRegression {
        t_stat: gamma / se,
        residuals,
        se,
        s: s2.sqrt(),
    })
}

fn newey_west(e: &[f64], lags: usize) -> (f64, f64) {
    let t = e.len() as f64;
    let gamma = |j: usize| e[j..].iter().zip(e).map(|(a, b)| a * b).sum::<f64>() / t;
    let g0 = gamma(0);
    let lr = g0
        + 2.0
            * (1..=lags.min(e.len() - 1))
                .map(|j| (1.0 - j as f64 / (lags as f64 + 1.0)) * gamma(j))
                .sum::<f64>();
    (g0, lr)
}

fn df_result(test: UnitRootTest, stat: f64, n: usize) -> Result<UnitRootResult> {
    let critical_5 = df_critical_value(0.05, n)?;
    Ok(UnitRootResult {
        test,
        statistic: stat,
        p_value: df_p_value(stat),
        critical_5,
        reject: stat < critical_5,
        n,
    })
}

/// Dickey-Fuller test of `y_t = phi y_{t-1} + e_t` against `phi < 1`.
pub fn adf_test(x: &[f64]) -> Result<UnitRootResult> {
    check(x)?;
    let r = df_regression(x)?;
    df_result(UnitRootTest::Adf, r.t_stat, r.residuals.len())
}

/// Phillips-Perron `Z_t` with Bartlett-weighted long-run variance over
/// `nw_lags` autocovariances. With zero lags the correction vanishes.
pub fn pp_test(x: &[f64], nw_lags: usize) -> Result<UnitRootResult> {
    check(x)?;
    let r = df_regression(x)?;
    let t = r.residuals.len() as f64;
    let (g0, lr) = newey_west(&r.residuals, nw_lags);
    if !(lr > 0.0) {
        return Err(Error::Degenerate("non-positive long-run variance".into()));
    }
    let z = (g0 / lr).sqrt() * r.t_stat - (lr - g0) / (2.0 * lr.sqrt()) * (t * r.se / r.s);
    df_result(UnitRootTest::Pp, z, r.residuals.len())
}

/// KPSS test of trend stationarity (null: stationary).
pub fn kpss_test(x: &[f64], nw_lags: usize) -> Result<UnitRootResult> {
    check(x)?;
    let n = x.len();
    let t: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let (mt, mx) = (t.iter().sum::<f64>() / n as f64, x.iter().sum::<f64>() / n as f64);
    let stt: f64 = t.iter().map(|v| (v - mt).powi(2)).sum();
    let slope = t.iter().zip(x).map(|(a, b)| (a - mt) * (b - mx)).sum::<f64>() / stt;
    let e: Vec<f64> = t
        .iter()
        .zip(x)
        .map(|(a, b)| b - mx - slope * (a - mt))
        .collect();
    let (_, lr) = newey_west(&e, nw_lags);
    if !(lr > 0.0) {
        return Err(Error::Degenerate("series is an exact linear trend".into()));
    }
    let mut s = 0.0;
    let mut ss = 0.0;
    for v in &e {
        s += v;
        ss += s * s;
    }
    let stat = ss / ((n * n) as f64 * lr);
    let critical_5 = KPSS_TREND[1].1;
    Ok(UnitRootResult {
        test: UnitRootTest::Kpss,
        statistic: stat,
        p_value: kpss_p_value(stat),
        critical_5,
        reject: stat > critical_5,
        n,
    })
}
