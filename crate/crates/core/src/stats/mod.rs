//! Stylised-fact estimators and the validation battery.

pub mod acf;
pub mod battery;
pub mod garch;
pub mod hill;
pub mod horizons;
pub mod micro;
pub mod optim;
pub mod powerlaw;
pub mod returns;
pub mod unitroot;

pub use battery::{parse_facts, run_fact_battery, BatteryConfig, Fact, FactEntry, FactReport, RunInput, Summary};
pub use acf::{leverage_corr, long_memory_acf, sample_acf, sample_ccf, volatility_clustering_acf, AcfResult, CcfResult};
pub use garch::{garch_filter, GarchFit, Innovation};
pub use hill::{hill_estimator, hill_panel, HillEntry, Tail};
pub use horizons::{equity_premium, excess_volatility, investment_horizons, rolling_volatility, Barrier};
pub use micro::{duration_facts, durations, spread_facts, volume_volatility_ccf};
pub use powerlaw::{fit_power_law, power_law_analysis, power_law_gof, PowerLawFit};
pub use returns::{bubble_series, event_time_prices, kurtosis_by_scale, log_returns, moments, Moments};
pub use unitroot::{adf_test, kpss_test, pp_test, UnitRootResult};

/// Median of a non-empty sample (mean of the two middle values for even
/// sizes).
pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Linear-interpolation quantile of a non-empty sample (type 7).
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}
