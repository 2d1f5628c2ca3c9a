//! The stylised-fact battery: per-run fact computation and cross-run
//! aggregation into a [`FactReport`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::acf::{leverage_corr, long_memory_acf, sample_acf, sample_ccf, volatility_clustering_acf, AcfResult, CcfResult};
use super::garch::{garch_filter, Innovation};
use super::hill::{hill_panel, HillEntry};
use super::horizons::{equity_premium, excess_volatility, investment_horizons, rolling_volatility, Barrier};
use super::micro::{duration_facts, durations, spread_facts, volume_volatility_ccf};
use super::powerlaw::power_law_analysis;
use super::returns::{bubble_series, event_time_prices, kurtosis_by_scale, log_returns, moments, Moments};
use super::unitroot::{adf_test, kpss_test, pp_test, UnitRootResult};
use super::{median, quantile};
use crate::engine::rng::derive_seed;
use crate::engine::{DailySeries, SimulationRecord, TickSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fact {
    Moments,
    Gaussianity,
    Acf,
    Bubble,
    Hill,
    Garch,
    Horizons,
    Premium,
    ExcessVol,
    Leverage,
    Powerlaw,
    VolClustering,
    LongMemory,
    VolumeVol,
    UnitRoot,
    Durations,
    Spread,
}

impl Fact {
    pub const ALL: [Fact; 17] = [
        Fact::Moments,
        Fact::Gaussianity,
        Fact::Acf,
        Fact::Bubble,
        Fact::Hill,
        Fact::Garch,
        Fact::Horizons,
        Fact::Premium,
        Fact::ExcessVol,
        Fact::Leverage,
        Fact::Powerlaw,
        Fact::VolClustering,
        Fact::LongMemory,
        Fact::VolumeVol,
        Fact::UnitRoot,
        Fact::Durations,
        Fact::Spread,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Fact::Moments => "moments",
            Fact::Gaussianity => "gaussianity",
            Fact::Acf => "acf",
            Fact::Bubble => "bubble",
            Fact::Hill => "hill",
            Fact::Garch => "garch",
            Fact::Horizons => "horizons",
            Fact::Premium => "premium",
            Fact::ExcessVol => "excess_vol",
            Fact::Leverage => "leverage",
            Fact::Powerlaw => "powerlaw",
            Fact::VolClustering => "vol_clustering",
            Fact::LongMemory => "long_memory",
            Fact::VolumeVol => "volume_vol",
            Fact::UnitRoot => "unit_root",
            Fact::Durations => "durations",
            Fact::Spread => "spread",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Fact::Moments => "Return moments",
            Fact::Gaussianity => "Aggregational Gaussianity (kurtosis by scale)",
            Fact::Acf => "Absence of linear autocorrelation",
            Fact::Bubble => "Bubble-return cross-correlation",
            Fact::Hill => "Heavy tails (Hill index)",
            Fact::Garch => "Conditional heavy tails (GARCH residuals)",
            Fact::Horizons => "Gain/loss asymmetry (investment horizons)",
            Fact::Premium => "Equity premium",
            Fact::ExcessVol => "Excess volatility",
            Fact::Leverage => "Leverage effect",
            Fact::Powerlaw => "Power laws",
            Fact::VolClustering => "Volatility clustering",
            Fact::LongMemory => "Long memory",
            Fact::VolumeVol => "Volume-volatility correlation",
            Fact::UnitRoot => "Unit-root and stationarity tests",
            Fact::Durations => "Trade durations",
            Fact::Spread => "Bid-ask spread",
        }
    }

    /// Facts that cannot be computed from daily data alone.
    pub fn needs_ticks(self) -> bool {
        matches!(self, Fact::VolumeVol | Fact::Durations | Fact::Spread)
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Fact {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Fact::ALL
            .into_iter()
            .find(|f| f.id() == s.trim())
            .ok_or_else(|| {
                let known: Vec<&str> = Fact::ALL.iter().map(|f| f.id()).collect();
                Error::InvalidInput(format!("unknown fact `{s}`; known: {}", known.join(",")))
            })
    }
}

/// Parse a comma-separated selector; `all` selects every fact.
pub fn parse_facts(list: &str) -> Result<Vec<Fact>> {
    if list.trim() == "all" {
        return Ok(Fact::ALL.to_vec());
    }
    let mut out: Vec<Fact> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Fact::from_str)
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::InvalidInput("empty fact selection".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub facts: Vec<Fact>,
    pub max_lag: usize,
    pub r_f_annual: f64,
    pub horizon_rho: f64,
    pub tick_scales: Vec<usize>,
    pub daily_scales: Vec<usize>,
    pub bin: usize,
    pub vol_window_days: usize,
    pub powerlaw_synth: usize,
    pub powerlaw_boot: usize,
    pub seed: u64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            facts: Fact::ALL.to_vec(),
            max_lag: 20,
            r_f_annual: 0.0457,
            horizon_rho: 0.0025,
            tick_scales: vec![1, 5, 10, 20, 50, 100, 200],
            daily_scales: vec![1, 2, 5, 10, 20],
            bin: super::micro::DEFAULT_BIN,
            vol_window_days: 5,
            powerlaw_synth: super::powerlaw::DEFAULT_GOF_SETS,
            powerlaw_boot: super::powerlaw::DEFAULT_BOOTSTRAP,
            seed: 0,
        }
    }
}

/// One realisation to validate. Missing daily columns are empty vectors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInput {
    pub label: String,
    pub daily: DailySeries,
    pub ticks: Option<TickSeries>,
}

impl RunInput {
    pub fn from_record(label: impl Into<String>, rec: SimulationRecord) -> Self {
        RunInput {
            label: label.into(),
            daily: rec.daily,
            ticks: Some(rec.ticks),
        }
    }
}

/// A lagged coefficient curve from one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub lags: Vec<i64>,
    pub values: Vec<f64>,
    pub bound: f64,
}

impl From<AcfResult> for Curve {
    fn from(a: AcfResult) -> Self {
        Curve {
            lags: (0..a.coefficients.len() as i64).collect(),
            values: a.coefficients,
            bound: a.bound,
        }
    }
}

impl From<CcfResult> for Curve {
    fn from(c: CcfResult) -> Self {
        Curve {
            lags: c.lags,
            values: c.coefficients,
            bound: c.bound,
        }
    }
}

/// Values of one fact for one run. Sub-computations that fail leave their
/// entries out and add a note.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactValues {
    pub scalars: BTreeMap<String, f64>,
    pub curves: BTreeMap<String, Curve>,
    pub notes: Vec<String>,
}

impl FactValues {
    fn put(&mut self, key: impl Into<String>, v: f64) {
        if v.is_finite() {
            self.scalars.insert(key.into(), v);
        }
    }

    fn put_opt(&mut self, key: impl Into<String>, v: Option<f64>) {
        if let Some(v) = v {
            self.put(key, v);
        }
    }

    fn curve(&mut self, key: &str, c: Result<impl Into<Curve>>) {
        match c {
            Ok(c) => {
                self.curves.insert(key.to_string(), c.into());
            }
            Err(e) => self.note(key, e),
        }
    }

    fn note(&mut self, what: &str, e: impl fmt::Display) {
        self.notes.push(format!("{what}: {e}"));
    }

    fn moments(&mut self, prefix: &str, m: &Moments) {
        self.put(format!("{prefix}.mean"), m.mean);
        self.put(format!("{prefix}.std"), m.std);
        self.put(format!("{prefix}.min"), m.min);
        self.put(format!("{prefix}.max"), m.max);
        self.put_opt(format!("{prefix}.skewness"), m.skewness);
        self.put_opt(format!("{prefix}.kurtosis"), m.kurtosis);
    }

    fn hill(&mut self, prefix: &str, panel: &[HillEntry]) {
        for e in panel {
            let pct = e.fraction * 100.0;
            self.put_opt(format!("{prefix}.left.{pct}"), e.left);
            self.put_opt(format!("{prefix}.right.{pct}"), e.right);
        }
    }

    fn unit_root(&mut self, name: &str, r: Result<UnitRootResult>) {
        match r {
            Ok(r) => {
                self.put(format!("{name}.statistic"), r.statistic);
                self.put(format!("{name}.p_value"), r.p_value);
                self.put(format!("{name}.critical_5"), r.critical_5);
                self.put(format!("{name}.reject"), r.reject as u8 as f64);
            }
            Err(e) => self.note(name, e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Ok(FactValues),
    Unavailable { reason: String },
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFacts {
    pub label: String,
    pub facts: BTreeMap<Fact, Outcome>,
}

/// Prepared series shared by the facts of one run.
struct Series<'a> {
    input: &'a RunInput,
    daily_r: Result<Vec<f64>>,
    /// Transaction-event-time tick returns.
    event_r: Option<Result<Vec<f64>>>,
    /// Calendar-tick returns.
    tick_r: Option<Result<Vec<f64>>>,
}

fn unavailable(what: &str) -> Error {
    Error::InsufficientData(format!("{what} unavailable"))
}

impl<'a> Series<'a> {
    fn new(input: &'a RunInput) -> Self {
        let ticks = input.ticks.as_ref();
        Series {
            input,
            daily_r: log_returns(&input.daily.close, 1),
            event_r: ticks.map(|t| log_returns(&event_time_prices(&t.price, &t.n_trades), 1)),
            tick_r: ticks.map(|t| log_returns(&t.price, 1)),
        }
    }

    fn daily(&self) -> Result<&[f64]> {
        self.daily_r.as_deref().map_err(Clone::clone)
    }

    fn ticks(&self) -> Result<&TickSeries> {
        self.input.ticks.as_ref().ok_or_else(|| unavailable("tick data"))
    }

    fn event(&self) -> Result<&[f64]> {
        match &self.event_r {
            Some(r) => r.as_deref().map_err(Clone::clone),
            None => Err(unavailable("tick data")),
        }
    }

    fn calendar(&self) -> Result<&[f64]> {
        match &self.tick_r {
            Some(r) => r.as_deref().map_err(Clone::clone),
            None => Err(unavailable("tick data")),
        }
    }

    fn fundamental_daily(&self) -> Result<Vec<f64>> {
        let f = &self.input.daily.fundamental;
        if f.len() != self.input.daily.close.len() || f.is_empty() {
            return Err(unavailable("fundamental series"));
        }
        log_returns(f, 1)
    }
}

/// Cross-correlation of the daily relative bubble with daily log returns,
/// aligned so that `B_t` and `r_t` both refer to the close of day `t`.
pub fn bubble_return_ccf(daily: &DailySeries, max_lag: usize) -> Result<CcfResult> {
    if daily.fundamental.len() != daily.close.len() || daily.fundamental.is_empty() {
        return Err(unavailable("fundamental series"));
    }
    let b = bubble_series(&daily.close, &daily.fundamental)?;
    let r = log_returns(&daily.close, 1)?;
    sample_ccf(&b[1..], &r, max_lag, 2.0)
}

fn positive(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    v.into_iter().filter(|x| *x > 0.0).collect()
}

fn compute_fact(fact: Fact, s: &Series, cfg: &BatteryConfig, run: usize) -> Result<FactValues> {
    let mut v = FactValues::default();
    let k = cfg.max_lag;
    let daily = &s.input.daily;
    match fact {
        Fact::Moments => {
            v.moments("daily", &moments(s.daily()?)?);
            match s.event().and_then(moments) {
                Ok(m) => v.moments("tick", &m),
                Err(e) => v.note("tick", e),
            }
        }
        Fact::Gaussianity => {
            for sk in kurtosis_by_scale(&daily.close, &cfg.daily_scales)? {
                v.put_opt(format!("daily.{}", sk.scale), sk.kurtosis);
            }
            match s.ticks() {
                Ok(t) => {
                    let p = event_time_prices(&t.price, &t.n_trades);
                    for sk in kurtosis_by_scale(&p, &cfg.tick_scales)? {
                        v.put_opt(format!("tick.{}", sk.scale), sk.kurtosis);
                    }
                }
                Err(e) => v.note("tick", e),
            }
            let mut scale_curve = |name: &str, scales: &[usize]| {
                let (lags, values): (Vec<i64>, Vec<f64>) = scales
                    .iter()
                    .filter_map(|&sc| v.scalars.get(&format!("{name}.{sc}")).map(|&x| (sc as i64, x)))
                    .unzip();
                if !lags.is_empty() {
                    v.curves.insert(name.to_string(), Curve { lags, values, bound: 3.0 });
                }
            };
            scale_curve("daily", &cfg.daily_scales);
            scale_curve("tick", &cfg.tick_scales);
        }
        Fact::Acf => {
            let a = sample_acf(s.daily()?, k, 2.0, 0)?;
            v.put("daily.lag1", a.coefficients[1]);
            v.put("daily.bound", a.bound);
            v.curves.insert("daily".into(), a.into());
            match s.event().and_then(|r| sample_acf(r, k, 2.0, 0)) {
                Ok(a) => {
                    v.put("tick.lag1", a.coefficients[1]);
                    v.curves.insert("tick".into(), a.into());
                }
                Err(e) => v.note("tick", e),
            }
        }
        Fact::Bubble => {
            let c = bubble_return_ccf(daily, k)?;
            v.put("lag0", c.at(0).unwrap_or(f64::NAN));
            v.put("lag1", c.at(1).unwrap_or(f64::NAN));
            v.put("bound", c.bound);
            let b = bubble_series(&daily.close, &daily.fundamental)?;
            v.put("mean_abs", b.iter().map(|x| x.abs()).sum::<f64>() / b.len() as f64);
            v.curves.insert("ccf".into(), c.into());
        }
        Fact::Hill => {
            v.hill("daily", &hill_panel(s.daily()?));
            match s.event() {
                Ok(r) => v.hill("tick", &hill_panel(r)),
                Err(e) => v.note("tick", e),
            }
        }
        Fact::Garch => {
            let r = s.daily()?;
            for (name, inn) in [("gaussian", Innovation::Gaussian), ("student_t", Innovation::StudentT)] {
                match garch_filter(r, inn) {
                    Ok(g) => {
                        v.put(format!("{name}.omega"), g.omega);
                        v.put(format!("{name}.alpha"), g.alpha);
                        v.put(format!("{name}.beta"), g.beta);
                        v.put_opt(format!("{name}.nu"), g.nu);
                        v.put(format!("{name}.converged"), g.converged as u8 as f64);
                        v.put(format!("{name}.igarch"), g.igarch as u8 as f64);
                        if let Ok(m) = moments(&g.residuals) {
                            v.put_opt(format!("{name}.z.kurtosis"), m.kurtosis);
                        }
                        v.hill(&format!("{name}.z"), &hill_panel(&g.residuals));
                    }
                    Err(e) => v.note(name, e),
                }
            }
        }
        Fact::Horizons => {
            for (name, b) in [("gain", Barrier::Gain), ("loss", Barrier::Loss)] {
                let h = investment_horizons(&daily.close, cfg.horizon_rho, b)?;
                v.put_opt(format!("{name}.optimal"), h.optimal.map(|x| x as f64));
                v.put_opt(format!("{name}.mean"), h.mean);
                v.put_opt(format!("{name}.median"), h.median);
                v.put_opt(format!("{name}.std"), h.std);
                v.put(format!("{name}.censored"), h.censored as f64);
            }
        }
        Fact::Premium => {
            let p = equity_premium(s.daily()?, cfg.r_f_annual)?;
            v.put("annual_mean", p.annual_mean);
            v.put("r_f", cfg.r_f_annual);
            v.put("premium", p.premium);
        }
        Fact::ExcessVol => {
            let e = excess_volatility(s.daily()?, &s.fundamental_daily()?)?;
            v.put("sigma_market", e.sigma_market);
            v.put("sigma_fundamental", e.sigma_fundamental);
            v.put("excess", e.excess as u8 as f64);
        }
        Fact::Leverage => {
            let c = leverage_corr(s.daily()?, k)?;
            v.put("lag1", c.at(1).unwrap_or(f64::NAN));
            v.put("lag-1", c.at(-1).unwrap_or(f64::NAN));
            v.curves.insert("daily".into(), c.into());
        }
        Fact::Powerlaw => {
            let r = s.daily()?;
            let mut inputs: Vec<(&str, Result<Vec<f64>>)> = vec![
                ("returns", Ok(positive(r.iter().map(|x| x.abs())))),
                ("volatility", rolling_volatility(&daily.close, cfg.vol_window_days, 1).map(positive)),
            ];
            let need = |col: &[u64], what: &str| {
                if col.is_empty() {
                    Err(unavailable(what))
                } else {
                    Ok(positive(col.iter().map(|&x| x as f64)))
                }
            };
            inputs.push(("volume", need(&daily.volume, "daily volume")));
            inputs.push(("trades", need(&daily.n_trades, "daily trade counts")));
            for (j, (name, data)) in inputs.into_iter().enumerate() {
                let seed = derive_seed(cfg.seed, &[run as u64, j as u64]);
                match data.and_then(|d| power_law_analysis(&d, cfg.powerlaw_synth, cfg.powerlaw_boot, seed)) {
                    Ok(f) => {
                        v.put(format!("{name}.zeta"), f.zeta);
                        v.put(format!("{name}.x_min"), f.x_min);
                        v.put(format!("{name}.n_tail"), f.n_tail as f64);
                        v.put_opt(format!("{name}.p_value"), f.p_value);
                        v.put_opt(format!("{name}.zeta_se"), f.zeta_se);
                        v.put_opt(format!("{name}.x_min_se"), f.x_min_se);
                        if f.low_synth_warning {
                            v.note(name, "fewer than 100 synthetic sets");
                        }
                    }
                    Err(e) => v.note(name, e),
                }
            }
        }
        Fact::VolClustering | Fact::LongMemory => {
            let f = if fact == Fact::VolClustering {
                volatility_clustering_acf
            } else {
                long_memory_acf
            };
            let a = f(s.daily()?, k)?;
            v.put("daily.lag1", a.coefficients[1]);
            v.curves.insert("daily".into(), a.into());
            match s.calendar().and_then(|r| f(r, k)) {
                Ok(a) => {
                    v.put("tick.lag1", a.coefficients[1]);
                    v.put("tick.min", a.coefficients[1..].iter().copied().fold(f64::INFINITY, f64::min));
                    v.put("tick.bound", a.bound);
                    v.curves.insert("tick".into(), a.into());
                }
                Err(e) => v.note("tick", e),
            }
        }
        Fact::VolumeVol => {
            let c = volume_volatility_ccf(s.ticks()?, cfg.bin, k)?;
            v.put("volume.lag0", c.volume.at(0).unwrap_or(f64::NAN));
            v.put("trades.lag0", c.trades.at(0).unwrap_or(f64::NAN));
            v.put("bound", c.volume.bound);
            v.curves.insert("volume".into(), c.volume.into());
            v.curves.insert("trades".into(), c.trades.into());
        }
        Fact::UnitRoot => {
            let r = s.daily()?;
            v.unit_root("adf", adf_test(r));
            v.unit_root("pp", pp_test(r, 0));
            v.unit_root("kpss", kpss_test(r, 0));
        }
        Fact::Durations => {
            let d = durations(&s.ticks()?.trade_times())?;
            let f = duration_facts(&d, k)?;
            v.put("n", f.n as f64);
            v.put("mean", f.mean);
            v.put("std", f.std);
            v.put("min", f.min);
            v.put("max", f.max);
            v.put("dispersion", f.dispersion);
            v.curve("acf", f.acf.ok_or_else(|| Error::Degenerate("duration acf undefined".into())));
            v.curve(
                "acf_squared",
                f.acf_squared.ok_or_else(|| Error::Degenerate("squared-duration acf undefined".into())),
            );
        }
        Fact::Spread => {
            let f = spread_facts(s.ticks()?, k)?;
            v.put("bounce", f.bounce);
            v.put("bounce_bound", f.bounce_bound);
            v.put("bid.lag0", f.spread_bid.at(0).unwrap_or(f64::NAN));
            v.put("ask.lag0", f.spread_ask.at(0).unwrap_or(f64::NAN));
            v.curves.insert("bid".into(), f.spread_bid.into());
            v.curves.insert("ask".into(), f.spread_ask.into());
        }
    }
    Ok(v)
}

/// Every enabled fact for one run. Failures are recorded, never raised.
pub fn compute_run_facts(input: &RunInput, cfg: &BatteryConfig, run: usize) -> RunFacts {
    let s = Series::new(input);
    let facts = cfg
        .facts
        .iter()
        .map(|&fact| {
            let outcome = if fact.needs_ticks() && input.ticks.is_none() {
                Outcome::Unavailable {
                    reason: "requires tick data".into(),
                }
            } else {
                match compute_fact(fact, &s, cfg, run) {
                    Ok(v) => Outcome::Ok(v),
                    Err(e) => Outcome::Failed {
                        message: e.to_string(),
                    },
                }
            };
            (fact, outcome)
        })
        .collect();
    RunFacts {
        label: input.label.clone(),
        facts,
    }
}

/// Cross-run summary of one scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
    /// Runs outside the 1.5 IQR boxplot fences.
    pub outliers: Vec<usize>,
}

impl Summary {
    pub fn of(values: &[Option<f64>]) -> Option<Summary> {
        let present: Vec<(usize, f64)> = values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|x| (i, x)))
            .collect();
        if present.is_empty() {
            return None;
        }
        let x: Vec<f64> = present.iter().map(|p| p.1).collect();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let (q1, q3) = (quantile(&x, 0.25), quantile(&x, 0.75));
        let (lo, hi) = (q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1));
        Some(Summary {
            n: x.len(),
            mean,
            median: median(&x),
            q1,
            q3,
            min: x.iter().copied().fold(f64::INFINITY, f64::min),
            max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std,
            outliers: present
                .iter()
                .filter(|p| p.1 < lo || p.1 > hi)
                .map(|p| p.0)
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarStat {
    /// Per-run values in run order; `None` where the run lacks the value.
    pub values: Vec<Option<f64>>,
    pub summary: Option<Summary>,
}

/// Cross-run curve: mean and median per lag, with the mean confidence band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveStat {
    pub n: usize,
    pub lags: Vec<i64>,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunIssue {
    pub run: usize,
    pub label: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactEntry {
    pub title: String,
    /// `false` when no run had the inputs this fact needs.
    pub available: bool,
    pub n_runs: usize,
    pub n_ok: usize,
    pub errors: Vec<RunIssue>,
    pub notes: Vec<RunIssue>,
    pub scalars: BTreeMap<String, ScalarStat>,
    pub curves: BTreeMap<String, CurveStat>,
    pub verdict: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactReport {
    pub tool_version: String,
    pub n_runs: usize,
    pub labels: Vec<String>,
    pub config: BatteryConfig,
    /// Inputs that could not be read, one message per file.
    #[serde(default)]
    pub input_errors: Vec<String>,
    pub facts: BTreeMap<String, FactEntry>,
}

impl FactReport {
    pub fn fact(&self, f: Fact) -> Option<&FactEntry> {
        self.facts.get(f.id())
    }
}

impl FactEntry {
    pub fn summary(&self, key: &str) -> Option<&Summary> {
        self.scalars.get(key).and_then(|s| s.summary.as_ref())
    }

    fn mean(&self, key: &str) -> Option<f64> {
        self.summary(key).map(|s| s.mean)
    }

    /// Runs where the 0/1 flag `key` is set, and runs reporting it.
    fn count(&self, key: &str) -> Option<(usize, usize)> {
        self.scalars.get(key).and_then(|s| {
            let present: Vec<f64> = s.values.iter().flatten().copied().collect();
            (!present.is_empty()).then(|| (present.iter().filter(|&&v| v > 0.5).count(), present.len()))
        })
    }

    fn below(&self, key: &str, level: f64) -> Option<(usize, usize)> {
        self.scalars.get(key).and_then(|s| {
            let present: Vec<f64> = s.values.iter().flatten().copied().collect();
            (!present.is_empty()).then(|| (present.iter().filter(|&&v| v < level).count(), present.len()))
        })
    }
}

fn aggregate_curves(curves: &[&Curve]) -> Option<CurveStat> {
    let first = curves.first()?;
    let same: Vec<&&Curve> = curves.iter().filter(|c| c.lags == first.lags).collect();
    let n = same.len();
    let width = first.lags.len();
    let mut out = CurveStat {
        n,
        lags: first.lags.clone(),
        mean: Vec::with_capacity(width),
        median: Vec::with_capacity(width),
        upper: Vec::with_capacity(width),
        lower: Vec::with_capacity(width),
    };
    let bound = same.iter().map(|c| c.bound).sum::<f64>() / n as f64;
    for i in 0..width {
        let col: Vec<f64> = same.iter().map(|c| c.values[i]).collect();
        out.mean.push(col.iter().sum::<f64>() / n as f64);
        out.median.push(median(&col));
        out.upper.push(bound);
        out.lower.push(-bound);
    }
    Some(out)
}

fn verdict(fact: Fact, e: &FactEntry) -> Option<String> {
    let frac = |(k, n): (usize, usize)| format!("{k}/{n}");
    match fact {
        Fact::Moments => {
            let key = if e.scalars.contains_key("tick.kurtosis") { "tick.kurtosis" } else { "daily.kurtosis" };
            let (k, n) = e.below(key, 3.0)?;
            Some(format!("{key} > 3 in {}/{n} runs (mean {:.4})", n - k, e.mean(key)?))
        }
        Fact::Gaussianity => {
            let c = e.curves.get("tick").or_else(|| e.curves.get("daily"))?;
            let decreasing = c.mean.first()? > c.mean.last()?;
            Some(if decreasing {
                "mean kurtosis falls with the sampling scale".into()
            } else {
                "mean kurtosis does not fall with the sampling scale".into()
            })
        }
        Fact::Acf => {
            let (m, b) = (e.mean("daily.lag1")?, e.mean("daily.bound")?);
            Some(format!(
                "mean daily lag-1 ACF {m:.4} ({} the +/-{b:.4} band)",
                if m.abs() > b { "outside" } else { "inside" }
            ))
        }
        Fact::Bubble => {
            let (m, b) = (e.mean("lag0")?, e.mean("bound")?);
            Some(format!(
                "mean lag-0 correlation {m:.4} {} bound {b:.4}",
                if m > b { "above" } else { "not above" }
            ))
        }
        Fact::Hill => {
            let key = if e.scalars.contains_key("tick.left.10") { "tick" } else { "daily" };
            Some(format!(
                "{key} 10% tail: left {:.4}, right {:.4}",
                e.mean(&format!("{key}.left.10"))?,
                e.mean(&format!("{key}.right.10"))?
            ))
        }
        Fact::Garch => {
            let (k, n) = e.below("gaussian.z.kurtosis", 3.0)?;
            Some(format!("standardised residual kurtosis > 3 in {}/{n} runs", n - k))
        }
        Fact::Horizons => {
            let (g, l) = (e.mean("gain.mean")?, e.mean("loss.mean")?);
            Some(format!("mean horizon gains {g:.4} vs losses {l:.4}"))
        }
        Fact::Premium => Some(format!("mean premium {:.4}", e.mean("premium")?)),
        Fact::ExcessVol => Some(format!("sigma(r) > sigma(r_f) in {} runs", frac(e.count("excess")?))),
        Fact::Leverage => Some(format!("mean L(1) {:.4}", e.mean("lag1")?)),
        Fact::Powerlaw => {
            let parts: Vec<String> = ["returns", "volatility", "volume", "trades"]
                .iter()
                .filter_map(|name| {
                    let (rej, n) = e.below(&format!("{name}.p_value"), 0.05)?;
                    Some(format!("{name} {}/{n}", n - rej))
                })
                .collect();
            (!parts.is_empty()).then(|| format!("power law not rejected (p >= 0.05): {}", parts.join(", ")))
        }
        Fact::VolClustering | Fact::LongMemory => {
            let c = e.curves.get("tick").or_else(|| e.curves.get("daily"))?;
            let sig = c.mean.iter().skip(1).zip(c.upper.iter().skip(1)).all(|(m, u)| m > u);
            Some(format!(
                "mean ACF {} the band at every lag 1..{}",
                if sig { "above" } else { "not above" },
                c.lags.len() - 1
            ))
        }
        Fact::VolumeVol => Some(format!("mean lag-0 correlation with volume {:.4}", e.mean("volume.lag0")?)),
        Fact::UnitRoot => Some(format!(
            "unit root rejected: ADF {}, PP {}; stationarity rejected: KPSS {}",
            frac(e.count("adf.reject")?),
            frac(e.count("pp.reject")?),
            frac(e.count("kpss.reject")?)
        )),
        Fact::Durations => {
            let d = e.mean("dispersion")?;
            Some(format!(
                "mean dispersion {d:.4} ({})",
                if d > 1.0 { "overdispersed" } else { "underdispersed" }
            ))
        }
        Fact::Spread => Some(format!("mean lag-1 return ACF {:.4}", e.mean("bounce")?)),
    }
}

/// Aggregate per-run results in run order.
pub fn aggregate(runs: &[RunFacts], cfg: &BatteryConfig) -> FactReport {
    let n_runs = runs.len();
    let mut facts = BTreeMap::new();
    for &fact in &cfg.facts {
        let mut entry = FactEntry {
            title: fact.title().into(),
            available: false,
            n_runs,
            n_ok: 0,
            errors: Vec::new(),
            notes: Vec::new(),
            scalars: BTreeMap::new(),
            curves: BTreeMap::new(),
            verdict: None,
        };
        let mut values: Vec<Option<&FactValues>> = Vec::with_capacity(n_runs);
        for (run, r) in runs.iter().enumerate() {
            let issue = |message: String| RunIssue {
                run,
                label: r.label.clone(),
                message,
            };
            match r.facts.get(&fact) {
                Some(Outcome::Ok(v)) => {
                    entry.available = true;
                    entry.n_ok += 1;
                    entry.notes.extend(v.notes.iter().map(|m| issue(m.clone())));
                    values.push(Some(v));
                }
                Some(Outcome::Failed { message }) => {
                    entry.available = true;
                    entry.errors.push(issue(message.clone()));
                    values.push(None);
                }
                Some(Outcome::Unavailable { reason }) => {
                    entry.errors.push(issue(reason.clone()));
                    values.push(None);
                }
                None => values.push(None),
            }
        }
        let mut keys: Vec<&String> = values.iter().flatten().flat_map(|v| v.scalars.keys()).collect();
        keys.sort();
        keys.dedup();
        for key in keys {
            let per_run: Vec<Option<f64>> = values
                .iter()
                .map(|v| v.and_then(|v| v.scalars.get(key).copied()))
                .collect();
            let summary = Summary::of(&per_run);
            entry.scalars.insert(
                key.clone(),
                ScalarStat {
                    values: per_run,
                    summary,
                },
            );
        }
        let mut curve_keys: Vec<&String> = values.iter().flatten().flat_map(|v| v.curves.keys()).collect();
        curve_keys.sort();
        curve_keys.dedup();
        for key in curve_keys {
            let cs: Vec<&Curve> = values.iter().flatten().filter_map(|v| v.curves.get(key)).collect();
            if let Some(c) = aggregate_curves(&cs) {
                entry.curves.insert(key.clone(), c);
            }
        }
        entry.verdict = verdict(fact, &entry);
        facts.insert(fact.id().to_string(), entry);
    }
    FactReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        n_runs,
        labels: runs.iter().map(|r| r.label.clone()).collect(),
        config: cfg.clone(),
        input_errors: Vec::new(),
        facts,
    }
}

/// Compute every enabled fact for every run and aggregate. Runs are
/// processed in parallel; aggregation follows input order.
pub fn run_fact_battery(inputs: &[RunInput], cfg: &BatteryConfig) -> Result<FactReport> {
    if inputs.is_empty() {
        return Err(Error::InsufficientData("fact battery needs at least one run".into()));
    }
    let runs: Vec<RunFacts> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, input)| compute_run_facts(input, cfg, i))
        .collect();
    Ok(aggregate(&runs, cfg))
}
