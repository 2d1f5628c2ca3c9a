//! Treatment configuration and its flat `key = value` file format.
//!
//! Distributions are written `uniform:lo,hi` or `const:v` (a bare number
//! means `const`). Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::regulation::{RiskConfig, RiskMetric};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Dist {
    Const { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Dist {
    pub fn constant(value: f64) -> Self {
        Dist::Const { value }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Dist::Uniform { lo, hi }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Const { value } => value,
            Dist::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Dist::Const { value } => (value, value),
            Dist::Uniform { lo, hi } => (lo, hi),
        }
    }

    fn is_finite(&self) -> bool {
        let (lo, hi) = self.bounds();
        lo.is_finite() && hi.is_finite() && lo <= hi
    }
}

impl std::str::FromStr for Dist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad distribution `{s}`"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        if let Some(rest) = s.strip_prefix("uniform:") {
            let (lo, hi) = rest.split_once(',').ok_or_else(bad)?;
            Ok(Dist::uniform(num(lo)?, num(hi)?))
        } else if let Some(rest) = s.strip_prefix("const:") {
            Ok(Dist::constant(num(rest)?))
        } else {
            Ok(Dist::constant(num(s)?))
        }
    }
}

impl std::fmt::Display for Dist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dist::Const { value } => write!(f, "const:{value}"),
            Dist::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalConfig {
    pub p_f_0: f64,
    /// Drift per tick.
    pub mu: f64,
    /// Volatility per square-root tick.
    pub sigma: f64,
}

/// Parameter distributions from which each institution is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub g1: Dist,
    pub g2: Dist,
    pub n: Dist,
    /// Per-tick market-entry probability.
    pub lambda: Dist,
    /// Chartist lookbacks are drawn uniformly from `2..=l_max`.
    pub l_max: usize,
    /// Risk aversion.
    pub a: Dist,
    pub c_0: Dist,
    pub s_0: Dist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentConfig {
    pub name: String,
    pub n_agents: usize,
    pub ticks_per_day: usize,
    pub n_days: usize,
    pub tick_size: f64,
    pub fundamental: FundamentalConfig,
    /// Risk-free log rate per tick.
    pub r_f: f64,
    pub population: PopulationConfig,
    pub max_leverage: f64,
    pub short_allowed: bool,
    pub max_short: f64,
    /// Floor on per-tick return variance estimates.
    pub min_variance: f64,
    pub risk: RiskConfig,
    pub master_seed: u64,
    /// Cap on capital-constraint events copied into the manifest.
    pub max_logged_events: usize,
}

impl Default for TreatmentConfig {
    fn default() -> Self {
        TreatmentConfig {
            name: "unregulated".into(),
            n_agents: 100,
            ticks_per_day: 200,
            n_days: 504,
            tick_size: 0.01,
            fundamental: FundamentalConfig {
                p_f_0: 100.0,
                mu: 0.0,
                sigma: 0.0003,
            },
            r_f: 0.0457 / (252.0 * 200.0),
            population: PopulationConfig {
                g1: Dist::uniform(0.0, 0.1),
                g2: Dist::uniform(-0.5, 4.0),
                n: Dist::uniform(0.0, 0.002),
                lambda: Dist::uniform(0.01, 0.1),
                l_max: 30,
                a: Dist::constant(2.0),
                c_0: Dist::constant(10_000.0),
                s_0: Dist::constant(100.0),
            },
            max_leverage: 1.0,
            short_allowed: false,
            max_short: 0.0,
            min_variance: 1e-8,
            risk: RiskConfig {
                multiplier: 9.0,
                ..RiskConfig::none()
            },
            master_seed: 42,
            max_logged_events: 1000,
        }
    }
}

impl TreatmentConfig {
    /// Same configuration under a different regulatory regime.
    pub fn with_metric(&self, metric: RiskMetric) -> TreatmentConfig {
        let mut c = self.clone();
        let confidence = match metric {
            RiskMetric::ES => 0.975,
            _ => 0.99,
        };
        c.risk.metric = metric;
        if self.risk.metric == RiskMetric::None {
            c.risk.confidence = confidence;
        }
        c.name = match metric {
            RiskMetric::None => "unregulated".into(),
            RiskMetric::VaR => "var".into(),
            RiskMetric::ES => "es".into(),
        };
        c
    }

    pub fn warmup_ticks(&self) -> usize {
        self.population.l_max + 1
    }

    pub fn total_ticks(&self) -> usize {
        self.n_days * self.ticks_per_day
    }

    pub fn validate(&self) -> Result<()> {
        if self.ticks_per_day == 0 {
            return Err(Error::config("ticks_per_day", "must be positive"));
        }
        if self.n_days == 0 {
            return Err(Error::config("n_days", "must be positive"));
        }
        if self.population.l_max < 2 {
            return Err(Error::config("L_max", "must be at least 2"));
        }
        if self.total_ticks() < self.population.l_max + 1 {
            return Err(Error::config(
                "n_days",
                "n_days * ticks_per_day must be at least L_max + 1",
            ));
        }
        if !(self.tick_size > 0.0 && self.tick_size.is_finite()) {
            return Err(Error::config("tick_size", "must be positive"));
        }
        let f = &self.fundamental;
        if !(f.p_f_0 > 0.0 && f.p_f_0.is_finite()) {
            return Err(Error::config("p_f_0", "must be positive"));
        }
        if !f.mu.is_finite() {
            return Err(Error::config("mu", "must be finite"));
        }
        if !(f.sigma >= 0.0 && f.sigma.is_finite()) {
            return Err(Error::config("sigma", "must be nonnegative"));
        }
        if !self.r_f.is_finite() {
            return Err(Error::config("r_f", "must be finite"));
        }
        let p = &self.population;
        for (name, d) in [
            ("g1", p.g1),
            ("g2", p.g2),
            ("n", p.n),
            ("lambda", p.lambda),
            ("A", p.a),
            ("c_0", p.c_0),
            ("s_0", p.s_0),
        ] {
            if !d.is_finite() {
                return Err(Error::config(name, "bounds must be finite with lo <= hi"));
            }
        }
        let (lo, hi) = p.lambda.bounds();
        if !(lo > 0.0 && hi <= 1.0) {
            return Err(Error::config("lambda", "entry probability must lie in (0, 1]"));
        }
        if p.a.bounds().0 <= 0.0 {
            return Err(Error::config("A", "risk aversion must be positive"));
        }
        if p.s_0.bounds().0 < 0.0 {
            return Err(Error::config("s_0", "initial stock must be nonnegative"));
        }
        if !(self.max_leverage >= 0.0 && self.max_leverage.is_finite()) {
            return Err(Error::config("max_leverage", "must be nonnegative"));
        }
        if !(self.max_short >= 0.0 && self.max_short.is_finite()) {
            return Err(Error::config("max_short", "must be nonnegative"));
        }
        if !(self.min_variance > 0.0 && self.min_variance.is_finite()) {
            return Err(Error::config("min_variance", "must be positive"));
        }
        self.risk.validate()
    }

    /// Stable SHA-256 of the canonical key-value rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_kv_string().as_bytes()))
    }

    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.to_pairs() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let p = &self.population;
        vec![
            ("name", self.name.clone()),
            ("n_agents", self.n_agents.to_string()),
            ("ticks_per_day", self.ticks_per_day.to_string()),
            ("n_days", self.n_days.to_string()),
            ("tick_size", self.tick_size.to_string()),
            ("p_f_0", self.fundamental.p_f_0.to_string()),
            ("mu", self.fundamental.mu.to_string()),
            ("sigma", self.fundamental.sigma.to_string()),
            ("r_f", self.r_f.to_string()),
            ("g1", p.g1.to_string()),
            ("g2", p.g2.to_string()),
            ("n", p.n.to_string()),
            ("lambda", p.lambda.to_string()),
            ("L_max", p.l_max.to_string()),
            ("A", p.a.to_string()),
            ("c_0", p.c_0.to_string()),
            ("s_0", p.s_0.to_string()),
            ("max_leverage", self.max_leverage.to_string()),
            ("short_allowed", self.short_allowed.to_string()),
            ("max_short", self.max_short.to_string()),
            ("min_variance", self.min_variance.to_string()),
            ("risk.metric", self.risk.metric.to_string()),
            ("risk.confidence", self.risk.confidence.to_string()),
            ("risk.window", self.risk.window.to_string()),
            ("risk.horizon", self.risk.horizon.to_string()),
            ("risk.multiplier", self.risk.multiplier.to_string()),
            ("master_seed", self.master_seed.to_string()),
            ("max_logged_events", self.max_logged_events.to_string()),
        ]
    }
}

/// Parsed config file: the base treatment plus the regimes to run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub base: TreatmentConfig,
    pub treatments: Vec<RiskMetric>,
}

impl ConfigFile {
    /// One config per requested regime, sharing every other parameter.
    pub fn treatment_configs(&self) -> Vec<TreatmentConfig> {
        self.treatments
            .iter()
            .map(|&m| self.base.with_metric(m))
            .collect()
    }
}

fn field_err(key: &str, value: &str, what: &str) -> Error {
    Error::config(key, format!("cannot parse `{value}` as {what}"))
}

/// Parse the flat key-value format. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut cfg = TreatmentConfig::default();
    let mut treatments = vec![RiskMetric::None, RiskMetric::VaR, RiskMetric::ES];
    let mut seen = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if seen.insert(key.to_string(), lineno).is_some() {
            return Err(Error::config(key, "duplicate key"));
        }
        let f = |what: &str| -> Result<f64> {
            value.parse::<f64>().map_err(|_| field_err(key, value, what))
        };
        let u = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| field_err(key, value, "a nonnegative integer"))
        };
        let d = || -> Result<Dist> {
            value
                .parse::<Dist>()
                .map_err(|_| field_err(key, value, "a distribution"))
        };
        let p = &mut cfg.population;
        match key {
            "name" => cfg.name = value.to_string(),
            "n_agents" => cfg.n_agents = u()?,
            "ticks_per_day" => cfg.ticks_per_day = u()?,
            "n_days" => cfg.n_days = u()?,
            "tick_size" => cfg.tick_size = f("a number")?,
            "p_f_0" => cfg.fundamental.p_f_0 = f("a number")?,
            "mu" => cfg.fundamental.mu = f("a number")?,
            "sigma" => cfg.fundamental.sigma = f("a number")?,
            "r_f" => cfg.r_f = f("a number")?,
            "g1" => p.g1 = d()?,
            "g2" => p.g2 = d()?,
            "n" => p.n = d()?,
            "lambda" => p.lambda = d()?,
            "L_max" => p.l_max = u()?,
            "A" => p.a = d()?,
            "c_0" => p.c_0 = d()?,
            "s_0" => p.s_0 = d()?,
            "max_leverage" => cfg.max_leverage = f("a number")?,
            "short_allowed" => {
                cfg.short_allowed = value
                    .parse::<bool>()
                    .map_err(|_| field_err(key, value, "true/false"))?
            }
            "max_short" => cfg.max_short = f("a number")?,
            "min_variance" => cfg.min_variance = f("a number")?,
            "risk.metric" => cfg.risk.metric = value.parse()?,
            "risk.confidence" => cfg.risk.confidence = f("a number")?,
            "risk.window" => cfg.risk.window = u()?,
            "risk.horizon" => cfg.risk.horizon = u()? as u64,
            "risk.multiplier" => cfg.risk.multiplier = f("a number")?,
            "master_seed" => {
                cfg.master_seed = value
                    .parse::<u64>()
                    .map_err(|_| field_err(key, value, "an unsigned integer"))?
            }
            "max_logged_events" => cfg.max_logged_events = u()?,
            "treatments" => {
                treatments = value
                    .split(',')
                    .map(|t| t.parse::<RiskMetric>())
                    .collect::<Result<Vec<_>>>()?;
                if treatments.is_empty() {
                    return Err(Error::config("treatments", "must list at least one"));
                }
            }
            other => return Err(Error::config(other, "unknown key")),
        }
    }
    if !seen.contains_key("risk.confidence") && cfg.risk.metric == RiskMetric::ES {
        cfg.risk.confidence = 0.975;
    }
    cfg.validate()?;
    Ok(ConfigFile {
        base: cfg,
        treatments,
    })
}
