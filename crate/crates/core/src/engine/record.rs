//! Simulation output: tick series, daily series, agent panel and manifest.

use serde::{Deserialize, Serialize};

use crate::engine::config::TreatmentConfig;

/// Per-tick market state after matching. Missing quotes are `NaN`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TickSeries {
    pub price: Vec<f64>,
    pub fundamental: Vec<f64>,
    pub best_bid: Vec<f64>,
    pub best_ask: Vec<f64>,
    pub spread: Vec<f64>,
    pub volume: Vec<u64>,
    pub n_trades: Vec<u32>,
    pub bid_depth: Vec<u64>,
    pub ask_depth: Vec<u64>,
}

impl TickSeries {
    pub fn with_capacity(n: usize) -> Self {
        TickSeries {
            price: Vec::with_capacity(n),
            fundamental: Vec::with_capacity(n),
            best_bid: Vec::with_capacity(n),
            best_ask: Vec::with_capacity(n),
            spread: Vec::with_capacity(n),
            volume: Vec::with_capacity(n),
            n_trades: Vec::with_capacity(n),
            bid_depth: Vec::with_capacity(n),
            ask_depth: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }

    /// Bitwise equality; unlike `==` it treats matching `NaN` quotes as equal.
    pub fn same_as(&self, other: &TickSeries) -> bool {
        let f = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        };
        f(&self.price, &other.price)
            && f(&self.fundamental, &other.fundamental)
            && f(&self.best_bid, &other.best_bid)
            && f(&self.best_ask, &other.best_ask)
            && f(&self.spread, &other.spread)
            && self.volume == other.volume
            && self.n_trades == other.n_trades
            && self.bid_depth == other.bid_depth
            && self.ask_depth == other.ask_depth
    }

    /// Tick index of every trade, repeated once per trade within a tick.
    pub fn trade_times(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for (t, &n) in self.n_trades.iter().enumerate() {
            out.extend(std::iter::repeat_n(t as u64, n as usize));
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub close: Vec<f64>,
    pub fundamental: Vec<f64>,
    pub volume: Vec<u64>,
    pub n_trades: Vec<u64>,
}

impl DailySeries {
    pub fn len(&self) -> usize {
        self.close.len()
    }

    pub fn is_empty(&self) -> bool {
        self.close.is_empty()
    }
}

/// End-of-day state of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub cash: f64,
    pub stock: i64,
    pub wealth: f64,
    pub defaulted: bool,
}

/// Parameters drawn for one institution at the start of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentDraw {
    pub id: u32,
    pub g1: f64,
    pub g2: f64,
    pub n: f64,
    pub lookback: usize,
    pub entry_prob: f64,
    pub horizon: u64,
    pub risk_aversion: f64,
    pub c_0: f64,
    pub s_0: i64,
}

/// A tick at which the capital requirement reduced an agent's target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapitalEvent {
    pub tick: u64,
    pub agent: u32,
    pub metric: f64,
    pub desired: i64,
    pub cap: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub treatment: String,
    pub run: usize,
    pub seed: u64,
    pub config_hash: String,
    pub config: TreatmentConfig,
    pub warmup_ticks: usize,
    pub agents: Vec<AgentDraw>,
    pub capital_events_total: u64,
    /// Binding-constraint count per agent, indexed by id.
    pub capital_events_by_agent: Vec<u64>,
    /// First `max_logged_events` binding-constraint events.
    pub capital_events: Vec<CapitalEvent>,
    pub agents_in_default_at_end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub ticks_per_day: usize,
    pub ticks: TickSeries,
    pub daily: DailySeries,
    /// `panel[day][agent]`.
    pub panel: Vec<Vec<AgentSnapshot>>,
    pub manifest: Manifest,
}

impl SimulationRecord {
    /// Relative bubble `(p - p_f) / p` per tick.
    pub fn bubble(&self) -> Vec<f64> {
        self.ticks
            .price
            .iter()
            .zip(&self.ticks.fundamental)
            .map(|(&p, &f)| (p - f) / p)
            .collect()
    }
}

/// Aggregate tick series into days: close is the last tick's price,
/// volume and trade counts are summed. A trailing partial day is dropped.
pub fn sample_daily_series(
    price: &[f64],
    fundamental: &[f64],
    volume: &[u64],
    n_trades: &[u32],
    ticks_per_day: usize,
) -> DailySeries {
    let days = price.len().checked_div(ticks_per_day).unwrap_or(0);
    let mut out = DailySeries {
        close: Vec::with_capacity(days),
        fundamental: Vec::with_capacity(days),
        volume: Vec::with_capacity(days),
        n_trades: Vec::with_capacity(days),
    };
    for d in 0..days {
        let (a, b) = (d * ticks_per_day, (d + 1) * ticks_per_day);
        out.close.push(price[b - 1]);
        out.fundamental.push(fundamental.get(b - 1).copied().unwrap_or(f64::NAN));
        out.volume.push(volume.get(a..b).map_or(0, |v| v.iter().sum()));
        out.n_trades
            .push(n_trades.get(a..b).map_or(0, |v| v.iter().map(|&n| n as u64).sum()));
    }
    out
}

pub fn sample_daily(record: &SimulationRecord) -> DailySeries {
    let t = &record.ticks;
    sample_daily_series(&t.price, &t.fundamental, &t.volume, &t.n_trades, record.ticks_per_day)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn daily_sampling_examples() {
        let price = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let d = sample_daily_series(&price, &price, &[1, 2, 3, 0, 0, 4], &[1, 1, 1, 0, 0, 2], 3);
        assert_eq!(d.close, vec![3.0, 6.0]);
        assert_eq!(d.volume, vec![6, 4]);
        assert_eq!(d.n_trades, vec![3, 2]);
    }

    #[test]
    fn partial_day_dropped() {
        let d = sample_daily_series(&[1.0; 7], &[1.0; 7], &[1; 7], &[1; 7], 3);
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn trade_times_expand_counts() {
        let t = TickSeries {
            n_trades: vec![0, 2, 0, 1],
            ..Default::default()
        };
        assert_eq!(t.trade_times(), vec![1, 1, 3]);
    }
}
