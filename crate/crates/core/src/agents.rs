//! Financial-institution behaviour: the fundamental value process,
//! expectation formation, mean-variance portfolio choice and order
//! construction under budget, leverage and short-selling limits.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{AgentId, Order, Side, TickGrid};
use crate::regulation;

/// Geometric Brownian motion for the publicly known fundamental price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalProcess {
    pub price: f64,
    /// Drift per tick.
    pub drift: f64,
    /// Volatility per square-root tick.
    pub volatility: f64,
    /// Lowest admissible price.
    pub floor: f64,
}

impl FundamentalProcess {
    pub fn new(price: f64, drift: f64, volatility: f64) -> Self {
        FundamentalProcess {
            price,
            drift,
            volatility,
            floor: 1e-6,
        }
    }

    /// Advance by `dt` ticks using the standard normal draw `z`.
    pub fn step(&mut self, dt: f64, z: f64) -> f64 {
        let growth = 1.0 + self.drift * dt + self.volatility * z * dt.sqrt();
        self.price = (self.price * growth).max(self.floor);
        self.price
    }
}

/// Mean one-step log return over the most recent `lookback` steps.
///
/// Uses the last `lookback + 1` entries of `history` (oldest first).
pub fn chartist_average(history: &[f64], lookback: usize) -> Result<f64> {
    if lookback == 0 {
        return Err(Error::InvalidInput("chartist lookback must be >= 1".into()));
    }
    if history.len() < lookback + 1 {
        return Err(Error::InsufficientData(format!(
            "chartist average needs {} prices, history has {}",
            lookback + 1,
            history.len()
        )));
    }
    let window = &history[history.len() - lookback - 1..];
    let sum: f64 = window.windows(2).map(|w| (w[1] / w[0]).ln()).sum();
    Ok(sum / lookback as f64)
}

/// Sample variance of one-step log returns over the last `lookback` steps.
pub fn return_variance(history: &[f64], lookback: usize) -> Result<f64> {
    if lookback < 2 || history.len() < lookback + 1 {
        return Err(Error::InsufficientData(format!(
            "return variance needs lookback >= 2 and {} prices",
            lookback + 1
        )));
    }
    let window = &history[history.len() - lookback - 1..];
    let rets = || window.windows(2).map(|w| (w[1] / w[0]).ln());
    let mean = rets().sum::<f64>() / lookback as f64;
    let ss: f64 = rets().map(|r| (r - mean) * (r - mean)).sum();
    Ok(ss / (lookback - 1) as f64)
}

/// One trading institution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Institution {
    pub id: AgentId,
    pub cash: f64,
    pub stock: i64,
    /// Fundamentalist weight.
    pub g1: f64,
    /// Chartist weight; positive chases trends, negative is contrarian.
    pub g2: f64,
    /// Noise weight.
    pub noise: f64,
    pub lookback: usize,
    pub entry_prob: f64,
    pub horizon: u64,
    pub risk_aversion: f64,
    pub max_leverage: f64,
    pub short_allowed: bool,
    /// Most negative risky fraction when shorting is allowed.
    pub max_short: f64,
}

impl Institution {
    pub fn wealth(&self, price: f64) -> f64 {
        wealth(self.cash, self.stock, price)
    }

    pub fn is_technical_default(&self, price: f64) -> bool {
        self.wealth(price) < 0.0
    }

    /// Lower and upper bound on the risky-asset fraction.
    pub fn fraction_bounds(&self) -> (f64, f64) {
        let lo = if self.short_allowed {
            -self.max_short.abs()
        } else {
            0.0
        };
        (lo, self.max_leverage)
    }
}

/// Horizon in ticks for a per-tick entry probability: the expected wait
/// between entries, rounded up.
pub fn horizon_for(entry_prob: f64) -> u64 {
    (1.0 / entry_prob).ceil().max(1.0) as u64
}

pub fn wealth(cash: f64, stock: i64, price: f64) -> f64 {
    cash + stock as f64 * price
}

/// What an entering agent observes.
#[derive(Debug, Clone, Copy)]
pub struct MarketView<'a> {
    pub price: f64,
    pub fundamental: f64,
    /// Past prices, oldest first, ending with the previous tick.
    pub history: &'a [f64],
    /// Risk-free log rate per tick.
    pub risk_free: f64,
    /// Lower bound applied to per-tick return variance estimates.
    pub min_variance: f64,
}

/// Fundamentalist + chartist + noise return expectation over the agent's horizon.
pub fn expected_return(agent: &Institution, view: &MarketView<'_>, noise_draw: f64) -> Result<f64> {
    if view.price <= 0.0 || view.fundamental <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "prices must be positive (price {}, fundamental {})",
            view.price, view.fundamental
        )));
    }
    let fundamental = (view.fundamental / view.price).ln();
    let chartist = if agent.g2 == 0.0 {
        0.0
    } else {
        chartist_average(view.history, agent.lookback)?
    };
    Ok(agent.g1 * fundamental + agent.g2 * chartist + agent.noise * noise_draw)
}

pub fn expected_price(price: f64, expected_return: f64) -> f64 {
    price * expected_return.exp()
}

/// Mean-variance optimal risky fraction, clamped to the agent's bounds.
pub fn optimal_risky_fraction(agent: &Institution, excess_return: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "return variance must be positive, got {variance}"
        )));
    }
    let raw = excess_return / (agent.risk_aversion * variance);
    let (lo, hi) = agent.fraction_bounds();
    Ok(raw.clamp(lo, hi))
}

/// Capital-requirement inputs applied to the target position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapitalLimit {
    /// Risk metric (VaR or ES) as a loss rate over the regulatory horizon.
    pub metric: f64,
    pub multiplier: f64,
}

/// Result of turning a target fraction into an order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderDecision {
    pub order: Option<Order>,
    /// Target position before the capital requirement.
    pub desired_shares: i64,
    pub target_shares: i64,
    /// Set when the capital requirement reduced the target position.
    pub capped: Option<i64>,
}

/// Deterministic order construction.
///
/// `u` in [0, 1) places the limit price between the current and the
/// expected price.
#[allow(clippy::too_many_arguments)]
pub fn construct_order(
    agent: &Institution,
    fraction: f64,
    price: f64,
    expected: f64,
    u: f64,
    grid: TickGrid,
    capital: Option<CapitalLimit>,
    tick: u64,
) -> OrderDecision {
    let wealth = agent.wealth(price);
    let raw_limit = (price + u * (expected - price)).max(grid.tick_size);
    let desired = (fraction * wealth / raw_limit).floor() as i64;
    let mut target = desired;
    let mut capped = None;
    if let Some(cap) = capital {
        let limited =
            regulation::apply_capital_constraint(target, wealth, price, cap.metric, cap.multiplier);
        if limited != target {
            capped = Some(limited);
            target = limited;
        }
    }
    let none = OrderDecision {
        order: None,
        desired_shares: desired,
        target_shares: target,
        capped,
    };
    if target == agent.stock {
        return none;
    }
    let (lo, _) = agent.fraction_bounds();
    let side = if target > agent.stock {
        Side::Buy
    } else {
        Side::Sell
    };
    let limit = match side {
        Side::Buy => grid.floor_ticks(raw_limit),
        Side::Sell => grid.ceil_ticks(raw_limit),
    };
    let limit_price = grid.to_price(limit);
    let mut quantity = (target - agent.stock).unsigned_abs();
    match side {
        Side::Buy => {
            let credit = (agent.max_leverage - 1.0).max(0.0) * wealth.max(0.0);
            let affordable = ((agent.cash + credit) / limit_price).floor();
            if affordable < 1.0 {
                return none;
            }
            quantity = quantity.min(affordable as u64);
        }
        Side::Sell => {
            let floor_shares = if agent.short_allowed {
                (lo * wealth.max(0.0) / price).floor() as i64
            } else {
                0
            };
            let sellable = agent.stock - floor_shares;
            if sellable < 1 {
                return none;
            }
            quantity = quantity.min(sellable as u64);
        }
    }
    if quantity == 0 {
        return none;
    }
    OrderDecision {
        order: Some(Order {
            agent_id: agent.id,
            side,
            quantity,
            limit,
            submit_tick: tick,
        }),
        desired_shares: desired,
        target_shares: target,
        capped,
    }
}

/// Full decision of an entering agent: expectation, optimisation, order.
pub fn generate_order<R: Rng + ?Sized>(
    agent: &Institution,
    view: &MarketView<'_>,
    grid: TickGrid,
    capital: Option<CapitalLimit>,
    tick: u64,
    rng: &mut R,
) -> Result<OrderDecision> {
    if agent.is_technical_default(view.price) {
        return Ok(OrderDecision {
            order: None,
            desired_shares: agent.stock,
            target_shares: agent.stock,
            capped: None,
        });
    }
    let eps: f64 = StandardNormal.sample(rng);
    let u: f64 = rng.random();
    let r_hat = expected_return(agent, view, eps)?;
    let p_hat = expected_price(view.price, r_hat);
    let tau = agent.horizon as f64;
    let per_tick_var = return_variance(view.history, agent.lookback.max(2))?.max(view.min_variance);
    let excess = r_hat - tau * view.risk_free;
    let w = optimal_risky_fraction(agent, excess, per_tick_var * tau)?;
    Ok(construct_order(agent, w, view.price, p_hat, u, grid, capital, tick))
}
