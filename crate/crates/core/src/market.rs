//! Continuous double-auction limit order book.
//!
//! Orders rest at integer tick prices. Incoming orders match against the
//! opposite side while they cross, at the resting order's price, earliest
//! first within a level. Each agent has at most one live order: a new
//! submission cancels whatever the agent had resting.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type AgentId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }
}

/// A price expressed as a whole number of ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ticks(pub i64);

/// Conversion between currency prices and the discrete tick grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickGrid {
    pub tick_size: f64,
}

impl Default for TickGrid {
    fn default() -> Self {
        TickGrid { tick_size: 0.01 }
    }
}

impl TickGrid {
    pub fn new(tick_size: f64) -> Result<Self> {
        if !(tick_size.is_finite() && tick_size > 0.0) {
            return Err(Error::config("tick_size", "must be positive and finite"));
        }
        Ok(TickGrid { tick_size })
    }

    /// Nearest grid point, never below one tick.
    pub fn to_ticks(&self, price: f64) -> Ticks {
        Ticks(((price / self.tick_size).round() as i64).max(1))
    }

    pub fn floor_ticks(&self, price: f64) -> Ticks {
        Ticks(((price / self.tick_size + 1e-9).floor() as i64).max(1))
    }

    pub fn ceil_ticks(&self, price: f64) -> Ticks {
        Ticks(((price / self.tick_size - 1e-9).ceil() as i64).max(1))
    }

    pub fn to_price(&self, ticks: Ticks) -> f64 {
        // dividing by an integral ticks-per-unit keeps 0.01 grids free of
        // representation noise such as 99.85000000000001
        let per_unit = 1.0 / self.tick_size;
        if (per_unit - per_unit.round()).abs() < 1e-9 {
            ticks.0 as f64 / per_unit.round()
        } else {
            ticks.0 as f64 * self.tick_size
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub agent_id: AgentId,
    pub side: Side,
    pub quantity: u64,
    pub limit: Ticks,
    pub submit_tick: u64,
}

impl Order {
    pub fn validate(&self) -> Result<()> {
        if self.quantity == 0 {
            return Err(Error::InvalidOrder(format!(
                "agent {} submitted zero quantity",
                self.agent_id
            )));
        }
        if self.limit.0 <= 0 {
            return Err(Error::InvalidOrder(format!(
                "agent {} submitted nonpositive price {}",
                self.agent_id, self.limit.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub tick: u64,
    pub price: Ticks,
    pub quantity: u64,
    pub buyer_id: AgentId,
    pub seller_id: AgentId,
    /// Side of the incoming order that triggered the execution.
    pub aggressor: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Resting {
    agent_id: AgentId,
    seq: u64,
    quantity: u64,
    submit_tick: u64,
}

#[derive(Debug, Clone, Copy)]
struct Locator {
    side: Side,
    price: Ticks,
    seq: u64,
}

/// Top-of-book state recorded once per tick.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BookSnapshot {
    pub best_bid: Option<f64>,
    pub best_ask: Option<f64>,
    pub bid_depth: u64,
    pub ask_depth: u64,
}

#[derive(Debug, Clone)]
pub struct LimitOrderBook {
    grid: TickGrid,
    bids: BTreeMap<Ticks, VecDeque<Resting>>,
    asks: BTreeMap<Ticks, VecDeque<Resting>>,
    index: HashMap<AgentId, Locator>,
    bid_depth: u64,
    ask_depth: u64,
    next_seq: u64,
    last_trade: Option<Ticks>,
    last_quote: Option<f64>,
    seed_price: f64,
}

impl LimitOrderBook {
    /// An empty book whose price proxy starts at `seed_price`.
    pub fn new(grid: TickGrid, seed_price: f64) -> Self {
        LimitOrderBook {
            grid,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            index: HashMap::new(),
            bid_depth: 0,
            ask_depth: 0,
            next_seq: 0,
            last_trade: None,
            last_quote: None,
            seed_price,
        }
    }

    pub fn grid(&self) -> TickGrid {
        self.grid
    }

    /// Replace the fallback price used before any trade or quote exists.
    pub fn set_seed_price(&mut self, price: f64) {
        self.seed_price = price;
    }

    pub fn submit(&mut self, order: Order) -> Result<Vec<Trade>> {
        let mut trades = Vec::new();
        self.submit_into(order, &mut trades)?;
        Ok(trades)
    }

    /// Like [`submit`](Self::submit) but appends trades to a caller buffer.
    pub fn submit_into(&mut self, order: Order, trades: &mut Vec<Trade>) -> Result<()> {
        order.validate()?;
        self.cancel(order.agent_id);

        let mut remaining = order.quantity;
        match order.side {
            Side::Buy => {
                while remaining > 0 {
                    let Some(mut level) = self.asks.first_entry() else {
                        break;
                    };
                    let price = *level.key();
                    if price > order.limit {
                        break;
                    }
                    let queue = level.get_mut();
                    while remaining > 0 {
                        let Some(front) = queue.front_mut() else {
                            break;
                        };
                        let fill = remaining.min(front.quantity);
                        trades.push(Trade {
                            tick: order.submit_tick,
                            price,
                            quantity: fill,
                            buyer_id: order.agent_id,
                            seller_id: front.agent_id,
                            aggressor: Side::Buy,
                        });
                        remaining -= fill;
                        front.quantity -= fill;
                        self.ask_depth -= fill;
                        if front.quantity == 0 {
                            let done = queue.pop_front().expect("front exists");
                            self.index.remove(&done.agent_id);
                        }
                    }
                    if queue.is_empty() {
                        level.remove();
                    }
                    self.last_trade = Some(price);
                }
            }
            Side::Sell => {
                while remaining > 0 {
                    let Some(mut level) = self.bids.last_entry() else {
                        break;
                    };
                    let price = *level.key();
                    if price < order.limit {
                        break;
                    }
                    let queue = level.get_mut();
                    while remaining > 0 {
                        let Some(front) = queue.front_mut() else {
                            break;
                        };
                        let fill = remaining.min(front.quantity);
                        trades.push(Trade {
                            tick: order.submit_tick,
                            price,
                            quantity: fill,
                            buyer_id: front.agent_id,
                            seller_id: order.agent_id,
                            aggressor: Side::Sell,
                        });
                        remaining -= fill;
                        front.quantity -= fill;
                        self.bid_depth -= fill;
                        if front.quantity == 0 {
                            let done = queue.pop_front().expect("front exists");
                            self.index.remove(&done.agent_id);
                        }
                    }
                    if queue.is_empty() {
                        level.remove();
                    }
                    self.last_trade = Some(price);
                }
            }
        }

        if remaining > 0 {
            let seq = self.next_seq;
            self.next_seq += 1;
            let resting = Resting {
                agent_id: order.agent_id,
                seq,
                quantity: remaining,
                submit_tick: order.submit_tick,
            };
            let book = match order.side {
                Side::Buy => {
                    self.bid_depth += remaining;
                    &mut self.bids
                }
                Side::Sell => {
                    self.ask_depth += remaining;
                    &mut self.asks
                }
            };
            book.entry(order.limit).or_default().push_back(resting);
            self.index.insert(
                order.agent_id,
                Locator {
                    side: order.side,
                    price: order.limit,
                    seq,
                },
            );
        }
        self.refresh_quote();
        Ok(())
    }

    /// Remove the agent's resting order, returning what was left of it.
    pub fn cancel(&mut self, agent_id: AgentId) -> Option<Order> {
        let loc = self.index.remove(&agent_id)?;
        let (book, depth) = match loc.side {
            Side::Buy => (&mut self.bids, &mut self.bid_depth),
            Side::Sell => (&mut self.asks, &mut self.ask_depth),
        };
        let queue = book.get_mut(&loc.price)?;
        let pos = queue.iter().position(|r| r.seq == loc.seq)?;
        let resting = queue.remove(pos)?;
        if queue.is_empty() {
            book.remove(&loc.price);
        }
        *depth -= resting.quantity;
        self.refresh_quote();
        Some(Order {
            agent_id,
            side: loc.side,
            quantity: resting.quantity,
            limit: loc.price,
            submit_tick: resting.submit_tick,
        })
    }

    /// The agent's live order, if any.
    pub fn resting_order(&self, agent_id: AgentId) -> Option<Order> {
        let loc = self.index.get(&agent_id)?;
        let book = match loc.side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        };
        let r = book.get(&loc.price)?.iter().find(|r| r.seq == loc.seq)?;
        Some(Order {
            agent_id,
            side: loc.side,
            quantity: r.quantity,
            limit: loc.price,
            submit_tick: r.submit_tick,
        })
    }

    fn refresh_quote(&mut self) {
        let quote = match (self.best_bid_ticks(), self.best_ask_ticks()) {
            (Some(b), Some(a)) => Some(0.5 * (self.grid.to_price(b) + self.grid.to_price(a))),
            (Some(b), None) => Some(self.grid.to_price(b)),
            (None, Some(a)) => Some(self.grid.to_price(a)),
            (None, None) => None,
        };
        if quote.is_some() {
            self.last_quote = quote;
        }
    }

    pub fn best_bid_ticks(&self) -> Option<Ticks> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask_ticks(&self) -> Option<Ticks> {
        self.asks.keys().next().copied()
    }

    pub fn best_bid(&self) -> Option<f64> {
        self.best_bid_ticks().map(|t| self.grid.to_price(t))
    }

    pub fn best_ask(&self) -> Option<f64> {
        self.best_ask_ticks().map(|t| self.grid.to_price(t))
    }

    pub fn bid_depth(&self) -> u64 {
        self.bid_depth
    }

    pub fn ask_depth(&self) -> u64 {
        self.ask_depth
    }

    pub fn last_trade_price(&self) -> Option<f64> {
        self.last_trade.map(|t| self.grid.to_price(t))
    }

    pub fn last_quote_price(&self) -> Option<f64> {
        self.last_quote
    }

    /// Last transaction price, else last quoted price, else the seed.
    pub fn current_price(&self) -> f64 {
        self.last_trade_price()
            .or(self.last_quote)
            .unwrap_or(self.seed_price)
    }

    /// Best ask minus best bid; `None` when either side is empty.
    pub fn spread(&self) -> Option<f64> {
        match (self.best_bid_ticks(), self.best_ask_ticks()) {
            (Some(b), Some(a)) => Some(self.grid.to_price(Ticks(a.0 - b.0))),
            _ => None,
        }
    }

    pub fn snapshot(&self) -> BookSnapshot {
        BookSnapshot {
            best_bid: self.best_bid(),
            best_ask: self.best_ask(),
            bid_depth: self.bid_depth,
            ask_depth: self.ask_depth,
        }
    }

    pub fn resting_count(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(agent: AgentId, side: Side, qty: u64, px: i64, t: u64) -> Order {
        Order {
            agent_id: agent,
            side,
            quantity: qty,
            limit: Ticks(px),
            submit_tick: t,
        }
    }

    fn book() -> LimitOrderBook {
        LimitOrderBook::new(TickGrid::new(1.0).unwrap(), 100.0)
    }

    #[test]
    fn empty_book_buy_rests() {
        let mut b = book();
        let trades = b.submit(order(1, Side::Buy, 10, 100, 0)).unwrap();
        assert!(trades.is_empty());
        assert_eq!(b.best_bid(), Some(100.0));
        assert_eq!(b.bid_depth(), 10);
    }

    #[test]
    fn executes_at_resting_price() {
        let mut b = book();
        b.submit(order(1, Side::Sell, 5, 99, 1)).unwrap();
        let trades = b.submit(order(2, Side::Buy, 5, 100, 2)).unwrap();
        assert_eq!(trades.len(), 1);
        assert_eq!(trades[0].price, Ticks(99));
        assert_eq!(trades[0].quantity, 5);
        assert!(b.is_empty());
        assert_eq!(b.current_price(), 99.0);
    }

    #[test]
    fn fifo_within_level_with_partial_fill() {
        let mut b = book();
        b.submit(order(1, Side::Sell, 3, 99, 1)).unwrap();
        b.submit(order(2, Side::Sell, 3, 99, 2)).unwrap();
        let trades = b.submit(order(3, Side::Buy, 4, 99, 3)).unwrap();
        assert_eq!(trades.len(), 2);
        assert_eq!((trades[0].seller_id, trades[0].quantity), (1, 3));
        assert_eq!((trades[1].seller_id, trades[1].quantity), (2, 1));
        let rest = b.resting_order(2).unwrap();
        assert_eq!(rest.quantity, 2);
        assert_eq!(b.ask_depth(), 2);
    }

    #[test]
    fn new_order_supersedes_previous() {
        let mut b = book();
        b.submit(order(7, Side::Buy, 5, 98, 1)).unwrap();
        b.submit(order(7, Side::Buy, 5, 97, 2)).unwrap();
        assert_eq!(b.resting_count(), 1);
        assert_eq!(b.best_bid(), Some(97.0));
        assert_eq!(b.bid_depth(), 5);
    }

    #[test]
    fn no_self_trade() {
        let mut b = book();
        b.submit(order(7, Side::Sell, 5, 99, 1)).unwrap();
        let trades = b.submit(order(7, Side::Buy, 5, 100, 2)).unwrap();
        assert!(trades.is_empty());
        assert_eq!(b.best_bid(), Some(100.0));
        assert_eq!(b.best_ask(), None);
    }

    #[test]
    fn rejects_invalid_orders() {
        let mut b = book();
        assert!(b.submit(order(1, Side::Buy, 0, 100, 0)).is_err());
        assert!(b.submit(order(1, Side::Buy, 1, 0, 0)).is_err());
        assert!(b.submit(order(1, Side::Buy, 1, -3, 0)).is_err());
    }

    #[test]
    fn price_fallback_chain() {
        let grid = TickGrid::new(0.5).unwrap();
        let mut b = LimitOrderBook::new(grid, 100.0);
        assert_eq!(b.current_price(), 100.0);
        b.submit(order(1, Side::Sell, 1, 201, 0)).unwrap();
        assert_eq!(b.current_price(), 100.5);
        b.submit(order(2, Side::Buy, 1, 202, 1)).unwrap();
        assert_eq!(b.current_price(), 100.5);
        b.submit(order(3, Side::Sell, 1, 210, 2)).unwrap();
        b.submit(order(4, Side::Buy, 1, 210, 3)).unwrap();
        assert_eq!(b.last_trade_price(), Some(105.0));
        assert_eq!(b.current_price(), 105.0);
    }

    #[test]
    fn spread_cases() {
        let grid = TickGrid::new(0.01).unwrap();
        let mut b = LimitOrderBook::new(grid, 10.0);
        assert_eq!(b.spread(), None);
        b.submit(order(1, Side::Buy, 1, 1000, 0)).unwrap();
        assert_eq!(b.spread(), None);
        b.submit(order(2, Side::Sell, 1, 1005, 0)).unwrap();
        assert!((b.spread().unwrap() - 0.05).abs() < 1e-12);

        let mut c = book();
        c.submit(order(1, Side::Buy, 1, 99, 0)).unwrap();
        c.submit(order(2, Side::Sell, 1, 100, 0)).unwrap();
        assert_eq!(c.spread(), Some(1.0));
    }

    #[test]
    fn cancel_returns_remainder() {
        let mut b = book();
        b.submit(order(1, Side::Sell, 10, 101, 0)).unwrap();
        b.submit(order(2, Side::Buy, 4, 101, 1)).unwrap();
        let left = b.cancel(1).unwrap();
        assert_eq!(left.quantity, 6);
        assert_eq!(b.ask_depth(), 0);
        assert!(b.cancel(1).is_none());
    }

    #[test]
    fn tick_grid_rounding() {
        let g = TickGrid::new(0.01).unwrap();
        assert_eq!(g.to_ticks(100.004), Ticks(10000));
        assert_eq!(g.floor_ticks(100.009), Ticks(10000));
        assert_eq!(g.ceil_ticks(100.001), Ticks(10001));
        assert_eq!(g.to_ticks(-4.0), Ticks(1));
        assert!(TickGrid::new(0.0).is_err());
    }
}
