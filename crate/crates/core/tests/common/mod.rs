//! Test-only reference implementations used as independent oracles.
#![allow(dead_code)]

use marketfacts_core::market::{AgentId, Order, Side, Ticks, Trade};
use rand::Rng;

/// Brute-force matcher: rescans every resting order on each submission.
#[derive(Default)]
pub struct ReferenceBook {
    resting: Vec<(u64, Order)>,
    seq: u64,
}

impl ReferenceBook {
    pub fn submit(&mut self, order: Order) -> Vec<Trade> {
        self.resting.retain(|(_, o)| o.agent_id != order.agent_id);
        let mut remaining = order.quantity;
        let mut trades = Vec::new();
        while remaining > 0 {
            let mut best: Option<usize> = None;
            for (i, (seq, o)) in self.resting.iter().enumerate() {
                if o.side == order.side {
                    continue;
                }
                let crosses = match order.side {
                    Side::Buy => o.limit <= order.limit,
                    Side::Sell => o.limit >= order.limit,
                };
                if !crosses {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(j) => {
                        let (bseq, b) = &self.resting[j];
                        let better_price = match order.side {
                            Side::Buy => o.limit < b.limit,
                            Side::Sell => o.limit > b.limit,
                        };
                        if better_price || (o.limit == b.limit && seq < bseq) {
                            Some(i)
                        } else {
                            Some(j)
                        }
                    }
                };
            }
            let Some(i) = best else { break };
            let fill = remaining.min(self.resting[i].1.quantity);
            let resting = self.resting[i].1;
            let (buyer, seller) = match order.side {
                Side::Buy => (order.agent_id, resting.agent_id),
                Side::Sell => (resting.agent_id, order.agent_id),
            };
            trades.push(Trade {
                tick: order.submit_tick,
                price: resting.limit,
                quantity: fill,
                buyer_id: buyer,
                seller_id: seller,
                aggressor: order.side,
            });
            remaining -= fill;
            self.resting[i].1.quantity -= fill;
            if self.resting[i].1.quantity == 0 {
                self.resting.remove(i);
            }
        }
        if remaining > 0 {
            let mut o = order;
            o.quantity = remaining;
            self.resting.push((self.seq, o));
            self.seq += 1;
        }
        trades
    }

    pub fn best_bid(&self) -> Option<Ticks> {
        self.resting
            .iter()
            .filter(|(_, o)| o.side == Side::Buy)
            .map(|(_, o)| o.limit)
            .max()
    }

    pub fn best_ask(&self) -> Option<Ticks> {
        self.resting
            .iter()
            .filter(|(_, o)| o.side == Side::Sell)
            .map(|(_, o)| o.limit)
            .min()
    }
}

pub fn random_order<R: Rng>(rng: &mut R, n_agents: AgentId, tick: u64) -> Order {
    Order {
        agent_id: rng.random_range(0..n_agents),
        side: if rng.random_bool(0.5) { Side::Buy } else { Side::Sell },
        quantity: rng.random_range(1..=20),
        limit: Ticks(rng.random_range(90..=110)),
        submit_tick: tick,
    }
}

/// Continuous power law on [x_min, inf) by inverse-CDF sampling.
pub fn power_law_sample<R: Rng>(rng: &mut R, n: usize, zeta: f64, x_min: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            x_min * u.powf(-1.0 / (zeta - 1.0))
        })
        .collect()
}

/// Pareto(alpha) on [1, inf).
pub fn pareto_sample<R: Rng>(rng: &mut R, n: usize, alpha: f64) -> Vec<f64> {
    power_law_sample(rng, n, alpha + 1.0, 1.0)
}

/// Direct transcription of the biased sample autocovariance ratio.
pub fn brute_acf(z: &[f64], k_max: usize) -> Vec<f64> {
    let n = z.len();
    let mean = z.iter().sum::<f64>() / n as f64;
    let c = |k: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..n - k {
            s += (z[t] - mean) * (z[t + k] - mean);
        }
        s / n as f64
    };
    let c0 = c(0);
    (0..=k_max).map(|k| c(k) / c0).collect()
}

/// Brute-force two-branch sample cross-correlation, lags -K..=K.
pub fn brute_ccf(x: &[f64], y: &[f64], k_max: usize) -> Vec<f64> {
    let n = x.len();
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let cov = |a: &[f64], ma: f64, b: &[f64], mb: f64, k: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..n - k {
            s += (a[t] - ma) * (b[t + k] - mb);
        }
        s / n as f64
    };
    let sx = cov(x, mx, x, mx, 0).sqrt();
    let sy = cov(y, my, y, my, 0).sqrt();
    let mut out = Vec::with_capacity(2 * k_max + 1);
    for lag in -(k_max as i64)..=(k_max as i64) {
        let c = if lag >= 0 {
            cov(x, mx, y, my, lag as usize)
        } else {
            cov(y, my, x, mx, (-lag) as usize)
        };
        out.push(c / (sx * sy));
    }
    out
}

pub fn simulate_garch<R: Rng>(rng: &mut R, n: usize, omega: f64, a: f64, b: f64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let burn = 500;
    let mut var = omega / (1.0 - a - b);
    let mut out = Vec::with_capacity(n);
    for i in 0..n + burn {
        let z: f64 = StandardNormal.sample(rng);
        let e = var.sqrt() * z;
        if i >= burn {
            out.push(e);
        }
        var = omega + a * e * e + b * var;
    }
    out
}
