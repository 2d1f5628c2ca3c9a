//! Single-run simulation loop.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::agents::{
    generate_order, horizon_for, CapitalLimit, FundamentalProcess, Institution, MarketView,
};
use crate::engine::config::TreatmentConfig;
use crate::engine::record::{
    sample_daily_series, AgentDraw, AgentSnapshot, CapitalEvent, Manifest, SimulationRecord,
    TickSeries,
};
use crate::engine::rng::{stream, tag};
use crate::error::Result;
use crate::market::{LimitOrderBook, TickGrid, Trade};
use crate::regulation::{RiskMetric, MIN_WINDOW};

/// Draw the institution population for a run seed.
pub fn draw_agents(cfg: &TreatmentConfig, seed: u64) -> Vec<(Institution, AgentDraw)> {
    let p = &cfg.population;
    (0..cfg.n_agents)
        .map(|i| {
            let mut rng = stream(seed, tag::PARAMS, i as u64);
            let g1 = p.g1.sample(&mut rng);
            let g2 = p.g2.sample(&mut rng);
            let n = p.n.sample(&mut rng);
            let entry_prob = p.lambda.sample(&mut rng);
            let lookback = rng.random_range(2..=p.l_max);
            let risk_aversion = p.a.sample(&mut rng);
            let c_0 = p.c_0.sample(&mut rng);
            let s_0 = p.s_0.sample(&mut rng).round() as i64;
            let horizon = horizon_for(entry_prob);
            let id = i as u32;
            let agent = Institution {
                id,
                cash: c_0,
                stock: s_0,
                g1,
                g2,
                noise: n,
                lookback,
                entry_prob,
                horizon,
                risk_aversion,
                max_leverage: cfg.max_leverage,
                short_allowed: cfg.short_allowed,
                max_short: cfg.max_short,
            };
            let draw = AgentDraw {
                id,
                g1,
                g2,
                n,
                lookback,
                entry_prob,
                horizon,
                risk_aversion,
                c_0,
                s_0,
            };
            (agent, draw)
        })
        .collect()
}

fn snapshot(agents: &[Institution], price: f64) -> Vec<AgentSnapshot> {
    agents
        .iter()
        .map(|a| AgentSnapshot {
            cash: a.cash,
            stock: a.stock,
            wealth: a.wealth(price),
            defaulted: a.is_technical_default(price),
        })
        .collect()
}

fn settle(agents: &mut [Institution], trades: &[Trade], grid: TickGrid) {
    for t in trades {
        let value = grid.to_price(t.price) * t.quantity as f64;
        let q = t.quantity as i64;
        let b = &mut agents[t.buyer_id as usize];
        b.cash -= value;
        b.stock += q;
        let s = &mut agents[t.seller_id as usize];
        s.cash += value;
        s.stock -= q;
    }
}

/// Run one realisation. The result is a pure function of `(cfg, seed)`.
///
/// The first `L_max + 1` ticks are warm-up: the market price is the
/// fundamental price, nobody trades, and nothing is recorded.
pub fn run_simulation(cfg: &TreatmentConfig, seed: u64) -> Result<SimulationRecord> {
    run_simulation_tagged(cfg, seed, 0)
}

pub(crate) fn run_simulation_tagged(
    cfg: &TreatmentConfig,
    seed: u64,
    run: usize,
) -> Result<SimulationRecord> {
    cfg.validate()?;
    let grid = TickGrid::new(cfg.tick_size)?;
    let total = cfg.total_ticks();
    let warmup = cfg.warmup_ticks();
    let f = cfg.fundamental;

    let (mut agents, draws): (Vec<Institution>, Vec<AgentDraw>) =
        draw_agents(cfg, seed).into_iter().unzip();
    let mut entry_rngs: Vec<ChaCha8Rng> = (0..agents.len())
        .map(|i| stream(seed, tag::ENTRY, i as u64))
        .collect();
    let mut decision_rngs: Vec<ChaCha8Rng> = (0..agents.len())
        .map(|i| stream(seed, tag::DECISION, i as u64))
        .collect();
    let mut fund_rng = stream(seed, tag::FUNDAMENTAL, 0);
    let mut shuffle_rng = stream(seed, tag::SHUFFLE, 0);

    let mut fundamental = FundamentalProcess::new(f.p_f_0, f.mu, f.sigma);
    let mut history = Vec::with_capacity(warmup + total);
    let mut returns = Vec::with_capacity(warmup + total);
    history.push(fundamental.price);
    for _ in 1..warmup {
        let z: f64 = StandardNormal.sample(&mut fund_rng);
        let p = fundamental.step(1.0, z);
        returns.push((p / history[history.len() - 1]).ln());
        history.push(p);
    }

    let mut book = LimitOrderBook::new(grid, fundamental.price);
    let mut ticks = TickSeries::with_capacity(total);
    let mut panel = Vec::with_capacity(cfg.n_days);
    let mut events = Vec::new();
    let mut events_by_agent = vec![0u64; agents.len()];
    let mut events_total = 0u64;
    let mut entrants = Vec::with_capacity(agents.len());
    let mut trades = Vec::new();
    let mut tick_trades = Vec::new();
    let regulated = cfg.risk.metric != RiskMetric::None;

    for t in 0..total {
        let tick = t as u64;
        let z: f64 = StandardNormal.sample(&mut fund_rng);
        let p_f = fundamental.step(1.0, z);

        let capital = if regulated && returns.len() >= MIN_WINDOW {
            let w = cfg.risk.window.min(returns.len());
            cfg.risk
                .evaluate(&returns[returns.len() - w..])?
                .map(|metric| CapitalLimit {
                    metric,
                    multiplier: cfg.risk.multiplier,
                })
        } else {
            None
        };

        entrants.clear();
        for (i, a) in agents.iter().enumerate() {
            if entry_rngs[i].random::<f64>() < a.entry_prob {
                entrants.push(i);
            }
        }
        entrants.shuffle(&mut shuffle_rng);

        tick_trades.clear();
        for &i in &entrants {
            let price = book.current_price();
            let agent = &agents[i];
            if agent.is_technical_default(price) {
                book.cancel(agent.id);
                continue;
            }
            let view = MarketView {
                price,
                fundamental: p_f,
                history: &history,
                risk_free: cfg.r_f,
                min_variance: cfg.min_variance,
            };
            let decision = generate_order(agent, &view, grid, capital, tick, &mut decision_rngs[i])?;
            if let (Some(cap), Some(limit)) = (decision.capped, capital) {
                events_total += 1;
                events_by_agent[i] += 1;
                if events.len() < cfg.max_logged_events {
                    events.push(CapitalEvent {
                        tick,
                        agent: agent.id,
                        metric: limit.metric,
                        desired: decision.desired_shares,
                        cap,
                    });
                }
            }
            match decision.order {
                Some(order) => {
                    trades.clear();
                    book.submit_into(order, &mut trades)?;
                    settle(&mut agents, &trades, grid);
                    tick_trades.extend_from_slice(&trades);
                }
                None => {
                    book.cancel(agent.id);
                }
            }
        }

        let price = book.current_price();
        let snap = book.snapshot();
        let bid = snap.best_bid.unwrap_or(f64::NAN);
        let ask = snap.best_ask.unwrap_or(f64::NAN);
        ticks.price.push(price);
        ticks.fundamental.push(p_f);
        ticks.best_bid.push(bid);
        ticks.best_ask.push(ask);
        ticks.spread.push(ask - bid);
        ticks.volume.push(tick_trades.iter().map(|t| t.quantity).sum());
        ticks.n_trades.push(tick_trades.len() as u32);
        ticks.bid_depth.push(snap.bid_depth);
        ticks.ask_depth.push(snap.ask_depth);
        returns.push((price / history[history.len() - 1]).ln());
        history.push(price);

        if (t + 1) % cfg.ticks_per_day == 0 {
            panel.push(snapshot(&agents, price));
        }
    }

    let last_price = history[history.len() - 1];
    let daily = sample_daily_series(
        &ticks.price,
        &ticks.fundamental,
        &ticks.volume,
        &ticks.n_trades,
        cfg.ticks_per_day,
    );
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        treatment: cfg.name.clone(),
        run,
        seed,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        warmup_ticks: warmup,
        agents: draws,
        capital_events_total: events_total,
        capital_events_by_agent: events_by_agent,
        capital_events: events,
        agents_in_default_at_end: agents
            .iter()
            .filter(|a| a.is_technical_default(last_price))
            .count(),
    };
    Ok(SimulationRecord {
        ticks_per_day: cfg.ticks_per_day,
        ticks,
        daily,
        panel,
        manifest,
    })
}
