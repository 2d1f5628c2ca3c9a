//! Simulation engine: configuration, seeded streams, the tick loop, batch
//! runner and run artefacts.

pub mod batch;
pub mod config;
pub mod io;
pub mod record;
pub mod rng;
pub mod simulate;

pub use batch::{check_shared, run_batch, run_batch_map};
pub use config::{parse_config, ConfigFile, Dist, TreatmentConfig};
pub use record::{sample_daily, DailySeries, SimulationRecord, TickSeries};
pub use simulate::{draw_agents, run_simulation};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regulation::RiskMetric;

    fn small() -> TreatmentConfig {
        TreatmentConfig {
            n_days: 20,
            ticks_per_day: 50,
            n_agents: 30,
            ..TreatmentConfig::default()
        }
    }

    #[test]
    fn no_agents_means_flat_price_and_no_volume() {
        let cfg = TreatmentConfig {
            n_agents: 0,
            ..small()
        };
        let rec = run_simulation(&cfg, 3).unwrap();
        let p0 = rec.ticks.price[0];
        assert!(rec.ticks.price.iter().all(|&p| p == p0));
        assert!(rec.ticks.volume.iter().all(|&v| v == 0));
        assert_eq!(rec.ticks.len(), 1000);
        assert_eq!(rec.daily.len(), 20);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = small();
        let (a, b) = (run_simulation(&cfg, 11).unwrap(), run_simulation(&cfg, 11).unwrap());
        assert!(a.ticks.same_as(&b.ticks));
        assert_eq!((a.daily, a.panel, a.manifest), (b.daily, b.panel, b.manifest));
        assert_ne!(
            run_simulation(&cfg, 11).unwrap().ticks.price,
            run_simulation(&cfg, 12).unwrap().ticks.price
        );
    }

    #[test]
    fn shares_are_conserved_and_budgets_hold() {
        let cfg = small();
        let rec = run_simulation(&cfg, 5).unwrap();
        let initial: i64 = rec.manifest.agents.iter().map(|a| a.s_0).sum();
        for day in &rec.panel {
            assert_eq!(day.iter().map(|a| a.stock).sum::<i64>(), initial);
            assert!(day.iter().all(|a| a.cash >= -1e-6 && a.stock >= 0));
        }
        assert!(rec.ticks.volume.iter().sum::<u64>() > 0);
    }

    #[test]
    fn daily_close_is_last_tick() {
        let rec = run_simulation(&small(), 9).unwrap();
        for (d, &c) in rec.daily.close.iter().enumerate() {
            assert_eq!(c, rec.ticks.price[(d + 1) * 50 - 1]);
        }
    }

    #[test]
    fn pure_fundamentalists_track_fundamental() {
        let mut cfg = small();
        cfg.fundamental.sigma = 0.0;
        cfg.population.g2 = Dist::constant(0.0);
        cfg.population.n = Dist::constant(0.0);
        let rec = run_simulation(&cfg, 1).unwrap();
        for (&p, &f) in rec.ticks.price.iter().zip(&rec.ticks.fundamental) {
            assert!(((p - f) / p).abs() <= cfg.tick_size / p + 1e-12);
        }
    }

    #[test]
    fn batch_shares_draws_across_treatments() {
        let base = small();
        let cfgs = vec![base.with_metric(RiskMetric::None), base.with_metric(RiskMetric::ES)];
        let out = run_batch(&cfgs, 3).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|t| t.len() == 3));
        for (a, b) in out[0].iter().zip(&out[1]) {
            assert_eq!(a.manifest.agents, b.manifest.agents);
            assert_eq!(a.ticks.fundamental, b.ticks.fundamental);
        }
        assert_ne!(out[0][0].manifest.agents, out[0][1].manifest.agents);
    }

    #[test]
    fn metric_none_in_both_gives_identical_output() {
        let base = small();
        let mut other = base.clone();
        other.name = "es-disabled".into();
        let out = run_batch(&[base, other], 1).unwrap();
        assert!(out[0][0].ticks.same_as(&out[1][0].ticks));
    }

    #[test]
    fn mismatched_treatments_rejected() {
        let a = small();
        let mut b = a.with_metric(RiskMetric::VaR);
        b.n_agents += 1;
        assert!(run_batch(&[a, b], 1).is_err());
    }

    #[test]
    fn invalid_config_rejected_before_running() {
        let cfg = TreatmentConfig {
            n_days: 0,
            ..small()
        };
        assert!(run_simulation(&cfg, 0).is_err());
    }
}
