//! Continuous power-law fits: MLE exponent, KS-optimal lower bound,
//! semi-parametric bootstrap goodness of fit and resampling uncertainty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::rng::derive_seed;
use crate::error::{Error, Result};

/// Smallest tail admitted when searching for `x_min`.
pub const MIN_TAIL: usize = 50;
pub const DEFAULT_GOF_SETS: usize = 1000;
pub const DEFAULT_BOOTSTRAP: usize = 100;

const GOF_TAG: u64 = 0x474f46;
const BOOT_TAG: u64 = 0x424f4f54;
const SEEDS: usize = 16;
const HOT: usize = 8;
const GRID: usize = 64;
const LEAF: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub zeta: f64,
    pub x_min: f64,
    pub n: usize,
    pub n_tail: usize,
    /// KS distance between the tail and the fitted model.
    pub ks: f64,
    pub p_value: Option<f64>,
    pub n_synth: usize,
    /// Fewer than 100 synthetic sets were used for the p-value.
    pub low_synth_warning: bool,
    pub zeta_se: Option<f64>,
    pub x_min_se: Option<f64>,
}

impl PowerLawFit {
    /// The power law is ruled out when `p < 0.05`.
    pub fn rejected(&self) -> Option<bool> {
        self.p_value.map(|p| p < 0.05)
    }
}

/// `zeta = 1 + n / sum ln(x_i / x_min)` over the points `>= x_min`.
pub fn mle_exponent(data: &[f64], x_min: f64) -> Result<f64> {
    if !(x_min > 0.0) {
        return Err(Error::InvalidInput(format!("x_min must be positive, got {x_min}")));
    }
    let (mut m, mut s) = (0usize, 0.0);
    for &x in data.iter().filter(|&&x| x >= x_min) {
        m += 1;
        s += (x / x_min).ln();
    }
    if m == 0 || !(s > 0.0) {
        return Err(Error::Degenerate("no spread above x_min".into()));
    }
    Ok(1.0 + m as f64 / s)
}

/// Sorted data with cached logs and suffix sums of logs.
struct Prepared {
    x: Vec<f64>,
    lnx: Vec<f64>,
    suffix: Vec<f64>,
}

impl Prepared {
    fn new(mut x: Vec<f64>) -> Self {
        x.sort_unstable_by(f64::total_cmp);
        let lnx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let mut suffix = vec![0.0; x.len() + 1];
        for i in (0..x.len()).rev() {
            suffix[i] = suffix[i + 1] + lnx[i];
        }
        Prepared { x, lnx, suffix }
    }

    /// `beta = zeta - 1` for the tail starting at index `i`.
    fn beta(&self, i: usize) -> Option<f64> {
        let m = (self.x.len() - i) as f64;
        let s = self.suffix[i] - m * self.lnx[i];
        (s > 0.0).then(|| m / s)
    }

    /// KS deviation at tail point `j`. Using both `(j + 1) / m` and `j / m`
    /// per point reproduces the tie-aware supremum exactly.
    fn deviation(&self, i: usize, beta: f64, j: usize) -> f64 {
        let m = (self.x.len() - i) as f64;
        let p = self.model_cdf(i, beta, j);
        let r = (j - i) as f64;
        ((r + 1.0) / m - p).max(p - r / m)
    }

    /// Max deviation over the tail indices yielded by `js`, stopping once it
    /// exceeds `cutoff`. Returns the value and where it occurred; any such
    /// value is a lower bound on the KS distance.
    fn max_over<I: Iterator<Item = usize>>(&self, i: usize, beta: f64, js: I, cutoff: f64) -> (f64, usize) {
        let (mut d, mut at) = (0.0, i);
        for j in js {
            let v = self.deviation(i, beta, j);
            if v > d {
                (d, at) = (v, j);
                if d > cutoff {
                    break;
                }
            }
        }
        (d, at)
    }

    fn model_cdf(&self, i: usize, beta: f64, j: usize) -> f64 {
        1.0 - (-beta * (self.lnx[j] - self.lnx[i])).exp()
    }

    /// KS distance, abandoning as soon as it provably exceeds `cutoff`.
    ///
    /// `hot` holds where recent candidates were refuted (neighbouring
    /// candidates share data, so their worst points often coincide) and is
    /// probed first. The exact maximum then comes from branch and bound over
    /// index intervals: both CDFs are monotone, so the deviation inside
    /// `(a, b)` is at most `max(r_b / m - P_a, P_b - (r_a + 1) / m)`, and
    /// intervals whose bound cannot beat the running maximum are skipped.
    fn ks(&self, i: usize, beta: f64, cutoff: f64, hot: &[usize]) -> (f64, usize) {
        let n = self.x.len();
        let m = (n - i) as f64;
        let (mut d, mut at) = self.max_over(i, beta, hot.iter().copied().filter(|&j| j >= i && j < n), cutoff);
        if d > cutoff {
            return (d, at);
        }
        let dev = |j: usize, p: f64| {
            let r = (j - i) as f64;
            ((r + 1.0) / m - p).max(p - r / m)
        };
        let step = (n - i).div_ceil(GRID).max(1);
        let mut stack: Vec<(usize, f64, usize, f64)> = Vec::with_capacity(GRID + 64);
        let mut prev: Option<(usize, f64)> = None;
        let mut j = i;
        loop {
            let p = self.model_cdf(i, beta, j);
            let v = dev(j, p);
            if v > d {
                (d, at) = (v, j);
                if d > cutoff {
                    return (d, at);
                }
            }
            if let Some((a, pa)) = prev {
                stack.push((a, pa, j, p));
            }
            prev = Some((j, p));
            if j == n - 1 {
                break;
            }
            j = (j + step).min(n - 1);
        }
        while let Some((a, pa, b, pb)) = stack.pop() {
            if b - a <= 1 {
                continue;
            }
            let (ra, rb) = ((a - i) as f64, (b - i) as f64);
            if (rb / m - pa).max(pb - (ra + 1.0) / m) <= d {
                continue;
            }
            if b - a <= LEAF {
                for j in a + 1..b {
                    let v = dev(j, self.model_cdf(i, beta, j));
                    if v > d {
                        (d, at) = (v, j);
                        if d > cutoff {
                            return (d, at);
                        }
                    }
                }
                continue;
            }
            let mid = a + (b - a) / 2;
            let pm = self.model_cdf(i, beta, mid);
            let v = dev(mid, pm);
            if v > d {
                (d, at) = (v, mid);
                if d > cutoff {
                    return (d, at);
                }
            }
            stack.push((a, pa, mid, pm));
            stack.push((mid, pm, b, pb));
        }
        (d, at)
    }

    /// Minimum-KS search over distinct candidate `x_min` values.
    ///
    /// A coarse set of candidates is evaluated exactly to seed the best
    /// distance. Every candidate is then scanned in index order with that
    /// distance as cutoff, so most are refuted after a few probes. A tail of
    /// `m` points has distance at least `1 / m`, which prunes short tails
    /// for free. The result equals the exhaustive search, ties going to the
    /// smaller `x_min`.
    fn search(&self) -> Result<(usize, f64, f64)> {
        let n = self.x.len();
        if n < MIN_TAIL {
            return Err(Error::InsufficientData(format!(
                "power-law fit needs at least {MIN_TAIL} points, got {n}"
            )));
        }
        let cands: Vec<(usize, f64)> = (0..=n - MIN_TAIL)
            .filter(|&i| i == 0 || self.x[i] != self.x[i - 1])
            .filter_map(|i| self.beta(i).map(|b| (i, b)))
            .collect();
        if cands.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no x_min candidate leaves {MIN_TAIL} distinct tail points"
            )));
        }
        let better = |best: Option<(usize, f64, f64)>, i: usize, d: f64| match best {
            None => true,
            Some((bi, _, bd)) => d < bd || (d == bd && i < bi),
        };
        let mut best: Option<(usize, f64, f64)> = None;
        let stride = cands.len().div_ceil(SEEDS).max(1);
        for &(i, beta) in cands.iter().step_by(stride) {
            let (d, _) = self.ks(i, beta, f64::INFINITY, &[]);
            if better(best, i, d) {
                best = Some((i, beta, d));
            }
        }
        let mut hot = [usize::MAX; HOT];
        let mut next_hot = 0;
        for &(i, beta) in &cands {
            let cutoff = best.map_or(f64::INFINITY, |b| b.2);
            if 1.0 / (n - i) as f64 > cutoff {
                break;
            }
            let (d, at) = self.ks(i, beta, cutoff, &hot);
            if d > cutoff {
                if !hot.contains(&at) {
                    hot[next_hot] = at;
                    next_hot = (next_hot + 1) % HOT;
                }
                continue;
            }
            if better(best, i, d) {
                best = Some((i, beta, d));
            }
        }
        Ok(best.expect("at least one candidate"))
    }
}

fn check_data(data: &[f64]) -> Result<()> {
    if let Some(v) = data.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidInput(format!("power-law data must be positive, got {v}")));
    }
    Ok(())
}

fn fit_prepared(p: &Prepared) -> Result<PowerLawFit> {
    let (i, beta, ks) = p.search()?;
    Ok(PowerLawFit {
        zeta: 1.0 + beta,
        x_min: p.x[i],
        n: p.x.len(),
        n_tail: p.x.len() - i,
        ks,
        p_value: None,
        n_synth: 0,
        low_synth_warning: false,
        zeta_se: None,
        x_min_se: None,
    })
}

/// Fit `x_min` by minimum KS distance and `zeta` by continuous MLE.
pub fn fit_power_law(data: &[f64]) -> Result<PowerLawFit> {
    check_data(data)?;
    fit_prepared(&Prepared::new(data.to_vec()))
}

fn synth_rng(seed: u64, tag: u64, k: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag, k as u64]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub p_value: f64,
    pub n_synth: usize,
    /// Synthetic sets whose refit failed; excluded from the p-value.
    pub n_failed: usize,
    pub d_observed: f64,
    pub low_synth_warning: bool,
}

/// Semi-parametric bootstrap p-value: each synthetic set draws body points
/// from the empirical values below `x_min` and tail points from the fitted
/// law, is refitted from scratch, and `p` is the share of synthetic KS
/// distances exceeding the observed one.
pub fn power_law_gof(data: &[f64], fit: &PowerLawFit, n_synth: usize, seed: u64) -> Result<GofResult> {
    check_data(data)?;
    if n_synth == 0 {
        return Err(Error::InvalidInput("goodness of fit needs synthetic sets".into()));
    }
    let body: Vec<f64> = data.iter().copied().filter(|&x| x < fit.x_min).collect();
    let n = data.len();
    let p_tail = fit.n_tail as f64 / n as f64;
    let inv = -1.0 / (fit.zeta - 1.0);
    let ds: Vec<Option<f64>> = (0..n_synth)
        .into_par_iter()
        .map(|k| {
            let mut rng = synth_rng(seed, GOF_TAG, k);
            let sample: Vec<f64> = (0..n)
                .map(|_| {
                    if body.is_empty() || rng.random::<f64>() < p_tail {
                        let u: f64 = rng.random();
                        fit.x_min * (1.0 - u).powf(inv)
                    } else {
                        body[rng.random_range(0..body.len())]
                    }
                })
                .collect();
            fit_prepared(&Prepared::new(sample)).ok().map(|f| f.ks)
        })
        .collect();
    let valid: Vec<f64> = ds.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::Degenerate("every synthetic refit failed".into()));
    }
    let exceed = valid.iter().filter(|&&d| d > fit.ks).count();
    Ok(GofResult {
        p_value: exceed as f64 / valid.len() as f64,
        n_synth,
        n_failed: n_synth - valid.len(),
        d_observed: fit.ks,
        low_synth_warning: n_synth < 100,
    })
}

/// Standard errors of `(zeta, x_min)` from refits of resamples drawn with
/// replacement.
pub fn power_law_bootstrap(data: &[f64], n_resamples: usize, seed: u64) -> Result<(f64, f64)> {
    check_data(data)?;
    let fits: Vec<(f64, f64)> = (0..n_resamples)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = synth_rng(seed, BOOT_TAG, k);
            let sample: Vec<f64> = (0..data.len())
                .map(|_| data[rng.random_range(0..data.len())])
                .collect();
            fit_prepared(&Prepared::new(sample)).ok().map(|f| (f.zeta, f.x_min))
        })
        .collect();
    if fits.len() < 2 {
        return Err(Error::InsufficientData("too few successful bootstrap refits".into()));
    }
    let sd = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    Ok((
        sd(fits.iter().map(|f| f.0).collect()),
        sd(fits.iter().map(|f| f.1).collect()),
    ))
}

/// Fit plus goodness of fit and bootstrap uncertainty.
pub fn power_law_analysis(data: &[f64], n_synth: usize, n_boot: usize, seed: u64) -> Result<PowerLawFit> {
    let mut fit = fit_power_law(data)?;
    if n_synth > 0 {
        let g = power_law_gof(data, &fit, n_synth, seed)?;
        fit.p_value = Some(g.p_value);
        fit.n_synth = n_synth;
        fit.low_synth_warning = g.low_synth_warning;
    }
    if n_boot > 0 {
        if let Ok((zs, xs)) = power_law_bootstrap(data, n_boot, seed) {
            fit.zeta_se = Some(zs);
            fit.x_min_se = Some(xs);
        }
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn pareto(zeta: f64, x_min: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| x_min * (1.0 - rng.random::<f64>()).powf(-1.0 / (zeta - 1.0)))
            .collect()
    }

    fn exhaustive(data: &[f64]) -> (f64, f64) {
        let p = Prepared::new(data.to_vec());
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=p.x.len() - MIN_TAIL {
            if i > 0 && p.x[i] == p.x[i - 1] {
                continue;
            }
            if let Some(beta) = p.beta(i) {
                let (d, _) = p.max_over(i, beta, i..p.x.len(), f64::INFINITY);
                if d < best.0 {
                    best = (d, p.x[i]);
                }
            }
        }
        best
    }

    #[test]
    fn closed_form_exponent() {
        assert!((mle_exponent(&[E; 4], 1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_exponent() {
        let x = pareto(2.5, 1.0, 10_000, 1);
        let f = fit_power_law(&x).unwrap();
        assert!((f.zeta - 2.5).abs() < 0.1, "{f:?}");
        assert!(f.x_min < 1.5);
    }

    #[test]
    fn pruned_search_matches_exhaustive() {
        for seed in 0..5 {
            let mut x = pareto(2.2, 1.0, 1500, seed);
            x.extend((0..500).map(|i| 0.2 + i as f64 / 700.0));
            let tied: Vec<f64> = x.iter().map(|v| (v * 4.0).round().max(1.0)).collect();
            let expo: Vec<f64> = x.iter().map(|v| 1.0 + v.ln().abs()).collect();
            for data in [&x, &tied, &expo] {
                let f = fit_power_law(data).unwrap();
                let (d, xm) = exhaustive(data);
                assert_eq!(f.ks, d);
                assert_eq!(f.x_min, xm);
            }
        }
    }

    #[test]
    fn joint_rescaling_leaves_exponent() {
        let x = pareto(3.0, 1.0, 2000, 3);
        let y: Vec<f64> = x.iter().map(|v| v * 7.0).collect();
        let (a, b) = (fit_power_law(&x).unwrap(), fit_power_law(&y).unwrap());
        assert!((a.zeta - b.zeta).abs() < 1e-9);
        assert!((a.x_min * 7.0 - b.x_min).abs() < 1e-9);
    }

    #[test]
    fn gof_accepts_own_model() {
        let x = pareto(2.5, 1.0, 2000, 9);
        let f = fit_power_law(&x).unwrap();
        let g = power_law_gof(&x, &f, 100, 1).unwrap();
        assert!(g.p_value >= 0.05, "{g:?}");
    }

    #[test]
    fn exponential_tail_fits_steep_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e: Vec<f64> = (0..3000).map(|_| 1.0 - (1.0 - rng.random::<f64>()).ln()).collect();
        assert!(fit_power_law(&e).unwrap().zeta > 4.0);
    }

    #[test]
    fn tied_counts_are_rejected() {
        use rand_distr::{Distribution, Poisson};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pois = Poisson::new(150.0).unwrap();
        let x: Vec<f64> = (0..504).map(|_| pois.sample(&mut rng)).collect();
        let f = fit_power_law(&x).unwrap();
        assert!(power_law_gof(&x, &f, 200, 1).unwrap().p_value < 0.05);
    }

    #[test]
    fn gof_is_deterministic_and_flags_few_sets() {
        let x = pareto(2.5, 1.0, 500, 4);
        let f = fit_power_law(&x).unwrap();
        let a = power_law_gof(&x, &f, 20, 7).unwrap();
        assert_eq!(a, power_law_gof(&x, &f, 20, 7).unwrap());
        assert!(a.low_synth_warning);
    }

    #[test]
    fn too_small_sample_is_an_error() {
        assert!(fit_power_law(&[1.0; 10]).is_err());
        assert!(fit_power_law(&[1.0; 100]).is_err());
        assert!(fit_power_law(&[-1.0, 2.0]).is_err());
    }
}
