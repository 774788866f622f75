//! Posted-price market: buyer ensembles, revenue curves, and episodes.
//!
//! An `Instance` posts one price to N independent buyers; the item sells
//! iff the highest bid reaches the price. Only the binary sale outcome is
//! observable, never the bids.

use std::collections::HashMap;
use std::io::Write;
use std::sync::OnceLock;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::{standard_uniform, PiecewiseDistribution};
use crate::learners::Learner;

/// Grid size used by the monopoly-price search when none is given.
pub const MONOPOLY_GRID: usize = 100_000;

/// Revenue ties within this tolerance resolve to the smallest price.
const TIE_TOL: f64 = 1e-12;

/// Failures in regret accounting.
#[derive(Debug, thiserror::Error)]
pub enum MarketError {
    #[error("episode was recorded on `{log_label}` but regret was requested against `{instance_label}`")]
    InstanceMismatch { log_label: String, instance_label: String },
}

/// An ordered ensemble of buyer distributions facing a single posted price.
#[derive(Debug, Clone)]
pub struct Instance {
    label: String,
    buyers: Vec<PiecewiseDistribution>,
    monopoly: OnceLock<(f64, f64)>,
}

impl Instance {
    pub fn new(label: impl Into<String>, buyers: Vec<PiecewiseDistribution>) -> Self {
        assert!(!buyers.is_empty(), "an instance needs at least one buyer");
        Instance { label: label.into(), buyers, monopoly: OnceLock::new() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn buyers(&self) -> &[PiecewiseDistribution] {
        &self.buyers
    }

    /// CDF of the highest bid: product of the buyers' left-continuous CDFs.
    pub fn product_cdf(&self, x: f64) -> f64 {
        self.buyers.iter().map(|b| b.cdf_at(x)).product()
    }

    /// Probability that posting `p` sells: 1 - product_cdf(p). Bids equal
    /// to the price buy, so atoms at `p` count toward a sale.
    pub fn sale_probability(&self, p: f64) -> f64 {
        1.0 - self.product_cdf(p)
    }

    /// Expected per-round revenue p * Pr[sale at p].
    pub fn revenue_at(&self, p: f64) -> f64 {
        p * self.sale_probability(p)
    }

    /// Maximizes the revenue curve on a uniform grid of `points + 1` prices
    /// over [0, 1], augmented with every buyer breakpoint and its two
    /// 1e-9 side probes. Ties within 1e-12 resolve to the smallest price.
    pub fn monopoly_price_with(&self, points: usize) -> (f64, f64) {
        let mut prices: Vec<f64> = (0..=points).map(|i| i as f64 / points as f64).collect();
        for b in &self.buyers {
            for k in b.knots() {
                for p in [k - 1e-9, k, k + 1e-9] {
                    if (0.0..=1.0).contains(&p) {
                        prices.push(p);
                    }
                }
            }
        }
        prices.sort_by(f64::total_cmp);
        prices.dedup();
        let revenues: Vec<f64> = prices.iter().map(|&p| self.revenue_at(p)).collect();
        let best = revenues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (p, r) in prices.iter().zip(&revenues) {
            if *r >= best - TIE_TOL {
                return (*p, *r);
            }
        }
        unreachable!("grid is non-empty");
    }

    /// Cached monopoly price and revenue at the default grid size.
    pub fn monopoly_price(&self) -> (f64, f64) {
        *self.monopoly.get_or_init(|| self.monopoly_price_with(MONOPOLY_GRID))
    }

    /// Posts a price using one uniform draw against the product CDF.
    /// Returns (sold, revenue).
    pub fn post_price(&self, price: f64, rng: &mut dyn RngCore) -> (bool, f64) {
        let sold = standard_uniform(rng) >= self.product_cdf(price);
        (sold, if sold { price } else { 0.0 })
    }

    /// Posts a price by sampling every buyer's bid individually; the item
    /// sells iff some bid reaches the price. Distributionally identical to
    /// `post_price` but consumes one draw per buyer.
    pub fn post_price_per_buyer(&self, price: f64, rng: &mut dyn RngCore) -> (bool, f64) {
        let mut sold = false;
        for b in &self.buyers {
            sold |= b.sample(rng) >= price;
        }
        (sold, if sold { price } else { 0.0 })
    }
}

/// One recorded round of an episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Round {
    pub t: u64,
    pub price: f64,
    pub sold: bool,
    pub revenue: f64,
}

/// Full transcript of a pricing episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub learner_label: String,
    pub instance_label: String,
    pub horizon: u64,
    pub seed: u64,
    /// Rounds whose proposed price fell outside [0, 1] and was clamped.
    pub clamped_rounds: u64,
    pub rounds: Vec<Round>,
}

impl EpisodeLog {
    pub fn total_revenue(&self) -> f64 {
        self.rounds.iter().map(|r| r.revenue).sum()
    }

    /// Writes the transcript as CSV with header `t,price,sold,revenue`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,price,sold,revenue")?;
        for r in &self.rounds {
            writeln!(w, "{},{},{},{}", r.t, r.price, r.sold as u8, r.revenue)?;
        }
        Ok(())
    }
}

/// Pseudo-regret compares against the instance's fixed-price optimum;
/// realized regret replaces expected revenue with the sampled outcomes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegretBreakdown {
    pub pseudo: f64,
    pub realized: f64,
}

/// Regret of a recorded episode against the instance it was recorded on.
/// The instance label must match the log; silently scoring a transcript
/// against a different market would be meaningless.
pub fn pseudo_regret(log: &EpisodeLog, inst: &Instance) -> Result<RegretBreakdown, MarketError> {
    if log.instance_label != inst.label() {
        return Err(MarketError::InstanceMismatch {
            log_label: log.instance_label.clone(),
            instance_label: inst.label().to_string(),
        });
    }
    let (_, opt) = inst.monopoly_price();
    let mut pseudo = 0.0;
    let mut realized = 0.0;
    for r in &log.rounds {
        pseudo += opt - inst.revenue_at(r.price);
        realized += opt - r.revenue;
    }
    Ok(RegretBreakdown { pseudo, realized })
}

/// Runs a learner for `horizon` rounds and records the full transcript.
/// All randomness flows from the seed through one ChaCha8 stream.
pub fn run_episode(
    inst: &Instance,
    learner: &mut dyn Learner,
    horizon: u64,
    seed: u64,
) -> EpisodeLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rounds = Vec::with_capacity(horizon as usize);
    let mut clamped_rounds = 0;
    for t in 1..=horizon {
        let proposed = learner.choose(&mut rng);
        let price = proposed.clamp(0.0, 1.0);
        if price != proposed {
            clamped_rounds += 1;
        }
        let (sold, revenue) = inst.post_price(price, &mut rng);
        learner.update(price, sold);
        rounds.push(Round { t, price, sold, revenue });
    }
    EpisodeLog {
        learner_label: learner.label(),
        instance_label: inst.label().to_string(),
        horizon,
        seed,
        clamped_rounds,
        rounds,
    }
}

/// Pull statistics for one distinct price of an episode.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PriceStat {
    pub price: f64,
    pub pulls: u64,
    pub sales: u64,
}

/// Aggregated episode outcome without the per-round transcript.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub horizon: u64,
    pub total_revenue: f64,
    pub pseudo_regret: f64,
    pub realized_regret: f64,
    pub clamped_rounds: u64,
    /// Distinct posted prices in ascending order.
    pub prices: Vec<PriceStat>,
}

impl EpisodeStats {
    /// Number of rounds whose price fell in [lo, hi).
    pub fn pulls_in(&self, lo: f64, hi: f64) -> u64 {
        self.prices
            .iter()
            .filter(|s| s.price >= lo && s.price < hi)
            .map(|s| s.pulls)
            .sum()
    }
}

/// Runs a learner for `horizon` rounds keeping only per-price aggregates.
/// Suitable for large-horizon sweeps where transcripts would not fit.
pub fn run_episode_stats(
    inst: &Instance,
    learner: &mut dyn Learner,
    horizon: u64,
    seed: u64,
) -> EpisodeStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_price: HashMap<u64, (u64, u64)> = HashMap::new();
    let mut total_revenue = 0.0;
    let mut clamped_rounds = 0;
    for _ in 0..horizon {
        let proposed = learner.choose(&mut rng);
        let price = proposed.clamp(0.0, 1.0);
        if price != proposed {
            clamped_rounds += 1;
        }
        let (sold, revenue) = inst.post_price(price, &mut rng);
        learner.update(price, sold);
        total_revenue += revenue;
        let entry = by_price.entry(price.to_bits()).or_insert((0, 0));
        entry.0 += 1;
        entry.1 += sold as u64;
    }
    let mut prices: Vec<PriceStat> = by_price
        .into_iter()
        .map(|(bits, (pulls, sales))| PriceStat { price: f64::from_bits(bits), pulls, sales })
        .collect();
    prices.sort_by(|a, b| a.price.total_cmp(&b.price));
    let (_, opt) = inst.monopoly_price();
    let expected: f64 = prices.iter().map(|s| s.pulls as f64 * inst.revenue_at(s.price)).sum();
    EpisodeStats {
        horizon,
        total_revenue,
        pseudo_regret: horizon as f64 * opt - expected,
        realized_regret: horizon as f64 * opt - total_revenue,
        clamped_rounds,
        prices,
    }
}
