//! Bandit pricing learners over finite price grids.
//!
//! A learner repeatedly proposes a price and consumes the binary sale
//! outcome; the per-round reward is `price * sold`. All learners here
//! operate on a fixed arm set of prices in (0, 1].

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distribution::standard_uniform;
use crate::market::{EpisodeLog, Instance};

/// Configuration and consistency failures surfaced by learner construction
/// and episode post-processing.
#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("bad learner configuration: {0}")]
    BadConfig(String),
    #[error("pull counts sum to {total} but the episode ran {horizon} rounds")]
    PullCountMismatch { total: u64, horizon: u64 },
    #[error("intervals [{a_lo}, {a_hi}) and [{b_lo}, {b_hi}) overlap")]
    OverlappingIntervals { a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64 },
}

/// Sequential price-selection contract.
///
/// `choose` proposes a price for the next round; `update` feeds back the
/// posted price and whether the item sold. The number of updates always
/// equals the sum of `pull_counts`.
pub trait Learner {
    fn choose(&mut self, rng: &mut dyn RngCore) -> f64;
    fn update(&mut self, price: f64, sold: bool);
    fn arm_prices(&self) -> &[f64];
    fn pull_counts(&self) -> &[u64];
    fn label(&self) -> String;
}

/// The uniform price grid {1/K, 2/K, ..., 1}.
pub fn arm_grid(k: usize) -> Result<Vec<f64>, LearnerError> {
    if k == 0 {
        return Err(LearnerError::BadConfig("arm grid needs k >= 1".into()));
    }
    Ok((1..=k).map(|i| i as f64 / k as f64).collect())
}

fn arm_index(arms: &[f64], price: f64) -> usize {
    arms.iter()
        .position(|&a| a == price)
        .expect("update price must be one of the learner's arms")
}

/// UCB1 over a fixed arm set: exploration bonus sqrt(2 ln t / n_i),
/// round-robin initialization, smallest index wins ties.
pub struct Ucb1 {
    arms: Vec<f64>,
    counts: Vec<u64>,
    reward_sums: Vec<f64>,
    updates: u64,
    last: Option<usize>,
}

/// Builds a UCB1 learner over the given arm prices.
pub fn make_ucb(arms: Vec<f64>) -> Result<Ucb1, LearnerError> {
    if arms.is_empty() {
        return Err(LearnerError::BadConfig("ucb needs at least one arm".into()));
    }
    Ok(Ucb1 {
        counts: vec![0; arms.len()],
        reward_sums: vec![0.0; arms.len()],
        arms,
        updates: 0,
        last: None,
    })
}

impl Learner for Ucb1 {
    fn choose(&mut self, _rng: &mut dyn RngCore) -> f64 {
        let idx = if let Some(i) = self.counts.iter().position(|&n| n == 0) {
            i
        } else {
            let t = (self.updates + 1) as f64;
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for i in 0..self.arms.len() {
                let n = self.counts[i] as f64;
                let score = self.reward_sums[i] / n + (2.0 * t.ln() / n).sqrt();
                if score > best_score {
                    best_score = score;
                    best = i;
                }
            }
            best
        };
        self.last = Some(idx);
        self.arms[idx]
    }

    fn update(&mut self, price: f64, sold: bool) {
        let idx = match self.last {
            Some(i) if self.arms[i] == price => i,
            _ => arm_index(&self.arms, price),
        };
        self.counts[idx] += 1;
        self.reward_sums[idx] += price * (sold as u8 as f64);
        self.updates += 1;
    }

    fn arm_prices(&self) -> &[f64] {
        &self.arms
    }

    fn pull_counts(&self) -> &[u64] {
        &self.counts
    }

    fn label(&self) -> String {
        format!("ucb(K={})", self.arms.len())
    }
}

/// EXP3 with mixing coefficient gamma = K * eta: sampling probabilities
/// (1-gamma) w_i / W + gamma / K, importance-weighted reward estimates,
/// multiplicative weight update exp(eta * rhat).
pub struct Exp3 {
    arms: Vec<f64>,
    weights: Vec<f64>,
    counts: Vec<u64>,
    eta: f64,
    gamma: f64,
    updates: u64,
    last: Option<(usize, f64)>,
}

/// Builds an EXP3 learner; `eta` defaults to sqrt(ln K / (horizon * K)).
pub fn make_exp3(arms: Vec<f64>, horizon: u64, eta: Option<f64>) -> Result<Exp3, LearnerError> {
    if arms.is_empty() {
        return Err(LearnerError::BadConfig("exp3 needs at least one arm".into()));
    }
    if horizon == 0 {
        return Err(LearnerError::BadConfig("exp3 needs horizon >= 1".into()));
    }
    let k = arms.len() as f64;
    let eta = match eta {
        Some(e) if e > 0.0 => e,
        Some(e) => {
            return Err(LearnerError::BadConfig(format!("eta must be positive, got {e}")));
        }
        None => ((k.ln()) / (horizon as f64 * k)).sqrt(),
    };
    let gamma = k * eta;
    if gamma > 1.0 {
        return Err(LearnerError::BadConfig(format!(
            "K * eta = {gamma} exceeds 1; reduce eta"
        )));
    }
    Ok(Exp3 {
        weights: vec![1.0 / k; arms.len()],
        counts: vec![0; arms.len()],
        arms,
        eta,
        gamma,
        updates: 0,
        last: None,
    })
}

impl Exp3 {
    /// Current sampling distribution; sums to 1 up to round-off.
    pub fn probabilities(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        let k = self.arms.len() as f64;
        self.weights
            .iter()
            .map(|w| (1.0 - self.gamma) * w / total + self.gamma / k)
            .collect()
    }
}

impl Learner for Exp3 {
    fn choose(&mut self, rng: &mut dyn RngCore) -> f64 {
        let probs = self.probabilities();
        let u = standard_uniform(rng);
        let mut cum = 0.0;
        let mut idx = self.arms.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            cum += p;
            if u < cum {
                idx = i;
                break;
            }
        }
        self.last = Some((idx, probs[idx]));
        self.arms[idx]
    }

    fn update(&mut self, price: f64, sold: bool) {
        let (idx, prob) = match self.last {
            Some((i, p)) if self.arms[i] == price => (i, p),
            _ => {
                let i = arm_index(&self.arms, price);
                (i, self.probabilities()[i])
            }
        };
        let reward = price * (sold as u8 as f64);
        // eta * reward / prob <= eta * K / gamma = 1, so the factor is <= e.
        self.weights[idx] *= (self.eta * reward / prob).exp();
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
        self.counts[idx] += 1;
        self.updates += 1;
    }

    fn arm_prices(&self) -> &[f64] {
        &self.arms
    }

    fn pull_counts(&self) -> &[u64] {
        &self.counts
    }

    fn label(&self) -> String {
        format!("exp3(K={},eta={})", self.arms.len(), self.eta)
    }
}

/// Always posts the same price.
pub struct ConstantPrice {
    arms: Vec<f64>,
    counts: Vec<u64>,
}

/// Builds a constant-price learner.
pub fn make_constant(price: f64) -> Result<ConstantPrice, LearnerError> {
    if !(price > 0.0 && price <= 1.0) {
        return Err(LearnerError::BadConfig(format!(
            "constant price must lie in (0, 1], got {price}"
        )));
    }
    Ok(ConstantPrice { arms: vec![price], counts: vec![0] })
}

impl Learner for ConstantPrice {
    fn choose(&mut self, _rng: &mut dyn RngCore) -> f64 {
        self.arms[0]
    }

    fn update(&mut self, _price: f64, _sold: bool) {
        self.counts[0] += 1;
    }

    fn arm_prices(&self) -> &[f64] {
        &self.arms
    }

    fn pull_counts(&self) -> &[u64] {
        &self.counts
    }

    fn label(&self) -> String {
        format!("constant(p={})", self.arms[0])
    }
}

/// Cycles through the arm set round-robin, ignoring feedback.
pub struct UniformGrid {
    arms: Vec<f64>,
    counts: Vec<u64>,
    updates: u64,
}

/// Builds a round-robin learner over the given arm prices.
pub fn make_uniform_grid(arms: Vec<f64>) -> Result<UniformGrid, LearnerError> {
    if arms.is_empty() {
        return Err(LearnerError::BadConfig("uniform grid needs at least one arm".into()));
    }
    Ok(UniformGrid { counts: vec![0; arms.len()], arms, updates: 0 })
}

impl Learner for UniformGrid {
    fn choose(&mut self, _rng: &mut dyn RngCore) -> f64 {
        self.arms[(self.updates % self.arms.len() as u64) as usize]
    }

    fn update(&mut self, price: f64, _sold: bool) {
        let idx = arm_index(&self.arms, price);
        self.counts[idx] += 1;
        self.updates += 1;
    }

    fn arm_prices(&self) -> &[f64] {
        &self.arms
    }

    fn pull_counts(&self) -> &[u64] {
        &self.counts
    }

    fn label(&self) -> String {
        format!("uniform-grid(K={})", self.arms.len())
    }
}

/// Which bandit core drives a grid learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreAlgorithm {
    Ucb,
    Exp3,
}

impl std::fmt::Display for CoreAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoreAlgorithm::Ucb => write!(f, "ucb"),
            CoreAlgorithm::Exp3 => write!(f, "exp3"),
        }
    }
}

impl std::str::FromStr for CoreAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ucb" => Ok(CoreAlgorithm::Ucb),
            "exp3" => Ok(CoreAlgorithm::Exp3),
            other => Err(format!("unknown core algorithm `{other}` (expected ucb or exp3)")),
        }
    }
}

/// Builds a boxed core learner of the requested flavor over the arm set.
pub fn make_core(
    arms: Vec<f64>,
    horizon: u64,
    core: CoreAlgorithm,
) -> Result<Box<dyn Learner>, LearnerError> {
    Ok(match core {
        CoreAlgorithm::Ucb => Box::new(make_ucb(arms)?),
        CoreAlgorithm::Exp3 => Box::new(make_exp3(arms, horizon, None)?),
    })
}

/// Smallest k with k^3 >= n.
fn ceil_cbrt(n: u64) -> u64 {
    let mut k = (n as f64).cbrt().round() as u64;
    while k > 0 && (k - 1).pow(3) as u128 >= n as u128 {
        k -= 1;
    }
    while (k as u128).pow(3) < n as u128 {
        k += 1;
    }
    k.max(1)
}

/// A core learner run on the grid {1/K, ..., 1} with K = ceil(T^(1/3)).
pub struct VanillaPricing {
    inner: Box<dyn Learner>,
    label: String,
}

/// Builds the discretized pricing learner for the given horizon (>= 8).
pub fn vanilla_pricing(horizon: u64, core: CoreAlgorithm) -> Result<VanillaPricing, LearnerError> {
    if horizon < 8 {
        return Err(LearnerError::BadConfig(format!(
            "vanilla pricing needs horizon >= 8, got {horizon}"
        )));
    }
    let k = ceil_cbrt(horizon) as usize;
    let inner = make_core(arm_grid(k)?, horizon, core)?;
    let label = format!("vanilla(core={core},K={k})");
    Ok(VanillaPricing { inner, label })
}

impl Learner for VanillaPricing {
    fn choose(&mut self, rng: &mut dyn RngCore) -> f64 {
        self.inner.choose(rng)
    }

    fn update(&mut self, price: f64, sold: bool) {
        self.inner.update(price, sold);
    }

    fn arm_prices(&self) -> &[f64] {
        self.inner.arm_prices()
    }

    fn pull_counts(&self) -> &[u64] {
        self.inner.pull_counts()
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Result of one best-arm identification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FindBestOutcome {
    pub arm_index: usize,
    pub price: f64,
    pub pull_counts: Vec<u64>,
}

/// Runs a core learner for `horizon` rounds against `inst`, then returns
/// arm i with probability pulls_i / horizon.
pub fn find_best(
    arms: &[f64],
    horizon: u64,
    core: CoreAlgorithm,
    inst: &Instance,
    rng: &mut dyn RngCore,
) -> Result<FindBestOutcome, LearnerError> {
    if horizon == 0 {
        return Err(LearnerError::BadConfig("find_best needs horizon >= 1".into()));
    }
    let mut learner = make_core(arms.to_vec(), horizon, core)?;
    for _ in 0..horizon {
        let price = learner.choose(rng);
        let (sold, _) = inst.post_price(price, rng);
        learner.update(price, sold);
    }
    let pull_counts = learner.pull_counts().to_vec();
    let total: u64 = pull_counts.iter().sum();
    if total != horizon {
        return Err(LearnerError::PullCountMismatch { total, horizon });
    }
    let arm_index = sample_proportional(&pull_counts, rng);
    Ok(FindBestOutcome { arm_index, price: arms[arm_index], pull_counts })
}

/// Samples an index with probability counts[i] / sum(counts) from one
/// uniform draw. At least one count must be positive.
pub fn sample_proportional(counts: &[u64], rng: &mut dyn RngCore) -> usize {
    let total: u64 = counts.iter().sum();
    let u = standard_uniform(rng) * total as f64;
    let mut cum = 0.0;
    let mut index = counts.len() - 1;
    for (i, &n) in counts.iter().enumerate() {
        cum += n as f64;
        if u < cum {
            index = i;
            break;
        }
    }
    index
}

/// Counts episode rounds whose price fell in each half-open interval
/// [lo, hi). Intervals must be pairwise disjoint.
pub fn pull_counts_in(
    log: &EpisodeLog,
    intervals: &[(f64, f64)],
) -> Result<Vec<u64>, LearnerError> {
    for &(lo, hi) in intervals {
        if lo >= hi || lo.is_nan() || hi.is_nan() {
            return Err(LearnerError::BadConfig(format!(
                "interval [{lo}, {hi}) is empty or inverted"
            )));
        }
    }
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_by(|&a, &b| intervals[a].0.total_cmp(&intervals[b].0));
    for pair in order.windows(2) {
        let (a_lo, a_hi) = intervals[pair[0]];
        let (b_lo, b_hi) = intervals[pair[1]];
        if a_hi > b_lo {
            return Err(LearnerError::OverlappingIntervals { a_lo, a_hi, b_lo, b_hi });
        }
    }
    let mut counts = vec![0u64; intervals.len()];
    for round in &log.rounds {
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            if round.price >= lo && round.price < hi {
                counts[i] += 1;
                break;
            }
        }
    }
    Ok(counts)
}

/// Serializable learner configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LearnerSpec {
    Ucb {
        arms: usize,
    },
    Exp3 {
        arms: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
    },
    Vanilla {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        core: Option<CoreAlgorithm>,
    },
    Constant {
        price: f64,
    },
    UniformGrid {
        arms: usize,
    },
}

impl LearnerSpec {
    /// Instantiates the configured learner for an episode of `horizon` rounds.
    pub fn build(&self, horizon: u64) -> Result<Box<dyn Learner>, LearnerError> {
        Ok(match *self {
            LearnerSpec::Ucb { arms } => Box::new(make_ucb(arm_grid(arms)?)?),
            LearnerSpec::Exp3 { arms, eta } => Box::new(make_exp3(arm_grid(arms)?, horizon, eta)?),
            LearnerSpec::Vanilla { core } => {
                Box::new(vanilla_pricing(horizon, core.unwrap_or(CoreAlgorithm::Exp3))?)
            }
            LearnerSpec::Constant { price } => Box::new(make_constant(price)?),
            LearnerSpec::UniformGrid { arms } => Box::new(make_uniform_grid(arm_grid(arms)?)?),
        })
    }
}
