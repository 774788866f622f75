//! Information-theoretic accounting and experiment drivers.
//!
//! The hard families promise that distinguishing a member from the base
//! costs a quantifiable number of informative queries. This module holds
//! the Bernoulli divergence that prices those queries, the interval
//! distinguisher that converts a price guess into a member guess, the
//! reduction that turns any low-regret learner into such a guesser, and
//! two Monte Carlo drivers that measure how implemented learners spend
//! their query budget against the families.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::standard_uniform;
use crate::hard_instances::{FamilyTag, HardFamily};
use crate::learners::{find_best, make_uniform_grid, CoreAlgorithm, LearnerError, LearnerSpec};
use crate::market::{run_episode, run_episode_stats, Instance, MarketError};

/// Mean pseudo-regrets below this are treated as exactly zero for fitting:
/// they are dominated by accumulated round-off, and their logarithms would
/// otherwise swing the slope arbitrarily.
const REGRET_NOISE_FLOOR: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("precondition violated: {0}")]
    BadInput(String),
    #[error(
        "required budget {t_required:.3e} exceeds the exactly representable integer range; \
         pass a budget override for desk-scale runs"
    )]
    BudgetOverflow { t_required: f64 },
    #[error("batch divergence bound failed: lhs {lhs} < rhs {rhs}")]
    BoundViolation { lhs: f64, rhs: f64 },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Market(#[from] MarketError),
}

/// Divergence d(x, y) between Bernoulli(x) and Bernoulli(y) in nats, with
/// the conventions 0 ln 0 = 0 and d = +inf when y is degenerate but x
/// is not on the same side.
pub fn bernoulli_kl(x: f64, y: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "x = {x} is not a probability");
    assert!((0.0..=1.0).contains(&y), "y = {y} is not a probability");
    if x == y {
        return 0.0;
    }
    let mut d = 0.0;
    if x > 0.0 {
        d += x * (x / y).ln();
    }
    if x < 1.0 {
        d += (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln();
    }
    d
}

/// Batched divergence bound: when every y_i is at least b and the mean a
/// of xs stays below b, the terms with x_i < b alone carry at least
/// n * d(a, b) nats. Returns (lhs, rhs) after asserting lhs >= rhs.
pub fn kl_batch_bound(xs: &[f64], b: f64, ys: &[f64]) -> Result<(f64, f64), AnalysisError> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(AnalysisError::BadInput(format!(
            "xs and ys must be non-empty and equal length, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys.iter()).any(|p| !(0.0..=1.0).contains(p)) {
        return Err(AnalysisError::BadInput("entries must be probabilities".into()));
    }
    let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(b > 0.0 && b <= y_min) {
        return Err(AnalysisError::BadInput(format!(
            "need 0 < b <= min(ys), got b = {b}, min(ys) = {y_min}"
        )));
    }
    let a = xs.iter().sum::<f64>() / xs.len() as f64;
    if a >= b {
        return Err(AnalysisError::BadInput(format!(
            "need mean(xs) < b, got mean = {a}, b = {b}"
        )));
    }
    let lhs: f64 = xs
        .iter()
        .zip(ys)
        .filter(|(x, _)| **x < b)
        .map(|(x, y)| bernoulli_kl(*x, *y))
        .sum();
    let rhs = xs.len() as f64 * bernoulli_kl(a, b);
    if lhs < rhs - 1e-12 {
        return Err(AnalysisError::BoundViolation { lhs, rhs });
    }
    Ok((lhs, rhs))
}

/// Member index (1-based) of the informative interval containing p_hat,
/// or 0 when p_hat avoids all of them. Intervals are half-open [lo, hi),
/// so a shared boundary belongs to the interval on its right.
pub fn interval_distinguisher(p_hat: f64, family: &HardFamily) -> usize {
    for (i, member) in family.members.iter().enumerate() {
        let (lo, hi) = member.interval;
        if lo <= p_hat && p_hat < hi {
            return i + 1;
        }
    }
    0
}

/// One run of the regret-to-distinction reduction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionOutcome {
    /// Budget demanded by the closed-form guarantee for this (c, alpha, eps).
    pub t_required: f64,
    /// Budget actually played (the override, if one was given).
    pub t_used: u64,
    /// Sampled member guess; 0 means the residual non-informative mass.
    pub guess: usize,
    pub interval_pulls: Vec<u64>,
    pub residual_pulls: u64,
}

/// Runs a learner with regret guarantee c * T^alpha on one family member
/// for T' = (25000 c / eps)^(1/(1-alpha)) rounds, then samples a price
/// from the empirical play distribution and reads off its interval. A
/// low-regret learner must concentrate play on the member's interval, so
/// the sampled index identifies the member with constant probability.
///
/// The closed-form T' is astronomical at any interesting eps; the formula
/// is still evaluated and reported, but desk-scale runs supply
/// budget_override.
pub fn regret_to_distinguisher(
    learner: &LearnerSpec,
    family: &HardFamily,
    member: usize,
    c: f64,
    alpha: f64,
    budget_override: Option<u64>,
    seed: u64,
) -> Result<ReductionOutcome, AnalysisError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnalysisError::BadInput(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if c <= 0.0 || c.is_nan() {
        return Err(AnalysisError::BadInput(format!("c must be positive, got {c}")));
    }
    if member == 0 || member > family.k() {
        return Err(AnalysisError::BadInput(format!(
            "member must lie in 1..={}, got {member}",
            family.k()
        )));
    }
    let t_required = (25_000.0 * c / family.eps).powf(1.0 / (1.0 - alpha));
    let t_used = match budget_override {
        Some(t) => t,
        None => {
            if !t_required.is_finite() || t_required > 9.0e15 {
                return Err(AnalysisError::BudgetOverflow { t_required });
            }
            t_required.ceil() as u64
        }
    };
    let mut algo = learner.build(t_used)?;
    let inst = &family.members[member - 1].instance;
    let log = run_episode(inst, algo.as_mut(), t_used, seed);
    let interval_pulls = crate::learners::pull_counts_in(&log, &family.intervals())?;
    let informative: u64 = interval_pulls.iter().sum();
    let residual_pulls = t_used - informative;

    // Sample an interval with probability T_i / T; the residual mass maps
    // to the base guess 0.
    let mut sampler = ChaCha8Rng::seed_from_u64(seed ^ 0x500d_f00d_0a11_0c8a);
    let draw = standard_uniform(&mut sampler) * t_used as f64;
    let mut cumulative = 0.0;
    let mut guess = 0;
    for (i, pulls) in interval_pulls.iter().enumerate() {
        cumulative += *pulls as f64;
        if draw < cumulative {
            guess = i + 1;
            break;
        }
    }
    Ok(ReductionOutcome { t_required, t_used, guess, interval_pulls, residual_pulls })
}

/// Query strategies the identification experiment knows how to drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdStrategy {
    /// Successive arm elimination by UCB over the family's salient prices.
    FindBestUcb,
    /// The same arm set driven by EXP3.
    FindBestExp3,
    /// Non-adaptive round-robin over the same arm set.
    UniformGrid,
}

impl std::fmt::Display for IdStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            IdStrategy::FindBestUcb => "find-best-ucb",
            IdStrategy::FindBestExp3 => "find-best-exp3",
            IdStrategy::UniformGrid => "uniform-grid",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for IdStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "find-best-ucb" => Ok(IdStrategy::FindBestUcb),
            "find-best-exp3" => Ok(IdStrategy::FindBestExp3),
            "uniform-grid" => Ok(IdStrategy::UniformGrid),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// Per-member outcome of an identification experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberIdentification {
    /// 1-based member index.
    pub member: usize,
    /// Fraction of member-trials whose guess hit this member.
    pub success_rate: f64,
    /// Mean pulls landing in this member's interval when facing the base.
    pub mean_pulls_base: f64,
    /// Mean pulls landing in this member's interval when facing the member.
    pub mean_pulls_member: f64,
    /// Fraction of base-trials that guessed this member.
    pub hit_rate_base: f64,
    /// Divergence budget eps^2 * (mean base pulls + 3 standard errors).
    pub kl_budget: f64,
    /// Conservative lower bound on d(base hit rate, member hit rate):
    /// the divergence between the nearest corners of three-sigma
    /// confidence boxes, zero when the boxes overlap.
    pub kl_lower_bound: f64,
    /// Identification beat the divergence budget: kl_budget < kl_lower_bound.
    pub violation: bool,
}

/// Outcome of an identification experiment across one family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub family_tag: FamilyTag,
    pub eps: f64,
    pub strategy: String,
    pub budget: u64,
    pub trials: u64,
    pub members: Vec<MemberIdentification>,
}

impl IdentificationResult {
    pub fn violations(&self) -> usize {
        self.members.iter().filter(|m| m.violation).count()
    }
}

/// (guess, per-interval pulls) for one identification trial.
fn identification_trial(
    strategy: IdStrategy,
    arms: &[f64],
    budget: u64,
    inst: &Instance,
    family: &HardFamily,
    seed: u64,
) -> Result<(usize, Vec<u64>), AnalysisError> {
    let (price, pulls) = match strategy {
        IdStrategy::FindBestUcb | IdStrategy::FindBestExp3 => {
            let core = if strategy == IdStrategy::FindBestUcb {
                CoreAlgorithm::Ucb
            } else {
                CoreAlgorithm::Exp3
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let outcome = find_best(arms, budget, core, inst, &mut rng)?;
            (outcome.price, outcome.pull_counts)
        }
        IdStrategy::UniformGrid => {
            let mut learner = make_uniform_grid(arms.to_vec())?;
            let log = run_episode(inst, &mut learner, budget, seed);
            // Guess the arm with the best empirical mean revenue.
            let mut revenue = vec![0.0f64; arms.len()];
            let mut pulls = vec![0u64; arms.len()];
            for round in &log.rounds {
                let idx = arms
                    .iter()
                    .position(|a| *a == round.price)
                    .expect("uniform grid only plays its own arms");
                revenue[idx] += round.revenue;
                pulls[idx] += 1;
            }
            let best = (0..arms.len())
                .max_by(|&i, &j| {
                    let mi = revenue[i] / pulls[i].max(1) as f64;
                    let mj = revenue[j] / pulls[j].max(1) as f64;
                    mi.total_cmp(&mj)
                })
                .expect("arm list is non-empty");
            (arms[best], pulls)
        }
    };
    let guess = interval_distinguisher(price, family);
    // Arm 0 is the base optimum outside every interval; arm i sits inside
    // interval i, so per-arm pulls are per-interval pulls.
    Ok((guess, pulls[1..].to_vec()))
}

/// Plays `trials` sessions of a query strategy against the base and
/// against every member, guessing a member from each session's final
/// price. Reports per-member success rates, how many queries landed in
/// each informative interval, and whether identification ever beat the
/// divergence budget those queries can pay for: the budget side is
/// inflated by three standard errors and the divergence side is the
/// box lower bound from `MemberIdentification::kl_lower_bound`, so only
/// definitive violations are flagged.
pub fn identification_experiment(
    family: &HardFamily,
    strategy: IdStrategy,
    budget: u64,
    trials: u64,
    seed: u64,
) -> Result<IdentificationResult, AnalysisError> {
    let k = family.k();
    if budget < (k + 1) as u64 {
        return Err(AnalysisError::BadInput(format!(
            "budget {budget} cannot even visit the {} salient arms once",
            k + 1
        )));
    }
    if trials == 0 {
        return Err(AnalysisError::BadInput("trials must be positive".into()));
    }
    let mut arms = vec![family.base.monopoly_price().0];
    arms.extend(family.members.iter().map(|m| m.bump_price));

    // Instance 0 is the base, instance i the i-th member; seeds are drawn
    // up front so trials can run in parallel deterministically.
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(usize, u64)> = (0..=k)
        .flat_map(|inst_idx| (0..trials).map(move |_| inst_idx))
        .map(|inst_idx| (inst_idx, seeder.next_u64()))
        .collect();
    let outcomes: Vec<(usize, usize, Vec<u64>)> = jobs
        .par_iter()
        .map(|&(inst_idx, trial_seed)| {
            let inst = family.instance(inst_idx);
            identification_trial(strategy, &arms, budget, inst, family, trial_seed)
                .map(|(guess, pulls)| (inst_idx, guess, pulls))
        })
        .collect::<Result<_, _>>()?;

    // hit[i][j]: fraction of instance-i trials guessing member j+1.
    let tf = trials as f64;
    let mut hits = vec![vec![0.0f64; k]; k + 1];
    let mut pull_sums = vec![vec![0.0f64; k]; k + 1];
    let mut pull_sumsq = vec![vec![0.0f64; k]; k + 1];
    for (inst_idx, guess, pulls) in &outcomes {
        if *guess > 0 {
            hits[*inst_idx][*guess - 1] += 1.0 / tf;
        }
        for (j, p) in pulls.iter().enumerate() {
            pull_sums[*inst_idx][j] += *p as f64;
            pull_sumsq[*inst_idx][j] += (*p as f64) * (*p as f64);
        }
    }

    let eps = family.eps;
    let members = (1..=k)
        .map(|i| {
            let mean_base = pull_sums[0][i - 1] / tf;
            let var_base = (pull_sumsq[0][i - 1] / tf - mean_base * mean_base).max(0.0);
            let se_base = (var_base / tf).sqrt();
            let kl_budget = eps * eps * (mean_base + 3.0 * se_base);
            let p0 = hits[0][i - 1];
            let pi = hits[i][i - 1];
            let kl_lower_bound = box_kl_lower(p0, pi, trials);
            MemberIdentification {
                member: i,
                success_rate: pi,
                mean_pulls_base: mean_base,
                mean_pulls_member: pull_sums[i][i - 1] / tf,
                hit_rate_base: p0,
                kl_budget,
                kl_lower_bound,
                violation: kl_budget < kl_lower_bound,
            }
        })
        .collect();

    Ok(IdentificationResult {
        family_tag: family.family_tag,
        eps,
        strategy: strategy.to_string(),
        budget,
        trials,
        members,
    })
}

/// Conservative lower bound on d(p, q) from empirical frequencies over n
/// trials: each is widened to a three-sigma binomial box (plus a 3/n term
/// covering the degenerate-frequency case) and the divergence is taken
/// between the nearest corners; overlapping boxes give zero.
fn box_kl_lower(p: f64, q: f64, n: u64) -> f64 {
    let half = |r: f64| 3.0 * (r * (1.0 - r) / n as f64).sqrt() + 3.0 / n as f64;
    let (p_lo, p_hi) = ((p - half(p)).max(0.0), (p + half(p)).min(1.0));
    let (q_lo, q_hi) = ((q - half(q)).max(0.0), (q + half(q)).min(1.0));
    if p_hi >= q_lo && q_hi >= p_lo {
        return 0.0;
    }
    if p_hi < q_lo {
        bernoulli_kl(p_hi, q_lo)
    } else {
        bernoulli_kl(p_lo, q_hi)
    }
}

/// Log-log fit of mean pseudo-regret against horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegretScalingFit {
    pub horizons: Vec<u64>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Fitted exponent of regret growth.
    pub slope: f64,
    /// Fitted ln-regret at ln T = 0.
    pub intercept: f64,
    /// Horizon indices excluded from the fit (regret at or below noise).
    pub excluded: Vec<usize>,
    /// Fewer than two usable horizons remained; slope and intercept are 0.
    pub degenerate: bool,
    /// Per-trial seeds in (horizon-major) order, for replay.
    pub seeds: Vec<u64>,
}

/// Measures pseudo-regret growth of a learner on one instance: runs
/// `seeds_per_horizon` episodes at every horizon and fits ln(mean regret)
/// against ln T by least squares. Horizons whose mean regret sits at the
/// round-off floor are excluded from the fit and reported.
pub fn regret_scaling_experiment(
    inst: &Instance,
    learner: &LearnerSpec,
    horizons: &[u64],
    seeds_per_horizon: u64,
    seed: u64,
) -> Result<RegretScalingFit, AnalysisError> {
    if horizons.len() < 3 {
        return Err(AnalysisError::BadInput(format!(
            "need at least 3 horizons, got {}",
            horizons.len()
        )));
    }
    if horizons.iter().any(|h| *h < 64) {
        return Err(AnalysisError::BadInput("every horizon must be at least 64".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::BadInput("horizons must be strictly increasing".into()));
    }
    if seeds_per_horizon == 0 {
        return Err(AnalysisError::BadInput("seeds_per_horizon must be positive".into()));
    }

    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..horizons.len() as u64 * seeds_per_horizon)
        .map(|_| seeder.next_u64())
        .collect();
    let regrets: Vec<f64> = seeds
        .par_iter()
        .enumerate()
        .map(|(idx, trial_seed)| {
            let horizon = horizons[idx / seeds_per_horizon as usize];
            let mut algo = learner.build(horizon)?;
            let stats = run_episode_stats(inst, algo.as_mut(), horizon, *trial_seed);
            Ok(stats.pseudo_regret)
        })
        .collect::<Result<_, AnalysisError>>()?;

    let n = seeds_per_horizon as f64;
    let mut means = Vec::with_capacity(horizons.len());
    let mut stderrs = Vec::with_capacity(horizons.len());
    for chunk in regrets.chunks(seeds_per_horizon as usize) {
        let mean = chunk.iter().sum::<f64>() / n;
        let var = chunk.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
            / (n - 1.0).max(1.0);
        means.push(mean);
        stderrs.push((var / n).sqrt());
    }

    let excluded: Vec<usize> = (0..means.len())
        .filter(|&i| means[i] <= REGRET_NOISE_FLOOR)
        .collect();
    let points: Vec<(f64, f64)> = (0..means.len())
        .filter(|i| !excluded.contains(i))
        .map(|i| ((horizons[i] as f64).ln(), means[i].ln()))
        .collect();

    let (slope, intercept, degenerate) = if points.len() < 2 {
        (0.0, 0.0, true)
    } else {
        let m = points.len() as f64;
        let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
        let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        let slope = sxy / sxx;
        (slope, mean_y - slope * mean_x, false)
    };

    Ok(RegretScalingFit {
        horizons: horizons.to_vec(),
        means,
        stderrs,
        slope,
        intercept,
        excluded,
        degenerate,
        seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hard_instances::{three_regular_3_family, two_regular_3_base};
    use approx::assert_abs_diff_eq;

    #[test]
    fn divergence_pins() {
        assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
        assert_eq!(bernoulli_kl(0.0, 0.0), 0.0);
        assert_eq!(bernoulli_kl(1.0, 1.0), 0.0);
        assert_abs_diff_eq!(bernoulli_kl(0.5, 0.95), 0.8303656034108251, epsilon = 1e-12);
        assert_abs_diff_eq!(bernoulli_kl(0.0, 0.5), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_eq!(bernoulli_kl(0.3, 0.0), f64::INFINITY);
        assert_eq!(bernoulli_kl(0.3, 1.0), f64::INFINITY);
        // The distinction budget constant: d(0.5, 0.95) >= 1/2.
        assert!(bernoulli_kl(0.5, 0.95) >= 0.5);
    }

    #[test]
    fn divergence_dominates_squared_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = standard_uniform(&mut rng);
            let y = 0.001 + 0.998 * standard_uniform(&mut rng);
            assert!(bernoulli_kl(x, y) >= 2.0 * (x - y) * (x - y) - 1e-12);
        }
    }

    #[test]
    fn batch_bound_is_tight_on_equal_inputs() {
        let xs = [0.2; 5];
        let ys = [0.5; 5];
        let (lhs, rhs) = kl_batch_bound(&xs, 0.5, &ys).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        assert_abs_diff_eq!(lhs, 5.0 * bernoulli_kl(0.2, 0.5), epsilon = 1e-12);
    }

    #[test]
    fn batch_bound_single_pair() {
        let (lhs, rhs) = kl_batch_bound(&[0.1], 0.5, &[0.9]).unwrap();
        assert_abs_diff_eq!(lhs, bernoulli_kl(0.1, 0.9), epsilon = 1e-12);
        assert_abs_diff_eq!(rhs, bernoulli_kl(0.1, 0.5), epsilon = 1e-12);
        assert!(lhs >= rhs);
        assert_abs_diff_eq!(lhs, 1.7577796618689758, epsilon = 1e-12);
        assert_abs_diff_eq!(rhs, 0.3680642071684971, epsilon = 1e-12);
    }

    #[test]
    fn batch_bound_rejects_bad_preconditions() {
        assert!(kl_batch_bound(&[0.2], 0.5, &[0.4]).is_err());
        assert!(kl_batch_bound(&[0.6], 0.5, &[0.9]).is_err());
        assert!(kl_batch_bound(&[0.2, 0.3], 0.5, &[0.9]).is_err());
        assert!(kl_batch_bound(&[], 0.5, &[]).is_err());
    }

    #[test]
    fn distinguisher_reads_intervals_half_open() {
        let fam = three_regular_3_family(0.01).unwrap();
        for (i, mem) in fam.members.iter().enumerate() {
            assert_eq!(interval_distinguisher(mem.bump_price, &fam), i + 1);
            // Shared boundary belongs to the right interval.
            assert_eq!(interval_distinguisher(mem.interval.0, &fam), i + 1);
        }
        assert_eq!(interval_distinguisher(0.2, &fam), 0);
        assert_eq!(interval_distinguisher(0.9, &fam), 0);
        let last_hi = fam.members.last().unwrap().interval.1;
        assert_eq!(interval_distinguisher(last_hi, &fam), 0);
    }

    #[test]
    fn reduction_budget_formula_overflows_without_override() {
        let fam = three_regular_3_family(0.01).unwrap();
        let spec = LearnerSpec::Vanilla { core: Some(CoreAlgorithm::Ucb) };
        let err =
            regret_to_distinguisher(&spec, &fam, 1, 1.0, 2.0 / 3.0, None, 7).unwrap_err();
        match err {
            AnalysisError::BudgetOverflow { t_required } => {
                // (2.5e6)^3 = 1.5625e19.
                assert_abs_diff_eq!(t_required, 1.5625e19, epsilon = 1e6);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn reduction_follows_a_pinned_learner() {
        let fam = three_regular_3_family(0.01).unwrap();
        // A constant learner parked on member 3's bump price always
        // samples interval 3.
        let spec = LearnerSpec::Constant { price: fam.members[2].bump_price };
        for seed in 0..5 {
            let out =
                regret_to_distinguisher(&spec, &fam, 3, 1.0, 0.5, Some(500), seed).unwrap();
            assert_eq!(out.guess, 3);
            assert_eq!(out.interval_pulls[2], 500);
            assert_eq!(out.residual_pulls, 0);
            assert_abs_diff_eq!(out.t_required, 2_500_000.0 * 2_500_000.0, epsilon = 1.0);
        }
    }

    #[test]
    fn reduction_rejects_bad_parameters() {
        let fam = three_regular_3_family(0.01).unwrap();
        let spec = LearnerSpec::Vanilla { core: None };
        assert!(regret_to_distinguisher(&spec, &fam, 0, 1.0, 0.5, Some(100), 1).is_err());
        assert!(regret_to_distinguisher(&spec, &fam, 99, 1.0, 0.5, Some(100), 1).is_err());
        assert!(regret_to_distinguisher(&spec, &fam, 1, 1.0, 1.0, Some(100), 1).is_err());
        assert!(regret_to_distinguisher(&spec, &fam, 1, 0.0, 0.5, Some(100), 1).is_err());
    }

    #[test]
    fn identification_flags_nothing_for_a_blind_strategy() {
        // Uniform play cannot beat the divergence budget; with a tiny
        // budget the hit rates under base and member agree within bars.
        let fam = three_regular_3_family(0.05).unwrap();
        let res =
            identification_experiment(&fam, IdStrategy::UniformGrid, 300, 40, 17).unwrap();
        assert_eq!(res.violations(), 0);
        for m in &res.members {
            assert!(m.mean_pulls_base * fam.k() as f64 <= 300.0);
            assert!((0.0..=1.0).contains(&m.success_rate));
        }
    }

    #[test]
    fn regret_scaling_flags_zero_regret_as_degenerate() {
        let base = two_regular_3_base();
        let optimal = base.monopoly_price().0;
        let spec = LearnerSpec::Constant { price: optimal };
        let fit = regret_scaling_experiment(&base, &spec, &[64, 128, 256], 3, 5).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.excluded, vec![0, 1, 2]);
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn regret_scaling_sees_linear_growth_for_a_fixed_bad_price() {
        let base = two_regular_3_base();
        // A constant suboptimal price pays a fixed gap every round.
        let spec = LearnerSpec::Constant { price: 0.2 };
        let fit =
            regret_scaling_experiment(&base, &spec, &[64, 256, 1024, 4096], 2, 5).unwrap();
        assert!(!fit.degenerate);
        assert!(fit.excluded.is_empty());
        assert_abs_diff_eq!(fit.slope, 1.0, epsilon = 1e-6);
        // Intercept recovers ln(gap) = ln(1/3 - 0.2).
        assert_abs_diff_eq!(fit.intercept, (1.0 / 3.0 - 0.2f64).ln(), epsilon = 1e-6);
    }

    #[test]
    fn regret_scaling_rejects_bad_grids() {
        let base = two_regular_3_base();
        let spec = LearnerSpec::Constant { price: 0.2 };
        assert!(regret_scaling_experiment(&base, &spec, &[64, 128], 2, 5).is_err());
        assert!(regret_scaling_experiment(&base, &spec, &[32, 64, 128], 2, 5).is_err());
        assert!(regret_scaling_experiment(&base, &spec, &[128, 64, 256], 2, 5).is_err());
        assert!(regret_scaling_experiment(&base, &spec, &[64, 128, 256], 0, 5).is_err());
    }

    #[test]
    fn reduction_beats_chance_with_a_bump_aware_grid() {
        // The K=2 price grid {0.5, 1} puts an arm on member 2's bump, so a
        // low-regret UCB run concentrates there and the sampled guess beats
        // the 1/K = 1/2 blind-guessing rate by a wide margin.
        use rayon::prelude::*;
        let family = FamilyTag::ThreeRegular3.build(0.05).unwrap();
        assert_eq!(family.k(), 2);
        let spec = LearnerSpec::Ucb { arms: 2 };
        let mut master = ChaCha8Rng::seed_from_u64(42);
        let seeds: Vec<u64> = (0..100).map(|_| master.next_u64()).collect();
        let hits: u32 = seeds
            .par_iter()
            .map(|&s| {
                let out =
                    regret_to_distinguisher(&spec, &family, 2, 1.0, 0.5, Some(200_000), s)
                        .unwrap();
                (out.guess == 2) as u32
            })
            .sum();
        assert!(hits > 50, "true member guessed in {hits}/100 trials");
    }
}
