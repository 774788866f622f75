//! Simulation laboratory for repeated uniform pricing with binary demand
//! feedback.
//!
//! A seller posts one price per round to a market of buyers with i.i.d.
//! values; the only feedback is whether the highest value cleared the price.
//! This crate provides the pieces needed to study that loop end to end:
//!
//! * an algebra of piecewise-analytic value distributions with atoms
//!   ([`distribution`], [`forms`]),
//! * numerical validators for regularity and monotone-hazard-rate structure
//!   ([`validate`]),
//! * hard instance families whose members differ on a single narrow price
//!   window ([`hard_instances`]),
//! * the market simulator and monopoly-price machinery ([`market`]),
//! * bandit-style pricing learners ([`learners`]),
//! * information-theoretic budget checks and regret-scaling experiments
//!   ([`analysis`]),
//! * a JSON interchange format for distributions ([`distspec`]).

pub mod analysis;
pub mod distribution;
pub mod distspec;
pub mod forms;
pub mod hard_instances;
pub mod learners;
pub mod market;
pub mod validate;

pub use analysis::{
    bernoulli_kl, identification_experiment, interval_distinguisher, kl_batch_bound,
    regret_scaling_experiment, regret_to_distinguisher, AnalysisError, IdStrategy,
    IdentificationResult, MemberIdentification, ReductionOutcome, RegretScalingFit,
};
pub use distribution::{standard_uniform, Atom, BuildError, PiecewiseDistribution, Segment};
pub use distspec::{Dec, DistributionSpec, FamilySpec, FormSpec, InstanceSpec};
pub use forms::{ExpAffine, Poly, RationalForm, SegmentForm};
pub use hard_instances::{FamilyError, FamilyMember, FamilyTag, HardFamily};
pub use learners::{
    arm_grid, find_best, make_constant, make_exp3, make_ucb, make_uniform_grid, pull_counts_in,
    vanilla_pricing, CoreAlgorithm, FindBestOutcome, Learner, LearnerError, LearnerSpec,
};
pub use market::{
    pseudo_regret, run_episode, run_episode_stats, EpisodeLog, EpisodeStats, Instance,
    MarketError, PriceStat, RegretBreakdown, Round,
};
pub use validate::{check_mhr, check_regularity, GridSpec, ShapeCheck, ValidateError, ValidationReport};
