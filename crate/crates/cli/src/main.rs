//! Command-line front end for the pricing laboratory.
//!
//! Subcommands: `validate`, `inspect`, `export-family`, and `run
//! {regret|identify|findbest|episode}`. Structured results go to `--out`
//! (or stdout) as JSON or CSV; progress summaries go to stderr. Identical
//! configuration and seed produce byte-identical output files.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pricelab::hard_instances::{
    three_mhr_3_base, three_regular_3_base, two_mhr_25_base, two_regular_25_base,
};
use pricelab::{
    check_mhr, check_regularity, find_best, identification_experiment, pseudo_regret,
    regret_scaling_experiment, run_episode, CoreAlgorithm, DistributionSpec, FamilySpec,
    FamilyTag, GridSpec, HardFamily, IdStrategy, Instance, InstanceSpec, LearnerSpec,
    PiecewiseDistribution, Segment, SegmentForm, ValidationReport,
};

#[derive(Parser)]
#[command(
    name = "pricelab",
    about = "Simulation laboratory for repeated uniform pricing with binary feedback",
    version
)]
struct Cli {
    /// Master seed; every randomized command derives its streams from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads for parallel experiments (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Grid resolution: validator points (default 10000) or curve samples
    /// (default 1000).
    #[arg(long, global = true)]
    grid: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run shape validators over a hard family or a distribution spec file.
    Validate(ValidateArgs),
    /// Sample CDF and revenue curves as CSV.
    Inspect(InspectArgs),
    /// Serialize a hard family, members and all, to JSON.
    ExportFamily(ExportFamilyArgs),
    /// Run episodes and experiments.
    #[command(subcommand)]
    Run(RunCommand),
}

#[derive(Args)]
struct ValidateArgs {
    /// Hard family tag (two-regular-25, three-regular-3, two-regular-3,
    /// two-mhr-25, three-mhr-3).
    #[arg(long, conflicts_with = "spec")]
    family: Option<String>,

    /// Perturbation size for --family.
    #[arg(long, requires = "family")]
    eps: Option<f64>,

    /// Distribution or instance spec file (JSON) to validate instead.
    #[arg(long)]
    spec: Option<PathBuf>,

    /// Which shape property to check. `auto` follows the family's class;
    /// spec files must name one explicitly.
    #[arg(long, value_enum, default_value_t = CheckKind::Auto)]
    check: CheckKind,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Auto,
    Regular,
    Mhr,
}

#[derive(Args)]
struct InspectArgs {
    /// Registry instance name (two-regular-base, three-regular-base,
    /// two-mhr-base, three-mhr-base, uniform).
    #[arg(long, conflicts_with_all = ["family", "spec"])]
    instance: Option<String>,

    /// Hard family tag; curves are for --member against the family base.
    #[arg(long, requires = "eps")]
    family: Option<String>,

    /// Perturbation size for --family.
    #[arg(long)]
    eps: Option<f64>,

    /// Member index within --family (0 = base).
    #[arg(long, default_value_t = 0)]
    member: usize,

    /// Instance spec file (JSON) to inspect instead.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct ExportFamilyArgs {
    /// Hard family tag.
    #[arg(long)]
    family: String,

    /// Perturbation size.
    #[arg(long)]
    eps: f64,
}

#[derive(Subcommand)]
enum RunCommand {
    /// Fit pseudo-regret against horizon on a log-log grid.
    Regret(RegretArgs),
    /// Estimate identification rates and KL budgets over a hard family.
    Identify(IdentifyArgs),
    /// Repeat the pull-proportional best-arm routine and tally its choices.
    Findbest(FindbestArgs),
    /// Record a single pricing episode as a CSV transcript.
    Episode(EpisodeArgs),
}

#[derive(Args)]
struct RegretArgs {
    #[arg(long)]
    instance: Option<String>,

    /// Instance spec file (JSON) instead of a registry name.
    #[arg(long)]
    spec: Option<PathBuf>,

    /// Learner: `vanilla`, `vanilla:ucb`, `ucb:K`, `exp3:K`, `constant:P`,
    /// `uniform:K`, or inline JSON.
    #[arg(long, default_value = "vanilla")]
    learner: String,

    /// Horizon grid: geometric `4096..1048576x2` or comma list.
    #[arg(long, default_value = "4096..1048576x2")]
    horizons: String,

    /// Independent episodes per horizon.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    family: String,

    #[arg(long)]
    eps: f64,

    /// uniform-grid, find-best-ucb, or find-best-exp3.
    #[arg(long, default_value = "find-best-ucb")]
    strategy: String,

    /// Pricing rounds per identification session.
    #[arg(long, default_value_t = 100_000)]
    budget: u64,

    /// Sessions per instance.
    #[arg(long, default_value_t = 200)]
    trials: u64,
}

#[derive(Args)]
struct FindbestArgs {
    #[arg(long)]
    instance: Option<String>,

    #[arg(long)]
    spec: Option<PathBuf>,

    /// Arm count for the uniform grid, or an explicit comma list of prices.
    #[arg(long, default_value = "10")]
    arms: String,

    /// Bandit core: ucb or exp3.
    #[arg(long, default_value = "ucb")]
    core: String,

    /// Rounds per trial.
    #[arg(long, alias = "T", default_value_t = 5000)]
    horizon: u64,

    #[arg(long, default_value_t = 1)]
    trials: u64,

    /// When set, also report how often the returned arm came within
    /// `epsilon` of the monopoly revenue.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct EpisodeArgs {
    #[arg(long)]
    instance: Option<String>,

    #[arg(long)]
    spec: Option<PathBuf>,

    #[arg(long, default_value = "vanilla")]
    learner: String,

    #[arg(long, alias = "T", default_value_t = 4096)]
    horizon: u64,
}

/// Terminal failure carrying the process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn run_failure(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn main() {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // Ignore the error when a pool already exists (tests call main twice).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    match dispatch(&cli) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::exit(i32::from(f.code));
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, Failure> {
    match &cli.command {
        Command::Validate(args) => cmd_validate(cli, args),
        Command::Inspect(args) => cmd_inspect(cli, args).map(|()| 0),
        Command::ExportFamily(args) => cmd_export_family(cli, args).map(|()| 0),
        Command::Run(RunCommand::Regret(args)) => cmd_regret(cli, args).map(|()| 0),
        Command::Run(RunCommand::Identify(args)) => cmd_identify(cli, args).map(|()| 0),
        Command::Run(RunCommand::Findbest(args)) => cmd_findbest(cli, args).map(|()| 0),
        Command::Run(RunCommand::Episode(args)) => cmd_episode(cli, args).map(|()| 0),
    }
}

fn emit(out: Option<&PathBuf>, data: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, data)
            .map_err(|e| run_failure(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

fn parse_family(tag: &str, eps: f64) -> Result<HardFamily, Failure> {
    let tag = FamilyTag::from_str(tag).map_err(config_error)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(config_error(format!("eps must be a positive number, got {eps}")));
    }
    tag.build(eps).map_err(|e| config_error(format!("cannot build {tag} at eps={eps}: {e}")))
}

fn registry_instance(name: &str) -> Result<Instance, Failure> {
    match name {
        "two-regular-base" => Ok(two_regular_25_base()),
        "three-regular-base" => Ok(three_regular_3_base()),
        "two-mhr-base" => Ok(two_mhr_25_base()),
        "three-mhr-base" => Ok(three_mhr_3_base()),
        "uniform" => {
            let buyer = PiecewiseDistribution::new(
                "uniform-buyer",
                vec![Segment::new(0.0, 1.0, SegmentForm::Linear { intercept: 0.0, slope: 1.0 })],
                vec![],
            )
            .expect("constant-density unit buyer");
            Ok(Instance::new("uniform", vec![buyer]))
        }
        other => Err(config_error(format!(
            "unknown instance `{other}` (expected one of two-regular-base, \
             three-regular-base, two-mhr-base, three-mhr-base, uniform)"
        ))),
    }
}

/// Reads an instance from `--instance`/`--spec`, exactly one of which must
/// be present. Spec files hold an instance or a single distribution.
fn resolve_instance(
    instance: Option<&String>,
    spec: Option<&PathBuf>,
) -> Result<Instance, Failure> {
    match (instance, spec) {
        (Some(name), None) => registry_instance(name),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error(format!("reading {}: {e}", path.display())))?;
            let parsed: InstanceSpec = serde_json::from_str(&text)
                .or_else(|_| {
                    serde_json::from_str::<DistributionSpec>(&text).map(|d| InstanceSpec {
                        label: d.label.clone(),
                        buyers: vec![d],
                    })
                })
                .map_err(|e| config_error(format!("parsing {}: {e}", path.display())))?;
            parsed
                .build()
                .map_err(|e| run_failure(format!("spec {} fails its audit: {e}", path.display())))
        }
        _ => Err(config_error("exactly one of --instance and --spec is required")),
    }
}

fn parse_learner(text: &str) -> Result<LearnerSpec, Failure> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed)
            .map_err(|e| config_error(format!("learner JSON: {e}")));
    }
    let mut parts = trimmed.split(':');
    let head = parts.next().unwrap_or_default();
    let param = parts.next();
    if parts.next().is_some() {
        return Err(config_error(format!("learner `{trimmed}` has too many `:` fields")));
    }
    let arm_count = |p: Option<&str>| -> Result<usize, Failure> {
        p.ok_or_else(|| config_error(format!("learner `{head}` needs an arm count, e.g. {head}:16")))?
            .parse()
            .map_err(|e| config_error(format!("arm count in `{trimmed}`: {e}")))
    };
    match head {
        "vanilla" => {
            let core = match param {
                None => None,
                Some(c) => Some(CoreAlgorithm::from_str(c).map_err(config_error)?),
            };
            Ok(LearnerSpec::Vanilla { core })
        }
        "ucb" => Ok(LearnerSpec::Ucb { arms: arm_count(param)? }),
        "exp3" => Ok(LearnerSpec::Exp3 { arms: arm_count(param)?, eta: None }),
        "uniform" => Ok(LearnerSpec::UniformGrid { arms: arm_count(param)? }),
        "constant" => {
            let price: f64 = param
                .ok_or_else(|| config_error("learner `constant` needs a price, e.g. constant:0.5"))?
                .parse()
                .map_err(|e| config_error(format!("price in `{trimmed}`: {e}")))?;
            Ok(LearnerSpec::Constant { price })
        }
        other => Err(config_error(format!(
            "unknown learner `{other}` (expected vanilla, ucb, exp3, uniform, constant, or JSON)"
        ))),
    }
}

/// Parses `start..endxfactor` geometric grids and comma lists. Geometric
/// grids must land on `end` exactly; silent truncation would skew fits.
fn parse_horizons(text: &str) -> Result<Vec<u64>, Failure> {
    if let Some((range, factor)) = text.split_once('x') {
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| config_error(format!("horizon range `{text}` needs start..end")))?;
        let start: u64 =
            a.parse().map_err(|e| config_error(format!("horizon start `{a}`: {e}")))?;
        let end: u64 = b.parse().map_err(|e| config_error(format!("horizon end `{b}`: {e}")))?;
        let factor: u64 =
            factor.parse().map_err(|e| config_error(format!("horizon factor: {e}")))?;
        if start == 0 || factor < 2 || end < start {
            return Err(config_error(format!(
                "horizon grid `{text}` needs 0 < start <= end and factor >= 2"
            )));
        }
        let mut grid = Vec::new();
        let mut t = start;
        while t < end {
            grid.push(t);
            t = t
                .checked_mul(factor)
                .ok_or_else(|| config_error(format!("horizon grid `{text}` overflows u64")))?;
        }
        if t != end {
            return Err(config_error(format!(
                "horizon grid `{text}` does not land on {end} (reached {t})"
            )));
        }
        grid.push(end);
        Ok(grid)
    } else {
        text.split(',')
            .map(|p| {
                p.trim().parse().map_err(|e| config_error(format!("horizon `{p}`: {e}")))
            })
            .collect()
    }
}

fn parse_arms(text: &str) -> Result<Vec<f64>, Failure> {
    let arms: Vec<f64> = if text.contains(',') || text.contains('.') {
        text.split(',')
            .map(|p| p.trim().parse().map_err(|e| config_error(format!("arm `{p}`: {e}"))))
            .collect::<Result<_, _>>()?
    } else {
        let k: usize =
            text.parse().map_err(|e| config_error(format!("arm count `{text}`: {e}")))?;
        pricelab::arm_grid(k).map_err(|e| config_error(e.to_string()))?
    };
    if arms.is_empty() {
        return Err(config_error("at least one arm is required"));
    }
    for &a in &arms {
        if !(a > 0.0 && a <= 1.0) {
            return Err(config_error(format!("arm price {a} is outside (0, 1]")));
        }
    }
    Ok(arms)
}

#[derive(Serialize)]
struct BuyerReport {
    instance: String,
    report: ValidationReport,
}

#[derive(Serialize)]
struct ValidateOutput {
    source: String,
    check: String,
    grid_points: usize,
    all_passed: bool,
    reports: Vec<BuyerReport>,
}

fn cmd_validate(cli: &Cli, args: &ValidateArgs) -> Result<i32, Failure> {
    let grid = GridSpec { points: cli.grid.unwrap_or(10_000), ..GridSpec::default() };
    let (source, instances): (String, Vec<Instance>) = match (&args.family, &args.spec) {
        (Some(tag), None) => {
            let eps = args
                .eps
                .ok_or_else(|| config_error("--family needs --eps"))?;
            let family = parse_family(tag, eps)?;
            let mut all = vec![family.base.clone()];
            all.extend(family.members.iter().map(|m| m.instance.clone()));
            (format!("{}@eps={eps}", family.family_tag), all)
        }
        (None, Some(path)) => {
            let inst = resolve_instance(None, Some(path))?;
            if args.check == CheckKind::Auto {
                return Err(config_error(
                    "--spec needs an explicit --check regular or --check mhr",
                ));
            }
            (format!("spec:{}", path.display()), vec![inst])
        }
        _ => return Err(config_error("exactly one of --family and --spec is required")),
    };
    let check = match (args.check, &args.family) {
        (CheckKind::Regular, _) => CheckKind::Regular,
        (CheckKind::Mhr, _) => CheckKind::Mhr,
        (CheckKind::Auto, Some(tag)) => {
            match FamilyTag::from_str(tag).map_err(config_error)?.shape_class() {
                pricelab::ShapeCheck::Regular => CheckKind::Regular,
                pricelab::ShapeCheck::Mhr => CheckKind::Mhr,
            }
        }
        (CheckKind::Auto, None) => unreachable!("spec path already rejected auto"),
    };
    let mut reports = Vec::new();
    let mut all_passed = true;
    for inst in &instances {
        for buyer in inst.buyers() {
            let report = match check {
                CheckKind::Regular => check_regularity(buyer, grid),
                CheckKind::Mhr => check_mhr(buyer, grid),
                CheckKind::Auto => unreachable!(),
            }
            .map_err(|e| run_failure(format!("validator on {}: {e}", buyer.label())))?;
            if !report.passed {
                all_passed = false;
                let site = if report.knot_monotone { report.argmin } else { report.worst_knot };
                eprintln!(
                    "FAIL {} / {}: min margin {:?} at x = {:?}",
                    inst.label(),
                    buyer.label(),
                    report.min_margin,
                    site
                );
            }
            reports.push(BuyerReport { instance: inst.label().to_string(), report });
        }
    }
    let output = ValidateOutput {
        source,
        check: if check == CheckKind::Mhr { "mhr".into() } else { "regular".into() },
        grid_points: grid.points,
        all_passed,
        reports,
    };
    let mut text = serde_json::to_string_pretty(&output).expect("report serializes");
    text.push('\n');
    emit(cli.out.as_ref(), &text)?;
    eprintln!(
        "validated {} distributions from {}: {}",
        output.reports.len(),
        output.source,
        if all_passed { "all passed" } else { "FAILED" }
    );
    Ok(if all_passed { 0 } else { 1 })
}

fn cmd_inspect(cli: &Cli, args: &InspectArgs) -> Result<(), Failure> {
    let (target, base): (Instance, Option<Instance>) =
        match (&args.instance, &args.family, &args.spec) {
            (Some(name), None, None) => (registry_instance(name)?, None),
            (None, Some(tag), None) => {
                let eps = args.eps.ok_or_else(|| config_error("--family needs --eps"))?;
                let family = parse_family(tag, eps)?;
                if args.member > family.k() {
                    return Err(config_error(format!(
                        "member {} out of range (family has {} members)",
                        args.member,
                        family.k()
                    )));
                }
                let target = family.instance(args.member).clone();
                (target, Some(family.base))
            }
            (None, None, Some(path)) => (resolve_instance(None, Some(path))?, None),
            _ => {
                return Err(config_error(
                    "exactly one of --instance, --family, --spec is required",
                ))
            }
        };
    let samples = cli.grid.unwrap_or(1000);
    if samples == 0 {
        return Err(config_error("--grid must be at least 1"));
    }
    let mut csv = String::new();
    csv.push('x');
    for i in 1..=target.buyers().len() {
        let _ = write!(csv, ",F{i}");
    }
    csv.push_str(",product_F,revenue,delta_F,delta_r\n");
    for i in 0..=samples {
        let x = i as f64 / samples as f64;
        let _ = write!(csv, "{x}");
        for buyer in target.buyers() {
            let _ = write!(csv, ",{}", buyer.cdf_at(x));
        }
        let product = target.product_cdf(x);
        let revenue = target.revenue_at(x);
        // delta_F sums buyer-level CDF shifts (base minus member); families
        // perturb a single buyer, so it reads as that buyer's bump height.
        let (delta_f, delta_r) = match &base {
            Some(b) => {
                let shift: f64 = b
                    .buyers()
                    .iter()
                    .zip(target.buyers())
                    .map(|(b0, b1)| b0.cdf_at(x) - b1.cdf_at(x))
                    .sum();
                (shift, revenue - b.revenue_at(x))
            }
            None => (0.0, 0.0),
        };
        let _ = writeln!(csv, ",{product},{revenue},{delta_f},{delta_r}");
    }
    emit(cli.out.as_ref(), &csv)?;
    eprintln!("sampled {} rows from {}", samples + 1, target.label());
    Ok(())
}

fn cmd_export_family(cli: &Cli, args: &ExportFamilyArgs) -> Result<(), Failure> {
    let family = parse_family(&args.family, args.eps)?;
    let spec = FamilySpec::from_family(&family);
    let mut text = serde_json::to_string_pretty(&spec).expect("family serializes");
    text.push('\n');
    emit(cli.out.as_ref(), &text)?;
    eprintln!("exported {} with {} members", args.family, family.k());
    Ok(())
}

fn cmd_regret(cli: &Cli, args: &RegretArgs) -> Result<(), Failure> {
    let instance = resolve_instance(args.instance.as_ref(), args.spec.as_ref())?;
    let learner = parse_learner(&args.learner)?;
    let horizons = parse_horizons(&args.horizons)?;
    let fit = regret_scaling_experiment(&instance, &learner, &horizons, args.seeds, cli.seed)
        .map_err(|e| run_failure(e.to_string()))?;
    let mut text = serde_json::to_string_pretty(&fit).expect("fit serializes");
    text.push('\n');
    emit(cli.out.as_ref(), &text)?;
    eprintln!(
        "fit over {} horizons x {} seeds: slope {:.4}, intercept {:.4}{}",
        fit.horizons.len(),
        args.seeds,
        fit.slope,
        fit.intercept,
        if fit.degenerate { " (degenerate)" } else { "" }
    );
    Ok(())
}

fn cmd_identify(cli: &Cli, args: &IdentifyArgs) -> Result<(), Failure> {
    let family = parse_family(&args.family, args.eps)?;
    let strategy = IdStrategy::from_str(&args.strategy).map_err(config_error)?;
    let result =
        identification_experiment(&family, strategy, args.budget, args.trials, cli.seed)
            .map_err(|e| run_failure(e.to_string()))?;
    let mut text = serde_json::to_string_pretty(&result).expect("result serializes");
    text.push('\n');
    emit(cli.out.as_ref(), &text)?;
    eprintln!(
        "identified over K={} members, {} trials each: {} KL-budget violations",
        family.k(),
        args.trials,
        result.violations()
    );
    Ok(())
}

#[derive(Serialize)]
struct FindbestOutput {
    instance: String,
    core: String,
    horizon: u64,
    trials: u64,
    arm_prices: Vec<f64>,
    /// How often each arm was returned across trials.
    chosen_counts: Vec<u64>,
    /// Mean pull counts per arm over the episodes.
    mean_pull_counts: Vec<f64>,
    monopoly_price: f64,
    monopoly_revenue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_optimal_rate: Option<f64>,
}

fn cmd_findbest(cli: &Cli, args: &FindbestArgs) -> Result<(), Failure> {
    use rand::{RngCore, SeedableRng};
    let instance = resolve_instance(args.instance.as_ref(), args.spec.as_ref())?;
    let arms = parse_arms(&args.arms)?;
    let core = CoreAlgorithm::from_str(&args.core).map_err(config_error)?;
    if args.trials == 0 || args.horizon == 0 {
        return Err(config_error("--trials and --horizon must be positive"));
    }
    let mut master = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
    let seeds: Vec<u64> = (0..args.trials).map(|_| master.next_u64()).collect();
    use rayon::prelude::*;
    let outcomes: Vec<_> = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
            find_best(&arms, args.horizon, core, &instance, &mut rng)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| run_failure(e.to_string()))?;
    let mut chosen_counts = vec![0u64; arms.len()];
    let mut pull_totals = vec![0u64; arms.len()];
    for out in &outcomes {
        chosen_counts[out.arm_index] += 1;
        for (t, &n) in pull_totals.iter_mut().zip(&out.pull_counts) {
            *t += n;
        }
    }
    let (monopoly_price, monopoly_revenue) = instance.monopoly_price();
    let epsilon_optimal_rate = args.epsilon.map(|eps| {
        let hits = outcomes
            .iter()
            .filter(|o| instance.revenue_at(o.price) >= monopoly_revenue - eps)
            .count();
        hits as f64 / outcomes.len() as f64
    });
    let output = FindbestOutput {
        instance: instance.label().to_string(),
        core: core.to_string(),
        horizon: args.horizon,
        trials: args.trials,
        arm_prices: arms,
        chosen_counts,
        mean_pull_counts: pull_totals
            .iter()
            .map(|&t| t as f64 / args.trials as f64)
            .collect(),
        monopoly_price,
        monopoly_revenue,
        epsilon: args.epsilon,
        epsilon_optimal_rate,
    };
    let mut text = serde_json::to_string_pretty(&output).expect("summary serializes");
    text.push('\n');
    emit(cli.out.as_ref(), &text)?;
    let best = output
        .chosen_counts
        .iter()
        .enumerate()
        .max_by_key(|(_, &c)| c)
        .map(|(i, _)| i)
        .unwrap_or(0);
    eprintln!(
        "findbest over {} trials: modal arm {} (price {}){}",
        args.trials,
        best,
        output.arm_prices[best],
        match epsilon_optimal_rate {
            Some(r) => format!(", epsilon-optimal rate {r:.3}"),
            None => String::new(),
        }
    );
    Ok(())
}

fn cmd_episode(cli: &Cli, args: &EpisodeArgs) -> Result<(), Failure> {
    let instance = resolve_instance(args.instance.as_ref(), args.spec.as_ref())?;
    let learner_spec = parse_learner(&args.learner)?;
    let mut learner =
        learner_spec.build(args.horizon).map_err(|e| config_error(e.to_string()))?;
    let log = run_episode(&instance, learner.as_mut(), args.horizon, cli.seed);
    let mut csv = Vec::new();
    log.write_csv(&mut csv).map_err(|e| run_failure(e.to_string()))?;
    let csv = String::from_utf8(csv).expect("transcript is ascii");
    emit(cli.out.as_ref(), &csv)?;
    let regret = pseudo_regret(&log, &instance).map_err(|e| run_failure(e.to_string()))?;
    eprintln!(
        "episode of {} rounds with {}: revenue {:.3}, pseudo-regret {:.3}",
        args.horizon,
        log.learner_label,
        log.total_revenue(),
        regret.pseudo
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_grammar_round_trips() {
        assert_eq!(
            parse_horizons("4096..1048576x2").unwrap(),
            (12..=20).map(|e| 1u64 << e).collect::<Vec<_>>()
        );
        assert_eq!(parse_horizons("100,200,400").unwrap(), vec![100, 200, 400]);
        assert!(parse_horizons("100..300x2").is_err());
        assert!(parse_horizons("0..8x2").is_err());
        assert!(parse_horizons("8..16x1").is_err());
    }

    #[test]
    fn learner_shorthand_covers_the_grammar() {
        assert!(matches!(parse_learner("vanilla").unwrap(), LearnerSpec::Vanilla { core: None }));
        assert!(matches!(
            parse_learner("vanilla:ucb").unwrap(),
            LearnerSpec::Vanilla { core: Some(CoreAlgorithm::Ucb) }
        ));
        assert!(matches!(parse_learner("ucb:16").unwrap(), LearnerSpec::Ucb { arms: 16 }));
        assert!(matches!(
            parse_learner(r#"{"type":"constant","price":0.5}"#).unwrap(),
            LearnerSpec::Constant { .. }
        ));
        assert!(parse_learner("ucb").is_err());
        assert!(parse_learner("sarsa:3").is_err());
    }

    #[test]
    fn arm_grammar_separates_counts_from_prices() {
        assert_eq!(parse_arms("4").unwrap(), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_arms("0.6,0.7").unwrap(), vec![0.6, 0.7]);
        assert!(parse_arms("0").is_err());
        assert!(parse_arms("1.5,0.2").is_err());
    }
}
