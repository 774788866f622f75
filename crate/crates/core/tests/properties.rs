//! Corpus-wide shape properties: every distribution the library can
//! construct is audited for CDF sanity, derivative consistency, inverse
//! round trips, class containment, and revenue-curve geometry.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pricelab::hard_instances::{two_mhr_25_base, two_regular_25_base};
use pricelab::{
    arm_grid, bernoulli_kl, check_mhr, check_regularity, make_exp3, FamilyTag, GridSpec,
    Instance, Learner, PiecewiseDistribution, Segment, SegmentForm,
};

/// Every feasible (family, eps) build the acceptance suite exercises.
fn family_builds() -> Vec<(FamilyTag, f64)> {
    vec![
        (FamilyTag::TwoRegular25, 1e-4),
        (FamilyTag::TwoRegular25, 1e-5),
        (FamilyTag::ThreeRegular3, 0.01),
        (FamilyTag::ThreeRegular3, 0.05),
        (FamilyTag::TwoRegular3, 0.01),
        (FamilyTag::TwoRegular3, 1.0 / 30.0),
        (FamilyTag::TwoMhr25, 1e-3),
        (FamilyTag::TwoMhr25, 1e-4),
        (FamilyTag::ThreeMhr3, 0.02),
        (FamilyTag::ThreeMhr3, 0.05),
    ]
}

/// Every distinct buyer distribution across all family builds, plus a
/// plain uniform buyer. Deduplicated by label; shared base buyers appear
/// once.
fn corpus() -> Vec<PiecewiseDistribution> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (tag, eps) in family_builds() {
        let family = tag.build(eps).expect("feasible eps");
        for idx in 0..=family.k() {
            for buyer in family.instance(idx).buyers() {
                if seen.insert(buyer.label().to_string()) {
                    out.push(buyer.clone());
                }
            }
        }
    }
    out.push(uniform_buyer());
    out
}

fn uniform_buyer() -> PiecewiseDistribution {
    PiecewiseDistribution::new(
        "uniform-unit",
        vec![Segment::new(0.0, 1.0, SegmentForm::Linear { intercept: 0.0, slope: 1.0 })],
        vec![],
    )
    .unwrap()
}

/// Interior probe points of a segment, pulled away from both knots.
fn interior_probes(seg: &Segment) -> Vec<f64> {
    [0.15, 0.35, 0.5, 0.65, 0.85]
        .iter()
        .map(|f| seg.lo + f * (seg.hi - seg.lo))
        .collect()
}

#[test]
fn cdf_is_monotone_with_unit_mass_over_the_corpus() {
    for dist in corpus() {
        assert_eq!(dist.cdf_at(0.0), 0.0, "{}: F(0) != 0", dist.label());
        let mut prev = 0.0;
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            let f = dist.cdf_at(x);
            assert!(
                f >= prev - 1e-12,
                "{}: F decreases at x = {x} ({f} < {prev})",
                dist.label()
            );
            assert!((0.0..=1.0 + 1e-12).contains(&f), "{}: F({x}) = {f}", dist.label());
            prev = f;
        }
        let mass = dist.cdf_at(1.0) + dist.atom_mass_at(1.0);
        assert!((mass - 1.0).abs() <= 1e-12, "{}: total mass {mass}", dist.label());
    }
}

#[test]
fn density_matches_finite_differences_of_the_cdf() {
    for dist in corpus() {
        for seg in dist.segments() {
            let h = ((seg.hi - seg.lo) * 1e-3).min(1e-6);
            for x in interior_probes(seg) {
                let f = dist.density_at(x);
                let fd = (dist.cdf_at(x + h) - dist.cdf_at(x - h)) / (2.0 * h);
                if f.abs() < 1e-9 {
                    assert!(fd.abs() < 1e-6, "{} at {x}: fd {fd} on a flat", dist.label());
                } else {
                    let rel = (fd - f).abs() / f.abs();
                    assert!(
                        rel <= 1e-6,
                        "{} at {x}: density {f} vs fd {fd} (rel {rel})",
                        dist.label()
                    );
                }
            }
        }
    }
}

#[test]
fn inverse_cdf_round_trips_where_density_is_positive() {
    for dist in corpus() {
        for seg in dist.segments() {
            for x in interior_probes(seg) {
                if dist.density_at(x) <= 1e-6 {
                    continue;
                }
                let back = dist.inverse_cdf(dist.cdf_at(x));
                assert!(
                    (back - x).abs() <= 1e-9,
                    "{}: inverse(F({x})) = {back}",
                    dist.label()
                );
            }
        }
    }
}

#[test]
fn mhr_distributions_are_regular_over_the_corpus() {
    let grid = GridSpec::default();
    for dist in corpus() {
        let mhr = check_mhr(&dist, grid).unwrap();
        if !mhr.passed || mhr.min_margin.is_some_and(|m| m < 0.0) {
            continue;
        }
        let reg = check_regularity(&dist, grid).unwrap();
        assert!(
            reg.passed,
            "{}: passes the hazard check but fails regularity ({:?})",
            dist.label(),
            reg.min_margin
        );
    }
}

#[test]
fn revenue_quantile_curves_are_concave_for_regular_buyers() {
    let grid = GridSpec::default();
    for dist in corpus() {
        if !check_regularity(&dist, grid).unwrap().passed {
            continue;
        }
        let n = 1000;
        let r: Vec<f64> =
            (0..=n).map(|i| dist.revenue_at_quantile(i as f64 / n as f64)).collect();
        let mut prev_slope = f64::INFINITY;
        for w in r.windows(2) {
            let slope = (w[1] - w[0]) * n as f64;
            assert!(
                slope <= prev_slope + 1e-6,
                "{}: quantile-revenue slope rises ({prev_slope} -> {slope})",
                dist.label()
            );
            prev_slope = slope;
        }
    }
}

#[test]
fn plateau_buyer_has_the_three_branch_quantile_revenue() {
    // First buyer of the regular-class base: selling to quantile q earns
    // q up to 1/3 (atom at price 1), exactly 1/3 on [1/3, 2/3] (the
    // equal-revenue branch), and 1 - q past 2/3 (the x/(x+1) branch).
    let buyer = &two_regular_25_base().buyers()[0].clone();
    for i in 1..1000 {
        let q = i as f64 / 1000.0;
        let want = if q <= 1.0 / 3.0 {
            q
        } else if q <= 2.0 / 3.0 {
            1.0 / 3.0
        } else {
            1.0 - q
        };
        let got = buyer.revenue_at_quantile(q);
        assert!((got - want).abs() <= 1e-9, "q = {q}: revenue {got}, want {want}");
    }
}

fn proptest_instances() -> Vec<Instance> {
    let three_reg = FamilyTag::ThreeRegular3.build(0.05).unwrap();
    let mut v = vec![two_regular_25_base(), two_mhr_25_base()];
    v.push(three_reg.instance(1).clone());
    v.push(Instance::new("uniform", vec![uniform_buyer()]));
    v
}

proptest! {
    /// Raising the price never gains more revenue than the raise itself;
    /// equivalently the sale probability r(p)/p can only fall.
    #[test]
    fn revenue_gains_are_price_lipschitz(
        which in 0usize..4,
        a in 1e-6f64..1.0,
        b in 1e-6f64..1.0,
    ) {
        let inst = &proptest_instances()[which];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (r_lo, r_hi) = (inst.revenue_at(lo), inst.revenue_at(hi));
        prop_assert!(r_hi - r_lo <= hi - lo + 1e-12);
        prop_assert!(r_hi / hi <= r_lo / lo + 1e-12);
    }

    #[test]
    fn exp3_sampling_distribution_stays_valid(
        k in 2usize..12,
        steps in 0usize..200,
        seed in any::<u64>(),
    ) {
        let mut learner = make_exp3(arm_grid(k).unwrap(), 200, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in 0..steps {
            let price = learner.choose(&mut rng);
            learner.update(price, t % 3 != 0);
        }
        let probs = learner.probabilities();
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9, "probabilities sum to {sum}");
        for &p in &probs {
            prop_assert!(p.is_finite() && p > 0.0 && p <= 1.0);
        }
    }

    #[test]
    fn bernoulli_divergence_dominates_pinsker(
        x in 0.0f64..=1.0,
        y in 1e-9f64..1.0,
    ) {
        let d = bernoulli_kl(x, y);
        prop_assert!(d >= 0.0);
        prop_assert!(d >= 2.0 * (x - y) * (x - y) - 1e-12);
        if (x - y).abs() > 1e-3 {
            prop_assert!(d > 0.0);
        }
        prop_assert_eq!(bernoulli_kl(y, y), 0.0);
    }
}
