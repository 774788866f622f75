//! Regular-buyer families.
//!
//! All three share the same base revenue plateau r(p) = 1/3 on (1/3, 1],
//! produced by a product CDF of 1 - 1/(3x). The width-sqrt(eps) family
//! dents the second buyer's CDF; the width-eps families steepen one CDF
//! onto the regularity boundary with a saturated tail and finish with an
//! atom, concentrating the member's optimum at the tail's right endpoint.

use crate::distribution::{Atom, PiecewiseDistribution, Segment};
use crate::forms::SegmentForm;
use crate::market::Instance;

use super::{
    degenerate_at_zero, dent_segments, member_count, FamilyError, FamilyMember, FamilyTag,
    HardFamily, INTERVAL_SHIFT,
};

fn rational(num: Vec<f64>, den: Vec<f64>) -> SegmentForm {
    SegmentForm::rational(num, den)
}

/// x/(x+1) up to 1/2, then 1 - 1/(3x), atom of 1/3 at 1.
fn pareto_style_buyer(label: &str) -> PiecewiseDistribution {
    PiecewiseDistribution::new(
        label,
        vec![
            Segment::new(0.0, 0.5, rational(vec![0.0, 1.0], vec![1.0, 1.0])),
            Segment::new(0.5, 1.0, rational(vec![-1.0, 3.0], vec![0.0, 3.0])),
        ],
        vec![Atom { loc: 1.0, mass: 1.0 / 3.0 }],
    )
    .expect("base buyer 1 is a valid distribution")
}

/// The complementary buyer whose product with `pareto_style_buyer` is
/// 1 - 1/(3x) on (1/3, 1]: zero up to 1/3, (3x-1)(x+1)/(3x^2) up to 1/2,
/// then already exhausted.
fn complement_buyer(label: &str) -> PiecewiseDistribution {
    PiecewiseDistribution::new(
        label,
        vec![
            Segment::new(0.0, 1.0 / 3.0, SegmentForm::Constant { value: 0.0 }),
            Segment::new(1.0 / 3.0, 0.5, rational(vec![-1.0, 2.0, 3.0], vec![0.0, 0.0, 3.0])),
            Segment::new(0.5, 1.0, SegmentForm::Constant { value: 1.0 }),
        ],
        vec![],
    )
    .expect("base buyer 2 is a valid distribution")
}

/// Base pair of the dent family: product CDF 1 - 1/(3x) above 1/3, so the
/// revenue curve is p below 1/3 and exactly 1/3 afterwards.
pub fn two_regular_25_base() -> Instance {
    Instance::new(
        "two-regular-25 base",
        vec![
            pareto_style_buyer("two-regular-25 base F1"),
            complement_buyer("two-regular-25 base F2"),
        ],
    )
}

/// Member of the dent family: buyer 2's CDF loses a mass-eps C1 dent on
/// (a/2, a/2 + 4 sqrt(eps)], shifting the optimum to the dent's center
/// a/2 + 2 sqrt(eps) where the revenue exceeds the plateau by
/// eps * b * F1(b). Requires a in [0.9, 1] and the dent to fit below 0.5.
pub fn two_regular_25_member(a: f64, eps: f64) -> Result<Instance, FamilyError> {
    if !(0.9..=1.0).contains(&a) {
        return Err(FamilyError::ParamRange(format!("a must lie in [0.9, 1], got {a}")));
    }
    if eps <= 0.0 || eps.is_nan() {
        return Err(FamilyError::ParamRange(format!("eps must be positive, got {eps}")));
    }
    let s = eps.sqrt();
    let half = a / 2.0;
    let end = half + 4.0 * s;
    if end > 0.5 + 1e-12 {
        return Err(FamilyError::ParamRange(format!(
            "dent (a/2, a/2 + 4 sqrt(eps)] = ({half}, {end}] must end by 0.5; reduce eps or a"
        )));
    }
    let base_form = rational(vec![-1.0, 2.0, 3.0], vec![0.0, 0.0, 3.0]);
    let label = format!("two-regular-25(a={a},eps={eps})");

    let mut segments = vec![
        Segment::new(0.0, 1.0 / 3.0, SegmentForm::Constant { value: 0.0 }),
        Segment::new(1.0 / 3.0, half, base_form.clone()),
    ];
    let mut dent = dent_segments(&base_form, half, s, eps);
    if 0.5 - end > 1e-12 {
        segments.extend(dent);
        segments.push(Segment::new(end, 0.5, base_form));
    } else {
        // The dent ends exactly at 0.5 (up to round-off): absorb the dust.
        dent[2].hi = 0.5;
        segments.extend(dent);
    }
    segments.push(Segment::new(0.5, 1.0, SegmentForm::Constant { value: 1.0 }));

    let f2 = PiecewiseDistribution::new(format!("{label} F2"), segments, vec![])?;
    Ok(Instance::new(label, vec![pareto_style_buyer("two-regular-25 base F1"), f2]))
}

/// Dent family: K = floor(0.1 / (8 sqrt(eps))) members with adjacent dents
/// tiling [0.45, 0.5]. Feasible only for eps <= (0.1/8)^2 = 1.5625e-4.
pub fn two_regular_25_family(eps: f64) -> Result<HardFamily, FamilyError> {
    if eps <= 0.0 || eps.is_nan() {
        return Err(FamilyError::ParamRange(format!("eps must be positive, got {eps}")));
    }
    let s = eps.sqrt();
    let k = member_count(0.1 / (8.0 * s));
    if k == 0 {
        return Err(FamilyError::EpsTooLarge { eps, limit: 1.5625e-4 });
    }
    let base = two_regular_25_base();
    let (_, base_opt) = base.monopoly_price();
    // Adjacent dents of width 4 sqrt(eps); doubling the start keeps the
    // member parameter and the dent start in exact binary agreement.
    let boundary = |j: usize| 0.45 + 4.0 * s * j as f64;
    let mut members = Vec::with_capacity(k);
    for i in 0..k {
        let lo = boundary(i);
        let hi = boundary(i + 1);
        let a = 2.0 * lo;
        let bump_price = lo + 2.0 * s;
        let instance = two_regular_25_member(a, eps)?;
        let nominal_gap = instance.revenue_at(bump_price) - base_opt;
        members.push(FamilyMember { instance, interval: (lo, hi), bump_price, nominal_gap });
    }
    Ok(HardFamily { family_tag: FamilyTag::TwoRegular25, eps, base, members })
}

/// Buyer 1 of the width-eps regular families: zero up to 1/3, then
/// 1 - 1/(3x), atom of 1/3 at 1. Alone it already generates the plateau.
fn plateau_buyer(label: &str) -> PiecewiseDistribution {
    PiecewiseDistribution::new(
        label,
        vec![
            Segment::new(0.0, 1.0 / 3.0, SegmentForm::Constant { value: 0.0 }),
            Segment::new(1.0 / 3.0, 1.0, rational(vec![-1.0, 3.0], vec![0.0, 3.0])),
        ],
        vec![Atom { loc: 1.0, mass: 1.0 / 3.0 }],
    )
    .expect("plateau buyer is a valid distribution")
}

/// x/(x+a) up to m, then 1 - 1/(3x), atom 1/3 at 1. With a = m/(3m-1) the
/// two branches meet continuously at m.
fn shifted_pareto_buyer(label: &str, m: f64, a: f64) -> Result<PiecewiseDistribution, FamilyError> {
    let mut segments = vec![Segment::new(0.0, m, rational(vec![0.0, 1.0], vec![a, 1.0]))];
    if m < 1.0 {
        segments.push(Segment::new(m, 1.0, rational(vec![-1.0, 3.0], vec![0.0, 3.0])));
    }
    Ok(PiecewiseDistribution::new(label, segments, vec![Atom { loc: 1.0, mass: 1.0 / 3.0 }])?)
}

/// Base of the three-buyer width-eps regular family: the plateau buyer
/// padded with two degenerate buyers.
pub fn three_regular_3_base() -> Instance {
    Instance::new(
        "three-regular-3 base",
        vec![
            plateau_buyer("three-regular-3 base F1"),
            degenerate_at_zero("three-regular-3 base F2"),
            degenerate_at_zero("three-regular-3 base F3"),
        ],
    )
}

/// Positive root of (3(a+b)-1) x^2 + (3ab-a-b) x - ab = 0: the point where
/// buyer 3's CDF reaches 1 while keeping the product at 1 - 1/(3x) below.
fn crossing_point(a: f64, b: f64) -> f64 {
    let disc = (3.0 * a * b + a + b).powi(2) - 4.0 * a * b;
    debug_assert!(
        (disc - ((3.0 * a * b + a - b).powi(2) + 12.0 * a * b * b)).abs() <= 1e-12 * disc,
        "discriminant forms disagree"
    );
    (a + b - 3.0 * a * b + disc.sqrt()) / (2.0 * (3.0 * (a + b) - 1.0))
}

/// Member of the three-buyer width-eps regular family. Buyer 1 softens to
/// x/(x+a) below m, buyer 2 is nearly degenerate at 0 with an atom of
/// b/(m+b) at m, and buyer 3 cancels both below the crossing point c so
/// the product deviates from the base only on (c, m], c >= m - 0.75 eps.
pub fn three_regular_3_member(m: f64, eps: f64) -> Result<Instance, FamilyError> {
    if !(m > 0.4 && m <= 0.5) {
        return Err(FamilyError::ParamRange(format!("m must lie in (0.4, 0.5], got {m}")));
    }
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(FamilyError::ParamRange(format!("eps must lie in (0, 0.1], got {eps}")));
    }
    let a = m / (3.0 * m - 1.0);
    let b = eps;
    let c = crossing_point(a, b);
    if !(c > 1.0 / 3.0 && c < m) {
        return Err(FamilyError::ParamRange(format!(
            "crossing point {c} escaped (1/3, {m}); eps is too large for this m"
        )));
    }
    let label = format!("three-regular-3(m={m},eps={eps})");

    let f1 = shifted_pareto_buyer(&format!("{label} F1"), m, a)?;
    let f2 = PiecewiseDistribution::new(
        format!("{label} F2"),
        vec![
            Segment::new(0.0, m, rational(vec![0.0, 1.0], vec![b, 1.0])),
            Segment::new(m, 1.0, SegmentForm::Constant { value: 1.0 }),
        ],
        vec![Atom { loc: m, mass: b / (m + b) }],
    )?;
    // (3x-1)(x+a)(x+b) expanded in ascending powers.
    let num = vec![
        -a * b,
        3.0 * a * b - (a + b),
        3.0 * (a + b) - 1.0,
        3.0,
    ];
    let f3 = PiecewiseDistribution::new(
        format!("{label} F3"),
        vec![
            Segment::new(0.0, 1.0 / 3.0, SegmentForm::Constant { value: 0.0 }),
            Segment::new(1.0 / 3.0, c, rational(num, vec![0.0, 0.0, 0.0, 3.0])),
            Segment::new(c, 1.0, SegmentForm::Constant { value: 1.0 }),
        ],
        vec![],
    )?;
    Ok(Instance::new(label, vec![f1, f2, f3]))
}

/// Three-buyer width-eps regular family: K = floor(0.1 / eps) members at
/// m_i = 0.4 + i eps, informative intervals [m_i - 0.8 eps, m_i + 0.2 eps)
/// tiling (0.4, 0.5] with the full deviation region (c_i, m_i] inside.
pub fn three_regular_3_family(eps: f64) -> Result<HardFamily, FamilyError> {
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(FamilyError::ParamRange(format!("eps must lie in (0, 0.1], got {eps}")));
    }
    let k = member_count(0.1 / eps);
    if k == 0 {
        return Err(FamilyError::EpsTooLarge { eps, limit: 0.1 });
    }
    let base = three_regular_3_base();
    let (_, base_opt) = base.monopoly_price();
    let boundary = |j: usize| 0.4 + eps * (j as f64 + 0.2);
    let mut members = Vec::with_capacity(k);
    for i in 1..=k {
        let m = 0.4 + eps * i as f64;
        let instance = three_regular_3_member(m, eps)?;
        let nominal_gap = instance.revenue_at(m) - base_opt;
        members.push(FamilyMember {
            instance,
            interval: (boundary(i - 1), boundary(i)),
            bump_price: m,
            nominal_gap,
        });
    }
    Ok(HardFamily { family_tag: FamilyTag::ThreeRegular3, eps, base, members })
}

/// Base of the two-buyer width-eps regular family: the plateau buyer plus
/// one degenerate buyer.
pub fn two_regular_3_base() -> Instance {
    Instance::new(
        "two-regular-3 base",
        vec![
            plateau_buyer("two-regular-3 base F1"),
            degenerate_at_zero("two-regular-3 base F2"),
        ],
    )
}

/// Member of the two-buyer width-eps regular family. Buyer 1 softens to
/// x/(x+a) below m; buyer 2 follows (3x-1)(x+a)/(3x^2) so the product
/// stays on the base curve, then on (m - eps, m] rides the exact solution
/// of 2f^2 + (1-F)f' = 0 and parks the remaining mass as an atom at m.
pub fn two_regular_3_member(m: f64, eps: f64) -> Result<Instance, FamilyError> {
    if !(m > 1.0 / 3.0 && m <= 1.0) {
        return Err(FamilyError::ParamRange(format!("m must lie in (1/3, 1], got {m}")));
    }
    // Equality eps = m - 1/3 is the first member of a family (the tail
    // starts at the support head); the slack absorbs round-off in m.
    if !(eps > 0.0 && eps <= m - 1.0 / 3.0 + 1e-12) {
        return Err(FamilyError::ParamRange(format!(
            "eps must lie in (0, m - 1/3], got {eps} for m = {m}"
        )));
    }
    let a = m / (3.0 * m - 1.0);
    let s = m - eps;
    let label = format!("two-regular-3(m={m},eps={eps})");

    let f1 = shifted_pareto_buyer(&format!("{label} F1"), m, a)?;

    // (3x-1)(x+a) expanded in ascending powers.
    let ramp = rational(vec![-a, 3.0 * a - 1.0, 3.0], vec![0.0, 0.0, 3.0]);
    let mut segments = vec![Segment::new(0.0, s.min(1.0 / 3.0), SegmentForm::Constant { value: 0.0 })];
    let (y, yp);
    if s > 1.0 / 3.0 + 1e-12 {
        segments[0].hi = 1.0 / 3.0;
        segments.push(Segment::new(1.0 / 3.0, s, ramp.clone()));
        y = ramp.cdf(s).max(0.0);
        yp = ramp.pdf(s);
    } else {
        // First member of a family: the ramp region is empty and the tail
        // starts right at the support head with F = 0.
        segments[0].hi = s;
        y = 0.0;
        yp = ramp.pdf(s);
    }
    let tail = SegmentForm::RegularTail { start: s, cdf_start: y, density_start: yp };
    let atom_mass = 1.0 - tail.cdf(m);
    segments.push(Segment::new(s, m, tail));
    if m < 1.0 {
        segments.push(Segment::new(m, 1.0, SegmentForm::Constant { value: 1.0 }));
    }
    let f2 = PiecewiseDistribution::new(
        format!("{label} F2"),
        segments,
        vec![Atom { loc: m, mass: atom_mass }],
    )?;
    Ok(Instance::new(label, vec![f1, f2]))
}

/// Two-buyer width-eps regular family: K = floor(2 / (3 eps)) members at
/// m_i = 1/3 + i eps with informative intervals [m_{i-1} + w, m_i + w).
pub fn two_regular_3_family(eps: f64) -> Result<HardFamily, FamilyError> {
    if !(eps > 0.0 && eps < 2.0 / 3.0) {
        return Err(FamilyError::ParamRange(format!("eps must lie in (0, 2/3), got {eps}")));
    }
    let k = member_count(2.0 / (3.0 * eps));
    if k == 0 {
        return Err(FamilyError::EpsTooLarge { eps, limit: 2.0 / 3.0 });
    }
    let base = two_regular_3_base();
    let (_, base_opt) = base.monopoly_price();
    let boundary = |j: usize| 1.0 / 3.0 + eps * j as f64 + INTERVAL_SHIFT;
    let mut members = Vec::with_capacity(k);
    for i in 1..=k {
        let m = 1.0f64.min(1.0 / 3.0 + eps * i as f64);
        // The last member can miss 1 by round-off; park it exactly at 1.
        let m = if 1.0 - m <= 1e-12 { 1.0 } else { m };
        let instance = two_regular_3_member(m, eps)?;
        let nominal_gap = instance.revenue_at(m) - base_opt;
        members.push(FamilyMember {
            instance,
            interval: (boundary(i - 1), boundary(i)),
            bump_price: m,
            nominal_gap,
        });
    }
    Ok(HardFamily { family_tag: FamilyTag::TwoRegular3, eps, base, members })
}
