//! MHR-buyer families.
//!
//! The shared base pairs a truncated exponential with the conditional CDF
//! that lifts the product to 1 - 0.7/x, creating a revenue plateau of 0.7
//! across [0.7, 1]. Every member construction re-certifies the perturbed
//! buyers against the hazard-rate validator before handing out an
//! instance; the MHR class is the whole point of these families, so a
//! member that drifted out of it would poison every downstream number.

use crate::distribution::{Atom, PiecewiseDistribution, Segment};
use crate::forms::{ExpAffine, Poly, RationalForm, SegmentForm};
use crate::market::Instance;

use super::{
    certify_mhr, degenerate_at_zero, dent_segments, member_count, FamilyError, FamilyMember,
    FamilyTag, HardFamily, INTERVAL_SHIFT,
};

/// 1 - e^{-0.4 x}, the common exponential factor of both families.
fn truncation_exp() -> ExpAffine {
    ExpAffine { offset: 1.0, scale: -1.0, rate: -0.4 }
}

/// (x - 0.7) / (x (1 - e^{-0.4 x})), the base complement on (0.7, 1].
fn complement_form() -> SegmentForm {
    SegmentForm::RationalOverExp {
        rational: RationalForm::new(Poly::new(vec![-0.7, 1.0]), Poly::new(vec![0.0, 1.0])),
        exp: truncation_exp(),
    }
}

/// 1 - e^{-0.4 x} on (0, 1], atom e^{-0.4} at 1.
fn truncated_exponential_buyer(label: &str) -> PiecewiseDistribution {
    let form = SegmentForm::ExpAffine(truncation_exp());
    let atom = 1.0 - form.cdf(1.0);
    PiecewiseDistribution::new(
        label,
        vec![Segment::new(0.0, 1.0, form)],
        vec![Atom { loc: 1.0, mass: atom }],
    )
    .expect("truncated exponential is a valid distribution")
}

/// Zero up to 0.7, then the complement form, with the leftover mass parked
/// in an atom at 1.
fn complement_buyer(label: &str) -> PiecewiseDistribution {
    let form = complement_form();
    let atom = 1.0 - form.cdf(1.0);
    PiecewiseDistribution::new(
        label,
        vec![
            Segment::new(0.0, 0.7, SegmentForm::Constant { value: 0.0 }),
            Segment::new(0.7, 1.0, form),
        ],
        vec![Atom { loc: 1.0, mass: atom }],
    )
    .expect("base complement is a valid distribution")
}

/// Base pair of the MHR dent family: plateau revenue 0.7 on [0.7, 1].
pub fn two_mhr_25_base() -> Instance {
    Instance::new(
        "two-mhr-25 base",
        vec![
            truncated_exponential_buyer("two-mhr-25 base F1"),
            complement_buyer("two-mhr-25 base F2"),
        ],
    )
}

/// Member of the MHR dent family: buyer 2 loses a mass-eps C1 dent on
/// (a, a + 4 sqrt(eps)], moving the optimum to the dent's center where the
/// revenue exceeds the plateau by eps * b * F1(b). The dented buyer must
/// re-certify as MHR or construction is refused.
pub fn two_mhr_25_member(a: f64, eps: f64) -> Result<Instance, FamilyError> {
    if !(0.7..=1.0).contains(&a) {
        return Err(FamilyError::ParamRange(format!("a must lie in [0.7, 1], got {a}")));
    }
    if eps <= 0.0 || eps.is_nan() {
        return Err(FamilyError::ParamRange(format!("eps must be positive, got {eps}")));
    }
    let s = eps.sqrt();
    let end = a + 4.0 * s;
    if end > 1.0 + 1e-12 {
        return Err(FamilyError::ParamRange(format!(
            "dent (a, a + 4 sqrt(eps)] = ({a}, {end}] must end by 1; reduce eps or a"
        )));
    }
    let base_form = complement_form();
    let atom = 1.0 - base_form.cdf(1.0);
    let label = format!("two-mhr-25(a={a},eps={eps})");

    let mut segments = vec![Segment::new(0.0, 0.7, SegmentForm::Constant { value: 0.0 })];
    if a > 0.7 + 1e-12 {
        segments.push(Segment::new(0.7, a, base_form.clone()));
    } else {
        segments[0].hi = a;
    }
    let mut dent = dent_segments(&base_form, a, s, eps);
    if 1.0 - end > 1e-12 {
        segments.extend(dent);
        segments.push(Segment::new(end, 1.0, base_form));
    } else {
        dent[2].hi = 1.0;
        segments.extend(dent);
    }

    let f2 = PiecewiseDistribution::new(
        format!("{label} F2"),
        segments,
        vec![Atom { loc: 1.0, mass: atom }],
    )?;
    certify_mhr(&f2)?;
    Ok(Instance::new(label, vec![truncated_exponential_buyer("two-mhr-25 base F1"), f2]))
}

/// MHR dent family: K = floor(0.3 / (8 sqrt(eps))) members with dents of
/// width 4 sqrt(eps) spaced 8 sqrt(eps) apart from 0.7 up. Feasible only
/// for eps <= (0.3/8)^2 = 1.40625e-3.
pub fn two_mhr_25_family(eps: f64) -> Result<HardFamily, FamilyError> {
    if eps <= 0.0 || eps.is_nan() {
        return Err(FamilyError::ParamRange(format!("eps must be positive, got {eps}")));
    }
    let s = eps.sqrt();
    let k = member_count(0.3 / (8.0 * s));
    if k == 0 {
        return Err(FamilyError::EpsTooLarge { eps, limit: 1.40625e-3 });
    }
    let base = two_mhr_25_base();
    let (_, base_opt) = base.monopoly_price();
    let w = INTERVAL_SHIFT;
    let mut members = Vec::with_capacity(k);
    for i in 0..k {
        // The base optimum sits exactly at the first dent's start, so the
        // intervals open a hair to the right of each dent.
        let a = 0.7 + 8.0 * s * i as f64;
        let bump_price = a + 2.0 * s;
        let instance = two_mhr_25_member(a, eps)?;
        let nominal_gap = instance.revenue_at(bump_price) - base_opt;
        members.push(FamilyMember {
            instance,
            interval: (a + w, a + 4.0 * s + w),
            bump_price,
            nominal_gap,
        });
    }
    Ok(HardFamily { family_tag: FamilyTag::TwoMhr25, eps, base, members })
}

/// Base of the three-buyer width-eps MHR family: the dent family's pair
/// padded with a degenerate buyer.
pub fn three_mhr_3_base() -> Instance {
    Instance::new(
        "three-mhr-3 base",
        vec![
            truncated_exponential_buyer("three-mhr-3 base F1"),
            complement_buyer("three-mhr-3 base F2"),
            degenerate_at_zero("three-mhr-3 base F3"),
        ],
    )
}

/// Member of the three-buyer width-eps MHR family. Buyer 2 flattens to a
/// linear CDF through (a, F2(a)); buyer 3 cancels that change below
/// s = a - eps, then rides the constant-hazard solution of
/// f^2 + (1-F)f' = 0 on (s, a] and parks the remaining mass as an atom at
/// a. Both perturbed buyers must re-certify as MHR.
pub fn three_mhr_3_member(a: f64, eps: f64) -> Result<Instance, FamilyError> {
    if !(a > 0.7 && a <= 1.0 + 1e-12) {
        return Err(FamilyError::ParamRange(format!("a must lie in (0.7, 1], got {a}")));
    }
    let a = if 1.0 - a <= 1e-12 { 1.0 } else { a };
    if !(eps > 0.0 && eps <= 0.05) {
        return Err(FamilyError::ParamRange(format!("eps must lie in (0, 0.05], got {eps}")));
    }
    // Equality eps = a - 0.7 is the first member of a family (the hazard
    // tail starts right at 0.7); the slack absorbs round-off in a.
    if eps > a - 0.7 + 1e-12 {
        return Err(FamilyError::ParamRange(format!(
            "eps must not exceed a - 0.7 = {}, got {eps}",
            a - 0.7
        )));
    }
    let s = a - eps;
    let base_form = complement_form();
    let base_atom = 1.0 - base_form.cdf(1.0);
    let label = format!("three-mhr-3(a={a},eps={eps})");

    let f1 = truncated_exponential_buyer(&format!("{label} F1"));

    let f2_at_a = base_form.cdf(a);
    let slope = f2_at_a / a;
    let mut f2_segments =
        vec![Segment::new(0.0, a, SegmentForm::Linear { intercept: 0.0, slope })];
    if a < 1.0 {
        f2_segments.push(Segment::new(a, 1.0, base_form.clone()));
    }
    let f2 = PiecewiseDistribution::new(
        format!("{label} F2"),
        f2_segments,
        vec![Atom { loc: 1.0, mass: base_atom }],
    )?;

    // kappa * (x - 0.7) / (x^2 (1 - e^{-0.4 x})) agrees with the base
    // product below s once buyer 2 is the linear chord.
    let kappa = a / f2_at_a;
    let ramp = SegmentForm::RationalOverExp {
        rational: RationalForm::new(
            Poly::new(vec![-0.7 * kappa, kappa]),
            Poly::new(vec![0.0, 0.0, 1.0]),
        ),
        exp: truncation_exp(),
    };
    let mut f3_segments =
        vec![Segment::new(0.0, s.min(0.7), SegmentForm::Constant { value: 0.0 })];
    let (y, yp);
    if s > 0.7 + 1e-12 {
        f3_segments[0].hi = 0.7;
        f3_segments.push(Segment::new(0.7, s, ramp.clone()));
        y = ramp.cdf(s).max(0.0);
        yp = ramp.pdf(s);
    } else {
        f3_segments[0].hi = s;
        y = 0.0;
        yp = ramp.pdf(s);
    }
    let tail = SegmentForm::MhrTail { start: s, cdf_start: y, density_start: yp };
    let atom_mass = 1.0 - tail.cdf(a);
    f3_segments.push(Segment::new(s, a, tail));
    if a < 1.0 {
        f3_segments.push(Segment::new(a, 1.0, SegmentForm::Constant { value: 1.0 }));
    }
    let f3 = PiecewiseDistribution::new(
        format!("{label} F3"),
        f3_segments,
        vec![Atom { loc: a, mass: atom_mass }],
    )?;

    certify_mhr(&f2)?;
    certify_mhr(&f3)?;
    Ok(Instance::new(label, vec![f1, f2, f3]))
}

/// Three-buyer width-eps MHR family: K = floor(0.3 / eps) members at
/// a_i = 0.7 + i eps with informative intervals [a_i - eps + w, a_i + w).
pub fn three_mhr_3_family(eps: f64) -> Result<HardFamily, FamilyError> {
    if !(eps > 0.0 && eps <= 0.05) {
        return Err(FamilyError::ParamRange(format!("eps must lie in (0, 0.05], got {eps}")));
    }
    let k = member_count(0.3 / eps);
    let base = three_mhr_3_base();
    let (_, base_opt) = base.monopoly_price();
    let boundary = |j: usize| 0.7 + eps * j as f64 + INTERVAL_SHIFT;
    let mut members = Vec::with_capacity(k);
    for i in 1..=k {
        let a = 1.0f64.min(0.7 + eps * i as f64);
        // The last member can miss 1 by round-off; park it exactly at 1.
        let a = if 1.0 - a <= 1e-12 { 1.0 } else { a };
        let instance = three_mhr_3_member(a, eps)?;
        let bump_price = a;
        let nominal_gap = instance.revenue_at(bump_price) - base_opt;
        members.push(FamilyMember {
            instance,
            interval: (boundary(i - 1), boundary(i)),
            bump_price,
            nominal_gap,
        });
    }
    Ok(HardFamily { family_tag: FamilyTag::ThreeMhr3, eps, base, members })
}
