//! Hard instance families: a base market plus K imperceptibly perturbed
//! members, each concealing extra revenue inside a narrow price interval.
//!
//! Every family follows the same blueprint. The base instance has a flat
//! revenue plateau, so a wide range of prices is exactly optimal. Each
//! member modifies one buyer on an interval so small that telling it apart
//! from the base costs many rounds of binary feedback, yet the member's
//! optimal price moves strictly inside that interval. The two regular
//! families of width eps^0.5 bend the CDF along the boundary of
//! 2f^2 + (1-F)f' >= 0; the width-eps families additionally saturate that
//! boundary (or the MHR boundary f^2 + (1-F)f' >= 0) with a closed-form
//! tail, which is what makes the perturbation maximally cheap to hide.

mod mhr;
mod regular;

pub use mhr::{
    three_mhr_3_base, three_mhr_3_family, three_mhr_3_member, two_mhr_25_base, two_mhr_25_family,
    two_mhr_25_member,
};
pub use regular::{
    three_regular_3_base, three_regular_3_family, three_regular_3_member, two_regular_25_base,
    two_regular_25_family, two_regular_25_member, two_regular_3_base, two_regular_3_family,
    two_regular_3_member,
};

use serde::{Deserialize, Serialize};

use crate::distribution::{Atom, BuildError, PiecewiseDistribution, Segment};
use crate::forms::SegmentForm;
use crate::market::Instance;
use crate::validate::{ShapeCheck, ValidateError, ValidationReport};

/// Informative intervals open to the right of each perturbation region by
/// this much. The shift keeps the base optimum strictly outside the first
/// interval and each member optimum strictly inside its own; the sliver of
/// perturbed prices it exposes carries a CDF deviation of at most
/// curvature * shift^2 / 2, far below every tolerance in use.
pub(crate) const INTERVAL_SHIFT: f64 = 3e-11;

/// floor(ratio) with a nudge recovering integers lost to decimal round-off:
/// 0.1/0.05 evaluates to 1.999...98 but the window genuinely fits 2 members.
pub(crate) fn member_count(ratio: f64) -> usize {
    (ratio + 1e-9).floor().max(0.0) as usize
}

/// Construction failures for family and member builders.
#[derive(Debug, thiserror::Error)]
pub enum FamilyError {
    #[error("eps = {eps} leaves no room for members (feasible up to {limit}); reduce eps")]
    EpsTooLarge { eps: f64, limit: f64 },
    #[error("parameter out of range: {0}")]
    ParamRange(String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
    #[error("`{label}` failed MHR certification (min margin {min_margin:?}, argmin {argmin:?})")]
    MhrCertification {
        label: String,
        min_margin: Option<f64>,
        argmin: Option<f64>,
        report: Box<ValidationReport>,
    },
}

/// The five built-in families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    TwoRegular25,
    ThreeRegular3,
    TwoRegular3,
    TwoMhr25,
    ThreeMhr3,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 5] = [
        FamilyTag::TwoRegular25,
        FamilyTag::ThreeRegular3,
        FamilyTag::TwoRegular3,
        FamilyTag::TwoMhr25,
        FamilyTag::ThreeMhr3,
    ];

    /// The shape class every distribution in the family must certify.
    pub fn shape_class(self) -> ShapeCheck {
        match self {
            FamilyTag::TwoRegular25 | FamilyTag::ThreeRegular3 | FamilyTag::TwoRegular3 => {
                ShapeCheck::Regular
            }
            FamilyTag::TwoMhr25 | FamilyTag::ThreeMhr3 => ShapeCheck::Mhr,
        }
    }

    /// Builds the family at perturbation scale `eps`.
    pub fn build(self, eps: f64) -> Result<HardFamily, FamilyError> {
        match self {
            FamilyTag::TwoRegular25 => two_regular_25_family(eps),
            FamilyTag::ThreeRegular3 => three_regular_3_family(eps),
            FamilyTag::TwoRegular3 => two_regular_3_family(eps),
            FamilyTag::TwoMhr25 => two_mhr_25_family(eps),
            FamilyTag::ThreeMhr3 => three_mhr_3_family(eps),
        }
    }
}

impl std::fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            FamilyTag::TwoRegular25 => "two-regular-25",
            FamilyTag::ThreeRegular3 => "three-regular-3",
            FamilyTag::TwoRegular3 => "two-regular-3",
            FamilyTag::TwoMhr25 => "two-mhr-25",
            FamilyTag::ThreeMhr3 => "three-mhr-3",
        };
        write!(f, "{tag}")
    }
}

impl std::str::FromStr for FamilyTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two-regular-25" => Ok(FamilyTag::TwoRegular25),
            "three-regular-3" => Ok(FamilyTag::ThreeRegular3),
            "two-regular-3" => Ok(FamilyTag::TwoRegular3),
            "two-mhr-25" => Ok(FamilyTag::TwoMhr25),
            "three-mhr-3" => Ok(FamilyTag::ThreeMhr3),
            other => Err(format!(
                "unknown family `{other}` (expected one of two-regular-25, three-regular-3, \
                 two-regular-3, two-mhr-25, three-mhr-3)"
            )),
        }
    }
}

/// One perturbed instance together with its informative price interval.
#[derive(Debug)]
pub struct FamilyMember {
    pub instance: Instance,
    /// Half-open [lo, hi); pairwise disjoint across members.
    pub interval: (f64, f64),
    /// Price at which the member's extra revenue concentrates.
    pub bump_price: f64,
    /// Member revenue at `bump_price` minus the base optimum.
    pub nominal_gap: f64,
}

/// A base instance plus its K perturbed members.
#[derive(Debug)]
pub struct HardFamily {
    pub family_tag: FamilyTag,
    pub eps: f64,
    pub base: Instance,
    pub members: Vec<FamilyMember>,
}

impl HardFamily {
    pub fn k(&self) -> usize {
        self.members.len()
    }

    /// Informative intervals in member order.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.members.iter().map(|m| m.interval).collect()
    }

    /// Instance by index: 0 is the base, 1..=K the members.
    pub fn instance(&self, idx: usize) -> &Instance {
        if idx == 0 {
            &self.base
        } else {
            &self.members[idx - 1].instance
        }
    }
}

/// A buyer whose value is 0 with probability 1. Its CDF is 1 everywhere
/// above 0, so it never changes a product of CDFs; it exists to pad an
/// ensemble to the advertised buyer count.
pub(crate) fn degenerate_at_zero(label: &str) -> PiecewiseDistribution {
    PiecewiseDistribution::new(
        label,
        vec![Segment::new(0.0, 1.0, SegmentForm::Constant { value: 1.0 })],
        vec![Atom { loc: 0.0, mass: 1.0 }],
    )
    .expect("degenerate-at-zero is a valid distribution")
}

/// Three segments carving a C1 dent of depth `eps` = s^2 out of `base` on
/// (start, start+4s]: density falls with slope -1 for s, rises with slope
/// +1 for 2s, falls again for s. The CDF deviation peaks at start+2s with
/// value exactly eps and vanishes with matching density at both ends.
pub(crate) fn dent_segments(
    base: &SegmentForm,
    start: f64,
    s: f64,
    eps: f64,
) -> Vec<Segment> {
    let b1 = start + s;
    let b2 = start + 3.0 * s;
    let b3 = start + 4.0 * s;
    vec![
        Segment::new(
            start,
            b1,
            SegmentForm::QuadBump {
                base: Box::new(base.clone()),
                offset: 0.0,
                quad: -0.5,
                center: start,
            },
        ),
        Segment::new(
            b1,
            b2,
            SegmentForm::QuadBump {
                base: Box::new(base.clone()),
                offset: -eps,
                quad: 0.5,
                center: start + 2.0 * s,
            },
        ),
        Segment::new(
            b2,
            b3,
            SegmentForm::QuadBump {
                base: Box::new(base.clone()),
                offset: 0.0,
                quad: -0.5,
                center: b3,
            },
        ),
    ]
}

/// Certifies a freshly built distribution against the MHR margin; the MHR
/// families refuse to hand out members that fail their own class check.
pub(crate) fn certify_mhr(d: &PiecewiseDistribution) -> Result<(), FamilyError> {
    let report = crate::validate::check_mhr(d, crate::validate::GridSpec::default())?;
    if !report.passed {
        return Err(FamilyError::MhrCertification {
            label: d.label().to_string(),
            min_margin: report.min_margin,
            argmin: report.argmin,
            report: Box::new(report),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip_through_strings() {
        for tag in FamilyTag::ALL {
            let s = tag.to_string();
            assert_eq!(s.parse::<FamilyTag>().unwrap(), tag);
        }
        assert!("two-regular".parse::<FamilyTag>().is_err());
    }

    #[test]
    fn degenerate_buyer_is_invisible_in_products() {
        let d = degenerate_at_zero("pad");
        assert_eq!(d.cdf_at(0.0), 0.0);
        assert_eq!(d.cdf_at(1e-9), 1.0);
        assert_eq!(d.cdf_at(0.5), 1.0);
    }
}
