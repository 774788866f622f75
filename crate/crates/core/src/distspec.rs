//! JSON interchange for distributions, instances, and families.
//!
//! Every numeric parameter crosses the boundary as a shortest decimal
//! string that parses back to the identical bit pattern, so a spec file
//! written by one build reproduces the exact same distribution in the
//! next: validation margins, monopoly prices, and seeded episodes all stay
//! byte-identical. Bare JSON numbers are accepted on input for hand-written
//! files.

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distribution::{Atom, BuildError, PiecewiseDistribution, Segment};
use crate::forms::{ExpAffine, Poly, RationalForm, SegmentForm};
use crate::hard_instances::HardFamily;
use crate::market::Instance;

/// An f64 carried as its shortest round-trip decimal representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dec(pub f64);

impl From<f64> for Dec {
    fn from(x: f64) -> Self {
        Dec(x)
    }
}

impl From<Dec> for f64 {
    fn from(d: Dec) -> Self {
        d.0
    }
}

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct DecVisitor;

        impl Visitor<'_> for DecVisitor {
            type Value = Dec;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a decimal string or a number")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Dec, E> {
                v.parse::<f64>().map(Dec).map_err(|_| {
                    E::invalid_value(de::Unexpected::Str(v), &"a decimal number")
                })
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Dec, E> {
                Ok(Dec(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Dec, E> {
                Ok(Dec(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Dec, E> {
                Ok(Dec(v as f64))
            }
        }

        d.deserialize_any(DecVisitor)
    }
}

fn decs(xs: &[f64]) -> Vec<Dec> {
    xs.iter().copied().map(Dec).collect()
}

fn floats(xs: &[Dec]) -> Vec<f64> {
    xs.iter().map(|d| d.0).collect()
}

/// Serializable mirror of [`SegmentForm`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "kebab-case")]
pub enum FormSpec {
    Constant { value: Dec },
    Linear { intercept: Dec, slope: Dec },
    Rational { num: Vec<Dec>, den: Vec<Dec> },
    ExpAffine { offset: Dec, scale: Dec, rate: Dec },
    QuadBump { base: Box<FormSpec>, offset: Dec, quad: Dec, center: Dec },
    RegularTail { start: Dec, cdf_start: Dec, density_start: Dec },
    MhrTail { start: Dec, cdf_start: Dec, density_start: Dec },
    RationalOverExp { num: Vec<Dec>, den: Vec<Dec>, offset: Dec, scale: Dec, rate: Dec },
}

impl From<&SegmentForm> for FormSpec {
    fn from(form: &SegmentForm) -> Self {
        match form {
            SegmentForm::Constant { value } => FormSpec::Constant { value: Dec(*value) },
            SegmentForm::Linear { intercept, slope } => {
                FormSpec::Linear { intercept: Dec(*intercept), slope: Dec(*slope) }
            }
            SegmentForm::Rational(r) => {
                FormSpec::Rational { num: decs(&r.num.0), den: decs(&r.den.0) }
            }
            SegmentForm::ExpAffine(e) => FormSpec::ExpAffine {
                offset: Dec(e.offset),
                scale: Dec(e.scale),
                rate: Dec(e.rate),
            },
            SegmentForm::QuadBump { base, offset, quad, center } => FormSpec::QuadBump {
                base: Box::new(FormSpec::from(base.as_ref())),
                offset: Dec(*offset),
                quad: Dec(*quad),
                center: Dec(*center),
            },
            SegmentForm::RegularTail { start, cdf_start, density_start } => {
                FormSpec::RegularTail {
                    start: Dec(*start),
                    cdf_start: Dec(*cdf_start),
                    density_start: Dec(*density_start),
                }
            }
            SegmentForm::MhrTail { start, cdf_start, density_start } => FormSpec::MhrTail {
                start: Dec(*start),
                cdf_start: Dec(*cdf_start),
                density_start: Dec(*density_start),
            },
            SegmentForm::RationalOverExp { rational, exp } => FormSpec::RationalOverExp {
                num: decs(&rational.num.0),
                den: decs(&rational.den.0),
                offset: Dec(exp.offset),
                scale: Dec(exp.scale),
                rate: Dec(exp.rate),
            },
        }
    }
}

impl From<&FormSpec> for SegmentForm {
    fn from(spec: &FormSpec) -> Self {
        match spec {
            FormSpec::Constant { value } => SegmentForm::Constant { value: value.0 },
            FormSpec::Linear { intercept, slope } => {
                SegmentForm::Linear { intercept: intercept.0, slope: slope.0 }
            }
            FormSpec::Rational { num, den } => SegmentForm::rational(floats(num), floats(den)),
            FormSpec::ExpAffine { offset, scale, rate } => SegmentForm::ExpAffine(ExpAffine {
                offset: offset.0,
                scale: scale.0,
                rate: rate.0,
            }),
            FormSpec::QuadBump { base, offset, quad, center } => SegmentForm::QuadBump {
                base: Box::new(SegmentForm::from(base.as_ref())),
                offset: offset.0,
                quad: quad.0,
                center: center.0,
            },
            FormSpec::RegularTail { start, cdf_start, density_start } => {
                SegmentForm::RegularTail {
                    start: start.0,
                    cdf_start: cdf_start.0,
                    density_start: density_start.0,
                }
            }
            FormSpec::MhrTail { start, cdf_start, density_start } => SegmentForm::MhrTail {
                start: start.0,
                cdf_start: cdf_start.0,
                density_start: density_start.0,
            },
            FormSpec::RationalOverExp { num, den, offset, scale, rate } => {
                SegmentForm::RationalOverExp {
                    rational: RationalForm::new(
                        Poly::new(floats(num)),
                        Poly::new(floats(den)),
                    ),
                    exp: ExpAffine { offset: offset.0, scale: scale.0, rate: rate.0 },
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub lo: Dec,
    pub hi: Dec,
    #[serde(flatten)]
    pub form: FormSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub loc: Dec,
    pub mass: Dec,
}

/// Serializable mirror of a full distribution. Building re-runs the whole
/// construction audit, so a tampered file cannot smuggle in an
/// inconsistent CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub label: String,
    pub segments: Vec<SegmentSpec>,
    pub atoms: Vec<AtomSpec>,
}

impl DistributionSpec {
    pub fn from_distribution(d: &PiecewiseDistribution) -> Self {
        DistributionSpec {
            label: d.label().to_string(),
            segments: d
                .segments()
                .iter()
                .map(|s| SegmentSpec {
                    lo: Dec(s.lo),
                    hi: Dec(s.hi),
                    form: FormSpec::from(&s.form),
                })
                .collect(),
            atoms: d
                .atoms()
                .iter()
                .map(|a| AtomSpec { loc: Dec(a.loc), mass: Dec(a.mass) })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<PiecewiseDistribution, BuildError> {
        PiecewiseDistribution::new(
            self.label.clone(),
            self.segments
                .iter()
                .map(|s| Segment::new(s.lo.0, s.hi.0, SegmentForm::from(&s.form)))
                .collect(),
            self.atoms.iter().map(|a| Atom { loc: a.loc.0, mass: a.mass.0 }).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub label: String,
    pub buyers: Vec<DistributionSpec>,
}

impl InstanceSpec {
    pub fn from_instance(inst: &Instance) -> Self {
        InstanceSpec {
            label: inst.label().to_string(),
            buyers: inst.buyers().iter().map(DistributionSpec::from_distribution).collect(),
        }
    }

    pub fn build(&self) -> Result<Instance, BuildError> {
        let buyers = self
            .buyers
            .iter()
            .map(|b| b.build())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Instance::new(self.label.clone(), buyers))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMemberSpec {
    pub instance: InstanceSpec,
    pub interval: (Dec, Dec),
    pub bump_price: Dec,
    pub nominal_gap: Dec,
}

/// Export form of a whole hard family: base, members, and the interval
/// table a distinguisher needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: String,
    pub eps: Dec,
    pub base: InstanceSpec,
    pub members: Vec<FamilyMemberSpec>,
}

impl FamilySpec {
    pub fn from_family(fam: &HardFamily) -> Self {
        FamilySpec {
            family: fam.family_tag.to_string(),
            eps: Dec(fam.eps),
            base: InstanceSpec::from_instance(&fam.base),
            members: fam
                .members
                .iter()
                .map(|m| FamilyMemberSpec {
                    instance: InstanceSpec::from_instance(&m.instance),
                    interval: (Dec(m.interval.0), Dec(m.interval.1)),
                    bump_price: Dec(m.bump_price),
                    nominal_gap: Dec(m.nominal_gap),
                })
                .collect(),
        }
    }
}
