//! Piecewise value distributions on [0,1] with explicit atoms.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * `cdf_at(x)` is the left-continuous CDF `Pr[X < x]`. A posted price `p`
//!   sells exactly when the value is at least `p`, so the sale probability is
//!   `survival_at(p) = 1 - cdf_at(p)` and an atom sitting at `p` still buys.
//! * Segments tile `(0, 1]`. Each segment's form is the analytic CDF on its
//!   half-open interval `(lo, hi]`; a knot belongs to the segment on its left.
//! * Atoms sit only at segment boundaries. Across a knot carrying an atom the
//!   CDF jumps by exactly the atom mass; without one it is continuous.
//! * `density_at` is the right-hand derivative at kinks and `+inf` at atoms.

use rand::RngCore;

use crate::forms::SegmentForm;

/// Tolerance for a knot jump that is supposed to match an atom mass exactly.
const ATOM_JUMP_TOL: f64 = 1e-12;
/// Tolerance for knots that are supposed to be continuous.
const CONTINUITY_TOL: f64 = 1e-9;
/// Tolerance on total probability mass.
const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub form: SegmentForm,
}

impl Segment {
    pub fn new(lo: f64, hi: f64, form: SegmentForm) -> Self {
        Segment { lo, hi, form }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub loc: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum BuildError {
    #[error("segments do not tile (0,1]: {0}")]
    Tiling(String),
    #[error("invalid segment parameters: {0}")]
    Params(String),
    #[error("invalid atom: {0}")]
    Atom(String),
    #[error("cdf decreasing inside segment [{lo}, {hi}] near x={at}")]
    Monotonicity { lo: f64, hi: f64, at: f64 },
    #[error("cdf value {value} outside [0,1] at x={at}")]
    Range { at: f64, value: f64 },
    #[error("cdf jump {jump} at knot {at} does not match atom mass {atom}")]
    KnotJump { at: f64, jump: f64, atom: f64 },
    #[error("total mass {0} differs from 1")]
    TotalMass(f64),
    #[error("density at x={at} disagrees with finite differences: closed form {closed}, stencil {stencil}")]
    DensityCheck { at: f64, closed: f64, stencil: f64 },
}

/// A value distribution assembled from analytic CDF segments plus atoms.
///
/// Construction performs a full consistency audit (tiling, monotonicity,
/// knot jumps versus atom masses, unit total mass, and a finite-difference
/// cross-check of every closed-form density), so any instance that exists is
/// safe to evaluate.
#[derive(Debug, Clone)]
pub struct PiecewiseDistribution {
    label: String,
    segments: Vec<Segment>,
    atoms: Vec<Atom>,
}

impl PiecewiseDistribution {
    pub fn new(
        label: impl Into<String>,
        segments: Vec<Segment>,
        mut atoms: Vec<Atom>,
    ) -> Result<Self, BuildError> {
        let label = label.into();
        if segments.is_empty() {
            return Err(BuildError::Tiling("no segments".into()));
        }
        for seg in &segments {
            if !seg.lo.is_finite() || !seg.hi.is_finite() || seg.lo >= seg.hi {
                return Err(BuildError::Tiling(format!(
                    "segment [{}, {}] is empty or non-finite",
                    seg.lo, seg.hi
                )));
            }
            seg.form.validate_params().map_err(BuildError::Params)?;
        }
        if segments[0].lo != 0.0 {
            return Err(BuildError::Tiling(format!(
                "first segment starts at {}, not 0",
                segments[0].lo
            )));
        }
        if segments.last().unwrap().hi != 1.0 {
            return Err(BuildError::Tiling(format!(
                "last segment ends at {}, not 1",
                segments.last().unwrap().hi
            )));
        }
        for pair in segments.windows(2) {
            if pair[0].hi != pair[1].lo {
                return Err(BuildError::Tiling(format!(
                    "gap or overlap between {} and {}",
                    pair[0].hi, pair[1].lo
                )));
            }
        }

        atoms.sort_by(|a, b| a.loc.total_cmp(&b.loc));
        let knots: Vec<f64> = std::iter::once(0.0)
            .chain(segments.iter().map(|s| s.hi))
            .collect();
        for pair in atoms.windows(2) {
            if pair[0].loc == pair[1].loc {
                return Err(BuildError::Atom(format!("duplicate atom at {}", pair[0].loc)));
            }
        }
        for atom in &atoms {
            if atom.mass <= 0.0 || atom.mass > 1.0 || !atom.mass.is_finite() {
                return Err(BuildError::Atom(format!(
                    "atom at {} has mass {}",
                    atom.loc, atom.mass
                )));
            }
            if !knots.contains(&atom.loc) {
                return Err(BuildError::Atom(format!(
                    "atom at {} is not a segment boundary",
                    atom.loc
                )));
            }
        }

        let dist = PiecewiseDistribution { label, segments, atoms };
        dist.check_monotone_grid()?;
        dist.check_knots()?;
        dist.check_total_mass()?;
        dist.check_densities()?;
        Ok(dist)
    }

    fn check_monotone_grid(&self) -> Result<(), BuildError> {
        for seg in &self.segments {
            if matches!(seg.form, SegmentForm::Constant { .. }) {
                continue;
            }
            let n = 128;
            let mut prev = seg.form.cdf(seg.lo);
            for k in 0..=n {
                let x = seg.lo + seg.width() * k as f64 / n as f64;
                let v = seg.form.cdf(x);
                if !(-CONTINUITY_TOL..=1.0 + CONTINUITY_TOL).contains(&v) {
                    return Err(BuildError::Range { at: x, value: v });
                }
                if v < prev - 1e-12 {
                    return Err(BuildError::Monotonicity { lo: seg.lo, hi: seg.hi, at: x });
                }
                prev = v;
            }
        }
        Ok(())
    }

    fn check_knots(&self) -> Result<(), BuildError> {
        // Left edge: the CDF just above 0 equals the mass of an atom at 0.
        let head = self.segments[0].form.cdf(0.0);
        let jump_checks = std::iter::once((0.0, 0.0, head)).chain(
            self.segments.windows(2).map(|pair| {
                (pair[0].hi, pair[0].form.cdf(pair[0].hi), pair[1].form.cdf(pair[1].lo))
            }),
        );
        for (at, left, right) in jump_checks {
            let jump = right - left;
            let atom = self.atom_mass_at(at);
            if atom > 0.0 {
                if (jump - atom).abs() > ATOM_JUMP_TOL {
                    return Err(BuildError::KnotJump { at, jump, atom });
                }
            } else if jump.abs() > CONTINUITY_TOL {
                return Err(BuildError::KnotJump { at, jump, atom: 0.0 });
            }
        }
        Ok(())
    }

    fn check_total_mass(&self) -> Result<(), BuildError> {
        let total = self.segments.last().unwrap().form.cdf(1.0) + self.atom_mass_at(1.0);
        if (total - 1.0).abs() > MASS_TOL {
            return Err(BuildError::TotalMass(total));
        }
        Ok(())
    }

    /// Compare each closed-form density to a five-point stencil at interior
    /// points. The acceptance band is self-calibrating: the difference between
    /// the h and h/2 stencils bounds the truncation error, so segments with
    /// violent higher derivatives (sharp tails at small widths) are judged
    /// fairly instead of against a fixed absolute tolerance.
    fn check_densities(&self) -> Result<(), BuildError> {
        let stencil = |g: &dyn Fn(f64) -> f64, x: f64, h: f64| {
            (-g(x + 2.0 * h) + 8.0 * g(x + h) - 8.0 * g(x - h) + g(x - 2.0 * h)) / (12.0 * h)
        };
        for seg in &self.segments {
            if matches!(seg.form, SegmentForm::Constant { .. }) {
                continue;
            }
            let h = (3e-6f64).min(seg.width() / 16.0);
            for frac in [0.3, 0.5, 0.7] {
                let x = seg.lo + seg.width() * frac;
                let g = |t: f64| seg.form.cdf(t);
                let fd_h = stencil(&g, x, h);
                let fd_h2 = stencil(&g, x, 0.5 * h);
                let f = seg.form.pdf(x);
                let band = 1e-8 * f.abs().max(1.0) + 3.0 * (fd_h - fd_h2).abs();
                if (fd_h2 - f).abs() > band {
                    return Err(BuildError::DensityCheck { at: x, closed: f, stencil: fd_h2 });
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// All segment boundaries, including 0 and 1, in increasing order.
    pub fn knots(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.segments.iter().map(|s| s.hi))
            .collect()
    }

    pub fn atom_mass_at(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.loc == x)
            .map(|a| a.mass)
            .unwrap_or(0.0)
    }

    /// Segment owning x for CDF purposes: lo < x <= hi.
    fn segment_left(&self, x: f64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.hi < x);
        &self.segments[idx.min(self.segments.len() - 1)]
    }

    /// Segment owning x for density purposes: lo <= x < hi, last one at x = 1.
    fn segment_right(&self, x: f64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.hi <= x);
        &self.segments[idx.min(self.segments.len() - 1)]
    }

    /// Pr[X < x].
    pub fn cdf_at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x > 1.0 {
            return 1.0;
        }
        self.segment_left(x).form.cdf(x).clamp(0.0, 1.0)
    }

    /// Pr[X >= x]: the probability a posted price x sells.
    pub fn survival_at(&self, x: f64) -> f64 {
        1.0 - self.cdf_at(x)
    }

    /// Density, taking the right-hand branch at kinks; +inf at atoms.
    pub fn density_at(&self, x: f64) -> f64 {
        if self.atom_mass_at(x) > 0.0 {
            return f64::INFINITY;
        }
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        self.segment_right(x).form.pdf(x)
    }

    /// Density derivative, right-hand branch at kinks; undefined at atoms.
    pub fn density_prime_at(&self, x: f64) -> f64 {
        if self.atom_mass_at(x) > 0.0 {
            return f64::NAN;
        }
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        self.segment_right(x).form.pdf_prime(x)
    }

    /// x - (1 - F(x)) / f(x), the marginal-revenue transform. An atom pins the
    /// value to its location (infinite density); on a flat stretch (f = 0)
    /// the transform is undefined and `None` is returned.
    pub fn virtual_value(&self, x: f64) -> Option<f64> {
        if self.atom_mass_at(x) > 0.0 {
            return Some(x);
        }
        let f = self.density_at(x);
        if f <= 0.0 {
            return None;
        }
        Some(x - self.survival_at(x) / f)
    }

    /// f(x) / (1 - F(x)); +inf at atoms, `None` once the support is exhausted.
    pub fn hazard_rate(&self, x: f64) -> Option<f64> {
        if self.atom_mass_at(x) > 0.0 {
            return Some(f64::INFINITY);
        }
        let sur = self.survival_at(x);
        if sur <= 0.0 {
            return None;
        }
        Some(self.density_at(x) / sur)
    }

    /// Smallest point of the support.
    pub fn support_infimum(&self) -> f64 {
        if self.atoms.first().map(|a| a.loc) == Some(0.0) {
            return 0.0;
        }
        for seg in &self.segments {
            if seg.form.cdf(seg.hi) > 1e-15 {
                if seg.form.cdf(seg.lo) > 1e-15 {
                    return seg.lo;
                }
                // Positivity boundary inside the segment.
                let (mut lo, mut hi) = (seg.lo, seg.hi);
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    if seg.form.cdf(mid) > 1e-15 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
        }
        1.0
    }

    /// Generalized inverse of the right-continuous CDF:
    /// inf { x : Pr[X <= x] >= u }. Feeding uniform draws through this
    /// reproduces the distribution, atoms included.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if u == 0.0 {
            return self.support_infimum();
        }
        for seg in &self.segments {
            if u <= seg.form.cdf(seg.lo) {
                return seg.lo;
            }
            if u <= seg.form.cdf(seg.hi) {
                return seg.form.inverse(u, seg.lo, seg.hi);
            }
        }
        1.0
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.inverse_cdf(standard_uniform(rng))
    }

    /// Revenue of selling at quantile q: q times the price b(q) = F^{-1}(1-q)
    /// at which the sale probability is exactly q. Concave iff regular.
    pub fn revenue_at_quantile(&self, q: f64) -> f64 {
        q * self.inverse_cdf(1.0 - q)
    }
}

/// Uniform draw in [0,1) from the top 53 bits of one u64.
///
/// Written out directly so sampled traces stay byte-identical across releases
/// of the rand crate family.
pub fn standard_uniform(rng: &mut dyn RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
