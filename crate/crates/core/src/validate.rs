//! Numerical shape validators for value distributions.
//!
//! Two nested shape classes matter here, both stated as sign conditions on
//! closed-form margins so the checks need no division:
//!
//! * regular: `2 f(x)^2 + (1 - F(x)) f'(x) >= 0`, equivalently the
//!   marginal-revenue transform `x - (1-F)/f` is non-decreasing;
//! * monotone hazard rate: `f(x)^2 + (1 - F(x)) f'(x) >= 0`, equivalently
//!   `f / (1-F)` is non-decreasing. This is the stricter class.
//!
//! The margin is evaluated on a grid inside every non-constant segment, and
//! in addition the transform's one-sided limits are compared across every
//! knot, because a distribution can be smooth on each piece yet break
//! monotonicity exactly at a kink or an atom.

use serde::{Deserialize, Serialize};

use crate::distribution::PiecewiseDistribution;
use crate::forms::SegmentForm;

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Total grid budget across all checked segments.
    pub points: usize,
    /// Distance kept away from each knot; side limits are checked separately.
    pub knot_exclusion: f64,
    /// Margins down to -margin_tol still count as passing.
    pub margin_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points: 10_000, knot_exclusion: 1e-7, margin_tol: 1e-9 }
    }
}

impl GridSpec {
    pub fn with_points(points: usize) -> Self {
        GridSpec { points, ..GridSpec::default() }
    }
}

const MIN_POINTS_PER_SEGMENT: usize = 10;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ValidateError {
    #[error("grid of {points} points cannot cover {segments} segments at {MIN_POINTS_PER_SEGMENT} points each")]
    GridTooCoarse { points: usize, segments: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeCheck {
    Regular,
    Mhr,
}

impl ShapeCheck {
    fn margin(self, f: f64, fp: f64, survival: f64) -> f64 {
        match self {
            ShapeCheck::Regular => 2.0 * f * f + survival * fp,
            ShapeCheck::Mhr => f * f + survival * fp,
        }
    }

    /// One-sided limit of the monotone transform at a knot.
    fn side_value(self, x: f64, f: f64, survival: f64) -> f64 {
        match self {
            ShapeCheck::Regular => {
                if f <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    x - survival / f
                }
            }
            ShapeCheck::Mhr => {
                if survival <= 1e-15 {
                    f64::INFINITY
                } else {
                    f / survival
                }
            }
        }
    }

    /// Transform value contributed by an atom: infinite density collapses the
    /// marginal-revenue transform to the location and the hazard to +inf.
    fn atom_value(self, loc: f64) -> f64 {
        match self {
            ShapeCheck::Regular => loc,
            ShapeCheck::Mhr => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub label: String,
    pub property: ShapeCheck,
    pub passed: bool,
    /// Grid points actually evaluated (0 for purely atomic distributions).
    pub grid_points: usize,
    /// Smallest margin seen on the grid; None when nothing was evaluated.
    pub min_margin: Option<f64>,
    /// Location of the smallest margin.
    pub argmin: Option<f64>,
    /// Margins down to -tolerance still pass.
    pub tolerance: f64,
    /// Breakpoints excluded from the grid; their side limits are compared
    /// directly instead.
    pub excluded_knots: Vec<f64>,
    /// Whether the transform's side limits are non-decreasing across knots.
    pub knot_monotone: bool,
    /// Knot with the largest monotonicity violation, if any.
    pub worst_knot: Option<f64>,
    /// Size of that violation (negative).
    pub worst_knot_drop: Option<f64>,
}

pub fn check_regularity(
    dist: &PiecewiseDistribution,
    grid: GridSpec,
) -> Result<ValidationReport, ValidateError> {
    run_check(dist, grid, ShapeCheck::Regular)
}

pub fn check_mhr(
    dist: &PiecewiseDistribution,
    grid: GridSpec,
) -> Result<ValidationReport, ValidateError> {
    run_check(dist, grid, ShapeCheck::Mhr)
}

fn is_checked(form: &SegmentForm) -> bool {
    !matches!(form, SegmentForm::Constant { .. })
}

fn run_check(
    dist: &PiecewiseDistribution,
    grid: GridSpec,
    check: ShapeCheck,
) -> Result<ValidationReport, ValidateError> {
    let segments = dist.segments();
    let checked: Vec<usize> = (0..segments.len())
        .filter(|&i| is_checked(&segments[i].form))
        .collect();

    if !checked.is_empty() && grid.points < MIN_POINTS_PER_SEGMENT * checked.len() {
        return Err(ValidateError::GridTooCoarse {
            points: grid.points,
            segments: checked.len(),
        });
    }

    let total_width: f64 = checked.iter().map(|&i| segments[i].width()).sum();
    let mut grid_points = 0usize;
    let mut min_margin: Option<f64> = None;
    let mut argmin: Option<f64> = None;
    let mut excluded_knots: Vec<f64> = Vec::new();

    for &i in &checked {
        let seg = &segments[i];
        excluded_knots.push(seg.lo);
        excluded_knots.push(seg.hi);
        let share = (grid.points as f64 * seg.width() / total_width).round() as usize;
        let n = share.max(MIN_POINTS_PER_SEGMENT);
        let excl = grid.knot_exclusion.min(seg.width() / 4.0);
        let (lo, hi) = (seg.lo + excl, seg.hi - excl);
        for j in 0..n {
            let x = lo + (hi - lo) * j as f64 / (n - 1) as f64;
            let f = seg.form.pdf(x);
            let fp = seg.form.pdf_prime(x);
            let survival = 1.0 - seg.form.cdf(x);
            let m = check.margin(f, fp, survival);
            if min_margin.is_none_or(|cur| m < cur) {
                min_margin = Some(m);
                argmin = Some(x);
            }
        }
        grid_points += n;
    }

    excluded_knots.dedup();
    let (knot_monotone, worst_knot, worst_knot_drop) = knot_side_limits(dist, check);

    let margin_ok = min_margin.is_none_or(|m| m >= -grid.margin_tol);
    Ok(ValidationReport {
        label: dist.label().to_string(),
        property: check,
        passed: margin_ok && knot_monotone,
        grid_points,
        min_margin,
        argmin,
        tolerance: grid.margin_tol,
        excluded_knots,
        knot_monotone,
        worst_knot,
        worst_knot_drop,
    })
}

/// Compare the transform's side limits at every knot, in the order
/// left limit, atom (if present), right limit. Constant segments contribute
/// nothing: a flat CDF stretch has no density on either side of the knot.
fn knot_side_limits(
    dist: &PiecewiseDistribution,
    check: ShapeCheck,
) -> (bool, Option<f64>, Option<f64>) {
    let segments = dist.segments();
    let mut monotone = true;
    let mut worst: Option<(f64, f64)> = None;

    for (idx, &k) in dist.knots().iter().enumerate() {
        let mut seq: Vec<f64> = Vec::with_capacity(3);
        if idx > 0 {
            let left = &segments[idx - 1];
            if is_checked(&left.form) {
                seq.push(check.side_value(k, left.form.pdf(k), 1.0 - left.form.cdf(k)));
            }
        }
        let mass = dist.atom_mass_at(k);
        if mass > 0.0 {
            seq.push(check.atom_value(k));
        }
        if idx < segments.len() {
            let right = &segments[idx];
            if is_checked(&right.form) {
                seq.push(check.side_value(k, right.form.pdf(k), 1.0 - right.form.cdf(k)));
            }
        }
        for pair in seq.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || a == f64::NEG_INFINITY || b == f64::INFINITY {
                continue;
            }
            let drop = b - a;
            let tol = 1e-9 * a.abs().max(1.0);
            if drop < -tol {
                monotone = false;
                if worst.is_none_or(|(_, d)| drop < d) {
                    worst = Some((k, drop));
                }
            }
        }
    }

    let (worst_knot, worst_drop) = match worst {
        Some((k, d)) => (Some(k), Some(d)),
        None => (None, None),
    };
    (monotone, worst_knot, worst_drop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{Atom, PiecewiseDistribution, Segment};
    use crate::forms::{ExpAffine, SegmentForm};

    fn pareto_style_base() -> PiecewiseDistribution {
        PiecewiseDistribution::new(
            "pareto-style",
            vec![
                Segment::new(0.0, 0.5, SegmentForm::rational(vec![0.0, 1.0], vec![1.0, 1.0])),
                Segment::new(0.5, 1.0, SegmentForm::rational(vec![-1.0, 3.0], vec![0.0, 3.0])),
            ],
            vec![Atom { loc: 1.0, mass: 1.0 / 3.0 }],
        )
        .unwrap()
    }

    #[test]
    fn saturated_rational_is_regular_but_not_mhr() {
        let d = pareto_style_base();
        let reg = check_regularity(&d, GridSpec::default()).unwrap();
        assert!(reg.passed, "{reg:?}");
        // Both branches sit exactly on the regularity boundary.
        assert!(reg.min_margin.unwrap().abs() < 1e-10);
        assert!(reg.knot_monotone);

        let mhr = check_mhr(&d, GridSpec::default()).unwrap();
        assert!(!mhr.passed, "{mhr:?}");
        // On 1 - 1/(x+1) the hazard margin is -1/(x+1)^4, at most -1/16 here.
        assert!(mhr.min_margin.unwrap() < -0.05);
    }

    #[test]
    fn constant_hazard_is_mhr_and_regular() {
        let atom = (-0.4f64).exp();
        let d = PiecewiseDistribution::new(
            "truncated-exponential",
            vec![Segment::new(
                0.0,
                1.0,
                SegmentForm::ExpAffine(ExpAffine { offset: 1.0, scale: -1.0, rate: -0.4 }),
            )],
            vec![Atom { loc: 1.0, mass: atom }],
        )
        .unwrap();
        let mhr = check_mhr(&d, GridSpec::default()).unwrap();
        assert!(mhr.passed, "{mhr:?}");
        assert!(mhr.min_margin.unwrap().abs() < 1e-10);
        let reg = check_regularity(&d, GridSpec::default()).unwrap();
        assert!(reg.passed);
        // Regularity margin exceeds the hazard margin by f^2 > 0.
        assert!(reg.min_margin.unwrap() > 0.01);
    }

    #[test]
    fn kink_violation_is_caught_at_the_knot() {
        // Piecewise linear, slopes 1.8 then 0.2: each piece is fine on its own
        // but the marginal-revenue transform drops from 0.444 to 0 at the kink.
        let d = PiecewiseDistribution::new(
            "kinked",
            vec![
                Segment::new(0.0, 0.5, SegmentForm::Linear { intercept: 0.0, slope: 1.8 }),
                Segment::new(0.5, 1.0, SegmentForm::Linear { intercept: 0.8, slope: 0.2 }),
            ],
            vec![],
        )
        .unwrap();
        let reg = check_regularity(&d, GridSpec::default()).unwrap();
        assert!(!reg.passed, "{reg:?}");
        assert!(!reg.knot_monotone);
        assert_eq!(reg.worst_knot, Some(0.5));
        assert!((reg.worst_knot_drop.unwrap() + 4.0 / 9.0).abs() < 1e-9);
        // Margins inside each linear piece are 2 * slope^2 > 0.
        assert!(reg.min_margin.unwrap() > 0.0);

        let mhr = check_mhr(&d, GridSpec::default()).unwrap();
        assert!(!mhr.passed);
        assert!((mhr.worst_knot_drop.unwrap() - (2.0 - 18.0)).abs() < 1e-9);
    }

    #[test]
    fn point_mass_passes_trivially() {
        let d = PiecewiseDistribution::new(
            "point-mass-at-zero",
            vec![Segment::new(0.0, 1.0, SegmentForm::Constant { value: 1.0 })],
            vec![Atom { loc: 0.0, mass: 1.0 }],
        )
        .unwrap();
        for report in [
            check_regularity(&d, GridSpec::default()).unwrap(),
            check_mhr(&d, GridSpec::default()).unwrap(),
        ] {
            assert!(report.passed);
            assert_eq!(report.grid_points, 0);
            assert!(report.min_margin.is_none());
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let d = pareto_style_base();
        let err = check_regularity(&d, GridSpec::with_points(15)).unwrap_err();
        assert!(matches!(err, ValidateError::GridTooCoarse { .. }), "{err}");
    }

    #[test]
    fn narrow_segments_keep_a_minimum_of_points()  {
        // A 1e-4-wide middle segment still gets its floor of grid points.
        let d = PiecewiseDistribution::new(
            "narrow-middle",
            vec![
                Segment::new(0.0, 0.5, SegmentForm::Linear { intercept: 0.0, slope: 1.0 }),
                Segment::new(0.5, 0.5001, SegmentForm::Linear { intercept: 0.0, slope: 1.0 }),
                Segment::new(0.5001, 1.0, SegmentForm::Linear { intercept: 0.0, slope: 1.0 }),
            ],
            vec![],
        )
        .unwrap();
        let report = check_regularity(&d, GridSpec::default()).unwrap();
        assert!(report.grid_points >= 10_000);
        assert!(report.passed, "{report:?}");
    }
}
