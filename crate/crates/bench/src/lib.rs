//! Shared fixtures for the kernel benchmarks.

use pricelab::hard_instances::{two_mhr_25_base, two_regular_25_base};
use pricelab::{FamilyTag, HardFamily, Instance};

/// Regular-class two-buyer base with the revenue plateau at 1/3.
pub fn regular_base() -> Instance {
    two_regular_25_base()
}

/// MHR-class two-buyer base with the revenue plateau at 0.7.
pub fn mhr_base() -> Instance {
    two_mhr_25_base()
}

/// K=2 regular family at a comfortably feasible perturbation size.
pub fn small_family() -> HardFamily {
    FamilyTag::ThreeRegular3.build(0.02).expect("eps well inside the feasible range")
}

/// Price grid that hits every distinct revenue level of the plateau bases.
pub fn probe_prices() -> Vec<f64> {
    (1..=200).map(|i| i as f64 / 200.0).collect()
}
