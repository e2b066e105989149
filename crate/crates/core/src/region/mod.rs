//! Stability certificates for 1-D two-component mixtures and the parameter
//! and purity formulas behind the pruned MinDiam seeding.

mod certificate;
mod purity;

pub use certificate::{
    certify_prism_k3, certify_prism_k3_mirrored, certify_prism_k3_with, certify_region,
    certify_square_k2, certify_square_k2_with, containment_oracle, Certificate, CertificateMode,
    Containment, RegionKind, RegionSpec,
};
pub use purity::{
    check_assumptions, compute_init_params, impurity_bound, purity_radii, radius_r,
    radius_r_tilde, worst_case_impurity, AssumptionCheck, ImpurityBound, InitParams,
    PurityBounds, WEIGHT_GRID_STEP,
};
