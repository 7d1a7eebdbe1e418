//! Gauss-Lucas inclusion checks and stability checks, each producing a
//! [`VerificationReport`].

mod gl;
mod multivariate;
mod report;
mod stability;

pub use gl::{verify_gl_entire, verify_gl_polynomial, EntireOptions, DEFAULT_DEGREE_CAP, EPS_ENTIRE, EPS_POLY};
pub use multivariate::{verify_gl_sections, verify_sections_direct, MultivariateSpec, SectionOptions, SparsePoly};
pub use report::{CheckResult, PointSet, Verdict, VerificationReport, Witness};
pub use stability::{
    is_theta_stable, stability_report, verify_corollary_stability, StabilityCone, StabilityEvidence, StabilityOptions,
    StabilitySubject, BOUNDARY_TOL,
};
