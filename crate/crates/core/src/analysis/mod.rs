//! Diagnostics on simulated trajectories: generator evaluation, residuals
//! of the weak and mild formulations, moment functionals, Osgood majorants,
//! stability experiments and inequality audits.

pub mod audit;
pub mod generator;
pub mod moments;
pub mod osgood;
pub mod residuals;
pub mod stability;
pub mod test_functions;

pub use audit::{audit_inequality, write_audit_report, AuditFamily, AuditReport};
pub use generator::{apply_generator, collision_term, generator_pairing, AngleSamples};
pub use moments::{
    default_probes, lambda_singular, moment_c_gamma, moment_report, psi_integrand, second_moment,
    LambdaEstimate, MomentReport, PsiValue,
};
pub use osgood::{osgood_closed_form, osgood_majorant, OsgoodSpec, RateFunction};
pub use residuals::{mild_form_residual, weak_form_residual, Collisions, ResidualPoint, WeakAccumulator};
pub use stability::{
    fit_k, run_pair, stability_experiment, write_stability_report, CouplingMode, KFit, PairRun,
    StabilityConfig, StabilityReport, StabilityRow,
};
pub use test_functions::{TestFunction, VelocityFactor};
