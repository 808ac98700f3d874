//! Desk-scale reproductions of the non-Gaussian polynomial and Lorenz-63
//! forecast studies. Every study is a pure function of its configuration
//! and seed.

mod lorenz;
mod nongaussian;
mod poly;

pub use lorenz::{
    forecast_study, forecast_trial, geometric_mean, lorenz_rk4_step, rk4_step, LorenzParams,
    LorenzSpec, MomentErrors, SkillReport, StepSkill, TrialErrors, GEOMETRIC_FLOOR,
};
pub use nongaussian::{sample_nongaussian, NonGaussianSpec};
pub use poly::{
    mc_oracle, poly_f, polynomial_study, quadrature_mean_variance, McStats, Method, PolyRow,
    PolySpec, PolyStudyConfig, PolyStudyReport,
};
