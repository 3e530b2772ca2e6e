//! Built-in models.

pub mod linear_gaussian;
pub mod malaria;

pub use linear_gaussian::{
    kalman_fd_gradient, kalman_loglik, lg_simulate, KalmanResult, LinearGaussianModel,
    LinearGaussianSpec,
};
pub use malaria::{
    euler_maruyama_simulate, latent_force, malaria_drift, negbin_logpdf, periodic_bspline_basis,
    MalariaModel, MalariaPath, MalariaSpec,
};
