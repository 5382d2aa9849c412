//! Error types shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Mass has reached the edge of the truncated domain.
    #[error(
        "domain too small: boundary cells carry {boundary_max_rel:.3e} of the field maximum \
         (limit {limit:.1e}); boundary mass fraction {mass_fraction:.3e}"
    )]
    DomainTooSmall {
        boundary_max_rel: f64,
        mass_fraction: f64,
        limit: f64,
    },

    /// Cauchy-Schwarz near-equality: the multiplier system is singular.
    #[error(
        "degenerate state: multiplier denominator 2IK - V^2 = {denom:.3e} below guard {guard:.3e} \
         (Cauchy-Schwarz near-equality)"
    )]
    DegenerateMultipliers { denom: f64, guard: f64 },

    #[error("CFL violation: max|u| dt / h = {cfl:.3} exceeds 0.5")]
    CflViolation { cfl: f64 },

    #[error("time step produced a non-finite field value")]
    NonFiniteField,

    #[error("projection Newton failed to converge in {iters} iterations (|dE|={de:.3e}, |dI|={di:.3e})")]
    ProjectionFailed { iters: usize, de: f64, di: f64 },

    /// Radial mean-field iteration stalled; caller should continue in b.
    #[error(
        "mean-field iteration did not converge in {iters} iterations at (a={a}, b={b}); \
         residual {residual:.3e}; try approaching this b by continuation with smaller steps"
    )]
    MeanFieldNonConvergence {
        a: f64,
        b: f64,
        iters: usize,
        residual: f64,
    },

    #[error("b = {b} outside the admissible range b < 8*pi")]
    InvalidInverseTemperature { b: f64 },

    #[error("microcanonical target (E={e}, I={i}) appears unattainable: {reason}")]
    NoMaximizer { e: f64, i: f64, reason: String },

    #[error("degenerate vortex configuration: |grad H|^2 = {grad_sq:.3e} below {guard:.3e}")]
    DegenerateConfiguration { grad_sq: f64, guard: f64 },

    #[error("{count} particle(s) outside the deposition grid")]
    ParticlesOutsideGrid { count: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("error at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap a step error with the simulation time at which it occurred.
    pub fn at_time(self, t: f64) -> Error {
        Error::AtTime {
            t,
            source: Box::new(self),
        }
    }
}
