use thiserror::Error;

/// Errors raised by the numerical layers of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The argument lies outside the domain of the function (e.g. the pole of `n_l` at 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// The root scan ran out of range before finding the requested roots.
    #[error("eigenfrequency scan exhausted after bracket [{lo}, {hi}] with {found} of {wanted} roots")]
    Bracket {
        lo: f64,
        hi: f64,
        found: usize,
        wanted: usize,
    },

    /// dD/domega vanished at a root, so the implicit derivative is undefined.
    #[error("degenerate root at omega = {omega}: |dD/domega| = {slope:e}")]
    DegenerateRoot { omega: f64, slope: f64 },

    /// A Bessel product overflowed or otherwise produced a non-finite value.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// The full Bogoliubov integration left its unitarity budget.
    #[error(
        "unitarity deviation {deviation:e} exceeds budget {budget:e} at t = {t}; \
         retry with a smaller step (current dt = {dt:e})"
    )]
    Unitarity {
        t: f64,
        deviation: f64,
        budget: f64,
        dt: f64,
    },

    /// A closed form was asked for outside the configuration it describes.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The ratio test in the shift criterion divides by v_o - v_i = 0.
    #[error("condition vacuously extreme: v_o = v_i")]
    VacuouslyExtreme,
}

pub type Result<T> = std::result::Result<T, Error>;
