use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// A closed form hits a removable or genuine singularity.
    #[error("singular evaluation of {what} at modulus m = {m} (1 - m = {m_comp:e})")]
    Singular {
        what: &'static str,
        m: f64,
        m_comp: f64,
    },

    /// The input describes a degenerate wave (zero amplitude, h = h_c, ...).
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// The family curve for this oscillation count never reaches the
    /// requested sensitivity.
    #[error("no family member for sensitivity {sensitivity} with n = {n}: {detail}")]
    NoSolution {
        sensitivity: f64,
        n: u32,
        detail: String,
    },

    /// The root lies closer to m = 1 than double precision can resolve.
    #[error("modulus root lies below 1 - m = {floor:e}; beyond double-precision resolution")]
    PrecisionLimit { floor: f64 },

    #[error("step size underflow at t = {t} (|y| = {norm:e}, h = {step:e})")]
    StepSizeUnderflow { t: f64, norm: f64, step: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("integration exceeded {max_steps} steps before t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    /// The comparison window is too short for amplitude/phase estimates.
    #[error("comparison window too short: {0}")]
    WindowTooShort(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }
}
