use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "aliasing risk: quadratic phase step {phase_step:.3} rad exceeds pi/4; \
         use at least {min_n_points} frequency points"
    )]
    AliasingRisk {
        phase_step: f64,
        min_n_points: usize,
    },

    #[error("time grid too coarse: spacing {spacing:e} s, need at most {required:e} s")]
    GridTooCoarse { spacing: f64, required: f64 },

    #[error("unmeasurable width: {0}")]
    UnmeasurableWidth(String),

    #[error("MCA range clips {:.3}% of the delay distribution", clipped_fraction * 100.0)]
    RangeOverflow { clipped_fraction: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("histogram CSV row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("forward model evaluation failed: {0}")]
    Model(Box<Error>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}
