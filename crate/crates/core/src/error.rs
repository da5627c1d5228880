use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its documented domain.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// The data cannot produce the requested statistic (too few groups or
    /// rows, or a zero within-group term).
    DegenerateInput(&'static str),
    /// A row names a category index that is not below `k`.
    CategoryOutOfRange { row: usize, category: usize, k: usize },
    /// A value is non-finite or (for bounded datasets) outside `[0, 1]`.
    ValueOutOfRange { row: usize },
}

impl Error {
    pub(crate) const fn invalid(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::DegenerateInput(why) => write!(f, "degenerate input: {why}"),
            Error::CategoryOutOfRange { row, category, k } => {
                write!(f, "row {row}: category {category} is not below k = {k}")
            }
            Error::ValueOutOfRange { row } => write!(f, "row {row}: value outside [0, 1]"),
        }
    }
}

impl core::error::Error for Error {}
