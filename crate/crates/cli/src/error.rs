use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<wpt_core::Error> for CliError {
    fn from(e: wpt_core::Error) -> Self {
        use wpt_core::Error as E;
        match e {
            E::Numeric(_) => CliError::Numeric(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            E::DegenerateCoupling => CliError::Numeric(e.to_string()),
            E::Invalid { .. } | E::Dimension { .. } | E::CoincidentCoils | E::EmptyProfile => {
                CliError::Validation(e.to_string())
            }
        }
    }
}
