use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at `{pointer}`: {message}")]
    Schema { pointer: String, message: String },
    #[error("semantic error: {0}")]
    Semantic(String),
    #[error("dsl error at {0}")]
    Dsl(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("{0}")]
    Core(privecon_core::Error),
}

impl From<privecon_core::Error> for CliError {
    fn from(e: privecon_core::Error) -> Self {
        use privecon_core::Error as E;
        match e {
            E::Budget(m) => CliError::Budget(m),
            E::SampledSet => CliError::Budget(e.to_string()),
            E::Dsl(d) => CliError::Dsl(d.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    /// Process exit code: 1 for input/schema, 2 for semantic, 3 for budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Schema { .. } => 1,
            CliError::Semantic(_) | CliError::Dsl(_) | CliError::Core(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let schema = CliError::Schema {
            pointer: "/kind".into(),
            message: "x".into(),
        };
        assert_eq!(schema.exit_code(), 1);
        assert_eq!(CliError::Semantic("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(privecon_core::Error::SampledSet).exit_code(), 3);
        assert_eq!(CliError::from(privecon_core::Error::NotMeasurable).exit_code(), 2);
    }
}
