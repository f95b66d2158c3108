use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DbrError {
    #[error("support violation at index {index}: target mass {mass} where the reference measure is zero")]
    SupportViolation { index: usize, mass: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("class must have exactly {expected} members, found {found}")]
    ClassSizeError { expected: usize, found: usize },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("version space is empty before episode {episode}")]
    EmptyVersionSpace { episode: usize },

    #[error("product class has {size} members, above the enumeration guard of {limit}")]
    ClassTooLarge { size: usize, limit: usize },

    #[error("invalid scenario: {0}")]
    ScenarioError(String),
}

pub type Result<T> = std::result::Result<T, DbrError>;

pub(crate) fn precondition(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(DbrError::PreconditionViolation(msg()))
    }
}
