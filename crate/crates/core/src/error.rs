use crate::automata::EventId;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("generator `{name}` is malformed: {reason}")]
    Malformed { name: String, reason: String },

    #[error("event {event} is registered twice with different attributes")]
    ConflictingAttributes { event: EventId },

    #[error("event {event} used by `{generator}` has no entry in the event table")]
    UnregisteredEvent { generator: String, event: EventId },

    #[error("cannot selfloop event {event} in `{generator}`: it already labels a non-selfloop transition")]
    SelfloopConflict { generator: String, event: EventId },

    #[error("event {event} is not controllable")]
    NotControllableEvent { event: EventId },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{property} does not hold; witness {witness:?}")]
    PropertyViolated {
        property: String,
        witness: Vec<EventId>,
    },

    #[error("synthesis of `{name}` produced the empty language")]
    EmptySynthesis { name: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {reason}")]
    Format { path: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn malformed(name: &str, reason: impl Into<String>) -> Self {
        Error::Malformed {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input (files, manifests, arguments)
    /// rather than by a failed property check.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_input_error(),
            Error::PropertyViolated { .. } | Error::EmptySynthesis { .. } => false,
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
