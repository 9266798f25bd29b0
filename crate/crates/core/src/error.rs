use thiserror::Error;

use crate::world::{Attribute, EntityId, LocationId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("unknown location {0}")]
    UnknownLocation(LocationId),
    #[error("entity {0} is not placed in the containment tree")]
    NotContained(EntityId),
    #[error("attribute set violates entailment: {0}")]
    Entailment(&'static str),
    #[error("entity {id} state is inconsistent with its attributes: {detail}")]
    InconsistentState { id: EntityId, detail: String },
    #[error("containment cycle through entity {0}")]
    ContainmentCycle(EntityId),
    #[error("entity {holder} cannot hold other entities")]
    NotAHolder { holder: EntityId },
    #[error("exits between {a} and {b} are not symmetric")]
    AsymmetricExit { a: LocationId, b: LocationId },
    #[error("token '{token}' missing from the {lexicon} lexicon")]
    LexiconMissing { token: String, lexicon: &'static str },
    #[error("entities share the name '{0}' without distinct modifiers")]
    AmbiguousName(String),
    #[error("door {0} is invalid: {1}")]
    BadDoor(EntityId, &'static str),
    #[error("unsupported snapshot version {0}")]
    SnapshotVersion(u32),
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("name table exhausted: {0}")]
    NamesExhausted(&'static str),
    #[error("generated world failed validation: {0}")]
    Invalid(#[from] WorldError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuestionError {
    #[error("no entity is eligible as the subject of a {0} question")]
    NoEligibleSubject(&'static str),
    #[error("every name in the name table is present in this world")]
    NameTableExhausted,
    #[error("no attribute of the subject can be asked without ambiguity")]
    NoStableAttribute(Attribute),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpisodeError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Question(#[from] QuestionError),
    #[error("episode is already done; send an answer")]
    AlreadyDone,
    #[error("episode is not done yet; issue `wait` before answering")]
    NotDone,
    #[error("episode was already answered")]
    AlreadyAnswered,
    #[error("invalid episode config: {0}")]
    InvalidConfig(String),
}
