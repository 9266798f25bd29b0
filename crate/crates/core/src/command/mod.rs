//! Command grammar, entity resolution and the transition function.
//!
//! Commands are `action [modifier...] [object]` token sequences. Parsing only
//! checks the verb; object tokens are resolved against the visible entities
//! when the command is applied.

mod apply;
mod render;
mod valid;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::templates::Catalog;
use crate::world::{EntityId, World};

pub use apply::{apply, apply_str, Scene};
pub use render::{describe, render_inventory, render_observation};
pub use valid::valid_commands;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Look,
    Inventory,
    Go,
    Examine,
    Open,
    Close,
    Eat,
    Drink,
    Drop,
    Take,
    Put,
    Insert,
    Cook,
    Slice,
    Chop,
    Dice,
    Wait,
}

impl Verb {
    pub const ALL: [Verb; 17] = [
        Verb::Look,
        Verb::Inventory,
        Verb::Go,
        Verb::Examine,
        Verb::Open,
        Verb::Close,
        Verb::Eat,
        Verb::Drink,
        Verb::Drop,
        Verb::Take,
        Verb::Put,
        Verb::Insert,
        Verb::Cook,
        Verb::Slice,
        Verb::Chop,
        Verb::Dice,
        Verb::Wait,
    ];

    pub fn as_str(self) -> &'static str {
        crate::world::ACTIONS[self as usize]
    }

    pub fn parse(token: &str) -> Option<Verb> {
        Verb::ALL.into_iter().find(|v| v.as_str() == token)
    }

    /// Verbs that take no object at all.
    pub fn is_bare(self) -> bool {
        matches!(self, Verb::Look | Verb::Inventory | Verb::Wait)
    }

    pub fn is_cut(self) -> bool {
        matches!(self, Verb::Slice | Verb::Chop | Verb::Dice)
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Command {
    pub action: Verb,
    /// Every token between the verb and the object, space-joined.
    pub modifier: Option<String>,
    pub object: Option<String>,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    Empty,
    UnknownVerb(String),
}

impl ParseError {
    pub fn feedback(&self, catalog: &Catalog) -> String {
        match self {
            ParseError::Empty => catalog.feedback("empty", &[]),
            ParseError::UnknownVerb(_) => catalog.feedback("unknown_verb", &[]),
        }
    }
}

/// Tokenizes on whitespace, lowercases, and splits into verb, modifiers and object.
pub fn parse(raw: &str) -> Result<Command, ParseError> {
    let tokens: Vec<String> = raw.split_whitespace().map(str::to_lowercase).collect();
    let Some((first, rest)) = tokens.split_first() else {
        return Err(ParseError::Empty);
    };
    let action = Verb::parse(first).ok_or_else(|| ParseError::UnknownVerb(first.clone()))?;
    let (object, modifier) = match rest.split_last() {
        None => (None, None),
        Some((last, [])) => (Some(last.clone()), None),
        Some((last, mods)) => (Some(last.clone()), Some(mods.join(" "))),
    };
    Ok(Command { action, modifier, object, raw: raw.to_owned() })
}

/// Outcome category of an applied command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Moved,
    Opened,
    Closed,
    Taken,
    Dropped,
    Put,
    Inserted,
    Eaten,
    Drunk,
    Cooked,
    Cut,
    Examined,
    Looked,
    Waited,
    NoOp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub text: String,
    pub success: bool,
    pub effect: Effect,
}

impl Feedback {
    pub fn fail(text: String) -> Self {
        Self { text, success: false, effect: Effect::NoOp }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Entity(EntityId),
    NotVisible,
    Ambiguous(Vec<EntityId>),
}

/// Finds the visible entity a player means by `modifier object`.
///
/// The object must equal the entity's displayed noun and every modifier word
/// must be one of its adjectives.
pub fn resolve_entity(world: &World, scene: &Scene, modifier: Option<&str>, object: &str) -> Resolution {
    let words: Vec<&str> = modifier.map(|m| m.split(' ').collect()).unwrap_or_default();
    let matches: Vec<EntityId> = scene
        .visible()
        .iter()
        .copied()
        .filter(|id| {
            let e = &world.entities()[id.0 as usize];
            e.display_name == object && {
                let adjectives = e.adjectives();
                words.iter().all(|w| adjectives.contains(w))
            }
        })
        .collect();
    match matches.len() {
        0 => Resolution::NotVisible,
        1 => Resolution::Entity(matches[0]),
        _ => Resolution::Ambiguous(matches),
    }
}
