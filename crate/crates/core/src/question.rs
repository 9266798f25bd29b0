//! One question and its ground-truth one-word answer per (world, seed, type).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::QuestionError;
use crate::names::NameTable;
use crate::rng::{derive_seed, SplitMix64};
use crate::templates::with_article;
use crate::world::{Attribute, CookState, Entity, EntityId, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Location,
    Existence,
    Attribute,
}

impl QuestionType {
    pub const ALL: [QuestionType; 3] = [QuestionType::Location, QuestionType::Existence, QuestionType::Attribute];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::Location => "location",
            QuestionType::Existence => "existence",
            QuestionType::Attribute => "attribute",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QuestionType::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| format!("unknown question type '{s}' (expected location, existence or attribute)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub qtype: QuestionType,
    pub text: String,
    /// The name the question asks about, as it is rendered in the game.
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<Attribute>,
    pub answer: String,
    /// The entity the question is about; absent for negative existence questions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_entity: Option<EntityId>,
}

/// The seed for question `index` of a world.
pub fn question_seed(world_seed: u64, index: u64) -> u64 {
    derive_seed(world_seed, "question", index)
}

pub fn make_question(world: &World, qtype: QuestionType, seed: u64) -> Result<Question, QuestionError> {
    let mut rng = SplitMix64::new(seed);
    match qtype {
        QuestionType::Location => make_location_question(world, &mut rng),
        QuestionType::Existence => make_existence_question(world, &mut rng),
        QuestionType::Attribute => make_attribute_question(world, &mut rng),
    }
}

/// Present entities whose displayed noun no other present entity shares.
fn uniquely_named(world: &World) -> Vec<&Entity> {
    let present: Vec<&Entity> = world.present_entities().collect();
    present
        .iter()
        .copied()
        .filter(|e| present.iter().filter(|o| o.display_name == e.display_name).count() == 1)
        .collect()
}

/// "Where is the soda?" The answer is the direct holder: a room, a holder's noun or "inventory".
pub fn make_location_question(world: &World, rng: &mut SplitMix64) -> Result<Question, QuestionError> {
    let eligible: Vec<&Entity> =
        uniquely_named(world).into_iter().filter(|e| e.has(Attribute::Portable) && !e.is_door()).collect();
    let subject = *rng.choose(&eligible).ok_or(QuestionError::NoEligibleSubject("location"))?;
    let holder = world.direct_holder(subject.id).expect("present portables are contained");
    Ok(Question {
        qtype: QuestionType::Location,
        text: format!("Where is the {}?", subject.display_name),
        subject: subject.display_name.clone(),
        attribute: None,
        answer: world.holder_token(holder).expect("holders exist"),
        subject_entity: Some(subject.id),
    })
}

/// "Is there a raw egg in the world?" Half the time about a present entity,
/// otherwise about a catalog noun that appears nowhere in the world.
pub fn make_existence_question(world: &World, rng: &mut SplitMix64) -> Result<Question, QuestionError> {
    let present: Vec<&Entity> = world.present_entities().filter(|e| !e.is_door()).collect();
    // an empty world can only be asked about absent things
    let positive = rng.chance(0.5) && !present.is_empty();
    let (subject, entity) = if positive {
        let e = *rng.choose(&present).expect("checked non-empty");
        (e.plain_name(), Some(e.id))
    } else {
        let names = NameTable::standard();
        let used: BTreeSet<&str> =
            world.entities().iter().flat_map(|e| [e.base_name.as_str(), e.display_name.as_str()]).collect();
        let absent: Vec<(crate::world::Category, &String)> = names
            .items
            .iter()
            .flat_map(|(c, nouns)| nouns.iter().map(move |n| (*c, n)))
            .filter(|(_, n)| !used.contains(n.as_str()))
            .collect();
        let (category, noun) = *rng.choose(&absent).ok_or(QuestionError::NameTableExhausted)?;
        (Entity::new(EntityId(u32::MAX), category, noun, None).plain_name(), None)
    };
    Ok(Question {
        qtype: QuestionType::Existence,
        text: format!("Is there {} in the world?", with_article(&subject)),
        subject,
        attribute: None,
        answer: if positive { "yes" } else { "no" }.to_owned(),
        subject_entity: entity,
    })
}

/// Attributes whose truth cannot change during an episode for this entity.
///
/// Raw food that is inedible becomes edible once cooked, so edibility is not
/// asked about it.
pub fn stable_attributes(e: &Entity) -> Vec<Attribute> {
    Attribute::ALL
        .into_iter()
        .filter(|a| !(*a == Attribute::Edible && e.cook_state == CookState::Raw && !e.has(Attribute::Edible)))
        .collect()
}

pub fn attribute_phrase(attr: Attribute) -> &'static str {
    match attr {
        Attribute::HeatSource => "a heat source",
        Attribute::Holder => "a holder",
        other => other.as_str(),
    }
}

/// "Is ghargh edible?" about an entity that carries a made-up name.
pub fn make_attribute_question(world: &World, rng: &mut SplitMix64) -> Result<Question, QuestionError> {
    let eligible: Vec<&Entity> = world.present_entities().filter(|e| e.has_made_up_name()).collect();
    let subject = *rng.choose(&eligible).ok_or(QuestionError::NoEligibleSubject("attribute"))?;
    let attribute = *rng.choose(&stable_attributes(subject)).expect("most attributes are stable");
    Ok(Question {
        qtype: QuestionType::Attribute,
        text: format!("Is {} {}?", subject.display_name, attribute_phrase(attribute)),
        subject: subject.display_name.clone(),
        attribute: Some(attribute),
        answer: if subject.has(attribute) { "yes" } else { "no" }.to_owned(),
        subject_entity: Some(subject.id),
    })
}
