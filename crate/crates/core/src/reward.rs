//! Training-time reward signals: the episodic discovery bonus and the
//! sufficient-information bonus for each question type.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::command::{resolve_entity, Command, Feedback, Resolution, Scene, Verb};
use crate::question::{Question, QuestionType};
use crate::world::{Attribute, CookState, CutState, EntityId, Holder, LocationId, OpenState, World};

/// Weight of each of the two extra signals added to attribute-question sufficiency.
pub const ATTRIBUTE_EXTRA_WEIGHT: f64 = 0.1;

/// Lowercased alphanumeric word sequence of a text.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_ascii_lowercase).collect()
}

/// Whether `phrase` occurs in `text` as a run of whole words.
pub fn contains_phrase(text: &str, phrase: &str) -> bool {
    let needle = tokens(phrase);
    if needle.is_empty() {
        return false;
    }
    tokens(text).windows(needle.len()).any(|w| w == needle.as_slice())
}

/// Counts how often each observation string occurred this episode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodicCounter {
    seen: BTreeMap<String, u32>,
}

impl EpisodicCounter {
    /// 1.0 the first time `obs` is seen this episode, 0.0 afterwards.
    pub fn observe(&mut self, obs: &str) -> f64 {
        let n = self.seen.entry(obs.to_owned()).or_insert(0);
        *n += 1;
        if *n == 1 {
            1.0
        } else {
            0.0
        }
    }

    pub fn distinct(&self) -> usize {
        self.seen.len()
    }
}

/// Locations visited and containers seen open.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageTracker {
    pub visited_locations: BTreeSet<LocationId>,
    pub opened_containers: BTreeSet<EntityId>,
    pub total_locations: usize,
    pub total_containers: usize,
}

impl CoverageTracker {
    pub fn new(world: &World) -> Self {
        let mut t = Self {
            visited_locations: BTreeSet::new(),
            opened_containers: BTreeSet::new(),
            total_locations: world.locations().len(),
            total_containers: world.containers().count(),
        };
        t.update(world);
        t
    }

    pub fn update(&mut self, world: &World) {
        self.visited_locations.insert(world.player_at());
        for id in world.visible_entities() {
            let e = &world.entities()[id.0 as usize];
            if e.is_container() && e.open_state == OpenState::Open {
                self.opened_containers.insert(id);
            }
        }
    }

    pub fn ratio(&self) -> f64 {
        let total = self.total_locations + self.total_containers;
        if total == 0 {
            return 1.0;
        }
        (self.visited_locations.len() + self.opened_containers.len()) as f64 / total as f64
    }
}

/// The situations in which an outcome reveals an attribute of the subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceRow {
    /// Cut some other uncut cuttable while holding the subject and no other sharp thing.
    CutWhileHoldingSubject,
    /// Cut the subject while holding something sharp.
    CutSubject,
    EatSubject,
    DrinkSubject,
    /// Cook some other raw cookable next to the subject with no other heat source in reach.
    CookNextToSubject,
    /// Cook the subject next to a heat source.
    CookSubject,
    OpenSubject,
    CloseSubject,
    TakeSubject,
    /// The subject is shown with something on or in it.
    SubjectHoldsSomething,
    /// The subject is in the inventory.
    HoldingSubject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub step: u32,
    pub row: EvidenceRow,
    pub passed: bool,
    /// The attribute value this outcome implies.
    pub value: bool,
}

/// Informative outcomes gathered for one attribute question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeEvidence {
    pub attribute: Attribute,
    pub subject: EntityId,
    pub records: Vec<EvidenceRecord>,
}

impl AttributeEvidence {
    pub fn new(attribute: Attribute, subject: EntityId) -> Self {
        Self { attribute, subject, records: Vec::new() }
    }

    pub fn is_decisive(&self) -> bool {
        !self.records.is_empty()
    }

    /// The attribute value the evidence implies, if any.
    pub fn decided(&self) -> Option<bool> {
        self.records.first().map(|r| r.value)
    }

    fn push(&mut self, step: u32, row: EvidenceRow, passed: bool, value: Option<bool>) {
        if let Some(value) = value {
            self.records.push(EvidenceRecord { step, row, passed, value });
        }
    }

    /// Records what a command outcome reveals, judging state conditions on the
    /// world as it was before the command ran.
    pub fn update_command(&mut self, step: u32, before: &World, cmd: &Command, feedback: &Feedback) {
        let Some(object) = cmd.object.as_deref() else { return };
        let scene = Scene::new(before);
        let Resolution::Entity(target) = resolve_entity(before, &scene, cmd.modifier.as_deref(), object) else {
            return;
        };
        let subject = self.subject;
        if !before.exists(subject) {
            return;
        }
        let ok = feedback.success;
        let ent = |id: EntityId| &before.entities()[id.0 as usize];
        let holding = |id: EntityId| before.holding(id);
        let reachable = |id: EntityId| scene.reachable(before, id);
        let held_sharp_other_than = |skip: EntityId| {
            before.contents(Holder::Inventory).into_iter().any(|s| s != skip && ent(s).has(Attribute::Sharp))
        };
        // `pass`/`fail` give the implied value for each outcome, `None` when uninformative
        let verdict = |pass: Option<bool>, fail: Option<bool>| if ok { pass } else { fail };
        use Attribute as A;

        match (self.attribute, cmd.action) {
            (A::Sharp, v) if v.is_cut() && target != subject => {
                let t = ent(target);
                let others_sharp = before
                    .contents(Holder::Inventory)
                    .into_iter()
                    .any(|s| s != subject && s != target && ent(s).has(Attribute::Sharp));
                if holding(target) && t.cut_state == CutState::Uncut && holding(subject) && !others_sharp {
                    self.push(step, EvidenceRow::CutWhileHoldingSubject, ok, Some(ok));
                }
            }
            (A::Cuttable, v) if v.is_cut() && target == subject => {
                if holding(subject) && held_sharp_other_than(subject) && !ent(subject).cut_state.is_cut() {
                    self.push(step, EvidenceRow::CutSubject, ok, Some(ok));
                }
            }
            (A::Edible, Verb::Eat) if target == subject && holding(subject) => {
                self.push(step, EvidenceRow::EatSubject, ok, Some(ok));
            }
            (A::Drinkable, Verb::Drink) if target == subject && holding(subject) => {
                self.push(step, EvidenceRow::DrinkSubject, ok, Some(ok));
            }
            (A::HeatSource, Verb::Cook) if target != subject => {
                let t = ent(target);
                let other_heat = scene
                    .visible()
                    .iter()
                    .any(|&h| h != subject && reachable(h) && ent(h).has(Attribute::HeatSource));
                if holding(target) && t.cook_state == CookState::Raw && reachable(subject) && !other_heat {
                    self.push(step, EvidenceRow::CookNextToSubject, ok, Some(ok));
                }
            }
            (A::Cookable, Verb::Cook) if target == subject => {
                let heat_near = scene.visible().iter().any(|&h| reachable(h) && ent(h).has(Attribute::HeatSource));
                if holding(subject) && heat_near && !matches!(ent(subject).cook_state, CookState::Cooked(_)) {
                    self.push(step, EvidenceRow::CookSubject, ok, Some(ok));
                }
            }
            (A::Openable, Verb::Open) if target == subject => {
                if reachable(subject) && ent(subject).open_state != OpenState::Open {
                    self.push(step, EvidenceRow::OpenSubject, ok, Some(ok));
                }
            }
            (A::Openable, Verb::Close) if target == subject => {
                if reachable(subject) && ent(subject).open_state != OpenState::Closed {
                    self.push(step, EvidenceRow::CloseSubject, ok, Some(ok));
                }
            }
            (attr, Verb::Take) if target == subject && reachable(subject) => {
                let value = match attr {
                    // these all imply portability, so a failed take rules them out
                    A::Sharp | A::Cuttable | A::Edible | A::Drinkable | A::Cookable => verdict(None, Some(false)),
                    // these all exclude portability, so a successful take rules them out
                    A::Holder | A::HeatSource => verdict(Some(false), None),
                    A::Portable => Some(ok),
                    A::Openable => None,
                };
                self.push(step, EvidenceRow::TakeSubject, ok, value);
            }
            _ => {}
        }
    }

    /// Records what the current state shows, after a step has been applied.
    pub fn update_state(&mut self, step: u32, world: &World) {
        let subject = self.subject;
        if !world.exists(subject) {
            return;
        }
        let e = &world.entities()[subject.0 as usize];
        match self.attribute {
            Attribute::Holder => {
                let shown = world.visible_entities().contains(&subject)
                    && e.open_state != OpenState::Closed
                    && !world.contents(Holder::Entity(subject)).is_empty();
                if shown {
                    self.push(step, EvidenceRow::SubjectHoldsSomething, true, Some(true));
                }
            }
            Attribute::Portable if world.holding(subject) => {
                self.push(step, EvidenceRow::HoldingSubject, true, Some(true));
            }
            _ => {}
        }
    }
}

/// The sufficient-information bonus and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sufficiency {
    /// 0 or 1, except for negative existence questions where it is the coverage ratio.
    pub base: f64,
    pub total: f64,
}

pub fn sufficient_info_location(question: &Question, final_obs: &str) -> f64 {
    if contains_phrase(final_obs, &question.subject) {
        1.0
    } else {
        0.0
    }
}

pub fn sufficient_info_existence(question: &Question, final_obs: &str, coverage: &CoverageTracker) -> f64 {
    if question.answer == "yes" {
        sufficient_info_location(question, final_obs)
    } else {
        coverage.ratio()
    }
}

pub fn sufficient_info_attribute(evidence: &AttributeEvidence, subject_seen: bool, coverage: &CoverageTracker) -> Sufficiency {
    let base = if evidence.is_decisive() { 1.0 } else { 0.0 };
    let seen = if subject_seen { 1.0 } else { 0.0 };
    Sufficiency { base, total: base + ATTRIBUTE_EXTRA_WEIGHT * seen + ATTRIBUTE_EXTRA_WEIGHT * coverage.ratio() }
}

/// Dispatches on question type. `evidence` must be present for attribute questions.
pub fn sufficient_info(
    question: &Question,
    final_obs: &str,
    coverage: &CoverageTracker,
    evidence: Option<&AttributeEvidence>,
    subject_seen: bool,
) -> Sufficiency {
    match question.qtype {
        QuestionType::Location => {
            let v = sufficient_info_location(question, final_obs);
            Sufficiency { base: v, total: v }
        }
        QuestionType::Existence => {
            let v = sufficient_info_existence(question, final_obs, coverage);
            Sufficiency { base: v, total: v }
        }
        QuestionType::Attribute => {
            let evidence = evidence.expect("attribute questions track evidence");
            sufficient_info_attribute(evidence, subject_seen, coverage)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::{apply, parse};
    use crate::world::{Category, Direction, WorldBuilder};

    #[test]
    fn phrase_matching_respects_word_boundaries() {
        assert!(contains_phrase("You see a red apple on the floor.", "apple"));
        assert!(contains_phrase("You see a red apple on the floor.", "red apple"));
        assert!(!contains_phrase("You see a pineapple.", "apple"));
        assert!(contains_phrase("On the table you can see a diced red raw chicken.", "raw chicken"));
        assert!(!contains_phrase("anything", ""));
    }

    #[test]
    fn episodic_bonus_counts_first_sightings() {
        let mut c = EpisodicCounter::default();
        assert_eq!(c.observe("a"), 1.0);
        assert_eq!(c.observe("a"), 0.0);
        assert_eq!(c.observe("b"), 1.0);
        assert_eq!(c.distinct(), 2);
    }

    fn rooms(n: usize) -> World {
        let mut b = WorldBuilder::new(0);
        let ids: Vec<_> = (0..n).map(|i| b.location(["kitchen", "pantry", "garage", "attic"][i])).collect();
        for w in ids.windows(2) {
            b.connect(w[0], Direction::East, w[1], None);
        }
        b.build().unwrap()
    }

    #[test]
    fn coverage_of_a_start_room_in_four() {
        let w = rooms(4);
        let t = CoverageTracker::new(&w);
        assert_eq!(t.ratio(), 0.25);
    }

    #[test]
    fn full_coverage_is_one() {
        let mut w = rooms(2);
        let mut t = CoverageTracker::new(&w);
        apply(&mut w, &parse("go east").unwrap());
        t.update(&w);
        assert_eq!(t.ratio(), 1.0);
    }

    fn step(w: &mut World, ev: &mut AttributeEvidence, i: u32, raw: &str) -> Feedback {
        let before = w.clone();
        let cmd = parse(raw).unwrap();
        let fb = apply(w, &cmd);
        ev.update_command(i, &before, &cmd, &fb);
        ev.update_state(i, w);
        fb
    }

    #[test]
    fn cutting_a_carrot_while_holding_the_subject_decides_sharpness() {
        let mut b = WorldBuilder::new(0);
        let room = b.location("kitchen");
        let subject = b.entity(Category::SharpTool, "knife", None, Holder::Inventory);
        b.set_display_name(subject, "ghargh");
        b.entity(Category::Vegetable, "carrot", None, Holder::Inventory);
        b.entity(Category::Supporter, "table", None, Holder::Location(room));
        let mut w = b.build().unwrap();
        let mut ev = AttributeEvidence::new(Attribute::Sharp, subject);
        assert!(step(&mut w, &mut ev, 1, "slice carrot").success);
        assert_eq!(ev.decided(), Some(true));
    }

    #[test]
    fn failed_take_means_not_sharp() {
        let mut b = WorldBuilder::new(0);
        let room = b.location("kitchen");
        let subject = b.entity(Category::Supporter, "table", None, Holder::Location(room));
        b.set_display_name(subject, "ghargh");
        let mut w = b.build().unwrap();
        let mut ev = AttributeEvidence::new(Attribute::Sharp, subject);
        assert!(!step(&mut w, &mut ev, 1, "take ghargh").success);
        assert_eq!(ev.decided(), Some(false));
    }

    #[test]
    fn opening_an_open_thing_is_not_informative() {
        let mut b = WorldBuilder::new(0);
        let room = b.location("kitchen");
        let subject = b.entity(Category::Container, "chest", None, Holder::Location(room));
        b.set_open(subject, true).set_display_name(subject, "ghargh");
        let mut w = b.build().unwrap();
        let mut ev = AttributeEvidence::new(Attribute::Openable, subject);
        step(&mut w, &mut ev, 1, "open ghargh");
        assert!(!ev.is_decisive());
        assert!(step(&mut w, &mut ev, 2, "close ghargh").success);
        assert_eq!(ev.decided(), Some(true));
    }

    #[test]
    fn attribute_bonus_adds_the_two_extras() {
        let w = rooms(1);
        let cov = CoverageTracker::new(&w);
        let mut ev = AttributeEvidence::new(Attribute::Edible, EntityId(0));
        ev.push(1, EvidenceRow::EatSubject, true, Some(true));
        let s = sufficient_info_attribute(&ev, true, &cov);
        assert_eq!(s.base, 1.0);
        assert!((s.total - 1.2).abs() < 1e-12);
        let empty = AttributeEvidence::new(Attribute::Edible, EntityId(0));
        let s = sufficient_info_attribute(&empty, false, &cov);
        assert_eq!((s.base, s.total), (0.0, 0.1));
    }
}
