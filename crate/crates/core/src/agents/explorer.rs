//! Deterministic text-only explorer.
//!
//! It reads observations through the template catalog, keeps a map of the
//! rooms it has seen, opens every door and container it meets, and stops as
//! soon as the text it has received settles the question. For attribute
//! questions it runs targeted probes (take, eat, slice, cook, ...) whose
//! feedback decides the answer.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::names::NameTable;
use crate::protocol::{Agent, AgentError, AgentMessage, ObsFrame};
use crate::question::{attribute_phrase, QuestionType};
use crate::world::{Attribute, Category, Direction};

use super::reader::{split_list, FeedbackMatch, Mention, Reader, RoomView, ThingKind};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Goal {
    Location(String),
    Existence(Vec<String>),
    Attribute(String, Attribute),
    Unknown,
}

fn parse_goal(qtype: QuestionType, text: &str) -> Goal {
    let body = text.trim_end_matches('?');
    match qtype {
        QuestionType::Location => match body.strip_prefix("Where is the ") {
            Some(s) => Goal::Location(s.to_owned()),
            None => Goal::Unknown,
        },
        QuestionType::Existence => {
            let s = body.strip_prefix("Is there ").and_then(|s| s.strip_suffix(" in the world"));
            match s {
                Some(s) => {
                    let s = s.strip_prefix("a ").or_else(|| s.strip_prefix("an ")).unwrap_or(s);
                    Goal::Existence(s.split(' ').map(str::to_owned).collect())
                }
                None => Goal::Unknown,
            }
        }
        QuestionType::Attribute => {
            let Some((subject, phrase)) = body.strip_prefix("Is ").and_then(|s| s.split_once(' ')) else {
                return Goal::Unknown;
            };
            match Attribute::ALL.into_iter().find(|a| attribute_phrase(*a) == phrase) {
                Some(a) => Goal::Attribute(subject.to_owned(), a),
                None => Goal::Unknown,
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct RoomMemo {
    exits: BTreeMap<Direction, Option<String>>,
    doors: BTreeMap<Direction, Mention>,
    closed: Vec<String>,
    items: Vec<String>,
}

const CUT_WORDS: [&str; 3] = ["sliced", "chopped", "diced"];
const COOKED_WORDS: [&str; 4] = ["fried", "roasted", "grilled", "cooked"];

fn has_word(name: &str, words: &[&str]) -> bool {
    name.split(' ').any(|w| words.contains(&w))
}

fn noun(name: &str) -> &str {
    name.rsplit(' ').next().unwrap_or(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PropUse {
    Cut,
    Cook,
}

/// Whether a seen item could serve as the prop; made-up names are unknown and tried last.
fn prop_rank(name: &str, use_: PropUse) -> Option<u8> {
    let category = NameTable::standard().category_of(noun(name));
    let fits = match use_ {
        PropUse::Cut => !has_word(name, &CUT_WORDS) && matches!(category, Some(Category::Fruit | Category::Vegetable | Category::Raw)),
        PropUse::Cook => {
            !has_word(name, &COOKED_WORDS) && matches!(category, Some(Category::Vegetable | Category::Raw))
        }
    };
    match category {
        _ if fits => Some(0),
        None => Some(1),
        Some(_) => None,
    }
}

pub struct ExplorerAgent {
    reader: &'static Reader,
    goal: Goal,
    rooms: BTreeMap<String, RoomMemo>,
    current: String,
    view: RoomView,
    inventory: Vec<Mention>,
    last_cmd: Option<String>,
    failed: BTreeSet<(String, String)>,
    verdict: Option<String>,
    gave_up: bool,
    subject: Option<(String, Option<ThingKind>, String)>,
    take_result: Option<bool>,
    prop: Option<String>,
    tried_props: BTreeSet<String>,
}

impl Default for ExplorerAgent {
    fn default() -> Self {
        Self::new()
    }
}

impl ExplorerAgent {
    pub fn new() -> Self {
        ExplorerAgent {
            reader: Reader::standard(),
            goal: Goal::Unknown,
            rooms: BTreeMap::new(),
            current: String::new(),
            view: RoomView::default(),
            inventory: Vec::new(),
            last_cmd: None,
            failed: BTreeSet::new(),
            verdict: None,
            gave_up: false,
            subject: None,
            take_result: None,
            prop: None,
            tried_props: BTreeSet::new(),
        }
    }

    /// The answer the received text has decided, if any.
    pub fn verdict(&self) -> Option<&str> {
        self.verdict.as_deref()
    }

    fn holding(&self, name: &str) -> bool {
        self.inventory.iter().any(|m| m.noun() == noun(name))
    }

    fn observe(&mut self, frame: &ObsFrame) {
        if frame.step == 0 {
            self.goal = parse_goal(frame.qtype, &frame.question);
        }
        let previous = std::mem::take(&mut self.current);
        self.view = self.reader.parse_observation(&frame.observation);
        self.current = self.view.room.clone().unwrap_or(previous.clone());

        if let Some(dir) = self.last_cmd.as_deref().and_then(|c| c.strip_prefix("go ")).and_then(Direction::parse) {
            if previous != self.current && !previous.is_empty() {
                self.rooms.entry(previous.clone()).or_default().exits.insert(dir, Some(self.current.clone()));
                self.rooms.entry(self.current.clone()).or_default().exits.insert(dir.opposite(), Some(previous.clone()));
            }
        }
        let memo = self.rooms.entry(self.current.clone()).or_default();
        for (dir, door) in self.view.exits() {
            memo.exits.entry(dir).or_insert(None);
            if let Some(d) = door {
                memo.doors.insert(dir, d.clone());
            }
        }
        memo.closed = self
            .view
            .things()
            .filter(|(k, m)| *k == ThingKind::Container && m.open == Some(false))
            .map(|(_, m)| m.name.clone())
            .collect();
        memo.items = self.view.items().into_iter().map(|(_, m)| m.name.clone()).collect();

        let fb = self.reader.parse_feedback(&frame.feedback);
        if let Some(fb) = &fb {
            self.track_inventory(fb);
        }
        if let Some(cmd) = self.last_cmd.clone() {
            let failed = fb.as_ref().is_some_and(|f| !is_success(&f.key));
            if failed {
                self.failed.insert((previous.clone(), cmd.clone()));
            }
            if let Some(fb) = &fb {
                self.interpret(&cmd, fb);
            }
        }
        if self.verdict.is_none() {
            self.check_sightings();
        }
    }

    fn track_inventory(&mut self, fb: &FeedbackMatch) {
        let thing = fb.var("thing");
        match fb.key.as_str() {
            "inventory" => self.inventory = split_list(fb.var("list")),
            "inventory_empty" => self.inventory.clear(),
            "taken_floor" | "taken_from" => self.inventory.push(Mention::parse(thing)),
            "dropped" | "put" | "inserted" | "eaten" | "drunk" => {
                if let Some(i) = self.inventory.iter().position(|m| m.name == thing) {
                    self.inventory.remove(i);
                }
            }
            "cooked" | "cut" => {
                if let Some(m) = self.inventory.iter_mut().find(|m| m.name == thing) {
                    *m = Mention::parse(fb.var("result"));
                }
            }
            _ => {}
        }
    }

    /// Where the subject of a location question was seen, or whether an
    /// existence subject was seen.
    fn check_sightings(&mut self) {
        match &self.goal {
            Goal::Location(subject) => {
                if self.inventory.iter().any(|m| m.noun() == subject) {
                    self.verdict = Some("inventory".to_owned());
                    return;
                }
                let found = self.view.items().into_iter().find(|(_, m)| m.noun() == subject).map(|(h, _)| h);
                if let Some(holder) = found {
                    self.verdict = Some(holder.unwrap_or(&self.current).to_owned());
                }
            }
            Goal::Existence(words) => {
                let ends_with = |name: &str| {
                    let toks: Vec<&str> = name.split(' ').collect();
                    toks.len() >= words.len() && toks[toks.len() - words.len()..].iter().zip(words).all(|(a, b)| a == b)
                };
                let seen = self.inventory.iter().any(|m| ends_with(&m.name))
                    || self.view.things().any(|(_, m)| ends_with(&m.name))
                    || self.view.items().iter().any(|(_, m)| ends_with(&m.name));
                if seen {
                    self.verdict = Some("yes".to_owned());
                }
            }
            Goal::Attribute(subject, _) => {
                if let Some(m) = self.inventory.iter().find(|m| m.noun() == subject) {
                    self.subject = Some((m.name.clone(), Some(ThingKind::Item), self.current.clone()));
                    return;
                }
                let kind_of = self.view.things().find(|(_, m)| m.noun() == subject).map(|(k, m)| (m.name.clone(), Some(k)));
                let nested = || self.view.items().into_iter().find(|(_, m)| m.noun() == subject).map(|(_, m)| (m.name.clone(), Some(ThingKind::Item)));
                if let Some((name, kind)) = kind_of.or_else(nested) {
                    self.subject = Some((name, kind, self.current.clone()));
                }
            }
            Goal::Unknown => {}
        }
    }

    fn decide(&mut self, v: bool) {
        self.verdict = Some(if v { "yes" } else { "no" }.to_owned());
    }

    /// Reads probe feedback for attribute questions.
    fn interpret(&mut self, cmd: &str, fb: &FeedbackMatch) {
        let Goal::Attribute(subject, attr) = self.goal.clone() else { return };
        let about_subject = noun(fb.var("thing")) == subject;
        let key = fb.key.as_str();
        if cmd.starts_with("take ") && about_subject {
            match key {
                "taken_floor" | "taken_from" | "already_have" => {
                    self.take_result = Some(true);
                    match attr {
                        Attribute::Portable => self.decide(true),
                        Attribute::Holder | Attribute::HeatSource | Attribute::Openable => self.decide(false),
                        _ => {}
                    }
                }
                "fixed_in_place" => {
                    self.take_result = Some(false);
                    match attr {
                        Attribute::Holder => {
                            let kind = self.subject.as_ref().and_then(|s| s.1);
                            self.decide(matches!(kind, Some(ThingKind::Container | ThingKind::Supporter)));
                        }
                        Attribute::HeatSource | Attribute::Openable => {}
                        _ => self.decide(false),
                    }
                }
                _ => {}
            }
            return;
        }
        if about_subject {
            let v = match (attr, key) {
                (Attribute::Edible, "eaten") | (Attribute::Drinkable, "drunk") => Some(true),
                (Attribute::Edible, "inedible") | (Attribute::Drinkable, "undrinkable") => Some(false),
                (Attribute::Cuttable, "cut" | "already_cut" | "no_sharp") => Some(true),
                (Attribute::Cuttable, "not_cuttable") => Some(false),
                (Attribute::Cookable, "cooked" | "already_cooked" | "no_heat") => Some(true),
                (Attribute::Cookable, "not_cookable") => Some(false),
                (Attribute::Openable, "opened" | "already_open" | "closed" | "already_closed") => Some(true),
                (Attribute::Openable, "not_openable" | "not_closable") => Some(false),
                _ => None,
            };
            if let Some(v) = v {
                self.decide(v);
                return;
            }
        }
        // prop probes
        let Some(prop) = self.prop.clone() else { return };
        if noun(fb.var("thing")) != noun(&prop) {
            return;
        }
        match (attr, key) {
            (Attribute::Sharp, "cut") => self.decide(true),
            (Attribute::Sharp, "no_sharp") => self.decide(false),
            (Attribute::HeatSource, "cooked") => {
                if noun(fb.var("source")) == subject {
                    self.decide(true);
                } else {
                    // another heat source here always wins; nothing more to learn
                    self.gave_up = true;
                }
            }
            (Attribute::HeatSource, "no_heat") => self.decide(false),
            (_, "not_cuttable" | "already_cut" | "not_cookable" | "already_cooked" | "fixed_in_place") => {
                self.tried_props.insert(prop);
                self.prop = None;
            }
            _ => {}
        }
    }

    /// Next step toward `room`, opening a closed door on the way.
    fn route(&self, room: &str) -> Option<String> {
        let mut prev: BTreeMap<&str, (&str, Direction)> = BTreeMap::new();
        let mut queue = VecDeque::from([self.current.as_str()]);
        let mut seen = BTreeSet::from([self.current.as_str()]);
        while let Some(r) = queue.pop_front() {
            if r == room {
                break;
            }
            for (dir, to) in &self.rooms.get(r)?.exits {
                if let Some(to) = to.as_deref() {
                    if seen.insert(to) {
                        prev.insert(to, (r, *dir));
                        queue.push_back(to);
                    }
                }
            }
        }
        let mut at = room;
        let mut first = None;
        while at != self.current {
            let (from, dir) = *prev.get(at)?;
            first = Some(dir);
            at = from;
        }
        first.map(|d| self.move_cmd(d))
    }

    fn move_cmd(&self, dir: Direction) -> String {
        match self.rooms.get(&self.current).and_then(|m| m.doors.get(&dir)) {
            Some(door) if door.open == Some(false) => format!("open {}", door.name),
            _ => format!("go {}", dir.as_str()),
        }
    }

    fn tried(&self, room: &str, cmd: &str) -> bool {
        self.failed.contains(&(room.to_owned(), cmd.to_owned()))
    }

    /// Work left in a room: a closed container or an unexplored exit.
    fn pending_in(&self, room: &str) -> Option<String> {
        let memo = self.rooms.get(room)?;
        for c in &memo.closed {
            let cmd = format!("open {c}");
            if !self.tried(room, &cmd) {
                return Some(cmd);
            }
        }
        for (dir, to) in &memo.exits {
            if to.is_some() {
                continue;
            }
            let cmd = match memo.doors.get(dir) {
                Some(door) if door.open == Some(false) => format!("open {}", door.name),
                _ => format!("go {}", dir.as_str()),
            };
            if !self.tried(room, &cmd) {
                return Some(cmd);
            }
        }
        None
    }

    /// Next exploration command, or `None` once everything reachable is seen.
    fn explore(&self) -> Option<String> {
        if let Some(cmd) = self.pending_in(&self.current) {
            return Some(cmd);
        }
        let mut queue = VecDeque::from([self.current.clone()]);
        let mut seen = BTreeSet::from([self.current.clone()]);
        while let Some(r) = queue.pop_front() {
            if r != self.current && self.pending_in(&r).is_some() {
                return self.route(&r);
            }
            for to in self.rooms.get(&r).into_iter().flat_map(|m| m.exits.values().flatten()) {
                if seen.insert(to.clone()) {
                    queue.push_back(to.clone());
                }
            }
        }
        None
    }

    /// Issues `cmd` in `room`, walking there first.
    fn at(&self, room: &str, cmd: String) -> Option<String> {
        if room == self.current {
            Some(cmd)
        } else {
            self.route(room)
        }
    }

    fn attribute_step(&mut self) -> Option<String> {
        let Goal::Attribute(subject, attr) = self.goal.clone() else { return None };
        let Some((name, _, room)) = self.subject.clone() else { return self.explore() };
        let held = self.holding(&name);
        if attr == Attribute::Openable {
            let cmd = match self.view.things().find(|(_, m)| m.noun() == subject) {
                Some((_, m)) if m.open == Some(true) => format!("close {subject}"),
                _ => format!("open {subject}"),
            };
            return if held { Some(cmd) } else { self.at(&room, cmd) };
        }
        if !held && self.take_result.is_none() {
            return self.at(&room, format!("take {subject}"));
        }
        match attr {
            Attribute::Edible => Some(format!("eat {subject}")),
            Attribute::Drinkable => Some(format!("drink {subject}")),
            Attribute::Cuttable => Some(format!("slice {subject}")),
            Attribute::Cookable => Some(format!("cook {subject}")),
            Attribute::Sharp => {
                // only the subject and the prop may be held
                if let Some(extra) = self.inventory.iter().find(|m| {
                    m.noun() != subject && self.prop.as_deref().is_none_or(|p| noun(p) != m.noun())
                }) {
                    return Some(format!("drop {}", extra.name));
                }
                self.prop_step(PropUse::Cut, None)
            }
            Attribute::HeatSource => self.prop_step(PropUse::Cook, Some(room)),
            _ => None,
        }
    }

    /// Fetches a prop and uses it on the subject's behalf.
    fn prop_step(&mut self, use_: PropUse, room: Option<String>) -> Option<String> {
        let verb = match use_ {
            PropUse::Cut => "slice",
            PropUse::Cook => "cook",
        };
        if let Some(prop) = self.prop.clone() {
            if self.holding(&prop) {
                let cmd = format!("{verb} {}", self.inventory.iter().find(|m| m.noun() == noun(&prop)).map_or(prop.clone(), |m| m.name.clone()));
                return match &room {
                    Some(r) => self.at(r, cmd),
                    None => Some(cmd),
                };
            }
            if let Some(r) = self.rooms.iter().find(|(_, m)| m.items.contains(&prop)).map(|(r, _)| r.clone()) {
                let cmd = format!("take {prop}");
                if !self.tried(&r, &cmd) {
                    return self.at(&r, cmd);
                }
            }
            self.tried_props.insert(prop);
            self.prop = None;
        }
        // for cutting, drop a failed prop before trying the next one
        if use_ == PropUse::Cut {
            if let Goal::Attribute(subject, _) = &self.goal {
                if let Some(m) = self.inventory.iter().find(|m| m.noun() != subject) {
                    return Some(format!("drop {}", m.name));
                }
            }
        }
        let subject = match &self.goal {
            Goal::Attribute(s, _) => s.clone(),
            _ => String::new(),
        };
        let mut candidates: Vec<(u8, String)> = self
            .inventory
            .iter()
            .map(|m| m.name.clone())
            .chain(self.rooms.values().flat_map(|m| m.items.iter().cloned()))
            .filter(|n| noun(n) != subject && !self.tried_props.contains(n))
            .filter_map(|n| prop_rank(&n, use_).map(|r| (r, n)))
            .collect();
        candidates.sort_by_key(|(r, _)| *r);
        match candidates.into_iter().next() {
            Some((_, n)) => {
                self.prop = Some(n);
                self.prop_step(use_, room)
            }
            None => self.explore(),
        }
    }

    fn next_command(&mut self, frame: &ObsFrame) -> String {
        if self.verdict.is_some() || self.gave_up {
            return "wait".to_owned();
        }
        if frame.step == 0 {
            return "inventory".to_owned();
        }
        let next = match &self.goal {
            Goal::Location(_) => self.explore(),
            Goal::Existence(_) => {
                let next = self.explore();
                if next.is_none() {
                    self.verdict = Some("no".to_owned());
                }
                next
            }
            Goal::Attribute(..) => self.attribute_step(),
            Goal::Unknown => None,
        };
        match next {
            Some(cmd) if !self.tried(&self.current, &cmd) => cmd,
            _ => {
                self.gave_up = true;
                "wait".to_owned()
            }
        }
    }

    fn fallback(&self) -> String {
        match &self.goal {
            Goal::Location(_) => self.current.clone(),
            _ => "no".to_owned(),
        }
    }
}

fn is_success(key: &str) -> bool {
    matches!(
        key,
        "taken_floor"
            | "taken_from"
            | "dropped"
            | "put"
            | "inserted"
            | "opened"
            | "closed"
            | "eaten"
            | "drunk"
            | "cooked"
            | "cut"
            | "inventory"
            | "inventory_empty"
            | "waited"
            | "examine_plain"
            | "examine_open"
            | "examine_closed"
    )
}

impl Agent for ExplorerAgent {
    fn act(&mut self, frame: &ObsFrame) -> Result<AgentMessage, AgentError> {
        if frame.done {
            return Ok(AgentMessage::answer(self.verdict.clone().unwrap_or_else(|| self.fallback())));
        }
        self.observe(frame);
        let cmd = self.next_command(frame);
        self.last_cmd = Some(cmd.clone());
        Ok(AgentMessage::cmd(cmd))
    }
}
