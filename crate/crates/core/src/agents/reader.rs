//! Parses observation and feedback text back into structure using the
//! template catalog. Only the text an agent receives is used.

use std::collections::BTreeMap;

use regex::Regex;

use crate::templates::Catalog;
use crate::world::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThingKind {
    Container,
    Supporter,
    Fixture,
    Item,
}

/// A mentioned thing, split into its name and an optional open state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub name: String,
    pub open: Option<bool>,
}

impl Mention {
    /// "an open fridge" -> name "fridge", open Some(true).
    pub fn parse(phrase: &str) -> Mention {
        let bare = strip_article(phrase.trim());
        if let Some(rest) = bare.strip_prefix("open ") {
            return Mention { name: rest.to_owned(), open: Some(true) };
        }
        if let Some(rest) = bare.strip_prefix("closed ") {
            return Mention { name: rest.to_owned(), open: Some(false) };
        }
        Mention { name: bare.to_owned(), open: None }
    }

    /// Last word of the name: the noun commands and answers refer to.
    pub fn noun(&self) -> &str {
        self.name.rsplit(' ').next().unwrap_or(&self.name)
    }
}

fn strip_article(s: &str) -> &str {
    s.strip_prefix("a ").or_else(|| s.strip_prefix("an ")).unwrap_or(s)
}

/// Splits "a red apple, a knife and an egg" into mentions.
pub fn split_list(list: &str) -> Vec<Mention> {
    let mut parts: Vec<&str> = list.split(", ").collect();
    if let Some(last) = parts.pop() {
        match last.rsplit_once(" and ") {
            Some((a, b)) => {
                parts.push(a);
                parts.push(b);
            }
            None => parts.push(last),
        }
    }
    parts.into_iter().filter(|p| !p.is_empty()).map(Mention::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sentence {
    Intro { room: String },
    Thing { kind: ThingKind, mention: Mention },
    Empty,
    Contents { holder: String, items: Vec<Mention> },
    Exit { dir: Direction, door: Option<Mention> },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoomView {
    pub room: Option<String>,
    pub sentences: Vec<Sentence>,
    pub skipped: Vec<String>,
}

impl RoomView {
    pub fn things(&self) -> impl Iterator<Item = (ThingKind, &Mention)> {
        self.sentences.iter().filter_map(|s| match s {
            Sentence::Thing { kind, mention } => Some((*kind, mention)),
            _ => None,
        })
    }

    pub fn exits(&self) -> impl Iterator<Item = (Direction, Option<&Mention>)> {
        self.sentences.iter().filter_map(|s| match s {
            Sentence::Exit { dir, door } => Some((*dir, door.as_ref())),
            _ => None,
        })
    }

    /// Every portable-looking mention with the holder noun it sits in or on
    /// (`None` for the floor).
    pub fn items(&self) -> Vec<(Option<&str>, &Mention)> {
        let mut out = Vec::new();
        for s in &self.sentences {
            match s {
                Sentence::Thing { kind: ThingKind::Item, mention } => out.push((None, mention)),
                Sentence::Contents { holder, items } => {
                    let noun = holder.rsplit(' ').next().unwrap_or(holder);
                    out.extend(items.iter().map(|m| (Some(noun), m)));
                }
                _ => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Intro,
    Thing(ThingKind),
    Empty,
    Contents,
    DoorExit,
    PlainExit,
}

struct Pattern<K> {
    key: K,
    re: Regex,
    literal_len: usize,
}

/// Turns "You see {thing}." into an anchored regex with named groups.
fn compile(template: &str, anchor_end: bool) -> (Regex, usize) {
    let mut src = String::from("^");
    let mut literal_len = 0;
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let close = open + rest[open..].find('}').expect("placeholders are closed");
        src.push_str(&regex::escape(&rest[..open]));
        literal_len += open;
        let name = &rest[open + 1..close];
        let class = match name {
            "room" | "dir" | "verb" => "[a-z]+",
            _ => "[a-z][a-z ,']*?",
        };
        src.push_str(&format!("(?P<{name}>{class})"));
        rest = &rest[close + 1..];
    }
    src.push_str(&regex::escape(rest));
    literal_len += rest.len();
    src.push_str(if anchor_end { "$" } else { "(?: |$)" });
    (Regex::new(&src).expect("templates compile"), literal_len)
}

pub struct Reader {
    room: Vec<Pattern<Slot>>,
    feedback: Vec<Pattern<String>>,
}

/// A feedback string matched against a template: its key and placeholder values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackMatch {
    pub key: String,
    pub vars: BTreeMap<String, String>,
}

impl FeedbackMatch {
    pub fn var(&self, name: &str) -> &str {
        self.vars.get(name).map(String::as_str).unwrap_or("")
    }
}

impl Reader {
    pub fn new(catalog: &Catalog) -> Reader {
        let r = &catalog.room;
        let mut room = Vec::new();
        let mut add = |slot: Slot, templates: &[String]| {
            for t in templates {
                let (re, literal_len) = compile(t, false);
                room.push(Pattern { key: slot, re, literal_len });
            }
        };
        add(Slot::Intro, &r.intro);
        add(Slot::Thing(ThingKind::Container), &r.container);
        add(Slot::Thing(ThingKind::Supporter), &r.supporter);
        add(Slot::Thing(ThingKind::Fixture), &r.fixture);
        add(Slot::Thing(ThingKind::Item), &r.item);
        add(Slot::Empty, std::slice::from_ref(&r.container_empty));
        add(Slot::Contents, &[r.container_contents.clone(), r.supporter_contents.clone()]);
        add(Slot::DoorExit, &r.door_exit);
        add(Slot::PlainExit, &r.plain_exit);
        let feedback = catalog
            .feedback
            .iter()
            .map(|(k, t)| {
                let (re, literal_len) = compile(t, true);
                Pattern { key: k.clone(), re, literal_len }
            })
            .collect();
        Reader { room, feedback }
    }

    pub fn standard() -> &'static Reader {
        static READER: std::sync::OnceLock<Reader> = std::sync::OnceLock::new();
        READER.get_or_init(|| Reader::new(Catalog::standard()))
    }

    /// Parses a room description sentence by sentence. Text that matches no
    /// template is skipped up to the end of its sentence.
    pub fn parse_observation(&self, text: &str) -> RoomView {
        let mut view = RoomView::default();
        let mut pos = 0;
        while pos < text.len() {
            let rest = &text[pos..];
            let best = self
                .room
                .iter()
                .filter_map(|p| p.re.captures(rest).map(|c| (p, c)))
                .max_by_key(|(p, c)| (c.get(0).map_or(0, |m| m.len()), p.literal_len));
            let Some((p, caps)) = best else {
                let end = rest.find(". ").or_else(|| rest.find("! ")).map_or(rest.len(), |i| i + 2);
                tracing::warn!(text = &rest[..end], "skipping unparseable observation text");
                view.skipped.push(rest[..end].trim().to_owned());
                pos += end;
                continue;
            };
            let get = |n: &str| caps.name(n).map_or("", |m| m.as_str());
            let sentence = match p.key {
                Slot::Intro => {
                    view.room = Some(get("room").to_owned());
                    Sentence::Intro { room: get("room").to_owned() }
                }
                Slot::Thing(kind) => Sentence::Thing { kind, mention: Mention::parse(get("thing")) },
                Slot::Empty => Sentence::Empty,
                Slot::Contents => Sentence::Contents { holder: get("holder").to_owned(), items: split_list(get("list")) },
                Slot::DoorExit | Slot::PlainExit => match Direction::parse(get("dir")) {
                    Some(dir) => Sentence::Exit {
                        dir,
                        door: (p.key == Slot::DoorExit).then(|| Mention::parse(get("door"))),
                    },
                    None => {
                        view.skipped.push(caps[0].trim().to_owned());
                        pos += caps[0].len();
                        continue;
                    }
                },
            };
            view.sentences.push(sentence);
            pos += caps[0].len();
        }
        view
    }

    pub fn parse_feedback(&self, text: &str) -> Option<FeedbackMatch> {
        let (p, caps) = self
            .feedback
            .iter()
            .filter_map(|p| p.re.captures(text).map(|c| (p, c)))
            .max_by_key(|(p, _)| p.literal_len)?;
        let vars = p
            .re
            .capture_names()
            .flatten()
            .filter_map(|n| caps.name(n).map(|m| (n.to_owned(), m.as_str().to_owned())))
            .collect();
        Some(FeedbackMatch { key: p.key.clone(), vars })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::{apply_str, render_observation};
    use crate::gen::{generate_world, Difficulty, GenConfig};

    #[test]
    fn reads_a_rendered_kitchen() {
        let text = "You are in a kitchen. You try to gain information on your surroundings by using a technique you call looking. \
                    You see an open fridge. What a find! Inside the fridge you can see a soda and a red apple. \
                    You see a closed oven. What a find! You see a table. It is stylish. \
                    You see a knife on the floor. There is a closed screen door leading south.";
        let v = Reader::standard().parse_observation(text);
        assert!(v.skipped.is_empty(), "{:?}", v.skipped);
        assert_eq!(v.room.as_deref(), Some("kitchen"));
        let things: Vec<_> = v.things().map(|(k, m)| (k, m.name.as_str(), m.open)).collect();
        assert_eq!(
            things,
            [
                (ThingKind::Container, "fridge", Some(true)),
                (ThingKind::Container, "oven", Some(false)),
                (ThingKind::Supporter, "table", None),
                (ThingKind::Item, "knife", None),
            ]
        );
        let items: Vec<_> = v.items().into_iter().map(|(h, m)| (h, m.name.clone())).collect();
        assert_eq!(
            items,
            [(Some("fridge"), "soda".into()), (Some("fridge"), "red apple".into()), (None, "knife".into())]
        );
        let exits: Vec<_> = v.exits().map(|(d, m)| (d, m.cloned())).collect();
        assert_eq!(exits, [(Direction::South, Some(Mention { name: "screen door".into(), open: Some(false) }))]);
    }

    #[test]
    fn every_generated_observation_parses_fully() {
        for seed in 0..200 {
            let mut w = generate_world(&GenConfig::new(Difficulty::RandomMap, seed)).unwrap();
            for cmd in ["look", "go north", "go east", "go south", "go west"] {
                apply_str(&mut w, cmd);
                let v = Reader::standard().parse_observation(&render_observation(&w));
                assert!(v.skipped.is_empty(), "seed {seed}: {:?}", v.skipped);
                assert_eq!(v.room.as_deref(), Some(w.current_location().name.as_str()));
            }
        }
    }

    #[test]
    fn feedback_is_matched_with_its_placeholders() {
        let r = Reader::standard();
        let m = r.parse_feedback("You cook the raw chicken using the stove. You now have fried chicken.").unwrap();
        assert_eq!((m.key.as_str(), m.var("source"), m.var("result")), ("cooked", "stove", "fried chicken"));
        let m = r.parse_feedback("You are carrying: a knife and a red apple.").unwrap();
        assert_eq!(m.key, "inventory");
        assert_eq!(split_list(m.var("list")).len(), 2);
        assert_eq!(r.parse_feedback("You take the soda from the fridge.").unwrap().var("holder"), "fridge");
        assert!(r.parse_feedback("Something else entirely").is_none());
    }
}
