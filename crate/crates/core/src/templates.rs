//! The text template catalog shipped in `data/templates.toml`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::rng::{fnv1a64, mix64};

const TEMPLATES_TOML: &str = include_str!("../data/templates.toml");

#[derive(Debug, Clone, Deserialize)]
pub struct RoomTemplates {
    pub intro: Vec<String>,
    pub container: Vec<String>,
    pub supporter: Vec<String>,
    pub fixture: Vec<String>,
    pub item: Vec<String>,
    pub container_empty: String,
    pub container_contents: String,
    pub supporter_contents: String,
    pub door_exit: Vec<String>,
    pub plain_exit: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Catalog {
    pub version: u32,
    pub room: RoomTemplates,
    pub feedback: BTreeMap<String, String>,
}

const FEEDBACK_KEYS: &[&str] = &[
    "empty", "unknown_verb", "not_visible", "ambiguous", "no_object", "extra_words", "no_exit",
    "door_closed", "take_first", "not_carrying", "already_have", "fixed_in_place", "taken_floor",
    "taken_from", "dropped", "put", "no_supporter", "inserted", "no_container", "not_openable",
    "already_open", "opened", "not_closable", "already_closed", "closed", "inedible", "eaten",
    "undrinkable", "drunk", "not_cookable", "already_cooked", "no_heat", "cooked", "not_cuttable",
    "already_cut", "no_sharp", "cut", "examine_plain", "examine_open", "examine_closed",
    "inventory_empty", "inventory", "waited",
];

impl Catalog {
    pub fn standard() -> &'static Catalog {
        static CATALOG: OnceLock<Catalog> = OnceLock::new();
        CATALOG.get_or_init(|| Catalog::parse(TEMPLATES_TOML).expect("bundled template catalog parses"))
    }

    pub fn parse(text: &str) -> Result<Catalog, String> {
        let catalog: Catalog = toml::from_str(text).map_err(|e| e.to_string())?;
        for key in FEEDBACK_KEYS {
            if !catalog.feedback.contains_key(*key) {
                return Err(format!("feedback template '{key}' is missing"));
            }
        }
        let r = &catalog.room;
        for (name, list) in [
            ("intro", &r.intro),
            ("container", &r.container),
            ("supporter", &r.supporter),
            ("fixture", &r.fixture),
            ("item", &r.item),
            ("door_exit", &r.door_exit),
            ("plain_exit", &r.plain_exit),
        ] {
            if list.is_empty() {
                return Err(format!("room template list '{name}' is empty"));
            }
        }
        Ok(catalog)
    }

    /// Fills a feedback template. Panics on an unknown key, which is a programming error.
    pub fn feedback(&self, key: &str, vars: &[(&str, &str)]) -> String {
        let template = self.feedback.get(key).unwrap_or_else(|| panic!("no feedback template '{key}'"));
        fill(template, vars)
    }
}

pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

/// Deterministic variant choice for a sentence slot.
pub fn pick<'a>(variants: &'a [String], world_seed: u64, slot: &str, id: u32) -> &'a str {
    let h = mix64(world_seed ^ fnv1a64(slot.as_bytes()) ^ mix64(u64::from(id)));
    &variants[(h % variants.len() as u64) as usize]
}

pub fn article(phrase: &str) -> &'static str {
    match phrase.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

pub fn with_article(phrase: &str) -> String {
    format!("{} {phrase}", article(phrase))
}

/// "x", "x and y", "x, y and z".
pub fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}
