//! The versioned name table shipped in `data/names.toml`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::Deserialize;

use crate::world::{Category, Direction, ACTIONS, STATE_ADJECTIVES};

const NAMES_TOML: &str = include_str!("../data/names.toml");

#[derive(Debug, Clone, Deserialize)]
pub struct NameTable {
    pub version: u32,
    pub locations: Vec<String>,
    pub door_modifiers: Vec<String>,
    pub modifiers: Vec<String>,
    pub items: BTreeMap<Category, Vec<String>>,
}

impl NameTable {
    /// The table compiled into this build.
    pub fn standard() -> &'static NameTable {
        static TABLE: OnceLock<NameTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let table: NameTable = toml::from_str(NAMES_TOML).expect("bundled name table parses");
            table.validate().expect("bundled name table is well formed");
            table
        })
    }

    pub fn nouns(&self, category: Category) -> &[String] {
        self.items.get(&category).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Category of a catalog noun, if it is one.
    pub fn category_of(&self, noun: &str) -> Option<Category> {
        self.items.iter().find(|(_, nouns)| nouns.iter().any(|n| n == noun)).map(|(c, _)| *c)
    }

    /// Every token the table can put into a world, plus the command and state vocabulary.
    pub fn reserved_tokens(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = BTreeSet::new();
        out.extend(self.locations.iter().cloned());
        out.extend(self.door_modifiers.iter().cloned());
        out.extend(self.modifiers.iter().cloned());
        out.extend(self.items.values().flatten().cloned());
        out.extend(ACTIONS.iter().map(|s| s.to_string()));
        out.extend(STATE_ADJECTIVES.iter().map(|s| s.to_string()));
        out.extend(Direction::ALL.iter().map(|d| d.as_str().to_owned()));
        out.insert("door".into());
        out.insert("inventory".into());
        out
    }

    pub fn validate(&self) -> Result<(), String> {
        let well_formed = |t: &String| !t.is_empty() && t.chars().all(|c| c.is_ascii_lowercase());
        let all: Vec<&String> = self
            .locations
            .iter()
            .chain(&self.door_modifiers)
            .chain(&self.modifiers)
            .chain(self.items.values().flatten())
            .collect();
        if let Some(bad) = all.iter().find(|t| !well_formed(t)) {
            return Err(format!("token '{bad}' is not a single lowercase word"));
        }
        if let Some(clash) = all.iter().find(|t| ACTIONS.contains(&t.as_str())) {
            return Err(format!("token '{clash}' collides with a command verb"));
        }
        let unique: BTreeSet<&String> = all.iter().copied().collect();
        if unique.len() != all.len() {
            return Err("name table tokens must be unique across all lists".into());
        }
        for category in Category::ALL {
            if category != Category::Door && self.nouns(category).is_empty() {
                return Err(format!("no nouns for category {}", category.as_str()));
            }
        }
        if self.locations.len() < 12 {
            return Err("random maps need at least twelve location names".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_is_valid() {
        let t = NameTable::standard();
        assert_eq!(t.version, 1);
        assert!(t.validate().is_ok());
        assert_eq!(t.category_of("knife"), Some(Category::SharpTool));
        assert_eq!(t.category_of("ghargh"), None);
    }

    #[test]
    fn reserved_tokens_cover_verbs_and_nouns() {
        let r = NameTable::standard().reserved_tokens();
        for t in ["take", "wait", "fridge", "kitchen", "red", "fried", "north", "door"] {
            assert!(r.contains(t), "{t}");
        }
    }
}
