//! Seeded world generation.
//!
//! A world is a pure function of its [`GenConfig`]. The generator draws the
//! number of locations and entities, lays the map out on a grid so that the
//! four-direction exit model stays consistent, and then places doors, a small
//! cooking kit (heat source, sharp tool, cuttable and cookable food) and filler
//! objects.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::GenError;
use crate::names::NameTable;
use crate::rng::SplitMix64;
use crate::world::{Category, CookStyle, CutState, Direction, EntityId, Holder, LocationId, World, WorldBuilder};

/// Probability that a grid edge not used by the spanning tree becomes an exit.
pub const P_EXTRA_EDGE: f64 = 0.15;
const P_DOOR: f64 = 0.3;
const P_DOOR_OPEN: f64 = 0.5;
const P_CONTAINER_OPEN: f64 = 0.4;
const P_MODIFIER: f64 = 0.35;
const P_ON_HOLDER: f64 = 0.6;
const P_IN_INVENTORY: f64 = 0.04;
const P_PRECUT: f64 = 0.1;
const P_PRECOOKED: f64 = 0.1;
const P_MADE_UP: f64 = 0.35;

/// Number of rooms on the fixed map.
pub const FIXED_MAP_ROOMS: u32 = 6;

const FIXED_ROOMS: [(&str, (i32, i32)); 6] = [
    ("kitchen", (0, 1)),
    ("backyard", (0, 2)),
    ("bedroom", (1, 0)),
    ("bathroom", (2, 0)),
    ("livingroom", (1, 1)),
    ("corridor", (0, 0)),
];

// (from, direction, to) as indices into FIXED_ROOMS
const FIXED_EDGES: [(usize, Direction, usize); 6] = [
    (1, Direction::South, 0),
    (0, Direction::East, 4),
    (0, Direction::South, 5),
    (5, Direction::East, 2),
    (4, Direction::South, 2),
    (2, Direction::East, 3),
];

const FILLER_WEIGHTS: [(Category, f64); 12] = [
    (Category::Supporter, 0.14),
    (Category::Container, 0.12),
    (Category::HeatSupporter, 0.02),
    (Category::HeatContainer, 0.02),
    (Category::Decor, 0.06),
    (Category::Fruit, 0.11),
    (Category::Vegetable, 0.09),
    (Category::Raw, 0.07),
    (Category::Snack, 0.09),
    (Category::Drink, 0.10),
    (Category::Tool, 0.13),
    (Category::SharpTool, 0.05),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    FixedMap,
    RandomMap,
}

impl Difficulty {
    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::FixedMap => "fixed_map",
            Difficulty::RandomMap => "random_map",
        }
    }
}

impl std::fmt::Display for Difficulty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Difficulty {
    type Err = String;

    /// Accepts the short forms `fixed` and `random` as well.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" | "fixed_map" | "fixed-map" => Ok(Difficulty::FixedMap),
            "random" | "random_map" | "random-map" => Ok(Difficulty::RandomMap),
            _ => Err(format!("unknown difficulty '{s}' (expected fixed or random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub difficulty: Difficulty,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_locations_override: Option<u32>,
    pub seed: u64,
    #[serde(default)]
    pub made_up_names: bool,
}

impl GenConfig {
    pub fn new(difficulty: Difficulty, seed: u64) -> Self {
        Self { difficulty, n_locations_override: None, seed, made_up_names: false }
    }

    pub fn with_made_up_names(mut self, on: bool) -> Self {
        self.made_up_names = on;
        self
    }

    pub fn with_locations(mut self, n: u32) -> Self {
        self.n_locations_override = Some(n);
        self
    }
}

/// A connected set of grid cells with exits between some adjacent pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapLayout {
    pub cells: Vec<(i32, i32)>,
    /// `(a, dir, b)`: going `dir` from cell `a` leads to cell `b`.
    pub edges: Vec<(usize, Direction, usize)>,
}

impl MapLayout {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, _, b)| {
                if a == cell {
                    Some(b)
                } else if b == cell {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.cells.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.cells.len()];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(c) = queue.pop_front() {
            for n in self.neighbors(c) {
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Grows a random spanning tree on the grid, then adds each remaining
/// adjacent pair as an extra exit with probability [`P_EXTRA_EDGE`].
pub fn generate_map_layout(n: usize, rng: &mut SplitMix64) -> MapLayout {
    assert!(n >= 1, "a map needs at least one location");
    let mut cells = vec![(0, 0)];
    let mut index: BTreeMap<(i32, i32), usize> = BTreeMap::from([((0, 0), 0)]);
    let mut edges = Vec::new();
    let mut linked: BTreeSet<(usize, usize)> = BTreeSet::new();

    while cells.len() < n {
        let from = rng.index(cells.len());
        let dir = Direction::ALL[rng.index(4)];
        let (dx, dy) = dir.delta();
        let next = (cells[from].0 + dx, cells[from].1 + dy);
        if index.contains_key(&next) {
            continue;
        }
        let id = cells.len();
        cells.push(next);
        index.insert(next, id);
        edges.push((from, dir, id));
        linked.insert((from.min(id), from.max(id)));
    }

    for (a, &(x, y)) in cells.iter().enumerate() {
        for dir in [Direction::East, Direction::North] {
            let (dx, dy) = dir.delta();
            let Some(&b) = index.get(&(x + dx, y + dy)) else { continue };
            if linked.contains(&(a.min(b), a.max(b))) {
                continue;
            }
            if rng.chance(P_EXTRA_EDGE) {
                edges.push((a, dir, b));
                linked.insert((a.min(b), a.max(b)));
            }
        }
    }
    MapLayout { cells, edges }
}

fn fixed_layout() -> MapLayout {
    MapLayout { cells: FIXED_ROOMS.iter().map(|(_, c)| *c).collect(), edges: FIXED_EDGES.to_vec() }
}

const CONSONANTS: &[u8] = b"bdfghjklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// A pronounceable word of two or three consonant-vowel syllables (each with an
/// optional closing consonant) that is not in `forbidden` and not a reserved token.
pub fn generate_made_up_word(rng: &mut SplitMix64, forbidden: &BTreeSet<String>) -> String {
    let reserved = NameTable::standard().reserved_tokens();
    loop {
        let syllables = 2 + rng.index(2);
        let mut word = String::with_capacity(9);
        for _ in 0..syllables {
            word.push(CONSONANTS[rng.index(CONSONANTS.len())] as char);
            word.push(VOWELS[rng.index(VOWELS.len())] as char);
            if rng.chance(0.3) {
                word.push(CONSONANTS[rng.index(CONSONANTS.len())] as char);
            }
        }
        if !forbidden.contains(&word) && !reserved.contains(&word) {
            return word;
        }
    }
}

struct Draft {
    category: Category,
    noun: String,
    modifier: Option<String>,
    room: usize,
}

/// Generates a world from its configuration. Identical configs give identical worlds.
pub fn generate_world(config: &GenConfig) -> Result<World, GenError> {
    let names = NameTable::standard();
    let root = SplitMix64::new(config.seed);
    let mut layout_rng = root.fork("layout");
    let mut rng = root.fork("entities");
    let mut naming_rng = root.fork("names");

    let n_rooms = match (config.difficulty, config.n_locations_override) {
        (_, Some(0)) => return Err(GenError::InvalidConfig("n_locations_override must be at least 1".into())),
        (Difficulty::FixedMap, Some(n)) if n != FIXED_MAP_ROOMS => {
            return Err(GenError::InvalidConfig(format!("the fixed map always has {FIXED_MAP_ROOMS} locations, not {n}")))
        }
        (Difficulty::FixedMap, _) => FIXED_MAP_ROOMS as usize,
        (Difficulty::RandomMap, Some(n)) => n as usize,
        (Difficulty::RandomMap, None) => layout_rng.range_inclusive(2, 12) as usize,
    };
    if n_rooms > names.locations.len() {
        return Err(GenError::InvalidConfig(format!(
            "at most {} locations are supported, asked for {n_rooms}",
            names.locations.len()
        )));
    }

    let (layout, room_names): (MapLayout, Vec<String>) = match config.difficulty {
        Difficulty::FixedMap => (fixed_layout(), FIXED_ROOMS.iter().map(|(n, _)| n.to_string()).collect()),
        Difficulty::RandomMap => {
            let layout = generate_map_layout(n_rooms, &mut layout_rng);
            let mut pool = names.locations.clone();
            layout_rng.shuffle(&mut pool);
            pool.truncate(n_rooms);
            (layout, pool)
        }
    };

    const KIT: usize = 4;
    // a single room still needs room for the kit
    let n_entities = rng.range_inclusive((3 * n_rooms).max(KIT) as u64, 6 * n_rooms as u64) as usize;

    let mut b = WorldBuilder::new(config.seed);
    let rooms: Vec<LocationId> = room_names.iter().map(|n| b.location(n)).collect();

    // doors
    let mut door_mods = names.door_modifiers.clone();
    rng.shuffle(&mut door_mods);
    let max_doors = door_mods.len().min(n_entities.saturating_sub(KIT));
    for &(a, dir, c) in &layout.edges {
        let door = if b.entity_count() < max_doors && rng.chance(P_DOOR) {
            let modifier = door_mods[b.entity_count()].clone();
            Some(b.door(&modifier, rng.chance(P_DOOR_OPEN)))
        } else {
            None
        };
        b.connect(rooms[a], dir, rooms[c], door);
    }
    let n_doors = b.entity_count();

    // kit first, then fillers; fixtures are placed before portables so food can land on them
    let heat = if rng.chance(0.5) { Category::HeatSupporter } else { Category::HeatContainer };
    let cut_food = [Category::Fruit, Category::Vegetable, Category::Raw][rng.index(3)];
    let cook_food = [Category::Vegetable, Category::Raw][rng.index(2)];
    let mut categories = vec![heat, Category::SharpTool, cut_food, cook_food];
    let weights: Vec<f64> = FILLER_WEIGHTS.iter().map(|(_, w)| *w).collect();
    for _ in 0..n_entities - n_doors - KIT {
        categories.push(FILLER_WEIGHTS[rng.weighted(&weights)].0);
    }

    let mut drafts: Vec<Draft> = categories
        .iter()
        .map(|&category| {
            let noun = rng.choose(names.nouns(category)).expect("non-empty category").clone();
            let modifier = if rng.chance(P_MODIFIER) { rng.choose(&names.modifiers).cloned() } else { None };
            Draft { category, noun, modifier, room: rng.index(n_rooms) }
        })
        .collect();
    disambiguate(&mut drafts, &names.modifiers, &mut rng)?;

    let is_fixture = |c: Category| !c.attributes().get(crate::world::Attribute::Portable);
    let mut order: Vec<usize> = (0..drafts.len()).collect();
    order.sort_by_key(|&i| !is_fixture(drafts[i].category));

    let mut ids: Vec<Option<EntityId>> = vec![None; drafts.len()];
    let mut holders_in: Vec<Vec<EntityId>> = vec![Vec::new(); n_rooms];
    for i in order {
        let d = &drafts[i];
        let holder = if is_fixture(d.category) {
            Holder::Location(rooms[d.room])
        } else if rng.chance(P_IN_INVENTORY) {
            Holder::Inventory
        } else if !holders_in[d.room].is_empty() && rng.chance(P_ON_HOLDER) {
            Holder::Entity(*rng.choose(&holders_in[d.room]).expect("non-empty"))
        } else {
            Holder::Location(rooms[d.room])
        };
        let id = b.entity(d.category, &d.noun, d.modifier.as_deref(), holder);
        if d.category.attributes().get(crate::world::Attribute::Holder) {
            holders_in[d.room].push(id);
            if b.entity_ref(id).is_container() {
                let open = rng.chance(P_CONTAINER_OPEN);
                b.set_open(id, open);
            }
        }
        // kit items (draft slots 0..4) stay uncut and raw
        if i >= KIT {
            if rng.chance(P_PRECUT) {
                let style = [CutState::Sliced, CutState::Chopped, CutState::Diced][rng.index(3)];
                b.set_cut(id, style);
            }
            if rng.chance(P_PRECOOKED) {
                let style = [CookStyle::Fried, CookStyle::Roasted, CookStyle::Grilled, CookStyle::Cooked][rng.index(4)];
                b.set_cooked(id, style);
            }
        }
        ids[i] = Some(id);
    }

    if config.made_up_names {
        let candidates: Vec<EntityId> = ids.iter().flatten().copied().collect();
        let mut chosen: Vec<EntityId> =
            candidates.iter().copied().filter(|_| naming_rng.chance(P_MADE_UP)).collect();
        if chosen.is_empty() {
            chosen.push(*naming_rng.choose(&candidates).expect("worlds always have entities"));
        }
        let mut used = BTreeSet::new();
        for id in chosen {
            let word = generate_made_up_word(&mut naming_rng, &used);
            used.insert(word.clone());
            b.set_display_name(id, &word);
        }
    }

    let start = rng.index(n_rooms);
    b.player_at(rooms[start]);
    Ok(b.build()?)
}

/// Every noun that occurs more than once gets a distinct modifier on each instance.
fn disambiguate(drafts: &mut [Draft], modifiers: &[String], rng: &mut SplitMix64) -> Result<(), GenError> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, d) in drafts.iter().enumerate() {
        groups.entry(d.noun.clone()).or_default().push(i);
    }
    for members in groups.values().filter(|m| m.len() > 1) {
        if members.len() > modifiers.len() {
            return Err(GenError::NamesExhausted("modifiers"));
        }
        let mut taken: BTreeSet<String> = BTreeSet::new();
        for &i in members {
            let keep = drafts[i].modifier.clone().filter(|m| !taken.contains(m));
            let m = match keep {
                Some(m) => m,
                None => {
                    let free: Vec<&String> = modifiers.iter().filter(|m| !taken.contains(*m)).collect();
                    (*rng.choose(&free).expect("checked above")).clone()
                }
            };
            taken.insert(m.clone());
            drafts[i].modifier = Some(m);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Attribute;

    #[test]
    fn fixed_map_has_six_canonical_rooms() {
        for seed in 0..50 {
            let w = generate_world(&GenConfig::new(Difficulty::FixedMap, seed)).unwrap();
            let names: Vec<&str> = w.locations().iter().map(|l| l.name.as_str()).collect();
            assert_eq!(names, ["kitchen", "backyard", "bedroom", "bathroom", "livingroom", "corridor"]);
            let backyard = &w.locations()[1];
            assert_eq!(backyard.exits[&Direction::South].to, LocationId(0));
        }
    }

    #[test]
    fn same_config_gives_identical_snapshots() {
        let cfg = GenConfig::new(Difficulty::RandomMap, 99).with_made_up_names(true);
        assert_eq!(generate_world(&cfg).unwrap().to_snapshot_json(), generate_world(&cfg).unwrap().to_snapshot_json());
    }

    #[test]
    fn invalid_overrides_are_rejected() {
        let zero = GenConfig::new(Difficulty::RandomMap, 1).with_locations(0);
        assert!(matches!(generate_world(&zero), Err(GenError::InvalidConfig(_))));
        let fixed = GenConfig::new(Difficulty::FixedMap, 1).with_locations(4);
        assert!(matches!(generate_world(&fixed), Err(GenError::InvalidConfig(_))));
        let huge = GenConfig::new(Difficulty::RandomMap, 1).with_locations(500);
        assert!(matches!(generate_world(&huge), Err(GenError::InvalidConfig(_))));
    }

    #[test]
    fn single_and_double_room_layouts() {
        let mut rng = SplitMix64::new(3);
        let one = generate_map_layout(1, &mut rng);
        assert!(one.edges.is_empty());
        for _ in 0..100 {
            let two = generate_map_layout(2, &mut rng);
            assert_eq!(two.edges.len(), 1);
            let (a, dir, b) = two.edges[0];
            let (dx, dy) = dir.delta();
            assert_eq!((two.cells[a].0 + dx, two.cells[a].1 + dy), two.cells[b]);
        }
    }

    #[test]
    fn twelve_room_layouts_are_connected() {
        let mut rng = SplitMix64::new(12);
        for _ in 0..1000 {
            let layout = generate_map_layout(12, &mut rng);
            assert_eq!(layout.len(), 12);
            assert!(layout.is_connected());
        }
    }

    #[test]
    fn made_up_words_are_distinct_and_well_formed() {
        let mut rng = SplitMix64::new(1);
        let mut seen = BTreeSet::new();
        for _ in 0..10_000 {
            let w = generate_made_up_word(&mut rng, &seen);
            assert!((3..=12).contains(&w.len()) && w.chars().all(|c| c.is_ascii_lowercase()), "{w}");
            assert!(!crate::world::ACTIONS.contains(&w.as_str()));
            assert!(seen.insert(w));
        }
    }

    #[test]
    fn every_world_carries_the_cooking_kit() {
        for seed in 0..200 {
            let w = generate_world(&GenConfig::new(Difficulty::RandomMap, seed)).unwrap();
            let present: Vec<_> = w.present_entities().collect();
            assert!(present.iter().any(|e| e.has(Attribute::HeatSource)));
            assert!(present.iter().any(|e| e.has(Attribute::Sharp)));
            assert!(present.iter().any(|e| e.has(Attribute::Cuttable) && e.cut_state == CutState::Uncut));
            assert!(present
                .iter()
                .any(|e| e.has(Attribute::Cookable) && e.cook_state == crate::world::CookState::Raw));
        }
    }

    #[test]
    fn made_up_names_replace_display_only() {
        let w = generate_world(&GenConfig::new(Difficulty::FixedMap, 5).with_made_up_names(true)).unwrap();
        let renamed: Vec<_> = w.entities().iter().filter(|e| e.has_made_up_name()).collect();
        assert!(!renamed.is_empty());
        let reserved = NameTable::standard().reserved_tokens();
        for e in renamed {
            assert!(!reserved.contains(&e.display_name));
            assert!(w.lexicons().objects.contains(&e.display_name));
        }
    }

    #[test]
    fn single_room_worlds_still_hold_the_kit() {
        for seed in 0..200 {
            let w = generate_world(&GenConfig::new(Difficulty::RandomMap, seed).with_locations(1)).unwrap();
            assert_eq!(w.locations().len(), 1);
            w.check_invariants().unwrap();
        }
    }
}
