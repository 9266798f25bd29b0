//! Game-state representation and the read-only queries every other module uses.
//!
//! A [`World`] owns a grid of locations, a flat table of entities and a
//! containment forest rooted at locations and the player's inventory. Doors are
//! entities that live on exits rather than in the containment forest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::WorldError;

/// The seventeen command verbs, in their canonical order.
pub const ACTIONS: [&str; 17] = [
    "look", "inventory", "go", "examine", "open", "close", "eat", "drink", "drop", "take", "put",
    "insert", "cook", "slice", "chop", "dice", "wait",
];

/// Adjectives the engine itself attaches to entities as their state changes.
pub const STATE_ADJECTIVES: [&str; 8] =
    ["raw", "fried", "roasted", "grilled", "cooked", "sliced", "chopped", "diced"];

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocationId(pub u32);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

// ---------------------------------------------------------------------------
// Attributes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Edible,
    Drinkable,
    Portable,
    Openable,
    Cuttable,
    Sharp,
    HeatSource,
    Cookable,
    Holder,
}

impl Attribute {
    pub const ALL: [Attribute; 9] = [
        Attribute::Edible,
        Attribute::Drinkable,
        Attribute::Portable,
        Attribute::Openable,
        Attribute::Cuttable,
        Attribute::Sharp,
        Attribute::HeatSource,
        Attribute::Cookable,
        Attribute::Holder,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Edible => "edible",
            Attribute::Drinkable => "drinkable",
            Attribute::Portable => "portable",
            Attribute::Openable => "openable",
            Attribute::Cuttable => "cuttable",
            Attribute::Sharp => "sharp",
            Attribute::HeatSource => "heat_source",
            Attribute::Cookable => "cookable",
            Attribute::Holder => "holder",
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Attribute::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown attribute '{s}'"))
    }
}

/// The nine boolean attributes of an entity.
///
/// Construction enforces the entailments between them: anything sharp, edible,
/// drinkable, cookable or cuttable can be carried, while heat sources and
/// holders cannot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<Attribute>", try_from = "Vec<Attribute>")]
pub struct AttributeSet(u16);

impl AttributeSet {
    pub fn new(attrs: &[Attribute]) -> Result<Self, WorldError> {
        let set = Self(attrs.iter().fold(0, |acc, a| acc | a.bit()));
        set.validate()?;
        Ok(set)
    }

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn get(&self, attr: Attribute) -> bool {
        self.0 & attr.bit() != 0
    }

    /// Returns a copy with `attr` set to `value`, re-checking the entailments.
    pub fn with(self, attr: Attribute, value: bool) -> Result<Self, WorldError> {
        let bits = if value { self.0 | attr.bit() } else { self.0 & !attr.bit() };
        let set = Self(bits);
        set.validate()?;
        Ok(set)
    }

    pub fn iter(&self) -> impl Iterator<Item = Attribute> + '_ {
        Attribute::ALL.into_iter().filter(|a| self.get(*a))
    }

    fn validate(&self) -> Result<(), WorldError> {
        use Attribute::*;
        let portable = self.get(Portable);
        let rules: [(bool, &'static str); 7] = [
            (self.get(Sharp) && !portable, "sharp objects must be portable"),
            (self.get(Edible) && !portable, "edible objects must be portable"),
            (self.get(Drinkable) && !portable, "drinkable objects must be portable"),
            (self.get(Cookable) && !portable, "cookable objects must be portable"),
            (self.get(Cuttable) && !portable, "cuttable objects must be portable"),
            (self.get(HeatSource) && portable, "heat sources must not be portable"),
            (self.get(Holder) && portable, "holders must not be portable"),
        ];
        match rules.into_iter().find(|(violated, _)| *violated) {
            Some((_, why)) => Err(WorldError::Entailment(why)),
            None => Ok(()),
        }
    }
}

impl From<AttributeSet> for Vec<Attribute> {
    fn from(set: AttributeSet) -> Self {
        set.iter().collect()
    }
}

impl TryFrom<Vec<Attribute>> for AttributeSet {
    type Error = WorldError;

    fn try_from(attrs: Vec<Attribute>) -> Result<Self, Self::Error> {
        AttributeSet::new(&attrs)
    }
}

// ---------------------------------------------------------------------------
// Entities
// ---------------------------------------------------------------------------

/// Hidden catalog category of an entity. Determines its attribute profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Fruit,
    Vegetable,
    Raw,
    Snack,
    Drink,
    Tool,
    SharpTool,
    Supporter,
    Container,
    HeatSupporter,
    HeatContainer,
    Decor,
    Door,
}

impl Category {
    pub const ALL: [Category; 13] = [
        Category::Fruit,
        Category::Vegetable,
        Category::Raw,
        Category::Snack,
        Category::Drink,
        Category::Tool,
        Category::SharpTool,
        Category::Supporter,
        Category::Container,
        Category::HeatSupporter,
        Category::HeatContainer,
        Category::Decor,
        Category::Door,
    ];

    pub fn attributes(self) -> AttributeSet {
        use Attribute::*;
        let attrs: &[Attribute] = match self {
            Category::Fruit => &[Edible, Portable, Cuttable],
            Category::Vegetable => &[Edible, Portable, Cuttable, Cookable],
            Category::Raw => &[Portable, Cuttable, Cookable],
            Category::Snack => &[Edible, Portable],
            Category::Drink => &[Drinkable, Portable],
            Category::Tool => &[Portable],
            Category::SharpTool => &[Portable, Sharp],
            Category::Supporter => &[Holder],
            Category::Container => &[Holder, Openable],
            Category::HeatSupporter => &[Holder, HeatSource],
            Category::HeatContainer => &[Holder, Openable, HeatSource],
            Category::Decor => &[],
            Category::Door => &[Openable],
        };
        AttributeSet::new(attrs).expect("category profiles satisfy the entailments")
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Fruit => "fruit",
            Category::Vegetable => "vegetable",
            Category::Raw => "raw",
            Category::Snack => "snack",
            Category::Drink => "drink",
            Category::Tool => "tool",
            Category::SharpTool => "sharp_tool",
            Category::Supporter => "supporter",
            Category::Container => "container",
            Category::HeatSupporter => "heat_supporter",
            Category::HeatContainer => "heat_container",
            Category::Decor => "decor",
            Category::Door => "door",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenState {
    Open,
    Closed,
    NotOpenable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CookStyle {
    Fried,
    Roasted,
    Grilled,
    Cooked,
}

impl CookStyle {
    /// Cooking style implied by the heat source's catalog noun.
    pub fn for_heat_source(base_name: &str) -> Self {
        match base_name {
            "stove" => CookStyle::Fried,
            "oven" => CookStyle::Roasted,
            "bbq" => CookStyle::Grilled,
            _ => CookStyle::Cooked,
        }
    }

    pub fn adjective(self) -> &'static str {
        match self {
            CookStyle::Fried => "fried",
            CookStyle::Roasted => "roasted",
            CookStyle::Grilled => "grilled",
            CookStyle::Cooked => "cooked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CookState {
    Raw,
    Cooked(CookStyle),
    NotCookable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutState {
    Uncut,
    Sliced,
    Chopped,
    Diced,
    NotCuttable,
}

impl CutState {
    pub fn adjective(self) -> Option<&'static str> {
        match self {
            CutState::Sliced => Some("sliced"),
            CutState::Chopped => Some("chopped"),
            CutState::Diced => Some("diced"),
            CutState::Uncut | CutState::NotCuttable => None,
        }
    }

    pub fn is_cut(self) -> bool {
        self.adjective().is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub category: Category,
    /// Catalog noun; never rendered when a made-up name replaces it.
    pub base_name: String,
    pub modifier: Option<String>,
    /// The noun token players see and type.
    pub display_name: String,
    pub attributes: AttributeSet,
    pub open_state: OpenState,
    pub cook_state: CookState,
    pub cut_state: CutState,
}

impl Entity {
    /// An entity in the default state for its category: closed, raw and uncut
    /// wherever those states apply.
    pub fn new(id: EntityId, category: Category, base_name: &str, modifier: Option<&str>) -> Self {
        let attributes = category.attributes();
        Self {
            id,
            category,
            base_name: base_name.to_owned(),
            modifier: modifier.map(str::to_owned),
            display_name: base_name.to_owned(),
            attributes,
            open_state: if attributes.get(Attribute::Openable) {
                OpenState::Closed
            } else {
                OpenState::NotOpenable
            },
            cook_state: if attributes.get(Attribute::Cookable) {
                CookState::Raw
            } else {
                CookState::NotCookable
            },
            cut_state: if attributes.get(Attribute::Cuttable) {
                CutState::Uncut
            } else {
                CutState::NotCuttable
            },
        }
    }

    pub fn has(&self, attr: Attribute) -> bool {
        self.attributes.get(attr)
    }

    pub fn is_door(&self) -> bool {
        self.category == Category::Door
    }

    pub fn is_container(&self) -> bool {
        self.has(Attribute::Holder) && self.has(Attribute::Openable)
    }

    pub fn is_supporter(&self) -> bool {
        self.has(Attribute::Holder) && !self.has(Attribute::Openable)
    }

    pub fn has_made_up_name(&self) -> bool {
        self.display_name != self.base_name
    }

    pub fn cook_adjective(&self) -> Option<&'static str> {
        match self.cook_state {
            CookState::Cooked(style) => Some(style.adjective()),
            // only meat is called raw; "raw" would give away a made-up noun
            CookState::Raw if self.category == Category::Raw && !self.has_made_up_name() => Some("raw"),
            _ => None,
        }
    }

    /// Adjectives in rendering order: cut state, modifier, cook state.
    pub fn adjectives(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(3);
        out.extend(self.cut_state.adjective());
        out.extend(self.modifier.as_deref());
        out.extend(self.cook_adjective());
        out
    }

    /// The phrase used everywhere the entity is mentioned, e.g. "diced red raw chicken".
    pub fn full_name(&self) -> String {
        let mut words = self.adjectives();
        words.push(&self.display_name);
        words.join(" ")
    }

    /// Name with only the cook adjective, e.g. "raw chicken"; used for existence questions.
    pub fn plain_name(&self) -> String {
        match self.cook_adjective() {
            Some(adj) => format!("{adj} {}", self.display_name),
            None => self.display_name.clone(),
        }
    }

    fn check_states(&self) -> Result<(), WorldError> {
        let bad = |detail: &str| WorldError::InconsistentState { id: self.id, detail: detail.to_owned() };
        if (self.open_state != OpenState::NotOpenable) != self.has(Attribute::Openable) {
            return Err(bad("open state disagrees with openable"));
        }
        if (self.cook_state != CookState::NotCookable) != self.has(Attribute::Cookable) {
            return Err(bad("cook state disagrees with cookable"));
        }
        if (self.cut_state != CutState::NotCuttable) != self.has(Attribute::Cuttable) {
            return Err(bad("cut state disagrees with cuttable"));
        }
        if matches!(self.cook_state, CookState::Cooked(_)) && !self.has(Attribute::Edible) {
            return Err(bad("cooked food must be edible"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Locations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn opposite(self) -> Self {
        match self {
            Direction::North => Direction::South,
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::West => Direction::East,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::East => "east",
            Direction::South => "south",
            Direction::West => "west",
        }
    }

    /// Grid step, with north as +y.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (0, 1),
            Direction::East => (1, 0),
            Direction::South => (0, -1),
            Direction::West => (-1, 0),
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        Direction::ALL.into_iter().find(|d| d.as_str() == token)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exit {
    pub to: LocationId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub door: Option<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub id: LocationId,
    pub name: String,
    pub exits: BTreeMap<Direction, Exit>,
}

/// Where an entity sits in the containment forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Holder {
    Location(LocationId),
    Entity(EntityId),
    Inventory,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicons {
    pub actions: Vec<String>,
    pub modifiers: Vec<String>,
    pub objects: Vec<String>,
}

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Placement {
    entity: EntityId,
    holder: Holder,
}

mod placements {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<EntityId, Holder>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<Placement> =
            map.iter().map(|(entity, holder)| Placement { entity: *entity, holder: *holder }).collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<EntityId, Holder>, D::Error> {
        let list = Vec::<Placement>::deserialize(d)?;
        Ok(list.into_iter().map(|p| (p.entity, p.holder)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct World {
    pub seed: u64,
    locations: Vec<Location>,
    entities: Vec<Entity>,
    /// Every non-door entity that still exists. Eaten or drunk entities are removed.
    #[serde(with = "placements")]
    containment: BTreeMap<EntityId, Holder>,
    player_at: LocationId,
    lexicons: Lexicons,
}

#[derive(Serialize)]
struct SnapshotOut<'a> {
    version: u32,
    #[serde(flatten)]
    world: &'a World,
}

#[derive(Deserialize)]
struct SnapshotIn {
    version: u32,
    #[serde(flatten)]
    world: World,
}

impl World {
    // ----- accessors -----

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn lexicons(&self) -> &Lexicons {
        &self.lexicons
    }

    pub fn player_at(&self) -> LocationId {
        self.player_at
    }

    pub fn location(&self, id: LocationId) -> Result<&Location, WorldError> {
        self.locations.get(id.0 as usize).ok_or(WorldError::UnknownLocation(id))
    }

    pub fn current_location(&self) -> &Location {
        &self.locations[self.player_at.0 as usize]
    }

    pub fn entity(&self, id: EntityId) -> Result<&Entity, WorldError> {
        self.entities.get(id.0 as usize).ok_or(WorldError::UnknownEntity(id))
    }

    /// True while the entity has not been eaten or drunk.
    pub fn exists(&self, id: EntityId) -> bool {
        match self.entities.get(id.0 as usize) {
            Some(e) if e.is_door() => true,
            Some(_) => self.containment.contains_key(&id),
            None => false,
        }
    }

    /// All entities that still exist, doors included.
    pub fn present_entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(|e| self.exists(e.id))
    }

    pub fn doors(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(|e| e.is_door())
    }

    /// Openable holders, the denominator of exploration coverage.
    pub fn containers(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(|e| e.is_container())
    }

    // ----- containment queries -----

    /// The immediate parent of an entity in the containment forest.
    pub fn direct_holder(&self, id: EntityId) -> Result<Holder, WorldError> {
        self.entity(id)?;
        self.containment.get(&id).copied().ok_or(WorldError::NotContained(id))
    }

    /// Contents of a holder, in entity-id order.
    pub fn contents(&self, holder: Holder) -> Vec<EntityId> {
        self.containment.iter().filter(|(_, h)| **h == holder).map(|(e, _)| *e).collect()
    }

    /// The root of an entity's containment chain: a location or the inventory.
    /// Doors report the player's location when they sit on one of its exits.
    pub fn root_of(&self, id: EntityId) -> Result<Holder, WorldError> {
        let entity = self.entity(id)?;
        if entity.is_door() {
            let here = self.current_location();
            let on_exit = here.exits.values().any(|x| x.door == Some(id));
            return Ok(if on_exit {
                Holder::Location(self.player_at)
            } else {
                let loc = self
                    .locations
                    .iter()
                    .find(|l| l.exits.values().any(|x| x.door == Some(id)))
                    .ok_or(WorldError::NotContained(id))?;
                Holder::Location(loc.id)
            });
        }
        let mut current = self.direct_holder(id)?;
        let mut steps = 0;
        while let Holder::Entity(parent) = current {
            current = self.direct_holder(parent)?;
            steps += 1;
            if steps > self.entities.len() {
                return Err(WorldError::ContainmentCycle(id));
            }
        }
        Ok(current)
    }

    /// Entities the player can perceive: everything in the current location not
    /// hidden inside a closed container, doors on its exits, and the inventory.
    pub fn visible_entities(&self) -> BTreeSet<EntityId> {
        let mut out = BTreeSet::new();
        self.collect_visible(Holder::Location(self.player_at), &mut out);
        self.collect_visible(Holder::Inventory, &mut out);
        for exit in self.current_location().exits.values() {
            out.extend(exit.door);
        }
        out
    }

    fn collect_visible(&self, holder: Holder, out: &mut BTreeSet<EntityId>) {
        for id in self.contents(holder) {
            out.insert(id);
            let e = &self.entities[id.0 as usize];
            if e.has(Attribute::Holder) && e.open_state != OpenState::Closed {
                self.collect_visible(Holder::Entity(id), out);
            }
        }
    }

    /// Visible and located in the current room, as opposed to held.
    pub fn reachable(&self, id: EntityId) -> bool {
        self.exists(id)
            && self.visible_entities().contains(&id)
            && self.root_of(id) == Ok(Holder::Location(self.player_at))
    }

    pub fn holding(&self, id: EntityId) -> bool {
        self.exists(id) && self.root_of(id) == Ok(Holder::Inventory)
    }

    /// Name of a holder as a one-word answer token.
    pub fn holder_token(&self, holder: Holder) -> Result<String, WorldError> {
        Ok(match holder {
            Holder::Location(l) => self.location(l)?.name.clone(),
            Holder::Entity(e) => self.entity(e)?.display_name.clone(),
            Holder::Inventory => "inventory".to_owned(),
        })
    }

    pub fn location_by_name(&self, name: &str) -> Option<LocationId> {
        self.locations.iter().find(|l| l.name == name).map(|l| l.id)
    }

    // ----- mutation (engine internal) -----

    pub(crate) fn entity_mut(&mut self, id: EntityId) -> &mut Entity {
        &mut self.entities[id.0 as usize]
    }

    pub(crate) fn set_player_at(&mut self, loc: LocationId) {
        self.player_at = loc;
    }

    /// Moves an entity under a new holder, refusing moves that would break the forest.
    pub(crate) fn move_entity(&mut self, id: EntityId, to: Holder) -> Result<(), WorldError> {
        if let Holder::Entity(h) = to {
            if !self.entity(h)?.has(Attribute::Holder) {
                return Err(WorldError::NotAHolder { holder: h });
            }
            let mut cursor = Some(h);
            while let Some(c) = cursor {
                if c == id {
                    return Err(WorldError::ContainmentCycle(id));
                }
                cursor = match self.containment.get(&c) {
                    Some(Holder::Entity(p)) => Some(*p),
                    _ => None,
                };
            }
        }
        self.containment.insert(id, to);
        Ok(())
    }

    pub(crate) fn destroy(&mut self, id: EntityId) {
        self.containment.remove(&id);
    }

    // ----- validation -----

    /// Checks every structural invariant of the world.
    pub fn check_invariants(&self) -> Result<(), WorldError> {
        for (i, e) in self.entities.iter().enumerate() {
            if e.id.0 as usize != i {
                return Err(WorldError::UnknownEntity(e.id));
            }
            e.attributes.validate()?;
            e.check_states()?;
        }
        for (i, l) in self.locations.iter().enumerate() {
            if l.id.0 as usize != i {
                return Err(WorldError::UnknownLocation(l.id));
            }
        }
        self.location(self.player_at)?;

        // containment forest
        for (&id, &holder) in &self.containment {
            let e = self.entity(id)?;
            if e.is_door() {
                return Err(WorldError::BadDoor(id, "doors live on exits, not in containers"));
            }
            match holder {
                Holder::Location(l) => {
                    self.location(l)?;
                }
                Holder::Entity(h) => {
                    if !self.entity(h)?.has(Attribute::Holder) {
                        return Err(WorldError::NotAHolder { holder: h });
                    }
                    if !self.containment.contains_key(&h) {
                        return Err(WorldError::NotContained(h));
                    }
                }
                Holder::Inventory => {}
            }
            let mut visited = BTreeSet::from([id]);
            let mut cursor = holder;
            while let Holder::Entity(p) = cursor {
                if !visited.insert(p) {
                    return Err(WorldError::ContainmentCycle(id));
                }
                cursor = self.containment[&p];
            }
        }

        // exits and doors
        let mut door_uses: BTreeMap<EntityId, usize> = BTreeMap::new();
        for l in &self.locations {
            for (dir, exit) in &l.exits {
                let back = self.location(exit.to)?.exits.get(&dir.opposite());
                match back {
                    Some(b) if b.to == l.id && b.door == exit.door => {}
                    _ => return Err(WorldError::AsymmetricExit { a: l.id, b: exit.to }),
                }
                if let Some(d) = exit.door {
                    let door = self.entity(d)?;
                    if !door.is_door() {
                        return Err(WorldError::BadDoor(d, "exit door is not a door"));
                    }
                    *door_uses.entry(d).or_default() += 1;
                }
            }
        }
        for door in self.doors() {
            if door.has(Attribute::Portable) || door.has(Attribute::Holder) || !door.has(Attribute::Openable) {
                return Err(WorldError::BadDoor(door.id, "doors are openable, fixed and hold nothing"));
            }
            if door_uses.get(&door.id) != Some(&2) {
                return Err(WorldError::BadDoor(door.id, "door must sit on exactly one exit pair"));
            }
        }
        for e in &self.entities {
            if !e.is_door() && !self.containment.contains_key(&e.id) && !is_consumable(e) {
                return Err(WorldError::NotContained(e.id));
            }
        }

        // names
        let mut by_noun: BTreeMap<&str, Vec<Option<&str>>> = BTreeMap::new();
        for e in self.present_entities() {
            by_noun.entry(e.display_name.as_str()).or_default().push(e.modifier.as_deref());
        }
        for (noun, mods) in by_noun {
            if mods.len() > 1 {
                let distinct: BTreeSet<_> = mods.iter().collect();
                if mods.iter().any(Option::is_none) || distinct.len() != mods.len() {
                    return Err(WorldError::AmbiguousName(noun.to_owned()));
                }
            }
        }

        // lexicons
        for e in &self.entities {
            if !self.lexicons.objects.contains(&e.display_name) {
                return Err(WorldError::LexiconMissing { token: e.display_name.clone(), lexicon: "object" });
            }
            if let Some(m) = &e.modifier {
                if !self.lexicons.modifiers.contains(m) {
                    return Err(WorldError::LexiconMissing { token: m.clone(), lexicon: "modifier" });
                }
            }
        }
        Ok(())
    }

    // ----- snapshots -----

    pub fn to_snapshot_json(&self) -> String {
        serde_json::to_string(&SnapshotOut { version: SNAPSHOT_VERSION, world: self })
            .expect("world serializes")
    }

    pub fn from_snapshot_json(json: &str) -> Result<Self, WorldError> {
        let snap: SnapshotIn = serde_json::from_str(json).map_err(|e| WorldError::Snapshot(e.to_string()))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(WorldError::SnapshotVersion(snap.version));
        }
        snap.world.check_invariants()?;
        Ok(snap.world)
    }
}

fn is_consumable(e: &Entity) -> bool {
    e.has(Attribute::Edible) || e.has(Attribute::Drinkable)
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

/// Assembles a [`World`] by hand or from the generator.
#[derive(Debug, Clone)]
pub struct WorldBuilder {
    seed: u64,
    locations: Vec<Location>,
    entities: Vec<Entity>,
    containment: BTreeMap<EntityId, Holder>,
    player_at: Option<LocationId>,
}

impl WorldBuilder {
    pub fn new(seed: u64) -> Self {
        Self { seed, locations: Vec::new(), entities: Vec::new(), containment: BTreeMap::new(), player_at: None }
    }

    pub fn location(&mut self, name: &str) -> LocationId {
        let id = LocationId(self.locations.len() as u32);
        self.locations.push(Location { id, name: name.to_owned(), exits: BTreeMap::new() });
        id
    }

    /// Connects `from` to `to` going `dir`, and `to` back to `from` the opposite way.
    pub fn connect(&mut self, from: LocationId, dir: Direction, to: LocationId, door: Option<EntityId>) {
        self.locations[from.0 as usize].exits.insert(dir, Exit { to, door });
        self.locations[to.0 as usize].exits.insert(dir.opposite(), Exit { to: from, door });
    }

    pub fn door(&mut self, modifier: &str, open: bool) -> EntityId {
        let id = self.push(Entity::new(self.next_id(), Category::Door, "door", Some(modifier)));
        self.entities[id.0 as usize].open_state = if open { OpenState::Open } else { OpenState::Closed };
        id
    }

    pub fn entity(&mut self, category: Category, base_name: &str, modifier: Option<&str>, holder: Holder) -> EntityId {
        let id = self.push(Entity::new(self.next_id(), category, base_name, modifier));
        self.containment.insert(id, holder);
        id
    }

    pub fn set_open(&mut self, id: EntityId, open: bool) -> &mut Self {
        let e = &mut self.entities[id.0 as usize];
        if e.open_state != OpenState::NotOpenable {
            e.open_state = if open { OpenState::Open } else { OpenState::Closed };
        }
        self
    }

    pub fn set_cut(&mut self, id: EntityId, state: CutState) -> &mut Self {
        let e = &mut self.entities[id.0 as usize];
        if e.cut_state != CutState::NotCuttable {
            e.cut_state = state;
        }
        self
    }

    /// Pre-cooks an entity, which also makes it edible.
    pub fn set_cooked(&mut self, id: EntityId, style: CookStyle) -> &mut Self {
        let e = &mut self.entities[id.0 as usize];
        if e.cook_state != CookState::NotCookable {
            e.cook_state = CookState::Cooked(style);
            e.attributes = e.attributes.with(Attribute::Edible, true).expect("cookable implies portable");
        }
        self
    }

    pub fn set_display_name(&mut self, id: EntityId, name: &str) -> &mut Self {
        self.entities[id.0 as usize].display_name = name.to_owned();
        self
    }

    pub fn place(&mut self, id: EntityId, holder: Holder) -> &mut Self {
        self.containment.insert(id, holder);
        self
    }

    pub fn player_at(&mut self, loc: LocationId) -> &mut Self {
        self.player_at = Some(loc);
        self
    }

    pub fn entity_ref(&self, id: EntityId) -> &Entity {
        &self.entities[id.0 as usize]
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn location_count(&self) -> usize {
        self.locations.len()
    }

    fn next_id(&self) -> EntityId {
        EntityId(self.entities.len() as u32)
    }

    fn push(&mut self, e: Entity) -> EntityId {
        let id = e.id;
        self.entities.push(e);
        id
    }

    /// Finalizes lexicons and validates every invariant.
    pub fn build(self) -> Result<World, WorldError> {
        let player_at = self.player_at.or(self.locations.first().map(|l| l.id)).ok_or(WorldError::UnknownLocation(LocationId(0)))?;
        let mut modifiers: BTreeSet<String> = STATE_ADJECTIVES.iter().map(|s| s.to_string()).collect();
        let mut objects: BTreeSet<String> = Direction::ALL.iter().map(|d| d.as_str().to_owned()).collect();
        for e in &self.entities {
            modifiers.extend(e.modifier.clone());
            objects.insert(e.display_name.clone());
        }
        for l in &self.locations {
            objects.insert(l.name.clone());
        }
        let lexicons = Lexicons {
            actions: ACTIONS.iter().map(|s| s.to_string()).collect(),
            modifiers: modifiers.into_iter().collect(),
            objects: objects.into_iter().collect(),
        };
        let world = World {
            seed: self.seed,
            locations: self.locations,
            entities: self.entities,
            containment: self.containment,
            player_at,
            lexicons,
        };
        world.check_invariants()?;
        Ok(world)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// backyard --(screen door)-- kitchen; fridge holds soda; knife on floor.
    fn two_rooms() -> (World, BTreeMap<&'static str, EntityId>) {
        let mut b = WorldBuilder::new(1);
        let backyard = b.location("backyard");
        let kitchen = b.location("kitchen");
        let door = b.door("screen", true);
        b.connect(backyard, Direction::South, kitchen, Some(door));
        let fridge = b.entity(Category::Container, "fridge", None, Holder::Location(kitchen));
        let soda = b.entity(Category::Drink, "soda", None, Holder::Entity(fridge));
        let knife = b.entity(Category::SharpTool, "knife", None, Holder::Location(backyard));
        let oven = b.entity(Category::HeatContainer, "oven", None, Holder::Location(kitchen));
        let chicken = b.entity(Category::Raw, "chicken", None, Holder::Entity(oven));
        let apple = b.entity(Category::Fruit, "apple", Some("red"), Holder::Inventory);
        let potato = b.entity(Category::Raw, "potato", None, Holder::Location(kitchen));
        b.player_at(backyard);
        let ids = BTreeMap::from([
            ("door", door),
            ("fridge", fridge),
            ("soda", soda),
            ("knife", knife),
            ("oven", oven),
            ("chicken", chicken),
            ("apple", apple),
            ("potato", potato),
        ]);
        (b.build().unwrap(), ids)
    }

    #[test]
    fn entailments_reject_inconsistent_sets() {
        use Attribute::*;
        assert!(AttributeSet::new(&[Sharp]).is_err());
        assert!(AttributeSet::new(&[HeatSource, Portable]).is_err());
        assert!(AttributeSet::new(&[Holder, Portable]).is_err());
        assert!(AttributeSet::new(&[Cuttable]).is_err());
        assert!(AttributeSet::new(&[Sharp, Portable]).is_ok());
        assert!(AttributeSet::new(&[HeatSource, Holder, Openable]).is_ok());
    }

    #[test]
    fn attribute_sets_refuse_invalid_json() {
        let bad: Result<AttributeSet, _> = serde_json::from_str(r#"["holder","portable"]"#);
        assert!(bad.is_err());
        let ok: AttributeSet = serde_json::from_str(r#"["sharp","portable"]"#).unwrap();
        assert!(ok.get(Attribute::Sharp));
    }

    #[test]
    fn direct_holder_of_nested_inventory_and_floor() {
        let (w, ids) = two_rooms();
        assert_eq!(w.direct_holder(ids["soda"]).unwrap(), Holder::Entity(ids["fridge"]));
        assert_eq!(w.holder_token(w.direct_holder(ids["soda"]).unwrap()).unwrap(), "fridge");
        assert_eq!(w.direct_holder(ids["apple"]).unwrap(), Holder::Inventory);
        assert_eq!(w.holder_token(Holder::Inventory).unwrap(), "inventory");
        let backyard = w.location_by_name("backyard").unwrap();
        assert_eq!(w.direct_holder(ids["knife"]).unwrap(), Holder::Location(backyard));
        assert_eq!(w.direct_holder(EntityId(999)), Err(WorldError::UnknownEntity(EntityId(999))));
    }

    #[test]
    fn visibility_respects_rooms_and_closed_containers() {
        let (mut w, ids) = two_rooms();
        let vis = w.visible_entities();
        assert!(vis.contains(&ids["knife"]));
        assert!(vis.contains(&ids["door"]));
        assert!(vis.contains(&ids["apple"]));
        assert!(!vis.contains(&ids["potato"]), "other room");

        let kitchen = w.location_by_name("kitchen").unwrap();
        w.set_player_at(kitchen);
        let vis = w.visible_entities();
        assert!(vis.contains(&ids["fridge"]));
        assert!(!vis.contains(&ids["soda"]), "closed fridge occludes");
        w.entity_mut(ids["fridge"]).open_state = OpenState::Open;
        assert!(w.visible_entities().contains(&ids["soda"]));
    }

    #[test]
    fn reachable_versus_holding() {
        let (mut w, ids) = two_rooms();
        assert!(w.reachable(ids["knife"]));
        assert!(w.holding(ids["apple"]));
        assert!(!w.reachable(ids["apple"]));
        let kitchen = w.location_by_name("kitchen").unwrap();
        w.set_player_at(kitchen);
        assert!(!w.reachable(ids["chicken"]), "inside a closed oven");
        assert!(w.reachable(ids["potato"]));
        assert!(w.reachable(ids["door"]));
    }

    #[test]
    fn moves_that_create_cycles_are_refused() {
        let mut b = WorldBuilder::new(0);
        let room = b.location("kitchen");
        let table = b.entity(Category::Supporter, "table", None, Holder::Location(room));
        let mut w = b.build().unwrap();
        assert_eq!(w.move_entity(table, Holder::Entity(table)), Err(WorldError::ContainmentCycle(table)));
    }

    #[test]
    fn invariants_catch_duplicate_unmodified_names() {
        let mut b = WorldBuilder::new(0);
        let room = b.location("kitchen");
        b.entity(Category::Fruit, "apple", None, Holder::Location(room));
        b.entity(Category::Fruit, "apple", Some("red"), Holder::Location(room));
        assert_eq!(b.build().unwrap_err(), WorldError::AmbiguousName("apple".into()));
    }

    #[test]
    fn names_compose_state_adjectives() {
        let mut b = WorldBuilder::new(0);
        let room = b.location("kitchen");
        let c = b.entity(Category::Raw, "chicken", Some("red"), Holder::Location(room));
        b.set_cut(c, CutState::Diced);
        let w = b.build().unwrap();
        let e = w.entity(c).unwrap();
        assert_eq!(e.full_name(), "diced red raw chicken");
        assert_eq!(e.plain_name(), "raw chicken");
    }

    #[test]
    fn snapshot_round_trips_and_checks_version() {
        let (w, _) = two_rooms();
        let json = w.to_snapshot_json();
        assert!(json.starts_with(r#"{"version":1,"#));
        assert_eq!(World::from_snapshot_json(&json).unwrap(), w);
        let bumped = json.replacen(r#""version":1"#, r#""version":9"#, 1);
        assert_eq!(World::from_snapshot_json(&bumped), Err(WorldError::SnapshotVersion(9)));
    }
}
