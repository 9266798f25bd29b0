use std::collections::BTreeSet;

use super::render::{describe, render_inventory, render_observation};
use super::{parse, resolve_entity, Command, Effect, Feedback, Resolution, Verb};
use crate::templates::{join_list, with_article, Catalog};
use crate::world::{
    Attribute, CookState, CookStyle, CutState, Direction, EntityId, Holder, LocationId, OpenState, World,
};

/// Per-state cache of the visibility queries that command planning repeats.
#[derive(Debug, Clone)]
pub struct Scene {
    here: LocationId,
    visible: BTreeSet<EntityId>,
}

impl Scene {
    pub fn new(world: &World) -> Self {
        Self { here: world.player_at(), visible: world.visible_entities() }
    }

    pub fn visible(&self) -> &BTreeSet<EntityId> {
        &self.visible
    }

    pub fn reachable(&self, world: &World, id: EntityId) -> bool {
        self.visible.contains(&id) && world.root_of(id) == Ok(Holder::Location(self.here))
    }

    pub fn holding(&self, world: &World, id: EntityId) -> bool {
        world.holding(id)
    }
}

/// A command whose preconditions all hold, ready to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Plan {
    Look,
    Inventory,
    Wait,
    Go(LocationId),
    Examine(EntityId),
    Open(EntityId),
    Close(EntityId),
    Take(EntityId, Holder),
    Drop(EntityId),
    Put(EntityId, EntityId),
    Insert(EntityId, EntityId),
    Eat(EntityId),
    Drink(EntityId),
    Cook(EntityId, EntityId),
    Cut(EntityId, Verb),
}

/// Parses and applies a raw command string.
pub fn apply_str(world: &mut World, raw: &str) -> Feedback {
    match parse(raw) {
        Ok(cmd) => apply(world, &cmd),
        Err(e) => Feedback::fail(e.feedback(Catalog::standard())),
    }
}

/// Applies a parsed command. Failed commands leave the world untouched.
pub fn apply(world: &mut World, cmd: &Command) -> Feedback {
    let catalog = Catalog::standard();
    let scene = Scene::new(world);
    match plan(world, &scene, cmd, catalog) {
        Ok(p) => execute(world, p, catalog),
        Err(text) => Feedback::fail(text),
    }
}

fn name(world: &World, id: EntityId) -> String {
    world.entities()[id.0 as usize].full_name()
}

pub(crate) fn plan(world: &World, scene: &Scene, cmd: &Command, t: &Catalog) -> Result<Plan, String> {
    let verb = cmd.action.as_str();
    if cmd.action.is_bare() {
        if cmd.object.is_some() {
            return Err(t.feedback("extra_words", &[("verb", verb)]));
        }
        return Ok(match cmd.action {
            Verb::Look => Plan::Look,
            Verb::Inventory => Plan::Inventory,
            _ => Plan::Wait,
        });
    }
    let Some(object) = cmd.object.as_deref() else {
        return Err(t.feedback("no_object", &[("verb", verb)]));
    };
    if cmd.action == Verb::Go {
        let dir = Direction::parse(object).filter(|_| cmd.modifier.is_none());
        let exit = dir.and_then(|d| world.current_location().exits.get(&d));
        let Some(exit) = exit else {
            return Err(t.feedback("no_exit", &[]));
        };
        if let Some(door) = exit.door {
            if world.entities()[door.0 as usize].open_state != OpenState::Open {
                return Err(t.feedback("door_closed", &[("door", &name(world, door))]));
            }
        }
        return Ok(Plan::Go(exit.to));
    }

    let id = match resolve_entity(world, scene, cmd.modifier.as_deref(), object) {
        Resolution::Entity(id) => id,
        Resolution::NotVisible => return Err(t.feedback("not_visible", &[])),
        Resolution::Ambiguous(ids) => {
            let options: Vec<String> = ids.iter().map(|id| format!("the {}", name(world, *id))).collect();
            let options = match options.split_last() {
                Some((last, init)) if !init.is_empty() => format!("{} or {last}", init.join(", ")),
                _ => join_list(&options),
            };
            return Err(t.feedback("ambiguous", &[("options", &options)]));
        }
    };
    let e = &world.entities()[id.0 as usize];
    let thing = e.full_name();
    let fail = |key: &str| Err(t.feedback(key, &[("thing", &thing), ("verb", verb)]));
    let held = scene.holding(world, id);
    let reachable = scene.reachable(world, id);

    match cmd.action {
        Verb::Examine => Ok(Plan::Examine(id)),
        Verb::Open | Verb::Close => {
            let opening = cmd.action == Verb::Open;
            if !e.has(Attribute::Openable) {
                return fail(if opening { "not_openable" } else { "not_closable" });
            }
            if !reachable {
                return fail("not_visible");
            }
            match (opening, e.open_state) {
                (true, OpenState::Open) => fail("already_open"),
                (false, OpenState::Closed) => fail("already_closed"),
                (true, _) => Ok(Plan::Open(id)),
                (false, _) => Ok(Plan::Close(id)),
            }
        }
        Verb::Take => {
            if held {
                return fail("already_have");
            }
            if !e.has(Attribute::Portable) {
                return fail("fixed_in_place");
            }
            let from = world.direct_holder(id).map_err(|err| err.to_string())?;
            Ok(Plan::Take(id, from))
        }
        Verb::Drop | Verb::Put | Verb::Insert => {
            if !held {
                return fail("not_carrying");
            }
            match cmd.action {
                Verb::Drop => Ok(Plan::Drop(id)),
                Verb::Put => first_reachable(world, scene, |h| {
                    let h = &world.entities()[h.0 as usize];
                    h.is_supporter()
                })
                .map(|to| Plan::Put(id, to))
                .map_or_else(|| fail("no_supporter"), Ok),
                _ => first_reachable(world, scene, |h| {
                    let h = &world.entities()[h.0 as usize];
                    h.is_container() && h.open_state == OpenState::Open
                })
                .map(|to| Plan::Insert(id, to))
                .map_or_else(|| fail("no_container"), Ok),
            }
        }
        Verb::Eat | Verb::Drink => {
            let (attr, refusal) =
                if cmd.action == Verb::Eat { (Attribute::Edible, "inedible") } else { (Attribute::Drinkable, "undrinkable") };
            if !held {
                return fail(if e.has(Attribute::Portable) { "take_first" } else { refusal });
            }
            if !e.has(attr) {
                return fail(refusal);
            }
            Ok(if cmd.action == Verb::Eat { Plan::Eat(id) } else { Plan::Drink(id) })
        }
        Verb::Cook => {
            if !held {
                return fail(if e.has(Attribute::Portable) { "take_first" } else { "not_cookable" });
            }
            match e.cook_state {
                CookState::NotCookable => return fail("not_cookable"),
                CookState::Cooked(_) => return fail("already_cooked"),
                CookState::Raw => {}
            }
            first_reachable(world, scene, |h| h != id && world.entities()[h.0 as usize].has(Attribute::HeatSource))
                .map(|source| Plan::Cook(id, source))
                .map_or_else(|| fail("no_heat"), Ok)
        }
        Verb::Slice | Verb::Chop | Verb::Dice => {
            if !held {
                return fail(if e.has(Attribute::Portable) { "take_first" } else { "not_cuttable" });
            }
            match e.cut_state {
                CutState::NotCuttable => return fail("not_cuttable"),
                CutState::Uncut => {}
                _ => return fail("already_cut"),
            }
            let has_sharp = world
                .contents(Holder::Inventory)
                .into_iter()
                .any(|s| s != id && world.entities()[s.0 as usize].has(Attribute::Sharp));
            if !has_sharp {
                return fail("no_sharp");
            }
            Ok(Plan::Cut(id, cmd.action))
        }
        Verb::Look | Verb::Inventory | Verb::Wait | Verb::Go => unreachable!("handled above"),
    }
}

/// Lowest-id reachable entity satisfying `pred`: the first one a room description mentions.
pub(crate) fn first_reachable(world: &World, scene: &Scene, pred: impl Fn(EntityId) -> bool) -> Option<EntityId> {
    scene.visible.iter().copied().find(|&h| scene.reachable(world, h) && pred(h))
}

pub(crate) fn execute(world: &mut World, plan: Plan, t: &Catalog) -> Feedback {
    let ok = |text: String, effect: Effect| Feedback { text, success: true, effect };
    match plan {
        Plan::Look => ok(render_observation(world), Effect::Looked),
        Plan::Inventory => ok(render_inventory(world), Effect::Looked),
        Plan::Wait => ok(t.feedback("waited", &[]), Effect::Waited),
        Plan::Go(to) => {
            world.set_player_at(to);
            ok(render_observation(world), Effect::Moved)
        }
        Plan::Examine(id) => ok(describe(world, id), Effect::Examined),
        Plan::Open(id) | Plan::Close(id) => {
            let opening = matches!(plan, Plan::Open(_));
            world.entity_mut(id).open_state = if opening { OpenState::Open } else { OpenState::Closed };
            let thing = name(world, id);
            if opening {
                ok(t.feedback("opened", &[("thing", &thing)]), Effect::Opened)
            } else {
                ok(t.feedback("closed", &[("thing", &thing)]), Effect::Closed)
            }
        }
        Plan::Take(id, from) => {
            let thing = name(world, id);
            world.move_entity(id, Holder::Inventory).expect("inventory accepts portables");
            let text = match from {
                Holder::Entity(h) => t.feedback("taken_from", &[("thing", &thing), ("holder", &name(world, h))]),
                _ => t.feedback("taken_floor", &[("thing", &thing)]),
            };
            ok(text, Effect::Taken)
        }
        Plan::Drop(id) => {
            let here = world.player_at();
            world.move_entity(id, Holder::Location(here)).expect("locations accept anything");
            ok(t.feedback("dropped", &[("thing", &name(world, id))]), Effect::Dropped)
        }
        Plan::Put(id, to) | Plan::Insert(id, to) => {
            world.move_entity(id, Holder::Entity(to)).expect("planned target is a holder");
            let vars = [("thing", name(world, id)), ("holder", name(world, to))];
            let vars: Vec<(&str, &str)> = vars.iter().map(|(k, v)| (*k, v.as_str())).collect();
            if matches!(plan, Plan::Put(..)) {
                ok(t.feedback("put", &vars), Effect::Put)
            } else {
                ok(t.feedback("inserted", &vars), Effect::Inserted)
            }
        }
        Plan::Eat(id) | Plan::Drink(id) => {
            let thing = name(world, id);
            world.destroy(id);
            if matches!(plan, Plan::Eat(_)) {
                ok(t.feedback("eaten", &[("thing", &thing)]), Effect::Eaten)
            } else {
                ok(t.feedback("drunk", &[("thing", &thing)]), Effect::Drunk)
            }
        }
        Plan::Cook(id, source) => {
            let thing = name(world, id);
            let source_name = name(world, source);
            let style = CookStyle::for_heat_source(&world.entities()[source.0 as usize].base_name);
            let e = world.entity_mut(id);
            e.cook_state = CookState::Cooked(style);
            e.attributes = e.attributes.with(Attribute::Edible, true).expect("cookable implies portable");
            let result = with_article(&e.full_name());
            ok(t.feedback("cooked", &[("thing", &thing), ("source", &source_name), ("result", &result)]), Effect::Cooked)
        }
        Plan::Cut(id, verb) => {
            let thing = name(world, id);
            let e = world.entity_mut(id);
            e.cut_state = match verb {
                Verb::Slice => CutState::Sliced,
                Verb::Chop => CutState::Chopped,
                _ => CutState::Diced,
            };
            let result = with_article(&e.full_name());
            ok(t.feedback("cut", &[("verb", verb.as_str()), ("thing", &thing), ("result", &result)]), Effect::Cut)
        }
    }
}
