use crate::templates::{fill, join_list, pick, with_article, Catalog};
use crate::world::{Attribute, Entity, EntityId, Holder, OpenState, World};

/// "an open fridge", "a closed oven", "a red apple".
fn phrase(e: &Entity) -> String {
    match e.open_state {
        OpenState::Open => with_article(&format!("open {}", e.full_name())),
        OpenState::Closed => with_article(&format!("closed {}", e.full_name())),
        OpenState::NotOpenable => with_article(&e.full_name()),
    }
}

fn shows_contents(e: &Entity) -> bool {
    e.has(Attribute::Holder) && e.open_state != OpenState::Closed
}

/// Contents sentence for an open holder, or `None` when nothing is shown.
fn contents_sentence(world: &World, e: &Entity, t: &Catalog) -> Option<String> {
    if !shows_contents(e) {
        return None;
    }
    let items: Vec<String> =
        world.contents(Holder::Entity(e.id)).iter().map(|id| phrase(&world.entities()[id.0 as usize])).collect();
    let holder = e.full_name();
    if items.is_empty() {
        return e.is_container().then(|| t.room.container_empty.clone());
    }
    let template = if e.is_container() { &t.room.container_contents } else { &t.room.supporter_contents };
    Some(fill(template, &[("holder", &holder), ("list", &join_list(&items))]))
}

/// Templated description of the player's location. Inventory is not included.
pub fn render_observation(world: &World) -> String {
    let t = Catalog::standard();
    let room = &t.room;
    let seed = world.seed;
    let here = world.current_location();
    let mut out: Vec<String> = vec![fill(pick(&room.intro, seed, "intro", here.id.0), &[("room", &here.name)])];

    for id in world.contents(Holder::Location(here.id)) {
        let e = &world.entities()[id.0 as usize];
        let (slot, variants) = if e.is_container() {
            ("container", &room.container)
        } else if e.is_supporter() {
            ("supporter", &room.supporter)
        } else if e.has(Attribute::Portable) {
            ("item", &room.item)
        } else {
            ("fixture", &room.fixture)
        };
        out.push(fill(pick(variants, seed, slot, id.0), &[("thing", &phrase(e))]));
        out.extend(contents_sentence(world, e, t));
    }

    for (dir, exit) in &here.exits {
        let sentence = match exit.door {
            Some(door) => fill(
                pick(&room.door_exit, seed, "door_exit", door.0),
                &[("door", &phrase(&world.entities()[door.0 as usize])), ("dir", dir.as_str())],
            ),
            None => fill(pick(&room.plain_exit, seed, "plain_exit", here.id.0 * 4 + *dir as u32), &[("dir", dir.as_str())]),
        };
        out.push(sentence);
    }
    out.join(" ")
}

pub fn render_inventory(world: &World) -> String {
    let t = Catalog::standard();
    let items: Vec<String> =
        world.contents(Holder::Inventory).iter().map(|id| phrase(&world.entities()[id.0 as usize])).collect();
    if items.is_empty() {
        t.feedback("inventory_empty", &[])
    } else {
        t.feedback("inventory", &[("list", &join_list(&items))])
    }
}

/// Feedback for `examine`.
pub fn describe(world: &World, id: EntityId) -> String {
    let t = Catalog::standard();
    let e = &world.entities()[id.0 as usize];
    let thing = e.full_name();
    let head = match e.open_state {
        OpenState::Open => t.feedback("examine_open", &[("thing", &thing)]),
        OpenState::Closed => t.feedback("examine_closed", &[("thing", &thing)]),
        OpenState::NotOpenable => t.feedback("examine_plain", &[("thing", &thing)]),
    };
    match contents_sentence(world, e, t) {
        Some(tail) => format!("{head} {tail}"),
        None => head,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Category, Direction, WorldBuilder};

    fn kitchen(open_fridge: bool) -> World {
        let mut b = WorldBuilder::new(11);
        let backyard = b.location("backyard");
        let kitchen = b.location("kitchen");
        let door = b.door("screen", true);
        b.connect(backyard, Direction::North, kitchen, Some(door));
        let fridge = b.entity(Category::Container, "fridge", None, Holder::Location(kitchen));
        b.set_open(fridge, open_fridge);
        let oven = b.entity(Category::HeatContainer, "oven", None, Holder::Location(kitchen));
        b.entity(Category::Raw, "egg", None, Holder::Entity(oven));
        let counter = b.entity(Category::Supporter, "counter", None, Holder::Location(kitchen));
        b.entity(Category::Fruit, "apple", Some("red"), Holder::Entity(counter));
        b.entity(Category::SharpTool, "knife", None, Holder::Entity(counter));
        b.entity(Category::Snack, "cookie", None, Holder::Inventory);
        b.player_at(kitchen);
        b.build().unwrap()
    }

    #[test]
    fn open_empty_fridge_and_door_exit() {
        let w = kitchen(true);
        let obs = render_observation(&w);
        assert!(obs.contains("an open fridge"), "{obs}");
        assert!(obs.contains("an open fridge here. It is empty!") || obs.contains("an open fridge. What a find! It is empty!"), "{obs}");
        assert!(obs.contains("There is an open screen door leading south.") || obs.contains("You notice an open screen door leading south."), "{obs}");
        assert!(obs.contains("a closed oven"), "{obs}");
        assert!(!obs.contains("egg"), "closed oven hides its contents");
        assert!(obs.contains("On the counter you can see a red apple and a knife."), "{obs}");
        assert!(!obs.contains("cookie"), "inventory is not part of the observation");
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(render_observation(&kitchen(false)), render_observation(&kitchen(false)));
        assert!(!render_observation(&kitchen(false)).contains("empty"));
    }

    #[test]
    fn inventory_and_examine_text() {
        let w = kitchen(false);
        assert_eq!(render_inventory(&w), "You are carrying: a cookie.");
        let fridge = w.entities().iter().find(|e| e.base_name == "fridge").unwrap().id;
        assert_eq!(describe(&w, fridge), "The fridge is closed.");
        let counter = w.entities().iter().find(|e| e.base_name == "counter").unwrap().id;
        assert_eq!(
            describe(&w, counter),
            "There is nothing special about the counter. On the counter you can see a red apple and a knife."
        );
    }
}
