use std::collections::BTreeSet;

use super::apply::{plan, Scene};
use super::{Command, Verb};
use crate::templates::Catalog;
use crate::world::{Direction, World};

/// Every command string that would succeed in the current state.
///
/// Candidates are the bare verbs, `go` with each direction, and each
/// object-taking verb applied to each visible entity by its noun alone and by
/// each single adjective plus noun.
pub fn valid_commands(world: &World) -> Vec<String> {
    let catalog = Catalog::standard();
    let scene = Scene::new(world);
    let mut out = BTreeSet::new();
    let mut consider = |action: Verb, modifier: Option<&str>, object: Option<&str>| {
        let mut raw = action.as_str().to_owned();
        for word in [modifier, object].into_iter().flatten() {
            raw.push(' ');
            raw.push_str(word);
        }
        let cmd = Command {
            action,
            modifier: modifier.map(str::to_owned),
            object: object.map(str::to_owned),
            raw: raw.clone(),
        };
        if plan(world, &scene, &cmd, catalog).is_ok() {
            out.insert(raw);
        }
    };
    for verb in [Verb::Look, Verb::Inventory, Verb::Wait] {
        consider(verb, None, None);
    }
    for dir in Direction::ALL {
        consider(Verb::Go, None, Some(dir.as_str()));
    }
    for id in scene.visible() {
        let e = &world.entities()[id.0 as usize];
        for verb in Verb::ALL.into_iter().filter(|v| !v.is_bare() && *v != Verb::Go) {
            consider(verb, None, Some(&e.display_name));
            for adj in e.adjectives() {
                consider(verb, Some(adj), Some(&e.display_name));
            }
        }
    }
    out.into_iter().collect()
}
