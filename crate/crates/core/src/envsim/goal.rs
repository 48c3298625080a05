use serde::{Deserialize, Serialize};

use super::{Location, World, WorldError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GoalAtom {
    RobotAt(String),
    /// The visit log contains these waypoints as a subsequence.
    VisitedInOrder(Vec<String>),
    Docked(bool),
    BatteryAtLeast(u32),
    ObjectAt {
        object: String,
        zone: String,
    },
    ObjectOn {
        object: String,
        on: String,
    },
    /// `None` asks for an empty gripper.
    Holding(Option<String>),
}

/// Conjunction of atoms.
pub type GoalPredicate = Vec<GoalAtom>;

fn is_subsequence(needle: &[String], hay: &[String]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

pub fn evaluate_goal(world: &World, goal: &GoalPredicate) -> bool {
    goal.iter().all(|atom| match (atom, world) {
        (GoalAtom::RobotAt(w), World::Nav(n)) => n.robot_at == *w,
        (GoalAtom::VisitedInOrder(seq), World::Nav(n)) => is_subsequence(seq, &n.visits),
        (GoalAtom::Docked(d), World::Nav(n)) => n.docked == *d,
        (GoalAtom::BatteryAtLeast(b), World::Nav(n)) => n.battery >= *b,
        (GoalAtom::ObjectAt { object, zone }, World::Manip(m)) => m.base_zone(object) == Some(zone.as_str()),
        (GoalAtom::ObjectOn { object, on }, World::Manip(m)) => {
            m.objects.get(object) == Some(&Location::On(on.clone()))
        }
        (GoalAtom::Holding(h), World::Manip(m)) => m.holding() == h.as_deref(),
        _ => false,
    })
}

/// Checks that every atom fits the world kind and names things that exist.
pub fn check_goal(world: &World, goal: &GoalPredicate) -> Result<(), WorldError> {
    if goal.is_empty() {
        return Err(WorldError("goal has no conditions".into()));
    }
    for atom in goal {
        let names: Vec<&String> = match (atom, world) {
            (GoalAtom::RobotAt(w), World::Nav(_)) => vec![w],
            (GoalAtom::VisitedInOrder(seq), World::Nav(_)) => seq.iter().collect(),
            (GoalAtom::Docked(_) | GoalAtom::BatteryAtLeast(_), World::Nav(_)) => vec![],
            (GoalAtom::ObjectAt { object, .. }, World::Manip(_)) => vec![object],
            (GoalAtom::ObjectOn { object, on }, World::Manip(_)) => vec![object, on],
            (GoalAtom::Holding(h), World::Manip(_)) => h.iter().collect(),
            _ => return Err(WorldError(format!("goal {atom:?} does not apply to this world"))),
        };
        let exists = |n: &String| match world {
            World::Nav(w) => w.waypoints.contains_key(n),
            World::Manip(m) => m.objects.contains_key(n),
        };
        if let Some(bad) = names.into_iter().find(|n| !exists(n)) {
            return Err(WorldError(format!("goal refers to unknown `{bad}`")));
        }
        if let (GoalAtom::ObjectAt { zone, .. }, World::Manip(m)) = (atom, world) {
            if !m.zones.contains(zone) {
                return Err(WorldError(format!("goal refers to unknown zone `{zone}`")));
            }
        }
    }
    Ok(())
}
