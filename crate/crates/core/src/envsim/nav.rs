use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{number_port, outcome, port, WorldError};
use crate::bt::{NodePath, PortValue};
use crate::executor::{BbValue, Blackboard, LeafCall, LeafOutcome};

pub const NAV_PRIMITIVES: &[&str] = &[
    "MoveTo",
    "Spin",
    "Wait",
    "Dock",
    "Undock",
    "Recharge",
    "OpenDoor",
    "ReadBattery",
    "BatteryCheck",
    "IsDocked",
    "AtWaypoint",
    "IsPathClear",
];

/// A directed edge that refuses traversal. `fail_count: None` blocks it
/// permanently; `Some(k)` fails the next `k` attempts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockedEdge {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_count: Option<u32>,
}

/// A door on the undirected edge between two waypoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Door {
    pub between: [String; 2],
    #[serde(default)]
    pub open: bool,
}

fn full_battery() -> u32 {
    100
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavWorld {
    pub waypoints: BTreeMap<String, [f64; 2]>,
    pub robot_at: String,
    #[serde(default = "full_battery")]
    pub battery: u32,
    #[serde(default)]
    pub docked: bool,
    /// Waypoint where Dock succeeds; any waypoint when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dock_at: Option<String>,
    #[serde(default = "one")]
    pub drain_per_move: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocked: Vec<BlockedEdge>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub doors: BTreeMap<String, Door>,
    /// Waypoints occupied so far, starting with the initial one.
    #[serde(default)]
    pub visits: Vec<String>,
}

impl NavWorld {
    pub(super) fn normalize(&mut self) -> Result<(), WorldError> {
        let known = |w: &str| self.waypoints.contains_key(w);
        let mut names: Vec<&str> = vec![&self.robot_at];
        names.extend(self.dock_at.as_deref());
        for e in &self.blocked {
            names.push(&e.from);
            names.push(&e.to);
        }
        for d in self.doors.values() {
            names.extend(d.between.iter().map(String::as_str));
        }
        names.extend(self.visits.iter().map(String::as_str));
        if let Some(bad) = names.into_iter().find(|w| !known(w)) {
            return Err(WorldError(format!("unknown waypoint `{bad}`")));
        }
        if self.battery > 100 {
            return Err(WorldError(format!("battery {} outside 0..=100", self.battery)));
        }
        if self.visits.is_empty() {
            self.visits.push(self.robot_at.clone());
        }
        Ok(())
    }

    fn door_closed(&self, a: &str, b: &str) -> Option<&str> {
        self.doors
            .iter()
            .find(|(_, d)| {
                !d.open && ((d.between[0] == a && d.between[1] == b) || (d.between[0] == b && d.between[1] == a))
            })
            .map(|(name, _)| name.as_str())
    }

    fn path_clear(&self, to: &str) -> bool {
        let blocked = self
            .blocked
            .iter()
            .any(|e| e.from == self.robot_at && e.to == to && e.fail_count != Some(0));
        !blocked && self.door_closed(&self.robot_at, to).is_none()
    }

    fn move_to(&mut self, goal: &str) -> Result<LeafOutcome, String> {
        if !self.waypoints.contains_key(goal) {
            return Err(format!("unknown waypoint `{goal}`"));
        }
        if self.docked {
            return Err("cannot move while docked".into());
        }
        if goal == self.robot_at {
            return Ok(LeafOutcome::success());
        }
        if let Some(door) = self.door_closed(&self.robot_at, goal) {
            return Err(format!("door `{door}` is closed"));
        }
        let from = self.robot_at.clone();
        if let Some(edge) = self.blocked.iter_mut().find(|e| e.from == from && e.to == goal) {
            match &mut edge.fail_count {
                None => return Err(format!("path {from} -> {goal} is blocked")),
                Some(0) => {}
                Some(k) => {
                    *k -= 1;
                    return Err(format!("path {from} -> {goal} is temporarily blocked"));
                }
            }
        }
        if self.battery < self.drain_per_move {
            return Err(format!("battery too low ({}%)", self.battery));
        }
        self.battery -= self.drain_per_move;
        self.robot_at = goal.to_string();
        self.visits.push(goal.to_string());
        Ok(LeafOutcome::success())
    }
}

fn check(ok: bool, why: impl FnOnce() -> String) -> Result<LeafOutcome, String> {
    if ok {
        Ok(LeafOutcome::success())
    } else {
        Err(why())
    }
}

/// Returns `None` for ids this world does not handle.
pub(super) fn tick(
    w: &mut NavWorld,
    waits: &mut HashMap<NodePath, u32>,
    call: &LeafCall<'_>,
    bb: &mut Blackboard,
) -> Option<LeafOutcome> {
    let r = match call.id {
        "MoveTo" => port(call, bb, "goal").and_then(|g| w.move_to(&g)),
        "Spin" => Ok(LeafOutcome::success()),
        "Wait" => {
            let total = if call.ports.contains_key("ticks") {
                number_port(call, bb, "ticks").map(|n| n.max(1.0) as u32)
            } else {
                Ok(1)
            };
            total.map(|total| {
                let left = waits.entry(call.path.clone()).or_insert(total);
                *left -= 1;
                if *left == 0 {
                    waits.remove(call.path);
                    LeafOutcome::success()
                } else {
                    LeafOutcome::running()
                }
            })
        }
        "Dock" => match &w.dock_at {
            Some(d) if *d != w.robot_at => Err(format!("no dock at {}", w.robot_at)),
            _ => {
                w.docked = true;
                Ok(LeafOutcome::success())
            }
        },
        "Undock" => {
            w.docked = false;
            Ok(LeafOutcome::success())
        }
        "Recharge" => {
            if w.docked {
                w.battery = 100;
                Ok(LeafOutcome::success())
            } else {
                Err("must be docked to recharge".into())
            }
        }
        "OpenDoor" => port(call, bb, "door").and_then(|name| match w.doors.get_mut(&name) {
            Some(d) => {
                d.open = true;
                Ok(LeafOutcome::success())
            }
            None => Err(format!("unknown door `{name}`")),
        }),
        "ReadBattery" => match call.ports.get("level") {
            Some(PortValue::BlackboardRef(key)) => {
                bb.set(key, BbValue::Number(w.battery as f64));
                Ok(LeafOutcome::success())
            }
            _ => Err("ReadBattery needs a blackboard reference in `level`".into()),
        },
        "BatteryCheck" => number_port(call, bb, "threshold")
            .and_then(|t| check(w.battery as f64 >= t, || format!("battery {}% below {t}%", w.battery))),
        "IsDocked" => check(w.docked, || "robot is not docked".into()),
        "AtWaypoint" => {
            port(call, bb, "goal").and_then(|g| check(w.robot_at == g, || format!("robot is at {}", w.robot_at)))
        }
        "IsPathClear" => port(call, bb, "goal")
            .and_then(|g| check(w.path_clear(&g), || format!("path {} -> {g} is not clear", w.robot_at))),
        _ => return None,
    };
    Some(outcome(r))
}
