use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{outcome, port, WorldError};
use crate::executor::{Blackboard, LeafCall, LeafOutcome};

pub const MANIP_PRIMITIVES: &[&str] = &["Pick", "Place", "Stack", "IsAt", "IsHolding", "IsClear", "IsOn"];

/// Where an object rests. Written in YAML as `zone_name`, `on:other` or `gripper`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Location {
    Zone(String),
    On(String),
    Gripper,
}

impl TryFrom<String> for Location {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        if s == "gripper" {
            Ok(Location::Gripper)
        } else if let Some(rest) = s.strip_prefix("on:") {
            if rest.is_empty() {
                Err("empty `on:` target".into())
            } else {
                Ok(Location::On(rest.to_string()))
            }
        } else if s.is_empty() {
            Err("empty location".into())
        } else {
            Ok(Location::Zone(s))
        }
    }
}

impl From<Location> for String {
    fn from(l: Location) -> String {
        l.to_string()
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Zone(z) => f.write_str(z),
            Location::On(o) => write!(f, "on:{o}"),
            Location::Gripper => f.write_str("gripper"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipWorld {
    pub zones: BTreeSet<String>,
    pub objects: BTreeMap<String, Location>,
    /// Number of upcoming Pick attempts per object that slip.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pick_faults: BTreeMap<String, u32>,
}

impl ManipWorld {
    pub(super) fn check(&self) -> Result<(), WorldError> {
        let mut in_gripper = 0;
        for (name, loc) in &self.objects {
            match loc {
                Location::Zone(z) if !self.zones.contains(z) => {
                    return Err(WorldError(format!("object `{name}` in unknown zone `{z}`")))
                }
                Location::On(o) if !self.objects.contains_key(o) => {
                    return Err(WorldError(format!("object `{name}` on unknown object `{o}`")))
                }
                Location::Gripper => in_gripper += 1,
                _ => {}
            }
            if self.base_zone(name).is_none() && *loc != Location::Gripper && !self.held_below(name) {
                return Err(WorldError(format!("on-relation cycle through `{name}`")));
            }
        }
        if in_gripper > 1 {
            return Err(WorldError("more than one object in the gripper".into()));
        }
        if let Some(bad) = self.pick_faults.keys().find(|o| !self.objects.contains_key(*o)) {
            return Err(WorldError(format!("pick fault for unknown object `{bad}`")));
        }
        Ok(())
    }

    /// True when following on-relations from `name` ends at the gripper.
    fn held_below(&self, name: &str) -> bool {
        let mut cur = name;
        for _ in 0..=self.objects.len() {
            match self.objects.get(cur) {
                Some(Location::On(o)) => cur = o,
                Some(Location::Gripper) => return true,
                _ => return false,
            }
        }
        false
    }

    /// The zone at the bottom of the stack holding `name`.
    pub fn base_zone(&self, name: &str) -> Option<&str> {
        let mut cur = name;
        for _ in 0..=self.objects.len() {
            match self.objects.get(cur)? {
                Location::Zone(z) => return Some(z),
                Location::On(o) => cur = o,
                Location::Gripper => return None,
            }
        }
        None
    }

    pub fn holding(&self) -> Option<&str> {
        self.objects
            .iter()
            .find(|(_, l)| **l == Location::Gripper)
            .map(|(n, _)| n.as_str())
    }

    pub fn is_clear(&self, name: &str) -> bool {
        !self.objects.values().any(|l| *l == Location::On(name.to_string()))
    }

    fn known(&self, name: &str) -> Result<(), String> {
        if self.objects.contains_key(name) {
            Ok(())
        } else {
            Err(format!("unknown object `{name}`"))
        }
    }

    fn pick(&mut self, object: &str) -> Result<LeafOutcome, String> {
        self.known(object)?;
        if let Some(h) = self.holding() {
            return Err(format!("gripper already holds `{h}`"));
        }
        if !self.is_clear(object) {
            return Err(format!("`{object}` has something on top"));
        }
        if let Some(k) = self.pick_faults.get_mut(object).filter(|k| **k > 0) {
            *k -= 1;
            return Err(format!("grasp on `{object}` slipped"));
        }
        self.objects.insert(object.to_string(), Location::Gripper);
        Ok(LeafOutcome::success())
    }

    fn place(&mut self, zone: &str) -> Result<LeafOutcome, String> {
        if !self.zones.contains(zone) {
            return Err(format!("unknown zone `{zone}`"));
        }
        let held = self.holding().ok_or("gripper is empty")?.to_string();
        self.objects.insert(held, Location::Zone(zone.to_string()));
        Ok(LeafOutcome::success())
    }

    fn stack(&mut self, object: &str, on: &str) -> Result<LeafOutcome, String> {
        self.known(object)?;
        self.known(on)?;
        if self.holding() != Some(object) {
            return Err(format!("not holding `{object}`"));
        }
        if object == on || !self.is_clear(on) || self.base_zone(on).is_none() {
            return Err(format!("cannot stack `{object}` on `{on}`"));
        }
        self.objects.insert(object.to_string(), Location::On(on.to_string()));
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

pub(super) fn tick(w: &mut ManipWorld, call: &LeafCall<'_>, bb: &mut Blackboard) -> Option<LeafOutcome> {
    let r = match call.id {
        "Pick" => port(call, bb, "object").and_then(|o| w.pick(&o)),
        "Place" => port(call, bb, "zone").and_then(|z| w.place(&z)),
        "Stack" => port(call, bb, "object").and_then(|o| port(call, bb, "on").and_then(|on| w.stack(&o, &on))),
        "IsAt" => port(call, bb, "object").and_then(|o| {
            let z = port(call, bb, "zone")?;
            check(w.base_zone(&o) == Some(z.as_str()), || format!("`{o}` is not in {z}"))
        }),
        "IsOn" => port(call, bb, "object").and_then(|o| {
            let on = port(call, bb, "on")?;
            check(w.objects.get(&o) == Some(&Location::On(on.clone())), || {
                format!("`{o}` is not on `{on}`")
            })
        }),
        "IsHolding" => port(call, bb, "object")
            .and_then(|o| check(w.holding() == Some(o.as_str()), || format!("not holding `{o}`"))),
        "IsClear" => port(call, bb, "object").and_then(|o| {
            w.known(&o)?;
            check(w.is_clear(&o), || format!("`{o}` is covered"))
        }),
        _ => return None,
    };
    Some(outcome(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world() -> ManipWorld {
        crate::yaml::from_str(
            "zones: [table, bin]\nobjects: {block: table, cube: on:block, ball: gripper}\npick_faults: {block: 1}\n",
        )
        .unwrap()
    }

    #[test]
    fn location_strings() {
        let w = world();
        assert_eq!(w.objects["cube"], Location::On("block".into()));
        assert_eq!(w.base_zone("cube"), Some("table"));
        assert_eq!(w.holding(), Some("ball"));
        assert!(w.check().is_ok());
    }

    #[test]
    fn pick_while_holding_leaves_world_unchanged() {
        let mut w = world();
        let before = w.clone();
        assert!(w.pick("cube").is_err());
        assert_eq!(w, before);
    }

    #[test]
    fn buried_object_cannot_be_picked() {
        let mut w = world();
        w.place("bin").unwrap();
        assert!(w.pick("block").unwrap_err().contains("on top"));
    }

    #[test]
    fn pick_fault_slips_once() {
        let mut w = world();
        w.place("bin").unwrap();
        w.pick("cube").unwrap();
        w.place("bin").unwrap();
        assert!(w.pick("block").unwrap_err().contains("slipped"));
        w.pick("block").unwrap();
        w.stack("block", "cube").unwrap();
        assert_eq!(w.base_zone("block"), Some("bin"));
    }

    #[test]
    fn cycles_and_double_grip_rejected() {
        let w: ManipWorld = crate::yaml::from_str("zones: [t]\nobjects: {a: on:b, b: on:a}\n").unwrap();
        assert!(w.check().is_err());
        let w: ManipWorld = crate::yaml::from_str("zones: [t]\nobjects: {a: gripper, b: gripper}\n").unwrap();
        assert!(w.check().is_err());
    }
}
