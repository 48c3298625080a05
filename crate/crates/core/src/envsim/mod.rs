//! Symbolic navigation and manipulation worlds that stand in for a robot.
//!
//! Every transition is a pure function of the world state, the leaf id and
//! its resolved ports. Fault injection is part of the world state (edge and
//! grasp fail counters), so [`SimEnvironment::reset`] replays faults exactly.

mod goal;
mod manip;
mod nav;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{NodePath, PortValue};
use crate::executor::{AdapterError, Blackboard, EnvironmentAdapter, LeafCall, LeafOutcome};
use crate::manifest::PrimitiveManifest;

pub use goal::{check_goal, evaluate_goal, GoalAtom, GoalPredicate};
pub use manip::{Location, ManipWorld, MANIP_PRIMITIVES};
pub use nav::{BlockedEdge, Door, NavWorld, NAV_PRIMITIVES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum World {
    Nav(NavWorld),
    Manip(ManipWorld),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid world: {0}")]
pub struct WorldError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no world handler for primitive(s): {}", unhandled.join(", "))]
pub struct BindError {
    pub unhandled: Vec<String>,
}

impl World {
    /// Checks invariants and fills derived state (the visit log starts at
    /// the initial waypoint).
    pub fn normalized(mut self) -> Result<World, WorldError> {
        match &mut self {
            World::Nav(w) => w.normalize()?,
            World::Manip(w) => w.check()?,
        }
        Ok(self)
    }

    pub fn handled_primitives(&self) -> &'static [&'static str] {
        match self {
            World::Nav(_) => NAV_PRIMITIVES,
            World::Manip(_) => MANIP_PRIMITIVES,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("world serializes")
    }
}

/// Reads a port, following blackboard references.
pub(crate) fn port(call: &LeafCall<'_>, bb: &Blackboard, name: &str) -> Result<String, String> {
    match call.ports.get(name) {
        None => Err(format!("{} is missing port `{name}`", call.id)),
        Some(v @ PortValue::Literal(_)) => Ok(bb.resolve(v).unwrap_or_default()),
        Some(v @ PortValue::BlackboardRef(key)) => bb
            .resolve(v)
            .ok_or_else(|| format!("blackboard key `{key}` is not set")),
    }
}

pub(crate) fn number_port(call: &LeafCall<'_>, bb: &Blackboard, name: &str) -> Result<f64, String> {
    let raw = port(call, bb, name)?;
    raw.trim()
        .parse::<f64>()
        .map_err(|_| format!("port `{name}` of {} is not a number: {raw:?}", call.id))
}

pub(crate) fn outcome(r: Result<LeafOutcome, String>) -> LeafOutcome {
    r.unwrap_or_else(LeafOutcome::failure)
}

/// Environment adapter over a symbolic world.
#[derive(Debug, Clone)]
pub struct SimEnvironment {
    initial: World,
    world: World,
    /// Remaining ticks of in-progress Wait leaves, keyed by node path.
    waits: HashMap<NodePath, u32>,
}

impl SimEnvironment {
    pub fn new(world: World) -> Result<Self, WorldError> {
        let world = world.normalized()?;
        Ok(SimEnvironment {
            initial: world.clone(),
            world,
            waits: HashMap::new(),
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn initial(&self) -> &World {
        &self.initial
    }

    pub fn snapshot_json(&self) -> String {
        self.world.to_json()
    }

    pub fn goal_met(&self, goal: &GoalPredicate) -> bool {
        evaluate_goal(&self.world, goal)
    }
}

/// Builds an adapter after checking that the world can execute every
/// primitive in the manifest.
pub fn bind_adapter(world: World, m: &PrimitiveManifest) -> Result<SimEnvironment, BindError> {
    let handled: BTreeSet<&str> = world.handled_primitives().iter().copied().collect();
    let unhandled: Vec<String> = m.ids().filter(|id| !handled.contains(id)).map(str::to_string).collect();
    if !unhandled.is_empty() {
        return Err(BindError { unhandled });
    }
    SimEnvironment::new(world).map_err(|e| BindError {
        unhandled: vec![e.to_string()],
    })
}

impl EnvironmentAdapter for SimEnvironment {
    fn tick_leaf(&mut self, call: &LeafCall<'_>, bb: &mut Blackboard) -> Result<LeafOutcome, AdapterError> {
        let handled = match &mut self.world {
            World::Nav(w) => nav::tick(w, &mut self.waits, call, bb),
            World::Manip(w) => manip::tick(w, call, bb),
        };
        handled.ok_or_else(|| AdapterError {
            leaf: call.id.to_string(),
            message: "no world handler for this primitive".into(),
        })
    }

    fn reset(&mut self) {
        self.world = self.initial.clone();
        self.waits.clear();
    }

    fn halt_leaf(&mut self, path: &NodePath) {
        self.waits.remove(path);
    }
}
