#!/usr/bin/env python3
"""Writes the benchmark suite under suite/: manifests, tasks, reference
solutions and the scripted-generator fixtures used by the tests.

Run from the repository root:  python3 scripts/gen_suite.py
The output is deterministic, so re-running only produces a diff when this
file changes.
"""

import json
import os
import shutil

import yaml

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "suite")

# --- manifests -------------------------------------------------------------

def prim(pid, kind, desc, *params):
    p = {"id": pid, "kind": kind, "description": desc}
    if params:
        p["params"] = [dict(x) for x in params]
    return p


def param(name, typ, required=True):
    d = {"name": name, "type": typ}
    if not required:
        d["required"] = False
    return d


NAV_BASIC = [
    prim("MoveTo", "action", "Drive to a named waypoint", param("goal", "text")),
    prim("Spin", "action", "Rotate in place once"),
    prim("Wait", "action", "Stay still for a number of ticks", param("ticks", "number", False)),
    prim("Dock", "action", "Attach to the charging dock (must be at the dock)"),
    prim("Undock", "action", "Detach from the charging dock"),
    prim("BatteryCheck", "condition", "True when the battery level is at least threshold percent",
         param("threshold", "number")),
    prim("AtWaypoint", "condition", "True when the robot is at the given waypoint", param("goal", "text")),
]

NAV_EXTENDED = NAV_BASIC + [
    prim("Recharge", "action", "Fill the battery (must be docked)"),
    prim("OpenDoor", "action", "Open a named door", param("door", "text")),
    prim("ReadBattery", "action", "Write the battery level to a blackboard entry", param("level", "blackboard")),
    prim("IsDocked", "condition", "True when the robot is docked"),
    prim("IsPathClear", "condition", "True when the direct path to a waypoint is open", param("goal", "text")),
]

MANIP_BASIC = [
    prim("Pick", "action", "Grasp an object that has nothing on top of it", param("object", "text")),
    prim("Place", "action", "Put the held object down in a zone", param("zone", "text")),
    prim("IsAt", "condition", "True when the object rests in the zone", param("object", "text"), param("zone", "text")),
    prim("IsHolding", "condition", "True when the gripper holds the object", param("object", "text")),
]

MANIP_EXTENDED = MANIP_BASIC + [
    prim("Stack", "action", "Put the held object on top of another object", param("object", "text"), param("on", "text")),
    prim("IsClear", "condition", "True when nothing is stacked on the object", param("object", "text")),
    prim("IsOn", "condition", "True when object sits directly on another", param("object", "text"), param("on", "text")),
]

MANIFESTS = {
    "nav_basic": NAV_BASIC,
    "nav_extended": NAV_EXTENDED,
    "manip_basic": MANIP_BASIC,
    "manip_extended": MANIP_EXTENDED,
}


def action_list(manifest):
    lines = []
    for p in manifest:
        ps = []
        for q in p.get("params", []):
            opt = "" if q.get("required", True) else "?"
            ps.append(f"{q['name']}{opt}: {q['type']}")
        lines.append(f"{p['id']}({', '.join(ps)}) — {p['description']}")
    return "\n".join(lines) + "\n"


# --- tree builder ----------------------------------------------------------

class N:
    def __init__(self, tag, attrs=None, children=()):
        self.tag = tag
        self.attrs = attrs or {}
        self.children = list(children)

    def lines(self, depth):
        pad = "  " * depth
        attrs = "".join(f' {k}="{v}"' for k, v in self.attrs.items())
        if not self.children:
            return [f"{pad}<{self.tag}{attrs}/>"]
        out = [f"{pad}<{self.tag}{attrs}>"]
        for c in self.children:
            out.extend(c.lines(depth + 1))
        out.append(f"{pad}</{self.tag}>")
        return out


def seq(*c):
    return N("Sequence", None, c)


def fb(*c):
    return N("Fallback", None, c)


def retry(n, c):
    return N("RetryUntilSuccessful", {"num_attempts": n}, [c])


def repeat(n, c):
    return N("Repeat", {"num_cycles": n}, [c])


def leaf(pid, **ports):
    return N(pid, ports)


def doc(node):
    body = ["<root BTCPP_format=\"4\" main_tree_to_execute=\"MainTree\">",
            "  <BehaviorTree ID=\"MainTree\">"]
    body.extend(node.lines(2))
    body += ["  </BehaviorTree>", "</root>"]
    return "\n".join(body) + "\n"


def move(w):
    return leaf("MoveTo", goal=w)


def pick(o):
    return leaf("Pick", object=o)


def place(z):
    return leaf("Place", zone=z)


# --- worlds ----------------------------------------------------------------

WAYPOINTS = {
    "dock": [0, 0], "hall": [2, 0], "corridor": [4, 0], "kitchen": [6, 0],
    "lobby": [0, 3], "living_room": [2, 3], "office": [4, 3], "bedroom": [6, 3],
    "garage": [0, 5], "bathroom": [6, 5], "storage": [2, 6], "lab": [4, 6],
}


def nav(robot_at="hall", **extra):
    w = {"waypoints": WAYPOINTS, "robot_at": robot_at, "dock_at": "dock"}
    w.update(extra)
    return {"nav": w}


ZONES = ["table", "shelf", "tray", "bin_red", "bin_blue"]


def manip(objects, **extra):
    w = {"zones": ZONES, "objects": objects}
    w.update(extra)
    return {"manip": w}


def blocked(a, b, fails=None):
    e = {"from": a, "to": b}
    if fails is not None:
        e["fail_count"] = fails
    return e


def door(a, b):
    return {"between": [a, b], "open": False}


# --- tasks -----------------------------------------------------------------
# Each entry: (id, description, manifest, world, goal, reference tree, fault)
# where fault is None or (naive tree, escalation index or None for root,
# replacement subtree) for tasks that double as recovery fixtures.

TASKS = []


def task(tid, desc, manifest, world, goal, ref, fault=None):
    TASKS.append((tid, desc, manifest, world, goal, ref, fault))


# navigation / easy
task("nav-e-01", "Go to the kitchen.", "nav_basic", nav(), [{"robot_at": "kitchen"}], move("kitchen"))
task("nav-e-02", "Drive to the office.", "nav_basic", nav(), [{"robot_at": "office"}], move("office"))
task("nav-e-03", "Visit the kitchen and then the bedroom.", "nav_basic", nav(),
     [{"visited_in_order": ["kitchen", "bedroom"]}, {"robot_at": "bedroom"}],
     seq(move("kitchen"), move("bedroom")))
task("nav-e-04", "Patrol the living room, the office and the kitchen in that order, then return to the hall.",
     "nav_basic", nav(), [{"visited_in_order": ["living_room", "office", "kitchen", "hall"]}, {"robot_at": "hall"}],
     seq(move("living_room"), move("office"), move("kitchen"), move("hall")))
task("nav-e-05", "Go to the lab and spin around once there.", "nav_basic", nav(), [{"robot_at": "lab"}],
     seq(move("lab"), leaf("Spin")))
task("nav-e-06", "Go to the garage, wait there for 3 ticks, then come back to the hall.", "nav_basic", nav(),
     [{"visited_in_order": ["garage", "hall"]}, {"robot_at": "hall"}],
     seq(move("garage"), leaf("Wait", ticks=3), move("hall")))
task("nav-e-07", "Return to the docking station and dock.", "nav_basic", nav("office"),
     [{"robot_at": "dock"}, {"docked": True}], seq(move("dock"), leaf("Dock")))
task("nav-e-08", "The robot is on its dock. Undock and go to the lobby.", "nav_basic",
     nav("dock", docked=True), [{"robot_at": "lobby"}, {"docked": False}],
     seq(leaf("Undock"), move("lobby")),
     (seq(move("lobby"), leaf("Spin")), 0, seq(leaf("Undock"), move("lobby"))))
task("nav-e-09", "Visit the bathroom, the bedroom and the kitchen, in that order.", "nav_basic", nav(),
     [{"visited_in_order": ["bathroom", "bedroom", "kitchen"]}],
     seq(move("bathroom"), move("bedroom"), move("kitchen")))
task("nav-e-10", "Go to the storage room and then to the lab.", "nav_basic", nav(),
     [{"visited_in_order": ["storage", "lab"]}, {"robot_at": "lab"}], seq(move("storage"), move("lab")))
task("nav-e-11", "Go to the living room, then go back to the dock and dock.", "nav_basic", nav(),
     [{"visited_in_order": ["living_room", "dock"]}, {"docked": True}],
     seq(move("living_room"), move("dock"), leaf("Dock")))
task("nav-e-12", "Drive to the corridor and spin in place.", "nav_basic", nav(), [{"robot_at": "corridor"}],
     seq(move("corridor"), leaf("Spin")))

# navigation / medium
LOW_BATTERY_BRANCH = fb(seq(leaf("BatteryCheck", threshold=30), move("garage")), seq(move("dock"), leaf("Dock")))
task("nav-m-01", "If the battery is at least 30%, go to the garage; otherwise go back to the dock and dock.",
     "nav_basic", nav(battery=80), [{"robot_at": "garage"}], LOW_BATTERY_BRANCH)
task("nav-m-02", "If the battery is at least 30%, go to the garage; otherwise go back to the dock and dock.",
     "nav_basic", nav(battery=20), [{"robot_at": "dock"}, {"docked": True}], LOW_BATTERY_BRANCH)
task("nav-m-03", "Go to the kitchen. The route from the hall may fail a couple of times, so try up to 3 times.",
     "nav_basic", nav(blocked=[blocked("hall", "kitchen", 2)]), [{"robot_at": "kitchen"}],
     retry(3, move("kitchen")),
     (move("kitchen"), None, retry(3, move("kitchen"))))
task("nav-m-04", "Go to the office. If the direct route fails, go through the corridor instead.",
     "nav_basic", nav(blocked=[blocked("hall", "office")]), [{"robot_at": "office"}],
     fb(move("office"), seq(move("corridor"), move("office"))),
     (seq(move("office"), leaf("Spin")), 0, seq(move("corridor"), move("office"))))
task("nav-m-05", "Patrol between the kitchen and the living room twice.", "nav_basic", nav(),
     [{"visited_in_order": ["kitchen", "living_room", "kitchen", "living_room"]}],
     repeat(2, seq(move("kitchen"), move("living_room"))))
task("nav-m-06", "Make sure the robot is at the lab, moving there only if needed, then go to the storage room.",
     "nav_basic", nav("lab"), [{"visited_in_order": ["lab", "storage"]}, {"robot_at": "storage"}],
     seq(fb(leaf("AtWaypoint", goal="lab"), move("lab")), move("storage")))
task("nav-m-07", "Check that the battery is at least 50% before the trip to the bathroom; "
     "if it is not, go back to the dock and dock instead.", "nav_basic", nav(battery=40),
     [{"robot_at": "dock"}, {"docked": True}],
     fb(seq(leaf("BatteryCheck", threshold=50), move("bathroom")), seq(move("dock"), leaf("Dock"))))
task("nav-m-08", "Go to the bedroom. If the move fails, wait 2 ticks and try once more.", "nav_basic",
     nav(blocked=[blocked("hall", "bedroom", 1)]), [{"robot_at": "bedroom"}],
     fb(move("bedroom"), seq(leaf("Wait", ticks=2), move("bedroom"))),
     (seq(move("bedroom"), leaf("Spin")), 0, fb(move("bedroom"), seq(leaf("Wait", ticks=2), move("bedroom")))))
task("nav-m-09", "The robot starts on its dock. Undock, then visit the garage and the lobby.", "nav_basic",
     nav("dock", docked=True), [{"visited_in_order": ["garage", "lobby"]}],
     seq(leaf("Undock"), move("garage"), move("lobby")))
task("nav-m-10", "If the battery is at least 50%, go to the office; otherwise dock at the charging station.",
     "nav_basic", nav(battery=30), [{"docked": True}],
     fb(seq(leaf("BatteryCheck", threshold=50), move("office")), seq(move("dock"), leaf("Dock"))))

# navigation / hard
task("nav-h-01", "Go to the lab. The lab door is closed.", "nav_extended",
     nav(doors={"lab_door": door("hall", "lab")}), [{"robot_at": "lab"}],
     seq(leaf("OpenDoor", door="lab_door"), move("lab")),
     (seq(move("lab")), 0, seq(leaf("OpenDoor", door="lab_door"), move("lab"))))
task("nav-h-02", "The battery is almost empty. Recharge at the dock, then visit the kitchen, the bedroom "
     "and the bathroom.", "nav_extended", nav(battery=1),
     [{"visited_in_order": ["kitchen", "bedroom", "bathroom"]}, {"robot_at": "bathroom"}],
     seq(move("dock"), leaf("Dock"), leaf("Recharge"), leaf("Undock"),
         move("kitchen"), move("bedroom"), move("bathroom")))
task("nav-h-03", "Go to the office only if the direct path is clear; otherwise go to the corridor first and "
     "then to the office.", "nav_extended", nav(blocked=[blocked("hall", "office")]), [{"robot_at": "office"}],
     fb(seq(leaf("IsPathClear", goal="office"), move("office")), seq(move("corridor"), move("office"))))
task("nav-h-04", "Record the battery level on the blackboard, go to the storage room, then return to the dock "
     "and dock.", "nav_extended", nav(),
     [{"visited_in_order": ["storage", "dock"]}, {"docked": True}],
     seq(leaf("ReadBattery", level="{battery_level}"), move("storage"), move("dock"), leaf("Dock")))
task("nav-h-05", "Open the garage door, go to the garage, then open the storage door and go to the storage room.",
     "nav_extended",
     nav(doors={"garage_door": door("hall", "garage"), "storage_door": door("garage", "storage")}),
     [{"visited_in_order": ["garage", "storage"]}, {"robot_at": "storage"}],
     seq(leaf("OpenDoor", door="garage_door"), move("garage"), leaf("OpenDoor", door="storage_door"), move("storage")),
     (seq(leaf("OpenDoor", door="garage_door"), move("garage"), move("storage")), 2,
      seq(leaf("OpenDoor", door="storage_door"), move("storage"))))
task("nav-h-06", "Patrol the kitchen, the office and the bedroom three times. Before each round, if the battery "
     "is below 20%, recharge at the dock.", "nav_extended", nav(battery=30, drain_per_move=5),
     [{"visited_in_order": ["kitchen", "office", "bedroom"] * 3}, {"robot_at": "bedroom"}],
     repeat(3, seq(fb(leaf("BatteryCheck", threshold=20),
                      seq(move("dock"), leaf("Dock"), leaf("Recharge"), leaf("Undock"))),
                   move("kitchen"), move("office"), move("bedroom"))))
task("nav-h-07", "The robot starts on its dock. Undock and go through the corridor to the lab. The corridor "
     "entrance is blocked for the first few attempts, so retry it up to 4 times.", "nav_extended",
     nav("dock", docked=True, blocked=[blocked("dock", "corridor", 3)]),
     [{"visited_in_order": ["corridor", "lab"]}, {"robot_at": "lab"}],
     seq(leaf("Undock"), retry(4, move("corridor")), move("lab")),
     (seq(leaf("Undock"), move("corridor"), move("lab")), 1, retry(4, move("corridor"))))
task("nav-h-08", "Make sure the robot is docked, driving to the dock and docking if it is not, then recharge.",
     "nav_extended", nav("office", battery=40), [{"docked": True}, {"battery_at_least": 100}],
     seq(fb(leaf("IsDocked"), seq(move("dock"), leaf("Dock"))), leaf("Recharge")),
     (seq(leaf("Recharge")), 0, seq(move("dock"), leaf("Dock"), leaf("Recharge"))))
task("nav-h-09", "Reach the bathroom. The route from the hall is blocked, and the door between the bedroom and "
     "the bathroom is closed.", "nav_extended",
     nav(blocked=[blocked("hall", "bathroom")], doors={"bath_door": door("bedroom", "bathroom")}),
     [{"robot_at": "bathroom"}],
     seq(move("bedroom"), leaf("OpenDoor", door="bath_door"), move("bathroom")),
     (seq(move("bathroom")), 0, seq(move("bedroom"), leaf("OpenDoor", door="bath_door"), move("bathroom"))))
task("nav-h-10", "From the lobby, go to the garage. If the path is not clear, open the garage door first.",
     "nav_extended", nav("lobby", doors={"garage_door": door("lobby", "garage")}), [{"robot_at": "garage"}],
     seq(fb(leaf("IsPathClear", goal="garage"), leaf("OpenDoor", door="garage_door")), move("garage")),
     (move("garage"), None, seq(leaf("OpenDoor", door="garage_door"), move("garage"))))

# manipulation / easy
task("man-e-01", "Put the cube in the red bin.", "manip_basic", manip({"cube": "table"}),
     [{"object_at": {"object": "cube", "zone": "bin_red"}}], seq(pick("cube"), place("bin_red")))
task("man-e-02", "Move the ball from the table to the shelf.", "manip_basic", manip({"ball": "table"}),
     [{"object_at": {"object": "ball", "zone": "shelf"}}], seq(pick("ball"), place("shelf")))
task("man-e-03", "Place the cup on the tray.", "manip_basic", manip({"cup": "shelf"}),
     [{"object_at": {"object": "cup", "zone": "tray"}}], seq(pick("cup"), place("tray")))
task("man-e-04", "Put the bottle into the blue bin.", "manip_basic", manip({"bottle": "table", "cup": "table"}),
     [{"object_at": {"object": "bottle", "zone": "bin_blue"}}], seq(pick("bottle"), place("bin_blue")))
task("man-e-05", "Move the box from the shelf to the table.", "manip_basic", manip({"box": "shelf"}),
     [{"object_at": {"object": "box", "zone": "table"}}], seq(pick("box"), place("table")))
task("man-e-06", "Put the can on the tray and leave the gripper empty.", "manip_basic", manip({"can": "table"}),
     [{"object_at": {"object": "can", "zone": "tray"}}, {"holding": None}], seq(pick("can"), place("tray")))

# manipulation / medium
task("man-m-01", "Sort the blocks: the red block goes in the red bin and the blue block in the blue bin.",
     "manip_basic", manip({"red_block": "table", "blue_block": "table"}),
     [{"object_at": {"object": "red_block", "zone": "bin_red"}},
      {"object_at": {"object": "blue_block", "zone": "bin_blue"}}],
     seq(pick("red_block"), place("bin_red"), pick("blue_block"), place("bin_blue")))
task("man-m-02", "Put the cube in the red bin unless it is already there, then put the ball in the red bin too.",
     "manip_basic", manip({"cube": "bin_red", "ball": "table"}),
     [{"object_at": {"object": "cube", "zone": "bin_red"}}, {"object_at": {"object": "ball", "zone": "bin_red"}}],
     seq(fb(leaf("IsAt", object="cube", zone="bin_red"), seq(pick("cube"), place("bin_red"))),
         pick("ball"), place("bin_red")))
task("man-m-03", "Move the cup to the tray. The grasp may slip, so retry the pick up to 3 times.", "manip_basic",
     manip({"cup": "table"}, pick_faults={"cup": 2}), [{"object_at": {"object": "cup", "zone": "tray"}}],
     seq(retry(3, pick("cup")), place("tray")),
     (seq(pick("cup"), place("tray")), 0, retry(3, pick("cup"))))
task("man-m-04", "Swap the cube and the ball: the cube is on the table and the ball on the shelf.",
     "manip_basic", manip({"cube": "table", "ball": "shelf"}),
     [{"object_at": {"object": "cube", "zone": "shelf"}}, {"object_at": {"object": "ball", "zone": "table"}}],
     seq(pick("cube"), place("tray"), pick("ball"), place("table"), pick("cube"), place("shelf")))
task("man-m-05", "The gripper is holding the ball. Put the ball on the shelf, then move the cube to the tray.",
     "manip_basic", manip({"ball": "gripper", "cube": "table"}),
     [{"object_at": {"object": "ball", "zone": "shelf"}}, {"object_at": {"object": "cube", "zone": "tray"}}],
     seq(place("shelf"), pick("cube"), place("tray")),
     (seq(pick("cube"), place("tray")), 0, seq(place("shelf"), pick("cube"))))
task("man-m-06", "Put the red block in the red bin, the blue block in the blue bin and the green block on the tray.",
     "manip_basic", manip({"red_block": "table", "blue_block": "shelf", "green_block": "table"}),
     [{"object_at": {"object": "red_block", "zone": "bin_red"}},
      {"object_at": {"object": "blue_block", "zone": "bin_blue"}},
      {"object_at": {"object": "green_block", "zone": "tray"}}],
     seq(pick("red_block"), place("bin_red"), pick("blue_block"), place("bin_blue"),
         pick("green_block"), place("tray")))
task("man-m-07", "Pick up the box unless the gripper already holds it, then place it on the shelf.",
     "manip_basic", manip({"box": "table"}), [{"object_at": {"object": "box", "zone": "shelf"}}],
     seq(fb(leaf("IsHolding", object="box"), pick("box")), place("shelf")))
task("man-m-08", "Collect the cup, the can and the bottle onto the tray, allowing up to 2 pick attempts each.",
     "manip_basic", manip({"cup": "table", "can": "table", "bottle": "shelf"}, pick_faults={"can": 1}),
     [{"object_at": {"object": o, "zone": "tray"}} for o in ["cup", "can", "bottle"]],
     seq(retry(2, pick("cup")), place("tray"), retry(2, pick("can")), place("tray"),
         retry(2, pick("bottle")), place("tray")),
     (seq(pick("cup"), place("tray"), pick("can"), place("tray"), pick("bottle"), place("tray")), 2,
      retry(2, pick("can"))))

# manipulation / hard
task("man-h-01", "Stack the red block on the blue block.", "manip_extended",
     manip({"red_block": "table", "blue_block": "table"}), [{"object_on": {"object": "red_block", "on": "blue_block"}}],
     seq(pick("red_block"), leaf("Stack", object="red_block", on="blue_block")))
task("man-h-02", "Build a tower on the blue block: the green block on the blue block and the red block on top.",
     "manip_extended", manip({"red_block": "table", "green_block": "table", "blue_block": "table"}),
     [{"object_on": {"object": "green_block", "on": "blue_block"}},
      {"object_on": {"object": "red_block", "on": "green_block"}}],
     seq(pick("green_block"), leaf("Stack", object="green_block", on="blue_block"),
         pick("red_block"), leaf("Stack", object="red_block", on="green_block")))
task("man-h-03", "The cube is buried under the ball. Move the cube to the red bin.", "manip_extended",
     manip({"cube": "table", "ball": "on:cube"}), [{"object_at": {"object": "cube", "zone": "bin_red"}}],
     seq(pick("ball"), place("shelf"), pick("cube"), place("bin_red")),
     (seq(pick("cube"), place("bin_red")), 0, seq(pick("ball"), place("shelf"), pick("cube"))))
task("man-h-04", "Block A sits on block B, which sits on block C. Reverse the stack so that C is on B and B is on A.",
     "manip_extended", manip({"block_a": "on:block_b", "block_b": "on:block_c", "block_c": "table"}),
     [{"object_on": {"object": "block_b", "on": "block_a"}}, {"object_on": {"object": "block_c", "on": "block_b"}}],
     seq(pick("block_a"), place("table"), pick("block_b"), leaf("Stack", object="block_b", on="block_a"),
         pick("block_c"), leaf("Stack", object="block_c", on="block_b")))
task("man-h-05", "Stack the cup on the box. If the box is not clear, first move whatever is on it to the tray.",
     "manip_extended", manip({"box": "table", "can": "on:box", "cup": "table"}),
     [{"object_on": {"object": "cup", "on": "box"}}],
     seq(fb(leaf("IsClear", object="box"), seq(pick("can"), place("tray"))),
         pick("cup"), leaf("Stack", object="cup", on="box")))
task("man-h-06", "The red block is stacked on the blue block. Put the red block in the red bin and the blue "
     "block in the blue bin. The blue block is slippery; retry its pick up to 3 times.", "manip_extended",
     manip({"red_block": "on:blue_block", "blue_block": "table"}, pick_faults={"blue_block": 2}),
     [{"object_at": {"object": "red_block", "zone": "bin_red"}},
      {"object_at": {"object": "blue_block", "zone": "bin_blue"}}],
     seq(pick("red_block"), place("bin_red"), retry(3, pick("blue_block")), place("bin_blue")),
     (seq(pick("red_block"), place("bin_red"), pick("blue_block"), place("bin_blue")), 2,
      retry(3, pick("blue_block"))))

# Fixtures whose first candidate is rejected by the validator; the second is
# the reference. These exercise inference retries rather than regeneration.
INVALID_FIRST = {
    "nav-e-01": doc(seq(leaf("FlyTo", goal="kitchen"))),
    "man-e-01": doc(seq(leaf("Grab", object="cube"), place("bin_red"))),
    "man-h-01": doc(seq(pick("red_block"))).rsplit("</root>", 1)[0].rsplit("</Sequence>", 1)[0],
}

EXEMPLAR_TASK = {"navigation": "nav-e-03", "manipulation": "man-e-01"}


def _str(dumper, s):
    style = "|" if "\n" in s else None
    return dumper.represent_scalar("tag:yaml.org,2002:str", s, style=style)


yaml.SafeDumper.add_representer(str, _str)


def dump(obj, f):
    yaml.safe_dump(obj, f, sort_keys=False, width=120, allow_unicode=True, default_flow_style=None)


def category(tid):
    return "navigation" if tid.startswith("nav") else "manipulation"


def difficulty(tid):
    return {"e": "easy", "m": "medium", "h": "hard"}[tid.split("-")[1]]


def wrap_reply(i, xml):
    """Vary the reply framing so extraction gets exercised."""
    if i % 4 == 1:
        return "Here is the behavior tree:\n\n```xml\n" + xml + "```\n"
    if i % 4 == 3:
        return "Plan:\n" + xml + "\nThis tree completes the task."
    return xml


def main():
    if os.path.isdir(ROOT):
        shutil.rmtree(ROOT)
    for sub in ["manifests", "tasks", "solutions", "fixtures"]:
        os.makedirs(os.path.join(ROOT, sub))

    for name, prims in MANIFESTS.items():
        with open(os.path.join(ROOT, "manifests", name + ".yaml"), "w") as f:
            dump({"primitives": prims}, f)

    by_id = {t[0]: t for t in TASKS}
    perfect, er = [], []
    for i, (tid, desc, man, world, goal, ref, fault) in enumerate(TASKS):
        xml = doc(ref)
        with open(os.path.join(ROOT, "solutions", tid + ".xml"), "w") as f:
            f.write(xml)
        spec = {
            "id": tid,
            "category": category(tid),
            "difficulty": difficulty(tid),
            "description": desc,
            "manifest": f"../manifests/{man}.yaml",
            "world": world,
            "goal": goal,
            "reference": f"../solutions/{tid}.xml",
        }
        ex = EXEMPLAR_TASK[category(tid)]
        if ex != tid:
            _, edesc, eman, _, _, eref, _ = by_id[ex]
            spec["exemplar"] = {
                "input": f"Task: {edesc}\n\nAvailable actions:\n{action_list(MANIFESTS[eman])}",
                "output": doc(eref),
            }
        with open(os.path.join(ROOT, "tasks", tid + ".yaml"), "w") as f:
            dump(spec, f)
        perfect.append({"task_id": tid, "outputs": [wrap_reply(i, xml)]})
        if fault is not None:
            naive, index, replacement = fault
            subtree = [] if index is None else [index]
            er.append({"task_id": tid, "outputs": [doc(naive), doc(replacement)], "subtree": subtree})
        elif tid in INVALID_FIRST:
            er.append({"task_id": tid, "outputs": [INVALID_FIRST[tid], xml]})

    for name, rows in [("perfect.jsonl", perfect), ("er_faults.jsonl", er)]:
        with open(os.path.join(ROOT, "fixtures", name), "w") as f:
            for r in rows:
                f.write(json.dumps(r) + "\n")

    faults = sum(1 for t in TASKS if t[6] is not None)
    print(f"{len(TASKS)} tasks, {faults} runtime-fault fixtures, {len(INVALID_FIRST)} invalid-first fixtures")


if __name__ == "__main__":
    main()
