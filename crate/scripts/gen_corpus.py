#!/usr/bin/env python3
"""Writes corpus/: a seeded set of behavior trees used by the round-trip and
validator mutation tests, the manifest they are valid against, and an
element count per file computed here with the stdlib XML parser.

Run from the repository root:  python3 scripts/gen_corpus.py
"""

import json
import os
import random
import shutil
import xml.etree.ElementTree as ET

import yaml

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "corpus")
COUNT = 200
STRESS_NODES = 157

# (id, kind, [(param, type, required, values)])
PRIMITIVES = [
    ("MoveTo", "action", [("goal", "text", True, None), ("speed", "enum", False, ["slow", "fast"])]),
    ("Pick", "action", [("object", "text", True, None)]),
    ("Place", "action", [("zone", "text", True, None)]),
    ("Say", "action", [("message", "text", True, None)]),
    ("ComputePath", "action", [("goal", "text", True, None), ("path", "blackboard", True, None)]),
    ("FollowPath", "action", [("path", "blackboard", True, None)]),
    ("Wait", "action", [("ticks", "number", False, None)]),
    ("SetSpeed", "action", [("value", "number", True, None)]),
    ("IsBatteryOk", "condition", [("threshold", "number", False, None)]),
    ("ObjectVisible", "condition", [("object", "text", True, None)]),
    ("IsHolding", "condition", [("object", "text", True, None)]),
]

# ReactiveSequence is deliberately absent so the mutation tests have a
# control tag the manifest forbids.
CONTROL = ["Sequence", "Fallback", "ReactiveFallback", "Parallel", "Inverter",
           "RetryUntilSuccessful", "Repeat", "Timeout", "ForceSuccess", "ForceFailure"]
COMPOSITES = ["Sequence", "Fallback", "ReactiveFallback", "Parallel"]
DECORATORS = ["Inverter", "RetryUntilSuccessful", "Repeat", "Timeout", "ForceSuccess", "ForceFailure"]

WORDS = ["kitchen", "dock", "shelf", "red cube", "bin_2", "hall & lobby", 'say "hi"', "a<b", "tab\there",
         "line\nbreak", "café", "x"]
KEYS = ["path", "plan_1", "target.pose", "p"]


def esc(s):
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;").replace("\n", "&#10;").replace("\t", "&#9;"))


class Node:
    def __init__(self, tag, attrs, children=()):
        self.tag, self.attrs, self.children = tag, attrs, list(children)

    def size(self):
        return 1 + sum(c.size() for c in self.children)

    def lines(self, depth):
        pad = "  " * depth
        attrs = "".join(f' {k}="{esc(str(v))}"' for k, v in self.attrs)
        if not self.children:
            return [f"{pad}<{self.tag}{attrs}/>"]
        out = [f"{pad}<{self.tag}{attrs}>"]
        for c in self.children:
            out += c.lines(depth + 1)
        return out + [f"{pad}</{self.tag}>"]


def leaf(rng, require_port=False):
    while True:
        pid, kind, params = rng.choice(PRIMITIVES)
        if not require_port or any(p[2] for p in params):
            break
    attrs = []
    if rng.random() < 0.2:
        attrs.append(("name", f"{pid.lower()}_{rng.randrange(100)}"))
    for name, typ, required, values in params:
        if not required and rng.random() < 0.5:
            continue
        if typ == "blackboard":
            v = "{" + rng.choice(KEYS) + "}"
        elif typ == "number":
            v = str(rng.choice([1, 2, 3, 10, 0.5, 42]))
        elif typ == "enum":
            v = rng.choice(values)
        elif rng.random() < 0.15:
            v = "{" + rng.choice(KEYS) + "}"
        else:
            v = rng.choice(WORDS)
        attrs.append((name, v))
    # Conditions and a few actions use the explicit ID form.
    if kind == "condition" and rng.random() < 0.5:
        return Node("Condition", [("ID", pid)] + attrs)
    if kind == "action" and rng.random() < 0.1:
        return Node("Action", [("ID", pid)] + attrs)
    return Node(pid, attrs)


def control_attrs(rng, tag, n_children):
    attrs = []
    if rng.random() < 0.15:
        attrs.append(("name", f"{tag.lower()}_{rng.randrange(100)}"))
    if tag == "Parallel":
        attrs += [("success_count", rng.randint(1, n_children)), ("failure_count", rng.randint(1, n_children))]
    elif tag == "RetryUntilSuccessful":
        attrs.append(("num_attempts", rng.randint(1, 5)))
    elif tag == "Repeat":
        attrs.append(("num_cycles", rng.randint(1, 4)))
    elif tag == "Timeout":
        attrs.append(("max_ticks", rng.randint(1, 20)))
    return attrs


def sized(rng, n):
    """A random tree with exactly n nodes."""
    if n == 1:
        return leaf(rng)
    if n == 2 or (n < 6 and rng.random() < 0.3):
        tag = rng.choice(DECORATORS)
        return Node(tag, control_attrs(rng, tag, 1), [sized(rng, n - 1)])
    k = min(rng.randint(2, 5), n - 1)
    cuts = sorted(rng.sample(range(1, n - 1), k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [n - 1])]
    tag = rng.choice(COMPOSITES)
    return Node(tag, control_attrs(rng, tag, k), [sized(rng, p) for p in parts])


def with_required_port(rng, root):
    """Guarantee at least one leaf with a required port (for the
    delete-a-required-port mutation)."""
    def leaves(n):
        return [n] if not n.children else [x for c in n.children for x in leaves(c)]

    def has_required(n):
        pid = dict(n.attrs).get("ID", n.tag)
        prim = next(p for p in PRIMITIVES if p[0] == pid)
        return any(p[2] for p in prim[2])

    ls = leaves(root)
    if not any(has_required(l) for l in ls):
        target = ls[0]
        replacement = leaf(rng, require_port=True)
        target.tag, target.attrs = replacement.tag, replacement.attrs
    return root


def document(root, tree_id="MainTree"):
    body = [f'<root BTCPP_format="4" main_tree_to_execute="{tree_id}">', f'  <BehaviorTree ID="{tree_id}">']
    return "\n".join(body + root.lines(2) + ["  </BehaviorTree>", "</root>"]) + "\n"


def element_count(path):
    bt = ET.parse(path).getroot().find("BehaviorTree")
    return sum(1 for _ in bt.iter()) - 1


# A tree in the style of a curated dataset record: named nodes, a short
# mission with a recovery branch.
DATASET_SAMPLE = """<root BTCPP_format="4" main_tree_to_execute="FetchCup">
  <BehaviorTree ID="FetchCup">
    <Sequence name="fetch_cup">
      <Fallback name="find_cup">
        <Condition ID="ObjectVisible" object="cup"/>
        <Sequence name="search">
          <MoveTo goal="kitchen" speed="slow"/>
          <RetryUntilSuccessful num_attempts="3">
            <ObjectVisible object="cup"/>
          </RetryUntilSuccessful>
        </Sequence>
      </Fallback>
      <Pick name="grab" object="cup"/>
      <ComputePath goal="table" path="{plan}"/>
      <FollowPath path="{plan}"/>
      <Place zone="table"/>
      <Say message="Your cup is on the table."/>
    </Sequence>
  </BehaviorTree>
</root>
"""


def main():
    if os.path.isdir(ROOT):
        shutil.rmtree(ROOT)
    os.makedirs(ROOT)
    rng = random.Random(20240611)

    manifest = {"primitives": [], "control_nodes": CONTROL}
    for pid, kind, params in PRIMITIVES:
        entry = {"id": pid, "kind": kind}
        ps = []
        for name, typ, required, values in params:
            p = {"name": name, "type": typ}
            if values:
                p["values"] = values
            if not required:
                p["required"] = False
            ps.append(p)
        if ps:
            entry["params"] = ps
        manifest["primitives"].append(entry)
    with open(os.path.join(ROOT, "manifest.yaml"), "w") as f:
        yaml.safe_dump(manifest, f, sort_keys=False, default_flow_style=None, width=120)

    files = {}
    for i in range(COUNT):
        # Mostly small trees, a tail of large ones.
        n = min(int(rng.paretovariate(1.2) * 4), 120)
        files[f"tree_{i:03}.xml"] = document(with_required_port(rng, sized(rng, max(n, 1))))
    stress = with_required_port(rng, sized(rng, STRESS_NODES))
    assert stress.size() == STRESS_NODES
    files["stress_157.xml"] = document(stress, "Stress")
    files["dataset_sample.xml"] = DATASET_SAMPLE

    for name, text in files.items():
        with open(os.path.join(ROOT, name), "w") as f:
            f.write(text)
    counts = {name: element_count(os.path.join(ROOT, name)) for name in sorted(files)}
    assert counts["stress_157.xml"] == STRESS_NODES
    with open(os.path.join(ROOT, "element_counts.json"), "w") as f:
        json.dump(counts, f, indent=1, sort_keys=True)
        f.write("\n")
    mean = sum(counts.values()) / len(counts)
    print(f"{len(files)} trees, mean {mean:.2f} nodes, max {max(counts.values())}")


if __name__ == "__main__":
    main()
