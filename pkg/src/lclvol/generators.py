"""Instance families: exact constructions plus seeded random corpora.

All builders assign ports in the canonical slot order parent, left child,
right child, left lateral, right lateral, compacted to 1..deg(v).  Full-degree
interior nodes therefore get the standard layout (parent=1, children=2,3,
laterals=4,5) while boundary nodes keep the same relative order.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from .graph import GraphError, Instance, Labeling, NodeLabel, build_graph

SLOTS = ("parent", "lc", "rc", "ln", "rn")
_OPPOSITE = {"parent": ("lc", "rc"), "lc": ("parent",), "rc": ("parent",),
             "ln": ("rn",), "rn": ("ln",)}
_FIELD = {"parent": "parent", "lc": "left_child", "rc": "right_child",
          "ln": "left_neighbor", "rn": "right_neighbor"}


@dataclass
class _Node:
    color: str | None = None
    level_in: int | None = None
    bit: int | None = None
    links: dict = field(default_factory=dict)    # slot -> peer index
    labeled: dict = field(default_factory=dict)  # slot -> bool


class Builder:
    """Assembles an instance from slot-typed links between abstract nodes."""

    def __init__(self):
        self.nodes: list[_Node] = []

    def add(self, color: str | None = None, level_in: int | None = None,
            bit: int | None = None) -> int:
        self.nodes.append(_Node(color=color, level_in=level_in, bit=bit))
        return len(self.nodes) - 1

    def link(self, u: int, slot_u: str, v: int, slot_v: str,
             label_u: bool = True, label_v: bool = True) -> None:
        if slot_v not in _OPPOSITE[slot_u]:
            raise GraphError(f"slots {slot_u}/{slot_v} cannot share an edge")
        for (w, s) in ((u, slot_u), (v, slot_v)):
            if s in self.nodes[w].links:
                raise GraphError(f"slot {s} of node {w} already linked")
        self.nodes[u].links[slot_u] = v
        self.nodes[v].links[slot_v] = u
        self.nodes[u].labeled[slot_u] = label_u
        self.nodes[v].labeled[slot_v] = label_v

    def build(self, ids: list[int] | None = None, max_degree: int = 5,
              meta: dict | None = None) -> Instance:
        n = len(self.nodes)
        ids = ids if ids is not None else list(range(1, n + 1))
        port_of: list[dict[str, int]] = []
        for nd in self.nodes:
            occupied = [s for s in SLOTS if s in nd.links]
            port_of.append({s: i + 1 for i, s in enumerate(occupied)})
        edges = []
        for u, nd in enumerate(self.nodes):
            for slot, v in nd.links.items():
                if u < v:
                    back = next(s for s, w in self.nodes[v].links.items()
                                if w == u and s in _OPPOSITE[slot])
                    edges.append((u, v, port_of[u][slot], port_of[v][back]))
        g = build_graph(edges, ids, max_degree=max_degree)
        labels: Labeling = []
        for u, nd in enumerate(self.nodes):
            fields = {}
            for slot in SLOTS:
                if slot in nd.links and nd.labeled.get(slot, True):
                    fields[_FIELD[slot]] = port_of[u][slot]
            labels.append(NodeLabel(input_color=nd.color, level_in=nd.level_in,
                                    selector_bit=nd.bit, **fields))
        return Instance(graph=g, labeling=labels, meta=meta)


def ceil_root(n: int, k: int) -> int:
    """Smallest r >= 1 with r**k >= n."""
    if n <= 1:
        return 1
    r = max(1, round(n ** (1.0 / k)))
    while r ** k < n:
        r += 1
    while r > 1 and (r - 1) ** k >= n:
        r -= 1
    return r


def log2_ceil(n: int) -> int:
    return max(1, math.ceil(math.log2(max(2, n))))


# ---------------------------------------------------------------------------
# Complete binary trees (heap ids: root 1, children of i are 2i, 2i+1)
# ---------------------------------------------------------------------------

def gen_complete_binary(depth: int, leaf_color: str = "R") -> Instance:
    if depth < 0:
        raise GraphError("depth must be >= 0")
    b = Builder()
    n = 2 ** (depth + 1) - 1
    first_leaf = 2 ** depth
    for hid in range(1, n + 1):
        b.add(color=(leaf_color if hid >= first_leaf else "R"))
    for hid in range(1, first_leaf):
        b.link(hid - 1, "lc", 2 * hid - 1, "parent")
        b.link(hid - 1, "rc", 2 * hid + 1 - 1, "parent")
    return b.build(meta={"family": "complete-binary", "depth": depth,
                         "leaf_color": leaf_color})


def _complete_lateral_builder(depth: int) -> Builder:
    """Complete tree plus lateral edges between depth-row neighbors."""
    b = Builder()
    n = 2 ** (depth + 1) - 1
    for hid in range(1, n + 1):
        b.add()
    for hid in range(1, 2 ** depth):
        b.link(hid - 1, "lc", 2 * hid - 1, "parent")
        b.link(hid - 1, "rc", 2 * hid + 1 - 1, "parent")
    for d in range(1, depth):  # leaf row handled by callers
        for hid in range(2 ** d, 2 ** (d + 1) - 1):
            b.link(hid - 1, "rn", hid, "ln")
    return b


def gen_disjointness_btl(a: list[int], b_bits: list[int]) -> Instance:
    """Balanced lateral tree whose leaf labels embed two bit vectors.

    The instance is globally compatible iff no coordinate has a 1 in both
    vectors: the sibling links of the i-th leaf pair exist as graph edges
    always, but carry labels only when a_i and b_i are not both 1.
    """
    big_n = len(a)
    if len(b_bits) != big_n:
        raise GraphError("bit vectors must have equal length")
    if big_n < 1 or big_n & (big_n - 1):
        raise GraphError("vector length must be a power of two")
    depth = big_n.bit_length()  # N = 2**(depth-1)
    bld = _complete_lateral_builder(depth)
    first_leaf = 2 ** depth
    for i in range(1, big_n + 1):
        u = first_leaf + 2 * (i - 1) - 1   # left leaf of pair i (0-based index)
        w = u + 1
        both = a[i - 1] == 1 and b_bits[i - 1] == 1
        bld.link(u, "rn", w, "ln", label_u=not both, label_v=not both)
        if i < big_n:
            bld.link(w, "rn", w + 1, "ln")  # cross-pair link, always labeled
    return bld.build(meta={"family": "disjointness-btl", "a": list(a),
                           "b": list(b_bits)})


# ---------------------------------------------------------------------------
# Random full-binary pseudo-forests
# ---------------------------------------------------------------------------

def gen_random_tree_labeling(n: int, p_defect: float, seed: int) -> Instance:
    """Random forest of full binary trees (occasionally closed into a cycle),
    with a per-node chance of an injected parent-pointer inconsistency."""
    if n < 1:
        raise GraphError("n must be >= 1")
    rng = random.Random(seed)
    b = Builder()
    colors = lambda: rng.choice("RB")
    remaining = n
    roots: list[int] = []
    leaves_of: dict[int, list[int]] = {}
    while remaining > 0:
        if remaining < 3:
            if remaining == 2 and leaves_of:
                # expand a leaf of the most recent tree with two children
                tree = next(reversed(leaves_of))
                leaf = rng.choice(leaves_of[tree])
                c1, c2 = b.add(color=colors()), b.add(color=colors())
                b.link(leaf, "lc", c1, "parent")
                b.link(leaf, "rc", c2, "parent")
                leaves_of[tree].remove(leaf)
                leaves_of[tree].extend([c1, c2])
                remaining -= 2
                continue
            # one node left: fold it into a cycle expansion if possible
            folded = False
            for root in reversed(roots):
                if "parent" in b.nodes[root].links:
                    continue
                ok = [x for x in leaves_of[root]
                      if b.nodes[x].links.get("parent") not in (None, root)]
                if not ok:
                    continue
                leaf = rng.choice(ok)
                fresh = b.add(color=colors())
                b.link(leaf, "lc", root, "parent")
                b.link(leaf, "rc", fresh, "parent")
                leaves_of[root].remove(leaf)
                leaves_of[root].append(fresh)
                roots.remove(root)
                remaining -= 1
                folded = True
                break
            if not folded and len(leaves_of) >= 2 and roots:
                # graft one tree under a leaf of another, spending the node
                root = roots[-1]
                host = next(t for t in leaves_of if t != root)
                leaf = rng.choice(leaves_of[host])
                fresh = b.add(color=colors())
                b.link(leaf, "lc", root, "parent")
                b.link(leaf, "rc", fresh, "parent")
                leaves_of[host].remove(leaf)
                leaves_of[host].append(fresh)
                roots.remove(root)
                remaining -= 1
                folded = True
            if not folded:
                b.add(color=colors())  # inconsistent singleton, last resort
                remaining -= 1
            continue
        root = b.add(color=colors())
        roots.append(root)
        leaves_of[root] = [root]
        remaining -= 1
        size_budget = rng.randint(1, max(1, remaining // 2 + 1))
        while remaining >= 2 and size_budget > 0:
            leaf = rng.choice(leaves_of[root])
            c1 = b.add(color=colors())
            c2 = b.add(color=colors())
            b.link(leaf, "lc", c1, "parent")
            b.link(leaf, "rc", c2, "parent")
            leaves_of[root].remove(leaf)
            leaves_of[root].extend([c1, c2])
            remaining -= 2
            size_budget -= 1
        deep_leaves = [x for x in leaves_of[root]
                       if b.nodes[x].links.get("parent") not in (None, root)]
        if remaining >= 1 and deep_leaves and rng.random() < 0.25 \
                and "parent" not in b.nodes[root].links:
            # close one directed cycle through the root
            leaf = rng.choice(deep_leaves)
            fresh = b.add(color=colors())
            b.link(leaf, "lc", root, "parent")
            b.link(leaf, "rc", fresh, "parent")
            leaves_of[root].remove(leaf)
            leaves_of[root].append(fresh)
            roots.pop()
            remaining -= 1
    inst = b.build(meta={"family": "random-tree", "n": n,
                         "p_defect": p_defect, "seed": seed})
    # inject inconsistencies: drop the parent label of unlucky nodes
    lab = list(inst.labeling)
    for v in range(inst.graph.n):
        if lab[v].parent is not None and rng.random() < p_defect:
            from dataclasses import replace
            lab[v] = replace(lab[v], parent=None)
    inst.labeling = lab
    return inst


# ---------------------------------------------------------------------------
# Leveled (hierarchical) instances
# ---------------------------------------------------------------------------

def _backbone_length(nr: int, rng: random.Random) -> int:
    return min(2 * nr, nr + rng.randint(0, max(0, nr // 8)))


def gen_hier_balanced(k: int, n_target: int, seed: int,
                      cycles: bool = False) -> Instance:
    """Leveled forest where every backbone has length in [r, 2r] for
    r = ceil(n_target**(1/k)); sizes land within a factor 2 of n_target."""
    if k < 1:
        raise GraphError("k must be >= 1")
    if n_target < 2 ** k:
        raise GraphError(f"n_target {n_target} too small for k={k}")
    nr = ceil_root(n_target, k)
    rng = random.Random(seed)
    b = Builder()

    def build_backbone(level: int, close_cycle: bool) -> int:
        length = _backbone_length(nr, rng)
        members = [b.add(color=rng.choice("RB"), level_in=level)
                   for _ in range(length)]
        for up, down in zip(members, members[1:]):
            b.link(up, "lc", down, "parent")
        if close_cycle and length >= 2:
            b.link(members[-1], "lc", members[0], "parent")
        if level >= 2:
            for m in members:
                sub_root = build_backbone(level - 1, False)
                b.link(m, "rc", sub_root, "parent")
        return members[0]

    build_backbone(k, cycles)
    inst = b.build(meta={"family": "hier-balanced", "k": k,
                         "n_target": n_target, "seed": seed, "cycles": cycles})
    # smallest structure with full backbones at every level
    floor_size = sum(nr ** j for j in range(1, k + 1))
    if inst.graph.n > 2 * max(n_target, floor_size):
        raise GraphError("generated instance exceeded the size budget")
    return inst


def _btl_component(b: Builder, depth: int, rng: random.Random,
                   defective: bool) -> int:
    """Complete binary tree with row laterals at level_in=1; a defective one
    drops the sibling labels of a random leaf pair."""
    base = len(b.nodes)
    n = 2 ** (depth + 1) - 1
    for _ in range(n):
        b.add(color=rng.choice("RB"), level_in=1)
    for hid in range(1, 2 ** depth):
        b.link(base + hid - 1, "lc", base + 2 * hid - 1, "parent")
        b.link(base + hid - 1, "rc", base + 2 * hid + 1 - 1, "parent")
    bad_pair = rng.randrange(2 ** (depth - 1)) if (defective and depth >= 1) else -1
    for d in range(1, depth + 1):
        for j, hid in enumerate(range(2 ** d, 2 ** (d + 1) - 1)):
            keep = not (d == depth and j % 2 == 0 and j // 2 == bad_pair)
            b.link(base + hid - 1, "rn", base + hid, "ln",
                   label_u=keep, label_v=keep)
    return base


def gen_hybrid_instance(k: int, n_target: int, seed: int) -> Instance:
    """Leveled skeleton whose level-1 components are balanced-tree instances
    (a seeded mixture of compatible and defective ones)."""
    if k < 2:
        raise GraphError("k must be >= 2")
    if n_target < 2 ** k:
        raise GraphError(f"n_target {n_target} too small for k={k}")
    nr = ceil_root(n_target, k)
    rng = random.Random(seed)
    b = Builder()
    tree_depth = max(1, (nr + 1).bit_length() - 1)

    def build_backbone(level: int) -> int:
        length = _backbone_length(nr, rng)
        members = [b.add(color=rng.choice("RB"), level_in=level)
                   for _ in range(length)]
        for up, down in zip(members, members[1:]):
            b.link(up, "lc", down, "parent")
        for m in members:
            if level > 2:
                sub_root = build_backbone(level - 1)
            else:
                sub_root = _btl_component(b, tree_depth, rng,
                                          defective=rng.random() < 0.5)
            b.link(m, "rc", sub_root, "parent")
        return members[0]

    build_backbone(k)
    inst = b.build(meta={"family": "hybrid", "k": k, "n_target": n_target,
                         "seed": seed})
    return inst


def disjoint_union(parts: list[Instance],
                   bits: list[int | None] | None = None,
                   meta: dict | None = None) -> Instance:
    """Combine instances side by side, preserving ports and renumbering ids."""
    edges: list[tuple[int, int, int, int]] = []
    labels: Labeling = []
    offset = 0
    for idx, inst in enumerate(parts):
        g = inst.graph
        for (u, v, pu, pv) in g.edges():
            edges.append((u + offset, v + offset, pu, pv))
        bit = bits[idx] if bits is not None else None
        for l in inst.labeling:
            labels.append(l if bit is None else replace(l, selector_bit=bit))
        offset += g.n
    g = build_graph(edges, list(range(1, offset + 1)),
                    max_degree=max(p.graph.max_degree for p in parts))
    return Instance(graph=g, labeling=labels, meta=meta)


def gen_hh_instance(k: int, l: int, n_target: int, seed: int) -> Instance:
    """Disjoint union: a leveled instance (selector bit 0, solved with the
    l-level rules) plus a hybrid instance (bit 1, solved with the k rules)."""
    if not (1 <= k <= l):
        raise GraphError("need 1 <= k <= l")
    part0 = gen_hier_balanced(l, max(2 ** l, n_target // 2), seed * 2 + 1)
    part1 = gen_hybrid_instance(max(2, k), max(2 ** max(2, k), n_target // 2),
                                seed * 2 + 2)
    return disjoint_union([part0, part1], bits=[0, 1],
                          meta={"family": "hh", "k": k, "l": l,
                                "n_target": n_target, "seed": seed})


GENERATORS = {
    "complete-binary": gen_complete_binary,
    "disjointness-btl": gen_disjointness_btl,
    "random-tree": gen_random_tree_labeling,
    "hier-balanced": gen_hier_balanced,
    "hybrid": gen_hybrid_instance,
    "hh": gen_hh_instance,
}
