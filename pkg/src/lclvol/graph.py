"""Port-numbered bounded-degree labeled graphs and derived forest structures.

A PortedGraph stores, for every vertex, a bijection from ports 1..deg(v) to
incident ordered edges.  Labelings attach per-node pointer fields (parent,
children, lateral neighbors) expressed as port numbers, plus optional color,
level, and selector-bit inputs.  All pointer composition helpers here treat a
pointer as usable only if it is in range; mutuality (the target pointing back)
is what the consistency and forest operations check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence


class GraphError(ValueError):
    """Raised when construction or parsing violates a structural invariant."""


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------

COLORS = ("R", "B")


@dataclass(frozen=True)
class NodeLabel:
    """Per-node input record.  Pointer fields hold port numbers or None."""

    parent: int | None = None
    left_child: int | None = None
    right_child: int | None = None
    left_neighbor: int | None = None
    right_neighbor: int | None = None
    input_color: str | None = None
    level_in: int | None = None
    selector_bit: int | None = None

    def tree_ports(self) -> tuple[int | None, int | None, int | None]:
        return (self.parent, self.left_child, self.right_child)


Labeling = list[NodeLabel]


class NodeClass(Enum):
    INTERNAL = "internal"
    LEAF = "leaf"
    INCONSISTENT = "inconsistent"


# ---------------------------------------------------------------------------
# Graph
# ---------------------------------------------------------------------------

@dataclass
class PortedGraph:
    """Bounded-degree undirected graph with per-vertex port bijections.

    ports[v] maps port p (1-based) to (neighbor index, neighbor's reciprocal
    port).  ids[v] is the globally unique identifier exposed to algorithms.
    """

    n: int
    max_degree: int
    ids: list[int]
    ports: list[dict[int, tuple[int, int]]]

    def __post_init__(self):
        self._index_of = {vid: i for i, vid in enumerate(self.ids)}

    def degree(self, v: int) -> int:
        return len(self.ports[v])

    def index_of_id(self, vid: int) -> int:
        return self._index_of[vid]

    def neighbor(self, v: int, port: int) -> tuple[int, int]:
        """Follow port `port` of vertex `v`; returns (neighbor, back_port)."""
        return self.ports[v][port]

    def has_port(self, v: int, port) -> bool:
        return port is not None and port in self.ports[v]

    def edges(self) -> list[tuple[int, int, int, int]]:
        """Canonical (u, v, port_u, port_v) list with u < v."""
        out = []
        for u in range(self.n):
            for pu, (v, pv) in sorted(self.ports[u].items()):
                if u < v:
                    out.append((u, v, pu, pv))
        return out


def build_graph(
    edge_list: Iterable[tuple[int, int, int, int]],
    ids: Sequence[int],
    max_degree: int | None = None,
) -> PortedGraph:
    """Build a PortedGraph from (u, v, port_u, port_v) entries.

    Rejects duplicate ids, duplicate port assignments, self loops, repeated
    vertex pairs, and degrees above the bound.  Port tables must come out as
    bijections onto 1..deg(v).
    """
    ids = list(ids)
    n = len(ids)
    if len(set(ids)) != n:
        dup = sorted(vid for vid in set(ids) if ids.count(vid) > 1)
        raise GraphError(f"duplicate id: {dup[0]}")
    if any((not isinstance(vid, int)) or vid < 0 for vid in ids):
        raise GraphError("ids must be non-negative integers")

    ports: list[dict[int, tuple[int, int]]] = [dict() for _ in range(n)]
    seen_pairs = set()
    for (u, v, pu, pv) in edge_list:
        for w in (u, v):
            if not (0 <= w < n):
                raise GraphError(f"vertex index {w} out of range")
        if u == v:
            raise GraphError(f"self loop at vertex {u}")
        if (min(u, v), max(u, v)) in seen_pairs:
            raise GraphError(f"repeated vertex pair ({u}, {v})")
        seen_pairs.add((min(u, v), max(u, v)))
        for (w, p) in ((u, pu), (v, pv)):
            if p < 1:
                raise GraphError(f"port {p} of vertex {w} is not positive")
            if p in ports[w]:
                raise GraphError(f"duplicate port {p} at vertex {w}")
        ports[u][pu] = (v, pv)
        ports[v][pv] = (u, pu)

    degs = [len(p) for p in ports]
    bound = max_degree if max_degree is not None else max(5, max(degs, default=0))
    for v, d in enumerate(degs):
        if d > bound:
            raise GraphError(f"degree {d} of vertex {v} exceeds bound {bound}")
        if d and max(ports[v]) != d:
            raise GraphError(f"ports of vertex {v} are not contiguous 1..deg")
    return PortedGraph(n=n, max_degree=bound, ids=ids, ports=ports)


# ---------------------------------------------------------------------------
# Normalization and consistency
# ---------------------------------------------------------------------------

def _in_range(g: PortedGraph, v: int, port: int | None) -> int | None:
    if port is None or not g.has_port(v, port):
        return None
    return port


def is_well_formed(g: PortedGraph, lab: Labeling, v: int) -> bool:
    """Non-None tree ports must be pairwise distinct and within 1..deg(v)."""
    ps = [p for p in lab[v].tree_ports() if p is not None]
    if len(ps) != len(set(ps)):
        return False
    return all(g.has_port(v, p) for p in ps)


def normalize_labeling(g: PortedGraph, lab: Labeling) -> Labeling:
    """Repair a labeling so every node is well-formed.

    A node that is not well-formed loses all three tree pointers; a
    well-formed node drops any tree pointer aimed at a node that was not
    well-formed.  Lateral pointers are only range-checked.  Idempotent.
    """
    wf = [is_well_formed(g, lab, v) for v in range(g.n)]
    out: Labeling = []
    for v in range(g.n):
        l = lab[v]
        ln = _in_range(g, v, l.left_neighbor)
        rn = _in_range(g, v, l.right_neighbor)
        if not wf[v]:
            out.append(replace(l, parent=None, left_child=None, right_child=None,
                               left_neighbor=ln, right_neighbor=rn))
            continue

        def keep(port: int | None) -> int | None:
            if port is None:
                return None
            target, _ = g.neighbor(v, port)
            return port if wf[target] else None

        out.append(replace(l, parent=keep(l.parent), left_child=keep(l.left_child),
                           right_child=keep(l.right_child),
                           left_neighbor=ln, right_neighbor=rn))
    return out


def pointer_target(g: PortedGraph, lab: Labeling, v: int, field: str) -> int | None:
    """Vertex reached by following a pointer field of v, or None."""
    port = getattr(lab[v], field)
    if port is None or not g.has_port(v, port):
        return None
    return g.neighbor(v, port)[0]


def mutual_child(g: PortedGraph, lab: Labeling, v: int, field: str) -> int | None:
    """Child via `field` whose own parent pointer returns to v, else None."""
    c = pointer_target(g, lab, v, field)
    if c is None:
        return None
    if pointer_target(g, lab, c, "parent") != v:
        return None
    return c


def classify_node(g: PortedGraph, lab: Labeling, v: int) -> NodeClass:
    """Internal, leaf, or inconsistent; needs only radius-2 information."""
    if _is_internal(g, lab, v):
        return NodeClass.INTERNAL
    l = lab[v]
    if l.left_child is None and l.right_child is None:
        p = pointer_target(g, lab, v, "parent")
        if p is not None and _is_internal(g, lab, p):
            return NodeClass.LEAF
    return NodeClass.INCONSISTENT


def _is_internal(g: PortedGraph, lab: Labeling, v: int) -> bool:
    return (mutual_child(g, lab, v, "left_child") is not None
            and mutual_child(g, lab, v, "right_child") is not None)


# ---------------------------------------------------------------------------
# Derived forests
# ---------------------------------------------------------------------------

@dataclass
class DerivedForest:
    """Forest structure shared by the consistency forest and the leveled one.

    parent[v] / children[v] are vertex indexes (None / empty when absent).
    level is None for the plain consistency forest.
    """

    in_forest: list[bool]
    parent: list[int | None]
    children: list[list[int]]
    level: list[int] | None = None
    is_root: list[bool] | None = None
    is_leaf: list[bool] | None = None

    def components(self) -> list[list[int]]:
        """Connected components of the forest (undirected closure)."""
        seen = [False] * len(self.in_forest)
        comps = []
        for v in range(len(self.in_forest)):
            if not self.in_forest[v] or seen[v]:
                continue
            stack, comp = [v], []
            seen[v] = True
            while stack:
                x = stack.pop()
                comp.append(x)
                nbrs = list(self.children[x])
                if self.parent[x] is not None:
                    nbrs.append(self.parent[x])
                for y in nbrs:
                    if not seen[y]:
                        seen[y] = True
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def cycle_count(self, comp: list[int]) -> int:
        # every node has <= 1 parent, so extra edges beyond a tree are cycles
        edges = sum(1 for v in comp if self.parent[v] is not None)
        return edges - (len(comp) - 1)


def derive_tree_forest(g: PortedGraph, lab: Labeling) -> DerivedForest:
    """Forest of consistent nodes with edges from internal parents to the
    consistent nodes whose parent pointer selects them."""
    cls = [classify_node(g, lab, v) for v in range(g.n)]
    in_forest = [c is not NodeClass.INCONSISTENT for c in cls]
    parent: list[int | None] = [None] * g.n
    children: list[list[int]] = [[] for _ in range(g.n)]
    for v in range(g.n):
        if not in_forest[v]:
            continue
        p = pointer_target(g, lab, v, "parent")
        if p is not None and cls[p] is NodeClass.INTERNAL:
            parent[v] = p
    for v in range(g.n):
        if not in_forest[v]:
            parent[v] = None
    # children ordered: designated left, designated right, then others by index
    for u in range(g.n):
        if cls[u] is not NodeClass.INTERNAL:
            continue
        lc = mutual_child(g, lab, u, "left_child")
        rc = mutual_child(g, lab, u, "right_child")
        rest = sorted(v for v in range(g.n)
                      if parent[v] == u and v not in (lc, rc))
        children[u] = [c for c in (lc, rc) if c is not None and parent[c] == u] + rest
    return DerivedForest(in_forest=in_forest, parent=parent, children=children)


def node_level(g: PortedGraph, lab: Labeling, v: int, k: int) -> int:
    """Length of the mutual right-child chain below v, capped at k+1.

    A right-child cycle (detected by a bounded walk) also reports k+1, which
    the validity conditions treat the same as any level above k.
    """
    depth = 0
    x = v
    seen = {v}
    while depth <= k:
        c = mutual_child(g, lab, x, "right_child")
        if c is None:
            return depth + 1
        if c in seen:
            return k + 1
        seen.add(c)
        x = c
        depth += 1
    return k + 1


def derive_hier_forest(g: PortedGraph, lab: Labeling, k: int) -> DerivedForest:
    """Leveled forest: level-preserving left-child edges and
    level-decrementing right-child edges, restricted to levels <= k."""
    if k < 1:
        raise GraphError("k must be >= 1")
    levels = [node_level(g, lab, v, k) for v in range(g.n)]
    parent: list[int | None] = [None] * g.n
    children: list[list[int]] = [[] for _ in range(g.n)]
    in_forest = [lv <= k for lv in levels]
    for v in range(g.n):
        if not in_forest[v]:
            continue
        for field in ("left_child", "right_child"):
            c = mutual_child(g, lab, v, field)
            if c is None or not in_forest[c]:
                continue
            want = levels[v] if field == "left_child" else levels[v] - 1
            if levels[c] == want:
                children[v].append(c)
                parent[c] = v
    is_root = [False] * g.n
    is_leaf = [False] * g.n
    for v in range(g.n):
        if not in_forest[v]:
            continue
        p = parent[v]
        is_root[v] = p is None or levels[p] == levels[v] + 1
        lc = [c for c in children[v] if levels[c] == levels[v]]
        is_leaf[v] = not lc
    return DerivedForest(in_forest=in_forest, parent=parent, children=children,
                         level=levels, is_root=is_root, is_leaf=is_leaf)


def classify_hier_node(g: PortedGraph, lab: Labeling, v: int, k: int) -> tuple[bool, bool, int]:
    """(is_root, is_leaf, level) of v in the leveled forest; radius-O(k)."""
    lv = node_level(g, lab, v, k)
    p = pointer_target(g, lab, v, "parent")
    root = True
    if p is not None and mutual_child(g, lab, p, "left_child") == v \
            and node_level(g, lab, p, k) == lv and lv <= k:
        root = False
    lc = mutual_child(g, lab, v, "left_child")
    leaf = lc is None or node_level(g, lab, lc, k) != lv or lv > k
    return root, leaf, lv


# ---------------------------------------------------------------------------
# Instances and the text interchange format
# ---------------------------------------------------------------------------

@dataclass
class Instance:
    graph: PortedGraph
    labeling: Labeling
    meta: dict | None = None


def _fmt(x) -> str:
    return "-" if x is None else str(x)


def _parse_opt_int(tok: str) -> int | None:
    return None if tok == "-" else int(tok)


def serialize_instance(inst: Instance) -> str:
    """Canonical text form: header `n max_degree`, one line per vertex."""
    g, lab = inst.graph, inst.labeling
    lines = [f"{g.n} {g.max_degree}"]
    for v in range(g.n):
        entries = ",".join(f"{p}:{g.ids[w]}" for p, (w, _) in sorted(g.ports[v].items()))
        l = lab[v]
        lines.append(" ".join([
            str(g.ids[v]), str(g.degree(v)), entries or "-",
            _fmt(l.parent), _fmt(l.left_child), _fmt(l.right_child),
            _fmt(l.left_neighbor), _fmt(l.right_neighbor),
            _fmt(l.input_color), _fmt(l.level_in), _fmt(l.selector_bit),
        ]))
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GraphError("empty instance file")
    head = lines[0].split()
    if len(head) != 2:
        raise GraphError("header must be `n max_degree`")
    n, max_degree = int(head[0]), int(head[1])
    if len(lines) != n + 1:
        raise GraphError(f"expected {n} node lines, found {len(lines) - 1}")
    ids: list[int] = []
    labels: Labeling = []
    port_specs: list[dict[int, int]] = []
    for ln in lines[1:]:
        toks = ln.split()
        if len(toks) != 11:
            raise GraphError(f"bad node line: {ln!r}")
        vid, deg = int(toks[0]), int(toks[1])
        spec: dict[int, int] = {}
        if toks[2] != "-":
            for entry in toks[2].split(","):
                p_s, t_s = entry.split(":")
                p = int(p_s)
                if p in spec:
                    raise GraphError(f"duplicate port {p} at id {vid}")
                spec[p] = int(t_s)
        if len(spec) != deg:
            raise GraphError(f"degree mismatch at id {vid}")
        ids.append(vid)
        port_specs.append(spec)
        color = None if toks[8] == "-" else toks[8]
        if color is not None and color not in COLORS:
            raise GraphError(f"bad color {color!r} at id {vid}")
        labels.append(NodeLabel(
            parent=_parse_opt_int(toks[3]), left_child=_parse_opt_int(toks[4]),
            right_child=_parse_opt_int(toks[5]), left_neighbor=_parse_opt_int(toks[6]),
            right_neighbor=_parse_opt_int(toks[7]), input_color=color,
            level_in=_parse_opt_int(toks[9]), selector_bit=_parse_opt_int(toks[10]),
        ))
    index_of = {vid: i for i, vid in enumerate(ids)}
    if len(index_of) != n:
        raise GraphError("duplicate id in instance file")
    edges = []
    for u in range(n):
        for pu, tid in port_specs[u].items():
            if tid not in index_of:
                raise GraphError(f"unknown neighbor id {tid}")
            v = index_of[tid]
            if u < v:
                back = [p for p, t in port_specs[v].items() if t == ids[u]]
                if len(back) != 1:
                    raise GraphError(f"no reciprocal port for edge {ids[u]}-{tid}")
                edges.append((u, v, pu, back[0]))
    g = build_graph(edges, ids, max_degree=max_degree)
    return Instance(graph=g, labeling=labels)


def bfs_distances(g: PortedGraph, start: int, targets: set[int] | None = None) -> dict[int, int]:
    """BFS distances from start; stops early once all targets are reached."""
    dist = {start: 0}
    frontier = [start]
    remaining = set(targets) - {start} if targets is not None else None
    while frontier and (remaining is None or remaining):
        nxt = []
        for v in frontier:
            for _, (w, _) in g.ports[v].items():
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
                    if remaining is not None:
                        remaining.discard(w)
        frontier = nxt
    return dist
