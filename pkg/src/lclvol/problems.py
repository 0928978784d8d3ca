"""Validity predicates for the five labeling problems.

Each problem has a global validator returning a Verdict with per-vertex
violation witnesses, and a per-vertex checker whose conjunction over all
vertices equals the global verdict.  Checkers read only a bounded-radius
neighborhood of their vertex (2 for leaf coloring, 3 for the balanced-tree
problem, 2(k+1) for the leveled family).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .graph import (Labeling, NodeClass, PortedGraph, classify_node,
                    mutual_child, node_level, pointer_target)

SYMBOLS = ("R", "B", "D", "X")


@dataclass(frozen=True)
class Verdict:
    valid: bool
    violations: list[tuple[int, str, str]]  # (vertex id, condition id, reason)

    def report(self) -> str:
        return "".join(f"{v} {c} {r}\n" for v, c, r in self.violations)


def _verdict(viols) -> Verdict:
    return Verdict(valid=not viols, violations=viols)


# ---------------------------------------------------------------------------
# Output decoding
# ---------------------------------------------------------------------------

def decode_symbol(out: str) -> str | None:
    return out if out in SYMBOLS else None


def decode_pair(out: str) -> tuple[str, int | None] | None:
    """(beta, port) pairs are encoded `B:3`, `U:-` etc."""
    if ":" not in out:
        return None
    beta, _, port_s = out.partition(":")
    if beta not in ("B", "U"):
        return None
    if port_s == "-":
        return (beta, None)
    try:
        return (beta, int(port_s))
    except ValueError:
        return None


def encode_pair(beta: str, port: int | None) -> str:
    return f"{beta}:{'-' if port is None else port}"


# ---------------------------------------------------------------------------
# Leaf coloring
# ---------------------------------------------------------------------------

def leafcolor_check_vertex(g: PortedGraph, lab: Labeling, out: list[str], v: int):
    viols = []
    o = out[v]
    if o not in ("R", "B"):
        return [(g.ids[v], "decode", f"output {o!r} is not a color")]
    cls = classify_node(g, lab, v)
    if cls is NodeClass.INTERNAL:
        lc = pointer_target(g, lab, v, "left_child")
        rc = pointer_target(g, lab, v, "right_child")
        if o not in (out[lc], out[rc]):
            viols.append((g.ids[v], "2",
                          f"internal output {o} matches neither child"))
    else:
        if o != lab[v].input_color:
            viols.append((g.ids[v], "1",
                          f"{cls.value} output {o} != input {lab[v].input_color}"))
    return viols


def validate_leaf_coloring(g: PortedGraph, lab: Labeling, out: list[str]) -> Verdict:
    viols = []
    for v in range(g.n):
        viols.extend(leafcolor_check_vertex(g, lab, out, v))
    return _verdict(viols)


# ---------------------------------------------------------------------------
# Balanced-tree labeling
# ---------------------------------------------------------------------------

COMPAT_CONDITIONS = ("type-preserving", "agreement", "siblings", "persistence", "leaves")


def check_compatible(g: PortedGraph, lab: Labeling, v: int) -> tuple[bool, list[str]]:
    """Evaluate the five lateral-structure conditions at a consistent node."""
    cls = classify_node(g, lab, v)
    if cls is NodeClass.INCONSISTENT:
        raise ValueError(f"vertex {v} is not consistent")
    failed: list[str] = []
    ln = pointer_target(g, lab, v, "left_neighbor")
    rn = pointer_target(g, lab, v, "right_neighbor")

    want = NodeClass.INTERNAL if cls is NodeClass.INTERNAL else NodeClass.LEAF
    for u in (ln, rn):
        if u is not None and classify_node(g, lab, u) is not want:
            failed.append("type-preserving")
            break

    if (ln is not None and pointer_target(g, lab, ln, "right_neighbor") != v) or \
       (rn is not None and pointer_target(g, lab, rn, "left_neighbor") != v):
        failed.append("agreement")

    if cls is NodeClass.INTERNAL:
        lc = pointer_target(g, lab, v, "left_child")
        rc = pointer_target(g, lab, v, "right_child")
        if pointer_target(g, lab, lc, "right_neighbor") != rc or \
           pointer_target(g, lab, rc, "left_neighbor") != lc:
            failed.append("siblings")
        # lateral neighbors of internal nodes run in lockstep one level down:
        # the right neighbor's left child continues the row after our right child
        ok = True
        if rn is not None:
            if classify_node(g, lab, rn) is not NodeClass.INTERNAL:
                ok = False
            else:
                w_lc = pointer_target(g, lab, rn, "left_child")
                if pointer_target(g, lab, rc, "right_neighbor") != w_lc:
                    ok = False
        if ln is not None:
            if classify_node(g, lab, ln) is not NodeClass.INTERNAL:
                ok = False
            else:
                u_rc = pointer_target(g, lab, ln, "right_child")
                if pointer_target(g, lab, lc, "left_neighbor") != u_rc:
                    ok = False
        if not ok:
            failed.append("persistence")

    if cls is NodeClass.LEAF:
        for u in (ln, rn):
            if u is not None and classify_node(g, lab, u) is not NodeClass.LEAF:
                failed.append("leaves")
                break

    return (not failed, failed)


def globally_compatible(g: PortedGraph, lab: Labeling) -> bool:
    return all(classify_node(g, lab, v) is NodeClass.INCONSISTENT
               or check_compatible(g, lab, v)[0] for v in range(g.n))


def btl_check_vertex(g: PortedGraph, lab: Labeling, out: list[str], v: int):
    vid = g.ids[v]
    o = decode_pair(out[v])
    if o is None:
        return [(vid, "decode", f"output {out[v]!r} is not a (beta, port) pair")]
    cls = classify_node(g, lab, v)
    if cls is NodeClass.INCONSISTENT:
        return []
    compat, _ = check_compatible(g, lab, v)
    if not compat:
        if o != ("U", None):
            return [(vid, "1", f"incompatible node output {out[v]}")]
        return []
    if cls is NodeClass.LEAF:
        if o != ("B", lab[v].parent):
            return [(vid, "2", f"compatible leaf output {out[v]}")]
        return []
    # compatible internal
    lc = pointer_target(g, lab, v, "left_child")
    rc = pointer_target(g, lab, v, "right_child")
    lc_o, rc_o = decode_pair(out[lc]), decode_pair(out[rc])
    both_settled = (lc_o == ("B", lab[lc].parent) and rc_o == ("B", lab[rc].parent))
    if both_settled and o != ("B", lab[v].parent):
        return [(vid, "3a", f"children settled but output {out[v]}")]
    unsettled_ports = [lab[v].left_child if lc_o and lc_o[0] == "U" else None,
                       lab[v].right_child if rc_o and rc_o[0] == "U" else None]
    unsettled_ports = [p for p in unsettled_ports if p is not None]
    if unsettled_ports and not (o[0] == "U" and o[1] in unsettled_ports):
        return [(vid, "3b",
                 f"child unsettled but output {out[v]} (expected U toward {unsettled_ports})")]
    return []


def validate_balanced_tree(g: PortedGraph, lab: Labeling, out: list[str]) -> Verdict:
    viols = []
    for v in range(g.n):
        viols.extend(btl_check_vertex(g, lab, out, v))
    return _verdict(viols)


# ---------------------------------------------------------------------------
# Leveled coloring family
# ---------------------------------------------------------------------------

class HierStruct:
    """Level / leaf / child accessors used by the leveled validators.

    level_source 'computed' derives levels from right-child chains (capped at
    k+1); 'input' reads level_in.  Child accessors respect levels, so the
    structure matches the leveled forest.
    """

    def __init__(self, g: PortedGraph, lab: Labeling, k: int,
                 level_source: str = "computed"):
        self.g, self.lab, self.k = g, lab, k
        self.level_source = level_source
        self._level: dict[int, int] = {}

    def level(self, v: int) -> int | None:
        if v in self._level:
            return self._level[v]
        if self.level_source == "input":
            lv = self.lab[v].level_in
            if lv is None or not (1 <= lv <= self.k + 1):
                lv = None
        else:
            lv = node_level(self.g, self.lab, v, self.k)
        self._level[v] = lv
        return lv

    def lc(self, v: int) -> int | None:
        """Same-level mutual left child (the along-component successor)."""
        c = mutual_child(self.g, self.lab, v, "left_child")
        if c is None or self.level(c) != self.level(v):
            return None
        return c

    def rc(self, v: int) -> int | None:
        """Mutual right child one level down."""
        c = mutual_child(self.g, self.lab, v, "right_child")
        if c is None:
            return None
        lv = self.level(v)
        if lv is None or self.level(c) != lv - 1:
            return None
        return c

    def is_leaf(self, v: int) -> bool:
        return self.lc(v) is None


def _hthc_conditions(hs: HierStruct, out: list[str], v: int, k: int,
                     modified_level2: bool = False):
    """Shared per-vertex condition sweep for the leveled colorings.

    With modified_level2, a level-2 node may be exempt only when its right
    child settled the level-1 instance below it (output (B,*) or (U,*)).
    """
    g, lab = hs.g, hs.lab
    vid = g.ids[v]
    lv = hs.level(v)
    if lv is None:
        return [(vid, "input", "missing or out-of-range level")]
    o = decode_symbol(out[v])
    chi = lab[v].input_color

    def out_sym(u):
        return decode_symbol(out[u]) if u is not None else None

    viols = []
    hybrid2 = modified_level2 and lv == 2
    if lv > k and not hybrid2:
        if o != "X":
            viols.append((vid, "1", f"level {lv} > {k} must output X, got {out[v]}"))
        return viols
    if o is None:
        return [(vid, "decode", f"output {out[v]!r} is not a symbol")]

    leaf = hs.is_leaf(v)
    lc, rc = hs.lc(v), hs.rc(v)
    if leaf and o not in (chi, "D", "X"):
        viols.append((vid, "2", f"leaf output {out[v]} not in (input, D, X)"))
    if lv == 1:
        if o not in ("R", "B", "D"):
            viols.append((vid, "3a", f"level-1 output {out[v]} not in (R, B, D)"))
        if not leaf and o != out_sym(lc):
            viols.append((vid, "3b", "level-1 output differs from left child"))
    if 1 < lv < k or hybrid2:
        if not leaf:
            lc_o, rc_o = out_sym(lc), out_sym(rc)
            branch_a = o == lc_o and o in ("R", "B", "D")
            if hybrid2:
                rc_pair = decode_pair(out[rc]) if rc is not None else None
                branch_b = o == "X" and rc_pair is not None
            else:
                branch_b = o == "X" and rc_o in ("R", "B", "X")
            branch_c = o in (chi, "D") and lc_o == "X"
            if not (branch_a or branch_b or branch_c):
                viols.append((vid, "4", f"output {out[v]} fits no branch of 4a/4b/4c"))
    if lv == k and not hybrid2:
        if o not in ("R", "B", "X"):
            viols.append((vid, "5", f"level-{k} output {out[v]} not in (R, B, X)"))
        if o == "X" and out_sym(rc) not in ("R", "B", "X"):
            viols.append((vid, "5a", "exempt node whose right child declined"))
        if not leaf and o in ("R", "B"):
            lc_o = out_sym(lc)
            ok = (lc_o == o) or (lc_o == "X" and o == chi)
            if not ok:
                viols.append((vid, "5b", f"output {out[v]} breaks the run at level {k}"))
    return viols


def hthc_check_vertex(g, lab, out, v, k, hs: HierStruct | None = None):
    hs = hs or HierStruct(g, lab, k)
    return _hthc_conditions(hs, out, v, k)


def validate_hthc(g: PortedGraph, lab: Labeling, out: list[str], k: int) -> Verdict:
    hs = HierStruct(g, lab, k)
    viols = []
    for v in range(g.n):
        viols.extend(_hthc_conditions(hs, out, v, k))
    return _verdict(viols)


# ---------------------------------------------------------------------------
# Hybrid: balanced-tree components below a leveled coloring
# ---------------------------------------------------------------------------

def restrict_labeling(g: PortedGraph, lab: Labeling, keep: list[bool]) -> Labeling:
    """Null out pointers that leave the kept set (and all pointers of dropped
    nodes), so validators see each induced sub-instance independently."""
    out: Labeling = []
    for v in range(g.n):
        l = lab[v]
        if not keep[v]:
            out.append(replace(l, parent=None, left_child=None, right_child=None,
                               left_neighbor=None, right_neighbor=None))
            continue
        fields = {}
        for f in ("parent", "left_child", "right_child", "left_neighbor",
                  "right_neighbor"):
            port = getattr(l, f)
            t = pointer_target(g, lab, v, f)
            fields[f] = port if (t is not None and keep[t]) else None
        out.append(replace(l, **fields))
    return out


def _level1_tree_neighbors(g: PortedGraph, rl: Labeling, v: int) -> list[int]:
    """Mutual parent/child links of v inside the level-1 restriction."""
    nbrs = []
    for f in ("left_child", "right_child"):
        c = mutual_child(g, rl, v, f)
        if c is not None:
            nbrs.append(c)
    p = pointer_target(g, rl, v, "parent")
    if p is not None and mutual_child(g, rl, p, "left_child") != v \
            and mutual_child(g, rl, p, "right_child") != v:
        p = None
    if p is not None:
        nbrs.append(p)
    return nbrs


def hybrid_check_vertex(g, lab, out, v, k, rl: Labeling | None = None):
    lv = lab[v].level_in
    vid = g.ids[v]
    if lv is None or not (1 <= lv <= k + 1):
        return [(vid, "input", f"missing or out-of-range level {lv!r}")]
    if lv >= 2:
        hs = HierStruct(g, lab, k, level_source="input")
        return _hthc_conditions(hs, out, v, k, modified_level2=True)
    # level 1: the component either declines unanimously or solves the
    # balanced-tree instance induced on level-1 nodes
    if rl is None:
        rl = restrict_labeling(g, lab, [l.level_in == 1 for l in lab])
    if out[v] == "D":
        for u in _level1_tree_neighbors(g, rl, v):
            if out[u] != "D":
                return [(vid, "1-D", f"declined next to non-declining {g.ids[u]}")]
        return []
    viols = btl_check_vertex(g, rl, out, v)
    return [(vid, f"1-{cid}", reason) for (_, cid, reason) in viols]


def validate_hybrid(g: PortedGraph, lab: Labeling, out: list[str], k: int) -> Verdict:
    rl = restrict_labeling(g, lab, [l.level_in == 1 for l in lab])
    hs = HierStruct(g, lab, k, level_source="input")
    viols = []
    for v in range(g.n):
        lv = lab[v].level_in
        if lv is not None and 2 <= lv <= k + 1:
            viols.extend(_hthc_conditions(hs, out, v, k, modified_level2=True))
        else:
            viols.extend(hybrid_check_vertex(g, lab, out, v, k, rl=rl))
    return _verdict(viols)


# ---------------------------------------------------------------------------
# Selector-bit union of the two previous problems
# ---------------------------------------------------------------------------

def _hh_parts(g: PortedGraph, lab: Labeling):
    bits = [l.selector_bit for l in lab]
    keep0 = [b == 0 for b in bits]
    keep1 = [b == 1 for b in bits]
    return bits, restrict_labeling(g, lab, keep0), restrict_labeling(g, lab, keep1)


def hh_check_vertex(g, lab, out, v, k, l, parts=None):
    bits, rl0, rl1 = parts if parts is not None else _hh_parts(g, lab)
    vid = g.ids[v]
    if bits[v] not in (0, 1):
        return [(vid, "input", f"missing selector bit {bits[v]!r}")]
    if bits[v] == 0:
        hs = HierStruct(g, rl0, l)  # input level ignored: computed levels
        return _hthc_conditions(hs, out, v, l)
    return hybrid_check_vertex(g, rl1, out, v, k)


def validate_hh(g: PortedGraph, lab: Labeling, out: list[str], k: int, l: int) -> Verdict:
    parts = _hh_parts(g, lab)
    viols = []
    hs0 = HierStruct(g, parts[1], l)
    rl1_level1 = restrict_labeling(g, parts[2], [x.level_in == 1 for x in parts[2]])
    for v in range(g.n):
        if parts[0][v] == 0:
            viols.extend(_hthc_conditions(hs0, out, v, l))
        elif parts[0][v] == 1:
            lv = parts[2][v].level_in
            if lv is not None and 2 <= lv <= k + 1:
                hs = HierStruct(g, parts[2], k, level_source="input")
                viols.extend(_hthc_conditions(hs, out, v, k, modified_level2=True))
            else:
                viols.extend(hybrid_check_vertex(g, parts[2], out, v, k, rl=rl1_level1))
        else:
            viols.append((g.ids[v], "input", f"missing selector bit"))
    return _verdict(viols)


# ---------------------------------------------------------------------------
# Problem registry and the local checker
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    name: str
    needs_k: bool = False
    needs_l: bool = False

    def checking_radius(self, k: int = 1, l: int = 1) -> int:
        if self.name == "leafcolor":
            return 2
        if self.name == "btl":
            return 3
        if self.name == "hh":
            return 2 * (max(k, l) + 1)
        return 2 * (k + 1)

    def validate(self, g, lab, out, k: int = 1, l: int = 1) -> Verdict:
        if self.name == "leafcolor":
            return validate_leaf_coloring(g, lab, out)
        if self.name == "btl":
            return validate_balanced_tree(g, lab, out)
        if self.name == "hthc":
            return validate_hthc(g, lab, out, k)
        if self.name == "hybrid":
            return validate_hybrid(g, lab, out, k)
        if self.name == "hh":
            return validate_hh(g, lab, out, k, l)
        raise KeyError(self.name)

    def check_vertex(self, g, lab, out, v, k: int = 1, l: int = 1):
        if self.name == "leafcolor":
            return leafcolor_check_vertex(g, lab, out, v)
        if self.name == "btl":
            return btl_check_vertex(g, lab, out, v)
        if self.name == "hthc":
            return hthc_check_vertex(g, lab, out, v, k)
        if self.name == "hybrid":
            return hybrid_check_vertex(g, lab, out, v, k)
        if self.name == "hh":
            return hh_check_vertex(g, lab, out, v, k, l)
        raise KeyError(self.name)


PROBLEMS = {name: Problem(name, needs_k=name in ("hthc", "hybrid", "hh"),
                          needs_l=(name == "hh"))
            for name in ("leafcolor", "btl", "hthc", "hybrid", "hh")}


def local_check(problem: str, g: PortedGraph, lab: Labeling, out: list[str],
                v: int, k: int = 1, l: int = 1) -> bool:
    """True iff the per-vertex conditions hold at v; the conjunction over all
    vertices equals the global validator's verdict."""
    return not PROBLEMS[problem].check_vertex(g, lab, out, v, k=k, l=l)


# ---------------------------------------------------------------------------
# Precomputed checkers for repeated validation of one instance
# ---------------------------------------------------------------------------

class LeafColoringChecker:
    """Structure computed once; verdict() is then a single pass over outputs.

    Agrees with validate_leaf_coloring on every output labeling.
    """

    def __init__(self, g: PortedGraph, lab: Labeling):
        self.g = g
        self.chi = [l.input_color for l in lab]
        self.kind: list[tuple] = []
        for v in range(g.n):
            cls = classify_node(g, lab, v)
            if cls is NodeClass.INTERNAL:
                lc = pointer_target(g, lab, v, "left_child")
                rc = pointer_target(g, lab, v, "right_child")
                self.kind.append((True, lc, rc))
            else:
                self.kind.append((False, cls.value, None))

    def verdict(self, out: list[str]) -> Verdict:
        viols = []
        ids = self.g.ids
        for v, spec in enumerate(self.kind):
            o = out[v]
            if o not in ("R", "B"):
                viols.append((ids[v], "decode", f"output {o!r} is not a color"))
            elif spec[0]:
                if o != out[spec[1]] and o != out[spec[2]]:
                    viols.append((ids[v], "2",
                                  f"internal output {o} matches neither child"))
            elif o != self.chi[v]:
                viols.append((ids[v], "1",
                              f"{spec[1]} output {o} != input {self.chi[v]}"))
        return _verdict(viols)


class LeveledChecker:
    """Same idea for the leveled coloring (computed levels)."""

    def __init__(self, g: PortedGraph, lab: Labeling, k: int):
        self.g, self.k = g, k
        hs = HierStruct(g, lab, k)
        self.level = [hs.level(v) for v in range(g.n)]
        self.lc = [hs.lc(v) for v in range(g.n)]
        self.rc = [hs.rc(v) for v in range(g.n)]
        self.leaf = [self.lc[v] is None for v in range(g.n)]
        self.chi = [l.input_color for l in lab]

    def verdict(self, out: list[str]) -> Verdict:
        viols = []
        k, ids = self.k, self.g.ids
        for v in range(self.g.n):
            lv = self.level[v]
            o = out[v] if out[v] in SYMBOLS else None
            if lv > k:
                if o != "X":
                    viols.append((ids[v], "1", f"level {lv} must output X"))
                continue
            if o is None:
                viols.append((ids[v], "decode", f"output {out[v]!r}"))
                continue
            chi = self.chi[v]
            leaf, lc, rc = self.leaf[v], self.lc[v], self.rc[v]
            lc_o = out[lc] if lc is not None and out[lc] in SYMBOLS else None
            rc_o = out[rc] if rc is not None and out[rc] in SYMBOLS else None
            if leaf and o not in (chi, "D", "X"):
                viols.append((ids[v], "2", "leaf output outside (input, D, X)"))
            if lv == 1:
                if o not in ("R", "B", "D"):
                    viols.append((ids[v], "3a", "level-1 output outside (R, B, D)"))
                if not leaf and o != lc_o:
                    viols.append((ids[v], "3b", "level-1 run not unanimous"))
            if 1 < lv < k and not leaf:
                ok = (o == lc_o and o in ("R", "B", "D")) \
                    or (o == "X" and rc_o in ("R", "B", "X")) \
                    or (o in (chi, "D") and lc_o == "X")
                if not ok:
                    viols.append((ids[v], "4", "no branch of 4a/4b/4c holds"))
            if lv == k:
                if o not in ("R", "B", "X"):
                    viols.append((ids[v], "5", "top-level output outside (R, B, X)"))
                if o == "X" and rc_o not in ("R", "B", "X"):
                    viols.append((ids[v], "5a", "exempt over a declined child"))
                if not leaf and o in ("R", "B"):
                    if not (lc_o == o or (lc_o == "X" and o == chi)):
                        viols.append((ids[v], "5b", "top-level run broken"))
        return _verdict(viols)


def make_checker(problem: str, g: PortedGraph, lab: Labeling, k: int = 1,
                 l: int = 1):
    """Reusable verdict function for one fixed instance."""
    if problem == "leafcolor":
        return LeafColoringChecker(g, lab).verdict
    if problem == "hthc":
        return LeveledChecker(g, lab, k).verdict
    spec = PROBLEMS[problem]
    return lambda out: spec.validate(g, lab, out, k=k, l=l)
