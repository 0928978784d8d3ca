"""Whole-instance batch evaluation for the hot solvers.

run_all over every start vertex through the per-query engine costs
Theta(sum of volumes), which at benchmark scale means billions of Python
steps.  These lanes compute, per start vertex, exactly the output and cost
record the engine would produce, using closed forms on the regular regions of
an instance and falling back to the real engine for any vertex whose
execution could touch an irregularity (label cycles, extra graph cycles,
incoherent level structure, deep components).  Equivalence against the engine
is asserted wholesale in the test suite.
"""

from __future__ import annotations

import numpy as np

from .generators import ceil_root, log2_ceil
from .graph import Labeling, PortedGraph
from .probe import CostRecord, run_execution, stream_block

_U = np.uint64
_M64 = (1 << 64) - 1


def stream_block_array(seed: int, ids, index: int) -> np.ndarray:
    """Vectorized mirror of probe.stream_block (bitwise identical)."""
    ids64 = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):  # uint64 wraparound is the point
        base = (_U((seed * 0xD1342543DE82EF95) & _M64)
                + ids64 * _U(0x9E3779B97F4A7C15)
                + _U((index * 0xBF58476D1CE4E5B9) & _M64)
                + _U(0x632BE59BD9B4E019))
        x = base
        x ^= x >> _U(30)
        x *= _U(0xBF58476D1CE4E5B9)
        x ^= x >> _U(27)
        x *= _U(0x94D049BB133111EB)
        x ^= x >> _U(31)
    return x


# ---------------------------------------------------------------------------
# Shared structural prep
# ---------------------------------------------------------------------------

def _ptr_target(g: PortedGraph, lab: Labeling, v: int, field: str):
    """(target, back_port) via a label pointer, or (None, None)."""
    port = getattr(lab[v], field)
    if port is None or not g.has_port(v, port):
        return None, None
    return g.neighbor(v, port)


def _mutual_arrays(g: PortedGraph, lab: Labeling):
    """Per-vertex classification exactly as the engine's scout performs it:
    fetch left child, check mutuality, then the right child."""
    n = g.n
    lct = [None] * n   # left-child target (fetched first when present)
    rct = [None] * n
    lcm = [False] * n  # mutual flags
    rcm = [False] * n
    qc = [0] * n       # classification queries the scout issues at v
    fetched = [()] * n  # targets revealed by classifying v, in order
    internal = [False] * n
    for v in range(n):
        t, back = _ptr_target(g, lab, v, "left_child")
        if t is None:
            continue
        lct[v] = t
        qc[v] = 1
        fetched[v] = (t,)
        lcm[v] = lab[t].parent == back
        if not lcm[v]:
            continue
        t2, back2 = _ptr_target(g, lab, v, "right_child")
        if t2 is None:
            continue
        rct[v] = t2
        qc[v] = 2
        fetched[v] = (t, t2)
        rcm[v] = lab[t2].parent == back2
        internal[v] = lcm[v] and rcm[v]
    return lct, rct, lcm, rcm, qc, fetched, internal


def _mutual_parent_cycles(g: PortedGraph, lab: Labeling) -> list[bool]:
    """Vertices lying on cycles of the mutual parent/child structure."""
    n = g.n
    mp = [None] * n  # the unique node whose designated child v is, if mutual
    for v in range(n):
        t, _ = _ptr_target(g, lab, v, "parent")
        if t is None:
            continue
        for field in ("left_child", "right_child"):
            ct, _ = _ptr_target(g, lab, t, field)
            if ct == v:
                mp[v] = t
                break
    color = [0] * n  # 0 unvisited, 1 in progress, 2 done
    on_cycle = [False] * n
    for v in range(n):
        if color[v]:
            continue
        path = []
        x = v
        while x is not None and color[x] == 0:
            color[x] = 1
            path.append(x)
            x = mp[x]
        if x is not None and color[x] == 1:  # closed a new cycle
            for y in path[path.index(x):]:
                on_cycle[y] = True
        for y in path:
            color[y] = 2
    return on_cycle


def _component_cycle_flags(g: PortedGraph, on_cycle) -> tuple[list[bool], list[bool]]:
    """Per vertex: (component has cycles beyond the single label cycle,
    component contains any label cycle).  Closed-form distance formulas are
    only safe on components that are trees, or whose sole cycle is the
    backbone being walked."""
    n = g.n
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u in range(n):
        for _, (w, _) in g.ports[u].items():
            if u < w:
                ru, rw = find(u), find(w)
                if ru != rw:
                    parent[ru] = rw
    nodes_per: dict[int, int] = {}
    edges_per: dict[int, int] = {}
    cyc_nodes_per: dict[int, int] = {}
    for u in range(n):
        r = find(u)
        nodes_per[r] = nodes_per.get(r, 0) + 1
        edges_per[r] = edges_per.get(r, 0) + g.degree(u)
        cyc_nodes_per[r] = cyc_nodes_per.get(r, 0) + (1 if on_cycle[u] else 0)
    extra = [False] * n
    has_label_cycle = [False] * n
    for u in range(n):
        r = find(u)
        cycles = edges_per[r] // 2 - nodes_per[r] + 1
        allowed = 1 if cyc_nodes_per[r] > 0 else 0
        extra[u] = cycles > allowed
        has_label_cycle[u] = cyc_nodes_per[r] > 0
    return extra, has_label_cycle


def _careful_costs(g, lab, seed, make_alg, verts, outputs, costs):
    for v in verts:
        out, cost, _ = run_execution(g, lab, make_alg(), v, seed)
        outputs[v] = out
        costs[v] = cost


# ---------------------------------------------------------------------------
# Random walk to a terminal
# ---------------------------------------------------------------------------

def _rw_prep(g: PortedGraph, lab: Labeling):
    cache = getattr(g, "_rw_prep", None)
    if cache is not None and cache[0] is lab:
        return cache[1]
    lct, rct, lcm, rcm, qc, fetched, internal = _mutual_arrays(g, lab)
    on_cycle = _mutual_parent_cycles(g, lab)
    extra, _ = _component_cycle_flags(g, on_cycle)
    # a vertex is risky if classifying it reveals a label-cycle vertex
    risky = [on_cycle[v] or extra[v] or any(on_cycle[t] or extra[t] for t in fetched[v])
             for v in range(g.n)]
    colors = [lab[v].input_color if lab[v].input_color in ("R", "B") else "R"
              for v in range(g.n)]
    prep = {"lct": lct, "rct": rct, "qc": qc, "internal": internal,
            "risky": risky, "colors": colors}
    g._rw_prep = (lab, prep)
    return prep


def rw_batch(g: PortedGraph, lab: Labeling, seed: int, cfg):
    from .solvers import rw_to_leaf_solver
    n = g.n
    if seed is None:
        raise ValueError("the walk solver needs a seed")
    prep = _rw_prep(g, lab)
    lct, rct = prep["lct"], prep["rct"]
    qc, internal, risky = prep["qc"], prep["internal"], prep["risky"]
    colors = prep["colors"]
    cap = cfg.tau * log2_ceil(n)
    bits = (stream_block_array(seed, g.ids, 1) & _U(1)).astype(np.int64).tolist()
    step = [lct[v] if bits[v] == 0 else rct[v] for v in range(n)]

    # resolve the seed-fixed walk function iteratively; paths from non-risky
    # vertices never meet a cycle, so the recursion grounds at terminals
    L = [None] * n       # moves to the terminal
    P = [None] * n       # classification probes along the way (terminal incl.)
    OUT = [None] * n
    QT = [None] * n      # terminal's own query count (for the distance)
    BADP = [None] * n    # some vertex on the path is risky

    def resolve(v0):
        stack = [v0]
        while stack:
            v = stack[-1]
            if L[v] is not None:
                stack.pop()
                continue
            if risky[v] or not internal[v]:
                L[v] = 0
                P[v] = qc[v]
                OUT[v] = colors[v]
                QT[v] = qc[v]
                BADP[v] = risky[v]
                stack.pop()
                continue
            nxt = step[v]
            if L[nxt] is None:
                stack.append(nxt)
                continue
            L[v] = 1 + L[nxt] if L[nxt] < cap else cap  # saturate, cap is global
            P[v] = qc[v] + P[nxt]
            OUT[v] = OUT[nxt]
            QT[v] = QT[nxt]
            BADP[v] = BADP[nxt]
            stack.pop()

    outputs = [None] * n
    costs: list[CostRecord | None] = [None] * n
    careful = []
    for v in range(n):
        resolve(v)
        if BADP[v]:
            careful.append(v)
            continue
        if L[v] >= cap:
            costs[v] = CostRecord(dist=cap, vol=1 + 2 * cap, probes=2 * cap,
                                  random_bits=128 * cap, truncated=True)
            outputs[v] = "R"
        else:
            moves = L[v]
            dist = moves + (1 if QT[v] >= 1 else 0)
            costs[v] = CostRecord(dist=dist, vol=1 + P[v], probes=P[v],
                                  random_bits=128 * moves, truncated=False)
            outputs[v] = OUT[v]
    if careful:
        solver = rw_to_leaf_solver(cfg)
        _careful_costs(g, lab, seed, solver.new, careful, outputs, costs)
    return outputs, costs


# ---------------------------------------------------------------------------
# Leveled component solver
# ---------------------------------------------------------------------------

def _leveled_prep(g: PortedGraph, lab: Labeling, k: int):
    cache = getattr(g, "_leveled_prep", None)
    if cache is not None and cache[0] is lab and cache[1] == k:
        return cache[2]
    n = g.n
    lct, rct, lcm, rcm, qc, fetched, internal = _mutual_arrays(g, lab)
    rc_mut = [rct[v] if rcm[v] else None for v in range(n)]
    # mutual right child per the scout (fetch order there is rc alone)
    rc_solo = [None] * n
    for v in range(n):
        t, back = _ptr_target(g, lab, v, "right_child")
        if t is not None and lab[t].parent == back:
            rc_solo[v] = t
    lc_solo = [None] * n
    for v in range(n):
        t, back = _ptr_target(g, lab, v, "left_child")
        if t is not None and lab[t].parent == back:
            lc_solo[v] = t

    level = [None] * n
    chain_fetch = [0] * n   # queries the level walk issues from v
    rc_cyclic = [False] * n
    for v in range(n):
        if level[v] is not None:
            continue
        x, depth, seen = v, 0, {v}
        chainq = 0
        while depth <= k:
            t, back = _ptr_target(g, lab, x, "right_child")
            if t is None:
                break
            chainq += 1
            if lab[t].parent != back:
                break
            if t in seen:
                rc_cyclic[v] = True
                break
            seen.add(t)
            x = t
            depth += 1
        else:
            level[v] = k + 1
            chain_fetch[v] = chainq
            continue
        if rc_cyclic[v]:
            level[v] = k + 1
        else:
            level[v] = depth + 1
        chain_fetch[v] = chainq

    on_cycle = _mutual_parent_cycles(g, lab)
    extra, has_label_cycle = _component_cycle_flags(g, on_cycle)

    # walk same-level left-child chains into components
    comp_id = [None] * n
    comps = []
    careful = [False] * n

    def slc_next(x):
        c = lc_solo[x]
        if c is None or level[c] != level[x]:
            return None
        return c

    def slc_prev(x):
        t, back = _ptr_target(g, lab, x, "parent")
        if t is None:
            return None
        if getattr(lab[t], "left_child") is None or not g.has_port(t, lab[t].left_child):
            return None
        if g.neighbor(t, lab[t].left_child)[0] != x or lc_solo[t] != x:
            return None
        if level[t] != level[x]:
            return None
        return t

    for v in range(n):
        if comp_id[v] is not None or level[v] > k:
            continue
        members = [v]
        seenm = {v}
        cyc = False
        x = v
        while True:
            c = slc_next(x)
            if c is None:
                break
            if c in seenm:
                cyc = c == members[0]
                if not cyc:
                    careful[v] = True
                break
            members.append(c)
            seenm.add(c)
            x = c
        if not cyc:
            x = members[0]
            while True:
                p = slc_prev(x)
                if p is None:
                    break
                if p in seenm:
                    careful[p] = True
                    break
                members.insert(0, p)
                seenm.add(p)
                x = p
        cid = len(comps)
        for m in members:
            comp_id[m] = cid
        comps.append({"members": members, "cycle": cyc, "level": level[v]})

    prep = {"lct": lct, "rct": rct, "qc": qc, "internal": internal,
            "level": level, "chain_fetch": chain_fetch, "rc_cyclic": rc_cyclic,
            "rc_solo": rc_solo, "lc_solo": lc_solo, "comp_id": comp_id,
            "comps": comps, "on_cycle": on_cycle, "extra": extra,
            "has_label_cycle": has_label_cycle, "careful_seed": careful}
    g._leveled_prep = (lab, k, prep)
    return prep


def leveled_batch(g: PortedGraph, lab: Labeling, seed: int, cfg, sampled: bool):
    from .solvers import recursive_hthc_solver, sampled_hthc_solver
    n = g.n
    k = cfg.k
    nr = ceil_root(n, k)
    budget = 2 * nr
    prep = _leveled_prep(g, lab, k)
    level, chain_fetch = prep["level"], prep["chain_fetch"]
    comps, comp_id = prep["comps"], prep["comp_id"]
    extra, rc_cyclic = prep["extra"], prep["rc_cyclic"]

    outputs: list[str | None] = [None] * n
    costs: list[CostRecord | None] = [None] * n
    careful = [v for v in range(n) if prep["careful_seed"][v]]
    careful_set = set(careful)

    def mark_careful(vs):
        for v in vs:
            if v not in careful_set:
                careful_set.add(v)
                careful.append(v)

    colors = [lab[v].input_color if lab[v].input_color in ("R", "B") else "R"
              for v in range(n)]

    has_label_cycle = prep["has_label_cycle"]
    # isolated high-level vertices: output X after the level walk alone
    for v in range(n):
        if level[v] <= k:
            continue
        if rc_cyclic[v] or extra[v] or has_label_cycle[v]:
            mark_careful([v])
            continue
        f = chain_fetch[v]
        outputs[v] = "X"
        costs[v] = CostRecord(dist=f, vol=1 + f, probes=f, random_bits=0)

    for comp in comps:
        members = comp["members"]
        s = len(members)
        lv = comp["level"]
        # coherence: every member's level walk must be clean and chains full
        coherent = all(not rc_cyclic[m] and not extra[m]
                       and chain_fetch[m] == lv - 1 for m in members)
        if comp["cycle"]:
            # the single graph cycle must be this backbone itself
            coherent = coherent and all(prep["on_cycle"][m] for m in members)
        else:
            # tree formulas need a cycle-free component
            coherent = coherent and not has_label_cycle[members[0]]
        if not coherent or s > budget:
            mark_careful(members)
            continue
        if comp["cycle"]:
            u0 = min(members, key=lambda m: g.ids[m])
            out = colors[u0]
            probes = (lv - 1) + (s - 1) * lv + 1
            vol = s * lv
            dist = s // 2 + (lv - 1)
            for m in members:
                outputs[m] = out
                costs[m] = CostRecord(dist=dist, vol=vol, probes=probes,
                                      random_bits=0)
            continue
        # path component: look one step above the root, as the walk does
        root = members[0]
        t, back = _ptr_target(g, lab, root, "parent")
        root_probe = 0
        if t is not None:
            lcp = lab[t].left_child
            if lcp is not None and g.has_port(t, lcp) and \
                    g.neighbor(t, lcp)[0] == root and prep["lc_solo"][t] == root:
                mark_careful(members)  # engine would walk the parent's levels
                continue
            root_probe = 1
        leaf = members[-1]
        lt, lback = _ptr_target(g, lab, leaf, "left_child")
        leaf_probe = 0
        if lt is not None:
            if lab[lt].parent == lback:
                mark_careful(members)  # mutual child off the end: level walk
                continue
            leaf_probe = 1
        out = colors[leaf]
        probes = (lv - 1) + (s - 1) * lv + root_probe + leaf_probe
        vol = s * lv + root_probe + leaf_probe
        for i, m in enumerate(members):
            up, down = i, s - 1 - i
            dist = max(up, down) + (lv - 1) if lv > 1 else max(up, down)
            if root_probe:
                dist = max(dist, up + 1)
            if leaf_probe:
                dist = max(dist, down + 1)
            outputs[m] = out
            costs[m] = CostRecord(dist=dist, vol=vol, probes=probes,
                                  random_bits=0)

    if careful:
        solver = sampled_hthc_solver(cfg) if sampled else recursive_hthc_solver(cfg)
        _careful_costs(g, lab, seed, solver.new, sorted(careful), outputs, costs)
    return outputs, costs
