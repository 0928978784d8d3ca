"""Probe algorithms for the five labeling problems.

Deterministic distance solvers gather bounded neighborhoods; randomized
volume solvers walk or sample using per-vertex private randomness.  All are
written as generator logic over a Scout, which caches everything an execution
has revealed so no (vertex, port) pair is ever queried twice.
"""

from __future__ import annotations

from dataclasses import dataclass

from .generators import ceil_root, log2_ceil
from .graph import NodeClass, NodeLabel
from .probe import GeneratorAlgorithm, Halt, Query, Solver

RBX = ("R", "B", "X")


@dataclass(frozen=True)
class SolverConfig:
    """Shared knobs: hierarchy depths, walk truncation, waypoint density."""

    k: int = 2
    l: int | None = None
    tau: int = 32
    c_const: float = 3.0

    def __post_init__(self):
        if self.l is None:
            object.__setattr__(self, "l", self.k)
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.c_const < 3:
            raise ValueError("c_const must be >= 3")
        if not (1 <= self.k <= self.l):
            raise ValueError("need 1 <= k <= l")


def waypoint_threshold(n: int, k: int, c_const: float) -> int:
    """Fixed-point cutoff: a vertex whose first random block falls below it
    self-selects as a waypoint (probability c*ceil(log2 n)/ceil(n**(1/k)))."""
    p = min(1.0, c_const * log2_ceil(n) / ceil_root(n, k))
    return min(1 << 64, int(p * float(1 << 64)))


def _color_or_R(label: NodeLabel) -> str:
    return label.input_color if label.input_color in ("R", "B") else "R"


class Scout:
    """Execution-local cache of revealed structure.

    All traversal helpers are sub-generators (used with `yield from`) that
    issue at most one engine query per unknown (vertex, port) pair.
    """

    def __init__(self, view, n: int, max_degree: int, keep=None):
        self.n = n
        self.max_degree = max_degree
        self.keep = keep  # optional label predicate restricting the instance
        self.deg = {view.id: view.degree}
        self.label = {view.id: view.label}
        self.views = {view.id: view}
        self.adj: dict[tuple[int, int], tuple[int, int]] = {}
        self._internal: dict[int, bool] = {}
        self._class: dict[int, NodeClass] = {}
        self._level: dict[int, int] = {}
        self._walk_bit: dict[int, int] = {}
        self._waypoint: dict[int, bool] = {}

    def _dropped(self, vid: int) -> bool:
        return self.keep is not None and not self.keep(self.label[vid])

    def ptr(self, vid: int, field: str) -> int | None:
        if self._dropped(vid):
            return None
        port = getattr(self.label[vid], field)
        if port is None or not (1 <= port <= self.deg[vid]):
            return None
        return port

    def fetch(self, vid: int, port: int):
        """Neighbor id across (vid, port); queries only on a cache miss."""
        key = (vid, port)
        if key not in self.adj:
            resp = yield Query(vid, port)
            uid = resp.view.id
            if uid not in self.label:
                self.deg[uid] = resp.view.degree
                self.label[uid] = resp.view.label
                self.views[uid] = resp.view
            self.adj[key] = (uid, resp.back_port)
            self.adj[(uid, resp.back_port)] = (vid, port)
        return self.adj[key][0]

    def target(self, vid: int, field: str):
        """Follow a pointer field; None if absent or outside the kept set."""
        port = self.ptr(vid, field)
        if port is None:
            return None
        uid = yield from self.fetch(vid, port)
        if self._dropped(uid):
            return None
        return uid

    def mutual_child(self, vid: int, field: str):
        """Child via `field` whose parent pointer returns along this edge."""
        port = self.ptr(vid, field)
        if port is None:
            return None
        uid = yield from self.fetch(vid, port)
        if self._dropped(uid):
            return None
        back = self.adj[(vid, port)][1]
        if self.ptr(uid, "parent") != back:
            return None
        return uid

    def is_internal(self, vid: int):
        if vid not in self._internal:
            lc = yield from self.mutual_child(vid, "left_child")
            if lc is None:
                res = False
            else:
                rc = yield from self.mutual_child(vid, "right_child")
                res = rc is not None
            self._internal[vid] = res
        return self._internal[vid]

    def classify(self, vid: int):
        if vid in self._class:
            return self._class[vid]
        if (yield from self.is_internal(vid)):
            res = NodeClass.INTERNAL
        elif self.ptr(vid, "left_child") is None and self.ptr(vid, "right_child") is None:
            p = yield from self.target(vid, "parent")
            if p is not None and (yield from self.is_internal(p)):
                res = NodeClass.LEAF
            else:
                res = NodeClass.INCONSISTENT
        else:
            res = NodeClass.INCONSISTENT
        self._class[vid] = res
        return res

    def level(self, vid: int, k: int):
        """Mutual right-child chain length, capped at k+1 (cycles included)."""
        if vid in self._level:
            return self._level[vid]
        depth, x, seen = 0, vid, {vid}
        lv = k + 1
        while depth <= k:
            c = yield from self.mutual_child(x, "right_child")
            if c is None:
                lv = depth + 1
                break
            if c in seen:
                break
            seen.add(c)
            x = c
            depth += 1
        self._level[vid] = lv
        return lv

    def walk_bit(self, vid: int) -> int:
        """Bit 0 of the second random block (the first is the waypoint draw,
        so the two uses never alias)."""
        if vid not in self._walk_bit:
            view = self.views[vid]
            view.next_block()
            self._walk_bit[vid] = view.next_block() & 1
        return self._walk_bit[vid]

    def waypoint(self, vid: int, threshold: int | None) -> bool:
        if threshold is None:  # deterministic variant: recurse everywhere
            return True
        if vid not in self._waypoint:
            self._waypoint[vid] = self.views[vid].next_block() < threshold
        return self._waypoint[vid]


# ---------------------------------------------------------------------------
# Leaf coloring
# ---------------------------------------------------------------------------

def leafcolor_dist_solver() -> Solver:
    """Copy the input color of the nearest terminal descendant, ties broken by
    the lexicographically least left/right path."""

    def logic(view, n, max_degree):
        sc = Scout(view, n, max_degree)
        start = view.id
        if not (yield from sc.is_internal(start)):
            return _color_or_R(sc.label[start])
        cap = log2_ceil(n) + 1
        frontier: list[tuple[tuple[int, ...], int]] = [((), start)]
        seen = {start}
        for _depth in range(1, cap + 1):
            nxt, terminals = [], []
            for path, wid in frontier:
                for tag, field in ((0, "left_child"), (1, "right_child")):
                    cid = yield from sc.mutual_child(wid, field)
                    if cid in seen:
                        continue
                    seen.add(cid)
                    if (yield from sc.is_internal(cid)):
                        nxt.append((path + (tag,), cid))
                    else:
                        terminals.append((path + (tag,), cid))
            if terminals:
                return _color_or_R(sc.label[min(terminals)[1]])
            frontier = nxt
        return "R"  # unreachable when the advertised n is honest

    return Solver("leafcolor-dist", lambda: GeneratorAlgorithm(logic),
                  deterministic=True)


def rw_to_leaf_solver(cfg: SolverConfig) -> Solver:
    """Random walk toward descendants using each node's private bit; on the
    first return to the start, take the other child.  Truncated after
    tau*ceil(log2 n) steps with a fixed fallback output."""
    from . import fastlane

    def logic(view, n, max_degree):
        sc = Scout(view, n, max_degree)
        start = view.id
        cap = cfg.tau * log2_ceil(n)
        cur, steps = start, 0
        while True:
            if steps >= cap:
                return Halt("R", truncated=True)
            if not (yield from sc.is_internal(cur)):
                return _color_or_R(sc.label[cur])
            bit = sc.walk_bit(cur)
            if cur == start and steps > 0:
                bit = 1 - bit
            field = "left_child" if bit == 0 else "right_child"
            cur = yield from sc.mutual_child(cur, field)
            steps += 1

    return Solver("rw-to-leaf", lambda: GeneratorAlgorithm(logic),
                  batch_run=lambda g, lab, seed: fastlane.rw_batch(g, lab, seed, cfg))


# ---------------------------------------------------------------------------
# Balanced-tree labeling
# ---------------------------------------------------------------------------

def _compatible(sc: Scout, vid: int):
    """Scout-side mirror of the five lateral conditions at a consistent node."""
    cls = yield from sc.classify(vid)
    ln = yield from sc.target(vid, "left_neighbor")
    rn = yield from sc.target(vid, "right_neighbor")
    want = NodeClass.INTERNAL if cls is NodeClass.INTERNAL else NodeClass.LEAF
    for u in (ln, rn):
        if u is not None and (yield from sc.classify(u)) is not want:
            return False
    if ln is not None and (yield from sc.target(ln, "right_neighbor")) != vid:
        return False
    if rn is not None and (yield from sc.target(rn, "left_neighbor")) != vid:
        return False
    if cls is NodeClass.INTERNAL:
        lc = yield from sc.target(vid, "left_child")
        rc = yield from sc.target(vid, "right_child")
        if (yield from sc.target(lc, "right_neighbor")) != rc:
            return False
        if (yield from sc.target(rc, "left_neighbor")) != lc:
            return False
        if rn is not None:
            w_lc = yield from sc.target(rn, "left_child")
            if w_lc is None or (yield from sc.target(rc, "right_neighbor")) != w_lc:
                return False
        if ln is not None:
            u_rc = yield from sc.target(ln, "right_child")
            if u_rc is None or (yield from sc.target(lc, "left_neighbor")) != u_rc:
                return False
    return True


def _kept_parent_port(sc: Scout, vid: int):
    """Parent port, but only when the parent stays inside the kept set."""
    port = sc.ptr(vid, "parent")
    if port is None:
        return None
    t = yield from sc.target(vid, "parent")
    return port if t is not None else None


def _btl_answer(sc: Scout, start: int, n: int):
    """Shared balanced-tree answer: scan descendants within the log-radius
    window for incompatible nodes; settle with (B, parent port) otherwise."""
    from .problems import encode_pair
    cls = yield from sc.classify(start)
    if cls is NodeClass.INCONSISTENT:
        return encode_pair("B", None)
    if not (yield from _compatible(sc, start)):
        return encode_pair("U", None)
    if cls is NodeClass.LEAF:
        return encode_pair("B", (yield from _kept_parent_port(sc, start)))
    cap = log2_ceil(n) + 1
    frontier: list[tuple[tuple[int, ...], int]] = [((), start)]
    seen = {start}
    for _depth in range(1, cap + 1):
        nxt, bad = [], []
        for path, wid in frontier:
            for tag, field in ((0, "left_child"), (1, "right_child")):
                cid = yield from sc.mutual_child(wid, field)
                if cid is None or cid in seen:
                    continue
                seen.add(cid)
                ccls = yield from sc.classify(cid)
                if ccls is not NodeClass.INCONSISTENT and \
                        not (yield from _compatible(sc, cid)):
                    bad.append((path + (tag,), cid))
                if ccls is NodeClass.INTERNAL:
                    nxt.append((path + (tag,), cid))
        if bad:
            first_hop = min(bad)[0][0]
            port = sc.ptr(start, "left_child" if first_hop == 0 else "right_child")
            return encode_pair("U", port)
        frontier = nxt
    return encode_pair("B", (yield from _kept_parent_port(sc, start)))


def btl_dist_solver() -> Solver:
    def logic(view, n, max_degree):
        sc = Scout(view, n, max_degree)
        return (yield from _btl_answer(sc, view.id, n))

    return Solver("btl-dist", lambda: GeneratorAlgorithm(logic),
                  deterministic=True)


# ---------------------------------------------------------------------------
# Leveled coloring: the recursive component solver and its sampled variant
# ---------------------------------------------------------------------------

def _leveled_logic(cfg: SolverConfig, sampled: bool, k_param: str = "k",
                   level_source: str = "computed", base_solve=None,
                   keep=None):
    """RecursiveHTHC shell shared by the pure, sampled, and hybrid variants.

    base_solve(sc, vid) may replace the level-1 rule (the hybrid volume
    solver settles balanced-tree components there); it returns an output
    string, with anything other than D counting as settled.
    """

    def logic(view, n, max_degree):
        k = getattr(cfg, k_param)
        nr = ceil_root(n, k)
        budget = 2 * nr
        threshold = waypoint_threshold(n, k, cfg.c_const) if sampled else None
        sc = Scout(view, n, max_degree, keep=keep)
        memo: dict[int, str] = {}

        def level_of(vid):
            if level_source == "input":
                lv = sc.label[vid].level_in
                return lv if lv is not None and 1 <= lv <= k + 1 else k + 1
            return (yield from sc.level(vid, k))

        def slc_next(vid, lv):
            # along-backbone successor: mutual left child at the same level
            c = yield from sc.mutual_child(vid, "left_child")
            if c is None or (yield from level_of(c)) != lv:
                return None
            return c

        def slc_prev(vid, lv):
            # along-backbone predecessor: parent holding us as left child
            port = sc.ptr(vid, "parent")
            if port is None:
                return None
            pid = yield from sc.fetch(vid, port)
            if sc._dropped(pid):
                return None
            back = sc.adj[(vid, port)][1]
            if sc.ptr(pid, "left_child") != back:
                return None
            if (yield from level_of(pid)) != lv:
                return None
            return pid

        def discover(vid, lv, walk_budget):
            # walk both ways along the backbone, up to walk_budget steps each
            # way; returns (members root..leaf or None if incomplete, cycle?)
            down = [vid]
            x = vid
            wrapped = False
            for _ in range(walk_budget):
                c = yield from slc_next(x, lv)
                if c is None:
                    break
                if c == vid:
                    wrapped = True
                    break
                down.append(c)
                x = c
            else:
                return None, False
            if wrapped:
                return down, True
            up = []
            x = vid
            for _ in range(walk_budget):
                p = yield from slc_prev(x, lv)
                if p is None:
                    break
                up.append(p)
                x = p
            else:
                return None, False
            return list(reversed(up)) + down, False

        def solve(vid):
            if vid in memo:
                return memo[vid]
            memo[vid] = out = yield from _solve(vid)
            return out

        def _solve(vid):
            lv = yield from level_of(vid)
            if lv > k:
                return "X"
            if lv == 1 and base_solve is not None:
                return (yield from base_solve(sc, vid, n, budget))
            comp, cycle = yield from discover(vid, lv, budget + 1)
            if comp is not None and len(comp) <= budget:
                if cycle:
                    u0 = min(comp)
                else:
                    u0 = comp[-1]
                return _color_or_R(sc.label[u0])
            if lv == 1:
                return "D"

            def rc_settled(xid):
                if not sc.waypoint(xid, threshold):
                    return False
                rc = yield from sc.mutual_child(xid, "right_child")
                if rc is None:
                    return False
                return (yield from solve(rc)) != "D"

            if (yield from rc_settled(vid)):
                return "X"
            # walk down to the nearest settled waypoint or the component leaf
            u, above_u, su, kind_u = vid, None, 0, None
            while True:
                if u != vid and (yield from rc_settled(u)):
                    kind_u = "exempt"
                    break
                nxt = yield from slc_next(u, lv)
                if nxt is None:
                    kind_u = "leaf"
                    break
                if su >= budget + 1:
                    kind_u = "none"
                    break
                above_u, u, su = u, nxt, su + 1
                if u == vid:
                    kind_u = "none"
                    break
            # and up to the nearest settled waypoint or the component root
            w, sw, kind_w = vid, 0, None
            while True:
                if w != vid and (yield from rc_settled(w)):
                    kind_w = "exempt"
                    break
                prv = yield from slc_prev(w, lv)
                if prv is None:
                    kind_w = "root"
                    break
                if sw >= budget + 1:
                    kind_w = "none"
                    break
                w, sw = prv, sw + 1
                if w == vid:
                    kind_w = "none"
                    break
            if kind_u in ("exempt", "leaf") and kind_w in ("exempt", "root") \
                    and su + sw <= budget:
                anchor = above_u if kind_u == "exempt" else u
                return _color_or_R(sc.label[anchor])
            return "D"

        return (yield from solve(view.id))

    return logic


def recursive_hthc_solver(cfg: SolverConfig) -> Solver:
    from . import fastlane
    logic = _leveled_logic(cfg, sampled=False)
    return Solver("recursive-hthc", lambda: GeneratorAlgorithm(logic),
                  deterministic=True,
                  batch_run=lambda g, lab, seed: fastlane.leveled_batch(
                      g, lab, seed, cfg, sampled=False))


def sampled_hthc_solver(cfg: SolverConfig) -> Solver:
    from . import fastlane
    logic = _leveled_logic(cfg, sampled=True)
    return Solver("sampled-hthc", lambda: GeneratorAlgorithm(logic),
                  batch_run=lambda g, lab, seed: fastlane.leveled_batch(
                      g, lab, seed, cfg, sampled=True))


# ---------------------------------------------------------------------------
# Hybrid solvers: balanced-tree components under a leveled coloring
# ---------------------------------------------------------------------------

def _keep_level1(label: NodeLabel) -> bool:
    return label.level_in == 1


def hybrid_dist_solver(cfg: SolverConfig) -> Solver:
    """Every node at level >= 2 is exempt; level-1 components are solved as
    balanced-tree instances induced on level-1 nodes."""

    def logic(view, n, max_degree):
        lv = view.label.level_in
        if lv is None or lv >= 2:
            return "X"
        sc = Scout(view, n, max_degree, keep=_keep_level1)
        return (yield from _btl_answer(sc, view.id, n))

    return Solver("hybrid-dist", lambda: GeneratorAlgorithm(logic),
                  deterministic=True)


def _gather_level1_component(sc: Scout, start: int, cap: int):
    """BFS over mutual parent/child links inside the level-1 restriction;
    None when the component exceeds cap vertices."""
    comp = [start]
    seen = {start}
    i = 0
    while i < len(comp):
        vid = comp[i]
        i += 1
        nbrs = []
        for field in ("left_child", "right_child"):
            c = yield from sc.mutual_child(vid, field)
            if c is not None:
                nbrs.append(c)
        p = yield from _mutual_parent(sc, vid)
        if p is not None:
            nbrs.append(p)
        for u in nbrs:
            if u not in seen:
                seen.add(u)
                comp.append(u)
                if len(comp) > cap:
                    return None
    return comp


def _mutual_parent(sc: Scout, vid: int):
    port = sc.ptr(vid, "parent")
    if port is None:
        return None
    pid = yield from sc.fetch(vid, port)
    if sc._dropped(pid):
        return None
    back = sc.adj[(vid, port)][1]
    if sc.ptr(pid, "left_child") == back or sc.ptr(pid, "right_child") == back:
        return pid
    return None


def hybrid_vol_solver(cfg: SolverConfig) -> Solver:
    """Sampled leveled solver whose level-1 rule settles small balanced-tree
    components outright and declines the rest unanimously."""

    def settle_level1(view_or_sc, vid, n, max_degree, budget):
        # fresh restricted scout: level-1 work must not cross level edges
        sc = Scout(view_or_sc.views[vid] if isinstance(view_or_sc, Scout)
                   else view_or_sc, n, max_degree, keep=_keep_level1)
        comp = yield from _gather_level1_component(sc, vid, budget)
        if comp is None:
            return "D"
        return (yield from _btl_answer(sc, vid, n))

    def base_solve(sc: Scout, vid: int, n: int, budget: int):
        return (yield from settle_level1(sc, vid, n, sc.max_degree, budget))

    logic = _leveled_logic(cfg, sampled=True, level_source="input",
                           base_solve=base_solve)

    def dispatch(view, n, max_degree):
        lv = view.label.level_in
        if lv is not None and lv == 1:
            return (yield from settle_level1(view, view.id, n, max_degree,
                                             2 * ceil_root(n, cfg.k)))
        return (yield from logic(view, n, max_degree))

    return Solver("hybrid-vol", lambda: GeneratorAlgorithm(dispatch))


def hh_solver(cfg: SolverConfig) -> Solver:
    """Dispatch on the selector bit: bit 0 solves the leveled coloring with
    the l rules (computed levels), bit 1 the hybrid problem with the k rules,
    each inside its own induced subgraph."""

    def logic(view, n, max_degree):
        bit = view.label.selector_bit
        if bit == 0:
            inner = _leveled_logic(cfg, sampled=False, k_param="l",
                                   keep=lambda l: l.selector_bit == 0)
            return (yield from inner(view, n, max_degree))
        if bit == 1:
            lv = view.label.level_in
            if lv is None or lv >= 2:
                return "X"
            sc = Scout(view, n, max_degree,
                       keep=lambda l: l.selector_bit == 1 and l.level_in == 1)
            return (yield from _btl_answer(sc, view.id, n))
        return "X"

    return Solver("hh", lambda: GeneratorAlgorithm(logic), deterministic=True)


# ---------------------------------------------------------------------------
# Strawman algorithms (lower-bound test subjects)
# ---------------------------------------------------------------------------

def left_walker_solver(step_cap: int | None = None) -> Solver:
    """Blindly follows left-child pointers for about log n steps and echoes
    the color where it stops."""

    def logic(view, n, max_degree):
        sc = Scout(view, n, max_degree)
        cur = view.id
        cap = step_cap if step_cap is not None else log2_ceil(n) + 1
        for _ in range(cap):
            port = sc.ptr(cur, "left_child")
            if port is None:
                break
            cur = yield from sc.fetch(cur, port)
        return _color_or_R(sc.label[cur])

    return Solver("left-walker", lambda: GeneratorAlgorithm(logic),
                  deterministic=True)


def bfs_budget_solver(query_budget: int) -> Solver:
    """Gathers a ball until its query budget runs out, then echoes the color
    of the first childless node seen (or R)."""

    def logic(view, n, max_degree):
        sc = Scout(view, n, max_degree)
        frontier = [view.id]
        seen = {view.id}
        spent = 0
        answer = None
        while frontier and spent < query_budget:
            nxt = []
            for wid in frontier:
                if sc.ptr(wid, "left_child") is None and sc.ptr(wid, "right_child") is None:
                    answer = answer or _color_or_R(sc.label[wid])
                for port in range(1, sc.deg[wid] + 1):
                    if spent >= query_budget:
                        break
                    uid = yield from sc.fetch(wid, port)
                    spent += 1
                    if uid not in seen:
                        seen.add(uid)
                        nxt.append(uid)
            frontier = nxt
        return answer or "R"

    return Solver("bfs-budget", lambda: GeneratorAlgorithm(logic),
                  deterministic=True)


def greedy_id_solver(step_cap: int | None = None) -> Solver:
    """Repeatedly hops to the smallest-id unvisited neighbor."""

    def logic(view, n, max_degree):
        sc = Scout(view, n, max_degree)
        cur = view.id
        seen = {cur}
        cap = step_cap if step_cap is not None else 2 * log2_ceil(n)
        for _ in range(cap):
            nbrs = []
            for port in range(1, sc.deg[cur] + 1):
                uid = yield from sc.fetch(cur, port)
                if uid not in seen:
                    nbrs.append(uid)
            if not nbrs:
                break
            cur = min(nbrs)
            seen.add(cur)
        return _color_or_R(sc.label[cur])

    return Solver("greedy-id", lambda: GeneratorAlgorithm(logic),
                  deterministic=True)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def make_solver(name: str, cfg: SolverConfig | None = None) -> Solver:
    cfg = cfg or SolverConfig()
    table = {
        "leafcolor-dist": lambda: leafcolor_dist_solver(),
        "rw-to-leaf": lambda: rw_to_leaf_solver(cfg),
        "btl-dist": lambda: btl_dist_solver(),
        "recursive-hthc": lambda: recursive_hthc_solver(cfg),
        "sampled-hthc": lambda: sampled_hthc_solver(cfg),
        "hybrid-dist": lambda: hybrid_dist_solver(cfg),
        "hybrid-vol": lambda: hybrid_vol_solver(cfg),
        "hh": lambda: hh_solver(cfg),
        "left-walker": lambda: left_walker_solver(),
        "bfs-budget": lambda: bfs_budget_solver(64),
        "greedy-id": lambda: greedy_id_solver(),
    }
    if name not in table:
        raise KeyError(f"unknown solver {name!r}")
    return table[name]()


SOLVER_NAMES = ("leafcolor-dist", "rw-to-leaf", "btl-dist", "recursive-hthc",
                "sampled-hthc", "hybrid-dist", "hybrid-vol", "hh",
                "left-walker", "bfs-budget", "greedy-id")
