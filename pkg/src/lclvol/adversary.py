"""Adaptive lower-bound processes against deterministic algorithms.

Each adversary materializes an instance lazily while simulating executions of
the algorithm under attack, then completes every dangling port so that the
recorded interaction replays bit-for-bit on the finished static instance.
A success transcript carries a validator verdict proving the algorithm's
outputs invalid; if the algorithm out-explores the query budget the transcript
reports resistance instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .generators import log2_ceil
from .graph import Instance, NodeLabel, build_graph
from .probe import (ProbeContractError, Query, QueryResponse, Solver,
                    VertexView, run_all, run_execution)
from .problems import Verdict, validate_hthc, validate_leaf_coloring


class BudgetExhausted(Exception):
    pass


@dataclass
class AdversaryTranscript:
    problem: str
    success: bool
    reason: str
    budget: int
    queries_used: int            # max queries over the simulated executions
    materialized: int            # nodes created through interaction + traps
    instance: Instance | None
    sim_outputs: list[tuple[int, str]]  # (start vertex, recorded output)
    verdict: Verdict | None
    interaction_log: list[str] = field(default_factory=list)
    k: int | None = None         # level parameter for the leveled problem

    @property
    def n(self) -> int:
        return self.instance.graph.n if self.instance else 0

    def transcript_text(self) -> str:
        head = [f"problem {self.problem}", f"budget {self.budget}",
                f"success {int(self.success)} reason {self.reason}"]
        return "\n".join(head + self.interaction_log) + "\n"


class _Materializer:
    """Grows a port graph on demand; serial ids double as vertex indexes."""

    def __init__(self, n_decl: int, max_degree: int):
        self.n_decl = n_decl
        self.max_degree = max_degree
        self.deg: list[int] = []
        self.label: list[NodeLabel] = []
        self.color: list[str] = []
        self.level: list[int] = []
        self.ports: list[dict[int, tuple[int, int]]] = []
        self.log: list[str] = []

    def new_node(self, deg: int, label: NodeLabel, color: str, level: int = 1) -> int:
        self.deg.append(deg)
        self.label.append(label)
        self.color.append(color)
        self.level.append(level)
        self.ports.append({})
        return len(self.deg) - 1

    def connect(self, u: int, pu: int, v: int, pv: int) -> None:
        assert pu not in self.ports[u] and pv not in self.ports[v]
        self.ports[u][pu] = (v, pv)
        self.ports[v][pv] = (u, pu)

    def view(self, v: int) -> VertexView:
        from dataclasses import replace
        return VertexView(v, self.deg[v],
                          replace(self.label[v], input_color=self.color[v]),
                          seed=None, forbid_randomness=True)

    def unassigned(self, v: int) -> list[int]:
        return [p for p in range(1, self.deg[v] + 1) if p not in self.ports[v]]

    def to_instance(self, pad_to: int | None = None) -> Instance:
        assert all(not self.unassigned(v) for v in range(len(self.deg)))
        if pad_to is not None:
            while len(self.deg) < pad_to:
                self.new_node(0, NodeLabel(), "R")
        edges = []
        for u in range(len(self.deg)):
            for pu, (v, pv) in self.ports[u].items():
                if u < v:
                    edges.append((u, v, pu, pv))
        from dataclasses import replace
        labels = [replace(self.label[v], input_color=self.color[v])
                  for v in range(len(self.deg))]
        g = build_graph(edges, list(range(len(self.deg))),
                        max_degree=self.max_degree)
        return Instance(graph=g, labeling=labels)


def _simulate(mat: _Materializer, solver: Solver, start: int, budget: int,
              materialize_port) -> tuple[str, int]:
    """Drive one execution against the lazy instance.

    materialize_port(v, port) -> (neighbor, back_port) is called for ports
    that do not exist yet; it must extend the materializer consistently.
    """
    alg = solver.new()
    visited = {start}
    mat.log.append(f"sim start {start}")
    action = alg.init(mat.view(start), mat.n_decl, mat.max_degree)
    queries = 0
    while isinstance(action, Query):
        v = action.target
        if v not in visited:
            raise ProbeContractError(f"query of unvisited vertex {v}")
        if not (1 <= action.port <= mat.deg[v]):
            raise ProbeContractError(f"port {action.port} out of range at {v}")
        queries += 1
        if queries > budget:
            raise BudgetExhausted()
        if action.port in mat.ports[v]:
            u, back = mat.ports[v][action.port]
        else:
            u, back = materialize_port(v, action.port)
        visited.add(u)
        mat.log.append(f"{queries} query({v}, {action.port}) -> {u}")
        action = alg.on_response(QueryResponse(mat.view(u), back, v, action.port))
    mat.log.append(f"sim halt {start} -> {action.output}")
    return action.output, queries


# ---------------------------------------------------------------------------
# Leaf coloring: never let the algorithm see a leaf, then color them against it
# ---------------------------------------------------------------------------

def leafcolor_adversary(solver: Solver, budget: int) -> AdversaryTranscript:
    n_decl = 3 * budget + 3
    mat = _Materializer(n_decl, max_degree=3)
    v0 = mat.new_node(2, NodeLabel(left_child=1, right_child=2), "R")

    def materialize_port(v, port):
        # parent ports are always assigned at creation, so this is a child
        u = mat.new_node(3, NodeLabel(parent=1, left_child=2, right_child=3), "R")
        mat.connect(v, port, u, 1)
        return u, 1

    try:
        out, queries = _simulate(mat, solver, v0, budget, materialize_port)
    except BudgetExhausted:
        return AdversaryTranscript(
            problem="leafcolor", success=False,
            reason="budget exhausted, no counterexample", budget=budget,
            queries_used=budget + 1, materialized=len(mat.deg), instance=None,
            sim_outputs=[], verdict=None, interaction_log=mat.log)

    chi0 = out if out in ("R", "B") else "R"
    chi1 = "B" if chi0 == "R" else "R"
    materialized = len(mat.deg)
    for v in range(materialized):
        for port in mat.unassigned(v):
            leaf = mat.new_node(1, NodeLabel(parent=1), chi1)
            mat.connect(v, port, leaf, 1)
    trapped = len(mat.deg)
    inst = mat.to_instance(pad_to=n_decl)
    outputs, _ = run_all(inst.graph, inst.labeling, solver, seed=None)
    verdict = validate_leaf_coloring(inst.graph, inst.labeling, outputs)
    return AdversaryTranscript(
        problem="leafcolor", success=not verdict.valid,
        reason="counterexample" if not verdict.valid else
               "algorithm answered consistently",
        budget=budget, queries_used=queries, materialized=trapped,
        instance=inst, sim_outputs=[(v0, out)], verdict=verdict,
        interaction_log=mat.log)


# ---------------------------------------------------------------------------
# Leveled coloring: phases from the top level down, with binary search for an
# exempt node between conflicting unanimous components
# ---------------------------------------------------------------------------

def _hthc_decl_size(k: int, budget: int) -> int:
    sims = k * (log2_ceil(budget + 2) + 5) + 2
    per_sim = budget + 2
    return (1 + 3 * k) * (sims * per_sim + 2 * k + 2)


def hthc_adversary(solver: Solver, k: int, budget: int) -> AdversaryTranscript:
    if k < 2:
        raise ValueError("the leveled adversary needs k >= 2")
    n_decl = _hthc_decl_size(k, budget)
    mat = _Materializer(n_decl, max_degree=3)
    sim_outputs: list[tuple[int, str]] = []
    max_queries = 0

    def node_for_level(level: int, color: str) -> int:
        if level >= 2:
            return mat.new_node(3, NodeLabel(parent=1, left_child=2,
                                             right_child=3), color, level)
        return mat.new_node(2, NodeLabel(parent=1, left_child=2), color, 1)

    def materialize_port(v, port):
        color = mat.color[v]
        level = mat.level[v]
        if port == 1:  # parent: extend upward along a same-level left edge
            p = node_for_level(level, color)
            # the new parent's left-child port is 2 (its port 1 is its parent)
            mat.connect(v, 1, p, 2)
            return p, 2
        if port == 2:  # left child: same level
            u = node_for_level(level, color)
            mat.connect(v, 2, u, 1)
            return u, 1
        # port 3: right child one level down (only level >= 2 nodes have it)
        u = node_for_level(level - 1, color)
        mat.connect(v, 3, u, 1)
        return u, 1

    def sim(start):
        nonlocal max_queries
        out, q = _simulate(mat, solver, start, budget, materialize_port)
        max_queries = max(max_queries, q)
        sim_outputs.append((start, out))
        return out

    def highest_ancestor(v):
        while 1 in mat.ports[v]:
            v = mat.ports[v][1][0]
        return v

    def leftmost_descendant(v):
        while 2 in mat.ports[v]:
            v = mat.ports[v][2][0]
        return v

    def rc_of(v):
        if 3 in mat.ports[v]:
            return mat.ports[v][3][0]
        u, _ = materialize_port(v, 3)
        return u

    def chain_down(top, bottom):
        path = [top]
        while path[-1] != bottom:
            path.append(mat.ports[path[-1]][2][0])
        return path

    def finish(reason):
        # close every dangling port with a minimal gadget of the right level;
        # the port's role comes from the node's own label
        def close(v):
            for port in mat.unassigned(v):
                l = mat.label[v]
                if port == l.parent:
                    # component root gains a parentless node one left-edge up
                    lvl = mat.level[v]
                    deg = 2 if lvl >= 2 else 1
                    p = mat.new_node(deg, NodeLabel(left_child=1,
                                                    right_child=2 if lvl >= 2 else None),
                                     mat.color[v], lvl)
                    mat.connect(v, port, p, 1)
                    close(p)
                else:
                    lvl = mat.level[v] if port == l.left_child else mat.level[v] - 1
                    deg = 2 if lvl >= 2 else 1
                    u = mat.new_node(deg, NodeLabel(parent=1,
                                                    right_child=2 if lvl >= 2 else None),
                                     mat.color[v], lvl)
                    mat.connect(v, port, u, 1)
                    close(u)

        for v in range(len(mat.deg)):  # close() itself closes what it adds
            close(v)
        trapped = len(mat.deg)
        inst = mat.to_instance(pad_to=n_decl)
        outputs, _ = run_all(inst.graph, inst.labeling, solver, seed=None)
        verdict = validate_hthc(inst.graph, inst.labeling, outputs, k)
        return AdversaryTranscript(
            problem="hthc", success=not verdict.valid,
            reason=reason if not verdict.valid else "algorithm resisted the trap",
            budget=budget, queries_used=max_queries, materialized=trapped,
            instance=inst, sim_outputs=sim_outputs, verdict=verdict,
            interaction_log=mat.log, k=k)

    def resisted():
        return AdversaryTranscript(
            problem="hthc", success=False,
            reason="budget exhausted, no counterexample", budget=budget,
            queries_used=budget + 1, materialized=len(mat.deg), instance=None,
            sim_outputs=sim_outputs, verdict=None, interaction_log=mat.log, k=k)

    def binary_search(path, lo, hi, lo_sym, hi_syms, level):
        """path[lo] output lo_sym, path[hi] output in hi_syms; find an exempt
        node or stop at an adjacent conflict (a guaranteed local violation)."""
        while hi - lo > 1:
            mid = (lo + hi) // 2
            out = sim(path[mid])
            if out == "X":
                return path[mid]
            if out == lo_sym:
                lo = mid
            elif out in hi_syms:
                hi = mid
            else:
                return None  # an output outside the forced set: finish now
        return None

    try:
        # phase k, subphase 1: a unanimous blue component
        v_b = node_for_level(k, "B")
        out_b = sim(v_b)
        if out_b == "X":
            v_next = rc_of(v_b)
        elif out_b != "B":
            return finish(f"level-{k} output {out_b} against a blue component")
        else:
            # subphase 2: a unanimous red component, then splice
            v_r = node_for_level(k, "R")
            out_r = sim(v_r)
            if out_r == "X":
                v_next = rc_of(v_r)
            elif out_r != "R":
                return finish(f"level-{k} output {out_r} against a red component")
            else:
                u_b = highest_ancestor(v_b)
                w_r = leftmost_descendant(v_r)
                mat.connect(u_b, 1, w_r, 2)
                mat.log.append(f"splice {w_r} over {u_b}")
                path = chain_down(v_r, v_b)
                found = binary_search(path, 0, len(path) - 1, "R", ("B",), k)
                if found is None:
                    return finish("adjacent level-k conflict on the spliced path")
                v_next = rc_of(found)

        # phases k-1 .. 2
        for level in range(k - 1, 1, -1):
            chi = mat.color[v_next]
            bar = "B" if chi == "R" else "R"
            out = sim(v_next)
            if out == "X":
                v_next = rc_of(v_next)
                continue
            if out != chi:
                return finish(f"level-{level} output {out} under an exempt parent")
            v_prime = node_for_level(level, bar)
            out_p = sim(v_prime)
            if out_p == "X":
                v_next = rc_of(v_prime)
                continue
            if out_p not in (bar, "D"):
                return finish(f"level-{level} output {out_p} against a {bar} component")
            d = leftmost_descendant(v_next)
            h = highest_ancestor(v_prime)
            mat.connect(d, 2, h, 1)
            mat.log.append(f"splice {h} under {d}")
            path = chain_down(v_next, v_prime)
            found = binary_search(path, 0, len(path) - 1, chi, (bar, "D"), level)
            if found is None:
                return finish(f"adjacent level-{level} conflict on the spliced path")
            v_next = rc_of(found)

        # phase 1: the final trap
        v1 = v_next
        chi = mat.color[v1]
        bar = "B" if chi == "R" else "R"
        out1 = sim(v1)
        if out1 != chi:
            return finish(f"level-1 output {out1} under an exempt parent")
        low = leftmost_descendant(v1)
        trap = mat.new_node(1, NodeLabel(parent=1), bar, 1)
        mat.connect(low, 2, trap, 1)
        mat.log.append(f"trap leaf {trap} below {low}")
        return finish("level-1 run pinned between conflicting anchors")
    except BudgetExhausted:
        return resisted()


def replay_transcript(solver: Solver, t: AdversaryTranscript) -> Verdict:
    """Re-run the attacked algorithm on the completed static instance and
    re-validate; the recorded interaction must reproduce exactly."""
    if t.instance is None:
        raise ValueError("transcript has no counterexample instance")
    g, lab = t.instance.graph, t.instance.labeling
    for start, recorded in t.sim_outputs:
        out, _, _ = run_execution(g, lab, solver.new(), start, seed=None)
        if out != recorded:
            raise AssertionError(
                f"replay diverged at start {start}: {out} != {recorded}")
    outputs, _ = run_all(g, lab, solver, seed=None)
    if t.problem == "leafcolor":
        verdict = validate_leaf_coloring(g, lab, outputs)
    else:
        verdict = validate_hthc(g, lab, outputs, t.k)
    if verdict.valid != t.verdict.valid:
        raise AssertionError("replayed verdict diverged from the recorded one")
    return verdict
