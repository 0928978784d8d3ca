"""Probe-model execution engine.

An algorithm explores the graph one adaptive query at a time, starting from a
single vertex.  A query names an already-visited vertex and one of its ports;
the response reveals the neighbor's identity, degree, full input label, the
reciprocal port of the traversed edge, and read access to the neighbor's
random stream.  Costs:

* distance — max graph distance from the start to any visited vertex,
* volume   — number of distinct visited vertices,

plus probe and random-bit counts.  Per-vertex random streams are a pure
function of (seed, vertex id), so all executions under one seed observe the
same bits at the same vertex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

from .graph import Labeling, NodeLabel, PortedGraph, bfs_distances

_M64 = (1 << 64) - 1
_C1 = 0x9E3779B97F4A7C15
_C2 = 0xBF58476D1CE4E5B9
_C3 = 0x94D049BB133111EB
_CS = 0xD1342543DE82EF95
_C0 = 0x632BE59BD9B4E019


def mix64(x: int) -> int:
    x &= _M64
    x ^= x >> 30
    x = (x * _C2) & _M64
    x ^= x >> 27
    x = (x * _C3) & _M64
    x ^= x >> 31
    return x


def stream_block(seed: int, node_id: int, index: int) -> int:
    """64-bit block `index` of the random stream of the node with this id."""
    base = (seed * _CS + node_id * _C1 + index * _C2 + _C0) & _M64
    return mix64(base)


class RandomnessForbiddenError(RuntimeError):
    """Raised when a supposedly deterministic algorithm reads random bits."""


class ProbeContractError(RuntimeError):
    """The algorithm queried an unvisited vertex or an invalid port."""


class RunawayError(RuntimeError):
    """The execution exceeded its step budget."""


class CostModelViolation(AssertionError):
    """dist <= vol <= max_degree**dist + 1 failed for a completed run."""


class VertexView:
    """What a single execution knows about one visited vertex.

    Static contents (id, degree, label) never change.  Random bits are read
    sequentially in 64-bit blocks through next_block(); bits_consumed tracks
    the high-water mark for this execution.
    """

    __slots__ = ("id", "degree", "label", "_seed", "_cursor", "_forbid")

    def __init__(self, vid: int, degree: int, label: NodeLabel, seed: int | None,
                 forbid_randomness: bool = False):
        self.id = vid
        self.degree = degree
        self.label = label
        self._seed = seed
        self._cursor = 0
        self._forbid = forbid_randomness

    def next_block(self) -> int:
        if self._forbid or self._seed is None:
            raise RandomnessForbiddenError(
                f"deterministic run read random bits at vertex {self.id}")
        block = stream_block(self._seed, self.id, self._cursor)
        self._cursor += 1
        return block

    @property
    def bits_consumed(self) -> int:
        return 64 * self._cursor


@dataclass(frozen=True)
class Query:
    target: int  # id of an already-visited vertex
    port: int


@dataclass(frozen=True)
class Halt:
    output: str
    truncated: bool = False


Action = Query | Halt


@dataclass(frozen=True)
class QueryResponse:
    view: VertexView      # view of the revealed vertex
    back_port: int        # the revealed vertex's port for the traversed edge
    source: int           # id the query was addressed to
    port: int             # port that was queried


class ProbeAlgorithm(Protocol):
    def init(self, view: VertexView, n: int, max_degree: int) -> Action: ...
    def on_response(self, resp: QueryResponse) -> Action: ...


class GeneratorAlgorithm:
    """Adapter running algorithm logic written as a generator.

    The generator receives (start view, n, max_degree), yields Query objects,
    is sent the QueryResponse for each, and returns the output string (or a
    Halt for flagged outputs such as truncations).
    """

    def __init__(self, logic: Callable):
        self._logic = logic
        self._gen = None

    def init(self, view: VertexView, n: int, max_degree: int) -> Action:
        self._gen = self._logic(view, n, max_degree)
        return self._advance(lambda: next(self._gen))

    def on_response(self, resp: QueryResponse) -> Action:
        return self._advance(lambda: self._gen.send(resp))

    @staticmethod
    def _advance(step) -> Action:
        try:
            q = step()
        except StopIteration as stop:
            out = stop.value
            if isinstance(out, Halt):
                return out
            if not isinstance(out, str):
                raise ProbeContractError(f"algorithm produced no output ({out!r})")
            return Halt(out)
        if not isinstance(q, Query):
            raise ProbeContractError(f"algorithm yielded {q!r}, expected Query")
        return q


@dataclass
class Execution:
    start: int                       # vertex index
    visit_order: list[int]           # vertex indexes, start first
    query_log: list[tuple[int, int, int]]  # (source id, port, revealed id)
    bits_by_vertex: dict[int, int]   # id -> bits consumed
    output: str = ""

    def transcript(self) -> str:
        lines = [f"start {self.start}"]
        for i, (src, port, rev) in enumerate(self.query_log, start=1):
            lines.append(f"{i} query({src}, {port}) -> {rev}")
        lines.append(f"halt {self.output}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CostRecord:
    dist: int
    vol: int
    probes: int
    random_bits: int
    truncated: bool = False

    def check(self, max_degree: int) -> None:
        if self.dist > self.vol:
            raise CostModelViolation(
                f"dist={self.dist} > vol={self.vol}")
        # vol <= max_degree**dist + 1; skip the big power once it cannot bind
        if self.dist < 64 and self.vol > max_degree ** self.dist + 1:
            raise CostModelViolation(
                f"vol={self.vol} > {max_degree}**{self.dist} + 1")
        if self.probes < self.vol - 1:
            raise CostModelViolation(f"probes={self.probes} < vol-1={self.vol - 1}")


def dist_of(g: PortedGraph, exec_: Execution) -> int:
    """Max graph distance from the start to any visited vertex."""
    visited = set(exec_.visit_order)
    dist = bfs_distances(g, exec_.start, targets=visited)
    return max(dist[v] for v in visited)


def vol_of(exec_: Execution) -> int:
    return len(set(exec_.visit_order))


def run_execution(
    g: PortedGraph,
    lab: Labeling,
    alg: ProbeAlgorithm,
    start: int,
    seed: int | None,
    step_budget: int | None = None,
    forbid_randomness: bool = False,
) -> tuple[str, CostRecord, Execution]:
    """Run one probe algorithm from `start` until it halts.

    seed=None (or forbid_randomness) makes any random read an error, which is
    how deterministic algorithms are enforced.
    """
    budget = step_budget if step_budget is not None else g.n * g.max_degree + 1
    views: dict[int, VertexView] = {}

    def view_of(v: int) -> VertexView:
        if v not in views:
            views[v] = VertexView(g.ids[v], g.degree(v), lab[v], seed,
                                  forbid_randomness=forbid_randomness)
        return views[v]

    exec_ = Execution(start=start, visit_order=[start], query_log=[],
                      bits_by_vertex={})
    visited_ids = {g.ids[start]: start}
    action = alg.init(view_of(start), g.n, g.max_degree)
    steps = 0
    while isinstance(action, Query):
        if action.target not in visited_ids:
            raise ProbeContractError(
                f"query of unvisited vertex id {action.target}")
        w = visited_ids[action.target]
        if not g.has_port(w, action.port):
            raise ProbeContractError(
                f"port {action.port} out of range at vertex id {action.target}")
        steps += 1
        if steps > budget:
            raise RunawayError(f"step budget {budget} exceeded at start {start}")
        u, back = g.neighbor(w, action.port)
        if g.ids[u] not in visited_ids:
            visited_ids[g.ids[u]] = u
            exec_.visit_order.append(u)
        exec_.query_log.append((action.target, action.port, g.ids[u]))
        action = alg.on_response(QueryResponse(view=view_of(u), back_port=back,
                                               source=action.target,
                                               port=action.port))
    exec_.output = action.output
    exec_.bits_by_vertex = {vw.id: vw.bits_consumed for vw in views.values()
                            if vw.bits_consumed}
    cost = CostRecord(
        dist=dist_of(g, exec_),
        vol=vol_of(exec_),
        probes=steps,
        random_bits=sum(exec_.bits_by_vertex.values()),
        truncated=action.truncated,
    )
    cost.check(g.max_degree)
    return action.output, cost, exec_


class Solver:
    """Named factory producing one fresh ProbeAlgorithm per execution.

    `batch_run`, when set, is an exact whole-instance evaluator returning the
    same outputs and cost records run_execution would; it exists so large
    sweeps stay tractable and is equivalence-tested against the engine.
    """

    def __init__(self, name: str, make: Callable[[], ProbeAlgorithm],
                 deterministic: bool = False,
                 batch_run: Callable | None = None):
        self.name = name
        self.make = make
        self.deterministic = deterministic
        self.batch_run = batch_run

    def new(self) -> ProbeAlgorithm:
        return self.make()


def run_all(
    g: PortedGraph,
    lab: Labeling,
    solver: Solver,
    seed: int | None,
    use_batch: bool = True,
    step_budget: int | None = None,
) -> tuple[list[str], list[CostRecord]]:
    """Run the solver from every vertex under one seed.

    Identical inputs give bit-identical outputs and costs.  Errors are
    re-raised with the failing start vertex attached.
    """
    if use_batch and solver.batch_run is not None:
        outputs, costs = solver.batch_run(g, lab, seed)
        for c in costs:
            c.check(g.max_degree)
        return outputs, costs
    outputs: list[str] = []
    costs: list[CostRecord] = []
    for v in range(g.n):
        try:
            out, cost, _ = run_execution(g, lab, solver.new(), v, seed,
                                         step_budget=step_budget)
        except (ProbeContractError, RunawayError) as err:
            raise type(err)(f"start vertex {v} (id {g.ids[v]}): {err}") from err
        outputs.append(out)
        costs.append(cost)
    return outputs, costs


def aggregate_costs(costs: list[CostRecord]) -> dict[str, float]:
    n = len(costs)
    return {
        "max_dist": max(c.dist for c in costs),
        "mean_dist": sum(c.dist for c in costs) / n,
        "max_vol": max(c.vol for c in costs),
        "mean_vol": sum(c.vol for c in costs) / n,
        "truncations": sum(1 for c in costs if c.truncated),
    }


# ---------------------------------------------------------------------------
# Ball gathering: turning a distance-based rule into a probe algorithm
# ---------------------------------------------------------------------------

@dataclass
class Ball:
    """Radius-T view gathered around a start vertex."""

    start: int                                  # id
    radius: int
    n: int
    max_degree: int
    depth: dict[int, int]                       # id -> distance from start
    degree: dict[int, int]
    label: dict[int, NodeLabel]
    adj: dict[tuple[int, int], tuple[int, int]]  # (id, port) -> (id, back port)


def simulate_distance_algorithm(dist_rule: Callable[[Ball], str], radius: int) -> Solver:
    """Probe algorithm that gathers the whole radius-`radius` ball in BFS
    order and then answers with dist_rule; vol <= max_degree**radius + 1."""

    def logic(view: VertexView, n: int, max_degree: int):
        ball = Ball(start=view.id, radius=radius, n=n, max_degree=max_degree,
                    depth={view.id: 0}, degree={view.id: view.degree},
                    label={view.id: view.label}, adj={})
        frontier = [view.id]
        for d in range(radius):
            nxt = []
            for wid in frontier:
                for port in range(1, ball.degree[wid] + 1):
                    if (wid, port) in ball.adj:
                        continue
                    resp = yield Query(wid, port)
                    uid = resp.view.id
                    ball.adj[(wid, port)] = (uid, resp.back_port)
                    ball.adj[(uid, resp.back_port)] = (wid, port)
                    if uid not in ball.depth:
                        ball.depth[uid] = d + 1
                        ball.degree[uid] = resp.view.degree
                        ball.label[uid] = resp.view.label
                        nxt.append(uid)
            frontier = nxt
        return dist_rule(ball)

    return Solver(name=f"ball-{radius}", deterministic=True,
                  make=lambda: GeneratorAlgorithm(logic))


def gather_ball(g: PortedGraph, lab: Labeling, start: int, radius: int) -> Ball:
    """Reference ball construction straight from the instance (no probes)."""
    depth = {g.ids[start]: 0}
    degree = {g.ids[start]: g.degree(start)}
    label = {g.ids[start]: lab[start]}
    adj: dict[tuple[int, int], tuple[int, int]] = {}
    frontier = [start]
    for d in range(radius):
        nxt = []
        for w in frontier:
            for port, (u, back) in sorted(g.ports[w].items()):
                adj[(g.ids[w], port)] = (g.ids[u], back)
                adj[(g.ids[u], back)] = (g.ids[w], port)
                if g.ids[u] not in depth:
                    depth[g.ids[u]] = d + 1
                    degree[g.ids[u]] = g.degree(u)
                    label[g.ids[u]] = lab[u]
                    nxt.append(u)
        frontier = nxt
    return Ball(start=g.ids[start], radius=radius, n=g.n, max_degree=g.max_degree,
                depth=depth, degree=degree, label=label, adj=adj)
