"""Machine/round simulation of probe algorithms.

One machine per vertex.  All still-running executions submit their next query
in lockstep; each superstep resolves the query batch through a routing
pipeline (oracle sort, dedupe-forward, respond, doubling back-propagation,
final delivery) while a trace accounts rounds and per-machine traffic in
message units.  Supersteps with all-distinct (destination, port) pairs pass
through directly in two rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graph import Labeling, PortedGraph
from .probe import Halt, Query, QueryResponse, Solver, VertexView


class MpcBudgetError(RuntimeError):
    """Per-round traffic exceeded the configured space budget."""


@dataclass(frozen=True)
class MpcConfig:
    c: float = 0.5          # space exponent: budgets include ceil(n**c)
    space: int | None = None  # per-round send/receive budget in message units

    def budget(self, n: int, max_degree: int) -> int:
        if self.space is not None:
            return self.space
        return max(max_degree, math.ceil(n ** self.c)) + 2

    def fanout(self, n: int) -> int:
        return max(2, math.ceil(n ** self.c))

    def propagation_rounds(self) -> int:
        return math.ceil(1.0 / self.c)


@dataclass
class MpcTrace:
    rounds: int = 0
    per_round: list[dict[int, list[int]]] = field(default_factory=list)
    max_sent: int = 0
    max_received: int = 0
    peak_stored: int = 0
    budget: int = 0
    violation: str | None = None

    def open_round(self):
        self.per_round.append({})
        self.rounds += 1

    def charge_silent_rounds(self, count: int):
        for _ in range(count):
            self.open_round()

    def send(self, frm: int, to: int):
        row = self.per_round[-1]
        row.setdefault(frm, [0, 0])[0] += 1
        row.setdefault(to, [0, 0])[1] += 1

    def close_round(self):
        row = self.per_round[-1]
        for m, (s, r) in row.items():
            self.max_sent = max(self.max_sent, s)
            self.max_received = max(self.max_received, r)
            if s > self.budget or r > self.budget:
                self.violation = (f"round {self.rounds}: machine {m} "
                                  f"moved {max(s, r)} > {self.budget}")
                raise MpcBudgetError(self.violation)

    def csv(self) -> str:
        lines = ["round,machine,sent,received"]
        for rnd, row in enumerate(self.per_round, start=1):
            for m in sorted(row):
                s, r = row[m]
                lines.append(f"{rnd},{m},{s},{r}")
        return "\n".join(lines) + "\n"


def route_step(queries: list[tuple[int, int, int]], cfg: MpcConfig, n: int,
               answer, trace: MpcTrace) -> dict[int, tuple]:
    """Resolve one superstep's queries (source, dest, port) -> responses.

    answer(dest, port) supplies the revealed payload.  Returns responses per
    source and charges the pipeline's rounds and traffic to the trace.
    """
    if not queries:
        return {}
    keys = [(w, i) for (_, w, i) in queries]
    responses: dict[int, tuple] = {}
    if len(set(keys)) == len(keys):
        # pass-through: each destination answers at most max_degree queries
        trace.open_round()
        for (v, w, i) in queries:
            trace.send(v, w)
        trace.close_round()
        trace.open_round()
        for (v, w, i) in queries:
            trace.send(w, v)
            responses[v] = answer(w, i)
        trace.close_round()
        return responses

    # 1. oracle sort by (dest, port, source): query j lands on machine j
    order = sorted(range(len(queries)), key=lambda j: (queries[j][1],
                                                       queries[j][2],
                                                       queries[j][0]))
    slot_of = {order[j]: j + 1 for j in range(len(order))}
    trace.open_round()
    for j, q in enumerate(queries):
        trace.send(queries[j][0], slot_of[j])
    trace.close_round()

    sorted_q = [queries[j] for j in order]
    # 2. the last slot of each equal-(dest, port) run forwards the query
    runs: list[tuple[int, int]] = []  # (start, end) inclusive slot indexes
    start = 0
    for j in range(len(sorted_q)):
        if j + 1 == len(sorted_q) or sorted_q[j + 1][1:] != sorted_q[j][1:]:
            runs.append((start, j))
            start = j + 1
    trace.open_round()
    for (_, end) in runs:
        trace.send(end + 1, sorted_q[end][1])
    trace.close_round()
    trace.open_round()
    payload: dict[int, tuple] = {}
    for (s0, end) in runs:
        w, i = sorted_q[end][1], sorted_q[end][2]
        payload[end] = answer(w, i)
        trace.send(w, end + 1)
    trace.close_round()

    # 3. propagate responses backwards through each run with doubling fanout
    fan = cfg.fanout(n)
    covered = {end: {end} for (_, end) in runs}
    for r in range(cfg.propagation_rounds()):
        step = fan ** r
        trace.open_round()
        for (s0, end) in runs:
            got = covered[end]
            new = set()
            for j in sorted(got):
                for s in range(1, fan + 1):
                    tgt = j - step * s
                    if tgt + 1 < 1:
                        break  # clamped at machine 1
                    trace.send(j + 1, tgt + 1)
                    if tgt >= s0:
                        new.add(tgt)
            got |= new
        trace.close_round()
    for (s0, end) in runs:
        assert covered[end] >= set(range(s0, end + 1)), "propagation fell short"

    # 4. every slot returns its query's response to the source
    run_end_of = [0] * len(sorted_q)
    for (s0, end) in runs:
        for j in range(s0, end + 1):
            run_end_of[j] = end
    trace.open_round()
    for j, (v, w, i) in enumerate(sorted_q):
        responses[v] = payload[run_end_of[j]]
        trace.send(j + 1, v)
    trace.close_round()
    return responses


def mpc_simulate(g: PortedGraph, lab: Labeling, solver: Solver,
                 cfg: MpcConfig, seed: int | None):
    """Lockstep simulation of the solver from every vertex.

    Outputs are bit-identical to run_all under the same seed; the trace
    observes per-round traffic against the configured budget.
    """
    n = g.n
    trace = MpcTrace(budget=cfg.budget(n, g.max_degree))
    views: dict[tuple[int, int], VertexView] = {}
    stored_views = [0] * n

    def view_for(machine: int, v: int) -> VertexView:
        key = (machine, v)
        if key not in views:
            views[key] = VertexView(g.ids[v], g.degree(v), lab[v], seed)
            stored_views[machine] += 1
        return views[key]

    algs = [solver.new() for _ in range(n)]
    pending: dict[int, Query] = {}
    outputs: list[str | None] = [None] * n
    for v in range(n):
        action = algs[v].init(view_for(v, v), n, g.max_degree)
        if isinstance(action, Halt):
            outputs[v] = action.output
        else:
            pending[v] = action

    id_to_index = {g.ids[v]: v for v in range(n)}
    supersteps = 0
    max_steps = n * g.max_degree + 1
    while pending:
        supersteps += 1
        if supersteps > max_steps:
            raise RuntimeError("superstep budget exceeded")
        batch = []
        for v, q in sorted(pending.items()):
            w = id_to_index[q.target]
            batch.append((v, w, q.port))

        def answer(w, port):
            return g.neighbor(w, port)

        responses = route_step(batch, cfg, n, answer, trace)
        nxt: dict[int, Query] = {}
        for (v, w, port) in batch:
            u, back = responses[v]
            resp = QueryResponse(view=view_for(v, u), back_port=back,
                                 source=g.ids[w], port=port)
            action = algs[v].on_response(resp)
            if isinstance(action, Halt):
                outputs[v] = action.output
            else:
                nxt[v] = action
        pending = nxt
        stored = max(g.degree(v) + stored_views[v] for v in range(n))
        trace.peak_stored = max(trace.peak_stored, stored)

    trace.open_round()  # the final output round
    trace.close_round()
    return outputs, trace
