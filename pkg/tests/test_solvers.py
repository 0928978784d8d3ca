import itertools

import pytest

from lclvol.generators import (Builder, ceil_root, gen_complete_binary,
                               gen_disjointness_btl, gen_hh_instance,
                               gen_hier_balanced, gen_hybrid_instance,
                               gen_random_tree_labeling, log2_ceil)
from lclvol.graph import NodeClass, NodeLabel, classify_node, normalize_labeling
from lclvol.probe import run_all, run_execution
from lclvol.problems import (decode_pair, validate_balanced_tree,
                             validate_hh, validate_hthc, validate_hybrid,
                             validate_leaf_coloring)
from lclvol.solvers import (SolverConfig, btl_dist_solver, hh_solver,
                            hybrid_dist_solver, hybrid_vol_solver,
                            leafcolor_dist_solver, make_solver,
                            recursive_hthc_solver, rw_to_leaf_solver,
                            sampled_hthc_solver, waypoint_threshold)

from conftest import make_instance

CFG = SolverConfig()


def leveled_path(level_lengths, colors=None, close_top=False):
    """Hand-built leveled instance: one backbone per level, every member of a
    level >= 2 backbone carrying a full copy of the next structure down."""
    b = Builder()
    counter = itertools.count()

    def color(i):
        return colors[i % len(colors)] if colors else ("R" if i % 3 else "B")

    def build(level, close):
        length = level_lengths[level - 1]
        members = [b.add(color=color(next(counter))) for _ in range(length)]
        for up, down in zip(members, members[1:]):
            b.link(up, "lc", down, "parent")
        if close and length >= 2:
            b.link(members[-1], "lc", members[0], "parent")
        if level >= 2:
            for m in members:
                b.link(m, "rc", build(level - 1, False), "parent")
        return members[0]

    build(len(level_lengths), close_top)
    return b.build()


class TestLeafcolorDist:
    def test_leaf_echoes_immediately(self):
        inst = gen_complete_binary(3, leaf_color="B")
        g, lab = inst.graph, inst.labeling
        out, cost, _ = run_execution(g, lab, leafcolor_dist_solver().new(),
                                     g.n - 1, seed=None)
        assert out == "B"
        assert cost.vol <= 4

    def test_complete_tree_unanimous(self):
        for color in "RB":
            inst = gen_complete_binary(4, leaf_color=color)
            outs, costs = run_all(inst.graph, inst.labeling,
                                  leafcolor_dist_solver(), seed=None)
            assert set(outs) == {color}
            assert validate_leaf_coloring(inst.graph, inst.labeling, outs).valid

    def test_tie_breaks_leftmost(self):
        edges = [(0, 1, 1, 1), (0, 2, 2, 1)]
        labels = [NodeLabel(left_child=1, right_child=2, input_color="B"),
                  NodeLabel(parent=1, input_color="R"),
                  NodeLabel(parent=1, input_color="B")]
        inst = make_instance(edges, labels)
        out, _, _ = run_execution(inst.graph, inst.labeling,
                                  leafcolor_dist_solver().new(), 0, seed=None)
        assert out == "R"

    def test_valid_on_random_corpus_with_distance_ceiling(self):
        for seed in range(4):
            inst = gen_random_tree_labeling(201, 0.1, seed)
            g = inst.graph
            lab = normalize_labeling(g, inst.labeling)
            outs, costs = run_all(g, lab, leafcolor_dist_solver(), seed=None)
            assert validate_leaf_coloring(g, lab, outs).valid
            assert max(c.dist for c in costs) <= log2_ceil(g.n) + 2


class TestRwToLeaf:
    def test_start_at_leaf(self):
        inst = gen_complete_binary(2, leaf_color="B")
        g, lab = inst.graph, inst.labeling
        out, cost, _ = run_execution(g, lab, rw_to_leaf_solver(CFG).new(),
                                     g.n - 1, seed=7)
        assert out == "B"
        assert cost.vol == 1 and cost.random_bits == 0

    def test_walk_prefix_agreement(self):
        inst = gen_complete_binary(2, leaf_color="B")
        g, lab = inst.graph, inst.labeling
        outs, _ = run_all(g, lab, rw_to_leaf_solver(CFG), seed=11,
                          use_batch=False)
        # replay oracle: recompute each walk from the streams directly
        from lclvol.probe import stream_block
        for v in range(g.n):
            cur = v
            while classify_node(g, lab, cur) is NodeClass.INTERNAL:
                bit = (stream_block(11, g.ids[cur], 1) & 1)
                field = "left_child" if bit == 0 else "right_child"
                cur = g.neighbor(cur, getattr(lab[cur], field))[0]
            assert outs[v] == lab[cur].input_color

    def test_cycle_revisit_exits_via_other_child(self, pendant_cycle):
        g, lab = pendant_cycle.graph, pendant_cycle.labeling
        for seed in range(30):
            outs, costs = run_all(g, lab, rw_to_leaf_solver(CFG), seed=seed,
                                  use_batch=False)
            assert validate_leaf_coloring(g, lab, outs).valid
            assert not any(c.truncated for c in costs)

    def test_validity_over_seeds(self):
        inst = gen_random_tree_labeling(101, 0.05, 3)
        g = inst.graph
        lab = normalize_labeling(g, inst.labeling)
        for seed in range(60):
            outs, _ = run_all(g, lab, rw_to_leaf_solver(CFG), seed=seed)
            assert validate_leaf_coloring(g, lab, outs).valid

    @staticmethod
    def vine(length):
        """Spine of internal nodes, each with a pendant leaf as right child."""
        b = Builder()
        spine = [b.add(color="B") for _ in range(length + 1)]
        for i in range(length):
            b.link(spine[i], "lc", spine[i + 1], "parent")
            pendant = b.add(color="B")
            b.link(spine[i], "rc", pendant, "parent")
        return b.build()

    def test_truncation_flagged(self):
        from lclvol.probe import stream_block
        cfg = SolverConfig(tau=1)
        inst = self.vine(40)
        g, lab = inst.graph, inst.labeling
        cap = cfg.tau * log2_ceil(g.n)
        seed = next(s for s in range(5000)
                    if all(stream_block(s, g.ids[v], 1) & 1 == 0
                           for v in range(cap + 1)))
        # ids along the spine are even indexes 0, 1? spine built first; walk
        # from index 0 keeps choosing the left (spine) child
        out, cost, _ = run_execution(g, lab, rw_to_leaf_solver(cfg).new(), 0,
                                     seed=seed)
        assert cost.truncated and out == "R"
        assert cost.probes == 2 * cap
        assert cost.vol == 1 + 2 * cap and cost.dist == cap


class TestBtlDist:
    def test_compatible_leaf_settles(self):
        inst = gen_disjointness_btl([0, 0], [0, 0])
        g, lab = inst.graph, inst.labeling
        leaf = g.n - 1
        out, _, _ = run_execution(g, lab, btl_dist_solver().new(), leaf, seed=None)
        assert decode_pair(out) == ("B", lab[leaf].parent)

    def test_compatible_root_settles_with_bot_port(self):
        inst = gen_disjointness_btl([1, 0], [0, 1])
        out, _, _ = run_execution(inst.graph, inst.labeling,
                                  btl_dist_solver().new(), 0, seed=None)
        assert decode_pair(out) == ("B", None)

    def test_defective_root_points_toward_defect(self):
        inst = gen_disjointness_btl([1, 0, 0, 0], [1, 0, 0, 0])
        g, lab = inst.graph, inst.labeling
        out, _, _ = run_execution(g, lab, btl_dist_solver().new(), 0, seed=None)
        beta, port = decode_pair(out)
        assert beta == "U" and port == lab[0].left_child
        outs, costs = run_all(g, lab, btl_dist_solver(), seed=None)
        assert validate_balanced_tree(g, lab, outs).valid
        assert max(c.dist for c in costs) <= log2_ceil(g.n) + 3

    @pytest.mark.parametrize("N", [1, 2, 4])
    def test_valid_on_all_disjointness_instances(self, N):
        for bits in itertools.product([0, 1], repeat=2 * N):
            a, b = list(bits[:N]), list(bits[N:])
            inst = gen_disjointness_btl(a, b)
            outs, _ = run_all(inst.graph, inst.labeling, btl_dist_solver(),
                              seed=None)
            assert validate_balanced_tree(inst.graph, inst.labeling, outs).valid


class TestRecursiveHthc:
    def test_shallow_path_copies_leaf_input(self):
        inst = leveled_path([4], colors=["R", "B", "B", "B"])
        g, lab = inst.graph, inst.labeling
        outs, _ = run_all(g, lab, recursive_hthc_solver(SolverConfig(k=1)),
                          seed=None, use_batch=False)
        # backbone leaf is the last member; everyone copies its input color
        assert len(set(outs)) == 1
        assert validate_hthc(g, lab, outs, k=1).valid

    def test_shallow_cycle_copies_min_id(self):
        inst = gen_hier_balanced(2, 40, seed=3, cycles=True)
        g, lab = inst.graph, inst.labeling
        outs, _ = run_all(g, lab, recursive_hthc_solver(SolverConfig(k=2)),
                          seed=None, use_batch=False)
        assert validate_hthc(g, lab, outs, k=2).valid

    def test_deep_level1_declines(self):
        inst = leveled_path([40])  # single level-1 path, n=40 > 2*ceil_root(40,2)
        g, lab = inst.graph, inst.labeling
        outs, _ = run_all(g, lab, recursive_hthc_solver(SolverConfig(k=2)),
                          seed=None, use_batch=False)
        assert set(outs) == {"D"}
        assert validate_hthc(g, lab, outs, k=2).valid

    def test_deep_level2_over_light_children_never_declines(self):
        inst = leveled_path([1, 16])  # level-2 backbone of 16, singleton level-1s
        g, lab = inst.graph, inst.labeling
        k = 2
        assert 16 > 2 * ceil_root(g.n, k)
        outs, _ = run_all(g, lab, recursive_hthc_solver(SolverConfig(k=k)),
                          seed=None, use_batch=False)
        assert "D" not in outs
        assert validate_hthc(g, lab, outs, k=k).valid

    def test_mixed_deep_level2_segments(self):
        # alternate light (len-1) and heavy (len-12) level-1 subtrees below a
        # deep level-2 backbone: declined children force colored segments
        b = Builder()
        top = [b.add(color="R" if i % 2 else "B") for i in range(18)]
        for up, down in zip(top, top[1:]):
            b.link(up, "lc", down, "parent")
        for i, m in enumerate(top):
            length = 12 if i % 3 == 0 else 1
            sub = [b.add(color="B") for _ in range(length)]
            for up, down in zip(sub, sub[1:]):
                b.link(up, "lc", down, "parent")
            b.link(m, "rc", sub[0], "parent")
        inst = b.build()
        g, lab = inst.graph, inst.labeling
        k = 2
        outs, _ = run_all(g, lab, recursive_hthc_solver(SolverConfig(k=k)),
                          seed=None, use_batch=False)
        assert validate_hthc(g, lab, outs, k=k).valid, \
            validate_hthc(g, lab, outs, k=k).violations[:4]

    def test_backbone_neighbors_agree_on_depth_verdict(self):
        # members of one same-level run never mix declines with colors
        inst = leveled_path([40])
        g, lab = inst.graph, inst.labeling
        outs, _ = run_all(g, lab, recursive_hthc_solver(SolverConfig(k=2)),
                          seed=None, use_batch=False)
        for v in range(g.n):
            lc = lab[v].left_child
            if lc is None:
                continue
            w = g.neighbor(v, lc)[0]
            assert (outs[v] == "D") == (outs[w] == "D")

    def test_distance_ceiling_on_balanced(self):
        for k in (2, 3):
            inst = gen_hier_balanced(k, 150, seed=1)
            g, lab = inst.graph, inst.labeling
            outs, costs = run_all(g, lab, recursive_hthc_solver(SolverConfig(k=k)),
                                  seed=None, use_batch=False)
            assert validate_hthc(g, lab, outs, k=k).valid
            assert max(c.dist for c in costs) <= 4 * k * ceil_root(g.n, k)


class TestSampledHthc:
    def test_identical_on_shallow_instances(self):
        inst = gen_hier_balanced(2, 120, seed=2)
        g, lab = inst.graph, inst.labeling
        det, _ = run_all(g, lab, recursive_hthc_solver(SolverConfig(k=2)),
                         seed=None, use_batch=False)
        sam, _ = run_all(g, lab, sampled_hthc_solver(SolverConfig(k=2)),
                         seed=31, use_batch=False)
        assert det == sam

    def test_every_node_waypoint_matches_deterministic(self):
        inst = leveled_path([1, 16])
        g, lab = inst.graph, inst.labeling
        cfg_all = SolverConfig(k=2, c_const=10 ** 9)
        assert waypoint_threshold(g.n, 2, cfg_all.c_const) == 1 << 64
        det, _ = run_all(g, lab, recursive_hthc_solver(SolverConfig(k=2)),
                         seed=None, use_batch=False)
        sam, _ = run_all(g, lab, sampled_hthc_solver(cfg_all), seed=5,
                         use_batch=False)
        assert det == sam

    def test_real_sampling_on_deep_instance_validates(self):
        # big enough that the waypoint probability drops below 1
        b = Builder()
        top = [b.add(color="B") for _ in range(150)]
        for up, down in zip(top, top[1:]):
            b.link(up, "lc", down, "parent")
        for m in top:
            sub = [b.add(color="R") for _ in range(25)]
            for up, down in zip(sub, sub[1:]):
                b.link(up, "lc", down, "parent")
            b.link(m, "rc", sub[0], "parent")
        inst = b.build()
        g, lab = inst.graph, inst.labeling
        cfg = SolverConfig(k=2)
        p = waypoint_threshold(g.n, 2, cfg.c_const) / float(1 << 64)
        assert p < 1.0
        outs, costs = run_all(g, lab, sampled_hthc_solver(cfg), seed=17)
        assert validate_hthc(g, lab, outs, k=2).valid, \
            validate_hthc(g, lab, outs, k=2).violations[:4]
        assert any(c.random_bits for c in costs)


class TestHybridAndHHSolvers:
    def test_hybrid_dist_high_levels_exempt(self):
        inst = gen_hybrid_instance(3, 120, seed=4)
        g, lab = inst.graph, inst.labeling
        outs, _ = run_all(g, lab, hybrid_dist_solver(SolverConfig(k=3, l=3)),
                          seed=None, use_batch=False)
        for v in range(g.n):
            if lab[v].level_in >= 2:
                assert outs[v] == "X"
        assert validate_hybrid(g, lab, outs, k=3).valid, \
            validate_hybrid(g, lab, outs, k=3).violations[:4]

    def test_hybrid_dist_solves_level1(self):
        inst = gen_hybrid_instance(2, 100, seed=5)
        g, lab = inst.graph, inst.labeling
        outs, _ = run_all(g, lab, hybrid_dist_solver(SolverConfig(k=2)),
                          seed=None, use_batch=False)
        assert validate_hybrid(g, lab, outs, k=2).valid
        assert all(":" in outs[v] for v in range(g.n) if lab[v].level_in == 1)

    def test_hybrid_dist_delegates_to_btl_on_level1_subgraph(self):
        from lclvol.problems import restrict_labeling
        inst = gen_hybrid_instance(2, 80, seed=9)
        g, lab = inst.graph, inst.labeling
        hybrid_out, _ = run_all(g, lab, hybrid_dist_solver(SolverConfig(k=2)),
                                seed=None, use_batch=False)
        restricted = restrict_labeling(g, lab, [l.level_in == 1 for l in lab])
        btl_out, _ = run_all(g, restricted, btl_dist_solver(), seed=None)
        for v in range(g.n):
            if lab[v].level_in == 1:
                assert hybrid_out[v] == btl_out[v], v

    def test_hybrid_vol_small_components_settle(self):
        inst = gen_hybrid_instance(2, 100, seed=6)
        g, lab = inst.graph, inst.labeling
        outs, _ = run_all(g, lab, hybrid_vol_solver(SolverConfig(k=2)),
                          seed=23, use_batch=False)
        assert validate_hybrid(g, lab, outs, k=2).valid, \
            validate_hybrid(g, lab, outs, k=2).violations[:4]

    def test_hybrid_vol_declines_big_level1(self):
        # one giant level-1 component under a level-2 pair
        b = Builder()
        top = [b.add(color="B", level_in=2) for _ in range(2)]
        b.link(top[0], "lc", top[1], "parent")
        for m in top:
            sub = [b.add(color="R", level_in=1) for _ in range(40)]
            for up, down in zip(sub, sub[1:]):
                b.link(up, "lc", down, "parent")
            b.link(m, "rc", sub[0], "parent")
        inst = b.build()
        g, lab = inst.graph, inst.labeling
        outs, _ = run_all(g, lab, hybrid_vol_solver(SolverConfig(k=2)), seed=2,
                          use_batch=False)
        level1 = [outs[v] for v in range(g.n) if lab[v].level_in == 1]
        assert set(level1) == {"D"}
        assert validate_hybrid(g, lab, outs, k=2).valid, \
            validate_hybrid(g, lab, outs, k=2).violations[:4]

    def test_hh_dispatch(self):
        inst = gen_hh_instance(2, 2, 60, seed=7)
        g, lab = inst.graph, inst.labeling
        outs, _ = run_all(g, lab, hh_solver(SolverConfig(k=2, l=2)), seed=None,
                          use_batch=False)
        assert validate_hh(g, lab, outs, k=2, l=2).valid


# ---------------------------------------------------------------------------
# Fast-lane equivalence
# ---------------------------------------------------------------------------

def _instances_for_rw():
    out = [gen_complete_binary(d, c) for d in (0, 1, 4, 6) for c in "RB"]
    for n, p, s in [(1, 0.0, 0), (2, 0.5, 1), (23, 0.0, 2), (60, 0.2, 3),
                    (150, 0.05, 4), (150, 0.6, 5), (201, 0.1, 6)]:
        inst = gen_random_tree_labeling(n, p, s)
        inst.labeling = normalize_labeling(inst.graph, inst.labeling)
        out.append(inst)
    return out


def _instances_for_leveled():
    out = []
    for k, n, s in [(1, 16, 0), (2, 60, 1), (2, 200, 2), (3, 160, 3)]:
        out.append((k, gen_hier_balanced(k, n, seed=s)))
    out.append((2, gen_hier_balanced(2, 60, seed=4, cycles=True)))
    out.append((2, leveled_path([40])))            # deep level-1 path
    out.append((2, leveled_path([1, 16])))         # deep level-2, light subs
    out.append((2, gen_random_tree_labeling(80, 0.2, 9)))  # messy labels
    inst = gen_random_tree_labeling(60, 0.0, 10)
    out.append((3, inst))
    return out


def _same(a, b):
    return a[0] == b[0] and a[1] == b[1]


class TestFastlaneEquivalence:
    def test_rw_matches_engine(self):
        for inst in _instances_for_rw():
            g = inst.graph
            lab = normalize_labeling(g, inst.labeling)
            solver = rw_to_leaf_solver(CFG)
            for seed in (0, 7, 123):
                fast_out, fast_cost = run_all(g, lab, solver, seed=seed)
                slow_out, slow_cost = run_all(g, lab, solver, seed=seed,
                                              use_batch=False)
                assert fast_out == slow_out, (inst.meta, seed)
                assert fast_cost == slow_cost, (inst.meta, seed)

    def test_rw_truncation_matches_engine(self):
        from lclvol.probe import stream_block
        cfg = SolverConfig(tau=1)
        inst = TestRwToLeaf.vine(40)
        g, lab = inst.graph, inst.labeling
        cap = cfg.tau * log2_ceil(g.n)
        seed = next(s for s in range(5000)
                    if all(stream_block(s, g.ids[v], 1) & 1 == 0
                           for v in range(cap + 1)))
        solver = rw_to_leaf_solver(cfg)
        fast_out, fast_cost = run_all(g, lab, solver, seed=seed)
        slow_out, slow_cost = run_all(g, lab, solver, seed=seed, use_batch=False)
        assert fast_out == slow_out
        assert fast_cost == slow_cost
        assert any(c.truncated for c in fast_cost)

    def test_equivalence_with_shuffled_ids(self):
        """ids decide walk bits and cycle representatives, so an instance with
        non-monotone ids exposes any id/index mix-up in either path."""
        import random as _random
        from lclvol.graph import PortedGraph
        rng = _random.Random(5)
        for base, k in ((gen_hier_balanced(2, 80, seed=2, cycles=True), 2),
                        (gen_random_tree_labeling(90, 0.15, 4), 2)):
            g0 = base.graph
            new_ids = list(range(10, 10 + 3 * g0.n, 3))
            rng.shuffle(new_ids)
            g = PortedGraph(n=g0.n, max_degree=g0.max_degree,
                            ids=new_ids[:g0.n], ports=g0.ports)
            lab = normalize_labeling(g, base.labeling)
            for solver, seed in ((recursive_hthc_solver(SolverConfig(k=k)), None),
                                 (sampled_hthc_solver(SolverConfig(k=k)), 11),
                                 (rw_to_leaf_solver(CFG), 11)):
                fast = run_all(g, lab, solver, seed=seed)
                slow = run_all(g, lab, solver, seed=seed, use_batch=False)
                assert fast == slow, solver.name

    @pytest.mark.parametrize("sampled", [False, True])
    def test_leveled_matches_engine(self, sampled):
        for k, inst in _instances_for_leveled():
            g = inst.graph
            lab = normalize_labeling(g, inst.labeling)
            cfg = SolverConfig(k=k, l=k)
            solver = sampled_hthc_solver(cfg) if sampled \
                else recursive_hthc_solver(cfg)
            for seed in ((5, 77) if sampled else (None,)):
                fast = run_all(g, lab, solver, seed=seed)
                slow = run_all(g, lab, solver, seed=seed, use_batch=False)
                assert fast[0] == slow[0], (inst.meta, k, seed)
                for v, (a, b) in enumerate(zip(fast[1], slow[1])):
                    assert a == b, (inst.meta, k, seed, v, a, b)
