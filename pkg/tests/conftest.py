import pytest

from lclvol.graph import Instance, NodeLabel, build_graph, normalize_labeling


def make_instance(edges, labels, ids=None, max_degree=5):
    """Tiny helper: build an instance from explicit edges and labels."""
    ids = ids if ids is not None else list(range(1, len(labels) + 1))
    g = build_graph(edges, ids, max_degree=max_degree)
    return Instance(graph=g, labeling=list(labels))


@pytest.fixture
def three_node_tree():
    """Root (index 0) with two leaf children; all labels mutual."""
    edges = [(0, 1, 1, 1), (0, 2, 2, 1)]
    labels = [
        NodeLabel(left_child=1, right_child=2, input_color="R"),
        NodeLabel(parent=1, input_color="R"),
        NodeLabel(parent=1, input_color="B"),
    ]
    return make_instance(edges, labels)


@pytest.fixture
def pendant_cycle():
    """Directed six-cycle of internal nodes, each with a pendant leaf.

    Cycle edges alternate between left- and right-child roles; the pendant
    takes the other role, so every cycle node is internal.
    """
    edges = []
    labels = []
    c = 6
    for i in range(c):
        nxt = (i + 1) % c
        # port 1: parent (edge from previous), port 2: cycle child, port 3: pendant
        edges.append((i, nxt, 2, 1))
        edges.append((i, c + i, 3, 1))
        lab = {"parent": 1, "input_color": "R"}
        if i % 2 == 0:
            lab.update({"left_child": 2, "right_child": 3})
        else:
            lab.update({"right_child": 2, "left_child": 3})
        labels.append(NodeLabel(**lab))
    for i in range(c):
        labels.append(NodeLabel(parent=1, input_color="B"))
    inst = make_instance(edges, labels)
    inst.labeling = normalize_labeling(inst.graph, inst.labeling)
    return inst
