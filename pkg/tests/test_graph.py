import pytest
from hypothesis import given, strategies as st

from riskcal import DataError, ReliabilityGraph, transitive_reduction


def ids(n):
    return [f"n{k}" for k in range(n)]


class TestConstruction:
    def test_chain_depths(self):
        g = ReliabilityGraph(ids(3), [(0, 1), (1, 2)])
        assert [g.depth(v) for v in range(3)] == [0, 1, 2]
        assert g.max_depth == 2
        assert g.roots == (0,)
        assert g.n_leaves == 1
        assert g.leaf_descendants(0) == 1

    def test_diamond_longest_path_depth(self):
        #   0 -> 1 -> 3,  0 -> 3  : node 3 sits at depth 2, not 1
        g = ReliabilityGraph(ids(4), [(0, 1), (1, 3), (0, 3), (0, 2)])
        assert g.depth(3) == 2
        assert g.nodes_at_depth(1) == (1, 2)
        assert g.n_leaves == 2  # nodes 2 and 3
        assert g.leaf_descendants(0) == 2
        assert g.leaf_descendants(2) == 1

    def test_branching_leaf_counts(self):
        g = ReliabilityGraph(ids(5), [(0, 1), (0, 2), (1, 3), (1, 4)])
        assert g.leaf_descendants(1) == 2
        assert g.leaf_descendants(0) == 3
        assert g.n_leaves == 3

    def test_edgeless_graph(self):
        g = ReliabilityGraph(["a", "b"], [])
        assert g.roots == (0, 1)
        assert g.max_depth == 0
        assert g.n_leaves == 2

    def test_duplicate_edges_collapse(self):
        g = ReliabilityGraph(ids(2), [(0, 1), (0, 1)])
        assert g.edges == ((0, 1),)

    def test_edges_sorted(self):
        g = ReliabilityGraph(ids(3), [(1, 2), (0, 2), (0, 1)])
        assert g.edges == ((0, 1), (0, 2), (1, 2))

    def test_children_and_parents(self):
        g = ReliabilityGraph(ids(3), [(0, 2), (0, 1)])
        assert g.children(0) == (1, 2)
        assert g.parents(2) == (0,)
        assert g.parents(0) == ()

    def test_index_of(self):
        g = ReliabilityGraph(["a", "b"], [])
        assert g.index_of("b") == 1
        with pytest.raises(DataError, match="unknown node"):
            g.index_of("zzz")

    def test_to_doc_uses_identifiers(self):
        g = ReliabilityGraph(["a", "b", "c"], [(2, 0)])
        assert g.to_doc() == {"nodes": ["a", "b", "c"], "edges": [["c", "a"]]}


class TestValidation:
    def test_cycle_detected_and_named(self):
        with pytest.raises(DataError, match=r"cycle through nodes \['n1', 'n2'\]"):
            ReliabilityGraph(ids(3), [(1, 2), (2, 1)])

    def test_self_loop(self):
        with pytest.raises(DataError, match="self-loop"):
            ReliabilityGraph(ids(2), [(1, 1)])

    def test_edge_out_of_range(self):
        with pytest.raises(DataError, match="out of range"):
            ReliabilityGraph(ids(2), [(0, 2)])

    def test_duplicate_node_ids(self):
        with pytest.raises(DataError, match="unique"):
            ReliabilityGraph(["a", "a"], [])

    def test_empty_graph(self):
        with pytest.raises(DataError):
            ReliabilityGraph([], [])


class TestTransitiveReduction:
    def test_drops_shortcut_edge(self):
        kept = transitive_reduction(ids(3), [(0, 1), (1, 2), (0, 2)])
        assert sorted(kept) == [(0, 1), (1, 2)]

    def test_keeps_diamond(self):
        edges = [(0, 1), (0, 2), (1, 3), (2, 3)]
        assert sorted(transitive_reduction(ids(4), edges)) == sorted(edges)

    def test_long_shortcut(self):
        kept = transitive_reduction(ids(4), [(0, 1), (1, 2), (2, 3), (0, 3)])
        assert (0, 3) not in kept

    def test_empty_edges(self):
        assert transitive_reduction(ids(3), []) == []

    @given(st.data())
    def test_preserves_reachability(self, data):
        n = data.draw(st.integers(min_value=2, max_value=9))
        all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        edges = data.draw(st.lists(st.sampled_from(all_pairs), max_size=20, unique=True))
        kept = transitive_reduction(ids(n), edges)
        assert set(kept) <= set(edges)
        assert _reach(n, edges) == _reach(n, kept)


def _reach(n, edges):
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
    out = set()
    for s in range(n):
        stack, seen = [s], set()
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        out |= {(s, t) for t in seen}
    return out
