"""Reliability graphs: DAGs whose edge u -> v means "u is believed at least
as reliable as v", so v is only worth testing once u has been cleared.

Nodes carry candidate identifiers; edges are given as index pairs into the
identifier list.  Construction validates acyclicity and precomputes what
level-wise step-up testing needs: longest-path depths from the roots and
per-node leaf-descendant counts.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .errors import DataError


class ReliabilityGraph:
    """Immutable DAG over named candidates with precomputed traversal data."""

    def __init__(self, ids: Sequence[str], edges: Iterable[tuple[int, int]]):
        ids = tuple(str(i) for i in ids)
        if not ids:
            raise DataError("graph needs at least one node")
        if any(not i for i in ids):
            raise DataError("node identifiers must be non-empty")
        if len(set(ids)) != len(ids):
            raise DataError("node identifiers must be unique")
        m = len(ids)

        edge_list: list[tuple[int, int]] = []
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < m and 0 <= v < m):
                raise DataError(f"edge ({u}, {v}) out of range for {m} nodes")
            if u == v:
                raise DataError(f"self-loop at node {ids[u]!r}")
            if (u, v) in seen:
                continue
            seen.add((u, v))
            edge_list.append((u, v))

        children: list[list[int]] = [[] for _ in range(m)]
        parents: list[list[int]] = [[] for _ in range(m)]
        for u, v in edge_list:
            children[u].append(v)
            parents[v].append(u)
        for adj in children:
            adj.sort()
        for adj in parents:
            adj.sort()

        # Kahn topological order; anything left over sits on a cycle.
        indeg = [len(p) for p in parents]
        queue = [v for v in range(m) if indeg[v] == 0]
        topo: list[int] = []
        while queue:
            v = queue.pop()
            topo.append(v)
            for w in children[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue.append(w)
        if len(topo) != m:
            cyclic = sorted(ids[v] for v in range(m) if indeg[v] > 0)
            raise DataError(f"graph contains a cycle through nodes {cyclic}")

        depth = [0] * m
        for v in topo:
            for w in children[v]:
                depth[w] = max(depth[w], depth[v] + 1)

        # Leaf-descendant sets as integer bitsets, unioned bottom-up.
        leaf_mask = [0] * m
        for v in reversed(topo):
            if not children[v]:
                leaf_mask[v] = 1 << v
            else:
                acc = 0
                for w in children[v]:
                    acc |= leaf_mask[w]
                leaf_mask[v] = acc

        self.ids = ids
        self.m = m
        self.edges = tuple(sorted(edge_list))
        self._index = {cid: k for k, cid in enumerate(ids)}
        self._children = tuple(tuple(a) for a in children)
        self._parents = tuple(tuple(a) for a in parents)
        self._topo = tuple(topo)
        self._depth = tuple(depth)
        self._leaf_count = tuple(mask.bit_count() for mask in leaf_mask)
        self._n_leaves = sum(1 for v in range(m) if not children[v])

    def index_of(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise DataError(f"unknown node identifier: {node_id!r}") from None

    def children(self, v: int) -> tuple[int, ...]:
        return self._children[v]

    def parents(self, v: int) -> tuple[int, ...]:
        return self._parents[v]

    def depth(self, v: int) -> int:
        """Longest path length from any root down to v (roots have depth 0)."""
        return self._depth[v]

    @property
    def max_depth(self) -> int:
        return max(self._depth)

    def leaf_descendants(self, v: int) -> int:
        """Number of distinct leaves reachable from v (a leaf counts itself)."""
        return self._leaf_count[v]

    @property
    def n_leaves(self) -> int:
        return self._n_leaves

    @property
    def roots(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.m) if not self._parents[v])

    def nodes_at_depth(self, d: int) -> tuple[int, ...]:
        return tuple(v for v in range(self.m) if self._depth[v] == d)

    def to_doc(self) -> dict:
        """Edge-list document for JSON export and audit trails."""
        return {
            "nodes": list(self.ids),
            "edges": [[self.ids[u], self.ids[v]] for u, v in self.edges],
        }


def transitive_reduction(ids: Sequence[str], edges: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Drop every edge implied by a longer path; unique for DAGs.

    An edge u -> v survives iff no other child of u reaches v.  Reachability
    is computed once per node with integer bitsets, so dense rank-order
    graphs with a few thousand nodes reduce quickly.
    """
    g = ReliabilityGraph(ids, edges)  # validates acyclicity
    reach = [0] * g.m  # strict descendants of v
    for v in reversed(g._topo):
        acc = 0
        for w in g.children(v):
            acc |= (1 << w) | reach[w]
        reach[v] = acc
    kept = []
    for u, v in g.edges:
        via_other = any(reach[w] >> v & 1 for w in g.children(u) if w != v)
        if not via_other:
            kept.append((u, v))
    return kept
