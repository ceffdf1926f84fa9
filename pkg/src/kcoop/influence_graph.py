"""Signed directed influence graphs of sign matrices.

An entry ``m[i, j]`` that is not ``0`` (with ``i != j``) gives an edge
``j -> i`` carrying the entry's sign. Structural questions (degree,
connectivity, path/cycle shape) are asked of the undirected skeleton, whose
edges are the unordered neighbor pairs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator

from .sign_pattern import SignMatrix, SignSymbol

__all__ = [
    "EdgeSign",
    "Edge",
    "InfluenceGraph",
    "Topology",
    "GraphError",
    "build_graph",
    "neighbors",
    "check_degree_constraint",
    "check_sign_symmetric",
    "count_negative_edges",
    "zeta",
    "connected_components",
    "topology",
    "pair_signs",
]


class GraphError(ValueError):
    pass


class EdgeSign(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    INDETERMINATE = "indeterminate"

    def flipped(self) -> "EdgeSign":
        if self is EdgeSign.PLUS:
            return EdgeSign.MINUS
        if self is EdgeSign.MINUS:
            return EdgeSign.PLUS
        return self


class Topology(str, enum.Enum):
    CYCLE = "cycle"
    PATH = "path"
    OTHER = "other"


@dataclass(frozen=True, order=True)
class Edge:
    source: int
    target: int
    sign: EdgeSign


@dataclass(frozen=True)
class InfluenceGraph:
    n: int
    edges: frozenset[Edge]

    def __post_init__(self):
        seen = set()
        for e in self.edges:
            if e.source == e.target:
                raise GraphError(f"self-loop at vertex {e.source}")
            if not (0 <= e.source < self.n and 0 <= e.target < self.n):
                raise GraphError(f"edge {e} has a vertex outside [0, {self.n})")
            if (e.source, e.target) in seen:
                raise GraphError(f"duplicate edge {e.source} -> {e.target}")
            seen.add((e.source, e.target))

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def edge(self, source: int, target: int):
        for e in self.edges:
            if e.source == source and e.target == target:
                return e
        return None

    def skeleton(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {v: set() for v in range(self.n)}
        for e in self.edges:
            adj[e.source].add(e.target)
            adj[e.target].add(e.source)
        return adj

    def has_indeterminate(self) -> bool:
        return any(e.sign is EdgeSign.INDETERMINATE for e in self.edges)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "edges": [
                {"from": e.source + 1, "to": e.target + 1, "sign": e.sign.value}
                for e in self.sorted_edges()
            ],
        }

    def to_dot(self) -> str:
        lines = ["digraph influence {"]
        for v in range(self.n):
            lines.append(f'  x{v + 1} [label="x{v + 1}"];')
        style = {EdgeSign.PLUS: "+", EdgeSign.MINUS: "-", EdgeSign.INDETERMINATE: "*"}
        for e in self.sorted_edges():
            lines.append(f'  x{e.source + 1} -> x{e.target + 1} [label="{style[e.sign]}"];')
        lines.append("}")
        return "\n".join(lines)


_EDGE_SIGN = {
    SignSymbol.PLUS: EdgeSign.PLUS,
    SignSymbol.MINUS: EdgeSign.MINUS,
    SignSymbol.STAR: EdgeSign.INDETERMINATE,
}


def build_graph(m: SignMatrix) -> InfluenceGraph:
    edges = set()
    for i in range(m.n):
        for j in range(m.n):
            sym = m.entries[i][j]
            if i != j and sym is not SignSymbol.ZERO:
                edges.add(Edge(j, i, _EDGE_SIGN[sym]))
    return InfluenceGraph(m.n, frozenset(edges))


def _check_vertex(g: InfluenceGraph, v: int) -> None:
    if not 0 <= v < g.n:
        raise GraphError(f"vertex {v} out of range [0, {g.n})")


def neighbors(g: InfluenceGraph, v: int) -> set[int]:
    _check_vertex(g, v)
    out = set()
    for e in g.edges:
        if e.source == v:
            out.add(e.target)
        elif e.target == v:
            out.add(e.source)
    return out


def check_degree_constraint(g: InfluenceGraph) -> bool:
    return all(len(nb) <= 2 for nb in g.skeleton().values())


def check_sign_symmetric(g: InfluenceGraph) -> bool:
    if g.has_indeterminate():
        return False
    by_pair = {(e.source, e.target): e.sign for e in g.edges}
    for (s, t), sign in by_pair.items():
        back = by_pair.get((t, s))
        if back is not None and back is not sign:
            return False
    return True


def count_negative_edges(g: InfluenceGraph) -> int:
    return sum(1 for e in g.edges if e.sign is EdgeSign.MINUS)


def pair_signs(g: InfluenceGraph) -> dict[frozenset, EdgeSign]:
    """Sign of each unordered neighbor pair.

    A pair is ``MINUS`` if either edge is ``-``; ``INDETERMINATE`` if either
    edge is indeterminate; ``PLUS`` otherwise.
    """
    out: dict[frozenset, EdgeSign] = {}
    for e in g.edges:
        key = frozenset((e.source, e.target))
        prev = out.get(key)
        if prev is None or prev is EdgeSign.PLUS:
            out[key] = e.sign
        elif prev is EdgeSign.MINUS and e.sign is EdgeSign.INDETERMINATE:
            out[key] = e.sign
    return out


def zeta(g: InfluenceGraph) -> int:
    """Number of neighbor pairs joined by at least one ``-`` edge."""
    pairs = set()
    for e in g.edges:
        if e.sign is EdgeSign.MINUS:
            pairs.add(frozenset((e.source, e.target)))
    return len(pairs)


def connected_components(g: InfluenceGraph) -> list[set[int]]:
    """Weakly connected components, ordered by smallest vertex."""
    adj = g.skeleton()
    seen: set[int] = set()
    comps = []
    for start in range(g.n):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        comps.append(comp)
    return comps


def _skeleton_topology(adj: dict[int, set[int]], vertices) -> Topology:
    degrees = [len(adj[v]) for v in vertices]
    if len(degrees) >= 3 and all(d == 2 for d in degrees):
        return Topology.CYCLE
    if len(degrees) >= 2 and degrees.count(1) == 2 and degrees.count(2) == len(degrees) - 2:
        return Topology.PATH
    return Topology.OTHER


def topology(g: InfluenceGraph) -> Topology:
    if len(connected_components(g)) != 1:
        raise GraphError("topology is only defined for connected graphs")
    return _skeleton_topology(g.skeleton(), range(g.n))


def walk_order(g: InfluenceGraph, vertices=None) -> list[int]:
    """Vertices of a path or cycle component in traversal order.

    Paths start at their smaller endpoint, cycles at their smallest vertex
    heading toward its smaller neighbor. Isolated vertices give ``[v]``.
    """
    adj = g.skeleton()
    verts = sorted(vertices if vertices is not None else range(g.n))
    if len(verts) == 1:
        return verts
    shape = _skeleton_topology(adj, verts)
    if shape is Topology.PATH:
        start = min(v for v in verts if len(adj[v]) == 1)
    elif shape is Topology.CYCLE:
        start = verts[0]
    else:
        raise GraphError("component is neither a path nor a cycle")
    order = [start]
    prev = None
    cur = start
    while True:
        nxt = sorted(w for w in adj[cur] if w != prev and w not in order)
        if not nxt:
            break
        prev, cur = cur, nxt[0]
        order.append(cur)
    return order


def iter_pairs(g: InfluenceGraph) -> Iterator[tuple[int, int]]:
    for key in sorted(tuple(sorted(p)) for p in pair_signs(g)):
        yield key
