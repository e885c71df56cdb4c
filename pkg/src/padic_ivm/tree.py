"""Rooted Cayley tree of order k to finite depth.

Vertices are coordinate words over {1..k}; the empty word is the root.
The edge set includes the k root edges, so the number of edges equals the
number of non-root vertices, and prolonged next-nearest-neighbor pairs
include the root-anchored ones.  This is the convention under which the
brute-force partition recursion closes (see the model tests).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

Vertex = tuple[int, ...]
Edge = tuple[Vertex, Vertex]


class EnumerationBudgetError(Exception):
    """Configuration space too large for the configured enumeration budget."""


@dataclass(frozen=True)
class TreeIndex:
    """Geometry of the tree to a fixed depth; immutable after build."""

    k: int
    depth: int
    levels: tuple[tuple[Vertex, ...], ...]
    edges: tuple[Edge, ...]
    prolonged: tuple[Edge, ...]

    @classmethod
    def build(cls, k: int, depth: int, spin_budget: int | None = None) -> "TreeIndex":
        if k < 2:
            raise ValueError("tree order k must be at least 2")
        if depth < 1:
            raise ValueError("depth must be at least 1")
        levels: list[tuple[Vertex, ...]] = [((),)]
        for _ in range(depth):
            levels.append(tuple(w + (i,) for w in levels[-1] for i in range(1, k + 1)))
        nspins = sum(len(lv) for lv in levels)
        if spin_budget is not None and nspins > spin_budget:
            raise EnumerationBudgetError(
                f"{nspins} spins exceed the enumeration budget of {spin_budget}"
            )
        edges = tuple((w[:-1], w) for m in range(1, depth + 1) for w in levels[m])
        prolonged = tuple((w[:-2], w) for m in range(2, depth + 1) for w in levels[m])
        return cls(k, depth, tuple(levels), edges, prolonged)

    @cached_property
    def vertices(self) -> tuple[Vertex, ...]:
        """Root first, then level by level in lexicographic order."""
        return tuple(v for lv in self.levels for v in lv)

    @cached_property
    def vertex_index(self) -> dict[Vertex, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @property
    def num_spins(self) -> int:
        return len(self.vertices)

    def level_size(self, m: int) -> int:
        return self.k ** m

    def interior_size(self, n: int | None = None) -> int:
        """Number of non-root vertices down to depth n: k(k^n - 1)/(k - 1)."""
        if n is None:
            n = self.depth
        return (self.k * (self.k ** n - 1)) // (self.k - 1)

    def level_edges(self, m: int) -> tuple[Edge, ...]:
        """Edges whose child lies on level m (the k^m bonds into W_m)."""
        if not 1 <= m <= self.depth:
            raise ValueError(f"level {m} outside 1..{self.depth}")
        return tuple((w[:-1], w) for w in self.levels[m])

    def successors(self, v: Vertex) -> tuple[Vertex, ...]:
        if len(v) >= self.depth:
            return ()
        return tuple(v + (i,) for i in range(1, self.k + 1))

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "depth": self.depth,
                "vertices": [list(v) for v in self.vertices],
                "edges": [[list(a), list(b)] for a, b in self.edges],
                "prolonged_pairs": [[list(a), list(b)] for a, b in self.prolonged],
            }
        )


def prolonged_pairs(t: TreeIndex) -> tuple[Edge, ...]:
    """All pairs two levels apart on a descending path, within the built depth."""
    if t.depth < 2:
        raise ValueError("prolonged pairs need depth >= 2")
    return t.prolonged


def translate(g: Vertex, x: Vertex) -> Vertex:
    """Semigroup action: concatenation g followed by x."""
    return g + x


def translate_edge(g: Vertex, edge: Edge) -> Edge:
    return (translate(g, edge[0]), translate(g, edge[1]))


def is_Gm_periodic(field: Mapping[Edge, object], t: TreeIndex, m: int) -> bool:
    """Check invariance of an edge field under every depth-m generator whose
    image stays within the built depth.  m = 1 tests full translation
    invariance."""
    if not 1 <= m <= t.depth:
        raise ValueError(f"period {m} outside the built depth")
    for g in t.levels[m]:
        for edge in t.edges:
            image = translate_edge(g, edge)
            if len(image[1]) > t.depth:
                continue
            if field[image] != field[edge]:
                return False
    return True
