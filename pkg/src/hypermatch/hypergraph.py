"""r-uniform hypergraphs on [n], edges stored as vertex bitmasks.

Vertices are 0-based internally; the text fixture format is 1-based.
The vertex set may shrink (``active_vertices``) while labels stay fixed, so
``H - Z`` lives on V minus Z without relabeling.  Edges are kept in ascending
mask order, which for equal-size sets is colexicographic order; that same
order serves as the canonical linear ordering of r-sets wherever one is
needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

MAX_VERTICES = 63


class HypergraphError(ValueError):
    """Invalid hypergraph construction or query."""


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def mask_of(vertices) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def vertices_of(mask: int) -> list[int]:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


def lowest_bit(mask: int) -> int:
    """Index of the lowest set bit; mask must be nonzero."""
    return (mask & -mask).bit_length() - 1


@dataclass(frozen=True)
class Hypergraph:
    """Immutable r-graph: n, uniformity r, edge masks, active vertex mask."""

    n: int
    r: int
    edges: tuple[int, ...]
    active_vertices: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_VERTICES:
            raise HypergraphError(f"n must be in [1, {MAX_VERTICES}], got {self.n}")
        if self.r < 2:
            raise HypergraphError(f"r must be >= 2, got {self.r}")
        if self.active_vertices >> self.n:
            raise HypergraphError("active_vertices has bits outside [n]")
        seen = set()
        for e in self.edges:
            if popcount(e) != self.r:
                raise HypergraphError(f"edge {e:#x} does not have exactly r={self.r} vertices")
            if e & ~self.active_vertices:
                raise HypergraphError(f"edge {e:#x} leaves the active vertex set")
            if e in seen:
                raise HypergraphError(f"duplicate edge {e:#x}")
            seen.add(e)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def n_active(self) -> int:
        return popcount(self.active_vertices)

    def active_list(self) -> list[int]:
        return vertices_of(self.active_vertices)

    def degree(self, v: int) -> int:
        bit = 1 << v
        return sum(1 for e in self.edges if e & bit)

    def codegree(self, v: int, w: int) -> int:
        pair = (1 << v) | (1 << w)
        return sum(1 for e in self.edges if e & pair == pair)

    def edges_at(self, v: int) -> list[int]:
        bit = 1 << v
        return [e for e in self.edges if e & bit]

    def with_edges(self, edges) -> "Hypergraph":
        """Same vertex set, different edge list (kept in canonical order)."""
        return Hypergraph(self.n, self.r, tuple(sorted(edges)), self.active_vertices)

    def remove_edge(self, edge: int) -> "Hypergraph":
        if edge not in self.edges:
            raise HypergraphError(f"edge {edge:#x} not present")
        return Hypergraph(self.n, self.r, tuple(e for e in self.edges if e != edge),
                          self.active_vertices)


@dataclass(frozen=True)
class DegreeStats:
    min_degree: int
    avg_degree: Fraction
    max_degree: int
    max_codegree: int


def complete(n: int, r: int) -> Hypergraph:
    """The complete r-graph K on [n], edges in colex (ascending mask) order."""
    if r > n:
        raise HypergraphError(f"r={r} exceeds n={n}")
    if n > MAX_VERTICES:
        raise HypergraphError(f"n={n} exceeds mask width {MAX_VERTICES}")
    edges = sorted(mask_of(c) for c in combinations(range(n), r))
    return Hypergraph(n, r, tuple(edges), (1 << n) - 1)


def remove_rset(H: Hypergraph, Z: int) -> Hypergraph:
    """H - Z: drop the vertices of Z and every edge meeting Z.

    Z is a vertex mask (any size, though callers usually pass r-sets).
    Labels are preserved; only active_vertices shrinks.
    """
    if Z & ~H.active_vertices:
        raise HypergraphError("Z is not inside the active vertex set")
    return Hypergraph(H.n, H.r, tuple(e for e in H.edges if not e & Z),
                      H.active_vertices & ~Z)


def induced(H: Hypergraph, W: int) -> Hypergraph:
    """H[W]: edges of H contained in the vertex mask W."""
    return Hypergraph(H.n, H.r, tuple(e for e in H.edges if e & ~W == 0),
                      H.active_vertices & W)


def degree_stats(H: Hypergraph) -> DegreeStats:
    active = H.active_list()
    if not active or not H.edges:
        return DegreeStats(0, Fraction(0), 0, 0)
    degs = {v: 0 for v in active}
    for e in H.edges:
        for v in vertices_of(e):
            degs[v] += 1
    dvals = list(degs.values())
    kappa = 0
    for v, w in combinations(active, 2):
        pair = (1 << v) | (1 << w)
        c = sum(1 for e in H.edges if e & pair == pair)
        if c > kappa:
            kappa = c
    return DegreeStats(min(dvals), Fraction(H.r * H.m, len(active)), max(dvals), kappa)


def parse_hypergraph(text: str) -> Hypergraph:
    """Parse the fixture format: "n r m" then m lines of r sorted 1-based vertices."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise HypergraphError("empty hypergraph file")
    try:
        n, r, m = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise HypergraphError(f"bad header line: {lines[0]!r}") from exc
    if len(lines) - 1 != m:
        raise HypergraphError(f"expected {m} edge lines, got {len(lines) - 1}")
    edges = []
    for ln in lines[1:]:
        vs = [int(x) for x in ln.split()]
        if len(vs) != r or any(not 1 <= v <= n for v in vs):
            raise HypergraphError(f"bad edge line: {ln!r}")
        edges.append(mask_of(v - 1 for v in vs))
    return Hypergraph(n, r, tuple(sorted(edges)), (1 << n) - 1)


def format_hypergraph(H: Hypergraph) -> str:
    lines = [f"{H.n} {H.r} {H.m}"]
    for e in H.edges:
        lines.append(" ".join(str(v + 1) for v in vertices_of(e)))
    return "\n".join(lines) + "\n"


def random_hypergraph(n: int, r: int, m: int, rng) -> Hypergraph:
    """Uniform m-edge r-graph on [n] (the H_{n,M} model); rng is a numpy Generator."""
    K = complete(n, r)
    if m > K.m:
        raise HypergraphError(f"m={m} exceeds |K|={K.m}")
    idx = rng.choice(K.m, size=m, replace=False)
    return Hypergraph(n, r, tuple(sorted(K.edges[i] for i in idx)), (1 << n) - 1)
