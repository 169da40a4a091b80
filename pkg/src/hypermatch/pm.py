"""Exact perfect-matching counting and r-set weights.

Counts are plain Python ints, so they are exact at any size.  Two engines sit
behind ``count_pm``:

* a dense bitmask DP (numba-compiled, int64) used when the active set is
  large enough to pay for it AND a precomputed bound certifies that no value
  can overflow 64 bits;
* a hash-memoized recursion on Python ints otherwise (exact at any size).

Both anchor the recurrence on the lowest active vertex of the current subset,
which eliminates double counting: f(S) = sum over edges A with
min(A) = min(S), A inside S, of f(S minus A); f(empty) = 1.

``enumerate_pms`` is the independent brute-force oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .hypergraph import (
    Hypergraph,
    lowest_bit,
    mask_of,
    popcount,
    remove_rset,
    vertices_of,
)

DENSE_MIN_ACTIVE = 16          # below this the dict memo beats the dense table
DENSE_MAX_ACTIVE = 26          # 2^26 int64 = 512 MiB table cap
INT64_SAFE_BOUND = 1 << 62
DEFAULT_STATE_BUDGET = 20_000_000
ENUM_GUARD = 15


class ResourceGuardError(RuntimeError):
    """A DP table, enumeration or scan would exceed its configured budget."""


class NoPerfectMatchingError(ValueError):
    """Operation undefined because Phi(H) = 0."""


def complete_pm_count(n: int, r: int) -> int:
    """Number of perfect matchings of the complete r-graph on n vertices.

    n! / ((n/r)! (r!)^(n/r)); 0 when r does not divide n.
    """
    if n == 0:
        return 1
    if n % r:
        return 0
    k = n // r
    return math.factorial(n) // (math.factorial(k) * math.factorial(r) ** k)


def log_big(x: int) -> float:
    """Natural log of a positive int, safe for values beyond float range."""
    if x <= 0:
        raise ValueError("log_big needs a positive integer")
    shift = max(x.bit_length() - 53, 0)
    return math.log(x >> shift) + shift * math.log(2)


def _compact(H: Hypergraph) -> tuple[int, list[int]]:
    """Relabel active vertices to local bits 0..k-1; returns (k, local edges)."""
    active = H.active_list()
    pos = {v: i for i, v in enumerate(active)}
    local = []
    for e in H.edges:
        le = 0
        for v in vertices_of(e):
            le |= 1 << pos[v]
        local.append(le)
    return len(active), local


def _edges_by_min(k: int, edges: list[int]) -> list[list[int]]:
    by_min: list[list[int]] = [[] for _ in range(k)]
    for e in edges:
        by_min[lowest_bit(e)].append(e)
    return by_min


def _count_memo(k: int, r: int, edges: list[int], budget: int) -> int:
    by_min = _edges_by_min(k, edges)
    memo: dict[int, int] = {0: 1}
    full = (1 << k) - 1

    def rec(mask: int) -> int:
        val = memo.get(mask)
        if val is not None:
            return val
        if len(memo) > budget:
            raise ResourceGuardError(
                f"memoized PM count exceeded state budget {budget}")
        total = 0
        for e in by_min[lowest_bit(mask)]:
            if e & mask == e:
                total += rec(mask ^ e)
        memo[mask] = total
        return total

    return rec(full)


_dense_kernel = None


def _get_dense_kernel():
    """Compile the int64 DP lazily so importing the package stays cheap."""
    global _dense_kernel
    if _dense_kernel is not None:
        return _dense_kernel
    import numpy as np
    from numba import njit

    @njit(cache=True)
    def kernel(k, r, edges, starts):  # pragma: no cover - numba-compiled
        size = 1 << k
        pc = np.zeros(size, np.uint8)
        for m in range(1, size):
            pc[m] = pc[m >> 1] + (m & 1)
        f = np.zeros(size, np.int64)
        f[0] = 1
        for mask in range(1, size):
            if pc[mask] % r != 0:
                continue
            v = 0
            mm = mask
            while mm & 1 == 0:
                mm >>= 1
                v += 1
            total = 0
            for j in range(starts[v], starts[v + 1]):
                e = edges[j]
                if e & mask == e:
                    total += f[mask ^ e]
            f[mask] = total
        return f[size - 1]

    _dense_kernel = kernel
    return kernel


def _count_dense(k: int, r: int, edges: list[int]) -> int:
    import numpy as np

    by_min = _edges_by_min(k, edges)
    flat = []
    starts = [0]
    for v in range(k):
        flat.extend(by_min[v])
        starts.append(len(flat))
    kernel = _get_dense_kernel()
    return int(kernel(k, r,
                      np.array(flat or [0], dtype=np.int64),
                      np.array(starts, dtype=np.int64)))


def count_pm(H: Hypergraph, *, state_budget: int = DEFAULT_STATE_BUDGET) -> int:
    """Exact number of perfect matchings covering the active vertex set.

    0 when the active size is not divisible by r (the process code relies on
    this convention even though the underlying theory assumes r | n).
    """
    k = H.n_active
    if k == 0:
        return 1
    if k % H.r:
        return 0
    if not H.edges:
        return 0
    _, edges = _compact(H)
    if DENSE_MIN_ACTIVE <= k <= DENSE_MAX_ACTIVE and \
            complete_pm_count(k, H.r) < INT64_SAFE_BOUND:
        return _count_dense(k, H.r, edges)
    if k > DENSE_MAX_ACTIVE and (1 << (k - H.r)) > state_budget:
        # the reachable state space can exceed any reasonable memo
        raise ResourceGuardError(
            f"PM count on {k} active vertices exceeds the memory budget")
    return _count_memo(k, H.r, edges, state_budget)


def enumerate_pms(H: Hypergraph, *, max_active: int = ENUM_GUARD) -> list[tuple[int, ...]]:
    """Brute-force list of all perfect matchings (tuples of edge masks).

    Independent of count_pm: straight backtracking over global masks.
    """
    k = H.n_active
    if k > max_active:
        raise ResourceGuardError(
            f"enumeration guard: {k} active vertices > limit {max_active}")
    if k % H.r:
        return []
    out: list[tuple[int, ...]] = []
    buckets: dict[int, list[int]] = {}
    for e in H.edges:
        buckets.setdefault(lowest_bit(e), []).append(e)

    chosen: list[int] = []

    def rec(remaining: int):
        if remaining == 0:
            out.append(tuple(sorted(chosen)))
            return
        v = lowest_bit(remaining)
        for e in buckets.get(v, ()):
            if e & remaining == e:
                chosen.append(e)
                rec(remaining ^ e)
                chosen.pop()

    rec(H.active_vertices)
    return out


def weight(H: Hypergraph, Z: int) -> int:
    """w_H(Z) = Phi(H - Z) for an r-set mask Z inside the active set.

    For an edge A of H this equals the number of PMs of H containing A.
    """
    return count_pm(remove_rset(H, Z))


@dataclass(frozen=True)
class WeightSpectrum:
    """The multiset {w_H(Z)} over a family of r-sets, with exact summaries."""

    scope: str                      # "edges" | "all-rsets" | "family"
    entries: tuple[tuple[int, int], ...]   # (r-set mask, weight)
    total: int                      # Phi(H)
    avg: Fraction | None            # Phi(H)/D, None when H has no edges

    def weights(self) -> list[int]:
        return [w for _, w in self.entries]

    def max_weight(self) -> int:
        return max(self.weights(), default=0)


def weight_table(H: Hypergraph, scope: str = "edges", family=None, *,
                 max_rsets: int = 500_000) -> WeightSpectrum:
    """Exact weight spectrum over edges of H, all r-sets of the active set,
    or an explicit family of r-set masks."""
    if scope == "edges":
        zs = list(H.edges)
    elif scope == "all-rsets":
        active = H.active_list()
        n_r = math.comb(len(active), H.r)
        if n_r > max_rsets:
            raise ResourceGuardError(f"all-rsets scope has {n_r} sets > guard {max_rsets}")
        zs = [mask_of(c) for c in combinations(active, H.r)]
    elif scope == "family":
        if family is None:
            raise ValueError("scope='family' requires an explicit family")
        zs = list(family)
    else:
        raise ValueError(f"unknown scope {scope!r}")
    phi = count_pm(H)
    entries = tuple((z, weight(H, z)) for z in zs)
    avg = Fraction(phi * H.n_active, H.r * H.m) if H.m else None
    return WeightSpectrum(scope, entries, phi, avg)


def maxr(H: Hypergraph) -> Fraction:
    """max over edges A of w_H(A), divided by the average Phi(H)/D.

    Exact rational; raises NoPerfectMatchingError when Phi(H) = 0.
    """
    phi = count_pm(H)
    if phi == 0:
        raise NoPerfectMatchingError("maxr undefined: Phi(H) = 0")
    if not H.edges:
        raise NoPerfectMatchingError("maxr undefined: H has no edges")
    top = max(weight(H, a) for a in H.edges)
    # average weight = Phi * (n/r) / m = Phi / D
    return Fraction(top * H.r * H.m, phi * H.n_active)
