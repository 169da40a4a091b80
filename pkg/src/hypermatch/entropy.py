"""Entropy of uniform perfect matchings.

h(v,H) is the entropy of the edge at v in a uniform PM; Shearer-style
subadditivity gives log Phi <= r^{-1} sum_v h(v).  The finer decomposition
subtracts the energy term (r-1)n/r and pays for it with an error sum over
"non-generic" (v,Y) pairs; that inequality carries unknown constants, so the
report states both sides without asserting anything.

The random-ordering internals of that decomposition are verified exhaustively:
for a fixed PM f of the complete r-graph, a uniform vertex ordering induces a
candidate set Z at v, and the distributions of |Z| (and of |Z| with Z covering
a fixed Y) have closed forms that ``qk_sk_exhaustive`` checks against an exact
enumeration of all n! orderings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np

from .hypergraph import Hypergraph, complete, mask_of, popcount, vertices_of
from .pm import ResourceGuardError, count_pm, enumerate_pms, log_big, weight

TCUCKLER_GUARD = 15
QS_GUARD = 10


def entropy(probs) -> float:
    """Base-e entropy of a finite distribution; 0 log 0 := 0."""
    total = float(sum(probs))
    if any(p < 0 for p in probs) or abs(total - 1.0) > 1e-12:
        raise ValueError("distribution must be nonnegative and sum to 1")
    return -sum(float(p) * math.log(float(p)) for p in probs if p > 0)


def tv_uniform(probs) -> float:
    """L1 distance sum_i |p_i - 1/l| to the uniform distribution."""
    total = float(sum(probs))
    if any(p < 0 for p in probs) or abs(total - 1.0) > 1e-12:
        raise ValueError("distribution must be nonnegative and sum to 1")
    l = len(probs)
    return sum(abs(float(p) - 1.0 / l) for p in probs)


def vertex_edge_distribution(H: Hypergraph, v: int) -> dict[int, Fraction]:
    """p_v(Y) = w_H(Y u v)/Phi over (r-1)-set masks Y with Y u v an edge."""
    if not (H.active_vertices >> v) & 1:
        raise ValueError(f"vertex {v} is not active")
    phi = count_pm(H)
    if phi == 0:
        raise ValueError("vertex distribution undefined: Phi(H) = 0")
    bit = 1 << v
    out: dict[int, Fraction] = {}
    for e in H.edges_at(v):
        w = weight(H, e)
        if w:
            out[e & ~bit] = Fraction(w, phi)
    return out


def vertex_entropy(H: Hypergraph, v: int) -> float:
    dist = vertex_edge_distribution(H, v)
    return -sum(float(p) * math.log(float(p)) for p in dist.values())


def shearer_gap(H: Hypergraph) -> tuple[float, float]:
    """(log Phi, r^{-1} sum_v h(v,H)); the first never exceeds the second."""
    phi = count_pm(H)
    if phi == 0:
        raise ValueError("shearer_gap undefined: Phi(H) = 0")
    rhs = sum(vertex_entropy(H, v) for v in H.active_list()) / H.r
    return log_big(phi), rhs


# ---------------------------------------------------------------------------
# the refined decomposition report


@dataclass(frozen=True)
class VertexPairStat:
    v: int
    Y: int                          # (r-1)-set mask
    p: Fraction
    gamma: float                    # P(tau(v,f,Y) < r-1), exact or estimated
    gamma_stderr: float             # 0 in exhaustive mode
    tau_hist: tuple[int, ...]       # counts of tau = 0..r-1+ over sampled f


@dataclass(frozen=True)
class TCucklerReport:
    n_active: int
    r: int
    lhs: float                      # log Phi
    mainterm: float                 # r^{-1} sum_v h(v) - (r-1)n/r
    energy: float                   # (r-1)n/r
    error_sum: float
    mode: str                       # "exhaustive" | "monte-carlo"
    trials: int | None
    table: tuple[VertexPairStat, ...]

    def to_dict(self) -> dict:
        return {
            "n_active": self.n_active, "r": self.r,
            "lhs": self.lhs, "mainterm": self.mainterm,
            "energy": self.energy, "error_sum": self.error_sum,
            "mode": self.mode, "trials": self.trials,
            "table": [
                {"v": s.v, "Y": vertices_of(s.Y),
                 "p": f"{s.p.numerator}/{s.p.denominator}",
                 "gamma": s.gamma, "gamma_stderr": s.gamma_stderr,
                 "tau_hist": list(s.tau_hist)}
                for s in self.table
            ],
        }


def tau_count(v: int, f, Y: int) -> int:
    """Number of edges of the PM f, other than the one at v, meeting Y."""
    bit = 1 << v
    fv = next(e for e in f if e & bit)
    return sum(1 for e in f if e != fv and e & Y)


def tcuckler_report(H: Hypergraph, sampling: str = "exhaustive",
                    trials: int = 2000, seed: int = 0) -> TCucklerReport:
    """Both sides of the energy-corrected entropy bound, with the error table.

    gamma_v(Y) is the probability that a uniform PM puts fewer than r-1 of its
    non-v edges across Y.  Exhaustive mode enumerates all PMs; monte-carlo
    samples PM indices uniformly (still via the enumeration, so the guard is
    the same) and attaches standard errors.  The inequality itself is never
    asserted: its error terms carry unspecified constants.
    """
    if H.n_active > TCUCKLER_GUARD:
        raise ResourceGuardError(
            f"report guard: {H.n_active} active vertices > {TCUCKLER_GUARD}")
    phi = count_pm(H)
    if phi == 0:
        raise ValueError("report undefined: Phi(H) = 0")
    pms = enumerate_pms(H)
    assert len(pms) == phi

    if sampling == "exhaustive":
        sample = pms
        trials_out = None
    elif sampling == "monte-carlo":
        rng = np.random.default_rng(np.random.SeedSequence((seed, 2)))
        idx = rng.integers(0, phi, size=trials)
        sample = [pms[i] for i in idx]
        trials_out = trials
    else:
        raise ValueError(f"unknown sampling mode {sampling!r}")

    r = H.r
    table: list[VertexPairStat] = []
    error_sum = 0.0
    h_sum = 0.0
    for v in H.active_list():
        dist = vertex_edge_distribution(H, v)
        h_sum += -sum(float(p) * math.log(float(p)) for p in dist.values())
        for Y, p in sorted(dist.items()):
            hist = [0] * r
            for f in sample:
                hist[min(tau_count(v, f, Y), r - 1)] += 1
            N = len(sample)
            in_gamma = N - hist[r - 1]
            gamma = in_gamma / N
            stderr = 0.0 if sampling == "exhaustive" else \
                math.sqrt(gamma * (1 - gamma) / N)
            error_sum += float(p) * gamma ** (1.0 / (r - 1))
            table.append(VertexPairStat(v, Y, p, gamma, stderr, tuple(hist)))

    energy = (r - 1) * H.n_active / r
    return TCucklerReport(H.n_active, r, log_big(phi),
                          h_sum / r - energy, energy, error_sum,
                          sampling, trials_out, tuple(table))


# ---------------------------------------------------------------------------
# exhaustive ordering statistics for a fixed PM of K


_perm_cache: dict[int, np.ndarray] = {}


def _prefix_masks(n: int) -> np.ndarray:
    """For every permutation of [n] and every vertex v, the mask of vertices
    preceding v; shape (n!, n), computed once per n and cached."""
    arr = _perm_cache.get(n)
    if arr is not None:
        return arr
    perms = np.array(list(permutations(range(n))), dtype=np.int8)
    bits = (np.int64(1) << perms.astype(np.int64))
    excl = np.zeros_like(bits)
    np.bitwise_or.accumulate(bits[:, :-1], axis=1, out=excl[:, 1:])
    # excl[i, j] = mask of the first j entries of permutation i; scatter to
    # "mask before vertex v" by inverting the permutation
    out = np.zeros_like(excl)
    rows = np.arange(len(perms))[:, None]
    out[rows, perms] = excl
    _perm_cache[n] = out
    return out


def closed_form_q(n: int, r: int) -> dict[int, Fraction]:
    """q_k = 1/n at k = r-1, 2r-1, ..., n-1 and 0 elsewhere."""
    return {k: (Fraction(1, n) if (k - (r - 1)) % r == 0 else Fraction(0))
            for k in range(1, n)}


def _falling(a: Fraction | int, b: int) -> Fraction:
    out = Fraction(1)
    for i in range(b):
        out *= Fraction(a) - i
    return out


def closed_form_s(n: int, r: int, tau: int = None) -> dict[int, Fraction]:
    """s_k = (1/n) ((k-r+1)/r)_tau / (n/r - 1)_tau on the support of q_k.

    tau defaults to r-1 (the generic case); requires n >= 3r so the
    denominator falling factorial is nonzero.
    """
    if tau is None:
        tau = r - 1
    if n < 3 * r:
        raise ValueError("closed form needs n >= 3r (denominator vanishes)")
    denom = _falling(Fraction(n, r) - 1, tau)
    out: dict[int, Fraction] = {}
    for k in range(1, n):
        if (k - (r - 1)) % r == 0:
            out[k] = Fraction(1, n) * _falling(Fraction(k - r + 1, r), tau) / denom
        else:
            out[k] = Fraction(0)
    return out


@dataclass(frozen=True)
class QSCheck:
    n: int
    r: int
    v: int
    Y: int
    tau: int
    in_gamma: bool                  # tau < r-1
    q_emp: dict                     # k -> Fraction, denominator n!
    s_emp: dict
    q_closed: dict
    s_closed: dict                  # generic closed form (tau = r-1)
    s_closed_tau: dict              # closed form at this f's actual tau
    q_match: bool
    s_match: bool                   # against generic form; only claimed off Gamma
    s_match_tau: bool


def qk_sk_exhaustive(n: int, r: int, f, v: int, Y: int) -> QSCheck:
    """Exact |Z| statistics of a uniform vertex ordering, for a fixed PM f.

    Walks all n! orderings (vectorized over the cached prefix-mask table).
    An ordering contributes when v is the first vertex of its f-edge; Z is
    then everything outside the f-edges of the preceding vertices, minus v.
    q_emp[k] = P(that event and |Z| = k); s_emp additionally requires Z >= Y.
    """
    if n > QS_GUARD:
        raise ResourceGuardError(f"ordering guard: n={n} > {QS_GUARD}")
    if n < 3 * r or n % r:
        raise ValueError("need r | n and n >= 3r")
    if (Y >> n) or ((Y >> v) & 1) or popcount(Y) != r - 1:
        raise ValueError("Y must be an (r-1)-set mask avoiding v")
    fv = next(e for e in f if (e >> v) & 1)
    if sorted(f) != sorted(set(f)) or sum(popcount(e) for e in f) != n:
        raise ValueError("f must be a perfect matching of the complete r-graph")

    B = _prefix_masks(n)[:, v]
    nfact = math.factorial(n)
    others = [e for e in f if e != fv]
    tau = sum(1 for e in others if e & Y)

    first = (B & np.int64(fv & ~(1 << v))) == 0      # v first in its edge
    # |Z| = (r-1) + r * (number of other f-edges untouched by the prefix)
    free = sum(((B & np.int64(e)) == 0).astype(np.int64) for e in others)
    ks = (r - 1) + r * free
    # Z covers Y iff every other f-edge meeting Y is untouched (the part of Y
    # inside f_v is free automatically once the first-vertex event holds)
    covers = np.ones(len(B), dtype=bool)
    for e in others:
        if e & Y:
            covers &= (B & np.int64(e)) == 0

    q_emp = {k: Fraction(0) for k in range(1, n)}
    s_emp = {k: Fraction(0) for k in range(1, n)}
    for k in range(r - 1, n, r):
        sel = first & (ks == k)
        q_emp[k] = Fraction(int(sel.sum()), nfact)
        s_emp[k] = Fraction(int((sel & covers).sum()), nfact)

    q_closed = closed_form_q(n, r)
    s_closed = closed_form_s(n, r)
    s_closed_tau = closed_form_s(n, r, tau)
    return QSCheck(n, r, v, Y, tau, tau < r - 1, q_emp, s_emp,
                   q_closed, s_closed, s_closed_tau,
                   q_emp == q_closed, s_emp == s_closed,
                   s_emp == s_closed_tau)


def rk_mixture_check(n: int, r: int, v: int, Y: int) -> dict:
    """r_k over a uniform PM of K and uniform ordering, against the mixture
    bound gamma*q_k + (1-gamma)*s_k; exact rationals throughout."""
    K = complete(n, r)
    pms = enumerate_pms(K)
    phi = len(pms)
    gamma = Fraction(sum(1 for f in pms if tau_count(v, f, Y) < r - 1), phi)
    q_closed = closed_form_q(n, r)
    s_closed = closed_form_s(n, r)
    rk = {k: Fraction(0) for k in range(1, n)}
    for f in pms:
        chk = qk_sk_exhaustive(n, r, f, v, Y)
        for k in rk:
            rk[k] += Fraction(1, phi) * chk.s_emp[k]
    ok = all(rk[k] <= gamma * q_closed[k] + (1 - gamma) * s_closed[k]
             for k in rk)
    return {"gamma": gamma, "r_k": rk, "bound_holds": ok}
