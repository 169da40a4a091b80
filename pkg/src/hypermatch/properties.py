"""Finite-tolerance evaluators for the named structural properties.

Every asymptotic qualifier ("o(1)", "O(1)", "a.e.") becomes a named numeric
parameter on ToleranceParams; the verdicts themselves are computed from exact
rational weights, with logs taken only at comparison time (property A) via
high-precision arithmetic so rounding cannot flip a verdict at any tolerance
a caller could reasonably set.

Property ids:
  A  - trace lower bound on log Phi_t (needs a DeletionTrace and step t)
  R  - degree regularity: R1 near-average degrees, R2 min/max degree ratios,
       R3 small codegrees
  B  - maxr of edge weights capped by C_B
  C  - single-swap weight stability (needs aux Z, x)
  D  - weight floor relative to a heavy r-set Z0 (needs aux Z0)
  E  - edge weights concentrate at Phi/D for all but a small fraction of edges
  F  - same over all r-sets of K
  Q  - E holds but at least a 2*theta fraction of non-edges deviate by 2*theta
  V  - after deleting a random test set T, weights of T-edges sit near
       zeta * Phi/D while a theta fraction of non-edges still deviate
       (needs aux T_set, theta, zeta)
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from itertools import combinations

import mpmath

from .hypergraph import Hypergraph, mask_of, popcount, remove_rset, vertices_of
from .pm import NoPerfectMatchingError, count_pm, weight

_MP_DPS = 60


class MissingAuxError(ValueError):
    """The requested property needs auxiliary input that was not supplied."""


@dataclass(frozen=True)
class ToleranceParams:
    """Numeric stand-ins for the theory's implicit asymptotic constants."""

    slack_A: float = 1.0                 # nats, replaces the o(n) slack
    c_R1: tuple[float, float] = (0.2, 0.2)   # (relative deviation, exception fraction)
    c_R2_hi: float = 4.0                 # max degree <= c_R2_hi * D
    c_R2_lo: float = 0.25                # min degree >= c_R2_lo * D
    c_R3: float = 0.5                    # max codegree <= c_R3 * D
    C_B: float = 4.0                     # maxr cap
    sigma_EF: tuple[float, float] = (0.2, 0.2)  # (relative deviation, exception fraction)
    theta_QV: float = 0.1
    sigma_C: tuple[float, float] = (0.2, 0.2)   # swap-bound slack and exception fraction
    wz_floor: float | None = None        # heavy-set floor ratio; None -> n^(-r)

    def __post_init__(self):
        for name, val in (("slack_A", self.slack_A), ("c_R2_hi", self.c_R2_hi),
                          ("c_R2_lo", self.c_R2_lo), ("c_R3", self.c_R3),
                          ("C_B", self.C_B), ("theta_QV", self.theta_QV)):
            if val <= 0:
                raise ValueError(f"{name} must be positive")
        for name, pair in (("c_R1", self.c_R1), ("sigma_EF", self.sigma_EF),
                           ("sigma_C", self.sigma_C)):
            dev, frac = pair
            if dev <= 0 or not 0 < frac < 1:
                raise ValueError(f"{name} needs positive deviation and fraction in (0,1)")

    def floor_ratio(self, n: int, r: int) -> Fraction:
        if self.wz_floor is not None:
            return Fraction(self.wz_floor).limit_denominator(10**12)
        return Fraction(1, n**r)


@dataclass(frozen=True)
class PropertyReport:
    property: str
    holds: bool
    params: dict
    witness: object = None            # offending vertex/edge/r-set or stats
    values: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def enc(obj):
            if isinstance(obj, Fraction):
                return f"{obj.numerator}/{obj.denominator}"
            if isinstance(obj, tuple):
                return list(obj)
            raise TypeError(f"not serializable: {type(obj)}")
        return json.dumps(asdict(self), default=enc, sort_keys=True)


def _frac(x: float | Fraction) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**12)


def _require_phi(H: Hypergraph) -> int:
    phi = count_pm(H)
    if phi == 0:
        raise NoPerfectMatchingError("property undefined: Phi(H) = 0")
    return phi


def _avg_degree(H: Hypergraph) -> Fraction:
    return Fraction(H.r * H.m, H.n_active)


def all_rsets(H: Hypergraph) -> list[int]:
    return [mask_of(c) for c in combinations(H.active_list(), H.r)]


# ---------------------------------------------------------------------------
# individual evaluators


def _eval_A(trace, t: int | None, params: ToleranceParams) -> PropertyReport:
    """log Phi_t > log Phi_0 - sum_{i<=t} gamma_i - slack, checked at high
    precision on the exact rationals carried by the trace."""
    steps = trace.steps
    if t is None:
        t = len(steps)
    if not 0 <= t <= len(steps):
        raise ValueError(f"step {t} outside trace of length {len(steps)}")
    phi_t = steps[t - 1].phi if t else trace.phi0
    gamma_sum = sum((s.gamma for s in steps[:t]), Fraction(0))
    if phi_t == 0:
        return PropertyReport("A", False, {"slack_A": params.slack_A, "t": t},
                              witness="Phi_t = 0",
                              values={"phi_t": 0, "gamma_sum": gamma_sum})
    with mpmath.workdps(_MP_DPS):
        # holds iff log(Phi_t/Phi_0) + sum gamma + slack > 0
        ratio = mpmath.mpf(phi_t) / mpmath.mpf(trace.phi0)
        margin = mpmath.log(ratio) \
            + mpmath.mpf(gamma_sum.numerator) / mpmath.mpf(gamma_sum.denominator) \
            + mpmath.mpf(params.slack_A)
        holds = margin > 0
        margin_f = float(margin)
    return PropertyReport("A", holds, {"slack_A": params.slack_A, "t": t},
                          witness=None if holds else "margin <= 0",
                          values={"margin_nats": margin_f, "gamma_sum": gamma_sum,
                                  "phi_ratio": Fraction(phi_t, trace.phi0)})


def _eval_R(H: Hypergraph, params: ToleranceParams) -> PropertyReport:
    D = _avg_degree(H)
    dev, frac = (_frac(x) for x in params.c_R1)
    active = H.active_list()
    degs = {v: H.degree(v) for v in active}
    bad = [v for v in active if abs(degs[v] - D) > dev * D]
    r1 = Fraction(len(bad)) <= frac * len(active)
    dmax, dmin = max(degs.values()), min(degs.values())
    r2 = dmax <= _frac(params.c_R2_hi) * D and dmin >= _frac(params.c_R2_lo) * D
    kappa = 0
    worst_pair = None
    for v, w in combinations(active, 2):
        c = H.codegree(v, w)
        if c > kappa:
            kappa, worst_pair = c, (v, w)
    r3 = kappa <= _frac(params.c_R3) * D
    holds = r1 and r2 and r3
    witness = None
    if not r1:
        witness = {"clause": "R1", "bad_vertices": bad[:10]}
    elif not r2:
        witness = {"clause": "R2", "min_degree": dmin, "max_degree": dmax}
    elif not r3:
        witness = {"clause": "R3", "pair": worst_pair, "codegree": kappa}
    return PropertyReport("R", holds,
                          {"c_R1": params.c_R1, "c_R2_hi": params.c_R2_hi,
                           "c_R2_lo": params.c_R2_lo, "c_R3": params.c_R3},
                          witness=witness,
                          values={"D": D, "min_degree": dmin, "max_degree": dmax,
                                  "max_codegree": kappa, "r1_exceptions": len(bad)})


def _eval_B(H: Hypergraph, params: ToleranceParams) -> PropertyReport:
    from .pm import maxr
    ratio = maxr(H)
    holds = ratio <= _frac(params.C_B)
    return PropertyReport("B", holds, {"C_B": params.C_B},
                          witness=None if holds else {"maxr": ratio},
                          values={"maxr": ratio})


def _exception_scan(H: Hypergraph, zs, phi: int, dev: Fraction,
                    center: Fraction = Fraction(1)):
    """r-sets whose weight is outside (1 +- dev) * center * Phi/D."""
    D = _avg_degree(H)
    target = center * Fraction(phi) / D
    lo, hi = (1 - dev) * target, (1 + dev) * target
    return [z for z in zs if not lo <= weight(H, z) <= hi]


def _eval_E(H: Hypergraph, params: ToleranceParams) -> PropertyReport:
    phi = _require_phi(H)
    dev, frac = (_frac(x) for x in params.sigma_EF)
    bad = _exception_scan(H, H.edges, phi, dev)
    holds = Fraction(len(bad)) <= frac * H.m
    return PropertyReport("E", holds, {"sigma_EF": params.sigma_EF},
                          witness=None if holds else {"exception_edges": bad[:10]},
                          values={"exceptions": len(bad), "family_size": H.m})


def _eval_F(H: Hypergraph, params: ToleranceParams) -> PropertyReport:
    phi = _require_phi(H)
    dev, frac = (_frac(x) for x in params.sigma_EF)
    zs = all_rsets(H)
    bad = _exception_scan(H, zs, phi, dev)
    holds = Fraction(len(bad)) <= frac * len(zs)
    return PropertyReport("F", holds, {"sigma_EF": params.sigma_EF},
                          witness=None if holds else {"exception_rsets": bad[:10]},
                          values={"exceptions": len(bad), "family_size": len(zs)})


def _eval_C(H: Hypergraph, params: ToleranceParams, Z: int, x: int) -> PropertyReport:
    phi = _require_phi(H)
    if not (Z >> x) & 1:
        raise MissingAuxError("x must be a vertex of Z")
    wz = weight(H, Z)
    floor = params.floor_ratio(H.n_active, H.r) * phi
    pre_ok = wz > floor
    dev, frac = (_frac(x_) for x_ in params.sigma_C)
    D = _avg_degree(H)
    dx = H.degree(x)
    bound = (1 - dev) * Fraction(wz * dx) / D
    ys = [y for y in H.active_list() if not (Z >> y) & 1]
    bad = [y for y in ys
           if weight(H, (Z & ~(1 << x)) | (1 << y)) < bound]
    holds = (not pre_ok) or Fraction(len(bad)) <= frac * len(ys)
    return PropertyReport("C", holds,
                          {"sigma_C": params.sigma_C, "wz_floor": params.wz_floor},
                          witness=None if holds else {"exception_ys": bad[:10]},
                          values={"w_Z": wz, "precondition_WZ": pre_ok,
                                  "exceptions": len(bad), "candidates": len(ys)})


def _eval_D(H: Hypergraph, params: ToleranceParams, Z0: int) -> PropertyReport:
    phi = _require_phi(H)
    wz0 = weight(H, Z0)
    floor = params.floor_ratio(H.n_active, H.r) * phi
    pre_ok = wz0 > floor
    dev, frac = (_frac(x) for x in params.sigma_C)
    D = _avg_degree(H)
    prod_deg = 1
    for x in vertices_of(Z0):
        prod_deg *= H.degree(x)
    bound = (1 - dev) * Fraction(wz0 * prod_deg) / D**H.r
    zs = all_rsets(H)
    bad = [z for z in zs if weight(H, z) < bound]
    holds = (not pre_ok) or Fraction(len(bad)) <= frac * len(zs)
    return PropertyReport("D", holds,
                          {"sigma_C": params.sigma_C, "wz_floor": params.wz_floor},
                          witness=None if holds else {"exception_rsets": bad[:10]},
                          values={"w_Z0": wz0, "precondition_WZ": pre_ok,
                                  "bound": bound, "exceptions": len(bad)})


def _eval_Q(H: Hypergraph, params: ToleranceParams) -> PropertyReport:
    phi = _require_phi(H)
    theta = _frac(params.theta_QV)
    dev, frac = (_frac(x) for x in params.sigma_EF)
    bad_edges = _exception_scan(H, H.edges, phi, dev)
    first = Fraction(len(bad_edges)) <= frac * H.m
    edge_set = set(H.edges)
    non_edges = [z for z in all_rsets(H) if z not in edge_set]
    deviating = _exception_scan(H, non_edges, phi, 2 * theta)
    second = Fraction(len(deviating)) >= 2 * theta * len(non_edges)
    holds = first and second
    return PropertyReport("Q", holds,
                          {"theta_QV": params.theta_QV, "sigma_EF": params.sigma_EF},
                          witness=None if holds else
                          {"edge_clause": first, "non_edge_clause": second},
                          values={"edge_exceptions": len(bad_edges),
                                  "deviating_non_edges": len(deviating),
                                  "non_edges": len(non_edges)})


def _eval_V(H: Hypergraph, params: ToleranceParams, T_set, theta, zeta) -> PropertyReport:
    """w_F(A) near zeta*Phi/D for a.e. A in T, while a theta fraction of
    non-edges of H still deviate; F = H minus T."""
    phi = _require_phi(H)
    theta = _frac(theta)
    zeta = _frac(zeta)
    T = set(T_set)
    if not T <= set(H.edges):
        raise MissingAuxError("T must be a subset of the edges of H")
    F = H.with_edges([e for e in H.edges if e not in T])
    D = _avg_degree(H)
    target = zeta * Fraction(phi) / D
    dev, frac = (_frac(x) for x in params.sigma_EF)
    bad_T = [a for a in T
             if not (1 - dev) * target <= weight(F, a) <= (1 + dev) * target]
    first = Fraction(len(bad_T)) <= frac * len(T)
    edge_set = set(H.edges)
    non_edges = [z for z in all_rsets(H) if z not in edge_set]
    deviating = [z for z in non_edges
                 if not (1 - theta) * target <= weight(F, z) <= (1 + theta) * target]
    second = Fraction(len(deviating)) >= theta * len(non_edges)
    holds = first and second
    return PropertyReport("V", holds,
                          {"theta": float(theta), "zeta": float(zeta),
                           "sigma_EF": params.sigma_EF},
                          witness=None if holds else
                          {"T_clause": first, "non_edge_clause": second},
                          values={"T_exceptions": len(bad_T),
                                  "deviating_non_edges": len(deviating),
                                  "non_edges": len(non_edges)})


def evaluate_property(obj, which: str, params: ToleranceParams | None = None,
                      aux: dict | None = None) -> PropertyReport:
    """Single entry point; ``obj`` is a Hypergraph (most properties) or a
    DeletionTrace (property A).  ``aux`` carries per-property extras."""
    params = params or ToleranceParams()
    aux = aux or {}
    if which == "A":
        return _eval_A(obj, aux.get("t"), params)
    if not isinstance(obj, Hypergraph):
        raise TypeError(f"property {which} needs a Hypergraph input")
    if which == "R":
        return _eval_R(obj, params)
    if which == "B":
        return _eval_B(obj, params)
    if which == "C":
        if "Z" not in aux or "x" not in aux:
            raise MissingAuxError("property C needs aux Z (r-set mask) and x (vertex)")
        return _eval_C(obj, params, aux["Z"], aux["x"])
    if which == "D":
        if "Z0" not in aux:
            raise MissingAuxError("property D needs aux Z0 (r-set mask)")
        return _eval_D(obj, params, aux["Z0"])
    if which == "E":
        return _eval_E(obj, params)
    if which == "F":
        return _eval_F(obj, params)
    if which == "Q":
        return _eval_Q(obj, params)
    if which == "V":
        for key in ("T_set", "theta", "zeta"):
            if key not in aux:
                raise MissingAuxError(f"property V needs aux {key}")
        return _eval_V(obj, params, aux["T_set"], aux["theta"], aux["zeta"])
    raise ValueError(f"unknown property id {which!r}")


# ---------------------------------------------------------------------------
# alpha(H): quantitative distance from property F


def alpha(H: Hypergraph) -> Fraction:
    """inf of alpha such that fewer than alpha*|K| r-sets have weight outside
    (1 +- alpha) * Phi/D.  Exact rational scan over sorted deviations."""
    phi = _require_phi(H)
    D = _avg_degree(H)
    zs = all_rsets(H)
    K = len(zs)
    devs = sorted(abs(Fraction(weight(H, z)) * D / phi - 1) for z in zs)
    # distinct deviation values define intervals on which the exception count
    # #(dev > a) is constant; the feasible set is an up-set, so take the min
    # over intervals of the inf of their feasible part
    uniq = sorted(set(devs) | {Fraction(0)})
    best: Fraction | None = None
    for j, d in enumerate(uniq):
        count = sum(1 for x in devs if x > d)     # exceptions for a in [d, next)
        nxt = uniq[j + 1] if j + 1 < len(uniq) else None
        lo = max(d, Fraction(count, K))           # inf of feasible part
        if nxt is not None and lo >= nxt:
            continue
        if best is None or lo < best:
            best = lo
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# finite replay of the R & D & F => B derivation


def rdefb_cap(params: ToleranceParams, r: int) -> Fraction:
    """C_B that the chain R, D, F forces at the given tolerances.

    From D: a.e. Z has w(Z) >= (1-dev_C) * w(Z0) * D^-r * prod d(x)
            >= (1-dev_C) * c_R2_lo^r * w(Z0)  (using R2's degree floor).
    From F: some such Z also has w(Z) <= (1+dev_EF) * Phi/D, provided the two
    exception fractions leave room, so
            maxr <= w(Z0) * D / Phi <= (1+dev_EF) / ((1-dev_C) * c_R2_lo^r).
    """
    dev_c = _frac(params.sigma_C[0])
    dev_ef = _frac(params.sigma_EF[0])
    lo = _frac(params.c_R2_lo)
    return (1 + dev_ef) / ((1 - dev_c) * lo ** r)


def rdefb_replay(H: Hypergraph, params: ToleranceParams) -> dict:
    """Check, on a concrete instance, that R & D & F holding at the given
    tolerances forces B with the cap implied by the derivation."""
    cap = rdefb_cap(params, H.r)
    frac_c = _frac(params.sigma_C[1])
    frac_ef = _frac(params.sigma_EF[1])
    if frac_c + frac_ef >= 1:
        raise ValueError("exception fractions must leave a common r-set")
    phi = _require_phi(H)
    z0 = max(all_rsets(H), key=lambda z: weight(H, z))
    rep_r = _eval_R(H, params)
    rep_d = _eval_D(H, params, z0)
    rep_f = _eval_F(H, params)
    premises = rep_r.holds and rep_d.holds and rep_f.holds
    from .pm import maxr as _maxr
    ratio = _maxr(H)
    return {"premises_hold": premises, "maxr": ratio, "cap": cap,
            "conclusion_holds": (not premises) or ratio <= cap}
