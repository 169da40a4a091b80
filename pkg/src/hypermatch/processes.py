"""Random processes on the complete r-graph.

Three simulators:

* the deletion process: remove a uniformly ordered stream of r-sets from K,
  tracking the exact PM-fraction increments, their conditional means, the
  compensated martingale sum with its B-failure zeroing rule, and property
  flags per step;
* the hitting-time process: grow the edge stream until it covers V, then
  count perfect matchings of the grown hypergraph;
* the stopping-label reduction: couple the process to iid uniform edge
  labels, build the low-degree vertex set at the early threshold, the
  repair edges, the trimmed vertex set and the residual degree demands,
  and evaluate the construction's structural checks.

PRNG contract: numpy's default PCG64 generator, seeded through SeedSequence;
trial i of an experiment with base seed s uses SeedSequence((s, i)), so
serial and parallel runs agree exactly.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .hypergraph import Hypergraph, complete, mask_of, popcount, remove_rset, vertices_of
from .pm import count_pm, log_big, weight
from .properties import ToleranceParams, evaluate_property

WILSON_Z = 1.96


def child_rng(seed, *key) -> np.random.Generator:
    """Deterministic derived generator: SeedSequence((seed, *key)), PCG64."""
    if isinstance(seed, tuple):
        entropy = seed + key
    else:
        entropy = (seed,) + key
    return np.random.default_rng(np.random.SeedSequence(entropy))


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


# ---------------------------------------------------------------------------
# uniform edge orderings via the label coupling


@dataclass(frozen=True)
class EdgePermutation:
    n: int
    r: int
    order: tuple[int, ...]          # edge masks, ascending label
    labels: tuple[float, ...]       # label of order[i]; strictly increasing
    seed: object

    def __post_init__(self):
        if len(set(self.order)) != len(self.order):
            raise ValueError("order is not a bijection")
        if any(b <= a for a, b in zip(self.labels, self.labels[1:])):
            raise ValueError("labels must be strictly increasing along order")


def sample_permutation(n: int, r: int, seed) -> EdgePermutation:
    """Uniform ordering of all r-sets of [n], realized by iid U[0,1] labels."""
    K = complete(n, r)
    rng = child_rng(seed, 0)
    while True:
        labels = rng.random(K.m)
        if len(np.unique(labels)) == K.m:
            break
    idx = np.argsort(labels, kind="stable")
    return EdgePermutation(n, r,
                           tuple(K.edges[i] for i in idx),
                           tuple(float(labels[i]) for i in idx),
                           seed)


# ---------------------------------------------------------------------------
# hitting time


@dataclass(frozen=True)
class HittingResult:
    n: int
    r: int
    T_hit: int
    has_pm: bool
    phi_at_T: int
    log_phi: float                  # nats; -inf when phi = 0
    benchmark: float                # (n/r) * log(e^-(r-1) * log n)


def hitting_benchmark(n: int, r: int) -> float:
    return (n / r) * math.log(math.exp(-(r - 1)) * math.log(n))


def hitting_time(perm: EdgePermutation) -> HittingResult:
    n, r = perm.n, perm.r
    full = (1 << n) - 1
    covered = 0
    T = 0
    for e in perm.order:
        T += 1
        covered |= e
        if covered == full:
            break
    H_T = Hypergraph(n, r, tuple(sorted(perm.order[:T])), full)
    phi = count_pm(H_T)
    return HittingResult(n, r, T, phi > 0, phi,
                         log_big(phi) if phi > 0 else float("-inf"),
                         hitting_benchmark(n, r))


def _hitting_trial(args) -> HittingResult:
    n, r, seed, i = args
    return hitting_time(sample_permutation(n, r, (seed, i)))


def run_hitting_experiment(n: int, r: int, trials: int, seed: int,
                           workers: int = 1) -> tuple[list[HittingResult], dict]:
    """Repeated hitting-time runs with derived per-trial seeds.

    Returns per-trial results (in trial order, regardless of workers) and a
    summary dict with the success estimate and log-Phi comparison.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    arglist = [(n, r, seed, i) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_hitting_trial, arglist, chunksize=16))
    else:
        results = [_hitting_trial(a) for a in arglist]
    successes = sum(1 for res in results if res.has_pm)
    lo, hi = wilson_interval(successes, trials)
    logs = [res.log_phi for res in results if res.has_pm]
    summary = {
        "n": n, "r": r, "trials": trials, "seed": seed,
        "successes": successes,
        "p_hat": successes / trials,
        "wilson_lo": lo, "wilson_hi": hi,
        "mean_log_phi": (sum(logs) / len(logs)) if logs else None,
        "benchmark": hitting_benchmark(n, r),
    }
    return results, summary


# ---------------------------------------------------------------------------
# deletion process with martingale trace


@dataclass(frozen=True)
class TraceStep:
    step: int
    edge: int
    xi: Fraction
    gamma: Fraction
    phi: int                        # Phi after this step
    X: Fraction                     # compensated sum after this step
    flag_A: bool | None
    flag_B: bool | None
    flag_R: bool | None


@dataclass(frozen=True)
class DeletionTrace:
    n: int
    r: int
    seed: object
    M_final: int
    phi0: int
    steps: tuple[TraceStep, ...]
    aborted_at: int | None          # step at which Phi hit 0, if any
    params: ToleranceParams | None  # tolerances used for the flags


def run_deletion_trace(n: int, r: int, M_final: int, seed,
                       params: ToleranceParams | None = None,
                       evaluate_flags: bool = True,
                       perm: EdgePermutation | None = None) -> DeletionTrace:
    """Delete C(n,r) - M_final uniformly ordered r-sets from K.

    Per step i the trace records the exact increment xi_i, its conditional
    mean gamma_i = (n/r)/(C(n,r)-i+1), Phi_i, the compensated sum X with the
    B-failure zeroing rule, and property flags for the current hypergraph.
    Aborts with a partial trace if Phi reaches 0 before the horizon.
    """
    if n % r:
        raise ValueError("deletion trace needs r | n")
    if perm is None:
        perm = sample_permutation(n, r, seed)
    K = complete(n, r)
    if not 0 <= M_final <= K.m:
        raise ValueError(f"M_final must be in [0, {K.m}]")
    T_steps = K.m - M_final
    params = params or ToleranceParams()

    H = K
    phi = count_pm(K)
    phi0 = phi
    steps: list[TraceStep] = []
    X = Fraction(0)
    b_all_prior = True              # B holds on H_0 ... H_{i-1}
    if evaluate_flags:
        b_all_prior = evaluate_property(K, "B", params).holds
    aborted_at = None
    gamma_partial = Fraction(0)

    for i in range(1, T_steps + 1):
        A = perm.order[i - 1]
        if phi == 0:
            aborted_at = i
            break
        w = weight(H, A)
        xi = Fraction(w, phi)
        gamma = Fraction(n // r, K.m - i + 1)
        gamma_partial += gamma
        if b_all_prior:
            X += xi - gamma
        H = H.remove_edge(A)
        phi = phi - w
        flag_a = flag_b = flag_r = None
        if evaluate_flags:
            flag_b = phi > 0 and evaluate_property(H, "B", params).holds
            flag_r = evaluate_property(H, "R", params).holds
            # property A for the trace so far, evaluated inline on the exact
            # rationals (same comparison as the properties module)
            import mpmath
            if phi > 0:
                with mpmath.workdps(60):
                    margin = mpmath.log(mpmath.mpf(phi) / mpmath.mpf(phi0)) \
                        + mpmath.mpf(gamma_partial.numerator) / mpmath.mpf(gamma_partial.denominator) \
                        + mpmath.mpf(params.slack_A)
                    flag_a = bool(margin > 0)
            else:
                flag_a = False
        steps.append(TraceStep(i, A, xi, gamma, phi, X, flag_a, flag_b, flag_r))
        if evaluate_flags and not flag_b:
            b_all_prior = False

    return DeletionTrace(n, r, seed, M_final, phi0, tuple(steps), aborted_at,
                         params if evaluate_flags else None)


def trace_to_csv(trace: DeletionTrace) -> str:
    lines = ["step,edge,xi_num,xi_den,gamma_num,gamma_den,phi_decimal,X_t,flagA,flagB,flagR"]
    for s in trace.steps:
        flags = [("" if f is None else str(int(f)))
                 for f in (s.flag_A, s.flag_B, s.flag_R)]
        lines.append(",".join([
            str(s.step),
            "+".join(str(v + 1) for v in vertices_of(s.edge)),
            str(s.xi.numerator), str(s.xi.denominator),
            str(s.gamma.numerator), str(s.gamma.denominator),
            str(s.phi),
            f"{s.X.numerator}/{s.X.denominator}",
            *flags,
        ]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# stopping-label reduction


@dataclass(frozen=True)
class ReductionReport:
    n: int
    r: int
    eps: float
    g_value: float
    seed: object
    delta0: int
    sigma: float
    beta: float
    alpha_exponent: float           # the a in the |W_sigma| < n^(2a) check
    lambda_obs: float               # observed stopping label
    W_sigma: tuple[int, ...]
    A_x: dict                       # x -> repair edge mask (x in W_sigma)
    U: tuple[int, ...]
    W: tuple[int, ...]
    n_prime: int
    delta_x: dict                   # x in W -> residual degree demand
    hstar_edges: int
    check_a: bool
    check_b: bool
    check_c: bool
    check_whp2: bool
    delta_x_in_range: bool          # all delta_x in {delta0, delta0 - 1}

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["W_sigma"] = list(self.W_sigma)
        d["U"] = list(self.U)
        d["W"] = list(self.W)
        d["A_x"] = {str(k): v for k, v in self.A_x.items()}
        d["delta_x"] = {str(k): v for k, v in self.delta_x.items()}
        return d


def run_reduction_sim(n: int, r: int, eps: float, g_value: float, seed) -> ReductionReport:
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0,1)")
    if g_value <= 0:
        raise ValueError("g_value must be positive")
    K = complete(n, r)
    rng = child_rng(seed, 1)
    while True:
        labels = rng.random(K.m)
        if len(np.unique(labels)) == K.m:
            break

    delta0 = math.floor(eps * math.log(n))
    per_vertex = math.comb(n - 1, r - 1)
    sigma = (math.log(n) - g_value) / per_vertex
    beta = (math.log(n) + g_value) / per_vertex
    alpha_exp = eps * math.log(math.e / eps)

    # stopping label: every vertex covered
    vertex_min = [min(float(labels[i]) for i, e in enumerate(K.edges) if (e >> v) & 1)
                  for v in range(n)]
    lam = max(vertex_min)

    def deg_at(v: int, level: float) -> int:
        return sum(1 for i, e in enumerate(K.edges)
                   if (e >> v) & 1 and labels[i] <= level)

    W_sigma = tuple(v for v in range(n) if deg_at(v, sigma) < delta0)
    ws_mask = mask_of(W_sigma)
    check_a = bool(len(W_sigma) < n ** (2 * alpha_exp))
    check_b = bool(sigma < lam < beta)

    g_beta = [e for i, e in enumerate(K.edges) if labels[i] <= beta]
    y_mask = ws_mask
    for e in g_beta:
        if e & ws_mask:
            y_mask |= e
    ok_c = all(popcount(e & ws_mask) <= 1 for e in g_beta)
    if ok_c:
        for u in range(n):
            if (ws_mask >> u) & 1:
                continue
            hits = sum(1 for e in g_beta
                       if (e >> u) & 1 and e & (y_mask & ~(1 << u)))
            if hits > 1:
                ok_c = False
                break
    check_c = ok_c

    # repair edge for each low-degree vertex: first lambda-edge (in the
    # canonical ascending-mask order) containing it; edges are already sorted
    A_x: dict[int, int] = {}
    for x in W_sigma:
        for i, e in enumerate(K.edges):
            if (e >> x) & 1 and labels[i] <= lam:
                A_x[x] = e
                break

    u_mask = 0
    for e in A_x.values():
        u_mask |= e
    u_mask &= ~ws_mask
    w_mask = ((1 << n) - 1) & ~(ws_mask | u_mask)
    W = tuple(vertices_of(w_mask))

    g_sigma = [e for i, e in enumerate(K.edges) if labels[i] <= sigma]
    blocked = ws_mask | u_mask
    check_whp2 = all(
        sum(1 for e in g_sigma if (e >> u) & 1 and e & blocked) <= 1
        for u in W)
    delta_x = {x: delta0 - sum(1 for e in g_sigma if (e >> x) & 1 and e & blocked)
               for x in W}
    in_range = all(d in (delta0, delta0 - 1) for d in delta_x.values())
    hstar_edges = sum(1 for e in g_sigma if e & ~w_mask == 0)

    return ReductionReport(n, r, eps, g_value, seed, delta0, sigma, beta,
                           alpha_exp, lam, W_sigma, A_x,
                           tuple(vertices_of(u_mask)), W, len(W), delta_x,
                           hstar_edges, check_a, check_b, check_c, check_whp2,
                           in_range)
