"""Closed-form tail bounds and a Monte-Carlo harness that audits them.

The bounds: the fine/coarse Chernoff pair for sums of independent or
hypergeometric-like variables, a multiplicative variant for large-deviation
factors K, and a supermartingale bound whose free parameter is chosen by the
same two-regime rule the analysis uses (not numerically optimized, so the
produced numbers match the displayed forms exactly).

Everything is computed in log space and clamped to [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def phi_cramer(x: float) -> float:
    """(1+x) log(1+x) - x, with the continuous extension phi(-1) = 1."""
    if x < -1:
        raise ValueError("phi is defined on [-1, inf)")
    if x == -1:
        return 1.0
    if x == 0:
        return 0.0
    return (1 + x) * math.log(1 + x) - x


def _clamp_exp(log_value: float) -> float:
    return min(1.0, math.exp(min(log_value, 0.0)))


@dataclass(frozen=True)
class TailBound:
    kind: str                       # chernoff-upper | chernoff-lower | cher-prime | azuma
    inputs: dict
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("bound must be clamped to [0,1]")


def chernoff_bounds(mu: float, t: float) -> tuple[float, float, float, float]:
    """(upper_fine, upper_coarse, lower_fine, lower_coarse) at deviation t.

    upper_fine  = exp[-mu phi(t/mu)]      >= P(X >= mu + t)
    upper_coarse= exp[-t^2/(2(mu + t/3))]
    lower_fine  = exp[-mu phi(-t/mu)]     >= P(X <= mu - t), t <= mu
    lower_coarse= exp[-t^2/(2 mu)]
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    upper_fine = _clamp_exp(-mu * phi_cramer(t / mu))
    upper_coarse = _clamp_exp(-t * t / (2 * (mu + t / 3)))
    if t <= mu:
        lower_fine = _clamp_exp(-mu * phi_cramer(-t / mu))
    else:
        lower_fine = 0.0            # P(X <= negative) for nonnegative X
    lower_coarse = _clamp_exp(-t * t / (2 * mu))
    return upper_fine, upper_coarse, lower_fine, lower_coarse


def cher_prime(mu: float, K: float) -> float:
    """exp[-K mu log(K/e)], the multiplicative upper tail at K mu; clamped."""
    if mu <= 0 or K <= 0:
        raise ValueError("mu and K must be positive")
    return _clamp_exp(-K * mu * math.log(K / math.e))


def azuma_bound(pairs, lam: float) -> float:
    """Supermartingale tail with per-step ranges.

    Each step's increment has conditional mean <= 0, lower range a_i and
    upper range b_i.  With J = sum a_i b_i and theta* = min(1/(2 max b_i),
    lam/(2J)), the bound is exp(J theta*^2 - theta* lam); in the small-lambda
    regime this is exp(-lam^2/(4J)).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one (a, b) pair")
    for a, b in pairs:
        if not (0 < a <= b):
            raise ValueError("each pair needs 0 < a <= b")
    J = sum(a * b for a, b in pairs)
    bmax = max(b for _, b in pairs)
    theta = min(1.0 / (2 * bmax), lam / (2 * J))
    return _clamp_exp(J * theta * theta - theta * lam)


def eez_grid_scan(x_step: float = 1e-3, p_step: float = 1e-2,
                  tol: float = 1e-12):
    """Scan e^{-xp}(1 - p + p e^x) <= e^{x^2 p} + tol over the default grid.

    Yields rows (x, p, lhs, rhs, slack); slack = rhs - lhs, and a violation is
    slack < -tol.  Returns (violations, rows).
    """
    xs = np.arange(-0.5, 0.5 + x_step / 2, x_step)
    ps = np.arange(0.0, 1.0 + p_step / 2, p_step)
    rows = []
    violations = 0
    for p in ps:
        lhs = np.exp(-xs * p) * (1 - p + p * np.exp(xs))
        rhs = np.exp(xs * xs * p)
        slack = rhs - lhs
        violations += int((slack < -tol).sum())
        for x, l, r, s in zip(xs, lhs, rhs, slack):
            rows.append((float(x), float(p), float(l), float(r), float(s)))
    return violations, rows


def eez_scan_csv(rows) -> str:
    out = ["x,p,lhs,rhs,slack"]
    for x, p, l, r, s in rows:
        out.append(f"{x:.12g},{p:.12g},{l:.12g},{r:.12g},{s:.12g}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Monte-Carlo audit


def mc_slack(bound: float, trials: int) -> float:
    return 3 * math.sqrt(bound * (1 - bound) / trials) + 3 / trials


@dataclass(frozen=True)
class MCTailResult:
    dist: str
    params: dict
    tail: str                       # "upper" | "lower"
    threshold: float
    trials: int
    seed: int
    empirical: float
    bound: float
    bound_kind: str
    ok: bool


def mc_tail_check(dist: str, params: dict, threshold: float, trials: int,
                  seed: int, tail: str = "upper",
                  bound_kind: str = "chernoff") -> MCTailResult:
    """Empirical tail frequency vs the closed-form bound plus MC slack.

    dist: "binomial" with {"N", "p"} or "hypergeometric" with {"s", "a", "k"}
    (draw a uniform k-subset of an s-set and count hits in a fixed a-subset).
    bound_kind "chernoff" uses the fine form on the requested side;
    "cher-prime" treats threshold as K*mu on the upper tail.
    """
    if trials < 10_000:
        raise ValueError("trials must be >= 10^4")
    if tail not in ("upper", "lower"):
        raise ValueError("tail must be 'upper' or 'lower'")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 3)))
    if dist == "binomial":
        N, p = int(params["N"]), float(params["p"])
        if not (N > 0 and 0 < p < 1):
            raise ValueError("binomial needs N > 0, 0 < p < 1")
        mu = N * p
        draws = rng.binomial(N, p, size=trials)
    elif dist == "hypergeometric":
        s, a, k = int(params["s"]), int(params["a"]), int(params["k"])
        if not (0 < a < s and 0 < k < s):
            raise ValueError("hypergeometric needs 0 < a, k < s")
        mu = k * a / s
        draws = rng.hypergeometric(a, s - a, k, size=trials)
    else:
        raise ValueError(f"unknown distribution {dist!r}")

    if tail == "upper":
        empirical = float((draws >= threshold).mean())
        t = max(threshold - mu, 0.0)
        if bound_kind == "cher-prime":
            bound = cher_prime(mu, threshold / mu) if threshold > 0 else 1.0
        else:
            bound = chernoff_bounds(mu, t)[0]
    else:
        empirical = float((draws <= threshold).mean())
        t = max(mu - threshold, 0.0)
        bound = chernoff_bounds(mu, t)[2] if t <= mu else 0.0
        if bound_kind == "cher-prime":
            raise ValueError("cher-prime is an upper-tail bound")
    ok = empirical <= bound + mc_slack(bound, trials)
    return MCTailResult(dist, dict(params), tail, threshold, trials, seed,
                        empirical, bound, bound_kind, ok)
