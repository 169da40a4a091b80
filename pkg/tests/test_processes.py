import math
from fractions import Fraction

import mpmath
import pytest

from hypermatch.hypergraph import complete, mask_of
from hypermatch.pm import count_pm, weight
from hypermatch.processes import (DeletionTrace, EdgePermutation,
                                  hitting_time, run_deletion_trace,
                                  run_hitting_experiment, run_reduction_sim,
                                  sample_permutation, trace_to_csv,
                                  wilson_interval)


def test_sample_permutation_structure():
    perm = sample_permutation(6, 3, 7)
    assert len(perm.order) == 20
    assert len(set(perm.order)) == 20
    assert list(perm.labels) == sorted(perm.labels)
    assert sample_permutation(6, 3, 7) == perm          # determinism
    assert sample_permutation(6, 3, 8) != perm


def test_first_edge_uniform_chi2():
    # first edge over many seeds should be uniform on the 20 r-sets
    counts = {}
    trials = 10_000
    for i in range(trials):
        perm = sample_permutation(6, 3, (99, i))
        counts[perm.order[0]] = counts.get(perm.order[0], 0) + 1
    exp = trials / 20
    chi2 = sum((c - exp) ** 2 / exp for c in counts.values())
    # p-value via the regularized upper incomplete gamma, df = 19
    p = float(mpmath.gammainc(19 / 2, chi2 / 2, mpmath.inf, regularized=True))
    assert p > 0.001


def test_hitting_invariants():
    for seed in range(10):
        perm = sample_permutation(9, 3, seed)
        res = hitting_time(perm)
        assert res.T_hit >= 3                            # n/r edges at least
        full = (1 << 9) - 1
        cover = 0
        for e in perm.order[:res.T_hit]:
            cover |= e
        assert cover == full
        cover_prev = 0
        for e in perm.order[:res.T_hit - 1]:
            cover_prev |= e
        assert cover_prev != full
        # invariant under permuting edges after position T
        tail = tuple(reversed(perm.order[res.T_hit:]))
        labels2 = tuple(perm.labels[:res.T_hit]) + tuple(
            sorted(perm.labels[res.T_hit:]))
        perm2 = EdgePermutation(9, 3, perm.order[:res.T_hit] + tail,
                                labels2, perm.seed)
        assert hitting_time(perm2).T_hit == res.T_hit
        assert hitting_time(perm2).phi_at_T == res.phi_at_T


def test_hitting_n_equals_r():
    res = hitting_time(sample_permutation(3, 3, 1))
    assert res.T_hit == 1 and res.has_pm and res.phi_at_T == 1


def test_hitting_experiment_replay_and_workers():
    r1, s1 = run_hitting_experiment(9, 3, 24, 5, workers=1)
    r2, s2 = run_hitting_experiment(9, 3, 24, 5, workers=4)
    assert r1 == r2 and s1 == s2
    lo, hi = s1["wilson_lo"], s1["wilson_hi"]
    assert 0 <= lo <= s1["p_hat"] <= hi <= 1


def test_wilson_interval_basic():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and hi < 0.05
    lo, hi = wilson_interval(100, 100)
    assert hi > 0.999 and lo > 0.95


def test_trace_first_step_exhaustive():
    # every possible first edge of K(6,3) gives xi_1 = 1/10 = gamma_1
    K = complete(6, 3)
    phi = count_pm(K)
    for A in K.edges:
        assert Fraction(weight(K, A), phi) == Fraction(1, 10)
    tr = run_deletion_trace(6, 3, 19, 0, evaluate_flags=False)
    assert tr.steps[0].xi == Fraction(1, 10)
    assert tr.steps[0].gamma == Fraction(1, 10)
    assert tr.steps[0].X == 0


def test_trace_conditional_mean_is_gamma():
    # at 5 random prefixes of an n=9 process, the exact average of xi over
    # all remaining candidate edges equals gamma
    for seed in range(5):
        perm = sample_permutation(9, 3, seed)
        K = complete(9, 3)
        t = 5 + seed * 7
        H = K
        for e in perm.order[:t - 1]:
            H = H.remove_edge(e)
        phi = count_pm(H)
        if phi == 0:
            continue
        avg = sum(Fraction(weight(H, A), phi) for A in H.edges) / H.m
        assert avg == Fraction(3, math.comb(9, 3) - t + 1)


def test_trace_product_identity_and_flags():
    tr = run_deletion_trace(6, 3, 8, 3)
    assert tr.phi0 == 10
    prod = Fraction(1)
    for s in tr.steps:
        prod *= 1 - s.xi
        assert 0 <= s.xi <= 1
        assert Fraction(s.phi, tr.phi0) == prod
    assert tr.steps[0].flag_A is not None


def test_trace_zeroing_rule():
    tr = run_deletion_trace(6, 3, 2, 12)
    # find the first step where B fails; X must stay frozen afterwards
    fail = next((i for i, s in enumerate(tr.steps) if not s.flag_B), None)
    if fail is not None:
        frozen = tr.steps[fail + 1].X if fail + 1 < len(tr.steps) else None
        for s in tr.steps[fail + 2:]:
            assert s.X == frozen


def test_trace_abort_on_phi_zero():
    tr = run_deletion_trace(6, 3, 0, 12, evaluate_flags=False)
    if tr.aborted_at is not None:
        assert tr.steps[-1].phi == 0 or len(tr.steps) == tr.aborted_at - 1


def test_trace_csv_shape():
    tr = run_deletion_trace(6, 3, 15, 1)
    csv = trace_to_csv(tr)
    lines = csv.strip().splitlines()
    assert lines[0] == ("step,edge,xi_num,xi_den,gamma_num,gamma_den,"
                        "phi_decimal,X_t,flagA,flagB,flagR")
    assert len(lines) == len(tr.steps) + 1


def test_reduction_report_consistency():
    g = math.log(math.log(20))
    rep = run_reduction_sim(20, 3, 0.2, g, 17)
    assert rep.delta0 == math.floor(0.2 * math.log(20))
    # the three vertex classes partition V
    assert sorted(set(rep.W_sigma) | set(rep.U) | set(rep.W)) == list(range(20))
    assert not set(rep.W_sigma) & set(rep.W)
    assert rep.n_prime == len(rep.W)
    assert set(rep.delta_x) == set(rep.W)
    if rep.check_c and rep.check_b:
        assert rep.delta_x_in_range
    assert run_reduction_sim(20, 3, 0.2, g, 17) == rep  # determinism


def test_reduction_validation():
    with pytest.raises(ValueError):
        run_reduction_sim(20, 3, 1.5, 1.0, 0)
    with pytest.raises(ValueError):
        run_reduction_sim(20, 3, 0.2, -1.0, 0)
