import json
from fractions import Fraction

import numpy as np
import pytest

from hypermatch.hypergraph import complete, mask_of, random_hypergraph
from hypermatch.pm import NoPerfectMatchingError, count_pm, enumerate_pms, weight
from hypermatch.processes import run_deletion_trace
from hypermatch.properties import (MissingAuxError, ToleranceParams, alpha,
                                   evaluate_property, rdefb_cap, rdefb_replay)


def single_pm_h():
    return complete(6, 3).with_edges([mask_of([0, 1, 2]), mask_of([3, 4, 5])])


def test_params_validation():
    with pytest.raises(ValueError):
        ToleranceParams(C_B=0)
    with pytest.raises(ValueError):
        ToleranceParams(sigma_EF=(0.1, 1.5))
    assert ToleranceParams().floor_ratio(6, 3) == Fraction(1, 216)


def test_property_B():
    assert evaluate_property(complete(9, 3), "B",
                             ToleranceParams(C_B=1.0)).holds
    rep = evaluate_property(single_pm_h(), "B")
    assert rep.holds and rep.values["maxr"] == 1


def test_property_F_examples():
    assert evaluate_property(complete(6, 3), "F",
                             ToleranceParams(sigma_EF=(0.01, 0.01))).holds
    rep = evaluate_property(single_pm_h(), "F",
                            ToleranceParams(sigma_EF=(0.1, 0.1)))
    assert not rep.holds
    assert rep.values["exceptions"] == 18
    assert rep.witness is not None          # witness required on failure


def test_property_R_complete():
    rep = evaluate_property(complete(9, 3), "R")
    assert rep.holds
    assert rep.values["max_codegree"] == 7


def test_property_E_Q():
    K = complete(6, 3)
    assert evaluate_property(K, "E").holds
    # with no non-edges, Q's deviation clause is vacuous
    assert evaluate_property(K, "Q").holds
    # K minus one edge: the single non-edge barely deviates, so Q fails
    H = K.remove_edge(K.edges[0])
    rep = evaluate_property(H, "Q")
    assert not rep.holds
    assert rep.values["non_edges"] == 1


def test_property_C_D_on_complete():
    K = complete(6, 3)
    Z = mask_of([0, 1, 2])
    rep = evaluate_property(K, "C", aux={"Z": Z, "x": 0})
    assert rep.holds
    rep_d = evaluate_property(K, "D", aux={"Z0": Z})
    assert rep_d.holds
    with pytest.raises(MissingAuxError):
        evaluate_property(K, "C")
    with pytest.raises(MissingAuxError):
        evaluate_property(K, "V")


def test_property_V_basic():
    K = complete(6, 3)
    T = list(K.edges[:4])
    rep = evaluate_property(K, "V",
                            aux={"T_set": T, "theta": 0.1, "zeta": 0.9})
    assert rep.property == "V"
    assert isinstance(rep.holds, bool)


def test_property_A_on_trace():
    tr = run_deletion_trace(6, 3, 10, 2, evaluate_flags=False)
    rep = evaluate_property(tr, "A", ToleranceParams(slack_A=0.5),
                            aux={"t": len(tr.steps)})
    # verdict must equal the direct rational computation
    import math
    gamma_sum = float(sum(s.gamma for s in tr.steps))
    expected = math.log(tr.steps[-1].phi) > math.log(10) - gamma_sum - 0.5
    assert rep.holds == expected


def test_phi_zero_signal():
    H = complete(6, 3).with_edges([mask_of([0, 1, 2])])
    with pytest.raises(NoPerfectMatchingError):
        evaluate_property(H, "F")


def test_report_json_roundtrip():
    rep = evaluate_property(complete(6, 3), "B")
    data = json.loads(rep.to_json())
    assert data["property"] == "B"
    assert data["values"]["maxr"] == "1/1"


def test_alpha_examples():
    assert alpha(complete(6, 3)) == 0
    assert alpha(single_pm_h()) == Fraction(9, 10)


def test_alpha_k6_minus_edge_oracle():
    K = complete(6, 3)
    H = K.remove_edge(K.edges[0])
    a = alpha(H)
    # brute-force the infimum on a fine rational grid just above each breakpoint
    phi = count_pm(H)
    D = Fraction(3 * H.m, 6)
    devs = [abs(Fraction(weight(H, mask_of(c)) * D, phi) - 1)
            for c in __import__("itertools").combinations(range(6), 3)]
    K_sz = len(devs)

    def feasible(x):
        return sum(1 for d in devs if d > x) < x * K_sz

    assert feasible(a + Fraction(1, 10**9))
    assert not feasible(a - Fraction(1, 10**9))


def test_alpha_zero_iff_constant():
    rng = np.random.default_rng(2)
    for _ in range(10):
        H = random_hypergraph(6, 3, int(rng.integers(5, 20)), rng)
        if count_pm(H) == 0:
            continue
        phi = count_pm(H)
        D = Fraction(3 * H.m, 6)
        ws = {weight(H, mask_of(c))
              for c in __import__("itertools").combinations(range(6), 3)}
        constant = ws == {phi * 6 // (3 * H.m)} and len(ws) == 1 \
            and Fraction(phi) / D == next(iter(ws))
        assert (alpha(H) == 0) == constant


def test_f_implies_e_monotonicity():
    rng = np.random.default_rng(9)
    params = ToleranceParams()
    for _ in range(20):
        H = random_hypergraph(9, 3, int(rng.integers(10, 60)), rng)
        if count_pm(H) == 0:
            continue
        if evaluate_property(H, "F", params).holds:
            assert evaluate_property(H, "E", params).holds


def test_determinism():
    K = complete(9, 3)
    assert evaluate_property(K, "R") == evaluate_property(K, "R")


def test_rdefb_replay():
    params = ToleranceParams()
    cap = rdefb_cap(params, 3)
    assert cap == Fraction(12, 10) / (Fraction(8, 10) * Fraction(1, 64))
    for H in (complete(6, 3), complete(9, 3)):
        out = rdefb_replay(H, params)
        assert out["conclusion_holds"]
