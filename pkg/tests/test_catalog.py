import math
from fractions import Fraction as Fr

import numpy as np
import pytest

from symflow import catalog as cat
from symflow import exprcore as ec
from symflow import verify as vf
from symflow.errors import CaseMismatch
from symflow.family import PdeParams

ENV = {"x": 0.7, "t": 0.3}


def entry(entries, id_):
    return {e.id: e for e in entries}[id_]


def test_case7_root_solution():
    p = PdeParams(1, 2, 1)
    sol = entry(cat.solutions(7, p), "c7.M5")
    assert abs(ec.evaluate(sol.bind({"A": 10}), ENV) - math.sqrt(10 - 2 * 0.7)) <= 1e-12


def test_case3_solution():
    lam, m = 1.0, Fr(1, 2)
    p = PdeParams(lam, 1 - m, m)
    sol = entry(cat.solutions(3, p), "c3.M6")
    A = 0.4
    want = ((A + 0.7) / 0.3 - lam * (1 - 0.5) / 2 * 0.3) ** 2
    assert abs(ec.evaluate(sol.bind({"A": A}), ENV) - want) <= 1e-12


def test_case2_uniform_family():
    p = PdeParams(1, 2, 3)
    sol = entry(cat.solutions(2, p), "c2.M5")
    assert abs(ec.evaluate(sol.bind({"A": 1.5}), ENV) - (1.5 + 2 * 0.3) ** -0.5) <= 1e-12


def test_case_mismatch():
    with pytest.raises(CaseMismatch):
        cat.solutions(7, PdeParams(1, 2, 3))


def test_both_branches_listed():
    ids = {e.id for e in cat.solutions(1, PdeParams(1, 2, 2))}
    assert {"c1.M3.m2k2+", "c1.M3.m2k2-"} <= ids


def test_case1_reduction_ode():
    lam, k, m = 1.0, Fr(5), Fr(2)
    rec = entry(cat.reductions(1, PdeParams(lam, k, m)), "c1.M3")
    env = {"psi": 1.3, "F": 0.8, "dF": -0.4}
    psi, F, dF = env["psi"], env["F"], env["dF"]
    want = F - psi * dF + (1 - 2) / (5 - 2 + 1) * psi ** (2 - 5) * F**5 * dF + lam * (1 - 2) * F**2
    assert abs(ec.evaluate(rec.ode, env) - want) <= 1e-12
    assert abs(ec.evaluate(rec.psi, ENV) - 0.7 ** (1 / 4) * 0.3 ** 1) <= 1e-12


def test_quadratic_reduction_known_F():
    p = PdeParams(1, Fr(1, 2), Fr(1, 2))
    rec = entry(cat.reductions(3, p), "c3.M7+M8")
    a = -0.5
    plus = {kf.label: kf for kf in rec.known_F}["quadratic+"]
    assert abs(ec.evaluate(plus.expr, {"psi": 0.2}) - ((a + 1) + math.sqrt(a + 1 - 0.08))) <= 1e-12


def test_case7_m6_reduction():
    lam, k = 1.0, 2
    rec = entry(cat.reductions(7, PdeParams(lam, k, 1)), "c7.M6")
    env = {"psi": 0.5, "F": 0.3, "dF": 0.1}
    assert abs(ec.evaluate(rec.ode, env) - (0.1 + 0.09 + 2 * 0.3)) <= 1e-12


def test_unsolved_rows_have_no_known_F():
    recs = {r.id: r for r in cat.reductions(4, PdeParams(1, 3, 7))}
    assert recs["c4.M6-M7/2"].known_F == ()
    assert entry(cat.reductions(5, PdeParams(1, Fr(1, 2), 0)), "c5.M3").known_F == ()


def test_travelling_wave_relations():
    c, psi = 1.5, 0.4
    p3 = PdeParams(1, Fr(1, 2), Fr(1, 2))
    for sign, branch in ((1, "+"), (-1, "-")):
        rel = cat.travelling_waves(3, p3, c, branch=branch).bind()
        u = (c + sign * math.sqrt(c**2 - 2 * 1 * 0.5 * psi)) ** 2
        assert abs(ec.evaluate(rel, {"x": psi, "t": 0.0, "u": u})) <= 1e-12
    tw7 = cat.travelling_waves(7, PdeParams(1, 1, 1), 1.0, A_value=1.0)
    x, t, u, _ = vf.implicit_points(tw7.bind(), tw7.u_bracket, vf.SampleDomain(points=([0.1], [1.9])))
    assert len(u) == 1
    assert abs(math.exp(u[0]) / u[0] - math.exp(-(x[0] - t[0]))) <= 1e-10


def test_travelling_waves_need_speed():
    with pytest.raises(ValueError):
        cat.travelling_waves(7, PdeParams(1, 1, 1), 0.0)


def test_multiparameter_reduces_to_single_parameter():
    lam, k = 1.0, 1
    p = PdeParams(lam, k, 1)
    forms = {f.id: f for f in cat.example_multiparameter(p)}
    five = forms["c7.ex.five.fix"]
    # closed forms follow the flow sign of eps
    eps = 0.1
    vals = {"e": eps, "e1": 0.0, "e2": 0.0, "e3": 0.0, "e4": 0.0}
    got = ec.evaluate(five.bind(vals), ENV)
    assert abs(got - eps * math.exp(-lam * k * 0.3)) <= 1e-12


def test_multiparameter_closed_forms_solve_the_pde():
    p = PdeParams(1, 1, 1)
    for id_ in ("c7.ex.five.fix", "c7.ex.six.fix"):
        rep = vf.residual_explicit(entry(cat.example_multiparameter(p), id_), p, draws=5, seed=1)
        assert rep.verdict == vf.VERIFIED, (id_, rep.max_scaled)


@pytest.mark.parametrize("case, p", [
    (1, PdeParams(1, 2, 2)), (2, PdeParams(1, 2, 3)), (3, PdeParams(1, Fr(1, 2), Fr(1, 2))),
    (4, PdeParams(1, 3, 7)), (7, PdeParams(1, 2, 1)),
])
def test_corrected_entries_verify(case, p):
    for sol in cat.solutions(case, p):
        if sol.source == "printed" and any(s.corrects == sol.id for s in cat.solutions(case, p)):
            continue
        rep = vf.residual_explicit(sol, p, draws=5, seed=2)
        assert rep.verdict in (vf.VERIFIED, vf.EMPTY_DOMAIN), (sol.id, rep.max_scaled)


def test_case2_reductions_give_one_family():
    p = PdeParams(1, 2, 3)
    sols = {s.id: s for s in cat.solutions(2, p)}
    # each variant, with its constant matched, is the M3 family at that constant
    A = 0.8
    a = 1 * (3 - 1)
    base = sols["c2.M3"].bind({"A": A})
    m4 = sols["c2.M4"].bind({"A": A * 1 * (1 - 3)})
    m6 = sols["c2.M6"].bind({"A": math.log(A * a) / a})
    for env in ({"x": 0.7, "t": 0.3}, {"x": 1.5, "t": 1.2}):
        b = ec.evaluate(base, env)
        assert abs(ec.evaluate(m4, env) - b) <= 1e-12
        assert abs(ec.evaluate(m6, env) - b) <= 1e-12


def test_to_dict_round_trip_text():
    sol = cat.solutions(7, PdeParams(1, 2, 1))[0]
    d = sol.to_dict()
    assert d["id"] == sol.id and isinstance(d["u"], str)
    assert ec.from_text(d["u"]) is not None


def test_uniform_decay_solves():
    p = PdeParams(1.3, Fr(1, 2), Fr(3, 2))
    assert vf.residual_explicit(cat.uniform_decay(p), p).verdict == vf.VERIFIED


def test_constants_drawn_inside_ranges():
    rng = np.random.default_rng(0)
    for sol in cat.solutions(7, PdeParams(1, 2, 1)):
        vals = sol.draw_constants(rng)
        for name, lo, hi in sol.constants:
            assert lo <= vals[name] <= hi
