import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symflow import catalog as cat
from symflow import exprcore as ec
from symflow import moc
from symflow.errors import Extinction, ShockReached
from symflow.exprcore import X
from symflow.family import PdeParams


def test_linear_damping():
    assert abs(moc.u_along_characteristic(2, PdeParams(1, 1, 1), 1) - 2 / math.e) <= 1e-14


def test_quadratic_decay():
    assert abs(moc.u_along_characteristic(1, PdeParams(1, 1, 2), 1) - 0.5) <= 1e-14


def test_matches_uniform_solution():
    p = PdeParams(1, 2, 3)
    u0 = 1.7
    sol = {s.id: s for s in cat.solutions(2, p)}["c2.M5"].bind({"A": u0 ** (1 - 3)})
    for t in (0.0, 0.4, 1.3):
        assert abs(moc.u_along_characteristic(u0, p, t) - ec.evaluate(sol, {"x": 0.5, "t": t})) <= 1e-12


def test_extinction():
    with pytest.raises(Extinction):
        moc.u_along_characteristic(1.0, PdeParams(-1, 1, 2), 2.0)


def test_position_for_linear_damping():
    p = PdeParams(1, 1, 1)
    assert abs(moc.x_along_characteristic(0.3, 2.0, p, 0.8) - (0.3 + 2.0 * (1 - math.exp(-0.8)))) <= 1e-14
    assert moc.x_along_characteristic(0.3, 2.0, p, 0.0) == 0.3


def test_quadrature_agrees_with_closed_form():
    p = PdeParams(1, 1, 2)
    a = moc.x_along_characteristic(0.0, 1.0, p, 0.5)
    b = moc.x_along_characteristic(0.0, 1.0, p, 0.5, method="quad")
    assert abs(a - b) <= 1e-9
    assert abs(a - math.log(1.5)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(0.0, 1.0), st.sampled_from([
    PdeParams(1, 1, 2), PdeParams(0.7, Fr(1, 2), Fr(3, 2)), PdeParams(1.2, 2, 1),
    PdeParams(0.5, -1, 3), PdeParams(1, 3, 2),
]))
def test_random_characteristic_integrals(u0, t, p):
    a = moc.speed_integral(u0, p, t)
    b = moc.speed_integral_quad(u0, p, t)
    assert abs(a - b) <= 1e-9 * (1 + abs(a))


def test_constant_datum():
    p = PdeParams(1, 1, 2)
    pts = [(0.3, 0.5), (1.2, 0.5), (0.7, 1.0)]
    sol = moc.solve_ivp(ec._lift(1.5), p, pts, foot_range=(-3, 3))
    for (x, t), u in zip(pts, sol.u):
        assert abs(u - moc.u_along_characteristic(1.5, p, t)) <= 1e-12


def test_case7_slice_matches_solution():
    p = PdeParams(1, 2, 1)
    u = (10 - 2 * X) ** 0.5
    out = moc.compare_with_solution(u, p, t_start=0.0)
    assert out["points"] >= 15 and out["linf"] <= 1e-6


def test_case3_slice_matches_solution():
    p = PdeParams(1, -1, 2)
    sol = {s.id: s for s in cat.solutions(3, p)}["c3.M6"]
    expr = sol.bind({"A": 0.5})
    out = moc.compare_with_solution(expr, p, guards=sol.bound_guards({"A": 0.5}))
    assert out["points"] >= 15 and out["linf"] <= 1e-6


def test_no_shock_for_constant_datum():
    assert moc.shock_time(ec._lift(1.0), PdeParams(1, 1, 1), (0, 2)) is None


def test_burgers_shock_time():
    # u0 = 2 - tanh(x): steepest descent of u0 is 1 at x = 0
    datum = 2 - (ec.exp(X) - ec.exp(-X)) / (ec.exp(X) + ec.exp(-X))
    t = moc.shock_time(datum, PdeParams(1e-6, 1, 1), (-3, 3))
    assert t is not None and abs(t - 1.0) <= 1e-2


def test_no_shock_for_increasing_datum():
    assert moc.shock_time(1 + X, PdeParams(1, 1, 1), (0.1, 2), horizon=10) is None


def test_solve_past_shock_raises():
    datum = 2 - (ec.exp(X) - ec.exp(-X)) / (ec.exp(X) + ec.exp(-X))
    with pytest.raises(ShockReached):
        moc.solve_ivp(datum, PdeParams(1e-6, 1, 1), [(2.0, 1.5), (3.0, 1.5), (4.0, 1.5)], foot_range=(-3, 3))


def test_conserved_quantity_is_invariant():
    for p in (PdeParams(1, 1, 2), PdeParams(0.8, 2, 1), PdeParams(1.3, Fr(1, 2), Fr(1, 2))):
        assert moc.conservation_defect(1 + 0.5 * X, p, np.linspace(0.1, 2, 7), [0.2, 0.5, 1.0]) <= 1e-10
