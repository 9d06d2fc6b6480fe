import json
import math
from fractions import Fraction as Fr

import numpy as np
import pytest

from symflow import catalog as cat
from symflow import exprcore as ec
from symflow import verify as vf
from symflow.audit import audit
from symflow.errors import RootNotBracketed
from symflow.exprcore import U, X
from symflow.family import PdeParams

P_EQ49 = PdeParams(1, Fr(1, 2), Fr(1, 2))
A_EQ49 = -0.5


def entry_by_id(entries, id_):
    return {e["id"]: e for e in entries}[id_]


def entry(entries, id_):
    return {e.id: e for e in entries}[id_]


def test_case7_root_solution_exact():
    p = PdeParams(1, 2, 1)
    rep = vf.residual_explicit((10 - 2 * X) ** 0.5, p, vf.SampleDomain(x_range=(0.1, 2.0)))
    assert rep.verdict == vf.VERIFIED and rep.max_scaled <= 1e-10


def test_constant_is_not_a_solution():
    rep = vf.residual_explicit(ec._lift(1.3), PdeParams(1, 2, 1))
    assert rep.verdict == vf.DISCREPANT


def test_case1_quadratic_solution():
    p = PdeParams(1, 2, 2)
    rep = vf.residual_explicit(entry(cat.solutions(1, p), "c1.M3.m2k2+"), p, constants={"A": 1.0})
    assert rep.verdict == vf.VERIFIED and rep.max_scaled <= 1e-8


def test_empty_domain_when_guards_exclude_everything():
    dom = vf.SampleDomain(guards=[("pos", -1 - X)])
    rep = vf.residual_explicit((10 - 2 * X) ** 0.5, PdeParams(1, 2, 1), dom)
    assert rep.verdict == vf.EMPTY_DOMAIN


def test_case3_travelling_wave():
    p = PdeParams(1, -1, 2)
    sol = cat.travelling_waves(3, p, 2.0)
    rep = vf.residual_implicit(sol, p)
    assert rep.verdict == vf.VERIFIED and rep.max_scaled <= 1e-7


def test_u_free_relation_has_no_root():
    with pytest.raises(RootNotBracketed):
        vf.implicit_points(X - 1, (0.5, 2.0), vf.SampleDomain())


def test_case7_travelling_wave():
    p = PdeParams(1, 1, 1)
    sol = cat.travelling_waves(7, p, 1.0, A_value=1.0)
    rep = vf.residual_implicit(sol, p)
    assert rep.verdict == vf.VERIFIED and rep.max_scaled <= 1e-7


def eq49():
    return entry(cat.reductions(3, P_EQ49), "c3.M7+M8")


def test_quadratic_F_solves_reduced_equation():
    a = A_EQ49
    reach = 0.98 * math.sqrt((a + 1) / 2)
    F = (a + 1) + ec.sqrt(a + 1 - 2 * ec.symbol("psi") ** 2)
    rep = vf.verify_reduced(eq49(), F, (-reach, reach))
    assert rep.verdict == vf.VERIFIED and rep.max_scaled <= 1e-9


def test_equilibrium_F():
    rep = vf.verify_reduced(eq49(), ec._lift(A_EQ49), (-1.0, 1.0))
    assert rep.max_scaled == 0


def test_shifted_equilibrium_is_discrepant():
    rep = vf.verify_reduced(eq49(), ec._lift(A_EQ49 + 1), (0.1, 1.0))
    assert rep.verdict == vf.DISCREPANT


def test_numeric_F_for_unsolved_row():
    p = PdeParams(1, Fr(1, 2), 0)
    rec = entry(cat.reductions(5, p), "c5.M3")
    F = vf.numeric_F(rec)
    assert F is not None
    assert vf.verify_reduced(rec, F).verdict == vf.VERIFIED
    assert vf.reconstruction_residual(rec, p, F).verdict in (vf.VERIFIED, vf.EMPTY_DOMAIN)


def test_finite_differences_agree_on_verified_entry():
    p = PdeParams(1, 2, 1)
    rep = vf.finite_difference_crosscheck(entry(cat.solutions(7, p), "c7.M5"), p)
    assert rep.verdict == vf.VERIFIED and rep.max_scaled <= 1e-5


def test_finite_differences_flag_cusp():
    p = PdeParams(1, 2, 1)
    cusp = 1 + ec.sqrt((X - 1) ** 2)
    xs = 1 + np.array([-5e-5, -2e-5, 3e-5, 6e-5])
    dom = vf.SampleDomain(margin=0, points=(xs, np.full(4, 0.5)))
    rep = vf.finite_difference_crosscheck(cusp, p, dom)
    assert rep.verdict == vf.DISCREPANT


def test_finite_differences_case2_family():
    p = PdeParams(1, 2, 3)
    rep = vf.finite_difference_crosscheck(entry(cat.solutions(2, p), "c2.M3"), p,
                                          vf.SampleDomain(t_range=(0.5, 2.0)), constants={"A": 1.0})
    assert rep.verdict == vf.VERIFIED and rep.max_scaled <= 1e-5


def test_tightening_tolerance_only_demotes():
    p = PdeParams(1, 2, 2)
    sol = entry(cat.solutions(1, p), "c1.M3.m2k2+")
    loose = vf.residual_explicit(sol, p, tol=1e-8)
    tight = vf.residual_explicit(sol, p, tol=1e-17)
    assert loose.max_scaled == tight.max_scaled
    assert not (loose.verdict == vf.DISCREPANT and tight.verdict == vf.VERIFIED)


def test_audit_case5_sections():
    rep = audit(5, PdeParams(1, -1, 3), seed=0)
    names = [n for n, _ in rep.sections]
    assert "generators" in names and "reductions" in names
    assert any(e["id"].startswith("c5.M3") for e in rep.section("reductions"))
    assert not rep.unresolved()


def test_audit_case2_table():
    rep = audit(2, PdeParams(1, 1, 2), seed=0, sections=("commutators",))
    table = entry_by_id(rep.section("commutators"), "table")
    assert table["verdict"] == vf.VERIFIED and table["matched"] == 64


def test_audit_report_is_deterministic():
    p = PdeParams(1, 1, 1)
    sections = ("solutions", "reductions", "travelling_waves")
    a = audit(7, p, seed=42, sections=sections).to_json()
    b = audit(7, p, seed=42, sections=sections, workers=3).to_json()
    assert a == b
    json.loads(a)


def test_grid_rows_are_finite():
    p = PdeParams(1, 2, 1)
    rows = vf.grid_rows(entry(cat.solutions(7, p), "c7.M5"), p, n=5)
    assert rows and all(len(r) == 4 for r in rows)
    assert max(r[3] for r in rows) <= 1e-8
