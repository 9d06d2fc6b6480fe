import math
from fractions import Fraction as Fr

import numpy as np
import pytest

from symflow import catalog as cat
from symflow import exprcore as ec
from symflow import verify as vf
from symflow.errors import UnknownIndex
from symflow.exprcore import T, X
from symflow.family import PdeParams
from symflow.flows import (
    ZERO_SOLUTION, available_indices, compose_chain, exponentiate, flow_agreement, group_law_residual,
    group_map, pushforward, solution, theorem_formula,
)
from symflow.symmetry import generators

P7 = PdeParams(1, 2, 1)
P1 = PdeParams(1, 5, 2)
P2 = PdeParams(1, 1, 2)


def close(a, b, tol) -> bool:
    return all(abs(p - q) <= tol for p, q in zip(a, b))


def test_case7_g6_formula():
    G = group_map(7, 6, P7)
    assert close(G((0.7, 0.3, 1.4), 0.1), (0.7 * math.exp(0.1), 0.3, math.exp(0.05) * 1.4), 1e-14)


def test_case1_g3_formula():
    G = group_map(1, 3, P1)
    want = (math.exp(0.8 * 0.1) * 0.7, math.exp(-0.2 * 0.1) * 0.3, math.exp(0.02) * 1.4)
    assert close(G((0.7, 0.3, 1.4), 0.1), want, 1e-14)


@pytest.mark.parametrize("case", range(1, 8))
def test_translation_map(case):
    p = {1: P1, 2: P2, 7: P7}.get(case) or cat_params(case)
    assert group_map(case, 1, p)((0.7, 0.3, 1.4), 0.25) == (0.95, 0.3, 1.4)


def cat_params(case):
    return {3: PdeParams(1, Fr(1, 2), Fr(1, 2)), 4: PdeParams(1, 3, 7),
            5: PdeParams(1, Fr(1, 2), 0), 6: PdeParams(1, 1, 4)}[case]


def test_unknown_index():
    with pytest.raises(UnknownIndex):
        group_map(1, 5, P1)


def test_exponentiate_translation():
    assert close(exponentiate(generators(7, P7)[1], (0.4, 0.2, 1.0), 0.3), (0.7, 0.2, 1.0), 1e-10)


def test_exponentiate_case7_scaling():
    got = exponentiate(generators(7, P7)[6], (1, 0.5, 1), 0.1)
    assert close(got, (math.exp(0.1), 0.5, math.exp(0.05)), 1e-8)


def test_exponentiate_case2_projective():
    p0 = (0.3, 0.2, 1.1)
    got = exponentiate(generators(2, P2)[3], p0, 0.05)
    assert close(got, group_map(2, 3, P2)(p0, 0.05), 1e-8)


def test_flow_agrees_with_closed_forms():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(0.1, 2, 10), rng.uniform(0.1, 2, 10), rng.uniform(0.5, 2, 10)])
    for case, p in ((7, P7), (2, P2), (1, P1)):
        for i in available_indices(case):
            assert flow_agreement(case, i, p, pts, [-0.2, -0.05, 0.1, 0.2]).verified, (case, i)


def test_group_law():
    p0 = (0.5, 0.4, 1.2)
    for i in available_indices(7):
        assert group_law_residual(group_map(7, i, P7), 0, 0, p0) == 0
    assert group_law_residual(group_map(7, 1, P7), 0.3, -0.7, p0) == 0
    assert group_law_residual(group_map(7, 3, P7), 0.02, 0.03, p0) <= 1e-10


def test_identity_at_zero():
    rng = np.random.default_rng(1)
    for i in available_indices(7):
        G = group_map(7, i, P7)
        for _ in range(20):
            p0 = (rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.5, 2))
            assert close(G(p0, 0.0), p0, 1e-12)


def test_pushforward_zero_eps_is_identity():
    phi = solution((10 - 2 * X) ** 0.5)
    assert pushforward(group_map(7, 5, P7), 0.0, phi).expr == phi.expr


def test_pushforward_of_zero_under_g5():
    lam, k = 1.5, 1
    p = PdeParams(lam, k, 1)
    eps = -0.1
    # the theorem convention reads eps with the opposite sign to the flow parameter
    new = pushforward(group_map(7, 5, p), eps, ZERO_SOLUTION, convention="theorem")
    for x, t in ((0.3, 0.2), (1.7, 1.1)):
        assert abs(new(x, t) - (-eps * math.exp(-lam * k * t))) <= 1e-12


def test_pushforward_translation_shifts():
    phi = solution(ec.exp(-X) * (1 + T))
    new = pushforward(group_map(7, 1, P7), 0.4, phi)
    assert abs(new(1.0, 0.5) - phi(0.6, 0.5)) <= 1e-14


def test_theorem_formula_agrees_with_pushforward():
    phi = solution((10 - 2 * X) ** 0.5)
    for i, conv in ((1, "group"), (2, "group"), (5, "theorem"), (6, "theorem")):
        a = theorem_formula(7, i, P7, 0.1, phi)
        b = pushforward(group_map(7, i, P7), 0.1, phi, convention=conv)
        assert abs(a(0.7, 0.3) - b(0.7, 0.3)) <= 1e-12


def test_empty_chain_returns_seed():
    assert compose_chain(7, [], ZERO_SOLUTION, P7) is ZERO_SOLUTION


@pytest.mark.parametrize("name, chain", [("five", cat.FIVE_CHAIN), ("six", cat.SIX_CHAIN)])
def test_example_chains_solve_the_pde(name, chain):
    p = PdeParams(1, 1, 1)
    form = {s.id: s for s in cat.example_multiparameter(p)}[f"c7.ex.{name}.fix"]
    rng = np.random.default_rng(11)
    for _ in range(20):
        vals = form.draw_constants(rng)
        composed = compose_chain(7, [(i, vals[n]) for i, n in chain], ZERO_SOLUTION, p)
        dom = vf.SampleDomain(guards=[("pos", g) for g in form.bound_guards(vals)])
        rep = vf.residual_explicit(composed.expr, p, dom, seed=3)
        if rep.verdict != vf.EMPTY_DOMAIN:
            break
    assert rep.verdict == vf.VERIFIED and rep.max_scaled <= 1e-8


def test_chain_order_changes_formula_not_membership():
    p = PdeParams(1, 1, 1)
    seed = solution(1 - X)
    steps = [(3, 0.05), (6, 0.1), (8, 0.07)]
    fwd = compose_chain(7, steps, seed, p)
    rev = compose_chain(7, steps[::-1], seed, p)
    dom = vf.SampleDomain(x_range=(0.05, 0.5), t_range=(0.1, 1.0))
    for sol in (fwd, rev):
        assert vf.residual_explicit(sol.expr, p, dom).verdict == vf.VERIFIED
    assert abs(fwd(0.3, 0.5) - rev(0.3, 0.5)) > 1e-6
