"""Acceptance criteria, one test each, at their stated tolerances.

Every test appends a single PASS/FAIL line to ``ACCEPTANCE_LINES``; the
conftest hook prints them at the end of the run.  ``python3 tests/test_acceptance.py``
prints them directly.
"""
import math
import random
import time
from fractions import Fraction as Fr

import numpy as np
import pytest

from symflow import catalog as cat
from symflow import exprcore as ec
from symflow import flows as fl
from symflow import moc
from symflow import symmetry as sym
from symflow import verify as vf
from symflow.audit import CHAIN_RESOLUTION, audit
from symflow.errors import BlowUp, CaseMismatch, DomainError, InvalidParams
from symflow.family import ALGEBRA_DIMENSION, PdeParams, classify, params_for_case

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

# representative members of each class, used where one parameter set is enough
REPRESENTATIVE = {
    1: [PdeParams(1, 3, 2), PdeParams(0.7, Fr(3, 2), Fr(1, 3))],
    2: [PdeParams(1, 1, 2), PdeParams(1.3, 2, 3)],
    3: [PdeParams(1, -1, 2), PdeParams(0.8, Fr(1, 2), Fr(1, 2))],
    4: [PdeParams(1, 1, 3), PdeParams(1.2, Fr(3, 2), 4)],
    5: [PdeParams(1, -1, 3), PdeParams(0.9, Fr(-3, 4), Fr(5, 2))],
    6: [PdeParams(1, Fr(2, 3), 3), PdeParams(1.4, 1, 4)],
    7: [PdeParams(1, 1, 1), PdeParams(1.5, Fr(5, 2), 1)],
}
# case 1 has a closed-form solution only at k = m = 2
SOLUTION_PARAMS = {**REPRESENTATIVE, 1: [PdeParams(1, 2, 2), PdeParams(1.7, 2, 2)]}


def record(n: int, ok: bool, detail: str, started: float) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail} ({time.perf_counter() - started:.1f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)


def draw_params(case: int, rng: random.Random) -> PdeParams:
    """Random member of ``case`` with small rational exponents."""
    while True:
        lam = round(rng.uniform(0.5, 2.0), 3)
        a = Fr(rng.randint(-6, 6), rng.randint(1, 4))
        b = Fr(rng.randint(-6, 6), rng.randint(1, 4))
        try:
            if case == 1:
                p = PdeParams(lam, a, b)
            elif case == 7:
                p = params_for_case(7, lam, k=a)
            else:
                p = params_for_case(case, lam, m=b)
        except (CaseMismatch, InvalidParams):
            continue
        if int(p.case) == case and not p.outside_hypothesis:
            return p


# -- 1 -------------------------------------------------------------------------------

def test_criterion_1_symmetry_validity():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    worst, failures, errata, controls = 0.0, [], set(), []
    for case in range(1, 8):
        for draw in range(5):
            p = draw_params(case, rng)
            for c in sym.check_generators(case, p, n_states=200, seed=draw, tol=1e-9):
                worst = max(worst, c.max_scaled)
                if not c.verified:
                    failures.append((case, str(p.as_dict()), c.label, c.max_scaled))
            for c in sym.check_generators(case, p, n_states=200, seed=draw, variant="printed"):
                if not c.verified:
                    errata.add(f"case {case} {c.label}")
            # negative control: bend the u-component of the last generator
            X = sym.generators(case, p)[ALGEBRA_DIMENSION[case]]
            bent = sym.VectorField(X.xi, X.tau, X.phi + 0.1 * ec.U**2, label="bent")
            env = sym.sample_states(np.random.default_rng(draw), 200)
            controls.append(float(np.max(sym.prolongation_scaled(bent, p, env))))
    ok = not failures and min(controls) > 1e-3
    record(1, ok, f"7 cases x 5 draws x 200 states, worst {worst:.1e} <= 1e-9; "
                  f"perturbed controls min {min(controls):.2e} > 1e-3; "
                  f"printed-generator errata repaired: {sorted(errata)}", t0)
    assert not failures, failures
    assert min(controls) > 1e-3


# -- 2 -------------------------------------------------------------------------------

def test_criterion_2_commutator_tables():
    t0 = time.perf_counter()
    details, ok = [], True
    for case, params in ((2, [PdeParams(1, 1, 2), PdeParams(1.3, Fr(3, 2), Fr(5, 2))]),
                         (7, [PdeParams(1.5, Fr(5, 2), 1), PdeParams(0.6, -2, 1)])):
        for p in params:
            rep = sym.verify_commutator_table(case, p, n_samples=50, tol=1e-9, seed=1)
            fixed = sym.verify_commutator_table(case, p, n_samples=50, tol=1e-9, seed=1, table="corrected")
            documented = {(i, j) for (c, i, j) in sym.CORRECTED_CELLS if c == case}
            undocumented = set(rep.mismatched) - documented
            gs = sym.generators(case, p)
            env = {k: np.random.default_rng(3).uniform(*sym.BOX[k], 20) for k in ("x", "t", "u")}
            jac = max(sym.jacobi_defect(gs[i], gs[j], gs[k], env)
                      for i in range(1, 9) for j in range(i + 1, 9) for k in range(j + 1, 9))
            good = (not undocumented and not fixed.mismatched and rep.antisymmetry_max_dev <= 1e-8
                    and jac <= 1e-8)
            ok &= good
            details.append(f"case {case} lam={p.lam:g},k={p.k}: printed {rep.n_match}/64"
                           + (f" (errata {sorted(rep.mismatched)})" if rep.mismatched else "")
                           + f", corrected {fixed.n_match}/64, antisym {rep.antisymmetry_max_dev:.0e},"
                             f" Jacobi {jac:.0e}")
    record(2, ok, "; ".join(details), t0)
    assert ok


# -- 3 -------------------------------------------------------------------------------

def test_criterion_3_flow_agreement():
    t0 = time.perf_counter()
    eps_grid = np.linspace(-0.2, 0.2, 9)
    worst, worst_gl, worst_id, failures, errata, numeric_only = 0.0, 0.0, 0.0, [], [], []
    for case in range(1, 8):
        p = REPRESENTATIVE[case][0]
        pts = np.stack([np.random.default_rng(case).uniform(*sym.BOX[k], 10) for k in ("x", "t", "u")], axis=1)
        for i in range(1, ALGEBRA_DIMENSION[case] + 1):
            if i not in fl.available_indices(case):
                numeric_only.append(f"c{case}.G{i}")
                continue
            chk = fl.flow_agreement(case, i, p, pts, eps_grid, tol=1e-8)
            worst = max(worst, chk.max_dev)
            if not chk.verified:
                failures.append((case, i, chk.max_dev))
            if (case, i) in fl.MAP_NOTES:
                pr = fl.flow_agreement(case, i, p, pts, eps_grid, variant="printed", tol=1e-8)
                if not pr.verified:
                    errata.append(f"c{case}.G{i}")
            G = fl.group_map(case, i, p)
            for q in pts[:4]:
                try:
                    worst_gl = max(worst_gl, fl.group_law_residual(G, 0.07, -0.12, tuple(q)))
                    img = np.array(G(tuple(q), 0.0))
                except (DomainError, BlowUp):
                    continue
                worst_id = max(worst_id, float(np.max(np.abs(img - q))))
    ok = not failures and worst_gl <= 1e-10 and worst_id <= 1e-12
    record(3, ok, f"closed maps vs flow worst {worst:.1e} <= 1e-8 over eps in [-0.2,0.2]; group law "
                  f"{worst_gl:.1e} <= 1e-10; identity {worst_id:.0e} <= 1e-12; printed-map errata repaired: "
                  f"{errata}; flow-only (no closed form): {numeric_only}", t0)
    assert not failures, failures
    assert worst_gl <= 1e-10 and worst_id <= 1e-12


# -- 4 -------------------------------------------------------------------------------

def test_criterion_4_solution_catalog():
    t0 = time.perf_counter()
    unresolved, documented, n_exp, n_imp, worst_e, worst_i = [], set(), 0, 0, 0.0, 0.0
    for case in range(1, 8):
        for p in SOLUTION_PARAMS[case]:
            forms = cat.all_entries(case, p) + cat.travelling_wave_forms(case, p, 1.5)
            reps = {}
            for f in forms:
                if f.explicit:
                    reps[f.id] = vf.residual_explicit(f, p, vf.SampleDomain(n=200), draws=5, seed=7)
                    n_exp += 1
                else:
                    reps[f.id] = vf.residual_implicit(f, p, seed=7)
                    n_imp += 1
            verified = {k for k, r in reps.items() if r.verdict == vf.VERIFIED}
            for f in forms:
                r = reps[f.id]
                if r.verdict == vf.VERIFIED:
                    if f.explicit:
                        worst_e = max(worst_e, r.max_scaled)
                    else:
                        worst_i = max(worst_i, r.max_scaled)
                    continue
                if r.verdict != vf.DISCREPANT:
                    continue
                fix = next((g.id for g in forms if g.corrects == f.id), None) or CHAIN_RESOLUTION.get(f.id)
                if fix in verified:
                    documented.add(f"{f.id}->{fix}")
                else:
                    unresolved.append((case, str(p.as_dict()), f.id, r.max_scaled))
    ok = not unresolved
    record(4, ok, f"{n_exp} explicit (200 pts x 5 draws) worst {worst_e:.1e} <= 1e-8, {n_imp} implicit worst "
                  f"{worst_i:.1e} <= 1e-7; DISCREPANT printed entries each matched by a passing corrected "
                  f"form: {sorted(documented)}", t0)
    assert not unresolved, unresolved


# -- 5 -------------------------------------------------------------------------------

def test_criterion_5_pushforward_closure_and_chains():
    t0 = time.perf_counter()
    n_ok, bad, empty = 0, [], []
    for case in range(1, 8):
        for p in SOLUTION_PARAMS[case]:
            rep = audit(case, p, seed=5, sections=("pushforward_closure",))
            for e in rep.section("pushforward_closure"):
                if e["verdict"] == vf.VERIFIED:
                    n_ok += 1
                elif e["verdict"] == vf.DISCREPANT:
                    bad.append((case, str(p.as_dict()), e["id"], e["max_scaled"]))
                else:
                    empty.append(f"c{case}(lam={p.lam:g},k={p.k}):{e['id']}")
    chain_ok, chain_detail = True, []
    for p in (PdeParams(1, 1, 1), PdeParams(1.5, Fr(5, 2), 1)):
        entries = {s.id: s for s in cat.example_multiparameter(p)}
        for name, chain in (("five", cat.FIVE_CHAIN), ("six", cat.SIX_CHAIN)):
            form = entries[f"c7.ex.{name}.fix"]
            rng = np.random.default_rng(11)
            for _ in range(20):
                vals = form.draw_constants(rng)
                composed = fl.compose_chain(7, [(i, vals[n]) for i, n in chain], fl.ZERO_SOLUTION, p)
                dom = vf.SampleDomain(guards=[("pos", g) for g in form.bound_guards(vals)])
                res = vf.residual_explicit(composed.expr, p, dom, seed=3)
                if res.verdict != vf.EMPTY_DOMAIN:
                    break
            env = {"x": rng.uniform(0.1, 2.0, 200), "t": rng.uniform(0.1, 2.0, 200)}
            with np.errstate(all="ignore"):
                a = ec.evaluate_array(composed.expr, env, strict=False)
                b = ec.evaluate_array(form.bind(vals), env, strict=False)
                gap = np.abs(a - b) / (1 + np.abs(b))
                gap = gap[np.isfinite(gap) & dom.feasible(env)]
            good = res.verdict == vf.VERIFIED and len(gap) > 0 and gap.max() <= 1e-8
            chain_ok &= good
            chain_detail.append(f"{name}(k={p.k}) residual {res.max_scaled:.0e}, closed-form gap {gap.max():.0e}")
    ok = not bad and chain_ok
    record(5, ok, f"{n_ok} (map, solution, eps) images VERIFIED, {len(bad)} DISCREPANT, {len(empty)} with no real "
                  f"image in the box {empty}; chains from u=0: {'; '.join(chain_detail)}; printed final chain "
                  f"formulas are not solutions and are superseded by the corrected closed forms", t0)
    assert not bad, bad
    assert chain_ok


# -- 6 -------------------------------------------------------------------------------

def test_criterion_6_reduced_odes():
    t0 = time.perf_counter()
    p = PdeParams(1, Fr(1, 2), Fr(1, 2))  # a = lam(m-1) = -1/2
    rec = next(r for r in cat.reductions(3, p) if r.id == "c3.M7+M8")
    a = -0.5
    reach = math.sqrt((a + 1) / 2) * 0.999
    quad_worst = max(vf.verify_reduced(rec, kf.expr, (-reach, reach), n=400).max_scaled for kf in rec.known_F)
    worst, bad, checked = 0.0, [], []
    for case in range(1, 8):
        for p in REPRESENTATIVE[case]:
            for rec in cat.reductions(case, p):
                nf = vf.numeric_F(rec)
                if nf is None:
                    bad.append((rec.id, "integration failed"))
                    continue
                r = vf.reconstruction_residual(rec, p, nf, seed=1, tol=1e-6)
                checked.append(rec.id)
                if r.verdict != vf.VERIFIED:
                    bad.append((rec.id, str(p.as_dict()), r.verdict, r.max_scaled))
                else:
                    worst = max(worst, r.max_scaled)
    unsolved = sorted({c for c in checked if c.startswith(("c4.M6-", "c5.", "c6."))})
    ok = quad_worst <= 1e-9 and not bad
    record(6, ok, f"quadratic F for a=-1/2 residual {quad_worst:.1e} <= 1e-9; {len(checked)} reductions rebuilt "
                  f"from integrated F, worst PDE residual {worst:.1e} <= 1e-6 (unsolved rows {unsolved})", t0)
    assert quad_worst <= 1e-9
    assert not bad, bad


# -- 7 -------------------------------------------------------------------------------

def test_criterion_7_characteristics_oracle():
    t0 = time.perf_counter()
    worst, n_cmp, bad, skipped = 0.0, 0, [], []
    for case in (1, 2, 3, 4, 7):
        for p in SOLUTION_PARAMS[case]:
            for s in cat.all_entries(case, p):
                if not s.explicit:
                    continue
                rng = np.random.default_rng(17)
                res = None
                for _ in range(10):
                    consts = s.draw_constants(rng)
                    r = vf.residual_explicit(s, p, constants=consts, seed=2)
                    if r.verdict == vf.VERIFIED:
                        res = moc.compare_with_solution(s.bind(consts), p, guards=s.bound_guards(consts))
                        if res["points"]:
                            break
                if res is None:
                    continue
                if not res["points"]:
                    skipped.append(s.id)
                    continue
                n_cmp += 1
                worst = max(worst, res["linf"])
                if not res["linf"] <= 1e-6:
                    bad.append((s.id, str(p.as_dict()), res))
    cons = 0.0
    rng = np.random.default_rng(0)
    for case in range(1, 8):
        p = REPRESENTATIVE[case][0]
        cons = max(cons, moc.conservation_defect("1 + x/2", p, rng.uniform(0.1, 2, 10), np.linspace(0, 0.3, 7)))
    quad_gap = 0.0
    for _ in range(100):
        case = int(rng.integers(1, 8))
        p = REPRESENTATIVE[case][int(rng.integers(0, 2))]
        u0, t = float(rng.uniform(0.5, 2)), float(rng.uniform(0, 0.3))
        try:
            a = moc.speed_integral(u0, p, t)
        except moc.Extinction:
            continue
        quad_gap = max(quad_gap, abs(a - moc.speed_integral_quad(u0, p, t)) / (1 + abs(a)))
    ok = not bad and cons <= 1e-10 and quad_gap <= 1e-9 and n_cmp > 0
    record(7, ok, f"{n_cmp} explicit solutions reproduced from their own slice, worst Linf {worst:.1e} <= 1e-6; "
                  f"conservation drift {cons:.0e} <= 1e-10; quadrature vs closed form {quad_gap:.0e} <= 1e-9; "
                  f"no positive pre-shock window (u <= 0 in the box): {sorted(set(skipped))}", t0)
    assert not bad, bad
    assert cons <= 1e-10 and quad_gap <= 1e-9


# -- 8 -------------------------------------------------------------------------------

# (k, m, case), worked out by hand from the defining conditions in routing order
HAND_TABLE = [
    (2, 3, 2), (1, 1, 7), (5, 1, 7), ("-1/2", 1, 7), (1, 2, 2), (-1, 2, 3), ("1/2", 2, 4), ("-1/2", 2, 5),
    ("1/3", 2, 6), (3, 2, 1), (2, 2, 1), (1, 3, 4), (-1, 3, 5), ("2/3", 3, 6), (-2, 3, 3), (4, 5, 2),
    (-4, 5, 3), (2, 5, 4), (-2, 5, 5), ("4/3", 5, 6), (1, 5, 1), (-1, 0, 2), (1, 0, 3), ("-1/2", 0, 4),
    ("1/2", 0, 5), ("-1/3", 0, 6), (2, 0, 1), ("1/2", "1/2", 3), ("-1/2", "1/2", 2), ("1/4", "1/2", 5),
    ("-1/4", "1/2", 4), ("-1/6", "1/2", 6), ("1/6", "1/2", 1), (-2, -1, 2), (2, -1, 3), (-1, -1, 4),
    (1, -1, 5), ("-2/3", -1, 6), (3, -1, 1), ("0.5", 3, 1), ("1.5", "2.5", 2), ("-1.5", "2.5", 3),
    ("0.75", "2.5", 4), ("-0.75", "2.5", 5), ("0.5", "2.5", 6), ("7/3", "10/3", 2), ("7/6", "10/3", 4),
    ("7/9", "10/3", 6), (1, "5/3", 1), ("1/3", 1, 7),
]


def test_criterion_8_determinism_and_classification():
    t0 = time.perf_counter()
    p = PdeParams(1, 1, 1)
    a = audit(7, p, seed=42).to_json()
    b = audit(7, p, seed=42, workers=4).to_json()
    wrong = [(k, m, c, int(classify(k, m))) for k, m, c in HAND_TABLE if int(classify(k, m)) != c]
    ok = a == b and not wrong and len(HAND_TABLE) == 50
    record(8, ok, f"audit JSON byte-identical across runs ({len(a)} bytes, 1 vs 4 workers); "
                  f"{50 - len(wrong)}/50 hand-classified pairs agree", t0)
    assert a == b
    assert not wrong, wrong


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
