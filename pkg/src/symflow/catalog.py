"""Registry of exact solutions, similarity reductions and travelling waves.

Entries are printed transcriptions unless ``source == "corrected"``; a
corrected entry names the printed entry it repairs in ``corrects``.
Integration constants appear as named parameters with admissible ranges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from . import exprcore as ec
from .errors import CaseMismatch, DomainError
from .exprcore import DFN, FN, PSI, T, U, X, Expr, exp, root, sqrt, symbol
from .family import CaseId, PdeParams

A, B = symbol("A"), symbol("B")
BOX = (0.1, 2.0)


@dataclass(frozen=True)
class SolutionForm:
    """An explicit u(x, t) or an implicit relation R(x, t, u) = 0."""

    id: str
    case: int
    kind: str
    expr: Expr
    constants: tuple[tuple[str, float, float], ...] = ()
    fixed: tuple[tuple[str, float], ...] = ()
    branch: str | None = None
    source: str = "printed"
    subalgebra: str = ""
    note: str = ""
    corrects: str | None = None
    u_bracket: tuple[float, float] | None = None
    x_range: tuple[float, float] = BOX
    t_range: tuple[float, float] = BOX
    # expressions that must stay positive, beyond what the formula itself implies
    guards: tuple[Expr, ...] = ()

    @property
    def explicit(self) -> bool:
        return self.kind == "explicit"

    def bind(self, values: dict | None = None) -> Expr:
        """Substitute integration constants, leaving an Expr in x, t (and u)."""
        env = dict(self.fixed)
        env.update(values or {})
        return ec.substitute_many(self.expr, env) if env else self.expr

    def bound_guards(self, values: dict | None = None) -> list[Expr]:
        env = dict(self.fixed)
        env.update(values or {})
        return [ec.substitute_many(g, env) if env else g for g in self.guards]

    def draw_constants(self, rng: np.random.Generator) -> dict[str, float]:
        return {name: float(rng.uniform(lo, hi)) for name, lo, hi in self.constants}

    def to_dict(self) -> dict:
        d = {
            "id": self.id, "case": self.case, "kind": self.kind,
            ("u" if self.explicit else "relation"): ec.to_text(self.expr),
            "constants": {n: [lo, hi] for n, lo, hi in self.constants},
            "source": self.source, "x_range": list(self.x_range), "t_range": list(self.t_range),
        }
        for key in ("branch", "subalgebra", "note", "corrects"):
            if getattr(self, key):
                d[key] = getattr(self, key)
        if self.fixed:
            d["fixed"] = dict(self.fixed)
        if self.u_bracket:
            d["u_bracket"] = list(self.u_bracket)
        if self.guards:
            d["guards"] = [ec.to_text(g) for g in self.guards]
        return d


@dataclass(frozen=True)
class KnownF:
    label: str
    expr: Expr
    constants: tuple[tuple[str, float, float], ...] = ()
    psi_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class ReductionRecord:
    """psi(x, t), u = u_of_F(x, t, F), reduced ODE ode(psi, F, dF) = 0."""

    id: str
    case: int
    subalgebra: str
    psi: Expr
    u_of_F: Expr
    ode: Expr
    known_F: tuple[KnownF, ...] = ()
    note: str = ""
    # expressions in (x, t, F) that must stay positive for u_of_F to be valid
    guards: tuple[Expr, ...] = ()

    def ode_coefficients(self) -> tuple[Expr, Expr]:
        """(P, Q) with ode = P F' + Q; every stored ODE is linear in F'."""
        P = ec.differentiate(self.ode, "dF")
        Q = ec.substitute(self.ode, "dF", 0)
        return P, Q

    def to_dict(self) -> dict:
        return {
            "id": self.id, "case": self.case, "subalgebra": self.subalgebra,
            "psi": ec.to_text(self.psi), "u": ec.to_text(self.u_of_F), "ode": ec.to_text(self.ode),
            "known_F": [{"label": k.label, "F": ec.to_text(k.expr),
                         "constants": {n: [lo, hi] for n, lo, hi in k.constants}} for k in self.known_F],
            **({"note": self.note} if self.note else {}),
            **({"guards": [ec.to_text(g) for g in self.guards]} if self.guards else {}),
        }


def _check(case, params: PdeParams) -> CaseId:
    case = CaseId(case)
    if params.case != case:
        raise CaseMismatch(f"params belong to case {int(params.case)}, not {int(case)}")
    return case


def _root_form(u) -> tuple[Expr, tuple[Expr, ...]]:
    """``u`` or a pair (B, r) meaning u = B^r.

    With r an even integer, u = B^r stands for u^(1/r) = B, which only holds
    where B > 0, so B becomes a guard.
    """
    if isinstance(u, tuple):
        base, r = ec._lift(u[0]), ec.as_number(u[1])
        guards = (base,) if ec.is_integer(r) and r % 2 == 0 and ec.free_symbols(base) else ()
        return ec.power(base, r), guards
    return ec._lift(u), ()


def _explicit(id_, case, expr, constants=(), **kw) -> SolutionForm:
    expr, guards = _root_form(expr)
    if guards:
        kw.setdefault("guards", guards)
    return SolutionForm(id_, int(case), "explicit", expr, tuple(constants), **kw)


def _positive_range(scale: float, lo: float = 0.5, hi: float = 2.0) -> tuple[float, float]:
    return (lo + scale, hi + scale)


# -- explicit solutions -----------------------------------------------------------

def solutions(case, params: PdeParams) -> list[SolutionForm]:
    """Every closed-form solution listed for ``case``, both branches where a sign is ambiguous."""
    case = _check(case, params)
    lam, k, m = params.lam, params.k, params.m
    out: list[SolutionForm] = []
    if case == CaseId.CASE1:
        if k == 2 and m == 2:
            for sign, tag in ((1, "+"), (-1, "-")):
                base = lam * X * T + A
                u = (-base + sign * sqrt(base**2 + 4 * X * T)) / (2 * T)
                out.append(_explicit(f"c1.M3.m2k2{tag}", case, u, [("A", 0.5, 2.0)],
                                     branch=tag, subalgebra="M3"))
    elif case == CaseId.CASE2:
        a = lam * (m - 1)
        r = 1 / (m - 1)
        # A e^{-ax}/t must dominate 1/(at) when a < 0
        a_rng = (0.5, 2.0) if a > 0 else (1.5 / abs(a), 3.0 / abs(a))

        def fam(const):
            return (1 / (a * T) + const * exp(-a * X) / T, r)

        out.append(_explicit("c2.M3", case, fam(A), [("A", *a_rng)], subalgebra="M3"))
        out.append(_explicit("c2.M4", case, fam(A / (lam * (1 - m))),
                             [("A", *sorted((-a * a_rng[0], -a * a_rng[1])))],
                             subalgebra="M4", note="M3 family with A -> A/(lam(1-m))"))
        out.append(_explicit("c2.M6", case, fam(exp(a * A) / a), [("A", -0.5, 0.5)],
                             subalgebra="M6", note="M3 family with A -> e^(A lam(m-1))/(lam(m-1))"))
        out.append(_explicit("c2.M5", case, (A + a * T, 1 / (1 - m)),
                             [("A", *_positive_range(2 * max(0.0, -a)))], subalgebra="M5, M8"))
        out.append(_explicit("c2.M7", case, A * exp(-lam * X), [("A", 0.5, 2.0)], subalgebra="M7"))
    elif case == CaseId.CASE3:
        b = lam * (1 - m)
        r = 1 / (1 - m)
        out.append(_explicit("c3.M6", case, ((A + X) / T - b / 2 * T, r),
                             [("A", *_positive_range(2 * abs(b)))], subalgebra="M6"))
        base = (2 * X + b * (A - T) * T) / (2 * T - A)
        out.append(_explicit("c3.M7", case, (base, r), [("A", -0.5, -0.05)], subalgebra="M7"))
        out.append(_explicit("c3.M8", case, (A - b * T, r),
                             [("A", *_positive_range(2 * abs(b)))], subalgebra="M8"))
        a = lam * (m - 1)
        for sign, tag in ((1, "+"), (-1, "-")):
            u = ((a + 1) * T + sign * sqrt((a + 1) * T**2 - 2 * X), r)
            out.append(_explicit(f"c3.M7+M8{tag}", case, u, branch=tag, subalgebra="M7+M8"))
    elif case == CaseId.CASE4:
        b = lam * (m - 1)
        r = -2 / (m - 1)
        out.append(_explicit("c4.M6a", case, (T / X + b / 4 * X, r), subalgebra="M6"))
        out.append(_explicit("c4.M6b", case, (A + b / 4 * X, r),
                             [("A", *_positive_range(abs(b)))], subalgebra="M6"))
        out.append(_explicit("c4.M6b.fix", case, (A + b / 2 * X, r),
                             [("A", *_positive_range(abs(b)))], subalgebra="M6", source="corrected",
                             corrects="c4.M6b", note="F = A in u = (F + (b/2)x)^(-2/(m-1)) gives b/2, not b/4"))
        out.append(_explicit("c4.M7", case, ((A + T) / X + b / 4 * X, r),
                             [("A", *_positive_range(abs(b)))], subalgebra="M7"))
    elif case == CaseId.CASE7:
        c = lam * k
        r = 1 / k
        a3 = (1.5 / c, 3.0 / c) if c > 0 else (0.5, 2.0)
        out.append(_explicit("c7.M3", case, (A * exp(c * T) / X - 1 / (c * X), -r),
                             [("A", *a3)], subalgebra="M3"))
        a4 = (0.05, 0.5) if c > 0 else (1.5, 3.0)
        out.append(_explicit("c7.M4", case, (lam * A * k * X * exp(-c * T) / (1 - A * exp(-c * T)), r),
                             [("A", *a4)], subalgebra="M4"))
        out.append(_explicit("c7.M5", case, (A - c * X, r),
                             [("A", *_positive_range(2 * abs(c)))], subalgebra="M5, M8"))
        out.append(_explicit("c7.M6", case, (B * X * exp(-c * T) / (1 - B * exp(-c * T)), r),
                             [("B", *a4)], subalgebra="M6", note="B = lam k e^(lam k A)"))
        out.append(_explicit("c7.M6.fix", case, (c * B * X * exp(-c * T) / (1 - B * exp(-c * T)), r),
                             [("B", *a4)], subalgebra="M6", source="corrected", corrects="c7.M6",
                             note="F' + F^2 + lam k F = 0 gives F = lam k B e^(-lam k psi)/(1 - B e^(-lam k psi))"))
        out.append(_explicit("c7.M7", case, (A * exp(-c * T), r), [("A", 0.5, 2.0)], subalgebra="M7"))
    return out


# -- reductions -----------------------------------------------------------------

def _red(id_, case, sub, psi, u, ode, known=(), note="") -> ReductionRecord:
    u, guards = _root_form(u)
    return ReductionRecord(id_, int(case), sub, ec._lift(psi), u, ec._lift(ode), tuple(known), note, guards)


def reductions(case, params: PdeParams) -> list[ReductionRecord]:
    """Similarity variables, reconstructions and reduced ODEs for ``case``."""
    case = _check(case, params)
    lam, k, m = params.lam, params.k, params.m
    F, dF, P = FN, DFN, PSI
    out: list[ReductionRecord] = []
    if case == CaseId.CASE1:
        psi = X ** (1 / (k - m + 1)) * T ** (-1 / (1 - m))
        ode = F - P * dF + (1 - m) / (k - m + 1) * P ** (m - k) * F**k * dF + lam * (1 - m) * F**m
        known = []
        if k == 2 and m == 2:
            for sign, tag in ((1, "+"), (-1, "-")):
                known.append(KnownF(f"m2k2{tag}", (-(lam * P + A) + sign * sqrt((lam * P + A) ** 2 + 4 * P)) / 2,
                                    (("A", 0.5, 2.0),)))
        out.append(_red("c1.M3", case, "M3", psi, T ** (1 / (1 - m)) * F, ode, known))
    elif case == CaseId.CASE2:
        a = lam * (m - 1)
        a_rng = (0.5, 2.0) if a > 0 else (1.5 / abs(a), 3.0 / abs(a))
        out.append(_red("c2.M3", case, "M3", exp(a * X) / T, (1 / (a * T) + F / T**2, 1 / (m - 1)),
                        P * dF + F, [KnownF("A/psi", A / P, (("A", *a_rng),))]))
    elif case == CaseId.CASE3:
        b = lam * (1 - m)
        r = 1 / (1 - m)
        out.append(_red("c3.M6", case, "M6", T, (X / T + F, r), dF + F / P + b,
                        [KnownF("A/psi - b psi/2", A / P - b / 2 * P, (("A", *_positive_range(2 * abs(b))),))]))
        out.append(_red("c3.M7", case, "M7", T, ((2 * X + b * T**2) * F - b * T, r), dF + 2 * F**2,
                        [KnownF("1/(2 psi - A)", 1 / (2 * P - A), (("A", -0.5, -0.05),))]))
        a = lam * (m - 1)
        # real only for psi^2 < (a+1)/2
        reach = 0.98 * math.sqrt((a + 1) / 2) if a + 1 > 0 else None
        known = [KnownF(f"quadratic{tag}", (a + 1) + sign * sqrt(a + 1 - 2 * P**2),
                        psi_range=(-reach, reach) if reach else None)
                 for sign, tag in ((1, "+"), (-1, "-"))]
        out.append(_red("c3.M7+M8", case, "M7+M8", sqrt(X) / T, (T * F, r),
                        (F - 2 * P**2) * dF + 2 * P * (F - a), known))
    elif case == CaseId.CASE4:
        b = lam * (m - 1)
        r = -2 / (m - 1)
        out.append(_red("c4.M6", case, "M6", T / X - b / 4 * X, (F + b / 2 * X, r), (F - P) * dF,
                        [KnownF("psi", P), KnownF("A", A, (("A", *_positive_range(abs(b))),))],
                        note="printed reduced equation lacks '= 0'"))
        out.append(_red("c4.M7", case, "M7", b / 4 * X**2 - T, (F / X + b / 2 * X, r), dF + 1,
                        [KnownF("A - psi", A - P, (("A", *_positive_range(abs(b))),))]))
        out.append(_red("c4.M6-M7/2", case, "M6-(1/2)M7", X**2 / T, (F / X, 2 / (m - 1)),
                        (2 * P * F - P**2) * dF + b / 2 * F**3 - F**2, note="no closed-form solution listed"))
    elif case == CaseId.CASE5:
        out.append(_red("c5.M3", case, "M3", root(X, 3) / sqrt(T), (sqrt(T) * F, 2 / (1 - m)),
                        (2 * F**2 / P**2 - 3 * P * F) * dF + 3 * F**2 + 3 * lam * (1 - m)))
    elif case == CaseId.CASE6:
        out.append(_red("c6.M3", case, "M3", sqrt(X) / root(T, 3), (F / root(T, 3), 3 / (m - 1)),
                        (3 * F - 2 * P**2) * dF - 2 * P * F + 2 * lam * (m - 1) * P * F**4))
    elif case == CaseId.CASE7:
        c = lam * k
        r = 1 / k
        a3 = (1.5 / c, 3.0 / c) if c > 0 else (0.5, 2.0)
        a4 = (0.05, 0.5) if c > 0 else (1.5, 3.0)
        a5 = _positive_range(2 * abs(c))
        out += [
            _red("c7.M3", case, "M3", X * exp(c * T), (F / X**2 - 1 / (c * X), -r), P * dF - F,
                 [KnownF("A psi", A * P, (("A", *a3),))]),
            _red("c7.M4", case, "M4", X, (c * X * exp(-c * T) * F / (1 - exp(-c * T) * F), r), dF,
                 [KnownF("A", A, (("A", *a4),))]),
            _red("c7.M5", case, "M5", T, (F - c * X, r), dF, [KnownF("A", A, (("A", *a5),))]),
            _red("c7.M6", case, "M6", T, (X * F, r), dF + F**2 + c * F,
                 [KnownF("B-form", c * B * exp(-c * P) / (1 - B * exp(-c * P)), (("B", *a4),))]),
            _red("c7.M7", case, "M7", X, (exp(-c * T) * F, r), dF, [KnownF("A", A, (("A", 0.5, 2.0),))]),
            _red("c7.M8", case, "M8", X * exp(c * T), (F - c * X, r), dF, [KnownF("A", A, (("A", *a5),))]),
        ]
    return out


def reconstruct(record: ReductionRecord, known: KnownF) -> Expr:
    """u(x, t) from a known F(psi)."""
    F = ec.substitute(known.expr, "psi", record.psi)
    return ec.substitute(record.u_of_F, "F", F)


def reconstructed_guards(record: ReductionRecord, known: KnownF) -> tuple[Expr, ...]:
    F = ec.substitute(known.expr, "psi", record.psi)
    return tuple(ec.substitute(g, "F", F) for g in record.guards)


# -- travelling waves ---------------------------------------------------------------

def travelling_wave_ode(params: PdeParams, c: float) -> Expr:
    """(F^k - c) F' + lam F^m with psi = x - c t."""
    return (FN ** params.k - c) * DFN + params.lam * FN ** params.m


def _tw_relations(case: CaseId, p: PdeParams, c: float) -> list[tuple[str, Expr, str | None, str, str]]:
    """(id suffix, relation in (psi, u, A), branch, source, note)."""
    lam, k, m = p.lam, p.k, p.m
    psi = PSI
    rows = []
    if case == CaseId.CASE1:
        lhs = U ** (k + 1 - m) / (k - m + 1) - c * U ** (1 - m) / (1 - m)
        rows.append(("", lhs - (A - psi), None, "printed",
                     "stored candidate for the garbled printed row"))
        rows.append((".fix", lhs - (A - lam * psi), None, "corrected",
                     "quadrature of the reduced ODE carries lam on psi"))
    elif case == CaseId.CASE2:
        rows.append(("", U ** (1 - m) * exp(-c * U ** (1 - m)) - A * exp(-lam * (1 - m) * psi), None, "printed", ""))
    elif case == CaseId.CASE3:
        for sign, tag in ((1, "+"), (-1, "-")):
            rows.append((tag, U ** (1 - m) - (c + sign * sqrt(c**2 - 2 * lam * (1 - m) * psi)), tag, "printed", ""))
    elif case == CaseId.CASE4:
        Pq = (1 - m) * (A - lam * psi)
        for sign, tag in ((1, "+"), (-1, "-")):
            rhs = (1 + sign * sqrt(1 - c * Pq)) / c
            rows.append((tag, U ** ((m - 1) / 2) - rhs, tag, "printed", ""))
            rows.append((tag + ".fix", U ** ((1 - m) / 2) - rhs, tag, "corrected",
                         "left side is u^((1-m)/2), the root of c w^2 - 2w + (1-m)(A - lam psi) = 0"))
    elif case == CaseId.CASE5:
        rows.append(("", 2 * U ** (Fraction(3, 2) * (1 - m)) - 3 * c * U ** (1 - m)
                     - 3 * (1 - m) * (A - lam * psi), None, "printed", ""))
    elif case == CaseId.CASE6:
        rows.append(("", 3 * U ** (Fraction(2, 3) * (1 - m)) - 2 * c * U ** (1 - m)
                     - 2 * (1 - m) * (A - lam * psi), None, "printed", ""))
    else:
        rows.append(("", U ** (-c * k) * exp(U**k) - A * exp(-lam * k * psi), None, "printed", ""))
    return rows


def _monotone_bracket(k: Fraction, c: float, u0: float | None, region: str) -> tuple[float, float]:
    """u-interval on which u^k - c keeps one sign, so G(u) is monotone."""
    if c <= 0:
        centre = u0 or 1.0
        return (centre / 20, centre * 5)
    ustar = c ** (1 / float(k))
    upper = (region == "upper") == (k > 0)
    return (ustar * (1 + 1e-9), ustar * 6) if upper else (ustar / 6, ustar * (1 - 1e-9))


def _branch_region(case: CaseId, branch: str | None) -> str:
    # for the case-4 rows the '+' root w has c w > 1, i.e. u^k < c
    if case == CaseId.CASE4 and branch == "+":
        return "lower"
    return "upper"


def _solve_constant(rel: Expr, psi_c: float, u0: float) -> float | None:
    """A with rel(psi_c, u0; A) = 0: direct when rel is affine in A, else grid scan then brentq."""
    dA = ec.differentiate(rel, "A")
    if not ec.depends_on(dA, "A"):
        env = {"psi": psi_c, "u": u0, "A": 0.0}
        try:
            slope = ec.evaluate(dA, env)
            if slope != 0:
                return -ec.evaluate(rel, env) / slope
        except DomainError:
            pass
    side = np.logspace(-3, 3, 1201)
    grid = np.concatenate([-side[::-1], [0.0], side])
    vals = ec.evaluate_array(rel, {"psi": psi_c, "u": u0, "A": grid}, strict=False)
    ok = np.isfinite(vals[:-1]) & np.isfinite(vals[1:]) & (vals[:-1] * vals[1:] <= 0)
    if not ok.any():
        return None
    i = int(np.argmax(ok))
    if vals[i] == 0:
        return float(grid[i])
    f = lambda a: float(ec.evaluate(rel, {"psi": psi_c, "u": u0, "A": a}))  # noqa: E731
    return float(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-14))


def travelling_wave_forms(case, params: PdeParams, c: float, A_value: float | None = None,
                          u0: float | None = None) -> list[SolutionForm]:
    """Implicit travelling waves in psi = x - c t, all rows for ``case``.

    Without ``A_value`` the constant is fixed so that u(psi_c) = u0 at the
    centre of the sampling box, with u0 inside the monotone bracket.
    """
    case = _check(case, params)
    if c == 0:
        raise ValueError("wave speed c must be nonzero")
    k = params.k
    psi_c = (BOX[0] + BOX[1]) / 2 * (1 - c)
    out = []
    for suffix, rel, branch, source, note in _tw_relations(case, params, c):
        region = _branch_region(case, branch)
        if case == CaseId.CASE3:
            # u^(1-m) is monotone in u, so any positive bracket will do
            ustar = abs(c) ** (1 / float(k))
            lo, hi = ustar / 50, ustar * 50
        else:
            lo, hi = _monotone_bracket(k, c, u0, region)
        target = u0 if u0 is not None else (lo * hi) ** 0.5
        fixed = ()
        if ec.depends_on(rel, "A"):
            a_val = A_value if A_value is not None else _solve_constant(rel, psi_c, target)
            if a_val is None:
                a_val = float("nan")
                note = (note + "; " if note else "") + "no constant places a root in the bracket"
            fixed = (("A", a_val),)
        expr = ec.substitute(rel, "psi", X - c * T)
        out.append(SolutionForm(
            f"c{int(case)}.tw{suffix}", int(case), "implicit", expr, (), fixed, branch, source,
            "c d/dx + d/dt", note, f"c{int(case)}.tw{suffix.replace('.fix', '')}" if source == "corrected" else None,
            (lo, hi)))
    return out


def travelling_waves(case, params: PdeParams, c: float, branch: str | None = None,
                     variant: str = "corrected", **kw) -> SolutionForm:
    """One travelling-wave relation; prefers the corrected row when one exists."""
    forms = travelling_wave_forms(case, params, c, **kw)
    if branch is not None:
        forms = [f for f in forms if f.branch == branch]
    if variant == "corrected":
        fixed = [f for f in forms if f.source == "corrected"]
        forms = fixed or forms
    else:
        forms = [f for f in forms if f.source == "printed"]
    return forms[0]


# -- multi-parameter examples (case 7) --------------------------------------------------

_EPS = [symbol(n) for n in ("e", "e1", "e2", "e3", "e4", "e5")]


def example_multiparameter(params: PdeParams) -> list[SolutionForm]:
    """Printed intermediate and final chain solutions, plus verified closed forms of both chains."""
    _check(CaseId.CASE7, params)
    lam, k = params.lam, params.k
    c = lam * k
    e, e1, e2, e3, e4, e5 = _EPS
    E = exp(c * T)
    r = 1 / k

    def form(id_, W, names, source="printed", note="", corrects=None):
        consts = tuple((n, -0.2, 0.2) for n in names)
        return _explicit(id_, 7, (W, r), consts, source=source, note=note, corrects=corrects,
                         subalgebra="chain")

    s3 = 1 - c * e3 * exp(e4) * X
    five = exp(-e4 / k) * (s3 * (c**2 * e1 * exp(e4) * X - c * e * e3 * exp(e4) * X + e)
                           / (E + lam * s3 * (e * e3 * exp(e4) * X - k * e1)
                              + lam**3 * k**2 * e1 * e3 * exp(2 * e4) * X**2)) ** k
    s4 = 1 - c * e4
    q = 1 - c * e * e1
    six_inner = (s4 * (e2 * (c * e * e1 - 1) * s4 - c**2 * e * exp(e5) * X)
                 / (lam * s4 * (k * e - e2 * e4 * q * exp(e5) * X) - lam**3 * k**2 * e * e4 * exp(2 * e5) * X**2
                    + q * (1 - e2 * e3) * E))
    six = exp(-e5) * six_inner
    g34 = (1 - c * e3 * X) * (c**2 * e1 * X - c * e * e3 * X + e) / (
        E + lam * (1 - c * e3 * X) * (e * e3 * X - k * e1) + lam**3 * k**2 * e1 * e3 * X**2)
    g34b = s4 * (e2 * (c * e * e1 - 1) * s4 - c**2 * e * X) / (
        lam * s4 * (k * e - e2 * e4 * q * X) - lam**3 * k**2 * e * e4 * X**2 + q * (1 - e2 * e3) * E)
    out = [
        form("c7.ex.G5", -e * exp(-c * T), ["e"]),
        form("c7.ex.G8", -(c**2) * e * X * exp(-c * T) / (1 + c * e * exp(-c * T)), ["e"]),
        form("c7.ex.G8:G7", (-e - c**2 * e1 * X) / (c * e1 + E), ["e", "e1"]),
        form("c7.ex.G4:G8", (e + c**2 * e1 * X) / ((e * e2 - 1) * E - c * e1), ["e", "e1", "e2"]),
        form("c7.ex.G3:G4", g34, ["e", "e1", "e2", "e3"]),
        form("c7.ex.five", five, ["e", "e1", "e2", "e3", "e4"]),
        form("c7.ex.G7:G8", c**2 * e * X / ((1 - c * e * e1) * E + c * e), ["e", "e1"]),
        form("c7.ex.G5:G7", (e2 * (c * e * e1 - 1) - c**2 * e * X) / (c * e + (1 - c * e * e1) * E),
             ["e", "e1", "e2"]),
        form("c7.ex.G4:G5", (e2 * (c * e * e1 - 1) - c**2 * e * X) / (c * e + (1 - c * e * e1) * (1 - e2 * e3) * E),
             ["e", "e1", "e2", "e3"]),
        form("c7.ex.G3:G4b", g34b, ["e", "e1", "e2", "e3", "e4"]),
        form("c7.ex.six", six, ["e", "e1", "e2", "e3", "e4", "e5"]),
    ]
    five_fix = (e * exp(e4) + c * (c * e1 + e * e3) * X) / ((1 - e * e2) * E - e * e3 - c * e1)
    six_fix = ((e2 * (1 + c * e * e1) * (exp(e5) + c * e4 * X) + c**2 * e * X)
               / ((1 + c * e * e1) * (1 - e2 * e3) * E - e2 * e4 * (1 + c * e * e1) - c * e))
    out.append(form("c7.ex.five.fix", five_fix, ["e", "e1", "e2", "e3", "e4"], "corrected",
                    "closed form of chain (5,e),(8,e1),(4,e2),(3,e3),(6,e4) on u = 0, group convention",
                    "c7.ex.five"))
    out.append(form("c7.ex.six.fix", six_fix, ["e", "e1", "e2", "e3", "e4", "e5"], "corrected",
                    "closed form of chain (8,e),(7,e1),(5,e2),(4,e3),(3,e4),(6,e5) on u = 0, group convention",
                    "c7.ex.six"))
    return out


FIVE_CHAIN = ((5, "e"), (8, "e1"), (4, "e2"), (3, "e3"), (6, "e4"))
SIX_CHAIN = ((8, "e"), (7, "e1"), (5, "e2"), (4, "e3"), (3, "e4"), (6, "e5"))


def all_entries(case, params: PdeParams) -> list[SolutionForm]:
    """Explicit solutions plus multi-parameter examples, sorted by id."""
    out = solutions(case, params)
    if CaseId(case) == CaseId.CASE7:
        out += example_multiparameter(params)
    return sorted(out, key=lambda s: s.id)


def find(entries, entry_id: str):
    for e in entries:
        if e.id == entry_id:
            return e
    raise KeyError(entry_id)


def with_constants(form: SolutionForm, values: dict) -> SolutionForm:
    """Freeze constants to concrete values."""
    fixed = dict(form.fixed)
    fixed.update(values)
    return replace(form, constants=tuple(cn for cn in form.constants if cn[0] not in values),
                   fixed=tuple(sorted(fixed.items())))


__all__ = [
    "SolutionForm", "ReductionRecord", "KnownF", "solutions", "reductions", "reconstruct",
    "travelling_wave_forms", "travelling_waves", "travelling_wave_ode", "example_multiparameter",
    "all_entries", "find", "with_constants", "uniform_decay", "FIVE_CHAIN", "SIX_CHAIN",
]


def uniform_decay(params: PdeParams) -> SolutionForm:
    """x-independent solution u' = -lam u^m, valid for every member of the family.

    Not part of any printed list; used as a seed when a case has no closed form.
    """
    lam, m = params.lam, params.m
    if m == 1:
        expr = A * exp(-lam * T)
        rng = (0.5, 2.0)
    else:
        expr = (A + lam * (m - 1) * T, 1 / (1 - m))
        rng = _positive_range(2 * max(0.0, -lam * (m - 1)))
    return _explicit(f"c{int(params.case)}.uniform", params.case, expr, (("A", *rng),), source="derived",
                     note="spatially uniform decay")
