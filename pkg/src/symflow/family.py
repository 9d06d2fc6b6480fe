"""The PDE family u_t + u^k u_x + lam u^m = 0 and its seven symmetry classes."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

from .errors import CaseMismatch, InvalidParams
from .exprcore import UT, UX, U, Expr

log = logging.getLogger(__name__)

MAX_DENOMINATOR = 10**6


class CaseId(IntEnum):
    CASE1 = 1
    CASE2 = 2
    CASE3 = 3
    CASE4 = 4
    CASE5 = 5
    CASE6 = 6
    CASE7 = 7


# Exact defining condition of each special case, in classification order.
CONDITIONS: dict[CaseId, str] = {
    CaseId.CASE7: "m=1",
    CaseId.CASE2: "k=m-1",
    CaseId.CASE3: "k=1-m",
    CaseId.CASE4: "k=(m-1)/2",
    CaseId.CASE5: "k=(1-m)/2",
    CaseId.CASE6: "k=(m-1)/3",
    CaseId.CASE1: "generic",
}

# Number of generators spanning each case's algebra.
ALGEBRA_DIMENSION = {1: 3, 2: 8, 3: 8, 4: 8, 5: 3, 6: 3, 7: 8}


def to_rational(value) -> Fraction:
    """Exact rational from an int, Fraction, "p/q" / decimal string, or float.

    Floats are snapped to the nearest fraction with denominator <= 10**6 and
    the snap is logged.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidParams("boolean is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            exact = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InvalidParams(f"cannot parse rational {value!r}") from None
    else:
        exact = Fraction(float(value))
    snapped = exact.limit_denominator(MAX_DENOMINATOR)
    if snapped != exact:
        log.info("snapped %r to rational %s", value, snapped)
    return snapped


def _conditions(k: Fraction, m: Fraction) -> dict[CaseId, bool]:
    return {
        CaseId.CASE7: m == 1,
        CaseId.CASE2: k == m - 1,
        CaseId.CASE3: k == 1 - m,
        CaseId.CASE4: k == (m - 1) / 2,
        CaseId.CASE5: k == (1 - m) / 2,
        CaseId.CASE6: k == (m - 1) / 3,
    }


def classify(k, m) -> CaseId:
    """Route (k, m) to its symmetry class using exact rational arithmetic."""
    k, m = to_rational(k), to_rational(m)
    if k == 0:
        raise InvalidParams("k must be nonzero (g(u) = u^k with k != 0)")
    for case, holds in _conditions(k, m).items():
        if holds:
            return case
    return CaseId.CASE1


def condition_holds(case: CaseId, k, m) -> bool:
    if case == CaseId.CASE1:
        return not any(_conditions(to_rational(k), to_rational(m)).values())
    return _conditions(to_rational(k), to_rational(m))[CaseId(case)]


@dataclass(frozen=True)
class PdeParams:
    """One member of the family: damping strength ``lam`` and exponents k, m."""

    lam: float
    k: Fraction
    m: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "k", to_rational(self.k))
        object.__setattr__(self, "m", to_rational(self.m))
        if self.lam == 0:
            raise InvalidParams("lambda must be nonzero")
        if self.k == 0:
            raise InvalidParams("k must be nonzero")

    @property
    def case(self) -> CaseId:
        return classify(self.k, self.m)

    @property
    def outside_hypothesis(self) -> bool:
        """True when m = 0, which the classification theorem may exclude."""
        return self.m == 0

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "k": str(self.k), "m": str(self.m)}


def params_for_case(case, lam, k=None, m=None) -> PdeParams:
    """Complete (k, m) from whichever one is given, so the case condition holds."""
    case = CaseId(case)
    k = None if k is None else to_rational(k)
    m = None if m is None else to_rational(m)
    if case == CaseId.CASE7:
        if m is not None and m != 1:
            raise CaseMismatch("case 7 requires m = 1")
        if k is None:
            raise InvalidParams("case 7 needs k")
        return PdeParams(lam, k, Fraction(1))
    if case == CaseId.CASE1:
        if k is None or m is None:
            raise InvalidParams("case 1 needs both k and m")
        p = PdeParams(lam, k, m)
    else:
        solve_k = {
            CaseId.CASE2: lambda m: m - 1,
            CaseId.CASE3: lambda m: 1 - m,
            CaseId.CASE4: lambda m: (m - 1) / 2,
            CaseId.CASE5: lambda m: (1 - m) / 2,
            CaseId.CASE6: lambda m: (m - 1) / 3,
        }[case]
        solve_m = {
            CaseId.CASE2: lambda k: k + 1,
            CaseId.CASE3: lambda k: 1 - k,
            CaseId.CASE4: lambda k: 2 * k + 1,
            CaseId.CASE5: lambda k: 1 - 2 * k,
            CaseId.CASE6: lambda k: 3 * k + 1,
        }[case]
        if m is None and k is None:
            raise InvalidParams(f"case {int(case)} needs k or m")
        if m is None:
            m = solve_m(k)
        if k is None:
            k = solve_k(m)
        p = PdeParams(lam, k, m)
    if p.case != case:
        raise CaseMismatch(f"(k={p.k}, m={p.m}) is case {int(p.case)}, not case {int(case)}")
    return p


def residual_form(params: PdeParams) -> Expr:
    """Jet expression u_t + u^k u_x + lam u^m."""
    return UT + U ** params.k * UX + params.lam * U ** params.m
