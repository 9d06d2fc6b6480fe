"""Residual engine: explicit, implicit and reduced-ODE checks on feasible samples."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from . import exprcore as ec
from .catalog import KnownF, ReductionRecord, SolutionForm
from .errors import RootNotBracketed
from .exprcore import Expr
from .family import PdeParams

VERIFIED, DISCREPANT, EMPTY_DOMAIN = "VERIFIED", "DISCREPANT", "EMPTY_DOMAIN"

TOL_EXPLICIT = 1e-8
TOL_IMPLICIT = 1e-7
TOL_ODE = 1e-9
TOL_NUMERIC_F = 1e-6
TOL_FD = 1e-5
MAX_ATTEMPTS = 10_000
MIN_POINTS = 20
GUARD_MARGIN = 1e-3


@dataclass
class SampleDomain:
    """Rectangle in (x, t) cut down by guard expressions that must exceed ``margin``."""

    x_range: tuple[float, float] = (0.1, 2.0)
    t_range: tuple[float, float] = (0.1, 2.0)
    guards: list = field(default_factory=list)
    margin: float = GUARD_MARGIN
    n: int = 200
    seed: int = 0
    lattice: bool = False
    points: tuple | None = None

    @property
    def quota(self) -> int:
        """Fewest feasible points that still count as a verdict."""
        return 1 if self.points is not None else min(MIN_POINTS, self.n)

    def feasible(self, env: dict) -> np.ndarray:
        ok = np.ones(np.shape(env["x"]), dtype=bool)
        for kind, g in self.guards:
            v = ec.evaluate_array(g, env, strict=False)
            with np.errstate(invalid="ignore"):
                ok &= (v > self.margin) if kind == "pos" else (np.abs(v) > self.margin)
        return ok

    def sample(self, extra: Callable[[dict], np.ndarray] | None = None,
               rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray, int]:
        """Up to ``n`` feasible points by rejection; returns (x, t, attempts)."""
        if self.points is not None:
            env = {"x": np.asarray(self.points[0], float), "t": np.asarray(self.points[1], float)}
            ok = self.feasible(env)
            if extra is not None:
                ok &= extra(env)
            return env["x"][ok], env["t"][ok], len(ok)
        if self.lattice:
            side = int(math.ceil(math.sqrt(self.n)))
            xs, ts = np.meshgrid(np.linspace(*self.x_range, side), np.linspace(*self.t_range, side))
            env = {"x": xs.ravel(), "t": ts.ravel()}
            ok = self.feasible(env)
            if extra is not None:
                ok &= extra(env)
            return env["x"][ok], env["t"][ok], side * side
        rng = rng or np.random.default_rng(self.seed)
        got_x, got_t, attempts, have = [], [], 0, 0
        while have < self.n and attempts < MAX_ATTEMPTS:
            batch = min(max(2 * (self.n - have), 64), MAX_ATTEMPTS - attempts)
            env = {"x": rng.uniform(*self.x_range, batch), "t": rng.uniform(*self.t_range, batch)}
            attempts += batch
            ok = self.feasible(env)
            if extra is not None:
                ok &= extra(env)
            got_x.append(env["x"][ok])
            got_t.append(env["t"][ok])
            have += int(ok.sum())
        x = np.concatenate(got_x)[: self.n] if got_x else np.empty(0)
        t = np.concatenate(got_t)[: self.n] if got_t else np.empty(0)
        return x, t, attempts


@dataclass
class ResidualReport:
    entry_id: str
    points: int
    max_scaled: float
    mean_scaled: float
    worst_point: dict
    verdict: str
    tol: float
    source: str = "printed"
    note: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "id": self.entry_id, "points": self.points, "max_scaled": _clean(self.max_scaled),
            "mean_scaled": _clean(self.mean_scaled), "worst_point": {k: _clean(v) for k, v in self.worst_point.items()},
            "verdict": self.verdict, "tol": self.tol, "source": self.source,
        }
        if self.note:
            d["note"] = self.note
        if self.extra:
            d.update({k: self.extra[k] for k in sorted(self.extra)})
        return d


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating,)):
        return _clean(float(v))
    return v


def verdict_for(max_scaled: float, points: int, tol: float, quota: int = MIN_POINTS) -> str:
    if points < quota:
        return EMPTY_DOMAIN
    return VERIFIED if max_scaled <= tol else DISCREPANT


def merge_reports(entry_id: str, parts: list[ResidualReport], tol: float, **kw) -> ResidualReport:
    """Combine per-draw reports: worst residual wins, points add up."""
    live = [p for p in parts if p.points > 0]
    if not live:
        return ResidualReport(entry_id, 0, math.nan, math.nan, {}, EMPTY_DOMAIN, tol, **kw)
    worst = max(live, key=lambda p: (p.max_scaled if math.isfinite(p.max_scaled) else math.inf))
    n = sum(p.points for p in live)
    mean = sum(p.mean_scaled * p.points for p in live) / n
    verdicts = [p.verdict for p in parts]
    if DISCREPANT in verdicts:
        verdict = DISCREPANT
    elif VERIFIED in verdicts and n >= MIN_POINTS:
        verdict = VERIFIED
    else:
        verdict = EMPTY_DOMAIN
    return ResidualReport(entry_id, n, worst.max_scaled, mean, worst.worst_point, verdict, tol, **kw)


# -- explicit -----------------------------------------------------------------

@dataclass(frozen=True)
class _Pieces:
    u: Expr
    ut: Expr
    flux: Expr
    src: Expr
    guards: tuple


@lru_cache(maxsize=4096)
def residual_pieces(u: Expr, params: PdeParams) -> _Pieces:
    """u_t, u^k u_x and lam u^m for a solution expression in x, t."""
    ut = ec.differentiate(u, "t")
    flux = u ** params.k * ec.differentiate(u, "x")
    src = params.lam * u ** params.m
    guards, seen = [], set()
    for e in (u, ut, flux, src):
        for kind, g in ec.domain_guards(e):
            if (kind, g) not in seen:
                seen.add((kind, g))
                guards.append((kind, g))
    return _Pieces(u, ut, flux, src, tuple(guards))


def scaled_residual(ut, flux, src) -> np.ndarray:
    """|u_t + u^k u_x + lam u^m| / (1 + max(|u_t|, |u^k u_x|, |lam u^m|))."""
    scale = 1.0 + np.maximum(np.maximum(np.abs(ut), np.abs(flux)), np.abs(src))
    return np.abs(ut + flux + src) / scale


def _report(entry_id, x, t, r, tol, extra_pt=None, quota=MIN_POINTS, **kw) -> ResidualReport:
    if len(r) == 0:
        return ResidualReport(entry_id, 0, math.nan, math.nan, {}, EMPTY_DOMAIN, tol, **kw)
    bad = ~np.isfinite(r)
    r = np.where(bad, np.inf, r)
    i = int(np.argmax(r))
    pt = {"x": float(x[i]), "t": float(t[i])}
    if extra_pt:
        pt.update({k: float(v[i]) for k, v in extra_pt.items()})
    mx = float(r[i])
    mean = float(np.mean(r)) if np.all(np.isfinite(r)) else math.inf
    return ResidualReport(entry_id, len(r), mx, mean, pt, verdict_for(mx, len(r), tol, quota), tol, **kw)


def evaluate_explicit(u: Expr, params: PdeParams, dom: SampleDomain, rng=None):
    """Sample feasible points of u and return (x, t, u, scaled residual)."""
    pcs = residual_pieces(u, params)
    local = SampleDomain(dom.x_range, dom.t_range, list(dom.guards) + list(pcs.guards),
                         dom.margin, dom.n, dom.seed, dom.lattice, dom.points)

    def finite(env):
        with np.errstate(all="ignore"):
            vals = [ec.evaluate_array(e, env, strict=False) for e in (pcs.u, pcs.ut, pcs.flux, pcs.src)]
        return np.all([np.isfinite(v) for v in vals], axis=0)

    x, t, _ = local.sample(finite, rng)
    env = {"x": x, "t": t}
    uu, ut, fl, sr = (ec.evaluate_array(e, env) for e in (pcs.u, pcs.ut, pcs.flux, pcs.src))
    return x, t, uu, scaled_residual(ut, fl, sr)


def _guarded(dom: SampleDomain, sol: SolutionForm, values: dict) -> SampleDomain:
    if not sol.guards:
        return dom
    return replace(dom, guards=list(dom.guards) + [("pos", g) for g in sol.bound_guards(values)])


def residual_explicit(sol: SolutionForm | Expr, params: PdeParams, dom: SampleDomain | None = None,
                      constants: dict | None = None, tol: float = TOL_EXPLICIT, draws: int = 1,
                      seed: int = 0, retries: int = 20) -> ResidualReport:
    """PDE residual of an explicit solution from exact symbolic derivatives.

    Constants not given are drawn from the entry's admissible ranges; a draw
    whose feasible region is too small is redrawn up to ``retries`` times.
    """
    if isinstance(sol, Expr):
        sol = SolutionForm("expr", int(params.case), "explicit", sol, source="derived")
    dom = dom or SampleDomain(sol.x_range, sol.t_range, seed=seed)
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(draws):
        for _attempt in range(retries):
            values = dict(constants or {})
            for name, val in sol.draw_constants(rng).items():
                values.setdefault(name, val)
            u = sol.bind(values)
            x, t, _, r = evaluate_explicit(u, params, _guarded(dom, sol, values), rng)
            if len(r) >= MIN_POINTS or not sol.constants:
                break
        rep = _report(sol.id, x, t, r, tol, quota=dom.quota, source=sol.source)
        rep.extra["constants"] = {k: values[k] for k in sorted(values)}
        parts.append(rep)
    out = merge_reports(sol.id, parts, tol, source=sol.source, note=sol.note)
    if draws == 1:
        out.extra = parts[0].extra
    out.extra["draws"] = draws
    return out


def finite_difference_crosscheck(sol: SolutionForm | Expr, params: PdeParams,
                                 dom: SampleDomain | None = None, constants: dict | None = None,
                                 tol: float = TOL_FD, seed: int = 0) -> ResidualReport:
    """Residual from 4th-order central differences, compared with the symbolic one.

    ``max_scaled`` is the largest scaled gap between the two residuals; the
    finite-difference residual itself is reported in ``extra``.
    """
    if isinstance(sol, Expr):
        sol = SolutionForm("expr", int(params.case), "explicit", sol, source="derived")
    rng = np.random.default_rng(seed)
    values = dict(constants or {})
    for name, val in sol.draw_constants(rng).items():
        values.setdefault(name, val)
    u = sol.bind(values)
    dom = _guarded(dom or SampleDomain(sol.x_range, sol.t_range, seed=seed), sol, values)
    x, t, uu, r_sym = evaluate_explicit(u, params, dom, rng)
    if len(x) == 0:
        return ResidualReport(sol.id, 0, math.nan, math.nan, {}, EMPTY_DOMAIN, tol, source=sol.source)
    f = lambda xx, tt: ec.evaluate_array(u, {"x": xx, "t": tt}, strict=False)  # noqa: E731
    hx = 1e-4 * np.maximum(1.0, np.abs(x))
    ht = 1e-4 * np.maximum(1.0, np.abs(t))
    ux = (-f(x + 2 * hx, t) + 8 * f(x + hx, t) - 8 * f(x - hx, t) + f(x - 2 * hx, t)) / (12 * hx)
    ut = (-f(x, t + 2 * ht) + 8 * f(x, t + ht) - 8 * f(x, t - ht) + f(x, t - 2 * ht)) / (12 * ht)
    k, m, lam = params.k, params.m, params.lam
    with np.errstate(all="ignore"):
        flux = _real_pow(uu, k) * ux
        src = lam * _real_pow(uu, m)
        delta = ut + flux + src
        scale = 1.0 + np.maximum(np.maximum(np.abs(ut), np.abs(flux)), np.abs(src))
        pcs = residual_pieces(u, params)
        env = {"x": x, "t": t}
        delta_sym = sum(ec.evaluate_array(e, env) for e in (pcs.ut, pcs.flux, pcs.src))
        gap = np.abs(delta - delta_sym) / scale
        r_fd = np.abs(delta) / scale
    rep = _report(sol.id, x, t, gap, tol, quota=dom.quota, source=sol.source)
    rep.extra["fd_residual_max"] = _clean(float(np.nanmax(r_fd)))
    rep.extra["symbolic_residual_max"] = _clean(float(np.max(r_sym)))
    return rep


def _real_pow(v, p):
    p = float(p)
    if float(p).is_integer():
        return v ** p
    return np.where(v > 0, np.abs(v) ** p, np.nan)


# -- implicit -----------------------------------------------------------------

def solve_bracketed(f: Callable, df: Callable, lo, hi, tol: float = 1e-12, maxiter: int = 200):
    """Vectorised safeguarded Newton: Newton steps that leave the bracket fall back to bisection.

    ``lo`` and ``hi`` must bracket a sign change of f at every entry.
    """
    lo, hi = np.array(lo, float), np.array(hi, float)
    flo = f(lo)
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = f(x)
        scale = 1.0 + np.abs(fx)
        done = (np.abs(fx) <= tol) | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(x)))
        if np.all(done):
            break
        same = np.sign(fx) == np.sign(flo)
        lo = np.where(same, x, lo)
        flo = np.where(same, fx, flo)
        hi = np.where(same, hi, x)
        with np.errstate(all="ignore"):
            step = x - fx / df(x)
        inside = np.isfinite(step) & (step > lo) & (step < hi)
        nxt = np.where(inside, step, 0.5 * (lo + hi))
        x = np.where(done, x, nxt)
        del scale
    return x


@lru_cache(maxsize=1024)
def _implicit_parts(rel: Expr):
    return tuple(ec.differentiate(rel, v) for v in ("x", "t", "u"))


def implicit_points(rel: Expr, bracket: tuple[float, float], dom: SampleDomain, rng=None):
    """Feasible (x, t) where rel changes sign on the bracket, with the extracted root u."""
    if not ec.depends_on(rel, "u"):
        raise RootNotBracketed("relation does not involve u")
    lo, hi = bracket
    rx, rt, ru = _implicit_parts(rel)

    def has_root(env):
        a = ec.evaluate_array(rel, {**env, "u": np.full_like(env["x"], lo)}, strict=False)
        b = ec.evaluate_array(rel, {**env, "u": np.full_like(env["x"], hi)}, strict=False)
        with np.errstate(invalid="ignore"):
            return np.isfinite(a) & np.isfinite(b) & (a * b < 0)

    x, t, _ = dom.sample(has_root, rng)
    env = {"x": x, "t": t}
    f = lambda uu: ec.evaluate_array(rel, {**env, "u": uu}, strict=False)  # noqa: E731
    df = lambda uu: ec.evaluate_array(ru, {**env, "u": uu}, strict=False)  # noqa: E731
    u = solve_bracketed(f, df, np.full_like(x, lo), np.full_like(x, hi))
    return x, t, u, (rx, rt, ru)


def residual_implicit(sol: SolutionForm, params: PdeParams, dom: SampleDomain | None = None,
                      tol: float = TOL_IMPLICIT, seed: int = 0) -> ResidualReport:
    """Extract u at each sample, differentiate implicitly and evaluate the PDE."""
    rel = sol.bind()
    if sol.u_bracket is None:
        raise RootNotBracketed(f"{sol.id} declares no u-bracket")
    if any(isinstance(v, float) and math.isnan(v) for _, v in sol.fixed):
        return ResidualReport(sol.id, 0, math.nan, math.nan, {}, EMPTY_DOMAIN, tol,
                              source=sol.source, note=sol.note)
    dom = dom or SampleDomain(sol.x_range, sol.t_range, seed=seed)
    x, t, u, (rx, rt, ru) = implicit_points(rel, sol.u_bracket, dom, np.random.default_rng(seed))
    env = {"x": x, "t": t, "u": u}
    with np.errstate(all="ignore"):
        dru = ec.evaluate_array(ru, env, strict=False)
        ux = -ec.evaluate_array(rx, env, strict=False) / dru
        ut = -ec.evaluate_array(rt, env, strict=False) / dru
        flux = _real_pow(u, params.k) * ux
        src = params.lam * _real_pow(u, params.m)
        r = scaled_residual(ut, flux, src)
    rep = _report(sol.id, x, t, r, tol, {"u": u}, quota=dom.quota, source=sol.source, note=sol.note)
    rep.extra["relation_max"] = _clean(float(np.max(np.abs(ec.evaluate_array(rel, env, strict=False))))
                                       if len(x) else math.nan)
    return rep


# -- reduced equations ---------------------------------------------------------------

@dataclass
class NumericF:
    """F(psi) from integrating the reduced ODE, F' = -Q/P, with dense output."""

    record: ReductionRecord
    psi0: float
    F0: float
    span: tuple[float, float]
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        P, Q = self.record.ode_coefficients()
        P = ec.substitute_many(P, self.constants) if self.constants else P
        Q = ec.substitute_many(Q, self.constants) if self.constants else Q
        self._rhs = ec.compiled(-Q / P, True)
        self._sols = []
        for end in self.span:
            if end == self.psi0:
                continue
            s = solve_ivp(lambda p, y: [float(self._rhs({"psi": p, "F": y[0]}))],
                          (self.psi0, end), [self.F0], method="DOP853", rtol=1e-12, atol=1e-12,
                          dense_output=True)
            if s.status != 0:
                raise RuntimeError(f"reduced ODE integration failed: {s.message}")
            self._sols.append((min(self.psi0, end), max(self.psi0, end), s.sol))

    def __call__(self, psi) -> np.ndarray:
        psi = np.asarray(psi, float)
        out = np.full(psi.shape, np.nan)
        for lo, hi, s in self._sols:
            sel = (psi >= lo) & (psi <= hi)
            if sel.any():
                out[sel] = s(psi[sel])[0]
        return out

    def derivative(self, psi) -> np.ndarray:
        psi = np.asarray(psi, float)
        h = 1e-4 * np.maximum(1.0, np.abs(psi))
        return (-self(psi + 2 * h) + 8 * self(psi + h) - 8 * self(psi - h) + self(psi - 2 * h)) / (12 * h)


def _ode_terms(record: ReductionRecord, constants: dict):
    P, Q = record.ode_coefficients()
    if constants:
        P, Q = (ec.substitute_many(e, constants) for e in (P, Q))
    return P, Q


def psi_range(record: ReductionRecord, x_range=(0.1, 2.0), t_range=(0.1, 2.0)) -> tuple[float, float]:
    xs, ts = np.meshgrid(np.linspace(*x_range, 41), np.linspace(*t_range, 41))
    v = ec.evaluate_array(record.psi, {"x": xs, "t": ts}, strict=False)
    v = v[np.isfinite(v)]
    return float(v.min()), float(v.max())


def verify_reduced(record: ReductionRecord, F, psi_dom: tuple[float, float] | None = None,
                   n: int = 200, constants: dict | None = None, tol: float | None = None,
                   entry_id: str | None = None, seed: int = 0) -> ResidualReport:
    """Reduced-ODE residual of F on a psi grid.

    ``F`` is an Expr in psi (exact derivative) or a ``NumericF`` (differentiated
    from its interpolant; default tolerance loosens to 1e-6).
    """
    constants = dict(constants or {})
    numeric = isinstance(F, NumericF)
    tol = tol if tol is not None else (TOL_NUMERIC_F if numeric else TOL_ODE)
    lo, hi = psi_dom or (F.span if numeric else psi_range(record))
    lo, hi = min(lo, hi), max(lo, hi)
    psi = np.linspace(lo, hi, n)
    P, Q = _ode_terms(record, constants)
    if numeric:
        Fv, dFv = F(psi), F.derivative(psi)
    else:
        Fe = ec.substitute_many(ec._lift(F), constants) if constants else ec._lift(F)
        with np.errstate(all="ignore"):
            Fv = np.broadcast_to(ec.evaluate_array(Fe, {"psi": psi}, strict=False), psi.shape)
            dFv = np.broadcast_to(ec.evaluate_array(ec.differentiate(Fe, "psi"), {"psi": psi}, strict=False),
                                  psi.shape)
    with np.errstate(all="ignore"):
        env = {"psi": psi, "F": Fv}
        pv = ec.evaluate_array(P, env, strict=False) * dFv
        qv = ec.evaluate_array(Q, env, strict=False)
        r = np.abs(pv + qv) / (1 + np.maximum(np.abs(pv), np.abs(qv)))
    keep = np.isfinite(r) & np.isfinite(Fv)
    psi_k, r_k = psi[keep], r[keep]
    eid = entry_id or record.id
    if len(r_k) == 0:
        return ResidualReport(eid, 0, math.nan, math.nan, {}, EMPTY_DOMAIN, tol)
    i = int(np.argmax(r_k))
    mx = float(r_k[i])
    return ResidualReport(eid, len(r_k), mx, float(np.mean(r_k)), {"psi": float(psi_k[i])},
                          verdict_for(mx, len(r_k), tol), tol, source="printed")


def reduction_consistency(record: ReductionRecord, params: PdeParams, n: int = 200, seed: int = 0,
                          F_range: tuple[float, float] = (0.5, 2.0), tol: float = TOL_EXPLICIT) -> ResidualReport:
    """Check that u_of_F plus the ODE reproduce the PDE for arbitrary local data (psi, F).

    At random (x, t, F), F' comes from the ODE and u_x, u_t from the chain rule.
    """
    U_ = record.u_of_F
    px, pt = ec.differentiate(record.psi, "x"), ec.differentiate(record.psi, "t")
    dU = ec.differentiate(U_, "F")
    ux = ec.add(ec.differentiate(U_, "x"), dU * ec.DFN * px)
    ut = ec.add(ec.differentiate(U_, "t"), dU * ec.DFN * pt)
    P, Q = record.ode_coefficients()
    rng = np.random.default_rng(seed)
    xs, ts, fs, rs = [], [], [], []
    attempts = 0
    while sum(len(v) for v in rs) < n and attempts < MAX_ATTEMPTS:
        m_ = 256
        attempts += m_
        x = rng.uniform(0.1, 2.0, m_)
        t = rng.uniform(0.1, 2.0, m_)
        Fv = rng.uniform(*F_range, m_)
        with np.errstate(all="ignore"):
            psi = ec.evaluate_array(record.psi, {"x": x, "t": t}, strict=False)
            env = {"psi": psi, "F": Fv}
            dF = -ec.evaluate_array(Q, env, strict=False) / ec.evaluate_array(P, env, strict=False)
            env = {"x": x, "t": t, "F": Fv, "dF": dF}
            uv = ec.evaluate_array(U_, env, strict=False)
            uxv = ec.evaluate_array(ux, env, strict=False)
            utv = ec.evaluate_array(ut, env, strict=False)
            flux = _real_pow(uv, params.k) * uxv
            src = params.lam * _real_pow(uv, params.m)
            r = scaled_residual(utv, flux, src)
            ok = np.isfinite(r)
            for g in record.guards:
                ok &= ec.evaluate_array(g, env, strict=False) > GUARD_MARGIN
        xs.append(x[ok]), ts.append(t[ok]), fs.append(Fv[ok]), rs.append(r[ok])
    x, t, Fv, r = (np.concatenate(v)[:n] for v in (xs, ts, fs, rs))
    return _report(record.id + ":consistency", x, t, r, tol, {"F": Fv})


def numeric_F(record: ReductionRecord, constants: dict | None = None,
              x_range=(0.1, 2.0), t_range=(0.1, 2.0),
              candidates=(1.0, 0.5, 2.0, 0.25, 4.0, -0.5, -1.0, -2.0, 0.1, 10.0)) -> NumericF | None:
    """Integrate the reduced ODE across the box's psi-range from the first workable start value."""
    lo, hi = psi_range(record, x_range, t_range)
    psi0 = 0.5 * (lo + hi)
    for F0 in candidates:
        for shrink in (1.0, 0.5, 0.25):
            span = (psi0 - shrink * (psi0 - lo), psi0 + shrink * (hi - psi0))
            try:
                with np.errstate(all="ignore"):
                    nf = NumericF(record, psi0, F0, span, dict(constants or {}))
            except (RuntimeError, ArithmeticError, ValueError):
                continue
            grid = np.linspace(*span, 64)
            if np.all(np.isfinite(nf(grid))) and np.all(np.isfinite(nf.derivative(grid[2:-2]))):
                return nf
    return None


def reconstruction_residual(record: ReductionRecord, params: PdeParams, F: NumericF | Expr,
                            n: int = 200, seed: int = 0, tol: float | None = None,
                            x_range=(0.1, 2.0), t_range=(0.1, 2.0)) -> ResidualReport:
    """PDE residual of u = u_of_F(x, t, F(psi(x, t))).

    u_x and u_t follow from the chain rule with F' taken from F itself, so a
    numerically integrated F is tested against the PDE rather than the ODE.
    """
    numeric = isinstance(F, NumericF)
    tol = tol if tol is not None else (TOL_NUMERIC_F if numeric else TOL_EXPLICIT)
    U_ = record.u_of_F
    px, pt = ec.differentiate(record.psi, "x"), ec.differentiate(record.psi, "t")
    dU = ec.differentiate(U_, "F")
    ux = ec.add(ec.differentiate(U_, "x"), dU * ec.DFN * px)
    ut = ec.add(ec.differentiate(U_, "t"), dU * ec.DFN * pt)
    if numeric:
        Fv, dFv, span = F, F.derivative, F.span
    else:
        Fe = ec._lift(F)
        dFe = ec.differentiate(Fe, "psi")
        Fv = lambda p: ec.evaluate_array(Fe, {"psi": p}, strict=False)  # noqa: E731
        dFv = lambda p: ec.evaluate_array(dFe, {"psi": p}, strict=False)  # noqa: E731
        span = (-math.inf, math.inf)
    lo, hi = min(span), max(span)
    h = 1e-4 * max(1.0, abs(lo), abs(hi))
    cache = {}

    def values(env):
        with np.errstate(all="ignore"):
            psi = ec.evaluate_array(record.psi, env, strict=False)
            inside = (psi >= lo + 3 * h) & (psi <= hi - 3 * h) if numeric else np.isfinite(psi)
            psi_s = np.where(inside, psi, 0.5 * (lo + hi) if numeric else 0.0)
            full = {**env, "F": Fv(psi_s), "dF": dFv(psi_s)}
            uv = ec.evaluate_array(U_, full, strict=False)
            uxv = ec.evaluate_array(ux, full, strict=False)
            utv = ec.evaluate_array(ut, full, strict=False)
            r = scaled_residual(utv, _real_pow(uv, params.k) * uxv, params.lam * _real_pow(uv, params.m))
            for g in record.guards:
                inside &= ec.evaluate_array(g, full, strict=False) > GUARD_MARGIN
        r = np.where(inside, r, np.nan)
        cache["last"] = (env["x"], r)
        return r

    def ok(env):
        return np.isfinite(values(env))

    dom = SampleDomain(x_range, t_range, n=n, seed=seed)
    x, t, _ = dom.sample(ok, np.random.default_rng(seed))
    r = values({"x": x, "t": t}) if len(x) else np.empty(0)
    rep = _report(record.id + (":numeric" if numeric else ""), x, t, r, tol, source="derived")
    if numeric:
        rep.extra["F0"] = F.F0
        rep.extra["psi0"] = F.psi0
    return rep


def known_F_report(record: ReductionRecord, known: KnownF, params: PdeParams, seed: int = 0,
                   draws: int = 1) -> tuple[ResidualReport, ResidualReport]:
    """(ODE residual of the known F, PDE residual of the reconstructed u)."""
    from .catalog import reconstruct, reconstructed_guards
    rng = np.random.default_rng(seed)
    consts = {n: float(rng.uniform(lo, hi)) for n, lo, hi in known.constants}
    ode_rep = verify_reduced(record, known.expr, known.psi_range, constants=consts,
                             entry_id=f"{record.id}:{known.label}:ode")
    u = reconstruct(record, known)
    sol = SolutionForm(f"{record.id}:{known.label}:pde", record.case, "explicit", u, known.constants,
                       source="printed", guards=reconstructed_guards(record, known))
    return ode_rep, residual_explicit(sol, params, seed=seed, draws=draws)


# -- grid dump -----------------------------------------------------------------------

def grid_rows(sol: SolutionForm, params: PdeParams, constants: dict | None = None,
              n: int = 21, seed: int = 0) -> list[tuple[float, float, float, float]]:
    """Rows (x, t, u, scaled residual) on a lattice over the entry's box."""
    rng = np.random.default_rng(seed)
    values = dict(constants or {})
    for name, val in sol.draw_constants(rng).items():
        values.setdefault(name, val)
    dom = SampleDomain(sol.x_range, sol.t_range, n=n * n, lattice=True)
    if sol.explicit:
        x, t, u, r = evaluate_explicit(sol.bind(values), params, _guarded(dom, sol, values))
    else:
        rep_x, rep_t, u, _ = implicit_points(sol.bind(values), sol.u_bracket, dom)
        x, t = rep_x, rep_t
        r = np.full_like(x, np.nan)
        if len(x):
            rel = sol.bind(values)
            rx, rt, ru = _implicit_parts(rel)
            env = {"x": x, "t": t, "u": u}
            with np.errstate(all="ignore"):
                dru = ec.evaluate_array(ru, env, strict=False)
                ux = -ec.evaluate_array(rx, env, strict=False) / dru
                ut = -ec.evaluate_array(rt, env, strict=False) / dru
                r = scaled_residual(ut, _real_pow(u, params.k) * ux, params.lam * _real_pow(u, params.m))
    return [(float(a), float(b), float(c), float(d)) for a, b, c, d in zip(x, t, u, r)]


def audit(case, params: PdeParams, seed: int = 0, tol: float | None = None, workers: int = 1):
    """Full consistency audit; see ``symflow.audit``."""
    from .audit import audit as _audit
    return _audit(case, params, seed, tol, workers)
