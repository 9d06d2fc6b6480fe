"""Method of characteristics for u_t + u^k u_x + lam u^m = 0.

Along dx/dt = u^k the PDE reduces to du/dt = -lam u^m, which has a closed
form, so x(t) is a single quadrature of the foot value u0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import exprcore as ec
from .errors import BracketFail, DomainError, Extinction, ShockReached
from .family import PdeParams

GAP_TOL = 1e-10


@dataclass(frozen=True)
class CharacteristicState:
    x0: float
    u0: float
    params: PdeParams

    def __post_init__(self):
        if not self.u0 > 0:
            raise ValueError("characteristics need u0 > 0")

    def u(self, t: float) -> float:
        return u_along_characteristic(self.u0, self.params, t)

    def x(self, t: float) -> float:
        return x_along_characteristic(self.x0, self.u0, self.params, t)

    def invariant(self, t: float) -> float:
        return conserved_quantity(self.u(t), self.params, t)


def _decay_base(u0: float, params: PdeParams, t: float) -> float:
    """u0^(1-m) + lam(m-1)t, which must stay positive up to t."""
    m = float(params.m)
    base = u0 ** (1 - m) + params.lam * (m - 1) * t
    if base <= 0:
        raise Extinction(f"u reaches 0 before t={t} (u0={u0})")
    return base


def u_along_characteristic(u0: float, params: PdeParams, t: float) -> float:
    """Value carried by a characteristic at time t."""
    if not u0 > 0:
        raise DomainError(f"u0 must be positive, got {u0}")
    m = float(params.m)
    if params.m == 1:
        return u0 * math.exp(-params.lam * t)
    return _decay_base(u0, params, t) ** (1 / (1 - m))


def conserved_quantity(u: float, params: PdeParams, t: float) -> float:
    """u^(1-m) - lam(m-1)t, or ln u + lam t when m = 1; constant along each curve.

    Along a characteristic u^(1-m) grows like u0^(1-m) + lam(m-1)t, so the
    invariant subtracts that drift.
    """
    if params.m == 1:
        return math.log(u) + params.lam * t
    m = float(params.m)
    return u ** (1 - m) - params.lam * (m - 1) * t


def speed_integral(u0: float, params: PdeParams, t: float) -> float:
    """Closed form of the integral of u(s)^k over [0, t]."""
    if t == 0:
        return 0.0
    lam, k, m = params.lam, float(params.k), float(params.m)
    if params.m == 1:
        return u0**k * (1 - math.exp(-lam * k * t)) / (lam * k)
    a = lam * (m - 1)
    B = u0 ** (1 - m)
    end = _decay_base(u0, params, t)
    p = params.k / (1 - params.m)
    if p == -1:
        return math.log(end / B) / a
    p = float(p)
    return (end ** (p + 1) - B ** (p + 1)) / (a * (p + 1))


def speed_integral_quad(u0: float, params: PdeParams, t: float) -> float:
    """Adaptive quadrature of the same integral, an independent cross-check."""
    _decay_base(u0, params, t)
    k = float(params.k)
    val, _ = quad(lambda s: u_along_characteristic(u0, params, s) ** k, 0.0, t,
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def x_along_characteristic(x0: float, u0: float, params: PdeParams, t: float,
                           method: str = "closed") -> float:
    if method == "closed":
        return x0 + speed_integral(u0, params, t)
    if method == "quad":
        return x0 + speed_integral_quad(u0, params, t)
    raise ValueError("method must be 'closed' or 'quad'")


def _datum(u0fn) -> Callable[[float], float]:
    if isinstance(u0fn, ec.Expr):
        f = ec.compiled(u0fn, False)
        return lambda x: float(f({"x": x}))
    if isinstance(u0fn, str):
        return _datum(ec.from_text(u0fn))
    if isinstance(u0fn, (int, float)):
        c = float(u0fn)
        return lambda x: c
    return lambda x: float(u0fn(x))


def _datum_array(u0fn) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(u0fn, str):
        u0fn = ec.from_text(u0fn)
    if isinstance(u0fn, ec.Expr):
        return lambda xs: ec.evaluate_array(u0fn, {"x": xs}, strict=False)
    f = _datum(u0fn)
    return lambda xs: np.array([f(v) for v in np.ravel(xs)]).reshape(np.shape(xs))


def _foot_map_array(xs: np.ndarray, us: np.ndarray, params: PdeParams, t: float) -> np.ndarray:
    """Vectorised x0 + integral of u^k; NaN where the datum is unusable or u dies out."""
    lam, k, m = params.lam, float(params.k), float(params.m)
    with np.errstate(all="ignore"):
        us = np.where(np.isfinite(us) & (us > 0), us, np.nan)
        if params.m == 1:
            return xs + us**k * (1 - math.exp(-lam * k * t)) / (lam * k)
        a = lam * (m - 1)
        B = us ** (1 - m)
        end = B + a * t
        end = np.where(end > 0, end, np.nan)
        p = params.k / (1 - params.m)
        if p == -1:
            return xs + np.log(end / B) / a
        p = float(p)
        return xs + (end ** (p + 1) - B ** (p + 1)) / (a * (p + 1))


def _foot_map(f: Callable[[float], float], params: PdeParams, t: float) -> Callable[[float], float]:
    def X(x0: float) -> float:
        u0 = f(x0)
        if not (math.isfinite(u0) and u0 > 0):
            return math.nan
        try:
            return x0 + speed_integral(u0, params, t)
        except Extinction:
            return math.nan
    return X


@dataclass
class IvpSolution:
    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    foot: np.ndarray
    t_valid: float | None
    diagnostics: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.x, self.t, self.u)]


FOOT_SCAN = 257


def find_foot(f: Callable[[float], float], params: PdeParams, x: float, t: float,
              foot_range: tuple[float, float] | None = None, scan=None) -> float:
    """x0 with x_along_characteristic(x0, f(x0), t) = x, by bracketed root-finding.

    With ``foot_range`` the range is scanned on a grid first; ``scan`` may
    supply that grid and its foot-map values to save recomputing them.
    """
    if t == 0:
        return x
    X = _foot_map(f, params, t)
    g = lambda x0: X(x0) - x  # noqa: E731
    u_here = f(x)
    guess = x - (speed_integral(u_here, params, t) if math.isfinite(u_here) and u_here > 0 else 0.0)
    if foot_range is not None:
        # scan, since characteristics from part of the range may die out before t
        if scan is None:
            grid = np.linspace(*foot_range, FOOT_SCAN)
            scan = grid, _foot_map_array(grid, np.array([f(c) for c in grid]), params, t)
        grid, vals = scan[0], scan[1] - x
        slack = 1e-12 * (1 + abs(x))  # feet sitting exactly on a grid node
        pairs = [i for i in range(len(grid) - 1)
                 if np.isfinite(vals[i]) and np.isfinite(vals[i + 1]) and vals[i] <= slack
                 and vals[i + 1] >= -slack]
        if not pairs:
            raise BracketFail(f"no foot point in {foot_range} for x={x}, t={t}")
        lo, hi = grid[pairs[0]], grid[pairs[0] + 1]
        glo, ghi = g(lo), g(hi)
        if not glo < 0 < ghi:
            return lo if abs(glo) <= abs(ghi) else hi
    else:
        width = 0.05 * max(1.0, abs(x - guess))
        start = _first_finite(g, guess, width)
        if start is None:
            raise BracketFail(f"datum not evaluable near the foot guess {guess}")
        lo = hi = start
        glo = ghi = g(start)
        # walk outwards until the gap changes sign, halving the step at the datum's domain edge
        for _ in range(200):
            if glo <= 0 <= ghi:
                break
            if width < 1e-13 * max(1.0, abs(lo)):
                raise BracketFail(f"datum leaves its domain before bracketing x={x}, t={t}")
            nxt = lo - width if glo > 0 else hi + width
            v = g(nxt)
            if not math.isfinite(v):
                width /= 2
                continue
            if glo > 0:
                hi, ghi, lo, glo = lo, glo, nxt, v
            else:
                lo, glo, hi, ghi = hi, ghi, nxt, v
            width *= 2
        else:
            raise BracketFail(f"could not bracket the foot of x={x}, t={t}")
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    try:
        return brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    except ValueError as exc:
        raise BracketFail(f"foot of x={x}, t={t} sits where characteristics die out") from exc


def _first_finite(g, centre: float, width: float, steps: int = 40) -> float | None:
    for i in range(steps):
        for cand in ((centre,) if i == 0 else (centre - i * width, centre + i * width)):
            if math.isfinite(g(cand)):
                return cand
    return None


def shock_time(u0fn, params: PdeParams, foot_range: tuple[float, float], horizon: float = 10.0,
               n_feet: int = 401, n_times: int = 200) -> float | None:
    """First time the foot map x0 -> x(t; x0) stops being increasing, or None before ``horizon``."""
    feet = np.linspace(*foot_range, n_feet)
    us = _datum_array(u0fn)(feet)

    def min_slope(t: float) -> float:
        d = np.diff(_foot_map_array(feet, us, params, t))
        d = d[np.isfinite(d)]
        return float(d.min()) if len(d) else math.inf

    times = np.linspace(0, horizon, n_times + 1)[1:]
    prev = 0.0
    for t in times:
        if min_slope(t) <= 0:
            lo, hi = prev, t
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if min_slope(mid) <= 0:
                    hi = mid
                else:
                    lo = mid
            return hi
        prev = t
    return None


def solve_ivp(u0fn, params: PdeParams, points, foot_range: tuple[float, float] | None = None,
              check_shock: bool = True, workers: int = 1) -> IvpSolution:
    """u(x, t) for the datum u(x, 0) = u0fn(x) at each query (x, t).

    ``points`` is an (n, 2) array-like of (x, t) with t >= 0.
    """
    f = _datum(u0fn)
    pts = np.atleast_2d(np.asarray(points, float))
    xs, ts = pts[:, 0], pts[:, 1]

    scans = {}
    if foot_range is not None:
        grid = np.linspace(*foot_range, FOOT_SCAN)
        ug = _datum_array(u0fn)(grid)
        scans = {t: (grid, _foot_map_array(grid, ug, params, t)) for t in np.unique(ts)}

    def one(q):
        x, t = q
        x0 = find_foot(f, params, x, t, foot_range, scans.get(t))
        u0 = f(x0)
        gap = abs(x_along_characteristic(x0, u0, params, t) - x)
        return x0, u_along_characteristic(u0, params, t), gap

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            res = list(pool.map(one, zip(xs, ts)))
    else:
        res = [one(q) for q in zip(xs, ts)]
    foot = np.array([r[0] for r in res])
    u = np.array([r[1] for r in res])
    gaps = np.array([r[2] for r in res])
    t_valid = None
    if check_shock and len(foot) and ts.max() > 0:
        rng = (float(foot.min()), float(foot.max()))
        if rng[1] > rng[0]:
            t_valid = shock_time(u0fn, params, rng, horizon=float(ts.max()))
            if t_valid is not None:
                raise ShockReached(f"characteristics cross at t={t_valid:.6g} <= {ts.max():.6g}")
    if np.any(gaps > GAP_TOL * np.maximum(1.0, np.abs(xs))):
        raise BracketFail(f"foot solve left a gap of {gaps.max():.3g}")
    return IvpSolution(xs, ts, u, foot, t_valid, {"max_gap": float(gaps.max()) if len(gaps) else 0.0,
                                                   "queries": len(xs)})


def conservation_defect(u0fn, params: PdeParams, feet, times) -> float:
    """Largest drift of the conserved quantity along the given characteristics."""
    f = _datum(u0fn)
    worst = 0.0
    for x0 in feet:
        u0 = f(x0)
        c0 = conserved_quantity(u0, params, 0.0)
        for t in times:
            ct = conserved_quantity(u_along_characteristic(u0, params, t), params, t)
            worst = max(worst, abs(ct - c0) / (1 + abs(c0)))
    return worst


def grid_points(x_spec: tuple[float, float, int], t_spec: tuple[float, float, int]) -> np.ndarray:
    xs = np.linspace(*x_spec[:2], int(x_spec[2]))
    ts = np.linspace(*t_spec[:2], int(t_spec[2]))
    X, T = np.meshgrid(xs, ts)
    return np.stack([X.ravel(), T.ravel()], axis=1)


def pre_shock_feet(datum, params: PdeParams, x_range: tuple[float, float], window: float,
                   trims: int = 12, guards=()) -> tuple[float, float] | None:
    """Sub-interval of ``x_range`` where the datum is usable and no characteristics cross before ``window``.

    Usable feet carry a positive value that survives the window and satisfy
    every expression in ``guards`` (functions of x that must stay positive).

    Trims 10% of the interval from the end nearest the first crossing until
    the foot map stays increasing.
    """
    fa = _datum_array(datum)
    xs = np.linspace(*x_range, 401)
    with np.errstate(invalid="ignore", divide="ignore"):
        u0 = fa(xs)
        ok = np.isfinite(u0) & (u0 > 0)
        if params.m != 1:
            # characteristics must not die out within the window
            m = float(params.m)
            ok &= np.abs(u0) ** (1 - m) + params.lam * (m - 1) * window > 0
        for g in guards:
            ok &= ec.evaluate_array(g, {"x": xs}, strict=False) > 0
    if not ok.any():
        return None
    # longest run of usable feet
    best, cur = (0, 0), None
    for i, good in enumerate(np.append(ok, False)):
        if good and cur is None:
            cur = i
        elif not good and cur is not None:
            if i - cur > best[1] - best[0]:
                best = (cur, i)
            cur = None
    lo, hi = xs[best[0]], xs[best[1] - 1]
    for _ in range(trims):
        if hi <= lo:
            return None
        ts = shock_time(datum, params, (lo, hi), horizon=window, n_feet=201, n_times=20)
        if ts is None:
            return lo, hi
        feet = np.linspace(lo, hi, 201)
        d = np.diff(_foot_map_array(feet, fa(feet), params, ts))
        where = feet[int(np.nanargmin(d))]
        cut = 0.1 * (hi - lo)
        if where - lo < hi - where:
            lo += cut
        else:
            hi -= cut
    return None


def forward_points(datum, params: PdeParams, feet, offsets) -> np.ndarray:
    """(x, dt) reached from each foot after each elapsed time; unusable feet are skipped."""
    f = _datum(datum)
    rows = []
    for x0 in feet:
        u0 = f(x0)
        if not (math.isfinite(u0) and u0 > 0):
            continue
        for dt in offsets:
            try:
                rows.append((x_along_characteristic(x0, u0, params, dt), dt))
            except Extinction:
                break
    return np.array(rows).reshape(-1, 2)


START_TIMES = (0.0, 0.1, 0.5, 1.0)


def compare_with_solution(u_expr: ec.Expr, params: PdeParams, x_range: tuple[float, float] = (0.1, 2.0),
                          t_start: float | None = None, window: float = 0.5, n: int = 15,
                          guards=()) -> dict:
    """L-infinity gap between an explicit solution and the characteristics solve seeded by its slice.

    The slice is taken at ``t_start`` (the equation is autonomous, so this is
    the same problem shifted in time).  Queries are the points reached from
    ``n`` feet in ``x_range`` after ``n`` elapsed times in [0, window], so every
    query lies in the slice's domain of dependence.  Without ``t_start`` the
    first of ``START_TIMES`` giving at least n queries is used.  ``guards`` are
    expressions in (x, t) that must stay positive where the formula holds.
    """
    if t_start is None:
        out = {"linf": math.nan, "points": 0, "max_gap": math.nan, "t_start": None}
        for ts in START_TIMES:
            out = compare_with_solution(u_expr, params, x_range, ts, window, n, guards)
            if out["points"] >= n:
                break
        return out
    datum = ec.substitute(u_expr, "t", t_start)
    feet = pre_shock_feet(datum, params, x_range, window,
                          guards=[ec.substitute(g, "t", t_start) for g in guards])
    if feet is None:
        return {"linf": math.nan, "points": 0, "max_gap": math.nan, "t_start": t_start}
    pts = forward_points(datum, params, np.linspace(*feet, n), np.linspace(0, window, n))
    exact = ec.evaluate_array(u_expr, {"x": pts[:, 0], "t": pts[:, 1] + t_start}, strict=False)
    keep = np.isfinite(exact) & (exact > 0)
    for g in guards:
        with np.errstate(all="ignore"):
            keep &= ec.evaluate_array(g, {"x": pts[:, 0], "t": pts[:, 1] + t_start}, strict=False) > 0
    pts = pts[keep]
    if len(pts) == 0:
        return {"linf": math.nan, "points": 0, "max_gap": math.nan, "t_start": t_start}
    sol = solve_ivp(datum, params, pts, foot_range=feet)
    err = np.abs(sol.u - exact[keep]) / np.maximum(1.0, np.abs(exact[keep]))
    return {"linf": float(err.max()), "points": len(err), "max_gap": sol.diagnostics["max_gap"],
            "t_start": t_start}
