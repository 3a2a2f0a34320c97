"""Sub/supersolution barriers and the slope comparison principle.

Barriers for the graphical translator slope equation

    v' = (1 + v^2)^(beta+1) * g_-( v / (r (1+v^2)^beta), -1 )

come in two families: the implicit-cone profile w_m with constant argument
w / (r (1+w^2)^beta) = m (a subsolution for m >= m0_bar), and the power
profile w = -a r^b with b the slope of g_- at the origin (the asymptotic
supersolution).  Margins are reported with the orientation that makes a
supersolution nonnegative:  margin = w' - RHS(w).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curvature import CurvatureFunction
from .errors import ConvergenceError, DomainError, ParameterError
from .implicit import ImplicitBranch
from .ode import IntegratorConfig, integrate


@dataclass
class BarrierSpec:
    kind: str  # "implicit_cone" | "power"
    m_bar: Optional[float] = None  # implicit_cone slope ratio, in [-1, 0)
    a: Optional[float] = None  # power amplitude, > 0
    b: Optional[float] = None  # power exponent, < 0
    valid_range: tuple = (1.0, 1e4)

    def __post_init__(self):
        if self.kind == "implicit_cone":
            if self.m_bar is None or not -1.0 <= self.m_bar < 0.0:
                raise ParameterError(f"implicit_cone needs m_bar in [-1, 0), got {self.m_bar}")
        elif self.kind == "power":
            if self.a is None or self.a <= 0 or self.b is None or self.b >= 0:
                raise ParameterError("power barrier needs a > 0 and b < 0")
        else:
            raise ParameterError(f"unknown barrier kind {self.kind!r}")


@dataclass
class BarrierReport:
    grid: np.ndarray
    w: np.ndarray
    margins: np.ndarray
    min_margin: float
    r_star: Optional[float]  # first grid radius past which the verdict sign holds
    verdict: str  # verified_super | verified_sub | violated
    r_at: Optional[float] = None
    skipped: int = 0
    # settle radii for each orientation (to sign_tol); None if never settles
    r_star_nonneg: Optional[float] = None
    r_star_nonpos: Optional[float] = None


def _solve_cone_w(m_bar: float, beta: float, r: float, tol: float = 1e-14) -> float:
    """Nonpositive w with w / (r (1+w^2)^beta) = m_bar.

    The map x -> x/(1+x^2)^beta is strictly increasing for beta < 1/2, so a
    safeguarded Newton on the nonpositive branch converges globally.
    """
    target = m_bar * r
    phi = lambda w: w / (1 + w * w) ** beta - target  # noqa: E731

    lo, hi = -1.0, 0.0
    while phi(lo) > 0:
        lo *= 2.0
        if lo < -1e12:
            raise ConvergenceError("cone barrier bracket failed")
    w = 0.5 * (lo + hi)
    for _ in range(100):
        fw = phi(w)
        if fw > 0:
            hi = w
        else:
            lo = w
        if abs(fw) <= tol * max(1.0, abs(target)):
            return w
        q = 1 + w * w
        dphi = (1 + (1 - 2 * beta) * w * w) / q ** (beta + 1)
        step = fw / dphi
        w_new = w - step
        if not lo < w_new < hi:
            w_new = 0.5 * (lo + hi)
        if hi - lo <= 4 * math.ulp(max(abs(lo), abs(hi), 1e-30)):
            return 0.5 * (lo + hi)
        w = w_new
    raise ConvergenceError("cone barrier Newton stalled")


def evaluate_barrier(spec: BarrierSpec, r: float, beta: float) -> tuple:
    """Barrier value and derivative (w, w') at radius r."""
    if not spec.valid_range[0] <= r <= spec.valid_range[1]:
        raise DomainError(f"r={r} outside barrier range {spec.valid_range}")
    if spec.kind == "power":
        w = -spec.a * r**spec.b
        return w, -spec.a * spec.b * r ** (spec.b - 1.0)
    m = spec.m_bar
    w = _solve_cone_w(m, beta, r)
    wp = m * (1 + w * w) ** (beta + 1.0) / (1 + (1 - 2 * beta) * w * w)
    return w, wp


def verify_inequality(
    spec: BarrierSpec,
    f: CurvatureFunction,
    grid: np.ndarray,
    sign_tol: float = 1e-9,
) -> BarrierReport:
    """Margins w' - (1+w^2)^(beta+1) g_-(w/(r(1+w^2)^beta), -1) on the grid.

    The verdict states the uniform sign beyond the first radius r_star where
    it settles; the asymptotic supersolutions of the power family approach
    zero margin from below at O(r^(2b-2)), so the sign test carries a small
    tolerance.
    """
    beta = f.beta
    branch = ImplicitBranch(f)
    margins = np.full(len(grid), np.nan)
    ws = np.full(len(grid), np.nan)
    skipped = 0
    for i, r in enumerate(grid):
        try:
            w, wp = evaluate_barrier(spec, float(r), beta)
            yarg = w / (r * (1 + w * w) ** beta)
            g = branch.g_minus(yarg)
            margins[i] = wp - (1 + w * w) ** (beta + 1.0) * g
            ws[i] = w
        except (DomainError, ConvergenceError, Exception) as exc:  # noqa: BLE001
            from .errors import TranslabError

            if not isinstance(exc, TranslabError):
                raise
            skipped += 1
    valid = ~np.isnan(margins)
    if valid.sum() == 0:
        raise DomainError("barrier argument left the g_- domain at every grid point")
    mv = margins[valid]
    gv = np.asarray(grid)[valid]
    min_margin = float(np.min(mv))

    def settle_radius(sign):
        good = sign * mv >= -sign_tol
        idx = len(good)
        for j in range(len(good) - 1, -1, -1):
            if not good[j]:
                break
            idx = j
        return float(gv[idx]) if idx < len(good) else None

    r_super = settle_radius(+1)
    r_sub = settle_radius(-1)
    if r_super is not None and (r_sub is None or r_super <= r_sub):
        return BarrierReport(
            gv, ws[valid], mv, min_margin, r_super, "verified_super",
            skipped=skipped, r_star_nonneg=r_super, r_star_nonpos=r_sub,
        )
    if r_sub is not None:
        return BarrierReport(
            gv, ws[valid], mv, min_margin, r_sub, "verified_sub",
            skipped=skipped, r_star_nonneg=r_super, r_star_nonpos=r_sub,
        )
    worst = int(np.argmin(np.abs(mv)))
    return BarrierReport(
        gv, ws[valid], mv, min_margin, None, "violated", r_at=float(gv[worst]), skipped=skipped
    )


def log_grid(r_lo: float, r_hi: float, per_decade: int = 400) -> np.ndarray:
    decades = math.log10(r_hi / r_lo)
    n = max(8, int(round(per_decade * decades)))
    return np.geomspace(r_lo, r_hi, n)


def compare_orderings(
    f: CurvatureFunction,
    v0_pairs,
    r0: float,
    r_end: float,
    config: Optional[IntegratorConfig] = None,
    n_grid: int = 200,
) -> dict:
    """Integrate ordered slope pairs and report the minimum ordering gap.

    Each pair (v_lo, v_hi) with v_lo <= v_hi is integrated through the
    positive-branch slope equation; the comparison principle demands the
    order persists, i.e. min over the shared grid of (v_hi - v_lo) >= 0.
    """
    from .bowl import _slope_rhs

    # ordering gaps are judged against -1e-9; the tolerance-proportional
    # drift of the stiff tail stays two decades below that at 1e-11
    cfg = config or IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)
    branch = ImplicitBranch(f)
    clamp = None if f.is_one_degenerate else 1.0
    rhs = _slope_rhs(f, branch, clamp)
    grid = np.linspace(r0, r_end, n_grid)
    min_gap = math.inf
    worst_pair = None
    results = []
    for v_lo, v_hi in v0_pairs:
        if v_lo > v_hi:
            v_lo, v_hi = v_hi, v_lo
        t_lo = integrate(rhs, r0, [v_lo], r_end, cfg)
        t_hi = integrate(rhs, r0, [v_hi], r_end, cfg)
        r_stop = min(t_lo.t_final, t_hi.t_final)
        g = grid[grid <= r_stop]
        gap = t_hi.resample(g)[:, 0] - t_lo.resample(g)[:, 0]
        m = float(np.min(gap))
        results.append(m)
        if m < min_gap:
            min_gap = m
            worst_pair = (v_lo, v_hi)
    return {
        "min_gap": min_gap,
        "pairs": len(results),
        "worst_pair": worst_pair,
        "all_ordered": min_gap >= -1e-9,
    }


def admissible_slope_range(f: CurvatureFunction, r0: float) -> tuple:
    """Initial slopes at r0 whose scaled argument sits inside U+."""
    a = f.alpha_float
    beta = f.beta
    y_lo = f.value(1.0, 1.0) ** (-1.0 / a)
    y_hi = 1.0 if not f.is_one_degenerate else 10.0 * y_lo

    def v_of_y(y):
        target = y * r0
        lo, hi = 0.0, max(1.0, 2 * target)
        while hi / (1 + hi * hi) ** beta < target:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid / (1 + mid * mid) ** beta < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return v_of_y(y_lo * 1.001), v_of_y(y_hi * 0.999)
