"""Bowl-type translator profiles and their asymptotics.

The slope v = u'(r) of a rotationally symmetric graphical translator obeys

    v' = (1 + v^2)^(beta+1) * g_+( v / (r (1+v^2)^beta), 1 ),
    beta = (alpha - 1) / (2 alpha),

integrated here from a series start v = lambda0 * r at the axis, where
lambda0 = gamma(1,...,1)^(-1/alpha) is the umbilic curvature forced by the
translator equation at r = 0.  The height u is recovered by quadrature.

Closed-form asymptotic coefficients (the nondegenerate pair (a, b) and the
degenerate quadruple (k, c, d, A)) are evaluated from implicit-branch
derivatives and checked against tail fits of the computed profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .curvature import CurvatureFunction
from .errors import DomainError, FitError, ParameterError, StructureError
from .implicit import ImplicitBranch
from .ode import EventSpec, IntegratorConfig, Trajectory, integrate

AXIS_EPS = 1e-6


@dataclass
class BowlProfile:
    curvature_key: str
    alpha: float
    beta: float
    r: np.ndarray
    u: np.ndarray
    v: np.ndarray
    residuals: np.ndarray
    termination: str
    lambda0: float
    trajectory: Trajectory = field(repr=False, default=None)

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def v_at(self, rs) -> np.ndarray:
        return self.trajectory.resample(np.asarray(rs, dtype=float))[:, 0]

    def u_at(self, rs) -> np.ndarray:
        rs = np.asarray(rs, dtype=float)
        return np.interp(rs, self.r, self.u)


@dataclass
class AsymptoticReport:
    regime: str  # "nondegenerate" | "degenerate"
    formula: dict
    fitted: dict
    rel_errors: dict
    fit_window: tuple


def _slope_rhs(f: CurvatureFunction, branch: ImplicitBranch, clamp_y: Optional[float]):
    from .errors import TranslabError

    beta = f.beta
    state = {"seed": None}

    def rhs(r, yv):
        v = yv[0]
        one_plus = 1.0 + v * v
        yarg = v / (r * one_plus**beta)
        if clamp_y is not None and yarg >= clamp_y:
            yarg = clamp_y
        try:
            x = branch.solve_level(yarg, 1.0, seed=state["seed"])
        except TranslabError:
            return (math.nan,)
        state["seed"] = x
        return (one_plus ** (beta + 1.0) * x,)

    return rhs


def solve_bowl(
    f: CurvatureFunction,
    r_max: float,
    config: Optional[IntegratorConfig] = None,
    r_eps: float = AXIS_EPS,
) -> BowlProfile:
    """Integrate the bowl slope ODE from the axis out to r_max."""
    if r_max <= 10 * r_eps:
        raise ParameterError(f"r_max={r_max} too small")
    a = f.alpha_float
    if a <= 1.0 / 3.0:
        raise ParameterError(f"bowl solver requires alpha > 1/3, got {a}")
    # in the stiff tail the controller is stability-limited, so the tight
    # default is nearly free and keeps the quasi-steady slope drift below
    # the tail-fit resolution
    cfg = config or IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    branch = ImplicitBranch(f)
    lam0 = f.value(1.0, 1.0) ** (-1.0 / a)
    clamp = None
    events = []
    if not f.is_one_degenerate:
        # right endpoint of U+: the y-argument may only touch y = 1 (cylinder)
        clamp = 1.0
        events.append(
            EventSpec(
                lambda r, yv: yv[0] / (r * (1 + yv[0] ** 2) ** f.beta) - (1.0 - 1e-12),
                direction="rising",
                terminal=True,
                name="cylinder",
            )
        )
    rhs = _slope_rhs(f, branch, clamp)
    v0 = lam0 * r_eps
    traj = integrate(rhs, r_eps, [v0], r_max, cfg, events=events)
    if traj.termination == "terminal_event":
        termination = "reached cylinder slope y=1"
    elif traj.termination == "reached_end":
        termination = "reached_end"
    else:
        raise StructureError(f"bowl integration failed: {traj.termination} at r={traj.t_final}")

    r = traj.ts
    v = traj.ys[:, 0]
    # trapezoid quadrature for u, corrected to u(0) = 0 with the series start
    u = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(r))])
    u += 0.5 * lam0 * r_eps**2  # exact integral of the linear series on [0, r_eps]
    resid = np.empty_like(r)
    beta = f.beta
    for i in range(len(r)):
        one_plus = 1.0 + v[i] ** 2
        yarg = v[i] / (r[i] * one_plus**beta)
        if clamp is not None:
            yarg = min(yarg, clamp)
        vp = traj.fs[i, 0]
        x_implied = vp / one_plus ** (beta + 1.0)
        resid[i] = abs(f.value(x_implied, yarg) - 1.0)
    return BowlProfile(
        curvature_key=f.name,
        alpha=a,
        beta=beta,
        r=r,
        u=u,
        v=v,
        residuals=resid,
        termination=termination,
        lambda0=lam0,
        trajectory=traj,
    )


# ---------------------------------------------------------------------------
# formula-side coefficients
# ---------------------------------------------------------------------------


def coeffs_nondegenerate(f: CurvatureFunction) -> tuple:
    """Closed-form expansion coefficients (a, b) of v = r^a - a/r^a + b/r^3a."""
    if f.is_one_degenerate:
        raise ParameterError(f"{f.name} is 1-degenerate; use coeffs_degenerate")
    alpha = f.alpha_float
    if alpha <= 1.0 / 3.0:
        raise ParameterError("expansion requires alpha > 1/3")
    beta = f.beta
    br = ImplicitBranch(f)
    g1 = br.dg_dy(1.0, 1.0, order=1)
    g2 = br.dg_dy(1.0, 1.0, order=2)
    if g1 == 0:
        raise DomainError("dg/dy(1,1) vanishes; coefficient formulas degenerate")
    a = -alpha * (alpha / g1 + beta)
    b = (
        2 * a * alpha**2
        - g1 * ((1 - 2 * a) * beta * (1 + beta * (1 - 2 * a)) - 2 * a**2 * beta)
        + g1 * (a / alpha + beta) * (3 * alpha - 1) * (1 - 2 * a)
        - alpha * g2 * (a / alpha + beta) ** 2
    ) / (2 * alpha * g1 * (1 - 2 * beta))
    return a, b


def coeffs_degenerate(f: CurvatureFunction) -> tuple:
    """(k_gamma, c_gamma, d_gamma, A_gamma) of the degenerate tail w = A r^d."""
    if not f.is_one_degenerate:
        raise ParameterError(f"{f.name} is 1-nondegenerate; use coeffs_nondegenerate")
    alpha = f.alpha_float
    br = ImplicitBranch(f)
    k_g, c_g = br.laurent_tail()
    if k_g < 3 * alpha - 1 - 1e-9:
        raise ParameterError(
            f"tail exponent k={k_g} below 3*alpha-1={3*alpha-1}; expansion hypothesis fails"
        )
    boundary = abs(k_g - (3 * alpha - 1)) <= 1e-9
    d_g = alpha * (k_g + 1) / (k_g - 2 * alpha + 1)
    A_g = (d_g / c_g) ** (alpha / (2 * alpha - 1 - k_g))
    return k_g, c_g, d_g, A_g, boundary


# ---------------------------------------------------------------------------
# tail fits
# ---------------------------------------------------------------------------


def _window_slice(profile: BowlProfile, window: tuple) -> np.ndarray:
    r_lo, r_hi = window
    if r_lo >= r_hi:
        raise FitError(f"bad window {window}")
    if r_hi > profile.r_max * (1 + 1e-9):
        raise FitError(f"window {window} beyond computed profile r_max={profile.r_max}")
    mask = (profile.r >= r_lo) & (profile.r <= r_hi)
    if mask.sum() < 8:
        raise FitError(f"window {window} holds {int(mask.sum())} samples; need >= 8")
    return mask


def default_window(profile: BowlProfile) -> tuple:
    return (profile.r_max / 10.0, profile.r_max / 2.0)


def fit_tail(profile: BowlProfile, regime: str, window: Optional[tuple] = None) -> AsymptoticReport:
    """Fit tail coefficients from the profile and compare with the formulas."""
    from .curvature import from_key

    f = from_key(profile.curvature_key)
    window = window or default_window(profile)
    mask = _window_slice(profile, window)
    r = profile.r[mask]
    v = profile.v[mask]
    al = profile.alpha

    if regime == "nondegenerate":
        a_f, b_f = coeffs_nondegenerate(f)
        # r^a (r^a - v) = a - b r^(-2a) + O(r^(-4a)); the third regressor
        # absorbs the remainder so it does not bias b.  Rows are weighted by
        # 1/r^a: the noise of the left side scales like r^a * (v error).
        tvals = r**al * (r**al - v)
        X = np.vstack([np.ones_like(r), -(r ** (-2 * al)), r ** (-4 * al)]).T
        w = r ** (-al)
        coef, *_ = np.linalg.lstsq(X * w[:, None], tvals * w, rcond=None)
        a_hat, b_hat = float(coef[0]), float(coef[1])
        formula = {"a": a_f, "b": b_f}
        fitted = {"a": a_hat, "b": b_hat}
        rel = {
            "a": abs(a_hat - a_f) / max(abs(a_f), 1e-30),
            "b": abs(b_hat - b_f) / max(abs(b_f), 1e-2),  # absolute near b = 0
        }
    elif regime == "degenerate":
        k_g, c_g, d_g, A_g, boundary = coeffs_degenerate(f)
        if np.any(v <= 0):
            raise FitError("slope not positive on the window")
        L, V = np.log(r), np.log(v)
        X = np.vstack([L, np.ones_like(L)]).T
        coef, *_ = np.linalg.lstsq(X, V, rcond=None)
        d_hat = float(coef[0])
        A_hat = float(math.exp(coef[1]))
        formula = {"k_gamma": k_g, "c_gamma": c_g, "d_gamma": d_g, "A_gamma": A_g,
                   "k_at_boundary": boundary}
        fitted = {"d_gamma": d_hat, "A_gamma": A_hat}
        rel = {
            "d_gamma": abs(d_hat - d_g) / abs(d_g),
            "A_gamma": abs(A_hat - A_g) / abs(A_g),
        }
    else:
        raise ParameterError(f"unknown regime {regime!r}")
    if not all(math.isfinite(x) for x in rel.values()):
        raise FitError("fit produced non-finite errors")
    return AsymptoticReport(
        regime=regime, formula=formula, fitted=fitted, rel_errors=rel, fit_window=window
    )


def growth_exponent(profile: BowlProfile, window: Optional[tuple] = None) -> float:
    """Log-log slope of the height u over the fit window."""
    window = window or default_window(profile)
    mask = _window_slice(profile, window)
    r = profile.r[mask]
    u = profile.u[mask]
    if np.any(u <= 0) or np.any(np.diff(u) <= 0):
        raise FitError("height not positive and increasing on the window")
    L, U = np.log(r), np.log(u)
    X = np.vstack([L, np.ones_like(L)]).T
    coef, *_ = np.linalg.lstsq(X, U, rcond=None)
    return float(coef[0])
