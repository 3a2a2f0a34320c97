"""Catenoidal translators: neck solve, branch continuation, classification.

Construction follows three charts.  A horizontal-graph chart r(u) covers the
neck, where the generating curve has a vertical tangent:

    r'' = -(1 + r'^2)^(beta+1) * X( 1/(r (1+r'^2)^beta), r' ),

X(y, z) being the x-solve of gamma(x, y) = z anchored at the zero ray (the
curvature at the neck is negative, so r''(0) = -X(1/R, 0) > 0 and the neck
is strictly convex).  Once the tangent tilts by pi/8 the branches continue
as vertical graphs in the slope variable; on the lower branch the turning
region (slope through zero) is integrated with the slope as the independent
variable, which stays regular even where the profile curvature blows up.

Angle bookkeeping on the lower branch: the reported angle is

    theta_bar = pi/2 + |arctan(du/dr)|      (graph charts)

which starts near pi at the neck, falls, touches pi/2 exactly at the lowest
point of the branch (recorded as both the pi/2 crossing s0 and the angle
minimum s1), and rises back toward pi along the convex outer end.  The
bottom is detected transversally through the slope-zero crossing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bowl import BowlProfile, solve_bowl
from .curvature import CurvatureFunction
from .errors import (
    ClassificationError,
    DomainError,
    ParameterError,
    StructureError,
    TranslabError,
    UnsupportedError,
)
from .implicit import ImplicitBranch
from .ode import EventSpec, IntegratorConfig, integrate

HANDOFF_TAN = math.tan(math.pi / 8)


@dataclass
class NeckSolution:
    R: float
    curvature_key: str
    kappa_at_neck: float
    # per side: (u, r, r_u, s) at the chart exit, with s arc length from the neck
    up_exit: tuple
    down_exit: tuple
    up_samples: np.ndarray  # columns u, r, r_u, s
    down_samples: np.ndarray
    up_exit_reason: str  # "handoff" | "curvature_zero"
    residual_max: float


@dataclass
class Profile:
    side: str  # "upper" | "lower"
    s: np.ndarray
    r: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    kappa: np.ndarray
    residuals: np.ndarray

    def u_at(self, rs) -> np.ndarray:
        return np.interp(np.asarray(rs, dtype=float), self.r, self.u)


@dataclass
class CatenoidResult:
    R: float
    curvature_key: str
    upper: Profile
    lower: Profile
    s0: Optional[float]
    s1: Optional[float]
    case: str  # "continuous_origin" | "derivative_origin"
    n_pi2_events: int
    n_theta_min_events: int
    C_plus: Optional[float] = None
    C_minus: Optional[float] = None
    end_behavior: dict = field(default_factory=dict)
    embeddedness: dict = field(default_factory=dict)
    handoff_tan: float = HANDOFF_TAN


def _neck_rhs(f: CurvatureFunction, branch: ImplicitBranch, z_sign: float):
    """Horizontal chart RHS in the marching variable tau.

    Up side (tau = u): state slope p = r_u, curvature argument z = p.
    Down side (tau = -u): p = dr/dtau = -r_u, so z = -p while the second
    derivative is unchanged: d2r/dtau2 = r_uu either way.
    """
    beta = f.beta
    state = {"seed": None}

    def rhs(u, y):
        r, p, _s = y
        one_plus = 1.0 + p * p
        yarg = 1.0 / (r * one_plus**beta)
        z = z_sign * p
        try:
            x = branch.solve_level(yarg, z, seed=state["seed"])
        except TranslabError:
            return (math.nan, math.nan, math.nan)
        state["seed"] = x
        rpp = -(one_plus ** (beta + 1.0)) * x
        return (p, rpp, math.sqrt(one_plus))

    return rhs


def solve_neck(
    f: CurvatureFunction,
    R: float,
    config: Optional[IntegratorConfig] = None,
    handoff_tan: float = HANDOFF_TAN,
) -> NeckSolution:
    """Integrate the neck chart both ways from (r, u) = (R, 0)."""
    if not f.is_signed:
        raise UnsupportedError(f"{f.name} is not signed; no catenoidal neck exists")
    if R <= 0:
        raise ParameterError(f"neck radius must be positive, got {R}")
    cfg = config or IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    branch = ImplicitBranch(f)
    x0, y0 = f.zero_ray()
    kappa_neck = -(x0 / y0) / R
    beta = f.beta
    u_cap = 6.0 * R

    def curvature_zero(u, y):
        # r'' changes sign when the solved x crosses zero
        r, p, _s = y
        yarg = 1.0 / (r * (1 + p * p) ** beta)
        try:
            return branch.solve_level(yarg, p)
        except TranslabError:
            return math.nan

    # up side: slope rises from 0; stop at the handoff tangent or when the
    # profile curvature crosses zero (whichever first)
    ev_up = [
        EventSpec(lambda u, y: y[1] - handoff_tan, "rising", True, "handoff"),
        EventSpec(curvature_zero, "rising", True, "curvature_zero"),
    ]
    tr_up = integrate(_neck_rhs(f, branch, +1.0), 0.0, [R, 0.0, 0.0], u_cap, cfg, ev_up)
    if tr_up.termination != "terminal_event":
        raise StructureError(f"neck chart (up) did not reach a handoff: {tr_up.termination}")
    up_reason = ev_up[tr_up.events[-1][2]].name

    # down side in tau = -u; the graph slope there is r_u = -dr/dtau
    ev_dn = [EventSpec(lambda u, y: y[1] - handoff_tan, "rising", True, "handoff")]
    tr_dn = integrate(_neck_rhs(f, branch, -1.0), 0.0, [R, 0.0, 0.0], u_cap, cfg, ev_dn)
    if tr_dn.termination != "terminal_event":
        raise StructureError(f"neck chart (down) did not reach the handoff: {tr_dn.termination}")

    def exit_tuple(tr, sign):
        u_e = tr.t_final * sign
        r_e, p_e, s_e = tr.ys[-1]
        return (u_e, float(r_e), float(sign * p_e) if sign < 0 else float(p_e), float(s_e))

    # residual of the neck equation at the nodes, in the solved chart
    res = 0.0
    for tr, sign in ((tr_up, +1.0), (tr_dn, -1.0)):
        for i in range(len(tr.ts)):
            r, p, _ = tr.ys[i]
            rpp = tr.fs[i][1]
            one_plus = 1.0 + p * p
            yarg = 1.0 / (r * one_plus**beta)
            x_implied = -rpp / one_plus ** (beta + 1.0)
            res = max(res, abs(f.value(x_implied, yarg) - sign * p))

    up_exit = exit_tuple(tr_up, +1.0)
    down_exit = exit_tuple(tr_dn, -1.0)
    up_samples = np.column_stack([tr_up.ts, tr_up.ys[:, 0], tr_up.ys[:, 1], tr_up.ys[:, 2]])
    dn_samples = np.column_stack(
        [-tr_dn.ts, tr_dn.ys[:, 0], -tr_dn.ys[:, 1], tr_dn.ys[:, 2]]
    )
    return NeckSolution(
        R=R,
        curvature_key=f.name,
        kappa_at_neck=kappa_neck,
        up_exit=up_exit,
        down_exit=down_exit,
        up_samples=up_samples,
        down_samples=dn_samples,
        up_exit_reason=up_reason,
        residual_max=res,
    )


def _graph_rhs(f: CurvatureFunction, branch: ImplicitBranch):
    """Slope-equation RHS (v, u, s) for either branch, extended solve."""
    beta = f.beta
    state = {"seed": None}

    def rhs(r, y):
        v = y[0]
        one_plus = 1.0 + v * v
        yarg = v / (r * one_plus**beta)
        try:
            x = branch.solve_level(yarg, 1.0, seed=state["seed"])
        except TranslabError:
            return (math.nan, math.nan, math.nan)
        state["seed"] = x
        return (one_plus ** (beta + 1.0) * x, v, math.sqrt(one_plus))

    return rhs


def _graph_profile_arrays(f, traj, theta_of_v):
    beta = f.beta
    r = traj.ts
    v = traj.ys[:, 0]
    u = traj.ys[:, 1]
    s = traj.ys[:, 2]
    theta = theta_of_v(v)
    kappa = traj.fs[:, 0] / (1.0 + v * v) ** 1.5
    resid = np.empty_like(r)
    for i in range(len(r)):
        one_plus = 1.0 + v[i] ** 2
        yarg = v[i] / (r[i] * one_plus**beta)
        x_impl = traj.fs[i][0] / one_plus ** (beta + 1.0)
        try:
            resid[i] = abs(f.value(x_impl, yarg) - 1.0)
        except TranslabError:
            resid[i] = math.nan
    return r, v, u, s, theta, kappa, resid


def solve_upper_branch(
    f: CurvatureFunction,
    neck: NeckSolution,
    r_max: float,
    config: Optional[IntegratorConfig] = None,
) -> Profile:
    """Continue the ascending branch from the neck chart exit to r_max."""
    cfg = config or IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    branch = ImplicitBranch(f)
    u_h, r_h, ru_h, s_h = neck.up_exit
    if r_h >= r_max:
        raise ParameterError(f"r_max={r_max} does not extend past the neck chart (r={r_h})")
    v_h = 1.0 / ru_h
    traj = integrate(_graph_rhs(f, branch), r_h, [v_h, u_h, s_h], r_max, cfg)
    if traj.termination != "reached_end":
        raise StructureError(f"upper branch stopped early: {traj.termination} at r={traj.t_final}")
    r, v, u, s, theta, kappa, resid = _graph_profile_arrays(f, traj, np.arctan)
    if np.any(theta <= 0) or np.any(theta >= math.pi / 2):
        raise StructureError("upper branch tangent angle left (0, pi/2)")
    # prepend the neck-chart segment (theta = pi/2 - arctan(r_u))
    nu = neck.up_samples
    th_n = math.pi / 2 - np.arctan(nu[:, 2])
    kap_n = np.gradient(th_n, nu[:, 3]) if len(nu) > 2 else np.zeros(len(nu))
    s_all = np.concatenate([nu[:, 3], s])
    r_all = np.concatenate([nu[:, 1], r])
    u_all = np.concatenate([nu[:, 0], u])
    th_all = np.concatenate([th_n, theta])
    ka_all = np.concatenate([kap_n, kappa])
    re_all = np.concatenate([np.full(len(nu), neck.residual_max), resid])
    return Profile("upper", s_all, r_all, u_all, th_all, ka_all, re_all)


def classify_case(f: CurvatureFunction, branch: ImplicitBranch) -> str:
    """Lower-end dichotomy from the origin behavior of the slice function."""
    meta = f.signed_meta
    if meta is not None and meta.origin_value == "continuous_zero":
        return "continuous_origin"
    # derivative case requires g_-(0,-1) = 0 with finite negative slope
    try:
        lim = branch.g_minus_limit_at_zero()
        if math.isfinite(lim) and abs(lim) < 1e-3:
            slope = branch.dg_minus_dy_at_zero()
            if slope < 0:
                return "derivative_origin"
    except TranslabError:
        pass
    if meta is not None and meta.origin_value == "undefined":
        raise ClassificationError(
            f"{f.name}: origin not continuous and g_-(0,-1) data inconclusive"
        )
    return "continuous_origin"


def solve_lower_branch(
    f: CurvatureFunction,
    neck: NeckSolution,
    r_max: float,
    config: Optional[IntegratorConfig] = None,
) -> tuple:
    """Descend from the neck; returns (Profile, s0, s1, case, end_behavior).

    Case "continuous_origin": the branch bottoms out at finite radius
    (slope-zero crossing, arc length s0 = s1) and continues as a convex
    ascending graph to r_max.  Case "derivative_origin": the branch
    descends and flattens forever; the end slope is fitted to -a r^b.
    """
    cfg = config or IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    branch = ImplicitBranch(f)
    case = classify_case(f, branch)
    u_h, r_h, ru_h, s_h = neck.down_exit
    if r_h >= r_max:
        raise ParameterError(f"r_max={r_max} does not extend past the neck chart (r={r_h})")
    w_h = 1.0 / ru_h  # negative: the branch descends
    beta = f.beta
    rhs = _graph_rhs(f, branch)

    pieces = []  # (r, w, u, s, f0) arrays per chart piece
    s0 = s1 = None
    n_pi2 = n_min = 0
    end_behavior = {"case": case}

    if case == "derivative_origin":
        traj = integrate(rhs, r_h, [w_h, u_h, s_h], r_max, cfg)
        if traj.termination != "reached_end":
            raise StructureError(
                f"lower branch stopped early: {traj.termination} at r={traj.t_final}"
            )
        if traj.ys[-1, 0] >= 0:
            raise StructureError("derivative_origin branch unexpectedly turned upward")
        pieces.append(traj)
        b_formula = branch.dg_minus_dy_at_zero()
        r_t = traj.ts
        w_t = traj.ys[:, 0]
        mask = r_t >= max(r_h * 2.0, r_max / 10.0)
        L = np.log(r_t[mask])
        W = np.log(-w_t[mask])
        X = np.vstack([L, np.ones_like(L)]).T
        coef, *_ = np.linalg.lstsq(X, W, rcond=None)
        b_hat = float(coef[0])
        is_log = abs(b_formula + 1.0) < 1e-9
        # amplitude with the formula exponent pinned
        a_R = float(math.exp(np.mean(W - b_formula * L)))
        theta_p_end = abs(traj.fs[-1][0]) / (1 + w_t[-1] ** 2) ** 1.5
        end_behavior.update(
            {
                "kind": "logarithmic" if is_log else "power_law",
                "b": b_formula,
                "b_fitted": b_hat,
                "exponent_u": b_formula + 1.0,
                "a_R": a_R,
                "theta_prime_end": float(theta_p_end),
            }
        )
    else:
        # descend in r until the slope flattens to the chart-switch angle
        ev = [EventSpec(lambda r, y: y[0] + HANDOFF_TAN, "rising", True, "turn_enter")]
        tr1 = integrate(rhs, r_h, [w_h, u_h, s_h], r_max, cfg, ev)
        if tr1.termination != "terminal_event":
            raise StructureError(
                f"continuous_origin branch never flattened: {tr1.termination}"
            )
        pieces.append(tr1)
        r1, (w1, u1, arc1) = tr1.t_final, tr1.ys[-1]

        # turning chart: slope w is the independent variable, state (r, u, s)
        def turn_rhs(w, y):
            r, _u, _s = y
            one_plus = 1.0 + w * w
            yarg = w / (r * one_plus**beta)
            try:
                x = branch.solve_level(yarg, 1.0)
            except TranslabError:
                return (math.nan, math.nan, math.nan)
            if x <= 0:
                return (math.nan, math.nan, math.nan)
            drdw = 1.0 / (one_plus ** (beta + 1.0) * x)
            return (drdw, w * drdw, math.sqrt(one_plus) * drdw)

        ev_bottom = [EventSpec(lambda w, y: w, "rising", False, "bottom")]
        tr2 = integrate(turn_rhs, w1, [r1, u1, arc1], HANDOFF_TAN, cfg, ev_bottom)
        if tr2.termination != "reached_end" or not tr2.events:
            raise StructureError(f"turning chart failed: {tr2.termination}")
        w_ev, y_ev, _ = tr2.events[0]
        s0 = float(y_ev[2])
        s1 = s0  # the folded angle attains its minimum at the bottom
        n_pi2 = n_min = 1
        w_end, (r2, u2, arc2) = tr2.t_final, tr2.ys[-1]

        # ascending convex tail back in the r chart
        tr3 = integrate(rhs, float(r2), [float(w_end), float(u2), float(arc2)], r_max, cfg)
        if tr3.termination != "reached_end":
            raise StructureError(
                f"lower tail stopped early: {tr3.termination} at r={tr3.t_final}"
            )
        pieces.append(("turn", tr2))
        pieces.append(tr3)
        if np.any(tr3.fs[:, 0] <= 0):
            raise StructureError("post-turn tail is not convex")
        end_behavior.update({"kind": "bowl_type"})

    # assemble the profile: neck chart samples first
    nd = neck.down_samples
    th_n = math.pi - np.abs(np.arctan(nd[:, 2]))
    kap_n = np.gradient(th_n, nd[:, 3]) if len(nd) > 2 else np.zeros(len(nd))
    S = [nd[:, 3]]
    Rr = [nd[:, 1]]
    U = [nd[:, 0]]
    TH = [th_n]
    KA = [kap_n]
    RES = [np.full(len(nd), neck.residual_max)]
    for piece in pieces:
        if isinstance(piece, tuple):  # turning chart: independent variable w
            tr = piece[1]
            w = tr.ts
            r = tr.ys[:, 0]
            u = tr.ys[:, 1]
            s = tr.ys[:, 2]
            theta = math.pi / 2 + np.abs(np.arctan(w))
            with np.errstate(divide="ignore"):
                dth_ds = np.where(
                    np.abs(tr.fs[:, 2]) > 0,
                    np.sign(w) / ((1 + w * w) * np.where(tr.fs[:, 2] != 0, tr.fs[:, 2], 1.0)),
                    np.inf,
                )
            resid = np.empty_like(w)
            for i in range(len(w)):
                one_plus = 1.0 + w[i] ** 2
                yarg = w[i] / (r[i] * one_plus**beta)
                drdw = tr.fs[i][0]
                if drdw <= 0:
                    resid[i] = math.nan
                    continue
                x_impl = 1.0 / (one_plus ** (beta + 1.0) * drdw)
                try:
                    resid[i] = abs(f.value(x_impl, yarg) - 1.0)
                except TranslabError:
                    resid[i] = math.nan
            S.append(s)
            Rr.append(r)
            U.append(u)
            TH.append(theta)
            KA.append(dth_ds)
            RES.append(resid)
        else:
            tr = piece
            r, w, u, s, _, kappa, resid = _graph_profile_arrays(f, tr, np.arctan)
            theta = math.pi / 2 + np.abs(np.arctan(w))
            kap = np.sign(w) * np.abs(kappa)
            S.append(s)
            Rr.append(r)
            U.append(u)
            TH.append(theta)
            KA.append(kap)
            RES.append(resid)
    prof = Profile(
        "lower",
        np.concatenate(S),
        np.concatenate(Rr),
        np.concatenate(U),
        np.concatenate(TH),
        np.concatenate(KA),
        np.concatenate(RES),
    )
    return prof, s0, s1, case, end_behavior, n_pi2, n_min


def check_embeddedness(result: CatenoidResult) -> dict:
    """Minimum vertical separation of the branches over the shared graph range."""
    up, lo = result.upper, result.lower
    if result.case == "continuous_origin":
        # past the bottom both branches are graphs
        i_bottom = int(np.argmin(lo.u))
        r_lo_start = lo.r[i_bottom]
    else:
        r_lo_start = lo.r[0]
    r_star = max(up.r[0], r_lo_start) * 1.001
    r_end = min(up.r[-1], lo.r[-1])
    if r_star >= r_end:
        return {"conclusive": False, "reason": "no shared graph range"}
    grid = np.geomspace(r_star, r_end, 400)
    gap = up.u_at(grid) - lo.u_at(grid)
    # interpolation puts O(h^2) wiggle on the sampled gap; test the trend
    # against that noise floor
    tol = 1e-4 * max(1.0, float(np.max(np.abs(gap))))
    widening = (
        bool(np.all(np.diff(gap) > -tol)) if result.case == "continuous_origin" else None
    )
    return {
        "conclusive": True,
        "r_star": float(r_star),
        "min_gap": float(np.min(gap)),
        "widening": widening,
    }


def solve_catenoid(
    f: CurvatureFunction,
    R: float,
    r_max: float,
    config: Optional[IntegratorConfig] = None,
    handoff_tan: float = HANDOFF_TAN,
    bowl: Optional[BowlProfile] = None,
    fit_window: Optional[tuple] = None,
) -> CatenoidResult:
    """Full catenoid construction: neck, both branches, offsets, embeddedness."""
    neck = solve_neck(f, R, config, handoff_tan)
    upper = solve_upper_branch(f, neck, r_max, config)
    lower, s0, s1, case, end_behavior, n_pi2, n_min = solve_lower_branch(
        f, neck, r_max, config
    )
    result = CatenoidResult(
        R=R,
        curvature_key=f.name,
        upper=upper,
        lower=lower,
        s0=s0,
        s1=s1,
        case=case,
        n_pi2_events=n_pi2,
        n_theta_min_events=n_min,
        end_behavior=end_behavior,
        handoff_tan=handoff_tan,
    )
    window = fit_window or (r_max / 3.0, 0.9 * r_max)
    if bowl is None:
        bowl = solve_bowl(f, r_max, config)
    grid = np.geomspace(window[0], window[1], 200)
    ub = np.interp(grid, bowl.r, bowl.u)
    result.C_plus = float(np.mean(upper.u_at(grid) - ub))
    if case == "continuous_origin":
        result.C_minus = float(np.mean(lower.u_at(grid) - ub))
    result.embeddedness = check_embeddedness(result)
    return result


def upper_growth_exponent(result: CatenoidResult, window: Optional[tuple] = None) -> float:
    """Log-log slope of u_+ over the tail window (expected alpha + 1)."""
    up = result.upper
    r_hi = up.r[-1]
    window = window or (r_hi / 3.0, 0.9 * r_hi)
    mask = (up.r >= window[0]) & (up.r <= window[1])
    r = up.r[mask]
    u = up.u[mask]
    if np.any(u <= 0):
        raise ClassificationError("upper height not positive on the window")
    X = np.vstack([np.log(r), np.ones(mask.sum())]).T
    coef, *_ = np.linalg.lstsq(X, np.log(u), rcond=None)
    return float(coef[0])
