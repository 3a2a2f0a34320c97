"""Adaptive explicit Runge-Kutta integration with dense output and events.

A fixed Dormand-Prince 5(4) embedded pair drives every solver in the
package.  Reproducibility matters more here than solver variety, so the
tableau, the quartic dense-output polynomial, and the PI controller are all
spelled out below; identical inputs produce bit-identical trajectories.

The state dimension here is at most three, so the stepping core works on
plain Python floats (tuples), an order of magnitude faster than ndarray
arithmetic at this size; trajectories are packed into numpy arrays on exit.

References
----------
Dormand & Prince (1980), J. Comp. Appl. Math. 6(1), 19-26.
Shampine (1986), Math. Comp. 46, 135-150 (dense output polynomial).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import ParameterError

# Butcher tableau of the DOPRI 5(4) pair
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
# difference between the 5th and 4th order weights, for the error estimate
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# dense-output polynomial: y(t0+s*h) = y0 + h*s*sum_i K_i * P_i(s)
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    min_step: float = 1e-14
    max_steps: int = 2_000_000
    event_tolerance: float = 1e-12

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ParameterError("tolerances must be positive")
        if not 0 < self.min_step < self.max_step:
            raise ParameterError("need 0 < min_step < max_step")


@dataclass
class EventSpec:
    function: Callable[[float, Sequence[float]], float]
    direction: str = "any"  # "rising" | "falling" | "any"
    terminal: bool = False
    name: str = ""
    # a crossing must clear this band on the far side; filters tangential
    # grazes at interpolation-noise level
    value_eps: float = 1e-10


class _Segment:
    """One accepted step with its dense-output data."""

    __slots__ = ("t0", "h", "y0", "K")

    def __init__(self, t0, h, y0, K):
        self.t0 = t0
        self.h = h
        self.y0 = y0  # tuple
        self.K = K  # tuple of 7 stage-derivative tuples

    def eval(self, t):
        s = (t - self.t0) / self.h
        p = (1.0, s, s * s, s * s * s)
        dim = len(self.y0)
        out = []
        for d in range(dim):
            acc = 0.0
            for i in range(7):
                Pi = _P[i]
                acc += self.K[i][d] * (
                    Pi[0] * p[0] + Pi[1] * p[1] + Pi[2] * p[2] + Pi[3] * p[3]
                )
            out.append(self.y0[d] + self.h * s * acc)
        return tuple(out)

    def eval_derivative(self, t):
        s = (t - self.t0) / self.h
        dp = (1.0, 2 * s, 3 * s * s, 4 * s * s * s)
        dim = len(self.y0)
        out = []
        for d in range(dim):
            acc = 0.0
            for i in range(7):
                Pi = _P[i]
                acc += self.K[i][d] * (
                    Pi[0] * dp[0] + Pi[1] * dp[1] + Pi[2] * dp[2] + Pi[3] * dp[3]
                )
            out.append(acc)
        return tuple(out)


@dataclass
class Trajectory:
    ts: np.ndarray
    ys: np.ndarray  # (n_nodes, dim)
    fs: np.ndarray  # stored RHS at nodes
    events: List[tuple]  # (t_event, state, event_index)
    termination: str  # reached_end | terminal_event | step_underflow | domain_exit
    segments: List[_Segment] = field(default_factory=list, repr=False)

    @property
    def t_final(self) -> float:
        return float(self.ts[-1])

    def resample(self, grid: Sequence[float]) -> np.ndarray:
        """Dense-output states on a grid inside the time span."""
        grid = np.asarray(grid, dtype=float)
        if grid.size and (grid.min() < self.ts[0] - 1e-12 or grid.max() > self.ts[-1] + 1e-12):
            raise ParameterError(
                f"grid [{grid.min()}, {grid.max()}] outside span [{self.ts[0]}, {self.ts[-1]}]"
            )
        out = np.empty((grid.size, self.ys.shape[1]))
        seg_ends = np.array([s.t0 + s.h for s in self.segments])
        for i, t in enumerate(grid):
            if t <= self.ts[0]:
                out[i] = self.ys[0]
                continue
            j = int(np.searchsorted(seg_ends, t, side="left"))
            j = min(j, len(self.segments) - 1)
            out[i] = self.segments[j].eval(float(t))
        return out

    def derivative_at(self, t: float) -> np.ndarray:
        seg_ends = np.array([s.t0 + s.h for s in self.segments])
        j = int(np.searchsorted(seg_ends, t, side="left"))
        j = min(j, len(self.segments) - 1)
        return np.asarray(self.segments[j].eval_derivative(float(t)))


def integrate(
    rhs: Callable[[float, Sequence[float]], Sequence[float]],
    t0: float,
    state0: Sequence[float],
    t_end: float,
    config: Optional[IntegratorConfig] = None,
    events: Sequence[EventSpec] = (),
    store_segments: bool = True,
) -> Trajectory:
    """Integrate rhs from t0 to t_end (> t0) with adaptive DOPRI 5(4).

    Events are located on the dense output by bisection to the configured
    time tolerance; a terminal event truncates the trajectory there.
    Non-finite RHS values end the trajectory with termination 'domain_exit',
    a step-size underflow with 'step_underflow'.
    """
    cfg = config or IntegratorConfig()
    if t_end <= t0:
        raise ParameterError(f"t_end must exceed t0, got {t0} -> {t_end}")
    y = tuple(float(v) for v in state0)
    dim = len(y)
    t = float(t0)
    f = tuple(float(v) for v in rhs(t, y))
    if not all(math.isfinite(v) for v in f):
        raise ParameterError("rhs not finite at the initial state")

    ts = [t]
    ys = [y]
    fs = [f]
    segments: List[_Segment] = []
    hit_events: List[tuple] = []
    g_prev = [ev.function(t, y) for ev in events]

    rel, ab = cfg.rel_tol, cfg.abs_tol
    # conservative first step from the RHS magnitude
    d0 = math.sqrt(sum((v / (ab + rel * abs(v))) ** 2 for v in y) / dim)
    d1 = math.sqrt(sum((fv / (ab + rel * abs(yv))) ** 2 for fv, yv in zip(f, y)) / dim)
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(h, t_end - t0, cfg.max_step)

    err_prev = 1.0
    termination = "reached_end"
    n_steps = 0
    K = [f] * 7
    # tableau locals for the unrolled scalar path
    c1, c2, c3, c4 = _C[1], _C[2], _C[3], _C[4]
    (a10,) = _A[1]
    a20, a21 = _A[2]
    a30, a31, a32 = _A[3]
    a40, a41, a42, a43 = _A[4]
    a50, a51, a52, a53, a54 = _A[5]
    b0, b2, b3, b4, b5 = _B[0], _B[2], _B[3], _B[4], _B[5]
    e0, e2, e3, e4, e5, e6 = _E[0], _E[2], _E[3], _E[4], _E[5], _E[6]

    while t < t_end:
        if n_steps >= cfg.max_steps:
            termination = "step_underflow"
            break
        n_steps += 1
        h = min(h, t_end - t, cfg.max_step)
        if h < cfg.min_step:
            termination = "step_underflow"
            break

        if dim == 1:
            # unrolled scalar stages: the hot path for the slope equations
            y0 = y[0]
            k0 = f[0]
            k1 = rhs(t + c1 * h, (y0 + h * a10 * k0,))[0]
            k2 = rhs(t + c2 * h, (y0 + h * (a20 * k0 + a21 * k1),))[0]
            k3 = rhs(t + c3 * h, (y0 + h * (a30 * k0 + a31 * k1 + a32 * k2),))[0]
            k4 = rhs(
                t + c4 * h,
                (y0 + h * (a40 * k0 + a41 * k1 + a42 * k2 + a43 * k3),),
            )[0]
            k5 = rhs(
                t + h,
                (y0 + h * (a50 * k0 + a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4),),
            )[0]
            acc = b0 * k0 + b2 * k2 + b3 * k3 + b4 * k4 + b5 * k5
            ynd = y0 + h * acc
            k6 = rhs(t + h, (ynd,))[0]
            if not (
                math.isfinite(k1)
                and math.isfinite(k2)
                and math.isfinite(k3)
                and math.isfinite(k4)
                and math.isfinite(k5)
                and math.isfinite(k6)
            ):
                h *= 0.5
                if h < cfg.min_step:
                    termination = "domain_exit"
                    break
                continue
            ed = e0 * k0 + e2 * k2 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6
            sc = ab + rel * max(abs(y0), abs(ynd))
            err = abs(h * ed / sc)
            y_new = [ynd]
            K = [(k0,), (k1,), (k2,), (k3,), (k4,), (k5,), (k6,)]
        else:
            K[0] = f
            bad = False
            for i in range(1, 7):
                Ai = _A[i]
                yi = list(y)
                for j in range(i):
                    aij = Ai[j]
                    if aij == 0.0:
                        continue
                    Kj = K[j]
                    for d in range(dim):
                        yi[d] += h * aij * Kj[d]
                Ki = tuple(float(v) for v in rhs(t + _C[i] * h, tuple(yi)))
                if not all(math.isfinite(v) for v in Ki):
                    bad = True
                    break
                K[i] = Ki
            if bad:
                h *= 0.5
                if h < cfg.min_step:
                    termination = "domain_exit"
                    break
                continue

            y_new = []
            err = 0.0
            for d in range(dim):
                acc = 0.0
                ed = 0.0
                for i in range(7):
                    acc += _B[i] * K[i][d]
                    ed += _E[i] * K[i][d]
                ynd = y[d] + h * acc
                y_new.append(ynd)
                sc = ab + rel * max(abs(y[d]), abs(ynd))
                err += (h * ed / sc) ** 2
            err = math.sqrt(err / dim)

        if err > 1.0:
            h *= max(0.2, 0.9 * err**-0.2)
            continue

        y_new = tuple(y_new)
        seg = _Segment(t, h, y, tuple(K))
        if store_segments:
            segments.append(seg)
        t_new = t + h
        f_new = tuple(float(v) for v in rhs(t_new, y_new))

        stop = False
        g_new = [ev.function(t_new, y_new) for ev in events]
        first_hit = None
        for idx, ev in enumerate(events):
            ga, gb = g_prev[idx], g_new[idx]
            if math.isnan(ga) or math.isnan(gb):
                continue
            rising_cross = ga <= 0 and gb > ev.value_eps
            falling_cross = ga >= 0 and gb < -ev.value_eps
            if ev.direction == "rising":
                crossed = rising_cross
            elif ev.direction == "falling":
                crossed = falling_cross
            else:
                crossed = rising_cross or falling_cross
            if not crossed:
                continue
            ta, tb = t, t_new
            va = ga
            while tb - ta > cfg.event_tolerance:
                tm = 0.5 * (ta + tb)
                vm = ev.function(tm, seg.eval(tm))
                same_side = (va <= 0 and vm <= 0) or (va >= 0 and vm >= 0)
                if same_side:
                    ta, va = tm, vm
                else:
                    tb = tm
            t_ev = 0.5 * (ta + tb)
            if first_hit is None or t_ev < first_hit[0]:
                first_hit = (t_ev, seg.eval(t_ev), idx, ev.terminal)
        if first_hit is not None:
            hit_events.append(first_hit[:3])
            if first_hit[3]:
                t_ev, y_ev = first_hit[0], first_hit[1]
                ts.append(t_ev)
                ys.append(y_ev)
                fs.append(tuple(float(v) for v in rhs(t_ev, y_ev)))
                termination = "terminal_event"
                stop = True

        if not stop:
            ts.append(t_new)
            ys.append(y_new)
            fs.append(f_new)
        else:
            break
        if not all(math.isfinite(v) for v in f_new):
            termination = "domain_exit"
            break

        t, y, f = t_new, y_new, f_new
        g_prev = g_new
        # PI controller (Gustafsson): responds to current and previous error
        fac = 0.9 * err**-0.14 * err_prev**0.08 if err > 0 else 5.0
        h *= min(5.0, max(0.2, fac))
        err_prev = max(err, 1e-10)

    return Trajectory(
        ts=np.array(ts),
        ys=np.array(ys),
        fs=np.array(fs),
        events=hit_events,
        termination=termination,
        segments=segments,
    )
