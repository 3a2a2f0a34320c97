"""Implicit x-branches of the slice level sets gamma(x, y) = z.

The level set is solved for x by a bracketed bisection / safeguarded Newton
hybrid that only uses ``value`` and ``grad`` of the curvature function, so it
stays independent of any per-family closed-form inverse (those are used as
cross-checks in the test suite).

``g_plus`` is the positive-level branch on U+;  ``g_minus`` the z = -1 branch
at y in (-1, 0);  ``solve_extended`` the unrestricted monotone solve used by
the catenoid charts, where x may take either sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curvature import CurvatureFunction
from .errors import ConvergenceError, DomainError, UnsupportedError


@dataclass
class EndpointData:
    left_value: float
    right_value: float
    m0_bar: Optional[float]  # -gamma(-1,1)^(-1/alpha), when gamma(-1,1) > 0


@dataclass
class ImplicitBranch:
    """Solved branch x = g(y, z) of gamma(x, y) = z for one curvature function.

    The residual target is solve_tolerance * max(1, |z|); the default sits a
    decade below 1e-12 so the acceptance grids (z up to 3) meet an absolute
    1e-12 round-trip bound.
    """

    source: CurvatureFunction
    sign: str = "plus"
    solve_tolerance: float = 1e-13
    max_bracket_expansions: int = 60

    # -- core hybrid solver -------------------------------------------------

    def _solve_bracketed(self, y: float, z: float, lo: float, hi: float) -> float:
        """Monotone solve of gamma(x, y) = z for x in an expanding bracket.

        The bracket grows additively-then-geometrically toward the ends of
        the monotone chart; finite chart ends (denominator poles, radicand
        roots) are approached geometrically so roots hugging a pole resolve.
        """
        f = self.source
        chart_lo, chart_hi = f.x_chart(y, z)
        # step just inside finite chart ends (pole/radicand boundaries);
        # the inset scales with the bound so pole-hugging roots stay inside
        if math.isfinite(chart_lo):
            chart_lo = chart_lo + 1e-15 * abs(chart_lo) + 1e-300
        if math.isfinite(chart_hi):
            chart_hi = chart_hi - 1e-15 * abs(chart_hi) - 1e-300

        def phi(x):
            try:
                return f.value(x, y) - z
            except (DomainError, ZeroDivisionError, OverflowError):
                return math.nan

        lo = min(max(lo, chart_lo), chart_hi)
        hi = min(max(hi, chart_lo), chart_hi)
        if lo > hi:
            lo, hi = hi, lo
        flo, fhi = phi(lo), phi(hi)
        width = max(hi - lo, 1e-6)
        n_exp = 0
        while not (flo < 0 <= fhi or flo <= 0 < fhi):
            if math.isnan(fhi) or fhi < 0:
                hi = hi + width if math.isinf(chart_hi) else 0.5 * (hi + chart_hi)
            if math.isnan(flo) or flo > 0:
                lo = lo - width if math.isinf(chart_lo) else 0.5 * (lo + chart_lo)
            width *= 2.0
            n_exp += 1
            if n_exp > self.max_bracket_expansions:
                raise ConvergenceError(
                    f"{f.name}: no sign change for z={z} at y={y}",
                    bracket=(lo, hi),
                )
            flo, fhi = phi(lo), phi(hi)
        # NaN edges: shrink until the bracket is inside the domain
        for _ in range(200):
            if not math.isnan(flo) and not math.isnan(fhi):
                break
            mid = 0.5 * (lo + hi)
            fm = phi(mid)
            if math.isnan(flo):
                if math.isnan(fm) or fm < 0:
                    lo, flo = mid, fm
                else:
                    hi, fhi = mid, fm
            else:
                if math.isnan(fm) or fm > 0:
                    hi, fhi = mid, fm
                else:
                    lo, flo = mid, fm
        # bisect to a coarse width, then polish with Newton
        while hi - lo > 1e-3 * max(1.0, abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            fm = phi(mid)
            if math.isnan(fm):
                raise ConvergenceError(f"{f.name}: domain hole inside bracket", bracket=(lo, hi))
            if fm > 0:
                hi, fhi = mid, fm
            else:
                lo, flo = mid, fm
        x = 0.5 * (lo + hi)
        tol = self.solve_tolerance * max(1.0, abs(z))
        for _ in range(120):
            fx = phi(x)
            if math.isnan(fx):
                x = 0.5 * (lo + hi)
                fx = phi(x)
            if fx > 0:
                hi = x
            elif fx < 0:
                lo = x
            if abs(fx) <= tol:
                return x
            # interval pinched to machine width: residual floor reached
            if hi - lo <= 8 * math.ulp(max(abs(lo), abs(hi), 1e-30)):
                return 0.5 * (lo + hi)
            gx = f.grad(x, y)[0]
            if gx <= 0:
                raise DomainError(
                    f"{f.name}: non-increasing in x at ({x}, {y}); branch degenerates"
                )
            step = fx / gx
            x_new = x - step
            if not (lo < x_new < hi):
                x_new = 0.5 * (lo + hi)
            x = x_new
        raise ConvergenceError(f"{f.name}: Newton stalled at y={y}, z={z}", bracket=(lo, hi))

    # -- public branches ------------------------------------------------------

    def u_plus_bounds(self, y: float, z: float) -> tuple:
        """The defining inequalities of U+ as (lhs, y^alpha, rhs-or-inf)."""
        f = self.source
        a = f.alpha_float
        g11 = f.value(1.0, 1.0)
        lo = z / g11
        if f.is_one_degenerate:
            return lo, y**a, math.inf
        return lo, y**a, z / f.value(0.0, 1.0)

    def in_u_plus(self, y: float, z: float) -> bool:
        if y <= 0 or z <= 0:
            return False
        lo, ya, hi = self.u_plus_bounds(y, z)
        return lo < ya < hi

    def g_plus(self, y: float, z: float) -> float:
        """Unique x > 0 with gamma(x, y) = z, for y^alpha < z/gamma(0, 1).

        The right U+ inequality is exactly positivity of the solution and is
        enforced; left of U+ the branch continues with x > y (the solve is
        still monotone there) and is accepted.
        """
        f = self.source
        if y <= 0 or z <= 0:
            raise DomainError(f"U+ requires y > 0 and z > 0, got ({y}, {z})")
        _, ya, hi = self.u_plus_bounds(y, z)
        if not ya < hi:
            raise DomainError(
                f"(y, z) outside U+: need y^alpha < z/gamma(0,1), got {ya} >= {hi}",
                violated="right",
            )
        # proof bound 0 < x < y inside U+; the bracket expands automatically
        a = f.alpha_float
        upper = y if not f.is_one_degenerate else y * z ** (1.0 / a) * f.value(1.0, 1.0) ** (-1.0 / a) + y
        return self._solve_bracketed(y, z, 0.0, upper)

    def solve_extended(self, y: float, z: float, seed: Optional[float] = None) -> float:
        """Monotone-in-x solve with no positivity restriction on x.

        Used by the catenoid charts where the curvature argument changes
        sign; the seed (if given) centers the initial bracket.
        """
        c = seed if seed is not None else 0.0
        w = max(1.0, abs(c), abs(y))
        return self._solve_bracketed(y, z, c - 0.25 * w, c + 0.25 * w)

    def solve_level(self, y: float, z: float, seed: Optional[float] = None) -> float:
        """Fast x-solve: closed form when the family has one, else numeric.

        Families whose inverse is algebraically exact are trusted directly;
        other closed forms (even-power branches can be spurious) are
        residual-verified and fall back to the numeric path.
        """
        f = self.source
        try:
            x = f.solve_x(y, z)
            if f.closed_inverse_exact:
                if math.isfinite(x):
                    return x
            elif math.isfinite(x) and abs(f.value(x, y) - z) <= 1e-10 * max(1.0, abs(z)):
                lo, hi = f.x_chart(y, z)
                if lo < x < hi:
                    return x
        except (UnsupportedError, DomainError, ZeroDivisionError, OverflowError):
            pass
        return self.solve_extended(y, z, seed)

    def has_minus_level(self) -> bool:
        """Whether the slice evaluator reaches the -1 level at y in (-1, 0)."""
        f = self.source
        if f.is_signed:
            return True
        name = f.name.split(":")[0]
        # Hessian quotients extend through the y-factored form; even k-norms
        # through the odd sign rule.  Registered positive families do not.
        return name in ("hq", "qk", "knorm", "sk")

    def g_minus(self, y: float) -> float:
        """The x-solve of gamma(x, y) = -1 for y in (-1, 0).

        For families whose -1 level lies at x > 0 (Hessian quotients,
        k-norms) this is the standard U- branch; for S_k the level only
        exists at x < 0 and the chart solution is returned unrestricted.
        """
        f = self.source
        if not self.has_minus_level():
            raise UnsupportedError(f"{f.name} is positive; the -1 level is empty")
        if not -1.0 < y < 0.0:
            raise DomainError(f"U- requires y in (-1, 0), got {y}")
        if f.name.startswith("knorm"):
            # solve gamma(X, -y) = 1 with X < 0, then g_- = -X (odd sign rule)
            return -self._solve_neg_chart(-y, 1.0)
        return self._solve_bracketed(y, -1.0, 0.0, max(1.0, -2 * y))

    def _solve_neg_chart(self, y: float, z: float) -> float:
        """Solve gamma(x, y) = z over x < 0 for formulas even in x."""
        f = self.source

        def phi(x):
            try:
                return f.value(x, y) - z
            except DomainError:
                return math.nan

        # on x < 0 even-in-x formulas are decreasing in x
        lo, hi = -max(1.0, 2 * y), 0.0
        flo, fhi = phi(lo), phi(hi)
        n = 0
        while math.isnan(flo) or flo < 0:
            lo *= 0.5 if math.isnan(flo) else 2.0
            flo = phi(lo)
            n += 1
            if n > 60:
                raise ConvergenceError(f"{f.name}: no left bracket on the x<0 chart")
        if fhi > 0:
            raise DomainError(f"{f.name}: level z={z} unreachable for x<0 at y={y}")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = phi(mid)
            if fm > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < self.solve_tolerance * max(1.0, abs(lo)):
                break
        return 0.5 * (lo + hi)

    # -- derivatives -----------------------------------------------------------

    def dg_dy(self, y: float, z: float, order: int = 1, branch: str = "plus") -> float:
        """Implicit y-derivatives of the branch at (y, z).

        Order 1 is -gamma_y/gamma_x at (g, y); order 2 differentiates once
        more, consuming second partials of gamma.
        """
        if branch == "plus":
            x = self.g_plus(y, z) if self.in_u_plus(y, z) else self.solve_extended(y, z)
        elif branch == "minus":
            x = self.g_minus(y)
        else:
            raise UnsupportedError(f"unknown branch {branch!r}")
        f = self.source
        gx, gy = f.grad(x, y)
        if gx <= 0:
            raise DomainError(f"{f.name}: gamma_x <= 0 at solved point ({x}, {y})")
        g1 = -gy / gx
        if order == 1:
            return g1
        if order != 2:
            raise UnsupportedError("dg_dy supports orders 1 and 2")
        gxx, gxy, gyy = f.second_partials(x, y)
        # differentiate gamma_x g' + gamma_y = 0 along y -> solve for g''
        return -(gyy + 2.0 * gxy * g1 + gxx * g1 * g1) / gx

    def dg_minus_dy_at_zero(self) -> float:
        """Slope of the -1 branch at y -> 0-, Richardson-extrapolated.

        Implicit derivatives -gamma_y/gamma_x along the branch are smooth in
        y here, so Neville extrapolation from four geometric steps reaches
        ~1e-10, enough to decide the logarithmic boundary case b = -1.
        """
        from .errors import ClassificationError

        f = self.source
        if not self.has_minus_level():
            raise UnsupportedError(f"{f.name} has no -1 level")
        hs = [4e-3, 2e-3, 1e-3, 5e-4]
        vals = []
        for h in hs:
            x = self.g_minus(-h)
            gx, gy = f.grad(x, -h)
            vals.append(-gy / gx)
        if abs(vals[-1]) > 2.0 * abs(vals[0]) and abs(vals[-1]) > 1e2:
            raise ClassificationError(
                f"{f.name}: dg_-/dy diverges toward y=0 (g_-(0,-1) is not 0)"
            )
        # Neville tableau in h (values are analytic in h near 0)
        tab = list(vals)
        pts = list(hs)
        n = len(tab)
        for m in range(1, n):
            for i in range(n - m):
                tab[i] = (pts[i + m] * tab[i] - pts[i] * tab[i + 1]) / (pts[i + m] - pts[i])
        return tab[0]

    def g_minus_limit_at_zero(self) -> float:
        """Limit of g_-(y, -1) as y -> 0-, inf if it diverges."""
        v1 = abs(self.g_minus(-1e-4))
        v2 = abs(self.g_minus(-1e-5))
        if v2 > 2 * v1 and v2 > 1e2:
            return math.inf
        return self.g_minus(-1e-6)

    # -- endpoints and tails -----------------------------------------------------

    def endpoint_data(self) -> EndpointData:
        f = self.source
        a = f.alpha_float
        y_left = f.value(1.0, 1.0) ** (-1.0 / a)
        left = y_left  # g_+(gamma(1,1)^(-1/alpha), 1) = same value, by scaling
        right = 0.0 if not f.is_one_degenerate else math.nan
        m0 = None
        try:
            gm11 = f.value(-1.0, 1.0)
        except DomainError:
            gm11 = -math.inf
        if gm11 > 0:
            m0 = -(gm11 ** (-1.0 / a))
        return EndpointData(left_value=left, right_value=right, m0_bar=m0)

    def endpoint_left_by_limit(self, n_steps: int = 6) -> float:
        """Interior-solve limit toward the left endpoint of U+ at z = 1."""
        f = self.source
        a = f.alpha_float
        y_left = f.value(1.0, 1.0) ** (-1.0 / a)
        vals = []
        for eps in np.geomspace(1e-3, 1e-8, n_steps):
            vals.append(self.g_plus(y_left * (1 + eps), 1.0))
        return vals[-1]

    def laurent_tail(self, y_lo: float = 1e3, y_hi: float = 1e6, points: int = 48) -> tuple:
        """Leading Laurent term of g_+(y, 1) at infinity: (k_gamma, c_gamma).

        Fits log g vs log y by least squares over a log-spaced grid; raises
        ClassificationError if the tail is not a clean power law.
        """
        from .errors import ClassificationError

        f = self.source
        if not f.is_one_degenerate:
            raise UnsupportedError(f"{f.name} is 1-nondegenerate; g_+ has no Laurent tail")
        ys = np.geomspace(y_lo, y_hi, points)
        gs = np.array([self.g_plus(float(y), 1.0) for y in ys])
        if np.any(gs <= 0):
            raise ClassificationError("g_+ tail is not positive")
        L = np.log(ys)
        G = np.log(gs)
        A = np.vstack([L, np.ones_like(L)]).T
        coef, res, *_ = np.linalg.lstsq(A, G, rcond=None)
        slope, intercept = coef
        fitted = A @ coef
        resid = float(np.max(np.abs(fitted - G)))
        if resid > 1e-3:
            raise ClassificationError(f"g_+ tail deviates from a power law (resid={resid:.2e})")
        return -float(slope), float(math.exp(intercept))
