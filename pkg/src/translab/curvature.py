"""Two-variable restrictions of symmetric homogeneous curvature functions.

Every function of the principal curvatures used here is evaluated on the
rotational slice (x, y, ..., y) of R^n, which collapses it to a function
gamma(x, y) of two variables.  Each family below provides the slice value,
analytic first partials, a cone-membership predicate, and (where algebra
permits) a closed-form inverse in x that downstream modules use as an
independent cross-check of the generic root solver.

Construction normalizes gamma so that gamma(0, 1) = 1 whenever that value is
positive; the original scale is kept in ``normalization``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional

import numpy as np

from .errors import DomainError, ParameterError, UnsupportedError

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class SignedMeta:
    """Zero-ray data for sign-changing slice functions."""

    zero_ray: tuple  # unit vector (x0, y0), gamma=0, d/dx gamma > 0, x0/y0 < 0
    origin_value: str  # "continuous_zero" or "undefined"


@dataclass(frozen=True)
class DegeneracyClass:
    kind: str  # "one_nondegenerate" | "one_degenerate"
    value_at_01: float  # slice value at (0, 1) before normalization


class CurvatureFunction:
    """An alpha-homogeneous symmetric curvature function on its slice.

    Instances are immutable; all evaluation methods are pure.  ``value`` and
    ``grad`` return the *normalized* function.  Points outside the set where
    the family's formula extends raise :class:`DomainError`.
    """

    name: str
    dimension_n: int
    alpha: Fraction
    # whether _raw_solve_x is an algebraically exact inverse on its chart
    # (False where an even power can produce a spurious root)
    closed_inverse_exact = True

    def __init__(self, name: str, n: int, alpha: Fraction):
        if n < 2:
            raise ParameterError(f"dimension n must be >= 2, got {n}")
        self.name = name
        self.dimension_n = n
        self.alpha = Fraction(alpha)
        self.normalization = 1.0
        self.signed_meta: Optional[SignedMeta] = None
        v01 = self._raw_value(0.0, 1.0)
        self._value_at_01 = v01
        if abs(v01) > _NORM_TOL:
            self.normalization = v01

    # -- per-family hooks -------------------------------------------------

    def _raw_value(self, x: float, y: float) -> float:
        raise NotImplementedError

    def _raw_grad(self, x: float, y: float) -> tuple:
        raise NotImplementedError

    def _raw_second(self, x: float, y: float):
        """(gxx, gxy, gyy) of the raw slice value, or None to use differences."""
        return None

    def _raw_solve_x(self, y: float, z_raw: float) -> float:
        """Closed-form x with raw gamma(x, y) = z_raw, if the family has one."""
        raise UnsupportedError(f"{self.name}: no closed-form inverse")

    def cone_contains(self, x: float, y: float) -> bool:
        raise NotImplementedError

    # -- public evaluation -------------------------------------------------

    @property
    def alpha_float(self) -> float:
        return float(self.alpha)

    @property
    def beta(self) -> float:
        a = float(self.alpha)
        return (a - 1.0) / (2.0 * a)

    @property
    def is_one_degenerate(self) -> bool:
        return abs(self._value_at_01) <= _NORM_TOL

    @property
    def is_signed(self) -> bool:
        return self.signed_meta is not None

    def value(self, x: float, y: float) -> float:
        return self._raw_value(x, y) / self.normalization

    def grad(self, x: float, y: float) -> tuple:
        gx, gy = self._raw_grad(x, y)
        return gx / self.normalization, gy / self.normalization

    def second_partials(self, x: float, y: float) -> tuple:
        s = self._raw_second(x, y)
        if s is not None:
            c = self.normalization
            return s[0] / c, s[1] / c, s[2] / c
        h = 1e-6 * max(1.0, abs(x), abs(y))
        gxp = self.grad(x + h, y)
        gxm = self.grad(x - h, y)
        gyp = self.grad(x, y + h)
        gym = self.grad(x, y - h)
        gxx = (gxp[0] - gxm[0]) / (2 * h)
        gyy = (gyp[1] - gym[1]) / (2 * h)
        gxy = 0.5 * ((gyp[0] - gym[0]) / (2 * h) + (gxp[1] - gxm[1]) / (2 * h))
        return gxx, gxy, gyy

    def solve_x(self, y: float, z: float) -> float:
        """Closed-form reference inverse of the normalized slice value."""
        return self._raw_solve_x(y, z * self.normalization)

    def x_chart(self, y: float, z: float) -> tuple:
        """Open x-interval of the monotone piece holding the z-level at this y.

        Defaults to the whole line; rational families override to exclude
        denominator poles, root families to keep radicands nonnegative.
        """
        return (-math.inf, math.inf)

    def grad_fd(self, x: float, y: float) -> tuple:
        """Central-difference gradient with the step policy of the config."""
        h = 1e-6 * max(1.0, abs(x), abs(y))
        return (
            (self.value(x + h, y) - self.value(x - h, y)) / (2 * h),
            (self.value(x, y + h) - self.value(x, y - h)) / (2 * h),
        )

    def sample_cone_point(self, rng: np.random.Generator) -> tuple:
        """A random point of the positive slice cone, radius in [0.2, 5]."""
        for _ in range(200):
            x = rng.uniform(0.05, 5.0)
            y = rng.uniform(0.05, 5.0)
            if self.cone_contains(x, y):
                return x, y
        raise DomainError(f"{self.name}: could not sample the slice cone")

    # -- signed-function extras ---------------------------------------------

    def zero_ray(self) -> tuple:
        if self.signed_meta is None:
            raise UnsupportedError(f"{self.name} has no zero ray on the slice")
        return self.signed_meta.zero_ray

    def key(self) -> str:
        return self.name

    def __repr__(self):
        return f"<CurvatureFunction {self.name} alpha={self.alpha}>"


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


class MeanCurvature(CurvatureFunction):
    """gamma = H restricted to the slice: x + (n-1) y."""

    def __init__(self, n: int):
        super().__init__(f"mean:n={n}", n, Fraction(1))

    def _raw_value(self, x, y):
        return x + (self.dimension_n - 1) * y

    def _raw_grad(self, x, y):
        return 1.0, float(self.dimension_n - 1)

    def _raw_second(self, x, y):
        return 0.0, 0.0, 0.0

    def _raw_solve_x(self, y, z_raw):
        return z_raw - (self.dimension_n - 1) * y

    def cone_contains(self, x, y):
        return x + (self.dimension_n - 1) * y > 0


class GaussRoot(CurvatureFunction):
    """n-th root of the Gauss-Kronecker curvature: (x y^(n-1))^(1/n)."""

    def __init__(self, n: int):
        super().__init__(f"gauss:n={n}", n, Fraction(1))

    def _raw_value(self, x, y):
        n = self.dimension_n
        p = x * y ** (n - 1)
        if p >= 0:
            return p ** (1.0 / n)
        # odd-n root extends continuously to negative products
        if n % 2 == 1:
            return -((-p) ** (1.0 / n))
        raise DomainError(f"gauss:n={n} undefined at ({x}, {y})")

    def _raw_grad(self, x, y):
        n = self.dimension_n
        v = self._raw_value(x, y)
        if x == 0 or y == 0:
            raise DomainError("gauss gradient undefined on the boundary")
        return v / (n * x), (n - 1) * v / (n * y)

    def _raw_second(self, x, y):
        n = self.dimension_n
        v = self._raw_value(x, y)
        gxx = v * (1 - n) / (n * n * x * x)
        gxy = v * (n - 1) / (n * n * x * y)
        gyy = -v * (n - 1) / (n * n * y * y)
        return gxx, gxy, gyy

    def _raw_solve_x(self, y, z_raw):
        n = self.dimension_n
        return z_raw**n / y ** (n - 1)

    def cone_contains(self, x, y):
        return x > 0 and y > 0


def _garding_slice_ok(n: int, k: int, x: float, y: float) -> bool:
    for i in range(1, k + 1):
        if _sym_slice(n, i, x, y) <= 0:
            return False
    return True


def _sym_slice(n: int, k: int, x: float, y: float) -> float:
    """Elementary symmetric polynomial S_k at (x, y, ..., y)."""
    if k == 0:
        return 1.0
    return comb(n - 1, k - 1) * x * y ** (k - 1) + comb(n - 1, k) * y**k


class SymmetricPoly(CurvatureFunction):
    """gamma = S_k itself (alpha = k); signed for odd k < n."""

    def __init__(self, n: int, k: int):
        if not 1 <= k <= n:
            raise ParameterError(f"s_k requires 1 <= k <= n, got k={k}, n={n}")
        self.k = k
        self._a = comb(n - 1, k - 1)
        self._b = comb(n - 1, k)
        super().__init__(f"sk:k={k},n={n}", n, Fraction(k))
        if k % 2 == 1 and k < n:
            ratio = -(n - k) / k
            norm = math.hypot(ratio, 1.0)
            self.signed_meta = SignedMeta(
                zero_ray=(ratio / norm, 1.0 / norm), origin_value="continuous_zero"
            )

    def _raw_value(self, x, y):
        k = self.k
        return self._a * x * y ** (k - 1) + self._b * y**k

    def _raw_grad(self, x, y):
        k = self.k
        gx = self._a * y ** (k - 1)
        gy = self._a * (k - 1) * x * y ** (k - 2) + self._b * k * y ** (k - 1)
        return gx, gy

    def _raw_second(self, x, y):
        k = self.k
        gxx = 0.0
        gxy = self._a * (k - 1) * y ** (k - 2)
        gyy = self._a * (k - 1) * (k - 2) * x * y ** (k - 3) + self._b * k * (
            k - 1
        ) * y ** (k - 2)
        return gxx, gxy, gyy

    def _raw_solve_x(self, y, z_raw):
        k = self.k
        if self._a == 0 or y == 0:
            raise DomainError("sk inverse undefined at y=0")
        return (z_raw - self._b * y**k) / (self._a * y ** (k - 1))

    def cone_contains(self, x, y):
        return _garding_slice_ok(self.dimension_n, self.k, x, y)


class HessianQuotient(CurvatureFunction):
    """gamma = ((S_k/S_l) * (S_l/S_k at (0,1,...,1)))^(1/(k-l)), 0 <= l < k <= n.

    The slice value is kept in the y-factored form
        c * y * ((B_k y + B_{k-1} x) / (B_l y + B_{l-1} x))^(1/(k-l)),
    which extends to y < 0 and satisfies the odd sign rule exactly.
    """

    def __init__(self, n: int, k: int, l: int):  # noqa: E741 - conventional index name
        if not 0 <= l < k <= n:
            raise ParameterError(f"hessian quotient requires 0 <= l < k <= n, got k={k}, l={l}")
        self.k = k
        self.l = l
        self.m = k - l
        self.closed_inverse_exact = self.m == 1  # m-th power solve is not
        self._bk = comb(n - 1, k)
        self._bk1 = comb(n - 1, k - 1)
        self._bl = comb(n - 1, l)
        self._bl1 = comb(n - 1, l - 1) if l >= 1 else 0
        name = f"qk:k={k},n={n}" if l == k - 1 else f"hq:k={k},l={l},n={n}"
        super().__init__(name, n, Fraction(1))
        if l == k - 1 and k < n:
            ratio = -(n - k) / k
            norm = math.hypot(ratio, 1.0)
            self.signed_meta = SignedMeta(
                zero_ray=(ratio / norm, 1.0 / norm), origin_value="undefined"
            )

    def _ratio(self, x, y):
        num = self._bk * y + self._bk1 * x
        den = self._bl * y + self._bl1 * x
        if den == 0:
            raise DomainError(f"{self.name}: denominator ray at ({x}, {y})")
        return num / den

    def _raw_value(self, x, y):
        rho = self._ratio(x, y)
        if self.m == 1:
            return y * rho
        if rho < 0:
            raise DomainError(f"{self.name}: quotient negative at ({x}, {y})")
        return y * rho ** (1.0 / self.m)

    def _raw_grad(self, x, y):
        num = self._bk * y + self._bk1 * x
        den = self._bl * y + self._bl1 * x
        rho = num / den
        m = self.m
        if m > 1 and rho <= 0:
            raise DomainError(f"{self.name}: gradient undefined where quotient <= 0")
        drho_dx = (self._bk1 * den - self._bl1 * num) / den**2
        drho_dy = (self._bk * den - self._bl * num) / den**2
        p = rho ** (1.0 / m)
        dp_dx = p / (m * rho) * drho_dx
        dp_dy = p / (m * rho) * drho_dy
        return y * dp_dx, p + y * dp_dy

    def _raw_second(self, x, y):
        if self.m != 1:
            return None
        # value = y * num/den with num, den affine in (x, y)
        num = self._bk * y + self._bk1 * x
        den = self._bl * y + self._bl1 * x
        dnum_dx, dnum_dy = self._bk1, self._bk
        dden_dx, dden_dy = self._bl1, self._bl
        den2 = den * den
        den3 = den2 * den
        q_x = (dnum_dx * den - num * dden_dx) / den2
        q_y = (dnum_dy * den - num * dden_dy) / den2
        q_xx = -2 * dden_dx * (dnum_dx * den - num * dden_dx) / den3
        q_xy = (
            (dnum_dx * dden_dy - dnum_dy * dden_dx) * den
            - 2 * dden_dy * (dnum_dx * den - num * dden_dx)
        ) / den3
        q_yy = -2 * dden_dy * (dnum_dy * den - num * dden_dy) / den3
        gxx = y * q_xx
        gxy = q_x + y * q_xy
        gyy = 2 * q_y + y * q_yy
        return gxx, gxy, gyy

    def _raw_solve_x(self, y, z_raw):
        # cross-multiplied m-th power equation; for even m the caller must be
        # on a branch where sign(y) = sign(z), else the root is spurious
        m = self.m
        zm = z_raw**m
        ym = y**m
        den = self._bk1 * ym - self._bl1 * zm
        if den == 0:
            raise DomainError(f"{self.name}: closed-form denominator vanishes")
        return y * (self._bl * zm - self._bk * ym) / den

    def cone_contains(self, x, y):
        return _garding_slice_ok(self.dimension_n, self.k, x, y)

    def x_chart(self, y, z):
        inf = math.inf
        if self._bl1 == 0:
            if self.m == 1:
                return (-inf, inf)
            x_n = -self._bk * y / self._bk1  # numerator root
            return (x_n, inf) if y > 0 else (-inf, x_n)
        pole = -self._bl * y / self._bl1
        if self.m == 1:
            limit = (y * self._bk1 / self._bl1) / self.normalization
            return (pole, inf) if z < limit else (-inf, pole)
        x_n = -self._bk * y / self._bk1
        if y > 0:
            return (max(x_n, pole), inf)
        limit = (y * (self._bk1 / self._bl1) ** (1.0 / self.m)) / self.normalization
        return (pole, inf) if z < limit else (-inf, x_n)


class KNorm(CurvatureFunction):
    """gamma = (lambda_1^k + ... + lambda_n^k)^(1/k) on the positive cone."""

    def __init__(self, n: int, k: int):
        if k < 1:
            raise ParameterError(f"k_norm requires k >= 1, got {k}")
        self.k = k
        super().__init__(f"knorm:k={k},n={n}", n, Fraction(1))

    def _raw_value(self, x, y):
        k, n = self.k, self.dimension_n
        s = x**k + (n - 1) * y**k
        if s > 0:
            return s ** (1.0 / k)
        if k % 2 == 1:
            return -((-s) ** (1.0 / k))
        raise DomainError(f"{self.name}: sum of k-th powers non-positive")

    def _raw_grad(self, x, y):
        k, n = self.k, self.dimension_n
        v = self._raw_value(x, y)
        if v == 0:
            raise DomainError(f"{self.name}: gradient undefined on the zero set")
        return (x / v) ** (k - 1), (n - 1) * (y / v) ** (k - 1)

    def _raw_solve_x(self, y, z_raw):
        k, n = self.k, self.dimension_n
        s = z_raw**k - (n - 1) * y**k
        if s > 0:
            return s ** (1.0 / k)
        if s < 0 and k % 2 == 1:
            return -((-s) ** (1.0 / k))
        if s == 0:
            return 0.0
        raise DomainError(f"{self.name}: no positive-branch inverse at y={y}, z={z_raw}")

    def cone_contains(self, x, y):
        return x > 0 and y > 0


class KConvexity(CurvatureFunction):
    """Inverse of the sum of reciprocals of k-fold curvature sums."""

    def __init__(self, n: int, k: int):
        if not 1 <= k <= n:
            raise ParameterError(f"k_convexity requires 1 <= k <= n, got {k}")
        self.k = k
        self._a = comb(n - 1, k - 1)  # sums containing x: x + (k-1) y
        self._b = comb(n - 1, k)  # sums of k copies of y: k y
        super().__init__(f"kconv:k={k},n={n}", n, Fraction(1))

    def _sums(self, x, y):
        k = self.k
        sx = x + (k - 1) * y
        sy = k * y
        if sx <= 0 or (self._b > 0 and sy <= 0):
            raise DomainError(f"{self.name}: a k-fold sum is non-positive")
        return sx, sy

    def _raw_value(self, x, y):
        sx, sy = self._sums(x, y)
        tot = self._a / sx + (self._b / sy if self._b else 0.0)
        return 1.0 / tot

    def _raw_grad(self, x, y):
        sx, sy = self._sums(x, y)
        tot = self._a / sx + (self._b / sy if self._b else 0.0)
        k = self.k
        dtot_dx = -self._a / sx**2
        dtot_dy = -self._a * (k - 1) / sx**2 - (self._b * k / sy**2 if self._b else 0.0)
        return -dtot_dx / tot**2, -dtot_dy / tot**2

    def _raw_solve_x(self, y, z_raw):
        k = self.k
        sy = k * y
        rest = self._b / sy if self._b else 0.0
        lhs = 1.0 / z_raw - rest
        if lhs <= 0:
            raise DomainError(f"{self.name}: inverse undefined at y={y}, z={z_raw}")
        return self._a / lhs - (k - 1) * y

    def cone_contains(self, x, y):
        k = self.k
        return y > 0 and x + (k - 1) * y > 0


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

_FAMILIES = ("mean", "gauss", "hq", "qk", "sk", "knorm", "kconv")


def build_family(family: str, n: int, **params) -> CurvatureFunction:
    """Construct a normalized family member; see ``registry_keys`` for names."""
    if family == "mean":
        return MeanCurvature(n)
    if family in ("gauss", "gauss_root"):
        return GaussRoot(n)
    if family in ("hq", "hessian_quotient"):
        return HessianQuotient(n, params["k"], params["l"])
    if family == "qk":
        return HessianQuotient(n, params["k"], params["k"] - 1)
    if family in ("sk", "s_k"):
        return SymmetricPoly(n, params["k"])
    if family in ("knorm", "k_norm"):
        return KNorm(n, params["k"])
    if family in ("kconv", "k_convexity"):
        return KConvexity(n, params["k"])
    raise ParameterError(f"unknown curvature family {family!r}")


def from_key(key: str) -> CurvatureFunction:
    """Parse a registry key like 'hq:k=2,l=0,n=4' or 'mean:n=3'."""
    try:
        family, _, rest = key.partition(":")
        kv = {}
        for item in filter(None, rest.split(",")):
            name, _, val = item.partition("=")
            kv[name.strip()] = int(val)
        n = kv.pop("n")
        return build_family(family.strip(), n, **kv)
    except (KeyError, ValueError, TypeError) as exc:
        raise ParameterError(f"malformed curvature key {key!r}: {exc}") from exc


def registry_keys() -> list:
    """Representative keys, one or two per family."""
    return [
        "mean:n=3",
        "gauss:n=4",
        "hq:k=2,l=0,n=3",
        "qk:k=3,n=7",
        "sk:k=3,n=5",
        "knorm:k=2,n=3",
        "kconv:k=2,n=4",
    ]


# ---------------------------------------------------------------------------
# classification and checks
# ---------------------------------------------------------------------------


def classify_degeneracy(f: CurvatureFunction) -> DegeneracyClass:
    """1-degenerate iff the unnormalized slice value at (0,1) vanishes."""
    try:
        v = f._raw_value(0.0, 1.0)
    except DomainError as exc:
        raise DomainError(f"(0,1) outside the closure of the cone of {f.name}") from exc
    kind = "one_degenerate" if abs(v) <= _NORM_TOL else "one_nondegenerate"
    return DegeneracyClass(kind=kind, value_at_01=v)


def check_homogeneity(f: CurvatureFunction, samples: int = 100, seed: int = 0) -> dict:
    """Max relative defect of gamma(c x, c y) = c^alpha gamma(x, y) over samples."""
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    a = f.alpha_float
    scales = [0.5, 2.0, 3.0]
    worst = 0.0
    skipped = 0
    tested = 0
    for _ in range(samples):
        try:
            x, y = f.sample_cone_point(rng)
        except DomainError:
            skipped += 1
            continue
        base = f.value(x, y)
        for c in scales:
            if not f.cone_contains(c * x, c * y):
                skipped += 1
                continue
            lhs = f.value(c * x, c * y)
            defect = abs(lhs - c**a * base) / max(1.0, abs(base))
            worst = max(worst, defect)
            tested += 1
        if f.is_signed:
            for c in (-0.5, -2.0):
                try:
                    lhs = f.value(c * x, c * y)
                except DomainError:
                    skipped += 1
                    continue
                sign = -1.0  # odd p, q: c^alpha < 0 for c < 0
                defect = abs(lhs - sign * abs(c) ** a * base) / max(1.0, abs(base))
                worst = max(worst, defect)
                tested += 1
    return {"max_defect": worst, "tested": tested, "skipped": skipped}


def zero_ray(f: CurvatureFunction) -> tuple:
    """The unit zero-ray point (x0, y0) of a signed function."""
    from .errors import StructureError

    if f.signed_meta is None:
        raise UnsupportedError(f"{f.name} is not signed")
    x0, y0 = f.signed_meta.zero_ray
    v = f.value(x0, y0)
    gx, _ = f.grad(x0, y0)
    if abs(v) > 1e-10 or gx <= 0 or x0 / y0 >= 0:
        raise StructureError(f"{f.name}: stored zero ray invalid (value={v}, gx={gx})")
    return x0, y0
