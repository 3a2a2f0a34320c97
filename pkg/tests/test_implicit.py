"""Implicit branches: numeric solves vs closed forms, derivatives, endpoints."""

from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from translab.curvature import from_key
from translab.errors import DomainError, UnsupportedError
from translab.implicit import ImplicitBranch

HQ_CASES = ["hq:k=2,l=0,n=3", "hq:k=2,l=1,n=4", "hq:k=3,l=1,n=5"]


def branch(key):
    return ImplicitBranch(from_key(key))


# ---------------------------------------------------------------------------
# g_plus
# ---------------------------------------------------------------------------


def test_g_plus_mean_linear_inversion():
    # oracle: (x + 2y)/2 = 1  =>  x = 2 - 2y
    b = branch("mean:n=3")
    assert b.g_plus(0.5, 1.0) == pytest.approx(2 - 2 * 0.5, abs=1e-11)


@pytest.mark.parametrize("key", ["mean:n=3", "sk:k=3,n=5", "knorm:k=2,n=3", "kconv:k=2,n=4"])
def test_g_plus_at_right_endpoint(key):
    # g_+ -> 0 at the right endpoint of U+; knorm approaches like sqrt(eps),
    # so the solved value there sits at the sqrt of the residual tolerance
    b = branch(key)
    assert abs(b.g_plus(1.0 - 1e-13, 1.0)) < 2e-5


@pytest.mark.parametrize("key", HQ_CASES)
def test_hq_closed_form_grid(key):
    f = from_key(key)
    b = ImplicitBranch(f)
    worst = 0.0
    count = 0
    for y in np.linspace(0.05, 3.0, 50):
        for z in np.linspace(0.05, 3.0, 50):
            if not b.in_u_plus(float(y), float(z)):
                continue
            x_num = b.g_plus(float(y), float(z))
            x_closed = f.solve_x(float(y), float(z))
            worst = max(worst, abs(x_num - x_closed))
            count += 1
    assert count > 100
    assert worst <= 1e-10


def test_g_plus_outside_domain_right():
    b = branch("mean:n=3")
    with pytest.raises(DomainError) as err:
        b.g_plus(2.0, 1.0)
    assert err.value.violated == "right"


def test_g_plus_increasing_in_z():
    b = branch("sk:k=3,n=5")
    zs = np.linspace(0.4, 3.0, 20)
    xs = [b.g_plus(0.6, float(z)) for z in zs]
    assert all(x2 > x1 for x1, x2 in zip(xs, xs[1:]))


@given(st.floats(0.3, 0.95), st.floats(0.5, 2.0))
@settings(max_examples=50, deadline=None)
def test_g_plus_roundtrip_fuzz(y, z):
    f = from_key("hq:k=2,l=0,n=4")
    b = ImplicitBranch(f)
    if not b.in_u_plus(y, z):
        return
    x = b.g_plus(y, z)
    assert abs(f.value(x, y) - z) <= 1e-12 * max(1.0, abs(z))


def test_scaling_law_grid():
    for key in ["mean:n=3", "sk:k=3,n=5", "hq:k=2,l=1,n=4"]:
        f = from_key(key)
        b = ImplicitBranch(f)
        a = f.alpha_float
        for c in (0.5, 2.0, 5.0):
            for y in np.linspace(0.45, 0.95, 8):
                lhs = c * b.g_plus(float(y), 1.0)
                rhs = b.g_plus(c * float(y), c**a)
                assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


# ---------------------------------------------------------------------------
# g_minus
# ---------------------------------------------------------------------------


def test_g_minus_qk_closed_form_value():
    # reference closed form for Q_k with n=7, k=3 at y = -0.1
    n, k = 7, 3
    b = branch(f"qk:k={k},n={n}")
    Bk, Bk1, Bk2 = comb(n - 1, k), comb(n - 1, k - 1), comb(n - 1, k - 2)
    y = -0.1
    expected = Bk * y * (-1 - y) / (Bk1 * y + Bk * Bk2 / Bk1)
    assert b.g_minus(y) == pytest.approx(expected, abs=1e-10)


def test_g_minus_qk_limit_zero():
    b = branch("qk:k=3,n=7")
    assert abs(b.g_minus(-1e-7)) < 1e-5
    assert b.g_minus_limit_at_zero() == pytest.approx(0.0, abs=1e-4)


def test_g_minus_mean_unsupported():
    with pytest.raises(UnsupportedError):
        branch("mean:n=3").g_minus(-0.5)


def test_g_minus_outside_interval():
    with pytest.raises(DomainError):
        branch("qk:k=3,n=7").g_minus(-1.5)


def test_g_minus_decreasing_in_y():
    b = branch("qk:k=3,n=7")
    ys = np.linspace(-0.5, -0.01, 40)
    gs = [b.g_minus(float(y)) for y in ys]
    assert all(g1 > g2 for g1, g2 in zip(gs, gs[1:]))


@pytest.mark.parametrize("key,y_lo", [("hq:k=2,l=1,n=4", -0.45), ("hq:k=3,l=1,n=5", -0.40)])
def test_g_minus_hq_closed_form_grid(key, y_lo):
    f = from_key(key)
    b = ImplicitBranch(f)
    worst = 0.0
    for y in np.linspace(y_lo, -0.01, 50):
        x_num = b.g_minus(float(y))
        x_closed = f.solve_x(float(y), -1.0)
        worst = max(worst, abs(x_num - x_closed))
        assert abs(f.value(x_num, float(y)) + 1.0) <= 1e-10
    assert worst <= 1e-9


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n", [3, 4, 5, 8])
def test_dg_dy_mean(n):
    b = branch(f"mean:n={n}")
    assert b.dg_dy(1.0, 1.0, 1) == pytest.approx(-(n - 1), abs=1e-8)
    assert b.dg_dy(1.0, 1.0, 2) == pytest.approx(0.0, abs=1e-8)


def test_dg_minus_dy_at_zero_qk():
    b = branch("qk:k=3,n=7")
    assert b.dg_minus_dy_at_zero() == pytest.approx(-(7 - 3 + 1) / (3 - 1), abs=1e-9)


def test_dg_dy_matches_differences():
    b = branch("sk:k=3,n=5")
    y, z = 0.8, 1.0
    h = 1e-6
    fd = (b.g_plus(y + h, z) - b.g_plus(y - h, z)) / (2 * h)
    assert b.dg_dy(y, z, 1) == pytest.approx(fd, rel=1e-6)
    fd2 = (b.g_plus(y + h, z) - 2 * b.g_plus(y, z) + b.g_plus(y - h, z)) / h**2
    assert b.dg_dy(y, z, 2) == pytest.approx(fd2, rel=1e-3)


# ---------------------------------------------------------------------------
# endpoints
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("key", ["mean:n=3", "sk:k=3,n=5", "hq:k=2,l=0,n=3", "knorm:k=2,n=3"])
def test_endpoint_identities(key):
    f = from_key(key)
    b = ImplicitBranch(f)
    ep = b.endpoint_data()
    a = f.alpha_float
    assert ep.left_value == pytest.approx(f.value(1.0, 1.0) ** (-1.0 / a), abs=1e-12)
    assert b.endpoint_left_by_limit() == pytest.approx(ep.left_value, abs=1e-6)
    if not f.is_one_degenerate:
        assert ep.right_value == 0.0


def test_m0_bar_knorm_identity():
    f = from_key("knorm:k=2,n=3")
    b = ImplicitBranch(f)
    ep = b.endpoint_data()
    assert ep.m0_bar is not None
    assert ep.m0_bar == pytest.approx(-f.value(-1.0, 1.0) ** -1.0, abs=1e-12)
    # g_-(m0, -1) = -m0 within 1e-8 (interior solve)
    gm = b.g_minus(ep.m0_bar * (1 - 1e-12))
    assert gm == pytest.approx(-ep.m0_bar, abs=1e-8)


def test_m0_bar_absent_for_sk():
    # gamma(-1, 1) < 0 for S_3 on the slice of n=5
    b = branch("sk:k=3,n=5")
    assert b.endpoint_data().m0_bar is None


# ---------------------------------------------------------------------------
# Laurent tails
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n", [4, 5])
def test_laurent_tail_gauss(n):
    # oracle: (x y^(n-1))^(1/n) = 1  =>  x = y^(1-n)
    b = branch(f"gauss:n={n}")
    k, c = b.laurent_tail()
    assert k == pytest.approx(n - 1, abs=1e-6)
    assert c == pytest.approx(1.0, abs=1e-6)


def test_laurent_tail_rejects_nondegenerate():
    with pytest.raises(UnsupportedError):
        branch("mean:n=3").laurent_tail()
