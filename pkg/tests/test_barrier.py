"""Barriers: cone round trips, margin signs, comparison principle."""

import numpy as np
import pytest

from translab.barrier import (
    BarrierSpec,
    admissible_slope_range,
    compare_orderings,
    evaluate_barrier,
    log_grid,
    verify_inequality,
)
from translab.curvature import from_key
from translab.errors import DomainError, ParameterError
from translab.implicit import ImplicitBranch


def test_cone_is_line_for_beta_zero():
    spec = BarrierSpec("implicit_cone", m_bar=-0.5, valid_range=(0.1, 100))
    w, wp = evaluate_barrier(spec, 2.0, 0.0)
    assert w == pytest.approx(-1.0, abs=1e-12)
    assert wp == pytest.approx(-0.5, abs=1e-12)


def test_cone_round_trip():
    spec = BarrierSpec("implicit_cone", m_bar=-0.5, valid_range=(0.1, 100))
    for r in (0.5, 2.0, 20.0):
        w, _ = evaluate_barrier(spec, r, 0.25)
        assert w / (r * (1 + w * w) ** 0.25) == pytest.approx(-0.5, abs=1e-12)


def test_power_direct():
    spec = BarrierSpec("power", a=1.0, b=-2.0, valid_range=(0.1, 1e4))
    w, wp = evaluate_barrier(spec, 10.0, 0.25)
    assert w == pytest.approx(-0.01, abs=1e-15)
    assert wp == pytest.approx(0.002, abs=1e-18)


def test_range_and_parameter_errors():
    spec = BarrierSpec("power", a=1.0, b=-2.0, valid_range=(1.0, 10.0))
    with pytest.raises(DomainError):
        evaluate_barrier(spec, 100.0, 0.0)
    with pytest.raises(ParameterError):
        BarrierSpec("implicit_cone", m_bar=0.5)
    with pytest.raises(ParameterError):
        BarrierSpec("power", a=-1.0, b=-2.0)
    with pytest.raises(ParameterError):
        BarrierSpec("nope")


@pytest.mark.parametrize("n,k", [(7, 3), (6, 4)])
def test_power_margins_qk(n, k):
    f = from_key(f"qk:k={k},n={n}")
    b = ImplicitBranch(f).dg_minus_dy_at_zero()
    assert b == pytest.approx(-(n - k + 1) / (k - 1), abs=1e-9)
    grid = log_grid(2.0, 1e3, per_decade=400)
    rep = verify_inequality(
        BarrierSpec("power", a=0.5, b=b, valid_range=(1.0, 1e4)), f, grid
    )
    assert rep.skipped == 0
    # margins approach zero from below; the nonnegative reading settles
    assert rep.margins.max() <= 1e-12
    assert rep.r_star_nonneg is not None
    beyond = rep.margins[rep.grid >= rep.r_star_nonneg]
    assert beyond.min() >= -1e-8
    # and their magnitude decreases along the tail
    tail = np.abs(rep.margins[-50:])
    assert np.all(np.diff(tail) <= 0)


def test_cone_margin_nonpositive_knorm():
    f = from_key("knorm:k=2,n=3")
    m0 = ImplicitBranch(f).endpoint_data().m0_bar
    grid = log_grid(1.0, 100.0, per_decade=400)
    rep = verify_inequality(
        BarrierSpec("implicit_cone", m_bar=m0, valid_range=(0.5, 200)), f, grid
    )
    assert rep.verdict == "verified_sub"
    assert rep.margins.max() <= 1e-9


def test_cone_below_m0_still_subsolution_signed():
    # For families whose g_-(., -1) is positive, the cone margin stays
    # nonpositive even below m0: the m0 restriction guards the admissible
    # initial data of the comparison principle, not the pointwise sign.
    f = from_key("knorm:k=2,n=3")
    m0 = ImplicitBranch(f).endpoint_data().m0_bar
    grid = log_grid(1.0, 50.0, per_decade=200)
    rep = verify_inequality(
        BarrierSpec("implicit_cone", m_bar=0.5 * (m0 - 1.0), valid_range=(0.5, 200)),
        f,
        grid,
    )
    assert rep.verdict == "verified_sub"
    assert rep.margins.max() <= 0


def test_ordering_mean_n3():
    f = from_key("mean:n=3")
    v_lo, v_hi = admissible_slope_range(f, 1.0)
    rng = np.random.default_rng(2)
    pairs = [tuple(sorted(rng.uniform(v_lo, v_hi, 2))) for _ in range(8)]
    rep = compare_orderings(f, pairs, 1.0, 100.0)
    assert rep["min_gap"] >= -1e-9


def test_ordering_identical_initial_data():
    f = from_key("mean:n=3")
    rep = compare_orderings(f, [(0.8, 0.8)], 1.0, 50.0)
    assert rep["min_gap"] == pytest.approx(0.0, abs=1e-13)


def test_solution_vs_own_power_supersolution():
    # descending-slope solution of the minus equation stays above its
    # matched power barrier (subsolution side of the comparison)
    f = from_key("qk:k=3,n=7")
    br = ImplicitBranch(f)
    b = br.dg_minus_dy_at_zero()
    beta = f.beta
    r0, r1 = 5.0, 200.0
    a = 0.3
    from translab.ode import integrate

    def rhs(r, y):
        v = y[0]
        one = 1.0 + v * v
        return (one ** (beta + 1.0) * br.g_minus(v / (r * one**beta)),)

    tr = integrate(rhs, r0, [-a * r0**b], r1)
    rs = np.geomspace(r0, min(r1, tr.t_final), 60)
    v = tr.resample(rs)[:, 0]
    w = -a * rs**b
    assert np.all(v - w >= -1e-9)
