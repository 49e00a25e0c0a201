import math

import numpy as np
import pytest

from majorana_ladder import kernels
from majorana_ladder.models import pulse_couplings
from majorana_ladder.rgflow import (
    BareCouplings,
    bare_couplings,
    integrate_flow,
    phase_scan,
    scan_rows,
)

NU_THIRD = 1.0 / 3.0


def euler_l_star(y0, threshold, dl=1e-6, l_max=60.0):
    """Independent oracle: forward-Euler flow at a much finer step."""
    try:
        from numba import njit

        @njit(cache=True)
        def run(a, b, c, dl, threshold, l_max):
            l = 0.0
            while l < l_max:
                da = 2.0 * (b * b - c * c)
                db = a * b
                dc = -a * c
                a += dl * da
                b += dl * db
                c += dl * dc
                l += dl
                if abs(b) >= threshold or abs(c) >= threshold:
                    return l
            return math.nan

        return run(y0[0], y0[1], y0[2], dl, threshold, l_max)
    except ImportError:  # pragma: no cover
        a, b, c = y0
        l = 0.0
        while l < l_max:
            da = 2.0 * (b * b - c * c)
            a, b, c = a + dl * da, b + dl * a * b, c - dl * a * c
            l += dl
            if abs(b) >= threshold or abs(c) >= threshold:
                return l
        return math.nan


# ---------------------------------------------------------------------------
# bare couplings
# ---------------------------------------------------------------------------


def test_bare_couplings_free_point():
    b = bare_couplings(0.0, 0.5, NU_THIRD)
    assert b.y_p == 0.0
    assert b.y_bs == 0.0
    assert b.K_minus == pytest.approx(1.0)
    assert b.y_minus == pytest.approx(0.0)


def test_bare_couplings_quarter_filling_symmetry():
    # at nu = 1/4 both sine-Gordon couplings have magnitude 2 |U2|
    U0, alpha = -0.9, 0.4
    b = bare_couplings(U0, alpha, 0.25)
    _, U2 = pulse_couplings(U0, alpha)
    gp = b.y_p * math.pi * b.v_minus
    gbs = b.y_bs * math.pi * b.v_minus
    assert abs(gp) == pytest.approx(2.0 * abs(U2), abs=1e-12)
    assert abs(gbs) == pytest.approx(2.0 * abs(U2), abs=1e-12)


def test_bare_couplings_attractive_interactions_raise_k():
    for U0 in (-0.2, -0.8, -1.5):
        for alpha in (0.2, 0.5, 0.8):
            b = bare_couplings(U0, alpha, NU_THIRD)
            assert b.K_minus > 1.0
            assert b.y_p > 0.0


def test_bare_couplings_rejects_bad_filling_and_window():
    with pytest.raises(ValueError):
        bare_couplings(-1.0, 0.5, 0.6)
    with pytest.raises(ValueError, match="perturbative"):
        bare_couplings(-30.0, 0.5, NU_THIRD)


def test_bare_couplings_custom_velocity_convention():
    b1 = bare_couplings(-1.0, 0.5, NU_THIRD)
    b2 = bare_couplings(-1.0, 0.5, NU_THIRD, v_F=1.0)
    assert b1.y_p != b2.y_p  # convention shifts the couplings quantitatively
    assert (b1.K_minus > 1.0) == (b2.K_minus > 1.0)


# ---------------------------------------------------------------------------
# flow integration
# ---------------------------------------------------------------------------


def test_flow_fixed_point_is_gapless():
    b = bare_couplings(0.0, 0.5, NU_THIRD)
    res = integrate_flow(b)
    assert res.outcome == "gapless"
    assert res.xi_inv == 0.0
    assert res.l_star is None


def test_flow_matches_euler_oracle():
    b = bare_couplings(-1.2, 0.75, NU_THIRD)
    res = integrate_flow(b, threshold=9.0)
    assert res.outcome == "pair_dominant"
    oracle = euler_l_star((b.y_minus, b.y_p, b.y_bs), 9.0)
    assert res.l_star == pytest.approx(oracle, abs=1e-3)
    assert res.xi_inv == pytest.approx(math.exp(-res.l_star))


def test_flow_xi_monotone_in_interaction_strength():
    xi = []
    for U0 in np.linspace(-1.5, -0.3, 7):
        res = integrate_flow(bare_couplings(float(U0), 0.5, NU_THIRD), record_trace=False)
        assert res.outcome == "pair_dominant"
        xi.append(res.xi_inv)
    assert all(a > b for a, b in zip(xi, xi[1:]))  # |U0| decreasing along the list


def test_flow_threshold_monotonicity():
    b = bare_couplings(-1.0, 0.5, NU_THIRD)
    l_prev = 0.0
    for thr in (2.0, 5.0, 9.0, 20.0):
        res = integrate_flow(b, threshold=thr)
        assert res.l_star >= l_prev
        l_prev = res.l_star


def test_flow_kt_constant_of_motion():
    # with ybs = 0 the two-variable reduction conserves y-^2 - 2 yp^2
    b = BareCouplings(
        K_minus=1.05, v_minus=1.7, y_minus=0.1, y_p=0.05, y_bs=0.0,
        nu=NU_THIRD, kF=math.pi * NU_THIRD,
    )
    res = integrate_flow(b, threshold=9.0)
    tr = res.trace
    const = tr[:, 1] ** 2 - 2.0 * tr[:, 2] ** 2
    assert np.abs(const - const[0]).max() < 1e-6
    assert np.abs(tr[:, 3]).max() == 0.0


def test_flow_rejects_small_threshold():
    b = bare_couplings(-1.0, 0.5, NU_THIRD)
    with pytest.raises(ValueError):
        integrate_flow(b, threshold=0.5)


def test_backends_agree():
    if not kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    pts = [
        bare_couplings(-1.2, 0.75, NU_THIRD),
        bare_couplings(-0.4, 0.5, NU_THIRD),
        bare_couplings(0.8, 0.5, NU_THIRD),
        bare_couplings(0.0, 0.5, NU_THIRD),
    ]
    y0 = np.array([[b.y_minus, b.y_p, b.y_bs] for b in pts])
    a = kernels._rg_integrate_numba(y0, 1e-4, 9.0, 50.0, 0.9, 0, 2048)
    b = kernels._rg_integrate_numpy(y0, 1e-4, 9.0, 50.0, 0.9, 0, 2048)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_allclose(a[1], b[1], atol=1e-12, equal_nan=True)
    np.testing.assert_allclose(a[2], b[2], atol=1e-12)


# ---------------------------------------------------------------------------
# phase scan
# ---------------------------------------------------------------------------


def test_scan_gapless_exactly_on_boundaries():
    pts = phase_scan(
        np.linspace(-1.5, 0.0, 6), np.linspace(0.0, 1.0, 6), NU_THIRD, l_max=400.0
    )
    for p in pts:
        boundary = p.U0 == 0.0 or p.alpha in (0.0, 1.0)
        if boundary:
            assert p.result.outcome == "gapless"
        else:
            assert p.result.outcome == "pair_dominant"


def test_scan_fig3a_shape_decreasing_toward_alpha_one():
    alphas = np.linspace(0.5, 0.98, 9)
    pts = phase_scan([-1.2], alphas, NU_THIRD, l_max=400.0)
    xi = [p.result.xi_inv for p in pts]
    assert all(a > b for a, b in zip(xi, xi[1:]))


def test_repulsive_interactions_start_below_marginal():
    for U0 in (0.2, 0.6, 1.2):
        for alpha in (0.1, 0.5, 0.9):
            b = bare_couplings(U0, alpha, NU_THIRD)
            assert b.K_minus < 1.0
            assert b.y_p < 0.0 and b.y_bs < 0.0


def test_flow_channel_race_mechanics():
    # strongly negative y- with dominant ybs: pair coupling decays toward
    # zero while backscattering runs away
    res = integrate_flow(
        BareCouplings(K_minus=0.9, v_minus=1.7, y_minus=-0.2, y_p=-0.01,
                      y_bs=-0.05, nu=NU_THIRD, kF=math.pi * NU_THIRD),
        threshold=9.0, l_max=200.0,
    )
    assert res.outcome == "backscatter_dominant"
    # weakly negative y- with dominant yp: dy-/dl = 2(yp^2 - ybs^2) > 0
    # drags y- positive and the pair channel wins despite K- < 1
    res = integrate_flow(
        BareCouplings(K_minus=0.995, v_minus=1.7, y_minus=-0.01, y_p=-0.09,
                      y_bs=-0.03, nu=NU_THIRD, kF=math.pi * NU_THIRD),
        threshold=9.0, l_max=200.0,
    )
    assert res.outcome == "pair_dominant"


def test_scan_repulsive_strong_coupling_split():
    # at nu = 1/3 the pair coupling is three times the backscattering one,
    # so small alpha flips the race to the pair channel even for U0 > 0
    pts = phase_scan(
        [0.2, 0.6, 1.2], [0.1, 0.5, 0.9], NU_THIRD, l_max=200.0
    )
    for p in pts:
        assert p.result.outcome in ("pair_dominant", "backscatter_dominant")
        if p.alpha >= 0.5:
            assert p.result.outcome == "backscatter_dominant"


def test_scan_error_rows_do_not_abort():
    pts = phase_scan([-30.0, -1.0], [0.5], NU_THIRD)
    assert pts[0].result.outcome == "error"
    assert "perturbative" in pts[0].result.error
    assert pts[1].result.outcome == "pair_dominant"
    rows = scan_rows(pts)
    assert rows[0]["outcome"] == "error"
    assert rows[1]["xi_inv"] > 0


def test_scan_row_order_is_grid_order():
    pts = phase_scan([-1.0, -0.5], [0.3, 0.7], NU_THIRD)
    expect = [(-1.0, 0.3), (-1.0, 0.7), (-0.5, 0.3), (-0.5, 0.7)]
    assert [(p.U0, p.alpha) for p in pts] == expect
