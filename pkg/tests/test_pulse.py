"""Tests for the root-raised-cosine pulse, its derivative and autocorrelation.

Reference values were computed independently with mpmath at 40 decimal digits
(direct textbook formulas plus mp.limit at the removable singularities and
mp.quad for the energy/correlation integrals) and are frozen here.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from rissync import (
    PulseConfig,
    matched_filter_taps,
    pulse_autocorr,
    rrc_impulse,
    rrc_impulse_deriv,
    steering_matrix,
    steering_matrix_deriv,
    window_matrix,
)

CFG = PulseConfig()  # rolloff 0.22, span 4, oversampling 2, obs_len 12
BETA = CFG.rolloff
X_SING = 1.0 / (4.0 * BETA)
T_SING = 1.0 / (2.0 * BETA)

# mpmath (40 dps) reference values, rolloff 0.22
PEAK = 1.0601126998417358
G_AT_SING = -0.15718426207720724
DG_AT_SING = -0.5370036882886971
ENERGY_TRUNC = 0.9991162114335723  # integral of g^2 over [-4, 4]
AC_HALF = 0.6294486138678793       # closed-form autocorrelation at lag 0.5
AC_HALF_TRUNC = 0.6297530129414243  # quadrature of truncated-pulse correlation
AC_AT_SING = 0.08313245317896841
SPOT_G = {0.3: 0.8879756445784789, 1.0: -0.05732352424651584,
          2.25: 0.10046073608940728, 3.9: 0.019828370858788176}
SPOT_DG = {0.3: -1.0865406043878544, 1.0: -0.9235060547502182}


def rrc_reference(x: float) -> float:
    # Direct formula, written out independently of the library implementation.
    # Only valid away from the removable singularities.
    num = np.sin(np.pi * x * (1 - BETA)) + 4 * BETA * x * np.cos(np.pi * x * (1 + BETA))
    return num / (np.pi * x * (1 - (4 * BETA * x) ** 2))


def test_peak_value():
    # Closed-form peak: 1 + rolloff*(4/pi - 1).
    assert rrc_impulse(0.0, CFG) == pytest.approx(1 + BETA * (4 / np.pi - 1), rel=1e-14)
    assert rrc_impulse(0.0, CFG) == pytest.approx(PEAK, rel=1e-13)


def test_spot_values_match_direct_formula():
    for x, want in SPOT_G.items():
        assert rrc_impulse(x, CFG) == pytest.approx(want, rel=1e-12)
        assert rrc_impulse(x, CFG) == pytest.approx(rrc_reference(x), rel=1e-13)


def test_truncated_pulse_energy():
    val, err = quad(lambda x: rrc_impulse(x, CFG) ** 2, -CFG.span, CFG.span, limit=200)
    assert err < 1e-9
    assert val == pytest.approx(ENERGY_TRUNC, rel=1e-9)
    # Truncation at four symbol periods costs well under 0.1% of unit energy.
    assert abs(val - 1.0) < 1e-3


def test_support_is_truncated():
    ts = np.array([-7.3, -4.0001, 4.0001, 5.0, 100.0])
    assert np.all(rrc_impulse(ts, CFG) == 0.0)
    assert np.all(rrc_impulse_deriv(ts, CFG) == 0.0)


def test_values_at_singular_points():
    assert rrc_impulse(X_SING, CFG) == pytest.approx(G_AT_SING, rel=1e-10)
    assert rrc_impulse(-X_SING, CFG) == pytest.approx(G_AT_SING, rel=1e-10)
    assert rrc_impulse_deriv(X_SING, CFG) == pytest.approx(DG_AT_SING, rel=1e-8)
    assert rrc_impulse_deriv(-X_SING, CFG) == pytest.approx(-DG_AT_SING, rel=1e-8)


# mpmath references straddling the series/direct switchover (1e-3 from the
# singular points); key is (offset from center, which center).
BOUNDARY_G = {
    (0.999e-3, 0.0): (1.0601106868031098, -0.0040301049845969764),
    (1.001e-3, 0.0): (1.0601106787348316, -0.0040381732437701715),
    (-1.001e-3, X_SING): (-0.15664527462056649, -0.53989437512433326),
    (-0.999e-3, X_SING): (-0.15664635440354086, -0.53988859924211501),
    (0.999e-3, X_SING): (-0.15771928787243154, -0.53411907670378806),
    (1.001e-3, X_SING): (-0.15772035610481027, -0.53411330202143605),
}


def test_branch_boundaries_match_reference():
    # Both the series branch (just inside the switch radius) and the direct
    # formula (just outside) must stay accurate where they meet.
    for (off, center), (want_g, want_dg) in BOUNDARY_G.items():
        x = center + off
        assert rrc_impulse(x, CFG) == pytest.approx(want_g, rel=1e-10)
        assert rrc_impulse_deriv(x, CFG) == pytest.approx(want_dg, rel=1e-9, abs=1e-12)


def test_no_nans_on_fine_grid():
    grid = np.arange(-4.0, 4.0 + 1e-9, 1e-3)
    for fn in (rrc_impulse, rrc_impulse_deriv):
        vals = fn(grid, CFG)
        assert np.all(np.isfinite(vals))


def test_derivative_spot_values():
    for x, want in SPOT_DG.items():
        assert rrc_impulse_deriv(x, CFG) == pytest.approx(want, rel=1e-12)


def test_derivative_matches_finite_differences():
    h = 1e-6
    xs = np.array([-3.7, -2.0, -0.9, -0.2, 0.15, 0.31, 0.77, 1.3, 2.6, 3.95])
    fd = (rrc_impulse(xs + h, CFG) - rrc_impulse(xs - h, CFG)) / (2 * h)
    np.testing.assert_allclose(rrc_impulse_deriv(xs, CFG), fd, rtol=1e-7, atol=1e-9)


def test_derivative_zero_at_origin():
    assert rrc_impulse_deriv(0.0, CFG) == 0.0


def test_autocorr_is_unity_at_zero_lag():
    assert pulse_autocorr(0.0, CFG) == pytest.approx(1.0, abs=1e-14)


def test_autocorr_vanishes_at_nonzero_integer_lags():
    lags = np.array([-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0, 7.0])
    np.testing.assert_allclose(pulse_autocorr(lags, CFG), 0.0, atol=1e-12)


def test_autocorr_closed_form_vs_pulse_correlation():
    assert pulse_autocorr(0.5, CFG) == pytest.approx(AC_HALF, rel=1e-12)
    val, _ = quad(
        lambda x: rrc_impulse(x, CFG) * rrc_impulse(x - 0.5, CFG),
        -CFG.span, CFG.span + 0.5, limit=200,
    )
    assert val == pytest.approx(AC_HALF_TRUNC, rel=1e-8)
    # closed form differs from the truncated correlation only by leakage
    assert abs(val - AC_HALF) < 1e-3


def test_autocorr_at_singular_lag():
    assert pulse_autocorr(T_SING, CFG) == pytest.approx(AC_AT_SING, rel=1e-10)
    boundary = {
        -1.001e-3: 0.082960306457874155,
        -0.999e-3: 0.082960651482193017,
        0.999e-3: 0.083303180915992952,
        1.001e-3: 0.083303521635871888,
    }
    for off, want in boundary.items():
        assert pulse_autocorr(T_SING + off, CFG) == pytest.approx(want, rel=1e-10)
    assert pulse_autocorr(0.999e-3, CFG) == pytest.approx(0.99999831320105683, rel=1e-12)
    assert pulse_autocorr(1.001e-3, CFG) == pytest.approx(0.99999830644034995, rel=1e-12)


def test_autocorr_no_nans_on_fine_grid():
    vals = pulse_autocorr(np.arange(0.0, 8.0, 1e-3), CFG)
    assert np.all(np.isfinite(vals))


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-10.0, max_value=10.0, allow_nan=False))
def test_pulse_symmetry_and_boundedness(x):
    g = rrc_impulse(x, CFG)
    assert rrc_impulse(-x, CFG) == g
    assert abs(g) <= PEAK + 1e-12
    assert rrc_impulse_deriv(-x, CFG) == -rrc_impulse_deriv(x, CFG)


# ---------------------------------------------------------------------------
# steering / windowing matrices
# ---------------------------------------------------------------------------

def test_steering_matrix_entries():
    eps = 0.37
    mat = steering_matrix(eps, CFG)
    assert mat.shape == (CFG.n_samples, CFG.seq_len)
    symbols = np.arange(-CFG.span, CFG.obs_len + CFG.span)
    for n in (0, 5, 23):
        for j, i in enumerate(symbols):
            x = n * CFG.sample_step - i - eps
            assert mat[n, j] == pytest.approx(
                rrc_reference(x) if abs(x) <= CFG.span else 0.0, abs=1e-12
            )


def test_steering_matrix_offset_bounds():
    for bad in (-1.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            steering_matrix(bad, CFG)
        with pytest.raises(ValueError):
            steering_matrix_deriv(bad, CFG)
    steering_matrix(0.999, CFG)  # interior values are fine


def test_steering_matrix_deriv_matches_finite_differences():
    # Offsets chosen so no sample time lands on the truncation edge, where
    # the pulse jumps to zero and a finite difference would straddle the jump.
    h = 1e-6
    for eps in (-0.62, 0.17, 0.41):
        fd = (steering_matrix(eps + h, CFG) - steering_matrix(eps - h, CFG)) / (2 * h)
        np.testing.assert_allclose(
            steering_matrix_deriv(eps, CFG), fd, rtol=1e-5, atol=1e-8
        )


def test_steering_matrix_finite_on_dense_offset_grid():
    # Sweep includes offsets that land sample times exactly on the pulse's
    # removable singularities; nothing may come out NaN or infinite.
    for eps in np.arange(-0.999, 0.9995, 1e-3):
        assert np.all(np.isfinite(steering_matrix(eps, CFG)))
    for special in (0.0, 4.0 / 11.0, -4.0 / 11.0):  # hits t = 0 and t = ±1/(4*rolloff)
        assert np.all(np.isfinite(steering_matrix(special, CFG)))
        assert np.all(np.isfinite(steering_matrix_deriv(special, CFG)))


def test_steering_matrix_first_order_expansion():
    # ||A(e+d) - A(e) - d*A'(e)||_F must shrink quadratically in d.
    eps = 0.23
    base = steering_matrix(eps, CFG)
    slope = steering_matrix_deriv(eps, CFG)
    errs = []
    for d in (1e-3, 1e-4, 1e-5):
        resid = steering_matrix(eps + d, CFG) - base - d * slope
        errs.append(np.linalg.norm(resid))
    assert errs[0] < 1e-4  # comfortably first-order accurate already
    fitted = [errs[i] / (10.0 ** (-3 - i)) ** 2 for i in range(3)]
    assert max(fitted) < 3 * min(fitted)  # consistent quadratic constant


def test_matched_filter_taps_layout():
    taps = matched_filter_taps(CFG)
    assert taps.shape == (CFG.seq_len,)
    assert taps[CFG.span] == pytest.approx(1.0, abs=1e-14)
    # off-center integer lags are (numerically) zero, as is the padding
    mask = np.ones(CFG.seq_len, dtype=bool)
    mask[CFG.span] = False
    np.testing.assert_allclose(taps[mask], 0.0, atol=1e-12)
    assert np.all(taps[2 * CFG.span + 1:] == 0.0)


def test_window_matrix_is_circulant_selector():
    taps = matched_filter_taps(CFG)
    win = window_matrix(taps, CFG)
    assert win.shape == (CFG.obs_len, CFG.seq_len)
    for r in range(CFG.obs_len):
        np.testing.assert_array_equal(win[r], np.roll(taps, r))
        assert win[r, (CFG.span + r) % CFG.seq_len] == pytest.approx(1.0, abs=1e-14)


def test_window_matrix_rejects_wrong_length():
    with pytest.raises(ValueError):
        window_matrix(np.zeros(CFG.seq_len - 1), CFG)
