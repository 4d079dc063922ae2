"""Root-raised-cosine pulse machinery.

Implements the unit-energy RRC impulse response, its analytic derivative, and
its autocorrelation (a raised cosine), plus the oversampled steering and
windowing matrices built from them. The RRC formulas have removable
singularities; near those points every function switches to a local series
expansion, so all values are finite everywhere on the real line.
"""
from __future__ import annotations

import numpy as np

from .config import PulseConfig

__all__ = [
    "SINGULARITY_TOL",
    "rrc_impulse",
    "rrc_impulse_deriv",
    "pulse_autocorr",
    "steering_matrix",
    "steering_matrix_deriv",
    "matched_filter_taps",
    "window_matrix",
]

# Distance from a removable singularity below which series limits take over.
# The direct quotient loses roughly two significant digits per decade as it
# approaches a singular point (numerator and denominator both vanish), while
# the series error grows like the first omitted Taylor term; 1e-3 balances
# the two so both branches agree to ~1e-11 at the switchover.
SINGULARITY_TOL = 1e-3


# ---------------------------------------------------------------------------
# impulse response g and its derivative
# ---------------------------------------------------------------------------

def _denominator_factor(x: np.ndarray, beta: float) -> np.ndarray:
    # 1 - (4*beta*x)^2 in factored form: cancellation-free near its roots.
    x_sing = 1.0 / (4.0 * beta)
    return -16.0 * beta**2 * (x - x_sing) * (x + x_sing)


def _impulse_kernel(x: np.ndarray, beta: float) -> np.ndarray:
    """Direct RRC formula, valid away from x = 0 and |x| = 1/(4*beta)."""
    num = np.sin(np.pi * x * (1.0 - beta)) + 4.0 * beta * x * np.cos(np.pi * x * (1.0 + beta))
    return num / (np.pi * x * _denominator_factor(x, beta))


def _deriv_kernel(x: np.ndarray, beta: float) -> np.ndarray:
    """Quotient-rule derivative of the direct RRC formula."""
    a = np.pi * (1.0 - beta)
    b = np.pi * (1.0 + beta)
    num = np.sin(a * x) + 4.0 * beta * x * np.cos(b * x)
    dnum = a * np.cos(a * x) + 4.0 * beta * np.cos(b * x) - 4.0 * beta * b * x * np.sin(b * x)
    den = np.pi * x * _denominator_factor(x, beta)
    dden = np.pi * (1.0 - 48.0 * beta**2 * x**2)
    return (dnum * den - num * dden) / den**2


def _series0_coeffs(beta: float) -> tuple[float, float, float]:
    # Even Taylor coefficients of g around x = 0, through fourth order.
    a = np.pi * (1.0 - beta)
    b = np.pi * (1.0 + beta)
    n1 = a + 4.0 * beta
    n3 = -(a**3) / 6.0 - 2.0 * beta * b**2
    n5 = a**5 / 120.0 + beta * b**4 / 6.0
    q = 16.0 * beta**2
    return n1 / np.pi, (n3 + q * n1) / np.pi, (n5 + q * n3 + q * q * n1) / np.pi


def _numerator_derivs(x: float, beta: float) -> tuple[float, ...]:
    # First five derivatives of the RRC numerator sin(ax) + 4*beta*x*cos(bx).
    a = np.pi * (1.0 - beta)
    b = np.pi * (1.0 + beta)
    sa, ca = np.sin(a * x), np.cos(a * x)
    sb, cb = np.sin(b * x), np.cos(b * x)
    d1 = a * ca + 4.0 * beta * cb - 4.0 * beta * b * x * sb
    d2 = -(a**2) * sa - 8.0 * beta * b * sb - 4.0 * beta * b**2 * x * cb
    d3 = -(a**3) * ca - 12.0 * beta * b**2 * cb + 4.0 * beta * b**3 * x * sb
    d4 = a**4 * sa + 16.0 * beta * b**3 * sb + 4.0 * beta * b**4 * x * cb
    d5 = a**5 * ca + 20.0 * beta * b**4 * cb - 4.0 * beta * b**5 * x * sb
    return d1, d2, d3, d4, d5


def _sing_branch(u: np.ndarray, beta: float, want_deriv: bool) -> np.ndarray:
    # The numerator vanishes at x_sing = 1/(4*beta), so g is a smooth ratio
    # of Taylor polynomials in u = x - x_sing; the same quotient yields g'.
    x_sing = 1.0 / (4.0 * beta)
    d1, d2, d3, d4, d5 = _numerator_derivs(x_sing, beta)
    p = -(d1 + d2 * u / 2.0 + d3 * u**2 / 6.0 + d4 * u**3 / 24.0 + d5 * u**4 / 120.0)
    q = 4.0 * beta * np.pi * (2.0 * x_sing + 3.0 * u + 4.0 * beta * u**2)
    if not want_deriv:
        return p / q
    dp = -(d2 / 2.0 + d3 * u / 3.0 + d4 * u**2 / 8.0 + d5 * u**3 / 30.0)
    dq = 4.0 * beta * np.pi * (3.0 + 8.0 * beta * u)
    return (dp * q - p * dq) / q**2


def rrc_impulse(t, cfg: PulseConfig):
    """Unit-energy root-raised-cosine pulse value at time ``t``.

    The pulse is truncated to ``[-span, span]`` symbol periods; outside that
    support the value is exactly zero. Accepts scalars or arrays.
    """
    beta = cfg.rolloff
    x = np.asarray(t, dtype=float) / cfg.period
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    ax = np.abs(x)
    x_sing = 1.0 / (4.0 * beta)

    out = np.zeros_like(ax)
    inside = ax <= cfg.span
    near0 = inside & (ax < SINGULARITY_TOL)
    nears = inside & (np.abs(ax - x_sing) < SINGULARITY_TOL)
    plain = inside & ~near0 & ~nears

    # evaluate on |x| so evenness holds bit-exactly
    out[plain] = _impulse_kernel(ax[plain], beta)
    if near0.any():
        c0, c2, c4 = _series0_coeffs(beta)
        x2 = ax[near0] ** 2
        out[near0] = c0 + c2 * x2 + c4 * x2 * x2
    if nears.any():
        out[nears] = _sing_branch(ax[nears] - x_sing, beta, want_deriv=False)

    out /= np.sqrt(cfg.period)
    return out[0] if scalar else out


def rrc_impulse_deriv(t, cfg: PulseConfig):
    """Analytic time derivative of :func:`rrc_impulse` (zero outside the support)."""
    beta = cfg.rolloff
    x = np.asarray(t, dtype=float) / cfg.period
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    ax = np.abs(x)
    x_sing = 1.0 / (4.0 * beta)

    out = np.zeros_like(ax)
    inside = ax <= cfg.span
    near0 = inside & (ax < SINGULARITY_TOL)
    nears = inside & (np.abs(ax - x_sing) < SINGULARITY_TOL)
    plain = inside & ~near0 & ~nears

    # g is even, so g' is odd: evaluate on |x| and flip sign, which also
    # makes the antisymmetry hold bit-exactly.
    out[plain] = np.sign(x[plain]) * _deriv_kernel(ax[plain], beta)
    if near0.any():
        _, c2, c4 = _series0_coeffs(beta)
        xs = x[near0]
        out[near0] = 2.0 * c2 * xs + 4.0 * c4 * xs**3
    if nears.any():
        branch = _sing_branch(ax[nears] - x_sing, beta, want_deriv=True)
        out[nears] = np.sign(x[nears]) * branch

    out /= cfg.period ** 1.5
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# autocorrelation (raised cosine)
# ---------------------------------------------------------------------------

def pulse_autocorr(tau, cfg: PulseConfig):
    """Autocorrelation of the unit-energy RRC pulse at a lag of ``tau`` symbols.

    Closed-form raised cosine; equals 1 at tau = 0 and vanishes at every
    other integer lag.
    """
    beta = cfg.rolloff
    x = np.abs(np.asarray(tau, dtype=float))  # even function
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    t_sing = 1.0 / (2.0 * beta)

    near0 = x < SINGULARITY_TOL
    nears = np.abs(x - t_sing) < SINGULARITY_TOL
    plain = ~near0 & ~nears

    out = np.empty_like(x)
    xp = x[plain]
    # denominator root factored out so there is no cancellation near it
    den = np.pi * xp * (-4.0 * beta**2) * (xp - t_sing) * (xp + t_sing)
    out[plain] = np.sin(np.pi * xp) * np.cos(np.pi * beta * xp) / den
    if near0.any():
        b2 = beta**2
        c2 = 4.0 * b2 - np.pi**2 / 6.0 - np.pi**2 * b2 / 2.0
        c4 = (
            np.pi**4 / 120.0 + np.pi**4 * b2 / 12.0 + np.pi**4 * b2**2 / 24.0
            + 16.0 * b2**2 - 2.0 * np.pi**2 * b2 / 3.0 - 2.0 * np.pi**2 * b2**2
        )
        x2 = x[near0] ** 2
        out[near0] = 1.0 + c2 * x2 + c4 * x2 * x2
    if nears.any():
        # Removable singularity at 1/(2*beta): ratio of local Taylor series.
        sp, cp = np.sin(np.pi * t_sing), np.cos(np.pi * t_sing)
        sb, cb = np.sin(np.pi * beta * t_sing), np.cos(np.pi * beta * t_sing)
        d1 = np.pi * cp * cb - np.pi * beta * sp * sb
        d2 = -np.pi**2 * (1.0 + beta**2) * sp * cb - 2.0 * np.pi**2 * beta * cp * sb
        d3 = -np.pi**3 * (1.0 + 3.0 * beta**2) * cp * cb + np.pi**3 * (3.0 * beta + beta**3) * sp * sb
        d4 = (
            np.pi**4 * (1.0 + 6.0 * beta**2 + beta**4) * sp * cb
            + 4.0 * np.pi**4 * (beta + beta**3) * cp * sb
        )
        u = x[nears] - t_sing
        p = -(d1 + d2 * u / 2.0 + d3 * u**2 / 6.0 + d4 * u**3 / 24.0)
        q = 2.0 * beta * np.pi * (2.0 * t_sing + 3.0 * u + 2.0 * beta * u**2)
        out[nears] = p / q

    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# steering and windowing matrices
# ---------------------------------------------------------------------------

def _sample_times(offset: float, cfg: PulseConfig) -> np.ndarray:
    rows = np.arange(cfg.n_samples) * cfg.sample_step
    cols = np.arange(-cfg.span, cfg.obs_len + cfg.span) * cfg.period
    return rows[:, None] - cols[None, :] - offset * cfg.period


def steering_matrix(offset: float, cfg: PulseConfig) -> np.ndarray:
    """Matrix of shifted pulse samples for one surface's timing offset.

    Row ``n`` and column ``i`` (symbols indexed from ``-span``) hold the pulse
    sampled at ``n*sample_step - i - offset``; shape is
    ``(obs_len * oversampling, seq_len)``.
    """
    if not -1.0 < offset < 1.0:
        raise ValueError(f"timing offset must lie in (-1, 1), got {offset}")
    return rrc_impulse(_sample_times(offset, cfg), cfg)


def steering_matrix_deriv(offset: float, cfg: PulseConfig) -> np.ndarray:
    """Entrywise derivative of :func:`steering_matrix` with respect to the offset."""
    if not -1.0 < offset < 1.0:
        raise ValueError(f"timing offset must lie in (-1, 1), got {offset}")
    return -cfg.period * rrc_impulse_deriv(_sample_times(offset, cfg), cfg)


def matched_filter_taps(cfg: PulseConfig) -> np.ndarray:
    """Ideal symbol-spaced matched-filter output: autocorrelation taps, zero padded.

    The result has length ``seq_len``: pulse autocorrelation values at integer
    lags ``-span .. span`` followed by ``obs_len - 1`` zeros.
    """
    lags = np.arange(-cfg.span, cfg.span + 1, dtype=float)
    return np.concatenate([pulse_autocorr(lags, cfg), np.zeros(cfg.obs_len - 1)])


def window_matrix(taps: np.ndarray, cfg: PulseConfig) -> np.ndarray:
    """Circulant windowing matrix whose row ``r`` is ``taps`` rotated right by ``r``.

    Selects the ``obs_len`` detected symbols out of a ``seq_len`` block.
    """
    taps = np.asarray(taps, dtype=float)
    if taps.shape != (cfg.seq_len,):
        raise ValueError(f"expected {cfg.seq_len} taps, got shape {taps.shape}")
    return np.stack([np.roll(taps, r) for r in range(cfg.obs_len)])
