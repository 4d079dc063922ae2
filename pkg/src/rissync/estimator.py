"""Training-phase simulation and joint timing/channel maximum-likelihood estimation.

The training observation stacks M reflection patterns; under pattern m every
surface applies one column block of a scaled-DFT phase matrix while a known
pilot sequence is transmitted. Timing offsets enter through each surface's
pulse steering matrix, the cascaded channel enters linearly, and the offsets
are recovered by alternating 1-D minimizations of the projection residual.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, cascade
from .config import SystemConfig
from .errors import SingularSystemError
from .pulse import steering_matrix

__all__ = [
    "TrainingPattern",
    "EstimationResult",
    "gen_training",
    "observation_matrix",
    "simulate_training",
    "ls_channel",
    "residual_cost",
    "mle_alternating",
    "mle_common_offset",
]

COND_LIMIT = 1e12
GRID_STEP = 0.02
REFINE_WIDTH = 1e-6
SWEEP_TOL = 1e-6
MAX_SWEEPS = 50

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TrainingPattern:
    """Known training side information: per-pattern phases and the pilot.

    ``phases`` is (M, N*K) with unit-modulus entries; row m holds the
    reflection coefficients all surfaces apply during pattern m. ``pilot`` is
    the transmitted symbol sequence covering one observation block plus both
    pulse tails.
    """

    phases: np.ndarray
    pilot: np.ndarray

    def __post_init__(self):
        if self.phases.ndim != 2:
            raise ValueError("phases must be a 2-D (patterns x elements) array")
        if self.pilot.ndim != 1:
            raise ValueError("pilot must be a 1-D sequence")

    @property
    def n_patterns(self) -> int:
        return self.phases.shape[0]


@dataclass(frozen=True)
class EstimationResult:
    """Output of the alternating estimator."""

    offsets: np.ndarray          # one timing estimate per surface, in (-1, 1)
    channel: np.ndarray          # cascaded-channel estimate, length N*K
    final_cost: float            # residual energy at the returned offsets
    sweeps: int                  # full coordinate sweeps performed
    cost_trace: np.ndarray       # residual energy after each sweep
    converged: bool              # False if the sweep cap was hit


def gen_training(cfg: SystemConfig, seed) -> TrainingPattern:
    """Scaled-DFT reflection patterns plus a random QPSK pilot.

    With M patterns, entry (m, i) of the phase matrix is exp(-2j*pi*m*i/M),
    so at the default M = N*K the patterns satisfy phases @ phases^H =
    NK * identity. The pilot has unit-modulus symbols, deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    m_pat, nk = cfg.patterns, cfg.total_elements
    rows = np.arange(m_pat)[:, None]
    cols = np.arange(nk)[None, :]
    phases = np.exp(-2j * np.pi * rows * cols / m_pat)
    quadrants = rng.integers(0, 4, cfg.pulse.seq_len)
    pilot = np.exp(1j * (np.pi / 4.0 + np.pi / 2.0 * quadrants))
    return TrainingPattern(phases=phases, pilot=pilot)


def observation_matrix(offsets: np.ndarray, tp: TrainingPattern,
                       cfg: SystemConfig) -> np.ndarray:
    """Linear map from the cascaded channel to the stacked training output.

    Column block k is the Kronecker product of surface k's phase columns with
    the pulse-filtered pilot at that surface's offset; rows are pattern-major
    (pattern index varies slowest).
    """
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape != (cfg.n_surfaces,):
        raise ValueError(f"expected {cfg.n_surfaces} offsets, got {offsets.shape}")
    n_el = cfg.n_elements
    blocks = []
    for k, eps in enumerate(offsets):
        filtered = steering_matrix(eps, cfg.pulse) @ tp.pilot  # (n_samples,)
        phi_k = tp.phases[:, k * n_el:(k + 1) * n_el]
        blocks.append(np.kron(phi_k, filtered[:, None]))
    return np.concatenate(blocks, axis=1)


def simulate_training(ch: ChannelSet, offsets, tp: TrainingPattern, noise_var: float,
                      cfg: SystemConfig, noise_seed) -> np.ndarray:
    """One noisy training observation: signal through the true offsets plus
    white complex Gaussian noise of total variance ``noise_var`` per sample."""
    if noise_var < 0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")
    clean = observation_matrix(offsets, tp, cfg) @ cascade(ch)
    if noise_var == 0:
        return clean
    rng = np.random.default_rng(noise_seed)
    noise = (rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape))
    return clean + np.sqrt(noise_var / 2.0) * noise


def _qr_checked(nmat: np.ndarray, what: str):
    q, r = np.linalg.qr(nmat)
    cond = np.linalg.cond(r)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystemError(what, float(cond))
    return q, r


def ls_channel(offsets, y: np.ndarray, tp: TrainingPattern,
               cfg: SystemConfig) -> np.ndarray:
    """Least-squares cascaded-channel estimate at the given offsets (QR solve)."""
    nmat = observation_matrix(offsets, tp, cfg)
    q, r = _qr_checked(nmat, "training observation matrix")
    return np.linalg.solve(r, q.conj().T @ y)


def residual_cost(offsets, y: np.ndarray, tp: TrainingPattern,
                  cfg: SystemConfig) -> float:
    """Energy of y outside the observation matrix's column space.

    This is the profile objective for timing estimation: the channel has been
    eliminated by projecting onto the orthogonal complement.
    """
    nmat = observation_matrix(offsets, tp, cfg)
    q, _ = _qr_checked(nmat, "training observation matrix")
    total = float(np.vdot(y, y).real)
    captured = float(np.vdot(q.conj().T @ y, q.conj().T @ y).real)
    return max(total - captured, 0.0)


def _golden_min(f, lo: float, hi: float, width: float) -> tuple[float, float]:
    """Golden-section minimization to an absolute bracket width."""
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > width:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
    mid = 0.5 * (lo + hi)
    return mid, f(mid)


_EDGE = 1.0 - 1e-9  # keep searches strictly inside the open interval


def _minimize_coordinate(f, incumbent: float, incumbent_cost: float) -> tuple[float, float]:
    """Coarse grid over (-1, 1) then golden-section refinement around the best
    cell; never returns a point worse than the incumbent."""
    grid = np.arange(-0.99, 0.991, GRID_STEP)
    costs = [f(x) for x in grid]
    i_best = int(np.argmin(costs))
    best_x, best_f = float(grid[i_best]), costs[i_best]
    lo = max(best_x - GRID_STEP, -_EDGE)
    hi = min(best_x + GRID_STEP, _EDGE)
    x_ref, f_ref = _golden_min(f, lo, hi, REFINE_WIDTH)
    candidates = [(incumbent_cost, incumbent), (best_f, best_x), (f_ref, x_ref)]
    cost, x = min(candidates, key=lambda c: c[0])
    return x, cost


def mle_alternating(y: np.ndarray, tp: TrainingPattern, cfg: SystemConfig,
                    init=None, sweep_tol: float = SWEEP_TOL,
                    max_sweeps: int = MAX_SWEEPS) -> EstimationResult:
    """Joint timing/channel estimate by alternating 1-D residual minimizations.

    Offsets are updated one surface at a time (grid + golden-section on the
    profile objective); sweeps repeat until no offset moves more than
    ``sweep_tol`` or the cap is hit. The channel estimate is the final
    least-squares solve.
    """
    k_surf = cfg.n_surfaces
    eps = np.zeros(k_surf) if init is None else np.asarray(init, dtype=float).copy()
    if eps.shape != (k_surf,) or np.any(np.abs(eps) >= 1.0):
        raise ValueError("init must provide one offset in (-1, 1) per surface")

    cost = residual_cost(eps, y, tp, cfg)
    trace = []
    converged = False
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        moved = 0.0
        for k in range(k_surf):
            def coord(x, k=k):
                trial = eps.copy()
                trial[k] = x
                return residual_cost(trial, y, tp, cfg)

            new_k, cost = _minimize_coordinate(coord, eps[k], cost)
            moved = max(moved, abs(new_k - eps[k]))
            eps[k] = new_k
        trace.append(cost)
        if moved < sweep_tol:
            converged = True
            break

    return EstimationResult(
        offsets=eps,
        channel=ls_channel(eps, y, tp, cfg),
        final_cost=cost,
        sweeps=sweeps,
        cost_trace=np.asarray(trace),
        converged=converged,
    )


def mle_common_offset(y: np.ndarray, tp: TrainingPattern,
                      cfg: SystemConfig) -> EstimationResult:
    """Offset-synchronization-naive variant: fits a single shared timing value
    for all surfaces (1-D search), then the least-squares channel."""

    def shared(x):
        return residual_cost(np.full(cfg.n_surfaces, x), y, tp, cfg)

    start = shared(0.0)
    value, cost = _minimize_coordinate(shared, 0.0, start)
    eps = np.full(cfg.n_surfaces, value)
    return EstimationResult(
        offsets=eps,
        channel=ls_channel(eps, y, tp, cfg),
        final_cost=cost,
        sweeps=1,
        cost_trace=np.asarray([cost]),
        converged=True,
    )
