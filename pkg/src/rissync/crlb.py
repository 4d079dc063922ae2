"""Fisher information and closed-form error bounds for the training estimator.

The training observation is linear in the cascaded channel and smooth in the
timing offsets, so the information matrix has an explicit three-block Gram
structure over the real coordinates (offsets, channel real part, channel
imaginary part). The closed-form bounds profile the channel out analytically;
a brute-force inversion of the full information matrix provides the same
quantities through a different route and the two must agree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import block_gains
from .config import SystemConfig
from .errors import SingularSystemError
from .estimator import COND_LIMIT, TrainingPattern, observation_matrix
from .pulse import steering_matrix_deriv

__all__ = [
    "CrlbResult",
    "observation_matrix_deriv",
    "fim",
    "crlb",
    "crlb_from_fim",
]


@dataclass(frozen=True)
class CrlbResult:
    """Lower bounds on estimator error covariance.

    ``timing_cov`` is the K x K real bound for the offset estimates;
    ``channel_cov`` is the NK x NK complex Hermitian bound for the cascaded
    channel.
    """

    timing_cov: np.ndarray
    channel_cov: np.ndarray


def observation_matrix_deriv(offsets, tp: TrainingPattern,
                             cfg: SystemConfig) -> np.ndarray:
    """Entrywise derivative of the observation matrix: column block k is
    differentiated with respect to offset k (other blocks' derivatives are
    zero there, so the result stacks each block's own derivative)."""
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape != (cfg.n_surfaces,):
        raise ValueError(f"expected {cfg.n_surfaces} offsets, got {offsets.shape}")
    n_el = cfg.n_elements
    blocks = []
    for k, eps in enumerate(offsets):
        slope = steering_matrix_deriv(eps, cfg.pulse) @ tp.pilot
        phi_k = tp.phases[:, k * n_el:(k + 1) * n_el]
        blocks.append(np.kron(phi_k, slope[:, None]))
    return np.concatenate(blocks, axis=1)


def fim(offsets, channel: np.ndarray, tp: TrainingPattern, noise_var: float,
        cfg: SystemConfig) -> np.ndarray:
    """Fisher information over (offsets, Re channel, Im channel).

    Built as (2/noise_var) * Re{G^H G} where G stacks the mean's derivative
    with respect to each real coordinate; explicitly symmetrized so roundoff
    cannot break J = J^T.
    """
    if noise_var <= 0:
        raise ValueError(f"noise_var must be > 0, got {noise_var}")
    nmat = observation_matrix(offsets, tp, cfg)
    nd = observation_matrix_deriv(offsets, tp, cfg)
    he = block_gains(np.asarray(channel), cfg.n_surfaces)
    jc = np.concatenate([nd @ he.T, nmat, 1j * nmat], axis=1)
    j = (2.0 / noise_var) * (jc.conj().T @ jc).real
    return 0.5 * (j + j.T)


def _solve_checked(mat: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystemError(what, float(cond))
    return np.linalg.solve(mat, rhs)


def crlb(offsets, channel: np.ndarray, tp: TrainingPattern, noise_var: float,
         cfg: SystemConfig) -> CrlbResult:
    """Closed-form bounds with the channel profiled out analytically.

    timing_cov = (noise_var/2) * inv(Re{W^H P W}) with W the offset-direction
    mean derivative and P the projector off the observation column space;
    channel_cov = (noise_var/2) * (2Z + V timing_part V^H) with Z the inverse
    training Gram and V its reaction to offset perturbations.
    """
    if noise_var <= 0:
        raise ValueError(f"noise_var must be > 0, got {noise_var}")
    nmat = observation_matrix(offsets, tp, cfg)
    nd = observation_matrix_deriv(offsets, tp, cfg)
    he = block_gains(np.asarray(channel), cfg.n_surfaces)
    w = nd @ he.T  # mean derivative along each offset coordinate

    q, r = np.linalg.qr(nmat)
    cond_n = np.linalg.cond(r)
    if not np.isfinite(cond_n) or cond_n > COND_LIMIT:
        raise SingularSystemError("training observation matrix", float(cond_n))

    pw = w - q @ (q.conj().T @ w)  # project off the channel directions
    core = (w.conj().T @ pw).real
    core = 0.5 * (core + core.T)
    kdim = cfg.n_surfaces
    timing_cov = (noise_var / 2.0) * _solve_checked(
        core, np.eye(kdim), "profiled timing information (unidentifiable configuration)"
    )
    timing_cov = 0.5 * (timing_cov + timing_cov.T)

    # Z = inv(N^H N) via the QR factor; V = Z N^H W
    gram = r.conj().T @ r
    z = _solve_checked(gram, np.eye(gram.shape[0]), "training Gram matrix")
    v = _solve_checked(gram, nmat.conj().T @ w, "training Gram matrix")
    upsilon = (2.0 / noise_var) * timing_cov  # inv(core), reuse the solve
    channel_cov = (noise_var / 2.0) * (2.0 * z + v @ upsilon @ v.conj().T)
    channel_cov = 0.5 * (channel_cov + channel_cov.conj().T)
    return CrlbResult(timing_cov=timing_cov, channel_cov=channel_cov)


def crlb_from_fim(offsets, channel: np.ndarray, tp: TrainingPattern,
                  noise_var: float, cfg: SystemConfig) -> CrlbResult:
    """Brute-force route: invert the full information matrix over the real
    coordinates, then map the (Re, Im) channel blocks back to a complex
    covariance. Must agree with :func:`crlb` to solver accuracy."""
    j = fim(offsets, channel, tp, noise_var, cfg)
    jinv = _solve_checked(j, np.eye(j.shape[0]), "Fisher information matrix")
    kdim = cfg.n_surfaces
    nk = cfg.total_elements
    timing_cov = 0.5 * (jinv[:kdim, :kdim] + jinv[:kdim, :kdim].T)
    rr = jinv[kdim:kdim + nk, kdim:kdim + nk]
    ii = jinv[kdim + nk:, kdim + nk:]
    ri = jinv[kdim:kdim + nk, kdim + nk:]
    channel_cov = rr + ii + 1j * (ri.T - ri)
    channel_cov = 0.5 * (channel_cov + channel_cov.conj().T)
    return CrlbResult(timing_cov=timing_cov, channel_cov=channel_cov)
