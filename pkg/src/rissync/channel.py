"""Per-surface channel generation, cascading, and block gain structures.

Each reflecting surface k has an inbound vector (source to surface) and an
outbound vector (surface to destination). What the receiver can identify is
only their elementwise product after reflection, the cascaded channel; this
module generates the raw vectors (Rayleigh or clustered mmWave), forms the
cascaded vector, and packs the per-surface segments into the block-diagonal
gain matrix used throughout estimation and design.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig

__all__ = [
    "ChannelSet",
    "MmWaveParams",
    "gen_rayleigh",
    "array_response",
    "gen_mmwave",
    "cascade",
    "gain_matrix",
]


@dataclass(frozen=True)
class ChannelSet:
    """One realization of the physical links for all K surfaces.

    ``inbound[k]`` is the length-N source→surface_k vector and ``outbound[k]``
    the surface_k→destination vector.
    """

    inbound: np.ndarray
    outbound: np.ndarray

    def __post_init__(self):
        inb, outb = np.asarray(self.inbound), np.asarray(self.outbound)
        if inb.ndim != 2 or inb.shape != outb.shape:
            raise ValueError(
                f"inbound/outbound must be matching (K, N) arrays, got "
                f"{inb.shape} and {outb.shape}"
            )
        if not (np.all(np.isfinite(inb)) and np.all(np.isfinite(outb))):
            raise ValueError("channel entries must be finite")

    @property
    def n_surfaces(self) -> int:
        return self.inbound.shape[0]

    @property
    def n_elements(self) -> int:
        return self.inbound.shape[1]


@dataclass(frozen=True)
class MmWaveParams:
    """Clustered-propagation parameters for the mmWave generator.

    The outbound side combines ``n_paths`` reflected paths per surface; the
    inbound side is a single line-of-sight path. ``n_x`` is the horizontal
    element count of the rectangular surface (the vertical count follows from
    N), and ``spacing_phase`` is the wavenumber-times-spacing product, pi for
    half-wavelength spacing. Angles and gains may be pinned explicitly (shape
    (K, n_paths) per outbound field, (K,) per inbound field); anything left
    as None is drawn from the seed: azimuth uniform on [0, 2pi), elevation
    uniform on [0, pi), gains standard complex Gaussian.
    """

    n_paths: int = 10
    n_x: int = 4
    spacing_phase: float = np.pi
    out_azimuth: np.ndarray | None = None
    out_elevation: np.ndarray | None = None
    out_gains: np.ndarray | None = None
    in_azimuth: np.ndarray | None = None
    in_elevation: np.ndarray | None = None
    in_gains: np.ndarray | None = None

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.n_x < 1:
            raise ValueError(f"n_x must be >= 1, got {self.n_x}")


def gen_rayleigh(cfg: SystemConfig, seed) -> ChannelSet:
    """Draw iid unit-variance complex Gaussian links for every surface element."""
    rng = np.random.default_rng(seed)
    shape = (cfg.n_surfaces, cfg.n_elements)
    inbound = _std_complex(rng, shape)
    outbound = _std_complex(rng, shape)
    return ChannelSet(inbound=inbound, outbound=outbound)


def _std_complex(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def array_response(azimuth: float, elevation: float, n_elements: int,
                   n_x: int = 4, spacing_phase: float = np.pi) -> np.ndarray:
    """Unit-norm response of an N-element rectangular surface.

    Element (m, n) with 0 <= m < n_x sits at flat index n*n_x + m and
    contributes phase spacing_phase*(m*sin(azimuth)*sin(elevation)
    + n*cos(elevation)); every entry has magnitude 1/sqrt(N).
    """
    if n_elements % n_x:
        raise ValueError(f"n_elements={n_elements} not divisible by n_x={n_x}")
    n_y = n_elements // n_x
    m = np.arange(n_x) * np.sin(azimuth) * np.sin(elevation)
    n = np.arange(n_y) * np.cos(elevation)
    phase = spacing_phase * np.add.outer(n, m).ravel()
    return np.exp(1j * phase) / np.sqrt(n_elements)


def gen_mmwave(cfg: SystemConfig, params: MmWaveParams, seed) -> ChannelSet:
    """Draw clustered mmWave links: multi-path outbound, line-of-sight inbound.

    Outbound vector k is sqrt(N/n_paths) times the gain-conjugate-weighted sum
    of path responses; inbound vector k is sqrt(N) times a single gain times
    its response.
    """
    rng = np.random.default_rng(seed)
    k_surf, n_el = cfg.n_surfaces, cfg.n_elements
    n_p = params.n_paths

    def draw(given, shape, kind):
        if given is not None:
            arr = np.asarray(given)
            if arr.shape != shape:
                raise ValueError(f"expected shape {shape}, got {arr.shape}")
            return arr
        if kind == "az":
            return rng.uniform(0.0, 2.0 * np.pi, shape)
        if kind == "el":
            return rng.uniform(0.0, np.pi, shape)
        return _std_complex(rng, shape)

    out_az = draw(params.out_azimuth, (k_surf, n_p), "az")
    out_el = draw(params.out_elevation, (k_surf, n_p), "el")
    out_g = draw(params.out_gains, (k_surf, n_p), "gain")
    in_az = draw(params.in_azimuth, (k_surf,), "az")
    in_el = draw(params.in_elevation, (k_surf,), "el")
    in_g = draw(params.in_gains, (k_surf,), "gain")

    outbound = np.zeros((k_surf, n_el), dtype=complex)
    inbound = np.zeros((k_surf, n_el), dtype=complex)
    for k in range(k_surf):
        paths = sum(
            np.conj(out_g[k, p]) * array_response(
                out_az[k, p], out_el[k, p], n_el, params.n_x, params.spacing_phase)
            for p in range(n_p)
        )
        outbound[k] = np.sqrt(n_el / n_p) * paths
        inbound[k] = np.sqrt(n_el) * in_g[k] * array_response(
            in_az[k], in_el[k], n_el, params.n_x, params.spacing_phase)
    return ChannelSet(inbound=inbound, outbound=outbound)


def cascade(ch: ChannelSet) -> np.ndarray:
    """Stack the per-surface reflected products conj(outbound)*inbound into one
    length-N*K vector (surface-major: entry (k*N + l) belongs to surface k)."""
    return (np.conj(ch.outbound) * ch.inbound).reshape(-1)


def block_gains(cascaded: np.ndarray, n_surfaces: int) -> np.ndarray:
    """Arrange a cascaded vector as a block-diagonal (K, N*K) matrix, row k
    carrying surface k's segment; multiplying a stacked reflection vector
    gives per-surface scalar gains."""
    cascaded = np.asarray(cascaded)
    total = cascaded.shape[0]
    if cascaded.ndim != 1 or total % n_surfaces:
        raise ValueError(
            f"cascaded vector of length {cascaded.shape} does not split into "
            f"{n_surfaces} equal segments"
        )
    n_el = total // n_surfaces
    out = np.zeros((n_surfaces, total), dtype=complex)
    for k in range(n_surfaces):
        out[k, k * n_el:(k + 1) * n_el] = cascaded[k * n_el:(k + 1) * n_el]
    return out


def gain_matrix(ch: ChannelSet) -> np.ndarray:
    """Block-diagonal (K, N*K) gain structure of a channel realization."""
    return block_gains(cascade(ch), ch.n_surfaces)
