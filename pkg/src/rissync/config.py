"""Scenario configuration objects shared across the package."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class PulseConfig:
    """Pulse-shaping and sampling-grid parameters.

    All times are dimensionless multiples of the symbol period. ``period`` is
    kept explicit for readability but the library fixes it to 1.0.

    Attributes
    ----------
    rolloff : excess-bandwidth factor of the root-raised-cosine pulse, in (0, 1].
    span : one-sided tail length of the truncated pulse, in symbols.
    oversampling : samples taken per symbol period.
    obs_len : number of symbols in one observation block.
    """

    rolloff: float = 0.22
    span: int = 4
    oversampling: int = 2
    obs_len: int = 12
    period: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in (0, 1], got {self.rolloff}")
        if self.span < 1:
            raise ValueError(f"span must be a positive integer, got {self.span}")
        if self.oversampling < 1:
            raise ValueError(f"oversampling must be >= 1, got {self.oversampling}")
        if self.obs_len < 1:
            raise ValueError(f"obs_len must be >= 1, got {self.obs_len}")
        if self.period != 1.0:
            raise ValueError("the symbol period is fixed to 1.0")

    @property
    def seq_len(self) -> int:
        """Symbols spanned by one observation block including both pulse tails."""
        return 2 * self.span + self.obs_len

    @property
    def n_samples(self) -> int:
        """Oversampled rows of one observation block."""
        return self.obs_len * self.oversampling

    @property
    def sample_step(self) -> float:
        return self.period / self.oversampling


@dataclass(frozen=True)
class SystemConfig:
    """Link-level scenario constants: surface count, element count, pulse grid.

    ``n_patterns`` is the number of training sub-phases; it defaults to the
    total element count, which is the smallest value that makes the training
    system identifiable.
    """

    n_surfaces: int
    n_elements: int
    pulse: PulseConfig = field(default_factory=PulseConfig)
    n_patterns: int | None = None

    def __post_init__(self):
        if self.n_surfaces < 1:
            raise ValueError(f"n_surfaces must be >= 1, got {self.n_surfaces}")
        if self.n_elements < 1:
            raise ValueError(f"n_elements must be >= 1, got {self.n_elements}")
        if self.n_patterns is not None and self.n_patterns < self.total_elements:
            raise ValueError(
                f"n_patterns={self.n_patterns} would leave the training system "
                f"rank deficient; need at least {self.total_elements}"
            )

    @property
    def total_elements(self) -> int:
        return self.n_surfaces * self.n_elements

    @property
    def patterns(self) -> int:
        return self.n_patterns if self.n_patterns is not None else self.total_elements
