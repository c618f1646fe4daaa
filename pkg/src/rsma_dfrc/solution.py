"""Transmission modes, precoder containers and the stacked-variable layout.

Precoder column order is fixed: ``[p_c, p_1, ..., p_K, p_r]``.  The stacked
vector used by ADMM is ``[c (K real), vec(P)]`` with ``vec`` stacking columns.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MultipleAccess",
    "RadarSequence",
    "ModeConfig",
    "ALL_MODES",
    "PrecoderSolution",
    "stack",
    "unstack",
    "stacked_length",
]


class MultipleAccess(enum.Enum):
    RSMA = "rsma"
    SDMA = "sdma"


class RadarSequence(enum.Enum):
    DISABLED = "no-rs"
    WITH_SIC = "rs-sic"
    WITHOUT_SIC = "rs-nosic"


@dataclass(frozen=True)
class ModeConfig:
    multiple_access: MultipleAccess = MultipleAccess.RSMA
    radar_sequence: RadarSequence = RadarSequence.DISABLED

    @property
    def delta_c(self):
        """1 when the radar sequence is treated as interference at the users."""
        return 1 if self.radar_sequence is RadarSequence.WITHOUT_SIC else 0

    @property
    def common_enabled(self):
        return self.multiple_access is MultipleAccess.RSMA

    @property
    def radar_enabled(self):
        return self.radar_sequence is not RadarSequence.DISABLED

    @property
    def label(self):
        return f"{self.multiple_access.value}x{self.radar_sequence.value}"

    @classmethod
    def from_label(cls, label):
        """Parse labels such as ``rsmaxrs-sic`` (also accepts ``rsma:rs-sic``)."""
        text = label.strip().lower().replace(":", "x").replace("/", "x")
        for ma in MultipleAccess:
            prefix = ma.value + "x"
            if text.startswith(prefix):
                try:
                    return cls(ma, RadarSequence(text[len(prefix):]))
                except ValueError:
                    break
        raise ValueError(f"unknown mode label {label!r}")

    def active_columns(self, k_users):
        """Indices of precoder columns that are free (not pinned to zero)."""
        cols = []
        if self.common_enabled:
            cols.append(0)
        cols.extend(range(1, k_users + 1))
        if self.radar_enabled:
            cols.append(k_users + 1)
        return cols

    def __str__(self):
        return self.label


ALL_MODES = tuple(ModeConfig(ma, rs) for ma in MultipleAccess for rs in RadarSequence)


@dataclass
class PrecoderSolution:
    """Precoder matrix ``P`` (n_tx x (K+2)) and common-rate split ``c`` (bits)."""

    precoders: np.ndarray
    common_split: np.ndarray

    def __post_init__(self):
        self.precoders = np.asarray(self.precoders, dtype=complex)
        self.common_split = np.asarray(self.common_split, dtype=float)
        n_cols = self.precoders.shape[1]
        if self.common_split.shape != (n_cols - 2,):
            raise ValueError("common split must have one entry per user")
        if np.any(self.common_split < 0):
            raise ValueError("common split must be non-negative")

    @classmethod
    def from_parts(cls, p_common, p_private, p_radar, common_split=None):
        p_private = np.atleast_2d(np.asarray(p_private, dtype=complex))
        # p_private given as K vectors of length n_tx
        P = np.column_stack([np.asarray(p_common, dtype=complex), p_private.T,
                             np.asarray(p_radar, dtype=complex)])
        k = p_private.shape[0]
        c = np.zeros(k) if common_split is None else common_split
        return cls(P, c)

    @classmethod
    def zeros(cls, n_tx, k_users):
        return cls(np.zeros((n_tx, k_users + 2), complex), np.zeros(k_users))

    @property
    def n_tx(self):
        return self.precoders.shape[0]

    @property
    def k_users(self):
        return self.precoders.shape[1] - 2

    @property
    def p_common(self):
        return self.precoders[:, 0]

    @property
    def p_private(self):
        """Private precoders as columns (n_tx x K)."""
        return self.precoders[:, 1:-1]

    @property
    def p_radar(self):
        return self.precoders[:, -1]

    def antenna_powers(self):
        return np.sum(np.abs(self.precoders) ** 2, axis=1)

    def pinned(self, mode):
        """Copy with the columns and split that ``mode`` switches off set to zero."""
        P = self.precoders.copy()
        c = self.common_split.copy()
        if not mode.common_enabled:
            P[:, 0] = 0
            c[:] = 0
        if not mode.radar_enabled:
            P[:, -1] = 0
        return PrecoderSolution(P, c)


def stacked_length(k_users, n_tx):
    return k_users + (k_users + 2) * n_tx


def stack(sol):
    """``[c; vec(P)]`` as a complex vector (the first K entries are real)."""
    return np.concatenate([sol.common_split.astype(complex),
                           sol.precoders.reshape(-1, order="F")])


def unstack(vec, k_users, n_tx):
    vec = np.asarray(vec)
    if vec.shape != (stacked_length(k_users, n_tx),):
        raise ValueError(f"stacked vector has length {vec.shape}, expected "
                         f"{stacked_length(k_users, n_tx)}")
    c = np.real(vec[:k_users]).astype(float)
    P = vec[k_users:].reshape((n_tx, k_users + 2), order="F")
    return PrecoderSolution(P.astype(complex), np.maximum(c, 0.0))
