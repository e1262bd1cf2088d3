"""Preference matrices, score functions and structural checks.

Arms are 0-indexed everywhere inside the library.  A preference matrix
``P`` holds ``P[i, j]``, the probability that arm ``i`` wins a duel against
arm ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import (
    BadDiagonal,
    NoCondorcetWinner,
    NotSkewComplement,
    OrderNotCertifying,
    OutOfRange,
    ValidationError,
)

MATRIX_TOL = 1e-12
SST_TOL = 1e-12

ScoreKind = Literal["borda", "shifted_borda", "condorcet"]


@dataclass(frozen=True)
class PreferenceMatrix:
    """Validated K x K win-probability matrix (read-only)."""

    entries: np.ndarray

    @property
    def K(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]

    def tolist(self) -> list[list[float]]:
        return self.entries.tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PreferenceMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())


@dataclass(frozen=True)
class ScoreVector:
    values: np.ndarray
    kind: ScoreKind

    @property
    def winner(self) -> int:
        # np.argmax returns the first maximal index: lowest index wins ties.
        return int(np.argmax(self.values))

    def __len__(self) -> int:
        return len(self.values)


TotalOrder = tuple[int, ...]


def validate_preference_matrix(raw: Sequence[Sequence[float]] | np.ndarray) -> PreferenceMatrix:
    """Check shape, range, diagonal and skew-complement structure of ``raw``."""
    arr = np.array(raw, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"preference matrix must be square, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValidationError("preference matrix needs at least 2 arms")
    if not np.all(np.isfinite(arr)):
        raise OutOfRange("preference matrix contains non-finite entries")
    if arr.min() < -MATRIX_TOL or arr.max() > 1 + MATRIX_TOL:
        raise OutOfRange("preference matrix entries must lie in [0, 1]")
    diag_err = np.abs(np.diag(arr) - 0.5).max()
    if diag_err > MATRIX_TOL:
        raise BadDiagonal(f"diagonal entries must equal 1/2 (max deviation {diag_err:.3g})")
    skew = np.abs(arr + arr.T - 1.0)
    if skew.max() > MATRIX_TOL:
        i, j = np.unravel_index(int(np.argmax(skew)), skew.shape)
        raise NotSkewComplement(
            f"P({i},{j}) + P({j},{i}) = {arr[i, j] + arr[j, i]:.12g}, expected 1"
        )
    arr = np.clip(arr, 0.0, 1.0)
    arr.setflags(write=False)
    return PreferenceMatrix(arr)


def borda_scores(P: PreferenceMatrix) -> ScoreVector:
    """Row means excluding the diagonal."""
    K = P.K
    vals = (P.entries.sum(axis=1) - 0.5) / (K - 1)
    return ScoreVector(vals, "borda")


def shifted_borda_scores(P: PreferenceMatrix) -> ScoreVector:
    """Row means including the diagonal P(i, i) = 1/2."""
    return ScoreVector(P.entries.mean(axis=1), "shifted_borda")


def borda_winner(P: PreferenceMatrix) -> int:
    return borda_scores(P).winner


def condorcet_winner(P: PreferenceMatrix) -> Optional[int]:
    off = P.entries > 0.5
    np.fill_diagonal(off, True)
    winners = np.flatnonzero(off.all(axis=1))
    return int(winners[0]) if winners.size else None


def condorcet_scores(P: PreferenceMatrix) -> ScoreVector:
    """``c(x) = P(x, winner)``; the winner itself scores 1/2."""
    w = condorcet_winner(P)
    if w is None:
        raise NoCondorcetWinner("preference matrix has no Condorcet winner")
    return ScoreVector(P.entries[:, w].copy(), "condorcet")


def scores(P: PreferenceMatrix, kind: ScoreKind) -> ScoreVector:
    if kind == "borda":
        return borda_scores(P)
    if kind == "shifted_borda":
        return shifted_borda_scores(P)
    if kind == "condorcet":
        return condorcet_scores(P)
    raise ValueError(f"unknown score kind {kind!r}")


def _certifies(P: PreferenceMatrix, order: Sequence[int]) -> bool:
    M = P.entries
    return all(M[order[a], order[b]] > 0.5 for a, b in combinations(range(len(order)), 2))


def check_total_ordering(P: PreferenceMatrix) -> Optional[TotalOrder]:
    """Return a best-first order with P(a, b) > 1/2 whenever a precedes b, if any.

    A strict total order exists iff the strict-win tournament is transitive,
    in which case sorting arms by their number of strict wins recovers it.
    """
    M = P.entries
    wins = (M > 0.5).sum(axis=1)
    order = tuple(int(i) for i in sorted(range(P.K), key=lambda i: (-wins[i], i)))
    return order if _certifies(P, order) else None


def check_sst(P: PreferenceMatrix, order: Sequence[int]) -> bool:
    """Strong stochastic transitivity along a certifying total order."""
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(P.K)):
        raise OrderNotCertifying(f"{order} is not a permutation of {P.K} arms")
    if not _certifies(P, order):
        raise OrderNotCertifying(f"{order} does not certify a total ordering")
    M = P.entries
    for a, b, c in combinations(range(P.K), 3):
        i, j, k = order[a], order[b], order[c]
        if M[i, k] < max(M[i, j], M[j, k]) - SST_TOL:
            return False
    return True
