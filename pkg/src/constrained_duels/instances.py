"""Instance generators, the car-preference CSV loader and the instance JSON format."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Literal

import numpy as np

from .core_model import validate_preference_matrix
from .environment import DEFAULT_SIGMA, InstanceSpec
from .errors import (
    BadCsv,
    EpsilonTooLarge,
    InconsistentPairCount,
    SchemaMismatch,
    ValidationError,
    ValidationFailure,
)

SCHEMA_VERSION = 1

SYNTHETIC_P = [
    [0.5, 0.55, 0.55, 0.54, 0.61, 0.61],
    [0.45, 0.5, 0.55, 0.55, 0.58, 0.6],
    [0.45, 0.45, 0.5, 0.54, 0.51, 0.56],
    [0.46, 0.45, 0.46, 0.5, 0.54, 0.5],
    [0.39, 0.42, 0.49, 0.46, 0.5, 0.51],
    [0.39, 0.4, 0.44, 0.5, 0.49, 0.5],
]

SYNTHETIC_CONSUMPTION = {
    "a": [0.9, 0.9, 0.1, 0.8, 0.8, 0.8],
    "b": [0.6, 0.5, 0.4, 0.3, 0.2, 0.1],
    "c": [0.0] * 6,
}

CAR_CONSUMPTION = {
    "a": [0.9, 0.9, 0.01, 0.02, 0.7, 0.3, 0.6, 0.7, 0.7, 0.8],
    "b": [0.7, 0.9, 0.9, 0.8, 0.6, 0.1, 0.4, 0.3, 0.5, 0.2],
    "c": [0.0] * 10,
}

Case = Literal["a", "b", "c"]
CondorcetVariant = Literal["general", "total_order", "total_order_prime", "sst"]


def _case(case: str, table: dict) -> list[float]:
    if case not in table:
        raise ValidationError(f"unknown consumption case {case!r}; expected one of {sorted(table)}")
    return table[case]


def synthetic_instance(case: Case = "a", *, noise_sigma: float = DEFAULT_SIGMA,
                       T: int = 2000, B: float = 1000.0) -> InstanceSpec:
    """Six-arm synthetic instance; both slots share the case's consumption vector."""
    cons = _case(case, SYNTHETIC_CONSUMPTION)
    return InstanceSpec(
        validate_preference_matrix(SYNTHETIC_P), cons, cons,
        noise_sigma=noise_sigma, T=T, B=B, name=f"synthetic-{case}",
    )


def load_car_preferences(path: str | Path, K: int = 10) -> np.ndarray:
    """Preference matrix from pairwise win counts.

    Expects header ``i,j,wins_i,wins_j`` with 1-based arm ids and exactly one
    row per unordered pair.  ``P(i, j) = wins_i / (wins_i + wins_j)``; a pair
    with no recorded comparisons gets 1/2.
    """
    P = np.full((K, K), 0.5)
    seen = set()
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["i", "j", "wins_i", "wins_j"]:
                raise BadCsv(f"{path}: header must be i,j,wins_i,wins_j")
            for lineno, row in enumerate(reader, start=2):
                try:
                    i, j = int(row["i"]) - 1, int(row["j"]) - 1
                    wi, wj = float(row["wins_i"]), float(row["wins_j"])
                except (TypeError, ValueError) as exc:
                    raise BadCsv(f"{path}:{lineno}: malformed row {row}") from exc
                if not (0 <= i < K and 0 <= j < K) or i == j:
                    raise ValidationError(f"{path}:{lineno}: arm ids ({i + 1}, {j + 1}) invalid for K={K}")
                if wi < 0 or wj < 0:
                    raise BadCsv(f"{path}:{lineno}: negative counts")
                key = (min(i, j), max(i, j))
                if key in seen:
                    raise InconsistentPairCount(f"{path}:{lineno}: duplicate pair {key[0] + 1},{key[1] + 1}")
                seen.add(key)
                total = wi + wj
                p = 0.5 if total == 0 else wi / total
                P[i, j], P[j, i] = p, 1.0 - p
    except OSError as exc:
        raise BadCsv(f"cannot read {path}: {exc}") from exc
    expected = K * (K - 1) // 2
    if len(seen) != expected:
        raise InconsistentPairCount(f"{path}: {len(seen)} pairs, expected {expected} for K={K}")
    return P


def car_instance(path: str | Path, case: Case = "a", *, noise_sigma: float = DEFAULT_SIGMA,
                 T: int = 5000, B: float = 4000.0) -> InstanceSpec:
    cons = _case(case, CAR_CONSUMPTION)
    P = validate_preference_matrix(load_car_preferences(path, K=len(cons)))
    return InstanceSpec(P, cons, cons, noise_sigma=noise_sigma, T=T, B=B, name=f"car-{case}")


def _positions(K: int, which: int) -> np.ndarray:
    """Rank positions (0 = best) for the Condorcet lower-bound family.

    Arm 0 is the winner.  Among arms 1..K-1, instance ``which`` gives the
    multiple 1 (i.e. the largest Condorcet score) to arm ``which``; the other
    multiples follow cyclically, so instance 1 is the identity.
    """
    pos = np.zeros(K, dtype=int)
    for j in range(1, K):
        pos[j] = (j - which) % (K - 1) + 1
    return pos


def condorcet_lb_family(K: int, epsilon: float, variant: CondorcetVariant = "general",
                        which: int = 1, *, T: int = 2000, B: float = 100.0) -> InstanceSpec:
    """Instance ``which`` (1..K-1) of the Condorcet lower-bound constructions.

    ``general``: winner row uses the permuted multiples of epsilon, everything
    outside the winner's row and column is 1/2.  ``total_order`` (alias
    ``sst``): ``P(i, j) = 1/2 + (pos(j) - pos(i)) * epsilon`` everywhere, an
    arithmetic grading that is totally ordered and strongly transitive.
    ``total_order_prime``: same winner row, with the grading among the other
    arms sign-flipped.  Arm 0 consumes 1 per slot, the rest consume nothing.
    """
    if K < 2:
        raise ValidationError("K must be at least 2")
    if not 1 <= which <= K - 1:
        raise ValidationError(f"which must lie in 1..{K - 1}")
    if epsilon <= 0 or (K - 1) * epsilon >= 0.5:
        raise EpsilonTooLarge(f"need 0 < (K-1)*epsilon < 1/2, got epsilon={epsilon} with K={K}")
    pos = _positions(K, which)
    diff = (pos[None, :] - pos[:, None]).astype(float)
    if variant == "general":
        P = np.full((K, K), 0.5)
        P[0, 1:] = 0.5 + diff[0, 1:] * epsilon
        P[1:, 0] = 0.5 - diff[0, 1:] * epsilon
    elif variant in ("total_order", "sst"):
        P = 0.5 + diff * epsilon
    elif variant == "total_order_prime":
        P = 0.5 - diff * epsilon
        P[0, :] = 0.5 + diff[0, :] * epsilon
        P[:, 0] = 0.5 - diff[0, :] * epsilon
    else:
        raise ValidationError(f"unknown variant {variant!r}")
    u = np.zeros((K, 1))
    u[0, 0] = 1.0
    return InstanceSpec(
        validate_preference_matrix(P), u, u, noise_sigma=0.0, T=T, B=B,
        name=f"condorcet-lb-{variant}-K{K}-I{which}",
    )


def borda_lb_instance(epsilon: float, variant: Literal["lemma_4_4", "lemma_4_5"] = "lemma_4_4",
                      *, T: int = 2000, B: float = 100.0) -> InstanceSpec:
    """Three-arm Borda lower-bound instance; arm 0 is the Borda winner by epsilon / 2."""
    if epsilon <= 0 or 2 * epsilon >= 0.5:
        raise EpsilonTooLarge(f"need 0 < 2*epsilon < 1/2, got {epsilon}")
    e = epsilon
    P = [
        [0.5, 0.5, 0.5 + 2 * e],
        [0.5, 0.5, 0.5 + e],
        [0.5 - 2 * e, 0.5 - e, 0.5],
    ]
    if variant == "lemma_4_4":
        u = [0.0, 0.0, 1.0]
    elif variant == "lemma_4_5":
        u = [0.0, e, 1.0]
    else:
        raise ValidationError(f"unknown variant {variant!r}")
    return InstanceSpec(validate_preference_matrix(P), u, u, noise_sigma=0.0, T=T, B=B,
                        name=f"borda-lb-{variant}")


def instance_to_dict(inst: InstanceSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": inst.name,
        "K": inst.K,
        "d": inst.d,
        "P": inst.P.entries.ravel().tolist(),
        "u_mean": inst.u_mean.tolist(),
        "v_mean": inst.v_mean.tolist(),
        "noise_sigma": inst.noise_sigma,
        "T": inst.T,
        "B": inst.B,
    }


def instance_from_dict(doc: dict) -> InstanceSpec:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatch(f"unsupported schema_version {doc.get('schema_version')!r}")
    try:
        K, d = int(doc["K"]), int(doc["d"])
        flat = np.asarray(doc["P"], dtype=float)
        if flat.size != K * K:
            raise ValidationFailure(f"P has {flat.size} entries, expected {K * K}")
        P = validate_preference_matrix(flat.reshape(K, K))
        u = np.asarray(doc["u_mean"], dtype=float).reshape(K, d)
        v = np.asarray(doc["v_mean"], dtype=float).reshape(K, d)
        return InstanceSpec(P, u, v, noise_sigma=doc["noise_sigma"], T=doc["T"], B=doc["B"],
                            name=doc.get("name", "instance"))
    except ValidationFailure:
        raise
    except (ValidationError, KeyError, TypeError, ValueError) as exc:
        raise ValidationFailure(f"invalid instance file: {exc}") from exc


def save_instance(inst: InstanceSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def load_instance(path: str | Path) -> InstanceSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(doc)


BUILTIN_INSTANCES = {
    "synthetic-a": lambda: synthetic_instance("a"),
    "synthetic-b": lambda: synthetic_instance("b"),
    "synthetic-c": lambda: synthetic_instance("c"),
    "borda-lb-a": lambda: borda_lb_instance(0.1, "lemma_4_4"),
    "borda-lb-b": lambda: borda_lb_instance(0.1, "lemma_4_5"),
}


def resolve_instance(ref: str | Path) -> InstanceSpec:
    """Builtin instance name or path to an instance JSON file."""
    if str(ref) in BUILTIN_INSTANCES:
        return BUILTIN_INSTANCES[str(ref)]()
    path = Path(ref)
    if not path.exists():
        raise ValidationError(f"{ref!r} is neither a builtin instance ({', '.join(BUILTIN_INSTANCES)}) nor a file")
    return load_instance(path)
