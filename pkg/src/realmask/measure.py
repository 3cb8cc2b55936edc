"""Finite-shot measurement simulation.

Counting model: each Pauli-pair (or single-qubit) setting is measured a fixed
number of times, drawn as one multinomial over the Born probabilities.
Poisson fluctuation enters only through the resampling step used for error
bars, mirroring the analysis pipeline rather than a physical source model.

Reproducibility: all randomness flows through numpy's counter-based Philox
generator keyed by a 64-bit sub-seed derived as
SHA-256(master_seed, module_tag, trial_index...), so results are bit-for-bit
identical across runs and independent of scheduling when trials run
concurrently.
"""
from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .qcore import PAULIS, DensityMatrix, kron

OUTCOMES_PAIR = ("++", "+-", "-+", "--")
OUTCOMES_SINGLE = ("+", "-")


def derive_seed(master_seed: int, *parts) -> int:
    """64-bit stream-split sub-seed: SHA-256 over the master seed and tags."""
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for p in parts:
        h.update(b"/")
        h.update(str(p).encode())
    return int.from_bytes(h.digest()[:8], "little")


def generator(seed: int) -> np.random.Generator:
    """Philox generator keyed by `seed` (counter-based, platform independent)."""
    return np.random.Generator(np.random.Philox(key=seed & (2**64 - 1)))


@dataclass(frozen=True)
class PauliSetting:
    first: str
    second: str

    def __post_init__(self):
        for axis in (self.first, self.second):
            if axis not in ("X", "Y", "Z"):
                raise ValueError(f"Pauli axis must be X, Y or Z, got {axis!r}")

    @property
    def label(self) -> str:
        return self.first + self.second

    def matrix(self) -> np.ndarray:
        return kron(PAULIS[self.first], PAULIS[self.second])


@dataclass(frozen=True)
class NoiseSpec:
    """Single-parameter channel emulating experimental imperfection."""

    kind: str = "none"  # "none" | "depolarizing"
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "depolarizing"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise probability {self.p} outside [0, 1]")

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        if self.kind == "none" or self.p == 0.0:
            return rho
        return apply_depolarizing(rho, self.p)


@dataclass(frozen=True)
class CountsTable:
    """Outcome counts for one measurement setting, with seed provenance."""

    setting: str
    counts: tuple[int, ...]
    shots: int
    seed: int

    def __post_init__(self):
        if len(self.counts) not in (2, 4):
            raise ValueError("counts must have 2 (single-qubit) or 4 (pair) entries")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative")
        if sum(self.counts) != self.shots:
            raise ValueError(f"counts sum {sum(self.counts)} != shots {self.shots}")
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    def outcome_labels(self) -> tuple[str, ...]:
        return OUTCOMES_PAIR if len(self.counts) == 4 else OUTCOMES_SINGLE


def _rho_mat(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def outcome_probs(rho, setting: PauliSetting) -> np.ndarray:
    """Joint (+1,+1), (+1,-1), (-1,+1), (-1,-1) eigenvalue probabilities."""
    arr = _rho_mat(rho)
    if arr.shape != (4, 4):
        raise ValueError("outcome_probs expects a two-qubit state")
    p1 = PAULIS[setting.first]
    p2 = PAULIS[setting.second]
    eye = np.eye(2)
    probs = []
    for s1 in (+1, -1):
        proj1 = (eye + s1 * p1) / 2
        for s2 in (+1, -1):
            proj2 = (eye + s2 * p2) / 2
            probs.append(np.trace(arr @ kron(proj1, proj2)).real)
    out = np.array(probs)
    if abs(out.sum() - 1.0) > 1e-9:
        raise ValueError(f"outcome probabilities sum to {out.sum()}")
    return out


def single_qubit_probs(rho, axis: str) -> np.ndarray:
    """(+1, -1) probabilities for one Pauli measurement on a qubit."""
    arr = _rho_mat(rho)
    if arr.shape != (2, 2):
        raise ValueError("single_qubit_probs expects a qubit state")
    pauli = PAULIS[axis]
    plus = np.trace(arr @ (np.eye(2) + pauli) / 2).real
    return np.array([plus, 1.0 - plus])


def pauli_correlations(rho) -> np.ndarray:
    """Exact 3x3 correlation matrix <sigma_j x sigma_k>, rows/cols x, y, z."""
    arr = _rho_mat(rho)
    axes = ("X", "Y", "Z")
    return np.array(
        [[np.trace(arr @ PauliSetting(j, k).matrix()).real for k in axes] for j in axes]
    )


def sample_counts(probs, shots: int, seed: int, setting: str = "") -> CountsTable:
    """One multinomial draw over the outcome distribution; deterministic per seed."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or len(p) not in (2, 4):
        raise ValueError("probs must have 2 or 4 entries")
    if np.any(p < -1e-12):
        raise ValueError(f"negative probability in {p}")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()}, expected 1")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.clip(p, 0.0, None)
    counts = generator(seed).multinomial(shots, p / p.sum())
    return CountsTable(setting=setting, counts=tuple(int(c) for c in counts), shots=int(shots), seed=int(seed))


def correlator_estimate(table: CountsTable) -> float:
    """(n++ - n+- - n-+ + n--)/shots for a pair table."""
    if len(table.counts) != 4:
        raise ValueError("correlator needs a four-outcome table")
    if table.shots <= 0:
        raise ValueError("shots must be positive")
    npp, npm, nmp, nmm = table.counts
    return (npp - npm - nmp + nmm) / table.shots


def apply_depolarizing(rho, p: float) -> DensityMatrix:
    """(1-p) rho + p 1/d."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p = {p} outside [0, 1]")
    arr = _rho_mat(rho)
    d = arr.shape[0]
    return DensityMatrix((1.0 - p) * arr + p * np.eye(d) / d)


def poisson_resample(table: CountsTable, seed: int) -> CountsTable:
    """Replace each count by a Poisson draw with that mean; shots follows."""
    rng = generator(seed)
    new_counts = tuple(int(rng.poisson(c)) for c in table.counts)
    return replace(table, counts=new_counts, shots=sum(new_counts), seed=int(seed))


# ---------------------------------------------------------------------------
# CSV serialization: rows `setting,outcome,count,shots,seed`, one per outcome.

CSV_HEADER = ("setting", "outcome", "count", "shots", "seed")


def tables_to_csv(tables: Sequence[CountsTable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for t in tables:
        for label, count in zip(t.outcome_labels(), t.counts):
            writer.writerow([t.setting, label, count, t.shots, t.seed])
    return buf.getvalue()


def tables_from_csv(text: str) -> list[CountsTable]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ValueError(f"expected header {','.join(CSV_HEADER)}")
    grouped: dict[tuple[str, int, int], dict[str, int]] = {}
    order: list[tuple[str, int, int]] = []
    for row in reader:
        if not row:
            continue
        setting, outcome, count, shots, seed = row
        key = (setting, int(shots), int(seed))
        if key not in grouped:
            grouped[key] = {}
            order.append(key)
        grouped[key][outcome] = int(count)
    tables = []
    for key in order:
        setting, shots, seed = key
        by_outcome = grouped[key]
        labels = OUTCOMES_PAIR if len(by_outcome) == 4 else OUTCOMES_SINGLE
        counts = tuple(by_outcome[label] for label in labels)
        tables.append(CountsTable(setting=setting, counts=counts, shots=shots, seed=seed))
    return tables
