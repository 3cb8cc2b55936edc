"""Discrete-time coined quantum walk with position-dependent coins.

The walker lives on a line; the coin qubit picks the direction of the
conditional translation |x,0> -> |x-1,0>, |x,1> -> |x+1,1>.  A schedule is an
ordered list of layers, each either a coin layer (one 2x2 unitary per
position, identity elsewhere) or the translation.  The shipped default
schedule masks a ququart whose amplitudes sit on the odd positions
-3,-1,1,3 (coin |1>) into a hybrid two-qubit state on positions +/-1.

Coin placements for the default schedule: the four-step geometry is pinned by
requiring that the composite map equal the masker column-for-column under the
position identification +1 -> |0>_A, -1 -> |1>_A (coin = qubit B), including
the overall -i phase.  The closing coin layer {Z at -1, XZ at +1} after the
last translation is what makes the identity exact under this translation
convention; it is the walk-level counterpart of the 0-degree half-wave plates
in the optical realization.

Schedules are plain data and can be saved to / loaded from a JSON document
(see schedule_schema.json); matrices are stored as 8 reals (row-major,
re/im interleaved) and round-trip bit-exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .masker import masker_matrix
from .qcore import (
    EPS_EXACT,
    PAULI_X,
    PAULI_Z,
    StateVector,
    require_unitary,
)

COIN_X = PAULI_X
COIN_Z = PAULI_Z
COIN_C1 = np.array([[1j, 1], [-1j, 1]], dtype=complex) / np.sqrt(2)
COIN_C2 = np.array([[1, 1j], [-1, 1j]], dtype=complex) / np.sqrt(2)
COIN_XZ = PAULI_X @ PAULI_Z


class ExtractionError(ValueError):
    """Walk state has support outside the extractable positions."""


@dataclass(frozen=True, eq=False)
class WalkState:
    """Sparse walker-coin amplitudes: {(position, coin): amplitude}."""

    amplitudes: Mapping[tuple[int, int], complex]

    def __init__(self, amplitudes: Mapping[tuple[int, int], complex], *, _skip_check: bool = False):
        amps = {}
        for (x, c), a in amplitudes.items():
            if c not in (0, 1):
                raise ValueError(f"coin index must be 0 or 1, got {c}")
            if a != 0:
                amps[(int(x), int(c))] = complex(a)
        if not _skip_check:
            norm = np.sqrt(sum(abs(a) ** 2 for a in amps.values()))
            if abs(norm - 1.0) > EPS_EXACT:
                raise ValueError(f"walk state norm {norm} deviates from 1 by more than {EPS_EXACT}")
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values())))

    def positions(self) -> set[int]:
        return {x for (x, _c) in self.amplitudes}

    def amplitude(self, position: int, coin: int) -> complex:
        return self.amplitudes.get((position, coin), 0j)


@dataclass(frozen=True, eq=False)
class CoinLayer:
    """Position-dependent coin operators; unspecified positions get identity."""

    coins: Mapping[int, np.ndarray]

    def __init__(self, coins: Mapping[int, np.ndarray]):
        checked = {}
        for x, u in coins.items():
            arr = require_unitary(u, what=f"coin at position {x}")
            if arr.shape != (2, 2):
                raise ValueError(f"coin at position {x} must be 2x2")
            arr = arr.copy()
            arr.setflags(write=False)
            checked[int(x)] = arr
        object.__setattr__(self, "coins", checked)


@dataclass(frozen=True)
class Translate:
    """Marker layer for the conditional translation."""


TRANSLATE = Translate()

Layer = Union[CoinLayer, Translate]


@dataclass(frozen=True)
class WalkSchedule:
    name: str
    layers: tuple[Layer, ...]

    def __post_init__(self):
        for layer in self.layers:
            if not isinstance(layer, (CoinLayer, Translate)):
                raise TypeError(f"layer must be CoinLayer or Translate, got {type(layer)}")
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def steps(self) -> int:
        """Number of translation layers."""
        return sum(1 for layer in self.layers if isinstance(layer, Translate))


def translate(state: WalkState) -> WalkState:
    """|x,0> -> |x-1,0>, |x,1> -> |x+1,1>; exactly norm preserving."""
    out: dict[tuple[int, int], complex] = {}
    for (x, c), a in state.amplitudes.items():
        nx = x - 1 if c == 0 else x + 1
        out[(nx, c)] = out.get((nx, c), 0j) + a
    return WalkState(out, _skip_check=True)


def apply_coin_layer(state: WalkState, layer: CoinLayer) -> WalkState:
    """Multiply the coin spinor at each position by that position's coin."""
    out: dict[tuple[int, int], complex] = {}
    for (x, c), a in state.amplitudes.items():
        u = layer.coins.get(x)
        if u is None:
            out[(x, c)] = out.get((x, c), 0j) + a
            continue
        for c2 in (0, 1):
            amp = u[c2, c] * a
            if amp != 0:
                out[(x, c2)] = out.get((x, c2), 0j) + amp
    return WalkState(out, _skip_check=True)


def run_schedule(state: WalkState, schedule: WalkSchedule) -> WalkState:
    for layer in schedule.layers:
        state = translate(state) if isinstance(layer, Translate) else apply_coin_layer(state, layer)
    return state


def encode_input(a) -> WalkState:
    """Ququart amplitudes onto the odd positions, coin |1>:
    a0|-3,1> + a1|-1,1> + a2|1,1> + a3|3,1>."""
    vec = np.asarray(a, dtype=complex)
    if vec.shape != (4,):
        raise ValueError("input must have 4 amplitudes")
    if abs(np.linalg.norm(vec) - 1.0) > EPS_EXACT:
        raise ValueError("input amplitudes must be normalized")
    return WalkState({(-3, 1): vec[0], (-1, 1): vec[1], (1, 1): vec[2], (3, 1): vec[3]})


def masking_schedule() -> WalkSchedule:
    """Default schedule realizing the ququart masker on positions -3..3."""
    return WalkSchedule(
        name="mask-real-ququart",
        layers=(
            CoinLayer({-1: COIN_X, 3: COIN_X}),
            TRANSLATE,
            CoinLayer({-2: COIN_C2, 2: COIN_C1}),
            TRANSLATE,
            CoinLayer({-3: COIN_X, 3: COIN_X}),
            TRANSLATE,
            TRANSLATE,
            CoinLayer({-1: COIN_Z, 1: COIN_XZ}),
        ),
    )


def extract_two_qubit(state: WalkState, *, tol: float = EPS_EXACT) -> StateVector:
    """Read positions +/-1 as qubit A (+1 -> |0>, -1 -> |1>); coin is qubit B."""
    stray = max(
        (abs(a) for (x, _c), a in state.amplitudes.items() if x not in (1, -1)),
        default=0.0,
    )
    if stray > tol:
        raise ExtractionError(f"support outside positions +/-1 with amplitude {stray:.3e}")
    vec = np.zeros(4, dtype=complex)
    for (x, c), a in state.amplitudes.items():
        if x in (1, -1):
            qa = 0 if x == 1 else 1
            vec[2 * qa + c] = a
    return StateVector.normalized(vec)


def run_masking_walk(a) -> StateVector:
    """encode -> default schedule -> extract, as a two-qubit state."""
    return extract_two_qubit(run_schedule(encode_input(a), masking_schedule()))


def masked_state_reference(a) -> StateVector:
    """Direct masker image of the same input (oracle for the walk)."""
    return StateVector(masker_matrix().matrix @ np.asarray(a, dtype=complex))


# ---------------------------------------------------------------------------
# Schedule (de)serialization.  Field names are fixed by schedule_schema.json.

def _matrix_to_reals(u: np.ndarray) -> list[float]:
    flat = np.asarray(u, dtype=complex).reshape(-1)
    out: list[float] = []
    for z in flat:
        out.extend((float(z.real), float(z.imag)))
    return out


def _matrix_from_reals(values) -> np.ndarray:
    vals = list(values)
    if len(vals) != 8:
        raise ValueError(f"coin matrix needs 8 reals, got {len(vals)}")
    z = [complex(vals[2 * i], vals[2 * i + 1]) for i in range(4)]
    return np.array([[z[0], z[1]], [z[2], z[3]]], dtype=complex)


def schedule_to_dict(schedule: WalkSchedule) -> dict:
    layers = []
    for layer in schedule.layers:
        if isinstance(layer, Translate):
            layers.append({"type": "translate"})
        else:
            coins = [
                {"position": x, "matrix": _matrix_to_reals(u)}
                for x, u in sorted(layer.coins.items())
            ]
            layers.append({"type": "coins", "coins": coins})
    return {"name": schedule.name, "layers": layers}


def schedule_from_dict(doc: dict) -> WalkSchedule:
    if not isinstance(doc, dict) or "layers" not in doc:
        raise ValueError("schedule document must be an object with a 'layers' list")
    layers: list[Layer] = []
    for i, entry in enumerate(doc["layers"]):
        kind = entry.get("type")
        if kind == "translate":
            layers.append(TRANSLATE)
        elif kind == "coins":
            coins = {int(c["position"]): _matrix_from_reals(c["matrix"]) for c in entry["coins"]}
            layers.append(CoinLayer(coins))
        else:
            raise ValueError(f"layer {i}: unknown type {kind!r}")
    return WalkSchedule(name=str(doc.get("name", "unnamed")), layers=tuple(layers))


def save_schedule(schedule: WalkSchedule, path) -> None:
    Path(path).write_text(json.dumps(schedule_to_dict(schedule), indent=2) + "\n")


def load_schedule(path) -> WalkSchedule:
    return schedule_from_dict(json.loads(Path(path).read_text()))
